mod common;

use std::collections::BTreeMap;

use krf_core::flow::{fiber_w_coefficients, soliton_profile_solve, SolitonOptions};
use krf_core::series::{
    blowdown, flow_expand, flow_rhs, gradient_identity_residual, gradient_potential, int, rat, rescale,
    soliton_expand, soliton_residual_at, Rational,
};
use krf_core::BaseGeometry;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

use common::{brute_force_soliton, soliton_defect};

#[test]
fn second_coefficient_golden() {
    // (n, λ) = (2, 3): a₁ = −1/2 and a₂ = −1/6
    let oracle = brute_force_soliton(2, &int(3), 2);
    assert_eq!(oracle[1], rat(-1, 2));
    assert_eq!(oracle[2], rat(-1, 6));
    assert_eq!(soliton_expand(2, &int(3), 2).unwrap().constants(), oracle);
}

#[test]
fn truncations_solve_the_equation_to_their_order() {
    for (n, l) in [(2usize, int(3)), (3, rat(5, 2)), (4, rat(-3, 4))] {
        let a = soliton_expand(n, &l, 6).unwrap().constants();
        let defect = soliton_defect(n, &l, &a, 6);
        assert!(defect.iter().all(|d| d.is_zero()), "n={n}: {defect:?}");
        // the first dropped order leaves a nonzero defect
        let d7 = soliton_defect(n, &l, &a, 7);
        assert!(!d7[7].is_zero());
    }
}

#[test]
fn numeric_soliton_matches_the_series() {
    let base = BaseGeometry::twisted(2, 3.0).unwrap();
    let sol = soliton_profile_solve(&base, 1.0, &SolitonOptions::default()).unwrap();
    let a: Vec<f64> = soliton_expand(2, &int(3), 2).unwrap().constants().iter().map(|q| q.to_f64().unwrap()).collect();
    // ψ·e^{−ρ} − 1 = Σ j²·a_j·w^{j+1}
    let c = fiber_w_coefficients(&sol.profile, 1.0, (4.0, 8.0), &[2, 3, 4]).unwrap();
    assert!((c[0] - a[1]).abs() <= 0.01 * a[1].abs(), "{} vs {}", c[0], a[1]);
    assert!((c[1] - 4.0 * a[2]).abs() <= 0.01 * (4.0 * a[2]).abs(), "{} vs {}", c[1], 4.0 * a[2]);
}

#[test]
fn residual_scales_like_the_first_dropped_power() {
    for k in 1..=4usize {
        let e = soliton_expand(3, &rat(7, 2), k).unwrap();
        let r1 = soliton_residual_at(&e, 9.0).unwrap().abs();
        let r2 = soliton_residual_at(&e, 12.0).unwrap().abs();
        let slope = (r1.ln() - r2.ln()) / 3.0;
        assert!((slope - (k as f64 + 1.0)).abs() < 0.05, "K={k}: slope {slope}");
    }
}

fn lambda_strategy() -> impl Strategy<Value = Rational> {
    (-12i64..=24, 1i64..=6).prop_map(|(p, q)| rat(p, q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recursion_matches_substitution(n in 2usize..=5, l in lambda_strategy()) {
        let e = soliton_expand(n, &l, 5).unwrap();
        prop_assert_eq!(e.constants(), brute_force_soliton(n, &l, 5));
    }

    #[test]
    fn gradient_identity_holds(n in 2usize..=5, l in lambda_strategy(), k in 1usize..=6) {
        let sol = soliton_expand(n, &l, k).unwrap();
        prop_assert!(gradient_identity_residual(&gradient_potential(&sol), &sol).iter().all(|r| r.is_zero()));
    }

    #[test]
    fn blowdown_is_the_soliton_at_unit_time(
        n in 2usize..=4,
        l in lambda_strategy(),
        c0 in -5i64..=5,
        c2 in -5i64..=5,
        c4 in -5i64..=5,
    ) {
        let mut consts = BTreeMap::new();
        consts.insert(0, int(c0));
        consts.insert(2, rat(c2, 3));
        consts.insert(4, rat(c4, 7));
        let u = flow_expand(n, &l, 4, &consts).unwrap();
        let rhs = flow_rhs(&u).unwrap();
        for j in 0..=4 {
            prop_assert_eq!(u.coeff(j).derivative(), rhs[j].clone());
        }
        let b = blowdown(&u);
        prop_assert_eq!(b.at_time(&int(1)), soliton_expand(n, &l, 4).unwrap().constants());
        prop_assert_eq!(blowdown(&b), b.clone());
        prop_assert_eq!(rescale(&b, &rat(c2.abs() + 2, 3)).unwrap(), b);
    }
}
