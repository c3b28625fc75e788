//! Reference computations shared by the integration tests. Nothing here calls
//! into the series engine of the crate.
#![allow(dead_code)]

use krf_core::series::{int, Rational};
use num_traits::Zero;

fn mul(a: &[Rational], b: &[Rational], order: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); order + 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if i + j > order {
                break;
            }
            out[i + j] += x * y;
        }
    }
    out
}

/// `log(1 + x)` for a polynomial without constant term, as `Σ (−1)^{k+1} x^k/k`.
fn log1p(x: &[Rational], order: usize) -> Vec<Rational> {
    assert!(x[0].is_zero());
    let mut out = vec![Rational::zero(); order + 1];
    let mut power = x.to_vec();
    power.resize(order + 1, Rational::zero());
    for k in 1..=order {
        let c = Rational::new(if k % 2 == 1 { 1.into() } else { (-1).into() }, (k as i64).into());
        for (o, p) in out.iter_mut().zip(&power) {
            *o += &c * p;
        }
        power = mul(&power, x, order);
    }
    out
}

/// Coefficients in `w = e^{−ρ}` of
/// `m·log(φ/e^ρ) + log(ψ/e^ρ) − Σ (j+1)·a_j·w^j`
/// for the metric `ω₀ − Ric(ω₀) + √−1∂∂̄u`, `u = Σ a_j w^j`, on the cone
/// `φ₀ = ψ₀ = e^ρ` over a base with Einstein constant `lambda`.
pub fn soliton_defect(n: usize, lambda: &Rational, a: &[Rational], order: usize) -> Vec<Rational> {
    let m = int(n as i64 - 1);
    let excess = lambda - int(n as i64);
    // φ = e^ρ − (λ − n) + ∂_ρu and ψ = e^ρ + ∂²_ρu, with ∂_ρ w^j = −j·w^j
    let mut x = vec![Rational::zero(); order + 1];
    let mut y = vec![Rational::zero(); order + 1];
    if order >= 1 {
        x[1] = -excess;
    }
    for (j, aj) in a.iter().enumerate() {
        if j + 1 > order {
            break;
        }
        let jj = int(j as i64);
        x[j + 1] -= &jj * aj;
        y[j + 1] += &jj * &jj * aj;
    }
    let lx = log1p(&x, order);
    let ly = log1p(&y, order);
    (0..=order)
        .map(|j| {
            let rhs = a.get(j).cloned().unwrap_or_else(Rational::zero) * int(j as i64 + 1);
            &m * &lx[j] + &ly[j] - rhs
        })
        .collect()
}

/// Soliton coefficients `a_1..a_order` found by substitution: the `w^j`
/// defect is affine in `a_j` once the lower coefficients are fixed, so two
/// trial values determine it.
pub fn brute_force_soliton(n: usize, lambda: &Rational, order: usize) -> Vec<Rational> {
    let mut a = vec![Rational::zero(); order + 1];
    for j in 1..=order {
        a[j] = Rational::zero();
        let r0 = soliton_defect(n, lambda, &a, order)[j].clone();
        a[j] = int(1);
        let r1 = soliton_defect(n, lambda, &a, order)[j].clone();
        a[j] = -&r0 / (r1 - &r0);
    }
    a
}

pub fn sup_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((x - y) / y).abs()).fold(0.0, f64::max)
}
