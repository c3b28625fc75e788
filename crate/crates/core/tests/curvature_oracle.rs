//! Compares the reduced curvature formulas with a direct computation in
//! holomorphic coordinates.
//!
//! On `ℂ^m × ℂ*` with `ρ = −log|w|² + ((m+1)/λ)·log(1 + |z|²)` the form
//! `√−1∂∂̄ρ` is a Fubini–Study metric with Einstein constant `λ`, and
//! `g_{ij̄} = φ(ρ)·ρ_{ij̄} + ψ(ρ)·ρ_i·ρ_j̄` is the metric of the profile. The
//! curvature tensor comes from finite-difference Wirtinger derivatives of
//! `g` and is contracted in a unitary frame.

use krf_core::{
    curvature_norm_profile, ricci_norm_profile, scalar_curvature, uniform_grid, BaseGeometry, RadialProfile,
};
use num_complex::Complex64 as C;

type Mat = Vec<Vec<C>>;

struct Chart {
    m: usize,
    c: f64,
    phi: fn(f64) -> f64,
    psi: fn(f64) -> f64,
}

impl Chart {
    fn dim(&self) -> usize {
        self.m + 1
    }

    fn coords(&self, x: &[f64]) -> Vec<C> {
        x.chunks(2).map(|p| C::new(p[0], p[1])).collect()
    }

    fn rho(&self, x: &[f64]) -> f64 {
        let v = self.coords(x);
        let s: f64 = 1.0 + v[..self.m].iter().map(|z| z.norm_sqr()).sum::<f64>();
        -v[self.m].norm_sqr().ln() + self.c * s.ln()
    }

    fn metric(&self, x: &[f64]) -> Mat {
        let v = self.coords(x);
        let (m, c) = (self.m, self.c);
        let s: f64 = 1.0 + v[..m].iter().map(|z| z.norm_sqr()).sum::<f64>();
        let mut d = vec![C::new(0.0, 0.0); m + 1];
        for a in 0..m {
            d[a] = v[a].conj() * (c / s);
        }
        d[m] = -v[m].inv();
        let r = self.rho(x);
        let (f, p) = ((self.phi)(r), (self.psi)(r));
        let mut g = vec![vec![C::new(0.0, 0.0); m + 1]; m + 1];
        for i in 0..=m {
            for j in 0..=m {
                let mut h = C::new(0.0, 0.0);
                if i < m && j < m {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    h = (C::new(delta / s, 0.0) - v[i].conj() * v[j] / (s * s)) * c;
                }
                g[i][j] = h * f + d[i] * d[j].conj() * p;
            }
        }
        g
    }
}

fn shifted(x: &[f64], steps: &[(usize, f64)]) -> Vec<f64> {
    let mut y = x.to_vec();
    for &(k, h) in steps {
        y[k] += h;
    }
    y
}

/// `∂f/∂x_a` by the fourth-order central stencil.
fn partial<T: Fn(&[f64]) -> C>(f: &T, x: &[f64], a: usize, h: f64) -> C {
    let e = |k: f64| f(&shifted(x, &[(a, k * h)]));
    (e(-2.0) - e(-1.0) * 8.0 + e(1.0) * 8.0 - e(2.0)) / (12.0 * h)
}

/// `∂²f/∂x_a∂x_b` from differences of first derivatives.
fn partial2<T: Fn(&[f64]) -> C>(f: &T, x: &[f64], a: usize, b: usize, ha: f64, hb: f64) -> C {
    let g = |y: &[f64]| partial(f, y, b, hb);
    partial(&g, x, a, ha)
}

fn steps(chart: &Chart, x: &[f64]) -> Vec<f64> {
    let v = chart.coords(x);
    v.iter().flat_map(|z| [2e-3 * z.norm().max(0.2); 2]).collect()
}

/// `∂_k f` and `∂_k∂_l̄ f` of a scalar function in coordinates `x`.
fn wirtinger<T: Fn(&[f64]) -> C>(f: &T, x: &[f64], h: &[f64], k: usize, l: usize) -> (C, C) {
    let i = C::new(0.0, 1.0);
    let (xk, yk, xl, yl) = (2 * k, 2 * k + 1, 2 * l, 2 * l + 1);
    let dk = (partial(f, x, xk, h[xk]) - i * partial(f, x, yk, h[yk])) * 0.5;
    let xx = partial2(f, x, xk, xl, h[xk], h[xl]);
    let yy = partial2(f, x, yk, yl, h[yk], h[yl]);
    let xy = partial2(f, x, xk, yl, h[xk], h[yl]);
    let yx = partial2(f, x, yk, xl, h[yk], h[xl]);
    (dk, (xx + yy + i * (xy - yx)) * 0.25)
}

fn cholesky(g: &Mat) -> Mat {
    let n = g.len();
    let mut l = vec![vec![C::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k].conj();
            }
            if i == j {
                assert!(s.re > 0.0, "metric not positive");
                l[i][i] = C::new(s.re.sqrt(), 0.0);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    l
}

fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let mut m: Mat = a.clone();
    let mut inv: Mat = (0..n).map(|i| (0..n).map(|j| C::new((i == j) as u8 as f64, 0.0)).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&p, &q| m[p][col].norm().total_cmp(&m[q][col].norm())).unwrap();
        m.swap(col, piv);
        inv.swap(col, piv);
        let d = m[col][col];
        for j in 0..n {
            m[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                for j in 0..n {
                    let (a, b) = (m[col][j], inv[col][j]);
                    m[r][j] -= f * a;
                    inv[r][j] -= f * b;
                }
            }
        }
    }
    inv
}

struct Oracle {
    rm: f64,
    ricci: f64,
    scalar: f64,
}

fn oracle(chart: &Chart, x: &[f64]) -> Oracle {
    let n = chart.dim();
    let h = steps(chart, x);
    let g = chart.metric(x);
    let ginv = inverse(&g);
    // first and mixed second derivatives of every metric entry
    let mut dg = vec![vec![vec![C::new(0.0, 0.0); n]; n]; n];
    let mut dgb = vec![vec![vec![C::new(0.0, 0.0); n]; n]; n];
    let mut ddg = vec![vec![vec![vec![C::new(0.0, 0.0); n]; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            let f = |y: &[f64]| chart.metric(y)[i][j];
            for k in 0..n {
                for l in 0..n {
                    let (dk, dkl) = wirtinger(&f, x, &h, k, l);
                    dg[k][i][j] = dk;
                    ddg[k][l][i][j] = dkl;
                }
                // ∂_k̄ f = conj(∂_k conj f)
                let fc = |y: &[f64]| chart.metric(y)[i][j].conj();
                dgb[k][i][j] = wirtinger(&fc, x, &h, k, k).0.conj();
            }
        }
    }
    let mut r = vec![vec![vec![vec![C::new(0.0, 0.0); n]; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = -ddg[k][l][i][j];
                    for p in 0..n {
                        for q in 0..n {
                            // g^{p q̄} is the (q, p) entry of the inverse
                            v += ginv[q][p] * dg[k][i][q] * dgb[l][p][j];
                        }
                    }
                    r[i][j][k][l] = v;
                }
            }
        }
    }
    let logdet = |y: &[f64]| {
        let l = cholesky(&chart.metric(y));
        C::new(l.iter().enumerate().map(|(i, row)| 2.0 * row[i].re.ln()).sum(), 0.0)
    };
    let mut ric = vec![vec![C::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            ric[i][j] = -wirtinger(&logdet, x, &h, i, j).1;
        }
    }
    // unitary frame e_α = Σ_i M_{iα} ∂_i with M = (Lᵀ)⁻¹
    let l = cholesky(&g);
    let lt: Mat = (0..n).map(|i| (0..n).map(|j| l[j][i]).collect()).collect();
    let mm = inverse(&lt);
    let frame2 = |t: &Mat, a: usize, b: usize| {
        let mut s = C::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                s += t[i][j] * mm[i][a] * mm[j][b].conj();
            }
        }
        s
    };
    let mut rm2 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut s = C::new(0.0, 0.0);
                    for i in 0..n {
                        for j in 0..n {
                            for k in 0..n {
                                for q in 0..n {
                                    s += r[i][j][k][q] * mm[i][a] * mm[j][b].conj() * mm[k][c] * mm[q][d].conj();
                                }
                            }
                        }
                    }
                    rm2 += s.norm_sqr();
                }
            }
        }
    }
    let mut ric2 = 0.0;
    let mut trace = 0.0;
    for a in 0..n {
        for b in 0..n {
            let v = frame2(&ric, a, b);
            ric2 += v.norm_sqr();
            if a == b {
                trace += v.re;
            }
        }
    }
    Oracle { rm: rm2.sqrt(), ricci: ric2.sqrt(), scalar: 2.0 * trace }
}

fn point(chart: &Chart, rho0: f64) -> Vec<f64> {
    let z = [C::new(0.3, 0.2), C::new(-0.1, 0.4), C::new(0.25, -0.15)];
    let s: f64 = 1.0 + z[..chart.m].iter().map(|v| v.norm_sqr()).sum::<f64>();
    let w = C::from_polar(((chart.c * s.ln() - rho0) / 2.0).exp(), 0.7);
    let mut x: Vec<f64> = z[..chart.m].iter().flat_map(|v| [v.re, v.im]).collect();
    x.extend([w.re, w.im]);
    x
}

fn check(n: usize, lambda: f64, phi: fn(f64) -> f64, psi: fn(f64) -> f64, rhos: &[f64]) {
    let chart = Chart { m: n - 1, c: n as f64 / lambda, phi, psi };
    let base = BaseGeometry::twisted(n, lambda).unwrap();
    for &rho0 in rhos {
        let x = point(&chart, rho0);
        assert!((chart.rho(&x) - rho0).abs() < 1e-12);
        let o = oracle(&chart, &x);
        let grid = uniform_grid(rho0 - 0.5, rho0 + 0.5, 1001).unwrap();
        let profile = RadialProfile::from_fn(&grid, |r| (phi(r), psi(r))).unwrap();
        let i = 500;
        let rm = curvature_norm_profile(&profile, &base).unwrap()[i];
        let ric = ricci_norm_profile(&profile, &base).unwrap()[i];
        let scal = scalar_curvature(&profile, &base).unwrap()[i];
        let scale = o.rm.max(1e-3 * (-rho0).exp());
        assert!((rm - o.rm).abs() <= 1e-5 * scale, "n={n} rho={rho0}: |Rm| {rm} vs oracle {}", o.rm);
        assert!((ric - o.ricci).abs() <= 1e-5 * scale, "n={n} rho={rho0}: |Ric| {ric} vs oracle {}", o.ricci);
        assert!((scal - o.scalar).abs() <= 1e-5 * scale, "n={n} rho={rho0}: R {scal} vs oracle {}", o.scalar);
    }
}

#[test]
fn conical_profile_with_log_term() {
    check(2, 3.0, |r| r.exp() + 1.0, |r| r.exp(), &[1.0, 2.5]);
}

#[test]
fn bulging_profile() {
    check(2, 1.0, |r| 2.25 * r.sqrt(), |r| 1.125 / r.sqrt(), &[2.0, 6.0]);
}

#[test]
fn eguchi_hanson_is_ricci_flat_but_curved() {
    let phi = |r: f64| ((2.0 * r).exp() + 1.0).sqrt();
    let psi = |r: f64| (2.0 * r).exp() / ((2.0 * r).exp() + 1.0).sqrt();
    check(2, 2.0, phi, psi, &[-0.5, 0.5]);
    let chart = Chart { m: 1, c: 1.0, phi, psi };
    let o = oracle(&chart, &point(&chart, 0.0));
    assert!(o.ricci < 1e-6 && o.rm > 0.1, "Ric {} Rm {}", o.ricci, o.rm);
}

#[test]
fn generic_profile_in_dimension_three() {
    check(
        3,
        2.0,
        |r| r.exp() + 0.3 + 0.05 * (0.5 * r).exp(),
        |r| r.exp() + 0.025 * (0.5 * r).exp(),
        &[0.5, 2.0],
    );
}

#[test]
fn flat_cone_in_dimension_three() {
    let chart = Chart { m: 2, c: 1.0, phi: f64::exp, psi: f64::exp };
    let o = oracle(&chart, &point(&chart, 1.0));
    assert!(o.rm < 1e-6 && o.ricci < 1e-6, "Rm {} Ric {}", o.rm, o.ricci);
}
