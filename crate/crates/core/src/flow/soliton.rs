//! Expanding gradient solitons `Ric(ω) + ½·L_V ω = −ω` with `V` the radial
//! field, `L_V f = −2∂_ρ f`.
//!
//! With `μ = 1` the soliton equations read `r_base = φ' − φ`,
//! `r_fiber = ψ' − ψ`. Writing `ψ = Θ(φ)` turns the first one into the
//! linear equation `Θ_τ + (1 + m/τ)·Θ = λ + τ` in `τ = φ`, whose solutions
//! are
//!
//! `Θ = τ + (λ−n)·Σ_{j≤m} (−1)^j·m!/(m−j)!·τ^{−j} + C·τ^{−m}·e^{−τ}`.
//!
//! `C = 0` is the branch seen by the formal expansion; it only makes sense
//! for large `τ`. The value `C* = −(λ−n)·(−1)^m·m!` gives the branch that is
//! smooth at `τ = 0`, where `Θ ≈ λτ/n`: this is the complete soliton on the
//! total space of the line bundle. The profile follows by integrating
//! `φ' = Θ(φ)` from a point fixed by the cone coefficient `A`, where
//! `φ ~ A·e^ρ`.

use serde::{Deserialize, Serialize};

use crate::ansatz::{ricci_coefficients, uniform_grid, BaseGeometry, RadialProfile};
use crate::error::{Error, Result};
use crate::fd;
use crate::fit::fit_basis;
use crate::models::FikFunction;

use super::EndValues;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolitonBranch {
    /// Smooth at the zero section; requires `λ > 0`.
    Smooth,
    /// The branch without the exponentially small term.
    Formal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolitonOptions {
    pub rho_min: f64,
    pub rho_max: f64,
    pub points: usize,
    pub branch: SolitonBranch,
    /// `B` is sampled on a grid this many times finer than the profile.
    pub fik_refinement: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for SolitonOptions {
    fn default() -> Self {
        SolitonOptions {
            rho_min: -2.0,
            rho_max: 16.0,
            points: 4097,
            branch: SolitonBranch::Smooth,
            fik_refinement: 4,
            max_iterations: 60,
            tolerance: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolitonSolution {
    pub profile: RadialProfile,
    pub cone_coefficient: f64,
    pub branch: SolitonBranch,
    /// Cone exponent `p = n/λ`, when `λ > 0`.
    pub p: Option<f64>,
    /// `B` in the normalization used by `make_fik`, when `λ > 0`.
    pub fik: Option<FikFunction>,
    /// Largest soliton-equation defect over the trusted samples.
    pub residual: f64,
}

impl SolitonSolution {
    /// End values at `rho_inner` and `rho_outer` of the self-similar flow
    /// `φ(ρ, t) = t·φ_1(ρ − log t)` this soliton generates, for `0 ≤ t ≤ horizon`.
    /// At `t = 0` the family is the cone `A·e^ρ`.
    pub fn self_similar_ends(
        &self,
        rho_inner: f64,
        rho_outer: f64,
        horizon: f64,
    ) -> Result<impl Fn(f64) -> EndValues + Send + Sync + 'static> {
        let (p, fik) = match (self.p, &self.fik) {
            (Some(p), Some(f)) => (p, f.interpolant()?),
            _ => return Err(Error::Unsupported("self-similar ends need a soliton with lambda > 0".into())),
        };
        let s_need = 4.0 * horizon * (-rho_inner).exp();
        if !(s_need <= fik.s_max()) {
            return Err(Error::InterpolationRangeExceeded { arg: s_need, lo: 0.0, hi: fik.s_max() });
        }
        let at = move |rho: f64, t: f64| {
            // past the horizon the values turn NaN and the solver reports a blowup
            let (b, db) = fik.eval_with_derivative(4.0 * t * (-rho).exp()).unwrap_or((f64::NAN, f64::NAN));
            (rho.exp() * b / p, (rho.exp() * b - 4.0 * t * db) / p)
        };
        Ok(move |t: f64| EndValues { inner: at(rho_inner, t), outer: at(rho_outer, t) })
    }
}

/// Closed-form `Θ` of one branch.
#[derive(Debug, Clone)]
struct Theta {
    m: usize,
    excess: f64,
    c: f64,
    /// `Σ d_k·u^k = τ/Θ` in `u = 1/τ`, ignoring the exponential term.
    recip: Vec<f64>,
    smooth: bool,
}

const SERIES_BELOW: f64 = 2.0;
const TAIL_FROM: f64 = 1e4;
const TAIL_TERMS: usize = 24;
const QUADRATURE_INTERVALS: usize = 4000;

impl Theta {
    fn new(base: &BaseGeometry, branch: SolitonBranch) -> Self {
        let m = base.n - 1;
        let excess = base.lambda - base.n as f64;
        let mf = factorial(m);
        let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        let smooth = branch == SolitonBranch::Smooth;
        let c = if smooth { -excess * sign * mf } else { 0.0 };
        // Θ/τ = 1 + Σ_{j=1}^{m+1} b_j u^j
        let mut b = vec![0.0; m + 2];
        for j in 1..=m + 1 {
            let s = if (j - 1) % 2 == 0 { 1.0 } else { -1.0 };
            b[j] = excess * s * mf / factorial(m + 1 - j);
        }
        let mut d = vec![0.0; TAIL_TERMS + 1];
        d[0] = 1.0;
        for k in 1..=TAIL_TERMS {
            let mut acc = 0.0;
            for j in 1..=k.min(m + 1) {
                acc -= b[j] * d[k - j];
            }
            d[k] = acc;
        }
        Theta { m, excess, c, recip: d, smooth }
    }

    fn eval(&self, tau: f64) -> f64 {
        if self.excess == 0.0 {
            return tau;
        }
        if self.smooth && tau <= SERIES_BELOW {
            // Θ − τ = −(λ−n)·m!·Σ_{i≥1} (−τ)^i/(m+i)!
            let mut term = 1.0;
            let mut sum = 0.0;
            for i in 1..200 {
                term *= -tau / (self.m + i) as f64;
                sum += term;
                if term.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            return tau - self.excess * sum;
        }
        let mut poly = 0.0;
        let mut coef = 1.0;
        let mut pw = 1.0;
        for j in 0..=self.m {
            if j > 0 {
                coef *= -((self.m + 1 - j) as f64);
                pw /= tau;
            }
            poly += coef * pw;
        }
        let mut v = tau + self.excess * poly;
        if self.c != 0.0 && tau < 800.0 {
            v += self.c * tau.powi(-(self.m as i32)) * (-tau).exp();
        }
        v
    }

    /// `∫_τ^∞ (1/s − 1/Θ(s)) ds` from the reciprocal series.
    fn tail(&self, tau: f64) -> f64 {
        let u = 1.0 / tau;
        let mut pw = 1.0;
        let mut sum = 0.0;
        for k in 1..=TAIL_TERMS {
            pw *= u;
            sum -= self.recip[k] * pw / k as f64;
        }
        sum
    }

    /// `G(τ) = ∫_τ^∞ (1/s − 1/Θ(s)) ds`.
    fn g(&self, tau: f64) -> f64 {
        if tau >= TAIL_FROM {
            return self.tail(tau);
        }
        // Simpson in log s of (1 − s/Θ(s))
        let (a, b) = (tau.ln(), TAIL_FROM.ln());
        let h = (b - a) / QUADRATURE_INTERVALS as f64;
        let f = |x: f64| {
            let s = x.exp();
            1.0 - s / self.eval(s)
        };
        let mut acc = f(a) + f(b);
        for i in 1..QUADRATURE_INTERVALS {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + h * i as f64);
        }
        acc * h / 3.0 + self.tail(TAIL_FROM)
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Solves the reduced soliton equation on `[rho_min, rho_max]`.
///
/// The sample at `rho_max` is placed on the exact solution with
/// `φ ~ A·e^ρ`; the rest follows by integrating `φ' = Θ(φ)` inward with RK4.
pub fn soliton_profile_solve(
    base: &BaseGeometry,
    cone_coefficient: f64,
    options: &SolitonOptions,
) -> Result<SolitonSolution> {
    base.validate()?;
    if base.mu != 1 {
        return Err(Error::Unsupported("expanding solitons with cone ends need a twisted base (mu = 1)".into()));
    }
    if !(cone_coefficient > 0.0) || !cone_coefficient.is_finite() {
        return Err(Error::InvalidRegime(format!("cone coefficient must be positive, got {cone_coefficient}")));
    }
    if options.rho_max < 12.0 {
        return Err(Error::Unsupported(format!(
            "rho_max = {} is too small for the cone boundary condition (need >= 12)",
            options.rho_max
        )));
    }
    if options.branch == SolitonBranch::Smooth && !(base.lambda > 0.0) {
        return Err(Error::NotApplicable(format!(
            "the smooth branch needs lambda > 0, got {}",
            base.lambda
        )));
    }
    if options.fik_refinement == 0 {
        return Err(Error::Unsupported("fik_refinement must be at least 1".into()));
    }
    let grid = uniform_grid(options.rho_min, options.rho_max, options.points)?;
    let r = options.fik_refinement;
    let fine = uniform_grid(options.rho_min, options.rho_max, (options.points - 1) * r + 1)?;
    let theta = Theta::new(base, options.branch);
    let a = cone_coefficient;
    let nf = fine.len();
    let mut phi_fine = vec![0.0; nf];
    if theta.excess == 0.0 {
        for (p, x) in phi_fine.iter_mut().zip(&fine) {
            *p = a * x.exp();
        }
    } else {
        phi_fine[nf - 1] = outer_value(&theta, a, options)?;
        let h = fine[1] - fine[0];
        let sub = (h / 1e-3).ceil().max(1.0) as usize;
        let step = -h / sub as f64;
        let mut y = phi_fine[nf - 1];
        for i in (0..nf - 1).rev() {
            for _ in 0..sub {
                let k1 = theta.eval(y);
                let k2 = theta.eval(y + 0.5 * step * k1);
                let k3 = theta.eval(y + 0.5 * step * k2);
                let k4 = theta.eval(y + step * k3);
                y += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            if !(y > 0.0) || !y.is_finite() {
                return Err(Error::NonKaehler { which: "phi", rho: fine[i], value: y });
            }
            phi_fine[i] = y;
        }
    }
    let phi: Vec<f64> = phi_fine.iter().step_by(r).copied().collect();
    let psi: Vec<f64> = phi.iter().map(|&p| theta.eval(p)).collect();
    let profile = RadialProfile::new(grid, phi, psi)?;
    let residual = soliton_residual(&profile, base)?;
    let (p, fik) = if base.lambda > 0.0 {
        let p = base.n as f64 / base.lambda;
        (Some(p), Some(extract_fik(&fine, &phi_fine, p, a)?))
    } else {
        (None, None)
    };
    Ok(SolitonSolution { profile, cone_coefficient: a, branch: options.branch, p, fik, residual })
}

/// Newton solve for `φ(ρ_max)` from `ρ = log(φ/A) + G(φ)`.
fn outer_value(theta: &Theta, a: f64, options: &SolitonOptions) -> Result<f64> {
    let target = options.rho_max;
    let mut tau = a * target.exp();
    let mut last = f64::INFINITY;
    for _ in 0..options.max_iterations {
        let f = (tau / a).ln() + theta.g(tau) - target;
        last = f.abs();
        if last <= options.tolerance * target.abs().max(1.0) {
            return Ok(tau);
        }
        let next = tau - f * theta.eval(tau);
        tau = if next > 0.0 { next } else { 0.5 * tau };
    }
    Err(Error::NoConvergence { iterations: options.max_iterations, residual: last })
}

/// `B(s) = p·(s/4)·φ(log(4/s))` on the nodes `s = 4e^{−ρ}`, plus `B(0) = p·A`.
fn extract_fik(rho: &[f64], phi: &[f64], p: f64, a: f64) -> Result<FikFunction> {
    let mut s = vec![0.0];
    let mut b = vec![p * a];
    for (r, f) in rho.iter().zip(phi).rev() {
        let si = 4.0 * (-r).exp();
        s.push(si);
        b.push(p * 0.25 * si * f);
    }
    FikFunction::new(s, b)
}

/// Largest relative defect `√(m·(E_b/φ)² + (E_f/ψ)²)` of the soliton
/// equations `E_b = r_base − φ' + φ`, `E_f = r_fiber − ψ' + ψ` over trusted
/// samples.
pub fn soliton_residual(profile: &RadialProfile, base: &BaseGeometry) -> Result<f64> {
    let ric = ricci_coefficients(profile, base)?;
    let h = profile.spacing();
    let (phi, psi) = (profile.phi(), profile.psi());
    let m = base.m();
    let mut worst: f64 = 0.0;
    for i in 0..profile.len() {
        if !ric.trusted[i] {
            continue;
        }
        let eb = (ric.r_base[i] - fd::d1_at(phi, h, i) + phi[i]) / phi[i];
        let ef = (ric.r_fiber[i] - fd::d1_at(psi, h, i) + psi[i]) / psi[i];
        worst = worst.max((m * eb * eb + ef * ef).sqrt());
    }
    Ok(worst)
}

/// Least-squares coefficients `c_k` of `ψ·e^{−ρ}/A − 1 ≈ Σ c_k·e^{−kρ}` over
/// `window`, one per entry of `powers`.
pub fn fiber_w_coefficients(
    profile: &RadialProfile,
    cone_coefficient: f64,
    window: (f64, f64),
    powers: &[i32],
) -> Result<Vec<f64>> {
    let (lo, hi) = profile.window_indices(window.0, window.1)?;
    let rho = &profile.rho_grid()[lo..=hi];
    let y: Vec<f64> = rho
        .iter()
        .zip(&profile.psi()[lo..=hi])
        .map(|(r, s)| s * (-r).exp() / cone_coefficient - 1.0)
        .collect();
    let cols: Vec<Vec<f64>> =
        powers.iter().map(|&k| rho.iter().map(|r| (-(k as f64) * r).exp()).collect()).collect();
    fit_basis(&cols, &y).ok_or(Error::WindowTooSmall { samples: rho.len(), required: powers.len() })
}
