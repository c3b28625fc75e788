//! Rotationally symmetric Kähler metrics on a model end.
//!
//! A metric is stored through two radial coefficients,
//!
//! ```text
//! ω = φ(ρ)·ω_D + ψ(ρ)·√−1 ∂ρ∧∂̄ρ,      ∂_ρ φ = μ·ψ,
//! ```
//!
//! where `ρ = log|σ|_h^{-2}` and the divisor metric satisfies
//! `Ric(ω_D) = λ·ω_D`. With `m = n − 1` and `Q = m·log φ + log ψ`,
//!
//! ```text
//! Ric(ω) = (λ − μ·Q_ρ)·ω_D − Q_ρρ·√−1 ∂ρ∧∂̄ρ.
//! ```
//!
//! Real convention: the radial line element is `¼·ψ·dρ²`, so radial arc length
//! is `∫ ½·√ψ dρ` and the flat cone `φ = ψ = e^ρ` has radius `R = e^{ρ/2}`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd;
use crate::interp::lagrange4_uniform;

/// Factor `ds = RADIAL_LENGTH_FACTOR·√ψ·dρ` relating ρ to Riemannian length.
pub const RADIAL_LENGTH_FACTOR: f64 = 0.5;

/// Relative tolerance on grid spacing uniformity.
const UNIFORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseGeometry {
    /// Complex dimension of the total space; the divisor has dimension `n − 1`.
    pub n: usize,
    /// Einstein constant of the divisor metric.
    pub lambda: f64,
    /// Twisting flag, 0 or 1.
    pub mu: u8,
    /// Order of the quotient ℂⁿ/ℤ_k used for labels only.
    #[serde(default = "one")]
    pub orbifold_k: usize,
}

fn one() -> usize {
    1
}

impl BaseGeometry {
    pub fn new(n: usize, lambda: f64, mu: u8, orbifold_k: usize) -> Result<Self> {
        let b = BaseGeometry { n, lambda, mu, orbifold_k };
        b.validate()?;
        Ok(b)
    }

    /// Ample twisting with `μ = 1`.
    pub fn twisted(n: usize, lambda: f64) -> Result<Self> {
        Self::new(n, lambda, 1, 1)
    }

    /// Trivial normal bundle, `μ = 0`.
    pub fn untwisted(n: usize, lambda: f64) -> Result<Self> {
        Self::new(n, lambda, 0, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu > 1 {
            return Err(Error::InvalidBase(format!("mu must be 0 or 1, got {}", self.mu)));
        }
        let min_n = if self.mu == 1 { 2 } else { 1 };
        if self.n < min_n {
            return Err(Error::InvalidBase(format!(
                "n = {} but mu = {} needs n >= {}",
                self.n, self.mu, min_n
            )));
        }
        if self.orbifold_k < 1 {
            return Err(Error::InvalidBase("orbifold_k must be at least 1".into()));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidBase("lambda must be finite".into()));
        }
        Ok(())
    }

    /// Complex dimension of the divisor.
    pub fn m(&self) -> f64 {
        (self.n - 1) as f64
    }

    pub fn mu_f(&self) -> f64 {
        self.mu as f64
    }

    /// Holomorphic sectional curvature of the divisor model. The base is
    /// taken to be a space form, for which `Ric = (m+1)·κ·ω_D`.
    pub fn base_curvature(&self) -> f64 {
        self.lambda / self.n as f64
    }

    /// Label of the model cone, e.g. `C^2/Z_3`.
    pub fn cone_label(&self) -> String {
        if self.orbifold_k == 1 {
            format!("C^{}", self.n)
        } else {
            format!("C^{}/Z_{}", self.n, self.orbifold_k)
        }
    }
}

/// Sampled coefficient pair on a uniform ρ-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    rho_grid: Vec<f64>,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

impl RadialProfile {
    pub fn new(rho_grid: Vec<f64>, phi: Vec<f64>, psi: Vec<f64>) -> Result<Self> {
        let n = rho_grid.len();
        if n < fd::MIN_POINTS {
            return Err(Error::GridTooCoarse { points: n, required: fd::MIN_POINTS });
        }
        if phi.len() != n || psi.len() != n {
            return Err(Error::InvalidGrid(format!(
                "length mismatch: grid {}, phi {}, psi {}",
                n,
                phi.len(),
                psi.len()
            )));
        }
        check_uniform(&rho_grid)?;
        for i in 0..n {
            if !(phi[i] > 0.0) {
                return Err(Error::NonKaehler { which: "phi", rho: rho_grid[i], value: phi[i] });
            }
            if !(psi[i] > 0.0) {
                return Err(Error::NonKaehler { which: "psi", rho: rho_grid[i], value: psi[i] });
            }
            if !phi[i].is_finite() || !psi[i].is_finite() {
                return Err(Error::InvalidGrid(format!("non-finite coefficient at rho = {}", rho_grid[i])));
            }
        }
        Ok(RadialProfile { rho_grid, phi, psi })
    }

    /// Samples closed-form coefficients on `grid`.
    pub fn from_fn(grid: &[f64], f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        let (phi, psi): (Vec<f64>, Vec<f64>) = grid.iter().map(|&r| f(r)).unzip();
        Self::new(grid.to_vec(), phi, psi)
    }

    pub fn rho_grid(&self) -> &[f64] {
        &self.rho_grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn len(&self) -> usize {
        self.rho_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho_grid.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        grid_spacing(&self.rho_grid)
    }

    pub fn rho_min(&self) -> f64 {
        self.rho_grid[0]
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_grid[self.len() - 1]
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (self.rho_grid, self.phi, self.psi)
    }

    /// Interpolated `(φ, ψ)` at an arbitrary ρ inside the grid.
    pub fn sample(&self, rho: f64) -> Result<(f64, f64)> {
        let h = self.spacing();
        let x0 = self.rho_min();
        Ok((
            lagrange4_uniform(x0, h, &self.phi, rho)?,
            lagrange4_uniform(x0, h, &self.psi, rho)?,
        ))
    }

    /// Largest interior violation of `∂_ρφ = μψ`, using fourth-order differences.
    pub fn closedness_defect(&self, mu: u8) -> f64 {
        let h = self.spacing();
        let n = self.len();
        (fd::BOUNDARY_MARGIN..n - fd::BOUNDARY_MARGIN)
            .map(|i| (fd::d1_at(&self.phi, h, i) - mu as f64 * self.psi[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Index range `[lo, hi]` of samples with ρ inside `[a, b]`.
    pub fn window_indices(&self, a: f64, b: f64) -> Result<(usize, usize)> {
        let tol = 1e-9 * self.spacing();
        if a > b || a < self.rho_min() - tol || b > self.rho_max() + tol {
            return Err(Error::OutOfRange {
                lo: a,
                hi: b,
                grid_lo: self.rho_min(),
                grid_hi: self.rho_max(),
            });
        }
        let lo = self.rho_grid.partition_point(|&r| r < a - tol);
        let hi = self.rho_grid.partition_point(|&r| r <= b + tol);
        if hi == 0 || lo >= hi {
            return Err(Error::OutOfRange {
                lo: a,
                hi: b,
                grid_lo: self.rho_min(),
                grid_hi: self.rho_max(),
            });
        }
        Ok((lo, hi - 1))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["rho", "phi", "psi"])?;
        for i in 0..self.len() {
            wr.write_record([
                fmt_f64(self.rho_grid[i]),
                fmt_f64(self.phi[i]),
                fmt_f64(self.psi[i]),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["rho", "phi", "psi"] {
            return Err(Error::Parse(format!("expected header rho,phi,psi, got {:?}", headers)));
        }
        let (mut rho, mut phi, mut psi) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rd.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Parse("short row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(e.to_string()))
            };
            rho.push(parse(0)?);
            phi.push(parse(1)?);
            psi.push(parse(2)?);
        }
        Self::new(rho, phi, psi)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn to_json(&self, base: &BaseGeometry) -> Result<String> {
        let doc = ProfileDoc {
            base: *base,
            rho_grid: self.rho_grid.clone(),
            phi: self.phi.clone(),
            psi: self.psi.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<(BaseGeometry, Self)> {
        let doc: ProfileDoc = serde_json::from_str(s)?;
        doc.base.validate()?;
        Ok((doc.base, Self::new(doc.rho_grid, doc.phi, doc.psi)?))
    }
}

#[derive(Serialize, Deserialize)]
struct ProfileDoc {
    base: BaseGeometry,
    rho_grid: Vec<f64>,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

/// Seventeen significant digits, enough to round-trip every f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// `points` equally spaced samples on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < fd::MIN_POINTS {
        return Err(Error::GridTooCoarse { points, required: fd::MIN_POINTS });
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidGrid(format!("need lo < hi, got [{lo}, {hi}]")));
    }
    let h = (hi - lo) / (points - 1) as f64;
    let mut g: Vec<f64> = (0..points).map(|i| lo + h * i as f64).collect();
    g[points - 1] = hi;
    Ok(g)
}

fn grid_spacing(g: &[f64]) -> f64 {
    (g[g.len() - 1] - g[0]) / (g.len() - 1) as f64
}

fn check_uniform(g: &[f64]) -> Result<()> {
    let h = grid_spacing(g);
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
    }
    for (i, w) in g.windows(2).enumerate() {
        let d = w[1] - w[0];
        if !(d > 0.0) {
            return Err(Error::InvalidGrid(format!("grid not increasing at index {i}")));
        }
        if (d - h).abs() > UNIFORM_TOL * h.max(g[i].abs() * 1e-7) {
            return Err(Error::InvalidGrid(format!(
                "non-uniform spacing at index {i}: {d} vs {h}"
            )));
        }
    }
    Ok(())
}

/// Profile of `√−1∂∂̄P + a·ω_D` from samples of the potential `P`.
///
/// `ψ = P''` and `φ = a + μ·P'` by fourth-order differences. Use
/// [`profile_from_potential_fn`] when `P'` and `P''` are known in closed form.
pub fn profile_from_potential(
    rho_grid: &[f64],
    potential: &[f64],
    base: &BaseGeometry,
    offset: f64,
) -> Result<RadialProfile> {
    let n = rho_grid.len();
    if n < fd::MIN_POINTS {
        return Err(Error::GridTooCoarse { points: n, required: fd::MIN_POINTS });
    }
    if potential.len() != n {
        return Err(Error::InvalidGrid("potential and grid lengths differ".into()));
    }
    check_uniform(rho_grid)?;
    check_offset(base, offset)?;
    let h = grid_spacing(rho_grid);
    let dp = fd::d1(potential, h);
    let phi = dp.iter().map(|d| offset + base.mu_f() * d).collect();
    let psi = fd::d2(potential, h);
    RadialProfile::new(rho_grid.to_vec(), phi, psi)
}

/// Closed-form variant: `derivs(ρ)` returns `(P'(ρ), P''(ρ))`.
pub fn profile_from_potential_fn(
    rho_grid: &[f64],
    base: &BaseGeometry,
    offset: f64,
    derivs: impl Fn(f64) -> (f64, f64),
) -> Result<RadialProfile> {
    check_offset(base, offset)?;
    RadialProfile::from_fn(rho_grid, |r| {
        let (d1, d2) = derivs(r);
        (offset + base.mu_f() * d1, d2)
    })
}

fn check_offset(base: &BaseGeometry, offset: f64) -> Result<()> {
    base.validate()?;
    if base.mu == 0 && !(offset > 0.0) {
        return Err(Error::InvalidBase(format!(
            "untwisted base needs a positive base offset, got {offset}"
        )));
    }
    Ok(())
}

/// Ricci coefficients on the profile's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RicciCoefficients {
    pub r_base: Vec<f64>,
    pub r_fiber: Vec<f64>,
    /// False at samples computed with the low-order boundary stencils.
    pub trusted: Vec<bool>,
}

/// `Q = m·log φ + log ψ` sampled on the grid.
pub fn log_volume(profile: &RadialProfile, base: &BaseGeometry) -> Vec<f64> {
    let m = base.m();
    profile
        .phi
        .iter()
        .zip(&profile.psi)
        .map(|(p, s)| m * p.ln() + s.ln())
        .collect()
}

pub fn ricci_coefficients(profile: &RadialProfile, base: &BaseGeometry) -> Result<RicciCoefficients> {
    let n = profile.len();
    if n < fd::MIN_POINTS {
        return Err(Error::GridTooCoarse { points: n, required: fd::MIN_POINTS });
    }
    let h = profile.spacing();
    let mu = base.mu_f();
    let mut r_base = Vec::with_capacity(n);
    let mut r_fiber = Vec::with_capacity(n);
    for i in 0..n {
        let (q1, q2) = log_volume_derivatives(&profile.phi, &profile.psi, base.m(), h, i);
        r_base.push(base.lambda - mu * q1);
        r_fiber.push(-q2);
    }
    Ok(RicciCoefficients { r_base, r_fiber, trusted: fd::trust_flags(n) })
}

/// `(Q_ρ, Q_ρρ)` at sample `i`. The stencils act on `Q[i+k] − Q[i]`, formed
/// from logarithms of coefficient ratios, so the rounding error does not
/// scale with the size of `Q` itself.
pub fn log_volume_derivatives(phi: &[f64], psi: &[f64], m: f64, h: f64, i: usize) -> (f64, f64) {
    let n = phi.len();
    let dq = |k: isize| {
        let j = (i as isize + k) as usize;
        let a = ((phi[j] - phi[i]) / phi[i]).ln_1p();
        let b = ((psi[j] - psi[i]) / psi[i]).ln_1p();
        m * a + b
    };
    (
        fd::d1_stencil(n, i).apply_diff(h, dq),
        fd::d2_stencil(n, i).apply_diff(h * h, dq),
    )
}

/// Scalar curvature `R = 2·[m·r_base/φ + r_fiber/ψ]` (Riemannian normalization,
/// twice the Kähler trace).
pub fn scalar_curvature(profile: &RadialProfile, base: &BaseGeometry) -> Result<Vec<f64>> {
    let ric = ricci_coefficients(profile, base)?;
    let m = base.m();
    Ok((0..profile.len())
        .map(|i| 2.0 * (m * ric.r_base[i] / profile.phi[i] + ric.r_fiber[i] / profile.psi[i]))
        .collect())
}

/// Norm of the Ricci tensor in the same normalization as [`curvature_norm_profile`].
pub fn ricci_norm_profile(profile: &RadialProfile, base: &BaseGeometry) -> Result<Vec<f64>> {
    let ric = ricci_coefficients(profile, base)?;
    let m = base.m();
    Ok((0..profile.len())
        .map(|i| {
            let b = ric.r_base[i] / profile.phi[i];
            let f = ric.r_fiber[i] / profile.psi[i];
            (m * b * b + f * f).sqrt()
        })
        .collect())
}

/// Radial arc length `∫_{ρ0}^{ρ1} ½√ψ dρ` by composite Simpson on a resampling
/// of the integrand at the grid spacing.
pub fn radial_distance(profile: &RadialProfile, rho0: f64, rho1: f64) -> Result<f64> {
    let tol = 1e-9 * profile.spacing();
    if !(rho0 < rho1) || rho0 < profile.rho_min() - tol || rho1 > profile.rho_max() + tol {
        return Err(Error::OutOfRange {
            lo: rho0,
            hi: rho1,
            grid_lo: profile.rho_min(),
            grid_hi: profile.rho_max(),
        });
    }
    let h = profile.spacing();
    let integrand: Vec<f64> = profile.psi.iter().map(|s| RADIAL_LENGTH_FACTOR * s.sqrt()).collect();
    let mut intervals = ((rho1 - rho0) / h).ceil().max(2.0) as usize;
    if intervals % 2 == 1 {
        intervals += 1;
    }
    let hs = (rho1 - rho0) / intervals as f64;
    let x0 = profile.rho_min();
    let samples = (0..=intervals)
        .map(|k| {
            let x = (rho0 + hs * k as f64).clamp(x0, profile.rho_max());
            lagrange4_uniform(x0, h, &integrand, x)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(fd::simpson(&samples, hs))
}

/// Arc length from the first grid point to every grid point, integrated
/// interval by interval with a fourth-order cubic rule.
pub fn cumulative_distance(profile: &RadialProfile) -> Vec<f64> {
    let n = profile.len();
    let h = profile.spacing();
    let f: Vec<f64> = profile.psi.iter().map(|s| RADIAL_LENGTH_FACTOR * s.sqrt()).collect();
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let seg = if i == 0 {
            h * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0
        } else if i + 2 >= n {
            h * (9.0 * f[i + 1] + 19.0 * f[i] - 5.0 * f[i - 1] + f[i - 2]) / 24.0
        } else {
            h * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]) / 24.0
        };
        out[i + 1] = out[i] + seg;
    }
    out
}

/// Curvature components in a unitary frame adapted to the splitting into the
/// radial line and the divisor directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureComponents {
    /// `R(e_r, ē_r, e_r, ē_r) = −(log ψ)''/ψ`.
    pub radial: f64,
    /// Mixed radial/base component `−μ·(ψ/φ)'/ψ`.
    pub mixed: f64,
    /// Holomorphic sectional curvature scale of the base directions,
    /// `(κ·φ − μ·ψ)/φ²`.
    pub base: f64,
}

impl CurvatureComponents {
    /// `|Rm|² = A² + 4m·B² + 2m(m+1)·c²`, the sum of squared components
    /// `|R_{i j̄ k l̄}|²` over a unitary frame.
    pub fn norm(&self, m: f64) -> f64 {
        let (a, b, c) = (self.radial, self.mixed, self.base);
        (a * a + 4.0 * m * b * b + 2.0 * m * (m + 1.0) * c * c).sqrt()
    }
}

/// Frame components at every grid point.
pub fn curvature_components(profile: &RadialProfile, base: &BaseGeometry) -> Result<Vec<CurvatureComponents>> {
    let n = profile.len();
    if n < fd::MIN_POINTS {
        return Err(Error::GridTooCoarse { points: n, required: fd::MIN_POINTS });
    }
    let h = profile.spacing();
    let mu = base.mu_f();
    let kappa = base.base_curvature();
    let log_psi: Vec<f64> = profile.psi.iter().map(|s| s.ln()).collect();
    let ratio: Vec<f64> = profile.psi.iter().zip(&profile.phi).map(|(s, p)| s / p).collect();
    Ok((0..n)
        .map(|i| {
            let (p, s) = (profile.phi[i], profile.psi[i]);
            CurvatureComponents {
                radial: -fd::d2_at(&log_psi, h, i) / s,
                mixed: -mu * fd::d1_at(&ratio, h, i) / s,
                base: (kappa * p - mu * s) / (p * p),
            }
        })
        .collect())
}

/// `|Rm|` at every grid point.
pub fn curvature_norm_profile(profile: &RadialProfile, base: &BaseGeometry) -> Result<Vec<f64>> {
    let m = base.m();
    Ok(curvature_components(profile, base)?.iter().map(|c| c.norm(m)).collect())
}

/// `|Rm|` at an arbitrary ρ at least two grid spacings inside the grid.
pub fn curvature_norm_at(profile: &RadialProfile, base: &BaseGeometry, rho: f64) -> Result<f64> {
    let h = profile.spacing();
    let margin = fd::BOUNDARY_MARGIN as f64 * h * (1.0 - 1e-9);
    if rho < profile.rho_min() + margin || rho > profile.rho_max() - margin {
        return Err(Error::TooCloseToBoundary { rho });
    }
    let norms = curvature_norm_profile(profile, base)?;
    // interpolate from trusted samples only
    let lo = fd::BOUNDARY_MARGIN;
    let hi = profile.len() - fd::BOUNDARY_MARGIN;
    let inner = &norms[lo..hi];
    if inner.len() < 4 {
        return Err(Error::GridTooCoarse { points: profile.len(), required: 4 + 2 * fd::BOUNDARY_MARGIN });
    }
    lagrange4_uniform(profile.rho_grid[lo], h, inner, rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cone(grid: &[f64], k: f64) -> RadialProfile {
        RadialProfile::from_fn(grid, |r| (r.exp() + k, r.exp())).unwrap()
    }

    #[test]
    fn potential_examples() {
        let g = uniform_grid(0.0, 2.0, 41).unwrap();
        let b = BaseGeometry::twisted(2, 2.0).unwrap();
        let p = profile_from_potential_fn(&g, &b, 0.0, |r| (r.exp(), r.exp())).unwrap();
        assert_eq!(p.phi(), p.psi());

        let cyl = BaseGeometry::untwisted(2, 0.5).unwrap();
        let c = 0.75;
        let pot: Vec<f64> = g.iter().map(|r| c * r * r).collect();
        let p = profile_from_potential(&g, &pot, &cyl, 1.0).unwrap();
        for i in 0..p.len() {
            assert!((p.phi()[i] - 1.0).abs() < 1e-15);
            assert!((p.psi()[i] - 2.0 * c).abs() < 1e-10);
        }
    }

    #[test]
    fn sampled_bulging_potential() {
        let nn = 2.0;
        let g = uniform_grid(1.0, 3.0, 201).unwrap();
        let b = BaseGeometry::twisted(2, 1.0).unwrap();
        let pot: Vec<f64> = g.iter().map(|r| (nn + 1.0) / 2.0 * r.powf((nn + 1.0) / nn)).collect();
        let p = profile_from_potential(&g, &pot, &b, 0.0).unwrap();
        for i in 2..p.len() - 2 {
            let r = g[i];
            let phi = (nn + 1.0).powi(2) / (2.0 * nn) * r.powf(1.0 / nn);
            let psi = (nn + 1.0).powi(2) / (2.0 * nn * nn) * r.powf((1.0 - nn) / nn);
            assert!((p.phi()[i] - phi).abs() < 1e-9);
            assert!((p.psi()[i] - psi).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let g = uniform_grid(0.0, 1.0, 5).unwrap();
        assert!(matches!(
            RadialProfile::new(g[..4].to_vec(), vec![1.0; 4], vec![1.0; 4]),
            Err(Error::GridTooCoarse { .. })
        ));
        assert!(matches!(
            RadialProfile::new(g.clone(), vec![1.0, 1.0, -1.0, 1.0, 1.0], vec![1.0; 5]),
            Err(Error::NonKaehler { which: "phi", .. })
        ));
        let bumpy = vec![0.0, 0.1, 0.25, 0.3, 0.4];
        assert!(RadialProfile::new(bumpy, vec![1.0; 5], vec![1.0; 5]).is_err());
        let cyl = BaseGeometry::untwisted(2, 0.0).unwrap();
        assert!(profile_from_potential_fn(&g, &cyl, 0.0, |_| (0.0, 1.0)).is_err());
        assert!(BaseGeometry::twisted(1, 1.0).is_err());
        assert!(BaseGeometry::new(2, 1.0, 2, 1).is_err());
    }

    #[test]
    fn ricci_examples() {
        let g = uniform_grid(0.0, 6.0, 121).unwrap();
        let p = cone(&g, 0.0);
        let flat = BaseGeometry::twisted(2, 2.0).unwrap();
        let ric = ricci_coefficients(&p, &flat).unwrap();
        assert!(ric.r_base.iter().chain(&ric.r_fiber).all(|v| v.abs() < 1e-10));
        let b3 = BaseGeometry::twisted(2, 3.0).unwrap();
        let ric = ricci_coefficients(&p, &b3).unwrap();
        assert!(ric.r_base.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let r = scalar_curvature(&p, &b3).unwrap();
        for i in 0..g.len() {
            assert!((r[i] - 2.0 * (-g[i]).exp()).abs() < 1e-12);
        }
        let cyl = BaseGeometry::untwisted(3, 1.7).unwrap();
        let pc = RadialProfile::from_fn(&g, |_| (1.0, 3.0)).unwrap();
        let ric = ricci_coefficients(&pc, &cyl).unwrap();
        assert!(ric.r_base.iter().all(|v| (v - 1.7).abs() < 1e-12));
        assert!(ric.r_fiber.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn ricci_trace_identities() {
        // A + m B = r_fiber/ψ and B + (m+1) c = r_base/φ
        let g = uniform_grid(1.0, 5.0, 401).unwrap();
        for (n, lambda) in [(2usize, 3.0), (3, 1.0), (4, -2.0)] {
            let b = BaseGeometry::twisted(n, lambda).unwrap();
            let p = RadialProfile::from_fn(&g, |r| (r.exp() + 0.3 * r, r.exp() + 0.3)).unwrap();
            let comps = curvature_components(&p, &b).unwrap();
            let ric = ricci_coefficients(&p, &b).unwrap();
            let m = b.m();
            for i in 2..g.len() - 2 {
                let c = comps[i];
                let lhs1 = c.radial + m * c.mixed;
                let lhs2 = c.mixed + (m + 1.0) * c.base;
                assert!((lhs1 - ric.r_fiber[i] / p.psi()[i]).abs() < 1e-7, "n={n} i={i}");
                assert!((lhs2 - ric.r_base[i] / p.phi()[i]).abs() < 1e-7, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn distances() {
        let g = uniform_grid(0.0, 8.0, 321).unwrap();
        let p = cone(&g, 0.0);
        let d = radial_distance(&p, 1.3, 7.1).unwrap();
        assert!((d - ((3.55f64).exp() - (0.65f64).exp())).abs() < 1e-8);
        let cum = cumulative_distance(&p);
        assert!((cum[320] - (4f64.exp() - 1.0)).abs() < 1e-7, "{}", cum[320] - (4f64.exp() - 1.0));
        let c = 0.8;
        let pc = RadialProfile::from_fn(&g, |_| (1.0, 2.0 * c)).unwrap();
        let d = radial_distance(&pc, 0.5, 6.0).unwrap();
        assert!((d - (c / 2.0f64).sqrt() * 5.5).abs() < 1e-12);
        assert!(radial_distance(&pc, 0.5, 9.0).is_err());
        assert!(radial_distance(&pc, 3.0, 2.0).is_err());
    }

    #[test]
    fn flat_curvature() {
        let g = uniform_grid(0.0, 8.0, 201).unwrap();
        let flat = BaseGeometry::twisted(2, 2.0).unwrap();
        let p = cone(&g, 0.0);
        assert!(curvature_norm_at(&p, &flat, 4.01).unwrap() < 1e-6);
        assert!(curvature_norm_at(&p, &flat, g[1]).is_err());
        let cyl = BaseGeometry::untwisted(2, 0.0).unwrap();
        let pc = RadialProfile::from_fn(&g, |_| (1.0, 2.0)).unwrap();
        assert!(curvature_norm_at(&pc, &cyl, 3.3).unwrap() < 1e-12);
    }

    #[test]
    fn csv_and_json_round_trip() {
        let g = uniform_grid(0.0, 1.0, 7).unwrap();
        let p = cone(&g, 0.5);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("rho,phi,psi\n"));
        let q = RadialProfile::read_csv(&buf[..]).unwrap();
        assert_eq!(p, q);
        let b = BaseGeometry::new(2, 3.0, 1, 3).unwrap();
        let js = p.to_json(&b).unwrap();
        let (b2, q2) = RadialProfile::from_json(&js).unwrap();
        assert_eq!(b, b2);
        assert_eq!(p, q2);
        assert_eq!(b.cone_label(), "C^2/Z_3");
    }
}
