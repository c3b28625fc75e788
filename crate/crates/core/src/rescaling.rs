//! Parabolic rescalings of trajectories and convergence to their limits.
//!
//! Bulging ends use the anisotropic rescaling `ω_r(t) = r^{−2/N}·α_r^*ω(r^{2/N}t)`.
//! With a complex coordinate `u` on the cylinder and `ρ = 2·Im u`, the chart
//! map `α_r(u) = r·u + √−1·r²/2` acts on the radial variable as
//! `ρ = r² + r·ρ̂`. Since `dρ = r·dρ̂`, the fiber slot picks up `r²`:
//!
//! ```text
//! φ̂(ρ̂, t̂) = r^{−2/N}·φ(r² + r·ρ̂, r^{2/N}·t̂)
//! ψ̂(ρ̂, t̂) = r^{2−2/N}·ψ(r² + r·ρ̂, r^{2/N}·t̂)
//! ```
//!
//! On the bulging model `φ̂ → (N+1)²/(2N)` and `ψ̂ → (N+1)²/(2N²)`, the
//! product of a flat plane with the divisor.
//!
//! Conical ends use the dilation `s^{−2}·g(s²t)`. It moves the radial
//! variable by `ρ = ρ̂ + 2·log s` and divides both slots by `s²`:
//!
//! ```text
//! φ̂(ρ̂, t̂) = s^{−2}·φ(ρ̂ + 2 log s, s²·t̂)
//! ψ̂(ρ̂, t̂) = s^{−2}·ψ(ρ̂ + 2 log s, s²·t̂)
//! ```
//!
//! Both dictionaries send grid nodes to grid nodes of a uniform lattice, so
//! the rescaled samples are exact copies of stored samples; nothing is
//! interpolated.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ansatz::{fmt_f64, RadialProfile};
use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::models::bulging_coefficients;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescaleRegime {
    Bulging,
    Conical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescalingSpec {
    pub regime: RescaleRegime,
    /// `r` for bulging ends, `s` for conical ones.
    pub scale: f64,
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub n_exp: Option<f64>,
    /// Window in the rescaled radial variable.
    pub rho_window: (f64, f64),
    /// Window in rescaled time.
    pub time_window: (f64, f64),
}

impl RescalingSpec {
    pub fn bulging(r: f64, n_exp: f64, rho_window: (f64, f64), time_window: (f64, f64)) -> Self {
        RescalingSpec { regime: RescaleRegime::Bulging, scale: r, n_exp: Some(n_exp), rho_window, time_window }
    }

    pub fn conical(s: f64, rho_window: (f64, f64), time_window: (f64, f64)) -> Self {
        RescalingSpec { regime: RescaleRegime::Conical, scale: s, n_exp: None, rho_window, time_window }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale >= 1.0) || !self.scale.is_finite() {
            return Err(Error::Unsupported(format!("rescaling factor must be at least 1, got {}", self.scale)));
        }
        if self.regime == RescaleRegime::Bulging {
            match self.n_exp {
                Some(n) if n > 0.0 && n.is_finite() => {}
                _ => return Err(Error::InvalidRegime("bulging rescaling needs a positive `N`".into())),
            }
        }
        let (a, b) = self.rho_window;
        let (t0, t1) = self.time_window;
        if !(a < b) || !(t0 <= t1) || !(t0 >= 0.0) || ![a, b, t0, t1].iter().all(|v| v.is_finite()) {
            return Err(Error::Unsupported(format!(
                "empty rescaling window: rho {:?}, time {:?}",
                self.rho_window, self.time_window
            )));
        }
        Ok(())
    }

    /// Real time per unit of rescaled time.
    pub fn time_factor(&self) -> f64 {
        match self.regime {
            RescaleRegime::Bulging => self.scale.powf(2.0 / self.n_exp.unwrap_or(1.0)),
            RescaleRegime::Conical => self.scale * self.scale,
        }
    }

    /// Real ρ of the rescaled coordinate `rho_hat`.
    pub fn source_rho(&self, rho_hat: f64) -> f64 {
        let s = self.scale;
        match self.regime {
            RescaleRegime::Bulging => s * s + s * rho_hat,
            RescaleRegime::Conical => rho_hat + 2.0 * s.ln(),
        }
    }

    fn rescaled_rho(&self, rho: f64) -> f64 {
        let s = self.scale;
        match self.regime {
            RescaleRegime::Bulging => (rho - s * s) / s,
            RescaleRegime::Conical => rho - 2.0 * s.ln(),
        }
    }

    /// Factors applied to `(φ, ψ)`.
    fn slot_factors(&self) -> (f64, f64) {
        let s = self.scale;
        match self.regime {
            RescaleRegime::Bulging => {
                let a = s.powf(-2.0 / self.n_exp.unwrap_or(1.0));
                (a, a * s * s)
            }
            RescaleRegime::Conical => (1.0 / (s * s), 1.0 / (s * s)),
        }
    }
}

/// Rescaled slices on a common `ρ̂` lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledTrajectory {
    pub spec: RescalingSpec,
    /// Rescaled times.
    pub times: Vec<f64>,
    pub profiles: Vec<RadialProfile>,
}

impl RescaledTrajectory {
    /// Applies a further rescaling to these samples, treating them as a
    /// trajectory in their own right.
    pub fn rescale(&self, spec: &RescalingSpec) -> Result<RescaledTrajectory> {
        rescale_slices(&self.times, &self.profiles, spec)
    }

    pub fn rho_hat(&self) -> &[f64] {
        self.profiles[0].rho_grid()
    }
}

pub fn bulging_rescale(traj: &FlowTrajectory, spec: &RescalingSpec) -> Result<RescaledTrajectory> {
    if spec.regime != RescaleRegime::Bulging {
        return Err(Error::Unsupported("bulging_rescale needs a bulging spec".into()));
    }
    rescale_slices(&traj.times, &traj.profiles, spec)
}

pub fn conical_blowdown(traj: &FlowTrajectory, spec: &RescalingSpec) -> Result<RescaledTrajectory> {
    if spec.regime != RescaleRegime::Conical {
        return Err(Error::Unsupported("conical_blowdown needs a conical spec".into()));
    }
    rescale_slices(&traj.times, &traj.profiles, spec)
}

fn rescale_slices(times: &[f64], profiles: &[RadialProfile], spec: &RescalingSpec) -> Result<RescaledTrajectory> {
    spec.validate()?;
    let first = profiles.first().ok_or_else(|| Error::LatticeMismatch("no stored profiles".into()))?;
    let grid = first.rho_grid();
    if profiles.iter().any(|p| p.rho_grid() != grid) {
        return Err(Error::LatticeMismatch("stored profiles use different grids".into()));
    }
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let factor = spec.time_factor();
    let needed = spec.time_window.1 * factor;
    if needed > horizon * (1.0 + 1e-12) + 1e-300 {
        return Err(Error::HorizonExceeded { needed, available: horizon });
    }

    let (a, b) = spec.rho_window;
    let (lo_src, hi_src) = (spec.source_rho(a), spec.source_rho(b));
    let tol = 1e-9 * first.spacing();
    if lo_src < first.rho_min() - tol || hi_src > first.rho_max() + tol {
        return Err(Error::WindowOutsideGrid(format!(
            "rho_hat in [{a}, {b}] needs rho in [{lo_src}, {hi_src}], grid covers [{}, {}]",
            first.rho_min(),
            first.rho_max()
        )));
    }
    let (lo, hi) = first.window_indices(lo_src.max(first.rho_min()), hi_src.min(first.rho_max()))?;
    let rho_hat: Vec<f64> = grid[lo..=hi].iter().map(|&r| spec.rescaled_rho(r)).collect();
    let (fp, fs) = spec.slot_factors();

    let ttol = 1e-12 * horizon.max(1.0);
    let mut out_times = Vec::new();
    let mut out_profiles = Vec::new();
    for (t, p) in times.iter().zip(profiles) {
        let th = t / factor;
        if th < spec.time_window.0 - ttol / factor || th > spec.time_window.1 + ttol / factor {
            continue;
        }
        let phi = p.phi()[lo..=hi].iter().map(|v| fp * v).collect();
        let psi = p.psi()[lo..=hi].iter().map(|v| fs * v).collect();
        out_times.push(th);
        out_profiles.push(RadialProfile::new(rho_hat.clone(), phi, psi)?);
    }
    if out_times.is_empty() {
        return Err(Error::LatticeMismatch(format!(
            "no stored time falls in the rescaled window {:?}",
            spec.time_window
        )));
    }
    Ok(RescaledTrajectory { spec: *spec, times: out_times, profiles: out_profiles })
}

/// Deviation of one rescaled slice from the product limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitErrorRow {
    pub scale: f64,
    pub time: f64,
    /// Largest relative deviation of `φ̂` or `ψ̂` from the limit pair.
    pub sup_error: f64,
    /// Root mean square of the same relative deviations.
    pub l2_error: f64,
    /// Mean of `φ̂` over the window.
    pub fitted_coefficient: f64,
}

/// Compares bulging-rescaled samples with the product of a flat plane and
/// the divisor evolving by `divisor_law`: the limit pair at rescaled time `t`
/// is `(c_φ·divisor_law(t), c_ψ)` with `(c_φ, c_ψ)` the bulging coefficients.
pub fn product_limit_error(
    samples: &RescaledTrajectory,
    n_exp: f64,
    divisor_law: impl Fn(f64) -> f64,
) -> Result<Vec<LimitErrorRow>> {
    let grid = samples
        .profiles
        .first()
        .ok_or_else(|| Error::LatticeMismatch("no rescaled slices".into()))?
        .rho_grid();
    if samples.times.len() != samples.profiles.len() || samples.profiles.iter().any(|p| p.rho_grid() != grid) {
        return Err(Error::LatticeMismatch("rescaled slices do not share one lattice".into()));
    }
    let (cp, cs) = bulging_coefficients(n_exp);
    samples
        .times
        .iter()
        .zip(&samples.profiles)
        .map(|(&t, p)| {
            let target_phi = cp * divisor_law(t);
            if !(target_phi > 0.0) {
                return Err(Error::NotApplicable(format!("divisor law is not positive at t = {t}")));
            }
            let mut sup: f64 = 0.0;
            let mut sq = 0.0;
            for (f, s) in p.phi().iter().zip(p.psi()) {
                let ef = (f - target_phi) / target_phi;
                let es = (s - cs) / cs;
                sup = sup.max(ef.abs()).max(es.abs());
                sq += ef * ef + es * es;
            }
            let k = p.len() as f64;
            Ok(LimitErrorRow {
                scale: samples.spec.scale,
                time: t,
                sup_error: sup,
                l2_error: (sq / (2.0 * k)).sqrt(),
                fitted_coefficient: p.phi().iter().sum::<f64>() / k,
            })
        })
        .collect()
}

pub fn write_limit_csv<W: Write>(rows: &[LimitErrorRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["scale", "time", "sup_error", "l2_error", "fitted_coefficient"])?;
    for r in rows {
        wr.write_record([
            fmt_f64(r.scale),
            fmt_f64(r.time),
            fmt_f64(r.sup_error),
            fmt_f64(r.l2_error),
            fmt_f64(r.fitted_coefficient),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
