//! Power-law decay of curvature along trajectories.
//!
//! Exponents are least-squares slopes of `log|Q|` against `log d`, where `d`
//! is radial distance. By default `d` is measured in the initial metric; the
//! first grid sample sits at distance [`DecayOptions::anchor`] from the
//! basepoint, which the model ends know in closed form (see
//! [`model_inner_distance`]).

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ansatz::{
    cumulative_distance, curvature_norm_profile, fmt_f64, ricci_norm_profile, scalar_curvature, BaseGeometry,
    RadialProfile,
};
use crate::error::{Error, Result};
use crate::fd;
use crate::fit::fit_line;
use crate::flow::{evolve, FlowControls, FlowTrajectory};
use crate::models::{RegimeKind, RegimeSpec};

/// Minimum number of samples in a fit window.
pub const MIN_FIT_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayQuantity {
    RicciNorm,
    ScalarCurv,
    RmNorm,
    /// `|d^k|Rm|/ds^k|` with `s` the radial arc length.
    CovDerivRm(u8),
}

impl DecayQuantity {
    /// Derivative order; sets both the boundary margin and the scaling weight.
    fn order(self) -> usize {
        match self {
            DecayQuantity::CovDerivRm(k) => k as usize,
            _ => 0,
        }
    }
}

impl fmt::Display for DecayQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecayQuantity::RicciNorm => f.write_str("ricci_norm"),
            DecayQuantity::ScalarCurv => f.write_str("scalar_curv"),
            DecayQuantity::RmNorm => f.write_str("rm_norm"),
            DecayQuantity::CovDerivRm(k) => write!(f, "cov_deriv_rm_{k}"),
        }
    }
}

/// Which metric measures distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceClock {
    /// The metric at time 0.
    Initial,
    /// The metric at the time of the fit.
    Current,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayOptions {
    /// Distance from the basepoint to the first grid sample.
    pub anchor: f64,
    pub clock: DistanceClock,
    /// A quantity counts as zero when `|Q|·φ^{1+k/2}` stays below this on the
    /// window, `k` being the derivative order. The weight makes the test
    /// invariant under scaling of the metric.
    pub flat_tolerance: f64,
    /// Largest admissible change of the exponent in a preservation check.
    pub max_drift: f64,
    /// Smallest admissible `r²` in a preservation check.
    pub min_r2: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions { anchor: 0.0, clock: DistanceClock::Initial, flat_tolerance: 1e-8, max_drift: 0.05, min_r2: 0.99 }
    }
}

/// Distance from the basepoint to `ρ = rho_min` for the model ends: the cone
/// apex for conical and FIK ends (`e^{ρ/2}`), the locus `ρ = 0` for bulging
/// ends (`ρ^{(N+1)/2N}/√2`), and 0 for cylinders.
pub fn model_inner_distance(spec: &RegimeSpec, rho_min: f64) -> Result<f64> {
    spec.validate()?;
    Ok(match spec.kind {
        RegimeKind::Cylindrical => 0.0,
        RegimeKind::Conical | RegimeKind::Fik => (0.5 * rho_min).exp(),
        RegimeKind::Bulging => {
            if !(rho_min >= 0.0) {
                return Err(Error::GridNotPositive { rho_min });
            }
            let n = spec.n_exp.unwrap_or(1.0);
            rho_min.powf((n + 1.0) / (2.0 * n)) / std::f64::consts::SQRT_2
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub quantity: DecayQuantity,
    pub time: f64,
    /// Distance interval of the fit.
    pub fit_window: (f64, f64),
    pub exponent: f64,
    pub r2: f64,
    /// `(distance, value)` pairs entering the fit.
    pub samples: Vec<(f64, f64)>,
}

/// Unsigned samples of `quantity` and the number of low-order samples at each end.
pub fn quantity_profile(profile: &RadialProfile, base: &BaseGeometry, quantity: DecayQuantity) -> Result<(Vec<f64>, usize)> {
    let margin = fd::BOUNDARY_MARGIN;
    Ok(match quantity {
        DecayQuantity::RicciNorm => (ricci_norm_profile(profile, base)?, margin),
        DecayQuantity::ScalarCurv => (scalar_curvature(profile, base)?.iter().map(|v| v.abs()).collect(), margin),
        DecayQuantity::RmNorm => (curvature_norm_profile(profile, base)?, margin),
        DecayQuantity::CovDerivRm(k) => {
            let h = profile.spacing();
            // d/ds = (2/√ψ)·d/dρ
            let speed: Vec<f64> = profile.psi().iter().map(|s| 2.0 / s.sqrt()).collect();
            let mut g = curvature_norm_profile(profile, base)?;
            for _ in 0..k {
                g = fd::d1(&g, h).iter().zip(&speed).map(|(d, v)| d * v).collect();
            }
            let k = k as usize;
            if profile.len() < 2 * (margin + 2 * k) + MIN_FIT_SAMPLES {
                return Err(Error::GridTooCoarse { points: profile.len(), required: 2 * (margin + 2 * k) + MIN_FIT_SAMPLES });
            }
            (g.into_iter().map(f64::abs).collect(), margin + 2 * k)
        }
    })
}

/// Distance of every grid sample from the basepoint.
pub fn sample_distances(profile: &RadialProfile, anchor: f64) -> Vec<f64> {
    cumulative_distance(profile).into_iter().map(|d| d + anchor).collect()
}

/// Default window: the outer third of the grid, minus the boundary margin,
/// expressed in distances.
pub fn default_fit_window(distances: &[f64]) -> (f64, f64) {
    let n = distances.len();
    let lo = (2 * n).div_ceil(3).min(n - 1);
    let hi = n.saturating_sub(1 + fd::BOUNDARY_MARGIN).max(lo);
    (distances[lo], distances[hi])
}

/// Fits the decay exponent of one profile against the given sample distances.
pub fn fit_profile_decay(
    profile: &RadialProfile,
    base: &BaseGeometry,
    distances: &[f64],
    quantity: DecayQuantity,
    time: f64,
    fit_window: (f64, f64),
    flat_tolerance: f64,
) -> Result<DecayReport> {
    let n = profile.len();
    if distances.len() != n {
        return Err(Error::LatticeMismatch("one distance per grid sample required".into()));
    }
    let (lo, hi) = fit_window;
    if !(lo > 0.0 && lo < hi) || lo < distances[0] || hi > distances[n - 1] {
        return Err(Error::OutOfRange { lo, hi, grid_lo: distances[0], grid_hi: distances[n - 1] });
    }
    let (values, margin) = quantity_profile(profile, base, quantity)?;
    let weight = 1.0 + 0.5 * quantity.order() as f64;
    let inside: Vec<usize> = (margin..n - margin).filter(|&i| distances[i] >= lo && distances[i] <= hi).collect();
    if inside.len() < MIN_FIT_SAMPLES {
        return Err(Error::WindowTooSmall { samples: inside.len(), required: MIN_FIT_SAMPLES });
    }
    let scaled_max = inside
        .iter()
        .map(|&i| values[i] * profile.phi()[i].powf(weight))
        .fold(0.0, f64::max);
    if scaled_max <= flat_tolerance {
        return Err(Error::AllZeroQuantity);
    }
    let samples: Vec<(f64, f64)> =
        inside.iter().map(|&i| (distances[i], values[i])).filter(|(_, v)| *v > 0.0).collect();
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::WindowTooSmall { samples: samples.len(), required: MIN_FIT_SAMPLES });
    }
    let x: Vec<f64> = samples.iter().map(|(d, _)| d.ln()).collect();
    let y: Vec<f64> = samples.iter().map(|(_, v)| v.ln()).collect();
    let line = fit_line(&x, &y).ok_or(Error::WindowTooSmall { samples: samples.len(), required: MIN_FIT_SAMPLES })?;
    Ok(DecayReport { quantity, time, fit_window, exponent: line.slope, r2: line.r2, samples })
}

/// Decay exponent of `quantity` on the stored profile at `time`.
pub fn fit_decay_exponent(
    traj: &FlowTrajectory,
    quantity: DecayQuantity,
    time: f64,
    fit_window: (f64, f64),
    options: &DecayOptions,
) -> Result<DecayReport> {
    let profile = stored(traj, time)?;
    let reference = match options.clock {
        DistanceClock::Initial => &traj.profiles[0],
        DistanceClock::Current => profile,
    };
    let d = sample_distances(reference, options.anchor);
    fit_profile_decay(profile, &traj.base, &d, quantity, time, fit_window, options.flat_tolerance)
}

fn stored(traj: &FlowTrajectory, time: f64) -> Result<&RadialProfile> {
    if time > traj.horizon() * (1.0 + 1e-12) {
        return Err(Error::HorizonExceeded { needed: time, available: traj.horizon() });
    }
    traj.profile_at(time)
        .ok_or_else(|| Error::LatticeMismatch(format!("no stored profile at t = {time}")))
}

/// One time of a preservation check. `report` is `None` when the quantity
/// vanishes on the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub time: f64,
    pub report: Option<DecayReport>,
}

impl DecayRow {
    pub fn is_flat(&self) -> bool {
        self.report.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreservationReport {
    pub quantity: DecayQuantity,
    pub fit_window: (f64, f64),
    /// Time 0 first, then the requested times.
    pub rows: Vec<DecayRow>,
    /// Largest `|exponent(t) − exponent(0)|`; 0 when every row is flat and
    /// infinite when flat and non-flat rows are mixed.
    pub max_drift: f64,
    pub min_r2: f64,
    pub pass: bool,
}

/// Checks that the decay exponent at each of `times` stays within
/// `options.max_drift` of its initial value with `r² ≥ options.min_r2`.
pub fn decay_preservation_check(
    traj: &FlowTrajectory,
    quantity: DecayQuantity,
    times: &[f64],
    fit_window: (f64, f64),
    options: &DecayOptions,
) -> Result<PreservationReport> {
    let mut all = vec![0.0];
    all.extend(times.iter().copied().filter(|&t| t != 0.0));
    let rows = all
        .iter()
        .map(|&t| match fit_decay_exponent(traj, quantity, t, fit_window, options) {
            Ok(r) => Ok(DecayRow { time: t, report: Some(r) }),
            Err(Error::AllZeroQuantity) => Ok(DecayRow { time: t, report: None }),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let flats = rows.iter().filter(|r| r.is_flat()).count();
    let (max_drift, min_r2) = if flats == rows.len() {
        (0.0, 1.0)
    } else if flats > 0 {
        (f64::INFINITY, 0.0)
    } else {
        let e0 = rows[0].report.as_ref().map(|r| r.exponent).unwrap_or(f64::NAN);
        let reports = rows.iter().filter_map(|r| r.report.as_ref());
        let drift = reports.clone().map(|r| (r.exponent - e0).abs()).fold(0.0, f64::max);
        let r2 = reports.map(|r| r.r2).fold(1.0, f64::min);
        (drift, r2)
    };
    let pass = max_drift <= options.max_drift && min_r2 >= options.min_r2;
    Ok(PreservationReport { quantity, fit_window, rows, max_drift, min_r2, pass })
}

/// CSV `quantity,time,window_lo,window_hi,exponent,r2`; flat rows carry
/// `flat` in the exponent column and an empty `r2`.
pub fn write_decay_csv<W: Write>(report: &PreservationReport, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["quantity", "time", "window_lo", "window_hi", "exponent", "r2"])?;
    let q = report.quantity.to_string();
    let (lo, hi) = (fmt_f64(report.fit_window.0), fmt_f64(report.fit_window.1));
    for row in &report.rows {
        let (e, r2) = match &row.report {
            Some(r) => (fmt_f64(r.exponent), fmt_f64(r.r2)),
            None => ("flat".to_string(), String::new()),
        };
        wr.write_record([q.clone(), fmt_f64(row.time), lo.clone(), hi.clone(), e, r2])?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauRow {
    pub horizon: f64,
    /// `sup max(φ_t/φ_0, φ_0/φ_t, ψ_t/ψ_0, ψ_0/ψ_t)` over the ball and `t ≤ T`.
    pub c1: f64,
    /// `sup |Rm|` over the ball and `t ≤ T`.
    pub sup_rm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauReport {
    pub ball_window: (f64, f64),
    pub rows: Vec<PlateauRow>,
    /// Relative increase of `sup |Rm|` from the second-largest to the largest horizon.
    pub growth: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlateauOptions {
    /// Largest biLipschitz constant for which the check applies.
    pub c1_max: f64,
    /// Largest admissible relative growth of `sup |Rm|`.
    pub max_growth: f64,
    /// Stored times per unit time; the suprema over `t ≤ T` run over these.
    pub samples_per_unit_time: usize,
    pub controls: FlowControls,
}

impl Default for PlateauOptions {
    fn default() -> Self {
        PlateauOptions { c1_max: 10.0, max_growth: 0.05, samples_per_unit_time: 8, controls: FlowControls::default() }
    }
}

/// Output times for a plateau run up to `horizon`.
pub fn plateau_output_times(horizons: &[f64], samples_per_unit_time: usize) -> Vec<f64> {
    let top = horizons.iter().copied().fold(0.0, f64::max);
    let k = (top * samples_per_unit_time.max(1) as f64).ceil() as usize;
    let mut out: Vec<f64> = (1..=k).map(|i| top * i as f64 / k as f64).collect();
    out.extend_from_slice(horizons);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Evolves `initial` to the largest horizon and runs [`plateau_from_trajectory`].
pub fn bilipschitz_plateau_check(
    initial: &RadialProfile,
    base: &BaseGeometry,
    horizons: &[f64],
    ball_window: (f64, f64),
    options: &PlateauOptions,
) -> Result<PlateauReport> {
    let top = horizons.iter().copied().fold(0.0, f64::max);
    let controls = options.controls.clone().with_outputs(plateau_output_times(horizons, options.samples_per_unit_time));
    let traj = evolve(initial, base, top, &controls)?;
    plateau_from_trajectory(&traj, horizons, ball_window, options)
}

/// Measures the biLipschitz constant and `sup |Rm|` on the ρ-interval
/// `ball_window` for each horizon, using every stored time up to it.
pub fn plateau_from_trajectory(
    traj: &FlowTrajectory,
    horizons: &[f64],
    ball_window: (f64, f64),
    options: &PlateauOptions,
) -> Result<PlateauReport> {
    if horizons.len() < 2 {
        return Err(Error::Unsupported("the plateau check needs at least two horizons".into()));
    }
    let mut hs = horizons.to_vec();
    hs.sort_by(f64::total_cmp);
    let top = hs[hs.len() - 1];
    if top > traj.horizon() * (1.0 + 1e-12) {
        return Err(Error::HorizonExceeded { needed: top, available: traj.horizon() });
    }
    let p0 = &traj.profiles[0];
    let (lo, hi) = p0.window_indices(ball_window.0, ball_window.1)?;
    let n = p0.len();
    let (lo, hi) = (lo.max(fd::BOUNDARY_MARGIN), hi.min(n - 1 - fd::BOUNDARY_MARGIN));
    if lo > hi {
        return Err(Error::TooCloseToBoundary { rho: ball_window.0 });
    }
    // running suprema at each stored time
    let mut per_time = Vec::with_capacity(traj.times.len());
    let (mut c1, mut rm) = (1.0f64, 0.0f64);
    for p in &traj.profiles {
        let norms = curvature_norm_profile(p, &traj.base)?;
        for i in lo..=hi {
            let a = p.phi()[i] / p0.phi()[i];
            let b = p.psi()[i] / p0.psi()[i];
            c1 = c1.max(a).max(1.0 / a).max(b).max(1.0 / b);
            rm = rm.max(norms[i]);
        }
        per_time.push((c1, rm));
    }
    let tol = 1e-12 * traj.horizon().max(1.0);
    let rows: Vec<PlateauRow> = hs
        .iter()
        .map(|&t| {
            let k = traj.times.iter().rposition(|&s| s <= t + tol).unwrap_or(0);
            PlateauRow { horizon: t, c1: per_time[k].0, sup_rm: per_time[k].1 }
        })
        .collect();
    if let Some(r) = rows.iter().find(|r| r.c1 > options.c1_max) {
        return Err(Error::NotApplicable(format!(
            "biLipschitz constant {} exceeds {} by T = {}",
            r.c1, options.c1_max, r.horizon
        )));
    }
    let (prev, last) = (rows[rows.len() - 2].sup_rm, rows[rows.len() - 1].sup_rm);
    let growth = if prev > 0.0 { (last - prev) / prev } else if last > 0.0 { f64::INFINITY } else { 0.0 };
    Ok(PlateauReport { ball_window, rows, growth, pass: growth <= options.max_growth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::uniform_grid;
    use crate::flow::{BoundaryKind, Scheme};
    use crate::models::{make_bulging, make_conical};

    fn static_traj(base: &BaseGeometry, profiles: Vec<RadialProfile>, times: Vec<f64>) -> FlowTrajectory {
        FlowTrajectory {
            base: *base,
            times,
            profiles,
            scheme: Scheme::ExplicitRk4,
            dt_history: Vec::new(),
            bc_kind: BoundaryKind::FrozenModel,
        }
    }

    #[test]
    fn conical_ricci_decays_quadratically() {
        let base = BaseGeometry::twisted(2, 3.0).unwrap();
        let g = uniform_grid(0.0, 14.0, 1024).unwrap();
        let p = make_conical(0.0, &base, &g).unwrap();
        let d = sample_distances(&p, (0.0f64).exp());
        // cone distance from the apex is e^{ρ/2}
        for i in (0..g.len()).step_by(97) {
            assert!((d[i] - (0.5 * g[i]).exp()).abs() < 1e-8 * d[i], "{i}");
        }
        let r = fit_profile_decay(&p, &base, &d, DecayQuantity::RicciNorm, 0.0, (20.0, 1000.0), 1e-8).unwrap();
        assert!((r.exponent + 2.0).abs() < 1e-6, "{r:?}");
        let r1 = fit_profile_decay(&p, &base, &d, DecayQuantity::CovDerivRm(1), 0.0, (20.0, 1000.0), 1e-8).unwrap();
        let r2 = fit_profile_decay(&p, &base, &d, DecayQuantity::CovDerivRm(2), 0.0, (20.0, 1000.0), 1e-8).unwrap();
        assert!((r1.exponent + 3.0).abs() < 1e-3 && (r2.exponent + 4.0).abs() < 1e-3, "{r1:?} {r2:?}");
    }

    #[test]
    fn flat_cone_is_flagged() {
        let base = BaseGeometry::twisted(2, 2.0).unwrap();
        let g = uniform_grid(0.0, 12.0, 512).unwrap();
        let p = make_conical(0.0, &base, &g).unwrap();
        let d = sample_distances(&p, 1.0);
        for q in [DecayQuantity::RicciNorm, DecayQuantity::ScalarCurv, DecayQuantity::RmNorm, DecayQuantity::CovDerivRm(1)] {
            let e = fit_profile_decay(&p, &base, &d, q, 0.0, (10.0, 300.0), 1e-8);
            assert_eq!(e, Err(Error::AllZeroQuantity), "{q}");
        }
        let tr = static_traj(&base, vec![p.clone(), p], vec![0.0, 1.0]);
        let rep = decay_preservation_check(&tr, DecayQuantity::RmNorm, &[1.0], (10.0, 300.0), &DecayOptions::default()).unwrap();
        assert!(rep.pass && rep.rows.iter().all(DecayRow::is_flat));
    }

    #[test]
    fn scaling_values_leaves_exponent_unchanged() {
        let base = BaseGeometry::twisted(2, 1.0).unwrap();
        let g = uniform_grid(10.0, 2000.0, 1024).unwrap();
        let p = make_bulging(2.0, &base, &g).unwrap();
        let d = sample_distances(&p, 10f64.powf(0.75) / 2f64.sqrt());
        let r = fit_profile_decay(&p, &base, &d, DecayQuantity::RmNorm, 0.0, (20.0, 200.0), 1e-8).unwrap();
        let scaled: Vec<f64> = d.iter().map(|x| 3.0 * x).collect();
        let rs = fit_profile_decay(&p, &base, &scaled, DecayQuantity::RmNorm, 0.0, (60.0, 600.0), 1e-8).unwrap();
        assert!((r.exponent - rs.exponent).abs() < 1e-12);
        assert!((r.exponent + 2.0 / 3.0).abs() < 0.05 * 2.0 / 3.0, "{r:?}");
    }

    #[test]
    fn small_windows_are_rejected() {
        let base = BaseGeometry::twisted(2, 3.0).unwrap();
        let g = uniform_grid(0.0, 10.0, 101).unwrap();
        let p = make_conical(0.0, &base, &g).unwrap();
        let d = sample_distances(&p, 1.0);
        let e = fit_profile_decay(&p, &base, &d, DecayQuantity::RmNorm, 0.0, (100.0, 105.0), 1e-8);
        assert!(matches!(e, Err(Error::WindowTooSmall { .. })), "{e:?}");
        let (lo, hi) = default_fit_window(&d);
        assert!(lo < hi && hi < d[100]);
    }

    #[test]
    fn injected_bump_fails_preservation() {
        let base = BaseGeometry::twisted(2, 3.0).unwrap();
        let g = uniform_grid(0.0, 12.0, 512).unwrap();
        let p = make_conical(1.0, &base, &g).unwrap();
        let bumped = RadialProfile::from_fn(&g, |r| {
            let b = 1.0 + 0.5 * (-(r - 10.0) * (r - 10.0)).exp();
            (r.exp() + 1.0, r.exp() * b)
        })
        .unwrap();
        let tr = static_traj(&base, vec![p.clone(), bumped], vec![0.0, 1.0]);
        let d = sample_distances(&p, 1.0);
        let w = (d[200], d[500]);
        let rep = decay_preservation_check(&tr, DecayQuantity::RmNorm, &[1.0], w, &DecayOptions::default()).unwrap();
        assert!(!rep.pass, "{:?} {}", rep.max_drift, rep.min_r2);
        let tr = static_traj(&base, vec![p.clone(), p], vec![0.0, 1.0]);
        assert!(decay_preservation_check(&tr, DecayQuantity::RmNorm, &[1.0], w, &DecayOptions::default()).unwrap().pass);
    }

    #[test]
    fn static_plateau_and_violated_hypothesis() {
        let base = BaseGeometry::twisted(2, 3.0).unwrap();
        let g = uniform_grid(0.0, 8.0, 161).unwrap();
        let p = make_conical(0.0, &base, &g).unwrap();
        let tr = static_traj(&base, vec![p.clone(); 3], vec![0.0, 1.0, 2.0]);
        let rep = plateau_from_trajectory(&tr, &[1.0, 2.0], (2.0, 6.0), &PlateauOptions::default()).unwrap();
        assert!(rep.pass && rep.rows[0].c1 == 1.0 && rep.growth == 0.0);
        let grown = RadialProfile::from_fn(&g, |r| (20.0 * r.exp(), 20.0 * r.exp())).unwrap();
        let tr = static_traj(&base, vec![p, grown.clone(), grown], vec![0.0, 1.0, 2.0]);
        let e = plateau_from_trajectory(&tr, &[1.0, 2.0], (2.0, 6.0), &PlateauOptions::default());
        assert!(matches!(e, Err(Error::NotApplicable(_))), "{e:?}");
    }

    #[test]
    fn model_distances() {
        let d = model_inner_distance(&RegimeSpec::bulging(2.0), 16.0).unwrap();
        assert!((d - 8.0 / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(model_inner_distance(&RegimeSpec::conical(0.0), 0.0).unwrap(), 1.0);
    }
}
