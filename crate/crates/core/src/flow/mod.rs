//! Reduced Kähler-Ricci flow `∂_t ω = −Ric(ω)`.
//!
//! In coefficients, `∂_t φ = −r_base = −λ + μ·Q_ρ` and `∂_t ψ = −r_fiber =
//! Q_ρρ` with `Q = m·log φ + log ψ`. The end samples carry Dirichlet data
//! taken from the model ends; the interior uses the stencils of [`crate::fd`].

pub mod band;
mod potential;
mod soliton;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ansatz::{fmt_f64, ricci_coefficients, BaseGeometry, RadialProfile};
use crate::error::{Error, Result, SingularityKind};
use crate::fd;
use band::BandMatrix;

pub use potential::{evolve_potential, PotentialFlowState, PotentialTrajectory};
pub use soliton::{
    fiber_w_coefficients, soliton_profile_solve, soliton_residual, SolitonBranch, SolitonOptions,
    SolitonSolution,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "explicit_rk4", alias = "ExplicitRK4")]
    ExplicitRk4,
    #[serde(rename = "implicit_trapezoid", alias = "ImplicitTrapezoid")]
    ImplicitTrapezoid,
}

/// Far-field data imposed at the two end samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryKind {
    /// Hold the initial end values.
    #[serde(rename = "frozen_model", alias = "FrozenModel")]
    FrozenModel,
    /// Move the end values along `ω_0 − t·Ric(ω_0)`, which is how the model
    /// ends evolve.
    #[serde(rename = "drifting_model", alias = "DriftingModel")]
    DriftingModel,
    /// End values supplied by the caller through [`evolve_with_ends`].
    #[serde(rename = "prescribed", alias = "Prescribed")]
    Prescribed,
}

/// `(φ, ψ)` at the first and last grid sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndValues {
    pub inner: (f64, f64),
    pub outer: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowControls {
    pub scheme: Scheme,
    /// Fixed time step; `None` picks one from the stability bound.
    pub dt: Option<f64>,
    pub bc_kind: BoundaryKind,
    /// Times at which profiles are stored, besides 0 and the horizon.
    pub output_times: Vec<f64>,
    /// Collapse is reported once `φ` or `ψ` drops below this fraction of
    /// its initial minimum.
    pub floor_fraction: f64,
    pub inner_tolerance: f64,
    pub max_inner_iterations: usize,
    pub max_steps: usize,
}

impl Default for FlowControls {
    fn default() -> Self {
        FlowControls {
            scheme: Scheme::ExplicitRk4,
            dt: None,
            bc_kind: BoundaryKind::DriftingModel,
            output_times: Vec::new(),
            floor_fraction: 1e-6,
            inner_tolerance: 1e-10,
            max_inner_iterations: 40,
            max_steps: 50_000_000,
        }
    }
}

impl FlowControls {
    pub fn new(scheme: Scheme, bc_kind: BoundaryKind) -> Self {
        FlowControls { scheme, bc_kind, ..Default::default() }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_outputs(mut self, times: Vec<f64>) -> Self {
        self.output_times = times;
        self
    }

    fn validate(&self, horizon: f64) -> Result<()> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Unsupported(format!("horizon must be positive, got {horizon}")));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::Unsupported(format!("time step must be positive, got {dt}")));
            }
        }
        if !(self.floor_fraction > 0.0 && self.floor_fraction < 1.0) {
            return Err(Error::Unsupported(format!(
                "floor fraction must lie in (0, 1), got {}",
                self.floor_fraction
            )));
        }
        if !(self.inner_tolerance > 0.0) {
            return Err(Error::Unsupported("inner tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Sorted output times inside `(0, horizon]`, ending at the horizon.
    fn schedule(&self, horizon: f64) -> Vec<f64> {
        let mut out: Vec<f64> =
            self.output_times.iter().copied().filter(|&t| t > 0.0 && t < horizon).collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out.push(horizon);
        out
    }
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub base: BaseGeometry,
    pub times: Vec<f64>,
    pub profiles: Vec<RadialProfile>,
    pub scheme: Scheme,
    pub dt_history: Vec<f64>,
    pub bc_kind: BoundaryKind,
}

impl FlowTrajectory {
    pub fn last(&self) -> &RadialProfile {
        self.profiles.last().expect("trajectory holds the initial profile")
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("trajectory holds time 0")
    }

    /// Stored profile whose time equals `t` up to rounding.
    pub fn profile_at(&self, t: f64) -> Option<&RadialProfile> {
        let tol = 1e-12 * self.horizon().max(1.0);
        self.times.iter().position(|&s| (s - t).abs() <= tol).map(|i| &self.profiles[i])
    }

    /// Writes `slice_NNNN.csv` per stored time plus `index.csv`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        export_slices(dir, &self.times, &self.profiles)
    }
}

pub(crate) fn export_slices(dir: &Path, times: &[f64], profiles: &[RadialProfile]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut index = String::from("time,filename,min_psi,min_phi\n");
    for (k, (t, p)) in times.iter().zip(profiles).enumerate() {
        let name = format!("slice_{k:04}.csv");
        p.save_csv(&dir.join(&name))?;
        let min_psi = p.psi().iter().copied().fold(f64::INFINITY, f64::min);
        let min_phi = p.phi().iter().copied().fold(f64::INFINITY, f64::min);
        index.push_str(&format!("{},{},{},{}\n", fmt_f64(*t), name, fmt_f64(min_psi), fmt_f64(min_phi)));
    }
    let mut f = fs::File::create(dir.join("index.csv"))?;
    f.write_all(index.as_bytes())?;
    Ok(())
}

/// One field system advanced by the shared time loop.
pub(crate) trait Integrator {
    type Snapshot;
    fn stability_bound(&self) -> f64;
    fn explicit_step(&mut self, t: f64, dt: f64) -> Result<()>;
    /// Must leave the state untouched when it fails.
    fn implicit_step(&mut self, t: f64, dt: f64, tol: f64, max_iter: usize) -> Result<()>;
    fn check_floors(&self, t: f64) -> Result<()>;
    fn snapshot(&self, t: f64) -> Result<Self::Snapshot>;
}

pub(crate) struct Run<S> {
    pub times: Vec<f64>,
    pub snapshots: Vec<S>,
    pub dt_history: Vec<f64>,
}

const MAX_HALVINGS: usize = 5;
const AUTO_EXPLICIT_FRACTION: f64 = 0.9;
const AUTO_IMPLICIT_MULTIPLE: f64 = 20.0;

pub(crate) fn drive<I: Integrator>(sys: &mut I, horizon: f64, controls: &FlowControls) -> Result<Run<I::Snapshot>> {
    controls.validate(horizon)?;
    let explicit = controls.scheme == Scheme::ExplicitRk4;
    let mut run = Run { times: vec![0.0], snapshots: vec![sys.snapshot(0.0)?], dt_history: Vec::new() };
    let mut t = 0.0;
    let mut steps = 0usize;
    for target in controls.schedule(horizon) {
        while t < target {
            let bound = sys.stability_bound();
            let mut dt = match controls.dt {
                Some(d) => {
                    if explicit && d > bound * (1.0 + 1e-12) {
                        return Err(Error::StabilityViolation { dt: d, bound, time: t });
                    }
                    d
                }
                None if explicit => AUTO_EXPLICIT_FRACTION * bound,
                None => AUTO_IMPLICIT_MULTIPLE * bound,
            };
            let remaining = target - t;
            let mut landing = dt >= remaining * (1.0 - 1e-9);
            if landing {
                dt = remaining;
            }
            if explicit {
                sys.explicit_step(t, dt)?;
            } else {
                let mut halvings = 0;
                loop {
                    match sys.implicit_step(t, dt, controls.inner_tolerance, controls.max_inner_iterations) {
                        Ok(()) => break,
                        Err(Error::NoConvergence { .. }) if halvings < MAX_HALVINGS => {
                            dt *= 0.5;
                            landing = false;
                            halvings += 1;
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            t = if landing { target } else { t + dt };
            run.dt_history.push(dt);
            sys.check_floors(t)?;
            steps += 1;
            if steps > controls.max_steps {
                return Err(Error::NoConvergence { iterations: steps, residual: f64::NAN });
            }
        }
        run.times.push(target);
        run.snapshots.push(sys.snapshot(target)?);
    }
    Ok(run)
}

type EndFn = dyn Fn(f64) -> EndValues + Send + Sync;

/// Dirichlet data for the two end samples.
#[derive(Clone)]
pub(crate) enum EndData {
    Affine { phi0: [f64; 2], psi0: [f64; 2], dphi: [f64; 2], dpsi: [f64; 2] },
    Prescribed(Arc<EndFn>),
}

impl EndData {
    pub(crate) fn new(initial: &RadialProfile, base: &BaseGeometry, kind: BoundaryKind) -> Result<Self> {
        let n = initial.len();
        let phi0 = [initial.phi()[0], initial.phi()[n - 1]];
        let psi0 = [initial.psi()[0], initial.psi()[n - 1]];
        let (dphi, dpsi) = match kind {
            BoundaryKind::FrozenModel => ([0.0; 2], [0.0; 2]),
            BoundaryKind::DriftingModel => {
                let ric = ricci_coefficients(initial, base)?;
                ([-ric.r_base[0], -ric.r_base[n - 1]], [-ric.r_fiber[0], -ric.r_fiber[n - 1]])
            }
            BoundaryKind::Prescribed => {
                return Err(Error::Unsupported("prescribed end values need evolve_with_ends".into()))
            }
        };
        Ok(EndData::Affine { phi0, psi0, dphi, dpsi })
    }

    #[inline]
    pub(crate) fn apply(&self, t: f64, phi: &mut [f64], psi: &mut [f64]) {
        let n = phi.len();
        match self {
            EndData::Affine { phi0, psi0, dphi, dpsi } => {
                for (e, i) in [0, n - 1].into_iter().enumerate() {
                    phi[i] = phi0[e] + t * dphi[e];
                    psi[i] = psi0[e] + t * dpsi[e];
                }
            }
            EndData::Prescribed(f) => {
                let v = f(t);
                (phi[0], psi[0]) = v.inner;
                (phi[n - 1], psi[n - 1]) = v.outer;
            }
        }
    }
}

pub(crate) fn first_nonpositive(v: &[f64]) -> Option<usize> {
    v.iter().position(|x| !(*x > 0.0))
}

fn argmin(v: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &x) in v.iter().enumerate() {
        if x < best.1 {
            best = (i, x);
        }
    }
    best
}

pub(crate) fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Reports collapse below the floors, or non-finite samples.
pub(crate) fn floor_check(rho: &[f64], phi: &[f64], psi: &[f64], floors: (f64, f64), t: f64) -> Result<()> {
    if let Some(i) = phi.iter().zip(psi).position(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::Singularity { time: t, location: rho[i], kind: SingularityKind::GradientBlowup });
    }
    let (ip, vp) = argmin(phi);
    let (is, vs) = argmin(psi);
    if vs < floors.1 {
        return Err(Error::Singularity { time: t, location: rho[is], kind: SingularityKind::PsiCollapse });
    }
    if vp < floors.0 {
        return Err(Error::Singularity { time: t, location: rho[ip], kind: SingularityKind::PhiCollapse });
    }
    Ok(())
}

/// Coefficient-form system on the interior samples.
struct CoefficientSystem {
    rho: Vec<f64>,
    h: f64,
    m: f64,
    mu: f64,
    lambda: f64,
    ends: EndData,
    floors: (f64, f64),
    phi: Vec<f64>,
    psi: Vec<f64>,
    q: Vec<f64>,
    k: [Vec<f64>; 8],
    stage_phi: Vec<f64>,
    stage_psi: Vec<f64>,
}

impl CoefficientSystem {
    /// Right-hand side into slot pair `slot` of `k`; end entries are left at 0.
    fn rhs(&mut self, which: Stage, t: f64, slot: usize) -> Result<()> {
        let (phi, psi) = match which {
            Stage::Current => (&self.phi, &self.psi),
            Stage::Trial => (&self.stage_phi, &self.stage_psi),
        };
        let n = phi.len();
        for i in 0..n {
            if !(phi[i] > 0.0) || !(psi[i] > 0.0) {
                let kind = if phi[i].is_nan() || psi[i].is_nan() {
                    SingularityKind::GradientBlowup
                } else if !(psi[i] > 0.0) {
                    SingularityKind::PsiCollapse
                } else {
                    SingularityKind::PhiCollapse
                };
                return Err(Error::Singularity { time: t, location: self.rho[i], kind });
            }
            self.q[i] = self.m * phi[i].ln() + psi[i].ln();
        }
        let (h, h2) = (self.h, self.h * self.h);
        let q = &self.q;
        let (kp, ks) = self.k[2 * slot..2 * slot + 2].split_at_mut(1);
        let (dphi, dpsi) = (&mut kp[0], &mut ks[0]);
        dphi[0] = 0.0;
        dpsi[0] = 0.0;
        dphi[n - 1] = 0.0;
        dpsi[n - 1] = 0.0;
        for i in 1..n - 1 {
            dphi[i] = -self.lambda + self.mu * fd::d1_stencil(n, i).apply(q, i, h);
            dpsi[i] = fd::d2_stencil(n, i).apply(q, i, h2);
        }
        Ok(())
    }

    fn set_stage(&mut self, t: f64, dt: f64, kp: usize, ks: usize) {
        let n = self.phi.len();
        for i in 1..n - 1 {
            self.stage_phi[i] = self.phi[i] + dt * self.k[kp][i];
            self.stage_psi[i] = self.psi[i] + dt * self.k[ks][i];
        }
        self.ends.apply(t, &mut self.stage_phi, &mut self.stage_psi);
    }

    /// `∂f/∂y` for the interleaved interior unknowns, scaled by `scale`, added to `jac`.
    fn add_jacobian(&self, phi: &[f64], psi: &[f64], scale: f64, jac: &mut BandMatrix) {
        let n = phi.len();
        let (h, h2) = (self.h, self.h * self.h);
        for i in 1..n - 1 {
            let row = 2 * (i - 1);
            let s1 = fd::d1_stencil(n, i);
            for (o, w) in s1.offsets.iter().zip(s1.weights) {
                let j = (i as isize + o) as usize;
                if j == 0 || j == n - 1 {
                    continue;
                }
                let c = scale * self.mu * w / (s1.denom * h);
                if c != 0.0 {
                    jac.add(row, 2 * (j - 1), c * self.m / phi[j]);
                    jac.add(row, 2 * (j - 1) + 1, c / psi[j]);
                }
            }
            let s2 = fd::d2_stencil(n, i);
            for (o, w) in s2.offsets.iter().zip(s2.weights) {
                let j = (i as isize + o) as usize;
                if j == 0 || j == n - 1 {
                    continue;
                }
                let c = scale * w / (s2.denom * h2);
                jac.add(row + 1, 2 * (j - 1), c * self.m / phi[j]);
                jac.add(row + 1, 2 * (j - 1) + 1, c / psi[j]);
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Stage {
    Current,
    Trial,
}

impl Integrator for CoefficientSystem {
    type Snapshot = RadialProfile;

    fn stability_bound(&self) -> f64 {
        let n = self.psi.len();
        0.5 * self.h * self.h * min_of(&self.psi[1..n - 1])
    }

    fn explicit_step(&mut self, t: f64, dt: f64) -> Result<()> {
        let n = self.phi.len();
        self.rhs(Stage::Current, t, 0)?;
        self.set_stage(t + 0.5 * dt, 0.5 * dt, 0, 1);
        self.rhs(Stage::Trial, t + 0.5 * dt, 1)?;
        self.set_stage(t + 0.5 * dt, 0.5 * dt, 2, 3);
        self.rhs(Stage::Trial, t + 0.5 * dt, 2)?;
        self.set_stage(t + dt, dt, 4, 5);
        self.rhs(Stage::Trial, t + dt, 3)?;
        let k = &self.k;
        for i in 1..n - 1 {
            self.phi[i] += dt / 6.0 * (k[0][i] + 2.0 * k[2][i] + 2.0 * k[4][i] + k[6][i]);
            self.psi[i] += dt / 6.0 * (k[1][i] + 2.0 * k[3][i] + 2.0 * k[5][i] + k[7][i]);
        }
        self.ends.apply(t + dt, &mut self.phi, &mut self.psi);
        Ok(())
    }

    fn implicit_step(&mut self, t: f64, dt: f64, tol: f64, max_iter: usize) -> Result<()> {
        let n = self.phi.len();
        let unknowns = 2 * (n - 2);
        self.rhs(Stage::Current, t, 0)?;
        // forward Euler predictor, falling back to the old state if it leaves the cone
        self.set_stage(t + dt, dt, 0, 1);
        if first_nonpositive(&self.stage_phi).is_some() || first_nonpositive(&self.stage_psi).is_some() {
            self.stage_phi.copy_from_slice(&self.phi);
            self.stage_psi.copy_from_slice(&self.psi);
            self.ends.apply(t + dt, &mut self.stage_phi, &mut self.stage_psi);
        }
        let mut last = f64::INFINITY;
        for _ in 0..max_iter {
            if self.rhs(Stage::Trial, t + dt, 1).is_err() {
                return Err(Error::NoConvergence { iterations: 0, residual: f64::INFINITY });
            }
            let mut res = vec![0.0; unknowns];
            let mut norm: f64 = 0.0;
            for i in 1..n - 1 {
                let fp = self.stage_phi[i] - self.phi[i] - 0.5 * dt * (self.k[0][i] + self.k[2][i]);
                let fs = self.stage_psi[i] - self.psi[i] - 0.5 * dt * (self.k[1][i] + self.k[3][i]);
                res[2 * (i - 1)] = -fp;
                res[2 * (i - 1) + 1] = -fs;
                norm = norm.max(fp.abs() / self.stage_phi[i].abs().max(1.0));
                norm = norm.max(fs.abs() / self.stage_psi[i].abs().max(1.0));
            }
            if !norm.is_finite() {
                break;
            }
            last = norm;
            if norm <= tol {
                std::mem::swap(&mut self.phi, &mut self.stage_phi);
                std::mem::swap(&mut self.psi, &mut self.stage_psi);
                return Ok(());
            }
            let mut jac = BandMatrix::zeros(unknowns, 5, 5);
            for r in 0..unknowns {
                jac.add(r, r, 1.0);
            }
            self.add_jacobian(&self.stage_phi, &self.stage_psi, -0.5 * dt, &mut jac);
            jac.solve(&mut res)?;
            let mut alpha = 1.0;
            let positive = |a: f64, sp: &[f64], ss: &[f64]| {
                (1..n - 1).all(|i| {
                    sp[i] + a * res[2 * (i - 1)] > 0.0 && ss[i] + a * res[2 * (i - 1) + 1] > 0.0
                })
            };
            let mut tries = 0;
            while !positive(alpha, &self.stage_phi, &self.stage_psi) {
                alpha *= 0.5;
                tries += 1;
                if tries > 30 {
                    return Err(Error::NoConvergence { iterations: 0, residual: last });
                }
            }
            for i in 1..n - 1 {
                self.stage_phi[i] += alpha * res[2 * (i - 1)];
                self.stage_psi[i] += alpha * res[2 * (i - 1) + 1];
            }
        }
        Err(Error::NoConvergence { iterations: max_iter, residual: last })
    }

    fn check_floors(&self, t: f64) -> Result<()> {
        floor_check(&self.rho, &self.phi, &self.psi, self.floors, t)
    }

    fn snapshot(&self, _t: f64) -> Result<RadialProfile> {
        RadialProfile::new(self.rho.clone(), self.phi.clone(), self.psi.clone())
    }
}

/// Evolves `initial` by the reduced flow up to `horizon`.
///
/// Profiles are stored at time 0, at each requested output time and at the
/// horizon; the step before each of these is shortened to land on it.
pub fn evolve(
    initial: &RadialProfile,
    base: &BaseGeometry,
    horizon: f64,
    controls: &FlowControls,
) -> Result<FlowTrajectory> {
    base.validate()?;
    let ends = EndData::new(initial, base, controls.bc_kind)?;
    evolve_inner(initial, base, horizon, controls, ends, controls.bc_kind)
}

/// [`evolve`] with end values given as a function of time. `controls.bc_kind`
/// is ignored; the values at time 0 must match the initial end samples.
pub fn evolve_with_ends(
    initial: &RadialProfile,
    base: &BaseGeometry,
    horizon: f64,
    controls: &FlowControls,
    ends: impl Fn(f64) -> EndValues + Send + Sync + 'static,
) -> Result<FlowTrajectory> {
    base.validate()?;
    let n = initial.len();
    let v = ends(0.0);
    let given = [v.inner.0, v.inner.1, v.outer.0, v.outer.1];
    let have = [initial.phi()[0], initial.psi()[0], initial.phi()[n - 1], initial.psi()[n - 1]];
    for (g, h) in given.iter().zip(&have) {
        if !((g - h).abs() <= 1e-9 * h.abs()) {
            return Err(Error::Unsupported(format!("end values {given:?} at t = 0 differ from the initial profile {have:?}")));
        }
    }
    evolve_inner(initial, base, horizon, controls, EndData::Prescribed(Arc::new(ends)), BoundaryKind::Prescribed)
}

fn evolve_inner(
    initial: &RadialProfile,
    base: &BaseGeometry,
    horizon: f64,
    controls: &FlowControls,
    ends: EndData,
    bc_kind: BoundaryKind,
) -> Result<FlowTrajectory> {
    let n = initial.len();
    let floors = (
        controls.floor_fraction * min_of(initial.phi()),
        controls.floor_fraction * min_of(initial.psi()),
    );
    let mut sys = CoefficientSystem {
        rho: initial.rho_grid().to_vec(),
        h: initial.spacing(),
        m: base.m(),
        mu: base.mu_f(),
        lambda: base.lambda,
        ends,
        floors,
        phi: initial.phi().to_vec(),
        psi: initial.psi().to_vec(),
        q: vec![0.0; n],
        k: std::array::from_fn(|_| vec![0.0; n]),
        stage_phi: initial.phi().to_vec(),
        stage_psi: initial.psi().to_vec(),
    };
    let mut run = drive(&mut sys, horizon, controls)?;
    run.snapshots[0] = initial.clone();
    Ok(FlowTrajectory {
        base: *base,
        times: run.times,
        profiles: run.snapshots,
        scheme: controls.scheme,
        dt_history: run.dt_history,
        bc_kind,
    })
}

/// How far a time family of profiles is from solving the flow at time `t`.
///
/// The time derivative uses the four-point central difference with step
/// `delta`; the result is the largest relative defect
/// `√(m·((∂_tφ + r_base)/φ)² + ((∂_tψ + r_fiber)/ψ)²)` over trusted samples.
pub fn flow_equation_residual(
    family: impl Fn(f64) -> Result<RadialProfile>,
    base: &BaseGeometry,
    t: f64,
    delta: f64,
) -> Result<f64> {
    if !(delta > 0.0) || !(t - 2.0 * delta > 0.0) {
        return Err(Error::Unsupported(format!("need 0 < 2·delta < t, got t = {t}, delta = {delta}")));
    }
    let here = family(t)?;
    let nodes = [-2.0, -1.0, 1.0, 2.0].map(|k| family(t + k * delta));
    let [a, b, c, d] = nodes;
    let (a, b, c, d) = (a?, b?, c?, d?);
    for p in [&a, &b, &c, &d] {
        if p.rho_grid() != here.rho_grid() {
            return Err(Error::LatticeMismatch("family changes its grid in time".into()));
        }
    }
    let ric = ricci_coefficients(&here, base)?;
    let m = base.m();
    let ddt = |f: fn(&RadialProfile) -> &[f64], i: usize| {
        (f(&a)[i] - 8.0 * f(&b)[i] + 8.0 * f(&c)[i] - f(&d)[i]) / (12.0 * delta)
    };
    let mut worst: f64 = 0.0;
    for i in 0..here.len() {
        if !ric.trusted[i] {
            continue;
        }
        let eb = (ddt(RadialProfile::phi, i) + ric.r_base[i]) / here.phi()[i];
        let ef = (ddt(RadialProfile::psi, i) + ric.r_fiber[i]) / here.psi()[i];
        worst = worst.max((m * eb * eb + ef * ef).sqrt());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;
