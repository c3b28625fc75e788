//! Potential form: `ω = ω_0 − t·Ric(ω_0) + √−1∂∂̄u` with
//! `∂_t u = m·log(φ/φ_0) + log(ψ/ψ_0)` and `u(·, 0) = 0`.
//!
//! The end samples carry the same boundary data as the coefficient form, and
//! `u` there follows its equation with those values inserted. The two
//! semi-discretizations then coincide, so any difference between
//! [`evolve`](super::evolve) and [`evolve_potential`] is rounding.

use std::path::Path;

use super::band::BandMatrix;
use super::{
    drive, export_slices, floor_check, min_of, BoundaryKind, EndData, FlowControls, Integrator, Scheme,
};
use crate::ansatz::{ricci_coefficients, BaseGeometry, RadialProfile};
use crate::error::{Error, Result, SingularityKind};
use crate::fd;

/// Reference metric `ω_t` and potential `u` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialFlowState {
    pub time: f64,
    pub rho_grid: Vec<f64>,
    /// `ω_0 − t·Ric(ω_0)` at interior samples, boundary data at the ends.
    pub phi_ref: Vec<f64>,
    pub psi_ref: Vec<f64>,
    pub u: Vec<f64>,
    pub mu: f64,
}

impl PotentialFlowState {
    /// `φ = φ_t + μ·u_ρ`, `ψ = ψ_t + u_ρρ` at interior samples.
    pub fn profile(&self) -> Result<RadialProfile> {
        let (phi, psi) = reconstruct(&self.phi_ref, &self.psi_ref, &self.u, self.mu, spacing(&self.rho_grid));
        RadialProfile::new(self.rho_grid.clone(), phi, psi)
    }
}

fn spacing(g: &[f64]) -> f64 {
    (g[g.len() - 1] - g[0]) / (g.len() - 1) as f64
}

fn reconstruct(phi_ref: &[f64], psi_ref: &[f64], u: &[f64], mu: f64, h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = u.len();
    let mut phi = phi_ref.to_vec();
    let mut psi = psi_ref.to_vec();
    for i in 1..n - 1 {
        phi[i] += mu * fd::d1_at(u, h, i);
        psi[i] += fd::d2_at(u, h, i);
    }
    (phi, psi)
}

#[derive(Debug, Clone)]
pub struct PotentialTrajectory {
    pub base: BaseGeometry,
    pub times: Vec<f64>,
    pub states: Vec<PotentialFlowState>,
    pub scheme: Scheme,
    pub dt_history: Vec<f64>,
    pub bc_kind: BoundaryKind,
}

impl PotentialTrajectory {
    pub fn profiles(&self) -> Result<Vec<RadialProfile>> {
        self.states.iter().map(PotentialFlowState::profile).collect()
    }

    pub fn last(&self) -> &PotentialFlowState {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn export(&self, dir: &Path) -> Result<()> {
        export_slices(dir, &self.times, &self.profiles()?)
    }
}

struct PotentialSystem {
    rho: Vec<f64>,
    h: f64,
    m: f64,
    mu: f64,
    phi0: Vec<f64>,
    psi0: Vec<f64>,
    dphi: Vec<f64>,
    dpsi: Vec<f64>,
    ends: EndData,
    floors: (f64, f64),
    time: f64,
    u: Vec<f64>,
    k: [Vec<f64>; 4],
    stage: Vec<f64>,
}

impl PotentialSystem {
    fn references(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let mut phi: Vec<f64> = self.phi0.iter().zip(&self.dphi).map(|(a, d)| a + t * d).collect();
        let mut psi: Vec<f64> = self.psi0.iter().zip(&self.dpsi).map(|(a, d)| a + t * d).collect();
        self.ends.apply(t, &mut phi, &mut psi);
        (phi, psi)
    }

    fn metric(&self, u: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
        let (pr, sr) = self.references(t);
        reconstruct(&pr, &sr, u, self.mu, self.h)
    }

    #[inline]
    fn log_ratio(&self, phi: f64, psi: f64, i: usize) -> f64 {
        let a = ((phi - self.phi0[i]) / self.phi0[i]).ln_1p();
        let b = ((psi - self.psi0[i]) / self.psi0[i]).ln_1p();
        self.m * a + b
    }

    fn rhs(&mut self, trial: bool, t: f64, slot: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let u = if trial { &self.stage } else { &self.u };
        let (phi, psi) = self.metric(u, t);
        for i in 0..phi.len() {
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
        }
        let vals: Vec<f64> = (0..phi.len()).map(|i| self.log_ratio(phi[i], psi[i], i)).collect();
        self.k[slot].copy_from_slice(&vals);
        Ok((phi, psi))
    }

    fn set_stage(&mut self, dt: f64, slot: usize) {
        for i in 0..self.u.len() {
            self.stage[i] = self.u[i] + dt * self.k[slot][i];
        }
    }
}

impl Integrator for PotentialSystem {
    type Snapshot = PotentialFlowState;

    fn stability_bound(&self) -> f64 {
        let n = self.u.len();
        let (_, psi) = self.metric(&self.u, self.time);
        0.5 * self.h * self.h * min_of(&psi[1..n - 1])
    }

    fn explicit_step(&mut self, t: f64, dt: f64) -> Result<()> {
        self.rhs(false, t, 0)?;
        self.set_stage(0.5 * dt, 0);
        self.rhs(true, t + 0.5 * dt, 1)?;
        self.set_stage(0.5 * dt, 1);
        self.rhs(true, t + 0.5 * dt, 2)?;
        self.set_stage(dt, 2);
        self.rhs(true, t + dt, 3)?;
        let k = &self.k;
        for i in 0..self.u.len() {
            self.u[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        self.time = t + dt;
        Ok(())
    }

    fn implicit_step(&mut self, t: f64, dt: f64, tol: f64, max_iter: usize) -> Result<()> {
        let n = self.u.len();
        let unknowns = n - 2;
        self.rhs(false, t, 0)?;
        self.set_stage(dt, 0);
        if self.rhs(true, t + dt, 1).is_err() {
            self.stage.copy_from_slice(&self.u);
        }
        // the end values of u do not depend on u
        let (pe, se) = self.references(t + dt);
        for i in [0, n - 1] {
            let f1 = self.log_ratio(pe[i], se[i], i);
            self.stage[i] = self.u[i] + 0.5 * dt * (self.k[0][i] + f1);
        }
        let (h, h2) = (self.h, self.h * self.h);
        let mut last = f64::INFINITY;
        for _ in 0..max_iter {
            let (phi, psi) = match self.rhs(true, t + dt, 1) {
                Ok(v) => v,
                Err(_) => return Err(Error::NoConvergence { iterations: 0, residual: last }),
            };
            let mut res = vec![0.0; unknowns];
            let mut norm: f64 = 0.0;
            for i in 1..n - 1 {
                let f = self.stage[i] - self.u[i] - 0.5 * dt * (self.k[0][i] + self.k[1][i]);
                res[i - 1] = -f;
                norm = norm.max(f.abs() / self.stage[i].abs().max(1.0));
            }
            if !norm.is_finite() {
                break;
            }
            last = norm;
            if norm <= tol {
                std::mem::swap(&mut self.u, &mut self.stage);
                self.time = t + dt;
                return Ok(());
            }
            let mut jac = BandMatrix::zeros(unknowns, 2, 2);
            for i in 1..n - 1 {
                jac.add(i - 1, i - 1, 1.0);
                let s1 = fd::d1_stencil(n, i);
                for (o, w) in s1.offsets.iter().zip(s1.weights) {
                    let j = (i as isize + o) as usize;
                    if j != 0 && j != n - 1 {
                        let d = self.m * self.mu * w / (s1.denom * h * phi[i]);
                        jac.add(i - 1, j - 1, -0.5 * dt * d);
                    }
                }
                let s2 = fd::d2_stencil(n, i);
                for (o, w) in s2.offsets.iter().zip(s2.weights) {
                    let j = (i as isize + o) as usize;
                    if j != 0 && j != n - 1 {
                        let d = w / (s2.denom * h2 * psi[i]);
                        jac.add(i - 1, j - 1, -0.5 * dt * d);
                    }
                }
            }
            jac.solve(&mut res)?;
            // shrink the update until the reconstructed metric stays positive
            let mut alpha = 1.0;
            let start: Vec<f64> = self.stage.clone();
            let mut accepted = false;
            for _ in 0..30 {
                for i in 1..n - 1 {
                    self.stage[i] = start[i] + alpha * res[i - 1];
                }
                let (p, s) = self.metric(&self.stage, t + dt);
                if p.iter().all(|v| *v > 0.0) && s.iter().all(|v| *v > 0.0) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                return Err(Error::NoConvergence { iterations: 0, residual: last });
            }
        }
        Err(Error::NoConvergence { iterations: max_iter, residual: last })
    }

    fn check_floors(&self, t: f64) -> Result<()> {
        let (phi, psi) = self.metric(&self.u, t);
        floor_check(&self.rho, &phi, &psi, self.floors, t)
    }

    fn snapshot(&self, t: f64) -> Result<PotentialFlowState> {
        let (phi_ref, psi_ref) = self.references(t);
        Ok(PotentialFlowState {
            time: t,
            rho_grid: self.rho.clone(),
            phi_ref,
            psi_ref,
            u: self.u.clone(),
            mu: self.mu,
        })
    }
}

/// Evolves the potential `u` instead of the coefficients.
///
/// The reference `ω_0 − t·Ric(ω_0)` is computed once from the initial
/// profile.
pub fn evolve_potential(
    initial: &RadialProfile,
    base: &BaseGeometry,
    horizon: f64,
    controls: &FlowControls,
) -> Result<PotentialTrajectory> {
    base.validate()?;
    let n = initial.len();
    let ric = ricci_coefficients(initial, base)?;
    let mut sys = PotentialSystem {
        rho: initial.rho_grid().to_vec(),
        h: initial.spacing(),
        m: base.m(),
        mu: base.mu_f(),
        phi0: initial.phi().to_vec(),
        psi0: initial.psi().to_vec(),
        dphi: ric.r_base.iter().map(|r| -r).collect(),
        dpsi: ric.r_fiber.iter().map(|r| -r).collect(),
        ends: EndData::new(initial, base, controls.bc_kind)?,
        floors: (
            controls.floor_fraction * min_of(initial.phi()),
            controls.floor_fraction * min_of(initial.psi()),
        ),
        time: 0.0,
        u: vec![0.0; n],
        k: std::array::from_fn(|_| vec![0.0; n]),
        stage: vec![0.0; n],
    };
    let run = drive(&mut sys, horizon, controls)?;
    Ok(PotentialTrajectory {
        base: *base,
        times: run.times,
        states: run.snapshots,
        scheme: controls.scheme,
        dt_history: run.dt_history,
        bc_kind: controls.bc_kind,
    })
}
