//! Scenario runners. Each one reads the resolved config, writes its CSVs
//! through [`Artifacts`] and returns the verdicts.

use std::collections::BTreeMap;

use krf_core::ansatz::fmt_f64;
use krf_core::decay::{
    decay_preservation_check, default_fit_window, model_inner_distance, plateau_from_trajectory,
    plateau_output_times, sample_distances, write_decay_csv, DecayOptions, DecayQuantity, PlateauOptions,
};
use krf_core::fit::{fit_basis, fit_line};
use krf_core::flow::{
    evolve, evolve_with_ends, fiber_w_coefficients, flow_equation_residual, soliton_profile_solve, BoundaryKind,
    FlowControls, FlowTrajectory, Scheme, SolitonSolution,
};
use krf_core::models::{
    asymptotic_form_residual, bulging_coefficients, make_bulging, make_conical, make_cylindrical, make_fik,
    RegimeKind,
};
use krf_core::rescaling::{
    bulging_rescale, conical_blowdown, product_limit_error, write_limit_csv, RescaledTrajectory, RescalingSpec,
};
use krf_core::series::{
    blowdown, flow_expand, gradient_identity_residual, gradient_potential, int, rat, rational_from_decimal,
    soliton_expand, soliton_residual_at, Rational, TimePoly,
};
use krf_core::{curvature_norm_profile, ricci_coefficients, scalar_curvature, BaseGeometry, RadialProfile};
use num_traits::{ToPrimitive, Zero};
use serde_json::json;

use crate::config::{ConfigError, ExperimentConfig, Preset};
use crate::report::{Artifacts, RunError, Summary, Verdict};

/// What a run executes: a preset's full scenario or one module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Preset(Preset),
    Soliton,
    Flow,
    Blowdown,
    Decay,
}

impl Scenario {
    pub fn name(self) -> String {
        match self {
            Scenario::Preset(p) => p.name().to_string(),
            Scenario::Soliton => "soliton".into(),
            Scenario::Flow => "flow".into(),
            Scenario::Blowdown => "blowdown".into(),
            Scenario::Decay => "decay".into(),
        }
    }
}

type Res<T> = Result<T, RunError>;

fn config_err(path: &str, msg: impl Into<String>) -> RunError {
    RunError::Config(ConfigError::new(path, msg))
}

pub fn execute(cfg: &ExperimentConfig, scenario: Scenario, art: &mut Artifacts) -> Res<Summary> {
    let mut s = Summary::new(&scenario.name());
    match scenario {
        Scenario::Preset(Preset::FlatCone) => flat_cone(cfg, art, &mut s)?,
        Scenario::Preset(Preset::CylinderSplit | Preset::BulgingPreserve | Preset::ConicalPreserve)
        | Scenario::Flow => flow_checks(cfg, art, &mut s, true, true)?,
        Scenario::Preset(Preset::DecayAppendix) | Scenario::Decay => flow_checks(cfg, art, &mut s, false, true)?,
        Scenario::Preset(Preset::BulgingBlowdown) | Scenario::Blowdown => rescaling_checks(cfg, art, &mut s)?,
        Scenario::Preset(Preset::ConicalSoliton) => {
            soliton_checks(cfg, art, &mut s)?;
            rescaling_checks(cfg, art, &mut s)?;
        }
        Scenario::Soliton => soliton_checks(cfg, art, &mut s)?,
        Scenario::Preset(Preset::FikSelfsimilar) => fik_checks(cfg, art, &mut s)?,
        Scenario::Preset(Preset::BilipschitzPlateau) => plateau_checks(cfg, art, &mut s)?,
    }
    Ok(s)
}

fn sup_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn numeric_soliton(cfg: &ExperimentConfig, base: &BaseGeometry) -> Res<SolitonSolution> {
    Ok(soliton_profile_solve(base, 1.0, &cfg.analysis.soliton.numeric)?)
}

fn initial_profile(cfg: &ExperimentConfig) -> Res<RadialProfile> {
    let grid = cfg.grid_points();
    let r = &cfg.regime;
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| config_err(&format!("regime.{name}"), "missing"));
    let p = match r.kind {
        RegimeKind::Cylindrical => make_cylindrical(need(r.c, "c")?, need(r.a, "a")?, &cfg.base, &grid)?,
        RegimeKind::Bulging => make_bulging(need(r.n_exp, "N")?, &cfg.base, &grid)?,
        RegimeKind::Conical => make_conical(need(r.k_log, "k_log")?, &cfg.base, &grid)?,
        RegimeKind::Fik => {
            let sol = numeric_soliton(cfg, &cfg.base)?;
            let (p, b) = fik_data(&sol, need(r.p, "p")?)?;
            make_fik(p, need(r.t0, "t0")?, &b, &cfg.base, &grid)?
        }
    };
    Ok(p)
}

fn fik_data(sol: &SolitonSolution, p_config: f64) -> Res<(f64, krf_core::models::FikFunction)> {
    let (p, b) = match (sol.p, &sol.fik) {
        (Some(p), Some(b)) => (p, b.clone()),
        _ => return Err(config_err("base.lambda", "the self-similar family needs lambda > 0")),
    };
    if (p - p_config).abs() > 1e-12 * p {
        return Err(config_err("regime.p", format!("must equal n/lambda = {p} for this base")));
    }
    Ok((p, b))
}

/// Evolves with the configured controls, storing `extra` times as well.
fn run_flow(cfg: &ExperimentConfig, init: &RadialProfile, horizon: f64, extra: &[f64]) -> Res<FlowTrajectory> {
    let mut outputs = cfg.flow.output_times.clone();
    outputs.extend_from_slice(extra);
    outputs.sort_by(f64::total_cmp);
    outputs.dedup();
    let mut ctl = FlowControls::new(cfg.flow.scheme, cfg.flow.bc_kind).with_outputs(outputs);
    ctl.dt = cfg.flow.dt;
    if cfg.flow.bc_kind == BoundaryKind::Prescribed {
        if !(cfg.regime.kind == RegimeKind::Conical && cfg.regime.k_log == Some(0.0)) {
            return Err(config_err(
                "flow.bc_kind",
                "prescribed ends come from the self-similar flow of the cone; use a conical regime with k_log = 0",
            ));
        }
        let sol = numeric_soliton(cfg, &cfg.base)?;
        let ends = sol.self_similar_ends(cfg.grid.rho_min, cfg.grid.rho_max, horizon)?;
        return Ok(evolve_with_ends(init, &cfg.base, horizon, &ctl, ends)?);
    }
    Ok(evolve(init, &cfg.base, horizon, &ctl)?)
}

fn profile_csv(p: &RadialProfile) -> Res<Vec<u8>> {
    let mut buf = Vec::new();
    p.write_csv(&mut buf)?;
    Ok(buf)
}

fn export_slices(art: &mut Artifacts, dir: &str, times: &[f64], profiles: &[RadialProfile]) -> Res<()> {
    let mut index = String::from("time,filename,min_psi,min_phi\n");
    for (k, (t, p)) in times.iter().zip(profiles).enumerate() {
        let name = format!("slice_{k:04}.csv");
        art.write(&format!("{dir}/{name}"), &profile_csv(p)?)?;
        let min_psi = p.psi().iter().copied().fold(f64::INFINITY, f64::min);
        let min_phi = p.phi().iter().copied().fold(f64::INFINITY, f64::min);
        index.push_str(&format!("{},{},{},{}\n", fmt_f64(*t), name, fmt_f64(min_psi), fmt_f64(min_phi)));
    }
    art.write(&format!("{dir}/index.csv"), index.as_bytes())
}

fn flat_cone(cfg: &ExperimentConfig, art: &mut Artifacts, s: &mut Summary) -> Res<()> {
    let tol = &cfg.analysis.tolerances;
    let cone = initial_profile(cfg)?;
    let ric = ricci_coefficients(&cone, &cfg.base)?;
    let scal = scalar_curvature(&cone, &cfg.base)?;
    let rm = curvature_norm_profile(&cone, &cfg.base)?;
    let rows: Vec<Vec<f64>> = (0..cone.len())
        .map(|i| vec![cone.rho_grid()[i], ric.r_base[i], ric.r_fiber[i], scal[i], rm[i]])
        .collect();
    art.write_table("curvature.csv", &["rho", "r_base", "r_fiber", "scalar", "rm_norm"], &rows)?;
    let curv = rows.iter().flat_map(|r| r[1..].iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    s.push(Verdict::at_most(
        "curvature_zero",
        curv,
        tol.curvature,
        "Ricci coefficients, scalar curvature and |Rm| of the initial cone vanish",
    ));

    let traj = run_flow(cfg, &cone, cfg.flow.horizon, &[])?;
    export_slices(art, "trajectory", &traj.times, &traj.profiles)?;
    let drifts: Vec<Vec<f64>> = traj
        .times
        .iter()
        .zip(&traj.profiles)
        .map(|(t, p)| vec![*t, sup_abs(p.phi(), cone.phi()).max(sup_abs(p.psi(), cone.psi()))])
        .collect();
    art.write_table("drift.csv", &["time", "sup_drift"], &drifts)?;
    let drift = drifts.iter().map(|r| r[1]).fold(0.0, f64::max);
    s.push(Verdict::at_most("stationary", drift, tol.stationary, "the flow leaves the cone unchanged"));
    Ok(())
}

fn flow_checks(cfg: &ExperimentConfig, art: &mut Artifacts, s: &mut Summary, asymptotics: bool, decay: bool) -> Res<()> {
    let init = initial_profile(cfg)?;
    let decay_times = if decay { cfg.analysis.decay.times.clone() } else { Vec::new() };
    if let Some(t) = decay_times.iter().find(|&&t| t > cfg.flow.horizon) {
        return Err(config_err("analysis.decay.times", format!("time {t} lies past the flow horizon")));
    }
    let traj = run_flow(cfg, &init, cfg.flow.horizon, &decay_times)?;
    export_slices(art, "trajectory", &traj.times, &traj.profiles)?;
    if asymptotics {
        match cfg.regime.kind {
            RegimeKind::Cylindrical => cylinder_checks(cfg, &traj, art, s)?,
            RegimeKind::Bulging | RegimeKind::Conical => {
                if let Some(window) = cfg.analysis.asymptotics.window {
                    regime_fit_checks(cfg, &traj, window, art, s)?;
                }
            }
            RegimeKind::Fik => {}
        }
    }
    if decay {
        decay_checks(cfg, &init, &traj, art, s)?;
    }
    if s.verdicts.is_empty() {
        s.push(Verdict::holds("flow_completed", true, "the flow reached the horizon without a singularity"));
    }
    Ok(())
}

fn cylinder_checks(cfg: &ExperimentConfig, traj: &FlowTrajectory, art: &mut Artifacts, s: &mut Summary) -> Res<()> {
    let tol = cfg.analysis.tolerances.cylinder;
    let (c, a) = (cfg.regime.c.unwrap_or(f64::NAN), cfg.regime.a.unwrap_or(f64::NAN));
    let lambda = cfg.base.lambda;
    let mut rows = Vec::new();
    let (mut psi_drift, mut phi_dev) = (0.0f64, 0.0f64);
    for (t, p) in traj.times.iter().zip(&traj.profiles) {
        let dpsi = p.psi().iter().map(|v| (v - 2.0 * c).abs()).fold(0.0, f64::max);
        let dphi = p.phi().iter().map(|v| (v - (a - lambda * t)).abs()).fold(0.0, f64::max);
        let mean_phi = p.phi().iter().sum::<f64>() / p.len() as f64;
        psi_drift = psi_drift.max(dpsi);
        phi_dev = phi_dev.max(dphi);
        rows.push(vec![*t, mean_phi, dphi, dpsi]);
    }
    art.write_table("cylinder.csv", &["time", "mean_phi", "phi_deviation", "psi_drift"], &rows)?;
    let times: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let means: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let slope = fit_line(&times, &means).map(|l| l.slope).unwrap_or(f64::NAN);
    s.push(Verdict::at_most("psi_drift", psi_drift, tol, "the fiber coefficient stays at 2c"));
    s.push(Verdict::within("phi_slope", slope, -lambda, tol, "the divisor coefficient decreases with slope -lambda"));
    s.push(Verdict::at_most("phi_linear", phi_dev, tol, "the divisor coefficient equals a - lambda t"));
    Ok(())
}

fn regime_fit_checks(
    cfg: &ExperimentConfig,
    traj: &FlowTrajectory,
    window: (f64, f64),
    art: &mut Artifacts,
    s: &mut Summary,
) -> Res<()> {
    let tol = &cfg.analysis.tolerances;
    let spec = cfg.regime;
    let mut rows = Vec::new();
    for (t, p) in traj.times.iter().zip(&traj.profiles) {
        let fit = asymptotic_form_residual(p, &spec, window)?;
        match spec.kind {
            RegimeKind::Bulging => {
                let lead = fit.param("leading_phi").unwrap_or(f64::NAN);
                rows.push(vec![*t, lead, fit.residual]);
            }
            _ => {
                let cone = fit.param("cone_coefficient").unwrap_or(f64::NAN);
                let (lo, hi) = p.window_indices(window.0, window.1)?;
                let rho = &p.rho_grid()[lo..=hi];
                let y: Vec<f64> = rho.iter().zip(&p.phi()[lo..=hi]).map(|(r, f)| f - r.exp()).collect();
                let cols = vec![vec![1.0; rho.len()], rho.iter().map(|r| (-r).exp()).collect()];
                let slot = fit_basis(&cols, &y).map(|c| c[0]).unwrap_or(f64::NAN);
                rows.push(vec![*t, cone, slot, fit.residual]);
            }
        }
    }
    let drift = rows.iter().map(|r| ((r[1] - rows[0][1]) / rows[0][1]).abs()).fold(0.0, f64::max);
    if spec.kind == RegimeKind::Bulging {
        art.write_table("asymptotics.csv", &["time", "leading_phi", "fit_residual"], &rows)?;
        s.push(Verdict::at_most(
            "leading_coefficient_drift",
            drift,
            tol.bulging_drift,
            "the leading coefficient of phi at the outer window does not move over finite time",
        ));
    } else {
        art.write_table("asymptotics.csv", &["time", "cone_coefficient", "constant_slot", "fit_residual"], &rows)?;
        s.push(Verdict::at_most(
            "cone_coefficient_drift",
            drift,
            tol.cone_drift,
            "the fitted cone coefficient is constant in time",
        ));
        let times: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let slots: Vec<f64> = rows.iter().map(|r| r[2]).collect();
        let slope = fit_line(&times, &slots).map(|l| l.slope).unwrap_or(f64::NAN);
        let expected = cfg.base.n as f64 - cfg.base.lambda;
        s.push(Verdict::within_rel(
            "constant_slot_slope",
            slope,
            expected,
            tol.constant_slot,
            "the constant-in-rho slot of phi drifts linearly with slope n - lambda",
        ));
    }
    Ok(())
}

fn decay_checks(
    cfg: &ExperimentConfig,
    init: &RadialProfile,
    traj: &FlowTrajectory,
    art: &mut Artifacts,
    s: &mut Summary,
) -> Res<()> {
    let tol = &cfg.analysis.tolerances;
    let d = &cfg.analysis.decay;
    if d.checks.is_empty() {
        return Ok(());
    }
    let anchor = model_inner_distance(&cfg.regime, cfg.grid.rho_min)?;
    let opts = DecayOptions { anchor, max_drift: tol.exponent_drift, ..Default::default() };
    let window = d.window.unwrap_or_else(|| default_fit_window(&sample_distances(init, anchor)));
    let mut csv = Vec::new();
    let run = |q: DecayQuantity, csv: &mut Vec<u8>| -> Res<_> {
        let rep = decay_preservation_check(traj, q, &d.times, window, &opts)?;
        let mut buf = Vec::new();
        write_decay_csv(&rep, &mut buf)?;
        let body = if csv.is_empty() { &buf[..] } else { &buf[buf.iter().position(|&b| b == b'\n').map_or(0, |i| i + 1)..] };
        csv.extend_from_slice(body);
        Ok(rep)
    };
    for check in &d.checks {
        let q = check.quantity;
        let rep = run(q, &mut csv)?;
        let e0 = rep.rows[0].report.as_ref().map_or(f64::NAN, |r| r.exponent);
        if let Some(expected) = check.expected_exponent {
            s.push(Verdict::within_rel(
                &format!("{q}_exponent"),
                e0,
                expected,
                tol.exponent,
                "fitted power-law decay exponent of the initial metric",
            ));
        }
        let mut v = Verdict::at_most(
            &format!("{q}_preserved"),
            rep.max_drift,
            tol.exponent_drift,
            "the decay exponent at later times stays at its initial value",
        );
        v.pass &= rep.pass;
        s.push(v);
        if check.ladder_depth > 0 {
            let rm = if q == DecayQuantity::RmNorm { rep.clone() } else { run(DecayQuantity::RmNorm, &mut csv)? };
            let e_rm = rm.rows[0].report.as_ref().map_or(f64::NAN, |r| r.exponent);
            for k in 1..=check.ladder_depth {
                let dk = run(DecayQuantity::CovDerivRm(k), &mut csv)?;
                let ek = dk.rows[0].report.as_ref().map_or(f64::NAN, |r| r.exponent);
                s.push(Verdict::below(
                    &format!("ladder_{k}"),
                    ek,
                    e_rm - k as f64,
                    k as f64 * tol.ladder,
                    "each radial derivative of |Rm| decays one power of distance faster",
                ));
            }
        }
    }
    art.write("decay.csv", &csv)
}

/// Raw flow times that land on `slices + 1` evenly spaced rescaled times.
fn rescaled_sample_times(spec: &RescalingSpec, slices: usize) -> Vec<f64> {
    let (a, b) = spec.time_window;
    let k = slices.max(1);
    (0..=k).map(|i| spec.time_factor() * (a + (b - a) * i as f64 / k as f64)).collect()
}

fn rescaling_checks(cfg: &ExperimentConfig, art: &mut Artifacts, s: &mut Summary) -> Res<()> {
    let b = &cfg.analysis.blowdown;
    if b.scales.is_empty() {
        return Err(config_err("analysis.blowdown.scales", "need at least one scale"));
    }
    let specs: Vec<RescalingSpec> = match cfg.regime.kind {
        RegimeKind::Bulging => {
            let n_exp = cfg.regime.n_exp.unwrap_or(f64::NAN);
            b.scales.iter().map(|&r| RescalingSpec::bulging(r, n_exp, b.rho_window, b.time_window)).collect()
        }
        RegimeKind::Conical => b.scales.iter().map(|&sc| RescalingSpec::conical(sc, b.rho_window, b.time_window)).collect(),
        _ => return Err(config_err("regime.kind", "rescaling needs a bulging or conical regime")),
    };
    let mut outputs = Vec::new();
    for spec in &specs {
        spec.validate()?;
        outputs.extend(rescaled_sample_times(spec, b.slices));
    }
    let needed = outputs.iter().copied().fold(0.0, f64::max);
    if needed > cfg.flow.horizon * (1.0 + 1e-12) {
        return Err(config_err("flow.horizon", format!("the rescalings need the flow up to t = {needed}")));
    }
    let init = initial_profile(cfg)?;
    let traj = run_flow(cfg, &init, cfg.flow.horizon, &outputs)?;
    let mut rescaled: Vec<RescaledTrajectory> = Vec::new();
    for spec in &specs {
        rescaled.push(match spec.regime {
            krf_core::rescaling::RescaleRegime::Bulging => bulging_rescale(&traj, spec)?,
            krf_core::rescaling::RescaleRegime::Conical => conical_blowdown(&traj, spec)?,
        });
    }
    for (i, r) in rescaled.iter().enumerate() {
        export_slices(art, &format!("rescaled_{i}"), &r.times, &r.profiles)?;
    }
    if cfg.regime.kind == RegimeKind::Bulging {
        product_limit_checks(cfg, &rescaled, art, s)
    } else {
        blowdown_w1_checks(cfg, &rescaled, art, s)
    }
}

fn product_limit_checks(cfg: &ExperimentConfig, rescaled: &[RescaledTrajectory], art: &mut Artifacts, s: &mut Summary) -> Res<()> {
    let tol = &cfg.analysis.tolerances;
    let n_exp = cfg.regime.n_exp.unwrap_or(f64::NAN);
    let (c_n, _) = bulging_coefficients(n_exp);
    let lambda = cfg.base.lambda;
    let mut csv = Vec::new();
    let mut errors = Vec::new();
    for r in rescaled {
        let rows = product_limit_error(r, n_exp, |t| 1.0 - lambda * t / c_n)?;
        let mut buf = Vec::new();
        write_limit_csv(&rows, &mut buf)?;
        let skip = if csv.is_empty() { 0 } else { buf.iter().position(|&b| b == b'\n').map_or(0, |i| i + 1) };
        csv.extend_from_slice(&buf[skip..]);
        errors.push(rows.iter().map(|r| r.sup_error).fold(0.0, f64::max));
    }
    art.write("product_limit.csv", &csv)?;
    let last = errors[errors.len() - 1];
    s.push(Verdict::at_most(
        "product_limit",
        last,
        tol.product_limit,
        "at the largest scale the rescaled flow matches the flat plane times the divisor flow",
    ));
    if errors.len() > 1 {
        s.push(Verdict::at_most(
            "error_decreases",
            last / errors[0],
            tol.monotone_ratio,
            "the distance to the product limit shrinks as the scale grows",
        ));
    }
    s.tables.insert(
        "product_limit".into(),
        json!(rescaled.iter().zip(&errors).map(|(r, e)| json!({"scale": r.spec.scale, "sup_error": e})).collect::<Vec<_>>()),
    );
    Ok(())
}

fn exact_lambda(cfg: &ExperimentConfig) -> Res<Rational> {
    rational_from_decimal(cfg.base.lambda).map_err(|e| config_err("base.lambda", e.to_string()))
}

fn blowdown_w1_checks(cfg: &ExperimentConfig, rescaled: &[RescaledTrajectory], art: &mut Artifacts, s: &mut Summary) -> Res<()> {
    let tol = &cfg.analysis.tolerances;
    let lambda = exact_lambda(cfg)?;
    let formal = blowdown(&flow_expand(cfg.base.n, &lambda, cfg.analysis.soliton.order.max(2), &BTreeMap::new())?);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for r in rescaled {
        for (t, p) in r.times.iter().zip(&r.profiles) {
            let c = fiber_w_coefficients(p, 1.0, cfg.analysis.soliton.coefficient_window, &[2, 3, 4])?;
            let expected = formal.coeff(1).eval_f64(*t);
            let err = if expected != 0.0 { ((c[0] - expected) / expected).abs() } else { c[0].abs() };
            worst = worst.max(err);
            rows.push(vec![r.spec.scale, *t, c[0], expected]);
        }
    }
    if rows.is_empty() {
        return Err(config_err("analysis.blowdown.time_window", "no rescaled slices fall in the window"));
    }
    art.write_table("blowdown_w1.csv", &["scale", "time", "numeric", "formal"], &rows)?;
    s.push(Verdict::at_most(
        "blowdown_w1",
        worst,
        tol.blowdown_w1,
        "the w^1 coefficient of the blown-down numeric flow matches the formal blowdown",
    ));
    Ok(())
}

fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn soliton_checks(cfg: &ExperimentConfig, art: &mut Artifacts, s: &mut Summary) -> Res<()> {
    let tol = &cfg.analysis.tolerances;
    let n = cfg.base.n;
    let lambda = exact_lambda(cfg)?;
    let order = cfg.analysis.soliton.order;
    let e = soliton_expand(n, &lambda, order)?;
    art.write_with("series.csv", |w| e.write_csv(w))?;
    let a = e.constants();
    s.tables.insert(
        "soliton_series".into(),
        json!(a
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, q)| json!({"j": j, "coefficient": q.to_string(), "value": to_f64(q)}))
            .collect::<Vec<_>>()),
    );

    let excess = &lambda - int(n as i64);
    let a1 = rat(-1, 2) * int(n as i64 - 1) * &excess;
    let mut v = Verdict::within("a1_closed_form", to_f64(&a[1]), to_f64(&a1), 0.0, "a1 = -(n-1)(lambda-n)/2 in exact arithmetic");
    v.pass = a[1] == a1;
    s.push(v);

    let identity = (1..=order.min(6)).all(|k| {
        soliton_expand(n, &lambda, k)
            .map(|sol| gradient_identity_residual(&gradient_potential(&sol), &sol).iter().all(|r| r.is_zero()))
            .unwrap_or(false)
    });
    s.push(Verdict::holds("gradient_identity", identity, "the truncations satisfy the gradient soliton identity exactly"));

    let mut consts = BTreeMap::new();
    consts.insert(0, rat(2, 3));
    consts.insert(2, int(5));
    let bare = flow_expand(n, &lambda, order.max(2), &BTreeMap::new())?;
    let with = flow_expand(n, &lambda, order.max(2), &consts)?;
    let b = blowdown(&with);
    let w1 = TimePoly::monomial(a1.clone(), 2);
    s.push(Verdict::holds(
        "flow_blowdown",
        b == blowdown(&bare) && blowdown(&b) == b && *b.coeff(1) == w1,
        "blowdown erases the free constants, is idempotent, and its w^1 slot is a1 t^2",
    ));

    let (lo, hi) = cfg.analysis.soliton.residual_window;
    let rhos: Vec<f64> = (0..=12).map(|i| lo + (hi - lo) * i as f64 / 12.0).collect();
    let mut slope_rows = Vec::new();
    if excess.is_zero() {
        s.push(Verdict::holds("residual_vanishes", e.is_zero(), "for lambda = n the series is zero and the cone is the soliton"));
    } else {
        for k in 1..=order {
            let ek = soliton_expand(n, &lambda, k)?;
            let mut x = Vec::new();
            let mut y = Vec::new();
            for &r in &rhos {
                x.push(-r);
                y.push(soliton_residual_at(&ek, r)?.abs().ln());
            }
            let slope = fit_line(&x, &y).map(|l| l.slope).unwrap_or(f64::NAN);
            let target = k as f64 + 1.0;
            slope_rows.push(vec![k as f64, slope]);
            s.push(Verdict::at_least(
                &format!("residual_slope_k{k}"),
                slope,
                target,
                tol.residual_slope * target,
                "the order-K residual decays at least like w^(K+1)",
            ));
        }
        art.write_table("residual_slopes.csv", &["order", "slope"], &slope_rows)?;
    }

    if cfg.base.mu == 1 && cfg.base.lambda > 0.0 {
        let sol = numeric_soliton(cfg, &cfg.base)?;
        art.write("soliton_profile.csv", &profile_csv(&sol.profile)?)?;
        s.push(Verdict::at_most("soliton_residual", sol.residual, tol.soliton_residual, "the numeric soliton solves the soliton equation"));
        if !excess.is_zero() && order >= 2 {
            let c = fiber_w_coefficients(&sol.profile, 1.0, cfg.analysis.soliton.coefficient_window, &[2, 3, 4])?;
            let (e1, e2) = (to_f64(&a[1]), 4.0 * to_f64(&a[2]));
            let reference = "the numeric soliton's fiber expansion matches the formal series";
            s.push(Verdict::within_rel("soliton_w1", c[0], e1, tol.soliton_coefficients, reference));
            s.push(Verdict::within_rel("soliton_w2", c[1], e2, tol.soliton_coefficients, reference));
        }
    }
    Ok(())
}

fn fik_checks(cfg: &ExperimentConfig, art: &mut Artifacts, s: &mut Summary) -> Res<()> {
    let tol = &cfg.analysis.tolerances;
    let f = &cfg.analysis.fik;
    let grid = cfg.grid_points();
    let sol = numeric_soliton(cfg, &cfg.base)?;
    let (p, b) = fik_data(&sol, cfg.regime.p.unwrap_or(f64::NAN))?;
    art.write_with("fik_b.csv", |w| b.write_csv(w))?;
    let mut rows = Vec::new();
    for &t in &f.times {
        let family = |t: f64| make_fik(p, t, &b, &cfg.base, &grid);
        rows.push(vec![t, flow_equation_residual(family, &cfg.base, t, f.delta)?]);
    }
    art.write_table("fik_residual.csv", &["time", "residual"], &rows)?;
    let worst = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    s.push(Verdict::at_most("family_residual", worst, tol.fik_residual, "the self-similar family solves the flow equation"));

    // p = 1: the family over a base with lambda = n
    let flat = BaseGeometry::twisted(cfg.base.n, cfg.base.n as f64)?;
    let sol1 = numeric_soliton(cfg, &flat)?;
    let (p1, b1) = match (sol1.p, sol1.fik.clone()) {
        (Some(p), Some(b)) => (p, b),
        _ => return Err(RunError::Numerical("no self-similar data for lambda = n".into())),
    };
    s.push(Verdict::within("flat_exponent", p1, 1.0, 0.0, "lambda = n gives the cone exponent p = 1"));
    let sc = f.flat_scale;
    let times: Vec<f64> = (0..=8).map(|k| sc * sc * k as f64 / 8.0).collect();
    let cone = make_conical(0.0, &flat, &grid)?;
    let profiles = times
        .iter()
        .map(|&t| if t == 0.0 { Ok(cone.clone()) } else { make_fik(p1, t, &b1, &flat, &grid) })
        .collect::<krf_core::Result<Vec<_>>>()?;
    let traj = FlowTrajectory {
        base: flat,
        times,
        profiles,
        scheme: Scheme::ExplicitRk4,
        dt_history: Vec::new(),
        bc_kind: BoundaryKind::Prescribed,
    };
    let window = (cfg.grid.rho_min, cfg.grid.rho_max - 2.0 * sc.ln());
    let down = conical_blowdown(&traj, &RescalingSpec::conical(sc, window, (0.0, 1.0)))?;
    let mut dev: f64 = 0.0;
    for q in &down.profiles {
        for ((r, ph), ps) in q.rho_grid().iter().zip(q.phi()).zip(q.psi()) {
            let e = r.exp();
            dev = dev.max(((ph - e) / e).abs()).max(((ps - e) / e).abs());
        }
    }
    s.push(Verdict::at_most("flat_blowdown", dev, tol.flat_deviation, "for p = 1 the blowdown is the flat cone"));
    Ok(())
}

fn plateau_checks(cfg: &ExperimentConfig, art: &mut Artifacts, s: &mut Summary) -> Res<()> {
    let tol = &cfg.analysis.tolerances;
    let pa = &cfg.analysis.plateau;
    if pa.horizons.len() < 2 {
        return Err(config_err("analysis.plateau.horizons", "need at least two horizons"));
    }
    let top = pa.horizons.iter().copied().fold(0.0, f64::max);
    if top > cfg.flow.horizon * (1.0 + 1e-12) {
        return Err(config_err("flow.horizon", format!("must reach the largest plateau horizon {top}")));
    }
    let opts = PlateauOptions {
        c1_max: pa.c1_max,
        max_growth: tol.plateau_growth,
        samples_per_unit_time: pa.samples_per_unit_time,
        ..Default::default()
    };
    let init = initial_profile(cfg)?;
    let traj = run_flow(cfg, &init, top, &plateau_output_times(&pa.horizons, pa.samples_per_unit_time))?;
    let rep = plateau_from_trajectory(&traj, &pa.horizons, pa.ball_window, &opts)?;
    let rows: Vec<Vec<f64>> = rep.rows.iter().map(|r| vec![r.horizon, r.c1, r.sup_rm]).collect();
    art.write_table("plateau.csv", &["horizon", "c1", "sup_rm"], &rows)?;
    let c1 = rep.rows.iter().map(|r| r.c1).fold(0.0, f64::max);
    s.push(Verdict::at_most("c1_bounded", c1, pa.c1_max, "the biLipschitz constant on the ball stays bounded"));
    s.push(Verdict::at_most(
        "rm_growth",
        rep.growth,
        tol.plateau_growth,
        "sup |Rm| on the ball stops growing between the two largest horizons",
    ));
    Ok(())
}
