//! Model ends: cylindrical, bulging, conical, and the FIK family, plus a
//! measurement of how close a profile is to each regime.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ansatz::{fmt_f64, BaseGeometry, RadialProfile};
use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::interp::CubicSpline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Cylindrical,
    Bulging,
    Conical,
    Fik,
}

/// Regime parameters. Only the fields relevant to `kind` are read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub kind: RegimeKind,
    /// Cylinder coefficient, `ψ ≡ 2c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Base offset of the cylinder, `φ ≡ a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Bulging exponent.
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub n_exp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_log: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
}

impl RegimeSpec {
    fn empty(kind: RegimeKind) -> Self {
        RegimeSpec { kind, c: None, a: None, n_exp: None, k_log: None, p: None, t0: None }
    }

    pub fn cylindrical(c: f64, a: f64) -> Self {
        RegimeSpec { c: Some(c), a: Some(a), ..Self::empty(RegimeKind::Cylindrical) }
    }

    pub fn bulging(n_exp: f64) -> Self {
        RegimeSpec { n_exp: Some(n_exp), ..Self::empty(RegimeKind::Bulging) }
    }

    pub fn conical(k_log: f64) -> Self {
        RegimeSpec { k_log: Some(k_log), ..Self::empty(RegimeKind::Conical) }
    }

    pub fn fik(p: f64, t0: f64) -> Self {
        RegimeSpec { p: Some(p), t0: Some(t0), ..Self::empty(RegimeKind::Fik) }
    }

    fn require(&self, name: &str, v: Option<f64>) -> Result<f64> {
        v.ok_or_else(|| Error::InvalidRegime(format!("{:?} regime needs field `{name}`", self.kind)))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidRegime(format!("`{name}` must be positive, got {v}")))
            }
        };
        match self.kind {
            RegimeKind::Cylindrical => {
                positive("c", self.require("c", self.c)?)?;
                positive("a", self.require("a", self.a)?)
            }
            RegimeKind::Bulging => positive("N", self.require("N", self.n_exp)?),
            RegimeKind::Conical => {
                let k = self.require("k_log", self.k_log)?;
                if k.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidRegime("`k_log` must be finite".into()))
                }
            }
            RegimeKind::Fik => {
                positive("p", self.require("p", self.p)?)?;
                positive("t0", self.require("t0", self.t0)?)
            }
        }
    }
}

/// Cylinder end: `φ ≡ a`, `ψ ≡ 2c`.
pub fn make_cylindrical(c: f64, a: f64, base: &BaseGeometry, grid: &[f64]) -> Result<RadialProfile> {
    base.validate()?;
    if base.mu != 0 {
        return Err(Error::InvalidBase("cylindrical ends need an untwisted base (mu = 0)".into()));
    }
    RegimeSpec::cylindrical(c, a).validate()?;
    RadialProfile::from_fn(grid, |_| (a, 2.0 * c))
}

/// Leading coefficients `(c_φ, c_ψ)` of the bulging model,
/// `φ = c_φ·ρ^{1/N}`, `ψ = c_ψ·ρ^{(1−N)/N}`.
pub fn bulging_coefficients(n_exp: f64) -> (f64, f64) {
    let q = (n_exp + 1.0) * (n_exp + 1.0);
    (q / (2.0 * n_exp), q / (2.0 * n_exp * n_exp))
}

/// Bulging end from the potential `(N+1)/2·ρ^{(N+1)/N}`.
pub fn make_bulging(n_exp: f64, base: &BaseGeometry, grid: &[f64]) -> Result<RadialProfile> {
    base.validate()?;
    if base.mu != 1 {
        return Err(Error::InvalidBase("bulging ends need a twisted base (mu = 1)".into()));
    }
    RegimeSpec::bulging(n_exp).validate()?;
    if let Some(&r0) = grid.first() {
        if !(r0 > 0.0) {
            return Err(Error::GridNotPositive { rho_min: r0 });
        }
    }
    let (cp, cs) = bulging_coefficients(n_exp);
    RadialProfile::from_fn(grid, |r| (cp * r.powf(1.0 / n_exp), cs * r.powf((1.0 - n_exp) / n_exp)))
}

/// Conical end from the potential `e^ρ + k·ρ`.
pub fn make_conical(k_log: f64, base: &BaseGeometry, grid: &[f64]) -> Result<RadialProfile> {
    base.validate()?;
    if base.mu != 1 {
        return Err(Error::InvalidBase("conical ends need a twisted base (mu = 1)".into()));
    }
    RegimeSpec::conical(k_log).validate()?;
    RadialProfile::from_fn(grid, |r| (r.exp() + k_log, r.exp()))
}

/// Samples of the FIK profile function `B(s)` on `s ≥ 0`, with `s = 0` included.
#[derive(Debug, Clone, PartialEq)]
pub struct FikFunction {
    s: Vec<f64>,
    b: Vec<f64>,
}

impl FikFunction {
    pub fn new(s: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if s.len() != b.len() || s.len() < 3 {
            return Err(Error::InvalidGrid("B needs at least 3 matching samples".into()));
        }
        if s[0] != 0.0 {
            return Err(Error::InvalidGrid("B samples must start at s = 0".into()));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("B sample points must increase".into()));
        }
        if b.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidGrid("B must be positive".into()));
        }
        Ok(FikFunction { s, b })
    }

    /// A constant function on `[0, s_max]`.
    pub fn constant(value: f64, s_max: f64) -> Result<Self> {
        let s: Vec<f64> = (0..17).map(|i| s_max * i as f64 / 16.0).collect();
        Self::new(s, vec![value; 17])
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn values(&self) -> &[f64] {
        &self.b
    }

    pub fn b0(&self) -> f64 {
        self.b[0]
    }

    pub fn s_max(&self) -> f64 {
        self.s[self.s.len() - 1]
    }

    /// Interpolant used by [`make_fik`]: a cubic spline of `log B` against
    /// `log s` on the positive nodes, which keeps power-law tails smooth,
    /// joined linearly to `B(0)` below the first positive node.
    pub fn interpolant(&self) -> Result<FikInterpolant> {
        let ls: Vec<f64> = self.s[1..].iter().map(|v| v.ln()).collect();
        let lb: Vec<f64> = self.b[1..].iter().map(|v| v.ln()).collect();
        let spline = CubicSpline::new(ls, lb)?;
        Ok(FikInterpolant { b0: self.b[0], s1: self.s[1], b1: self.b[1], spline })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["s", "B"])?;
        for (s, b) in self.s.iter().zip(&self.b) {
            wr.write_record([fmt_f64(*s), fmt_f64(*b)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["s", "B"] {
            return Err(Error::Parse(format!("expected header s,B, got {:?}", headers)));
        }
        let (mut s, mut b) = (Vec::new(), Vec::new());
        for rec in rd.records() {
            let rec = rec?;
            let get = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Parse("short row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(e.to_string()))
            };
            s.push(get(0)?);
            b.push(get(1)?);
        }
        Self::new(s, b)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[derive(Debug, Clone)]
pub struct FikInterpolant {
    b0: f64,
    s1: f64,
    b1: f64,
    spline: CubicSpline,
}

impl FikInterpolant {
    /// `(B(s), B'(s))`.
    pub fn eval_with_derivative(&self, s: f64) -> Result<(f64, f64)> {
        if !(s >= 0.0) {
            let (_, hi) = self.spline.domain();
            return Err(Error::InterpolationRangeExceeded { arg: s, lo: 0.0, hi: hi.exp() });
        }
        if s < self.s1 {
            let slope = (self.b1 - self.b0) / self.s1;
            return Ok((self.b0 + slope * s, slope));
        }
        let (lo, hi) = self.spline.domain();
        let x = s.ln().clamp(lo, hi);
        if (x - s.ln()).abs() > 1e-12 * x.abs().max(1.0) {
            return Err(Error::InterpolationRangeExceeded { arg: s, lo: 0.0, hi: hi.exp() });
        }
        let (lb, dlb) = self.spline.eval_with_derivative(x)?;
        let b = lb.exp();
        Ok((b, b * dlb / s))
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        self.eval_with_derivative(s).map(|(v, _)| v)
    }

    pub fn s_max(&self) -> f64 {
        self.spline.domain().1.exp()
    }
}

/// FIK metric at time `t0` in the reduced chart.
///
/// The chart dictionary is `ρ = p·log|z|²` with the divisor metric `p·ω_FS`,
/// so the base has `λ = n/p`. Then
///
/// ```text
/// φ = e^ρ·B(4·t0·e^{−ρ})/p,    ψ = (e^ρ·B − 4·t0·B')/p,
/// ```
///
/// and `t0 → 0` gives the cone `φ = ψ = (B(0)/p)·e^ρ`.
pub fn make_fik(p: f64, t0: f64, b: &FikFunction, base: &BaseGeometry, grid: &[f64]) -> Result<RadialProfile> {
    base.validate()?;
    if base.mu != 1 {
        return Err(Error::InvalidBase("the FIK family needs a twisted base (mu = 1)".into()));
    }
    if !(p > 0.0) || !(t0 >= 0.0) {
        return Err(Error::InvalidRegime(format!("need p > 0 and t0 >= 0, got p = {p}, t0 = {t0}")));
    }
    let expected = base.n as f64 / p;
    if (base.lambda - expected).abs() > 1e-9 * expected.abs().max(1.0) {
        return Err(Error::InvalidBase(format!(
            "FIK with p = {p} needs lambda = n/p = {expected}, got {}",
            base.lambda
        )));
    }
    let spline = b.interpolant()?;
    let mut phi = Vec::with_capacity(grid.len());
    let mut psi = Vec::with_capacity(grid.len());
    for &r in grid {
        let s = 4.0 * t0 * (-r).exp();
        let (bv, db) = spline.eval_with_derivative(s)?;
        phi.push(r.exp() * bv / p);
        psi.push((r.exp() * bv - 4.0 * t0 * db) / p);
    }
    RadialProfile::new(grid.to_vec(), phi, psi)
}

/// Outcome of [`asymptotic_form_residual`].
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeFit {
    /// `max(value_residual, slope_residual)`.
    pub residual: f64,
    /// Relative sup-deviation from the fitted model pair.
    pub value_residual: f64,
    /// Deviation of the fitted log-slopes from the model's.
    pub slope_residual: f64,
    /// Fitted parameters by name.
    pub params: Vec<(&'static str, f64)>,
}

impl RegimeFit {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| *k == name).map(|(_, v)| *v)
    }
}

fn log_scale(data: &[f64], model: &[f64]) -> f64 {
    let r0 = data[0] / model[0];
    if data.iter().zip(model).all(|(d, m)| d / m == r0) {
        return r0;
    }
    let all_pos = data.iter().chain(model).all(|v| *v > 0.0);
    if all_pos {
        let s: f64 = data.iter().zip(model).map(|(d, m)| (d / m).ln()).sum();
        (s / data.len() as f64).exp()
    } else {
        // least squares on the values themselves
        let num: f64 = data.iter().zip(model).map(|(d, m)| d * m).sum();
        let den: f64 = model.iter().map(|m| m * m).sum();
        num / den
    }
}

fn rel_dev(data: &[f64], model: &[f64]) -> f64 {
    data.iter()
        .zip(model)
        .map(|(d, m)| ((d - m) / m).abs())
        .fold(0.0, f64::max)
}

fn log_slope(x: &[f64], f: &[f64]) -> Option<f64> {
    if f.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let y: Vec<f64> = f.iter().map(|v| v.ln()).collect();
    fit_line(x, &y).map(|l| l.slope)
}

/// Compares a profile with a regime's model pair over `window = (ρ_lo, ρ_hi)`.
///
/// The model's scale parameters are fitted by least squares on logarithms.
/// The value part is the relative sup-deviation from the fitted pair; the
/// slope part compares fitted log-slopes with the model's (against `log ρ`
/// for cylindrical and bulging windows with `ρ > 0`, against `ρ` otherwise).
/// The FIK regime is compared with its asymptotic cone.
pub fn asymptotic_form_residual(profile: &RadialProfile, spec: &RegimeSpec, window: (f64, f64)) -> Result<RegimeFit> {
    spec.validate()?;
    let (lo, hi) = profile.window_indices(window.0, window.1)?;
    let rho = &profile.rho_grid()[lo..=hi];
    let phi = &profile.phi()[lo..=hi];
    let psi = &profile.psi()[lo..=hi];
    let use_log_rho = rho[0] > 0.0;
    let xs: Vec<f64> = if use_log_rho { rho.iter().map(|r| r.ln()).collect() } else { rho.to_vec() };
    let slope_gap = |f: &[f64], model_slope: f64| -> f64 {
        match log_slope(&xs, f) {
            Some(s) if rho.len() >= 2 => (s - model_slope).abs(),
            None => f64::INFINITY,
            _ => 0.0,
        }
    };
    let cone_slope_gap = |f: &[f64]| -> f64 {
        match log_slope(rho, f) {
            Some(s) if rho.len() >= 2 => (s - 1.0).abs(),
            None => f64::INFINITY,
            _ => 0.0,
        }
    };
    let fit = match spec.kind {
        RegimeKind::Cylindrical => {
            let ones = vec![1.0; rho.len()];
            let a = log_scale(phi, &ones);
            let two_c = log_scale(psi, &ones);
            let mphi = vec![a; rho.len()];
            let mpsi = vec![two_c; rho.len()];
            let v = rel_dev(phi, &mphi).max(rel_dev(psi, &mpsi));
            let s = slope_gap(phi, 0.0).max(slope_gap(psi, 0.0));
            RegimeFit { residual: 0.0, value_residual: v, slope_residual: s, params: vec![("a", a), ("c", 0.5 * two_c)] }
        }
        RegimeKind::Bulging => {
            let n = spec.n_exp.unwrap_or(1.0);
            if !(rho[0] > 0.0) {
                return Err(Error::GridNotPositive { rho_min: rho[0] });
            }
            let (cp, cs) = bulging_coefficients(n);
            let mphi: Vec<f64> = rho.iter().map(|r| cp * r.powf(1.0 / n)).collect();
            let mpsi: Vec<f64> = rho.iter().map(|r| cs * r.powf((1.0 - n) / n)).collect();
            let data: Vec<f64> = phi.iter().chain(psi).copied().collect();
            let model: Vec<f64> = mphi.iter().chain(&mpsi).copied().collect();
            let theta = log_scale(&data, &model);
            let scaled: Vec<f64> = model.iter().map(|m| theta * m).collect();
            let v = rel_dev(&data, &scaled);
            let s = slope_gap(phi, 1.0 / n).max(slope_gap(psi, (1.0 - n) / n));
            RegimeFit {
                residual: 0.0,
                value_residual: v,
                slope_residual: s,
                params: vec![("scale", theta), ("leading_phi", theta * cp), ("leading_psi", theta * cs)],
            }
        }
        RegimeKind::Conical | RegimeKind::Fik => {
            let k = if spec.kind == RegimeKind::Conical { spec.k_log.unwrap_or(0.0) } else { 0.0 };
            let cone: Vec<f64> = rho.iter().map(|r| r.exp()).collect();
            let theta_psi = log_scale(psi, &cone);
            let shifted: Vec<f64> = phi.iter().map(|p| p - k).collect();
            let theta_phi = log_scale(&shifted, &cone);
            let mpsi: Vec<f64> = cone.iter().map(|c| theta_psi * c).collect();
            let mphi: Vec<f64> = cone.iter().map(|c| theta_phi * c + k).collect();
            let v = rel_dev(phi, &mphi).max(rel_dev(psi, &mpsi));
            let s = cone_slope_gap(&shifted).max(cone_slope_gap(psi));
            RegimeFit {
                residual: 0.0,
                value_residual: v,
                slope_residual: s,
                params: vec![("cone_coefficient", theta_psi), ("cone_coefficient_phi", theta_phi)],
            }
        }
    };
    Ok(RegimeFit { residual: fit.value_residual.max(fit.slope_residual), ..fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::uniform_grid;

    fn tw(n: usize, l: f64) -> BaseGeometry {
        BaseGeometry::twisted(n, l).unwrap()
    }

    #[test]
    fn cylinder_examples() {
        let g = uniform_grid(-2.0, 12.0, 57).unwrap();
        let b = BaseGeometry::untwisted(2, 1.0).unwrap();
        let p = make_cylindrical(1.0, 1.0, &b, &g).unwrap();
        assert!(p.phi().iter().all(|v| *v == 1.0) && p.psi().iter().all(|v| *v == 2.0));
        let p = make_cylindrical(0.5, 3.0, &b, &g).unwrap();
        assert!(p.phi().iter().all(|v| *v == 3.0) && p.psi().iter().all(|v| *v == 1.0));
        let f = asymptotic_form_residual(&p, &RegimeSpec::cylindrical(0.5, 3.0), (8.0, 10.0)).unwrap();
        assert_eq!(f.residual, 0.0);
        assert!((f.param("a").unwrap() - 3.0).abs() < 1e-12);
        assert!((f.param("c").unwrap() - 0.5).abs() < 1e-12);
        assert!(make_cylindrical(1.0, 1.0, &tw(2, 1.0), &g).is_err());
    }

    #[test]
    fn bulging_examples() {
        let g = uniform_grid(1.0, 11.0, 101).unwrap();
        let p = make_bulging(1.0, &tw(2, 1.0), &g).unwrap();
        for i in 0..g.len() {
            assert!((p.phi()[i] - 2.0 * g[i]).abs() < 1e-12);
            assert!((p.psi()[i] - 2.0).abs() < 1e-15);
        }
        let p = make_bulging(2.0, &tw(2, 1.0), &g).unwrap();
        assert_eq!(p.phi()[0], 9.0 / 4.0);
        assert_eq!(p.psi()[0], 9.0 / 8.0);
        assert!(p.closedness_defect(1) < 10.0 * p.spacing().powi(2));
        let bad = uniform_grid(0.0, 1.0, 11).unwrap();
        assert!(matches!(make_bulging(2.0, &tw(2, 1.0), &bad), Err(Error::GridNotPositive { .. })));
        let f = asymptotic_form_residual(&p, &RegimeSpec::bulging(2.0), (8.0, 10.0)).unwrap();
        assert!(f.residual < 1e-12, "{f:?}");
        assert!((f.param("scale").unwrap() - 1.0).abs() < 1e-10);
        let f = asymptotic_form_residual(&p, &RegimeSpec::cylindrical(1.0, 1.0), (8.0, 10.0)).unwrap();
        assert!(f.residual >= 0.5 - 1e-12, "{f:?}");
    }

    #[test]
    fn conical_examples() {
        let g = uniform_grid(0.0, 12.0, 121).unwrap();
        let p = make_conical(1.0, &tw(2, 3.0), &g).unwrap();
        assert_eq!(p.phi()[0], 2.0);
        assert_eq!(p.psi()[0], 1.0);
        let f = asymptotic_form_residual(&p, &RegimeSpec::conical(0.0), (8.0, 10.0)).unwrap();
        assert!(f.residual <= 2.0 * (-8.0f64).exp(), "{f:?}");
        let f = asymptotic_form_residual(&p, &RegimeSpec::conical(1.0), (8.0, 10.0)).unwrap();
        assert!(f.residual < 1e-12);
        assert!((f.param("cone_coefficient").unwrap() - 1.0).abs() < 1e-10);
        let g2 = uniform_grid(-1.0, 2.0, 31).unwrap();
        assert!(matches!(make_conical(-0.5, &tw(2, 3.0), &g2), Err(Error::NonKaehler { .. })));
    }

    #[test]
    fn regimes_are_separated() {
        let g = uniform_grid(8.0, 12.0, 81).unwrap();
        let tb = tw(2, 1.0);
        let profiles = [
            (RegimeKind::Cylindrical, make_cylindrical(1.0, 1.0, &BaseGeometry::untwisted(2, 1.0).unwrap(), &g).unwrap()),
            (RegimeKind::Bulging, make_bulging(2.0, &tb, &g).unwrap()),
            (RegimeKind::Conical, make_conical(0.0, &tb, &g).unwrap()),
        ];
        let specs = [RegimeSpec::cylindrical(1.0, 1.0), RegimeSpec::bulging(2.0), RegimeSpec::conical(0.0)];
        for (kind, p) in &profiles {
            for s in &specs {
                let r = asymptotic_form_residual(p, s, (8.0, 12.0)).unwrap().residual;
                if *kind == s.kind {
                    assert!(r < 1e-12);
                } else {
                    assert!(r > 0.1, "{kind:?} vs {:?}: {r}", s.kind);
                }
            }
        }
    }

    #[test]
    fn fik_constant_b_is_a_cone() {
        let g = uniform_grid(-2.0, 6.0, 81).unwrap();
        let b = FikFunction::constant(1.5, 1e3).unwrap();
        let p = make_fik(1.0, 0.3, &b, &tw(2, 2.0), &g).unwrap();
        for i in 0..g.len() {
            assert!((p.phi()[i] - 1.5 * g[i].exp()).abs() < 1e-12 * g[i].exp());
            assert!((p.psi()[i] - 1.5 * g[i].exp()).abs() < 1e-12 * g[i].exp());
        }
        assert!(make_fik(2.0, 0.3, &b, &tw(2, 2.0), &g).is_err());
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        assert_eq!(FikFunction::read_csv(&buf[..]).unwrap(), b);
    }

    #[test]
    fn spec_requires_fields() {
        let mut s = RegimeSpec::cylindrical(1.0, 1.0);
        s.c = None;
        assert!(matches!(s.validate(), Err(Error::InvalidRegime(_))));
        let js = serde_json::to_string(&RegimeSpec::bulging(2.0)).unwrap();
        assert_eq!(js, r#"{"kind":"bulging","N":2.0}"#);
    }
}
