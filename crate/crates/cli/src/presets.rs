//! Built-in scenarios. Each preset fixes every configuration field; files
//! and flags may override any of them.

use std::path::PathBuf;

use krf_core::decay::DecayQuantity;
use krf_core::flow::{BoundaryKind, Scheme};
use krf_core::models::RegimeSpec;
use krf_core::BaseGeometry;

use crate::config::{
    Analysis, AsymptoticsAnalysis, BlowdownAnalysis, DecayAnalysis, DecayCheck, ExperimentConfig, FlowConfig,
    GridConfig, Preset,
};

pub struct PresetInfo {
    pub preset: Preset,
    pub description: &'static str,
    /// The mathematical statement the preset exercises.
    pub claim: &'static str,
}

pub fn list_presets() -> Vec<PresetInfo> {
    Preset::ALL.iter().map(|&p| info(p)).collect()
}

pub fn info(preset: Preset) -> PresetInfo {
    let (description, claim) = match preset {
        Preset::FlatCone => (
            "Flat cone over a Kähler-Einstein divisor with lambda = n: curvature and flow drift",
            "the flat cone is a static solution with vanishing curvature",
        ),
        Preset::CylinderSplit => (
            "Cylinder over an untwisted divisor, flowed to t = 1",
            "cylindrical ends split: psi stays 2c and the divisor shrinks linearly, phi = a - lambda t",
        ),
        Preset::BulgingPreserve => (
            "Bulging model end, leading coefficient of phi fitted at the outer window over t in [0, 1]",
            "finite-time bulging asymptotics are preserved and the divisor metric does not enter them",
        ),
        Preset::BulgingBlowdown => (
            "Bulging model end rescaled at r^2 = 16 and 64 against the product limit",
            "rescaled bulging flows converge to a flat plane times the divisor under its own Kähler-Ricci flow",
        ),
        Preset::ConicalPreserve => (
            "Conical end with a log term: cone coefficient, constant slot of phi, Ricci decay and derivative ladder",
            "conical asymptotics are preserved, the constant slot moves like k + (n - lambda) t, and curvature decay rates survive the flow",
        ),
        Preset::ConicalSoliton => (
            "Formal expanding soliton series, numeric soliton, and numeric blowdown of the flow from the cone",
            "the blowdown of the flow from a cone is the expanding soliton, with explicit series coefficients",
        ),
        Preset::FikSelfsimilar => (
            "Self-similar family generated by the numeric soliton profile, checked against the flow equation",
            "the FIK family is a gradient expanding soliton solution, and for p = 1 its asymptotic cone is flat",
        ),
        Preset::DecayAppendix => (
            "Fitted |Rm| decay exponent of a bulging end at t = 0 and t = 1, with the derivative ladder",
            "polynomial curvature decay, and the faster decay of its derivatives, is preserved along the flow",
        ),
        Preset::BilipschitzPlateau => (
            "Flow from a cone over horizons 1, 2, 4, 8: biLipschitz constant and sup |Rm| on a fixed ball",
            "a uniform biLipschitz bound gives curvature bounds independent of the horizon",
        ),
    };
    PresetInfo { preset, description, claim }
}

fn flow(horizon: f64, scheme: Scheme, bc_kind: BoundaryKind, output_times: Vec<f64>) -> FlowConfig {
    FlowConfig { horizon, dt: None, scheme, bc_kind, output_times }
}

fn grid(rho_min: f64, rho_max: f64, points: usize) -> GridConfig {
    GridConfig { rho_min, rho_max, points }
}

fn quarters() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

pub fn config(preset: Preset) -> ExperimentConfig {
    let twisted = |n, l| BaseGeometry::twisted(n, l).expect("valid preset base");
    let mut analysis = Analysis::default();
    let (base, regime, grid, flow) = match preset {
        Preset::FlatCone => (
            twisted(2, 2.0),
            RegimeSpec::conical(0.0),
            grid(0.0, 14.0, 1024),
            flow(1.0, Scheme::ExplicitRk4, BoundaryKind::DriftingModel, quarters()),
        ),
        Preset::CylinderSplit => (
            BaseGeometry::untwisted(2, 1.0).expect("valid preset base"),
            RegimeSpec::cylindrical(1.5, 3.0),
            grid(0.0, 10.0, 1024),
            flow(1.0, Scheme::ExplicitRk4, BoundaryKind::DriftingModel, quarters()),
        ),
        Preset::BulgingPreserve => {
            analysis.asymptotics = AsymptoticsAnalysis { window: Some((1.5e4, 1.95e4)) };
            (
                twisted(2, 1.0),
                RegimeSpec::bulging(2.0),
                grid(10.0, 2e4, 1024),
                flow(1.0, Scheme::ExplicitRk4, BoundaryKind::DriftingModel, quarters()),
            )
        }
        Preset::BulgingBlowdown => {
            analysis.blowdown =
                BlowdownAnalysis { scales: vec![4.0, 8.0], rho_window: (-0.2, 0.2), time_window: (0.0, 0.5), slices: 10 };
            (
                twisted(2, 1.0),
                RegimeSpec::bulging(2.0),
                grid(4.0, 100.0, 1024),
                flow(4.0, Scheme::ExplicitRk4, BoundaryKind::DriftingModel, Vec::new()),
            )
        }
        Preset::ConicalPreserve => {
            analysis.asymptotics = AsymptoticsAnalysis { window: Some((8.0, 13.0)) };
            analysis.decay = DecayAnalysis {
                window: None,
                times: vec![1.0],
                checks: vec![DecayCheck {
                    quantity: DecayQuantity::RicciNorm,
                    expected_exponent: Some(-2.0),
                    ladder_depth: 2,
                }],
            };
            (
                twisted(2, 3.0),
                RegimeSpec::conical(1.0),
                grid(0.0, 14.0, 1024),
                flow(1.0, Scheme::ExplicitRk4, BoundaryKind::DriftingModel, quarters()),
            )
        }
        Preset::ConicalSoliton => {
            analysis.blowdown =
                BlowdownAnalysis { scales: vec![4.0], rho_window: (-0.5, 11.0), time_window: (1.0, 1.0), slices: 1 };
            (
                twisted(2, 3.0),
                RegimeSpec::conical(0.0),
                grid(2.0, 14.0, 2048),
                flow(16.0, Scheme::ImplicitTrapezoid, BoundaryKind::Prescribed, Vec::new()),
            )
        }
        Preset::FikSelfsimilar => (
            twisted(2, 3.0),
            RegimeSpec::fik(2.0 / 3.0, 1.0),
            grid(0.0, 14.0, 2048),
            flow(1.0, Scheme::ImplicitTrapezoid, BoundaryKind::DriftingModel, Vec::new()),
        ),
        Preset::DecayAppendix => {
            analysis.decay = DecayAnalysis {
                window: Some((10.0, 1000.0)),
                times: vec![1.0],
                checks: vec![DecayCheck {
                    quantity: DecayQuantity::RmNorm,
                    expected_exponent: Some(-2.0 / 3.0),
                    ladder_depth: 2,
                }],
            };
            (
                twisted(2, 1.0),
                RegimeSpec::bulging(2.0),
                grid(10.0, 2e4, 1024),
                flow(1.0, Scheme::ExplicitRk4, BoundaryKind::DriftingModel, Vec::new()),
            )
        }
        Preset::BilipschitzPlateau => (
            twisted(2, 3.0),
            RegimeSpec::conical(0.0),
            grid(2.0, 14.0, 1024),
            flow(8.0, Scheme::ImplicitTrapezoid, BoundaryKind::Prescribed, Vec::new()),
        ),
    };
    ExperimentConfig {
        preset: Some(preset),
        base,
        regime,
        grid,
        flow,
        analysis,
        output_dir: PathBuf::from("krf-out").join(preset.name()),
    }
}
