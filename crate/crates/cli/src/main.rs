use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use krf_cli::config::{self, ExperimentConfig, Overrides, Preset};
use krf_cli::presets::list_presets;
use krf_cli::report::{RunError, Summary};
use krf_cli::run_experiment;
use krf_cli::scenarios::Scenario;

/// Like `println!`, but a closed stdout (as in `krf presets | head`) is not an error.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "krf", version, about = "Reduced Kähler-Ricci flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset scenario, or the flow checks of a custom config.
    Run(RunArgs),
    /// List the presets.
    Presets {
        /// Print the table as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Formal soliton series and the numeric soliton.
    Soliton(RunArgs),
    /// Evolve the configured end and check its asymptotics.
    Flow(RunArgs),
    /// Rescale the flow and compare with its limit.
    Blowdown(RunArgs),
    /// Fit curvature decay exponents along the flow.
    Decay(RunArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// JSON config file; several files run as a concurrent sweep.
    #[arg(long)]
    config: Vec<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<u8>,
    #[arg(long, allow_negative_numbers = true)]
    rho_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rho_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// explicit_rk4 or implicit_trapezoid.
    #[arg(long)]
    scheme: Option<String>,
    /// frozen_model, drifting_model or prescribed.
    #[arg(long)]
    bc_kind: Option<String>,
    /// Truncation order of the soliton series.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    k_log: Option<f64>,
    /// Any other field, as a dotted path and a JSON value.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Overrides, config::ConfigError> {
        let mut out: Overrides = Vec::new();
        let mut put = |path: &str, v: Option<Value>| {
            if let Some(v) = v {
                out.push((path.to_string(), v));
            }
        };
        put("output_dir", self.output_dir.as_ref().map(|p| Value::String(p.display().to_string())));
        put("base.n", self.n.map(Value::from));
        put("base.lambda", self.lambda.map(Value::from));
        put("base.mu", self.mu.map(Value::from));
        put("grid.rho_min", self.rho_min.map(Value::from));
        put("grid.rho_max", self.rho_max.map(Value::from));
        put("grid.points", self.points.map(Value::from));
        put("flow.horizon", self.horizon.map(Value::from));
        put("flow.dt", self.dt.map(Value::from));
        put("flow.scheme", self.scheme.clone().map(Value::String));
        put("flow.bc_kind", self.bc_kind.clone().map(Value::String));
        put("analysis.soliton.order", self.order.map(Value::from));
        put("regime.k_log", self.k_log.map(Value::from));
        for item in &self.set {
            let (path, value) = item
                .split_once('=')
                .ok_or_else(|| config::ConfigError::new(item.as_str(), "expected PATH=VALUE"))?;
            out.push((path.trim().to_string(), config::flag_value(value.trim())));
        }
        Ok(out)
    }

    fn resolve(&self) -> Result<Vec<ExperimentConfig>, config::ConfigError> {
        let overrides = self.overrides()?;
        if self.config.is_empty() {
            return Ok(vec![config::resolve(self.preset, None, &overrides)?]);
        }
        let mut out = Vec::new();
        for path in &self.config {
            let layer = config::read_layer(path)?;
            out.push(config::resolve(self.preset, Some(layer), &overrides)?);
        }
        for (i, a) in out.iter().enumerate() {
            if out[..i].iter().any(|b| b.output_dir == a.output_dir) {
                return Err(config::ConfigError::new(
                    "output_dir",
                    format!("two configs of the sweep write to {}", a.output_dir.display()),
                ));
            }
        }
        Ok(out)
    }
}

fn report(summary: &Summary, cfg: &ExperimentConfig) {
    for v in &summary.verdicts {
        out!(
            "{} {}: measured {:e}, expected {:e}, tolerance {:e}",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.measured,
            v.expected,
            v.tolerance
        );
    }
    let passed = summary.verdicts.iter().filter(|v| v.pass).count();
    out!(
        "{}: {passed} of {} verdicts pass; artifacts in {}",
        summary.scenario,
        summary.verdicts.len(),
        cfg.output_dir.display()
    );
}

fn run_one(cfg: &ExperimentConfig, module: Option<Scenario>) -> u8 {
    let scenario = module.unwrap_or(match cfg.preset {
        Some(p) => Scenario::Preset(p),
        None => Scenario::Flow,
    });
    match run_experiment(cfg, scenario) {
        Ok(summary) => {
            report(&summary, cfg);
            if summary.all_pass() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(args: &RunArgs, module: Option<Scenario>) -> u8 {
    let configs = match args.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return RunError::Config(e).exit_code();
        }
    };
    if configs.len() == 1 {
        return run_one(&configs[0], module);
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs.iter().map(|cfg| scope.spawn(move || run_one(cfg, module))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or(3)).max().unwrap_or(0)
    })
}

fn print_presets(json: bool) -> anyhow::Result<()> {
    let table = list_presets();
    if json {
        let rows: Vec<Value> = table
            .iter()
            .map(|r| serde_json::json!({"name": r.preset.name(), "description": r.description, "claim": r.claim}))
            .collect();
        out!("{}", serde_json::to_string_pretty(&rows).context("serializing the preset table")?);
    } else {
        let width = table.iter().map(|r| r.preset.name().len()).max().unwrap_or(0);
        for r in &table {
            out!("{:width$}  {}", r.preset.name(), r.description);
            out!("{:width$}  claim: {}", "", r.claim);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Presets { json } => match print_presets(*json) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e:#}");
                2
            }
        },
        Command::Run(a) => run(a, None),
        Command::Soliton(a) => run(a, Some(Scenario::Soliton)),
        Command::Flow(a) => run(a, Some(Scenario::Flow)),
        Command::Blowdown(a) => run(a, Some(Scenario::Blowdown)),
        Command::Decay(a) => run(a, Some(Scenario::Decay)),
    };
    ExitCode::from(code)
}
