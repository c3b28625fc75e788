//! Configuration-driven experiment runner behind the `krf` binary.

pub mod config;
pub mod presets;
pub mod report;
pub mod scenarios;

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::json;

use config::ExperimentConfig;
use report::{Artifacts, RunError, Summary};
use scenarios::Scenario;

/// Runs one scenario into `cfg.output_dir`: `config.resolved.json`, the
/// scenario's CSVs and `summary.json`, plus `run.meta.json` with wall-clock
/// data. Nothing but the metadata file depends on when or where it ran. On
/// error every file written by this run is removed.
pub fn run_experiment(cfg: &ExperimentConfig, scenario: Scenario) -> Result<Summary, RunError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let mut art = Artifacts::new(&cfg.output_dir)?;
    let result = (|| -> Result<Summary, RunError> {
        art.write("config.resolved.json", cfg.to_json().as_bytes())?;
        let summary = scenarios::execute(cfg, scenario, &mut art)?;
        art.write("summary.json", summary.to_json().as_bytes())?;
        let meta = json!({
            "scenario": summary.scenario,
            "version": env!("CARGO_PKG_VERSION"),
            "started_unix_seconds": started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            "elapsed_seconds": clock.elapsed().as_secs_f64(),
        });
        art.write("run.meta.json", format!("{}\n", serde_json::to_string_pretty(&meta).expect("json")).as_bytes())?;
        Ok(summary)
    })();
    match result {
        Ok(s) => Ok(s),
        Err(e) => {
            art.discard();
            Err(e.context(&scenario.name()))
        }
    }
}
