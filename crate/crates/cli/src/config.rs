use std::fs;
use std::path::Path;

use edgecache::cache::RewardWeights;
use edgecache::harness::RunConfig;
use edgecache::trace::SynthConfig;

use crate::args::RunOverrides;
use crate::error::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// A run config from TOML, or from JSON holding a config, a manifest or a
/// whole report (the first run's manifest is used).
pub fn load_run_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = read(path)?;
    let bad = |e: &dyn std::fmt::Display| CliError::config(format!("{}: {e}", path.display()));
    if !is_json(path) {
        return toml::from_str(&text).map_err(|e| bad(&e));
    }
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(&e))?;
    let config = if let Some(c) = value.get("config") {
        c.clone()
    } else if let Some(c) = value.pointer("/runs/0/manifest/config") {
        c.clone()
    } else {
        value
    };
    serde_json::from_value(config).map_err(|e| bad(&e))
}

pub fn load_synth_config(path: &Path) -> Result<SynthConfig, CliError> {
    let text = read(path)?;
    toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn set<T: PartialEq + std::fmt::Debug>(field: &mut T, value: Option<T>, name: &str) {
    if let Some(v) = value {
        if *field != v {
            log::info!("override {name}: {field:?} -> {v:?}");
        }
        *field = v;
    }
}

/// Apply command-line values on top of the config file, last wins.
pub fn apply_overrides(cfg: &mut RunConfig, o: &RunOverrides) {
    set(&mut cfg.capacity, o.capacity, "capacity");
    if let Some(l) = o.lambda {
        let w = RewardWeights::with_lambda(l);
        set(&mut cfg.weights, Some(w), "lambda");
    }
    set(&mut cfg.weights.hit, o.lambda_r, "lambda_r");
    set(&mut cfg.weights.cost, o.lambda_c, "lambda_c");
    set(&mut cfg.rl.gamma, o.gamma, "gamma");
    set(&mut cfg.rl.alpha0, o.alpha0, "alpha0");
    set(&mut cfg.rl.beta0, o.beta0, "beta0");
    set(&mut cfg.rl.rollouts, o.rollouts, "rollouts");
    set(&mut cfg.rl.window, o.delta_t, "delta_t");
    set(&mut cfg.glm.age_cap, o.age_cap, "age_cap");
    set(&mut cfg.seed, o.seed, "seed");
    set(&mut cfg.window, o.window, "window");
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[derive(Parser)]
    struct Wrap {
        #[command(flatten)]
        o: RunOverrides,
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "policy = \"lru\"\ncapacity = 7\n\n[weights]\nhit = 1.0\ncost = 2.0\n\n[rl]\ngamma = 0.5\n").unwrap();
        let mut cfg = load_run_config(&path).unwrap();
        assert_eq!((cfg.capacity, cfg.weights.cost, cfg.rl.gamma), (7, 2.0, 0.5));
        let w = Wrap::parse_from(["x", "-M", "3", "--lambda", "0.5", "--lambda-r", "2", "--gamma", "0.7"]);
        apply_overrides(&mut cfg, &w.o);
        assert_eq!(cfg.capacity, 3);
        assert_eq!(cfg.weights, RewardWeights { hit: 2.0, cost: 0.5 });
        assert_eq!(cfg.rl.gamma, 0.7);
    }

    #[test]
    fn json_sources() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { capacity: 9, ..Default::default() };
        let plain = dir.path().join("c.json");
        fs::write(&plain, serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(load_run_config(&plain).unwrap(), cfg);
        let manifest = dir.path().join("m.json");
        fs::write(&manifest, format!("{{\"code_version\":\"x\",\"config\":{}}}", serde_json::to_string(&cfg).unwrap())).unwrap();
        assert_eq!(load_run_config(&manifest).unwrap(), cfg);
        let broken = dir.path().join("b.toml");
        fs::write(&broken, "capacity = \"many\"").unwrap();
        assert!(load_run_config(&broken).is_err());
    }
}
