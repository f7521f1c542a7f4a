mod args;
mod config;
mod error;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use edgecache::harness::{compare, export_report, read_report, read_report_csv, run_policy, ComparisonReport, ReportFormat, RunConfig};
use edgecache::policies::PolicyKind;
use edgecache::trace::{generate_synthetic, ingest_events, read_events_csv, read_release_csv, read_trace, write_trace, CsvLayout, IngestOptions, SynthConfig};
use edgecache::SlottedTrace;

use args::{Cli, Command, CompareArgs, IngestArgs, Output, ReportArgs, RunArgs, RunOverrides, SynthArgs};
use error::{CliError, Kind};

fn demo_trace_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/demo_trace.csv")
}

fn load_trace(path: Option<&Path>, slots: Option<usize>) -> Result<SlottedTrace, CliError> {
    let path = path.map_or_else(demo_trace_path, Path::to_path_buf);
    let trace = read_trace(&path)?;
    Ok(match slots {
        Some(n) if n < trace.num_slots() => trace.truncated(n)?,
        _ => trace,
    })
}

fn delimiter(c: char) -> Result<u8, CliError> {
    u8::try_from(c).map_err(|_| CliError::config(format!("delimiter {c:?} is not a single byte")))
}

fn ingest(a: IngestArgs) -> Result<(), CliError> {
    let layout = CsvLayout {
        delimiter: delimiter(a.delimiter)?,
        has_header: None,
        file_column: a.file_column,
        timestamp_column: a.timestamp_column,
    };
    let events = read_events_csv(&a.input, &layout)?;
    let origin = match a.origin {
        Some(o) => o,
        None => events.iter().map(|e| e.timestamp).min().unwrap_or(0),
    };
    let options = IngestOptions {
        release_timestamps: match &a.release {
            Some(p) => read_release_csv(p, layout.delimiter)?,
            None => Default::default(),
        },
        drop_released_before_origin: a.drop_old_releases,
        max_slots: a.slots,
    };
    let trace = ingest_events(&events, a.slot_duration, origin, &options)?;
    write_trace(&trace, &a.out)?;
    println!(
        "wrote {}: {} slots, {} files, {} requests",
        a.out.display(),
        trace.num_slots(),
        trace.num_files(),
        trace.total_requests()
    );
    Ok(())
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    let mut cfg = match &a.config {
        Some(p) => config::load_synth_config(p)?,
        None => SynthConfig::default(),
    };
    if let Some(n) = a.slots {
        cfg.num_slots = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let trace = generate_synthetic(&cfg)?;
    write_trace(&trace, &a.out)?;
    println!(
        "wrote {}: {} slots, {} files, {} requests",
        a.out.display(),
        trace.num_slots(),
        trace.num_files(),
        trace.total_requests()
    );
    Ok(())
}

fn base_config(o: &RunOverrides) -> Result<RunConfig, CliError> {
    let mut cfg = match &o.config {
        Some(p) => config::load_run_config(p)?,
        None => RunConfig::default(),
    };
    config::apply_overrides(&mut cfg, o);
    cfg.validate()?;
    Ok(cfg)
}

fn output_format(out: &Output, path: &Path) -> Result<ReportFormat, CliError> {
    match &out.format {
        Some(f) => Ok(f.parse()?),
        None => Ok(ReportFormat::from_path(path).unwrap_or(ReportFormat::Json)),
    }
}

fn summary_table(report: &ComparisonReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<14} {:>9} {:>14} {:>10} {:>10} {:>10}", "policy", "hit_ratio", "cum_reward", "hits", "cost", "requests");
    for (label, r) in report.labels.iter().zip(&report.runs) {
        let _ = writeln!(
            s,
            "{:<14} {:>9.4} {:>14.1} {:>10} {:>10} {:>10}",
            label,
            r.overall_hit_ratio,
            r.cumulative_reward,
            r.total_hits(),
            r.total_cost(),
            r.total_requests()
        );
    }
    s
}

fn finish(report: &ComparisonReport, out: &Output) -> Result<(), CliError> {
    print!("{}", summary_table(report));
    if let Some(path) = &out.out {
        export_report(report, output_format(out, path)?, path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(a: RunArgs) -> Result<(), CliError> {
    let mut cfg = base_config(&a.run)?;
    if let Some(p) = &a.policy {
        cfg.policy = p.parse()?;
    }
    let trace = load_trace(a.trace.as_deref(), a.run.slots)?;
    let result = run_policy(&trace, &cfg)?;
    finish(&ComparisonReport::from_runs(vec![result]), &a.output)
}

fn compare_cmd(a: CompareArgs) -> Result<(), CliError> {
    let base = base_config(&a.run)?;
    let kinds: Vec<PolicyKind> = if a.policies.is_empty() {
        PolicyKind::ALL.to_vec()
    } else {
        a.policies.iter().map(|p| p.trim().parse()).collect::<Result<_, _>>()?
    };
    let configs: Vec<RunConfig> = kinds.into_iter().map(|policy| RunConfig { policy, ..base.clone() }).collect();
    let trace = load_trace(a.trace.as_deref(), a.run.slots)?;
    let report = compare(&trace, &configs, a.jobs)?;
    finish(&report, &a.output)?;
    if configs.iter().any(|c| c.policy == PolicyKind::Rlma) {
        for m in report.margins.iter().filter(|m| m.a == "rlma") {
            if let Some(r) = m.cumulative_reward {
                println!("rlma vs {}: cumulative reward {:+.1}%", m.b, 100.0 * r);
            }
        }
    }
    Ok(())
}

fn report_cmd(a: ReportArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.input).map_err(|e| CliError::io(format!("{}: {e}", a.input.display())))?;
    if ReportFormat::from_path(&a.input) == Some(ReportFormat::Csv) {
        if a.out.is_some() {
            return Err(CliError::config("re-export needs a json report"));
        }
        // policy -> (slots, hits, cost, cumulative reward)
        let mut agg: BTreeMap<String, (usize, u64, u64, f64)> = BTreeMap::new();
        let mut order = Vec::new();
        for row in read_report_csv(&text)? {
            let e = agg.entry(row.policy.clone()).or_insert_with(|| {
                order.push(row.policy.clone());
                (0, 0, 0, 0.0)
            });
            *e = (e.0 + 1, e.1 + row.hits, e.2 + row.cost, row.cum_reward);
        }
        println!("{:<14} {:>7} {:>10} {:>10} {:>14}", "policy", "slots", "hits", "cost", "cum_reward");
        for p in order {
            let (n, h, c, r) = agg[&p];
            println!("{p:<14} {n:>7} {h:>10} {c:>10} {r:>14.1}");
        }
        return Ok(());
    }
    let report = read_report(&text)?;
    let out = Output { out: a.out, format: a.format };
    finish(&report, &out)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Synth(a) => synth(a),
        Command::Run(a) => run(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Report(a) => report_cmd(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EDGECACHE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::new(Kind::Usage, first));
            return ExitCode::from(Kind::Usage.exit_code());
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.kind.exit_code())
        }
    }
}
