use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;

use pointeval::cache::CapacityCache;
use pointeval::cli::{run, Mode, RunConfig, RunOptions};
use pointeval::Error;

/// Capacity-series criteria for bounded point evaluations: batch runner.
#[derive(Parser, Debug)]
#[command(name = "pointeval", version)]
struct Args {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,

    /// Output directory for report files.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Capacity cache directory (default: <out>/cache).
    #[arg(long)]
    cache_dir: Option<PathBuf>,

    /// Override the largest shell index.
    #[arg(long)]
    max_n: Option<u32>,

    /// Multiply every grid resolution by this factor.
    #[arg(long)]
    resolution_scale: Option<f64>,

    /// Override the configuration seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Disable the capacity cache.
    #[arg(long)]
    no_cache: bool,

    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    column: Option<usize>,
}

fn fail(kind: &str, message: String, line: Option<usize>, column: Option<usize>, code: u8) -> ExitCode {
    let report = ErrorReport { error: ErrorBody { kind, message, line, column } };
    println!("{}", serde_json::to_string_pretty(&report).expect("error report serializes"));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(jobs) = args.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            return fail("io", format!("cannot read {}: {e}", args.config.display()), None, None, 2)
        }
    };
    let mut cfg: RunConfig = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            return fail("config", e.to_string(), Some(e.line()), Some(e.column()), 2);
        }
    };

    if let Some(n) = args.max_n {
        cfg.n_max = Some(n);
    }
    if let Some(scale) = args.resolution_scale {
        cfg.h0 = Some(cfg.h0.unwrap_or(1.0 / 16.0) * scale);
        if let Some(ladder) = cfg.ladder.as_mut() {
            for h in ladder.iter_mut() {
                *h *= scale;
            }
        }
        if let Some(probe) = cfg.probe.as_mut() {
            probe.grid_h *= scale;
        }
    }
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }

    let cache = if args.no_cache {
        None
    } else {
        let dir = args.cache_dir.clone().unwrap_or_else(|| args.out.join("cache"));
        match CapacityCache::new(&dir) {
            Ok(c) => Some(c),
            Err(e) => {
                return fail("io", format!("cannot open cache dir {}: {e}", dir.display()), None, None, 2)
            }
        }
    };

    let opts = RunOptions { out_dir: args.out.clone(), cache };
    match run(&cfg, &opts) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if cfg.mode == Mode::Criterion {
                if let Ok(bytes) = std::fs::read(args.out.join("criterion.json")) {
                    if let Ok(v) = serde_json::from_slice::<serde_json::Value>(&bytes) {
                        if let Some(verdict) = v.get("verdict").and_then(|x| x.as_str()) {
                            println!("verdict: {verdict}");
                        }
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = e.exit_code() as u8;
            let kind = if code == 2 { "config" } else { "numerical" };
            match e {
                Error::Serde(ref se) => {
                    fail(kind, se.to_string(), Some(se.line()), Some(se.column()), code)
                }
                _ => fail(kind, e.to_string(), None, None, code),
            }
        }
    }
}
