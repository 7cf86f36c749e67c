//! `myvt`: generate datasets, train MYVT or VT, plot metrics, apply proxes.
//!
//! Exit codes: 0 on success, 2 for usage and parse errors, 3 when training
//! hits a non-finite value, 1 for anything else (I/O).

mod config;
mod plot;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use myvt::data::{make_dataset, read_dataset, read_rows, write_dataset, write_rows};
use myvt::exec::Executor;
use myvt::nn::{write_checkpoint, Mlp};
use myvt::train::presets::{dataset_spec, CaseStudy};
use myvt::train::{read_metrics, run, MetricsWriter};
use serde_json::{json, Map, Value};

use config::{regularizer_from, RunConfig};
use plot::{NormKind, Series};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    File { path: PathBuf, source: myvt::Error },

    #[error(transparent)]
    Lib(#[from] myvt::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        let lib = match self {
            CliError::Usage(_) | CliError::Json(_) => return 2,
            CliError::File { source, .. } => source,
            CliError::Lib(e) => e,
        };
        match lib {
            myvt::Error::NumericalAbort { .. } => 3,
            myvt::Error::Io(_) => 1,
            _ => 2,
        }
    }
}

fn at_path(path: &Path) -> impl FnOnce(myvt::Error) -> CliError + '_ {
    move |source| CliError::File { path: path.to_path_buf(), source }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| at_path(path)(e.into()))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| at_path(path)(e.into()))
}

#[derive(Parser)]
#[command(name = "myvt", version, about = "Moreau-Yoshida variational transport experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset (truth row plus noisy examples) as CSV.
    GenData(GenDataArgs),
    /// Train a generator (MYVT) or a particle set (VT) and record metrics.
    Train(TrainArgs),
    /// Draw MSE and norm trajectories from one or more metrics files as SVG.
    Plot(PlotArgs),
    /// Apply a regularizer's prox to every row of a CSV file.
    Prox(ProxArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Sparse,
    Pwc,
}

impl CaseArg {
    fn study(self) -> CaseStudy {
        match self {
            CaseArg::Sparse => CaseStudy::Sparse,
            CaseArg::Pwc => CaseStudy::PiecewiseConstant,
        }
    }

    fn name(self) -> &'static str {
        match self {
            CaseArg::Sparse => "sparse",
            CaseArg::Pwc => "pwc",
        }
    }
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, value_enum, default_value = "sparse")]
    case: CaseArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n_examples: Option<usize>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    sparsity: Option<usize>,
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    amplitude_low: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    amplitude_high: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    /// JSON run configuration; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    case: Option<CaseArg>,
    #[arg(long, value_parser = ["myvt", "vt"])]
    method: Option<String>,
    #[arg(long, value_parser = ["kl", "js"])]
    divergence: Option<String>,
    #[arg(long, value_parser = ["l1", "tv1d", "tv2d"])]
    reg: Option<String>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    data_seed: Option<u64>,
    /// Dataset file from `gen-data`; otherwise the dataset is generated.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
    /// Record wall-clock milliseconds in metrics.csv.
    #[arg(long)]
    record_time: bool,
    /// Any other configuration key, as `key=value` with a JSON value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct PlotArgs {
    /// Metrics CSV files, one line per file in each panel.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Legend labels in input order; defaults to the file stems.
    #[arg(long = "label")]
    labels: Vec<String>,
    #[arg(long, value_parser = ["l1", "tv"], default_value = "l1")]
    norm: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProxArgs {
    #[arg(long, value_parser = ["l1", "tv1d", "tv2d"])]
    kind: String,
    /// Prox scale.
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    height: usize,
    #[arg(long, default_value_t = 0)]
    width: usize,
}

fn gen_data(args: GenDataArgs) -> Result<(), CliError> {
    let mut spec = dataset_spec(args.case.study(), args.seed);
    spec.d = args.d.unwrap_or(spec.d);
    spec.n_examples = args.n_examples.unwrap_or(spec.n_examples);
    spec.noise_std = args.noise_std.unwrap_or(spec.noise_std);
    spec.sparsity = args.sparsity.unwrap_or(spec.sparsity);
    spec.n_segments = args.segments.unwrap_or(spec.n_segments);
    spec.amplitude.0 = args.amplitude_low.unwrap_or(spec.amplitude.0);
    spec.amplitude.1 = args.amplitude_high.unwrap_or(spec.amplitude.1);
    let data = make_dataset(&spec)?;
    let mut out = create(&args.out)?;
    write_dataset(&mut out, &data).map_err(at_path(&args.out))?;
    out.flush().map_err(|e| at_path(&args.out)(e.into()))?;
    Ok(())
}

fn flag_overrides(args: &TrainArgs) -> Result<Map<String, Value>, CliError> {
    let mut m = Map::new();
    let mut put = |k: &str, v: Value| {
        m.insert(k.to_string(), v);
    };
    if let Some(c) = args.case {
        put("case", json!(c.name()));
    }
    if let Some(v) = &args.method {
        put("method", json!(v));
    }
    if let Some(v) = &args.divergence {
        put("divergence", json!(v));
    }
    if let Some(v) = &args.reg {
        put("regularizer", json!(v));
    }
    if let Some(v) = args.iters {
        put("iterations", json!(v));
    }
    if let Some(v) = args.alpha {
        put("alpha", json!(v));
    }
    if let Some(v) = args.lambda {
        put("lambda", json!(v));
    }
    if let Some(v) = args.seed {
        put("seed", json!(v));
    }
    if let Some(v) = args.data_seed {
        put("data_seed", json!(v));
    }
    if let Some(v) = &args.data {
        put("data_path", json!(v));
    }
    if let Some(v) = &args.out {
        put("out_dir", json!(v));
    }
    if let Some(v) = args.checkpoint_every {
        put("checkpoint_every", json!(v));
    }
    if args.record_time {
        put("record_time", json!(true));
    }
    for item in &args.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {item:?}")))?;
        // Bare words are taken as strings so `--set optimizer=sgd` works unquoted.
        let value = serde_json::from_str(v).unwrap_or_else(|_| json!(v));
        put(k.trim(), value);
    }
    Ok(m)
}

fn load_run_config(args: &TrainArgs) -> Result<RunConfig, CliError> {
    let mut merged = match &args.config {
        None => Map::new(),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| at_path(path)(e.into()))?;
            match serde_json::from_str(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(CliError::Usage(format!("{}: expected a JSON object", path.display()))),
                Err(e) => return Err(CliError::Usage(format!("{}: {e}", path.display()))),
            }
        }
    };
    merged.extend(flag_overrides(args)?);
    RunConfig::resolve(&merged)
}

fn save_checkpoint(net: &Mlp, path: &Path) -> Result<(), CliError> {
    let tmp = path.with_extension("ckpt.tmp");
    let mut out = create(&tmp)?;
    write_checkpoint(net, &mut out).map_err(at_path(&tmp))?;
    out.flush().map_err(|e| at_path(&tmp)(e.into()))?;
    drop(out);
    fs::rename(&tmp, path).map_err(|e| at_path(path)(e.into()))
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    let rc = load_run_config(&args)?;
    let config = rc.train_config()?;
    let data = match &rc.data_path {
        Some(path) => read_dataset(open(path)?).map_err(at_path(path))?,
        None => make_dataset(&rc.synthetic_spec()?)?,
    };
    let exec = Executor::from_env()?;
    let dir = rc.out_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| at_path(&dir)(e.into()))?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(&rc)? + "\n")
        .map_err(|e| at_path(&dir)(e.into()))?;

    let metrics_path = dir.join("metrics.csv");
    let mut metrics = MetricsWriter::new(create(&metrics_path)?, rc.record_time).map_err(at_path(&metrics_path))?;
    let generator_path = dir.join("generator.ckpt");
    let critic_path = dir.join("critic.ckpt");
    let save = |state: &myvt::train::TrainState| -> Result<(), CliError> {
        if let Some(g) = &state.generator {
            save_checkpoint(g, &generator_path)?;
        }
        save_checkpoint(&state.critic.net, &critic_path)
    };

    let start = Instant::now();
    let mut last_checkpoint: Option<PathBuf> = None;
    let mut observe_error = None;
    let result = run(&config, &data, &exec, |row, state| {
        metrics.write(row)?;
        let k = row.iteration + 1;
        if rc.checkpoint_every > 0 && k % rc.checkpoint_every == 0 {
            metrics.flush()?;
            if let Err(e) = save(state) {
                observe_error = Some(e);
                return Err(myvt::Error::Checkpoint("could not write checkpoint".into()));
            }
            last_checkpoint = Some(dir.clone());
        }
        Ok(())
    });
    metrics.flush().map_err(at_path(&metrics_path))?;
    let outcome = match result {
        Ok(o) => o,
        Err(myvt::Error::NumericalAbort { iteration, reason, .. }) => {
            return Err(CliError::Lib(myvt::Error::NumericalAbort {
                iteration,
                reason,
                checkpoint: last_checkpoint,
            }))
        }
        Err(e) => return Err(observe_error.unwrap_or(CliError::Lib(e))),
    };
    let wall_s = start.elapsed().as_secs_f64();
    save(&outcome.state)?;
    if let Some(p) = &outcome.particles {
        let path = dir.join("particles.csv");
        let mut out = create(&path)?;
        write_rows(&mut out, &p.particles).map_err(at_path(&path))?;
        out.flush().map_err(|e| at_path(&path)(e.into()))?;
    }
    let summary = json!({
        "final_mse": outcome.last.mse,
        "final_avg_l1": outcome.last.avg_l1,
        "final_avg_tv": outcome.last.avg_tv,
        "iterations": config.iterations,
        "wall_s": wall_s,
        "config_echo": rc,
        "code_version": env!("CARGO_PKG_VERSION"),
    });
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")
        .map_err(|e| at_path(&dir)(e.into()))?;
    println!(
        "{} iterations: mse {:.6}, avg_l1 {:.4}, avg_tv {:.4} -> {}",
        config.iterations,
        outcome.last.mse,
        outcome.last.avg_l1,
        outcome.last.avg_tv,
        dir.display()
    );
    Ok(())
}

fn plot(args: PlotArgs) -> Result<(), CliError> {
    if !args.labels.is_empty() && args.labels.len() != args.inputs.len() {
        return Err(CliError::Usage(format!(
            "{} labels for {} input files",
            args.labels.len(),
            args.inputs.len()
        )));
    }
    let mut series = Vec::new();
    for (i, path) in args.inputs.iter().enumerate() {
        let rows = read_metrics(open(path)?).map_err(at_path(path))?;
        let label = match args.labels.get(i) {
            Some(l) => l.clone(),
            None => path
                .file_stem()
                .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned()),
        };
        series.push(Series { label, rows });
    }
    let norm = if args.norm == "tv" { NormKind::Tv } else { NormKind::L1 };
    fs::write(&args.out, plot::render(&series, norm)).map_err(|e| at_path(&args.out)(e.into()))
}

fn prox(args: ProxArgs) -> Result<(), CliError> {
    let reg = regularizer_from(&args.kind, args.height, args.width, Default::default())?;
    reg.validate()?;
    let rows = read_rows(open(&args.input)?).map_err(at_path(&args.input))?;
    let out_rows = rows
        .iter()
        .map(|x| reg.prox(x, args.lambda))
        .collect::<myvt::Result<Vec<_>>>()?;
    let mut out = create(&args.output)?;
    write_rows(&mut out, &out_rows).map_err(at_path(&args.output))?;
    out.flush().map_err(|e| at_path(&args.output)(e.into()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train(a),
        Command::Plot(a) => plot(a),
        Command::Prox(a) => prox(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Lib(myvt::Error::NumericalAbort { checkpoint, .. }) = &e {
                match checkpoint {
                    Some(dir) => eprintln!("last checkpoint kept in {}", dir.display()),
                    None => eprintln!("no checkpoint was written before the abort"),
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
