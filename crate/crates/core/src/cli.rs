//! Command-line adapters. Each subcommand loads configuration, calls the
//! library and prints or writes the result.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use crate::clock::Clock;
use crate::config::RunConfigFile;
use crate::dataset::{self, FeatureBounds};
use crate::ledger::{Chain, MiningMode};
use crate::lstm::{self, LstmParams};
use crate::metrics::{self, TableFormat};
use crate::offchain::ContentAddress;
use crate::pipeline::{self, PipelineConfig};
use crate::trust;
use crate::vae::{self, VaeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Text,
}

impl From<Format> for TableFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => TableFormat::Csv,
            Format::Json => TableFormat::Json,
            Format::Text => TableFormat::Text,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "medledger", version, about = "Trust-filtered ledger and LSTM intrusion detection simulator")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory (created if absent).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load (or synthesize) the dataset and write the normalized rows.
    Ingest,
    /// Train the privacy VAE on the training split.
    TrainVae,
    /// Train the LSTM classifier on the training split.
    TrainLstm {
        /// Factorize the stacked weight matrices to this rank.
        #[arg(long)]
        rank: Option<usize>,
    },
    /// Evaluate a saved LSTM on the held-out split.
    Detect {
        /// Model file; defaults to `<out>/models/lstm.bin`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run the full pipeline and write a run directory.
    Simulate,
    /// Detection and false alarm rates across attack percentages.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.4,0.5,0.6,0.7,0.8")]
        aps: Vec<f64>,
    },
    /// Verify a chain file or a run directory containing `chain.jsonl`.
    VerifyChain {
        path: PathBuf,
        /// Required difficulty; defaults to the one recorded in the file.
        #[arg(long)]
        difficulty: Option<u32>,
    },
    /// Wall-clock throughput of each phase.
    Bench {
        #[arg(long, default_value_t = 2000)]
        transactions: usize,
    },
}

struct RunContext {
    file: RunConfigFile,
    out: PathBuf,
    format: Format,
}

impl RunContext {
    fn pipeline(&self) -> &PipelineConfig {
        &self.file.pipeline
    }
}

fn context(cli: &Cli) -> anyhow::Result<RunContext> {
    let mut file = match &cli.config {
        Some(path) => RunConfigFile::load(path)?,
        None => RunConfigFile::default(),
    };
    if let Some(seed) = cli.seed {
        file.pipeline.seed = seed;
    }
    file.pipeline.validate()?;
    let out = cli.out.clone().unwrap_or_else(|| file.out.clone());
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    Ok(RunContext {
        file,
        out,
        format: cli.format,
    })
}

/// Runs one parsed command, writing human or machine output to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> anyhow::Result<()> {
    if let Command::VerifyChain { path, difficulty } = &cli.command {
        return verify_chain(path, *difficulty, cli.format, stdout);
    }
    let ctx = context(cli)?;
    match &cli.command {
        Command::Ingest => ingest(&ctx, stdout),
        Command::TrainVae => train_vae(&ctx, stdout),
        Command::TrainLstm { rank } => train_lstm(&ctx, *rank, stdout),
        Command::Detect { model } => detect(&ctx, model.as_deref(), stdout),
        Command::Simulate => simulate(&ctx, stdout),
        Command::Sweep { aps } => sweep(&ctx, aps, stdout),
        Command::Bench { transactions } => bench(&ctx, *transactions, stdout),
        Command::VerifyChain { .. } => unreachable!("handled above"),
    }
}

fn ingest(ctx: &RunContext, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let (schema, rows) = ctx.file.dataset.load(ctx.pipeline().seed)?;
    let path = ctx.out.join("ingested.csv");
    dataset::write_csv(&path, &schema, &rows)?;
    let hist = dataset::class_histogram(&rows, schema.class_count());
    let width = rows.first().map_or(0, |r| r.features.len());
    match ctx.format {
        Format::Json => {
            let counts: serde_json::Map<_, _> = schema
                .class_names
                .iter()
                .zip(&hist)
                .map(|(n, c)| (n.clone(), serde_json::json!(c)))
                .collect();
            let doc = serde_json::json!({"rows": rows.len(), "width": width, "classes": counts, "path": path});
            writeln!(stdout, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
        Format::Csv => {
            writeln!(stdout, "class,rows")?;
            for (n, c) in schema.class_names.iter().zip(&hist) {
                writeln!(stdout, "{n},{c}")?;
            }
        }
        Format::Text => {
            writeln!(stdout, "{} rows, {} features -> {}", rows.len(), width, path.display())?;
            for (n, c) in schema.class_names.iter().zip(&hist) {
                writeln!(stdout, "  {n:<12} {c}")?;
            }
        }
    }
    Ok(())
}

fn train_split(ctx: &RunContext) -> anyhow::Result<(dataset::DatasetSchema, Vec<dataset::SensorTransaction>, Vec<dataset::SensorTransaction>)> {
    let cfg = ctx.pipeline();
    let (schema, rows) = ctx.file.dataset.load(cfg.seed)?;
    let (train, test) = dataset::split(&rows, cfg.train_fraction, cfg.seed)?;
    Ok((schema, train, test))
}

fn train_vae(ctx: &RunContext, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = ctx.pipeline();
    let (_, train, _) = train_split(ctx)?;
    let features: Vec<Vec<f64>> = train.into_iter().map(|t| t.features).collect();
    let width = features.first().map_or(0, Vec::len);
    let init = VaeParams::new(width, &cfg.vae, cfg.seed)?;
    let (model, trace) = vae::train(
        &init,
        &features,
        &vae::TrainConfig {
            epochs: cfg.vae_epochs,
            batch_size: cfg.batch_size,
            learning_rate: cfg.learning_rate,
            seed: cfg.seed,
        },
    )?;
    let path = ctx.out.join("models").join("vae.bin");
    model.save(&path, cfg.seed)?;
    match ctx.format {
        Format::Json => writeln!(stdout, "{}", serde_json::json!({"model": path, "loss": trace}))?,
        Format::Csv => {
            writeln!(stdout, "epoch,loss")?;
            for (e, l) in trace.iter().enumerate() {
                writeln!(stdout, "{e},{l}")?;
            }
        }
        Format::Text => writeln!(
            stdout,
            "vae trained for {} epochs, final loss {:.5} -> {}",
            trace.len(),
            trace.last().copied().unwrap_or(f64::NAN),
            path.display()
        )?,
    }
    Ok(())
}

fn train_lstm(ctx: &RunContext, rank: Option<usize>, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = PipelineConfig {
        lstm_rank: rank.or(ctx.pipeline().lstm_rank),
        ..ctx.pipeline().clone()
    };
    let (schema, train, test) = train_split(ctx)?;
    let width = train.first().map_or(0, |t| t.features.len());
    let (fit, validation) = pipeline::windows_with_holdout(&train, cfg.window, cfg.validation_fraction, cfg.seed);
    let mut init = LstmParams::new(width, cfg.lstm_hidden, schema.class_count(), cfg.seed);
    if let Some(r) = cfg.lstm_rank {
        init = init.factorized(r);
    }
    let outcome = lstm::train_classifier(&init, &fit, &validation, &cfg.classifier_train_config())?;
    let test_acc = lstm::accuracy(&outcome.params, &lstm::build_windows(&test, cfg.window))?;
    let path = ctx.out.join("models").join("lstm.bin");
    outcome.params.save(&path, cfg.seed)?;
    match ctx.format {
        Format::Json => writeln!(
            stdout,
            "{}",
            serde_json::json!({
                "model": path,
                "rank": cfg.lstm_rank,
                "parameters": outcome.params.param_count(),
                "test_accuracy": test_acc,
                "stopped_early": outcome.stopped_early,
                "trace": outcome.trace,
            })
        )?,
        Format::Csv => {
            writeln!(stdout, "epoch,loss,train_accuracy,validation_accuracy")?;
            for s in &outcome.trace {
                let v = s.validation_accuracy.map(|v| v.to_string()).unwrap_or_default();
                writeln!(stdout, "{},{},{},{v}", s.epoch, s.loss, s.train_accuracy)?;
            }
        }
        Format::Text => writeln!(
            stdout,
            "lstm ({} parameters) trained for {} epochs, test accuracy {:.4} -> {}",
            outcome.params.param_count(),
            outcome.trace.len(),
            test_acc,
            path.display()
        )?,
    }
    Ok(())
}

fn detect(ctx: &RunContext, model: Option<&Path>, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = ctx.pipeline();
    let default_path = ctx.out.join("models").join("lstm.bin");
    let path = model.unwrap_or(&default_path);
    let params = LstmParams::load(path).with_context(|| format!("loading {}", path.display()))?;
    let (schema, _, test) = train_split(ctx)?;
    let windows = lstm::build_windows(&test, cfg.window);
    if windows.is_empty() {
        bail!("held-out split yields no complete windows");
    }
    let seqs: Vec<Vec<Vec<f64>>> = windows.iter().map(|w| w.steps.clone()).collect();
    let preds = lstm::predict_batch(&params, &seqs, 4)?;
    let truth: Vec<usize> = windows.iter().map(|w| w.label).collect();
    let pred: Vec<usize> = preds.iter().map(|p| p.class).collect();
    let cm = metrics::confusion(&truth, &pred, schema.class_count())?;
    let report = metrics::report_with(&cm, schema.class_names.clone(), cfg.recall)?;
    write!(stdout, "{}", metrics::emit_tables(&report, ctx.format.into()))?;
    Ok(())
}

fn simulate(ctx: &RunContext, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = ctx.pipeline();
    let (schema, rows) = ctx.file.dataset.load(cfg.seed)?;
    let sim = pipeline::run(cfg, &schema, &rows)?;
    let dir = pipeline::run_dir(&ctx.out, cfg);
    pipeline::write_artifacts(&dir, &sim)?;
    std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(&ctx.file)? + "\n")?;
    let r = &sim.report;
    match ctx.format {
        Format::Json => write!(stdout, "{}", r.to_json())?,
        Format::Csv | Format::Text => {
            if ctx.format == Format::Text {
                let c = &r.counters;
                writeln!(stdout, "run directory: {}", dir.display())?;
                writeln!(
                    stdout,
                    "offered {}, admitted {}, quarantined {} ({} untrusted, {} low reputation)",
                    c.offered, c.admitted, c.quarantined, c.quarantined_untrusted, c.quarantined_reputation
                )?;
                writeln!(
                    stdout,
                    "blocks mined {}, anomalies flagged {}, chain {}",
                    c.blocks_mined, c.anomalies_flagged, r.chain.verification
                )?;
            }
            match &r.metrics {
                Some(m) => write!(stdout, "{}", metrics::emit_tables(m, ctx.format.into()))?,
                None => writeln!(stdout, "no transactions were classified")?,
            }
        }
    }
    Ok(())
}

fn sweep(ctx: &RunContext, aps: &[f64], stdout: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = ctx.pipeline();
    let (schema, rows) = ctx.file.dataset.load(cfg.seed)?;
    let table = pipeline::sweep(cfg, &schema, &rows, aps)?;
    let dir = pipeline::run_dir(&ctx.out, cfg);
    std::fs::create_dir_all(&dir)?;
    let csv = pipeline::sweep_csv(&table);
    std::fs::write(dir.join("sweep.csv"), &csv)?;
    std::fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(&table)? + "\n")?;
    match ctx.format {
        Format::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(&table)?)?,
        Format::Csv => write!(stdout, "{csv}")?,
        Format::Text => {
            writeln!(stdout, "{:>5}  {:>14}  {:>16}", "AP", "detection rate", "false alarm rate")?;
            for r in &table {
                writeln!(stdout, "{:>5.2}  {:>14.4}  {:>16.4}", r.ap, r.detection_rate, r.false_alarm_rate)?;
            }
        }
    }
    Ok(())
}

fn verify_chain(path: &Path, difficulty: Option<u32>, format: Format, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let file = if path.is_dir() { path.join("chain.jsonl") } else { path.to_path_buf() };
    let mut chain = Chain::read_jsonl(&file).with_context(|| format!("reading {}", file.display()))?;
    if let Some(d) = difficulty {
        chain = Chain::from_blocks(chain.blocks().to_vec(), d);
    }
    let report = chain.verify();
    match format {
        Format::Json => writeln!(stdout, "{}", serde_json::to_string(&report)?)?,
        _ => writeln!(stdout, "{}: {report}", file.display())?,
    }
    if !report.is_ok() {
        bail!("chain verification failed: {report}");
    }
    Ok(())
}

fn bench(ctx: &RunContext, n: usize, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = ctx.pipeline();
    let schema = ctx.file.dataset.schema()?;
    let rows = dataset::synthesize(&schema, n.max(1), cfg.seed)?;
    let bounds = FeatureBounds::from_transactions(&rows).context("no rows")?;
    let width = bounds.len();
    let per_sec = |count: usize, start: Instant| count as f64 / start.elapsed().as_secs_f64().max(1e-9);

    let start = Instant::now();
    for tx in &rows {
        trust::score_transaction(tx, &bounds, &cfg.thresholds)?;
    }
    let trust_rate = per_sec(rows.len(), start);

    let vae = VaeParams::new(width, &cfg.vae, cfg.seed)?;
    let start = Instant::now();
    for tx in &rows {
        vae::transform(&vae, &tx.features, tx.seq)?;
    }
    let transform_rate = per_sec(rows.len(), start);

    let blocks = (n / cfg.block_batch).max(1);
    let mut wall = crate::clock::WallClock::default();
    let mut chain = Chain::new(cfg.difficulty, wall.now_ms(), MiningMode::Deterministic)?;
    let start = Instant::now();
    for b in 0..blocks {
        let addr = ContentAddress::of(&(b as u64).to_be_bytes());
        let ts = wall.now_ms().max(chain.tip().timestamp);
        chain.append_batch(&[addr], ts)?;
    }
    let block_rate = per_sec(blocks, start);

    let model = LstmParams::new(width, cfg.lstm_hidden, schema.class_count(), cfg.seed);
    let seqs: Vec<Vec<Vec<f64>>> = rows
        .chunks_exact(cfg.window)
        .map(|c| c.iter().map(|t| t.features.clone()).collect())
        .collect();
    let start = Instant::now();
    lstm::predict_batch(&model, &seqs, 1)?;
    let infer_rate = per_sec(seqs.len(), start);

    let results = [
        ("trust_transactions_per_s", trust_rate),
        ("vae_transforms_per_s", transform_rate),
        ("blocks_per_s", block_rate),
        ("lstm_inferences_per_s", infer_rate),
    ];
    match ctx.format {
        Format::Json => {
            let doc: serde_json::Map<_, _> = results.iter().map(|(k, v)| (k.to_string(), serde_json::json!(v))).collect();
            writeln!(stdout, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
        Format::Csv => {
            writeln!(stdout, "phase,per_second")?;
            for (k, v) in results {
                writeln!(stdout, "{k},{v}")?;
            }
        }
        Format::Text => {
            for (k, v) in results {
                writeln!(stdout, "{k:<26} {v:>14.1}")?;
            }
        }
    }
    Ok(())
}

/// Parses `args` and runs; returns the process exit code (0 success,
/// 1 domain error, 2 usage error).
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{}", e.render());
                return 0;
            }
            let _ = write!(stderr, "{}", e.render());
            return 2;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            1
        }
    }
}
