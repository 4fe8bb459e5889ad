use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use lamp_core::datasets::tic_tac_toe;
use lamp_core::report::{self, RunSummary};
use lamp_core::subsample::{self, SubsampleEstimate};
use lamp_core::txdb::write_labels;
use lamp_core::{
    find_significant_with, parse_fimi, parse_labels, Findings, LabelVector, LampSearch,
    SearchOptions, Strategy, Tail, TransactionDatabase,
};

/// Significant itemset mining with family-wise error control (LAMP).
#[derive(Parser, Debug)]
#[command(name = "lamp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find the root frequency and every significant pattern.
    Run(RunArgs),
    /// Estimate the root frequency from subsamples.
    Estimate(EstimateArgs),
    /// Tabulate the LAMP correction factor against naive Bonferroni factors.
    Compare(CompareArgs),
    /// Write the built-in tic-tac-toe endgame dataset.
    GenTictactoe {
        /// Output directory for tictactoe.dat and tictactoe.lab
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Transaction database in FIMI format
    #[arg(long)]
    data: PathBuf,
    /// One 0/1 label per transaction
    #[arg(long, conflicts_with = "ratio", required_unless_present = "ratio")]
    labels: Option<PathBuf>,
    /// No labels: assume a minority class of floor(N / R) rows (testability only)
    #[arg(long)]
    ratio: Option<u64>,
    /// Target family-wise error rate
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Worker threads for the miner
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Inc,
    Dec,
    Brute,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Inc => Strategy::Incremental,
            StrategyArg::Dec => Strategy::Decremental,
            StrategyArg::Brute => Strategy::BruteForce,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TailArg {
    One,
    Two,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "inc")]
    strategy: StrategyArg,
    /// Fisher test tail(s)
    #[arg(long, value_enum, default_value = "one")]
    tail: TailArg,
    /// Directory for patterns.tsv and summary.json
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Subsampling ratio: each subsample has floor(N / K) rows
    #[arg(long = "K", short = 'K', default_value_t = 2)]
    k: u64,
    /// Number of subsamples (seeds seed, seed+1, ...)
    #[arg(long, default_value_t = 10)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Search the database as given instead of drawing subsamples
    #[arg(long)]
    no_resample: bool,
    /// Directory for estimate.json
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "inc")]
    strategy: StrategyArg,
    /// Directory for compare.tsv
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct EstimateReport {
    dataset: String,
    #[serde(rename = "N")]
    total: u64,
    #[serde(rename = "P")]
    num_items: u64,
    n: u64,
    alpha: f64,
    #[serde(rename = "K")]
    k: u64,
    reps: u64,
    resampled: bool,
    rng: String,
    approximate: bool,
    sigma_hat_mean: f64,
    sigma_hat_std: f64,
    estimated_testable_mean: f64,
    estimated_testable_std: f64,
    runs: Vec<SubsampleEstimate>,
    version: String,
}

struct Loaded {
    db: TransactionDatabase,
    labels: LabelVector,
    synthetic: bool,
}

fn load(args: &DataArgs) -> anyhow::Result<Loaded> {
    let file =
        File::open(&args.data).with_context(|| format!("opening {}", args.data.display()))?;
    let db = parse_fimi(BufReader::new(file))
        .with_context(|| format!("reading {}", args.data.display()))?;
    let (labels, synthetic) = match (&args.labels, args.ratio) {
        (Some(path), _) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let labels = parse_labels(BufReader::new(file), db.num_transactions())
                .with_context(|| format!("reading {}", path.display()))?;
            (labels, false)
        }
        (None, Some(r)) => (
            LabelVector::synthetic_ratio(db.num_transactions(), r)?,
            true,
        ),
        (None, None) => bail!("either --labels or --ratio is required"),
    };
    Ok(Loaded {
        db,
        labels,
        synthetic,
    })
}

fn options(args: &DataArgs) -> SearchOptions {
    SearchOptions {
        threads: args.threads.max(1),
        ..Default::default()
    }
}

fn create(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> anyhow::Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn findings(
    loaded: &Loaded,
    args: &DataArgs,
    strategy: Strategy,
    tail: Tail,
) -> anyhow::Result<Findings> {
    if loaded.synthetic {
        // no real labels: report testability only
        let search =
            LampSearch::with_options(&loaded.db, loaded.labels.n(), args.alpha, options(args))?;
        let result = search.run(strategy)?;
        return Ok(Findings {
            result,
            patterns: Vec::new(),
            tail,
            orientation: loaded.labels.orientation(),
            tables_evaluated: 0,
            notice: Some("synthetic labels from --ratio: testability only, no tests run".into()),
        });
    }
    Ok(find_significant_with(
        &loaded.db,
        &loaded.labels,
        args.alpha,
        strategy,
        tail,
        options(args),
    )?)
}

fn cmd_run(args: RunArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let loaded = load(&args.data)?;
    let tail = match args.tail {
        TailArg::One => Tail::One,
        TailArg::Two => Tail::Two,
    };
    let found = findings(&loaded, &args.data, args.strategy.into(), tail)?;
    let elapsed = start.elapsed().as_millis() as u64;
    let summary = RunSummary::from_findings(
        &args.data.data.display().to_string(),
        loaded.db.num_items() as u64,
        &found,
        elapsed,
    );
    let mut w = create(&args.out, "patterns.tsv")?;
    report::write_patterns_tsv(&found, &mut w)?;
    w.flush()?;
    write_json(&args.out, "summary.json", &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> anyhow::Result<()> {
    let loaded = load(&args.data)?;
    let total = loaded.db.num_transactions() as u64;
    if args.k == 0 || args.k > total {
        bail!(lamp_core::Error::Domain(format!(
            "K={} must lie in 1..={total}",
            args.k
        )));
    }
    if args.reps == 0 {
        bail!("--reps must be at least 1");
    }
    let n = loaded.labels.n();
    let opts = options(&args.data);
    let mut runs = Vec::new();
    for i in 0..args.reps {
        let seed = args.seed.wrapping_add(i);
        let est = if args.no_resample {
            subsample::estimate_root_with(&loaded.db, args.k, n, total, args.data.alpha, opts)?
        } else {
            subsample::estimate_with_seed(&loaded.db, args.k, n, args.data.alpha, seed, opts)?
        };
        runs.push(est);
    }
    let sig: Vec<f64> = runs.iter().map(|r| r.sigma_hat as f64).collect();
    let est: Vec<f64> = runs.iter().map(|r| r.estimated_testable as f64).collect();
    let (sm, ss) = subsample::mean_std(&sig);
    let (em, es) = subsample::mean_std(&est);
    let report = EstimateReport {
        dataset: args.data.data.display().to_string(),
        total,
        num_items: loaded.db.num_items() as u64,
        n,
        alpha: args.data.alpha,
        k: args.k,
        reps: args.reps,
        resampled: !args.no_resample,
        rng: subsample::RNG_NAME.to_string(),
        approximate: true,
        sigma_hat_mean: sm,
        sigma_hat_std: ss,
        estimated_testable_mean: em,
        estimated_testable_std: es,
        runs,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    write_json(&args.out, "estimate.json", &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> anyhow::Result<()> {
    let loaded = load(&args.data)?;
    let search = LampSearch::with_options(
        &loaded.db,
        loaded.labels.n(),
        args.data.alpha,
        options(&args.data),
    )?;
    let result = search.run(args.strategy.into())?;
    let p = loaded.db.num_items() as u64;
    let mut w = create(&args.out, "compare.tsv")?;
    report::write_compare_tsv(p, result.num_testable, &mut w)?;
    w.flush()?;
    report::write_compare_tsv(p, result.num_testable, std::io::stdout().lock())?;
    Ok(())
}

fn cmd_gen_tictactoe(out: PathBuf) -> anyhow::Result<()> {
    let (db, labels) = tic_tac_toe();
    let mut w = create(&out, "tictactoe.dat")?;
    db.write_fimi(&mut w)?;
    w.flush()?;
    let mut w = create(&out, "tictactoe.lab")?;
    write_labels(labels.raw(), &mut w)?;
    w.flush()?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<lamp_core::Error>() {
        Some(lamp_core::Error::DegenerateLabels(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::GenTictactoe { out } => cmd_gen_tictactoe(out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
