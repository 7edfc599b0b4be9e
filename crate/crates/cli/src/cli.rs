//! Command-line front end: fit, stats, bounds, prob, simulate, witness.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use plc_core::bounds::{derive_bounds, AlphaAssumption, CRatioPolicy};
use plc_core::plackett_luce::{pl_fit, FitConfig};
use plc_core::plc::{
    nonidentifiability_witness, plc_prob_binned, plc_prob_exact, plc_prob_mc,
    total_variation_exact, McConfig, ModelParams,
};
use plc_core::types::NormalizeMode;
use plc_core::{normalize_utilities, ConsiderationProbs, Ranking, StatsSource, Universe};

use crate::error::{CliError, CliResult};
use crate::files::{read_probs, read_stats, read_utilities, write_stats, write_utilities};
use crate::ingest::{
    empirical_top_l_stats, parse_rankings_csv, ratings_to_rankings, RatingsTable, TiePolicy,
};
use crate::report::{emit_bounds_report, emit_dag_dot, BoundsReport, ReportFormat};
use crate::synth::{generate_synthetic, sidecar_for, write_rankings_csv, write_sidecar};

#[derive(Parser, Debug)]
#[command(
    name = "plc",
    about = "Ranking analysis under a choice model with unobserved consideration sets",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit item utilities by maximum likelihood from data with known
    /// consideration sets (ratings or rankings with a #considered section).
    Fit {
        /// Ratings CSV: respondent,item,score rows.
        #[arg(long, conflicts_with = "rankings")]
        ratings: Option<PathBuf>,
        /// Rankings file with attached consideration sets.
        #[arg(long)]
        rankings: Option<PathBuf>,
        /// Truncate each respondent's ranking to this length (ratings input).
        #[arg(long)]
        k: Option<usize>,
        /// Tie handling for equal scores: stable | random:<seed>.
        #[arg(long, default_value = "stable")]
        tie_policy: String,
        /// Output utilities CSV (min-zero normalized).
        #[arg(long)]
        output: PathBuf,
    },
    /// Compute empirical top-l appearance statistics from a rankings file.
    Stats {
        #[arg(long)]
        rankings: PathBuf,
        /// Output stats CSV (item,l,prob).
        #[arg(long)]
        output: PathBuf,
    },
    /// Derive consideration-probability bounds from statistics and utilities.
    Bounds {
        /// Stats CSV produced by `stats` (or in the same format).
        #[arg(long)]
        stats: PathBuf,
        /// Utilities CSV; its items define the universe.
        #[arg(long)]
        utilities: PathBuf,
        /// Assumed lower bound on expected consideration-set size, as a
        /// multiple of k (must exceed 1).
        #[arg(long)]
        alpha: f64,
        /// Ranking length; defaults to the stats file's largest cutoff.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
        format: ReportFormat,
        /// Output report path.
        #[arg(long)]
        output: PathBuf,
        /// Also write the flip graph (after transitive reduction) in DOT form.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Confidence level for Wilson-interval-hardened transfers on
        /// empirical statistics, e.g. 0.95.
        #[arg(long)]
        conservative_ci: Option<f64>,
    },
    /// Probability of one ranking under given utilities and consideration
    /// probabilities.
    Prob {
        /// Comma-separated item labels, top first.
        #[arg(long)]
        ranking: String,
        #[arg(long)]
        utilities: PathBuf,
        /// Consideration probabilities CSV (item,prob).
        #[arg(long)]
        probs: PathBuf,
        #[arg(long, value_enum, default_value_t = ProbMethod::Exact)]
        method: ProbMethod,
        /// Additive tolerance (mc) or multiplicative tolerance (binned).
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// Failure probability for the mc method.
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sample a synthetic ranking dataset and its ground-truth sidecar.
    Simulate {
        #[arg(long)]
        utilities: PathBuf,
        #[arg(long)]
        probs: PathBuf,
        /// Ranking length.
        #[arg(long)]
        k: usize,
        /// Number of rankings to draw.
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output rankings file.
        #[arg(long)]
        output: PathBuf,
        /// Ground-truth sidecar path (default: <output>.truth.json).
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Construct two distinct consideration-probability vectors with
    /// identical ranking distributions, demonstrating non-identifiability.
    Witness {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Consideration probability of the "good" items, first model.
        #[arg(long)]
        g1: f64,
        /// Consideration probability of the "good" items, second model.
        #[arg(long)]
        g2: f64,
        /// Observable mass of the low-utility ranking type, shared by both.
        #[arg(long)]
        c: f64,
        /// Write the JSON result here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProbMethod {
    Exact,
    Mc,
    Binned,
}

/// Entry point used by `main` and by tests; returns the process exit code
/// (0 success, 1 validation error, 2 I/O error).
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    run_from(args, &mut out, &mut err)
}

/// [`cli_main`] with explicit output streams.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    match run(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Fit { ratings, rankings, k, tie_policy, output } => {
            cmd_fit(ratings, rankings, k, &tie_policy, &output, err)
        }
        Command::Stats { rankings, output } => cmd_stats(&rankings, &output),
        Command::Bounds { stats, utilities, alpha, k, format, output, dot, conservative_ci } => {
            cmd_bounds(&stats, &utilities, alpha, k, format, &output, dot.as_deref(), conservative_ci, err)
        }
        Command::Prob { ranking, utilities, probs, method, epsilon, delta, seed } => {
            cmd_prob(&ranking, &utilities, &probs, method, epsilon, delta, seed, out)
        }
        Command::Simulate { utilities, probs, k, m, seed, output, sidecar } => {
            cmd_simulate(&utilities, &probs, k, m, seed, &output, sidecar)
        }
        Command::Witness { n, k, g1, g2, c, output } => cmd_witness(n, k, g1, g2, c, output, out),
    }
}

fn cmd_fit(
    ratings: Option<PathBuf>,
    rankings: Option<PathBuf>,
    k: Option<usize>,
    tie_policy: &str,
    output: &Path,
    err: &mut dyn Write,
) -> CliResult<()> {
    let (universe, dataset) = match (ratings, rankings) {
        (Some(path), None) => {
            let policy = TiePolicy::parse(tie_policy).map_err(CliError::Validation)?;
            let table = RatingsTable::from_csv_path(&path)?;
            let conv = ratings_to_rankings(&table, k, policy)?;
            if !conv.respondents_with_ties.is_empty() {
                let _ = writeln!(
                    err,
                    "warning: {} respondent(s) had tied scores resolved by the '{tie_policy}' policy",
                    conv.respondents_with_ties.len()
                );
            }
            (conv.universe, conv.dataset)
        }
        (None, Some(path)) => {
            let parsed = parse_rankings_csv(&path)?;
            (parsed.universe, parsed.dataset)
        }
        _ => {
            return Err(CliError::Validation(
                "fit requires exactly one of --ratings or --rankings".into(),
            ))
        }
    };
    let fitted = pl_fit(&dataset, &FitConfig::default())?;
    let shift = fitted.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
    let normalized = normalize_utilities(&fitted, NormalizeMode::MinZero);
    write_utilities(output, &universe, &normalized, Some(shift))
}

fn cmd_stats(rankings: &Path, output: &Path) -> CliResult<()> {
    let parsed = parse_rankings_csv(rankings)?;
    let stats = empirical_top_l_stats(&parsed.dataset)?;
    write_stats(output, &parsed.universe, &stats)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bounds(
    stats_path: &Path,
    utilities_path: &Path,
    alpha: f64,
    k: Option<usize>,
    format: ReportFormat,
    output: &Path,
    dot: Option<&Path>,
    conservative_ci: Option<f64>,
    err: &mut dyn Write,
) -> CliResult<()> {
    let (labels, utilities) = read_utilities(utilities_path)?;
    let raw = read_stats(stats_path)?;
    let stats = raw.align_to(&labels)?;
    let k = match k {
        Some(k) if k == stats.k() => k,
        Some(k) => {
            return Err(CliError::Validation(format!(
                "--k {k} does not match the stats file's ranking length {}",
                stats.k()
            )))
        }
        None => stats.k(),
    };
    let assumption = AlphaAssumption::new(alpha, k)?;
    let policy = match conservative_ci {
        None => CRatioPolicy::Point,
        Some(level) => {
            if !(level > 0.0 && level < 1.0) {
                return Err(CliError::Validation(format!(
                    "--conservative-ci must lie in (0,1), got {level}"
                )));
            }
            if stats.source() == (StatsSource::Empirical { samples: 0 }) {
                return Err(CliError::Validation(
                    "--conservative-ci needs a sample count; the stats file lacks a \
                     '# source=empirical samples=N' line"
                        .into(),
                ));
            }
            CRatioPolicy::ConservativeWilson { confidence: level }
        }
    };
    if stats.samples().is_some() && conservative_ci.is_none() {
        let _ = writeln!(
            err,
            "note: statistics are empirical; bound validity is only guaranteed for exact \
             statistics (consider --conservative-ci)"
        );
    }
    let universe =
        Universe::labeled(labels).map_err(|e| CliError::Validation(e.to_string()))?;
    let outcome = derive_bounds(&stats, &utilities, &assumption, policy)?;
    if !outcome.tightened.is_consistent() {
        let crossed: Vec<String> = outcome
            .tightened
            .crossed_items()
            .iter()
            .map(|&i| universe.label(i))
            .collect();
        let _ = writeln!(
            err,
            "warning: lower bound exceeds upper bound for {}; the assumptions (alpha, utility \
             order, or statistics) are violated",
            crossed.join(", ")
        );
    }
    let report = BoundsReport::from_outcome(
        &outcome,
        &universe,
        &utilities,
        alpha,
        k,
        stats.source(),
        conservative_ci,
    );
    emit_bounds_report(output, &report, format)?;
    if let Some(dot_path) = dot {
        emit_dag_dot(dot_path, &outcome.dag, &universe)?;
    }
    Ok(())
}

fn align_probs(
    labels: &[String],
    prob_labels: Vec<String>,
    probs: ConsiderationProbs,
) -> CliResult<ConsiderationProbs> {
    let position: std::collections::HashMap<&str, usize> =
        prob_labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut aligned = Vec::with_capacity(labels.len());
    for label in labels {
        match position.get(label.as_str()) {
            Some(&i) => aligned.push(probs.get(i)),
            None => {
                return Err(CliError::Validation(format!(
                    "item '{label}' has no consideration probability"
                )))
            }
        }
    }
    ConsiderationProbs::new(aligned).map_err(|e| CliError::Validation(e.to_string()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_prob(
    ranking_text: &str,
    utilities_path: &Path,
    probs_path: &Path,
    method: ProbMethod,
    epsilon: f64,
    delta: f64,
    seed: u64,
    out: &mut dyn Write,
) -> CliResult<()> {
    let (labels, utilities) = read_utilities(utilities_path)?;
    let (prob_labels, probs) = read_probs(probs_path)?;
    let probs = align_probs(&labels, prob_labels, probs)?;
    let universe =
        Universe::labeled(labels.clone()).map_err(|e| CliError::Validation(e.to_string()))?;
    let mut entries = Vec::new();
    for label in ranking_text.split(',') {
        let label = label.trim();
        let idx = universe.index_of(label).ok_or_else(|| {
            CliError::Validation(format!("ranked item '{label}' is not in the utilities file"))
        })?;
        entries.push(idx);
    }
    let ranking = Ranking::new(entries);
    let value = match method {
        ProbMethod::Exact => plc_prob_exact(&ranking, &utilities, &probs)?,
        ProbMethod::Mc => {
            let cfg = McConfig::new(epsilon, delta, seed)?;
            plc_prob_mc(&ranking, &utilities, &probs, &cfg)?
        }
        ProbMethod::Binned => plc_prob_binned(&ranking, &utilities, &probs, epsilon)?,
    };
    writeln!(out, "{value}")?;
    Ok(())
}

fn cmd_simulate(
    utilities_path: &Path,
    probs_path: &Path,
    k: usize,
    m: usize,
    seed: u64,
    output: &Path,
    sidecar: Option<PathBuf>,
) -> CliResult<()> {
    let (labels, utilities) = read_utilities(utilities_path)?;
    let (prob_labels, probs) = read_probs(probs_path)?;
    let probs = align_probs(&labels, prob_labels, probs)?;
    let universe =
        Universe::labeled(labels).map_err(|e| CliError::Validation(e.to_string()))?;
    let dataset = generate_synthetic(&utilities, &probs, k, m, seed)?;
    write_rankings_csv(output, &universe, &dataset)?;
    let sidecar_path = sidecar.unwrap_or_else(|| {
        let mut os = output.as_os_str().to_os_string();
        os.push(".truth.json");
        PathBuf::from(os)
    });
    let side = sidecar_for(&universe, &utilities, &probs, k, m, seed);
    write_sidecar(&sidecar_path, &side)
}

#[derive(Debug, Serialize, Deserialize)]
struct WitnessOutput {
    items: Vec<String>,
    utilities: Vec<f64>,
    consideration_probs_1: Vec<f64>,
    consideration_probs_2: Vec<f64>,
    total_variation: f64,
}

fn cmd_witness(
    n: usize,
    k: usize,
    g1: f64,
    g2: f64,
    c: f64,
    output: Option<PathBuf>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let (one, two): (ModelParams, ModelParams) = nonidentifiability_witness(n, k, g1, g2, c)?;
    let tv = total_variation_exact(&one, &two, k)?;
    let result = WitnessOutput {
        items: (0..n).map(|i| format!("item{i}")).collect(),
        utilities: one.utilities.as_slice().to_vec(),
        consideration_probs_1: one.consideration.as_slice().to_vec(),
        consideration_probs_2: two.consideration.as_slice().to_vec(),
        total_variation: tv,
    };
    let json = serde_json::to_string_pretty(&result).map_err(|e| CliError::Io(e.to_string()))?;
    match output {
        Some(path) => {
            crate::files::write_atomic(&path, &json)?;
            writeln!(out, "total_variation {tv:e}")?;
        }
        None => writeln!(out, "{json}")?,
    }
    Ok(())
}
