use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use normcast_core::config::HardnessLevel;
use normcast_core::evaluate::{run_baseline, run_experiment, tune_confidence};
use normcast_core::ingest::{dump_csv, generate_synthetic, load_csv, write_profile};
use normcast_core::norms::{decide, load_element_contexts, write_norm_records, ContextVars};
use normcast_core::{
    BaselineKind, Config, ElementId, ExperimentReport, PreferenceMatrix, Registry, Scale,
    SyntheticCohortSpec, UserId,
};

/// Predict unknown privacy preferences and derive norms from them.
#[derive(Parser)]
#[command(name = "normcast", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a `user_id,element_id,answer` CSV and write it rescaled to [-1, 1].
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Answer scale of the input as `lo:hi`; omit when answers are already in [-1, 1].
        #[arg(long)]
        scale: Option<Scale>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a clustered synthetic cohort.
    Generate {
        #[arg(long, default_value_t = 500)]
        users: usize,
        #[arg(long, default_value_t = 100)]
        elements: usize,
        #[arg(long, default_value_t = 5)]
        clusters: usize,
        #[arg(long, default_value_t = 0.3)]
        known_fraction: f64,
        #[arg(long, default_value_t = 0.1)]
        noise_sd: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Observed (sparse) matrix.
        #[arg(long)]
        out: PathBuf,
        /// Optional dense ground-truth matrix.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Run the hold-out experiment or a baseline and write a report.
    Evaluate {
        #[command(flatten)]
        input: MatrixArgs,
        #[arg(long, value_enum)]
        hardness: Option<HardnessArg>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        baseline: Option<BaselineArg>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Find the confidence weights that best rank a report's prediction errors.
    TuneConfidence {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Complete one user's profile, or predict a single element.
    Predict {
        #[command(flatten)]
        input: MatrixArgs,
        #[arg(long)]
        user: String,
        #[arg(long)]
        element: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit one norm record per resolved preference.
    InferNorms {
        #[command(flatten)]
        input: MatrixArgs,
        /// Restrict to one user; all users otherwise.
        #[arg(long)]
        user: Option<String>,
        /// CSV `element_id,variable,value` with context variables per element.
        #[arg(long)]
        contexts: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MatrixArgs {
    /// Preference CSV.
    #[arg(long)]
    matrix: PathBuf,
    /// Answer scale of the matrix as `lo:hi`; omit when values are already in [-1, 1].
    #[arg(long)]
    scale: Option<Scale>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl MatrixArgs {
    fn load(&self) -> Result<(PreferenceMatrix, Config)> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if self.scale.is_some() {
            cfg.scale = self.scale;
        }
        let m = load_csv(&self.matrix, self.scale)
            .with_context(|| format!("loading {}", self.matrix.display()))?;
        log::info!(
            "{} users, {} elements, {} answers",
            m.n_users(),
            m.n_elements(),
            m.len()
        );
        Ok((m, cfg))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum HardnessArg {
    Regular,
    Medium,
    Hard,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Random,
    ElementMean,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn user_id(m: &PreferenceMatrix, raw: &str) -> Result<UserId> {
    let user = UserId::new(raw)?;
    m.require_user(&user)?;
    Ok(user)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Ingest { input, scale, out } => {
            let m =
                load_csv(&input, scale).with_context(|| format!("loading {}", input.display()))?;
            dump_csv(&m, &out)?;
            println!(
                "{} users, {} elements, {} answers",
                m.n_users(),
                m.n_elements(),
                m.len()
            );
        }
        Command::Generate {
            users,
            elements,
            clusters,
            known_fraction,
            noise_sd,
            seed,
            out,
            truth,
        } => {
            let cohort = generate_synthetic(&SyntheticCohortSpec {
                num_users: users,
                num_elements: elements,
                num_clusters: clusters,
                known_fraction,
                noise_sd,
                seed,
            })?;
            dump_csv(&cohort.observed, &out)?;
            if let Some(path) = truth {
                dump_csv(&cohort.ground_truth, &path)?;
            }
            println!("{} observed answers", cohort.observed.len());
        }
        Command::Evaluate {
            input,
            hardness,
            seed,
            baseline,
            report,
        } => evaluate(&input, hardness, seed, baseline, &report)?,
        Command::TuneConfidence { report, step } => {
            let r = ExperimentReport::load(&report)?;
            let best = tune_confidence(&r, step)?;
            println!(
                "rho={} mu={} spearman={}",
                best.rho, best.mu, best.correlation
            );
        }
        Command::Predict {
            input,
            user,
            element,
            out,
        } => predict(&input, &user, element.as_deref(), out.as_deref())?,
        Command::InferNorms {
            input,
            user,
            contexts,
            out,
        } => infer_norms(&input, user.as_deref(), contexts.as_deref(), out.as_deref())?,
    }
    Ok(())
}

fn evaluate(
    input: &MatrixArgs,
    hardness: Option<HardnessArg>,
    seed: Option<u64>,
    baseline: Option<BaselineArg>,
    report: &Path,
) -> Result<()> {
    let (m, mut cfg) = input.load()?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(h) = hardness {
        cfg.hardness = match h {
            HardnessArg::Regular => HardnessLevel::Regular,
            HardnessArg::Medium => HardnessLevel::Medium,
            HardnessArg::Hard => HardnessLevel::Hard,
        };
    }
    let exp = cfg.experiment()?;
    let r = match baseline {
        None => {
            let registry = Registry::builtin();
            let separation = registry.separation(&cfg)?;
            let predictor = registry.predictor(&cfg)?;
            run_experiment(&m, &exp, separation.as_ref(), predictor.as_ref())?
        }
        Some(BaselineArg::Random) => run_baseline(&m, &exp, BaselineKind::Random)?,
        Some(BaselineArg::ElementMean) => run_baseline(&m, &exp, BaselineKind::GlobalElementMean)?,
    };
    r.save(report)?;
    let h = &r.header;
    println!(
        "method={} hardness={} predictions={}/{} coverage={} mean_distance={} sd_distance={} regime={}",
        h.method,
        h.hardness,
        h.n_predictions,
        h.n_targets,
        h.coverage,
        h.mean_distance,
        h.sd_distance,
        h.regime.map(|r| r.to_string()).unwrap_or_else(|| "none".into())
    );
    Ok(())
}

fn predict(
    input: &MatrixArgs,
    user: &str,
    element: Option<&str>,
    out: Option<&Path>,
) -> Result<()> {
    let (m, cfg) = input.load()?;
    let engine = Registry::builtin().engine(&cfg)?;
    let user = user_id(&m, user)?;
    let element = element.map(ElementId::new).transpose()?;
    if let Some(x) = &element {
        m.require_element(x)?;
    }
    let profile = engine.complete(&m, &user)?;
    let mut w = output(out)?;
    write_profile(&profile, &mut w, element.as_ref())?;
    w.flush()?;
    Ok(())
}

fn infer_norms(
    input: &MatrixArgs,
    user: Option<&str>,
    contexts: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let (m, cfg) = input.load()?;
    let registry = Registry::builtin();
    let engine = registry.engine(&cfg)?;
    let policy = registry.policy(&cfg)?;
    let contexts = match contexts {
        Some(p) => load_element_contexts(p)?,
        None => Default::default(),
    };
    let users: Vec<UserId> = match user {
        Some(u) => vec![user_id(&m, u)?],
        None => m.users().cloned().collect(),
    };
    let empty = ContextVars::new();
    let mut records = Vec::new();
    for u in &users {
        let profile = engine.complete(&m, u)?;
        for e in &profile.entries {
            let Some(value) = e.value else { continue };
            let ctx = contexts.get(&e.element).unwrap_or(&empty);
            records.push((
                u,
                decide(&e.element, value, e.confidence, policy.as_ref(), ctx)?,
            ));
        }
    }
    let mut w = output(out)?;
    write_norm_records(&mut w, records.iter().map(|(u, d)| (*u, d)))?;
    w.flush()?;
    Ok(())
}
