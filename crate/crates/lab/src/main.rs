#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adl_core::metrics::{instance_bound, Burden};
use adl_core::policies::{BudgetRule, InitRule, PolicyKind, PolicySpec, ScoreSource};
use adl_lab::config::{RunConfig, ScenarioSource};
use adl_lab::csv_io::{fmt_num, load_scenario, write_scenario, ROUNDS_FILE};
use adl_lab::generate::{GeneratorSpec, RandomEpisodeParams};
use adl_lab::report::build_report;
use adl_lab::runner::{diagnostic_records, evaluate, evaluate_scenario, RunOutput, DIAGNOSTICS_FILE};
use adl_lab::{LabError, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "adl-lab", version, about = "Autodeleveraging policy simulation and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Alternating,
    Churn,
    Random,
}

#[derive(clap::Args)]
struct RunFlags {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fairness weights to sweep, comma separated.
    #[arg(long = "lambda-fair", value_delimiter = ',', num_args = 1..)]
    lambda_fair: Option<Vec<f64>>,
    /// Markout horizons, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    delta: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Write scenario CSVs plus a starter run.toml.
    Generate {
        #[arg(long, value_enum, default_value = "alternating")]
        scenario: Generator,
        /// Generator settings (TOML); replaces the flags below.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "T")]
        horizon: Option<usize>,
        #[arg(long = "M", default_value_t = 2.0)]
        m: f64,
        #[arg(long = "alpha-min", default_value_t = 0.0)]
        alpha_min: f64,
        #[arg(long = "alpha-max", default_value_t = 1.0)]
        alpha_max: f64,
    },
    /// Evaluate a policy library and write results.
    Evaluate(RunFlags),
    /// Instability diagnostics only.
    Diagnose(RunFlags),
    /// Print the instance-calibrated envelope sqrt((1 + 2P) sum D^2).
    Bound {
        #[arg(long = "P", alias = "p")]
        p: f64,
        /// Deficits, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1.., required_unless_present = "rounds")]
        deficits: Option<Vec<f64>>,
        /// Scenario directory to read deficits from.
        #[arg(long, conflicts_with = "deficits")]
        rounds: Option<PathBuf>,
    },
    /// Audit results CSVs and aggregate them into a summary JSON.
    Report {
        /// Results files or directories.
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn starter_policies(gen: Generator) -> Vec<PolicySpec> {
    let queue = PolicySpec::new("queue", PolicyKind::Queue { score: ScoreSource::Explicit });
    let pro_rata = PolicySpec::new("pro_rata", PolicyKind::ProRata);
    let md = PolicySpec::new("vector_md", PolicyKind::VectorMd { eta: if matches!(gen, Generator::Random) { 25.0 } else { 0.1 }, init: InitRule::Zero });
    match gen {
        Generator::Alternating => vec![queue, PolicySpec::new("comparator", PolicyKind::Comparator), pro_rata, md],
        Generator::Churn => vec![queue, pro_rata],
        Generator::Random => vec![
            PolicySpec::new("production", PolicyKind::Production),
            PolicySpec::new("queue_capacity", PolicyKind::Queue { score: ScoreSource::Capacity }),
            pro_rata.with_budget(BudgetRule::NeededHat),
            PolicySpec::new("min_max_ilp", PolicyKind::MinMaxIlp).with_budget(BudgetRule::NeededHat),
            PolicySpec::new("pro_rata_theta", PolicyKind::ProRata).with_budget(BudgetRule::ThetaOgd { eta: None }),
            md,
        ],
    }
}

fn generate(
    gen: Generator,
    config: Option<&Path>,
    out: &Path,
    seed: u64,
    horizon: Option<usize>,
    m: f64,
    alphas: (f64, f64),
) -> Result<()> {
    let spec = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
            toml::from_str::<GeneratorSpec>(&text).map_err(|e| LabError::File { path: path.into(), message: e.to_string() })?
        }
        None => match gen {
            Generator::Alternating => GeneratorSpec::AlternatingCapacity { horizon: horizon.unwrap_or(100), m },
            Generator::Churn => GeneratorSpec::Churn { horizon: horizon.unwrap_or(16), alpha_min: alphas.0, alpha_max: alphas.1 },
            Generator::Random => {
                let mut params = RandomEpisodeParams::default();
                if let Some(t) = horizon {
                    params.horizon = t;
                }
                GeneratorSpec::Random { params }
            }
        },
    };
    let kind = match spec {
        GeneratorSpec::AlternatingCapacity { .. } => Generator::Alternating,
        GeneratorSpec::Churn { .. } => Generator::Churn,
        GeneratorSpec::Random { .. } => Generator::Random,
    };
    let scenario = spec.build(seed)?;
    write_scenario(&scenario, out)?;
    let run = RunConfig {
        seed,
        out: PathBuf::from("results"),
        scenario: ScenarioSource::Replay { path: PathBuf::from(".") },
        weights: Default::default(),
        lambda_fair: vec![1.0],
        delta: None,
        burden: if matches!(kind, Generator::Alternating) { Burden::Exact } else { Burden::Regularized },
        static_regret: true,
        policies: starter_policies(kind),
    };
    let text = toml::to_string(&run).map_err(|e| LabError::Internal(e.to_string()))?;
    let path = out.join("run.toml");
    std::fs::write(&path, text).map_err(|e| LabError::io(&path, e))?;
    println!("wrote {} rounds to {}", scenario.horizon(), out.display());
    Ok(())
}

fn load_run(flags: &RunFlags) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&flags.config)?;
    if let Some(out) = &flags.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(l) = &flags.lambda_fair {
        cfg.lambda_fair = l.clone();
    }
    if let Some(d) = &flags.delta {
        cfg.delta = Some(d.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_else(|| "-".into())
}

fn print_summary(output: &RunOutput) {
    for o in &output.outcomes {
        for m in &o.metrics {
            println!(
                "lambda={} delta={} policy={} objective={} tracking={} fairness={} failure={} dynamic_regret={} static_regret={} bound_ratio={}",
                fmt_num(m.lambda),
                fmt_num(m.delta_horizon),
                m.policy,
                fmt_num(m.objective),
                fmt_num(m.tracking),
                fmt_num(m.fairness),
                fmt_num(m.failure),
                opt(m.dynamic_regret),
                opt(m.static_regret),
                opt(m.bound_ratio),
            );
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { scenario, config, out, seed, horizon, m, alpha_min, alpha_max } => {
            generate(scenario, config.as_deref(), &out, seed, horizon, m, (alpha_min, alpha_max))
        }
        Command::Evaluate(flags) => {
            let cfg = load_run(&flags)?;
            let (output, files) = evaluate(&cfg)?;
            print_summary(&output);
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Diagnose(flags) => {
            let cfg = load_run(&flags)?;
            let scenario = cfg.scenario.load(cfg.seed)?;
            let output = evaluate_scenario(&cfg, &scenario)?;
            std::fs::create_dir_all(&cfg.out).map_err(|e| LabError::io(&cfg.out, e))?;
            let path = cfg.out.join(DIAGNOSTICS_FILE);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "lambda",
                "policy",
                "delta_horizon",
                "inversion_rate",
                "pooled_inversion_rate",
                "rank_stability",
                "perturbation_jump",
                "effective_slope_variation",
                "effective_slope_path",
            ])
            .and_then(|_| diagnostic_records(&output).iter().try_for_each(|r| w.write_record(r)))
            .map_err(|e| LabError::Internal(e.to_string()))?;
            let bytes = w.into_inner().map_err(|e| LabError::Internal(e.to_string()))?;
            std::fs::write(&path, &bytes).map_err(|e| LabError::io(&path, e))?;
            print!("{}", String::from_utf8_lossy(&bytes));
            Ok(())
        }
        Command::Bound { p, deficits, rounds } => {
            let d = match (deficits, rounds) {
                (Some(d), _) => d,
                (None, Some(dir)) => {
                    let dir = if dir.ends_with(ROUNDS_FILE) { dir.parent().map(Path::to_path_buf).unwrap_or_default() } else { dir };
                    load_scenario(&dir)?.rounds().iter().map(|r| r.deficit()).collect()
                }
                (None, None) => return Err(LabError::Config("need --deficits or --rounds".into())),
            };
            if !(p >= 0.0) || d.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(LabError::Config("P and deficits must be non-negative".into()));
            }
            println!("{:?}", instance_bound(p, &d));
            Ok(())
        }
        Command::Report { inputs, out } => {
            let report = build_report(&inputs)?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| LabError::Internal(e.to_string()))?;
            match out {
                Some(path) => {
                    std::fs::write(&path, json + "\n").map_err(|e| LabError::io(&path, e))?;
                    println!("audited {} rows; wrote {}", report.rows_audited, path.display());
                }
                None => println!("{json}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
