use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use netresp::io::{self, CensorOptions, DatasetManifest, Symmetrize};
use netresp::mase::MaseOptions;
use netresp::pipeline::{
    self, analyze_real_dataset, pred_graph_resp, AnalysisOptions, ExperimentConfig, PredictConfig, Prediction,
};
use netresp::synthetic::{write_dataset, SyntheticSpec};
use netresp::{Error, Result};

#[derive(Parser)]
#[command(name = "netresp", version, about = "Predict scalar responses attached to networks")]
struct Cli {
    /// Seed for every random choice (overrides a config file's base_seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Censoring percentile of the nonzero absolute weights.
    #[arg(long, global = true, default_value_t = io::DEFAULT_PERCENTILE)]
    percentile: f64,

    /// Rule merging reciprocal arcs.
    #[arg(long, global = true, value_enum, default_value_t = SymmetrizeArg::Max)]
    symmetrize: SymmetrizeArg,

    /// One censoring threshold for the whole collection instead of one per graph.
    #[arg(long, global = true)]
    pooled: bool,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SymmetrizeArg {
    Max,
    Sum,
    Mean,
}

impl From<SymmetrizeArg> for Symmetrize {
    fn from(s: SymmetrizeArg) -> Self {
        match s {
            SymmetrizeArg::Max => Symmetrize::Max,
            SymmetrizeArg::Sum => Symmetrize::Sum,
            SymmetrizeArg::Mean => Symmetrize::Mean,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo study and write replicates.csv, summary.csv and config.json.
    Simulate {
        #[arg(value_enum)]
        study: Study,
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict the response of one graph from the labeled ones.
    Predict {
        #[arg(long)]
        manifest: PathBuf,
        /// 1-based position within each series.
        #[arg(long)]
        position: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        nstar: usize,
        /// 1-based index of the series to predict.
        #[arg(long)]
        r: usize,
        /// Number of labeled series (default: r - 1).
        #[arg(long)]
        s: Option<usize>,
        /// Also write the prediction as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed one cross-section of a dataset and test for a linear effect.
    Analyze {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        position: usize,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        /// Add a local linear fit.
        #[arg(long)]
        local_linear: bool,
        #[arg(long, default_value_t = netresp::regression::DEFAULT_BANDWIDTH)]
        bandwidth: f64,
        /// Directory for embeddings.csv, scores.csv and report.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the estimated score matrices of one cross-section.
    Mase {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        position: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic dataset (edge lists plus manifest.json).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        series: usize,
        #[arg(long, default_value_t = 3)]
        length: usize,
        #[arg(long, default_value_t = 60)]
        nodes: usize,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Study {
    Consistency,
    Power,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ConfigSource {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in schedule.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// The published schedule.
    Paper,
    /// Reduced consistency schedule (consistency study only).
    Desk,
}

#[derive(Serialize)]
struct PredictOutput<'a> {
    r: usize,
    labeled: usize,
    #[serde(flatten)]
    prediction: &'a Prediction,
}

fn censor_options(cli: &Cli) -> CensorOptions {
    CensorOptions {
        percentile: cli.percentile,
        symmetrize: cli.symmetrize.into(),
        pooled: cli.pooled,
    }
}

fn experiment_config(study: Study, source: &ConfigSource, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = match (&source.config, source.preset) {
        (Some(path), _) => io::read_json::<ExperimentConfig>(path)?,
        (None, Some(Preset::Paper)) => match study {
            Study::Consistency => ExperimentConfig::consistency_paper(),
            Study::Power => ExperimentConfig::power_paper(),
        },
        (None, Some(Preset::Desk)) => match study {
            Study::Consistency => ExperimentConfig::consistency_desk(),
            Study::Power => return Err(Error::Argument("the desk preset exists only for the consistency study".into())),
        },
        (None, None) => unreachable!("clap enforces one config source"),
    };
    if let Some(seed) = seed {
        cfg.base_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { study, source, out } => {
            let cfg = experiment_config(*study, source, cli.seed)?;
            let (paths, secs) = match study {
                Study::Consistency => {
                    let res = pipeline::run_consistency_experiment(&cfg)?;
                    for s in &res.summaries {
                        eprintln!(
                            "K = {:>2}  n = {:>4}  N = {:>3}  valid = {:>3}/{}  median gap^2 = {}",
                            s.k,
                            s.n,
                            s.big_n,
                            s.valid,
                            s.replicates,
                            s.median_sq_gap.map_or("-".into(), |v| format!("{v:.3e}"))
                        );
                    }
                    (res.write(out)?, res.runtime_secs)
                }
                Study::Power => {
                    let res = pipeline::run_power_experiment(&cfg)?;
                    for s in &res.summaries {
                        let show = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.3}"));
                        eprintln!(
                            "K = {:>2}  n = {:>4}  N = {:>3}  valid = {:>3}/{}  pi* = {}  pi^ = {}  |diff| = {}",
                            s.k,
                            s.n,
                            s.big_n,
                            s.valid,
                            s.replicates,
                            show(s.pi_true),
                            show(s.pi_hat),
                            show(s.abs_diff)
                        );
                    }
                    (res.write(out)?, res.runtime_secs)
                }
            };
            log::info!("finished in {secs:.1} s");
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Predict {
            manifest,
            position,
            d,
            lambda,
            l,
            nstar,
            r,
            s,
            out,
        } => {
            let m: DatasetManifest = io::load_manifest(manifest)?;
            let labeled = s.unwrap_or(r.saturating_sub(1));
            if labeled > m.series.len() {
                return Err(Error::Argument(format!(
                    "s = {labeled} exceeds the {} series in the manifest",
                    m.series.len()
                )));
            }
            let graphs = m.load_position(*position, &censor_options(cli))?;
            let mut cfg = PredictConfig::new(*d, *lambda, *l, *nstar, *r);
            cfg.smacof.seed = cli.seed.unwrap_or(0);
            let ys = &m.responses()[..labeled];
            let pred = pred_graph_resp(&graphs, ys, &cfg)?;
            let output = PredictOutput {
                r: *r,
                labeled,
                prediction: &pred,
            };
            if let Some(path) = out {
                io::write_json(&output, path)?;
            }
            print_json(&output)?;
        }
        Command::Analyze {
            manifest,
            position,
            d,
            lambda,
            level,
            local_linear,
            bandwidth,
            out,
        } => {
            let mut opts = AnalysisOptions::new(*position, *lambda);
            opts.d = *d;
            opts.level = *level;
            opts.censor = censor_options(cli);
            opts.local_linear = local_linear.then_some(*bandwidth);
            opts.smacof.seed = cli.seed.unwrap_or(0);
            let report = analyze_real_dataset(manifest, &opts, out.as_deref())?;
            let t = &report.test;
            eprintln!(
                "fit: y = {:.4} + {:.4} z   F({}, {}) = {:.4}   p = {:.3e}   reject at {}: {}",
                report.fit.intercept, report.fit.slope, t.df.0, t.df.1, t.f_value, t.p_value, t.level, t.reject
            );
            if let Some(ll) = &report.local_linear {
                eprintln!("local linear (h = {}): pseudo R^2 = {:.4}", ll.bandwidth, ll.pseudo_r_squared);
            }
            if out.is_none() {
                print_json(&report)?;
            }
        }
        Command::Mase {
            manifest,
            d,
            position,
            out,
        } => {
            let m = io::load_manifest(manifest)?;
            let (_, rho, records) = pipeline::manifest_scores(&m, *position, &MaseOptions::new(*d), &censor_options(cli))?;
            io::emit_csv(&records, out)?;
            eprintln!("rho_hat = {rho:.6}; wrote {} entries to {}", records.len(), out.display());
        }
        Command::Synth {
            out,
            series,
            length,
            nodes,
            sigma,
        } => {
            let spec = SyntheticSpec {
                series: *series,
                length: *length,
                node_count: *nodes,
                sigma: *sigma,
                seed: cli.seed.unwrap_or(SyntheticSpec::default().seed),
                ..SyntheticSpec::default()
            };
            let path = write_dataset(&spec, out)?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
