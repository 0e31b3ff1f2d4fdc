use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use protodsl::corpus::{load_corpus_with, DomainMappingTable, Protocol};
use protodsl::gateway::Mode;
use protodsl::pipeline::{self, Config, EvalRequest, GatewayConfig};

#[derive(Parser)]
#[command(name = "protodsl", version, about = "Design and check protocol DSLs from a corpus")]
struct Cli {
    /// Worker threads for annotation, checking and gateway calls.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a DSL artifact from a corpus.
    Design {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check programs against an artifact.
    Check {
        #[arg(long)]
        artifact: PathBuf,
        programs: PathBuf,
    },
    /// Evaluate an artifact.
    Eval {
        #[arg(value_enum)]
        mode: EvalMode,
        #[arg(long)]
        artifact: Option<PathBuf>,
        #[arg(long)]
        triplets: Option<PathBuf>,
        #[arg(long, default_value_t = 0.7)]
        threshold: f64,
        #[arg(long)]
        predicted: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        other: Option<PathBuf>,
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long, default_value = "replay")]
        gateway: String,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Print per-protocol filter scores.
    Filters {
        corpus: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Include zero scores.
        #[arg(long)]
        all: bool,
    },
    /// Summarize an artifact.
    Report { artifact: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalMode {
    Ontology,
    Utility,
    Overlap,
    Judge,
}

fn need(p: Option<PathBuf>, flag: &str) -> protodsl::Result<PathBuf> {
    p.ok_or_else(|| protodsl::Error::Config(format!("--{flag} is required")))
}

fn load_config(path: Option<PathBuf>) -> protodsl::Result<Config> {
    match path {
        Some(p) => Config::load(&p),
        None => Ok(Config::default()),
    }
}

fn run(cli: Cli) -> protodsl::Result<ExitCode> {
    let jobs = cli.jobs.max(1);
    match cli.cmd {
        Cmd::Design {
            config,
            corpus,
            out,
            domain,
            seed,
        } => {
            let mut cfg = load_config(config)?;
            if let Some(c) = corpus {
                cfg.corpus = c;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if domain.is_some() {
                cfg.domain = domain;
            }
            if let Some(s) = seed {
                cfg.dpmm.seed = s;
            }
            let now = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
            let out = pipeline::cmd_design(&cfg, jobs, now)?;
            print!("{}", pipeline::design_summary(&out));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Check { artifact, programs } => {
            let report = pipeline::cmd_check(&artifact, &programs, jobs)?;
            print!("{}", report.render());
            Ok(if report.is_clean() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Eval {
            mode,
            artifact,
            triplets,
            threshold,
            predicted,
            truth,
            other,
            fixtures,
            gateway,
            model,
            json,
        } => {
            let req = match mode {
                EvalMode::Ontology => EvalRequest::Ontology {
                    artifact: need(artifact, "artifact")?,
                    triplets: need(triplets, "triplets")?,
                    threshold,
                },
                EvalMode::Utility => EvalRequest::Utility {
                    predicted: need(predicted, "predicted")?,
                    truth: need(truth, "truth")?,
                },
                EvalMode::Overlap => EvalRequest::Overlap {
                    a: need(artifact, "artifact")?,
                    b: need(other, "other")?,
                },
                EvalMode::Judge => {
                    let mut g = GatewayConfig {
                        mode: gateway.parse::<Mode>()?,
                        ..GatewayConfig::default()
                    };
                    if let Some(f) = fixtures {
                        g.fixtures = f;
                    }
                    if let Some(m) = model {
                        g.model = m;
                    }
                    EvalRequest::Judge {
                        artifact: need(artifact, "artifact")?,
                        gateway: g,
                    }
                }
            };
            let report = pipeline::cmd_eval(&req, jobs)?;
            print!("{}", if json { report.to_json() } else { report.render() });
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Filters { corpus, config, all } => {
            let cfg = load_config(config)?;
            let table: DomainMappingTable = cfg.domain_table()?;
            let protocols: Vec<Protocol> = load_corpus_with(&corpus, &table)?;
            print!("{}", pipeline::cmd_filters(&protocols, &cfg.filters, cfg.lexicons()?, all, jobs));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Report { artifact } => {
            print!("{}", pipeline::cmd_report(&artifact)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    init_logging();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn init_logging() {
    struct Stderr;
    impl log::Log for Stderr {
        fn enabled(&self, m: &log::Metadata) -> bool {
            m.level() <= log::max_level()
        }
        fn log(&self, r: &log::Record) {
            if self.enabled(r.metadata()) {
                eprintln!("{}: {}", r.level().as_str().to_lowercase(), r.args());
            }
        }
        fn flush(&self) {}
    }
    static LOGGER: Stderr = Stderr;
    let level = match std::env::var("PROTODSL_LOG").as_deref() {
        Ok("debug") => log::LevelFilter::Debug,
        Ok("info") => log::LevelFilter::Info,
        Ok("off") => log::LevelFilter::Off,
        _ => log::LevelFilter::Warn,
    };
    if log::set_logger(&LOGGER).is_ok() {
        log::set_max_level(level);
    }
}
