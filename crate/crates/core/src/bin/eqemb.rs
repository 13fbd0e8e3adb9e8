use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eqemb::cli::{cmd_eval, cmd_ingest, cmd_inspect, cmd_query, cmd_score, cmd_train, Query, QueryOptions};
use eqemb::config::RunConfig;
use eqemb::eval::{write_grid_report, GridRow};
use eqemb::model::Param;
use eqemb::retrieval::Metric;
use eqemb::{Error, Result};

/// Equation embeddings from LaTeX corpora.
#[derive(Parser)]
#[command(name = "eqemb", version)]
struct Cli {
    /// key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. --set k=50.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Paths {
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract, tokenize and split a directory of .tex files into a bundle.
    Ingest {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// Process documents on all cores (same output).
        #[arg(long)]
        parallel: bool,
    },
    /// Train one model on a bundle.
    Train {
        #[command(flatten)]
        paths: Paths,
        /// baseline | eqemb | eqemb_u
        #[arg(long)]
        mode: Option<String>,
    },
    /// Run the selection grid, or score one model with --model.
    Eval {
        #[command(flatten)]
        paths: Paths,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Nearest-neighbour queries.
    Query {
        #[command(flatten)]
        paths: Paths,
        #[command(subcommand)]
        kind: QueryKind,
    },
    /// Print a model file header.
    Inspect { model: PathBuf },
}

#[derive(Args)]
struct QueryArgs {
    #[arg(short, default_value_t = 5)]
    k: usize,
    /// cosine | euclidean
    #[arg(long)]
    metric: Option<String>,
}

#[derive(Subcommand)]
enum QueryKind {
    Eq2eq {
        #[arg(long)]
        id: u32,
        #[command(flatten)]
        args: QueryArgs,
    },
    Eq2word {
        #[arg(long)]
        id: u32,
        #[command(flatten)]
        args: QueryArgs,
    },
    Word2eq {
        /// Comma-separated query words.
        #[arg(long)]
        words: String,
        /// Equation vector to compare: rho | alpha
        #[arg(long, default_value = "rho")]
        param: String,
        #[command(flatten)]
        args: QueryArgs,
    },
}

fn override_paths(config: &mut RunConfig, paths: &Paths) {
    if let Some(b) = &paths.bundle {
        config.bundle_dir = b.clone();
    }
    if let Some(m) = &paths.model {
        config.model_path = m.clone();
    }
}

fn options(args: &QueryArgs, param: Param) -> Result<QueryOptions> {
    let metric = match &args.metric {
        Some(m) => Some(Metric::parse(m).ok_or_else(|| Error::Usage(format!("unknown metric {m:?}")))?),
        None => None,
    };
    Ok(QueryOptions { k: args.k, metric, param })
}

fn run(cli: Cli) -> Result<()> {
    let mut config = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    match cli.command {
        Command::Ingest { corpus, bundle, parallel } => {
            if let Some(c) = corpus {
                config.corpus_dir = Some(c);
            }
            if let Some(b) = bundle {
                config.bundle_dir = b;
            }
            config.ingest.parallel |= parallel;
            let stats = cmd_ingest(&config)?;
            println!("{stats}");
        }
        Command::Train { paths, mode } => {
            override_paths(&mut config, &paths);
            if let Some(m) = mode {
                config.set("mode", &m)?;
            }
            let summary = cmd_train(&config)?;
            for t in &summary.traces {
                println!("{}\tepochs={}\tbest_epoch={}", t.pass, t.epochs.len(), t.best_epoch);
            }
            if summary.untokenizable > 0 {
                println!("untokenizable_equations\t{}", summary.untokenizable);
            }
            println!("model\t{}", config.model_path.display());
        }
        Command::Eval { paths, report } => {
            override_paths(&mut config, &paths);
            if let Some(r) = report {
                config.report_path = r;
            }
            if paths.model.is_some() {
                for r in cmd_score(&config)? {
                    println!("{r}");
                }
            } else {
                let rows: Vec<GridRow> = cmd_eval(&config)?;
                let mut out = std::io::stdout().lock();
                write_grid_report(&mut out, &rows, &config.to_kv())?;
            }
        }
        Command::Query { paths, kind } => {
            override_paths(&mut config, &paths);
            let (query, opts) = match kind {
                QueryKind::Eq2eq { id, args } => (Query::Eq2Eq { id }, options(&args, Param::Rho)?),
                QueryKind::Eq2word { id, args } => (Query::Eq2Word { id }, options(&args, Param::Rho)?),
                QueryKind::Word2eq { words, param, args } => {
                    let param = match param.as_str() {
                        "rho" => Param::Rho,
                        "alpha" => Param::Alpha,
                        other => return Err(Error::Usage(format!("unknown param {other:?}"))),
                    };
                    (Query::Word2Eq { words }, options(&args, param)?)
                }
            };
            print!("{}", cmd_query(&config, &query, &opts)?);
        }
        Command::Inspect { model } => println!("{}", cmd_inspect(&model)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eqemb: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
