mod cache;
mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{parse_range, Config};

/// Finite multiple mixed values: evaluation, relations and dimension estimates.
#[derive(Parser, Debug)]
#[command(name = "fmmv", version)]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    show_config: bool,
    /// Prime window, inclusive.
    #[arg(long, global = true, value_name = "LO..HI")]
    primes: Option<String>,
    /// Height bound for discovered relations.
    #[arg(long, global = true)]
    height: Option<u64>,
    /// Fraction of the window held out for checking discovered relations.
    #[arg(long, global = true, value_name = "N/D")]
    holdout: Option<String>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Do not read or write the residue cache.
    #[arg(long, global = true)]
    no_cache: bool,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// text, json or csv.
    #[arg(long, global = true)]
    output: Option<String>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Clone)]
pub struct ValueArgs {
    /// es, M, am, t, T, S or z2; without it the index must carry its own prefix.
    #[arg(long)]
    family: Option<String>,
    /// Index, e.g. `2,1` or `1~,1`.
    #[arg(long, allow_hyphen_values = true)]
    index: String,
    /// The star (non-strict) variant.
    #[arg(long)]
    star: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Residues of one value over the prime window.
    Eval(ValueArgs),
    /// Check every published identity over the window.
    VerifyPaper,
    /// The known relations of one weight, verified over the window.
    Relations {
        #[arg(long)]
        weight: u32,
        /// Emit the relations discovered in this space instead.
        #[arg(long)]
        space: Option<String>,
        /// Also write the relations as JSON lines to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dimension estimates, compared with the published table.
    Dims {
        /// Comma-separated spaces, e.g. `FES,FMTV`.
        #[arg(long)]
        space: String,
        /// A weight or an inclusive range `LO..HI`.
        #[arg(long)]
        weight: String,
        /// CSV laid out as the published table (spaces by weights).
        #[arg(long)]
        table: bool,
    },
    /// Write a value as a combination of constant monomials.
    Express {
        #[command(flatten)]
        value: ValueArgs,
        /// Comma-separated monomials, e.g. `q2^2,G,chi*G`.
        #[arg(long)]
        constants: String,
    },
    /// Word calculus: shuffles, series coefficients and translations.
    Words {
        #[arg(long, num_args = 2, value_names = ["U", "V"])]
        shuffle: Option<Vec<String>>,
        #[arg(long, requires = "prime")]
        coeff: Option<String>,
        #[arg(long)]
        prime: Option<u64>,
        #[arg(long)]
        translate: Option<String>,
    },
    /// Inspect or reset the residue cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum CacheAction {
    Stats,
    /// Remove every cached residue.
    Clear,
    /// Sort the cache files and drop duplicate rows.
    Compact,
}

/// An error in how the program was invoked (exit code 2).
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(e: impl fmt::Display) -> anyhow::Error {
    anyhow::Error::new(Usage(e.to_string()))
}

fn effective_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path).map_err(|e| usage(format!("{e:#}")))?,
        None => Config::default(),
    };
    if let Some(r) = &cli.primes {
        let (lo, hi) = parse_range(r).map_err(usage)?;
        cfg.prime_lo = lo;
        cfg.prime_hi = hi;
    }
    let mut set = |k: &str, v: String| cfg.set(k, &v).map_err(|e| usage(format!("--{k}: {e}")));
    if let Some(h) = cli.height {
        set("height_bound", h.to_string())?;
    }
    if let Some(h) = &cli.holdout {
        set("holdout_fraction", h.clone())?;
    }
    if let Some(d) = &cli.cache_dir {
        set("cache_dir", d.display().to_string())?;
    }
    if let Some(t) = cli.threads {
        set("threads", t.to_string())?;
    }
    if let Some(o) = &cli.output {
        set("output", o.clone())?;
    }
    if cli.no_cache {
        cfg.cache_dir = None;
    }
    cfg.check().map_err(usage)?;
    Ok(cfg)
}

/// Exit codes: 0 success, 1 verification failure, 2 usage error, 3 internal error.
fn exit_code(e: &anyhow::Error) -> u8 {
    use fmmv::relations::RelationError;
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    for cause in e.chain() {
        if let Some(r) = cause.downcast_ref::<RelationError>() {
            return match r {
                RelationError::NotInSpan(_) => 1,
                _ => 2,
            };
        }
        if cause.is::<fmmv::index::IndexError>()
            || cause.is::<fmmv::arith::ArithError>()
            || cause.is::<fmmv::words::WordError>()
        {
            return 2;
        }
    }
    3
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = effective_config(&cli)?;
    if cli.show_config {
        print!("{cfg}");
        return Ok(0);
    }
    let Some(command) = cli.command else {
        return Err(usage("no subcommand given (try --help)"));
    };
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    if let Command::Cache { action } = command {
        return commands::cache(&cfg, action);
    }
    let store = match &cfg.cache_dir {
        Some(dir) => Some(cache::CsvStore::open(dir)?),
        None => None,
    };
    let ctx = commands::Context {
        cfg: &cfg,
        store: store.as_ref(),
    };
    let code = match command {
        Command::Eval(v) => commands::eval(&ctx, &v),
        Command::VerifyPaper => commands::verify_paper(&ctx),
        Command::Relations { weight, space, out } => {
            commands::relations(&ctx, weight, space.as_deref(), out.as_deref())
        }
        Command::Dims {
            space,
            weight,
            table,
        } => commands::dims(&ctx, &space, &weight, table),
        Command::Express { value, constants } => commands::express(&ctx, &value, &constants),
        Command::Words {
            shuffle,
            coeff,
            prime,
            translate,
        } => commands::words(
            &ctx,
            shuffle.as_deref(),
            coeff.as_deref(),
            prime,
            translate.as_deref(),
        ),
        Command::Cache { .. } => unreachable!("handled above"),
    }?;
    if let Some(s) = &store {
        s.finish()?;
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(3),
    }
}
