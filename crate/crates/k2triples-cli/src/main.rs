//! `k2t` — build, query, inspect, and benchmark compressed triple stores.
//!
//! Exit codes: 0 success, 1 usage error, 2 input/output or file-format
//! error, 3 query error. Diagnostic logging is controlled by the
//! `K2T_LOG` environment variable (`error`, `warn`, `info`, `debug`,
//! `trace`).

mod bench;
mod query;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use k2triples::ingest;
use k2triples::joins::JoinStrategy;
use k2triples::k2tree::K2Config;
use k2triples::store::TripleStore;

#[derive(Parser)]
#[command(
    name = "k2t",
    version,
    about = "Compressed in-memory RDF triple store",
    long_about = "Stores RDF triples as one compressed binary matrix per predicate, \
                  with per-entity predicate indexes for variable-predicate queries. \
                  Supports the eight triple patterns and pairwise joins."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Auto,
    Chain,
    Independent,
    Interactive,
}

impl StrategyArg {
    fn to_option(self) -> Option<JoinStrategy> {
        match self {
            StrategyArg::Auto => None,
            StrategyArg::Chain => Some(JoinStrategy::Chain),
            StrategyArg::Independent => Some(JoinStrategy::Independent),
            StrategyArg::Interactive => Some(JoinStrategy::Interactive),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a store file from N-Triples input (plain or gzip).
    Build {
        /// Input file; gzip is detected by its magic bytes.
        input: PathBuf,
        /// Store file to write.
        #[arg(short, long)]
        output: PathBuf,
        /// Fail on the first malformed line instead of skipping it.
        #[arg(long)]
        strict: bool,
        /// Branching factor of the upper tree levels.
        #[arg(long, default_value_t = 4)]
        k_upper: u8,
        /// How many levels use the upper branching factor.
        #[arg(long, default_value_t = 5)]
        upper_levels: u8,
        /// Branching factor below the upper levels.
        #[arg(long, default_value_t = 2)]
        k_lower: u8,
        /// Side of the leaf submatrices.
        #[arg(long, default_value_t = 8)]
        leaf_side: u8,
    },
    /// Run a pattern or join query against a store.
    ///
    /// Queries use `?name` for variables and `<iri>`, `"literal"`, or
    /// `_:label` for terms. One pattern is `S P O`; a join is two
    /// patterns separated by `.` that share exactly one variable.
    Query {
        /// Store file written by `build`.
        store: PathBuf,
        /// Query text, e.g. '?x <http://e/p> "v" . ?x <http://e/q> ?y'.
        query: String,
        /// Print 1-based numeric IDs instead of decoded terms.
        #[arg(long)]
        ids: bool,
        /// Print timing and work counters to stderr.
        #[arg(long)]
        stats: bool,
        /// Print at most this many rows (the full count is still reported).
        #[arg(long)]
        limit: Option<usize>,
        /// Join strategy; `auto` lets the store choose.
        #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
        strategy: StrategyArg,
    },
    /// Print store statistics.
    Info {
        /// Store file written by `build`.
        store: PathBuf,
        /// Also list every predicate with its triple count.
        #[arg(long)]
        predicates: bool,
    },
    /// Time randomized pattern and join workloads drawn from the store.
    ///
    /// Emits one CSV row per workload bucket with microsecond timings.
    /// The workload is generated from the store's own triples with a
    /// fixed seed, so a given store, seed, and size always produce the
    /// same queries.
    Bench {
        /// Store file written by `build`.
        store: PathBuf,
        /// Instantiations per pattern shape.
        #[arg(long, default_value_t = 50)]
        patterns_n: usize,
        /// Instantiations per join class and axis variant.
        #[arg(long, default_value_t = 20)]
        joins_n: usize,
        /// Workload generator seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Include the all-variables pattern (a full scan per query).
        #[arg(long)]
        include_full_scan: bool,
        /// Joins whose two sides' result-count product is at most this
        /// value are bucketed as `small`, the rest as `big`.
        #[arg(long, default_value_t = 1000)]
        small_threshold: u64,
        /// Print the generated workload instead of timing it.
        #[arg(long)]
        print_queries: bool,
    },
}

/// Failures after argument parsing, split by exit code.
enum CmdError {
    /// Input/output or file-format problems → exit 2.
    Data(anyhow::Error),
    /// Query text or strategy problems → exit 3.
    Query(anyhow::Error),
}

impl CmdError {
    fn report(self) -> ExitCode {
        match self {
            CmdError::Data(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
            CmdError::Query(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(3)
            }
        }
    }
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes (`k2t ... | head`)
    // instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("K2T_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are successful exits; anything else is usage.
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}

fn run(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Build {
            input,
            output,
            strict,
            k_upper,
            upper_levels,
            k_lower,
            leaf_side,
        } => {
            let config = K2Config {
                k_upper,
                upper_levels,
                k_lower,
                leaf_side,
            };
            cmd_build(&input, &output, strict, config)
        }
        Command::Query {
            store,
            query,
            ids,
            stats,
            limit,
            strategy,
        } => {
            let store = load_store(&store)?;
            query::run(&store, &query, ids, stats, limit, strategy.to_option())
        }
        Command::Info { store, predicates } => {
            let store = load_store(&store)?;
            cmd_info(&store, predicates);
            Ok(())
        }
        Command::Bench {
            store,
            patterns_n,
            joins_n,
            seed,
            include_full_scan,
            small_threshold,
            print_queries,
        } => {
            let store = load_store(&store)?;
            bench::run(
                &store,
                &bench::Options {
                    patterns_n,
                    joins_n,
                    seed,
                    include_full_scan,
                    small_threshold,
                    print_queries,
                },
            );
            Ok(())
        }
    }
}

fn load_store(path: &PathBuf) -> Result<TripleStore, CmdError> {
    let start = Instant::now();
    let store = TripleStore::load(path)
        .with_context(|| format!("loading store {}", path.display()))
        .map_err(CmdError::Data)?;
    info!(
        "loaded {} triples, {} predicates in {:.1?}",
        store.triple_count(),
        store.num_predicates(),
        start.elapsed()
    );
    Ok(store)
}

fn cmd_build(
    input: &PathBuf,
    output: &PathBuf,
    strict: bool,
    config: K2Config,
) -> Result<(), CmdError> {
    let start = Instant::now();
    let (store, report) = ingest::load_store(input, strict, config)
        .with_context(|| format!("building from {}", input.display()))
        .map_err(CmdError::Data)?;
    for d in &report.diagnostics {
        eprintln!("{}:{}: skipped: {}", input.display(), d.line, d.message);
    }
    if report.skipped > report.diagnostics.len() {
        eprintln!(
            "... and {} more skipped lines",
            report.skipped - report.diagnostics.len()
        );
    }
    store
        .save(output)
        .with_context(|| format!("writing {}", output.display()))
        .map_err(CmdError::Data)?;
    info!("built in {:.1?}", start.elapsed());

    let dict = store.dict();
    println!(
        "{} triples ({} parsed, {} skipped)",
        store.triple_count(),
        report.parsed,
        report.skipped
    );
    println!(
        "terms: {} shared, {} subject-only, {} object-only, {} predicates",
        dict.shared_count(),
        dict.subject_only_count(),
        dict.object_only_count(),
        dict.num_predicates()
    );
    print_sizes(&store);
    println!("wrote {}", output.display());
    Ok(())
}

fn print_sizes(store: &TripleStore) {
    let s = store.storage();
    println!(
        "bytes: dictionary {}, tree structure {}, leaves {}, subject index {}, object index {}, total {}",
        s.dict_bytes, s.tree_bytes, s.leaf_bytes, s.sp_bytes, s.op_bytes, s.total_bytes
    );
}

fn cmd_info(store: &TripleStore, predicates: bool) {
    let dict = store.dict();
    let config = store.config();
    println!("triples: {}", store.triple_count());
    println!(
        "subjects: {} ({} shared with objects)",
        dict.num_subjects(),
        dict.shared_count()
    );
    println!(
        "objects: {} ({} shared with subjects)",
        dict.num_objects(),
        dict.shared_count()
    );
    println!("predicates: {}", dict.num_predicates());
    println!("matrix side (padded): {}", store.n_prime());
    println!(
        "tree config: k_upper={} for {} levels, then k_lower={}, leaf {}x{}",
        config.k_upper, config.upper_levels, config.k_lower, config.leaf_side, config.leaf_side
    );
    print_sizes(store);
    if predicates {
        for p in 0..store.num_predicates() as u32 {
            println!(
                "predicate {}\t{}\t{}",
                p + 1,
                store.predicate_cardinality(p).unwrap_or(0),
                ingest::format_term(dict.predicate_term(p).unwrap_or(""))
            );
        }
    }
}
