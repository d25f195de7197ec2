use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trustmap_core::bulk::{load_poss, write_poss};
use trustmap_core::generate::{bulk_topology, gen_bulk_workload};
use trustmap_core::harness::{self, BenchOptions};
use trustmap_core::verify::{self, VerifyConfig};
use trustmap_core::{
    oracle_resolve, resolve, resolve_all_keys, results_to_csv, BulkResolver, Error, GenSpec, Key, PossRole,
    ResolutionResult, Suite, TrustNetwork, Workload,
};

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_DOMAIN: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_MISMATCH: u8 = 5;

/// Resolve conflicting beliefs in trust networks.
#[derive(Parser)]
#[command(name = "trustmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic workload.
    Gen {
        #[command(subcommand)]
        family: GenFamily,
    },
    /// Possible and certain values with the polynomial engine.
    Resolve(ResolveArgs),
    /// Possible and certain values by stable-model enumeration.
    Oracle {
        #[command(flatten)]
        args: ResolveArgs,
        /// Refuse programs with more atoms than this.
        #[arg(long, default_value_t = trustmap_core::DEFAULT_ATOM_LIMIT)]
        atom_limit: usize,
    },
    /// Resolve many keys over one belief-free topology.
    Bulk {
        /// Topology network (JSON, no beliefs).
        #[arg(long)]
        topology: PathBuf,
        /// Input beliefs, CSV with header X,K,V.
        #[arg(long)]
        beliefs: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Time a suite over a family of generated workloads.
    Bench(BenchArgs),
    /// Plot one or more bench CSV files as a log-log SVG chart.
    Plot {
        #[arg(long = "csv", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compare the engine against the oracle on small networks.
    Verify {
        /// Skip the exhaustive grid of small networks.
        #[arg(long)]
        no_systematic: bool,
        #[arg(long, default_value_t = 1000)]
        random: usize,
        #[arg(long, default_value_t = 6)]
        max_users: usize,
        #[arg(long, default_value_t = 3)]
        max_values: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = verify::SWEEP_ATOM_LIMIT)]
        atom_limit: usize,
    },
}

#[derive(Subcommand)]
enum GenFamily {
    /// Independent four-user clusters with two cyclic users each.
    Cycles {
        #[arg(long)]
        clusters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Preferential-attachment graph, optionally edge-sampled.
    Scalefree {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 2)]
        edges_per_node: usize,
        #[arg(long, default_value_t = 1.0)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Chain of rings that the engine unwinds one ring at a time.
    Nested {
        #[arg(long)]
        users: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Bulk beliefs for two believers plus the shared topology.
    Bulkload {
        #[arg(long)]
        objects: usize,
        #[arg(long, default_value_t = 0.0)]
        conflict_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the topology network.
        #[arg(long)]
        topology_out: PathBuf,
        /// Where to write the beliefs CSV.
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct ResolveArgs {
    /// Network JSON file.
    #[arg(long)]
    network: PathBuf,
    /// Resolve only this key; all believed keys otherwise.
    #[arg(long)]
    key: Option<String>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Ra,
    Oracle,
    Bulk,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Cycles,
    Scalefree,
    Nested,
    Bulk,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    suite: SuiteArg,
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Comma-separated sizes: clusters, nodes, users or objects depending on the family.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 2)]
    edges_per_node: usize,
    #[arg(long, default_value_t = 1.0)]
    fraction: f64,
    #[arg(long, default_value_t = 0.0)]
    conflict_fraction: f64,
    #[arg(long, default_value_t = trustmap_core::DEFAULT_ATOM_LIMIT)]
    atom_limit: usize,
    /// Summary CSV.
    #[arg(short, long)]
    output: PathBuf,
    /// Optional log-log chart.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Optional CSV of raw per-trial times.
    #[arg(long)]
    trials_csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DomainTooLarge { .. } => EXIT_DOMAIN,
        Error::Io(_) => EXIT_IO,
        Error::Usage(_) | Error::InsufficientData { .. } => EXIT_USAGE,
        _ => EXIT_VALIDATION,
    }
}

fn run(command: Command) -> trustmap_core::Result<ExitCode> {
    match command {
        Command::Gen { family } => generate(family)?,
        Command::Resolve(args) => {
            let net = TrustNetwork::load(&args.network)?;
            let results = match parse_key(args.key.as_deref())? {
                Some(key) => vec![resolve(&net, &key)],
                None => resolve_all_keys(&net),
            };
            write_results(&results, &args.output)?;
        }
        Command::Oracle { args, atom_limit } => {
            let net = TrustNetwork::load(&args.network)?;
            let keys = match parse_key(args.key.as_deref())? {
                Some(key) => vec![key],
                None => net.keys().into_iter().collect(),
            };
            let results =
                keys.iter().map(|k| oracle_resolve(&net, k, atom_limit)).collect::<trustmap_core::Result<Vec<_>>>()?;
            for r in results.iter().filter(|r| r.no_stable_solution) {
                eprintln!("warning: no stable solution for key {}", r.key);
            }
            write_results(&results, &args.output)?;
        }
        Command::Bulk { topology, beliefs, output } => {
            let net = TrustNetwork::load(&topology)?;
            let input = load_poss(&beliefs, PossRole::Input)?;
            let out = BulkResolver::new(&net)?.resolve(&input)?;
            write_poss(&out, &output)?;
            eprintln!("resolved {} keys into {} rows", count_keys(&input), out.rows.len());
        }
        Command::Bench(args) => bench(args)?,
        Command::Plot { inputs, output } => {
            let mut records = Vec::new();
            for path in &inputs {
                records.extend(harness::load_csv(path)?);
            }
            harness::emit_svg(&records, &output)?;
        }
        Command::Verify { no_systematic, random, max_users, max_values, seed, atom_limit } => {
            let config = VerifyConfig {
                systematic: !no_systematic,
                random_instances: random,
                max_random_users: max_users,
                max_random_values: max_values,
                seed,
                atom_limit,
            };
            let report = verify::run(&config)?;
            eprintln!(
                "checked {} systematic and {} random instances, {} mismatches",
                report.systematic_checked,
                report.random_checked,
                report.mismatches.len()
            );
            if let Some(m) = report.mismatches.first() {
                eprintln!("first mismatch, key {}:\n{}", m.key, m.network.to_json());
                eprintln!("engine:\n{}oracle:\n{}", m.engine.to_csv(), m.oracle.to_csv());
                return Ok(ExitCode::from(EXIT_MISMATCH));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_key(key: Option<&str>) -> trustmap_core::Result<Option<Key>> {
    key.map(Key::new).transpose()
}

fn write_results(results: &[ResolutionResult], path: &PathBuf) -> trustmap_core::Result<()> {
    std::fs::write(path, results_to_csv(results))?;
    Ok(())
}

fn count_keys(table: &trustmap_core::PossTable) -> usize {
    let mut keys: Vec<_> = table.rows.iter().map(|r| &r.key).collect();
    keys.sort();
    keys.dedup();
    keys.len()
}

fn generate(family: GenFamily) -> trustmap_core::Result<()> {
    let (spec, output) = match family {
        GenFamily::Cycles { clusters, seed, output } => (GenSpec::Cycles { clusters, seed }, output),
        GenFamily::Scalefree { nodes, edges_per_node, fraction, seed, output } => {
            (GenSpec::ScaleFree { nodes, edges_per_node, fraction, seed }, output)
        }
        GenFamily::Nested { users, seed, output } => (GenSpec::Nested { users, seed }, output),
        GenFamily::Bulkload { objects, conflict_fraction, seed, topology_out, output } => {
            GenSpec::Bulk { objects, conflict_fraction, seed }.validate()?;
            bulk_topology().save(&topology_out)?;
            write_poss(&gen_bulk_workload(objects, conflict_fraction, seed), &output)?;
            return Ok(());
        }
    };
    spec.validate()?;
    match spec.generate() {
        Workload::Network(net) => {
            net.save(&output)?;
            eprintln!("{spec}: {} users, {} mappings", net.num_users(), net.num_mappings());
        }
        Workload::Bulk { .. } => unreachable!("bulk workloads are written above"),
    }
    Ok(())
}

fn bench(args: BenchArgs) -> trustmap_core::Result<()> {
    let suite = match args.suite {
        SuiteArg::Ra => Suite::Ra,
        SuiteArg::Oracle => Suite::Oracle,
        SuiteArg::Bulk => Suite::Bulk,
    };
    let specs: Vec<GenSpec> = args
        .sizes
        .iter()
        .map(|&n| match args.family {
            FamilyArg::Cycles => GenSpec::Cycles { clusters: n, seed: args.seed },
            FamilyArg::Scalefree => GenSpec::ScaleFree {
                nodes: n,
                edges_per_node: args.edges_per_node,
                fraction: args.fraction,
                seed: args.seed,
            },
            FamilyArg::Nested => GenSpec::Nested { users: n, seed: args.seed },
            FamilyArg::Bulk => GenSpec::Bulk { objects: n, conflict_fraction: args.conflict_fraction, seed: args.seed },
        })
        .collect();
    let options = BenchOptions { trials: args.trials, atom_limit: args.atom_limit };
    let records = harness::run_benchmark(suite, &specs, &options)?;
    harness::emit_csv(&records, &args.output)?;
    if let Some(path) = &args.svg {
        harness::emit_svg(&records, path)?;
    }
    if let Some(path) = &args.trials_csv {
        harness::emit_trials_csv(&records, path)?;
    }
    for r in &records {
        eprintln!("{} {}: mean {:.6} s over {} trials", r.suite, r.family, r.elapsed_mean_s, r.trials);
    }
    match harness::fit_scaling_exponent(&records) {
        Ok(fit) => eprintln!("fitted exponent {:.3} (R^2 {:.3})", fit.exponent, fit.r_squared),
        Err(_) => eprintln!("fewer than four increasing sizes, no exponent fitted"),
    }
    Ok(())
}
