use std::path::PathBuf;

use clap::{Parser, Subcommand};

use hquery::compile::DEFAULT_NODE_BUDGET;

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Parser)]
#[command(
    name = "hquery",
    version,
    about = "Census, safety, niceness and d-DNNF compilation for monotone H-queries"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads.
    #[arg(long, global = true, default_value_t = default_jobs())]
    pub jobs: usize,

    /// `embedded`, or an external solver command reading a DIMACS file.
    #[arg(long, global = true, default_value = "embedded")]
    pub solver: String,

    /// Seed for the embedded solver.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Give up on a SAT call after this many conflicts (embedded solver).
    #[arg(long, global = true)]
    pub conflict_limit: Option<u64>,

    /// Maximum number of gates per compiled circuit.
    #[arg(long, global = true, default_value_t = DEFAULT_NODE_BUDGET)]
    pub node_budget: usize,

    /// Output directory for census files and reports.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate R(k), filter SND(k) and classify niceness.
    Census {
        #[arg(long)]
        k: u8,
        #[arg(long, default_value_t = 1)]
        shards: usize,
        /// Allow the k=6 long run.
        #[arg(long)]
        include_k6: bool,
        /// Also classify unsafe nondegenerate functions.
        #[arg(long)]
        include_unsafe: bool,
    },
    /// Report dependencies, CNF, safety and niceness of one function.
    Inspect {
        /// CNF such as `(2|3)&(0|3)&(1|3)&(0|1|2)`, or `k:<k> table:<hex>`.
        function: String,
        #[arg(long)]
        k: Option<u8>,
        /// Write the Hasse diagram of the CNF lattice as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Exact probability of a nice or co-nice query on a TID database.
    Probability {
        function: String,
        database: PathBuf,
        #[arg(long)]
        k: Option<u8>,
        /// Write the compiled circuit in the line-oriented dump format.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Census counts for k = 1..5 (and 6 on request) as a table.
    Table1 {
        #[arg(long)]
        include_k6: bool,
        /// Recount existing census files without solving.
        #[arg(long)]
        check_only: bool,
        #[arg(long, default_value_t = 1)]
        shards: usize,
    },
}
