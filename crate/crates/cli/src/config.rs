use std::path::{Path, PathBuf};

use hquery::boolfun::MAX_K;
use hquery::census::MAX_CENSUS_K;
use hquery::compile::DEFAULT_NODE_BUDGET;
use hquery::sat::BackendChoice;

use crate::args::Cli;
use crate::CliError;

pub const DEFAULT_OUT: &str = "hquery-out";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub k: Option<u8>,
    pub jobs: usize,
    pub shards: usize,
    pub backend: BackendChoice,
    pub node_budget: usize,
    pub out: Option<PathBuf>,
    /// Opt-in for the k=6 census.
    pub long_run: bool,
    pub include_unsafe: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: None,
            jobs: 1,
            shards: 1,
            backend: BackendChoice::default(),
            node_budget: DEFAULT_NODE_BUDGET,
            out: None,
            long_run: false,
            include_unsafe: false,
        }
    }
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        Ok(RunConfig {
            k: None,
            jobs: cli.jobs,
            shards: 1,
            backend: parse_solver(&cli.solver, cli.seed, cli.conflict_limit)?,
            node_budget: cli.node_budget,
            out: cli.out.clone(),
            long_run: false,
            include_unsafe: false,
        })
    }

    pub fn out_dir(&self) -> &Path {
        self.out.as_deref().unwrap_or(Path::new(DEFAULT_OUT))
    }

    pub fn validate(&self, census: bool) -> Result<(), CliError> {
        if self.jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        if self.shards == 0 {
            return Err(CliError::Config("--shards must be at least 1".into()));
        }
        if let Some(k) = self.k {
            let max = if census { MAX_CENSUS_K } else { MAX_K };
            if !(1..=max).contains(&k) {
                return Err(CliError::Config(format!("k={k} outside 1..={max}")));
            }
        }
        Ok(())
    }

    pub fn solver_name(&self) -> String {
        match &self.backend {
            BackendChoice::Embedded { seed, .. } => format!("embedded(seed={seed})"),
            BackendChoice::External { program, args } => {
                let mut s = program.display().to_string();
                for a in args {
                    s.push(' ');
                    s.push_str(a);
                }
                s
            }
        }
    }
}

/// `embedded`, or a command line whose first word is the solver program.
pub fn parse_solver(
    text: &str,
    seed: u64,
    conflict_limit: Option<u64>,
) -> Result<BackendChoice, CliError> {
    let mut words = text.split_whitespace();
    match words.next() {
        Some("embedded") if words.clone().next().is_none() => Ok(BackendChoice::Embedded {
            seed,
            conflict_limit,
        }),
        Some(program) => Ok(BackendChoice::External {
            program: PathBuf::from(program),
            args: words.map(str::to_string).collect(),
        }),
        None => Err(CliError::Config("empty --solver".into())),
    }
}
