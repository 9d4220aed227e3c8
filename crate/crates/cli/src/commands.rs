use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_traits::ToPrimitive;

use hquery::boolfun::{parse_function, BoolFn};
use hquery::census::{
    counts_from_checkpoint, run_census, CensusConfig, CensusCounts, CensusRecord,
};
use hquery::compile::{brute_force_pqe, compile_query, HQuery, TidDatabase, DEFAULT_NODE_BUDGET};
use hquery::lattice::{mobius_checksum_holds, CnfLattice, LatticeError};
use hquery::niceness::{
    find_decomposition, verify_decomposition, NiceDecomposition, NiceInstance, Niceness,
};
use hquery::sat::BackendChoice;

use crate::args::{Cli, Command};
use crate::config::RunConfig;
use crate::report::Report;
use crate::CliError;

/// Largest database cross-checked against the brute-force oracle.
pub const CROSS_CHECK_MAX_FACTS: usize = 20;

/// What a command produced: human-readable text, the machine-readable report
/// and where that report was written.
#[derive(Debug, Clone)]
pub struct Output {
    pub text: String,
    pub report: Report,
    pub report_path: Option<PathBuf>,
    pub bad_found: bool,
}

impl Output {
    fn new(text: String, report: Report) -> Self {
        Output {
            text,
            report,
            report_path: None,
            bad_found: false,
        }
    }
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    let mut cfg = RunConfig::from_cli(cli)?;
    let census = matches!(cli.command, Command::Census { .. } | Command::Table1 { .. });
    match &cli.command {
        Command::Census {
            k,
            shards,
            include_k6,
            include_unsafe,
        } => {
            cfg.k = Some(*k);
            cfg.shards = *shards;
            cfg.long_run = *include_k6;
            cfg.include_unsafe = *include_unsafe;
        }
        Command::Inspect { k, .. } | Command::Probability { k, .. } => cfg.k = *k,
        Command::Table1 {
            include_k6, shards, ..
        } => {
            cfg.long_run = *include_k6;
            cfg.shards = *shards;
        }
    }
    cfg.validate(census)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Census { .. } => cmd_census(&cfg),
        Command::Inspect { function, dot, .. } => cmd_inspect(&cfg, function, dot.as_deref()),
        Command::Probability {
            function,
            database,
            dump,
            ..
        } => cmd_probability(&cfg, function, database, dump.as_deref()),
        Command::Table1 { check_only, .. } => cmd_table1(&cfg, *check_only),
    })
}

fn write_report(mut out: Output, path: PathBuf) -> Result<Output, CliError> {
    out.report.write(&path)?;
    out.report_path = Some(path);
    Ok(out)
}

fn census_config(cfg: &RunConfig, k: u8) -> CensusConfig {
    CensusConfig {
        k,
        shards: cfg.shards,
        backend: cfg.backend.clone(),
        allow_long: cfg.long_run,
        include_unsafe: cfg.include_unsafe,
    }
}

fn counts_line(k: u8, c: &CensusCounts) -> String {
    format!(
        "k={k}: |R|={} |SND|={} |N|={} |co-N|={} |BAD|={}",
        c.r, c.snd, c.nice, c.co_nice, c.bad
    )
}

/// Enumerate, filter and classify one `k`, resuming from the checkpoint in
/// the output directory.
pub fn cmd_census(cfg: &RunConfig) -> Result<Output, CliError> {
    let k = cfg
        .k
        .ok_or_else(|| CliError::Config("census needs --k".into()))?;
    let start = Instant::now();
    let outcome = run_census(&census_config(cfg, k), Some(cfg.out_dir()))?;
    let mut report = Report::new();
    report.push("command", "census");
    report.push("k", k);
    report.push("shards", cfg.shards);
    report.push("solver", cfg.solver_name());
    report.push_counts(&format!("k{k}."), &outcome.counts);
    report.push_flag("consistent", outcome.counts.is_consistent());
    if let Some((n, co, bad)) = outcome.unsafe_tags {
        report.push(format!("k{k}.unsafe.N"), n);
        report.push(format!("k{k}.unsafe.coN"), co);
        report.push(format!("k{k}.unsafe.BAD"), bad);
    }
    for (i, rec) in outcome.co_nice.iter().enumerate() {
        report.push(format!("witness.coN.{i}"), &rec.func);
    }
    for (i, rec) in outcome.bad.iter().enumerate() {
        report.push(format!("witness.BAD.{i}"), &rec.func);
    }
    let mut text = counts_line(k, &outcome.counts);
    writeln!(
        text,
        "\nshards computed: {} of {}; elapsed {:.2?}",
        outcome.fresh_shards,
        cfg.shards,
        start.elapsed()
    )
    .unwrap();
    if let Some((n, co, bad)) = outcome.unsafe_tags {
        writeln!(text, "unsafe nondegenerate: N={n} coN={co} BAD={bad}").unwrap();
    }
    for rec in &outcome.co_nice {
        writeln!(text, "co-nice: {}", cnf_or_table(&rec.func)).unwrap();
    }
    let bad_found = !outcome.bad.is_empty();
    if bad_found {
        let paths = write_bad(cfg.out_dir(), &outcome.bad, &cfg.backend)?;
        writeln!(
            text,
            "*** {} BAD FUNCTION(S) FOUND: neither nice nor co-nice ***",
            paths.len()
        )
        .unwrap();
        for p in paths {
            writeln!(text, "  diagnostics: {}", p.display()).unwrap();
        }
    }
    let mut out = Output::new(text, report);
    out.bad_found = bad_found;
    write_report(out, cfg.out_dir().join(format!("census-k{k}.report")))
}

fn cnf_or_table(f: &BoolFn) -> String {
    match f.minimized_cnf() {
        Ok(cnf) => format!("{cnf}  [{f}]"),
        Err(_) => f.to_string(),
    }
}

/// One diagnostics file per BAD function under `<out>/bad/`.
fn write_bad(
    out: &Path,
    bad: &[CensusRecord],
    backend: &BackendChoice,
) -> Result<Vec<PathBuf>, CliError> {
    let dir = out.join("bad");
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let mut paths = Vec::new();
    for rec in bad {
        let f = &rec.func;
        let mut s = String::new();
        writeln!(s, "function {f}").unwrap();
        writeln!(s, "cnf {}", cnf_or_table(f)).unwrap();
        if let Ok(lat) = CnfLattice::build(f) {
            let row = lat.mobius_row();
            writeln!(s, "lattice_size {}", lat.len()).unwrap();
            writeln!(s, "mu {}", row.at(lat.bottom())).unwrap();
        }
        for (name, g) in [("nice(phi)", f.clone()), ("nice(not phi)", f.negate())] {
            let verdict = find_decomposition(&g, backend.instantiate().as_mut())?;
            writeln!(
                s,
                "{name} {}",
                if verdict.is_some() { "SAT" } else { "UNSAT" }
            )
            .unwrap();
            writeln!(s, "c --- {name} DIMACS ---").unwrap();
            s.push_str(&NiceInstance::build(&g).to_dimacs());
        }
        let path = dir.join(format!("k{}-{}.txt", f.k(), f.to_hex()));
        fs::write(&path, s).map_err(CliError::io(&path))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Counts for every `k` in the table, computed (or recounted from existing
/// census files with `check_only`).
pub fn cmd_table1(cfg: &RunConfig, check_only: bool) -> Result<Output, CliError> {
    let max_k = if cfg.long_run { 6 } else { 5 };
    let start = Instant::now();
    let mut report = Report::new();
    report.push("command", "table1");
    report.push("shards", cfg.shards);
    report.push_flag("check_only", check_only);
    if !check_only {
        report.push("solver", cfg.solver_name());
    }
    let mut text = format!(
        "{:>2}  {:>12}  {:>12}  {:>12}  {:>8}  {:>8}\n",
        "k", "|R(k)|", "|SND(k)|", "|N(k)|", "|co-N(k)|", "|BAD(k)|"
    );
    let mut bad_found = false;
    for k in 1..=max_k {
        let counts = if check_only {
            counts_from_checkpoint(cfg.out_dir(), k, cfg.shards)?
        } else {
            let outcome = run_census(&census_config(cfg, k), Some(cfg.out_dir()))?;
            if !outcome.bad.is_empty() {
                bad_found = true;
                write_bad(cfg.out_dir(), &outcome.bad, &cfg.backend)?;
            }
            outcome.counts
        };
        if !counts.is_consistent() {
            return Err(CliError::CheckFailed(format!(
                "k={k}: N + co-N + BAD != SND in {counts:?}"
            )));
        }
        writeln!(
            text,
            "{:>2}  {:>12}  {:>12}  {:>12}  {:>8}  {:>8}",
            k, counts.r, counts.snd, counts.nice, counts.co_nice, counts.bad
        )
        .unwrap();
        report.push_counts(&format!("k{k}."), &counts);
    }
    if !check_only {
        // Census construction aborts on any lattice failing the checksum.
        report.push("mobius_checksum", "ok");
    }
    if bad_found {
        text.push_str("*** BAD FUNCTION(S) FOUND; see the bad/ directory ***\n");
    }
    writeln!(text, "elapsed {:.2?}", start.elapsed()).unwrap();
    let mut out = Output::new(text, report);
    out.bad_found = bad_found;
    write_report(out, cfg.out_dir().join("table1.report"))
}

fn parse_fn(cfg: &RunConfig, text: &str) -> Result<BoolFn, CliError> {
    parse_function(text, cfg.k).map_err(|e| CliError::Parse(format!("{text:?}: {e}")))
}

fn render_decomposition(d: &NiceDecomposition) -> String {
    d.nonempty_boxes()
        .map(|l| {
            let members: Vec<String> = d.boxes[l as usize]
                .iter()
                .map(|nu| nu.to_string())
                .collect();
            format!("box {l}: {}", members.join(" "))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Dependencies, nondegeneracy, minimized CNF, safety via the CNF lattice,
/// and nice / co-nice verdicts with verified decompositions.
pub fn cmd_inspect(
    cfg: &RunConfig,
    function: &str,
    dot: Option<&Path>,
) -> Result<Output, CliError> {
    let f = parse_fn(cfg, function)?;
    let mut report = Report::new();
    let mut text = String::new();
    report.push("command", "inspect");
    report.push("k", f.k());
    report.push("table", f.to_hex());
    report.push("dep", f.dep());
    report.push_flag("nondegenerate", f.is_nondegenerate());
    report.push_flag("monotone", f.is_monotone());
    writeln!(text, "function: {f}").unwrap();
    writeln!(text, "dep: {}", f.dep()).unwrap();
    writeln!(text, "nondegenerate: {}", yes_no(f.is_nondegenerate())).unwrap();
    match f.minimized_cnf() {
        Ok(cnf) => {
            writeln!(text, "minimized CNF: {cnf}").unwrap();
            report.push("cnf", &cnf);
        }
        Err(e) => writeln!(text, "minimized CNF: unavailable ({e})").unwrap(),
    }
    match CnfLattice::build(&f) {
        Ok(lat) => {
            let row = lat.mobius_row();
            let mu = row.at(lat.bottom());
            let checksum = mobius_checksum_holds(&lat, &row);
            writeln!(text, "CNF lattice: {} elements", lat.len()).unwrap();
            writeln!(text, "mu(0,1) = {mu}").unwrap();
            writeln!(text, "safe: {}", yes_no(mu == 0)).unwrap();
            report.push("lattice_size", lat.len());
            report.push("mu", mu);
            report.push_flag("safe", mu == 0);
            report.push_flag("mobius_checksum", checksum);
            if !checksum {
                return Err(CliError::CheckFailed(format!(
                    "Möbius checksum fails for {f}"
                )));
            }
            if let Some(path) = dot {
                fs::write(path, lat.hasse_dot(&row)).map_err(CliError::io(path))?;
                writeln!(text, "Hasse diagram written to {}", path.display()).unwrap();
            }
        }
        Err(LatticeError::Degenerate(dep)) => {
            writeln!(
                text,
                "CNF lattice: skipped, function is degenerate (dep {dep})"
            )
            .unwrap();
            report.push("safe", "n/a");
        }
        Err(e) => {
            writeln!(text, "CNF lattice: skipped ({e})").unwrap();
            report.push("safe", "n/a");
        }
    }
    let mut class = "BAD";
    for (name, key, g) in [
        ("nice(phi)", "nice", f.clone()),
        ("nice(not phi)", "co_nice", f.negate()),
    ] {
        let found = find_decomposition(&g, cfg.backend.instantiate().as_mut())?;
        match found {
            Some(d) => {
                let verified = verify_decomposition(&g, &d);
                writeln!(text, "{name}: SAT").unwrap();
                writeln!(
                    text,
                    "  decomposition (verified: {}): {}",
                    yes_no(verified),
                    render_decomposition(&d)
                )
                .unwrap();
                report.push(key, "SAT");
                report.push(format!("{key}.verified"), u8::from(verified));
                report.push(format!("{key}.boxes"), d.nonempty_boxes().count());
                report.push(format!("{key}.decomposition"), render_decomposition(&d));
                if !verified {
                    return Err(CliError::CheckFailed(format!(
                        "{name} decomposition does not verify"
                    )));
                }
                if class == "BAD" {
                    class = if key == "nice" { "N" } else { "coN" };
                }
            }
            None => {
                writeln!(text, "{name}: UNSAT").unwrap();
                report.push(key, "UNSAT");
            }
        }
    }
    writeln!(text, "class: {class}").unwrap();
    report.push("class", class);
    let out = Output::new(text, report);
    match &cfg.out {
        Some(dir) => write_report(out, dir.join("inspect.report")),
        None => Ok(out),
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Exact probability through the nice (d-DNNF) or co-nice (d-D) route.
pub fn cmd_probability(
    cfg: &RunConfig,
    function: &str,
    database: &Path,
    dump: Option<&Path>,
) -> Result<Output, CliError> {
    let f = parse_fn(cfg, function)?;
    let text_db = fs::read_to_string(database).map_err(CliError::io(database))?;
    let db = TidDatabase::parse(&text_db, f.k())?;
    let niceness = hquery::niceness::classify(&f, &cfg.backend)?;
    let route = match &niceness {
        Niceness::Nice(_) => "nice (d-DNNF)",
        Niceness::CoNice(_) => "co-nice (d-D, negation at the top)",
        Niceness::Bad => {
            return Err(CliError::Unsupported(
                "BAD/unsafe function: neither nice nor co-nice".into(),
            ))
        }
    };
    let q = HQuery::new(f);
    let budget = if cfg.node_budget == 0 {
        DEFAULT_NODE_BUDGET
    } else {
        cfg.node_budget
    };
    let circuit = compile_query(&q, &niceness, &db, budget)?;
    let p = circuit.probability(db.probs())?;
    let mut report = Report::new();
    let mut text = String::new();
    report.push("command", "probability");
    report.push("k", q.k());
    report.push("table", q.phi().to_hex());
    report.push("facts", db.len());
    report.push("route", niceness.tag());
    report.push("probability", &p);
    report.push("gates", circuit.size());
    report.push("edges", circuit.num_edges());
    report.push_flag("decomposable", circuit.check_decomposable());
    report.push_flag("nnf", circuit.is_nnf());
    writeln!(text, "route: {route}").unwrap();
    writeln!(text, "probability: {p}").unwrap();
    writeln!(text, "approximately: {}", p.to_f64().unwrap_or(f64::NAN)).unwrap();
    writeln!(
        text,
        "circuit: {} gates, {} edges",
        circuit.size(),
        circuit.num_edges()
    )
    .unwrap();
    if db.len() <= CROSS_CHECK_MAX_FACTS {
        let oracle = brute_force_pqe(&q, &db)?;
        let agree = oracle == p;
        writeln!(
            text,
            "brute force: {oracle} ({})",
            if agree { "agrees" } else { "DISAGREES" }
        )
        .unwrap();
        report.push("brute_force", &oracle);
        report.push_flag("brute_force_agrees", agree);
        if !agree {
            return Err(CliError::CheckFailed(format!(
                "circuit gives {p}, brute force gives {oracle}"
            )));
        }
    } else {
        writeln!(text, "brute force: skipped ({} facts)", db.len()).unwrap();
    }
    if let Some(path) = dump {
        fs::write(path, circuit.dump()).map_err(CliError::io(path))?;
        writeln!(text, "circuit written to {}", path.display()).unwrap();
    }
    let out = Output::new(text, report);
    match &cfg.out {
        Some(dir) => write_report(out, dir.join("probability.report")),
        None => Ok(out),
    }
}
