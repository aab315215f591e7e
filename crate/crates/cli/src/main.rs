//! `theta`: verify, construct and search for theta-graph designs.
//!
//! Exit codes: 0 success, 1 a design was rejected, 2 usage, parse or I/O
//! error, 3 order outside the spectrum, 4 missing ingredient or exhausted
//! search budget.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use theta_design::catalogue::{parse_catalogue, serialize};
use theta_design::construct::default_cache_dir;
use theta_design::theta::theta_count_formula;
use theta_design::{
    enumerate_thetas, make_theta, plan, execute, search, spectrum_membership, verify_decomposition, Budget,
    CatalogueEntry, ConstructError, Context, Decomposition, GroupAction, HostGraph, SearchError,
    SearchProblem, ThetaGraph,
};

const OK: u8 = 0;
const REJECTED: u8 = 1;
const USAGE: u8 = 2;
const NOT_IN_SPECTRUM: u8 = 3;
const MISSING: u8 = 4;

#[derive(Parser)]
#[command(name = "theta", version, about = "Theta-graph design construction and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Maximum worker threads for search (0 uses all cores).
    #[arg(long, default_value_t = 0, global = true)]
    jobs: usize,
    /// Cache directory for found designs; overrides THETA_CACHE_DIR.
    #[arg(long, global = true, conflicts_with = "no_cache")]
    cache_dir: Option<PathBuf>,
    /// Do not read or write the cache.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Extra catalogue files, consulted after the shipped ones.
    #[arg(long = "catalogue", global = true, value_name = "FILE")]
    catalogues: Vec<PathBuf>,
    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Clone, Copy)]
struct ThetaArgs {
    a: u32,
    b: u32,
    c: u32,
}

impl ThetaArgs {
    fn theta(self) -> Result<ThetaGraph, Failure> {
        make_theta(self.a, self.b, self.c).map_err(|e| Failure::usage(e.to_string()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Verify every entry of one or more catalogue files.
    Verify {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Construct a verified design of order N.
    Construct {
        #[command(flatten)]
        theta: ThetaArgs,
        #[arg(long)]
        n: u64,
        /// Print the construction plan.
        #[arg(long)]
        explain: bool,
        /// Write the design to FILE in catalogue format instead of stdout.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Print only the summary line.
        #[arg(long, conflicts_with = "output")]
        summary: bool,
    },
    /// List the orders up to MAX in the spectrum.
    Spectrum {
        #[command(flatten)]
        theta: ThetaArgs,
        #[arg(long, default_value_t = 100)]
        max: u64,
        /// Also construct and verify each listed order.
        #[arg(long)]
        construct: bool,
    },
    /// List the theta graphs with E edges.
    Enumerate { e: u32 },
    /// Search for base blocks under a cyclic action.
    Search {
        #[command(flatten)]
        theta: ThetaArgs,
        /// Host graph, e.g. K21 or K(5,10).
        #[arg(long)]
        host: String,
        /// Action, e.g. "+1 mod 21" or "identity".
        #[arg(long)]
        act: String,
        /// Base blocks developed through the full orbit.
        #[arg(long)]
        developed: usize,
        /// Base blocks used once.
        #[arg(long, default_value_t = 0)]
        fixed: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        restarts: Option<u32>,
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Inspect the catalogue.
    Catalogue {
        #[command(subcommand)]
        action: CatalogueCommand,
    },
}

#[derive(Subcommand)]
enum CatalogueCommand {
    /// One line per entry.
    List {
        /// Only entries with this many edges.
        #[arg(long)]
        e: Option<u32>,
    },
    /// Print entries in catalogue format.
    Export {
        #[arg(long)]
        e: Option<u32>,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            message: message.into(),
        }
    }
}

impl From<ConstructError> for Failure {
    fn from(e: ConstructError) -> Self {
        let code = match e {
            ConstructError::NotInSpectrum { .. } => NOT_IN_SPECTRUM,
            ConstructError::IngredientMissing(_) | ConstructError::PlanningFailure { .. } => MISSING,
            ConstructError::VerificationFailure(_) => REJECTED,
            ConstructError::Unsupported(_) => USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

struct Session {
    format: Format,
    verbose: bool,
    ctx: Context,
}

impl Session {
    fn emit(&self, text: impl FnOnce() -> String, value: impl FnOnce() -> Value) {
        match self.format {
            Format::Text => print!("{}", text()),
            Format::Json => {
                let mut v = value();
                v["schema"] = json!(1);
                println!("{v}");
            }
        }
    }

    fn log(&self, msg: &str) {
        if self.verbose {
            eprintln!("{msg}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    let code = match run(cli) {
        Ok(code) => code,
        Err(f) => {
            match format {
                Format::Text => eprintln!("error: {}", f.message),
                Format::Json => println!("{}", json!({"schema": 1, "error": f.message, "exit": f.code})),
            }
            f.code
        }
    };
    ExitCode::from(code)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let cache = if cli.no_cache {
        None
    } else {
        cli.cache_dir.clone().or_else(default_cache_dir)
    };
    let mut ctx = Context::new(cache);
    ctx.jobs = cli.jobs;
    let mut extra = Vec::new();
    for path in &cli.catalogues {
        extra.extend(read_catalogue(path)?);
    }
    ctx.extend_catalogue(extra);
    let s = Session {
        format: cli.format,
        verbose: cli.verbose,
        ctx,
    };
    match cli.command {
        Command::Verify { paths } => cmd_verify(&s, &paths),
        Command::Construct {
            theta,
            n,
            explain,
            output,
            summary,
        } => cmd_construct(&s, theta.theta()?, n, explain, output.as_deref(), summary),
        Command::Spectrum { theta, max, construct } => cmd_spectrum(&s, theta.theta()?, max, construct),
        Command::Enumerate { e } => cmd_enumerate(&s, e),
        Command::Search {
            theta,
            host,
            act,
            developed,
            fixed,
            seed,
            restarts,
            steps,
        } => {
            let host = parse_host(&host)?;
            let action = parse_action(&act, host.order())?;
            let mut p = SearchProblem::new(theta.theta()?, host, action, developed, fixed);
            let default = Budget::default();
            p.budget = Budget {
                restarts: restarts.unwrap_or(default.restarts),
                steps: steps.unwrap_or(default.steps),
            };
            if let Some(seed) = seed {
                p.seed = seed;
            }
            p.jobs = s.ctx.jobs;
            cmd_search(&s, &p)
        }
        Command::Catalogue { action } => match action {
            CatalogueCommand::List { e } => cmd_catalogue_list(&s, e),
            CatalogueCommand::Export { e, output } => cmd_catalogue_export(&s, e, output.as_deref()),
        },
    }
}

fn read_catalogue(path: &Path) -> Result<Vec<CatalogueEntry>, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    parse_catalogue(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn blocks_json(d: &Decomposition) -> Result<Value, Failure> {
    let blocks = theta_design::develop(d).map_err(|e| Failure::usage(e.to_string()))?;
    Ok(Value::Array(blocks.iter().map(|b| json!(b.vertices())).collect()))
}

fn cmd_verify(s: &Session, paths: &[PathBuf]) -> Result<u8, Failure> {
    let mut files = Vec::new();
    for path in paths {
        files.push((path, read_catalogue(path)?));
    }
    let mut total = 0;
    let mut accepted = 0;
    let mut text = String::new();
    let mut rows = Vec::new();
    for (path, entries) in &files {
        for entry in entries {
            let d = &entry.decomposition;
            let cert = verify_decomposition(d);
            total += 1;
            if cert.accepted() {
                accepted += 1;
                text.push_str(&format!("{} {}: accept, {} blocks\n", d.theta, d.host.label(), cert.block_count));
            } else {
                text.push_str(&format!(
                    "{} {} ({}): reject\n{}",
                    d.theta,
                    d.host.label(),
                    path.display(),
                    cert.to_text()
                ));
            }
            rows.push(json!({
                "file": path.display().to_string(),
                "theta": d.theta.to_string(),
                "host": d.host.label(),
                "certificate": cert,
            }));
        }
    }
    text.push_str(&format!("{accepted}/{total} accepted\n"));
    s.emit(
        || text,
        || json!({"command": "verify", "accepted": accepted, "total": total, "entries": rows}),
    );
    Ok(if accepted == total { OK } else { REJECTED })
}

fn cmd_construct(
    s: &Session,
    theta: ThetaGraph,
    n: u64,
    explain: bool,
    output: Option<&Path>,
    summary: bool,
) -> Result<u8, Failure> {
    let p = plan(&s.ctx, &theta, n)?;
    s.log(&format!("planned {theta} order {n}: {}", p.step));
    let d = execute(&s.ctx, &p)?;
    let cert = verify_decomposition(&d);
    let entry = CatalogueEntry {
        decomposition: d.clone(),
        source: format!("construct {}", p.step),
    };
    if let Some(path) = output {
        write_file(path, &serialize(std::slice::from_ref(&entry)))?;
    }
    let blocks = if s.format == Format::Json && !summary && output.is_none() {
        Some(blocks_json(&d)?)
    } else {
        None
    };
    s.emit(
        || {
            let mut t = String::new();
            if explain {
                t.push_str(&p.explain());
            }
            t.push_str(&format!(
                "{theta} order {n}: {} blocks, {}\n",
                cert.block_count,
                if cert.accepted() { "verified" } else { "REJECTED" }
            ));
            if !summary && output.is_none() {
                t.push_str(&serialize(std::slice::from_ref(&entry)));
            }
            t
        },
        || {
            let mut v = json!({
                "command": "construct",
                "theta": theta.to_string(),
                "n": n,
                "step": p.step.to_string(),
                "certificate": cert,
            });
            if explain {
                v["plan"] = json!(p.explain());
            }
            if let Some(b) = blocks {
                v["blocks"] = b;
            }
            v
        },
    );
    Ok(if cert.accepted() { OK } else { REJECTED })
}

fn cmd_spectrum(s: &Session, theta: ThetaGraph, max: u64, construct: bool) -> Result<u8, Failure> {
    let mut orders = Vec::new();
    for n in 0..=max {
        if spectrum_membership(&theta, n).map_err(|e| Failure::usage(e.to_string()))? {
            orders.push(n);
        }
    }
    let mut failed = Vec::new();
    if construct {
        for &n in &orders {
            s.log(&format!("constructing order {n}"));
            if let Err(e) = execute(&s.ctx, &plan(&s.ctx, &theta, n)?) {
                failed.push((n, e.to_string()));
            }
        }
    }
    let list: Vec<String> = orders.iter().map(u64::to_string).collect();
    s.emit(
        || {
            let mut t = format!("{theta}: {} orders up to {max}\n{}\n", orders.len(), list.join(" "));
            if construct {
                t.push_str(&format!("constructed {}/{}\n", orders.len() - failed.len(), orders.len()));
            }
            for (n, e) in &failed {
                t.push_str(&format!("order {n}: {e}\n"));
            }
            t
        },
        || {
            let failed: Vec<Value> = failed.iter().map(|(n, e)| json!({"n": n, "error": e})).collect();
            json!({"command": "spectrum", "theta": theta.to_string(), "max": max, "orders": orders, "failed": failed})
        },
    );
    Ok(if failed.is_empty() { OK } else { MISSING })
}

fn cmd_enumerate(s: &Session, e: u32) -> Result<u8, Failure> {
    let thetas = enumerate_thetas(e);
    let bipartite = thetas.iter().filter(|t| t.is_bipartite()).count();
    debug_assert_eq!(thetas.len() as u64, theta_count_formula(e));
    s.emit(
        || {
            let mut t = String::new();
            for th in &thetas {
                t.push_str(&format!("{th}{}\n", if th.is_bipartite() { " bipartite" } else { "" }));
            }
            t.push_str(&format!("{} graphs, {bipartite} bipartite\n", thetas.len()));
            t
        },
        || {
            let list: Vec<Value> = thetas
                .iter()
                .map(|t| json!({"theta": t.to_string(), "bipartite": t.is_bipartite()}))
                .collect();
            json!({"command": "enumerate", "e": e, "count": thetas.len(), "bipartite": bipartite, "thetas": list})
        },
    );
    Ok(OK)
}

fn cmd_search(s: &Session, p: &SearchProblem) -> Result<u8, Failure> {
    let d = match search(p) {
        Ok(d) => d,
        Err(e @ SearchError::InfeasibleArity(_)) => return Err(Failure::usage(e.to_string())),
        Err(e) => {
            return Err(Failure {
                code: MISSING,
                message: e.to_string(),
            })
        }
    };
    let entry = CatalogueEntry {
        decomposition: d.clone(),
        source: format!("search seed={} budget={}x{}", p.seed, p.budget.restarts, p.budget.steps),
    };
    s.ctx
        .record_derived(entry.clone())
        .map_err(|e| Failure::usage(e.to_string()))?;
    let cert = verify_decomposition(&d);
    s.emit(
        || serialize(std::slice::from_ref(&entry)),
        || {
            let base: Vec<Value> = d.base_blocks.iter().map(|b| json!(b.vertices())).collect();
            json!({
                "command": "search",
                "theta": d.theta.to_string(),
                "host": d.host.label(),
                "action": d.action.to_string(),
                "seed": p.seed,
                "base_blocks": base,
                "certificate": cert,
            })
        },
    );
    Ok(OK)
}

fn selected(s: &Session, e: Option<u32>) -> Vec<CatalogueEntry> {
    s.ctx
        .catalogue()
        .entries()
        .iter()
        .filter(|x| e.is_none_or(|e| x.theta().edge_count() == e))
        .cloned()
        .collect()
}

fn cmd_catalogue_list(s: &Session, e: Option<u32>) -> Result<u8, Failure> {
    let entries = selected(s, e);
    s.emit(
        || {
            let mut t = String::new();
            for x in &entries {
                t.push_str(&format!(
                    "{} {} {} blocks ({})\n",
                    x.theta(),
                    x.host().label(),
                    x.decomposition.expanded_len(),
                    x.source
                ));
            }
            t.push_str(&format!("{} entries\n", entries.len()));
            t
        },
        || {
            let list: Vec<Value> = entries
                .iter()
                .map(|x| {
                    json!({
                        "theta": x.theta().to_string(),
                        "host": x.host().label(),
                        "blocks": x.decomposition.expanded_len(),
                        "source": x.source,
                    })
                })
                .collect();
            json!({"command": "catalogue list", "count": entries.len(), "entries": list})
        },
    );
    Ok(OK)
}

fn cmd_catalogue_export(s: &Session, e: Option<u32>, output: Option<&Path>) -> Result<u8, Failure> {
    let text = serialize(&selected(s, e));
    match output {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(OK)
}

/// `K21`, `K(21)` or `K(5,10)`; multipartite parts are consecutive runs.
fn parse_host(text: &str) -> Result<HostGraph, Failure> {
    let bad = || Failure::usage(format!("bad host {text:?}; expected K21 or K(5,10)"));
    let inner = text.trim().strip_prefix('K').ok_or_else(bad)?;
    let inner = inner
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .unwrap_or(inner);
    let sizes: Vec<u32> = inner
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    match sizes[..] {
        [n] => Ok(HostGraph::complete(n)),
        _ if sizes.len() >= 2 => Ok(HostGraph::multipartite_contiguous(&sizes)),
        _ => Err(bad()),
    }
}

/// `identity` or `+s mod m`; points from `m` to the host order are fixed.
fn parse_action(text: &str, order: u32) -> Result<GroupAction, Failure> {
    let bad = || Failure::usage(format!("bad action {text:?}; expected \"+s mod m\" or \"identity\""));
    let t = text.trim();
    if t == "identity" {
        return Ok(GroupAction::identity(order));
    }
    let (step, modulus) = t.strip_prefix('+').and_then(|r| r.split_once("mod")).ok_or_else(bad)?;
    let step: u32 = step.trim().parse().map_err(|_| bad())?;
    let modulus: u32 = modulus.trim().parse().map_err(|_| bad())?;
    if modulus == 0 || modulus > order {
        return Err(bad());
    }
    GroupAction::cyclic(modulus, step, order - modulus).map_err(|e| Failure::usage(e.to_string()))
}
