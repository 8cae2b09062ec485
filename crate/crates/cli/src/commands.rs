use std::fmt;
use std::fs;
use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use clap::Args;

use vdconf_core::artifact::{read_artifact, write_artifact};
use vdconf_core::cvd::{valid_domains_report, CvdOptions};
use vdconf_core::fuzz::{replay, run_fuzz, FuzzBounds, FuzzConfig, Reproducer};
use vdconf_core::{compile as compile_model, parse_model, CompiledSpace, Session, Status};

#[derive(Debug)]
pub enum CliError {
    /// I/O, parse or compile problems.
    Input(anyhow::Error),
    InvalidAssignment(String),
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Input(_) => 2,
            CliError::InvalidAssignment(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(e) => write!(f, "{e:#}"),
            CliError::InvalidAssignment(m) | CliError::CheckFailed(m) => f.write_str(m),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Input(e)
    }
}

type CliResult = Result<(), CliError>;

fn load(path: &Path) -> Result<CompiledSpace, CliError> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let space = read_artifact(&text).with_context(|| format!("loading {}", path.display()))?;
    Ok(space)
}

pub fn compile(model_path: &Path, output: &Path) -> CliResult {
    let text = fs::read_to_string(model_path)
        .with_context(|| format!("reading {}", model_path.display()))?;
    let model = parse_model(&text).with_context(|| format!("parsing {}", model_path.display()))?;
    let space = compile_model(&model);
    fs::write(output, write_artifact(&space))
        .with_context(|| format!("writing {}", output.display()))?;
    println!("variables: {}", space.model.len());
    println!("boolean variables: {}", space.layout.num_bool_vars());
    println!("nodes: {}", space.node_count());
    println!("solutions: {}", space.sat_count());
    Ok(())
}

fn format_values(space: &CompiledSpace, var: usize, values: impl Iterator<Item = usize>) -> String {
    let domain = &space.model.variables()[var].domain;
    values
        .map(|v| domain.label(v))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn domains(artifact: &Path, assignments: &[String]) -> CliResult {
    let space = Arc::new(load(artifact)?);
    let mut session =
        Session::start(Arc::clone(&space)).map_err(|e| CliError::Input(anyhow::anyhow!("{e}")))?;
    for literal in assignments {
        let (var, value) = space
            .model
            .parse_literal(literal)
            .map_err(|e| CliError::InvalidAssignment(format!("`{literal}`: {e}")))?;
        session
            .assign(var, value)
            .map_err(|e| CliError::InvalidAssignment(format!("`{literal}`: {e}")))?;
    }
    let status = session.status();
    for (var, v) in space.model.variables().iter().enumerate() {
        if session.is_assigned(var) {
            continue;
        }
        println!(
            "{}: {}",
            v.name,
            format_values(&space, var, status.domains[var].iter().copied())
        );
    }
    Ok(())
}

fn print_status(out: &mut impl Write, space: &CompiledSpace, status: &Status) -> io::Result<()> {
    let model = &space.model;
    for (var, v) in model.variables().iter().enumerate() {
        match status.assignments.iter().find(|(a, _)| *a == var) {
            Some(&(_, value)) => writeln!(out, "  {} = {}", v.name, v.domain.label(value))?,
            None => writeln!(
                out,
                "  {}: {}",
                v.name,
                format_values(space, var, status.domains[var].iter().copied())
            )?,
        }
    }
    if !status.forced.is_empty() {
        let forced: Vec<String> = status
            .forced
            .iter()
            .map(|&(var, value)| {
                let v = &model.variables()[var];
                format!("{}={}", v.name, v.domain.label(value))
            })
            .collect();
        writeln!(out, "forced: {}", forced.join(", "))?;
    }
    writeln!(out, "solutions: {}", status.solution_count)
}

pub fn interact(artifact: &Path) -> CliResult {
    let space = Arc::new(load(artifact)?);
    let mut session =
        Session::start(Arc::clone(&space)).map_err(|e| CliError::Input(anyhow::anyhow!("{e}")))?;
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    let mut input = stdin.lock();
    let io_err = |e: io::Error| CliError::Input(e.into());
    print_status(&mut out, &space, &session.status()).map_err(io_err)?;
    loop {
        if let Some(config) = session.resolved_configuration() {
            writeln!(
                out,
                "complete: {}",
                space.model.format_configuration(&config)
            )
            .map_err(io_err)?;
            return Ok(());
        }
        write!(out, "> ").map_err(io_err)?;
        out.flush().map_err(io_err)?;
        let mut line = String::new();
        if input.read_line(&mut line).map_err(io_err)? == 0 {
            writeln!(out).map_err(io_err)?;
            return Ok(());
        }
        let line = line.trim();
        let result = match line {
            "" => continue,
            "quit" | "exit" => return Ok(()),
            "undo" => session.undo(),
            literal => match space.model.parse_literal(literal) {
                Ok((var, value)) => session.assign(var, value),
                Err(e) => {
                    writeln!(out, "cannot parse `{literal}`: {e}").map_err(io_err)?;
                    continue;
                }
            },
        };
        match result {
            Ok(status) => print_status(&mut out, &space, &status).map_err(io_err)?,
            Err(e) => writeln!(out, "rejected: {e}").map_err(io_err)?,
        }
    }
}

pub fn stats(artifact: &Path) -> CliResult {
    let space = load(artifact)?;
    let layout = &space.layout;
    println!("variables: {}", space.model.len());
    println!("boolean variables: {}", layout.num_bool_vars());
    println!("nodes: {}", space.node_count());
    println!("solutions: {}", space.sat_count());
    let report = valid_domains_report(&space.store, layout, space.root, CvdOptions::default());
    println!("variable\t|D|\tbits\t|V|\t|In|\tcertified\tvisits\tbound");
    for (var, v) in space.model.variables().iter().enumerate() {
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            v.name,
            v.domain.size(),
            layout.bits(var),
            report.layer_sizes[var],
            report.in_sizes[var],
            if report.certified.contains(&var) {
                "yes"
            } else {
                "no"
            },
            report.visits[var],
            report.visit_bound(layout, var),
        );
    }
    Ok(())
}

pub fn export_dot(artifact: &Path, output: &Path) -> CliResult {
    let space = load(artifact)?;
    fs::write(output, space.to_dot()).with_context(|| format!("writing {}", output.display()))?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 5)]
    max_vars: usize,
    #[arg(long, default_value_t = 5)]
    max_domain: usize,
    #[arg(long, default_value_t = 4)]
    max_rules: usize,
    /// Random valid partial assignments per model.
    #[arg(long, default_value_t = 3)]
    assignments: usize,
    /// Rule permutations per model for the canonicity check.
    #[arg(long, default_value_t = 20)]
    permutations: usize,
    /// Certify the end layers of merged long-edge segments as well
    /// (a known-wrong variant; the harness should reject it).
    #[arg(long)]
    inject_endpoint_fault: bool,
    /// Where to write the reproducer of the first failure.
    #[arg(long)]
    reproducer: Option<PathBuf>,
    /// Re-run a reproducer file instead of generating models.
    #[arg(long, conflicts_with = "reproducer")]
    replay: Option<PathBuf>,
}

pub fn fuzz(args: &FuzzArgs) -> CliResult {
    if let Some(path) = &args.replay {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let repro: Reproducer =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let failures = replay(&repro).context("replaying")?;
        if failures.is_empty() {
            println!("reproducer passes");
            return Ok(());
        }
        for f in &failures {
            println!("{:?}: {}", f.kind, f.detail);
        }
        return Err(CliError::CheckFailed(format!(
            "{} failures",
            failures.len()
        )));
    }

    let config = FuzzConfig {
        seed: args.seed,
        trials: args.trials,
        bounds: FuzzBounds {
            max_vars: args.max_vars,
            max_domain: args.max_domain,
            max_rules: args.max_rules,
        },
        assignments_per_model: args.assignments,
        permutations: args.permutations,
        cvd: CvdOptions {
            certify_segment_endpoints: args.inject_endpoint_fault,
            ..CvdOptions::default()
        },
    };
    let report = run_fuzz(&config).context("fuzzing")?;
    println!("{} trials", report.trials);
    println!("unsatisfiable models: {}", report.unsatisfiable);
    println!("assignments checked: {}", report.assignments_checked);
    println!("mismatches: {}", report.failures());
    if let Some(repro) = &report.first_failure {
        let json = serde_json::to_string_pretty(repro).expect("reproducer serializes");
        eprintln!("{json}");
        if let Some(path) = &args.reproducer {
            fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?;
        }
        return Err(CliError::CheckFailed(format!(
            "{} failures, first: {:?}",
            report.failures(),
            repro.kind
        )));
    }
    Ok(())
}

pub fn serve(artifact: &Path, host: &str, port: u16, session_ttl: u64) -> CliResult {
    let space = Arc::new(load(artifact)?);
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .with_context(|| format!("bad address {host}:{port}"))?;
    let config = vdconf_server::ServerConfig {
        session_ttl: Duration::from_secs(session_ttl),
        ..Default::default()
    };
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    runtime
        .block_on(vdconf_server::serve(space, addr, config))
        .context("serving")?;
    Ok(())
}
