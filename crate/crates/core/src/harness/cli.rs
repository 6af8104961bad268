use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::exec::{execute, ExecConfig, Mode};
use crate::program::{parse_program, validate_program, Program};
use crate::solver::{BackendRegistry, Instrumented, SolverBackend};
use crate::templates::{build_templates, detect_candidate_parts, DetectorLimits, TemplateFailure, TemplateSet};

use super::config::Config;
use super::diff::{differential_check, DiffConfig};
use super::export::{export_dot, export_json};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cse", version, about = "Compact symbolic execution of CFG programs")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Classic,
    Compact,
}

#[derive(Debug, clap::Args)]
struct SolverArgs {
    /// Solver executable; overrides the configuration and the environment.
    #[arg(long)]
    solver: Option<String>,
    /// Solver backend: external, bounded or auto.
    #[arg(long)]
    backend: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and check a program against the structural rules.
    Validate { file: PathBuf },
    /// Execute a program symbolically.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "compact")]
        mode: ModeArg,
        #[arg(long)]
        budget: Option<usize>,
        /// Stop expanding a path at its N-th visit of a location.
        #[arg(long)]
        visit_bound: Option<u32>,
        /// Write the tree to a `.dot` or `.json` file.
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long)]
        dump_templates: Option<PathBuf>,
        /// Write every solver query to this directory.
        #[arg(long)]
        dump_smt: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Template choice strategy: first or random.
        #[arg(long, default_value = "first")]
        choose: String,
        /// Compact mode without any templates.
        #[arg(long)]
        no_detect: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Detect program parts and compute their templates.
    Templates {
        file: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Match classic and compact leaves in both directions.
    Diff {
        file: PathBuf,
        #[arg(long)]
        bound: Option<u32>,
        /// Budget of the classic run.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        compact_budget: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn internal(e: impl std::fmt::Display) -> Failure {
    fail(EXIT_INTERNAL, e.to_string())
}

enum Loaded {
    Ok(Program),
    Invalid(Vec<String>),
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| fail(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))?;
    let p = match parse_program(&text) {
        Ok(p) => p,
        Err(e) => return Ok(Loaded::Invalid(vec![format!("{}: {e}", path.display())])),
    };
    let violations = validate_program(&p);
    if violations.is_empty() {
        Ok(Loaded::Ok(p))
    } else {
        Ok(Loaded::Invalid(violations.iter().map(|v| format!("{}: {v}", path.display())).collect()))
    }
}

fn load_valid(path: &Path) -> Result<Program, Failure> {
    match load(path)? {
        Loaded::Ok(p) => Ok(p),
        Loaded::Invalid(msgs) => Err(fail(EXIT_USAGE, msgs.join("\n"))),
    }
}

fn solver_for(cfg: &Config, args: &SolverArgs) -> Result<Box<dyn SolverBackend>, Failure> {
    let mut cfg = cfg.clone();
    if let Some(path) = &args.solver {
        cfg.solver.path = path.clone();
    }
    let backend = args.backend.clone().unwrap_or(cfg.solver.backend.clone());
    BackendRegistry::default()
        .create(&backend, &cfg.solver_config())
        .map_err(|e| fail(EXIT_USAGE, e.to_string()))
}

fn compute_templates(p: &Program, solver: &mut dyn SolverBackend) -> (TemplateSet, Vec<TemplateFailure>) {
    let parts = detect_candidate_parts(p, &DetectorLimits::default());
    build_templates(p, &parts, solver)
}

fn render_failures(p: &Program, failures: &[TemplateFailure]) -> String {
    failures
        .iter()
        .map(|f| format!("no template for {}: {:?}\n", f.part.describe(p), f.reason))
        .collect()
}

fn write(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(internal)
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = Config::load(cli.config.as_deref()).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    match cli.command {
        Command::Validate { file } => match load(&file)? {
            Loaded::Ok(p) => {
                write(out, &format!("{}: ok ({} functions)\n", file.display(), p.functions.len()))?;
                Ok(EXIT_OK)
            }
            Loaded::Invalid(msgs) => {
                write(out, &(msgs.join("\n") + "\n"))?;
                Ok(EXIT_CHECK_FAILED)
            }
        },
        Command::Templates { file, solver } => {
            let p = load_valid(&file)?;
            let mut s = solver_for(&cfg, &solver)?;
            let (set, failures) = compute_templates(&p, s.as_mut());
            write(out, &format!("{} templates\n", set.len()))?;
            if !set.is_empty() {
                write(out, &(set.render(&p) + "\n"))?;
            }
            write(out, &render_failures(&p, &failures))?;
            Ok(EXIT_OK)
        }
        Command::Run {
            file,
            mode,
            budget,
            visit_bound,
            tree,
            dump_templates,
            dump_smt,
            seed,
            choose,
            no_detect,
            solver,
        } => {
            let p = load_valid(&file)?;
            let tree_format = match &tree {
                None => None,
                Some(t) => match t.extension().and_then(|e| e.to_str()) {
                    Some("dot") => Some("dot"),
                    Some("json") => Some("json"),
                    _ => return Err(fail(EXIT_USAGE, "--tree needs a .dot or .json file name")),
                },
            };
            let mut s: Box<dyn SolverBackend> = solver_for(&cfg, &solver)?;
            if let Some(dir) = dump_smt {
                s = Box::new(Instrumented::new(s).dumping_to(dir));
            }
            let mode = match mode {
                ModeArg::Classic => Mode::Classic,
                ModeArg::Compact => Mode::Compact,
            };
            let (set, failures) = if mode == Mode::Compact && !no_detect {
                compute_templates(&p, s.as_mut())
            } else {
                (TemplateSet::default(), Vec::new())
            };
            if let Some(dir) = dump_templates {
                fs::create_dir_all(&dir).map_err(internal)?;
                let text = set.render(&p) + &render_failures(&p, &failures);
                fs::write(dir.join("templates.txt"), text).map_err(internal)?;
            }
            let exec_cfg = ExecConfig {
                build_tree: tree.is_some(),
                ..ExecConfig::new(mode)
                    .budget(budget.unwrap_or(cfg.run.budget))
                    .visit_bound(visit_bound.or(cfg.run.visit_bound))
                    .chooser(&choose, seed)
            };
            let r = execute(&p, &exec_cfg, &set, s.as_mut()).map_err(|e| match e {
                crate::exec::ExecError::UnknownChooser(_) => fail(EXIT_USAGE, e.to_string()),
                other => internal(other),
            })?;
            let st = &r.stats;
            let mut text = format!(
                "processed {}, vertices {}, final states {}, solver calls {}, unknown {}, cut {}, budget exhausted {}\n",
                st.processed,
                st.vertices,
                r.finals.len(),
                st.solver_calls,
                st.unknown,
                st.cut,
                st.budget_exhausted
            );
            for (id, n) in &st.instantiations {
                text += &format!("template {id} instantiated {n} times\n");
            }
            for s in &r.finals {
                text += &format!("final {} | {} | {}\n", p.qualified_loc(s.loc), s.memory.render(&p), s.pc);
            }
            write(out, &text)?;
            if let (Some(path), Some(t)) = (tree, r.tree.as_ref()) {
                let body = match tree_format {
                    Some("dot") => export_dot(&p, t),
                    _ => export_json(&p, t),
                };
                fs::write(&path, body).map_err(internal)?;
            }
            Ok(EXIT_OK)
        }
        Command::Diff { file, bound, budget, compact_budget, solver } => {
            let p = load_valid(&file)?;
            let mut s = solver_for(&cfg, &solver)?;
            let (set, _) = compute_templates(&p, s.as_mut());
            let dcfg = DiffConfig {
                bound: bound.unwrap_or(cfg.diff.bound),
                classic_budget: budget.unwrap_or(cfg.diff.classic_budget),
                compact_budget: compact_budget.unwrap_or(cfg.diff.compact_budget),
            };
            let report = differential_check(&p, &set, &dcfg, s.as_mut()).map_err(internal)?;
            write(
                out,
                &format!(
                    "{}: {} classic leaves, {} compact leaves, {} valuations matched, {} unmatched classic, {} unmatched compact{}\n",
                    if report.passed() { "pass" } else { "FAIL" },
                    report.classic_leaves,
                    report.compact_leaves,
                    report.complete.len(),
                    report.unmatched_classic.len(),
                    report.unmatched_compact.len(),
                    if report.partial { " (partial trees)" } else { "" }
                ),
            )?;
            for u in &report.unmatched_compact {
                write(out, &format!("unmatched compact leaf {} under {:?}: {}\n", u.compact_leaf, u.valuation, u.reason))?;
            }
            for e in &report.unmatched_classic {
                write(out, &format!("unmatched classic leaf {e}\n"))?;
            }
            Ok(if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}

/// Runs the command line `args` (program name first), writing results to
/// `out` and diagnostics to `err`; returns the process exit code.
pub fn run_cli_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_cli_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}
