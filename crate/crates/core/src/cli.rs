//! Command-line front end.
//!
//! Exit codes: 0 success, 1 an activity without candidates or an unbound
//! activity, 2 invalid input, 3 internal failure.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::binder::{self, BindError, SelectError};
use crate::format_score;
use crate::matcher::{
    self, DiscoveryConfig, MatchConfig, MatchError, Stage, StageRecord, Verdict, Weights, DEFAULT_POLICY_WEIGHT,
    DEFAULT_TAU,
};
use crate::model::{self, ProcessDocument};
use crate::ontology::{load_ontology, Ontology};
use crate::policy::{self, DEFAULT_ASSERTION_TAU};
use crate::registry::{self, ServiceDescription};
use crate::report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNMATCHED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "procbind", version, about = "Discover and bind Web services for abstract business processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a process document and list every violation.
    Validate {
        #[arg(long)]
        process: PathBuf,
    },
    /// Rank registry services for every abstract activity.
    Discover {
        #[arg(long)]
        process: PathBuf,
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        ontology: PathBuf,
        #[command(flatten)]
        scoring: Scoring,
        /// Ignore policies; every candidate gets policy score 1.
        #[arg(long)]
        ignore_policy: bool,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Matching threads; output does not depend on it.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Bind the abstract invokes of a process to ranked candidates of a report.
    Bind {
        #[arg(long)]
        process: PathBuf,
        /// Discovery report produced by `discover`.
        matches: PathBuf,
        #[arg(long, default_value_t = 1)]
        rank: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the abstract BPEL document of a process.
    Abstract {
        #[arg(long)]
        process: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show the stage-by-stage match of one activity against one service.
    Explain {
        #[arg(long)]
        process: PathBuf,
        #[arg(long)]
        ontology: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: u32,
        #[arg(long, default_value_t = DEFAULT_ASSERTION_TAU)]
        assertion_tau: u32,
        /// Id of an abstract activity of the process.
        activity: String,
        /// Service description file.
        service: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Scoring {
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: u32,
    /// Stage weights d,f,i,o summing to 1.
    #[arg(long, default_value = "0.2,0.4,0.2,0.2")]
    weights: Weights,
    #[arg(long, default_value_t = DEFAULT_POLICY_WEIGHT)]
    policy_weight: f64,
    #[arg(long, default_value_t = DEFAULT_ASSERTION_TAU)]
    assertion_tau: u32,
}

/// Failure carrying its exit code and a message for stderr.
struct Failure {
    code: i32,
    message: String,
}

fn input(message: impl Display) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.to_string(),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_process(path: &Path) -> Result<ProcessDocument, Failure> {
    model::parse_process(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_onto(path: &Path) -> Result<Ontology, Failure> {
    load_ontology(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    let result = match out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    result.map_err(|message| Failure {
        code: EXIT_INTERNAL,
        message,
    })
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Validate { process } => validate(&process, stdout, stderr),
        Command::Discover {
            process,
            registry,
            ontology,
            scoring,
            ignore_policy,
            out,
            jobs,
        } => {
            let config = DiscoveryConfig {
                matching: MatchConfig {
                    tau: scoring.tau,
                    weights: scoring.weights,
                    full_evaluation: false,
                },
                policy_weight: scoring.policy_weight,
                assertion_tau: scoring.assertion_tau,
                ignore_policy,
                jobs,
            };
            discover(&process, &registry, &ontology, &config, out.as_deref(), stdout, stderr)
        }
        Command::Bind {
            process,
            matches,
            rank,
            out,
        } => bind(&process, &matches, rank, out.as_deref(), stdout),
        Command::Abstract { process, out } => abstract_bpel(&process, out.as_deref(), stdout),
        Command::Explain {
            process,
            ontology,
            tau,
            assertion_tau,
            activity,
            service,
        } => explain(&process, &ontology, tau, assertion_tau, &activity, &service, stdout),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn validate(path: &Path, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let (doc, warnings) =
        model::parse_process_unchecked(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let violations = model::validate_process(&doc);
    for w in &warnings {
        let _ = writeln!(stderr, "warning: {}: {}", w.path, w.message);
    }
    let mut text = String::new();
    if violations.is_empty() {
        text.push_str("OK\n");
    }
    for v in &violations {
        text.push_str(&format!("{v}\n"));
    }
    emit(None, &text, stdout)?;
    Ok(if violations.is_empty() { EXIT_OK } else { EXIT_INPUT })
}

fn discover(
    process: &Path,
    registry_dir: &Path,
    ontology: &Path,
    config: &DiscoveryConfig,
    out: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    config.validate().map_err(input)?;
    let doc = load_process(process)?;
    let services: Vec<ServiceDescription> = registry::load_registry(registry_dir).map_err(input)?;
    let o = load_onto(ontology)?;
    let report = matcher::discover(&doc, &services, &o, config);
    emit(out, &report::serialize_report(&report), stdout)?;
    let unmatched = report.unmatched();
    if unmatched.is_empty() {
        return Ok(EXIT_OK);
    }
    for a in unmatched {
        let _ = writeln!(stderr, "no candidate for activity `{a}`");
    }
    Ok(EXIT_UNMATCHED)
}

fn bind(process: &Path, matches: &Path, rank: usize, out: Option<&Path>, stdout: &mut dyn Write) -> Result<i32, Failure> {
    if rank == 0 {
        return Err(input("--rank must be at least 1"));
    }
    let doc = load_process(process)?;
    let report = report::parse_report(&read(matches)?).map_err(|e| input(format!("{}: {e}", matches.display())))?;
    if report.process_id != doc.id {
        return Err(input(format!(
            "{}: report is for process `{}`, not `{}`",
            matches.display(),
            report.process_id,
            doc.id
        )));
    }
    let abstract_doc = binder::emit_abstract_bpel(&doc).map_err(|e| Failure {
        code: EXIT_INTERNAL,
        message: e.to_string(),
    })?;
    let selection = binder::select_top(&report, rank).map_err(|e| match e {
        SelectError::NoCandidate { .. } => Failure {
            code: EXIT_UNMATCHED,
            message: e.to_string(),
        },
        SelectError::InvalidRank => input(e),
    })?;
    let bound = binder::bind(&abstract_doc, &selection).map_err(|e| match e {
        BindError::UnboundActivity(_) => Failure {
            code: EXIT_UNMATCHED,
            message: e.to_string(),
        },
        BindError::AlreadyBound | BindError::UnknownActivity(_) => input(e),
    })?;
    emit(out, &binder::serialize_bpel(&bound), stdout)?;
    Ok(EXIT_OK)
}

fn abstract_bpel(process: &Path, out: Option<&Path>, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let doc = load_process(process)?;
    let b = binder::emit_abstract_bpel(&doc).map_err(|e| Failure {
        code: EXIT_INTERNAL,
        message: e.to_string(),
    })?;
    emit(out, &binder::serialize_bpel(&b), stdout)?;
    Ok(EXIT_OK)
}

fn explain(
    process: &Path,
    ontology: &Path,
    tau: u32,
    assertion_tau: u32,
    activity_id: &str,
    service_path: &Path,
    stdout: &mut dyn Write,
) -> Result<i32, Failure> {
    let doc = load_process(process)?;
    let o = load_onto(ontology)?;
    let service =
        registry::parse_service(&read(service_path)?).map_err(|e| input(format!("{}: {e}", service_path.display())))?;
    let scoped = doc
        .find_activity(activity_id)
        .filter(|s| s.activity.is_abstract())
        .ok_or_else(|| input(format!("`{activity_id}` is not an abstract activity of `{}`", doc.id)))?;
    let config = MatchConfig {
        tau,
        ..MatchConfig::default()
    };

    let mut text = format!(
        "activity {activity_id}\nservice {} (interface {})\ntau {tau}\n",
        service.id, service.interface_name
    );
    let m = match matcher::match_activity(scoped.activity, &scoped.process.types, &service, &o, &config) {
        Ok(m) => m,
        Err(e @ MatchError::Arity { .. }) => {
            text.push_str(&format!("error {e}\n"));
            emit(None, &text, stdout)?;
            return Ok(EXIT_OK);
        }
        Err(e) => return Err(input(e)),
    };
    let traces: Vec<(Option<&str>, &matcher::MatchTrace, Option<&matcher::CandidateMatch>)> = if let Some(f) =
        m.failures.iter().find(|f| f.operation.is_none())
    {
        vec![(None, &f.trace, None)]
    } else {
        service
            .operations
            .iter()
            .filter_map(|op| {
                let name = op.name.as_str();
                m.candidates
                    .iter()
                    .find(|c| c.operation_name == name)
                    .map(|c| (Some(name), &c.trace, Some(c)))
                    .or_else(|| {
                        m.failures
                            .iter()
                            .find(|f| f.operation.as_deref() == Some(name))
                            .map(|f| (Some(name), &f.trace, None))
                    })
            })
            .collect()
    };
    if let Some((_, first, _)) = traces.first() {
        text.push_str(&stage_lines(&first.stages[0], ""));
    } else {
        text.push_str("no operations\n");
    }
    for (op, trace, cand) in &traces {
        let indent = if op.is_some() { "  " } else { "" };
        if let Some(op) = op {
            text.push_str(&format!("operation {op}\n"));
        }
        for s in &trace.stages[1..] {
            text.push_str(&stage_lines(s, indent));
        }
        if let Some(c) = cand {
            let policy = policy::policy_satisfaction(
                scoped.activity.policy.as_ref(),
                service.policy.as_ref(),
                &o,
                assertion_tau,
            );
            text.push_str(&format!("{indent}functionalScore {}\n", format_score(c.functional_score)));
            text.push_str(&format!("{indent}policy {policy}\n"));
            match matcher::total_score(c.functional_score, policy, DEFAULT_POLICY_WEIGHT) {
                Some(t) => text.push_str(&format!("{indent}totalScore {}\n", format_score(t))),
                None => text.push_str(&format!("{indent}rejected policy\n")),
            }
        }
    }
    emit(None, &text, stdout)?;
    Ok(EXIT_OK)
}

fn stage_lines(s: &StageRecord, indent: &str) -> String {
    let number = Stage::ORDER.iter().position(|x| *x == s.stage).unwrap_or(0) + 1;
    let mut line = format!("{indent}stage {number} {}: {}", s.stage.as_str(), s.verdict.as_str());
    if let Some(sim) = s.similarity {
        line.push_str(&format!(" similarity {}", format_score(sim)));
    }
    if let Some(note) = &s.note {
        line.push_str(&format!(" ({note})"));
    }
    line.push('\n');
    if s.verdict != Verdict::Skipped {
        let arrow = matches!(s.stage, Stage::Inputs | Stage::Outputs);
        for c in &s.comparisons {
            line.push_str(&format!(
                "{indent}  {} {} {} distance {} similarity {}\n",
                c.required,
                if arrow { "->" } else { "~" },
                c.provided,
                c.distance,
                format_score(c.similarity)
            ));
        }
    }
    line
}
