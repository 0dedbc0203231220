//! Command-line front end. Exit codes: 0 ok / witness found, 1 violation /
//! no witness, 2 usage or input error.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::characterization::{
    classify_configuration, is_n_discerning_capped, is_n_recording_capped, verify_discerning,
    verify_recording, ConfigClassification, Witness, DEFAULT_SEARCH_CAP,
};
use crate::execution::{parse_schedule, run, within_budget, BudgetSpec, Configuration};
use crate::explorer::{
    check_consensus, check_consensus_all_inputs, find_critical, valency_from, ExploreBounds,
    Origin, Verdict, DEFAULT_LIVENESS_CAP, DEFAULT_MAX_CRASHES, DEFAULT_MAX_EVENTS,
    DEFAULT_STATE_CAP,
};
use crate::protocol::{Bit, BuiltinProtocol, ProtocolInstance};
use crate::types::{builtin, ObjectType, TnnParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "rcons",
    version,
    about = "Crash-recovery consensus model checker"
)]
pub struct Cli {
    /// Machine-readable JSON on standard output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a JSON type definition.
    TypeValidate { file: PathBuf },
    /// Decide discerning / recording / readable for a type.
    TypeCheck(TypeCheckArgs),
    /// Write a builtin type as a canonical JSON definition.
    ZooMake {
        /// tnn:n,n' | register:k | tas | cas:k
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one schedule and print its trace.
    Simulate {
        #[command(flatten)]
        proto: ProtocolArgs,
        /// Comma-separated events, e.g. p0,p1,c1,p0
        #[arg(long, default_value = "")]
        schedule: String,
    },
    /// Exhaustively check agreement, validity and bounded liveness.
    Verify {
        #[command(flatten)]
        proto: ProtocolArgs,
        #[command(flatten)]
        bounds: BoundsArgs,
    },
    /// Valency of the configuration reached by a schedule prefix.
    Valency {
        #[command(flatten)]
        proto: ProtocolArgs,
        #[arg(long, default_value = "")]
        prefix: String,
        #[command(flatten)]
        bounds: BoundsArgs,
    },
    /// Search for a critical execution and classify it.
    Critical {
        #[command(flatten)]
        proto: ProtocolArgs,
        #[command(flatten)]
        bounds: BoundsArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PropertyArg {
    Discerning,
    Recording,
    Readable,
}

#[derive(Debug, Args)]
pub struct TypeCheckArgs {
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    pub file: Option<PathBuf>,
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long, value_enum)]
    pub property: PropertyArg,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Refuse searches larger than this many elementary applications.
    #[arg(long, default_value_t = DEFAULT_SEARCH_CAP)]
    pub cap: u128,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    /// wait-free-tnn | recoverable-tnn
    #[arg(long)]
    pub protocol: String,
    /// n,n'
    #[arg(long)]
    pub tnn: String,
    /// Process count; defaults to n (wait-free) or n' (recoverable).
    #[arg(long)]
    pub procs: Option<usize>,
    /// Comma-separated binary inputs. `verify` checks every vector when omitted;
    /// other commands default to alternating 0,1,0,...
    #[arg(long)]
    pub inputs: Option<String>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = DEFAULT_MAX_EVENTS)]
    pub max_events: usize,
    /// Crashes allowed per process.
    #[arg(long, default_value_t = DEFAULT_MAX_CRASHES)]
    pub crashes: u32,
    #[arg(long, default_value_t = 1)]
    pub z: u32,
    #[arg(long, default_value_t = DEFAULT_LIVENESS_CAP)]
    pub liveness_cap: usize,
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    pub state_cap: usize,
    #[arg(long, env = "RCONS_WORKERS")]
    pub workers: Option<usize>,
}

impl BoundsArgs {
    fn bounds(&self) -> ExploreBounds {
        ExploreBounds {
            max_events: self.max_events,
            max_crashes_per_process: self.crashes,
            budget: BudgetSpec::e_star(self.z),
            liveness_cap: self.liveness_cap,
            state_cap: self.state_cap,
            workers: self.workers,
        }
    }
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<(i32, String), Failure>;

fn parse_tnn(text: &str) -> Result<TnnParams, Failure> {
    let (n, np) = text
        .split_once(',')
        .ok_or_else(|| Failure(format!("--tnn expects n,n' but got `{text}`")))?;
    Ok(TnnParams::new(n.trim().parse()?, np.trim().parse()?)?)
}

fn parse_inputs(text: &str) -> Result<Vec<Bit>, Failure> {
    text.split(',')
        .map(|t| match t.trim() {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(Failure(format!("input `{other}` is not 0 or 1"))),
        })
        .collect()
}

impl ProtocolArgs {
    fn build(&self, all_inputs_default: bool) -> Result<(Arc<ProtocolInstance>, bool), Failure> {
        let proto = BuiltinProtocol::parse(&self.protocol)
            .ok_or_else(|| Failure(format!("unknown protocol `{}`", self.protocol)))?;
        let params = parse_tnn(&self.tnn)?;
        let procs = self.procs.unwrap_or(match proto {
            BuiltinProtocol::WaitFreeTnn => params.n,
            BuiltinProtocol::RecoverableTnn => params.n_prime,
        });
        let (inputs, explicit) = match &self.inputs {
            Some(text) => (parse_inputs(text)?, true),
            None => ((0..procs).map(|i| (i % 2) as Bit).collect(), false),
        };
        if inputs.len() != procs {
            return Err(Failure(format!(
                "{} inputs for {procs} processes",
                inputs.len()
            )));
        }
        Ok((
            proto.instantiate(params, inputs)?,
            !explicit && all_inputs_default,
        ))
    }
}

fn load_type(path: &PathBuf) -> Result<ObjectType, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    ObjectType::from_json(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCheckReport {
    #[serde(rename = "type")]
    pub type_name: String,
    pub property: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verified: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readable_op: Option<String>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalJson {
    pub critical: Option<crate::explorer::CriticalReport>,
    pub classification: Option<ConfigClassification>,
}

fn type_check(args: &TypeCheckArgs, as_json: bool) -> Outcome {
    let ty = match (&args.file, &args.builtin) {
        (Some(f), _) => load_type(f)?,
        (None, Some(b)) => builtin(b)?,
        (None, None) => return Err(Failure("one of --file or --builtin is required".into())),
    };
    let report = match args.property {
        PropertyArg::Readable => {
            let op = ty.is_readable().map(str::to_string);
            TypeCheckReport {
                type_name: ty.name().to_string(),
                property: "readable".into(),
                n: None,
                witness: None,
                verified: None,
                holds: op.is_some(),
                readable_op: op,
            }
        }
        PropertyArg::Discerning | PropertyArg::Recording => {
            let recording = args.property == PropertyArg::Recording;
            let witness = if recording {
                is_n_recording_capped(&ty, args.n, args.cap)?
            } else {
                is_n_discerning_capped(&ty, args.n, args.cap)?
            };
            let verified = match &witness {
                Some(w) if recording => Some(verify_recording(&ty, w)?),
                Some(w) => Some(verify_discerning(&ty, w)?),
                None => None,
            };
            TypeCheckReport {
                type_name: ty.name().to_string(),
                property: if recording { "recording" } else { "discerning" }.into(),
                n: Some(args.n),
                holds: witness.is_some(),
                witness,
                verified,
                readable_op: None,
            }
        }
    };
    let code = if report.holds { EXIT_OK } else { EXIT_NEGATIVE };
    let text = if as_json {
        serde_json::to_string_pretty(&report)?
    } else {
        match (&report.witness, &report.readable_op) {
            (Some(w), _) => format!(
                "{} is {}-{}: u={} T0={:?} T1={:?} ops={:?} (re-verified: {})",
                report.type_name,
                args.n,
                report.property,
                w.u,
                w.team0,
                w.team1,
                w.ops,
                report.verified.unwrap_or(false)
            ),
            (None, Some(op)) => format!("{} is readable via {op}", report.type_name),
            (None, None) => "none".to_string(),
        }
    };
    Ok((code, text))
}

fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::Ok { states } => format!("ok ({states} states)"),
        Verdict::Inconclusive { frontier, states } => {
            format!("inconclusive: {frontier} frontier nodes unexplored ({states} states)")
        }
        Verdict::Violation(viol) => format!(
            "violation: {:?}\ninputs: {:?}\n{}",
            viol.kind,
            viol.trace.start().instance().inputs,
            viol.trace.trace_text()
        ),
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    let as_json = cli.json;
    match &cli.command {
        Command::TypeValidate { file } => {
            let ty = load_type(file)?;
            let text = if as_json {
                ty.to_json()
            } else {
                format!(
                    "ok: {} ({} values, {} operations, {} responses)",
                    ty.name(),
                    ty.values().len(),
                    ty.operations().len(),
                    ty.responses().len()
                )
            };
            Ok((EXIT_OK, text))
        }
        Command::TypeCheck(args) => type_check(args, as_json),
        Command::ZooMake { name, out } => {
            let ty = builtin(name)?;
            let text = ty.to_json();
            match out {
                Some(path) => {
                    std::fs::write(path, format!("{text}\n"))?;
                    Ok((EXIT_OK, format!("wrote {}", path.display())))
                }
                None => Ok((EXIT_OK, text)),
            }
        }
        Command::Simulate { proto, schedule } => {
            let (inst, _) = proto.build(false)?;
            let events = parse_schedule(schedule)?;
            let ex = run(&Configuration::initial(&inst), &events)?;
            let text = if as_json {
                serde_json::to_string_pretty(&json!({
                    "inputs": inst.inputs,
                    "trace": ex.trace(),
                    "in_budget": within_budget(&ex, BudgetSpec::e_star(1)),
                }))?
            } else {
                let mut t = ex.trace_text();
                for d in ex.decisions() {
                    t.push_str(&format!(
                        "decided p{} = {} at event {}\n",
                        d.process, d.value, d.event
                    ));
                }
                t.trim_end().to_string()
            };
            Ok((EXIT_OK, text))
        }
        Command::Verify { proto, bounds } => {
            let (inst, every_input) = proto.build(true)?;
            let b = bounds.bounds();
            let verdict = if every_input {
                check_consensus_all_inputs(&inst, &b)?
            } else {
                check_consensus(&inst, &b)?
            };
            let code = if verdict.is_ok() {
                EXIT_OK
            } else {
                EXIT_NEGATIVE
            };
            let text = if as_json {
                serde_json::to_string_pretty(&verdict.report())?
            } else {
                verdict_text(&verdict).trim_end().to_string()
            };
            Ok((code, text))
        }
        Command::Valency {
            proto,
            prefix,
            bounds,
        } => {
            let (inst, _) = proto.build(false)?;
            let b = bounds.bounds();
            let events = parse_schedule(prefix)?;
            let ex = run(&Configuration::initial(&inst), &events)?;
            if !within_budget(&ex, b.budget) {
                return Err(Failure(format!(
                    "prefix `{prefix}` is outside the crash budget"
                )));
            }
            let report = valency_from(&Origin::after(&ex), None, &b)?;
            let text = if as_json {
                serde_json::to_string_pretty(&report.report())?
            } else {
                format!("{:?} ({} states)", report.verdict, report.states)
            };
            Ok((EXIT_OK, text))
        }
        Command::Critical { proto, bounds } => {
            let (inst, _) = proto.build(false)?;
            let crit = find_critical(&Configuration::initial(&inst), &bounds.bounds())?;
            let classification = match &crit {
                Some(c) => match (c.common_object(), c.poised_ops()) {
                    (Some(obj), Some(ops)) => Some(classify_configuration(
                        c.execution.last(),
                        obj,
                        (&c.team0, &c.team1),
                        &ops,
                    )?),
                    _ => None,
                },
                None => None,
            };
            let code = if crit.is_some() {
                EXIT_OK
            } else {
                EXIT_NEGATIVE
            };
            let text = if as_json {
                serde_json::to_string_pretty(&CriticalJson {
                    critical: crit.as_ref().map(|c| c.report()),
                    classification,
                })?
            } else {
                match &crit {
                    Some(c) => format!(
                        "critical after {} events: {}\nteam0={:?} team1={:?}\nclassification: {:?}",
                        c.execution.len(),
                        crate::execution::format_schedule(c.execution.events()),
                        c.team0,
                        c.team1,
                        classification.map(|k| k.labels)
                    ),
                    None => "none".into(),
                }
            };
            Ok((code, text))
        }
    }
}

/// Parses `args` (including the program name) and runs the command, writing
/// the report to `out` and errors to `err`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if code == EXIT_OK {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    match dispatch(&cli) {
        Ok((code, text)) => {
            let _ = writeln!(out, "{text}");
            code
        }
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}
