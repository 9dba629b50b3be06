//! Command-line front end: file formats, DOT export and the subcommand
//! dispatcher.
//!
//! Exit code contract: `0` success / positive verdict, `1` well-formed
//! input with a negative verdict (violations found, sequent invalid,
//! nothing derived), `2` usage or input errors, `3` exhausted search
//! budgets. Every command writes one JSON payload to stdout; diagnostics go
//! to stderr. Identical inputs and seeds produce byte-identical payloads.

pub mod dot;
pub mod json;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use dsmalc_core::calculus::{check_derivation, derive_bounded_with, CalculusConfig, DeriveError};
use dsmalc_core::frames::{
    check_sigma_frame, complex_algebra, eval, falsifying_valuation, duality_check,
};
use dsmalc_core::search::{find_countermodel, soundness_fuzz, SearchBudget, SearchError};
use dsmalc_core::syntax::{parse_formula, parse_sequent};

use json::{
    AlgebraDoc, CountermodelDoc, DerivationDoc, FrameDoc, ModelDoc, SigDoc,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dsmalc", version, about = "Distributive Lambek calculus with subexponentials: checkers, semantics, and countermodel search")]
pub struct Cli {
    /// Worker cap for the library searchers (current searchers are
    /// single-threaded; values above 1 are accepted and recorded).
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a signature file.
    CheckSig {
        #[arg(long)]
        sig: PathBuf,
    },
    /// Parse a formula or sequent and print its canonical form.
    Parse {
        #[arg(long)]
        sig: PathBuf,
        #[arg(long, conflicts_with = "sequent")]
        formula: Option<String>,
        #[arg(long)]
        sequent: Option<String>,
    },
    /// Check a derivation tree node by node.
    CheckDerivation {
        #[arg(long)]
        sig: PathBuf,
        #[arg(long)]
        derivation: PathBuf,
    },
    /// Bounded forward proof search for a sequent.
    Derive {
        #[arg(long)]
        sig: PathBuf,
        #[arg(long)]
        sequent: String,
        #[arg(long, default_value_t = 4)]
        size_bound: usize,
        #[arg(long, default_value_t = 20_000_000)]
        max_steps: u64,
    },
    /// Check every frame condition of a frame file.
    CheckFrame {
        #[arg(long)]
        frame: PathBuf,
    },
    /// Check every algebra condition of an algebra file.
    CheckAlgebra {
        #[arg(long)]
        algebra: PathBuf,
    },
    /// Complex algebra of a frame (upsets, relational operations).
    Cm {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Atom structure of an algebra (dual frame on the join-irreducibles).
    At {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite canonical extension of an algebra.
    Canonical {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truth set of a formula in a model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
    },
    /// Frame validity of a sequent (all valuations).
    Valid {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        sequent: String,
    },
    /// Search for a falsifying model, smallest world count first.
    Countermodel {
        #[arg(long)]
        sig: PathBuf,
        #[arg(long)]
        sequent: String,
        #[arg(long, default_value_t = 3)]
        max_worlds: usize,
        #[arg(long, default_value_t = 200_000)]
        max_candidates: u64,
    },
    /// Verify that an algebra is isomorphic to the complex algebra of its
    /// atom structure.
    Duality {
        #[arg(long)]
        algebra: PathBuf,
    },
    /// Random-frame soundness fuzzing of every axiom schema and rule.
    FuzzSoundness {
        #[arg(long)]
        sig: PathBuf,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Export a frame as Graphviz DOT.
    ExportDot {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn emit<W: Write, T: Serialize>(stdout: &mut W, payload: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(payload)?;
    writeln!(stdout, "{text}")?;
    Ok(())
}

fn emit_with_out<W: Write, T: Serialize>(
    stdout: &mut W,
    payload: &T,
    out: &Option<PathBuf>,
) -> Result<()> {
    if let Some(path) = out {
        fs::write(path, serde_json::to_string_pretty(payload)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    emit(stdout, payload)
}

#[derive(Serialize)]
struct CheckPayload {
    ok: bool,
    violations: Vec<String>,
}

#[derive(Serialize)]
struct ErrorPayload {
    error: String,
}

fn budget_exit(e: &SearchError) -> i32 {
    match e {
        SearchError::BudgetExceeded { .. } => EXIT_BUDGET,
        _ => EXIT_INPUT,
    }
}

/// Runs one parsed command; returns the process exit code.
pub fn run<W: Write, E: Write>(cli: Cli, stdout: &mut W, stderr: &mut E) -> i32 {
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err:#}");
            let _ = emit(stdout, &ErrorPayload { error: format!("{err:#}") });
            EXIT_INPUT
        }
    }
}

fn dispatch<W: Write>(cli: Cli, stdout: &mut W) -> Result<i32> {
    if cli.jobs == 0 {
        return Err(anyhow!("--jobs must be at least 1"));
    }
    let cfg = CalculusConfig::default();
    match cli.command {
        Command::CheckSig { sig } => {
            let doc: SigDoc = read_json(&sig)?;
            #[derive(Serialize)]
            struct Payload {
                ok: bool,
                errors: Vec<String>,
                closure_added: Vec<(String, String)>,
            }
            match doc.to_core() {
                Ok(s) => {
                    let closure_added = s
                        .closure_added()
                        .iter()
                        .map(|&(a, b)| (s.name(a).to_string(), s.name(b).to_string()))
                        .collect();
                    emit(stdout, &Payload { ok: true, errors: vec![], closure_added })?;
                    Ok(EXIT_OK)
                }
                Err(e) => {
                    emit(
                        stdout,
                        &Payload { ok: false, errors: vec![format!("{e:#}")], closure_added: vec![] },
                    )?;
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        Command::Parse { sig, formula, sequent } => {
            let sig = read_json::<SigDoc>(&sig)?.to_core()?;
            #[derive(Serialize)]
            struct Payload {
                kind: &'static str,
                canonical: String,
            }
            let payload = match (formula, sequent) {
                (Some(f), None) => {
                    let parsed = parse_formula(&f, &sig).map_err(|e| anyhow!("{e}"))?;
                    Payload { kind: "formula", canonical: parsed.to_string() }
                }
                (None, Some(s)) => {
                    let parsed = parse_sequent(&s, &sig).map_err(|e| anyhow!("{e}"))?;
                    Payload { kind: "sequent", canonical: parsed.to_string() }
                }
                _ => return Err(anyhow!("pass exactly one of --formula or --sequent")),
            };
            emit(stdout, &payload)?;
            Ok(EXIT_OK)
        }
        Command::CheckDerivation { sig, derivation } => {
            let sig = read_json::<SigDoc>(&sig)?.to_core()?;
            let doc: DerivationDoc = read_json(&derivation)?;
            let d = doc.to_core(&sig)?;
            #[derive(Serialize)]
            struct Payload {
                ok: bool,
                #[serde(skip_serializing_if = "Option::is_none")]
                path: Option<Vec<usize>>,
                #[serde(skip_serializing_if = "Option::is_none")]
                error: Option<String>,
            }
            match check_derivation(&sig, &cfg, &d) {
                Ok(()) => {
                    emit(stdout, &Payload { ok: true, path: None, error: None })?;
                    Ok(EXIT_OK)
                }
                Err(e) => {
                    emit(
                        stdout,
                        &Payload {
                            ok: false,
                            path: Some(e.path.clone()),
                            error: Some(e.error.to_string()),
                        },
                    )?;
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        Command::Derive { sig, sequent, size_bound, max_steps } => {
            let sig = read_json::<SigDoc>(&sig)?.to_core()?;
            let goal = parse_sequent(&sequent, &sig).map_err(|e| anyhow!("{e}"))?;
            #[derive(Serialize)]
            struct Payload {
                found: bool,
                #[serde(skip_serializing_if = "Option::is_none")]
                derivation: Option<DerivationDoc>,
            }
            match derive_bounded_with(&sig, &cfg, &goal, size_bound, max_steps) {
                Ok(Some(d)) => {
                    emit(
                        stdout,
                        &Payload { found: true, derivation: Some(DerivationDoc::from_core(&d)) },
                    )?;
                    Ok(EXIT_OK)
                }
                Ok(None) => {
                    emit(stdout, &Payload { found: false, derivation: None })?;
                    Ok(EXIT_NEGATIVE)
                }
                Err(e @ DeriveError::BudgetExceeded { .. }) => {
                    emit(stdout, &ErrorPayload { error: e.to_string() })?;
                    Ok(EXIT_BUDGET)
                }
                Err(e) => Err(anyhow!("{e}")),
            }
        }
        Command::CheckFrame { frame } => {
            let frame = read_json::<FrameDoc>(&frame)?.to_core()?;
            let violations = check_sigma_frame(&frame).map_err(|e| anyhow!("{e}"))?;
            let ok = violations.is_empty();
            emit(
                stdout,
                &CheckPayload {
                    ok,
                    violations: violations.iter().map(|v| v.to_string()).collect(),
                },
            )?;
            Ok(if ok { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::CheckAlgebra { algebra } => {
            let algebra = read_json::<AlgebraDoc>(&algebra)?.to_core()?;
            let violations = algebra.check();
            let ok = violations.is_empty();
            emit(
                stdout,
                &CheckPayload {
                    ok,
                    violations: violations.iter().map(|v| v.to_string()).collect(),
                },
            )?;
            Ok(if ok { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Cm { frame, out } => {
            let frame = read_json::<FrameDoc>(&frame)?.to_core()?;
            let violations = check_sigma_frame(&frame).map_err(|e| anyhow!("{e}"))?;
            if !violations.is_empty() {
                emit(
                    stdout,
                    &CheckPayload {
                        ok: false,
                        violations: violations.iter().map(|v| v.to_string()).collect(),
                    },
                )?;
                return Ok(EXIT_NEGATIVE);
            }
            let (algebra, carrier) = complex_algebra(&frame).map_err(|e| anyhow!("{e}"))?;
            #[derive(Serialize)]
            struct Payload {
                algebra: AlgebraDoc,
                carrier: Vec<Vec<usize>>,
            }
            let n = frame.len();
            let carrier = carrier
                .iter()
                .map(|&mask| (0..n).filter(|&w| mask & (1 << w) != 0).collect())
                .collect();
            let payload = Payload { algebra: AlgebraDoc::from_core(&algebra), carrier };
            emit_with_out(stdout, &payload, &out)?;
            Ok(EXIT_OK)
        }
        Command::At { algebra, out } => {
            let algebra = read_json::<AlgebraDoc>(&algebra)?.to_core()?;
            let violations = algebra.check();
            if !violations.is_empty() {
                emit(
                    stdout,
                    &CheckPayload {
                        ok: false,
                        violations: violations.iter().map(|v| v.to_string()).collect(),
                    },
                )?;
                return Ok(EXIT_NEGATIVE);
            }
            #[derive(Serialize)]
            struct Payload {
                frame: FrameDoc,
            }
            let payload = Payload { frame: FrameDoc::from_core(&algebra.atom_structure()) };
            emit_with_out(stdout, &payload, &out)?;
            Ok(EXIT_OK)
        }
        Command::Canonical { algebra, out } => {
            let algebra = read_json::<AlgebraDoc>(&algebra)?.to_core()?;
            let violations = algebra.check();
            if !violations.is_empty() {
                emit(
                    stdout,
                    &CheckPayload {
                        ok: false,
                        violations: violations.iter().map(|v| v.to_string()).collect(),
                    },
                )?;
                return Ok(EXIT_NEGATIVE);
            }
            let ext = algebra.canonical_extension_finite();
            #[derive(Serialize)]
            struct Payload {
                algebra: AlgebraDoc,
                equals_input: bool,
            }
            let payload =
                Payload { algebra: AlgebraDoc::from_core(&ext), equals_input: ext == algebra };
            emit_with_out(stdout, &payload, &out)?;
            Ok(EXIT_OK)
        }
        Command::Eval { model, formula } => {
            let model = read_json::<ModelDoc>(&model)?.to_core()?;
            let parsed =
                parse_formula(&formula, &model.frame.sig).map_err(|e| anyhow!("{e}"))?;
            let mask = eval(&model, &parsed).map_err(|e| anyhow!("{e}"))?;
            #[derive(Serialize)]
            struct Payload {
                truth_set: Vec<usize>,
            }
            let n = model.frame.len();
            emit(
                stdout,
                &Payload { truth_set: (0..n).filter(|&w| mask & (1 << w) != 0).collect() },
            )?;
            Ok(EXIT_OK)
        }
        Command::Valid { frame, sequent } => {
            let frame = read_json::<FrameDoc>(&frame)?.to_core()?;
            let seq = parse_sequent(&sequent, &frame.sig).map_err(|e| anyhow!("{e}"))?;
            #[derive(Serialize)]
            struct Payload {
                valid: bool,
                #[serde(skip_serializing_if = "Option::is_none")]
                valuation: Option<BTreeMap<String, Vec<usize>>>,
                #[serde(skip_serializing_if = "Option::is_none")]
                witness_world: Option<usize>,
            }
            match falsifying_valuation(&frame, &seq).map_err(|e| anyhow!("{e}"))? {
                None => {
                    emit(stdout, &Payload { valid: true, valuation: None, witness_world: None })?;
                    Ok(EXIT_OK)
                }
                Some((model, witness)) => {
                    let n = model.frame.len();
                    let valuation = model
                        .valuation
                        .iter()
                        .map(|(v, &mask)| {
                            (v.clone(), (0..n).filter(|&w| mask & (1 << w) != 0).collect())
                        })
                        .collect();
                    emit(
                        stdout,
                        &Payload {
                            valid: false,
                            valuation: Some(valuation),
                            witness_world: Some(witness),
                        },
                    )?;
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        Command::Countermodel { sig, sequent, max_worlds, max_candidates } => {
            let sig = read_json::<SigDoc>(&sig)?.to_core()?;
            let seq = parse_sequent(&sequent, &sig).map_err(|e| anyhow!("{e}"))?;
            let budget = SearchBudget { max_worlds, max_candidates, ..SearchBudget::default() };
            #[derive(Serialize)]
            struct Payload {
                found: bool,
                max_worlds: usize,
                #[serde(skip_serializing_if = "Option::is_none")]
                countermodel: Option<CountermodelDoc>,
            }
            match find_countermodel(&seq, &sig, &budget) {
                Ok(Some(cm)) => {
                    emit(
                        stdout,
                        &Payload {
                            found: true,
                            max_worlds,
                            countermodel: Some(CountermodelDoc::from_core(&cm)),
                        },
                    )?;
                    Ok(EXIT_OK)
                }
                Ok(None) => {
                    emit(stdout, &Payload { found: false, max_worlds, countermodel: None })?;
                    Ok(EXIT_NEGATIVE)
                }
                Err(e) => {
                    let code = budget_exit(&e);
                    emit(stdout, &ErrorPayload { error: e.to_string() })?;
                    Ok(code)
                }
            }
        }
        Command::Duality { algebra } => {
            let algebra = read_json::<AlgebraDoc>(&algebra)?.to_core()?;
            let violations = algebra.check();
            if !violations.is_empty() {
                emit(
                    stdout,
                    &CheckPayload {
                        ok: false,
                        violations: violations.iter().map(|v| v.to_string()).collect(),
                    },
                )?;
                return Ok(EXIT_NEGATIVE);
            }
            #[derive(Serialize)]
            struct Payload {
                ok: bool,
                #[serde(skip_serializing_if = "Option::is_none")]
                failure: Option<String>,
            }
            match duality_check(&algebra) {
                Ok(()) => {
                    emit(stdout, &Payload { ok: true, failure: None })?;
                    Ok(EXIT_OK)
                }
                Err(e) => {
                    emit(stdout, &Payload { ok: false, failure: Some(e.to_string()) })?;
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        Command::FuzzSoundness { sig, trials, seed } => {
            let sig = read_json::<SigDoc>(&sig)?.to_core()?;
            let report = soundness_fuzz(&sig, trials, seed);
            #[derive(Serialize)]
            struct Payload {
                trials: u64,
                frames_generated: u64,
                schema_checks: u64,
                instance_checks: u64,
                rule_checks: u64,
                rule_premise_hits: u64,
                failures: Vec<String>,
            }
            let ok = report.failures.is_empty();
            emit(
                stdout,
                &Payload {
                    trials: report.trials,
                    frames_generated: report.frames_generated,
                    schema_checks: report.schema_checks,
                    instance_checks: report.instance_checks,
                    rule_checks: report.rule_checks,
                    rule_premise_hits: report.rule_premise_hits,
                    failures: report
                        .failures
                        .iter()
                        .map(|f| format!("{}: {} on {}", f.kind, f.rule, f.sequent))
                        .collect(),
                },
            )?;
            Ok(if ok { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::ExportDot { frame, out } => {
            let frame = read_json::<FrameDoc>(&frame)?.to_core()?;
            let dot = dot::frame_to_dot(&frame);
            fs::write(&out, &dot).with_context(|| format!("cannot write {}", out.display()))?;
            #[derive(Serialize)]
            struct Payload {
                written: String,
                bytes: usize,
            }
            emit(stdout, &Payload { written: out.display().to_string(), bytes: dot.len() })?;
            Ok(EXIT_OK)
        }
    }
}
