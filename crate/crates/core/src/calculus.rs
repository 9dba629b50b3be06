//! Hilbert-style presentation of the calculus: axiom schemas, inference
//! rules, derivation objects, step verification and a bounded forward
//! prover.
//!
//! Schemas are ordinary [`Sequent`]s over the reserved metavariable names
//! `p`, `q`, `r`, `s` (formulas) and `i`, `j`, `k` (subexponential indices).
//! Instantiating a schema is simultaneous substitution, and checking a step
//! is first-order matching of the rule's patterns against the node plus the
//! evaluation of its side conditions over the signature.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::syntax::{Formula, Sequent, SubexpSignature};

/// Identifies one axiom schema or inference rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    // axiom admitted as primitive
    Identity,
    // full Lambek axioms
    TopAx,
    BotAx,
    ProdAssocL,
    ProdAssocR,
    UnitIntroL,
    UnitElimL,
    UnitIntroR,
    UnitElimR,
    DisjIntroL,
    DisjIntroR,
    ConjElimL,
    ConjElimR,
    // distributivity
    Distr,
    // subexponential axioms
    Dereliction,
    BangFour,
    Promotion,
    BangUnit,
    ContractL,
    ContractR,
    Weakening,
    ExchangeLR,
    ExchangeRL,
    BangMeet,
    BangTop,
    // inference rules
    ConjIntro,
    DisjElim,
    ProdMono,
    LDivResidUp,
    LDivResidDown,
    RDivResidUp,
    RDivResidDown,
    Subst,
    Cut,
    BangMono,
}

pub const ALL_RULES: &[RuleId] = &[
    RuleId::Identity,
    RuleId::TopAx,
    RuleId::BotAx,
    RuleId::ProdAssocL,
    RuleId::ProdAssocR,
    RuleId::UnitIntroL,
    RuleId::UnitElimL,
    RuleId::UnitIntroR,
    RuleId::UnitElimR,
    RuleId::DisjIntroL,
    RuleId::DisjIntroR,
    RuleId::ConjElimL,
    RuleId::ConjElimR,
    RuleId::Distr,
    RuleId::Dereliction,
    RuleId::BangFour,
    RuleId::Promotion,
    RuleId::BangUnit,
    RuleId::ContractL,
    RuleId::ContractR,
    RuleId::Weakening,
    RuleId::ExchangeLR,
    RuleId::ExchangeRL,
    RuleId::BangMeet,
    RuleId::BangTop,
    RuleId::ConjIntro,
    RuleId::DisjElim,
    RuleId::ProdMono,
    RuleId::LDivResidUp,
    RuleId::LDivResidDown,
    RuleId::RDivResidUp,
    RuleId::RDivResidDown,
    RuleId::Subst,
    RuleId::Cut,
    RuleId::BangMono,
];

/// The thirteen signature-independent axiom schemas (full Lambek plus
/// distributivity); every other axiom mentions a subexponential.
pub const CORE_AXIOMS: &[RuleId] = &[
    RuleId::TopAx,
    RuleId::BotAx,
    RuleId::ProdAssocL,
    RuleId::ProdAssocR,
    RuleId::UnitIntroL,
    RuleId::UnitElimL,
    RuleId::UnitIntroR,
    RuleId::UnitElimR,
    RuleId::DisjIntroL,
    RuleId::DisjIntroR,
    RuleId::ConjElimL,
    RuleId::ConjElimR,
    RuleId::Distr,
];

impl RuleId {
    pub fn name(self) -> &'static str {
        match self {
            RuleId::Identity => "identity",
            RuleId::TopAx => "top",
            RuleId::BotAx => "bot",
            RuleId::ProdAssocL => "prod-assoc-l",
            RuleId::ProdAssocR => "prod-assoc-r",
            RuleId::UnitIntroL => "unit-intro-l",
            RuleId::UnitElimL => "unit-elim-l",
            RuleId::UnitIntroR => "unit-intro-r",
            RuleId::UnitElimR => "unit-elim-r",
            RuleId::DisjIntroL => "disj-intro-l",
            RuleId::DisjIntroR => "disj-intro-r",
            RuleId::ConjElimL => "conj-elim-l",
            RuleId::ConjElimR => "conj-elim-r",
            RuleId::Distr => "distr",
            RuleId::Dereliction => "dereliction",
            RuleId::BangFour => "bang-4",
            RuleId::Promotion => "promotion",
            RuleId::BangUnit => "bang-unit",
            RuleId::ContractL => "contract-l",
            RuleId::ContractR => "contract-r",
            RuleId::Weakening => "weakening",
            RuleId::ExchangeLR => "exchange-lr",
            RuleId::ExchangeRL => "exchange-rl",
            RuleId::BangMeet => "bang-meet",
            RuleId::BangTop => "bang-top",
            RuleId::ConjIntro => "conj-intro",
            RuleId::DisjElim => "disj-elim",
            RuleId::ProdMono => "prod-mono",
            RuleId::LDivResidUp => "ldiv-resid-up",
            RuleId::LDivResidDown => "ldiv-resid-down",
            RuleId::RDivResidUp => "rdiv-resid-up",
            RuleId::RDivResidDown => "rdiv-resid-down",
            RuleId::Subst => "subst",
            RuleId::Cut => "cut",
            RuleId::BangMono => "bang-mono",
        }
    }

    pub fn from_name(name: &str) -> Option<RuleId> {
        ALL_RULES.iter().copied().find(|r| r.name() == name)
    }

    /// Number of premises.
    pub fn arity(self) -> usize {
        match self {
            RuleId::ConjIntro | RuleId::DisjElim | RuleId::ProdMono | RuleId::Cut => 2,
            RuleId::LDivResidUp
            | RuleId::LDivResidDown
            | RuleId::RDivResidUp
            | RuleId::RDivResidDown
            | RuleId::Subst
            | RuleId::BangMono => 1,
            _ => 0,
        }
    }

    pub fn is_axiom(self) -> bool {
        self.arity() == 0
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Side conditions a rule imposes on its index metavariables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideCond {
    /// `first preceq second`.
    Le(&'static str, &'static str),
    InW(&'static str),
    InE(&'static str),
    InC(&'static str),
}

impl fmt::Display for SideCond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SideCond::Le(a, b) => write!(f, "{a} preceq {b}"),
            SideCond::InW(i) => write!(f, "{i} in W"),
            SideCond::InE(i) => write!(f, "{i} in E"),
            SideCond::InC(i) => write!(f, "{i} in C"),
        }
    }
}

/// Which way the promotion side condition compares `k` against `i`, `j`.
///
/// The algebraic and frame conditions both place `k` below `i` and `j`, so
/// that is the default; the flipped reading stays selectable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PromotionOrder {
    #[default]
    KBelow,
    KAbove,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CalculusConfig {
    pub promotion: PromotionOrder,
}

/// Pattern form of a rule: premise and conclusion sequents over the
/// metavariable conventions, plus side conditions.
#[derive(Debug, Clone)]
pub struct RuleSchema {
    pub premises: Vec<Sequent>,
    pub conclusion: Sequent,
    pub side: Vec<SideCond>,
}

fn mv(name: &str) -> Formula {
    Formula::var(name)
}

/// Pattern schema of `rule`; `Identity` and `Subst` are handled outside the
/// pattern language and return `None`.
pub fn rule_schema(rule: RuleId, cfg: &CalculusConfig) -> Option<RuleSchema> {
    use Formula as F;
    let p = || mv("p");
    let q = || mv("q");
    let r = || mv("r");
    let s = || mv("s");
    let bang = |i: &str, f: Formula| F::bang(i, f);
    let seq = Sequent::new;
    let ax = |conclusion: Sequent, side: Vec<SideCond>| {
        Some(RuleSchema { premises: vec![], conclusion, side })
    };
    match rule {
        RuleId::Identity | RuleId::Subst => None,
        RuleId::TopAx => ax(seq(p(), F::Top), vec![]),
        RuleId::BotAx => ax(seq(F::Bot, p()), vec![]),
        RuleId::ProdAssocL => ax(
            seq(F::prod(p(), F::prod(q(), r())), F::prod(F::prod(p(), q()), r())),
            vec![],
        ),
        RuleId::ProdAssocR => ax(
            seq(F::prod(F::prod(p(), q()), r()), F::prod(p(), F::prod(q(), r()))),
            vec![],
        ),
        RuleId::UnitIntroL => ax(seq(p(), F::prod(F::One, p())), vec![]),
        RuleId::UnitElimL => ax(seq(F::prod(F::One, p()), p()), vec![]),
        RuleId::UnitIntroR => ax(seq(p(), F::prod(p(), F::One)), vec![]),
        RuleId::UnitElimR => ax(seq(F::prod(p(), F::One), p()), vec![]),
        RuleId::DisjIntroL => ax(seq(p(), F::or(p(), q())), vec![]),
        RuleId::DisjIntroR => ax(seq(q(), F::or(p(), q())), vec![]),
        RuleId::ConjElimL => ax(seq(F::and(p(), q()), p()), vec![]),
        RuleId::ConjElimR => ax(seq(F::and(p(), q()), q()), vec![]),
        RuleId::Distr => ax(
            seq(
                F::and(p(), F::or(q(), r())),
                F::or(F::and(p(), q()), F::and(p(), r())),
            ),
            vec![],
        ),
        RuleId::Dereliction => ax(seq(bang("i", p()), p()), vec![]),
        RuleId::BangFour => ax(seq(bang("i", p()), bang("i", bang("i", p()))), vec![]),
        RuleId::Promotion => {
            let side = match cfg.promotion {
                PromotionOrder::KBelow => vec![SideCond::Le("k", "i"), SideCond::Le("k", "j")],
                PromotionOrder::KAbove => vec![SideCond::Le("i", "k"), SideCond::Le("j", "k")],
            };
            ax(
                seq(F::prod(bang("i", p()), bang("j", q())), bang("k", F::prod(p(), q()))),
                side,
            )
        }
        RuleId::BangUnit => ax(seq(F::One, bang("i", F::One)), vec![]),
        RuleId::ContractL => ax(
            seq(
                F::prod(bang("i", p()), q()),
                F::prod(F::prod(bang("i", p()), q()), bang("i", p())),
            ),
            vec![SideCond::InC("i")],
        ),
        RuleId::ContractR => ax(
            seq(
                F::prod(q(), bang("i", p())),
                F::prod(F::prod(bang("i", p()), q()), bang("i", p())),
            ),
            vec![SideCond::InC("i")],
        ),
        RuleId::Weakening => ax(seq(bang("i", p()), F::One), vec![SideCond::InW("i")]),
        RuleId::ExchangeLR => ax(
            seq(F::prod(bang("i", p()), q()), F::prod(q(), bang("i", p()))),
            vec![SideCond::InE("i")],
        ),
        RuleId::ExchangeRL => ax(
            seq(F::prod(q(), bang("i", p())), F::prod(bang("i", p()), q())),
            vec![SideCond::InE("i")],
        ),
        RuleId::BangMeet => ax(
            seq(F::and(bang("i", p()), bang("i", q())), bang("i", F::and(p(), q()))),
            vec![],
        ),
        RuleId::BangTop => ax(seq(F::Top, bang("i", F::Top)), vec![]),
        RuleId::ConjIntro => Some(RuleSchema {
            premises: vec![seq(p(), q()), seq(p(), r())],
            conclusion: seq(p(), F::and(q(), r())),
            side: vec![],
        }),
        RuleId::DisjElim => Some(RuleSchema {
            premises: vec![seq(p(), r()), seq(q(), r())],
            conclusion: seq(F::or(p(), q()), r()),
            side: vec![],
        }),
        RuleId::ProdMono => Some(RuleSchema {
            premises: vec![seq(p(), q()), seq(r(), s())],
            conclusion: seq(F::prod(p(), r()), F::prod(q(), s())),
            side: vec![],
        }),
        RuleId::LDivResidUp => Some(RuleSchema {
            premises: vec![seq(F::prod(p(), q()), r())],
            conclusion: seq(q(), F::ldiv(p(), r())),
            side: vec![],
        }),
        RuleId::LDivResidDown => Some(RuleSchema {
            premises: vec![seq(q(), F::ldiv(p(), r()))],
            conclusion: seq(F::prod(p(), q()), r()),
            side: vec![],
        }),
        RuleId::RDivResidUp => Some(RuleSchema {
            premises: vec![seq(F::prod(p(), q()), r())],
            conclusion: seq(p(), F::rdiv(r(), q())),
            side: vec![],
        }),
        RuleId::RDivResidDown => Some(RuleSchema {
            premises: vec![seq(p(), F::rdiv(r(), q()))],
            conclusion: seq(F::prod(p(), q()), r()),
            side: vec![],
        }),
        RuleId::Cut => Some(RuleSchema {
            premises: vec![seq(p(), q()), seq(q(), r())],
            conclusion: seq(p(), r()),
            side: vec![],
        }),
        RuleId::BangMono => Some(RuleSchema {
            premises: vec![seq(p(), q())],
            conclusion: seq(bang("i", p()), bang("j", q())),
            side: vec![SideCond::Le("j", "i")],
        }),
    }
}

/// Assigns formulas to schema metavariables and signature indices to index
/// metavariables; `Subst` additionally names the substituted variable and
/// the replacement formula.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Instantiation {
    pub formulas: BTreeMap<String, Formula>,
    pub indices: BTreeMap<String, String>,
    pub subst_var: Option<String>,
    pub subst_with: Option<Formula>,
}

impl Instantiation {
    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
            && self.indices.is_empty()
            && self.subst_var.is_none()
            && self.subst_with.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepError {
    ArityMismatch { rule: RuleId, expected: usize, got: usize },
    SchemaMismatch { rule: RuleId, expected: String, got: String },
    SideConditionFailed { rule: RuleId, condition: String },
    MissingInstantiation { rule: RuleId, what: &'static str },
    UnknownIndex { rule: RuleId, name: String },
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepError::ArityMismatch { rule, expected, got } => {
                write!(f, "{rule}: expected {expected} premises, got {got}")
            }
            StepError::SchemaMismatch { rule, expected, got } => {
                write!(f, "{rule}: schema mismatch: expected {expected}, got {got}")
            }
            StepError::SideConditionFailed { rule, condition } => {
                write!(f, "{rule}: side condition failed: {condition}")
            }
            StepError::MissingInstantiation { rule, what } => {
                write!(f, "{rule}: instantiation must supply {what}")
            }
            StepError::UnknownIndex { rule, name } => {
                write!(f, "{rule}: index '{name}' is not in the signature")
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Binding {
    formulas: BTreeMap<String, Formula>,
    indices: BTreeMap<String, String>,
}

/// First-order matching of a schema pattern against a concrete formula.
/// `Var` nodes in the pattern are formula metavariables and `Bang` index
/// names are index metavariables; non-linear occurrences must agree.
fn match_formula(pat: &Formula, target: &Formula, b: &mut Binding) -> bool {
    match (pat, target) {
        (Formula::Var(m), t) => match b.formulas.get(m) {
            Some(prev) => prev == t,
            None => {
                b.formulas.insert(m.clone(), t.clone());
                true
            }
        },
        (Formula::Bot, Formula::Bot)
        | (Formula::Top, Formula::Top)
        | (Formula::One, Formula::One) => true,
        (Formula::Bang(m, pa), Formula::Bang(i, ta)) => {
            let ok = match b.indices.get(m) {
                Some(prev) => prev == i,
                None => {
                    b.indices.insert(m.clone(), i.clone());
                    true
                }
            };
            ok && match_formula(pa, ta, b)
        }
        (Formula::Prod(pa, pb), Formula::Prod(ta, tb))
        | (Formula::LDiv(pa, pb), Formula::LDiv(ta, tb))
        | (Formula::RDiv(pa, pb), Formula::RDiv(ta, tb))
        | (Formula::And(pa, pb), Formula::And(ta, tb))
        | (Formula::Or(pa, pb), Formula::Or(ta, tb)) => {
            match_formula(pa, ta, b) && match_formula(pb, tb, b)
        }
        _ => false,
    }
}

fn match_sequent(pat: &Sequent, target: &Sequent, b: &mut Binding) -> bool {
    match_formula(&pat.lhs, &target.lhs, b) && match_formula(&pat.rhs, &target.rhs, b)
}

fn instantiate(pat: &Sequent, b: &Binding) -> Sequent {
    let s = pat.substitute_map(&b.formulas);
    Sequent::new(s.lhs.rename_indices(&b.indices), s.rhs.rename_indices(&b.indices))
}

fn check_sides(
    rule: RuleId,
    sides: &[SideCond],
    b: &Binding,
    sig: &SubexpSignature,
) -> Result<(), StepError> {
    let resolve = |m: &str| -> Result<usize, StepError> {
        let name = b
            .indices
            .get(m)
            .ok_or(StepError::MissingInstantiation { rule, what: "an index metavariable" })?;
        sig.index_of(name)
            .ok_or_else(|| StepError::UnknownIndex { rule, name: name.clone() })
    };
    for side in sides {
        let ok = match side {
            SideCond::Le(a, bb) => sig.le(resolve(a)?, resolve(bb)?),
            SideCond::InW(i) => sig.in_w(resolve(i)?),
            SideCond::InE(i) => sig.in_e(resolve(i)?),
            SideCond::InC(i) => sig.in_c(resolve(i)?),
        };
        if !ok {
            let named = match side {
                SideCond::Le(a, bb) => {
                    format!("{} preceq {} (got {} and {})", a, bb, b.indices[*a], b.indices[*bb])
                }
                SideCond::InW(i) => format!("{} in W (got {})", i, b.indices[*i]),
                SideCond::InE(i) => format!("{} in E (got {})", i, b.indices[*i]),
                SideCond::InC(i) => format!("{} in C (got {})", i, b.indices[*i]),
            };
            return Err(StepError::SideConditionFailed { rule, condition: named });
        }
    }
    Ok(())
}

/// Verifies one inference step. If `inst` is (partially) empty the binding
/// is inferred by matching; supplied entries act as constraints. `Subst`
/// always needs `subst_var` and `subst_with`.
pub fn check_step(
    sig: &SubexpSignature,
    cfg: &CalculusConfig,
    conclusion: &Sequent,
    rule: RuleId,
    premises: &[&Sequent],
    inst: &Instantiation,
) -> Result<(), StepError> {
    if premises.len() != rule.arity() {
        return Err(StepError::ArityMismatch { rule, expected: rule.arity(), got: premises.len() });
    }
    for name in inst.indices.values() {
        if sig.index_of(name).is_none() {
            return Err(StepError::UnknownIndex { rule, name: name.clone() });
        }
    }
    match rule {
        RuleId::Identity => {
            if conclusion.lhs == conclusion.rhs {
                Ok(())
            } else {
                Err(StepError::SchemaMismatch {
                    rule,
                    expected: "p |- p".to_string(),
                    got: conclusion.to_string(),
                })
            }
        }
        RuleId::Subst => {
            let var = inst
                .subst_var
                .as_ref()
                .ok_or(StepError::MissingInstantiation { rule, what: "the substituted variable" })?;
            let with = inst
                .subst_with
                .as_ref()
                .ok_or(StepError::MissingInstantiation { rule, what: "the replacement formula" })?;
            let expected = premises[0].substitute(var, with);
            if &expected == conclusion {
                Ok(())
            } else {
                Err(StepError::SchemaMismatch {
                    rule,
                    expected: expected.to_string(),
                    got: conclusion.to_string(),
                })
            }
        }
        _ => {
            let schema = rule_schema(rule, cfg).expect("pattern rule");
            let mut binding = Binding {
                formulas: inst.formulas.clone(),
                indices: inst.indices.clone(),
            };
            let mut ok = match_sequent(&schema.conclusion, conclusion, &mut binding);
            for (pat, got) in schema.premises.iter().zip(premises) {
                ok = ok && match_sequent(pat, got, &mut binding);
            }
            if !ok {
                let shown = if inst.is_empty() {
                    schema.conclusion.to_string()
                } else {
                    instantiate(&schema.conclusion, &binding).to_string()
                };
                let mut got = conclusion.to_string();
                for p in premises {
                    got.push_str("; ");
                    got.push_str(&p.to_string());
                }
                return Err(StepError::SchemaMismatch { rule, expected: shown, got });
            }
            check_sides(rule, &schema.side, &binding, sig)
        }
    }
}

/// A derivation tree. Each node is checked locally by [`check_step`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub conclusion: Sequent,
    pub rule: RuleId,
    pub inst: Instantiation,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub fn leaf(rule: RuleId, conclusion: Sequent) -> Self {
        Derivation { conclusion, rule, inst: Instantiation::default(), premises: vec![] }
    }

    pub fn node(rule: RuleId, conclusion: Sequent, premises: Vec<Derivation>) -> Self {
        Derivation { conclusion, rule, inst: Instantiation::default(), premises }
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationError {
    /// Child indices from the root to the failing node.
    pub path: Vec<usize>,
    pub error: StepError,
}

impl fmt::Display for DerivationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at node [")?;
        for (k, i) in self.path.iter().enumerate() {
            if k > 0 {
                write!(f, ".")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "]: {}", self.error)
    }
}

/// Checks every node of `d` in preorder (node before premises, premises left
/// to right) and reports the first failure with its path.
pub fn check_derivation(
    sig: &SubexpSignature,
    cfg: &CalculusConfig,
    d: &Derivation,
) -> Result<(), DerivationError> {
    fn walk(
        sig: &SubexpSignature,
        cfg: &CalculusConfig,
        d: &Derivation,
        path: &mut Vec<usize>,
    ) -> Result<(), DerivationError> {
        let premises: Vec<&Sequent> = d.premises.iter().map(|p| &p.conclusion).collect();
        if let Err(error) = check_step(sig, cfg, &d.conclusion, d.rule, &premises, &d.inst) {
            return Err(DerivationError { path: path.clone(), error });
        }
        for (k, premise) in d.premises.iter().enumerate() {
            path.push(k);
            walk(sig, cfg, premise, path)?;
            path.pop();
        }
        Ok(())
    }
    walk(sig, cfg, d, &mut Vec::new())
}

/// One concrete axiom schema over a signature: indices are instantiated,
/// formula metavariables (`p`, `q`, `r`) are left as variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomSchema {
    pub rule: RuleId,
    pub indices: BTreeMap<String, String>,
    pub sequent: Sequent,
    pub side: Vec<SideCond>,
}

/// The complete instantiable axiom list for `sig`: the signature-independent
/// schemas plus one entry per admissible index tuple of each indexed schema.
pub fn axiom_schemas(sig: &SubexpSignature, cfg: &CalculusConfig) -> Vec<AxiomSchema> {
    let mut out = Vec::new();
    out.push(AxiomSchema {
        rule: RuleId::Identity,
        indices: BTreeMap::new(),
        sequent: Sequent::new(mv("p"), mv("p")),
        side: vec![],
    });
    let mut push = |rule: RuleId, idx: &[(&str, usize)]| {
        let schema = rule_schema(rule, cfg).expect("axioms have schemas");
        let binding: BTreeMap<String, String> = idx
            .iter()
            .map(|(m, i)| (m.to_string(), sig.name(*i).to_string()))
            .collect();
        let sequent = Sequent::new(
            schema.conclusion.lhs.rename_indices(&binding),
            schema.conclusion.rhs.rename_indices(&binding),
        );
        out.push(AxiomSchema { rule, indices: binding, sequent, side: schema.side });
    };

    for &rule in CORE_AXIOMS {
        push(rule, &[]);
    }
    for i in 0..sig.len() {
        push(RuleId::Dereliction, &[("i", i)]);
        push(RuleId::BangFour, &[("i", i)]);
        push(RuleId::BangUnit, &[("i", i)]);
        push(RuleId::BangMeet, &[("i", i)]);
        push(RuleId::BangTop, &[("i", i)]);
        if sig.in_c(i) {
            push(RuleId::ContractL, &[("i", i)]);
            push(RuleId::ContractR, &[("i", i)]);
        }
        if sig.in_w(i) {
            push(RuleId::Weakening, &[("i", i)]);
        }
        if sig.in_e(i) {
            push(RuleId::ExchangeLR, &[("i", i)]);
            push(RuleId::ExchangeRL, &[("i", i)]);
        }
    }
    for i in 0..sig.len() {
        for j in 0..sig.len() {
            for k in 0..sig.len() {
                let ok = match cfg.promotion {
                    PromotionOrder::KBelow => sig.le(k, i) && sig.le(k, j),
                    PromotionOrder::KAbove => sig.le(i, k) && sig.le(j, k),
                };
                if ok {
                    push(RuleId::Promotion, &[("i", i), ("j", j), ("k", k)]);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeriveError {
    /// `size_bound` is smaller than a formula already in the goal.
    BoundTooSmall { needed: usize, got: usize },
    BudgetExceeded { explored: u64 },
}

impl fmt::Display for DeriveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeriveError::BoundTooSmall { needed, got } => {
                write!(f, "size bound {got} is below the goal's largest formula ({needed})")
            }
            DeriveError::BudgetExceeded { explored } => {
                write!(f, "forward search budget exhausted after {explored} steps")
            }
        }
    }
}

const DERIVE_DEFAULT_BUDGET: u64 = 20_000_000;

/// Bounded forward saturation. Axiom schemas are instantiated over the
/// subformulas of the goal (plus the constants); the inference rules are
/// then applied to a fixpoint, keeping every derived sequent whose sides
/// stay within `size_bound`, so the derivable sides range over the
/// connective closure of the goal's subformulas up to that bound. The
/// substitution rule is restricted to goal-subformula replacements.
///
/// `Ok(None)` means saturation finished without reaching the goal; that is
/// *not* a refutation. Deterministic for a fixed `(goal, sig, size_bound)`.
pub fn derive_bounded(
    sig: &SubexpSignature,
    goal: &Sequent,
    size_bound: usize,
) -> Result<Option<Derivation>, DeriveError> {
    derive_bounded_with(sig, &CalculusConfig::default(), goal, size_bound, DERIVE_DEFAULT_BUDGET)
}

pub fn derive_bounded_with(
    sig: &SubexpSignature,
    cfg: &CalculusConfig,
    goal: &Sequent,
    size_bound: usize,
    budget: u64,
) -> Result<Option<Derivation>, DeriveError> {
    let needed = goal.max_formula_size();
    if size_bound < needed {
        return Err(DeriveError::BoundTooSmall { needed, got: size_bound });
    }
    let mut steps: u64 = 0;
    fn bump(steps: &mut u64, by: u64, budget: u64) -> Result<(), DeriveError> {
        *steps += by;
        if *steps > budget {
            Err(DeriveError::BudgetExceeded { explored: *steps })
        } else {
            Ok(())
        }
    }

    // Instantiation domain: subformulas of the goal plus the constants.
    let mut domain: BTreeSet<Formula> = goal.subformulas().into_iter().cloned().collect();
    domain.insert(Formula::Bot);
    domain.insert(Formula::Top);
    domain.insert(Formula::One);
    let domain: Vec<Formula> = domain.into_iter().collect();

    // Every derived sequent remembers how it was first obtained. Binary
    // rules find their partners through indexes instead of scanning the
    // whole derived set: cut joins on the middle formula, conjunction
    // introduction on a shared left side, disjunction elimination on a
    // shared right side, and product monotonicity only ever involves
    // sequents whose sides both leave room for a composition.
    type Provenance = (RuleId, Instantiation, Vec<Sequent>);
    struct State {
        derived: BTreeMap<Sequent, Provenance>,
        by_lhs: BTreeMap<Formula, Vec<Sequent>>,
        by_rhs: BTreeMap<Formula, Vec<Sequent>>,
        prod_small: Vec<(Sequent, usize, usize)>,
        prod_cutoff: usize,
        frontier: Vec<Sequent>,
    }
    let mut st = State {
        derived: BTreeMap::new(),
        by_lhs: BTreeMap::new(),
        by_rhs: BTreeMap::new(),
        prod_small: Vec::new(),
        prod_cutoff: size_bound.saturating_sub(2),
        frontier: Vec::new(),
    };
    fn add(st: &mut State, seq: Sequent, prov: (RuleId, Instantiation, Vec<Sequent>)) {
        if !st.derived.contains_key(&seq) {
            st.frontier.push(seq.clone());
            st.by_lhs.entry(seq.lhs.clone()).or_default().push(seq.clone());
            st.by_rhs.entry(seq.rhs.clone()).or_default().push(seq.clone());
            let (l, r) = (seq.lhs.size(), seq.rhs.size());
            if l <= st.prod_cutoff && r <= st.prod_cutoff {
                st.prod_small.push((seq.clone(), l, r));
            }
            st.derived.insert(seq, prov);
        }
    }

    // Seed: all axiom instances over the domain whose sides fit the bound.
    let schemas = axiom_schemas(sig, cfg);
    for schema in &schemas {
        let metas: Vec<String> = schema.sequent.vars().into_iter().collect();
        let mut assignment = vec![0usize; metas.len()];
        'outer: loop {
            bump(&mut steps, 1, budget)?;
            let map: BTreeMap<String, Formula> = metas
                .iter()
                .zip(&assignment)
                .map(|(m, &k)| (m.clone(), domain[k].clone()))
                .collect();
            let inst = schema.sequent.substitute_map(&map);
            if inst.lhs.size() <= size_bound && inst.rhs.size() <= size_bound {
                let instantiation = Instantiation {
                    formulas: map,
                    indices: schema.indices.clone(),
                    ..Instantiation::default()
                };
                add(&mut st, inst, (schema.rule, instantiation, vec![]));
            }
            if metas.is_empty() {
                break;
            }
            let mut pos = 0;
            loop {
                assignment[pos] += 1;
                if assignment[pos] < domain.len() {
                    break;
                }
                assignment[pos] = 0;
                pos += 1;
                if pos == metas.len() {
                    break 'outer;
                }
            }
        }
    }

    let index_pairs: Vec<(String, String)> = {
        let mut v = Vec::new();
        for i in 0..sig.len() {
            for j in 0..sig.len() {
                if sig.le(j, i) {
                    v.push((sig.name(i).to_string(), sig.name(j).to_string()));
                }
            }
        }
        v
    };

    // Saturation.
    while let Some(seq) = st.frontier.pop() {
        if st.derived.contains_key(goal) {
            break;
        }
        let lsz = seq.lhs.size();
        let rsz = seq.rhs.size();
        let mut new: Vec<(Sequent, Provenance)> = Vec::new();
        let mut emit = |concl: Sequent, rule: RuleId, inst: Instantiation, prems: Vec<Sequent>| {
            if concl.lhs.size() <= size_bound && concl.rhs.size() <= size_bound {
                new.push((concl, (rule, inst, prems)));
            }
        };

        // unary rules on `seq`
        if let Formula::Prod(a, b) = &seq.lhs {
            emit(
                Sequent::new((**b).clone(), Formula::ldiv((**a).clone(), seq.rhs.clone())),
                RuleId::LDivResidUp,
                Instantiation::default(),
                vec![seq.clone()],
            );
            emit(
                Sequent::new((**a).clone(), Formula::rdiv(seq.rhs.clone(), (**b).clone())),
                RuleId::RDivResidUp,
                Instantiation::default(),
                vec![seq.clone()],
            );
        }
        if let Formula::LDiv(a, c) = &seq.rhs {
            emit(
                Sequent::new(Formula::prod((**a).clone(), seq.lhs.clone()), (**c).clone()),
                RuleId::LDivResidDown,
                Instantiation::default(),
                vec![seq.clone()],
            );
        }
        if let Formula::RDiv(c, b) = &seq.rhs {
            emit(
                Sequent::new(Formula::prod(seq.lhs.clone(), (**b).clone()), (**c).clone()),
                RuleId::RDivResidDown,
                Instantiation::default(),
                vec![seq.clone()],
            );
        }
        if lsz < size_bound && rsz < size_bound {
            for (i, j) in &index_pairs {
                emit(
                    Sequent::new(
                        Formula::bang(i, seq.lhs.clone()),
                        Formula::bang(j, seq.rhs.clone()),
                    ),
                    RuleId::BangMono,
                    Instantiation {
                        indices: BTreeMap::from([
                            ("i".to_string(), i.clone()),
                            ("j".to_string(), j.clone()),
                        ]),
                        ..Instantiation::default()
                    },
                    vec![seq.clone()],
                );
            }
        }
        for var in seq.vars() {
            for theta in &domain {
                let image = seq.substitute(&var, theta);
                if image != seq {
                    emit(
                        image,
                        RuleId::Subst,
                        Instantiation {
                            subst_var: Some(var.clone()),
                            subst_with: Some(theta.clone()),
                            ..Instantiation::default()
                        },
                        vec![seq.clone()],
                    );
                }
            }
        }

        // binary rules, each through its index
        let empty: Vec<Sequent> = Vec::new();
        let same_lhs = st.by_lhs.get(&seq.lhs).unwrap_or(&empty);
        for other in same_lhs {
            bump(&mut steps, 1, budget)?;
            for (first, second) in [(&seq, other), (other, &seq)] {
                if first.rhs.size() + second.rhs.size() < size_bound {
                    emit(
                        Sequent::new(
                            first.lhs.clone(),
                            Formula::and(first.rhs.clone(), second.rhs.clone()),
                        ),
                        RuleId::ConjIntro,
                        Instantiation::default(),
                        vec![first.clone(), second.clone()],
                    );
                }
            }
        }
        let same_rhs = st.by_rhs.get(&seq.rhs).unwrap_or(&empty);
        for other in same_rhs {
            bump(&mut steps, 1, budget)?;
            for (first, second) in [(&seq, other), (other, &seq)] {
                if first.lhs.size() + second.lhs.size() < size_bound {
                    emit(
                        Sequent::new(
                            Formula::or(first.lhs.clone(), second.lhs.clone()),
                            first.rhs.clone(),
                        ),
                        RuleId::DisjElim,
                        Instantiation::default(),
                        vec![first.clone(), second.clone()],
                    );
                }
            }
        }
        // cut: seq as left premise, then as right premise
        for other in st.by_lhs.get(&seq.rhs).unwrap_or(&empty) {
            bump(&mut steps, 1, budget)?;
            emit(
                Sequent::new(seq.lhs.clone(), other.rhs.clone()),
                RuleId::Cut,
                Instantiation::default(),
                vec![seq.clone(), other.clone()],
            );
        }
        for other in st.by_rhs.get(&seq.lhs).unwrap_or(&empty) {
            bump(&mut steps, 1, budget)?;
            emit(
                Sequent::new(other.lhs.clone(), seq.rhs.clone()),
                RuleId::Cut,
                Instantiation::default(),
                vec![other.clone(), seq.clone()],
            );
        }
        if lsz <= st.prod_cutoff && rsz <= st.prod_cutoff {
            for (other, olsz, orsz) in &st.prod_small {
                bump(&mut steps, 1, budget)?;
                if lsz + olsz + 1 > size_bound || rsz + orsz + 1 > size_bound {
                    continue;
                }
                for (first, second) in [(&seq, other), (other, &seq)] {
                    emit(
                        Sequent::new(
                            Formula::prod(first.lhs.clone(), second.lhs.clone()),
                            Formula::prod(first.rhs.clone(), second.rhs.clone()),
                        ),
                        RuleId::ProdMono,
                        Instantiation::default(),
                        vec![first.clone(), second.clone()],
                    );
                }
            }
        }

        for (concl, prov) in new {
            add(&mut st, concl, prov);
        }
        bump(&mut steps, 1, budget)?;
    }
    let derived = st.derived;

    if !derived.contains_key(goal) {
        return Ok(None);
    }

    fn rebuild(
        derived: &BTreeMap<Sequent, (RuleId, Instantiation, Vec<Sequent>)>,
        seq: &Sequent,
    ) -> Derivation {
        let (rule, inst, prems) = derived.get(seq).expect("provenance of derived sequent");
        Derivation {
            conclusion: seq.clone(),
            rule: *rule,
            inst: inst.clone(),
            premises: prems.iter().map(|p| rebuild(derived, p)).collect(),
        }
    }
    Ok(Some(rebuild(&derived, goal)))
}
