use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::signature::SubexpSignature;

/// A formula of the object language.
///
/// `LDiv(a, b)` is `a \ b` (left residual), `RDiv(a, b)` is `a / b` (right
/// residual). `Bang(i, a)` is the subexponential `![i]a`; the index is kept
/// as a name so formulas can be moved between structures sharing a
/// signature.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Bot,
    Top,
    One,
    Var(String),
    Bang(String, Box<Formula>),
    Prod(Box<Formula>, Box<Formula>),
    LDiv(Box<Formula>, Box<Formula>),
    RDiv(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownIndex(pub String);

impl fmt::Display for UnknownIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown subexponential index '{}'", self.0)
    }
}

impl Formula {
    pub fn var(name: &str) -> Formula {
        Formula::Var(String::from(name))
    }

    pub fn bang(index: &str, body: Formula) -> Formula {
        Formula::Bang(String::from(index), Box::new(body))
    }

    pub fn prod(l: Formula, r: Formula) -> Formula {
        Formula::Prod(Box::new(l), Box::new(r))
    }

    pub fn ldiv(l: Formula, r: Formula) -> Formula {
        Formula::LDiv(Box::new(l), Box::new(r))
    }

    pub fn rdiv(l: Formula, r: Formula) -> Formula {
        Formula::RDiv(Box::new(l), Box::new(r))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn children(&self) -> (Option<&Formula>, Option<&Formula>) {
        match self {
            Formula::Bot | Formula::Top | Formula::One | Formula::Var(_) => (None, None),
            Formula::Bang(_, a) => (Some(a), None),
            Formula::Prod(a, b)
            | Formula::LDiv(a, b)
            | Formula::RDiv(a, b)
            | Formula::And(a, b)
            | Formula::Or(a, b) => (Some(a), Some(b)),
        }
    }

    /// Node count.
    pub fn size(&self) -> usize {
        let (l, r) = self.children();
        1 + l.map_or(0, Formula::size) + r.map_or(0, Formula::size)
    }

    pub fn depth(&self) -> usize {
        let (l, r) = self.children();
        1 + l.map_or(0, Formula::depth).max(r.map_or(0, Formula::depth))
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        if let Formula::Var(v) = self {
            out.insert(v.clone());
        }
        let (l, r) = self.children();
        if let Some(l) = l {
            l.collect_vars(out);
        }
        if let Some(r) = r {
            r.collect_vars(out);
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_subformulas<'a>(&'a self, out: &mut BTreeSet<&'a Formula>) {
        out.insert(self);
        let (l, r) = self.children();
        if let Some(l) = l {
            l.collect_subformulas(out);
        }
        if let Some(r) = r {
            r.collect_subformulas(out);
        }
    }

    /// Every `Bang` index must occur in `sig`.
    pub fn well_formed(&self, sig: &SubexpSignature) -> Result<(), UnknownIndex> {
        if let Formula::Bang(i, _) = self {
            if sig.index_of(i).is_none() {
                return Err(UnknownIndex(i.clone()));
            }
        }
        let (l, r) = self.children();
        if let Some(l) = l {
            l.well_formed(sig)?;
        }
        if let Some(r) = r {
            r.well_formed(sig)?;
        }
        Ok(())
    }

    /// Replaces every occurrence of `Var(var)` by `with`.
    pub fn substitute(&self, var: &str, with: &Formula) -> Formula {
        match self {
            Formula::Var(v) if v == var => with.clone(),
            Formula::Bot | Formula::Top | Formula::One | Formula::Var(_) => self.clone(),
            Formula::Bang(i, a) => Formula::Bang(i.clone(), Box::new(a.substitute(var, with))),
            Formula::Prod(a, b) => {
                Formula::prod(a.substitute(var, with), b.substitute(var, with))
            }
            Formula::LDiv(a, b) => {
                Formula::ldiv(a.substitute(var, with), b.substitute(var, with))
            }
            Formula::RDiv(a, b) => {
                Formula::rdiv(a.substitute(var, with), b.substitute(var, with))
            }
            Formula::And(a, b) => Formula::and(a.substitute(var, with), b.substitute(var, with)),
            Formula::Or(a, b) => Formula::or(a.substitute(var, with), b.substitute(var, with)),
        }
    }

    /// Simultaneous substitution.
    pub fn substitute_map(&self, map: &BTreeMap<String, Formula>) -> Formula {
        match self {
            Formula::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Formula::Bot | Formula::Top | Formula::One => self.clone(),
            Formula::Bang(i, a) => Formula::Bang(i.clone(), Box::new(a.substitute_map(map))),
            Formula::Prod(a, b) => Formula::prod(a.substitute_map(map), b.substitute_map(map)),
            Formula::LDiv(a, b) => Formula::ldiv(a.substitute_map(map), b.substitute_map(map)),
            Formula::RDiv(a, b) => Formula::rdiv(a.substitute_map(map), b.substitute_map(map)),
            Formula::And(a, b) => Formula::and(a.substitute_map(map), b.substitute_map(map)),
            Formula::Or(a, b) => Formula::or(a.substitute_map(map), b.substitute_map(map)),
        }
    }

    /// Renames `Bang` indices through `map` (used to instantiate schema
    /// index metavariables).
    pub fn rename_indices(&self, map: &BTreeMap<String, String>) -> Formula {
        match self {
            Formula::Bang(i, a) => {
                let i = map.get(i).cloned().unwrap_or_else(|| i.clone());
                Formula::Bang(i, Box::new(a.rename_indices(map)))
            }
            Formula::Bot | Formula::Top | Formula::One | Formula::Var(_) => self.clone(),
            Formula::Prod(a, b) => Formula::prod(a.rename_indices(map), b.rename_indices(map)),
            Formula::LDiv(a, b) => Formula::ldiv(a.rename_indices(map), b.rename_indices(map)),
            Formula::RDiv(a, b) => Formula::rdiv(a.rename_indices(map), b.rename_indices(map)),
            Formula::And(a, b) => Formula::and(a.rename_indices(map), b.rename_indices(map)),
            Formula::Or(a, b) => Formula::or(a.rename_indices(map), b.rename_indices(map)),
        }
    }

    fn level(&self) -> u8 {
        match self {
            Formula::Or(..) => 0,
            Formula::And(..) => 1,
            Formula::LDiv(..) | Formula::RDiv(..) => 2,
            Formula::Prod(..) => 3,
            Formula::Bang(..) => 4,
            _ => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_level: u8) -> fmt::Result {
        let me = self.level();
        if me < min_level {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Formula::Bot => write!(f, "F"),
            Formula::Top => write!(f, "T"),
            Formula::One => write!(f, "1"),
            Formula::Var(v) => write!(f, "{v}"),
            Formula::Bang(i, a) => {
                write!(f, "![{i}]")?;
                a.fmt_at(f, 4)
            }
            Formula::Prod(a, b) => {
                a.fmt_at(f, 3)?;
                write!(f, " * ")?;
                b.fmt_at(f, 4)
            }
            Formula::LDiv(a, b) => {
                a.fmt_at(f, 3)?;
                write!(f, " \\ ")?;
                b.fmt_at(f, 3)
            }
            Formula::RDiv(a, b) => {
                a.fmt_at(f, 3)?;
                write!(f, " / ")?;
                b.fmt_at(f, 3)
            }
            Formula::And(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " /\\ ")?;
                b.fmt_at(f, 2)
            }
            Formula::Or(a, b) => {
                a.fmt_at(f, 0)?;
                write!(f, " \\/ ")?;
                b.fmt_at(f, 1)
            }
        }
    }
}

impl fmt::Display for Formula {
    /// Canonical printing; round-trips through [`super::parse_formula`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// A pair of formulas `lhs |- rhs`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sequent {
    pub lhs: Formula,
    pub rhs: Formula,
}

impl Sequent {
    pub fn new(lhs: Formula, rhs: Formula) -> Self {
        Sequent { lhs, rhs }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.lhs.collect_vars(&mut out);
        self.rhs.collect_vars(&mut out);
        out
    }

    pub fn well_formed(&self, sig: &SubexpSignature) -> Result<(), UnknownIndex> {
        self.lhs.well_formed(sig)?;
        self.rhs.well_formed(sig)
    }

    pub fn substitute(&self, var: &str, with: &Formula) -> Sequent {
        Sequent::new(self.lhs.substitute(var, with), self.rhs.substitute(var, with))
    }

    pub fn substitute_map(&self, map: &BTreeMap<String, Formula>) -> Sequent {
        Sequent::new(self.lhs.substitute_map(map), self.rhs.substitute_map(map))
    }

    pub fn subformulas(&self) -> Vec<&Formula> {
        let mut set = BTreeSet::new();
        self.lhs.collect_subformulas(&mut set);
        self.rhs.collect_subformulas(&mut set);
        set.into_iter().collect()
    }

    pub fn max_formula_size(&self) -> usize {
        self.lhs.size().max(self.rhs.size())
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} |- {}", self.lhs, self.rhs)
    }
}
