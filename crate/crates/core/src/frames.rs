//! Ternary Kripke frames with indexed accessibility preorders, their
//! complex algebras, models and the truth relation.
//!
//! World sets are bitmasks (`u64`), so frames are capped at 64 worlds; the
//! conditions that quantify over upsets go through [`crate::order::upsets`]
//! and inherit its much smaller cap.
//!
//! Structures here are plain data: constructors do not validate, the
//! `check_*` functions report every violated condition with a witness.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::algebra::{AssembleError, FiniteSigmaAlgebra};
use crate::order::{lattice_from_poset, upsets, FinitePoset, SizeCapExceeded};
use crate::syntax::{Formula, Sequent, SubexpSignature};

/// A ternary Kripke frame: a world poset, a ternary relation interpreting
/// the product, and a distinguished upset interpreting the unit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TernaryFrame {
    pub poset: FinitePoset,
    /// Row-major `n^3`: entry `(u*n + v)*n + w` is `R u v w`.
    pub r: Vec<bool>,
    /// Bitmask of unit worlds.
    pub o: u64,
}

impl TernaryFrame {
    #[inline]
    pub fn len(&self) -> usize {
        self.poset.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.poset.is_empty()
    }

    #[inline]
    pub fn r(&self, u: usize, v: usize, w: usize) -> bool {
        let n = self.len();
        self.r[(u * n + v) * n + w]
    }

    /// `{ w : R u v w }` as a bitmask.
    pub fn r_mask(&self, u: usize, v: usize) -> u64 {
        let n = self.len();
        let mut m = 0u64;
        for w in 0..n {
            if self.r[(u * n + v) * n + w] {
                m |= 1 << w;
            }
        }
        m
    }

    /// Complex product of two world sets.
    pub fn prod_mask(&self, a: u64, b: u64) -> u64 {
        let n = self.len();
        let mut out = 0u64;
        for u in 0..n {
            if a & (1 << u) == 0 {
                continue;
            }
            for v in 0..n {
                if b & (1 << v) != 0 {
                    out |= self.r_mask(u, v);
                }
            }
        }
        out
    }

    /// `a \ b = { w : (R u w v and u in a) implies v in b }`.
    pub fn ldiv_mask(&self, a: u64, b: u64) -> u64 {
        let n = self.len();
        let mut out = 0u64;
        'world: for w in 0..n {
            for u in 0..n {
                if a & (1 << u) == 0 {
                    continue;
                }
                if self.r_mask(u, w) & !b != 0 {
                    continue 'world;
                }
            }
            out |= 1 << w;
        }
        out
    }

    /// Relabels worlds by `perm` (`perm[old] = new`).
    pub fn relabel(&self, perm: &[usize]) -> TernaryFrame {
        let n = self.len();
        let mut r = vec![false; n * n * n];
        for u in 0..n {
            for v in 0..n {
                for w in 0..n {
                    if self.r(u, v, w) {
                        r[(perm[u] * n + perm[v]) * n + perm[w]] = true;
                    }
                }
            }
        }
        let mut o = 0u64;
        for w in 0..n {
            if self.o & (1 << w) != 0 {
                o |= 1 << perm[w];
            }
        }
        TernaryFrame { poset: self.poset.relabel(perm), r, o }
    }

    /// `a / b = { w : (R w u v and u in b) implies v in a }`.
    pub fn rdiv_mask(&self, a: u64, b: u64) -> u64 {
        let n = self.len();
        let mut out = 0u64;
        'world: for w in 0..n {
            for u in 0..n {
                if b & (1 << u) == 0 {
                    continue;
                }
                if self.r_mask(w, u) & !a != 0 {
                    continue 'world;
                }
            }
            out |= 1 << w;
        }
        out
    }
}

/// A ternary frame expanded with one accessibility preorder per
/// subexponential index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SigmaFrame {
    pub base: TernaryFrame,
    /// Per signature index, row-major `n^2`.
    pub ri: Vec<Vec<bool>>,
    pub sig: SubexpSignature,
}

impl SigmaFrame {
    #[inline]
    pub fn len(&self) -> usize {
        self.base.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    #[inline]
    pub fn ri(&self, index: usize, u: usize, w: usize) -> bool {
        self.ri[index][u * self.len() + w]
    }

    /// Relabels worlds by `perm` (`perm[old] = new`).
    pub fn relabel(&self, perm: &[usize]) -> SigmaFrame {
        let n = self.len();
        let mut ri = Vec::with_capacity(self.ri.len());
        for rel in &self.ri {
            let mut out = vec![false; n * n];
            for u in 0..n {
                for w in 0..n {
                    if rel[u * n + w] {
                        out[perm[u] * n + perm[w]] = true;
                    }
                }
            }
            ri.push(out);
        }
        SigmaFrame { base: self.base.relabel(perm), ri, sig: self.sig.clone() }
    }

    /// `[R_i] a = { u : every R_i-successor of u lies in a }`.
    pub fn box_mask(&self, index: usize, a: u64) -> u64 {
        let n = self.len();
        let mut out = 0u64;
        'world: for u in 0..n {
            for w in 0..n {
                if self.ri[index][u * n + w] && a & (1 << w) == 0 {
                    continue 'world;
                }
            }
            out |= 1 << u;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrameViolation {
    /// Monotonicity in argument `arg` (0, 1 downward; 2 upward) fails:
    /// `from` is related, `to` is the forced triple that is not.
    RNotMonotone { arg: u8, from: (usize, usize, usize), to: (usize, usize, usize) },
    /// The two sides of the associativity condition differ on this tuple.
    NotAssociative { u: usize, w: usize, u2: usize, v2: usize },
    ONotUpwardClosed { member: usize, above: usize },
    /// `v <= w` but no unit world relates them as `R v o w`.
    UnitRightMissing { v: usize, w: usize },
    /// `R v o w` for a unit world `o` although `v <= w` fails.
    UnitRightExcess { v: usize, o: usize, w: usize },
    /// `v <= w` but no unit world relates them as `R o v w`.
    UnitLeftMissing { v: usize, w: usize },
    /// `R o v w` for a unit world `o` although `v <= w` fails.
    UnitLeftExcess { o: usize, v: usize, w: usize },
    RiNotReflexive { index: usize, u: usize },
    RiNotTransitive { index: usize, u: usize, v: usize, w: usize },
    /// Promotion condition: no witnesses `x, y` for this configuration.
    PromotionFails { i: usize, j: usize, k: usize, u: usize, v: usize, w: usize, w2: usize },
    /// `i preceq j` requires `R_i` to be contained in `R_j`.
    OrderCompatFails { i: usize, j: usize, u: usize, w: usize },
    /// `O` is not contained in `[R_i] O`.
    BoxUnitFails { index: usize, witness: usize },
    ExchangeFails { index: usize, a: u64, b: u64 },
    ContractionFails { index: usize, a: u64, b: u64, right: bool },
    WeakeningFails { index: usize, a: u64 },
}

impl fmt::Display for FrameViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use FrameViolation::*;
        match self {
            RNotMonotone { arg, from, to } => {
                write!(f, "R not monotone in argument {arg}: {from:?} holds but {to:?} does not")
            }
            NotAssociative { u, w, u2, v2 } => {
                write!(f, "associativity condition fails at (u={u}, w={w}, u'={u2}, v'={v2})")
            }
            ONotUpwardClosed { member, above } => {
                write!(f, "O is not upward closed: {member} in O but {above} above it is not")
            }
            UnitRightMissing { v, w } => {
                write!(f, "{v} <= {w} but no o in O gives R {v} o {w}")
            }
            UnitRightExcess { v, o, w } => {
                write!(f, "R {v} {o} {w} with {o} in O although {v} <= {w} fails")
            }
            UnitLeftMissing { v, w } => {
                write!(f, "{v} <= {w} but no o in O gives R o {v} {w}")
            }
            UnitLeftExcess { o, v, w } => {
                write!(f, "R {o} {v} {w} with {o} in O although {v} <= {w} fails")
            }
            RiNotReflexive { index, u } => write!(f, "R[{index}] is not reflexive at {u}"),
            RiNotTransitive { index, u, v, w } => {
                write!(f, "R[{index}] is not transitive at ({u}, {v}, {w})")
            }
            PromotionFails { i, j, k, u, v, w, w2 } => write!(
                f,
                "promotion condition fails for (i={i}, j={j}, k={k}) at R {u} {v} {w}, {w} R[{k}] {w2}"
            ),
            OrderCompatFails { i, j, u, w } => {
                write!(f, "index {i} preceq {j} but ({u}, {w}) is in R[{i}] and not in R[{j}]")
            }
            BoxUnitFails { index, witness } => {
                write!(f, "O not contained in [R{index}]O: witness {witness}")
            }
            ExchangeFails { index, a, b } => {
                write!(f, "[R{index}]A.B = B.[R{index}]A fails at masks ({a:#x}, {b:#x})")
            }
            ContractionFails { index, a, b, right } => {
                let side = if *right { "right" } else { "left" };
                write!(f, "{side} contraction condition for R[{index}] fails at masks ({a:#x}, {b:#x})")
            }
            WeakeningFails { index, a } => {
                write!(f, "[R{index}]A contained in O fails at mask {a:#x}")
            }
        }
    }
}

/// Checks every ternary-frame condition: monotonicity of `R`, the
/// associativity condition, upward closure of `O`, and the two-sided unit
/// characterization `v <= w` iff some `o in O` gives `R v o w` iff some
/// gives `R o v w`.
pub fn check_ternary_frame(frame: &TernaryFrame) -> Vec<FrameViolation> {
    let n = frame.len();
    let p = &frame.poset;
    let mut out = Vec::new();

    for u in 0..n {
        for v in 0..n {
            for w in 0..n {
                if !frame.r(u, v, w) {
                    continue;
                }
                for x in 0..n {
                    if p.le(x, u) && !frame.r(x, v, w) {
                        out.push(FrameViolation::RNotMonotone {
                            arg: 0,
                            from: (u, v, w),
                            to: (x, v, w),
                        });
                    }
                    if p.le(x, v) && !frame.r(u, x, w) {
                        out.push(FrameViolation::RNotMonotone {
                            arg: 1,
                            from: (u, v, w),
                            to: (u, x, w),
                        });
                    }
                    if p.le(w, x) && !frame.r(u, v, x) {
                        out.push(FrameViolation::RNotMonotone {
                            arg: 2,
                            from: (u, v, w),
                            to: (u, v, x),
                        });
                    }
                }
            }
        }
    }

    for u in 0..n {
        for w in 0..n {
            for u2 in 0..n {
                let mut lhs = 0u64;
                let mut rhs = 0u64;
                for x in 0..n {
                    if frame.r(u, w, x) {
                        lhs |= frame.r_mask(x, u2);
                    }
                    if frame.r(w, u2, x) {
                        rhs |= frame.r_mask(u, x);
                    }
                }
                if lhs != rhs {
                    for v2 in 0..n {
                        if (lhs ^ rhs) & (1 << v2) != 0 {
                            out.push(FrameViolation::NotAssociative { u, w, u2, v2 });
                        }
                    }
                }
            }
        }
    }

    for member in 0..n {
        if frame.o & (1 << member) == 0 {
            continue;
        }
        for above in 0..n {
            if p.le(member, above) && frame.o & (1 << above) == 0 {
                out.push(FrameViolation::ONotUpwardClosed { member, above });
            }
        }
    }

    for v in 0..n {
        for w in 0..n {
            let le = p.le(v, w);
            let right = (0..n).find(|&o| frame.o & (1 << o) != 0 && frame.r(v, o, w));
            let left = (0..n).find(|&o| frame.o & (1 << o) != 0 && frame.r(o, v, w));
            match (le, right) {
                (true, None) => out.push(FrameViolation::UnitRightMissing { v, w }),
                (false, Some(o)) => out.push(FrameViolation::UnitRightExcess { v, o, w }),
                _ => {}
            }
            match (le, left) {
                (true, None) => out.push(FrameViolation::UnitLeftMissing { v, w }),
                (false, Some(o)) => out.push(FrameViolation::UnitLeftExcess { o, v, w }),
                _ => {}
            }
        }
    }
    out
}

/// Checks every frame condition for the signature expansion on top of
/// [`check_ternary_frame`]: each `R_i` is a preorder compatible with the
/// index order, the promotion condition, `O` inside `[R_i]O`, and the
/// upset-quantified exchange/contraction/weakening conditions.
pub fn check_sigma_frame(frame: &SigmaFrame) -> Result<Vec<FrameViolation>, SizeCapExceeded> {
    let n = frame.len();
    let sig = &frame.sig;
    let mut out = check_ternary_frame(&frame.base);
    debug_assert_eq!(frame.ri.len(), sig.len());

    for (index, rel) in frame.ri.iter().enumerate() {
        for u in 0..n {
            if !rel[u * n + u] {
                out.push(FrameViolation::RiNotReflexive { index, u });
            }
            for v in 0..n {
                if !rel[u * n + v] {
                    continue;
                }
                for w in 0..n {
                    if rel[v * n + w] && !rel[u * n + w] {
                        out.push(FrameViolation::RiNotTransitive { index, u, v, w });
                    }
                }
            }
        }
    }

    for k in 0..sig.len() {
        for i in 0..sig.len() {
            for j in 0..sig.len() {
                if !(sig.le(k, i) && sig.le(k, j)) {
                    continue;
                }
                for u in 0..n {
                    for v in 0..n {
                        for w in 0..n {
                            if !frame.base.r(u, v, w) {
                                continue;
                            }
                            'succ: for w2 in 0..n {
                                if !frame.ri(k, w, w2) {
                                    continue;
                                }
                                for x in 0..n {
                                    if !frame.ri(i, u, x) {
                                        continue;
                                    }
                                    for y in 0..n {
                                        if frame.ri(j, v, y) && frame.base.r(x, y, w2) {
                                            continue 'succ;
                                        }
                                    }
                                }
                                out.push(FrameViolation::PromotionFails {
                                    i,
                                    j,
                                    k,
                                    u,
                                    v,
                                    w,
                                    w2,
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    for i in 0..sig.len() {
        for j in 0..sig.len() {
            if i == j || !sig.le(i, j) {
                continue;
            }
            for u in 0..n {
                for w in 0..n {
                    if frame.ri(i, u, w) && !frame.ri(j, u, w) {
                        out.push(FrameViolation::OrderCompatFails { i, j, u, w });
                    }
                }
            }
        }
    }

    for index in 0..sig.len() {
        let box_o = frame.box_mask(index, frame.base.o);
        let missing = frame.base.o & !box_o;
        for witness in 0..n {
            if missing & (1 << witness) != 0 {
                out.push(FrameViolation::BoxUnitFails { index, witness });
            }
        }
    }

    if (0..sig.len()).any(|i| sig.in_e(i) || sig.in_c(i) || sig.in_w(i)) {
        let ups = upsets(&frame.base.poset)?;
        for index in 0..sig.len() {
            if sig.in_e(index) {
                for &a in &ups {
                    let ba = frame.box_mask(index, a);
                    for &b in &ups {
                        if frame.base.prod_mask(ba, b) != frame.base.prod_mask(b, ba) {
                            out.push(FrameViolation::ExchangeFails { index, a, b });
                        }
                    }
                }
            }
            if sig.in_c(index) {
                for &a in &ups {
                    let ba = frame.box_mask(index, a);
                    for &b in &ups {
                        let bab = frame.base.prod_mask(frame.base.prod_mask(ba, b), ba);
                        if frame.base.prod_mask(ba, b) & !bab != 0 {
                            out.push(FrameViolation::ContractionFails {
                                index,
                                a,
                                b,
                                right: false,
                            });
                        }
                        if frame.base.prod_mask(b, ba) & !bab != 0 {
                            out.push(FrameViolation::ContractionFails {
                                index,
                                a,
                                b,
                                right: true,
                            });
                        }
                    }
                }
            }
            if sig.in_w(index) {
                for &a in &ups {
                    if frame.box_mask(index, a) & !frame.base.o != 0 {
                        out.push(FrameViolation::WeakeningFails { index, a });
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    NotAnUpset { var: String },
    WorldOutOfRange { var: String },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::NotAnUpset { var } => {
                write!(f, "valuation of '{var}' is not upward closed")
            }
            ModelError::WorldOutOfRange { var } => {
                write!(f, "valuation of '{var}' mentions a world out of range")
            }
        }
    }
}

/// A frame with an upset-valued valuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub frame: SigmaFrame,
    pub valuation: BTreeMap<String, u64>,
}

impl Model {
    pub fn new(frame: SigmaFrame, valuation: BTreeMap<String, u64>) -> Result<Self, ModelError> {
        let full = frame.base.poset.full_mask();
        for (var, &mask) in &valuation {
            if mask & !full != 0 {
                return Err(ModelError::WorldOutOfRange { var: var.clone() });
            }
            if !frame.base.poset.is_upset(mask) {
                return Err(ModelError::NotAnUpset { var: var.clone() });
            }
        }
        Ok(Model { frame, valuation })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    UnboundVariable(String),
    UnknownIndex(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::UnboundVariable(v) => write!(f, "unbound variable '{v}'"),
            EvalError::UnknownIndex(i) => write!(f, "unknown subexponential index '{i}'"),
        }
    }
}

/// The truth set of a formula, by structural recursion.
pub fn eval(model: &Model, formula: &Formula) -> Result<u64, EvalError> {
    let f = &model.frame;
    Ok(match formula {
        Formula::Bot => 0,
        Formula::Top => f.base.poset.full_mask(),
        Formula::One => f.base.o,
        Formula::Var(v) => *model
            .valuation
            .get(v)
            .ok_or_else(|| EvalError::UnboundVariable(v.clone()))?,
        Formula::Bang(i, a) => {
            let ix = f.sig.index_of(i).ok_or_else(|| EvalError::UnknownIndex(i.clone()))?;
            f.box_mask(ix, eval(model, a)?)
        }
        Formula::Prod(a, b) => f.base.prod_mask(eval(model, a)?, eval(model, b)?),
        Formula::LDiv(a, b) => f.base.ldiv_mask(eval(model, a)?, eval(model, b)?),
        Formula::RDiv(a, b) => f.base.rdiv_mask(eval(model, a)?, eval(model, b)?),
        Formula::And(a, b) => eval(model, a)? & eval(model, b)?,
        Formula::Or(a, b) => eval(model, a)? | eval(model, b)?,
    })
}

/// Truth-set inclusion: the sequent holds in the model iff the left truth
/// set is contained in the right one.
pub fn sequent_holds(model: &Model, sequent: &Sequent) -> Result<bool, EvalError> {
    Ok(eval(model, &sequent.lhs)? & !eval(model, &sequent.rhs)? == 0)
}

/// Pointwise form: at world `w` the sequent holds when truth of the left
/// side implies truth of the right side.
pub fn sequent_holds_at(model: &Model, sequent: &Sequent, w: usize) -> Result<bool, EvalError> {
    let bit = 1u64 << w;
    Ok(eval(model, &sequent.lhs)? & bit == 0 || eval(model, &sequent.rhs)? & bit != 0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidityError {
    SizeCap(SizeCapExceeded),
    Eval(EvalError),
    /// The number of valuations to try exceeds the cap.
    TooManyValuations { combinations: u128, cap: u128 },
}

impl fmt::Display for ValidityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidityError::SizeCap(e) => write!(f, "{e}"),
            ValidityError::Eval(e) => write!(f, "{e}"),
            ValidityError::TooManyValuations { combinations, cap } => {
                write!(f, "{combinations} valuations exceed the cap of {cap}")
            }
        }
    }
}

impl From<SizeCapExceeded> for ValidityError {
    fn from(e: SizeCapExceeded) -> Self {
        ValidityError::SizeCap(e)
    }
}

impl From<EvalError> for ValidityError {
    fn from(e: EvalError) -> Self {
        ValidityError::Eval(e)
    }
}

pub const FRAME_VALUATION_CAP: u128 = 4_000_000;

/// Frame validity: the sequent holds under every assignment of upsets to
/// its variables.
pub fn frame_validates(frame: &SigmaFrame, sequent: &Sequent) -> Result<bool, ValidityError> {
    match falsifying_valuation(frame, sequent)? {
        None => Ok(true),
        Some(_) => Ok(false),
    }
}

/// First valuation (in canonical upset order) falsifying the sequent, if
/// any, together with a witness world.
pub fn falsifying_valuation(
    frame: &SigmaFrame,
    sequent: &Sequent,
) -> Result<Option<(Model, usize)>, ValidityError> {
    let vars: Vec<String> = sequent.vars().into_iter().collect();
    let ups = upsets(&frame.base.poset)?;
    let combos = (ups.len() as u128).checked_pow(vars.len() as u32).unwrap_or(u128::MAX);
    if combos > FRAME_VALUATION_CAP {
        return Err(ValidityError::TooManyValuations { combinations: combos, cap: FRAME_VALUATION_CAP });
    }
    let mut pick = vec![0usize; vars.len()];
    loop {
        let valuation: BTreeMap<String, u64> =
            vars.iter().zip(&pick).map(|(v, &k)| (v.clone(), ups[k])).collect();
        let model = Model { frame: frame.clone(), valuation };
        let lhs = eval(&model, &sequent.lhs)?;
        let rhs = eval(&model, &sequent.rhs)?;
        if lhs & !rhs != 0 {
            let witness = (lhs & !rhs).trailing_zeros() as usize;
            return Ok(Some((model, witness)));
        }
        if vars.is_empty() {
            return Ok(None);
        }
        let mut pos = 0;
        loop {
            pick[pos] += 1;
            if pick[pos] < ups.len() {
                break;
            }
            pick[pos] = 0;
            pos += 1;
            if pos == vars.len() {
                return Ok(None);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ComplexAlgebraError {
    SizeCap(SizeCapExceeded),
    /// Only possible when the frame violates its conditions.
    NotAnAlgebra(AssembleError),
}

impl fmt::Display for ComplexAlgebraError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComplexAlgebraError::SizeCap(e) => write!(f, "{e}"),
            ComplexAlgebraError::NotAnAlgebra(e) => write!(f, "complex algebra is ill-formed: {e}"),
        }
    }
}

/// The complex algebra of a frame: upsets ordered by inclusion, product,
/// residuals and boxes defined relationally, unit `O`. Returns the algebra
/// together with its carrier (element id -> upset mask).
///
/// On a frame passing [`check_sigma_frame`] this never fails and the result
/// passes the algebra checker.
pub fn complex_algebra(
    frame: &SigmaFrame,
) -> Result<(FiniteSigmaAlgebra, Vec<u64>), ComplexAlgebraError> {
    let ups = upsets(&frame.base.poset).map_err(ComplexAlgebraError::SizeCap)?;
    let m = ups.len();
    let id_of: BTreeMap<u64, usize> = ups.iter().enumerate().map(|(k, &u)| (u, k)).collect();
    let mut leq = vec![false; m * m];
    for a in 0..m {
        for b in 0..m {
            leq[a * m + b] = ups[a] & !ups[b] == 0;
        }
    }
    let poset = FinitePoset::new(m, leq).expect("inclusion orders upsets");
    let lattice = lattice_from_poset(&poset)
        .expect("upsets are closed under union and intersection");
    let lookup = |mask: u64| id_of[&mask];
    let mut prod = vec![0usize; m * m];
    let mut ldiv = vec![0usize; m * m];
    let mut rdiv = vec![0usize; m * m];
    for a in 0..m {
        for b in 0..m {
            prod[a * m + b] = lookup(frame.base.prod_mask(ups[a], ups[b]));
            ldiv[a * m + b] = lookup(frame.base.ldiv_mask(ups[a], ups[b]));
            rdiv[a * m + b] = lookup(frame.base.rdiv_mask(ups[a], ups[b]));
        }
    }
    let mut bang = Vec::with_capacity(frame.sig.len());
    for i in 0..frame.sig.len() {
        bang.push((0..m).map(|a| lookup(frame.box_mask(i, ups[a]))).collect());
    }
    let unit = lookup(frame.base.o);
    let algebra = FiniteSigmaAlgebra::assemble_with_residuals(
        lattice,
        prod,
        unit,
        bang,
        frame.sig.clone(),
        ldiv,
        rdiv,
    )
    .map_err(ComplexAlgebraError::NotAnAlgebra)?;
    Ok((algebra, ups))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DualityFailure {
    CarrierMismatch { algebra: usize, upsets: usize },
    NotInjective { a: usize, b: usize },
    NotSurjective { mask: u64 },
    /// The embedding fails to commute with an operation; `b` is absent for
    /// the unary and constant cases.
    OpMismatch { op: String, a: usize, b: Option<usize>, expected: u64, got: u64 },
    Cm(ComplexAlgebraError),
}

impl fmt::Display for DualityFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DualityFailure::CarrierMismatch { algebra, upsets } => {
                write!(f, "algebra has {algebra} elements, dual frame has {upsets} upsets")
            }
            DualityFailure::NotInjective { a, b } => {
                write!(f, "elements {a} and {b} map to the same upset")
            }
            DualityFailure::NotSurjective { mask } => {
                write!(f, "upset {mask:#x} is not the image of any element")
            }
            DualityFailure::OpMismatch { op, a, b, expected, got } => match b {
                Some(b) => write!(
                    f,
                    "{op} does not commute with the embedding at ({a}, {b}): expected {expected:#x}, got {got:#x}"
                ),
                None => write!(
                    f,
                    "{op} does not commute with the embedding at {a}: expected {expected:#x}, got {got:#x}"
                ),
            },
            DualityFailure::Cm(e) => write!(f, "{e}"),
        }
    }
}

/// Verifies that the algebra is isomorphic to the complex algebra of its
/// atom structure, through the map sending an element to the set of
/// join-irreducibles below it. Checks bijectivity and commutation with
/// every operation and constant.
pub fn duality_check(algebra: &FiniteSigmaAlgebra) -> Result<(), DualityFailure> {
    let at = algebra.atom_structure();
    let (cm, carrier) = complex_algebra(&at).map_err(DualityFailure::Cm)?;
    let n = algebra.len();
    if cm.len() != n || carrier.len() != n {
        return Err(DualityFailure::CarrierMismatch { algebra: n, upsets: carrier.len() });
    }
    let ji = algebra.lattice().join_irreducibles();
    let eta = |a: usize| -> u64 {
        let mut mask = 0u64;
        for (w, &j) in ji.iter().enumerate() {
            if algebra.lattice().le(j, a) {
                mask |= 1 << w;
            }
        }
        mask
    };
    let mut image: BTreeMap<u64, usize> = BTreeMap::new();
    for a in 0..n {
        if let Some(&prev) = image.get(&eta(a)) {
            return Err(DualityFailure::NotInjective { a: prev, b: a });
        }
        image.insert(eta(a), a);
    }
    let id_of: BTreeMap<u64, usize> = carrier.iter().enumerate().map(|(k, &u)| (u, k)).collect();
    for &mask in &carrier {
        if !image.contains_key(&mask) {
            return Err(DualityFailure::NotSurjective { mask });
        }
    }

    let check_const = |op: &str, a_elem: usize, cm_elem: usize| -> Result<(), DualityFailure> {
        let expected = eta(a_elem);
        let got = carrier[cm_elem];
        if expected != got {
            return Err(DualityFailure::OpMismatch {
                op: String::from(op),
                a: a_elem,
                b: None,
                expected,
                got,
            });
        }
        Ok(())
    };
    check_const("unit", algebra.unit(), cm.unit())?;
    check_const("top", algebra.lattice().top(), cm.lattice().top())?;
    check_const("bot", algebra.lattice().bot(), cm.lattice().bot())?;

    for a in 0..n {
        for b in 0..n {
            let pairs: [(&str, usize, usize); 5] = [
                ("meet", algebra.lattice().meet(a, b), {
                    let (x, y) = (id_of[&eta(a)], id_of[&eta(b)]);
                    cm.lattice().meet(x, y)
                }),
                ("join", algebra.lattice().join(a, b), {
                    let (x, y) = (id_of[&eta(a)], id_of[&eta(b)]);
                    cm.lattice().join(x, y)
                }),
                ("prod", algebra.prod(a, b), {
                    let (x, y) = (id_of[&eta(a)], id_of[&eta(b)]);
                    cm.prod(x, y)
                }),
                ("ldiv", algebra.ldiv(a, b), {
                    let (x, y) = (id_of[&eta(a)], id_of[&eta(b)]);
                    cm.ldiv(x, y)
                }),
                ("rdiv", algebra.rdiv(a, b), {
                    let (x, y) = (id_of[&eta(a)], id_of[&eta(b)]);
                    cm.rdiv(x, y)
                }),
            ];
            for (op, alg_res, cm_res) in pairs {
                let expected = eta(alg_res);
                let got = carrier[cm_res];
                if expected != got {
                    return Err(DualityFailure::OpMismatch {
                        op: String::from(op),
                        a,
                        b: Some(b),
                        expected,
                        got,
                    });
                }
            }
        }
        for i in 0..algebra.sig().len() {
            let expected = eta(algebra.bang(i, a));
            let got = carrier[cm.bang(i, id_of[&eta(a)])];
            if expected != got {
                return Err(DualityFailure::OpMismatch {
                    op: alloc::format!("bang[{i}]"),
                    a,
                    b: None,
                    expected,
                    got,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, parse_sequent};

    /// One world, R = {(0,0,0)}, O = {0}, R_i = identity.
    pub(crate) fn one_point_frame(sig: &SubexpSignature) -> SigmaFrame {
        SigmaFrame {
            base: TernaryFrame {
                poset: FinitePoset::chain(1),
                r: vec![true],
                o: 1,
            },
            ri: vec![vec![true]; sig.len()],
            sig: sig.clone(),
        }
    }

    fn sig() -> SubexpSignature {
        SubexpSignature::trivial("a")
    }

    #[test]
    fn one_point_frame_is_valid() {
        let f = one_point_frame(&sig());
        assert!(check_sigma_frame(&f).unwrap().is_empty());
    }

    #[test]
    fn empty_o_violates_the_unit_condition() {
        let mut f = one_point_frame(&sig());
        f.base.o = 0;
        let violations = check_sigma_frame(&f).unwrap();
        assert!(violations.contains(&FrameViolation::UnitRightMissing { v: 0, w: 0 }));
    }

    #[test]
    fn bad_ri_relations_are_reported() {
        let poset = FinitePoset::chain(2);
        // R from the join semilattice with O = both worlds
        let mut r = vec![false; 8];
        for u in 0..2 {
            for v in 0..2 {
                for w in 0..2 {
                    if w >= u.max(v) {
                        r[(u * 2 + v) * 2 + w] = true;
                    }
                }
            }
        }
        let base = TernaryFrame { poset, r, o: 0b11 };
        assert!(check_ternary_frame(&base).is_empty());
        let f = SigmaFrame {
            base,
            ri: vec![vec![true, true, true, false]], // (1,1) missing
            sig: sig(),
        };
        let violations = check_sigma_frame(&f).unwrap();
        assert!(violations.iter().any(|v| matches!(v, FrameViolation::RiNotReflexive { u: 1, .. })));

        // transitivity needs three worlds: chain with R w >= max(u, v)
        let poset3 = FinitePoset::chain(3);
        let mut r3 = vec![false; 27];
        for u in 0..3 {
            for v in 0..3 {
                for w in 0..3 {
                    if w >= u.max(v) {
                        r3[(u * 3 + v) * 3 + w] = true;
                    }
                }
            }
        }
        let base3 = TernaryFrame { poset: poset3, r: r3, o: 0b111 };
        assert!(check_ternary_frame(&base3).is_empty());
        let mut rel = vec![false; 9];
        for u in 0..3 {
            rel[u * 3 + u] = true;
        }
        rel[1] = true; // 0 -> 1
        rel[5] = true; // 1 -> 2, but 0 -> 2 is missing
        let f3 = SigmaFrame { base: base3, ri: vec![rel], sig: sig() };
        let violations = check_sigma_frame(&f3).unwrap();
        assert!(violations.contains(&FrameViolation::RiNotTransitive { index: 0, u: 0, v: 1, w: 2 }));
    }

    #[test]
    fn eval_matches_clauses_on_the_one_point_model() {
        let s = sig();
        let f = one_point_frame(&s);
        let mut valuation = BTreeMap::new();
        valuation.insert(String::from("p"), 1u64);
        valuation.insert(String::from("q"), 0u64);
        let m = Model::new(f, valuation).unwrap();
        let cases = [
            ("p * p", 1u64),
            ("T", 1),
            ("F", 0),
            ("1", 1),
            ("p /\\ q", 0),
            ("p \\/ q", 1),
            ("![a]p", 1),
            ("![a]q", 0),
            ("p \\ q", 0),
            ("q / p", 0),
            ("p \\ p", 1),
        ];
        for (text, expect) in cases {
            let formula = parse_formula(text, &s).unwrap();
            assert_eq!(eval(&m, &formula), Ok(expect), "{text}");
        }
        assert_eq!(
            sequent_holds(&m, &parse_sequent("p |- T", &s).unwrap()),
            Ok(true)
        );
        assert_eq!(
            sequent_holds(&m, &parse_sequent("p |- q", &s).unwrap()),
            Ok(false)
        );
        // pointwise and truth-set forms agree
        for (text, expect) in [("p |- q", false), ("p |- T", true)] {
            let seq = parse_sequent(text, &s).unwrap();
            assert_eq!(sequent_holds_at(&m, &seq, 0), Ok(expect));
        }
    }

    #[test]
    fn frame_validity_on_the_one_point_frame() {
        let s = sig();
        let f = one_point_frame(&s);
        assert_eq!(frame_validates(&f, &parse_sequent("p |- ![a]p", &s).unwrap()), Ok(true));
        assert_eq!(frame_validates(&f, &parse_sequent("p |- q", &s).unwrap()), Ok(false));
        let (model, witness) =
            falsifying_valuation(&f, &parse_sequent("p |- q", &s).unwrap()).unwrap().unwrap();
        assert_eq!(witness, 0);
        assert_eq!(model.valuation["p"], 1);
        assert_eq!(model.valuation["q"], 0);
    }

    #[test]
    fn complex_algebra_of_the_one_point_frame() {
        let s = sig();
        let f = one_point_frame(&s);
        let (alg, carrier) = complex_algebra(&f).unwrap();
        assert_eq!(alg.len(), 2);
        assert_eq!(carrier, vec![0, 1]);
        assert!(alg.check().is_empty());
        // {w}.{w} = {w}, unit is O
        assert_eq!(alg.prod(1, 1), 1);
        assert_eq!(alg.unit(), 1);
        // empty . {w} = empty
        assert_eq!(alg.prod(0, 1), 0);
    }

    #[test]
    fn complex_product_matches_a_set_comprehension_oracle() {
        // 2-chain of worlds with R u v w iff w >= max(u, v), O = everything
        let poset = FinitePoset::chain(2);
        let mut r = vec![false; 8];
        for u in 0..2 {
            for v in 0..2 {
                for w in 0..2 {
                    if w >= u.max(v) {
                        r[(u * 2 + v) * 2 + w] = true;
                    }
                }
            }
        }
        let f = SigmaFrame {
            base: TernaryFrame { poset, r, o: 0b11 },
            ri: vec![vec![true, true, false, true]],
            sig: sig(),
        };
        assert!(check_sigma_frame(&f).unwrap().is_empty());
        let (alg, carrier) = complex_algebra(&f).unwrap();
        assert!(alg.check().is_empty());
        // oracle: direct triple scan per pair of upsets
        for (ai, &a) in carrier.iter().enumerate() {
            for (bi, &b) in carrier.iter().enumerate() {
                let mut direct = 0u64;
                for u in 0..2 {
                    for v in 0..2 {
                        for w in 0..2 {
                            if a & (1 << u) != 0 && b & (1 << v) != 0 && f.base.r(u, v, w) {
                                direct |= 1 << w;
                            }
                        }
                    }
                }
                assert_eq!(carrier[alg.prod(ai, bi)], direct);
            }
        }
    }

    #[test]
    fn heredity_of_truth_sets() {
        // on a valid frame every connective returns an upset
        let poset = FinitePoset::chain(2);
        let mut r = vec![false; 8];
        for u in 0..2 {
            for v in 0..2 {
                for w in 0..2 {
                    if w >= u.max(v) {
                        r[(u * 2 + v) * 2 + w] = true;
                    }
                }
            }
        }
        let s = sig();
        let f = SigmaFrame {
            base: TernaryFrame { poset, r, o: 0b11 },
            ri: vec![vec![true, true, false, true]],
            sig: s.clone(),
        };
        let formulas = [
            "p * q", "p \\ q", "q / p", "p /\\ q", "p \\/ q", "![a]p", "![a](p * q)", "1", "T",
            "F", "p \\ (q * p)",
        ];
        let ups = upsets(&f.base.poset).unwrap();
        for &pv in &ups {
            for &qv in &ups {
                let mut valuation = BTreeMap::new();
                valuation.insert(String::from("p"), pv);
                valuation.insert(String::from("q"), qv);
                let m = Model::new(f.clone(), valuation).unwrap();
                for text in formulas {
                    let formula = parse_formula(text, &s).unwrap();
                    let t = eval(&m, &formula).unwrap();
                    assert!(f.base.poset.is_upset(t), "{text} gave {t:#x}");
                }
            }
        }
    }

    #[test]
    fn duality_holds_on_small_algebras() {
        use crate::algebra::{standard_corpus_with, CorpusOptions};
        let corpus = standard_corpus_with(&CorpusOptions {
            max_lattice_size: 4,
            ..CorpusOptions::default()
        });
        assert!(corpus.len() > 20);
        for alg in &corpus {
            duality_check(alg).unwrap_or_else(|e| panic!("duality failed: {e}"));
        }
    }

    #[test]
    fn upset_cap_gates_only_the_upset_quantified_conditions() {
        // 13 worlds: over the upset-enumeration cap
        let n = 13;
        let poset = FinitePoset::antichain(n);
        let mut r = vec![false; n * n * n];
        for u in 0..n {
            for v in 0..n {
                for w in 0..n {
                    // intersection frame: R u v w iff w >= u and w >= v
                    if poset.le(u, w) && poset.le(v, w) {
                        r[(u * n + v) * n + w] = true;
                    }
                }
            }
        }
        let base = TernaryFrame { poset, r, o: (1 << n) - 1 };
        let id: Vec<bool> = (0..n * n).map(|k| k / n == k % n).collect();
        let plain = SigmaFrame {
            base: base.clone(),
            ri: vec![id.clone()],
            sig: SubexpSignature::trivial("a"),
        };
        // without structural indices no upset enumeration is needed
        assert!(check_sigma_frame(&plain).unwrap().is_empty());

        let weak = SubexpSignature::validate(&crate::syntax::RawSignature {
            indices: vec!["w".into()],
            w: vec!["w".into()],
            ..Default::default()
        })
        .unwrap();
        let gated = SigmaFrame { base, ri: vec![id], sig: weak };
        assert!(check_sigma_frame(&gated).is_err(), "weakening conditions need the upsets");
    }

    #[test]
    fn model_construction_validates_upsets() {
        let s = sig();
        let poset = FinitePoset::chain(2);
        let mut r = vec![false; 8];
        for u in 0..2 {
            for v in 0..2 {
                for w in 0..2 {
                    if w >= u.max(v) {
                        r[(u * 2 + v) * 2 + w] = true;
                    }
                }
            }
        }
        let f = SigmaFrame {
            base: TernaryFrame { poset, r, o: 0b11 },
            ri: vec![vec![true, false, false, true]],
            sig: s,
        };
        let mut valuation = BTreeMap::new();
        valuation.insert(String::from("p"), 0b01u64); // {0} is not an upset of the chain
        assert!(matches!(
            Model::new(f, valuation),
            Err(ModelError::NotAnUpset { .. })
        ));
    }
}
