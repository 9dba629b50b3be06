//! Finite residuated distributive lattices with interior operators, one per
//! subexponential index.
//!
//! An algebra is assembled from a lattice, a product table, a unit and the
//! operator tables; the residuals are synthesized from the product and the
//! residuation law rather than taken as input ([`residual_synthesize`]).
//! [`FiniteSigmaAlgebra::check`] evaluates every defining condition
//! exhaustively and returns violations as data.
//!
//! The module also carries the finite half of the duality machinery: atom
//! structures over the join-irreducible elements, the finite canonical
//! extension (which must be the identity), and brute-force enumeration of
//! small algebras used as a test corpus.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frames::{SigmaFrame, TernaryFrame};
use crate::order::{
    lattice_from_poset, permutations, FiniteDistributiveLattice, FinitePoset,
};
use crate::syntax::{Formula, SubexpSignature};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotResiduated {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl fmt::Display for NotResiduated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "product is not residuated: witness triple ({}, {}, {})",
            self.a, self.b, self.c
        )
    }
}

/// Computes the residual tables `a \ c = join {{ b : a.b <= c }}` and
/// `c / b = join {{ a : a.b <= c }}`, then verifies the three-way
/// residuation equivalence on every triple.
///
/// Both tables are written numerator-style: `ldiv[a][c]` is `a \ c`,
/// `rdiv[c][b]` is `c / b`.
pub fn residual_synthesize(
    lat: &FiniteDistributiveLattice,
    prod: &[usize],
) -> Result<(Vec<usize>, Vec<usize>), NotResiduated> {
    let n = lat.len();
    let mut ldiv = vec![0usize; n * n];
    let mut rdiv = vec![0usize; n * n];
    for a in 0..n {
        for c in 0..n {
            ldiv[a * n + c] = lat.join_all((0..n).filter(|&b| lat.le(prod[a * n + b], c)));
            rdiv[c * n + a] = lat.join_all((0..n).filter(|&x| lat.le(prod[x * n + a], c)));
        }
    }
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let holds = lat.le(prod[a * n + b], c);
                if lat.le(b, ldiv[a * n + c]) != holds || lat.le(a, rdiv[c * n + b]) != holds {
                    return Err(NotResiduated { a, b, c });
                }
            }
        }
    }
    Ok((ldiv, rdiv))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssembleError {
    BadDimensions { what: &'static str },
    UnitOutOfRange { unit: usize },
    NotResiduated(NotResiduated),
    /// Strict mode: supplied residual tables disagree with the synthesized
    /// ones.
    ResidualMismatch { which: &'static str, a: usize, b: usize },
}

impl fmt::Display for AssembleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssembleError::BadDimensions { what } => write!(f, "bad table dimensions: {what}"),
            AssembleError::UnitOutOfRange { unit } => write!(f, "unit {unit} out of range"),
            AssembleError::NotResiduated(e) => write!(f, "{e}"),
            AssembleError::ResidualMismatch { which, a, b } => {
                write!(f, "supplied {which} table disagrees with synthesis at ({a}, {b})")
            }
        }
    }
}

/// One failed defining condition, with a witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlgebraViolation {
    NotAssociative { a: usize, b: usize, c: usize },
    UnitLawFails { a: usize, left: bool },
    ResiduationFails { a: usize, b: usize, c: usize },
    BangTopNotPreserved { index: usize },
    BangMeetNotPreserved { index: usize, a: usize, b: usize },
    UnitNotBelowBangUnit { index: usize },
    BangNotIdempotent { index: usize, a: usize },
    BangNotDecreasing { index: usize, a: usize },
    PromotionFails { i: usize, j: usize, k: usize, a: usize, b: usize },
    ContractionFails { index: usize, a: usize, b: usize, right: bool },
    WeakeningFails { index: usize, a: usize },
    ExchangeFails { index: usize, a: usize, b: usize },
}

impl fmt::Display for AlgebraViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use AlgebraViolation::*;
        match self {
            NotAssociative { a, b, c } => write!(f, "product not associative at ({a}, {b}, {c})"),
            UnitLawFails { a, left } => {
                let side = if *left { "e.a" } else { "a.e" };
                write!(f, "unit law {side} = a fails at {a}")
            }
            ResiduationFails { a, b, c } => write!(f, "residuation fails at ({a}, {b}, {c})"),
            BangTopNotPreserved { index } => write!(f, "bang[{index}] does not fix top"),
            BangMeetNotPreserved { index, a, b } => {
                write!(f, "bang[{index}] does not preserve the meet of ({a}, {b})")
            }
            UnitNotBelowBangUnit { index } => write!(f, "e <= bang[{index}](e) fails"),
            BangNotIdempotent { index, a } => write!(f, "bang[{index}] not idempotent at {a}"),
            BangNotDecreasing { index, a } => write!(f, "bang[{index}](a) <= a fails at {a}"),
            PromotionFails { i, j, k, a, b } => {
                write!(f, "bang[{i}]a . bang[{j}]b <= bang[{k}](a.b) fails at ({a}, {b})")
            }
            ContractionFails { index, a, b, right } => {
                let side = if *right { "right" } else { "left" };
                write!(f, "{side} non-local contraction for bang[{index}] fails at ({a}, {b})")
            }
            WeakeningFails { index, a } => write!(f, "bang[{index}](a) <= e fails at {a}"),
            ExchangeFails { index, a, b } => {
                write!(f, "bang[{index}]a . b = b . bang[{index}]a fails at ({a}, {b})")
            }
        }
    }
}

/// A finite distributive residuated lattice with a family of interior-style
/// operators indexed by a subexponential signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSigmaAlgebra {
    lattice: FiniteDistributiveLattice,
    prod: Vec<usize>,
    unit: usize,
    bang: Vec<Vec<usize>>,
    sig: SubexpSignature,
    ldiv: Vec<usize>,
    rdiv: Vec<usize>,
}

impl FiniteSigmaAlgebra {
    /// Builds the algebra, synthesizing the residual tables. This does *not*
    /// run [`check`](Self::check); badly behaved products that are still
    /// residuated are representable, so the checker can report on them.
    pub fn assemble(
        lattice: FiniteDistributiveLattice,
        prod: Vec<usize>,
        unit: usize,
        bang: Vec<Vec<usize>>,
        sig: SubexpSignature,
    ) -> Result<Self, AssembleError> {
        let n = lattice.len();
        if prod.len() != n * n || prod.iter().any(|&x| x >= n) {
            return Err(AssembleError::BadDimensions { what: "product table" });
        }
        if unit >= n {
            return Err(AssembleError::UnitOutOfRange { unit });
        }
        if bang.len() != sig.len() || bang.iter().any(|t| t.len() != n || t.iter().any(|&x| x >= n))
        {
            return Err(AssembleError::BadDimensions { what: "operator tables" });
        }
        let (ldiv, rdiv) = residual_synthesize(&lattice, &prod)
            .map_err(AssembleError::NotResiduated)?;
        Ok(FiniteSigmaAlgebra { lattice, prod, unit, bang, sig, ldiv, rdiv })
    }

    /// Strict assembly: the caller supplies residual tables which are
    /// cross-checked against the synthesized ones.
    pub fn assemble_with_residuals(
        lattice: FiniteDistributiveLattice,
        prod: Vec<usize>,
        unit: usize,
        bang: Vec<Vec<usize>>,
        sig: SubexpSignature,
        ldiv: Vec<usize>,
        rdiv: Vec<usize>,
    ) -> Result<Self, AssembleError> {
        let me = Self::assemble(lattice, prod, unit, bang, sig)?;
        let n = me.len();
        if ldiv.len() != n * n || rdiv.len() != n * n {
            return Err(AssembleError::BadDimensions { what: "residual tables" });
        }
        for a in 0..n {
            for b in 0..n {
                if ldiv[a * n + b] != me.ldiv[a * n + b] {
                    return Err(AssembleError::ResidualMismatch { which: "ldiv", a, b });
                }
                if rdiv[a * n + b] != me.rdiv[a * n + b] {
                    return Err(AssembleError::ResidualMismatch { which: "rdiv", a, b });
                }
            }
        }
        Ok(me)
    }

    fn from_tables(
        lattice: FiniteDistributiveLattice,
        prod: Vec<usize>,
        unit: usize,
        bang: Vec<Vec<usize>>,
        sig: SubexpSignature,
        ldiv: Vec<usize>,
        rdiv: Vec<usize>,
    ) -> Self {
        FiniteSigmaAlgebra { lattice, prod, unit, bang, sig, ldiv, rdiv }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    #[inline]
    pub fn lattice(&self) -> &FiniteDistributiveLattice {
        &self.lattice
    }

    #[inline]
    pub fn sig(&self) -> &SubexpSignature {
        &self.sig
    }

    #[inline]
    pub fn unit(&self) -> usize {
        self.unit
    }

    #[inline]
    pub fn prod(&self, a: usize, b: usize) -> usize {
        self.prod[a * self.len() + b]
    }

    /// `a \ b`.
    #[inline]
    pub fn ldiv(&self, a: usize, b: usize) -> usize {
        self.ldiv[a * self.len() + b]
    }

    /// `a / b`.
    #[inline]
    pub fn rdiv(&self, a: usize, b: usize) -> usize {
        self.rdiv[a * self.len() + b]
    }

    #[inline]
    pub fn bang(&self, index: usize, a: usize) -> usize {
        self.bang[index][a]
    }

    pub fn prod_table(&self) -> &[usize] {
        &self.prod
    }

    pub fn bang_table(&self, index: usize) -> &[usize] {
        &self.bang[index]
    }

    /// Exhaustively evaluates every defining condition; an empty vector
    /// means the structure is a well-formed algebra for its signature.
    pub fn check(&self) -> Vec<AlgebraViolation> {
        let n = self.len();
        let lat = &self.lattice;
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if self.prod(self.prod(a, b), c) != self.prod(a, self.prod(b, c)) {
                        out.push(AlgebraViolation::NotAssociative { a, b, c });
                    }
                }
            }
        }
        for a in 0..n {
            if self.prod(self.unit, a) != a {
                out.push(AlgebraViolation::UnitLawFails { a, left: true });
            }
            if self.prod(a, self.unit) != a {
                out.push(AlgebraViolation::UnitLawFails { a, left: false });
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let holds = lat.le(self.prod(a, b), c);
                    if lat.le(b, self.ldiv(a, c)) != holds || lat.le(a, self.rdiv(c, b)) != holds {
                        out.push(AlgebraViolation::ResiduationFails { a, b, c });
                    }
                }
            }
        }
        for i in 0..self.sig.len() {
            if self.bang(i, lat.top()) != lat.top() {
                out.push(AlgebraViolation::BangTopNotPreserved { index: i });
            }
            for a in 0..n {
                for b in 0..n {
                    if self.bang(i, lat.meet(a, b)) != lat.meet(self.bang(i, a), self.bang(i, b)) {
                        out.push(AlgebraViolation::BangMeetNotPreserved { index: i, a, b });
                    }
                }
            }
            if !lat.le(self.unit, self.bang(i, self.unit)) {
                out.push(AlgebraViolation::UnitNotBelowBangUnit { index: i });
            }
            for a in 0..n {
                let ba = self.bang(i, a);
                if self.bang(i, ba) != ba {
                    out.push(AlgebraViolation::BangNotIdempotent { index: i, a });
                }
                if !lat.le(ba, a) {
                    out.push(AlgebraViolation::BangNotDecreasing { index: i, a });
                }
            }
        }
        for k in 0..self.sig.len() {
            for i in 0..self.sig.len() {
                for j in 0..self.sig.len() {
                    if !(self.sig.le(k, i) && self.sig.le(k, j)) {
                        continue;
                    }
                    for a in 0..n {
                        for b in 0..n {
                            let lhs = self.prod(self.bang(i, a), self.bang(j, b));
                            let rhs = self.bang(k, self.prod(a, b));
                            if !lat.le(lhs, rhs) {
                                out.push(AlgebraViolation::PromotionFails { i, j, k, a, b });
                            }
                        }
                    }
                }
            }
        }
        for i in 0..self.sig.len() {
            if self.sig.in_c(i) {
                for a in 0..n {
                    for b in 0..n {
                        let ba = self.bang(i, a);
                        let bab_ba = self.prod(self.prod(ba, b), ba);
                        if !lat.le(self.prod(ba, b), bab_ba) {
                            out.push(AlgebraViolation::ContractionFails {
                                index: i,
                                a,
                                b,
                                right: false,
                            });
                        }
                        if !lat.le(self.prod(b, ba), bab_ba) {
                            out.push(AlgebraViolation::ContractionFails {
                                index: i,
                                a,
                                b,
                                right: true,
                            });
                        }
                    }
                }
            }
            if self.sig.in_w(i) {
                for a in 0..n {
                    if !lat.le(self.bang(i, a), self.unit) {
                        out.push(AlgebraViolation::WeakeningFails { index: i, a });
                    }
                }
            }
            if self.sig.in_e(i) {
                for a in 0..n {
                    for b in 0..n {
                        let ba = self.bang(i, a);
                        if self.prod(ba, b) != self.prod(b, ba) {
                            out.push(AlgebraViolation::ExchangeFails { index: i, a, b });
                        }
                    }
                }
            }
        }
        out
    }

    /// Interprets a formula under an assignment of variables to elements.
    pub fn interpret(
        &self,
        formula: &Formula,
        assignment: &BTreeMap<String, usize>,
    ) -> Result<usize, InterpretError> {
        Ok(match formula {
            Formula::Bot => self.lattice.bot(),
            Formula::Top => self.lattice.top(),
            Formula::One => self.unit,
            Formula::Var(v) => *assignment
                .get(v)
                .ok_or_else(|| InterpretError::UnboundVariable(v.clone()))?,
            Formula::Bang(i, a) => {
                let ix = self
                    .sig
                    .index_of(i)
                    .ok_or_else(|| InterpretError::UnknownIndex(i.clone()))?;
                self.bang(ix, self.interpret(a, assignment)?)
            }
            Formula::Prod(a, b) => {
                self.prod(self.interpret(a, assignment)?, self.interpret(b, assignment)?)
            }
            Formula::LDiv(a, b) => {
                self.ldiv(self.interpret(a, assignment)?, self.interpret(b, assignment)?)
            }
            Formula::RDiv(a, b) => {
                self.rdiv(self.interpret(a, assignment)?, self.interpret(b, assignment)?)
            }
            Formula::And(a, b) => self
                .lattice
                .meet(self.interpret(a, assignment)?, self.interpret(b, assignment)?),
            Formula::Or(a, b) => self
                .lattice
                .join(self.interpret(a, assignment)?, self.interpret(b, assignment)?),
        })
    }

    /// The dual frame on the join-irreducible elements: worlds carry the
    /// dual order, `R a b c` iff `c <= a.b`, `u Ri w` iff
    /// `bang_i(kappa(w)) <= kappa(u)`, and the unit set collects the
    /// irreducibles below the monoid unit.
    pub fn atom_structure(&self) -> SigmaFrame {
        let ji = self.lattice.join_irreducibles();
        let m = ji.len();
        let mut leq = vec![false; m * m];
        for (u, &ju) in ji.iter().enumerate() {
            for (w, &jw) in ji.iter().enumerate() {
                // dual order
                leq[u * m + w] = self.lattice.le(jw, ju);
            }
        }
        let poset = FinitePoset::new(m, leq).expect("dual order restricted to irreducibles");
        let mut r = vec![false; m * m * m];
        for (a, &ja) in ji.iter().enumerate() {
            for (b, &jb) in ji.iter().enumerate() {
                let pab = self.prod(ja, jb);
                for (c, &jc) in ji.iter().enumerate() {
                    r[(a * m + b) * m + c] = self.lattice.le(jc, pab);
                }
            }
        }
        let mut o = 0u64;
        for (w, &jw) in ji.iter().enumerate() {
            if self.lattice.le(jw, self.unit) {
                o |= 1 << w;
            }
        }
        let kappa: Vec<usize> =
            ji.iter().map(|&j| self.lattice.kappa(j).expect("join-irreducible")).collect();
        let mut ri = Vec::with_capacity(self.sig.len());
        for i in 0..self.sig.len() {
            let mut rel = vec![false; m * m];
            for u in 0..m {
                for w in 0..m {
                    rel[u * m + w] = self.lattice.le(self.bang(i, kappa[w]), kappa[u]);
                }
            }
            ri.push(rel);
        }
        SigmaFrame { base: TernaryFrame { poset, r, o }, ri, sig: self.sig.clone() }
    }

    /// The canonical extension computed through the filter/ideal two-stage
    /// formulas. In the finite case every element is both a filter and an
    /// ideal element, and the result must coincide with the input algebra
    /// table by table.
    pub fn canonical_extension_finite(&self) -> FiniteSigmaAlgebra {
        let n = self.len();
        let lat = &self.lattice;
        let below = |x: usize| (0..n).filter(move |&a| lat.le(a, x));
        let above = |x: usize| (0..n).filter(move |&a| lat.le(x, a));

        // product: meet over upper approximants on filter elements, then
        // join over filter elements below
        let mut prod_ff = vec![0usize; n * n];
        for x in 0..n {
            for y in 0..n {
                prod_ff[x * n + y] = lat.meet_all(
                    above(x).flat_map(|a| above(y).map(move |b| (a, b))).map(|(a, b)| self.prod(a, b)),
                );
            }
        }
        let mut prod_sigma = vec![0usize; n * n];
        for a in 0..n {
            for b in 0..n {
                prod_sigma[a * n + b] = lat.join_all(
                    below(a).flat_map(|x| below(b).map(move |y| (x, y))).map(|(x, y)| prod_ff[x * n + y]),
                );
            }
        }

        // operators: meet over upper approximants, then join below
        let mut bang_sigma = Vec::with_capacity(self.sig.len());
        for i in 0..self.sig.len() {
            let mut on_filters = vec![0usize; n];
            for x in 0..n {
                on_filters[x] = lat.meet_all(above(x).map(|a| self.bang(i, a)));
            }
            let mut table = vec![0usize; n];
            for a in 0..n {
                table[a] = lat.join_all(below(a).map(|x| on_filters[x]));
            }
            bang_sigma.push(table);
        }

        // left residual: join over (first above, second below) on
        // filter/ideal pairs, then meet over (first below, second above)
        let mut ldiv_fi = vec![0usize; n * n];
        for x in 0..n {
            for y in 0..n {
                ldiv_fi[x * n + y] = lat.join_all(
                    above(x).flat_map(|a| below(y).map(move |b| (a, b))).map(|(a, b)| self.ldiv(a, b)),
                );
            }
        }
        let mut ldiv_pi = vec![0usize; n * n];
        for a in 0..n {
            for b in 0..n {
                ldiv_pi[a * n + b] = lat.meet_all(
                    below(a).flat_map(|x| above(b).map(move |y| (x, y))).map(|(x, y)| ldiv_fi[x * n + y]),
                );
            }
        }

        // right residual, mirrored
        let mut rdiv_if = vec![0usize; n * n];
        for y in 0..n {
            for x in 0..n {
                rdiv_if[y * n + x] = lat.join_all(
                    below(y).flat_map(|a| above(x).map(move |b| (a, b))).map(|(a, b)| self.rdiv(a, b)),
                );
            }
        }
        let mut rdiv_pi = vec![0usize; n * n];
        for a in 0..n {
            for b in 0..n {
                rdiv_pi[a * n + b] = lat.meet_all(
                    above(a).flat_map(|y| below(b).map(move |x| (y, x))).map(|(y, x)| rdiv_if[y * n + x]),
                );
            }
        }

        FiniteSigmaAlgebra::from_tables(
            self.lattice.clone(),
            prod_sigma,
            self.unit,
            bang_sigma,
            self.sig.clone(),
            ldiv_pi,
            rdiv_pi,
        )
    }

    /// Runs [`check`](Self::check) on the finite canonical extension.
    pub fn check_canonicity_instance(&self) -> Vec<AlgebraViolation> {
        self.canonical_extension_finite().check()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InterpretError {
    UnboundVariable(String),
    UnknownIndex(String),
}

impl fmt::Display for InterpretError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterpretError::UnboundVariable(v) => write!(f, "unbound variable '{v}'"),
            InterpretError::UnknownIndex(i) => write!(f, "unknown index '{i}'"),
        }
    }
}

/// All distributive lattices with at most `max_size` elements, one per
/// isomorphism class, in a deterministic order.
pub fn distributive_lattices_upto(max_size: usize) -> Vec<FiniteDistributiveLattice> {
    let mut out = Vec::new();
    for n in 1..=max_size {
        let mut seen = alloc::collections::BTreeSet::new();
        for leq in all_posets(n) {
            let poset = FinitePoset::new(n, leq).expect("filtered to posets");
            let Ok(lat) = lattice_from_poset(&poset) else { continue };
            let canon = canonical_poset_key(&poset);
            if seen.insert(canon) {
                out.push(lat);
            }
        }
    }
    out
}

/// Every partial order on `n` labeled points (row-major boolean matrices).
pub(crate) fn all_posets(n: usize) -> Vec<Vec<bool>> {
    let off_diag: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j)
        .collect();
    let mut out = Vec::new();
    for bits in 0u64..(1 << off_diag.len()) {
        let mut leq = vec![false; n * n];
        for i in 0..n {
            leq[i * n + i] = true;
        }
        for (k, &(i, j)) in off_diag.iter().enumerate() {
            if bits & (1 << k) != 0 {
                leq[i * n + j] = true;
            }
        }
        if FinitePoset::new(n, leq.clone()).is_ok() {
            out.push(leq);
        }
    }
    out
}

fn canonical_poset_key(p: &FinitePoset) -> Vec<bool> {
    let n = p.len();
    let mut best: Option<Vec<bool>> = None;
    for perm in permutations(n) {
        let q = p.relabel(&perm);
        let key: Vec<bool> = (0..n * n).map(|k| q.le(k / n, k % n)).collect();
        if best.as_ref().is_none_or(|b| key < *b) {
            best = Some(key);
        }
    }
    best.expect("at least the identity permutation")
}

/// Corpus generation policy. Product enumeration is exhaustive while the
/// candidate count stays under `exhaustive_cap`; larger lattices fall back
/// to seeded random sampling of `sample_target` monotone product seeds.
#[derive(Debug, Clone, Copy)]
pub struct CorpusOptions {
    pub max_lattice_size: usize,
    pub exhaustive_cap: u64,
    pub sample_target: usize,
    pub sample_attempts: usize,
    pub seed: u64,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            max_lattice_size: 5,
            exhaustive_cap: 100_000,
            sample_target: 40,
            sample_attempts: 4_000,
            seed: 0xD5A1,
        }
    }
}

/// Monotone-map candidates `join_irreducibles x join_irreducibles -> L`
/// extended to full product tables by joins. Returns `None` when the
/// exhaustive count would exceed the cap.
fn enumerate_monotone_products(
    lat: &FiniteDistributiveLattice,
    cap: u64,
) -> Option<Vec<Vec<usize>>> {
    let ji = lat.join_irreducibles();
    let cells = ji.len() * ji.len();
    // quick upper bound: |L|^cells
    let mut estimate: u64 = 1;
    for _ in 0..cells {
        estimate = estimate.saturating_mul(lat.len() as u64);
        if estimate > cap.saturating_mul(64) {
            break;
        }
    }
    let mut out = Vec::new();
    let mut assignment = vec![0usize; cells];
    let mut produced: u64 = 0;
    // DFS over cells with monotonicity pruning against earlier cells.
    fn below_pairs(ji: &[usize], lat: &FiniteDistributiveLattice, c1: usize, c2: usize) -> bool {
        lat.le(ji[c1 / ji.len()], ji[c2 / ji.len()]) && lat.le(ji[c1 % ji.len()], ji[c2 % ji.len()])
    }
    fn dfs(
        lat: &FiniteDistributiveLattice,
        ji: &[usize],
        cell: usize,
        assignment: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        produced: &mut u64,
        cap: u64,
    ) -> bool {
        if cell == assignment.len() {
            *produced += 1;
            if *produced > cap {
                return false;
            }
            out.push(extend_product(lat, ji, assignment));
            return true;
        }
        'values: for v in 0..lat.len() {
            for prev in 0..cell {
                if below_pairs(ji, lat, prev, cell) && !lat.le(assignment[prev], v) {
                    continue 'values;
                }
                if below_pairs(ji, lat, cell, prev) && !lat.le(v, assignment[prev]) {
                    continue 'values;
                }
            }
            assignment[cell] = v;
            if !dfs(lat, ji, cell + 1, assignment, out, produced, cap) {
                return false;
            }
        }
        true
    }
    if cells == 0 {
        // one-element lattice: the only product is trivial
        return Some(vec![extend_product(lat, &ji, &assignment)]);
    }
    if dfs(lat, &ji, 0, &mut assignment, &mut out, &mut produced, cap) {
        Some(out)
    } else {
        None
    }
}

/// Extends values on irreducible pairs to the whole carrier by joins.
fn extend_product(lat: &FiniteDistributiveLattice, ji: &[usize], cells: &[usize]) -> Vec<usize> {
    let n = lat.len();
    let m = ji.len();
    let mut table = vec![0usize; n * n];
    for a in 0..n {
        for b in 0..n {
            table[a * n + b] = lat.join_all(
                (0..m)
                    .filter(|&x| lat.le(ji[x], a))
                    .flat_map(|x| {
                        (0..m).filter(move |&y| lat.le(ji[y], b)).map(move |y| (x, y))
                    })
                    .map(|(x, y)| cells[x * m + y]),
            );
        }
    }
    table
}

fn sample_monotone_products(
    lat: &FiniteDistributiveLattice,
    opts: &CorpusOptions,
) -> Vec<Vec<usize>> {
    let ji = lat.join_irreducibles();
    let m = ji.len();
    let n = lat.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (n as u64) << 8 ^ m as u64);
    let mut out = alloc::collections::BTreeSet::new();
    for _ in 0..opts.sample_attempts {
        let mut cells = vec![0usize; m * m];
        let mut ok = true;
        for cell in 0..cells.len() {
            // collect the join of forced lower bounds, pick uniformly above it
            let mut lower = lat.bot();
            let mut upper_ok: Vec<usize> = (0..n).collect();
            for prev in 0..cell {
                let le_prev_cell = lat.le(ji[prev / m], ji[cell / m]) && lat.le(ji[prev % m], ji[cell % m]);
                let le_cell_prev = lat.le(ji[cell / m], ji[prev / m]) && lat.le(ji[cell % m], ji[prev % m]);
                if le_prev_cell {
                    lower = lat.join(lower, cells[prev]);
                }
                if le_cell_prev {
                    upper_ok.retain(|&v| lat.le(v, cells[prev]));
                }
            }
            upper_ok.retain(|&v| lat.le(lower, v));
            if upper_ok.is_empty() {
                ok = false;
                break;
            }
            cells[cell] = upper_ok[rng.gen_range(0..upper_ok.len())];
        }
        if ok {
            out.insert(cells);
        }
        if out.len() >= opts.sample_target {
            break;
        }
    }
    out.into_iter().map(|cells| extend_product(lat, &ji, &cells)).collect()
}

/// All meet-preserving interior operators on `lat` (monotone on the
/// meet-irreducibles, extended by meets, filtered to decreasing idempotent
/// maps fixing top).
fn interior_operators(lat: &FiniteDistributiveLattice) -> Vec<Vec<usize>> {
    let n = lat.len();
    let mi = lat.meet_irreducibles();
    let m = mi.len();
    let mut out = Vec::new();
    let mut cells = vec![0usize; m];
    fn dfs(
        lat: &FiniteDistributiveLattice,
        mi: &[usize],
        cell: usize,
        cells: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let n = lat.len();
        if cell == cells.len() {
            // extend by meets over the meet-irreducibles above
            let mut table = vec![0usize; n];
            for a in 0..n {
                table[a] = lat.meet_all(
                    (0..mi.len()).filter(|&k| lat.le(a, mi[k])).map(|k| cells[k]),
                );
            }
            let interior = (0..n).all(|a| {
                let b = table[a];
                lat.le(b, a) && table[b] == b
            });
            let meet_preserving = (0..n).all(|a| {
                (0..n).all(|b| table[lat.meet(a, b)] == lat.meet(table[a], table[b]))
            }) && table[lat.top()] == lat.top();
            if interior && meet_preserving {
                out.push(table);
            }
            return;
        }
        'values: for v in 0..n {
            for prev in 0..cell {
                if lat.le(mi[prev], mi[cell]) && !lat.le(cells[prev], v) {
                    continue 'values;
                }
                if lat.le(mi[cell], mi[prev]) && !lat.le(v, cells[prev]) {
                    continue 'values;
                }
            }
            cells[cell] = v;
            dfs(lat, mi, cell + 1, cells, out);
        }
    }
    if m == 0 {
        return vec![vec![lat.top(); n]];
    }
    dfs(lat, &mi, 0, &mut cells, &mut out);
    out
}

/// Every algebra over `lat` and `sig` obtainable from the product candidates
/// and interior-operator pool, filtered by [`FiniteSigmaAlgebra::check`].
pub fn enumerate_algebras(
    lat: &FiniteDistributiveLattice,
    sig: &SubexpSignature,
    opts: &CorpusOptions,
) -> Vec<FiniteSigmaAlgebra> {
    let n = lat.len();
    let products = match enumerate_monotone_products(lat, opts.exhaustive_cap) {
        Some(p) => p,
        None => sample_monotone_products(lat, opts),
    };
    let interiors = interior_operators(lat);
    let mut out = Vec::new();
    for prod in &products {
        // associativity first, it kills most candidates
        let assoc = (0..n).all(|a| {
            (0..n).all(|b| {
                (0..n).all(|c| prod[prod[a * n + b] * n + c] == prod[a * n + prod[b * n + c]])
            })
        });
        if !assoc {
            continue;
        }
        let Some(unit) = (0..n).find(|&e| {
            (0..n).all(|x| prod[e * n + x] == x && prod[x * n + e] == x)
        }) else {
            continue;
        };
        // operator tuples over the interior pool
        let tuples = sig.len();
        let mut pick = vec![0usize; tuples];
        loop {
            let bang: Vec<Vec<usize>> = pick.iter().map(|&k| interiors[k].clone()).collect();
            if let Ok(alg) =
                FiniteSigmaAlgebra::assemble(lat.clone(), prod.clone(), unit, bang, sig.clone())
            {
                if alg.check().is_empty() {
                    out.push(alg);
                }
            }
            if tuples == 0 {
                break;
            }
            let mut pos = 0;
            loop {
                pick[pos] += 1;
                if pick[pos] < interiors.len() {
                    break;
                }
                pick[pos] = 0;
                pos += 1;
                if pos == tuples {
                    break;
                }
            }
            if pos == tuples {
                break;
            }
        }
    }
    out
}

/// The standard test corpus: every distributive lattice of size <= 5 with a
/// one-index signature, sizes <= 4 with a two-index signature carrying
/// nonempty W, E, C, and sizes <= 3 with a three-index chain.
pub fn standard_corpus() -> Vec<FiniteSigmaAlgebra> {
    standard_corpus_with(&CorpusOptions::default())
}

pub fn standard_corpus_with(opts: &CorpusOptions) -> Vec<FiniteSigmaAlgebra> {
    let lattices = distributive_lattices_upto(opts.max_lattice_size);
    let mut out = Vec::new();
    let trivial = SubexpSignature::trivial("a");
    for lat in &lattices {
        out.extend(enumerate_algebras(lat, &trivial, opts));
    }
    let wec = corpus_sig_wec();
    for lat in lattices.iter().filter(|l| l.len() <= 4) {
        out.extend(enumerate_algebras(lat, &wec, opts));
    }
    let chain = corpus_sig_chain3();
    for lat in lattices.iter().filter(|l| l.len() <= 3) {
        out.extend(enumerate_algebras(lat, &chain, opts));
    }
    out
}

/// Two indices `a preceq b` with `W = C = {b}` and `E = {a, b}`.
pub fn corpus_sig_wec() -> SubexpSignature {
    SubexpSignature::validate(&crate::syntax::RawSignature {
        indices: vec!["a".into(), "b".into()],
        preceq: vec![("a".into(), "b".into())],
        w: vec!["b".into()],
        e: vec!["a".into(), "b".into()],
        c: vec!["b".into()],
    })
    .expect("well-formed signature")
}

/// Three-index chain `lo preceq mid preceq hi`, no structural sets.
pub fn corpus_sig_chain3() -> SubexpSignature {
    SubexpSignature::validate(&crate::syntax::RawSignature {
        indices: vec!["lo".into(), "mid".into(), "hi".into()],
        preceq: vec![("lo".into(), "mid".into()), ("mid".into(), "hi".into())],
        ..Default::default()
    })
    .expect("well-formed signature")
}
