//! Finite posets and finite distributive lattices.
//!
//! Elements are `0..n`. Order relations are dense `n x n` boolean matrices,
//! subsets of the carrier are `u64` bitmasks, so everything here assumes
//! `n <= 64` (upset enumeration is capped much lower, see
//! [`UPSET_ENUM_MAX_WORLDS`]).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Upset enumeration is exponential; beyond this carrier size it refuses.
pub const UPSET_ENUM_MAX_WORLDS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosetError {
    NotReflexive { x: usize },
    NotAntisymmetric { x: usize, y: usize },
    NotTransitive { x: usize, y: usize, z: usize },
    BadDimensions { n: usize, len: usize },
    TooLarge { n: usize },
}

impl fmt::Display for PosetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PosetError::NotReflexive { x } => write!(f, "relation is not reflexive at {x}"),
            PosetError::NotAntisymmetric { x, y } => {
                write!(f, "relation is not antisymmetric: {x} <= {y} and {y} <= {x}")
            }
            PosetError::NotTransitive { x, y, z } => {
                write!(f, "relation is not transitive: {x} <= {y} <= {z} but not {x} <= {z}")
            }
            PosetError::BadDimensions { n, len } => {
                write!(f, "expected {n}x{n} = {} entries, got {len}", n * n)
            }
            PosetError::TooLarge { n } => write!(f, "carrier of size {n} exceeds 64 elements"),
        }
    }
}

/// A finite partial order on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FinitePoset {
    n: usize,
    leq: Vec<bool>,
}

impl FinitePoset {
    /// Validates reflexivity, antisymmetry and transitivity of `leq`
    /// (row-major: `leq[x * n + y]` means `x <= y`).
    pub fn new(n: usize, leq: Vec<bool>) -> Result<Self, PosetError> {
        if n > 64 {
            return Err(PosetError::TooLarge { n });
        }
        if leq.len() != n * n {
            return Err(PosetError::BadDimensions { n, len: leq.len() });
        }
        let at = |x: usize, y: usize| leq[x * n + y];
        for x in 0..n {
            if !at(x, x) {
                return Err(PosetError::NotReflexive { x });
            }
        }
        for x in 0..n {
            for y in 0..n {
                if x != y && at(x, y) && at(y, x) {
                    return Err(PosetError::NotAntisymmetric { x, y });
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                if !at(x, y) {
                    continue;
                }
                for z in 0..n {
                    if at(y, z) && !at(x, z) {
                        return Err(PosetError::NotTransitive { x, y, z });
                    }
                }
            }
        }
        Ok(FinitePoset { n, leq })
    }

    /// Reflexive-transitively closes `pairs` over `0..n`; fails only if the
    /// closure is not antisymmetric.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self, PosetError> {
        let mut leq = vec![false; n * n];
        for x in 0..n {
            leq[x * n + x] = true;
        }
        for &(x, y) in pairs {
            if x >= n || y >= n {
                return Err(PosetError::BadDimensions { n, len: n * n + 1 });
            }
            leq[x * n + y] = true;
        }
        transitive_close(n, &mut leq);
        FinitePoset::new(n, leq)
    }

    pub fn chain(n: usize) -> Self {
        let mut leq = vec![false; n * n];
        for x in 0..n {
            for y in x..n {
                leq[x * n + y] = true;
            }
        }
        FinitePoset { n, leq }
    }

    pub fn antichain(n: usize) -> Self {
        let mut leq = vec![false; n * n];
        for x in 0..n {
            leq[x * n + x] = true;
        }
        FinitePoset { n, leq }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn le(&self, x: usize, y: usize) -> bool {
        self.leq[x * self.n + y]
    }

    /// The principal upset of `x` as a bitmask.
    pub fn up_mask(&self, x: usize) -> u64 {
        let mut m = 0u64;
        for y in 0..self.n {
            if self.le(x, y) {
                m |= 1 << y;
            }
        }
        m
    }

    pub fn full_mask(&self) -> u64 {
        if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        }
    }

    pub fn is_upset(&self, mask: u64) -> bool {
        for x in 0..self.n {
            if mask & (1 << x) != 0 && self.up_mask(x) & !mask != 0 {
                return false;
            }
        }
        true
    }

    /// Upward closure of a bitmask.
    pub fn up_closure(&self, mask: u64) -> u64 {
        let mut out = 0u64;
        for x in 0..self.n {
            if mask & (1 << x) != 0 {
                out |= self.up_mask(x);
            }
        }
        out
    }

    /// Relabels elements by `perm` (`perm[old] = new`).
    pub fn relabel(&self, perm: &[usize]) -> FinitePoset {
        let n = self.n;
        let mut leq = vec![false; n * n];
        for x in 0..n {
            for y in 0..n {
                if self.le(x, y) {
                    leq[perm[x] * n + perm[y]] = true;
                }
            }
        }
        FinitePoset { n, leq }
    }
}

/// All permutations of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).expect("successor exists");
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
}

pub(crate) fn transitive_close(n: usize, rel: &mut [bool]) {
    for k in 0..n {
        for x in 0..n {
            if rel[x * n + k] {
                for y in 0..n {
                    if rel[k * n + y] {
                        rel[x * n + y] = true;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeCapExceeded {
    pub n: usize,
    pub cap: usize,
}

impl fmt::Display for SizeCapExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "upset enumeration over {} elements exceeds the cap of {}", self.n, self.cap)
    }
}

/// All upward-closed subsets of `p`, as bitmasks in ascending numeric order.
pub fn upsets(p: &FinitePoset) -> Result<Vec<u64>, SizeCapExceeded> {
    if p.len() > UPSET_ENUM_MAX_WORLDS {
        return Err(SizeCapExceeded { n: p.len(), cap: UPSET_ENUM_MAX_WORLDS });
    }
    let n = p.len();
    let ups: Vec<u64> = (0..n).map(|x| p.up_mask(x)).collect();
    let mut out = Vec::new();
    for mask in 0..(1u64 << n) {
        let mut ok = true;
        for (x, up) in ups.iter().enumerate() {
            if mask & (1 << x) != 0 && up & !mask != 0 {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(mask);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeError {
    /// Some pair has no meet or no join.
    NotALattice { x: usize, y: usize, join: bool },
    NotDistributive { a: usize, b: usize, c: usize },
    EmptyCarrier,
}

impl fmt::Display for LatticeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeError::NotALattice { x, y, join } => {
                let which = if *join { "join" } else { "meet" };
                write!(f, "elements {x} and {y} have no {which}")
            }
            LatticeError::NotDistributive { a, b, c } => {
                write!(f, "distributivity fails on the triple ({a}, {b}, {c})")
            }
            LatticeError::EmptyCarrier => write!(f, "a lattice needs at least one element"),
        }
    }
}

/// A finite distributive lattice: a poset together with verified meet/join
/// tables and its bounds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FiniteDistributiveLattice {
    poset: FinitePoset,
    meet: Vec<usize>,
    join: Vec<usize>,
    top: usize,
    bot: usize,
}

/// Computes meet/join tables from the order and checks distributivity.
pub fn lattice_from_poset(p: &FinitePoset) -> Result<FiniteDistributiveLattice, LatticeError> {
    let n = p.len();
    if n == 0 {
        return Err(LatticeError::EmptyCarrier);
    }
    let mut meet = vec![0usize; n * n];
    let mut join = vec![0usize; n * n];
    for x in 0..n {
        for y in 0..n {
            meet[x * n + y] = infimum(p, x, y)
                .ok_or(LatticeError::NotALattice { x, y, join: false })?;
            join[x * n + y] = supremum(p, x, y)
                .ok_or(LatticeError::NotALattice { x, y, join: true })?;
        }
    }
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let lhs = meet[a * n + join[b * n + c]];
                let rhs = join[meet[a * n + b] * n + meet[a * n + c]];
                if lhs != rhs {
                    return Err(LatticeError::NotDistributive { a, b, c });
                }
            }
        }
    }
    let mut bot = 0;
    let mut top = 0;
    for x in 1..n {
        bot = meet[bot * n + x];
        top = join[top * n + x];
    }
    Ok(FiniteDistributiveLattice { poset: p.clone(), meet, join, top, bot })
}

fn infimum(p: &FinitePoset, x: usize, y: usize) -> Option<usize> {
    let n = p.len();
    let lower: Vec<usize> = (0..n).filter(|&z| p.le(z, x) && p.le(z, y)).collect();
    lower
        .iter()
        .copied()
        .find(|&m| lower.iter().all(|&z| p.le(z, m)))
}

fn supremum(p: &FinitePoset, x: usize, y: usize) -> Option<usize> {
    let n = p.len();
    let upper: Vec<usize> = (0..n).filter(|&z| p.le(x, z) && p.le(y, z)).collect();
    upper
        .iter()
        .copied()
        .find(|&m| upper.iter().all(|&z| p.le(m, z)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotJoinIrreducible {
    pub element: usize,
}

impl fmt::Display for NotJoinIrreducible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "element {} is not join-irreducible", self.element)
    }
}

impl FiniteDistributiveLattice {
    #[inline]
    pub fn len(&self) -> usize {
        self.poset.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.poset.is_empty()
    }

    #[inline]
    pub fn poset(&self) -> &FinitePoset {
        &self.poset
    }

    #[inline]
    pub fn le(&self, x: usize, y: usize) -> bool {
        self.poset.le(x, y)
    }

    #[inline]
    pub fn meet(&self, x: usize, y: usize) -> usize {
        self.meet[x * self.len() + y]
    }

    #[inline]
    pub fn join(&self, x: usize, y: usize) -> usize {
        self.join[x * self.len() + y]
    }

    #[inline]
    pub fn top(&self) -> usize {
        self.top
    }

    #[inline]
    pub fn bot(&self) -> usize {
        self.bot
    }

    pub fn join_all(&self, xs: impl IntoIterator<Item = usize>) -> usize {
        xs.into_iter().fold(self.bot, |a, b| self.join(a, b))
    }

    pub fn meet_all(&self, xs: impl IntoIterator<Item = usize>) -> usize {
        xs.into_iter().fold(self.top, |a, b| self.meet(a, b))
    }

    /// In a finite lattice the completely join-irreducible elements are
    /// exactly those with `a != join of everything strictly below a`; the
    /// bottom (the empty join) is excluded by the same formula.
    pub fn join_irreducibles(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&a| {
                let below = (0..self.len()).filter(|&x| self.le(x, a) && x != a);
                self.join_all(below) != a
            })
            .collect()
    }

    pub fn meet_irreducibles(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&a| {
                let above = (0..self.len()).filter(|&x| self.le(a, x) && x != a);
                self.meet_all(above) != a
            })
            .collect()
    }

    /// `kappa(j) = join of every element not above j`; an order isomorphism
    /// from join-irreducibles onto meet-irreducibles.
    pub fn kappa(&self, j: usize) -> Result<usize, NotJoinIrreducible> {
        if !self.join_irreducibles().contains(&j) {
            return Err(NotJoinIrreducible { element: j });
        }
        Ok(self.join_all((0..self.len()).filter(|&x| !self.le(j, x))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    fn grid2x2() -> FinitePoset {
        // 0 = bottom, 1 and 2 incomparable atoms, 3 = top
        FinitePoset::from_pairs(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    fn m3() -> FinitePoset {
        FinitePoset::from_pairs(5, &[(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)]).unwrap()
    }

    #[test]
    fn poset_validation_rejects_bad_relations() {
        assert_eq!(
            FinitePoset::new(1, vec![false]),
            Err(PosetError::NotReflexive { x: 0 })
        );
        let cyclic = FinitePoset::from_pairs(2, &[(0, 1), (1, 0)]);
        assert!(matches!(cyclic, Err(PosetError::NotAntisymmetric { .. })));
        // transitivity hole
        let mut leq = vec![false; 9];
        for i in 0..3 {
            leq[i * 3 + i] = true;
        }
        leq[1] = true; // 0 <= 1
        leq[5] = true; // 1 <= 2
        assert!(matches!(
            FinitePoset::new(3, leq),
            Err(PosetError::NotTransitive { x: 0, y: 1, z: 2 })
        ));
    }

    #[test]
    fn two_chain_lattice_is_min_max() {
        let l = lattice_from_poset(&FinitePoset::chain(2)).unwrap();
        assert_eq!(l.meet(0, 1), 0);
        assert_eq!(l.join(0, 1), 1);
        assert_eq!(l.bot(), 0);
        assert_eq!(l.top(), 1);
    }

    #[test]
    fn m3_is_not_distributive() {
        assert!(matches!(
            lattice_from_poset(&m3()),
            Err(LatticeError::NotDistributive { .. })
        ));
    }

    #[test]
    fn grid_is_a_distributive_lattice() {
        let l = lattice_from_poset(&grid2x2()).unwrap();
        assert_eq!(l.meet(1, 2), 0);
        assert_eq!(l.join(1, 2), 3);
    }

    #[test]
    fn irreducibles_on_small_lattices() {
        let two = lattice_from_poset(&FinitePoset::chain(2)).unwrap();
        assert_eq!(two.join_irreducibles(), vec![1]);
        assert_eq!(two.meet_irreducibles(), vec![0]);

        let grid = lattice_from_poset(&grid2x2()).unwrap();
        assert_eq!(grid.join_irreducibles(), vec![1, 2]);

        let three = lattice_from_poset(&FinitePoset::chain(3)).unwrap();
        assert_eq!(three.join_irreducibles(), vec![1, 2]);
        assert_eq!(three.meet_irreducibles(), vec![0, 1]);
    }

    #[test]
    fn kappa_values_on_small_lattices() {
        let two = lattice_from_poset(&FinitePoset::chain(2)).unwrap();
        assert_eq!(two.kappa(1), Ok(0));
        assert_eq!(two.kappa(0), Err(NotJoinIrreducible { element: 0 }));

        let grid = lattice_from_poset(&grid2x2()).unwrap();
        assert_eq!(grid.kappa(1), Ok(2));
        assert_eq!(grid.kappa(2), Ok(1));

        let three = lattice_from_poset(&FinitePoset::chain(3)).unwrap();
        assert_eq!(three.kappa(1), Ok(0));
        assert_eq!(three.kappa(2), Ok(1));
    }

    #[test]
    fn kappa_galois_property() {
        // x <= kappa(j) iff j not<= x, and kappa is injective into the
        // meet-irreducibles.
        for poset in [FinitePoset::chain(4), grid2x2()] {
            let l = lattice_from_poset(&poset).unwrap();
            let mi: BTreeSet<usize> = l.meet_irreducibles().into_iter().collect();
            let mut seen = BTreeSet::new();
            for j in l.join_irreducibles() {
                let k = l.kappa(j).unwrap();
                assert!(mi.contains(&k));
                assert!(seen.insert(k));
                for x in 0..l.len() {
                    assert_eq!(l.le(x, k), !l.le(j, x), "j={j} x={x}");
                }
            }
            assert_eq!(seen.len(), l.join_irreducibles().len());
        }
    }

    #[test]
    fn birkhoff_decomposition() {
        for poset in [FinitePoset::chain(5), grid2x2()] {
            let l = lattice_from_poset(&poset).unwrap();
            let ji = l.join_irreducibles();
            let mi = l.meet_irreducibles();
            for a in 0..l.len() {
                let j = l.join_all(ji.iter().copied().filter(|&x| l.le(x, a)));
                let m = l.meet_all(mi.iter().copied().filter(|&x| l.le(a, x)));
                assert_eq!(j, a);
                assert_eq!(m, a);
            }
        }
    }

    /// Independent oracle: count upsets by deciding membership element by
    /// element; including an element pulls in its whole upset, excluding it
    /// bans its whole downset, so each upset is counted exactly once.
    fn count_upsets_rec(p: &FinitePoset, elem: usize, included: u64, excluded: u64) -> u64 {
        if elem == p.len() {
            return 1;
        }
        let bit = 1u64 << elem;
        if (included | excluded) & bit != 0 {
            return count_upsets_rec(p, elem + 1, included, excluded);
        }
        let mut down = 0u64;
        for x in 0..p.len() {
            if p.le(x, elem) {
                down |= 1 << x;
            }
        }
        count_upsets_rec(p, elem + 1, included | p.up_mask(elem), excluded)
            + count_upsets_rec(p, elem + 1, included, excluded | down)
    }

    #[test]
    fn upset_counts_match_oracle() {
        let cases = [
            (FinitePoset::antichain(2), 4),
            (FinitePoset::chain(2), 3),
            (FinitePoset::chain(1), 2),
            (grid2x2(), 6),
        ];
        for (p, expect) in cases {
            let ups = upsets(&p).unwrap();
            assert_eq!(ups.len(), expect, "{p:?}");
            assert_eq!(count_upsets_rec(&p, 0, 0, 0), expect as u64);
            for &u in &ups {
                assert!(p.is_upset(u));
            }
            // every upset is closed and listed exactly once
            let set: BTreeSet<u64> = ups.iter().copied().collect();
            assert_eq!(set.len(), ups.len());
        }
        for n in 1..=5 {
            let p = FinitePoset::antichain(n);
            assert_eq!(upsets(&p).unwrap().len(), 1 << n);
            assert_eq!(count_upsets_rec(&p, 0, 0, 0), 1u64 << n);
        }
    }

    #[test]
    fn upset_cap_is_enforced() {
        let p = FinitePoset::antichain(13);
        assert!(upsets(&p).is_err());
    }
}
