//! Generation of finite frames, countermodel search and soundness fuzzing.
//!
//! Exhaustive enumeration works per labeled world count and deduplicates up
//! to the lexicographically minimal relabeling. Candidate tables are built
//! by a constraint-directed search: every pruning rule used by the
//! generators is implied by the frame conditions, and every candidate that
//! survives still goes through the real checkers before it is yielded, so
//! generators can never outrun the validators.
//!
//! All randomness comes from explicit 64-bit seeds; for a fixed seed every
//! function here is deterministic (budgets are step counts, not wall-clock
//! timeouts, for the same reason).

use alloc::collections::BTreeMap;
#[cfg(test)]
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{axiom_schemas, rule_schema, CalculusConfig, RuleId};
use crate::frames::{
    check_sigma_frame, check_ternary_frame, eval, falsifying_valuation, sequent_holds, Model,
    SigmaFrame, TernaryFrame,
};
use crate::order::{permutations, upsets, FinitePoset, SizeCapExceeded};
use crate::syntax::{Formula, Sequent, SubexpSignature};

/// Deterministic resource limits for the searchers. `max_steps` plays the
/// role of a timeout: it counts search nodes, so runs are reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_worlds: usize,
    pub max_candidates: u64,
    pub max_steps: u64,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_worlds: 3, max_candidates: 200_000, max_steps: 50_000_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchError {
    BudgetExceeded { explored: u64 },
    SizeCap(SizeCapExceeded),
    TooManyWorlds { n: usize },
}

impl fmt::Display for SearchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchError::BudgetExceeded { explored } => {
                write!(f, "search budget exhausted after {explored} steps")
            }
            SearchError::SizeCap(e) => write!(f, "{e}"),
            SearchError::TooManyWorlds { n } => {
                write!(f, "frame enumeration over {n} worlds is not supported")
            }
        }
    }
}

impl From<SizeCapExceeded> for SearchError {
    fn from(e: SizeCapExceeded) -> Self {
        SearchError::SizeCap(e)
    }
}

/// Hard cap for exhaustive enumeration; larger sizes go through
/// [`random_frame`].
pub const ENUMERATION_MAX_WORLDS: usize = 4;

struct StepCounter {
    steps: u64,
    max: u64,
}

impl StepCounter {
    fn bump(&mut self, by: u64) -> Result<(), SearchError> {
        self.steps += by;
        if self.steps > self.max {
            Err(SearchError::BudgetExceeded { explored: self.steps })
        } else {
            Ok(())
        }
    }
}

/// Every partial order on `n` labeled worlds.
fn labeled_posets(n: usize) -> Vec<FinitePoset> {
    crate::algebra::all_posets(n)
        .into_iter()
        .map(|leq| FinitePoset::new(n, leq).expect("filtered to posets"))
        .collect()
}

/// Every preorder (reflexive transitive relation) on `n` labeled points.
fn labeled_preorders(n: usize) -> Vec<Vec<bool>> {
    let off_diag: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j)
        .collect();
    let mut out = Vec::new();
    'bits: for bits in 0u64..(1 << off_diag.len()) {
        let mut rel = vec![false; n * n];
        for i in 0..n {
            rel[i * n + i] = true;
        }
        for (k, &(i, j)) in off_diag.iter().enumerate() {
            if bits & (1 << k) != 0 {
                rel[i * n + j] = true;
            }
        }
        for x in 0..n {
            for y in 0..n {
                if !rel[x * n + y] {
                    continue;
                }
                for z in 0..n {
                    if rel[y * n + z] && !rel[x * n + z] {
                        continue 'bits;
                    }
                }
            }
        }
        out.push(rel);
    }
    out
}

/// Composition tables: entry `(u, v)` is the upset `{ w : R u v w }`. The
/// constraints pushed into the search are all consequences of the frame
/// conditions: values are upsets, antitone in both coordinates, unit rows
/// and columns stay under the principal upset and union to it exactly.
fn enumerate_circ_tables(
    poset: &FinitePoset,
    o_mask: u64,
    counter: &mut StepCounter,
) -> Result<Vec<Vec<u64>>, SearchError> {
    let n = poset.len();
    let ups = upsets(poset)?;
    let up_of: Vec<u64> = (0..n).map(|w| poset.up_mask(w)).collect();
    let in_o = |w: usize| o_mask & (1 << w) != 0;

    // per-entry hard caps from the unit conditions
    let mut cap = vec![poset.full_mask(); n * n];
    for u in 0..n {
        for v in 0..n {
            if in_o(u) {
                cap[u * n + v] &= up_of[v];
            }
            if in_o(v) {
                cap[u * n + v] &= up_of[u];
            }
        }
    }

    let mut table = vec![0u64; n * n];
    let mut out = Vec::new();
    let mut stack_err = None;

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        poset: &FinitePoset,
        ups: &[u64],
        cap: &[u64],
        up_of: &[u64],
        o_mask: u64,
        cell: usize,
        table: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
        counter: &mut StepCounter,
        err: &mut Option<SearchError>,
    ) {
        if err.is_some() {
            return;
        }
        if let Err(e) = counter.bump(1) {
            *err = Some(e);
            return;
        }
        let n = poset.len();
        if cell == n * n {
            // unit unions: rows and columns over O must cover the principal
            // upsets exactly
            for v in 0..n {
                let mut row = 0u64;
                let mut col = 0u64;
                for o in 0..n {
                    if o_mask & (1 << o) != 0 {
                        row |= table[o * n + v];
                        col |= table[v * n + o];
                    }
                }
                if row != up_of[v] || col != up_of[v] {
                    return;
                }
            }
            // associativity of the extended composition
            for u in 0..n {
                for w in 0..n {
                    for u2 in 0..n {
                        let mut lhs = 0u64;
                        let mut rhs = 0u64;
                        for x in 0..n {
                            if table[u * n + w] & (1 << x) != 0 {
                                lhs |= table[x * n + u2];
                            }
                            if table[w * n + u2] & (1 << x) != 0 {
                                rhs |= table[u * n + x];
                            }
                        }
                        if lhs != rhs {
                            return;
                        }
                    }
                }
            }
            out.push(table.clone());
            return;
        }
        let (u, v) = (cell / n, cell % n);
        'values: for &s in ups {
            if s & !cap[cell] != 0 {
                continue;
            }
            // antitonicity against assigned entries
            for prev in 0..cell {
                let (pu, pv) = (prev / n, prev % n);
                if poset.le(pu, u) && poset.le(pv, v) && s & !table[prev] != 0 {
                    continue 'values;
                }
                if poset.le(u, pu) && poset.le(v, pv) && table[prev] & !s != 0 {
                    continue 'values;
                }
            }
            table[cell] = s;
            dfs(poset, ups, cap, up_of, o_mask, cell + 1, table, out, counter, err);
            if err.is_some() {
                return;
            }
        }
    }

    dfs(
        poset,
        &ups,
        &cap,
        &up_of,
        o_mask,
        0,
        &mut table,
        &mut out,
        counter,
        &mut stack_err,
    );
    match stack_err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn frame_from_table(poset: &FinitePoset, table: &[u64], o_mask: u64) -> TernaryFrame {
    let n = poset.len();
    let mut r = vec![false; n * n * n];
    for u in 0..n {
        for v in 0..n {
            for w in 0..n {
                if table[u * n + v] & (1 << w) != 0 {
                    r[(u * n + v) * n + w] = true;
                }
            }
        }
    }
    TernaryFrame { poset: poset.clone(), r, o: o_mask }
}

fn encode_frame(frame: &SigmaFrame) -> Vec<u8> {
    let n = frame.len();
    let mut bits: Vec<u8> = Vec::new();
    bits.push(n as u8);
    for x in 0..n {
        for y in 0..n {
            bits.push(frame.base.poset.le(x, y) as u8);
        }
    }
    for w in 0..n {
        bits.push(((frame.base.o >> w) & 1) as u8);
    }
    bits.extend(frame.base.r.iter().map(|&b| b as u8));
    for rel in &frame.ri {
        bits.extend(rel.iter().map(|&b| b as u8));
    }
    bits
}

/// The lexicographically minimal relabeling of `frame`, with its encoding.
fn canonical_form(frame: &SigmaFrame) -> (Vec<u8>, SigmaFrame) {
    let n = frame.len();
    let mut best: Option<(Vec<u8>, SigmaFrame)> = None;
    for perm in permutations(n) {
        let candidate = frame.relabel(&perm);
        let key = encode_frame(&candidate);
        if best.as_ref().is_none_or(|(b, _)| key < *b) {
            best = Some((key, candidate));
        }
    }
    best.expect("identity permutation")
}

/// Exhaustively enumerates the frames on `n` labeled worlds that pass
/// [`check_sigma_frame`], deduplicated up to the lexicographically minimal
/// relabeling, in a deterministic order (sorted canonical encodings).
pub fn enumerate_frames(
    sig: &SubexpSignature,
    n: usize,
    budget: &SearchBudget,
) -> Result<Vec<SigmaFrame>, SearchError> {
    if n == 0 || n > ENUMERATION_MAX_WORLDS {
        return Err(SearchError::TooManyWorlds { n });
    }
    let mut counter = StepCounter { steps: 0, max: budget.max_steps };
    let preorders = labeled_preorders(n);
    let mut seen: BTreeMap<Vec<u8>, SigmaFrame> = BTreeMap::new();

    for poset in labeled_posets(n) {
        let all_ups = upsets(&poset)?;
        for &o_mask in all_ups.iter().filter(|&&o| o != 0) {
            // weakening indices force O to be everything
            if (0..sig.len()).any(|i| sig.in_w(i)) && o_mask != poset.full_mask() {
                continue;
            }
            for table in enumerate_circ_tables(&poset, o_mask, &mut counter)? {
                let base = frame_from_table(&poset, &table, o_mask);
                if !check_ternary_frame(&base).is_empty() {
                    continue;
                }
                // candidate R_i relations: preorders keeping O boxed
                let candidates: Vec<&Vec<bool>> = preorders
                    .iter()
                    .filter(|rel| {
                        (0..n).all(|u| {
                            o_mask & (1 << u) == 0
                                || (0..n).all(|w| !rel[u * n + w] || o_mask & (1 << w) != 0)
                        })
                    })
                    .collect();
                let mut pick = vec![0usize; sig.len()];
                'tuples: loop {
                    counter.bump(1)?;
                    // index order compatibility: i preceq j forces R_i
                    // inside R_j
                    let compatible = (0..sig.len()).all(|i| {
                        (0..sig.len()).all(|j| {
                            !sig.le(i, j)
                                || candidates[pick[i]]
                                    .iter()
                                    .zip(candidates[pick[j]].iter())
                                    .all(|(&a, &b)| !a || b)
                        })
                    });
                    if compatible {
                        let frame = SigmaFrame {
                            base: base.clone(),
                            ri: pick.iter().map(|&k| candidates[k].clone()).collect(),
                            sig: sig.clone(),
                        };
                        if check_sigma_frame(&frame)?.is_empty() {
                            let (key, canon) = canonical_form(&frame);
                            seen.entry(key).or_insert(canon);
                        }
                    }
                    if sig.is_empty() {
                        break;
                    }
                    let mut pos = 0;
                    loop {
                        pick[pos] += 1;
                        if pick[pos] < candidates.len() {
                            break;
                        }
                        pick[pos] = 0;
                        pos += 1;
                        if pos == sig.len() {
                            break 'tuples;
                        }
                    }
                }
                if seen.len() as u64 > budget.max_candidates {
                    return Err(SearchError::BudgetExceeded { explored: counter.steps });
                }
            }
        }
    }
    Ok(seen.into_values().collect())
}

/// Rejection sampling with structured seeds: random posets, composition
/// tables found by a randomized version of the exhaustive constraint
/// search, and accessibility relations grown as reflexive-transitive
/// closures. Every returned frame passes [`check_sigma_frame`];
/// reproducible per seed.
pub fn random_frame(
    sig: &SubexpSignature,
    n: usize,
    seed: u64,
) -> Result<SigmaFrame, SearchError> {
    random_frame_with(sig, n, seed, 400)
}

pub fn random_frame_with(
    sig: &SubexpSignature,
    n: usize,
    seed: u64,
    max_candidates: u64,
) -> Result<SigmaFrame, SearchError> {
    if n == 0 || n > crate::order::UPSET_ENUM_MAX_WORLDS {
        return Err(SearchError::TooManyWorlds { n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let needs_full_o = (0..sig.len()).any(|i| sig.in_w(i));
    let mut attempts: u64 = 0;
    loop {
        attempts += 1;
        if attempts > max_candidates {
            return Err(SearchError::BudgetExceeded { explored: attempts });
        }
        // random poset from a closed random pair set
        let pair_count = rng.gen_range(0..=n);
        let pairs: Vec<(usize, usize)> = (0..pair_count)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
            .collect();
        let Ok(poset) = FinitePoset::from_pairs(n, &pairs) else { continue };
        let all_ups = match upsets(&poset) {
            Ok(u) => u,
            Err(e) => return Err(SearchError::SizeCap(e)),
        };
        let o_mask = if needs_full_o {
            poset.full_mask()
        } else {
            let nonempty: Vec<u64> = all_ups.iter().copied().filter(|&u| u != 0).collect();
            nonempty[rng.gen_range(0..nonempty.len())]
        };
        // randomized table search: like the exhaustive one but trying the
        // values of each cell in a shuffled order and keeping the first hit
        let Some(table) = random_circ_table(&poset, o_mask, &all_ups, &mut rng) else {
            continue;
        };
        let base = frame_from_table(&poset, &table, o_mask);
        if !check_ternary_frame(&base).is_empty() {
            continue;
        }
        // accessibility relations grown over the index order
        let mut ri: Vec<Vec<bool>> = Vec::with_capacity(sig.len());
        let mut ok = true;
        for i in 0..sig.len() {
            let mut rel = vec![false; n * n];
            for u in 0..n {
                rel[u * n + u] = true;
            }
            // include everything forced by smaller indices
            for j in 0..i {
                if sig.le(j, i) {
                    for k in 0..n * n {
                        rel[k] = rel[k] || ri[j][k];
                    }
                }
            }
            let extra = rng.gen_range(0..=n);
            for _ in 0..extra {
                let u = rng.gen_range(0..n);
                let w = rng.gen_range(0..n);
                // keep O boxed: unit worlds may only reach unit worlds
                if o_mask & (1 << u) != 0 && o_mask & (1 << w) == 0 {
                    continue;
                }
                rel[u * n + w] = true;
            }
            crate::order::transitive_close(n, &mut rel);
            // closure may have produced an escape from O
            let boxed = (0..n).all(|u| {
                o_mask & (1 << u) == 0
                    || (0..n).all(|w| !rel[u * n + w] || o_mask & (1 << w) != 0)
            });
            if !boxed {
                ok = false;
                break;
            }
            ri.push(rel);
        }
        if !ok {
            continue;
        }
        let frame = SigmaFrame { base, ri, sig: sig.clone() };
        if check_sigma_frame(&frame)?.is_empty() {
            return Ok(frame);
        }
    }
}

fn random_circ_table(
    poset: &FinitePoset,
    o_mask: u64,
    all_ups: &[u64],
    rng: &mut ChaCha8Rng,
) -> Option<Vec<u64>> {
    let n = poset.len();
    let up_of: Vec<u64> = (0..n).map(|w| poset.up_mask(w)).collect();
    let in_o = |w: usize| o_mask & (1 << w) != 0;
    let mut cap = vec![poset.full_mask(); n * n];
    for u in 0..n {
        for v in 0..n {
            if in_o(u) {
                cap[u * n + v] &= up_of[v];
            }
            if in_o(v) {
                cap[u * n + v] &= up_of[u];
            }
        }
    }
    let mut table = vec![0u64; n * n];
    let mut nodes = 0u32;
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        poset: &FinitePoset,
        all_ups: &[u64],
        cap: &[u64],
        up_of: &[u64],
        o_mask: u64,
        cell: usize,
        table: &mut Vec<u64>,
        rng: &mut ChaCha8Rng,
        nodes: &mut u32,
    ) -> bool {
        *nodes += 1;
        if *nodes > 40_000 {
            return false;
        }
        let n = poset.len();
        if cell == n * n {
            for v in 0..n {
                let mut row = 0u64;
                let mut col = 0u64;
                for o in 0..n {
                    if o_mask & (1 << o) != 0 {
                        row |= table[o * n + v];
                        col |= table[v * n + o];
                    }
                }
                if row != up_of[v] || col != up_of[v] {
                    return false;
                }
            }
            for u in 0..n {
                for w in 0..n {
                    for u2 in 0..n {
                        let mut lhs = 0u64;
                        let mut rhs = 0u64;
                        for x in 0..n {
                            if table[u * n + w] & (1 << x) != 0 {
                                lhs |= table[x * n + u2];
                            }
                            if table[w * n + u2] & (1 << x) != 0 {
                                rhs |= table[u * n + x];
                            }
                        }
                        if lhs != rhs {
                            return false;
                        }
                    }
                }
            }
            return true;
        }
        let (u, v) = (cell / n, cell % n);
        let mut values: Vec<u64> = all_ups.iter().copied().filter(|&s| s & !cap[cell] == 0).collect();
        values.shuffle(rng);
        'values: for s in values {
            for prev in 0..cell {
                let (pu, pv) = (prev / n, prev % n);
                if poset.le(pu, u) && poset.le(pv, v) && s & !table[prev] != 0 {
                    continue 'values;
                }
                if poset.le(u, pu) && poset.le(v, pv) && table[prev] & !s != 0 {
                    continue 'values;
                }
            }
            table[cell] = s;
            if dfs(poset, all_ups, cap, up_of, o_mask, cell + 1, table, rng, nodes) {
                return true;
            }
        }
        false
    }
    if dfs(poset, all_ups, &cap, &up_of, o_mask, 0, &mut table, rng, &mut nodes) {
        Some(table)
    } else {
        None
    }
}

/// A falsifying model for a sequent, with the world where the left side
/// holds and the right side fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Countermodel {
    pub model: Model,
    pub sequent: Sequent,
    pub witness_world: usize,
}

impl Countermodel {
    /// Re-runs the semantics: the frame must validate its conditions, the
    /// sequent must fail in the model, and the witness world must see the
    /// left side without the right side.
    pub fn verify(&self) -> bool {
        let frame_ok = matches!(check_sigma_frame(&self.model.frame), Ok(v) if v.is_empty());
        let fails = sequent_holds(&self.model, &self.sequent) == Ok(false);
        let bit = 1u64 << self.witness_world;
        let witness_ok = match (eval(&self.model, &self.sequent.lhs), eval(&self.model, &self.sequent.rhs)) {
            (Ok(l), Ok(r)) => l & bit != 0 && r & bit == 0,
            _ => false,
        };
        frame_ok && fails && witness_ok
    }
}

/// Searches frames of 1 up to `budget.max_worlds` worlds (exhaustively per
/// size, in enumeration order) and valuations in canonical upset order for
/// a falsifying model. The first hit is therefore of minimal world count.
/// `Ok(None)` is not a theoremhood proof.
pub fn find_countermodel(
    sequent: &Sequent,
    sig: &SubexpSignature,
    budget: &SearchBudget,
) -> Result<Option<Countermodel>, SearchError> {
    let mut explored: u64 = 0;
    for n in 1..=budget.max_worlds {
        for frame in enumerate_frames(sig, n, budget)? {
            explored += 1;
            if explored > budget.max_candidates {
                return Err(SearchError::BudgetExceeded { explored });
            }
            match falsifying_valuation(&frame, sequent) {
                Ok(Some((model, witness_world))) => {
                    return Ok(Some(Countermodel {
                        model,
                        sequent: sequent.clone(),
                        witness_world,
                    }));
                }
                Ok(None) => {}
                Err(crate::frames::ValidityError::SizeCap(e)) => {
                    return Err(SearchError::SizeCap(e))
                }
                Err(crate::frames::ValidityError::TooManyValuations { .. }) => {
                    return Err(SearchError::BudgetExceeded { explored })
                }
                // unbound variables cannot happen (the valuation covers the
                // sequent's variables); unknown indices mean the sequent
                // does not fit the signature, treated as no countermodel
                // from this frame
                Err(crate::frames::ValidityError::Eval(_)) => {}
            }
        }
    }
    Ok(None)
}

fn collect_bang_indices(f: &Formula, out: &mut alloc::collections::BTreeSet<String>) {
    if let Formula::Bang(i, _) = f {
        out.insert(i.clone());
    }
    let (l, r) = f.children();
    if let Some(l) = l {
        collect_bang_indices(l, out);
    }
    if let Some(r) = r {
        collect_bang_indices(r, out);
    }
}

/// Uniform random formula over `vars` with the signature's indices, depth
/// at most `depth`.
pub fn random_formula(
    rng: &mut ChaCha8Rng,
    vars: &[&str],
    sig: &SubexpSignature,
    depth: usize,
) -> Formula {
    if depth <= 1 {
        return match rng.gen_range(0..5) {
            0 => Formula::Bot,
            1 => Formula::Top,
            2 => Formula::One,
            _ => Formula::var(vars[rng.gen_range(0..vars.len())]),
        };
    }
    let top = if sig.is_empty() { 5 } else { 6 };
    match rng.gen_range(0..=top) {
        0 => random_formula(rng, vars, sig, 1),
        1 => Formula::prod(
            random_formula(rng, vars, sig, depth - 1),
            random_formula(rng, vars, sig, depth - 1),
        ),
        2 => Formula::ldiv(
            random_formula(rng, vars, sig, depth - 1),
            random_formula(rng, vars, sig, depth - 1),
        ),
        3 => Formula::rdiv(
            random_formula(rng, vars, sig, depth - 1),
            random_formula(rng, vars, sig, depth - 1),
        ),
        4 => Formula::and(
            random_formula(rng, vars, sig, depth - 1),
            random_formula(rng, vars, sig, depth - 1),
        ),
        5 => Formula::or(
            random_formula(rng, vars, sig, depth - 1),
            random_formula(rng, vars, sig, depth - 1),
        ),
        _ => {
            let i = rng.gen_range(0..sig.len());
            Formula::bang(sig.name(i), random_formula(rng, vars, sig, depth - 1))
        }
    }
}

/// One recorded soundness failure, with everything needed to replay it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzFailure {
    pub kind: String,
    pub rule: RuleId,
    pub sequent: Sequent,
    pub frame: SigmaFrame,
    pub valuation: Option<BTreeMap<String, u64>>,
    pub witness_world: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FuzzReport {
    pub trials: u64,
    pub frames_generated: u64,
    pub schema_checks: u64,
    pub instance_checks: u64,
    pub rule_checks: u64,
    /// Rule replays whose premises actually held in the sampled model (the
    /// non-vacuous ones).
    pub rule_premise_hits: u64,
    pub failures: Vec<FuzzFailure>,
}

/// Checks every axiom schema of the signature against one frame: the schema
/// itself by exhaustive frame validity over its metavariables, plus
/// `instances` random instantiations checked under sampled valuations.
/// Returns the failures; used by [`soundness_fuzz`] and directly by tests
/// that inject broken frames.
pub fn check_frame_soundness(
    frame: &SigmaFrame,
    cfg: &CalculusConfig,
    seed: u64,
    instances: usize,
    report: &mut FuzzReport,
) {
    let sig = &frame.sig;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schemas = axiom_schemas(sig, cfg);
    let ups = upsets(&frame.base.poset).expect("fuzz frames stay under the upset cap");
    let vars = ["p", "q", "r", "s"];
    for schema in &schemas {
        report.schema_checks += 1;
        match falsifying_valuation(frame, &schema.sequent) {
            Ok(None) => {}
            Ok(Some((model, witness))) => report.failures.push(FuzzFailure {
                kind: "axiom-schema".to_string(),
                rule: schema.rule,
                sequent: schema.sequent.clone(),
                frame: frame.clone(),
                valuation: Some(model.valuation),
                witness_world: Some(witness),
            }),
            Err(_) => {}
        }
        for _ in 0..instances {
            report.instance_checks += 1;
            let map: BTreeMap<String, Formula> = schema
                .sequent
                .vars()
                .into_iter()
                .map(|v| (v, random_formula(&mut rng, &vars, sig, 3)))
                .collect();
            let instance = schema.sequent.substitute_map(&map);
            for _ in 0..3 {
                let valuation: BTreeMap<String, u64> = instance
                    .vars()
                    .into_iter()
                    .map(|v| (v, ups[rng.gen_range(0..ups.len())]))
                    .collect();
                let model = Model { frame: frame.clone(), valuation: valuation.clone() };
                if sequent_holds(&model, &instance) != Ok(true) {
                    report.failures.push(FuzzFailure {
                        kind: "axiom-instance".to_string(),
                        rule: schema.rule,
                        sequent: instance.clone(),
                        frame: frame.clone(),
                        valuation: Some(valuation),
                        witness_world: None,
                    });
                }
            }
        }
    }
}

/// Replays the inference rules on one frame: for the pattern rules, random
/// instantiations where every premise holds in a sampled model must make
/// the conclusion hold; the substitution rule is replayed through the
/// semantic substitution identity.
pub fn check_rule_soundness(
    frame: &SigmaFrame,
    cfg: &CalculusConfig,
    seed: u64,
    rounds: usize,
    report: &mut FuzzReport,
) {
    let sig = &frame.sig;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ups = upsets(&frame.base.poset).expect("fuzz frames stay under the upset cap");
    let vars = ["p", "q", "r", "s"];
    let rules: Vec<RuleId> = crate::calculus::ALL_RULES
        .iter()
        .copied()
        .filter(|r| !r.is_axiom())
        .collect();
    for _ in 0..rounds {
        for &rule in &rules {
            report.rule_checks += 1;
            if rule == RuleId::Subst {
                // semantic substitution identity
                let phi = random_formula(&mut rng, &vars, sig, 3);
                let theta = random_formula(&mut rng, &vars, sig, 2);
                let var = vars[rng.gen_range(0..vars.len())];
                let valuation: BTreeMap<String, u64> = phi
                    .vars()
                    .union(&theta.vars())
                    .map(|v| (v.clone(), ups[rng.gen_range(0..ups.len())]))
                    .collect();
                let model = Model { frame: frame.clone(), valuation: valuation.clone() };
                let (Ok(direct), Ok(theta_val)) =
                    (eval(&model, &phi.substitute(var, &theta)), eval(&model, &theta))
                else {
                    continue;
                };
                let mut shifted = valuation.clone();
                shifted.insert(var.to_string(), theta_val);
                let relabeled = Model { frame: frame.clone(), valuation: shifted };
                report.rule_premise_hits += 1;
                if eval(&relabeled, &phi) != Ok(direct) {
                    report.failures.push(FuzzFailure {
                        kind: "rule".to_string(),
                        rule,
                        sequent: Sequent::new(phi.clone(), phi.substitute(var, &theta)),
                        frame: frame.clone(),
                        valuation: Some(valuation),
                        witness_world: None,
                    });
                }
                continue;
            }
            let Some(schema) = rule_schema(rule, cfg) else { continue };
            // instantiate formula metavariables randomly; index
            // metavariables, when the rule has any, are sampled until the
            // side conditions hold
            let mut fmap: BTreeMap<String, Formula> = BTreeMap::new();
            for v in schema.conclusion.vars().union(
                &schema.premises.iter().flat_map(|s| s.vars()).collect(),
            ) {
                fmap.insert(v.clone(), random_formula(&mut rng, &vars, sig, 2));
            }
            let mut index_metas = alloc::collections::BTreeSet::new();
            for seq in schema.premises.iter().chain([&schema.conclusion]) {
                collect_bang_indices(&seq.lhs, &mut index_metas);
                collect_bang_indices(&seq.rhs, &mut index_metas);
            }
            let mut imap: BTreeMap<String, String> = BTreeMap::new();
            if !index_metas.is_empty() {
                if sig.is_empty() {
                    continue;
                }
                let mut side_ok = false;
                for _ in 0..8 {
                    imap.clear();
                    for m in &index_metas {
                        imap.insert(
                            m.clone(),
                            sig.name(rng.gen_range(0..sig.len())).to_string(),
                        );
                    }
                    side_ok = schema.side.iter().all(|c| {
                        let at = |m: &str| sig.index_of(&imap[m]).expect("picked from sig");
                        match c {
                            crate::calculus::SideCond::Le(a, b) => sig.le(at(a), at(b)),
                            crate::calculus::SideCond::InW(i) => sig.in_w(at(i)),
                            crate::calculus::SideCond::InE(i) => sig.in_e(at(i)),
                            crate::calculus::SideCond::InC(i) => sig.in_c(at(i)),
                        }
                    });
                    if side_ok {
                        break;
                    }
                }
                if !side_ok {
                    continue;
                }
            }
            let inst = |s: &Sequent| -> Sequent {
                let t = s.substitute_map(&fmap);
                Sequent::new(t.lhs.rename_indices(&imap), t.rhs.rename_indices(&imap))
            };
            let premises: Vec<Sequent> = schema.premises.iter().map(&inst).collect();
            let conclusion = inst(&schema.conclusion);
            let valuation: BTreeMap<String, u64> = conclusion
                .vars()
                .union(&premises.iter().flat_map(|s| s.vars()).collect())
                .map(|v| (v.clone(), ups[rng.gen_range(0..ups.len())]))
                .collect();
            let model = Model { frame: frame.clone(), valuation: valuation.clone() };
            let premises_hold = premises.iter().all(|p| sequent_holds(&model, p) == Ok(true));
            if premises_hold {
                report.rule_premise_hits += 1;
            }
            if premises_hold && sequent_holds(&model, &conclusion) != Ok(true) {
                report.failures.push(FuzzFailure {
                    kind: "rule".to_string(),
                    rule,
                    sequent: conclusion,
                    frame: frame.clone(),
                    valuation: Some(valuation),
                    witness_world: None,
                });
            }
        }
    }
}

/// Soundness fuzzing: per trial, a random frame of up to 4 worlds, every
/// axiom schema checked exhaustively over its metavariables plus
/// `instances_per_schema` random instantiations, and a round of rule
/// replays. The report is expected to carry zero failures.
pub fn soundness_fuzz(sig: &SubexpSignature, trials: u64, seed: u64) -> FuzzReport {
    soundness_fuzz_with(sig, trials, seed, 5)
}

pub fn soundness_fuzz_with(
    sig: &SubexpSignature,
    trials: u64,
    seed: u64,
    instances_per_schema: usize,
) -> FuzzReport {
    let cfg = CalculusConfig::default();
    let mut report = FuzzReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        report.trials += 1;
        let n = rng.gen_range(1..=4);
        let frame_seed = rng.gen::<u64>();
        let Ok(frame) = random_frame(sig, n, frame_seed) else { continue };
        report.frames_generated += 1;
        check_frame_soundness(&frame, &cfg, seed ^ trial, instances_per_schema, &mut report);
        check_rule_soundness(&frame, &cfg, seed ^ trial ^ 0x5EED, 1, &mut report);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_sequent;

    fn sig() -> SubexpSignature {
        SubexpSignature::trivial("a")
    }

    fn budget() -> SearchBudget {
        SearchBudget::default()
    }

    #[test]
    fn one_world_enumeration() {
        let frames = enumerate_frames(&sig(), 1, &budget()).unwrap();
        assert!(!frames.is_empty());
        for f in &frames {
            assert!(check_sigma_frame(f).unwrap().is_empty());
            assert_ne!(f.base.o, 0, "frames with empty O are never yielded");
        }
        // exactly the one-point frame: R = {(0,0,0)}, O = {0}, Ri = id
        assert_eq!(frames.len(), 1);
    }

    /// Independent brute-force oracle at n = 2: filter every raw structure
    /// through the checker and canonicalize.
    #[test]
    fn two_world_enumeration_matches_brute_force() {
        let s = sig();
        let enumerated = enumerate_frames(&s, 2, &budget()).unwrap();
        let enumerated_keys: BTreeSet<Vec<u8>> =
            enumerated.iter().map(|f| canonical_form(f).0).collect();

        let mut brute_keys = BTreeSet::new();
        for poset in labeled_posets(2) {
            for o in 0u64..4 {
                for rbits in 0u32..256 {
                    let r: Vec<bool> = (0..8).map(|k| rbits & (1 << k) != 0).collect();
                    let base = TernaryFrame { poset: poset.clone(), r, o };
                    if !check_ternary_frame(&base).is_empty() {
                        continue;
                    }
                    for ribits in 0u32..16 {
                        let ri: Vec<bool> = (0..4).map(|k| ribits & (1 << k) != 0).collect();
                        let frame =
                            SigmaFrame { base: base.clone(), ri: vec![ri], sig: s.clone() };
                        if check_sigma_frame(&frame).unwrap().is_empty() {
                            brute_keys.insert(canonical_form(&frame).0);
                        }
                    }
                }
            }
        }
        assert_eq!(enumerated_keys, brute_keys);
        assert_eq!(enumerated.len(), brute_keys.len());
    }

    #[test]
    fn random_frames_are_valid_and_reproducible() {
        let s = sig();
        let a = random_frame(&s, 2, 1).unwrap();
        let b = random_frame(&s, 2, 1).unwrap();
        assert_eq!(a, b);
        for seed in 0..40 {
            let n = 1 + (seed as usize % 3);
            let f = random_frame(&s, n, seed).unwrap();
            assert!(check_sigma_frame(&f).unwrap().is_empty());
        }
    }

    #[test]
    fn random_frames_cover_rich_signatures() {
        let wec = crate::algebra::corpus_sig_wec();
        for seed in 0..15 {
            let f = random_frame(&wec, 1 + (seed as usize % 3), seed).unwrap();
            assert!(check_sigma_frame(&f).unwrap().is_empty());
        }
        let chain = crate::algebra::corpus_sig_chain3();
        for seed in 0..15 {
            let f = random_frame(&chain, 1 + (seed as usize % 3), seed).unwrap();
            assert!(check_sigma_frame(&f).unwrap().is_empty());
        }
    }

    #[test]
    fn countermodels_are_found_and_verify() {
        let s = sig();
        let cm = find_countermodel(&parse_sequent("p |- q", &s).unwrap(), &s, &budget())
            .unwrap()
            .expect("p |- q is not valid");
        assert_eq!(cm.model.frame.len(), 1, "minimal countermodel has one world");
        assert!(cm.verify());

        // an axiom never has a countermodel
        let distr = parse_sequent("p /\\ (q \\/ r) |- p /\\ q \\/ p /\\ r", &s).unwrap();
        let within_two = SearchBudget { max_worlds: 2, ..budget() };
        assert_eq!(find_countermodel(&distr, &s, &within_two).unwrap(), None);

        // incomparable indices falsify bang monotonicity
        let two = SubexpSignature::validate(&crate::syntax::RawSignature {
            indices: vec!["u".into(), "v".into()],
            ..Default::default()
        })
        .unwrap();
        let cm = find_countermodel(
            &parse_sequent("![u]p |- ![v]p", &two).unwrap(),
            &two,
            &SearchBudget { max_worlds: 2, ..budget() },
        )
        .unwrap()
        .expect("unrelated indices are independent");
        assert!(cm.verify());
    }

    #[test]
    fn bang_reflection_needs_two_worlds() {
        let s = sig();
        let seq = parse_sequent("p |- ![a]p", &s).unwrap();
        let size_one = SearchBudget { max_worlds: 1, ..budget() };
        assert_eq!(find_countermodel(&seq, &s, &size_one).unwrap(), None);
        let cm = find_countermodel(&seq, &s, &budget()).unwrap().expect("found at two worlds");
        assert_eq!(cm.model.frame.len(), 2);
        assert!(cm.verify());
    }

    #[test]
    fn soundness_fuzz_small_run_is_clean() {
        let report = soundness_fuzz_with(&sig(), 12, 7, 2);
        assert!(report.failures.is_empty(), "{:?}", report.failures.first());
        assert!(report.frames_generated > 0);
        assert!(report.schema_checks > 0);
        assert!(report.rule_checks > 0);
        assert!(report.rule_premise_hits > 0, "rule replay must not be vacuous");

        // signature-free rules are still replayed on the empty signature
        let report = soundness_fuzz_with(&SubexpSignature::empty(), 10, 3, 1);
        assert!(report.failures.is_empty());
        assert!(report.rule_premise_hits > 0);
    }

    /// A frame violating exactly the promotion condition: three discrete
    /// worlds, composition 1 * 1 = {2} and 0 as the unit world, with an
    /// accessibility step 2 -> 1. The promotion axiom must fail on it, so
    /// a generator that dropped that frame condition would be caught.
    #[test]
    fn promotion_mutation_is_detected() {
        let s = sig();
        let poset = FinitePoset::antichain(3);
        let mut table = vec![0u64; 9];
        for v in 0..3 {
            table[v] = 1 << v;
            table[v * 3] = 1 << v;
        }
        table[4] = 1 << 2; // 1 * 1 = {2}
        let base = frame_from_table(&poset, &table, 0b001);
        assert!(check_ternary_frame(&base).is_empty(), "base conditions all hold");
        let mut ri = vec![false; 9];
        for u in 0..3 {
            ri[u * 3 + u] = true;
        }
        ri[2 * 3 + 1] = true;
        let frame = SigmaFrame { base, ri: vec![ri], sig: s.clone() };
        let violations = check_sigma_frame(&frame).unwrap();
        assert!(
            violations.iter().all(|v| matches!(v, FrameViolation::PromotionFails { .. })),
            "only the promotion condition fails: {violations:?}"
        );
        assert!(!violations.is_empty());

        // the soundness harness reports the promotion axiom on this frame
        let mut report = FuzzReport::default();
        check_frame_soundness(&frame, &CalculusConfig::default(), 3, 1, &mut report);
        assert!(report
            .failures
            .iter()
            .any(|f| f.rule == RuleId::Promotion && f.kind == "axiom-schema"));
    }

    #[test]
    fn budget_and_cap_errors_surface() {
        let s = sig();
        assert!(matches!(
            random_frame_with(&s, 2, 0, 0),
            Err(SearchError::BudgetExceeded { .. })
        ));
        assert!(matches!(random_frame(&s, 13, 0), Err(SearchError::TooManyWorlds { n: 13 })));
        assert!(matches!(
            enumerate_frames(&s, 5, &budget()),
            Err(SearchError::TooManyWorlds { n: 5 })
        ));
        let starved = SearchBudget { max_steps: 10, ..budget() };
        assert!(matches!(
            enumerate_frames(&s, 2, &starved),
            Err(SearchError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn exhaustive_and_random_agree_at_two_worlds() {
        // any countermodel found through random frames is also found by the
        // exhaustive search
        let s = sig();
        let sequents = ["p |- q", "p |- ![a]p", "p \\/ q |- p"];
        for text in sequents {
            let seq = parse_sequent(text, &s).unwrap();
            let exhaustive = find_countermodel(&seq, &s, &SearchBudget { max_worlds: 2, ..budget() })
                .unwrap()
                .is_some();
            let mut random_hit = false;
            for seed in 0..60 {
                let n = 1 + (seed as usize % 2);
                let Ok(frame) = random_frame(&s, n, seed) else { continue };
                if falsifying_valuation(&frame, &seq).unwrap().is_some() {
                    random_hit = true;
                    break;
                }
            }
            if random_hit {
                assert!(exhaustive, "{text}: random search found what exhaustive missed");
            }
        }
    }

    use crate::frames::FrameViolation;
}
