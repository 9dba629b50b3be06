//! Distributive full Lambek calculus with subexponential modalities.
//!
//! The crate is organized around the pipeline a finite-model study of this
//! logic needs:
//!
//! * [`syntax`]: subexponential signatures, formulas, sequents, parsing and
//!   printing of the ASCII concrete syntax.
//! * [`calculus`]: the Hilbert-style axiom schemas and inference rules,
//!   derivation objects, step-by-step proof checking and a bounded forward
//!   prover.
//! * [`order`]: finite posets and distributive lattices: meets, joins,
//!   irreducible elements, the `kappa` map, upset enumeration.
//! * [`algebra`]: finite residuated lattices with interior operators
//!   (`FiniteSigmaAlgebra`): axiom checking, residual synthesis, atom
//!   structures, finite canonical extensions, brute-force corpora.
//! * [`frames`]: ternary Kripke frames with indexed preorders: frame
//!   condition checking, complex algebras, model evaluation, frame validity,
//!   the complex-algebra/atom-structure duality.
//! * [`search`]: exhaustive and randomized generation of frames,
//!   countermodel search, soundness fuzzing.
//!
//! Everything is `no_std + alloc` and deterministic: all randomized entry
//! points take explicit 64-bit seeds and all collections iterate in a stable
//! order.

#![cfg_attr(not(test), no_std)]
// dense index arithmetic over small tables reads better with plain loops
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod algebra;
pub mod calculus;
pub mod frames;
pub mod order;
pub mod search;
pub mod syntax;




pub use algebra::FiniteSigmaAlgebra;
pub use calculus::{Derivation, RuleId};
pub use frames::{Model, SigmaFrame, TernaryFrame};
pub use order::{FiniteDistributiveLattice, FinitePoset};
pub use syntax::{Formula, Sequent, SubexpSignature};
