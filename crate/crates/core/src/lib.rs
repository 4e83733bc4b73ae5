//! A proof kernel for LK^h, a sequent calculus for first-order logic in
//! which Henkin constants take the place of eigenvariables.
//!
//! The crate checks proofs, implements the structural transformations
//! (weakening, contraction, inversion, deep replacement), eliminates cuts
//! from proofs with pure endsequents, and eliminates Skolem functions from
//! proofs that are free for them.

pub mod bounds;
pub mod calculus;
pub mod cutelim;
pub mod search;
pub mod skolem;
pub mod syntax;
pub mod text;
pub mod transform;

pub use calculus::{check_proof, CheckError, Inference, Proof, ProofStats, RuleError, RuleTag, Sequent};
pub use syntax::{Expression, Formula, Name, Polarity, Term};
