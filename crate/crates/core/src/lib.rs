//! Conflict resolution for community databases in which users hold explicit
//! beliefs about keyed objects and trust one another with priorities.
//!
//! For every user and key the crate computes the *possible* values (held in
//! some stable solution) and the *certain* value (held in all of them), by a
//! brute-force stable-model [`oracle`] and by the polynomial [`resolve`]
//! engine, plus a [`bulk`] variant for many keys over one topology.

pub mod bulk;
pub mod error;
pub mod generate;
pub mod harness;
pub mod network;
pub mod oracle;
pub mod program;
pub mod resolve;
pub mod scc;
pub mod verify;

pub use bulk::{bulk_resolve, BulkResolver, PossRole, PossRow, PossTable};
pub use error::{Error, Result};
pub use generate::{GenSpec, Workload};
pub use harness::{BenchOptions, BenchRecord, ScalingFit, Suite};
pub use network::{Edit, ExplicitBelief, Key, TrustMapping, TrustNetwork, UserId, Value};
pub use oracle::{oracle_resolve, translate_to_program, Atom};
pub use program::{GroundProgram, GroundRule, Interpretation, DEFAULT_ATOM_LIMIT};
pub use resolve::{resolve, resolve_all_keys, results_to_csv, ResolutionResult, Topology};
pub use scc::{condense, Condensation};
