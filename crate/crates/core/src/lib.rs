//! Heavy-tailed mutation for the (1+1) EA: operators, landscapes,
//! submodular and matroid-constrained objectives, Gaussian mutual
//! information, and a seeded benchmark harness.

pub mod bench;
pub mod bitstring;
pub mod ea;
pub mod graph_io;
pub mod instance;
pub mod landscapes;
pub mod matroid;
pub mod mutation;
pub mod mutual_info;
pub mod parallel;
pub mod rng;
pub mod set_function;
pub mod submodular;

pub use bitstring::BitString;
pub use ea::{run_opo_ea, run_opo_ea_observed, EaError, RunRecord, StopCondition};
pub use instance::{ConstraintSpec, FitnessSpec, Instance};
pub use mutation::{MutationOperator, OperatorSpec};
pub use set_function::SetFunction;
