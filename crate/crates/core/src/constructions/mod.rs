//! Builders for functions with prescribed pointwise Lipschitz behaviour, and
//! the exact audits that go with them.

pub mod envelope;
pub mod lip_sum;
pub mod monotone;
pub mod small_lip;
pub mod ternary;
pub mod udt;

pub use envelope::{
    balance_point, envelope_flatten, envelope_refine, Envelope, FlattenResult, Partition, RefineResult, Vicinity,
};
pub use lip_sum::{build_lip1_sum, LipSum};
pub use monotone::{build_monotone_lip1, check_monotone_conditions, MonotoneMode, MonotoneReport};
pub use small_lip::{build_small_lip, SmallLip};
pub use ternary::{build_ternary_integral, check_ternary, normalize_ternary, TernaryDecomposition};
pub use udt::{build_udt_lip1, NestedClosedSystem, StageDiagnostics, UdtRun};
