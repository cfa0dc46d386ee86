//! Werner states and the two-copy inequality, Schmidt-number witnesses and the
//! associated k-positive map.

mod werner;
mod witness;

pub use werner::{
    check_two_copy, search_two_copy_violation, werner_state, SearchConfig, SearchOutcome,
    ViolationCertificate, WernerParams,
};
pub use witness::{kpositive_map_apply, witness_matrix, witness_value, WitnessSpec};
