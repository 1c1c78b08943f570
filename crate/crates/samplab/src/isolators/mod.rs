//! Isolators, robust extractors, the hash families that witness them and
//! the lemma-level constructions between them.

mod hash;
mod isolator;
mod lemmas;
mod search;
mod tables;

pub use hash::{ip_hash, ip_table, HashFamily, HashMember};
pub use isolator::{
    class_profile, light_accept_mass, verify_isolator, verify_isolator_on_profile, verify_robust_extractor,
    ClassProfile, IsolatorClaim, IsolatorSpec, RobustReport, Verification, Verified, Witness,
};
pub use lemmas::{
    comm_isolator_bound, conditioned_extractor_error, flat_extractor_error, flat_robustness_check, input_reduce,
    iso_from_rext, lemma44_inequality, lift_isolator, mixture_isolator_bound, reduction_length,
    two_source_robust_bound, FlatMode, FlatVerdict, InputReduction, Lemma44, Lemma44Params, MixtureBound, PartTag,
    TwoSourceBound, TwoSourceParams,
};
pub use search::{search_isolator, Found, MemberStat, SearchOutcome};
pub use tables::{BoolFnFile, BoolFnTable, MultiOutFile, MultiOutFnTable, TABLE_BITS_MAX};
