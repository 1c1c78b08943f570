//! The direct-product hard distribution, the distance bound it satisfies
//! against any class with an isolator for the addressed class, exhaustive
//! certification sweeps, and the random-support counting search.

mod bound;
mod counting;
mod hard;

pub use bound::{certify_theorem, theorem_bound, theorem_bound_terms, BoundReport, BoundTerms, SourceTv};
pub use counting::{counting_search, support_worst_tv, CountingSearchReport};
pub use hard::{addr_iso_zero, build_hard_dist, light_containment, HardDistSpec};
