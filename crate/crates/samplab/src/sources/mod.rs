//! Source models, their exact output distributions, the `addr` gadget and
//! enumeration of whole source classes.

mod addr;
mod affine;
mod class;
mod comm;
mod robp;
mod spec;

pub use addr::{addr_compose, addr_dist, addr_source_polynomial};
pub use affine::{affine_subspace_count, AffineSubspaces};
pub use class::{Class, ClassModel, ClassSpec, ClassView, EnumMode, MemberRef, DEFAULT_BUDGET};
pub use comm::{comm_to_mixture, CommNode, CommSpec, Party};
pub use robp::{robp_partition_to_comm, RobpEdge, RobpSpec};
pub use spec::{exact_output, sample, LocalSource, SourceSpec, SEED_BITS_MAX};
