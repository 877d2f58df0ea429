//! Twisted loop-group connection data for reflective submanifolds of symmetric
//! spaces: the Lie-algebraic substrate, Laurent-polynomial loops, zero-curvature
//! frame integration and geometric verification of the resulting immersions.

pub mod error;
pub mod geom;
pub mod io;
pub mod linalg;
pub mod liecore;
pub mod loops;
pub mod solitons;
pub mod zerocurv;

pub use error::{Error, Result};
pub use linalg::Mat;
pub use liecore::{
    build_lagrangian_pair, build_space_form_pair, check_bracket_relations, decompose, rank_oracle,
    trace_form, Family, FourComponents, Sub, SymmetricPairSpec,
};
pub use loops::{ConnectionField, GridChart, Spectral};
pub use zerocurv::FrameField;
