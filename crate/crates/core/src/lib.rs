//! A laboratory for continued-fraction normality.
//!
//! * [`cf`]: exact continued-fraction arithmetic and Gauss measures.
//! * [`sampler`] and [`stream`]: Gauss-distributed digit streams and their file format.
//! * [`transfer`]: the Gauss transfer operator, Wirsing's operator and the correlation bound.
//! * [`oracle`]: certified enumeration of `mu(A ∩ T^-n A)`.
//! * [`skew`]: the Gauss map augmented with a finite marker automaton.
//! * [`experiment`]: arithmetic-progression subsampling of digit streams.
//! * [`cli`]: the `cflab` command-line surface.

pub mod cf;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod hplog;
pub mod oracle;

pub use error::{CfError, Result};
pub mod sampler;
pub mod skew;
pub mod stream;
pub mod transfer;

/// Version string recorded in run metadata.
pub const TOOL_VERSION: &str = concat!("cflab ", env!("CARGO_PKG_VERSION"));
