//! Partially decoupled atomic norm minimization for cascaded channel
//! estimation in RIS-aided MIMO links.
//!
//! The crate is layered bottom-up:
//!
//! - [`linalg`]: dense complex matrices and factorizations.
//! - [`channel`]: ground-truth channel generation and the sounding model.
//! - [`toeplitz`]: multi-level Toeplitz matrices and root-MUSIC.
//! - [`sdp`]: conic problem builders and a primal-dual interior-point solver.
//! - [`estimators`]: PDANM, RPDANM, RPDANM-APC and the ANM baselines.
//! - [`testdata`]: sampling helpers for well-separated planted instances.

pub mod channel;
pub mod estimators;
pub mod linalg;
pub mod sdp;
pub mod testdata;
pub mod toeplitz;

pub use linalg::{ComplexMatrix, C64};
