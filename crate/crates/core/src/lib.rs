//! Hyperspectral mineral identification and mapping.
//!
//! The crate follows the usual hourglass flow for imaging-spectrometer data:
//!
//! 1. [`envi_io`] reads and writes ENVI cubes and spectral-library CSVs.
//! 2. [`preprocess`] removes bad bands, crops a region of interest, scales
//!    radiance and converts it to (relative) reflectance.
//! 3. [`mnf`] fits a Minimum Noise Fraction transform and denoises.
//! 4. [`ppi`] ranks pixels by purity with random skewer projections.
//! 5. [`endmember`] clusters the purest pixels into class-mean endmembers.
//! 6. [`spectral_match`] ranks library minerals against each endmember.
//! 7. [`mapping`] classifies the whole scene (SAM, matched filter, MTMF).
//!
//! [`synthcube`] generates linear-mixing scenes with known ground truth and
//! [`pipeline`] wires the stages together behind a plain-text config.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cube;
pub mod endmember;
pub mod envi_io;
pub mod error;
pub mod hyperion;
pub mod kv;
pub mod mapping;
pub mod mnf;
pub mod numerics;
pub mod pipeline;
pub mod ppi;
pub mod preprocess;
pub mod spectral_match;
pub mod synthcube;

pub use cube::{SpectralCube, UnitsTag};
pub use error::{Error, Result};
