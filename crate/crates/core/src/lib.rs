//! Symmetric informationally complete measurements realized as two
//! successive measurements: a fuzzy (weak) first step followed by a
//! projective measurement chosen by the first outcome.

pub mod catalog;
pub mod cli;
pub mod error;
pub mod fuzzy;
pub mod hwsic;
pub mod linalg;
pub mod optics;
pub mod povm;
pub mod random;
pub mod tomography;

pub use error::{Error, Result};
pub use linalg::{Ket, Operator, C64};
