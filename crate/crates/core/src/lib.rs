//! Magnetic-resonance linewidth of ⁸⁷Rb in Rb/Xe/N₂ vapor cells.

pub mod constants;
pub mod eigen;
pub mod error;
pub mod fit;
pub mod generator;
pub mod linewidth;
pub mod oracle;
pub mod liouville;
pub mod rates;
pub mod spin;

pub use error::{Error, Result};

pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;
pub type CVector = nalgebra::DVector<num_complex::Complex64>;
