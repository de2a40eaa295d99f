pub mod boundary;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod leaf;
pub mod merge;
pub mod linalg;
pub mod medium;
pub mod oracle;
pub mod quadrature;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};
pub use geometry::{Point, Rect};
pub use medium::{Medium, WaveContext};
pub use num_complex::Complex64 as C64;
