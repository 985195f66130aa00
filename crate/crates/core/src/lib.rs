//! Transpose-free maximization of the generalized Rayleigh quotient
//! `r(v) = <v, Av> / <v, Bv>` for `B` symmetric positive definite.
//!
//! The solver sees `A` and `B` only through forward products: it samples a
//! random tangent direction on the B-sphere, computes the exact maximizer of
//! the quotient along that direction, and retracts. `A` need not be
//! symmetric and `A^T` is never applied.
//!
//! ```
//! use rayq_core::algorithms::{szo_run, SolverConfig};
//! use rayq_core::linalg::{Matrix, OperatorPair};
//! use rayq_core::sampling::RngStream;
//! use rayq_core::trace::NoMonitor;
//!
//! let a = Matrix::from_rows(&[&[3.0, 1.0], &[1.0, 2.0]]);
//! let pair = OperatorPair::from_dense(&a, &Matrix::identity(2)).unwrap();
//! let cfg = SolverConfig::with_m(1, 100);
//! let (state, _trace, _stop) = szo_run(&pair, &cfg, &mut RngStream::new(7, 0), &mut NoMonitor).unwrap();
//! assert!((state.a() - (5.0 + 5f64.sqrt()) / 2.0).abs() < 1e-10);
//! ```

pub mod algorithms;
pub mod complexify;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod problems;
pub mod sampling;
pub mod trace;

pub use error::{Error, Result};
