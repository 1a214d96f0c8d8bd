//! Nonlinear circuits of parametric down-converters and linear optics, and
//! their linear partially time-reversed duals.

pub mod circuit;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod harness;
pub mod linalg;
pub mod linamp;
pub mod ptr;
pub mod scalar;
pub mod scatter;

pub use circuit::{Circuit, Element, Stage};
pub use error::{Error, Result};
pub use fock::{CapChoice, FockSpace, Occupation, TruncationPolicy};
pub use gaussian::{GaussianState, SymplecticMap};
pub use harness::VerificationReport;
pub use linamp::{DualityConfig, DualityReport};
pub use ptr::PtrSetup;
pub use scalar::{Cx, Real};
pub use scatter::{ScatteringMatrix, TransferMatrix};

pub type C64 = Cx<f64>;
pub type Circuit64 = Circuit<f64>;
pub type PtrSetup64 = PtrSetup<f64>;
pub type ScatteringMatrix64 = ScatteringMatrix<f64>;
pub type TransferMatrix64 = TransferMatrix<f64>;
pub type GaussianState64 = GaussianState<f64>;
pub type SymplecticMap64 = SymplecticMap<f64>;
pub type Matrix64 = linalg::CMatrix<f64>;
