//! Homogeneity tests for correlated bilateral binary data under a Clayton
//! copula model.
//!
//! A subject contributes two paired binary outcomes (e.g. both eyes) and is
//! summarised by the number of affected sides, 0, 1 or 2. The per-group
//! counts form a [`FrequencyTable`]; the rates `pi_i` are compared across
//! groups with likelihood-ratio, score and Wald tests while the within-pair
//! dependence is modelled by a shared Clayton parameter `theta`.
//!
//! The closed-form pieces (copula, likelihood, information, special
//! functions) are generic over [`Scalar`] and work in `f32` or `f64`; fitting,
//! testing and simulation run in `f64`. The aliases below fix the scalar type.

pub mod copula;
pub mod error;
pub mod estimation;
pub mod fisher;
pub mod hypothesis;
pub mod io;
pub mod likelihood;
mod optimize;
pub mod scalar;
pub mod special;
pub mod sim;
pub mod table;

pub use error::{Error, Result};
pub use estimation::{fit, fit_with, FitOptions, FitResult};
pub use hypothesis::{lr_test, score_test, wald_test, TestMethod, TestReport, WaldInformation};
pub use likelihood::Hypothesis;
pub use sim::{SimSpec, SimSummary, Sizes, SweepSpec, TableKind};
pub use scalar::Scalar;
pub use special::chisq_sf;
pub use table::{FrequencyTable, GroupCounts};

pub type Rate = copula::Rate<f64>;
pub type Theta = copula::Theta<f64>;
pub type CellProbs = copula::CellProbs<f64>;
pub type ClassicalEquivalents = copula::ClassicalEquivalents<f64>;
pub type ModelParams = likelihood::ModelParams<f64>;
pub type InfoMatrix = fisher::InfoMatrix<f64>;

pub type Rate32 = copula::Rate<f32>;
pub type Theta32 = copula::Theta<f32>;
pub type CellProbs32 = copula::CellProbs<f32>;
pub type ModelParams32 = likelihood::ModelParams<f32>;
pub type InfoMatrix32 = fisher::InfoMatrix<f32>;
