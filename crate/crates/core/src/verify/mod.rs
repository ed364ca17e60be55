//! Numerical checks of the algebraic structure of the model: the dynamic
//! Gibbs identity and its constituent identities, conservation of mass,
//! momentum and energy, the entropy inequality, the Fick limit and the
//! single-fluid limit.

pub mod conservation;
pub mod fick;
pub mod fields;
pub mod gibbs;
pub mod reduction;

pub use conservation::{conservation_drift, entropy_monotonicity, ConservationDrift, Drift, EntropyCheck};
pub use fick::{fick_residual, pressure_balanced_state, FickResidual};
pub use fields::{ConstantField, FieldValue, ManufacturedField, TranslatingField, TrigField};
pub use gibbs::{
    appendix_identities, gibbs_convergence, gibbs_residual, AppendixResiduals, ConvergenceStudy, GibbsResidual,
};
pub use reduction::{single_fluid_reduction, ReductionConfig, ReductionResult};
