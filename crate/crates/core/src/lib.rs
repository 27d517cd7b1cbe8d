//! Doubly robust estimation of weighted treatment effects and the
//! structure-agnostic lower-bound constructions that show it is optimal.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: binary-outcome data-generating processes, densities and true functionals.
//! * [`nuisance_oracle`]: nuisance estimates at prescribed L² error and membership checks.
//! * [`estimators`]: plug-in and doubly robust WATE/ATT estimators.
//! * [`adversary`]: weighted partitions, bump functions and the perturbed families.
//! * [`analysis`]: quantile risk, rate fits, Hellinger distances and distinguishability.

pub mod adversary;
pub mod analysis;
pub mod error;
pub mod estimators;
pub mod func;
pub mod model;
pub mod nuisance_oracle;
pub mod quadrature;
pub mod rng;
pub mod scenario;
pub mod sum;

pub use error::{Error, Result};
pub use func::{Func, Representation};
pub use model::{Dataset, FunctionalKind, FunctionalSpec, NuisancePair};
pub use nuisance_oracle::{Component, ErrorBudget};
pub use quadrature::{Quadrature, Rect, Rule};
