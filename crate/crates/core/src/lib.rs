//! Liquidity-adjusted risk measures on finite scenario spaces.
//!
//! A position of `y` shares is valued at the price it can actually be
//! unwound at, given a price-impact model. Applying a convex risk functional
//! to that exposure gives the illiquidity measure `β(y)`, from which capital
//! requirements for block and split execution follow. The [`duality`] module
//! checks the conjugate and penalty representations of these measures on
//! grids and probability simplices.

pub mod duality;
pub mod error;
pub mod illiq;
pub mod impact;
pub mod quadrature;
pub mod riskmeasure;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use impact::{ImpactModel, ImpactShape, ImpactSpec, Quadrature, SupplyCurve, Tranche};

pub use riskmeasure::{rho, Classification, RiskFunctional};
pub use scenario::{GbmParams, ProbabilityVector, ScenarioSpace, ScenarioVector};
