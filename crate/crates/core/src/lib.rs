//! Longitudinal higher-order DINA modelling.
//!
//! The model has three layers:
//!
//! 1. a DINA measurement model per occasion, with an optional standard-normal
//!    random effect shared by every administration of the same anchor item;
//! 2. a logistic link from each occasion's general ability to attribute
//!    mastery, with slopes and intercepts held equal across occasions;
//! 3. a multivariate normal distribution over the occasion-specific general
//!    abilities, identified by fixing the first mean to 0 and variance to 1.
//!
//! The crate covers data generation ([`simulation`]), marginal maximum
//! likelihood estimation by EM over a fixed quadrature grid ([`estimation`]),
//! posterior scoring ([`scoring`]), growth and recovery summaries
//! ([`analytics`]) and the delimited-text / JSON file formats ([`io`]).

pub mod analytics;
pub mod error;
pub mod estimation;
pub mod exec;
pub mod io;
pub mod linalg;
pub mod model;
pub mod scoring;
pub mod simulation;

pub use error::{Error, Result};
pub use model::{
    AnchorGroup, AttributePattern, ItemParameters, ItemRef, LongitudinalDesign, ModelParameters,
    ModelVariant, PatternSpace, QMatrix, ResponseMatrix, SlopeConstraint, StructuralParameters,
};
