//! Per-user prediction of how a Reddit user will interact with a post.
//!
//! Numeric building blocks (learners, the MLP, metrics, readability) are
//! generic over the scalar type; the aliases below fix them to `f64`, and
//! [`ExactStump`] runs the stump fitter on exact rationals.

pub mod bundle;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod learners;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod sampling;
pub mod scalar;
pub mod semantic;
pub mod stats;
pub mod synthgen;

pub use bundle::UserModelBundle;
pub use features::{FeatureGroup, FeatureMask, FeatureVector};
pub use learners::{ClassifierModel, LearnerKind};
pub use model::{Corpus, InteractionEvent, InteractionType, LabeledInstance, Post, ViewContext};
pub use pipeline::PipelineConfig;
pub use scalar::{OrderedWeight, Scalar};

pub type Mlp = semantic::MlpParams<f64>;
pub type Adam = semantic::AdamState<f64>;
pub type NaiveBayes = learners::GaussianNb<f64>;
pub type Adaboost = learners::AdaboostModel<f64>;
pub type Stump = learners::DecisionStump<f64>;
pub type ExactStump = learners::DecisionStump<num_rational::Rational64>;
