//! Zero-shot multi-domain semantic parsing with influence functions.
//!
//! A single LSTM encoder/decoder with an attention-based copy mechanism is
//! shared across all domains; a `K x 4d` domain head scores each state
//! against the K domains and a task regularizer ties predictions to the gold
//! domain. On top of the model sit a reverse-mode differentiation core with
//! exact Hessian-vector products, a damped conjugate-gradient inverse-HVP
//! solver, influence scores for examples and whole domains, and an
//! experiment harness (leave-one-out, learning curves, label-flip detection,
//! influence-guided augmentation) driven by the `zshot` CLI.
//!
//! The numerics are generic over [`scalar::Scalar`]; product code runs on
//! `f64` (see the aliases below) and Hessian-vector products run the same
//! code over [`scalar::Dual`].

pub mod autodiff;
pub mod data;
pub mod experiments;
pub mod influence;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod synth;

/// Scalar type used by all shipped models and solvers.
pub type Real = f64;

/// Dual over [`Real`]; gradients evaluated at this type yield exact HVPs.
pub type DualReal = scalar::Dual<Real>;

pub type ParamVec = autodiff::ParamVector<Real>;
pub type GradVec = autodiff::GradVector<Real>;
pub type TapeReal = autodiff::Tape<Real>;
