//! Constraint-aligned PINN training engine.
//!
//! Implements a physics-informed training loop whose loss rewrites every
//! zeroth-order term with an explicitly solved additive offset and gates the
//! PDE residual behind a delay schedule, together with a vanilla baseline,
//! four steady-state benchmarks with exact solutions, and the optimization
//! diagnostics (gradient cosine, norm ratio, finite-difference Hessian
//! statistics, 2-D loss-landscape slices) used to study gradient conflict.

pub mod ad;
pub mod diagnostics;
pub mod landscape;
pub mod loss;
pub mod network;
pub mod pde;
pub mod tape;
pub mod trainer;

pub use ad::{AdError, Dual0, Dual1, Dual2, DualTaylor};
pub use loss::{DelaySchedule, OffsetState, ResidualBundle};
pub use network::{MlpSpec, ParamVector};
pub use pde::{BenchmarkKind, BenchmarkProblem, CollocationSet};
pub use trainer::{RunLog, TrainConfig, TrainMode};
