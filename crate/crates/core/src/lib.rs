//! Kernel support vector machines trained with a working-set dual solver.
//!
//! Binary and one-vs-one multiclass classification and ε-regression share a
//! single dual form, `min ½αᵀQα + pᵀα` subject to `yᵀα = 0` and
//! `0 ≤ α_i ≤ C`; the tasks differ only in how `y`, `p` and the row mapping
//! are built (see [`tasks`]). The [`solver`] optimizes small working sets
//! chosen by gradient-based KKT violation and refreshes the full gradient
//! after each step.
//!
//! Around that sit kernels with a row cache, feature scaling, k-fold
//! cross-validation and grid tuning, sparse/CSV/model-file IO, two
//! reference QP solvers used as test oracles, and a benchmark harness.

pub mod bench;
pub mod cache;
pub mod data;
pub mod error;
pub mod io;
pub mod kernel;
pub mod model;
pub mod oracle;
pub mod preprocess;
pub mod problem;
pub mod solver;
pub mod tasks;
pub mod validation;

pub use data::{validate_dataset, Dataset, DatasetBuilder, SparseRow};
pub use error::{Result, SvmError};
pub use kernel::{KernelKind, KernelSpec};
pub use model::{DecisionFunction, ModelTask, SvmModel};
pub use preprocess::{apply_scaler, fit_scaler, ScalerParams};
pub use problem::{Problem, QMatrix};
pub use solver::{train_dual, TrainConfig};
pub use tasks::{decision_values, predict, train, SvmParams, TaskKind};
