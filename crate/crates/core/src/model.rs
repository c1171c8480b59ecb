//! Trained model representation.

use crate::data::Dataset;
use crate::kernel::KernelSpec;
use crate::preprocess::ScalerParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTask {
    BinarySvc,
    MulticlassOvo,
    EpsilonSvr,
}

impl ModelTask {
    pub fn name(self) -> &'static str {
        match self {
            ModelTask::BinarySvc => "binary_svc",
            ModelTask::MulticlassOvo => "multiclass_ovo",
            ModelTask::EpsilonSvr => "epsilon_svr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "binary_svc" => Some(ModelTask::BinarySvc),
            "multiclass_ovo" => Some(ModelTask::MulticlassOvo),
            "epsilon_svr" => Some(ModelTask::EpsilonSvr),
            _ => None,
        }
    }

    pub fn is_classification(self) -> bool {
        self != ModelTask::EpsilonSvr
    }
}

/// One decision function `f(x) = Σ coef_s·K(sv_s, x) + bias`.
///
/// For classification it separates `class_a` from `class_b` (indices into
/// [`SvmModel::class_labels`], `class_a < class_b`); `f > 0` votes for
/// `positive`, `f < 0` for the other class and `f = 0` for `class_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionFunction {
    pub class_a: usize,
    pub class_b: usize,
    pub positive: usize,
    /// Rows of [`SvmModel::support_vectors`].
    pub sv_indices: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

impl DecisionFunction {
    /// Class chosen for decision value `f`.
    pub fn vote(&self, f: f64) -> usize {
        let negative = if self.positive == self.class_a { self.class_b } else { self.class_a };
        if f > 0.0 {
            self.positive
        } else if f < 0.0 {
            negative
        } else {
            self.class_a
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub gap: f64,
    pub violation: f64,
    pub converged: bool,
    pub iteration_cap_reached: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub task: ModelTask,
    pub kernel: KernelSpec,
    pub n_features: usize,
    /// Pooled support vectors shared by all decision functions, stored in
    /// the scaled feature space when a scaler is present.
    pub support_vectors: Dataset,
    /// Classes in order of first appearance; empty for regression.
    pub class_labels: Vec<f64>,
    /// One per class pair for one-vs-one, otherwise exactly one.
    pub decision_functions: Vec<DecisionFunction>,
    pub scaler: Option<ScalerParams>,
    /// One entry per decision function.
    pub training_meta: Vec<TrainingMeta>,
}

impl SvmModel {
    pub fn n_support_vectors(&self) -> usize {
        self.support_vectors.n_rows()
    }
}
