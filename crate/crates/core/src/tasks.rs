//! Problem builders for classification and ε-regression, model
//! finalization and prediction.

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Result, SvmError};
use crate::kernel::{kernel_eval_rows, KernelSpec};
use crate::model::{DecisionFunction, ModelTask, SvmModel, TrainingMeta};
use crate::preprocess::{apply_scaler, fit_scaler};
use crate::problem::Problem;
use crate::solver::{train_dual, DualSolution, TrainConfig};

/// Coefficients with `|coef| ≤ PRUNE_FACTOR·C` are dropped from the model.
pub const PRUNE_FACTOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Classification,
    Regression,
}

/// Everything `train` needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub task: TaskKind,
    pub kernel: KernelSpec,
    pub config: TrainConfig,
    pub scale: bool,
}

impl SvmParams {
    pub fn classification(kernel: KernelSpec, c: f64) -> Self {
        SvmParams {
            task: TaskKind::Classification,
            kernel,
            config: TrainConfig { c, ..Default::default() },
            scale: false,
        }
    }

    pub fn regression(kernel: KernelSpec, c: f64, epsilon: f64) -> Self {
        SvmParams {
            task: TaskKind::Regression,
            kernel,
            config: TrainConfig {
                c,
                epsilon_tube: epsilon,
                ..Default::default()
            },
            scale: false,
        }
    }
}

/// Binary classification dual over all rows: `y = labels`, `p = −1`.
pub fn build_svc_problem<'a>(data: &'a Dataset, labels: &[f64], kernel: KernelSpec, c: f64) -> Result<Problem<'a>> {
    build_svc_problem_on(data, (0..data.n_rows()).collect(), labels, kernel, c)
}

/// Binary classification dual over a subset of rows; `labels[k]` is the ±1
/// label of `rows[k]`.
pub fn build_svc_problem_on<'a>(
    data: &'a Dataset,
    rows: Vec<usize>,
    labels: &[f64],
    kernel: KernelSpec,
    c: f64,
) -> Result<Problem<'a>> {
    if labels.len() != rows.len() {
        return Err(SvmError::ShapeMismatch(format!(
            "{} labels for {} rows",
            labels.len(),
            rows.len()
        )));
    }
    let has_pos = labels.iter().any(|&v| v == 1.0);
    let has_neg = labels.iter().any(|&v| v == -1.0);
    if !(has_pos && has_neg) {
        return Err(SvmError::DegenerateLabels(
            "binary classification needs both +1 and -1 labels".into(),
        ));
    }
    let m = rows.len();
    Problem::new(kernel, data, rows, 1, labels.to_vec(), vec![-1.0; m], c)
}

/// ε-regression dual over two copies of the rows: positive copy first with
/// `p = ε − z`, negative copy with `p = ε + z`.
pub fn build_svr_problem<'a>(
    data: &'a Dataset,
    targets: &[f64],
    kernel: KernelSpec,
    c: f64,
    epsilon: f64,
) -> Result<Problem<'a>> {
    let l = data.n_rows();
    if targets.len() != l {
        return Err(SvmError::ShapeMismatch(format!("{} targets for {l} rows", targets.len())));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(SvmError::InvalidParameter(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let mut y = vec![1.0; l];
    y.resize(2 * l, -1.0);
    let mut p: Vec<f64> = targets.iter().map(|z| epsilon - z).collect();
    p.extend(targets.iter().map(|z| epsilon + z));
    Problem::new(kernel, data, (0..l).collect(), 2, y, p, c)
}

/// Distinct labels in order of first appearance.
pub fn class_order(labels: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &v in labels {
        if !out.iter().any(|&c| c == v) {
            out.push(v);
        }
    }
    out
}

fn meta_of(sol: &DualSolution) -> TrainingMeta {
    TrainingMeta {
        iterations: sol.meta.iterations,
        gap: sol.meta.gap,
        violation: sol.meta.violation,
        converged: sol.meta.converged,
        iteration_cap_reached: sol.meta.iteration_cap_reached,
    }
}

/// Trains a model. Classification with two classes gives one binary
/// machine, with more classes one machine per class pair.
pub fn train(data: &Dataset, targets: &[f64], params: &SvmParams) -> Result<SvmModel> {
    params.config.validate()?;
    params.kernel.validate()?;
    if targets.len() != data.n_rows() {
        return Err(SvmError::ShapeMismatch(format!(
            "{} targets for {} rows",
            targets.len(),
            data.n_rows()
        )));
    }
    if let Some(i) = targets.iter().position(|t| !t.is_finite()) {
        return Err(SvmError::InvalidParameter(format!("target {i} is not finite")));
    }
    let (scaler, scaled) = if params.scale {
        let s = fit_scaler(data);
        let d = apply_scaler(&s, data)?;
        (Some(s), Some(d))
    } else {
        (None, None)
    };
    let train_data = scaled.as_ref().unwrap_or(data);
    let mut model = match params.task {
        TaskKind::Regression => train_svr(train_data, targets, params)?,
        TaskKind::Classification => train_svc(train_data, targets, params)?,
    };
    model.scaler = scaler;
    Ok(model)
}

fn train_svr(data: &Dataset, targets: &[f64], params: &SvmParams) -> Result<SvmModel> {
    let cfg = &params.config;
    let problem = build_svr_problem(data, targets, params.kernel, cfg.c, cfg.epsilon_tube)?;
    let sol = train_dual(&problem, cfg, None)?;
    let l = data.n_rows();
    let threshold = PRUNE_FACTOR * cfg.c;
    let mut rows = Vec::new();
    let mut coefficients = Vec::new();
    for k in 0..l {
        let coef = sol.alpha[k] - sol.alpha[k + l];
        if coef.abs() > threshold {
            rows.push(k);
            coefficients.push(coef);
        }
    }
    Ok(SvmModel {
        task: ModelTask::EpsilonSvr,
        kernel: params.kernel,
        n_features: data.n_cols(),
        support_vectors: data.select_rows(&rows),
        class_labels: Vec::new(),
        decision_functions: vec![DecisionFunction {
            class_a: 0,
            class_b: 0,
            positive: 0,
            sv_indices: (0..rows.len()).collect(),
            coefficients,
            bias: sol.bias,
        }],
        scaler: None,
        training_meta: vec![meta_of(&sol)],
    })
}

struct PairFit {
    class_a: usize,
    class_b: usize,
    positive: usize,
    rows: Vec<usize>,
    coefficients: Vec<f64>,
    bias: f64,
    meta: TrainingMeta,
}

fn train_svc(data: &Dataset, labels: &[f64], params: &SvmParams) -> Result<SvmModel> {
    let classes = class_order(labels);
    if classes.len() < 2 {
        return Err(SvmError::DegenerateLabels(format!(
            "classification needs at least two classes, found {}",
            classes.len()
        )));
    }
    let class_of: Vec<usize> = labels
        .iter()
        .map(|v| classes.iter().position(|c| c == v).expect("label in class list"))
        .collect();
    let k = classes.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();

    let fit_pair = |&(a, b): &(usize, usize)| -> Result<PairFit> {
        // The numerically larger label takes the +1 side.
        let positive = if classes[a] > classes[b] { a } else { b };
        let rows: Vec<usize> = (0..labels.len()).filter(|&i| class_of[i] == a || class_of[i] == b).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|&i| if class_of[i] == positive { 1.0 } else { -1.0 })
            .collect();
        let problem = build_svc_problem_on(data, rows.clone(), &y, params.kernel, params.config.c)?;
        let sol = train_dual(&problem, &params.config, None)?;
        let threshold = PRUNE_FACTOR * params.config.c;
        let mut sv_rows = Vec::new();
        let mut coefficients = Vec::new();
        for (pos, &row) in rows.iter().enumerate() {
            let coef = y[pos] * sol.alpha[pos];
            if coef.abs() > threshold {
                sv_rows.push(row);
                coefficients.push(coef);
            }
        }
        Ok(PairFit {
            class_a: a,
            class_b: b,
            positive,
            rows: sv_rows,
            coefficients,
            bias: sol.bias,
            meta: meta_of(&sol),
        })
    };
    let fits: Vec<PairFit> = if params.config.parallel && pairs.len() > 1 {
        pairs.par_iter().map(fit_pair).collect::<Result<_>>()?
    } else {
        pairs.iter().map(fit_pair).collect::<Result<_>>()?
    };

    // Pool support vectors across pairs in ascending row order.
    let mut pool: Vec<usize> = fits.iter().flat_map(|f| f.rows.iter().copied()).collect();
    pool.sort_unstable();
    pool.dedup();
    let mut decision_functions = Vec::with_capacity(fits.len());
    let mut training_meta = Vec::with_capacity(fits.len());
    for f in fits {
        let sv_indices = f
            .rows
            .iter()
            .map(|r| pool.binary_search(r).expect("row pooled"))
            .collect();
        decision_functions.push(DecisionFunction {
            class_a: f.class_a,
            class_b: f.class_b,
            positive: f.positive,
            sv_indices,
            coefficients: f.coefficients,
            bias: f.bias,
        });
        training_meta.push(f.meta);
    }
    Ok(SvmModel {
        task: if k == 2 { ModelTask::BinarySvc } else { ModelTask::MulticlassOvo },
        kernel: params.kernel,
        n_features: data.n_cols(),
        support_vectors: data.select_rows(&pool),
        class_labels: classes,
        decision_functions,
        scaler: None,
        training_meta,
    })
}

/// Decision values: one vector per input row, one entry per decision function.
pub fn decision_values(model: &SvmModel, data: &Dataset) -> Result<Vec<Vec<f64>>> {
    if data.n_cols() != model.n_features {
        return Err(SvmError::ShapeMismatch(format!(
            "model expects {} features, data has {}",
            model.n_features,
            data.n_cols()
        )));
    }
    let scaled;
    let data = match &model.scaler {
        Some(s) => {
            scaled = apply_scaler(s, data)?;
            &scaled
        }
        None => data,
    };
    let svs = &model.support_vectors;
    let n_sv = svs.n_rows();
    (0..data.n_rows())
        .into_par_iter()
        .map(|i| {
            let x = data.row(i);
            let k: Vec<f64> = (0..n_sv)
                .map(|s| kernel_eval_rows(&svs.row(s), &x, &model.kernel, (s, i)))
                .collect::<Result<_>>()?;
            Ok(model
                .decision_functions
                .iter()
                .map(|df| {
                    df.sv_indices
                        .iter()
                        .zip(&df.coefficients)
                        .map(|(&s, &c)| c * k[s])
                        .sum::<f64>()
                        + df.bias
                })
                .collect())
        })
        .collect()
}

/// Predicted labels (classification) or values (regression).
pub fn predict(model: &SvmModel, data: &Dataset) -> Result<Vec<f64>> {
    let dv = decision_values(model, data)?;
    Ok(dv.iter().map(|f| label_from_decisions(model, f)).collect())
}

fn label_from_decisions(model: &SvmModel, f: &[f64]) -> f64 {
    match model.task {
        ModelTask::EpsilonSvr => f[0],
        ModelTask::BinarySvc => model.class_labels[model.decision_functions[0].vote(f[0])],
        ModelTask::MulticlassOvo => {
            let mut votes = vec![0usize; model.class_labels.len()];
            for (df, &v) in model.decision_functions.iter().zip(f) {
                votes[df.vote(v)] += 1;
            }
            // max votes, lowest class index on ties
            let mut best = 0;
            for c in 1..votes.len() {
                if votes[c] > votes[best] {
                    best = c;
                }
            }
            model.class_labels[best]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::problem::QMatrix;

    fn two_point() -> (Dataset, Vec<f64>) {
        (Dataset::from_dense(&[vec![-1.0], vec![1.0]]).unwrap(), vec![-1.0, 1.0])
    }

    #[test]
    fn svc_problem_shape() {
        let (d, y) = two_point();
        let p = build_svc_problem(&d, &y, KernelSpec::linear(), 1.0).unwrap();
        assert_eq!(p.y(), &[-1.0, 1.0]);
        assert_eq!(p.p(), &[-1.0, -1.0]);
        assert!(build_svc_problem(&d, &[1.0, 1.0], KernelSpec::linear(), 1.0)
            .unwrap_err()
            .to_string()
            .contains("degenerate labels"));

        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let big = Dataset::from_dense(&rows).unwrap();
        let labels: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let p = build_svc_problem(&big, &labels, KernelSpec::linear(), 1.0).unwrap();
        assert_eq!(p.m(), 100);
        assert!(p.p().iter().all(|&v| v == -1.0));
    }

    #[test]
    fn svr_problem_linear_term() {
        let d = Dataset::from_dense(&[vec![1.0], vec![2.0]]).unwrap();
        let p = build_svr_problem(&d, &[3.0, -1.0], KernelSpec::rbf(1.0), 1.0, 0.5).unwrap();
        assert_eq!(p.m(), 4);
        assert_eq!(p.y(), &[1.0, 1.0, -1.0, -1.0]);
        assert_eq!(p.p(), &[-2.5, 1.5, 3.5, -0.5]);

        let z = build_svr_problem(&d, &[0.0, 0.0], KernelSpec::rbf(1.0), 1.0, 0.0).unwrap();
        assert!(z.p().iter().all(|&v| v == 0.0));

        let mut q = QMatrix::new(&p, 1 << 20).unwrap();
        assert_eq!(q.kernel_row(0, &[2]).unwrap(), vec![-1.0]);
    }

    #[test]
    fn two_point_model_and_predictions() {
        let (d, y) = two_point();
        let m = train(&d, &y, &SvmParams::classification(KernelSpec::linear(), 1.0)).unwrap();
        assert_eq!(m.task, ModelTask::BinarySvc);
        assert_eq!(m.n_support_vectors(), 2);
        let df = &m.decision_functions[0];
        assert!((df.coefficients[0] + 0.5).abs() < 1e-8);
        assert!((df.coefficients[1] - 0.5).abs() < 1e-8);
        assert!(df.bias.abs() < 1e-8);

        let probes = Dataset::from_dense(&[vec![0.0], vec![2.0], vec![-3.0]]).unwrap();
        let dv = decision_values(&m, &probes).unwrap();
        assert!(dv[1][0] > 0.0 && (dv[1][0] - 2.0).abs() < 1e-7);
        // exact zero at the origin: the first-listed class wins
        let zero_model = SvmModel {
            decision_functions: vec![DecisionFunction { bias: 0.0, ..df.clone() }],
            ..m.clone()
        };
        let pred = predict(&zero_model, &probes).unwrap();
        assert_eq!(pred, vec![-1.0, 1.0, -1.0]);
    }

    #[test]
    fn constant_target_regression() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 * 0.3, (i as f64).sin()]).collect();
        let d = Dataset::from_dense(&rows).unwrap();
        let z = vec![4.2; 12];
        let m = train(&d, &z, &SvmParams::regression(KernelSpec::rbf(0.5), 1.0, 0.1)).unwrap();
        assert_eq!(m.n_support_vectors(), 0);
        assert!((m.decision_functions[0].bias - 4.2).abs() < 1e-12);
        for v in predict(&m, &d).unwrap() {
            assert!((v - 4.2).abs() < 1e-12);
        }
    }

    #[test]
    fn column_mismatch_on_predict() {
        let (d, y) = two_point();
        let m = train(&d, &y, &SvmParams::classification(KernelSpec::linear(), 1.0)).unwrap();
        let wide = Dataset::from_dense(&[vec![1.0, 2.0]]).unwrap();
        assert!(predict(&m, &wide).is_err());
    }

    #[test]
    fn single_class_is_rejected() {
        let (d, _) = two_point();
        assert!(train(&d, &[3.0, 3.0], &SvmParams::classification(KernelSpec::linear(), 1.0)).is_err());
    }

    #[test]
    fn arbitrary_labels_map_to_classes() {
        let d = Dataset::from_dense(&[vec![-2.0], vec![-1.5], vec![1.0], vec![2.0]]).unwrap();
        let labels = [7.0, 7.0, 3.0, 3.0];
        let m = train(&d, &labels, &SvmParams::classification(KernelSpec::linear(), 10.0)).unwrap();
        assert_eq!(m.class_labels, vec![7.0, 3.0]);
        assert_eq!(predict(&m, &d).unwrap(), labels.to_vec());
    }

    #[test]
    fn three_classes_vote() {
        let centers = [(0.0, 0.0), (6.0, 0.0), (0.0, 6.0)];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (k, &(cx, cy)) in centers.iter().enumerate() {
            for j in 0..5 {
                let t = j as f64 * 1.3;
                rows.push(vec![cx + 0.4 * t.sin(), cy + 0.4 * t.cos()]);
                labels.push(k as f64 + 1.0);
            }
        }
        let d = Dataset::from_dense(&rows).unwrap();
        let m = train(&d, &labels, &SvmParams::classification(KernelSpec::rbf(0.5), 10.0)).unwrap();
        assert_eq!(m.task, ModelTask::MulticlassOvo);
        assert_eq!(m.decision_functions.len(), 3);
        assert_eq!(predict(&m, &d).unwrap(), labels);
    }

    #[test]
    fn scaling_is_stored_and_applied() {
        let d = Dataset::from_dense(&[vec![100.0, 1.0], vec![200.0, 1.0], vec![300.0, 1.0], vec![400.0, 1.0]]).unwrap();
        let y = [-1.0, -1.0, 1.0, 1.0];
        let mut params = SvmParams::classification(KernelSpec::rbf(0.5), 10.0);
        params.scale = true;
        let m = train(&d, &y, &params).unwrap();
        assert!(m.scaler.is_some());
        assert_eq!(predict(&m, &d).unwrap(), y.to_vec());
    }
}
