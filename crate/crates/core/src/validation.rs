//! Metrics, k-fold cross-validation and grid tuning.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Result, SvmError};
use crate::tasks::{class_order, predict, train, SvmParams, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricSet {
    Classification { accuracy: f64 },
    /// `pearson` is NaN when either side has zero variance.
    Regression { mse: f64, pearson: f64 },
}

impl MetricSet {
    /// The tuning objective, oriented so that larger is better.
    pub fn score(&self) -> f64 {
        match *self {
            MetricSet::Classification { accuracy } => accuracy,
            MetricSet::Regression { mse, .. } => -mse,
        }
    }
}

pub fn metrics(truth: &[f64], predicted: &[f64], task: TaskKind) -> Result<MetricSet> {
    if truth.len() != predicted.len() {
        return Err(SvmError::ShapeMismatch(format!(
            "{} truths vs {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(SvmError::ShapeMismatch("metrics need at least one value".into()));
    }
    let n = truth.len() as f64;
    Ok(match task {
        TaskKind::Classification => MetricSet::Classification {
            accuracy: truth.iter().zip(predicted).filter(|(a, b)| a == b).count() as f64 / n,
        },
        TaskKind::Regression => MetricSet::Regression {
            mse: truth.iter().zip(predicted).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n,
            pearson: pearson(truth, predicted),
        },
    })
}

/// Sample correlation coefficient; NaN for zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return f64::NAN;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

/// Assignment of rows to folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
    pub stratified: bool,
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignment[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded shuffle followed by round-robin assignment. With labels, each
/// class is shuffled and dealt separately, continuing the round robin.
pub fn kfold_split(n: usize, k: usize, seed: u64, labels: Option<&[f64]>) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(SvmError::InvalidParameter(format!(
            "need 2 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; n];
    let groups: Vec<Vec<usize>> = match labels {
        Some(labels) => {
            if labels.len() != n {
                return Err(SvmError::ShapeMismatch(format!("{} labels for {n} rows", labels.len())));
            }
            class_order(labels)
                .iter()
                .map(|c| (0..n).filter(|&i| labels[i] == *c).collect())
                .collect()
        }
        None => vec![(0..n).collect()],
    };
    let mut t = 0;
    for mut g in groups {
        g.shuffle(&mut rng);
        for i in g {
            assignment[i] = t % k;
            t += 1;
        }
    }
    Ok(FoldPlan {
        k,
        assignment,
        seed,
        stratified: labels.is_some(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub fold: usize,
    pub n_test: usize,
    /// `Err` holds the reason a fold was skipped.
    pub result: std::result::Result<MetricSet, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<FoldOutcome>,
    /// Mean over successful folds; `None` when every fold failed.
    pub mean: Option<MetricSet>,
}

impl CvReport {
    pub fn failed_folds(&self) -> usize {
        self.folds.iter().filter(|f| f.result.is_err()).count()
    }
}

/// k-fold cross-validation. Scaling, when enabled, is fitted on each
/// training split only.
pub fn cross_validate(data: &Dataset, targets: &[f64], params: &SvmParams, plan: &FoldPlan) -> Result<CvReport> {
    if plan.n() != data.n_rows() || targets.len() != data.n_rows() {
        return Err(SvmError::ShapeMismatch(format!(
            "plan covers {} rows, data has {} rows and {} targets",
            plan.n(),
            data.n_rows(),
            targets.len()
        )));
    }
    let mut folds = Vec::with_capacity(plan.k);
    for fold in 0..plan.k {
        let test = plan.test_rows(fold);
        let train_rows = plan.train_rows(fold);
        let train_data = data.select_rows(&train_rows);
        let train_targets: Vec<f64> = train_rows.iter().map(|&i| targets[i]).collect();
        let result = match train(&train_data, &train_targets, params) {
            Ok(model) => {
                let test_data = data.select_rows(&test);
                let truth: Vec<f64> = test.iter().map(|&i| targets[i]).collect();
                let pred = predict(&model, &test_data)?;
                Ok(metrics(&truth, &pred, params.task)?)
            }
            Err(SvmError::DegenerateLabels(msg)) => Err(msg),
            Err(e) => return Err(e),
        };
        folds.push(FoldOutcome {
            fold,
            n_test: test.len(),
            result,
        });
    }
    let ok: Vec<MetricSet> = folds.iter().filter_map(|f| f.result.as_ref().ok().copied()).collect();
    let mean = if ok.is_empty() {
        None
    } else {
        let n = ok.len() as f64;
        Some(match params.task {
            TaskKind::Classification => MetricSet::Classification {
                accuracy: ok
                    .iter()
                    .map(|m| match m {
                        MetricSet::Classification { accuracy } => *accuracy,
                        _ => f64::NAN,
                    })
                    .sum::<f64>()
                    / n,
            },
            TaskKind::Regression => {
                let (mut mse, mut r) = (0.0, 0.0);
                for m in &ok {
                    if let MetricSet::Regression { mse: e, pearson: p } = m {
                        mse += e;
                        r += p;
                    }
                }
                MetricSet::Regression {
                    mse: mse / n,
                    pearson: r / n,
                }
            }
        })
    };
    Ok(CvReport { folds, mean })
}

/// Candidate values per hyperparameter; an empty list keeps the base value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TuneGrid {
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub degree: Vec<u32>,
    pub coef0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunePoint {
    pub c: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub degree: u32,
    pub coef0: f64,
}

impl TunePoint {
    pub fn apply(&self, base: &SvmParams) -> SvmParams {
        let mut p = base.clone();
        p.config.c = self.c;
        p.config.epsilon_tube = self.epsilon;
        p.kernel.gamma = self.gamma;
        p.kernel.degree = self.degree;
        p.kernel.coef0 = self.coef0;
        p
    }
}

impl TuneGrid {
    /// Cartesian product, `C` outermost, then gamma, epsilon, degree, coef0.
    pub fn points(&self, base: &SvmParams) -> Vec<TunePoint> {
        fn or<T: Copy>(v: &[T], d: T) -> Vec<T> {
            if v.is_empty() {
                vec![d]
            } else {
                v.to_vec()
            }
        }
        let cs = or(&self.c, base.config.c);
        let gs = or(&self.gamma, base.kernel.gamma);
        let es = or(&self.epsilon, base.config.epsilon_tube);
        let ds = or(&self.degree, base.kernel.degree);
        let c0s = or(&self.coef0, base.kernel.coef0);
        let mut out = Vec::new();
        for &c in &cs {
            for &gamma in &gs {
                for &epsilon in &es {
                    for &degree in &ds {
                        for &coef0 in &c0s {
                            out.push(TunePoint {
                                c,
                                gamma,
                                epsilon,
                                degree,
                                coef0,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneRow {
    pub point: TunePoint,
    pub cv: CvReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub rows: Vec<TuneRow>,
    /// Index into `rows` of the selected point.
    pub best: usize,
}

impl TuneResult {
    pub fn best_row(&self) -> &TuneRow {
        &self.rows[self.best]
    }
}

/// Cross-validates every grid point and selects the best mean accuracy
/// (classification) or lowest mean MSE (regression). Ties keep the earlier
/// point.
pub fn grid_tune(
    data: &Dataset,
    targets: &[f64],
    base: &SvmParams,
    grid: &TuneGrid,
    plan: &FoldPlan,
) -> Result<TuneResult> {
    let points = grid.points(base);
    let eval = |pt: &TunePoint| -> Result<TuneRow> {
        let cv = cross_validate(data, targets, &pt.apply(base), plan)?;
        Ok(TuneRow { point: pt.clone(), cv })
    };
    let rows: Vec<TuneRow> = if base.config.parallel {
        points.par_iter().map(eval).collect::<Result<_>>()?
    } else {
        points.iter().map(eval).collect::<Result<_>>()?
    };
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in rows.iter().enumerate() {
        let Some(score) = row.cv.mean.map(|m| m.score()) else {
            continue;
        };
        if score.is_nan() {
            continue;
        }
        if best.map_or(true, |(_, s)| score > s) {
            best = Some((i, score));
        }
    }
    let (best, _) = best.ok_or_else(|| SvmError::InvalidParameter("no grid point produced a usable metric".into()))?;
    Ok(TuneResult { rows, best })
}
