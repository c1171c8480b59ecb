//! Per-column standardization.

use crate::data::{Dataset, DatasetBuilder};
use crate::error::{Result, SvmError};

/// Columns with a standard deviation below this are passed through.
pub const CONSTANT_STD: f64 = 1e-12;

/// Column means and sample standard deviations of a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerParams {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Constant columns are left untouched by [`apply_scaler`].
    pub constant: Vec<bool>,
}

impl ScalerParams {
    pub fn n_cols(&self) -> usize {
        self.means.len()
    }
}

/// Fits column statistics over the dense interpretation of `data` (absent
/// entries count as zeros), using the `n − 1` denominator.
pub fn fit_scaler(data: &Dataset) -> ScalerParams {
    let n = data.n_rows();
    let d = data.n_cols();
    let mut sums = vec![0.0; d];
    let mut counts = vec![0usize; d];
    for row in data.rows() {
        for (&c, &v) in row.indices.iter().zip(row.values) {
            sums[c as usize] += v;
            counts[c as usize] += 1;
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| if n > 0 { s / n as f64 } else { 0.0 }).collect();
    let mut ss = vec![0.0; d];
    for row in data.rows() {
        for (&c, &v) in row.indices.iter().zip(row.values) {
            let dv = v - means[c as usize];
            ss[c as usize] += dv * dv;
        }
    }
    let mut stds = Vec::with_capacity(d);
    let mut constant = Vec::with_capacity(d);
    for c in 0..d {
        let zeros = (n - counts[c]) as f64;
        let var = if n > 1 {
            (ss[c] + zeros * means[c] * means[c]) / (n - 1) as f64
        } else {
            0.0
        };
        let sd = var.sqrt();
        let is_const = !(sd >= CONSTANT_STD);
        stds.push(if is_const { 1.0 } else { sd });
        constant.push(is_const);
    }
    ScalerParams { means, stds, constant }
}

/// Standardizes every non-constant column; the result is re-sparsified.
pub fn apply_scaler(params: &ScalerParams, data: &Dataset) -> Result<Dataset> {
    if data.n_cols() != params.n_cols() {
        return Err(SvmError::ShapeMismatch(format!(
            "scaler fitted on {} columns, data has {}",
            params.n_cols(),
            data.n_cols()
        )));
    }
    let mut out = DatasetBuilder::new();
    let mut dense = vec![0.0; data.n_cols()];
    for i in 0..data.n_rows() {
        dense.iter_mut().for_each(|x| *x = 0.0);
        let row = data.row(i);
        for (&c, &v) in row.indices.iter().zip(row.values) {
            dense[c as usize] = v;
        }
        for (c, x) in dense.iter_mut().enumerate() {
            if !params.constant[c] {
                *x = (*x - params.means[c]) / params.stds[c];
            }
        }
        out.push_dense_row(&dense);
    }
    out.finish(Some(data.n_cols()))
}
