//! Kernel functions and Gram matrices.

use rayon::prelude::*;

use crate::data::{Dataset, SparseRow};
use crate::error::{Result, SvmError};

/// Default row cap for [`gram_matrix`].
pub const GRAM_CAP: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// `K(a,b) = a·b`
    Linear,
    /// `K(a,b) = (γ·a·b + coef0)^degree`
    Polynomial,
    /// `K(a,b) = exp(-γ·‖a-b‖²)`
    Rbf,
    /// `K(a,b) = tanh(γ·a·b + coef0)`
    Sigmoid,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Polynomial => "polynomial",
            KernelKind::Rbf => "rbf",
            KernelKind::Sigmoid => "sigmoid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(KernelKind::Linear),
            "polynomial" | "poly" => Some(KernelKind::Polynomial),
            "rbf" | "radial" => Some(KernelKind::Rbf),
            "sigmoid" => Some(KernelKind::Sigmoid),
            _ => None,
        }
    }
}

/// Kernel choice and its parameters. Fields a kernel does not use are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: f64,
    pub degree: u32,
    pub coef0: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            kind: KernelKind::Rbf,
            gamma: 1.0,
            degree: 3,
            coef0: 0.0,
        }
    }
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            ..Default::default()
        }
    }

    pub fn rbf(gamma: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Rbf,
            gamma,
            ..Default::default()
        }
    }

    pub fn polynomial(gamma: f64, coef0: f64, degree: u32) -> Self {
        KernelSpec {
            kind: KernelKind::Polynomial,
            gamma,
            degree,
            coef0,
        }
    }

    pub fn sigmoid(gamma: f64, coef0: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Sigmoid,
            gamma,
            coef0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let uses_gamma = self.kind != KernelKind::Linear;
        if uses_gamma && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(SvmError::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.kind == KernelKind::Polynomial && self.degree == 0 {
            return Err(SvmError::InvalidParameter("degree must be at least 1".into()));
        }
        if !self.coef0.is_finite() {
            return Err(SvmError::InvalidParameter("coef0 must be finite".into()));
        }
        Ok(())
    }

    /// Kernel value from a precomputed dot product and the two squared norms.
    #[inline]
    fn from_dot(&self, dot: f64, norm_a: f64, norm_b: f64) -> f64 {
        match self.kind {
            KernelKind::Linear => dot,
            KernelKind::Polynomial => powi_by_squaring(self.gamma * dot + self.coef0, self.degree),
            KernelKind::Rbf => {
                let dist = (norm_a + norm_b - 2.0 * dot).max(0.0);
                (-self.gamma * dist).exp()
            }
            KernelKind::Sigmoid => (self.gamma * dot + self.coef0).tanh(),
        }
    }
}

/// Reciprocal of the feature count, the usual default for `gamma`.
pub fn default_gamma(n_cols: usize) -> f64 {
    1.0 / n_cols.max(1) as f64
}

/// `base^exp` by repeated squaring.
pub fn powi_by_squaring(base: f64, exp: u32) -> f64 {
    let mut result = 1.0;
    let mut b = base;
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            result *= b;
        }
        e >>= 1;
        if e > 0 {
            b *= b;
        }
    }
    result
}

/// Evaluates the kernel on two sparse rows.
///
/// `ids` names the rows in the error raised for a non-finite result.
pub fn kernel_eval_rows(
    a: &SparseRow<'_>,
    b: &SparseRow<'_>,
    spec: &KernelSpec,
    ids: (usize, usize),
) -> Result<f64> {
    let dot = a.dot(b);
    let (na, nb) = match spec.kind {
        KernelKind::Rbf => (a.squared_norm(), b.squared_norm()),
        _ => (0.0, 0.0),
    };
    let v = spec.from_dot(dot, na, nb);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(SvmError::NonFiniteKernel {
            kernel: spec.kind.name(),
            row_a: ids.0,
            row_b: ids.1,
        })
    }
}

/// Evaluates the kernel on two sparse rows.
pub fn kernel_eval(a: &SparseRow<'_>, b: &SparseRow<'_>, spec: &KernelSpec) -> Result<f64> {
    kernel_eval_rows(a, b, spec, (0, 1))
}

/// Kernel evaluation against one dataset, with squared norms precomputed
/// once for the rbf kernel.
///
/// Rows computed here are bit-identical to [`kernel_eval`] on the same
/// pair: both sum the products of shared indices in increasing index order.
pub struct KernelEvaluator<'a> {
    data: &'a Dataset,
    spec: KernelSpec,
    norms: Vec<f64>,
}

impl<'a> KernelEvaluator<'a> {
    pub fn new(data: &'a Dataset, spec: KernelSpec) -> Self {
        let norms = match spec.kind {
            KernelKind::Rbf => data.rows().map(|r| r.squared_norm()).collect(),
            _ => Vec::new(),
        };
        KernelEvaluator { data, spec, norms }
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    #[inline]
    fn norm(&self, i: usize) -> f64 {
        if self.norms.is_empty() {
            0.0
        } else {
            self.norms[i]
        }
    }

    pub fn eval(&self, i: usize, j: usize) -> Result<f64> {
        let dot = self.data.row(i).dot(&self.data.row(j));
        self.finish(dot, i, j)
    }

    #[inline]
    fn finish(&self, dot: f64, i: usize, j: usize) -> Result<f64> {
        let v = self.spec.from_dot(dot, self.norm(i), self.norm(j));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SvmError::NonFiniteKernel {
                kernel: self.spec.kind.name(),
                row_a: i,
                row_b: j,
            })
        }
    }

    /// Fills `out[k] = K(x_row, x_targets[k])`.
    pub fn fill_row(&self, row: usize, targets: &[usize], out: &mut [f64], parallel: bool) -> Result<()> {
        debug_assert_eq!(targets.len(), out.len());
        // Scatter the pivot row densely; each entry is then one pass over
        // the target's nonzeros. Absent columns contribute an exact +0.0,
        // so the sum matches the merge-based dot bit for bit.
        let pivot = self.data.row(row);
        let mut dense = vec![0.0; self.data.n_cols()];
        for (&c, &v) in pivot.indices.iter().zip(pivot.values) {
            dense[c as usize] = v;
        }
        let compute = |(slot, &t): (&mut f64, &usize)| -> Result<()> {
            let r = self.data.row(t);
            let mut dot = 0.0;
            for (&c, &v) in r.indices.iter().zip(r.values) {
                let a = dense[c as usize];
                if a != 0.0 {
                    dot += a * v;
                }
            }
            *slot = self.finish(dot, row, t)?;
            Ok(())
        };
        if parallel && targets.len() >= 4096 {
            out.par_iter_mut()
                .zip(targets.par_iter())
                .with_min_len(1024)
                .try_for_each(compute)
        } else {
            out.iter_mut().zip(targets.iter()).try_for_each(compute)
        }
    }
}

/// A dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Evaluates `f` on the upper triangle and mirrors it.
    pub fn from_upper<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut m = SymmetricMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i,j)` and `(j,i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Dense Gram matrix of `data`, limited to [`GRAM_CAP`] rows.
pub fn gram_matrix(data: &Dataset, spec: &KernelSpec) -> Result<SymmetricMatrix> {
    gram_matrix_capped(data, spec, GRAM_CAP)
}

pub fn gram_matrix_capped(data: &Dataset, spec: &KernelSpec, cap: usize) -> Result<SymmetricMatrix> {
    let l = data.n_rows();
    if l > cap {
        return Err(SvmError::TooLarge { rows: l, cap });
    }
    let eval = KernelEvaluator::new(data, *spec);
    let mut m = SymmetricMatrix::zeros(l);
    for i in 0..l {
        for j in i..l {
            m.set(i, j, eval.eval(i, j)?);
        }
    }
    Ok(m)
}
