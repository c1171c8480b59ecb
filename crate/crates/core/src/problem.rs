//! The generic dual instance: minimize `½αᵀQα + pᵀα` subject to `yᵀα = 0`
//! and `0 ≤ α_i ≤ C`, with `Q_ij = y_i·y_j·K(x_map(i), x_map(j))`.

use crate::cache::KernelRowCache;
use crate::data::Dataset;
use crate::error::{Result, SvmError};
use crate::kernel::{KernelEvaluator, KernelSpec};

/// A dual problem over a borrowed dataset.
///
/// Dual variable `i` refers to dataset row `base[i % base.len()]`. SVC uses
/// one copy of the base rows, ε-SVR two (positive copy first).
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    kernel: KernelSpec,
    data: &'a Dataset,
    base: Vec<usize>,
    copies: usize,
    y: Vec<f64>,
    p: Vec<f64>,
    c: f64,
}

impl<'a> Problem<'a> {
    pub fn new(
        kernel: KernelSpec,
        data: &'a Dataset,
        base: Vec<usize>,
        copies: usize,
        y: Vec<f64>,
        p: Vec<f64>,
        c: f64,
    ) -> Result<Self> {
        kernel.validate()?;
        if copies == 0 {
            return Err(SvmError::InvalidParameter("copies must be at least 1".into()));
        }
        let m = base.len() * copies;
        if y.len() != m || p.len() != m {
            return Err(SvmError::ShapeMismatch(format!(
                "expected {m} dual variables, got y of length {} and p of length {}",
                y.len(),
                p.len()
            )));
        }
        if let Some(&r) = base.iter().find(|&&r| r >= data.n_rows()) {
            return Err(SvmError::ShapeMismatch(format!(
                "row {r} out of range for {} rows",
                data.n_rows()
            )));
        }
        if let Some(i) = y.iter().position(|&v| v != 1.0 && v != -1.0) {
            return Err(SvmError::InvalidParameter(format!("y[{i}] = {} is not ±1", y[i])));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(SvmError::InvalidParameter(format!("C must be finite and non-negative, got {c}")));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::InvalidParameter("p must be finite".into()));
        }
        Ok(Problem {
            kernel,
            data,
            base,
            copies,
            y,
            p,
            c,
        })
    }

    /// Number of dual variables.
    pub fn m(&self) -> usize {
        self.base.len() * self.copies
    }

    pub fn n_base(&self) -> usize {
        self.base.len()
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn base(&self) -> &[usize] {
        &self.base
    }

    /// Dataset row of dual variable `i`.
    #[inline]
    pub fn row_of(&self, i: usize) -> usize {
        self.base[i % self.base.len()]
    }

    #[inline]
    pub fn base_pos(&self, i: usize) -> usize {
        i % self.base.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// Row access to `Q` for one problem, backed by a kernel row cache.
///
/// The cache stores unsigned kernel rows keyed by base position; the signs
/// `y_i·y_j` are applied on the way out.
pub struct QMatrix<'p, 'a> {
    problem: &'p Problem<'a>,
    eval: KernelEvaluator<'a>,
    cache: KernelRowCache,
    scratch: Vec<f64>,
    diag: Vec<f64>,
    parallel: bool,
}

impl<'p, 'a> QMatrix<'p, 'a> {
    pub fn new(problem: &'p Problem<'a>, cache_bytes: usize) -> Result<Self> {
        let eval = KernelEvaluator::new(problem.data, problem.kernel);
        let diag = problem
            .base
            .iter()
            .map(|&r| eval.eval(r, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(QMatrix {
            problem,
            eval,
            cache: KernelRowCache::new(cache_bytes, problem.n_base()),
            scratch: Vec::new(),
            diag,
            parallel: false,
        })
    }

    /// Allows row computation to use the rayon pool. Results are identical.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn is_parallel(&self) -> bool {
        self.parallel
    }

    pub fn problem(&self) -> &'p Problem<'a> {
        self.problem
    }

    pub fn cache(&self) -> &KernelRowCache {
        &self.cache
    }

    /// `Q_ii`, which equals `K(x_i, x_i)`.
    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.diag[self.problem.base_pos(i)]
    }

    /// Unsigned kernel row of variable `i` over all base positions.
    pub fn base_row(&mut self, i: usize) -> Result<&[f64]> {
        let key = self.problem.base_pos(i);
        let row = self.problem.base[key];
        let eval = &self.eval;
        let base = &self.problem.base;
        let parallel = self.parallel;
        self.cache
            .get_or_fill(key, &mut self.scratch, |out| eval.fill_row(row, base, out, parallel))
    }

    /// `[Q_ij for j in targets]`.
    pub fn kernel_row(&mut self, i: usize, targets: &[usize]) -> Result<Vec<f64>> {
        let problem = self.problem;
        let yi = problem.y[i];
        let row = self.base_row(i)?;
        Ok(targets
            .iter()
            .map(|&j| yi * problem.y[j] * row[problem.base_pos(j)])
            .collect())
    }
}
