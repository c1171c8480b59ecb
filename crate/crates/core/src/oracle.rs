//! Reference solvers for small dual instances.
//!
//! Two unrelated methods: exhaustive enumeration of active sets (exact, for
//! up to [`ACTIVE_SET_CAP`] variables) and long-run projected gradient on a
//! dense `Q`. Neither shares code with the working-set solver beyond kernel
//! evaluation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SvmError};
use crate::kernel::{gram_matrix_capped, SymmetricMatrix, GRAM_CAP};
use crate::problem::Problem;

pub const ACTIVE_SET_CAP: usize = 10;
pub const DEFAULT_PG_ITERATIONS: usize = 200_000;

const RESIDUAL_TOL: f64 = 1e-8;

/// A dense dual instance `min ½αᵀQα + pᵀα, yᵀα = 0, 0 ≤ α ≤ C`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseQP {
    pub q: SymmetricMatrix,
    pub p: Vec<f64>,
    pub y: Vec<f64>,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub alpha: Vec<f64>,
    pub objective: f64,
}

impl DenseQP {
    pub fn new(q: SymmetricMatrix, p: Vec<f64>, y: Vec<f64>, c: f64) -> Result<Self> {
        let m = q.dim();
        if p.len() != m || y.len() != m {
            return Err(SvmError::ShapeMismatch(format!(
                "Q is {m}x{m} but p has {} and y has {} entries",
                p.len(),
                y.len()
            )));
        }
        Ok(DenseQP { q, p, y, c })
    }

    /// Materializes `Q` for `problem`, limited to [`GRAM_CAP`] base rows.
    pub fn from_problem(problem: &Problem<'_>) -> Result<Self> {
        Self::from_problem_capped(problem, GRAM_CAP)
    }

    pub fn from_problem_capped(problem: &Problem<'_>, cap: usize) -> Result<Self> {
        let base = problem.data().select_rows(problem.base());
        let k = gram_matrix_capped(&base, problem.kernel(), cap)?;
        let y = problem.y();
        let q = SymmetricMatrix::from_upper(problem.m(), |i, j| {
            y[i] * y[j] * k.get(problem.base_pos(i), problem.base_pos(j))
        });
        DenseQP::new(q, problem.p().to_vec(), y.to_vec(), problem.c())
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }

    pub fn objective(&self, alpha: &[f64]) -> f64 {
        let qa = self.q_times(alpha);
        alpha
            .iter()
            .zip(&qa)
            .zip(&self.p)
            .map(|((&a, &qa), &p)| a * (0.5 * qa + p))
            .sum()
    }

    pub fn gradient(&self, alpha: &[f64]) -> Vec<f64> {
        let mut g = self.q_times(alpha);
        for (gi, &pi) in g.iter_mut().zip(&self.p) {
            *gi += pi;
        }
        g
    }

    fn q_times(&self, v: &[f64]) -> Vec<f64> {
        (0..self.m())
            .map(|i| self.q.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }
}

/// Exact minimizer by enumerating every lower/upper/free assignment.
///
/// For each assignment the free block is solved together with the equality
/// multiplier; the candidate is kept if it is feasible and satisfies the
/// KKT sign conditions at the bounds.
pub fn oracle_active_set(qp: &DenseQP) -> Result<OracleSolution> {
    let m = qp.m();
    if m > ACTIVE_SET_CAP {
        return Err(SvmError::TooLarge { rows: m, cap: ACTIVE_SET_CAP });
    }
    let c = qp.c;
    let feas_tol = 1e-9 * c.max(1.0);
    let mut state = vec![0u8; m];
    let mut best: Option<OracleSolution> = None;
    let total = 3usize.pow(m as u32);
    for _ in 0..total {
        if let Some(cand) = kkt_candidate(qp, &state, feas_tol) {
            if best.as_ref().map_or(true, |b| cand.objective < b.objective) {
                best = Some(cand);
            }
        }
        // next assignment in base 3
        for s in state.iter_mut() {
            *s += 1;
            if *s < 3 {
                break;
            }
            *s = 0;
        }
    }
    best.ok_or(SvmError::OracleInfeasible)
}

const LOWER: u8 = 0;
const UPPER: u8 = 1;

fn kkt_candidate(qp: &DenseQP, state: &[u8], feas_tol: f64) -> Option<OracleSolution> {
    let m = qp.m();
    let c = qp.c;
    let free: Vec<usize> = (0..m).filter(|&i| state[i] == 2).collect();
    let mut alpha: Vec<f64> = state.iter().map(|&s| if s == UPPER { c } else { 0.0 }).collect();

    let nu_range: (f64, f64);
    if free.is_empty() {
        let eq: f64 = alpha.iter().zip(&qp.y).map(|(a, y)| a * y).sum();
        if eq.abs() > feas_tol {
            return None;
        }
        nu_range = (f64::NEG_INFINITY, f64::INFINITY);
    } else {
        let f = free.len();
        let mut a = DMatrix::<f64>::zeros(f + 1, f + 1);
        let mut b = DVector::<f64>::zeros(f + 1);
        for (r, &i) in free.iter().enumerate() {
            for (s, &j) in free.iter().enumerate() {
                a[(r, s)] = qp.q.get(i, j);
            }
            a[(r, f)] = qp.y[i];
            a[(f, r)] = qp.y[i];
            let fixed: f64 = (0..m)
                .filter(|&j| state[j] == UPPER)
                .map(|j| qp.q.get(i, j) * c)
                .sum();
            b[r] = -qp.p[i] - fixed;
        }
        b[f] = -(0..m)
            .filter(|&j| state[j] == UPPER)
            .map(|j| qp.y[j] * c)
            .sum::<f64>();
        let x = solve_min_norm(&a, &b)?;
        for (r, &i) in free.iter().enumerate() {
            let v = x[r];
            if v < -feas_tol || v > c + feas_tol {
                return None;
            }
            alpha[i] = v.clamp(0.0, c);
        }
        let nu = x[f];
        nu_range = (nu, nu);
    }

    // KKT at the bounds: g_i + ν·y_i ≥ 0 at lower, ≤ 0 at upper.
    let g = qp.gradient(&alpha);
    let scale = 1.0 + g.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let kkt_tol = 1e-9 * scale;
    let (mut lo, mut hi) = nu_range;
    for i in 0..m {
        if state[i] == 2 {
            continue;
        }
        // Bound on ν implied by the sign condition.
        let at_lower = state[i] == LOWER;
        let bound = -g[i] * qp.y[i];
        let nu_at_least = (qp.y[i] > 0.0) == at_lower;
        if nu_range.0 == nu_range.1 {
            let nu = nu_range.0;
            let s = g[i] + nu * qp.y[i];
            if (at_lower && s < -kkt_tol) || (!at_lower && s > kkt_tol) {
                return None;
            }
        } else if nu_at_least {
            lo = lo.max(bound);
        } else {
            hi = hi.min(bound);
        }
    }
    if lo > hi + kkt_tol {
        return None;
    }
    let eq: f64 = alpha.iter().zip(&qp.y).map(|(a, y)| a * y).sum();
    if eq.abs() > feas_tol {
        return None;
    }
    Some(OracleSolution {
        objective: qp.objective(&alpha),
        alpha,
    })
}

/// Solves `a·x = b`, falling back to the minimum-norm least-squares solution
/// for singular systems. Returns `None` when the residual is too large.
fn solve_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let tol = RESIDUAL_TOL * (1.0 + b.amax());
    if let Some(x) = a.clone().lu().solve(b) {
        if x.iter().all(|v| v.is_finite()) && (a * &x - b).amax() <= tol {
            return Some(x);
        }
    }
    let svd = a.clone().svd(true, true);
    let eps = 1e-12 * svd.singular_values.max().max(1.0);
    let x = svd.solve(b, eps).ok()?;
    if (a * &x - b).amax() <= tol {
        Some(x)
    } else {
        None
    }
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
pub fn power_iteration(q: &SymmetricMatrix, iterations: usize) -> f64 {
    let n = q.dim();
    if n == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * (i % 7) as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let w: Vec<f64> = (0..n)
            .map(|i| q.row(i).iter().zip(&v).map(|(a, b)| a * b).sum())
            .collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
    }
    lambda
}

/// Euclidean projection onto `{0 ≤ α ≤ C, yᵀα = 0}`.
///
/// The projection is `clip(v − λ·y)` for the multiplier `λ` that zeroes the
/// monotone function `h(λ) = Σ y_i·clip(v_i − λ·y_i)`; `λ` is found by
/// bisection and polished on the final linear piece.
pub fn project_box_hyperplane(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .map(|(&vi, &yi)| (vi - lambda * yi).clamp(0.0, c))
            .collect()
    };
    let h = |a: &[f64]| -> f64 { a.iter().zip(y).map(|(a, y)| a * y).sum() };
    let span = v.iter().fold(0.0f64, |s, x| s.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut lambda = 0.5 * (lo + hi);
    for _ in 0..3 {
        let a = at(lambda);
        let r = h(&a);
        let free = v
            .iter()
            .zip(y)
            .filter(|(&vi, &yi)| {
                let t = vi - lambda * yi;
                t > 0.0 && t < c
            })
            .count();
        if r == 0.0 || free == 0 {
            break;
        }
        lambda += r / free as f64;
    }
    at(lambda)
}

/// Projected gradient with step `1/λ_max(Q)` unless `step` is given.
/// Runs exactly `iterations` steps from `α = 0`.
pub fn oracle_projected_gradient(qp: &DenseQP, iterations: usize, step: Option<f64>) -> OracleSolution {
    let m = qp.m();
    let step = step.unwrap_or_else(|| {
        let lmax = power_iteration(&qp.q, 500);
        if lmax > 0.0 {
            1.0 / lmax
        } else {
            1.0
        }
    });
    let mut alpha = vec![0.0; m];
    let mut trial = vec![0.0; m];
    for _ in 0..iterations {
        for i in 0..m {
            let gi: f64 = qp.q.row(i).iter().zip(&alpha).map(|(a, b)| a * b).sum::<f64>() + qp.p[i];
            trial[i] = alpha[i] - step * gi;
        }
        alpha = project_box_hyperplane(&trial, &qp.y, qp.c);
    }
    OracleSolution {
        objective: qp.objective(&alpha),
        alpha,
    }
}
