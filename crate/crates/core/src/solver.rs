//! Working-set solver for the generic dual
//!
//! ```text
//! min ½αᵀQα + pᵀα   s.t.  yᵀα = 0,  0 ≤ α_i ≤ C
//! ```
//!
//! Each outer iteration selects a small working set from the most violating
//! coordinates, optimizes it with exact pairwise steps against a local copy
//! of the gradient, then refreshes the full gradient. The loop stops once
//! both the KKT violation and the relative duality gap fall below the
//! termination tolerance.

use rayon::prelude::*;

use crate::error::{Result, SvmError};
use crate::problem::{Problem, QMatrix};

/// Curvature floor for pair steps; flatter directions step to the box edge.
pub const ETA_FLOOR: f64 = 1e-12;
/// Upper bound on pairwise sweeps inside one working set.
pub const MAX_SWEEPS: usize = 100;
/// Smallest violation threshold the solver tightens to while the duality
/// gap is still above tolerance.
const TOL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Box bound on every dual coefficient.
    pub c: f64,
    /// Half-width of the insensitive tube; regression only.
    pub epsilon_tube: f64,
    pub termination_tol: f64,
    /// `None` means `max(10·m, 10000)`.
    pub max_iterations: Option<usize>,
    pub working_set_size: usize,
    pub inner_tol: f64,
    pub cache_bytes: usize,
    /// Compute kernel rows and gradient refreshes on the rayon pool.
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            epsilon_tube: 0.1,
            termination_tol: 1e-3,
            max_iterations: None,
            working_set_size: 16,
            inner_tol: 1e-12,
            cache_bytes: 256 << 20,
            parallel: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SvmError::InvalidParameter(m));
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("C must be positive, got {}", self.c));
        }
        if !(self.epsilon_tube >= 0.0 && self.epsilon_tube.is_finite()) {
            return bad(format!("epsilon must be non-negative, got {}", self.epsilon_tube));
        }
        if !(self.termination_tol > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.termination_tol));
        }
        if !(self.inner_tol > 0.0) {
            return bad(format!("inner tolerance must be positive, got {}", self.inner_tol));
        }
        if self.working_set_size < 2 || self.working_set_size % 2 != 0 {
            return bad(format!(
                "working set size must be even and at least 2, got {}",
                self.working_set_size
            ));
        }
        Ok(())
    }

    pub fn iteration_cap(&self, m: usize) -> usize {
        self.max_iterations.unwrap_or_else(|| (10 * m).max(10_000))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub alpha: Vec<f64>,
    /// `G = Qα + p`.
    pub gradient: Vec<f64>,
    pub iteration: usize,
    pub last_gap: f64,
    pub objective_dual: f64,
}

/// Cold start: `α = 0`, so `G = p`.
pub fn init_state(problem: &Problem<'_>) -> SolverState {
    SolverState {
        alpha: vec![0.0; problem.m()],
        gradient: problem.p().to_vec(),
        iteration: 0,
        last_gap: f64::INFINITY,
        objective_dual: 0.0,
    }
}

#[inline]
fn in_up(y: f64, a: f64, c: f64) -> bool {
    if y > 0.0 {
        a < c
    } else {
        a > 0.0
    }
}

#[inline]
fn in_low(y: f64, a: f64, c: f64) -> bool {
    if y > 0.0 {
        a > 0.0
    } else {
        a < c
    }
}

/// `(max over I_up, min over I_low)` of `-y_i·G_i`; ±∞ for empty sets.
pub fn violation_extremes(state: &SolverState, problem: &Problem<'_>) -> (f64, f64) {
    let (y, c) = (problem.y(), problem.c());
    let mut max_up = f64::NEG_INFINITY;
    let mut min_low = f64::INFINITY;
    for i in 0..problem.m() {
        let v = -y[i] * state.gradient[i];
        let a = state.alpha[i];
        if in_up(y[i], a, c) && v > max_up {
            max_up = v;
        }
        if in_low(y[i], a, c) && v < min_low {
            min_low = v;
        }
    }
    (max_up, min_low)
}

/// `max_up − min_low`, or `-∞` when either set is empty.
pub fn violation(state: &SolverState, problem: &Problem<'_>) -> f64 {
    let (up, low) = violation_extremes(state, problem);
    if up.is_finite() && low.is_finite() {
        up - low
    } else {
        f64::NEG_INFINITY
    }
}

/// Picks up to `size/2` indices from `I_up` with the largest `-y_i·G_i` and
/// up to `size/2` from `I_low` with the smallest, lowest index first on ties.
///
/// An empty result means the violation is within `tol`.
pub fn select_working_set(state: &SolverState, problem: &Problem<'_>, size: usize, tol: f64) -> Vec<usize> {
    if !(violation(state, problem) > tol) {
        return Vec::new();
    }
    let (y, c) = (problem.y(), problem.c());
    let half = (size / 2).max(1);
    let mut up = Vec::new();
    let mut low = Vec::new();
    for i in 0..problem.m() {
        let v = -y[i] * state.gradient[i];
        if in_up(y[i], state.alpha[i], c) {
            up.push((v, i));
        }
        if in_low(y[i], state.alpha[i], c) {
            low.push((v, i));
        }
    }
    let by_desc = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    let by_asc = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    take_best(&mut up, half, by_desc);
    take_best(&mut low, half, by_asc);

    let mut ws: Vec<usize> = up.iter().map(|&(_, i)| i).collect();
    for &(_, i) in &low {
        if !ws.contains(&i) {
            ws.push(i);
        }
    }
    ws
}

fn take_best<F>(v: &mut Vec<(f64, usize)>, k: usize, cmp: F)
where
    F: Fn(&(f64, usize), &(f64, usize)) -> std::cmp::Ordering + Copy,
{
    if v.len() > k {
        v.select_nth_unstable_by(k - 1, cmp);
        v.truncate(k);
    }
    v.sort_by(cmp);
}

/// Result of optimizing one working set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorkingSetUpdate {
    pub indices: Vec<usize>,
    /// `new − old` per index.
    pub delta: Vec<f64>,
    /// New coefficient values, exact at the bounds.
    pub values: Vec<f64>,
}

impl WorkingSetUpdate {
    pub fn is_zero(&self) -> bool {
        self.delta.iter().all(|&d| d == 0.0)
    }
}

/// Optimizes the coefficients in `ws` with sweeps of exact pairwise steps.
///
/// Every step moves one `I_up` and one `I_low` coordinate along the
/// direction that keeps `yᵀα` fixed, to the clipped minimizer of the
/// objective restricted to that line.
pub fn solve_subproblem(
    state: &SolverState,
    q: &mut QMatrix<'_, '_>,
    ws: &[usize],
    inner_tol: f64,
) -> Result<WorkingSetUpdate> {
    let problem = q.problem();
    let (y, c) = (problem.y(), problem.c());
    let n = ws.len();
    let mut qw = Vec::with_capacity(n * n);
    for &i in ws {
        qw.extend(q.kernel_row(i, ws)?);
    }
    let old: Vec<f64> = ws.iter().map(|&i| state.alpha[i]).collect();
    let mut alpha = old.clone();
    let mut grad: Vec<f64> = ws.iter().map(|&i| state.gradient[i]).collect();
    let yw: Vec<f64> = ws.iter().map(|&i| y[i]).collect();

    for _ in 0..MAX_SWEEPS {
        let mut best = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                if a == b || !in_up(yw[a], alpha[a], c) || !in_low(yw[b], alpha[b], c) {
                    continue;
                }
                let viol = -yw[a] * grad[a] + yw[b] * grad[b];
                if !(viol > 0.0) {
                    continue;
                }
                // Direction d_a = y_a, d_b = -y_b keeps yᵀα fixed.
                let eta = qw[a * n + a] + qw[b * n + b] - 2.0 * yw[a] * yw[b] * qw[a * n + b];
                let room_a = if yw[a] > 0.0 { c - alpha[a] } else { alpha[a] };
                let room_b = if yw[b] > 0.0 { alpha[b] } else { c - alpha[b] };
                let room = room_a.min(room_b);
                if !(room > 0.0) {
                    continue;
                }
                let t = if eta > ETA_FLOOR { (viol / eta).min(room) } else { room };
                let improvement = t * viol - 0.5 * t * t * eta.max(0.0);
                if !(improvement > 0.0) {
                    continue;
                }
                let prev_a = alpha[a];
                let prev_b = alpha[b];
                alpha[a] = if t == room_a {
                    if yw[a] > 0.0 { c } else { 0.0 }
                } else {
                    (prev_a + yw[a] * t).clamp(0.0, c)
                };
                alpha[b] = if t == room_b {
                    if yw[b] > 0.0 { 0.0 } else { c }
                } else {
                    (prev_b - yw[b] * t).clamp(0.0, c)
                };
                let da = alpha[a] - prev_a;
                let db = alpha[b] - prev_b;
                for k in 0..n {
                    grad[k] += qw[k * n + a] * da + qw[k * n + b] * db;
                }
                best = best.max(improvement);
            }
        }
        if best < inner_tol {
            break;
        }
    }

    let mut update = WorkingSetUpdate::default();
    for (k, &i) in ws.iter().enumerate() {
        if alpha[k] != old[k] {
            update.indices.push(i);
            update.delta.push(alpha[k] - old[k]);
            update.values.push(alpha[k]);
        }
    }
    Ok(update)
}

/// Applies `update`: sets the new coefficients, refreshes every gradient
/// entry and advances the dual objective.
pub fn apply_update(state: &mut SolverState, q: &mut QMatrix<'_, '_>, update: &WorkingSetUpdate) -> Result<()> {
    let problem = q.problem();
    let y = problem.y();
    let n = problem.n_base();
    let old_g: Vec<f64> = update.indices.iter().map(|&i| state.gradient[i]).collect();
    let parallel = q_parallel(q);
    for (k, &j) in update.indices.iter().enumerate() {
        let dj = update.delta[k];
        if dj == 0.0 {
            continue;
        }
        let scale = y[j] * dj;
        let row = q.base_row(j)?;
        let refresh = |(g, yi): (&mut [f64], &[f64])| {
            for ((gi, &yi), &kv) in g.iter_mut().zip(yi).zip(row) {
                *gi += yi * scale * kv;
            }
        };
        if parallel {
            state
                .gradient
                .par_chunks_mut(n)
                .zip(y.par_chunks(n))
                .for_each(|(g, yc)| {
                    g.par_chunks_mut(4096)
                        .zip(yc.par_chunks(4096))
                        .zip(row.par_chunks(4096))
                        .for_each(|((g, yc), r)| {
                            for ((gi, &yi), &kv) in g.iter_mut().zip(yc).zip(r) {
                                *gi += yi * scale * kv;
                            }
                        })
                });
        } else {
            state.gradient.chunks_mut(n).zip(y.chunks(n)).for_each(refresh);
        }
    }
    let mut dual_change = 0.0;
    for (k, &i) in update.indices.iter().enumerate() {
        state.alpha[i] = update.values[k];
        // ΔD = Δᵀg_old + ½ΔᵀQΔ and QΔ = g_new − g_old.
        dual_change += update.delta[k] * 0.5 * (old_g[k] + state.gradient[i]);
    }
    state.objective_dual += dual_change;
    Ok(())
}

fn q_parallel(q: &QMatrix<'_, '_>) -> bool {
    q.is_parallel() && q.problem().m() >= 8192
}

/// Bias from the KKT conditions: mean of `-y_i·G_i` over free coefficients,
/// else the midpoint of the violation extremes.
pub fn bias(state: &SolverState, problem: &Problem<'_>) -> f64 {
    let (y, c) = (problem.y(), problem.c());
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..problem.m() {
        let a = state.alpha[i];
        if a > 0.0 && a < c {
            sum += -y[i] * state.gradient[i];
            count += 1;
        }
    }
    if count > 0 {
        return sum / count as f64;
    }
    let (up, low) = violation_extremes(state, problem);
    match (up.is_finite(), low.is_finite()) {
        (true, true) => 0.5 * (up + low),
        (true, false) => up,
        (false, true) => low,
        (false, false) => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objectives {
    /// `½αᵀQα + pᵀα`, the minimized dual.
    pub dual: f64,
    /// `½‖w‖² + C·Σ loss_i` at the current bias.
    pub primal: f64,
    /// `(primal + dual) / (1 + |primal|)`; zero at the optimum.
    pub gap: f64,
    pub bias: f64,
    /// `max_up − min_low`.
    pub violation: f64,
}

/// Primal and dual objectives at the current state.
///
/// The decision values on the training rows are read off the gradient:
/// `f_i = y_i·(G_i − p_i) + b`. One copy means hinge loss, two copies mean
/// the ε-insensitive loss with targets and tube recovered from `p`.
pub fn compute_objectives(state: &SolverState, problem: &Problem<'_>) -> Objectives {
    let (y, p, c) = (problem.y(), problem.p(), problem.c());
    let m = problem.m();
    let n = problem.n_base();
    let mut dual = 0.0;
    let mut quad = 0.0;
    for i in 0..m {
        dual += state.alpha[i] * (state.gradient[i] + p[i]);
        quad += state.alpha[i] * (state.gradient[i] - p[i]);
    }
    dual *= 0.5;
    quad *= 0.5;
    let b = bias(state, problem);
    let mut loss = 0.0;
    for k in 0..n {
        let f = y[k] * (state.gradient[k] - p[k]) + b;
        loss += if problem.copies() == 1 {
            (1.0 - y[k] * f).max(0.0)
        } else {
            let z = 0.5 * (p[k + n] - p[k]);
            let eps = 0.5 * (p[k + n] + p[k]);
            ((f - z).abs() - eps).max(0.0)
        };
    }
    let primal = quad + c * loss;
    Objectives {
        dual,
        primal,
        gap: (primal + dual) / (1.0 + primal.abs()),
        bias: b,
        violation: violation(state, problem),
    }
}

/// Snapshot handed to the progress callback once per outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub iteration: usize,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverMeta {
    pub iterations: usize,
    pub dual_objective: f64,
    pub primal_objective: f64,
    pub gap: f64,
    pub violation: f64,
    pub converged: bool,
    pub iteration_cap_reached: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub meta: SolverMeta,
}

/// Runs the working-set iteration to convergence or the iteration cap.
///
/// Hitting the cap is not an error; the best point so far is returned with
/// `meta.iteration_cap_reached` set.
pub fn train_dual(
    problem: &Problem<'_>,
    config: &TrainConfig,
    mut progress: Option<&mut dyn FnMut(&Progress)>,
) -> Result<DualSolution> {
    if config.working_set_size < 2 || config.working_set_size % 2 != 0 {
        return Err(SvmError::InvalidParameter(format!(
            "working set size must be even and at least 2, got {}",
            config.working_set_size
        )));
    }
    let tol = config.termination_tol;
    let cap = config.iteration_cap(problem.m());
    let mut q = QMatrix::new(problem, config.cache_bytes)?.with_parallel(config.parallel);
    let mut state = init_state(problem);
    let mut select_tol = tol;
    let mut cap_reached = false;

    let mut obj = compute_objectives(&state, problem);
    loop {
        if obj.violation <= tol && obj.gap <= tol {
            break;
        }
        if state.iteration >= cap {
            cap_reached = true;
            break;
        }
        let ws = select_working_set(&state, problem, config.working_set_size, select_tol);
        if ws.is_empty() {
            if select_tol <= TOL_FLOOR {
                break;
            }
            select_tol = (select_tol * 0.1).max(TOL_FLOOR);
            continue;
        }
        let update = solve_subproblem(&state, &mut q, &ws, config.inner_tol)?;
        if update.is_zero() {
            // No representable progress at this threshold.
            if select_tol <= TOL_FLOOR {
                break;
            }
            select_tol = (select_tol * 0.1).max(TOL_FLOOR);
            continue;
        }
        apply_update(&mut state, &mut q, &update)?;
        state.iteration += 1;
        obj = compute_objectives(&state, problem);
        state.last_gap = obj.gap;
        if let Some(cb) = progress.as_mut() {
            cb(&Progress {
                iteration: state.iteration,
                dual: state.objective_dual,
                gap: obj.gap,
            });
        }
    }

    state.last_gap = obj.gap;
    Ok(DualSolution {
        bias: obj.bias,
        meta: SolverMeta {
            iterations: state.iteration,
            dual_objective: obj.dual,
            primal_objective: obj.primal,
            gap: obj.gap,
            violation: obj.violation,
            converged: obj.violation <= tol && obj.gap <= tol,
            iteration_cap_reached: cap_reached,
        },
        alpha: state.alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::kernel::KernelSpec;

    fn two_point() -> Dataset {
        Dataset::from_dense(&[vec![-1.0], vec![1.0]]).unwrap()
    }

    fn two_point_problem(d: &Dataset, c: f64) -> Problem<'_> {
        Problem::new(KernelSpec::linear(), d, vec![0, 1], 1, vec![-1.0, 1.0], vec![-1.0, -1.0], c).unwrap()
    }

    #[test]
    fn init_state_gradient_is_p() {
        let d = two_point();
        let p = two_point_problem(&d, 1.0);
        let s = init_state(&p);
        assert_eq!(s.alpha, vec![0.0, 0.0]);
        assert_eq!(s.gradient, vec![-1.0, -1.0]);
        assert_eq!(s.iteration, 0);

        let empty = Dataset::empty(1);
        let p0 = Problem::new(KernelSpec::linear(), &empty, vec![], 1, vec![], vec![], 1.0).unwrap();
        assert!(init_state(&p0).alpha.is_empty());
    }

    #[test]
    fn fresh_selection_splits_by_label() {
        // 20 points, alternating labels; at α = 0, -y_i·G_i = y_i.
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let d = Dataset::from_dense(&rows).unwrap();
        let y: Vec<f64> = (0..20).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let p = Problem::new(KernelSpec::linear(), &d, (0..20).collect(), 1, y.clone(), vec![-1.0; 20], 1.0).unwrap();
        let ws = select_working_set(&init_state(&p), &p, 16, 1e-3);
        let pos: Vec<usize> = (0..20).filter(|&i| y[i] > 0.0).take(8).collect();
        let neg: Vec<usize> = (0..20).filter(|&i| y[i] < 0.0).take(8).collect();
        assert_eq!(&ws[..pos.len()], &pos[..]);
        assert_eq!(&ws[pos.len()..], &neg[..]);
    }

    #[test]
    fn selection_clamps_and_signals_convergence() {
        let d = Dataset::from_dense(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        let p = Problem::new(
            KernelSpec::linear(),
            &d,
            vec![0, 1, 2, 3],
            1,
            vec![1.0, -1.0, 1.0, -1.0],
            vec![-1.0; 4],
            1.0,
        )
        .unwrap();
        let mut ws = select_working_set(&init_state(&p), &p, 16, 1e-3);
        ws.sort();
        assert_eq!(ws, vec![0, 1, 2, 3]);

        // All -y_i·G_i equal: zero violation.
        let mut s = init_state(&p);
        s.gradient = vec![-1.0, 1.0, -1.0, 1.0];
        assert!(select_working_set(&s, &p, 16, 1e-3).is_empty());
    }

    #[test]
    fn two_point_subproblem() {
        let d = two_point();
        let p = two_point_problem(&d, 1.0);
        let s = init_state(&p);
        let mut q = QMatrix::new(&p, 1 << 20).unwrap();
        let u = solve_subproblem(&s, &mut q, &[0, 1], 1e-12).unwrap();
        assert_eq!(u.indices, vec![0, 1]);
        assert!((u.delta[0] - 0.5).abs() < 1e-15);
        assert!((u.delta[1] - 0.5).abs() < 1e-15);

        let mut s2 = s.clone();
        apply_update(&mut s2, &mut q, &u).unwrap();
        assert!(s2.gradient.iter().all(|g| g.abs() < 1e-15));
        assert!((s2.objective_dual + 0.5).abs() < 1e-15);

        // Already optimal: nothing to do.
        let again = solve_subproblem(&s2, &mut q, &[0, 1], 1e-12).unwrap();
        assert!(again.is_zero());
    }

    #[test]
    fn two_point_subproblem_box_clipped() {
        let d = two_point();
        let p = two_point_problem(&d, 0.25);
        let mut q = QMatrix::new(&p, 1 << 20).unwrap();
        let u = solve_subproblem(&init_state(&p), &mut q, &[0, 1], 1e-12).unwrap();
        assert_eq!(u.values, vec![0.25, 0.25]);
    }

    #[test]
    fn zero_update_changes_nothing() {
        let d = two_point();
        let p = two_point_problem(&d, 1.0);
        let mut q = QMatrix::new(&p, 1 << 20).unwrap();
        let mut s = init_state(&p);
        let before = s.clone();
        apply_update(&mut s, &mut q, &WorkingSetUpdate::default()).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn single_coordinate_update_matches_dense_recomputation() {
        let d = Dataset::from_dense(&[vec![3.0, 0.1], vec![0.2, 2.5], vec![0.1, -0.3]]).unwrap();
        let p = Problem::new(
            KernelSpec::linear(),
            &d,
            vec![0, 1, 2],
            1,
            vec![1.0, -1.0, 1.0],
            vec![-1.0, 0.5, -0.25],
            5.0,
        )
        .unwrap();
        let mut q = QMatrix::new(&p, 1 << 20).unwrap();
        let mut s = init_state(&p);
        let u = WorkingSetUpdate {
            indices: vec![1],
            delta: vec![0.75],
            values: vec![0.75],
        };
        apply_update(&mut s, &mut q, &u).unwrap();
        for i in 0..3 {
            let dense: f64 = (0..3)
                .map(|j| p.y()[i] * p.y()[j] * d.row(i).dot(&d.row(j)) * s.alpha[j])
                .sum::<f64>()
                + p.p()[i];
            assert!((s.gradient[i] - dense).abs() < 1e-12);
        }
    }

    #[test]
    fn objectives_at_zero_and_at_optimum() {
        let d = two_point();
        let p = two_point_problem(&d, 2.0);
        let s = init_state(&p);
        let o = compute_objectives(&s, &p);
        assert_eq!(o.dual, 0.0);
        // f ≡ b = 0: hinge 1 per point
        assert_eq!(o.bias, 0.0);
        assert_eq!(o.primal, 2.0 * 2.0);

        let sol = train_dual(&p, &TrainConfig { c: 2.0, ..Default::default() }, None).unwrap();
        assert!((sol.alpha[0] - 0.5).abs() < 1e-8);
        assert!((sol.alpha[1] - 0.5).abs() < 1e-8);
        assert!(sol.bias.abs() < 1e-8);
        assert!((sol.meta.dual_objective + 0.5).abs() < 1e-8);
        assert!((sol.meta.primal_objective - 0.5).abs() < 1e-8);
        assert!((sol.meta.primal_objective + sol.meta.dual_objective).abs() < 1e-8);
        assert!(sol.meta.converged);
    }

    #[test]
    fn constant_target_regression_is_optimal_at_zero() {
        let d = Dataset::from_dense(&[vec![1.0], vec![2.0], vec![-3.0]]).unwrap();
        let (z, eps) = (4.2, 0.1);
        let mut p = vec![eps - z; 3];
        p.extend(vec![eps + z; 3]);
        let mut y = vec![1.0; 3];
        y.extend(vec![-1.0; 3]);
        let prob = Problem::new(KernelSpec::rbf(0.5), &d, vec![0, 1, 2], 2, y, p, 1.0).unwrap();
        let o = compute_objectives(&init_state(&prob), &prob);
        assert_eq!(o.dual, 0.0);
        assert_eq!(o.primal, 0.0);
        assert_eq!(o.gap, 0.0);
        assert!((o.bias - z).abs() < 1e-12);
    }

    #[test]
    fn progress_is_called_per_iteration() {
        let d = Dataset::from_dense(&[vec![-1.0, 0.3], vec![1.0, 0.2], vec![-2.0, 1.0], vec![2.5, -1.0]]).unwrap();
        let p = Problem::new(
            KernelSpec::rbf(0.5),
            &d,
            vec![0, 1, 2, 3],
            1,
            vec![-1.0, 1.0, -1.0, 1.0],
            vec![-1.0; 4],
            10.0,
        )
        .unwrap();
        let mut seen = Vec::new();
        let mut cb = |pr: &Progress| seen.push(*pr);
        let cfg = TrainConfig {
            c: 10.0,
            working_set_size: 2,
            ..Default::default()
        };
        let sol = train_dual(&p, &cfg, Some(&mut cb)).unwrap();
        assert_eq!(seen.len(), sol.meta.iterations);
        for (k, pr) in seen.iter().enumerate() {
            assert_eq!(pr.iteration, k + 1);
        }
        for w in seen.windows(2) {
            assert!(w[1].dual <= w[0].dual + 1e-12);
        }
    }

    #[test]
    fn iteration_cap_returns_best_so_far() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.7).sin(), (i as f64).cos()]).collect();
        let d = Dataset::from_dense(&rows).unwrap();
        let y: Vec<f64> = (0..30).map(|i| if (i * 7) % 5 < 2 { 1.0 } else { -1.0 }).collect();
        let p = Problem::new(KernelSpec::rbf(2.0), &d, (0..30).collect(), 1, y, vec![-1.0; 30], 100.0).unwrap();
        let cfg = TrainConfig {
            c: 100.0,
            working_set_size: 2,
            max_iterations: Some(1),
            ..Default::default()
        };
        let sol = train_dual(&p, &cfg, None).unwrap();
        assert!(sol.meta.iteration_cap_reached);
        assert_eq!(sol.meta.iterations, 1);
        assert!(!sol.meta.converged);
    }

    #[test]
    fn rejects_odd_working_set() {
        let d = two_point();
        let p = two_point_problem(&d, 1.0);
        let cfg = TrainConfig {
            working_set_size: 3,
            ..Default::default()
        };
        assert!(train_dual(&p, &cfg, None).is_err());
    }
}
