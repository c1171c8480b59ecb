//! Synthetic data and the solver-versus-oracle timing harness.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{Dataset, DatasetBuilder};
use crate::error::Result;
use crate::kernel::{default_gamma, KernelSpec};
use crate::oracle::{oracle_projected_gradient, DenseQP, DEFAULT_PG_ITERATIONS};
use crate::problem::Problem;
use crate::solver::{train_dual, TrainConfig};
use crate::tasks::{build_svc_problem, build_svr_problem, TaskKind};

/// Isotropic Gaussian blobs: `per_center` points around each center with
/// standard deviation `sigma`, labelled by center index in center order.
pub fn gaussian_blobs(centers: &[Vec<f64>], per_center: usize, sigma: f64, seed: u64) -> (Dataset, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = DatasetBuilder::new();
    let mut labels = Vec::with_capacity(centers.len() * per_center);
    let mut row = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..per_center {
            row.clear();
            row.extend(c.iter().map(|&m| {
                let z: f64 = StandardNormal.sample(&mut rng);
                m + sigma * z
            }));
            b.push_dense_row(&row);
            labels.push(k as f64);
        }
    }
    let d = centers.first().map_or(0, |c| c.len());
    (b.finish_unchecked(d), labels)
}

/// Two unit-variance Gaussian blobs whose centers lie `margin` apart along
/// the diagonal; labels alternate `+1, -1`.
pub fn svc_blobs(n: usize, d: usize, margin: f64, seed: u64) -> (Dataset, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = 0.5 * margin / (d.max(1) as f64).sqrt();
    let mut b = DatasetBuilder::new();
    let mut labels = Vec::with_capacity(n);
    let mut row = vec![0.0; d];
    for i in 0..n {
        let y = if i % 2 == 0 { 1.0 } else { -1.0 };
        for x in row.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x = y * shift + z;
        }
        b.push_dense_row(&row);
        labels.push(y);
    }
    (b.finish_unchecked(d), labels)
}

/// Standard normal features with a linear target `wᵀx`, `w = 1/√d`, plus
/// uniform noise strictly inside `(-epsilon, epsilon)`.
pub fn svr_linear(n: usize, d: usize, epsilon: f64, seed: u64) -> (Dataset, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = 1.0 / (d.max(1) as f64).sqrt();
    let mut b = DatasetBuilder::new();
    let mut targets = Vec::with_capacity(n);
    let mut row = vec![0.0; d];
    for _ in 0..n {
        let mut z = 0.0;
        for x in row.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
            z += w * *x;
        }
        if epsilon > 0.0 {
            z += rng.random_range(-epsilon..epsilon) * 0.999;
        }
        b.push_dense_row(&row);
        targets.push(z);
    }
    (b.finish_unchecked(d), targets)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub task: TaskKind,
    pub samples: usize,
    pub features: usize,
    pub seed: u64,
    /// `None` means rbf with `gamma = 1/features`.
    pub kernel: Option<KernelSpec>,
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub margin: f64,
    pub max_iterations: Option<usize>,
    /// Largest sample count for which the dense oracle also runs.
    pub oracle_max: usize,
    pub oracle_iterations: usize,
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            task: TaskKind::Classification,
            samples: 1000,
            features: 10,
            seed: 0,
            kernel: None,
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-3,
            margin: 4.0,
            max_iterations: None,
            oracle_max: 2000,
            oracle_iterations: DEFAULT_PG_ITERATIONS,
            parallel: false,
        }
    }
}

impl BenchConfig {
    pub fn kernel(&self) -> KernelSpec {
        self.kernel.unwrap_or_else(|| KernelSpec::rbf(default_gamma(self.features)))
    }

    pub fn runs_oracle(&self) -> bool {
        self.samples <= self.oracle_max
    }

    /// Header lines describing the run, prefixed with `#`.
    pub fn header(&self) -> String {
        let k = self.kernel();
        let mut s = String::new();
        let task = match self.task {
            TaskKind::Classification => "svc",
            TaskKind::Regression => "svr",
        };
        let _ = writeln!(s, "# task={task} samples={} features={} seed={}", self.samples, self.features, self.seed);
        let _ = writeln!(
            s,
            "# kernel={} gamma={:?} degree={} coef0={:?} C={:?} epsilon={:?} tol={:?}",
            k.kind.name(),
            k.gamma,
            k.degree,
            k.coef0,
            self.c,
            self.epsilon,
            self.tol
        );
        if self.runs_oracle() {
            let _ = writeln!(
                s,
                "# oracle=projected-gradient iterations={} (samples <= oracle-max {})",
                self.oracle_iterations, self.oracle_max
            );
        } else {
            let _ = writeln!(s, "# oracle=skipped (samples {} > oracle-max {})", self.samples, self.oracle_max);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: &'static str,
    pub seconds: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn solver(&self) -> &BenchRow {
        &self.rows[0]
    }

    pub fn oracle(&self) -> Option<&BenchRow> {
        self.rows.get(1)
    }

    /// Oracle time over solver time.
    pub fn speedup(&self) -> Option<f64> {
        self.oracle().map(|o| o.seconds / self.solver().seconds.max(1e-9))
    }

    /// `|solver − oracle| / max(1, |oracle|)` on the dual objective.
    pub fn objective_rel_diff(&self) -> Option<f64> {
        self.oracle()
            .map(|o| (self.solver().objective - o.objective).abs() / o.objective.abs().max(1.0))
    }

    /// Human-readable table.
    pub fn table(&self) -> String {
        let mut s = self.config.header();
        let _ = writeln!(s, "{:<22} {:>12} {:>22} {:>12} {:>10}", "method", "seconds", "dual objective", "iterations", "converged");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<22} {:>12.4} {:>22.12e} {:>12} {:>10}",
                r.method, r.seconds, r.objective, r.iterations, r.converged
            );
        }
        if let (Some(sp), Some(diff)) = (self.speedup(), self.objective_rel_diff()) {
            let _ = writeln!(s, "# speedup={sp:.2}x objective_rel_diff={diff:.3e}");
        }
        s
    }

    /// Tab-separated output for plotting: header comments, then one row per method.
    pub fn tsv(&self) -> String {
        let mut s = self.config.header();
        let _ = writeln!(s, "method\tsamples\tfeatures\tseconds\tobjective\titerations\tconverged");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{:?}\t{:?}\t{}\t{}",
                r.method, self.config.samples, self.config.features, r.seconds, r.objective, r.iterations, r.converged as u8
            );
        }
        s
    }
}

/// Generates the synthetic problem and returns (data, targets).
pub fn generate(config: &BenchConfig) -> (Dataset, Vec<f64>) {
    match config.task {
        TaskKind::Classification => svc_blobs(config.samples, config.features, config.margin, config.seed),
        TaskKind::Regression => svr_linear(config.samples, config.features, config.epsilon, config.seed),
    }
}

/// Times the working-set solver and, when the sample count permits, the
/// projected-gradient oracle on the same dual.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    let (data, targets) = generate(config);
    let kernel = config.kernel();
    let problem: Problem<'_> = match config.task {
        TaskKind::Classification => build_svc_problem(&data, &targets, kernel, config.c)?,
        TaskKind::Regression => build_svr_problem(&data, &targets, kernel, config.c, config.epsilon)?,
    };
    let train_cfg = TrainConfig {
        c: config.c,
        epsilon_tube: config.epsilon,
        termination_tol: config.tol,
        max_iterations: config.max_iterations,
        parallel: config.parallel,
        ..Default::default()
    };
    let start = Instant::now();
    let sol = train_dual(&problem, &train_cfg, None)?;
    let mut rows = vec![BenchRow {
        method: "working-set",
        seconds: start.elapsed().as_secs_f64(),
        objective: sol.meta.dual_objective,
        iterations: sol.meta.iterations,
        converged: sol.meta.converged,
    }];
    if config.runs_oracle() {
        let start = Instant::now();
        let qp = DenseQP::from_problem_capped(&problem, config.oracle_max)?;
        let o = oracle_projected_gradient(&qp, config.oracle_iterations, None);
        rows.push(BenchRow {
            method: "projected-gradient",
            seconds: start.elapsed().as_secs_f64(),
            objective: o.objective,
            iterations: config.oracle_iterations,
            converged: true,
        });
    }
    Ok(BenchReport {
        config: config.clone(),
        rows,
    })
}
