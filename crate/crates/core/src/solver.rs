//! Iterative least-squares solvers: steepest descent with exact line search
//! and conjugate gradients on the normal equations.

use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::matrix::{dot, norm2, RealMatrix};

/// Iterations between recomputing the true residual in steepest descent.
const RESIDUAL_REFRESH: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Steepest descent; stops when `‖∇f(θ)‖₂ ≤ ε`.
    SteepestDescent,
    /// Conjugate gradients on `AᵀA θ = Aᵀy`; stops when `‖θ[t] − θ[t−1]‖₂ ≤ ε`.
    ConjugateGradient,
}

impl Method {
    pub fn short_name(self) -> &'static str {
        match self {
            Method::SteepestDescent => "sd",
            Method::ConjugateGradient => "cg",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sd" => Ok(Method::SteepestDescent),
            "cg" => Ok(Method::ConjugateGradient),
            other => arg(format!("unknown method {other:?} (expected sd or cg)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub epsilon: f64,
    /// Per-solve iteration budget. `None` picks `10·M` for steepest descent
    /// and `M` for conjugate gradients, `M` being the number of unknowns.
    pub max_iterations: Option<usize>,
    /// Keep the termination-criterion value of every iteration.
    pub record_iterations: bool,
}

impl SolverConfig {
    pub fn new(method: Method, epsilon: f64) -> Self {
        Self {
            method,
            epsilon,
            max_iterations: None,
            record_iterations: false,
        }
    }

    pub fn sd(epsilon: f64) -> Self {
        Self::new(Method::SteepestDescent, epsilon)
    }

    pub fn cg(epsilon: f64) -> Self {
        Self::new(Method::ConjugateGradient, epsilon)
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = Some(max_iterations);
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_iterations = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return arg(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_iterations == Some(0) {
            return arg("max_iterations must be at least 1");
        }
        Ok(())
    }

    /// Iteration budget for a problem with `unknowns` unknowns.
    pub fn budget(&self, unknowns: usize) -> usize {
        self.max_iterations.unwrap_or(match self.method {
            Method::SteepestDescent => 10 * unknowns.max(1),
            Method::ConjugateGradient => unknowns.max(1),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Value of the termination criterion at the returned iterate.
    pub final_criterion_value: f64,
    /// Scalar multiply-adds spent in matrix-vector products.
    pub ops: u64,
    pub converged: bool,
    /// Criterion per iteration, when recording was requested.
    pub history: Vec<f64>,
}

/// Approximates `argmin ‖Aθ − y‖₂²` starting from θ = 0.
pub fn solve_least_squares(a: &RealMatrix, y: &[f64], cfg: &SolverConfig) -> Result<SolveReport> {
    let mut reports = solve_least_squares_path(a, y, cfg, &[cfg.epsilon])?;
    Ok(reports.remove(0))
}

/// Runs one solve and snapshots the first iterate meeting each tolerance
/// in `thresholds`, which must be strictly decreasing.
///
/// The iterates never depend on the tolerance, only the stopping point
/// does, so report `i` matches a separate solve with `ε = thresholds[i]`
/// (up to the rounding of an extra residual refresh in steepest descent).
/// `cfg.epsilon` is ignored.
pub fn solve_least_squares_path(
    a: &RealMatrix,
    y: &[f64],
    cfg: &SolverConfig,
    thresholds: &[f64],
) -> Result<Vec<SolveReport>> {
    for &eps in thresholds {
        SolverConfig { epsilon: eps, ..cfg.clone() }.validate()?;
    }
    if thresholds.is_empty() || thresholds.windows(2).any(|w| w[1] >= w[0]) {
        return arg("thresholds must be non-empty and strictly decreasing");
    }
    if y.len() != a.rows() {
        return arg(format!(
            "right-hand side has length {}, matrix has {} rows",
            y.len(),
            a.rows()
        ));
    }
    if a.cols() == 0 {
        return arg("matrix has no columns");
    }
    Ok(match cfg.method {
        Method::SteepestDescent => steepest_descent(a, y, cfg, thresholds),
        Method::ConjugateGradient => conjugate_gradient(a, y, cfg, thresholds),
    })
}

/// `2Aᵀ(Aθ − y)`, i.e. the gradient of the least-squares objective.
pub fn least_squares_gradient(a: &RealMatrix, theta: &[f64], y: &[f64]) -> Vec<f64> {
    let mut r = a.matvec(theta);
    r.iter_mut().zip(y).for_each(|(ri, yi)| *ri -= yi);
    let mut g = a.matvec_t(&r);
    g.iter_mut().for_each(|gi| *gi *= 2.0);
    g
}

struct Snapshots<'a> {
    thresholds: &'a [f64],
    out: Vec<SolveReport>,
}

impl Snapshots<'_> {
    fn target(&self) -> f64 {
        self.thresholds[self.out.len()]
    }

    fn done(&self) -> bool {
        self.out.len() == self.thresholds.len()
    }

    fn take(&mut self, theta: &[f64], iterations: usize, crit: f64, ops: u64, converged: bool, history: &[f64]) {
        self.out.push(SolveReport {
            solution: theta.to_vec(),
            iterations,
            final_criterion_value: crit,
            ops,
            converged,
            history: history.to_vec(),
        });
    }

    fn fill_unconverged(mut self, theta: &[f64], iterations: usize, crit: f64, ops: u64, history: &[f64]) -> Vec<SolveReport> {
        while !self.done() {
            self.take(theta, iterations, crit, ops, false, history);
        }
        self.out
    }
}

fn steepest_descent(a: &RealMatrix, y: &[f64], cfg: &SolverConfig, thresholds: &[f64]) -> Vec<SolveReport> {
    let (m, n) = a.shape();
    let mn = (m * n) as u64;
    let budget = cfg.budget(n);
    let mut snaps = Snapshots {
        thresholds,
        out: Vec::with_capacity(thresholds.len()),
    };

    let mut theta = vec![0.0; n];
    // r = Aθ − y
    let mut r: Vec<f64> = y.iter().map(|v| -v).collect();
    let mut g = vec![0.0; n];
    let mut ag = vec![0.0; m];
    let mut ops = 0u64;
    let mut history = Vec::new();

    let gradient = |r: &[f64], g: &mut [f64]| {
        a.matvec_t_into(r, g);
        g.iter_mut().for_each(|v| *v *= 2.0);
    };
    let true_residual = |theta: &[f64], r: &mut [f64]| {
        a.matvec_into(theta, r);
        r.iter_mut().zip(y).for_each(|(ri, yi)| *ri -= yi);
    };

    gradient(&r, &mut g);
    ops += mn;
    let mut crit = norm2(&g);
    let mut iterations = 0;
    let mut fresh = true;

    loop {
        if crit <= snaps.target() {
            if !fresh {
                // Confirm on the true gradient, not the recurrence.
                true_residual(&theta, &mut r);
                gradient(&r, &mut g);
                ops += 2 * mn;
                crit = norm2(&g);
                fresh = true;
                continue;
            }
            snaps.take(&theta, iterations, crit, ops, true, &history);
            if snaps.done() {
                return snaps.out;
            }
            continue;
        }
        if iterations >= budget {
            return snaps.fill_unconverged(&theta, iterations, crit, ops, &history);
        }

        a.matvec_into(&g, &mut ag);
        ops += mn;
        let gg = dot(&g, &g);
        let denom = 2.0 * dot(&ag, &ag);
        if denom == 0.0 || !denom.is_finite() {
            // Rank-deficient direction; no further progress is possible.
            return snaps.fill_unconverged(&theta, iterations, crit, ops, &history);
        }
        let step = gg / denom;
        theta.iter_mut().zip(&g).for_each(|(t, gi)| *t -= step * gi);
        iterations += 1;

        if iterations % RESIDUAL_REFRESH == 0 {
            true_residual(&theta, &mut r);
            ops += mn;
            fresh = true;
        } else {
            r.iter_mut().zip(&ag).for_each(|(ri, agi)| *ri -= step * agi);
            fresh = false;
        }
        gradient(&r, &mut g);
        ops += mn;
        crit = norm2(&g);
        if cfg.record_iterations {
            history.push(crit);
        }
    }
}

fn conjugate_gradient(a: &RealMatrix, y: &[f64], cfg: &SolverConfig, thresholds: &[f64]) -> Vec<SolveReport> {
    let (m, n) = a.shape();
    let mn = (m * n) as u64;
    let budget = cfg.budget(n);
    let mut snaps = Snapshots {
        thresholds,
        out: Vec::with_capacity(thresholds.len()),
    };

    let mut x = vec![0.0; n];
    let mut r = y.to_vec();
    let mut s = a.matvec_t(&r);
    let mut ops = mn;
    let mut p = s.clone();
    let mut q = vec![0.0; m];
    let mut gamma = dot(&s, &s);
    let mut history = Vec::new();

    let mut iterations = 0;
    let mut crit = if gamma == 0.0 { 0.0 } else { f64::INFINITY };
    loop {
        if gamma == 0.0 {
            // Exact solution reached (or y ⟂ range(A) from the start).
            while !snaps.done() {
                snaps.take(&x, iterations, crit, ops, true, &history);
            }
            return snaps.out;
        }
        if iterations >= budget {
            return snaps.fill_unconverged(&x, iterations, crit, ops, &history);
        }
        a.matvec_into(&p, &mut q);
        ops += mn;
        let qq = dot(&q, &q);
        if qq == 0.0 || !qq.is_finite() {
            return snaps.fill_unconverged(&x, iterations, crit, ops, &history);
        }
        let alpha = gamma / qq;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
        iterations += 1;
        crit = alpha.abs() * norm2(&p);
        if cfg.record_iterations {
            history.push(crit);
        }
        while !snaps.done() && crit <= snaps.target() {
            snaps.take(&x, iterations, crit, ops, true, &history);
        }
        if snaps.done() {
            return snaps.out;
        }
        a.matvec_t_into(&r, &mut s);
        ops += mn;
        let gamma_next = dot(&s, &s);
        let beta = gamma_next / gamma;
        p.iter_mut().zip(&s).for_each(|(pi, si)| *pi = si + beta * *pi);
        gamma = gamma_next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::gaussian_matrix;

    #[test]
    fn identity_lands_in_one_sd_step() {
        let a = RealMatrix::identity(3);
        let rep = solve_least_squares(&a, &[1.0, 2.0, 3.0], &SolverConfig::sd(1e-8)).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        for (got, want) in rep.solution.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn diagonal_cg() {
        let a = RealMatrix::diag(&[2.0, 4.0]);
        let rep = solve_least_squares(&a, &[1.0, 0.0], &SolverConfig::cg(1e-10)).unwrap();
        assert!(rep.converged);
        assert!((rep.solution[0] - 0.5).abs() < 1e-14);
        assert!(rep.solution[1].abs() < 1e-14);
    }

    #[test]
    fn planted_solution_recovered() {
        let a = gaussian_matrix(5, 3, 1.0, 42);
        let y = a.matvec(&[1.0, 1.0, 1.0]);
        for cfg in [
            SolverConfig::sd(1e-10).with_max_iterations(100_000),
            SolverConfig::cg(1e-12).with_max_iterations(100),
        ] {
            let rep = solve_least_squares(&a, &y, &cfg).unwrap();
            assert!(rep.converged, "{cfg:?}");
            for v in &rep.solution {
                assert!((v - 1.0).abs() < 1e-6, "{cfg:?}: {:?}", rep.solution);
            }
        }
    }

    #[test]
    fn degenerate_epsilon_returns_initial_guess() {
        let a = RealMatrix::diag(&[1.0, 1.0]);
        let rep = solve_least_squares(&a, &[1e-3, 0.0], &SolverConfig::sd(1.0)).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.solution, vec![0.0, 0.0]);
    }

    #[test]
    fn exhausted_budget_is_flagged_not_an_error() {
        let a = gaussian_matrix(20, 20, 1.0, 1);
        let y = vec![1.0; 20];
        let rep =
            solve_least_squares(&a, &y, &SolverConfig::sd(1e-14).with_max_iterations(3)).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
    }

    #[test]
    fn sd_termination_holds_on_true_gradient() {
        let a = gaussian_matrix(8, 5, 1.0, 9);
        let y: Vec<f64> = (0..8).map(|i| i as f64 - 3.0).collect();
        let cfg = SolverConfig::sd(1e-7).with_max_iterations(1_000_000);
        let rep = solve_least_squares(&a, &y, &cfg).unwrap();
        assert!(rep.converged);
        assert!(norm2(&least_squares_gradient(&a, &rep.solution, &y)) <= cfg.epsilon);
    }

    #[test]
    fn history_is_recorded_on_request() {
        let a = gaussian_matrix(6, 4, 1.0, 2);
        let y = vec![1.0; 6];
        let rep = solve_least_squares(&a, &y, &SolverConfig::cg(1e-12).recording()).unwrap();
        assert_eq!(rep.history.len(), rep.iterations);
    }

    #[test]
    fn path_matches_separate_solves() {
        let a = gaussian_matrix(12, 12, 1.0, 4);
        let y = vec![1.0; 12];
        let grid = [1e-1, 1e-3, 1e-5];
        for method in [Method::SteepestDescent, Method::ConjugateGradient] {
            let cfg = SolverConfig::new(method, 1.0).with_max_iterations(1_000_000);
            let path = solve_least_squares_path(&a, &y, &cfg, &grid).unwrap();
            for (rep, &eps) in path.iter().zip(&grid) {
                let single = solve_least_squares(&a, &y, &SolverConfig { epsilon: eps, ..cfg.clone() }).unwrap();
                assert_eq!(rep.iterations, single.iterations, "{method:?} {eps}");
                let diff = rep.solution.iter().zip(&single.solution).map(|(x, z)| (x - z).abs()).fold(0.0, f64::max);
                assert!(diff < 1e-9, "{method:?} {eps}: {diff}");
            }
        }
        assert!(solve_least_squares_path(&a, &y, &SolverConfig::sd(1.0), &[1e-3, 1e-2]).is_err());
    }

    #[test]
    fn argument_errors() {
        let a = RealMatrix::identity(2);
        assert!(solve_least_squares(&a, &[1.0], &SolverConfig::sd(1e-3)).is_err());
        assert!(solve_least_squares(&a, &[1.0, 1.0], &SolverConfig::sd(0.0)).is_err());
        assert!(solve_least_squares(
            &a,
            &[1.0, 1.0],
            &SolverConfig::sd(1e-3).with_max_iterations(0)
        )
        .is_err());
        assert!("bfgs".parse::<Method>().is_err());
        assert_eq!("CG".parse::<Method>().unwrap(), Method::ConjugateGradient);
    }
}
