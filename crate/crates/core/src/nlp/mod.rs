//! Solver contract for large sparse NLPs with general inequality constraints,
//! plus the built-in primal-dual interior-point backend.
//!
//! Problems present themselves through [`NlpProblem`]: box bounds on
//! variables, general constraint rows with lower/upper bounds (equal bounds
//! make a row an equality), a sparse Jacobian, and a sparse Hessian of the
//! Lagrangian. The solver treats the problem as a black box; any backend that
//! honors the contract can be swapped in by name.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod linalg;

mod ip;

/// Environment variable consulted for backend selection when the options do
/// not name one explicitly.
pub const BACKEND_ENV_VAR: &str = "SPOC_NLP_BACKEND";

/// Explicit sparsity pattern: one (row, col) coordinate per stored entry.
/// Hessian patterns list the lower triangle only (row >= col), one entry per
/// coordinate.
#[derive(Debug, Clone, Default)]
pub struct Pattern {
    pub entries: Vec<(usize, usize)>,
}

impl Pattern {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A sparse NLP of the form
///
/// ```text
///   minimize    f(x)
///   subject to  cl <= c(x) <= cu
///               xl <= x    <= xu
/// ```
///
/// Callbacks must be deterministic and reentrant. Non-finite outputs mark an
/// evaluation as poisoned; the solver rejects the corresponding trial step.
pub trait NlpProblem {
    fn num_vars(&self) -> usize;
    fn num_constraints(&self) -> usize;
    fn var_bounds(&self) -> (&[f64], &[f64]);
    fn constraint_bounds(&self) -> (&[f64], &[f64]);
    fn initial_point(&self) -> Vec<f64>;

    fn objective(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], grad: &mut [f64]);
    fn constraints(&self, x: &[f64], out: &mut [f64]);

    fn jacobian_pattern(&self) -> &Pattern;
    fn jacobian_values(&self, x: &[f64], vals: &mut [f64]);

    /// Lower-triangle Hessian of `obj_factor * f + lambda . c`.
    fn hessian_pattern(&self) -> &Pattern;
    fn hessian_values(&self, x: &[f64], obj_factor: f64, lambda: &[f64], vals: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NlpStatus {
    Optimal,
    MaxIterations,
    Infeasible,
    Failed,
}

#[derive(Debug, Clone)]
pub struct Multipliers {
    /// One multiplier per constraint row, for the convention
    /// `L = f + lambda . c`.
    pub constraints: Vec<f64>,
    /// Nonnegative duals of the lower/upper variable bounds.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct NlpResult {
    pub status: NlpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Infinity norm of the general-constraint violation at `x`.
    pub constraint_violation: f64,
    pub multipliers: Option<Multipliers>,
    pub iterations: usize,
    pub wall_time: Duration,
}

impl NlpResult {
    pub fn converged(&self) -> bool {
        self.status == NlpStatus::Optimal
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NlpSolveOptions {
    /// Convergence tolerance on the scaled KKT error.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// 0 = silent, 1 = per-iteration log records, 2 = verbose.
    pub print_level: u8,
    /// Start from the supplied primal point with a reduced initial barrier
    /// parameter; intended for points interpolated from a previous solution.
    pub warm_start: bool,
    /// Backend name; `None` defers to the `SPOC_NLP_BACKEND` environment
    /// variable and then to the built-in default.
    pub backend: Option<String>,
}

impl Default for NlpSolveOptions {
    fn default() -> Self {
        NlpSolveOptions {
            tolerance: 1e-8,
            max_iterations: 500,
            print_level: 0,
            warm_start: false,
            backend: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum NlpError {
    #[error("unknown NLP backend '{0}' (available: interior-point)")]
    UnknownBackend(String),
    #[error("solve options invalid: {0}")]
    BadOptions(String),
}

/// Solve `problem` with the selected backend.
///
/// Solver failures (bad initial point, iteration cap, infeasibility) are
/// reported through [`NlpResult::status`], not as errors; `Err` is reserved
/// for unusable configuration.
pub fn solve(problem: &dyn NlpProblem, options: &NlpSolveOptions) -> Result<NlpResult, NlpError> {
    if !(options.tolerance > 0.0) {
        return Err(NlpError::BadOptions(format!(
            "tolerance must be positive, got {}",
            options.tolerance
        )));
    }
    let name = options
        .backend
        .clone()
        .or_else(|| std::env::var(BACKEND_ENV_VAR).ok())
        .unwrap_or_else(|| "interior-point".to_string());
    match name.as_str() {
        "interior-point" | "ip" => Ok(ip::solve(problem, options)),
        other => Err(NlpError::UnknownBackend(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Minimal problem container used by the backend regression tests.
    pub(crate) struct DenseToy {
        pub n: usize,
        pub m: usize,
        pub xl: Vec<f64>,
        pub xu: Vec<f64>,
        pub cl: Vec<f64>,
        pub cu: Vec<f64>,
        pub x0: Vec<f64>,
        pub jac: Pattern,
        pub hess: Pattern,
        pub f: fn(&[f64]) -> f64,
        pub g: fn(&[f64], &mut [f64]),
        pub c: fn(&[f64], &mut [f64]),
        pub jv: fn(&[f64], &mut [f64]),
        pub hv: fn(&[f64], f64, &[f64], &mut [f64]),
    }

    impl NlpProblem for DenseToy {
        fn num_vars(&self) -> usize {
            self.n
        }
        fn num_constraints(&self) -> usize {
            self.m
        }
        fn var_bounds(&self) -> (&[f64], &[f64]) {
            (&self.xl, &self.xu)
        }
        fn constraint_bounds(&self) -> (&[f64], &[f64]) {
            (&self.cl, &self.cu)
        }
        fn initial_point(&self) -> Vec<f64> {
            self.x0.clone()
        }
        fn objective(&self, x: &[f64]) -> f64 {
            (self.f)(x)
        }
        fn gradient(&self, x: &[f64], grad: &mut [f64]) {
            (self.g)(x, grad)
        }
        fn constraints(&self, x: &[f64], out: &mut [f64]) {
            (self.c)(x, out)
        }
        fn jacobian_pattern(&self) -> &Pattern {
            &self.jac
        }
        fn jacobian_values(&self, x: &[f64], vals: &mut [f64]) {
            (self.jv)(x, vals)
        }
        fn hessian_pattern(&self) -> &Pattern {
            &self.hess
        }
        fn hessian_values(&self, x: &[f64], s: f64, l: &[f64], vals: &mut [f64]) {
            (self.hv)(x, s, l, vals)
        }
    }

    fn inf() -> f64 {
        f64::INFINITY
    }

    /// minimize x^2 subject to x >= 1 (active bound).
    pub(crate) fn bound_toy() -> DenseToy {
        DenseToy {
            n: 1,
            m: 0,
            xl: vec![1.0],
            xu: vec![inf()],
            cl: vec![],
            cu: vec![],
            x0: vec![5.0],
            jac: Pattern::default(),
            hess: Pattern {
                entries: vec![(0, 0)],
            },
            f: |x| x[0] * x[0],
            g: |x, g| g[0] = 2.0 * x[0],
            c: |_, _| {},
            jv: |_, _| {},
            hv: |_, s, _, v| v[0] = 2.0 * s,
        }
    }

    pub(crate) fn rosenbrock() -> DenseToy {
        DenseToy {
            n: 2,
            m: 0,
            xl: vec![-inf(); 2],
            xu: vec![inf(); 2],
            cl: vec![],
            cu: vec![],
            x0: vec![-1.2, 1.0],
            jac: Pattern::default(),
            hess: Pattern {
                entries: vec![(0, 0), (1, 0), (1, 1)],
            },
            f: |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            g: |x, g| {
                g[0] = -400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]);
                g[1] = 200.0 * (x[1] - x[0] * x[0]);
            },
            c: |_, _| {},
            jv: |_, _| {},
            hv: |x, s, _, v| {
                v[0] = s * (1200.0 * x[0] * x[0] - 400.0 * x[1] + 2.0);
                v[1] = s * (-400.0 * x[0]);
                v[2] = s * 200.0;
            },
        }
    }

    /// minimize ||x||^2 subject to sum(x) = 1 with n = 5; solution x_i = 0.2.
    pub(crate) fn simplex_qp() -> DenseToy {
        DenseToy {
            n: 5,
            m: 1,
            xl: vec![-inf(); 5],
            xu: vec![inf(); 5],
            cl: vec![1.0],
            cu: vec![1.0],
            x0: vec![0.9, -0.3, 0.2, 0.05, 0.4],
            jac: Pattern {
                entries: (0..5).map(|j| (0, j)).collect(),
            },
            hess: Pattern {
                entries: (0..5).map(|i| (i, i)).collect(),
            },
            f: |x| x.iter().map(|v| v * v).sum(),
            g: |x, g| g.iter_mut().zip(x).for_each(|(g, x)| *g = 2.0 * x),
            c: |x, out| out[0] = x.iter().sum(),
            jv: |_, v| v.iter_mut().for_each(|v| *v = 1.0),
            hv: |_, s, _, v| v.iter_mut().for_each(|v| *v = 2.0 * s),
        }
    }

    /// Constrained HS-style problem with an inequality row:
    /// minimize (x0-2)^2 + (x1-1)^2 s.t. x0^2 + x1^2 <= 1.
    pub(crate) fn disk_toy() -> DenseToy {
        DenseToy {
            n: 2,
            m: 1,
            xl: vec![-inf(); 2],
            xu: vec![inf(); 2],
            cl: vec![-inf()],
            cu: vec![1.0],
            x0: vec![0.0, 0.0],
            jac: Pattern {
                entries: vec![(0, 0), (0, 1)],
            },
            hess: Pattern {
                entries: vec![(0, 0), (1, 1)],
            },
            f: |x| (x[0] - 2.0).powi(2) + (x[1] - 1.0).powi(2),
            g: |x, g| {
                g[0] = 2.0 * (x[0] - 2.0);
                g[1] = 2.0 * (x[1] - 1.0);
            },
            c: |x, out| out[0] = x[0] * x[0] + x[1] * x[1],
            jv: |x, v| {
                v[0] = 2.0 * x[0];
                v[1] = 2.0 * x[1];
            },
            hv: |_, s, l, v| {
                v[0] = 2.0 * s + 2.0 * l[0];
                v[1] = 2.0 * s + 2.0 * l[0];
            },
        }
    }

    #[test]
    fn active_bound_problem() {
        let r = solve(&bound_toy(), &NlpSolveOptions::default()).unwrap();
        assert_eq!(r.status, NlpStatus::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-7, "x = {}", r.x[0]);
        assert!((r.objective - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock_unconstrained() {
        let r = solve(&rosenbrock(), &NlpSolveOptions::default()).unwrap();
        assert_eq!(r.status, NlpStatus::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn equality_qp_symmetric_solution() {
        let r = solve(&simplex_qp(), &NlpSolveOptions::default()).unwrap();
        assert_eq!(r.status, NlpStatus::Optimal);
        for &xi in &r.x {
            assert!((xi - 0.2).abs() < 1e-7, "x = {:?}", r.x);
        }
        assert!(r.constraint_violation <= 1e-8);
    }

    #[test]
    fn inequality_becomes_active() {
        let r = solve(&disk_toy(), &NlpSolveOptions::default()).unwrap();
        assert_eq!(r.status, NlpStatus::Optimal);
        let norm = (r.x[0] * r.x[0] + r.x[1] * r.x[1]).sqrt();
        assert!((norm - 1.0).abs() < 1e-6, "|x| = {}", norm);
        // analytic solution: x = (2,1)/sqrt(5)
        assert!((r.x[0] - 2.0 / 5.0_f64.sqrt()).abs() < 1e-5);
        assert!((r.x[1] - 1.0 / 5.0_f64.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn unknown_backend_is_rejected() {
        let opts = NlpSolveOptions {
            backend: Some("simplex".into()),
            ..Default::default()
        };
        assert!(matches!(
            solve(&bound_toy(), &opts),
            Err(NlpError::UnknownBackend(_))
        ));
    }

    #[test]
    fn fixed_variables_are_respected() {
        // minimize (x0-3)^2 + x1^2 with x1 fixed at 2 by its bounds.
        let toy = DenseToy {
            n: 2,
            m: 0,
            xl: vec![-inf(), 2.0],
            xu: vec![inf(), 2.0],
            cl: vec![],
            cu: vec![],
            x0: vec![0.0, 0.0],
            jac: Pattern::default(),
            hess: Pattern {
                entries: vec![(0, 0), (1, 1)],
            },
            f: |x| (x[0] - 3.0).powi(2) + x[1] * x[1],
            g: |x, g| {
                g[0] = 2.0 * (x[0] - 3.0);
                g[1] = 2.0 * x[1];
            },
            c: |_, _| {},
            jv: |_, _| {},
            hv: |_, s, _, v| {
                v[0] = 2.0 * s;
                v[1] = 2.0 * s;
            },
        };
        let r = solve(&toy, &NlpSolveOptions::default()).unwrap();
        assert_eq!(r.status, NlpStatus::Optimal);
        assert!((r.x[0] - 3.0).abs() < 1e-7);
        assert_eq!(r.x[1], 2.0);
        assert!((r.objective - 4.0).abs() < 1e-6);
    }

    #[test]
    fn warm_start_does_not_blow_up_iterations() {
        // Sanity property: warm starting each regression problem from its
        // own solution costs at most twice the cold iteration count.
        for toy in [bound_toy(), rosenbrock(), simplex_qp(), disk_toy()] {
            let cold = solve(&toy, &NlpSolveOptions::default()).unwrap();
            assert_eq!(cold.status, NlpStatus::Optimal);
            let warm_toy = DenseToy {
                x0: cold.x.clone(),
                ..toy
            };
            let opts = NlpSolveOptions {
                warm_start: true,
                ..Default::default()
            };
            let warm = solve(&warm_toy, &opts).unwrap();
            assert_eq!(warm.status, NlpStatus::Optimal);
            assert!(
                warm.iterations <= 2 * cold.iterations.max(1),
                "warm {} vs cold {}",
                warm.iterations,
                cold.iterations
            );
        }
    }
}
