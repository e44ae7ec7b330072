//! Legendre-Gauss-Radau collocation rules.
//!
//! An n-point LGR rule collocates at the n roots of P_{n-1} + P_n, which lie
//! in [-1, +1) and include the left endpoint. The right endpoint +1 is carried
//! as an extra non-collocated support point so that interpolants span the full
//! interval. Quadrature with the n weights is exact for polynomials of degree
//! <= 2n - 2.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported rule degree. Conditioning of the barycentric weights
/// degrades beyond this and refinement never asks for more.
pub const MAX_DEGREE: usize = 40;

#[derive(Debug, Error, PartialEq)]
pub enum LgrError {
    #[error("rule degree must be in 1..={MAX_DEGREE}, got {0}")]
    InvalidDegree(usize),
    #[error("interval [{0}, {1}] is empty or reversed")]
    BadInterval(f64, f64),
}

/// n-point Radau quadrature/collocation rule on a subinterval `[a, b]`.
///
/// `nodes()` returns the n collocation points followed by the non-collocated
/// right endpoint `b`; only the collocation points carry quadrature weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LgrRule {
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    interval: (f64, f64),
}

impl LgrRule {
    /// Number of collocation points.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// All n + 1 support points: collocation points plus the right endpoint.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// The n collocation points (excludes the right endpoint).
    pub fn collocation_nodes(&self) -> &[f64] {
        &self.nodes[..self.degree]
    }

    /// Quadrature weights for the collocation points.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// Affinely map this rule onto `[a, b]`. Weights scale with the interval
    /// length so that they sum to `b - a`.
    pub fn map_to(&self, a: f64, b: f64) -> Result<LgrRule, LgrError> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(LgrError::BadInterval(a, b));
        }
        let (c, d) = self.interval;
        let scale = (b - a) / (d - c);
        let nodes = self.nodes.iter().map(|&t| a + (t - c) * scale).collect();
        let weights = self.weights.iter().map(|&w| w * scale).collect();
        Ok(LgrRule {
            degree: self.degree,
            nodes,
            weights,
            interval: (a, b),
        })
    }
}

/// Legendre polynomial values (P_{n-1}, P_n) and derivatives at `x`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64, f64, f64) {
    debug_assert!(n >= 1);
    // (P_0, P_1) with derivatives, advanced by the three-term recurrence
    // (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1} and
    // P'_{k+1} = P'_{k-1} + (2k+1) P_k.
    let (mut p_prev, mut p) = (1.0, x);
    let (mut dp_prev, mut dp) = (0.0, 1.0);
    if n == 1 {
        return (p_prev, p, dp_prev, dp);
    }
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        let dp_next = dp_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (p_prev, p, dp_prev, dp)
}

/// Radau polynomial R_n = P_{n-1} + P_n and its derivative at `x`.
fn radau_poly(n: usize, x: f64) -> (f64, f64) {
    let (pm1, p, dpm1, dp) = legendre_pair(n, x);
    (pm1 + p, dpm1 + dp)
}

/// Build the n-point LGR rule on the canonical interval [-1, +1].
///
/// Collocation points are the roots of P_{n-1} + P_n, bracketed on a fine
/// grid and polished by Newton iteration to residuals below 1e-14. The
/// endpoint weight is 2/n^2 and the interior weights follow the classical
/// closed form (1 - x_j) / (n^2 P_{n-1}(x_j)^2).
pub fn lgr_points(n: usize) -> Result<LgrRule, LgrError> {
    if n == 0 || n > MAX_DEGREE {
        return Err(LgrError::InvalidDegree(n));
    }
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(-1.0);

    if n > 1 {
        // Bracket the n - 1 interior roots on a cosine-spaced grid, then
        // polish. The grid is fine enough that each bracket holds one root.
        let grid = 24 * n;
        let mut prev_x = -1.0 + 1e-9;
        let (mut prev_r, _) = radau_poly(n, prev_x);
        for g in 1..=grid {
            let x = -f64::cos(std::f64::consts::PI * g as f64 / grid as f64);
            let (r, _) = radau_poly(n, x);
            if prev_r == 0.0 {
                nodes.push(prev_x);
            } else if prev_r * r < 0.0 {
                nodes.push(polish_root(n, prev_x, x));
            }
            prev_x = x;
            prev_r = r;
        }
        debug_assert_eq!(nodes.len(), n, "expected {} Radau roots", n);
    }

    let mut weights = Vec::with_capacity(n);
    let nsq = (n * n) as f64;
    weights.push(2.0 / nsq);
    for &x in nodes.iter().skip(1) {
        let (pm1, _, _, _) = legendre_pair(n, x);
        weights.push((1.0 - x) / (nsq * pm1 * pm1));
    }

    nodes.push(1.0);
    Ok(LgrRule {
        degree: n,
        nodes,
        weights,
        interval: (-1.0, 1.0),
    })
}

/// Bisection to a tight bracket followed by Newton iteration.
fn polish_root(n: usize, mut lo: f64, mut hi: f64) -> f64 {
    let (mut r_lo, _) = radau_poly(n, lo);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let (r_mid, _) = radau_poly(n, mid);
        if r_lo * r_mid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            r_lo = r_mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..50 {
        let (r, dr) = radau_poly(n, x);
        if dr == 0.0 {
            break;
        }
        let step = r / dr;
        x -= step;
        if step.abs() < 1e-15 && r.abs() < 1e-14 {
            break;
        }
    }
    x
}

/// Normalized barycentric weights for a set of distinct support points.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for j in 0..n {
        for i in 0..n {
            if i != j {
                w[j] /= nodes[j] - nodes[i];
            }
        }
    }
    // Rescale so the largest magnitude is 1; all downstream formulas use
    // ratios, so the scale is free and this avoids overflow at high degree.
    let max = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for v in &mut w {
        *v /= max;
    }
    w
}

/// Differentiation matrix of the Lagrange basis over a rule's support points,
/// with one row per collocation point: `D[i][j] = dl_j/dt` at collocation
/// node i. Shape n x (n + 1).
#[derive(Debug, Clone)]
pub struct DiffMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    rule: LgrRule,
}

impl DiffMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rule(&self) -> &LgrRule {
        &self.rule
    }

    /// Differentiate samples given at the n + 1 support points; returns the
    /// derivative at the n collocation points.
    pub fn apply(&self, support_values: &[f64]) -> Vec<f64> {
        assert_eq!(support_values.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(support_values)
                    .map(|(d, v)| d * v)
                    .sum()
            })
            .collect()
    }
}

/// Assemble the differentiation matrix for `rule` via barycentric weights.
///
/// Off-diagonal entries are (w_j / w_i) / (x_i - x_j); the diagonal is the
/// negated row sum, which enforces exact differentiation of constants.
pub fn differentiation_matrix(rule: &LgrRule) -> DiffMatrix {
    let support = rule.nodes();
    let n = rule.degree();
    let cols = n + 1;
    let w = barycentric_weights(support);
    let mut entries = vec![0.0; n * cols];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..cols {
            if i != j {
                let d = (w[j] / w[i]) / (support[i] - support[j]);
                entries[i * cols + j] = d;
                diag -= d;
            }
        }
        entries[i * cols + i] = diag;
    }
    DiffMatrix {
        rows: n,
        cols,
        entries,
        rule: rule.clone(),
    }
}

/// Result of a barycentric interpolation query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interpolated {
    pub value: f64,
    /// Set when the query point lies outside the support interval.
    pub extrapolated: bool,
}

/// Barycentric Lagrange interpolant over a fixed set of support points.
///
/// Values are supplied per evaluation so one node set can serve many data
/// channels (each state component, each control component).
#[derive(Debug, Clone)]
pub struct Barycentric {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Barycentric {
    pub fn new(nodes: &[f64]) -> Self {
        Barycentric {
            nodes: nodes.to_vec(),
            weights: barycentric_weights(nodes),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Evaluate the interpolant of `values` (one per support point) at `x`
    /// using the second barycentric form. Exact at support points.
    pub fn eval(&self, values: &[f64], x: f64) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&t, &w), &v) in self.nodes.iter().zip(&self.weights).zip(values) {
            let dx = x - t;
            if dx == 0.0 {
                return v;
            }
            let c = w / dx;
            num += c * v;
            den += c;
        }
        num / den
    }

    pub fn eval_flagged(&self, values: &[f64], x: f64) -> Interpolated {
        let lo = self.nodes.first().copied().unwrap_or(0.0);
        let hi = self.nodes.last().copied().unwrap_or(0.0);
        Interpolated {
            value: self.eval(values, x),
            extrapolated: x < lo.min(hi) || x > lo.max(hi),
        }
    }
}

/// Interpolate several channels sampled at common support points.
///
/// `channels[c][j]` is the value of channel c at support point j. Returns one
/// value per channel plus the extrapolation flag.
pub fn interpolate(nodes: &[f64], channels: &[Vec<f64>], query: f64) -> (Vec<f64>, bool) {
    let bary = Barycentric::new(nodes);
    let mut out = Vec::with_capacity(channels.len());
    let mut flag = false;
    for ch in channels {
        let r = bary.eval_flagged(ch, query);
        out.push(r.value);
        flag |= r.extrapolated;
    }
    (out, flag)
}
