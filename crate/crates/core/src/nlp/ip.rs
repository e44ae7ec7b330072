//! Primal-dual interior-point backend.
//!
//! General rows are split into equalities and slacked inequalities, box
//! bounds enter through a logarithmic barrier with primal-dual Hessian
//! terms, and search directions come from an inertia-corrected symmetric
//! indefinite KKT factorization. A filter line search with second-order
//! corrections globalizes the Newton iteration; a least-squares feasibility
//! phase serves as the fallback when the line search stalls.
//!
//! KKT unknowns are interleaved along the problem's natural variable order
//! (constraint rows and slacks are placed next to the last regular variable
//! they reference, with high-degree "border" columns pushed to the end), so
//! collocation-structured problems factor with near-banded fill.

use std::time::Instant;

use super::linalg::{LdlFactor, Slot, SymCsc, SymCscBuilder, SymbolicLdl};
use super::{Multipliers, NlpProblem, NlpResult, NlpSolveOptions, NlpStatus};

const BOUND_PUSH: f64 = 1e-2;
const S_MAX: f64 = 100.0;
const KAPPA_EPS: f64 = 10.0;
const KAPPA_MU: f64 = 0.2;
const THETA_MU: f64 = 1.5;
const TAU_MIN: f64 = 0.99;
const GAMMA_THETA: f64 = 1e-5;
const GAMMA_PHI: f64 = 1e-5;
const S_THETA: f64 = 1.1;
const S_PHI: f64 = 2.3;
const DELTA_SWITCH: f64 = 1.0;
const ETA_PHI: f64 = 1e-8;
const KAPPA_SOC: f64 = 0.99;
const MAX_SOC: usize = 4;
const KAPPA_SIGMA: f64 = 1e10;
const ALPHA_MIN: f64 = 1e-10;
const DELTA_W_INIT: f64 = 1e-4;
const DELTA_W_MAX: f64 = 1e40;

#[derive(Debug, Clone)]
struct PointEval {
    f: f64,
    c_raw: Vec<f64>,
    resid: Vec<f64>,
    theta: f64,
    feas_inf: f64,
    phi: f64,
    finite: bool,
}

struct Solver<'a> {
    p: &'a dyn NlpProblem,
    // variable reduction (fixed bounds eliminated)
    full_n: usize,
    red_to_full: Vec<usize>,
    n: usize,
    m: usize,
    n_slack: usize,
    nw: usize,
    eq_target: Vec<f64>,
    slack_of_row: Vec<Option<usize>>,
    row_of_slack: Vec<usize>,
    wl: Vec<f64>,
    wu: Vec<f64>,
    // retained derivative entries (columns on free variables only)
    jac_src: Vec<usize>,
    jac_row: Vec<usize>,
    jac_col: Vec<usize>,
    hess_src: Vec<usize>,
    // KKT structure
    kkt: SymCsc,
    sym: SymbolicLdl,
    pos_w: Vec<usize>,
    pos_l: Vec<usize>,
    slots_hess: Vec<Slot>,
    slots_sigma: Vec<Slot>,
    slots_jac: Vec<Slot>,
    slots_slack: Vec<Slot>,
    slots_dual: Vec<Slot>,
    // evaluation buffers
    x_full: Vec<f64>,
    grad_full: Vec<f64>,
    jac_vals: Vec<f64>,
    hess_vals: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn new(p: &'a dyn NlpProblem) -> Self {
        let full_n = p.num_vars();
        let m = p.num_constraints();
        let (xl, xu) = p.var_bounds();
        let mut red_to_full = Vec::new();
        let mut full_to_red = vec![None; full_n];
        for i in 0..full_n {
            if xl[i] < xu[i] {
                full_to_red[i] = Some(red_to_full.len());
                red_to_full.push(i);
            }
        }
        let n = red_to_full.len();

        let (cl, cu) = p.constraint_bounds();
        let mut eq_target = vec![f64::NAN; m];
        let mut slack_of_row = vec![None; m];
        let mut row_of_slack = Vec::new();
        for r in 0..m {
            if cl[r] >= cu[r] {
                eq_target[r] = cl[r];
            } else {
                slack_of_row[r] = Some(row_of_slack.len());
                row_of_slack.push(r);
            }
        }
        let n_slack = row_of_slack.len();
        let nw = n + n_slack;

        let mut wl = vec![f64::NEG_INFINITY; nw];
        let mut wu = vec![f64::INFINITY; nw];
        for (i, &fi) in red_to_full.iter().enumerate() {
            wl[i] = xl[fi];
            wu[i] = xu[fi];
        }
        for (k, &r) in row_of_slack.iter().enumerate() {
            wl[n + k] = cl[r];
            wu[n + k] = cu[r];
        }

        // Retain Jacobian/Hessian entries on free variables.
        let jp = p.jacobian_pattern();
        let mut jac_src = Vec::new();
        let mut jac_row = Vec::new();
        let mut jac_col = Vec::new();
        for (k, &(r, c)) in jp.entries.iter().enumerate() {
            if let Some(rc) = full_to_red[c] {
                jac_src.push(k);
                jac_row.push(r);
                jac_col.push(rc);
            }
        }
        let hp = p.hessian_pattern();
        let mut hess_src = Vec::new();
        let mut hess_red = Vec::new();
        for (k, &(i, j)) in hp.entries.iter().enumerate() {
            if let (Some(ri), Some(rj)) = (full_to_red[i], full_to_red[j]) {
                hess_src.push(k);
                hess_red.push((ri, rj));
            }
        }

        // Border detection: columns touched by a large share of the rows
        // would destroy the banded fill if eliminated in place.
        let mut col_deg = vec![0usize; n];
        for &c in &jac_col {
            col_deg[c] += 1;
        }
        let avg_row_nnz = if m > 0 { jac_src.len() / m.max(1) } else { 0 };
        let dense_cut = (8 * avg_row_nnz.max(1)).max(64);
        let mut rank_x = vec![0usize; n];
        let mut next = 0usize;
        for i in 0..n {
            if col_deg[i] <= dense_cut {
                rank_x[i] = next;
                next += 1;
            }
        }
        for i in 0..n {
            if col_deg[i] > dense_cut {
                rank_x[i] = next;
                next += 1;
            }
        }
        let end_rank = next;

        // Anchor each row at the highest-ranked regular column it touches.
        let mut anchor = vec![end_rank; m];
        for (k, &r) in jac_row.iter().enumerate() {
            let c = jac_col[k];
            if col_deg[c] <= dense_cut {
                let rk = rank_x[c];
                if anchor[r] == end_rank || rk > anchor[r] {
                    anchor[r] = if anchor[r] == end_rank {
                        rk
                    } else {
                        anchor[r].max(rk)
                    };
                }
            }
        }

        // KKT unknown order: variables, then per-anchor slacks and duals.
        let total = nw + m;
        let mut keys: Vec<(usize, usize, usize)> = Vec::with_capacity(total);
        for i in 0..n {
            keys.push((4 * rank_x[i], 0, i));
        }
        for (k, &r) in row_of_slack.iter().enumerate() {
            keys.push((4 * anchor[r] + 1, 1, n + k));
        }
        for r in 0..m {
            keys.push((4 * anchor[r] + 2, 2, nw + r));
        }
        keys.sort();
        let mut pos = vec![0usize; total];
        for (slot, &(_, _, id)) in keys.iter().enumerate() {
            pos[id] = slot;
        }
        let pos_w = pos[..nw].to_vec();
        let pos_l = pos[nw..].to_vec();

        // KKT pattern.
        let mut builder = SymCscBuilder::new(total);
        let mut slots_hess = Vec::with_capacity(hess_red.len());
        for &(ri, rj) in &hess_red {
            slots_hess.push(builder.add(pos_w[ri], pos_w[rj]));
        }
        let mut slots_sigma = Vec::with_capacity(nw);
        for i in 0..nw {
            slots_sigma.push(builder.add(pos_w[i], pos_w[i]));
        }
        let mut slots_jac = Vec::with_capacity(jac_src.len());
        for k in 0..jac_src.len() {
            slots_jac.push(builder.add(pos_l[jac_row[k]], pos_w[jac_col[k]]));
        }
        let mut slots_slack = Vec::with_capacity(n_slack);
        for (k, &r) in row_of_slack.iter().enumerate() {
            slots_slack.push(builder.add(pos_l[r], pos_w[n + k]));
        }
        let mut slots_dual = Vec::with_capacity(m);
        for r in 0..m {
            slots_dual.push(builder.add(pos_l[r], pos_l[r]));
        }
        let kkt = builder.finish();
        let sym = SymbolicLdl::analyze(&kkt);

        Solver {
            p,
            full_n,
            red_to_full,
            n,
            m,
            n_slack,
            nw,
            eq_target,
            slack_of_row,
            row_of_slack,
            wl,
            wu,
            jac_src,
            jac_row,
            jac_col,
            hess_src,
            kkt,
            sym,
            pos_w,
            pos_l,
            slots_hess,
            slots_sigma,
            slots_jac,
            slots_slack,
            slots_dual,
            x_full: vec![0.0; full_n],
            grad_full: vec![0.0; full_n],
            jac_vals: vec![0.0; p.jacobian_pattern().len()],
            hess_vals: vec![0.0; p.hessian_pattern().len()],
        }
    }

    fn set_x(&mut self, w: &[f64]) {
        for (i, &fi) in self.red_to_full.iter().enumerate() {
            self.x_full[fi] = w[i];
        }
    }

    /// Fixed variables keep their bound value in `x_full` for all callbacks.
    fn init_fixed(&mut self) {
        let (xl, xu) = self.p.var_bounds();
        for i in 0..self.full_n {
            if !(xl[i] < xu[i]) {
                self.x_full[i] = xl[i];
            }
        }
    }

    fn eval(&mut self, w: &[f64], mu: f64) -> PointEval {
        self.set_x(w);
        let f = self.p.objective(&self.x_full);
        let mut c_raw = vec![0.0; self.m];
        self.p.constraints(&self.x_full, &mut c_raw);
        let mut resid = vec![0.0; self.m];
        let mut theta = 0.0f64;
        let mut feas_inf = 0.0f64;
        let mut finite = f.is_finite();
        for r in 0..self.m {
            let v = match self.slack_of_row[r] {
                None => c_raw[r] - self.eq_target[r],
                Some(k) => c_raw[r] - w[self.n + k],
            };
            finite &= v.is_finite();
            resid[r] = v;
            theta += v.abs();
            feas_inf = feas_inf.max(v.abs());
        }
        let mut phi = f;
        for i in 0..self.nw {
            if self.wl[i].is_finite() {
                let d = w[i] - self.wl[i];
                if d <= 0.0 {
                    finite = false;
                } else {
                    phi -= mu * d.ln();
                }
            }
            if self.wu[i].is_finite() {
                let d = self.wu[i] - w[i];
                if d <= 0.0 {
                    finite = false;
                } else {
                    phi -= mu * d.ln();
                }
            }
        }
        PointEval {
            f,
            c_raw,
            resid,
            theta,
            feas_inf,
            phi: if finite { phi } else { f64::INFINITY },
            finite,
        }
    }

    fn derivatives(&mut self, w: &[f64], lambda: &[f64], with_hessian: bool) {
        self.set_x(w);
        self.p.gradient(&self.x_full, &mut self.grad_full);
        self.p.jacobian_values(&self.x_full, &mut self.jac_vals);
        if with_hessian {
            self.p
                .hessian_values(&self.x_full, 1.0, lambda, &mut self.hess_vals);
        }
    }

    /// Objective gradient in w-space (zero on slacks).
    fn grad_w(&self, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &fi) in self.red_to_full.iter().enumerate() {
            out[i] = self.grad_full[fi];
        }
    }

    /// J^T lambda in w-space.
    fn jt_lambda(&self, lambda: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..self.jac_src.len() {
            out[self.jac_col[k]] += self.jac_vals[self.jac_src[k]] * lambda[self.jac_row[k]];
        }
        for (k, &r) in self.row_of_slack.iter().enumerate() {
            out[self.n + k] -= lambda[r];
        }
    }

    /// Scaled KKT error at barrier parameter `mu`.
    #[allow(clippy::too_many_arguments)]
    fn kkt_error(
        &self,
        w: &[f64],
        lambda: &[f64],
        zl: &[f64],
        zu: &[f64],
        eval: &PointEval,
        jtl: &[f64],
        gw: &[f64],
        mu: f64,
    ) -> f64 {
        let mut dual_inf = 0.0f64;
        let mut compl = 0.0f64;
        let mut z1 = 0.0f64;
        let mut nz = 0usize;
        for i in 0..self.nw {
            let mut d = gw[i] + jtl[i];
            if self.wl[i].is_finite() {
                d -= zl[i];
                compl = compl.max(((w[i] - self.wl[i]) * zl[i] - mu).abs());
                z1 += zl[i].abs();
                nz += 1;
            }
            if self.wu[i].is_finite() {
                d += zu[i];
                compl = compl.max(((self.wu[i] - w[i]) * zu[i] - mu).abs());
                z1 += zu[i].abs();
                nz += 1;
            }
            dual_inf = dual_inf.max(d.abs());
        }
        let lam1: f64 = lambda.iter().map(|v| v.abs()).sum();
        let s_d = ((lam1 + z1) / (self.m + nz).max(1) as f64).max(S_MAX) / S_MAX;
        let s_c = (z1 / nz.max(1) as f64).max(S_MAX) / S_MAX;
        (dual_inf / s_d).max(eval.feas_inf).max(compl / s_c)
    }

    /// Fill KKT values for the current derivatives and barrier state.
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        &mut self,
        w: &[f64],
        zl: &[f64],
        zu: &[f64],
        delta_w: f64,
        delta_c: f64,
        with_hessian: bool,
    ) {
        self.kkt.clear_values();
        if with_hessian {
            for (slot_idx, &src) in self.hess_src.iter().enumerate() {
                let slot = self.slots_hess[slot_idx];
                self.kkt.add_value(slot, self.hess_vals[src]);
            }
        }
        for i in 0..self.nw {
            let mut sigma = delta_w;
            if self.wl[i].is_finite() {
                sigma += zl[i] / (w[i] - self.wl[i]);
            }
            if self.wu[i].is_finite() {
                sigma += zu[i] / (self.wu[i] - w[i]);
            }
            self.kkt.add_value(self.slots_sigma[i], sigma);
        }
        for (k, &src) in self.jac_src.iter().enumerate() {
            self.kkt.add_value(self.slots_jac[k], self.jac_vals[src]);
        }
        for k in 0..self.n_slack {
            self.kkt.add_value(self.slots_slack[k], -1.0);
        }
        for r in 0..self.m {
            self.kkt.add_value(self.slots_dual[r], -delta_c);
        }
    }

    /// Solve the assembled KKT system for the packed rhs (w-part, lambda-part).
    fn kkt_solve(&self, factor: &LdlFactor, rhs_w: &[f64], rhs_l: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let total = self.nw + self.m;
        let mut b = vec![0.0; total];
        for i in 0..self.nw {
            b[self.pos_w[i]] = rhs_w[i];
        }
        for r in 0..self.m {
            b[self.pos_l[r]] = rhs_l[r];
        }
        let mut sol = vec![0.0; total];
        factor.solve_refined(&self.kkt, &b, &mut sol, 2);
        let dw = (0..self.nw).map(|i| sol[self.pos_w[i]]).collect();
        let dl = (0..self.m).map(|r| sol[self.pos_l[r]]).collect();
        (dw, dl)
    }

    fn fraction_to_boundary(&self, w: &[f64], dw: &[f64], tau: f64) -> f64 {
        let mut alpha: f64 = 1.0;
        for i in 0..self.nw {
            if dw[i] < 0.0 && self.wl[i].is_finite() {
                alpha = alpha.min(-tau * (w[i] - self.wl[i]) / dw[i]);
            }
            if dw[i] > 0.0 && self.wu[i].is_finite() {
                alpha = alpha.min(tau * (self.wu[i] - w[i]) / dw[i]);
            }
        }
        alpha
    }
}

fn z_fraction(z: &[f64], dz: &[f64], tau: f64, active: impl Fn(usize) -> bool) -> f64 {
    let mut alpha: f64 = 1.0;
    for i in 0..z.len() {
        if active(i) && dz[i] < 0.0 && z[i] > 0.0 {
            alpha = alpha.min(-tau * z[i] / dz[i]);
        }
    }
    alpha
}

fn filter_accepts(filter: &[(f64, f64)], theta: f64, phi: f64) -> bool {
    filter
        .iter()
        .all(|&(tf, pf)| theta <= (1.0 - GAMMA_THETA) * tf || phi <= pf - GAMMA_PHI * tf)
}

pub(super) fn solve(problem: &dyn NlpProblem, options: &NlpSolveOptions) -> NlpResult {
    let start = Instant::now();
    let mut s = Solver::new(problem);
    s.init_fixed();
    let tol = options.tolerance;

    let finish = |status: NlpStatus,
                  s: &mut Solver,
                  w: &[f64],
                  lambda: &[f64],
                  zl: &[f64],
                  zu: &[f64],
                  eval: &PointEval,
                  iter: usize| {
        s.set_x(w);
        let mut lower = vec![0.0; s.full_n];
        let mut upper = vec![0.0; s.full_n];
        for (i, &fi) in s.red_to_full.iter().enumerate() {
            lower[fi] = zl[i];
            upper[fi] = zu[i];
        }
        NlpResult {
            status,
            x: s.x_full.clone(),
            objective: eval.f,
            constraint_violation: eval.feas_inf,
            multipliers: Some(Multipliers {
                constraints: lambda.to_vec(),
                lower,
                upper,
            }),
            iterations: iter,
            wall_time: start.elapsed(),
        }
    };

    // Initial primal point: project strictly inside the bounds.
    let x0 = problem.initial_point();
    let mut w = vec![0.0; s.nw];
    for (i, &fi) in s.red_to_full.iter().enumerate() {
        w[i] = x0[fi];
    }
    {
        // Slacks start at the constraint values.
        s.set_x(&w);
        let mut c0 = vec![0.0; s.m];
        problem.constraints(&s.x_full, &mut c0);
        for (k, &r) in s.row_of_slack.iter().enumerate() {
            w[s.n + k] = c0[r];
        }
    }
    for i in 0..s.nw {
        let (l, u) = (s.wl[i], s.wu[i]);
        if !w[i].is_finite() {
            w[i] = 0.0;
        }
        if l.is_finite() && u.is_finite() {
            let push = (BOUND_PUSH * (u - l)).min(BOUND_PUSH * l.abs().max(1.0));
            w[i] = w[i].clamp(l + push, u - push.min(BOUND_PUSH * u.abs().max(1.0)));
        } else if l.is_finite() {
            w[i] = w[i].max(l + BOUND_PUSH * l.abs().max(1.0));
        } else if u.is_finite() {
            w[i] = w[i].min(u - BOUND_PUSH * u.abs().max(1.0));
        }
    }

    let mut mu: f64 = if options.warm_start { 1e-3 } else { 0.1 };
    let mut tau = (1.0 - mu).max(TAU_MIN);
    let mut lambda = vec![0.0; s.m];
    let mut zl = vec![0.0; s.nw];
    let mut zu = vec![0.0; s.nw];
    for i in 0..s.nw {
        if s.wl[i].is_finite() {
            zl[i] = (mu / (w[i] - s.wl[i])).clamp(1e-8, 1e8);
        }
        if s.wu[i].is_finite() {
            zu[i] = (mu / (s.wu[i] - w[i])).clamp(1e-8, 1e8);
        }
    }

    let mut eval = s.eval(&w, mu);
    if !eval.finite {
        log::warn!(target: "spoc::nlp", "initial point evaluates non-finite");
        return finish(NlpStatus::Failed, &mut s, &w, &lambda, &zl, &zu, &eval, 0);
    }

    let mut filter: Vec<(f64, f64)> = Vec::new();
    let mut theta_max = 1e4 * eval.theta.max(1.0);
    let theta_min_switch = 1e-4 * eval.theta.max(1.0);

    let mut gw = vec![0.0; s.nw];
    let mut jtl = vec![0.0; s.nw];
    let mut last_delta_w = 0.0f64;
    let mut iter = 0usize;

    loop {
        s.derivatives(&w, &lambda, true);
        s.grad_w(&mut gw);
        s.jt_lambda(&lambda, &mut jtl);

        let e0 = s.kkt_error(&w, &lambda, &zl, &zu, &eval, &jtl, &gw, 0.0);
        if e0 <= tol {
            log::debug!(target: "spoc::nlp", "converged: E0 {:.2e} after {} iterations", e0, iter);
            return finish(NlpStatus::Optimal, &mut s, &w, &lambda, &zl, &zu, &eval, iter);
        }
        if iter >= options.max_iterations {
            return finish(
                NlpStatus::MaxIterations,
                &mut s,
                &w,
                &lambda,
                &zl,
                &zu,
                &eval,
                iter,
            );
        }

        // Barrier update: tighten mu whenever the barrier problem is solved
        // to within a factor of its own parameter.
        loop {
            let emu = s.kkt_error(&w, &lambda, &zl, &zu, &eval, &jtl, &gw, mu);
            if emu > KAPPA_EPS * mu || mu <= tol / 10.0 {
                break;
            }
            mu = (KAPPA_MU * mu).min(mu.powf(THETA_MU)).max(tol / 10.0);
            tau = (1.0 - mu).max(TAU_MIN);
            filter.clear();
            theta_max = 1e4 * eval.theta.max(1.0);
            eval.phi = s.eval(&w, mu).phi;
        }

        // Newton direction with inertia correction.
        let delta_c = 1e-8 * mu.max(1e-20).powf(0.25);
        let mut delta_w = 0.0f64;
        let mut tried_bump = false;
        let factor = loop {
            s.assemble(&w, &zl, &zu, delta_w, delta_c, true);
            let attempt = LdlFactor::factor(&s.kkt, &s.sym);
            let ok = match &attempt {
                Ok(f) => {
                    let (pos, neg, zero) = f.inertia();
                    pos == s.nw && neg == s.m && zero == 0
                }
                Err(_) => false,
            };
            if ok {
                break attempt.ok();
            }
            delta_w = if delta_w == 0.0 {
                if last_delta_w == 0.0 {
                    DELTA_W_INIT
                } else {
                    (last_delta_w / 3.0).max(1e-20)
                }
            } else {
                delta_w * 8.0
            };
            tried_bump = true;
            if delta_w > DELTA_W_MAX {
                break None;
            }
        };
        let factor = match factor {
            Some(f) => f,
            None => {
                log::warn!(target: "spoc::nlp", "KKT inertia correction failed");
                return finish(NlpStatus::Failed, &mut s, &w, &lambda, &zl, &zu, &eval, iter);
            }
        };
        if tried_bump && delta_w > 0.0 {
            last_delta_w = delta_w;
        }

        // Right-hand side of the primal-dual system.
        let mut rhs_w = vec![0.0; s.nw];
        for i in 0..s.nw {
            let mut g = gw[i] + jtl[i];
            if s.wl[i].is_finite() {
                g -= mu / (w[i] - s.wl[i]);
            }
            if s.wu[i].is_finite() {
                g += mu / (s.wu[i] - w[i]);
            }
            rhs_w[i] = -g;
        }
        let rhs_l: Vec<f64> = eval.resid.iter().map(|v| -v).collect();
        let (dw, dl) = s.kkt_solve(&factor, &rhs_w, &rhs_l);

        // Barrier gradient along the step, for the switching rule.
        let mut gphi_d = 0.0;
        for i in 0..s.nw {
            let mut g = gw[i];
            if s.wl[i].is_finite() {
                g -= mu / (w[i] - s.wl[i]);
            }
            if s.wu[i].is_finite() {
                g += mu / (s.wu[i] - w[i]);
            }
            gphi_d += g * dw[i];
        }

        let alpha_max = s.fraction_to_boundary(&w, &dw, tau);
        let mut alpha = alpha_max;
        let mut accepted: Option<(Vec<f64>, Vec<f64>, PointEval, bool, f64)> = None;
        let mut soc_attempted = false;
        let mut first_trial = true;
        while accepted.is_none() {
            let trial: Vec<f64> = w.iter().zip(&dw).map(|(wi, di)| wi + alpha * di).collect();
            let tev = s.eval(&trial, mu);
            if tev.finite {
                let f_type = gphi_d < 0.0
                    && alpha * (-gphi_d).powf(S_PHI) > DELTA_SWITCH * eval.theta.powf(S_THETA);
                let in_filter = tev.theta <= theta_max && filter_accepts(&filter, tev.theta, tev.phi);
                let (ok, augment) = if eval.theta <= theta_min_switch && f_type {
                    (
                        in_filter && tev.phi <= eval.phi + ETA_PHI * alpha * gphi_d,
                        false,
                    )
                } else {
                    let suff = tev.theta <= (1.0 - GAMMA_THETA) * eval.theta
                        || tev.phi <= eval.phi - GAMMA_PHI * eval.theta;
                    (in_filter && suff, true)
                };
                if ok {
                    accepted = Some((trial, dl.clone(), tev, augment, alpha));
                    break;
                }
                // Second-order correction when the full step increased the
                // constraint violation.
                if first_trial && !soc_attempted && tev.theta >= eval.theta && s.m > 0 {
                    soc_attempted = true;
                    let mut c_soc: Vec<f64> = eval
                        .resid
                        .iter()
                        .zip(&tev.resid)
                        .map(|(c0, ct)| alpha * c0 + ct)
                        .collect();
                    let mut theta_old = tev.theta;
                    let mut done = false;
                    for _ in 0..MAX_SOC {
                        let rhs_soc: Vec<f64> = c_soc.iter().map(|v| -v).collect();
                        let (dws, dls) = s.kkt_solve(&factor, &rhs_w, &rhs_soc);
                        let a_soc = s.fraction_to_boundary(&w, &dws, tau);
                        let t_soc: Vec<f64> =
                            w.iter().zip(&dws).map(|(wi, di)| wi + a_soc * di).collect();
                        let ev_soc = s.eval(&t_soc, mu);
                        if !ev_soc.finite {
                            break;
                        }
                        let mut gphi_ds = 0.0;
                        for i in 0..s.nw {
                            let mut g = gw[i];
                            if s.wl[i].is_finite() {
                                g -= mu / (w[i] - s.wl[i]);
                            }
                            if s.wu[i].is_finite() {
                                g += mu / (s.wu[i] - w[i]);
                            }
                            gphi_ds += g * dws[i];
                        }
                        let f_type_s = gphi_ds < 0.0
                            && a_soc * (-gphi_ds).powf(S_PHI)
                                > DELTA_SWITCH * eval.theta.powf(S_THETA);
                        let in_f =
                            ev_soc.theta <= theta_max && filter_accepts(&filter, ev_soc.theta, ev_soc.phi);
                        let (ok_s, augment_s) = if eval.theta <= theta_min_switch && f_type_s {
                            (
                                in_f && ev_soc.phi <= eval.phi + ETA_PHI * a_soc * gphi_ds,
                                false,
                            )
                        } else {
                            let suff = ev_soc.theta <= (1.0 - GAMMA_THETA) * eval.theta
                                || ev_soc.phi <= eval.phi - GAMMA_PHI * eval.theta;
                            (in_f && suff, true)
                        };
                        if ok_s {
                            accepted = Some((t_soc, dls, ev_soc, augment_s, a_soc));
                            done = true;
                            break;
                        }
                        if ev_soc.theta > KAPPA_SOC * theta_old {
                            break;
                        }
                        theta_old = ev_soc.theta;
                        c_soc = c_soc
                            .iter()
                            .zip(&ev_soc.resid)
                            .map(|(cs, cn)| a_soc * cs + cn)
                            .collect();
                    }
                    if done {
                        break;
                    }
                }
            }
            first_trial = false;
            alpha *= 0.5;
            if alpha < ALPHA_MIN {
                break;
            }
        }

        match accepted {
            Some((w_new, dl_used, ev_new, augment, alpha_used)) => {
                if augment {
                    filter.push((
                        (1.0 - GAMMA_THETA) * eval.theta,
                        eval.phi - GAMMA_PHI * eval.theta,
                    ));
                }
                // Bound-dual step from the primal step actually taken.
                let step: Vec<f64> = w_new.iter().zip(&w).map(|(a, b)| a - b).collect();
                let mut dzl = vec![0.0; s.nw];
                let mut dzu = vec![0.0; s.nw];
                for i in 0..s.nw {
                    if s.wl[i].is_finite() {
                        let d = w[i] - s.wl[i];
                        dzl[i] = mu / d - zl[i] - zl[i] / d * step[i];
                    }
                    if s.wu[i].is_finite() {
                        let d = s.wu[i] - w[i];
                        dzu[i] = mu / d - zu[i] + zu[i] / d * step[i];
                    }
                }
                let azl = z_fraction(&zl, &dzl, tau, |i| s.wl[i].is_finite());
                let azu = z_fraction(&zu, &dzu, tau, |i| s.wu[i].is_finite());
                let az = azl.min(azu);
                for i in 0..s.nw {
                    zl[i] += az * dzl[i];
                    zu[i] += az * dzu[i];
                }
                for r in 0..s.m {
                    lambda[r] += alpha_used * dl_used[r];
                }
                w = w_new;
                // Keep bound duals within a factor of their primal estimate.
                for i in 0..s.nw {
                    if s.wl[i].is_finite() {
                        let d = (w[i] - s.wl[i]).max(1e-300);
                        zl[i] = zl[i].clamp(mu / (KAPPA_SIGMA * d), KAPPA_SIGMA * mu / d);
                    }
                    if s.wu[i].is_finite() {
                        let d = (s.wu[i] - w[i]).max(1e-300);
                        zu[i] = zu[i].clamp(mu / (KAPPA_SIGMA * d), KAPPA_SIGMA * mu / d);
                    }
                }
                eval = ev_new;
            }
            None => {
                // Line search failed: fall back to a feasibility phase.
                log::debug!(
                    target: "spoc::nlp",
                    "iter {}: line search stalled (theta {:.2e}), entering restoration",
                    iter,
                    eval.theta
                );
                match restoration(&mut s, &mut w, &zl, &zu, mu, tau, &mut eval) {
                    RestorationOutcome::Progress => {
                        lambda.iter_mut().for_each(|v| *v = 0.0);
                        filter.clear();
                        theta_max = 1e4 * eval.theta.max(1.0);
                    }
                    RestorationOutcome::Infeasible => {
                        return finish(
                            NlpStatus::Infeasible,
                            &mut s,
                            &w,
                            &lambda,
                            &zl,
                            &zu,
                            &eval,
                            iter,
                        );
                    }
                    RestorationOutcome::Stuck => {
                        return finish(
                            NlpStatus::Failed,
                            &mut s,
                            &w,
                            &lambda,
                            &zl,
                            &zu,
                            &eval,
                            iter,
                        );
                    }
                }
            }
        }

        iter += 1;
        if options.print_level >= 1 {
            log::info!(
                target: "spoc::nlp",
                "it {:4}  mu {:8.2e}  f {:14.7e}  theta {:9.3e}  alpha {:8.2e}  dw {:8.2e}",
                iter,
                mu,
                eval.f,
                eval.theta,
                alpha,
                delta_w
            );
        }
    }
}

enum RestorationOutcome {
    Progress,
    Infeasible,
    Stuck,
}

/// Levenberg-style least-squares phase on the constraint residuals, reusing
/// the KKT machinery with a zeroed Hessian block. Succeeds once the
/// violation has been reduced enough to re-enter the main loop.
fn restoration(
    s: &mut Solver,
    w: &mut Vec<f64>,
    zl: &[f64],
    zu: &[f64],
    mu: f64,
    tau: f64,
    eval: &mut PointEval,
) -> RestorationOutcome {
    let theta_enter = eval.theta;
    if theta_enter <= 0.0 {
        return RestorationOutcome::Stuck;
    }
    let target = 0.1 * theta_enter;
    let mut delta = mu.max(1e-8);
    let mut made_progress = false;
    for _ in 0..40 {
        if eval.theta <= target {
            return RestorationOutcome::Progress;
        }
        s.derivatives(w, &vec![0.0; s.m], false);
        s.assemble(w, zl, zu, delta, 1e-8, false);
        let factor = match LdlFactor::factor(&s.kkt, &s.sym) {
            Ok(f) => f,
            Err(_) => {
                delta *= 10.0;
                continue;
            }
        };
        let rhs_w = vec![0.0; s.nw];
        let rhs_l: Vec<f64> = eval.resid.iter().map(|v| -v).collect();
        let (dw, _) = s.kkt_solve(&factor, &rhs_w, &rhs_l);
        let mut alpha = s.fraction_to_boundary(w, &dw, tau);
        let mut stepped = false;
        for _ in 0..30 {
            let trial: Vec<f64> = w.iter().zip(&dw).map(|(a, b)| a + alpha * b).collect();
            let tev = s.eval(&trial, mu);
            if tev.finite && tev.theta <= (1.0 - 1e-4 * alpha) * eval.theta {
                *w = trial;
                *eval = tev;
                stepped = true;
                made_progress = true;
                break;
            }
            alpha *= 0.5;
            if alpha < ALPHA_MIN {
                break;
            }
        }
        if !stepped {
            delta *= 10.0;
            if delta > 1e12 {
                break;
            }
        } else {
            delta = (delta / 3.0).max(1e-8);
        }
    }
    if eval.theta <= 0.5 * theta_enter {
        return RestorationOutcome::Progress;
    }
    if made_progress {
        RestorationOutcome::Stuck
    } else {
        RestorationOutcome::Infeasible
    }
}
