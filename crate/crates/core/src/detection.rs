//! Detection of state-path-constraint activation structure.
//!
//! On a solved trajectory, each state-only constraint is sampled at every
//! collocation point plus the final support point. Samples whose relative
//! difference to the bound falls below the constraint's detection tolerance
//! are marked active; maximal runs of active samples form arcs, isolated
//! actives form touch points, and each detected switch time receives a
//! search window derived from the neighboring sample spacing. Detected arcs
//! drive the decomposition of the horizon into constrained and unconstrained
//! domains.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ocp::{ActiveTag, ConstraintKind, OcpDefinition, TrajectorySolution};
use crate::transcription::{DomainLayout, DomainSpec, MeshSpec, TimeVar};

#[derive(Debug, Error, PartialEq)]
pub enum DetectionError {
    #[error("bound width parameter must be positive, got {0}")]
    InvalidParameter(f64),
    #[error("arcs of constraints '{0}' and '{1}' overlap in time; simultaneous state-constraint activity is unsupported")]
    UnsupportedStructure(String, String),
}

/// Which side of a constraint bound an arc rides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundSide {
    Lower,
    Upper,
}

/// A detected activation or deactivation instant with its search window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchPoint {
    pub time: f64,
    pub window: (f64, f64),
}

/// One contiguous span of constraint activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub constraint: usize,
    pub side: BoundSide,
    pub entry: SwitchPoint,
    pub exit: SwitchPoint,
    /// Activity at a single sample; logged but not decomposed.
    pub touch_point: bool,
    /// The arc coincides with an existing constrained domain.
    pub already_constrained: bool,
}

/// Optimized arc times as they stand after an NLP solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedArc {
    pub constraint: usize,
    pub side: BoundSide,
    pub entry: f64,
    pub exit: f64,
}

/// Snapshot of one mesh iteration: the optimized constrained-domain times
/// and the mesh error of the solve that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationSnapshot {
    pub iteration: usize,
    pub arcs: Vec<OptimizedArc>,
    pub max_mesh_error: f64,
}

/// Detected/optimized activation structure, with per-iteration history.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ArcReport {
    pub constraint_names: Vec<String>,
    /// Arcs detected on the most recent solution, time-ordered.
    pub arcs: Vec<Arc>,
    pub iterations: Vec<IterationSnapshot>,
}

/// Relative difference of constraint samples against a bound value:
/// `|s - bound| / (1 + |bound|)` elementwise.
pub fn relative_difference(samples: &[f64], bound: f64) -> Vec<f64> {
    let denom = 1.0 + bound.abs();
    samples.iter().map(|s| (s - bound).abs() / denom).collect()
}

/// Search window around a detected switch point from its neighboring sample
/// times: `lo = t + nu (t_prev - t)`, `hi = t + nu (t_next - t)`. A missing
/// neighbor clamps that side to the point itself (horizon boundary).
pub fn bound_switch_times(
    prev: Option<f64>,
    at: f64,
    next: Option<f64>,
    nu: f64,
) -> Result<(f64, f64), DetectionError> {
    if !(nu > 0.0) {
        return Err(DetectionError::InvalidParameter(nu));
    }
    let lo = match prev {
        Some(p) => at + nu * (p - at),
        None => at,
    };
    let hi = match next {
        Some(n) => at + nu * (n - at),
        None => at,
    };
    Ok((lo, hi))
}

/// One trajectory sample relevant to detection.
struct Sample {
    time: f64,
    domain: usize,
    state: Vec<f64>,
    control: Vec<f64>,
}

fn collect_samples(solution: &TrajectorySolution) -> Vec<Sample> {
    let mut samples = Vec::new();
    for (di, dom) in solution.domains.iter().enumerate() {
        let n_c = dom.num_collocation_points();
        for j in 0..n_c {
            samples.push(Sample {
                time: dom.node_times[j],
                domain: di,
                state: dom.states[j].clone(),
                control: dom.controls[j].clone(),
            });
        }
        if di == solution.domains.len() - 1 {
            // final non-collocated support point; controls do not exist
            // there, so carry the last collocation value (state-only
            // constraints ignore it).
            samples.push(Sample {
                time: dom.node_times[n_c],
                domain: di,
                state: dom.states[n_c].clone(),
                control: dom.controls[n_c - 1].clone(),
            });
        }
    }
    samples
}

/// Detect activation arcs of every state-only constraint on a solution.
///
/// Runs of consecutive active samples form arcs; runs separated by a single
/// inactive sample are merged; single-sample runs are flagged as touch
/// points. Arcs whose extent already lies within a constrained domain of the
/// same constraint are marked `already_constrained`.
pub fn detect_arcs(solution: &TrajectorySolution, problem: &OcpDefinition) -> ArcReport {
    let samples = collect_samples(solution);
    let mut report = ArcReport {
        constraint_names: problem
            .path_constraints
            .iter()
            .map(|c| c.name.clone())
            .collect(),
        ..Default::default()
    };
    for (ci, pc) in problem.path_constraints.iter().enumerate() {
        if !pc.kind.is_state_only() {
            continue;
        }
        let values: Vec<f64> = samples
            .iter()
            .map(|s| (pc.evaluate)(&s.state, &s.control, s.time))
            .collect();
        for (side, bound) in [
            (BoundSide::Lower, pc.bound.lower),
            (BoundSide::Upper, pc.bound.upper),
        ] {
            if !bound.is_finite() {
                continue;
            }
            let delta = relative_difference(&values, bound);
            let active: Vec<bool> = delta.iter().map(|&d| d <= pc.detection_tolerance).collect();
            let runs = active_runs(&active);
            for (start, end) in runs {
                let touch = start == end;
                let entry = switch_point(&samples, start, pc.bound_width);
                let exit = switch_point(&samples, end, pc.bound_width);
                let already = is_recognized(solution, &samples, ci, side, start, end);
                report.arcs.push(Arc {
                    constraint: ci,
                    side,
                    entry,
                    exit,
                    touch_point: touch,
                    already_constrained: already,
                });
            }
        }
    }
    report
        .arcs
        .sort_by(|a, b| a.entry.time.total_cmp(&b.entry.time));
    report
}

/// Maximal runs of active samples, with single-gap merging.
fn active_runs(active: &[bool]) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (j, &a) in active.iter().enumerate() {
        match (a, start) {
            (true, None) => start = Some(j),
            (false, Some(s)) => {
                runs.push((s, j - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, active.len() - 1));
    }
    // Merge runs separated by exactly one inactive sample: solver noise at
    // the tolerance level, not genuine structure.
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for run in runs {
        if let Some(last) = merged.last_mut() {
            if run.0 == last.1 + 2 {
                last.1 = run.1;
                continue;
            }
        }
        merged.push(run);
    }
    merged
}

fn switch_point(samples: &[Sample], idx: usize, nu: f64) -> SwitchPoint {
    let at = samples[idx].time;
    let prev = idx.checked_sub(1).map(|i| samples[i].time);
    let next = samples.get(idx + 1).map(|s| s.time);
    let (lo, hi) = bound_switch_times(prev, at, next, nu).expect("validated bound width");
    SwitchPoint {
        time: at,
        window: (lo, hi),
    }
}

/// An arc is recognized when its extent stays within one constrained domain
/// of the same constraint, up to one sample spacing beyond each interface.
fn is_recognized(
    solution: &TrajectorySolution,
    samples: &[Sample],
    constraint: usize,
    side: BoundSide,
    start: usize,
    end: usize,
) -> bool {
    let tag = ActiveTag { constraint, side };
    let host = solution
        .domains
        .iter()
        .find(|d| d.active == Some(tag) && d.t_start <= samples[end].time && samples[start].time <= d.t_end);
    let host = match host {
        Some(h) => h,
        None => return false,
    };
    let spacing_in = if start > 0 {
        samples[start].time - samples[start - 1].time
    } else {
        0.0
    };
    let spacing_out = if end + 1 < samples.len() {
        samples[end + 1].time - samples[end].time
    } else {
        0.0
    };
    samples[start].time >= host.t_start - 1.5 * spacing_in
        && samples[end].time <= host.t_end + 1.5 * spacing_out
}

/// Partition the horizon according to the detected arcs.
///
/// Touch points and recognized arcs do not change the structure; if nothing
/// new was detected the previous layout is returned unchanged (preserving
/// its optimized interface times). Otherwise every non-touch arc becomes a
/// constrained domain seeded at the detected switch times with their search
/// windows, interleaved with unconstrained domains, and meshes are inherited
/// geometrically from the previous layout.
pub fn decompose(
    previous: &DomainLayout,
    report: &ArcReport,
    problem: &OcpDefinition,
) -> Result<DomainLayout, DetectionError> {
    let mut arcs: Vec<&Arc> = report
        .arcs
        .iter()
        .filter(|a| !a.touch_point)
        .collect();
    arcs.sort_by(|a, b| a.entry.time.total_cmp(&b.entry.time));
    for w in arcs.windows(2) {
        if w[1].entry.time < w[0].exit.time && w[1].constraint != w[0].constraint {
            return Err(DetectionError::UnsupportedStructure(
                problem.path_constraints[w[0].constraint].name.clone(),
                problem.path_constraints[w[1].constraint].name.clone(),
            ));
        }
    }
    if arcs.iter().all(|a| a.already_constrained)
        && arcs.len() == previous.domains.iter().filter(|d| d.active.is_some()).count()
    {
        return Ok(previous.clone());
    }

    let t0 = previous.times.first().expect("layout has times").clone();
    let tf = previous.times.last().expect("layout has times").clone();
    let horizon = (t0.value, tf.value);

    // Interface sequence: entry/exit per arc, clipped into the horizon.
    let mut times: Vec<TimeVar> = vec![t0.clone()];
    let mut domains: Vec<DomainSpec> = Vec::new();
    let mut cursor = t0.value;
    for arc in &arcs {
        let mut entry = switch_var(&arc.entry, horizon);
        let exit = switch_var(&arc.exit, horizon);
        // Keep windows of adjacent interfaces disjoint.
        if let Some(prev) = times.last() {
            if entry.bound.lower < prev.bound.upper {
                entry.bound.lower = prev.bound.upper.min(entry.value);
            }
        }
        if arc.entry.time > cursor + 1e-12 {
            domains.push(unconstrained_domain());
        } else if domains.is_empty() && arc.entry.time <= cursor + 1e-12 {
            // Arc starts at the horizon boundary: constrained domain leads.
        }
        if arc.entry.time > cursor + 1e-12 {
            times.push(entry);
        }
        domains.push(DomainSpec {
            mesh: MeshSpec::uniform(2, 4),
            active: Some(ActiveTag {
                constraint: arc.constraint,
                side: arc.side,
            }),
        });
        times.push(exit);
        cursor = arc.exit.time;
    }
    if cursor < tf.value - 1e-12 || domains.is_empty() {
        domains.push(unconstrained_domain());
        times.push(tf.clone());
    } else {
        // Arc ends exactly at the horizon: final interface is tf itself.
        let last = times.last_mut().expect("nonempty");
        *last = tf.clone();
    }

    let mut layout = DomainLayout { times, domains };
    inherit_meshes(&mut layout, previous);
    Ok(layout)
}

fn unconstrained_domain() -> DomainSpec {
    DomainSpec {
        mesh: MeshSpec::uniform(2, 4),
        active: None,
    }
}

fn switch_var(sp: &SwitchPoint, horizon: (f64, f64)) -> TimeVar {
    let lo = sp.window.0.max(horizon.0);
    let hi = sp.window.1.min(horizon.1);
    TimeVar {
        value: sp.time.clamp(lo, hi),
        bound: crate::ocp::Bound::new(lo, hi),
    }
}

/// Carry the previous layout's interval boundaries and degrees into the new
/// domains by geometric intersection, so refinement progress survives
/// decomposition.
fn inherit_meshes(layout: &mut DomainLayout, previous: &DomainLayout) {
    // Previous interval boundaries and degrees in physical time.
    let mut old_bounds: Vec<f64> = Vec::new();
    let mut old_degrees: Vec<(f64, f64, usize)> = Vec::new();
    for (d, spec) in previous.domains.iter().enumerate() {
        let (a, b) = (previous.times[d].value, previous.times[d + 1].value);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (k, w) in spec.mesh.boundaries.windows(2).enumerate() {
            let pa = mid + half * w[0];
            let pb = mid + half * w[1];
            old_bounds.push(pa);
            old_degrees.push((pa, pb, spec.mesh.degrees[k]));
        }
    }
    old_bounds.push(previous.times.last().unwrap().value);

    for (d, spec) in layout.domains.iter_mut().enumerate() {
        let (a, b) = (layout.times[d].value, layout.times[d + 1].value);
        let mut cuts: Vec<f64> = old_bounds
            .iter()
            .copied()
            .filter(|&t| t > a + 1e-9 * (b - a) && t < b - 1e-9 * (b - a))
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-9 * (b - a));
        let mut bounds_phys = Vec::with_capacity(cuts.len() + 2);
        bounds_phys.push(a);
        bounds_phys.extend(cuts);
        bounds_phys.push(b);
        // Need at least two intervals so interior structure can refine.
        if bounds_phys.len() == 2 {
            bounds_phys.insert(1, 0.5 * (a + b));
        }
        let degree_for = |ta: f64, tb: f64| -> usize {
            let mid = 0.5 * (ta + tb);
            old_degrees
                .iter()
                .find(|(pa, pb, _)| mid >= *pa && mid <= *pb)
                .map(|&(_, _, deg)| deg)
                .unwrap_or(4)
        };
        let mut boundaries = Vec::with_capacity(bounds_phys.len());
        let mut degrees = Vec::with_capacity(bounds_phys.len() - 1);
        for (i, &t) in bounds_phys.iter().enumerate() {
            boundaries.push(-1.0 + 2.0 * (t - a) / (b - a));
            if i + 1 < bounds_phys.len() {
                degrees.push(degree_for(t, bounds_phys[i + 1]));
            }
        }
        *boundaries.first_mut().unwrap() = -1.0;
        *boundaries.last_mut().unwrap() = 1.0;
        spec.mesh = MeshSpec {
            boundaries,
            degrees,
        };
    }
}

/// Render the iteration history as an aligned text table, one row per mesh
/// iteration with entry/exit columns per arc and the mesh error last.
pub fn render_table(report: &ArcReport) -> String {
    let last = match report.iterations.last() {
        Some(s) => s,
        None => return String::from("(no iterations recorded)\n"),
    };
    // Columns follow the final iteration's arcs; earlier arcs map to the
    // column whose final time span they overlap most.
    let columns: Vec<&OptimizedArc> = last.arcs.iter().collect();
    let header_1: Vec<String> = columns
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let name = report
                .constraint_names
                .get(a.constraint)
                .cloned()
                .unwrap_or_else(|| format!("c{}", a.constraint));
            format!("Active arc {}, {}", i + 1, name)
        })
        .collect();
    let mut out = String::new();
    out.push_str("M  ");
    for h in &header_1 {
        out.push_str(&format!("| {:^23} ", h));
    }
    out.push_str("| Max mesh error\n");
    out.push_str("   ");
    for _ in &columns {
        out.push_str(&format!("| {:>10} {:>11} ", "Entry (s)", "Exit (s)"));
    }
    out.push_str("|\n");
    for snap in &report.iterations {
        out.push_str(&format!("{:<3}", snap.iteration));
        for col in &columns {
            let found = snap.arcs.iter().find(|a| {
                a.constraint == col.constraint
                    && a.entry < col.exit + 1.0
                    && col.entry < a.exit + 1.0
                    && overlap(a, col)
                        >= snap
                            .arcs
                            .iter()
                            .filter(|b| b.constraint == col.constraint)
                            .map(|b| overlap(b, col))
                            .fold(0.0, f64::max)
            });
            match found {
                Some(a) => out.push_str(&format!("| {:>10.2} {:>11.2} ", a.entry, a.exit)),
                None => out.push_str(&format!("| {:>10} {:>11} ", "--", "--")),
            }
        }
        out.push_str(&format!("| {:.2e}\n", snap.max_mesh_error));
    }
    out
}

fn overlap(a: &OptimizedArc, b: &OptimizedArc) -> f64 {
    let lo = a.entry.max(b.entry);
    let hi = a.exit.min(b.exit);
    // Nonpositive spans still rank by proximity so disjoint-but-near arcs
    // map to the closest column.
    if hi >= lo {
        hi - lo
    } else {
        -(lo - hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocp::{Bound, ConstraintKind as CK, PathConstraint};
    use crate::ocp::{DomainTrajectory, ScaleSet};
    use std::sync::Arc as StdArc;

    #[test]
    fn relative_difference_at_bound_is_zero() {
        assert_eq!(relative_difference(&[12.53], 12.53), vec![0.0]);
    }

    #[test]
    fn relative_difference_matches_direct_substitution() {
        let d = relative_difference(&[0.0], 12.53);
        assert!((d[0] - 12.53 / 13.53).abs() < 1e-15);
        assert!((d[0] - 0.9261).abs() < 1e-4);
    }

    #[test]
    fn relative_difference_of_constant_offset() {
        let smax = 7.25;
        for &c in &[-3.0, -0.1, 0.0, 0.4, 11.0] {
            let d = relative_difference(&[smax + c], smax);
            assert!((d[0] - c.abs() / (1.0 + smax.abs())).abs() < 1e-15);
        }
    }

    #[test]
    fn switch_windows_follow_neighbor_spacing() {
        let (lo, hi) = bound_switch_times(Some(-0.1), 0.0, Some(0.2), 0.5).unwrap();
        assert!((lo - -0.05).abs() < 1e-15);
        assert!((hi - 0.1).abs() < 1e-15);
    }

    #[test]
    fn switch_window_with_unit_width_spans_the_gap() {
        let (lo, hi) = bound_switch_times(Some(-0.1), 0.0, Some(0.2), 1.0).unwrap();
        assert!((lo - -0.1).abs() < 1e-15);
        assert!((hi - 0.2).abs() < 1e-15);
    }

    #[test]
    fn switch_window_clamps_at_horizon_start() {
        let (lo, hi) = bound_switch_times(None, 0.0, Some(0.2), 0.5).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 0.1).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_width_is_rejected() {
        assert_eq!(
            bound_switch_times(Some(-1.0), 0.0, Some(1.0), 0.0),
            Err(DetectionError::InvalidParameter(0.0))
        );
    }

    /// Single-domain solution with `values[j]` as the first state at evenly
    /// spaced nodes.
    fn synthetic_solution(values: &[f64]) -> TrajectorySolution {
        let n = values.len() - 1; // collocation count
        let node_times: Vec<f64> = (0..values.len()).map(|j| j as f64).collect();
        TrajectorySolution {
            domains: vec![DomainTrajectory {
                t_start: 0.0,
                t_end: node_times[n],
                node_times,
                mesh_boundaries: vec![-1.0, 1.0],
                degrees: vec![n],
                states: values.iter().map(|&v| vec![v]).collect(),
                controls: (0..n).map(|_| vec![0.0]).collect(),
                active: None,
            }],
            objective: 0.0,
            arc_report: ArcReport::default(),
            mesh_error: 0.0,
            iteration_log: vec![],
        }
    }

    fn one_state_problem(eps: f64) -> OcpDefinition {
        OcpDefinition {
            n_y: 1,
            n_u: 1,
            dynamics: StdArc::new(|_y, _u, _t, out| out[0] = 0.0),
            lagrange_cost: None,
            mayer_cost: StdArc::new(|_a, _b, _c, _d| 0.0),
            path_constraints: vec![PathConstraint {
                name: "level".into(),
                kind: CK::StateOnly {
                    order: 1,
                    time_derivatives: vec![StdArc::new(|_y, u, _t| u[0])],
                },
                evaluate: StdArc::new(|y, _u, _t| y[0]),
                bound: Bound::at_most(1.0),
                detection_tolerance: eps,
                bound_width: 0.5,
                scale: 1.0,
            }],
            boundary: crate::ocp::BoundaryCondition {
                dim: 0,
                evaluate: StdArc::new(|_a, _b, _c, _d, _out| {}),
                bounds: vec![],
                scales: vec![],
            },
            state_bounds: vec![Bound::new(-5.0, 5.0)],
            control_bounds: vec![Bound::new(-5.0, 5.0)],
            t0_bound: Bound::fixed(0.0),
            tf_bound: Bound::free(),
            scaling: ScaleSet::identity(1, 1),
        }
    }

    /// Brute-force oracle: the index range where |v - bound|/(1+|bound|)
    /// stays within the tolerance.
    fn scan_active(values: &[f64], bound: f64, eps: f64) -> Vec<usize> {
        values
            .iter()
            .enumerate()
            .filter(|(_, &v)| (v - bound).abs() / (1.0 + bound.abs()) <= eps)
            .map(|(j, _)| j)
            .collect()
    }

    #[test]
    fn quiet_profile_yields_empty_report() {
        let values = vec![0.0; 31];
        let sol = synthetic_solution(&values);
        let report = detect_arcs(&sol, &one_state_problem(1e-5));
        assert!(report.arcs.is_empty());
    }

    #[test]
    fn detected_arc_matches_brute_force_scan() {
        let mut values = vec![0.0; 31];
        for v in values.iter_mut().take(21).skip(10) {
            *v = 1.0; // exactly at the bound for samples 10..=20
        }
        let sol = synthetic_solution(&values);
        let report = detect_arcs(&sol, &one_state_problem(1e-5));
        assert_eq!(report.arcs.len(), 1);
        let arc = &report.arcs[0];
        let oracle = scan_active(&values, 1.0, 1e-5);
        assert_eq!(arc.entry.time, oracle[0] as f64);
        assert_eq!(arc.exit.time, *oracle.last().unwrap() as f64);
        assert!(!arc.touch_point);
        assert!(!arc.already_constrained);
        // Window from even spacing 1.0 and nu = 0.5.
        assert!((arc.entry.window.0 - 9.5).abs() < 1e-12);
        assert!((arc.entry.window.1 - 10.5).abs() < 1e-12);
    }

    #[test]
    fn single_sample_is_a_touch_point() {
        let mut values = vec![0.0; 21];
        values[7] = 1.0;
        let sol = synthetic_solution(&values);
        let report = detect_arcs(&sol, &one_state_problem(1e-5));
        assert_eq!(report.arcs.len(), 1);
        assert!(report.arcs[0].touch_point);
    }

    #[test]
    fn one_sample_gap_merges_runs() {
        let mut values = vec![0.0; 21];
        for j in 5..=8 {
            values[j] = 1.0;
        }
        values[9] = 0.5; // noise dip
        for j in 10..=13 {
            values[j] = 1.0;
        }
        let sol = synthetic_solution(&values);
        let report = detect_arcs(&sol, &one_state_problem(1e-5));
        assert_eq!(report.arcs.len(), 1);
        assert_eq!(report.arcs[0].entry.time, 5.0);
        assert_eq!(report.arcs[0].exit.time, 13.0);
    }

    #[test]
    fn arcs_inside_constrained_domains_are_recognized() {
        let mut values = vec![0.0; 31];
        for v in values.iter_mut().take(21).skip(10) {
            *v = 1.0;
        }
        let mut sol = synthetic_solution(&values);
        // Mark the span as an existing constrained domain.
        let dom = sol.domains[0].clone();
        let mut middle = dom.clone();
        middle.t_start = 10.0;
        middle.t_end = 20.0;
        middle.active = Some(ActiveTag {
            constraint: 0,
            side: BoundSide::Upper,
        });
        let mut first = dom.clone();
        first.t_end = 10.0;
        let mut last = dom;
        last.t_start = 20.0;
        sol.domains = vec![first, middle, last];
        let report = detect_arcs(&sol, &one_state_problem(1e-5));
        assert_eq!(report.arcs.len(), 1);
        assert!(report.arcs[0].already_constrained);
    }

    #[test]
    fn no_arcs_leaves_layout_unchanged() {
        let layout = DomainLayout::single_domain(
            TimeVar {
                value: 0.0,
                bound: Bound::fixed(0.0),
            },
            TimeVar {
                value: 30.0,
                bound: Bound::new(10.0, 100.0),
            },
            6,
            4,
        );
        let report = ArcReport::default();
        let out = decompose(&layout, &report, &one_state_problem(1e-5)).unwrap();
        assert_eq!(out.domains.len(), 1);
        assert_eq!(out.times.len(), 2);
        assert_eq!(out.domains[0].mesh.degrees, layout.domains[0].mesh.degrees);
    }

    #[test]
    fn interior_arc_splits_into_three_domains() {
        let layout = DomainLayout::single_domain(
            TimeVar {
                value: 0.0,
                bound: Bound::fixed(0.0),
            },
            TimeVar {
                value: 30.0,
                bound: Bound::new(10.0, 100.0),
            },
            6,
            4,
        );
        let mut report = ArcReport::default();
        report.arcs.push(Arc {
            constraint: 0,
            side: BoundSide::Upper,
            entry: SwitchPoint {
                time: 10.0,
                window: (9.5, 10.5),
            },
            exit: SwitchPoint {
                time: 20.0,
                window: (19.5, 20.5),
            },
            touch_point: false,
            already_constrained: false,
        });
        let out = decompose(&layout, &report, &one_state_problem(1e-5)).unwrap();
        assert_eq!(out.domains.len(), 3);
        assert_eq!(out.times.len(), 4);
        assert!(out.domains[1].active.is_some());
        assert!(out.domains[0].active.is_none());
        assert!(out.domains[2].active.is_none());
        assert_eq!(out.times[1].value, 10.0);
        assert_eq!(out.times[2].value, 20.0);
        // Union of domains covers the horizon with ordered windows.
        assert!(out.validate().is_empty(), "{:?}", out.validate());
    }

    #[test]
    fn overlapping_arcs_of_distinct_constraints_are_rejected() {
        let mut problem = one_state_problem(1e-5);
        let mut second = problem.path_constraints[0].clone();
        second.name = "other".into();
        problem.path_constraints.push(second);
        let layout = DomainLayout::single_domain(
            TimeVar {
                value: 0.0,
                bound: Bound::fixed(0.0),
            },
            TimeVar {
                value: 30.0,
                bound: Bound::new(10.0, 100.0),
            },
            6,
            4,
        );
        let mut report = ArcReport::default();
        for (ci, (a, b)) in [(0usize, (5.0, 15.0)), (1usize, (12.0, 22.0))] {
            report.arcs.push(Arc {
                constraint: ci,
                side: BoundSide::Upper,
                entry: SwitchPoint {
                    time: a,
                    window: (a - 0.5, a + 0.5),
                },
                exit: SwitchPoint {
                    time: b,
                    window: (b - 0.5, b + 0.5),
                },
                touch_point: false,
                already_constrained: false,
            });
        }
        assert!(matches!(
            decompose(&layout, &report, &problem),
            Err(DetectionError::UnsupportedStructure(_, _))
        ));
    }

    #[test]
    fn detection_is_idempotent_and_refinement_keeps_arcs() {
        // Smooth profile grazing the bound over a known span; denser
        // sampling must keep finding the arc.
        let profile = |t: f64| -> f64 {
            let d = (t - 15.0) / 4.0;
            (1.0 - d * d).min(1.0).max(0.0) * 1.0 + if d.abs() <= 1.0 { 0.0 } else { -0.2 }
        };
        for n in [30usize, 60, 120] {
            let values: Vec<f64> = (0..=n)
                .map(|j| {
                    let t = 30.0 * j as f64 / n as f64;
                    if (t - 15.0).abs() <= 4.0 {
                        1.0
                    } else {
                        profile(t) - 0.3
                    }
                })
                .collect();
            let sol = synthetic_solution(&values);
            let report = detect_arcs(&sol, &one_state_problem(1e-5));
            assert_eq!(report.arcs.len(), 1, "n = {}", n);
            assert!((report.arcs[0].entry.time - 11.0).abs() <= 30.0 / n as f64 + 1e-9);
            assert!((report.arcs[0].exit.time - 19.0).abs() <= 30.0 / n as f64 + 1e-9);
        }
    }
}
