//! Certification functionals evaluated on snapshots and whole trajectories.
//!
//! Space integrals use trapezoid weights; time integrals use the trapezoid
//! rule over the recorded points (over every accepted step for the
//! cumulative dissipation carried in [`Budget`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid_ops::{self, Field};
use crate::model::{self, DissipationParts, ModelError, Params};
use crate::stepper::{self, SourceForm, State, StepError, Trajectory};

pub const DEFAULT_M_WEIGHT: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("no node at or below the base level {level} at t = {t}")]
    NoReferencePoint { level: f64, t: f64 },
}

/// First to third derivative L2 norms of `(v - 1, u, theta - 1)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HkTable {
    pub v: [f64; 3],
    pub u: [f64; 3],
    pub theta: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub eta_total: f64,
    pub dissipation_cum: f64,
    pub balance_residual: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub mass_def: f64,
    pub momentum: f64,
    pub energy_def: f64,
    pub hk: HkTable,
    pub alpha_fn: f64,
    pub vlog_grad: f64,
}

/// Running entropy budget: the initial relative entropy, the current
/// dissipation rate, and the time-integrated dissipation split by source.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub eta0: f64,
    pub rate: DissipationParts,
    pub cumulative: DissipationParts,
}

/// Grid integral of the entropy dissipation in the form produced by the
/// discrete operators.
///
/// Summation by parts of the face stencils gives, per face `j`,
/// `tau R (dv)^2 / (h w_j v_j v_{j+1})` and `kappa (dtheta)^2 / (h w_j theta_j theta_{j+1})`,
/// and per active node `mu H_i / theta_i` with `H` the face-averaged heating.
/// Each is a consistent quadrature of the corresponding term of
/// [`model::dissipation_parts`], and with them the semidiscrete entropy
/// identity holds exactly.
pub fn dissipation_rate(state: &State, p: &Params) -> Result<DissipationParts, ModelError> {
    let g = state.grid();
    model::check_positive("v", &state.v)?;
    model::check_positive("theta", &state.theta)?;
    let wf = grid_ops::face_weights(&state.v, g)?;
    let n = g.n();
    let h = g.h();
    let (v, th) = (&state.v, &state.theta);
    let mut mass = 0.0;
    let mut heat = 0.0;
    for (j, w) in wf.iter().enumerate() {
        let k = (j + 1) % n;
        let dv = v[k] - v[j];
        let dth = th[k] - th[j];
        mass += dv * dv / (h * w * v[j] * v[k]);
        heat += dth * dth / (h * w * th[j] * th[k]);
    }
    let heating = grid_ops::face_product_with_faces(&state.u, &state.u, &wf, g);
    let momentum: f64 = g.active().map(|i| h * heating[i] / th[i]).sum();
    Ok(DissipationParts {
        mass: p.tau * p.r * mass,
        momentum: p.mu * momentum,
        heat: p.kappa * heat,
    })
}

/// Trapezoidal integral of the pointwise dissipation density with centred
/// derivatives. Agrees with [`dissipation_rate`] to second order in `h`.
pub fn dissipation_rate_nodal(state: &State, p: &Params) -> Result<DissipationParts, ModelError> {
    let g = state.grid();
    let vx = grid_ops::d1(&state.v, g)?;
    let ux = grid_ops::d1(&state.u, g)?;
    let tx = grid_ops::d1(&state.theta, g)?;
    let mut acc = DissipationParts::default();
    for i in 0..g.n() {
        let d = model::dissipation_parts(state.point(i), vx[i], ux[i], tx[i], p)?;
        acc = acc + d.scaled(g.weight(i));
    }
    Ok(acc)
}

pub fn total_relative_entropy(state: &State, p: &Params) -> Result<f64, ModelError> {
    let g = state.grid();
    let mut acc = 0.0;
    for i in 0..g.n() {
        acc += g.weight(i) * model::relative_entropy_density(state.point(i), p)?;
    }
    Ok(acc)
}

fn alpha_density(state: &State, p: &Params, m_weight: f64, i: usize) -> f64 {
    let u = state.u[i];
    let e_def = p.cv() * (state.theta[i] - 1.0) + 0.5 * u * u;
    0.5 * e_def * e_def + 0.25 * m_weight * u.powi(4)
}

/// Diagnostics of one state, extending cumulative quantities from `prev`.
pub fn snapshot(
    state: &State,
    p: &Params,
    m_weight: f64,
    prev: Option<(&DiagnosticsRecord, &Budget)>,
) -> Result<(DiagnosticsRecord, Budget), ModelError> {
    let g = state.grid();
    let eta_total = total_relative_entropy(state, p)?;
    let rate = dissipation_rate(state, p)?;
    let (eta0, cumulative) = match prev {
        Some((rec, bud)) => {
            let dt = state.t - rec.t;
            (bud.eta0, bud.cumulative + (bud.rate + rate).scaled(0.5 * dt))
        }
        None => (eta_total, DissipationParts::default()),
    };
    let dissipation_cum = cumulative.total();

    let dv: Field = state.v.map(|x| x - 1.0);
    let dth: Field = state.theta.map(|x| x - 1.0);
    let tail = |f: &[f64]| -> Result<[f64; 3], ModelError> {
        let s = grid_ops::hk_seminorms(f, g, 3)?;
        Ok([s[1], s[2], s[3]])
    };
    let hk = HkTable {
        v: tail(&dv)?,
        u: tail(&state.u)?,
        theta: tail(&dth)?,
    };
    let vx = grid_ops::d1(&state.v, g)?;
    let cv = p.cv();

    let record = DiagnosticsRecord {
        t: state.t,
        eta_total,
        dissipation_cum,
        balance_residual: (eta_total + dissipation_cum - eta0).abs(),
        v_min: state.v.min(),
        v_max: state.v.max(),
        theta_min: state.theta.min(),
        theta_max: state.theta.max(),
        mass_def: g.integrate(&dv),
        momentum: g.integrate(&state.u),
        energy_def: g.integrate_by(|i| cv * dth[i] + 0.5 * state.u[i] * state.u[i]),
        hk,
        alpha_fn: 1.0 + g.integrate_by(|i| alpha_density(state, p, m_weight, i)),
        vlog_grad: g.integrate_by(|i| (vx[i] / state.v[i]).powi(2)),
    };
    Ok((
        record,
        Budget {
            eta0,
            rate,
            cumulative,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BalanceCheck {
    pub max_residual: f64,
    /// `max_residual / max(E0, 1e-15)`
    pub relative: f64,
    pub eta0: f64,
    pub pass: bool,
}

/// Entropy balance `eta(t) + int_0^t D = E0` over the recorded points.
pub fn balance_check(traj: &Trajectory, tol: f64) -> BalanceCheck {
    let eta0 = traj.points.first().map_or(0.0, |q| q.budget.eta0);
    let max_residual = traj
        .points
        .iter()
        .map(|q| q.record.balance_residual)
        .fold(0.0, f64::max);
    let scale = eta0.max(1e-15);
    BalanceCheck {
        max_residual,
        relative: max_residual / scale,
        eta0,
        pass: max_residual <= tol * scale,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Drift {
    /// `max_t |q(t) - q(0)| / T`, zero for a zero-length trajectory.
    pub per_unit_time: f64,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConservationCheck {
    pub mass: Drift,
    pub momentum: Drift,
    pub energy: Drift,
}

impl ConservationCheck {
    pub fn pass(&self) -> bool {
        self.mass.pass && self.momentum.pass && self.energy.pass
    }
}

pub fn conservation_check(traj: &Trajectory, tol: f64) -> ConservationCheck {
    let (first, last) = match (traj.points.first(), traj.points.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            let d = Drift {
                per_unit_time: 0.0,
                pass: true,
            };
            return ConservationCheck {
                mass: d,
                momentum: d,
                energy: d,
            };
        }
    };
    let span = last.record.t - first.record.t;
    let drift = |q: fn(&DiagnosticsRecord) -> f64| {
        let q0 = q(&first.record);
        let dev = traj
            .points
            .iter()
            .map(|pt| (q(&pt.record) - q0).abs())
            .fold(0.0, f64::max);
        let per_unit_time = if span > 0.0 { dev / span } else { 0.0 };
        Drift {
            per_unit_time,
            pass: per_unit_time <= tol,
        }
    };
    ConservationCheck {
        mass: drift(|r| r.mass_def),
        momentum: drift(|r| r.momentum),
        energy: drift(|r| r.energy_def),
    }
}

fn time_trapezoid(traj: &Trajectory, values: &[f64]) -> f64 {
    traj.points
        .windows(2)
        .zip(values.windows(2))
        .map(|(pts, v)| 0.5 * (pts[1].state.t - pts[0].state.t) * (v[0] + v[1]))
        .sum()
}

fn level_energy<F, G>(traj: &Trajectory, mut level: F, mut flux: G) -> Result<f64, ModelError>
where
    F: FnMut(&State) -> Result<f64, ModelError>,
    G: FnMut(&State) -> Result<f64, ModelError>,
{
    let mut sup: f64 = 0.0;
    let mut rates = Vec::with_capacity(traj.points.len());
    for q in &traj.points {
        sup = sup.max(level(&q.state)?);
        rates.push(flux(&q.state)?);
    }
    Ok(sup + time_trapezoid(traj, &rates))
}

fn check_level(c: f64) -> Result<(), DiagnosticsError> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(DiagnosticsError::InvalidArgument(format!(
            "truncation level c = {c} must be positive"
        )))
    }
}

/// `sup_t int (v - c)_+^2 + int int (1_{v > c} v_x)^2 / v`.
pub fn level_set_energy_upper(traj: &Trajectory, c: f64) -> Result<f64, DiagnosticsError> {
    check_level(c)?;
    Ok(level_energy(
        traj,
        |s| {
            let g = s.grid();
            Ok(g.integrate_by(|i| (s.v[i] - c).max(0.0).powi(2)))
        },
        |s| {
            let g = s.grid();
            model::check_positive("v", &s.v)?;
            let vx = grid_ops::d1(&s.v, g)?;
            Ok(g.integrate_by(|i| {
                if s.v[i] > c {
                    vx[i] * vx[i] / s.v[i]
                } else {
                    0.0
                }
            }))
        },
    )?)
}

/// Same construction for `w = 1 / sqrt(v)`:
/// `sup_t int (w - c)_+^2 + int int v_x^2 / v^4 1_{w > c}`.
pub fn level_set_energy_lower(traj: &Trajectory, c: f64) -> Result<f64, DiagnosticsError> {
    check_level(c)?;
    Ok(level_energy(
        traj,
        |s| {
            model::check_positive("v", &s.v)?;
            let g = s.grid();
            Ok(g.integrate_by(|i| (1.0 / s.v[i].sqrt() - c).max(0.0).powi(2)))
        },
        |s| {
            let g = s.grid();
            let vx = grid_ops::d1(&s.v, g)?;
            Ok(g.integrate_by(|i| {
                if 1.0 / s.v[i].sqrt() > c {
                    vx[i] * vx[i] / s.v[i].powi(4)
                } else {
                    0.0
                }
            }))
        },
    )?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderSide {
    /// Truncations of `v`.
    Upper,
    /// Truncations of `1 / sqrt(v)`.
    Lower,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderReport {
    pub side: LadderSide,
    pub ceiling: f64,
    pub levels: Vec<f64>,
    pub energies: Vec<f64>,
    pub monotone: bool,
    /// `E_K / E_0`, or 0 when `E_0 = 0` (every level already empty).
    pub terminal_ratio: f64,
}

/// Level-set energies at `c_k = L (1 - 2^{-k-1})`, `k = 0..=K`.
///
/// Every recorded state must have a node at or below `c_0`, so the lowest
/// truncation has somewhere to vanish.
pub fn degiorgi_ladder(
    traj: &Trajectory,
    side: LadderSide,
    ceiling: f64,
    k_max: usize,
) -> Result<LadderReport, DiagnosticsError> {
    if !(ceiling > 0.0) || k_max < 2 {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "ladder needs L > 0 and K >= 2 (got L = {ceiling}, K = {k_max})"
        )));
    }
    let levels: Vec<f64> = (0..=k_max)
        .map(|k| ceiling * (1.0 - 0.5f64.powi(k as i32 + 1)))
        .collect();
    for q in &traj.points {
        let below = match side {
            LadderSide::Upper => q.state.v.min() <= levels[0],
            LadderSide::Lower => 1.0 / q.state.v.max().sqrt() <= levels[0],
        };
        if !below {
            return Err(DiagnosticsError::NoReferencePoint { level: levels[0], t: q.state.t });
        }
    }
    let energies = levels
        .iter()
        .map(|&c| match side {
            LadderSide::Upper => level_set_energy_upper(traj, c),
            LadderSide::Lower => level_set_energy_lower(traj, c),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let monotone = energies.windows(2).all(|w| w[1] <= w[0]);
    let terminal_ratio = if energies[0] > 0.0 {
        energies[k_max] / energies[0]
    } else {
        0.0
    };
    Ok(LadderReport {
        side,
        ceiling,
        levels,
        energies,
        monotone,
        terminal_ratio,
    })
}

/// Largest observed `v` and `1 / sqrt(v)` over all recorded states.
pub fn observed_extrema(traj: &Trajectory) -> (f64, f64) {
    traj.points.iter().fold((0.0f64, 0.0f64), |(vm, wm), q| {
        let vmin = q.state.v.min();
        (vm.max(q.state.v.max()), wm.max(1.0 / vmin.sqrt()))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaBoundReport {
    /// Largest `lhs - bound` over the samples; negative means slack.
    pub max_violation: f64,
    pub pass: bool,
    /// `(point index, time, node)` of the largest violation.
    pub worst: (usize, f64, usize),
    /// `max(1 / theta_min(t), 1)` per point.
    pub lhs: Vec<f64>,
    /// Envelope `max(1 / theta_min(0), 1) + k int_0^t ds / v_min(s)` per point.
    pub bound: Vec<f64>,
}

/// Envelope form of the maximum-principle bound on `1 / theta_min`.
///
/// At a spatial minimum the heating and pressure work combine to at least
/// `-(gamma - 1) R theta^2 / (4 mu v)`, so `(1 / theta_m)' <= k / v` with
/// `k = (gamma - 1) R / (4 mu)`. The volume at the minimizer is replaced by
/// the smaller `v_min(t)`.
pub fn theta_min_bound(traj: &Trajectory, tol: f64) -> ThetaBoundReport {
    let p = &traj.params;
    let k = (p.gamma - 1.0) * p.r / (4.0 * p.mu);
    let inv = |th: f64| if th > 0.0 { (1.0 / th).max(1.0) } else { f64::INFINITY };
    let mut lhs = Vec::with_capacity(traj.points.len());
    let mut bound = Vec::with_capacity(traj.points.len());
    let mut worst = (0, 0.0, 0);
    let mut max_violation = f64::NEG_INFINITY;
    let mut integral = 0.0;
    let mut start = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (idx, q) in traj.points.iter().enumerate() {
        let s = &q.state;
        let node = s.theta.argmin();
        let l = inv(s.theta[node]);
        let vmin = s.v.min();
        let rate = if vmin > 0.0 { 1.0 / vmin } else { f64::INFINITY };
        if let Some((t0, r0)) = prev {
            integral += 0.5 * (s.t - t0) * (r0 + rate);
        } else {
            start = l;
        }
        prev = Some((s.t, rate));
        let b = start + k * integral;
        let viol = l - b;
        if viol > max_violation || viol.is_nan() {
            max_violation = if viol.is_nan() { f64::INFINITY } else { viol };
            worst = (idx, s.t, node);
        }
        lhs.push(l);
        bound.push(b);
    }
    if traj.points.is_empty() {
        max_violation = 0.0;
    }
    ThetaBoundReport {
        max_violation,
        pass: max_violation <= tol,
        worst,
        lhs,
        bound,
    }
}

/// Pointwise `v 1_{v >= b} <= b / (b - a)^2 (v - a)_+^2` for `0 < a < b`,
/// with `1e-12` absolute slack.
pub fn nonlinearization_check(v: &[f64], a: f64, b: f64) -> Result<bool, DiagnosticsError> {
    if !(a > 0.0 && a < b) {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "need 0 < a < b (got a = {a}, b = {b})"
        )));
    }
    let coef = b / ((b - a) * (b - a));
    Ok(v.iter().all(|&x| {
        let lhs = if x >= b { x } else { 0.0 };
        lhs <= coef * (x - a).max(0.0).powi(2) + 1e-12
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaSeries {
    pub t: Vec<f64>,
    pub alpha: Vec<f64>,
    pub max: f64,
}

/// `alpha(t) = 1 + int 1/2 (E - R/(gamma-1))^2 + (M/4) u^4` per point.
pub fn higher_integrability_monitor(
    traj: &Trajectory,
    m_weight: f64,
) -> Result<AlphaSeries, DiagnosticsError> {
    if !(m_weight > 0.0) {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "M weight {m_weight} must be positive"
        )));
    }
    let p = &traj.params;
    let mut t = Vec::new();
    let mut alpha = Vec::new();
    for q in &traj.points {
        let g = q.state.grid();
        t.push(q.state.t);
        alpha.push(1.0 + g.integrate_by(|i| alpha_density(&q.state, p, m_weight, i)));
    }
    let max = alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(AlphaSeries { t, alpha, max })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DissipationBudget {
    pub eta0: f64,
    pub eta_max: f64,
    pub cumulative: DissipationParts,
}

/// Split of the time-integrated dissipation at the last point.
pub fn dissipation_budget(traj: &Trajectory) -> DissipationBudget {
    let eta0 = traj.points.first().map_or(0.0, |q| q.budget.eta0);
    let eta_max = traj
        .points
        .iter()
        .map(|q| q.record.eta_total)
        .fold(0.0, f64::max);
    let cumulative = traj
        .points
        .last()
        .map(|q| q.budget.cumulative)
        .unwrap_or_default();
    DissipationBudget {
        eta0,
        eta_max,
        cumulative,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalContraction {
    /// Interval metric of successive iterate differences, `X^1, X^2, ...`.
    pub metric: Vec<f64>,
    pub ratios: Vec<f64>,
}

/// Picard iteration over a whole window `[t0, t0 + steps dt]` at once.
///
/// Iterate `n` marches the linearized system with coefficients frozen at
/// iterate `n - 1` at the same time level. The metric of the difference
/// between iterates is the sup in time of
/// `int dv^2 + du^2 + R/(gamma-1) dtheta^2` plus the time integral of
/// `int (tau dv_x^2 + mu du_x^2 + kappa dtheta_x^2) / v`.
pub fn interval_contraction(
    initial: &State,
    dt: f64,
    steps: usize,
    iterations: usize,
    p: &Params,
    source: SourceForm,
) -> Result<IntervalContraction, DiagnosticsError> {
    if steps == 0 || iterations < 2 {
        return Err(DiagnosticsError::InvalidArgument(
            "need at least one step and two iterations".into(),
        ));
    }
    let g = *initial.grid();
    let mut prev: Vec<State> = vec![initial.clone(); steps + 1];
    let mut metric = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut cur = Vec::with_capacity(steps + 1);
        cur.push(initial.clone());
        for k in 1..=steps {
            let mut s = stepper::linearized_sweep(&prev[k], &cur[k - 1], dt, p, source)?;
            s.t = initial.t + k as f64 * dt;
            cur.push(s);
        }
        let mut sup: f64 = 0.0;
        let mut dissip = 0.0;
        for k in 1..=steps {
            let (a, b) = (&cur[k], &prev[k]);
            let d = |x: &[f64], y: &[f64]| Field::from_fn(g.n(), |i| x[i] - y[i]);
            let (dv, du, dth) = (d(&a.v, &b.v), d(&a.u, &b.u), d(&a.theta, &b.theta));
            let l2 = g.integrate_by(|i| dv[i] * dv[i] + du[i] * du[i] + p.cv() * dth[i] * dth[i]);
            sup = sup.max(l2);
            let (dvx, dux, dthx) = (
                grid_ops::d1(&dv, &g).map_err(ModelError::from)?,
                grid_ops::d1(&du, &g).map_err(ModelError::from)?,
                grid_ops::d1(&dth, &g).map_err(ModelError::from)?,
            );
            dissip += dt
                * g.integrate_by(|i| {
                    (p.tau * dvx[i].powi(2) + p.mu * dux[i].powi(2) + p.kappa * dthx[i].powi(2))
                        / b.v[i]
                });
        }
        metric.push(sup + dissip);
        prev = cur;
    }
    let ratios = metric
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    Ok(IntervalContraction { metric, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_ops::{BoundaryMode, Grid};
    use crate::stepper::Trajectory;

    fn p() -> Params {
        Params::default()
    }

    #[test]
    fn background_snapshot_is_zero() {
        let s = State::background(Grid::new(33, 4.0, BoundaryMode::DirichletBackground).unwrap());
        let (r, b) = snapshot(&s, &p(), DEFAULT_M_WEIGHT, None).unwrap();
        assert_eq!(r.eta_total, 0.0);
        assert_eq!(r.balance_residual, 0.0);
        assert_eq!(r.mass_def, 0.0);
        assert_eq!(r.momentum, 0.0);
        assert_eq!(r.energy_def, 0.0);
        assert_eq!(r.alpha_fn, 1.0);
        assert_eq!(b.rate.total(), 0.0);
    }

    #[test]
    fn uniform_flow_snapshot() {
        let g = Grid::new(40, 1.0, BoundaryMode::Periodic).unwrap();
        let mut s = State::background(g);
        s.u = Field::constant(40, 1.0);
        let (r, _) = snapshot(&s, &p(), 4.0, None).unwrap();
        assert!((r.eta_total - 0.5).abs() < 1e-14);
        assert!((r.momentum - 1.0).abs() < 1e-14);
        // 1 + int 1/2 (1/2)^2 + (4/4) 1 = 2.125
        assert!((r.alpha_fn - 2.125).abs() < 1e-14);
    }

    #[test]
    fn snapshot_rejects_nonpositive() {
        let g = Grid::new(10, 1.0, BoundaryMode::Periodic).unwrap();
        let mut s = State::background(g);
        s.v[2] = -1.0;
        assert!(snapshot(&s, &p(), 4.0, None).is_err());
    }

    #[test]
    fn zero_length_checks_pass() {
        let s = State::background(Grid::new(16, 1.0, BoundaryMode::Periodic).unwrap());
        let traj = Trajectory::from_states(vec![s], &p()).unwrap();
        let b = balance_check(&traj, 1e-12);
        assert!(b.pass && b.max_residual == 0.0);
        assert!(conservation_check(&traj, 0.0).pass());
        let th = theta_min_bound(&traj, 0.0);
        assert!(th.pass);
        assert_eq!(th.max_violation, 0.0);
    }

    #[test]
    fn nonlinearization_examples() {
        assert!(nonlinearization_check(&[1.0; 5], 2.0, 3.0).unwrap());
        assert!(nonlinearization_check(&[3.0; 5], 1.0, 3.0).unwrap());
        assert!(nonlinearization_check(&[1.0], 3.0, 2.0).is_err());
        assert!(nonlinearization_check(&[1.0], 0.0, 2.0).is_err());
    }

    #[test]
    fn ladder_argument_validation() {
        let s = State::background(Grid::new(16, 1.0, BoundaryMode::Periodic).unwrap());
        let traj = Trajectory::from_states(vec![s], &p()).unwrap();
        assert!(degiorgi_ladder(&traj, LadderSide::Upper, 2.0, 1).is_err());
        assert!(degiorgi_ladder(&traj, LadderSide::Upper, 0.0, 4).is_err());
        assert!(level_set_energy_upper(&traj, -1.0).is_err());
        let r = degiorgi_ladder(&traj, LadderSide::Lower, 3.0, 6).unwrap();
        assert!(r.energies.iter().all(|&e| e == 0.0));
        assert!(r.monotone);
        assert_eq!(r.levels.len(), 7);
        assert!(r.levels.windows(2).all(|w| w[1] > w[0]));
        // c_0 = 0.75 < v = 1 everywhere: no reference node.
        assert!(matches!(
            degiorgi_ladder(&traj, LadderSide::Upper, 1.5, 4),
            Err(DiagnosticsError::NoReferencePoint { .. })
        ));
    }

    #[test]
    fn alpha_monitor_rejects_bad_weight() {
        let s = State::background(Grid::new(16, 1.0, BoundaryMode::Periodic).unwrap());
        let traj = Trajectory::from_states(vec![s], &p()).unwrap();
        assert!(higher_integrability_monitor(&traj, 0.0).is_err());
        let a = higher_integrability_monitor(&traj, 4.0).unwrap();
        assert_eq!(a.alpha, vec![1.0]);
    }
}
