//! Backward-Euler time stepping by Picard iteration of the linearized system.
//!
//! Each sweep freezes `(v, u, theta)` at the previous iterate and solves three
//! independent tridiagonal systems, one per field. Sweeps repeat until the
//! distance between successive iterates stalls below tolerance; a step that
//! fails to converge or loses positivity is retried with half the time step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{self, Budget, DiagnosticsRecord, DEFAULT_M_WEIGHT};
use crate::grid_ops::{self, Field, Grid, GridError, Tridiag};
use crate::model::{self, ModelError, Params, ScalarPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("states live on different grids")]
    GridMismatch,
    #[error("invalid step configuration: {0}")]
    InvalidConfig(String),
    #[error("no converged positive state at t = {t} down to dt_min = {dt_min} ({reason})")]
    NoConvergence { t: f64, dt_min: f64, reason: String },
}

/// The run stopped; `t` is the time of the last accepted state.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("run failed at t = {t}: {source}")]
pub struct RunError {
    pub t: f64,
    #[source]
    pub source: StepError,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub v: Field,
    pub u: Field,
    pub theta: Field,
    grid: Grid,
}

impl State {
    pub fn new(grid: Grid, t: f64, v: Field, u: Field, theta: Field) -> Result<Self, GridError> {
        grid.check(&v)?;
        grid.check(&u)?;
        grid.check(&theta)?;
        Ok(Self {
            t,
            v,
            u,
            theta,
            grid,
        })
    }

    /// The far-field state (1, 0, 1) at `t = 0`.
    pub fn background(grid: Grid) -> Self {
        let n = grid.n();
        Self {
            t: 0.0,
            v: Field::constant(n, 1.0),
            u: Field::zeros(n),
            theta: Field::constant(n, 1.0),
            grid,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn point(&self, i: usize) -> ScalarPoint {
        ScalarPoint::new(self.v[i], self.u[i], self.theta[i])
    }

    /// Every nodal `v` and `theta` must exceed `floor`.
    pub fn check_positivity(&self, floor: f64) -> Result<(), ModelError> {
        for (field, f) in [("v", &self.v), ("theta", &self.theta)] {
            if let Some((index, &value)) = f.iter().enumerate().find(|(_, &x)| !(x > floor)) {
                return Err(ModelError::Positivity {
                    field,
                    index,
                    value,
                });
            }
        }
        Ok(())
    }

    fn same_grid(&self, other: &State) -> Result<(), StepError> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(StepError::GridMismatch)
        }
    }
}

/// Which frozen velocity enters the temperature source.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceForm {
    /// Pressure work and viscous heating built from the frozen velocity alone.
    Frozen,
    /// Pressure work and heating use the time-centred velocity
    /// `(u_frozen + u_base) / 2` in one factor, so that at Picard convergence
    /// the total energy `c_v theta + u^2 / 2` is conserved to rounding.
    #[default]
    EnergyConsistent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub dt: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub dt_min: f64,
    pub positivity_floor: f64,
    /// Fixed sweep count per step; `None` iterates to tolerance.
    pub sweeps: Option<usize>,
    pub source: SourceForm,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            picard_tol: 1e-10,
            picard_max: 50,
            dt_min: 1e-8,
            positivity_floor: 1e-12,
            sweeps: None,
            source: SourceForm::default(),
        }
    }
}

impl StepConfig {
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<(), StepError> {
        let bad = |m: String| Err(StepError::InvalidConfig(m));
        if !(self.dt_min > 0.0) {
            return bad(format!("dt_min = {} must be positive", self.dt_min));
        }
        if !(self.dt >= self.dt_min) || !self.dt.is_finite() {
            return bad(format!("dt = {} must be at least dt_min = {}", self.dt, self.dt_min));
        }
        if !(self.picard_tol > 0.0) {
            return bad(format!("picard_tol = {} must be positive", self.picard_tol));
        }
        if self.picard_max == 0 || self.sweeps == Some(0) {
            return bad("sweep counts must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub sweeps: usize,
    /// `X(U^m, U^{m-1}) / X(U^{m-1}, U^{m-2})` for `m >= 2`.
    pub ratios: Vec<f64>,
    pub final_residual: f64,
    pub dt_used: f64,
    /// Number of times the step was halved before succeeding.
    pub retries: usize,
}

impl StepReport {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }

    pub fn median_ratio(&self) -> f64 {
        median(&self.ratios)
    }
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Backward-Euler system `s (f' - f0) / dt - c ((f')_x / w)_x = src` for one
/// field, with face weights `wf` and Dirichlet end value `edge`.
///
/// Solved for the increment `f' - f0`, so a constant `f0` with zero source
/// is reproduced exactly.
fn implicit_diffusion_solve(
    g: &Grid,
    wf: &[f64],
    base: &[f64],
    src: &[f64],
    coeff: f64,
    storage: f64,
    dt: f64,
    edge: f64,
) -> Result<Field, GridError> {
    let n = g.n();
    let h2 = g.h() * g.h();
    let k = dt * coeff / storage;
    let s = dt / storage;
    let mut out = Field::from(base.to_vec());
    if g.is_periodic() {
        let mut sys = Tridiag::zeros(n, true);
        for i in 0..n {
            let l = if i == 0 { n - 1 } else { i - 1 };
            let r = if i == n - 1 { 0 } else { i + 1 };
            let am = k / (h2 * wf[l]);
            let ap = k / (h2 * wf[i]);
            sys.sub[i] = -am;
            sys.sup[i] = -ap;
            sys.diag[i] = 1.0 + am + ap;
            sys.rhs[i] = s * src[i] + ap * (base[r] - base[i]) - am * (base[i] - base[l]);
        }
        let x = grid_ops::thomas_solve(&sys)?;
        for i in 0..n {
            out[i] += x[i];
        }
    } else {
        let m = n - 2;
        let mut ext = base.to_vec();
        ext[0] = edge;
        ext[n - 1] = edge;
        let mut sys = Tridiag::zeros(m, false);
        for r in 0..m {
            let i = r + 1;
            let am = k / (h2 * wf[i - 1]);
            let ap = k / (h2 * wf[i]);
            sys.sub[r] = -am;
            sys.sup[r] = -ap;
            sys.diag[r] = 1.0 + am + ap;
            sys.rhs[r] = s * src[i] + ap * (ext[i + 1] - base[i]) - am * (base[i] - ext[i - 1]);
        }
        let x = grid_ops::thomas_solve(&sys)?;
        out[0] = edge;
        out[n - 1] = edge;
        for r in 0..m {
            out[r + 1] += x[r];
        }
    }
    Ok(out)
}

/// One Picard sweep: coefficients and sources frozen at `frozen`, the time
/// level anchored at `base`. The result carries `base.t` (time is advanced by
/// [`picard_advance`]).
pub fn linearized_sweep(
    frozen: &State,
    base: &State,
    dt: f64,
    p: &Params,
    source: SourceForm,
) -> Result<State, StepError> {
    frozen.same_grid(base)?;
    if !(dt > 0.0) {
        return Err(StepError::InvalidConfig(format!("dt = {dt} must be positive")));
    }
    model::check_positive("v", &frozen.v)?;
    model::check_positive("theta", &frozen.theta)?;
    let g = frozen.grid();
    let n = g.n();

    let wf = grid_ops::face_weights(&frozen.v, g)?;
    let pres = Field::from_fn(n, |i| p.r * frozen.theta[i] / frozen.v[i]);
    let u_x = grid_ops::d1(&frozen.u, g)?;
    let p_x = grid_ops::d1(&pres, g)?;

    let centred: Field = match source {
        SourceForm::Frozen => frozen.u.clone(),
        SourceForm::EnergyConsistent => {
            Field::from_fn(n, |i| 0.5 * (frozen.u[i] + base.u[i]))
        }
    };
    let centred_x = match source {
        SourceForm::Frozen => u_x.clone(),
        SourceForm::EnergyConsistent => grid_ops::d1(&centred, g)?,
    };
    let heating = grid_ops::face_product_with_faces(&frozen.u, &centred, &wf, g);

    let src_v = u_x;
    let src_u = p_x.map(|x| -x);
    let src_th = Field::from_fn(n, |i| -pres[i] * centred_x[i] + p.mu * heating[i]);

    let v = implicit_diffusion_solve(g, &wf, &base.v, &src_v, p.tau, 1.0, dt, 1.0)?;
    let u = implicit_diffusion_solve(g, &wf, &base.u, &src_u, p.mu, 1.0, dt, 0.0)?;
    let theta = implicit_diffusion_solve(g, &wf, &base.theta, &src_th, p.kappa, p.cv(), dt, 1.0)?;

    Ok(State {
        t: base.t,
        v,
        u,
        theta,
        grid: *g,
    })
}

/// `|dv|_2 + |du|_2 + sqrt(R / (gamma - 1)) |dtheta|_2`.
pub fn contraction_metric(a: &State, b: &State, p: &Params) -> Result<f64, StepError> {
    a.same_grid(b)?;
    let g = a.grid();
    let dist = |x: &[f64], y: &[f64]| g.integrate_by(|i| (x[i] - y[i]).powi(2)).sqrt();
    Ok(dist(&a.v, &b.v) + dist(&a.u, &b.u) + p.cv().sqrt() * dist(&a.theta, &b.theta))
}

enum Attempt {
    Done(State, StepReport),
    Failed(String),
}

fn attempt_step(base: &State, dt: f64, cfg: &StepConfig, p: &Params) -> Result<Attempt, StepError> {
    let sweep = |frozen: &State| linearized_sweep(frozen, base, dt, p, cfg.source);
    let positive = |s: &State| s.check_positivity(cfg.positivity_floor);

    let first = match sweep(base) {
        Ok(s) => s,
        Err(StepError::Model(e)) => return Ok(Attempt::Failed(e.to_string())),
        Err(e) => return Err(e),
    };
    if let Err(e) = positive(&first) {
        return Ok(Attempt::Failed(e.to_string()));
    }
    let x1 = contraction_metric(&first, base, p)?;
    if !x1.is_finite() {
        return Ok(Attempt::Failed("non-finite first sweep".into()));
    }
    let threshold = cfg.picard_tol * (1.0 + x1);
    let max_sweeps = cfg.sweeps.unwrap_or(cfg.picard_max);

    let mut report = StepReport {
        sweeps: 1,
        ratios: Vec::new(),
        final_residual: x1,
        dt_used: dt,
        retries: 0,
    };
    let mut cur = first;
    let mut last = x1;
    let fixed = cfg.sweeps.is_some();
    if !fixed && x1 <= threshold {
        return Ok(Attempt::Done(cur, report));
    }
    for m in 2..=max_sweeps {
        let next = match sweep(&cur) {
            Ok(s) => s,
            Err(StepError::Model(e)) => return Ok(Attempt::Failed(e.to_string())),
            Err(e) => return Err(e),
        };
        if let Err(e) = positive(&next) {
            return Ok(Attempt::Failed(format!("sweep {m}: {e}")));
        }
        let x = contraction_metric(&next, &cur, p)?;
        if !x.is_finite() || x > 1e6 * (1.0 + x1) {
            return Ok(Attempt::Failed(format!("sweep {m} diverged (X = {x:e})")));
        }
        if last > 0.0 {
            report.ratios.push(x / last);
        }
        report.sweeps = m;
        report.final_residual = x;
        cur = next;
        last = x;
        if !fixed && x <= threshold {
            return Ok(Attempt::Done(cur, report));
        }
    }
    if fixed {
        Ok(Attempt::Done(cur, report))
    } else {
        Ok(Attempt::Failed(format!(
            "picard_max = {} reached (X = {last:e})",
            cfg.picard_max
        )))
    }
}

/// Advances `base` by one accepted step, halving `dt` on failure.
pub fn picard_advance(
    base: &State,
    cfg: &StepConfig,
    p: &Params,
) -> Result<(State, StepReport), StepError> {
    cfg.validate()?;
    base.check_positivity(cfg.positivity_floor)?;
    let mut dt = cfg.dt;
    let mut retries = 0;
    loop {
        match attempt_step(base, dt, cfg, p)? {
            Attempt::Done(mut state, mut report) => {
                state.t = base.t + dt;
                report.retries = retries;
                return Ok((state, report));
            }
            Attempt::Failed(reason) => {
                dt *= 0.5;
                retries += 1;
                if dt < cfg.dt_min {
                    return Err(StepError::NoConvergence {
                        t: base.t,
                        dt_min: cfg.dt_min,
                        reason,
                    });
                }
            }
        }
    }
}

/// Per-step summary kept for every accepted step of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub t: f64,
    pub dt_used: f64,
    pub sweeps: usize,
    pub retries: usize,
    pub max_ratio: f64,
    pub median_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub state: State,
    /// The step that produced this state; `None` for the initial point.
    pub report: Option<StepReport>,
    pub record: DiagnosticsRecord,
    pub budget: Budget,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub params: Params,
    pub points: Vec<TrajectoryPoint>,
    pub steps: Vec<StepSummary>,
}

impl Trajectory {
    /// Builds a trajectory from bare snapshots, chaining diagnostics in order.
    pub fn from_states(states: Vec<State>, p: &Params) -> Result<Self, ModelError> {
        let mut points: Vec<TrajectoryPoint> = Vec::with_capacity(states.len());
        for state in states {
            let prev = points.last().map(|q| (&q.record, &q.budget));
            let (record, budget) = diagnostics::snapshot(&state, p, DEFAULT_M_WEIGHT, prev)?;
            points.push(TrajectoryPoint {
                state,
                report: None,
                record,
                budget,
            });
        }
        Ok(Self {
            params: *p,
            points,
            steps: Vec::new(),
        })
    }

    pub fn initial(&self) -> Option<&State> {
        self.points.first().map(|q| &q.state)
    }

    pub fn last(&self) -> Option<&TrajectoryPoint> {
        self.points.last()
    }

    pub fn retries(&self) -> usize {
        self.steps.iter().map(|s| s.retries).sum()
    }

    /// Every recorded contraction ratio over all accepted steps.
    pub fn all_ratios_max(&self) -> f64 {
        self.steps.iter().map(|s| s.max_ratio).fold(0.0, f64::max)
    }
}

pub fn run(
    initial: &State,
    t_end: f64,
    cfg: &StepConfig,
    p: &Params,
    sample_every: usize,
) -> Result<Trajectory, RunError> {
    run_with_weight(initial, t_end, cfg, p, sample_every, DEFAULT_M_WEIGHT)
}

/// Advances to `t_end`, recording a point every `sample_every` accepted
/// steps and at `t_end`. Cumulative diagnostics are updated every step.
pub fn run_with_weight(
    initial: &State,
    t_end: f64,
    cfg: &StepConfig,
    p: &Params,
    sample_every: usize,
    m_weight: f64,
) -> Result<Trajectory, RunError> {
    let fail = |t: f64| move |source: StepError| RunError { t, source };
    p.validate().map_err(|e| fail(initial.t)(e.into()))?;
    cfg.validate().map_err(fail(initial.t))?;
    if !(t_end >= initial.t) {
        return Err(fail(initial.t)(StepError::InvalidConfig(format!(
            "t_end = {t_end} precedes the initial time {}",
            initial.t
        ))));
    }
    let sample_every = sample_every.max(1);

    let (record, budget) = diagnostics::snapshot(initial, p, m_weight, None)
        .map_err(|e| fail(initial.t)(e.into()))?;
    let mut traj = Trajectory {
        params: *p,
        points: vec![TrajectoryPoint {
            state: initial.clone(),
            report: None,
            record: record.clone(),
            budget: budget.clone(),
        }],
        steps: Vec::new(),
    };

    let mut state = initial.clone();
    let mut last = (record, budget);
    let mut accepted = 0usize;
    let land_tol = 1e-12 * t_end.abs().max(1.0);
    while t_end - state.t > land_tol {
        let remaining = t_end - state.t;
        let mut step_cfg = cfg.clone();
        if remaining <= cfg.dt * (1.0 + 1e-9) {
            step_cfg.dt = remaining;
            step_cfg.dt_min = cfg.dt_min.min(remaining);
        }
        let (mut next, report) = picard_advance(&state, &step_cfg, p).map_err(fail(state.t))?;
        if (t_end - next.t).abs() <= land_tol {
            next.t = t_end;
        }
        accepted += 1;
        let (record, budget) = diagnostics::snapshot(&next, p, m_weight, Some((&last.0, &last.1)))
            .map_err(|e| fail(next.t)(e.into()))?;
        traj.steps.push(StepSummary {
            t: next.t,
            dt_used: report.dt_used,
            sweeps: report.sweeps,
            retries: report.retries,
            max_ratio: report.max_ratio(),
            median_ratio: report.median_ratio(),
        });
        let at_end = t_end - next.t <= land_tol;
        if accepted.is_multiple_of(sample_every) || at_end {
            traj.points.push(TrajectoryPoint {
                state: next.clone(),
                report: Some(report),
                record: record.clone(),
                budget: budget.clone(),
            });
        }
        last = (record, budget);
        state = next;
    }
    Ok(traj)
}
