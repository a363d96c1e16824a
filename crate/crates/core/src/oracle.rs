//! Independent references used to cross-check the solver and diagnostics.
//!
//! The explicit integrator shares only the semidiscrete right-hand side with
//! the stepper; it has its own time discretization and no linear solves.

use thiserror::Error;

use crate::grid_ops::{Field, Grid, GridError};
use crate::model::{self, ModelError, Params};
use crate::stepper::State;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular matrix (pivot column {0})")]
    Singular(usize),
    #[error("explicit reference lost positivity at t = {t}: {source}")]
    Positivity {
        t: f64,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Four-point Lagrange interpolation of nodal values at coordinate `x`.
pub fn interpolate_cubic(f: &[f64], g: &Grid, x: f64) -> f64 {
    let n = g.n() as isize;
    let s = x / g.h();
    let mut i0 = s.floor() as isize - 1;
    if !g.is_periodic() {
        i0 = i0.clamp(0, n - 4);
    }
    let mut acc = 0.0;
    for a in 0..4 {
        let ia = i0 + a;
        let mut w = 1.0;
        for b in 0..4 {
            if a != b {
                let ib = i0 + b;
                w *= (s - ib as f64) / (ia - ib) as f64;
            }
        }
        acc += w * f[ia.rem_euclid(n) as usize];
    }
    acc
}

/// Cubic resampling of all three fields onto another grid of the same
/// domain and boundary mode.
pub fn resample(state: &State, target: &Grid) -> Result<State, OracleError> {
    let src = state.grid();
    if src.bc() != target.bc() || (src.length() - target.length()).abs() > 1e-12 * src.length() {
        return Err(OracleError::InvalidArgument(
            "resampling needs the same domain and boundary mode".into(),
        ));
    }
    let map = |f: &[f64]| Field::from_fn(target.n(), |j| interpolate_cubic(f, src, target.x(j)));
    let mut out = State::new(*target, state.t, map(&state.v), map(&state.u), map(&state.theta))?;
    if !target.is_periodic() {
        let last = target.n() - 1;
        for i in [0, last] {
            out.v[i] = state.v[if i == 0 { 0 } else { src.n() - 1 }];
            out.u[i] = state.u[if i == 0 { 0 } else { src.n() - 1 }];
            out.theta[i] = state.theta[if i == 0 { 0 } else { src.n() - 1 }];
        }
    }
    Ok(out)
}

/// Explicit two-stage midpoint integration of the semidiscrete system on a
/// fine grid with `dt = cfl h^2 min(v) / max(tau, mu, kappa (gamma-1)/R)`.
///
/// Explicit stepping does not preserve positivity; loss of it aborts.
pub fn explicit_reference(
    initial: &State,
    t_end: f64,
    p: &Params,
    n_fine: usize,
    cfl: f64,
) -> Result<State, OracleError> {
    if !(cfl > 0.0 && cfl <= 0.25) {
        return Err(OracleError::InvalidArgument(format!("cfl = {cfl} must lie in (0, 0.25]")));
    }
    if !(t_end >= initial.t) {
        return Err(OracleError::InvalidArgument(format!(
            "t_end = {t_end} precedes t = {}",
            initial.t
        )));
    }
    let g0 = initial.grid();
    let fine = if g0.n() == n_fine {
        *g0
    } else {
        Grid::new(n_fine, g0.length(), g0.bc())?.with_face_mean(g0.face_mean())
    };
    let mut s = if g0.n() == n_fine {
        initial.clone()
    } else {
        resample(initial, &fine)?
    };
    let diffusivity = p.tau.max(p.mu).max(p.kappa / p.cv());
    let h2 = fine.h() * fine.h();
    let n = fine.n();
    let eval = |s: &State| {
        model::rhs(s, p).map_err(|source| OracleError::Positivity { t: s.t, source })
    };
    while s.t < t_end {
        let vmin = s.v.min();
        if !(vmin > 0.0) {
            return Err(OracleError::Positivity {
                t: s.t,
                source: ModelError::Positivity {
                    field: "v",
                    index: s.v.argmin(),
                    value: vmin,
                },
            });
        }
        let dt = (cfl * h2 * vmin / diffusivity).min(t_end - s.t);
        let k1 = eval(&s)?;
        let mut mid = s.clone();
        for i in 0..n {
            mid.v[i] += 0.5 * dt * k1.v[i];
            mid.u[i] += 0.5 * dt * k1.u[i];
            mid.theta[i] += 0.5 * dt * k1.theta[i];
        }
        mid.t += 0.5 * dt;
        let k2 = eval(&mid)?;
        for i in 0..n {
            s.v[i] += dt * k2.v[i];
            s.u[i] += dt * k2.u[i];
            s.theta[i] += dt * k2.theta[i];
        }
        s.t = if t_end - (s.t + dt) <= 1e-14 * t_end.abs().max(1.0) {
            t_end
        } else {
            s.t + dt
        };
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceSpec {
    pub c: f64,
    pub beta: f64,
    pub w0: f64,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceResult {
    pub series: Vec<f64>,
    /// `W_K < 1e-12`.
    pub converged: bool,
    /// Sufficient starting threshold `C0 = C'^(-1/(beta-1) - 1/(beta-1)^2)`, `C' = max(C, 1)`.
    pub threshold: f64,
}

/// Starting value below which `W_{k+1} = C^k W_k^beta` tends to zero.
///
/// With `W_k = C^{a_k}` the exponents obey `a_{k+1} = beta a_k + k`, whose
/// solution is `beta^k (a_0 + sum_{j<k} j beta^{-j-1})`; the sum tends to
/// `1/(beta-1)^2`. For `C <= 1` the factor `C^k` only helps, so `C` is
/// replaced by `max(C, 1)`.
pub fn exact_threshold(c: f64, beta: f64) -> f64 {
    c.max(1.0).powf(-1.0 / ((beta - 1.0) * (beta - 1.0)))
}

pub fn sufficient_threshold(c: f64, beta: f64) -> f64 {
    let e = beta - 1.0;
    c.max(1.0).powf(-1.0 / e - 1.0 / (e * e))
}

/// Iterates the equality recursion `W_{k+1} = C^k W_k^beta` for `K` steps.
/// Overflow stops the iteration and counts as divergence.
pub fn degiorgi_sequence(spec: SequenceSpec) -> Result<SequenceResult, OracleError> {
    if !(spec.c > 0.0) || !(spec.beta > 1.0) || !(spec.w0 >= 0.0) {
        return Err(OracleError::InvalidArgument(format!(
            "need C > 0, beta > 1, W0 >= 0 (got {spec:?})"
        )));
    }
    let mut series = Vec::with_capacity(spec.k + 1);
    series.push(spec.w0);
    let mut w = spec.w0;
    let mut overflow = false;
    for k in 0..spec.k {
        w = spec.c.powi(k as i32) * w.powf(spec.beta);
        if !w.is_finite() {
            overflow = true;
            series.push(f64::INFINITY);
            break;
        }
        series.push(w);
    }
    Ok(SequenceResult {
        converged: !overflow && w < 1e-12,
        series,
        threshold: sufficient_threshold(spec.c, spec.beta),
    })
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(matrix: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>, OracleError> {
    let n = rhs.len();
    if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
        return Err(OracleError::InvalidArgument("matrix must be square and match rhs".into()));
    }
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut b = rhs.to_vec();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() <= 1e-300_f64.max(f64::EPSILON * scale * 1e-3) {
            return Err(OracleError::Singular(col));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}

/// Composite Simpson rule for `f` on `[a, b]` with an even number of intervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let m = intervals.max(2) + intervals % 2;
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for j in 1..m {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + j as f64 * h);
    }
    acc * h / 3.0
}

/// Simpson integral of a nodal field after cubic upsampling by `refine`.
pub fn quadrature(f: &[f64], g: &Grid, refine: usize) -> Result<f64, OracleError> {
    g.check(f)?;
    let cells = g.faces() * refine.max(1);
    Ok(simpson(|x| interpolate_cubic(f, g, x), 0.0, g.length(), cells))
}
