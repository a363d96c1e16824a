//! Initial-data presets.

use std::f64::consts::PI;

use super::config::{ConfigError, RunConfig, ScenarioName};
use crate::grid_ops::{BoundaryMode, Field, Grid};
use crate::stepper::State;

/// Largest perturbation tolerated at a Dirichlet end before pinning it.
const EDGE_TOL: f64 = 1e-8;

pub fn build_grid(cfg: &RunConfig) -> Result<Grid, ConfigError> {
    Grid::new(cfg.grid.n, cfg.grid.length, cfg.grid.bc)
        .map(|g| g.with_face_mean(cfg.grid.face_mean))
        .map_err(|e| ConfigError::Invalid(e.to_string()))
}

/// Perturbation `(v - 1, u, theta - 1)` of a preset at `x`.
fn profile(cfg: &RunConfig, x: f64) -> (f64, f64, f64) {
    let s = &cfg.scenario;
    let (a, w, c, len) = (s.amplitude, s.width, s.center, cfg.grid.length);
    let bump = (-((x - c) / w).powi(2)).exp();
    match s.name {
        ScenarioName::GaussianBump => (a * bump, a * bump, a * bump),
        ScenarioName::ColdDenseSpot => (
            -(1.0 - s.v_dip) * bump,
            a * bump,
            -(1.0 - s.theta_dip) * bump,
        ),
        ScenarioName::SmoothedRiemann => {
            // Dense hot state on the left of `c`, background on the right,
            // faded to the background within about `w` of either end.
            let left = 0.5 * (1.0 - ((x - c) / w).tanh());
            let fade = ((x / w).tanh() * ((len - x) / w).tanh()).powi(2);
            let b = left * fade;
            ((1.0 / (1.0 + a) - 1.0) * b, 0.0, a * b)
        }
        ScenarioName::Sine => {
            let s = a * (2.0 * PI * x / len).sin();
            (s, s, s)
        }
    }
}

/// Evaluates the configured preset on the grid.
///
/// At Dirichlet ends the state is pinned to the background after checking
/// that the profile has already decayed there.
pub fn build_scenario(cfg: &RunConfig) -> Result<State, ConfigError> {
    let g = build_grid(cfg)?;
    let n = g.n();
    let mut v = Field::constant(n, 1.0);
    let mut u = Field::zeros(n);
    let mut theta = Field::constant(n, 1.0);
    for i in 0..n {
        let x = g.x(i);
        let (dv, du, dth) = profile(cfg, x);
        let edge = g.bc() == BoundaryMode::DirichletBackground && (i == 0 || i == n - 1);
        if edge {
            let m = dv.abs().max(du.abs()).max(dth.abs());
            if m > EDGE_TOL {
                return Err(ConfigError::Invalid(format!(
                    "scenario perturbation {m:e} does not vanish at boundary node {i} (x = {x})"
                )));
            }
            continue;
        }
        v[i] = 1.0 + dv;
        u[i] = du;
        theta[i] = 1.0 + dth;
    }
    for (name, f) in [("v", &v), ("theta", &theta)] {
        let i = f.argmin();
        if !(f[i] > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "scenario gives {name} = {} <= 0 at node {i} (x = {})",
                f[i],
                g.x(i)
            )));
        }
    }
    State::new(g, 0.0, v, u, theta).map_err(|e| ConfigError::Invalid(e.to_string()))
}
