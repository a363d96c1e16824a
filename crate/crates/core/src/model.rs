//! Equation of state, relative entropy and the semidiscrete right-hand side.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid_ops::{self, Field, GridError};
use crate::stepper::State;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{quantity} = {value} is outside the admissible domain")]
    Domain { quantity: &'static str, value: f64 },
    #[error("positivity lost: {field}[{index}] = {value}")]
    Positivity {
        field: &'static str,
        index: usize,
        value: f64,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Physical constants of one model instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Gas constant.
    pub r: f64,
    /// Adiabatic exponent.
    pub gamma: f64,
    /// Brenner coefficient; zero gives the classical system.
    pub tau: f64,
    pub mu: f64,
    pub kappa: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            r: 1.0,
            gamma: 1.4,
            tau: 1.0,
            mu: 1.0,
            kappa: 1.0,
        }
    }
}

impl Params {
    pub fn new(r: f64, gamma: f64, tau: f64, mu: f64, kappa: f64) -> Result<Self, ModelError> {
        let p = Self {
            r,
            gamma,
            tau,
            mu,
            kappa,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |what: &str, v: f64| Err(ModelError::InvalidParams(format!("{what} = {v}")));
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad("R", self.r);
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return bad("gamma", self.gamma);
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return bad("tau", self.tau);
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad("mu", self.mu);
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad("kappa", self.kappa);
        }
        Ok(())
    }

    /// Specific heat at constant pressure, `gamma R / (gamma - 1)`.
    pub fn cp(&self) -> f64 {
        self.gamma * self.r / (self.gamma - 1.0)
    }

    /// Specific heat at constant volume, `R / (gamma - 1)`.
    pub fn cv(&self) -> f64 {
        self.r / (self.gamma - 1.0)
    }

    /// The Brenner coefficient implied by the constitutive relation, `kappa / c_p`.
    pub fn tau_consistent(&self) -> f64 {
        self.kappa / self.cp()
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarPoint {
    pub v: f64,
    pub u: f64,
    pub theta: f64,
}

impl ScalarPoint {
    pub const BACKGROUND: ScalarPoint = ScalarPoint {
        v: 1.0,
        u: 0.0,
        theta: 1.0,
    };

    pub fn new(v: f64, u: f64, theta: f64) -> Self {
        Self { v, u, theta }
    }
}

fn positive(quantity: &'static str, value: f64) -> Result<f64, ModelError> {
    if value > 0.0 {
        Ok(value)
    } else {
        Err(ModelError::Domain { quantity, value })
    }
}

pub fn pressure(pt: ScalarPoint, p: &Params) -> Result<f64, ModelError> {
    let v = positive("v", pt.v)?;
    Ok(p.r * pt.theta / v)
}

pub fn total_energy(pt: ScalarPoint, p: &Params) -> f64 {
    p.cv() * pt.theta + 0.5 * pt.u * pt.u
}

/// `z - 1 - ln z`.
pub fn phi(z: f64) -> Result<f64, ModelError> {
    let z = positive("z", z)?;
    // ln_1p keeps the cancellation near z = 1 under control.
    Ok((z - 1.0) - (z - 1.0).ln_1p())
}

/// Relative entropy with respect to the far-field state (1, 0, 1).
pub fn relative_entropy_density(pt: ScalarPoint, p: &Params) -> Result<f64, ModelError> {
    positive("v", pt.v)?;
    positive("theta", pt.theta)?;
    Ok(p.r * phi(pt.v)? + p.cv() * phi(pt.theta)? + 0.5 * pt.u * pt.u)
}

/// Mass velocity from the volume velocity: `u_v + (kappa / c_p) v_x / v`.
pub fn mass_velocity(u_v: f64, v: f64, v_x: f64, p: &Params) -> Result<f64, ModelError> {
    let v = positive("v", v)?;
    Ok(u_v + p.tau_consistent() * v_x / v)
}

/// The three contributions to the entropy dissipation density.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DissipationParts {
    /// `tau R v_x^2 / v^3`, present only with Brenner diffusion.
    pub mass: f64,
    /// `mu u_x^2 / (v theta)`
    pub momentum: f64,
    /// `kappa theta_x^2 / (v theta^2)`
    pub heat: f64,
}

impl DissipationParts {
    pub fn total(&self) -> f64 {
        self.mass + self.momentum + self.heat
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            mass: s * self.mass,
            momentum: s * self.momentum,
            heat: s * self.heat,
        }
    }
}

impl std::ops::Add for DissipationParts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            mass: self.mass + o.mass,
            momentum: self.momentum + o.momentum,
            heat: self.heat + o.heat,
        }
    }
}

pub fn dissipation_parts(
    pt: ScalarPoint,
    v_x: f64,
    u_x: f64,
    theta_x: f64,
    p: &Params,
) -> Result<DissipationParts, ModelError> {
    let v = positive("v", pt.v)?;
    let th = positive("theta", pt.theta)?;
    Ok(DissipationParts {
        mass: p.tau * p.r * v_x * v_x / (v * v * v),
        momentum: p.mu * u_x * u_x / (v * th),
        heat: p.kappa * theta_x * theta_x / (v * th * th),
    })
}

pub fn entropy_dissipation_density(
    pt: ScalarPoint,
    v_x: f64,
    u_x: f64,
    theta_x: f64,
    p: &Params,
) -> Result<f64, ModelError> {
    dissipation_parts(pt, v_x, u_x, theta_x, p).map(|d| d.total())
}

/// Time derivatives of the three nodal fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Rhs {
    pub v: Field,
    pub u: Field,
    pub theta: Field,
}

/// The individual operator contributions that sum to [`Rhs`].
#[derive(Clone, Debug, PartialEq)]
pub struct RhsTerms {
    /// `u_x`
    pub v_transport: Field,
    /// `tau (v_x / v)_x`
    pub v_diffusion: Field,
    /// `-p_x`
    pub u_pressure: Field,
    /// `mu (u_x / v)_x`
    pub u_viscous: Field,
    /// `-p u_x`
    pub theta_work: Field,
    /// `kappa (theta_x / v)_x`
    pub theta_conduction: Field,
    /// `mu u_x^2 / v`
    pub theta_heating: Field,
}

impl RhsTerms {
    pub fn assemble(&self, p: &Params) -> Rhs {
        let n = self.v_transport.len();
        let inv_cv = 1.0 / p.cv();
        Rhs {
            v: Field::from_fn(n, |i| self.v_transport[i] + self.v_diffusion[i]),
            u: Field::from_fn(n, |i| self.u_pressure[i] + self.u_viscous[i]),
            theta: Field::from_fn(n, |i| {
                inv_cv * (self.theta_work[i] + self.theta_conduction[i] + self.theta_heating[i])
            }),
        }
    }
}

pub(crate) fn check_positive(field: &'static str, f: &[f64]) -> Result<(), ModelError> {
    match f.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        Some((index, &value)) => Err(ModelError::Positivity {
            field,
            index,
            value,
        }),
        None => Ok(()),
    }
}

pub fn rhs_terms(state: &State, p: &Params) -> Result<RhsTerms, ModelError> {
    let g = state.grid();
    check_positive("v", &state.v)?;
    check_positive("theta", &state.theta)?;
    let n = g.n();
    let active = g.active();
    let mask = |f: Field| -> Field { Field::from_fn(n, |i| if active.contains(&i) { f[i] } else { 0.0 }) };

    let wf = grid_ops::face_weights(&state.v, g)?;
    let pres = Field::from_fn(n, |i| p.r * state.theta[i] / state.v[i]);
    let u_x = grid_ops::d1(&state.u, g)?;
    let p_x = grid_ops::d1(&pres, g)?;

    let v_transport = mask(u_x.clone());
    let v_diffusion = grid_ops::div_flux_with_faces(&state.v, &wf, g).map(|x| p.tau * x);
    let u_pressure = mask(p_x.map(|x| -x));
    let u_viscous = grid_ops::div_flux_with_faces(&state.u, &wf, g).map(|x| p.mu * x);
    let theta_work = mask(Field::from_fn(n, |i| -pres[i] * u_x[i]));
    let theta_conduction =
        grid_ops::div_flux_with_faces(&state.theta, &wf, g).map(|x| p.kappa * x);
    let theta_heating =
        grid_ops::face_product_with_faces(&state.u, &state.u, &wf, g).map(|x| p.mu * x);

    Ok(RhsTerms {
        v_transport,
        v_diffusion,
        u_pressure,
        u_viscous,
        theta_work,
        theta_conduction,
        theta_heating,
    })
}

/// Semidiscrete right-hand side of the reformulated system.
///
/// Diffusive terms use the conservative face stencil with face weights from
/// `v`; the heating term is the node average of the face dissipation so that
/// the grid sum of the energy `c_v theta + u^2 / 2` is conserved.
/// Dirichlet end nodes get zero in every component.
pub fn rhs(state: &State, p: &Params) -> Result<Rhs, ModelError> {
    Ok(rhs_terms(state, p)?.assemble(p))
}
