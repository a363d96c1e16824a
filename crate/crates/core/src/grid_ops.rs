//! Discrete calculus on a uniform mesh in the mass coordinate.
//!
//! Nodes sit at `x_i = i * h`. In Dirichlet-background mode the two end
//! nodes are pinned to the far-field state and operators that feed the
//! time stepper return zero there. In periodic mode node `n - 1` wraps to
//! node `0` and face `j` joins nodes `j` and `(j + 1) % n`.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid: n = {n} (need n >= 3), h = {h} (need h > 0)")]
    InvalidGrid { n: usize, h: f64 },
    #[error("field length {found} does not match grid size {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("nonpositive diffusion weight {value} at node {index}")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("zero pivot in tridiagonal elimination at row {row}")]
    ZeroPivot { row: usize },
    #[error("seminorm order {0} exceeds the supported maximum of 3")]
    OrderTooHigh(usize),
    #[error("field does not vanish where required (|f| = {value} at node {index})")]
    NotDecaying { index: usize, value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// End nodes held at (v, u, theta) = (1, 0, 1).
    DirichletBackground,
    Periodic,
}

/// How a nodal weight is averaged onto a cell face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceMean {
    #[default]
    Harmonic,
    Arithmetic,
}

impl FaceMean {
    #[inline]
    pub fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            FaceMean::Harmonic => 2.0 * a * b / (a + b),
            FaceMean::Arithmetic => 0.5 * (a + b),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    h: f64,
    bc: BoundaryMode,
    face_mean: FaceMean,
}

impl Grid {
    /// Grid of `n` nodes covering a domain of the given length.
    ///
    /// Dirichlet grids include both end points (`h = L / (n - 1)`); periodic
    /// grids omit the duplicate end point (`h = L / n`).
    pub fn new(n: usize, length: f64, bc: BoundaryMode) -> Result<Self, GridError> {
        let cells = match bc {
            BoundaryMode::DirichletBackground => n.saturating_sub(1),
            BoundaryMode::Periodic => n,
        };
        Self::with_spacing(n, length / cells as f64, bc)
    }

    pub fn with_spacing(n: usize, h: f64, bc: BoundaryMode) -> Result<Self, GridError> {
        if n < 3 || !(h > 0.0) || !h.is_finite() {
            return Err(GridError::InvalidGrid { n, h });
        }
        Ok(Self {
            n,
            h,
            bc,
            face_mean: FaceMean::Harmonic,
        })
    }

    pub fn with_face_mean(mut self, face_mean: FaceMean) -> Self {
        self.face_mean = face_mean;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bc(&self) -> BoundaryMode {
        self.bc
    }

    pub fn face_mean(&self) -> FaceMean {
        self.face_mean
    }

    pub fn is_periodic(&self) -> bool {
        self.bc == BoundaryMode::Periodic
    }

    pub fn length(&self) -> f64 {
        match self.bc {
            BoundaryMode::DirichletBackground => (self.n - 1) as f64 * self.h,
            BoundaryMode::Periodic => self.n as f64 * self.h,
        }
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    /// Node coordinates.
    pub fn nodes(&self) -> Field {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Number of faces carrying a flux.
    pub fn faces(&self) -> usize {
        match self.bc {
            BoundaryMode::DirichletBackground => self.n - 1,
            BoundaryMode::Periodic => self.n,
        }
    }

    /// Range of nodes that evolve in time (all nodes when periodic).
    pub fn active(&self) -> std::ops::Range<usize> {
        match self.bc {
            BoundaryMode::DirichletBackground => 1..self.n - 1,
            BoundaryMode::Periodic => 0..self.n,
        }
    }

    /// Trapezoid weight of node `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        match self.bc {
            BoundaryMode::DirichletBackground if i == 0 || i == self.n - 1 => 0.5 * self.h,
            _ => self.h,
        }
    }

    /// Trapezoidal integral of nodal values over the domain.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        f.iter().enumerate().map(|(i, &fi)| self.weight(i) * fi).sum()
    }

    /// Integral of `g(i)` with trapezoid weights.
    pub fn integrate_by<F: FnMut(usize) -> f64>(&self, mut g: F) -> f64 {
        (0..self.n).map(|i| self.weight(i) * g(i)).sum()
    }

    pub fn check(&self, f: &[f64]) -> Result<(), GridError> {
        if f.len() != self.n {
            return Err(GridError::SizeMismatch {
                expected: self.n,
                found: f.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn next(&self, i: usize) -> usize {
        if i + 1 == self.n {
            0
        } else {
            i + 1
        }
    }

    #[inline]
    fn prev(&self, i: usize) -> usize {
        if i == 0 {
            self.n - 1
        } else {
            i - 1
        }
    }
}

/// Nodal values aligned with a [`Grid`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn from_fn<F: FnMut(usize) -> f64>(n: usize, f: F) -> Self {
        Self((0..n).map(f).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map<F: FnMut(f64) -> f64>(&self, f: F) -> Field {
        Field(self.0.iter().copied().map(f).collect())
    }

    /// Node index of the minimum value (first one on ties).
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &x) in self.0.iter().enumerate() {
            if x < self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &x) in self.0.iter().enumerate() {
            if x > self.0[best] {
                best = i;
            }
        }
        best
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl FromIterator<f64> for Field {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// First derivative: centered in the interior, second-order one-sided at
/// Dirichlet ends, wrap-around when periodic.
pub fn d1(f: &[f64], g: &Grid) -> Result<Field, GridError> {
    g.check(f)?;
    let n = g.n;
    let inv2h = 0.5 / g.h;
    let mut out = Field::zeros(n);
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) * inv2h;
    }
    match g.bc {
        BoundaryMode::Periodic => {
            out[0] = (f[1] - f[n - 1]) * inv2h;
            out[n - 1] = (f[0] - f[n - 2]) * inv2h;
        }
        BoundaryMode::DirichletBackground => {
            out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2h;
            out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2h;
        }
    }
    Ok(out)
}

/// Face-averaged weights `w_{j+1/2}` using the grid's [`FaceMean`].
pub fn face_weights(w: &[f64], g: &Grid) -> Result<Vec<f64>, GridError> {
    g.check(w)?;
    if let Some((index, &value)) = w.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(GridError::NonPositiveWeight { index, value });
    }
    Ok((0..g.faces())
        .map(|j| g.face_mean.combine(w[j], w[g.next(j)]))
        .collect())
}

/// Conservative discretization of `(f_x / w)_x`.
///
/// Face flux `F_{j+1/2} = (f_{j+1} - f_j) / (h w_{j+1/2})`; the nodal value
/// is the flux difference over `h`. Dirichlet end nodes receive zero.
pub fn div_flux_diffusion(f: &[f64], w: &[f64], g: &Grid) -> Result<Field, GridError> {
    g.check(f)?;
    let wf = face_weights(w, g)?;
    Ok(div_flux_with_faces(f, &wf, g))
}

pub(crate) fn div_flux_with_faces(f: &[f64], wf: &[f64], g: &Grid) -> Field {
    let n = g.n;
    let h = g.h;
    let flux: Vec<f64> = (0..g.faces())
        .map(|j| (f[g.next(j)] - f[j]) / (h * wf[j]))
        .collect();
    let mut out = Field::zeros(n);
    for i in g.active() {
        let left = flux[if g.is_periodic() { g.prev(i) } else { i - 1 }];
        out[i] = (flux[i] - left) / h;
    }
    out
}

/// Node average of the face products `(a_{j+1} - a_j)(b_{j+1} - b_j) / (h^2 w_{j+1/2})`.
///
/// With `a = b = u` this is the viscous heating density `u_x^2 / v` in the
/// form whose grid sum matches the momentum stencil's dissipation exactly.
pub fn face_product_average(
    a: &[f64],
    b: &[f64],
    w: &[f64],
    g: &Grid,
) -> Result<Field, GridError> {
    g.check(a)?;
    g.check(b)?;
    let wf = face_weights(w, g)?;
    Ok(face_product_with_faces(a, b, &wf, g))
}

pub(crate) fn face_product_with_faces(a: &[f64], b: &[f64], wf: &[f64], g: &Grid) -> Field {
    let h2 = g.h * g.h;
    let prod: Vec<f64> = (0..g.faces())
        .map(|j| {
            let k = g.next(j);
            (a[k] - a[j]) * (b[k] - b[j]) / (h2 * wf[j])
        })
        .collect();
    let mut out = Field::zeros(g.n);
    for i in g.active() {
        let left = prod[if g.is_periodic() { g.prev(i) } else { i - 1 }];
        out[i] = 0.5 * (prod[i] + left);
    }
    out
}

/// Tridiagonal system `A x = rhs`.
///
/// Row `i` reads `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1]`. When
/// `periodic` is set the corner entries are `A[0][n-1] = sub[0]` and
/// `A[n-1][0] = sup[n-1]`; otherwise those two slots are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiag {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub rhs: Vec<f64>,
    pub periodic: bool,
}

impl Tridiag {
    pub fn zeros(n: usize, periodic: bool) -> Self {
        Self {
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
            rhs: vec![0.0; n],
            periodic,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Matrix-vector product `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.sub[i] * x[i - 1];
                } else if self.periodic {
                    s += self.sub[0] * x[n - 1];
                }
                if i + 1 < n {
                    s += self.sup[i] * x[i + 1];
                } else if self.periodic {
                    s += self.sup[n - 1] * x[0];
                }
                s
            })
            .collect()
    }

    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            let mut off = 0.0;
            if i > 0 || self.periodic {
                off += self.sub[i].abs();
            }
            if i + 1 < n || self.periodic {
                off += self.sup[i].abs();
            }
            self.diag[i].abs() > off
        })
    }

    /// Dense copy, for oracles and debugging.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = self.diag[i];
            if i > 0 {
                a[i][i - 1] += self.sub[i];
            } else if self.periodic {
                a[0][n - 1] += self.sub[0];
            }
            if i + 1 < n {
                a[i][i + 1] += self.sup[i];
            } else if self.periodic {
                a[n - 1][0] += self.sup[n - 1];
            }
        }
        a
    }
}

fn thomas_in_place(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>, GridError> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(GridError::ZeroPivot { row: 0 });
    }
    c[0] = sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(GridError::ZeroPivot { row: i });
        }
        c[i] = if i + 1 < n { sup[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Solves a tridiagonal system by the Thomas algorithm; periodic systems
/// go through a Sherman-Morrison rank-one correction of the corners.
pub fn thomas_solve(sys: &Tridiag) -> Result<Field, GridError> {
    let n = sys.len();
    for v in [&sys.sub, &sys.sup, &sys.rhs] {
        if v.len() != n {
            return Err(GridError::SizeMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    if n == 0 {
        return Ok(Field::default());
    }
    if !sys.periodic || n == 1 {
        let mut sub = sys.sub.clone();
        sub[0] = 0.0;
        return thomas_in_place(&sub, &sys.diag, &sys.sup, &sys.rhs).map(Field::from);
    }
    if n == 2 {
        // Corners coincide with the off-diagonals; solve the 2x2 directly.
        let a = sys.to_dense();
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(GridError::ZeroPivot { row: 1 });
        }
        let r = &sys.rhs;
        return Ok(Field::from(vec![
            (r[0] * a[1][1] - a[0][1] * r[1]) / det,
            (a[0][0] * r[1] - a[1][0] * r[0]) / det,
        ]));
    }

    let alpha = sys.sup[n - 1]; // A[n-1][0]
    let beta = sys.sub[0]; // A[0][n-1]
    let gamma = -sys.diag[0];
    let mut diag = sys.diag.clone();
    diag[0] -= gamma;
    diag[n - 1] -= alpha * beta / gamma;
    let mut sub = sys.sub.clone();
    sub[0] = 0.0;

    let y = thomas_in_place(&sub, &diag, &sys.sup, &sys.rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas_in_place(&sub, &diag, &sys.sup, &u)?;

    let vy = y[0] + beta / gamma * y[n - 1];
    let vz = z[0] + beta / gamma * z[n - 1];
    let denom = 1.0 + vz;
    if denom == 0.0 || !denom.is_finite() {
        return Err(GridError::ZeroPivot { row: n - 1 });
    }
    let factor = vy / denom;
    Ok(y.iter().zip(&z).map(|(yi, zi)| yi - factor * zi).collect())
}

/// Trapezoid-weighted discrete L2 norm.
pub fn l2_norm(f: &[f64], g: &Grid) -> f64 {
    g.integrate_by(|i| f[i] * f[i]).sqrt()
}

pub fn linf_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `[|f|, |f'|, ..., |f^(k)|]` in the discrete L2 norm, derivatives by
/// repeated [`d1`].
pub fn hk_seminorms(f: &[f64], g: &Grid, k: usize) -> Result<Vec<f64>, GridError> {
    if k > 3 {
        return Err(GridError::OrderTooHigh(k));
    }
    g.check(f)?;
    let mut out = Vec::with_capacity(k + 1);
    let mut cur = Field::from(f.to_vec());
    out.push(l2_norm(&cur, g));
    for _ in 0..k {
        cur = d1(&cur, g)?;
        out.push(l2_norm(&cur, g));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevCheck {
    /// `|f|_inf^2`
    pub lhs: f64,
    /// `|f|_2 |f'|_2`
    pub rhs: f64,
    pub pass: bool,
}

impl SobolevCheck {
    pub fn ratio(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else {
            0.0
        }
    }
}

/// Discrete check of `|f|_inf^2 <= C |f|_2 |f'|_2` with `C = 1 + 10 h`.
///
/// The unit constant needs a zero of `f`: the two end values on a Dirichlet
/// grid, or some node on a periodic one.
pub fn sobolev_check(f: &[f64], g: &Grid) -> Result<SobolevCheck, GridError> {
    g.check(f)?;
    let sup = linf_norm(f);
    let zero_tol = 1e-10 * sup.max(f64::MIN_POSITIVE);
    match g.bc {
        BoundaryMode::DirichletBackground => {
            for index in [0, g.n - 1] {
                if f[index].abs() > zero_tol {
                    return Err(GridError::NotDecaying {
                        index,
                        value: f[index].abs(),
                    });
                }
            }
        }
        BoundaryMode::Periodic => {
            let index = f.iter().map(|x| x.abs()).collect::<Field>().argmin();
            if f[index].abs() > zero_tol {
                return Err(GridError::NotDecaying {
                    index,
                    value: f[index].abs(),
                });
            }
        }
    }
    let lhs = sup * sup;
    let rhs = l2_norm(f, g) * l2_norm(&d1(f, g)?, g);
    Ok(SobolevCheck {
        lhs,
        rhs,
        pass: lhs <= (1.0 + 10.0 * g.h) * rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn periodic(n: usize, l: f64) -> Grid {
        Grid::new(n, l, BoundaryMode::Periodic).unwrap()
    }

    fn dirichlet(n: usize, l: f64) -> Grid {
        Grid::new(n, l, BoundaryMode::DirichletBackground).unwrap()
    }

    #[test]
    fn grid_rejects_degenerate_sizes() {
        assert!(Grid::new(2, 1.0, BoundaryMode::Periodic).is_err());
        assert!(Grid::new(5, 0.0, BoundaryMode::DirichletBackground).is_err());
        assert!(Grid::with_spacing(5, f64::NAN, BoundaryMode::Periodic).is_err());
        let g = dirichlet(11, 1.0);
        assert!((g.h() - 0.1).abs() < 1e-15);
        assert!((g.length() - 1.0).abs() < 1e-15);
        let p = periodic(10, 1.0);
        assert!((p.h() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn d1_constant_and_linear() {
        let g = dirichlet(17, 2.0);
        let c = d1(&Field::constant(17, 3.5), &g).unwrap();
        assert!(c.iter().all(|&x| x == 0.0));
        let lin = g.nodes();
        let dl = d1(&lin, &g).unwrap();
        for i in 1..16 {
            assert!((dl[i] - 1.0).abs() < 1e-12, "node {i}: {}", dl[i]);
        }
        // One-sided second-order ends are exact on linears too.
        assert!((dl[0] - 1.0).abs() < 1e-12 && (dl[16] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn d1_size_mismatch() {
        let g = dirichlet(5, 1.0);
        assert_eq!(
            d1(&[1.0, 2.0], &g),
            Err(GridError::SizeMismatch {
                expected: 5,
                found: 2
            })
        );
    }

    #[test]
    fn div_flux_exact_on_quadratic() {
        let g = dirichlet(21, 1.0);
        let f: Field = g.nodes().map(|x| x * x);
        let out = div_flux_diffusion(&f, &Field::constant(21, 1.0), &g).unwrap();
        for i in 1..20 {
            assert!((out[i] - 2.0).abs() < 1e-9, "node {i}: {}", out[i]);
        }
        assert_eq!(out[0], 0.0);
        assert_eq!(out[20], 0.0);
    }

    #[test]
    fn div_flux_rejects_nonpositive_weight() {
        let g = periodic(6, 1.0);
        let mut w = Field::constant(6, 1.0);
        w[3] = 0.0;
        assert!(matches!(
            div_flux_diffusion(&Field::zeros(6), &w, &g),
            Err(GridError::NonPositiveWeight { index: 3, .. })
        ));
    }

    #[test]
    fn arithmetic_face_mean_differs() {
        let g = periodic(8, 1.0);
        let ga = g.with_face_mean(FaceMean::Arithmetic);
        let f: Field = g.nodes().map(|x| (2.0 * PI * x).sin());
        let w: Field = g.nodes().map(|x| 2.0 + (2.0 * PI * x).cos());
        let a = div_flux_diffusion(&f, &w, &g).unwrap();
        let b = div_flux_diffusion(&f, &w, &ga).unwrap();
        assert!(a.iter().zip(b.iter()).any(|(x, y)| x != y));
    }

    #[test]
    fn thomas_identity() {
        let mut sys = Tridiag::zeros(5, false);
        sys.diag = vec![1.0; 5];
        sys.rhs = vec![1.0, -2.0, 3.0, 0.5, 9.0];
        let x = thomas_solve(&sys).unwrap();
        assert_eq!(&*x, &sys.rhs[..]);
    }

    #[test]
    fn thomas_recovers_ramp() {
        let n = 12;
        let mut sys = Tridiag::zeros(n, false);
        sys.sub = vec![-1.0; n];
        sys.sup = vec![-1.0; n];
        sys.diag = vec![2.0; n];
        let truth: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        sys.rhs = sys.apply(&truth);
        let x = thomas_solve(&sys).unwrap();
        for (a, b) in x.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn thomas_periodic_corners() {
        let n = 7;
        let mut sys = Tridiag::zeros(n, true);
        sys.sub = vec![-1.0; n];
        sys.sup = vec![-1.0; n];
        sys.diag = vec![4.0; n];
        sys.sub[0] = -0.7;
        sys.sup[n - 1] = -0.3;
        let truth: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        sys.rhs = sys.apply(&truth);
        let x = thomas_solve(&sys).unwrap();
        let r = sys.apply(&x);
        let scale = linf_norm(&sys.rhs);
        for (ri, bi) in r.iter().zip(&sys.rhs) {
            assert!((ri - bi).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn thomas_zero_pivot() {
        let mut sys = Tridiag::zeros(3, false);
        sys.rhs = vec![1.0; 3];
        assert_eq!(thomas_solve(&sys), Err(GridError::ZeroPivot { row: 0 }));
    }

    #[test]
    fn norms_of_simple_fields() {
        let g = dirichlet(33, 1.0);
        assert_eq!(l2_norm(&Field::zeros(33), &g), 0.0);
        let one = Field::constant(33, 1.0);
        assert!((l2_norm(&one, &g) - 1.0).abs() < 1e-14);
        let s = hk_seminorms(&one, &g, 3).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-14);
        assert!(s[1..].iter().all(|&x| x == 0.0));
        assert_eq!(hk_seminorms(&one, &g, 4), Err(GridError::OrderTooHigh(4)));
        assert_eq!(linf_norm(&[-3.0, 2.0]), 3.0);
    }

    #[test]
    fn sobolev_zero_and_tent() {
        let g = dirichlet(2001, 2.0);
        let z = sobolev_check(&Field::zeros(2001), &g).unwrap();
        assert!(z.pass && z.lhs == 0.0 && z.rhs == 0.0);
        // Height-one tent on [0.5, 1.5]: |f|_2 |f'|_2 = sqrt(1/3) * 2.
        let tent: Field = g.nodes().map(|x| (1.0 - 2.0 * (x - 1.0).abs()).max(0.0));
        let c = sobolev_check(&tent, &g).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-12);
        assert!((c.rhs - 2.0 / 3f64.sqrt()).abs() < 5e-3, "{}", c.rhs);
        assert!(c.pass);
    }

    #[test]
    fn sobolev_requires_zero() {
        let g = periodic(16, 1.0);
        assert!(matches!(
            sobolev_check(&Field::constant(16, 1.0), &g),
            Err(GridError::NotDecaying { .. })
        ));
        let d = dirichlet(16, 1.0);
        assert!(matches!(
            sobolev_check(&Field::constant(16, 1.0), &d),
            Err(GridError::NotDecaying { index: 0, .. })
        ));
    }
}
