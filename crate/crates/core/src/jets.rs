//! Second-order jets of maps from a planar parameter domain.
//!
//! [`Scalar2`] is a real bivariate 2-jet, [`ComplexJet2`] a holomorphic 2-jet in one
//! complex variable, and [`Jet2`] a vector-valued 2-jet into R^n (n <= 4). All three
//! propagate exact Taylor coefficients; nothing here differentiates numerically.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{GeomError, Result};

pub const MAX_DIM: usize = 4;
pub type Vec4 = [f64; MAX_DIM];

/// Denominators below this magnitude are treated as poles.
pub const POLE_THRESHOLD: f64 = 1e-300;

/// Value, gradient and Hessian of a real function of (x, y).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Scalar2 {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Scalar2 {
    pub fn constant(v: f64) -> Self {
        Self { v, ..Default::default() }
    }

    pub fn var_x(x: f64) -> Self {
        Self { v: x, dx: 1.0, ..Default::default() }
    }

    pub fn var_y(y: f64) -> Self {
        Self { v: y, dy: 1.0, ..Default::default() }
    }

    /// Composes a univariate function given its value and first two derivatives at `self.v`.
    pub fn map(self, f0: f64, f1: f64, f2: f64) -> Self {
        Self {
            v: f0,
            dx: f1 * self.dx,
            dy: f1 * self.dy,
            dxx: f2 * self.dx * self.dx + f1 * self.dxx,
            dxy: f2 * self.dx * self.dy + f1 * self.dxy,
            dyy: f2 * self.dy * self.dy + f1 * self.dyy,
        }
    }

    pub fn scale(self, s: f64) -> Self {
        Self {
            v: self.v * s,
            dx: self.dx * s,
            dy: self.dy * s,
            dxx: self.dxx * s,
            dxy: self.dxy * s,
            dyy: self.dyy * s,
        }
    }

    pub fn recip(self) -> Result<Self> {
        if self.v.abs() < POLE_THRESHOLD {
            return Err(GeomError::DivisionByZeroAtPole(self.v.abs()));
        }
        let r = 1.0 / self.v;
        Ok(self.map(r, -r * r, 2.0 * r * r * r))
    }

    pub fn checked_div(self, rhs: Self) -> Result<Self> {
        Ok(self * rhs.recip()?)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.map(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn ln(self) -> Self {
        self.map(self.v.ln(), 1.0 / self.v, -1.0 / (self.v * self.v))
    }

    pub fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::constant(1.0),
            1 => self,
            _ => {
                let p2 = self.v.powi(n - 2);
                let nf = n as f64;
                self.map(p2 * self.v * self.v, nf * p2 * self.v, nf * (nf - 1.0) * p2)
            }
        }
    }

    /// (d/dx, d/dy) as an array.
    pub fn grad(&self) -> [f64; 2] {
        [self.dx, self.dy]
    }
}

impl Add for Scalar2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxx: self.dxx + o.dxx,
            dxy: self.dxy + o.dxy,
            dyy: self.dyy + o.dyy,
        }
    }
}

impl Sub for Scalar2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Scalar2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Scalar2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            dx: self.dx * o.v + self.v * o.dx,
            dy: self.dy * o.v + self.v * o.dy,
            dxx: self.dxx * o.v + 2.0 * self.dx * o.dx + self.v * o.dxx,
            dxy: self.dxy * o.v + self.dx * o.dy + self.dy * o.dx + self.v * o.dxy,
            dyy: self.dyy * o.v + 2.0 * self.dy * o.dy + self.v * o.dyy,
        }
    }
}

impl Add<f64> for Scalar2 {
    type Output = Self;
    fn add(mut self, c: f64) -> Self {
        self.v += c;
        self
    }
}

impl Mul<f64> for Scalar2 {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        self.scale(c)
    }
}

/// Holomorphic 2-jet: value and first two complex derivatives at `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexJet2 {
    pub z: Complex64,
    pub v: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

impl ComplexJet2 {
    pub fn var(z: Complex64) -> Self {
        Self { z, v: z, d1: Complex64::new(1.0, 0.0), d2: Complex64::new(0.0, 0.0) }
    }

    pub fn constant(z: Complex64, c: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self { z, v: c, d1: zero, d2: zero }
    }

    pub fn scale(self, c: Complex64) -> Self {
        Self { z: self.z, v: self.v * c, d1: self.d1 * c, d2: self.d2 * c }
    }

    pub fn recip(self) -> Result<Self> {
        let n = self.v.norm();
        if n < POLE_THRESHOLD {
            return Err(GeomError::DivisionByZeroAtPole(n));
        }
        let r = self.v.inv();
        let d1 = -self.d1 * r * r;
        let d2 = (2.0 * self.d1 * self.d1 * r - self.d2) * r * r;
        Ok(Self { z: self.z, v: r, d1, d2 })
    }

    pub fn checked_div(self, rhs: Self) -> Result<Self> {
        let n = rhs.v.norm();
        if n < POLE_THRESHOLD {
            return Err(GeomError::DivisionByZeroAtPole(n));
        }
        let q = self.v / rhs.v;
        let q1 = (self.d1 - q * rhs.d1) / rhs.v;
        let q2 = (self.d2 - 2.0 * q1 * rhs.d1 - q * rhs.d2) / rhs.v;
        Ok(Self { z: self.z, v: q, d1: q1, d2: q2 })
    }

    /// Integer power; negative exponents go through [`ComplexJet2::recip`].
    pub fn powi(self, n: i32) -> Result<Self> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        Ok(match n {
            0 => Self::constant(self.z, Complex64::new(1.0, 0.0)),
            1 => self,
            _ => {
                let nf = n as f64;
                let p2 = self.v.powi(n - 2);
                let p1 = p2 * self.v;
                Self {
                    z: self.z,
                    v: p1 * self.v,
                    d1: nf * p1 * self.d1,
                    d2: nf * (nf - 1.0) * p2 * self.d1 * self.d1 + nf * p1 * self.d2,
                }
            }
        })
    }
}

impl Add for ComplexJet2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { z: self.z, v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for ComplexJet2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { z: self.z, v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Neg for ComplexJet2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self { z: self.z, v: -self.v, d1: -self.d1, d2: -self.d2 }
    }
}

impl Mul for ComplexJet2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            z: self.z,
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

/// Value, first and second partials of a map (x, y) -> R^n.
///
/// `d1 = [∂_x f, ∂_y f]`, `d2 = [∂_xx f, ∂_xy f, ∂_yy f]`. Coordinates past `dim` are zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub point: [f64; 2],
    pub dim: usize,
    pub value: Vec4,
    pub d1: [Vec4; 2],
    pub d2: [Vec4; 3],
}

impl Jet2 {
    pub fn zero(point: [f64; 2], dim: usize) -> Self {
        Self { point, dim, value: [0.0; 4], d1: [[0.0; 4]; 2], d2: [[0.0; 4]; 3] }
    }

    pub fn from_components(point: [f64; 2], comps: &[Scalar2]) -> Self {
        assert!(comps.len() <= MAX_DIM, "ambient dimension above {MAX_DIM}");
        let mut j = Self::zero(point, comps.len());
        for (i, c) in comps.iter().enumerate() {
            j.set_component(i, *c);
        }
        j
    }

    pub fn component(&self, i: usize) -> Scalar2 {
        Scalar2 {
            v: self.value[i],
            dx: self.d1[0][i],
            dy: self.d1[1][i],
            dxx: self.d2[0][i],
            dxy: self.d2[1][i],
            dyy: self.d2[2][i],
        }
    }

    pub fn set_component(&mut self, i: usize, c: Scalar2) {
        self.value[i] = c.v;
        self.d1[0][i] = c.dx;
        self.d1[1][i] = c.dy;
        self.d2[0][i] = c.dxx;
        self.d2[1][i] = c.dxy;
        self.d2[2][i] = c.dyy;
    }

    pub fn components(&self) -> Vec<Scalar2> {
        (0..self.dim).map(|i| self.component(i)).collect()
    }

    /// Second partial ∂_a ∂_b with a, b in {0, 1}.
    pub fn second(&self, a: usize, b: usize) -> &Vec4 {
        &self.d2[a + b]
    }

    pub fn add(&self, other: &Jet2) -> Jet2 {
        let mut out = *self;
        out.dim = self.dim.max(other.dim);
        for i in 0..MAX_DIM {
            out.value[i] += other.value[i];
            for k in 0..2 {
                out.d1[k][i] += other.d1[k][i];
            }
            for k in 0..3 {
                out.d2[k][i] += other.d2[k][i];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Jet2 {
        let mut out = *self;
        for i in 0..MAX_DIM {
            out.value[i] *= s;
            for k in 0..2 {
                out.d1[k][i] *= s;
            }
            for k in 0..3 {
                out.d2[k][i] *= s;
            }
        }
        out
    }

    /// Product with a scalar jet (Leibniz rule).
    pub fn mul_scalar(&self, s: &Scalar2) -> Jet2 {
        let comps: Vec<Scalar2> = (0..self.dim).map(|i| self.component(i) * *s).collect();
        Jet2::from_components(self.point, &comps)
    }

    /// Largest absolute entry of the first-derivative block.
    pub fn d1_scale(&self) -> f64 {
        self.d1.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn d2_scale(&self) -> f64 {
        self.d2.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.value.iter().chain(self.d1.iter().flatten()).chain(self.d2.iter().flatten()).all(|v| v.is_finite())
    }
}

/// How complex components are laid out as real coordinates: real coordinate `j` is
/// `Re(coeff_j * F_{index_j})`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealEmbedding {
    pub coords: Vec<(usize, Complex64)>,
}

impl RealEmbedding {
    /// C^k ≅ R^{2k}: (Re F_1, Im F_1, Re F_2, Im F_2, ...).
    pub fn complex_pairs(k: usize) -> Self {
        let coords = (0..k)
            .flat_map(|i| [(i, Complex64::new(1.0, 0.0)), (i, Complex64::new(0.0, -1.0))])
            .collect();
        Self { coords }
    }

    /// (Re F_1, ..., Re F_k).
    pub fn real_parts(k: usize) -> Self {
        Self { coords: (0..k).map(|i| (i, Complex64::new(1.0, 0.0))).collect() }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Real jet of a holomorphic map laid out by `embedding`.
pub fn holomorphic_to_real_jet(h: &[ComplexJet2], embedding: &RealEmbedding) -> Jet2 {
    let z = h.first().map(|c| c.z).unwrap_or_default();
    let mut out = Jet2::zero([z.re, z.im], embedding.dim());
    let i = Complex64::i();
    for (j, &(k, c)) in embedding.coords.iter().enumerate() {
        let f = &h[k];
        out.value[j] = (c * f.v).re;
        out.d1[0][j] = (c * f.d1).re;
        out.d1[1][j] = (c * i * f.d1).re;
        out.d2[0][j] = (c * f.d2).re;
        out.d2[1][j] = (c * i * f.d2).re;
        out.d2[2][j] = -(c * f.d2).re;
    }
    out
}

/// Value, Jacobian and Hessian tensor of an ambient map R^n -> R^n at a point.
///
/// `first[i][a] = ∂F_i/∂x_a`, `second[i][a][b] = ∂²F_i/∂x_a∂x_b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmbientDerivs {
    pub value: Vec4,
    pub first: [[f64; 4]; 4],
    pub second: [[[f64; 4]; 4]; 4],
}

/// A twice differentiable map of R^n into itself.
pub trait AmbientMap {
    fn derivs(&self, x: &Vec4, dim: usize) -> Result<AmbientDerivs>;
}

/// Chain rule for F ∘ f.
pub fn push_jet_ambient(j: &Jet2, map: &dyn AmbientMap) -> Result<Jet2> {
    let n = j.dim;
    let d = map.derivs(&j.value, n)?;
    let mut out = Jet2::zero(j.point, n);
    out.value = d.value;
    for i in 0..n {
        for k in 0..2 {
            out.d1[k][i] = (0..n).map(|a| d.first[i][a] * j.d1[k][a]).sum();
        }
        for (kl, (k, l)) in [(0, 0), (0, 1), (1, 1)].into_iter().enumerate() {
            let mut s = 0.0;
            for a in 0..n {
                s += d.first[i][a] * j.d2[kl][a];
                for b in 0..n {
                    s += d.second[i][a][b] * j.d1[k][a] * j.d1[l][b];
                }
            }
            out.d2[kl][i] = s;
        }
    }
    Ok(out)
}

/// 2-jet of a planar map w -> (u(w), v(w)).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanarJet {
    pub point: [f64; 2],
    pub u: Scalar2,
    pub v: Scalar2,
}

impl PlanarJet {
    pub fn identity(w: [f64; 2]) -> Self {
        Self { point: w, u: Scalar2::var_x(w[0]), v: Scalar2::var_y(w[1]) }
    }

    /// w -> 1/conj(w) = w/|w|^2, an involution of the punctured plane.
    pub fn inv_conj(w: [f64; 2]) -> Result<Self> {
        let x = Scalar2::var_x(w[0]);
        let y = Scalar2::var_y(w[1]);
        let r2 = x * x + y * y;
        if r2.v < POLE_THRESHOLD {
            return Err(GeomError::DegenerateReparam);
        }
        let inv = r2.recip()?;
        Ok(Self { point: w, u: x * inv, v: y * inv })
    }

    /// w -> -w.
    pub fn negate(w: [f64; 2]) -> Self {
        Self { point: w, u: -Scalar2::var_x(w[0]), v: -Scalar2::var_y(w[1]) }
    }

    /// w -> s * w.
    pub fn dilate(w: [f64; 2], s: f64) -> Self {
        Self { point: w, u: Scalar2::var_x(w[0]) * s, v: Scalar2::var_y(w[1]) * s }
    }

    pub fn target(&self) -> [f64; 2] {
        [self.u.v, self.v.v]
    }

    pub fn jacobian_det(&self) -> f64 {
        self.u.dx * self.v.dy - self.u.dy * self.v.dx
    }
}

/// Chain rule for f ∘ φ, where `j` is the jet of f at φ(w).
pub fn reparam_jet(j: &Jet2, phi: &PlanarJet) -> Result<Jet2> {
    let det = phi.jacobian_det();
    if !det.is_finite() || det.abs() < POLE_THRESHOLD {
        return Err(GeomError::DegenerateReparam);
    }
    let g = [phi.u.grad(), phi.v.grad()];
    let h = [[phi.u.dxx, phi.u.dxy, phi.u.dyy], [phi.v.dxx, phi.v.dxy, phi.v.dyy]];
    let mut out = Jet2::zero(phi.point, j.dim);
    out.value = j.value;
    for i in 0..j.dim {
        for k in 0..2 {
            out.d1[k][i] = j.d1[0][i] * g[0][k] + j.d1[1][i] * g[1][k];
        }
        for (kl, (k, l)) in [(0, 0), (0, 1), (1, 1)].into_iter().enumerate() {
            let mut s = 0.0;
            for a in 0..2 {
                s += j.d1[a][i] * h[a][kl];
                for b in 0..2 {
                    s += j.second(a, b)[i] * g[a][k] * g[b][l];
                }
            }
            out.d2[kl][i] = s;
        }
    }
    Ok(out)
}
