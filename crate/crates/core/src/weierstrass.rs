//! Minimal surfaces from Weierstrass data (g, η) given as rational expressions.
//!
//! The immersion is f(z) = Re ∫_b^z (Φ₁, Φ₂, Φ₃) with Φ₁ = ½(1 − g²)η, Φ₂ = (i/2)(1 + g²)η,
//! Φ₃ = gη. Only the value needs a path integral: first and second partials come directly
//! from Φ and Φ′.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::expr::{parse_expression, Expr};
use crate::jets::{holomorphic_to_real_jet, ComplexJet2, Jet2, RealEmbedding};
use crate::quad::halton_annulus;
use crate::surfaces::{ChartFn, Domain, ParametrizedSurface, Patch, SingularKind, SingularPoint, Topology};

/// Loop integrals whose real part exceeds this are period obstructions.
pub const PERIOD_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Involution {
    Identity,
    /// z -> -1/conj(z)
    MinusInvConj,
}

impl Involution {
    pub fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Involution::Identity => z,
            Involution::MinusInvConj => -1.0 / z.conj(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeierstrassData {
    pub g: Expr,
    pub eta: Expr,
    pub punctures: Vec<Complex64>,
    pub basepoint: Complex64,
    pub involution: Option<Involution>,
}

impl WeierstrassData {
    pub fn parse(g: &str, eta: &str, punctures: Vec<Complex64>, basepoint: Complex64) -> Result<Self> {
        Ok(Self { g: parse_expression(g)?, eta: parse_expression(eta)?, punctures, basepoint, involution: None })
    }

    /// Meeks' minimal Möbius strip: g = z²(z+1)/(z−1), η = i(z−1)²/z⁴ dz on C \ {0}.
    pub fn meeks() -> Self {
        let mut d = Self::parse("z^2*(z+1)/(z-1)", "i*(z-1)^2/z^4", vec![Complex64::new(0.0, 0.0)], Complex64::new(1.0, 0.0))
            .expect("fixed expressions parse");
        d.involution = Some(Involution::MinusInvConj);
        d
    }

    /// g = z, η = dz.
    pub fn enneper() -> Self {
        Self::parse("z", "1", vec![], Complex64::new(0.0, 0.0)).expect("fixed expressions parse")
    }

    /// (Φ₁, Φ₂, Φ₃) at z, sharing one evaluation of g and η.
    ///
    /// Where g or η has a pole cancelled in the product (Meeks' data at z = 1), the forms are
    /// recovered from their Cauchy integrals over a small circle.
    pub fn forms_at(&self, z: Complex64) -> Result<[Complex64; 3]> {
        match self.forms_direct(z) {
            Err(GeomError::DivisionByZeroAtPole(_)) => Ok(self.forms_removable(z)?.map(|j| j.v)),
            other => other,
        }
    }

    /// The forms as holomorphic jets (value Φ, d1 Φ′, d2 Φ″).
    pub fn forms_jet(&self, z: Complex64) -> Result<[ComplexJet2; 3]> {
        match self.forms_jet_direct(z) {
            Err(GeomError::DivisionByZeroAtPole(_)) => self.forms_removable(z),
            other => other,
        }
    }

    fn forms_removable(&self, z: Complex64) -> Result<[ComplexJet2; 3]> {
        const N: usize = 32;
        let eps = 1e-2 * z.norm().max(1e-3);
        let zero = Complex64::new(0.0, 0.0);
        let mut out = [ComplexJet2 { z, v: zero, d1: zero, d2: zero }; 3];
        for k in 0..N {
            let e = Complex64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / N as f64);
            let f = self.forms_direct(z + eps * e)?;
            for (o, v) in out.iter_mut().zip(f) {
                o.v += v / N as f64;
                o.d1 += v / (e * eps * N as f64);
                o.d2 += 2.0 * v / (e * e * eps * eps * N as f64);
            }
        }
        if out.iter().any(|j| !(j.v.norm() + j.d1.norm() + j.d2.norm()).is_finite()) {
            return Err(GeomError::DivisionByZeroAtPole(0.0));
        }
        Ok(out)
    }

    fn forms_direct(&self, z: Complex64) -> Result<[Complex64; 3]> {
        let g = self.g.eval(z)?;
        let eta = self.eta.eval(z)?;
        let g2 = g * g;
        let i = Complex64::i();
        Ok([0.5 * (1.0 - g2) * eta, 0.5 * i * (1.0 + g2) * eta, g * eta])
    }

    fn forms_jet_direct(&self, z: Complex64) -> Result<[ComplexJet2; 3]> {
        let g = self.g.eval_jet(z)?;
        let eta = self.eta.eval_jet(z)?;
        let one = ComplexJet2::constant(z, Complex64::new(1.0, 0.0));
        let g2 = g * g;
        Ok([
            ((one - g2) * eta).scale(Complex64::new(0.5, 0.0)),
            ((one + g2) * eta).scale(Complex64::new(0.0, 0.5)),
            g * eta,
        ])
    }
}

/// The three Weierstrass forms as expression trees.
pub fn weierstrass_forms(d: &WeierstrassData) -> [Expr; 3] {
    let g2 = d.g.clone().pow(2);
    let one = Expr::constant(1.0, 0.0);
    [
        Expr::constant(0.5, 0.0).mul(one.clone().sub(g2.clone())).mul(d.eta.clone()),
        Expr::constant(0.0, 0.5).mul(one.add(g2)).mul(d.eta.clone()),
        d.g.clone().mul(d.eta.clone()),
    ]
}

/// ∮ f(z) dz over the circle |z − center| = radius, trapezoidal rule doubled to convergence.
pub fn loop_integral<F>(f: F, center: Complex64, radius: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let rule = |n: usize| -> Result<Complex64> {
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
            s += f(center + radius * e)? * Complex64::i() * radius * e;
        }
        Ok(s * (2.0 * PI / n as f64))
    };
    let mut prev = rule(32)?;
    let mut n = 64;
    loop {
        let cur = rule(n)?;
        let scale = (0..n).try_fold(0.0f64, |m, k| {
            let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
            Ok::<f64, GeomError>(m.max(f(center + radius * e)?.norm() * radius * 2.0 * PI))
        })?;
        if (cur - prev).norm() <= 1e-14 * scale.max(1e-300) || n >= 1 << 16 {
            return Ok(cur);
        }
        prev = cur;
        n *= 2;
    }
}

/// Loop integral of a form around a puncture; any nonzero period is an obstruction here
/// (the primitive must be single valued, which also makes the conjugate surface well defined).
pub fn period_check(phi: &Expr, puncture: Complex64, radius: f64) -> Result<Complex64> {
    let p = loop_integral(|z| phi.eval(z), puncture, radius)?;
    if p.norm() > PERIOD_TOL {
        return Err(GeomError::PeriodObstruction { re: p.re, im: p.im });
    }
    Ok(p)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

type C3 = [Complex64; 3];

fn add3(a: C3, b: C3) -> C3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn norm3(a: &C3) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Gauss-Kronrod 7/15 on [t0, t1] of f(t); returns (Kronrod value, |K − G|).
fn gk15<F>(f: &F, t0: f64, t1: f64) -> Result<(C3, f64)>
where
    F: Fn(f64) -> Result<C3>,
{
    let h = 0.5 * (t1 - t0);
    let m = 0.5 * (t1 + t0);
    let zero = Complex64::new(0.0, 0.0);
    let mut k = [zero; 3];
    let mut g = [zero; 3];
    for j in 0..8 {
        let pts: &[f64] = if j == 7 { &[0.0] } else { &[-1.0, 1.0] };
        for s in pts {
            let v = f(m + s * h * XGK[j])?;
            for c in 0..3 {
                k[c] += WGK[j] * v[c];
                if j % 2 == 1 {
                    g[c] += WG[j / 2] * v[c];
                }
            }
        }
    }
    let k = k.map(|v| v * h);
    let g = g.map(|v| v * h);
    Ok((k, norm3(&[k[0] - g[0], k[1] - g[1], k[2] - g[2]])))
}

fn adaptive<F>(f: &F, t0: f64, t1: f64, whole: (C3, f64), abs_tol: f64, rel_tol: f64, depth: u32) -> Result<C3>
where
    F: Fn(f64) -> Result<C3>,
{
    let (val, err) = whole;
    if !err.is_finite() {
        return Err(GeomError::InvalidInput("non-finite value on the integration path".into()));
    }
    if err <= abs_tol.max(rel_tol * norm3(&val)) || depth >= 48 {
        return Ok(val);
    }
    let tm = 0.5 * (t0 + t1);
    let left = gk15(f, t0, tm)?;
    let right = gk15(f, tm, t1)?;
    Ok(add3(
        adaptive(f, t0, tm, left, 0.5 * abs_tol, rel_tol, depth + 1)?,
        adaptive(f, tm, t1, right, 0.5 * abs_tol, rel_tol, depth + 1)?,
    ))
}

fn integrate_path<F>(f: F, abs_tol: f64, rel_tol: f64) -> Result<C3>
where
    F: Fn(f64) -> Result<C3>,
{
    let whole = gk15(&f, 0.0, 1.0)?;
    adaptive(&f, 0.0, 1.0, whole, abs_tol, rel_tol, 0)
}

/// Wraps an angle difference into (−π, π].
fn wrap(a: f64) -> f64 {
    let mut d = a % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

const ARC_CACHE_LIMIT: usize = 1 << 20;

/// A minimal immersion integrated from Weierstrass data.
#[derive(Debug)]
pub struct WeierstrassImmersion {
    pub data: WeierstrassData,
    pub tol: f64,
    base_radius: f64,
    base_arg: f64,
    arc_cache: RwLock<HashMap<u64, C3>>,
}

impl WeierstrassImmersion {
    fn integrand(&self, z: Complex64, dz: Complex64) -> Result<C3> {
        Ok(self.data.forms_at(z)?.map(|v| v * dz))
    }

    fn check_point(&self, z: Complex64) -> Result<()> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(GeomError::InvalidInput(format!("parameter {z}")));
        }
        for p in &self.data.punctures {
            if (z - p).norm() < 1e-300 {
                return Err(GeomError::PathThroughPole(format!("{p}")));
            }
        }
        Ok(())
    }

    fn arc(&self, radius: f64, from: f64, to: f64) -> Result<C3> {
        let d = wrap(to - from);
        for p in &self.data.punctures {
            if (p.norm() - radius).abs() <= 1e-12 * radius.max(1.0) {
                let off = wrap(p.arg() - from);
                if (d >= 0.0 && off >= 0.0 && off <= d) || (d < 0.0 && off <= 0.0 && off >= d) {
                    return Err(GeomError::PathThroughPole(format!("{p}")));
                }
            }
        }
        integrate_path(
            |t| {
                let a = from + d * t;
                let e = Complex64::from_polar(1.0, a);
                self.integrand(radius * e, Complex64::i() * radius * e * d)
            },
            0.1 * self.tol,
            1e-14,
        )
    }

    fn radial(&self, arg: f64, r0: f64, r1: f64) -> Result<C3> {
        let e = Complex64::from_polar(1.0, arg);
        for p in &self.data.punctures {
            let r = p.norm();
            let on_ray = r == 0.0 || wrap(p.arg() - arg).abs() <= 1e-12;
            if on_ray && r >= r0.min(r1) && r <= r0.max(r1) {
                return Err(GeomError::PathThroughPole(format!("{p}")));
            }
        }
        if r0 == 0.0 || r1 == 0.0 {
            return integrate_path(|t| self.integrand((r0 + (r1 - r0) * t) * e, e * (r1 - r0)), 0.1 * self.tol, 1e-14);
        }
        // Geometric parametrization r = r0 (r1/r0)^t keeps relative resolution near 0 and ∞.
        let lr = (r1 / r0).ln();
        integrate_path(
            |t| {
                let r = r0 * (lr * t).exp();
                self.integrand(r * e, e * r * lr)
            },
            0.1 * self.tol,
            1e-14,
        )
    }

    fn cached_arc(&self, theta: f64) -> Result<C3> {
        let key = theta.to_bits();
        if let Some(v) = self.arc_cache.read().expect("arc cache lock").get(&key) {
            return Ok(*v);
        }
        let v = self.arc(self.base_radius, self.base_arg, theta)?;
        let mut w = self.arc_cache.write().expect("arc cache lock");
        if w.len() >= ARC_CACHE_LIMIT {
            w.clear();
        }
        w.insert(key, v);
        Ok(v)
    }

    /// ∫_b^z Φ along the arc |w| = |b| and then the radial segment to z.
    pub fn complex_value(&self, z: Complex64) -> Result<C3> {
        self.check_point(z)?;
        let theta = z.arg();
        let a = self.cached_arc(theta)?;
        if z.norm() == self.base_radius {
            return Ok(a);
        }
        Ok(add3(a, self.radial(theta, self.base_radius, z.norm())?))
    }

    /// Same integral along the radial segment first, then the arc |w| = |z|.
    pub fn complex_value_radial_first(&self, z: Complex64) -> Result<C3> {
        self.check_point(z)?;
        let r = self.radial(self.base_arg, self.base_radius, z.norm())?;
        Ok(add3(r, self.arc(z.norm(), self.base_arg, z.arg())?))
    }

    pub fn value(&self, z: Complex64) -> Result<[f64; 3]> {
        Ok(self.complex_value(z)?.map(|c| c.re))
    }

    pub fn jet(&self, p: [f64; 2]) -> Result<Jet2> {
        let z = Complex64::new(p[0], p[1]);
        let forms = self.data.forms_jet(z)?;
        let prim = self.complex_value(z)?;
        let h: Vec<ComplexJet2> =
            (0..3).map(|k| ComplexJet2 { z, v: prim[k], d1: forms[k].v, d2: forms[k].d1 }).collect();
        Ok(holomorphic_to_real_jet(&h, &RealEmbedding::real_parts(3)))
    }

    /// Multiplicity of the end at `at` (`None` for infinity), read off from the pole order of Φ.
    pub fn end_multiplicity(&self, at: Option<Complex64>) -> Result<u32> {
        let order = |eps: f64| -> Result<f64> {
            let mut best = 0.0f64;
            for k in 0..8 {
                let e = Complex64::from_polar(1.0, 0.3 + k as f64 * PI / 4.0);
                let (z1, z2) = match at {
                    Some(p) => (p + eps * e, p + 2.0 * eps * e),
                    None => (e / eps, e / (2.0 * eps)),
                };
                let a = norm3(&self.data.forms_at(z1)?);
                let b = norm3(&self.data.forms_at(z2)?);
                best = best.max((a / b).ln() / 2f64.ln());
            }
            Ok(best)
        };
        let k = order(1e-5)?.round();
        // Pole order k of Φ at a finite puncture gives multiplicity k − 1; growth |Φ| ~ |z|^j
        // at infinity corresponds to pole order j + 2 in w = 1/z.
        let mult = match at {
            Some(_) => k - 1.0,
            None => k + 1.0,
        };
        if mult < 1.0 {
            return Err(GeomError::InvalidInput("no end at the requested point".into()));
        }
        Ok(mult as u32)
    }

    /// Plane-domain surface; a puncture at the origin makes the chart origin singular.
    /// Non-orientable data (with the involution z -> −1/z̄) is weighted ½.
    pub fn surface(self: &Arc<Self>, id: impl Into<String>) -> Result<ParametrizedSurface> {
        if self.data.punctures.iter().any(|p| p.norm() != 0.0) {
            return Err(GeomError::InvalidInput("only a puncture at the origin is supported for integration".into()));
        }
        let me = self.clone();
        let chart: ChartFn = Arc::new(move |p| me.jet(p));
        let mut patch = Patch::new(chart, Domain::Plane);
        let mut s = ParametrizedSurface::open(id, patch.clone(), 3);
        if !self.data.punctures.is_empty() {
            patch.singular_origin = true;
            s.patches[0] = patch;
            s.singular_points.push(SingularPoint {
                patch: 0,
                param: Some([0.0, 0.0]),
                kind: SingularKind::End { multiplicity: self.end_multiplicity(Some(Complex64::new(0.0, 0.0)))? },
            });
        }
        s.singular_points.push(SingularPoint {
            patch: 0,
            param: None,
            kind: SingularKind::End { multiplicity: self.end_multiplicity(None)? },
        });
        s.holomorphic = true;
        s.topology = Some(Topology { chi: 2, branch_orders: vec![] });
        if self.data.involution == Some(Involution::MinusInvConj) {
            s.weight = 0.5;
        }
        Ok(s)
    }
}

/// Builds the immersion after checking that no form has a real period around any puncture.
pub fn weierstrass_immersion(d: WeierstrassData, tol: f64) -> Result<Arc<WeierstrassImmersion>> {
    for p in &d.punctures {
        let r = 0.5 * d.punctures.iter().filter(|q| *q != p).map(|q| (q - p).norm()).fold(1.0, f64::min);
        for k in 0..3 {
            let per = loop_integral(|z| Ok(d.forms_at(z)?[k]), *p, r)?;
            if per.re.abs() > PERIOD_TOL {
                return Err(GeomError::PeriodObstruction { re: per.re, im: per.im });
            }
        }
    }
    if d.punctures.iter().any(|p| (d.basepoint - p).norm() < 1e-12) || d.forms_at(d.basepoint).is_err() {
        return Err(GeomError::PathThroughPole(format!("basepoint {}", d.basepoint)));
    }
    let base_radius = d.basepoint.norm();
    let base_arg = d.basepoint.arg();
    if base_radius == 0.0 && !d.punctures.is_empty() {
        return Err(GeomError::PathThroughPole("basepoint at the origin".into()));
    }
    Ok(Arc::new(WeierstrassImmersion { data: d, tol, base_radius, base_arg, arc_cache: RwLock::new(HashMap::new()) }))
}

/// Meeks' minimal Möbius strip on its orientable double cover C \ {0}, weighted ½.
pub fn meeks_surface(tol: f64) -> Result<ParametrizedSurface> {
    weierstrass_immersion(WeierstrassData::meeks(), tol)?.surface("meeks")
}

/// Sup over samples of |f(I(z)) − f(z) − c| with the constant c fitted by least squares.
pub fn involution_check(imm: &WeierstrassImmersion, involution: Involution, samples: usize) -> Result<f64> {
    let pts = halton_annulus(samples, 0.3, 3.0);
    let mut diffs = Vec::with_capacity(pts.len());
    for p in pts {
        let z = Complex64::new(p[0], p[1]);
        let a = imm.value(involution.apply(z))?;
        let b = imm.value(z)?;
        diffs.push([a[0] - b[0], a[1] - b[1], a[2] - b[2]]);
    }
    let n = diffs.len() as f64;
    let mean: [f64; 3] = std::array::from_fn(|i| diffs.iter().map(|d| d[i]).sum::<f64>() / n);
    Ok(diffs.iter().fold(0.0f64, |m, d| {
        m.max(((d[0] - mean[0]).powi(2) + (d[1] - mean[1]).powi(2) + (d[2] - mean[2]).powi(2)).sqrt())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{conformal_factor, fundamental_forms};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn meeks_third_form_cancels_to_laurent_polynomial() {
        let d = WeierstrassData::meeks();
        let forms = weierstrass_forms(&d);
        for p in halton_annulus(20, 0.2, 3.0) {
            let z = c(p[0], p[1]);
            let expected = c(0.0, 1.0) * (z * z - 1.0) / (z * z);
            assert!((forms[2].eval(z).unwrap() - expected).norm() <= 1e-12 * expected.norm().max(1.0));
            let direct = d.forms_at(z).unwrap();
            for k in 0..3 {
                assert!((forms[k].eval(z).unwrap() - direct[k]).norm() <= 1e-12 * direct[k].norm().max(1.0));
            }
        }
    }

    #[test]
    fn flat_data_gives_constant_forms() {
        let d = WeierstrassData::parse("0", "1", vec![], c(0.0, 0.0)).unwrap();
        let f = d.forms_at(c(0.7, -0.1)).unwrap();
        assert_eq!(f, [c(0.5, 0.0), c(0.0, 0.5), c(0.0, 0.0)]);
    }

    #[test]
    fn meeks_periods_vanish() {
        let forms = weierstrass_forms(&WeierstrassData::meeks());
        for f in &forms {
            assert!(period_check(f, c(0.0, 0.0), 0.5).unwrap().norm() <= 1e-10);
        }
    }

    #[test]
    fn simple_pole_is_an_obstruction() {
        let f = parse_expression("1/z").unwrap();
        match period_check(&f, c(0.0, 0.0), 1.0) {
            Err(GeomError::PeriodObstruction { re, im }) => {
                assert!(re.abs() < 1e-12);
                assert!((im - 2.0 * PI).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn real_period_blocks_the_immersion() {
        // η = i/z dz with g = 0: Φ₁ = i/(2z) has loop integral −π, a real period.
        let d = WeierstrassData::parse("0", "i/z", vec![c(0.0, 0.0)], c(1.0, 0.0)).unwrap();
        assert!(matches!(weierstrass_immersion(d, 1e-12), Err(GeomError::PeriodObstruction { .. })));
    }

    #[test]
    fn enneper_data_reproduces_closed_form() {
        // g = z, η = dz: f = Re(z/2 − z³/6, i(z/2 + z³/6), z²/2).
        let imm = weierstrass_immersion(WeierstrassData::enneper(), 1e-13).unwrap();
        for p in halton_annulus(20, 0.1, 2.0) {
            let z = c(p[0], p[1]);
            let v = imm.value(z).unwrap();
            let z3 = z * z * z;
            let exact = [(z / 2.0 - z3 / 6.0).re, (c(0.0, 1.0) * (z / 2.0 + z3 / 6.0)).re, (z * z / 2.0).re];
            for i in 0..3 {
                assert!((v[i] - exact[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn meeks_is_minimal_conformal_and_path_independent() {
        let imm = weierstrass_immersion(WeierstrassData::meeks(), 1e-13).unwrap();
        for p in halton_annulus(40, 0.2, 4.0) {
            let z = c(p[0], p[1]);
            let j = imm.jet(p).unwrap();
            let cd = fundamental_forms(&j).unwrap();
            assert!(cd.h_sq.sqrt() <= 1e-8 * (1.0 + cd.a_sq.sqrt()));
            assert!(conformal_factor(&j).unwrap().1 <= 1e-9);
            let a = imm.complex_value(z).unwrap();
            let b = imm.complex_value_radial_first(z).unwrap();
            let scale = 1.0 + norm3(&a);
            for k in 0..3 {
                assert!((a[k].re - b[k].re).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn meeks_value_matches_third_coordinate_primitive() {
        // Re ∫_1^z i(1 − w⁻²) dw = Re i(z + 1/z) − Re 2i = Re i(z + 1/z).
        let imm = weierstrass_immersion(WeierstrassData::meeks(), 1e-13).unwrap();
        for p in halton_annulus(20, 0.3, 3.0) {
            let z = c(p[0], p[1]);
            let exact = (c(0.0, 1.0) * (z + 1.0 / z)).re;
            assert!((imm.value(z).unwrap()[2] - exact).abs() < 1e-11);
        }
    }

    #[test]
    fn involution_behaviour() {
        let meeks = weierstrass_immersion(WeierstrassData::meeks(), 1e-13).unwrap();
        assert!(involution_check(&meeks, Involution::MinusInvConj, 50).unwrap() <= 1e-8);
        assert_eq!(involution_check(&meeks, Involution::Identity, 10).unwrap(), 0.0);
        let enn = weierstrass_immersion(WeierstrassData::enneper(), 1e-13).unwrap();
        assert!(involution_check(&enn, Involution::MinusInvConj, 50).unwrap() > 1e-2);
    }

    #[test]
    fn meeks_ends_are_triple() {
        let imm = weierstrass_immersion(WeierstrassData::meeks(), 1e-13).unwrap();
        assert_eq!(imm.end_multiplicity(Some(c(0.0, 0.0))).unwrap(), 3);
        assert_eq!(imm.end_multiplicity(None).unwrap(), 3);
    }

    #[test]
    fn origin_is_a_pole_of_the_path() {
        let imm = weierstrass_immersion(WeierstrassData::meeks(), 1e-13).unwrap();
        assert!(matches!(imm.value(c(0.0, 0.0)), Err(GeomError::PathThroughPole(_))));
    }
}
