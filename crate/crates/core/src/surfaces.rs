//! Parametrized surfaces: chart atlases with domains, singular points and integration glue.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geometry::{densities, DensityKind};
use crate::jets::{holomorphic_to_real_jet, reparam_jet, ComplexJet2, Jet2, PlanarJet, RealEmbedding, Scalar2};
use crate::quad::{
    halton_annulus, integrate_annulus_n, integrate_disk_singular_n, integrate_plane_n, QuadConfig, QuadResultN,
};

pub type ChartFn = Arc<dyn Fn([f64; 2]) -> Result<Jet2> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Disk(f64),
    Annulus(f64, f64),
    Plane,
}

/// One chart together with the parameter region it contributes to integrals.
#[derive(Clone)]
pub struct Patch {
    pub chart: ChartFn,
    pub domain: Domain,
    /// The chart origin is a branch point, an end, or otherwise non-smooth.
    pub singular_origin: bool,
    /// Radii where the chart is only finitely differentiable (cutoff seams).
    pub breaks: Vec<f64>,
    /// The chart origin is an end, so the area integral diverges there.
    pub end_at_origin: bool,
}

impl Patch {
    pub fn new(chart: ChartFn, domain: Domain) -> Self {
        Self { chart, domain, singular_origin: false, breaks: Vec::new(), end_at_origin: false }
    }

    pub fn singular(mut self) -> Self {
        self.singular_origin = true;
        self
    }

    /// Marks the origin as an end (implies a singular origin).
    pub fn end_at_origin(mut self) -> Self {
        self.singular_origin = true;
        self.end_at_origin = true;
        self
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }

    pub fn eval(&self, p: [f64; 2]) -> Result<Jet2> {
        (self.chart)(p)
    }

    /// Integrals of all five densities over the patch domain.
    ///
    /// Area is not integrated over the plane or next to an end at the origin (it diverges for
    /// every complete surface); that component is reported as zero there.
    pub fn integrate(&self, cfg: &QuadConfig) -> Result<QuadResultN<5>> {
        let f = |p: [f64; 2]| densities(&self.eval(p)?);
        let finite_area = |p: [f64; 2]| {
            let mut d = densities(&self.eval(p)?);
            if let Ok(v) = d.as_mut() {
                v[DensityKind::Area.index()] = 0.0;
            }
            d
        };
        match self.domain {
            Domain::Disk(r) if self.end_at_origin => {
                integrate_disk_singular_n(&finite_area, r, &self.breaks, cfg, [0.0; 5])
            }
            Domain::Disk(r) if self.singular_origin => integrate_disk_singular_n(&f, r, &self.breaks, cfg, [0.0; 5]),
            Domain::Disk(r) => integrate_annulus_n(&f, 0.0, r, &self.breaks, cfg, [0.0; 5]),
            Domain::Annulus(a, b) => integrate_annulus_n(&f, a, b, &self.breaks, cfg, [0.0; 5]),
            Domain::Plane => integrate_plane_n(&finite_area, self.singular_origin, &self.breaks, cfg),
        }
    }
}

impl fmt::Debug for Patch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Patch")
            .field("domain", &self.domain)
            .field("singular_origin", &self.singular_origin)
            .field("breaks", &self.breaks)
            .field("end_at_origin", &self.end_at_origin)
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SingularKind {
    Branch { order: u32 },
    End { multiplicity: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub patch: usize,
    /// Parameter of the point; `None` for the point at infinity of a plane patch.
    pub param: Option<[f64; 2]>,
    pub kind: SingularKind,
}

/// Topology of the closed parametrized surface (or of the compactification of an open one).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub chi: i32,
    pub branch_orders: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct ParametrizedSurface {
    pub id: String,
    pub patches: Vec<Patch>,
    pub singular_points: Vec<SingularPoint>,
    pub holomorphic: bool,
    pub ambient_dim: usize,
    /// Factor applied to every integral; 0.5 when the atlas double covers the surface.
    pub weight: f64,
    pub closed: bool,
    /// Patch 1 is patch 0 composed with w -> 1/conj(w) on the whole plane.
    pub inversion_pair: bool,
    pub topology: Option<Topology>,
}

impl ParametrizedSurface {
    pub fn open(id: impl Into<String>, patch: Patch, ambient_dim: usize) -> Self {
        Self {
            id: id.into(),
            patches: vec![patch],
            singular_points: Vec::new(),
            holomorphic: false,
            ambient_dim,
            weight: 1.0,
            closed: false,
            inversion_pair: false,
            topology: None,
        }
    }

    pub fn eval(&self, patch: usize, p: [f64; 2]) -> Result<Jet2> {
        self.patches
            .get(patch)
            .ok_or_else(|| GeomError::InvalidInput(format!("surface {} has no patch {patch}", self.id)))?
            .eval(p)
    }

    /// Weighted integrals of all five densities, summed over patches in order.
    pub fn integrate_all(&self, cfg: &QuadConfig) -> Result<QuadResultN<5>> {
        let mut out = QuadResultN::<5>::default();
        for p in &self.patches {
            out.accumulate(&p.integrate(cfg)?);
        }
        Ok(out.scaled(self.weight))
    }

    /// Generalized Gauss-Bonnet value 2π(χ + Σ branch orders − Σ (end multiplicity + 1)) times
    /// the weight, when the topology is known.
    pub fn gauss_bonnet_target(&self) -> Option<f64> {
        let t = self.topology.as_ref()?;
        let m: u32 = t.branch_orders.iter().sum();
        let ends: u32 = self
            .singular_points
            .iter()
            .filter_map(|sp| match sp.kind {
                SingularKind::End { multiplicity } => Some(multiplicity + 1),
                _ => None,
            })
            .sum();
        Some(self.weight * 2.0 * PI * (t.chi as f64 + m as f64 - ends as f64))
    }

    /// Same surface with the two charts of an inversion pair split at |z| = s instead of 1.
    pub fn with_split(&self, s: f64) -> Result<Self> {
        if !self.inversion_pair || self.patches.len() != 2 || !(s > 0.0) {
            return Err(GeomError::InvalidInput("split radius needs an inversion pair of disk charts".into()));
        }
        let mut out = self.clone();
        out.patches[0].domain = Domain::Disk(s);
        out.patches[1].domain = Domain::Disk(1.0 / s);
        Ok(out)
    }

    /// Deterministic sample parameters away from chart origins that are singular.
    pub fn sample_params(&self, n: usize) -> Vec<(usize, [f64; 2])> {
        let per = n.div_ceil(self.patches.len().max(1));
        let mut out = Vec::new();
        for (k, p) in self.patches.iter().enumerate() {
            let (a, b) = match p.domain {
                Domain::Disk(r) => (if p.singular_origin { 0.02 * r } else { 0.0 }, r),
                Domain::Annulus(a, b) => (a, b),
                Domain::Plane => (if p.singular_origin { 0.05 } else { 0.0 }, 3.0),
            };
            out.extend(halton_annulus(per, a, b).into_iter().map(|q| (k, q)));
        }
        out.truncate(n);
        out
    }
}

/// Chart from holomorphic component functions.
pub fn holomorphic_chart<F>(f: F, embedding: RealEmbedding) -> ChartFn
where
    F: Fn(ComplexJet2) -> Result<Vec<ComplexJet2>> + Send + Sync + 'static,
{
    Arc::new(move |p: [f64; 2]| {
        let z = ComplexJet2::var(Complex64::new(p[0], p[1]));
        Ok(holomorphic_to_real_jet(&f(z)?, &embedding))
    })
}

/// Chart w -> chart(1/conj(w)).
pub fn pulled_by_inv_conj(chart: ChartFn) -> ChartFn {
    Arc::new(move |w: [f64; 2]| {
        let phi = PlanarJet::inv_conj(w)?;
        reparam_jet(&chart(phi.target())?, &phi)
    })
}

/// Chart w -> chart(-w).
pub fn pulled_by_negation(chart: ChartFn) -> ChartFn {
    Arc::new(move |w: [f64; 2]| {
        let phi = PlanarJet::negate(w);
        reparam_jet(&chart(phi.target())?, &phi)
    })
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn zero_like(z: &ComplexJet2) -> ComplexJet2 {
    ComplexJet2::constant(z.z, c(0.0))
}

fn plane_surface(id: String, chart: ChartFn, dim: usize, singular_origin: bool) -> ParametrizedSurface {
    let mut patch = Patch::new(chart, Domain::Plane);
    patch.singular_origin = singular_origin;
    let mut s = ParametrizedSurface::open(id, patch, dim);
    s.holomorphic = true;
    s
}

/// (z^m, z) in C^2 = R^4.
pub fn power_graph(m: u32) -> Result<ParametrizedSurface> {
    if m < 2 {
        return Err(GeomError::InvalidInput(format!("power graph needs m >= 2, got {m}")));
    }
    let chart = holomorphic_chart(move |z| Ok(vec![z.powi(m as i32)?, z]), RealEmbedding::complex_pairs(2));
    let mut s = plane_surface(format!("power:{m}"), chart, 4, false);
    s.singular_points.push(SingularPoint { patch: 0, param: None, kind: SingularKind::End { multiplicity: m } });
    s.topology = Some(Topology { chi: 2, branch_orders: vec![] });
    Ok(s)
}

/// The Chen graph (z^2, z).
pub fn chen_graph() -> ParametrizedSurface {
    let mut s = power_graph(2).expect("m = 2 is valid");
    s.id = "chen".into();
    s
}

/// The m-fold branched plane (z^m, 0).
pub fn branched_plane(m: u32) -> Result<ParametrizedSurface> {
    if m < 1 {
        return Err(GeomError::InvalidInput("branched plane needs m >= 1".into()));
    }
    let chart =
        holomorphic_chart(move |z| Ok(vec![z.powi(m as i32)?, zero_like(&z)]), RealEmbedding::complex_pairs(2));
    let mut s = plane_surface(format!("plane:{m}"), chart, 4, m >= 2);
    if m >= 2 {
        s.singular_points.push(SingularPoint {
            patch: 0,
            param: Some([0.0, 0.0]),
            kind: SingularKind::Branch { order: m - 1 },
        });
    }
    s.singular_points.push(SingularPoint { patch: 0, param: None, kind: SingularKind::End { multiplicity: m } });
    s.topology = Some(Topology { chi: 2, branch_orders: if m >= 2 { vec![m - 1] } else { vec![] } });
    Ok(s)
}

/// Holomorphic components of the higher-order Enneper surface of order m:
/// (z - z^(2m+1)/(2m+1), i(z + z^(2m+1)/(2m+1)), 2 z^(m+1)/(m+1)), real parts taken.
pub fn higher_enneper_components(z: ComplexJet2, m: u32) -> Result<Vec<ComplexJet2>> {
    let n = 2 * m + 1;
    let high = z.powi(n as i32)?.scale(c(1.0 / n as f64));
    let i = Complex64::i();
    Ok(vec![z - high, (z + high).scale(i), z.powi(m as i32 + 1)?.scale(c(2.0 / (m as f64 + 1.0)))])
}

pub fn higher_enneper(m: u32) -> Result<ParametrizedSurface> {
    if m < 1 {
        return Err(GeomError::InvalidInput("higher Enneper surface needs m >= 1".into()));
    }
    let chart = holomorphic_chart(move |z| higher_enneper_components(z, m), RealEmbedding::real_parts(3));
    let mut s = plane_surface(format!("henneper:{m}"), chart, 3, false);
    s.singular_points.push(SingularPoint {
        patch: 0,
        param: None,
        kind: SingularKind::End { multiplicity: 2 * m + 1 },
    });
    s.topology = Some(Topology { chi: 2, branch_orders: vec![] });
    Ok(s)
}

/// Enneper's surface -(1/9)(z^3, 0) + (1/3)(x, -y, x^2 - y^2) in R^3.
///
/// This is exactly one third of the order-1 higher Enneper surface.
pub fn enneper() -> ParametrizedSurface {
    let chart = holomorphic_chart(
        |z| Ok(higher_enneper_components(z, 1)?.into_iter().map(|f| f.scale(c(1.0 / 3.0))).collect()),
        RealEmbedding::real_parts(3),
    );
    let mut s = plane_surface("enneper".into(), chart, 3, false);
    s.singular_points.push(SingularPoint { patch: 0, param: None, kind: SingularKind::End { multiplicity: 3 } });
    s.topology = Some(Topology { chi: 2, branch_orders: vec![] });
    s
}

/// Inverse stereographic projection of the plane onto the unit sphere, as scalar jets.
fn sphere_point(p: [f64; 2], south: bool) -> Result<[Scalar2; 3]> {
    let x = Scalar2::var_x(p[0]);
    let y = Scalar2::var_y(p[1]);
    let r2 = x * x + y * y;
    let inv = (r2 + 1.0).recip()?;
    let third = if south { (-r2 + 1.0) * inv } else { (r2 + -1.0) * inv };
    Ok([x * inv * 2.0, y * inv * 2.0, third])
}

/// Closed two-chart surface from a map of the unit sphere: chart 0 covers the sphere through
/// z -> (2x, 2y, |z|^2 - 1)/(1 + |z|^2), chart 1 is chart 0 composed with w -> 1/conj(w).
fn two_chart_sphere<F>(id: String, dim: usize, map: F) -> ParametrizedSurface
where
    F: Fn([f64; 2], [Scalar2; 3]) -> Result<Jet2> + Send + Sync + 'static,
{
    let map = Arc::new(map);
    let m0 = map.clone();
    let c0: ChartFn = Arc::new(move |p| m0(p, sphere_point(p, false)?));
    let c1: ChartFn = Arc::new(move |p| map(p, sphere_point(p, true)?));
    ParametrizedSurface {
        id,
        patches: vec![Patch::new(c0, Domain::Disk(1.0)), Patch::new(c1, Domain::Disk(1.0))],
        singular_points: Vec::new(),
        holomorphic: false,
        ambient_dim: dim,
        weight: 1.0,
        closed: true,
        inversion_pair: true,
        topology: Some(Topology { chi: 2, branch_orders: vec![] }),
    }
}

pub fn round_sphere(r: f64) -> Result<ParametrizedSurface> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(GeomError::InvalidInput(format!("sphere radius {r}")));
    }
    Ok(two_chart_sphere(format!("sphere:{r}"), 3, move |p, s| {
        Ok(Jet2::from_components(p, &s.map(|c| c * r)))
    }))
}

/// Radius of the sphere S^4 containing the Veronese image.
pub const VERONESE_RADIUS: f64 = 1.0 / 3.0;

/// The Veronese map of the unit sphere into S^4(1/3) in R^5.
pub fn veronese_map(p: [Scalar2; 3]) -> [Scalar2; 5] {
    let [x, y, z] = p;
    let a = 1.0 / 3f64.sqrt();
    [
        y * z * a,
        x * z * a,
        x * y * a,
        (x * x - y * y) * (0.5 * a),
        (x * x + y * y - z * z * 2.0) * (a / (2.0 * 3f64.sqrt())),
    ]
}

/// Stereographic projection of S^4(1/3) from (0, 0, 0, 0, 1/3) to R^4.
fn project_from_top_pole(v: [Scalar2; 5]) -> Result<[Scalar2; 4]> {
    let r = VERONESE_RADIUS;
    let inv = (-v[4] + r).recip()?;
    Ok([v[0] * inv * r, v[1] * inv * r, v[2] * inv * r, v[3] * inv * r])
}

/// Stereographic image of the Veronese surface, parametrized over its sphere double cover.
/// Integrals are halved so that energies refer to the projective plane.
pub fn veronese_stereographic() -> ParametrizedSurface {
    let mut s = two_chart_sphere("veronese".into(), 4, |p, sp| {
        Ok(Jet2::from_components(p, &project_from_top_pole(veronese_map(sp))?))
    });
    s.weight = 0.5;
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{conformal_factor, fundamental_forms};

    fn fd_audit(s: &ParametrizedSurface, n: usize) {
        let h = 1e-4;
        for (k, p) in s.sample_params(n) {
            let j = s.eval(k, p).unwrap();
            let at = |dx: f64, dy: f64| s.eval(k, [p[0] + dx, p[1] + dy]).unwrap().value;
            let scale = 1.0 + j.d1_scale() + j.d2_scale();
            for i in 0..s.ambient_dim {
                let fx = (at(h, 0.0)[i] - at(-h, 0.0)[i]) / (2.0 * h);
                let fy = (at(0.0, h)[i] - at(0.0, -h)[i]) / (2.0 * h);
                let fxx = (at(h, 0.0)[i] - 2.0 * j.value[i] + at(-h, 0.0)[i]) / (h * h);
                let fyy = (at(0.0, h)[i] - 2.0 * j.value[i] + at(0.0, -h)[i]) / (h * h);
                let fxy = (at(h, h)[i] - at(h, -h)[i] - at(-h, h)[i] + at(-h, -h)[i]) / (4.0 * h * h);
                for (a, b) in [
                    (fx, j.d1[0][i]),
                    (fy, j.d1[1][i]),
                    (fxx, j.d2[0][i]),
                    (fxy, j.d2[1][i]),
                    (fyy, j.d2[2][i]),
                ] {
                    assert!((a - b).abs() <= 1e-6 * scale, "{} patch {k} at {p:?}: {a} vs {b}", s.id);
                }
            }
        }
    }

    #[test]
    fn zoo_jets_match_finite_differences() {
        for s in [
            chen_graph(),
            power_graph(3).unwrap(),
            enneper(),
            higher_enneper(2).unwrap(),
            round_sphere(1.5).unwrap(),
            veronese_stereographic(),
        ] {
            fd_audit(&s, 100);
        }
    }

    #[test]
    fn power_graph_two_is_chen() {
        let a = chen_graph();
        let b = power_graph(2).unwrap();
        for (k, p) in a.sample_params(20) {
            assert_eq!(a.eval(k, p).unwrap(), b.eval(k, p).unwrap());
        }
    }

    #[test]
    fn branched_plane_is_flat_and_branched() {
        let s = branched_plane(3).unwrap();
        let c = fundamental_forms(&s.eval(0, [0.4, -0.2]).unwrap()).unwrap();
        assert!(c.a_sq.abs() < 1e-24);
        assert!(matches!(fundamental_forms(&s.eval(0, [0.0, 0.0]).unwrap()), Err(GeomError::DegenerateMetric(_))));
    }

    #[test]
    fn enneper_is_a_third_of_order_one_higher_enneper() {
        let e = enneper();
        let h = higher_enneper(1).unwrap();
        for (_, p) in e.sample_params(30) {
            let a = e.eval(0, p).unwrap();
            let b = h.eval(0, p).unwrap().scale(1.0 / 3.0);
            for i in 0..3 {
                assert!((a.value[i] - b.value[i]).abs() < 1e-12);
            }
            // Direct formula -(1/9)(z^3, 0) + (1/3)(x, -y, x^2 - y^2).
            let z = Complex64::new(p[0], p[1]);
            let z3 = z * z * z;
            let direct = [-z3.re / 9.0 + p[0] / 3.0, -z3.im / 9.0 - p[1] / 3.0, (p[0] * p[0] - p[1] * p[1]) / 3.0];
            for i in 0..3 {
                assert!((a.value[i] - direct[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn minimal_zoo_members_have_no_mean_curvature() {
        for s in [chen_graph(), enneper(), higher_enneper(3).unwrap()] {
            for (k, p) in s.sample_params(100) {
                let j = s.eval(k, p).unwrap();
                let c = fundamental_forms(&j).unwrap();
                assert!(c.h_sq.sqrt() <= 1e-9 * (1.0 + c.a_sq.sqrt()), "{}", s.id);
                assert!(conformal_factor(&j).unwrap().1 <= 1e-10);
            }
        }
    }

    #[test]
    fn veronese_lands_on_small_sphere_and_is_even() {
        for (_, p) in round_sphere(1.0).unwrap().sample_params(1000) {
            let sp = sphere_point(p, false).unwrap();
            let v = veronese_map(sp);
            let norm: f64 = v.iter().map(|c| c.v * c.v).sum::<f64>().sqrt();
            assert!((norm - VERONESE_RADIUS).abs() < 1e-14);
            let neg = veronese_map([
                Scalar2::constant(-sp[0].v),
                Scalar2::constant(-sp[1].v),
                Scalar2::constant(-sp[2].v),
            ]);
            for i in 0..5 {
                assert!((neg[i].v - v[i].v).abs() < 1e-15);
            }
            assert!(v[4].v <= 1.0 / 6.0 + 1e-15);
        }
    }

    #[test]
    fn sphere_charts_agree_on_the_overlap() {
        let s = round_sphere(2.0).unwrap();
        for t in [0.1f64, 1.3, 2.9, 4.4] {
            let w = [t.cos() * 1.05, t.sin() * 1.05];
            let via = pulled_by_inv_conj(s.patches[0].chart.clone())(w).unwrap();
            let direct = s.eval(1, w).unwrap();
            for i in 0..3 {
                assert!((via.value[i] - direct.value[i]).abs() < 1e-10);
                for k in 0..3 {
                    assert!((via.d2[k][i] - direct.d2[k][i]).abs() < 1e-10);
                }
            }
        }
    }
}
