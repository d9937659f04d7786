//! Cutoff glueings of rescaled minimal surfaces into branched planes.
//!
//! Every family follows the same sequence: the single glue h_ρ over the plane, its image
//! h̃_ρ(w) = I(h_ρ(1/w̄)) under the unit inversion, the doubly glued surface h̄_ρ obtained by
//! inserting a second copy of h_ρ into the branched part of h̃_ρ, and the closed sphere
//! ĥ_ρ = I_{x0}(s·h̄_ρ).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::jets::{holomorphic_to_real_jet, ComplexJet2, Jet2, RealEmbedding, Scalar2, Vec4};
use crate::mobius::{
    push_chart, select_inversion_center, select_inversion_center_near, transform_surface, MobiusMap, DELTA_SAFE,
};
use crate::quad::halton_annulus;
use crate::surfaces::{
    pulled_by_inv_conj, pulled_by_negation, ChartFn, Domain, ParametrizedSurface, Patch, SingularKind,
    SingularPoint, Topology,
};
use crate::weierstrass::meeks_surface;

/// Radial profile φ̂(r/R): 1 on r ≤ R/2, 0 on r ≥ R, C⁴ in between (degree 9 smoothstep).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub radius: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self { radius: 1.0 }
    }
}

fn smoothstep(t: f64) -> [f64; 3] {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t2 * t2;
    let u = 1.0 - t;
    let u3 = u * u * u;
    [
        t4 * t * (126.0 - 420.0 * t + 540.0 * t2 - 315.0 * t3 + 70.0 * t4),
        630.0 * t4 * u3 * u,
        2520.0 * t3 * u3 * (1.0 - 2.0 * t),
    ]
}

impl Cutoff {
    pub fn scaled(radius: f64) -> Self {
        Self { radius }
    }

    /// φ̂ and its first two radial derivatives at radius r.
    pub fn profile(&self, r: f64) -> [f64; 3] {
        let x = r / self.radius;
        if x <= 0.5 {
            return [1.0, 0.0, 0.0];
        }
        if x >= 1.0 {
            return [0.0, 0.0, 0.0];
        }
        let [s, s1, s2] = smoothstep(2.0 * x - 1.0);
        let k = 1.0 / self.radius;
        [1.0 - s, -2.0 * s1 * k, -4.0 * s2 * k * k]
    }

    /// Scalar mode φ(z) = φ̂(|z|) as a 2-jet.
    pub fn scalar(&self, p: [f64; 2]) -> Scalar2 {
        let r = p[0].hypot(p[1]);
        if r <= 0.5 * self.radius {
            return Scalar2::constant(1.0);
        }
        if r >= self.radius {
            return Scalar2::constant(0.0);
        }
        let x = Scalar2::var_x(p[0]);
        let y = Scalar2::var_y(p[1]);
        let [f0, f1, f2] = self.profile(r);
        (x * x + y * y).sqrt().map(f0, f1, f2)
    }

    /// Vector mode φ(z) = z φ̂(|z|).
    pub fn vector(&self, p: [f64; 2]) -> [Scalar2; 2] {
        let s = self.scalar(p);
        [Scalar2::var_x(p[0]) * s, Scalar2::var_y(p[1]) * s]
    }

    /// Radii where the profile is only finitely smooth.
    pub fn breaks(&self) -> [f64; 2] {
        [0.5 * self.radius, self.radius]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GlueFamily {
    /// (z^m, z) glued into the branched plane (z^m, 0).
    Chen(u32),
    /// Enneper surface glued into −(1/9)(z³, 0).
    Enneper,
    /// Higher order Enneper surface glued into its leading (2m+1)-fold term.
    HigherEnneper(u32),
}

impl GlueFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GlueFamily::Chen(m) if m < 2 => Err(GeomError::InvalidInput(format!("chen glue needs m >= 2, got {m}"))),
            GlueFamily::HigherEnneper(0) => Err(GeomError::InvalidInput("higher Enneper glue needs m >= 1".into())),
            _ => Ok(()),
        }
    }

    /// Multiplicity of the branched plane the model is glued into.
    pub fn multiplicity(&self) -> u32 {
        match *self {
            GlueFamily::Chen(m) => m,
            GlueFamily::Enneper => 3,
            GlueFamily::HigherEnneper(m) => 2 * m + 1,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            GlueFamily::Chen(_) => 4,
            _ => 3,
        }
    }

    /// Overall factor of the model (the Enneper surface is a third of the first higher order one).
    fn amplitude(&self) -> f64 {
        match self {
            GlueFamily::Enneper => 1.0 / 3.0,
            _ => 1.0,
        }
    }

    /// Factor κ with I(h_ρ(1/w̄)) = κ h_ρ(w) on |w| ≤ 1.
    fn kappa(&self) -> f64 {
        match *self {
            GlueFamily::Chen(_) => 1.0,
            _ => {
                let n = self.multiplicity() as f64;
                let c = self.amplitude();
                n * n / (c * c)
            }
        }
    }

    fn id(&self, rho: f64) -> String {
        match self {
            GlueFamily::Chen(m) => format!("chen-glue:{m}:{rho}"),
            GlueFamily::Enneper => format!("enneper-glue:{rho}"),
            GlueFamily::HigherEnneper(m) => format!("henneper-glue:{m}:{rho}"),
        }
    }

    /// Limits of (W, ∫|A|²) of the closed construction as ρ → 0.
    pub fn closed_limits(&self) -> (f64, f64) {
        match *self {
            GlueFamily::Chen(m) => (4.0 * m as f64 * PI, 8.0 * (2.0 * m as f64 - 1.0) * PI),
            GlueFamily::Enneper => (12.0 * PI, 40.0 * PI),
            GlueFamily::HigherEnneper(m) => ((8.0 * m as f64 + 4.0) * PI, (32.0 * m as f64 + 8.0) * PI),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlueSpec {
    pub family: GlueFamily,
    pub rho: f64,
    /// Radius of the final inversion sphere.
    pub inversion_radius: f64,
}

impl GlueSpec {
    pub fn new(family: GlueFamily, rho: f64) -> Result<Self> {
        let s = Self { family, rho, inversion_radius: 1.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        if !(self.rho > 0.0 && self.rho <= 0.25) {
            return Err(GeomError::InvalidInput(format!("glue scale must satisfy 0 < rho <= 1/4, got {}", self.rho)));
        }
        if !(self.inversion_radius > 0.0 && self.inversion_radius.is_finite()) {
            return Err(GeomError::InvalidInput(format!("inversion radius {}", self.inversion_radius)));
        }
        Ok(())
    }
}

fn cz(z: ComplexJet2, c: Complex64) -> ComplexJet2 {
    z.scale(c)
}

/// Jet of the single glue h_ρ at p.
fn model_jet(family: GlueFamily, rho: f64, p: [f64; 2]) -> Result<Jet2> {
    let z = ComplexJet2::var(Complex64::new(p[0], p[1]));
    let phi = Cutoff::default().scalar(p);
    let zero = ComplexJet2::constant(z.z, Complex64::new(0.0, 0.0));
    match family {
        GlueFamily::Chen(m) => {
            let base = holomorphic_to_real_jet(&[z.powi(m as i32)?, zero], &RealEmbedding::complex_pairs(2));
            let k = rho.powi(m as i32 - 1);
            let v = Cutoff::default().vector(p);
            let mut j = base;
            j.set_component(2, v[0] * k);
            j.set_component(3, v[1] * k);
            Ok(j)
        }
        GlueFamily::Enneper | GlueFamily::HigherEnneper(_) => {
            let m = match family {
                GlueFamily::HigherEnneper(m) => m,
                _ => 1,
            };
            let n = 2 * m + 1;
            let zn = z.powi(n as i32)?.scale(Complex64::new(1.0 / n as f64, 0.0));
            let emb = RealEmbedding::real_parts(3);
            let lead = holomorphic_to_real_jet(&[-zn, cz(zn, Complex64::new(0.0, 1.0)), zero], &emb);
            let r2m = rho.powi(2 * m as i32);
            let corr = holomorphic_to_real_jet(
                &[
                    cz(z, Complex64::new(r2m, 0.0)),
                    cz(z, Complex64::new(0.0, r2m)),
                    z.powi(m as i32 + 1)?.scale(Complex64::new(2.0 * rho.powi(m as i32) / (m as f64 + 1.0), 0.0)),
                ],
                &emb,
            );
            Ok(lead.add(&corr.mul_scalar(&phi)).scale(family.amplitude()))
        }
    }
}

fn model_chart(family: GlueFamily, rho: f64) -> ChartFn {
    Arc::new(move |p| model_jet(family, rho, p))
}

/// The single glue h_ρ over the plane: the rescaled model on |z| ≤ 1/2 and the branched plane
/// on |z| ≥ 1.
pub fn model_glue(family: GlueFamily, rho: f64) -> Result<ParametrizedSurface> {
    let spec = GlueSpec::new(family, rho)?;
    let patch = Patch::new(model_chart(family, rho), Domain::Plane).with_breaks(Cutoff::default().breaks().to_vec());
    let mut s = ParametrizedSurface::open(format!("model({})", spec.family.id(rho)), patch, family.ambient_dim());
    s.singular_points.push(SingularPoint {
        patch: 0,
        param: None,
        kind: SingularKind::End { multiplicity: family.multiplicity() },
    });
    s.topology = Some(Topology { chi: 2, branch_orders: vec![] });
    Ok(s)
}

/// w ↦ I(S(1/w̄)) for a surface over the plane, I the unit inversion at the origin.
///
/// The end of S becomes a branch point at w = 0 and the preimage of the origin (required to be
/// z = 0 only) becomes an end at w = ∞.
pub fn invert_and_flip(s: &ParametrizedSurface) -> Result<ParametrizedSurface> {
    if s.patches.len() != 1 || s.patches[0].domain != Domain::Plane {
        return Err(GeomError::InvalidInput("invert_and_flip needs a single chart over the plane".into()));
    }
    let patch = &s.patches[0];
    let mut nearest = f64::INFINITY;
    for (i, q) in halton_annulus(4096, 0.05, 1.0).into_iter().enumerate() {
        let q = if i % 2 == 1 {
            let r2 = q[0] * q[0] + q[1] * q[1];
            [q[0] / r2, q[1] / r2]
        } else {
            q
        };
        if let Ok(j) = patch.eval(q) {
            nearest = nearest.min(j.value.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
    }
    if nearest < DELTA_SAFE {
        return Err(GeomError::CenterOnSurface { distance: nearest });
    }
    let inv = Arc::new(MobiusMap::unit_inversion(s.ambient_dim));
    let chart = push_chart(&inv, pulled_by_inv_conj(patch.chart.clone()));
    let breaks = patch.breaks.iter().map(|b| 1.0 / b).collect();
    let mut out = ParametrizedSurface::open(format!("flip({})", s.id), Patch::new(chart, Domain::Plane).singular().with_breaks(breaks), s.ambient_dim);
    let mut branch_orders = Vec::new();
    let mut origin_order = 0;
    for sp in &s.singular_points {
        match (sp.param, sp.kind) {
            (None, SingularKind::End { multiplicity }) => {
                branch_orders.push(multiplicity - 1);
                out.singular_points.push(SingularPoint {
                    patch: 0,
                    param: Some([0.0, 0.0]),
                    kind: SingularKind::Branch { order: multiplicity - 1 },
                });
            }
            (Some([0.0, 0.0]), SingularKind::Branch { order }) => origin_order = order,
            _ => {}
        }
    }
    out.singular_points.push(SingularPoint {
        patch: 0,
        param: None,
        kind: SingularKind::End { multiplicity: origin_order + 1 },
    });
    out.topology = Some(Topology { chi: 2, branch_orders });
    Ok(out)
}

/// h̄_ρ: the branched part of h̃_ρ on |w| ≤ 1 replaced by κ h_ρ(w), κ matching the two along
/// |w| = 1. Chart 0 is κ h_ρ on the unit disk, chart 1 is z ↦ I(h_ρ(z)) on the unit disk (the
/// exterior of h̃_ρ in the coordinate z = 1/w̄), with an end at z = 0.
pub fn bar_surface(family: GlueFamily, rho: f64) -> Result<ParametrizedSurface> {
    let spec = GlueSpec::new(family, rho)?;
    let charts = bar_charts(family, rho);
    let half = vec![0.5];
    let mut s = ParametrizedSurface::open(
        format!("bar({})", spec.family.id(rho)),
        Patch::new(charts[0].clone(), Domain::Disk(1.0)).with_breaks(half.clone()),
        family.ambient_dim(),
    );
    s.patches.push(Patch::new(charts[1].clone(), Domain::Disk(1.0)).end_at_origin().with_breaks(half));
    s.singular_points.push(SingularPoint { patch: 1, param: Some([0.0, 0.0]), kind: SingularKind::End { multiplicity: 1 } });
    s.topology = Some(Topology { chi: 2, branch_orders: vec![] });
    Ok(s)
}

fn bar_charts(family: GlueFamily, rho: f64) -> [ChartFn; 2] {
    let kappa = family.kappa();
    let inner: ChartFn = Arc::new(move |p| Ok(model_jet(family, rho, p)?.scale(kappa)));
    let inv = Arc::new(MobiusMap::unit_inversion(family.ambient_dim()));
    [inner, push_chart(&inv, model_chart(family, rho))]
}

/// Dilation bringing the glued model region of h̄_ρ to unit size.
fn closing_scale(family: GlueFamily, rho: f64) -> f64 {
    match family {
        GlueFamily::Chen(m) => rho.powi(-(m as i32)),
        _ => rho.powi(-(family.multiplicity() as i32)),
    }
}

/// The closed sphere ĥ_ρ = I_{x0}(s·h̄_ρ), with x0 at sampled distance at least the inversion
/// radius from s·h̄_ρ.
pub fn double_glue(spec: &GlueSpec) -> Result<ParametrizedSurface> {
    spec.validate()?;
    let (family, rho) = (spec.family, spec.rho);
    let dim = family.ambient_dim();
    let s = closing_scale(family, rho);
    let bar = bar_surface(family, rho)?;
    let dil = MobiusMap::identity(dim).dilate(s)?;
    let scaled = ParametrizedSurface {
        patches: bar
            .patches
            .iter()
            .map(|p| Patch { chart: push_chart(&Arc::new(dil.clone()), p.chart.clone()), ..p.clone() })
            .collect(),
        ..bar.clone()
    };
    let x0 = select_inversion_center(&scaled, spec.inversion_radius)?;
    let r = spec.inversion_radius;
    let close = |m: MobiusMap| -> Result<MobiusMap> {
        m.dilate(s)?.invert(x0, r)?.translate(x0.map(|v| -v))
    };
    let a = Arc::new(close(MobiusMap::identity(dim))?);
    let b = Arc::new(close(MobiusMap::unit_inversion(dim))?);
    let kappa = family.kappa();
    let inner: ChartFn = Arc::new(move |p| Ok(model_jet(family, rho, p)?.scale(kappa)));
    let half = vec![0.5];
    let mut out = ParametrizedSurface::open(
        family.id(rho),
        Patch::new(push_chart(&a, inner), Domain::Disk(1.0)).with_breaks(half.clone()),
        dim,
    );
    out.patches.push(Patch::new(push_chart(&b, model_chart(family, rho)), Domain::Disk(1.0)).with_breaks(half));
    out.closed = true;
    out.topology = Some(Topology { chi: 2, branch_orders: vec![] });
    Ok(out)
}

/// Default bound on the relative triple-plane fit residual sup |X − T|/|T − X0| over δ ≤ |z| ≤ 2δ.
pub const MEEKS_BOY_BUDGET: f64 = 0.5;

/// Fitted triple plane and the quality of the fit on the transition annulus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub delta: f64,
    pub rho: f64,
    /// X(0) estimate.
    pub center: Vec4,
    /// Scale σ of the fitted map ξ ↦ σ R (Re ξ³, Im ξ³, 0).
    pub sigma: f64,
    /// Domain scale of the inserted Enneper surface, ρ³ f_E(λξ/ρ).
    pub lambda: f64,
    /// Shift b of the centered coordinate ξ = z/(1 − bz).
    pub shift: [f64; 2],
    pub frame: [[f64; 3]; 3],
    /// sup |X − T| over δ ≤ |z| ≤ 2δ.
    pub sup_deviation: f64,
    /// sup |X − T| / |T − X0| over the same annulus.
    pub relative_residual: f64,
    pub budget: f64,
    /// Largest insertion term on |z| ≤ 2δ, the size of the inserted correction next to the triple plane.
    pub insertion_size: f64,
}

struct MeeksBoyFrame {
    center: Vec4,
    sigma: f64,
    frame: [[f64; 3]; 3],
    /// Coordinate shift b of ξ = ζ/(1 − bζ), the conformal coordinate centered on the triple plane.
    shift: Complex64,
}

impl MeeksBoyFrame {
    fn centered(&self, p: [f64; 2]) -> Result<ComplexJet2> {
        let z = ComplexJet2::var(Complex64::new(p[0], p[1]));
        let one = ComplexJet2::constant(z.z, Complex64::new(1.0, 0.0));
        z.checked_div(one - z.scale(self.shift))
    }

    /// Domain scale λ with λ³/9 = σ, so that ρ³ f_E(λξ/ρ) has the fitted triple plane as its
    /// leading term up to a rotation.
    fn lambda(&self) -> f64 {
        (9.0 * self.sigma).cbrt()
    }

    fn rotate(&self, v: [Scalar2; 3], p: [f64; 2]) -> Jet2 {
        let comps: Vec<Scalar2> = (0..3)
            .map(|i| v[0] * self.frame[i][0] + v[1] * self.frame[i][1] + v[2] * self.frame[i][2])
            .collect();
        Jet2::from_components(p, &comps)
    }

    /// X0 + σ R (ξ³, 0).
    fn triple_plane(&self, p: [f64; 2]) -> Result<Jet2> {
        let xi3 = holomorphic_to_real_jet(&[self.centered(p)?.powi(3)?], &RealEmbedding::complex_pairs(1));
        let zero = Scalar2::constant(0.0);
        let mut j = self.rotate([xi3.component(0) * self.sigma, xi3.component(1) * self.sigma, zero], p);
        for i in 0..3 {
            j.value[i] += self.center[i];
        }
        Ok(j)
    }

    /// The remaining terms of ρ³ f_E(λξ/ρ), (1/3)(λρ² x, −λρ² y, λ²ρ (x² − y²)) with x + iy = ξ,
    /// turned by R diag(−1, −1, 1).
    fn insertion(&self, rho: f64, p: [f64; 2]) -> Result<Jet2> {
        let xi = holomorphic_to_real_jet(&[self.centered(p)?], &RealEmbedding::complex_pairs(1));
        let (x, y) = (xi.component(0), xi.component(1));
        let l = self.lambda();
        let e = [x * (-l * rho * rho / 3.0), y * (l * rho * rho / 3.0), (x * x - y * y) * (l * l * rho / 3.0)];
        Ok(self.rotate(e, p))
    }
}

/// Mean of the Meeks surface over a large parameter circle, which tends to the center of its
/// triple end up to O(1) offsets that are negligible against the end's size.
pub fn meeks_end_center(meeks: &ParametrizedSurface) -> Result<Vec4> {
    const N: usize = 64;
    const R: f64 = 1e3;
    let mut c = [0.0; 4];
    for k in 0..N {
        let t = 2.0 * PI * k as f64 / N as f64;
        let v = meeks.eval(0, [R * t.cos(), R * t.sin()])?.value;
        for i in 0..3 {
            c[i] += v[i] / N as f64;
        }
    }
    Ok(c)
}

/// The inverted Meeks surface used as the base of the Möbius-band glueing: patch 0 has the
/// branch point (a triple plane) at its origin.
///
/// The inversion center sits next to the center of the end, so that the inverted surface is
/// close to its tangent triple plane on a comparatively large neighborhood of the branch point.
pub fn inverted_meeks(tol: f64) -> Result<ParametrizedSurface> {
    let meeks = meeks_surface(tol)?;
    let anchor = meeks_end_center(&meeks)?;
    let x0 = select_inversion_center_near(&meeks, anchor, 0.25)?;
    let mut s = transform_surface(&MobiusMap::centered_inversion(3, x0), &meeks)?;
    s.id = "inverted-meeks".into();
    Ok(s)
}

/// Fits X ≈ X0 + σ R (ξ³, 0) on the circle |ζ| = 2δ, ξ = ζ/(1 − bζ).
///
/// The frequency 3 Fourier coefficients give σ R, the frequency 4 ones the shift b (to first
/// order ξ³ = ζ³ + 3bζ⁴).
fn fit_triple_plane(x: &ChartFn, delta: f64) -> Result<MeeksBoyFrame> {
    const N: usize = 64;
    let r = 2.0 * delta;
    let mut mean = [0.0; 3];
    let mut c3 = [0.0; 3];
    let mut s3 = [0.0; 3];
    let mut c4 = [0.0; 3];
    let mut s4 = [0.0; 3];
    for k in 0..N {
        let t = 2.0 * PI * k as f64 / N as f64;
        let v = x([r * t.cos(), r * t.sin()])?.value;
        let (sn3, cs3) = (3.0 * t).sin_cos();
        let (sn4, cs4) = (4.0 * t).sin_cos();
        let w = 2.0 / N as f64;
        for i in 0..3 {
            mean[i] += v[i] / N as f64;
            c3[i] += w * v[i] * cs3 / r.powi(3);
            s3[i] += w * v[i] * sn3 / r.powi(3);
            c4[i] += w * v[i] * cs4 / r.powi(4);
            s4[i] += w * v[i] * sn4 / r.powi(4);
        }
    }
    let l = nalgebra::Matrix3x2::new(c3[0], s3[0], c3[1], s3[1], c3[2], s3[2]);
    let svd = l.svd(true, true);
    let (u, vt) = (svd.u.ok_or(GeomError::DegenerateReparam)?, svd.v_t.ok_or(GeomError::DegenerateReparam)?);
    let q = u * vt;
    let sigma = 0.5 * (svd.singular_values[0] + svd.singular_values[1]);
    if !(sigma > 0.0) {
        return Err(GeomError::DegenerateReparam);
    }
    let e1 = q.column(0).into_owned();
    let e2 = q.column(1).into_owned();
    let n = e1.cross(&e2);
    let c4 = nalgebra::Vector3::from(c4);
    let s4 = nalgebra::Vector3::from(s4);
    let k = 1.0 / (6.0 * sigma);
    let shift = Complex64::new((e1.dot(&c4) + e2.dot(&s4)) * k, (e2.dot(&c4) - e1.dot(&s4)) * k);
    let frame = std::array::from_fn(|i| [e1[i], e2[i], n[i]]);
    Ok(MeeksBoyFrame { center: [mean[0], mean[1], mean[2], 0.0], sigma, frame, shift })
}

/// Rescaled Enneper surfaces inserted at the branch point of the inverted Meeks surface, on the
/// double cover of the projective plane (weight 1/2).
///
/// With ψ = φ̂(|z|/2δ) the chart is (1 − ψ) X + ψ (T + E), where X is the inverted Meeks chart,
/// T the fitted triple plane and T + E = X0 + R' ρ³ f_E(λξ/ρ) a rigid motion of the rescaled
/// Enneper surface in the centered coordinate ξ.
/// The second patch is its image under z ↦ −z, which is how the antipodal sheet of X is
/// parametrized.
pub fn meeks_boy_glue(delta: f64, rho: f64, budget: f64) -> Result<(ParametrizedSurface, TransitionReport)> {
    meeks_boy_glue_on(&inverted_meeks(1e-12)?, delta, rho, budget)
}

/// [`meeks_boy_glue`] over a given inverted Meeks surface (patch 0 carries the branch point).
pub fn meeks_boy_glue_on(
    base: &ParametrizedSurface,
    delta: f64,
    rho: f64,
    budget: f64,
) -> Result<(ParametrizedSurface, TransitionReport)> {
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(GeomError::InvalidInput(format!("transition radius must satisfy 0 < delta <= 1/4, got {delta}")));
    }
    if !(rho > 0.0 && rho <= delta / 4.0) {
        return Err(GeomError::InvalidInput(format!("glue scale must satisfy 0 < rho <= delta/4, got {rho}")));
    }
    let x = base.patches[0].chart.clone();
    let fit = fit_triple_plane(&x, delta)?;

    let mut sup = 0.0f64;
    let mut rel = 0.0f64;
    for p in halton_annulus(512, delta, 2.0 * delta) {
        let d = x(p)?.value;
        let t = fit.triple_plane(p)?.value;
        let dev = (0..3).map(|k| (d[k] - t[k]).powi(2)).sum::<f64>().sqrt();
        let size = (0..3).map(|k| (t[k] - fit.center[k]).powi(2)).sum::<f64>().sqrt();
        sup = sup.max(dev);
        rel = rel.max(dev / size);
    }
    let mut insertion_size = 0.0f64;
    for p in halton_annulus(256, 0.0, 2.0 * delta) {
        let e = fit.insertion(rho, p)?.value;
        insertion_size = insertion_size.max(e.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    let report = TransitionReport {
        delta,
        rho,
        center: fit.center,
        sigma: fit.sigma,
        lambda: fit.lambda(),
        shift: [fit.shift.re, fit.shift.im],
        frame: fit.frame,
        sup_deviation: sup,
        relative_residual: rel,
        budget,
        insertion_size,
    };
    if report.relative_residual > budget {
        return Err(GeomError::TransitionTooCoarse { residual: report.relative_residual, budget });
    }

    let fit = Arc::new(fit);
    let cutoff = Cutoff::scaled(2.0 * delta);
    let chart: ChartFn = Arc::new(move |p| {
        let psi = cutoff.scalar(p);
        if psi.v == 0.0 {
            return x(p);
        }
        let mut y = fit.triple_plane(p)?.add(&fit.insertion(rho, p)?).mul_scalar(&psi);
        if psi.v < 1.0 {
            y = y.add(&x(p)?.mul_scalar(&(psi * -1.0 + 1.0)));
        }
        Ok(y)
    });
    let breaks = vec![delta, 2.0 * delta];
    let patch = Patch::new(chart.clone(), Domain::Disk(1.0)).with_breaks(breaks.clone());
    let mut s = ParametrizedSurface::open(format!("meeks-boy:{delta}:{rho}"), patch, 3);
    s.patches.push(Patch::new(pulled_by_negation(chart), Domain::Disk(1.0)).with_breaks(breaks));
    s.weight = 0.5;
    s.closed = true;
    s.topology = Some(Topology { chi: 2, branch_orders: vec![] });
    Ok((s, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_profile_matches_at_seams() {
        let c = Cutoff::default();
        assert_eq!(c.profile(0.5), [1.0, 0.0, 0.0]);
        assert_eq!(c.profile(1.0), [0.0, 0.0, 0.0]);
        for r in [0.5 + 1e-9, 1.0 - 1e-9] {
            let v = c.profile(r);
            assert!(v[1].abs() < 1e-20 && v[2].abs() < 1e-12, "{r}: {v:?}");
        }
        assert!((c.profile(0.75)[0] - 0.5).abs() < 1e-15);
        let h = 1e-6;
        for r in [0.55, 0.7, 0.8, 0.95] {
            let fd1 = (c.profile(r + h)[0] - c.profile(r - h)[0]) / (2.0 * h);
            let fd2 = (c.profile(r + h)[1] - c.profile(r - h)[1]) / (2.0 * h);
            assert!((fd1 - c.profile(r)[1]).abs() < 1e-6);
            assert!((fd2 - c.profile(r)[2]).abs() < 1e-5);
        }
        let s = Cutoff::scaled(0.2);
        assert_eq!(s.profile(0.1)[0], 1.0);
        assert_eq!(s.profile(0.2)[0], 0.0);
    }

    #[test]
    fn vector_cutoff_is_identity_near_origin() {
        let v = Cutoff::default().vector([0.3, -0.2]);
        assert_eq!((v[0].v, v[0].dx, v[1].v, v[1].dy), (0.3, 1.0, -0.2, 1.0));
        let v = Cutoff::default().vector([0.9, 0.5]);
        assert_eq!(v[0].v, 0.0);
    }

    #[test]
    fn chen_model_equals_rescaled_graph_inside() {
        let rho = 0.1;
        let s = model_glue(GlueFamily::Chen(2), rho).unwrap();
        for p in [[0.1, 0.2], [-0.3, 0.35], [0.0, 0.5]] {
            let j = s.eval(0, p).unwrap();
            let (x, y) = (p[0], p[1]);
            assert_eq!(j.value, [x * x - y * y, 2.0 * x * y, rho * x, rho * y]);
        }
        let j = s.eval(0, [1.2, 0.3]).unwrap();
        assert_eq!((j.value[2], j.value[3]), (0.0, 0.0));
    }

    #[test]
    fn enneper_model_matches_closed_form() {
        let rho = 0.2;
        let s = model_glue(GlueFamily::Enneper, rho).unwrap();
        for p in [[0.1, 0.2], [0.6, 0.1], [0.2, -0.8], [1.5, 0.2]] {
            let (x, y) = (p[0], p[1]);
            let phi = Cutoff::default().profile(f64::hypot(x, y))[0];
            let z3 = Complex64::new(x, y).powi(3);
            let expect = [
                -z3.re / 9.0 + phi * rho * rho * x / 3.0,
                -z3.im / 9.0 - phi * rho * rho * y / 3.0,
                phi * rho * (x * x - y * y) / 3.0,
            ];
            let j = s.eval(0, p).unwrap();
            for i in 0..3 {
                assert!((j.value[i] - expect[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn flipped_chen_glue_is_branched_plane_inside() {
        let s = invert_and_flip(&model_glue(GlueFamily::Chen(2), 0.1).unwrap()).unwrap();
        for r in [0.3, 0.7, 1.0] {
            for t in [0.0, 1.0, 2.5] {
                let p = [r * f64::cos(t), r * f64::sin(t)];
                let w = Complex64::new(p[0], p[1]).powi(2);
                let j = s.eval(0, p).unwrap();
                let e = [w.re, w.im, 0.0, 0.0];
                for i in 0..4 {
                    assert!((j.value[i] - e[i]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn flipping_twice_restores_jets() {
        let s = model_glue(GlueFamily::HigherEnneper(2), 0.2).unwrap();
        let inv = Arc::new(MobiusMap::unit_inversion(3));
        let twice = push_chart(&inv, pulled_by_inv_conj(invert_and_flip(&s).unwrap().patches[0].chart.clone()));
        for p in [[0.3, 0.1], [0.7, -0.4], [1.3, 0.2], [-2.0, 1.0]] {
            let a = s.eval(0, p).unwrap();
            let b = twice(p).unwrap();
            for i in 0..3 {
                assert!((a.value[i] - b.value[i]).abs() < 1e-9 * (1.0 + a.value[i].abs()));
                for k in 0..3 {
                    assert!((a.d2[k][i] - b.d2[k][i]).abs() < 1e-9 * (1.0 + a.d2[k][i].abs()));
                }
            }
        }
    }

    #[test]
    fn bar_charts_agree_on_unit_circle() {
        for family in [GlueFamily::Chen(3), GlueFamily::Enneper, GlueFamily::HigherEnneper(2)] {
            let s = bar_surface(family, 0.1).unwrap();
            for t in [0.1, 1.3, 2.9, 4.4] {
                let p = [f64::cos(t), f64::sin(t)];
                let a = s.eval(0, p).unwrap();
                let flip = pulled_by_inv_conj(s.patches[1].chart.clone());
                let b = flip(p).unwrap();
                for i in 0..4 {
                    assert!((a.value[i] - b.value[i]).abs() < 1e-12 * (1.0 + a.value[i].abs()), "{family:?}");
                    for k in 0..2 {
                        assert!((a.d1[k][i] - b.d1[k][i]).abs() < 1e-10 * (1.0 + a.d1[k][i].abs()));
                    }
                }
            }
        }
    }

    #[test]
    fn glue_scale_is_validated() {
        assert!(model_glue(GlueFamily::Chen(2), 0.3).is_err());
        assert!(model_glue(GlueFamily::Chen(1), 0.1).is_err());
        assert!(GlueSpec::new(GlueFamily::Enneper, 0.0).is_err());
    }
}
