//! Möbius transformations of R^n ∪ {∞} with exact first and second derivatives.
//!
//! A map is kept both as the list of primitives it was built from and as a normal form
//! x -> v + λ O J(x), where J is the identity or J_a(x) = (x − a)/|x − a|². Applying the
//! normal form instead of the primitive chain avoids cancellation when intermediate points
//! pass near infinity (for example the end of a plane that an inversion brings back).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geometry::fundamental_forms;
use crate::jets::{push_jet_ambient, AmbientDerivs, AmbientMap, Jet2, Vec4};
use crate::quad::{halton_annulus, QuadConfig};
use crate::surfaces::{pulled_by_inv_conj, ChartFn, Domain, ParametrizedSurface, Patch, SingularKind, SingularPoint};

pub type Mat4 = [[f64; 4]; 4];

/// Sampled distance below which an inversion center counts as lying on the surface.
pub const DELTA_SAFE: f64 = 1e-6;

const ORTHO_TOL: f64 = 1e-12;

fn identity() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn matmul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

fn matvec(a: &Mat4, v: &Vec4) -> Vec4 {
    std::array::from_fn(|i| (0..4).map(|k| a[i][k] * v[k]).sum())
}

fn mat_t_vec(a: &Mat4, v: &Vec4) -> Vec4 {
    std::array::from_fn(|i| (0..4).map(|k| a[k][i] * v[k]).sum())
}

fn sub(a: &Vec4, b: &Vec4) -> Vec4 {
    std::array::from_fn(|i| a[i] - b[i])
}

fn dot(a: &Vec4, b: &Vec4) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn scale(a: &Vec4, s: f64) -> Vec4 {
    a.map(|v| v * s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Primitive {
    Translate(Vec4),
    Dilate(f64),
    Orthogonal(Mat4),
    /// x -> center + r² (x − center)/|x − center|²
    Invert { center: Vec4, radius: f64 },
}

/// x -> v + λ O J(x).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalForm {
    pub v: Vec4,
    pub lambda: f64,
    pub o: Mat4,
    /// Pole of J; `None` for a similarity.
    pub pole: Option<Vec4>,
}

impl NormalForm {
    fn identity() -> Self {
        Self { v: [0.0; 4], lambda: 1.0, o: identity(), pole: None }
    }

    fn then(self, p: &Primitive) -> Self {
        let mut n = self;
        match p {
            Primitive::Translate(t) => {
                for i in 0..4 {
                    n.v[i] += t[i];
                }
            }
            Primitive::Dilate(mu) => {
                n.v = scale(&n.v, *mu);
                n.lambda *= mu;
            }
            Primitive::Orthogonal(q) => {
                n.v = matvec(q, &n.v);
                n.o = matmul(q, &n.o);
            }
            Primitive::Invert { center, radius } => {
                let r2 = radius * radius;
                // y − c = λ O (J(x) + p)
                let p = scale(&mat_t_vec(&n.o, &sub(&n.v, center)), 1.0 / n.lambda);
                let k = r2 / n.lambda;
                match n.pole {
                    None => {
                        n = NormalForm { v: *center, lambda: k, o: n.o, pole: Some(scale(&p, -1.0)) };
                    }
                    Some(a) => {
                        let pp = dot(&p, &p);
                        if pp == 0.0 {
                            // J(J_a(x)) = x − a
                            n = NormalForm {
                                v: sub(center, &scale(&matvec(&n.o, &a), k)),
                                lambda: k,
                                o: n.o,
                                pole: None,
                            };
                        } else {
                            // J(J_a(x) + p) = −q + |q|² R_q J_{a+q}(x), q = −p/|p|²
                            let q = scale(&p, -1.0 / pp);
                            let qq = 1.0 / pp;
                            let mut refl = identity();
                            for i in 0..4 {
                                for j in 0..4 {
                                    refl[i][j] -= 2.0 * q[i] * q[j] / qq;
                                }
                            }
                            n = NormalForm {
                                v: sub(center, &scale(&matvec(&n.o, &q), k)),
                                lambda: k * qq,
                                o: matmul(&n.o, &refl),
                                pole: Some(std::array::from_fn(|i| a[i] + q[i])),
                            };
                        }
                    }
                }
            }
        }
        n
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub dim: usize,
    pub primitives: Vec<Primitive>,
    pub normal: NormalForm,
}

impl MobiusMap {
    pub fn identity(dim: usize) -> Self {
        Self { dim, primitives: Vec::new(), normal: NormalForm::identity() }
    }

    /// Appends a primitive applied after the current map.
    pub fn then(mut self, p: Primitive) -> Result<Self> {
        match &p {
            Primitive::Dilate(l) if !(*l > 0.0 && l.is_finite()) => {
                return Err(GeomError::InvalidInput(format!("dilation factor {l}")));
            }
            Primitive::Invert { radius, .. } if !(*radius > 0.0 && radius.is_finite()) => {
                return Err(GeomError::InvalidInput(format!("inversion radius {radius}")));
            }
            Primitive::Orthogonal(o) => {
                let oto = matmul(&transpose(o), o);
                let id = identity();
                let defect = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).fold(0.0f64, |m, (i, j)| {
                    m.max((oto[i][j] - id[i][j]).abs())
                });
                if defect > ORTHO_TOL {
                    return Err(GeomError::InvalidInput(format!("matrix is not orthogonal (defect {defect:e})")));
                }
            }
            _ => {}
        }
        self.normal = self.normal.then(&p);
        self.primitives.push(p);
        Ok(self)
    }

    pub fn translate(self, t: Vec4) -> Result<Self> {
        self.then(Primitive::Translate(t))
    }

    pub fn dilate(self, l: f64) -> Result<Self> {
        self.then(Primitive::Dilate(l))
    }

    pub fn orthogonal(self, o: Mat4) -> Result<Self> {
        self.then(Primitive::Orthogonal(o))
    }

    pub fn invert(self, center: Vec4, radius: f64) -> Result<Self> {
        self.then(Primitive::Invert { center, radius })
    }

    /// Unit inversion x -> x/|x|².
    pub fn unit_inversion(dim: usize) -> Self {
        Self::identity(dim).invert([0.0; 4], 1.0).expect("unit radius is valid")
    }

    /// x -> (x − x0)/|x − x0|².
    pub fn centered_inversion(dim: usize, x0: Vec4) -> Self {
        Self::identity(dim)
            .invert(x0, 1.0)
            .and_then(|m| m.translate(scale(&x0, -1.0)))
            .expect("unit radius is valid")
    }

    /// The inverse map (primitives inverted in reverse order).
    pub fn inverse(&self) -> Result<Self> {
        let mut m = Self::identity(self.dim);
        for p in self.primitives.iter().rev() {
            m = m.then(match p {
                Primitive::Translate(t) => Primitive::Translate(scale(t, -1.0)),
                Primitive::Dilate(l) => Primitive::Dilate(1.0 / l),
                Primitive::Orthogonal(o) => Primitive::Orthogonal(transpose(o)),
                Primitive::Invert { center, radius } => Primitive::Invert { center: *center, radius: *radius },
            })?;
        }
        Ok(m)
    }

    /// The point sent to infinity, if any.
    pub fn pole(&self) -> Option<Vec4> {
        self.normal.pole
    }

    /// Image of infinity (`None` for a similarity, which fixes it).
    pub fn image_of_infinity(&self) -> Option<Vec4> {
        self.normal.pole.map(|_| self.normal.v)
    }

    /// Evaluates the primitive chain one step at a time (reference for the normal form).
    pub fn apply_chain(&self, x: &Vec4) -> Result<Vec4> {
        let mut y = *x;
        for p in &self.primitives {
            y = match p {
                Primitive::Translate(t) => std::array::from_fn(|i| y[i] + t[i]),
                Primitive::Dilate(l) => scale(&y, *l),
                Primitive::Orthogonal(o) => matvec(o, &y),
                Primitive::Invert { center, radius } => {
                    let d = sub(&y, center);
                    let n2 = dot(&d, &d);
                    if n2 == 0.0 {
                        return Err(GeomError::HitsCenter);
                    }
                    std::array::from_fn(|i| center[i] + radius * radius * d[i] / n2)
                }
            };
        }
        Ok(y)
    }

    pub fn apply(&self, x: &Vec4) -> Result<Vec4> {
        Ok(self.derivs(x, self.dim)?.value)
    }

    /// Value, Jacobian and Hessian tensor of the map at x.
    pub fn derivatives(&self, x: &Vec4) -> Result<AmbientDerivs> {
        self.derivs(x, self.dim)
    }
}

impl AmbientMap for MobiusMap {
    fn derivs(&self, x: &Vec4, _dim: usize) -> Result<AmbientDerivs> {
        let n = &self.normal;
        let mut jv = *x;
        let mut dj = identity();
        let mut d2j = [[[0.0; 4]; 4]; 4];
        if let Some(a) = n.pole {
            let y = sub(x, &a);
            let y2 = dot(&y, &y);
            if y2 == 0.0 || !y2.is_finite() {
                return Err(GeomError::HitsCenter);
            }
            let inv = 1.0 / y2;
            jv = scale(&y, inv);
            for i in 0..4 {
                for j in 0..4 {
                    dj[i][j] = inv * (if i == j { 1.0 } else { 0.0 } - 2.0 * y[i] * y[j] * inv);
                    for k in 0..4 {
                        let dij = if i == j { 1.0 } else { 0.0 };
                        let dik = if i == k { 1.0 } else { 0.0 };
                        let djk = if j == k { 1.0 } else { 0.0 };
                        d2j[i][j][k] = -2.0 * (dij * y[k] + dik * y[j] + y[i] * djk) * inv * inv
                            + 8.0 * y[i] * y[j] * y[k] * inv * inv * inv;
                    }
                }
            }
        }
        let lo: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| n.lambda * n.o[i][j]));
        let value: Vec4 = std::array::from_fn(|i| n.v[i] + (0..4).map(|k| lo[i][k] * jv[k]).sum::<f64>());
        let first = matmul(&lo, &dj);
        let mut second = [[[0.0; 4]; 4]; 4];
        for (i, si) in second.iter_mut().enumerate() {
            for (j, sij) in si.iter_mut().enumerate() {
                for (k, s) in sij.iter_mut().enumerate() {
                    *s = (0..4).map(|m| lo[i][m] * d2j[m][j][k]).sum();
                }
            }
        }
        Ok(AmbientDerivs { value, first, second })
    }
}

fn transpose(a: &Mat4) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}

fn parse_vec(s: &str, offset: usize, dim: usize) -> Result<Vec4> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != dim {
        return Err(GeomError::ParseError { position: offset, expected: format!("{dim} comma-separated numbers") });
    }
    let mut v = [0.0; 4];
    let mut pos = offset;
    for (i, p) in parts.iter().enumerate() {
        v[i] = p
            .trim()
            .parse()
            .map_err(|_| GeomError::ParseError { position: pos, expected: "number".into() })?;
        pos += p.len() + 1;
    }
    Ok(v)
}

/// Parses `invert:0,0,0,0;r=1|dilate:2|translate:1,0,0,0|orthogonal:<n*n row-major>`.
pub fn parse_mobius(src: &str, dim: usize) -> Result<MobiusMap> {
    let mut m = MobiusMap::identity(dim);
    let mut offset = 0;
    for item in src.split('|') {
        let (name, args) = item.split_once(':').ok_or(GeomError::ParseError {
            position: offset + item.len(),
            expected: "':' after primitive name".into(),
        })?;
        let arg_off = offset + name.len() + 1;
        let prim = match name.trim() {
            "translate" => Primitive::Translate(parse_vec(args, arg_off, dim)?),
            "dilate" => Primitive::Dilate(
                args.trim().parse().map_err(|_| GeomError::ParseError { position: arg_off, expected: "number".into() })?,
            ),
            "invert" => {
                let (c, r) = match args.split_once(';') {
                    Some((c, r)) => {
                        let r_off = arg_off + c.len() + 1;
                        let r = r.trim().strip_prefix("r=").ok_or(GeomError::ParseError {
                            position: r_off,
                            expected: "'r=' radius".into(),
                        })?;
                        let r: f64 = r
                            .parse()
                            .map_err(|_| GeomError::ParseError { position: r_off + 2, expected: "number".into() })?;
                        (c, r)
                    }
                    None => (args, 1.0),
                };
                Primitive::Invert { center: parse_vec(c, arg_off, dim)?, radius: r }
            }
            "orthogonal" => {
                let vals: Vec<f64> = args
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| GeomError::ParseError { position: arg_off, expected: "numbers".into() })?;
                if vals.len() != dim * dim {
                    return Err(GeomError::ParseError { position: arg_off, expected: format!("{} entries", dim * dim) });
                }
                let mut o = identity();
                for i in 0..dim {
                    for j in 0..dim {
                        o[i][j] = vals[i * dim + j];
                    }
                }
                Primitive::Orthogonal(o)
            }
            _ => {
                return Err(GeomError::ParseError {
                    position: offset,
                    expected: "translate, dilate, orthogonal or invert".into(),
                })
            }
        };
        m = m.then(prim)?;
        offset += item.len() + 1;
    }
    Ok(m)
}

/// Parameter samples used to probe where a surface lies in space.
fn probe_params(s: &ParametrizedSurface, n: usize) -> Vec<(usize, [f64; 2])> {
    let per = n.div_ceil(s.patches.len().max(1));
    let mut out = Vec::new();
    for (k, p) in s.patches.iter().enumerate() {
        match p.domain {
            Domain::Disk(r) => out.extend(halton_annulus(per, 0.0, r).into_iter().map(|q| (k, q))),
            Domain::Annulus(a, b) => out.extend(halton_annulus(per, a, b).into_iter().map(|q| (k, q))),
            Domain::Plane => {
                // Half the samples in the unit disk, half outside through w -> 1/conj(w).
                for q in halton_annulus(per, 0.0, 1.0).into_iter().enumerate() {
                    let (i, q) = q;
                    let r2 = q[0] * q[0] + q[1] * q[1];
                    if i % 2 == 1 && r2 > 1e-12 {
                        out.push((k, [q[0] / r2, q[1] / r2]));
                    } else {
                        out.push((k, q));
                    }
                }
            }
        }
    }
    out
}

fn clamp_to_domain(d: Domain, q: [f64; 2]) -> [f64; 2] {
    let r = q[0].hypot(q[1]);
    let (lo, hi) = match d {
        Domain::Disk(b) => (0.0, b),
        Domain::Annulus(a, b) => (a, b),
        Domain::Plane => return q,
    };
    if r > hi {
        [q[0] * hi / r, q[1] * hi / r]
    } else if r < lo && r > 0.0 {
        [q[0] * lo / r, q[1] * lo / r]
    } else {
        q
    }
}

fn distance_at(s: &ParametrizedSurface, k: usize, p: [f64; 2], x: &Vec4) -> Option<(f64, Jet2)> {
    match s.eval(k, p) {
        Ok(j) if j.is_finite() => {
            let d = sub(&j.value, x);
            Some((dot(&d, &d).sqrt(), j))
        }
        _ => None,
    }
}

/// Distance from `x` to the surface image: the best of the sampled points, refined by
/// Gauss-Newton steps from the closest few samples.
pub fn sampled_distance(s: &ParametrizedSurface, x: &Vec4, samples: usize) -> Result<f64> {
    let mut hits: Vec<(f64, usize, [f64; 2])> = Vec::new();
    let mut params = probe_params(s, samples);
    params.extend((0..s.patches.len()).map(|k| (k, [0.0, 0.0])));
    for (k, p) in params {
        if let Some((d, _)) = distance_at(s, k, p, x) {
            hits.push((d, k, p));
        }
    }
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = hits.first().map_or(f64::INFINITY, |h| h.0);
    for &(d0, k, p0) in hits.iter().take(8) {
        let (mut d, mut p) = (d0, p0);
        for _ in 0..30 {
            let Some((_, j)) = distance_at(s, k, p, x) else { break };
            let r = sub(&j.value, x);
            let a = [
                [dot(&j.d1[0], &j.d1[0]), dot(&j.d1[0], &j.d1[1])],
                [dot(&j.d1[1], &j.d1[0]), dot(&j.d1[1], &j.d1[1])],
            ];
            let b = [-dot(&j.d1[0], &r), -dot(&j.d1[1], &r)];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            if !(det.abs() > 1e-300) {
                break;
            }
            let step = [(b[0] * a[1][1] - b[1] * a[0][1]) / det, (a[0][0] * b[1] - a[1][0] * b[0]) / det];
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..20 {
                let q = clamp_to_domain(s.patches[k].domain, [p[0] + t * step[0], p[1] + t * step[1]]);
                if let Some((dq, _)) = distance_at(s, k, q, x) {
                    if dq < d {
                        d = dq;
                        p = q;
                        improved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !improved || d == 0.0 {
                break;
            }
        }
        best = best.min(d);
    }
    Ok(best)
}

/// Deterministic inversion center at sampled distance at least `clearance` from the surface:
/// points ±t e_k on the coordinate axes for t = 1, 2, 4, ...
pub fn select_inversion_center(s: &ParametrizedSurface, clearance: f64) -> Result<Vec4> {
    let mut t = 1.0;
    for _ in 0..40 {
        for k in 0..s.ambient_dim {
            for sign in [1.0, -1.0] {
                let mut x = [0.0; 4];
                x[k] = sign * t;
                if sampled_distance(s, &x, 4096)? >= clearance {
                    return Ok(x);
                }
            }
        }
        t *= 2.0;
    }
    Err(GeomError::NoInversionCenter)
}

/// Inversion center close to `anchor`: the first of anchor ± t e_k, t = step, 2 step, 4 step, ...
/// at sampled distance at least t/2 from the surface.
pub fn select_inversion_center_near(s: &ParametrizedSurface, anchor: Vec4, step: f64) -> Result<Vec4> {
    if !(step > 0.0) {
        return Err(GeomError::InvalidInput(format!("center search step {step}")));
    }
    let mut t = step;
    for _ in 0..40 {
        for k in 0..s.ambient_dim {
            for sign in [1.0, -1.0] {
                let mut x = anchor;
                x[k] += sign * t;
                if sampled_distance(s, &x, 4096)? >= 0.5 * t {
                    return Ok(x);
                }
            }
        }
        t *= 2.0;
    }
    Err(GeomError::NoInversionCenter)
}

/// Chart composed with a Möbius map.
pub fn push_chart(m: &Arc<MobiusMap>, chart: ChartFn) -> ChartFn {
    let m = m.clone();
    Arc::new(move |p| {
        let j = chart(p)?;
        push_jet_ambient(&j, m.as_ref()).map_err(|e| match e {
            GeomError::HitsCenter => GeomError::SingularAmbientPoint,
            e => e,
        })
    })
}

/// Image of a surface under a Möbius map.
///
/// Plane patches are split into the unit disk and the pulled-back exterior, so that a
/// map sending infinity to a finite point yields a compact parameter domain; ends then
/// become branch points of order multiplicity − 1.
pub fn transform_surface(m: &MobiusMap, s: &ParametrizedSurface) -> Result<ParametrizedSurface> {
    if let Some(a) = m.pole() {
        let d = sampled_distance(s, &a, 4096)?;
        if d < DELTA_SAFE {
            return Err(GeomError::CenterOnSurface { distance: d });
        }
    }
    let sends_infinity_to_finite = m.pole().is_some();
    let m = Arc::new(m.clone());
    let mut out = s.clone();
    out.id = format!("mobius({})", s.id);
    out.holomorphic = false;
    out.patches.clear();
    out.singular_points.clear();
    let mut new_index = Vec::new();
    for (k, p) in s.patches.iter().enumerate() {
        new_index.push(out.patches.len());
        if p.domain == Domain::Plane && sends_infinity_to_finite {
            let inner = Patch {
                chart: push_chart(&m, p.chart.clone()),
                domain: Domain::Disk(1.0),
                singular_origin: p.singular_origin,
                breaks: p.breaks.iter().copied().filter(|b| *b < 1.0).collect(),
                end_at_origin: false,
            };
            let outer = Patch {
                chart: push_chart(&m, pulled_by_inv_conj(p.chart.clone())),
                domain: Domain::Disk(1.0),
                singular_origin: true,
                breaks: p.breaks.iter().filter(|b| **b > 1.0).map(|b| 1.0 / b).collect(),
                end_at_origin: false,
            };
            let outer_index = out.patches.len() + 1;
            out.patches.push(inner);
            out.patches.push(outer);
            for sp in s.singular_points.iter().filter(|sp| sp.patch == k) {
                let moved = match (sp.param, sp.kind) {
                    (None, SingularKind::End { multiplicity }) => SingularPoint {
                        patch: outer_index,
                        param: Some([0.0, 0.0]),
                        kind: SingularKind::Branch { order: multiplicity - 1 },
                    },
                    (None, kind) => SingularPoint { patch: outer_index, param: Some([0.0, 0.0]), kind },
                    (Some(q), SingularKind::End { multiplicity }) => SingularPoint {
                        patch: new_index[k],
                        param: Some(q),
                        kind: SingularKind::Branch { order: multiplicity - 1 },
                    },
                    (Some(q), kind) => SingularPoint { patch: new_index[k], param: Some(q), kind },
                };
                out.singular_points.push(moved);
            }
        } else {
            let mut q = p.clone();
            q.chart = push_chart(&m, p.chart.clone());
            q.end_at_origin = p.end_at_origin && !sends_infinity_to_finite;
            out.patches.push(q);
            for sp in s.singular_points.iter().filter(|sp| sp.patch == k) {
                out.singular_points.push(SingularPoint { patch: new_index[k], ..*sp });
            }
        }
    }
    if sends_infinity_to_finite && s.patches.iter().all(|p| p.domain == Domain::Plane) {
        out.closed = true;
        out.inversion_pair = s.patches.len() == 1;
        if let Some(t) = out.topology.as_mut() {
            t.branch_orders = out
                .singular_points
                .iter()
                .filter_map(|sp| match sp.kind {
                    SingularKind::Branch { order } if order > 0 => Some(order),
                    _ => None,
                })
                .collect();
        }
    }
    Ok(out)
}

/// ∫|A⁰|² dμ over one patch region before and after the map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceProbe {
    pub before: f64,
    pub before_error: f64,
    pub after: f64,
    pub after_error: f64,
}

impl InvarianceProbe {
    pub fn consistent(&self, factor: f64) -> bool {
        (self.before - self.after).abs() <= factor * (self.before_error + self.after_error) + 1e-12
    }
}

/// Compares ∫|A⁰|² dμ over `domain` in patch 0 of S and of m(S).
pub fn invariance_probe(m: &MobiusMap, s: &ParametrizedSurface, domain: Domain, cfg: &QuadConfig) -> Result<InvarianceProbe> {
    if let Some(a) = m.pole() {
        let d = sampled_distance(s, &a, 4096)?;
        if d < DELTA_SAFE {
            return Err(GeomError::CenterOnSurface { distance: d });
        }
    }
    let base = Patch { domain, ..s.patches[0].clone() };
    let moved = Patch { chart: push_chart(&Arc::new(m.clone()), base.chart.clone()), ..base.clone() };
    let a0 = crate::geometry::DensityKind::A0Sq.index();
    let b = base.integrate(cfg)?;
    let a = moved.integrate(cfg)?;
    Ok(InvarianceProbe { before: b.values[a0], before_error: b.errors[a0], after: a.values[a0], after_error: a.errors[a0] })
}

/// Residuals of the two candidate laws for the mean curvature of an inverted surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionLawVerdict {
    /// max relative residual of H̃ = R(|h|² H + 4 h^⊥)/r²
    pub residual_exponent2: f64,
    /// max relative residual of H̃ = R(|h|⁴ H + 4 |h|² h^⊥)/r²
    pub residual_exponent4: f64,
    /// The exponent whose residual is at most 1e-6, if exactly one is.
    pub selected: Option<u32>,
}

/// Compares the jet-computed mean curvature of I(S) with both candidate transformation laws,
/// for the inversion x -> c + r²(x − c)/|x − c|².
pub fn mean_curvature_inversion_check(
    s: &ParametrizedSurface,
    center: Vec4,
    radius: f64,
    samples: usize,
) -> Result<InversionLawVerdict> {
    let m = MobiusMap::identity(s.ambient_dim).invert(center, radius)?;
    let mut res = [0.0f64; 2];
    for (k, p) in s.sample_params(samples) {
        let j: Jet2 = s.eval(k, p)?;
        let cd = fundamental_forms(&j)?;
        let inv = push_jet_ambient(&j, &m)?;
        let ci = fundamental_forms(&inv)?;
        let h = sub(&j.value, &center);
        let hh = dot(&h, &h);
        // Normal part of h.
        let ginv = [
            [cd.g[1][1] / cd.detg, -cd.g[0][1] / cd.detg],
            [-cd.g[0][1] / cd.detg, cd.g[0][0] / cd.detg],
        ];
        let c = [dot(&h, &j.d1[0]), dot(&h, &j.d1[1])];
        let coef = [ginv[0][0] * c[0] + ginv[0][1] * c[1], ginv[1][0] * c[0] + ginv[1][1] * c[1]];
        let hperp: Vec4 = std::array::from_fn(|i| h[i] - coef[0] * j.d1[0][i] - coef[1] * j.d1[1][i]);
        let reflect = |v: &Vec4| -> Vec4 {
            let t = dot(v, &h) / hh;
            std::array::from_fn(|i| v[i] - 2.0 * t * h[i])
        };
        let r2 = radius * radius;
        let cand2 = reflect(&std::array::from_fn(|i| (hh * cd.h[i] + 4.0 * hperp[i]) / r2));
        let cand4 = reflect(&std::array::from_fn(|i| (hh * hh * cd.h[i] + 4.0 * hh * hperp[i]) / r2));
        let norm = dot(&ci.h, &ci.h).sqrt().max(1e-300);
        for (r, cand) in res.iter_mut().zip([cand2, cand4]) {
            let d = sub(&ci.h, &cand);
            *r = r.max(dot(&d, &d).sqrt() / norm);
        }
    }
    let ok: Vec<u32> = [(2u32, res[0]), (4, res[1])].iter().filter(|(_, r)| *r <= 1e-6).map(|(e, _)| *e).collect();
    Ok(InversionLawVerdict {
        residual_exponent2: res[0],
        residual_exponent4: res[1],
        selected: if ok.len() == 1 { Some(ok[0]) } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{chen_graph, enneper, round_sphere};

    fn close(a: &Vec4, b: &Vec4, tol: f64) -> bool {
        (0..4).all(|i| (a[i] - b[i]).abs() <= tol * (1.0 + b[i].abs()))
    }

    fn samples() -> Vec<Vec4> {
        (1..40)
            .map(|i| {
                let h = |b| crate::quad::halton(i, b) * 4.0 - 2.0;
                [h(2), h(3), h(5), h(7)]
            })
            .collect()
    }

    fn rotation() -> Mat4 {
        let (s, c) = 0.7f64.sin_cos();
        let (s2, c2) = 1.9f64.sin_cos();
        [[c, -s, 0.0, 0.0], [s, c, 0.0, 0.0], [0.0, 0.0, c2, -s2], [0.0, 0.0, s2, c2]]
    }

    #[test]
    fn unit_inversion_of_a_point() {
        let m = MobiusMap::unit_inversion(3);
        assert!(close(&m.apply(&[2.0, 0.0, 0.0, 0.0]).unwrap(), &[0.5, 0.0, 0.0, 0.0], 1e-15));
        assert!(matches!(m.apply(&[0.0; 4]), Err(GeomError::HitsCenter)));
    }

    #[test]
    fn dilations_cancel() {
        let m = MobiusMap::identity(4).dilate(3.5).unwrap().dilate(1.0 / 3.5).unwrap();
        for x in samples() {
            assert!(close(&m.apply(&x).unwrap(), &x, 1e-15));
        }
    }

    #[test]
    fn centered_inversion_matches_direct_formula() {
        let x0 = [0.3, -1.0, 2.0, 0.5];
        let m = MobiusMap::centered_inversion(4, x0);
        for x in samples() {
            let d = sub(&x, &x0);
            let direct = scale(&d, 1.0 / dot(&d, &d));
            assert!(close(&m.apply(&x).unwrap(), &direct, 1e-13));
        }
    }

    #[test]
    fn inversion_is_an_involution() {
        let c = [1.0, 2.0, -0.5, 0.0];
        let m = MobiusMap::identity(4).invert(c, 1.7).unwrap().invert(c, 1.7).unwrap();
        assert!(m.pole().is_none());
        for x in samples() {
            assert!(close(&m.apply(&x).unwrap(), &x, 1e-12));
        }
    }

    #[test]
    fn normal_form_matches_primitive_chain() {
        let m = MobiusMap::identity(4)
            .translate([0.1, 0.2, -0.3, 0.4])
            .unwrap()
            .invert([1.0, 0.0, 0.0, 0.0], 2.0)
            .unwrap()
            .orthogonal(rotation())
            .unwrap()
            .dilate(0.7)
            .unwrap()
            .invert([0.0, 1.0, -1.0, 0.5], 0.8)
            .unwrap()
            .translate([2.0, 0.0, 0.0, -1.0])
            .unwrap()
            .invert([0.5, 0.5, 0.5, 0.5], 1.3)
            .unwrap();
        for x in samples() {
            let a = m.apply(&x).unwrap();
            let b = m.apply_chain(&x).unwrap();
            assert!(close(&a, &b, 1e-10), "{a:?} vs {b:?}");
        }
        let inv = m.inverse().unwrap();
        for x in samples() {
            assert!(close(&inv.apply(&m.apply(&x).unwrap()).unwrap(), &x, 1e-9));
        }
    }

    #[test]
    fn translation_derivatives_are_trivial() {
        let m = MobiusMap::identity(3).translate([1.0, 2.0, 3.0, 0.0]).unwrap();
        let d = m.derivatives(&[0.3, 0.1, 0.2, 0.0]).unwrap();
        assert_eq!(d.first, identity());
        assert_eq!(d.second, [[[0.0; 4]; 4]; 4]);
    }

    #[test]
    fn inversion_jacobian_on_the_axis() {
        let m = MobiusMap::unit_inversion(3);
        let d = m.derivatives(&[2.0, 0.0, 0.0, 0.0]).unwrap();
        let expected = [[-0.25, 0.0, 0.0], [0.0, 0.25, 0.0], [0.0, 0.0, 0.25]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((d.first[i][j] - expected[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = MobiusMap::identity(4)
            .invert([1.0, 0.0, 0.5, 0.0], 1.5)
            .unwrap()
            .orthogonal(rotation())
            .unwrap()
            .invert([0.0, 2.0, 0.0, 1.0], 1.0)
            .unwrap();
        let h = 1e-5;
        for x in samples().into_iter().take(15) {
            let d = m.derivatives(&x).unwrap();
            for a in 0..4 {
                let mut xp = x;
                let mut xm = x;
                xp[a] += h;
                xm[a] -= h;
                let dp = m.derivatives(&xp).unwrap();
                let dm = m.derivatives(&xm).unwrap();
                for i in 0..4 {
                    let fd = (dp.value[i] - dm.value[i]) / (2.0 * h);
                    assert!((fd - d.first[i][a]).abs() <= 1e-7 * (1.0 + fd.abs()));
                    for b in 0..4 {
                        let fd2 = (dp.first[i][b] - dm.first[i][b]) / (2.0 * h);
                        assert!((fd2 - d.second[i][b][a]).abs() <= 1e-7 * (1.0 + fd2.abs()));
                        assert!((d.second[i][a][b] - d.second[i][b][a]).abs() <= 1e-12 * (1.0 + fd2.abs()));
                    }
                }
            }
        }
    }

    #[test]
    fn non_orthogonal_matrix_rejected() {
        let mut o = identity();
        o[0][1] = 1e-6;
        assert!(MobiusMap::identity(4).orthogonal(o).is_err());
    }

    #[test]
    fn parses_cli_fragment() {
        let m = parse_mobius("invert:0,0,0,0;r=1|dilate:2|translate:1,0,0,0", 4).unwrap();
        let y = m.apply(&[2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(close(&y, &[2.0, 0.0, 0.0, 0.0], 1e-15));
        assert!(matches!(parse_mobius("dilate:x", 4), Err(GeomError::ParseError { position: 7, .. })));
        assert!(matches!(parse_mobius("shear:1", 4), Err(GeomError::ParseError { position: 0, .. })));
        assert!(parse_mobius("translate:1,2", 4).is_err());
    }

    #[test]
    fn center_on_surface_is_rejected() {
        let m = MobiusMap::unit_inversion(4);
        assert!(matches!(transform_surface(&m, &chen_graph()), Err(GeomError::CenterOnSurface { .. })));
    }

    #[test]
    fn transform_then_inverse_restores_jets() {
        let s = enneper();
        let m = MobiusMap::identity(3).invert([0.0, 0.0, 5.0, 0.0], 1.0).unwrap().dilate(2.0).unwrap();
        let t = transform_surface(&m, &s).unwrap();
        // The inverse sends the image of the end to infinity, so it cannot be applied to the
        // compactified surface as a whole; compose pointwise instead.
        assert!(matches!(
            transform_surface(&m.inverse().unwrap(), &t),
            Err(GeomError::CenterOnSurface { .. })
        ));
        let inv = m.inverse().unwrap();
        for (_, p) in s.sample_params(30) {
            if p[0] * p[0] + p[1] * p[1] > 1.0 {
                continue;
            }
            let a = s.eval(0, p).unwrap();
            let b = push_jet_ambient(&t.eval(0, p).unwrap(), &inv).unwrap();
            for i in 0..3 {
                assert!((a.value[i] - b.value[i]).abs() < 1e-9 * (1.0 + a.value[i].abs()));
                for k in 0..3 {
                    assert!((a.d2[k][i] - b.d2[k][i]).abs() < 1e-9 * (1.0 + a.d2[k][i].abs()));
                }
            }
        }
    }

    #[test]
    fn inversion_law_has_exponent_two() {
        let v = mean_curvature_inversion_check(&enneper(), [0.0, 0.0, 5.0, 0.0], 1.0, 50).unwrap();
        assert_eq!(v.selected, Some(2), "{v:?}");
        let v = mean_curvature_inversion_check(&round_sphere(1.0).unwrap(), [0.0, 3.0, 0.0, 0.0], 2.0, 50).unwrap();
        assert_eq!(v.selected, Some(2), "{v:?}");
    }
}
