//! Adaptive polar quadrature over disks, annuli and the plane, plus limit extrapolation.
//!
//! Every integral is assembled from polar cells `[r0, r1] x [t0, t1]` carrying a tensor
//! Gauss-Legendre rule of order 16. A cell is accepted once the difference between its own
//! estimate and the sum over its four children drops below the cell's share of the tolerance;
//! that difference is what gets reported as the error estimate. Initial cells are evaluated in
//! parallel but always reduced in a fixed order, so results do not depend on the thread count.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

pub const GL_ORDER: usize = 16;

/// Nodes and weights of the Gauss-Legendre rule of order [`GL_ORDER`] on [-1, 1].
pub fn gauss_legendre() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut x = [0.0; GL_ORDER];
        let mut w = [0.0; GL_ORDER];
        for i in 0..n {
            let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, t);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
                let dt = p1 / dp;
                t -= dt;
                if dt.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = t;
            w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        }
        (x, w)
    })
}

/// Radical inverse of `i` in `base` (van der Corput / Halton component).
pub fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `n` area-uniform Halton points in the annulus r_in <= |z| <= r_out.
pub fn halton_annulus(n: usize, r_in: f64, r_out: f64) -> Vec<[f64; 2]> {
    (1..=n)
        .map(|i| {
            let u = halton(i, 2);
            let v = halton(i, 3);
            let r = (r_in * r_in + u * (r_out * r_out - r_in * r_in)).sqrt();
            let t = 2.0 * PI * v;
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
    pub max_rings: usize,
    pub sectors: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-12, max_depth: 24, max_rings: 40, sectors: 8 }
    }
}

impl QuadConfig {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
    pub subdivisions: u64,
    /// Set when a cell hit the depth limit above tolerance or had to be skipped.
    pub flagged: bool,
}

/// Several integrals over the same nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResultN<const N: usize> {
    pub values: [f64; N],
    pub errors: [f64; N],
    pub evaluations: u64,
    pub subdivisions: u64,
    pub skipped_cells: u64,
    pub flagged: bool,
}

impl<const N: usize> Default for QuadResultN<N> {
    fn default() -> Self {
        Self { values: [0.0; N], errors: [0.0; N], evaluations: 0, subdivisions: 0, skipped_cells: 0, flagged: false }
    }
}

impl<const N: usize> QuadResultN<N> {
    pub fn component(&self, i: usize) -> QuadResult {
        QuadResult {
            value: self.values[i],
            error_estimate: self.errors[i],
            evaluations: self.evaluations,
            subdivisions: self.subdivisions,
            flagged: self.flagged,
        }
    }

    pub fn accumulate(&mut self, o: &Self) {
        for i in 0..N {
            self.values[i] += o.values[i];
            self.errors[i] += o.errors[i];
        }
        self.evaluations += o.evaluations;
        self.subdivisions += o.subdivisions;
        self.skipped_cells += o.skipped_cells;
        self.flagged |= o.flagged;
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for i in 0..N {
            self.values[i] *= s;
            self.errors[i] *= s.abs();
        }
        self
    }

    /// Checks every component's error against `rel_tol * |value| + abs_tol`.
    pub fn check(&self, rel_tol: f64, abs_tol: f64) -> Result<()> {
        for i in 0..N {
            if self.errors[i] > rel_tol * self.values[i].abs() + abs_tol || self.flagged {
                return Err(GeomError::ToleranceNotMet { value: self.values[i], error: self.errors[i] });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarCell {
    pub r0: f64,
    pub r1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl PolarCell {
    fn split(&self) -> [PolarCell; 4] {
        let rm = 0.5 * (self.r0 + self.r1);
        let tm = 0.5 * (self.t0 + self.t1);
        [
            PolarCell { r0: self.r0, r1: rm, t0: self.t0, t1: tm },
            PolarCell { r0: rm, r1: self.r1, t0: self.t0, t1: tm },
            PolarCell { r0: self.r0, r1: rm, t0: tm, t1: self.t1 },
            PolarCell { r0: rm, r1: self.r1, t0: tm, t1: self.t1 },
        ]
    }
}

#[derive(Clone, Copy, Debug)]
struct CellEval<const N: usize> {
    values: [f64; N],
    abs: [f64; N],
    failed: bool,
}

fn recoverable(e: &GeomError) -> bool {
    matches!(
        e,
        GeomError::DegenerateMetric(_)
            | GeomError::DivisionByZeroAtPole(_)
            | GeomError::SingularAmbientPoint
            | GeomError::HitsCenter
            | GeomError::DegenerateReparam
    )
}

fn eval_cell<const N: usize, F>(f: &F, c: &PolarCell) -> Result<CellEval<N>>
where
    F: Fn([f64; 2]) -> Result<[f64; N]> + Sync,
{
    let (x, w) = gauss_legendre();
    let hr = 0.5 * (c.r1 - c.r0);
    let mr = 0.5 * (c.r1 + c.r0);
    let ht = 0.5 * (c.t1 - c.t0);
    let mt = 0.5 * (c.t1 + c.t0);
    let mut values = [0.0; N];
    let mut abs = [0.0; N];
    let mut failed = false;
    for j in 0..GL_ORDER {
        let t = mt + ht * x[j];
        let (s, co) = t.sin_cos();
        let mut row = [0.0; N];
        let mut row_abs = [0.0; N];
        for i in 0..GL_ORDER {
            let r = mr + hr * x[i];
            match f([r * co, r * s]) {
                Ok(v) => {
                    for k in 0..N {
                        let term = w[i] * r * v[k];
                        row[k] += term;
                        row_abs[k] += term.abs();
                    }
                }
                Err(e) if recoverable(&e) => failed = true,
                Err(e) => return Err(e),
            }
        }
        for k in 0..N {
            values[k] += w[j] * row[k];
            abs[k] += w[j] * row_abs[k];
        }
    }
    let jac = hr * ht;
    Ok(CellEval { values: values.map(|v| v * jac), abs: abs.map(|v| v * jac), failed })
}

const NODES_PER_CELL: u64 = (GL_ORDER * GL_ORDER) as u64;

fn adapt<const N: usize, F>(
    f: &F,
    cell: &PolarCell,
    est: CellEval<N>,
    tol: [f64; N],
    depth: u32,
    cfg: &QuadConfig,
) -> Result<QuadResultN<N>>
where
    F: Fn([f64; 2]) -> Result<[f64; N]> + Sync,
{
    let kids = cell.split();
    let mut evals = [est; 4];
    for (e, k) in evals.iter_mut().zip(kids.iter()) {
        *e = eval_cell(f, k)?;
    }
    let mut out = QuadResultN::<N> { evaluations: 4 * NODES_PER_CELL, subdivisions: 1, ..Default::default() };
    let any_failed = est.failed || evals.iter().any(|e| e.failed);
    let mut sum = [0.0; N];
    let mut abs = [0.0; N];
    for e in &evals {
        for k in 0..N {
            sum[k] += e.values[k];
            abs[k] += e.abs[k];
        }
    }
    let diff: [f64; N] = std::array::from_fn(|k| (sum[k] - est.values[k]).abs());
    let converged = !any_failed && (0..N).all(|k| diff[k] <= tol[k]);
    if converged || depth >= cfg.max_depth {
        for k in 0..N {
            out.values[k] = sum[k];
            out.errors[k] = diff[k] + 50.0 * f64::EPSILON * abs[k];
        }
        if !converged {
            out.flagged = true;
            if any_failed {
                out.skipped_cells = 1;
                for k in 0..N {
                    out.errors[k] += abs[k];
                }
            }
        }
        return Ok(out);
    }
    let child_tol = tol.map(|t| 0.5 * t);
    for (k, e) in kids.iter().zip(evals) {
        let r = adapt(f, k, e, child_tol, depth + 1, cfg)?;
        out.accumulate(&r);
    }
    Ok(out)
}

/// Adaptive integration over a fixed list of initial cells.
///
/// `scale_hint` is a magnitude per component used to set the absolute tolerance when the
/// cells themselves integrate to something small relative to a larger total.
pub fn integrate_cells<const N: usize, F>(
    f: &F,
    cells: &[PolarCell],
    cfg: &QuadConfig,
    scale_hint: [f64; N],
) -> Result<QuadResultN<N>>
where
    F: Fn([f64; 2]) -> Result<[f64; N]> + Sync,
{
    let ests: Vec<CellEval<N>> = cells.par_iter().map(|c| eval_cell(f, c)).collect::<Result<_>>()?;
    let mut total = [0.0; N];
    let mut total_abs = [0.0; N];
    for e in &ests {
        for k in 0..N {
            total[k] += e.values[k];
            total_abs[k] += e.abs[k];
        }
    }
    let tol_abs: [f64; N] =
        std::array::from_fn(|k| (cfg.rel_tol * total[k].abs().max(scale_hint[k])).max(cfg.abs_tol));
    let n = cells.len() as f64;
    let parts: Vec<QuadResultN<N>> = cells
        .par_iter()
        .zip(ests.par_iter())
        .map(|(c, e)| {
            let tol: [f64; N] = std::array::from_fn(|k| {
                let share = if total_abs[k] > 0.0 { e.abs[k] / total_abs[k] } else { 0.0 };
                0.5 * tol_abs[k] * (share + 1.0 / n)
            });
            adapt(f, c, *e, tol, 0, cfg)
        })
        .collect::<Result<_>>()?;
    let mut out = QuadResultN::<N> { evaluations: cells.len() as u64 * NODES_PER_CELL, ..Default::default() };
    for p in &parts {
        out.accumulate(p);
    }
    Ok(out)
}

fn radial_partition(r_in: f64, r_out: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts = vec![r_in, r_out];
    let mut r = r_out;
    let floor = if r_in > 0.0 { r_in } else { r_out / 64.0 };
    while r / 2.0 > floor * (1.0 + 1e-12) {
        r /= 2.0;
        pts.push(r);
    }
    if r_in == 0.0 {
        pts.push(floor);
    }
    pts.extend(breaks.iter().copied().filter(|&b| b > r_in * (1.0 + 1e-12) && b < r_out * (1.0 - 1e-12)));
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    pts
}

fn polar_cells(radii: &[f64], sectors: usize) -> Vec<PolarCell> {
    let mut cells = Vec::new();
    for w in radii.windows(2) {
        for s in 0..sectors {
            let t0 = 2.0 * PI * s as f64 / sectors as f64;
            let t1 = 2.0 * PI * (s + 1) as f64 / sectors as f64;
            cells.push(PolarCell { r0: w[0], r1: w[1], t0, t1 });
        }
    }
    cells
}

/// Integral over r_in <= |z| <= r_out (r_in may be 0 for a regular disk).
///
/// `breaks` are radii where the integrand is only finitely smooth; cells never straddle them.
pub fn integrate_annulus_n<const N: usize, F>(
    f: &F,
    r_in: f64,
    r_out: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
    scale_hint: [f64; N],
) -> Result<QuadResultN<N>>
where
    F: Fn([f64; 2]) -> Result<[f64; N]> + Sync,
{
    if !(r_in >= 0.0 && r_out > r_in) {
        return Err(GeomError::InvalidInput(format!("annulus ({r_in}, {r_out})")));
    }
    let cells = polar_cells(&radial_partition(r_in, r_out, breaks), cfg.sectors);
    integrate_cells(f, &cells, cfg, scale_hint)
}

/// Scalar version of [`integrate_annulus_n`].
pub fn integrate_annulus<F>(density: &F, r_in: f64, r_out: f64, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn([f64; 2]) -> Result<f64> + Sync,
{
    let g = |p: [f64; 2]| density(p).map(|v| [v]);
    Ok(integrate_annulus_n(&g, r_in, r_out, &[], cfg, [0.0])?.component(0))
}

/// Geometric continuation of a sequence of shell contributions; returns (tail, bound).
fn geometric_tail(last3: &[f64]) -> (f64, f64) {
    let (a, b, c) = (last3[0], last3[1], last3[2]);
    if c == 0.0 {
        return (0.0, 0.0);
    }
    let q1 = b / a;
    let q2 = c / b;
    if q2.is_finite() && q2 > 0.0 && q2 < 0.9 && q1.is_finite() && q1 > 0.0 {
        let q = q2.max(q1).min(0.9);
        let tail = c * q2 / (1.0 - q2);
        let bound = (c * q / (1.0 - q)).abs();
        (tail, bound)
    } else {
        (0.0, c.abs() * 10.0)
    }
}

/// Disk integral whose integrand is singular (or merely non-smooth) at the origin.
///
/// Dyadic shells are added toward the origin until a shell contributes less than a tenth of
/// the tolerance; the remaining core is estimated from the geometric trend of the last three
/// shells and that estimate is also charged to the error.
pub fn integrate_disk_singular_n<const N: usize, F>(
    f: &F,
    r_out: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
    scale_hint: [f64; N],
) -> Result<QuadResultN<N>>
where
    F: Fn([f64; 2]) -> Result<[f64; N]> + Sync,
{
    let outer_in = r_out / 16.0;
    let mut out = integrate_annulus_n(f, outer_in, r_out, breaks, cfg, scale_hint)?;
    let scale: [f64; N] = std::array::from_fn(|k| out.values[k].abs().max(scale_hint[k]));
    let tol: [f64; N] = std::array::from_fn(|k| (cfg.rel_tol * scale[k]).max(cfg.abs_tol));
    let mut shells: Vec<[f64; N]> = Vec::new();
    let mut r = outer_in;
    for _ in 0..cfg.max_rings {
        let s = integrate_annulus_n(f, r / 2.0, r, breaks, cfg, scale)?;
        out.accumulate(&s);
        shells.push(s.values);
        r /= 2.0;
        let small = (0..N).all(|k| s.values[k].abs() < 0.1 * tol[k]);
        if small && shells.len() >= 3 {
            let m = shells.len();
            for k in 0..N {
                let (tail, bound) = geometric_tail(&[shells[m - 3][k], shells[m - 2][k], shells[m - 1][k]]);
                out.values[k] += tail;
                out.errors[k] += bound;
            }
            return Ok(out);
        }
    }
    out.flagged = true;
    Ok(out)
}

/// Integral over the whole plane: a disk of radius 1 and dyadic rings (2^k, 2^(k+1)).
///
/// Rings are added until two consecutive rings fall below the tolerance; the geometric
/// tail of the last three rings is added to the value and charged to the error.
pub fn integrate_plane_n<const N: usize, F>(
    f: &F,
    singular_origin: bool,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadResultN<N>>
where
    F: Fn([f64; 2]) -> Result<[f64; N]> + Sync,
{
    let mut out = if singular_origin {
        integrate_disk_singular_n(f, 1.0, breaks, cfg, [0.0; N])?
    } else {
        integrate_annulus_n(f, 0.0, 1.0, breaks, cfg, [0.0; N])?
    };
    let mut rings: Vec<[f64; N]> = Vec::new();
    let mut quiet = 0;
    let mut r = 1.0;
    for _ in 0..cfg.max_rings {
        let hint: [f64; N] = std::array::from_fn(|k| out.values[k].abs());
        let s = integrate_annulus_n(f, r, 2.0 * r, breaks, cfg, hint)?;
        out.accumulate(&s);
        rings.push(s.values);
        r *= 2.0;
        let small =
            (0..N).all(|k| s.values[k].abs() < (cfg.rel_tol * out.values[k].abs()).max(cfg.abs_tol));
        quiet = if small { quiet + 1 } else { 0 };
        if quiet >= 2 && rings.len() >= 3 {
            let m = rings.len();
            for k in 0..N {
                let (tail, bound) = geometric_tail(&[rings[m - 3][k], rings[m - 2][k], rings[m - 1][k]]);
                out.values[k] += tail;
                out.errors[k] += bound;
            }
            return Ok(out);
        }
    }
    Err(GeomError::NoDecayDetected { rings: cfg.max_rings })
}

/// Scalar version of [`integrate_plane_n`].
pub fn integrate_plane<F>(density: &F, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn([f64; 2]) -> Result<f64> + Sync,
{
    let g = |p: [f64; 2]| density(p).map(|v| [v]);
    Ok(integrate_plane_n(&g, false, &[], cfg)?.component(0))
}

/// Fitted model v(ρ) ≈ limit + c ρ^rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub limit: f64,
    /// `None` when the sequence is constant and no rate can be fitted.
    pub rate: Option<f64>,
    /// In (0, 1]; 1 for an exact fit.
    pub confidence: f64,
    pub monotone: bool,
}

/// Fits v(ρ) = L + c ρ^p to a geometric ρ sequence by log-difference regression.
pub fn extrapolate_limit(rhos: &[f64], values: &[f64]) -> Result<Extrapolation> {
    let n = rhos.len();
    if n < 3 || values.len() != n {
        return Err(GeomError::InvalidInput("extrapolation needs at least 3 (rho, value) rows".into()));
    }
    let q = rhos[1] / rhos[0];
    if !(q > 0.0 && q < 1.0) || rhos.windows(2).any(|w| ((w[1] / w[0]) - q).abs() > 1e-9 * q) {
        return Err(GeomError::InvalidInput("rho values must decrease geometrically".into()));
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| w[0] - w[1]).collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let monotone = diffs.iter().all(|d| *d >= 0.0) || diffs.iter().all(|d| *d <= 0.0);
    if diffs.iter().all(|d| d.abs() <= 1e-14 * scale) {
        return Ok(Extrapolation { limit: values[n - 1], rate: None, confidence: 1.0, monotone: true });
    }
    let same_sign = diffs.iter().all(|d| *d > 0.0) || diffs.iter().all(|d| *d < 0.0);
    if !same_sign {
        let mean = values.iter().sum::<f64>() / n as f64;
        let spread = values.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
        return Ok(Extrapolation {
            limit: values[n - 1],
            rate: None,
            confidence: 1.0 / (1.0 + spread / scale * 1e6),
            monotone,
        });
    }
    // Slope of ln|d_i| against ln ρ_i.
    let xs: Vec<f64> = rhos[..n - 1].iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = diffs.iter().map(|d| d.abs().ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let p = sxy / sxx;
    // Least squares for (L, c) in v = L + c ρ^p.
    let basis: Vec<f64> = rhos.iter().map(|r| r.powf(p)).collect();
    let mb = basis.iter().sum::<f64>() / n as f64;
    let mv = values.iter().sum::<f64>() / n as f64;
    let sbv: f64 = basis.iter().zip(values).map(|(b, v)| (b - mb) * (v - mv)).sum();
    let sbb: f64 = basis.iter().map(|b| (b - mb) * (b - mb)).sum();
    let c = sbv / sbb;
    let limit = mv - c * mb;
    let rms = (basis.iter().zip(values).map(|(b, v)| (limit + c * b - v).powi(2)).sum::<f64>() / n as f64).sqrt();
    let last = diffs[n - 2].abs();
    Ok(Extrapolation { limit, rate: Some(p), confidence: 1.0 / (1.0 + rms / last), monotone })
}

/// One row of an energy sweep over the glue scale ρ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rho: f64,
    pub willmore: QuadResult,
    pub a2: QuadResult,
    pub a0: QuadResult,
    pub total_curvature: QuadResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub construction: String,
    pub rows: Vec<SweepRow>,
    pub willmore_limit: Extrapolation,
    pub a2_limit: Extrapolation,
}

impl SweepTable {
    pub fn new(construction: impl Into<String>, rows: Vec<SweepRow>) -> Result<Self> {
        if rows.windows(2).any(|w| w[1].rho >= w[0].rho) {
            return Err(GeomError::InvalidInput("sweep rho values must be strictly decreasing".into()));
        }
        let rhos: Vec<f64> = rows.iter().map(|r| r.rho).collect();
        let w: Vec<f64> = rows.iter().map(|r| r.willmore.value).collect();
        let a2: Vec<f64> = rows.iter().map(|r| r.a2.value).collect();
        Ok(Self {
            construction: construction.into(),
            willmore_limit: extrapolate_limit(&rhos, &w)?,
            a2_limit: extrapolate_limit(&rhos, &a2)?,
            rows,
        })
    }

    /// W never increases by more than `factor` times the per-step error budget.
    pub fn willmore_non_increasing(&self, factor: f64) -> bool {
        self.rows.windows(2).all(|w| {
            let budget = factor * (w[0].willmore.error_estimate + w[1].willmore.error_estimate);
            w[1].willmore.value <= w[0].willmore.value + budget
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rho,W,W_err,a2,a2_err,a0,a0_err,totK,totK_err\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.rho,
                r.willmore.value,
                r.willmore.error_estimate,
                r.a2.value,
                r.a2.error_estimate,
                r.a0.value,
                r.a0.error_estimate,
                r.total_curvature.value,
                r.total_curvature.error_estimate
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre();
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i30: f64 = x.iter().zip(w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((i30 - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn flat_annulus_area() {
        let r = integrate_annulus(&|_p| Ok(1.0), 1.0, 2.0, &QuadConfig::default()).unwrap();
        assert!((r.value - 3.0 * PI).abs() < 1e-12);
        assert!((r.value - 3.0 * PI).abs() <= 5.0 * r.error_estimate);
    }

    #[test]
    fn inverse_square_bump_over_plane() {
        let f = |p: [f64; 2]| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            Ok(1.0 / ((1.0 + r2) * (1.0 + r2)))
        };
        let r = integrate_plane(&f, &QuadConfig::with_tol(1e-10)).unwrap();
        assert!((r.value - PI).abs() < 1e-8, "{}", r.value);
        assert!((r.value - PI).abs() <= 5.0 * r.error_estimate);
    }

    #[test]
    fn constant_density_over_plane_diverges() {
        let r = integrate_plane(&|_p| Ok(1.0), &QuadConfig::default());
        assert!(matches!(r, Err(GeomError::NoDecayDetected { .. })));
    }

    #[test]
    fn singular_disk_with_integrable_blowup() {
        // ∫_{|z|<1} |z|^{-1} dA = 2π.
        let f = |p: [f64; 2]| Ok([1.0 / (p[0] * p[0] + p[1] * p[1]).sqrt()]);
        let r = integrate_disk_singular_n(&f, 1.0, &[], &QuadConfig::with_tol(1e-9), [0.0]).unwrap();
        assert!((r.values[0] - 2.0 * PI).abs() < 1e-7, "{}", r.values[0]);
        assert!((r.values[0] - 2.0 * PI).abs() <= 5.0 * r.errors[0]);
    }

    #[test]
    fn breaks_are_respected_for_kinked_integrands() {
        let f = |p: [f64; 2]| {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            Ok([if r < 0.5 { 1.0 } else { 0.0 }])
        };
        let r = integrate_annulus_n(&f, 0.0, 1.0, &[0.5], &QuadConfig::default(), [0.0]).unwrap();
        assert!((r.values[0] - 0.25 * PI).abs() < 1e-13);
    }

    #[test]
    fn extrapolation_of_exact_power_law() {
        let rhos = [0.2, 0.1, 0.05];
        let v: Vec<f64> = rhos.iter().map(|r| 5.0 + r * r).collect();
        let e = extrapolate_limit(&rhos, &v).unwrap();
        assert!((e.limit - 5.0).abs() < 1e-6);
        assert!((e.rate.unwrap() - 2.0).abs() < 1e-6);
        assert!(e.monotone);
    }

    #[test]
    fn extrapolation_of_constant_sequence() {
        let e = extrapolate_limit(&[0.2, 0.1, 0.05], &[3.0, 3.0, 3.0]).unwrap();
        assert_eq!(e.limit, 3.0);
        assert!(e.rate.is_none());
    }

    #[test]
    fn extrapolation_rejects_short_or_irregular_input() {
        assert!(extrapolate_limit(&[0.2, 0.1], &[1.0, 2.0]).is_err());
        assert!(extrapolate_limit(&[0.2, 0.1, 0.07], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn halton_points_stay_in_annulus() {
        for p in halton_annulus(500, 0.5, 2.0) {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((0.5..=2.0).contains(&r));
        }
    }
}
