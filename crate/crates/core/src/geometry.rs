//! Pointwise extrinsic geometry of an immersion from its 2-jet.
//!
//! Trace conventions: H = g^{ij} A_ij, so the unit sphere has |H| = 2, |A|^2 = 2, K = 1
//! and |A|^2 = |H|^2 - 2K holds in every codimension.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::jets::{Jet2, Vec4, MAX_DIM};

/// Relative degeneracy threshold: det g <= EPS_IMM * (tr g)^2 is treated as non-immersed.
pub const EPS_IMM: f64 = 1e-24;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureData {
    pub g: [[f64; 2]; 2],
    pub detg: f64,
    /// A_11, A_12, A_22.
    pub a: [Vec4; 3],
    pub h: Vec4,
    /// Tracefree part A_ij - g_ij H / 2, same layout as `a`.
    pub a0: [Vec4; 3],
    pub k: f64,
    pub area_density: f64,
    pub a_sq: f64,
    pub h_sq: f64,
    pub a0_sq: f64,
}

fn dot(a: &Vec4, b: &Vec4) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn idx(i: usize, j: usize) -> usize {
    i + j
}

/// Full contraction g^{ik} g^{jl} <T_ij, T_kl> of a symmetric normal-valued form.
fn contract(t: &[Vec4; 3], ginv: &[[f64; 2]; 2]) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    s += ginv[i][k] * ginv[j][l] * dot(&t[idx(i, j)], &t[idx(k, l)]);
                }
            }
        }
    }
    s
}

fn metric(j: &Jet2) -> Result<([[f64; 2]; 2], f64)> {
    let g11 = dot(&j.d1[0], &j.d1[0]);
    let g12 = dot(&j.d1[0], &j.d1[1]);
    let g22 = dot(&j.d1[1], &j.d1[1]);
    let det = g11 * g22 - g12 * g12;
    let tr = g11 + g22;
    if !det.is_finite() || det <= EPS_IMM * tr * tr || det <= f64::MIN_POSITIVE {
        return Err(GeomError::DegenerateMetric(det));
    }
    Ok(([[g11, g12], [g12, g22]], det))
}

/// First and second fundamental forms, mean curvature vector and Gauss curvature.
pub fn fundamental_forms(j: &Jet2) -> Result<CurvatureData> {
    let (g, det) = metric(j)?;
    let ginv = [[g[1][1] / det, -g[0][1] / det], [-g[0][1] / det, g[0][0] / det]];

    let mut a = [[0.0; MAX_DIM]; 3];
    for (kl, second) in j.d2.iter().enumerate() {
        let c = [dot(second, &j.d1[0]), dot(second, &j.d1[1])];
        let coef = [ginv[0][0] * c[0] + ginv[0][1] * c[1], ginv[1][0] * c[0] + ginv[1][1] * c[1]];
        for i in 0..MAX_DIM {
            a[kl][i] = second[i] - coef[0] * j.d1[0][i] - coef[1] * j.d1[1][i];
        }
    }

    let mut h = [0.0; MAX_DIM];
    for (i, hi) in h.iter_mut().enumerate() {
        *hi = ginv[0][0] * a[0][i] + 2.0 * ginv[0][1] * a[1][i] + ginv[1][1] * a[2][i];
    }

    let mut a0 = a;
    for (kl, (p, q)) in [(0, 0), (0, 1), (1, 1)].into_iter().enumerate() {
        for i in 0..MAX_DIM {
            a0[kl][i] -= 0.5 * g[p][q] * h[i];
        }
    }

    let k = (dot(&a[0], &a[2]) - dot(&a[1], &a[1])) / det;
    Ok(CurvatureData {
        g,
        detg: det,
        a,
        h,
        a0,
        k,
        area_density: det.sqrt(),
        a_sq: contract(&a, &ginv),
        h_sq: dot(&h, &h),
        a0_sq: contract(&a0, &ginv),
    })
}

/// Conformal factor u = log(g_11)/2 and the pointwise conformality defect
/// (|g_11 - g_22| + 2|g_12|)/g_11.
pub fn conformal_factor(j: &Jet2) -> Result<(f64, f64)> {
    let (g, _) = metric(j)?;
    let residual = ((g[0][0] - g[1][1]).abs() + 2.0 * g[0][1].abs()) / g[0][0];
    Ok((0.5 * g[0][0].ln(), residual))
}

/// The integrands of the functionals, each already multiplied by the area density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DensityKind {
    /// |H|^2 / 4
    Willmore,
    /// |A|^2
    A2,
    /// |A^0|^2
    A0Sq,
    /// K
    Gauss,
    Area,
}

impl DensityKind {
    pub const ALL: [DensityKind; 5] =
        [DensityKind::Willmore, DensityKind::A2, DensityKind::A0Sq, DensityKind::Gauss, DensityKind::Area];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn of(self, c: &CurvatureData) -> f64 {
        let w = c.area_density;
        match self {
            DensityKind::Willmore => 0.25 * c.h_sq * w,
            DensityKind::A2 => c.a_sq * w,
            DensityKind::A0Sq => c.a0_sq * w,
            DensityKind::Gauss => c.k * w,
            DensityKind::Area => w,
        }
    }
}

/// All five densities at once, indexed by [`DensityKind::index`].
pub fn densities(j: &Jet2) -> Result<[f64; 5]> {
    let c = fundamental_forms(j)?;
    Ok(DensityKind::ALL.map(|k| k.of(&c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::{holomorphic_to_real_jet, ComplexJet2, RealEmbedding, Scalar2};
    use num_complex::Complex64;

    fn sphere_chart(x: f64, y: f64) -> Jet2 {
        let (x, y) = (Scalar2::var_x(x), Scalar2::var_y(y));
        let r2 = x * x + y * y;
        let inv = (r2 + 1.0).recip().unwrap();
        Jet2::from_components([x.v, y.v], &[x * inv * 2.0, y * inv * 2.0, (r2 + -1.0) * inv])
    }

    fn chen(x: f64, y: f64) -> Jet2 {
        let z = ComplexJet2::var(Complex64::new(x, y));
        holomorphic_to_real_jet(&[z * z, z], &RealEmbedding::complex_pairs(2))
    }

    #[test]
    fn unit_sphere_at_pole() {
        let c = fundamental_forms(&sphere_chart(0.0, 0.0)).unwrap();
        assert!((c.k - 1.0).abs() < 1e-14);
        assert!((c.h_sq.sqrt() - 2.0).abs() < 1e-14);
        assert!(c.a0_sq.abs() < 1e-14);
        let (u, res) = conformal_factor(&sphere_chart(0.0, 0.0)).unwrap();
        assert!((u - 2f64.ln()).abs() < 1e-14);
        assert!(res < 1e-14);
    }

    #[test]
    fn sphere_factor_on_unit_circle() {
        let (u, _) = conformal_factor(&sphere_chart(1.0, 0.0)).unwrap();
        assert!(u.abs() < 1e-14);
    }

    #[test]
    fn flat_plane_has_no_curvature() {
        let z = ComplexJet2::var(Complex64::new(0.4, -1.3));
        let zero = ComplexJet2::constant(z.z, Complex64::new(0.0, 0.0));
        let j = holomorphic_to_real_jet(&[z, zero], &RealEmbedding::complex_pairs(2));
        let c = fundamental_forms(&j).unwrap();
        assert_eq!(c.k, 0.0);
        assert_eq!(c.a_sq, 0.0);
    }

    #[test]
    fn chen_graph_at_origin_matches_finite_differences() {
        let c = fundamental_forms(&chen(0.0, 0.0)).unwrap();
        assert_eq!(c.g, [[1.0, 0.0], [0.0, 1.0]]);

        // Independent route: second partials of (z^2, z) by central differences of the
        // plain map, normal projection by Gram-Schmidt on the tangent vectors.
        let f = |x: f64, y: f64| [x * x - y * y, 2.0 * x * y, x, y];
        let e = 1e-4;
        let sub = |a: [f64; 4], b: [f64; 4]| [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]];
        let fx = sub(f(e, 0.0), f(-e, 0.0)).map(|v| v / (2.0 * e));
        let fy = sub(f(0.0, e), f(0.0, -e)).map(|v| v / (2.0 * e));
        let fxx = [0, 1, 2, 3].map(|i| (f(e, 0.0)[i] - 2.0 * f(0.0, 0.0)[i] + f(-e, 0.0)[i]) / (e * e));
        let fyy = [0, 1, 2, 3].map(|i| (f(0.0, e)[i] - 2.0 * f(0.0, 0.0)[i] + f(0.0, -e)[i]) / (e * e));
        let fxy = [0, 1, 2, 3]
            .map(|i| (f(e, e)[i] - f(e, -e)[i] - f(-e, e)[i] + f(-e, -e)[i]) / (4.0 * e * e));
        let n = |v: [f64; 4]| {
            let t1 = fx.map(|a| a / dot(&fx, &fx).sqrt());
            let p1 = dot(&v, &t1);
            let w: [f64; 4] = [0, 1, 2, 3].map(|i| fy[i] - dot(&fy, &t1) * t1[i]);
            let t2 = w.map(|a| a / dot(&w, &w).sqrt());
            let p2 = dot(&v, &t2);
            [0, 1, 2, 3].map(|i| v[i] - p1 * t1[i] - p2 * t2[i])
        };
        let (a11, a12, a22) = (n(fxx), n(fxy), n(fyy));
        let k_fd = dot(&a11, &a22) - dot(&a12, &a12);
        let a2_fd = dot(&a11, &a11) + 2.0 * dot(&a12, &a12) + dot(&a22, &a22);
        assert!((c.k - k_fd).abs() < 1e-7, "{} vs {}", c.k, k_fd);
        assert!((c.a_sq - a2_fd).abs() < 1e-7, "{} vs {}", c.a_sq, a2_fd);
    }

    #[test]
    fn holomorphic_chart_is_conformal() {
        for rho in [0.01, 0.3, 2.0] {
            for (x, y) in [(0.1, 0.2), (-1.5, 0.7), (0.0, -0.3)] {
                let z = ComplexJet2::var(Complex64::new(x, y));
                let lin = z.scale(Complex64::new(rho, 0.0));
                let j = holomorphic_to_real_jet(&[z * z, lin], &RealEmbedding::complex_pairs(2));
                let (_, res) = conformal_factor(&j).unwrap();
                assert!(res <= 1e-12);
            }
        }
    }

    #[test]
    fn branch_point_is_degenerate() {
        let z = ComplexJet2::var(Complex64::new(0.0, 0.0));
        let zero = ComplexJet2::constant(z.z, Complex64::new(0.0, 0.0));
        let j = holomorphic_to_real_jet(&[z * z, zero], &RealEmbedding::complex_pairs(2));
        assert!(matches!(fundamental_forms(&j), Err(GeomError::DegenerateMetric(_))));
        assert!(matches!(conformal_factor(&j), Err(GeomError::DegenerateMetric(_))));
    }

    #[test]
    fn gauss_equation_and_trace_identity() {
        for (x, y) in [(0.3, 0.4), (-0.8, 0.1), (1.2, -0.9)] {
            let c = fundamental_forms(&chen(x, y)).unwrap();
            let scale = c.a_sq.abs().max(c.h_sq).max(c.k.abs());
            assert!((c.a_sq - (c.h_sq - 2.0 * c.k)).abs() <= 1e-12 * scale);
            assert!((c.a0_sq - (c.a_sq - 0.5 * c.h_sq)).abs() <= 1e-12 * scale);
        }
    }
}
