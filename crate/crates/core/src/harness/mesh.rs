//! OBJ export of polar parameter grids.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::jets::Vec4;
use crate::surfaces::ParametrizedSurface;

/// How points of R⁴ are mapped to R³.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Projection {
    /// Drop the coordinate with this index.
    DropCoordinate(usize),
    /// Central projection from (0, 0, 0, d) onto x₄ = 0, with d = 1 + 2 max |x| over the mesh so
    /// that the pole stays off the surface.
    Stereographic,
}

/// Polar grid r_in ≤ r ≤ r_out, 0 ≤ θ ≤ 2π with `n_r × n_theta` vertices per patch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub patches: Vec<usize>,
    pub n_r: usize,
    pub n_theta: usize,
    pub r_in: f64,
    pub r_out: f64,
}

impl GridSpec {
    pub fn new(n_r: usize, n_theta: usize, r_in: f64, r_out: f64) -> Self {
        Self { patches: vec![0], n_r, n_theta, r_in, r_out }
    }

    fn validate(&self) -> Result<()> {
        if self.n_r < 2 || self.n_theta < 2 {
            return Err(GeomError::InvalidInput("mesh grid needs at least 2 x 2 vertices".into()));
        }
        if !(self.r_in >= 0.0 && self.r_out > self.r_in && self.r_out.is_finite()) {
            return Err(GeomError::InvalidInput(format!("mesh radii ({}, {})", self.r_in, self.r_out)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based vertex indices.
    pub triangles: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            writeln!(s, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2]).expect("string write");
        }
        for t in &self.triangles {
            writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).expect("string write");
        }
        s
    }
}

fn project(points: &[Vec4], dim: usize, projection: Projection) -> Result<Vec<[f64; 3]>> {
    match dim {
        3 => Ok(points.iter().map(|p| [p[0], p[1], p[2]]).collect()),
        4 => match projection {
            Projection::DropCoordinate(k) if k < 4 => Ok(points
                .iter()
                .map(|p| {
                    let mut out = [0.0; 3];
                    let mut j = 0;
                    for (i, x) in p.iter().enumerate() {
                        if i != k {
                            out[j] = *x;
                            j += 1;
                        }
                    }
                    out
                })
                .collect()),
            Projection::DropCoordinate(k) => Err(GeomError::InvalidInput(format!("cannot drop coordinate {k} of R^4"))),
            Projection::Stereographic => {
                let r = points.iter().map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
                let d = 1.0 + 2.0 * r;
                Ok(points.iter().map(|p| [p[0], p[1], p[2]].map(|x| d * x / (d - p[3]))).collect())
            }
        },
        _ => Err(GeomError::InvalidInput(format!("mesh export supports ambient dimension 3 or 4, not {dim}"))),
    }
}

/// Triangulated polar grid of the requested patches, vertices in (patch, r, θ) order.
pub fn build_mesh(s: &ParametrizedSurface, grid: &GridSpec, projection: Projection) -> Result<Mesh> {
    grid.validate()?;
    let mut points = Vec::new();
    let mut triangles = Vec::new();
    for &k in &grid.patches {
        let base = points.len();
        for i in 0..grid.n_r {
            let r = grid.r_in + (grid.r_out - grid.r_in) * i as f64 / (grid.n_r - 1) as f64;
            for j in 0..grid.n_theta {
                let t = 2.0 * std::f64::consts::PI * j as f64 / (grid.n_theta - 1) as f64;
                let v = s.eval(k, [r * t.cos(), r * t.sin()])?.value;
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(GeomError::InvalidInput(format!("non-finite surface point at r = {r}, theta = {t}")));
                }
                points.push(v);
            }
        }
        let at = |i: usize, j: usize| base + i * grid.n_theta + j;
        for i in 0..grid.n_r - 1 {
            for j in 0..grid.n_theta - 1 {
                triangles.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
                triangles.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
            }
        }
    }
    Ok(Mesh { vertices: project(&points, s.ambient_dim, projection)?, triangles })
}

/// Writes the mesh of [`build_mesh`] as an OBJ file.
pub fn export_mesh(s: &ParametrizedSurface, grid: &GridSpec, projection: Projection, path: &Path) -> Result<Mesh> {
    let mesh = build_mesh(s, grid, projection)?;
    std::fs::write(path, mesh.to_obj())?;
    Ok(mesh)
}
