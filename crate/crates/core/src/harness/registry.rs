//! Surfaces addressed by textual ids such as `chen`, `power:3` or `chen-glue:2:0.1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{GeomError, Result};
use crate::glue::{bar_surface, double_glue, invert_and_flip, inverted_meeks, meeks_boy_glue, model_glue};
use crate::glue::{GlueFamily, GlueSpec, MEEKS_BOY_BUDGET};
use crate::jets::{ComplexJet2, RealEmbedding};
use crate::mobius::{select_inversion_center, transform_surface, MobiusMap};
use crate::surfaces::{self, holomorphic_chart, Domain, ParametrizedSurface, Patch, SingularKind, SingularPoint, Topology};
use crate::weierstrass::meeks_surface;

/// Intermediate stages of a glue construction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GlueStage {
    /// The single glue h_ρ over the plane.
    Model,
    /// w ↦ I(h_ρ(1/w̄)).
    Flip,
    /// Both halves of the bar, still with an end.
    Bar,
    #[default]
    Closed,
}

impl GlueStage {
    pub fn name(self) -> &'static str {
        match self {
            GlueStage::Model => "model",
            GlueStage::Flip => "flip",
            GlueStage::Bar => "bar",
            GlueStage::Closed => "closed",
        }
    }
}

impl FromStr for GlueStage {
    type Err = GeomError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model" => Ok(GlueStage::Model),
            "flip" => Ok(GlueStage::Flip),
            "bar" => Ok(GlueStage::Bar),
            "closed" => Ok(GlueStage::Closed),
            _ => Err(GeomError::InvalidInput(format!("unknown glue stage '{s}' (model, flip, bar, closed)"))),
        }
    }
}

/// Parsed surface id.
#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceId {
    Chen,
    /// (z², ρz): the Chen graph rescaled by ρ.
    ChenScaled(f64),
    Power(u32),
    Plane(u32),
    Enneper,
    HigherEnneper(u32),
    Veronese,
    Sphere(f64),
    Meeks,
    /// Image of an open surface under an inversion whose center keeps clear of it.
    Inverted(Box<SurfaceId>),
    Glue { family: GlueFamily, rho: f64, stage: GlueStage },
    MeeksBoy { delta: f64, rho: f64 },
}

/// Id patterns accepted by [`SurfaceId::from_str`].
pub const SURFACE_PATTERNS: &[&str] = &[
    "chen",
    "chen-scaled:RHO",
    "power:M",
    "plane:M",
    "enneper",
    "henneper:M",
    "veronese",
    "sphere:R",
    "meeks",
    "inverted-chen | inverted-enneper | inverted-meeks | inverted-<open id>",
    "chen-glue:M:RHO[:STAGE]",
    "enneper-glue:RHO[:STAGE]",
    "henneper-glue:M:RHO[:STAGE]",
    "meeks-boy:DELTA:RHO",
];

fn int_arg(s: &str, what: &str) -> Result<u32> {
    s.parse().map_err(|_| GeomError::InvalidInput(format!("{what} must be a non-negative integer, got '{s}'")))
}

fn real_arg(s: &str, what: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(GeomError::InvalidInput(format!("{what} must be a finite number, got '{s}'"))),
    }
}

impl FromStr for SurfaceId {
    type Err = GeomError;

    fn from_str(id: &str) -> Result<Self> {
        if let Some(rest) = id.strip_prefix("inverted-") {
            let inner: SurfaceId = rest.parse()?;
            return match inner {
                SurfaceId::Meeks
                | SurfaceId::Chen
                | SurfaceId::Power(_)
                | SurfaceId::Enneper
                | SurfaceId::HigherEnneper(_)
                | SurfaceId::ChenScaled(_) => Ok(SurfaceId::Inverted(Box::new(inner))),
                _ => Err(GeomError::InvalidInput(format!("'{rest}' is not an open surface that can be inverted"))),
            };
        }
        let parts: Vec<&str> = id.split(':').collect();
        let stage = |s: Option<&&str>| s.map_or(Ok(GlueStage::Closed), |s| s.parse());
        let out = match parts.as_slice() {
            ["chen"] => SurfaceId::Chen,
            ["chen-scaled", r] => SurfaceId::ChenScaled(real_arg(r, "rho")?),
            ["power", m] => SurfaceId::Power(int_arg(m, "m")?),
            ["plane", m] => SurfaceId::Plane(int_arg(m, "m")?),
            ["enneper"] => SurfaceId::Enneper,
            ["henneper", m] => SurfaceId::HigherEnneper(int_arg(m, "m")?),
            ["veronese"] => SurfaceId::Veronese,
            ["sphere", r] => SurfaceId::Sphere(real_arg(r, "radius")?),
            ["meeks"] => SurfaceId::Meeks,
            ["chen-glue", m, r, rest @ ..] if rest.len() <= 1 => SurfaceId::Glue {
                family: GlueFamily::Chen(int_arg(m, "m")?),
                rho: real_arg(r, "rho")?,
                stage: stage(rest.first())?,
            },
            ["enneper-glue", r, rest @ ..] if rest.len() <= 1 => {
                SurfaceId::Glue { family: GlueFamily::Enneper, rho: real_arg(r, "rho")?, stage: stage(rest.first())? }
            }
            ["henneper-glue", m, r, rest @ ..] if rest.len() <= 1 => SurfaceId::Glue {
                family: GlueFamily::HigherEnneper(int_arg(m, "m")?),
                rho: real_arg(r, "rho")?,
                stage: stage(rest.first())?,
            },
            ["meeks-boy", d, r] => SurfaceId::MeeksBoy { delta: real_arg(d, "delta")?, rho: real_arg(r, "rho")? },
            _ => {
                return Err(GeomError::InvalidInput(format!(
                    "unknown surface id '{id}'; expected one of: {}",
                    SURFACE_PATTERNS.join(", ")
                )))
            }
        };
        Ok(out)
    }
}

impl fmt::Display for SurfaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceId::Chen => write!(f, "chen"),
            SurfaceId::ChenScaled(r) => write!(f, "chen-scaled:{r}"),
            SurfaceId::Power(m) => write!(f, "power:{m}"),
            SurfaceId::Plane(m) => write!(f, "plane:{m}"),
            SurfaceId::Enneper => write!(f, "enneper"),
            SurfaceId::HigherEnneper(m) => write!(f, "henneper:{m}"),
            SurfaceId::Veronese => write!(f, "veronese"),
            SurfaceId::Sphere(r) => write!(f, "sphere:{r}"),
            SurfaceId::Meeks => write!(f, "meeks"),
            SurfaceId::Inverted(s) => write!(f, "inverted-{s}"),
            SurfaceId::Glue { family, rho, stage } => {
                match family {
                    GlueFamily::Chen(m) => write!(f, "chen-glue:{m}:{rho}")?,
                    GlueFamily::Enneper => write!(f, "enneper-glue:{rho}")?,
                    GlueFamily::HigherEnneper(m) => write!(f, "henneper-glue:{m}:{rho}")?,
                }
                if *stage != GlueStage::Closed {
                    write!(f, ":{}", stage.name())?;
                }
                Ok(())
            }
            SurfaceId::MeeksBoy { delta, rho } => write!(f, "meeks-boy:{delta}:{rho}"),
        }
    }
}

impl SurfaceId {
    /// Numeric parameters by name.
    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut p = BTreeMap::new();
        let mut put = |k: &str, v: f64| {
            p.insert(k.to_string(), v);
        };
        match self {
            SurfaceId::ChenScaled(r) => put("rho", *r),
            SurfaceId::Power(m) | SurfaceId::Plane(m) | SurfaceId::HigherEnneper(m) => put("m", *m as f64),
            SurfaceId::Sphere(r) => put("radius", *r),
            SurfaceId::Inverted(s) => return s.params(),
            SurfaceId::Glue { family, rho, .. } => {
                match family {
                    GlueFamily::Chen(m) | GlueFamily::HigherEnneper(m) => put("m", *m as f64),
                    GlueFamily::Enneper => {}
                }
                put("rho", *rho);
            }
            SurfaceId::MeeksBoy { delta, rho } => {
                put("delta", *delta);
                put("rho", *rho);
            }
            _ => {}
        }
        p
    }

    /// Builds the surface; `tol` is the Weierstrass path-integration tolerance.
    pub fn build(&self, tol: f64) -> Result<ParametrizedSurface> {
        let mut s = match self {
            SurfaceId::Chen => surfaces::chen_graph(),
            SurfaceId::ChenScaled(r) => chen_scaled(*r)?,
            SurfaceId::Power(m) => surfaces::power_graph(*m)?,
            SurfaceId::Plane(m) => surfaces::branched_plane(*m)?,
            SurfaceId::Enneper => surfaces::enneper(),
            SurfaceId::HigherEnneper(m) => surfaces::higher_enneper(*m)?,
            SurfaceId::Veronese => surfaces::veronese_stereographic(),
            SurfaceId::Sphere(r) => surfaces::round_sphere(*r)?,
            SurfaceId::Meeks => meeks_surface(tol)?,
            SurfaceId::Inverted(inner) if **inner == SurfaceId::Meeks => inverted_meeks(tol)?,
            SurfaceId::Inverted(inner) => {
                let open = inner.build(tol)?;
                let x0 = select_inversion_center(&open, 1.0)?;
                transform_surface(&MobiusMap::centered_inversion(open.ambient_dim, x0), &open)?
            }
            SurfaceId::Glue { family, rho, stage } => match stage {
                GlueStage::Model => model_glue(*family, *rho)?,
                GlueStage::Flip => invert_and_flip(&model_glue(*family, *rho)?)?,
                GlueStage::Bar => bar_surface(*family, *rho)?,
                GlueStage::Closed => double_glue(&GlueSpec::new(*family, *rho)?)?,
            },
            SurfaceId::MeeksBoy { delta, rho } => meeks_boy_glue(*delta, *rho, MEEKS_BOY_BUDGET)?.0,
        };
        s.id = self.to_string();
        Ok(s)
    }

    /// Leading term of the end at infinity of an open surface, as (order k, model map) for the
    /// blow-down ρ^k f(z/ρ).
    pub fn blow_down_model(&self) -> Option<(u32, Arc<dyn Fn(Complex64) -> [f64; 4] + Send + Sync>)> {
        let pair = |w: Complex64| [w.re, w.im, 0.0, 0.0];
        match *self {
            SurfaceId::Chen | SurfaceId::ChenScaled(_) => Some((2, Arc::new(move |z: Complex64| pair(z * z)))),
            SurfaceId::Power(m) | SurfaceId::Plane(m) => Some((m, Arc::new(move |z: Complex64| pair(z.powu(m))))),
            SurfaceId::Enneper => Some((3, Arc::new(|z: Complex64| {
                let z3 = z.powu(3) / 9.0;
                [-z3.re, -z3.im, 0.0, 0.0]
            }))),
            SurfaceId::HigherEnneper(m) => {
                let n = 2 * m + 1;
                Some((n, Arc::new(move |z: Complex64| {
                    let zn = z.powu(n) / n as f64;
                    [-zn.re, -zn.im, 0.0, 0.0]
                })))
            }
            SurfaceId::Meeks => Some((3, Arc::new(move |z: Complex64| pair(-Complex64::i() * z.powu(3) / 6.0)))),
            _ => None,
        }
    }
}

/// Builds a surface from its id.
pub fn build_surface(id: &str, tol: f64) -> Result<ParametrizedSurface> {
    id.parse::<SurfaceId>()?.build(tol)
}

/// (z², ρz) over the plane, the Chen graph rescaled as ρ² f(z/ρ).
pub fn chen_scaled(rho: f64) -> Result<ParametrizedSurface> {
    if !(rho > 0.0) {
        return Err(GeomError::InvalidInput(format!("rescaling factor must be positive, got {rho}")));
    }
    let chart = holomorphic_chart(
        move |z: ComplexJet2| Ok(vec![z.powi(2)?, z.scale(Complex64::new(rho, 0.0))]),
        RealEmbedding::complex_pairs(2),
    );
    let mut s = ParametrizedSurface::open(format!("chen-scaled:{rho}"), Patch::new(chart, Domain::Plane), 4);
    s.holomorphic = true;
    s.singular_points.push(SingularPoint { patch: 0, param: None, kind: SingularKind::End { multiplicity: 2 } });
    s.topology = Some(Topology { chi: 2, branch_orders: vec![] });
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip_through_display() {
        for id in [
            "chen",
            "chen-scaled:0.1",
            "power:3",
            "plane:2",
            "enneper",
            "henneper:2",
            "veronese",
            "sphere:2",
            "meeks",
            "inverted-chen",
            "inverted-meeks",
            "chen-glue:2:0.1",
            "chen-glue:3:0.05:bar",
            "enneper-glue:0.1:flip",
            "henneper-glue:1:0.2",
            "meeks-boy:0.1:0.01",
        ] {
            let parsed: SurfaceId = id.parse().unwrap();
            assert_eq!(parsed.to_string(), id);
        }
    }

    #[test]
    fn bad_ids_are_invalid_input() {
        for id in ["", "chen:2", "power:x", "sphere:nan", "inverted-sphere:1", "chen-glue:2", "enneper-glue:0.1:late"] {
            assert!(matches!(id.parse::<SurfaceId>(), Err(GeomError::InvalidInput(_))), "{id}");
        }
    }

    #[test]
    fn params_are_named() {
        let p = "chen-glue:3:0.05".parse::<SurfaceId>().unwrap().params();
        assert_eq!(p["m"], 3.0);
        assert_eq!(p["rho"], 0.05);
        assert!("meeks".parse::<SurfaceId>().unwrap().params().is_empty());
    }

    #[test]
    fn built_surfaces_carry_canonical_ids() {
        let s = build_surface("power:3", 1e-10).unwrap();
        assert_eq!(s.id, "power:3");
        assert_eq!(build_surface("chen-glue:2:0.1:model", 1e-10).unwrap().id, "chen-glue:2:0.1:model");
    }

    #[test]
    fn chen_scaled_is_the_rescaled_chen_graph() {
        let rho = 0.3;
        let a = chen_scaled(rho).unwrap();
        let b = surfaces::chen_graph();
        let p = [0.4, -0.7];
        let va = a.eval(0, p).unwrap().value;
        let vb = b.eval(0, [p[0] / rho, p[1] / rho]).unwrap().value;
        for i in 0..4 {
            assert!((va[i] - rho * rho * vb[i]).abs() < 1e-14);
        }
    }
}
