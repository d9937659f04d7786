//! Experiment drivers: energy reports, Gauss-Bonnet residuals, ρ-sweeps, conformal factor
//! comparison and blow-downs.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::registry::{GlueStage, SurfaceId};
use super::report::{Check, EnergyReport, Functionals, Meta};
use crate::error::{GeomError, Result};
use crate::geometry::{conformal_factor, fundamental_forms, DensityKind};
use crate::glue::GlueFamily;
use crate::jets::Vec4;
use crate::quad::{halton_annulus, QuadConfig, QuadResultN, SweepRow, SweepTable};
use crate::surfaces::ParametrizedSurface;
use crate::weierstrass::{involution_check, loop_integral, weierstrass_immersion, Involution, WeierstrassData};

/// Residual budgets are this multiple of the combined quadrature error.
pub const ERROR_FACTOR: f64 = 10.0;

/// Round-off floor of a budget, relative to the magnitudes entering the residual.
const ROUNDOFF: f64 = 1e-11;

fn budget(errors: f64, magnitude: f64) -> f64 {
    ERROR_FACTOR * errors + ROUNDOFF * magnitude.max(1.0)
}

/// Energy report from already computed integrals.
pub fn report_from_integrals(s: &ParametrizedSurface, q: &QuadResultN<5>, cfg: &QuadConfig) -> EnergyReport {
    let c = |k: DensityKind| q.component(k.index());
    let functionals = Functionals {
        willmore: c(DensityKind::Willmore).into(),
        a2: c(DensityKind::A2).into(),
        a0: c(DensityKind::A0Sq).into(),
        total_curvature: c(DensityKind::Gauss).into(),
    };
    let (w, a2, a0) = (functionals.willmore, functionals.a2, functionals.a0);
    let mut checks = vec![Check::new(
        "a0_identity",
        (a0.value - (a2.value - 2.0 * w.value)).abs(),
        budget(a0.error + a2.error + 2.0 * w.error, a0.value.abs() + a2.value.abs() + 2.0 * w.value.abs()),
    )];
    checks.extend(gauss_bonnet_residuals(s, q).map(|gb| gb.checks()).into_iter().flatten());
    let params = s.id.parse::<SurfaceId>().map(|id| id.params()).unwrap_or_default();
    EnergyReport {
        surface: s.id.clone(),
        params,
        functionals,
        checks,
        meta: Meta::new(*cfg, s.weight, q.flagged),
    }
}

/// W, ∫|A|², ∫|A⁰|² and ∫K with the identity and Gauss-Bonnet checks.
pub fn energy_report(s: &ParametrizedSurface, cfg: &QuadConfig) -> Result<EnergyReport> {
    let q = s.integrate_all(cfg)?;
    Ok(report_from_integrals(s, &q, cfg))
}

/// Gauss-Bonnet and Gauss-equation residuals of one surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussBonnetCheck {
    /// weight · 2π(χ + Σ branch orders − Σ (end multiplicity + 1))
    pub target: f64,
    pub total_curvature: f64,
    /// ∫K − target
    pub residual_topology: f64,
    pub budget_topology: f64,
    /// ∫|A|² − (4W − 2∫K)
    pub residual_gauss: f64,
    pub budget_gauss: f64,
}

impl GaussBonnetCheck {
    pub fn pass(&self) -> bool {
        self.residual_topology.abs() <= self.budget_topology && self.residual_gauss.abs() <= self.budget_gauss
    }

    fn checks(&self) -> Vec<Check> {
        vec![
            Check::new("gauss_bonnet", self.residual_topology.abs(), self.budget_topology),
            Check::new("gauss_equation", self.residual_gauss.abs(), self.budget_gauss),
        ]
    }
}

/// Residuals from precomputed integrals; `None` when the topology of `s` is not declared.
pub fn gauss_bonnet_residuals(s: &ParametrizedSurface, q: &QuadResultN<5>) -> Option<GaussBonnetCheck> {
    let target = s.gauss_bonnet_target()?;
    let (w, a2, k) =
        (DensityKind::Willmore.index(), DensityKind::A2.index(), DensityKind::Gauss.index());
    let r2 = q.values[a2] - (4.0 * q.values[w] - 2.0 * q.values[k]);
    Some(GaussBonnetCheck {
        target,
        total_curvature: q.values[k],
        residual_topology: q.values[k] - target,
        budget_topology: budget(q.errors[k], q.values[k].abs() + target.abs()),
        residual_gauss: r2,
        budget_gauss: budget(
            q.errors[a2] + 4.0 * q.errors[w] + 2.0 * q.errors[k],
            q.values[a2].abs() + 4.0 * q.values[w].abs() + 2.0 * q.values[k].abs(),
        ),
    })
}

/// Integrates `s` and compares ∫K with its declared topology.
pub fn gauss_bonnet_check(s: &ParametrizedSurface, cfg: &QuadConfig) -> Result<GaussBonnetCheck> {
    if s.topology.is_none() {
        return Err(GeomError::InvalidInput(format!("surface {} has no declared topology", s.id)));
    }
    let q = s.integrate_all(cfg)?;
    Ok(gauss_bonnet_residuals(s, &q).expect("topology checked above"))
}

/// A ρ-family of surfaces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Construction {
    Glue { family: GlueFamily, stage: GlueStage },
    /// Meeks-Boy glue at (δ, ρ) = (√ρ, ρ).
    MeeksBoy,
}

impl Construction {
    /// From a CLI construction name (`chen-glue`, `enneper-glue`, `henneper-glue`, `meeks-boy`).
    pub fn parse(name: &str, m: Option<u32>, stage: GlueStage) -> Result<Self> {
        let need_m = || m.ok_or_else(|| GeomError::InvalidInput(format!("construction {name} needs --m")));
        let family = match name {
            "chen-glue" => GlueFamily::Chen(need_m()?),
            "henneper-glue" => GlueFamily::HigherEnneper(need_m()?),
            "enneper-glue" => GlueFamily::Enneper,
            "meeks-boy" => return Ok(Construction::MeeksBoy),
            _ => {
                return Err(GeomError::InvalidInput(format!(
                    "unknown construction '{name}' (chen-glue, enneper-glue, henneper-glue, meeks-boy)"
                )))
            }
        };
        family.validate()?;
        Ok(Construction::Glue { family, stage })
    }

    pub fn surface_id(&self, rho: f64) -> SurfaceId {
        match *self {
            Construction::Glue { family, stage } => SurfaceId::Glue { family, rho, stage },
            Construction::MeeksBoy => SurfaceId::MeeksBoy { delta: rho.sqrt(), rho },
        }
    }

    pub fn surface(&self, rho: f64, tol: f64) -> Result<ParametrizedSurface> {
        self.surface_id(rho).build(tol)
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Construction::Glue { family, stage } => {
                match family {
                    GlueFamily::Chen(m) => write!(f, "chen-glue:{m}")?,
                    GlueFamily::Enneper => write!(f, "enneper-glue")?,
                    GlueFamily::HigherEnneper(m) => write!(f, "henneper-glue:{m}")?,
                }
                if *stage != GlueStage::Closed {
                    write!(f, ":{}", stage.name())?;
                }
                Ok(())
            }
            Construction::MeeksBoy => write!(f, "meeks-boy"),
        }
    }
}

impl FromStr for Construction {
    type Err = GeomError;

    /// `chen-glue:2`, `enneper-glue`, `henneper-glue:1`, `meeks-boy`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, m) = match s.split_once(':') {
            Some((n, m)) => {
                (n, Some(m.parse().map_err(|_| GeomError::InvalidInput(format!("bad construction parameter in {s}")))?))
            }
            None => (s, None),
        };
        Construction::parse(name, m, GlueStage::Closed)
    }
}

/// One sweep row.
pub fn sweep_row(c: &Construction, rho: f64, cfg: &QuadConfig) -> Result<SweepRow> {
    let q = c.surface(rho, 1e-12)?.integrate_all(cfg)?;
    let k = |d: DensityKind| q.component(d.index());
    Ok(SweepRow {
        rho,
        willmore: k(DensityKind::Willmore),
        a2: k(DensityKind::A2),
        a0: k(DensityKind::A0Sq),
        total_curvature: k(DensityKind::Gauss),
    })
}

/// Energies of a construction over a strictly decreasing geometric ρ list, with extrapolated
/// limits.
pub fn sweep(c: &Construction, rhos: &[f64], cfg: &QuadConfig) -> Result<SweepTable> {
    if let Construction::MeeksBoy = c {
        if let Some(r) = rhos.iter().find(|r| r.sqrt() > 0.25 || **r <= 0.0) {
            return Err(GeomError::InvalidInput(format!("meeks-boy sweep needs 0 < rho <= 1/16, got {r}")));
        }
    }
    let rows = rhos.iter().map(|&r| sweep_row(c, r, cfg)).collect::<Result<Vec<_>>>()?;
    SweepTable::new(c.to_string(), rows)
}

/// Sup of the difference of conformal factors of patch 0 of `a` and `b` over an annulus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalComparison {
    pub sup: f64,
    /// Parameter where the sup is attained.
    pub at: [f64; 2],
    /// Largest conformality defect seen on either surface.
    pub max_defect: f64,
}

/// Conformality defect allowed on the comparison region.
pub const CONFORMAL_TOL: f64 = 1e-8;

/// Sample count of [`conformal_factor_compare`].
pub const CONFORMAL_SAMPLES: usize = 4096;

/// sup |u_a − u_b| over Halton points of r_in ≤ |z| ≤ r_out.
pub fn conformal_factor_compare(
    a: &ParametrizedSurface,
    b: &ParametrizedSurface,
    r_in: f64,
    r_out: f64,
) -> Result<ConformalComparison> {
    if !(r_in >= 0.0 && r_out > r_in) {
        return Err(GeomError::InvalidInput(format!("comparison annulus ({r_in}, {r_out})")));
    }
    let mut out = ConformalComparison { sup: 0.0, at: [0.0; 2], max_defect: 0.0 };
    for p in halton_annulus(CONFORMAL_SAMPLES, r_in, r_out) {
        let (ua, da) = conformal_factor(&a.eval(0, p)?)?;
        let (ub, db) = conformal_factor(&b.eval(0, p)?)?;
        let defect = da.max(db);
        if !(defect <= CONFORMAL_TOL) {
            return Err(GeomError::NotConformalOnRegion(defect));
        }
        out.max_defect = out.max_defect.max(defect);
        let d = (ua - ub).abs();
        if d > out.sup {
            out.sup = d;
            out.at = p;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowDownRow {
    pub rho: f64,
    /// sup over the annulus of |ρ^k f(z/ρ) − O·model(z)|
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowDownTable {
    pub order: u32,
    pub annulus: (f64, f64),
    /// Orthogonal map fitted once at the smallest ρ, row major, `dim × dim`.
    pub frame: Vec<Vec<f64>>,
    pub rows: Vec<BlowDownRow>,
}

impl BlowDownTable {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].deviation < w[0].deviation)
    }
}

/// Sample count of [`blow_down_check`].
pub const BLOW_DOWN_SAMPLES: usize = 512;

/// Deviation of the blow-downs ρ^k f(z/ρ) of patch 0 of `s` from a model end over
/// 1 ≤ |z| ≤ 2.
///
/// The identification of the model with the surface's coordinates is the orthogonal map that
/// best matches them at the smallest ρ (Procrustes); it is reported and reused for every ρ.
pub fn blow_down_check(
    s: &ParametrizedSurface,
    order: u32,
    model: &dyn Fn(Complex64) -> Vec4,
    rhos: &[f64],
) -> Result<BlowDownTable> {
    if rhos.is_empty() || rhos.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(GeomError::InvalidInput("blow-down scales must lie in (0, 1)".into()));
    }
    let dim = s.ambient_dim;
    let pts = halton_annulus(BLOW_DOWN_SAMPLES, 1.0, 2.0);
    let blow = |rho: f64| -> Result<Vec<(Vec4, Vec4)>> {
        pts.iter()
            .map(|p| {
                let v = s.eval(0, [p[0] / rho, p[1] / rho])?.value;
                let k = rho.powi(order as i32);
                Ok((v.map(|x| x * k), model(Complex64::new(p[0], p[1]))))
            })
            .collect()
    };
    let rho_min = rhos.iter().cloned().fold(f64::INFINITY, f64::min);
    let fit = blow(rho_min)?;
    let mut cross = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    for (y, m) in &fit {
        for i in 0..dim {
            for j in 0..dim {
                cross[(i, j)] += y[i] * m[j];
            }
        }
    }
    let svd = cross.svd(true, true);
    let o = svd.u.ok_or(GeomError::DegenerateReparam)? * svd.v_t.ok_or(GeomError::DegenerateReparam)?;
    let mut rows = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let mut dev = 0.0f64;
        for (y, m) in blow(rho)? {
            let mut d2 = 0.0;
            for i in 0..dim {
                let om: f64 = (0..dim).map(|j| o[(i, j)] * m[j]).sum();
                d2 += (y[i] - om).powi(2);
            }
            dev = dev.max(d2.sqrt());
        }
        rows.push(BlowDownRow { rho, deviation: dev });
    }
    let frame = (0..dim).map(|i| (0..dim).map(|j| o[(i, j)]).collect()).collect();
    Ok(BlowDownTable { order, annulus: (1.0, 2.0), frame, rows })
}

/// Blow-down of a registry surface against its known end model.
pub fn blow_down_by_id(id: &SurfaceId, rhos: &[f64], tol: f64) -> Result<BlowDownTable> {
    let (order, model) = id
        .blow_down_model()
        .ok_or_else(|| GeomError::InvalidInput(format!("no end model known for {id}")))?;
    blow_down_check(&id.build(tol)?, order, &*model, rhos)
}

/// Maximum |H|/(1 + |A|) and conformality defect over samples of patch 0.
fn minimality_defects(s: &ParametrizedSurface, samples: usize) -> Result<(f64, f64)> {
    let mut h = 0.0f64;
    let mut c = 0.0f64;
    for (k, p) in s.sample_params(samples) {
        let j = s.eval(k, p)?;
        let cd = fundamental_forms(&j)?;
        h = h.max(cd.h_sq.sqrt() / (1.0 + cd.a_sq.sqrt()));
        c = c.max(conformal_factor(&j)?.1);
    }
    Ok((h, c))
}

/// Energy report of the minimal surface built from Weierstrass data, with period,
/// minimality, conformality and (if declared) involution checks.
pub fn weierstrass_report(data: WeierstrassData, path_tol: f64, cfg: &QuadConfig) -> Result<EnergyReport> {
    let mut period_checks = Vec::new();
    for (n, p) in data.punctures.iter().enumerate() {
        let r = 0.5 * data.punctures.iter().filter(|q| *q != p).map(|q| (q - p).norm()).fold(1.0, f64::min);
        for k in 0..3 {
            let per = loop_integral(|z| Ok(data.forms_at(z)?[k]), *p, r)?;
            period_checks.push(Check::new(format!("period_{n}_{}", k + 1), per.re.abs(), 1e-10));
        }
    }
    let involution = data.involution;
    let imm = weierstrass_immersion(data, path_tol)?;
    let s = imm.surface("weierstrass")?;
    let mut rep = energy_report(&s, cfg)?;
    rep.checks.extend(period_checks);
    let (h, c) = minimality_defects(&s, 200)?;
    rep.checks.push(Check::new("minimality", h, 1e-8));
    rep.checks.push(Check::new("conformality", c, 1e-9));
    if let Some(inv) = involution.filter(|i| *i != Involution::Identity) {
        rep.checks.push(Check::new("involution", involution_check(&imm, inv, 50)?, 1e-8));
    }
    Ok(rep)
}

/// Relative deviation |v/target − 1|.
pub fn relative_to(v: f64, target: f64) -> f64 {
    (v / target - 1.0).abs()
}

/// `value` as a multiple of π.
pub fn in_pi(value: f64) -> f64 {
    value / PI
}
