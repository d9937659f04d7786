//! Energy reports and their JSON and CSV forms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::quad::{QuadConfig, QuadResult};

/// One integrated functional.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    pub value: f64,
    pub error: f64,
    pub evals: u64,
}

impl From<QuadResult> for Functional {
    fn from(q: QuadResult) -> Self {
        Self { value: q.value, error: q.error_estimate, evals: q.evaluations }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    /// (1/4)∫|H|² dμ
    #[serde(rename = "W")]
    pub willmore: Functional,
    /// ∫|A|² dμ
    pub a2: Functional,
    /// ∫|A⁰|² dμ
    pub a0: Functional,
    /// ∫K dμ
    #[serde(rename = "totK")]
    pub total_curvature: Functional,
}

impl Functionals {
    const NAMES: [&'static str; 4] = ["W", "a2", "a0", "totK"];

    fn get(&self, i: usize) -> &Functional {
        [&self.willmore, &self.a2, &self.a0, &self.total_curvature][i]
    }

    fn get_mut(&mut self, i: usize) -> &mut Functional {
        match i {
            0 => &mut self.willmore,
            1 => &mut self.a2,
            2 => &mut self.a0,
            _ => &mut self.total_curvature,
        }
    }
}

/// A consistency check: passes when `residual <= budget`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub budget: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, budget: f64) -> Self {
        Self { name: name.into(), residual, budget, pass: residual <= budget }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub tolerances: QuadConfig,
    /// Factor applied to all integrals; 0.5 for surfaces integrated over a double cover.
    pub weight: f64,
    /// Which object the energies refer to.
    pub convention: String,
    /// Some quadrature cell hit its depth limit or was skipped.
    pub flagged: bool,
}

impl Meta {
    pub fn new(tolerances: QuadConfig, weight: f64, flagged: bool) -> Self {
        let convention = if weight == 1.0 {
            "parametrized surface".to_string()
        } else {
            format!("per quotient surface (double cover integrals times {weight})")
        };
        Self { version: env!("CARGO_PKG_VERSION").to_string(), tolerances, weight, convention, flagged }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub surface: String,
    pub params: BTreeMap<String, f64>,
    pub functionals: Functionals,
    pub checks: Vec<Check>,
    pub meta: Meta,
}

const CSV_HEADER: [&str; 6] = ["record", "name", "value", "error", "count", "text"];

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

impl EnergyReport {
    /// All checks pass and no quadrature cell was flagged.
    pub fn passed(&self) -> bool {
        !self.meta.flagged && self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| GeomError::InvalidInput(format!("report json: {e}")))
    }

    /// Long-format CSV, one record per line; numbers carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut row = |r: [&str; 6]| w.write_record(r).expect("writing to memory");
        row(CSV_HEADER);
        row(["surface", &self.surface, "", "", "", ""]);
        for (k, v) in &self.params {
            row(["param", k, &num(*v), "", "", ""]);
        }
        for (i, name) in Functionals::NAMES.iter().enumerate() {
            let f = self.functionals.get(i);
            row(["functional", name, &num(f.value), &num(f.error), &f.evals.to_string(), ""]);
        }
        for c in &self.checks {
            row(["check", &c.name, &num(c.residual), &num(c.budget), "", if c.pass { "pass" } else { "fail" }]);
        }
        let m = &self.meta;
        let t = &m.tolerances;
        row(["meta", "version", "", "", "", &m.version]);
        row(["meta", "rel_tol", &num(t.rel_tol), "", "", ""]);
        row(["meta", "abs_tol", &num(t.abs_tol), "", "", ""]);
        row(["meta", "max_depth", "", "", &t.max_depth.to_string(), ""]);
        row(["meta", "max_rings", "", "", &t.max_rings.to_string(), ""]);
        row(["meta", "sectors", "", "", &t.sectors.to_string(), ""]);
        row(["meta", "weight", &num(m.weight), "", "", &m.convention]);
        row(["meta", "flagged", "", "", "", if m.flagged { "true" } else { "false" }]);
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }

    pub fn from_csv(s: &str) -> Result<Self> {
        let bad = |msg: String| GeomError::InvalidInput(format!("report csv: {msg}"));
        let f = |x: &str| x.parse::<f64>().map_err(|e| bad(format!("{x}: {e}")));
        let n = |x: &str| x.parse::<u64>().map_err(|e| bad(format!("{x}: {e}")));
        let mut rep = EnergyReport {
            surface: String::new(),
            params: BTreeMap::new(),
            functionals: Functionals::default(),
            checks: Vec::new(),
            meta: Meta::new(QuadConfig::default(), 1.0, false),
        };
        let mut rd = csv::Reader::from_reader(s.as_bytes());
        for rec in rd.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() != CSV_HEADER.len() {
                return Err(bad(format!("expected {} fields, got {}", CSV_HEADER.len(), rec.len())));
            }
            let (kind, name, value, error, count, text) = (&rec[0], &rec[1], &rec[2], &rec[3], &rec[4], &rec[5]);
            match (kind, name) {
                ("surface", _) => rep.surface = name.to_string(),
                ("param", _) => {
                    rep.params.insert(name.to_string(), f(value)?);
                }
                ("functional", _) => {
                    let i = Functionals::NAMES.iter().position(|x| *x == name).ok_or_else(|| bad(name.into()))?;
                    *rep.functionals.get_mut(i) = Functional { value: f(value)?, error: f(error)?, evals: n(count)? };
                }
                ("check", _) => rep.checks.push(Check {
                    name: name.to_string(),
                    residual: f(value)?,
                    budget: f(error)?,
                    pass: text == "pass",
                }),
                ("meta", "version") => rep.meta.version = text.to_string(),
                ("meta", "rel_tol") => rep.meta.tolerances.rel_tol = f(value)?,
                ("meta", "abs_tol") => rep.meta.tolerances.abs_tol = f(value)?,
                ("meta", "max_depth") => rep.meta.tolerances.max_depth = n(count)? as u32,
                ("meta", "max_rings") => rep.meta.tolerances.max_rings = n(count)? as usize,
                ("meta", "sectors") => rep.meta.tolerances.sectors = n(count)? as usize,
                ("meta", "weight") => {
                    rep.meta.weight = f(value)?;
                    rep.meta.convention = text.to_string();
                }
                ("meta", "flagged") => rep.meta.flagged = text == "true",
                _ => return Err(bad(format!("unknown record {kind},{name}"))),
            }
        }
        Ok(rep)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EnergyReport {
        let mut params = BTreeMap::new();
        params.insert("rho".to_string(), 0.1);
        EnergyReport {
            surface: "chen-glue:2:0.1".into(),
            params,
            functionals: Functionals {
                willmore: Functional { value: std::f64::consts::PI * 8.0, error: 1.0e-9 / 3.0, evals: 123 },
                a2: Functional { value: 0.1 + 0.2, error: 0.0, evals: 123 },
                a0: Functional { value: -1e-300, error: 5e-324, evals: 1 },
                total_curvature: Functional { value: 4.0 * std::f64::consts::PI, error: 2.5e-11, evals: 7 },
            },
            checks: vec![Check::new("a0_identity", 1e-12, 1e-10), Check::new("gauss_bonnet", 2.0, 1.0)],
            meta: Meta::new(QuadConfig::with_tol(1e-7), 0.5, true),
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = sample();
        assert_eq!(EnergyReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let r = sample();
        let csv = r.to_csv();
        assert_eq!(EnergyReport::from_csv(&csv).unwrap(), r);
        assert!(csv.lines().next().unwrap().starts_with("record,name"));
    }

    #[test]
    fn json_uses_the_report_schema() {
        let v: serde_json::Value = serde_json::from_str(&sample().to_json()).unwrap();
        for key in ["W", "a2", "a0", "totK"] {
            assert!(v["functionals"][key]["value"].is_number(), "{key}");
            assert!(v["functionals"][key]["evals"].is_u64(), "{key}");
        }
        assert_eq!(v["checks"][1]["pass"], false);
        assert!(v["meta"]["version"].is_string());
        assert!(v["meta"]["tolerances"]["rel_tol"].is_number());
    }

    #[test]
    fn failing_check_or_flag_fails_the_report() {
        let mut r = sample();
        assert!(!r.passed());
        r.checks.pop();
        assert!(!r.passed());
        r.meta.flagged = false;
        assert!(r.passed());
    }
}
