//! Run configuration: a single JSON file, validated in one pass so every
//! problem is reported together with its path.

use std::fmt;
use std::path::{Path, PathBuf};

use forch_core::gppc::Term;
use forch_core::grid::Shape;
use forch_core::solver::SolverControls;
use forch_core::{Domain, GppcPolynomial};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// How pressure data on the well boundary is given.
#[derive(Debug, Clone, PartialEq)]
pub enum WellData {
    Zero,
    /// `(coordinate, value)` pairs along `Γ_i`: angle for annuli, `y` for rectangles.
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    A(f64),
    Q(f64),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub domain: Domain,
    pub g: GppcPolynomial,
    pub regime: Regime,
    pub well: WellData,
    pub chi: Option<f64>,
    pub controls: SolverControls,
    /// Profile to transform instead of solving for one; relative to the config file.
    pub input_field: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// `A`, converting a prescribed `Q` through `A = Q/|U|`.
    pub fn a(&self) -> f64 {
        match self.regime {
            Regime::A(a) => a,
            Regime::Q(q) => forch_core::engineering::a_from_q(q, &self.domain),
        }
    }

    /// Well data sampled at the `Γ_i` nodes.
    pub fn well_values(&self) -> Vec<f64> {
        let n = self.domain.nodes()[1];
        match &self.well {
            WellData::Zero => vec![0.0; n],
            WellData::Table(rows) => {
                (0..n).map(|j| interpolate(rows, self.domain.coord2(j), self.domain.periodic2())).collect()
            }
        }
    }

    pub fn load(path: &Path, resolution: Option<[usize; 2]>) -> Result<Self, Vec<ConfigIssue>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| vec![issue("$", format!("cannot read {}: {e}", path.display()))])?;
        let value: Value = serde_json::from_str(&text).map_err(|e| vec![issue("$", format!("invalid JSON: {e}"))])?;
        let mut cfg = Self::from_value(&value, resolution)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.input_field = cfg.input_field.map(|p| base.join(p));
        Ok(cfg)
    }

    pub fn from_value(v: &Value, resolution: Option<[usize; 2]>) -> Result<Self, Vec<ConfigIssue>> {
        let mut issues = Vec::new();
        let Some(obj) = v.as_object() else {
            return Err(vec![issue("$", "config must be a JSON object")]);
        };
        const KNOWN: [&str; 9] = ["domain", "gppc", "A", "Q", "phi", "chi", "solver", "input_field", "output"];
        for key in obj.keys() {
            if !KNOWN.contains(&key.as_str()) {
                issues.push(issue(&format!("$.{key}"), "unknown field"));
            }
        }

        let domain = parse_domain(obj.get("domain"), resolution, &mut issues);
        let g = parse_gppc(obj.get("gppc"), &mut issues);

        let regime = match (obj.get("A"), obj.get("Q")) {
            (Some(_), Some(_)) => {
                issues.push(issue("$", "give exactly one of `A` and `Q`"));
                None
            }
            (None, None) => {
                issues.push(issue("$", "missing `A` or `Q`"));
                None
            }
            (Some(a), None) => finite(a, "$.A", &mut issues).map(Regime::A),
            (None, Some(q)) => finite(q, "$.Q", &mut issues).map(Regime::Q),
        };

        let well = match obj.get("phi") {
            None => Some(WellData::Zero),
            Some(Value::String(s)) if s == "zero" => Some(WellData::Zero),
            Some(Value::Object(m)) if m.contains_key("table") => parse_table(&m["table"], &mut issues),
            Some(_) => {
                issues.push(issue("$.phi", "expected \"zero\" or {\"table\": [[coordinate, value], ...]}"));
                None
            }
        };

        let chi = match obj.get("chi") {
            None | Some(Value::Null) => Some(None),
            Some(c) => match finite(c, "$.chi", &mut issues) {
                Some(c) if c > 0.0 => Some(Some(c)),
                Some(c) => {
                    issues.push(issue("$.chi", format!("must be positive, got {c}")));
                    None
                }
                None => None,
            },
        };

        let controls = match obj.get("solver") {
            None => Some(SolverControls::default()),
            Some(s) => match serde_json::from_value::<SolverControls>(s.clone()) {
                Ok(c) => match c.validate() {
                    Ok(()) => Some(c),
                    Err(e) => {
                        issues.push(issue("$.solver", e.to_string()));
                        None
                    }
                },
                Err(e) => {
                    issues.push(issue("$.solver", e.to_string()));
                    None
                }
            },
        };

        let path_field = |key: &str, issues: &mut Vec<ConfigIssue>| match obj.get(key) {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => {
                issues.push(issue(&format!("$.{key}"), "expected a path string"));
                None
            }
        };
        let input_field = path_field("input_field", &mut issues);
        let output = path_field("output", &mut issues);

        match (domain, g, regime, well, chi, controls) {
            (Some(domain), Some(g), Some(regime), Some(well), Some(chi), Some(controls)) if issues.is_empty() => {
                Ok(RunConfig { domain, g, regime, well, chi, controls, input_field, output })
            }
            _ => Err(issues),
        }
    }
}

fn issue(path: &str, message: impl Into<String>) -> ConfigIssue {
    ConfigIssue { path: path.to_string(), message: message.into() }
}

fn finite(v: &Value, path: &str, issues: &mut Vec<ConfigIssue>) -> Option<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Some(x),
        _ => {
            issues.push(issue(path, "expected a finite number"));
            None
        }
    }
}

fn parse_domain(v: Option<&Value>, resolution: Option<[usize; 2]>, issues: &mut Vec<ConfigIssue>) -> Option<Domain> {
    let Some(obj) = v.and_then(Value::as_object) else {
        issues.push(issue("$.domain", "missing or not an object"));
        return None;
    };
    let before = issues.len();
    let mut num = |key: &str| -> Option<f64> {
        match obj.get(key) {
            Some(x) => finite(x, &format!("$.domain.{key}"), issues),
            None => {
                issues.push(issue(&format!("$.domain.{key}"), "missing"));
                None
            }
        }
    };
    let shape = match obj.get("kind").and_then(Value::as_str) {
        Some("annulus") => match (num("r_inner"), num("r_outer")) {
            (Some(r_inner), Some(r_outer)) => Some(Shape::Annulus { r_inner, r_outer }),
            _ => None,
        },
        Some("rectangle") => match (num("x_min"), num("x_max"), num("y_min"), num("y_max")) {
            (Some(x_min), Some(x_max), Some(y_min), Some(y_max)) => {
                Some(Shape::Rectangle { x_min, x_max, y_min, y_max })
            }
            _ => None,
        },
        Some(other) => {
            issues.push(issue("$.domain.kind", format!("unknown kind `{other}` (annulus or rectangle)")));
            None
        }
        None => {
            issues.push(issue("$.domain.kind", "missing"));
            None
        }
    };
    let cells = match (resolution, obj.get("resolution")) {
        (Some(r), _) => Some(r),
        (None, Some(r)) => match serde_json::from_value::<[usize; 2]>(r.clone()) {
            Ok(r) => Some(r),
            Err(_) => {
                issues.push(issue("$.domain.resolution", "expected [cells_1, cells_2]"));
                None
            }
        },
        (None, None) => Some([64, 32]),
    };
    if issues.len() > before {
        return None;
    }
    match Domain::new(shape?, cells?) {
        Ok(d) => Some(d),
        Err(e) => {
            issues.push(issue("$.domain", e.to_string()));
            None
        }
    }
}

fn parse_gppc(v: Option<&Value>, issues: &mut Vec<ConfigIssue>) -> Option<GppcPolynomial> {
    let Some(list) = v.and_then(Value::as_array) else {
        issues.push(issue("$.gppc", "missing or not a list of {\"a\", \"alpha\"} terms"));
        return None;
    };
    let before = issues.len();
    let mut terms = Vec::with_capacity(list.len());
    for (k, t) in list.iter().enumerate() {
        match serde_json::from_value::<Term>(t.clone()) {
            Ok(t) => terms.push(t),
            Err(e) => issues.push(issue(&format!("$.gppc[{k}]"), e.to_string())),
        }
    }
    if issues.len() > before {
        return None;
    }
    match GppcPolynomial::new(terms) {
        Ok(g) => Some(g),
        Err(e) => {
            issues.push(issue("$.gppc", e.to_string()));
            None
        }
    }
}

fn parse_table(v: &Value, issues: &mut Vec<ConfigIssue>) -> Option<WellData> {
    let rows: Vec<(f64, f64)> = match serde_json::from_value(v.clone()) {
        Ok(r) => r,
        Err(_) => {
            issues.push(issue("$.phi.table", "expected [[coordinate, value], ...]"));
            return None;
        }
    };
    if rows.is_empty() {
        issues.push(issue("$.phi.table", "empty table"));
        return None;
    }
    if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
        issues.push(issue("$.phi.table", "coordinates must be strictly increasing"));
        return None;
    }
    Some(WellData::Table(rows))
}

/// Piecewise-linear interpolation; periodic in `[0, 2π)` when `periodic`,
/// otherwise clamped to the end values.
fn interpolate(rows: &[(f64, f64)], x: f64, periodic: bool) -> f64 {
    if rows.len() == 1 {
        return rows[0].1;
    }
    let (first, last) = (rows[0], rows[rows.len() - 1]);
    if x <= first.0 || x >= last.0 {
        if !periodic {
            return if x <= first.0 { first.1 } else { last.1 };
        }
        // Wrap segment from the last row to the first row plus one period.
        let span = first.0 + std::f64::consts::TAU - last.0;
        let t = if x >= last.0 { x - last.0 } else { x + std::f64::consts::TAU - last.0 };
        return last.1 + (first.1 - last.1) * t / span;
    }
    let k = rows.partition_point(|r| r.0 <= x);
    let (a, b) = (rows[k - 1], rows[k]);
    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn base() -> Value {
        json!({
            "domain": {"kind": "annulus", "r_inner": 1.0, "r_outer": 2.0, "resolution": [16, 8]},
            "gppc": [{"a": 1.0, "alpha": 0.0}],
            "A": 1.0
        })
    }

    #[test]
    fn minimal_config() {
        let cfg = RunConfig::from_value(&base(), None).unwrap();
        assert_eq!(cfg.domain.cells, [16, 8]);
        assert_eq!(cfg.a(), 1.0);
        assert_eq!(cfg.well, WellData::Zero);
        assert!(cfg.chi.is_none());
    }

    #[test]
    fn resolution_override() {
        let cfg = RunConfig::from_value(&base(), Some([32, 4])).unwrap();
        assert_eq!(cfg.domain.cells, [32, 4]);
    }

    #[test]
    fn q_is_converted() {
        let mut v = base();
        v.as_object_mut().unwrap().remove("A");
        v["Q"] = json!(3.0 * std::f64::consts::PI);
        let cfg = RunConfig::from_value(&v, None).unwrap();
        assert!((cfg.a() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_issues_are_collected() {
        let v = json!({
            "domain": {"kind": "annulus", "r_inner": 2.0, "r_outer": "x"},
            "gppc": [{"a": -1.0, "alpha": 0.0}, {"a": 1.0}],
            "A": 1.0,
            "Q": 2.0,
            "chi": -0.5,
            "bogus": 1
        });
        let issues = RunConfig::from_value(&v, None).unwrap_err();
        let paths: Vec<&str> = issues.iter().map(|i| i.path.as_str()).collect();
        for p in ["$.bogus", "$.domain.r_outer", "$.gppc[1]", "$", "$.chi"] {
            assert!(paths.contains(&p), "{p} missing from {paths:?}");
        }
    }

    #[test]
    fn invalid_gppc_reported_after_parsing() {
        let mut v = base();
        v["gppc"] = json!([{"a": 1.0, "alpha": 0.5}]);
        let issues = RunConfig::from_value(&v, None).unwrap_err();
        assert_eq!(issues[0].path, "$.gppc");
    }

    #[test]
    fn periodic_table_interpolation() {
        let rows = [(0.0, 1.0), (std::f64::consts::PI, -1.0)];
        assert_eq!(interpolate(&rows, 0.0, true), 1.0);
        assert!((interpolate(&rows, 0.5 * std::f64::consts::PI, true)).abs() < 1e-15);
        assert!((interpolate(&rows, 1.5 * std::f64::consts::PI, true)).abs() < 1e-15);
        assert_eq!(interpolate(&rows, 10.0, false), -1.0);
    }
}
