//! Problem files and result writers.
//!
//! A problem file is a JSON object:
//!
//! ```json
//! {
//!   "variables": ["x1", "x2"],
//!   "expressions": ["x1^3 + x2^3"],
//!   "domain": [[-3, 3], [-3, 3]],
//!   "measurements": [{"output": 0, "y": 0, "eta": 2}],
//!   "epsilon": 0.01,
//!   "engine": "ism",
//!   "N": 20,
//!   "n_J_max": 64,
//!   "budget": 1000000,
//!   "seed": 0
//! }
//! ```
//!
//! `output` is a 0-based index into `expressions`. `variables` is optional;
//! without it identifiers `x1 .. xn` are used. Unknown keys are rejected.
//! All numbers in written results use 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::interval::{Interval, IntervalBox};
use crate::setinv::{Engine, GpeProblem, Measurement, Subpaving, DEFAULT_BUDGET};
use crate::staircase::DEFAULT_MAX_CORNERS;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    pub output: usize,
    pub y: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    pub fn as_slice(&self) -> &[String] {
        match self {
            OneOrMany::One(s) => std::slice::from_ref(s),
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variables: Option<Vec<String>>,
    #[serde(alias = "expression")]
    pub expressions: OneOrMany,
    pub domain: Vec<[f64; 2]>,
    pub measurements: Vec<MeasurementSpec>,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<Engine>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(rename = "n_J_max", default, skip_serializing_if = "Option::is_none")]
    pub max_corners: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }

    /// Validate and build the problem. Errors name the offending field.
    pub fn to_problem(&self) -> Result<GpeProblem> {
        let texts = self.expressions.as_slice();
        if texts.is_empty() {
            return Err(Error::invalid("expressions", "at least one expression is required"));
        }
        if let Some(vars) = &self.variables {
            if vars.len() != self.domain.len() {
                return Err(Error::invalid(
                    "variables",
                    format!("{} names for {} domain intervals", vars.len(), self.domain.len()),
                ));
            }
        }
        let model = match &self.variables {
            Some(vars) => Expr::parse_many(texts, Some(vars)),
            None => {
                // x<k> identifiers; the domain fixes the variable count
                let names: Vec<String> = (1..=self.domain.len()).map(|i| format!("x{i}")).collect();
                Expr::parse_many(texts, Some(&names))
            }
        }
        .map_err(|e| Error::invalid("expressions", e.to_string()))?;

        if self.domain.is_empty() {
            return Err(Error::invalid("domain", "at least one interval is required"));
        }
        let mut comps = Vec::with_capacity(self.domain.len());
        for (i, &[lo, hi]) in self.domain.iter().enumerate() {
            let c = Interval::new(lo, hi).map_err(|e| Error::invalid(format!("domain[{i}]"), e.to_string()))?;
            if !c.is_finite() {
                return Err(Error::invalid(format!("domain[{i}]"), "bounds must be finite"));
            }
            comps.push(c);
        }
        let domain = IntervalBox::new(comps)?;

        let mut measurements = Vec::with_capacity(self.measurements.len());
        for (k, m) in self.measurements.iter().enumerate() {
            let meas = Measurement::new(m.output, m.y, m.eta).map_err(|e| match e {
                Error::InvalidProblem { field, message } => {
                    Error::invalid(format!("measurements[{k}].{field}"), message)
                }
                other => other,
            })?;
            if m.output >= model.n_outputs() {
                return Err(Error::invalid(
                    format!("measurements[{k}].output"),
                    format!("output {} out of range ({} expressions)", m.output, model.n_outputs()),
                ));
            }
            measurements.push(meas);
        }

        let mut p = GpeProblem::new(model, domain, measurements, self.epsilon)?;
        p.engine = self.engine.unwrap_or(Engine::Sivia);
        p.grid_n = self.grid_n.unwrap_or(p.grid_n);
        p.max_corners = Some(self.max_corners.unwrap_or(DEFAULT_MAX_CORNERS));
        p.budget = self.budget.unwrap_or(DEFAULT_BUDGET);
        p.validate()?;
        Ok(p)
    }
}

/// `v` with 17 significant digits.
pub fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_box(out: &mut String, b: &IntervalBox) {
    out.push('[');
    for (i, c) in b.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "[{},{}]", sig17(c.lo()), sig17(c.hi()));
    }
    out.push(']');
}

/// `{"interior": [...], "boundary": [...]}` with boxes as lists of `[lo, hi]`.
pub fn subpaving_json(sp: &Subpaving) -> String {
    let mut out = String::from("{\n");
    for (name, boxes, last) in [("interior", &sp.interior, false), ("boundary", &sp.boundary, true)] {
        let _ = write!(out, "  \"{name}\": [");
        for (i, b) in boxes.iter().enumerate() {
            out.push_str(if i == 0 { "\n    " } else { ",\n    " });
            write_box(&mut out, b);
        }
        out.push_str(if boxes.is_empty() { "]" } else { "\n  ]" });
        out.push_str(if last { "\n" } else { ",\n" });
    }
    out.push_str("}\n");
    out
}

fn csv_header(out: &mut String, dim: usize) {
    out.push_str("class");
    for i in 1..=dim {
        let _ = write!(out, ",lo_{i},hi_{i}");
    }
    out.push('\n');
}

fn csv_row(out: &mut String, class: &str, b: &IntervalBox) {
    out.push_str(class);
    for c in b.iter() {
        let _ = write!(out, ",{},{}", sig17(c.lo()), sig17(c.hi()));
    }
    out.push('\n');
}

/// One row per box: `class,lo_1,hi_1,...`.
pub fn subpaving_csv(sp: &Subpaving, dim: usize) -> String {
    let mut out = String::new();
    csv_header(&mut out, dim);
    for b in &sp.interior {
        csv_row(&mut out, "interior", b);
    }
    for b in &sp.boundary {
        csv_row(&mut out, "boundary", b);
    }
    out
}

/// Cell listing in the subpaving CSV layout; `class` is any label.
pub fn cells_csv<'a>(dim: usize, cells: impl IntoIterator<Item = (&'a str, &'a IntervalBox)>) -> String {
    let mut out = String::new();
    csv_header(&mut out, dim);
    for (class, b) in cells {
        csv_row(&mut out, class, b);
    }
    out
}

/// Run statistics as a JSON object.
pub fn stats_json(p: &GpeProblem, sp: &Subpaving) -> String {
    format!(
        concat!(
            "{{\n",
            "  \"engine\": \"{}\",\n",
            "  \"N\": {},\n",
            "  \"epsilon\": {},\n",
            "  \"iterations\": {},\n",
            "  \"interior_count\": {},\n",
            "  \"boundary_count\": {},\n",
            "  \"wall_ms\": {}\n",
            "}}\n"
        ),
        p.engine,
        p.grid_n,
        sig17(p.epsilon),
        sp.stats.iterations,
        sp.interior.len(),
        sp.boundary.len(),
        sig17(sp.stats.wall_time.as_secs_f64() * 1e3),
    )
}

/// Parse a subpaving back from [`subpaving_json`] output.
pub fn parse_subpaving_json(text: &str) -> Result<Subpaving> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Raw {
        interior: Vec<IntervalBox>,
        boundary: Vec<IntervalBox>,
    }
    let raw: Raw = serde_json::from_str(text)?;
    Ok(Subpaving {
        interior: raw.interior,
        boundary: raw.boundary,
        ..Subpaving::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBES: &str = r#"{
        "expressions": ["x1^3 + x2^3"],
        "domain": [[-3, 3], [-3, 3]],
        "measurements": [{"output": 0, "y": 0, "eta": 2}],
        "epsilon": 0.5,
        "engine": "ism",
        "N": 20
    }"#;

    #[test]
    fn parses_and_builds() {
        let f = ProblemFile::from_json(CUBES).unwrap();
        let p = f.to_problem().unwrap();
        assert_eq!(p.engine, Engine::Ism);
        assert_eq!(p.grid_n, 20);
        assert_eq!(p.measurements[0].band, Interval::new(-2.0, 2.0).unwrap());
        assert_eq!(p.budget, DEFAULT_BUDGET);
    }

    #[test]
    fn single_expression_alias() {
        let text = CUBES.replace("\"expressions\": [\"x1^3 + x2^3\"]", "\"expression\": \"x1^3 + x2^3\"");
        assert!(ProblemFile::from_json(&text).unwrap().to_problem().is_ok());
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = CUBES.replace("\"N\": 20", "\"N\": 20, \"colour\": 1");
        let err = ProblemFile::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
    }

    #[test]
    fn errors_name_fields() {
        let cases = [
            (CUBES.replace("\"epsilon\": 0.5", "\"epsilon\": -1"), "epsilon"),
            (CUBES.replace("[-3, 3], [-3, 3]", "[3, -3], [-3, 3]"), "domain[0]"),
            (CUBES.replace("x1^3 + x2^3", "x1^3 + "), "expressions"),
            (CUBES.replace("\"output\": 0", "\"output\": 4"), "measurements[0].output"),
            (CUBES.replace("\"eta\": 2", "\"eta\": -2"), "measurements[0].eta"),
        ];
        for (text, field) in cases {
            match ProblemFile::from_json(&text).and_then(|f| f.to_problem()) {
                Err(Error::InvalidProblem { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{field}: {other:?}"),
            }
        }
        let missing = CUBES.replace("\"epsilon\": 0.5,", "");
        assert!(ProblemFile::from_json(&missing).unwrap_err().to_string().contains("epsilon"));
        let bad_engine = CUBES.replace("\"ism\"", "\"taylor\"");
        assert!(ProblemFile::from_json(&bad_engine).is_err());
    }

    #[test]
    fn named_variables() {
        let text = r#"{"variables": ["a", "b"], "expressions": ["a*b"], "domain": [[0,1],[0,1]],
            "measurements": [{"output": 0, "y": 0.5, "eta": 0.1}], "epsilon": 0.1}"#;
        let p = ProblemFile::from_json(text).unwrap().to_problem().unwrap();
        assert_eq!(p.model.var_names(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn writers_round_trip() {
        let f = ProblemFile::from_json(CUBES).unwrap();
        let p = f.to_problem().unwrap();
        let mut sp = crate::setinv::solve(&p).unwrap();
        sp.canonicalize();
        let back = parse_subpaving_json(&subpaving_json(&sp)).unwrap();
        assert_eq!(back.interior, sp.interior);
        assert_eq!(back.boundary, sp.boundary);
        let csv = subpaving_csv(&sp, 2);
        assert!(csv.starts_with("class,lo_1,hi_1,lo_2,hi_2\n"));
        assert_eq!(csv.lines().count(), 1 + sp.interior.len() + sp.boundary.len());
        let stats: serde_json::Value = serde_json::from_str(&stats_json(&p, &sp)).unwrap();
        for key in ["engine", "N", "epsilon", "iterations", "interior_count", "boundary_count", "wall_ms"] {
            assert!(stats.get(key).is_some(), "{key}");
        }
        assert_eq!(sig17(0.1), "1.0000000000000001e-1");
        assert_eq!(sig17(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
