//! Problem files: `A`, `B`, `x0`, optional tolerances, label, multiplier and
//! expected outcomes, as JSON.

use serde::{Deserialize, Serialize};
use timeopt_core::fixtures::{Expected, Fixture, SwitchRule};
use timeopt_core::{BehaviorClass, Matrix, Problem, Tolerances};

use crate::InputError;

pub const PROBLEM_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Forward multiplier `ẑ` used to build `x0`, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<ExpectedBlock>,
}

fn default_version() -> u32 {
    PROBLEM_SCHEMA_VERSION
}

/// Any subset of the solver tolerances.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere_restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imag_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub const_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ToleranceOverrides {
    /// Values set here win over `base`.
    pub fn apply(&self, mut base: Tolerances) -> Tolerances {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { base.$f = v; } )* };
        }
        set!(rank_tol, time_tol, zero_tol, quad_tol, sphere_restarts, imag_tol, order_tol, const_tol, horizon_cap, seed);
        base
    }

    /// Layers `other` on top of `self`.
    pub fn merged(&self, other: &ToleranceOverrides) -> ToleranceOverrides {
        macro_rules! pick {
            ($($f:ident),*) => { ToleranceOverrides { $( $f: other.$f.or(self.$f), )* } };
        }
        pick!(rank_tol, time_tol, zero_tol, quad_tol, sphere_restarts, imag_tol, order_tol, const_tol, horizon_cap, seed)
    }
}

/// Expected outcomes carried by fixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_star: Option<f64>,
    pub t_star_rel_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_star_above: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub behavior_class: Option<String>,
    /// `empty`, `multiples_of_pi`, `rotation_phase`, or absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch_rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_coords: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub even_nodal_points: Vec<f64>,
}

impl ExpectedBlock {
    pub fn from_expected(e: &Expected) -> Self {
        let (rule, coords) = match &e.switches {
            SwitchRule::Empty => (Some("empty"), None),
            SwitchRule::MultiplesOfPi => (Some("multiples_of_pi"), None),
            SwitchRule::RotationPhase { coords } => (Some("rotation_phase"), Some(*coords)),
            SwitchRule::Unspecified => (None, None),
        };
        ExpectedBlock {
            t_star: e.t_star,
            t_star_rel_tol: e.t_star_rel_tol,
            t_star_above: e.t_star_above,
            behavior_class: e.class.map(|c| c.as_str().to_string()),
            switch_rule: rule.map(str::to_string),
            rotation_coords: coords,
            even_nodal_points: e.even_nodal_points.clone(),
        }
    }

    pub fn to_expected(&self) -> Result<Expected, InputError> {
        let class = match &self.behavior_class {
            Some(s) => Some(
                BehaviorClass::parse(s)
                    .ok_or_else(|| InputError::field("expected.behavior_class", format!("unknown class '{s}'")))?,
            ),
            None => None,
        };
        let switches = match self.switch_rule.as_deref() {
            None => SwitchRule::Unspecified,
            Some("empty") => SwitchRule::Empty,
            Some("multiples_of_pi") => SwitchRule::MultiplesOfPi,
            Some("rotation_phase") => SwitchRule::RotationPhase {
                coords: self.rotation_coords.ok_or_else(|| {
                    InputError::field("expected.rotation_coords", "required for rotation_phase".to_string())
                })?,
            },
            Some(other) => return Err(InputError::field("expected.switch_rule", format!("unknown rule '{other}'"))),
        };
        Ok(Expected {
            t_star: self.t_star,
            t_star_rel_tol: self.t_star_rel_tol,
            t_star_above: self.t_star_above,
            class,
            switches,
            even_nodal_points: self.even_nodal_points.clone(),
        })
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, InputError> {
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| InputError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    pub fn validate(&self) -> Result<(), InputError> {
        if self.schema_version != PROBLEM_SCHEMA_VERSION {
            return Err(InputError::field(
                "schema_version",
                format!("unsupported version {}, expected {PROBLEM_SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.n == 0 || self.m == 0 {
            return Err(InputError::field("n", format!("dimensions must be positive, got n = {}, m = {}", self.n, self.m)));
        }
        check_rows("A", &self.a, self.n, self.n)?;
        check_rows("B", &self.b, self.n, self.m)?;
        if self.x0.len() != self.n {
            return Err(InputError::field("x0", format!("has {} entries, expected n = {}", self.x0.len(), self.n)));
        }
        if let Some(i) = self.x0.iter().position(|v| !v.is_finite()) {
            return Err(InputError::field("x0", format!("entry {i} is not finite")));
        }
        if self.x0.iter().all(|v| *v == 0.0) {
            return Err(InputError::field("x0", "must be nonzero".to_string()));
        }
        if self.b.iter().flatten().all(|v| *v == 0.0) {
            return Err(InputError::field("B", "must be nonzero".to_string()));
        }
        if let Some(z) = &self.multiplier {
            if z.len() != self.n {
                return Err(InputError::field("multiplier", format!("has {} entries, expected n = {}", z.len(), self.n)));
            }
        }
        if let Some(e) = &self.expected {
            e.to_expected()?;
        }
        Ok(())
    }

    pub fn matrices(&self) -> (Matrix, Matrix) {
        let rows = |m: &Vec<Vec<f64>>| {
            let refs: Vec<&[f64]> = m.iter().map(|r| r.as_slice()).collect();
            Matrix::from_rows(&refs)
        };
        (rows(&self.a), rows(&self.b))
    }

    /// Builds the problem with file tolerances layered under `overrides`.
    pub fn problem(&self, overrides: &ToleranceOverrides) -> Result<Problem, timeopt_core::Error> {
        let file_tol = self.tolerances.clone().unwrap_or_default();
        let tol = file_tol.merged(overrides).apply(Tolerances::default());
        let (a, b) = self.matrices();
        let mut p = Problem::new(a, b, self.x0.clone(), tol)?;
        if let Some(l) = &self.label {
            p = p.with_label(l.clone());
        }
        if let Some(z) = &self.multiplier {
            p = p.with_multiplier_hint(z.clone());
        }
        Ok(p)
    }

    pub fn from_fixture(f: &Fixture) -> Self {
        let rows = |m: &Matrix| (0..m.rows()).map(|i| m.row(i).to_vec()).collect::<Vec<_>>();
        ProblemFile {
            schema_version: PROBLEM_SCHEMA_VERSION,
            n: f.a.rows(),
            m: f.b.cols(),
            a: rows(&f.a),
            b: rows(&f.b),
            x0: f.x0.clone(),
            tolerances: None,
            label: Some(f.name.clone()),
            multiplier: f.multiplier.clone(),
            expected: Some(ExpectedBlock::from_expected(&f.expected)),
        }
    }
}

fn check_rows(name: &str, m: &[Vec<f64>], rows: usize, cols: usize) -> Result<(), InputError> {
    if m.len() != rows {
        return Err(InputError::field(name, format!("has {} rows, expected {rows}", m.len())));
    }
    for (i, r) in m.iter().enumerate() {
        if r.len() != cols {
            return Err(InputError::field(name, format!("row {i} has {} entries, expected {cols}", r.len())));
        }
        if let Some(j) = r.iter().position(|v| !v.is_finite()) {
            return Err(InputError::field(name, format!("entry ({i}, {j}) is not finite")));
        }
    }
    Ok(())
}
