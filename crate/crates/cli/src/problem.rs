//! Problem files: JSON documents with a `kind` tag, validated before dispatch.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use ebmod_core::builtins::{self, Builtin};
use ebmod_core::{
    ConvexPiece, LinearSystem, MaxFunction, PointSet, SmoothPiece, Tolerances, Vector,
};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub problem: Problem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverrides>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Problem {
    PointSet {
        points: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    MaxFunction {
        pieces: Vec<PieceDef>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level_set: Option<Vec<LevelSetDef>>,
    },
    LinearSystemFinite {
        rows: Vec<RowDef>,
    },
    LinearSystemCurve {
        curve: CurveDef,
    },
    Builtin {
        name: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PieceDef {
    /// `<a, x> - b`
    Affine { a: Vec<f64>, b: f64 },
    /// `x^T q x + <b, x> + c`
    Quadratic {
        q: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevelSetDef {
    Halfspace { normal: Vec<f64>, offset: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Interval { coord: usize, lo: f64, hi: f64 },
}

/// `<a, x> <= b`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowDef {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDef {
    /// A named built-in family, or absent when `table` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableDef {
    pub t: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eq_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_tol: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, tol: &mut Tolerances) {
        if let Some(v) = self.eq_tol {
            tol.eq_tol = v;
        }
        if let Some(v) = self.active_tol {
            tol.active_tol = v;
        }
        if let Some(v) = self.lp_margin {
            tol.lp_margin = v;
        }
        if let Some(v) = self.dist_tol {
            tol.dist_tol = v;
        }
    }
}

const COMMON_FIELDS: [&str; 4] = ["schema_version", "kind", "base_point", "tolerances"];

fn kind_fields(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "point_set" => &["points", "labels"],
        "max_function" => &["pieces", "level_set"],
        "linear_system_finite" => &["rows"],
        "linear_system_curve" => &["curve"],
        "builtin" => &["name"],
        _ => return None,
    })
}

impl ProblemFile {
    /// Parses and validates a problem file; errors name the line/column or field.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: Value = serde_json::from_str(text).map_err(|e| {
            CliError::Input(format!(
                "malformed JSON at line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        let Value::Object(map) = &raw else {
            return Err(CliError::Input("problem file must be a JSON object".into()));
        };
        let kind = map
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::Input("field 'kind': missing or not a string".into()))?;
        let allowed = kind_fields(kind).ok_or_else(|| {
            CliError::Input(format!(
                "field 'kind': unknown value '{kind}' (expected point_set, max_function, linear_system_finite, linear_system_curve or builtin)"
            ))
        })?;
        let known: BTreeSet<&str> = COMMON_FIELDS.iter().chain(allowed).copied().collect();
        if let Some(bad) = map.keys().find(|k| !known.contains(k.as_str())) {
            return Err(CliError::Input(format!(
                "field '{bad}': not allowed for kind '{kind}'"
            )));
        }
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| {
            CliError::Input(format!(
                "invalid problem file at line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(CliError::Input(format!(
                "field 'schema_version': unsupported version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }

    pub fn base_point(&self) -> Result<Option<Vector>, CliError> {
        self.base_point
            .as_ref()
            .map(|p| Vector::new(p.clone()).map_err(|e| field_err("base_point", e)))
            .transpose()
    }
}

fn field_err(field: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("field '{field}': {e}"))
}

fn vector(field: &str, v: &[f64]) -> Result<Vector, CliError> {
    Vector::new(v.to_vec()).map_err(|e| field_err(field, e))
}

pub fn point_set(points: &[Vec<f64>], labels: &Option<Vec<String>>) -> Result<PointSet, CliError> {
    let pts = points
        .iter()
        .enumerate()
        .map(|(i, p)| vector(&format!("points[{i}]"), p))
        .collect::<Result<Vec<_>, _>>()?;
    match labels {
        Some(l) => PointSet::with_labels(pts, l.clone()),
        None => PointSet::new(pts),
    }
    .map_err(|e| field_err("points", e))
}

pub fn max_function(pieces: &[PieceDef]) -> Result<MaxFunction, CliError> {
    let built = pieces
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let field = format!("pieces[{i}]");
            match p {
                PieceDef::Affine { a, b } => SmoothPiece::affine(vector(&field, a)?, *b),
                PieceDef::Quadratic { q, b, c } => {
                    SmoothPiece::quadratic(q.clone(), vector(&field, b)?, *c)
                }
            }
            .map_err(|e| field_err(&field, e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    MaxFunction::new(built).map_err(|e| field_err("pieces", e))
}

pub fn level_set(def: &[LevelSetDef]) -> Result<Vec<ConvexPiece>, CliError> {
    def.iter()
        .enumerate()
        .map(|(i, p)| {
            let field = format!("level_set[{i}]");
            match p {
                LevelSetDef::Halfspace { normal, offset } => {
                    ConvexPiece::halfspace(vector(&field, normal)?, *offset)
                }
                LevelSetDef::Ball { center, radius } => {
                    ConvexPiece::ball(vector(&field, center)?, *radius)
                }
                LevelSetDef::Interval { coord, lo, hi } => ConvexPiece::interval(*coord, *lo, *hi),
            }
            .map_err(|e| field_err(&field, e))
        })
        .collect()
}

pub fn finite_system(rows: &[RowDef]) -> Result<LinearSystem, CliError> {
    let rows = rows
        .iter()
        .enumerate()
        .map(|(i, r)| Ok((vector(&format!("rows[{i}].a"), &r.a)?, r.b)))
        .collect::<Result<Vec<_>, CliError>>()?;
    LinearSystem::finite(rows).map_err(|e| field_err("rows", e))
}

pub fn curve_system(def: &CurveDef) -> Result<LinearSystem, CliError> {
    let sys = match (&def.name, &def.table) {
        (Some(name), None) => {
            let sys = match name.parse::<Builtin>() {
                Ok(Builtin::CircleWeighted) => builtins::circle_weighted(),
                Ok(Builtin::CircleUnit) => builtins::circle_unit(),
                _ => {
                    return Err(CliError::Input(format!(
                        "field 'curve.name': unknown curve '{name}' (expected circle-weighted or circle-unit)"
                    )))
                }
            };
            if let Some(range) = def.t_range {
                if range != [0.0, std::f64::consts::TAU] {
                    return Err(CliError::Input(
                        "field 'curve.t_range': named curves are fixed on [0, 2 pi]".into(),
                    ));
                }
            }
            sys
        }
        (None, Some(table)) => {
            if table.a.len() != table.t.len() || table.b.len() != table.t.len() {
                return Err(CliError::Input(
                    "field 'curve.table': t, a and b must have equal lengths".into(),
                ));
            }
            if let Some([t0, t1]) = def.t_range {
                if table.t.first() != Some(&t0) || table.t.last() != Some(&t1) {
                    return Err(CliError::Input(
                        "field 'curve.t_range': must match the table's first and last t".into(),
                    ));
                }
            }
            let rows = table
                .a
                .iter()
                .zip(&table.b)
                .enumerate()
                .map(|(i, (a, b))| Ok((vector(&format!("curve.table.a[{i}]"), a)?, *b)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let grid = def.grid.unwrap_or(4 * table.t.len());
            return LinearSystem::table(table.t.clone(), rows, grid)
                .map_err(|e| field_err("curve.table", e));
        }
        _ => {
            return Err(CliError::Input(
                "field 'curve': give exactly one of 'name' and 'table'".into(),
            ))
        }
    };
    match def.grid {
        Some(g) => sys
            .with_grid_size(g)
            .map_err(|e| field_err("curve.grid", e)),
        None => Ok(sys),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_every_kind() {
        let docs = [
            r#"{"schema_version":1,"kind":"point_set","points":[[0.5,0.5],[1,1]]}"#,
            r#"{"schema_version":1,"kind":"max_function","pieces":[{"type":"quadratic","q":[[1,0],[0,1]],"b":[0.5,0.5],"c":0},{"type":"affine","a":[1,1],"b":0}],"level_set":[{"type":"ball","center":[-0.25,-0.25],"radius":0.35}],"base_point":[0,0]}"#,
            r#"{"schema_version":1,"kind":"linear_system_finite","rows":[{"a":[1,0],"b":1}],"tolerances":{"active_tol":1e-7}}"#,
            r#"{"schema_version":1,"kind":"linear_system_curve","curve":{"name":"circle-unit","grid":1024}}"#,
            r#"{"schema_version":1,"kind":"builtin","name":"stu-war"}"#,
        ];
        for doc in docs {
            let parsed = ProblemFile::parse(doc).unwrap();
            let again = ProblemFile::parse(&parsed.to_json()).unwrap();
            assert_eq!(parsed, again);
        }
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let err = ProblemFile::parse(
            "{\"schema_version\":1,\n\"kind\":\"point_set\",\n\"points\":[[1,]]}",
        )
        .unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = ProblemFile::parse(
            r#"{"schema_version":1,"kind":"point_set","points":[[1]],"rows":[]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("'rows'"), "{err}");
        let err = ProblemFile::parse(r#"{"schema_version":2,"kind":"builtin","name":"stu-war"}"#)
            .unwrap_err();
        assert!(err.to_string().contains("schema_version"), "{err}");
        let err = ProblemFile::parse(r#"{"schema_version":1,"kind":"polygon"}"#).unwrap_err();
        assert!(err.to_string().contains("'kind'"), "{err}");
    }

    #[test]
    fn curve_definitions() {
        let named = CurveDef {
            name: Some("circle-weighted".into()),
            table: None,
            t_range: None,
            grid: Some(512),
        };
        assert!(curve_system(&named).is_ok());
        let neither = CurveDef {
            name: None,
            table: None,
            t_range: None,
            grid: None,
        };
        assert!(curve_system(&neither).is_err());
    }
}
