//! Body description files and output formatting.
//!
//! A body file is a JSON object with a `type` discriminator:
//!
//! ```json
//! {"type": "ball", "dim": 3, "radius": 1.0}
//! {"type": "ellipsoid", "matrix": [[4, 0], [0, 1]]}
//! {"type": "polytope_h", "normals": [[1, 0], [0, 1]], "offsets": [1, 1]}
//! {"type": "cylinder", "r": 0.5, "k": 1, "n": 3}
//! {"type": "polytope_v", "vertices": [[0, 0], [1, 0], [0, 1]]}
//! ```
//!
//! `polytope_h` lists one halfspace per antipodal pair, `|⟨aᵢ, x⟩| ≤ bᵢ`.

use crate::bodies::{Ellipsoid, PolytopeH, ProductCylinder, SymmetricBody};
use crate::polytope::GeneralPolytopeV;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BodySpec {
    Ball {
        dim: usize,
        #[serde(default = "unit")]
        radius: f64,
    },
    Ellipsoid {
        matrix: Vec<Vec<f64>>,
    },
    PolytopeH {
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
    Cylinder {
        r: f64,
        k: usize,
        n: usize,
        #[serde(default = "unit")]
        scale: f64,
    },
    PolytopeV {
        vertices: Vec<Vec<f64>>,
    },
}

fn unit() -> f64 {
    1.0
}

/// A parsed body file: symmetric bodies for the measure commands, vertex
/// polytopes for the lemma and Brunn–Minkowski commands.
#[derive(Clone, Debug)]
pub enum ParsedBody {
    Symmetric(SymmetricBody),
    Vertex(GeneralPolytopeV),
}

impl ParsedBody {
    pub fn into_symmetric(self, field: &str) -> Result<SymmetricBody> {
        match self {
            ParsedBody::Symmetric(b) => Ok(b),
            ParsedBody::Vertex(_) => Err(Error::parse(field, "expected a symmetric body, found polytope_v")),
        }
    }

    pub fn into_vertex(self, field: &str) -> Result<GeneralPolytopeV> {
        match self {
            ParsedBody::Vertex(p) => Ok(p),
            ParsedBody::Symmetric(_) => Err(Error::parse(field, "expected a polytope_v body")),
        }
    }
}

impl BodySpec {
    pub fn build(self) -> Result<ParsedBody> {
        let (field, built) = match self {
            BodySpec::Ball { dim, radius } => (
                if dim == 0 { "dim" } else { "radius" },
                SymmetricBody::ball(dim, radius).map(ParsedBody::Symmetric),
            ),
            BodySpec::Ellipsoid { matrix } => (
                "matrix",
                Ellipsoid::new(matrix).map(|e| ParsedBody::Symmetric(e.into())),
            ),
            BodySpec::PolytopeH { normals, offsets } => {
                let field = if offsets.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
                    "offsets"
                } else {
                    "normals"
                };
                (
                    field,
                    PolytopeH::new(normals, offsets).map(|p| ParsedBody::Symmetric(p.into())),
                )
            }
            BodySpec::Cylinder { r, k, n, scale } => {
                let field = if !(r > 0.0) {
                    "r"
                } else if !(scale > 0.0) {
                    "scale"
                } else {
                    "k"
                };
                (
                    field,
                    ProductCylinder::scaled(r, k, n, scale).map(|c| ParsedBody::Symmetric(c.into())),
                )
            }
            BodySpec::PolytopeV { vertices } => ("vertices", GeneralPolytopeV::new(vertices).map(ParsedBody::Vertex)),
        };
        built.map_err(|e| match e {
            Error::InvalidBody(m) => Error::parse(field, m),
            other => Error::parse(field, other.to_string()),
        })
    }

    /// The specification that rebuilds `body`.
    pub fn from_body(body: &SymmetricBody) -> BodySpec {
        match body {
            SymmetricBody::Ball { dim, radius } => BodySpec::Ball {
                dim: *dim,
                radius: *radius,
            },
            SymmetricBody::Ellipsoid(e) => BodySpec::Ellipsoid {
                matrix: e.matrix_rows(),
            },
            SymmetricBody::PolytopeH(p) => BodySpec::PolytopeH {
                normals: p.normals().to_vec(),
                offsets: p.offsets().to_vec(),
            },
            SymmetricBody::ProductCylinder(c) => BodySpec::Cylinder {
                r: c.r,
                k: c.k,
                n: c.n,
                scale: c.scale,
            },
        }
    }

    pub fn from_vertex_polytope(p: &GeneralPolytopeV) -> BodySpec {
        BodySpec::PolytopeV {
            vertices: p.vertices().to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("body specs serialize")
    }
}

pub fn parse_body_str(text: &str) -> Result<ParsedBody> {
    let spec: BodySpec = serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        let field = message
            .split('`')
            .nth(1)
            .filter(|_| message.starts_with("missing field") || message.starts_with("unknown field"))
            .unwrap_or(if message.contains("variant") || message.contains("tag") {
                "type"
            } else {
                "body"
            })
            .to_string();
        Error::Parse { field, message }
    })?;
    spec.build()
}

pub fn parse_body(path: &Path) -> Result<ParsedBody> {
    let text = std::fs::read_to_string(path)?;
    parse_body_str(&text)
}

/// C `printf("%.{precision}g")`.
pub fn fmt_g(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let p = precision.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", strip_zeros(mantissa), sign, exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `%.12g`, the CSV number format.
pub fn fmt_csv(x: f64) -> String {
    fmt_g(x, 12)
}

/// A CSV table: a header and rows of preformatted cells.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printf_g_examples() {
        assert_eq!(fmt_g(4.188790204786391, 12), "4.18879020479");
        assert_eq!(fmt_g(0.5, 12), "0.5");
        assert_eq!(fmt_g(1e-3, 12), "0.001");
        assert_eq!(fmt_g(1e-5, 12), "1e-05");
        assert_eq!(fmt_g(123456789012345.0, 12), "1.23456789012e+14");
        assert_eq!(fmt_g(100.0, 12), "100");
        assert_eq!(fmt_g(-2.5, 3), "-2.5");
        assert_eq!(fmt_g(0.0, 12), "0");
        assert_eq!(fmt_g(999999999999.5, 12), "1e+12");
    }

    #[test]
    fn body_specs_parse() {
        let cube = r#"{"type":"polytope_h","normals":[[1,0,0],[0,1,0],[0,0,1]],"offsets":[1,1,1]}"#;
        let ParsedBody::Symmetric(SymmetricBody::PolytopeH(p)) = parse_body_str(cube).unwrap() else {
            panic!("expected polytope");
        };
        assert_eq!(p.dim(), 3);
        let cyl = r#"{"type":"cylinder","r":0.5,"k":1,"n":3}"#;
        assert!(matches!(
            parse_body_str(cyl).unwrap(),
            ParsedBody::Symmetric(SymmetricBody::ProductCylinder(_))
        ));
    }

    #[test]
    fn parse_errors_name_the_field() {
        let bad = r#"{"type":"polytope_h","normals":[[1,0],[0,1]],"offsets":[1,0]}"#;
        match parse_body_str(bad).unwrap_err() {
            Error::Parse { field, message } => {
                assert_eq!(field, "offsets");
                assert!(message.contains("origin not interior"));
            }
            e => panic!("unexpected {e}"),
        }
        match parse_body_str(r#"{"type":"polytope_h","normals":[[1,0]]}"#).unwrap_err() {
            Error::Parse { field, .. } => assert_eq!(field, "offsets"),
            e => panic!("unexpected {e}"),
        }
        match parse_body_str(r#"{"type":"cone"}"#).unwrap_err() {
            Error::Parse { field, .. } => assert_eq!(field, "type"),
            e => panic!("unexpected {e}"),
        }
    }
}
