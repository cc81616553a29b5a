//! Scenario documents: hybrid systems written in TOML with expression fields.
//!
//! ```toml
//! name = "disk-source"
//!
//! [[modes]]
//! id = "disk"
//! field = "[x, y]"
//! zeros = [[0.0, 0.0]]
//! region = { kind = "disk", center = [0.0, 0.0], radius = 1.0 }
//! guard = { kind = "circle", center = [0.0, 0.0], radius = 1.0 }
//!
//! [expected]
//! lhs = 1
//! xi = 0
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse_field_expr, ExprError, ScalarExpr, VectorExpr};
use crate::guard::{Carrier, GuardSet, SubRegionCarrier};
use crate::guard_index::{
    auto_contour, Contour, ContourLoop, GuardIndexError, InflowParams, LoopPath,
};
use crate::hybrid::{
    assemble, HybridError, HybridSystem, HybridSystemSpec, ModeSpec, ResetBranch,
    DEFAULT_ZERO_RADIUS,
};
use crate::region::{Aabb, Region, RegionError, Shape};

pub const DEFAULT_RESOLUTION: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("{0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Expr { path: String, source: ExprError },
    #[error("{path}: {source}")]
    Region { path: String, source: RegionError },
    #[error("{path}: {source}")]
    Contour {
        path: String,
        source: GuardIndexError,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error(transparent)]
    Hybrid(#[from] HybridError),
}

fn default_resolution() -> f64 {
    DEFAULT_RESOLUTION
}

fn default_zero_radius() -> f64 {
    DEFAULT_ZERO_RADIUS
}

fn is_default_zero_radius(r: &f64) -> bool {
    *r == DEFAULT_ZERO_RADIUS
}

fn is_zero(s: &u64) -> bool {
    *s == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapeDoc {
    Disk {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    /// `{ g <= 0 }` within the box `[lo, hi]`.
    Sublevel {
        g: String,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Union {
        parts: Vec<ShapeDoc>,
    },
    Intersection {
        parts: Vec<ShapeDoc>,
    },
}

impl ShapeDoc {
    fn dim(&self) -> usize {
        match self {
            ShapeDoc::Disk { center, .. } | ShapeDoc::Annulus { center, .. } => center.len(),
            ShapeDoc::Box { lo, .. } | ShapeDoc::Sublevel { lo, .. } => lo.len(),
            ShapeDoc::Union { parts } | ShapeDoc::Intersection { parts } => {
                parts.first().map_or(0, ShapeDoc::dim)
            }
        }
    }

    fn build(&self, path: &str) -> Result<Shape, ScenarioError> {
        Ok(match self {
            ShapeDoc::Disk { center, radius } => Shape::Disk {
                center: center.clone(),
                radius: *radius,
            },
            ShapeDoc::Box { lo, hi } => Shape::Box {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            ShapeDoc::Annulus {
                center,
                inner,
                outer,
            } => Shape::Annulus {
                center: center.clone(),
                inner: *inner,
                outer: *outer,
            },
            ShapeDoc::Sublevel { g, lo, hi } => {
                let g = ScalarExpr::parse(g, lo.len()).map_err(|source| ScenarioError::Expr {
                    path: format!("{path}.g"),
                    source,
                })?;
                Shape::Sublevel {
                    g: g.into_fn(),
                    bounds: Aabb::new(lo.clone(), hi.clone()),
                }
            }
            ShapeDoc::Union { parts } => Shape::Union(build_parts(parts, path)?),
            ShapeDoc::Intersection { parts } => Shape::Intersection(build_parts(parts, path)?),
        })
    }
}

fn build_parts(parts: &[ShapeDoc], path: &str) -> Result<Vec<Shape>, ScenarioError> {
    parts
        .iter()
        .enumerate()
        .map(|(i, p)| p.build(&format!("{path}.parts[{i}]")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionDoc {
    #[serde(flatten)]
    pub shape: ShapeDoc,
    /// Vector expression retracting the collar onto the region; required for
    /// sublevel and composite shapes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retraction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collar: Option<f64>,
}

impl RegionDoc {
    pub fn build(&self, path: &str) -> Result<Region, ScenarioError> {
        let dim = self.shape.dim();
        let shape = self.shape.build(path)?;
        let region_err = |source| ScenarioError::Region {
            path: path.to_string(),
            source,
        };
        let mut region = match &self.retraction {
            Some(r) => {
                let map = VectorExpr::parse(r, dim, dim).map_err(|source| ScenarioError::Expr {
                    path: format!("{path}.retraction"),
                    source,
                })?;
                Region::with_retraction(shape, map.into_map()).map_err(region_err)?
            }
            None => Region::new(shape).map_err(region_err)?,
        };
        if let Some(c) = self.collar {
            region = region.with_collar_width(c).map_err(region_err)?;
        }
        Ok(region)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GuardDoc {
    Circle {
        center: Vec<f64>,
        radius: f64,
    },
    Segment {
        a: Vec<f64>,
        b: Vec<f64>,
    },
    Points {
        points: Vec<Vec<f64>>,
    },
    /// The frontier of a primitive shape.
    Boundary {
        shape: ShapeDoc,
    },
    /// A full-dimensional subregion, rasterized at `cell_size`.
    Subregion {
        region: Box<RegionDoc>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cell_size: Option<f64>,
    },
}

impl GuardDoc {
    fn build(&self, parent: &Region, h: f64, path: &str) -> Result<GuardSet, ScenarioError> {
        let carrier = match self {
            GuardDoc::Circle { center, radius } => Carrier::Circle {
                center: center.clone(),
                radius: *radius,
            },
            GuardDoc::Segment { a, b } => Carrier::Segment {
                a: a.clone(),
                b: b.clone(),
            },
            GuardDoc::Points { points } => Carrier::PointSet(points.clone()),
            GuardDoc::Boundary { shape } => {
                Carrier::BoundaryOf(shape.build(&format!("{path}.shape"))?)
            }
            GuardDoc::Subregion { region, cell_size } => {
                let r = region.build(&format!("{path}.region"))?;
                Carrier::SubRegion(SubRegionCarrier::new(r, cell_size.unwrap_or(h)).map_err(
                    |source| ScenarioError::Region {
                        path: path.to_string(),
                        source,
                    },
                )?)
            }
        };
        GuardSet::new(carrier, parent).map_err(|source| ScenarioError::Region {
            path: path.to_string(),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopDoc {
    pub orientation: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeDoc {
    pub id: String,
    pub field: String,
    pub region: RegionDoc,
    pub guard: GuardDoc,
    #[serde(default)]
    pub zeros: Vec<Vec<f64>>,
    #[serde(
        default = "default_zero_radius",
        skip_serializing_if = "is_default_zero_radius"
    )]
    pub zero_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contour: Option<Vec<LoopDoc>>,
    /// Analytic Euler characteristic of the region.
    #[serde(default, rename = "chi_S", skip_serializing_if = "Option::is_none")]
    pub chi_s: Option<i64>,
    /// Analytic Euler characteristic of the guard.
    #[serde(default, rename = "chi_G", skip_serializing_if = "Option::is_none")]
    pub chi_g: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResetDoc {
    pub source: String,
    pub target: String,
    pub map: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lhs: Option<i64>,
    #[serde(default, rename = "chi_S", skip_serializing_if = "Option::is_none")]
    pub chi_s: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inflowing: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InflowDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

/// A scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inflow: Option<InflowDoc>,
    pub modes: Vec<ModeDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resets: Vec<ResetDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Expected>,
}

/// Per-mode data that is not part of the hybrid system itself.
#[derive(Debug, Clone)]
pub struct ModeExtras {
    pub contour: Result<Contour, GuardIndexError>,
    pub chi_s: Option<i64>,
    pub chi_g: Option<i64>,
}

/// A scenario with its hybrid system assembled.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub name: String,
    pub system: HybridSystem,
    pub extras: Vec<ModeExtras>,
    pub resolution: f64,
    pub tau: Option<f64>,
    pub seed: u64,
    pub inflow: InflowParams,
    pub expected: Expected,
}

fn build_contour(loops: &[LoopDoc], path: &str) -> Result<Contour, GuardIndexError> {
    let mut out = Vec::with_capacity(loops.len());
    for (i, l) in loops.iter().enumerate() {
        let path = match (&l.vertices, &l.bracket) {
            (Some(v), None) => LoopPath::Planar(v.clone()),
            (None, Some([left, right])) => LoopPath::Bracket {
                left: *left,
                right: *right,
            },
            _ => {
                return Err(GuardIndexError::InvalidContour(format!(
                    "{path}[{i}]: give exactly one of `vertices` or `bracket`"
                )))
            }
        };
        out.push(ContourLoop {
            path,
            orientation: l.orientation,
        });
    }
    Contour::new(out)
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario documents always serialize")
    }

    /// Parses all expressions, builds regions and guards, and assembles the system.
    pub fn build(&self) -> Result<BuiltScenario, ScenarioError> {
        if !(self.resolution > 0.0) {
            return Err(ScenarioError::Invalid {
                path: "resolution".into(),
                message: format!("must be positive, got {}", self.resolution),
            });
        }
        if let Some(t) = self.tau {
            if !(t > 0.0) {
                return Err(ScenarioError::Invalid {
                    path: "tau".into(),
                    message: format!("must be positive, got {t}"),
                });
            }
        }
        let mut modes = Vec::with_capacity(self.modes.len());
        let mut extras = Vec::with_capacity(self.modes.len());
        for (i, m) in self.modes.iter().enumerate() {
            let path = format!("modes[{i}]");
            let region = m.region.build(&format!("{path}.region"))?;
            let guard = m
                .guard
                .build(&region, self.resolution, &format!("{path}.guard"))?;
            let field =
                parse_field_expr(&m.field, region.dim()).map_err(|source| ScenarioError::Expr {
                    path: format!("{path}.field"),
                    source,
                })?;
            let contour = match &m.contour {
                Some(loops) => Some(build_contour(loops, &format!("{path}.contour")).map_err(
                    |source| ScenarioError::Contour {
                        path: format!("{path}.contour"),
                        source,
                    },
                )?),
                None => None,
            };
            let contour = match contour {
                Some(c) => Ok(c),
                None => auto_contour(&guard),
            };
            extras.push(ModeExtras {
                contour,
                chi_s: m.chi_s,
                chi_g: m.chi_g,
            });
            modes.push(
                ModeSpec::new(m.id.clone(), region, guard, field)
                    .with_zeros(m.zeros.clone())
                    .with_zero_radius(m.zero_radius),
            );
        }
        let mut resets = Vec::with_capacity(self.resets.len());
        for (i, r) in self.resets.iter().enumerate() {
            let dim_of = |id: &str| {
                modes
                    .iter()
                    .find(|m: &&ModeSpec| m.id == id)
                    .map(ModeSpec::dim)
                    .ok_or_else(|| ScenarioError::Invalid {
                        path: format!("resets[{i}]"),
                        message: format!("unknown mode `{id}`"),
                    })
            };
            let map = VectorExpr::parse(&r.map, dim_of(&r.source)?, dim_of(&r.target)?).map_err(
                |source| ScenarioError::Expr {
                    path: format!("resets[{i}].map"),
                    source,
                },
            )?;
            resets.push(ResetBranch {
                source: r.source.clone(),
                target: r.target.clone(),
                map: map.into_map(),
            });
        }
        let system = assemble(HybridSystemSpec { modes, resets })?;
        let defaults = InflowParams::default();
        let doc = self.inflow.clone().unwrap_or_default();
        Ok(BuiltScenario {
            name: self.name.clone(),
            system,
            extras,
            resolution: self.resolution,
            tau: self.tau,
            seed: self.seed,
            inflow: InflowParams {
                epsilon: doc.epsilon.unwrap_or(defaults.epsilon),
                samples: doc.samples.unwrap_or(defaults.samples),
                horizon: doc.horizon.unwrap_or(defaults.horizon),
                step: doc.step.unwrap_or(defaults.step),
                seed: self.seed,
            },
            expected: self.expected.clone().unwrap_or_default(),
        })
    }
}

/// Parses and fully validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let s = Scenario::from_toml(text)?;
    s.build()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DISK: &str = r#"
name = "disk-source"

[[modes]]
id = "disk"
field = "[x, y]"
zeros = [[0.0, 0.0]]
region = { kind = "disk", center = [0.0, 0.0], radius = 1.0 }
guard = { kind = "circle", center = [0.0, 0.0], radius = 1.0 }

[expected]
lhs = 1
xi = 0
inflowing = true
"#;

    #[test]
    fn defaults_and_round_trip() {
        let s = load_scenario(DISK).unwrap();
        assert_eq!(s.resolution, DEFAULT_RESOLUTION);
        assert_eq!(s.seed, 0);
        assert_eq!(s.modes[0].zero_radius, DEFAULT_ZERO_RADIUS);
        let again = load_scenario(&s.to_toml()).unwrap();
        assert_eq!(s, again);
        let built = s.build().unwrap();
        assert_eq!(built.system.modes().len(), 1);
        assert!(built.extras[0].contour.is_ok());
        assert_eq!(built.inflow, InflowParams::default());
    }

    #[test]
    fn unknown_region_kind_is_named() {
        let bad = DISK.replace("kind = \"disk\"", "kind = \"hexagon\"");
        let err = load_scenario(&bad).unwrap_err().to_string();
        assert!(err.contains("hexagon"), "{err}");
    }

    #[test]
    fn bad_expressions_carry_paths() {
        let bad = DISK.replace("[x, y]", "[x, w]");
        match load_scenario(&bad).unwrap_err() {
            ScenarioError::Expr { path, source } => {
                assert_eq!(path, "modes[0].field");
                assert!(matches!(source, ExprError::UnknownIdentifier { .. }));
            }
            e => panic!("{e:?}"),
        }
        let bad = DISK.replace("[x, y]", "[x]");
        assert!(matches!(
            load_scenario(&bad),
            Err(ScenarioError::Expr {
                source: ExprError::ArityMismatch { .. },
                ..
            })
        ));
    }

    #[test]
    fn structural_errors() {
        let missing = DISK.replace("field = \"[x, y]\"\n", "");
        assert!(matches!(
            load_scenario(&missing),
            Err(ScenarioError::Parse(_))
        ));
        let typo = DISK.replace("zeros =", "zeroes =");
        assert!(matches!(load_scenario(&typo), Err(ScenarioError::Parse(_))));
        let not_int = DISK.replace("lhs = 1", "lhs = 1.5");
        assert!(matches!(
            load_scenario(&not_int),
            Err(ScenarioError::Parse(_))
        ));
        let outside = DISK.replace(
            "radius = 1.0 }\n\n[expected]",
            "radius = 3.0 }\n\n[expected]",
        );
        assert!(matches!(
            load_scenario(&outside),
            Err(ScenarioError::Region { .. })
        ));
        let reset =
            format!("{DISK}\n[[resets]]\nsource = \"disk\"\ntarget = \"moon\"\nmap = \"[x, y]\"\n");
        let reset = reset.replace("[expected]\nlhs = 1\nxi = 0\ninflowing = true\n", "");
        let reset = format!("{reset}\n[expected]\nlhs = 1\n");
        assert!(matches!(
            load_scenario(&reset),
            Err(ScenarioError::Invalid { .. })
        ));
    }

    #[test]
    fn sublevel_needs_retraction() {
        let text = r#"
name = "blob"
[[modes]]
id = "m"
field = "[1, 0]"
region = { kind = "sublevel", g = "x^2 + y^2 - 1", lo = [-1.0, -1.0], hi = [1.0, 1.0] }
guard = { kind = "points", points = [[0.0, 0.0]] }
"#;
        assert!(matches!(
            load_scenario(text),
            Err(ScenarioError::Region {
                source: RegionError::NoRetractionAvailable,
                ..
            })
        ));
        let with = text.replace(
            "hi = [1.0, 1.0] }",
            "hi = [1.0, 1.0], retraction = \"[x / sqrt(x^2 + y^2), y / sqrt(x^2 + y^2)]\" }",
        );
        load_scenario(&with).unwrap();
    }

    #[test]
    fn user_contour() {
        let text = DISK.replace(
            "guard = { kind = \"circle\", center = [0.0, 0.0], radius = 1.0 }",
            "guard = { kind = \"circle\", center = [0.0, 0.0], radius = 1.0 }\ncontour = [{ orientation = 1, vertices = [[1.2, 1.2], [-1.2, 1.2], [-1.2, -1.2], [1.2, -1.2], [1.2, 1.2]] }, { orientation = -1, vertices = [[0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5], [0.5, 0.5]] }]",
        );
        let built = load_scenario(&text).unwrap().build().unwrap();
        assert_eq!(built.extras[0].contour.as_ref().unwrap().loops().len(), 2);
        let both = text.replace(
            "orientation = -1, vertices",
            "orientation = -1, bracket = [0.0, 1.0], vertices",
        );
        assert!(matches!(
            load_scenario(&both),
            Err(ScenarioError::Contour { .. })
        ));
    }
}
