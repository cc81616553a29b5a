//! Multi-mode hybrid systems: assembly into one disjoint union, and the
//! split of stationary points into flow equilibria and reset fixed points.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::cubical::{euler_stable, EulerError};
use crate::field::{FieldError, VectorField};
use crate::guard::{Carrier, GuardSet, CONTAINMENT_TOL};
use crate::index::{certify_isolated_zero, index_sum_lhs, FlowSet, IndexError, ZeroCertificate};
use crate::region::{MapFn, Region};
use crate::vecmath::{dist, sub};

/// Isolation radius used for declared zeros unless a mode overrides it.
pub const DEFAULT_ZERO_RADIUS: f64 = 0.1;
/// Carrier samples checked for every reset branch.
pub const RESET_CHECK_SAMPLES: usize = 200;
/// Carrier samples scanned for reset fixed points.
pub const RESET_SEARCH_SAMPLES: usize = 1000;
/// Acceptance threshold `|b(x) - x|` for reset fixed points.
pub const RESET_FIXED_TOL: f64 = 1e-9;
const TARGET_TOL: f64 = 1e-9;
const DEDUP_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HybridError {
    #[error("a hybrid system needs at least one mode")]
    NoModes,
    #[error("mode id `{0}` is defined twice")]
    DuplicateMode(String),
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("mode `{mode}`: {message}")]
    InvalidMode { mode: String, message: String },
    #[error("reset branch {branch} maps {point:?} to {image:?}, outside mode `{target}`")]
    ResetOutsideTarget {
        branch: usize,
        target: String,
        point: Vec<f64>,
        image: Vec<f64>,
    },
    #[error("mode `{mode}`: {source}")]
    Index { mode: String, source: IndexError },
    #[error("mode `{mode}`: {source}")]
    Euler { mode: String, source: EulerError },
    #[error("mode `{mode}`: {source}")]
    Field { mode: String, source: FieldError },
    #[error("start point {point:?} is not in the flow set of mode `{mode}`")]
    StartNotInFlowSet { mode: String, point: Vec<f64> },
    #[error("no reset branch leaves mode `{mode}` at {point:?}")]
    NoEnabledBranch { mode: String, point: Vec<f64> },
    #[error(
        "mode `{mode}`: trajectory left the region {distance:.3e} away from the guard at {point:?}"
    )]
    ExcessiveDrift {
        mode: String,
        point: Vec<f64>,
        distance: f64,
    },
}

/// One summand of the hybrid state space.
#[derive(Debug, Clone)]
pub struct ModeSpec {
    pub id: String,
    pub region: Region,
    pub guard: GuardSet,
    pub field: VectorField,
    pub declared_zeros: Vec<Vec<f64>>,
    pub zero_radius: f64,
}

impl ModeSpec {
    pub fn new(id: impl Into<String>, region: Region, guard: GuardSet, field: VectorField) -> Self {
        ModeSpec {
            id: id.into(),
            region,
            guard,
            field,
            declared_zeros: Vec::new(),
            zero_radius: DEFAULT_ZERO_RADIUS,
        }
    }

    pub fn with_zeros(mut self, zeros: Vec<Vec<f64>>) -> Self {
        self.declared_zeros = zeros;
        self
    }

    pub fn with_zero_radius(mut self, radius: f64) -> Self {
        self.zero_radius = radius;
        self
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn flow_set(&self) -> FlowSet<'_> {
        FlowSet {
            region: &self.region,
            guard: &self.guard,
        }
    }

    /// Certifies every declared zero.
    pub fn certified_zeros(&self) -> Result<Vec<ZeroCertificate>, HybridError> {
        self.declared_zeros
            .iter()
            .map(|z| {
                certify_isolated_zero(&self.field, z, self.zero_radius, Some(self.flow_set()))
                    .map_err(|source| HybridError::Index {
                        mode: self.id.clone(),
                        source,
                    })
            })
            .collect()
    }

    pub fn lhs(&self) -> Result<i64, HybridError> {
        index_sum_lhs(&self.certified_zeros()?).map_err(|source| HybridError::Index {
            mode: self.id.clone(),
            source,
        })
    }

    pub fn chi(&self, h: f64) -> Result<i64, HybridError> {
        euler_stable(&self.region, h).map_err(|source| HybridError::Euler {
            mode: self.id.clone(),
            source,
        })
    }
}

/// One branch of the multivalued reset, defined on the source guard.
#[derive(Clone)]
pub struct ResetBranch {
    pub source: String,
    pub target: String,
    pub map: MapFn,
}

impl fmt::Debug for ResetBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ResetBranch")
            .field("source", &self.source)
            .field("target", &self.target)
            .finish_non_exhaustive()
    }
}

impl ResetBranch {
    pub fn new(
        source: impl Into<String>,
        target: impl Into<String>,
        map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        ResetBranch {
            source: source.into(),
            target: target.into(),
            map: Arc::new(map),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.map)(x)
    }
}

#[derive(Debug, Clone)]
pub struct HybridSystemSpec {
    pub modes: Vec<ModeSpec>,
    pub resets: Vec<ResetBranch>,
}

/// A validated hybrid system.
#[derive(Debug, Clone)]
pub struct HybridSystem {
    modes: Vec<ModeSpec>,
    resets: Vec<ResetBranch>,
}

/// Validates mode dimensions, mode references and sampled reset targets.
pub fn assemble(spec: HybridSystemSpec) -> Result<HybridSystem, HybridError> {
    if spec.modes.is_empty() {
        return Err(HybridError::NoModes);
    }
    for (i, m) in spec.modes.iter().enumerate() {
        if spec.modes[..i].iter().any(|o| o.id == m.id) {
            return Err(HybridError::DuplicateMode(m.id.clone()));
        }
        let invalid = |message: String| HybridError::InvalidMode {
            mode: m.id.clone(),
            message,
        };
        if m.field.dim() != m.region.dim() {
            return Err(invalid(format!(
                "field is {}-dimensional, region is {}-dimensional",
                m.field.dim(),
                m.region.dim()
            )));
        }
        if m.guard.dim() != m.region.dim() {
            return Err(invalid("guard and region dimensions differ".into()));
        }
        for p in m.guard.samples(RESET_CHECK_SAMPLES) {
            if !m.region.excursion(&p).is_ok_and(|e| e <= CONTAINMENT_TOL) {
                return Err(invalid(format!(
                    "guard point {p:?} lies outside the region"
                )));
            }
        }
        if !(m.zero_radius > 0.0) {
            return Err(invalid(format!(
                "zero radius must be positive, got {}",
                m.zero_radius
            )));
        }
        if let Some(z) = m.declared_zeros.iter().find(|z| z.len() != m.dim()) {
            return Err(invalid(format!(
                "declared zero {z:?} has the wrong dimension"
            )));
        }
    }
    let system = HybridSystem {
        modes: spec.modes,
        resets: spec.resets,
    };
    for (k, b) in system.resets.iter().enumerate() {
        let source = system.require(&b.source)?;
        let target = system.require(&b.target)?;
        for p in source.guard.samples(RESET_CHECK_SAMPLES) {
            let image = b.apply(&p);
            let inside = image.len() == target.dim()
                && image.iter().all(|c| c.is_finite())
                && target
                    .region
                    .excursion(&image)
                    .is_ok_and(|e| e <= TARGET_TOL);
            if !inside {
                return Err(HybridError::ResetOutsideTarget {
                    branch: k,
                    target: target.id.clone(),
                    point: p,
                    image,
                });
            }
        }
    }
    Ok(system)
}

/// A certified zero tagged with its mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeZero {
    pub mode: String,
    pub certificate: ZeroCertificate,
}

/// A point of a mode's state space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModePoint {
    pub mode: String,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryPoints {
    pub flow_equilibria: Vec<ModePoint>,
    pub reset_fixed_points: Vec<ModePoint>,
}

impl HybridSystem {
    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn resets(&self) -> &[ResetBranch] {
        &self.resets
    }

    pub fn mode(&self, id: &str) -> Option<&ModeSpec> {
        self.modes.iter().find(|m| m.id == id)
    }

    pub(crate) fn require(&self, id: &str) -> Result<&ModeSpec, HybridError> {
        self.mode(id)
            .ok_or_else(|| HybridError::UnknownMode(id.to_string()))
    }

    /// Reset branches leaving `mode`, in declaration order.
    pub fn branches_from<'a>(
        &'a self,
        mode: &'a str,
    ) -> impl Iterator<Item = (usize, &'a ResetBranch)> + 'a {
        self.resets
            .iter()
            .enumerate()
            .filter(move |(_, b)| b.source == mode)
    }

    pub fn certified_zeros(&self) -> Result<Vec<ModeZero>, HybridError> {
        let mut out = Vec::new();
        for m in &self.modes {
            for certificate in m.certified_zeros()? {
                out.push(ModeZero {
                    mode: m.id.clone(),
                    certificate,
                });
            }
        }
        Ok(out)
    }

    /// Sum over modes of the index of `-F` at the certified zeros.
    pub fn lhs(&self) -> Result<i64, HybridError> {
        self.modes.iter().map(ModeSpec::lhs).sum()
    }

    /// Euler characteristic of the disjoint union.
    pub fn chi(&self, h: f64) -> Result<i64, HybridError> {
        self.modes.iter().map(|m| m.chi(h)).sum()
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn residual(branch: &ResetBranch, x: &[f64]) -> f64 {
    let bx = branch.apply(x);
    if bx.len() != x.len() {
        return f64::INFINITY;
    }
    let r = dist(&bx, x);
    if r.is_finite() {
        r
    } else {
        f64::INFINITY
    }
}

/// Candidate fixed points of a same-mode branch on `guard`.
fn branch_fixed_points(guard: &GuardSet, branch: &ResetBranch) -> Vec<Vec<f64>> {
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut keep = |p: Vec<f64>, r: f64| {
        if r <= RESET_FIXED_TOL && !found.iter().any(|q| dist(q, &p) < DEDUP_TOL) {
            found.push(p);
        }
    };
    let n = RESET_SEARCH_SAMPLES;
    match guard.carrier() {
        Carrier::PointSet(pts) => {
            for p in pts {
                let r = residual(branch, p);
                keep(p.clone(), r);
            }
        }
        _ if guard.curve_point(0.0).is_some() => {
            let closed = guard.is_closed_curve();
            let params: Vec<f64> = if closed {
                (0..n).map(|k| k as f64 / n as f64).collect()
            } else {
                (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
            };
            let at = |t: f64| guard.curve_point(t).expect("curve carrier");
            let res: Vec<f64> = params.iter().map(|&t| residual(branch, &at(t))).collect();
            for i in 0..n {
                let (prev, next) = if closed {
                    ((i + n - 1) % n, (i + 1) % n)
                } else {
                    (i.saturating_sub(1), (i + 1).min(n - 1))
                };
                if res[i] > res[prev] || res[i] > res[next] {
                    continue;
                }
                let step = 1.0 / if closed { n as f64 } else { (n - 1) as f64 };
                let (mut lo, mut hi) = (params[i] - step, params[i] + step);
                if !closed {
                    lo = lo.max(0.0);
                    hi = hi.min(1.0);
                }
                let (t, r) = golden_min(|t| residual(branch, &at(t)), lo, hi);
                if res[i] <= r {
                    keep(at(params[i]), res[i]);
                } else {
                    keep(at(t), r);
                }
            }
        }
        _ => {
            for p in guard.samples(n) {
                let mut x = p;
                for _ in 0..50 {
                    let d = sub(&branch.apply(&x), &x);
                    if d.iter().map(|v| v * v).sum::<f64>().sqrt() <= RESET_FIXED_TOL {
                        break;
                    }
                    // Fixed-point iteration projected back onto the guard.
                    x = guard.nearest_point(&branch.apply(&x));
                }
                let r = residual(branch, &x);
                keep(x, r);
            }
        }
    }
    found
}

/// Flow equilibria are the certified zeros; reset fixed points are points of
/// a source guard fixed by a branch returning to the same mode.
pub fn stationary_points(system: &HybridSystem) -> Result<StationaryPoints, HybridError> {
    let flow_equilibria = system
        .certified_zeros()?
        .into_iter()
        .map(|z| ModePoint {
            mode: z.mode,
            point: z.certificate.z,
        })
        .collect();
    let mut reset_fixed_points: Vec<ModePoint> = Vec::new();
    for b in system.resets.iter().filter(|b| b.source == b.target) {
        let mode = system.require(&b.source)?;
        for point in branch_fixed_points(&mode.guard, b) {
            let duplicate = reset_fixed_points
                .iter()
                .any(|q| q.mode == mode.id && dist(&q.point, &point) < DEDUP_TOL);
            if !duplicate {
                reset_fixed_points.push(ModePoint {
                    mode: mode.id.clone(),
                    point,
                });
            }
        }
    }
    Ok(StationaryPoints {
        flow_equilibria,
        reset_fixed_points,
    })
}
