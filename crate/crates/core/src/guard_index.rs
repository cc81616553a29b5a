//! The guard index: the fixed-point index of the rescaled time-`tau` map on a
//! neighborhood of the guard, plus its inflowing shortcut through `chi(G)`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cubical::{euler_stable, thicken, EulerError};
use crate::field::random_point;
use crate::guard::{Carrier, GuardSet};
use crate::index::ZeroCertificate;
use crate::region::Shape;
use crate::semiflow::{FlowError, RescaledFlow, RescaledFlowConfig};
use crate::vecmath::sub;
use crate::winding::{adaptive_winding, PolylineCurve, WindingError, MAX_WINDING_SAMPLES};

/// Smallest displacement norm tolerated on a contour.
pub const EPSILON_MIN: f64 = 1e-7;
/// Contour offset from the guard as a fraction of the guard's scale.
pub const CONTOUR_OFFSET: f64 = 0.15;
/// Vertices of auto-generated circles.
pub const CIRCLE_VERTICES: usize = 256;
/// Guard samples used to check that a contour surrounds the guard.
const ENCLOSURE_SAMPLES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GuardIndexError {
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("no automatic contour for this guard; supply one")]
    NoAutoContour,
    #[error("displacement {norm:.3e} vanishes near {point:?}")]
    DisplacementVanishes { point: Vec<f64>, norm: f64 },
    #[error("winding unresolved after {0} samples")]
    WindingUnresolved(usize),
    #[error("index changed from {at_tau} to {at_half_tau} when halving tau = {tau}")]
    TauUnstable {
        tau: f64,
        at_tau: i64,
        at_half_tau: i64,
    },
    #[error("direct index unsupported in dimension {0}")]
    UnsupportedDimension(usize),
    #[error("contour neighborhood contains the zero at {0:?}")]
    ZeroEnclosed(Vec<f64>),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Euler(#[from] EulerError),
}

impl From<WindingError<FlowError>> for GuardIndexError {
    fn from(e: WindingError<FlowError>) -> Self {
        match e {
            WindingError::Vanishes { point, norm } => {
                GuardIndexError::DisplacementVanishes { point, norm }
            }
            WindingError::Unresolved { samples } => GuardIndexError::WindingUnresolved(samples),
            WindingError::Inner(f) => GuardIndexError::Flow(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopPath {
    /// Closed planar polyline, first vertex repeated last.
    Planar(Vec<[f64; 2]>),
    /// The 1-D analogue of a loop: the ordered pair `left < right`.
    Bracket { left: f64, right: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourLoop {
    pub path: LoopPath,
    pub orientation: i32,
}

/// Oriented boundary of a neighborhood: `+1` loops enclose `-1` loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    loops: Vec<ContourLoop>,
    #[serde(default)]
    pub min_displacement_seen: Option<f64>,
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    };
    let on_segment = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        c[0] >= a[0].min(b[0])
            && c[0] <= a[0].max(b[0])
            && c[1] >= a[1].min(b[1])
            && c[1] <= a[1].max(b[1])
    };
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Winding number of a closed polygon around `p`.
pub fn polygon_winding(poly: &[[f64; 2]], p: [f64; 2]) -> i64 {
    let mut wn = 0;
    for w in poly.windows(2) {
        let (a, b) = (w[0], w[1]);
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
        if a[1] <= p[1] {
            if b[1] > p[1] && cross > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p[1] && cross < 0.0 {
            wn -= 1;
        }
    }
    wn
}

fn validate_loop(l: &ContourLoop) -> Result<(), GuardIndexError> {
    if l.orientation != 1 && l.orientation != -1 {
        return Err(GuardIndexError::InvalidContour(format!(
            "orientation must be +1 or -1, got {}",
            l.orientation
        )));
    }
    match &l.path {
        LoopPath::Bracket { left, right } => {
            if !(left < right) {
                return Err(GuardIndexError::InvalidContour(format!(
                    "bracket needs left < right, got [{left}, {right}]"
                )));
            }
        }
        LoopPath::Planar(v) => {
            if v.len() < 4 {
                return Err(GuardIndexError::InvalidContour(
                    "a planar loop needs at least three distinct vertices".into(),
                ));
            }
            if v.first() != v.last() {
                return Err(GuardIndexError::InvalidContour(
                    "planar loop is not closed (first vertex must repeat last)".into(),
                ));
            }
            if v.iter().flatten().any(|c| !c.is_finite()) {
                return Err(GuardIndexError::InvalidContour("non-finite vertex".into()));
            }
            let n = v.len() - 1;
            for i in 0..n {
                for j in i + 2..n {
                    if i == 0 && j == n - 1 {
                        continue;
                    }
                    if segments_cross(v[i], v[i + 1], v[j], v[j + 1]) {
                        return Err(GuardIndexError::InvalidContour(format!(
                            "loop self-intersects between edges {i} and {j}"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

impl Contour {
    pub fn new(loops: Vec<ContourLoop>) -> Result<Self, GuardIndexError> {
        if loops.is_empty() {
            return Err(GuardIndexError::InvalidContour("no loops".into()));
        }
        let planar = matches!(loops[0].path, LoopPath::Planar(_));
        for l in &loops {
            validate_loop(l)?;
            if matches!(l.path, LoopPath::Planar(_)) != planar {
                return Err(GuardIndexError::InvalidContour(
                    "planar loops and brackets cannot be mixed".into(),
                ));
            }
        }
        Ok(Contour {
            loops,
            min_displacement_seen: None,
        })
    }

    pub fn loops(&self) -> &[ContourLoop] {
        &self.loops
    }

    pub fn dim(&self) -> usize {
        match self.loops[0].path {
            LoopPath::Planar(_) => 2,
            LoopPath::Bracket { .. } => 1,
        }
    }

    /// Signed number of times the contour surrounds `p`: 1 inside the
    /// neighborhood it bounds, 0 outside.
    pub fn enclosure(&self, p: &[f64]) -> i64 {
        self.loops
            .iter()
            .map(|l| {
                let w = match &l.path {
                    LoopPath::Planar(v) => polygon_winding(v, [p[0], p[1]]),
                    LoopPath::Bracket { left, right } => (*left < p[0] && p[0] < *right) as i64,
                };
                l.orientation as i64 * w
            })
            .sum()
    }

    fn vertices(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.loops.iter().flat_map(|l| match &l.path {
            LoopPath::Planar(v) => v.iter().map(|p| p.to_vec()).collect::<Vec<_>>(),
            LoopPath::Bracket { left, right } => vec![vec![*left], vec![*right]],
        })
    }
}

/// Counter-clockwise closed circle with `n` vertices.
pub fn circle_loop(center: [f64; 2], radius: f64, n: usize) -> Vec<[f64; 2]> {
    let mut v: Vec<[f64; 2]> = (0..n)
        .map(|k| {
            let a = TAU * k as f64 / n as f64;
            [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
        })
        .collect();
    v.push(v[0]);
    v
}

/// Counter-clockwise closed stadium at distance `offset` from segment `ab`.
pub fn stadium_loop(a: [f64; 2], b: [f64; 2], offset: f64, per_cap: usize) -> Vec<[f64; 2]> {
    let phi = (b[1] - a[1]).atan2(b[0] - a[0]);
    let mut v = Vec::with_capacity(2 * per_cap + 1);
    for (c, start) in [(b, phi - PI / 2.0), (a, phi + PI / 2.0)] {
        for k in 0..per_cap {
            let t = start + PI * k as f64 / (per_cap - 1) as f64;
            v.push([c[0] + offset * t.cos(), c[1] + offset * t.sin()]);
        }
    }
    v.push(v[0]);
    v
}

fn pt2(p: &[f64]) -> [f64; 2] {
    [p[0], p[1]]
}

/// Contour generated from the guard geometry at offset `0.15 * scale`.
pub fn auto_contour(guard: &GuardSet) -> Result<Contour, GuardIndexError> {
    let off = CONTOUR_OFFSET * guard.scale();
    let loops = match (guard.dim(), guard.carrier()) {
        (2, Carrier::Circle { center, radius })
        | (2, Carrier::BoundaryOf(Shape::Disk { center, radius })) => {
            let c = pt2(center);
            let mut loops = vec![ContourLoop {
                path: LoopPath::Planar(circle_loop(c, radius + off, CIRCLE_VERTICES)),
                orientation: 1,
            }];
            if *radius > off {
                loops.push(ContourLoop {
                    path: LoopPath::Planar(circle_loop(c, radius - off, CIRCLE_VERTICES)),
                    orientation: -1,
                });
            }
            loops
        }
        (2, Carrier::Segment { a, b }) => vec![ContourLoop {
            path: LoopPath::Planar(stadium_loop(pt2(a), pt2(b), off, CIRCLE_VERTICES / 2)),
            orientation: 1,
        }],
        (2, Carrier::PointSet(pts)) => pts
            .iter()
            .map(|p| ContourLoop {
                path: LoopPath::Planar(circle_loop(pt2(p), off, CIRCLE_VERTICES)),
                orientation: 1,
            })
            .collect(),
        (1, Carrier::PointSet(pts)) => pts
            .iter()
            .map(|p| ContourLoop {
                path: LoopPath::Bracket {
                    left: p[0] - off,
                    right: p[0] + off,
                },
                orientation: 1,
            })
            .collect(),
        _ => return Err(GuardIndexError::NoAutoContour),
    };
    Contour::new(loops)
}

/// Winding number of the displacement `x - f(x)` along a closed planar loop.
pub fn displacement_winding<M, E>(
    mut map: M,
    vertices: &[[f64; 2]],
) -> Result<(i64, f64), WindingError<E>>
where
    M: FnMut(&[f64]) -> Result<Vec<f64>, E>,
{
    let curve = PolylineCurve::new(vertices);
    let w = adaptive_winding(
        |t| curve.point(t),
        &curve.vertex_params(),
        |x: &[f64]| map(x).map(|fx| sub(x, &fx)),
        EPSILON_MIN,
        MAX_WINDING_SAMPLES,
    )?;
    Ok((w.winding, w.min_norm))
}

/// The 1-D analogue: `(sgn d(right) - sgn d(left)) / 2` for `d(x) = x - f(x)`.
pub fn displacement_bracket<M, E>(
    mut map: M,
    left: f64,
    right: f64,
) -> Result<(i64, f64), WindingError<E>>
where
    M: FnMut(&[f64]) -> Result<Vec<f64>, E>,
{
    let mut sign_at = |x: f64| -> Result<(i64, f64), WindingError<E>> {
        let d = x - map(&[x]).map_err(WindingError::Inner)?[0];
        if !(d.abs() >= EPSILON_MIN) {
            return Err(WindingError::Vanishes {
                point: vec![x],
                norm: d.abs(),
            });
        }
        Ok((if d > 0.0 { 1 } else { -1 }, d.abs()))
    };
    let (l, nl) = sign_at(left)?;
    let (r, nr) = sign_at(right)?;
    Ok(((r - l) / 2, nl.min(nr)))
}

fn loop_index(
    flow: &RescaledFlow<'_>,
    config: &RescaledFlowConfig,
    l: &ContourLoop,
) -> Result<(i64, f64), GuardIndexError> {
    let map = |x: &[f64]| flow.flow_map(config, x);
    let (w, m) = match &l.path {
        LoopPath::Planar(v) => displacement_winding(map, v)?,
        LoopPath::Bracket { left, right } => displacement_bracket(map, *left, *right)?,
    };
    Ok((l.orientation as i64 * w, m))
}

/// Index of the rescaled time-`tau` map on the neighborhood bounded by
/// `contour`, at a single `tau`.
pub fn contour_index(
    flow: &RescaledFlow<'_>,
    config: &RescaledFlowConfig,
    contour: &Contour,
) -> Result<(i64, f64), GuardIndexError> {
    config.validate()?;
    let parts: Vec<Result<(i64, f64), GuardIndexError>> = contour
        .loops
        .par_iter()
        .map(|l| loop_index(flow, config, l))
        .collect();
    let mut total = 0;
    let mut min_disp = f64::INFINITY;
    for p in parts {
        let (w, m) = p?;
        total += w;
        min_disp = min_disp.min(m);
    }
    Ok((total, min_disp))
}

fn check_contour(
    flow: &RescaledFlow<'_>,
    contour: &Contour,
    zeros: &[ZeroCertificate],
) -> Result<(), GuardIndexError> {
    let dim = flow.region.dim();
    if !(1..=2).contains(&dim) {
        return Err(GuardIndexError::UnsupportedDimension(dim));
    }
    if contour.dim() != dim {
        return Err(GuardIndexError::InvalidContour(format!(
            "contour is {}-dimensional, region is {dim}-dimensional",
            contour.dim()
        )));
    }
    for v in contour.vertices() {
        let e = flow.region.excursion(&v).map_err(FlowError::from)?;
        if e > flow.region.collar_width() {
            return Err(GuardIndexError::InvalidContour(format!(
                "vertex {v:?} lies {e:.3} outside the region, beyond the collar"
            )));
        }
    }
    for p in flow.guard.samples(ENCLOSURE_SAMPLES) {
        if contour.enclosure(&p) != 1 {
            return Err(GuardIndexError::InvalidContour(format!(
                "guard point {p:?} is not enclosed by the contour"
            )));
        }
    }
    for z in zeros {
        if z.z.len() == dim && contour.enclosure(&z.z) != 0 {
            return Err(GuardIndexError::ZeroEnclosed(z.z.clone()));
        }
    }
    Ok(())
}

/// Result of the direct route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectIndex {
    pub index: i64,
    pub min_displacement: f64,
}

/// Guard index from the displacement degree on `contour`, confirmed at
/// `tau / 2`. `zeros` are the certified flow-set zeros, none of which may lie
/// in the contour's neighborhood.
pub fn guard_index_direct(
    flow: &RescaledFlow<'_>,
    contour: &mut Contour,
    config: &RescaledFlowConfig,
    zeros: &[ZeroCertificate],
) -> Result<DirectIndex, GuardIndexError> {
    check_contour(flow, contour, zeros)?;
    let (at_tau, m1) = contour_index(flow, config, contour)?;
    let (at_half_tau, m2) = contour_index(flow, &config.halved(), contour)?;
    let min_displacement = m1.min(m2);
    contour.min_displacement_seen = Some(min_displacement);
    if at_tau != at_half_tau {
        return Err(GuardIndexError::TauUnstable {
            tau: config.tau,
            at_tau,
            at_half_tau,
        });
    }
    Ok(DirectIndex {
        index: at_tau,
        min_displacement,
    })
}

/// Displacement degree of the rescaled time-`tau` map on the sphere of
/// radius `r` around a flow-set zero `z`.
pub fn interior_fixed_point_index(
    flow: &RescaledFlow<'_>,
    config: &RescaledFlowConfig,
    z: &[f64],
    r: f64,
) -> Result<i64, GuardIndexError> {
    config.validate()?;
    let map = |x: &[f64]| flow.flow_map(config, x);
    let (w, _) = match z.len() {
        1 => displacement_bracket(map, z[0] - r, z[0] + r)?,
        2 => displacement_winding(map, &circle_loop(pt2(z), r, CIRCLE_VERTICES))?,
        n => return Err(GuardIndexError::UnsupportedDimension(n)),
    };
    Ok(w)
}

/// Parameters of the sampled asymptotic-stability test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InflowParams {
    /// Band `epsilon/2 <= d_G <= epsilon` where trajectories start.
    pub epsilon: f64,
    pub samples: usize,
    pub horizon: f64,
    pub step: f64,
    pub seed: u64,
}

impl Default for InflowParams {
    fn default() -> Self {
        InflowParams {
            epsilon: 0.1,
            samples: 200,
            horizon: 60.0,
            step: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status")]
pub enum InflowStatus {
    Inflowing {
        samples: usize,
        max_distance: f64,
        max_final_distance: f64,
    },
    CounterexampleFound {
        trajectory: Vec<Vec<f64>>,
    },
    Unknown {
        samples: usize,
        max_final_distance: f64,
    },
}

impl InflowStatus {
    pub fn label(&self) -> &'static str {
        match self {
            InflowStatus::Inflowing { .. } => "Inflowing",
            InflowStatus::CounterexampleFound { .. } => "CounterexampleFound",
            InflowStatus::Unknown { .. } => "Unknown",
        }
    }

    pub fn is_inflowing(&self) -> bool {
        matches!(self, InflowStatus::Inflowing { .. })
    }
}

enum Outcome {
    Escaped(Vec<Vec<f64>>),
    Stayed { max: f64, last: f64 },
}

fn band_points(flow: &RescaledFlow<'_>, p: &InflowParams) -> Vec<Vec<f64>> {
    let bbox = flow
        .guard
        .bounding_box()
        .expanded(p.epsilon)
        .intersection(&flow.region.bounding_box());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(p.seed);
    let mut out = Vec::with_capacity(p.samples);
    if bbox.is_empty() {
        return out;
    }
    let max_attempts = p.samples.saturating_mul(10_000);
    for _ in 0..max_attempts {
        if out.len() == p.samples {
            break;
        }
        let x = random_point(&mut rng, &bbox);
        if !flow.region.includes(&x) {
            continue;
        }
        let d = flow.guard.distance(&x);
        if d >= p.epsilon / 2.0 && d <= p.epsilon {
            out.push(x);
        }
        // Keep the stream position independent of acceptance.
        let _: u32 = rng.random();
    }
    out
}

fn follow(
    flow: &RescaledFlow<'_>,
    start: &[f64],
    p: &InflowParams,
    max_drift: f64,
) -> Result<Outcome, FlowError> {
    let n = (p.horizon / p.step).ceil().max(1.0) as usize;
    let h = p.horizon / n as f64;
    let mut y = start.to_vec();
    let mut path = vec![y.clone()];
    let mut max: f64 = flow.guard.distance(&y);
    for _ in 0..n {
        y = flow.flow_for(&y, h, h, max_drift)?;
        path.push(y.clone());
        let d = flow.guard.distance(&y);
        max = max.max(d);
        if d > 2.0 * p.epsilon {
            return Ok(Outcome::Escaped(path));
        }
    }
    Ok(Outcome::Stayed {
        max,
        last: flow.guard.distance(&y),
    })
}

/// Samples the band around the guard and integrates the rescaled flow.
pub fn inflowing_certificate(
    flow: &RescaledFlow<'_>,
    params: &InflowParams,
) -> Result<InflowStatus, GuardIndexError> {
    let starts = band_points(flow, params);
    if starts.is_empty() {
        return Ok(InflowStatus::Unknown {
            samples: 0,
            max_final_distance: f64::NAN,
        });
    }
    let max_drift = flow.region.collar_width() / 2.0;
    let outcomes: Vec<Result<Outcome, FlowError>> = starts
        .par_iter()
        .map(|s| follow(flow, s, params, max_drift))
        .collect();
    let mut max_distance: f64 = 0.0;
    let mut max_final: f64 = 0.0;
    for o in outcomes {
        match o? {
            Outcome::Escaped(trajectory) => {
                return Ok(InflowStatus::CounterexampleFound { trajectory })
            }
            Outcome::Stayed { max, last } => {
                max_distance = max_distance.max(max);
                max_final = max_final.max(last);
            }
        }
    }
    if max_final < params.epsilon / 10.0 {
        Ok(InflowStatus::Inflowing {
            samples: starts.len(),
            max_distance,
            max_final_distance: max_final,
        })
    } else {
        Ok(InflowStatus::Unknown {
            samples: starts.len(),
            max_final_distance: max_final,
        })
    }
}

/// `chi(G)` via the cubical thickening at radius `2h`, or `analytic` when given.
pub fn guard_index_inflowing(
    guard: &GuardSet,
    h: f64,
    analytic: Option<i64>,
) -> Result<i64, GuardIndexError> {
    if let Some(chi) = analytic {
        return Ok(chi);
    }
    Ok(euler_stable(&thicken(guard, 2.0 * h), h)?)
}
