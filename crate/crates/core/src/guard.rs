//! Guard sets: closed subsets of a region on which discrete transitions fire.
//!
//! The Euclidean distance to the carrier is the canonical nonnegative
//! 1-Lipschitz function vanishing exactly on the guard; the semiflow module
//! rescales vector fields by it.

use std::fmt;

use crate::cubical;
use crate::region::{Aabb, Region, RegionError, Shape};
use crate::vecmath::{dist, dot, norm, sphere_directions, sub};

/// Number of carrier samples used to check guard containment.
pub const CONTAINMENT_SAMPLES: usize = 200;
/// Absolute tolerance for the containment check.
pub const CONTAINMENT_TOL: f64 = 1e-9;

/// Rasterized stand-in for a guard given as a full-dimensional subregion.
#[derive(Clone)]
pub struct SubRegionCarrier {
    region: Region,
    cell_size: f64,
    centers: Vec<Vec<f64>>,
}

impl SubRegionCarrier {
    pub fn new(region: Region, cell_size: f64) -> Result<Self, RegionError> {
        let centers = cubical::included_cell_centers(&region, cell_size)
            .map_err(|e| RegionError::InvalidShape(format!("subregion guard: {e}")))?;
        if centers.is_empty() {
            return Err(RegionError::InvalidShape(
                "subregion guard rasterizes to nothing".into(),
            ));
        }
        Ok(SubRegionCarrier {
            region,
            cell_size,
            centers,
        })
    }

    fn half_diagonal(&self) -> f64 {
        0.5 * self.cell_size * (self.region.dim() as f64).sqrt()
    }

    fn nearest_center(&self, x: &[f64]) -> (&[f64], f64) {
        let mut best = (self.centers[0].as_slice(), f64::INFINITY);
        for c in &self.centers {
            let d = dist(x, c);
            if d < best.1 {
                best = (c, d);
            }
        }
        best
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }
}

/// Geometric carrier of a guard.
#[derive(Clone)]
pub enum Carrier {
    /// Planar circle.
    Circle {
        center: Vec<f64>,
        radius: f64,
    },
    Segment {
        a: Vec<f64>,
        b: Vec<f64>,
    },
    PointSet(Vec<Vec<f64>>),
    SubRegion(SubRegionCarrier),
    /// Boundary of a primitive shape (disk, box or annulus).
    BoundaryOf(Shape),
}

impl fmt::Debug for Carrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Carrier::Circle { center, radius } => write!(f, "Circle({center:?}, {radius})"),
            Carrier::Segment { a, b } => write!(f, "Segment({a:?}, {b:?})"),
            Carrier::PointSet(p) => write!(f, "PointSet({p:?})"),
            Carrier::SubRegion(s) => write!(f, "SubRegion({:?})", s.region.shape()),
            Carrier::BoundaryOf(s) => write!(f, "BoundaryOf({s:?})"),
        }
    }
}

impl Carrier {
    fn dim(&self) -> Result<usize, RegionError> {
        let invalid = |m: &str| Err(RegionError::InvalidShape(m.to_string()));
        match self {
            Carrier::Circle { center, radius } => {
                if center.len() != 2 {
                    return invalid("circle guards are planar");
                }
                if !(*radius > 0.0) {
                    return invalid("circle radius must be positive");
                }
                Ok(2)
            }
            Carrier::Segment { a, b } => {
                if a.len() != b.len() || a.is_empty() {
                    return invalid("segment endpoints must share a positive dimension");
                }
                Ok(a.len())
            }
            Carrier::PointSet(pts) => {
                let d = pts.first().map(Vec::len).unwrap_or(0);
                if d == 0 || pts.iter().any(|p| p.len() != d) {
                    return invalid("point set must be nonempty with a common dimension");
                }
                Ok(d)
            }
            Carrier::SubRegion(s) => Ok(s.region.dim()),
            Carrier::BoundaryOf(shape) => {
                if !shape.is_primitive() {
                    return invalid("boundary guards need a primitive shape");
                }
                Ok(shape.bounding_box().dim())
            }
        }
    }
}

fn project_segment(x: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    let ab = sub(b, a);
    let len2 = dot(&ab, &ab);
    let t = if len2 == 0.0 {
        0.0
    } else {
        (dot(&sub(x, a), &ab) / len2).clamp(0.0, 1.0)
    };
    a.iter().zip(&ab).map(|(p, v)| p + t * v).collect()
}

fn project_sphere(x: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let d = sub(x, center);
    let r = norm(&d);
    if r == 0.0 {
        let mut p = center.to_vec();
        p[0] += radius;
        return p;
    }
    center
        .iter()
        .zip(&d)
        .map(|(c, v)| c + v * (radius / r))
        .collect()
}

/// Nearest point on the boundary of an axis-aligned box.
fn project_box_boundary(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let inside = x
        .iter()
        .zip(lo.iter().zip(hi))
        .all(|(v, (l, h))| *l <= *v && *v <= *h);
    if !inside {
        return x
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect();
    }
    let mut best = (0usize, lo[0], f64::INFINITY);
    for i in 0..x.len() {
        let dl = x[i] - lo[i];
        let dh = hi[i] - x[i];
        if dl < best.2 {
            best = (i, lo[i], dl);
        }
        if dh < best.2 {
            best = (i, hi[i], dh);
        }
    }
    let mut p = x.to_vec();
    p[best.0] = best.1;
    p
}

/// A closed guard set inside a parent region.
#[derive(Clone, Debug)]
pub struct GuardSet {
    carrier: Carrier,
    parent: Region,
}

impl GuardSet {
    /// Builds a guard and checks, on carrier samples, that it lies in `parent`.
    pub fn new(carrier: Carrier, parent: &Region) -> Result<Self, RegionError> {
        let d = carrier.dim()?;
        if d != parent.dim() {
            return Err(RegionError::DimensionMismatch {
                expected: parent.dim(),
                found: d,
            });
        }
        let guard = GuardSet {
            carrier,
            parent: parent.clone(),
        };
        for s in guard.samples(CONTAINMENT_SAMPLES) {
            if !parent.includes(&s) && parent.excursion(&s)? > CONTAINMENT_TOL {
                return Err(RegionError::InvalidShape(format!(
                    "guard sample {s:?} lies outside its region"
                )));
            }
        }
        Ok(guard)
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn parent(&self) -> &Region {
        &self.parent
    }

    pub fn dim(&self) -> usize {
        self.parent.dim()
    }

    /// Euclidean distance from `x` to the guard.
    pub fn guard_distance(&self, x: &[f64]) -> Result<f64, RegionError> {
        if x.len() != self.dim() {
            return Err(RegionError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.distance(x))
    }

    pub(crate) fn distance(&self, x: &[f64]) -> f64 {
        match &self.carrier {
            Carrier::Circle { center, radius } => (dist(x, center) - radius).abs(),
            Carrier::Segment { a, b } => dist(x, &project_segment(x, a, b)),
            Carrier::PointSet(pts) => pts.iter().map(|p| dist(x, p)).fold(f64::INFINITY, f64::min),
            Carrier::SubRegion(s) => (s.nearest_center(x).1 - s.half_diagonal()).max(0.0),
            Carrier::BoundaryOf(shape) => match shape {
                Shape::Disk { center, radius } => (dist(x, center) - radius).abs(),
                Shape::Annulus {
                    center,
                    inner,
                    outer,
                } => {
                    let r = dist(x, center);
                    let d_out = (r - outer).abs();
                    if *inner > 0.0 {
                        d_out.min((r - inner).abs())
                    } else {
                        d_out
                    }
                }
                Shape::Box { lo, hi } => dist(x, &project_box_boundary(x, lo, hi)),
                _ => unreachable!("validated primitive"),
            },
        }
    }

    /// Nearest carrier point (nearest raster cell center for subregions).
    pub fn nearest_point(&self, x: &[f64]) -> Vec<f64> {
        match &self.carrier {
            Carrier::Circle { center, radius } => project_sphere(x, center, *radius),
            Carrier::Segment { a, b } => project_segment(x, a, b),
            Carrier::PointSet(pts) => pts
                .iter()
                .min_by(|p, q| dist(x, p).total_cmp(&dist(x, q)))
                .expect("nonempty")
                .clone(),
            Carrier::SubRegion(s) => s.nearest_center(x).0.to_vec(),
            Carrier::BoundaryOf(shape) => match shape {
                Shape::Disk { center, radius } => project_sphere(x, center, *radius),
                Shape::Annulus {
                    center,
                    inner,
                    outer,
                } => {
                    let r = dist(x, center);
                    if *inner > 0.0 && (r - inner).abs() < (r - outer).abs() {
                        project_sphere(x, center, *inner)
                    } else {
                        project_sphere(x, center, *outer)
                    }
                }
                Shape::Box { lo, hi } => project_box_boundary(x, lo, hi),
                _ => unreachable!("validated primitive"),
            },
        }
    }

    /// Offset subtracted from center distances by a rasterized carrier.
    pub(crate) fn carrier_slack(&self) -> f64 {
        match &self.carrier {
            Carrier::SubRegion(s) => s.half_diagonal(),
            _ => 0.0,
        }
    }

    /// Point at parameter `t` in `[0, 1]` for one-parameter carriers (circles,
    /// segments and planar disk boundaries).
    pub fn curve_point(&self, t: f64) -> Option<Vec<f64>> {
        use std::f64::consts::TAU;
        match &self.carrier {
            Carrier::Circle { center, radius }
            | Carrier::BoundaryOf(Shape::Disk { center, radius })
                if center.len() == 2 =>
            {
                let a = TAU * t;
                Some(vec![
                    center[0] + radius * a.cos(),
                    center[1] + radius * a.sin(),
                ])
            }
            Carrier::Segment { a, b } => {
                Some(a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect())
            }
            _ => None,
        }
    }

    /// True when [`GuardSet::curve_point`] describes a closed curve.
    pub fn is_closed_curve(&self) -> bool {
        matches!(
            &self.carrier,
            Carrier::Circle { .. } | Carrier::BoundaryOf(Shape::Disk { .. })
        ) && self.dim() == 2
    }

    /// Deterministic samples of the carrier (all points for point sets).
    pub fn samples(&self, n: usize) -> Vec<Vec<f64>> {
        let n = n.max(2);
        match &self.carrier {
            Carrier::Circle { .. } => (0..n)
                .map(|k| self.curve_point(k as f64 / n as f64).unwrap())
                .collect(),
            Carrier::Segment { .. } => (0..n)
                .map(|k| self.curve_point(k as f64 / (n - 1) as f64).unwrap())
                .collect(),
            Carrier::PointSet(pts) => pts.clone(),
            Carrier::SubRegion(s) => {
                let inside: Vec<&Vec<f64>> =
                    s.centers.iter().filter(|c| s.region.includes(c)).collect();
                let stride = (inside.len() / n).max(1);
                inside.into_iter().step_by(stride).cloned().collect()
            }
            Carrier::BoundaryOf(shape) => match shape {
                Shape::Disk { center, radius } => sphere_directions(center.len(), n)
                    .into_iter()
                    .map(|d| center.iter().zip(&d).map(|(c, u)| c + radius * u).collect())
                    .collect(),
                Shape::Annulus {
                    center,
                    inner,
                    outer,
                } => {
                    let mut out = Vec::new();
                    for r in [*inner, *outer] {
                        if r > 0.0 {
                            for d in sphere_directions(center.len(), n / 2) {
                                out.push(center.iter().zip(&d).map(|(c, u)| c + r * u).collect());
                            }
                        }
                    }
                    out
                }
                Shape::Box { lo, hi } => box_boundary_samples(lo, hi, n),
                _ => unreachable!("validated primitive"),
            },
        }
    }

    /// Characteristic length of the guard: circle radius, segment length, the
    /// smallest point spacing (capped at 1) for point sets, half the bounding
    /// box diagonal otherwise.
    pub fn scale(&self) -> f64 {
        match &self.carrier {
            Carrier::Circle { radius, .. } => *radius,
            Carrier::BoundaryOf(Shape::Disk { radius, .. }) => *radius,
            Carrier::Segment { a, b } => dist(a, b),
            Carrier::PointSet(pts) => {
                let mut s: f64 = 1.0;
                for (i, p) in pts.iter().enumerate() {
                    for q in &pts[i + 1..] {
                        s = s.min(dist(p, q));
                    }
                }
                s
            }
            _ => 0.5 * self.bounding_box().diagonal(),
        }
    }

    pub fn bounding_box(&self) -> Aabb {
        match &self.carrier {
            Carrier::Circle { center, radius } => Aabb::new(
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Carrier::Segment { a, b } => Aabb::new(
                a.iter().zip(b).map(|(p, q)| p.min(*q)).collect(),
                a.iter().zip(b).map(|(p, q)| p.max(*q)).collect(),
            ),
            Carrier::PointSet(pts) => pts
                .iter()
                .map(|p| Aabb::new(p.clone(), p.clone()))
                .reduce(|a, b| a.union(&b))
                .expect("nonempty"),
            Carrier::SubRegion(s) => s.region.bounding_box(),
            Carrier::BoundaryOf(shape) => shape.bounding_box(),
        }
    }
}

fn box_boundary_samples(lo: &[f64], hi: &[f64], n: usize) -> Vec<Vec<f64>> {
    let dim = lo.len();
    if dim == 1 {
        return vec![lo.to_vec(), hi.to_vec()];
    }
    // Walk each face on a coarse grid; faces are indexed by (axis, side).
    let faces = 2 * dim;
    let per_face = (n / faces).max(1);
    let side = ((per_face as f64).powf(1.0 / (dim - 1) as f64).ceil() as usize).max(1);
    let mut out = Vec::new();
    for axis in 0..dim {
        for fixed in [lo[axis], hi[axis]] {
            let free: Vec<usize> = (0..dim).filter(|&i| i != axis).collect();
            let total = side.pow(free.len() as u32);
            for k in 0..total {
                let mut p = vec![0.0; dim];
                p[axis] = fixed;
                let mut rem = k;
                for &i in &free {
                    let j = rem % side;
                    rem /= side;
                    let t = if side == 1 {
                        0.5
                    } else {
                        j as f64 / (side - 1) as f64
                    };
                    p[i] = lo[i] + t * (hi[i] - lo[i]);
                }
                out.push(p);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn disk() -> Region {
        Region::disk(vec![0.0, 0.0], 1.0).unwrap()
    }

    fn circle_guard() -> GuardSet {
        GuardSet::new(
            Carrier::Circle {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
            &disk(),
        )
        .unwrap()
    }

    #[test]
    fn circle_distance() {
        let g = circle_guard();
        assert_eq!(g.guard_distance(&[0.0, 0.0]).unwrap(), 1.0);
        assert!(g.guard_distance(&[0.6, 0.8]).unwrap() < 1e-15);
        assert!(g.guard_distance(&[0.0]).is_err());
    }

    #[test]
    fn point_set_distance_on_line() {
        let line = Region::cuboid(vec![0.0], vec![1.0]).unwrap();
        let g = GuardSet::new(Carrier::PointSet(vec![vec![0.0], vec![1.0]]), &line).unwrap();
        assert!((g.guard_distance(&[0.3]).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(g.scale(), 1.0);
    }

    #[test]
    fn guard_outside_region_is_rejected() {
        let err = GuardSet::new(
            Carrier::Circle {
                center: vec![0.0, 0.0],
                radius: 1.5,
            },
            &disk(),
        );
        assert!(err.is_err());
        let err = GuardSet::new(Carrier::PointSet(vec![vec![0.0, 0.0, 0.0]]), &disk());
        assert!(matches!(err, Err(RegionError::DimensionMismatch { .. })));
    }

    #[test]
    fn box_boundary_distance() {
        let b = Shape::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        };
        let region = Region::new(b.clone()).unwrap();
        let g = GuardSet::new(Carrier::BoundaryOf(b), &region).unwrap();
        assert!((g.guard_distance(&[0.5, 0.2]).unwrap() - 0.2).abs() < 1e-15);
        assert!((g.guard_distance(&[0.5, 1.3]).unwrap() - 0.3).abs() < 1e-15);
        assert!(g.guard_distance(&[1.0, 0.4]).unwrap() == 0.0);
    }

    #[test]
    fn subregion_distance_vanishes_inside() {
        let region = Region::cuboid(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        let inner = Region::disk(vec![1.0, 1.0], 0.5).unwrap();
        let carrier = Carrier::SubRegion(SubRegionCarrier::new(inner, 0.05).unwrap());
        let g = GuardSet::new(carrier, &region).unwrap();
        assert_eq!(g.guard_distance(&[1.0, 1.0]).unwrap(), 0.0);
        let d = g.guard_distance(&[1.0, 0.2]).unwrap();
        assert!((d - 0.3).abs() < 0.06, "d = {d}");
    }

    #[test]
    fn guard_distance_is_one_lipschitz() {
        let box_shape = Shape::Box {
            lo: vec![-1.0, -1.0],
            hi: vec![1.0, 1.0],
        };
        let square = Region::new(box_shape.clone()).unwrap();
        let guards = vec![
            circle_guard(),
            GuardSet::new(
                Carrier::Segment {
                    a: vec![0.0, -1.0],
                    b: vec![0.0, 0.0],
                },
                &disk(),
            )
            .unwrap(),
            GuardSet::new(
                Carrier::PointSet(vec![vec![0.0, 0.0], vec![0.5, 0.5]]),
                &disk(),
            )
            .unwrap(),
            GuardSet::new(Carrier::BoundaryOf(box_shape), &square).unwrap(),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for g in &guards {
            for _ in 0..1000 {
                let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.5..1.5)).collect();
                let y: Vec<f64> = (0..2).map(|_| rng.random_range(-1.5..1.5)).collect();
                let lhs = (g.distance(&x) - g.distance(&y)).abs();
                assert!(lhs <= dist(&x, &y) + 1e-12);
                assert!(g.distance(&x) >= 0.0);
            }
            for s in g.samples(50) {
                assert!(g.distance(&s) < 1e-12);
            }
        }
    }
}
