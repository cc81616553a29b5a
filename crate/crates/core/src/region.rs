//! Compact state-space regions assembled from geometric primitives.
//!
//! A [`Region`] is a closed, bounded subset of a Euclidean space built from
//! disks (balls), boxes, annuli (spherical shells) and sublevel sets, combined
//! by finite unions and intersections. Every region carries a retraction
//! defined on a collar around it; the flow and fixed-point machinery extends
//! maps off the region through that retraction.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::vecmath::{dist, norm, sub};

/// Scalar function of a point.
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Point-to-point map.
pub type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Fraction of the bounding-box diagonal used as the default collar width.
pub const DEFAULT_COLLAR_FRACTION: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point lies {distance:.3e} from the region, beyond the collar width {collar:.3e}")]
    OutsideCollar { distance: f64, collar: f64 },
    #[error("composite or sublevel shape requires a user-supplied retraction")]
    NoRetractionAvailable,
    #[error("invalid shape: {0}")]
    InvalidShape(String),
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Aabb { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn diagonal(&self) -> f64 {
        dist(&self.lo, &self.hi)
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            lo: self
                .lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| a.min(*b))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| a.max(*b))
                .collect(),
        }
    }

    pub fn intersection(&self, other: &Aabb) -> Aabb {
        Aabb {
            lo: self
                .lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| a.max(*b))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| a.min(*b))
                .collect(),
        }
    }

    pub fn expanded(&self, by: f64) -> Aabb {
        Aabb {
            lo: self.lo.iter().map(|a| a - by).collect(),
            hi: self.hi.iter().map(|a| a + by).collect(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect()
    }
}

/// Shape tree of a region.
#[derive(Clone)]
pub enum Shape {
    /// Closed Euclidean ball.
    Disk {
        center: Vec<f64>,
        radius: f64,
    },
    /// Closed axis-aligned box.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Closed spherical shell `inner <= |x - center| <= outer`.
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    /// `{x : g(x) <= 0}`, clipped to `bounds`.
    Sublevel {
        g: ScalarFn,
        bounds: Aabb,
    },
    Union(Vec<Shape>),
    Intersection(Vec<Shape>),
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Disk { center, radius } => write!(f, "Disk({center:?}, {radius})"),
            Shape::Box { lo, hi } => write!(f, "Box({lo:?}, {hi:?})"),
            Shape::Annulus {
                center,
                inner,
                outer,
            } => write!(f, "Annulus({center:?}, {inner}, {outer})"),
            Shape::Sublevel { bounds, .. } => write!(f, "Sublevel(<fn>, {bounds:?})"),
            Shape::Union(parts) => f.debug_tuple("Union").field(parts).finish(),
            Shape::Intersection(parts) => f.debug_tuple("Intersection").field(parts).finish(),
        }
    }
}

impl Shape {
    pub fn is_primitive(&self) -> bool {
        matches!(
            self,
            Shape::Disk { .. } | Shape::Box { .. } | Shape::Annulus { .. }
        )
    }

    fn dim(&self) -> Result<usize, RegionError> {
        let d = match self {
            Shape::Disk { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(RegionError::InvalidShape(format!(
                        "disk radius must be positive, got {radius}"
                    )));
                }
                center.len()
            }
            Shape::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(RegionError::DimensionMismatch {
                        expected: lo.len(),
                        found: hi.len(),
                    });
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return Err(RegionError::InvalidShape(format!(
                        "box bounds out of order: {lo:?} / {hi:?}"
                    )));
                }
                lo.len()
            }
            Shape::Annulus {
                center,
                inner,
                outer,
            } => {
                if !(*inner >= 0.0 && inner < outer) {
                    return Err(RegionError::InvalidShape(format!(
                        "annulus radii must satisfy 0 <= inner < outer, got {inner}, {outer}"
                    )));
                }
                center.len()
            }
            Shape::Sublevel { bounds, .. } => {
                if bounds.lo.len() != bounds.hi.len() {
                    return Err(RegionError::DimensionMismatch {
                        expected: bounds.lo.len(),
                        found: bounds.hi.len(),
                    });
                }
                bounds.dim()
            }
            Shape::Union(parts) | Shape::Intersection(parts) => {
                let first = parts
                    .first()
                    .ok_or_else(|| RegionError::InvalidShape("empty union/intersection".into()))?
                    .dim()?;
                for p in &parts[1..] {
                    let d = p.dim()?;
                    if d != first {
                        return Err(RegionError::DimensionMismatch {
                            expected: first,
                            found: d,
                        });
                    }
                }
                first
            }
        };
        if d == 0 {
            return Err(RegionError::InvalidShape(
                "ambient dimension must be positive".into(),
            ));
        }
        Ok(d)
    }

    pub(crate) fn contains(&self, x: &[f64]) -> bool {
        match self {
            Shape::Disk { center, radius } => dist(x, center) <= *radius,
            Shape::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *l <= *v && *v <= *h),
            Shape::Annulus {
                center,
                inner,
                outer,
            } => {
                let r = dist(x, center);
                *inner <= r && r <= *outer
            }
            Shape::Sublevel { g, bounds } => bounds.contains(x) && g(x) <= 0.0,
            Shape::Union(parts) => parts.iter().any(|p| p.contains(x)),
            Shape::Intersection(parts) => parts.iter().all(|p| p.contains(x)),
        }
    }

    pub fn bounding_box(&self) -> Aabb {
        match self {
            Shape::Disk { center, radius } => Aabb {
                lo: center.iter().map(|c| c - radius).collect(),
                hi: center.iter().map(|c| c + radius).collect(),
            },
            Shape::Box { lo, hi } => Aabb::new(lo.clone(), hi.clone()),
            Shape::Annulus { center, outer, .. } => Aabb {
                lo: center.iter().map(|c| c - outer).collect(),
                hi: center.iter().map(|c| c + outer).collect(),
            },
            Shape::Sublevel { bounds, .. } => bounds.clone(),
            Shape::Union(parts) => parts
                .iter()
                .map(Shape::bounding_box)
                .reduce(|a, b| a.union(&b))
                .expect("validated nonempty"),
            Shape::Intersection(parts) => parts
                .iter()
                .map(Shape::bounding_box)
                .reduce(|a, b| a.intersection(&b))
                .expect("validated nonempty"),
        }
    }

    /// Nearest-point projection for primitives; `None` for composite shapes.
    pub(crate) fn project(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self {
            Shape::Disk { center, radius } => Some(radial_clamp(x, center, 0.0, *radius)),
            Shape::Box { lo, hi } => Some(
                x.iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(v, (l, h))| v.clamp(*l, *h))
                    .collect(),
            ),
            Shape::Annulus {
                center,
                inner,
                outer,
            } => Some(radial_clamp(x, center, *inner, *outer)),
            _ => None,
        }
    }
}

/// Moves `x` radially (about `center`) so its radius lies in `[lo, hi]`.
fn radial_clamp(x: &[f64], center: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let d = sub(x, center);
    let r = norm(&d);
    let target = r.clamp(lo, hi);
    if r == target {
        return x.to_vec();
    }
    if r == 0.0 {
        // Any direction works at the center; pick the first axis.
        let mut p = center.to_vec();
        p[0] += target;
        return p;
    }
    // Rounding can leave the scaled point a few ulps outside [lo, hi].
    let mut t = target;
    let mut p: Vec<f64> = Vec::new();
    for _ in 0..16 {
        p = center
            .iter()
            .zip(&d)
            .map(|(c, v)| c + v * (t / r))
            .collect();
        let rp = dist(&p, center);
        if rp > hi {
            t -= hi.max(1.0) * f64::EPSILON;
        } else if rp < lo {
            t += hi.max(1.0) * f64::EPSILON;
        } else {
            break;
        }
    }
    p
}

/// A compact region in `R^n` with a retraction defined on its collar.
#[derive(Clone)]
pub struct Region {
    dim: usize,
    shape: Shape,
    collar_width: f64,
    retraction: Option<MapFn>,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Region")
            .field("dim", &self.dim)
            .field("shape", &self.shape)
            .field("collar_width", &self.collar_width)
            .field("retraction", &self.retraction.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

impl Region {
    /// Builds a region from a primitive shape. Composite and sublevel shapes
    /// fail with [`RegionError::NoRetractionAvailable`]; use
    /// [`Region::with_retraction`] for those.
    pub fn new(shape: Shape) -> Result<Self, RegionError> {
        Self::build(shape, None)
    }

    /// Builds a region with a user-supplied retraction. The retraction is used
    /// even for primitive shapes.
    pub fn with_retraction(shape: Shape, retraction: MapFn) -> Result<Self, RegionError> {
        Self::build(shape, Some(retraction))
    }

    fn build(shape: Shape, retraction: Option<MapFn>) -> Result<Self, RegionError> {
        let dim = shape.dim()?;
        if retraction.is_none() && !shape.is_primitive() {
            return Err(RegionError::NoRetractionAvailable);
        }
        let bbox = shape.bounding_box();
        if bbox.is_empty() {
            return Err(RegionError::InvalidShape("bounding box is empty".into()));
        }
        let collar_width = DEFAULT_COLLAR_FRACTION * bbox.diagonal();
        Ok(Region {
            dim,
            shape,
            collar_width: if collar_width > 0.0 {
                collar_width
            } else {
                1e-3
            },
            retraction,
        })
    }

    pub fn disk(center: Vec<f64>, radius: f64) -> Result<Self, RegionError> {
        Self::new(Shape::Disk { center, radius })
    }

    pub fn cuboid(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, RegionError> {
        Self::new(Shape::Box { lo, hi })
    }

    pub fn annulus(center: Vec<f64>, inner: f64, outer: f64) -> Result<Self, RegionError> {
        Self::new(Shape::Annulus {
            center,
            inner,
            outer,
        })
    }

    pub fn with_collar_width(mut self, width: f64) -> Result<Self, RegionError> {
        if !(width > 0.0) {
            return Err(RegionError::InvalidShape(format!(
                "collar width must be positive, got {width}"
            )));
        }
        self.collar_width = width;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn collar_width(&self) -> f64 {
        self.collar_width
    }

    pub fn has_custom_retraction(&self) -> bool {
        self.retraction.is_some()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), RegionError> {
        if x.len() != self.dim {
            return Err(RegionError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool, RegionError> {
        self.check_dim(x)?;
        Ok(self.shape.contains(x))
    }

    /// Membership without the dimension check.
    pub(crate) fn includes(&self, x: &[f64]) -> bool {
        self.shape.contains(x)
    }

    pub fn bounding_box(&self) -> Aabb {
        self.shape.bounding_box()
    }

    /// Raw retraction image, ignoring the collar bound.
    pub(crate) fn retract_unbounded(&self, x: &[f64]) -> Vec<f64> {
        if self.shape.contains(x) {
            return x.to_vec();
        }
        match &self.retraction {
            Some(r) => r(x),
            None => self
                .shape
                .project(x)
                .expect("primitive shapes always project"),
        }
    }

    /// Distance from `x` to its retraction image. For primitive shapes this is
    /// the Euclidean distance to the region.
    pub fn excursion(&self, x: &[f64]) -> Result<f64, RegionError> {
        self.check_dim(x)?;
        Ok(dist(x, &self.retract_unbounded(x)))
    }

    /// Retracts a collar point onto the region; the identity on the region.
    pub fn retract(&self, x: &[f64]) -> Result<Vec<f64>, RegionError> {
        self.check_dim(x)?;
        if self.shape.contains(x) {
            return Ok(x.to_vec());
        }
        let p = self.retract_unbounded(x);
        let distance = dist(x, &p);
        if distance > self.collar_width {
            return Err(RegionError::OutsideCollar {
                distance,
                collar: self.collar_width,
            });
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_disk() -> Region {
        Region::disk(vec![0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn disk_membership() {
        let d = unit_disk();
        assert!(d.contains(&[0.5, 0.0]).unwrap());
        assert!(d.contains(&[1.0, 0.0]).unwrap());
        assert!(!d.contains(&[1.5, 0.0]).unwrap());
        assert_eq!(
            d.contains(&[0.0]),
            Err(RegionError::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn primitive_retractions() {
        // The default collar (0.28) is too narrow for x = (1.5, 0).
        let d = unit_disk().with_collar_width(0.6).unwrap();
        assert_eq!(d.retract(&[1.5, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(d.retract(&[0.3, 0.4]).unwrap(), vec![0.3, 0.4]);
        let b = Region::cuboid(vec![0.0, 0.0], vec![1.0, 1.0])
            .unwrap()
            .with_collar_width(0.5)
            .unwrap();
        assert_eq!(b.retract(&[1.2, -0.1]).unwrap(), vec![1.0, 0.0]);
        let a = Region::annulus(vec![0.0, 0.0], 1.0, 2.0).unwrap();
        let p = a.retract(&[0.5, 0.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] == 0.0);
    }

    #[test]
    fn retraction_outside_collar_is_rejected() {
        let d = unit_disk();
        // collar = 0.1 * diag([-1,1]^2) = 0.2828...
        assert!(matches!(
            d.retract(&[2.0, 0.0]),
            Err(RegionError::OutsideCollar { .. })
        ));
        assert!(d.retract(&[1.25, 0.0]).is_ok());
    }

    #[test]
    fn composite_needs_retraction() {
        let shape = Shape::Union(vec![
            Shape::Disk {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
            Shape::Disk {
                center: vec![3.0, 0.0],
                radius: 1.0,
            },
        ]);
        assert_eq!(
            Region::new(shape.clone()).unwrap_err(),
            RegionError::NoRetractionAvailable
        );
        let sub = Shape::Sublevel {
            g: Arc::new(|x: &[f64]| x[0]),
            bounds: Aabb::new(vec![-1.0], vec![1.0]),
        };
        assert_eq!(
            Region::new(sub).unwrap_err(),
            RegionError::NoRetractionAvailable
        );
        let r = Region::with_retraction(shape, Arc::new(|x: &[f64]| x.to_vec())).unwrap();
        assert!(r.has_custom_retraction());
    }

    #[test]
    fn bounding_boxes() {
        assert_eq!(
            unit_disk().bounding_box(),
            Aabb::new(vec![-1.0, -1.0], vec![1.0, 1.0])
        );
        assert_eq!(
            Region::annulus(vec![0.0, 0.0], 1.0, 2.0)
                .unwrap()
                .bounding_box(),
            Aabb::new(vec![-2.0, -2.0], vec![2.0, 2.0])
        );
        let u = Shape::Union(vec![
            Shape::Disk {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
            Shape::Disk {
                center: vec![3.0, 0.0],
                radius: 1.0,
            },
        ]);
        assert_eq!(
            u.bounding_box(),
            Aabb::new(vec![-1.0, -1.0], vec![4.0, 1.0])
        );
    }

    #[test]
    fn invalid_shapes() {
        assert!(Region::disk(vec![0.0, 0.0], -1.0).is_err());
        assert!(Region::annulus(vec![0.0], 2.0, 1.0).is_err());
        assert!(Region::cuboid(vec![1.0], vec![0.0]).is_err());
        assert!(Region::disk(vec![], 1.0).is_err());
    }

    fn shapes() -> Vec<Region> {
        vec![
            unit_disk(),
            Region::cuboid(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap(),
            Region::annulus(vec![0.0, 0.0], 1.0, 2.0).unwrap(),
            Region::disk(vec![0.0, 0.0, 0.0], 1.0).unwrap(),
            Region::cuboid(vec![0.0], vec![1.0]).unwrap(),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn retraction_is_idempotent_and_lands_in_region(
            which in 0usize..5, raw in proptest::collection::vec(-1.0f64..1.0, 3)
        ) {
            let region = &shapes()[which];
            let bbox = region.bounding_box().expanded(region.collar_width());
            let x: Vec<f64> = (0..region.dim())
                .map(|i| bbox.lo[i] + (raw[i] + 1.0) / 2.0 * (bbox.hi[i] - bbox.lo[i]))
                .collect();
            if let Ok(p) = region.retract(&x) {
                prop_assert!(region.contains(&p).unwrap());
                let q = region.retract(&p).unwrap();
                prop_assert!(dist(&p, &q) <= 1e-12);
            }
        }
    }
}
