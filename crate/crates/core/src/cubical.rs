//! Cubical complexes on a uniform grid and their Euler characteristics.
//!
//! Regions are rasterized by including every top-dimensional grid cell that
//! has at least one of its `3^n` sample points (corners, edge/face midpoints,
//! center) inside the region, then closing under faces. The Euler
//! characteristic is the alternating count of cubes by dimension.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::guard::GuardSet;
use crate::region::{Aabb, Region, Shape};
use crate::vecmath::dist;

/// Default limit on the number of top-dimensional cells a rasterization may visit.
pub const DEFAULT_CELL_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EulerError {
    #[error("rasterization needs {cells} cells, over the budget of {budget}")]
    ResolutionTooFine { cells: u64, budget: u64 },
    #[error("cell size must be positive and finite, got {0}")]
    InvalidCellSize(f64),
    #[error("complex is not closed under faces: missing a face of {0:?}")]
    NotFaceClosed(Cube),
    #[error("Euler characteristic changes with resolution: {0:?}")]
    ResolutionUnstable(Vec<(f64, i64)>),
    #[error("bad complex dump line {line}: {message}")]
    Dump { line: usize, message: String },
}

/// Elementary cube: integer anchor plus one extent bit per axis.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cube {
    pub anchor: Vec<i64>,
    /// Bit `k` set means the cube has unit extent along axis `k`.
    pub extent: u32,
}

impl Cube {
    pub fn dimension(&self) -> u32 {
        self.extent.count_ones()
    }

    /// The two codimension-one faces along every extended axis.
    pub fn facets(&self) -> impl Iterator<Item = Cube> + '_ {
        (0..self.anchor.len())
            .filter(|k| self.extent & (1 << k) != 0)
            .flat_map(move |k| {
                let extent = self.extent & !(1 << k);
                let lower = Cube {
                    anchor: self.anchor.clone(),
                    extent,
                };
                let mut upper_anchor = self.anchor.clone();
                upper_anchor[k] += 1;
                [
                    lower,
                    Cube {
                        anchor: upper_anchor,
                        extent,
                    },
                ]
            })
    }
}

/// A finite set of elementary cubes in a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicalComplex {
    dim: usize,
    cell_size: f64,
    cubes: BTreeSet<Cube>,
}

impl CubicalComplex {
    pub fn new(dim: usize, cell_size: f64, cubes: impl IntoIterator<Item = Cube>) -> Self {
        CubicalComplex {
            dim,
            cell_size,
            cubes: cubes.into_iter().collect(),
        }
    }

    /// Face closure of a set of top-dimensional cells given by their anchors.
    pub fn from_top_cells(dim: usize, cell_size: f64, anchors: &[Vec<i64>]) -> Self {
        let mut seen: HashSet<Cube> = HashSet::new();
        let full = (1u32 << dim) - 1;
        for a in anchors {
            // Each face picks, per axis, extent or one of the two endpoints.
            for code in 0..3usize.pow(dim as u32) {
                let mut c = code;
                let mut anchor = a.clone();
                let mut extent = 0u32;
                for (k, coord) in anchor.iter_mut().enumerate() {
                    match c % 3 {
                        0 => extent |= 1 << k,
                        1 => {}
                        _ => *coord += 1,
                    }
                    c /= 3;
                }
                debug_assert!(extent <= full);
                seen.insert(Cube { anchor, extent });
            }
        }
        CubicalComplex {
            dim,
            cell_size,
            cubes: seen.into_iter().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cubes(&self) -> impl Iterator<Item = &Cube> {
        self.cubes.iter()
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Number of cubes of each dimension `0..=dim`.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.dim + 1];
        for c in &self.cubes {
            counts[c.dimension() as usize] += 1;
        }
        counts
    }

    pub fn check_face_closed(&self) -> Result<(), EulerError> {
        for c in &self.cubes {
            if c.facets().any(|f| !self.cubes.contains(&f)) {
                return Err(EulerError::NotFaceClosed(c.clone()));
            }
        }
        Ok(())
    }

    /// Text dump: one cube per line, anchor coordinates then extent bits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.cubes {
            let mut fields: Vec<String> = c.anchor.iter().map(i64::to_string).collect();
            fields.extend((0..self.dim).map(|k| ((c.extent >> k) & 1).to_string()));
            let _ = writeln!(out, "{}", fields.join(" "));
        }
        out
    }

    pub fn from_text(dim: usize, cell_size: f64, text: &str) -> Result<Self, EulerError> {
        let mut cubes = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| EulerError::Dump {
                line: i + 1,
                message,
            };
            let fields: Vec<i64> = line
                .split_whitespace()
                .map(|f| f.parse::<i64>().map_err(|e| err(e.to_string())))
                .collect::<Result<_, _>>()?;
            if fields.len() != 2 * dim {
                return Err(err(format!(
                    "expected {} fields, got {}",
                    2 * dim,
                    fields.len()
                )));
            }
            let mut extent = 0;
            for (k, bit) in fields[dim..].iter().enumerate() {
                match bit {
                    0 => {}
                    1 => extent |= 1 << k,
                    other => return Err(err(format!("extent bit must be 0 or 1, got {other}"))),
                }
            }
            cubes.insert(Cube {
                anchor: fields[..dim].to_vec(),
                extent,
            });
        }
        Ok(CubicalComplex {
            dim,
            cell_size,
            cubes,
        })
    }
}

/// Alternating count of cubes by dimension.
pub fn euler_characteristic(complex: &CubicalComplex) -> Result<i64, EulerError> {
    complex.check_face_closed()?;
    Ok(complex
        .counts()
        .iter()
        .enumerate()
        .map(|(d, &n)| if d % 2 == 0 { n as i64 } else { -(n as i64) })
        .sum())
}

struct Grid {
    dim: usize,
    h: f64,
    start: Vec<i64>,
    extent: Vec<u64>,
}

impl Grid {
    fn covering(bbox: &Aabb, h: f64, budget: u64) -> Result<Grid, EulerError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(EulerError::InvalidCellSize(h));
        }
        let dim = bbox.dim();
        let mut start = Vec::with_capacity(dim);
        let mut extent = Vec::with_capacity(dim);
        let mut cells: u64 = 1;
        for k in 0..dim {
            let lo = (bbox.lo[k] / h).floor();
            let hi = ((bbox.hi[k] / h).ceil() - 1.0).max(lo);
            let n = (hi - lo + 1.0) as u64;
            cells = cells.saturating_mul(n);
            start.push(lo as i64);
            extent.push(n);
        }
        if cells > budget {
            return Err(EulerError::ResolutionTooFine { cells, budget });
        }
        Ok(Grid {
            dim,
            h,
            start,
            extent,
        })
    }

    fn cell_count(&self) -> u64 {
        self.extent.iter().product()
    }

    fn anchor(&self, mut linear: u64) -> Vec<i64> {
        let mut a = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            a.push(self.start[k] + (linear % self.extent[k]) as i64);
            linear /= self.extent[k];
        }
        a
    }

    /// A cell is included if any of its `3^n` sample points is in the shape.
    fn included(&self, shape: &Shape, anchor: &[i64]) -> bool {
        let mut p = vec![0.0; self.dim];
        for code in 0..3usize.pow(self.dim as u32) {
            let mut c = code;
            for k in 0..self.dim {
                let offset = (c % 3) as f64 * 0.5;
                p[k] = (anchor[k] as f64 + offset) * self.h;
                c /= 3;
            }
            if shape.contains(&p) {
                return true;
            }
        }
        false
    }

    fn included_anchors(&self, shape: &Shape) -> Vec<Vec<i64>> {
        (0..self.cell_count())
            .into_par_iter()
            .map(|i| self.anchor(i))
            .filter(|a| self.included(shape, a))
            .collect()
    }
}

/// Rasterizes a region into a face-closed cubical complex with cell size `h`.
pub fn rasterize(region: &Region, h: f64) -> Result<CubicalComplex, EulerError> {
    rasterize_with_budget(region, h, DEFAULT_CELL_BUDGET)
}

pub fn rasterize_with_budget(
    region: &Region,
    h: f64,
    budget: u64,
) -> Result<CubicalComplex, EulerError> {
    let grid = Grid::covering(&region.bounding_box(), h, budget)?;
    let anchors = grid.included_anchors(region.shape());
    Ok(CubicalComplex::from_top_cells(region.dim(), h, &anchors))
}

/// Centers of the top cells a rasterization at `h` would include.
pub(crate) fn included_cell_centers(region: &Region, h: f64) -> Result<Vec<Vec<f64>>, EulerError> {
    let grid = Grid::covering(&region.bounding_box(), h, DEFAULT_CELL_BUDGET)?;
    Ok(grid
        .included_anchors(region.shape())
        .into_iter()
        .map(|a| a.iter().map(|&i| (i as f64 + 0.5) * h).collect())
        .collect())
}

/// Euler characteristic certified across resolutions.
///
/// Computes the characteristic at `h` and `h/2`, and also at `h/4` when that
/// grid fits the cell budget. All values must agree.
pub fn euler_stable(region: &Region, h: f64) -> Result<i64, EulerError> {
    euler_stable_with_budget(region, h, DEFAULT_CELL_BUDGET)
}

pub fn euler_stable_with_budget(region: &Region, h: f64, budget: u64) -> Result<i64, EulerError> {
    let mut values = Vec::new();
    for (i, step) in [h, h / 2.0, h / 4.0].into_iter().enumerate() {
        let complex = match rasterize_with_budget(region, step, budget) {
            Ok(c) => c,
            Err(EulerError::ResolutionTooFine { .. }) if i == 2 => break,
            Err(e) => return Err(e),
        };
        values.push((step, euler_characteristic(&complex)?));
    }
    if values.iter().all(|(_, v)| *v == values[0].1) {
        Ok(values[0].1)
    } else {
        Err(EulerError::ResolutionUnstable(values))
    }
}

/// The closed `rho`-neighborhood of a guard, clipped to its parent's collar.
pub fn thicken(guard: &GuardSet, rho: f64) -> Region {
    let parent = guard.parent().clone();
    let collar = parent.collar_width();
    let g_guard = guard.clone();
    let g = move |x: &[f64]| {
        let tube = g_guard.distance(x) - rho;
        let excursion = dist(x, &parent.retract_unbounded(x)) - collar;
        tube.max(excursion)
    };
    let bounds = guard
        .bounding_box()
        .expanded(rho)
        .intersection(&guard.parent().bounding_box().expanded(collar));
    let r_guard = guard.clone();
    let slack = guard.carrier_slack();
    let retraction = move |x: &[f64]| {
        if r_guard.distance(x) <= rho {
            return x.to_vec();
        }
        let p = r_guard.nearest_point(x);
        let d = dist(x, &p);
        let reach = (rho + slack) * (1.0 - 1e-12);
        p.iter()
            .zip(x)
            .map(|(a, b)| a + (b - a) * reach / d)
            .collect()
    };
    Region::with_retraction(
        Shape::Sublevel {
            g: Arc::new(g),
            bounds,
        },
        Arc::new(retraction),
    )
    .expect("thickening of a valid guard is a valid region")
}
