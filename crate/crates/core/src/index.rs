//! Isolated zeros of vector fields and their Hopf indices.
//!
//! A declared zero is polished by damped Newton iteration, isolated by
//! sampling the field on a small sphere around it, and assigned the degree of
//! the normalized field on that sphere: the sign change in dimension 1, an
//! adaptive winding number in dimension 2, and the Jacobian determinant sign
//! for nondegenerate zeros in dimension 3 and up. A zero that is an isolated
//! point of a 0-dimensional mode has index +1.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::field::{FieldError, VectorField};
use crate::guard::GuardSet;
use crate::region::Region;
use crate::vecmath::{dist, norm, scale, sphere_directions};
use crate::winding::{adaptive_winding, uniform_params, WindingError, MAX_WINDING_SAMPLES};

/// Residual a polished zero must reach.
pub const ZERO_TOL: f64 = 1e-9;
/// The field on the isolation sphere must exceed `SPHERE_MARGIN * ZERO_TOL`.
pub const SPHERE_MARGIN: f64 = 10.0;
/// Relative determinant threshold below which a 3-D+ zero counts as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-6;

const MAX_NEWTON_ITERATIONS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("no zero within the trust radius: residual {residual:.3e} at {point:?}")]
    NotAZero { point: Vec<f64>, residual: f64 },
    #[error("zero is not isolated: field norm {min_norm:.3e} on the sphere")]
    NotIsolated { min_norm: f64 },
    #[error("isolation sphere leaves the flow set near {0:?}")]
    SphereLeavesFlowSet(Vec<f64>),
    #[error("degenerate zero in dimension {dim}: |det| = {det:.3e} vs scale {scale:.3e}")]
    DegenerateHighDim { dim: usize, det: f64, scale: f64 },
    #[error("winding unresolved after {0} samples")]
    WindingUnresolved(usize),
    #[error("field vanishes on the index sphere at {0:?}")]
    ZeroOnSphere(Vec<f64>),
    #[error("isolation balls of zeros {0} and {1} overlap")]
    OverlappingIsolationBalls(usize, usize),
    #[error("isolation radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl From<WindingError<FieldError>> for IndexError {
    fn from(e: WindingError<FieldError>) -> Self {
        match e {
            WindingError::Vanishes { point, .. } => IndexError::ZeroOnSphere(point),
            WindingError::Unresolved { samples } => IndexError::WindingUnresolved(samples),
            WindingError::Inner(f) => IndexError::Field(f),
        }
    }
}

/// Certified isolated zero with its Hopf indices for `F` and `-F`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroCertificate {
    pub z: Vec<f64>,
    pub isolation_radius: f64,
    pub min_norm_on_sphere: f64,
    pub index_of_f: i32,
    pub index_of_neg_f: i32,
    pub dim: usize,
}

/// The open flow set `region \ guard`, used to check that isolation spheres
/// stay away from the guard and inside the region.
#[derive(Debug, Clone, Copy)]
pub struct FlowSet<'a> {
    pub region: &'a Region,
    pub guard: &'a GuardSet,
}

/// Number of sphere samples used for the isolation check.
pub fn sphere_sample_count(dim: usize) -> usize {
    match dim {
        0 => 0,
        1 => 2,
        2 => 256,
        _ => 10_000,
    }
}

fn solve(jac: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let m = DMatrix::from_fn(n, n, |i, j| jac[i][j]);
    let b = DVector::from_column_slice(rhs);
    if let Some(x) = m.clone().lu().solve(&b) {
        if x.iter().all(|v| v.is_finite()) {
            return Some(x.iter().copied().collect());
        }
    }
    // Levenberg-style fallback for singular Jacobians.
    let mt = m.transpose();
    let reg = &mt * &m + DMatrix::identity(n, n) * 1e-12;
    reg.lu()
        .solve(&(&mt * &b))
        .map(|x| x.iter().copied().collect())
}

/// Damped Newton iteration from `z0`; fails if it leaves the ball of radius `trust`.
pub fn polish_zero(field: &VectorField, z0: &[f64], trust: f64) -> Result<Vec<f64>, IndexError> {
    let mut z = z0.to_vec();
    let mut fz = field.eval(&z)?;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let res = norm(&fz);
        if res <= ZERO_TOL {
            break;
        }
        let jac = field.jacobian_fd(&z)?;
        let neg: Vec<f64> = fz.iter().map(|v| -v).collect();
        let Some(step) = solve(&jac, &neg) else { break };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = z.iter().zip(&step).map(|(a, s)| a + lambda * s).collect();
            let ft = field.eval(&trial)?;
            if norm(&ft) < res {
                z = trial;
                fz = ft;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted || dist(&z, z0) > trust {
            break;
        }
    }
    let residual = norm(&fz);
    if residual > ZERO_TOL || dist(&z, z0) > trust {
        return Err(IndexError::NotAZero { point: z, residual });
    }
    Ok(z)
}

/// Polishes `z0`, checks the isolation sphere of radius `radius`, and computes
/// both indices.
pub fn certify_isolated_zero(
    field: &VectorField,
    z0: &[f64],
    radius: f64,
    flow_set: Option<FlowSet<'_>>,
) -> Result<ZeroCertificate, IndexError> {
    if !(radius > 0.0) {
        return Err(IndexError::InvalidRadius(radius));
    }
    let dim = field.dim();
    if z0.len() != dim {
        return Err(FieldError::DimensionMismatch {
            expected: dim,
            found: z0.len(),
        }
        .into());
    }
    let z = polish_zero(field, z0, radius)?;
    let directions = sphere_directions(dim, sphere_sample_count(dim));
    let sphere: Vec<Vec<f64>> = directions
        .iter()
        .map(|d| z.iter().zip(d).map(|(c, u)| c + radius * u).collect())
        .collect();

    if let Some(fs) = flow_set {
        if fs.guard.distance(&z) <= radius {
            return Err(IndexError::SphereLeavesFlowSet(z));
        }
        for p in &sphere {
            if !fs.region.includes(p) || fs.guard.distance(p) == 0.0 {
                return Err(IndexError::SphereLeavesFlowSet(p.clone()));
            }
        }
    }

    let mut min_norm = f64::INFINITY;
    for p in &sphere {
        min_norm = min_norm.min(norm(&field.eval(p)?));
    }
    if dim > 0 && min_norm < SPHERE_MARGIN * ZERO_TOL {
        return Err(IndexError::NotIsolated { min_norm });
    }
    let index_of_f = hopf_index(field, &z, radius, 1)?;
    let index_of_neg_f = hopf_index(field, &z, radius, -1)?;
    Ok(ZeroCertificate {
        z,
        isolation_radius: radius,
        min_norm_on_sphere: if dim == 0 { 0.0 } else { min_norm },
        index_of_f,
        index_of_neg_f,
        dim,
    })
}

fn signum(v: f64, at: &[f64]) -> Result<i32, IndexError> {
    if v > 0.0 {
        Ok(1)
    } else if v < 0.0 {
        Ok(-1)
    } else {
        Err(IndexError::ZeroOnSphere(at.to_vec()))
    }
}

/// Hopf index of `sign * F` at `z` on the sphere of radius `radius`.
pub fn hopf_index(
    field: &VectorField,
    z: &[f64],
    radius: f64,
    sign: i32,
) -> Result<i32, IndexError> {
    let s = if sign < 0 { -1.0 } else { 1.0 };
    match field.dim() {
        0 => Ok(1),
        1 => {
            let right = [z[0] + radius];
            let left = [z[0] - radius];
            let r = signum(s * field.eval(&right)?[0], &right)?;
            let l = signum(s * field.eval(&left)?[0], &left)?;
            Ok((r - l) / 2)
        }
        2 => {
            use std::f64::consts::TAU;
            let curve = |t: f64| {
                let a = TAU * t;
                vec![z[0] + radius * a.cos(), z[1] + radius * a.sin()]
            };
            let w = adaptive_winding(
                curve,
                &uniform_params(sphere_sample_count(2)),
                |p: &[f64]| field.eval(p).map(|v| scale(s, &v)),
                f64::MIN_POSITIVE,
                MAX_WINDING_SAMPLES,
            )?;
            Ok(w.winding as i32)
        }
        n => {
            let jac = field.jacobian(z)?;
            let m = DMatrix::from_fn(n, n, |i, j| s * jac[i][j]);
            let det = m.determinant();
            let scale = m.norm().powi(n as i32);
            if !(det.abs() >= DEGENERACY_THRESHOLD * scale) || scale == 0.0 {
                return Err(IndexError::DegenerateHighDim { dim: n, det, scale });
            }
            Ok(if det > 0.0 { 1 } else { -1 })
        }
    }
}

/// Sum of the indices of `-F` over certified zeros with disjoint isolation balls.
pub fn index_sum_lhs(zeros: &[ZeroCertificate]) -> Result<i64, IndexError> {
    for (i, a) in zeros.iter().enumerate() {
        for (j, b) in zeros.iter().enumerate().skip(i + 1) {
            if a.z.len() == b.z.len() && dist(&a.z, &b.z) < a.isolation_radius + b.isolation_radius
            {
                return Err(IndexError::OverlappingIsolationBalls(i, j));
            }
        }
    }
    Ok(zeros.iter().map(|c| c.index_of_neg_f as i64).sum())
}
