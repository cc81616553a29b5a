//! Vector fields on Euclidean space and their Lipschitz estimates.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::region::{Aabb, MapFn};
use crate::vecmath::{dist, norm};

/// Jacobian callback, row-major: `J[i][j] = dF_i / dx_j`.
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

/// Safety factor applied to sampled Lipschitz ratios.
pub const LIPSCHITZ_SAFETY: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("field evaluation is not finite at {0:?}")]
    NonFinite(Vec<f64>),
    #[error("analytic Jacobian disagrees with finite differences at {point:?} (relative error {rel_err:.2e})")]
    JacobianMismatch { point: Vec<f64>, rel_err: f64 },
}

#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    eval: MapFn,
    jacobian: Option<JacobianFn>,
    lipschitz_hint: Option<f64>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("dim", &self.dim)
            .field("jacobian", &self.jacobian.is_some())
            .field("lipschitz_hint", &self.lipschitz_hint)
            .finish()
    }
}

impl VectorField {
    pub fn new(dim: usize, eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        VectorField {
            dim,
            eval: Arc::new(eval),
            jacobian: None,
            lipschitz_hint: None,
        }
    }

    pub fn from_map(dim: usize, eval: MapFn) -> Self {
        VectorField {
            dim,
            eval,
            jacobian: None,
            lipschitz_hint: None,
        }
    }

    pub fn with_jacobian(
        mut self,
        jacobian: impl Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn with_lipschitz_hint(mut self, hint: f64) -> Self {
        self.lipschitz_hint = Some(hint);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz_hint
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    /// Evaluates the field, rejecting wrong dimensions and non-finite output.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        if x.len() != self.dim {
            return Err(FieldError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let v = (self.eval)(x);
        if v.len() != self.dim {
            return Err(FieldError::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(FieldError::NonFinite(x.to_vec()));
        }
        Ok(v)
    }

    /// Central finite-difference Jacobian.
    pub fn jacobian_fd(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, FieldError> {
        let n = self.dim;
        let mut jac = vec![vec![0.0; n]; n];
        let mut xp = x.to_vec();
        for j in 0..n {
            let step = 1e-6 * x[j].abs().max(1.0);
            xp[j] = x[j] + step;
            let fp = self.eval(&xp)?;
            xp[j] = x[j] - step;
            let fm = self.eval(&xp)?;
            xp[j] = x[j];
            for i in 0..n {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * step);
            }
        }
        Ok(jac)
    }

    /// Analytic Jacobian when supplied, finite differences otherwise.
    pub fn jacobian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, FieldError> {
        match &self.jacobian {
            Some(j) => Ok(j(x)),
            None => self.jacobian_fd(x),
        }
    }

    /// Compares the analytic Jacobian to finite differences at random points
    /// of `bbox`; no-op without an analytic Jacobian.
    pub fn check_jacobian(&self, bbox: &Aabb, points: usize, seed: u64) -> Result<(), FieldError> {
        let Some(analytic) = &self.jacobian else {
            return Ok(());
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..points {
            let x = random_point(&mut rng, bbox);
            let a = analytic(&x);
            let fd = self.jacobian_fd(&x)?;
            let scale = fd
                .iter()
                .flatten()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
                .max(1.0);
            let err = a
                .iter()
                .flatten()
                .zip(fd.iter().flatten())
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt()
                / scale;
            if err > 1e-5 {
                return Err(FieldError::JacobianMismatch {
                    point: x,
                    rel_err: err,
                });
            }
        }
        Ok(())
    }
}

pub(crate) fn random_point<R: Rng>(rng: &mut R, bbox: &Aabb) -> Vec<f64> {
    bbox.lo
        .iter()
        .zip(&bbox.hi)
        .map(|(l, h)| if l < h { rng.random_range(*l..=*h) } else { *l })
        .collect()
}

/// Sampled Lipschitz constant of `field` over `bbox`, times
/// [`LIPSCHITZ_SAFETY`]. Half of the pairs are spread over the box, half are
/// close pairs probing local slopes. Returns the field's hint when it has one.
pub fn lipschitz_estimate(
    field: &VectorField,
    bbox: &Aabb,
    n_samples: usize,
    seed: u64,
) -> Result<f64, FieldError> {
    if let Some(hint) = field.lipschitz_hint {
        return Ok(hint);
    }
    let n = n_samples.max(100);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let local = 1e-4 * bbox.diagonal().max(1e-12);
    let mut best: f64 = 0.0;
    for k in 0..n {
        let x = random_point(&mut rng, bbox);
        let y = if k % 2 == 0 {
            random_point(&mut rng, bbox)
        } else {
            x.iter()
                .map(|v| v + rng.random_range(-local..=local))
                .collect()
        };
        let d = dist(&x, &y);
        if d == 0.0 {
            continue;
        }
        let fx = field.eval(&x)?;
        let fy = field.eval(&y)?;
        let diff: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a - b).collect();
        best = best.max(norm(&diff) / d);
    }
    Ok(LIPSCHITZ_SAFETY * best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Aabb {
        Aabb::new(vec![-1.0, -1.0], vec![1.0, 1.0])
    }

    #[test]
    fn linear_field_lipschitz() {
        let f = VectorField::new(2, |x| x.to_vec());
        let l = lipschitz_estimate(&f, &square(), 200, 0).unwrap();
        assert!((2.0..=2.2).contains(&l), "L = {l}");
    }

    #[test]
    fn constant_field_and_hint() {
        let c = VectorField::new(2, |_| vec![1.0, -2.0]);
        assert_eq!(lipschitz_estimate(&c, &square(), 100, 0).unwrap(), 0.0);
        let h = VectorField::new(2, |x| x.to_vec()).with_lipschitz_hint(5.0);
        assert_eq!(lipschitz_estimate(&h, &square(), 100, 0).unwrap(), 5.0);
    }

    #[test]
    fn nan_is_reported() {
        let f = VectorField::new(1, |x| vec![x[0].ln()]);
        assert!(matches!(f.eval(&[-1.0]), Err(FieldError::NonFinite(_))));
        let bbox = Aabb::new(vec![-1.0], vec![1.0]);
        assert!(lipschitz_estimate(&f, &bbox, 100, 0).is_err());
    }

    #[test]
    fn evaluation_is_deterministic() {
        let f = VectorField::new(2, |x| vec![x[0].sin() * x[1], (x[0] * x[1]).exp()]);
        let a = f.eval(&[0.3, -0.7]).unwrap();
        let b = f.eval(&[0.3, -0.7]).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn analytic_jacobian_check() {
        let good = VectorField::new(2, |x| vec![x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]])
            .with_jacobian(|x| vec![vec![2.0 * x[0], -2.0 * x[1]], vec![2.0 * x[1], 2.0 * x[0]]]);
        good.check_jacobian(&square(), 100, 1).unwrap();
        let bad = VectorField::new(2, |x| vec![x[0], x[1]])
            .with_jacobian(|_| vec![vec![1.0, 0.0], vec![0.0, -1.0]]);
        assert!(matches!(
            bad.check_jacobian(&square(), 100, 1),
            Err(FieldError::JacobianMismatch { .. })
        ));
    }
}
