//! The rescaled field `alpha * F` and its time-`tau` map.
//!
//! `alpha` vanishes exactly on the guard, so the rescaled flow freezes the
//! guard and reproduces the original orbits, reparametrized, elsewhere. The
//! flow is extended to the region's collar through the region retraction:
//! the generator at `x` is `alpha(r(x)) * F(r(x))`, and every integration
//! step is followed by a retraction back onto the region.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{lipschitz_estimate, FieldError, VectorField};
use crate::guard::GuardSet;
use crate::region::{Region, RegionError};
use crate::vecmath::{add_scaled, dist, scale};

/// `integrator_step = tau / DEFAULT_STEPS_PER_TAU` unless configured.
pub const DEFAULT_STEPS_PER_TAU: f64 = 50.0;
/// `tau = TAU_FACTOR / L(alpha F)`.
pub const TAU_FACTOR: f64 = 0.1;
/// Sampled pairs used to estimate `L(alpha F)`.
pub const TAU_LIPSCHITZ_SAMPLES: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("trajectory drifted {drift:.3e} off the region at {point:?} (allowed {allowed:.3e})")]
    ExcessiveDrift {
        point: Vec<f64>,
        drift: f64,
        allowed: f64,
    },
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
}

/// Profile turning the guard distance `d` into the rescaling factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// `alpha = d`
    #[default]
    Distance,
    /// `alpha = d^2 / (1 + d)`
    Quadratic,
}

impl Profile {
    pub fn apply(self, d: f64) -> f64 {
        match self {
            Profile::Distance => d,
            Profile::Quadratic => d * d / (1.0 + d),
        }
    }
}

/// The canonical rescaling factor: the distance to the guard.
pub fn alpha(guard: &GuardSet, x: &[f64]) -> Result<f64, RegionError> {
    guard.guard_distance(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaledFlowConfig {
    pub tau: f64,
    pub integrator_step: f64,
    pub max_drift: f64,
}

impl RescaledFlowConfig {
    /// Default step `tau / 50` and drift allowance of half the collar.
    pub fn new(tau: f64, region: &Region) -> Self {
        RescaledFlowConfig {
            tau,
            integrator_step: tau / DEFAULT_STEPS_PER_TAU,
            max_drift: region.collar_width() / 2.0,
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.tau > 0.0 && self.integrator_step > 0.0 && self.max_drift > 0.0) {
            return Err(FlowError::InvalidConfig(format!(
                "all parameters must be positive: {self:?}"
            )));
        }
        if self.integrator_step > self.tau {
            return Err(FlowError::InvalidConfig(format!(
                "integrator step {} exceeds tau {}",
                self.integrator_step, self.tau
            )));
        }
        Ok(())
    }

    /// Same step and drift allowance, half the time.
    pub fn halved(&self) -> Self {
        RescaledFlowConfig {
            tau: self.tau / 2.0,
            integrator_step: self.integrator_step.min(self.tau / 2.0),
            max_drift: self.max_drift,
        }
    }
}

/// `tau = 0.1 / L`, or 1 for a vanishing field.
pub fn tau_from_lipschitz(l: f64) -> f64 {
    if l > 0.0 && l.is_finite() {
        TAU_FACTOR / l
    } else {
        1.0
    }
}

/// Generator and flow of `alpha * F` on a region with a guard.
#[derive(Debug, Clone, Copy)]
pub struct RescaledFlow<'a> {
    pub field: &'a VectorField,
    pub region: &'a Region,
    pub guard: &'a GuardSet,
    pub profile: Profile,
}

impl<'a> RescaledFlow<'a> {
    pub fn new(field: &'a VectorField, region: &'a Region, guard: &'a GuardSet) -> Self {
        RescaledFlow {
            field,
            region,
            guard,
            profile: Profile::Distance,
        }
    }

    pub fn with_profile(mut self, profile: Profile) -> Self {
        self.profile = profile;
        self
    }

    pub fn alpha(&self, x: &[f64]) -> f64 {
        self.profile.apply(self.guard.distance(x))
    }

    /// `alpha(r(x)) * F(r(x))` for collar points `x`.
    pub fn rescaled_eval(&self, x: &[f64]) -> Result<Vec<f64>, FlowError> {
        let y = self.region.retract(x)?;
        let a = self.alpha(&y);
        if a == 0.0 {
            return Ok(vec![0.0; y.len()]);
        }
        Ok(scale(a, &self.field.eval(&y)?))
    }

    /// Sampled Lipschitz constant of the retraction-extended rescaled field.
    pub fn lipschitz(&self, seed: u64) -> Result<f64, FieldError> {
        let field = self.field.clone();
        let region = self.region.clone();
        let guard = self.guard.clone();
        let profile = self.profile;
        let extended = VectorField::new(self.region.dim(), move |x| {
            let y = region.retract_unbounded(x);
            let a = profile.apply(guard.distance(&y));
            match field.eval(&y) {
                Ok(v) => scale(a, &v),
                Err(_) => vec![f64::NAN; y.len()],
            }
        });
        lipschitz_estimate(
            &extended,
            &self.region.bounding_box(),
            TAU_LIPSCHITZ_SAMPLES,
            seed,
        )
    }

    /// `tau_override` if given, else `0.1 / L(alpha F)`.
    pub fn select_tau(&self, tau_override: Option<f64>, seed: u64) -> Result<f64, FlowError> {
        if let Some(t) = tau_override {
            if !(t > 0.0) {
                return Err(FlowError::InvalidConfig(format!(
                    "tau must be positive, got {t}"
                )));
            }
            return Ok(t);
        }
        Ok(tau_from_lipschitz(self.lipschitz(seed)?))
    }

    fn rk4_step(&self, y: &[f64], h: f64) -> Result<Vec<f64>, FlowError> {
        let k1 = self.rescaled_eval(y)?;
        let k2 = self.rescaled_eval(&add_scaled(y, h / 2.0, &k1))?;
        let k3 = self.rescaled_eval(&add_scaled(y, h / 2.0, &k2))?;
        let k4 = self.rescaled_eval(&add_scaled(y, h, &k3))?;
        Ok(y.iter()
            .enumerate()
            .map(|(i, v)| v + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }

    /// Integrates for `time` with steps no longer than `step`, starting from
    /// the retraction of `x`.
    pub fn flow_for(
        &self,
        x: &[f64],
        time: f64,
        step: f64,
        max_drift: f64,
    ) -> Result<Vec<f64>, FlowError> {
        let mut y = self.region.retract(x)?;
        if time == 0.0 {
            return Ok(y);
        }
        let n = (time / step).ceil().max(1.0) as usize;
        let h = time / n as f64;
        for _ in 0..n {
            let next = self.rk4_step(&y, h)?;
            let back = self.region.retract_unbounded(&next);
            let drift = dist(&next, &back);
            if drift > max_drift {
                return Err(FlowError::ExcessiveDrift {
                    point: next,
                    drift,
                    allowed: max_drift,
                });
            }
            y = back;
        }
        Ok(y)
    }

    /// The time-`tau` map, composed with the retraction.
    pub fn flow_map(&self, config: &RescaledFlowConfig, x: &[f64]) -> Result<Vec<f64>, FlowError> {
        config.validate()?;
        self.flow_for(x, config.tau, config.integrator_step, config.max_drift)
    }
}
