//! Executions of a hybrid system: flow with the original field until the
//! guard is hit, then jump through a selected reset branch.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::guard::CONTAINMENT_TOL;
use crate::hybrid::{HybridError, HybridSystem, ModeSpec};
use crate::vecmath::{add_scaled, norm};

/// Guard distance at or below which a point counts as on the guard.
pub const EVENT_DISTANCE: f64 = 1e-12;
/// Largest admissible guard distance of a jump's pre-point.
pub const JUMP_TOL: f64 = 1e-8;

/// How a branch is picked among those enabled at a jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchPolicy {
    /// The first enabled branch in declaration order.
    #[default]
    Priority,
    /// A uniformly random enabled branch from a seeded stream.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecutionLimits {
    pub step: f64,
    pub max_jumps: usize,
    pub zeno_dt: f64,
    pub event_time_tol: f64,
}

impl Default for ExecutionLimits {
    fn default() -> Self {
        ExecutionLimits {
            step: 1e-3,
            max_jumps: 1000,
            zeno_dt: 1e-9,
            event_time_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    Horizon,
    MaxJumps,
    ZenoSuspected,
    FlowEquilibriumReached,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSegment {
    pub mode: String,
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Jump {
    pub time: f64,
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
    pub branch: usize,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionTrace {
    pub segments: Vec<TraceSegment>,
    pub jumps: Vec<Jump>,
    pub termination: Termination,
}

impl ExecutionTrace {
    /// Time-ordered rows `time, mode_id, coordinates...`, tab-separated.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("time\tmode_id\tcoordinates\n");
        for s in &self.segments {
            for (t, p) in s.times.iter().zip(&s.points) {
                let _ = write!(out, "{t}\t{}", s.mode);
                for c in p {
                    let _ = write!(out, "\t{c}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn end_time(&self) -> f64 {
        self.segments
            .last()
            .and_then(|s| s.times.last().copied())
            .unwrap_or(0.0)
    }
}

fn rk4(mode: &ModeSpec, x: &[f64], h: f64) -> Result<Vec<f64>, HybridError> {
    let eval = |p: &[f64]| {
        mode.field.eval(p).map_err(|source| HybridError::Field {
            mode: mode.id.clone(),
            source,
        })
    };
    let k1 = eval(x)?;
    let k2 = eval(&add_scaled(x, h / 2.0, &k1))?;
    let k3 = eval(&add_scaled(x, h / 2.0, &k2))?;
    let k4 = eval(&add_scaled(x, h, &k3))?;
    Ok(x.iter()
        .enumerate()
        .map(|(i, v)| v + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn leaves(mode: &ModeSpec, y: &[f64]) -> bool {
    !mode.region.includes(y)
        && crate::vecmath::dist(y, &mode.region.retract_unbounded(y)) > CONTAINMENT_TOL
}

/// Tolerant test deciding whether a step contains an event.
fn event(mode: &ModeSpec, y: &[f64]) -> bool {
    leaves(mode, y) || mode.guard.distance(y) <= EVENT_DISTANCE
}

/// Strict test used to locate the event time within a step.
fn strict_event(mode: &ModeSpec, y: &[f64]) -> bool {
    !mode.region.includes(y) || mode.guard.distance(y) <= EVENT_DISTANCE
}

/// Simulates from `start` in mode `mode_id` up to time `horizon`.
pub fn simulate_execution(
    system: &HybridSystem,
    mode_id: &str,
    start: &[f64],
    horizon: f64,
    policy: BranchPolicy,
    limits: &ExecutionLimits,
) -> Result<ExecutionTrace, HybridError> {
    let mut mode = system.require(mode_id)?;
    let in_flow_set = start.len() == mode.dim()
        && !leaves(mode, start)
        && mode.guard.distance(start) > EVENT_DISTANCE;
    if !in_flow_set {
        return Err(HybridError::StartNotInFlowSet {
            mode: mode_id.to_string(),
            point: start.to_vec(),
        });
    }
    let mut rng = match policy {
        BranchPolicy::Random { seed } => Some(rand_chacha::ChaCha8Rng::seed_from_u64(seed)),
        BranchPolicy::Priority => None,
    };
    let mut t = 0.0;
    let mut x = start.to_vec();
    let mut segment = TraceSegment {
        mode: mode.id.clone(),
        times: vec![t],
        points: vec![x.clone()],
    };
    let mut segments = Vec::new();
    let mut jumps: Vec<Jump> = Vec::new();
    let mut last_jump = 0.0;

    let termination = loop {
        if t >= horizon {
            break Termination::Horizon;
        }
        let speed = mode
            .field
            .eval(&x)
            .map(|v| norm(&v))
            .map_err(|source| HybridError::Field {
                mode: mode.id.clone(),
                source,
            })?;
        if speed == 0.0 {
            break Termination::FlowEquilibriumReached;
        }
        let h = limits.step.min(horizon - t);
        let y = rk4(mode, &x, h)?;
        if !event(mode, &y) {
            t += h;
            x = mode.region.retract_unbounded(&y);
            segment.times.push(t);
            segment.points.push(x.clone());
            continue;
        }

        // Bisect for the first time at which the event predicate holds.
        let (mut lo, mut hi) = (0.0, h);
        while hi - lo > limits.event_time_tol {
            let mid = 0.5 * (lo + hi);
            if strict_event(mode, &rk4(mode, &x, mid)?) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let raw = rk4(mode, &x, hi)?;
        let pre = mode.region.retract_unbounded(&raw);
        let excursion = crate::vecmath::dist(&raw, &pre);
        let d = mode.guard.distance(&pre);
        if d > JUMP_TOL || excursion > mode.region.collar_width() / 2.0 {
            return Err(HybridError::ExcessiveDrift {
                mode: mode.id.clone(),
                point: pre,
                distance: d,
            });
        }
        t += hi;
        segment.times.push(t);
        segment.points.push(pre.clone());

        let enabled: Vec<usize> = system.branches_from(&mode.id).map(|(k, _)| k).collect();
        if enabled.is_empty() {
            return Err(HybridError::NoEnabledBranch {
                mode: mode.id.clone(),
                point: pre,
            });
        }
        let pick = match rng.as_mut() {
            Some(r) => enabled[r.random_range(0..enabled.len())],
            None => enabled[0],
        };
        let branch = &system.resets()[pick];
        let target = system.require(&branch.target)?;
        let post = target.region.retract_unbounded(&branch.apply(&pre));
        jumps.push(Jump {
            time: t,
            pre,
            post: post.clone(),
            branch: pick,
            source: mode.id.clone(),
            target: target.id.clone(),
        });
        segments.push(std::mem::replace(
            &mut segment,
            TraceSegment {
                mode: target.id.clone(),
                times: vec![t],
                points: vec![post.clone()],
            },
        ));
        let inter_jump = t - last_jump;
        last_jump = t;
        mode = target;
        x = post;
        if jumps.len() > 1 && inter_jump < limits.zeno_dt {
            break Termination::ZenoSuspected;
        }
        if jumps.len() >= limits.max_jumps {
            break Termination::MaxJumps;
        }
    };
    segments.push(segment);
    Ok(ExecutionTrace {
        segments,
        jumps,
        termination,
    })
}
