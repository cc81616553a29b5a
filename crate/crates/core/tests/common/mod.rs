//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;
use std::f64::consts::TAU;

/// Hand-derived `(name, sum of ind(-F), chi(S), xi)` for every zoo scenario.
pub const ZOO_TABLE: &[(&str, i64, i64, i64)] = &[
    ("disk-source", 1, 1, 0),
    ("disk-sink", 1, 1, 0),
    ("disk-saddle", -1, 1, 2),
    ("annulus-outflow", 0, 0, 0),
    ("interval-logistic", 0, 1, 1),
    ("interval-inflow", 0, 1, 1),
    ("double-point-index", 2, 1, -1),
    ("bouncing-ball", 0, 1, 1),
    ("mixed-dimension", -1, 2, 3),
];

/// Zoo scenarios whose guard attracts the rescaled flow.
pub const INFLOWING: &[&str] = &[
    "disk-source",
    "annulus-outflow",
    "interval-inflow",
    "bouncing-ball",
];

/// Winding number of `f` around the circle `(cx, cy, r)` from `n` uniform
/// samples, summing principal angle increments.
pub fn winding_oracle(
    f: impl Fn(f64, f64) -> (f64, f64),
    cx: f64,
    cy: f64,
    r: f64,
    n: usize,
) -> i64 {
    let angle = |k: usize| {
        let t = TAU * k as f64 / n as f64;
        let (u, v) = f(cx + r * t.cos(), cy + r * t.sin());
        v.atan2(u)
    };
    let mut total = 0.0;
    let mut prev = angle(0);
    for k in 1..=n {
        let a = angle(k % n);
        let mut d = a - prev;
        while d > std::f64::consts::PI {
            d -= TAU;
        }
        while d < -std::f64::consts::PI {
            d += TAU;
        }
        total += d;
        prev = a;
    }
    (total / TAU).round() as i64
}

/// Euler characteristic of the union of closed grid squares of side `h` whose
/// centers satisfy `inside`, by direct vertex/edge/face counting.
pub fn pixel_euler(inside: impl Fn(f64, f64) -> bool, lo: [f64; 2], hi: [f64; 2], h: f64) -> i64 {
    let i0 = (lo[0] / h).floor() as i64 - 1;
    let i1 = (hi[0] / h).ceil() as i64 + 1;
    let j0 = (lo[1] / h).floor() as i64 - 1;
    let j1 = (hi[1] / h).ceil() as i64 + 1;
    let mut faces = HashSet::new();
    for i in i0..i1 {
        for j in j0..j1 {
            if inside((i as f64 + 0.5) * h, (j as f64 + 0.5) * h) {
                faces.insert((i, j));
            }
        }
    }
    let mut vertices = HashSet::new();
    let mut h_edges = HashSet::new();
    let mut v_edges = HashSet::new();
    for &(i, j) in &faces {
        for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            vertices.insert((i + a, j + b));
        }
        h_edges.insert((i, j));
        h_edges.insert((i, j + 1));
        v_edges.insert((i, j));
        v_edges.insert((i + 1, j));
    }
    vertices.len() as i64 - (h_edges.len() + v_edges.len()) as i64 + faces.len() as i64
}

/// Solution of `x' = x (1 - x)` from `x0` at time `t`.
pub fn logistic(x0: f64, t: f64) -> f64 {
    x0 / (x0 + (1.0 - x0) * (-t).exp())
}

/// Distance from `p` to the segment `ab`.
pub fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}
