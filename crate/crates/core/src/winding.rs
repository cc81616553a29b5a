//! Adaptive winding numbers of planar direction fields along closed curves.
//!
//! Samples are refined by bisection until consecutive directions differ by
//! less than a quarter turn and the midpoint of each interval agrees with its
//! endpoints; the wrapped angle steps then sum to an exact multiple of `2 pi`.

use std::f64::consts::{FRAC_PI_2, TAU};

use thiserror::Error;

use crate::vecmath::{norm, wrap_angle};

/// Refinement cap on the number of evaluated samples.
pub const MAX_WINDING_SAMPLES: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindingError<E> {
    #[error("vector of norm {norm:.3e} at {point:?} is below the threshold")]
    Vanishes { point: Vec<f64>, norm: f64 },
    #[error("winding unresolved after {samples} samples")]
    Unresolved { samples: usize },
    #[error(transparent)]
    Inner(E),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    pub winding: i64,
    pub samples: usize,
    pub min_norm: f64,
}

/// Winding number of `vector` along the closed curve `curve(t)`, `t` in `[0, 1]`.
///
/// `initial` lists parameters in `[0, 1)` sampled before refinement.
/// `vector` may fail; vectors with norm below `min_norm` abort with
/// [`WindingError::Vanishes`].
pub fn adaptive_winding<C, V, E>(
    curve: C,
    initial: &[f64],
    mut vector: V,
    min_norm: f64,
    cap: usize,
) -> Result<Winding, WindingError<E>>
where
    C: Fn(f64) -> Vec<f64>,
    V: FnMut(&[f64]) -> Result<Vec<f64>, E>,
{
    let mut samples = 0usize;
    let mut smallest = f64::INFINITY;
    let mut angle_at = |t: f64, samples: &mut usize| -> Result<f64, WindingError<E>> {
        let p = curve(t);
        let v = vector(&p).map_err(WindingError::Inner)?;
        *samples += 1;
        let n = norm(&v);
        smallest = smallest.min(n);
        if !(n >= min_norm) || n == 0.0 {
            return Err(WindingError::Vanishes { point: p, norm: n });
        }
        Ok(v[1].atan2(v[0]))
    };

    let mut params: Vec<f64> = initial.to_vec();
    if params.is_empty() {
        params.push(0.0);
    }
    let mut angles = Vec::with_capacity(params.len());
    for &t in &params {
        angles.push(angle_at(t, &mut samples)?);
    }
    params.push(params[0] + 1.0);
    angles.push(angles[0]);

    let mut total = 0.0;
    for w in 0..params.len() - 1 {
        // Depth-first refinement of [params[w], params[w+1]], left to right.
        let mut stack = vec![(params[w], angles[w], params[w + 1], angles[w + 1])];
        while let Some((ta, aa, tb, ab)) = stack.pop() {
            if samples >= cap {
                return Err(WindingError::Unresolved { samples });
            }
            let tm = 0.5 * (ta + tb);
            let am = angle_at(tm.rem_euclid(1.0), &mut samples)?;
            let step = wrap_angle(ab - aa);
            let left = wrap_angle(am - aa);
            let right = wrap_angle(ab - am);
            // Accept only when the midpoint confirms a small, consistent turn.
            if left.abs() < FRAC_PI_2
                && right.abs() < FRAC_PI_2
                && (left + right - step).abs() < 1e-9
            {
                total += left + right;
                continue;
            }
            stack.push((tm, am, tb, ab));
            stack.push((ta, aa, tm, am));
        }
    }
    let turns = total / TAU;
    let winding = turns.round();
    debug_assert!((turns - winding).abs() < 1e-6);
    Ok(Winding {
        winding: winding as i64,
        samples,
        min_norm: smallest,
    })
}

/// Uniform parameters `k / n` for `k` in `0..n`.
pub fn uniform_params(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / n as f64).collect()
}

/// Closed polyline (first vertex repeated at the end) parametrized by arc length.
#[derive(Debug, Clone)]
pub struct PolylineCurve {
    vertices: Vec<[f64; 2]>,
    cumulative: Vec<f64>,
}

impl PolylineCurve {
    pub fn new(vertices: &[[f64; 2]]) -> Self {
        let mut cumulative = vec![0.0];
        for w in vertices.windows(2) {
            let d = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
            cumulative.push(cumulative.last().unwrap() + d);
        }
        PolylineCurve {
            vertices: vertices.to_vec(),
            cumulative,
        }
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Parameters of the vertices (excluding the closing repeat).
    pub fn vertex_params(&self) -> Vec<f64> {
        let len = self.length();
        self.cumulative[..self.cumulative.len() - 1]
            .iter()
            .map(|c| c / len)
            .collect()
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        let s = t.rem_euclid(1.0) * self.length();
        let i = match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(self.vertices.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.vertices.len() - 2),
        };
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        let u = if seg > 0.0 {
            (s - self.cumulative[i]) / seg
        } else {
            0.0
        };
        let (a, b) = (self.vertices[i], self.vertices[i + 1]);
        vec![a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn circle(t: f64) -> Vec<f64> {
        vec![(TAU * t).cos(), (TAU * t).sin()]
    }

    fn power(k: u32) -> impl Fn(&[f64]) -> Result<Vec<f64>, Infallible> {
        move |p: &[f64]| {
            let (mut re, mut im) = (1.0, 0.0);
            for _ in 0..k {
                let r = re * p[0] - im * p[1];
                im = re * p[1] + im * p[0];
                re = r;
            }
            Ok(vec![re, im])
        }
    }

    #[test]
    fn powers_of_z_from_a_coarse_start() {
        for k in 1..=5 {
            // Four initial samples force refinement for k >= 1.
            let w = adaptive_winding(
                circle,
                &uniform_params(4),
                power(k),
                1e-12,
                MAX_WINDING_SAMPLES,
            )
            .unwrap();
            assert_eq!(w.winding, k as i64);
        }
    }

    #[test]
    fn conjugate_winds_backwards() {
        let w = adaptive_winding(
            circle,
            &uniform_params(8),
            |p: &[f64]| Ok::<_, Infallible>(vec![p[0], -p[1]]),
            1e-12,
            MAX_WINDING_SAMPLES,
        )
        .unwrap();
        assert_eq!(w.winding, -1);
    }

    #[test]
    fn cap_is_reported() {
        // A nearby pole outside the circle forces deep local refinement.
        let (c, s) = ((TAU * 0.3).cos(), (TAU * 0.3).sin());
        let r = 1.0 + 1e-6;
        let near = move |p: &[f64]| Ok::<_, Infallible>(vec![p[0] - r * c, p[1] - r * s]);
        let err = adaptive_winding(circle, &uniform_params(4), near, 1e-12, 16).unwrap_err();
        assert!(matches!(err, WindingError::Unresolved { .. }));
    }

    #[test]
    fn vanishing_vector_is_reported() {
        let err = adaptive_winding(
            circle,
            &uniform_params(4),
            |p: &[f64]| Ok::<_, Infallible>(vec![p[0] - 1.0, p[1]]),
            1e-9,
            MAX_WINDING_SAMPLES,
        )
        .unwrap_err();
        assert!(matches!(err, WindingError::Vanishes { .. }));
    }

    #[test]
    fn polyline_square() {
        let sq = PolylineCurve::new(&[
            [1.0, 1.0],
            [-1.0, 1.0],
            [-1.0, -1.0],
            [1.0, -1.0],
            [1.0, 1.0],
        ]);
        assert_eq!(sq.length(), 8.0);
        assert_eq!(sq.point(0.125), vec![0.0, 1.0]);
        let w = adaptive_winding(
            |t| sq.point(t),
            &sq.vertex_params(),
            |p: &[f64]| Ok::<_, Infallible>(p.to_vec()),
            1e-12,
            MAX_WINDING_SAMPLES,
        )
        .unwrap();
        assert_eq!(w.winding, 1);
    }
}
