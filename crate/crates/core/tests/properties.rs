mod common;

use std::convert::Infallible;
use std::f64::consts::TAU;

use common::{pixel_euler, winding_oracle};
use hybrid_hopf::cubical::euler_stable;
use hybrid_hopf::expr::ScalarExpr;
use hybrid_hopf::field::VectorField;
use hybrid_hopf::guard::{Carrier, GuardSet};
use hybrid_hopf::guard_index::{circle_loop, polygon_winding};
use hybrid_hopf::index::hopf_index;
use hybrid_hopf::region::Region;
use hybrid_hopf::semiflow::{RescaledFlow, RescaledFlowConfig};
use hybrid_hopf::winding::{adaptive_winding, uniform_params, MAX_WINDING_SAMPLES};
use proptest::prelude::*;

fn circle(r: f64) -> impl Fn(f64) -> Vec<f64> {
    move |t| vec![r * (TAU * t).cos(), r * (TAU * t).sin()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_index_is_determinant_sign(
        m in proptest::collection::vec(-2.0f64..2.0, 4),
    ) {
        let det = m[0] * m[3] - m[1] * m[2];
        prop_assume!(det.abs() > 0.05);
        let (a, b, c, d) = (m[0], m[1], m[2], m[3]);
        let field = VectorField::new(2, move |p: &[f64]| vec![a * p[0] + b * p[1], c * p[0] + d * p[1]]);
        let lib = hopf_index(&field, &[0.0, 0.0], 0.3, 1).unwrap() as i64;
        let neg = hopf_index(&field, &[0.0, 0.0], 0.3, -1).unwrap() as i64;
        let oracle = winding_oracle(|x, y| (a * x + b * y, c * x + d * y), 0.0, 0.0, 0.3, 10_000);
        prop_assert_eq!(lib, det.signum() as i64);
        prop_assert_eq!(lib, oracle);
        prop_assert_eq!(neg, lib);
    }

    #[test]
    fn winding_counts_enclosed_roots(
        roots in proptest::collection::vec((0.0f64..1.8, 0.0f64..TAU), 1..4),
    ) {
        prop_assume!(roots.iter().all(|(r, _)| (r - 1.0).abs() > 0.1));
        let pts: Vec<(f64, f64)> = roots.iter().map(|(r, a)| (r * a.cos(), r * a.sin())).collect();
        let inside = roots.iter().filter(|(r, _)| *r < 1.0).count() as i64;
        let product = |x: f64, y: f64| {
            pts.iter().fold((1.0, 0.0), |(u, v), (px, py)| {
                let (dx, dy) = (x - px, y - py);
                (u * dx - v * dy, u * dy + v * dx)
            })
        };
        let mut counts = Vec::new();
        for n in [16, 32] {
            let w = adaptive_winding(
                circle(1.0),
                &uniform_params(n),
                |p: &[f64]| {
                    let (u, v) = product(p[0], p[1]);
                    Ok::<_, Infallible>(vec![u, v])
                },
                f64::MIN_POSITIVE,
                MAX_WINDING_SAMPLES,
            )
            .unwrap();
            counts.push(w.winding);
        }
        prop_assert_eq!(counts[0], inside);
        prop_assert_eq!(counts[1], inside);
        prop_assert_eq!(winding_oracle(product, 0.0, 0.0, 1.0, 10_000), inside);
    }

    #[test]
    fn polygon_winding_matches_angle_sum(
        radii in proptest::collection::vec(0.5f64..1.5, 5..12),
        p in (-1.6f64..1.6, -1.6f64..1.6),
        reverse in any::<bool>(),
    ) {
        let n = radii.len();
        let mut poly: Vec<[f64; 2]> = radii
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let a = TAU * k as f64 / n as f64;
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        if reverse {
            poly.reverse();
        }
        poly.push(poly[0]);
        let mut total = 0.0;
        for w in poly.windows(2) {
            let a = (w[0][1] - p.1).atan2(w[0][0] - p.0);
            let b = (w[1][1] - p.1).atan2(w[1][0] - p.0);
            let mut d = b - a;
            if d > std::f64::consts::PI { d -= TAU; }
            if d < -std::f64::consts::PI { d += TAU; }
            total += d;
        }
        let near_edge = poly.windows(2).any(|w| {
            common::segment_distance([p.0, p.1], w[0], w[1]) < 1e-6
        });
        prop_assume!(!near_edge);
        prop_assert_eq!(polygon_winding(&poly, [p.0, p.1]), (total / TAU).round() as i64);
    }

    #[test]
    fn circle_loop_encloses_its_center(
        cx in -3.0f64..3.0, cy in -3.0f64..3.0, r in 0.1f64..2.0,
    ) {
        let l = circle_loop([cx, cy], r, 64);
        prop_assert_eq!(polygon_winding(&l, [cx, cy]), 1);
        prop_assert_eq!(polygon_winding(&l, [cx + 1.5 * r, cy]), 0);
    }

    #[test]
    fn power_is_right_associative_and_binds_before_negation(
        a in 0.1f64..3.0, b in 0.1f64..2.0, c in -1.5f64..1.5,
    ) {
        let e = ScalarExpr::parse("x^y^z", 3).unwrap();
        let want = a.powf(b.powf(c));
        let got = e.eval(&[a, b, c]);
        prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        let neg = ScalarExpr::parse("-x^2 + x^-1", 1).unwrap();
        let got = neg.eval(&[a]);
        prop_assert!((got - (-(a * a) + 1.0 / a)).abs() <= 1e-12 * got.abs().max(1.0));
    }

    #[test]
    fn retraction_is_idempotent(
        x in -3.0f64..3.0, y in -3.0f64..3.0, which in 0usize..3,
    ) {
        let region = match which {
            0 => Region::disk(vec![0.0, 0.0], 1.0),
            1 => Region::cuboid(vec![-1.0, -0.5], vec![1.0, 0.5]),
            _ => Region::annulus(vec![0.0, 0.0], 0.5, 1.0),
        }
        .unwrap()
        .with_collar_width(10.0)
        .unwrap();
        let p = region.retract(&[x, y]).unwrap();
        prop_assert!(region.contains(&p).unwrap());
        prop_assert_eq!(region.retract(&p).unwrap(), p.clone());
        prop_assert!(region.excursion(&p).unwrap() == 0.0);
        if region.contains(&[x, y]).unwrap() {
            prop_assert_eq!(p, vec![x, y]);
        }
    }

    #[test]
    fn semigroup_law_on_the_disk(
        r in 0.05f64..0.95, a in 0.0f64..TAU, s in 0.01f64..0.2, t in 0.01f64..0.2,
    ) {
        let region = Region::disk(vec![0.0, 0.0], 1.0).unwrap();
        let guard = GuardSet::new(Carrier::Circle { center: vec![0.0, 0.0], radius: 1.0 }, &region).unwrap();
        let field = VectorField::new(2, |p: &[f64]| vec![p[0] - p[1], p[0] + p[1]]);
        let flow = RescaledFlow::new(&field, &region, &guard);
        let cfg = RescaledFlowConfig::new(0.1, &region);
        let x = [r * a.cos(), r * a.sin()];
        let step = cfg.integrator_step;
        let split = flow.flow_for(&flow.flow_for(&x, s, step, cfg.max_drift).unwrap(), t, step, cfg.max_drift).unwrap();
        let whole = flow.flow_for(&x, s + t, step, cfg.max_drift).unwrap();
        let d = (split[0] - whole[0]).hypot(split[1] - whole[1]);
        prop_assert!(d < 1e-8, "defect {d:e}");
        let rr = whole[0].hypot(whole[1]);
        prop_assert!(rr <= 1.0 && rr >= r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn euler_of_disks_and_annuli_matches_pixel_count(
        outer in 0.7f64..1.2, ratio in 0.3f64..0.6, annulus in any::<bool>(),
    ) {
        let h = 0.05;
        let inner = outer * ratio;
        let (region, want) = if annulus {
            (Region::annulus(vec![0.0, 0.0], inner, outer).unwrap(), 0)
        } else {
            (Region::disk(vec![0.0, 0.0], outer).unwrap(), 1)
        };
        let lib = euler_stable(&region, h).unwrap();
        let oracle = pixel_euler(
            |x, y| {
                let n = x.hypot(y);
                n <= outer && (!annulus || n >= inner)
            },
            [-1.3, -1.3],
            [1.3, 1.3],
            h,
        );
        prop_assert_eq!(lib, want);
        prop_assert_eq!(oracle, want);
    }
}
