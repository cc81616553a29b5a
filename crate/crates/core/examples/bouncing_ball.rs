//! A bouncing ball: stationary points and a Zeno execution.

use hybrid_hopf::execution::{simulate_execution, BranchPolicy, ExecutionLimits};
use hybrid_hopf::expr::{parse_field_expr, ScalarExpr};
use hybrid_hopf::guard::{Carrier, GuardSet};
use hybrid_hopf::hybrid::{assemble, stationary_points, HybridSystemSpec, ModeSpec, ResetBranch};
use hybrid_hopf::region::{Aabb, Region, Shape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bounds = Aabb::new(vec![-0.1, -1.6], vec![1.1, 1.6]);
    let energy = ScalarExpr::parse("y^2/2 + x - 1", 2)?.into_fn();
    let floor = ScalarExpr::parse("-x", 2)?.into_fn();
    let shape = Shape::Intersection(vec![
        Shape::Sublevel {
            g: energy,
            bounds: bounds.clone(),
        },
        Shape::Sublevel { g: floor, bounds },
    ]);
    let vmax = 2f64.sqrt();
    let region = Region::with_retraction(
        shape,
        std::sync::Arc::new(move |p: &[f64]| {
            let v = p[1].clamp(-vmax, vmax);
            let hmax = (1.0 - v * v / 2.0).max(0.0);
            vec![p[0].min(hmax).max(0.0), v]
        }),
    )?;
    let guard = GuardSet::new(
        Carrier::Segment {
            a: vec![0.0, -vmax],
            b: vec![0.0, 0.0],
        },
        &region,
    )?;
    let mode = ModeSpec::new("ball", region, guard, parse_field_expr("[y, -1]", 2)?);
    let system = assemble(HybridSystemSpec {
        modes: vec![mode],
        resets: vec![ResetBranch::new("ball", "ball", |p| {
            vec![p[0], -0.5 * p[1]]
        })],
    })?;

    let stationary = stationary_points(&system)?;
    println!("flow equilibria: {:?}", stationary.flow_equilibria);
    println!("reset fixed points: {:?}", stationary.reset_fixed_points);

    let trace = simulate_execution(
        &system,
        "ball",
        &[0.5, 0.0],
        10.0,
        BranchPolicy::Priority,
        &ExecutionLimits::default(),
    )?;
    for jump in trace.jumps.iter().take(4) {
        println!(
            "impact at t = {:.6}: v = {:+.6} -> {:+.6}",
            jump.time, jump.pre[1], jump.post[1]
        );
    }
    println!(
        "{} jumps, stopped at t = {:.9} ({:?}); flight times sum to 1 + 2(1/2 + 1/4 + ...) = 3",
        trace.jumps.len(),
        trace.end_time(),
        trace.termination
    );
    let tsv = trace.to_tsv();
    println!(
        "trace has {} TSV rows, first: {:?}",
        tsv.lines().count() - 1,
        tsv.lines().nth(1)
    );
    Ok(())
}
