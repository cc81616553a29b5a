//! The guard-rescaled semiflow on the unit interval with guard {0}.

use hybrid_hopf::expr::parse_field_expr;
use hybrid_hopf::guard::{Carrier, GuardSet};
use hybrid_hopf::region::Region;
use hybrid_hopf::semiflow::{Profile, RescaledFlow, RescaledFlowConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let region = Region::cuboid(vec![0.0], vec![1.0])?;
    let guard = GuardSet::new(Carrier::PointSet(vec![vec![0.0]]), &region)?;
    // alpha = d_G = x turns 1 - x into the logistic field x(1 - x).
    let field = parse_field_expr("[1 - x]", 1)?;
    let flow = RescaledFlow::new(&field, &region, &guard);

    let tau = flow.select_tau(None, 0)?;
    println!("selected tau = {tau:.6}");

    let config = RescaledFlowConfig::new(0.1, &region);
    let x0 = 0.5;
    let y = flow.flow_map(&config, &[x0])?;
    let exact = 1.0 / (1.0 + (1.0 - x0) / x0 * (-0.1f64).exp());
    println!("phi_0.1(0.5) = {:.9}, closed form {exact:.9}", y[0]);

    let twice = flow.flow_map(&config, &flow.flow_map(&config, &[x0])?)?;
    let once = flow.flow_for(&[x0], 0.2, config.integrator_step, config.max_drift)?;
    println!("semigroup defect = {:.2e}", (twice[0] - once[0]).abs());

    let quadratic = RescaledFlow::new(&field, &region, &guard).with_profile(Profile::Quadratic);
    println!(
        "quadratic profile: phi_0.1(0.5) = {:.9}",
        quadratic.flow_map(&config, &[x0])?[0]
    );
    Ok(())
}
