//! The guard index of a disk by the direct and inflowing routes.

use hybrid_hopf::cubical::euler_stable;
use hybrid_hopf::expr::parse_field_expr;
use hybrid_hopf::guard::{Carrier, GuardSet};
use hybrid_hopf::guard_index::{
    auto_contour, guard_index_direct, guard_index_inflowing, inflowing_certificate,
    interior_fixed_point_index, InflowParams,
};
use hybrid_hopf::index::{certify_isolated_zero, FlowSet};
use hybrid_hopf::region::Region;
use hybrid_hopf::semiflow::{RescaledFlow, RescaledFlowConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = 0.05;
    let region = Region::disk(vec![0.0, 0.0], 1.0)?;
    let guard = GuardSet::new(
        Carrier::Circle {
            center: vec![0.0, 0.0],
            radius: 1.0,
        },
        &region,
    )?;

    for (name, text) in [("source", "[x, y]"), ("saddle", "[x, -y]")] {
        let field = parse_field_expr(text, 2)?;
        let zero = certify_isolated_zero(
            &field,
            &[0.0, 0.0],
            0.1,
            Some(FlowSet {
                region: &region,
                guard: &guard,
            }),
        )?;
        let flow = RescaledFlow::new(&field, &region, &guard);
        let config = RescaledFlowConfig::new(flow.select_tau(None, 0)?, &region);

        let mut contour = auto_contour(&guard)?;
        let direct = guard_index_direct(&flow, &mut contour, &config, std::slice::from_ref(&zero))?;
        let interior = interior_fixed_point_index(&flow, &config, &zero.z, zero.isolation_radius)?;
        let chi = euler_stable(&region, h)?;
        println!(
            "{name}: chi(S) = {chi}, ind(-F) = {}, interior index = {interior}",
            zero.index_of_neg_f
        );
        println!(
            "  xi direct = {} (min displacement {:.3e})",
            direct.index, direct.min_displacement
        );

        let status = inflowing_certificate(&flow, &InflowParams::default())?;
        print!("  inflowing certificate: {}", status.label());
        if status.is_inflowing() {
            print!(", chi(G) = {}", guard_index_inflowing(&guard, h, None)?);
        }
        println!();
    }
    Ok(())
}
