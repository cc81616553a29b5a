//! Euler characteristics of rasterized regions and thickened guards.

use std::sync::Arc;

use hybrid_hopf::cubical::{euler_stable, rasterize, thicken};
use hybrid_hopf::guard::{Carrier, GuardSet};
use hybrid_hopf::region::{Region, Shape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = 0.05;
    let disk = Region::disk(vec![0.0, 0.0], 1.0)?;
    let annulus = Region::annulus(vec![0.0, 0.0], 0.5, 1.0)?;
    // Non-primitive shapes need an explicit retraction onto the region.
    let two_disks = Region::with_retraction(
        Shape::Union(vec![
            Shape::Disk {
                center: vec![-2.0, 0.0],
                radius: 0.5,
            },
            Shape::Disk {
                center: vec![2.0, 0.0],
                radius: 0.5,
            },
        ]),
        Arc::new(|p: &[f64]| {
            let c = if p[0] < 0.0 { -2.0 } else { 2.0 };
            let (dx, dy) = (p[0] - c, p[1]);
            let r = dx.hypot(dy);
            if r <= 0.5 {
                p.to_vec()
            } else {
                vec![c + 0.5 * dx / r, 0.5 * dy / r]
            }
        }),
    )?;

    for (name, region) in [
        ("disk", &disk),
        ("annulus", &annulus),
        ("two disks", &two_disks),
    ] {
        let complex = rasterize(region, h)?;
        println!(
            "{name:<10} cells by dimension {:?}, chi = {}",
            complex.counts(),
            euler_stable(region, h)?
        );
    }

    let rim = GuardSet::new(
        Carrier::Circle {
            center: vec![0.0, 0.0],
            radius: 1.0,
        },
        &disk,
    )?;
    println!(
        "thickened rim: chi = {}",
        euler_stable(&thicken(&rim, 2.0 * h), h)?
    );
    Ok(())
}
