//! Verifying a scenario document written inline.

use hybrid_hopf::report::{emit_report, Format};
use hybrid_hopf::scenario::load_scenario;
use hybrid_hopf::verify::{verify_scenario, VerifyOptions};

const DOC: &str = r#"
name = "square-spiral"
description = "Outward spiral on a square with its boundary as guard."

[[modes]]
id = "square"
field = "[x - y, x + y]"
region = { kind = "box", lo = [-1.0, -1.0], hi = [1.0, 1.0] }
guard = { kind = "boundary", shape = { kind = "box", lo = [-1.0, -1.0], hi = [1.0, 1.0] } }
zeros = [[0.0, 0.0]]
chi_G = 0

[[modes.contour]]
orientation = 1
vertices = [[-1.15, -1.15], [1.15, -1.15], [1.15, 1.15], [-1.15, 1.15], [-1.15, -1.15]]

[[modes.contour]]
orientation = -1
vertices = [[-0.85, -0.85], [0.85, -0.85], [0.85, 0.85], [-0.85, 0.85], [-0.85, -0.85]]

[expected]
lhs = 1
chi_S = 1
xi = 0
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = load_scenario(DOC)?;
    let ledger = verify_scenario(&scenario, &VerifyOptions::default())?;
    print!(
        "{}",
        emit_report(std::slice::from_ref(&ledger), Format::Human)
    );
    print!("{}", emit_report(&[ledger], Format::Tsv));
    Ok(())
}
