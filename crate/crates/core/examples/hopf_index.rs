//! Certifying isolated zeros and computing their Hopf indices.

use hybrid_hopf::expr::parse_field_expr;
use hybrid_hopf::index::{certify_isolated_zero, hopf_index};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fields = [
        ("source", "[x, y]"),
        ("sink", "[-x, -y]"),
        ("saddle", "[x, -y]"),
        ("rotation", "[-y, x]"),
        ("z^2", "[x^2 - y^2, 2*x*y]"),
        ("z^3", "[x^3 - 3*x*y^2, 3*x^2*y - y^3]"),
    ];
    for (name, text) in fields {
        let field = parse_field_expr(text, 2)?;
        let cert = certify_isolated_zero(&field, &[0.01, -0.02], 0.2, None)?;
        println!(
            "{name:<9} zero at ({:.2e}, {:.2e}): ind F = {:+}, ind -F = {:+}",
            cert.z[0], cert.z[1], cert.index_of_f, cert.index_of_neg_f
        );
    }

    // In odd dimension the sign flips the index.
    let cubic = parse_field_expr("[x, y, z]", 3)?;
    println!(
        "3d source: ind F = {:+}, ind -F = {:+}",
        hopf_index(&cubic, &[0.0; 3], 0.5, 1)?,
        hopf_index(&cubic, &[0.0; 3], 0.5, -1)?
    );
    Ok(())
}
