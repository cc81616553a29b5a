//! Parsing scalar and vector expressions, and the errors they report.

use hybrid_hopf::expr::{parse_field_expr, ScalarExpr, VectorExpr};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = ScalarExpr::parse("-2^2 + sqrt(abs(x1 - x2)) * exp(0)", 2)?;
    println!("-2^2 + sqrt(|x1 - x2|) at (1, 5) = {}", g.eval(&[1.0, 5.0]));

    let field = parse_field_expr("[x^2 - y^2, 2*x*y]", 2)?;
    println!(
        "(x^2 - y^2, 2xy) at (0, 1) = {:?}",
        field.eval(&[0.0, 1.0])?
    );

    let reset = VectorExpr::parse("[(x + 1)/2]", 2, 1)?;
    println!(
        "reset (x + 1)/2 at (0.5, 0) = {:?}",
        reset.eval(&[0.5, 0.0])
    );

    for bad in ["[x, ", "[x, w]", "[x]", "[sin(x, y), 1]"] {
        match parse_field_expr(bad, 2) {
            Ok(_) => println!("{bad:<16} parsed"),
            Err(e) => println!("{bad:<16} error: {e}"),
        }
    }
    Ok(())
}
