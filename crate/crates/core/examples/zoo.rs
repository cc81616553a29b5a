//! Running the built-in scenario suite.

use hybrid_hopf::report::{emit_report, Format};
use hybrid_hopf::verify::{run_zoo, VerifyOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let filter = std::env::args().nth(1);
    let ledgers = run_zoo(filter.as_deref(), &VerifyOptions::default())?;
    print!("{}", emit_report(&ledgers, Format::Tsv));
    let passed = ledgers
        .iter()
        .filter(|l| l.verdict.label() == "PASS")
        .count();
    println!("{passed}/{} PASS", ledgers.len());
    Ok(())
}
