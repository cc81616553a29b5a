//! Rendering verification ledgers as text, TSV or JSON.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::verify::VerificationLedger;

pub const TSV_HEADER: &str = "name\tverdict\tlhs\tchi_S\txi_direct\txi_inflowing\txi_rearranged\tinflowing_status\tzeros_count\twall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Human,
    Tsv,
    Structured,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "human" => Ok(Format::Human),
            "tsv" => Ok(Format::Tsv),
            "structured" => Ok(Format::Structured),
            other => Err(format!(
                "unknown format `{other}` (expected human, tsv or structured)"
            )),
        }
    }
}

fn cell(v: Option<i64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn human_value(v: Option<i64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

pub fn tsv_row(l: &VerificationLedger) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        l.name,
        l.verdict.label(),
        cell(l.lhs),
        cell(l.chi_s),
        cell(l.xi_direct),
        cell(l.xi_inflowing),
        cell(l.xi_rearranged),
        l.inflowing_status.as_deref().unwrap_or(""),
        l.zeros_count(),
        l.wall_ms
    )
}

fn human_block(out: &mut String, l: &VerificationLedger) {
    let _ = write!(out, "{}: {}", l.name, l.verdict.label());
    if let Some(r) = l.verdict.reason() {
        let _ = write!(out, " ({r})");
    }
    out.push('\n');
    let rows = [
        ("sum of ind(-F)", human_value(l.lhs)),
        ("chi(S)", human_value(l.chi_s)),
        ("xi direct", human_value(l.xi_direct)),
        ("xi inflowing", human_value(l.xi_inflowing)),
        ("xi rearranged", human_value(l.xi_rearranged)),
        (
            "inflowing",
            l.inflowing_status.clone().unwrap_or_else(|| "-".into()),
        ),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "  {k:<16}{v}");
    }
    let _ = writeln!(out, "  {:<16}{}", "zeros", l.zeros_count());
    for z in &l.zeros {
        let interior = z
            .interior_index
            .map(|i| i.to_string())
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "    {} {:?}: ind F = {}, ind -F = {}, interior = {}",
            z.mode, z.z, z.index_of_f, z.index_of_neg_f, interior
        );
    }
    for m in &l.modes {
        for n in &m.notes {
            let _ = writeln!(out, "  note [{}]: {n}", m.id);
        }
    }
    let _ = writeln!(out, "  {:<16}{} ms", "wall", l.wall_ms);
}

/// Renders `ledgers` in the requested format.
pub fn emit_report(ledgers: &[VerificationLedger], format: Format) -> String {
    match format {
        Format::Tsv => {
            let mut out = String::from(TSV_HEADER);
            out.push('\n');
            for l in ledgers {
                out.push_str(&tsv_row(l));
                out.push('\n');
            }
            out
        }
        Format::Human => {
            let mut out = String::new();
            for (i, l) in ledgers.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                human_block(&mut out, l);
            }
            out
        }
        Format::Structured => {
            let mut out = serde_json::to_string_pretty(ledgers).expect("ledgers serialize");
            out.push('\n');
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{Verdict, ZeroRecord};

    fn ledger() -> VerificationLedger {
        VerificationLedger {
            name: "disk-source".into(),
            verdict: Verdict::Pass,
            lhs: Some(1),
            chi_s: Some(1),
            xi_direct: Some(0),
            xi_inflowing: Some(0),
            xi_rearranged: Some(0),
            inflowing_status: Some("Inflowing".into()),
            zeros: vec![ZeroRecord {
                mode: "disk".into(),
                z: vec![0.0, 0.0],
                isolation_radius: 0.1,
                index_of_f: 1,
                index_of_neg_f: 1,
                interior_index: Some(1),
            }],
            modes: vec![],
            wall_ms: 12,
        }
    }

    #[test]
    fn tsv_layout() {
        assert_eq!(emit_report(&[], Format::Tsv), format!("{TSV_HEADER}\n"));
        let out = emit_report(&[ledger()], Format::Tsv);
        let row = out.lines().nth(1).unwrap();
        assert_eq!(row, "disk-source\tPASS\t1\t1\t0\t0\t0\tInflowing\t1\t12");
        let mut l = ledger();
        l.xi_inflowing = None;
        l.verdict = Verdict::Incomplete("x".into());
        assert!(tsv_row(&l).starts_with("disk-source\tINCOMPLETE\t1\t1\t0\t\t0\t"));
    }

    #[test]
    fn human_and_structured() {
        let two = [ledger(), ledger()];
        let h = emit_report(&two, Format::Human);
        assert_eq!(h.matches("disk-source: PASS").count(), 2);
        let s = emit_report(&two, Format::Structured);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v[0]["verdict"], "PASS");
        assert_eq!(v[0]["chi_S"], 1);
        assert_eq!("tsv".parse::<Format>().unwrap(), Format::Tsv);
        assert!("xml".parse::<Format>().is_err());
    }
}
