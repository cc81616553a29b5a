//! The verification pipeline: every route to the guard index, cross-checked.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::cubical::euler_stable;
use crate::guard_index::{
    guard_index_direct, guard_index_inflowing, inflowing_certificate, interior_fixed_point_index,
    GuardIndexError, InflowStatus,
};
use crate::hybrid::ModeSpec;
use crate::index::index_sum_lhs;
use crate::scenario::{BuiltScenario, ModeExtras, Scenario, ScenarioError};
use crate::semiflow::{RescaledFlow, RescaledFlowConfig};
use crate::zoo;

/// Command-line style overrides applied on top of a scenario document.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VerifyOptions {
    pub resolution: Option<f64>,
    pub tau: Option<f64>,
    pub seed: Option<u64>,
}

impl VerifyOptions {
    pub fn apply(&self, scenario: &Scenario) -> Scenario {
        let mut s = scenario.clone();
        if let Some(h) = self.resolution {
            s.resolution = h;
        }
        if let Some(t) = self.tau {
            s.tau = Some(t);
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", content = "reason")]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail(String),
    #[serde(rename = "INCOMPLETE")]
    Incomplete(String),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail(_) => "FAIL",
            Verdict::Incomplete(_) => "INCOMPLETE",
        }
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            Verdict::Pass => None,
            Verdict::Fail(r) | Verdict::Incomplete(r) => Some(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroRecord {
    pub mode: String,
    pub z: Vec<f64>,
    pub isolation_radius: f64,
    pub index_of_f: i32,
    pub index_of_neg_f: i32,
    /// Displacement degree of the rescaled time-`tau` map around the zero.
    pub interior_index: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeLedger {
    pub id: String,
    pub dim: usize,
    pub lhs: Option<i64>,
    pub chi_s: Option<i64>,
    pub chi_s_overridden: bool,
    pub tau: Option<f64>,
    pub xi_direct: Option<i64>,
    pub min_displacement: Option<f64>,
    pub inflowing_status: Option<String>,
    pub chi_g: Option<i64>,
    pub notes: Vec<String>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationLedger {
    pub name: String,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub lhs: Option<i64>,
    #[serde(rename = "chi_S")]
    pub chi_s: Option<i64>,
    pub xi_direct: Option<i64>,
    pub xi_inflowing: Option<i64>,
    pub xi_rearranged: Option<i64>,
    pub inflowing_status: Option<String>,
    pub zeros: Vec<ZeroRecord>,
    pub modes: Vec<ModeLedger>,
    pub wall_ms: u64,
}

impl VerificationLedger {
    pub fn zeros_count(&self) -> usize {
        self.zeros.len()
    }
}

fn sum_all(values: impl Iterator<Item = Option<i64>>) -> Option<i64> {
    values.sum()
}

fn verify_mode(
    built: &BuiltScenario,
    mode: &ModeSpec,
    extras: &ModeExtras,
) -> (ModeLedger, Vec<ZeroRecord>) {
    let mut ledger = ModeLedger {
        id: mode.id.clone(),
        dim: mode.dim(),
        lhs: None,
        chi_s: extras.chi_s,
        chi_s_overridden: extras.chi_s.is_some(),
        tau: None,
        xi_direct: None,
        min_displacement: None,
        inflowing_status: None,
        chi_g: None,
        notes: Vec::new(),
        errors: Vec::new(),
    };
    let mut records = Vec::new();

    let zeros = match mode.certified_zeros() {
        Ok(z) => {
            match index_sum_lhs(&z) {
                Ok(l) => ledger.lhs = Some(l),
                Err(e) => ledger.errors.push(format!("zeros: {e}")),
            }
            z
        }
        Err(e) => {
            ledger.errors.push(format!("zeros: {e}"));
            Vec::new()
        }
    };

    if ledger.chi_s.is_none() {
        match euler_stable(&mode.region, built.resolution) {
            Ok(c) => ledger.chi_s = Some(c),
            Err(e) => ledger.errors.push(format!("chi(S): {e}")),
        }
    }

    let flow = RescaledFlow::new(&mode.field, &mode.region, &mode.guard);
    let config = match flow.select_tau(built.tau, built.seed) {
        Ok(t) => {
            ledger.tau = Some(t);
            Some(RescaledFlowConfig::new(t, &mode.region))
        }
        Err(e) => {
            ledger.errors.push(format!("tau: {e}"));
            None
        }
    };

    for z in &zeros {
        let mut interior = None;
        if let Some(cfg) = &config {
            if mode.dim() <= 2 {
                match interior_fixed_point_index(&flow, cfg, &z.z, z.isolation_radius) {
                    Ok(i) => interior = Some(i),
                    Err(e) => ledger
                        .errors
                        .push(format!("interior index at {:?}: {e}", z.z)),
                }
            }
        }
        records.push(ZeroRecord {
            mode: mode.id.clone(),
            z: z.z.clone(),
            isolation_radius: z.isolation_radius,
            index_of_f: z.index_of_f,
            index_of_neg_f: z.index_of_neg_f,
            interior_index: interior,
        });
    }

    if let Some(cfg) = &config {
        match extras.contour.clone() {
            Ok(mut contour) => match guard_index_direct(&flow, &mut contour, cfg, &zeros) {
                Ok(d) => {
                    ledger.xi_direct = Some(d.index);
                    ledger.min_displacement = Some(d.min_displacement);
                }
                Err(GuardIndexError::UnsupportedDimension(n)) => ledger
                    .notes
                    .push(format!("direct route unavailable in dimension {n}")),
                Err(e) => ledger.errors.push(format!("direct route: {e}")),
            },
            Err(GuardIndexError::NoAutoContour) => ledger
                .notes
                .push("direct route unavailable: no contour for this guard".into()),
            Err(e) => ledger.errors.push(format!("contour: {e}")),
        }

        match inflowing_certificate(&flow, &built.inflow) {
            Ok(status) => {
                ledger.inflowing_status = Some(status.label().to_string());
                if let InflowStatus::Inflowing { .. } = status {
                    match guard_index_inflowing(&mode.guard, built.resolution, extras.chi_g) {
                        Ok(c) => ledger.chi_g = Some(c),
                        Err(e) => ledger.errors.push(format!("chi(G): {e}")),
                    }
                }
            }
            Err(e) => ledger.errors.push(format!("inflowing certificate: {e}")),
        }
    }
    (ledger, records)
}

fn aggregate_status(modes: &[ModeLedger]) -> Option<String> {
    let statuses: Option<Vec<&str>> = modes
        .iter()
        .map(|m| m.inflowing_status.as_deref())
        .collect();
    let statuses = statuses?;
    Some(
        if statuses.iter().all(|s| *s == "Inflowing") {
            "Inflowing"
        } else if statuses.contains(&"CounterexampleFound") {
            "CounterexampleFound"
        } else {
            "Unknown"
        }
        .to_string(),
    )
}

fn decide(ledger: &VerificationLedger, expected: &crate::scenario::Expected) -> Verdict {
    let routes: Vec<(&str, i64)> = [
        ("direct", ledger.xi_direct),
        ("inflowing", ledger.xi_inflowing),
        ("rearranged", ledger.xi_rearranged),
    ]
    .into_iter()
    .filter_map(|(n, v)| v.map(|v| (n, v)))
    .collect();

    let mut failures = Vec::new();
    for (i, (a, va)) in routes.iter().enumerate() {
        for (b, vb) in &routes[i + 1..] {
            if va != vb {
                failures.push(format!("xi {a} = {va} but xi {b} = {vb}"));
            }
        }
    }
    for z in &ledger.zeros {
        if let Some(i) = z.interior_index {
            if i != z.index_of_neg_f as i64 {
                failures.push(format!(
                    "interior index {i} at {:?} differs from ind(-F) = {}",
                    z.z, z.index_of_neg_f
                ));
            }
        }
    }
    let mut check = |what: &str, want: Option<i64>, got: Option<i64>| {
        if let (Some(w), Some(g)) = (want, got) {
            if w != g {
                failures.push(format!("expected {what} = {w}, got {g}"));
            }
        }
    };
    check("lhs", expected.lhs, ledger.lhs);
    check("chi_S", expected.chi_s, ledger.chi_s);
    for (name, v) in &routes {
        check(&format!("xi ({name})"), expected.xi, Some(*v));
    }
    if let (Some(want), Some(status)) = (expected.inflowing, &ledger.inflowing_status) {
        if want != (status == "Inflowing") {
            failures.push(format!("expected inflowing = {want}, got {status}"));
        }
    }
    if !failures.is_empty() {
        return Verdict::Fail(failures.join("; "));
    }
    let errors: Vec<String> = ledger
        .modes
        .iter()
        .flat_map(|m| m.errors.iter().map(move |e| format!("{}: {e}", m.id)))
        .collect();
    if !errors.is_empty() {
        return Verdict::Incomplete(errors.join("; "));
    }
    if routes.len() < 2 {
        return Verdict::Incomplete(format!("only {} xi route(s) available", routes.len()));
    }
    Verdict::Pass
}

/// Runs every route on an assembled scenario.
pub fn verify(built: &BuiltScenario) -> VerificationLedger {
    let start = Instant::now();
    let results: Vec<(ModeLedger, Vec<ZeroRecord>)> = built
        .system
        .modes()
        .par_iter()
        .zip(built.extras.par_iter())
        .map(|(m, e)| verify_mode(built, m, e))
        .collect();
    let mut modes = Vec::with_capacity(results.len());
    let mut zeros = Vec::new();
    for (m, z) in results {
        modes.push(m);
        zeros.extend(z);
    }
    let lhs = sum_all(modes.iter().map(|m| m.lhs));
    let chi_s = sum_all(modes.iter().map(|m| m.chi_s));
    let xi_direct = sum_all(modes.iter().map(|m| m.xi_direct));
    let xi_inflowing = sum_all(modes.iter().map(|m| m.chi_g));
    let xi_rearranged = chi_s.zip(lhs).map(|(c, l)| c - l);
    let inflowing_status = aggregate_status(&modes);
    let mut ledger = VerificationLedger {
        name: built.name.clone(),
        verdict: Verdict::Pass,
        lhs,
        chi_s,
        xi_direct,
        xi_inflowing,
        xi_rearranged,
        inflowing_status,
        zeros,
        modes,
        wall_ms: 0,
    };
    ledger.verdict = decide(&ledger, &built.expected);
    ledger.wall_ms = start.elapsed().as_millis() as u64;
    ledger
}

/// Applies `options`, builds, and verifies a scenario document.
pub fn verify_scenario(
    scenario: &Scenario,
    options: &VerifyOptions,
) -> Result<VerificationLedger, ScenarioError> {
    Ok(verify(&options.apply(scenario).build()?))
}

/// Verifies the built-in scenarios whose names match the glob `filter`.
/// Ledgers follow the zoo order.
pub fn run_zoo(
    filter: Option<&str>,
    options: &VerifyOptions,
) -> Result<Vec<VerificationLedger>, glob::PatternError> {
    let pattern = filter.map(glob::Pattern::new).transpose()?;
    let selected: Vec<Scenario> = zoo::scenarios()
        .into_iter()
        .filter(|s| pattern.as_ref().is_none_or(|p| p.matches(&s.name)))
        .collect();
    Ok(selected
        .par_iter()
        .map(|s| verify_scenario(s, options).expect("zoo scenarios are valid"))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zoo_passes() {
        let ledgers = run_zoo(None, &VerifyOptions::default()).unwrap();
        assert_eq!(ledgers.len(), zoo::ZOO.len());
        let bad: Vec<String> = ledgers
            .iter()
            .filter(|l| l.verdict != Verdict::Pass)
            .map(|l| format!("{}: {:?} {:?}", l.name, l.verdict, l.modes))
            .collect();
        assert!(bad.is_empty(), "{bad:#?}");
    }

    #[test]
    fn filter_selects_by_glob() {
        let names: Vec<String> = zoo::scenarios()
            .into_iter()
            .filter(|s| glob::Pattern::new("disk-*").unwrap().matches(&s.name))
            .map(|s| s.name)
            .collect();
        assert_eq!(names, ["disk-source", "disk-sink", "disk-saddle"]);
        assert!(run_zoo(Some("[bad"), &VerifyOptions::default()).is_err());
    }

    #[test]
    fn expected_mismatch_fails() {
        let mut s = zoo::scenario("disk-source").unwrap();
        s.expected.as_mut().unwrap().xi = Some(5);
        let l = verify_scenario(&s, &VerifyOptions::default()).unwrap();
        assert!(matches!(l.verdict, Verdict::Fail(_)), "{:?}", l.verdict);
    }
}
