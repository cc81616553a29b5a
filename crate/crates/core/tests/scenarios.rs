mod common;

use common::{INFLOWING, ZOO_TABLE};
use hybrid_hopf::execution::{simulate_execution, BranchPolicy, ExecutionLimits, Termination};
use hybrid_hopf::report::{emit_report, Format, TSV_HEADER};
use hybrid_hopf::scenario::{load_scenario, ScenarioError};
use hybrid_hopf::verify::{run_zoo, verify_scenario, Verdict, VerifyOptions};
use hybrid_hopf::zoo;

const CUBE: &str = r#"
name = "cube-sink"
resolution = 0.1

[[modes]]
id = "cube"
field = "[-x, -y, -z]"
zeros = [[0.0, 0.0, 0.0]]
region = { kind = "box", lo = [-0.5, -0.5, -0.5], hi = [0.5, 0.5, 0.5] }
guard = { kind = "boundary", shape = { kind = "box", lo = [-0.5, -0.5, -0.5], hi = [0.5, 0.5, 0.5] } }
"#;

#[test]
fn each_zoo_scenario_matches_its_oracle() {
    for &(name, lhs, chi, xi) in ZOO_TABLE {
        let s = zoo::scenario(name).unwrap();
        let l = verify_scenario(&s, &VerifyOptions::default()).unwrap();
        assert_eq!(l.verdict, Verdict::Pass, "{name}");
        assert_eq!(
            (l.lhs, l.chi_s, l.xi_rearranged),
            (Some(lhs), Some(chi), Some(xi)),
            "{name}"
        );
        let inflowing = l.inflowing_status.as_deref() == Some("Inflowing");
        assert_eq!(inflowing, INFLOWING.contains(&name), "{name}");
        assert_eq!(l.xi_inflowing.is_some(), inflowing, "{name}");
    }
}

#[test]
fn zoo_filters() {
    let opts = VerifyOptions::default();
    let disks = run_zoo(Some("disk-*"), &opts).unwrap();
    let names: Vec<&str> = disks.iter().map(|l| l.name.as_str()).collect();
    assert_eq!(names, ["disk-source", "disk-sink", "disk-saddle"]);
    assert!(run_zoo(Some("no-such-*"), &opts).unwrap().is_empty());
    assert_eq!(emit_report(&[], Format::Tsv), format!("{TSV_HEADER}\n"));
}

#[test]
fn disk_source_row() {
    let l = verify_scenario(
        &zoo::scenario("disk-source").unwrap(),
        &VerifyOptions::default(),
    )
    .unwrap();
    let tsv = emit_report(&[l], Format::Tsv);
    let row = tsv.lines().nth(1).unwrap();
    assert!(
        row.starts_with("disk-source\tPASS\t1\t1\t0\t0\t0\tInflowing\t1\t"),
        "{row}"
    );
}

#[test]
fn mixed_dimension_aggregates_per_mode() {
    let l = verify_scenario(
        &zoo::scenario("mixed-dimension").unwrap(),
        &VerifyOptions::default(),
    )
    .unwrap();
    let chi: i64 = l.modes.iter().map(|m| m.chi_s.unwrap()).sum();
    let lhs: i64 = l.modes.iter().map(|m| m.lhs.unwrap()).sum();
    let xi: i64 = l.modes.iter().map(|m| m.xi_direct.unwrap()).sum();
    assert_eq!(
        (l.chi_s, l.lhs, l.xi_direct),
        (Some(chi), Some(lhs), Some(xi))
    );
    assert_eq!(l.modes.iter().map(|m| m.dim).collect::<Vec<_>>(), [1, 2]);
}

#[test]
fn single_route_is_incomplete() {
    let l = verify_scenario(&load_scenario(CUBE).unwrap(), &VerifyOptions::default()).unwrap();
    // -F = identity in dimension 3 has index +1.
    assert_eq!(l.lhs, Some(1));
    assert_eq!(l.chi_s, Some(1));
    assert_eq!(l.xi_direct, None);
    assert!(
        matches!(l.verdict, Verdict::Incomplete(_)),
        "{:?}",
        l.verdict
    );
    assert!(!l.modes[0].notes.is_empty());
}

#[test]
fn expected_mismatch_is_fail_and_names_both_values() {
    let mut s = zoo::scenario("disk-saddle").unwrap();
    s.expected.as_mut().unwrap().chi_s = Some(2);
    let l = verify_scenario(&s, &VerifyOptions::default()).unwrap();
    let Verdict::Fail(reason) = &l.verdict else {
        panic!("{:?}", l.verdict)
    };
    assert!(reason.contains("chi_S = 2, got 1"), "{reason}");
}

#[test]
fn wrong_chi_override_breaks_route_agreement() {
    let mut s = zoo::scenario("disk-source").unwrap();
    s.expected = None;
    s.modes[0].chi_s = Some(3);
    let l = verify_scenario(&s, &VerifyOptions::default()).unwrap();
    assert_eq!(l.xi_rearranged, Some(2));
    assert!(l.modes[0].chi_s_overridden);
    assert!(matches!(l.verdict, Verdict::Fail(_)));
}

#[test]
fn tau_override_keeps_the_verdict() {
    let opts = VerifyOptions {
        tau: Some(0.02),
        ..Default::default()
    };
    let l = verify_scenario(&zoo::scenario("disk-saddle").unwrap(), &opts).unwrap();
    assert_eq!(l.verdict, Verdict::Pass);
    assert_eq!(l.modes[0].tau, Some(0.02));
}

fn load_and_build(text: &str) -> Result<(), ScenarioError> {
    load_scenario(text)?.build().map(|_| ())
}

#[test]
fn documents_are_validated() {
    let defaulted = load_scenario(CUBE.replace("resolution = 0.1\n", "").as_str()).unwrap();
    assert_eq!(defaulted.resolution, 0.05);

    let unknown = CUBE.replace("kind = \"box\", lo", "kind = \"hexagon\", lo");
    let err = load_scenario(&unknown).unwrap_err();
    assert!(err.to_string().contains("hexagon"), "{err}");

    let bad_field = CUBE.replace("[-x, -y, -z]", "[-x, -y]");
    let err = load_and_build(&bad_field).unwrap_err();
    assert!(matches!(err, ScenarioError::Expr { .. }), "{err}");

    let bad_reset = format!(
        "{CUBE}\n[[resets]]\nsource = \"cube\"\ntarget = \"sphere\"\nmap = \"[x, y, z]\"\n"
    );
    let err = load_and_build(&bad_reset).unwrap_err();
    assert!(err.to_string().contains("sphere"), "{err}");

    let far_guard = CUBE.replace(
        "guard = { kind = \"boundary\", shape = { kind = \"box\", lo = [-0.5, -0.5, -0.5], hi = [0.5, 0.5, 0.5] } }",
        "guard = { kind = \"points\", points = [[3.0, 0.0, 0.0]] }",
    );
    assert!(load_and_build(&far_guard).is_err());
}

#[test]
fn zoo_documents_round_trip() {
    for s in zoo::scenarios() {
        assert_eq!(load_scenario(&s.to_toml()).unwrap(), s);
    }
}

#[test]
fn bouncing_ball_execution_matches_ballistics() {
    let built = zoo::scenario("bouncing-ball").unwrap().build().unwrap();
    let trace = simulate_execution(
        &built.system,
        "ball",
        &[0.5, 0.0],
        10.0,
        BranchPolicy::Priority,
        &ExecutionLimits::default(),
    )
    .unwrap();
    // h(t) = 0.5 - t^2/2 lands at t = 1 with speed 1; later flights last 2v.
    let first = &trace.jumps[0];
    assert!((first.time - 1.0).abs() < 1e-8);
    assert!((first.pre[1] + 1.0).abs() < 1e-8);
    assert!((first.post[1] - 0.5).abs() < 1e-8);
    let mut t = 1.0;
    let mut v = 0.5;
    for j in &trace.jumps[1..6] {
        t += 2.0 * v;
        v *= 0.5;
        assert!((j.time - t).abs() < 1e-7, "{} vs {t}", j.time);
    }
    assert_eq!(trace.termination, Termination::ZenoSuspected);
    assert!((trace.end_time() - 3.0).abs() < 1e-6);
    for j in &trace.jumps {
        assert!(j.pre[0].abs() <= 1e-8 && j.pre[1] <= 0.0);
    }
    for s in &trace.segments {
        assert!(s.times.windows(2).all(|w| w[0] <= w[1]));
    }
    assert!(trace
        .to_tsv()
        .starts_with("time\tmode_id\tcoordinates\n0\tball\t0.5\t0\n"));
}

#[test]
fn mixed_dimension_execution_switches_modes() {
    let built = zoo::scenario("mixed-dimension").unwrap().build().unwrap();
    let trace = simulate_execution(
        &built.system,
        "disk",
        &[0.5, 0.0],
        3.0,
        BranchPolicy::Random { seed: 7 },
        &ExecutionLimits::default(),
    )
    .unwrap();
    // x' = x from 0.5 reaches the rim at t = ln 2, then (x + 1)/2 = 1 lies on the line guard.
    let j = &trace.jumps[0];
    assert!((j.time - 2f64.ln()).abs() < 1e-6);
    assert_eq!((j.source.as_str(), j.target.as_str()), ("disk", "line"));
    assert!((j.post[0] - 1.0).abs() < 1e-6);
}
