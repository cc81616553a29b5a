//! The built-in scenario suite.

use crate::scenario::Scenario;

/// Zoo documents as `(name, TOML text)`, in suite order.
pub const ZOO: &[(&str, &str)] = &[
    ("disk-source", include_str!("../scenarios/disk-source.toml")),
    ("disk-sink", include_str!("../scenarios/disk-sink.toml")),
    ("disk-saddle", include_str!("../scenarios/disk-saddle.toml")),
    (
        "annulus-outflow",
        include_str!("../scenarios/annulus-outflow.toml"),
    ),
    (
        "interval-logistic",
        include_str!("../scenarios/interval-logistic.toml"),
    ),
    (
        "interval-inflow",
        include_str!("../scenarios/interval-inflow.toml"),
    ),
    (
        "double-point-index",
        include_str!("../scenarios/double-point-index.toml"),
    ),
    (
        "bouncing-ball",
        include_str!("../scenarios/bouncing-ball.toml"),
    ),
    (
        "mixed-dimension",
        include_str!("../scenarios/mixed-dimension.toml"),
    ),
];

/// Parsed zoo scenarios, in suite order.
pub fn scenarios() -> Vec<Scenario> {
    ZOO.iter()
        .map(|(_, text)| Scenario::from_toml(text).expect("zoo documents parse"))
        .collect()
}

/// The zoo scenario called `name`.
pub fn scenario(name: &str) -> Option<Scenario> {
    ZOO.iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Scenario::from_toml(text).expect("zoo documents parse"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::load_scenario;

    #[test]
    fn documents_are_valid_and_named_consistently() {
        for (name, text) in ZOO {
            let s = load_scenario(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&s.name, name);
            assert_eq!(load_scenario(&s.to_toml()).unwrap(), s);
        }
    }
}
