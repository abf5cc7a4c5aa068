//! Scenario files compiled into the binary.

/// `(file name, contents)` of every shipped scenario.
pub const SCENARIOS: &[(&str, &str)] = &[
    ("vanderpol.json", include_str!("../scenarios/vanderpol.json")),
    ("nc-oscillation.json", include_str!("../scenarios/nc-oscillation.json")),
    ("nc-contrast.json", include_str!("../scenarios/nc-contrast.json")),
    ("caputo-stable.json", include_str!("../scenarios/caputo-stable.json")),
    ("blowup.json", include_str!("../scenarios/blowup.json")),
    ("gs-continuable.json", include_str!("../scenarios/gs-continuable.json")),
];

/// `(file name, contents, expected field path)` of the malformed corpus.
pub const MALFORMED: &[(&str, &str, &str)] = &[
    ("missing-g.json", include_str!("../scenarios/malformed/missing-g.json"), "functions.g"),
    ("missing-t-end.json", include_str!("../scenarios/malformed/missing-t-end.json"), "t_end"),
    ("wrong-type-x0.json", include_str!("../scenarios/malformed/wrong-type-x0.json"), "x0"),
    (
        "wrong-type-tolerances.json",
        include_str!("../scenarios/malformed/wrong-type-tolerances.json"),
        "tolerances.rel",
    ),
    ("unknown-kernel.json", include_str!("../scenarios/malformed/unknown-kernel.json"), "kernel.kind"),
    ("unknown-family.json", include_str!("../scenarios/malformed/unknown-family.json"), "family"),
    ("unknown-key.json", include_str!("../scenarios/malformed/unknown-key.json"), "seed"),
    ("bad-expression.json", include_str!("../scenarios/malformed/bad-expression.json"), "functions.f"),
    ("order-out-of-range.json", include_str!("../scenarios/malformed/order-out-of-range.json"), "alpha"),
    ("unknown-theorem.json", include_str!("../scenarios/malformed/unknown-theorem.json"), "analysis.theorem"),
    ("not-json.json", include_str!("../scenarios/malformed/not-json.json"), "functions"),
];

pub fn scenario(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
