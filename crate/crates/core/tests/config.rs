use fantappie::config::parse_config;
use fantappie::harmonic::HMode;
use fantappie::Error;

const CONIC: &str = r#"
[curve]
coefficients = [
  { i = 0, j = 2, k = 0, re = 1.0 },
  { i = 0, j = 0, k = 2, re = 1.0 },
  { i = 2, j = 0, k = 0, re = -1.0 },
]

[domain]
radius = 2.0
"#;

fn validation(text: &str) -> String {
    match parse_config(text) {
        Err(Error::Validation(m)) => m,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn minimal_config_gets_defaults() {
    let c = parse_config(CONIC).unwrap();
    assert_eq!(c.poly().unwrap().degree(), 2);
    assert_eq!((c.grid, c.n_theta, c.seed, c.max_retries), ([256, 32, 32], 256, 0, 64));
    assert_eq!(c.h_mode, HMode::Auto);
    assert_eq!(c.out, "out");
    assert!(c.reference_points().is_none());
    let o = c.options();
    assert_eq!(o.grid, (256, 32, 32));
    assert_eq!(o.epsilons, vec![0.04, 0.02, 0.01]);
}

#[test]
fn full_config_round_trips_into_options() {
    let text = format!(
        "{CONIC}reference_points = [{{ x = [0.0, 0.0], y = [1.0, 0.0] }}]\n\n[trace]\nn_theta = 128\n\n\
         [quad]\nepsilons = [0.02, 0.01]\ngrid = [64, 16, 16]\n\n[barrier]\nseed = 9\nmax_retries = 5\n\n\
         [h]\nmode = \"robust\"\n\n[io]\nout = \"res\"\nscenario = \"conic-log\"\n"
    );
    let c = parse_config(&text).unwrap();
    let o = c.options();
    assert_eq!((o.n_theta, o.grid, o.seed, o.max_retries), (128, (64, 16, 16), 9, 5));
    assert_eq!(o.h_mode, HMode::Robust);
    assert_eq!(c.reference_points().unwrap().len(), 1);
    assert_eq!(c.scenario.as_deref(), Some("conic-log"));
}

#[test]
fn non_positive_radius_rejected() {
    for r in ["-1.0", "0.0"] {
        let m = validation(&CONIC.replace("radius = 2.0", &format!("radius = {r}")));
        assert!(m.contains("radius"), "{m}");
    }
}

#[test]
fn duplicate_exponent_names_both_lines() {
    let text = CONIC.replace(
        "  { i = 2, j = 0, k = 0, re = -1.0 },\n",
        "  { i = 2, j = 0, k = 0, re = -1.0 },\n  { i = 0, j = 2, k = 0, re = 3.0 },\n",
    );
    let m = validation(&text);
    assert!(m.contains("line 4") && m.contains("line 7"), "{m}");
}

#[test]
fn unknown_keys_rejected() {
    validation(&format!("{CONIC}colour = 3\n"));
    validation(&CONIC.replace("re = 1.0 }", "re = 1.0, q = 2 }"));
}

#[test]
fn inhomogeneous_curve_rejected() {
    assert!(parse_config(&CONIC.replace("{ i = 0, j = 0, k = 2,", "{ i = 0, j = 0, k = 1,")).is_err());
}

#[test]
fn quadrature_settings_validated() {
    validation(&format!("{CONIC}\n[quad]\ngrid = [64, 0, 16]\n"));
    validation(&format!("{CONIC}\n[quad]\nepsilons = [0.2]\n"));
    validation(&format!("{CONIC}\n[quad]\nepsilons = []\n"));
    let m = validation(&format!(
        "{CONIC}\n[trace]\nn_theta = 96\n\n[quad]\ngrid = [64, 16, 16]\n"
    ));
    assert!(m.contains("multiple"), "{m}");
    validation(&format!("{CONIC}\n[io]\nboundary = \"b\"\nscenario = \"conic-log\"\n"));
    validation(&format!("{CONIC}\n[h]\nmode = \"fancy\"\n"));
}

#[test]
fn fingerprint_is_stable_and_sensitive() {
    let a = parse_config(CONIC).unwrap().fingerprint();
    assert_eq!(a, parse_config(CONIC).unwrap().fingerprint());
    let b = parse_config(&format!("{CONIC}\n[barrier]\nseed = 1\n"))
        .unwrap()
        .fingerprint();
    assert_ne!(a, b);
    // explicit defaults are the same run
    let c = parse_config(&format!("{CONIC}\n[barrier]\nseed = 0\n"))
        .unwrap()
        .fingerprint();
    assert_eq!(a, c);
}
