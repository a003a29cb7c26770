use fantappie::algebra::line;
use fantappie::geometry::{trace_boundary, CurveDomain};
use fantappie::harmonic::{
    build_h, eval_h, log_term_divisor, log_term_periods, period_a, primitive_f, read_component_csv, read_connector_csv,
    write_component_csv, write_connector_csv, BoundaryField, ComponentData, CorrectionH, HMode, Provenance, Route,
};
use fantappie::harness::{make_scenario, prepare, prepare_primitive, sample_field};
use fantappie::{Error, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn periods_of_scenarios() {
    for (name, want) in [
        ("line-rational", vec![0.0]),
        ("conic-log", vec![1.0, -1.0]),
        ("fermat-mixed", vec![0.0, 1.5, -1.5]),
    ] {
        let s = make_scenario(name).unwrap();
        let (curve, trace) = prepare(&s).unwrap();
        let f = sample_field(&curve, &trace, s.oracle.as_ref().unwrap(), Route::Forward).unwrap();
        let p = period_a(&f, &trace).unwrap();
        assert_eq!(p.a.len(), want.len());
        for (a, w) in p.a.iter().zip(&want) {
            assert!((a - w).abs() < 1e-10, "{name}: {:?}", p.a);
        }
        // Stokes: the periods of a closed form on V sum to zero
        assert!(p.a.iter().sum::<f64>().abs() < 1e-10);
        assert!(p.max_imag < 1e-10 && !p.flagged);
    }
}

#[test]
fn accepted_h_matches_periods() {
    let s = make_scenario("fermat-mixed").unwrap();
    let pr = prepare_primitive(&s).unwrap();
    assert!(pr.h.accepted());
    let mut sum = vec![0.0; pr.periods.a.len()];
    for t in &pr.h.terms {
        for (acc, v) in sum.iter_mut().zip(log_term_periods(&pr.trace, &t.l)) {
            *acc += t.c * v;
        }
    }
    for (a, b) in sum.iter().zip(&pr.periods.a) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn robust_terms_have_no_zeros_in_v() {
    let s = make_scenario("conic-log").unwrap();
    let pr = prepare_primitive(&s).unwrap();
    assert_eq!(pr.h.mode, HMode::Robust);
    for t in &pr.h.terms {
        // errors if any zero of ℓ on the curve lies in V
        log_term_divisor(&pr.curve, &pr.trace, &t.l).unwrap();
    }
}

#[test]
fn paper_mode_fails_on_conic() {
    let mut s = make_scenario("conic-log").unwrap();
    s.options.h_mode = HMode::Paper;
    let Err(e) = prepare_primitive(&s) else {
        panic!("paper mode completed")
    };
    assert_eq!(e.stage(), Some("primitive"));
    assert!(matches!(e.root(), Error::Numerical(_)));
    assert!(e.to_string().contains("period residual"));
}

#[test]
fn primitive_of_re_x_squared_is_x_squared() {
    let s = make_scenario("line-rational").unwrap();
    let pr = prepare_primitive(&s).unwrap();
    let comp = &pr.trace.components[0];
    let x0 = pr.trace.x(comp.theta[0]);
    for i in (0..comp.len()).step_by(13) {
        let x = pr.trace.x(comp.theta[i]);
        // f = x² up to the anchor constant; Re f = u − h with h = 0
        assert!((pr.f.samples[0][i] - pr.f.samples[0][0] - (x * x - x0 * x0)).norm() < 1e-10);
        assert!((pr.f.samples[0][i].re - (x * x).re).abs() < 1e-10);
    }
    assert!(pr.f.re_drift < 1e-10 && pr.f.max_closure() < 1e-10);
}

#[test]
fn connectors_agree_on_both_routes() {
    for name in ["conic-log", "fermat-mixed"] {
        let pr = prepare_primitive(&make_scenario(name).unwrap()).unwrap();
        assert!(pr.connector_independence.unwrap() < 1e-8, "{name}");
    }
}

#[test]
fn inconsistent_data_is_rejected() {
    let curve = CurveDomain::new(line(), 2.0).unwrap();
    let trace = trace_boundary(&curve, 64).unwrap();
    let n = trace.components[0].len();
    // constant u with zero ∂u is consistent; a varying u with zero ∂u is not
    let field = BoundaryField {
        components: vec![ComponentData {
            u: vec![0.0; n],
            p: vec![c(0.0, 0.0); n],
        }],
        connectors: vec![],
        provenance: Provenance::Measured,
    };
    primitive_f(&field, &CorrectionH::zero(), &trace).unwrap();
    let mut bad = field.clone();
    bad.components[0].u = (0..n)
        .map(|i| (i as f64 * std::f64::consts::TAU / n as f64).cos())
        .collect();
    let e = primitive_f(&bad, &CorrectionH::zero(), &trace).unwrap_err();
    assert!(e.to_string().contains("Re f"));
    bad.components[0].u.pop();
    assert!(period_a(&bad, &trace).is_err());
}

#[test]
fn csv_round_trip() {
    let s = make_scenario("conic-log").unwrap();
    let (curve, trace) = prepare(&s).unwrap();
    let f = sample_field(&curve, &trace, s.oracle.as_ref().unwrap(), Route::Forward).unwrap();
    let text = write_component_csv(&trace, 1, &f.components[1]);
    let back = read_component_csv(&text).unwrap();
    assert_eq!(back.u, f.components[1].u);
    assert_eq!(back.p, f.components[1].p);
    let text = write_connector_csv(&f.connectors);
    let back = read_connector_csv(&text).unwrap();
    assert_eq!(back.len(), f.connectors.len());
    assert_eq!(back[0].p, f.connectors[0].p);
    assert_eq!(back[0].path.x, f.connectors[0].path.x);
    assert!(read_component_csv("t,u\n1,2\n").is_err());
}

#[test]
fn h_is_zero_without_periods() {
    let s = make_scenario("line-rational").unwrap();
    let (curve, trace) = prepare(&s).unwrap();
    let h = build_h(&curve, &trace, &[0.0], HMode::Auto).unwrap();
    assert!(h.terms.is_empty());
    assert_eq!(eval_h(&h, &[c(1.0, 0.0), c(0.3, 0.0), c(0.0, 0.0)]).unwrap(), 0.0);
}
