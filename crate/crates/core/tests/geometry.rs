use std::f64::consts::TAU;

use fantappie::algebra::{conic, fermat_cubic, line, HomPoly3};
use fantappie::geometry::{
    branch_points, choose_barrier, dot, intersect_line, rho, trace_boundary, unit, CurveDomain, ProjectivePoint,
};
use fantappie::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn component_counts_stable_under_refinement() {
    for (p, want) in [(line(), 1), (conic(), 2), (fermat_cubic(), 3)] {
        let curve = CurveDomain::new(p, 2.0).unwrap();
        for n in [64, 128, 256] {
            let t = trace_boundary(&curve, n).unwrap();
            assert_eq!(t.components.len(), want);
            let covered: usize = t.components.iter().map(|c| c.n_cover).sum();
            assert_eq!(covered, curve.degree());
            assert!(t.max_residual <= 1e-11 && t.closure_error <= 1e-9);
        }
    }
}

#[test]
fn trace_samples_lie_on_curve_and_circle() {
    let curve = CurveDomain::new(fermat_cubic(), 2.0).unwrap();
    let t = trace_boundary(&curve, 128).unwrap();
    for (ci, comp) in t.components.iter().enumerate() {
        for i in 0..comp.len() {
            let z = t.chart(ci, i);
            assert!(curve.poly.eval(&z).norm() <= 1e-11 * curve.poly.term_scale(&z));
            assert!(rho(&z, 2.0).abs() <= 1e-14);
        }
    }
}

#[test]
fn trace_derivative_matches_continuation() {
    let curve = CurveDomain::new(conic(), 2.0).unwrap();
    let t = trace_boundary(&curve, 256).unwrap();
    let comp = &t.components[0];
    for i in [0, 17, 101] {
        let h = 1e-5;
        let th = comp.theta[i];
        let yp = t.y_at(&curve, 0, th + h);
        let ym = t.y_at(&curve, 0, th - h);
        assert!(((yp - ym) / (2.0 * h) - comp.dy[i]).norm() < 1e-6);
    }
}

#[test]
fn branch_points_of_conic_and_fermat() {
    let b = branch_points(&CurveDomain::new(conic(), 2.0).unwrap());
    assert_eq!(b.len(), 2);
    assert!(b.iter().all(|x| (x * x - 1.0).norm() < 1e-10));
    let b = branch_points(&CurveDomain::new(fermat_cubic(), 2.0).unwrap());
    // x³ = −1, each a double root of the discriminant
    assert!(b.iter().all(|x| (x * x * x + 1.0).norm() < 1e-6));
    for k in 0..3 {
        let r = C64::from_polar(1.0, TAU * (k as f64 + 0.5) / 3.0);
        assert!(b.iter().any(|x| (x - r).norm() < 1e-6));
    }
}

#[test]
fn rejects_branch_point_on_circle() {
    let e = trace_boundary(&CurveDomain::new(conic(), 1.0).unwrap(), 64).unwrap_err();
    let msg = e.to_string();
    assert!(msg.contains("1.01") || msg.contains("0.99"), "{msg}");
}

#[test]
fn rejects_bad_domains() {
    assert!(CurveDomain::new(line(), -1.0).is_err());
    assert!(CurveDomain::new(line(), 0.0).is_err());
    // z0 z1 passes through [0:0:1]
    let p = HomPoly3::from_real(&[([1, 1, 0], 1.0)]).unwrap();
    assert!(CurveDomain::new(p, 2.0).is_err());
}

#[test]
fn intersection_set_has_d_points_on_line_and_curve() {
    let curve = CurveDomain::new(fermat_cubic(), 2.0).unwrap();
    let y = curve.fiber_over_x(c(0.1, 0.05)).ys[0];
    let w = ProjectivePoint::sphere([c(1.0, 0.0), c(0.1, 0.05), y]).unwrap();
    let set = choose_barrier(&curve, &w, 3).unwrap();
    assert_eq!(set.points.len(), 3);
    assert_eq!(set.taus[0], c(0.0, 0.0));
    for (p, x) in set.points.iter().zip(&set.x_values) {
        assert!(curve.poly.eval(&p.z).norm() <= 1e-10 * curve.poly.term_scale(&p.z));
        assert!((p.x() - x).norm() < 1e-12);
        // on the line through w with direction v
        let m = [w.z, set.direction, p.z];
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        assert!(det.norm() < 1e-10);
    }
    let (p0, w0) = (unit(&set.points[0].z), unit(&w.z));
    assert!((dot(&p0.map(|v| v.conj()), &w0).norm() - 1.0).abs() < 1e-12);
}

#[test]
fn barrier_choice_is_seeded() {
    let curve = CurveDomain::new(conic(), 2.0).unwrap();
    let y = curve.fiber_over_x(c(0.2, 0.1)).ys[0];
    let w = ProjectivePoint::sphere([c(1.0, 0.0), c(0.2, 0.1), y]).unwrap();
    let a = choose_barrier(&curve, &w, 11).unwrap();
    let b = choose_barrier(&curve, &w, 11).unwrap();
    assert_eq!(a.direction, b.direction);
    assert_eq!(a.x_values, b.x_values);
}

#[test]
fn barrier_vector_annihilates_direction_and_normalizes_w() {
    let curve = CurveDomain::new(conic(), 2.0).unwrap();
    let y = curve.fiber_over_x(c(-0.3, 0.25)).ys[0];
    let w = ProjectivePoint::sphere([c(1.0, 0.0), c(-0.3, 0.25), y]).unwrap();
    let set = choose_barrier(&curve, &w, 5).unwrap();
    let wz = unit(&w.z);
    assert!(dot(&set.r_vec, &set.direction).norm() < 1e-12);
    assert!(dot(&set.r_vec, &wz).norm() > 1e-3);
}

#[test]
fn vertical_line_through_conic_point_has_coincident_x() {
    let curve = CurveDomain::new(conic(), 2.0).unwrap();
    let x = c(0.2, 0.0);
    let y = curve.fiber_over_x(x).ys[0];
    let w = ProjectivePoint::sphere([c(1.0, 0.0), x, y]).unwrap();
    let set = intersect_line(
        &curve,
        &w,
        &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
    )
    .unwrap();
    assert!(set.min_x_separation < 1e-10);
    assert!(!set.violations(&Default::default()).is_empty());
}
