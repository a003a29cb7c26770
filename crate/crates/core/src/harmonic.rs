//! From boundary data `(u, ∂u)` to a single-valued holomorphic `f` with
//! `Re f = u − h`: periods, the logarithmic correction `h`, connector paths
//! between boundary components, and the primitive `f = 2∫∂(u − h)`.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::fourier::Periodic;
use crate::geometry::{
    branch_points, dot, norm3, region_of_infinity_point, removed_region_of, BoundaryTrace, CurveDomain, ProjectivePoint,
};
use crate::roots::poly_roots;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Measured,
}

/// Samples of `u` and of the pullback `p(θ)` of `∂u` (so `∫∂u = ∫p dθ`) on
/// one boundary component.
#[derive(Debug, Clone)]
pub struct ComponentData {
    pub u: Vec<f64>,
    pub p: Vec<C64>,
}

/// A path on the curve inside V from a sample of one boundary component to a
/// sample of another, with quadrature nodes in a parameter `s`.
#[derive(Debug, Clone)]
pub struct ConnectorPath {
    /// `(component, sample index)`.
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub x: Vec<C64>,
    pub y: Vec<C64>,
    /// `dx/ds`, `dy/ds`.
    pub dx: Vec<C64>,
    pub dy: Vec<C64>,
    pub weight: Vec<f64>,
}

impl ConnectorPath {
    pub fn point(&self, i: usize) -> [C64; 3] {
        [C64::new(1.0, 0.0), self.x[i], self.y[i]]
    }

    pub fn tangent(&self, i: usize) -> [C64; 3] {
        [C64::new(0.0, 0.0), self.dx[i], self.dy[i]]
    }
}

#[derive(Debug, Clone)]
pub struct Connector {
    pub path: ConnectorPath,
    /// `∂u` pulled back along the path (per unit s).
    pub p: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct BoundaryField {
    pub components: Vec<ComponentData>,
    pub connectors: Vec<Connector>,
    pub provenance: Provenance,
}

impl BoundaryField {
    pub fn check_against(&self, trace: &BoundaryTrace) -> Result<()> {
        if self.components.len() != trace.components.len() {
            return Err(Error::Validation(format!(
                "boundary data has {} components, trace has {}",
                self.components.len(),
                trace.components.len()
            )));
        }
        for (c, (d, t)) in self.components.iter().zip(&trace.components).enumerate() {
            if d.u.len() != t.len() || d.p.len() != t.len() {
                return Err(Error::Validation(format!(
                    "component {c}: {} / {} samples, trace has {}",
                    d.u.len(),
                    d.p.len(),
                    t.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Periods {
    pub a: Vec<f64>,
    /// Raw `∮ p dθ` per component.
    pub raw: Vec<C64>,
    pub max_imag: f64,
    /// Worst spectral tail; large values mean non-periodic or unresolved data.
    pub tail: f64,
    pub flagged: bool,
}

pub fn period_a(field: &BoundaryField, trace: &BoundaryTrace) -> Result<Periods> {
    field.check_against(trace)?;
    let mut a = vec![];
    let mut raw = vec![];
    let mut max_imag = 0.0f64;
    let mut tail = 0.0f64;
    for (d, t) in field.components.iter().zip(&trace.components) {
        let s = Periodic::from_samples(&d.p, t.period());
        tail = tail.max(s.tail_ratio());
        let integral = s.mean() * t.period();
        let ar = integral / C64::new(0.0, TAU);
        raw.push(integral);
        max_imag = max_imag.max(ar.im.abs());
        a.push(ar.re);
    }
    if tail > 1e-6 {
        return Err(Error::Validation(format!(
            "boundary data not periodic or under-resolved (spectral tail {tail:.2e})"
        )));
    }
    Ok(Periods {
        a,
        raw,
        max_imag,
        tail,
        flagged: max_imag > 1e-9,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HMode {
    Paper,
    Robust,
    Auto,
}

impl std::str::FromStr for HMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "paper" => Ok(Self::Paper),
            "robust" => Ok(Self::Robust),
            "auto" => Ok(Self::Auto),
            _ => Err(format!("unknown h mode '{s}' (paper, robust, auto)")),
        }
    }
}

/// `c · log|ℓ(ζ)/ζ0|²`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LogTerm {
    pub c: f64,
    pub l: [C64; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrectionH {
    pub terms: Vec<LogTerm>,
    /// `Paper` or `Robust`; never `Auto`.
    pub mode: HMode,
    pub period_residual: f64,
    /// Residual of the paper-mode terms, when they were tried.
    pub paper_residual: Option<f64>,
    pub report: Option<String>,
}

impl CorrectionH {
    pub fn zero() -> Self {
        Self {
            terms: vec![],
            mode: HMode::Paper,
            period_residual: 0.0,
            paper_residual: Some(0.0),
            report: None,
        }
    }

    pub fn accepted(&self) -> bool {
        self.period_residual <= 1e-8
    }
}

pub fn eval_h(h: &CorrectionH, point: &[C64; 3]) -> Result<f64> {
    let mut s = 0.0;
    for t in &h.terms {
        let r = dot(&t.l, point) / point[0];
        if r.norm() == 0.0 || !r.is_finite() {
            return Err(Error::Numerical("h evaluated at one of its singular points".into()));
        }
        s += t.c * r.norm_sqr().ln();
    }
    Ok(s)
}

/// Pullback of `∂h` along `tangent` at `point`.
pub fn eval_dh(h: &CorrectionH, point: &[C64; 3], tangent: &[C64; 3]) -> C64 {
    h.terms
        .iter()
        .map(|t| t.c * (dot(&t.l, tangent) / dot(&t.l, point) - tangent[0] / point[0]))
        .sum()
}

/// `M_r = (1/2πi)∮_{σ_r} d log(ℓ/z0)`.
pub fn log_term_periods(trace: &BoundaryTrace, l: &[C64; 3]) -> Vec<f64> {
    let term = CorrectionH {
        terms: vec![LogTerm { c: 1.0, l: *l }],
        ..CorrectionH::zero()
    };
    (0..trace.components.len())
        .map(|c| {
            let comp = &trace.components[c];
            let vals: Vec<C64> = (0..comp.len())
                .map(|i| eval_dh(&term, &trace.chart(c, i), &trace.tangent(c, i)))
                .collect();
            (crate::sum::pairwise(&vals) * comp.dtheta() / C64::new(0.0, TAU)).re
        })
        .collect()
}

fn residual_of(m: &[Vec<f64>], c: &[f64], a: &[f64]) -> f64 {
    a.iter()
        .enumerate()
        .map(|(r, ar)| (ar - m.iter().zip(c).map(|(col, cs)| col[r] * cs).sum::<f64>()).abs())
        .fold(0.0, f64::max)
}

/// Finite intersections of `{ℓ = 0}` with the curve, as chart points.
fn line_intersections(curve: &CurveDomain, l: &[C64; 3]) -> Vec<(C64, C64)> {
    // parametrize the line by two spanning points
    let n = *l;
    let mut basis = vec![];
    for e in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
        let e = [C64::new(e[0], 0.0), C64::new(e[1], 0.0), C64::new(e[2], 0.0)];
        // cross product with ℓ gives points on the line
        let p = [
            n[1] * e[2] - n[2] * e[1],
            n[2] * e[0] - n[0] * e[2],
            n[0] * e[1] - n[1] * e[0],
        ];
        if norm3(&p) > 1e-9 {
            basis.push(p);
        }
    }
    let (p, q) = (
        basis[0],
        basis[1..].iter().copied().max_by(|a, b| {
            let ca = cross_norm(&basis[0], a);
            let cb = cross_norm(&basis[0], b);
            ca.total_cmp(&cb)
        }),
    );
    let Some(q) = q else { return vec![] };
    let co = curve.poly.along_line(&p, &q);
    let found = poly_roots(&co);
    let mut out = vec![];
    for t in found.roots {
        let z = [p[0] + t * q[0], p[1] + t * q[1], p[2] + t * q[2]];
        if z[0].norm() > 1e-9 * norm3(&z) {
            out.push((z[1] / z[0], z[2] / z[0]));
        }
    }
    // a root lost at infinity of the parameter is the point q itself
    if found.dropped > 0 && q[0].norm() > 1e-9 * norm3(&q) {
        out.push((q[1] / q[0], q[2] / q[0]));
    }
    out
}

fn cross_norm(a: &[C64; 3], b: &[C64; 3]) -> f64 {
    norm3(&[
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

/// Candidate linear forms whose zeros on the curve all lie outside `V̄`.
fn candidate_pool(curve: &CurveDomain, trace: &BoundaryTrace, enlarge: bool) -> Vec<[C64; 3]> {
    let r = curve.radius;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut pool: Vec<[C64; 3]> = vec![];
    let admissible = |l: &[C64; 3]| line_intersections(curve, l).iter().all(|(x, _)| x.norm() > 1.2 * r);
    // tangent lines at the points at infinity, shifted off the origin
    for q in &curve.infinity_points {
        let g = curve.poly.grad(&q.z);
        let gn = norm3(&g);
        if gn < 1e-9 {
            continue;
        }
        let g = [g[0] / gn, g[1] / gn, g[2] / gn];
        for scale in [0.5, 0.2, 0.1, 0.05, 0.02, 0.01] {
            let cands: Vec<[C64; 3]> = (0..4)
                .map(|k| [g[0] - C64::from_polar(scale, PI * k as f64 / 2.0 + 0.3), g[1], g[2]])
                .collect();
            if cands.iter().all(admissible) {
                pool.extend(cands);
                break;
            }
        }
    }
    // vertical and horizontal lines
    let k = 2 * curve.degree().max(2);
    for i in 0..k {
        let c = C64::from_polar(2.0 * r, TAU * i as f64 / k as f64 + 0.1);
        let l = [-c, one, zero];
        if admissible(&l) {
            pool.push(l);
        }
        let l = [-c, zero, one];
        if admissible(&l) {
            pool.push(l);
        }
    }
    if enlarge {
        // lines through pairs of removed-region points over |x| = 2R
        let mut pts = vec![];
        for c in 0..trace.components.len() {
            let comp = &trace.components[c];
            for i in (0..comp.len()).step_by((comp.len() / 6).max(1)) {
                let theta = comp.theta[i];
                let e = C64::from_polar(1.0, theta);
                let path = |s: f64| e * (r + s * r);
                let mut y = comp.y[i];
                let mut ok = true;
                for st in 0..32 {
                    match curve.track(&path, st as f64 / 32.0, (st + 1) as f64 / 32.0, y) {
                        Ok(v) => y = v,
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    pts.push([one, 2.0 * r * e, y]);
                }
            }
        }
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let (a, b) = (pts[i], pts[j]);
                let l = [
                    a[1] * b[2] - a[2] * b[1],
                    a[2] * b[0] - a[0] * b[2],
                    a[0] * b[1] - a[1] * b[0],
                ];
                if norm3(&l) > 1e-9 && admissible(&l) {
                    pool.push(l);
                }
            }
        }
    }
    pool
}

fn min_norm_solve(m: &[Vec<f64>], a: &[f64]) -> Vec<f64> {
    let rows = a.len();
    let cols = m.len();
    let mat = DMatrix::from_fn(rows, cols, |r, c| m[c][r]);
    let rhs = DVector::from_column_slice(a);
    let svd = mat.svd(true, true);
    let smax = svd.singular_values.max();
    match svd.solve(&rhs, 1e-10 * smax.max(1e-300)) {
        Ok(c) => c.iter().copied().collect(),
        Err(_) => vec![0.0; cols],
    }
}

fn robust_h(curve: &CurveDomain, trace: &BoundaryTrace, a: &[f64]) -> Result<CorrectionH> {
    let mut last = f64::INFINITY;
    for enlarge in [false, true] {
        let pool = candidate_pool(curve, trace, enlarge);
        if pool.is_empty() {
            continue;
        }
        let m: Vec<Vec<f64>> = pool.iter().map(|l| log_term_periods(trace, l)).collect();
        let c = min_norm_solve(&m, a);
        let res = residual_of(&m, &c, a);
        last = res;
        if res <= 1e-8 {
            let terms = pool
                .iter()
                .zip(&c)
                .filter(|(_, c)| c.abs() > 1e-13)
                .map(|(l, &c)| LogTerm { c, l: *l })
                .collect();
            return Ok(CorrectionH {
                terms,
                mode: HMode::Robust,
                period_residual: res,
                paper_residual: None,
                report: None,
            });
        }
    }
    Err(Error::Numerical(format!(
        "robust h: period match failed, residual {last:.3e} (pool rank deficient)"
    )))
}

/// One logarithm per removed region: `h = Σ_r a_r log|x − x(z^(r))|²`.
pub fn paper_h(curve: &CurveDomain, trace: &BoundaryTrace, a: &[f64]) -> Result<CorrectionH> {
    if curve.reference_points.len() != a.len() {
        return Err(Error::Validation(format!(
            "{} reference points for {} boundary components",
            curve.reference_points.len(),
            a.len()
        )));
    }
    let terms: Vec<LogTerm> = curve
        .reference_points
        .iter()
        .zip(a)
        .filter(|(_, &ar)| ar != 0.0)
        .map(|(z, &ar)| LogTerm {
            c: ar,
            l: [-z.x(), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        })
        .collect();
    let m: Vec<Vec<f64>> = terms.iter().map(|t| log_term_periods(trace, &t.l)).collect();
    let c: Vec<f64> = terms.iter().map(|t| t.c).collect();
    let res = residual_of(&m, &c, a);
    Ok(CorrectionH {
        terms,
        mode: HMode::Paper,
        period_residual: res,
        paper_residual: Some(res),
        report: None,
    })
}

pub fn build_h(curve: &CurveDomain, trace: &BoundaryTrace, a: &[f64], mode: HMode) -> Result<CorrectionH> {
    if a.iter().all(|x| x.abs() <= 1e-12) {
        return Ok(CorrectionH {
            mode: if mode == HMode::Robust {
                HMode::Robust
            } else {
                HMode::Paper
            },
            ..CorrectionH::zero()
        });
    }
    match mode {
        HMode::Paper => paper_h(curve, trace, a),
        HMode::Robust => robust_h(curve, trace, a),
        HMode::Auto => {
            let p = paper_h(curve, trace, a)?;
            if p.accepted() {
                return Ok(p);
            }
            let mut r = robust_h(curve, trace, a)?;
            r.paper_residual = Some(p.period_residual);
            r.report = Some(format!(
                "paper-mode h rejected: period residual {:.3e} > 1e-8; switched to robust log basis ({} terms, residual {:.3e})",
                p.period_residual,
                r.terms.len(),
                r.period_residual
            ));
            Ok(r)
        }
    }
}

/// Route selection for connector construction; the two routes use different
/// branch-point loops so their offsets can be compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Forward,
    Reverse,
}

struct Loop {
    base: usize,
    pieces: Vec<Box<dyn Fn(f64) -> (C64, C64)>>,
    lengths: Vec<f64>,
}

fn branch_loop(trace: &BoundaryTrace, b: C64, others: &[C64], ccw: bool) -> Loop {
    let r = trace.radius;
    let n = trace.n_theta;
    let arg = if b.norm() < 1e-12 { 0.0 } else { b.arg().rem_euclid(TAU) };
    let base = ((arg / TAU * n as f64).round() as usize) % n;
    let xb = C64::from_polar(r, TAU * base as f64 / n as f64);
    let mut delta = (0.5 * (r - b.norm())).min(0.25 * r);
    for o in others {
        if (o - b).norm() > 1e-9 {
            delta = delta.min(0.4 * (o - b).norm());
        }
    }
    let dir = (xb - b) / (xb - b).norm();
    let a = b + delta * dir;
    let sign = if ccw { 1.0 } else { -1.0 };
    let seg_len = (xb - a).norm();
    let pieces: Vec<Box<dyn Fn(f64) -> (C64, C64)>> = vec![
        Box::new(move |s| (xb + s * (a - xb), a - xb)),
        Box::new(move |s| {
            let e = C64::from_polar(1.0, sign * TAU * s);
            (b + (a - b) * e, (a - b) * e * C64::new(0.0, sign * TAU))
        }),
        Box::new(move |s| (a + s * (xb - a), xb - a)),
    ];
    Loop {
        base,
        pieces,
        lengths: vec![seg_len, TAU * delta, seg_len],
    }
}

fn lift_loop(curve: &CurveDomain, lp: &Loop, y0: C64, with_nodes: bool) -> Result<(C64, Option<ConnectorPath>)> {
    let gl = GaussLegendre::new(NonZeroUsize::new(24).expect("nonzero"));
    let mut y = y0;
    let mut s_prev = 0.0;
    let mut path = ConnectorPath {
        from: (0, 0),
        to: (0, 0),
        x: vec![],
        y: vec![],
        dx: vec![],
        dy: vec![],
        weight: vec![],
    };
    for (piece, &len) in lp.pieces.iter().zip(&lp.lengths) {
        let parts = ((len / 0.1).ceil() as usize).clamp(4, 200);
        let xf = |s: f64| piece(s).0;
        for k in 0..parts {
            let (s0, s1) = (k as f64 / parts as f64, (k + 1) as f64 / parts as f64);
            let h = s1 - s0;
            let mut nodes: Vec<(f64, f64)> = gl
                .as_node_weight_pairs()
                .iter()
                .map(|&(t, w)| (s0 + 0.5 * h * (t + 1.0), 0.5 * h * w))
                .collect();
            nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (s, w) in nodes {
                y = curve.track(&xf, s_prev, s, y)?;
                s_prev = s;
                if with_nodes {
                    let (x, dx) = piece(s);
                    path.x.push(x);
                    path.y.push(y);
                    path.dx.push(dx);
                    path.dy.push(curve.slope(x, y) * dx);
                    path.weight.push(w);
                }
            }
            y = curve.track(&xf, s_prev, s1, y)?;
            s_prev = s1;
        }
        s_prev = 0.0;
    }
    Ok((y, with_nodes.then_some(path)))
}

/// Connector paths from component 0 to every other component: each path
/// leaves σ at the boundary point nearest a branch point, loops around it
/// and returns on a different sheet. Components are reached breadth-first.
pub fn default_connectors(curve: &CurveDomain, trace: &BoundaryTrace, route: Route) -> Result<Vec<ConnectorPath>> {
    let m = trace.components.len();
    if m <= 1 {
        return Ok(vec![]);
    }
    let mut bps: Vec<C64> = branch_points(curve)
        .into_iter()
        .filter(|b| b.norm() < 0.95 * curve.radius)
        .collect();
    if route == Route::Reverse {
        bps.reverse();
    }
    let loops: Vec<Loop> = bps
        .iter()
        .map(|&b| branch_loop(trace, b, &bps, route == Route::Forward))
        .collect();
    let n = trace.n_theta;
    let mut known = vec![false; m];
    known[0] = true;
    let mut queue = VecDeque::from([0usize]);
    let mut out = vec![];
    while let Some(c) = queue.pop_front() {
        let comp = &trace.components[c];
        for lp in &loops {
            for l in 0..comp.n_cover {
                let idx = l * n + lp.base;
                let (y_end, _) = lift_loop(curve, lp, comp.y[idx], false)?;
                let theta_b = TAU * lp.base as f64 / n as f64;
                let (c2, t2) = trace.locate(theta_b, y_end);
                if known[c2] {
                    continue;
                }
                let (_, path) = lift_loop(curve, lp, comp.y[idx], true)?;
                let mut path = path.expect("nodes requested");
                let idx2 = ((t2 / trace.components[c2].dtheta()).round() as usize) % trace.components[c2].len();
                path.from = (c, idx);
                path.to = (c2, idx2);
                out.push(path);
                known[c2] = true;
                queue.push_back(c2);
            }
        }
    }
    if let Some(c) = known.iter().position(|k| !k) {
        return Err(Error::Geometry(format!("no connector reaches boundary component {c}")));
    }
    Ok(out)
}

/// Holomorphic `f` on the boundary: per component a trigonometric series in θ.
#[derive(Debug, Clone)]
pub struct PrimitiveF {
    pub series: Vec<Periodic>,
    /// `f` at the trace samples.
    pub samples: Vec<Vec<C64>>,
    /// Additive constant of each component.
    pub offsets: Vec<C64>,
    /// `|∮ 2∂(u − h)|` per component.
    pub closure: Vec<f64>,
    /// `max |Re f − (u − h)|` over all samples.
    pub re_drift: f64,
    pub period_residual: f64,
}

impl PrimitiveF {
    pub fn value(&self, component: usize, theta: f64) -> C64 {
        self.series[component].eval(theta)
    }

    pub fn max_closure(&self) -> f64 {
        self.closure.iter().copied().fold(0.0, f64::max)
    }
}

/// Integrates `2(p − ∂h)` spectrally along each component, fixes the anchor
/// `f = u − h` at sample 0 of component 0, and transports constants across
/// connectors. Fails if `Re f` drifts from `u − h` or `f` does not close.
pub fn primitive_f(field: &BoundaryField, h: &CorrectionH, trace: &BoundaryTrace) -> Result<PrimitiveF> {
    field.check_against(trace)?;
    let m = trace.components.len();
    let mut series = Vec::with_capacity(m);
    let mut closure = Vec::with_capacity(m);
    let mut target = Vec::with_capacity(m);
    for c in 0..m {
        let comp = &trace.components[c];
        let data = &field.components[c];
        let mut q = Vec::with_capacity(comp.len());
        let mut t = Vec::with_capacity(comp.len());
        for i in 0..comp.len() {
            let pt = trace.chart(c, i);
            q.push(2.0 * (data.p[i] - eval_dh(h, &pt, &trace.tangent(c, i))));
            t.push(data.u[i] - eval_h(h, &pt)?);
        }
        let s = Periodic::from_samples(&q, comp.period());
        closure.push((s.mean() * comp.period()).norm());
        series.push(s.antiderivative());
        target.push(t);
    }
    let mut offsets = vec![C64::new(0.0, 0.0); m];
    let mut known = vec![false; m];
    offsets[0] = C64::new(target[0][0], 0.0) - series[0].eval(trace.components[0].theta[0]);
    known[0] = true;
    let mut pending: Vec<&Connector> = field.connectors.iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|con| {
            let (c0, i0) = con.path.from;
            let (c1, i1) = con.path.to;
            if !known[c0] || known[c1] {
                return !known[c0];
            }
            let vals: Vec<C64> = (0..con.path.x.len())
                .map(|k| 2.0 * (con.p[k] - eval_dh(h, &con.path.point(k), &con.path.tangent(k))) * con.path.weight[k])
                .collect();
            let integral = crate::sum::pairwise(&vals);
            let start = series[c0].eval(trace.components[c0].theta[i0]) + offsets[c0];
            offsets[c1] = start + integral - series[c1].eval(trace.components[c1].theta[i1]);
            known[c1] = true;
            false
        });
        if pending.len() == before {
            break;
        }
    }
    if let Some(c) = known.iter().position(|k| !k) {
        return Err(Error::Validation(format!(
            "no connector reaches boundary component {c}"
        )));
    }
    let mut re_drift = 0.0f64;
    let mut samples = Vec::with_capacity(m);
    for c in 0..m {
        series[c].coeffs[0] += offsets[c];
        let comp = &trace.components[c];
        let vals: Vec<C64> = comp.theta.iter().map(|&t| series[c].eval(t)).collect();
        for (v, t) in vals.iter().zip(&target[c]) {
            re_drift = re_drift.max((v.re - t).abs());
        }
        samples.push(vals);
    }
    let f = PrimitiveF {
        series,
        samples,
        offsets,
        closure,
        re_drift,
        period_residual: h.period_residual,
    };
    if f.re_drift > 1e-6 || f.max_closure() > 1e-8 {
        return Err(Error::Numerical(format!(
            "Re f consistency check failed: max |Re f − (u − h)| = {:.3e}, max closure |∮2∂(u−h)| = {:.3e}; h mode {:?} has period residual {:.3e}",
            f.re_drift,
            f.max_closure(),
            h.mode,
            h.period_residual
        )));
    }
    Ok(f)
}

/// `g(ζ) = f̃([ζ])/ζ0`, with `f̃` constant along fibers of the chart
/// coordinate `x`: the sheet over `arg x` nearest `y(ζ)` on the given
/// component. Returns `g` and the chart distance of the projection.
pub fn lift_g(f: &PrimitiveF, trace: &BoundaryTrace, curve: &CurveDomain, zeta: &[C64; 3]) -> Result<(C64, f64)> {
    if zeta[0].norm() < 1e-14 {
        return Err(Error::Numerical("lift_g at ζ0 = 0".into()));
    }
    let x = zeta[1] / zeta[0];
    let y = zeta[2] / zeta[0];
    let theta = x.arg();
    let (c, t) = trace.locate(theta, y);
    let yb = trace.y_at(curve, c, t);
    let dist = ((x - trace.x(t)).norm_sqr() + (y - yb).norm_sqr()).sqrt();
    Ok((f.value(c, t) / zeta[0], dist))
}

/// Default reference points pass the placement checks.
pub fn check_reference_points(curve: &CurveDomain) -> Result<()> {
    for (r, z) in curve.reference_points.iter().enumerate() {
        if crate::geometry::rho(&z.z, curve.radius) <= 0.0 || z.x().norm() <= curve.radius {
            return Err(Error::Validation(format!(
                "reference point {r} is not in the removed region"
            )));
        }
    }
    Ok(())
}

/// Removed regions of the zeros and poles of `ℓ/z0` (zeros first).
pub fn log_term_divisor(curve: &CurveDomain, trace: &BoundaryTrace, l: &[C64; 3]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut zeros = vec![];
    for (x, y) in line_intersections(curve, l) {
        zeros.push(removed_region_of(curve, trace, x, y)?);
    }
    let mut poles = vec![];
    for q in &curve.infinity_points {
        if dot(l, &q.z).norm() > 1e-9 {
            poles.push(region_of_infinity_point(curve, trace, q)?);
        }
    }
    Ok((zeros, poles))
}

pub fn read_component_csv(text: &str) -> Result<ComponentData> {
    let mut u = vec![];
    let mut p = vec![];
    for (n, line) in text.lines().enumerate() {
        if n == 0 {
            if line.trim() != "theta,u,p_re,p_im" {
                return Err(Error::Validation(format!("bad boundary header: {line}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Validation(format!("line {}: {e}", n + 1)))?;
        if v.len() != 4 {
            return Err(Error::Validation(format!("line {}: expected 4 columns", n + 1)));
        }
        u.push(v[1]);
        p.push(C64::new(v[2], v[3]));
    }
    Ok(ComponentData { u, p })
}

pub fn write_component_csv(trace: &BoundaryTrace, c: usize, data: &ComponentData) -> String {
    let mut s = String::from("theta,u,p_re,p_im\n");
    for (i, t) in trace.components[c].theta.iter().enumerate() {
        let _ = writeln!(
            s,
            "{t:.17e},{:.17e},{:.17e},{:.17e}",
            data.u[i], data.p[i].re, data.p[i].im
        );
    }
    s
}

const CONNECTOR_HEADER: &str =
    "connector,from_component,from_index,to_component,to_index,x_re,x_im,y_re,y_im,dx_re,dx_im,dy_re,dy_im,weight,p_re,p_im";

pub fn write_connector_csv(cons: &[Connector]) -> String {
    let mut s = format!("{CONNECTOR_HEADER}\n");
    for (k, c) in cons.iter().enumerate() {
        let pth = &c.path;
        for i in 0..pth.x.len() {
            let _ = writeln!(
                s,
                "{k},{},{},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                pth.from.0,
                pth.from.1,
                pth.to.0,
                pth.to.1,
                pth.x[i].re,
                pth.x[i].im,
                pth.y[i].re,
                pth.y[i].im,
                pth.dx[i].re,
                pth.dx[i].im,
                pth.dy[i].re,
                pth.dy[i].im,
                pth.weight[i],
                c.p[i].re,
                c.p[i].im
            );
        }
    }
    s
}

pub fn read_connector_csv(text: &str) -> Result<Vec<Connector>> {
    let mut out: Vec<Connector> = vec![];
    for (n, line) in text.lines().enumerate() {
        if n == 0 {
            if line.trim() != CONNECTOR_HEADER {
                return Err(Error::Validation(format!("bad connector header: {line}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 16 {
            return Err(Error::Validation(format!(
                "connector line {}: expected 16 columns",
                n + 1
            )));
        }
        let bad = |e: String| Error::Validation(format!("connector line {}: {e}", n + 1));
        let ints: Vec<usize> = f[..5]
            .iter()
            .map(|s| s.parse::<usize>().map_err(|e| bad(e.to_string())))
            .collect::<Result<_>>()?;
        let v: Vec<f64> = f[5..]
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| bad(e.to_string())))
            .collect::<Result<_>>()?;
        if ints[0] == out.len() {
            out.push(Connector {
                path: ConnectorPath {
                    from: (ints[1], ints[2]),
                    to: (ints[3], ints[4]),
                    x: vec![],
                    y: vec![],
                    dx: vec![],
                    dy: vec![],
                    weight: vec![],
                },
                p: vec![],
            });
        } else if ints[0] + 1 != out.len() {
            return Err(bad("connectors must be listed contiguously".into()));
        }
        let c = out.last_mut().expect("pushed above");
        c.path.x.push(C64::new(v[0], v[1]));
        c.path.y.push(C64::new(v[2], v[3]));
        c.path.dx.push(C64::new(v[4], v[5]));
        c.path.dy.push(C64::new(v[6], v[7]));
        c.path.weight.push(v[8]);
        c.p.push(C64::new(v[9], v[10]));
    }
    Ok(out)
}

/// Point of the curve as a projective point, for reporting.
pub fn chart_point(x: C64, y: C64) -> ProjectivePoint {
    ProjectivePoint::chart(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_log_term_value() {
        let h = CorrectionH {
            terms: vec![LogTerm {
                c: 1.0,
                l: [C64::new(-2.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            }],
            ..CorrectionH::zero()
        };
        let p = crate::geometry::unit(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.3, 0.0)]);
        assert!((eval_h(&h, &p).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(eval_h(&CorrectionH::zero(), &p).unwrap(), 0.0);
    }
}
