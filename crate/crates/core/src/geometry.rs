//! Charts, lifts, boundary tracing with monodromy, branch points and barrier
//! lines.
//!
//! Conventions: the chart is `(1, x, y)` with `x = z1/z0`, `y = z2/z0`; the
//! domain V is `|x| < R`, cut out by `ρ = (|z1|² − R²|z0|²)/|z|²`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::algebra::HomPoly3;
use crate::roots::{min_separation, newton_polish, poly_roots};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Chart,
    Sphere,
    Plane,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectivePoint {
    pub z: [C64; 3],
    pub tag: Normalization,
}

pub fn norm3(z: &[C64; 3]) -> f64 {
    (z[0].norm_sqr() + z[1].norm_sqr() + z[2].norm_sqr()).sqrt()
}

pub fn unit(z: &[C64; 3]) -> [C64; 3] {
    let n = norm3(z);
    [z[0] / n, z[1] / n, z[2] / n]
}

pub fn dot(a: &[C64; 3], b: &[C64; 3]) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn conj3(a: &[C64; 3]) -> [C64; 3] {
    [a[0].conj(), a[1].conj(), a[2].conj()]
}

impl ProjectivePoint {
    pub fn chart(x: C64, y: C64) -> Self {
        Self {
            z: [C64::new(1.0, 0.0), x, y],
            tag: Normalization::Chart,
        }
    }

    pub fn sphere(z: [C64; 3]) -> Result<Self> {
        if norm3(&z) == 0.0 || !norm3(&z).is_finite() {
            return Err(Error::Validation("zero or non-finite projective representative".into()));
        }
        Ok(Self {
            z: unit(&z),
            tag: Normalization::Sphere,
        })
    }

    pub fn x(&self) -> C64 {
        self.z[1] / self.z[0]
    }

    pub fn y(&self) -> C64 {
        self.z[2] / self.z[0]
    }

    pub fn unit(&self) -> [C64; 3] {
        unit(&self.z)
    }
}

/// `ρ(z) = (|z1|² − R²|z0|²)/|z|²`; negative inside V.
pub fn rho(z: &[C64; 3], radius: f64) -> f64 {
    (z[1].norm_sqr() - radius * radius * z[0].norm_sqr()) / norm3(z).powi(2)
}

#[derive(Debug, Clone)]
pub struct CurveDomain {
    pub poly: HomPoly3,
    pub radius: f64,
    pub infinity_points: Vec<ProjectivePoint>,
    /// One per boundary component once set (see [`default_reference_points`]).
    pub reference_points: Vec<ProjectivePoint>,
}

impl CurveDomain {
    pub fn new(poly: HomPoly3, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Validation(format!("radius must be positive, got {radius}")));
        }
        let d = poly.degree();
        if d == 0 {
            return Err(Error::Validation("curve degree must be at least 1".into()));
        }
        // [0:0:1] on the curve makes chart fibers degenerate
        if poly.coeff([0, 0, d]).norm() <= 1e-12 * poly.norm1() {
            return Err(Error::Validation(
                "curve passes through [0:0:1]; fibers over x degenerate (apply a coordinate change)".into(),
            ));
        }
        let infinity_points = infinity_points(&poly)?;
        Ok(Self {
            poly,
            radius,
            infinity_points,
            reference_points: vec![],
        })
    }

    pub fn degree(&self) -> usize {
        self.poly.degree() as usize
    }

    /// `(P, ∂P/∂x, ∂P/∂y)` of the chart polynomial `P(1,x,y)`.
    pub fn chart_eval(&self, x: C64, y: C64) -> (C64, C64, C64) {
        let z = [C64::new(1.0, 0.0), x, y];
        let g = self.poly.grad(&z);
        (self.poly.eval(&z), g[1], g[2])
    }

    /// `dy/dx` along the curve.
    pub fn slope(&self, x: C64, y: C64) -> C64 {
        let (_, px, py) = self.chart_eval(x, y);
        -px / py
    }

    pub fn polish_y(&self, x: C64, y: C64) -> C64 {
        newton_polish(&self.poly.chart_in_y(x), y, 8)
    }

    pub fn fiber_over_x(&self, x: C64) -> Fiber {
        let co = self.poly.chart_in_y(x);
        let r = poly_roots(&co);
        let sep = min_separation(&r.roots);
        let scale = 1.0 + r.roots.iter().map(|y| y.norm()).fold(0.0, f64::max);
        let residual = r
            .roots
            .iter()
            .map(|&y| self.poly.eval(&unit(&[C64::new(1.0, 0.0), x, y])).norm())
            .fold(0.0, f64::max);
        Fiber {
            x,
            branch: sep < 1e-6 * scale,
            reduced: r.dropped,
            ys: r.roots,
            residual,
        }
    }

    /// Follow one root of `P(1, x(s), ·)` from `s0` to `s1` along a path,
    /// halving steps when the nearest-root match is ambiguous.
    pub fn track(&self, path: &dyn Fn(f64) -> C64, s0: f64, s1: f64, y0: C64) -> Result<C64> {
        self.track_depth(path, s0, s1, y0, 0)
    }

    fn track_depth(&self, path: &dyn Fn(f64) -> C64, s0: f64, s1: f64, y0: C64, depth: u32) -> Result<C64> {
        let (x0, x1) = (path(s0), path(s1));
        let mut pred = y0 + self.slope(x0, y0) * (x1 - x0);
        if !pred.is_finite() {
            pred = y0;
        }
        let ys = self.fiber_over_x(x1).ys;
        let mut dist: Vec<(f64, C64)> = ys.iter().map(|&y| ((y - pred).norm(), y)).collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0));
        let unambiguous = dist.len() < 2 || dist[1].0 > 10.0 * dist[0].0.max(1e-300);
        if unambiguous && dist[0].0 <= 0.25 * (1.0 + (y0 - pred).norm() * 4.0) {
            return Ok(self.polish_y(x1, dist[0].1));
        }
        if depth >= 40 {
            return Err(Error::Geometry(format!("continuation ambiguous near x = {x1}")));
        }
        let sm = 0.5 * (s0 + s1);
        let ym = self.track_depth(path, s0, sm, y0, depth + 1)?;
        self.track_depth(path, sm, s1, ym, depth + 1)
    }
}

#[derive(Debug, Clone)]
pub struct Fiber {
    pub x: C64,
    pub ys: Vec<C64>,
    /// Roots lost to a vanishing leading coefficient.
    pub reduced: usize,
    pub branch: bool,
    pub residual: f64,
}

/// Points at infinity `[0 : z1 : z2]` with multiplicity.
pub fn infinity_points(p: &HomPoly3) -> Result<Vec<ProjectivePoint>> {
    let co = p.at_infinity();
    if co.iter().all(|c| c.norm() == 0.0) {
        return Err(Error::Validation("curve contains the line at infinity z0 = 0".into()));
    }
    let r = poly_roots(&co);
    let mut pts = Vec::with_capacity(p.degree() as usize);
    for t in r.roots {
        pts.push(ProjectivePoint::sphere([C64::new(0.0, 0.0), C64::new(1.0, 0.0), t])?);
    }
    for _ in 0..r.dropped {
        pts.push(ProjectivePoint::sphere([
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ])?);
    }
    Ok(pts)
}

/// One cycle of the boundary monodromy, parametrized over `θ ∈ [0, 2π n_cover)`
/// with `x = R e^{iθ}`.
#[derive(Debug, Clone)]
pub struct BoundaryComponent {
    pub n_cover: usize,
    pub theta: Vec<f64>,
    pub y: Vec<C64>,
    /// `dy/dθ`.
    pub dy: Vec<C64>,
    pub weight: Vec<f64>,
    /// Sheet index (at θ = 0) of each covering.
    pub sheets: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    pub radius: f64,
    pub n_theta: usize,
    pub components: Vec<BoundaryComponent>,
    /// Sheet `s` at θ = 0 continues to sheet `monodromy[s]` at θ = 2π.
    pub monodromy: Vec<usize>,
    pub closure_error: f64,
    pub max_residual: f64,
}

impl BoundaryComponent {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn period(&self) -> f64 {
        TAU * self.n_cover as f64
    }

    pub fn dtheta(&self) -> f64 {
        self.period() / self.theta.len() as f64
    }
}

impl BoundaryTrace {
    pub fn x(&self, theta: f64) -> C64 {
        C64::from_polar(self.radius, theta)
    }

    pub fn chart(&self, c: usize, i: usize) -> [C64; 3] {
        let comp = &self.components[c];
        [C64::new(1.0, 0.0), self.x(comp.theta[i]), comp.y[i]]
    }

    /// `d(1, x, y)/dθ`.
    pub fn tangent(&self, c: usize, i: usize) -> [C64; 3] {
        let comp = &self.components[c];
        [
            C64::new(0.0, 0.0),
            C64::new(0.0, 1.0) * self.x(comp.theta[i]),
            comp.dy[i],
        ]
    }

    /// Curve point of component `c` at parameter θ, polished from the nearest sample.
    pub fn y_at(&self, curve: &CurveDomain, c: usize, theta: f64) -> C64 {
        let comp = &self.components[c];
        let t = theta.rem_euclid(comp.period());
        let h = comp.dtheta();
        let i = ((t / h).round() as usize) % comp.len();
        let mut dt = t - comp.theta[i];
        if dt > 0.5 * comp.period() {
            dt -= comp.period();
        }
        let guess = comp.y[i] + comp.dy[i] * dt;
        curve.polish_y(self.x(t), guess)
    }

    /// Component and parameter θ of a curve point over the circle.
    pub fn locate(&self, theta: f64, y: C64) -> (usize, f64) {
        let t = theta.rem_euclid(TAU);
        let mut best = (f64::INFINITY, 0, 0.0);
        for (c, comp) in self.components.iter().enumerate() {
            let h = comp.dtheta();
            for l in 0..comp.n_cover {
                let tl = t + TAU * l as f64;
                let i = ((tl / h).round() as usize) % comp.len();
                let mut dt = tl - comp.theta[i];
                if dt > 0.5 * comp.period() {
                    dt -= comp.period();
                }
                let dist = (comp.y[i] + comp.dy[i] * dt - y).norm();
                if dist < best.0 {
                    best = (dist, c, tl);
                }
            }
        }
        (best.1, best.2)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("component,n_r,theta,x_re,x_im,y_re,y_im\n");
        for (c, comp) in self.components.iter().enumerate() {
            for i in 0..comp.len() {
                let x = self.x(comp.theta[i]);
                s += &format!(
                    "{c},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                    comp.n_cover, comp.theta[i], x.re, x.im, comp.y[i].re, comp.y[i].im
                );
            }
        }
        s
    }
}

pub fn trace_boundary(curve: &CurveDomain, n_theta: usize) -> Result<BoundaryTrace> {
    if n_theta < 8 {
        return Err(Error::Validation(format!("n_theta must be at least 8, got {n_theta}")));
    }
    let r = curve.radius;
    let d = curve.degree();
    let h = TAU / n_theta as f64;
    if let Some(b) = branch_points(curve)
        .into_iter()
        .find(|b| (b.norm() - r).abs() < 1e-6 * r)
    {
        return Err(Error::Geometry(format!(
            "branch point x = {b:.6} lies on the circle |x| = {r}; perturb the radius (e.g. {:.4} or {:.4})",
            r * 1.01,
            r * 0.99
        )));
    }
    let mut f0 = curve.fiber_over_x(C64::new(r, 0.0)).ys;
    f0.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    // sheets[s][i]: sheet s (labelled at θ=0) at θ_i, i = 0..=n_theta
    let mut sheets = vec![Vec::with_capacity(n_theta + 1); d];
    let mut max_residual = 0.0f64;
    for (s, &y) in f0.iter().enumerate() {
        sheets[s].push(y);
    }
    let path = |t: f64| C64::from_polar(r, t);
    for i in 0..n_theta {
        let x1 = path(h * (i + 1) as f64);
        let fib = curve.fiber_over_x(x1);
        let scale = 1.0 + fib.ys.iter().map(|y| y.norm()).fold(0.0, f64::max);
        if fib.branch || min_separation(&fib.ys) < 1e-4 * scale {
            return Err(Error::Geometry(format!(
                "branch point within tolerance of the circle |x| = {r} near θ = {:.4}; perturb the radius (e.g. {:.4} or {:.4})",
                h * (i + 1) as f64,
                r * 1.01,
                r * 0.99
            )));
        }
        let mut next = Vec::with_capacity(d);
        for s in 0..d {
            let y = curve.track(&path, h * i as f64, h * (i + 1) as f64, sheets[s][i])?;
            next.push(y);
        }
        if min_separation(&next) < 1e-6 * scale {
            return Err(Error::Geometry(format!(
                "two sheets merged during continuation at θ = {:.4}",
                h * (i + 1) as f64
            )));
        }
        for s in 0..d {
            max_residual = max_residual.max(curve.poly.eval(&unit(&[C64::new(1.0, 0.0), x1, next[s]])).norm());
            sheets[s].push(next[s]);
        }
    }
    let mut monodromy = vec![0usize; d];
    let mut closure_error = 0.0f64;
    for s in 0..d {
        let end = sheets[s][n_theta];
        let (t, dist) = f0
            .iter()
            .enumerate()
            .map(|(t, y)| (t, (y - end).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty fiber");
        monodromy[s] = t;
        closure_error = closure_error.max(dist);
    }
    let mut seen = vec![false; d];
    let mut image = monodromy.clone();
    image.sort_unstable();
    if image != (0..d).collect::<Vec<_>>() {
        return Err(Error::Geometry(format!(
            "monodromy is not a permutation: {monodromy:?}"
        )));
    }
    let mut components = Vec::new();
    for s0 in 0..d {
        if seen[s0] {
            continue;
        }
        let mut cycle = vec![s0];
        seen[s0] = true;
        let mut s = monodromy[s0];
        while s != s0 {
            seen[s] = true;
            cycle.push(s);
            s = monodromy[s];
        }
        let n_cover = cycle.len();
        let mut theta = Vec::with_capacity(n_cover * n_theta);
        let mut ys = Vec::with_capacity(n_cover * n_theta);
        for (l, &s) in cycle.iter().enumerate() {
            for i in 0..n_theta {
                theta.push(h * (l * n_theta + i) as f64);
                ys.push(sheets[s][i]);
            }
        }
        let dy: Vec<C64> = theta
            .iter()
            .zip(&ys)
            .map(|(&t, &y)| {
                let x = path(t);
                curve.slope(x, y) * C64::new(0.0, 1.0) * x
            })
            .collect();
        let weight = theta
            .iter()
            .zip(&dy)
            .map(|(&t, dyi)| (r * r + dyi.norm_sqr()).sqrt() * h + 0.0 * t)
            .collect();
        components.push(BoundaryComponent {
            n_cover,
            theta,
            y: ys,
            dy,
            weight,
            sheets: cycle,
        });
    }
    Ok(BoundaryTrace {
        radius: r,
        n_theta,
        components,
        monodromy,
        closure_error,
        max_residual,
    })
}

/// Finite branch points of the projection `(x, y) ↦ x`: roots of the
/// discriminant `Res_y(P, ∂P/∂y)`, recovered by sampling the resultant on a
/// circle and interpolating.
pub fn branch_points(curve: &CurveDomain) -> Vec<C64> {
    let d = curve.degree();
    if d < 2 {
        return vec![];
    }
    let m = d * (d - 1) + 1;
    let rad = curve.radius;
    let mut vals: Vec<C64> = (0..m)
        .map(|k| {
            let x = C64::from_polar(rad, TAU * k as f64 / m as f64);
            let p = curve.poly.chart_in_y(x);
            let dp: Vec<C64> = (1..p.len()).map(|i| p[i] * i as f64).collect();
            sylvester_det(&p, &dp)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut vals);
    // vals[k] = m · c_k · rad^k
    let coeffs: Vec<C64> = vals
        .iter()
        .enumerate()
        .map(|(k, v)| v / (m as f64 * rad.powi(k as i32)))
        .collect();
    let raw = poly_roots(&coeffs).roots;
    // collapse clusters from multiple roots
    let mut out: Vec<(C64, usize)> = Vec::new();
    for z in raw {
        if let Some(e) = out.iter_mut().find(|(c, _)| (*c - z).norm() < 1e-4 * (1.0 + z.norm())) {
            e.0 = (e.0 * e.1 as f64 + z) / (e.1 + 1) as f64;
            e.1 += 1;
        } else {
            out.push((z, 1));
        }
    }
    let mut pts: Vec<C64> = out.into_iter().map(|(z, _)| z).collect();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts
}

fn sylvester_det(p: &[C64], q: &[C64]) -> C64 {
    let (n, m) = (p.len() - 1, q.len() - 1);
    let size = n + m;
    let mut s = DMatrix::<C64>::zeros(size, size);
    for r in 0..m {
        for (k, c) in p.iter().rev().enumerate() {
            s[(r, r + k)] = *c;
        }
    }
    for r in 0..n {
        for (k, c) in q.iter().rev().enumerate() {
            s[(m + r, r + k)] = *c;
        }
    }
    s.determinant()
}

/// Reference point per component: continue the component's sheet at phase
/// `2πr/m` radially out to `|x| = 2R`.
pub fn default_reference_points(curve: &CurveDomain, trace: &BoundaryTrace) -> Result<Vec<ProjectivePoint>> {
    let m = trace.components.len();
    let r = curve.radius;
    let mut out = Vec::with_capacity(m);
    for c in 0..m {
        let theta = TAU * c as f64 / m as f64;
        let y0 = trace.y_at(curve, c, theta);
        let e = C64::from_polar(1.0, theta);
        let path = |s: f64| e * (r + s * r);
        let mut y = y0;
        let steps = 32;
        for k in 0..steps {
            y = curve.track(&path, k as f64 / steps as f64, (k + 1) as f64 / steps as f64, y)?;
        }
        out.push(ProjectivePoint::chart(2.0 * r * e, y));
    }
    Ok(out)
}

/// Removed region (boundary component index) containing a curve point with
/// `|x| ≥ R`, found by radial continuation onto the circle.
pub fn removed_region_of(curve: &CurveDomain, trace: &BoundaryTrace, x: C64, y: C64) -> Result<usize> {
    let r = curve.radius;
    if x.norm() < r {
        return Err(Error::Geometry(format!("point x = {x} lies inside V")));
    }
    let e = x / x.norm();
    let start = x.norm();
    let path = |s: f64| e * (start + s * (r - start));
    let steps = (((start - r) / (0.05 * r)).ceil() as usize).clamp(1, 4000);
    let mut yy = curve.polish_y(x, y);
    for k in 0..steps {
        yy = curve.track(&path, k as f64 / steps as f64, (k + 1) as f64 / steps as f64, yy)?;
    }
    Ok(trace.locate(e.arg(), yy).0)
}

/// Removed region containing a point at infinity `[0 : 1 : η]`.
pub fn region_of_infinity_point(curve: &CurveDomain, trace: &BoundaryTrace, q: &ProjectivePoint) -> Result<usize> {
    if q.z[1].norm() < 1e-12 {
        return Err(Error::Geometry("point at infinity [0:0:1] is excluded".into()));
    }
    let eta = q.z[2] / q.z[1];
    let x = C64::new(64.0 * curve.radius, 0.0);
    let y = curve
        .fiber_over_x(x)
        .ys
        .into_iter()
        .min_by(|a, b| (a - eta * x).norm().total_cmp(&(b - eta * x).norm()))
        .ok_or_else(|| Error::Geometry("empty fiber".into()))?;
    removed_region_of(curve, trace, x, y)
}

#[derive(Debug, Clone, Serialize)]
pub struct IntersectionSet {
    pub w: ProjectivePoint,
    pub r_vec: [C64; 3],
    pub direction: [C64; 3],
    pub taus: Vec<C64>,
    pub points: Vec<ProjectivePoint>,
    pub x_values: Vec<C64>,
    pub min_root_separation: f64,
    pub min_x_separation: f64,
    pub inside_margin: f64,
    /// Intersections lost at infinity of the line.
    pub dropped: usize,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierThresholds {
    pub min_root_separation: f64,
    pub min_x_separation: f64,
    pub inside_margin: f64,
}

impl Default for BarrierThresholds {
    fn default() -> Self {
        Self {
            min_root_separation: 1e-3,
            min_x_separation: 1e-3,
            inside_margin: 1e-3,
        }
    }
}

impl IntersectionSet {
    /// Names of the violated conditions.
    pub fn violations(&self, t: &BarrierThresholds) -> Vec<&'static str> {
        let mut v = vec![];
        if self.dropped > 0 {
            v.push("degree drop");
        }
        if self.min_root_separation < t.min_root_separation {
            v.push("transversality");
        }
        if self.min_x_separation < t.min_x_separation {
            v.push("distinct x");
        }
        if !(self.inside_margin >= t.inside_margin) {
            v.push("inside margin");
        }
        v
    }
}

/// Intersections of the line `{w + τv}` with the curve. `r_vec` must annihilate
/// `v`, so every member satisfies `R·w^(j) = R·w`.
pub fn intersect_line(
    curve: &CurveDomain,
    w: &ProjectivePoint,
    v: &[C64; 3],
    r_vec: &[C64; 3],
) -> Result<IntersectionSet> {
    let wz = w.unit();
    let vn = unit(v);
    if dot(r_vec, &vn).norm() > 1e-12 * norm3(r_vec) {
        return Err(Error::Validation(
            "barrier vector does not annihilate the line direction".into(),
        ));
    }
    let scale = curve.poly.norm1();
    if curve.poly.eval(&wz).norm() > 1e-10 * scale {
        return Err(Error::Validation("base point is not on the curve".into()));
    }
    let co = curve.poly.along_line(&wz, &vn);
    let found = poly_roots(&co);
    let mut taus = found.roots;
    // base point is τ = 0 exactly
    if let Some((i0, _)) = taus.iter().enumerate().min_by(|a, b| a.1.norm().total_cmp(&b.1.norm())) {
        taus.remove(i0);
    }
    taus.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.arg().total_cmp(&b.arg())));
    taus.insert(0, C64::new(0.0, 0.0));
    let mut points = Vec::with_capacity(taus.len());
    let mut max_residual = 0.0f64;
    for &t in &taus {
        let z = [wz[0] + t * vn[0], wz[1] + t * vn[1], wz[2] + t * vn[2]];
        max_residual = max_residual.max(curve.poly.eval(&z).norm() / (scale * norm3(&z).powi(curve.degree() as i32)));
        points.push(ProjectivePoint {
            z,
            tag: Normalization::Plane,
        });
    }
    points[0].z = wz;
    let x_values: Vec<C64> = points.iter().map(|p| p.x()).collect();
    let inside_margin = points
        .iter()
        .map(|p| -rho(&p.z, curve.radius))
        .fold(f64::INFINITY, f64::min);
    Ok(IntersectionSet {
        w: ProjectivePoint {
            z: wz,
            tag: Normalization::Sphere,
        },
        r_vec: *r_vec,
        direction: vn,
        min_root_separation: min_separation(&taus),
        min_x_separation: if x_values.iter().all(|x| x.is_finite()) {
            min_separation(&x_values)
        } else {
            0.0
        },
        inside_margin: if inside_margin.is_nan() {
            f64::NEG_INFINITY
        } else {
            inside_margin
        },
        taus,
        points,
        x_values,
        dropped: found.dropped,
        max_residual,
    })
}

/// Barrier vector for direction `v`: the projection of `w̄` onto `{R : R·v = 0}`.
pub fn barrier_vector(w: &[C64; 3], v: &[C64; 3]) -> [C64; 3] {
    let wb = conj3(w);
    let vb = conj3(v);
    let a = dot(&wb, v) / dot(&vb, v);
    [wb[0] - a * vb[0], wb[1] - a * vb[1], wb[2] - a * vb[2]]
}

pub fn choose_barrier(curve: &CurveDomain, w: &ProjectivePoint, seed: u64) -> Result<IntersectionSet> {
    choose_barrier_with(curve, w, seed, 64, &BarrierThresholds::default())
}

pub fn choose_barrier_with(
    curve: &CurveDomain,
    w: &ProjectivePoint,
    seed: u64,
    max_retries: usize,
    thresholds: &BarrierThresholds,
) -> Result<IntersectionSet> {
    let wz = w.unit();
    if -rho(&wz, curve.radius) < thresholds.inside_margin {
        return Err(Error::Validation(format!(
            "point x = {} is not inside V with margin",
            w.x()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures: Vec<(&'static str, usize)> = vec![];
    for _ in 0..max_retries.max(1) {
        let mut draw = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let raw = [draw(), draw(), draw()];
        // remove the component along w so the line is genuinely through w
        let a = dot(&conj3(&wz), &raw);
        let v = [raw[0] - a * wz[0], raw[1] - a * wz[1], raw[2] - a * wz[2]];
        if norm3(&v) < 1e-6 {
            continue;
        }
        let r_vec = barrier_vector(&wz, &v);
        let set = intersect_line(curve, w, &v, &r_vec)?;
        let bad = set.violations(thresholds);
        if bad.is_empty() {
            return Ok(set);
        }
        for b in bad {
            match failures.iter_mut().find(|(n, _)| *n == b) {
                Some(e) => e.1 += 1,
                None => failures.push((b, 1)),
            }
        }
    }
    failures.sort_by(|a, b| b.1.cmp(&a.1));
    Err(Error::Numerical(format!(
        "no admissible barrier line after {max_retries} draws; failed conditions (count): {failures:?}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{conic, fermat_cubic, line};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn infinity_points_examples() {
        let pts = infinity_points(&conic()).unwrap();
        let mut ts: Vec<C64> = pts.iter().map(|p| p.z[2] / p.z[1]).collect();
        ts.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((ts[0] - c(0., -1.)).norm() < 1e-14 && (ts[1] - c(0., 1.)).norm() < 1e-14);
        for p in infinity_points(&fermat_cubic()).unwrap() {
            assert!(((p.z[2] / p.z[1]).powu(3) + 1.0).norm() < 1e-13);
        }
        let l = infinity_points(&line()).unwrap();
        assert_eq!(l.len(), 1);
        assert!(l[0].z[2].norm() < 1e-15);
    }

    #[test]
    fn fiber_examples() {
        let conic = CurveDomain::new(conic(), 2.0).unwrap();
        let mut ys = conic.fiber_over_x(c(0., 0.)).ys;
        ys.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ys[0] + 1.0).norm() < 1e-14 && (ys[1] - 1.0).norm() < 1e-14);
        assert!(conic.fiber_over_x(c(1., 0.)).branch);
        let f = CurveDomain::new(fermat_cubic(), 2.0).unwrap().fiber_over_x(c(0., 0.));
        assert_eq!(f.ys.len(), 3);
        assert!(f.residual < 1e-14);
    }

    #[test]
    fn rejects_point_001_and_bad_radius() {
        let p = HomPoly3::from_real(&[([1, 1, 0], 1.0), ([0, 0, 2], 0.0), ([2, 0, 0], 1.0)]).unwrap();
        assert!(CurveDomain::new(p, 2.0).is_err());
        assert!(CurveDomain::new(conic(), -1.0).is_err());
    }

    #[test]
    fn branch_point_locations() {
        let b = branch_points(&CurveDomain::new(conic(), 2.0).unwrap());
        assert_eq!(b.len(), 2);
        assert!((b[0] + 1.0).norm() < 1e-6 && (b[1] - 1.0).norm() < 1e-6);
        let b = branch_points(&CurveDomain::new(fermat_cubic(), 2.0).unwrap());
        assert_eq!(b.len(), 3);
        for z in b {
            assert!((z.powu(3) + 1.0).norm() < 1e-5);
        }
    }

    #[test]
    fn fermat_triple_contact_is_flagged() {
        let curve = CurveDomain::new(fermat_cubic(), 2.0).unwrap();
        let w = ProjectivePoint::sphere([c(1., 0.), c(0., 0.), c(-1., 0.)]).unwrap();
        let v = [c(0., 0.), c(1., 0.), c(0., 0.)];
        let r = barrier_vector(&w.unit(), &v);
        let s = intersect_line(&curve, &w, &v, &r).unwrap();
        assert!(s.violations(&BarrierThresholds::default()).contains(&"transversality"));
    }

    #[test]
    fn conic_vertical_line_violates_distinct_x() {
        let curve = CurveDomain::new(conic(), 2.0).unwrap();
        let w = ProjectivePoint::sphere([c(1., 0.), c(0.3, 0.), C64::new(1.0 - 0.09, 0.0).sqrt()]).unwrap();
        let v = [c(0., 0.), c(0., 0.), c(1., 0.)];
        let r = barrier_vector(&w.unit(), &v);
        let s = intersect_line(&curve, &w, &v, &r).unwrap();
        assert!(s.min_x_separation < 1e-12);
        assert!(s.violations(&BarrierThresholds::default()).contains(&"distinct x"));
    }
}
