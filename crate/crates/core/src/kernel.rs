//! The integral formula: the tube Γ^ε over bV, the determinant kernel, the
//! moments `G_k` with ε-extrapolation, the Vandermonde solve and the
//! reconstruction of `u` on `S(w)`.

use std::f64::consts::TAU;

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::HeferTriple;
use crate::geometry::{conj3, dot, norm3, rho, unit, BoundaryTrace, CurveDomain, IntersectionSet};
use crate::harmonic::{eval_h, CorrectionH, PrimitiveF};
use crate::sum::pairwise;
use crate::{Error, Result};

/// Orientation of Γ^ε in the parametrization `(θ, φ, ψ)`, fixed by
/// calibration on the line (see [`calibrate`]).
pub const ORIENTATION: f64 = -1.0;

pub const DEFAULT_EPSILONS: [f64; 3] = [0.04, 0.02, 0.01];
pub const DEFAULT_GRID: (usize, usize, usize) = (256, 32, 32);

#[derive(Debug, Clone, Copy)]
pub struct TubeNode {
    pub zeta: [C64; 3],
    pub jac: C64,
}

#[derive(Debug, Clone)]
pub struct ComponentTube {
    pub n_cover: usize,
    /// Trace sample index of each θ row.
    pub rows: Vec<usize>,
    /// Row-major over (θ, φ, ψ).
    pub nodes: Vec<TubeNode>,
}

#[derive(Debug, Clone)]
pub struct TubeGrid {
    pub epsilon: f64,
    pub dims: (usize, usize, usize),
    pub psi_shift: f64,
    pub components: Vec<ComponentTube>,
    /// Worst `||ζ| − 1|`, `|ρ|`, `|P − εe^{iφ}|/ε` over nodes.
    pub residuals: [f64; 3],
    pub newton_iterations: usize,
}

impl TubeGrid {
    pub fn cell(&self) -> f64 {
        let (nt, np, ns) = self.dims;
        (TAU / nt as f64) * (TAU / np as f64) * (TAU / ns as f64)
    }

    pub fn node_count(&self) -> usize {
        self.components.iter().map(|c| c.nodes.len()).sum()
    }
}

/// Node of Γ^ε in the gauge `ζ = (a e^{iψ}, a x e^{iψ}, ζ2)`,
/// `a = √((1 − |ζ2|²)/(1 + R²))`, `x = R e^{iθ}`: the sphere and ρ
/// constraints hold identically and Newton solves `P(ζ) = εe^{iφ}` for ζ2.
#[derive(Debug, Clone, Copy)]
pub struct NodeSolve {
    pub zeta: [C64; 3],
    /// `∂ζ/∂θ`, `∂ζ/∂φ`, `∂ζ/∂ψ`.
    pub d: [[C64; 3]; 3],
    pub iterations: usize,
    pub residual: f64,
}

fn gauge_point(r: f64, x: C64, psi: f64, u: C64) -> [C64; 3] {
    let a = ((1.0 - u.norm_sqr()).max(0.0) / (1.0 + r * r)).sqrt();
    let e = C64::from_polar(a, psi);
    [e, e * x, u]
}

pub fn solve_node(curve: &CurveDomain, theta: f64, phi: f64, psi: f64, eps: f64, y_guess: C64) -> Result<NodeSolve> {
    let r = curve.radius;
    let d = curve.degree() as i32;
    let x = C64::from_polar(r, theta);
    let target = C64::from_polar(eps, phi);
    let a0 = 1.0 / (1.0 + r * r + y_guess.norm_sqr()).sqrt();
    let e0 = C64::from_polar(a0, psi);
    let (_, _, py) = curve.chart_eval(x, y_guess);
    let mut u = e0 * (y_guess + target / (e0.powi(d) * py));
    let jac_u = |u: C64, z: &[C64; 3]| {
        let a = z[0].norm();
        let g = curve.poly.grad(z);
        let ph = z[0] / a;
        let k = -1.0 / ((1.0 + r * r) * a);
        let dre = [ph * k * u.re, ph * x * k * u.re, C64::new(1.0, 0.0)];
        let dim = [ph * k * u.im, ph * x * k * u.im, C64::new(0.0, 1.0)];
        (dot(&g, &dre), dot(&g, &dim), dre, dim, g)
    };
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    for it in 0..30 {
        let z = gauge_point(r, x, psi, u);
        let res = curve.poly.eval(&z) - target;
        residual = res.norm();
        iterations = it;
        if residual <= 1e-15 * (1.0 + curve.poly.term_scale(&z)) {
            break;
        }
        let (ja, jb, _, _, _) = jac_u(u, &z);
        let det = ja.re * jb.im - jb.re * ja.im;
        let dr = -(jb.im * res.re - jb.re * res.im) / det;
        let di = -(-ja.im * res.re + ja.re * res.im) / det;
        u += C64::new(dr, di);
        if C64::new(dr, di).norm() < 1e-16 {
            let z = gauge_point(r, x, psi, u);
            residual = (curve.poly.eval(&z) - target).norm();
            break;
        }
    }
    let z = gauge_point(r, x, psi, u);
    if !(residual <= 1e-11 * eps) || u.norm() >= 1.0 {
        return Err(Error::Numerical(format!(
            "tube Newton did not converge at θ={theta:.4}, φ={phi:.4}, ψ={psi:.4} (residual {residual:.2e})"
        )));
    }
    // implicit differentiation of P(ζ(θ, ψ, ζ2)) = εe^{iφ}
    let (ja, jb, dre, dim, g) = jac_u(u, &z);
    let det = ja.re * jb.im - jb.re * ja.im;
    let i = C64::new(0.0, 1.0);
    let explicit = [
        [C64::default(), i * z[1], C64::default()],
        [C64::default(); 3],
        [i * z[0], i * z[1], C64::default()],
    ];
    let rhs = [dot(&g, &explicit[0]), -i * target, dot(&g, &explicit[2])];
    let mut dz = [[C64::default(); 3]; 3];
    for t in 0..3 {
        // ja·δre + jb·δim = −rhs (two real equations)
        let q = -rhs[t];
        let dr = (jb.im * q.re - jb.re * q.im) / det;
        let di = (-ja.im * q.re + ja.re * q.im) / det;
        for c in 0..3 {
            dz[t][c] = explicit[t][c] + dre[c] * dr + dim[c] * di;
        }
    }
    Ok(NodeSolve {
        zeta: z,
        d: dz,
        iterations,
        residual,
    })
}

pub fn det3(a: &[C64; 3], b: &[C64; 3], c: &[C64; 3]) -> C64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - b[0] * (a[1] * c[2] - a[2] * c[1]) + c[0] * (a[1] * b[2] - a[2] * b[1])
}

pub fn build_tube(
    curve: &CurveDomain,
    trace: &BoundaryTrace,
    eps: f64,
    dims: (usize, usize, usize),
) -> Result<TubeGrid> {
    build_tube_shifted(curve, trace, eps, dims, 0.0)
}

/// As [`build_tube`] with all Hopf phases shifted by `psi_shift`.
pub fn build_tube_shifted(
    curve: &CurveDomain,
    trace: &BoundaryTrace,
    eps: f64,
    dims: (usize, usize, usize),
    psi_shift: f64,
) -> Result<TubeGrid> {
    let (nt, np, ns) = dims;
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(Error::Validation(format!("epsilon must lie in (0, 0.1], got {eps}")));
    }
    if nt == 0 || np == 0 || ns == 0 || !trace.n_theta.is_multiple_of(nt) {
        return Err(Error::Validation(format!(
            "grid {nt}x{np}x{ns} incompatible with trace resolution {} (N_θ must divide it)",
            trace.n_theta
        )));
    }
    let stride = trace.n_theta / nt;
    let mut components = Vec::with_capacity(trace.components.len());
    let mut residuals = [0.0f64; 3];
    let mut newton = 0usize;
    for comp in &trace.components {
        let rows: Vec<usize> = (0..comp.len()).step_by(stride).collect();
        let per_row: Vec<Result<(Vec<TubeNode>, [f64; 3], usize)>> = rows
            .par_iter()
            .map(|&i| {
                let theta = comp.theta[i];
                let mut nodes = Vec::with_capacity(np * ns);
                let mut res = [0.0f64; 3];
                let mut its = 0;
                for jp in 0..np {
                    let phi = TAU * jp as f64 / np as f64;
                    for js in 0..ns {
                        let psi = TAU * js as f64 / ns as f64 + psi_shift;
                        let s = solve_node(curve, theta, phi, psi, eps, comp.y[i])?;
                        let z = s.zeta;
                        res[0] = res[0].max((norm3(&z) - 1.0).abs());
                        res[1] = res[1].max(rho(&z, curve.radius).abs());
                        res[2] = res[2].max((curve.poly.eval(&z) - C64::from_polar(eps, phi)).norm() / eps);
                        its = its.max(s.iterations);
                        nodes.push(TubeNode {
                            zeta: z,
                            jac: det3(&s.d[0], &s.d[1], &s.d[2]),
                        });
                    }
                }
                Ok((nodes, res, its))
            })
            .collect();
        let mut nodes = Vec::with_capacity(rows.len() * np * ns);
        for r in per_row {
            let (n, res, its) = r?;
            nodes.extend(n);
            for k in 0..3 {
                residuals[k] = residuals[k].max(res[k]);
            }
            newton = newton.max(its);
        }
        components.push(ComponentTube {
            n_cover: comp.n_cover,
            rows,
            nodes,
        });
    }
    Ok(TubeGrid {
        epsilon: eps,
        dims,
        psi_shift,
        components,
        residuals,
        newton_iterations: newton,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct Denominators {
    pub p: f64,
    pub f: f64,
    pub b: f64,
}

/// `det[Q(ζ,w), R, ζ̄] / (P(ζ)·F(w,ζ)·B(ζ,w))`.
pub fn kernel_det(
    zeta: &[C64; 3],
    zeta_bar: &[C64; 3],
    w: &[C64; 3],
    hefer: &HeferTriple,
    p_zeta: C64,
    r_vec: &[C64; 3],
) -> Result<(C64, Denominators)> {
    let q = hefer.eval(zeta, w);
    let diff = [zeta[0] - w[0], zeta[1] - w[1], zeta[2] - w[2]];
    let f = dot(r_vec, &diff);
    let b = dot(zeta_bar, &diff);
    let den = Denominators {
        p: p_zeta.norm(),
        f: f.norm(),
        b: b.norm(),
    };
    if den.p < 1e-12 || den.f < 1e-12 || den.b < 1e-12 {
        return Err(Error::Numerical(format!(
            "kernel singular: |P| = {:.2e}, |F| = {:.2e}, |B| = {:.2e}",
            den.p, den.f, den.b
        )));
    }
    Ok((det3(&q, r_vec, zeta_bar) / (p_zeta * f * b), den))
}

/// Literal determinant of the quotient columns `Q/P`, `R/F`, `ζ̄/B`.
pub fn kernel_det_literal(zeta: &[C64; 3], w: &[C64; 3], hefer: &HeferTriple, p_zeta: C64, r_vec: &[C64; 3]) -> C64 {
    let q = hefer.eval(zeta, w);
    let zb = conj3(zeta);
    let diff = [zeta[0] - w[0], zeta[1] - w[1], zeta[2] - w[2]];
    let f = dot(r_vec, &diff);
    let b = dot(&zb, &diff);
    let m = Matrix3::new(
        q[0] / p_zeta,
        r_vec[0] / f,
        zb[0] / b,
        q[1] / p_zeta,
        r_vec[1] / f,
        zb[1] / b,
        q[2] / p_zeta,
        r_vec[2] / f,
        zb[2] / b,
    );
    m.determinant()
}

/// Which barrier enters the kernel at each member of `S(w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelBarrier {
    /// `R_j = conj(ŵ^(j))` with the unit lift `ŵ^(j)`.
    PerPoint,
    /// One `R` along the line with plane-normalized lifts.
    SharedLine,
}

/// Divisor applied to `Re{w0·v_k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// 2, from the Hopf-phase residue of each kernel term.
    Derived,
    /// `d + 1`.
    Paper,
}

impl Normalization {
    pub fn divisor(self, degree: usize) -> f64 {
        match self {
            Normalization::Derived => 2.0,
            Normalization::Paper => (degree + 1) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KernelPoint {
    pub lift: [C64; 3],
    pub r_vec: [C64; 3],
    pub x: C64,
}

pub fn kernel_points(set: &IntersectionSet, barrier: KernelBarrier) -> Vec<KernelPoint> {
    set.points
        .iter()
        .zip(&set.x_values)
        .map(|(p, &x)| match barrier {
            KernelBarrier::PerPoint => {
                let l = unit(&p.z);
                KernelPoint {
                    lift: l,
                    r_vec: conj3(&l),
                    x,
                }
            }
            KernelBarrier::SharedLine => KernelPoint {
                lift: p.z,
                r_vec: set.r_vec,
                x,
            },
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TubeDiagnostics {
    pub min_p: f64,
    pub min_f: f64,
    pub min_b: f64,
    /// Largest projection distance relative to its first-order prediction.
    pub max_projection_ratio: f64,
}

/// One ε: `G_k = s·2/(2πi)³ Σ_nodes g x^k Σ_j K_j J ΔθΔφΔψ` for each target
/// set. Row sums are formed sequentially and reduced pairwise in row order,
/// so results do not depend on the number of workers.
pub fn tube_moments(
    f: &PrimitiveF,
    trace: &BoundaryTrace,
    curve: &CurveDomain,
    hefer: &HeferTriple,
    tube: &TubeGrid,
    targets: &[Vec<KernelPoint>],
) -> Result<(Vec<Vec<C64>>, TubeDiagnostics)> {
    let d = curve.degree();
    let (_, np, ns) = tube.dims;
    let nk = targets.len() * d;
    let mut rows_out: Vec<Vec<C64>> = vec![];
    let mut diag = TubeDiagnostics {
        min_p: f64::INFINITY,
        min_f: f64::INFINITY,
        min_b: f64::INFINITY,
        max_projection_ratio: 0.0,
    };
    for (c, ct) in tube.components.iter().enumerate() {
        let comp = &trace.components[c];
        let per_row: Vec<Result<(Vec<C64>, TubeDiagnostics)>> = ct
            .rows
            .par_iter()
            .enumerate()
            .map(|(ri, &i)| {
                let x = trace.x(comp.theta[i]);
                let fval = f.samples[c][i];
                let y0 = comp.y[i];
                let a0 = 1.0 / (1.0 + x.norm_sqr() + y0.norm_sqr()).sqrt();
                let (_, _, py) = curve.chart_eval(x, y0);
                let disp = tube.epsilon / (a0.powi(d as i32) * py.norm());
                let xk: Vec<C64> = (0..d).map(|k| x.powu(k as u32)).collect();
                let mut acc = vec![C64::default(); nk];
                let mut dg = TubeDiagnostics { min_p: f64::INFINITY, min_f: f64::INFINITY, min_b: f64::INFINITY, max_projection_ratio: 0.0 };
                for node in &ct.nodes[ri * np * ns..(ri + 1) * np * ns] {
                    let z = &node.zeta;
                    let proj = (z[2] / z[0] - y0).norm();
                    dg.max_projection_ratio = dg.max_projection_ratio.max(proj / disp);
                    if proj > 10.0 * disp {
                        return Err(Error::Numerical(format!(
                            "tube node projects {proj:.3e} from the boundary (> 10x first-order displacement {disp:.3e})"
                        )));
                    }
                    let g = fval / z[0];
                    let zb = conj3(z);
                    let pz = curve.poly.eval(z);
                    let base = g * node.jac;
                    for (t, pts) in targets.iter().enumerate() {
                        let mut ksum = C64::default();
                        for kp in pts {
                            let (k, den) = kernel_det(z, &zb, &kp.lift, hefer, pz, &kp.r_vec)?;
                            dg.min_p = dg.min_p.min(den.p);
                            dg.min_f = dg.min_f.min(den.f);
                            dg.min_b = dg.min_b.min(den.b);
                            ksum += k;
                        }
                        let v = base * ksum;
                        for k in 0..d {
                            acc[t * d + k] += v * xk[k];
                        }
                    }
                }
                Ok((acc, dg))
            })
            .collect();
        for r in per_row {
            let (acc, dg) = r?;
            diag.min_p = diag.min_p.min(dg.min_p);
            diag.min_f = diag.min_f.min(dg.min_f);
            diag.min_b = diag.min_b.min(dg.min_b);
            diag.max_projection_ratio = diag.max_projection_ratio.max(dg.max_projection_ratio);
            rows_out.push(acc);
        }
    }
    let i = C64::new(0.0, 1.0);
    let pref = ORIENTATION * 2.0 / (TAU * i).powi(3) * tube.cell();
    let out = (0..targets.len())
        .map(|t| {
            (0..d)
                .map(|k| {
                    let col: Vec<C64> = rows_out.iter().map(|r| r[t * d + k]).collect();
                    pref * pairwise(&col)
                })
                .collect()
        })
        .collect();
    Ok((out, diag))
}

#[derive(Debug, Clone, Serialize)]
pub struct GMoments {
    pub epsilons: Vec<f64>,
    /// `raw[e][k]`.
    pub raw: Vec<Vec<C64>>,
    pub extrapolated: Vec<C64>,
    pub error_estimate: Vec<f64>,
    pub monotone: bool,
    pub diagnostics: TubeDiagnostics,
}

/// Polynomial (Richardson) extrapolation to ε = 0 through all schedule
/// points: order 1 from consecutive pairs, then order 2.
pub fn richardson(eps: &[f64], vals: &[C64]) -> (C64, f64) {
    let n = vals.len();
    if n == 1 {
        return (vals[0], f64::INFINITY);
    }
    let mut t: Vec<C64> = vals.to_vec();
    let mut prev_best = vals[n - 1];
    for j in 1..n {
        let mut next = Vec::with_capacity(n - j);
        for i in j..n {
            let (e_old, e_new) = (eps[i - j], eps[i]);
            next.push(t[i - j + 1] + (t[i - j + 1] - t[i - j]) * e_new / (e_old - e_new));
        }
        prev_best = t[t.len() - 1];
        t = next;
    }
    let best = t[t.len() - 1];
    (best, (best - prev_best).norm())
}

pub fn assemble_moments(epsilons: &[f64], raw: Vec<Vec<C64>>, diagnostics: TubeDiagnostics) -> GMoments {
    let d = raw.first().map_or(0, |r| r.len());
    let mut extrapolated = vec![];
    let mut error_estimate = vec![];
    let dist = |a: &Vec<C64>, b: &Vec<C64>| a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let monotone = raw.windows(3).all(|w| dist(&w[1], &w[2]) <= dist(&w[0], &w[1]));
    for k in 0..d {
        let col: Vec<C64> = raw.iter().map(|r| r[k]).collect();
        let (v, e) = richardson(epsilons, &col);
        extrapolated.push(v);
        if monotone {
            error_estimate.push(e);
        } else {
            let spread = col
                .iter()
                .map(|a| col.iter().map(|b| (a - b).norm()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            error_estimate.push(spread);
        }
    }
    GMoments {
        epsilons: epsilons.to_vec(),
        raw,
        extrapolated,
        error_estimate,
        monotone,
        diagnostics,
    }
}

fn merge_diag(a: TubeDiagnostics, b: TubeDiagnostics) -> TubeDiagnostics {
    TubeDiagnostics {
        min_p: a.min_p.min(b.min_p),
        min_f: a.min_f.min(b.min_f),
        min_b: a.min_b.min(b.min_b),
        max_projection_ratio: a.max_projection_ratio.max(b.max_projection_ratio),
    }
}

/// Moments for several target sets over an ε schedule; tubes are built one ε
/// at a time and dropped after use.
#[allow(clippy::too_many_arguments)]
pub fn moments_over_schedule(
    f: &PrimitiveF,
    trace: &BoundaryTrace,
    curve: &CurveDomain,
    hefer: &HeferTriple,
    targets: &[Vec<KernelPoint>],
    epsilons: &[f64],
    dims: (usize, usize, usize),
    psi_shift: f64,
) -> Result<Vec<GMoments>> {
    let mut raw: Vec<Vec<Vec<C64>>> = vec![vec![]; targets.len()];
    let mut diag = TubeDiagnostics {
        min_p: f64::INFINITY,
        min_f: f64::INFINITY,
        min_b: f64::INFINITY,
        max_projection_ratio: 0.0,
    };
    for &eps in epsilons {
        let tube = build_tube_shifted(curve, trace, eps, dims, psi_shift)?;
        let (g, dg) = tube_moments(f, trace, curve, hefer, &tube, targets)?;
        diag = merge_diag(diag, dg);
        for (t, gt) in g.into_iter().enumerate() {
            raw[t].push(gt);
        }
    }
    Ok(raw.into_iter().map(|r| assemble_moments(epsilons, r, diag)).collect())
}

/// Moments `G_0…G_{d−1}` for one intersection set over prebuilt tubes.
pub fn compute_g(
    f: &PrimitiveF,
    trace: &BoundaryTrace,
    curve: &CurveDomain,
    hefer: &HeferTriple,
    points: &[KernelPoint],
    tubes: &[TubeGrid],
) -> Result<GMoments> {
    let mut raw = vec![];
    let mut diag = TubeDiagnostics {
        min_p: f64::INFINITY,
        min_f: f64::INFINITY,
        min_b: f64::INFINITY,
        max_projection_ratio: 0.0,
    };
    let eps: Vec<f64> = tubes.iter().map(|t| t.epsilon).collect();
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Validation("ε schedule must be strictly decreasing".into()));
    }
    for tube in tubes {
        let (g, dg) = tube_moments(f, trace, curve, hefer, tube, std::slice::from_ref(&points.to_vec()))?;
        diag = merge_diag(diag, dg);
        raw.push(g.into_iter().next().expect("one target"));
    }
    Ok(assemble_moments(&eps, raw, diag))
}

#[derive(Debug, Clone, Serialize)]
pub struct VandermondeSolution {
    pub v: Vec<C64>,
    pub residual: f64,
    /// Bound on `‖A⁻¹‖∞` (Gautschi).
    pub amplification: f64,
    pub warning: bool,
}

/// Solves `Σ_j x_j^k v_j = G_k` by progressive divided differences, i.e.
/// `v_k = det A_k / det A` without forming determinants.
pub fn vandermonde_solve(x: &[C64], g: &[C64]) -> Result<VandermondeSolution> {
    let n = x.len();
    if g.len() != n || n == 0 {
        return Err(Error::Validation("Vandermonde system size mismatch".into()));
    }
    let sep = crate::roots::min_separation(x);
    if sep == 0.0 {
        return Err(Error::Numerical("Vandermonde nodes coincide".into()));
    }
    let mut b = g.to_vec();
    let m = n - 1;
    for k in 0..m {
        for i in (k + 1..=m).rev() {
            let prev = b[i - 1];
            b[i] -= x[k] * prev;
        }
    }
    for k in (0..m).rev() {
        for i in k + 1..=m {
            b[i] /= x[i] - x[i - k - 1];
        }
        for i in k..m {
            let t = b[i + 1];
            b[i] -= t;
        }
    }
    let gn = g.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let residual = (0..n)
        .map(|k| (g[k] - (0..n).map(|j| x[j].powu(k as u32) * b[j]).sum::<C64>()).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let amplification = (0..n)
        .map(|j| {
            (0..n)
                .filter(|&i| i != j)
                .map(|i| (1.0 + x[i].norm()) / (x[j] - x[i]).norm())
                .product::<f64>()
        })
        .fold(0.0, f64::max);
    Ok(VandermondeSolution {
        v: b,
        residual: residual / gn.max(1e-300),
        amplification,
        warning: sep < 1e-3,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructedPoint {
    pub k: usize,
    /// Unit lift of `w^(k)` as `[re, im]` pairs.
    pub w: [[f64; 2]; 3],
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub u_rec: f64,
    pub h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_oracle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_err: Option<f64>,
}

/// `u(w^(k)) = Re{w^(k)_0 · v_k}/N + h(w^(k))` with the lift used in the kernel.
pub fn reconstruct_u(
    points: &[KernelPoint],
    v: &[C64],
    h: &CorrectionH,
    norm: Normalization,
) -> Result<Vec<ReconstructedPoint>> {
    let d = points.len();
    points
        .iter()
        .zip(v)
        .enumerate()
        .map(|(k, (p, vk))| {
            let lu = unit(&p.lift);
            let hv = eval_h(h, &lu)?;
            let y = p.lift[2] / p.lift[0];
            Ok(ReconstructedPoint {
                k,
                w: [[lu[0].re, lu[0].im], [lu[1].re, lu[1].im], [lu[2].re, lu[2].im]],
                x: [p.x.re, p.x.im],
                y: [y.re, y.im],
                u_rec: (p.lift[0] * vk).re / norm.divisor(d) + hv,
                h: hv,
                u_oracle: None,
                abs_err: None,
                rel_err: None,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vandermonde_small() {
        let s = vandermonde_solve(&[c(3., 1.)], &[c(2., 0.)]).unwrap();
        assert_eq!(s.v, vec![c(2., 0.)]);
        let s = vandermonde_solve(&[c(0., 0.), c(1., 0.)], &[c(1., 0.), c(1., 0.)]).unwrap();
        assert!((s.v[0]).norm() < 1e-15 && (s.v[1] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn richardson_removes_linear_and_quadratic_terms() {
        let eps = [0.04, 0.02, 0.01];
        let vals: Vec<C64> = eps.iter().map(|e| c(1.0 + 3.0 * e - 7.0 * e * e, -2.0 + e)).collect();
        let (v, _) = richardson(&eps, &vals);
        assert!((v - c(1.0, -2.0)).norm() < 1e-13);
    }
}
