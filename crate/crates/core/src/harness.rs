//! Synthetic scenarios with closed-form oracles, end-to-end runs and
//! convergence studies.

use std::f64::consts::TAU;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::algebra::{conic, fermat_cubic, hefer_decompose, line, HomPoly3};
use crate::config::RunConfig;
use crate::geometry::{
    choose_barrier_with, default_reference_points, dot, removed_region_of, trace_boundary, BarrierThresholds,
    BoundaryTrace, CurveDomain, IntersectionSet, ProjectivePoint,
};
use crate::harmonic::{
    build_h, default_connectors, period_a, primitive_f, read_component_csv, read_connector_csv, write_component_csv,
    write_connector_csv, BoundaryField, ComponentData, Connector, ConnectorPath, CorrectionH, HMode, Periods,
    PrimitiveF, Provenance, Route,
};
use crate::kernel::{
    kernel_points, moments_over_schedule, reconstruct_u, vandermonde_solve, GMoments, KernelBarrier, KernelPoint,
    Normalization, ReconstructedPoint, DEFAULT_EPSILONS, ORIENTATION,
};
use crate::{Error, Result, StageExt};

/// One harmonic summand of `u`, in chart coordinates.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Part {
    /// `Re Σ c_k x^k`.
    RePoly { coeffs: Vec<C64> },
    /// `Re(c/(x − pole))`.
    ReInverse { coeff: C64, pole: C64 },
    /// `c · log|num·z / den·z|²`.
    LogRatio { c: f64, num: [C64; 3], den: [C64; 3] },
}

#[derive(Debug, Clone, Serialize)]
pub struct Oracle {
    pub parts: Vec<Part>,
}

impl Oracle {
    pub fn u(&self, x: C64, y: C64) -> f64 {
        let z = [C64::new(1.0, 0.0), x, y];
        self.parts
            .iter()
            .map(|p| match p {
                Part::RePoly { coeffs } => coeffs.iter().rev().fold(C64::default(), |a, c| a * x + c).re,
                Part::ReInverse { coeff, pole } => (coeff / (x - pole)).re,
                Part::LogRatio { c, num, den } => c * (dot(num, &z) / dot(den, &z)).norm_sqr().ln(),
            })
            .sum()
    }

    /// `∂u = q(x, y) dx` along the curve, given `dy/dx`.
    pub fn du_dx(&self, x: C64, y: C64, slope: C64) -> C64 {
        let z = [C64::new(1.0, 0.0), x, y];
        self.parts
            .iter()
            .map(|p| match p {
                Part::RePoly { coeffs } => {
                    0.5 * coeffs
                        .iter()
                        .enumerate()
                        .skip(1)
                        .rev()
                        .fold(C64::default(), |a, (k, c)| a * x + c * k as f64)
                }
                Part::ReInverse { coeff, pole } => -0.5 * coeff / ((x - pole) * (x - pole)),
                Part::LogRatio { c, num, den } => {
                    *c * ((num[1] + num[2] * slope) / dot(num, &z) - (den[1] + den[2] * slope) / dot(den, &z))
                }
            })
            .sum()
    }

    /// Five-point Laplacian of `u` in the local chart `x` on a sheet.
    pub fn laplacian(&self, curve: &CurveDomain, x: C64, y: C64, h: f64) -> f64 {
        let at = |dx: C64| {
            let xx = x + dx;
            let yy = curve.polish_y(xx, y + curve.slope(x, y) * dx);
            self.u(xx, yy)
        };
        (at(C64::new(h, 0.0)) + at(C64::new(-h, 0.0)) + at(C64::new(0.0, h)) + at(C64::new(0.0, -h))
            - 4.0 * self.u(x, y))
            / (h * h)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Probe {
    pub x: C64,
    /// Index into the fiber over `x` sorted by (re, im).
    pub sheet: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ExpectedFailures {
    pub paper_h: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub name: String,
    #[serde(skip)]
    pub poly: HomPoly3,
    pub radius: f64,
    /// Reference points `(x, y)`, one per removed region; defaults when absent.
    pub reference_points: Option<Vec<(C64, C64)>>,
    /// Ground truth; absent for measured boundary data.
    pub oracle: Option<Oracle>,
    /// Boundary data supplied directly instead of sampled from the oracle.
    #[serde(skip)]
    pub boundary: Option<BoundaryField>,
    pub probes: Vec<Probe>,
    pub expected: ExpectedFailures,
    pub options: RunOptions,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOptions {
    pub n_theta: usize,
    pub grid: (usize, usize, usize),
    pub epsilons: Vec<f64>,
    pub seed: u64,
    pub max_retries: usize,
    pub h_mode: HMode,
    pub barrier: KernelBarrier,
    pub normalization: Normalization,
    /// Lower bound on `−ρ` at every member of `S(w)`, as a multiple of R.
    pub inside_margin: f64,
    pub psi_shift: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            n_theta: 256,
            grid: (256, 32, 32),
            epsilons: DEFAULT_EPSILONS.to_vec(),
            seed: 0,
            max_retries: 64,
            h_mode: HMode::Auto,
            barrier: KernelBarrier::PerPoint,
            normalization: Normalization::Derived,
            inside_margin: 0.2,
            psi_shift: 0.0,
        }
    }
}

impl RunOptions {
    /// For d ≥ 2 the ψ-integrand decays only like |⟨ζ̂, ŵ⟩|^N_ψ and the
    /// θ-integrand sharpens as ε shrinks.
    pub fn curved() -> Self {
        Self {
            n_theta: 512,
            grid: (512, 32, 64),
            ..Self::default()
        }
    }
}

pub const SCENARIOS: [&str; 4] = ["line-rational", "line-linear", "conic-log", "fermat-mixed"];

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn make_scenario(name: &str) -> Result<Scenario> {
    let line_probes = vec![
        Probe {
            x: c(0.1, 0.0),
            sheet: 0,
        },
        Probe {
            x: c(0.0, 0.1),
            sheet: 0,
        },
        Probe {
            x: c(-0.08, 0.05),
            sheet: 0,
        },
        Probe {
            x: c(0.12, -0.06),
            sheet: 0,
        },
        Probe {
            x: c(-0.05, -0.1),
            sheet: 0,
        },
    ];
    let s = match name {
        "line-rational" => Scenario {
            name: name.into(),
            poly: line(),
            radius: 2.0,
            reference_points: None,
            boundary: None,
            oracle: Some(Oracle {
                parts: vec![Part::RePoly {
                    coeffs: vec![c(0., 0.), c(0., 0.), c(1., 0.)],
                }],
            }),
            probes: line_probes,
            expected: ExpectedFailures::default(),
            options: RunOptions::default(),
        },
        "line-linear" => Scenario {
            name: name.into(),
            poly: line(),
            radius: 2.0,
            reference_points: None,
            boundary: None,
            oracle: Some(Oracle {
                parts: vec![Part::RePoly {
                    coeffs: vec![c(0., 0.), c(1., 0.)],
                }],
            }),
            probes: line_probes,
            expected: ExpectedFailures::default(),
            options: RunOptions::default(),
        },
        "conic-log" => {
            // φ = z2/(z0 + z1); u = log|(φ − t1)/(φ − t2)|²
            let (t1, t2) = (c(0.0, 0.75), c(0.0, -0.75));
            let form = |t: C64| [-t, -t, c(1., 0.)];
            Scenario {
                name: name.into(),
                poly: conic(),
                radius: 2.0,
                reference_points: None,
                boundary: None,
                oracle: Some(Oracle {
                    parts: vec![Part::LogRatio {
                        c: 1.0,
                        num: form(t1),
                        den: form(t2),
                    }],
                }),
                probes: vec![
                    Probe {
                        x: c(0.2, 0.1),
                        sheet: 1,
                    },
                    Probe {
                        x: c(-0.3, 0.25),
                        sheet: 0,
                    },
                    Probe {
                        x: c(0.1, -0.35),
                        sheet: 1,
                    },
                ],
                expected: ExpectedFailures { paper_h: true },
                options: RunOptions::curved(),
            }
        }
        "fermat-mixed" => {
            // lines parallel to the asymptotes at [0:1:η]
            let eta_a = C64::from_polar(1.0, TAU / 6.0);
            let eta_b = C64::from_polar(1.0, -TAU / 6.0);
            let shift = c(0.02, 0.0);
            Scenario {
                name: name.into(),
                poly: fermat_cubic(),
                radius: 2.0,
                reference_points: None,
                boundary: None,
                oracle: Some(Oracle {
                    parts: vec![
                        Part::ReInverse {
                            coeff: c(1., 0.),
                            pole: c(4., 0.),
                        },
                        Part::LogRatio {
                            c: 0.5,
                            num: [-shift, -eta_a, c(1., 0.)],
                            den: [-shift, -eta_b, c(1., 0.)],
                        },
                    ],
                }),
                probes: vec![
                    Probe {
                        x: c(0.1, 0.05),
                        sheet: 0,
                    },
                    Probe {
                        x: c(-0.2, 0.1),
                        sheet: 1,
                    },
                    Probe {
                        x: c(0.05, -0.25),
                        sheet: 2,
                    },
                ],
                expected: ExpectedFailures::default(),
                options: RunOptions::curved(),
            }
        }
        _ => {
            return Err(Error::Validation(format!(
                "unknown scenario '{name}'; known: {}",
                SCENARIOS.join(", ")
            )))
        }
    };
    Ok(s)
}

/// Boundary data sampled from the oracle, with default connectors.
pub fn sample_field(
    curve: &CurveDomain,
    trace: &BoundaryTrace,
    oracle: &Oracle,
    route: Route,
) -> Result<BoundaryField> {
    let components = (0..trace.components.len())
        .map(|ci| {
            let comp = &trace.components[ci];
            let mut u = Vec::with_capacity(comp.len());
            let mut p = Vec::with_capacity(comp.len());
            for i in 0..comp.len() {
                let x = trace.x(comp.theta[i]);
                let y = comp.y[i];
                u.push(oracle.u(x, y));
                p.push(oracle.du_dx(x, y, curve.slope(x, y)) * C64::new(0.0, 1.0) * x);
            }
            ComponentData { u, p }
        })
        .collect();
    let connectors = default_connectors(curve, trace, route)?
        .into_iter()
        .map(|path| {
            let p = connector_du(curve, oracle, &path);
            Connector { path, p }
        })
        .collect();
    Ok(BoundaryField {
        components,
        connectors,
        provenance: Provenance::Analytic,
    })
}

fn connector_du(curve: &CurveDomain, oracle: &Oracle, path: &ConnectorPath) -> Vec<C64> {
    (0..path.x.len())
        .map(|k| oracle.du_dx(path.x[k], path.y[k], curve.slope(path.x[k], path.y[k])) * path.dx[k])
        .collect()
}

/// Curve, trace and reference points for a scenario.
pub fn prepare(s: &Scenario) -> Result<(CurveDomain, BoundaryTrace)> {
    let mut curve = CurveDomain::new(s.poly.clone(), s.radius).stage("curve")?;
    let trace = trace_boundary(&curve, s.options.n_theta).stage("trace")?;
    curve.reference_points = match &s.reference_points {
        None => default_reference_points(&curve, &trace).stage("trace")?,
        Some(pts) => order_reference_points(&curve, &trace, pts).stage("trace")?,
    };
    Ok((curve, trace))
}

/// Places user reference points in component order, one per removed region.
fn order_reference_points(
    curve: &CurveDomain,
    trace: &BoundaryTrace,
    pts: &[(C64, C64)],
) -> Result<Vec<ProjectivePoint>> {
    let m = trace.components.len();
    if pts.len() != m {
        return Err(Error::Validation(format!(
            "{} reference points given for {m} removed regions",
            pts.len()
        )));
    }
    let mut slots: Vec<Option<ProjectivePoint>> = vec![None; m];
    for &(x, y) in pts {
        let (p, _, _) = curve.chart_eval(x, y);
        if p.norm() > 1e-8 * curve.poly.norm1() * (1.0 + x.norm() + y.norm()).powi(curve.degree() as i32) {
            return Err(Error::Validation(format!(
                "reference point ({x}, {y}) is not on the curve"
            )));
        }
        let r = removed_region_of(curve, trace, x, y)?;
        if slots[r].is_some() {
            return Err(Error::Validation(format!("two reference points in removed region {r}")));
        }
        slots[r] = Some(ProjectivePoint::sphere([c(1., 0.), x, y])?);
    }
    Ok(slots.into_iter().map(|s| s.expect("pigeonhole")).collect())
}

fn boundary_field(s: &Scenario, curve: &CurveDomain, trace: &BoundaryTrace, route: Route) -> Result<BoundaryField> {
    match (&s.boundary, &s.oracle) {
        (Some(f), _) => {
            f.check_against(trace)?;
            Ok(f.clone())
        }
        (None, Some(o)) => sample_field(curve, trace, o, route),
        (None, None) => Err(Error::Validation("no boundary data and no oracle".into())),
    }
}

pub fn probe_point(curve: &CurveDomain, p: &Probe) -> Result<ProjectivePoint> {
    let mut ys = curve.fiber_over_x(p.x).ys;
    ys.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let y = *ys
        .get(p.sheet)
        .ok_or_else(|| Error::Validation(format!("sheet {} out of range over x = {}", p.sheet, p.x)))?;
    ProjectivePoint::sphere([c(1., 0.), p.x, y])
}

#[derive(Debug, Clone, Serialize)]
pub struct HSummary {
    pub mode: HMode,
    pub terms: usize,
    pub period_residual: f64,
    pub paper_residual: Option<f64>,
    pub report: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub probe: usize,
    pub intersection: IntersectionSummary,
    pub points: Vec<ReconstructedPoint>,
    pub moments: GMoments,
    pub vandermonde_residual: f64,
    pub vandermonde_amplification: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntersectionSummary {
    pub x_values: Vec<[f64; 2]>,
    pub min_root_separation: f64,
    pub min_x_separation: f64,
    pub inside_margin: f64,
}

impl From<&IntersectionSet> for IntersectionSummary {
    fn from(s: &IntersectionSet) -> Self {
        Self {
            x_values: s.x_values.iter().map(|x| [x.re, x.im]).collect(),
            min_root_separation: s.min_root_separation,
            min_x_separation: s.min_x_separation,
            inside_margin: s.inside_margin,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub degree: usize,
    pub options: RunOptions,
    pub components: Vec<usize>,
    pub monodromy: Vec<usize>,
    pub periods: Periods,
    pub h: HSummary,
    pub re_drift: f64,
    pub closure: f64,
    pub connector_independence: Option<f64>,
    pub probes: Vec<ProbeReport>,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub orientation: f64,
}

/// Everything up to and including the primitive `f`.
pub struct Prepared {
    pub curve: CurveDomain,
    pub trace: BoundaryTrace,
    pub field: BoundaryField,
    pub periods: Periods,
    pub h: CorrectionH,
    pub f: PrimitiveF,
    pub connector_independence: Option<f64>,
}

pub fn prepare_primitive(s: &Scenario) -> Result<Prepared> {
    let (curve, trace) = prepare(s)?;
    let field = boundary_field(s, &curve, &trace, Route::Forward).stage("connectors")?;
    let periods = period_a(&field, &trace).stage("periods")?;
    let h = build_h(&curve, &trace, &periods.a, s.options.h_mode).stage("correction")?;
    let f = primitive_f(&field, &h, &trace).stage("primitive")?;
    // constants carried along the opposite loops must agree
    let connector_independence = match (&s.oracle, trace.components.len()) {
        (_, 1) => Some(0.0),
        (Some(o), _) => {
            let alt = sample_field(&curve, &trace, o, Route::Reverse).stage("connectors")?;
            let f2 = primitive_f(&alt, &h, &trace).stage("primitive")?;
            Some(
                f.offsets
                    .iter()
                    .zip(&f2.offsets)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max),
            )
        }
        (None, _) => None,
    };
    Ok(Prepared {
        curve,
        trace,
        field,
        periods,
        h,
        f,
        connector_independence,
    })
}

pub fn choose_probe_barriers(s: &Scenario, curve: &CurveDomain) -> Result<Vec<IntersectionSet>> {
    let th = BarrierThresholds {
        inside_margin: s.options.inside_margin * s.radius,
        ..Default::default()
    };
    s.probes
        .iter()
        .map(|p| {
            let w = probe_point(curve, p)?;
            choose_barrier_with(curve, &w, s.options.seed, s.options.max_retries, &th)
        })
        .collect::<Result<Vec<_>>>()
        .stage("barrier")
}

pub fn relative(err: f64, u: f64) -> f64 {
    err / u.abs().max(1.0)
}

fn attach_oracle(points: &mut [ReconstructedPoint], oracle: &Oracle) {
    for p in points {
        let u = oracle.u(c(p.x[0], p.x[1]), c(p.y[0], p.y[1]));
        let e = (p.u_rec - u).abs();
        p.u_oracle = Some(u);
        p.abs_err = Some(e);
        p.rel_err = Some(relative(e, u));
    }
}

/// Reconstruct from moments at one schedule entry (`Some(i)`) or from the
/// extrapolated moments (`None`).
pub fn reconstruct_from(
    m: &GMoments,
    at: Option<usize>,
    pts: &[KernelPoint],
    h: &CorrectionH,
    norm: Normalization,
    oracle: Option<&Oracle>,
) -> Result<(Vec<ReconstructedPoint>, f64, f64)> {
    let g = match at {
        Some(i) => &m.raw[i],
        None => &m.extrapolated,
    };
    let x: Vec<C64> = pts.iter().map(|p| p.x).collect();
    let sol = vandermonde_solve(&x, g)?;
    let mut out = reconstruct_u(pts, &sol.v, h, norm)?;
    if let Some(o) = oracle {
        attach_oracle(&mut out, o);
    }
    Ok((out, sol.residual, sol.amplification))
}

pub fn run_scenario(s: &Scenario) -> Result<ScenarioReport> {
    let pr = prepare_primitive(s)?;
    let sets = choose_probe_barriers(s, &pr.curve)?;
    let targets: Vec<Vec<KernelPoint>> = sets.iter().map(|set| kernel_points(set, s.options.barrier)).collect();
    let hefer = hefer_decompose(&pr.curve.poly);
    let moments = moments_over_schedule(
        &pr.f,
        &pr.trace,
        &pr.curve,
        &hefer,
        &targets,
        &s.options.epsilons,
        s.options.grid,
        s.options.psi_shift,
    )
    .stage("moments")?;
    let mut probes = vec![];
    let (mut max_abs, mut max_rel) = (0.0f64, 0.0f64);
    for (i, (m, pts)) in moments.into_iter().zip(&targets).enumerate() {
        let (points, res, amp) =
            reconstruct_from(&m, None, pts, &pr.h, s.options.normalization, s.oracle.as_ref()).stage("reconstruct")?;
        for p in &points {
            max_abs = max_abs.max(p.abs_err.unwrap_or(0.0));
            max_rel = max_rel.max(p.rel_err.unwrap_or(0.0));
        }
        probes.push(ProbeReport {
            probe: i,
            intersection: (&sets[i]).into(),
            points,
            moments: m,
            vandermonde_residual: res,
            vandermonde_amplification: amp,
        });
    }
    Ok(ScenarioReport {
        scenario: s.name.clone(),
        degree: pr.curve.degree(),
        options: s.options.clone(),
        components: pr.trace.components.iter().map(|c| c.n_cover).collect(),
        monodromy: pr.trace.monodromy.clone(),
        periods: pr.periods.clone(),
        h: HSummary {
            mode: pr.h.mode,
            terms: pr.h.terms.len(),
            period_residual: pr.h.period_residual,
            paper_residual: pr.h.paper_residual,
            report: pr.h.report.clone(),
        },
        re_drift: pr.f.re_drift,
        closure: pr.f.max_closure(),
        connector_independence: pr.connector_independence,
        probes,
        max_abs_err: max_abs,
        max_rel_err: max_rel,
        orientation: ORIENTATION,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    /// `None` for the extrapolated value.
    pub epsilon: Option<f64>,
    pub grid: (usize, usize, usize),
    pub probe: usize,
    pub k: usize,
    pub u_rec: f64,
    pub u_oracle: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub grids: Vec<(usize, usize, usize)>,
    pub epsilons: Vec<f64>,
}

/// Errors against the oracle at every ε (before extrapolation) and after
/// extrapolation, for each grid.
pub fn convergence_study(s: &Scenario, sweep: &Sweep) -> Result<Vec<SweepRow>> {
    let pr = prepare_primitive(s)?;
    let sets = choose_probe_barriers(s, &pr.curve)?;
    let targets: Vec<Vec<KernelPoint>> = sets.iter().map(|set| kernel_points(set, s.options.barrier)).collect();
    let hefer = hefer_decompose(&pr.curve.poly);
    let mut rows = vec![];
    for &grid in &sweep.grids {
        let moments = moments_over_schedule(
            &pr.f,
            &pr.trace,
            &pr.curve,
            &hefer,
            &targets,
            &sweep.epsilons,
            grid,
            s.options.psi_shift,
        )
        .stage("moments")?;
        for (pi, (m, pts)) in moments.iter().zip(&targets).enumerate() {
            let at: Vec<Option<usize>> = (0..sweep.epsilons.len()).map(Some).chain([None]).collect();
            for a in at {
                let (points, _, _) = reconstruct_from(m, a, pts, &pr.h, s.options.normalization, s.oracle.as_ref())?;
                for p in points {
                    rows.push(SweepRow {
                        epsilon: a.map(|i| sweep.epsilons[i]),
                        grid,
                        probe: pi,
                        k: p.k,
                        u_rec: p.u_rec,
                        u_oracle: p.u_oracle.unwrap_or(f64::NAN),
                        abs_err: p.abs_err.unwrap_or(f64::NAN),
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("epsilon,n_theta,n_phi,n_psi,probe,k,u_rec,u_oracle,abs_err\n");
    for r in rows {
        let e = r.epsilon.map_or("0".to_string(), |e| format!("{e}"));
        s += &format!(
            "{e},{},{},{},{},{},{:.17e},{:.17e},{:.6e}\n",
            r.grid.0, r.grid.1, r.grid.2, r.probe, r.k, r.u_rec, r.u_oracle, r.abs_err
        );
    }
    s
}

/// Least-squares slope of `log err` against `log ε`.
pub fn loglog_slope(eps: &[f64], err: &[f64]) -> f64 {
    let n = eps.len() as f64;
    let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize)]
pub struct SignCheck {
    pub sign: f64,
    pub max_abs_err: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub orientation: f64,
    pub checks: Vec<(String, Vec<SignCheck>)>,
    /// Least-squares factor between reconstructed and true `u − h`.
    pub constant: f64,
    pub constant_ok: bool,
}

/// Runs the d = 1 pipeline for `u = Re x` and `u = Re x²` and evaluates both
/// orientation signs; exactly one must reproduce the oracle, it must agree
/// with [`ORIENTATION`], and the surviving constant must be 1 within 1e−4.
pub fn calibrate(options: Option<RunOptions>) -> Result<Calibration> {
    let mut checks = vec![];
    let mut num = 0.0;
    let mut den = 0.0;
    let mut chosen: Option<f64> = None;
    for name in ["line-linear", "line-rational"] {
        let mut s = make_scenario(name)?;
        if let Some(o) = &options {
            s.options = o.clone();
        }
        let rep = run_scenario(&s)?;
        let mut per_sign = vec![];
        for sign in [1.0, -1.0] {
            let mut worst = 0.0f64;
            for p in rep.probes.iter().flat_map(|p| &p.points) {
                let u = p.u_oracle.unwrap_or(f64::NAN);
                let rec = sign * (p.u_rec - p.h) + p.h;
                worst = worst.max((rec - u).abs());
            }
            per_sign.push(SignCheck {
                sign: sign * ORIENTATION,
                max_abs_err: worst,
                passes: worst <= 1e-6,
            });
        }
        let passing: Vec<f64> = per_sign.iter().filter(|c| c.passes).map(|c| c.sign).collect();
        if passing.len() != 1 {
            return Err(Error::Calibration(format!(
                "{name}: {} orientation signs reproduce the oracle (need exactly one): {per_sign:?}",
                passing.len()
            )));
        }
        if let Some(prev) = chosen {
            if prev != passing[0] {
                return Err(Error::Calibration("oracles disagree on the orientation sign".into()));
            }
        }
        chosen = Some(passing[0]);
        let s_rel = passing[0] * ORIENTATION;
        for p in rep.probes.iter().flat_map(|p| &p.points) {
            let truth = p.u_oracle.unwrap_or(f64::NAN) - p.h;
            num += s_rel * (p.u_rec - p.h) * truth;
            den += truth * truth;
        }
        checks.push((name.to_string(), per_sign));
    }
    let orientation = chosen.expect("two scenarios ran");
    let constant = num / den;
    let cal = Calibration {
        orientation,
        checks,
        constant,
        constant_ok: (constant - 1.0).abs() <= 1e-4,
    };
    if orientation != ORIENTATION {
        return Err(Error::Calibration(format!(
            "calibrated orientation {orientation} differs from the built-in constant {ORIENTATION}"
        )));
    }
    if !cal.constant_ok {
        return Err(Error::Calibration(format!(
            "surviving constant {constant} deviates from 1 by more than 1e-4"
        )));
    }
    Ok(cal)
}

/// Scenario driven by a run configuration; probes come from the caller.
pub fn scenario_from_config(cfg: &RunConfig, probes: Vec<Probe>) -> Result<Scenario> {
    let poly = cfg.poly()?;
    let oracle = match &cfg.scenario {
        Some(name) => {
            let s = make_scenario(name)?;
            if s.poly != poly || s.radius != cfg.radius {
                return Err(Error::Validation(format!(
                    "io.scenario '{name}' does not match the configured curve and radius"
                )));
            }
            s.oracle
        }
        None => None,
    };
    let boundary = cfg
        .boundary
        .as_deref()
        .map(|d| load_boundary_dir(Path::new(d)))
        .transpose()?;
    if oracle.is_none() && boundary.is_none() {
        return Err(Error::Validation(
            "config needs io.boundary or io.scenario to supply boundary data".into(),
        ));
    }
    Ok(Scenario {
        name: cfg.scenario.clone().unwrap_or_else(|| "config".into()),
        poly,
        radius: cfg.radius,
        reference_points: cfg.reference_points(),
        oracle,
        boundary,
        probes,
        expected: ExpectedFailures::default(),
        options: cfg.options(),
    })
}

/// Boundary samples and connectors as `(file name, CSV)` pairs.
pub fn export_boundary(s: &Scenario) -> Result<Vec<(String, String)>> {
    let (curve, trace) = prepare(s)?;
    let field = boundary_field(s, &curve, &trace, Route::Forward).stage("connectors")?;
    let mut out: Vec<(String, String)> = field
        .components
        .iter()
        .enumerate()
        .map(|(c, d)| (format!("component_{c}.csv"), write_component_csv(&trace, c, d)))
        .collect();
    out.push(("connectors.csv".into(), write_connector_csv(&field.connectors)));
    out.push(("trace.csv".into(), trace.to_csv()));
    Ok(out)
}

pub fn load_boundary_dir(dir: &Path) -> Result<BoundaryField> {
    let mut components = vec![];
    loop {
        let p = dir.join(format!("component_{}.csv", components.len()));
        if !p.exists() {
            break;
        }
        components.push(read_component_csv(&std::fs::read_to_string(&p)?)?);
    }
    if components.is_empty() {
        return Err(Error::Validation(format!("no component_0.csv in {}", dir.display())));
    }
    let cp = dir.join("connectors.csv");
    let connectors = if cp.exists() {
        read_connector_csv(&std::fs::read_to_string(cp)?)?
    } else {
        vec![]
    };
    Ok(BoundaryField {
        components,
        connectors,
        provenance: Provenance::Measured,
    })
}

/// `epsilon,k,G_re,G_im,err_est`; the extrapolated row has ε = 0.
pub fn moments_csv(report: &ScenarioReport) -> String {
    let mut s = String::from("probe,epsilon,k,G_re,G_im,err_est\n");
    for p in &report.probes {
        let m = &p.moments;
        for (i, e) in m.epsilons.iter().enumerate() {
            for (k, g) in m.raw[i].iter().enumerate() {
                s += &format!("{},{e},{k},{:.17e},{:.17e},\n", p.probe, g.re, g.im);
            }
        }
        for (k, g) in m.extrapolated.iter().enumerate() {
            s += &format!(
                "{},0,{k},{:.17e},{:.17e},{:.6e}\n",
                p.probe, g.re, g.im, m.error_estimate[k]
            );
        }
    }
    s
}
