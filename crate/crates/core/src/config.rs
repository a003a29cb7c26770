//! Run configuration: one strict TOML schema, validated before anything runs.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Spanned;

use crate::algebra::HomPoly3;
use crate::harmonic::HMode;
use crate::harness::RunOptions;
use crate::kernel::DEFAULT_EPSILONS;
use crate::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    curve: RawCurve,
    domain: RawDomain,
    #[serde(default)]
    trace: RawTrace,
    #[serde(default)]
    quad: RawQuad,
    #[serde(default)]
    barrier: RawBarrier,
    #[serde(default)]
    h: RawH,
    #[serde(default)]
    io: RawIo,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurve {
    coefficients: Vec<Spanned<Coefficient>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficient {
    pub i: u32,
    pub j: u32,
    pub k: u32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    radius: f64,
    reference_points: Option<Vec<RefPoint>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefPoint {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrace {
    n_theta: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuad {
    epsilons: Option<Vec<f64>>,
    grid: Option<[usize; 3]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBarrier {
    seed: Option<u64>,
    max_retries: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawH {
    mode: Option<HMode>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIo {
    out: Option<String>,
    /// Directory with `component_<c>.csv` and `connectors.csv`.
    boundary: Option<String>,
    /// Built-in scenario whose oracle supplies the boundary data.
    scenario: Option<String>,
}

/// Validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub coefficients: Vec<Coefficient>,
    pub radius: f64,
    pub reference_points: Option<Vec<RefPoint>>,
    pub n_theta: usize,
    pub epsilons: Vec<f64>,
    pub grid: [usize; 3],
    pub seed: u64,
    pub max_retries: usize,
    pub h_mode: HMode,
    pub out: String,
    pub boundary: Option<String>,
    pub scenario: Option<String>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))?;

    let mut seen: BTreeMap<[u32; 3], usize> = BTreeMap::new();
    let mut coefficients = vec![];
    for c in &raw.curve.coefficients {
        let line = line_of(text, c.span().start);
        let v = *c.get_ref();
        let e = [v.i, v.j, v.k];
        if let Some(first) = seen.insert(e, line) {
            return Err(Error::Validation(format!(
                "config: duplicate exponent record {e:?} at line {first} and line {line}"
            )));
        }
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Validation(format!(
                "config: non-finite coefficient at line {line}"
            )));
        }
        coefficients.push(v);
    }

    let radius = raw.domain.radius;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Validation(format!(
            "config: domain.radius must be positive, got {radius}"
        )));
    }
    let grid = raw.quad.grid.unwrap_or([256, 32, 32]);
    if grid.contains(&0) {
        return Err(Error::Validation(format!(
            "config: quad.grid entries must be positive, got {grid:?}"
        )));
    }
    let n_theta = raw.trace.n_theta.unwrap_or(grid[0]);
    if n_theta == 0 || !n_theta.is_multiple_of(grid[0]) {
        return Err(Error::Validation(format!(
            "config: trace.n_theta ({n_theta}) must be a positive multiple of quad.grid[0] ({})",
            grid[0]
        )));
    }
    let epsilons = raw.quad.epsilons.unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
    if epsilons.is_empty() || epsilons.iter().any(|&e| !(e > 0.0 && e <= 0.1)) {
        return Err(Error::Validation(format!(
            "config: quad.epsilons must lie in (0, 0.1], got {epsilons:?}"
        )));
    }
    if raw.io.boundary.is_some() && raw.io.scenario.is_some() {
        return Err(Error::Validation(
            "config: io.boundary and io.scenario are mutually exclusive".into(),
        ));
    }
    let cfg = RunConfig {
        coefficients,
        radius,
        reference_points: raw.domain.reference_points,
        n_theta,
        epsilons,
        grid,
        seed: raw.barrier.seed.unwrap_or(0),
        max_retries: raw.barrier.max_retries.unwrap_or(64),
        h_mode: raw.h.mode.unwrap_or(HMode::Auto),
        out: raw.io.out.unwrap_or_else(|| "out".into()),
        boundary: raw.io.boundary,
        scenario: raw.io.scenario,
    };
    cfg.poly()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn poly(&self) -> Result<HomPoly3> {
        HomPoly3::new(
            self.coefficients
                .iter()
                .map(|c| ([c.i, c.j, c.k], C64::new(c.re, c.im))),
        )
    }

    pub fn reference_points(&self) -> Option<Vec<(C64, C64)>> {
        self.reference_points.as_ref().map(|v| {
            v.iter()
                .map(|r| (C64::new(r.x[0], r.x[1]), C64::new(r.y[0], r.y[1])))
                .collect()
        })
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn options(&self) -> RunOptions {
        RunOptions {
            n_theta: self.n_theta,
            grid: (self.grid[0], self.grid[1], self.grid[2]),
            epsilons: self.epsilons.clone(),
            seed: self.seed,
            max_retries: self.max_retries,
            h_mode: self.h_mode,
            ..RunOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[curve]
coefficients = [
  { i = 0, j = 0, k = 1, re = 1.0 },
]

[domain]
radius = 2.0
"#;

    #[test]
    fn defaults_filled() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid, [256, 32, 32]);
        assert_eq!(c.n_theta, 256);
        assert_eq!(c.epsilons, vec![0.04, 0.02, 0.01]);
        assert_eq!(c.h_mode, HMode::Auto);
        assert_eq!(c.fingerprint().len(), 64);
    }
}
