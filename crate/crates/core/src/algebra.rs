//! Homogeneous polynomials in three variables and the telescoping Hefer
//! decomposition `P(ζ) − P(z) = Σ Qⁱ(ζ,z)(ζᵢ − zᵢ)`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::{Error, Result};

pub const MAX_DEGREE: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct HomPoly3 {
    degree: u32,
    coeffs: BTreeMap<[u32; 3], C64>,
}

impl HomPoly3 {
    /// Builds `Σ c·z0^i z1^j z2^k`; repeated exponents are summed, zero
    /// coefficients dropped.
    pub fn new(terms: impl IntoIterator<Item = ([u32; 3], C64)>) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        let mut degree = None;
        for (e, c) in terms {
            let d = e[0] + e[1] + e[2];
            match degree {
                None => degree = Some(d),
                Some(d0) if d0 != d => {
                    return Err(Error::Validation(format!(
                        "non-homogeneous polynomial: term {e:?} has degree {d}, expected {d0}"
                    )))
                }
                _ => {}
            }
            *coeffs.entry(e).or_insert(C64::new(0.0, 0.0)) += c;
        }
        coeffs.retain(|_, c| *c != C64::new(0.0, 0.0));
        let degree = degree.ok_or_else(|| Error::Validation("empty polynomial".into()))?;
        if coeffs.is_empty() {
            return Err(Error::Validation("zero polynomial".into()));
        }
        if degree > MAX_DEGREE {
            return Err(Error::Validation(format!("degree {degree} exceeds cap {MAX_DEGREE}")));
        }
        Ok(Self { degree, coeffs })
    }

    pub fn from_real(terms: &[([u32; 3], f64)]) -> Result<Self> {
        Self::new(terms.iter().map(|&(e, c)| (e, C64::new(c, 0.0))))
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32; 3], &C64)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, e: [u32; 3]) -> C64 {
        self.coeffs.get(&e).copied().unwrap_or_default()
    }

    /// Sum of coefficient magnitudes; the natural scale for residuals at unit points.
    pub fn norm1(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    pub fn eval(&self, z: &[C64; 3]) -> C64 {
        let pw = powers(z, self.degree as usize);
        self.coeffs
            .iter()
            .map(|(e, c)| c * pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize])
            .sum()
    }

    pub fn grad(&self, z: &[C64; 3]) -> [C64; 3] {
        let pw = powers(z, self.degree as usize);
        let mut g = [C64::default(); 3];
        for (e, c) in &self.coeffs {
            for v in 0..3 {
                if e[v] == 0 {
                    continue;
                }
                let mut t = c * e[v] as f64;
                for u in 0..3 {
                    let p = if u == v { e[u] - 1 } else { e[u] };
                    t *= pw[u][p as usize];
                }
                g[v] += t;
            }
        }
        g
    }

    /// Scale of the terms at `z`, used to make residuals relative.
    pub fn term_scale(&self, z: &[C64; 3]) -> f64 {
        let pw = powers(z, self.degree as usize);
        self.coeffs
            .iter()
            .map(|(e, c)| (c * pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize]).norm())
            .sum()
    }

    /// Coefficients (ascending in y) of `P(1, x, y)`.
    pub fn chart_in_y(&self, x: C64) -> Vec<C64> {
        let d = self.degree as usize;
        let mut out = vec![C64::default(); d + 1];
        for (e, c) in &self.coeffs {
            out[e[2] as usize] += c * x.powu(e[1]);
        }
        out
    }

    /// Coefficients (ascending in t) of `P(0, 1, t)`.
    pub fn at_infinity(&self) -> Vec<C64> {
        let d = self.degree as usize;
        let mut out = vec![C64::default(); d + 1];
        for (e, c) in &self.coeffs {
            if e[0] == 0 {
                out[e[2] as usize] += c;
            }
        }
        out
    }

    /// Coefficients (ascending in τ) of `P(w + τv)`.
    pub fn along_line(&self, w: &[C64; 3], v: &[C64; 3]) -> Vec<C64> {
        let d = self.degree as usize;
        let mut out = vec![C64::default(); d + 1];
        // each linear factor (w_i + τ v_i)^e as a polynomial in τ
        let factor = |i: usize, e: u32| {
            let mut p = vec![C64::new(1.0, 0.0)];
            for _ in 0..e {
                let mut q = vec![C64::default(); p.len() + 1];
                for (k, a) in p.iter().enumerate() {
                    q[k] += a * w[i];
                    q[k + 1] += a * v[i];
                }
                p = q;
            }
            p
        };
        for (e, c) in &self.coeffs {
            let mut p = vec![*c];
            for i in 0..3 {
                let f = factor(i, e[i]);
                let mut q = vec![C64::default(); p.len() + f.len() - 1];
                for (a, pa) in p.iter().enumerate() {
                    for (b, fb) in f.iter().enumerate() {
                        q[a + b] += pa * fb;
                    }
                }
                p = q;
            }
            for (k, a) in p.into_iter().enumerate() {
                out[k] += a;
            }
        }
        out
    }
}

fn powers(z: &[C64; 3], d: usize) -> [Vec<C64>; 3] {
    let one = |zi: C64| {
        let mut v = Vec::with_capacity(d + 1);
        let mut p = C64::new(1.0, 0.0);
        for _ in 0..=d {
            v.push(p);
            p *= zi;
        }
        v
    };
    [one(z[0]), one(z[1]), one(z[2])]
}

/// Sparse polynomial in `(ζ0, ζ1, ζ2, z0, z1, z2)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly6 {
    pub coeffs: BTreeMap<[u32; 6], C64>,
}

impl Poly6 {
    fn add(&mut self, e: [u32; 6], c: C64) {
        *self.coeffs.entry(e).or_default() += c;
    }

    pub fn eval(&self, zeta: &[C64; 3], z: &[C64; 3]) -> C64 {
        let d = self
            .coeffs
            .keys()
            .map(|e| e.iter().max().copied().unwrap_or(0))
            .max()
            .unwrap_or(0) as usize;
        let pz = powers(zeta, d);
        let pw = powers(z, d);
        self.coeffs
            .iter()
            .map(|(e, c)| {
                c * pz[0][e[0] as usize]
                    * pz[1][e[1] as usize]
                    * pz[2][e[2] as usize]
                    * pw[0][e[3] as usize]
                    * pw[1][e[4] as usize]
                    * pw[2][e[5] as usize]
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeferTriple {
    pub degree: u32,
    pub q: [Poly6; 3],
    max_pow: usize,
}

/// Telescoping decomposition in the order ζ0→z0, ζ1→z1, ζ2→z2.
pub fn hefer_decompose(p: &HomPoly3) -> HeferTriple {
    hefer_decompose_ordered(p, [0, 1, 2])
}

/// Telescoping decomposition replacing variables in the given order; any
/// order gives a valid (different) triple.
pub fn hefer_decompose_ordered(p: &HomPoly3, order: [usize; 3]) -> HeferTriple {
    let mut q: [Poly6; 3] = Default::default();
    for (e, c) in p.terms() {
        // variables replaced before `v` carry z, after carry ζ
        for (step, &v) in order.iter().enumerate() {
            let a = e[v];
            for s in 0..a {
                let mut ex = [0u32; 6];
                for (pos, &u) in order.iter().enumerate() {
                    if pos < step {
                        ex[3 + u] = e[u];
                    } else if pos > step {
                        ex[u] = e[u];
                    }
                }
                ex[v] = s;
                ex[3 + v] = a - 1 - s;
                q[v].add(ex, *c);
            }
        }
    }
    for qi in &mut q {
        qi.coeffs.retain(|_, c| *c != C64::default());
    }
    HeferTriple {
        degree: p.degree(),
        q,
        max_pow: p.degree() as usize,
    }
}

impl HeferTriple {
    pub fn eval(&self, zeta: &[C64; 3], z: &[C64; 3]) -> [C64; 3] {
        let d = self.max_pow;
        let pz = powers(zeta, d);
        let pw = powers(z, d);
        let one = |p: &Poly6| -> C64 {
            p.coeffs
                .iter()
                .map(|(e, c)| {
                    c * pz[0][e[0] as usize]
                        * pz[1][e[1] as usize]
                        * pz[2][e[2] as usize]
                        * pw[0][e[3] as usize]
                        * pw[1][e[4] as usize]
                        * pw[2][e[5] as usize]
                })
                .sum()
        };
        [one(&self.q[0]), one(&self.q[1]), one(&self.q[2])]
    }

    /// `|P(ζ) − P(z) − Σ Qⁱ(ζᵢ − zᵢ)|`.
    pub fn residual(&self, p: &HomPoly3, zeta: &[C64; 3], z: &[C64; 3]) -> f64 {
        let q = self.eval(zeta, z);
        let s: C64 = (0..3).map(|i| q[i] * (zeta[i] - z[i])).sum();
        (p.eval(zeta) - p.eval(z) - s).norm()
    }
}

pub fn line() -> HomPoly3 {
    HomPoly3::from_real(&[([0, 0, 1], 1.0)]).expect("static")
}

pub fn conic() -> HomPoly3 {
    HomPoly3::from_real(&[([0, 2, 0], 1.0), ([0, 0, 2], 1.0), ([2, 0, 0], -1.0)]).expect("static")
}

pub fn fermat_cubic() -> HomPoly3 {
    HomPoly3::from_real(&[([3, 0, 0], 1.0), ([0, 3, 0], 1.0), ([0, 0, 3], 1.0)]).expect("static")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let f = fermat_cubic();
        assert_eq!(f.eval(&[c(1., 0.), c(0., 0.), c(0., 0.)]), c(1., 0.));
        assert_eq!(f.eval(&[c(1., 0.), c(-1., 0.), c(0., 0.)]), c(0., 0.));
        assert!(conic().eval(&[c(1., 0.), c(0.6, 0.), c(0.8, 0.)]).norm() < 1e-15);
    }

    #[test]
    fn grad_examples() {
        let p = HomPoly3::from_real(&[([2, 0, 0], 1.0)]).unwrap();
        assert_eq!(
            p.grad(&[c(2., 0.), c(0., 0.), c(0., 0.)]),
            [c(4., 0.), c(0., 0.), c(0., 0.)]
        );
        let p = HomPoly3::from_real(&[([0, 1, 1], 1.0)]).unwrap();
        assert_eq!(
            p.grad(&[c(0., 0.), c(3., 0.), c(5., 0.)]),
            [c(0., 0.), c(5., 0.), c(3., 0.)]
        );
    }

    #[test]
    fn rejects_non_homogeneous() {
        assert!(HomPoly3::from_real(&[([1, 0, 0], 1.0), ([0, 2, 0], 1.0)]).is_err());
        assert!(HomPoly3::from_real(&[([9, 0, 0], 1.0)]).is_err());
    }

    #[test]
    fn hefer_linear() {
        let h = hefer_decompose(&HomPoly3::from_real(&[([1, 0, 0], 1.0)]).unwrap());
        let z = [c(0.3, 1.), c(2., 0.), c(-1., 0.5)];
        assert_eq!(h.eval(&z, &z), [c(1., 0.), c(0., 0.), c(0., 0.)]);
    }

    #[test]
    fn hefer_conic_coefficients() {
        // z0² − z1 z2
        let p = HomPoly3::from_real(&[([2, 0, 0], 1.0), ([0, 1, 1], -1.0)]).unwrap();
        let h = hefer_decompose(&p);
        let one = c(1., 0.);
        let q0: BTreeMap<_, _> = [([1, 0, 0, 0, 0, 0], one), ([0, 0, 0, 1, 0, 0], one)].into();
        let q1: BTreeMap<_, _> = [([0, 0, 1, 0, 0, 0], -one)].into();
        let q2: BTreeMap<_, _> = [([0, 0, 0, 0, 1, 0], -one)].into();
        assert_eq!(h.q[0].coeffs, q0);
        assert_eq!(h.q[1].coeffs, q1);
        assert_eq!(h.q[2].coeffs, q2);
    }

    #[test]
    fn hefer_fermat_coefficients() {
        let h = hefer_decompose(&fermat_cubic());
        for i in 0..3 {
            let mut want = BTreeMap::new();
            for s in 0..3u32 {
                let mut e = [0u32; 6];
                e[i] = s;
                e[3 + i] = 2 - s;
                want.insert(e, c(1., 0.));
            }
            assert_eq!(h.q[i].coeffs, want);
        }
    }

    #[test]
    fn hefer_pure_power_closed_form() {
        for d in 1..=5 {
            let h = hefer_decompose(&HomPoly3::from_real(&[([d, 0, 0], 1.0)]).unwrap());
            assert!(h.q[1].coeffs.is_empty() && h.q[2].coeffs.is_empty());
            assert_eq!(h.q[0].coeffs.len(), d as usize);
            for e in h.q[0].coeffs.keys() {
                assert_eq!(e[0] + e[3], d - 1);
            }
        }
    }

    #[test]
    fn along_line_matches_eval() {
        let p = fermat_cubic();
        let w = [c(1., 0.), c(0., 0.), c(-1., 0.)];
        let v = [c(0., 0.), c(1., 0.), c(0., 0.)];
        let co = p.along_line(&w, &v);
        assert!(co[0].norm() < 1e-15 && co[1].norm() < 1e-15 && co[2].norm() < 1e-15);
        assert_eq!(co[3], c(1., 0.));
    }
}
