//! Simultaneous root finding (Aberth–Ehrlich) with a Newton polish.

use num_complex::Complex64 as C64;

#[derive(Debug, Clone)]
pub struct Roots {
    pub roots: Vec<C64>,
    /// Nominal degree minus actual degree (roots lost to infinity).
    pub dropped: usize,
}

fn horner(c: &[C64], x: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for a in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

/// Roots of `Σ c_k x^k`. Leading coefficients below `1e-13·max|c|` count as a
/// degree drop.
pub fn poly_roots(coeffs: &[C64]) -> Roots {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut n = coeffs.len().saturating_sub(1);
    while n > 0 && coeffs[n].norm() <= 1e-13 * scale {
        n -= 1;
    }
    let dropped = coeffs.len().saturating_sub(1) - n;
    if n == 0 {
        return Roots { roots: vec![], dropped };
    }
    let c = &coeffs[..=n];
    let lead = c[n];
    let monic: Vec<C64> = c.iter().map(|a| a / lead).collect();
    if n == 1 {
        return Roots {
            roots: vec![-monic[0]],
            dropped,
        };
    }
    // start on a circle of radius ~ geometric mean of root moduli
    let r0 = {
        let a0 = monic[0].norm();
        if a0 > 0.0 {
            a0.powf(1.0 / n as f64)
        } else {
            monic
                .iter()
                .take(n)
                .map(|a| a.norm())
                .fold(0.0, f64::max)
                .max(1e-3)
                .powf(1.0 / n as f64)
        }
    };
    let mut z: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(r0, 0.4 + std::f64::consts::TAU * k as f64 / n as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = horner(&monic, z[i]);
            if p == C64::new(0.0, 0.0) {
                continue;
            }
            let ratio = p / dp;
            let s: C64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = ratio / (1.0 - ratio * s);
            if step.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-16 {
            break;
        }
    }
    for zi in z.iter_mut() {
        let (p, dp) = horner(&monic, *zi);
        if dp.norm() > 0.0 {
            let cand = *zi - p / dp;
            if horner(&monic, cand).0.norm() <= p.norm() {
                *zi = cand;
            }
        }
    }
    Roots { roots: z, dropped }
}

/// Minimum pairwise distance; `inf` for fewer than two roots.
pub fn min_separation(z: &[C64]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            m = m.min((z[i] - z[j]).norm());
        }
    }
    m
}

/// Newton refinement of a single root of `Σ c_k x^k` from `x`.
pub fn newton_polish(coeffs: &[C64], mut x: C64, iters: usize) -> C64 {
    for _ in 0..iters {
        let (p, dp) = horner(coeffs, x);
        if p == C64::new(0.0, 0.0) || dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        x -= step;
        if step.norm() <= 1e-16 * (1.0 + x.norm()) {
            break;
        }
    }
    x
}

pub fn eval(coeffs: &[C64], x: C64) -> C64 {
    horner(coeffs, x).0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn cube_roots_of_minus_one() {
        let r = poly_roots(&[C64::new(1.0, 0.0), C64::default(), C64::default(), C64::new(1.0, 0.0)]);
        assert_eq!(r.dropped, 0);
        for z in &r.roots {
            assert!((z.powu(3) + 1.0).norm() < 1e-14);
        }
        assert!(min_separation(&r.roots) > 1.7);
    }

    #[test]
    fn matches_known_roots() {
        // (x-1)(x-2i)(x+0.5)(x-3)
        let want = [C64::new(1., 0.), C64::new(0., 2.), C64::new(-0.5, 0.), C64::new(3., 0.)];
        let mut c = vec![C64::new(1.0, 0.0)];
        for r in want {
            let mut q = vec![C64::default(); c.len() + 1];
            for (k, a) in c.iter().enumerate() {
                q[k] -= a * r;
                q[k + 1] += a;
            }
            c = q;
        }
        let got = sorted(poly_roots(&c).roots);
        for (g, w) in got.iter().zip(sorted(want.to_vec())) {
            assert!((g - w).norm() < 1e-13);
        }
    }

    #[test]
    fn degree_drop_reported() {
        let r = poly_roots(&[C64::new(-1.0, 0.0), C64::new(1.0, 0.0), C64::default()]);
        assert_eq!(r.dropped, 1);
        assert_eq!(r.roots.len(), 1);
    }
}
