//! Trigonometric interpolation of uniformly sampled periodic data.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use std::f64::consts::TAU;

/// `f(t) = Σ_k c_k e^{i k ω t}`, `ω = 2π/period`, `k ∈ (−N/2, N/2]`; the
/// Nyquist mode is split symmetrically.
#[derive(Debug, Clone)]
pub struct Periodic {
    pub period: f64,
    /// Coefficients in FFT order.
    pub coeffs: Vec<C64>,
}

impl Periodic {
    pub fn from_samples(samples: &[C64], period: f64) -> Self {
        let n = samples.len();
        let mut buf = samples.to_vec();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        for c in &mut buf {
            *c /= n as f64;
        }
        Self { period, coeffs: buf }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn wavenumber(&self, idx: usize) -> i64 {
        let n = self.coeffs.len() as i64;
        let k = idx as i64;
        if k <= n / 2 {
            k
        } else {
            k - n
        }
    }

    pub fn mean(&self) -> C64 {
        self.coeffs[0]
    }

    pub fn eval(&self, t: f64) -> C64 {
        self.eval_with(t, |_, c| c)
    }

    pub fn derivative(&self, t: f64) -> C64 {
        let w = TAU / self.period;
        self.eval_with(t, |k, c| c * C64::new(0.0, k as f64 * w))
    }

    fn eval_with(&self, t: f64, f: impl Fn(i64, C64) -> C64) -> C64 {
        let n = self.coeffs.len();
        let e = C64::from_polar(1.0, TAU * t / self.period);
        let einv = e.conj();
        let mut acc = f(0, self.coeffs[0]);
        let mut pos = C64::new(1.0, 0.0);
        let mut neg = C64::new(1.0, 0.0);
        for k in 1..=(n / 2) {
            pos *= e;
            neg *= einv;
            let kp = k;
            let kn = n - k;
            if n.is_multiple_of(2) && k == n / 2 {
                // Nyquist: real-symmetric split
                let c = self.coeffs[kp];
                acc += f(k as i64, c) * 0.5 * pos + f(-(k as i64), c) * 0.5 * neg;
            } else {
                acc += f(k as i64, self.coeffs[kp]) * pos;
                acc += f(-(k as i64), self.coeffs[kn]) * neg;
            }
        }
        acc
    }

    /// Antiderivative of the zero-mean part, normalized to vanish at `t = 0`.
    /// The discarded mean is returned separately by [`Periodic::mean`].
    pub fn antiderivative(&self) -> Periodic {
        let w = TAU / self.period;
        let n = self.coeffs.len();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (idx, c) in self.coeffs.iter().enumerate().skip(1) {
            let k = self.wavenumber(idx);
            let kk = if n.is_multiple_of(2) && idx == n / 2 { 0 } else { k };
            if kk != 0 {
                out[idx] = c / C64::new(0.0, kk as f64 * w);
            }
        }
        let at0: C64 = out.iter().sum();
        out[0] = -at0;
        Periodic {
            period: self.period,
            coeffs: out,
        }
    }

    /// Magnitude of the highest eighth of the spectrum relative to the
    /// largest coefficient; small for resolved periodic data.
    pub fn tail_ratio(&self) -> f64 {
        let n = self.coeffs.len();
        let peak = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let band = (n / 16).max(1);
        let tail = (0..n)
            .filter(|&i| self.wavenumber(i).unsigned_abs() as usize > n / 2 - band)
            .map(|i| self.coeffs[i].norm())
            .fold(0.0, f64::max);
        tail / peak
    }
}
