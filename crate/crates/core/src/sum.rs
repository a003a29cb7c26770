//! Order-fixed pairwise summation; the reduction tree depends only on the
//! input length, so parallel producers that collect in order give bitwise
//! identical sums.

use num_complex::Complex64 as C64;

pub fn pairwise(xs: &[C64]) -> C64 {
    if xs.len() <= 16 {
        return xs.iter().fold(C64::new(0.0, 0.0), |a, b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise(&xs[..mid]) + pairwise(&xs[mid..])
}

pub fn pairwise_f64(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_f64(&xs[..mid]) + pairwise_f64(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_error_stays_small() {
        let xs = vec![0.1f64; 1 << 20];
        let exact = 0.1 * (1u64 << 20) as f64;
        let naive: f64 = xs.iter().sum();
        let pw = pairwise_f64(&xs);
        assert!((pw - exact).abs() < 1e-9 * exact);
        assert!((pw - exact).abs() < (naive - exact).abs());
    }
}
