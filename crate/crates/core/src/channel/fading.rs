use rand::Rng;

use crate::linalg::CVec;
use crate::rng::complex_normal;

/// First-order Gauss-Markov step: `alpha * prev + sqrt(1 - alpha^2) * e`
/// with `e ~ CN(0, I)`. Keeps CN(0, I) stationary.
pub fn evolve_nlos<R: Rng + ?Sized>(prev: &CVec, alpha: f64, rng: &mut R) -> CVec {
    debug_assert!((0.0..=1.0).contains(&alpha));
    if alpha == 1.0 {
        return prev.clone();
    }
    let innov = (1.0 - alpha * alpha).sqrt();
    CVec::from_iterator(prev.len(), prev.iter().map(|&h| h * alpha + complex_normal(rng) * innov))
}

pub fn fresh_nlos<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CVec {
    CVec::from_fn(m, |_, _| complex_normal(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    #[test]
    fn alpha_one_freezes() {
        let mut rng = stream(3, Domain::Test, 0, 0);
        let h = fresh_nlos(4, &mut rng);
        let next = evolve_nlos(&h, 1.0, &mut rng);
        assert_eq!(h, next);
    }

    #[test]
    fn alpha_zero_forgets() {
        let mut a = stream(3, Domain::Test, 0, 1);
        let mut b = stream(3, Domain::Test, 0, 1);
        let h = CVec::from_element(4, num_complex::Complex64::new(100.0, -50.0));
        let next = evolve_nlos(&h, 0.0, &mut a);
        let fresh = fresh_nlos(4, &mut b);
        assert_eq!(next, fresh);
    }

    #[test]
    fn lag_one_correlation_and_variance() {
        let alpha = 0.64;
        let n = 100_000;
        let mut rng = stream(11, Domain::Test, 0, 2);
        let mut h = fresh_nlos(1, &mut rng);
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            xs.push(h[0]);
            h = evolve_nlos(&h, alpha, &mut rng);
        }
        let var = xs.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        let lag: f64 = xs.windows(2).map(|w| (w[1] * w[0].conj()).re).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
        assert!((lag / var - alpha).abs() < 0.03, "correlation {}", lag / var);
    }
}
