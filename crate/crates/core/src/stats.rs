//! Goodness-of-fit helpers used to validate samplers.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson chi-square against given expected bin counts. Bins with expected
/// mass 0 must also be observed 0 (they contribute infinity otherwise).
/// Returns (statistic, p-value) with k - 1 degrees of freedom.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> (f64, f64) {
    assert_eq!(observed.len(), expected.len());
    let mut stat = 0.0;
    let mut dof = observed.len() as f64 - 1.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e <= 0.0 {
            if o > 0 {
                return (f64::INFINITY, 0.0);
            }
            dof -= 1.0;
            continue;
        }
        let diff = o as f64 - e;
        stat += diff * diff / e;
    }
    if dof < 1.0 {
        return (stat, 1.0);
    }
    let chi = ChiSquared::new(dof).expect("dof >= 1");
    (stat, 1.0 - chi.cdf(stat))
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert!(!a.is_empty() && !b.is_empty());
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = xs[i];
        let y = ys[j];
        let t = x.min(y);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let sqrt_ne = ne.sqrt();
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    let mut p = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        p += 2.0 * sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (d, p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chi_square_accepts_exact_fit_and_rejects_gross_misfit() {
        let observed = vec![100u64, 100, 100, 100];
        let expected = vec![100.0, 100.0, 100.0, 100.0];
        let (stat, p) = chi_square_gof(&observed, &expected);
        assert!(stat < 1e-12);
        assert!(p > 0.999);

        let skewed = vec![400u64, 0, 0, 0];
        let (_, p) = chi_square_gof(&skewed, &expected);
        assert!(p < 1e-6);
    }

    #[test]
    fn chi_square_zero_expected_bins() {
        let (_, p) = chi_square_gof(&[10, 0], &[10.0, 0.0]);
        assert!(p > 0.999);
        let (stat, p) = chi_square_gof(&[10, 1], &[10.0, 0.0]);
        assert!(stat.is_infinite() && p == 0.0);
    }

    #[test]
    fn ks_same_distribution_passes_different_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..4000).map(|_| rng.gen::<f64>()).collect();
        let b: Vec<f64> = (0..4000).map(|_| rng.gen::<f64>()).collect();
        let (_, p) = ks_two_sample(&a, &b);
        assert!(p > 0.001, "same-dist p = {p}");

        let c: Vec<f64> = (0..4000).map(|_| rng.gen::<f64>() + 0.2).collect();
        let (_, p) = ks_two_sample(&a, &c);
        assert!(p < 1e-6, "shifted-dist p = {p}");
    }
}
