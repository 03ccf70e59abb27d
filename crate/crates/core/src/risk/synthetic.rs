//! Seeded synthetic forecast errors with prescribed moments.
//!
//! Skewed errors are drawn from a standardized Gamma (reflected for negative
//! skew), then shifted and scaled so the sample mean and population standard
//! deviation hit their targets exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::Band;

/// Target moments of one band's errors, MW.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandMoments {
    pub band: Band,
    pub mean: f64,
    pub std_dev: f64,
    pub skew: f64,
}

impl BandMoments {
    pub fn scaled(self, factor: f64) -> BandMoments {
        BandMoments { mean: self.mean * factor, std_dev: self.std_dev * factor, ..self }
    }
}

/// Capacity of the wind fleet behind [`BPA_BANDS`], MW.
pub const BPA_CAPACITY: f64 = 4500.0;

/// Band moments of a large regional wind fleet's hour-ahead errors. The
/// skews are illustrative.
pub const BPA_BANDS: [BandMoments; 3] = [
    BandMoments { band: Band::Low, mean: 7.8, std_dev: 223.0, skew: 0.8 },
    BandMoments { band: Band::Mid, mean: -70.7, std_dev: 300.0, skew: -0.6 },
    BandMoments { band: Band::High, mean: -77.7, std_dev: 175.0, skew: -1.2 },
];

/// `n` errors with exact sample mean and standard deviation.
pub fn skewed_errors(m: BandMoments, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = if m.skew == 0.0 {
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    } else {
        let shape = 4.0 / (m.skew * m.skew);
        let gamma = Gamma::new(shape, 1.0).expect("shape is positive");
        let sign = m.skew.signum();
        (0..n).map(|_| sign * gamma.sample(&mut rng)).collect()
    };
    standardize(&mut x);
    x.iter().map(|z| m.mean + m.std_dev * z).collect()
}

fn standardize(x: &mut [f64]) {
    let n = x.len() as f64;
    if n == 0.0 {
        return;
    }
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    for v in x.iter_mut() {
        *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
    }
}

/// `(predicted, actual)` records, `n` per band, with forecasts spread over
/// the interior of each band.
pub fn synthetic_records(capacity: f64, bands: &[BandMoments], n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n * bands.len());
    for (i, m) in bands.iter().enumerate() {
        let (lo, hi) = m.band.range();
        let errors = skewed_errors(*m, n, seed.wrapping_add(1 + i as u64));
        for e in errors {
            let u: f64 = rng.random();
            let predicted = capacity * (lo + (hi - lo) * (0.01 + 0.98 * u));
            out.push((predicted, predicted + e));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(x: &[f64]) -> (f64, f64, f64) {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
        (mean, m2.sqrt(), m3 / m2.powf(1.5))
    }

    #[test]
    fn hits_mean_and_spread() {
        for m in BPA_BANDS {
            let (mean, sd, skew) = moments(&skewed_errors(m, 50_000, 7));
            assert!((mean - m.mean).abs() < 1e-9 * m.std_dev);
            assert!((sd - m.std_dev).abs() < 1e-9 * m.std_dev);
            assert!((skew - m.skew).abs() < 0.1, "{skew} vs {}", m.skew);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let m = BPA_BANDS[1];
        assert_eq!(skewed_errors(m, 100, 3), skewed_errors(m, 100, 3));
        assert_ne!(skewed_errors(m, 100, 3), skewed_errors(m, 100, 4));
    }

    #[test]
    fn records_land_in_their_band() {
        let recs = synthetic_records(BPA_CAPACITY, &BPA_BANDS, 200, 1);
        for (i, &(p, _)) in recs.iter().enumerate() {
            assert_eq!(Band::of_fraction(p / BPA_CAPACITY), Some(BPA_BANDS[i / 200].band));
        }
    }
}
