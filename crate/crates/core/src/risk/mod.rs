//! Empirical forecast-error models and risk-limiting choice of ramping awards.

mod search;
pub mod synthetic;

pub use search::{greedy_dispatch, risk_dispatch, risk_dispatch_default, Grid, GreedyComparison, RiskDispatchResult};

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::surface::SurfaceError;

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("error distribution has no samples")]
    EmptyDistribution,
    #[error("no samples in output band {0}")]
    EmptyBand(Band),
    #[error("non-finite sample {0}")]
    NonFinite(f64),
    #[error("plant capacity must be positive, got {0}")]
    BadCapacity(f64),
    #[error("ramping parameters must be nonnegative, got ({0}, {1})")]
    NegativeParameter(f64, f64),
    #[error("confidence level must lie in [0, 1], got {0}")]
    BadConfidence(f64),
    #[error("grid step must be positive, got {0}")]
    BadStep(f64),
    #[error("no ramping pair reaches confidence {p}: {reason}")]
    NoFeasiblePair { p: f64, reason: String },
    #[error("cannot read samples: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot read samples: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// Sorted aggregate forecast errors `actual - predicted`, MW.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalErrorDistribution {
    samples: Vec<f64>,
    mean: f64,
    std_dev: f64,
}

impl EmpiricalErrorDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self, RiskError> {
        if samples.is_empty() {
            return Err(RiskError::EmptyDistribution);
        }
        if let Some(&bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(RiskError::NonFinite(bad));
        }
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
        Ok(EmpiricalErrorDistribution { samples, mean, std_dev: var.sqrt() })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population standard deviation.
    pub fn std_dev(&self) -> f64 {
        self.std_dev
    }

    /// `[min, max]` of the samples.
    pub fn support(&self) -> (f64, f64) {
        (self.samples[0], *self.samples.last().unwrap())
    }

    /// Support widened to contain zero.
    pub fn search_support(&self) -> (f64, f64) {
        let (a, b) = self.support();
        (a.min(0.0), b.max(0.0))
    }

    /// Fraction of samples `e` with `-f_d <= e <= f_u`.
    pub fn confidence(&self, f_u: f64, f_d: f64) -> Result<f64, RiskError> {
        if f_u < 0.0 || f_d < 0.0 || f_u.is_nan() || f_d.is_nan() {
            return Err(RiskError::NegativeParameter(f_u, f_d));
        }
        let below = self.samples.partition_point(|&e| e < -f_d);
        let upto = self.samples.partition_point(|&e| e <= f_u);
        Ok(upto.saturating_sub(below) as f64 / self.samples.len() as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DistributionExport::new(self, None)).expect("distribution serializes")
    }
}

/// Output band by forecast as a fraction of plant capacity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    /// (0.10, 0.30]
    Low,
    /// (0.30, 0.70]
    Mid,
    /// (0.70, 1.00]; forecasts above capacity land here too.
    High,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Low, Band::Mid, Band::High];

    pub fn range(self) -> (f64, f64) {
        match self {
            Band::Low => (0.10, 0.30),
            Band::Mid => (0.30, 0.70),
            Band::High => (0.70, 1.00),
        }
    }

    /// Band of a forecast at `fraction` of capacity; `None` at or below 10%.
    pub fn of_fraction(fraction: f64) -> Option<Band> {
        if fraction.is_nan() || fraction <= 0.10 {
            None
        } else if fraction <= 0.30 {
            Some(Band::Low)
        } else if fraction <= 0.70 {
            Some(Band::Mid)
        } else {
            Some(Band::High)
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (lo, hi) = self.range();
        write!(f, "{lo:.2}-{hi:.2}")
    }
}

impl std::str::FromStr for Band {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Band::Low),
            "mid" => Ok(Band::Mid),
            "high" => Ok(Band::High),
            other => Err(format!("unknown band {other:?}; expected low, mid or high")),
        }
    }
}

/// Forecast errors split into output bands.
#[derive(Clone, Debug, PartialEq)]
pub struct RegimeModel {
    pub capacity: f64,
    bands: [Vec<f64>; 3],
    /// Records dropped for a forecast at or below 10% of capacity.
    pub excluded: usize,
}

impl RegimeModel {
    /// Distribution of one band; empty bands fail here, not at ingest.
    pub fn band(&self, band: Band) -> Result<EmpiricalErrorDistribution, RiskError> {
        let samples = &self.bands[band.index()];
        if samples.is_empty() {
            return Err(RiskError::EmptyBand(band));
        }
        EmpiricalErrorDistribution::new(samples.clone())
    }

    pub fn count(&self, band: Band) -> usize {
        self.bands[band.index()].len()
    }

    pub fn to_json(&self) -> String {
        let bands: Vec<DistributionExport> = Band::ALL
            .iter()
            .filter_map(|&b| self.band(b).ok().map(|d| DistributionExport::new(&d, Some(b))))
            .collect();
        let export = RegimeExport { capacity: self.capacity, excluded: self.excluded, bands };
        serde_json::to_string_pretty(&export).expect("regime model serializes")
    }
}

#[derive(Serialize)]
struct DistributionExport {
    #[serde(skip_serializing_if = "Option::is_none")]
    band: Option<Band>,
    #[serde(skip_serializing_if = "Option::is_none")]
    range: Option<(f64, f64)>,
    count: usize,
    mean: f64,
    std_dev: f64,
    min: f64,
    max: f64,
    samples: Vec<f64>,
}

impl DistributionExport {
    fn new(d: &EmpiricalErrorDistribution, band: Option<Band>) -> Self {
        use crate::format::round9;
        let (min, max) = d.support();
        DistributionExport {
            band,
            range: band.map(Band::range),
            count: d.len(),
            mean: round9(d.mean()),
            std_dev: round9(d.std_dev()),
            min: round9(min),
            max: round9(max),
            samples: d.samples().iter().map(|&v| round9(v)).collect(),
        }
    }
}

#[derive(Serialize)]
struct RegimeExport {
    capacity: f64,
    excluded: usize,
    bands: Vec<DistributionExport>,
}

/// Splits `(predicted, actual)` records into bands by forecast output.
pub fn ingest_samples(records: &[(f64, f64)], capacity: f64) -> Result<RegimeModel, RiskError> {
    if !(capacity > 0.0) || !capacity.is_finite() {
        return Err(RiskError::BadCapacity(capacity));
    }
    let mut bands: [Vec<f64>; 3] = Default::default();
    let mut excluded = 0;
    for &(predicted, actual) in records {
        if !predicted.is_finite() {
            return Err(RiskError::NonFinite(predicted));
        }
        if !actual.is_finite() {
            return Err(RiskError::NonFinite(actual));
        }
        match Band::of_fraction(predicted / capacity) {
            Some(b) => bands[b.index()].push(actual - predicted),
            None => excluded += 1,
        }
    }
    Ok(RegimeModel { capacity, bands, excluded })
}

#[derive(Deserialize)]
struct Record {
    predicted_mw: f64,
    actual_mw: f64,
}

/// Reads CSV with header `predicted_mw,actual_mw`.
pub fn read_samples_csv(reader: impl Read) -> Result<Vec<(f64, f64)>, RiskError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize::<Record>().map(|r| r.map(|r| (r.predicted_mw, r.actual_mw)).map_err(Into::into)).collect()
}

pub fn load_samples_csv(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>, RiskError> {
    read_samples_csv(std::fs::File::open(path)?)
}

pub fn write_samples_csv(records: &[(f64, f64)]) -> String {
    use crate::format::fmt9;
    let mut out = String::from("predicted_mw,actual_mw\n");
    for &(p, a) in records {
        out.push_str(&format!("{},{}\n", fmt9(p), fmt9(a)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five() -> EmpiricalErrorDistribution {
        EmpiricalErrorDistribution::new(vec![10.0, -5.0, 0.0, -10.0, 5.0]).unwrap()
    }

    #[test]
    fn confidence_counts_closed_interval() {
        let d = five();
        assert_eq!(d.confidence(10.0, 10.0).unwrap(), 1.0);
        // Interval [0, 5] holds {0, 5}.
        assert_eq!(d.confidence(5.0, 0.0).unwrap(), 0.4);
        assert_eq!(d.confidence(5.0, 5.0).unwrap(), 0.6);
        let no_zero = EmpiricalErrorDistribution::new(vec![-1.0, 2.0]).unwrap();
        assert_eq!(no_zero.confidence(0.0, 0.0).unwrap(), 0.0);
        assert!(d.confidence(-1.0, 0.0).is_err());
    }

    #[test]
    fn moments_and_support() {
        let d = five();
        assert_eq!(d.samples(), &[-10.0, -5.0, 0.0, 5.0, 10.0]);
        assert_eq!(d.mean(), 0.0);
        assert!((d.std_dev() - 50.0_f64.sqrt()).abs() < 1e-12);
        let one_sided = EmpiricalErrorDistribution::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(one_sided.search_support(), (0.0, 4.0));
        assert!(matches!(EmpiricalErrorDistribution::new(vec![]), Err(RiskError::EmptyDistribution)));
    }

    #[test]
    fn perfect_forecasts_give_point_masses() {
        let recs: Vec<(f64, f64)> = [200.0, 1000.0, 2500.0, 4000.0].iter().map(|&p| (p, p)).collect();
        let m = ingest_samples(&recs, 4500.0).unwrap();
        for b in Band::ALL {
            let d = m.band(b).unwrap();
            assert_eq!(d.mean(), 0.0);
            assert_eq!(d.std_dev(), 0.0);
        }
    }

    #[test]
    fn low_output_records_are_trimmed() {
        let recs = vec![(1000.0, 1100.0), (225.0, 300.0)];
        let m = ingest_samples(&recs, 4500.0).unwrap();
        assert_eq!(m.excluded, 1);
        assert_eq!(m.count(Band::Low), 1);
        assert_eq!(m.count(Band::Mid), 0);
        assert!(matches!(m.band(Band::Mid), Err(RiskError::EmptyBand(Band::Mid))));
    }

    #[test]
    fn band_edges() {
        assert_eq!(Band::of_fraction(0.10), None);
        assert_eq!(Band::of_fraction(0.30), Some(Band::Low));
        assert_eq!(Band::of_fraction(0.70), Some(Band::Mid));
        assert_eq!(Band::of_fraction(1.2), Some(Band::High));
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![(1000.0, 1100.5), (3000.0, 2900.25)];
        let text = write_samples_csv(&recs);
        assert_eq!(read_samples_csv(text.as_bytes()).unwrap(), recs);
        assert!(read_samples_csv("predicted_mw,actual\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn json_export_has_moments() {
        let m = ingest_samples(&[(1000.0, 1100.0), (1200.0, 1100.0)], 4500.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["bands"][0]["band"], "low");
        assert_eq!(v["bands"][0]["count"], 2);
        assert_eq!(v["bands"][0]["mean"], 0.0);
    }
}
