//! Mean-square-displacement time series and the helpers that assemble them.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Which computation produced a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesSource {
    ExactSpectral,
    ChainOracle,
    RmtClosedForm,
    RmtMonteCarlo,
    Classical,
}

impl fmt::Display for SeriesSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeriesSource::ExactSpectral => "exact-spectral",
            SeriesSource::ChainOracle => "chain-oracle",
            SeriesSource::RmtClosedForm => "rmt-closed-form",
            SeriesSource::RmtMonteCarlo => "rmt-monte-carlo",
            SeriesSource::Classical => "classical",
        })
    }
}

/// `⟨(Δr)²(t)⟩` sampled at `times`, with optional per-point standard errors
/// and the parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsdSeries {
    pub times: Vec<u64>,
    pub values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<f64>>,
    pub source: SeriesSource,
    pub params: BTreeMap<String, String>,
}

impl MsdSeries {
    pub fn new(source: SeriesSource, times: Vec<u64>, values: Vec<f64>) -> Self {
        assert_eq!(times.len(), values.len(), "times/values length mismatch");
        Self {
            times,
            values,
            stderr: None,
            source,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Value at time `t`, if `t` is on the time axis.
    pub fn at(&self, t: u64) -> Option<f64> {
        self.times
            .binary_search(&t)
            .ok()
            .map(|i| self.values[i])
    }

    pub fn stderr_at(&self, t: u64) -> Option<f64> {
        let i = self.times.binary_search(&t).ok()?;
        self.stderr.as_ref().map(|s| s[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Least-squares fit of `b·t² + c` over the points with `lo < t ≤ hi`,
    /// the shape of the long-time branch of the closed-form prediction.
    /// Returns `(b, c)`, or `None` with fewer than two distinct times.
    pub fn fit_ballistic(&self, lo: u64, hi: u64) -> Option<(f64, f64)> {
        let pts: Vec<(f64, f64)> = self
            .iter()
            .filter(|&(t, _)| t > lo && t <= hi)
            .map(|(t, v)| ((t as f64).powi(2), v))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let b = sxy / sxx;
        Some((b, my - b * mx))
    }
}

/// `0, 1, …, t_max`.
pub fn dense_times(t_max: u64) -> Vec<u64> {
    (0..=t_max).collect()
}

/// Every integer up to `DENSE_LIMIT`, then roughly `PER_DECADE` points per
/// decade on a logarithmic grid, always ending at `t_max`.
pub fn thinned_times(t_max: u64) -> Vec<u64> {
    const DENSE_LIMIT: u64 = 1000;
    const PER_DECADE: f64 = 200.0;
    if t_max <= DENSE_LIMIT {
        return dense_times(t_max);
    }
    let mut times = dense_times(DENSE_LIMIT);
    let ratio = 10f64.powf(1.0 / PER_DECADE);
    let mut x = DENSE_LIMIT as f64;
    loop {
        x *= ratio;
        let t = x.round() as u64;
        if t >= t_max {
            break;
        }
        if t > *times.last().unwrap() {
            times.push(t);
        }
    }
    times.push(t_max);
    times
}

/// Assembles `t·C_0 + 2 Σ_{n=1}^{t−1} (t−n) C_n` for `t = 0…autocorr.len()`.
///
/// Uses the recurrence `msd(t) = msd(t−1) + C_0 + 2 Σ_{n=1}^{t−1} C_n`.
pub fn msd_from_autocorrelation(autocorr: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(autocorr.len() + 1);
    out.push(0.0);
    let Some(&c0) = autocorr.first() else {
        return out;
    };
    let mut msd = 0.0;
    let mut tail = 0.0;
    for t in 1..=autocorr.len() {
        if t >= 2 {
            tail += autocorr[t - 1];
        }
        msd += c0 + 2.0 * tail;
        out.push(msd);
    }
    out
}
