//! Random-matrix predictions for the m.s.d.: closed forms built on the
//! circular-ensemble averages of `|J_jk|²` and of the CUE phase factor, and
//! Monte-Carlo averages over sampled CUE/COE matrices.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baker::{LocalUnitary, UnitaryKind};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::series::{dense_times, MsdSeries, SeriesSource};
use crate::spectral::{decompose_with_tol, msd_exact_at};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Ensemble {
    Cue,
    Coe,
}

impl Ensemble {
    /// 1 for CUE, 2 for COE.
    pub fn k(self) -> u32 {
        match self {
            Ensemble::Cue => 1,
            Ensemble::Coe => 2,
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ensemble::Cue => "CUE",
            Ensemble::Coe => "COE",
        })
    }
}

impl FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CUE" => Ok(Ensemble::Cue),
            "COE" => Ok(Ensemble::Coe),
            _ => Err(Error::invalid("ensemble", format!("unknown ensemble {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: Ensemble,
    pub dim: usize,
    pub seed: u64,
    pub samples: usize,
}

impl EnsembleSpec {
    pub fn new(kind: Ensemble, dim: usize) -> Self {
        Self {
            kind,
            dim,
            seed: 0,
            samples: 0,
        }
    }

    pub fn with_sampling(mut self, seed: u64, samples: usize) -> Self {
        self.seed = seed;
        self.samples = samples;
        self
    }

    pub fn k(&self) -> u32 {
        self.kind.k()
    }
}

/// `⟨|J_jj|²⟩ = k/(N+k)`.
pub fn mean_jj(spec: &EnsembleSpec) -> f64 {
    let k = f64::from(spec.k());
    k / (spec.dim as f64 + k)
}

/// `⟨|J_{j≠k}|²⟩ = N/((N+k)(N−1))`.
pub fn mean_offdiag(spec: &EnsembleSpec) -> Result<f64> {
    if spec.dim < 2 {
        return Err(Error::invalid("dim", format!("{} < 2", spec.dim)));
    }
    let n = spec.dim as f64;
    let k = f64::from(spec.k());
    Ok(n / ((n + k) * (n - 1.0)))
}

/// CUE average of `e^{i(φ_j−φ_k)n}` over distinct levels.
pub fn cue_phase_average(n: u64, dim: usize) -> f64 {
    let big = dim as f64;
    match n {
        0 => 1.0,
        _ if (n as usize) < dim => (n as f64 - big) / (big * (big - 1.0)),
        _ => 0.0,
    }
}

/// Piecewise closed form of the ensemble-averaged m.s.d. at time `t`.
pub fn closed_form_value(kind: Ensemble, dim: usize, t: u64) -> f64 {
    let n = dim as f64;
    let k = f64::from(kind.k());
    let tf = t as f64;
    if t as usize <= dim {
        tf + tf * (tf - 1.0) / (n + k) * (k - 1.0 + (tf - 2.0) / (3.0 * (n - 1.0)))
    } else {
        k / (n + k) * tf * tf + n / 3.0 - n * (k - 1.0) / (3.0 * (n + k))
    }
}

/// Closed form for `t = 0…t_max`. For COE this is the `k = 2` approximation
/// without the extra pair-correlation term.
pub fn msd_closed_form(spec: &EnsembleSpec, t_max: u64) -> Result<MsdSeries> {
    msd_closed_form_at(spec, &dense_times(t_max))
}

pub fn msd_closed_form_at(spec: &EnsembleSpec, times: &[u64]) -> Result<MsdSeries> {
    if spec.dim < 2 {
        return Err(Error::invalid("dim", format!("{} < 2", spec.dim)));
    }
    let values = times
        .iter()
        .map(|&t| closed_form_value(spec.kind, spec.dim, t))
        .collect();
    Ok(MsdSeries::new(SeriesSource::RmtClosedForm, times.to_vec(), values)
        .with_param("N", spec.dim)
        .with_param("ensemble", spec.kind)
        .with_param("k", spec.k()))
}

/// Draws sample `index` of the ensemble. The generator is ChaCha20 seeded with
/// `spec.seed` on stream `index`, so every sample is a pure function of
/// `(seed, index)`.
pub fn sample_unitary(spec: &EnsembleSpec, index: u64) -> Result<LocalUnitary> {
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);
    let haar = haar_unitary(spec.dim, &mut rng);
    match spec.kind {
        Ensemble::Cue => LocalUnitary::new(haar, UnitaryKind::CueSample),
        Ensemble::Coe => LocalUnitary::new(haar.transpose() * haar, UnitaryKind::CoeSample),
    }
}

/// Haar unitary from the QR factorization of a complex Ginibre matrix, with
/// the phases of `diag(R)` moved into `Q`.
fn haar_unitary<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let ginibre: CMatrix = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * scale, im * scale)
    });
    let qr = ginibre.qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..dim {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for row in 0..dim {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// Ensemble mean of the exact m.s.d. with per-time standard errors.
pub fn msd_monte_carlo(spec: &EnsembleSpec, t_max: u64, degeneracy_tol: f64) -> Result<MsdSeries> {
    msd_monte_carlo_at(spec, &dense_times(t_max), degeneracy_tol)
}

pub fn msd_monte_carlo_at(
    spec: &EnsembleSpec,
    times: &[u64],
    degeneracy_tol: f64,
) -> Result<MsdSeries> {
    if spec.samples < 2 {
        return Err(Error::invalid(
            "samples",
            format!("{} < 2 (standard errors need two samples)", spec.samples),
        ));
    }
    if spec.dim < 2 || !spec.dim.is_multiple_of(2) {
        return Err(Error::invalid("dim", format!("{} is not even and ≥ 2", spec.dim)));
    }

    let per_sample: Vec<Vec<f64>> = (0..spec.samples as u64)
        .into_par_iter()
        .map(|i| {
            let local = sample_unitary(spec, i)?;
            let sd = decompose_with_tol(&local, degeneracy_tol)?;
            Ok(msd_exact_at(&sd, times, degeneracy_tol)?.values)
        })
        .collect::<Result<_>>()?;

    // Welford accumulation in sample-index order.
    let mut mean = vec![0.0; times.len()];
    let mut m2 = vec![0.0; times.len()];
    for (count, values) in per_sample.iter().enumerate() {
        let c = (count + 1) as f64;
        for ((m, s), &x) in mean.iter_mut().zip(m2.iter_mut()).zip(values) {
            let delta = x - *m;
            *m += delta / c;
            *s += delta * (x - *m);
        }
    }
    let n = spec.samples as f64;
    let stderr = m2.iter().map(|s| (s / (n - 1.0) / n).sqrt()).collect();

    let mut series = MsdSeries::new(SeriesSource::RmtMonteCarlo, times.to_vec(), mean)
        .with_param("N", spec.dim)
        .with_param("ensemble", spec.kind)
        .with_param("seed", spec.seed)
        .with_param("samples", spec.samples)
        .with_param("degeneracy_tol", format!("{degeneracy_tol:e}"));
    series.stderr = Some(stderr);
    Ok(series)
}
