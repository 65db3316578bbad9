//! Spectral evaluation of velocity autocorrelations and the mean square
//! displacement for a single-cell unitary `B`.
//!
//! With `B|j⟩ = e^{iφ_j}|j⟩` and `J_jk = ⟨j|J|k⟩`,
//!
//! ```text
//! C_n      = (1/N) Σ_{j,k} |J_jk|² e^{i(φ_j − φ_k) n}
//! msd(t)   = (t²/N) Σ_j |J_jj|² + Σ_{j≠k} (|J_jk|²/N) sin²(α_jk t/2) / sin²(α_jk/2)
//! ```
//!
//! where `α_jk = φ_j − φ_k` is wrapped to `(−π, π]`. Pairs with
//! `|α_jk| ≤ degeneracy_tol` contribute `t²` in place of the sine ratio.

use std::f64::consts::TAU;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::baker::{LocalUnitary, VelocityBlock};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, unitarity_residual, wrap_phase, CMatrix};
use crate::series::{dense_times, msd_from_autocorrelation, MsdSeries, SeriesSource};

/// Default threshold on `|α_jk|` below which two eigenphases count as equal.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-10;

/// Reconstruction and eigenvector-unitarity tolerance for [`decompose`].
pub const DECOMPOSITION_TOL: f64 = 1e-10;

/// Matrix elements `|J_jk|` at or below this count as zero.
pub const J_ELEMENT_TOL: f64 = 1e-8;

/// Ballistic coefficients below this are treated as vanishing.
pub const BALLISTIC_FLOOR: f64 = 1e-10;

/// Imaginary parts of `C_n` above this signal a broken decomposition.
pub const IMAGINARY_TOL: f64 = 1e-10;

const SCHUR_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone)]
pub struct SpectralData {
    eigenphases: Vec<f64>,
    eigenvectors: CMatrix,
    j_elements: CMatrix,
    /// `|J_jk|²`, row-major.
    j_abs2: Vec<f64>,
    degeneracy_tol: f64,
    reconstruction_residual: f64,
    eigenvector_residual: f64,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenphases.len()
    }

    /// Eigenphases in `[0, 2π)`.
    pub fn eigenphases(&self) -> &[f64] {
        &self.eigenphases
    }

    /// Eigenvectors as columns.
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// `⟨j|J|k⟩` in the eigenbasis.
    pub fn j_elements(&self) -> &CMatrix {
        &self.j_elements
    }

    pub fn j_abs2(&self, j: usize, k: usize) -> f64 {
        self.j_abs2[j * self.dim() + k]
    }

    pub fn degeneracy_tol(&self) -> f64 {
        self.degeneracy_tol
    }

    /// `‖B − V e^{iΦ} V†‖_max`.
    pub fn reconstruction_residual(&self) -> f64 {
        self.reconstruction_residual
    }

    /// `‖V†V − I‖_max`.
    pub fn eigenvector_residual(&self) -> f64 {
        self.eigenvector_residual
    }

    /// Wrapped phase difference `φ_j − φ_k ∈ (−π, π]`.
    pub fn alpha(&self, j: usize, k: usize) -> f64 {
        wrap_phase(self.eigenphases[j] - self.eigenphases[k])
    }

    /// `Σ_{j,k} |J_jk|²`, equal to `N` for any orthonormal eigenbasis.
    pub fn j_frobenius_sq(&self) -> f64 {
        self.j_abs2.iter().sum()
    }

    /// `max_j |J_jj|`.
    pub fn max_diagonal_j(&self) -> f64 {
        (0..self.dim())
            .map(|j| self.j_elements[(j, j)].norm())
            .fold(0.0, f64::max)
    }
}

/// Decomposes with the default degeneracy tolerance.
pub fn decompose(local: &LocalUnitary) -> Result<SpectralData> {
    decompose_with_tol(local, DEFAULT_DEGENERACY_TOL)
}

/// Schur-decomposes `B` (diagonal for a normal matrix), then rotates each
/// cluster of eigenphases closer than `degeneracy_tol` so that `J` restricted
/// to it is diagonal.
pub fn decompose_with_tol(local: &LocalUnitary, degeneracy_tol: f64) -> Result<SpectralData> {
    if degeneracy_tol.is_nan() || degeneracy_tol <= 0.0 {
        return Err(Error::invalid("degeneracy_tol", "must be positive"));
    }
    let b = local.matrix();
    let n = local.dim();
    let velocity = VelocityBlock::new(n)?;

    let schur = b
        .clone()
        .try_schur(f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::NumericalFailure {
            context: "Schur iteration did not converge".into(),
            residual: f64::NAN,
        })?;
    let (mut vectors, triangular) = schur.unpack();
    let eigenphases: Vec<f64> = (0..n)
        .map(|i| {
            let p = triangular[(i, i)].arg().rem_euclid(TAU);
            if p >= TAU {
                0.0
            } else {
                p
            }
        })
        .collect();

    for cluster in phase_clusters(&eigenphases, degeneracy_tol) {
        if cluster.len() < 2 {
            continue;
        }
        let sub = CMatrix::from_fn(n, cluster.len(), |r, c| vectors[(r, cluster[c])]);
        let restricted = sub.adjoint() * apply_velocity(&velocity, &sub);
        let rotation = SymmetricEigen::new(restricted).eigenvectors;
        let rotated = sub * rotation;
        for (c, &idx) in cluster.iter().enumerate() {
            vectors.set_column(idx, &rotated.column(c));
        }
    }

    let diag = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, eigenphases[i])
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let rebuilt = &vectors * diag * vectors.adjoint();
    let reconstruction_residual = max_abs(&(rebuilt - b));
    let eigenvector_residual = unitarity_residual(&vectors);
    let worst = reconstruction_residual.max(eigenvector_residual);
    if worst.is_nan() || worst > DECOMPOSITION_TOL {
        return Err(Error::NumericalFailure {
            context: format!("eigendecomposition of {}x{} {} unitary", n, n, local.kind()),
            residual: worst,
        });
    }

    let j_elements = vectors.adjoint() * apply_velocity(&velocity, &vectors);
    let j_abs2 = (0..n)
        .flat_map(|j| (0..n).map(move |k| (j, k)))
        .map(|(j, k)| j_elements[(j, k)].norm_sqr())
        .collect();

    Ok(SpectralData {
        eigenphases,
        eigenvectors: vectors,
        j_elements,
        j_abs2,
        degeneracy_tol,
        reconstruction_residual,
        eigenvector_residual,
    })
}

/// `J·V` for diagonal `J`.
fn apply_velocity(velocity: &VelocityBlock, v: &CMatrix) -> CMatrix {
    let mut out = v.clone();
    for r in 0..v.nrows() {
        if velocity.sign(r) < 0 {
            out.row_mut(r).neg_mut();
        }
    }
    out
}

/// Groups indices whose phases chain together within `tol` on the circle.
fn phase_clusters(phases: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..phases.len()).collect();
    order.sort_by(|&a, &b| phases[a].total_cmp(&phases[b]));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for idx in order {
        match clusters.last_mut() {
            Some(last) if phases[idx] - phases[*last.last().unwrap()] <= tol => last.push(idx),
            _ => clusters.push(vec![idx]),
        }
    }
    if clusters.len() > 1 {
        let first = phases[clusters[0][0]];
        let last = phases[*clusters.last().unwrap().last().unwrap()];
        if first + TAU - last <= tol {
            let tail = clusters.pop().unwrap();
            clusters[0].extend(tail);
        }
    }
    clusters
}

/// `C_n` as a complex number; the imaginary part vanishes up to roundoff.
pub fn autocorrelation_complex(spec: &SpectralData, n: u64) -> Complex64 {
    let dim = spec.dim();
    let rot: Vec<Complex64> = spec
        .eigenphases
        .iter()
        .map(|&p| Complex64::from_polar(1.0, (p * n as f64).rem_euclid(TAU)))
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..dim {
        let row = &spec.j_abs2[j * dim..(j + 1) * dim];
        let inner: Complex64 = row.iter().zip(&rot).map(|(w, e)| e.conj() * *w).sum();
        total += rot[j] * inner;
    }
    total / dim as f64
}

/// Real velocity autocorrelation `C_n`.
pub fn autocorrelation(spec: &SpectralData, n: u64) -> Result<f64> {
    let c = autocorrelation_complex(spec, n);
    if c.im.abs() > IMAGINARY_TOL {
        return Err(Error::NumericalFailure {
            context: format!("imaginary part of C_{n}"),
            residual: c.im.abs(),
        });
    }
    Ok(c.re)
}

/// Splits the pair sum into the `t²` coefficient and the oscillating terms
/// `(weight / sin²(α/2), α)` over unordered pairs `j < k`.
struct PairTerms {
    ballistic: f64,
    oscillating: Vec<(f64, f64)>,
}

impl PairTerms {
    fn new(spec: &SpectralData, tol: f64) -> Self {
        let n = spec.dim();
        let norm = n as f64;
        let mut ballistic: f64 = (0..n).map(|j| spec.j_abs2(j, j)).sum::<f64>() / norm;
        let mut oscillating = Vec::with_capacity(n * (n - 1) / 2);
        for j in 0..n {
            for k in (j + 1)..n {
                // (j,k) and (k,j) carry the same weight and opposite α
                let weight = (spec.j_abs2(j, k) + spec.j_abs2(k, j)) / norm;
                let alpha = spec.alpha(j, k);
                if alpha.abs() <= tol {
                    ballistic += weight;
                } else {
                    let s = (alpha / 2.0).sin();
                    oscillating.push((weight / (s * s), alpha));
                }
            }
        }
        Self {
            ballistic,
            oscillating,
        }
    }

    fn value(&self, t: u64) -> f64 {
        let tf = t as f64;
        let osc: f64 = self
            .oscillating
            .iter()
            .map(|&(w, alpha)| {
                let s = (alpha * tf / 2.0).sin();
                w * s * s
            })
            .sum();
        self.ballistic * tf * tf + osc
    }

    /// Time average of the oscillating part, `Σ weight / (2 sin²(α/2))`.
    fn mean_oscillation(&self) -> f64 {
        self.oscillating.iter().map(|&(w, _)| w / 2.0).sum()
    }
}

/// `sin²(αt/2) / sin²(α/2)` with the `t²` limit at `|α| ≤ tol`.
pub fn sine_ratio(alpha: f64, t: u64, tol: f64) -> f64 {
    let tf = t as f64;
    if alpha.abs() <= tol {
        return tf * tf;
    }
    let num = (alpha * tf / 2.0).sin();
    let den = (alpha / 2.0).sin();
    (num * num) / (den * den)
}

/// Exact m.s.d. for `t = 0…t_max`.
pub fn msd_exact(spec: &SpectralData, t_max: u64, degeneracy_tol: f64) -> Result<MsdSeries> {
    if t_max == 0 {
        return Err(Error::invalid("t_max", "must be at least 1"));
    }
    msd_exact_at(spec, &dense_times(t_max), degeneracy_tol)
}

/// Exact m.s.d. at arbitrary times. Each value sums the pairs in a fixed
/// order, so the result does not depend on the thread count.
pub fn msd_exact_at(spec: &SpectralData, times: &[u64], degeneracy_tol: f64) -> Result<MsdSeries> {
    if degeneracy_tol.is_nan() || degeneracy_tol <= 0.0 {
        return Err(Error::invalid("degeneracy_tol", "must be positive"));
    }
    let terms = PairTerms::new(spec, degeneracy_tol);
    let values: Vec<f64> = times.par_iter().map(|&t| terms.value(t)).collect();
    Ok(MsdSeries::new(SeriesSource::ExactSpectral, times.to_vec(), values)
        .with_param("N", spec.dim())
        .with_param("degeneracy_tol", format!("{degeneracy_tol:e}"))
        .with_param(
            "reconstruction_residual",
            format!("{:e}", spec.reconstruction_residual),
        ))
}

/// The same m.s.d. assembled from `C_0 … C_{t_max−1}`.
pub fn msd_via_autocorrelation(spec: &SpectralData, t_max: u64) -> Result<MsdSeries> {
    if t_max == 0 {
        return Err(Error::invalid("t_max", "must be at least 1"));
    }
    let c: Vec<f64> = (0..t_max)
        .into_par_iter()
        .map(|n| autocorrelation(spec, n))
        .collect::<Result<_>>()?;
    Ok(MsdSeries::new(
        SeriesSource::ExactSpectral,
        dense_times(t_max),
        msd_from_autocorrelation(&c),
    )
    .with_param("N", spec.dim()))
}

/// Full `t²` coefficient: diagonal elements plus degenerate off-diagonal pairs.
pub fn ballistic_coefficient(spec: &SpectralData) -> f64 {
    PairTerms::new(spec, spec.degeneracy_tol).ballistic
}

/// Long-time average of the m.s.d. when there is no ballistic part.
pub fn plateau_value(spec: &SpectralData) -> Result<f64> {
    let n = spec.dim();
    let tol2 = J_ELEMENT_TOL * J_ELEMENT_TOL;
    if let Some(j) = (0..n).find(|&j| spec.j_abs2(j, j) > tol2) {
        return Err(Error::UndefinedPlateau {
            reason: format!(
                "diagonal element |J_{j}{j}| = {:.3e} drives ballistic growth",
                spec.j_abs2(j, j).sqrt()
            ),
        });
    }
    for j in 0..n {
        for k in 0..n {
            if j != k && spec.alpha(j, k).abs() <= spec.degeneracy_tol && spec.j_abs2(j, k) > tol2 {
                return Err(Error::UndefinedPlateau {
                    reason: format!(
                        "degenerate pair ({j}, {k}) with |J_jk| = {:.3e}",
                        spec.j_abs2(j, k).sqrt()
                    ),
                });
            }
        }
    }
    Ok(PairTerms::new(spec, spec.degeneracy_tol).mean_oscillation())
}

/// Time at which the asymptotic `b·t²` overtakes the diffusive `t`, i.e. `1/b`.
pub fn crossover_time(spec: &SpectralData) -> Result<f64> {
    let b = ballistic_coefficient(spec);
    if b < BALLISTIC_FLOOR {
        return Err(Error::NoCrossover { coefficient: b });
    }
    Ok(1.0 / b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baker::{
        exchange_unitary, hadamard, identity_unitary, quantum_baker, QuantizationPhases,
        UnitaryKind,
    };
    use std::f64::consts::PI;

    #[test]
    fn identity_is_fully_degenerate() {
        let spec = decompose(&identity_unitary(4).unwrap()).unwrap();
        assert!(spec.eigenphases().iter().all(|&p| p == 0.0 || (p - TAU).abs() < 1e-12));
        for j in 0..4 {
            assert!((spec.j_elements()[(j, j)].norm() - 1.0).abs() < 1e-12);
        }
        let diag_sum: f64 = (0..4).map(|j| spec.j_abs2(j, j)).sum();
        assert!((diag_sum - 4.0).abs() < 1e-12);
        assert!((ballistic_coefficient(&spec) - 1.0).abs() < 1e-12);
        assert!((crossover_time(&spec).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            plateau_value(&spec),
            Err(Error::UndefinedPlateau { .. })
        ));
    }

    #[test]
    fn hadamard_phases() {
        let h = LocalUnitary::new(hadamard(), UnitaryKind::Custom).unwrap();
        let spec = decompose(&h).unwrap();
        let mut p = spec.eigenphases().to_vec();
        p.sort_by(f64::total_cmp);
        assert!(p[0].abs() < 1e-12);
        assert!((p[1] - PI).abs() < 1e-12);
    }

    #[test]
    fn exchange_values() {
        let spec = decompose(&exchange_unitary(2).unwrap()).unwrap();
        assert!((autocorrelation(&spec, 0).unwrap() - 1.0).abs() < 1e-14);
        assert!((autocorrelation(&spec, 1).unwrap() + 1.0).abs() < 1e-14);
        assert!((plateau_value(&spec).unwrap() - 0.5).abs() < 1e-14);
        assert!(ballistic_coefficient(&spec) < 1e-20);
        assert!(matches!(crossover_time(&spec), Err(Error::NoCrossover { .. })));
        let s = msd_exact(&spec, 9, DEFAULT_DEGENERACY_TOL).unwrap();
        for (t, v) in s.iter() {
            assert!((v - (t % 2) as f64).abs() < 1e-12, "t={t} v={v}");
        }
    }

    #[test]
    fn exchange_larger_dim_oscillates_too() {
        let spec = decompose(&exchange_unitary(6).unwrap()).unwrap();
        let s = msd_exact(&spec, 8, DEFAULT_DEGENERACY_TOL).unwrap();
        for (t, v) in s.iter() {
            assert!((v - (t % 2) as f64).abs() < 1e-10, "t={t} v={v}");
        }
    }

    #[test]
    fn identity_msd_is_ballistic() {
        let spec = decompose(&identity_unitary(6).unwrap()).unwrap();
        let s = msd_exact(&spec, 50, DEFAULT_DEGENERACY_TOL).unwrap();
        for (t, v) in s.iter() {
            assert!((v - (t * t) as f64).abs() < 1e-9 * (1 + t * t) as f64);
        }
    }

    #[test]
    fn clusters_wrap_around() {
        let phases = [0.0, 1.0, TAU - 1e-12, 1.0 + 5e-11, 3.0];
        let mut c = phase_clusters(&phases, 1e-10);
        for v in &mut c {
            v.sort();
        }
        c.sort();
        assert_eq!(c, vec![vec![0, 2], vec![1, 3], vec![4]]);
    }

    #[test]
    fn sine_ratio_limit() {
        let tol = 1e-10;
        for t in [1u64, 10, 100, 1000] {
            let near = sine_ratio(2.0 * tol, t, tol);
            let deg = sine_ratio(tol, t, tol);
            let tt = (t * t) as f64;
            assert_eq!(deg, tt);
            assert!((near - tt).abs() < 1e-4 * tt, "t={t}");
        }
        assert!((sine_ratio(PI, 3, 1e-10) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let spec = decompose(&exchange_unitary(2).unwrap()).unwrap();
        assert!(msd_exact(&spec, 4, 0.0).is_err());
        assert!(msd_exact(&spec, 0, 1e-10).is_err());
        assert!(decompose_with_tol(&exchange_unitary(2).unwrap(), -1.0).is_err());
    }

    #[test]
    fn baker_sum_rule() {
        let u = quantum_baker(32, QuantizationPhases::new(0.2, 0.6).unwrap()).unwrap();
        let spec = decompose(&u).unwrap();
        assert!((spec.j_frobenius_sq() - 32.0).abs() < 1e-8);
        assert!(spec.reconstruction_residual() < 1e-10);
    }
}
