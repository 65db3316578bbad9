//! The full-ring propagator against single-cell formulas.
//!
//! The ring trace agrees with `(1/N) Tr[B†ⁿ J Bⁿ J]` for lags 0 and 1 and on
//! two-cell rings; in general it equals the quasi-momentum average of the
//! single-cell trace with `B` replaced by `B e^{iθJ}`.

use multibaker_core::baker::{hadamard, UnitaryKind};
use multibaker_core::linalg::unitarity_residual;
use multibaker_core::spectral::msd_via_autocorrelation;
use multibaker_core::{
    autocorrelation, build_chain, chain_autocorrelation, chain_msd, decompose, exchange_unitary,
    identity_unitary, msd_exact, quantum_baker, sample_unitary, velocity_block, CMatrix,
    Ensemble, EnsembleSpec, LocalUnitary, QuantizationPhases, DEFAULT_DEGENERACY_TOL,
};
use num_complex::Complex64;
use proptest::prelude::*;

/// `(1/N) Tr[B†ⁿ J Bⁿ J]` by explicit matrix powers.
fn single_cell_trace(local: &LocalUnitary, n: usize) -> f64 {
    let b = local.matrix();
    let dim = local.dim();
    let j = velocity_block(dim).unwrap().to_matrix();
    let mut p = CMatrix::identity(dim, dim);
    for _ in 0..n {
        p = b * p;
    }
    let tr = (p.adjoint() * &j * &p * &j).trace();
    assert!(tr.im.abs() < 1e-10);
    tr.re / dim as f64
}

/// `(1/L) Σ_θ (1/N) Tr[M(θ)†ⁿ J M(θ)ⁿ J]` with `M(θ) = U e^{iθJ}` and
/// `θ = 2πm/L`: the ring trace evaluated quasi-momentum by quasi-momentum.
fn bloch_averaged_trace(local: &LocalUnitary, cells: usize, n: usize) -> f64 {
    let dim = local.dim();
    let block = velocity_block(dim).unwrap();
    let j = block.to_matrix();
    let mut total = 0.0;
    for m in 0..cells {
        let theta = std::f64::consts::TAU * m as f64 / cells as f64;
        let kick = CMatrix::from_fn(dim, dim, |r, c| {
            if r == c {
                Complex64::from_polar(1.0, theta * f64::from(block.sign(r)))
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let step = local.matrix() * kick;
        let mut p = CMatrix::identity(dim, dim);
        for _ in 0..n {
            p = &step * p;
        }
        total += (p.adjoint() * &j * &p * &j).trace().re / dim as f64;
    }
    total / cells as f64
}

fn random_local(dim: usize, seed: u64) -> LocalUnitary {
    sample_unitary(&EnsembleSpec::new(Ensemble::Cue, dim).with_sampling(seed, 1), 0).unwrap()
}

#[test]
fn chain_is_unitary_and_block_sparse() {
    for dim in [2, 4, 8] {
        let local = random_local(dim, dim as u64);
        for cells in 2..=16 {
            let chain = build_chain(&local, cells).unwrap();
            let m = chain.dense().unwrap();
            assert!(unitarity_residual(m) < 1e-12, "N={dim} L={cells}");
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    let (dst, src) = (r / dim, c / dim);
                    let adjacent = dst == (src + 1) % cells || dst == (src + cells - 1) % cells;
                    if !adjacent {
                        assert_eq!(m[(r, c)], Complex64::new(0.0, 0.0));
                    }
                }
                // columns have unit norm
                let col: f64 = m.column(r).iter().map(Complex64::norm_sqr).sum();
                assert!((col - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn reduction_holds_for_random_unitaries() {
    for dim in [2, 4, 8] {
        for cells in [2, 3, 4, 5, 8] {
            let local = random_local(dim, 100 + (dim * cells) as u64);
            let chain = build_chain(&local, cells).unwrap();
            let ring = chain.autocorrelations(2 * cells + 1).unwrap();
            for (n, c) in ring.iter().enumerate() {
                let bloch = bloch_averaged_trace(&local, cells, n);
                assert!((c - bloch).abs() < 1e-10, "N={dim} L={cells} n={n}");
                if n <= 1 || cells == 2 {
                    let cell = single_cell_trace(&local, n);
                    assert!((c - cell).abs() < 1e-10, "N={dim} L={cells} n={n}");
                }
            }
        }
    }
}

#[test]
fn ring_suppresses_interference_between_paths() {
    // Hadamard: the single-cell trace has C_2 = 1, the ring has C_2 = 0.
    let h = LocalUnitary::new(hadamard(), UnitaryKind::Custom).unwrap();
    let chain = build_chain(&h, 8).unwrap();
    assert!(chain_autocorrelation(&chain, 2).unwrap().abs() < 1e-12);
    assert!((single_cell_trace(&h, 2) - 1.0).abs() < 1e-12);
}

#[test]
fn hadamard_chain_spreads_like_the_hadamard_walk() {
    // ⟨x²⟩/t² → 1 − 1/√2 for the Hadamard walk.
    let h = LocalUnitary::new(hadamard(), UnitaryKind::Custom).unwrap();
    let s = chain_msd(&build_chain(&h, 128).unwrap(), 60).unwrap();
    let ratio = s.at(60).unwrap() / 3600.0;
    assert!((ratio - (1.0 - 0.5f64.sqrt())).abs() < 2e-3, "{ratio}");
}

#[test]
fn hadamard_lag_one_matches_spectral() {
    let h = LocalUnitary::new(hadamard(), UnitaryKind::Custom).unwrap();
    let chain = build_chain(&h, 8).unwrap();
    let spec = decompose(&h).unwrap();
    let ring = chain_autocorrelation(&chain, 1).unwrap();
    let cell = autocorrelation(&spec, 1).unwrap();
    assert!((ring - cell).abs() < 1e-10);
    assert!((ring - single_cell_trace(&h, 1)).abs() < 1e-12);
}

#[test]
fn baker_eight_lags() {
    let b = quantum_baker(8, QuantizationPhases::BALAZS_VOROS).unwrap();
    let chain = build_chain(&b, 6).unwrap();
    let spec = decompose(&b).unwrap();
    for n in 0..=1 {
        let ring = chain_autocorrelation(&chain, n).unwrap();
        assert!((ring - autocorrelation(&spec, n as u64).unwrap()).abs() < 1e-10);
    }
    let ring = chain_autocorrelation(&chain, 3).unwrap();
    assert!((ring - bloch_averaged_trace(&b, 6, 3)).abs() < 1e-10);
    let two_ring = chain_autocorrelation(&build_chain(&b, 2).unwrap(), 3).unwrap();
    assert!((two_ring - autocorrelation(&spec, 3).unwrap()).abs() < 1e-10);
}

#[test]
fn exchange_lag_one() {
    let x = exchange_unitary(2).unwrap();
    let chain = build_chain(&x, 4).unwrap();
    assert!((chain_autocorrelation(&chain, 1).unwrap() + 1.0).abs() < 1e-14);
    assert!((single_cell_trace(&x, 1) + 1.0).abs() < 1e-14);
}

#[test]
fn msd_first_step_and_extremes() {
    for cells in [2, 3, 7] {
        let id = chain_msd(&build_chain(&identity_unitary(4).unwrap(), cells).unwrap(), 4 * cells).unwrap();
        for (t, v) in id.iter() {
            assert!((v - (t * t) as f64).abs() < 1e-9);
        }
    }
    let ex = chain_msd(&build_chain(&exchange_unitary(2).unwrap(), 4).unwrap(), 16).unwrap();
    assert!(ex.at(4).unwrap().abs() < 1e-12);
    assert!((ex.at(5).unwrap() - 1.0).abs() < 1e-12);
    let local = random_local(4, 5);
    let s = chain_msd(&build_chain(&local, 5).unwrap(), 3).unwrap();
    assert!((s.at(1).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(s.at(0), Some(0.0));
}

#[test]
fn exact_msd_matches_chain_msd_where_reduction_holds() {
    for dim in [2, 4, 8] {
        for local in [
            quantum_baker(dim, QuantizationPhases::BALAZS_VOROS).unwrap(),
            random_local(dim, 7 * dim as u64),
        ] {
            let spec = decompose(&local).unwrap();
            let exact = msd_exact(&spec, 8, DEFAULT_DEGENERACY_TOL).unwrap();
            let eq1 = msd_via_autocorrelation(&spec, 8).unwrap();
            let two = chain_msd(&build_chain(&local, 2).unwrap(), 8).unwrap();
            for t in 0..=8 {
                let r = two.at(t).unwrap();
                assert!((r - exact.at(t).unwrap()).abs() < 1e-8, "N={dim} t={t}");
                assert!((r - eq1.at(t).unwrap()).abs() < 1e-8);
            }
            for cells in [4, 8] {
                let ring = chain_msd(&build_chain(&local, cells).unwrap(), 16).unwrap();
                for t in 0..=2 {
                    assert!((ring.at(t).unwrap() - exact.at(t).unwrap()).abs() < 1e-8);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chain_msd_respects_bounds(half in 1usize..=4, cells in 2usize..=8, seed in any::<u64>()) {
        let local = random_local(2 * half, seed);
        let s = chain_msd(&build_chain(&local, cells).unwrap(), 4 * cells).unwrap();
        for (t, v) in s.iter() {
            let tt = (t * t) as f64;
            prop_assert!(v >= -1e-10 && v <= tt + 1e-10, "t={} v={}", t, v);
        }
    }

    #[test]
    fn chain_matches_bloch_reduction(half in 1usize..=4, cells in 2usize..=6, seed in any::<u64>()) {
        let local = random_local(2 * half, seed);
        let chain = build_chain(&local, cells).unwrap();
        let spec = decompose(&local).unwrap();
        for n in 0..=2 * cells {
            let ring = chain_autocorrelation(&chain, n).unwrap();
            prop_assert!((ring - bloch_averaged_trace(&local, cells, n)).abs() < 1e-10);
            if n <= 1 || cells == 2 {
                prop_assert!((ring - autocorrelation(&spec, n as u64).unwrap()).abs() < 1e-10);
            }
        }
    }
}
