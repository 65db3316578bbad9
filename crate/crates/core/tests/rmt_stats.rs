use multibaker_core::rmt::closed_form_value;
use rayon::prelude::*;
use multibaker_core::{
    decompose, msd_closed_form, msd_monte_carlo, sample_unitary, Ensemble, EnsembleSpec,
    DEFAULT_DEGENERACY_TOL,
};

#[test]
fn cue_diagonal_elements_average() {
    let dim = 64;
    let spec = EnsembleSpec::new(Ensemble::Cue, dim).with_sampling(31, 2000);
    let xs: Vec<f64> = (0..spec.samples as u64)
        .into_par_iter()
        .map(|i| {
            let sd = decompose(&sample_unitary(&spec, i).unwrap()).unwrap();
            assert!((sd.j_frobenius_sq() - dim as f64).abs() < 1e-8);
            (0..dim).map(|j| sd.j_abs2(j, j)).sum::<f64>() / dim as f64
        })
        .collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let want = 1.0 / 65.0;
    assert!((mean - want).abs() < 3.0 * se, "mean {mean} want {want} se {se}");
}

#[test]
fn haar_entry_modulus_has_mean_one_over_n() {
    let dim = 16;
    let spec = EnsembleSpec::new(Ensemble::Cue, dim).with_sampling(99, 3000);
    let xs: Vec<f64> = (0..spec.samples as u64)
        .map(|i| sample_unitary(&spec, i).unwrap().matrix()[(3, 3)].norm_sqr())
        .collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let se = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    assert!((mean - 1.0 / dim as f64).abs() < 3.0 * se);
}

#[test]
fn closed_form_is_continuous_at_heisenberg_time() {
    for dim in [50, 64, 100, 200, 1000] {
        for kind in [Ensemble::Cue, Ensemble::Coe] {
            let n = dim as f64;
            let k = f64::from(kind.k());
            let at = closed_form_value(kind, dim, dim as u64);
            let other = k / (n + k) * n * n + n / 3.0 - n * (k - 1.0) / (3.0 * (n + k));
            let gap = (at - other).abs();
            assert!(gap <= n / 1e4, "N={dim} {kind}: gap {gap}");
            assert!(gap <= 1e-6 * at);
        }
    }
}

#[test]
fn cubic_term_stays_near_linear_term() {
    for dim in [50usize, 200, 1000] {
        for k in [1.0, 2.0] {
            let (n, t) = (dim as f64, dim as f64);
            let cubic = t * (t - 1.0) * (t - 2.0) / (3.0 * (n + k) * (n - 1.0));
            assert!(cubic <= t);
        }
    }
}

#[test]
fn closed_form_crosses_from_diffusive_to_ballistic() {
    let s = msd_closed_form(&EnsembleSpec::new(Ensemble::Cue, 200), 1000).unwrap();
    assert!(s.values.windows(2).all(|w| w[1] > w[0]));
    assert!((s.at(5).unwrap() / 5.0 - 1.0).abs() < 0.01);
    let late = s.at(1000).unwrap();
    assert!((late / (1e6 / 201.0) - 1.0).abs() < 0.1);
    assert!(msd_closed_form(&EnsembleSpec::new(Ensemble::Cue, 1), 4).is_err());
}

#[test]
fn cue_monte_carlo_matches_closed_form() {
    let spec = EnsembleSpec::new(Ensemble::Cue, 64).with_sampling(5, 200);
    let mc = msd_monte_carlo(&spec, 32, DEFAULT_DEGENERACY_TOL).unwrap();
    let cf = closed_form_value(Ensemble::Cue, 64, 32);
    let (m, se) = (mc.at(32).unwrap(), mc.stderr_at(32).unwrap());
    assert!((m - cf).abs() < 3.0 * se, "mc {m} ± {se}, closed {cf}");
    assert!(mc.stderr.as_ref().unwrap()[1] < 1e-12);
    assert!((mc.at(1).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn coe_monte_carlo_sits_slightly_above_k2() {
    let spec = EnsembleSpec::new(Ensemble::Coe, 64).with_sampling(6, 200);
    let mc = msd_monte_carlo(&spec, 64, DEFAULT_DEGENERACY_TOL).unwrap();
    let cf = closed_form_value(Ensemble::Coe, 64, 64);
    let (m, se) = (mc.at(64).unwrap(), mc.stderr_at(64).unwrap());
    assert!(m >= cf - 3.0 * se, "mc {m} ± {se} below closed {cf}");
    assert!(m <= 1.05 * cf, "mc {m} more than 5% above {cf}");
}

#[test]
fn monte_carlo_is_reproducible() {
    let spec = EnsembleSpec::new(Ensemble::Coe, 8).with_sampling(77, 16);
    let a = msd_monte_carlo(&spec, 20, DEFAULT_DEGENERACY_TOL).unwrap();
    let b = msd_monte_carlo(&spec, 20, DEFAULT_DEGENERACY_TOL).unwrap();
    assert_eq!(a, b);
}
