use lmg_metrology::analytic::{
    critical_lines, optimal_thermometry_value, optimal_y, qfi_beta_n2, qfi_beta_n2_asymptotic, qfi_gamma_n2, qfi_gamma_n2_asymptotic,
    qfi_gamma_n2_critical, spectrum_n3, thermometry_function, two_level_qfi, two_level_thermometry, two_outcome_fisher, TwoLevelModel,
};
use lmg_metrology::estimation::{qfi_temperature, qfi_thermal};
use lmg_metrology::spin_model::{build_hamiltonian, Coupling, ModelParams};
use lmg_metrology::thermal_spectra::{eigendecompose, spectral_gap};
use proptest::prelude::*;

fn params(n: usize, g: f64, h: f64) -> ModelParams {
    ModelParams::new(n, g, h).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_forms_match_spectral_kernel(g in 0.05f64..0.95, h in 0.05f64..1.5, beta in 0.1f64..150.0) {
        let p = params(2, g, h);
        let gg = qfi_thermal(&p, Coupling::Anisotropy, beta).unwrap().total;
        let gb = qfi_temperature(&p, beta).unwrap().total;
        prop_assert!((gg - qfi_gamma_n2(g, h, beta).unwrap()).abs() <= 1e-7 * gg.max(1e-30));
        prop_assert!((gb - qfi_beta_n2(g, h, beta).unwrap()).abs() <= 1e-7 * gb.max(1e-30));
    }

    #[test]
    fn n3_families_reproduce_degeneracies(g in -0.9f64..0.9, h in 0.05f64..1.5) {
        let analytic = spectrum_n3(g, h).unwrap();
        let mut mu: Vec<f64> = analytic.eigenvalues.iter().copied().collect();
        prop_assert!((mu[0] - mu[1]).abs() < 1e-10);
        prop_assert!((mu[2] - mu[3]).abs() < 1e-10);
        mu.sort_by(f64::total_cmp);
        let numeric = eigendecompose(&build_hamiltonian(&params(3, g, h)).unwrap()).unwrap();
        for (a, b) in numeric.eigenvalues().iter().zip(&mu) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn thermometry_function_is_even(y in -40.0f64..40.0) {
        prop_assert!((thermometry_function(y) - thermometry_function(-y)).abs() < 1e-12);
        prop_assert!(thermometry_function(y) <= optimal_thermometry_value() + 1e-15);
    }

    #[test]
    fn two_outcome_fisher_is_nonnegative(p in 0.01f64..0.99, q in 0.01f64..0.99, dp in -5.0f64..5.0, dq in -5.0f64..5.0) {
        prop_assert!(two_outcome_fisher(p, q, dp, dq).unwrap() >= 0.0);
    }
}

#[test]
fn critical_lines_are_crossings() {
    for n in 2..=4 {
        for g in [0.1, 0.4, 0.9] {
            for h in critical_lines(n, g).unwrap() {
                let gap = spectral_gap(&eigendecompose(&build_hamiltonian(&params(n, g, h)).unwrap()).unwrap()).unwrap();
                assert!(gap < 1e-12, "N={n} γ={g} h={h}: gap {gap}");
            }
        }
    }
}

#[test]
fn critical_value_matches_full_form() {
    for g in [0.2, 0.5, 0.8] {
        let h = f64::sqrt(g) / 2.0;
        for beta in [1.0, 10.0, 100.0] {
            let a = qfi_gamma_n2_critical(g, beta);
            let b = qfi_thermal(&params(2, g, h), Coupling::Anisotropy, beta).unwrap().total;
            assert!((a - b).abs() <= 1e-9 * b, "γ={g} β={beta}: {a} vs {b}");
        }
    }
}

#[test]
fn asymptotic_branches_meet_on_the_line() {
    for g in [0.2, 0.5, 0.8] {
        let hc = f64::sqrt(g) / 2.0;
        let (lo, hi) = (hc * (1.0 - 1e-12), hc * (1.0 + 1e-12));
        for beta in [10.0, 100.0] {
            let (a, b) = (qfi_gamma_n2_asymptotic(g, lo, beta), qfi_gamma_n2_asymptotic(g, hi, beta));
            assert!((a - b).abs() <= 1e-8 * a);
            let (a, b) = (qfi_beta_n2_asymptotic(g, lo, beta), qfi_beta_n2_asymptotic(g, hi, beta));
            // Both vanish as (v - r)² on the line.
            assert!((a - b).abs() < 1e-15);
        }
    }
}

#[test]
fn two_level_forms_track_exact_qfis_when_cold() {
    let model = TwoLevelModel::two_site();
    let (g, h, beta) = (0.5, 0.25, 100.0);
    let exact = qfi_thermal(&params(2, g, h), Coupling::Anisotropy, beta).unwrap().total;
    assert!((two_level_qfi(&model, g, h, beta) - exact).abs() < 0.02 * exact);
    let exact_t = qfi_temperature(&params(2, g, h), beta).unwrap().total;
    assert!((two_level_thermometry(model.gap(g, h), beta) - exact_t).abs() < 0.02 * exact_t);
    assert!((qfi_beta_n2_asymptotic(g, h, beta) - exact_t).abs() < 0.02 * exact_t);
}

#[test]
fn optimal_y_is_the_thermometry_maximum() {
    let y = optimal_y();
    let f = optimal_thermometry_value();
    assert!((thermometry_function(y) - f).abs() < 1e-14);
    assert!(thermometry_function(y - 1e-3) < f && thermometry_function(y + 1e-3) < f);
}
