use lmg_metrology::estimation::{
    density_derivative, fisher_information, lyapunov_residual, magnetization_fisher, magnetization_measurement, qfi_from_generator,
    qfi_temperature, qfi_thermal, sld, Parameter, ProjectiveMeasurement,
};
use lmg_metrology::spin_model::{
    build_hamiltonian, collective_spin, hamiltonian_derivative, Axis, Coupling, HermitianOperator, ModelParams,
};
use lmg_metrology::thermal_spectra::{eigendecompose, gibbs_ensemble};
use proptest::prelude::*;

fn params(n: usize, g: f64, h: f64) -> ModelParams {
    ModelParams::new(n, g, h).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn qfi_ignores_energy_shift(n in 2usize..=5, g in 0.0f64..1.0, h in 0.0f64..1.5, beta in 0.1f64..100.0, c in -20.0f64..20.0) {
        let p = params(n, g, h);
        let spec = eigendecompose(&build_hamiltonian(&p).unwrap()).unwrap();
        let gen = hamiltonian_derivative(&p, Coupling::Anisotropy).unwrap();
        let a = qfi_from_generator(&gibbs_ensemble(&spec, beta).unwrap(), &gen).unwrap();
        let b = qfi_from_generator(&gibbs_ensemble(&spec.shifted(c), beta).unwrap(), &gen).unwrap();
        prop_assert!((a.total - b.total).abs() <= 1e-10 * a.total.max(1.0));
    }

    #[test]
    fn qfi_split_is_nonnegative(n in 2usize..=5, g in 0.0f64..1.0, h in 0.0f64..1.5, beta in 0.0f64..200.0) {
        for which in [Coupling::Anisotropy, Coupling::Field] {
            let q = qfi_thermal(&params(n, g, h), which, beta).unwrap();
            prop_assert!(q.classical_term >= 0.0 && q.quantum_term >= 0.0);
            prop_assert!((q.classical_term + q.quantum_term - q.total).abs() <= 1e-15 * q.total.max(1.0));
        }
    }

    #[test]
    fn qfi_is_even_in_field(n in 2usize..=5, g in 0.0f64..1.0, h in 0.0f64..1.5, beta in 0.1f64..50.0) {
        let a = qfi_thermal(&params(n, g, h), Coupling::Anisotropy, beta).unwrap().total;
        let b = qfi_thermal(&params(n, g, -h), Coupling::Anisotropy, beta).unwrap().total;
        prop_assert!((a - b).abs() <= 1e-8 * a.max(1e-12));
    }

    #[test]
    fn generator_scaling_is_quadratic(n in 2usize..=4, g in 0.0f64..1.0, h in 0.0f64..1.5, beta in 0.1f64..20.0, s in 0.1f64..10.0) {
        let p = params(n, g, h);
        let gibbs = gibbs_ensemble(&eigendecompose(&build_hamiltonian(&p).unwrap()).unwrap(), beta).unwrap();
        let gen = hamiltonian_derivative(&p, Coupling::Anisotropy).unwrap();
        let scaled = HermitianOperator::from_matrix(gen.matrix() * nalgebra::Complex::new(s, 0.0)).unwrap();
        let a = qfi_from_generator(&gibbs, &gen).unwrap().total;
        let b = qfi_from_generator(&gibbs, &scaled).unwrap().total;
        prop_assert!((b - s * s * a).abs() <= 1e-10 * b.max(1e-12));
    }

    #[test]
    fn sld_solves_lyapunov(n in 2usize..=4, g in 0.0f64..1.0, h in 0.0f64..1.5, beta in 0.1f64..20.0) {
        let p = params(n, g, h);
        let rho = gibbs_ensemble(&eigendecompose(&build_hamiltonian(&p).unwrap()).unwrap(), beta).unwrap().density_matrix();
        for which in [Parameter::Anisotropy, Parameter::Field, Parameter::Temperature] {
            let l = sld(&p, which, beta).unwrap();
            let d = density_derivative(&p, which, beta).unwrap();
            prop_assert!(lyapunov_residual(&l, &rho, &d) < 1e-10);
        }
    }

    #[test]
    fn sld_variance_is_the_qfi(n in 2usize..=4, g in 0.0f64..1.0, h in 0.0f64..1.5, beta in 0.1f64..20.0) {
        let p = params(n, g, h);
        let rho = gibbs_ensemble(&eigendecompose(&build_hamiltonian(&p).unwrap()).unwrap(), beta).unwrap().density_matrix();
        let l = sld(&p, Parameter::Anisotropy, beta).unwrap();
        let tr = (rho.matrix() * l.matrix() * l.matrix()).trace().re;
        let q = qfi_thermal(&p, Coupling::Anisotropy, beta).unwrap().total;
        prop_assert!((tr - q).abs() <= 1e-9 * q.max(1e-6));
    }

    #[test]
    fn measurement_fisher_is_bounded_by_qfi(n in 2usize..=4, g in 0.0f64..1.0, h in 0.0f64..1.5, beta in 0.2f64..30.0) {
        let p = params(n, g, h);
        let f = magnetization_fisher(&p, Parameter::Anisotropy, beta).unwrap();
        let q = qfi_thermal(&p, Coupling::Anisotropy, beta).unwrap().total;
        prop_assert!(f <= q * (1.0 + 1e-6) + 1e-12);
        let ft = magnetization_fisher(&p, Parameter::Temperature, beta).unwrap();
        let qt = qfi_temperature(&p, beta).unwrap().total;
        prop_assert!(ft <= qt * (1.0 + 1e-9) + 1e-15);
    }
}

#[test]
fn energy_measurement_saturates_temperature_qfi() {
    let p = params(3, 0.4, 0.6);
    let h = build_hamiltonian(&p).unwrap();
    let m = ProjectiveMeasurement::spectral(&h).unwrap();
    for beta in [0.5, 2.0, 10.0] {
        let f = fisher_information(&p, &m, Parameter::Temperature, beta).unwrap();
        let q = qfi_temperature(&p, beta).unwrap().total;
        assert!((f - q).abs() <= 1e-10 * q, "β={beta}: {f} vs {q}");
    }
}

#[test]
fn spectral_magnetization_matches_popcount_sets() {
    let sz = collective_spin(3, Axis::Z).unwrap();
    let spectral = ProjectiveMeasurement::spectral(&sz).unwrap();
    let direct = magnetization_measurement(3).unwrap();
    assert_eq!(spectral.len(), direct.len());
    let p = params(3, 0.3, 0.2);
    for beta in [1.0, 5.0] {
        let a = fisher_information(&p, &spectral, Parameter::Anisotropy, beta).unwrap();
        let b = fisher_information(&p, &direct, Parameter::Anisotropy, beta).unwrap();
        assert!((a - b).abs() <= 1e-8 * a.max(1e-12));
    }
}

#[test]
fn n2_critical_line_divergence_coefficient() {
    for g in [0.2, 0.5, 0.8] {
        let h = f64::sqrt(g) / 2.0;
        let q = qfi_thermal(&params(2, g, h), Coupling::Anisotropy, 200.0).unwrap().total;
        let coeff = 1.0 / (4.0 * (1.0 + g) * (1.0 + g));
        let limit = q / (200.0 * 200.0);
        assert!((limit - coeff).abs() < 0.01 * coeff, "γ={g}: {limit} vs {coeff}");
    }
}

#[test]
fn cold_states_are_quantum_dominated() {
    for (n, g, h) in [(2, 0.5, 0.8), (3, 0.3, 0.9), (4, 0.6, 1.2)] {
        let q = qfi_thermal(&params(n, g, h), Coupling::Anisotropy, 1e4).unwrap();
        assert!(q.classical_term / q.total < 1e-3);
    }
}
