use lmg_metrology::analytic::{blocks_n4, hamiltonian_n2, hamiltonian_n3, optimal_thermometry_value, optimal_y, qfi_beta_n2, qfi_gamma_n2};
use lmg_metrology::estimation::{qfi_temperature, qfi_thermal};
use lmg_metrology::spin_model::{
    build_hamiltonian, symmetry_conjugation, total_spin_basis_n4, CMatrix, Coupling, ModelParams, Symmetry, C64,
};
use lmg_metrology::thermo_limit::{gap, quadratic_form};
use lmg_metrology::Error;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::ValidateArgs;
use crate::table::Table;
use crate::{CliError, Output};

pub const REPORT_COLUMNS: [&str; 5] = ["check", "status", "residual", "tolerance", "points"];

/// Relative shift applied to numerical QFIs by `--inject-perturbation`.
pub const PERTURBATION: f64 = 1e-2;

/// Outcome of one oracle check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub points: usize,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Values from the library under test, scaled when a perturbation is injected.
struct Numerics {
    scale: f64,
}

impl Numerics {
    fn g_gamma(&self, p: &ModelParams, beta: f64) -> Result<f64, Error> {
        Ok(self.scale * qfi_thermal(p, Coupling::Anisotropy, beta)?.total)
    }

    fn g_beta(&self, p: &ModelParams, beta: f64) -> Result<f64, Error> {
        Ok(self.scale * qfi_temperature(p, beta)?.total)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Maximum of the residuals, with NaN propagated so the check fails.
fn worst(acc: f64, x: f64) -> f64 {
    if x.is_nan() || acc.is_nan() {
        f64::NAN
    } else {
        acc.max(x)
    }
}

fn hamiltonian(n: usize, g: f64, h: f64) -> Result<CMatrix, Error> {
    Ok(build_hamiltonian(&ModelParams::new(n, g, h)?)?.into_matrix())
}

fn real_hamiltonian(n: usize, g: f64, h: f64) -> Result<DMatrix<f64>, Error> {
    Ok(hamiltonian(n, g, h)?.map(|z| z.re))
}

/// `e^{−βH/2}/√Z` from a fresh eigendecomposition.
fn thermal_sqrt(h: &CMatrix, beta: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let e0 = eig.eigenvalues.min();
    let w: DVector<f64> = eig.eigenvalues.map(|e| (-beta * (e - e0)).exp());
    let z = w.sum();
    let d = CMatrix::from_diagonal(&w.map(|x| C64::new((x / z).sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

fn closed_forms(rng: &mut ChaCha8Rng, draws: usize, num: &Numerics) -> Result<Check, Error> {
    let mut r: f64 = 0.0;
    for _ in 0..draws {
        let (g, h) = (rng.gen_range(0.05..0.95), rng.gen_range(0.05..1.5));
        let b = 10f64.powf(rng.gen_range(-1.0..2.2));
        let p = ModelParams::new(2, g, h)?;
        r = worst(r, rel(num.g_gamma(&p, b)?, qfi_gamma_n2(g, h, b)?));
        r = worst(r, rel(num.g_beta(&p, b)?, qfi_beta_n2(g, h, b)?));
    }
    Ok(Check {
        name: "closed_form_agreement",
        residual: r,
        tolerance: 1e-7,
        points: draws,
    })
}

fn energy_variance(rng: &mut ChaCha8Rng, draws: usize, num: &Numerics) -> Result<Check, Error> {
    let mut r: f64 = 0.0;
    for _ in 0..draws {
        let n = rng.gen_range(2..=5);
        let (g, h) = (rng.gen_range(-1.0..=1.0), rng.gen_range(0.0..2.0));
        let b = 10f64.powf(rng.gen_range(-2.0..2.0));
        let hm = hamiltonian(n, g, h)?;
        let s = thermal_sqrt(&hm, b);
        let rho = &s * &s;
        let e1 = (&rho * &hm).trace().re;
        let e2 = (&rho * &hm * &hm).trace().re;
        let var = e2 - e1 * e1;
        let gb = num.g_beta(&ModelParams::new(n, g, h)?, b)?;
        r = worst(r, (gb - var).abs() / var.abs().max(1.0));
    }
    Ok(Check {
        name: "energy_variance_identity",
        residual: r,
        tolerance: 1e-10,
        points: draws,
    })
}

fn fidelity(rng: &mut ChaCha8Rng, draws: usize, num: &Numerics) -> Result<Check, Error> {
    let delta = 1e-4;
    let mut r: f64 = 0.0;
    for _ in 0..draws {
        let n = rng.gen_range(2..=4);
        let (g, h, b) = (rng.gen_range(0.05..0.95), rng.gen_range(0.05..1.5), rng.gen_range(0.5..5.0));
        let a = thermal_sqrt(&hamiltonian(n, g, h)?, b);
        let c = thermal_sqrt(&hamiltonian(n, g + delta, h)?, b);
        let root_fidelity: f64 = (&a * &c).singular_values().sum();
        let oracle = 8.0 * (1.0 - root_fidelity) / (delta * delta);
        r = worst(r, rel(num.g_gamma(&ModelParams::new(n, g, h)?, b)?, oracle));
    }
    Ok(Check {
        name: "fidelity_oracle",
        residual: r,
        tolerance: 1e-3,
        points: draws,
    })
}

fn symmetry(rng: &mut ChaCha8Rng, draws: usize, which: Symmetry) -> Result<Check, Error> {
    let mut r: f64 = 0.0;
    for _ in 0..draws {
        let n = rng.gen_range(2..=5);
        let p = ModelParams::new(n, rng.gen_range(0.2..3.0), rng.gen_range(0.0..2.0))?;
        let residual = match symmetry_conjugation(&p, which) {
            Ok(c) => c.residual,
            Err(Error::Inconsistent { residual, .. }) => residual,
            Err(e) => return Err(e),
        };
        r = worst(r, residual);
    }
    let (name, tolerance) = match which {
        Symmetry::SpinFlip => ("symmetry_spin_flip", 1e-12),
        Symmetry::GammaInversion => ("symmetry_gamma_inversion", 1e-10),
    };
    Ok(Check {
        name,
        residual: r,
        tolerance,
        points: draws,
    })
}

fn golden_matrices(rng: &mut ChaCha8Rng, draws: usize) -> Result<Check, Error> {
    let gauge = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0, -1.0]));
    let w = total_spin_basis_n4();
    let mut r: f64 = 0.0;
    for _ in 0..draws {
        let (g, h) = (rng.gen_range(-1.0..=1.0), rng.gen_range(0.0..2.0));
        r = worst(r, (&gauge * hamiltonian_n2(g, h) * &gauge - real_hamiltonian(2, g, h)?).amax());
        r = worst(r, (hamiltonian_n3(g, h) - real_hamiltonian(3, g, h)?).amax());
        let rotated = w.transpose() * real_hamiltonian(4, g, h)? * &w;
        let (a, b, c) = blocks_n4(g, h);
        let mut expected = DMatrix::zeros(16, 16);
        let mut at = 0;
        for block in [&a, &b, &b, &c] {
            let k = block.nrows();
            expected.view_mut((at, at), (k, k)).copy_from(block);
            at += k;
        }
        r = worst(r, (rotated - expected).amax());
    }
    Ok(Check {
        name: "golden_matrices",
        residual: r,
        tolerance: 1e-12,
        points: draws,
    })
}

fn thermometry_constants() -> Vec<Check> {
    let y = optimal_y();
    vec![
        Check {
            name: "y_opt_root",
            residual: ((y - 2.0) * y.exp() - (y + 2.0)).abs(),
            tolerance: 1e-12,
            points: 1,
        },
        Check {
            name: "y_opt_value",
            residual: (y - 2.3994).abs(),
            tolerance: 5e-5,
            points: 1,
        },
        Check {
            name: "thermometry_constant",
            residual: (optimal_thermometry_value() - 0.43923).abs(),
            tolerance: 5e-6,
            points: 1,
        },
    ]
}

fn gap_match(rng: &mut ChaCha8Rng, draws: usize) -> Check {
    let mut r: f64 = 0.0;
    for _ in 0..draws {
        let g = rng.gen_range(-1.0..0.95);
        let h = if rng.gen_bool(0.5) {
            rng.gen_range(0.0..0.95)
        } else {
            rng.gen_range(1.05..3.0)
        };
        r = worst(r, (quadratic_form(g, h).mode_gap() - gap(g, h)).abs());
    }
    Check {
        name: "gap_match",
        residual: r,
        tolerance: 1e-10,
        points: draws,
    }
}

/// Runs every check with draws from a ChaCha8 stream seeded by `seed`.
pub fn run_checks(seed: u64, draws: usize, perturb: bool) -> Result<Vec<Check>, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num = Numerics {
        scale: if perturb { 1.0 + PERTURBATION } else { 1.0 },
    };
    let mut checks = vec![
        closed_forms(&mut rng, draws, &num)?,
        energy_variance(&mut rng, draws, &num)?,
        fidelity(&mut rng, draws, &num)?,
        symmetry(&mut rng, draws, Symmetry::SpinFlip)?,
        symmetry(&mut rng, draws, Symmetry::GammaInversion)?,
        golden_matrices(&mut rng, draws)?,
    ];
    checks.extend(thermometry_constants());
    checks.push(gap_match(&mut rng, draws));
    Ok(checks)
}

pub fn validate(args: &ValidateArgs) -> Result<Output, CliError> {
    if args.draws == 0 {
        return Err(CliError::Input("draws must be at least 1".into()));
    }
    let checks = run_checks(args.seed, args.draws, args.inject_perturbation).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut table = Table::new(&REPORT_COLUMNS);
    for c in &checks {
        table.push(vec![
            c.name.into(),
            if c.passed() { "pass" } else { "fail" }.into(),
            c.residual.into(),
            c.tolerance.into(),
            c.points.into(),
        ]);
    }
    Ok(Output {
        table,
        failures: 0,
        validation_failures: checks.iter().filter(|c| !c.passed()).count(),
    })
}
