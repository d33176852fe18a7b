//! Eigendecomposition and Gibbs ensembles.

use nalgebra::{DVector, SymmetricEigen};

use crate::error::{domain, Error, Result};
use crate::spin_model::{max_modulus, CMatrix, HermitianOperator, C64};

/// Largest inverse temperature accepted by [`gibbs_ensemble`].
pub const MAX_BETA: f64 = 1e6;

/// Ascending eigenvalues and the matching orthonormal eigenvectors (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: DVector<f64>,
    eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `V Λ V†`.
    pub fn reconstruct(&self) -> CMatrix {
        let lambda = CMatrix::from_diagonal(&self.eigenvalues.map(|e| C64::new(e, 0.0)));
        &self.eigenvectors * lambda * self.eigenvectors.adjoint()
    }

    /// Matrix elements `⟨n|A|m⟩` in the eigenbasis.
    pub fn to_eigenbasis(&self, op: &HermitianOperator) -> Result<CMatrix> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        Ok(self.eigenvectors.adjoint() * op.matrix() * &self.eigenvectors)
    }

    /// Same eigenvectors, every eigenvalue moved by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            eigenvalues: self.eigenvalues.add_scalar(c),
            eigenvectors: self.eigenvectors.clone(),
        }
    }
}

/// Full Hermitian eigendecomposition.
///
/// Real symmetric input takes the real solver path. Each eigenvector is scaled
/// so its largest-modulus entry is real and positive, which makes the output
/// deterministic for nondegenerate levels.
pub fn eigendecompose(op: &HermitianOperator) -> Result<SpectralDecomposition> {
    let m = op.matrix();
    let residual = crate::spin_model::hermitian_residual(m);
    if residual > 1e-12 * max_modulus(m).max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    let dim = op.dim();
    let is_real = m.iter().all(|z| z.im == 0.0);

    let (values, vectors): (DVector<f64>, CMatrix) = if is_real {
        let eig = SymmetricEigen::new(m.map(|z| z.re));
        (eig.eigenvalues, eig.eigenvectors.map(|x| C64::new(x, 0.0)))
    } else {
        let eig = SymmetricEigen::new(m.clone());
        (eig.eigenvalues, eig.eigenvectors)
    };

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues = DVector::from_iterator(dim, order.iter().map(|&i| values[i]));
    let mut eigenvectors = CMatrix::zeros(dim, dim);
    for (col, &i) in order.iter().enumerate() {
        let mut v = vectors.column(i).into_owned();
        let pivot = v
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(C64::new(1.0, 0.0));
        if pivot.norm() > 0.0 {
            let phase = pivot.conj() / pivot.norm();
            v *= phase;
        }
        eigenvectors.set_column(col, &v);
    }

    let spectrum = SpectralDecomposition { eigenvalues, eigenvectors };
    let scale = op.max_abs().max(1.0);
    let recon = crate::spin_model::max_abs_diff(&spectrum.reconstruct(), m);
    if recon > 1e-10 * scale {
        return Err(Error::Inconsistent {
            check: "eigendecomposition reconstruction",
            residual: recon,
        });
    }
    Ok(spectrum)
}

/// Energy difference gap `E_1 - E_0`.
pub fn spectral_gap(spectrum: &SpectralDecomposition) -> Result<f64> {
    if spectrum.dim() < 2 {
        return Err(domain("dim", spectrum.dim() as f64, "gap needs at least two levels"));
    }
    let e = spectrum.eigenvalues();
    Ok((e[1] - e[0]).max(0.0))
}

/// Thermal state `e^{-βH}/Z` in the eigenbasis of `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsEnsemble {
    beta: f64,
    weights: DVector<f64>,
    log_partition: f64,
    spectrum: SpectralDecomposition,
}

impl GibbsEnsemble {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Boltzmann weights aligned with the eigenvalues.
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// `log Σ_m e^{-β(E_m - E_0)}`.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    /// `log Σ_m e^{-βE_m}`.
    pub fn absolute_log_partition(&self) -> f64 {
        self.log_partition - self.beta * self.spectrum.ground_energy()
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn mean_energy(&self) -> f64 {
        let e0 = self.spectrum.ground_energy();
        e0 + self.expect_shifted(|e| e - e0)
    }

    /// `⟨H²⟩ - ⟨H⟩²`, evaluated on ground-shifted energies.
    pub fn energy_variance(&self) -> f64 {
        let e0 = self.spectrum.ground_energy();
        let mean = self.expect_shifted(|e| e - e0);
        self.expect_shifted(|e| (e - e0 - mean).powi(2))
    }

    fn expect_shifted(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.weights
            .iter()
            .zip(self.spectrum.eigenvalues().iter())
            .map(|(w, &e)| w * f(e))
            .sum()
    }

    /// Density matrix in the computational basis.
    pub fn density_matrix(&self) -> HermitianOperator {
        let v = self.spectrum.eigenvectors();
        let w = CMatrix::from_diagonal(&self.weights.map(|x| C64::new(x, 0.0)));
        HermitianOperator::new_unchecked(crate::spin_model::hermitize(v * w * v.adjoint()))
    }
}

/// Tolerance under which two levels count as one ground manifold.
pub(crate) fn ground_tolerance(e0: f64) -> f64 {
    1e-10 * e0.abs().max(1.0)
}

/// Builds the Gibbs ensemble at inverse temperature `beta ∈ [0, 1e6]`.
pub fn gibbs_ensemble(spectrum: &SpectralDecomposition, beta: f64) -> Result<GibbsEnsemble> {
    if !(beta >= 0.0) {
        return Err(domain("beta", beta, "must be nonnegative"));
    }
    if beta > MAX_BETA {
        return Err(domain("beta", beta, "exceeds the supported maximum 1e6"));
    }
    let e = spectrum.eigenvalues();
    let e0 = e[0];
    let tol = ground_tolerance(e0);
    let unnormalized = e.map(|en| {
        let de = en - e0;
        if de < tol {
            1.0
        } else {
            (-beta * de).exp()
        }
    });
    let z: f64 = unnormalized.sum();
    Ok(GibbsEnsemble {
        beta,
        weights: unnormalized / z,
        log_partition: z.ln(),
        spectrum: spectrum.clone(),
    })
}

/// `β = 1/T` in the model's dimensionless units.
pub fn beta_from_temperature(temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(domain("temperature", temperature, "must be positive and finite"));
    }
    Ok(1.0 / temperature)
}
