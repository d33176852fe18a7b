//! Quantum and classical Fisher information on thermal states.
//!
//! All spectral quantities go through one kernel: the eigenbasis of `H`,
//! rotated inside each degenerate cluster so that the projected generator
//! `∂H` is diagonal. In that basis
//!
//! ```text
//! ⟨n|∂ρ|n⟩ = -β B_n (d_n - d̄),       d_n = ⟨n|∂H|n⟩
//! ⟨n|∂ρ|m⟩ = r_nm ⟨n|∂H|m⟩,          r_nm = (B_n - B_m)/(E_n - E_m)
//! ```
//!
//! and `r_nm` is evaluated as `B_n expm1(-βΔ)/Δ` (with a series branch for
//! tiny `βΔ`), which stays finite through level crossings.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{domain, Error, Result};
use crate::spin_model::{
    build_hamiltonian, check_size, hamiltonian_derivative, hermitize, max_abs_diff, max_modulus, CMatrix, Coupling, HermitianOperator,
    ModelParams, C64,
};
use crate::thermal_spectra::{eigendecompose, gibbs_ensemble, GibbsEnsemble};

/// Pairs whose summed weight is below this are dropped from the quantum term.
pub const WEIGHT_FLOOR: f64 = 1e-290;
/// Outcomes with probability below this are dropped from classical Fisher sums.
pub const PROBABILITY_FLOOR: f64 = 1e-14;
/// Base step of the finite-difference probability derivative.
pub const FD_STEP: f64 = 1e-5;
const FD_AGREEMENT: f64 = 1e-4;
const SERIES_THRESHOLD: f64 = 1e-6;

/// Classical (weight) and quantum (eigenvector) parts of a QFI value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiBreakdown {
    pub classical_term: f64,
    pub quantum_term: f64,
    pub total: f64,
}

impl QfiBreakdown {
    pub fn new(classical_term: f64, quantum_term: f64) -> Self {
        Self {
            classical_term,
            quantum_term,
            total: classical_term + quantum_term,
        }
    }
}

/// Any quantity a thermal state can be differentiated with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parameter {
    Anisotropy,
    Field,
    /// The inverse temperature `β`.
    Temperature,
}

impl From<Coupling> for Parameter {
    fn from(c: Coupling) -> Self {
        match c {
            Coupling::Anisotropy => Parameter::Anisotropy,
            Coupling::Field => Parameter::Field,
        }
    }
}

impl Parameter {
    fn coupling(self) -> Option<Coupling> {
        match self {
            Parameter::Anisotropy => Some(Coupling::Anisotropy),
            Parameter::Field => Some(Coupling::Field),
            Parameter::Temperature => None,
        }
    }
}

/// `(B_lo - B_hi)/(E_lo - E_hi)` for two Boltzmann weights with `E_hi = E_lo + gap`.
pub(crate) fn weight_slope(w_lo: f64, gap: f64, beta: f64) -> f64 {
    let x = beta * gap;
    if x.abs() < SERIES_THRESHOLD {
        -beta * w_lo * (1.0 - x / 2.0 + x * x / 6.0)
    } else {
        w_lo * (-x).exp_m1() / gap
    }
}

/// Contribution `2 Σ_{n≠m}` of one unordered pair to the quantum term.
pub(crate) fn pair_contribution(w_lo: f64, w_hi: f64, gap: f64, beta: f64, dh_sq: f64) -> f64 {
    let s = w_lo + w_hi;
    if s < WEIGHT_FLOOR || dh_sq == 0.0 {
        return 0.0;
    }
    let r = weight_slope(w_lo, gap, beta);
    4.0 * r * r * dh_sq / s
}

/// The eigenbasis data shared by the QFI, SLD and `∂ρ`.
struct Kernel {
    beta: f64,
    energies: Vec<f64>,
    weights: Vec<f64>,
    cluster: Vec<usize>,
    dh: CMatrix,
    basis: CMatrix,
}

impl Kernel {
    fn new(gibbs: &GibbsEnsemble, generator: &HermitianOperator) -> Result<Self> {
        let spectrum = gibbs.spectrum();
        let mut dh = spectrum.to_eigenbasis(generator)?;
        let mut basis = spectrum.eigenvectors().clone();
        let mut energies: Vec<f64> = spectrum.eigenvalues().iter().copied().collect();
        let mut weights: Vec<f64> = gibbs.weights().iter().copied().collect();
        let dim = energies.len();

        let scale = energies.iter().fold(1.0f64, |a, e| a.max(e.abs()));
        let tol = 1e-12 * scale;
        let mut cluster = vec![0usize; dim];
        let mut start = 0;
        let mut id = 0;
        while start < dim {
            let mut end = start + 1;
            while end < dim && energies[end] - energies[end - 1] < tol {
                end += 1;
            }
            for c in &mut cluster[start..end] {
                *c = id;
            }
            if end - start > 1 {
                rotate_cluster(&mut dh, &mut basis, &energies, start, end)?;
                let k = (end - start) as f64;
                let e_mean = energies[start..end].iter().sum::<f64>() / k;
                let w_mean = weights[start..end].iter().sum::<f64>() / k;
                energies[start..end].fill(e_mean);
                weights[start..end].fill(w_mean);
            }
            id += 1;
            start = end;
        }
        // Off-diagonal elements at round-off level are symmetry zeros.
        let chop = 1e2 * f64::EPSILON * dim as f64 * crate::spin_model::max_modulus(&dh);
        for n in 0..dim {
            for m in 0..dim {
                if n != m && dh[(n, m)].norm() < chop {
                    dh[(n, m)] = C64::new(0.0, 0.0);
                }
            }
        }
        Ok(Self {
            beta: gibbs.beta(),
            energies,
            weights,
            cluster,
            dh,
            basis,
        })
    }

    fn slopes(&self) -> (Vec<f64>, f64) {
        let d: Vec<f64> = (0..self.energies.len()).map(|n| self.dh[(n, n)].re).collect();
        let mean = d.iter().zip(&self.weights).map(|(d, w)| d * w).sum();
        (d, mean)
    }

    fn qfi(&self) -> QfiBreakdown {
        let (d, mean) = self.slopes();
        let beta = self.beta;
        let classical: f64 = d
            .iter()
            .zip(&self.weights)
            .map(|(dn, w)| beta * beta * w * (dn - mean).powi(2))
            .sum();
        let dim = self.energies.len();
        let mut quantum = 0.0;
        for n in 0..dim {
            for m in (n + 1)..dim {
                if self.cluster[n] == self.cluster[m] {
                    continue;
                }
                quantum += pair_contribution(
                    self.weights[n],
                    self.weights[m],
                    self.energies[m] - self.energies[n],
                    beta,
                    self.dh[(n, m)].norm_sqr(),
                );
            }
        }
        QfiBreakdown::new(classical, quantum)
    }

    /// `∂ρ` and the SLD, both in the (rotated) eigenbasis.
    fn derivative_and_sld(&self) -> (CMatrix, CMatrix) {
        let (d, mean) = self.slopes();
        let dim = self.energies.len();
        let mut drho = CMatrix::zeros(dim, dim);
        let mut sld = CMatrix::zeros(dim, dim);
        for n in 0..dim {
            let w = self.weights[n];
            drho[(n, n)] = C64::new(-self.beta * w * (d[n] - mean), 0.0);
            sld[(n, n)] = C64::new(-self.beta * (d[n] - mean), 0.0);
            for m in (n + 1)..dim {
                if self.cluster[n] == self.cluster[m] {
                    continue;
                }
                let s = w + self.weights[m];
                let r = weight_slope(w, self.energies[m] - self.energies[n], self.beta);
                let value = self.dh[(n, m)] * r;
                drho[(n, m)] = value;
                drho[(m, n)] = value.conj();
                if s >= WEIGHT_FLOOR {
                    let l = value * (2.0 / s);
                    sld[(n, m)] = l;
                    sld[(m, n)] = l.conj();
                }
            }
        }
        (drho, sld)
    }

    fn to_computational(&self, m: &CMatrix) -> HermitianOperator {
        HermitianOperator::new_unchecked(hermitize(&self.basis * m * self.basis.adjoint()))
    }
}

/// Diagonalises the projection of `dh` on levels `start..end` and rotates the basis accordingly.
fn rotate_cluster(dh: &mut CMatrix, basis: &mut CMatrix, energies: &[f64], start: usize, end: usize) -> Result<()> {
    let k = end - start;
    let block = hermitize(dh.view((start, start), (k, k)).into_owned());
    let eig = SymmetricEigen::try_new(block, f64::EPSILON, 10_000).ok_or_else(|| Error::Degeneracy {
        energies: energies[start..end].to_vec(),
    })?;
    let w = eig.eigenvectors;
    let rotated_cols = dh.columns(start, k) * &w;
    dh.columns_mut(start, k).copy_from(&rotated_cols);
    let rotated_rows = w.adjoint() * dh.rows(start, k);
    dh.rows_mut(start, k).copy_from(&rotated_rows);
    let new_basis = basis.columns(start, k) * &w;
    basis.columns_mut(start, k).copy_from(&new_basis);

    let scale = max_modulus(dh).max(1.0);
    let mut off = 0.0f64;
    for i in start..end {
        for j in start..end {
            if i != j {
                off = off.max(dh[(i, j)].norm());
            }
        }
    }
    if off > 1e-8 * scale {
        return Err(Error::Degeneracy {
            energies: energies[start..end].to_vec(),
        });
    }
    Ok(())
}

fn thermal(params: &ModelParams, beta: f64) -> Result<GibbsEnsemble> {
    let h = build_hamiltonian(params)?;
    gibbs_ensemble(&eigendecompose(&h)?, beta)
}

/// QFI of a thermal family whose generator is `∂H = generator`.
///
/// This is the spectral kernel behind [`qfi_thermal`]; it also applies to
/// families that are not built from the spin model.
pub fn qfi_from_generator(gibbs: &GibbsEnsemble, generator: &HermitianOperator) -> Result<QfiBreakdown> {
    Ok(Kernel::new(gibbs, generator)?.qfi())
}

/// QFI for the anisotropy or the field at inverse temperature `beta`.
pub fn qfi_thermal(params: &ModelParams, which: Coupling, beta: f64) -> Result<QfiBreakdown> {
    if !(beta >= 0.0) {
        return Err(domain("beta", beta, "must be nonnegative"));
    }
    let gibbs = thermal(params, beta)?;
    qfi_from_generator(&gibbs, &hamiltonian_derivative(params, which)?)
}

/// QFI for `β` on an existing ensemble.
///
/// Evaluates `Σ_n (∂_β B_n)²/B_n` and cross-checks it against the energy
/// variance `⟨H²⟩ - ⟨H⟩²`.
pub fn qfi_temperature_from(gibbs: &GibbsEnsemble) -> Result<QfiBreakdown> {
    let e = gibbs.spectrum().eigenvalues();
    let w = gibbs.weights();
    let e0 = e[0];
    let mean: f64 = e.iter().zip(w.iter()).map(|(en, wn)| wn * (en - e0)).sum();
    let fisher: f64 = e
        .iter()
        .zip(w.iter())
        .filter(|(_, &wn)| wn > 0.0)
        .map(|(en, &wn)| {
            // (∂_β B_n)²/B_n without squaring B_n, which underflows.
            let de = en - e0 - mean;
            wn * de * de
        })
        .sum();
    let second: f64 = e.iter().zip(w.iter()).map(|(en, wn)| wn * (en - e0).powi(2)).sum();
    let variance = second - mean * mean;
    let residual = (fisher - variance).abs();
    if residual > 1e-10 * fisher.max(variance) + 4.0 * f64::EPSILON * second {
        return Err(Error::Inconsistent {
            check: "temperature QFI vs energy variance",
            residual,
        });
    }
    Ok(QfiBreakdown::new(fisher, 0.0))
}

/// QFI for the inverse temperature, `β > 0`.
pub fn qfi_temperature(params: &ModelParams, beta: f64) -> Result<QfiBreakdown> {
    if !(beta > 0.0) {
        return Err(domain("beta", beta, "must be positive"));
    }
    qfi_temperature_from(&thermal(params, beta)?)
}

fn sld_and_derivative(params: &ModelParams, which: Parameter, beta: f64) -> Result<(HermitianOperator, HermitianOperator)> {
    if !(beta >= 0.0) {
        return Err(domain("beta", beta, "must be nonnegative"));
    }
    let gibbs = thermal(params, beta)?;
    match which.coupling() {
        Some(c) => {
            let kernel = Kernel::new(&gibbs, &hamiltonian_derivative(params, c)?)?;
            let (drho, sld) = kernel.derivative_and_sld();
            Ok((kernel.to_computational(&sld), kernel.to_computational(&drho)))
        }
        None => {
            let mean = gibbs.mean_energy();
            let e = gibbs.spectrum().eigenvalues();
            let w = gibbs.weights();
            let l = DVector::from_fn(e.len(), |n, _| C64::new(mean - e[n], 0.0));
            let d = DVector::from_fn(e.len(), |n, _| C64::new(w[n] * (mean - e[n]), 0.0));
            let v = gibbs.spectrum().eigenvectors();
            let wrap = |diag: DVector<C64>| HermitianOperator::new_unchecked(hermitize(v * CMatrix::from_diagonal(&diag) * v.adjoint()));
            Ok((wrap(l), wrap(d)))
        }
    }
}

/// Symmetric logarithmic derivative `L` with `(Lρ + ρL)/2 = ∂ρ`.
///
/// For [`Parameter::Temperature`], `L = ⟨H⟩ - H`.
pub fn sld(params: &ModelParams, which: Parameter, beta: f64) -> Result<HermitianOperator> {
    Ok(sld_and_derivative(params, which, beta)?.0)
}

/// Analytic `∂ρ` in the computational basis.
pub fn density_derivative(params: &ModelParams, which: Parameter, beta: f64) -> Result<HermitianOperator> {
    Ok(sld_and_derivative(params, which, beta)?.1)
}

/// `max |(Lρ + ρL)/2 - ∂ρ|`.
pub fn lyapunov_residual(sld: &HermitianOperator, rho: &HermitianOperator, drho: &HermitianOperator) -> f64 {
    let l = sld.matrix();
    let r = rho.matrix();
    let lhs = (l * r + r * l).map(|z| z * 0.5);
    max_abs_diff(&lhs, drho.matrix())
}

#[derive(Debug, Clone, PartialEq)]
enum Projector {
    /// Projector onto a set of computational basis states.
    Diagonal(Vec<usize>),
    Dense(CMatrix),
}

/// A complete set of orthogonal projectors with an outcome value each.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveMeasurement {
    dim: usize,
    projectors: Vec<Projector>,
    outcome_labels: Vec<f64>,
}

const PROJECTOR_TOL: f64 = 1e-10;

impl ProjectiveMeasurement {
    /// Validates idempotence, mutual orthogonality and completeness to `1e-10`.
    pub fn new(projectors: Vec<HermitianOperator>, outcome_labels: Vec<f64>) -> Result<Self> {
        if projectors.is_empty() {
            return Err(Error::InvalidMeasurement("no projectors".into()));
        }
        if projectors.len() != outcome_labels.len() {
            return Err(Error::InvalidMeasurement(format!(
                "{} projectors but {} labels",
                projectors.len(),
                outcome_labels.len()
            )));
        }
        let dim = projectors[0].dim();
        let mut sum = CMatrix::zeros(dim, dim);
        for (i, p) in projectors.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::InvalidMeasurement(format!(
                    "projector {i} has dimension {}, expected {dim}",
                    p.dim()
                )));
            }
            let m = p.matrix();
            if max_abs_diff(&(m * m), m) > PROJECTOR_TOL {
                return Err(Error::InvalidMeasurement(format!("projector {i} is not idempotent")));
            }
            for (j, q) in projectors.iter().enumerate().skip(i + 1) {
                if max_modulus(&(m * q.matrix())) > PROJECTOR_TOL {
                    return Err(Error::InvalidMeasurement(format!("projectors {i} and {j} are not orthogonal")));
                }
            }
            sum += m;
        }
        if max_abs_diff(&sum, &CMatrix::identity(dim, dim)) > PROJECTOR_TOL {
            return Err(Error::InvalidMeasurement("projectors do not sum to the identity".into()));
        }
        Ok(Self {
            dim,
            projectors: projectors.into_iter().map(|p| Projector::Dense(p.into_matrix())).collect(),
            outcome_labels,
        })
    }

    /// Measurement in the eigenbasis of `op`; eigenvalues closer than
    /// `1e-9·max(1, ‖op‖)` share a projector and label.
    pub fn spectral(op: &HermitianOperator) -> Result<Self> {
        let spec = eigendecompose(op)?;
        let e = spec.eigenvalues();
        let v = spec.eigenvectors();
        let tol = 1e-9 * op.max_abs().max(1.0);
        let mut projectors = Vec::new();
        let mut labels = Vec::new();
        let mut start = 0;
        while start < e.len() {
            let mut end = start + 1;
            while end < e.len() && e[end] - e[end - 1] < tol {
                end += 1;
            }
            let cols = v.columns(start, end - start);
            projectors.push(HermitianOperator::new_unchecked(hermitize(&cols * cols.adjoint())));
            labels.push(e.rows(start, end - start).mean());
            start = end;
        }
        Self::new(projectors, labels)
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcome_labels(&self) -> &[f64] {
        &self.outcome_labels
    }

    /// Dense matrix of projector `i`.
    pub fn projector(&self, i: usize) -> HermitianOperator {
        match &self.projectors[i] {
            Projector::Dense(m) => HermitianOperator::new_unchecked(m.clone()),
            Projector::Diagonal(states) => {
                let mut m = CMatrix::zeros(self.dim, self.dim);
                for &b in states {
                    m[(b, b)] = C64::new(1.0, 0.0);
                }
                HermitianOperator::new_unchecked(m)
            }
        }
    }

    /// Rank of projector `i`.
    pub fn rank(&self, i: usize) -> usize {
        match &self.projectors[i] {
            Projector::Diagonal(states) => states.len(),
            Projector::Dense(m) => (0..self.dim).map(|k| m[(k, k)].re).sum::<f64>().round() as usize,
        }
    }

    /// `⟨n|P_x|n⟩` for every outcome `x` (rows) and eigenvector `n` (columns).
    fn level_overlaps(&self, gibbs: &GibbsEnsemble) -> Result<DMatrix<f64>> {
        let v = gibbs.spectrum().eigenvectors();
        if v.nrows() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.nrows(),
            });
        }
        let mut out = DMatrix::zeros(self.len(), self.dim);
        for (x, p) in self.projectors.iter().enumerate() {
            match p {
                Projector::Diagonal(states) => {
                    for n in 0..self.dim {
                        out[(x, n)] = states.iter().map(|&b| v[(b, n)].norm_sqr()).sum();
                    }
                }
                Projector::Dense(m) => {
                    let pv = m * v;
                    for n in 0..self.dim {
                        out[(x, n)] = v.column(n).dotc(&pv.column(n)).re;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Outcome probabilities `Tr[P_x ρ]`.
    pub fn probabilities(&self, gibbs: &GibbsEnsemble) -> Result<Vec<f64>> {
        let p = self.level_overlaps(gibbs)? * gibbs.weights();
        Ok(p.iter().copied().collect())
    }
}

/// Total-magnetization measurement: one projector per number `N_z` of up
/// spins (`N_z = 0..=N`), with outcome `2N_z - N`.
pub fn magnetization_measurement(n_sites: usize) -> Result<ProjectiveMeasurement> {
    check_size(n_sites)?;
    let dim = 1usize << n_sites;
    let mut sets = vec![Vec::new(); n_sites + 1];
    for b in 0..dim {
        let n_up = n_sites - b.count_ones() as usize;
        sets[n_up].push(b);
    }
    Ok(ProjectiveMeasurement {
        dim,
        projectors: sets.into_iter().map(Projector::Diagonal).collect(),
        outcome_labels: (0..=n_sites).map(|k| 2.0 * k as f64 - n_sites as f64).collect(),
    })
}

fn probabilities_at(params: &ModelParams, measurement: &ProjectiveMeasurement, beta: f64) -> Result<DVector<f64>> {
    let p = measurement.probabilities(&thermal(params, beta)?)?;
    Ok(DVector::from_vec(p))
}

fn shifted(params: &ModelParams, which: Coupling, delta: f64) -> ModelParams {
    match which {
        Coupling::Anisotropy => params.with_gamma(params.gamma + delta),
        Coupling::Field => params.with_field(params.field + delta),
    }
}

fn central_difference(
    params: &ModelParams,
    measurement: &ProjectiveMeasurement,
    which: Coupling,
    beta: f64,
    step: f64,
) -> Result<DVector<f64>> {
    let plus = probabilities_at(&shifted(params, which, step), measurement, beta)?;
    let minus = probabilities_at(&shifted(params, which, -step), measurement, beta)?;
    Ok((plus - minus) / (2.0 * step))
}

/// `∂_λ p(x)` by central differences, checked against the half step.
fn probability_derivative(params: &ModelParams, measurement: &ProjectiveMeasurement, which: Coupling, beta: f64) -> Result<DVector<f64>> {
    let mut step = FD_STEP;
    let mut disagreement = 0.0;
    for _ in 0..2 {
        let full = central_difference(params, measurement, which, beta, step)?;
        let half = central_difference(params, measurement, which, beta, step / 2.0)?;
        let scale = half.amax();
        disagreement = (&full - &half).amax() / scale.max(f64::MIN_POSITIVE);
        // Rounding in the probabilities alone limits the difference quotient to about ε/step.
        let noise = 1e3 * f64::EPSILON / step;
        if (&full - &half).amax() <= FD_AGREEMENT * scale + noise {
            return Ok((half * 4.0 - full) / 3.0);
        }
        step /= 2.0;
    }
    Err(Error::DerivativeNotConverged { disagreement })
}

/// Classical Fisher information `Σ_x (∂p_x)²/p_x` of a projective measurement.
///
/// Coupling derivatives use central differences with step `1e-5` and a
/// half-step check. The `β` derivative is exact: eigenvectors do not depend
/// on `β`, so `∂_β p_x = -Σ_n B_n (E_n - ⟨H⟩) ⟨n|P_x|n⟩`.
pub fn fisher_information(params: &ModelParams, measurement: &ProjectiveMeasurement, which: Parameter, beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(domain("beta", beta, "must be nonnegative"));
    }
    if measurement.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: measurement.dim(),
        });
    }
    let gibbs = thermal(params, beta)?;
    let overlaps = measurement.level_overlaps(&gibbs)?;
    let p = &overlaps * gibbs.weights();
    let dp = match which.coupling() {
        Some(c) => probability_derivative(params, measurement, c, beta)?,
        None => {
            let mean = gibbs.mean_energy();
            let e = gibbs.spectrum().eigenvalues();
            let w = gibbs.weights();
            &overlaps * DVector::from_fn(e.len(), |n, _| -w[n] * (e[n] - mean))
        }
    };
    Ok(p.iter()
        .zip(dp.iter())
        .filter(|(&px, _)| px >= PROBABILITY_FLOOR)
        .map(|(px, dx)| dx * dx / px)
        .sum())
}

/// Fisher information of the total-magnetization measurement.
pub fn magnetization_fisher(params: &ModelParams, which: Parameter, beta: f64) -> Result<f64> {
    fisher_information(params, &magnetization_measurement(params.n_sites)?, which, beta)
}
