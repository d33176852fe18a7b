//! The LMG Hamiltonian on `N` spin-1/2 sites in the computational basis.
//!
//! Basis index `b` stores spin `k` in bit `k`; a cleared bit is spin up
//! (eigenvalue +1 of `σ_z`). With this convention the Hamiltonian
//!
//! ```text
//! H(γ, h) = -(1/N) Σ_{j<k} (σ_x^j σ_x^k + γ σ_y^j σ_y^k) - h Σ_k σ_z^k
//! ```
//!
//! is real symmetric, and magnetization sectors are popcount classes.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{domain, Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Smallest supported chain length.
pub const MIN_SITES: usize = 2;
/// Largest supported chain length (dense `2^N` matrices).
pub const MAX_SITES: usize = 12;

const HERMITIAN_TOL: f64 = 1e-12;

/// One instance of the model: chain length, anisotropy and external field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n_sites: usize,
    pub gamma: f64,
    pub field: f64,
}

impl ModelParams {
    pub fn new(n_sites: usize, gamma: f64, field: f64) -> Result<Self> {
        check_size(n_sites)?;
        if !gamma.is_finite() {
            return Err(domain("gamma", gamma, "must be finite"));
        }
        if !field.is_finite() {
            return Err(domain("field", field, "must be finite"));
        }
        Ok(Self { n_sites, gamma, field })
    }

    /// `γ ∈ [-1, 1]` and `h ≥ 0`; every other point maps onto this region by symmetry.
    pub fn is_canonical(&self) -> bool {
        (-1.0..=1.0).contains(&self.gamma) && self.field >= 0.0
    }

    /// Hilbert-space dimension `2^N`.
    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    pub fn with_field(self, field: f64) -> Self {
        Self { field, ..self }
    }
}

pub(crate) fn check_size(n_sites: usize) -> Result<()> {
    if (MIN_SITES..=MAX_SITES).contains(&n_sites) {
        Ok(())
    } else {
        Err(Error::UnsupportedSize(n_sites))
    }
}

/// Dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    /// Wraps `matrix` after checking it is square and Hermitian to `1e-12`.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let residual = hermitian_residual(&matrix);
        if residual > HERMITIAN_TOL * max_modulus(&matrix).max(1.0) {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self { matrix })
    }

    pub fn from_real(matrix: DMatrix<f64>) -> Result<Self> {
        Self::from_matrix(matrix.map(|x| C64::new(x, 0.0)))
    }

    /// Callers guarantee Hermiticity by construction.
    pub(crate) fn new_unchecked(matrix: CMatrix) -> Self {
        debug_assert!(hermitian_residual(&matrix) <= 1e-9 * max_modulus(&matrix).max(1.0));
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        max_modulus(&self.matrix)
    }

    /// `max_ij |A_ij - B_ij|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }

    /// `self + c·I`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.matrix.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += C64::new(c, 0.0);
        }
        Self { matrix: m }
    }

    /// `U† A U` for a unitary `U`.
    pub fn conjugated_by(&self, unitary: &CMatrix) -> Self {
        let m = unitary.adjoint() * &self.matrix * unitary;
        Self { matrix: hermitize(m) }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }
}

pub(crate) fn hermitian_residual(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn max_modulus(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn hermitize(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()).map(|z| z * 0.5)
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Hamiltonian parameters that can be differentiated or estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coupling {
    /// The anisotropy `γ`.
    Anisotropy,
    /// The external field `h`.
    Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symmetry {
    /// `h → -h` implemented by `U = ⊗ σ_x`.
    SpinFlip,
    /// `γ → 1/γ` implemented by a `π/2` rotation about `z` plus a rescaling.
    GammaInversion,
}

#[inline]
fn spin_up(b: usize, k: usize) -> bool {
    b & (1 << k) == 0
}

/// `Σ_{j<k} σ_x^j σ_x^k` and `Σ_{j<k} σ_y^j σ_y^k` as real matrices.
fn pair_couplings(n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = 1 << n;
    let mut xx = DMatrix::zeros(dim, dim);
    let mut yy = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        for j in 0..n {
            for k in (j + 1)..n {
                let flipped = b ^ (1 << j) ^ (1 << k);
                xx[(flipped, b)] += 1.0;
                // σ_y|↑⟩ = i|↓⟩, σ_y|↓⟩ = -i|↑⟩: equal spins give i·i = -1, opposite give +1.
                let sign = if spin_up(b, j) == spin_up(b, k) { -1.0 } else { 1.0 };
                yy[(flipped, b)] += sign;
            }
        }
    }
    (xx, yy)
}

/// `Σ_k σ_z^k` (diagonal).
fn total_sigma_z(n: usize) -> DVector<f64> {
    DVector::from_fn(1 << n, |b, _| (0..n).map(|k| if spin_up(b, k) { 1.0 } else { -1.0 }).sum())
}

fn hamiltonian_real(n: usize, gamma: f64, field: f64) -> DMatrix<f64> {
    let (xx, yy) = pair_couplings(n);
    let scale = -1.0 / n as f64;
    let mut h = (xx + yy * gamma) * scale;
    let z = total_sigma_z(n);
    for b in 0..h.nrows() {
        h[(b, b)] -= field * z[b];
    }
    h
}

/// The `2^N × 2^N` Hamiltonian matrix.
///
/// Any finite `(γ, h)` is accepted; the canonical domain is not enforced here.
pub fn build_hamiltonian(params: &ModelParams) -> Result<HermitianOperator> {
    check_size(params.n_sites)?;
    let h = hamiltonian_real(params.n_sites, params.gamma, params.field);
    Ok(HermitianOperator::new_unchecked(h.map(|x| C64::new(x, 0.0))))
}

/// Exact `∂H/∂γ` or `∂H/∂h`. `H` is affine in both, so the result does not
/// depend on the parameter being differentiated.
pub fn hamiltonian_derivative(params: &ModelParams, which: Coupling) -> Result<HermitianOperator> {
    check_size(params.n_sites)?;
    let n = params.n_sites;
    let m = match which {
        Coupling::Anisotropy => pair_couplings(n).1 * (-1.0 / n as f64),
        Coupling::Field => DMatrix::from_diagonal(&(-total_sigma_z(n))),
    };
    Ok(HermitianOperator::new_unchecked(m.map(|x| C64::new(x, 0.0))))
}

/// Collective spin `S_α = ½ Σ_k σ_α^k`.
pub fn collective_spin(n_sites: usize, axis: Axis) -> Result<HermitianOperator> {
    check_size(n_sites)?;
    let dim = 1 << n_sites;
    let mut m = CMatrix::zeros(dim, dim);
    for b in 0..dim {
        for k in 0..n_sites {
            let up = spin_up(b, k);
            match axis {
                Axis::X => m[(b ^ (1 << k), b)] += C64::new(0.5, 0.0),
                Axis::Y => {
                    let amp = if up { C64::new(0.0, 0.5) } else { C64::new(0.0, -0.5) };
                    m[(b ^ (1 << k), b)] += amp;
                }
                Axis::Z => m[(b, b)] += C64::new(if up { 0.5 } else { -0.5 }, 0.0),
            }
        }
    }
    Ok(HermitianOperator::new_unchecked(m))
}

/// `S_- = S_x - i S_y`, which turns one up spin down.
pub(crate) fn lowering(n_sites: usize) -> DMatrix<f64> {
    let dim = 1 << n_sites;
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        for k in 0..n_sites {
            if spin_up(b, k) {
                m[(b | (1 << k), b)] += 1.0;
            }
        }
    }
    m
}

/// Outcome of [`symmetry_conjugation`].
#[derive(Debug, Clone)]
pub struct SymmetryCheck {
    /// The conjugated (and, for γ-inversion, rescaled) Hamiltonian.
    pub transformed: HermitianOperator,
    /// The unitary used.
    pub unitary: CMatrix,
    /// `max |transformed - target|`.
    pub residual: f64,
}

/// Applies a model symmetry and compares with the Hamiltonian it should map to.
///
/// * `SpinFlip`: `U† H(γ, -h) U` with `U = ⊗σ_x`, target `H(γ, h)`.
/// * `GammaInversion`: `γ⁻¹ R† H(γ, hγ) R` with `R = ⊗ exp(-iπσ_z/4)`, target `H(1/γ, h)`.
///
/// Fails with [`Error::Inconsistent`] if the residual exceeds `1e-10`.
pub fn symmetry_conjugation(params: &ModelParams, which: Symmetry) -> Result<SymmetryCheck> {
    check_size(params.n_sites)?;
    let n = params.n_sites;
    let dim = params.dim();
    let (transformed, unitary, target) = match which {
        Symmetry::SpinFlip => {
            let all = dim - 1;
            let mut u = CMatrix::zeros(dim, dim);
            for b in 0..dim {
                u[(b ^ all, b)] = C64::new(1.0, 0.0);
            }
            let flipped = build_hamiltonian(&params.with_field(-params.field))?;
            (flipped.conjugated_by(&u), u, build_hamiltonian(params)?)
        }
        Symmetry::GammaInversion => {
            let gamma = params.gamma;
            if gamma == 0.0 {
                return Err(domain("gamma", gamma, "γ-inversion needs γ ≠ 0"));
            }
            let z = total_sigma_z(n);
            let r = CMatrix::from_diagonal(&z.map(|s| C64::from_polar(1.0, -std::f64::consts::FRAC_PI_4 * s)));
            let source = build_hamiltonian(&params.with_field(params.field * gamma))?;
            let mut t = source.conjugated_by(&r);
            t.matrix.iter_mut().for_each(|x| *x /= gamma);
            let target = build_hamiltonian(&params.with_gamma(1.0 / gamma))?;
            (t, r, target)
        }
    };
    let residual = transformed.max_abs_diff(&target);
    if residual > 1e-10 * target.max_abs().max(1.0) {
        return Err(Error::Inconsistent {
            check: "symmetry conjugation",
            residual,
        });
    }
    Ok(SymmetryCheck {
        transformed,
        unitary,
        residual,
    })
}

/// Orthonormal basis of the four-site Hilbert space, adapted to total spin,
/// in which `H` is block diagonal.
///
/// Columns are ordered as: `S = 2` (m = 2..-2, block `A`); two `S = 1`
/// triplets (m = 1, 0, -1, blocks `B`); then block `C` made of one `S = 0`
/// singlet, the third triplet and the second singlet. Triplets and the
/// `S = 2` multiplet are generated by `S_-` from their top state, so all
/// ladder matrix elements are positive. The basis is real.
pub fn total_spin_basis_n4() -> DMatrix<f64> {
    const N: usize = 4;
    let dim = 1 << N;
    let lower = lowering(N);
    let e = |i: usize| DVector::<f64>::from_fn(dim, |r, _| if r == i { 1.0 } else { 0.0 });

    let ladder = |top: DVector<f64>, steps: usize| -> Vec<DVector<f64>> {
        let mut out = vec![top];
        for _ in 0..steps {
            let next = &lower * out.last().expect("nonempty");
            out.push(next.normalize());
        }
        out
    };

    let quintet = ladder(e(0), 4);

    // Top states of the three triplets: one-down states orthogonal to |2, 1⟩.
    let one_down: Vec<usize> = (0..dim).filter(|b| b.count_ones() == 1).collect();
    let tops = gram_schmidt(one_down.iter().map(|&b| e(b)), std::slice::from_ref(&quintet[1]), 3);
    let triplets: Vec<Vec<DVector<f64>>> = tops.into_iter().map(|t| ladder(t, 2)).collect();

    // Singlets: two-down states orthogonal to |2,0⟩ and every |1,0⟩.
    let two_down: Vec<usize> = (0..dim).filter(|b| b.count_ones() == 2).collect();
    let mut taken = vec![quintet[2].clone()];
    taken.extend(triplets.iter().map(|t| t[1].clone()));
    let singlets = gram_schmidt(two_down.iter().map(|&b| e(b)), &taken, 2);

    let mut columns = quintet;
    columns.extend(triplets[0].iter().cloned());
    columns.extend(triplets[1].iter().cloned());
    columns.push(singlets[0].clone());
    columns.extend(triplets[2].iter().cloned());
    columns.push(singlets[1].clone());
    DMatrix::from_columns(&columns)
}

/// Orthonormalises `candidates` against `existing`, keeping the first `count` survivors.
fn gram_schmidt(candidates: impl Iterator<Item = DVector<f64>>, existing: &[DVector<f64>], count: usize) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = existing.to_vec();
    let mut found = Vec::with_capacity(count);
    for mut v in candidates {
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dot(&v);
                v -= b * overlap;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v /= norm;
            basis.push(v.clone());
            found.push(v);
            if found.len() == count {
                break;
            }
        }
    }
    found
}
