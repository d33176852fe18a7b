//! Closed-form results for small chains and the two-level approximation.
//!
//! These are independent of the spectral machinery in [`crate::estimation`]
//! and serve as oracles for it.

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Error, Result};

/// Shorthands `u = γ - 1`, `v = γ + 1`, `r = √(u² + 16h²)` and `κ = β(1 + γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams {
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub kappa: f64,
}

impl ReducedParams {
    pub fn new(gamma: f64, field: f64, beta: f64) -> Self {
        let u = gamma - 1.0;
        let v = gamma + 1.0;
        Self {
            u,
            v,
            r: (u * u + 16.0 * field * field).sqrt(),
            kappa: beta * v,
        }
    }
}

/// `cosh(x)·e^{-m}` without overflow for large `x` and `m`.
fn scaled_cosh(x: f64, m: f64) -> f64 {
    0.5 * ((x - m).exp() + (-x - m).exp())
}

/// `sinh(x)·e^{-m}`.
fn scaled_sinh(x: f64, m: f64) -> f64 {
    0.5 * ((x - m).exp() - (-x - m).exp())
}

/// Two-site partition function `2cosh(βv/2) + 2cosh(βr/2)` times `e^{-βM}`, `M = max(|v|, r)/2`.
fn scaled_partition(rp: &ReducedParams, beta: f64) -> (f64, f64) {
    let m = beta * rp.v.abs().max(rp.r) / 2.0;
    let z = 2.0 * scaled_cosh(beta * rp.v / 2.0, m) + 2.0 * scaled_cosh(beta * rp.r / 2.0, m);
    (z, m)
}

/// Anisotropy QFI of the two-site chain.
///
/// The weights are rescaled by the largest Boltzmann factor so that the
/// formula stays finite for `β` up to `1e4` and beyond.
pub fn qfi_gamma_n2(gamma: f64, field: f64, beta: f64) -> Result<f64> {
    let rp = ReducedParams::new(gamma, field, beta);
    let (u, v, r) = (rp.u, rp.v, rp.r);
    if r == 0.0 {
        return Err(Error::SingularPoint("r = 0 (γ = 1, h = 0)"));
    }
    if beta == 0.0 {
        return Ok(0.0);
    }
    let (z, m) = scaled_partition(&rp, beta);
    let h2 = field * field;
    let numerator = 4.0 * (8.0 * h2 + u * u) * (-2.0 * m).exp()
        + (u - r).powi(2) * scaled_cosh(beta * (v + r) / 2.0, 2.0 * m)
        + (u + r).powi(2) * scaled_cosh(beta * (v - r) / 2.0, 2.0 * m);
    let classical_like = 0.5 * beta * beta * numerator / (z * z);
    let x = beta * r / 2.0;
    let mixing = 32.0 * h2 / (r * r) * scaled_sinh(x, m) * x.tanh() / z;
    Ok((classical_like + mixing) / (r * r))
}

/// Anisotropy QFI of the two-site chain on its level crossing `h = √γ/2`.
pub fn qfi_gamma_n2_critical(gamma: f64, beta: f64) -> f64 {
    let kappa = beta * (1.0 + gamma);
    let e = (-kappa.abs()).exp();
    let sech2 = 4.0 * e / (1.0 + e).powi(2);
    (8.0 * gamma + kappa * kappa + gamma * (gamma * kappa * kappa - 8.0) * sech2) / (4.0 * (1.0 + gamma).powi(4))
}

/// `e^{+β(v-r)/2}` for `h ≥ √γ/2`, `e^{-β(v-r)/2}` below.
fn low_temperature_factor(gamma: f64, field: f64, beta: f64, rp: &ReducedParams) -> f64 {
    let exponent = 0.5 * beta * (rp.v - rp.r);
    if field >= gamma.max(0.0).sqrt() / 2.0 {
        exponent.exp()
    } else {
        (-exponent).exp()
    }
}

/// Tabulated low-temperature expression `β²(u + r)²/(8r²)·e^{∓β(v - r)/2}`.
///
/// It reproduces the exponent (the gap) but not the prefactor of
/// [`qfi_gamma_n2`]. For a quantitative approximation below the crossing use
/// [`two_level_qfi`] with [`TwoLevelModel::two_site`].
pub fn qfi_gamma_n2_asymptotic(gamma: f64, field: f64, beta: f64) -> f64 {
    let rp = ReducedParams::new(gamma, field, beta);
    beta * beta * (rp.u + rp.r).powi(2) / (8.0 * rp.r * rp.r) * low_temperature_factor(gamma, field, beta, &rp)
}

/// Temperature QFI (energy variance) of the two-site chain, `β > 0`.
pub fn qfi_beta_n2(gamma: f64, field: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(domain("beta", beta, "must be positive"));
    }
    let rp = ReducedParams::new(gamma, field, beta);
    let (v, r) = (rp.v, rp.r);
    let (z, m) = scaled_partition(&rp, beta);
    let numerator = (v * v + r * r) * (-2.0 * m).exp()
        + 0.5 * (v - r).powi(2) * scaled_cosh(beta * (v + r) / 2.0, 2.0 * m)
        + 0.5 * (v + r).powi(2) * scaled_cosh(beta * (v - r) / 2.0, 2.0 * m);
    Ok(numerator / (z * z))
}

/// Low-temperature form of [`qfi_beta_n2`].
pub fn qfi_beta_n2_asymptotic(gamma: f64, field: f64, beta: f64) -> f64 {
    let rp = ReducedParams::new(gamma, field, beta);
    0.25 * (rp.v - rp.r).powi(2) * low_temperature_factor(gamma, field, beta, &rp)
}

/// Fields at which the two lowest levels cross, for `N ∈ {2, 3, 4}`.
pub fn critical_lines(n_sites: usize, gamma: f64) -> Result<Vec<f64>> {
    if !(gamma >= 0.0) {
        return Err(domain("gamma", gamma, "critical lines need γ ≥ 0"));
    }
    let s = gamma.sqrt();
    match n_sites {
        2 => Ok(vec![s / 2.0]),
        3 => Ok(vec![2.0 * s / 3.0]),
        4 => Ok(vec![s / 4.0, 3.0 * s / 4.0]),
        n => Err(Error::UnsupportedSize(n)),
    }
}

/// Eigenvalues and eigenvectors (columns) of a small chain.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSpectrum {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

fn unit(v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    v / n
}

/// Picks the first parametrisation with a usable norm, else `fallback`.
fn first_regular(candidates: [DVector<f64>; 2], fallback: DVector<f64>) -> DVector<f64> {
    let scale = candidates.iter().map(|c| c.amax()).fold(1.0, f64::max);
    for c in candidates {
        if c.norm() > 1e-12 * scale {
            return unit(c);
        }
    }
    fallback
}

fn basis_vector(dim: usize, entries: &[(usize, f64)]) -> DVector<f64> {
    let mut v = DVector::zeros(dim);
    for &(i, x) in entries {
        v[i] += x;
    }
    v
}

/// Two-site eigensystem in the order `-v/2, v/2, -r/2, r/2`.
///
/// Eigenvectors are in the basis of [`crate::spin_model::build_hamiltonian`].
/// The tabulated form [`hamiltonian_n2`] uses the opposite sign on the
/// `|↑↑⟩ ↔ |↓↓⟩` coupling; its eigenvectors are these ones with the last
/// component negated.
pub fn spectrum_n2(gamma: f64, field: f64) -> Result<AnalyticSpectrum> {
    let ReducedParams { u, v, r, .. } = ReducedParams::new(gamma, field, 0.0);
    if r == 0.0 {
        return Err(Error::SingularPoint("r = 0 (γ = 1, h = 0)"));
    }
    let h4 = 4.0 * field;
    let e = |entries: &[(usize, f64)]| basis_vector(4, entries);
    let u3 = first_regular([e(&[(0, -(h4 + r)), (3, u)]), e(&[(0, -u), (3, r - h4)])], e(&[(0, 1.0)]));
    let u4 = first_regular([e(&[(0, u), (3, h4 + r)]), e(&[(0, r - h4), (3, u)])], e(&[(3, 1.0)]));
    let columns = [unit(e(&[(1, 1.0), (2, 1.0)])), unit(e(&[(1, -1.0), (2, 1.0)])), u3, u4];
    Ok(AnalyticSpectrum {
        eigenvalues: DVector::from_vec(vec![-v / 2.0, v / 2.0, -r / 2.0, r / 2.0]),
        eigenvectors: DMatrix::from_columns(&columns),
    })
}

/// `Δ_± = 2√(1 + 9h² ± 3hv + γu)`.
pub fn n3_delta(gamma: f64, field: f64, sign: f64) -> f64 {
    let ReducedParams { u, v, .. } = ReducedParams::new(gamma, field, 0.0);
    2.0 * (1.0 + 9.0 * field * field + sign * 3.0 * field * v + gamma * u).sqrt()
}

/// Three-site eigensystem `μ_1 … μ_8`.
///
/// `μ_{1,2}` and `μ_{3,4}` are degenerate pairs; their eigenvectors are
/// orthonormalised. The paired vectors `v_5 … v_8` switch to an equivalent
/// parametrisation when the primary one degenerates (e.g. `u = 0`).
pub fn spectrum_n3(gamma: f64, field: f64) -> Result<AnalyticSpectrum> {
    let ReducedParams { u, v, .. } = ReducedParams::new(gamma, field, 0.0);
    let h = field;
    let dm = n3_delta(gamma, field, -1.0);
    let dp = n3_delta(gamma, field, 1.0);
    let delta_p = -6.0 * h + v;
    let delta_m = -6.0 * h - v;
    let e = |entries: &[(usize, f64)]| basis_vector(8, entries);
    // s = e3 + e5 + e6 (two down), t = e1 + e2 + e4 (one down)
    let with_s = |a: f64, b: f64| e(&[(0, a), (3, b), (5, b), (6, b)]);
    let with_t = |a: f64, b: f64| e(&[(1, a), (2, a), (4, a), (7, b)]);

    let v1 = unit(e(&[(1, -1.0), (4, 1.0)]));
    let v2 = gram_schmidt_pair(&v1, e(&[(1, -1.0), (2, 1.0)]));
    let v3 = unit(e(&[(3, -1.0), (6, 1.0)]));
    let v4 = gram_schmidt_pair(&v3, e(&[(3, -1.0), (5, 1.0)]));

    let s_hat = unit(with_s(0.0, 1.0));
    let t_hat = unit(with_t(1.0, 0.0));
    let e0 = e(&[(0, 1.0)]);
    let e7 = e(&[(7, 1.0)]);
    let v5 = first_regular([with_s(delta_p - dm, u), with_s(3.0 * u, -(delta_p + dm))], e0);
    let v6 = first_regular([with_s(delta_p + dm, u), with_s(3.0 * u, dm - delta_p)], s_hat);
    let v7 = first_regular([with_t(delta_m - dp, 3.0 * u), with_t(u, -(delta_m + dp))], t_hat);
    let v8 = first_regular([with_t(delta_m + dp, 3.0 * u), with_t(u, dp - delta_m)], e7);

    let eigenvalues = DVector::from_vec(vec![
        (v - 3.0 * h) / 3.0,
        (v - 3.0 * h) / 3.0,
        (v + 3.0 * h) / 3.0,
        (v + 3.0 * h) / 3.0,
        (-3.0 * h - v - dm) / 3.0,
        (-3.0 * h - v + dm) / 3.0,
        (3.0 * h - v - dp) / 3.0,
        (3.0 * h - v + dp) / 3.0,
    ]);
    Ok(AnalyticSpectrum {
        eigenvalues,
        eigenvectors: DMatrix::from_columns(&[v1, v2, v3, v4, v5, v6, v7, v8]),
    })
}

fn gram_schmidt_pair(first: &DVector<f64>, second: DVector<f64>) -> DVector<f64> {
    let overlap = first.dot(&second);
    unit(second - first * overlap)
}

/// Tabulated two-site Hamiltonian `-(1/2)[[4h,0,0,u],[0,0,v,0],[0,v,0,0],[u,0,0,-4h]]`.
///
/// Equal to `D H D` with `D = diag(1, 1, 1, -1)` and `H` the output of
/// [`crate::spin_model::build_hamiltonian`].
pub fn hamiltonian_n2(gamma: f64, field: f64) -> DMatrix<f64> {
    let ReducedParams { u, v, .. } = ReducedParams::new(gamma, field, 0.0);
    let h4 = 4.0 * field;
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        h4, 0.0, 0.0, u,
        0.0, 0.0, v, 0.0,
        0.0, v, 0.0, 0.0,
        u, 0.0, 0.0, -h4,
    ]);
    m * -0.5
}

/// Tabulated three-site Hamiltonian.
pub fn hamiltonian_n3(gamma: f64, field: f64) -> DMatrix<f64> {
    let ReducedParams { u, v, .. } = ReducedParams::new(gamma, field, 0.0);
    let (a, b) = (9.0 * field, 3.0 * field);
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(8, 8, &[
        a,   0.0, 0.0, -u,  0.0, -u,  -u,  0.0,
        0.0, b,   v,   0.0, v,   0.0, 0.0, -u,
        0.0, v,   b,   0.0, v,   0.0, 0.0, -u,
        -u,  0.0, 0.0, -b,  0.0, v,   v,   0.0,
        0.0, v,   v,   0.0, b,   0.0, 0.0, -u,
        -u,  0.0, 0.0, v,   0.0, -b,  v,   0.0,
        -u,  0.0, 0.0, v,   0.0, v,   -b,  0.0,
        0.0, -u,  -u,  0.0, -u,  0.0, 0.0, -a,
    ]);
    m * (-1.0 / 3.0)
}

/// Blocks `A` (5×5), `B` (3×3, appearing twice) and `C` (5×5) of the
/// four-site Hamiltonian in the basis of [`crate::spin_model::total_spin_basis_n4`].
pub fn blocks_n4(gamma: f64, field: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let ReducedParams { u, v, .. } = ReducedParams::new(gamma, field, 0.0);
    let h = field;
    let s6u = 6f64.sqrt() * u;
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(5, 5, &[
        16.0 * h, 0.0, -s6u, 0.0, 0.0,
        0.0, 3.0 * v + 8.0 * h, 0.0, -3.0 * u, 0.0,
        -s6u, 0.0, 4.0 * v, 0.0, -s6u,
        0.0, -3.0 * u, 0.0, 3.0 * v - 8.0 * h, 0.0,
        0.0, 0.0, -s6u, 0.0, -16.0 * h,
    ]) * -0.25;
    #[rustfmt::skip]
    let b = DMatrix::from_row_slice(3, 3, &[
        v - 8.0 * h, 0.0, u,
        0.0, 0.0, 0.0,
        u, 0.0, v + 8.0 * h,
    ]) * 0.25;
    #[rustfmt::skip]
    let c = DMatrix::from_row_slice(5, 5, &[
        2.0 * v, 0.0, 0.0, 0.0, 0.0,
        0.0, v - 8.0 * h, 0.0, u, 0.0,
        0.0, 0.0, 0.0, 0.0, 0.0,
        0.0, u, 0.0, v + 8.0 * h, 0.0,
        0.0, 0.0, 0.0, 0.0, 2.0 * v,
    ]) * 0.25;
    (a, b, c)
}

/// A gap `x(a, b)` between the two lowest levels and its `a`-derivative.
pub struct TwoLevelModel {
    gap_fn: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    gap_gradient: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl TwoLevelModel {
    pub fn new(
        gap_fn: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        gap_gradient: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            gap_fn: Box::new(gap_fn),
            gap_gradient: Box::new(gap_gradient),
        }
    }

    /// Two-site chain with `a = γ`, `b = h`: `x = |v - r|/2`.
    pub fn two_site() -> Self {
        Self::new(
            |gamma, h| {
                let rp = ReducedParams::new(gamma, h, 0.0);
                (rp.v - rp.r).abs() / 2.0
            },
            |gamma, h| {
                let rp = ReducedParams::new(gamma, h, 0.0);
                (rp.v - rp.r).signum() * (1.0 - rp.u / rp.r) / 2.0
            },
        )
    }

    pub fn gap(&self, a: f64, b: f64) -> f64 {
        (self.gap_fn)(a, b)
    }

    pub fn gap_gradient(&self, a: f64, b: f64) -> f64 {
        (self.gap_gradient)(a, b)
    }
}

/// `e^{y}/(1 + e^{y})²`, even in `y`.
fn logistic_density(y: f64) -> f64 {
    let e = (-y.abs()).exp();
    e / (1.0 + e).powi(2)
}

/// QFI for `a` when only the two lowest levels are populated.
pub fn two_level_qfi(model: &TwoLevelModel, a: f64, b: f64, beta: f64) -> f64 {
    let x = model.gap(a, b);
    beta * beta * logistic_density(beta * x) * model.gap_gradient(a, b).powi(2)
}

/// `F(y) = y² e^y / (1 + e^y)²`.
pub fn thermometry_function(y: f64) -> f64 {
    y * y * logistic_density(y)
}

/// Two-level temperature QFI `F(βx)/β²`.
pub fn two_level_thermometry(x: f64, beta: f64) -> f64 {
    thermometry_function(beta * x) / (beta * beta)
}

/// Positive root of `(y - 2)e^y = y + 2`, where `F` is maximal.
pub fn optimal_y() -> f64 {
    let g = |y: f64| (y - 2.0) * y.exp() - (y + 2.0);
    let (mut lo, mut hi) = (2.0f64, 3.0f64);
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `F(y_opt) = (y_opt² - 4)/4`.
pub fn optimal_thermometry_value() -> f64 {
    let y = optimal_y();
    (y * y - 4.0) / 4.0
}

/// Fisher information of a two-outcome measurement on a mixture of two
/// states, `P(x₁) = pq + (1-p)(1-q)`.
pub fn two_outcome_fisher(p: f64, q: f64, dp: f64, dq: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("p", p, "must lie in (0, 1)"));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(domain("q", q, "must lie in (0, 1)"));
    }
    let p1 = p * q + (1.0 - p) * (1.0 - q);
    let p2 = 1.0 - p1;
    if p1 <= 0.0 || p2 <= 0.0 {
        return Err(Error::DegenerateMeasurement { p1 });
    }
    let dp1 = dp * (2.0 * q - 1.0) + dq * (2.0 * p - 1.0);
    Ok(dp1 * dp1 / (p1 * p2))
}

/// `∂p` of the ground-state population `p = 1/(1 + e^{-βε})` of a two-level
/// system with gap `ε`, given `∂ε`.
pub fn thermal_derivative_weight(epsilon: f64, beta: f64, d_epsilon: f64) -> f64 {
    beta * logistic_density(beta * epsilon) * d_epsilon
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Literal, unscaled evaluation of the anisotropy display.
    fn gamma_display(gamma: f64, h: f64, beta: f64) -> f64 {
        let ReducedParams { u, v, r, .. } = ReducedParams::new(gamma, h, beta);
        let k1 = (-0.5 * beta * (v - r)).exp()
            * (0.5 * (u - r).powi(2)
                + 4.0 * (8.0 * h * h + u * u) * (0.5 * beta * (v + r)).exp()
                + 0.5 * (u - r).powi(2) * (beta * (v + r)).exp()
                + 0.5 * (u + r).powi(2) * (beta * r).exp()
                + 0.5 * (u + r).powi(2) * (v * beta).exp());
        let k2 = (1.0 + (beta * r).exp() + (0.5 * beta * (v + r)).exp() + (-0.5 * beta * (v - r)).exp()).powi(2);
        (beta * beta * k1 / (2.0 * k2) + 16.0 * h * h / (r * r) * (1.0 - (beta * r).exp()).powi(2) / ((1.0 + (beta * r).exp()) * k2.sqrt()))
            / (r * r)
    }

    /// Literal temperature display, with `first` the coefficient of the leading term.
    fn beta_display(gamma: f64, h: f64, beta: f64, first: f64) -> f64 {
        let ReducedParams { v, r, .. } = ReducedParams::new(gamma, h, beta);
        let k3 = (0.5 * beta * (v + r)).exp()
            * (0.5 * first
                + 4.0 * (1.0 + 8.0 * h * h + gamma * gamma) * (0.5 * beta * (v + r)).exp()
                + 0.5 * (v - r).powi(2) * (beta * (v + r)).exp()
                + 0.5 * (v + r).powi(2) * (beta * r).exp()
                + 0.5 * (v + r).powi(2) * (beta * v).exp());
        let k4 =
            ((0.5 * beta * v).exp() + (0.5 * beta * r).exp() + (0.5 * beta * (v + 2.0 * r)).exp() + (beta * (v + 0.5 * r)).exp()).powi(2);
        0.5 * k3 / k4
    }

    #[test]
    fn regrouped_gamma_form_matches_display() {
        for &(g, h) in &[(0.5, 0.3), (0.2, 0.9), (0.9, 0.05), (0.36, 0.3)] {
            for beta in [0.5, 5.0, 30.0] {
                let a = qfi_gamma_n2(g, h, beta).unwrap();
                let b = gamma_display(g, h, beta);
                assert!((a - b).abs() < 1e-12 * b, "{g} {h} {beta}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn regrouped_beta_form_matches_corrected_display() {
        for &(g, h) in &[(0.5, 0.4), (0.2, 0.9), (0.9, 0.05)] {
            for beta in [0.5, 5.0, 30.0] {
                let rp = ReducedParams::new(g, h, beta);
                let a = qfi_beta_n2(g, h, beta).unwrap();
                let b = beta_display(g, h, beta, (rp.v - rp.r).powi(2));
                assert!((a - b).abs() < 1e-12 * b);
            }
        }
        // With (v + r)² as the leading coefficient the display no longer equals the variance.
        let rp = ReducedParams::new(0.5, 0.4, 1.0);
        let printed = beta_display(0.5, 0.4, 1.0, (rp.v + rp.r).powi(2));
        let exact = qfi_beta_n2(0.5, 0.4, 1.0).unwrap();
        assert!((printed - exact).abs() > 1e-2 * exact);
    }

    #[test]
    fn zero_temperature_limits() {
        assert_eq!(qfi_gamma_n2(0.5, 0.353553, 0.0).unwrap(), 0.0);
        assert!(matches!(qfi_gamma_n2(1.0, 0.0, 1.0), Err(Error::SingularPoint(_))));
        let beta: f64 = 7.0;
        assert!((qfi_gamma_n2_critical(0.0, beta) - beta * beta / 4.0).abs() < 1e-12);
    }

    #[test]
    fn critical_value_matches_general_form() {
        for &(g, beta) in &[(0.5f64, 20.0), (0.36, 100.0), (0.1, 3.0)] {
            let h = g.sqrt() / 2.0;
            let a = qfi_gamma_n2_critical(g, beta);
            let b = qfi_gamma_n2(g, h, beta).unwrap();
            assert!((a - b).abs() < 1e-10 * a);
        }
    }

    #[test]
    fn critical_value_grows_as_beta_squared() {
        let ratio = qfi_gamma_n2_critical(0.5, 200.0) / (200.0 * 200.0);
        assert!((ratio - 1.0 / 9.0).abs() < 0.01 / 9.0);
    }

    #[test]
    fn very_low_temperature_is_finite() {
        let g = qfi_gamma_n2(0.5, 0.2, 1e4).unwrap();
        assert!(g.is_finite());
        let g = qfi_beta_n2(0.5, 0.2, 1e4).unwrap();
        assert!(g.is_finite());
    }

    #[test]
    fn asymptotic_forms() {
        let two_level = two_level_qfi(&TwoLevelModel::two_site(), 0.5, 0.25, 100.0);
        let exact = qfi_gamma_n2(0.5, 0.25, 100.0).unwrap();
        assert!((two_level / exact - 1.0).abs() < 0.02);

        let rp = ReducedParams::new(0.5, 0.25, 0.0);
        let slope =
            (qfi_gamma_n2_asymptotic(0.5, 0.25, 101.0) / qfi_gamma_n2_asymptotic(0.5, 0.25, 100.0) * (100.0f64 / 101.0).powi(2)).ln();
        assert!((slope + (rp.v - rp.r) / 2.0).abs() < 1e-12);

        let hc: f64 = 0.5f64.sqrt() / 2.0;
        let rp = ReducedParams::new(0.5, hc, 0.0);
        let at = qfi_gamma_n2_asymptotic(0.5, hc, 80.0);
        assert!((at - 80.0f64.powi(2) * (rp.u + rp.r).powi(2) / (8.0 * rp.r * rp.r)).abs() < 1e-8 * at);
        let below = qfi_gamma_n2_asymptotic(0.5, hc * (1.0 - 1e-12), 80.0);
        assert!((below - at).abs() < 1e-8 * at);
        let below = qfi_beta_n2_asymptotic(0.5, hc * (1.0 - 1e-12), 80.0);
        assert!((below - qfi_beta_n2_asymptotic(0.5, hc, 80.0)).abs() < 1e-20);
    }

    #[test]
    fn beta_form_at_high_temperature() {
        let rp = ReducedParams::new(0.3, 0.7, 0.0);
        let levels = [-rp.v / 2.0, rp.v / 2.0, -rp.r / 2.0, rp.r / 2.0];
        let var = levels.iter().map(|e| e * e).sum::<f64>() / 4.0;
        assert!((qfi_beta_n2(0.3, 0.7, 1e-9).unwrap() - var).abs() < 1e-8);
    }

    #[test]
    fn lines() {
        assert_eq!(critical_lines(2, 0.36).unwrap(), vec![0.3]);
        let l = critical_lines(4, 0.64).unwrap();
        assert!((l[0] - 0.2).abs() < 1e-15 && (l[1] - 0.6).abs() < 1e-15);
        assert_eq!(critical_lines(3, 0.0).unwrap(), vec![0.0]);
        assert!(critical_lines(5, 0.5).is_err());
        assert!(critical_lines(2, -0.1).is_err());
    }

    #[test]
    fn two_site_vectors_at_zero_field() {
        let s = spectrum_n2(0.5, 0.0).unwrap();
        let u3 = s.eigenvectors.column(2);
        let expected = DVector::from_vec(vec![-1.0, 0.0, 0.0, -1.0]) / 2f64.sqrt();
        assert!((u3 - expected).amax() < 1e-15);
    }

    #[test]
    fn two_level_pieces() {
        let m = TwoLevelModel::new(|_, _| 0.0, |_, _| 1.0);
        assert_eq!(two_level_qfi(&m, 0.0, 0.0, 10.0), 25.0);
        let flat = TwoLevelModel::new(|a, _| a, |_, _| 0.0);
        assert_eq!(two_level_qfi(&flat, 0.3, 0.0, 10.0), 0.0);
        assert_eq!(thermometry_function(0.0), 0.0);
        for y in [0.1, 1.0, 2.4, 10.0] {
            assert!((thermometry_function(y) - thermometry_function(-y)).abs() < 1e-12);
        }
    }

    #[test]
    fn thermometry_constants() {
        let y = optimal_y();
        assert!((y - 2.39936).abs() < 1e-4);
        assert!((optimal_thermometry_value() - 0.43923).abs() < 1e-4);
        assert!((thermometry_function(y) - optimal_thermometry_value()).abs() < 1e-14);
    }

    #[test]
    fn two_outcome() {
        assert_eq!(two_outcome_fisher(0.3, 0.5, 1.0, 0.0).unwrap(), 0.0);
        let f = two_outcome_fisher(0.7, 0.9, 1.0, 0.0).unwrap();
        assert!((f - 0.64 / (0.66 * 0.34)).abs() < 1e-12);
        assert!((f - 2.852).abs() < 1e-3);
        assert!(two_outcome_fisher(0.0, 0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn thermal_derivative() {
        assert_eq!(thermal_derivative_weight(0.0, 2.0, 3.0), 2.0 * 3.0 / 4.0);
        let (beta, eps) = (1.0, 50.0);
        let w = thermal_derivative_weight(eps, beta, 1.0);
        assert!((w / (beta * (-beta * eps as f64).exp()) - 1.0).abs() < 1e-20f64.max(2.0 * (-50.0f64).exp()));
    }
}
