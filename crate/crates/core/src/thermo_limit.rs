//! Large-N limit: Holstein-Primakoff boson with a Bogoliubov rotation.
//!
//! At leading order the collective spin becomes a single mode with
//! `H = ω a†a + λ (a² + a†²)`. The squeeze `S(Θ) = exp(Θ K)`,
//! `K = (a² − a†²)/2`, brings it to `Δ b†b`. Thermal states are
//! `S(Θ) ρ_th(Δ) S(Θ)†`, so eigenvectors depend on a parameter only through
//! `Θ` and eigenvalues only through `Δ`. Fock sums are truncated in the `b`
//! basis, where the `K` matrix elements are exact.

use crate::error::{domain, Error, Result};
use crate::estimation::{pair_contribution, Parameter, QfiBreakdown};

/// Largest Fock cutoff the QFI routines accept.
pub const MAX_CUTOFF: usize = 4096;
/// Tail bound `q^D (D+2)²` used to pick the cutoff.
const TAIL_TOLERANCE: f64 = 1e-13;
/// Smallest gap accepted by [`thermo_qfi`].
pub const MIN_GAP: f64 = 1e-6;
/// Closest approach to the transition accepted by [`bogoliubov_angle`].
const ANGLE_EXCLUSION: f64 = 1e-8;

fn check_point(gamma: f64, field: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&gamma) {
        return Err(domain("gamma", gamma, "must lie in [-1, 1]"));
    }
    if !(field >= 0.0) || !field.is_finite() {
        return Err(domain("field", field, "must be finite and nonnegative"));
    }
    Ok(())
}

/// Mode gap `Δ(γ, h)`: `2√((h−1)(h−γ))` for `h ≥ 1`, `2√((1−h²)(1−γ))` below.
pub fn gap(gamma: f64, field: f64) -> f64 {
    let (h, g) = (field, gamma);
    let s = if h >= 1.0 { (h - 1.0) * (h - g) } else { (1.0 - h * h) * (1.0 - g) };
    2.0 * s.max(0.0).sqrt()
}

/// Quadratic coefficients `(ω, λ)` and their derivatives in `(γ, h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub omega: f64,
    pub lambda: f64,
    pub d_omega: [f64; 2],
    pub d_lambda: [f64; 2],
}

/// Coefficients of `ω a†a + λ(a² + a†²)` in the ordered (`h ≥ 1`) or broken
/// phase. Derivative arrays are ordered `[∂_γ, ∂_h]`.
pub fn quadratic_form(gamma: f64, field: f64) -> QuadraticForm {
    let h = field;
    if h >= 1.0 {
        QuadraticForm {
            omega: 2.0 * h - 1.0 - gamma,
            lambda: 0.5 * (gamma - 1.0),
            d_omega: [-1.0, 2.0],
            d_lambda: [0.5, 0.0],
        }
    } else {
        QuadraticForm {
            omega: 2.0 - h * h - gamma,
            lambda: 0.5 * (gamma - h * h),
            d_omega: [-1.0, -2.0 * h],
            d_lambda: [0.5, -h],
        }
    }
}

impl QuadraticForm {
    /// `√(ω² − 4λ²)`.
    pub fn mode_gap(&self) -> f64 {
        ((self.omega - 2.0 * self.lambda) * (self.omega + 2.0 * self.lambda))
            .max(0.0)
            .sqrt()
    }

    /// `Θ` with `tanh 2Θ = −2λ/ω`.
    pub fn angle(&self) -> f64 {
        0.5 * (-2.0 * self.lambda / self.omega).atanh()
    }

    /// `∂Θ` along coordinate `k` (0 = γ, 1 = h).
    pub fn angle_derivative(&self, k: usize) -> f64 {
        let d = self.mode_gap();
        -(self.d_lambda[k] * self.omega - self.lambda * self.d_omega[k]) / (d * d)
    }

    /// `∂Δ` along coordinate `k` (0 = γ, 1 = h).
    pub fn gap_derivative(&self, k: usize) -> f64 {
        (self.omega * self.d_omega[k] - 4.0 * self.lambda * self.d_lambda[k]) / self.mode_gap()
    }
}

/// Bogoliubov angle `Θ(γ, h)`.
pub fn bogoliubov_angle(gamma: f64, field: f64) -> Result<f64> {
    check_point(gamma, field)?;
    if (field - 1.0).abs() < ANGLE_EXCLUSION || gap(gamma, field) < ANGLE_EXCLUSION {
        return Err(Error::NearCritical { gamma, field });
    }
    Ok(quadratic_form(gamma, field).angle())
}

/// Truncated single-mode model at one `(γ, h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BosonicModel {
    pub gamma: f64,
    pub field: f64,
    pub gap: f64,
    pub bog_angle: f64,
    pub cutoff: usize,
}

/// Smallest `D` with `q^D (D+2)² < 1e-13`, `q = e^{−βΔ}`.
pub fn required_cutoff(beta_gap: f64) -> usize {
    let log_q = -beta_gap;
    let mut d = 8usize;
    while d <= MAX_CUTOFF * 2 {
        let d2 = (d as f64 + 2.0).powi(2);
        if log_q * d as f64 + d2.ln() < TAIL_TOLERANCE.ln() {
            return d;
        }
        d += (d / 8).max(1);
    }
    d
}

impl BosonicModel {
    /// Builds the model with the cutoff chosen for inverse temperature `beta`.
    pub fn new(gamma: f64, field: f64, beta: f64) -> Result<Self> {
        let bog_angle = bogoliubov_angle(gamma, field)?;
        let gap = gap(gamma, field);
        if gap < MIN_GAP {
            return Err(Error::NearCritical { gamma, field });
        }
        if !(beta * gap >= 1e-8) || !beta.is_finite() {
            return Err(domain("beta", beta, "β·Δ must be at least 1e-8"));
        }
        let required = required_cutoff(beta * gap);
        if required > MAX_CUTOFF {
            return Err(Error::Truncation { required, cap: MAX_CUTOFF });
        }
        Ok(Self {
            gamma,
            field,
            gap,
            bog_angle,
            cutoff: required,
        })
    }

    /// Replaces the automatically chosen cutoff.
    pub fn with_cutoff(self, cutoff: usize) -> Result<Self> {
        if cutoff < 3 || cutoff > 2 * MAX_CUTOFF {
            return Err(domain("cutoff", cutoff as f64, "must lie in [3, 8192]"));
        }
        Ok(Self { cutoff, ..self })
    }

    /// Normalised thermal occupations `p_0 … p_{D−1}`.
    pub fn occupations(&self, beta: f64) -> Vec<f64> {
        let q = (-beta * self.gap).exp();
        let mut p = Vec::with_capacity(self.cutoff);
        let mut w = 1.0;
        for _ in 0..self.cutoff {
            p.push(w);
            w *= q;
        }
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= z);
        p
    }

    /// QFI of the truncated thermal state.
    pub fn qfi(&self, beta: f64, which: Parameter) -> QfiBreakdown {
        let p = self.occupations(beta);
        let mean_n: f64 = p.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
        let var_n: f64 = p.iter().enumerate().map(|(n, w)| w * (n as f64 - mean_n).powi(2)).sum();
        let k = match which {
            Parameter::Temperature => return QfiBreakdown::new(self.gap * self.gap * var_n, 0.0),
            Parameter::Anisotropy => 0,
            Parameter::Field => 1,
        };
        let form = quadratic_form(self.gamma, self.field);
        let d_gap = form.gap_derivative(k);
        let d_angle = form.angle_derivative(k);
        let classical = (beta * d_gap).powi(2) * var_n;
        // |⟨n+2|K|n⟩| = √((n+1)(n+2))/2 times the level spacing 2Δ.
        let spacing = 2.0 * self.gap;
        let quantum = (0..self.cutoff.saturating_sub(2))
            .map(|n| {
                let k_sq = 0.25 * ((n + 1) * (n + 2)) as f64;
                pair_contribution(p[n], p[n + 2], spacing, beta, d_angle * d_angle * k_sq * spacing * spacing)
            })
            .sum();
        QfiBreakdown::new(classical, quantum)
    }
}

/// Thermal QFI of the large-N model for `which ∈ {Anisotropy, Field, Temperature}`.
pub fn thermo_qfi(gamma: f64, field: f64, beta: f64, which: Parameter) -> Result<QfiBreakdown> {
    Ok(BosonicModel::new(gamma, field, beta)?.qfi(beta, which))
}

/// [`thermo_qfi`] with an explicit Fock cutoff.
pub fn thermo_qfi_with_cutoff(gamma: f64, field: f64, beta: f64, which: Parameter, cutoff: usize) -> Result<QfiBreakdown> {
    Ok(BosonicModel::new(gamma, field, beta)?.with_cutoff(cutoff)?.qfi(beta, which))
}

/// Single-mode energy variance `Δ² e^{βΔ}/(e^{βΔ} − 1)²`.
pub fn oscillator_variance(gap: f64, beta: f64) -> f64 {
    let x = beta * gap;
    let e = (-x).exp();
    let m = (-x).exp_m1();
    gap * gap * e / (m * m)
}

/// Near-critical expansions of the large-N QFIs, evaluated literally.
pub fn thermo_scaling(gamma: f64, field: f64, beta: f64, which: Parameter) -> Result<f64> {
    check_point(gamma, field)?;
    let (g, h, b) = (gamma, field, beta);
    match (which, h > 1.0) {
        (Parameter::Anisotropy, true) => Ok(9.0 / (4.0 * (h - 1.0).powi(2)) - 25.0 * b * b / 12.0),
        (Parameter::Anisotropy, false) => {
            if g == 1.0 {
                return Err(Error::NearCritical { gamma, field });
            }
            Ok(9.0 / (4.0 * (g - 1.0).powi(2)) - 25.0 * b * b * (h - 1.0) / (6.0 * (g - 1.0)))
        }
        (Parameter::Temperature, true) => Ok(1.0 / (b * b) + (g - 1.0) * (h - 1.0) / 3.0),
        (Parameter::Temperature, false) => Ok(1.0 / (b * b) - 2.0 * (g - 1.0) * (h - 1.0) / 3.0),
        (Parameter::Field, _) => Err(domain("which", 0.0, "no expansion is available for the field")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_examples() {
        assert_eq!(gap(0.3, 1.0), 0.0);
        assert!((gap(0.5, 2.0) - 2.449_489_742_783_178).abs() < 1e-12);
        assert!((gap(0.5, 0.5) - 1.224_744_871_391_589).abs() < 1e-12);
    }

    #[test]
    fn mode_gap_matches_phase_formulas() {
        for &(g, h) in &[(0.5, 2.0), (0.5, 0.5), (-0.7, 1.3), (0.9, 0.1), (0.0, 0.99)] {
            let f = quadratic_form(g, h);
            assert!((f.mode_gap() - gap(g, h)).abs() < 1e-12);
        }
    }

    #[test]
    fn angle_limits() {
        assert!(bogoliubov_angle(0.5, 50.0).unwrap().abs() < 0.01);
        assert_eq!(bogoliubov_angle(1.0, 1.5).unwrap(), 0.0);
        assert!(matches!(bogoliubov_angle(0.5, 1.0), Err(Error::NearCritical { .. })));
        assert!(matches!(bogoliubov_angle(1.0, 0.5), Err(Error::NearCritical { .. })));
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let step = 1e-6;
        for &(g, h) in &[(0.5, 1.5), (0.2, 0.4), (-0.3, 2.2)] {
            let f = quadratic_form(g, h);
            for k in 0..2 {
                let (gp, hp, gm, hm) = if k == 0 {
                    (g + step, h, g - step, h)
                } else {
                    (g, h + step, g, h - step)
                };
                let da = (quadratic_form(gp, hp).angle() - quadratic_form(gm, hm).angle()) / (2.0 * step);
                let dd = (gap(gp, hp) - gap(gm, hm)) / (2.0 * step);
                assert!((da - f.angle_derivative(k)).abs() <= 1e-7 * da.abs().max(1e-3));
                assert!((dd - f.gap_derivative(k)).abs() <= 1e-7 * dd.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn temperature_qfi_is_oscillator_variance() {
        let g = thermo_qfi(0.5, 1.3, 2.0, Parameter::Temperature).unwrap();
        let exact = oscillator_variance(gap(0.5, 1.3), 2.0);
        assert!((g.total - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn scaling_literals() {
        let v = thermo_scaling(0.5, 1.1, 2.0, Parameter::Anisotropy).unwrap();
        assert!((v - (225.0 - 100.0 / 12.0)).abs() < 1e-9);
        let t = thermo_scaling(0.5, 0.9, 3.0, Parameter::Temperature).unwrap();
        assert!((t - (1.0 / 9.0 - 0.1 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn cutoff_cap_is_enforced() {
        assert!(matches!(BosonicModel::new(0.5, 1.5, 1e-6), Err(Error::Truncation { .. })));
    }
}
