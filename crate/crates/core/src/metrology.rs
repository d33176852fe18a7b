//! Parameter scans, optimal-field search and robustness to field noise.

use std::fmt;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;

use crate::analytic::critical_lines;
use crate::error::{domain, Error, Result};
use crate::estimation::{magnetization_fisher, qfi_from_generator, qfi_temperature_from, Parameter, QfiBreakdown};
use crate::spin_model::{build_hamiltonian, hamiltonian_derivative, Coupling, ModelParams};
use crate::thermal_spectra::{eigendecompose, gibbs_ensemble, spectral_gap};

/// Largest number of points a single scan may contain.
pub const MAX_SCAN_POINTS: usize = 10_000_000;

/// Result columns a scan can compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    /// `G_γ` with its classical/quantum split.
    AnisotropyQfi,
    /// `G_β`.
    TemperatureQfi,
    /// Fisher information of the total magnetization for `γ`.
    MagnetizationFisher,
    /// `E_1 - E_0`.
    Gap,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [
        Quantity::AnisotropyQfi,
        Quantity::TemperatureQfi,
        Quantity::MagnetizationFisher,
        Quantity::Gap,
    ];
}

/// Rectangular grid of `(γ, h, β)` values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub gammas: Vec<f64>,
    pub fields: Vec<f64>,
    pub betas: Vec<f64>,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.gammas.len() * self.fields.len() * self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point `index` in gamma-major, then field, then beta order.
    pub fn point(&self, index: usize) -> (f64, f64, f64) {
        let nb = self.betas.len();
        let nf = self.fields.len();
        let b = index % nb;
        let f = (index / nb) % nf;
        let g = index / (nb * nf);
        (self.gammas[g], self.fields[f], self.betas[b])
    }
}

/// One evaluated grid point. Values not requested, or lost to an error, are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub gamma: f64,
    pub field: f64,
    pub beta: f64,
    pub g_gamma: Option<QfiBreakdown>,
    pub g_beta: Option<f64>,
    pub fi_magnetization: Option<f64>,
    pub gap: Option<f64>,
    /// `None` on success, otherwise the error that stopped this point.
    pub error: Option<Error>,
}

/// Rows of a scan in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub n_sites: usize,
    pub grid: GridSpec,
    pub rows: Vec<ScanRow>,
}

impl ScanTable {
    pub fn failures(&self) -> impl Iterator<Item = &ScanRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }
}

fn evaluate_row(n_sites: usize, gamma: f64, field: f64, beta: f64, quantities: &[Quantity]) -> ScanRow {
    let mut row = ScanRow {
        gamma,
        field,
        beta,
        g_gamma: None,
        g_beta: None,
        fi_magnetization: None,
        gap: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let params = ModelParams::new(n_sites, gamma, field)?;
        let spectrum = eigendecompose(&build_hamiltonian(&params)?)?;
        let gibbs = gibbs_ensemble(&spectrum, beta)?;
        for q in quantities {
            match q {
                Quantity::AnisotropyQfi => {
                    row.g_gamma = Some(qfi_from_generator(&gibbs, &hamiltonian_derivative(&params, Coupling::Anisotropy)?)?)
                }
                Quantity::TemperatureQfi => row.g_beta = Some(qfi_temperature_from(&gibbs)?.total),
                Quantity::MagnetizationFisher => row.fi_magnetization = Some(magnetization_fisher(&params, Parameter::Anisotropy, beta)?),
                Quantity::Gap => row.gap = Some(spectral_gap(&spectrum)?),
            }
        }
        Ok(())
    })();
    row.error = result.err();
    row
}

/// Evaluates `quantities` on every grid point in parallel.
///
/// Per-point numerical failures are stored in the row; only invalid grids
/// are rejected up front.
pub fn scan(n_sites: usize, grid: &GridSpec, quantities: &[Quantity]) -> Result<ScanTable> {
    crate::spin_model::check_size(n_sites)?;
    let total = grid.len();
    if total == 0 {
        return Err(domain("grid points", 0.0, "every axis needs at least one value"));
    }
    if total > MAX_SCAN_POINTS {
        return Err(domain("grid points", total as f64, "exceeds the 1e7 point limit"));
    }
    for &g in &grid.gammas {
        if !(-1.0..=1.0).contains(&g) {
            return Err(domain("gamma", g, "scan axes must lie in [-1, 1]"));
        }
    }
    for &h in &grid.fields {
        if !(h >= 0.0) || !h.is_finite() {
            return Err(domain("field", h, "scan axes must be nonnegative"));
        }
    }
    for &b in &grid.betas {
        if !(b >= 0.0) || !b.is_finite() {
            return Err(domain("beta", b, "scan axes must be nonnegative"));
        }
    }
    let rows = (0..total)
        .into_par_iter()
        .map(|i| {
            let (g, h, b) = grid.point(i);
            evaluate_row(n_sites, g, h, b, quantities)
        })
        .collect();
    Ok(ScanTable {
        n_sites,
        grid: grid.clone(),
        rows,
    })
}

/// Which QFI the optimal-field search maximises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Anisotropy,
    Temperature,
}

/// Position of an optimum relative to its nearest level crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Above,
    Below,
    At,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Above => "above",
            Branch::Below => "below",
            Branch::At => "at",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalFieldResult {
    pub field_star: f64,
    pub qfi_at_star: f64,
    pub nearest_critical: f64,
    pub branch: Branch,
}

/// Grid and tolerance settings of [`optimal_field_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub h_max: f64,
    pub grid_step: f64,
    pub tolerance: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            h_max: 2.0,
            grid_step: 1e-3,
            tolerance: 1e-8,
        }
    }
}

/// Maxima of relative height below this are treated as numerical noise.
const NOISE_FLOOR: f64 = 1e-8;
/// Tie tolerance between global maxima.
const TIE_TOLERANCE: f64 = 1e-9;
/// A refined gap below this counts as a level crossing.
const CROSSING_GAP: f64 = 1e-7;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on `[a, b]`, to bracket width `tol`.
pub fn golden_section_max(mut f: impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x)?;
    let (xb, fb) = if fc >= fd { (c, fc) } else { (d, fd) };
    Ok(if fx >= fb { (x, fx) } else { (xb, fb) })
}

/// QFI and gap at one field value.
fn objective(n_sites: usize, gamma: f64, beta: f64, target: Target, field: f64) -> Result<(f64, f64)> {
    let params = ModelParams::new(n_sites, gamma, field)?;
    let spectrum = eigendecompose(&build_hamiltonian(&params)?)?;
    let gibbs = gibbs_ensemble(&spectrum, beta)?;
    let value = match target {
        Target::Anisotropy => qfi_from_generator(&gibbs, &hamiltonian_derivative(&params, Coupling::Anisotropy)?)?.total,
        Target::Temperature => qfi_temperature_from(&gibbs)?.total,
    };
    Ok((value, spectral_gap(&spectrum)?))
}

/// Refines a coarse-grid extremum of `f` at grid index `i`, widening the
/// bracket while the optimum sits on its edge.
fn refine(f: &mut impl FnMut(f64) -> Result<f64>, grid: &[f64], i: usize, tol: f64) -> Result<(f64, f64)> {
    let last = grid.len() - 1;
    let (mut lo, mut hi) = (i.saturating_sub(1), (i + 1).min(last));
    loop {
        let (x, fx) = golden_section_max(&mut *f, grid[lo], grid[hi], tol)?;
        let at_lo = lo > 0 && x - grid[lo] < 2.0 * tol;
        let at_hi = hi < last && grid[hi] - x < 2.0 * tol;
        if !(at_lo || at_hi) || hi - lo > 16 {
            // Endpoints are not probed by the golden search; keep them if they are better.
            let mut best = (x, fx);
            for idx in [lo, hi] {
                if idx == 0 || idx == last {
                    let fe = f(grid[idx])?;
                    if fe > best.1 {
                        best = (grid[idx], fe);
                    }
                }
            }
            return Ok(best);
        }
        if at_lo {
            lo -= 1;
        }
        if at_hi {
            hi += 1;
        }
    }
}

/// Fields in `[0, h_max]` where the two lowest levels cross, located from the
/// gap on the coarse grid and refined by golden section.
fn crossings(n_sites: usize, gamma: f64, grid: &[f64], gaps: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut found = Vec::new();
    let last = grid.len() - 1;
    let mut neg_gap = |h: f64| -> Result<f64> {
        let params = ModelParams::new(n_sites, gamma, h)?;
        Ok(-spectral_gap(&eigendecompose(&build_hamiltonian(&params)?)?)?)
    };
    for i in 0..=last {
        let left = if i == 0 { f64::INFINITY } else { gaps[i - 1] };
        let right = if i == last { f64::INFINITY } else { gaps[i + 1] };
        if gaps[i] < left && gaps[i] <= right {
            let (x, neg) = refine(&mut neg_gap, grid, i, tol)?;
            if -neg < CROSSING_GAP {
                found.push(x);
            }
        }
    }
    // Report exact positions where the analytic lines are known.
    if let Ok(lines) = critical_lines(n_sites, gamma) {
        for x in &mut found {
            if let Some(&l) = lines.iter().find(|&&l| (l - *x).abs() < 1e-6) {
                *x = l;
            }
        }
    }
    Ok(found)
}

/// An optimum within `at_tol` of its crossing is reported as [`Branch::At`].
fn classify(h: f64, crossings: &[f64], at_tol: f64) -> Option<(usize, f64, Branch)> {
    crossings
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - h).abs().total_cmp(&(b.1 - h).abs()))
        .map(|(k, &hc)| {
            let branch = if (h - hc).abs() <= at_tol {
                Branch::At
            } else if h > hc {
                Branch::Above
            } else {
                Branch::Below
            };
            (k, hc, branch)
        })
}

/// [`optimal_field_with`] using the default search settings (`h ∈ [0, 2]`,
/// coarse step `1e-3`, refinement to `1e-8`).
pub fn optimal_field(n_sites: usize, gamma: f64, beta: f64, target: Target) -> Result<Vec<OptimalFieldResult>> {
    optimal_field_with(n_sites, gamma, beta, target, &SearchOptions::default())
}

/// Locates the field maximising the chosen QFI.
///
/// Optima within one coarse grid step of a level crossing are labelled
/// [`Branch::At`].
///
/// For [`Target::Anisotropy`] every maximiser within `1e-9` relative of the
/// global maximum is returned, sorted by field. For [`Target::Temperature`]
/// the best maximum on each side of each level crossing is returned.
pub fn optimal_field_with(
    n_sites: usize,
    gamma: f64,
    beta: f64,
    target: Target,
    options: &SearchOptions,
) -> Result<Vec<OptimalFieldResult>> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(domain("gamma", gamma, "optimal-field search needs γ ∈ [0, 1]"));
    }
    if !(beta > 0.0) {
        return Err(domain("beta", beta, "must be positive"));
    }
    if !(options.h_max > 0.0) || !(options.grid_step > 0.0) {
        return Err(domain("h_max", options.h_max, "search interval and step must be positive"));
    }
    let points = (options.h_max / options.grid_step).round() as usize;
    let grid: Vec<f64> = (0..=points).map(|i| options.h_max * i as f64 / points as f64).collect();
    let samples: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&h| objective(n_sites, gamma, beta, target, h))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let gaps: Vec<f64> = samples.iter().map(|s| s.1).collect();

    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max - min < 1e-30 {
        return Err(Error::NoMaximum);
    }

    let mut f = |h: f64| objective(n_sites, gamma, beta, target, h).map(|v| v.0);
    let last = grid.len() - 1;
    let mut maxima = Vec::new();
    for i in 0..=last {
        let left = if i == 0 { f64::NEG_INFINITY } else { values[i - 1] };
        let right = if i == last { f64::NEG_INFINITY } else { values[i + 1] };
        if values[i] > left && values[i] >= right && values[i] >= NOISE_FLOOR * max {
            maxima.push(refine(&mut f, &grid, i, options.tolerance)?);
        }
    }

    let lines = crossings(n_sites, gamma, &grid, &gaps, options.tolerance)?;
    if lines.is_empty() {
        return Err(Error::NoCriticalLine {
            n_sites,
            gamma,
            h_max: options.h_max,
        });
    }

    let mut results: Vec<OptimalFieldResult> = match target {
        Target::Anisotropy => {
            let best = maxima.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
            maxima
                .iter()
                .filter(|m| m.1 >= best * (1.0 - TIE_TOLERANCE))
                .map(|&(h, g)| {
                    let (_, hc, branch) = classify(h, &lines, options.grid_step).expect("lines nonempty");
                    OptimalFieldResult {
                        field_star: h,
                        qfi_at_star: g,
                        nearest_critical: hc,
                        branch,
                    }
                })
                .collect()
        }
        Target::Temperature => {
            let mut best: Vec<((usize, Branch), OptimalFieldResult)> = Vec::new();
            for &(h, g) in &maxima {
                let (k, hc, branch) = classify(h, &lines, options.grid_step).expect("lines nonempty");
                let candidate = OptimalFieldResult {
                    field_star: h,
                    qfi_at_star: g,
                    nearest_critical: hc,
                    branch,
                };
                match best.iter_mut().find(|(key, _)| *key == (k, branch)) {
                    Some((_, existing)) if existing.qfi_at_star >= g => {}
                    Some((_, existing)) => *existing = candidate,
                    None => best.push(((k, branch), candidate)),
                }
            }
            best.into_iter().map(|(_, r)| r).collect()
        }
    };
    results.sort_by(|a, b| a.field_star.total_cmp(&b.field_star));
    Ok(results)
}

/// Level crossing on which the anisotropy QFI is globally largest.
pub fn principal_critical_field(n_sites: usize, gamma: f64) -> Result<f64> {
    let lines = critical_lines(n_sites, gamma)?;
    Ok(*lines.last().expect("critical_lines returns at least one line"))
}

/// Number of Gauss-Legendre nodes used by [`robustness_ratio`].
pub const ROBUSTNESS_NODES: usize = 41;

/// Ratio `ξ` between the anisotropy QFI averaged over a Gaussian field
/// distribution (mean `h_c`, width `sigma`, truncated to `h ≥ 0` and
/// renormalised) and the QFI at `h_c`.
pub fn robustness_ratio(n_sites: usize, gamma: f64, beta: f64, sigma: f64) -> Result<f64> {
    robustness_ratio_with_nodes(n_sites, gamma, beta, sigma, ROBUSTNESS_NODES)
}

/// [`robustness_ratio`] with a chosen quadrature order.
pub fn robustness_ratio_with_nodes(n_sites: usize, gamma: f64, beta: f64, sigma: f64, nodes: usize) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(domain("sigma", sigma, "must be positive"));
    }
    let hc = principal_critical_field(n_sites, gamma)?;
    let qfi = |h: f64| -> Result<f64> {
        let params = ModelParams::new(n_sites, gamma, h)?;
        let gibbs = gibbs_ensemble(&eigendecompose(&build_hamiltonian(&params)?)?, beta)?;
        Ok(qfi_from_generator(&gibbs, &hamiltonian_derivative(&params, Coupling::Anisotropy)?)?.total)
    };
    let center = qfi(hc)?;
    if !(center > 0.0) {
        return Err(Error::NoMaximum);
    }
    let rule = GaussLegendre::new(nodes).map_err(|_| domain("nodes", nodes as f64, "need at least two nodes"))?;
    let (a, b) = ((hc - 6.0 * sigma).max(0.0), hc + 6.0 * sigma);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let terms: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .par_iter()
        .map(|&(x, w)| {
            let h = mid + half * x;
            let density = (-0.5 * ((h - hc) / sigma).powi(2)).exp();
            qfi(h).map(|g| (w * density * g, w * density))
        })
        .collect::<Result<_>>()?;
    let numerator: f64 = terms.iter().map(|t| t.0).sum();
    let norm: f64 = terms.iter().map(|t| t.1).sum();
    Ok(numerator / norm / center)
}
