use lmg_metrology::estimation::Parameter;
use lmg_metrology::metrology::{optimal_field, principal_critical_field, robustness_ratio, scan, GridSpec, Quantity, Target};
use lmg_metrology::thermal_spectra::beta_from_temperature;
use lmg_metrology::thermo_limit::{self, thermo_qfi, thermo_qfi_with_cutoff, BosonicModel};
use lmg_metrology::{Error, MAX_SITES, MIN_SITES};
use rayon::prelude::*;

use crate::args::{BetaArgs, OptimalArgs, QuantityArg, RobustnessArgs, SurfaceArgs, TargetArg, ThermoArgs};
use crate::table::{Cell, Table};
use crate::{CliError, Output};

pub const SURFACE_COLUMNS: [&str; 11] = [
    "n_sites",
    "gamma",
    "field",
    "beta",
    "g_gamma_total",
    "g_gamma_classical",
    "g_gamma_quantum",
    "g_beta",
    "fi_magnetization",
    "gap",
    "status",
];

pub const OPTIMAL_COLUMNS: [&str; 9] = [
    "n_sites",
    "gamma",
    "beta",
    "target",
    "h_star",
    "qfi_at_star",
    "h_critical",
    "branch",
    "status",
];

pub const ROBUSTNESS_COLUMNS: [&str; 8] = ["n_sites", "gamma", "beta", "sigma", "sigma_relative", "h_critical", "xi", "status"];

pub const THERMO_COLUMNS: [&str; 11] = [
    "gamma",
    "field",
    "beta",
    "cutoff",
    "g_gamma_total",
    "g_gamma_classical",
    "g_gamma_quantum",
    "g_field_total",
    "g_beta",
    "gap",
    "status",
];

const OK: &str = "ok";

fn status(error: &Error) -> String {
    format!("failed: {error}")
}

/// Library errors caused by the arguments rather than by the numerics.
fn is_input_error(error: &Error) -> bool {
    matches!(error, Error::Domain { .. } | Error::UnsupportedSize(_))
}

fn classify(error: Error) -> CliError {
    if is_input_error(&error) {
        CliError::Input(error.to_string())
    } else {
        CliError::Numerical(error.to_string())
    }
}

fn check_sites(n_sites: usize) -> Result<(), CliError> {
    if (MIN_SITES..=MAX_SITES).contains(&n_sites) {
        Ok(())
    } else {
        Err(classify(Error::UnsupportedSize(n_sites)))
    }
}

/// Inverse temperatures from `--beta`, or from `--temperature` via β = 1/T.
pub fn resolve_betas(args: &BetaArgs) -> Result<Vec<f64>, CliError> {
    if !args.temperature.is_empty() {
        return args
            .temperature
            .iter()
            .map(|&t| beta_from_temperature(t).map_err(classify))
            .collect();
    }
    if args.beta.is_empty() {
        return Err(CliError::Input("no inverse temperature given".into()));
    }
    for &b in &args.beta {
        if !(b > 0.0) || !b.is_finite() {
            return Err(CliError::Input(format!("beta = {b} must be positive and finite")));
        }
    }
    Ok(args.beta.clone())
}

/// Turns per-row results into an [`Output`], failing outright on input errors.
fn finish(table: Table, errors: Vec<Error>) -> Result<Output, CliError> {
    if let Some(e) = errors.iter().find(|e| is_input_error(e)) {
        return Err(CliError::Input(e.to_string()));
    }
    Ok(Output {
        table,
        failures: errors.len(),
        validation_failures: 0,
    })
}

pub fn surface(args: &SurfaceArgs) -> Result<Output, CliError> {
    check_sites(args.n_sites)?;
    let grid = GridSpec {
        gammas: args.gamma.0.clone(),
        fields: args.field.0.clone(),
        betas: resolve_betas(&args.betas)?,
    };
    let mut quantities: Vec<Quantity> = Vec::new();
    for q in &args.quantities {
        let q = match q {
            QuantityArg::GGamma => Quantity::AnisotropyQfi,
            QuantityArg::GBeta => Quantity::TemperatureQfi,
            QuantityArg::FiMagnetization => Quantity::MagnetizationFisher,
            QuantityArg::Gap => Quantity::Gap,
        };
        if !quantities.contains(&q) {
            quantities.push(q);
        }
    }
    let result = scan(args.n_sites, &grid, &quantities).map_err(classify)?;
    let mut table = Table::new(&SURFACE_COLUMNS);
    for row in &result.rows {
        let g = row.g_gamma;
        table.push(vec![
            result.n_sites.into(),
            row.gamma.into(),
            row.field.into(),
            row.beta.into(),
            g.map(|q| q.total).into(),
            g.map(|q| q.classical_term).into(),
            g.map(|q| q.quantum_term).into(),
            row.g_beta.into(),
            row.fi_magnetization.into(),
            row.gap.into(),
            row.error.as_ref().map_or_else(|| OK.to_owned(), status).into(),
        ]);
    }
    Ok(Output {
        table,
        failures: result.failures().count(),
        validation_failures: 0,
    })
}

pub fn optimal(args: &OptimalArgs) -> Result<Output, CliError> {
    check_sites(args.n_sites)?;
    let betas = resolve_betas(&args.betas)?;
    let (target, label) = match args.target {
        TargetArg::Anisotropy => (Target::Anisotropy, "anisotropy"),
        TargetArg::Temperature => (Target::Temperature, "temperature"),
    };
    let pairs: Vec<(f64, f64)> = args.gamma.0.iter().flat_map(|&g| betas.iter().map(move |&b| (g, b))).collect();
    let results: Vec<_> = pairs.par_iter().map(|&(g, b)| optimal_field(args.n_sites, g, b, target)).collect();
    let mut table = Table::new(&OPTIMAL_COLUMNS);
    let mut errors = Vec::new();
    for (&(g, b), result) in pairs.iter().zip(results) {
        let lead = |table: &mut Table, rest: Vec<Cell>| {
            let mut row: Vec<Cell> = vec![args.n_sites.into(), g.into(), b.into(), label.into()];
            row.extend(rest);
            table.push(row);
        };
        match result {
            Ok(found) => {
                for r in found {
                    lead(
                        &mut table,
                        vec![
                            r.field_star.into(),
                            r.qfi_at_star.into(),
                            r.nearest_critical.into(),
                            r.branch.to_string().into(),
                            OK.into(),
                        ],
                    );
                }
            }
            Err(e) => {
                lead(
                    &mut table,
                    vec![Cell::Num(None), Cell::Num(None), Cell::Num(None), "".into(), status(&e).into()],
                );
                errors.push(e);
            }
        }
    }
    finish(table, errors)
}

pub fn robustness(args: &RobustnessArgs) -> Result<Output, CliError> {
    check_sites(args.n_sites)?;
    let betas = resolve_betas(&args.betas)?;
    for &s in &args.sigma {
        if !(s > 0.0) || !s.is_finite() {
            return Err(CliError::Input(format!("sigma = {s} must be positive and finite")));
        }
    }
    let mut points = Vec::new();
    for &g in &args.gamma.0 {
        for &b in &betas {
            for &s in &args.sigma {
                points.push((g, b, s));
            }
        }
    }
    let n = args.n_sites;
    let relative = args.relative_sigma;
    let results: Vec<(Option<f64>, Option<f64>, Result<f64, Error>)> = points
        .par_iter()
        .map(|&(g, b, s)| match principal_critical_field(n, g) {
            Ok(hc) => {
                let sigma = if relative { s * hc } else { s };
                (Some(hc), Some(sigma), robustness_ratio(n, g, b, sigma))
            }
            Err(e) => (None, if relative { None } else { Some(s) }, Err(e)),
        })
        .collect();
    let mut table = Table::new(&ROBUSTNESS_COLUMNS);
    let mut errors = Vec::new();
    for (&(g, b, _), (hc, sigma, xi)) in points.iter().zip(results) {
        let sigma_relative = match (sigma, hc) {
            (Some(s), Some(h)) if h > 0.0 => Some(s / h),
            _ => None,
        };
        let (xi, state) = match xi {
            Ok(x) => (Some(x), OK.to_owned()),
            Err(e) => {
                let s = status(&e);
                errors.push(e);
                (None, s)
            }
        };
        table.push(vec![
            n.into(),
            g.into(),
            b.into(),
            sigma.into(),
            sigma_relative.into(),
            hc.into(),
            xi.into(),
            state.into(),
        ]);
    }
    finish(table, errors)
}

struct ThermoRow {
    cutoff: Option<usize>,
    anisotropy: Option<lmg_metrology::estimation::QfiBreakdown>,
    field: Option<f64>,
    temperature: Option<f64>,
    error: Option<Error>,
}

fn thermo_point(g: f64, h: f64, b: f64, cutoff: Option<usize>) -> ThermoRow {
    let eval = |which| match cutoff {
        Some(c) => thermo_qfi_with_cutoff(g, h, b, which, c),
        None => thermo_qfi(g, h, b, which),
    };
    let run = || -> Result<ThermoRow, Error> {
        let cutoff = match cutoff {
            Some(c) => c,
            None => BosonicModel::new(g, h, b)?.cutoff,
        };
        Ok(ThermoRow {
            cutoff: Some(cutoff),
            anisotropy: Some(eval(Parameter::Anisotropy)?),
            field: Some(eval(Parameter::Field)?.total),
            temperature: Some(eval(Parameter::Temperature)?.total),
            error: None,
        })
    };
    run().unwrap_or_else(|e| ThermoRow {
        cutoff: None,
        anisotropy: None,
        field: None,
        temperature: None,
        error: Some(e),
    })
}

pub fn thermo(args: &ThermoArgs) -> Result<Output, CliError> {
    let betas = resolve_betas(&args.betas)?;
    let mut points = Vec::new();
    for &g in &args.gamma.0 {
        for &h in &args.field.0 {
            for &b in &betas {
                points.push((g, h, b));
            }
        }
    }
    let rows: Vec<ThermoRow> = points.par_iter().map(|&(g, h, b)| thermo_point(g, h, b, args.cutoff)).collect();
    let mut table = Table::new(&THERMO_COLUMNS);
    let mut errors = Vec::new();
    for (&(g, h, b), row) in points.iter().zip(rows) {
        let a = row.anisotropy;
        table.push(vec![
            g.into(),
            h.into(),
            b.into(),
            row.cutoff.map_or(Cell::Num(None), Cell::from),
            a.map(|q| q.total).into(),
            a.map(|q| q.classical_term).into(),
            a.map(|q| q.quantum_term).into(),
            row.field.into(),
            row.temperature.into(),
            thermo_limit::gap(g, h).into(),
            row.error.as_ref().map_or_else(|| OK.to_owned(), status).into(),
        ]);
        errors.extend(row.error);
    }
    finish(table, errors)
}
