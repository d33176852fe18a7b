//! Quantum estimation of anisotropy and temperature in thermal
//! Lipkin-Meshkov-Glick spin systems.

pub mod analytic;
pub mod error;
pub mod estimation;
pub mod metrology;
pub mod spin_model;
pub mod thermal_spectra;
pub mod thermo_limit;

pub use error::{Error, Result};
pub use spin_model::{MAX_SITES, MIN_SITES};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/thermal-states.md")]
    mod thermal_states {}
    #[doc = include_str!("../../../book/src/qfi.md")]
    mod qfi {}
    #[doc = include_str!("../../../book/src/closed-forms.md")]
    mod closed_forms {}
    #[doc = include_str!("../../../book/src/optimal-field.md")]
    mod optimal_field {}
    #[doc = include_str!("../../../book/src/thermodynamic-limit.md")]
    mod thermodynamic_limit {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
