//! Least-squares engine and the measurement models fitted with it.

mod hbt;
mod hom;
pub mod lm;
mod spectral;
mod tcspc;

pub use hbt::{
    estimate_hbt_init, fit_hbt, hbt_model, HbtFit, HbtFitParams, HbtOptions, HBT_PARAM_NAMES,
};
pub use hom::{
    fit_hom, hom_model, hom_visibility, HomFit, HomFitParams, HomOptions, HomPolarization,
    DEFAULT_DELTA_T_NS,
};
pub use lm::{
    nlls_fit, numeric_jacobian, propagate, FitData, LmConfig, Model, ParamSpec, PointModel,
};
pub use spectral::{fit_mi, fit_scan, MiOptions, ScanOptions, VoigtFit};
pub use tcspc::{
    estimate_tcspc_init, fit_tcspc, tcspc_model, RiseMode, TcspcFit, TcspcFitParams, TcspcOptions,
    TCSPC_PARAM_NAMES,
};
