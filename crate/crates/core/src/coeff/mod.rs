//! Coefficient fields: expression parsing, matrix evaluation, ellipticity
//! scans and the growth functionals with their classifiers.

pub mod expr;
pub mod field;
pub mod growth;

pub use expr::{EvalError, ParseError, ScalarFieldExpr};
pub use field::{ellipticity_scan, CoefficientField, FieldError, ScanResult, PSD_TOL};
pub use growth::{
    ball_volume, classify_growth, nu_profile, rho_distance, tacklind_check, tikhonov_check,
    GrowthError, GrowthProfile, GrowthVerdict, RhoLimit, TacklindResult, TacklindVerdict,
    TikhonovResult, TikhonovVerdict, VolumeTable,
};
