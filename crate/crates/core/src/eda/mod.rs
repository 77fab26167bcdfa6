//! Electrodermal activity processing.

pub mod cda;
pub mod features;
pub mod filter;
pub mod gaps;
pub mod pipeline;
pub mod scr;
pub mod spline;

pub use cda::{cda_decompose, Bateman, CdaDiagnostics, CdaParams, EdaDecomposition};
pub use features::{
    extrema_tally, scr_rate_features, session_scr_rate, zscore_standardize, ActivityScrs, EdaActivityFeatures,
    EdaFeature, ExtremaTally, Extremum, TiedExtremum, ZScore,
};
pub use filter::{butterworth_filter, Butterworth};
pub use gaps::{detect_gaps, fill_gaps, regularize, Gap};
pub use pipeline::{process_session_eda, EdaConfig, RunDecomposition, SessionEda, SessionScr};
pub use scr::{extract_scrs, extract_scrs_with, ScrEvent, ScrParams};
pub use spline::{Boundary, CubicSpline};
