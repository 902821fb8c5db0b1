//! Lead-lag analytics for surveillance indicators against hospital admissions.
//!
//! Daily series are smoothed, scaled and sliced into epidemic waves, then
//! compared per hospital trust with Granger causality tests, cross-correlation
//! and dynamic time warping.

pub mod dtw;
pub mod error;
pub mod fdist;
pub mod geo;
pub mod granger;
pub mod linalg;
pub mod pipeline;
pub mod synth;
pub mod timeseries;
pub mod xcorr;

pub use error::{Error, ErrorCategory, Result};
pub use timeseries::{GeoLevel, Panel, SeriesKey, TimeSeries};
