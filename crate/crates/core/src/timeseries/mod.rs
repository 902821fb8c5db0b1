//! Daily series and panels of series keyed by geography and variable.

mod loess;
mod scale;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use loess::{loess_smooth, LoessParams};
pub use scale::{minmax_scale, zscore_scale, Scaled};

/// One value per consecutive day starting at `start`. Missing days hold NaN
/// and are marked in the mask.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    start: NaiveDate,
    values: Vec<f64>,
    missing: Vec<bool>,
}

impl TimeSeries {
    /// A complete series. Non-finite values are rejected.
    pub fn new(start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NanInput);
        }
        let missing = vec![false; values.len()];
        Ok(Self {
            start,
            values,
            missing,
        })
    }

    pub fn from_options(start: NaiveDate, values: Vec<Option<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        let missing = values.iter().map(Option::is_none).collect();
        let values = values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        Ok(Self {
            start,
            values,
            missing,
        })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.date_at(self.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Raw storage; missing slots are NaN.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        match self.missing.get(i) {
            Some(false) => Some(self.values[i]),
            _ => None,
        }
    }

    pub fn is_missing(&self, i: usize) -> bool {
        self.missing[i]
    }

    pub fn is_complete(&self) -> bool {
        !self.missing.iter().any(|&m| m)
    }

    pub fn date_at(&self, i: usize) -> NaiveDate {
        self.start + Days::new(i as u64)
    }

    /// Signed day offset of `date` from the start (may fall outside the series).
    pub fn offset_of(&self, date: NaiveDate) -> i64 {
        (date - self.start).num_days()
    }

    /// First and last dates carrying an observed value.
    pub fn observed_range(&self) -> Option<(NaiveDate, NaiveDate)> {
        let first = self.missing.iter().position(|m| !m)?;
        let last = self.missing.iter().rposition(|m| !m)?;
        Some((self.date_at(first), self.date_at(last)))
    }

    pub(crate) fn require_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::MissingValues)
        }
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            start: self.start,
            missing: vec![false; values.len()],
            values,
        }
    }

    /// Last observation carried forward. Leading gaps take the first
    /// observed value so the result is always complete.
    pub fn locf_impute(&self) -> Result<Self> {
        let first = self
            .missing
            .iter()
            .position(|m| !m)
            .ok_or(Error::EmptySeries)?;
        let mut last = self.values[first];
        let values = self
            .values
            .iter()
            .zip(&self.missing)
            .map(|(&v, &m)| {
                if !m {
                    last = v;
                }
                last
            })
            .collect();
        Ok(self.with_values(values))
    }

    /// Position `t` of the result holds position `t + h` of `self`; positions
    /// that fall off either end are missing.
    pub fn shift_series(&self, h: i64) -> Result<Self> {
        let n = self.len();
        if h.unsigned_abs() as usize >= n {
            return Err(Error::ShiftOutOfRange { shift: h, len: n });
        }
        let mut values = vec![f64::NAN; n];
        let mut missing = vec![true; n];
        for t in 0..n {
            let src = t as i64 + h;
            if (0..n as i64).contains(&src) {
                values[t] = self.values[src as usize];
                missing[t] = self.missing[src as usize];
            }
        }
        Ok(Self {
            start: self.start,
            values,
            missing,
        })
    }

    /// Intersection of `[start, end]` with the series range.
    pub fn slice_window(&self, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start > end {
            return Err(Error::EmptySlice);
        }
        let lo = self.offset_of(start).max(0);
        let hi = self.offset_of(end).min(self.len() as i64 - 1);
        if lo > hi {
            return Err(Error::EmptySlice);
        }
        let (lo, hi) = (lo as usize, hi as usize);
        Ok(Self {
            start: self.date_at(lo),
            values: self.values[lo..=hi].to_vec(),
            missing: self.missing[lo..=hi].to_vec(),
        })
    }
}

impl PartialEq for TimeSeries {
    fn eq(&self, other: &Self) -> bool {
        self.start == other.start
            && self.missing == other.missing
            && self
                .values
                .iter()
                .zip(&other.values)
                .zip(&self.missing)
                .all(|((a, b), &m)| m || a == b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeoLevel {
    Ltla,
    Trust,
}

impl fmt::Display for GeoLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeoLevel::Ltla => "ltla",
            GeoLevel::Trust => "trust",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeriesKey {
    pub geo_id: String,
    pub variable: String,
}

impl SeriesKey {
    pub fn new(geo_id: impl Into<String>, variable: impl Into<String>) -> Self {
        Self {
            geo_id: geo_id.into(),
            variable: variable.into(),
        }
    }
}

/// Series sharing one date index, keyed by `(geo_id, variable)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    level: GeoLevel,
    start: NaiveDate,
    len: usize,
    series: BTreeMap<SeriesKey, TimeSeries>,
    /// Observed date span per variable before any imputation.
    coverage: BTreeMap<String, (NaiveDate, NaiveDate)>,
}

impl Panel {
    pub fn new(level: GeoLevel, start: NaiveDate, len: usize) -> Self {
        Self {
            level,
            start,
            len,
            series: BTreeMap::new(),
            coverage: BTreeMap::new(),
        }
    }

    pub fn level(&self) -> GeoLevel {
        self.level
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.start + Days::new(self.len.saturating_sub(1) as u64)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn insert(&mut self, key: SeriesKey, series: TimeSeries) -> Result<()> {
        if series.start() != self.start || series.len() != self.len {
            return Err(Error::InvalidParameter(format!(
                "series ({}, {}) is not aligned to the panel index",
                key.geo_id, key.variable
            )));
        }
        if self.series.contains_key(&key) {
            return Err(Error::InvalidParameter(format!(
                "duplicate series ({}, {})",
                key.geo_id, key.variable
            )));
        }
        if let Some((a, b)) = series.observed_range() {
            let e = self.coverage.entry(key.variable.clone()).or_insert((a, b));
            e.0 = e.0.min(a);
            e.1 = e.1.max(b);
        }
        self.series.insert(key, series);
        Ok(())
    }

    pub(crate) fn set_coverage(&mut self, variable: &str, span: (NaiveDate, NaiveDate)) {
        self.coverage.insert(variable.to_string(), span);
    }

    pub fn get(&self, geo_id: &str, variable: &str) -> Option<&TimeSeries> {
        self.series.get(&SeriesKey::new(geo_id, variable))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SeriesKey, &TimeSeries)> {
        self.series.iter()
    }

    pub fn geo_ids(&self) -> BTreeSet<&str> {
        self.series.keys().map(|k| k.geo_id.as_str()).collect()
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        self.series.keys().map(|k| k.variable.as_str()).collect()
    }

    pub fn coverage(&self, variable: &str) -> Option<(NaiveDate, NaiveDate)> {
        self.coverage.get(variable).copied()
    }

    /// Series of one variable, ordered by geo id.
    pub fn variable<'a>(&'a self, variable: &'a str) -> impl Iterator<Item = (&'a str, &'a TimeSeries)> + 'a {
        self.series
            .iter()
            .filter(move |(k, _)| k.variable == variable)
            .map(|(k, s)| (k.geo_id.as_str(), s))
    }

    /// Keep only the series for which `keep(key)` holds.
    pub fn retain(&mut self, mut keep: impl FnMut(&SeriesKey) -> bool) {
        self.series.retain(|k, _| keep(k));
    }

    /// Apply a per-series transform, keeping keys and coverage.
    pub fn try_map(&self, f: impl Fn(&TimeSeries) -> Result<TimeSeries>) -> Result<Panel> {
        let mut out = Panel::new(self.level, self.start, self.len);
        for (k, s) in &self.series {
            out.series.insert(k.clone(), f(s)?);
        }
        out.coverage = self.coverage.clone();
        Ok(out)
    }
}
