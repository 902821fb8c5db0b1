//! Lead-lag methods behind a common trait, registered by name.

use chrono::{Days, NaiveDate};

use super::config::{RunConfig, WaveSpec};
use super::report::{Flags, PathPoint, ReportRow};
use crate::dtw::{dtw_align, AlignmentQuery, Sequence};
use crate::error::{Error, Result};
use crate::granger::granger_values;
use crate::xcorr;

/// One trust's preprocessed indicator and admissions series for a wave.
#[derive(Debug, Clone)]
pub struct TrustInput {
    pub trust_id: String,
    /// Min-max scaled, over the analysis window.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Z-scored, over the DTW window (analysis window plus warm-up).
    pub xz: Vec<f64>,
    pub yz: Vec<f64>,
}

/// Everything a method sees for one indicator in one wave. Only trusts with
/// usable series are included.
#[derive(Debug, Clone)]
pub struct IndicatorWave {
    pub indicator: String,
    pub source: String,
    pub wave: WaveSpec,
    pub wave_index: usize,
    pub window: (NaiveDate, NaiveDate),
    pub dtw_window: (NaiveDate, NaiveDate),
    /// Leading warm-up days of the DTW window.
    pub dtw_skip: usize,
    pub partial: bool,
    pub trusts: Vec<TrustInput>,
}

impl IndicatorWave {
    /// A row for `trust` with no statistics yet.
    pub fn row(&self, trust: &str, method: &dyn LeadLagMethod) -> ReportRow {
        ReportRow {
            trust_id: trust.to_string(),
            indicator: self.indicator.clone(),
            source: self.source.clone(),
            wave: self.wave.name.clone(),
            wave_index: self.wave_index,
            method: method.name().to_string(),
            family: method.family(),
            columns: method.columns(),
            stats: vec![None; method.columns().len()],
            statistical_lead: None,
            effective_lead: None,
            eroded: None,
            flags: Flags {
                partial: self.partial,
                ..Flags::default()
            },
            error: None,
            window: Some(self.window),
            path: None,
        }
    }
}

pub trait LeadLagMethod: Send + Sync {
    /// Unique registry name, e.g. `granger14`.
    fn name(&self) -> &str;
    /// Report file stem shared by related methods.
    fn family(&self) -> &'static str;
    /// Names of the statistics each row carries, in order.
    fn columns(&self) -> &'static [&'static str];
    /// One row per trust in `unit`.
    fn run(&self, unit: &IndicatorWave, config: &RunConfig) -> Vec<ReportRow>;
}

fn failed(mut row: ReportRow, e: &Error) -> ReportRow {
    row.flags.failed = true;
    row.error = Some(e.to_string());
    row
}

pub struct GrangerMethod {
    name: String,
    horizon: usize,
}

impl GrangerMethod {
    pub fn new(horizon: usize) -> Self {
        let name = if horizon == 0 {
            "granger".to_string()
        } else {
            format!("granger{horizon}")
        };
        Self { name, horizon }
    }
}

impl LeadLagMethod for GrangerMethod {
    fn name(&self) -> &str {
        &self.name
    }

    fn family(&self) -> &'static str {
        "granger"
    }

    fn columns(&self) -> &'static [&'static str] {
        &["horizon", "max_lag", "f", "p_value", "df1", "df2"]
    }

    fn run(&self, unit: &IndicatorWave, config: &RunConfig) -> Vec<ReportRow> {
        unit.trusts
            .iter()
            .map(|t| {
                let mut row = unit.row(&t.trust_id, self);
                match granger_values(&t.x, &t.y, config.granger_max_lag, self.horizon) {
                    Ok(g) => {
                        row.stats = vec![
                            Some(g.horizon as f64),
                            Some(g.max_lag as f64),
                            Some(g.f),
                            Some(g.p_value),
                            Some(g.df1 as f64),
                            Some(g.df2 as f64),
                        ];
                        row
                    }
                    Err(e) => failed(row, &e),
                }
            })
            .collect()
    }
}

pub struct CcfMethod;

impl LeadLagMethod for CcfMethod {
    fn name(&self) -> &str {
        "ccf"
    }

    fn family(&self) -> &'static str {
        "ccf"
    }

    fn columns(&self) -> &'static [&'static str] {
        &["optimal_lead", "ccf_at_optimal", "horizon", "ccf_at_horizon"]
    }

    fn run(&self, unit: &IndicatorWave, config: &RunConfig) -> Vec<ReportRow> {
        unit.trusts
            .iter()
            .map(|t| {
                let mut row = unit.row(&t.trust_id, self);
                match xcorr::analyze(&t.x, &t.y, config.ccf_window, config.horizon_days) {
                    Ok(r) => {
                        let lead = r.optimal_lead.map(|l| l as f64);
                        row.stats = vec![
                            lead,
                            r.ccf_at_optimal,
                            Some(r.horizon as f64),
                            Some(r.ccf_at_horizon),
                        ];
                        row.statistical_lead = lead;
                        row
                    }
                    Err(e) => failed(row, &e),
                }
            })
            .collect()
    }
}

/// Univariate alignment per trust plus one multivariate alignment across all
/// trusts in the wave, whose distance is attached to every row.
pub struct DtwMethod;

impl DtwMethod {
    fn multivariate(unit: &IndicatorWave, window: usize) -> Result<f64> {
        let xs: Vec<&[f64]> = unit.trusts.iter().map(|t| t.xz.as_slice()).collect();
        let ys: Vec<&[f64]> = unit.trusts.iter().map(|t| t.yz.as_slice()).collect();
        let q = Sequence::from_columns(&xs)?;
        let r = Sequence::from_columns(&ys)?;
        Ok(dtw_align(&AlignmentQuery::new(&q, &r).window(window))?.normalized_distance())
    }
}

impl LeadLagMethod for DtwMethod {
    fn name(&self) -> &str {
        "dtw"
    }

    fn family(&self) -> &'static str {
        "dtw"
    }

    fn columns(&self) -> &'static [&'static str] {
        &["median_lead", "normalized_distance", "multivariate_distance"]
    }

    fn run(&self, unit: &IndicatorWave, config: &RunConfig) -> Vec<ReportRow> {
        let multi = if unit.trusts.is_empty() {
            None
        } else {
            match Self::multivariate(unit, config.dtw_window) {
                Ok(d) => Some(d),
                Err(e) => {
                    log::warn!("multivariate DTW failed for {} in {}: {e}", unit.indicator, unit.wave.name);
                    None
                }
            }
        };
        let date = |i: usize| unit.dtw_window.0 + Days::new(i as u64);
        unit.trusts
            .iter()
            .map(|t| {
                let mut row = unit.row(&t.trust_id, self);
                row.window = Some(unit.dtw_window);
                let q = Sequence::univariate(&t.xz);
                let r = Sequence::univariate(&t.yz);
                let aligned = dtw_align(&AlignmentQuery::new(&q, &r).window(config.dtw_window))
                    .and_then(|a| {
                        let lead = a.median_lead(unit.dtw_skip).ok_or(Error::EmptySlice)?;
                        Ok((a, lead))
                    });
                match aligned {
                    Ok((a, lead)) => {
                        row.stats = vec![Some(lead), Some(a.normalized_distance()), multi];
                        row.statistical_lead = Some(lead);
                        if config.export_paths {
                            row.path = Some(
                                a.lead_times()
                                    .into_iter()
                                    .filter(|l| l.query_index >= unit.dtw_skip)
                                    .map(|l| PathPoint {
                                        query_date: date(l.query_index),
                                        lead_days: l.lead,
                                    })
                                    .collect(),
                            );
                        }
                        row
                    }
                    Err(e) => failed(row, &e),
                }
            })
            .collect()
    }
}

#[derive(Default)]
pub struct MethodRegistry {
    methods: Vec<Box<dyn LeadLagMethod>>,
}

impl MethodRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Granger at horizon 0 and at the configured horizon, CCF and DTW.
    pub fn with_defaults(config: &RunConfig) -> Self {
        let mut r = Self::new();
        let defaults: Vec<Box<dyn LeadLagMethod>> = vec![
            Box::new(GrangerMethod::new(0)),
            Box::new(GrangerMethod::new(config.horizon_days)),
            Box::new(CcfMethod),
            Box::new(DtwMethod),
        ];
        for m in defaults {
            r.register(m).expect("default names are distinct");
        }
        r
    }

    pub fn register(&mut self, method: Box<dyn LeadLagMethod>) -> Result<()> {
        if self.get(method.name()).is_some() {
            return Err(Error::Config(format!("method {} registered twice", method.name())));
        }
        self.methods.push(method);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&dyn LeadLagMethod> {
        self.methods.iter().find(|m| m.name() == name).map(|m| m.as_ref())
    }

    pub fn names(&self) -> Vec<&str> {
        self.methods.iter().map(|m| m.name()).collect()
    }

    /// Methods whose name or family is listed, in registration order. An
    /// empty list selects everything.
    pub fn select(&self, wanted: &[String]) -> Result<Vec<&dyn LeadLagMethod>> {
        if wanted.is_empty() {
            return Ok(self.methods.iter().map(|m| m.as_ref()).collect());
        }
        for w in wanted {
            if !self.methods.iter().any(|m| m.name() == w || m.family() == w) {
                return Err(Error::Config(format!(
                    "unknown method {w}; available: {}",
                    self.names().join(", ")
                )));
            }
        }
        Ok(self
            .methods
            .iter()
            .filter(|m| wanted.iter().any(|w| m.name() == w || m.family() == w))
            .map(|m| m.as_ref())
            .collect())
    }
}
