use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dtw::DEFAULT_DTW_WINDOW;
use crate::error::{Error, Result};
use crate::granger::DEFAULT_MAX_LAG;
use crate::timeseries::{GeoLevel, LoessParams};
use crate::xcorr::{DEFAULT_CCF_WINDOW, DEFAULT_HORIZON};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveSpec {
    pub name: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl WaveSpec {
    pub fn new(name: impl Into<String>, start: NaiveDate, end: NaiveDate) -> Self {
        Self {
            name: name.into(),
            start,
            end,
        }
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// Reporting delay and release cadence of an indicator feed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Latency {
    pub lag_days: u32,
    /// Days between releases: 1 for daily, 7 for weekly.
    #[serde(default = "one")]
    pub cadence_days: u32,
}

fn one() -> u32 {
    1
}

/// Which stretch of data smoothing and scaling see.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingScope {
    /// Whole study period, then sliced into waves.
    #[default]
    Study,
    /// Each wave independently.
    Wave,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub level: Option<GeoLevel>,
    /// Source-specific mapping counts file, replacing the global mapping.
    pub mapping: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub waves: Vec<WaveSpec>,
    pub horizon_days: usize,
    pub granger_max_lag: usize,
    pub ccf_window: usize,
    pub dtw_window: usize,
    /// Days before each wave included in DTW alignment but not in reported leads.
    pub dtw_warmup_days: usize,
    pub loess: LoessParams,
    pub scaling_scope: ScalingScope,
    pub exclude_trusts: Vec<String>,
    /// Trusts with fewer admissions than this inside `admissions_window` are dropped.
    pub min_admissions: f64,
    /// Defaults to the full admissions range.
    pub admissions_window: Option<DateWindow>,
    /// Geography of indicator files unless a source overrides it.
    pub indicator_level: GeoLevel,
    pub sources: BTreeMap<String, SourceConfig>,
    /// Keyed by indicator variable or source name; variable wins.
    pub latency: BTreeMap<String, Latency>,
    /// `group,member_variable` file; members are summed into the group.
    pub groups: Option<PathBuf>,
    /// Registered method names or families; empty selects all.
    pub methods: Vec<String>,
    pub export_paths: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            waves: Vec::new(),
            horizon_days: DEFAULT_HORIZON,
            granger_max_lag: DEFAULT_MAX_LAG,
            ccf_window: DEFAULT_CCF_WINDOW,
            dtw_window: DEFAULT_DTW_WINDOW,
            dtw_warmup_days: 0,
            loess: LoessParams::default(),
            scaling_scope: ScalingScope::Study,
            exclude_trusts: Vec::new(),
            min_admissions: 10.0,
            admissions_window: None,
            indicator_level: GeoLevel::Ltla,
            sources: BTreeMap::new(),
            latency: BTreeMap::new(),
            groups: None,
            methods: Vec::new(),
            export_paths: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(g) = cfg.groups.as_mut() {
            resolve(g);
        }
        for s in cfg.sources.values_mut() {
            if let Some(m) = s.mapping.as_mut() {
                resolve(m);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("horizon_days", self.horizon_days),
            ("granger_max_lag", self.granger_max_lag),
            ("ccf_window", self.ccf_window),
            ("dtw_window", self.dtw_window),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.min_admissions >= 0.0) {
            return Err(Error::Config("min_admissions must be >= 0".into()));
        }
        if self.waves.is_empty() {
            return Err(Error::Config("at least one wave is required".into()));
        }
        for w in &self.waves {
            if w.start >= w.end {
                return Err(Error::Config(format!("wave {} must start before it ends", w.name)));
            }
        }
        for pair in self.waves.windows(2) {
            if pair[1].start <= pair[0].end {
                return Err(Error::Config(format!(
                    "waves {} and {} overlap or are out of order",
                    pair[0].name, pair[1].name
                )));
            }
        }
        let mut names: Vec<&str> = self.waves.iter().map(|w| w.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|p| p[0] == p[1]) {
            return Err(Error::Config("wave names must be unique".into()));
        }
        if let Some(w) = self.admissions_window {
            if w.start > w.end {
                return Err(Error::Config("admissions_window start after end".into()));
            }
        }
        if let Some((k, _)) = self.latency.iter().find(|(_, l)| l.cadence_days == 0) {
            return Err(Error::Config(format!("latency.{k}.cadence_days must be >= 1")));
        }
        Ok(())
    }

    pub fn latency_for(&self, variable: &str, source: &str) -> Option<Latency> {
        self.latency
            .get(variable)
            .or_else(|| self.latency.get(source))
            .copied()
    }

    pub fn source_level(&self, source: &str) -> GeoLevel {
        self.sources
            .get(source)
            .and_then(|s| s.level)
            .unwrap_or(self.indicator_level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
horizon_days = 14

[[waves]]
name = "BA.1"
start = "2021-11-15"
end = "2022-01-31"

[[waves]]
name = "BA.2"
start = "2022-02-01"
end = "2022-05-15"

[latency.nhs111]
lag_days = 2

[latency.lfd]
lag_days = 1
cadence_days = 7
"#;

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::from_toml(BASIC).unwrap();
        assert_eq!(c.waves.len(), 2);
        assert_eq!(c.granger_max_lag, 3);
        assert_eq!(c.ccf_window, 30);
        assert_eq!(c.dtw_window, 35);
        assert_eq!(c.loess, LoessParams { span: 0.15, degree: 2 });
        assert_eq!(c.latency["nhs111"], Latency { lag_days: 2, cadence_days: 1 });
        assert_eq!(c.latency_for("nhs111_cough", "nhs111").unwrap().lag_days, 2);
        assert_eq!(c.latency_for("x", "lfd").unwrap().cadence_days, 7);
        assert!(c.latency_for("x", "google").is_none());
    }

    #[test]
    fn rejects_bad_waves() {
        let overlap = BASIC.replace("2022-02-01", "2022-01-20");
        assert!(RunConfig::from_toml(&overlap).is_err());
        let inverted = BASIC.replace("2022-05-15", "2022-01-15");
        assert!(RunConfig::from_toml(&inverted).is_err());
        assert!(RunConfig::from_toml("horizon_days = 14").is_err());
    }

    #[test]
    fn rejects_unknown_keys_and_zero_params() {
        assert!(RunConfig::from_toml(&format!("{BASIC}\nbogus = 1")).is_err());
        assert!(RunConfig::from_toml(&BASIC.replace("horizon_days = 14", "horizon_days = 0")).is_err());
    }
}
