//! Result rows, summary statistics and report files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Serialize, Serializer};

use super::ingest::RemovedTrust;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Flags {
    /// Constant indicator or admissions series.
    pub degenerate: bool,
    /// Indicator coverage does not reach the wave.
    pub truncated: bool,
    /// Indicator coverage covers only part of the wave.
    pub partial: bool,
    /// The method returned an error.
    pub failed: bool,
    /// No indicator series for the trust.
    pub missing: bool,
}

impl Flags {
    pub fn labels(&self) -> Vec<&'static str> {
        [
            (self.degenerate, "degenerate"),
            (self.truncated, "truncated"),
            (self.partial, "partial"),
            (self.failed, "failed"),
            (self.missing, "missing"),
        ]
        .into_iter()
        .filter(|(on, _)| *on)
        .map(|(_, l)| l)
        .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathPoint {
    pub query_date: NaiveDate,
    pub lead_days: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub trust_id: String,
    pub indicator: String,
    pub source: String,
    pub wave: String,
    pub wave_index: usize,
    pub method: String,
    pub family: &'static str,
    pub columns: &'static [&'static str],
    pub stats: Vec<Option<f64>>,
    pub statistical_lead: Option<f64>,
    pub effective_lead: Option<f64>,
    pub eroded: Option<bool>,
    pub flags: Flags,
    pub error: Option<String>,
    /// Dates the statistics were computed over.
    pub window: Option<(NaiveDate, NaiveDate)>,
    pub path: Option<Vec<PathPoint>>,
}

impl ReportRow {
    pub fn stat(&self, column: &str) -> Option<f64> {
        let k = self.columns.iter().position(|c| *c == column)?;
        self.stats[k]
    }

    fn sort_key(&self) -> (&str, &str, usize, &str) {
        (&self.trust_id, &self.indicator, self.wave_index, &self.method)
    }
}

impl Serialize for ReportRow {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("trust_id", &self.trust_id)?;
        m.serialize_entry("indicator", &self.indicator)?;
        m.serialize_entry("source", &self.source)?;
        m.serialize_entry("wave", &self.wave)?;
        m.serialize_entry("method", &self.method)?;
        for (c, v) in self.columns.iter().zip(&self.stats) {
            m.serialize_entry(c, v)?;
        }
        m.serialize_entry("statistical_lead", &self.statistical_lead)?;
        m.serialize_entry("effective_lead", &self.effective_lead)?;
        m.serialize_entry("eroded", &self.eroded)?;
        m.serialize_entry("flags", &self.flags.labels())?;
        m.serialize_entry("error", &self.error)?;
        m.serialize_entry("window_start", &self.window.map(|w| w.0))?;
        m.serialize_entry("window_end", &self.window.map(|w| w.1))?;
        m.end()
    }
}

pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// Sample quantile, linear interpolation between order statistics (R type 7).
pub fn quantile_type7(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

pub const SUMMARY_PROBS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    pub n: usize,
    /// Values at [`SUMMARY_PROBS`].
    pub quantiles: Vec<f64>,
}

impl Distribution {
    pub fn of(mut values: Vec<f64>) -> Option<Self> {
        values.retain(|v| v.is_finite());
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        Some(Self {
            n: values.len(),
            quantiles: SUMMARY_PROBS
                .iter()
                .map(|&p| quantile_type7(&values, p).expect("non-empty"))
                .collect(),
        })
    }
}

/// method -> indicator -> wave -> statistic -> distribution across trusts.
pub type SummaryStats =
    BTreeMap<String, BTreeMap<String, BTreeMap<String, BTreeMap<String, Distribution>>>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub version: &'static str,
    pub inputs: BTreeMap<String, String>,
    pub methods: Vec<String>,
    pub quantile_probs: [f64; 5],
    pub statistics: SummaryStats,
    pub trust_population: BTreeMap<String, f64>,
    pub coverage: BTreeMap<String, (NaiveDate, NaiveDate)>,
    pub removed_trusts: Vec<RemovedTrust>,
    /// LTLAs with no admissions in the mapping.
    pub zero_row_ltlas: Vec<String>,
    /// Per indicator, LTLAs in the mapping with no indicator data.
    pub absent_ltlas: BTreeMap<String, Vec<String>>,
    pub flag_counts: BTreeMap<String, usize>,
}

pub fn summarize_rows(rows: &[ReportRow]) -> SummaryStats {
    let mut values: BTreeMap<(&str, &str, &str, &str), Vec<f64>> = BTreeMap::new();
    for r in rows {
        let mut push = |stat: &'static str, v: Option<f64>| {
            if let Some(v) = v {
                values
                    .entry((&r.method, &r.indicator, &r.wave, stat))
                    .or_default()
                    .push(v);
            }
        };
        for (c, v) in r.columns.iter().zip(&r.stats) {
            push(c, *v);
        }
        push("effective_lead", r.effective_lead);
    }
    let mut out = SummaryStats::new();
    for ((m, i, w, s), v) in values {
        if let Some(d) = Distribution::of(v) {
            out.entry(m.into())
                .or_default()
                .entry(i.into())
                .or_default()
                .entry(w.into())
                .or_default()
                .insert(s.into(), d);
        }
    }
    out
}

pub fn flag_counts(rows: &[ReportRow]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for r in rows {
        for l in r.flags.labels() {
            *out.entry(l.to_string()).or_default() += 1;
        }
        if r.eroded == Some(true) {
            *out.entry("eroded".to_string()).or_default() += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("unknown output format {s}"))),
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |source| Error::Csv {
        path: PathBuf::from("<report>"),
        source,
    };
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Config(e.to_string()))
}

fn family_csv(rows: &[&ReportRow]) -> Result<Vec<u8>> {
    let columns = rows.first().map(|r| r.columns).unwrap_or(&[]);
    let mut header = vec!["trust_id", "indicator", "source", "wave", "method"];
    header.extend_from_slice(columns);
    header.extend_from_slice(&[
        "statistical_lead",
        "effective_lead",
        "eroded",
        "flags",
        "error",
        "window_start",
        "window_end",
    ]);
    csv_bytes(
        &header,
        rows.iter().map(|r| {
            let mut f = vec![
                r.trust_id.clone(),
                r.indicator.clone(),
                r.source.clone(),
                r.wave.clone(),
                r.method.clone(),
            ];
            f.extend(r.stats.iter().map(|v| fmt_opt(*v)));
            f.push(fmt_opt(r.statistical_lead));
            f.push(fmt_opt(r.effective_lead));
            f.push(r.eroded.map(|e| e.to_string()).unwrap_or_default());
            f.push(r.flags.labels().join(";"));
            f.push(r.error.clone().unwrap_or_default());
            f.push(r.window.map(|w| w.0.to_string()).unwrap_or_default());
            f.push(r.window.map(|w| w.1.to_string()).unwrap_or_default());
            f
        }),
    )
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| Error::Config(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Write one file per method family, the DTW path file when paths were
/// exported, and `summary.json`. Returns the files written.
pub fn emit_reports(
    rows: &[ReportRow],
    summary: &Summary,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut families: BTreeMap<&str, Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        families.entry(r.family).or_default().push(r);
    }
    let mut written = Vec::new();
    for (family, rows) in &families {
        let (ext, bytes) = match format {
            OutputFormat::Csv => ("csv", family_csv(rows)?),
            OutputFormat::Json => ("json", json_bytes(rows)?),
        };
        let path = out_dir.join(format!("{family}.{ext}"));
        write_file(&path, &bytes)?;
        written.push(path);
    }
    if rows.iter().any(|r| r.path.is_some()) {
        let bytes = csv_bytes(
            &["trust_id", "indicator", "wave", "query_date", "ref_date", "lead_days"],
            rows.iter().filter_map(|r| r.path.as_ref().map(|p| (r, p))).flat_map(|(r, p)| {
                p.iter().map(move |pt| {
                    let ref_date = pt.query_date + chrono::Duration::days(pt.lead_days.round() as i64);
                    vec![
                        r.trust_id.clone(),
                        r.indicator.clone(),
                        r.wave.clone(),
                        pt.query_date.to_string(),
                        ref_date.to_string(),
                        pt.lead_days.to_string(),
                    ]
                })
            }),
        )?;
        let path = out_dir.join("dtw_paths.csv");
        write_file(&path, &bytes)?;
        written.push(path);
    }
    let path = out_dir.join("summary.json");
    write_file(&path, &json_bytes(summary)?)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Type 7 straight from its definition on the unsorted sample.
    fn type7_oracle(values: &[f64], p: f64) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let j = ((n - 1.0) * p + 1.0).floor();
        let g = (n - 1.0) * p + 1.0 - j;
        let x = |k: f64| v[(k as usize).clamp(1, v.len()) - 1];
        (1.0 - g) * x(j) + g * x(j + 1.0)
    }

    #[test]
    fn quantiles_match_definition() {
        let v = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        for p in [0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0] {
            assert!((quantile_type7(&s, p).unwrap() - type7_oracle(&v, p)).abs() < 1e-12);
        }
        assert_eq!(quantile_type7(&[1.0, 2.0, 3.0, 4.0], 0.5), Some(2.5));
        assert_eq!(quantile_type7(&[7.0], 0.95), Some(7.0));
        assert_eq!(quantile_type7(&[], 0.5), None);
    }

    #[test]
    fn flags_render_in_fixed_order() {
        let f = Flags {
            failed: true,
            degenerate: true,
            ..Flags::default()
        };
        assert_eq!(f.labels(), vec!["degenerate", "failed"]);
    }
}
