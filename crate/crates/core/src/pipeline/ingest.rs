//! CSV ingestion into rectangular, LOCF-imputed panels.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;

use chrono::NaiveDate;

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::geo::{MappingRecord, PopulationTable};
use crate::timeseries::{GeoLevel, Panel, SeriesKey, TimeSeries};

pub const ADMISSIONS_VARIABLE: &str = "admissions";

struct Rows {
    path: std::path::PathBuf,
    reader: csv::Reader<File>,
}

impl Rows {
    fn open(path: &Path, header: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
        let found = reader.headers().map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        if found.iter().collect::<Vec<_>>() != header {
            return Err(Error::schema(
                path,
                1,
                format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
            ));
        }
        Ok(Self {
            path: path.to_path_buf(),
            reader,
        })
    }

    /// Calls `f(line, fields)` for each data row.
    fn for_each(mut self, mut f: impl FnMut(u64, &csv::StringRecord) -> Result<()>) -> Result<()> {
        let width = self.reader.headers().map(|h| h.len()).unwrap_or(0);
        let mut record = csv::StringRecord::new();
        loop {
            match self.reader.read_record(&mut record) {
                Ok(true) => {}
                Ok(false) => return Ok(()),
                Err(source) => {
                    let line = source.position().map(|p| p.line()).unwrap_or(0);
                    return Err(Error::schema(&self.path, line, source.to_string()));
                }
            }
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != width {
                return Err(Error::schema(&self.path, line, format!("expected {width} fields, found {}", record.len())));
            }
            f(line, &record)?;
        }
    }
}

fn parse_date(path: &Path, line: u64, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| Error::schema(path, line, format!("invalid date `{s}`: {e}")))
}

fn parse_count(path: &Path, line: u64, s: &str) -> Result<u64> {
    match s.parse::<i64>() {
        Ok(v) if v >= 0 => Ok(v as u64),
        Ok(v) => Err(Error::schema(path, line, format!("negative count {v}"))),
        Err(_) => Err(Error::schema(path, line, format!("invalid count `{s}`"))),
    }
}

fn parse_real(path: &Path, line: u64, s: &str) -> Result<Option<f64>> {
    if s.is_empty() || s.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::schema(path, line, format!("invalid value `{s}`"))),
    }
}

type Cells = BTreeMap<SeriesKey, BTreeMap<NaiveDate, Option<f64>>>;

fn insert_cell(cells: &mut Cells, path: &Path, line: u64, key: SeriesKey, date: NaiveDate, v: Option<f64>) -> Result<()> {
    let series = cells.entry(key).or_default();
    if series.insert(date, v).is_some() {
        return Err(Error::schema(path, line, format!("duplicate row for date {date}")));
    }
    Ok(())
}

/// Rectangularise over the full date span and LOCF-impute every series.
fn build_panel(level: GeoLevel, cells: Cells, path: &Path) -> Result<Panel> {
    let dates = cells.values().flat_map(|s| s.keys().copied());
    let (Some(start), Some(end)) = (dates.clone().min(), dates.max()) else {
        return Err(Error::schema(path, 2, "no data rows"));
    };
    let len = (end - start).num_days() as usize + 1;
    let mut raw = Panel::new(level, start, len);
    for (key, series) in cells {
        let mut values = vec![None; len];
        for (d, v) in series {
            values[(d - start).num_days() as usize] = v;
        }
        if values.iter().all(Option::is_none) {
            return Err(Error::schema(
                path,
                0,
                format!("series ({}, {}) has no observed values", key.geo_id, key.variable),
            ));
        }
        raw.insert(key, TimeSeries::from_options(start, values)?)?;
    }
    raw.try_map(TimeSeries::locf_impute)
}

/// `trust_id,date,admissions` with non-negative integer counts.
pub fn ingest_admissions(path: &Path) -> Result<Panel> {
    let mut cells = Cells::new();
    Rows::open(path, &["trust_id", "date", "admissions"])?.for_each(|line, r| {
        let date = parse_date(path, line, &r[1])?;
        let count = parse_count(path, line, &r[2])?;
        insert_cell(&mut cells, path, line, SeriesKey::new(&r[0], ADMISSIONS_VARIABLE), date, Some(count as f64))
    })?;
    build_panel(GeoLevel::Trust, cells, path)
}

/// `geo_id,date,variable,value`; empty or `NA` values are missing. When
/// `variable` is given only that variable is kept.
pub fn ingest_indicator(path: &Path, level: GeoLevel, variable: Option<&str>) -> Result<Panel> {
    let mut cells = Cells::new();
    Rows::open(path, &["geo_id", "date", "variable", "value"])?.for_each(|line, r| {
        if variable.is_some_and(|v| v != &r[2]) {
            return Ok(());
        }
        let date = parse_date(path, line, &r[1])?;
        let value = parse_real(path, line, &r[3])?;
        insert_cell(&mut cells, path, line, SeriesKey::new(&r[0], &r[2]), date, value)
    })?;
    build_panel(level, cells, path)
}

/// `ltla_id,trust_id,admissions`.
pub fn read_mapping(path: &Path) -> Result<Vec<MappingRecord>> {
    let mut out = Vec::new();
    Rows::open(path, &["ltla_id", "trust_id", "admissions"])?.for_each(|line, r| {
        let count = match r[2].parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => v,
            _ => return Err(Error::schema(path, line, format!("invalid admissions count `{}`", &r[2]))),
        };
        out.push(MappingRecord::new(&r[0], &r[1], count));
        Ok(())
    })?;
    Ok(out)
}

/// `ltla_id,population`.
pub fn read_population(path: &Path) -> Result<PopulationTable> {
    let mut out = BTreeMap::new();
    Rows::open(path, &["ltla_id", "population"])?.for_each(|line, r| {
        let pop = match r[1].parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => v,
            _ => return Err(Error::schema(path, line, format!("invalid population `{}`", &r[1]))),
        };
        if out.insert(r[0].to_string(), pop).is_some() {
            return Err(Error::schema(path, line, format!("duplicate LTLA {}", &r[0])));
        }
        Ok(())
    })?;
    PopulationTable::new(out)
}

/// `group,member_variable`.
pub fn read_groups(path: &Path) -> Result<BTreeMap<String, BTreeSet<String>>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    Rows::open(path, &["group", "member_variable"])?.for_each(|line, r| {
        if !seen.insert(r[1].to_string()) {
            return Err(Error::schema(path, line, format!("variable {} is in more than one group", &r[1])));
        }
        out.entry(r[0].to_string()).or_default().insert(r[1].to_string());
        Ok(())
    })?;
    Ok(out)
}

/// Replace grouped member variables by per-geo sums; ungrouped variables pass
/// through. Groups with no member present in the panel are skipped.
pub fn apply_groups(panel: &Panel, groups: &BTreeMap<String, BTreeSet<String>>) -> Result<Panel> {
    let grouped: BTreeSet<&str> = groups.values().flatten().map(String::as_str).collect();
    let mut out = Panel::new(panel.level(), panel.start(), panel.len());
    for (key, s) in panel.iter() {
        if !grouped.contains(key.variable.as_str()) {
            out.insert(key.clone(), s.clone())?;
            if let Some(span) = panel.coverage(&key.variable) {
                out.set_coverage(&key.variable, span);
            }
        }
    }
    for (group, members) in groups {
        let mut sums: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        let mut span: Option<(NaiveDate, NaiveDate)> = None;
        for (key, s) in panel.iter().filter(|(k, _)| members.contains(&k.variable)) {
            s.require_complete()?;
            let acc = sums.entry(key.geo_id.as_str()).or_insert_with(|| vec![0.0; panel.len()]);
            for (a, v) in acc.iter_mut().zip(s.values()) {
                *a += v;
            }
            if let Some((a, b)) = panel.coverage(&key.variable) {
                span = Some(span.map_or((a, b), |(x, y)| (x.min(a), y.max(b))));
            }
        }
        for (geo, values) in sums {
            out.insert(SeriesKey::new(geo, group.clone()), TimeSeries::new(panel.start(), values)?)?;
        }
        if let Some(span) = span {
            out.set_coverage(group, span);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct RemovedTrust {
    pub trust_id: String,
    pub reason: String,
}

/// Drop excluded trusts and trusts with fewer than `min_admissions` in the
/// configured window (a total equal to the threshold is kept).
pub fn filter_trusts(panel: &Panel, config: &RunConfig) -> (Panel, Vec<RemovedTrust>) {
    let (start, end) = match config.admissions_window {
        Some(w) => (w.start, w.end),
        None => (panel.start(), panel.end()),
    };
    let excluded: BTreeSet<&str> = config.exclude_trusts.iter().map(String::as_str).collect();
    let mut removed = BTreeMap::new();
    for (key, s) in panel.iter() {
        let geo = key.geo_id.as_str();
        if excluded.contains(geo) {
            removed.insert(geo.to_string(), "excluded by configuration".to_string());
            continue;
        }
        let total: f64 = s
            .slice_window(start, end)
            .map(|w| w.values().iter().sum())
            .unwrap_or(0.0);
        if total < config.min_admissions {
            removed.insert(
                geo.to_string(),
                format!("{total} admissions in window, below {}", config.min_admissions),
            );
        }
    }
    let mut out = panel.clone();
    out.retain(|k| !removed.contains_key(&k.geo_id));
    let removed: Vec<RemovedTrust> = removed
        .into_iter()
        .map(|(trust_id, reason)| {
            log::info!("removing trust {trust_id}: {reason}");
            RemovedTrust { trust_id, reason }
        })
        .collect();
    (out, removed)
}
