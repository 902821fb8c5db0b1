//! End-to-end run: ingest, map, preprocess, slice into waves, run the selected
//! methods and collect report rows.

pub mod config;
pub mod ingest;
pub mod lead;
pub mod methods;
pub mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use rayon::prelude::*;

pub use config::{Latency, RunConfig, ScalingScope, WaveSpec};
pub use ingest::{filter_trusts, RemovedTrust, ADMISSIONS_VARIABLE};
pub use lead::{effective_lead, EffectiveLead};
pub use methods::{IndicatorWave, LeadLagMethod, MethodRegistry, TrustInput};
pub use report::{emit_reports, Flags, OutputFormat, ReportRow, Summary};

use crate::error::{Error, Result};
use crate::geo::{apply_mapping, build_mapping, weighted_population, GeoMapping};
use crate::timeseries::{loess_smooth, minmax_scale, zscore_scale, GeoLevel, LoessParams, Panel, TimeSeries};

#[derive(Debug, Clone)]
pub struct InputPaths {
    pub admissions: PathBuf,
    /// Directory of `<source>.csv` indicator files.
    pub indicators: PathBuf,
    pub mapping: PathBuf,
    pub population: PathBuf,
}

/// One indicator variable at trust level.
#[derive(Debug, Clone)]
pub struct IndicatorInput {
    pub name: String,
    pub source: String,
    /// Trust-level panel holding only this variable.
    pub panel: Panel,
}

#[derive(Debug, Clone)]
pub struct Inputs {
    pub admissions: Panel,
    pub indicators: Vec<IndicatorInput>,
    pub population: BTreeMap<String, f64>,
    pub zero_row_ltlas: Vec<String>,
    pub absent_ltlas: BTreeMap<String, Vec<String>>,
    pub provenance: BTreeMap<String, String>,
}

fn indicator_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let io = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            out.push((stem, path));
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::Config(format!("no indicator CSV files in {}", dir.display())));
    }
    Ok(out)
}

/// Read every input file and bring indicators to trust level.
pub fn load_inputs(config: &RunConfig, paths: &InputPaths) -> Result<Inputs> {
    let admissions = ingest::ingest_admissions(&paths.admissions)?;
    let mapping = build_mapping(&ingest::read_mapping(&paths.mapping)?)?;
    let population = weighted_population(&mapping, &ingest::read_population(&paths.population)?)?;
    let groups = config.groups.as_deref().map(ingest::read_groups).transpose()?;

    let mut provenance = BTreeMap::new();
    let mut record = |k: &str, p: &Path| {
        provenance.insert(k.to_string(), p.display().to_string());
    };
    record("admissions", &paths.admissions);
    record("mapping", &paths.mapping);
    record("population", &paths.population);

    let mut indicators: Vec<IndicatorInput> = Vec::new();
    let mut absent_ltlas = BTreeMap::new();
    let mut source_of: BTreeMap<String, String> = BTreeMap::new();
    for (source, path) in indicator_files(&paths.indicators)? {
        record(&format!("indicators.{source}"), &path);
        let level = config.source_level(&source);
        let mut panel = ingest::ingest_indicator(&path, level, None)?;
        if let Some(g) = &groups {
            panel = ingest::apply_groups(&panel, g)?;
        }
        let panel = match level {
            GeoLevel::Trust => panel,
            GeoLevel::Ltla => {
                let own;
                let m: &GeoMapping = match config.sources.get(&source).and_then(|s| s.mapping.as_ref()) {
                    Some(p) => {
                        record(&format!("mapping.{source}"), p);
                        own = build_mapping(&ingest::read_mapping(p)?)?;
                        &own
                    }
                    None => &mapping,
                };
                let mapped = apply_mapping(&panel, m)?;
                absent_ltlas.extend(mapped.absent_ltlas);
                mapped.panel
            }
        };
        for variable in panel.variables() {
            if let Some(prev) = source_of.insert(variable.to_string(), source.clone()) {
                return Err(Error::Config(format!(
                    "indicator {variable} appears in sources {prev} and {source}"
                )));
            }
            let mut only = panel.clone();
            only.retain(|k| k.variable == variable);
            indicators.push(IndicatorInput {
                name: variable.to_string(),
                source: source.clone(),
                panel: only,
            });
        }
    }
    indicators.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(Inputs {
        admissions,
        indicators,
        population,
        zero_row_ltlas: mapping.zero_rows().iter().cloned().collect(),
        absent_ltlas,
        provenance,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
}

/// Smoothed then scaled both ways.
struct Prepared {
    minmax: TimeSeries,
    zscore: TimeSeries,
    degenerate: bool,
}

fn prepare(s: &TimeSeries, loess: LoessParams) -> Result<Prepared> {
    // smoothing leaves rounding noise on a flat input, so test the raw values
    let flat = is_constant(s.values());
    let smooth = loess_smooth(s, loess)?;
    let mm = minmax_scale(&smooth)?;
    let z = zscore_scale(&smooth)?;
    Ok(Prepared {
        minmax: mm.series,
        zscore: z.series,
        degenerate: flat || mm.degenerate || z.degenerate,
    })
}

fn clip(s: &TimeSeries, (a, b): (NaiveDate, NaiveDate)) -> Result<Vec<f64>> {
    Ok(s.slice_window(a, b)?.values().to_vec())
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

enum Slot {
    Ready(TrustInput),
    Flagged(Flags, Option<String>),
}

/// Windows for one indicator in one wave.
struct WaveWindows {
    window: (NaiveDate, NaiveDate),
    dtw_window: (NaiveDate, NaiveDate),
    dtw_skip: usize,
    partial: bool,
}

fn wave_windows(
    wave: &WaveSpec,
    data: (NaiveDate, NaiveDate),
    coverage: Option<(NaiveDate, NaiveDate)>,
    warmup: usize,
) -> Option<WaveWindows> {
    let (lo, hi) = match coverage {
        Some((a, b)) => (a.max(data.0), b.min(data.1)),
        None => return None,
    };
    let start = wave.start.max(lo);
    let end = wave.end.min(hi);
    if start > end {
        return None;
    }
    let dtw_start = start
        .checked_sub_days(Days::new(warmup as u64))
        .unwrap_or(start)
        .max(lo);
    Some(WaveWindows {
        window: (start, end),
        dtw_window: (dtw_start, end),
        dtw_skip: (start - dtw_start).num_days() as usize,
        partial: (start, end) != (wave.start, wave.end),
    })
}

struct Unit<'a> {
    indicator: &'a IndicatorInput,
    wave_index: usize,
}

/// Run `methods` over every indicator, wave and retained trust.
pub fn run_analysis(
    config: &RunConfig,
    methods: &[&dyn LeadLagMethod],
    inputs: &Inputs,
) -> Result<RunOutput> {
    config.validate()?;
    let (admissions, removed) = filter_trusts(&inputs.admissions, config);
    let trusts: Vec<String> = admissions.geo_ids().into_iter().map(String::from).collect();
    if trusts.is_empty() {
        return Err(Error::Config("no trusts left after filtering".into()));
    }

    // Study-period preprocessing of admissions, per indicator date range.
    let study_adm: BTreeMap<(NaiveDate, NaiveDate), BTreeMap<&str, Result<Prepared>>> =
        if config.scaling_scope == ScalingScope::Study {
            let mut m = BTreeMap::new();
            for ind in &inputs.indicators {
                let Some(r) = common_range(&admissions, &ind.panel) else {
                    continue;
                };
                if !m.contains_key(&r) {
                    let per: BTreeMap<&str, Result<Prepared>> = trusts
                        .par_iter()
                        .map(|t| {
                            let s = admissions.get(t, ADMISSIONS_VARIABLE).expect("trust from panel");
                            (t.as_str(), s.slice_window(r.0, r.1).and_then(|s| prepare(&s, config.loess)))
                        })
                        .collect();
                    m.insert(r, per);
                }
            }
            m
        } else {
            BTreeMap::new()
        };

    let units: Vec<Unit> = inputs
        .indicators
        .iter()
        .flat_map(|ind| (0..config.waves.len()).map(move |w| Unit { indicator: ind, wave_index: w }))
        .collect();

    let mut rows: Vec<ReportRow> = units
        .par_iter()
        .flat_map_iter(|u| {
            run_unit(config, methods, &admissions, &trusts, &study_adm, u).into_iter()
        })
        .collect();

    for r in &mut rows {
        if let Some(l) = r.statistical_lead {
            let latency = config
                .latency_for(&r.indicator, &r.source)
                .unwrap_or(Latency { lag_days: 0, cadence_days: 1 });
            let e = effective_lead(l, latency);
            r.effective_lead = Some(e.days);
            r.eroded = Some(e.eroded);
        }
    }
    report::sort_rows(&mut rows);

    let coverage = inputs
        .indicators
        .iter()
        .filter_map(|i| i.panel.coverage(&i.name).map(|c| (i.name.clone(), c)))
        .collect();
    let summary = Summary {
        version: env!("CARGO_PKG_VERSION"),
        inputs: inputs.provenance.clone(),
        methods: methods.iter().map(|m| m.name().to_string()).collect(),
        quantile_probs: report::SUMMARY_PROBS,
        statistics: report::summarize_rows(&rows),
        trust_population: trusts
            .iter()
            .filter_map(|t| inputs.population.get(t).map(|p| (t.clone(), *p)))
            .collect(),
        coverage,
        removed_trusts: removed,
        zero_row_ltlas: inputs.zero_row_ltlas.clone(),
        absent_ltlas: inputs.absent_ltlas.clone(),
        flag_counts: report::flag_counts(&rows),
    };
    Ok(RunOutput { rows, summary })
}

fn common_range(a: &Panel, b: &Panel) -> Option<(NaiveDate, NaiveDate)> {
    let start = a.start().max(b.start());
    let end = a.end().min(b.end());
    (start <= end).then_some((start, end))
}

fn run_unit(
    config: &RunConfig,
    methods: &[&dyn LeadLagMethod],
    admissions: &Panel,
    trusts: &[String],
    study_adm: &BTreeMap<(NaiveDate, NaiveDate), BTreeMap<&str, Result<Prepared>>>,
    u: &Unit,
) -> Vec<ReportRow> {
    let ind = u.indicator;
    let wave = &config.waves[u.wave_index];
    let data = common_range(admissions, &ind.panel);
    let windows = data.and_then(|d| wave_windows(wave, d, ind.panel.coverage(&ind.name), config.dtw_warmup_days));

    let mut unit = IndicatorWave {
        indicator: ind.name.clone(),
        source: ind.source.clone(),
        wave: wave.clone(),
        wave_index: u.wave_index,
        window: (wave.start, wave.end),
        dtw_window: (wave.start, wave.end),
        dtw_skip: 0,
        partial: false,
        trusts: Vec::new(),
    };
    let slots: Vec<(&str, Slot)> = match &windows {
        None => trusts
            .iter()
            .map(|t| {
                let flags = Flags {
                    truncated: true,
                    ..Flags::default()
                };
                (t.as_str(), Slot::Flagged(flags, None))
            })
            .collect(),
        Some(w) => {
            unit.window = w.window;
            unit.dtw_window = w.dtw_window;
            unit.dtw_skip = w.dtw_skip;
            unit.partial = w.partial;
            let range = data.expect("windows imply data");
            trusts
                .iter()
                .map(|t| (t.as_str(), trust_slot(config, admissions, study_adm, ind, t, range, w)))
                .collect()
        }
    };

    let mut rows = Vec::new();
    for (t, slot) in slots {
        match slot {
            Slot::Ready(input) => unit.trusts.push(input),
            Slot::Flagged(mut flags, error) => {
                flags.partial |= unit.partial;
                for m in methods {
                    let mut row = unit.row(t, *m);
                    row.flags = flags;
                    row.error = error.clone();
                    if flags.truncated {
                        row.window = None;
                    }
                    rows.push(row);
                }
            }
        }
    }
    for m in methods {
        rows.extend(m.run(&unit, config));
    }
    rows
}

fn trust_slot(
    config: &RunConfig,
    admissions: &Panel,
    study_adm: &BTreeMap<(NaiveDate, NaiveDate), BTreeMap<&str, Result<Prepared>>>,
    ind: &IndicatorInput,
    trust: &str,
    range: (NaiveDate, NaiveDate),
    w: &WaveWindows,
) -> Slot {
    let Some(x) = ind.panel.get(trust, &ind.name) else {
        let flags = Flags {
            missing: true,
            ..Flags::default()
        };
        return Slot::Flagged(flags, None);
    };
    let y = admissions.get(trust, ADMISSIONS_VARIABLE).expect("trust from panel");
    let fail = |e: Error| {
        let flags = Flags {
            failed: true,
            ..Flags::default()
        };
        Slot::Flagged(flags, Some(e.to_string()))
    };

    let built = match config.scaling_scope {
        ScalingScope::Study => (|| {
            let px = prepare(&x.slice_window(range.0, range.1)?, config.loess)?;
            let py = match study_adm.get(&range).and_then(|m| m.get(trust)) {
                Some(Ok(p)) => p,
                Some(Err(e)) => return Err(Error::InvalidParameter(e.to_string())),
                None => return Err(Error::EmptySlice),
            };
            Ok((
                px.degenerate || py.degenerate,
                clip(&px.minmax, w.window)?,
                clip(&py.minmax, w.window)?,
                clip(&px.zscore, w.dtw_window)?,
                clip(&py.zscore, w.dtw_window)?,
            ))
        })(),
        ScalingScope::Wave => (|| {
            let (a, b) = w.window;
            let pxw = prepare(&x.slice_window(a, b)?, config.loess)?;
            let pyw = prepare(&y.slice_window(a, b)?, config.loess)?;
            let (a, b) = w.dtw_window;
            let pxd = prepare(&x.slice_window(a, b)?, config.loess)?;
            let pyd = prepare(&y.slice_window(a, b)?, config.loess)?;
            Ok((
                pxw.degenerate || pyw.degenerate || pxd.degenerate || pyd.degenerate,
                pxw.minmax.values().to_vec(),
                pyw.minmax.values().to_vec(),
                pxd.zscore.values().to_vec(),
                pyd.zscore.values().to_vec(),
            ))
        })(),
    };
    match built {
        Err(e) => fail(e),
        Ok((degenerate, x, y, xz, yz)) => {
            if degenerate || is_constant(&x) || is_constant(&y) {
                let flags = Flags {
                    degenerate: true,
                    ..Flags::default()
                };
                return Slot::Flagged(flags, Some("constant series".into()));
            }
            Slot::Ready(TrustInput {
                trust_id: trust.to_string(),
                x,
                y,
                xz,
                yz,
            })
        }
    }
}
