//! Synthetic admissions and indicators with a known injected lead.
//!
//! Admissions are sums of asymmetric Gaussian bumps (fast rise, slower
//! decline). An indicator is derived from admissions shifted earlier by the
//! injected lead, optionally damped by a multiplicative decay and perturbed by
//! Gaussian noise, so every recovery test has an exact ground truth.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::timeseries::{GeoLevel, Panel, SeriesKey, TimeSeries};

pub const ADMISSIONS: &str = "admissions";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveShape {
    pub peak_day: f64,
    pub rise_width: f64,
    pub fall_width: f64,
    pub amplitude: f64,
}

impl WaveShape {
    pub fn value(&self, t: f64) -> f64 {
        let w = if t <= self.peak_day {
            self.rise_width
        } else {
            self.fall_width
        };
        let z = (t - self.peak_day) / w;
        self.amplitude * (-0.5 * z * z).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSpec {
    pub name: String,
    /// Days by which the indicator precedes admissions.
    pub lead: i64,
    pub noise_sd: f64,
    /// Multiplicative decay per day, `exp(-rate * t)`.
    pub decay_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub trusts: usize,
    pub days: usize,
    pub start: NaiveDate,
    pub waves: Vec<WaveShape>,
    pub baseline: f64,
    /// Standard deviation (days) of per-trust peak-day offsets.
    pub peak_jitter: f64,
    /// Relative standard deviation of per-trust amplitudes.
    pub amplitude_jitter: f64,
    pub indicators: Vec<IndicatorSpec>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            trusts: 1,
            days: 200,
            start: NaiveDate::from_ymd_opt(2021, 10, 1).expect("valid date"),
            waves: vec![WaveShape {
                peak_day: 90.0,
                rise_width: 12.0,
                fall_width: 20.0,
                amplitude: 50.0,
            }],
            baseline: 0.0,
            peak_jitter: 0.0,
            amplitude_jitter: 0.0,
            indicators: Vec::new(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trusts == 0 || self.days < 2 {
            return Err(Error::InvalidParameter("spec needs >= 1 trust and >= 2 days".into()));
        }
        for ind in &self.indicators {
            if !(-35..=35).contains(&ind.lead) {
                return Err(Error::InvalidParameter(format!(
                    "lead {} of {} outside [-35, 35]",
                    ind.lead, ind.name
                )));
            }
            if !(ind.noise_sd >= 0.0) {
                return Err(Error::InvalidParameter(format!("noise sd of {} < 0", ind.name)));
            }
        }
        Ok(())
    }
}

pub fn trust_id(k: usize) -> String {
    format!("T{k:03}")
}

pub fn ltla_id(k: usize) -> String {
    format!("E{k:03}")
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-trust smooth admissions curves, variable [`ADMISSIONS`].
pub fn generate_admissions(spec: &SynthSpec) -> Result<Panel> {
    spec.validate()?;
    let mut panel = Panel::new(GeoLevel::Trust, spec.start, spec.days);
    let shift = Normal::new(0.0, spec.peak_jitter.max(0.0)).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let scale = Normal::new(1.0, spec.amplitude_jitter.max(0.0)).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    for k in 0..spec.trusts {
        let mut rng = stream_rng(spec.seed, k as u64);
        let waves: Vec<WaveShape> = spec
            .waves
            .iter()
            .map(|w| {
                let mut w = *w;
                if spec.peak_jitter > 0.0 {
                    w.peak_day += shift.sample(&mut rng);
                }
                if spec.amplitude_jitter > 0.0 {
                    w.amplitude *= scale.sample(&mut rng).max(0.1);
                }
                w
            })
            .collect();
        let values = (0..spec.days)
            .map(|t| spec.baseline + waves.iter().map(|w| w.value(t as f64)).sum::<f64>())
            .collect();
        panel.insert(
            SeriesKey::new(trust_id(k), ADMISSIONS),
            TimeSeries::new(spec.start, values)?,
        )?;
    }
    Ok(panel)
}

/// `indicator(t) = exp(-decay * t) * admissions(t + lead) + N(0, sd)`, with
/// `t + lead` clamped to the series range. Every admissions series in the
/// panel gets a matching indicator series named `name`.
pub fn derive_indicator(
    admissions: &Panel,
    name: &str,
    lead: i64,
    noise_sd: f64,
    decay_rate: f64,
    seed: u64,
) -> Result<Panel> {
    let n = admissions.len();
    if lead.unsigned_abs() as usize >= n {
        return Err(Error::ShiftOutOfRange { shift: lead, len: n });
    }
    let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut out = Panel::new(admissions.level(), admissions.start(), n);
    for (k, (key, s)) in admissions.iter().enumerate() {
        let mut rng = stream_rng(seed, k as u64);
        let v = s.values();
        let values = (0..n)
            .map(|t| {
                let src = (t as i64 + lead).clamp(0, n as i64 - 1) as usize;
                let damp = if decay_rate == 0.0 {
                    1.0
                } else {
                    (-decay_rate * t as f64).exp()
                };
                let clean = damp * v[src];
                if noise_sd > 0.0 {
                    clean + noise.sample(&mut rng)
                } else {
                    clean
                }
            })
            .collect();
        out.insert(
            SeriesKey::new(key.geo_id.clone(), name),
            TimeSeries::new(admissions.start(), values)?,
        )?;
    }
    Ok(out)
}

/// Injected lead per indicator, in spec order.
pub fn ground_truth(spec: &SynthSpec) -> Vec<(String, i64)> {
    spec.indicators
        .iter()
        .map(|i| (i.name.clone(), i.lead))
        .collect()
}

/// Files written by [`write_corpus`].
#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub config: PathBuf,
    pub admissions: PathBuf,
    pub indicators: PathBuf,
    pub mapping: PathBuf,
    pub population: PathBuf,
}

/// Layout of a file-based corpus: indicator sources, each a group of
/// indicators, and the wave boundaries (day offsets, inclusive).
#[derive(Debug, Clone)]
pub struct CorpusLayout {
    pub sources: Vec<(String, Vec<IndicatorSpec>)>,
    pub waves: Vec<(String, usize, usize)>,
    /// Reporting lag and release cadence (days) per source.
    pub latency: BTreeMap<String, (u32, u32)>,
}

/// Write admissions, LTLA-level indicators, mapping, population and a run
/// config in the pipeline's CSV/TOML schemas. LTLA `E{k}` sends 80% of its
/// admissions to trust `k` and 20% to trust `k + 1` (cyclically) and carries
/// trust `k`'s indicator values.
pub fn write_corpus(spec: &SynthSpec, layout: &CorpusLayout, dir: &Path) -> Result<CorpusPaths> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source: io::Error| Error::Io { path, source }
    };
    let ind_dir = dir.join("indicators");
    fs::create_dir_all(&ind_dir).map_err(io_err(&ind_dir))?;
    let admissions = generate_admissions(spec)?;
    let date = |t: usize| (spec.start + Days::new(t as u64)).format("%Y-%m-%d").to_string();

    let adm_path = dir.join("admissions.csv");
    let mut w = csv_writer(&adm_path)?;
    write_row(&mut w, &adm_path, &["trust_id", "date", "admissions"])?;
    for (key, s) in admissions.iter() {
        for (t, v) in s.values().iter().enumerate() {
            let count = format!("{}", v.round().max(0.0) as i64);
            write_row(&mut w, &adm_path, &[&key.geo_id, &date(t), &count])?;
        }
    }
    finish(w, &adm_path)?;

    let mut seed = spec.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    for (source, indicators) in &layout.sources {
        let path = ind_dir.join(format!("{source}.csv"));
        let mut w = csv_writer(&path)?;
        write_row(&mut w, &path, &["geo_id", "date", "variable", "value"])?;
        for ind in indicators {
            seed = seed.wrapping_add(1);
            let panel = derive_indicator(&admissions, &ind.name, ind.lead, ind.noise_sd, ind.decay_rate, seed)?;
            for (k, (_, s)) in panel.iter().enumerate() {
                let ltla = ltla_id(k);
                for (t, v) in s.values().iter().enumerate() {
                    write_row(&mut w, &path, &[&ltla, &date(t), &ind.name, &format!("{v}")])?;
                }
            }
        }
        finish(w, &path)?;
    }

    let map_path = dir.join("mapping.csv");
    let mut w = csv_writer(&map_path)?;
    write_row(&mut w, &map_path, &["ltla_id", "trust_id", "admissions"])?;
    for k in 0..spec.trusts {
        let next = (k + 1) % spec.trusts;
        write_row(&mut w, &map_path, &[&ltla_id(k), &trust_id(k), "80"])?;
        if next != k {
            write_row(&mut w, &map_path, &[&ltla_id(k), &trust_id(next), "20"])?;
        }
    }
    finish(w, &map_path)?;

    let pop_path = dir.join("population.csv");
    let mut w = csv_writer(&pop_path)?;
    write_row(&mut w, &pop_path, &["ltla_id", "population"])?;
    let mut rng = stream_rng(spec.seed, u64::MAX);
    for k in 0..spec.trusts {
        let pop = rng.random_range(50_000..400_000u32).to_string();
        write_row(&mut w, &pop_path, &[&ltla_id(k), &pop])?;
    }
    finish(w, &pop_path)?;

    let mut cfg = String::from("horizon_days = 14\ngranger_max_lag = 3\nccf_window = 30\ndtw_window = 35\nmin_admissions = 10\n\n");
    for (name, a, b) in &layout.waves {
        cfg.push_str(&format!(
            "[[waves]]\nname = \"{name}\"\nstart = \"{}\"\nend = \"{}\"\n\n",
            date(*a),
            date(*b)
        ));
    }
    for (source, (lag, cadence)) in &layout.latency {
        cfg.push_str(&format!(
            "[latency.{source}]\nlag_days = {lag}\ncadence_days = {cadence}\n\n"
        ));
    }
    let cfg_path = dir.join("config.toml");
    fs::write(&cfg_path, cfg).map_err(io_err(&cfg_path))?;

    Ok(CorpusPaths {
        config: cfg_path,
        admissions: adm_path,
        indicators: ind_dir,
        mapping: map_path,
        population: pop_path,
    })
}

/// A corpus sized like the operational study: 121 trusts over 333 days,
/// 20 indicators in four sources and three waves.
pub fn study_scale(seed: u64) -> (SynthSpec, CorpusLayout) {
    let spec = SynthSpec {
        trusts: 121,
        days: 333,
        waves: vec![
            WaveShape { peak_day: 85.0, rise_width: 12.0, fall_width: 22.0, amplitude: 40.0 },
            WaveShape { peak_day: 170.0, rise_width: 14.0, fall_width: 24.0, amplitude: 30.0 },
            WaveShape { peak_day: 270.0, rise_width: 15.0, fall_width: 25.0, amplitude: 35.0 },
        ],
        baseline: 3.0,
        peak_jitter: 4.0,
        amplitude_jitter: 0.2,
        seed,
        ..SynthSpec::default()
    };
    let family = |prefix: &str, leads: [i64; 5], sd: f64, decay: f64| {
        leads
            .iter()
            .enumerate()
            .map(|(k, &lead)| IndicatorSpec {
                name: format!("{prefix}_{k}"),
                lead,
                noise_sd: sd,
                decay_rate: decay,
            })
            .collect::<Vec<_>>()
    };
    let sources = vec![
        ("google".to_string(), family("google", [5, 8, 10, 12, 15], 1.5, 0.0)),
        ("nhs111".to_string(), family("nhs111", [10, 12, 14, 16, 20], 1.0, 0.0)),
        ("lfd".to_string(), family("lfd", [-3, 0, 2, 4, 7], 2.0, 0.0)),
        ("zoe".to_string(), family("zoe", [6, 9, 11, 13, 18], 1.0, 0.002)),
    ];
    let mut indicators = Vec::new();
    for (_, f) in &sources {
        indicators.extend(f.iter().cloned());
    }
    let spec = SynthSpec { indicators, ..spec };
    let layout = CorpusLayout {
        sources,
        waves: vec![
            ("BA.1".to_string(), 30, 125),
            ("BA.2".to_string(), 126, 220),
            ("BA.4-5".to_string(), 221, 332),
        ],
        latency: [
            ("google".to_string(), (1, 1)),
            ("nhs111".to_string(), (2, 1)),
            ("lfd".to_string(), (1, 7)),
            ("zoe".to_string(), (1, 1)),
        ]
        .into(),
    };
    (spec, layout)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_row(w: &mut csv::Writer<fs::File>, path: &Path, row: &[&str]) -> Result<()> {
    w.write_record(row).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
