//! Probabilistic LTLA to Trust catchment mapping.
//!
//! Each LTLA spreads its weight across Trusts in proportion to where its
//! residents were admitted. Indicator values and populations are then moved to
//! Trust level as weighted sums.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::timeseries::{GeoLevel, Panel, SeriesKey, TimeSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct MappingRecord {
    pub ltla_id: String,
    pub trust_id: String,
    pub admissions: f64,
}

impl MappingRecord {
    pub fn new(ltla_id: impl Into<String>, trust_id: impl Into<String>, admissions: f64) -> Self {
        Self {
            ltla_id: ltla_id.into(),
            trust_id: trust_id.into(),
            admissions,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeoMapping {
    ltlas: Vec<String>,
    trusts: Vec<String>,
    /// `weights[l][t]`, rows indexed like `ltlas`, columns like `trusts`.
    weights: Vec<Vec<f64>>,
    /// LTLAs with no admissions on record; their rows are all zero.
    zero_rows: BTreeSet<String>,
}

impl GeoMapping {
    pub fn ltlas(&self) -> &[String] {
        &self.ltlas
    }

    pub fn trusts(&self) -> &[String] {
        &self.trusts
    }

    pub fn zero_rows(&self) -> &BTreeSet<String> {
        &self.zero_rows
    }

    pub fn weight(&self, ltla: &str, trust: &str) -> f64 {
        match (self.ltla_index(ltla), self.trust_index(trust)) {
            (Some(l), Some(t)) => self.weights[l][t],
            _ => 0.0,
        }
    }

    pub fn row(&self, ltla: &str) -> Option<&[f64]> {
        self.ltla_index(ltla).map(|l| self.weights[l].as_slice())
    }

    fn ltla_index(&self, id: &str) -> Option<usize> {
        self.ltlas.binary_search_by(|x| x.as_str().cmp(id)).ok()
    }

    fn trust_index(&self, id: &str) -> Option<usize> {
        self.trusts.binary_search_by(|x| x.as_str().cmp(id)).ok()
    }
}

/// `w[l][t] = count(l, t) / sum_t count(l, t)`. Repeated `(l, t)` records are
/// summed. LTLAs whose counts are all zero are kept as flagged zero rows.
pub fn build_mapping(records: &[MappingRecord]) -> Result<GeoMapping> {
    if records.is_empty() {
        return Err(Error::EmptyMapping);
    }
    let mut counts: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    let mut trusts = BTreeSet::new();
    for r in records {
        if !(r.admissions >= 0.0) || !r.admissions.is_finite() {
            return Err(Error::NegativeCount {
                ltla: r.ltla_id.clone(),
                trust: r.trust_id.clone(),
                count: r.admissions,
            });
        }
        *counts
            .entry(&r.ltla_id)
            .or_default()
            .entry(&r.trust_id)
            .or_insert(0.0) += r.admissions;
        trusts.insert(r.trust_id.as_str());
    }
    if records.iter().all(|r| r.admissions == 0.0) {
        return Err(Error::EmptyMapping);
    }
    let trusts: Vec<String> = trusts.into_iter().map(String::from).collect();
    let mut zero_rows = BTreeSet::new();
    let mut weights = Vec::with_capacity(counts.len());
    for (ltla, row) in &counts {
        let total: f64 = row.values().sum();
        let w: Vec<f64> = trusts
            .iter()
            .map(|t| match row.get(t.as_str()) {
                Some(c) if total > 0.0 => c / total,
                _ => 0.0,
            })
            .collect();
        if total == 0.0 {
            zero_rows.insert(ltla.to_string());
        }
        weights.push(w);
    }
    Ok(GeoMapping {
        ltlas: counts.keys().map(|s| s.to_string()).collect(),
        trusts,
        weights,
        zero_rows,
    })
}

/// Trust-level panel plus the LTLAs (per variable) the mapping expected but the
/// panel did not contain.
#[derive(Debug, Clone)]
pub struct MappedPanel {
    pub panel: Panel,
    pub absent_ltlas: BTreeMap<String, Vec<String>>,
}

/// `value(t, day) = sum_l w[l][t] * value(l, day)` for every variable.
pub fn apply_mapping(panel: &Panel, mapping: &GeoMapping) -> Result<MappedPanel> {
    let unknown: Vec<String> = panel
        .geo_ids()
        .into_iter()
        .filter(|g| mapping.ltla_index(g).is_none())
        .map(String::from)
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownGeo(unknown));
    }
    let mut out = Panel::new(GeoLevel::Trust, panel.start(), panel.len());
    let mut absent_ltlas = BTreeMap::new();
    for variable in panel.variables() {
        let members: Vec<(usize, &TimeSeries)> = panel
            .variable(variable)
            .map(|(g, s)| (mapping.ltla_index(g).expect("checked above"), s))
            .collect();
        for (_, s) in &members {
            s.require_complete()?;
        }
        let present: BTreeSet<usize> = members.iter().map(|(l, _)| *l).collect();
        let absent: Vec<String> = (0..mapping.ltlas.len())
            .filter(|l| !present.contains(l))
            .map(|l| mapping.ltlas[l].clone())
            .collect();
        if !absent.is_empty() {
            absent_ltlas.insert(variable.to_string(), absent);
        }
        for (t, trust) in mapping.trusts.iter().enumerate() {
            let mut acc = vec![0.0; panel.len()];
            for (l, s) in &members {
                let w = mapping.weights[*l][t];
                if w == 0.0 {
                    continue;
                }
                for (a, v) in acc.iter_mut().zip(s.values()) {
                    *a += w * v;
                }
            }
            out.insert(
                SeriesKey::new(trust.clone(), variable),
                TimeSeries::new(panel.start(), acc)?,
            )?;
        }
        if let Some(span) = panel.coverage(variable) {
            out.set_coverage(variable, span);
        }
    }
    Ok(MappedPanel {
        panel: out,
        absent_ltlas,
    })
}

/// Residential population per LTLA.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PopulationTable(BTreeMap<String, f64>);

impl PopulationTable {
    pub fn new(entries: BTreeMap<String, f64>) -> Result<Self> {
        if let Some((id, p)) = entries.iter().find(|(_, p)| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("population of {id} is {p}")));
        }
        Ok(Self(entries))
    }

    pub fn get(&self, ltla: &str) -> Option<f64> {
        self.0.get(ltla).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// `pop(t) = sum_l w[l][t] * pop(l)`.
pub fn weighted_population(
    mapping: &GeoMapping,
    pop: &PopulationTable,
) -> Result<BTreeMap<String, f64>> {
    let missing: Vec<String> = mapping
        .ltlas
        .iter()
        .filter(|l| pop.get(l).is_none())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPopulation(missing));
    }
    Ok(mapping
        .trusts
        .iter()
        .enumerate()
        .map(|(t, trust)| {
            let total = mapping
                .ltlas
                .iter()
                .zip(&mapping.weights)
                .map(|(l, row)| row[t] * pop.get(l).unwrap_or(0.0))
                .sum();
            (trust.clone(), total)
        })
        .collect())
}
