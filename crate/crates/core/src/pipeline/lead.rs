use serde::Serialize;

use super::config::Latency;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveLead {
    pub days: f64,
    /// Reporting delay consumed the whole lead.
    pub eroded: bool,
}

/// Lead left once the feed's reporting lag and worst-case release staleness
/// (`cadence - 1` days) are subtracted. Floored at zero for leading
/// indicators; a lagging indicator keeps its own (negative) lead, so the
/// result never exceeds the statistical lead.
pub fn effective_lead(statistical: f64, latency: Latency) -> EffectiveLead {
    let staleness = latency.cadence_days.saturating_sub(1);
    let raw = statistical - f64::from(latency.lag_days) - f64::from(staleness);
    if raw >= 0.0 {
        EffectiveLead {
            days: raw,
            eroded: false,
        }
    } else {
        EffectiveLead {
            days: statistical.min(0.0),
            eroded: statistical > 0.0,
        }
    }
}
