//! Pacing quality metrics: pacing error, multiplier volatility and CPM.
//!
//! The accumulators are single pass so they can run alongside a
//! simulation; the slice functions are thin wrappers over them.

use crate::controllers::Tolerance;
use crate::plant::CycleRecord;

/// Running mean relative absolute deviation of spend from target.
#[derive(Debug, Clone, Copy, Default)]
pub struct PacingErrorAcc {
    sum: f64,
    n: usize,
    overspend_on_zero_target: usize,
}

impl PacingErrorAcc {
    pub fn push(&mut self, actual: f64, target: f64) {
        if target > 0.0 {
            self.sum += (actual - target).abs() / target;
            self.n += 1;
        } else if actual > 0.0 {
            self.overspend_on_zero_target += 1;
        }
    }

    /// Slots that spent against a zero target; any such slot makes the
    /// metric infinite.
    pub fn flagged_slots(&self) -> usize {
        self.overspend_on_zero_target
    }

    pub fn value(&self) -> f64 {
        if self.overspend_on_zero_target > 0 {
            f64::INFINITY
        } else if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }
}

/// Welford accumulator for the coefficient of variation (population std).
#[derive(Debug, Clone, Copy, Default)]
pub struct VolatilityAcc {
    n: usize,
    mean: f64,
    m2: f64,
}

impl VolatilityAcc {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn value(&self) -> f64 {
        if self.n == 0 || self.mean == 0.0 {
            return 0.0;
        }
        libm::sqrt((self.m2 / self.n as f64).max(0.0)) / self.mean
    }
}

/// Mean relative absolute deviation of per-slot spend from target.
///
/// Slots with zero target and zero spend are skipped; spend against a zero
/// target makes the result `+inf`.
pub fn pacing_error(actual: &[f64], target: &[f64]) -> f64 {
    assert_eq!(
        actual.len(),
        target.len(),
        "actual and target spend must align"
    );
    let mut acc = PacingErrorAcc::default();
    for (&a, &t) in actual.iter().zip(target) {
        acc.push(a, t);
    }
    acc.value()
}

/// Coefficient of variation of a multiplier trace.
pub fn lambda_volatility(lambdas: &[f64]) -> f64 {
    let mut acc = VolatilityAcc::default();
    lambdas.iter().for_each(|&l| acc.push(l));
    acc.value()
}

/// Cost per thousand impressions; `None` without impressions.
pub fn cpm(total_spend: f64, impressions_won: u64) -> Option<f64> {
    (impressions_won > 0).then(|| 1000.0 * total_spend / impressions_won as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub pacing_error: f64,
    pub lambda_volatility: f64,
    pub cpm: Option<f64>,
    /// Number of cycles the report covers.
    pub n_cycles: usize,
}

impl MetricsReport {
    /// Metrics over `records`, with pacing error measured on slots of
    /// `slot_width` consecutive cycles.
    pub fn from_records(records: &[CycleRecord], slot_width: usize) -> Self {
        let slot_width = slot_width.max(1);
        let mut pe = PacingErrorAcc::default();
        let mut vol = VolatilityAcc::default();
        let (mut spend, mut wins) = (0.0, 0u64);
        let (mut slot_actual, mut slot_target, mut in_slot) = (0.0, 0.0, 0usize);
        for r in records {
            vol.push(r.lambda);
            spend += r.cycle_spend;
            wins += r.wins;
            slot_actual += r.cycle_spend;
            slot_target += r.target_spend;
            in_slot += 1;
            if in_slot == slot_width {
                pe.push(slot_actual, slot_target);
                (slot_actual, slot_target, in_slot) = (0.0, 0.0, 0);
            }
        }
        if in_slot > 0 {
            pe.push(slot_actual, slot_target);
        }
        Self {
            pacing_error: pe.value(),
            lambda_volatility: vol.value(),
            cpm: cpm(spend, wins),
            n_cycles: records.len(),
        }
    }
}

/// Cycles from `from` until observed spend is back inside the tolerance band
/// around the desired rate, counted to the start of the first run of `dwell`
/// consecutive in-band cycles. `None` if that never happens.
pub fn time_to_reenter(
    records: &[CycleRecord],
    from: usize,
    tolerance: Tolerance,
    dwell: usize,
) -> Option<usize> {
    let dwell = dwell.max(1);
    let mut run = 0;
    for (i, r) in records.iter().enumerate().skip(from) {
        if (r.cycle_spend - r.desired_rate).abs() < tolerance.at(r.desired_rate) {
            run += 1;
            if run == dwell {
                return Some(i + 1 - dwell - from);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// Percentage change of each metric relative to a reference run. Negative
/// is better for pacing error and volatility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricDeltas {
    pub pacing_error: Option<f64>,
    pub lambda_volatility: Option<f64>,
    pub cpm: Option<f64>,
}

fn percent_change(test: f64, baseline: f64) -> Option<f64> {
    (baseline != 0.0 && baseline.is_finite() && test.is_finite())
        .then(|| 100.0 * (test - baseline) / baseline)
}

pub fn delta_vs_baseline(test: &MetricsReport, baseline: &MetricsReport) -> MetricDeltas {
    MetricDeltas {
        pacing_error: percent_change(test.pacing_error, baseline.pacing_error),
        lambda_volatility: percent_change(test.lambda_volatility, baseline.lambda_volatility),
        cpm: match (test.cpm, baseline.cpm) {
            (Some(t), Some(b)) => percent_change(t, b),
            _ => None,
        },
    }
}
