//! Multi-trial experiment results: seeded per-trial rows plus aggregates
//! that are recomputable from the rows, with the calibration snapshot the
//! run was configured from.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::Calibration;

/// A per-trial row that knows its success flag and its numeric metrics.
pub trait TrialMetrics {
    /// Whether the trial met its goal.
    fn success(&self) -> bool;
    /// Named numeric metrics, in a fixed order.
    fn metrics(&self) -> Vec<(&'static str, f64)>;
}

/// Aggregates over a set of trial rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregates {
    /// Number of rows aggregated.
    pub trials: usize,
    /// Rows whose success flag was set.
    pub successes: usize,
    /// `successes / trials` (zero for an empty set).
    pub success_rate: f64,
    /// Per-metric medians (mean of the two middle values on even counts).
    pub medians: BTreeMap<&'static str, f64>,
}

/// Recomputes the aggregates from scratch.
pub fn aggregate<R: TrialMetrics>(rows: &[R]) -> Aggregates {
    let successes = rows.iter().filter(|r| r.success()).count();
    let mut columns: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
    for row in rows {
        for (name, value) in row.metrics() {
            columns.entry(name).or_default().push(value);
        }
    }
    let medians = columns
        .into_iter()
        .map(|(name, mut values)| {
            values.sort_by(f64::total_cmp);
            let n = values.len();
            let median = if n % 2 == 1 {
                values[n / 2]
            } else {
                (values[n / 2 - 1] + values[n / 2]) / 2.0
            };
            (name, median)
        })
        .collect();
    Aggregates {
        trials: rows.len(),
        successes,
        success_rate: if rows.is_empty() {
            0.0
        } else {
            successes as f64 / rows.len() as f64
        },
        medians,
    }
}

/// One experiment: the generator/parameter spec it ran, the per-trial seeds,
/// the rows, their aggregates, and the calibration snapshot.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult<R: Serialize> {
    /// Human-readable description of what ran.
    pub spec: String,
    /// Seed used by each trial, in row order.
    pub seeds: Vec<u64>,
    /// Per-trial rows.
    pub trials: Vec<R>,
    /// Aggregates recomputable from `trials`.
    pub aggregates: Aggregates,
    /// Calibration the run was configured from.
    pub config: Calibration,
}

impl<R: Serialize + TrialMetrics> ExperimentResult<R> {
    /// Builds a result, computing the aggregates from the rows.
    pub fn new(spec: String, seeds: Vec<u64>, trials: Vec<R>, config: Calibration) -> Self {
        let aggregates = aggregate(&trials);
        ExperimentResult {
            spec,
            seeds,
            trials,
            aggregates,
            config,
        }
    }
}

/// One boosting trial, in the shape emitted per trial by the command line.
#[derive(Debug, Clone, Serialize)]
pub struct BoostTrialRow {
    /// 0-based trial index.
    pub trial: usize,
    /// Seed the trial ran under.
    pub seed: u64,
    /// Rounds that produced a hypothesis.
    pub rounds_used: usize,
    /// Labeled examples drawn (stream route) or implied by the oracle
    /// (query route with a sampling base).
    pub samples_consumed: u64,
    /// Base-oracle queries (query route; zero for the stream route).
    pub queries_consumed: u64,
    /// Smallest oracle tolerance used, when queries were issued.
    pub min_tolerance: Option<f64>,
    /// Counted state bits of the run.
    pub bits_counted: u64,
    /// Exact loss of the final majority against the target.
    pub final_loss: f64,
    /// Whether the run gave up before its horizon.
    pub aborted: bool,
    /// Whether `final_loss` met the configured target error.
    pub success: bool,
}

impl TrialMetrics for BoostTrialRow {
    fn success(&self) -> bool {
        self.success
    }

    fn metrics(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("rounds_used", self.rounds_used as f64),
            ("samples_consumed", self.samples_consumed as f64),
            ("queries_consumed", self.queries_consumed as f64),
            ("bits_counted", self.bits_counted as f64),
            ("final_loss", self.final_loss),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(trial: usize, loss: f64, rounds: usize, ok: bool) -> BoostTrialRow {
        BoostTrialRow {
            trial,
            seed: trial as u64,
            rounds_used: rounds,
            samples_consumed: 10 * rounds as u64,
            queries_consumed: 0,
            min_tolerance: None,
            bits_counted: 8,
            final_loss: loss,
            aborted: false,
            success: ok,
        }
    }

    #[test]
    fn aggregates_match_hand_computation() {
        let rows = vec![
            row(0, 0.02, 3, true),
            row(1, 0.50, 9, false),
            row(2, 0.04, 5, true),
        ];
        let agg = aggregate(&rows);
        assert_eq!(agg.trials, 3);
        assert_eq!(agg.successes, 2);
        assert_eq!(agg.success_rate, 2.0 / 3.0);
        assert_eq!(agg.medians["final_loss"], 0.04);
        assert_eq!(agg.medians["rounds_used"], 5.0);
        // Even count: mean of the two middle values.
        let agg4 = aggregate(&[rows[0].clone(), rows[1].clone()]);
        assert_eq!(agg4.medians["rounds_used"], 6.0);
    }

    #[test]
    fn result_aggregates_are_recomputable_from_rows() {
        let rows = vec![row(0, 0.1, 2, true), row(1, 0.2, 4, false)];
        let result = ExperimentResult::new("demo".into(), vec![0, 1], rows, Calibration::default());
        assert_eq!(result.aggregates, aggregate(&result.trials));
        let json = serde_json::to_value(&result).unwrap();
        assert_eq!(json["aggregates"]["successes"], 1);
        assert_eq!(json["trials"][1]["final_loss"], 0.2);
        assert!(json["trials"][0]["min_tolerance"].is_null());
    }

    #[test]
    fn empty_runs_aggregate_to_zero() {
        let agg = aggregate::<BoostTrialRow>(&[]);
        assert_eq!(agg.trials, 0);
        assert_eq!(agg.success_rate, 0.0);
        assert!(agg.medians.is_empty());
    }
}
