//! Run reports and benchmark aggregation.

use serde::{Deserialize, Serialize};

/// Machine-readable summary of one solve, emitted by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub objective: usize,
    pub lower_bound: i64,
    pub status: String,
    pub wall_time_s: f64,
    pub nodes_processed: u64,
    pub lp_solves: u64,
    pub pricing_rounds: u64,
    pub farkas_rounds: u64,
    pub columns_added: u64,
    pub labels_generated: u64,
    pub labels_dominated: u64,
    pub merges_attempted: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root_lp: Option<f64>,
}

/// One benchmark cell: a solver variant on one instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub variant: String,
    pub objective: Option<usize>,
    pub time_s: f64,
    pub timed_out: bool,
    pub nodes_processed: u64,
    pub labels_generated: u64,
}

/// Aggregate over all instances for one variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchSummary {
    pub variant: String,
    pub solved: usize,
    pub total: usize,
    pub shifted_geomean_time_s: f64,
}

/// Shifted geometric mean with shift 1: exp(mean(ln(x_i + 1))) - 1.
pub fn shifted_geomean(values: &[f64], shift: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let sum: f64 = values.iter().map(|&v| (v + shift).ln()).sum();
    (sum / values.len() as f64).exp() - shift
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geomean_of_one_and_seven_is_three() {
        // sqrt((1+1)(7+1)) - 1 = 4 - 1 = 3
        let g = shifted_geomean(&[1.0, 7.0], 1.0);
        assert!((g - 3.0).abs() < 1e-12, "{g}");
    }

    #[test]
    fn geomean_constant() {
        let g = shifted_geomean(&[5.0, 5.0, 5.0], 1.0);
        assert!((g - 5.0).abs() < 1e-12);
    }

    #[test]
    fn geomean_empty() {
        assert_eq!(shifted_geomean(&[], 1.0), 0.0);
    }

    #[test]
    fn report_serializes() {
        let r = RunReport {
            objective: 3,
            lower_bound: 3,
            status: "optimal".into(),
            wall_time_s: 0.01,
            nodes_processed: 1,
            lp_solves: 2,
            pricing_rounds: 2,
            farkas_rounds: 0,
            columns_added: 5,
            labels_generated: 10,
            labels_dominated: 2,
            merges_attempted: 4,
            root_lp: Some(2.5),
        };
        let j = serde_json::to_string(&r).unwrap();
        let back: RunReport = serde_json::from_str(&j).unwrap();
        assert_eq!(back.objective, 3);
    }
}
