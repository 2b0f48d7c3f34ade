use std::fmt::Write;

use serde::{Deserialize, Serialize};

pub const METRICS_SCHEMA_VERSION: u32 = 1;

/// Columns of the per-round CSV. Accuracies are blank when no labelled
/// evaluation set was supplied.
pub const METRICS_CSV_HEADER: &str =
    "schema_version,round,n,alpha,loss,local_accuracy,global_accuracy";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub n: usize,
    pub alpha: f64,
    /// Global-model loss on the union of client data.
    pub loss: f64,
    /// Mean accuracy of the uploaded (masked) local models.
    pub local_accuracy: Option<f64>,
    pub global_accuracy: Option<f64>,
}

pub fn metrics_csv(rows: &[RoundMetrics]) -> String {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut s = String::from(METRICS_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{METRICS_SCHEMA_VERSION},{},{},{},{},{},{}",
            r.round,
            r.n,
            r.alpha,
            r.loss,
            opt(r.local_accuracy),
            opt(r.global_accuracy)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let rows = [RoundMetrics {
            round: 0,
            n: 3,
            alpha: 0.5,
            loss: 1.25,
            local_accuracy: None,
            global_accuracy: Some(0.9),
        }];
        let csv = metrics_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], METRICS_CSV_HEADER);
        assert_eq!(lines[1], "1,0,3,0.5,1.25,,0.9");
    }
}
