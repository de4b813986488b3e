//! Histogram support for studying how an automatic metric relates to human
//! judgments: bucket samples by metric value, optionally carrying a mean
//! human score per bucket.

use eib_core::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// One histogram row. `fraction` is relative to all bucketed values, and
/// `human_mean` is present only when human scores were supplied and the
/// bucket is non-empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    pub fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_mean: Option<f64>,
}

/// Buckets metric values into the half-open ranges defined by `edges`
/// (the last bucket includes its upper edge, so 1.0 lands in a [0.9, 1.0]
/// bucket). Empty buckets stay in the table as zero rows.
///
/// `edges` must be strictly increasing with at least two entries, and every
/// value must fall inside the covered range; `human_scores`, when given, must
/// pair up with `values` one to one.
pub fn bucket_by_metric(
    values: &[f64],
    human_scores: Option<&[f64]>,
    edges: &[f64],
) -> Result<Vec<Bucket>> {
    if edges.len() < 2 {
        return Err(CoreError::Config(
            "bucketing needs at least two edges".into(),
        ));
    }
    for pair in edges.windows(2) {
        if !(pair[0] < pair[1]) || !pair[0].is_finite() || !pair[1].is_finite() {
            return Err(CoreError::Config(format!(
                "bucket edges must be finite and strictly increasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    if let Some(human) = human_scores {
        if human.len() != values.len() {
            return Err(CoreError::Config(format!(
                "{} human scores for {} metric values",
                human.len(),
                values.len()
            )));
        }
    }

    let n_buckets = edges.len() - 1;
    let mut counts = vec![0u64; n_buckets];
    let mut human_sums = vec![0.0f64; n_buckets];
    for (i, &v) in values.iter().enumerate() {
        let lo = edges[0];
        let hi = edges[n_buckets];
        if !v.is_finite() || v < lo || v > hi {
            return Err(CoreError::Config(format!(
                "value {v} at position {i} is outside the bucket range [{lo}, {hi}]"
            )));
        }
        // partition_point finds the first edge above v, hence v's bucket;
        // the top edge itself folds into the last bucket.
        let idx = edges.partition_point(|e| *e <= v).min(n_buckets) - 1;
        counts[idx] += 1;
        if let Some(human) = human_scores {
            human_sums[idx] += human[i];
        }
    }

    let total = values.len() as f64;
    Ok((0..n_buckets)
        .map(|i| Bucket {
            lo: edges[i],
            hi: edges[i + 1],
            count: counts[i],
            fraction: if values.is_empty() {
                0.0
            } else {
                counts[i] as f64 / total
            },
            human_mean: match human_scores {
                Some(_) if counts[i] > 0 => Some(human_sums[i] / counts[i] as f64),
                _ => None,
            },
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const EDGES: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

    #[test]
    fn one_value_per_bucket_gives_a_uniform_table() {
        let values = [0.1, 0.3, 0.5, 0.7, 0.9];
        let table = bucket_by_metric(&values, None, &EDGES).unwrap();
        assert_eq!(table.len(), 5);
        for row in &table {
            assert_eq!(row.count, 1);
            assert!((row.fraction - 0.2).abs() < 1e-12);
            assert_eq!(row.human_mean, None);
        }
    }

    #[test]
    fn empty_buckets_stay_as_zero_rows() {
        let table = bucket_by_metric(&[0.05, 0.95], None, &EDGES).unwrap();
        assert_eq!(table.len(), 5);
        assert_eq!(table[0].count, 1);
        assert_eq!(table[4].count, 1);
        for row in &table[1..4] {
            assert_eq!((row.count, row.fraction), (0, 0.0));
        }
    }

    #[test]
    fn top_edge_is_inclusive_and_interior_edges_round_up() {
        let table = bucket_by_metric(&[0.2, 1.0], None, &EDGES).unwrap();
        assert_eq!(table[0].count, 0);
        assert_eq!(table[1].count, 1);
        assert_eq!(table[4].count, 1);
    }

    #[test]
    fn hand_tallied_ten_value_fixture() {
        let values = [0.05, 0.15, 0.25, 0.25, 0.45, 0.55, 0.61, 0.79, 0.8, 1.0];
        let human = [1.0, 2.0, 3.0, 5.0, 2.0, 4.0, 4.0, 5.0, 3.0, 5.0];
        let table = bucket_by_metric(&values, Some(&human), &EDGES).unwrap();
        let counts: Vec<u64> = table.iter().map(|b| b.count).collect();
        assert_eq!(counts, [2, 2, 2, 2, 2]);
        let means: Vec<f64> = table.iter().map(|b| b.human_mean.unwrap()).collect();
        assert_eq!(means, [1.5, 4.0, 3.0, 4.5, 4.0]);
    }

    #[test]
    fn out_of_range_and_non_finite_values_are_rejected() {
        assert!(bucket_by_metric(&[1.1], None, &EDGES).is_err());
        assert!(bucket_by_metric(&[-0.1], None, &EDGES).is_err());
        assert!(bucket_by_metric(&[f64::NAN], None, &EDGES).is_err());
    }

    #[test]
    fn bad_edges_and_mismatched_human_scores_are_rejected() {
        assert!(bucket_by_metric(&[0.5], None, &[0.0]).is_err());
        assert!(bucket_by_metric(&[0.5], None, &[0.0, 0.5, 0.5]).is_err());
        assert!(bucket_by_metric(&[0.5], None, &[0.0, 0.6, 0.4]).is_err());
        assert!(bucket_by_metric(&[0.5], Some(&[1.0, 2.0]), &EDGES).is_err());
    }

    #[test]
    fn no_values_yields_an_all_zero_table() {
        let table = bucket_by_metric(&[], None, &EDGES).unwrap();
        assert!(table.iter().all(|b| b.count == 0 && b.fraction == 0.0));
    }
}
