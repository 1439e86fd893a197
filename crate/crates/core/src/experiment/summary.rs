use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::agents::Variant;
use crate::env::Observability;
use crate::trainer::MetricsRecord;
use crate::{Error, Result};

/// Mean and sample standard deviation across seeds for one
/// `(observability, variant, budget, bucket)` group. Each seed contributes
/// the mean of its evaluations inside the bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub observability: Observability,
    pub variant: Variant,
    pub budget: u32,
    pub bucket: usize,
    /// Inclusive episode range covered by the bucket.
    pub episode_start: usize,
    pub episode_end: usize,
    pub seeds: usize,
    /// Only one seed contributed; the deviations are reported as 0.
    pub single_seed: bool,
    pub team_distance_mean: f64,
    pub team_distance_std: f64,
    pub difference_mean: f64,
    pub difference_std: f64,
}

/// `(mean, sample std)`; the deviation of a single value is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

type GroupKey = (&'static str, Variant, u32, usize);
/// seed -> (sum distance, sum difference, count)
type SeedSums = BTreeMap<u64, (f64, f64, usize)>;

pub fn summarize(records: &[MetricsRecord], bucket_width: usize) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    if bucket_width == 0 {
        return Err(Error::Config("bucket width must be positive".into()));
    }
    let mut groups: BTreeMap<GroupKey, (Observability, SeedSums)> = BTreeMap::new();
    for r in records {
        let key = (r.observability.as_str(), r.variant, r.budget, r.episode / bucket_width);
        let entry = groups.entry(key).or_insert_with(|| (r.observability, BTreeMap::new()));
        let acc = entry.1.entry(r.seed).or_insert((0.0, 0.0, 0));
        acc.0 += r.team_distance;
        acc.1 += r.difference;
        acc.2 += 1;
    }
    Ok(groups
        .into_iter()
        .map(|((_, variant, budget, bucket), (observability, seeds))| {
            let dist: Vec<f64> = seeds.values().map(|a| a.0 / a.2 as f64).collect();
            let diff: Vec<f64> = seeds.values().map(|a| a.1 / a.2 as f64).collect();
            let (team_distance_mean, team_distance_std) = mean_std(&dist);
            let (difference_mean, difference_std) = mean_std(&diff);
            SummaryRow {
                observability,
                variant,
                budget,
                bucket,
                episode_start: bucket * bucket_width,
                episode_end: (bucket + 1) * bucket_width - 1,
                seeds: seeds.len(),
                single_seed: seeds.len() == 1,
                team_distance_mean,
                team_distance_std,
                difference_mean,
                difference_std,
            }
        })
        .collect())
}

pub fn write_csv<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::Format(format!("csv: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(variant: Variant, budget: u32, seed: u64, episode: usize, d: f64) -> MetricsRecord {
        MetricsRecord {
            run_id: String::new(),
            variant,
            observability: Observability::Partial,
            budget,
            seed,
            episode,
            team_distance: d,
            difference: d / 2.0,
            messages_attempted: 0.0,
            messages_delivered: 0.0,
            train_team_distance: None,
            train_reward: None,
            critic_loss: None,
            actor_objective: None,
            updates: 0,
            divergent_updates: 0,
            batch_episodes: 0,
            wall_clock_secs: None,
        }
    }

    #[test]
    fn mean_across_four_seeds() {
        let rs: Vec<_> = (0..4).map(|s| rec(Variant::Maddpg, 20, s, 10, (s + 1) as f64)).collect();
        let rows = summarize(&rs, 100).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].team_distance_mean, 2.5);
        let expected_std = ((1.5f64.powi(2) * 2.0 + 0.5f64.powi(2) * 2.0) / 3.0).sqrt();
        assert!((rows[0].team_distance_std - expected_std).abs() < 1e-12);
        assert!(!rows[0].single_seed);
    }

    #[test]
    fn single_seed_is_flagged() {
        let rows = summarize(&[rec(Variant::Ra, 0, 3, 0, 4.0)], 100).unwrap();
        assert!(rows[0].single_seed);
        assert_eq!(rows[0].team_distance_std, 0.0);
    }

    #[test]
    fn rows_form_the_cartesian_grid() {
        let mut rs = Vec::new();
        for v in [Variant::Maddpg, Variant::Rmaddpg] {
            for b in [20, 50, 200] {
                for s in 0..2 {
                    for e in [0, 50, 100, 150, 250] {
                        rs.push(rec(v, b, s, e, 1.0));
                    }
                }
            }
        }
        assert_eq!(summarize(&rs, 100).unwrap().len(), 2 * 3 * 3);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(summarize(&[], 100), Err(Error::EmptyInput)));
    }

    #[test]
    fn csv_has_a_header_and_one_line_per_row() {
        let rows = summarize(&[rec(Variant::Rc, 5, 0, 0, 1.0), rec(Variant::Rc, 5, 0, 120, 1.0)], 100).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("observability,variant,budget,bucket,"));
    }
}
