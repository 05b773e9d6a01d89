use std::collections::{HashMap, HashSet};

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use super::StatsError;

/// One model's score on one benchmark, as fractions in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCell {
    pub model: String,
    pub benchmark: String,
    pub mean: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedScore {
    pub benchmark: String,
    /// Percent.
    pub mean_f1: f64,
    /// Percent.
    pub ci_half_width: f64,
    pub rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub model: String,
    /// In benchmark order.
    pub scores: Vec<RankedScore>,
    pub median_rank: f64,
}

/// Leaderboard: rows sorted by median rank, then model name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub benchmarks: Vec<String>,
    pub rows: Vec<ModelRow>,
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Competition ranks with ties sharing the average of the occupied positions.
/// Rank 1 is the highest score.
fn average_ranks(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share ranks i+1..=j+1
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Rank every model per benchmark and order models by median rank.
///
/// Benchmarks and models keep the order of their first appearance in `cells`.
pub fn rank_and_aggregate(cells: &[ScoreCell]) -> Result<ScoreTable, StatsError> {
    let models: IndexSet<&str> = cells.iter().map(|c| c.model.as_str()).collect();
    let benchmarks: IndexSet<&str> = cells.iter().map(|c| c.benchmark.as_str()).collect();
    let mut lookup: HashMap<(&str, &str), &ScoreCell> = HashMap::new();
    for c in cells {
        if lookup.insert((&c.model, &c.benchmark), c).is_some() {
            return Err(StatsError::DuplicateCell {
                model: c.model.clone(),
                benchmark: c.benchmark.clone(),
            });
        }
    }
    let mut per_model: Vec<Vec<RankedScore>> = vec![Vec::new(); models.len()];
    for &bench in &benchmarks {
        let column = models
            .iter()
            .map(|&m| {
                lookup.get(&(m, bench)).copied().ok_or_else(|| StatsError::MissingCell {
                    model: m.to_string(),
                    benchmark: bench.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let means: Vec<f64> = column.iter().map(|c| c.mean).collect();
        for ((cell, rank), row) in column.iter().zip(average_ranks(&means)).zip(&mut per_model) {
            row.push(RankedScore {
                benchmark: bench.to_string(),
                mean_f1: cell.mean * 100.0,
                ci_half_width: cell.half_width * 100.0,
                rank,
            });
        }
    }
    let mut rows: Vec<ModelRow> = models
        .iter()
        .zip(per_model)
        .map(|(&model, scores)| {
            let mut ranks: Vec<f64> = scores.iter().map(|s| s.rank).collect();
            ModelRow {
                model: model.to_string(),
                median_rank: if ranks.is_empty() { 0.0 } else { median(&mut ranks) },
                scores,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.median_rank.total_cmp(&b.median_rank).then_with(|| a.model.cmp(&b.model)));
    Ok(ScoreTable {
        benchmarks: benchmarks.iter().map(|b| b.to_string()).collect(),
        rows,
    })
}

impl ScoreTable {
    pub fn row(&self, model: &str) -> Option<&ModelRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    /// Check the structural invariants: full grid, ranks in [1, n], median consistent.
    pub fn validate(&self) -> Result<(), StatsError> {
        let n = self.rows.len() as f64;
        let mut seen = HashSet::new();
        for row in &self.rows {
            for b in &self.benchmarks {
                let Some(s) = row.scores.iter().find(|s| &s.benchmark == b) else {
                    return Err(StatsError::MissingCell {
                        model: row.model.clone(),
                        benchmark: b.clone(),
                    });
                };
                if !(1.0..=n).contains(&s.rank) {
                    return Err(StatsError::Parse(format!("rank {} out of range", s.rank)));
                }
            }
            if !seen.insert(&row.model) {
                return Err(StatsError::Parse(format!("model {} listed twice", row.model)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cell(model: &str, bench: &str, mean: f64) -> ScoreCell {
        ScoreCell {
            model: model.into(),
            benchmark: bench.into(),
            mean,
            half_width: 0.01,
        }
    }

    #[test]
    fn simple_ordering() {
        let t = rank_and_aggregate(&[cell("a", "x", 0.9), cell("b", "x", 0.8), cell("c", "x", 0.7)]).unwrap();
        let ranks: Vec<f64> = t.rows.iter().map(|r| r.scores[0].rank).collect();
        assert_eq!(ranks, vec![1.0, 2.0, 3.0]);
        assert_eq!(t.rows[0].scores[0].mean_f1, 90.0);
        t.validate().unwrap();
    }

    #[test]
    fn ties_share_average_rank() {
        let t = rank_and_aggregate(&[cell("a", "x", 0.5), cell("b", "x", 0.5), cell("c", "x", 0.1)]).unwrap();
        assert_eq!(t.row("a").unwrap().scores[0].rank, 1.5);
        assert_eq!(t.row("b").unwrap().scores[0].rank, 1.5);
        assert_eq!(t.row("c").unwrap().scores[0].rank, 3.0);
        assert_eq!(average_ranks(&[1.0, 1.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn median_definition() {
        assert_eq!(median(&mut [1.0, 3.0, 3.0, 4.0, 14.0]), 3.0);
        assert_eq!(median(&mut [3.0, 1.0, 4.0, 3.0, 14.0]), 3.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn missing_and_duplicate_cells() {
        let err = rank_and_aggregate(&[cell("a", "x", 0.5), cell("b", "y", 0.5)]).unwrap_err();
        assert_eq!(
            err,
            StatsError::MissingCell {
                model: "b".into(),
                benchmark: "x".into()
            }
        );
        assert!(matches!(
            rank_and_aggregate(&[cell("a", "x", 0.5), cell("a", "x", 0.4)]),
            Err(StatsError::DuplicateCell { .. })
        ));
    }

    #[test]
    fn sorted_by_median_then_name() {
        let cells = [
            cell("zeta", "x", 0.9),
            cell("alpha", "x", 0.1),
            cell("beta", "x", 0.9),
            cell("zeta", "y", 0.1),
            cell("alpha", "y", 0.9),
            cell("beta", "y", 0.1),
        ];
        let t = rank_and_aggregate(&cells).unwrap();
        let names: Vec<&str> = t.rows.iter().map(|r| r.model.as_str()).collect();
        // alpha: ranks 3,1 -> 2; beta and zeta: 1.5,2.5 -> 2
        assert_eq!(names, vec!["alpha", "beta", "zeta"]);
        assert_eq!(t.benchmarks, vec!["x", "y"]);
    }

    proptest! {
        #[test]
        fn shift_invariance(
            grid in proptest::collection::vec(proptest::collection::vec(0u32..64, 3), 4),
            shift in -32i32..32,
            bench in 0usize..3,
        ) {
            // dyadic values so the shifted sums are exact
            let cells = |delta: f64| {
                let mut v = Vec::new();
                for (m, scores) in grid.iter().enumerate() {
                    for (b, &s) in scores.iter().enumerate() {
                        let add = if b == bench { delta } else { 0.0 };
                        v.push(cell(&format!("m{m}"), &format!("b{b}"), s as f64 / 64.0 + add));
                    }
                }
                v
            };
            let base = rank_and_aggregate(&cells(0.0)).unwrap();
            let moved = rank_and_aggregate(&cells(shift as f64 / 64.0)).unwrap();
            for row in &base.rows {
                let other = moved.row(&row.model).unwrap();
                prop_assert_eq!(row.median_rank, other.median_rank);
                for (a, b) in row.scores.iter().zip(&other.scores) {
                    prop_assert_eq!(a.rank, b.rank);
                }
            }
        }

        #[test]
        fn ranks_sum_like_permutation(scores in proptest::collection::vec(0u8..5, 1..10)) {
            let s: Vec<f64> = scores.iter().map(|&x| x as f64).collect();
            let ranks = average_ranks(&s);
            let n = s.len() as f64;
            prop_assert!((ranks.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
        }
    }
}
