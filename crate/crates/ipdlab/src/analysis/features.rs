//! Per-performance feature vectors: one row per (strategy, tournament).

use serde::{Deserialize, Serialize};

use crate::engine::PayoffMatrix;
use crate::strategies::{MemoryDepth, Registry};
use crate::tournament::{median, Protocol, ResultRow};
use crate::trials::TrialRecord;

use super::sse::sse_to_zd;

/// memory_usage = min(depth / n, 1); infinite depth saturates at 1.
pub fn memory_usage(depth: MemoryDepth, n: u32) -> f64 {
    match depth {
        MemoryDepth::Infinite => 1.0,
        MemoryDepth::Finite(d) => (f64::from(d) / f64::from(n)).min(1.0),
    }
}

/// Ratio with the totalized zero-denominator rule: a zero denominator yields
/// 1 when the numerator is also zero, otherwise the feature is missing.
pub fn safe_ratio(numerator: f64, denominator: f64) -> Option<f64> {
    if denominator == 0.0 {
        if numerator == 0.0 {
            Some(1.0)
        } else {
            None
        }
    } else {
        Some(numerator / denominator)
    }
}

/// One performance: booleans, numeric features (None = missing before
/// imputation), and the two targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub seed: u64,
    pub protocol: Protocol,
    pub name: String,
    pub stochastic: bool,
    pub makes_use_of_game: bool,
    pub makes_use_of_length: bool,
    /// None for probabilistic-ending tournaments (no known n).
    pub memory_usage: Option<f64>,
    /// None when any conditional cooperation rate is unobserved.
    pub sse: Option<f64>,
    pub c_max: f64,
    pub c_min: f64,
    pub c_median: f64,
    pub c_mean: f64,
    pub c_r: f64,
    pub c_r_over_max: Option<f64>,
    pub c_r_over_min: Option<f64>,
    pub c_r_over_median: Option<f64>,
    pub c_r_over_mean: Option<f64>,
    pub cond_coop: [Option<f64>; 4],
    pub p_n: f64,
    pub p_e: f64,
    pub n: u32,
    pub big_n: usize,
    pub k: u32,
    pub r: f64,
    pub median_score: f64,
}

/// Feature table of one tournament: the C_r distribution context is the
/// tournament's own rows.
pub fn compute_features(
    record: &TrialRecord,
    protocol: Protocol,
    registry: &Registry,
    payoffs: &PayoffMatrix,
) -> Vec<FeatureVector> {
    let rows: &[ResultRow] = record.results.get(protocol);
    let crs: Vec<f64> = rows.iter().map(|r| r.cooperation_rating).collect();
    let c_max = crs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c_min = crs.iter().copied().fold(f64::INFINITY, f64::min);
    let c_mean = crs.iter().sum::<f64>() / crs.len() as f64;
    let c_median = median(&crs);
    rows.iter()
        .map(|row| {
            let meta = registry
                .get(&row.name)
                .map(|s| s.metadata.clone())
                .unwrap_or_else(|_| {
                    crate::strategies::StrategyMetadata::deterministic(MemoryDepth::Infinite)
                });
            let c_r = row.cooperation_rating;
            let sse = row
                .cond_coop
                .iter()
                .copied()
                .collect::<Option<Vec<f64>>>()
                .map(|p| sse_to_zd(&[p[0], p[1], p[2], p[3]], payoffs));
            FeatureVector {
                seed: record.seed,
                protocol,
                name: row.name.clone(),
                stochastic: meta.stochastic,
                makes_use_of_game: meta.makes_use_of_game,
                makes_use_of_length: meta.makes_use_of_length,
                memory_usage: (!protocol.probabilistic_ending())
                    .then(|| memory_usage(meta.memory_depth, record.params.n)),
                sse,
                c_max,
                c_min,
                c_median,
                c_mean,
                c_r,
                c_r_over_max: safe_ratio(c_r, c_max),
                c_r_over_min: safe_ratio(c_r, c_min),
                c_r_over_median: safe_ratio(c_r, c_median),
                c_r_over_mean: safe_ratio(c_r, c_mean),
                cond_coop: row.cond_coop,
                p_n: record.params.p_n,
                p_e: record.params.p_e,
                n: record.params.n,
                big_n: record.params.n_strategies,
                k: record.params.k,
                r: row.normalized_rank,
                median_score: row.median_score,
            }
        })
        .collect()
}

/// Column layout of the exported feature matrix. Boolean columns are encoded
/// 0/1 and excluded from correlations against the targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub boolean: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub protocol: Protocol,
    pub columns: Vec<FeatureColumn>,
    pub rows: Vec<MatrixRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub seed: u64,
    pub name: String,
    pub values: Vec<Option<f64>>,
    /// Set per value by `impute` where a missing entry was filled.
    pub imputed: Vec<bool>,
    pub r: f64,
    pub median_score: f64,
}

fn columns_for(protocol: Protocol) -> Vec<FeatureColumn> {
    let boolean = |name: &str| FeatureColumn {
        name: name.to_string(),
        boolean: true,
    };
    let numeric = |name: &str| FeatureColumn {
        name: name.to_string(),
        boolean: false,
    };
    let mut cols = vec![
        boolean("stochastic"),
        boolean("makes_use_of_game"),
        boolean("makes_use_of_length"),
    ];
    if !protocol.probabilistic_ending() {
        cols.push(numeric("memory_usage"));
    }
    for name in [
        "SSE",
        "C_max",
        "C_min",
        "C_median",
        "C_mean",
        "C_r",
        "C_r/C_max",
        "C_r/C_min",
        "C_r/C_median",
        "C_r/C_mean",
        "CC_to_C",
        "CD_to_C",
        "DC_to_C",
        "DD_to_C",
        "p_n",
        "p_e",
        "n",
        "N",
        "k",
    ] {
        cols.push(numeric(name));
    }
    cols
}

fn vector_values(v: &FeatureVector, protocol: Protocol) -> Vec<Option<f64>> {
    let flag = |b: bool| Some(f64::from(u8::from(b)));
    let mut vals = vec![
        flag(v.stochastic),
        flag(v.makes_use_of_game),
        flag(v.makes_use_of_length),
    ];
    if !protocol.probabilistic_ending() {
        vals.push(v.memory_usage);
    }
    vals.extend([
        v.sse,
        Some(v.c_max),
        Some(v.c_min),
        Some(v.c_median),
        Some(v.c_mean),
        Some(v.c_r),
        v.c_r_over_max,
        v.c_r_over_min,
        v.c_r_over_median,
        v.c_r_over_mean,
        v.cond_coop[0],
        v.cond_coop[1],
        v.cond_coop[2],
        v.cond_coop[3],
        Some(v.p_n),
        Some(v.p_e),
        Some(f64::from(v.n)),
        Some(v.big_n as f64),
        Some(f64::from(v.k)),
    ]);
    vals
}

/// Assemble the raw (unimputed) matrix for one tournament type across trials.
pub fn build_feature_matrix(
    records: &[TrialRecord],
    protocol: Protocol,
    registry: &Registry,
    payoffs: &PayoffMatrix,
) -> FeatureMatrix {
    let columns = columns_for(protocol);
    let mut rows = Vec::new();
    for record in records {
        for v in compute_features(record, protocol, registry, payoffs) {
            let values = vector_values(&v, protocol);
            rows.push(MatrixRow {
                seed: v.seed,
                name: v.name,
                imputed: vec![false; values.len()],
                values,
                r: v.r,
                median_score: v.median_score,
            });
        }
    }
    FeatureMatrix {
        protocol,
        columns,
        rows,
    }
}

impl FeatureMatrix {
    /// Fill missing values with the column mean over this matrix (one
    /// tournament type) and flag them. Columns with no observed value at all
    /// stay missing.
    pub fn impute(&mut self) {
        for c in 0..self.columns.len() {
            let observed: Vec<f64> = self.rows.iter().filter_map(|r| r.values[c]).collect();
            if observed.is_empty() {
                continue;
            }
            let mean = observed.iter().sum::<f64>() / observed.len() as f64;
            for row in &mut self.rows {
                if row.values[c].is_none() {
                    row.values[c] = Some(mean);
                    row.imputed[c] = true;
                }
            }
        }
    }

    /// Complete (feature name, values) columns, optionally excluding the
    /// boolean classifier columns.
    pub fn complete_columns(&self, include_boolean: bool) -> Vec<(String, Vec<f64>)> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, col)| include_boolean || !col.boolean)
            .filter_map(|(c, col)| {
                let vals: Option<Vec<f64>> = self.rows.iter().map(|r| r.values[c]).collect();
                vals.map(|v| (col.name.clone(), v))
            })
            .collect()
    }

    pub fn targets(&self) -> Vec<(String, Vec<f64>)> {
        vec![
            (
                "r".to_string(),
                self.rows.iter().map(|r| r.r).collect(),
            ),
            (
                "median_score".to_string(),
                self.rows.iter().map(|r| r.median_score).collect(),
            ),
        ]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

/// Winner-distribution data: C_r, C_r/C_mean, C_r/C_median of rank-0 rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinnerStats {
    pub seed: u64,
    pub name: String,
    pub c_r: f64,
    pub c_r_over_mean: Option<f64>,
    pub c_r_over_median: Option<f64>,
    pub cond_coop: [Option<f64>; 4],
}

pub fn winner_stats(
    records: &[TrialRecord],
    protocol: Protocol,
    registry: &Registry,
    payoffs: &PayoffMatrix,
) -> Vec<WinnerStats> {
    let mut out = Vec::new();
    for record in records {
        for v in compute_features(record, protocol, registry, payoffs) {
            if v.r == 0.0 {
                out.push(WinnerStats {
                    seed: v.seed,
                    name: v.name,
                    c_r: v.c_r,
                    c_r_over_mean: v.c_r_over_mean,
                    c_r_over_median: v.c_r_over_median,
                    cond_coop: v.cond_coop,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn memory_usage_examples() {
        assert_abs_diff_eq!(
            memory_usage(MemoryDepth::Finite(16), 134),
            0.119,
            epsilon = 0.001
        );
        assert_eq!(memory_usage(MemoryDepth::Infinite, 10), 1.0);
        assert_eq!(memory_usage(MemoryDepth::Finite(50), 10), 1.0);
        assert_eq!(memory_usage(MemoryDepth::Finite(0), 10), 0.0);
    }

    #[test]
    fn ratio_zero_denominator_rule() {
        assert_eq!(safe_ratio(0.0, 0.0), Some(1.0));
        assert_eq!(safe_ratio(0.3, 0.0), None);
        assert_eq!(safe_ratio(0.3, 0.6), Some(0.5));
    }

    #[test]
    fn c_statistics_over_three_rows() {
        let crs = [0.2, 0.5, 0.8];
        let mean = crs.iter().sum::<f64>() / 3.0;
        assert_abs_diff_eq!(mean, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(median(&crs), 0.5, epsilon = 1e-12);
    }
}
