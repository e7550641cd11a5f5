//! Correlation statistics over the feature matrix.

use serde::{Deserialize, Serialize};

/// Pearson coefficient of the paired values; None when fewer than 3 pairs or
/// either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Coefficients of numeric features against a set of targets. Boolean
/// classifier features are excluded by the caller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub targets: Vec<String>,
    /// (feature name, one optional coefficient per target).
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

/// Symmetric feature-feature coefficient matrix with unit diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub features: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

/// Build the target table: `columns` holds (name, values) per feature,
/// `targets` likewise.
pub fn correlation_table(
    columns: &[(String, Vec<f64>)],
    targets: &[(String, Vec<f64>)],
) -> CorrelationTable {
    CorrelationTable {
        targets: targets.iter().map(|(n, _)| n.clone()).collect(),
        rows: columns
            .iter()
            .map(|(name, vals)| {
                (
                    name.clone(),
                    targets.iter().map(|(_, t)| pearson(vals, t)).collect(),
                )
            })
            .collect(),
    }
}

pub fn correlation_matrix(columns: &[(String, Vec<f64>)]) -> CorrelationMatrix {
    let n = columns.len();
    let mut values = vec![vec![None; n]; n];
    for i in 0..n {
        values[i][i] = Some(1.0);
        for j in (i + 1)..n {
            let c = pearson(&columns[i].1, &columns[j].1);
            values[i][j] = c;
            values[j][i] = c;
        }
    }
    CorrelationMatrix {
        features: columns.iter().map(|(n, _)| n.clone()).collect(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn self_correlation_is_one() {
        let x = vec![1.0, 2.0, 5.0, 3.0];
        assert_abs_diff_eq!(pearson(&x, &x).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn negated_correlation_is_minus_one() {
        let x = vec![1.0, 2.0, 5.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_abs_diff_eq!(pearson(&x, &y).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_variance_is_absent() {
        let x = vec![2.0, 2.0, 2.0];
        let y = vec![1.0, 2.0, 3.0];
        assert_eq!(pearson(&x, &y), None);
    }

    #[test]
    fn too_few_points_is_absent() {
        assert_eq!(pearson(&[1.0, 2.0], &[3.0, 4.0]), None);
    }

    #[test]
    fn known_coefficient() {
        // Hand-computed: x=(1,2,3,4), y=(2,1,4,3) -> cov 2.5/ (sqrt5 sqrt5) = 0.6.
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let y = vec![2.0, 1.0, 4.0, 3.0];
        assert_abs_diff_eq!(pearson(&x, &y).unwrap(), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn matrix_is_symmetric_with_unit_diagonal() {
        let cols = vec![
            ("a".to_string(), vec![1.0, 2.0, 3.0, 5.0]),
            ("b".to_string(), vec![2.0, 1.0, 4.0, 4.0]),
            ("c".to_string(), vec![0.0, 0.0, 0.0, 0.0]),
        ];
        let m = correlation_matrix(&cols);
        for i in 0..3 {
            assert_eq!(m.values[i][i], Some(1.0));
            for j in 0..3 {
                assert_eq!(m.values[i][j], m.values[j][i]);
            }
        }
        assert_eq!(m.values[0][2], None);
    }
}
