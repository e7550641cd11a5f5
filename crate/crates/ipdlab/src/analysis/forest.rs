//! Random forest classifier: CART trees, Gini splits, bootstrap sampling,
//! out-of-bag scoring, impurity-decrease feature importance.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::seeding::stream;

const FOREST_STREAM_TAG: u64 = 0x666f_7265_7374; // "forest"
const SPLIT_STREAM_TAG: u64 = 0x7370_6c69_74;

#[derive(Debug, Error, PartialEq)]
pub enum ForestError {
    #[error("training data is empty")]
    Empty,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("rows have inconsistent widths")]
    RaggedRows,
}

#[derive(Clone, Debug)]
pub enum Node {
    Leaf {
        class_counts: Vec<usize>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug)]
pub struct Tree {
    pub nodes: Vec<Node>,
    /// Indices drawn for this tree's bootstrap sample.
    pub bootstrap: Vec<usize>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class_counts } => {
                    return class_counts
                        .iter()
                        .enumerate()
                        .max_by_key(|&(_, c)| c)
                        .map(|(cls, _)| cls)
                        .unwrap()
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    /// Normalized mean impurity decrease, sums to 1.
    pub importances: Vec<f64>,
    /// Accuracy of out-of-bag majority votes.
    pub oob_score: f64,
    pub n_classes: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            seed: 0,
        }
    }
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    n_features: usize,
    mtry: usize,
    nodes: Vec<Node>,
    /// Impurity decrease accumulated per feature, weighted by node size.
    decreases: Vec<f64>,
    total_samples: usize,
    rng: rand_chacha::ChaCha12Rng,
}

impl TreeBuilder<'_> {
    /// Best (threshold, impurity decrease) of one candidate feature, found by
    /// scanning midpoints between distinct sorted values.
    fn best_split_on(&self, indices: &[usize], feature: usize) -> Option<(f64, f64)> {
        let mut order: Vec<usize> = indices.to_vec();
        order.sort_by(|&a, &b| self.x[a][feature].partial_cmp(&self.x[b][feature]).unwrap());
        let total = order.len();
        let mut right_counts = vec![0usize; self.n_classes];
        for &i in &order {
            right_counts[self.y[i]] += 1;
        }
        let parent = gini(&right_counts, total);
        let mut left_counts = vec![0usize; self.n_classes];
        let mut best: Option<(f64, f64)> = None;
        for pos in 0..total - 1 {
            let i = order[pos];
            left_counts[self.y[i]] += 1;
            right_counts[self.y[i]] -= 1;
            let v = self.x[i][feature];
            let next = self.x[order[pos + 1]][feature];
            if v == next {
                continue;
            }
            let n_left = pos + 1;
            let n_right = total - n_left;
            let weighted = (n_left as f64 * gini(&left_counts, n_left)
                + n_right as f64 * gini(&right_counts, n_right))
                / total as f64;
            let decrease = parent - weighted;
            if best.map(|(_, d)| decrease > d).unwrap_or(decrease > 1e-15) {
                best = Some(((v + next) / 2.0, decrease));
            }
        }
        best
    }

    fn grow(&mut self, indices: Vec<usize>) -> usize {
        let mut counts = vec![0usize; self.n_classes];
        for &i in &indices {
            counts[self.y[i]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || indices.len() < 2 {
            self.nodes.push(Node::Leaf {
                class_counts: counts,
            });
            return self.nodes.len() - 1;
        }

        let mut candidates: Vec<usize> = (0..self.n_features).collect();
        for i in 0..self.mtry {
            let j = self.rng.gen_range(i..candidates.len());
            candidates.swap(i, j);
        }
        let mut best: Option<(usize, f64, f64)> = None;
        for &feature in &candidates[..self.mtry] {
            if let Some((threshold, decrease)) = self.best_split_on(&indices, feature) {
                if best.map(|(_, _, d)| decrease > d).unwrap_or(true) {
                    best = Some((feature, threshold, decrease));
                }
            }
        }
        let Some((feature, threshold, decrease)) = best else {
            self.nodes.push(Node::Leaf {
                class_counts: counts,
            });
            return self.nodes.len() - 1;
        };

        self.decreases[feature] += decrease * indices.len() as f64 / self.total_samples as f64;
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| self.x[i][feature] <= threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class_counts: Vec::new(),
        }); // placeholder
        let left = self.grow(left_idx);
        let right = self.grow(right_idx);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

/// Fit the forest. Trees are grown in parallel with per-tree seeded rng;
/// results do not depend on worker count.
pub fn forest_fit(
    x: &[Vec<f64>],
    y: &[usize],
    cfg: &ForestConfig,
) -> Result<ForestModel, ForestError> {
    if x.is_empty() || y.len() != x.len() {
        return Err(ForestError::Empty);
    }
    let n_features = x[0].len();
    if x.iter().any(|row| row.len() != n_features) {
        return Err(ForestError::RaggedRows);
    }
    let n_classes = y.iter().max().unwrap() + 1;
    {
        let mut seen = vec![false; n_classes];
        for &c in y {
            seen[c] = true;
        }
        if seen.iter().filter(|&&s| s).count() < 2 {
            return Err(ForestError::SingleClass);
        }
    }
    let mtry = ((n_features as f64).sqrt().ceil() as usize).clamp(1, n_features);
    let n = x.len();

    let fitted: Vec<(Tree, Vec<f64>)> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(&[FOREST_STREAM_TAG, cfg.seed, t as u64]);
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut builder = TreeBuilder {
                x,
                y,
                n_classes,
                n_features,
                mtry,
                nodes: Vec::new(),
                decreases: vec![0.0; n_features],
                total_samples: n,
                rng: stream(&[SPLIT_STREAM_TAG, cfg.seed, t as u64]),
            };
            builder.grow(bootstrap.clone());
            // Per-tree importances normalized before averaging.
            let total: f64 = builder.decreases.iter().sum();
            let imp = if total > 0.0 {
                builder.decreases.iter().map(|d| d / total).collect()
            } else {
                builder.decreases.clone()
            };
            (
                Tree {
                    nodes: builder.nodes,
                    bootstrap,
                },
                imp,
            )
        })
        .collect();

    let mut importances = vec![0.0; n_features];
    for (_, imp) in &fitted {
        for (a, b) in importances.iter_mut().zip(imp) {
            *a += b;
        }
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        for v in &mut importances {
            *v /= total;
        }
    }

    let trees: Vec<Tree> = fitted.into_iter().map(|(t, _)| t).collect();

    // OOB: majority vote over trees whose bootstrap missed the sample.
    let mut correct = 0usize;
    let mut voted = 0usize;
    let mut in_bag = vec![vec![false; n]; trees.len()];
    for (t, tree) in trees.iter().enumerate() {
        for &i in &tree.bootstrap {
            in_bag[t][i] = true;
        }
    }
    for i in 0..n {
        let mut votes = vec![0usize; n_classes];
        for (t, tree) in trees.iter().enumerate() {
            if !in_bag[t][i] {
                votes[tree.predict(&x[i])] += 1;
            }
        }
        if votes.iter().sum::<usize>() > 0 {
            voted += 1;
            let pred = votes
                .iter()
                .enumerate()
                .max_by_key(|&(_, v)| v)
                .map(|(c, _)| c)
                .unwrap();
            if pred == y[i] {
                correct += 1;
            }
        }
    }
    let oob_score = if voted > 0 {
        correct as f64 / voted as f64
    } else {
        0.0
    };

    Ok(ForestModel {
        trees,
        importances,
        oob_score,
        n_classes,
    })
}

pub fn forest_predict(model: &ForestModel, row: &[f64]) -> usize {
    let mut votes = vec![0usize; model.n_classes];
    for tree in &model.trees {
        votes[tree.predict(row)] += 1;
    }
    votes
        .iter()
        .enumerate()
        .max_by_key(|&(_, v)| v)
        .map(|(c, _)| c)
        .unwrap()
}

/// Accuracy on a holdout set.
pub fn forest_score(model: &ForestModel, x: &[Vec<f64>], y: &[usize]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let correct = x
        .iter()
        .zip(y)
        .filter(|(row, &label)| forest_predict(model, row) == label)
        .count();
    correct as f64 / x.len() as f64
}

/// Features ranked by descending importance: (feature index, importance).
pub fn forest_importance(model: &ForestModel) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = model.importances.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    ranked
}

/// Deterministic shuffled split of 0..n into (train, test) index sets.
pub fn train_test_split(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = stream(&[FOREST_STREAM_TAG, seed, u64::MAX]);
    let mut indices: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        indices.swap(i, j);
    }
    let cut = ((n as f64) * train_fraction).round() as usize;
    let test = indices.split_off(cut.min(n));
    (indices, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n: usize, informative: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = stream(&[99, seed]);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let row: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            y.push(usize::from(row[informative] > 0.5));
            x.push(row);
        }
        (x, y)
    }

    #[test]
    fn informative_feature_ranks_first() {
        let (x, y) = synthetic(800, 2, 5, 1);
        let model = forest_fit(&x, &y, &ForestConfig { n_trees: 50, seed: 3 }).unwrap();
        assert_eq!(forest_importance(&model)[0].0, 2);
        let (xt, yt) = synthetic(300, 2, 5, 2);
        assert!(forest_score(&model, &xt, &yt) >= 0.95);
    }

    #[test]
    fn importances_sum_to_one() {
        let (x, y) = synthetic(200, 0, 4, 5);
        let model = forest_fit(&x, &y, &ForestConfig { n_trees: 20, seed: 1 }).unwrap();
        let sum: f64 = model.importances.iter().sum();
        approx::assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
        assert!(model.importances.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn oob_score_in_range() {
        let (x, y) = synthetic(300, 1, 3, 9);
        let model = forest_fit(&x, &y, &ForestConfig { n_trees: 30, seed: 0 }).unwrap();
        assert!((0.0..=1.0).contains(&model.oob_score));
        assert!(model.oob_score > 0.8);
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let y = vec![1, 1, 1];
        assert_eq!(
            forest_fit(&x, &y, &ForestConfig::default()).unwrap_err(),
            ForestError::SingleClass
        );
    }

    #[test]
    fn fit_is_deterministic() {
        let (x, y) = synthetic(150, 0, 3, 4);
        let cfg = ForestConfig { n_trees: 15, seed: 8 };
        let a = forest_fit(&x, &y, &cfg).unwrap();
        let b = forest_fit(&x, &y, &cfg).unwrap();
        assert_eq!(a.importances, b.importances);
        assert_eq!(a.oob_score, b.oob_score);
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let (tr, te) = train_test_split(100, 0.7, 11);
        let (tr2, te2) = train_test_split(100, 0.7, 11);
        assert_eq!(tr, tr2);
        assert_eq!(te, te2);
        assert_eq!(tr.len(), 70);
        assert_eq!(te.len(), 30);
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn shuffled_labels_score_near_majority() {
        let (x, mut y) = synthetic(600, 0, 4, 6);
        // Deterministic label shuffle decouples labels from features.
        let mut rng = stream(&[77]);
        for i in (1..y.len()).rev() {
            let j = rng.gen_range(0..=i);
            y.swap(i, j);
        }
        let (tr, te) = train_test_split(y.len(), 0.7, 2);
        let xt: Vec<Vec<f64>> = tr.iter().map(|&i| x[i].clone()).collect();
        let yt: Vec<usize> = tr.iter().map(|&i| y[i]).collect();
        let xh: Vec<Vec<f64>> = te.iter().map(|&i| x[i].clone()).collect();
        let yh: Vec<usize> = te.iter().map(|&i| y[i]).collect();
        let model = forest_fit(&xt, &yt, &ForestConfig { n_trees: 40, seed: 1 }).unwrap();
        let majority = {
            let ones = yh.iter().filter(|&&v| v == 1).count() as f64;
            (ones / yh.len() as f64).max(1.0 - ones / yh.len() as f64)
        };
        let score = forest_score(&model, &xh, &yh);
        assert!((score - majority).abs() < 0.12, "score {score} majority {majority}");
    }
}
