//! Bagged CART trees with Gini splits.

use alloc::vec::Vec;

use crate::numkit::Rng;
use crate::{Error, Result};

/// How many features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MaxFeatures {
    /// `ceil(sqrt(p))`.
    #[default]
    Sqrt,
    All,
}

impl MaxFeatures {
    fn count(self, p: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => (libm::ceil(libm::sqrt(p as f64)) as usize).clamp(1, p.max(1)),
            MaxFeatures::All => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 50,
            max_depth: 10,
            min_samples_split: 2,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
enum Node {
    Leaf(bool),
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> bool {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Binary member / non-member classifier.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForestClassifier {
    trees: Vec<Tree>,
    dim: usize,
}

impl ForestClassifier {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of trees voting member.
    pub fn member_votes(&self, x: &[f64]) -> usize {
        self.trees.iter().filter(|t| t.predict(x)).count()
    }

    /// Strict majority; a tie is a non-member.
    pub fn predict(&self, x: &[f64]) -> bool {
        2 * self.member_votes(x) > self.trees.len()
    }
}

/// Leaf value: majority label, ties to non-member.
fn majority(labels: &[bool], rows: &[usize]) -> bool {
    let pos = rows.iter().filter(|&&i| labels[i]).count();
    2 * pos > rows.len()
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    params: &'a ForestParams,
    rng: Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    /// Best `(feature, threshold, weighted child impurity)` over a random
    /// feature subset, if any split separates the rows.
    fn best_split(&mut self, rows: &[usize]) -> Option<(usize, f64, f64)> {
        let p = self.x[0].len();
        let mut features: Vec<usize> = (0..p).collect();
        let k = self.params.max_features.count(p);
        if k < p {
            // partial Fisher-Yates
            for i in 0..k {
                let j = i + self.rng.below(p - i);
                features.swap(i, j);
            }
            features.truncate(k);
        }
        let total = rows.len();
        let total_pos = rows.iter().filter(|&&i| self.y[i]).count();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut sorted: Vec<(f64, bool)> = Vec::with_capacity(total);
        for &f in &features {
            sorted.clear();
            sorted.extend(rows.iter().map(|&i| (self.x[i][f], self.y[i])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0;
            for s in 0..total - 1 {
                left_pos += sorted[s].1 as usize;
                let (lo, hi) = (sorted[s].0, sorted[s + 1].0);
                if lo == hi {
                    continue;
                }
                let nl = s + 1;
                let nr = total - nl;
                let score = (nl as f64 * gini(left_pos, nl) + nr as f64 * gini(total_pos - left_pos, nr)) / total as f64;
                if best.is_none_or(|(_, _, b)| score < b) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some((f, threshold, score));
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf(majority(self.y, &rows)));
        let pos = rows.iter().filter(|&&i| self.y[i]).count();
        let pure = pos == 0 || pos == rows.len();
        if pure || depth >= self.params.max_depth || rows.len() < self.params.min_samples_split.max(2) {
            return at;
        }
        let parent = gini(pos, rows.len());
        let Some((feature, threshold, score)) = self.best_split(&rows) else {
            return at;
        };
        if score >= parent {
            return at;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

/// Fits `params.trees` trees; tree `t` draws from `Rng::derive(seed, "tree-t")`.
pub fn fit_forest(x: &[Vec<f64>], y: &[bool], params: &ForestParams, seed: u64) -> Result<ForestClassifier> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::Config(alloc::format!(
            "attack training set needs matching non-empty features and labels ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let dim = x[0].len();
    if dim == 0 || x.iter().any(|r| r.len() != dim) {
        return Err(Error::shape("fit_forest", "records must share a non-zero width"));
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::Config("attack training set has a single label".into()));
    }
    if params.trees == 0 {
        return Err(Error::Config("forest needs at least one tree".into()));
    }
    let n = x.len();
    let trees = (0..params.trees)
        .map(|t| {
            let mut rng = Rng::derive(seed, &alloc::format!("tree-{t}"));
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.below(n)).collect()
            } else {
                (0..n).collect()
            };
            let mut b = Builder {
                x,
                y,
                params,
                rng,
                nodes: Vec::new(),
            };
            b.grow(rows, 0);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(ForestClassifier { trees, dim })
}
