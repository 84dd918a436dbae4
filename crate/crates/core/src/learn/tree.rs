//! CART decision trees (Gini impurity) and a bagged random forest built on
//! them. Split search works directly on sparse rows: only features with a
//! non-zero entry in a node are candidates, the implicit zeros form one
//! extra value bucket.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SparseVec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        /// Weighted fraction of flaky training samples reaching the leaf.
        flaky: f64,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Candidate features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
}

struct Bucket {
    value: f64,
    flaky: f64,
    other: f64,
}

fn gini(flaky: f64, other: f64) -> f64 {
    let n = flaky + other;
    if n <= 0.0 {
        return 0.0;
    }
    let p = flaky / n;
    let q = other / n;
    1.0 - p * p - q * q
}

struct Candidate {
    feature: u32,
    threshold: f64,
    impurity: f64,
}

/// Best threshold for one feature, or `None` when the feature is constant
/// within the node.
fn best_threshold(
    feature: u32,
    entries: &[(u32, f64, usize)],
    y: &[bool],
    w: &[f64],
    node_len: usize,
    totals: (f64, f64),
) -> Option<Candidate> {
    let mut buckets: Vec<Bucket> = Vec::new();
    let (mut nz_flaky, mut nz_other) = (0.0, 0.0);
    for &(_, value, s) in entries {
        let (f, o) = if y[s] { (w[s], 0.0) } else { (0.0, w[s]) };
        nz_flaky += f;
        nz_other += o;
        match buckets.last_mut() {
            Some(b) if b.value == value => {
                b.flaky += f;
                b.other += o;
            }
            _ => buckets.push(Bucket { value, flaky: f, other: o }),
        }
    }
    if entries.len() < node_len {
        let zero = Bucket {
            value: 0.0,
            flaky: totals.0 - nz_flaky,
            other: totals.1 - nz_other,
        };
        let at = buckets.partition_point(|b| b.value < 0.0);
        buckets.insert(at, zero);
    }
    if buckets.len() < 2 {
        return None;
    }
    let total = totals.0 + totals.1;
    let mut best: Option<Candidate> = None;
    let (mut lf, mut lo) = (0.0, 0.0);
    for k in 0..buckets.len() - 1 {
        lf += buckets[k].flaky;
        lo += buckets[k].other;
        let (rf, ro) = (totals.0 - lf, totals.1 - lo);
        let impurity = ((lf + lo) * gini(lf, lo) + (rf + ro) * gini(rf, ro)) / total;
        if best.as_ref().is_none_or(|b| impurity < b.impurity) {
            let (a, b) = (buckets[k].value, buckets[k + 1].value);
            let mut threshold = a + (b - a) / 2.0;
            if threshold >= b {
                threshold = a;
            }
            best = Some(Candidate {
                feature,
                threshold,
                impurity,
            });
        }
    }
    best
}

/// Lower impurity wins; equal impurities go to the lower feature index.
fn keep_better(best: &mut Option<Candidate>, c: Candidate) {
    let better = match best {
        None => true,
        Some(b) => c.impurity < b.impurity || (c.impurity == b.impurity && c.feature < b.feature),
    };
    if better {
        *best = Some(c);
    }
}

impl Tree {
    /// Grows a tree over the samples with positive weight.
    pub(crate) fn grow(
        rows: &[SparseVec],
        y: &[bool],
        weights: &[f64],
        params: TreeParams,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Tree {
        let root: Vec<usize> = (0..rows.len()).filter(|&i| weights[i] > 0.0).collect();
        let mut nodes = vec![Node::Leaf { flaky: 0.0 }];
        let mut stack = vec![(0usize, root, 0usize)];
        while let Some((id, samples, depth)) = stack.pop() {
            let (wf, wo) = samples.iter().fold((0.0, 0.0), |(f, o), &s| {
                if y[s] {
                    (f + weights[s], o)
                } else {
                    (f, o + weights[s])
                }
            });
            let leaf = Node::Leaf {
                flaky: if wf + wo > 0.0 { wf / (wf + wo) } else { 0.0 },
            };
            let stop = wf == 0.0
                || wo == 0.0
                || wf + wo < params.min_samples_split as f64
                || params.max_depth.is_some_and(|d| depth >= d);
            let split = if stop {
                None
            } else {
                Self::find_split(rows, y, weights, &samples, (wf, wo), params, rng.as_deref_mut())
            };
            let Some(split) = split else {
                nodes[id] = leaf;
                continue;
            };
            let (left, right): (Vec<usize>, Vec<usize>) = samples
                .iter()
                .partition(|&&s| rows[s].get(split.feature as usize) <= split.threshold);
            let l = nodes.len();
            nodes.push(Node::Leaf { flaky: 0.0 });
            nodes.push(Node::Leaf { flaky: 0.0 });
            nodes[id] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: l as u32,
                right: l as u32 + 1,
            };
            stack.push((l + 1, right, depth + 1));
            stack.push((l, left, depth + 1));
        }
        Tree { nodes }
    }

    fn find_split(
        rows: &[SparseVec],
        y: &[bool],
        w: &[f64],
        samples: &[usize],
        totals: (f64, f64),
        params: TreeParams,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Option<Candidate> {
        if let (Some(rng), Some(limit)) = (rng, params.max_features) {
            return Self::find_split_sampled(rows, y, w, samples, totals, limit, rng);
        }
        let mut entries: Vec<(u32, f64, usize)> = Vec::new();
        for &s in samples {
            entries.extend(rows[s].iter().map(|(f, v)| (f as u32, v, s)));
        }
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut groups: Vec<(u32, usize, usize)> = Vec::new();
        let mut start = 0;
        for i in 1..=entries.len() {
            if i == entries.len() || entries[i].0 != entries[start].0 {
                if start < entries.len() {
                    groups.push((entries[start].0, start, i));
                }
                start = i;
            }
        }
        let mut best: Option<Candidate> = None;
        for (feature, from, to) in groups {
            if let Some(c) = best_threshold(feature, &entries[from..to], y, w, samples.len(), totals) {
                keep_better(&mut best, c);
            }
        }
        best
    }

    /// Random-subspace search: the features present in the node are visited
    /// in shuffled order until `limit` of them admit a split. Only visited
    /// features have their values gathered.
    fn find_split_sampled(
        rows: &[SparseVec],
        y: &[bool],
        w: &[f64],
        samples: &[usize],
        totals: (f64, f64),
        limit: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<Candidate> {
        let dim = rows[samples[0]].dim();
        let mut seen = vec![false; dim];
        let mut present: Vec<u32> = Vec::new();
        for &s in samples {
            for (f, _) in rows[s].iter() {
                if !std::mem::replace(&mut seen[f], true) {
                    present.push(f as u32);
                }
            }
        }
        present.sort_unstable();
        present.shuffle(rng);

        let mut visited = 0;
        let mut best: Option<Candidate> = None;
        let mut entries: Vec<(u32, f64, usize)> = Vec::new();
        for feature in present {
            if visited >= limit {
                break;
            }
            entries.clear();
            entries.extend(samples.iter().filter_map(|&s| {
                let v = rows[s].get(feature as usize);
                (v != 0.0).then_some((feature, v, s))
            }));
            entries.sort_unstable_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)));
            let Some(c) = best_threshold(feature, &entries, y, w, samples.len(), totals) else {
                continue;
            };
            visited += 1;
            keep_better(&mut best, c);
        }
        best
    }

    /// Fraction of flaky training samples in the leaf reached by `x`.
    pub fn leaf_value(&self, x: &SparseVec) -> f64 {
        let mut id = 0usize;
        loop {
            match &self.nodes[id] {
                Node::Leaf { flaky } => return *flaky,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if x.get(*feature as usize) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    /// Bagged trees; tree `t` draws its bootstrap sample and feature subsets
    /// from stream `t` of a generator seeded with `seed`, so the parallel
    /// build matches a sequential one.
    pub(crate) fn grow(rows: &[SparseVec], y: &[bool], n_trees: usize, params: TreeParams, seed: u64) -> Forest {
        let n = rows.len();
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let mut weights = vec![0.0; n];
                for _ in 0..n {
                    weights[rng.gen_range(0..n)] += 1.0;
                }
                Tree::grow(rows, y, &weights, params, Some(&mut rng))
            })
            .collect();
        Forest { trees }
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Fraction of trees voting flaky.
    pub fn vote_fraction(&self, x: &SparseVec) -> f64 {
        if self.trees.is_empty() {
            return 0.0;
        }
        let votes = self.trees.iter().filter(|t| t.leaf_value(x) >= 0.5).count();
        votes as f64 / self.trees.len() as f64
    }
}
