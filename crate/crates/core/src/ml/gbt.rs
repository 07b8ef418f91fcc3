use super::{check_binary, parse_field, Matrix};
use crate::util::{rng, sigmoid};
use crate::{Error, Result};
use rand::seq::index::sample;
use std::fmt::Write as _;

pub const GBT_HEADER: &str = "quenchmap-gbt v1";

/// Leaf values are clamped to `[-LEAF_CLAMP, LEAF_CLAMP]`.
pub const LEAF_CLAMP: f64 = 10.0;
const HESSIAN_FLOOR: f64 = 1e-12;
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Row fraction drawn per round without replacement; 1 disables sampling.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            subsample: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// `x[feature] <= threshold` goes to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(f64),
}

/// Nodes stored so that children always follow their parent; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
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
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    pub trees: Vec<Tree>,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Log-odds of the training prevalence.
    pub base_score: f64,
    pub n_features: usize,
}

impl GbtModel {
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{GBT_HEADER}");
        let _ = writeln!(out, "n_features {}", self.n_features);
        let _ = writeln!(out, "learning_rate {}", self.learning_rate);
        let _ = writeln!(out, "max_depth {}", self.max_depth);
        let _ = writeln!(out, "base_score {}", self.base_score);
        let _ = writeln!(out, "n_trees {}", self.trees.len());
        for tree in &self.trees {
            let _ = writeln!(out, "tree {}", tree.nodes.len());
            for node in &tree.nodes {
                match node {
                    Node::Leaf(v) => {
                        let _ = writeln!(out, "leaf {v}");
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        let _ = writeln!(out, "split {feature} {threshold} {left} {right}");
                    }
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, l)) if l == GBT_HEADER => {}
            _ => return Err(Error::parse(1, format!("expected `{GBT_HEADER}`"))),
        }
        let n_features: usize = parse_field(lines.next(), "n_features")?;
        let learning_rate: f64 = parse_field(lines.next(), "learning_rate")?;
        let max_depth: usize = parse_field(lines.next(), "max_depth")?;
        let base_score: f64 = parse_field(lines.next(), "base_score")?;
        let n_trees: usize = parse_field(lines.next(), "n_trees")?;
        if !(learning_rate > 0.0 && learning_rate <= 1.0) || !base_score.is_finite() {
            return Err(Error::parse(0, "learning_rate must be in (0, 1] and base_score finite"));
        }
        let mut trees = Vec::with_capacity(n_trees.min(1 << 16));
        for _ in 0..n_trees {
            let count: usize = parse_field(lines.next(), "tree")?;
            if count == 0 {
                return Err(Error::parse(0, "empty tree"));
            }
            let mut nodes = Vec::with_capacity(count.min(1 << 16));
            for k in 0..count {
                let (no, line) = lines.next().ok_or_else(|| Error::parse(0, "truncated tree"))?;
                let bad = |msg: &str| Error::parse(no + 1, msg.to_string());
                let tok: Vec<&str> = line.split_whitespace().collect();
                let node = match tok.as_slice() {
                    ["leaf", v] => {
                        let v: f64 = v.parse().map_err(|_| bad("bad leaf value"))?;
                        if !v.is_finite() || v.abs() > LEAF_CLAMP {
                            return Err(bad("leaf value out of range"));
                        }
                        Node::Leaf(v)
                    }
                    ["split", f, t, l, r] => {
                        let feature: usize = f.parse().map_err(|_| bad("bad feature"))?;
                        let threshold: f64 = t.parse().map_err(|_| bad("bad threshold"))?;
                        let left: usize = l.parse().map_err(|_| bad("bad child"))?;
                        let right: usize = r.parse().map_err(|_| bad("bad child"))?;
                        if feature >= n_features || !threshold.is_finite() {
                            return Err(bad("split feature or threshold out of range"));
                        }
                        if left <= k || right <= k || left >= count || right >= count {
                            return Err(bad("children must follow their parent"));
                        }
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        }
                    }
                    _ => return Err(bad("expected `leaf` or `split` node")),
                };
                nodes.push(node);
            }
            trees.push(Tree { nodes });
        }
        if let Some((no, _)) = lines.next() {
            return Err(Error::parse(no + 1, "trailing content"));
        }
        Ok(Self {
            trees,
            learning_rate,
            max_depth,
            base_score,
            n_features,
        })
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    /// Row indices sorted by each feature.
    order: Vec<Vec<usize>>,
    grad: Vec<f64>,
    hess: Vec<f64>,
    max_depth: usize,
}

impl Builder<'_> {
    fn leaf(&self, rows: &[usize]) -> Node {
        let g: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        Node::Leaf((g / h.max(HESSIAN_FLOOR)).clamp(-LEAF_CLAMP, LEAF_CLAMP))
    }

    /// Best split by residual variance reduction: (feature, threshold, gain).
    fn best_split(&self, in_node: &[bool], rows: &[usize]) -> Option<(usize, f64, f64)> {
        let n = rows.len() as f64;
        let total: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let parent = total * total / n;
        let mut best: Option<(usize, f64, f64)> = None;
        for (f, order) in self.order.iter().enumerate() {
            let mut left_sum = 0.0;
            let mut left_n = 0.0;
            let mut prev: Option<f64> = None;
            for &i in order.iter().filter(|&&i| in_node[i]) {
                let v = self.x.get(i, f);
                if let Some(p) = prev {
                    if v > p {
                        let right_n = n - left_n;
                        let right_sum = total - left_sum;
                        let gain = left_sum * left_sum / left_n + right_sum * right_sum / right_n - parent;
                        let threshold = p + (v - p) / 2.0;
                        let strictly_between = p < threshold && threshold < v;
                        if strictly_between && gain > MIN_GAIN && best.is_none_or(|b| gain > b.2) {
                            best = Some((f, threshold, gain));
                        }
                    }
                }
                left_sum += self.grad[i];
                left_n += 1.0;
                prev = Some(v);
            }
        }
        best
    }

    fn grow(&self, nodes: &mut Vec<Node>, rows: Vec<usize>, depth: usize, in_node: &mut [bool]) {
        let at = nodes.len();
        nodes.push(self.leaf(&rows));
        if depth >= self.max_depth || rows.len() < 2 {
            return;
        }
        rows.iter().for_each(|&i| in_node[i] = true);
        let split = self.best_split(in_node, &rows);
        rows.iter().for_each(|&i| in_node[i] = false);
        let Some((feature, threshold, _)) = split else {
            return;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| self.x.get(i, feature) <= threshold);
        let left_at = nodes.len();
        self.grow(nodes, left, depth + 1, in_node);
        let right_at = nodes.len();
        self.grow(nodes, right, depth + 1, in_node);
        nodes[at] = Node::Split {
            feature,
            threshold,
            left: left_at,
            right: right_at,
        };
    }
}

/// Mean logistic loss of the raw scores `f` against `labels`.
pub fn gbt_log_loss(raw: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = raw
        .iter()
        .zip(labels)
        .map(|(&f, &y)| {
            // log(1 + e^f) - y f, computed stably
            let softplus = if f > 0.0 { f + (-f).exp().ln_1p() } else { f.exp().ln_1p() };
            softplus - f64::from(y) * f
        })
        .sum();
    total / raw.len().max(1) as f64
}

/// Logistic-loss boosting with Newton leaf values.
pub fn gbt_train(x: &Matrix, labels: &[u8], params: &GbtParams) -> Result<GbtModel> {
    gbt_train_observed(x, labels, params, |_, _| {})
}

/// As [`gbt_train`], calling `observer(round, raw_scores)` after every tree.
pub fn gbt_train_observed<F>(x: &Matrix, labels: &[u8], params: &GbtParams, mut observer: F) -> Result<GbtModel>
where
    F: FnMut(usize, &[f64]),
{
    if x.n_rows() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "label count",
            expected: x.n_rows(),
            got: labels.len(),
        });
    }
    check_binary(labels)?;
    if params.max_depth == 0 {
        return Err(Error::InvalidArgument("max_depth must be positive".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(Error::InvalidArgument("learning_rate must be in (0, 1]".into()));
    }
    if !(params.subsample > 0.0 && params.subsample <= 1.0) {
        return Err(Error::InvalidArgument("subsample must be in (0, 1]".into()));
    }
    let n = labels.len();
    let prevalence = labels.iter().filter(|&&y| y == 1).count() as f64 / n as f64;
    let base_score = (prevalence / (1.0 - prevalence)).ln();
    let order = (0..x.n_cols())
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
            idx
        })
        .collect();
    let mut builder = Builder {
        x,
        order,
        grad: vec![0.0; n],
        hess: vec![0.0; n],
        max_depth: params.max_depth,
    };
    let mut raw = vec![base_score; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut sampler = rng(params.seed);
    let mut in_node = vec![false; n];
    for round in 0..params.n_trees {
        for i in 0..n {
            let p = sigmoid(raw[i]);
            builder.grad[i] = f64::from(labels[i]) - p;
            builder.hess[i] = p * (1.0 - p);
        }
        let rows: Vec<usize> = if params.subsample < 1.0 {
            let m = ((params.subsample * n as f64).round() as usize).clamp(1, n);
            let mut r = sample(&mut sampler, n, m).into_vec();
            r.sort_unstable();
            r
        } else {
            (0..n).collect()
        };
        let mut nodes = Vec::new();
        builder.grow(&mut nodes, rows, 0, &mut in_node);
        let tree = Tree { nodes };
        for (i, f) in raw.iter_mut().enumerate() {
            *f += params.learning_rate * tree.predict(x.row(i));
        }
        trees.push(tree);
        observer(round, &raw);
    }
    Ok(GbtModel {
        trees,
        learning_rate: params.learning_rate,
        max_depth: params.max_depth,
        base_score,
        n_features: x.n_cols(),
    })
}

/// Probabilities `sigmoid(base + rate sum trees)` and labels `p > 0.5`.
pub fn gbt_predict(model: &GbtModel, x: &Matrix) -> Result<(Vec<f64>, Vec<u8>)> {
    if x.n_cols() != model.n_features {
        return Err(Error::LengthMismatch {
            what: "feature width",
            expected: model.n_features,
            got: x.n_cols(),
        });
    }
    let probs: Vec<f64> = (0..x.n_rows()).map(|i| sigmoid(model.raw_score(x.row(i)))).collect();
    let labels = probs.iter().map(|&p| u8::from(p > 0.5)).collect();
    Ok((probs, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn accuracy(a: &[u8], b: &[u8]) -> f64 {
        a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64
    }

    #[test]
    fn stump_learns_binary_feature() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![(i % 2) as f64, (i % 7) as f64]).collect();
        let y: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let params = GbtParams { n_trees: 10, max_depth: 1, learning_rate: 0.1, ..Default::default() };
        let m = gbt_train(&x, &y, &params).unwrap();
        assert_eq!(gbt_predict(&m, &x).unwrap().1, y);
        match m.trees[0].nodes[0] {
            Node::Split { feature, threshold, .. } => assert_eq!((feature, threshold), (0, 0.5)),
            _ => panic!("expected a split"),
        }
    }

    #[test]
    fn zero_trees_give_prevalence() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let params = GbtParams { n_trees: 0, ..Default::default() };
        let m = gbt_train(&x, &[0, 0, 0, 1], &params).unwrap();
        let (p, _) = gbt_predict(&m, &x).unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn xor_is_learned() {
        let mut r = rng(7);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..50 {
            let a: f64 = r.gen_range(-1.0..1.0);
            let b: f64 = r.gen_range(-1.0..1.0);
            rows.push(vec![a, b]);
            y.push(u8::from((a > 0.0) != (b > 0.0)));
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let params = GbtParams { n_trees: 100, max_depth: 2, learning_rate: 0.3, ..Default::default() };
        let m = gbt_train(&x, &y, &params).unwrap();
        assert!(accuracy(&gbt_predict(&m, &x).unwrap().1, &y) >= 0.95);
    }

    #[test]
    fn hand_built_stump() {
        let model = GbtModel {
            trees: vec![Tree {
                nodes: vec![
                    Node::Split { feature: 0, threshold: 0.5, left: 1, right: 2 },
                    Node::Leaf(-1.0),
                    Node::Leaf(2.0),
                ],
            }],
            learning_rate: 0.5,
            max_depth: 1,
            base_score: 0.25,
            n_features: 1,
        };
        let x = Matrix::from_rows(&[vec![0.0], vec![0.5], vec![1.0]]).unwrap();
        let (p, l) = gbt_predict(&model, &x).unwrap();
        let expect = [0.25 - 0.5, 0.25 - 0.5, 0.25 + 1.0].map(|f: f64| 1.0 / (1.0 + (-f).exp()));
        for (a, b) in p.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(l, vec![0, 0, 1]);
        let back = GbtModel::from_text(&model.to_text()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn leaf_clamp_bounds_probability() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let params = GbtParams { n_trees: 1, max_depth: 1, learning_rate: 1.0, ..Default::default() };
        let m = gbt_train(&x, &[0, 0, 1, 1], &params).unwrap();
        for tree in &m.trees {
            for node in &tree.nodes {
                if let Node::Leaf(v) = node {
                    assert!(v.abs() <= LEAF_CLAMP);
                }
            }
        }
        let (p, _) = gbt_predict(&m, &x).unwrap();
        assert!(p.iter().all(|&v| v <= sigmoid(LEAF_CLAMP)));
    }

    #[test]
    fn parser_rejects_cycles() {
        let text = "quenchmap-gbt v1\nn_features 1\nlearning_rate 0.1\nmax_depth 1\nbase_score 0\nn_trees 1\ntree 2\nsplit 0 0.5 0 1\nleaf 1\n";
        assert!(GbtModel::from_text(text).is_err());
        assert!(GbtModel::from_text("quenchmap-gbt v2\n").is_err());
    }

    fn random_problem(seed: u64) -> (Matrix, Vec<u8>) {
        let mut r = rng(seed);
        let rows: Vec<Vec<f64>> = (0..40).map(|_| (0..3).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let mut y: Vec<u8> = rows.iter().map(|x| u8::from(x[0] * x[1] + 0.3 * r.gen_range(-1.0..1.0) > 0.0)).collect();
        y[0] = 0;
        y[1] = 1;
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn training_loss_never_increases(seed in 0u64..1000) {
            let (x, y) = random_problem(seed);
            let params = GbtParams { n_trees: 30, max_depth: 3, learning_rate: 0.1, ..Default::default() };
            let mut losses = Vec::new();
            let m = gbt_train_observed(&x, &y, &params, |_, raw| losses.push(gbt_log_loss(raw, &y))).unwrap();
            let initial = gbt_log_loss(&vec![m.base_score; y.len()], &y);
            let mut prev = initial;
            for l in losses {
                prop_assert!(l <= prev + 1e-12);
                prev = l;
            }
        }

        #[test]
        fn thresholds_lie_between_observed_values(seed in 0u64..1000) {
            let (x, y) = random_problem(seed);
            let m = gbt_train(&x, &y, &GbtParams { n_trees: 10, ..Default::default() }).unwrap();
            for tree in &m.trees {
                for node in &tree.nodes {
                    if let Node::Split { feature, threshold, .. } = *node {
                        let col: Vec<f64> = (0..x.n_rows()).map(|i| x.get(i, feature)).collect();
                        prop_assert!(col.iter().any(|&v| v < threshold));
                        prop_assert!(col.iter().any(|&v| v > threshold));
                        prop_assert!(col.iter().all(|&v| v != threshold));
                    }
                }
            }
        }
    }
}
