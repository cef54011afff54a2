//! CART trees grown on presorted feature orders.
//!
//! Each forest fit sorts every feature column once. A tree then works on the
//! in-bag rows only, keeps one sorted row list per feature and stably
//! partitions those lists at every split, so no node ever re-sorts.

use nalgebra::DMatrix;
use rand::Rng;

use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Weighted sum-of-squares reduction.
    Variance,
    /// Gini impurity decrease for 0/1 targets. With `G(p) = 2p(1-p)` the
    /// decrease is exactly twice the sum-of-squares reduction, so both
    /// criteria rank splits identically and share one search.
    Gini,
}

/// Weighted target moments of a node.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    w: f64,
    s: f64,
    q: f64,
}

impl Moments {
    fn sse(&self) -> f64 {
        self.q - self.s * self.s / self.w
    }

    fn mean(&self) -> f64 {
        if self.w > 0.0 {
            self.s / self.w
        } else {
            0.0
        }
    }
}

fn moments_of(rows: &[u32], weights: &[f64], y: &[f64]) -> Moments {
    let mut m = Moments::default();
    for &r in rows {
        let (w, v) = (weights[r as usize], y[r as usize]);
        m.w += w;
        m.s += w * v;
        m.q += w * v * v;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_node_size: usize,
    pub mtry: usize,
    pub criterion: Criterion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

/// Row indices of the training matrix sorted by each feature (ties by row).
pub struct Presorted {
    orders: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: &DMatrix<f64>) -> Self {
        let orders = x
            .column_iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..col.len() as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { orders }
    }
}

struct Work {
    node: usize,
    start: usize,
    end: usize,
    depth: usize,
    moments: Moments,
}

struct Best {
    feature: usize,
    pos: usize,
    threshold: f64,
    proxy: f64,
}

impl Tree {
    /// Grows a tree on rows with non-zero `weights` (bootstrap counts).
    pub fn grow(
        x: &DMatrix<f64>,
        y: &[f64],
        weights: &[u32],
        presorted: &Presorted,
        params: &TreeParams,
        rng: &mut StreamRng,
    ) -> Tree {
        let p = x.ncols();
        let wf: Vec<f64> = weights.iter().map(|&w| w as f64).collect();
        if p == 0 {
            let all: Vec<u32> = (0..y.len() as u32).collect();
            let value = moments_of(&all, &wf, y).mean();
            return Tree {
                nodes: vec![Node::Leaf { value }],
            };
        }
        let in_bag = weights.iter().filter(|&&w| w > 0).count();
        let mut rows = vec![0u32; p * in_bag];
        let mut vals = vec![0f64; p * in_bag];
        for (f, order) in presorted.orders.iter().enumerate() {
            let col = x.column(f);
            let base = f * in_bag;
            let mut k = 0;
            for &r in order {
                if weights[r as usize] > 0 {
                    rows[base + k] = r;
                    vals[base + k] = col[r as usize];
                    k += 1;
                }
            }
        }

        let root = moments_of(&rows[..in_bag], &wf, y);

        let min_node = params.min_node_size.max(1) as f64;
        let splittable = |m: &Moments, depth: usize| {
            depth < params.max_depth
                && m.w >= 2.0 * min_node
                && m.sse() > 1e-12 * m.q.abs().max(f64::MIN_POSITIVE)
        };

        let mut nodes = vec![Node::Leaf { value: root.mean() }];
        let mut stack = Vec::new();
        if splittable(&root, 0) {
            stack.push(Work {
                node: 0,
                start: 0,
                end: in_bag,
                depth: 0,
                moments: root,
            });
        }
        let mut goes_left = vec![false; x.nrows()];
        let mut tmp_rows = vec![0u32; in_bag];
        let mut tmp_vals = vec![0f64; in_bag];
        let mut features: Vec<usize> = (0..p).collect();
        let mtry = params.mtry.clamp(1, p.max(1));

        while let Some(work) = stack.pop() {
            let node = work.moments;
            // Partial Fisher-Yates draw of mtry candidate features.
            for i in 0..mtry {
                let j = rng.random_range(i..p);
                features.swap(i, j);
            }
            let mut candidates = features[..mtry].to_vec();
            candidates.sort_unstable();

            // Splits are ranked by sl^2/wl + sr^2/wr; the parent term s^2/w
            // is common to all of them.
            let base = node.s * node.s / node.w;
            let min_gain = 1e-12 * node.sse();
            let mut best: Option<Best> = None;
            for &f in &candidates {
                let off = f * in_bag;
                let seg_rows = &rows[off + work.start..off + work.end];
                let seg_vals = &vals[off + work.start..off + work.end];
                let mut left = Moments::default();
                for pos in 0..seg_rows.len() - 1 {
                    let r = seg_rows[pos] as usize;
                    let (wt, yv) = (wf[r], y[r]);
                    left.w += wt;
                    left.s += wt * yv;
                    let wr = node.w - left.w;
                    if wr < min_node {
                        break;
                    }
                    let (v, v_next) = (seg_vals[pos], seg_vals[pos + 1]);
                    if left.w < min_node || v >= v_next {
                        continue;
                    }
                    let sr = node.s - left.s;
                    let proxy = left.s * left.s / left.w + sr * sr / wr;
                    if proxy - base > min_gain && best.as_ref().is_none_or(|b| proxy > b.proxy) {
                        let mut threshold = 0.5 * (v + v_next);
                        if threshold >= v_next || !threshold.is_finite() {
                            threshold = v;
                        }
                        best = Some(Best {
                            feature: f,
                            pos,
                            threshold,
                            proxy,
                        });
                    }
                }
            }

            let Some(best) = best else {
                continue;
            };
            // Child moments are summed directly rather than by subtraction so
            // that leaf values are exact means of their rows.
            let split_off = best.feature * in_bag + work.start;
            let left_len = best.pos + 1;
            let seg = &rows[split_off..split_off + (work.end - work.start)];
            let left_m = moments_of(&seg[..left_len], &wf, y);
            let right_m = moments_of(&seg[left_len..], &wf, y);
            let left_node = nodes.len();
            let right_node = left_node + 1;
            nodes.push(Node::Leaf {
                value: left_m.mean(),
            });
            nodes.push(Node::Leaf {
                value: right_m.mean(),
            });
            nodes[work.node] = Node::Split {
                feature: best.feature as u32,
                threshold: best.threshold,
                left: left_node as u32,
                right: right_node as u32,
            };
            let depth = work.depth + 1;
            let split_left = splittable(&left_m, depth);
            let split_right = splittable(&right_m, depth);
            if !split_left && !split_right {
                continue;
            }

            for &r in &rows[split_off..split_off + left_len] {
                goes_left[r as usize] = true;
            }
            let len = work.end - work.start;
            for f in 0..p {
                let off = f * in_bag;
                if f == best.feature {
                    continue; // already ordered: left rows come first
                }
                let seg = off + work.start..off + work.end;
                let (mut li, mut ri) = (0, left_len);
                for k in seg.clone() {
                    let r = rows[k];
                    let dst = if goes_left[r as usize] {
                        li += 1;
                        li - 1
                    } else {
                        ri += 1;
                        ri - 1
                    };
                    tmp_rows[dst] = r;
                    tmp_vals[dst] = vals[k];
                }
                rows[seg.clone()].copy_from_slice(&tmp_rows[..len]);
                vals[seg].copy_from_slice(&tmp_vals[..len]);
            }
            for &r in &rows[split_off..split_off + left_len] {
                goes_left[r as usize] = false;
            }

            let mid = work.start + left_len;
            if split_right {
                stack.push(Work {
                    node: right_node,
                    start: mid,
                    end: work.end,
                    depth,
                    moments: right_m,
                });
            }
            if split_left {
                stack.push(Work {
                    node: left_node,
                    start: work.start,
                    end: mid,
                    depth,
                    moments: left_m,
                });
            }
        }
        Tree { nodes }
    }

    #[inline]
    pub fn predict_row(&self, x: &DMatrix<f64>, row: usize) -> f64 {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[(row, feature as usize)] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    /// Depth of the deepest leaf (root has depth 0).
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Weighted training mass reaching each leaf, in node order.
    pub fn leaf_weights(&self, x: &DMatrix<f64>, weights: &[u32]) -> Vec<u32> {
        let mut mass = vec![0u32; self.nodes.len()];
        for (row, &w) in weights.iter().enumerate() {
            if w == 0 {
                continue;
            }
            let mut i = 0usize;
            while let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = self.nodes[i]
            {
                i = if x[(row, feature as usize)] <= threshold {
                    left as usize
                } else {
                    right as usize
                };
            }
            mass[i] += w;
        }
        self.nodes
            .iter()
            .zip(mass)
            .filter(|(n, _)| matches!(n, Node::Leaf { .. }))
            .map(|(_, m)| m)
            .collect()
    }
}
