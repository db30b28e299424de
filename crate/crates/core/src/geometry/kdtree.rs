//! Exact k-d tree over a flat coordinate buffer of arbitrary dimension.
//!
//! Neighbours are ordered by `(distance, index)`, so equidistant points come
//! back lowest index first.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    nodes: Vec<Node>,
    /// Point indices, permuted so every leaf is a contiguous range.
    order: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl KdTree {
    pub fn build(dim: usize, coords: &[f64]) -> Self {
        assert!(dim > 0 && coords.len().is_multiple_of(dim));
        let n = coords.len() / dim;
        let mut tree = Self {
            dim,
            nodes: Vec::new(),
            order: (0..n).collect(),
        };
        if n > 0 {
            tree.build_node(coords, 0, n);
        }
        tree
    }

    fn build_node(&mut self, coords: &[f64], start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let dim = self.dim;
        let axis = (0..dim)
            .map(|a| {
                let (lo, hi) =
                    self.order[start..end]
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                            let v = coords[i * dim + a];
                            (lo.min(v), hi.max(v))
                        });
                (a, hi - lo)
            })
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(a, _)| a)
            .unwrap_or(0);
        let mid = start + (end - start) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&i, &j| {
            coords[i * dim + axis].total_cmp(&coords[j * dim + axis])
        });
        let value = coords[self.order[mid] * dim + axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build_node(coords, start, mid);
        let right = self.build_node(coords, mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// `k` nearest points as `(index, distance)`, ascending by `(distance, index)`.
    pub fn knn(&self, coords: &[f64], x: &[f64], k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_node(coords, 0, x, k, &mut heap);
        heap.into_sorted_vec()
            .into_iter()
            .map(|c| (c.index, c.d2.sqrt()))
            .collect()
    }

    fn knn_node(&self, coords: &[f64], node: usize, x: &[f64], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let c = Candidate {
                        d2: dist2(&coords[i * self.dim..(i + 1) * self.dim], x),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = x[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.knn_node(coords, near, x, k, heap);
                // `<=` so equidistant points with a smaller index are still found.
                if heap.len() < k || diff * diff <= heap.peek().map_or(f64::INFINITY, |c| c.d2) {
                    self.knn_node(coords, far, x, k, heap);
                }
            }
        }
    }

    /// Indices with `|p - x| < r`, ascending by `(distance, index)`.
    pub fn within(&self, coords: &[f64], x: &[f64], r: f64) -> Vec<(usize, f64)> {
        let mut out: Vec<Candidate> = Vec::new();
        if self.nodes.is_empty() || !(r > 0.0) {
            return Vec::new();
        }
        self.within_node(coords, 0, x, r, &mut out);
        out.sort();
        out.into_iter().map(|c| (c.index, c.d2.sqrt())).collect()
    }

    fn within_node(&self, coords: &[f64], node: usize, x: &[f64], r: f64, out: &mut Vec<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let p = &coords[i * self.dim..(i + 1) * self.dim];
                    let d2 = dist2(p, x);
                    if d2.sqrt() < r {
                        out.push(Candidate { d2, index: i });
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = x[axis] - value;
                if diff < r {
                    self.within_node(coords, left, x, r, out);
                }
                if diff > -r {
                    self.within_node(coords, right, x, r, out);
                }
            }
        }
    }
}
