//! Exact nearest-neighbor search with a kd-tree.
//!
//! Nodes split the point set at the median of their widest axis; leaves hold
//! at most [`LEAF_SIZE`] points. Results are identical to
//! [`exhaustive_nearest`]: same index, same squared distance, with ties
//! resolved toward the smaller point index. Pruning compares a bounding-box
//! lower bound computed with the same rounding sequence as [`crate::sq_dist`],
//! so no equal-distance candidate is ever skipped.

use crate::{sq_dist, Error, PointCloud, Result};

pub const LEAF_SIZE: usize = 16;

#[derive(Clone, Debug)]
enum NodeKind {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize },
}

#[derive(Clone, Debug)]
struct Node {
    kind: NodeKind,
    // Offset into `bounds`: dim lower bounds followed by dim upper bounds.
    bounds: usize,
}

/// Immutable kd-tree over a point cloud.
#[derive(Clone, Debug)]
pub struct NnIndex {
    dim: usize,
    // Points in tree order, with their original indices in `ids`.
    data: Vec<f64>,
    ids: Vec<usize>,
    nodes: Vec<Node>,
    bounds: Vec<f64>,
}

impl NnIndex {
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::Empty("cannot index an empty point cloud".into()));
        }
        let dim = cloud.dim();
        let mut perm: Vec<usize> = (0..cloud.len()).collect();
        let mut index = NnIndex {
            dim,
            data: Vec::with_capacity(cloud.coords().len()),
            ids: Vec::with_capacity(cloud.len()),
            nodes: Vec::new(),
            bounds: Vec::new(),
        };
        index.build_node(cloud, &mut perm, 0, cloud.len());
        for &i in &perm {
            index.data.extend_from_slice(cloud.point(i));
            index.ids.push(i);
        }
        Ok(index)
    }

    fn build_node(
        &mut self,
        cloud: &PointCloud,
        perm: &mut [usize],
        start: usize,
        end: usize,
    ) -> usize {
        let dim = self.dim;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &perm[start..end] {
            for (k, &c) in cloud.point(i).iter().enumerate() {
                lo[k] = lo[k].min(c);
                hi[k] = hi[k].max(c);
            }
        }
        let bounds = self.bounds.len();
        self.bounds.extend_from_slice(&lo);
        self.bounds.extend_from_slice(&hi);

        let (axis, spread) =
            (0..dim)
                .map(|k| (k, hi[k] - lo[k]))
                .fold((0, f64::NEG_INFINITY), |best, cur| {
                    if cur.1 > best.1 {
                        cur
                    } else {
                        best
                    }
                });

        let id = self.nodes.len();
        if end - start <= LEAF_SIZE || spread <= 0.0 {
            self.nodes.push(Node {
                kind: NodeKind::Leaf { start, end },
                bounds,
            });
            return id;
        }
        self.nodes.push(Node {
            kind: NodeKind::Leaf { start, end },
            bounds,
        });

        let mid = (end - start) / 2;
        perm[start..end].select_nth_unstable_by(mid, |&a, &b| {
            cloud.point(a)[axis]
                .total_cmp(&cloud.point(b)[axis])
                .then(a.cmp(&b))
        });
        let left = self.build_node(cloud, perm, start, start + mid);
        let right = self.build_node(cloud, perm, start + mid, end);
        self.nodes[id].kind = NodeKind::Split { left, right };
        id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Exact nearest neighbor of `y`: `(point index, squared distance)`.
    pub fn nearest(&self, y: &[f64]) -> Result<(usize, f64)> {
        Error::check_dim(self.dim, y.len())?;
        if y.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("query point has a non-finite coordinate"));
        }
        Ok(self.nearest_unchecked(y))
    }

    /// [`NnIndex::nearest`] without argument validation.
    pub fn nearest_unchecked(&self, y: &[f64]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, y, &mut best);
        best
    }

    fn lower_bound(&self, node: &Node, y: &[f64]) -> f64 {
        let lo = &self.bounds[node.bounds..node.bounds + self.dim];
        let hi = &self.bounds[node.bounds + self.dim..node.bounds + 2 * self.dim];
        let mut acc = 0.0;
        for k in 0..self.dim {
            let q = y[k];
            let d = if q < lo[k] {
                q - lo[k]
            } else if q > hi[k] {
                q - hi[k]
            } else {
                0.0
            };
            acc += d * d;
        }
        acc
    }

    fn search(&self, node_id: usize, y: &[f64], best: &mut (usize, f64)) {
        let node = &self.nodes[node_id];
        match node.kind {
            NodeKind::Leaf { start, end } => {
                for slot in start..end {
                    let p = &self.data[slot * self.dim..(slot + 1) * self.dim];
                    let d = sq_dist(y, p);
                    let id = self.ids[slot];
                    if d < best.1 || (d == best.1 && id < best.0) {
                        *best = (id, d);
                    }
                }
            }
            NodeKind::Split { left, right } => {
                let bl = self.lower_bound(&self.nodes[left], y);
                let br = self.lower_bound(&self.nodes[right], y);
                let order = if bl <= br {
                    [(left, bl), (right, br)]
                } else {
                    [(right, br), (left, bl)]
                };
                for (child, bound) in order {
                    if bound <= best.1 {
                        self.search(child, y, best);
                    }
                }
            }
        }
    }
}

/// Linear scan; the reference the kd-tree must reproduce exactly.
pub fn exhaustive_nearest(cloud: &PointCloud, y: &[f64]) -> Result<(usize, f64)> {
    if cloud.is_empty() {
        return Err(Error::Empty("cannot search an empty point cloud".into()));
    }
    Error::check_dim(cloud.dim(), y.len())?;
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, p) in cloud.iter().enumerate() {
        let d = sq_dist(y, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok(best)
}
