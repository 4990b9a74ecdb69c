//! Incremental kd-tree for nearest-neighbor lookups over embedded
//! configurations. Insertion order follows RRT growth, which is random
//! enough to keep the tree usably balanced.

pub struct KdTree {
    dim: usize,
    nodes: Vec<KdNode>,
}

struct KdNode {
    point: Vec<f64>,
    /// Payload index (tree-node id in the planner).
    id: usize,
    left: Option<usize>,
    right: Option<usize>,
}

impl KdTree {
    pub fn new(dim: usize) -> Self {
        Self { dim, nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn insert(&mut self, point: Vec<f64>, id: usize) {
        debug_assert_eq!(point.len(), self.dim);
        let new_index = self.nodes.len();
        if new_index == 0 {
            self.nodes.push(KdNode { point, id, left: None, right: None });
            return;
        }
        let mut cur = 0;
        let mut depth = 0;
        loop {
            let axis = depth % self.dim;
            let go_left = point[axis] < self.nodes[cur].point[axis];
            let slot = if go_left { self.nodes[cur].left } else { self.nodes[cur].right };
            match slot {
                Some(next) => {
                    cur = next;
                    depth += 1;
                }
                None => {
                    if go_left {
                        self.nodes[cur].left = Some(new_index);
                    } else {
                        self.nodes[cur].right = Some(new_index);
                    }
                    self.nodes.push(KdNode { point, id, left: None, right: None });
                    return;
                }
            }
        }
    }

    /// Payload id of the point closest to `query` (squared Euclidean).
    pub fn nearest(&self, query: &[f64]) -> Option<usize> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, 0usize);
        self.search(0, 0, query, &mut best);
        Some(self.nodes[best.1].id)
    }

    fn search(&self, node: usize, depth: usize, query: &[f64], best: &mut (f64, usize)) {
        let n = &self.nodes[node];
        let d: f64 = n
            .point
            .iter()
            .zip(query)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d < best.0 {
            *best = (d, node);
        }
        let axis = depth % self.dim;
        let diff = query[axis] - n.point[axis];
        let (near, far) = if diff < 0.0 { (n.left, n.right) } else { (n.right, n.left) };
        if let Some(c) = near {
            self.search(c, depth + 1, query, best);
        }
        if diff * diff < best.0 {
            if let Some(c) = far {
                self.search(c, depth + 1, query, best);
            }
        }
    }
}
