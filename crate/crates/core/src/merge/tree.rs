use std::collections::HashMap;
use std::sync::Arc;

use crate::boundary::{box_edges, BoundarySampling, DNTrace};
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::linalg::CMat;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeStrategy {
    /// Square → two rectangles → four squares.
    #[default]
    Pairwise,
    /// Four squares merged in one continuity system.
    Quad,
}

/// A node of one matching pair: child slot and node index in that child's boundary.
pub type Slot = (usize, usize);

/// Index maps between a parent boundary and its children's boundaries.
#[derive(Clone, Debug)]
pub struct MergePlan {
    /// For each parent boundary node, the child node it copies.
    pub outer: Vec<Slot>,
    /// Matching nodes across shared edges.
    pub interface: Vec<(Slot, Slot)>,
    /// Quadrature weight of each interface node.
    pub weights: Vec<f64>,
}

fn key(p: Point) -> (u64, u64) {
    (p.x.to_bits(), p.y.to_bits())
}

impl MergePlan {
    /// Match nodes by exact coordinates. Every child node must lie on the
    /// parent boundary or on exactly one other child.
    pub fn new(children: &[&BoundarySampling], parent: &BoundarySampling) -> Result<Self> {
        let mut owner: HashMap<(u64, u64), Vec<Slot>> = HashMap::new();
        for (c, b) in children.iter().enumerate() {
            for (i, &p) in b.nodes.iter().enumerate() {
                owner.entry(key(p)).or_default().push((c, i));
            }
        }
        let mut on_parent = HashMap::new();
        let mut outer = Vec::with_capacity(parent.len());
        for (j, &p) in parent.nodes.iter().enumerate() {
            match owner.get(&key(p)).map(|v| v.as_slice()) {
                Some([slot]) => outer.push(*slot),
                _ => {
                    return Err(Error::InterfaceMismatch(format!(
                        "parent node {j} at ({}, {}) is not owned by exactly one child",
                        p.x, p.y
                    )))
                }
            }
            on_parent.insert(key(p), j);
        }
        let mut interface = Vec::new();
        let mut weights = Vec::new();
        for (c, b) in children.iter().enumerate() {
            for (i, &p) in b.nodes.iter().enumerate() {
                if on_parent.contains_key(&key(p)) {
                    continue;
                }
                match owner[&key(p)].as_slice() {
                    [a, b2] if a.0 != b2.0 => {
                        if (c, i) == *a {
                            interface.push((*a, *b2));
                            weights.push(children[c].weights[i]);
                        }
                    }
                    _ => {
                        return Err(Error::InterfaceMismatch(format!(
                            "child {c} node {i} at ({}, {}) has no unique partner",
                            p.x, p.y
                        )))
                    }
                }
            }
        }
        Ok(Self { outer, interface, weights })
    }
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub rect: Rect,
    /// Merge depth: 0 at the root, one per merge stage.
    pub depth: usize,
    pub children: Vec<usize>,
    pub boundary: Arc<BoundarySampling>,
    pub plan: Option<MergePlan>,
    pub trace: Option<DNTrace>,
    /// `T_i` mapping this node's coefficients to child `i`'s.
    pub split_ops: Vec<CMat>,
    pub stats: Option<MergeStats>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Sizes and conditioning of one merge.
#[derive(Clone, Debug, PartialEq)]
pub struct MergeStats {
    pub rows: usize,
    pub cols: usize,
    pub null_dim: usize,
    pub rank: usize,
    /// Largest singular value of the scaled continuity system.
    pub sigma_max: f64,
    /// Residual of the retained null vectors relative to `sigma_max`.
    pub worst_kept: f64,
}

/// Arena-backed balanced tree over a square.
#[derive(Clone, Debug)]
pub struct QuadTree {
    pub nodes: Vec<TreeNode>,
    pub root: usize,
    /// Leaf node ids in row-major order from the south-west corner.
    pub leaves: Vec<usize>,
    pub levels: usize,
    pub q: usize,
    pub strategy: MergeStrategy,
}

/// Segments of leaf-edge length covering the perimeter of `r`, counterclockwise.
fn perimeter_segments(r: &Rect, leaf: f64) -> Vec<(Point, Point)> {
    let mut segs = Vec::new();
    for (a, b) in box_edges(r) {
        let n = (a.dist(b) / leaf).round().max(1.0) as usize;
        for i in 0..n {
            let t0 = i as f64 / n as f64;
            let t1 = (i + 1) as f64 / n as f64;
            let lerp = |t: f64| if t == 0.0 { a } else if t == 1.0 { b } else { Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t) };
            segs.push((lerp(t0), lerp(t1)));
        }
    }
    segs
}

/// Balanced tree with `4^levels` square leaves carrying `q` nodes per leaf edge.
pub fn build_quadtree(rect: &Rect, levels: usize, q: usize, strategy: MergeStrategy) -> Result<QuadTree> {
    if levels < 1 {
        return Err(Error::InvalidCount { what: "tree levels", value: levels });
    }
    if !rect.is_square() {
        return Err(Error::UnsupportedGeometry("the tree root must be a square".into()));
    }
    let n = 1usize << levels;
    let leaf = rect.width() / n as f64;
    // snap split coordinates to the leaf lattice so shared corners are bit-equal
    let xs: Vec<f64> = (0..=n).map(|i| if i == n { rect.x1 } else { rect.x0 + leaf * i as f64 }).collect();
    let ys: Vec<f64> = (0..=n).map(|i| if i == n { rect.y1 } else { rect.y0 + leaf * i as f64 }).collect();

    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut leaf_at: HashMap<(usize, usize), usize> = HashMap::new();

    // index rectangle: [i0, i1) × [j0, j1) in leaf units
    fn build(
        nodes: &mut Vec<TreeNode>,
        leaf_at: &mut HashMap<(usize, usize), usize>,
        idx: (usize, usize, usize, usize),
        depth: usize,
        ctx: (&[f64], &[f64], f64, usize, MergeStrategy),
    ) -> Result<usize> {
        let (xs, ys, leaf, q, strategy) = ctx;
        let (i0, j0, i1, j1) = idx;
        let rect = Rect::new(xs[i0], ys[j0], xs[i1], ys[j1]);
        let boundary = Arc::new(BoundarySampling::from_segments(&perimeter_segments(&rect, leaf), q, true)?);
        let (w, h) = (i1 - i0, j1 - j0);
        let child_idx: Vec<(usize, usize, usize, usize)> = if w == 1 && h == 1 {
            Vec::new()
        } else {
            match strategy {
                MergeStrategy::Quad => {
                    let (im, jm) = (i0 + w / 2, j0 + h / 2);
                    vec![(i0, j0, im, jm), (im, j0, i1, jm), (im, jm, i1, j1), (i0, jm, im, j1)]
                }
                MergeStrategy::Pairwise if w == h => {
                    let im = i0 + w / 2;
                    vec![(i0, j0, im, j1), (im, j0, i1, j1)]
                }
                MergeStrategy::Pairwise => {
                    let jm = j0 + h / 2;
                    vec![(i0, j0, i1, jm), (i0, jm, i1, j1)]
                }
            }
        };
        let id = nodes.len();
        nodes.push(TreeNode {
            rect,
            depth,
            children: Vec::new(),
            boundary,
            plan: None,
            trace: None,
            split_ops: Vec::new(),
            stats: None,
        });
        if child_idx.is_empty() {
            leaf_at.insert((i0, j0), id);
            return Ok(id);
        }
        let mut children = Vec::new();
        for c in child_idx {
            children.push(build(nodes, leaf_at, c, depth + 1, ctx)?);
        }
        let plan = {
            let cb: Vec<&BoundarySampling> = children.iter().map(|&c| nodes[c].boundary.as_ref()).collect();
            MergePlan::new(&cb, &nodes[id].boundary)?
        };
        nodes[id].children = children;
        nodes[id].plan = Some(plan);
        Ok(id)
    }

    let root = build(&mut nodes, &mut leaf_at, (0, 0, n, n), 0, (&xs, &ys, leaf, q, strategy))?;
    let mut leaves = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            leaves.push(leaf_at[&(i, j)]);
        }
    }
    Ok(QuadTree { nodes, root, leaves, levels, q, strategy })
}

impl QuadTree {
    pub fn leaf_rects(&self) -> Vec<Rect> {
        self.leaves.iter().map(|&i| self.nodes[i].rect).collect()
    }

    /// Node ids grouped by depth, deepest first.
    pub fn levels_bottom_up(&self) -> Vec<Vec<usize>> {
        let maxd = self.nodes.iter().map(|n| n.depth).max().unwrap_or(0);
        let mut out = vec![Vec::new(); maxd + 1];
        for (i, n) in self.nodes.iter().enumerate() {
            out[maxd - n.depth].push(i);
        }
        out
    }

    pub fn root_node(&self) -> &TreeNode {
        &self.nodes[self.root]
    }

    /// Index of the leaf containing `p`, if any.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let r = self.root_node().rect;
        if !r.contains(p) {
            return None;
        }
        let n = 1usize << self.levels;
        let side = r.width() / n as f64;
        let i = (((p.x - r.x0) / side).floor() as usize).min(n - 1);
        let j = (((p.y - r.y0) / side).floor() as usize).min(n - 1);
        Some(j * n + i)
    }
}
