//! Bottom-up merging of solution spaces and top-down splitting of coefficients.
//!
//! Children are glued by requiring `u₁ = u₂` and `∂n₁u₁ + ∂n₂u₂ = 0` at every
//! shared interface node. Each child stores derivatives along its own outward
//! normal, so the derivative rows add while the value rows subtract.

mod tree;

use std::sync::Arc;

use faer::Mat;
use rayon::prelude::*;

use crate::boundary::{BoundarySampling, DNTrace};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::leaf::{compression_factor, LeafBasis};
use crate::linalg::{nullspace, CMat};
use crate::C64;

pub use tree::{build_quadtree, MergePlan, MergeStats, MergeStrategy, QuadTree, Slot, TreeNode};

/// Result of gluing children into one node.
#[derive(Clone, Debug)]
pub struct Merged {
    pub trace: DNTrace,
    /// One map per child from parent coefficients to child coefficients.
    pub split_ops: Vec<CMat>,
    pub stats: MergeStats,
}

/// Scaled continuity system, one value and one derivative row per interface pair.
fn continuity_matrix(children: &[&DNTrace], plan: &MergePlan, k: f64) -> (CMat, Vec<usize>) {
    let mut offsets = Vec::with_capacity(children.len() + 1);
    let mut total = 0;
    for c in children {
        offsets.push(total);
        total += c.rank();
    }
    offsets.push(total);
    let mut a = Mat::<C64>::zeros(2 * plan.interface.len(), total);
    for (row, (&((ca, ia), (cb, ib)), &w)) in plan.interface.iter().zip(&plan.weights).enumerate() {
        let sv = w.sqrt();
        let sd = sv / k;
        let (ga, gb) = (&children[ca].data, &children[cb].data);
        let (pa, pb) = (children[ca].nodes(), children[cb].nodes());
        for j in 0..children[ca].rank() {
            a[(2 * row, offsets[ca] + j)] = ga[(ia, j)] * sv;
            a[(2 * row + 1, offsets[ca] + j)] = ga[(pa + ia, j)] * sd;
        }
        for j in 0..children[cb].rank() {
            a[(2 * row, offsets[cb] + j)] = -gb[(ib, j)] * sv;
            a[(2 * row + 1, offsets[cb] + j)] = gb[(pb + ib, j)] * sd;
        }
    }
    (a, offsets)
}

/// Glue `children` along the interfaces of `plan` into a trace on `parent`.
///
/// Null vectors of the scaled continuity system are kept at relative
/// tolerance `tol_rel`. With `compress`, the merged trace is recompressed to
/// that tolerance and the split maps absorb the right factor.
pub fn merge_traces(
    children: &[&DNTrace],
    plan: &MergePlan,
    parent: Arc<BoundarySampling>,
    k: f64,
    tol_rel: f64,
    compress: Option<f64>,
) -> Result<Merged> {
    if plan.outer.len() != parent.len() {
        return Err(Error::ShapeMismatch(format!(
            "plan maps {} outer nodes but the parent has {}",
            plan.outer.len(),
            parent.len()
        )));
    }
    let (a, offsets) = continuity_matrix(children, plan, k);
    let null = nullspace(a.as_ref(), tol_rel)?;
    let n = null.basis;
    if n.ncols() == 0 {
        return Err(Error::EmptyMerge);
    }
    let first_dropped = a.ncols() - n.ncols();
    let worst_kept = match null.singular_values.get(first_dropped) {
        Some(&s) if null.sigma_max > 0.0 => s / null.sigma_max,
        _ => 0.0,
    };
    let mut split_ops: Vec<CMat> = (0..children.len())
        .map(|c| n.subrows(offsets[c], offsets[c + 1] - offsets[c]).to_owned())
        .collect();

    let p = parent.len();
    let images: Vec<CMat> = children.iter().zip(&split_ops).map(|(c, t)| &c.data * t).collect();
    let data = Mat::from_fn(2 * p, n.ncols(), |i, j| {
        let (c, idx) = plan.outer[i % p];
        let row = if i < p { idx } else { children[c].nodes() + idx };
        images[c][(row, j)]
    });
    let mut trace = DNTrace::new(parent, data)?;
    if let Some(eps) = compress {
        let f = compression_factor(&trace, k, eps)?;
        trace.data = &trace.data * &f;
        for t in &mut split_ops {
            *t = &*t * &f;
        }
    }
    let stats = MergeStats {
        rows: a.nrows(),
        cols: a.ncols(),
        null_dim: n.ncols(),
        rank: trace.rank(),
        sigma_max: null.sigma_max,
        worst_kept,
    };
    Ok(Merged { trace, split_ops, stats })
}

/// Merge two neighbours onto the parent boundary `parent`.
pub fn merge_pair(
    g1: &DNTrace,
    g2: &DNTrace,
    parent: Arc<BoundarySampling>,
    k: f64,
    tol_rel: f64,
    compress: Option<f64>,
) -> Result<Merged> {
    let plan = MergePlan::new(&[g1.boundary.as_ref(), g2.boundary.as_ref()], &parent)?;
    merge_traces(&[g1, g2], &plan, parent, k, tol_rel, compress)
}

/// Merge four quadrants in one continuity solve.
pub fn merge_quad(
    g: [&DNTrace; 4],
    parent: Arc<BoundarySampling>,
    k: f64,
    tol_rel: f64,
    compress: Option<f64>,
) -> Result<Merged> {
    let bs: Vec<&BoundarySampling> = g.iter().map(|t| t.boundary.as_ref()).collect();
    let plan = MergePlan::new(&bs, &parent)?;
    merge_traces(&g, &plan, parent, k, tol_rel, compress)
}

/// Upward pass from leaf bases given in `tree.leaves` order.
pub fn upward_pass(tree: &mut QuadTree, leaves: &[LeafBasis], k: f64, tol_rel: f64, compress: Option<f64>) -> Result<()> {
    let traces: Vec<DNTrace> = leaves.iter().map(|l| l.trace.clone()).collect();
    upward_pass_traces(tree, traces, k, tol_rel, compress)
}

/// Upward pass from bare leaf traces.
pub fn upward_pass_traces(
    tree: &mut QuadTree,
    traces: Vec<DNTrace>,
    k: f64,
    tol_rel: f64,
    compress: Option<f64>,
) -> Result<()> {
    if traces.len() != tree.leaves.len() {
        return Err(Error::ShapeMismatch(format!("{} leaf traces for {} leaves", traces.len(), tree.leaves.len())));
    }
    for (&id, t) in tree.leaves.iter().zip(traces) {
        if *t.boundary != *tree.nodes[id].boundary {
            return Err(Error::ShapeMismatch(format!("leaf trace {id} is sampled differently from its tree node")));
        }
        let node = &mut tree.nodes[id];
        node.boundary = t.boundary.clone();
        node.trace = Some(t);
    }
    for level in tree.levels_bottom_up() {
        let internal: Vec<usize> = level.into_iter().filter(|&i| !tree.nodes[i].is_leaf()).collect();
        let nodes = &tree.nodes;
        let merged: Vec<Result<Merged>> = internal
            .par_iter()
            .map(|&id| {
                let node = &nodes[id];
                let children: Vec<&DNTrace> = node
                    .children
                    .iter()
                    .map(|&c| nodes[c].trace.as_ref().expect("children are merged first"))
                    .collect();
                let plan = node.plan.as_ref().expect("internal nodes carry a plan");
                merge_traces(&children, plan, node.boundary.clone(), k, tol_rel, compress)
            })
            .collect();
        for (id, m) in internal.into_iter().zip(merged) {
            let m = m?;
            log::debug!(
                "merge node {id}: {}x{} system, null {}, kept {}",
                m.stats.rows,
                m.stats.cols,
                m.stats.null_dim,
                m.stats.rank
            );
            let node = &mut tree.nodes[id];
            node.trace = Some(m.trace);
            node.split_ops = m.split_ops;
            node.stats = Some(m.stats);
        }
    }
    Ok(())
}

/// Child coefficients `T_i γ` of an internal node.
pub fn split_coefficients(node: &TreeNode, gamma: &CMat) -> Result<Vec<CMat>> {
    if node.is_leaf() {
        return Err(Error::ShapeMismatch("leaf nodes have no children to split into".into()));
    }
    let r = node.trace.as_ref().map(|t| t.rank()).unwrap_or(0);
    if gamma.nrows() != r || node.split_ops.len() != node.children.len() {
        return Err(Error::ShapeMismatch(format!("coefficients of length {} for a node of rank {r}", gamma.nrows())));
    }
    Ok(node.split_ops.iter().map(|t| t * gamma).collect())
}

/// Coefficients of every leaf, in `tree.leaves` order, from root coefficients.
///
/// Each column of `gamma_root` is propagated independently.
pub fn downward_pass(tree: &QuadTree, gamma_root: &CMat) -> Result<Vec<CMat>> {
    let mut at: Vec<Option<CMat>> = vec![None; tree.nodes.len()];
    let mut stack = vec![(tree.root, gamma_root.clone())];
    while let Some((id, g)) = stack.pop() {
        let node = &tree.nodes[id];
        if node.is_leaf() {
            at[id] = Some(g);
            continue;
        }
        for (&c, gc) in node.children.iter().zip(split_coefficients(node, &g)?) {
            stack.push((c, gc));
        }
    }
    Ok(tree.leaves.iter().map(|&id| at[id].take().expect("every leaf is reached")).collect())
}

/// Field values `U γ` of a leaf at interior points.
pub fn reconstruct_interior(leaf: &LeafBasis, gamma: &[C64], targets: &[Point]) -> Result<Vec<C64>> {
    if gamma.len() != leaf.rank() {
        return Err(Error::ShapeMismatch(format!("{} coefficients for a leaf of rank {}", gamma.len(), leaf.rank())));
    }
    let b = leaf.evaluate_basis(targets)?;
    Ok((0..targets.len()).map(|i| (0..gamma.len()).map(|j| b[(i, j)] * gamma[j]).sum()).collect())
}
