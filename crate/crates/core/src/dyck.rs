//! Contour (Dyck-path) encoding of the sampled subtree.
//!
//! A depth-first traversal from the root, with children in canonical
//! plane order, crosses each edge twice and yields a +-1 height sequence.
//! First-visit times of the marked vertices are recorded so the induced
//! partition can be read off the excursions of the height process.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::combinatorics::PartitionOfL;
use crate::error::{Error, Result};
use crate::reduced::{subtree_structure, ROOT};

/// Height sequence of the contour traversal plus the first-visit step
/// index of each marked vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyckPath {
    /// +1 for each downward edge crossing, -1 for the return.
    pub steps: Vec<i8>,
    /// `(label, step index)` pairs; the height after `step index` steps is
    /// the depth of the marked vertex.
    pub leaf_marks: Vec<(u32, usize)>,
}

impl DyckPath {
    /// Heights `H(0..=len)`; `H(0) = H(len) = 0` for a valid path.
    pub fn heights(&self) -> Vec<i64> {
        let mut h = Vec::with_capacity(self.steps.len() + 1);
        let mut cur = 0i64;
        h.push(cur);
        for &s in &self.steps {
            cur += s as i64;
            h.push(cur);
        }
        h
    }

    /// Prefix sums stay nonnegative and the total is zero.
    pub fn is_valid(&self) -> bool {
        let mut cur = 0i64;
        for &s in &self.steps {
            cur += s as i64;
            if cur < 0 {
                return false;
            }
        }
        cur == 0
    }

    /// Number of excursions of the height process above zero.
    pub fn excursion_count(&self) -> usize {
        let mut count = 0;
        let mut cur = 0i64;
        for &s in &self.steps {
            if cur == 0 && s == 1 {
                count += 1;
            }
            cur += s as i64;
        }
        count
    }

    /// Groups the marked labels by the excursion that contains their
    /// first visit.
    pub fn excursion_partition(&self) -> Result<PartitionOfL> {
        if self.leaf_marks.is_empty() {
            return Err(Error::MalformedPath("no marked leaves recorded".into()));
        }
        let heights = self.heights();
        // excursion index at step k = completed returns to zero before k
        let mut blocks: HashMap<usize, Vec<u32>> = HashMap::new();
        for &(label, idx) in &self.leaf_marks {
            if idx == 0 || idx >= heights.len() || heights[idx] < 1 {
                return Err(Error::MalformedPath(format!(
                    "mark for {label} at step {idx} does not sit inside an excursion"
                )));
            }
            let excursion = heights[1..idx].iter().filter(|&&h| h == 0).count();
            blocks.entry(excursion).or_default().push(label);
        }
        PartitionOfL::new(blocks.into_values().collect())
    }

    /// Rebuilds the plane tree the path encodes.
    pub fn decode_plane_tree(&self) -> Result<PlaneTree> {
        let mut stack = vec![PlaneTree::default()];
        for (i, &s) in self.steps.iter().enumerate() {
            match s {
                1 => stack.push(PlaneTree::default()),
                -1 => {
                    let done = stack
                        .pop()
                        .ok_or_else(|| Error::MalformedPath(format!("underflow at step {i}")))?;
                    let parent = stack
                        .last_mut()
                        .ok_or_else(|| Error::MalformedPath(format!("underflow at step {i}")))?;
                    parent.children.push(done);
                }
                other => {
                    return Err(Error::MalformedPath(format!(
                        "invalid step {other} at index {i}"
                    )))
                }
            }
        }
        if stack.len() != 1 {
            return Err(Error::MalformedPath("path does not return to the root".into()));
        }
        Ok(stack.pop().unwrap())
    }
}

/// Unlabelled rooted plane tree (ordered children).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PlaneTree {
    pub children: Vec<PlaneTree>,
}

impl PlaneTree {
    pub fn vertex_count(&self) -> usize {
        1 + self.children.iter().map(|c| c.vertex_count()).sum::<usize>()
    }
}

/// Contour encoding of the minimal subtree spanning `{1..l}` in a parent
/// map, children visited in canonical plane order.
pub fn contour_encode(parent: &HashMap<u32, u32>, l: u32) -> Result<DyckPath> {
    let structure = subtree_structure(parent, l)?;
    let children = &structure.children;
    let mut steps = Vec::with_capacity(2 * structure.vertex_count as usize);
    let mut leaf_marks = Vec::with_capacity(l as usize);
    // iterative DFS: (vertex, next child index)
    let mut stack: Vec<(u32, usize)> = vec![(ROOT, 0)];
    while let Some(&mut (v, ref mut idx)) = stack.last_mut() {
        let kids = &children[&v];
        if *idx < kids.len() {
            let child = kids[*idx];
            *idx += 1;
            steps.push(1);
            if child >= 1 && child <= l {
                leaf_marks.push((child, steps.len()));
            }
            stack.push((child, 0));
        } else {
            stack.pop();
            if !stack.is_empty() {
                steps.push(-1);
            }
        }
    }
    Ok(DyckPath { steps, leaf_marks })
}

/// Plane shape of the subtree, computed directly from the parent map;
/// the independent reference for the encode/decode round trip.
pub fn plane_shape(parent: &HashMap<u32, u32>, l: u32) -> Result<PlaneTree> {
    let structure = subtree_structure(parent, l)?;
    Ok(build_plane(ROOT, &structure.children))
}

fn build_plane(v: u32, children: &HashMap<u32, Vec<u32>>) -> PlaneTree {
    PlaneTree {
        children: children[&v]
            .iter()
            .map(|&c| build_plane(c, children))
            .collect(),
    }
}
