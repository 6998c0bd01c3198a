//! Reduction of an embedded rooted subtree to its combinatorial class.
//!
//! The class of the minimal subtree connecting the marked set `{1..l}` to
//! the root is captured by two pieces: the reduced shape (marked vertices
//! and branch points, with suppressed degree-2 vertices removed) and the
//! extension vector `u` counting suppressed vertices along each reduced
//! edge, listed in first-visit contour order.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{BinaryShape, BouquetConfig, PartitionOfL};
use crate::error::{Error, Result};

/// Sentinel vertex id for the absorbing root.
pub const ROOT: u32 = 0;

/// One vertex of the reduced shape. `label` is set when the vertex is a
/// marked vertex; branch points outside the marked set are unlabelled.
/// Children are in plane order (minimum marked label underneath).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedVertex {
    pub label: Option<u32>,
    pub children: Vec<ReducedVertex>,
}

impl ReducedVertex {
    fn write_key(&self, out: &mut String) {
        if let Some(x) = self.label {
            out.push_str(&x.to_string());
        }
        if !self.children.is_empty() {
            out.push('(');
            for (i, ch) in self.children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                ch.write_key(out);
            }
            out.push(')');
        }
    }

    fn count(&self) -> u32 {
        1 + self.children.iter().map(|c| c.count()).sum::<u32>()
    }

    fn unlabelled_count(&self) -> u32 {
        u32::from(self.label.is_none())
            + self.children.iter().map(|c| c.unlabelled_count()).sum::<u32>()
    }

    fn is_binary(&self) -> bool {
        match (self.label, self.children.len()) {
            (Some(_), 0) => true,
            (None, 2) => self.children.iter().all(|c| c.is_binary()),
            _ => false,
        }
    }

    fn to_binary_shape(&self) -> Option<BinaryShape> {
        match (self.label, self.children.len()) {
            (Some(x), 0) => Some(BinaryShape::leaf(x)),
            (None, 2) => {
                let a = self.children[0].to_binary_shape()?;
                let b = self.children[1].to_binary_shape()?;
                Some(BinaryShape::node(a, b))
            }
            _ => None,
        }
    }

    fn marked_labels(&self, out: &mut Vec<u32>) {
        if let Some(x) = self.label {
            out.push(x);
        }
        for c in &self.children {
            c.marked_labels(out);
        }
    }
}

/// Reduced shape: the root's subtrees in plane order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedShape {
    pub roots: Vec<ReducedVertex>,
}

impl ReducedShape {
    /// Shape-only canonical key; bouquets render exactly like
    /// [`BouquetConfig::canonical_string`] (a singleton component shows
    /// as `((2))`).
    pub fn canonical_string(&self) -> String {
        let mut out = String::new();
        for (i, root) in self.roots.iter().enumerate() {
            if i > 0 {
                out.push('|');
            }
            out.push('(');
            if root.children.is_empty() {
                out.push('(');
                root.write_key(&mut out);
                out.push(')');
            } else {
                root.write_key(&mut out);
            }
            out.push(')');
        }
        out
    }

    pub fn vertex_count(&self) -> u32 {
        self.roots.iter().map(|r| r.count()).sum()
    }
}

/// How the reduced shape classifies against the bouquet dichotomy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    /// Every marked vertex is a leaf and every branch point is binary;
    /// `r` component trees hang from the root.
    BinaryBouquet { r: u32 },
    /// Anything else: a marked vertex with children, or a branch point of
    /// degree other than two.
    Degenerate,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::BinaryBouquet { .. } => "binary_bouquet",
            Classification::Degenerate => "degenerate",
        }
    }
}

/// The full observation class: reduced shape plus extension vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedObservation {
    pub shape: ReducedShape,
    /// Suppressed-vertex counts per reduced vertex, first-visit order.
    pub extension: Vec<u32>,
    /// Marked-set size.
    pub l: u32,
}

impl ReducedObservation {
    /// Number of component trees at the root.
    pub fn component_count(&self) -> u32 {
        self.shape.roots.len() as u32
    }

    pub fn extension_sum(&self) -> u64 {
        self.extension.iter().map(|&u| u as u64).sum()
    }

    /// Embedded vertices that are neither marked nor the root: suppressed
    /// vertices plus unlabelled branch points.
    pub fn inner_count(&self) -> u64 {
        let unlabelled: u32 = self.shape.roots.iter().map(|r| r.unlabelled_count()).sum();
        self.extension_sum() + unlabelled as u64
    }

    /// Total embedded vertex count excluding the root.
    pub fn embedded_vertex_count(&self) -> u64 {
        self.l as u64 + self.inner_count()
    }

    pub fn classification(&self) -> Classification {
        if self.shape.roots.iter().all(|r| r.is_binary()) {
            Classification::BinaryBouquet {
                r: self.component_count(),
            }
        } else {
            Classification::Degenerate
        }
    }

    /// Shape-only key (no extension vector).
    pub fn shape_key(&self) -> String {
        self.shape.canonical_string()
    }

    /// Injective class key: shape plus extension vector.
    pub fn class_key(&self) -> String {
        let u = self
            .extension
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",");
        format!("{};u=[{}]", self.shape.canonical_string(), u)
    }

    /// Blocks of marked labels by root component.
    pub fn root_partition(&self) -> Result<PartitionOfL> {
        let blocks = self
            .shape
            .roots
            .iter()
            .map(|r| {
                let mut labels = Vec::new();
                r.marked_labels(&mut labels);
                labels
            })
            .collect();
        PartitionOfL::new(blocks)
    }

    /// The bouquet view, when the class is a binary bouquet.
    pub fn to_bouquet_config(&self) -> Option<BouquetConfig> {
        let mut shapes: Vec<BinaryShape> = Vec::with_capacity(self.shape.roots.len());
        for r in &self.shape.roots {
            shapes.push(r.to_binary_shape()?);
        }
        shapes.sort_by_key(|s| s.min_leaf());
        let blocks = shapes.iter().map(|s| s.leaf_set()).collect();
        let partition = PartitionOfL::new(blocks).ok()?;
        BouquetConfig::new(partition, shapes).ok()
    }

    /// Observation-stream CSV row:
    /// `replicate,classification,canonical_key,r,u_1..u_k,d`.
    pub fn csv_row(&self, replicate: u64) -> String {
        let mut fields = vec![
            replicate.to_string(),
            self.classification().as_str().to_string(),
            csv_escape(&self.shape_key()),
            self.component_count().to_string(),
        ];
        fields.extend(self.extension.iter().map(|u| u.to_string()));
        fields.push(self.embedded_vertex_count().to_string());
        fields.join(",")
    }
}

/// Quotes a CSV field when it contains separators.
pub fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Embedded-tree structure shared by the reduction and the contour
/// encoding: children lists sorted in plane order, for the minimal
/// subtree spanning `{1..l}` and the root.
pub(crate) struct SubtreeStructure {
    /// Children of each vertex present in the subtree (ROOT included).
    pub children: HashMap<u32, Vec<u32>>,
    /// Vertices of the subtree excluding ROOT.
    pub vertex_count: u64,
}

/// Extracts the minimal subtree connecting `1..=l` to [`ROOT`] from a
/// parent map, and sorts all children lists by the smallest marked label
/// in the corresponding subtree.
pub(crate) fn subtree_structure(parent: &HashMap<u32, u32>, l: u32) -> Result<SubtreeStructure> {
    if l == 0 {
        return Err(Error::invalid("marked-set size l must be >= 1"));
    }
    let mut in_subtree: HashMap<u32, u32> = HashMap::new(); // vertex -> parent
    for start in 1..=l {
        let mut v = start;
        loop {
            if v == ROOT || in_subtree.contains_key(&v) {
                break;
            }
            let &p = parent.get(&v).ok_or(Error::MissingMarkedVertex(start))?;
            in_subtree.insert(v, p);
            v = p;
        }
    }
    let mut children: HashMap<u32, Vec<u32>> = HashMap::new();
    children.insert(ROOT, Vec::new());
    for (&v, &p) in &in_subtree {
        children.entry(p).or_default().push(v);
        children.entry(v).or_default();
    }

    // min marked label below each vertex, bottom-up over a DFS order
    let order = depth_first_order(&children);
    let mut min_label: HashMap<u32, u32> = HashMap::new();
    for &v in order.iter().rev() {
        let mut m = if v >= 1 && v <= l { v } else { u32::MAX };
        for &c in &children[&v] {
            m = m.min(min_label[&c]);
        }
        min_label.insert(v, m);
    }
    for list in children.values_mut() {
        list.sort_by_key(|c| min_label[c]);
    }
    Ok(SubtreeStructure {
        children,
        vertex_count: in_subtree.len() as u64,
    })
}

fn depth_first_order(children: &HashMap<u32, Vec<u32>>) -> Vec<u32> {
    let mut order = Vec::with_capacity(children.len());
    let mut stack = vec![ROOT];
    while let Some(v) = stack.pop() {
        order.push(v);
        for &c in &children[&v] {
            stack.push(c);
        }
    }
    order
}

/// Reduces a parent map to its observation class for marked set `1..=l`.
///
/// The map may describe a full spanning tree or just the minimal subtree;
/// only the part connecting the marked vertices to the root is read.
pub fn reduce_parent_map(parent: &HashMap<u32, u32>, l: u32) -> Result<ReducedObservation> {
    let structure = subtree_structure(parent, l)?;
    let children = &structure.children;

    let is_kept = |v: u32| -> bool { (1..=l).contains(&v) || children[&v].len() >= 2 };

    // Walk each root component iteratively; chains of suppressed vertices
    // can be long, the reduced tree itself is small.
    let mut roots = Vec::new();
    let mut extension = Vec::new();
    for &top in &children[&ROOT] {
        roots.push(build_reduced(top, l, children, &is_kept, &mut extension)?);
    }
    Ok(ReducedObservation {
        shape: ReducedShape { roots },
        extension,
        l,
    })
}

/// Builds the reduced vertex reached from `entry` (the first embedded
/// vertex of an edge leaving a kept vertex or the root), appending
/// extension entries in first-visit order.
fn build_reduced(
    entry: u32,
    l: u32,
    children: &HashMap<u32, Vec<u32>>,
    is_kept: &dyn Fn(u32) -> bool,
    extension: &mut Vec<u32>,
) -> Result<ReducedVertex> {
    let mut suppressed = 0u32;
    let mut v = entry;
    while !is_kept(v) {
        let kids = &children[&v];
        if kids.len() != 1 {
            return Err(Error::invalid(format!(
                "unmarked vertex {v} with {} children should have been a branch point",
                kids.len()
            )));
        }
        suppressed += 1;
        v = kids[0];
    }
    extension.push(suppressed);
    let label = if (1..=l).contains(&v) { Some(v) } else { None };
    let mut reduced_children = Vec::new();
    for &c in &children[&v] {
        reduced_children.push(build_reduced(c, l, children, is_kept, extension)?);
    }
    Ok(ReducedVertex {
        label,
        children: reduced_children,
    })
}
