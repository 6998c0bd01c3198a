//! Counting, enumeration and canonical encoding of binary leaf-labelled
//! tree classes, set partitions and bouquets.
//!
//! A shape on leaf set `B` is an unordered rooted binary tree whose leaves
//! carry the labels of `B`; children are stored in plane order (the child
//! containing the smallest label comes first), which makes every class
//! canonical. A bouquet is a partition of the marked set together with one
//! shape per block.

use crate::error::{Error, Result};

/// Rooted binary tree class over a set of integer leaf labels.
///
/// Children are kept in canonical plane order: the left child always
/// contains the minimum label of the whole shape.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryShape {
    Leaf(u32),
    Node(Box<BinaryShape>, Box<BinaryShape>),
}

impl BinaryShape {
    pub fn leaf(label: u32) -> Self {
        BinaryShape::Leaf(label)
    }

    /// Joins two shapes, ordering the children canonically.
    pub fn node(a: BinaryShape, b: BinaryShape) -> Self {
        if a.min_leaf() <= b.min_leaf() {
            BinaryShape::Node(Box::new(a), Box::new(b))
        } else {
            BinaryShape::Node(Box::new(b), Box::new(a))
        }
    }

    pub fn min_leaf(&self) -> u32 {
        match self {
            BinaryShape::Leaf(x) => *x,
            // canonical order puts the minimum in the first child
            BinaryShape::Node(a, _) => a.min_leaf(),
        }
    }

    pub fn leaf_count(&self) -> u32 {
        match self {
            BinaryShape::Leaf(_) => 1,
            BinaryShape::Node(a, b) => a.leaf_count() + b.leaf_count(),
        }
    }

    /// Sorted list of leaf labels.
    pub fn leaf_set(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out.sort_unstable();
        out
    }

    fn collect_leaves(&self, out: &mut Vec<u32>) {
        match self {
            BinaryShape::Leaf(x) => out.push(*x),
            BinaryShape::Node(a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    /// Nested-parenthesis encoding, e.g. `(1,(2,3))`; a lone leaf
    /// renders as `(2)`. Equal strings iff equal classes.
    pub fn canonical_string(&self) -> String {
        match self {
            BinaryShape::Leaf(x) => format!("({x})"),
            BinaryShape::Node(..) => self.nested_string(),
        }
    }

    /// Rendering used inside a parent node: leaves are bare labels.
    fn nested_string(&self) -> String {
        match self {
            BinaryShape::Leaf(x) => x.to_string(),
            BinaryShape::Node(a, b) => {
                format!("({},{})", a.nested_string(), b.nested_string())
            }
        }
    }

    /// Number of grafting sites: every vertex (leaf or internal, root
    /// included) can host a new sibling, giving `2m - 1` sites for a
    /// shape with `m` leaves.
    pub fn graft_site_count(&self) -> u32 {
        2 * self.leaf_count() - 1
    }

    /// All shapes obtained by grafting `label` above one vertex, in a
    /// fixed deterministic order (root site first, then left subtree
    /// sites, then right subtree sites).
    pub fn graft_everywhere(&self, label: u32) -> Vec<BinaryShape> {
        let mut out = Vec::with_capacity(self.graft_site_count() as usize);
        out.push(BinaryShape::node(self.clone(), BinaryShape::leaf(label)));
        if let BinaryShape::Node(a, b) = self {
            for ga in a.graft_everywhere(label) {
                out.push(BinaryShape::node(ga, (**b).clone()));
            }
            for gb in b.graft_everywhere(label) {
                out.push(BinaryShape::node((**a).clone(), gb));
            }
        }
        out
    }

    /// Grafts `label` at site `site` (see [`graft_site_count`]); used by
    /// the sequential sampler to pick a site uniformly.
    ///
    /// [`graft_site_count`]: BinaryShape::graft_site_count
    pub fn graft_at(&self, site: u32, label: u32) -> Result<BinaryShape> {
        let count = self.graft_site_count();
        if site >= count {
            return Err(Error::invalid(format!(
                "graft site {site} out of range (shape has {count} sites)"
            )));
        }
        // Site numbering matches graft_everywhere's ordering.
        if site == 0 {
            return Ok(BinaryShape::node(self.clone(), BinaryShape::leaf(label)));
        }
        match self {
            BinaryShape::Leaf(_) => unreachable!("leaf has a single site"),
            BinaryShape::Node(a, b) => {
                let left_sites = a.graft_site_count();
                if site - 1 < left_sites {
                    Ok(BinaryShape::node(a.graft_at(site - 1, label)?, (**b).clone()))
                } else {
                    Ok(BinaryShape::node(
                        (**a).clone(),
                        b.graft_at(site - 1 - left_sites, label)?,
                    ))
                }
            }
        }
    }
}

/// Number of binary shape classes on `l` labelled leaves: the double
/// factorial `(2l-3)!! = 1 * 3 * ... * (2l-3)`, with value 1 for `l = 1`.
pub fn count_binary_shapes(l: u32) -> Result<u128> {
    if l == 0 {
        return Err(Error::invalid("marked-set size l must be >= 1"));
    }
    let mut acc: u128 = 1;
    for i in 1..l as u128 {
        acc = acc
            .checked_mul(2 * i - 1)
            .ok_or_else(|| Error::CountOverflow(format!("binary shapes for l={l}")))?;
    }
    Ok(acc)
}

/// All distinct shapes on the given leaf set, built by grafting leaves in
/// increasing label order. The result has exactly
/// `count_binary_shapes(|leaf_set|)` elements.
pub fn enumerate_binary_shapes(leaf_set: &[u32]) -> Result<Vec<BinaryShape>> {
    let labels = validated_label_set(leaf_set)?;
    let mut shapes = vec![BinaryShape::leaf(labels[0])];
    for &x in &labels[1..] {
        shapes = shapes.iter().flat_map(|s| s.graft_everywhere(x)).collect();
    }
    Ok(shapes)
}

fn validated_label_set(labels: &[u32]) -> Result<Vec<u32>> {
    if labels.is_empty() {
        return Err(Error::invalid("leaf set must be nonempty"));
    }
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("leaf set contains duplicate labels"));
    }
    Ok(sorted)
}

/// Partition of a label set into nonempty blocks; blocks are sorted
/// internally and ordered by their minimum element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartitionOfL {
    blocks: Vec<Vec<u32>>,
}

impl PartitionOfL {
    pub fn new(mut blocks: Vec<Vec<u32>>) -> Result<Self> {
        if blocks.is_empty() || blocks.iter().any(|b| b.is_empty()) {
            return Err(Error::invalid("partition blocks must be nonempty"));
        }
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        let mut all: Vec<u32> = blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("partition blocks must be disjoint"));
        }
        Ok(PartitionOfL { blocks })
    }

    pub fn blocks(&self) -> &[Vec<u32>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_sizes(&self) -> Vec<u32> {
        self.blocks.iter().map(|b| b.len() as u32).collect()
    }

    /// Sorted block-size multiset, e.g. `[2, 1, 1]` -> `[1, 1, 2]`.
    pub fn size_multiset(&self) -> Vec<u32> {
        let mut sizes = self.block_sizes();
        sizes.sort_unstable();
        sizes
    }

    /// `1,3|2` style encoding (blocks in min-element order).
    pub fn canonical_string(&self) -> String {
        self.blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// All partitions of `labels` into exactly `r` blocks.
pub fn enumerate_partitions(labels: &[u32], r: u32) -> Result<Vec<PartitionOfL>> {
    let labels = validated_label_set(labels)?;
    let l = labels.len() as u32;
    if r < 1 || r > l {
        return Err(Error::invalid(format!(
            "block count r={r} out of range 1..={l}"
        )));
    }
    let mut out = Vec::new();
    let mut blocks: Vec<Vec<u32>> = Vec::new();
    assign(&labels, 0, r, &mut blocks, &mut out);
    Ok(out)
}

fn assign(
    labels: &[u32],
    idx: usize,
    r: u32,
    blocks: &mut Vec<Vec<u32>>,
    out: &mut Vec<PartitionOfL>,
) {
    let remaining = (labels.len() - idx) as u32;
    let have = blocks.len() as u32;
    // need (r - have) more blocks; each needs one fresh element
    if have > r || have + remaining < r {
        return;
    }
    if idx == labels.len() {
        if have == r {
            out.push(PartitionOfL {
                blocks: blocks.clone(),
            });
        }
        return;
    }
    let x = labels[idx];
    for i in 0..blocks.len() {
        blocks[i].push(x);
        assign(labels, idx + 1, r, blocks, out);
        blocks[i].pop();
    }
    blocks.push(vec![x]);
    assign(labels, idx + 1, r, blocks, out);
    blocks.pop();
}

/// Number of bouquet classes with `r` components on `l` labelled leaves,
/// by the recursion `C(l,r) = (2l-r-2) C(l-1,r) + C(l-1,r-1)` with
/// `C(1,1) = 1`; zero outside `1 <= r <= l`.
pub fn count_bouquets(l: u32, r: u32) -> Result<u128> {
    if l == 0 {
        return Err(Error::invalid("marked-set size l must be >= 1"));
    }
    if r < 1 || r > l {
        return Ok(0);
    }
    let mut prev = vec![0u128; l as usize + 2];
    prev[1] = 1; // l = 1 row
    for li in 2..=l as u128 {
        let mut row = vec![0u128; l as usize + 2];
        for ri in 1..=li {
            let coeff = 2 * li - ri - 2;
            let a = prev[ri as usize]
                .checked_mul(coeff)
                .ok_or_else(|| Error::CountOverflow(format!("bouquets for l={l}")))?;
            row[ri as usize] = a
                .checked_add(prev[ri as usize - 1])
                .ok_or_else(|| Error::CountOverflow(format!("bouquets for l={l}")))?;
        }
        prev = row;
    }
    Ok(prev[r as usize])
}

/// Partition of the marked set plus one binary shape per block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BouquetConfig {
    partition: PartitionOfL,
    shapes: Vec<BinaryShape>,
}

impl BouquetConfig {
    /// Builds a bouquet; `shapes[i]` must have exactly the leaf set of
    /// block `i` (blocks in min-element order).
    pub fn new(partition: PartitionOfL, shapes: Vec<BinaryShape>) -> Result<Self> {
        if shapes.len() != partition.block_count() {
            return Err(Error::invalid("one shape per block required"));
        }
        for (block, shape) in partition.blocks().iter().zip(&shapes) {
            if shape.leaf_set() != *block {
                return Err(Error::invalid(format!(
                    "shape leaf set {:?} does not match block {:?}",
                    shape.leaf_set(),
                    block
                )));
            }
        }
        Ok(BouquetConfig { partition, shapes })
    }

    pub fn partition(&self) -> &PartitionOfL {
        &self.partition
    }

    pub fn shapes(&self) -> &[BinaryShape] {
        &self.shapes
    }

    pub fn component_count(&self) -> u32 {
        self.shapes.len() as u32
    }

    pub fn leaf_count(&self) -> u32 {
        self.shapes.iter().map(|s| s.leaf_count()).sum()
    }

    /// Block shapes wrapped in parentheses and joined by `|`, e.g.
    /// `((1,3))|((2))`.
    pub fn canonical_string(&self) -> String {
        self.shapes
            .iter()
            .map(|s| format!("({})", s.canonical_string()))
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// All bouquets with `r` components on the given label set. The count
/// equals `count_bouquets(|labels|, r)`, which cross-validates the
/// recursion against the partition-sum definition.
pub fn enumerate_bouquets(labels: &[u32], r: u32) -> Result<Vec<BouquetConfig>> {
    let partitions = enumerate_partitions(labels, r)?;
    let mut out = Vec::new();
    for partition in partitions {
        let per_block: Vec<Vec<BinaryShape>> = partition
            .blocks()
            .iter()
            .map(|b| enumerate_binary_shapes(b))
            .collect::<Result<_>>()?;
        let mut combos: Vec<Vec<BinaryShape>> = vec![Vec::new()];
        for block_shapes in &per_block {
            let mut next = Vec::with_capacity(combos.len() * block_shapes.len());
            for combo in &combos {
                for s in block_shapes {
                    let mut c = combo.clone();
                    c.push(s.clone());
                    next.push(c);
                }
            }
            combos = next;
        }
        for shapes in combos {
            out.push(BouquetConfig {
                partition: partition.clone(),
                shapes,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn shape_counts_small() {
        assert_eq!(count_binary_shapes(1).unwrap(), 1);
        assert_eq!(count_binary_shapes(2).unwrap(), 1);
        assert_eq!(count_binary_shapes(3).unwrap(), 3);
        assert_eq!(count_binary_shapes(4).unwrap(), 15);
        assert!(count_binary_shapes(0).is_err());
    }

    #[test]
    fn enumeration_matches_count_up_to_8() {
        for l in 1..=8u32 {
            let labels: Vec<u32> = (1..=l).collect();
            let shapes = enumerate_binary_shapes(&labels).unwrap();
            assert_eq!(shapes.len() as u128, count_binary_shapes(l).unwrap());
            let keys: BTreeSet<String> =
                shapes.iter().map(|s| s.canonical_string()).collect();
            assert_eq!(keys.len(), shapes.len(), "canonical strings collide at l={l}");
        }
    }

    #[test]
    fn three_leaf_shapes() {
        let shapes = enumerate_binary_shapes(&[1, 2, 3]).unwrap();
        let keys: BTreeSet<String> = shapes.iter().map(|s| s.canonical_string()).collect();
        let expected: BTreeSet<String> = ["((1,2),3)", "((1,3),2)", "(1,(2,3))"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(keys, expected);
    }

    #[test]
    fn node_order_is_canonical() {
        let s = BinaryShape::node(
            BinaryShape::node(BinaryShape::leaf(2), BinaryShape::leaf(3)),
            BinaryShape::leaf(1),
        );
        assert_eq!(s.canonical_string(), "(1,(2,3))");
    }

    #[test]
    fn bouquet_counts() {
        assert_eq!(count_bouquets(1, 1).unwrap(), 1);
        assert_eq!(count_bouquets(3, 2).unwrap(), 3);
        assert_eq!(count_bouquets(5, 5).unwrap(), 1);
        assert_eq!(count_bouquets(4, 0).unwrap(), 0);
        assert_eq!(count_bouquets(4, 5).unwrap(), 0);
        // r = 1 bouquets are plain shapes
        for l in 1..=8 {
            assert_eq!(
                count_bouquets(l, 1).unwrap(),
                count_binary_shapes(l).unwrap()
            );
        }
    }

    #[test]
    fn recursion_matches_partition_sum() {
        // C(l,r) = sum over partitions of prod c_{|B|}
        for l in 1..=8u32 {
            let labels: Vec<u32> = (1..=l).collect();
            for r in 1..=l {
                let mut total: u128 = 0;
                for p in enumerate_partitions(&labels, r).unwrap() {
                    let mut prod: u128 = 1;
                    for b in p.blocks() {
                        prod *= count_binary_shapes(b.len() as u32).unwrap();
                    }
                    total += prod;
                }
                assert_eq!(total, count_bouquets(l, r).unwrap(), "l={l} r={r}");
            }
        }
    }

    #[test]
    fn recursion_identity_exact_to_20() {
        for l in 2..=20u32 {
            for r in 1..=l {
                let lhs = count_bouquets(l, r).unwrap();
                let rhs = (2 * l as u128 - r as u128 - 2) * count_bouquets(l - 1, r).unwrap()
                    + count_bouquets(l - 1, r - 1).unwrap();
                assert_eq!(lhs, rhs, "l={l} r={r}");
            }
        }
    }

    #[test]
    fn bouquet_enumeration_matches_count() {
        for l in 1..=6u32 {
            let labels: Vec<u32> = (1..=l).collect();
            for r in 1..=l {
                let bouquets = enumerate_bouquets(&labels, r).unwrap();
                assert_eq!(bouquets.len() as u128, count_bouquets(l, r).unwrap());
                let keys: BTreeSet<String> =
                    bouquets.iter().map(|b| b.canonical_string()).collect();
                assert_eq!(keys.len(), bouquets.len());
            }
        }
    }

    #[test]
    fn bouquet_canonical_examples() {
        let two = enumerate_bouquets(&[1, 2], 2).unwrap();
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].canonical_string(), "((1))|((2))");
        let one = enumerate_bouquets(&[1, 2], 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].canonical_string(), "((1,2))");

        let p = PartitionOfL::new(vec![vec![2], vec![1, 3]]).unwrap();
        let shapes = vec![
            BinaryShape::node(BinaryShape::leaf(1), BinaryShape::leaf(3)),
            BinaryShape::leaf(2),
        ];
        let b = BouquetConfig::new(p, shapes).unwrap();
        assert_eq!(b.canonical_string(), "((1,3))|((2))");
    }

    #[test]
    fn three_leaves_single_component() {
        let bouquets = enumerate_bouquets(&[1, 2, 3], 1).unwrap();
        assert_eq!(bouquets.len(), 3);
    }

    #[test]
    fn graft_site_indexing_agrees_with_enumeration() {
        let shapes = enumerate_binary_shapes(&[1, 2, 3]).unwrap();
        for s in &shapes {
            let all = s.graft_everywhere(4);
            assert_eq!(all.len() as u32, s.graft_site_count());
            for (i, g) in all.iter().enumerate() {
                assert_eq!(s.graft_at(i as u32, 4).unwrap(), *g);
            }
            assert!(s.graft_at(s.graft_site_count(), 4).is_err());
        }
    }

    #[test]
    fn partition_validation() {
        assert!(PartitionOfL::new(vec![vec![1], vec![1, 2]]).is_err());
        assert!(PartitionOfL::new(vec![vec![]]).is_err());
        let p = PartitionOfL::new(vec![vec![3, 2], vec![1]]).unwrap();
        assert_eq!(p.canonical_string(), "1|2,3");
        assert_eq!(p.size_multiset(), vec![1, 2]);
    }
}
