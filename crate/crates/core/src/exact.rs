//! Exact finite-N probabilities for the killed spanning-forest model on
//! the complete graph, plus a brute-force enumeration oracle.
//!
//! The model: spanning trees of `K_N` plus an absorbing root, weighted by
//! `kappa^(root degree)`. Closed forms come from principal minors of the
//! Green matrix; the oracle recomputes everything by enumerating all
//! spanning trees through their Prufer sequences with exact rational
//! arithmetic.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::reduced::{csv_escape, reduce_parent_map, ReducedObservation, ROOT};

/// Model parameters: `n` non-root vertices, killing conductance `kappa`,
/// and the marked set `{1..l}`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    pub n: u32,
    pub kappa: f64,
    pub l: u32,
}

impl ModelParams {
    pub fn new(n: u32, kappa: f64, l: u32) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("n must be >= 1"));
        }
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::invalid("kappa must be positive and finite"));
        }
        if l < 1 || l > n {
            return Err(Error::invalid(format!("l must satisfy 1 <= l <= n={n}")));
        }
        Ok(ModelParams { n, kappa, l })
    }

    /// Critical-regime parameters: `kappa = c * sqrt(n)`.
    pub fn critical(n: u32, c: f64, l: u32) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::invalid("c must be positive and finite"));
        }
        ModelParams::new(n, c * (n as f64).sqrt(), l)
    }
}

/// Determinant of the principal `d x d` minor of the Green matrix:
/// `(d + kappa) / (kappa (n + kappa)^d)` for `1 <= d <= n` (at `d = n`
/// this coincides with the full determinant `1 / (kappa (n+kappa)^(n-1))`).
pub fn green_submatrix_det(n: u32, kappa: f64, d: u32) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::invalid("kappa must be positive"));
    }
    if d == 0 || d > n {
        return Err(Error::invalid(format!("d must satisfy 1 <= d <= n={n}")));
    }
    let log = (d as f64 + kappa).ln() - kappa.ln() - d as f64 * (n as f64 + kappa).ln();
    Ok(log.exp())
}

/// Probability that the reduced subtree equals a fixed embedded tree with
/// `d` non-root vertices and `r` root edges:
/// `kappa^(r-1) (d + kappa) / (n + kappa)^d`.
pub fn embedded_tree_probability(n: u32, kappa: f64, d: u32, r: u32) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::invalid("kappa must be positive"));
    }
    if d == 0 || d as u64 > n as u64 {
        return Err(Error::invalid(format!("d must satisfy 1 <= d <= n={n}")));
    }
    if r == 0 || r > d {
        return Err(Error::invalid(format!("r must satisfy 1 <= r <= d={d}")));
    }
    Ok(log_embedded_probability(n, kappa, d as u64, r).exp())
}

pub(crate) fn log_embedded_probability(n: u32, kappa: f64, d: u64, r: u32) -> f64 {
    (r as f64 - 1.0) * kappa.ln() + (d as f64 + kappa).ln()
        - d as f64 * (n as f64 + kappa).ln()
}

/// Log-probability of an observation class with `d = l + inner` embedded
/// vertices: the embedded-tree factor times the number of ways to label
/// the `inner` unmarked vertices, `prod_{i<inner} (n - l - i)`.
pub(crate) fn log_class_probability(n: u32, kappa: f64, l: u32, r: u32, d: u64) -> f64 {
    let inner = d - l as u64;
    let mut log = log_embedded_probability(n, kappa, d, r);
    for i in 0..inner {
        log += ((n as u64 - l as u64 - i) as f64).ln();
    }
    log
}

/// Exact probability of a reduced observation class under the model.
/// Returns 0 when the class needs more unmarked vertices than exist.
pub fn class_probability(params: &ModelParams, obs: &ReducedObservation) -> Result<f64> {
    if obs.l != params.l {
        return Err(Error::invalid(format!(
            "observation has l={} but params have l={}",
            obs.l, params.l
        )));
    }
    let inner = obs.inner_count();
    if inner > (params.n - params.l) as u64 {
        return Ok(0.0);
    }
    let d = obs.embedded_vertex_count();
    Ok(log_class_probability(params.n, params.kappa, params.l, obs.component_count(), d).exp())
}

/// One aggregated class in the oracle distribution.
#[derive(Clone, Debug)]
pub struct OracleClass {
    pub r: u32,
    pub d: u64,
    /// Number of spanning trees realizing the class, per root degree.
    pub trees_by_root_degree: Vec<u64>,
    pub probability: BigRational,
}

/// Exact law of the observation class, computed by exhaustive
/// enumeration of all `(n+1)^(n-1)` spanning trees.
#[derive(Clone, Debug)]
pub struct OracleDistribution {
    pub params: ModelParams,
    pub classes: BTreeMap<String, OracleClass>,
}

impl OracleDistribution {
    /// Exact total mass; equals one for a correct enumeration.
    pub fn total_mass(&self) -> BigRational {
        let mut total = BigRational::zero();
        for c in self.classes.values() {
            total += &c.probability;
        }
        total
    }

    pub fn probability_f64(&self, key: &str) -> Option<f64> {
        self.classes.get(key).and_then(|c| c.probability.to_f64())
    }

    pub fn to_f64_map(&self) -> BTreeMap<String, f64> {
        self.classes
            .iter()
            .map(|(k, c)| (k.clone(), c.probability.to_f64().unwrap_or(0.0)))
            .collect()
    }

    /// CSV with columns `canonical_key,r,d,probability`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("canonical_key,r,d,probability\n");
        for (key, c) in &self.classes {
            let p = c.probability.to_f64().unwrap_or(0.0);
            out.push_str(&format!("{},{},{},{}\n", csv_escape(key), c.r, c.d, p));
        }
        out
    }
}

const ORACLE_MAX_N: u32 = 8;

/// Enumerates every spanning tree of `K_n` plus root via Prufer
/// sequences, weights each by `kappa^(root degree)`, normalizes by
/// `kappa (n + kappa)^(n-1)` and aggregates by observation class.
///
/// Arithmetic is exact: `kappa` (a dyadic rational, like every f64) is
/// handled as a `BigRational`.
pub fn exact_reduced_distribution(params: &ModelParams) -> Result<OracleDistribution> {
    if params.n > ORACLE_MAX_N {
        return Err(Error::invalid(format!(
            "oracle enumeration supports n <= {ORACLE_MAX_N} (got {})",
            params.n
        )));
    }
    let n_vertices = params.n as usize + 1; // root is vertex 0
    let seq_len = n_vertices.saturating_sub(2);

    struct Accum {
        r: u32,
        d: u64,
        trees_by_root_degree: Vec<u64>,
    }
    let mut acc: BTreeMap<String, Accum> = BTreeMap::new();

    let mut seq = vec![0u32; seq_len];
    let mut scratch = PruferScratch::new(n_vertices);
    loop {
        let parent = scratch.decode_to_parent_map(&seq);
        let root_degree = scratch.root_degree;
        let obs = reduce_parent_map(&parent, params.l)?;
        let key = obs.class_key();
        let entry = acc.entry(key).or_insert_with(|| Accum {
            r: obs.component_count(),
            d: obs.embedded_vertex_count(),
            trees_by_root_degree: vec![0; n_vertices + 1],
        });
        debug_assert_eq!(entry.r, obs.component_count());
        debug_assert_eq!(entry.d, obs.embedded_vertex_count());
        entry.trees_by_root_degree[root_degree] += 1;

        // odometer over sequences in base n_vertices
        let mut pos = 0;
        loop {
            if pos == seq_len {
                // enumeration finished
                return finalize(params, acc, n_vertices);
            }
            seq[pos] += 1;
            if (seq[pos] as usize) < n_vertices {
                break;
            }
            seq[pos] = 0;
            pos += 1;
        }
    }

    fn finalize(
        params: &ModelParams,
        acc: BTreeMap<String, Accum>,
        n_vertices: usize,
    ) -> Result<OracleDistribution> {
        let kappa = BigRational::from_float(params.kappa)
            .ok_or_else(|| Error::invalid("kappa is not a finite float"))?;
        let mut kappa_pow = vec![BigRational::one()];
        for k in 1..=n_vertices {
            let prev = kappa_pow[k - 1].clone();
            kappa_pow.push(prev * &kappa);
        }
        let n_plus_kappa = BigRational::from_integer(BigInt::from(params.n)) + &kappa;
        let mut normalization = kappa.clone();
        for _ in 0..params.n.saturating_sub(1) {
            normalization *= &n_plus_kappa;
        }

        let mut classes = BTreeMap::new();
        for (key, a) in acc {
            let mut weight = BigRational::zero();
            for (deg, &count) in a.trees_by_root_degree.iter().enumerate() {
                if count > 0 {
                    weight += BigRational::from_integer(BigInt::from(count)) * &kappa_pow[deg];
                }
            }
            classes.insert(
                key,
                OracleClass {
                    r: a.r,
                    d: a.d,
                    trees_by_root_degree: a.trees_by_root_degree,
                    probability: weight / &normalization,
                },
            );
        }
        Ok(OracleDistribution {
            params: *params,
            classes,
        })
    }
}

/// Reusable buffers for linear-time Prufer decoding.
struct PruferScratch {
    n_vertices: usize,
    degree: Vec<u32>,
    adjacency: Vec<Vec<u32>>,
    queue: Vec<u32>,
    root_degree: usize,
}

impl PruferScratch {
    fn new(n_vertices: usize) -> Self {
        PruferScratch {
            n_vertices,
            degree: vec![0; n_vertices],
            adjacency: vec![Vec::new(); n_vertices],
            queue: Vec::with_capacity(n_vertices),
            root_degree: 0,
        }
    }

    /// Decodes a Prufer sequence over vertices `0..n_vertices` and
    /// returns the parent map of the tree rooted at vertex 0.
    fn decode_to_parent_map(&mut self, seq: &[u32]) -> HashMap<u32, u32> {
        let n = self.n_vertices;
        for d in self.degree.iter_mut() {
            *d = 1;
        }
        for &s in seq {
            self.degree[s as usize] += 1;
        }
        for adj in self.adjacency.iter_mut() {
            adj.clear();
        }
        let push_edge = |adj: &mut Vec<Vec<u32>>, a: u32, b: u32| {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        };
        if n == 2 {
            push_edge(&mut self.adjacency, 0, 1);
        } else {
            let mut ptr = 0;
            while self.degree[ptr] != 1 {
                ptr += 1;
            }
            let mut leaf = ptr;
            for &s in seq {
                push_edge(&mut self.adjacency, leaf as u32, s);
                self.degree[s as usize] -= 1;
                if self.degree[s as usize] == 1 && (s as usize) < ptr {
                    leaf = s as usize;
                } else {
                    ptr += 1;
                    while self.degree[ptr] != 1 {
                        ptr += 1;
                    }
                    leaf = ptr;
                }
            }
            push_edge(&mut self.adjacency, leaf as u32, (n - 1) as u32);
        }
        self.root_degree = self.adjacency[ROOT as usize].len();

        // orient toward the root by breadth-first search
        let mut parent = HashMap::with_capacity(n - 1);
        self.queue.clear();
        self.queue.push(ROOT);
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            for i in 0..self.adjacency[v as usize].len() {
                let w = self.adjacency[v as usize][i];
                if w != ROOT && !parent.contains_key(&w) {
                    parent.insert(w, v);
                    self.queue.push(w);
                }
            }
        }
        parent
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn green_det_hand_values() {
        assert!((green_submatrix_det(2, 1.0, 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((green_submatrix_det(3, 1.0, 3).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        assert!((green_submatrix_det(5, 2.0, 2).unwrap() - 2.0 / 49.0).abs() < 1e-15);
        assert!(green_submatrix_det(4, 1.0, 0).is_err());
        assert!(green_submatrix_det(4, 1.0, 5).is_err());
    }

    /// Independent oracle: numerically invert `(n+kappa) I - J` and take
    /// the determinant of the principal `d x d` minor.
    fn green_det_by_inversion(n: usize, kappa: f64, d: usize) -> f64 {
        // invert by Gauss-Jordan
        let mut a = vec![vec![0.0f64; 2 * n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = if i == j { n as f64 + kappa - 1.0 } else { -1.0 };
            }
            a[i][n + i] = 1.0;
        }
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot_row);
            let pivot = a[col][col];
            for j in 0..2 * n {
                a[col][j] /= pivot;
            }
            for i in 0..n {
                if i != col {
                    let f = a[i][col];
                    for j in 0..2 * n {
                        a[i][j] -= f * a[col][j];
                    }
                }
            }
        }
        // LU determinant of the principal d x d block of the inverse
        let mut m = vec![vec![0.0f64; d]; d];
        for i in 0..d {
            for j in 0..d {
                m[i][j] = a[i][n + j];
            }
        }
        let mut det = 1.0;
        for col in 0..d {
            let pivot_row = (col..d)
                .max_by(|&p, &q| m[p][col].abs().partial_cmp(&m[q][col].abs()).unwrap())
                .unwrap();
            if pivot_row != col {
                m.swap(col, pivot_row);
                det = -det;
            }
            det *= m[col][col];
            for i in col + 1..d {
                let f = m[i][col] / m[col][col];
                for j in col..d {
                    m[i][j] -= f * m[col][j];
                }
            }
        }
        det
    }

    #[test]
    fn green_det_matches_matrix_inversion() {
        for &n in &[2u32, 3, 5, 7] {
            for &kappa in &[0.5, 1.0, 2.0] {
                for d in 1..=n {
                    let closed = green_submatrix_det(n, kappa, d).unwrap();
                    let oracle = green_det_by_inversion(n as usize, kappa, d as usize);
                    assert!(
                        (closed - oracle).abs() <= 1e-12 * closed.abs().max(1e-12),
                        "n={n} kappa={kappa} d={d}: {closed} vs {oracle}"
                    );
                }
            }
        }
    }

    #[test]
    fn prufer_enumeration_gives_distinct_spanning_trees() {
        // 5^3 = 125 labelled trees on 5 vertices, all distinct
        let n_vertices = 5;
        let mut scratch = PruferScratch::new(n_vertices);
        let mut seen = BTreeSet::new();
        let mut seq = vec![0u32; n_vertices - 2];
        'outer: loop {
            let parent = scratch.decode_to_parent_map(&seq);
            assert_eq!(parent.len(), n_vertices - 1, "tree must span");
            let mut edges: Vec<(u32, u32)> = parent
                .iter()
                .map(|(&v, &p)| (v.min(p), v.max(p)))
                .collect();
            edges.sort_unstable();
            assert!(seen.insert(edges), "duplicate tree for {seq:?}");
            let mut pos = 0;
            loop {
                if pos == seq.len() {
                    break 'outer;
                }
                seq[pos] += 1;
                if (seq[pos] as usize) < n_vertices {
                    break;
                }
                seq[pos] = 0;
                pos += 1;
            }
        }
        assert_eq!(seen.len(), 125);
    }

    #[test]
    fn oracle_single_vertex() {
        let params = ModelParams::new(1, 2.0, 1).unwrap();
        let dist = exact_reduced_distribution(&params).unwrap();
        assert_eq!(dist.classes.len(), 1);
        let class = &dist.classes["((1));u=[0]"];
        assert_eq!(class.probability, BigRational::one());
    }

    #[test]
    fn oracle_n3_l2_hand_table() {
        // 16 spanning trees of K_3 plus root at kappa = 1
        let params = ModelParams::new(3, 1.0, 2).unwrap();
        let dist = exact_reduced_distribution(&params).unwrap();
        let frac = |num: i64, den: i64| {
            BigRational::new(BigInt::from(num), BigInt::from(den))
        };
        let expected: Vec<(&str, BigRational)> = vec![
            ("((1))|((2));u=[0,0]", frac(3, 16)),
            ("((1))|((2));u=[0,1]", frac(1, 16)),
            ("((1))|((2));u=[1,0]", frac(1, 16)),
            ("((1,2));u=[0,0,0]", frac(1, 16)),
            ("(1(2));u=[0,0]", frac(3, 16)),
            ("(2(1));u=[0,0]", frac(3, 16)),
            ("(1(2));u=[0,1]", frac(1, 16)),
            ("(1(2));u=[1,0]", frac(1, 16)),
            ("(2(1));u=[0,1]", frac(1, 16)),
            ("(2(1));u=[1,0]", frac(1, 16)),
        ];
        assert_eq!(dist.classes.len(), expected.len());
        for (key, prob) in expected {
            assert_eq!(
                dist.classes[key].probability, prob,
                "class {key} has wrong mass"
            );
        }
        assert_eq!(dist.total_mass(), BigRational::one());
    }

    #[test]
    fn oracle_matches_class_probability_formula() {
        for &n in &[3u32, 4, 5] {
            for &kappa in &[0.5, 1.0, 2.0] {
                for l in 1..=3u32.min(n) {
                    let params = ModelParams::new(n, kappa, l).unwrap();
                    let dist = exact_reduced_distribution(&params).unwrap();
                    assert_eq!(dist.total_mass(), BigRational::one());
                    for (key, class) in &dist.classes {
                        let formula = log_class_probability(n, kappa, l, class.r, class.d).exp();
                        let exact = class.probability.to_f64().unwrap();
                        assert!(
                            (formula - exact).abs() <= 1e-12,
                            "n={n} kappa={kappa} l={l} key={key}: {formula} vs {exact}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn embedded_probability_hand_values() {
        assert!((embedded_tree_probability(3, 1.0, 1, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(
            (embedded_tree_probability(3, 1.0, 3, 1).unwrap() - 1.0 / 16.0).abs() < 1e-15
        );
        assert!(
            (embedded_tree_probability(3, 1.0, 2, 2).unwrap() - 3.0 / 16.0).abs() < 1e-15
        );
        assert!(embedded_tree_probability(3, 1.0, 0, 1).is_err());
        assert!(embedded_tree_probability(3, 1.0, 2, 3).is_err());
    }

    #[test]
    fn embedded_probability_decreasing_in_d() {
        for &n in &[4u32, 8, 16] {
            for &kappa in &[1.0, 2.0] {
                for r in 1..=2 {
                    let mut prev = f64::INFINITY;
                    for d in r..=n {
                        let p = embedded_tree_probability(n, kappa, d, r).unwrap();
                        assert!(p < prev, "not decreasing at n={n} kappa={kappa} d={d}");
                        prev = p;
                    }
                }
            }
        }
    }

    #[test]
    fn class_probability_zero_when_no_labels_left() {
        // cherry needs one inner vertex; with n = l = 2 none exist
        let parent: HashMap<u32, u32> =
            [(1u32, 9u32), (2, 9), (9, ROOT)].into_iter().collect();
        let obs = reduce_parent_map(&parent, 2).unwrap();
        let params = ModelParams::new(2, 1.0, 2).unwrap();
        assert_eq!(class_probability(&params, &obs).unwrap(), 0.0);
    }

    #[test]
    fn oracle_rejects_large_n() {
        let params = ModelParams::new(9, 1.0, 2).unwrap();
        assert!(exact_reduced_distribution(&params).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0, 1.0, 1).is_err());
        assert!(ModelParams::new(3, 0.0, 1).is_err());
        assert!(ModelParams::new(3, 1.0, 4).is_err());
        let p = ModelParams::critical(10_000, 2.0, 1).unwrap();
        assert!((p.kappa - 200.0).abs() < 1e-12);
    }
}
