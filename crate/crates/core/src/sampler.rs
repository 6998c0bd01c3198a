//! Wilson's algorithm with killing on the complete graph.
//!
//! Each walk jumps to the root with probability `kappa / (kappa + n - 1)`
//! and otherwise moves to a uniformly chosen other vertex. Loop erasure
//! uses last-exit recording: the walk overwrites a `next` pointer per
//! vertex and the erased path is recovered by following the pointers.
//! Running one walk from each marked vertex (against the growing tree of
//! used vertices) produces exactly the minimal subtree connecting the
//! marked set to the root.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyck::{contour_encode, DyckPath};
use crate::error::{Error, Result};
use crate::exact::ModelParams;
use crate::reduced::{reduce_parent_map, ReducedObservation, ROOT};

/// Reproducible stream: identical `(seed, stream_id)` yields identical
/// samples regardless of scheduling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Parent map of a sampled subtree rooted at [`ROOT`], containing the
/// marked set `{1..l}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedSpanningSubtree {
    pub parent: HashMap<u32, u32>,
    pub l: u32,
}

impl RootedSpanningSubtree {
    /// Observation class of the subtree.
    pub fn reduce(&self) -> Result<ReducedObservation> {
        reduce_parent_map(&self.parent, self.l)
    }

    /// Contour (Dyck-path) encoding in canonical plane order.
    pub fn contour(&self) -> Result<DyckPath> {
        contour_encode(&self.parent, self.l)
    }

    /// Graph distance from `v` to the root, if `v` is in the subtree.
    pub fn distance_to_root(&self, v: u32) -> Option<u32> {
        let mut dist = 0;
        let mut cur = v;
        while cur != ROOT {
            cur = *self.parent.get(&cur)?;
            dist += 1;
        }
        Some(dist)
    }

    pub fn edge_count(&self) -> usize {
        self.parent.len()
    }
}

/// Per-walk step budget; exceeding it aborts the sample with a
/// diagnostic error instead of spinning forever.
pub const STEP_BUDGET: u64 = 1_000_000_000;

/// Reusable sampler state for one parameter set.
pub struct WilsonSampler {
    params: ModelParams,
    kill_probability: f64,
    next: Vec<u32>,
    mark: Vec<u32>,
    epoch: u32,
    /// Total raw walk steps taken since construction.
    pub total_steps: u64,
}

impl WilsonSampler {
    pub fn new(params: ModelParams) -> Self {
        let n = params.n as usize;
        WilsonSampler {
            params,
            kill_probability: params.kappa / (params.kappa + (params.n - 1) as f64),
            next: vec![0; n + 1],
            mark: vec![0; n + 1],
            epoch: 0,
            total_steps: 0,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Clears the occupied set down to `{ROOT}`.
    pub fn reset(&mut self) {
        if self.epoch == u32::MAX {
            self.mark.fill(0);
            self.epoch = 0;
        }
        self.epoch += 1;
        self.mark[ROOT as usize] = self.epoch;
    }

    pub fn occupy(&mut self, v: u32) {
        self.mark[v as usize] = self.epoch;
    }

    pub fn is_occupied(&self, v: u32) -> bool {
        self.mark[v as usize] == self.epoch
    }

    /// Runs a killed random walk from `start` until it hits the occupied
    /// set, and returns the loop-erased path (`start` first, absorbing
    /// vertex last). Does not modify the occupied set.
    pub fn loop_erased_walk<R: Rng>(&mut self, start: u32, rng: &mut R) -> Result<Vec<u32>> {
        let n = self.params.n;
        let mut steps = 0u64;
        let mut current = start;
        while !self.is_occupied(current) {
            if steps >= STEP_BUDGET {
                self.total_steps += steps;
                return Err(Error::StepBudgetExhausted(steps));
            }
            steps += 1;
            let target = if n == 1 || rng.random::<f64>() < self.kill_probability {
                ROOT
            } else {
                // uniform over {1..n} minus the current vertex
                let mut v = rng.random_range(1..n);
                if v >= current {
                    v += 1;
                }
                v
            };
            self.next[current as usize] = target;
            current = target;
        }
        self.total_steps += steps;

        let mut path = vec![start];
        let mut v = start;
        while !self.is_occupied(v) {
            v = self.next[v as usize];
            path.push(v);
        }
        Ok(path)
    }

    /// Samples the minimal subtree connecting `{1..l}` to the root by
    /// running one loop-erased walk per marked vertex.
    pub fn sample_reduced_subtree<R: Rng>(&mut self, rng: &mut R) -> Result<RootedSpanningSubtree> {
        self.reset();
        let mut parent = HashMap::new();
        for start in 1..=self.params.l {
            if self.is_occupied(start) {
                continue;
            }
            let path = self.loop_erased_walk(start, rng)?;
            for pair in path.windows(2) {
                parent.insert(pair[0], pair[1]);
            }
            for &v in &path[..path.len() - 1] {
                self.occupy(v);
            }
        }
        Ok(RootedSpanningSubtree {
            parent,
            l: self.params.l,
        })
    }
}
