//! Python bindings: counting, exact laws, limit quantities, and the two
//! samplers, exposed as a `forest_lab_py` extension module.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand_chacha::ChaCha8Rng;

use forest_lab::combinatorics;
use forest_lab::exact;
use forest_lab::gibbs;
use forest_lab::limits;
use forest_lab::sampler::{RngStream, WilsonSampler};

fn py_err(err: forest_lab::Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

#[pyfunction]
fn count_binary_shapes(l: u32) -> PyResult<u128> {
    combinatorics::count_binary_shapes(l).map_err(py_err)
}

#[pyfunction]
fn count_bouquets(l: u32, r: u32) -> PyResult<u128> {
    combinatorics::count_bouquets(l, r).map_err(py_err)
}

#[pyfunction]
fn enumerate_binary_shapes(l: u32) -> PyResult<Vec<String>> {
    let labels: Vec<u32> = (1..=l).collect();
    Ok(combinatorics::enumerate_binary_shapes(&labels)
        .map_err(py_err)?
        .iter()
        .map(|s| s.canonical_string())
        .collect())
}

#[pyfunction]
fn enumerate_bouquets(l: u32, r: u32) -> PyResult<Vec<String>> {
    let labels: Vec<u32> = (1..=l).collect();
    Ok(combinatorics::enumerate_bouquets(&labels, r)
        .map_err(py_err)?
        .iter()
        .map(|b| b.canonical_string())
        .collect())
}

#[pyfunction]
fn green_submatrix_det(n: u32, kappa: f64, d: u32) -> PyResult<f64> {
    exact::green_submatrix_det(n, kappa, d).map_err(py_err)
}

#[pyfunction]
fn embedded_tree_probability(n: u32, kappa: f64, d: u32, r: u32) -> PyResult<f64> {
    exact::embedded_tree_probability(n, kappa, d, r).map_err(py_err)
}

/// Exact law of the observation class by exhaustive enumeration
/// (`n <= 8`), as a `{class_key: probability}` dict.
#[pyfunction]
fn exact_reduced_distribution(n: u32, kappa: f64, l: u32) -> PyResult<BTreeMap<String, f64>> {
    let params = exact::ModelParams::new(n, kappa, l).map_err(py_err)?;
    Ok(exact::exact_reduced_distribution(&params)
        .map_err(py_err)?
        .to_f64_map())
}

#[pyfunction]
fn moment_integral(n: u32, c: f64) -> PyResult<f64> {
    limits::moment_integral(n, c).map_err(py_err)
}

#[pyfunction]
fn bouquet_limit_probability(l: u32, r: u32, c: f64) -> PyResult<f64> {
    limits::bouquet_limit_probability(l, r, c).map_err(py_err)
}

#[pyfunction]
fn normalization_sum(l: u32, c: f64) -> PyResult<f64> {
    limits::normalization_sum(l, c).map_err(py_err)
}

#[pyfunction]
fn block_count_distribution(l: u32, c: f64) -> PyResult<Vec<f64>> {
    limits::block_count_distribution(l, c).map_err(py_err)
}

#[pyfunction]
fn fixed_regime_density(t: Vec<f64>) -> f64 {
    limits::fixed_regime_density(&t)
}

#[pyfunction]
fn critical_regime_density(t: Vec<f64>, r: u32, c: f64) -> PyResult<f64> {
    limits::critical_regime_density(&t, r, c).map_err(py_err)
}

#[pyfunction]
fn distance_tail(t: f64, c: f64) -> PyResult<f64> {
    limits::distance_tail(t, c).map_err(py_err)
}

#[pyfunction]
fn scaled_class_pmf(l: u32, r: u32, t: Vec<f64>, n: u32, kappa: f64) -> PyResult<f64> {
    limits::scaled_class_pmf(l, r, &t, n, kappa).map_err(py_err)
}

/// Exact block weight as a `(numerator, denominator)` pair.
#[pyfunction]
fn block_weight(m: u32) -> PyResult<(u128, u128)> {
    let w = gibbs::block_weight(m).map_err(py_err)?;
    Ok((*w.numer(), *w.denom()))
}

#[pyfunction]
fn gibbs_coefficient(l: u32, r: u32, c: f64) -> PyResult<f64> {
    gibbs::gibbs_coefficient(l, r, c).map_err(py_err)
}

#[pyfunction]
fn eppf(sizes: Vec<u32>, c: f64) -> PyResult<f64> {
    gibbs::eppf(&sizes, c).map_err(py_err)
}

/// Both sides of the Poisson-Dirichlet mixture identity:
/// `(closed_form, integrated)`.
#[pyfunction]
fn poisson_dirichlet_mixture(l: u32, r: u32, beta: f64) -> PyResult<(f64, f64)> {
    let check = gibbs::poisson_dirichlet_mixture(l, r, beta).map_err(py_err)?;
    Ok((check.closed_form, check.integrated))
}

/// Wilson sampler with killing over one reproducible stream.
#[pyclass]
struct Sampler {
    sampler: WilsonSampler,
    rng: ChaCha8Rng,
}

#[pymethods]
impl Sampler {
    #[new]
    #[pyo3(signature = (n, kappa, l, seed = 0, stream = 0))]
    fn new(n: u32, kappa: f64, l: u32, seed: u64, stream: u64) -> PyResult<Self> {
        let params = exact::ModelParams::new(n, kappa, l).map_err(py_err)?;
        Ok(Sampler {
            sampler: WilsonSampler::new(params),
            rng: RngStream::new(seed, stream).rng(),
        })
    }

    /// One sample of the reduced subtree, as a dict with the class key,
    /// classification, component count, embedded size, extension vector,
    /// contour steps and the induced partition.
    fn sample<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let tree = self
            .sampler
            .sample_reduced_subtree(&mut self.rng)
            .map_err(py_err)?;
        let obs = tree.reduce().map_err(py_err)?;
        let path = tree.contour().map_err(py_err)?;
        let out = PyDict::new(py);
        out.set_item("class_key", obs.class_key())?;
        out.set_item("shape_key", obs.shape_key())?;
        out.set_item("classification", obs.classification().as_str())?;
        out.set_item("r", obs.component_count())?;
        out.set_item("d", obs.embedded_vertex_count())?;
        out.set_item("u", obs.extension.clone())?;
        out.set_item("dyck_steps", path.steps.clone())?;
        out.set_item(
            "partition",
            obs.root_partition().map_err(py_err)?.canonical_string(),
        )?;
        Ok(out)
    }

    /// Draws `reps` samples and returns `{class_key: count}`.
    fn sample_class_counts(&mut self, reps: u64) -> PyResult<BTreeMap<String, u64>> {
        let mut counts = BTreeMap::new();
        for _ in 0..reps {
            let obs = self
                .sampler
                .sample_reduced_subtree(&mut self.rng)
                .map_err(py_err)?
                .reduce()
                .map_err(py_err)?;
            *counts.entry(obs.class_key()).or_insert(0) += 1;
        }
        Ok(counts)
    }

    fn total_steps(&self) -> u64 {
        self.sampler.total_steps
    }
}

/// Sequential sampler for the limiting Gibbs(1/2) partition.
#[pyclass]
struct GibbsPartitionSampler {
    inner: gibbs::GibbsSampler,
    rng: ChaCha8Rng,
    l: u32,
}

#[pymethods]
impl GibbsPartitionSampler {
    #[new]
    #[pyo3(signature = (l, c, seed = 0, stream = 0))]
    fn new(l: u32, c: f64, seed: u64, stream: u64) -> PyResult<Self> {
        Ok(GibbsPartitionSampler {
            inner: gibbs::GibbsSampler::new(l, c).map_err(py_err)?,
            rng: RngStream::new(seed, stream).rng(),
            l,
        })
    }

    /// One partition with its per-block shapes:
    /// `(partition_string, [shape_string, ...])`.
    fn sample(&mut self) -> PyResult<(String, Vec<String>)> {
        let (partition, shapes) = self.inner.sample(self.l, &mut self.rng).map_err(py_err)?;
        Ok((
            partition.canonical_string(),
            shapes.iter().map(|s| s.canonical_string()).collect(),
        ))
    }

    /// Draws `reps` partitions and returns `{partition_string: count}`.
    fn sample_partition_counts(&mut self, reps: u64) -> PyResult<BTreeMap<String, u64>> {
        let mut counts = BTreeMap::new();
        for _ in 0..reps {
            let (partition, _) = self.inner.sample(self.l, &mut self.rng).map_err(py_err)?;
            *counts.entry(partition.canonical_string()).or_insert(0) += 1;
        }
        Ok(counts)
    }
}

#[pymodule]
fn forest_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(count_binary_shapes, m)?)?;
    m.add_function(wrap_pyfunction!(count_bouquets, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_binary_shapes, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_bouquets, m)?)?;
    m.add_function(wrap_pyfunction!(green_submatrix_det, m)?)?;
    m.add_function(wrap_pyfunction!(embedded_tree_probability, m)?)?;
    m.add_function(wrap_pyfunction!(exact_reduced_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(moment_integral, m)?)?;
    m.add_function(wrap_pyfunction!(bouquet_limit_probability, m)?)?;
    m.add_function(wrap_pyfunction!(normalization_sum, m)?)?;
    m.add_function(wrap_pyfunction!(block_count_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_regime_density, m)?)?;
    m.add_function(wrap_pyfunction!(critical_regime_density, m)?)?;
    m.add_function(wrap_pyfunction!(distance_tail, m)?)?;
    m.add_function(wrap_pyfunction!(scaled_class_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(block_weight, m)?)?;
    m.add_function(wrap_pyfunction!(gibbs_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(eppf, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_dirichlet_mixture, m)?)?;
    m.add_class::<Sampler>()?;
    m.add_class::<GibbsPartitionSampler>()?;
    Ok(())
}
