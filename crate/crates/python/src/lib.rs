//! Python bindings: build and preprocess networks, run cascades, compute
//! exposure matrices and inequality statistics.

use std::collections::{BTreeMap, BTreeSet};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use supplyshock::cascade::{propagate, Direction};
use supplyshock::exposure;
use supplyshock::graph::{self, BuildReport, Partition, PreprocessConfig, SupplyNetwork};
use supplyshock::io::{matrix_to_csv, matrix_to_json};
use supplyshock::stats;
use supplyshock::synth::{self, GeneratorConfig};
use supplyshock::{Error, ExposureMatrix};

fn py_err(e: Error) -> PyErr {
    if e.is_input_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn direction(label: &str) -> PyResult<Direction> {
    Direction::parse(label).ok_or_else(|| {
        PyValueError::new_err(format!("direction must be `down` or `up`, got `{label}`"))
    })
}

/// Region × region matrix; rows are origin regions.
#[pyclass(name = "Matrix", frozen)]
struct PyMatrix {
    inner: ExposureMatrix,
}

#[pymethods]
impl PyMatrix {
    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().name()
    }

    #[getter]
    fn direction(&self) -> Option<&'static str> {
        self.inner.direction().map(Direction::label)
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    /// Entries as a list of rows.
    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        (0..self.inner.dim())
            .map(|r| self.inner.row(r).to_vec())
            .collect()
    }

    fn get(&self, origin: &str, affected: &str) -> PyResult<f64> {
        self.inner.get_by_label(origin, affected).ok_or_else(|| {
            PyValueError::new_err(format!("unknown region pair ({origin}, {affected})"))
        })
    }

    /// Column sums `E^d` (expected exposure matrices only).
    fn column_sums(&self) -> PyResult<Vec<f64>> {
        let profile = exposure::total_exposure(&self.inner).map_err(py_err)?;
        let d = self.inner.direction().unwrap_or(Direction::Downstream);
        Ok(profile.get(d).map(<[f64]>::to_vec).unwrap_or_default())
    }

    fn to_csv(&self) -> PyResult<String> {
        matrix_to_csv(&self.inner).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        matrix_to_json(&self.inner).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Matrix(kind={}, regions={})",
            self.inner.kind().name(),
            self.inner.dim()
        )
    }
}

/// Supply network with its firm → region partition.
#[pyclass(name = "Network", frozen)]
struct PyNetwork {
    network: SupplyNetwork,
    partition: Partition,
    report: BuildReport,
}

impl PyNetwork {
    fn from_built(b: graph::Built) -> Self {
        PyNetwork {
            network: b.network,
            partition: b.partition,
            report: b.report,
        }
    }

    fn firm_index(&self, id: &str) -> PyResult<usize> {
        self.network
            .index_of(id)
            .ok_or_else(|| PyValueError::new_err(format!("unknown firm `{id}`")))
    }

    fn wrap(&self, m: ExposureMatrix) -> PyMatrix {
        PyMatrix { inner: m }
    }
}

#[pymethods]
impl PyNetwork {
    /// Builds from `(supplier, customer)` id pairs and a firm → region dict.
    /// Self-loops, duplicate edges and firms without edges are dropped.
    #[new]
    fn new(edges: Vec<(String, String)>, firms: BTreeMap<String, String>) -> PyResult<Self> {
        graph::build_network(&edges, &firms)
            .map(PyNetwork::from_built)
            .map_err(py_err)
    }

    #[getter]
    fn firm_ids(&self) -> Vec<String> {
        self.network.firm_ids().to_vec()
    }

    #[getter]
    fn regions(&self) -> Vec<String> {
        self.partition.regions().to_vec()
    }

    #[getter]
    fn n_firms(&self) -> usize {
        self.network.len()
    }

    #[getter]
    fn n_links(&self) -> usize {
        self.network.edge_count()
    }

    /// Rows dropped while building: input edges, self-loops, duplicates and
    /// isolated firms.
    #[getter]
    fn build_report(&self) -> BTreeMap<&'static str, usize> {
        BTreeMap::from([
            ("input_edges", self.report.input_edges),
            ("self_loops", self.report.self_loops),
            ("duplicate_edges", self.report.duplicate_edges),
            ("isolated_firms", self.report.isolated_firms),
        ])
    }

    fn region_of(&self, firm: &str) -> PyResult<String> {
        Ok(self
            .partition
            .region_label(self.firm_index(firm)?)
            .to_string())
    }

    /// `(supplier, customer)` pairs in index order.
    fn edges(&self) -> Vec<(String, String)> {
        self.network
            .edges()
            .map(|(s, t)| {
                (
                    self.network.firm_id(s).to_string(),
                    self.network.firm_id(t).to_string(),
                )
            })
            .collect()
    }

    fn degree(&self, firm: &str) -> PyResult<usize> {
        Ok(self.network.degree(self.firm_index(firm)?))
    }

    fn reverse(&self) -> PyNetwork {
        PyNetwork {
            network: self.network.reverse(),
            partition: self.partition.clone(),
            report: self.report,
        }
    }

    /// Drops excluded regions, regions with at most `min_firms` firms and
    /// firms left without links, until nothing changes.
    #[pyo3(signature = (min_firms = 30, exclude = Vec::new()))]
    fn preprocess(&self, min_firms: usize, exclude: Vec<String>) -> PyResult<PyNetwork> {
        let config = PreprocessConfig {
            min_firms,
            excluded_regions: exclude.into_iter().collect::<BTreeSet<_>>(),
        };
        let pre = graph::preprocess(&self.network, &self.partition, &config).map_err(py_err)?;
        Ok(PyNetwork {
            network: pre.network,
            partition: pre.partition,
            report: self.report,
        })
    }

    /// Distress after a joint failure of `seeds`: `(steps, {firm: h})` for
    /// every firm with positive distress.
    #[pyo3(signature = (seeds, direction = "down"))]
    fn propagate(
        &self,
        seeds: Vec<String>,
        direction: &str,
    ) -> PyResult<(usize, BTreeMap<String, f64>)> {
        let dir = self::direction(direction)?;
        let idx = seeds
            .iter()
            .map(|s| self.firm_index(s))
            .collect::<PyResult<Vec<_>>>()?;
        let row = propagate(&self.network, &idx, dir).map_err(py_err)?;
        let h = row
            .distress()
            .iter()
            .map(|&(j, h)| (self.network.firm_id(j as usize).to_string(), h))
            .collect();
        Ok((row.steps, h))
    }

    /// Degree-weighted share of the network lost when `firm` fails.
    #[pyo3(signature = (firm, direction = "down"))]
    fn debt_rank(&self, firm: &str, direction: &str) -> PyResult<f64> {
        let dir = self::direction(direction)?;
        let sizes = self.network.degree_sizes();
        supplyshock::debt_rank(&self.network, self.firm_index(firm)?, dir, &sizes).map_err(py_err)
    }

    /// Share of every region lost when `firm` fails (`E_i^c`), by region.
    #[pyo3(signature = (firm, direction = "down"))]
    fn firm_exposure(&self, firm: &str, direction: &str) -> PyResult<BTreeMap<String, f64>> {
        let dir = self::direction(direction)?;
        let row = propagate(&self.network, &[self.firm_index(firm)?], dir).map_err(py_err)?;
        let e = exposure::firm_region_exposure(&row, &self.partition, &self.network.degree_sizes())
            .map_err(py_err)?;
        Ok(self.partition.regions().iter().cloned().zip(e).collect())
    }

    /// Expected exposure matrix `E^cd`.
    #[pyo3(signature = (direction = "down", workers = 0))]
    fn exposure(&self, py: Python<'_>, direction: &str, workers: usize) -> PyResult<PyMatrix> {
        let dir = self::direction(direction)?;
        let m = py
            .detach(|| {
                exposure::region_region_exposure(&self.network, &self.partition, dir, workers)
            })
            .map_err(py_err)?;
        Ok(self.wrap(m.with_direction(dir)))
    }

    /// Exposed value `V^cd = k^d E^cd` from an expected exposure matrix.
    fn exposed_value(&self, expected: &PyMatrix) -> PyResult<PyMatrix> {
        let k = exposure::region_degrees(&self.network, &self.partition);
        Ok(self.wrap(exposure::exposed_value(&expected.inner, &k).map_err(py_err)?))
    }

    /// Total degree `k^c` per region.
    fn region_degrees(&self) -> BTreeMap<String, f64> {
        let k = exposure::region_degrees(&self.network, &self.partition);
        self.partition.regions().iter().cloned().zip(k).collect()
    }

    fn link_count(&self) -> PyMatrix {
        self.wrap(graph::link_count_matrix(&self.network, &self.partition))
    }

    fn mean_outlinks(&self) -> PyMatrix {
        self.wrap(graph::mean_outlinks(&self.network, &self.partition))
    }

    /// Exposure between groups of regions given a region → group dict.
    #[pyo3(signature = (groups, direction = "down", workers = 0))]
    fn group_exposure(
        &self,
        py: Python<'_>,
        groups: BTreeMap<String, String>,
        direction: &str,
        workers: usize,
    ) -> PyResult<PyMatrix> {
        let dir = self::direction(direction)?;
        let m = py
            .detach(|| {
                exposure::group_exposure(&self.network, &self.partition, &groups, dir, workers)
            })
            .map_err(py_err)?;
        Ok(self.wrap(m.with_direction(dir)))
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(firms={}, links={}, regions={})",
            self.network.len(),
            self.network.edge_count(),
            self.partition.region_count()
        )
    }
}

/// The nine-firm, three-region toy economy.
#[pyfunction]
fn toy_fixture() -> PyNetwork {
    PyNetwork::from_built(synth::toy_fixture())
}

/// Directed block model with per-region firm counts.
#[pyfunction]
#[pyo3(signature = (regions, p_intra, p_inter, seed = 0))]
fn block_model(
    regions: Vec<(String, usize)>,
    p_intra: f64,
    p_inter: f64,
    seed: u64,
) -> PyResult<PyNetwork> {
    let config = GeneratorConfig {
        regions,
        p_intra,
        p_inter,
        pair_p: BTreeMap::new(),
        seed,
    };
    synth::block_model(&config)
        .map(PyNetwork::from_built)
        .map_err(py_err)
}

type LorenzPoints = (Vec<(f64, f64)>, Vec<usize>);
type OlsCoefficients = BTreeMap<String, (f64, f64, f64)>;

/// Lorenz curve points and the order of the inputs along it.
#[pyfunction]
fn lorenz(values: Vec<f64>, weights: Vec<f64>) -> PyResult<LorenzPoints> {
    let c = stats::lorenz(&values, &weights).map_err(py_err)?;
    Ok((c.points, c.order))
}

/// Gini coefficient of `values` with population `weights`.
#[pyfunction]
fn gini(values: Vec<f64>, weights: Vec<f64>) -> PyResult<f64> {
    Ok(stats::gini(
        &stats::lorenz(&values, &weights).map_err(py_err)?,
    ))
}

/// Pearson `(r, two-sided p-value)`.
#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<(f64, f64)> {
    let c = stats::pearson(&x, &y).map_err(py_err)?;
    Ok((c.r, c.p_value))
}

/// `(exponent, prefactor, dropped)` of a least squares fit of `y = a x^b`.
#[pyfunction]
fn loglog_fit(x: Vec<f64>, y: Vec<f64>) -> PyResult<(f64, f64, usize)> {
    let f = stats::loglog_fit(&x, &y).map_err(py_err)?;
    Ok((f.exponent, f.prefactor, f.dropped))
}

/// Least squares with intercept. Returns `{name: (estimate, std_error,
/// p_value)}` and the adjusted R².
#[pyfunction]
fn ols(y: Vec<f64>, covariates: Vec<(String, Vec<f64>)>) -> PyResult<(OlsCoefficients, f64)> {
    let cols: Vec<(&str, &[f64])> = covariates
        .iter()
        .map(|(n, v)| (n.as_str(), v.as_slice()))
        .collect();
    let r = stats::ols_multi(&y, &cols).map_err(py_err)?;
    let coefs = r
        .coefficients
        .iter()
        .map(|c| (c.name.clone(), (c.estimate, c.std_error, c.p_value)))
        .collect();
    Ok((coefs, r.adj_r_squared))
}

/// Region → income group by GDP per capita terciles.
#[pyfunction]
fn income_terciles(gdp_per_capita: BTreeMap<String, f64>) -> PyResult<BTreeMap<String, String>> {
    let regions: Vec<String> = gdp_per_capita.keys().cloned().collect();
    exposure::income_terciles(&regions, &gdp_per_capita).map_err(py_err)
}

#[pymodule]
fn pysupplyshock(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", supplyshock::VERSION)?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyMatrix>()?;
    m.add_function(wrap_pyfunction!(toy_fixture, m)?)?;
    m.add_function(wrap_pyfunction!(block_model, m)?)?;
    m.add_function(wrap_pyfunction!(lorenz, m)?)?;
    m.add_function(wrap_pyfunction!(gini, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(loglog_fit, m)?)?;
    m.add_function(wrap_pyfunction!(ols, m)?)?;
    m.add_function(wrap_pyfunction!(income_terciles, m)?)?;
    Ok(())
}
