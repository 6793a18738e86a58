//! Python bindings: tables, imputation, amputation, scoring, forests and
//! the simulation generators.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::IntoPyObjectExt;

use rfcore::bench::{equicorrelated as equicorrelated_table, simulate_section5};
use rfcore::forest::{
    grow_forest, proximity as forest_proximity, ForestConfig, ForestModel, SplitRule,
};
use rfcore::imputation::{impute as impute_table, Algorithm, ImputeSpec};
use rfcore::metrics::{relative_error, score as score_tables};
use rfcore::missingness::{induce, InducedMask, Mechanism, MissingnessSpec};
use rfcore::table::{dataset_stats, parse_schema, read_csv_from, write_csv_to, MixedTable};

fn err(e: rfcore::Error) -> PyErr {
    match e {
        rfcore::Error::Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Serialize through JSON and hand back plain Python objects.
fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

#[pyclass(name = "Table", module = "rfimpute")]
struct PyTable {
    inner: MixedTable,
}

#[pymethods]
impl PyTable {
    /// Parse CSV text. `schema` holds `name=numeric|factor` lines.
    #[staticmethod]
    #[pyo3(signature = (text, schema=None))]
    fn from_csv(text: &str, schema: Option<&str>) -> PyResult<Self> {
        let schema = schema.map(parse_schema).transpose().map_err(err)?;
        let inner = read_csv_from(text.as_bytes(), schema.as_ref()).map_err(err)?;
        Ok(PyTable { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, schema=None))]
    fn read(path: &str, schema: Option<&str>) -> PyResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv(&text, schema)
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        write_csv_to(&self.inner, &mut buf).map_err(err)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn n_cols(&self) -> usize {
        self.inner.n_cols()
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner
            .columns()
            .iter()
            .map(|c| c.name().to_string())
            .collect()
    }

    fn n_missing(&self) -> usize {
        self.inner.n_missing()
    }

    /// Cell value: float, factor level, or None when missing.
    fn get(&self, py: Python<'_>, row: usize, col: usize) -> PyResult<Py<PyAny>> {
        if row >= self.inner.n_rows() || col >= self.inner.n_cols() {
            return Err(PyValueError::new_err("cell out of range"));
        }
        let c = self.inner.column(col);
        match c.get(row) {
            None => Ok(py.None()),
            Some(_) if !c.is_numeric() => c.level(row).unwrap_or_default().into_py_any(py),
            Some(v) => v.into_py_any(py),
        }
    }

    /// rho, log-information and log-complexity.
    fn stats(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &dataset_stats(&self.inner).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!(
            "Table({} rows x {} cols, {} missing)",
            self.inner.n_rows(),
            self.inner.n_cols(),
            self.inner.n_missing()
        )
    }
}

#[pyclass(name = "Mask", module = "rfimpute")]
struct PyMask {
    inner: InducedMask,
}

#[pymethods]
impl PyMask {
    fn total(&self) -> usize {
        self.inner.total()
    }

    fn get(&self, row: usize, col: usize) -> bool {
        self.inner.get(row, col)
    }

    /// Column-major booleans.
    fn columns(&self) -> Vec<Vec<bool>> {
        self.inner.mask.columns().to_vec()
    }
}

#[pyclass(name = "Forest", module = "rfimpute")]
struct PyForest {
    inner: ForestModel,
}

#[pymethods]
impl PyForest {
    #[getter]
    fn ntree(&self) -> usize {
        self.inner.ntree()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyForest {
            inner: ForestModel::from_json(text).map_err(err)?,
        })
    }

    /// Normalized inbag proximity as a list of rows.
    fn proximity(&self) -> Vec<Vec<f64>> {
        let m = forest_proximity(&self.inner);
        (0..m.n).map(|i| m.normalized_row(i)).collect()
    }
}

fn forest_config(
    ntree: usize,
    mtry: Option<usize>,
    nodesize: usize,
    nsplit: usize,
    seed: u64,
) -> ForestConfig {
    ForestConfig {
        ntree,
        mtry,
        nodesize,
        nsplit,
        seed,
        ..ForestConfig::default()
    }
}

/// Impute every missing cell. `algorithm` is a label such as `otf.5`,
/// `prxR`, `unsv`, `mRF0.25` or `knn`. Returns `(table, trace)`.
#[pyfunction]
#[pyo3(signature = (table, algorithm, ntree=500, mtry=None, nodesize=1, nsplit=10, seed=0))]
fn impute(
    py: Python<'_>,
    table: &PyTable,
    algorithm: &str,
    ntree: usize,
    mtry: Option<usize>,
    nodesize: usize,
    nsplit: usize,
    seed: u64,
) -> PyResult<(PyTable, Py<PyAny>)> {
    let algorithm: Algorithm = algorithm.parse().map_err(err)?;
    let spec = ImputeSpec::new(
        algorithm,
        forest_config(ntree, mtry, nodesize, nsplit, seed),
    );
    let (out, trace) = impute_table(&table.inner, &spec).map_err(err)?;
    Ok((PyTable { inner: out }, to_py(py, &trace)?))
}

/// Make a fraction `gamma` of cells missing under MCAR, MAR or NMAR.
#[pyfunction]
#[pyo3(signature = (table, mechanism, gamma, seed=0))]
fn ampute(table: &PyTable, mechanism: &str, gamma: f64, seed: u64) -> PyResult<(PyTable, PyMask)> {
    let mechanism: Mechanism = mechanism.parse().map_err(err)?;
    let spec = MissingnessSpec {
        mechanism,
        gamma,
        seed,
    };
    let (out, mask) = induce(&table.inner, &spec).map_err(err)?;
    Ok((PyTable { inner: out }, PyMask { inner: mask }))
}

/// Normalized error of `imputed` on the masked cells, with the relative
/// error filled in when a baseline imputation is given.
#[pyfunction]
#[pyo3(signature = (truth, imputed, mask, baseline=None))]
fn score(
    py: Python<'_>,
    truth: &PyTable,
    imputed: &PyTable,
    mask: &PyMask,
    baseline: Option<&PyTable>,
) -> PyResult<Py<PyAny>> {
    let mut s = score_tables(&truth.inner, &imputed.inner, &mask.inner).map_err(err)?;
    if let Some(b) = baseline {
        let base = score_tables(&truth.inner, &b.inner, &mask.inner).map_err(err)?;
        s.e_relative = Some(relative_error(&s, &base).map_err(err)?);
    }
    to_py(py, &s)
}

/// Grow a forest. `rule` is `unsupervised`, `pure_random`, `mia`,
/// `squared_error`, `gini` or `composite`; the last three need `responses`.
#[pyfunction]
#[pyo3(signature = (table, rule="unsupervised", responses=None, ntree=100, mtry=None, nodesize=1, nsplit=10, seed=0))]
#[allow(clippy::too_many_arguments)]
fn grow(
    table: &PyTable,
    rule: &str,
    responses: Option<Vec<String>>,
    ntree: usize,
    mtry: Option<usize>,
    nodesize: usize,
    nsplit: usize,
    seed: u64,
) -> PyResult<PyForest> {
    let mut cols = responses
        .unwrap_or_default()
        .iter()
        .map(|name| {
            table
                .inner
                .column_index(name)
                .ok_or_else(|| PyValueError::new_err(format!("no column `{name}`")))
        })
        .collect::<PyResult<Vec<_>>>()?;
    cols.sort_unstable();
    let split_rule = match rule {
        "unsupervised" => SplitRule::Unsupervised,
        "pure_random" => SplitRule::PureRandom,
        "mia" => SplitRule::Mia,
        "squared_error" => SplitRule::UnivariateSquaredError,
        "gini" => SplitRule::UnivariateGini,
        "composite" => SplitRule::MultivariateComposite(cols.clone()),
        _ => return Err(PyValueError::new_err(format!("unknown rule `{rule}`"))),
    };
    let config = ForestConfig {
        split_rule,
        ..forest_config(ntree, mtry, nodesize, nsplit, seed)
    };
    let model = grow_forest(
        &table.inner,
        &config,
        (!cols.is_empty()).then_some(cols.as_slice()),
    )
    .map_err(err)?;
    Ok(PyForest { inner: model })
}

/// Draw `n` rows from the linear simulation model.
#[pyfunction]
#[pyo3(signature = (n, seed=0))]
fn simulate(n: usize, seed: u64) -> PyResult<PyTable> {
    Ok(PyTable {
        inner: simulate_section5(n, seed).map_err(err)?,
    })
}

/// `n` rows of `p` standard normals with common correlation `r`.
#[pyfunction]
#[pyo3(signature = (n, p, r, seed=0))]
fn equicorrelated(n: usize, p: usize, r: f64, seed: u64) -> PyResult<PyTable> {
    Ok(PyTable {
        inner: equicorrelated_table(n, p, r, seed).map_err(err)?,
    })
}

#[pymodule]
fn rfimpute(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTable>()?;
    m.add_class::<PyMask>()?;
    m.add_class::<PyForest>()?;
    m.add_function(wrap_pyfunction!(impute, m)?)?;
    m.add_function(wrap_pyfunction!(ampute, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(grow, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(equicorrelated, m)?)?;
    Ok(())
}
