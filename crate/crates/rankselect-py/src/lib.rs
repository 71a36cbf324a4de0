//! Python bindings: `BitVector`, `PoppyIndex`, `ClarkSelectIndex`, and the
//! machine-word select primitives.
//!
//! Indexes hold a reference to the Python-side vector they were built
//! over; as on the Rust side, the vector must not be mutated after an
//! index is built.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use rankselect::word_select;
use rankselect::{BitVector, ClarkSelectIndex, Density, Error, PoppyIndex, WordSelectBackend};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_backend(name: &str) -> PyResult<WordSelectBackend> {
    name.parse().map_err(to_py_err)
}

/// A packed bit vector with naive rank/select and a bit-exact file format.
#[pyclass(name = "BitVector", module = "rankselect_py")]
struct PyBitVector {
    inner: BitVector,
}

#[pymethods]
impl PyBitVector {
    /// All-zero vector of `bits` bits.
    #[new]
    fn new(bits: u64) -> Self {
        PyBitVector {
            inner: BitVector::new(bits),
        }
    }

    /// Each bit is one with probability `density` (a fraction in [0, 1]),
    /// drawn from the pinned SplitMix64 stream: identical arguments give
    /// bit-identical vectors everywhere.
    #[staticmethod]
    fn from_random(bits: u64, density: f64, seed: u64) -> PyResult<Self> {
        let density = Density::new(density).map_err(to_py_err)?;
        Ok(PyBitVector {
            inner: BitVector::from_random(bits, density, seed),
        })
    }

    /// Build from a string of '0'/'1', character i becoming bit i.
    #[staticmethod]
    fn from_bit_str(s: &str) -> PyResult<Self> {
        Ok(PyBitVector {
            inner: BitVector::from_bit_str(s).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(PyBitVector {
            inner: BitVector::load(BufReader::new(file)).map_err(to_py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let file = File::create(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        self.inner.save(BufWriter::new(file)).map_err(to_py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len() as usize
    }

    fn count_ones(&self) -> u64 {
        self.inner.count_ones()
    }

    fn get(&self, i: u64) -> PyResult<bool> {
        self.inner.get(i).map_err(to_py_err)
    }

    /// Set bit `i`. Only valid before any index is built over the vector.
    fn set(&mut self, i: u64, bit: bool) -> PyResult<()> {
        self.inner.set(i, bit).map_err(to_py_err)
    }

    /// Ones in the inclusive prefix [0, j], by direct scan.
    fn rank_naive(&self, j: u64) -> PyResult<u64> {
        self.inner.rank_naive(j).map_err(to_py_err)
    }

    /// Position of the r-th one (r is 1-based), by direct scan.
    fn select_naive(&self, r: u64) -> PyResult<u64> {
        self.inner.select_naive(r).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "BitVector(bits={}, ones={})",
            self.inner.len(),
            self.inner.count_ones()
        )
    }
}

/// Combined-sampling rank/select index over a `BitVector`.
#[pyclass(name = "PoppyIndex", module = "rankselect_py")]
struct PyPoppyIndex {
    idx: PoppyIndex,
    bv: Py<PyBitVector>,
}

#[pymethods]
impl PyPoppyIndex {
    #[new]
    #[pyo3(signature = (bv, sampling = 8192, backend = "auto"))]
    fn new(py: Python<'_>, bv: Py<PyBitVector>, sampling: u64, backend: &str) -> PyResult<Self> {
        let backend = parse_backend(backend)?;
        if sampling == 0 || !sampling.is_multiple_of(64) {
            return Err(PyValueError::new_err(
                "sampling must be a positive multiple of 64",
            ));
        }
        let idx = PoppyIndex::build(&bv.borrow(py).inner, sampling, backend);
        Ok(PyPoppyIndex { idx, bv })
    }

    /// Ones in the inclusive prefix [0, j].
    fn rank(&self, py: Python<'_>, j: u64) -> PyResult<u64> {
        self.idx
            .rank(&self.bv.borrow(py).inner, j)
            .map_err(to_py_err)
    }

    /// Position of the r-th one (1-based).
    fn select(&self, py: Python<'_>, r: u64) -> PyResult<u64> {
        self.idx
            .select(&self.bv.borrow(py).inner, r)
            .map_err(to_py_err)
    }

    /// Recheck every structural invariant against the vector.
    fn verify(&self, py: Python<'_>) -> PyResult<()> {
        self.idx
            .verify(&self.bv.borrow(py).inner)
            .map_err(to_py_err)
    }

    fn aux_bytes(&self) -> u64 {
        self.idx.aux_bytes()
    }

    fn sampling_interval(&self) -> u64 {
        self.idx.sampling_interval()
    }

    fn backend(&self) -> &'static str {
        self.idx.backend().name()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let file = File::create(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        self.idx.save(BufWriter::new(file)).map_err(to_py_err)
    }

    /// Load a saved index and attach it to `bv` (the same vector it was
    /// built over).
    #[staticmethod]
    #[pyo3(signature = (path, bv, backend = "auto"))]
    fn load(path: PathBuf, bv: Py<PyBitVector>, backend: &str) -> PyResult<Self> {
        let backend = parse_backend(backend)?;
        let file = File::open(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        let idx = PoppyIndex::load(BufReader::new(file), backend).map_err(to_py_err)?;
        Ok(PyPoppyIndex { idx, bv })
    }

    fn __repr__(&self) -> String {
        format!(
            "PoppyIndex(bits={}, ones={}, k={}, backend={})",
            self.idx.len(),
            self.idx.count_ones(),
            self.idx.sampling_interval(),
            self.idx.backend()
        )
    }
}

/// Superblock select index (long/short payloads) over a `BitVector`.
#[pyclass(name = "ClarkSelectIndex", module = "rankselect_py")]
struct PyClarkSelectIndex {
    idx: ClarkSelectIndex,
    bv: Py<PyBitVector>,
}

#[pymethods]
impl PyClarkSelectIndex {
    #[new]
    #[pyo3(signature = (bv, backend = "auto"))]
    fn new(py: Python<'_>, bv: Py<PyBitVector>, backend: &str) -> PyResult<Self> {
        let backend = parse_backend(backend)?;
        let idx = ClarkSelectIndex::build(&bv.borrow(py).inner, backend);
        Ok(PyClarkSelectIndex { idx, bv })
    }

    /// Position of the r-th one (1-based).
    fn select(&self, py: Python<'_>, r: u64) -> PyResult<u64> {
        self.idx
            .select(&self.bv.borrow(py).inner, r)
            .map_err(to_py_err)
    }

    /// Returns `(position, used_word_select)`; long-superblock lookups
    /// never invoke a machine-word select.
    fn select_traced(&self, py: Python<'_>, r: u64) -> PyResult<(u64, bool)> {
        self.idx
            .select_traced(&self.bv.borrow(py).inner, r)
            .map_err(to_py_err)
    }

    fn verify(&self, py: Python<'_>) -> PyResult<()> {
        self.idx
            .verify(&self.bv.borrow(py).inner)
            .map_err(to_py_err)
    }

    fn threshold(&self) -> u64 {
        self.idx.threshold()
    }

    fn superblocks(&self) -> usize {
        self.idx.superblocks()
    }

    fn is_long(&self, superblock: usize) -> PyResult<bool> {
        if superblock >= self.idx.superblocks() {
            return Err(PyValueError::new_err("superblock out of range"));
        }
        Ok(self.idx.is_long(superblock))
    }

    fn aux_bytes(&self) -> u64 {
        self.idx.aux_bytes()
    }

    fn backend(&self) -> &'static str {
        self.idx.backend().name()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let file = File::create(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        self.idx.save(BufWriter::new(file)).map_err(to_py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (path, bv, backend = "auto"))]
    fn load(path: PathBuf, bv: Py<PyBitVector>, backend: &str) -> PyResult<Self> {
        let backend = parse_backend(backend)?;
        let file = File::open(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        let idx = ClarkSelectIndex::load(BufReader::new(file), backend).map_err(to_py_err)?;
        Ok(PyClarkSelectIndex { idx, bv })
    }

    fn __repr__(&self) -> String {
        format!(
            "ClarkSelectIndex(bits={}, ones={}, superblocks={}, backend={})",
            self.idx.len(),
            self.idx.count_ones(),
            self.idx.superblocks(),
            self.idx.backend()
        )
    }
}

/// Number of set bits in a 64-bit word.
#[pyfunction]
fn popcount64(x: u64) -> u32 {
    word_select::popcount64(x)
}

/// Software bit deposit, bit-exact with the pdep instruction.
#[pyfunction]
fn pdep_soft(v: u64, x: u64) -> u64 {
    word_select::pdep_soft(v, x)
}

/// Software trailing-zero count; 64 for input 0.
#[pyfunction]
fn tzcnt_soft(x: u64) -> u32 {
    word_select::tzcnt_soft(x)
}

/// Position of the (j+1)-th set bit of `x` (j 0-based) through the named
/// backend; 64 when `x` has no such bit.
#[pyfunction]
#[pyo3(signature = (x, j, backend = "auto"))]
fn select_word(x: u64, j: u32, backend: &str) -> PyResult<u32> {
    Ok(word_select::select_word(parse_backend(backend)?, x, j))
}

/// CPU capabilities relevant to word select, detected once per process.
#[pyfunction]
fn detect_features(py: Python<'_>) -> PyResult<Py<pyo3::types::PyDict>> {
    use pyo3::types::PyDict;
    let f = word_select::detect_features();
    let dict = PyDict::new(py);
    dict.set_item("bmi2", f.has_bmi2)?;
    dict.set_item("popcnt", f.has_popcnt)?;
    dict.set_item("tzcnt", f.has_tzcnt)?;
    Ok(dict.into())
}

/// The concrete backend a name resolves to on this machine.
#[pyfunction]
#[pyo3(signature = (backend = "auto"))]
fn resolve_backend(backend: &str) -> PyResult<&'static str> {
    Ok(parse_backend(backend)?.resolve().name())
}

#[pymodule]
fn rankselect_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBitVector>()?;
    m.add_class::<PyPoppyIndex>()?;
    m.add_class::<PyClarkSelectIndex>()?;
    m.add_function(wrap_pyfunction!(popcount64, m)?)?;
    m.add_function(wrap_pyfunction!(pdep_soft, m)?)?;
    m.add_function(wrap_pyfunction!(tzcnt_soft, m)?)?;
    m.add_function(wrap_pyfunction!(select_word, m)?)?;
    m.add_function(wrap_pyfunction!(detect_features, m)?)?;
    m.add_function(wrap_pyfunction!(resolve_backend, m)?)?;
    m.add(
        "BACKENDS",
        vec!["ptselect", "broadword", "bytescan", "oracle", "auto"],
    )?;
    Ok(())
}
