//! Python bindings: mesh functions, exact Lorentz and Bourgain-Morrey-Lorentz
//! norms, the operator family, block-norm intervals, and the factorization.

use bmllab::bml::{self, BmlExponents, NormOutcome};
use bmllab::blocks::{self, BlockSpace};
use bmllab::hardy;
use bmllab::lorentz::{self, LorentzExponents};
use bmllab::mesh::{Generator, MeshFunction, Region};
use bmllab::ops;
use bmllab::rat;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: bmllab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn exact(x: f64, what: &str) -> PyResult<rat::Rat> {
    rat::from_f64_exact(x)
        .ok_or_else(|| PyValueError::new_err(format!("{what} = {x} is not an exact dyadic")))
}

fn exps(p: f64, q: f64, t: f64, r: f64) -> PyResult<BmlExponents> {
    BmlExponents::new(p, q, t, r).map_err(err)
}

/// Piecewise-constant function on the dyadic mesh over `[-2^L, 2^L)^n`.
#[pyclass(name = "MeshFunction", from_py_object)]
#[derive(Clone)]
struct PyMeshFunction {
    inner: MeshFunction,
}

#[pymethods]
impl PyMeshFunction {
    #[staticmethod]
    fn zero(n: usize, l: i32, j: i32) -> PyResult<Self> {
        Ok(Self { inner: MeshFunction::zero(n, l, j).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: MeshFunction::from_json(text).map_err(err)? })
    }

    /// Indicator of the box `Π [lo_i, hi_i)` (exact dyadic endpoints).
    #[staticmethod]
    fn indicator(n: usize, l: i32, j: i32, lo: Vec<f64>, hi: Vec<f64>) -> PyResult<Self> {
        let lo: Vec<rat::Rat> =
            lo.iter().map(|x| exact(*x, "lo")).collect::<PyResult<_>>()?;
        let hi: Vec<rat::Rat> =
            hi.iter().map(|x| exact(*x, "hi")).collect::<PyResult<_>>()?;
        let region = Region::new(&lo, &hi).map_err(err)?;
        Ok(Self {
            inner: MeshFunction::synthesize(n, l, j, &Generator::Indicator(region))
                .map_err(err)?,
        })
    }

    /// Indicator of the dyadic cube at scale `scale`, index `m`.
    #[staticmethod]
    fn dyadic_indicator(n: usize, l: i32, j: i32, scale: i32, m: Vec<i64>) -> PyResult<Self> {
        let _ = n;
        Ok(Self {
            inner: MeshFunction::synthesize(
                m.len(),
                l,
                j,
                &Generator::DyadicIndicator { j: scale, m },
            )
            .map_err(err)?,
        })
    }

    #[staticmethod]
    fn random_step(n: usize, l: i32, j: i32, seed: u64, lo: f64, hi: f64) -> PyResult<Self> {
        Ok(Self {
            inner: MeshFunction::synthesize(n, l, j, &Generator::RandomStep { seed, lo, hi })
                .map_err(err)?,
        })
    }

    #[staticmethod]
    fn gaussian_bump(
        n: usize,
        l: i32,
        j: i32,
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    ) -> PyResult<Self> {
        Ok(Self {
            inner: MeshFunction::synthesize(
                n,
                l,
                j,
                &Generator::GaussianBump { center, width, amplitude },
            )
            .map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn l(&self) -> i32 {
        self.inner.l_exp()
    }

    #[getter]
    fn j(&self) -> i32 {
        self.inner.j_exp()
    }

    fn integral(&self) -> f64 {
        self.inner.integral()
    }

    fn l1_norm(&self) -> f64 {
        self.inner.l1_norm()
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }

    fn scale(&self, c: f64) -> Self {
        Self { inner: self.inner.scale(c) }
    }

    fn add(&self, other: &PyMeshFunction) -> PyResult<Self> {
        Ok(Self { inner: self.inner.add(&other.inner).map_err(err)? })
    }

    fn sub(&self, other: &PyMeshFunction) -> PyResult<Self> {
        Ok(Self { inner: self.inner.sub(&other.inner).map_err(err)? })
    }

    fn mul(&self, other: &PyMeshFunction) -> PyResult<Self> {
        Ok(Self { inner: self.inner.mul(&other.inner).map_err(err)? })
    }

    /// Translate by mesh-aligned offsets (exact dyadics).
    fn translate(&self, offsets: Vec<f64>) -> PyResult<Self> {
        let y: Vec<rat::Rat> =
            offsets.iter().map(|x| exact(*x, "offset")).collect::<PyResult<_>>()?;
        Ok(Self { inner: bml::translate(&self.inner, &y).map_err(err)? })
    }

    fn dilate_dyadic(&self, m: i32) -> PyResult<Self> {
        Ok(Self { inner: bml::dilate_dyadic(&self.inner, m).map_err(err)? })
    }

    fn refine(&self, extra: u32) -> PyResult<Self> {
        Ok(Self { inner: self.inner.refine(extra).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!(
            "MeshFunction(n={}, L={}, J={}, cells={})",
            self.inner.n(),
            self.inner.l_exp(),
            self.inner.j_exp(),
            self.inner.values().len()
        )
    }
}

/// Exact Lorentz norm `‖f‖_{L^{p,q}}` (`q = inf` for the weak norm).
#[pyfunction]
fn lorentz_norm(f: &PyMeshFunction, p: f64, q: f64) -> PyResult<f64> {
    let e = LorentzExponents::new(p, q).map_err(err)?;
    Ok(lorentz::mesh_lorentz_norm(&f.inner, e, None))
}

/// The distribution-function route to the same norm (formula oracle).
#[pyfunction]
fn lorentz_norm_via_distribution(f: &PyMeshFunction, p: f64, q: f64) -> PyResult<f64> {
    let e = LorentzExponents::new(p, q).map_err(err)?;
    Ok(lorentz::lorentz_norm_via_distribution(&f.inner, e))
}

/// Nontriviality gate: `p < t < r < inf` or `p ≤ t, r = inf`.
#[pyfunction]
fn nontrivial(p: f64, q: f64, t: f64, r: f64) -> PyResult<bool> {
    Ok(exps(p, q, t, r)?.nontrivial())
}

/// Three-zone Bourgain-Morrey-Lorentz norm breakdown, or `ValueError` for
/// trivial exponents (the divergence marker).
#[pyfunction]
fn bml_norm(py: Python<'_>, f: &PyMeshFunction, p: f64, q: f64, t: f64, r: f64) -> PyResult<Py<PyDict>> {
    let e = exps(p, q, t, r)?;
    match bml::bml_norm(&f.inner, &e) {
        NormOutcome::Finite(b) => {
            let d = PyDict::new(py);
            d.set_item("coarse_tail", b.coarse_tail)?;
            d.set_item("middle", b.middle)?;
            d.set_item("fine_tail", b.fine_tail)?;
            d.set_item("total", b.total)?;
            Ok(d.unbind())
        }
        NormOutcome::Divergent => Err(PyRuntimeError::new_err(
            "divergent by nontriviality: the space is trivial for these exponents",
        )),
    }
}

/// The same norm over the thirds-shifted grid with per-axis offsets in {0,1,2}.
#[pyfunction]
fn bml_norm_on_grid(
    f: &PyMeshFunction,
    p: f64,
    q: f64,
    t: f64,
    r: f64,
    offsets: Vec<u8>,
) -> PyResult<f64> {
    let e = exps(p, q, t, r)?;
    bml::bml_norm_on_grid(&f.inner, &e, &offsets)
        .total()
        .ok_or_else(|| PyRuntimeError::new_err("divergent by nontriviality"))
}

/// Hilbert transform sampled at cell centers; returns `(function, exact)`.
#[pyfunction]
fn hilbert_transform(f: &PyMeshFunction) -> PyResult<(PyMeshFunction, bool)> {
    let s = ops::hilbert_transform(&f.inner).map_err(err)?;
    let exact = s.exact();
    Ok((PyMeshFunction { inner: s.values }, exact))
}

/// Pointwise `T f(x)` at an exact dyadic `x` off the value-jump set.
#[pyfunction]
fn hilbert_at(f: &PyMeshFunction, x: f64) -> PyResult<f64> {
    ops::hilbert_at(&f.inner, exact(x, "x")?).map_err(err)
}

/// Exact double quadrature `∫ (Tf) g`.
#[pyfunction]
fn hilbert_pairing(f: &PyMeshFunction, g: &PyMeshFunction) -> PyResult<f64> {
    ops::hilbert_pairing(&f.inner, &g.inner).map_err(err)
}

/// Fractional integral `I_α f` at cell centers (n = 1, exact).
#[pyfunction]
fn fractional_integral(f: &PyMeshFunction, alpha: f64) -> PyResult<(PyMeshFunction, bool)> {
    let s = ops::fractional_integral(&f.inner, alpha).map_err(err)?;
    let exact = s.exact();
    Ok((PyMeshFunction { inner: s.values }, exact))
}

/// Grid maximal function at cell resolution.
#[pyfunction]
fn maximal_dyadic(f: &PyMeshFunction, offsets: Vec<u8>) -> PyResult<PyMeshFunction> {
    Ok(PyMeshFunction { inner: ops::maximal_dyadic(&f.inner, &offsets) })
}

/// Sharp maximal function at cell resolution.
#[pyfunction]
fn sharp_maximal(f: &PyMeshFunction) -> PyResult<PyMeshFunction> {
    Ok(PyMeshFunction { inner: ops::sharp_maximal(&f.inner) })
}

/// Commutator `[b, T] f` at cell centers.
#[pyfunction]
fn commutator(b: &PyMeshFunction, f: &PyMeshFunction) -> PyResult<PyMeshFunction> {
    Ok(PyMeshFunction { inner: ops::commutator(&b.inner, &f.inner).map_err(err)?.values })
}

/// Certified two-sided BMO estimate `(lower, upper)`.
#[pyfunction]
fn bmo_norm(b: &PyMeshFunction) -> (f64, f64) {
    let est = ops::bmo_norm(&b.inner);
    (est.lower, est.upper)
}

/// Certified upper bound of the block-space norm.
#[pyfunction]
fn block_norm_upper(g: &PyMeshFunction, p: f64, q: f64, t: f64, r: f64) -> PyResult<f64> {
    let space = BlockSpace::new(exps(p, q, t, r)?).map_err(err)?;
    blocks::block_norm_upper(&g.inner, space).map_err(err)
}

/// Certified lower bound against the default pairing family.
#[pyfunction]
fn block_norm_lower(
    g: &PyMeshFunction,
    p: f64,
    q: f64,
    t: f64,
    r: f64,
    seed: u64,
    family_size: usize,
) -> PyResult<f64> {
    let space = BlockSpace::new(exps(p, q, t, r)?).map_err(err)?;
    let family = blocks::default_test_family(&g.inner, seed, family_size);
    blocks::block_norm_lower(&g.inner, space, &family).map_err(err)
}

/// Run the weak Hardy factorization on a canonical atom; returns the trace
/// as a JSON string.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn factorize_canonical(
    side: f64,
    m: f64,
    rounds: usize,
    p: f64,
    q: f64,
    t: f64,
    r: f64,
    l: i32,
    j: i32,
) -> PyResult<String> {
    let e = exps(p, q, t, r)?;
    let cube = Region::interval(rat::from_int(0), exact(side, "side")?).map_err(err)?;
    let l_need = hardy::step_required_l(&cube, m).max(l);
    let atom = hardy::canonical_atom(cube, l_need, j).map_err(err)?;
    let state = hardy::factorize(vec![(1.0, atom)], &e, m, rounds).map_err(err)?;
    Ok(state.to_json())
}

/// Measured Hilbert homogeneity constant for `Ω = [a, b) ⊆ Q = [qa, qb)`.
#[pyfunction]
fn homogeneity_constant(qa: f64, qb: f64, a: f64, b: f64, m: f64) -> PyResult<(f64, bool)> {
    let q = Region::interval(exact(qa, "qa")?, exact(qb, "qb")?).map_err(err)?;
    let omega = Region::interval(exact(a, "a")?, exact(b, "b")?).map_err(err)?;
    hardy::homogeneity_constant(&q, &omega, m).map_err(err)
}

/// (offsets, scale, index, corner_lo, corner_hi) of a covering grid cube.
type CoverInfo = (Vec<u8>, i32, Vec<i64>, Vec<f64>, Vec<f64>);

/// Covering construction: the shifted-grid cube containing the box
/// `Π [lo_i, hi_i)` with volume at most `6^n` times the box volume.
#[pyfunction]
fn cover_cube(lo: Vec<f64>, hi: Vec<f64>) -> PyResult<CoverInfo> {
    let lo: Vec<rat::Rat> = lo.iter().map(|x| exact(*x, "lo")).collect::<PyResult<_>>()?;
    let hi: Vec<rat::Rat> = hi.iter().map(|x| exact(*x, "hi")).collect::<PyResult<_>>()?;
    let q = Region::new(&lo, &hi).map_err(err)?;
    let (a, cube) = bmllab::mesh::cover_cube(&q).map_err(err)?;
    let region = cube.region();
    Ok((
        a,
        cube.k,
        cube.m[..cube.n].to_vec(),
        (0..cube.n).map(|i| rat::to_f64(region.lo[i])).collect(),
        (0..cube.n).map(|i| rat::to_f64(region.hi[i])).collect(),
    ))
}

#[pymodule]
fn bmllab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMeshFunction>()?;
    m.add_function(wrap_pyfunction!(lorentz_norm, m)?)?;
    m.add_function(wrap_pyfunction!(lorentz_norm_via_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(nontrivial, m)?)?;
    m.add_function(wrap_pyfunction!(bml_norm, m)?)?;
    m.add_function(wrap_pyfunction!(bml_norm_on_grid, m)?)?;
    m.add_function(wrap_pyfunction!(hilbert_transform, m)?)?;
    m.add_function(wrap_pyfunction!(hilbert_at, m)?)?;
    m.add_function(wrap_pyfunction!(hilbert_pairing, m)?)?;
    m.add_function(wrap_pyfunction!(fractional_integral, m)?)?;
    m.add_function(wrap_pyfunction!(maximal_dyadic, m)?)?;
    m.add_function(wrap_pyfunction!(sharp_maximal, m)?)?;
    m.add_function(wrap_pyfunction!(commutator, m)?)?;
    m.add_function(wrap_pyfunction!(bmo_norm, m)?)?;
    m.add_function(wrap_pyfunction!(block_norm_upper, m)?)?;
    m.add_function(wrap_pyfunction!(block_norm_lower, m)?)?;
    m.add_function(wrap_pyfunction!(factorize_canonical, m)?)?;
    m.add_function(wrap_pyfunction!(homogeneity_constant, m)?)?;
    m.add_function(wrap_pyfunction!(cover_cube, m)?)?;
    Ok(())
}
