//! Python bindings for the `mirrorsim` simulator.

use std::collections::BTreeMap;

use mirrorsim_core::analyses::{self, Branch, MirrorFixture};
use mirrorsim_core::devices::{self, MosInstance, MosModelParams, Waveform};
use mirrorsim_core::engine::{self, Method, NewtonConfig};
use mirrorsim_core::mcvariation::{self, MismatchSpec, WaferPlan};
use mirrorsim_core::netlist;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn solver_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// An elaborated netlist.
#[pyclass(name = "Circuit", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCircuit {
    inner: netlist::Circuit,
}

#[pymethods]
impl PyCircuit {
    /// Parse netlist text.
    #[staticmethod]
    fn load(text: &str) -> PyResult<Self> {
        netlist::load(text).map(|inner| Self { inner }).map_err(value_err)
    }

    /// One of the bundled netlists: set_branch, reset_branch, full_2m1r1b, cascode_mirror.
    #[staticmethod]
    fn bundled(name: &str) -> PyResult<Self> {
        let text = netlist::bundled::by_name(name)
            .or_else(|| netlist::bundled::by_name(&format!("{name}.cir")))
            .ok_or_else(|| value_err(format!("no bundled netlist '{name}'")))?;
        Self::load(text)
    }

    fn to_netlist(&self) -> String {
        self.inner.to_netlist()
    }

    /// Node names without ground.
    fn nodes(&self) -> Vec<String> {
        self.inner.node_names().iter().skip(1).cloned().collect()
    }

    fn elements(&self) -> Vec<String> {
        self.inner.elements.iter().map(|e| e.name.clone()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Circuit({:?}, {} nodes, {} elements)",
            self.inner.title,
            self.inner.num_nodes() - 1,
            self.inner.elements.len()
        )
    }
}

/// Operating point as `(node voltages, element currents, regions)`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn solve_op(
    py: Python<'_>,
    circuit: &PyCircuit,
) -> PyResult<(BTreeMap<String, f64>, BTreeMap<String, f64>, BTreeMap<String, String>)> {
    let op = py.detach(|| engine::solve_op(&circuit.inner, &NewtonConfig::default(), None)).map_err(solver_err)?;
    let volts =
        circuit.inner.node_names().iter().zip(&op.node_voltages).skip(1).map(|(n, v)| (n.clone(), *v)).collect();
    let regions = op.regions.iter().map(|(k, r)| (k.clone(), r.as_str().to_string())).collect();
    Ok((volts, op.branch_currents, regions))
}

type Traces = (Vec<f64>, BTreeMap<String, Vec<f64>>);
type WaferRows = Vec<(usize, usize, usize, Option<f64>)>;

/// Transient run returning `(time, {signal: samples})`.
#[pyfunction]
#[pyo3(signature = (circuit, tstop, dt=None, method="trap"))]
fn transient(py: Python<'_>, circuit: &PyCircuit, tstop: f64, dt: Option<f64>, method: &str) -> PyResult<Traces> {
    let method = match method {
        "trap" => Method::Trapezoidal,
        "be" => Method::BackwardEuler,
        other => return Err(value_err(format!("method must be 'trap' or 'be', got '{other}'"))),
    };
    let dt = dt.unwrap_or_else(|| engine::default_dt(&circuit.inner, tstop));
    let tr = py
        .detach(|| engine::transient(&circuit.inner, tstop, dt, method, &NewtonConfig::default()))
        .map_err(solver_err)?;
    let signals = tr.signal_names().iter().map(|n| (n.clone(), tr.signal(n).unwrap().to_vec())).collect();
    Ok((tr.time().to_vec(), signals))
}

/// Level-1 drain current: returns `(id, gm, gds, region)`.
#[pyfunction]
#[pyo3(signature = (vgs, vds, w, l, vth=0.7, kp=170e-6, lambda_=0.0, pmos=false))]
#[allow(clippy::too_many_arguments)]
fn mos_eval(
    vgs: f64,
    vds: f64,
    w: f64,
    l: f64,
    vth: f64,
    kp: f64,
    lambda_: f64,
    pmos: bool,
) -> PyResult<(f64, f64, f64, String)> {
    let model = if pmos { MosModelParams::pmos(vth, kp, lambda_) } else { MosModelParams::nmos(vth, kp, lambda_) };
    model.validate().map_err(value_err)?;
    let e = devices::mos_eval(&model, &MosInstance::new([1, 2, 0, 0], w, l, "m"), vgs, vds).map_err(value_err)?;
    Ok((e.id, e.gm, e.gds, e.region.as_str().to_string()))
}

#[pyfunction]
fn mirror_ratio_ideal(w0: f64, l0: f64, w1: f64, l1: f64) -> PyResult<f64> {
    devices::mirror_ratio_ideal(w0, l0, w1, l1).map_err(value_err)
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn mirror_ratio_clm(w0: f64, l0: f64, w1: f64, l1: f64, lambda_: f64, vds0: f64, vds1: f64) -> PyResult<f64> {
    devices::mirror_ratio_clm(w0, l0, w1, l1, lambda_, vds0, vds1).map_err(value_err)
}

/// Value at `t` of `PULSE(v1 v2 delay rise fall width period)`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn pulse_value(v1: f64, v2: f64, delay: f64, rise: f64, fall: f64, width: f64, period: f64, t: f64) -> PyResult<f64> {
    let w = Waveform::pulse(v1, v2, delay, rise, fall, width, period).map_err(value_err)?;
    Ok(devices::waveform_value(&w, t))
}

fn fixture(branch: &str, circuit: Option<&PyCircuit>) -> PyResult<MirrorFixture> {
    let b: Branch = branch.parse().map_err(value_err)?;
    match circuit {
        Some(c) => MirrorFixture::new(b, c.inner.clone()).map_err(value_err),
        None => Ok(b.fixture()),
    }
}

/// DC mirror factor rows `(iref, imirr, factor, deviation_pct)`.
#[pyfunction]
#[pyo3(signature = (branch, irefs, vdd=5.0, circuit=None))]
fn mirror_factor_dc(
    py: Python<'_>,
    branch: &str,
    irefs: Vec<f64>,
    vdd: f64,
    circuit: Option<&PyCircuit>,
) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let fx = fixture(branch, circuit)?;
    let r = py.detach(|| analyses::mirror_factor_dc(&fx, &irefs, vdd, &NewtonConfig::default())).map_err(value_err)?;
    if let Some((iref, e)) = r.failures.first() {
        return Err(solver_err(format!("no operating point at iref={iref}: {e}")));
    }
    Ok(r.rows.iter().map(|row| (row.iref, row.imirr, row.factor, row.signed_deviation_pct())).collect())
}

/// Monte-Carlo wafer map as rows `(die_x, die_y, circuit, mean_deviation_pct or None)`.
#[pyfunction]
#[pyo3(signature = (branch, seed=1, dies=180, circuits=2, avt=5e-9, abeta=1e-8, die_sigma=2e-3, vdd=5.0))]
#[allow(clippy::too_many_arguments)]
fn wafer_run(
    py: Python<'_>,
    branch: &str,
    seed: u64,
    dies: usize,
    circuits: usize,
    avt: f64,
    abeta: f64,
    die_sigma: f64,
    vdd: f64,
) -> PyResult<WaferRows> {
    let fx = fixture(branch, None)?;
    let spec = MismatchSpec { avt, abeta, die_sigma_vth: die_sigma, seed };
    let plan = WaferPlan { dies, circuits_per_die: circuits, vdd, ..WaferPlan::default() };
    let map = py.detach(|| mcvariation::wafer_run(&fx, &spec, &plan, &NewtonConfig::default())).map_err(value_err)?;
    Ok(map.cells.iter().map(|c| (c.die_x, c.die_y, c.circuit, c.mean_deviation_pct)).collect())
}

#[pymodule]
fn mirrorsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCircuit>()?;
    m.add_function(wrap_pyfunction!(solve_op, m)?)?;
    m.add_function(wrap_pyfunction!(transient, m)?)?;
    m.add_function(wrap_pyfunction!(mos_eval, m)?)?;
    m.add_function(wrap_pyfunction!(mirror_ratio_ideal, m)?)?;
    m.add_function(wrap_pyfunction!(mirror_ratio_clm, m)?)?;
    m.add_function(wrap_pyfunction!(pulse_value, m)?)?;
    m.add_function(wrap_pyfunction!(mirror_factor_dc, m)?)?;
    m.add_function(wrap_pyfunction!(wafer_run, m)?)?;
    Ok(())
}
