//! Python bindings: exact classification, model reduction, integration, and
//! the bounce continuation, exposed with plain Python types (strings for
//! exact rationals, dicts for reports).

use pyo3::exceptions::{PyValueError, PyZeroDivisionError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use bigbang_core::blowup::Blowup;
use bigbang_core::bounce::{
    self, extend_through_singularity, BounceConfig, SignRule,
};
use bigbang_core::cosmo::{
    momentum_on_level, physical_energy, reduce, CosmologyParams,
};
use bigbang_core::flow::{integrate_physical, IntegratorOptions, Trajectory};
use bigbang_core::ratnum::{self, Parity, Rational, RegularityKind};
use bigbang_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::ZeroDenominator => PyZeroDivisionError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_w(w: &str) -> PyResult<Rational> {
    w.parse::<Rational>().map_err(py_err)
}

/// Decide branch-regularizability of an exact equation of state "p/q".
#[pyfunction]
fn classify(py: Python<'_>, w: &str) -> PyResult<Py<PyDict>> {
    let c = ratnum::classify(&parse_w(w)?);
    let d = PyDict::new(py);
    d.set_item(
        "kind",
        match c.kind {
            RegularityKind::AlwaysRegularizable => "AlwaysRegularizable",
            RegularityKind::BranchRegularizable => "BranchRegularizable",
            RegularityKind::NotBranchRegularizable => "NotBranchRegularizable",
        },
    )?;
    d.set_item("regularizable", c.is_regularizable())?;
    d.set_item("gamma", c.gamma.to_string())?;
    d.set_item(
        "parity",
        c.p_parity.map(|p| match p {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }),
    )?;
    d.set_item("reason", c.reason)?;
    d.set_item("warning", c.warning)?;
    Ok(d.into())
}

/// Equation of state from an admissible pair: w = (2/3)(q/p) - 1, exact.
#[pyfunction]
fn w_from_pq(p: i64, q: i64) -> PyResult<String> {
    Ok(ratnum::w_from_pq(p, q).map_err(py_err)?.to_string())
}

/// The blow-up exponents (alpha, beta, gamma) for w, as exact strings.
#[pyfunction]
fn exponents(w: &str) -> PyResult<(String, String, String)> {
    let e = ratnum::exponents_of(&parse_w(w)?);
    Ok((
        e.alpha.to_string(),
        e.beta.to_string(),
        e.gamma.to_string(),
    ))
}

/// Leading collapse prefactor psi0 = (sqrt(2)(beta+1))^gamma.
#[pyfunction]
fn psi0(w: &str) -> PyResult<f64> {
    let m = reduce(&CosmologyParams::default_with_w(parse_w(w)?));
    Ok((2.0_f64.sqrt() * (m.exps.beta_f() + 1.0)).powf(m.exps.gamma_f()))
}

/// Exact zero-energy collapse profile a(delta) of the pure-power system.
#[pyfunction]
fn closed_form_zero_energy(w: &str, delta: f64) -> PyResult<f64> {
    let m = reduce(&CosmologyParams::default_with_w(parse_w(w)?));
    bounce::closed_form_zero_energy(&m, delta).map_err(py_err)
}

/// Real branch of x^(p/q); negative x needs odd q and follows the parity of p.
#[pyfunction]
fn real_pow_rational(x: f64, e: &str) -> PyResult<f64> {
    bounce::real_pow_rational(x, &parse_w(e)?).map_err(py_err)
}

fn trajectory_dict(py: Python<'_>, t: &Trajectory) -> PyResult<Py<PyDict>> {
    let d = PyDict::new(py);
    for (key, get) in [
        ("tau", (|s| s.tau) as fn(&bigbang_core::flow::Sample) -> f64),
        ("s", |s| s.s),
        ("a", |s| s.a),
        ("P", |s| s.p_mom),
        ("r", |s| s.r),
        ("v", |s| s.v),
    ] {
        let col: Vec<f64> = t.samples.iter().map(get).collect();
        d.set_item(key, PyList::new(py, col)?)?;
    }
    d.set_item("h_level", t.h_level)?;
    d.set_item("stop", format!("{:?}", t.stop))?;
    d.set_item("max_energy_drift_scaled", t.diagnostics.max_energy_drift_scaled)?;
    d.set_item("max_manifold_residual", t.diagnostics.max_manifold_residual)?;
    Ok(d.into())
}

/// Integrate the reduced system from a0 down to a_min on the physical
/// energy level; returns columns tau, s, a, P, r, v plus diagnostics.
#[pyfunction]
#[pyo3(signature = (w, a0=1.0, a_min=1e-3))]
fn simulate(py: Python<'_>, w: &str, a0: f64, a_min: f64) -> PyResult<Py<PyDict>> {
    let params = CosmologyParams::default_with_w(parse_w(w)?);
    let model = reduce(&params);
    let blow = Blowup::new(&model);
    let h = physical_energy(&params, &model);
    let p0 = momentum_on_level(&model, a0, h, -1.0).map_err(py_err)?;
    let opts = IntegratorOptions {
        stop_a_min: Some(a_min),
        ..Default::default()
    };
    let traj = integrate_physical(&model, &blow, a0, p0, h, &opts).map_err(py_err)?;
    trajectory_dict(py, &traj)
}

/// Continue a collapsing solution through the singularity; returns the
/// bounce summary with both branches as nested trajectory dicts.
#[pyfunction]
#[pyo3(signature = (w, a0=1.0, match_tau=1e-8))]
fn bounce_extension(py: Python<'_>, w: &str, a0: f64, match_tau: f64) -> PyResult<Py<PyDict>> {
    let params = CosmologyParams::default_with_w(parse_w(w)?);
    let cfg = BounceConfig {
        a0,
        match_tau,
        ..Default::default()
    };
    let res = extend_through_singularity(&params, &cfg).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("w", res.w.to_string())?;
    d.set_item("gamma", res.gamma.to_string())?;
    d.set_item(
        "sign_rule",
        match res.sign_rule {
            SignRule::SameSign => "same_sign",
            SignRule::Flipped => "flipped",
        },
    )?;
    d.set_item("psi0", res.psi0)?;
    d.set_item("continuity_gap", res.continuity_gap)?;
    d.set_item("tau_star", res.tau_star)?;
    d.set_item("gamma_hat_pre", res.gamma_hat_pre)?;
    d.set_item("gamma_hat_post", res.gamma_hat_post)?;
    d.set_item("pre", trajectory_dict(py, &res.pre)?)?;
    d.set_item("post", trajectory_dict(py, &res.post)?)?;
    Ok(d.into())
}

#[pymodule]
fn bigbang_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(w_from_pq, m)?)?;
    m.add_function(wrap_pyfunction!(exponents, m)?)?;
    m.add_function(wrap_pyfunction!(psi0, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_zero_energy, m)?)?;
    m.add_function(wrap_pyfunction!(real_pow_rational, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(bounce_extension, m)?)?;
    Ok(())
}
