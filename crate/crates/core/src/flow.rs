//! Adaptive integration of the reduced flow in either chart: the physical
//! chart (a, P) in scaled time tau with the companion quadrature for the
//! fibered time s, and the blown-up chart (r, v) in s with tau co-integrated.
//! Embedded Dormand-Prince 5(4) pairs with PI step-size control; stop events
//! are localized by bisecting the final step.

use serde::{Deserialize, Serialize};

use crate::blowup::Blowup;
use crate::cosmo::ReducedModel;
use crate::{Error, Result};

/// Orientation of a run relative to the singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Scale factor decreasing.
    Toward,
    /// Scale factor increasing.
    Away,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    Physical,
    Regularized,
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    ReachedAMin,
    ReachedAMax,
    ReachedRMin,
    TimeSpan,
    MaxSteps,
    /// Step size collapsed below the representable floor; run is truncated.
    StepUnderflow,
}

impl StopReason {
    pub fn truncated(&self) -> bool {
        matches!(self, StopReason::MaxSteps | StopReason::StepUnderflow)
    }
}

#[derive(Debug, Clone)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Cap on the step in the integration variable.
    pub max_step: Option<f64>,
    pub stop_a_min: Option<f64>,
    pub stop_a_max: Option<f64>,
    pub stop_r_min: Option<f64>,
    /// Span of the chart's own time variable (tau or s).
    pub stop_time_span: Option<f64>,
    pub direction: Direction,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
            max_step: None,
            stop_a_min: None,
            stop_a_max: None,
            stop_r_min: None,
            stop_time_span: None,
            direction: Direction::Toward,
        }
    }
}

/// One recorded state, with both charts filled in and the conservation
/// residuals at that point.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub tau: f64,
    pub s: f64,
    pub a: f64,
    pub p_mom: f64,
    pub r: f64,
    pub v: f64,
    /// H(a, P) - h.
    pub h_res: f64,
    /// Energy-relation residual in the blown-up chart.
    pub m_res: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    /// Largest |H - h| over the recorded samples.
    pub max_energy_drift: f64,
    /// Same, scaled by max(1, |h|, P^2/2 + |V|) pointwise.
    pub max_energy_drift_scaled: f64,
    pub max_manifold_residual: f64,
    pub min_a: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub chart: Chart,
    /// Energy level of the run.
    pub h_level: f64,
    /// Exponent beta of the model, kept for asymptotic post-processing.
    pub beta: f64,
    pub samples: Vec<Sample>,
    pub diagnostics: Diagnostics,
    pub stop: StopReason,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has samples")
    }

    /// CSV rows, 17 significant digits. P is NaN on the r = 0 fiber.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,s,a,P,r,v,H_residual,M_residual\n");
        for p in &self.samples {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                p.tau, p.s, p.a, p.p_mom, p.r, p.v, p.h_res, p.m_res
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// b - b_hat, the embedded error weights (7 stages, FSAL stage included).
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

type State = [f64; 3];

fn axpy(y: &State, h: f64, coefs: &[f64], ks: &[State]) -> State {
    let mut out = *y;
    for (c, k) in coefs.iter().zip(ks) {
        for i in 0..3 {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One embedded step. Returns the 5th-order solution and the scaled error
/// norm; a NaN norm means the step wandered out of the domain and must be
/// rejected.
fn dp_step<F: Fn(&State) -> State>(f: &F, y: &State, h: f64, opts: &IntegratorOptions) -> (State, f64) {
    let k1 = f(y);
    let k2 = f(&axpy(y, h, &A2, &[k1]));
    let k3 = f(&axpy(y, h, &A3, &[k1, k2]));
    let k4 = f(&axpy(y, h, &A4, &[k1, k2, k3]));
    let k5 = f(&axpy(y, h, &A5, &[k1, k2, k3, k4]));
    let k6 = f(&axpy(y, h, &A6, &[k1, k2, k3, k4, k5]));
    let y5 = axpy(y, h, &B5, &[k1, k2, k3, k4, k5, k6]);
    let k7 = f(&y5);
    let ks = [k1, k2, k3, k4, k5, k6, k7];
    let mut norm2 = 0.0;
    for i in 0..3 {
        let mut e = 0.0;
        for (c, k) in ERR.iter().zip(&ks) {
            e += c * k[i];
        }
        e *= h;
        let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y5[i].abs());
        norm2 += (e / sc) * (e / sc);
    }
    (y5, (norm2 / 3.0).sqrt())
}

struct Driver<'a, F: Fn(&State) -> State, G: Fn(&State) -> Option<StopReason>> {
    field: F,
    /// Returns Some(reason) once the state is at or past a stop surface.
    event: G,
    opts: &'a IntegratorOptions,
}

struct RawRun {
    /// Accepted states, including the initial one; last is event-localized.
    states: Vec<(f64, State)>,
    stop: StopReason,
    accepted: usize,
    rejected: usize,
}

impl<'a, F: Fn(&State) -> State, G: Fn(&State) -> Option<StopReason>> Driver<'a, F, G> {
    /// Integrates in a strictly increasing internal variable xi from 0,
    /// recording every accepted state.
    fn run(&self, y0: State, xi_span: Option<f64>) -> Result<RawRun> {
        let opts = self.opts;
        let mut y = y0;
        let mut xi = 0.0_f64;
        let mut states = vec![(xi, y)];
        let mut accepted = 0usize;
        let mut rejected = 0usize;

        let f0 = (self.field)(&y);
        let y_norm = y.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-6);
        let f_norm = f0.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        let mut h = (0.01 * y_norm / f_norm).min(opts.max_step.unwrap_or(f64::INFINITY));
        let mut err_prev = 1.0_f64;

        loop {
            if accepted + rejected >= opts.max_steps {
                return Ok(RawRun {
                    states,
                    stop: StopReason::MaxSteps,
                    accepted,
                    rejected,
                });
            }
            let mut span_hit = false;
            // span_hit is recomputed on every attempt, so a rejection simply
            // falls through to a retry with the smaller step.
            if let Some(span) = xi_span {
                if xi + h >= span {
                    h = span - xi;
                    span_hit = true;
                    if h <= 0.0 {
                        return Ok(RawRun {
                            states,
                            stop: StopReason::TimeSpan,
                            accepted,
                            rejected,
                        });
                    }
                }
            }
            if h < 1e-15 * xi.abs().max(1e-10) {
                return Ok(RawRun {
                    states,
                    stop: StopReason::StepUnderflow,
                    accepted,
                    rejected,
                });
            }

            let (y_new, err) = dp_step(&self.field, &y, h, opts);
            if !(err <= 1.0) {
                rejected += 1;
                let fac = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).max(0.2)
                } else {
                    0.5
                };
                h *= fac;
                continue;
            }

            if let Some(reason) = (self.event)(&y_new) {
                let (xi_hit, y_hit) = self.localize(&y, h, xi);
                states.push((xi_hit, y_hit));
                return Ok(RawRun {
                    states,
                    stop: reason,
                    accepted: accepted + 1,
                    rejected,
                });
            }

            xi += h;
            y = y_new;
            states.push((xi, y));
            accepted += 1;

            if span_hit {
                return Ok(RawRun {
                    states,
                    stop: StopReason::TimeSpan,
                    accepted,
                    rejected,
                });
            }

            // PI controller on the accepted error sequence.
            let e = err.max(1e-10);
            let mut fac = 0.9 * e.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            fac = fac.clamp(0.2, 5.0);
            err_prev = e;
            h = (h * fac).min(opts.max_step.unwrap_or(f64::INFINITY));
        }
    }

    /// Bisects the step size until the event surface is hit to a relative
    /// tolerance of 1e-12 in the step.
    fn localize(&self, y: &State, h_full: f64, xi: f64) -> (f64, State) {
        let mut lo = 0.0_f64;
        let mut hi = h_full;
        let mut y_hit = dp_step(&self.field, y, hi, self.opts).0;
        for _ in 0..60 {
            if hi - lo <= 1e-12 * h_full {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let (y_mid, _) = dp_step(&self.field, y, mid, self.opts);
            if (self.event)(&y_mid).is_some() {
                hi = mid;
                y_hit = y_mid;
            } else {
                lo = mid;
            }
        }
        (xi + hi, y_hit)
    }
}

fn guard_pow(base: f64, exp: f64) -> f64 {
    base.max(0.0).powf(exp)
}

/// Sign of d tau / d xi: the internal variable increases while tau runs in
/// whichever direction matches the requested orientation and the momentum.
fn time_sign(direction: Direction, momentum: f64) -> f64 {
    match (direction, momentum < 0.0) {
        (Direction::Toward, true) | (Direction::Away, false) => 1.0,
        _ => -1.0,
    }
}

fn finish(
    chart: Chart,
    h: f64,
    blow: &Blowup,
    raw: RawRun,
    samples: Vec<Sample>,
) -> Trajectory {
    let mut d = Diagnostics {
        steps_accepted: raw.accepted,
        steps_rejected: raw.rejected,
        min_a: f64::INFINITY,
        ..Default::default()
    };
    for p in &samples {
        let drift = p.h_res.abs();
        // V recovered from H = P^2/2 - V without re-evaluating the model;
        // valid off the r = 0 fiber, where h_res is 0 by convention anyway.
        let kinetic = 0.5 * p.p_mom * p.p_mom;
        let v_abs = (kinetic - h - p.h_res).abs();
        let scale = (kinetic + v_abs).max(1.0).max(h.abs());
        d.max_energy_drift = d.max_energy_drift.max(drift);
        if scale.is_finite() {
            d.max_energy_drift_scaled = d.max_energy_drift_scaled.max(drift / scale);
        }
        d.max_manifold_residual = d.max_manifold_residual.max(p.m_res.abs());
        d.min_a = d.min_a.min(p.a);
    }
    Trajectory {
        chart,
        h_level: h,
        beta: blow.exps.beta_f(),
        samples,
        diagnostics: d,
        stop: raw.stop,
    }
}

/// Integrates the physical chart from (a0, P0) on energy level h. State is
/// (a, P) with the fibered time s carried as a quadrature; tau starts at 0.
pub fn integrate_physical(
    model: &ReducedModel,
    blow: &Blowup,
    a0: f64,
    p0: f64,
    h: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    if !(a0 > 0.0) {
        return Err(Error::Domain(format!("a0 must be positive, got {a0}")));
    }
    let sign = time_sign(opts.direction, p0);
    let beta = model.exps.beta_f();
    let m = model.clone();
    let field = move |y: &State| -> State {
        let a = y[0].max(1e-300);
        let acc = reduced_accel_unchecked(&m, a);
        [sign * y[1], sign * acc, sign * guard_pow(a, -(1.0 + beta))]
    };
    let a_min = opts.stop_a_min;
    let a_max = opts.stop_a_max;
    let event = move |y: &State| -> Option<StopReason> {
        if let Some(m) = a_min {
            if y[0] <= m {
                return Some(StopReason::ReachedAMin);
            }
        }
        if let Some(m) = a_max {
            if y[0] >= m {
                return Some(StopReason::ReachedAMax);
            }
        }
        None
    };
    let driver = Driver { field, event, opts };
    let raw = driver.run([a0, p0, 0.0], opts.stop_time_span)?;

    let mut samples = Vec::with_capacity(raw.states.len());
    for (xi, y) in &raw.states {
        let (a, p_mom) = (y[0], y[1]);
        if !(a > 0.0) || !a.is_finite() || !p_mom.is_finite() {
            return Err(Error::Numeric(format!(
                "physical chart left the domain at tau = {}: a = {a}",
                sign * xi
            )));
        }
        let (r, v) = blow.to_regularized(a, p_mom)?;
        samples.push(Sample {
            tau: sign * xi,
            s: sign * y[2],
            a,
            p_mom,
            r,
            v,
            h_res: crate::cosmo::hamiltonian(model, a, p_mom)? - h,
            m_res: blow.manifold_residual(r, v, h),
        });
    }
    Ok(finish(Chart::Physical, h, blow, raw, samples))
}

/// Integrates the blown-up chart from (r0, v0) on energy level h. State is
/// (r, v) in the fibered time s, with tau co-integrated; both start at 0.
pub fn integrate_regularized(
    model: &ReducedModel,
    blow: &Blowup,
    r0: f64,
    v0: f64,
    h: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    if !(r0 >= 0.0) {
        return Err(Error::Domain(format!("r0 must be nonnegative, got {r0}")));
    }
    let sign = time_sign(opts.direction, v0);
    let b = blow.clone();
    let field = move |y: &State| -> State {
        let (dr, dv) = b.field(y[0].max(0.0), y[1]);
        [sign * dr, sign * dv, sign * y[0].max(0.0)]
    };
    let r_min = opts.stop_r_min;
    let gamma = blow.exps.gamma_f();
    let a_max = opts.stop_a_max.map(|m| m.powf(gamma.recip()));
    let event = move |y: &State| -> Option<StopReason> {
        if let Some(m) = r_min {
            if y[0] <= m {
                return Some(StopReason::ReachedRMin);
            }
        }
        if let Some(m) = a_max {
            if y[0] >= m {
                return Some(StopReason::ReachedAMax);
            }
        }
        None
    };
    let driver = Driver { field, event, opts };
    let raw = driver.run([r0, v0, 0.0], opts.stop_time_span)?;

    let mut samples = Vec::with_capacity(raw.states.len());
    for (xi, y) in &raw.states {
        let (r, v) = (y[0], y[1]);
        if !(r >= 0.0) || !r.is_finite() || !v.is_finite() {
            return Err(Error::Numeric(format!(
                "blown-up chart left the domain at s = {}: r = {r}",
                sign * xi
            )));
        }
        let (a, p_mom) = if r == 0.0 {
            (0.0, f64::NAN)
        } else {
            blow.from_regularized(r, v)?
        };
        samples.push(Sample {
            tau: sign * y[2],
            s: sign * xi,
            a,
            p_mom,
            r,
            v,
            h_res: if r == 0.0 {
                0.0
            } else {
                crate::cosmo::hamiltonian(model, a, p_mom)? - h
            },
            m_res: blow.manifold_residual(r, v, h),
        });
    }
    Ok(finish(Chart::Regularized, h, blow, raw, samples))
}

fn reduced_accel_unchecked(model: &ReducedModel, a: f64) -> f64 {
    let mut acc = -model.lead_coef * a.powf(-(model.exps.alpha_f() + 1.0));
    for f in &model.sub_forces {
        acc -= f.coef * a.powf(-f.exponent);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cosmo::{momentum_on_level, potential_value, reduce, CosmologyParams};

    fn setup(w: &str) -> (ReducedModel, Blowup) {
        let m = reduce(&CosmologyParams::default_with_w(w.parse().unwrap()));
        let b = Blowup::new(&m);
        (m, b)
    }

    fn pure_power(w: &str) -> (ReducedModel, Blowup) {
        let mut m = reduce(&CosmologyParams::default_with_w(w.parse().unwrap()));
        m.sub_forces.clear();
        m.potential_terms.clear();
        let b = Blowup::new(&m);
        (m, b)
    }

    /// Collision time of the zero-energy pure-power collapse from a0.
    fn tau_star(a0: f64, beta: f64, gamma: f64) -> f64 {
        a0.powf(gamma.recip()) / (2.0_f64.sqrt() * (beta + 1.0))
    }

    #[test]
    fn zero_energy_pure_power_matches_closed_form() {
        for w in ["1/2", "1", "2", "7/3"] {
            let (mp, bp) = pure_power(w);
            let a0 = 1.0;
            let p0 = -(2.0 * potential_value(&mp, a0).unwrap()).sqrt();
            let opts = IntegratorOptions {
                stop_a_min: Some(0.01),
                ..Default::default()
            };
            let traj = integrate_physical(&mp, &bp, a0, p0, 0.0, &opts).unwrap();
            assert_eq!(traj.stop, StopReason::ReachedAMin);
            let end = traj.last();
            assert!((end.a - 0.01).abs() < 1e-8);
            let beta = mp.exps.beta_f();
            let gamma = mp.exps.gamma_f();
            let ts = tau_star(a0, beta, gamma);
            let expected_tau = ts - tau_star(end.a, beta, gamma);
            assert!(
                (end.tau - expected_tau).abs() < 1e-8 * expected_tau,
                "w = {w}: tau {} vs {}",
                end.tau,
                expected_tau
            );
        }
    }

    #[test]
    fn energy_is_conserved_toward_small_a() {
        for (w, h) in [("0", -0.5), ("1", 0.0), ("2", 1.5), ("7/3", -0.2)] {
            let (m, b) = setup(w);
            let p0 = momentum_on_level(&m, 1.0, h, -1.0).unwrap();
            let opts = IntegratorOptions {
                stop_a_min: Some(0.05),
                ..Default::default()
            };
            let traj = integrate_physical(&m, &b, 1.0, p0, h, &opts).unwrap();
            assert_eq!(traj.stop, StopReason::ReachedAMin);
            for s in &traj.samples {
                let scale = (0.5 * s.p_mom * s.p_mom
                    + potential_value(&m, s.a).unwrap().abs())
                .max(1.0);
                assert!(
                    s.h_res.abs() <= 1e-9 * scale,
                    "w = {w}: drift {} at a = {}",
                    s.h_res,
                    s.a
                );
            }
        }
    }

    #[test]
    fn rest_point_is_stationary() {
        let (m, b) = setup("2");
        let opts = IntegratorOptions {
            stop_time_span: Some(5.0),
            direction: Direction::Toward,
            ..Default::default()
        };
        let traj = integrate_regularized(&m, &b, 0.0, -2.0_f64.sqrt(), 0.0, &opts).unwrap();
        assert_eq!(traj.stop, StopReason::TimeSpan);
        for s in &traj.samples {
            assert_eq!(s.r, 0.0);
            assert_eq!(s.v, -2.0_f64.sqrt());
            assert_eq!(s.tau, 0.0);
        }
    }

    #[test]
    fn charts_agree_on_shared_run() {
        // Same physical initial data, both charts, compare the tau at which
        // a = 0.05 is reached.
        for w in ["1", "2", "7/3"] {
            let (m, b) = setup(w);
            let h = 0.0;
            let a0 = 1.0;
            let p0 = momentum_on_level(&m, a0, h, -1.0).unwrap();
            let a_end = 0.05;

            let opts = IntegratorOptions {
                stop_a_min: Some(a_end),
                rel_tol: 1e-12,
                abs_tol: 1e-14,
                ..Default::default()
            };
            let phys = integrate_physical(&m, &b, a0, p0, h, &opts).unwrap();

            let (r0, v0) = b.to_regularized(a0, p0).unwrap();
            let opts_r = IntegratorOptions {
                stop_r_min: Some(a_end.powf(m.exps.gamma_f().recip())),
                rel_tol: 1e-12,
                abs_tol: 1e-14,
                ..Default::default()
            };
            let reg = integrate_regularized(&m, &b, r0, v0, h, &opts_r).unwrap();

            let t1 = phys.last().tau;
            let t2 = reg.last().tau;
            assert!(
                (t1 - t2).abs() <= 1e-8 * t1.abs(),
                "w = {w}: tau {t1} vs {t2}"
            );
            assert!((phys.last().a - a_end).abs() < 1e-9);
            assert!((reg.last().a - a_end).abs() < 1e-9);
        }
    }

    #[test]
    fn regularized_run_reaches_tiny_r() {
        // The blown-up chart passes r = 1e-10 without difficulty; s stays
        // modest since r decays exponentially in s on the zero level.
        let (m, b) = setup("2");
        let p0 = momentum_on_level(&m, 1.0, 0.0, -1.0).unwrap();
        let (r0, v0) = b.to_regularized(1.0, p0).unwrap();
        let opts = IntegratorOptions {
            stop_r_min: Some(1e-10),
            ..Default::default()
        };
        let traj = integrate_regularized(&m, &b, r0, v0, 0.0, &opts).unwrap();
        assert_eq!(traj.stop, StopReason::ReachedRMin);
        let end = traj.last();
        assert!(end.r <= 1e-10 * (1.0 + 1e-6));
        assert!(end.s.abs() < 50.0);
        assert!(end.s.abs() > 1.0);
        for s in &traj.samples {
            assert!(s.m_res.abs() < 1e-8, "residual {} at r = {}", s.m_res, s.r);
        }
    }

    #[test]
    fn away_direction_grows_a() {
        let (m, b) = setup("0");
        let p0 = momentum_on_level(&m, 0.5, 0.0, 1.0).unwrap();
        let opts = IntegratorOptions {
            stop_a_max: Some(2.0),
            direction: Direction::Away,
            ..Default::default()
        };
        let traj = integrate_physical(&m, &b, 0.5, p0, 0.0, &opts).unwrap();
        assert_eq!(traj.stop, StopReason::ReachedAMax);
        assert!((traj.last().a - 2.0).abs() < 1e-8);
        assert!(traj.last().tau > 0.0);

        // Same expansion described with decreasing tau: negative momentum,
        // direction away, tau runs backward.
        let opts = IntegratorOptions {
            stop_a_max: Some(2.0),
            direction: Direction::Away,
            ..Default::default()
        };
        let traj = integrate_physical(&m, &b, 0.5, -p0, 0.0, &opts).unwrap();
        assert_eq!(traj.stop, StopReason::ReachedAMax);
        assert!(traj.last().tau < 0.0);
    }

    #[test]
    fn s_quadrature_matches_direct_integration() {
        // For the pure-power zero-energy collapse, s has the closed form
        // s = -ln(a / a0) / (sqrt(2) (1 + beta) gamma) ... equivalently
        // d(ln a)/d tau = P a^beta a^(-1-beta) * a^beta: check numerically
        // against a trapezoid quadrature over the recorded samples instead.
        let (m, b) = pure_power("1");
        let a0 = 1.0;
        let p0 = -(2.0 * potential_value(&m, a0).unwrap()).sqrt();
        let opts = IntegratorOptions {
            stop_a_min: Some(0.01),
            ..Default::default()
        };
        let traj = integrate_physical(&m, &b, a0, p0, 0.0, &opts).unwrap();
        // ds/dtau = a^-(1+beta); on the closed-form orbit
        // s(a) = (ln a0 - ln a) / (sqrt(2) gamma (1+beta)) for gamma(1+beta)=1:
        let beta = m.exps.beta_f();
        let expected = -(0.01_f64.ln()) / (2.0_f64.sqrt());
        let _ = beta;
        let got = traj.last().s;
        assert!(
            (got - expected).abs() < 1e-6 * expected,
            "s = {got}, expected {expected}"
        );
    }

    #[test]
    fn csv_shape_and_precision() {
        let (m, b) = setup("1");
        let opts = IntegratorOptions {
            stop_a_min: Some(0.5),
            ..Default::default()
        };
        let p0 = momentum_on_level(&m, 1.0, 0.0, -1.0).unwrap();
        let traj = integrate_physical(&m, &b, 1.0, p0, 0.0, &opts).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "tau,s,a,P,r,v,H_residual,M_residual");
        let row = lines.next().unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 8);
        // Round trip at full precision.
        let a: f64 = fields[2].parse().unwrap();
        assert_eq!(a, traj.samples[0].a);
        assert!(fields[2].contains('e'));
    }

    #[test]
    fn max_steps_truncates() {
        let (m, b) = setup("0");
        let p0 = momentum_on_level(&m, 1.0, 0.0, -1.0).unwrap();
        let opts = IntegratorOptions {
            stop_a_min: Some(1e-6),
            max_steps: 10,
            ..Default::default()
        };
        let traj = integrate_physical(&m, &b, 1.0, p0, 0.0, &opts).unwrap();
        assert_eq!(traj.stop, StopReason::MaxSteps);
        assert!(traj.stop.truncated());
    }

    #[test]
    fn max_step_caps_spacing() {
        let (m, b) = setup("1");
        let p0 = momentum_on_level(&m, 1.0, 0.0, -1.0).unwrap();
        let opts = IntegratorOptions {
            stop_a_min: Some(0.1),
            max_step: Some(0.01),
            ..Default::default()
        };
        let traj = integrate_physical(&m, &b, 1.0, p0, 0.0, &opts).unwrap();
        for w in traj.samples.windows(2) {
            assert!((w[1].tau - w[0].tau).abs() <= 0.01 + 1e-12);
        }
    }
}
