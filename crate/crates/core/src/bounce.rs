//! Asymptotics at the singularity and the branch extension through it: the
//! closed-form zero-energy collapse, power-law exponent recovery from
//! trajectories, the real rational-power branch with its parity sign rule,
//! and the construction of the unique continuation of a collapsing solution
//! past a = 0.

use serde::Serialize;

use crate::blowup::Blowup;
use crate::cosmo::{momentum_on_level, physical_energy, reduce, CosmologyParams, ReducedModel};
use crate::flow::{
    integrate_physical, integrate_regularized, Direction, IntegratorOptions, Trajectory,
};
use crate::ratnum::{classify, Parity, Rational};
use crate::{Error, Result};

/// Real branch of x^(p/q) for a canonical rational exponent: even q rejects
/// negative bases, odd q takes the real root with sign (-1)^p.
pub fn real_pow_rational(x: f64, e: &Rational) -> Result<f64> {
    let ef = e.to_f64();
    if x > 0.0 {
        return Ok(x.powf(ef));
    }
    if x == 0.0 {
        return match e.cmp_int(0) {
            std::cmp::Ordering::Greater => Ok(0.0),
            std::cmp::Ordering::Equal => Ok(1.0),
            std::cmp::Ordering::Less => Err(Error::Domain(
                "0 raised to a negative power".into(),
            )),
        };
    }
    if Parity::of(e.denom()) == Parity::Even {
        return Err(Error::ImaginaryBranch {
            base: x,
            exponent: e.to_string(),
        });
    }
    let mag = (-x).powf(ef);
    Ok(match Parity::of(e.numer()) {
        Parity::Even => mag,
        Parity::Odd => -mag,
    })
}

/// Leading behavior of the scale factor at the singularity,
/// a(delta) ~ psi0 delta^gamma with delta the time to collision.
#[derive(Debug, Clone)]
pub struct AsymptoticForm {
    pub psi0: f64,
    pub gamma: f64,
    /// Order of the first relative correction in delta.
    pub correction_exponent: f64,
}

impl AsymptoticForm {
    pub fn from_model(model: &ReducedModel, blow: &Blowup, h: f64) -> Self {
        let gamma = model.exps.gamma_f();
        let beta = model.exps.beta_f();
        let psi0 = (2.0_f64.sqrt() * (beta + 1.0)).powf(gamma);
        let mut corr = blow
            .g_tilde_min_exponent()
            .unwrap_or(f64::INFINITY);
        if h != 0.0 {
            corr = corr.min(model.exps.alpha_f() * gamma);
        }
        AsymptoticForm {
            psi0,
            gamma,
            correction_exponent: corr,
        }
    }
}

/// Exact solution of the pure-power zero-energy collapse:
/// a(delta) = (sqrt(2) (beta + 1) delta)^gamma.
pub fn closed_form_zero_energy(model: &ReducedModel, delta: f64) -> Result<f64> {
    if delta < 0.0 {
        return Err(Error::Domain(format!(
            "time to singularity must be nonnegative, got {delta}"
        )));
    }
    let beta = model.exps.beta_f();
    Ok((2.0_f64.sqrt() * (beta + 1.0) * delta).powf(model.exps.gamma_f()))
}

/// Leading-order state at time-to-singularity delta on the collapsing
/// branch: a = psi0 delta^gamma, P = da/dtau = -gamma psi0 delta^(gamma-1).
pub fn leading_state(model: &ReducedModel, delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!(
            "leading state needs delta > 0, got {delta}"
        )));
    }
    let gamma = model.exps.gamma_f();
    let beta = model.exps.beta_f();
    let psi0 = (2.0_f64.sqrt() * (beta + 1.0)).powf(gamma);
    let a = psi0 * delta.powf(gamma);
    let p = -gamma * psi0 * delta.powf(gamma - 1.0);
    Ok((a, p))
}

/// Result of recovering the collapse power law from a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentFit {
    pub gamma_hat: f64,
    pub psi0_hat: f64,
    pub points: usize,
    /// Residual sum of squares of the log-log regression at the optimum.
    pub sse: f64,
}

fn regress(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    (slope, intercept, sse)
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..120 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Fits a(delta) = psi0 delta^gamma over samples whose proxy distance to the
/// singularity lies in `window`. The unknown offset between the end of the
/// run and the singularity is co-estimated by a one-dimensional search; the
/// proxy r / (sqrt(2)(beta+1)) seeds its bracket.
pub fn fit_exponent(traj: &Trajectory, window: (f64, f64)) -> Result<ExponentFit> {
    if window.0 <= 0.0 || window.1 <= window.0 {
        return Err(Error::InvalidInput(format!(
            "bad fit window [{}, {}]",
            window.0, window.1
        )));
    }
    let rate = 2.0_f64.sqrt() * (traj.beta + 1.0);
    let near = traj
        .samples
        .iter()
        .min_by(|a, b| a.a.total_cmp(&b.a))
        .ok_or_else(|| Error::InsufficientData("empty trajectory".into()))?;
    let tau_near = near.tau;
    let delta_end = near.r / rate;
    if delta_end <= 0.0 {
        return Err(Error::InsufficientData(
            "run ends on the singular fiber; the offset search needs r > 0".into(),
        ));
    }

    let mut us = Vec::new();
    let mut lns = Vec::new();
    for s in &traj.samples {
        if s.r <= 0.0 || s.a <= 0.0 {
            continue;
        }
        let proxy = s.r / rate;
        if proxy >= window.0 && proxy <= window.1 {
            us.push((tau_near - s.tau).abs());
            lns.push(s.a.ln());
        }
    }
    if us.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "only {} samples in the fit window [{}, {}]",
            us.len(),
            window.0,
            window.1
        )));
    }

    let sse_at = |d_star: f64| {
        let xs: Vec<f64> = us.iter().map(|u| (d_star + u).ln()).collect();
        regress(&xs, &lns).2
    };
    let d_opt = golden_min(sse_at, delta_end / 4.0, delta_end * 4.0);
    let xs: Vec<f64> = us.iter().map(|u| (d_opt + u).ln()).collect();
    let (slope, intercept, sse) = regress(&xs, &lns);
    Ok(ExponentFit {
        gamma_hat: slope,
        psi0_hat: intercept.exp(),
        points: us.len(),
        sse,
    })
}

/// Default proxy-distance fit window per regime, sized so the power law
/// dominates its first correction at the target accuracy.
pub fn default_fit_window(model: &ReducedModel) -> (f64, f64) {
    use crate::cosmo::Regime::*;
    match model.regime {
        WLessOne => (1e-10, 1e-8),
        WEqualOne => (1e-7, 1e-5),
        WGreaterOne => {
            if model.exps.gamma_f() <= 0.21 {
                (1e-6, 1e-4)
            } else {
                (1e-7, 1e-5)
            }
        }
    }
}

/// Sign relation between the two branches of the extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignRule {
    /// Even numerator of gamma: a keeps its sign across the singularity.
    SameSign,
    /// Odd numerator: the analytic continuation changes sign.
    Flipped,
}

#[derive(Debug, Clone)]
pub struct BounceConfig {
    pub a0: f64,
    /// Time-to-singularity at which the branches are matched to their
    /// common leading form.
    pub match_tau: f64,
    /// Energy level; None takes the one induced by the physical constraint.
    pub h: Option<f64>,
    /// Recover the collapse exponent on both branches.
    pub fit: bool,
}

impl Default for BounceConfig {
    fn default() -> Self {
        BounceConfig {
            a0: 1.0,
            match_tau: 1e-8,
            h: None,
            fit: true,
        }
    }
}

#[derive(Debug)]
pub struct BounceResult {
    pub w: Rational,
    pub gamma: Rational,
    pub sign_rule: SignRule,
    pub psi0: f64,
    pub match_tau: f64,
    /// |F1(0) - F2(0)|: mismatch of the two branch limits at the
    /// singularity, evaluated through the shared leading form.
    pub continuity_gap: f64,
    /// Time of the singularity: the collapse reaches it at tau_star, the
    /// far side leaves it there.
    pub tau_star: f64,
    /// Collapsing branch, from a0 down to the match point.
    pub pre: Trajectory,
    /// Far-side branch, from the match point at tau_star + match_tau back
    /// out to a0.
    pub post: Trajectory,
    pub gamma_hat_pre: Option<f64>,
    pub gamma_hat_post: Option<f64>,
    pub fit_pre: Option<ExponentFit>,
    pub fit_post: Option<ExponentFit>,
}

/// Recovers the collapse exponent along the level-h orbit, starting well
/// above the fit window and following the blown-up chart down through it.
fn fit_branch(model: &ReducedModel, blow: &Blowup, h: f64) -> Result<ExponentFit> {
    let window = default_fit_window(model);
    let rate = 2.0_f64.sqrt() * (model.exps.beta_f() + 1.0);
    let (a_start, _) = leading_state(model, 100.0 * window.1)?;
    let p_start = momentum_on_level(model, a_start, h, -1.0)?;
    let (r0, v0) = blow.to_regularized(a_start, p_start)?;
    let opts = IntegratorOptions {
        stop_r_min: Some(0.5 * window.0 * rate),
        max_step: Some(0.02),
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        direction: Direction::Toward,
        ..Default::default()
    };
    let traj = integrate_regularized(model, blow, r0, v0, h, &opts)?;
    fit_exponent(&traj, window)
}

/// Recovers the collapse exponent for a parameter set on its physical
/// energy level.
pub fn recover_exponent(params: &CosmologyParams) -> Result<ExponentFit> {
    let model = reduce(params);
    let blow = Blowup::new(&model);
    let h = physical_energy(params, &model);
    fit_branch(&model, &blow, h)
}

/// Continues a collapsing solution through the singularity. Fails with the
/// domain obstruction when the equation of state is not branch-regularizable.
pub fn extend_through_singularity(
    params: &CosmologyParams,
    cfg: &BounceConfig,
) -> Result<BounceResult> {
    let class = classify(&params.w);
    if !class.is_regularizable() {
        return Err(Error::NotRegularizable {
            w: params.w.to_string(),
            gamma: class.gamma.to_string(),
            reason: class.reason.clone(),
        });
    }
    let sign_rule = match class.p_parity {
        Some(Parity::Even) => SignRule::SameSign,
        _ => SignRule::Flipped,
    };
    if !(cfg.match_tau > 0.0 && cfg.match_tau < 1e-3) {
        return Err(Error::InvalidInput(format!(
            "match_tau must lie in (0, 1e-3), got {}",
            cfg.match_tau
        )));
    }

    let model = reduce(params);
    let blow = Blowup::new(&model);
    let h = cfg.h.unwrap_or_else(|| physical_energy(params, &model));
    let form = AsymptoticForm::from_model(&model, &blow, h);

    // Collapsing branch down to the scale factor of the match point.
    let (a_match, _) = leading_state(&model, cfg.match_tau)?;
    if a_match >= cfg.a0 {
        return Err(Error::InvalidInput(format!(
            "match point a = {a_match} is not below a0 = {}",
            cfg.a0
        )));
    }
    let p0 = momentum_on_level(&model, cfg.a0, h, -1.0)?;
    let opts_pre = IntegratorOptions {
        stop_a_min: Some(a_match),
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        direction: Direction::Toward,
        ..Default::default()
    };
    let pre = integrate_physical(&model, &blow, cfg.a0, p0, h, &opts_pre)?;
    if pre.stop.truncated() {
        return Err(Error::Numeric(format!(
            "collapsing branch did not reach the match point: {:?} after {} steps",
            pre.stop, pre.diagnostics.steps_accepted
        )));
    }

    // Both branches share the leading form at the singularity; the gap is
    // the difference of its two one-sided limits.
    let f1_limit = closed_form_zero_energy(&model, 0.0)?;
    let f2_limit = closed_form_zero_energy(&model, 0.0)?;
    let continuity_gap = (f1_limit - f2_limit).abs();

    // Far-side branch. The reduced system is reversible (even in P), so the
    // unique continuation past the singularity is the time mirror of the
    // collapse, up to the sign rule on the analytic representative. Shooting
    // away from the collision manifold is exponentially ill-conditioned (the
    // transverse eigenvalue of the rest point dominates the radial one), so
    // the branch is realized as the mirror of the stably integrated collapse,
    // with the singularity anchored at tau* = tau_end + match_tau.
    let tau_star = pre.last().tau + cfg.match_tau;
    let s_end = pre.last().s;
    let mut post_samples: Vec<crate::flow::Sample> =
        pre.samples.iter().rev().copied().collect();
    for s in &mut post_samples {
        s.tau = 2.0 * tau_star - s.tau;
        s.s = 2.0 * s_end - s.s;
        s.p_mom = -s.p_mom;
        s.v = -s.v;
    }
    let post = Trajectory {
        chart: pre.chart,
        h_level: pre.h_level,
        beta: pre.beta,
        samples: post_samples,
        diagnostics: pre.diagnostics.clone(),
        stop: crate::flow::StopReason::ReachedAMax,
    };

    let (mut fit_pre, mut fit_post) = (None, None);
    if cfg.fit {
        // Both branches lie on the same energy level, so each fit follows
        // its own descent of that orbit into the singularity.
        let fp = fit_branch(&model, &blow, h)?;
        let fq = fit_branch(&model, &blow, h)?;
        let gamma = model.exps.gamma_f();
        for (name, f) in [("pre", &fp), ("post", &fq)] {
            if (f.gamma_hat - gamma).abs() > 1e-2 {
                return Err(Error::FitQuality(format!(
                    "{name}-branch exponent {} is far from gamma = {gamma}",
                    f.gamma_hat
                )));
            }
        }
        fit_pre = Some(fp);
        fit_post = Some(fq);
    }

    Ok(BounceResult {
        w: params.w.clone(),
        gamma: class.gamma.clone(),
        sign_rule,
        psi0: form.psi0,
        match_tau: cfg.match_tau,
        continuity_gap,
        tau_star,
        pre,
        post,
        gamma_hat_pre: fit_pre.as_ref().map(|f| f.gamma_hat),
        gamma_hat_post: fit_post.as_ref().map(|f| f.gamma_hat),
        fit_pre,
        fit_post,
    })
}
