//! Coordinate blow-up of the singularity at `a = 0`: the transform
//! `a = r^gamma`, `P = r^(-beta gamma) v` with the fibered time
//! `d tau = r ds` maps the singular central-force system to a vector field
//! that extends continuously to `r = 0`, gluing in the collision manifold
//! `{r = 0, v = +-sqrt(2)}` whose points are rest points of the extended
//! field.

use crate::cosmo::{PotentialTerm, ReducedModel};
use crate::ratnum::{ExponentTriple, Rational};
use crate::{Error, Result};

/// A point of the blown-up phase space.
#[derive(Debug, Clone, Copy)]
pub struct RegState {
    pub r: f64,
    pub v: f64,
    pub s: f64,
}

/// One power term `coef * r^exponent`, exponent strictly positive.
#[derive(Debug, Clone)]
struct RTerm {
    coef: f64,
    exponent: f64,
}

fn rpow(r: f64, e: f64) -> f64 {
    r.max(0.0).powf(e)
}

/// v^2 - 2 in factored form, exactly zero at the representable rest-point
/// values +-sqrt(2).
fn v_sq_minus_2(v: f64) -> f64 {
    let s2 = std::f64::consts::SQRT_2;
    (v - s2) * (v + s2)
}

/// The blow-up chart of a reduced model: precomputed exponents and the
/// correction sums G (in the v equation) and G-tilde (in the energy
/// relation), both vanishing at r = 0.
#[derive(Debug, Clone)]
pub struct Blowup {
    pub exps: ExponentTriple,
    /// gamma * alpha as f64, the exponent of the energy correction.
    alpha_gamma: f64,
    g_terms: Vec<RTerm>,
    g_tilde_terms: Vec<RTerm>,
}

impl Blowup {
    pub fn new(model: &ReducedModel) -> Self {
        let exps = model.exps.clone();
        let gamma = &exps.gamma;
        let alpha_plus_1 = &exps.alpha + &Rational::one();

        // Sub-force -s r^(-m) in a pulls back to -s r^(gamma (alpha + 1 - m))
        // in the v equation; dominance makes every exponent positive.
        let g_terms = model
            .sub_forces
            .iter()
            .map(|f| {
                let e = gamma * &(&alpha_plus_1 - &f.exponent_exact);
                assert!(
                    f.coef == 0.0 || e.cmp_int(0) == std::cmp::Ordering::Greater,
                    "force exponent must pull back positive, got {e}"
                );
                RTerm {
                    coef: f.coef,
                    exponent: e.to_f64(),
                }
            })
            .collect();

        // Potential term c a^(-e) enters the energy relation as
        // 2 c r^(gamma (alpha - e)).
        let g_tilde_terms = model
            .potential_terms
            .iter()
            .filter_map(|t| match t {
                PotentialTerm::Power {
                    coef,
                    exponent_exact,
                    ..
                } => {
                    let e = gamma * &(&exps.alpha - exponent_exact);
                    assert!(
                        *coef == 0.0 || e.cmp_int(0) == std::cmp::Ordering::Greater,
                        "potential exponent must pull back positive, got {e}"
                    );
                    Some(RTerm {
                        coef: 2.0 * coef,
                        exponent: e.to_f64(),
                    })
                }
                PotentialTerm::Log { coef } => {
                    assert!(
                        *coef == 0.0,
                        "logarithmic potential term does not pull back to a power"
                    );
                    None
                }
            })
            .collect();

        let alpha_gamma = (gamma * &exps.alpha).to_f64();
        Blowup {
            exps,
            alpha_gamma,
            g_terms,
            g_tilde_terms,
        }
    }

    /// Correction sum in the v equation; G(0) = 0.
    pub fn g(&self, r: f64) -> f64 {
        self.g_terms
            .iter()
            .map(|t| t.coef * rpow(r, t.exponent))
            .sum()
    }

    /// Correction sum in the energy relation; G-tilde(0) = 0.
    pub fn g_tilde(&self, r: f64) -> f64 {
        self.g_tilde_terms
            .iter()
            .map(|t| t.coef * rpow(r, t.exponent))
            .sum()
    }

    /// Smallest exponent appearing in G-tilde (the leading correction order
    /// near the collision manifold).
    pub fn g_tilde_min_exponent(&self) -> Option<f64> {
        self.g_tilde_terms
            .iter()
            .filter(|t| t.coef != 0.0)
            .map(|t| t.exponent)
            .fold(None, |m, e| Some(m.map_or(e, |x: f64| x.min(e))))
    }

    /// Physical state (a, P) to blown-up coordinates.
    pub fn to_regularized(&self, a: f64, p_mom: f64) -> Result<(f64, f64)> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!(
                "blow-up chart needs a > 0, got {a}"
            )));
        }
        let r = a.powf(self.exps.gamma_f().recip());
        let v = a.powf(self.exps.beta_f()) * p_mom;
        Ok((r, v))
    }

    /// Blown-up coordinates back to (a, P). The fiber r = 0 is the glued
    /// collision manifold and has no physical preimage.
    pub fn from_regularized(&self, r: f64, v: f64) -> Result<(f64, f64)> {
        if r == 0.0 {
            return Err(Error::SingularChart);
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("blow-up chart needs r >= 0, got {r}")));
        }
        let a = r.powf(self.exps.gamma_f());
        let p_mom = r.powf(-self.exps.beta_f() * self.exps.gamma_f()) * v;
        Ok((a, p_mom))
    }

    /// Residual of the energy relation in the blown-up chart,
    /// `v^2 - 2 - 2 h r^(alpha gamma) - G-tilde(r)`; zero along energy-h
    /// solutions and, at r = 0, zero exactly on v = +-sqrt(2).
    pub fn manifold_residual(&self, r: f64, v: f64, h: f64) -> f64 {
        v_sq_minus_2(v) - 2.0 * h * rpow(r, self.alpha_gamma) - self.g_tilde(r)
    }

    /// The regularized vector field in the fibered time s:
    /// r' = (beta + 1) r v, v' = beta (v^2 - 2) - G(r).
    pub fn field(&self, r: f64, v: f64) -> (f64, f64) {
        let beta = self.exps.beta_f();
        (
            (beta + 1.0) * r * v,
            beta * v_sq_minus_2(v) - self.g(r),
        )
    }

    /// Rate d tau / d s of physical-to-fibered time along the chart.
    pub fn dtau_ds(&self, r: f64) -> f64 {
        r
    }

    /// Rate d s / d tau in physical variables.
    pub fn ds_dtau_physical(&self, a: f64) -> f64 {
        a.powf(-(1.0 + self.exps.beta_f()))
    }
}

/// The glued boundary fiber: two circles of rest points at r = 0.
#[derive(Debug, Clone, Copy)]
pub struct ManifoldSpec {
    /// v levels of the two rest-point branches.
    pub v_levels: [f64; 2],
}

impl ManifoldSpec {
    pub fn new() -> Self {
        let s2 = 2.0_f64.sqrt();
        ManifoldSpec { v_levels: [-s2, s2] }
    }

    /// Rest points as (r, v) pairs.
    pub fn rest_points(&self) -> [(f64, f64); 2] {
        [(0.0, self.v_levels[0]), (0.0, self.v_levels[1])]
    }
}

impl Default for ManifoldSpec {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cosmo::{
        hamiltonian, momentum_on_level, potential_value, reduce, reduced_accel, CosmologyParams,
    };

    fn chart(w: &str) -> (crate::cosmo::ReducedModel, Blowup) {
        let m = reduce(&CosmologyParams::default_with_w(w.parse().unwrap()));
        let b = Blowup::new(&m);
        (m, b)
    }

    #[test]
    fn round_trip_chart() {
        for w in ["0", "1/2", "1", "2", "7/3", "-1/2"] {
            let (_, b) = chart(w);
            for (a, p) in [(0.3, -1.7), (1.0, 0.0), (2.5, 4.2), (1e-4, -900.0)] {
                let (r, v) = b.to_regularized(a, p).unwrap();
                let (a2, p2) = b.from_regularized(r, v).unwrap();
                assert!((a2 - a).abs() <= 1e-12 * a, "w = {w}");
                assert!((p2 - p).abs() <= 1e-10 * p.abs().max(1.0), "w = {w}");
            }
        }
    }

    #[test]
    fn chart_identity_cases() {
        // gamma = 1/3, beta = 2 for every w <= 1.
        let (_, b) = chart("0");
        let (r, v) = b.to_regularized(1.0, 5.0).unwrap();
        assert_eq!((r, v), (1.0, 5.0));
        let (r, _) = b.to_regularized(2.0, 0.0).unwrap();
        assert!((r - 8.0).abs() < 1e-12);

        // w = 7/3: gamma = 1/5.
        let (_, b) = chart("7/3");
        let (r, _) = b.to_regularized(2.0, 0.0).unwrap();
        assert!((r - 32.0).abs() < 1e-10);
    }

    #[test]
    fn fiber_is_singular() {
        let (_, b) = chart("0");
        assert!(matches!(
            b.from_regularized(0.0, 2.0_f64.sqrt()),
            Err(Error::SingularChart)
        ));
        assert!(b.from_regularized(-0.1, 1.0).is_err());
        assert!(b.to_regularized(0.0, 1.0).is_err());
        assert!(b.to_regularized(-1.0, 1.0).is_err());
    }

    #[test]
    fn rest_points_are_exact_zeros() {
        for w in ["0", "1/2", "1", "2", "7/3"] {
            let (_, b) = chart(w);
            for (r, v) in ManifoldSpec::new().rest_points() {
                let (dr, dv) = b.field(r, v);
                assert_eq!(dr, 0.0, "w = {w}");
                assert_eq!(dv, 0.0, "w = {w}");
                assert_eq!(b.manifold_residual(r, v, 0.0), 0.0, "w = {w}");
                // Any energy level: the h correction dies with r^(alpha gamma).
                assert_eq!(b.manifold_residual(r, v, 3.7), 0.0, "w = {w}");
            }
        }
    }

    #[test]
    fn field_matches_pushforward() {
        // r d(r, v)/d tau computed from the physical flow by the chain rule
        // must reproduce the extended field, for any (a, P).
        for w in ["0", "1/2", "1", "2", "7/3", "-1/2"] {
            let (m, b) = chart(w);
            let beta = b.exps.beta_f();
            let inv_gamma = b.exps.gamma_f().recip();
            for (a, p) in [(0.2, -3.0), (0.8, 1.3), (1.5, 0.0), (0.05, -40.0)] {
                let (r, v) = b.to_regularized(a, p).unwrap();
                let accel = reduced_accel(&m, a).unwrap();
                let dr_dtau = inv_gamma * a.powf(inv_gamma - 1.0) * p;
                let dv_dtau = beta * a.powf(beta - 1.0) * p * p + a.powf(beta) * accel;
                let (fr, fv) = b.field(r, v);
                assert!(
                    (fr - r * dr_dtau).abs() <= 1e-10 * fr.abs().max(1.0),
                    "w = {w}, a = {a}: {fr} vs {}",
                    r * dr_dtau
                );
                assert!(
                    (fv - r * dv_dtau).abs() <= 1e-9 * fv.abs().max(1.0),
                    "w = {w}, a = {a}: {fv} vs {}",
                    r * dv_dtau
                );
            }
        }
    }

    #[test]
    fn residual_vanishes_on_energy_levels() {
        for w in ["0", "1/2", "1", "2", "7/3"] {
            let (m, b) = chart(w);
            for h in [0.0, -0.5, 2.0] {
                for a in [0.05, 0.3, 1.0] {
                    let p = momentum_on_level(&m, a, h, -1.0).unwrap();
                    let v_scale = potential_value(&m, a).unwrap().abs().max(1.0);
                    assert!((hamiltonian(&m, a, p).unwrap() - h).abs() < 1e-12 * v_scale);
                    let (r, v) = b.to_regularized(a, p).unwrap();
                    let res = b.manifold_residual(r, v, h);
                    let scale = v * v + 2.0;
                    assert!(
                        res.abs() <= 1e-10 * scale,
                        "w = {w}, h = {h}, a = {a}: residual {res}"
                    );
                }
            }
        }
    }

    #[test]
    fn g_tilde_leading_exponent_per_regime() {
        // kappa_1 / 3 where that beats the radiation term (w > 1/3), 2/3
        // otherwise and at w = 1, kappa_2 gamma above.
        let (m, b) = chart("1/2");
        assert!((b.g_tilde_min_exponent().unwrap() - m.kappa / 3.0).abs() < 1e-12);
        let (_, b) = chart("0");
        assert!((b.g_tilde_min_exponent().unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let (_, b) = chart("1");
        assert!((b.g_tilde_min_exponent().unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let (m, b) = chart("2");
        assert!((b.g_tilde_min_exponent().unwrap() - m.kappa * m.exps.gamma_f()).abs() < 1e-12);
        let (m, b) = chart("7/3");
        assert!((b.g_tilde_min_exponent().unwrap() - m.kappa * m.exps.gamma_f()).abs() < 1e-12);
    }

    #[test]
    fn g_relates_to_energy_relation_derivative() {
        // Differentiating the energy relation in s reproduces the v equation;
        // numerically: 2 v v' = 2 h (alpha gamma) r^(ag - 1) r' + G-tilde'(r) r'.
        let (m, b) = chart("2");
        let h = -0.3;
        let a = 0.4;
        let p = momentum_on_level(&m, a, h, 1.0).unwrap();
        let (r, v) = b.to_regularized(a, p).unwrap();
        let (fr, fv) = b.field(r, v);
        let dq = 1e-6 * r;
        let dres = (b.manifold_residual(r + dq, v, h) - b.manifold_residual(r - dq, v, h))
            / (2.0 * dq);
        // d/ds residual = 2 v fv + (d residual / d r) fr must vanish.
        let total = 2.0 * v * fv + dres * fr;
        assert!(total.abs() < 1e-5 * (v * fv).abs().max(1.0), "{total}");
    }

    #[test]
    fn field_continuous_but_not_smooth_at_fiber() {
        // For w = 1/2 the leading G exponent is 1/2: the field tends to its
        // rest-point value at r -> 0 while the difference quotient in r
        // diverges.
        let (m, b) = chart("1/2");
        let min_g_exp = b
            .g_terms
            .iter()
            .filter(|t| t.coef != 0.0)
            .map(|t| t.exponent)
            .fold(f64::INFINITY, f64::min);
        assert!((min_g_exp - m.kappa / 3.0).abs() < 1e-12); // gamma (5 - (3(1+w)-1)) = kappa_1/3
        assert!(min_g_exp < 1.0);

        let v = 2.0_f64.sqrt();
        let mut prev_quot = 0.0;
        for k in 1..=6 {
            let r = 10.0_f64.powi(-2 * k);
            let (_, fv) = b.field(r, v);
            assert!(fv.abs() < 1.0, "field stays bounded near the fiber");
            let quot = fv.abs() / r;
            assert!(quot > prev_quot, "difference quotient must grow");
            prev_quot = quot;
        }
        let (_, fv) = b.field(1e-12, v);
        assert!(fv.abs() < 1e-5, "field value tends to zero");
    }

    #[test]
    fn zero_coef_terms_do_not_trip_positivity() {
        // w = -1/3 produces a zero-coefficient force at the would-be
        // logarithmic exponent; chart construction must accept it.
        let (m, b) = chart("-1/3");
        assert!(b.g(0.5).is_finite());
        assert!(potential_value(&m, 0.5).unwrap().is_finite());
    }
}
