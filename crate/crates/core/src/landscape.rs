//! Model constants and the finite-dimensional reduced energies of the three
//! concentration regimes: one bubble at a slightly subcritical exponent, a
//! positive/negative bubble pair near the boundary, and one bubble at the
//! center of a small hole.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bubbles::Bubble;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, Domain};
use crate::quadrature::{alpha_n, bubble_moment, critical_exponent, gk, psi_value, QuadratureConfig};
use crate::sphere::{ball_volume, sphere_area};
use crate::vector::{check_dim, Vector};

/// Where a constant comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Quadrature,
    Default,
    Injected,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelConstants {
    pub n: usize,
    pub p: f64,
    pub alpha_n: f64,
    /// `int U^{p+1} / n`, the energy of one bubble.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub c1_nodal: f64,
    pub c2_nodal: f64,
    pub c3_nodal: f64,
    pub c4_nodal: f64,
    pub d_interaction: f64,
    pub b2_hole: f64,
    /// `int U^{p+1}`.
    pub bubble_mass: f64,
    /// `int U^{p+1} ln U`.
    pub bubble_log_mass: f64,
    pub c2_nodal_injected: bool,
}

impl ModelConstants {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_c2_nodal(n, None)
    }

    /// Constants with an optional replacement for `c2_nodal`, the one nodal
    /// coefficient that has no closed form here.
    pub fn with_c2_nodal(n: usize, c2_nodal: Option<f64>) -> Result<Self> {
        check_dim(n)?;
        if let Some(v) = c2_nodal {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("c2_nodal must be positive, got {v}")));
            }
        }
        let nf = n as f64;
        let p = critical_exponent(n);
        let alpha = alpha_n(n);
        let mass = bubble_moment(n, p + 1.0, false)?;
        let log_mass = bubble_moment(n, p + 1.0, true)?;
        let q2 = (p + 1.0) * (p + 1.0);
        let c2 = nf * mass / q2;
        let ap1 = alpha.powf(p + 1.0);
        let d_interaction = alpha * bubble_moment(n, p, false)?;
        Ok(ModelConstants {
            n,
            p,
            alpha_n: alpha,
            a: mass / nf,
            b: -(mass / q2 - log_mass / (p + 1.0)),
            c: -mass / q2,
            c1: 2.0 * ap1 / (p + 1.0),
            c2,
            c1_nodal: d_interaction,
            c2_nodal: c2_nodal.unwrap_or(c2),
            c3_nodal: (nf - 2.0) * d_interaction,
            c4_nodal: 2.0 / (p + 1.0) * ap1 * half_space_exterior(n),
            d_interaction,
            b2_hole: 2.0 / (p + 1.0) * ap1 * ball_volume(n),
            bubble_mass: mass,
            bubble_log_mass: log_mass,
            c2_nodal_injected: c2_nodal.is_some(),
        })
    }

    /// `(symbol, value, provenance)` in a fixed order.
    pub fn table(&self) -> Vec<(&'static str, f64, Provenance)> {
        use Provenance::*;
        vec![
            ("alpha_n", self.alpha_n, ClosedForm),
            ("p", self.p, ClosedForm),
            ("a", self.a, Quadrature),
            ("b", self.b, Quadrature),
            ("c", self.c, Quadrature),
            ("c1", self.c1, ClosedForm),
            ("c2", self.c2, Quadrature),
            ("c1_nodal", self.c1_nodal, Quadrature),
            ("c2_nodal", self.c2_nodal, if self.c2_nodal_injected { Injected } else { Default }),
            ("c3_nodal", self.c3_nodal, Quadrature),
            ("c4_nodal", self.c4_nodal, Quadrature),
            ("D", self.d_interaction, Quadrature),
            ("b2_hole", self.b2_hole, ClosedForm),
        ]
    }
}

/// `int_{y . nu < 0} |y - nu|^{-2n} dy` for a unit vector `nu`: slices
/// parallel to the boundary reduce it to `|S^{n-2}| / n` times a 1D integral,
/// done after `u = tan(phi)`.
fn half_space_exterior(n: usize) -> f64 {
    let nf = n as f64;
    let f = |phi: f64| {
        let (s, c) = phi.sin_cos();
        s.powi(n as i32 - 2) * c.powi(n as i32)
    };
    let pts: Vec<f64> = (0..=8).map(|k| k as f64 * std::f64::consts::FRAC_PI_2 / 8.0).collect();
    let k = gk::integrate(f, &pts, 1e-16, 1e-14, 2000).value;
    sphere_area(n - 1) * k / nf
}

pub fn constants(n: usize) -> Result<ModelConstants> {
    ModelConstants::new(n)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Nodal,
    Hole,
}

/// A reduced energy evaluated at named parameters, with its gradient in the
/// free parameters (same order as `parameters`, vector parameters expanded).
#[derive(Clone, Debug, Serialize)]
pub struct ReducedEnergyPoint {
    pub regime: Regime,
    pub parameters: Vec<(String, Vec<f64>)>,
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// `Psi(d) = c1 d^n psi - c2 ln d`.
pub fn reduced_energy_sub(k: &ModelConstants, psi_val: f64, d: f64) -> Result<f64> {
    positive("d", d)?;
    positive("psi", psi_val)?;
    Ok(k.c1 * d.powi(k.n as i32) * psi_val - k.c2 * d.ln())
}

/// `Psi` and its gradient in `(d, xi)` from one evaluation of `psi`.
pub fn reduced_point_sub(k: &ModelConstants, psi: &crate::quadrature::PsiEvaluation, d: f64) -> Result<ReducedEnergyPoint> {
    let value = reduced_energy_sub(k, psi.value, d)?;
    let n = k.n as i32;
    let mut gradient = vec![n as f64 * k.c1 * d.powi(n - 1) * psi.value - k.c2 / d];
    gradient.extend(psi.gradient.as_slice().iter().map(|g| k.c1 * d.powi(n) * g));
    Ok(ReducedEnergyPoint {
        regime: Regime::Subcritical,
        parameters: vec![("d".into(), vec![d]), ("xi".into(), psi.point.to_vec())],
        value,
        gradient,
    })
}

/// The minimizer `(c2 / (n c1 psi))^{1/n}` of `d -> Psi(d)`.
pub fn optimal_d(k: &ModelConstants, psi_val: f64) -> Result<f64> {
    positive("psi", psi_val)?;
    Ok((k.c2 / (k.n as f64 * k.c1 * psi_val)).powf(1.0 / k.n as f64))
}

/// Limiting profile of one bubble as the small parameter `s` goes to zero:
/// `delta = d s^{delta_exponent}`, `tau = t s^{tau_exponent}` and
/// `xi = anchor + tau normal + delta zeta`.
#[derive(Clone, Debug, Serialize)]
pub struct BubbleLaw {
    pub sign: i8,
    pub d: f64,
    pub delta_exponent: f64,
    pub t: Option<f64>,
    pub tau_exponent: Option<f64>,
    pub anchor: Vector,
    pub normal: Option<Vector>,
    pub zeta: Option<Vector>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PredictedBubble {
    pub bubble: Bubble,
    pub tau: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatePrediction {
    pub regime: Regime,
    pub parameter: f64,
    pub laws: Vec<BubbleLaw>,
    /// Named limiting constants (`d`, `d1`, `t1`, `d0`, ...).
    pub limits: BTreeMap<String, f64>,
}

impl RatePrediction {
    pub fn at(&self, s: f64) -> Vec<PredictedBubble> {
        self.laws
            .iter()
            .map(|l| {
                let delta = l.d * s.powf(l.delta_exponent);
                let tau = l.t.zip(l.tau_exponent).map(|(t, e)| t * s.powf(e));
                let mut xi = l.anchor;
                if let (Some(t), Some(nu)) = (tau, &l.normal) {
                    xi = xi.axpy(t, nu);
                }
                if let Some(z) = &l.zeta {
                    xi = xi.axpy(delta, z);
                }
                PredictedBubble { bubble: Bubble { delta, xi, sign: l.sign }, tau }
            })
            .collect()
    }

    pub fn bubbles(&self) -> Vec<PredictedBubble> {
        self.at(self.parameter)
    }

    /// The same laws evaluated at another parameter.
    pub fn with_parameter(&self, s: f64) -> RatePrediction {
        RatePrediction { parameter: s, ..self.clone() }
    }
}

fn check_small(name: &str, s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {s}")))
    }
}

/// One bubble at `xi_star` with `delta = optimal_d(psi(xi_star)) eps^{1/n}`.
pub fn predict_subcritical(
    domain: &Domain,
    eps: f64,
    xi_star: &Vector,
    k: &ModelConstants,
    cfg: &QuadratureConfig,
) -> Result<RatePrediction> {
    check_small("eps", eps)?;
    if domain.dim() != k.n {
        return Err(Error::DimensionMismatch { expected: k.n, found: domain.dim() });
    }
    let psi = psi_value(domain, xi_star, cfg)?;
    let d = optimal_d(k, psi.value)?;
    let mut limits = BTreeMap::new();
    limits.insert("d".into(), d);
    limits.insert("psi".into(), psi.value);
    limits.insert("psi_std_error".into(), psi.std_error);
    Ok(RatePrediction {
        regime: Regime::Subcritical,
        parameter: eps,
        laws: vec![BubbleLaw {
            sign: 1,
            d,
            delta_exponent: 1.0 / k.n as f64,
            t: None,
            tau_exponent: None,
            anchor: *xi_star,
            normal: None,
            zeta: None,
        }],
        limits,
    })
}

/// `Xi + eps_power_scale * Upsilon` for a positive bubble near `eta1` and a
/// negative one near `eta2`.
#[allow(clippy::too_many_arguments)]
pub fn reduced_energy_nodal(
    k: &ModelConstants,
    d1: f64,
    d2: f64,
    t1: f64,
    t2: f64,
    eta1: &BoundaryPoint,
    eta2: &BoundaryPoint,
    eps_power_scale: f64,
) -> Result<f64> {
    for (name, v) in [("d1", d1), ("d2", d2), ("t1", t1), ("t2", t2)] {
        positive(name, v)?;
    }
    let diff = eta1.point - eta2.point;
    let r = diff.norm();
    if !(r > 0.0) {
        return Err(Error::CoincidentCenters);
    }
    // canonical order so that swapping the two bubbles is bitwise neutral
    let (a, b) = if (d1, t1, eta1.point.to_vec()) <= (d2, t2, eta2.point.to_vec()) {
        ((d1, t1, eta1), (d2, t2, eta2))
    } else {
        ((d2, t2, eta2), (d1, t1, eta1))
    };
    let n = k.n as i32;
    let nf = k.n as f64;
    let prod = a.0 * b.0;
    let m = prod.powf((nf - 2.0) / 2.0);
    let xi = k.c1_nodal * m / r.powi(n - 2) - k.c2_nodal * prod.ln();
    let dab = a.2.point - b.2.point;
    let pair = dab.dot(&(a.2.inner_normal * a.1 - b.2.inner_normal * b.1)) / r.powi(n);
    let ups = -k.c3_nodal * m * pair + k.c4_nodal * ((a.0 / a.1).powi(n) + (b.0 / b.1).powi(n));
    Ok(xi + eps_power_scale * ups)
}

/// `r (2 c2 / ((n - 2) c1))^{1/(n-2)}`: the minimizer of
/// `s -> c1 s^{n-2} / r^{n-2} - 2 c2 ln s`, where `s^2 = d1 d2`.
pub fn nodal_s_bar(k: &ModelConstants, r: f64) -> f64 {
    let nf = k.n as f64;
    r * (2.0 * k.c2_nodal / ((nf - 2.0) * k.c1_nodal)).powf(1.0 / (nf - 2.0))
}

/// Minimizer of `(r, t1, t2) -> A (t1 + t2) + c4 [(r/t1)^n + (s^2/(r t2))^n]`
/// with `A = c3 s^{n-2} lambda`, by damped Newton in logarithmic
/// coordinates, where the function is strictly convex.
pub fn nodal_inner_minimum(k: &ModelConstants, s_bar: f64, lambda: f64) -> Result<(f64, f64, f64)> {
    positive("s_bar", s_bar)?;
    positive("lambda", lambda)?;
    let nf = k.n as f64;
    let big_a = k.c3_nodal * s_bar.powf(nf - 2.0) * lambda;
    let c4 = k.c4_nodal;
    let ls = 2.0 * s_bar.ln();
    let f = |v: &DVector<f64>| {
        big_a * (v[1].exp() + v[2].exp()) + c4 * ((nf * (v[0] - v[1])).exp() + (nf * (ls - v[0] - v[2])).exp())
    };
    let mut v = DVector::<f64>::zeros(3);
    for _ in 0..200 {
        let e1 = c4 * (nf * (v[0] - v[1])).exp();
        let e2 = c4 * (nf * (ls - v[0] - v[2])).exp();
        let a1 = big_a * v[1].exp();
        let a2 = big_a * v[2].exp();
        let g = DVector::from_vec(vec![nf * (e1 - e2), a1 - nf * e1, a2 - nf * e2]);
        let n2 = nf * nf;
        let h = DMatrix::from_row_slice(
            3,
            3,
            &[
                n2 * (e1 + e2),
                -n2 * e1,
                n2 * e2,
                -n2 * e1,
                a1 + n2 * e1,
                0.0,
                n2 * e2,
                0.0,
                a2 + n2 * e2,
            ],
        );
        let scale = big_a * (v[1].exp() + v[2].exp()) + e1 + e2;
        if g.norm() <= 1e-13 * scale {
            return Ok((v[0].exp(), v[1].exp(), v[2].exp()));
        }
        let Some(step) = h.clone().cholesky().map(|c| c.solve(&g)) else {
            return Err(Error::NoConvergence("nodal inner Hessian not positive definite".into()));
        };
        let f0 = f(&v);
        let slope = -g.dot(&step);
        let mut lam = 1.0f64.min(1.0 / step.amax().max(1e-300));
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &v - &step * lam;
            if f(&cand) <= f0 + 1e-4 * lam * slope || lam * step.amax() < 1e-15 {
                v = cand;
                accepted = true;
                break;
            }
            lam *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::NoConvergence("nodal inner minimization".into()))
}

/// `lambda = -<nu1, (eta1 - eta2)/|eta1 - eta2|^n>`.
pub fn nodal_lambda(eta1: &BoundaryPoint, eta2: &BoundaryPoint) -> f64 {
    let diff = eta1.point - eta2.point;
    let r = diff.norm();
    -eta1.inner_normal.dot(&diff) / r.powi(eta1.point.dim() as i32)
}

/// Two opposite bubbles approaching the endpoints of a boundary diameter:
/// `delta_i = d_i eps^{1/(n-2)}`, `tau_i = t_i eps^{2/((n-2)(n+1))}`,
/// `xi_i = eta_i + tau_i nu_i`, with `d1 d2 = s_bar^2`.
pub fn predict_nodal(domain: &Domain, eps: f64, k: &ModelConstants, samples: usize) -> Result<RatePrediction> {
    check_small("eps", eps)?;
    if domain.dim() != k.n {
        return Err(Error::DimensionMismatch { expected: k.n, found: domain.dim() });
    }
    let pair = domain.diameter_pair(samples)?;
    let (eta1, eta2) = (&pair.first, &pair.second);
    let r = pair.distance;
    let s_bar = nodal_s_bar(k, r);
    let lambda = nodal_lambda(eta1, eta2);
    if !(lambda > 0.0) {
        return Err(Error::Degenerate("inner normal at the diameter pair does not face the other end".into()));
    }
    let (rr, t1, t2) = nodal_inner_minimum(k, s_bar, lambda)?;
    let d1 = rr;
    let d2 = s_bar * s_bar / rr;
    let nf = k.n as f64;
    let de = 1.0 / (nf - 2.0);
    let te = 2.0 / ((nf - 2.0) * (nf + 1.0));
    let law = |sign: i8, d: f64, t: f64, eta: &BoundaryPoint| BubbleLaw {
        sign,
        d,
        delta_exponent: de,
        t: Some(t),
        tau_exponent: Some(te),
        anchor: eta.point,
        normal: Some(eta.inner_normal),
        zeta: None,
    };
    let mut limits = BTreeMap::new();
    for (key, v) in [
        ("d1", d1),
        ("d2", d2),
        ("t1", t1),
        ("t2", t2),
        ("s_bar", s_bar),
        ("lambda", lambda),
        ("diameter", r),
    ] {
        limits.insert(key.to_string(), v);
    }
    Ok(RatePrediction {
        regime: Regime::Nodal,
        parameter: eps,
        laws: vec![law(1, d1, t1, eta1), law(-1, d2, t2, eta2)],
        limits,
    })
}

/// `b1 = c1 psi(0)` for the domain without its hole.
pub fn hole_b1(k: &ModelConstants, domain: &Domain, cfg: &QuadratureConfig) -> Result<f64> {
    let origin = Vector::zeros(domain.dim());
    if !domain.contains(&origin) {
        return Err(Error::NotInDomain);
    }
    Ok(k.c1 * psi_value(domain, &origin, cfg)?.value)
}

/// `Phi(d, zeta) = b1 d^n + b2 d^{-n} (1 + |zeta|^2)^{-n}`.
pub fn hole_energy(k: &ModelConstants, b1: f64, d: f64, zeta: &Vector) -> Result<f64> {
    positive("d", d)?;
    positive("b1", b1)?;
    let n = k.n as i32;
    Ok(b1 * d.powi(n) + k.b2_hole * d.powi(-n) * (1.0 + zeta.norm_sq()).powi(-n))
}

pub fn reduced_energy_hole(
    k: &ModelConstants,
    domain: &Domain,
    d: f64,
    zeta: &Vector,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if zeta.dim() != k.n {
        return Err(Error::DimensionMismatch { expected: k.n, found: zeta.dim() });
    }
    let b1 = hole_b1(k, domain, cfg)?;
    hole_energy(k, b1, d, zeta)
}

/// Gradient of `Phi` in `(d, zeta)`.
pub fn hole_gradient(k: &ModelConstants, b1: f64, d: f64, zeta: &Vector) -> Vec<f64> {
    let n = k.n as i32;
    let nf = k.n as f64;
    let q = 1.0 + zeta.norm_sq();
    let b2 = k.b2_hole;
    let mut g = vec![nf * b1 * d.powi(n - 1) - nf * b2 * d.powi(-n - 1) * q.powi(-n)];
    let cz = -2.0 * nf * b2 * d.powi(-n) * q.powi(-n - 1);
    g.extend(zeta.as_slice().iter().map(|z| cz * z));
    g
}

/// Hessian of `Phi` in `(d, zeta)`.
pub fn hole_hessian(k: &ModelConstants, b1: f64, d: f64, zeta: &Vector) -> DMatrix<f64> {
    let n = k.n as i32;
    let nf = k.n as f64;
    let q = 1.0 + zeta.norm_sq();
    let b2 = k.b2_hole;
    let m = k.n + 1;
    let mut h = DMatrix::zeros(m, m);
    h[(0, 0)] = nf * (nf - 1.0) * b1 * d.powi(n - 2) + nf * (nf + 1.0) * b2 * d.powi(-n - 2) * q.powi(-n);
    for i in 0..k.n {
        let v = 2.0 * nf * nf * b2 * d.powi(-n - 1) * q.powi(-n - 1) * zeta[i];
        h[(0, i + 1)] = v;
        h[(i + 1, 0)] = v;
        for j in 0..k.n {
            let mut e = -2.0 * (nf + 1.0) * q.powi(-n - 2) * zeta[i] * zeta[j];
            if i == j {
                e += q.powi(-n - 1);
            }
            h[(i + 1, j + 1)] = -2.0 * nf * b2 * d.powi(-n) * e;
        }
    }
    h
}

/// The unique critical point `((b2/b1)^{1/(2n)}, 0)` of `Phi`.
pub fn hole_critical_point(k: &ModelConstants, b1: f64) -> Result<(f64, Vector)> {
    positive("b1", b1)?;
    Ok(((k.b2_hole / b1).powf(1.0 / (2.0 * k.n as f64)), Vector::zeros(k.n)))
}

/// One bubble at the hole center with `delta = d0 rho^{1/2}`.
pub fn predict_hole(domain: &Domain, rho: f64, k: &ModelConstants, cfg: &QuadratureConfig) -> Result<RatePrediction> {
    check_small("rho", rho)?;
    if domain.dim() != k.n {
        return Err(Error::DimensionMismatch { expected: k.n, found: domain.dim() });
    }
    let b1 = hole_b1(k, domain, cfg)?;
    let (d0, zeta) = hole_critical_point(k, b1)?;
    let mut limits = BTreeMap::new();
    limits.insert("d0".into(), d0);
    limits.insert("b1".into(), b1);
    limits.insert("b2".into(), k.b2_hole);
    Ok(RatePrediction {
        regime: Regime::Hole,
        parameter: rho,
        laws: vec![BubbleLaw {
            sign: 1,
            d: d0,
            delta_exponent: 0.5,
            t: None,
            tau_exponent: None,
            anchor: Vector::zeros(k.n),
            normal: None,
            zeta: Some(zeta),
        }],
        limits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::beta::beta;
    use statrs::function::gamma::gamma;
    use std::f64::consts::PI;

    fn sobolev_constant(n: usize) -> f64 {
        let nf = n as f64;
        PI * nf * (nf - 2.0) * (gamma(nf / 2.0) / gamma(nf)).powf(2.0 / nf)
    }

    #[test]
    fn four_dimensional_values() {
        let k = constants(4).unwrap();
        assert!((k.alpha_n - 8f64.sqrt()).abs() < 1e-14);
        assert!((k.p + 1.0 - 4.0).abs() < 1e-15);
        assert!((k.c1 - 32.0).abs() < 1e-12);
        assert!((k.c2 / (8.0 * PI * PI / 3.0) - 1.0).abs() < 1e-12);
        assert!((k.a / (8.0 * PI * PI / 3.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_constant_is_sobolev_power() {
        for n in 3..=8 {
            let k = constants(n).unwrap();
            let s = sobolev_constant(n);
            assert!((k.a / (s.powf(n as f64 / 2.0) / n as f64) - 1.0).abs() < 1e-11, "n={n}");
            assert!((-k.c * (k.p + 1.0).powi(2) / (n as f64 * k.a) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn half_space_constant_matches_beta_reduction() {
        for n in 3..=8 {
            let nf = n as f64;
            let k = constants(n).unwrap();
            let exact = 2.0 / (k.p + 1.0)
                * k.alpha_n.powf(k.p + 1.0)
                * sphere_area(n - 1)
                * 0.5
                * beta((nf - 1.0) / 2.0, (nf + 1.0) / 2.0)
                / nf;
            assert!((k.c4_nodal / exact - 1.0).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn interaction_constant_by_radial_beta() {
        // D = alpha^{p+1} |S| B(n/2, 1)/2 = alpha^{p+1} |S| / n
        for n in 3..=6 {
            let k = constants(n).unwrap();
            let exact = k.alpha_n.powf(k.p + 1.0) * sphere_area(n) / n as f64;
            assert!((k.d_interaction / exact - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn positivity() {
        for n in 3..=6 {
            let k = constants(n).unwrap();
            for (name, v, _) in k.table() {
                if !["b", "c"].contains(&name) {
                    assert!(v > 0.0, "{name} = {v} for n={n}");
                }
            }
        }
    }

    #[test]
    fn injected_nodal_coefficient() {
        let k = ModelConstants::with_c2_nodal(4, Some(1.5)).unwrap();
        assert_eq!(k.c2_nodal, 1.5);
        assert!(k.table().iter().any(|(s, _, p)| *s == "c2_nodal" && *p == Provenance::Injected));
        assert!(ModelConstants::with_c2_nodal(4, Some(-1.0)).is_err());
        assert!(matches!(constants(2), Err(Error::UnsupportedDimension(2))));
        assert!(matches!(constants(9), Err(Error::UnsupportedDimension(9))));
    }

    #[test]
    fn subcritical_energy_and_minimizer() {
        let k = constants(3).unwrap();
        assert_eq!(reduced_energy_sub(&k, 2.0, 1.0).unwrap(), k.c1 * 2.0);
        let unit = k.c2 / (3.0 * k.c1);
        assert!((optimal_d(&k, unit).unwrap() - 1.0).abs() < 1e-15);
        let d = optimal_d(&k, 0.7).unwrap();
        let h = 1e-6 * d;
        let der = (reduced_energy_sub(&k, 0.7, d + h).unwrap() - reduced_energy_sub(&k, 0.7, d - h).unwrap()) / (2.0 * h);
        assert!(der.abs() < 1e-8);
        let d4 = optimal_d(&k, 2.8).unwrap();
        assert!((d4 / d - 4f64.powf(-1.0 / 3.0)).abs() < 1e-14);
        assert!(reduced_energy_sub(&k, 1.0, 0.0).is_err());
        assert!(optimal_d(&k, -1.0).is_err());
    }

    #[test]
    fn subcritical_prediction_for_ball() {
        let k = constants(3).unwrap();
        let d = Domain::ball(&[0.0; 3], 1.0).unwrap();
        let cfg = QuadratureConfig::default().with_budget(1 << 12);
        let pr = predict_subcritical(&d, 0.01, &Vector::zeros(3), &k, &cfg).unwrap();
        let expect = (k.c2 / (3.0 * k.c1 * 4.0 * PI / 3.0)).powf(1.0 / 3.0);
        let b = pr.bubbles();
        assert!((b[0].bubble.delta / 0.01f64.powf(1.0 / 3.0) - expect).abs() < 1e-12);
        let half = pr.at(0.005);
        assert!((half[0].bubble.delta / b[0].bubble.delta - 0.5f64.powf(1.0 / 3.0)).abs() < 1e-14);
        assert!((pr.at(1.0)[0].bubble.delta - expect).abs() < 1e-12);
        assert!(predict_subcritical(&d, 1.5, &Vector::zeros(3), &k, &cfg).is_err());
    }

    fn bp(p: &[f64], nu: &[f64]) -> BoundaryPoint {
        BoundaryPoint { point: Vector::from_slice(p), inner_normal: Vector::from_slice(nu) }
    }

    #[test]
    fn nodal_energy_basics() {
        let k = constants(3).unwrap();
        let e1 = bp(&[-1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]);
        let e2 = bp(&[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]);
        let v = reduced_energy_nodal(&k, 2.0, 0.5, 0.3, 0.7, &e1, &e2, 0.0).unwrap();
        assert!((v - k.c1_nodal / 2.0).abs() < 1e-13);
        let a = reduced_energy_nodal(&k, 1.3, 0.4, 0.2, 0.9, &e1, &e2, 0.37).unwrap();
        let b = reduced_energy_nodal(&k, 0.4, 1.3, 0.9, 0.2, &e2, &e1, 0.37).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        // the pairing term on antipodal points is +c3 s^{n-2} lambda (t1 + t2)
        let lam = nodal_lambda(&e1, &e2);
        assert!((lam - 0.25).abs() < 1e-15);
        let (d1, d2, t1, t2) = (0.8, 0.5, 0.3, 0.6);
        let full = reduced_energy_nodal(&k, d1, d2, t1, t2, &e1, &e2, 1.0).unwrap();
        let base = reduced_energy_nodal(&k, d1, d2, t1, t2, &e1, &e2, 0.0).unwrap();
        let m = (d1 * d2).sqrt();
        let expect = k.c3_nodal * m * lam * (t1 + t2) + k.c4_nodal * ((d1 / t1).powi(3) + (d2 / t2).powi(3));
        assert!((full - base - expect).abs() < 1e-12 * expect);
        let same = bp(&[-1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]);
        assert!(matches!(reduced_energy_nodal(&k, 1.0, 1.0, 1.0, 1.0, &e1, &same, 0.0), Err(Error::CoincidentCenters)));
    }

    #[test]
    fn s_bar_is_stationary_on_the_product_curve() {
        let k = constants(4).unwrap();
        let r = 2.0;
        let s = nodal_s_bar(&k, r);
        let g = |s: f64| k.c1_nodal * s.powi(2) / r.powi(2) - 2.0 * k.c2_nodal * s.ln();
        let h = 1e-5 * s;
        assert!(((g(s + h) - g(s - h)) / (2.0 * h)).abs() < 1e-8);
        // forced value
        let mut k1 = k.clone();
        k1.c1_nodal = k1.c2_nodal * 2.0 / 2.0;
        assert!((nodal_s_bar(&k1, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inner_minimum_matches_stationarity_conditions() {
        for n in [3usize, 4, 5] {
            let k = constants(n).unwrap();
            let nf = n as f64;
            let (s, lam) = (0.7, 0.3);
            let (r, t1, t2) = nodal_inner_minimum(&k, s, lam).unwrap();
            let a = k.c3_nodal * s.powf(nf - 2.0) * lam;
            let t = (nf * k.c4_nodal * s.powf(nf) / a).powf(1.0 / (nf + 1.0));
            assert!((r / s - 1.0).abs() < 1e-10, "n={n} r={r}");
            assert!((t1 / t - 1.0).abs() < 1e-10 && (t2 / t - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn nodal_prediction_on_ball() {
        let k = constants(3).unwrap();
        let d = Domain::ball(&[0.0; 3], 1.0).unwrap();
        let pr = predict_nodal(&d, 0.01, &k, 2000).unwrap();
        let b = pr.bubbles();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].bubble.sign, 1);
        assert_eq!(b[1].bubble.sign, -1);
        let half = pr.at(0.005);
        for i in 0..2 {
            assert!((half[i].bubble.delta / b[i].bubble.delta - 0.5).abs() < 1e-13);
            let tr = half[i].tau.unwrap() / b[i].tau.unwrap();
            assert!((tr - 0.5f64.powf(2.0 / 4.0)).abs() < 1e-13);
        }
        let tiny = pr.at(1e-12);
        assert!((tiny[0].bubble.xi - Vector::from_slice(&[-1.0, 0.0, 0.0])).norm() < 1e-2);
        assert!((tiny[1].bubble.xi - Vector::from_slice(&[1.0, 0.0, 0.0])).norm() < 1e-2);
        let s = pr.limits["s_bar"];
        assert!((pr.limits["d1"] * pr.limits["d2"] / (s * s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hole_landscape() {
        let k = constants(3).unwrap();
        let b1 = k.b2_hole;
        let (d0, z) = hole_critical_point(&k, b1).unwrap();
        assert!((d0 - 1.0).abs() < 1e-15 && z.norm() == 0.0);
        let z0 = Vector::zeros(3);
        assert!((hole_energy(&k, 2.0, 1.0, &z0).unwrap() - (2.0 + k.b2_hole)).abs() < 1e-14);
        let mut prev = f64::INFINITY;
        for s in [0.0, 0.1, 0.5, 1.0, 3.0] {
            let v = hole_energy(&k, 2.0, 0.8, &Vector::from_slice(&[s, 0.0, 0.0])).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(hole_energy(&k, 2.0, 1e-6, &z0).unwrap() > 1e10);
        assert!(hole_energy(&k, 2.0, 1e6, &z0).unwrap() > 1e10);
        let b1 = 3.7;
        let (d0, _) = hole_critical_point(&k, b1).unwrap();
        let g = hole_gradient(&k, b1, d0, &z0);
        assert!(g[0].abs() < 1e-12 * b1);
        let h = hole_hessian(&k, b1, d0, &z0);
        let eig = h.symmetric_eigen().eigenvalues;
        let scale = eig.amax();
        assert_eq!(eig.iter().filter(|e| **e > 1e-8 * scale).count(), 1);
        assert_eq!(eig.iter().filter(|e| **e < -1e-8 * scale).count(), 3);
        assert!(hole_critical_point(&k, 0.0).is_err());
    }

    #[test]
    fn hole_derivatives_match_finite_differences() {
        let k = constants(4).unwrap();
        let b1 = 1.9;
        let d = 0.9;
        let z = Vector::from_slice(&[0.2, -0.1, 0.05, 0.3]);
        let g = hole_gradient(&k, b1, d, &z);
        let h = hole_hessian(&k, b1, d, &z);
        let pt = |i: usize, s: f64| {
            let mut dd = d;
            let mut zz = z;
            if i == 0 {
                dd += s;
            } else {
                zz[i - 1] += s;
            }
            (dd, zz)
        };
        let step = 1e-5;
        for i in 0..5 {
            let (dp, zp) = pt(i, step);
            let (dm, zm) = pt(i, -step);
            let fd = (hole_energy(&k, b1, dp, &zp).unwrap() - hole_energy(&k, b1, dm, &zm).unwrap()) / (2.0 * step);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()));
            let gp = hole_gradient(&k, b1, dp, &zp);
            let gm = hole_gradient(&k, b1, dm, &zm);
            for j in 0..5 {
                let fdh = (gp[j] - gm[j]) / (2.0 * step);
                assert!((fdh - h[(j, i)]).abs() < 1e-5 * (1.0 + h[(j, i)].abs()));
            }
        }
    }

    #[test]
    fn ball_hole_coefficient() {
        let k = constants(3).unwrap();
        let d = Domain::ball(&[0.0; 3], 1.0).unwrap();
        let cfg = QuadratureConfig::default().with_budget(1 << 12);
        let b1 = hole_b1(&k, &d, &cfg).unwrap();
        assert!((b1 / (k.c1 * 4.0 * PI / 3.0) - 1.0).abs() < 1e-13);
        let pr = predict_hole(&d, 1e-2, &k, &cfg).unwrap();
        assert!((pr.limits["d0"] - (k.b2_hole / b1).powf(1.0 / 6.0)).abs() < 1e-14);
        let shifted = Domain::ball(&[3.0, 0.0, 0.0], 1.0).unwrap();
        assert!(matches!(hole_b1(&k, &shifted, &cfg), Err(Error::NotInDomain)));
    }
}
