//! Bubble profiles, the kernel of the linearized equation, the energy of
//! one- and two-bubble configurations, and residuals of the energy
//! expansions against the reduced energies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Shape};
use crate::landscape::{hole_energy, reduced_energy_sub, ModelConstants};
use crate::quadrature::{
    alpha_n, bubble_mass, bubble_moment, critical_exponent, exterior_lp_mass, gk, psi_value, QuadratureConfig, Region,
};
use crate::sphere::sphere_area;
use crate::vector::Vector;

/// `sign * alpha_n delta^{(n-2)/2} / (delta^2 + |x - xi|^2)^{(n-2)/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub delta: f64,
    pub xi: Vector,
    pub sign: i8,
}

impl Bubble {
    pub fn new(delta: f64, xi: Vector, sign: i8) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {sign}")));
        }
        Ok(Bubble { delta, xi, sign })
    }

    pub fn positive(delta: f64, xi: Vector) -> Result<Self> {
        Self::new(delta, xi, 1)
    }

    pub fn dim(&self) -> usize {
        self.xi.dim()
    }

    /// Unsigned profile at squared distance `r2` from the center.
    #[inline]
    fn profile_r2(&self, r2: f64) -> f64 {
        let n = self.dim() as f64;
        let h = (n - 2.0) / 2.0;
        alpha_n(self.dim()) * (self.delta / (self.delta * self.delta + r2)).powf(h)
    }

    pub fn magnitude(&self, x: &Vector) -> f64 {
        self.profile_r2((*x - self.xi).norm_sq())
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.sign as f64 * self.magnitude(x)
    }
}

pub fn bubble_value(b: &Bubble, x: &Vector) -> f64 {
    b.value(x)
}

/// `delta d/d(delta) U` for `i = 0` and `delta d/d(xi_i) U` for `1 <= i <= n`.
pub fn z_value(i: usize, delta: f64, xi: &Vector, x: &Vector) -> Result<f64> {
    let n = xi.dim();
    if i > n {
        return Err(Error::InvalidArgument(format!("kernel index {i} out of range 0..={n}")));
    }
    let nf = n as f64;
    let alpha = alpha_n(n);
    let y = *x - *xi;
    let r2 = y.norm_sq();
    let den = (delta * delta + r2).powf(nf / 2.0);
    Ok(if i == 0 {
        alpha * (nf - 2.0) / 2.0 * delta.powf((nf - 2.0) / 2.0) * (r2 - delta * delta) / den
    } else {
        alpha * (nf - 2.0) * delta.powf(nf / 2.0) * y[i - 1] / den
    })
}

/// Second-order central-difference Laplacian with step `h`.
pub fn laplacian_h<F: Fn(&Vector) -> f64>(f: &F, x: &Vector, h: f64) -> f64 {
    let f0 = f(x);
    let mut s = 0.0;
    for i in 0..x.dim() {
        let mut p = *x;
        let mut m = *x;
        p[i] += h;
        m[i] -= h;
        s += f(&p) - 2.0 * f0 + f(&m);
    }
    s / (h * h)
}

/// Largest pointwise residual of a finite-difference check together with the
/// largest magnitude of the tested function on the same samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualCheck {
    pub max_residual: f64,
    pub max_abs: f64,
}

impl ResidualCheck {
    pub fn relative(&self) -> f64 {
        self.max_residual / self.max_abs
    }
}

fn check_samples(xi: &Vector, pts: &[Vector]) -> Result<()> {
    if pts.is_empty() {
        return Err(Error::InvalidArgument("no sample points".into()));
    }
    for x in pts {
        if x.dim() != xi.dim() {
            return Err(Error::DimensionMismatch { expected: xi.dim(), found: x.dim() });
        }
        if x.dist(xi) < 1e-3 {
            return Err(Error::InvalidArgument("sample point within 1e-3 of the center".into()));
        }
    }
    Ok(())
}

fn fd_residual<F, G>(xi: &Vector, delta: f64, pts: &[Vector], f: F, rhs: G) -> Result<ResidualCheck>
where
    F: Fn(&Vector) -> f64,
    G: Fn(&Vector) -> f64,
{
    check_samples(xi, pts)?;
    let mut out = ResidualCheck { max_residual: 0.0, max_abs: 0.0 };
    for x in pts {
        let h = 1e-4 * (delta * delta + (*x - *xi).norm_sq()).sqrt();
        let r = (-laplacian_h(&f, x, h) - rhs(x)).abs();
        out.max_residual = out.max_residual.max(r);
        out.max_abs = out.max_abs.max(f(x).abs());
    }
    Ok(out)
}

/// `max |-Delta_h U - U^p|` over the samples.
pub fn pde_residual(delta: f64, xi: &Vector, pts: &[Vector]) -> Result<ResidualCheck> {
    let b = Bubble::positive(delta, *xi)?;
    let p = critical_exponent(xi.dim());
    fd_residual(xi, delta, pts, |x| b.magnitude(x), |x| b.magnitude(x).powf(p))
}

/// `max |-Delta_h Z^i - p U^{p-1} Z^i|` over the samples.
pub fn linearization_residual(i: usize, delta: f64, xi: &Vector, pts: &[Vector]) -> Result<ResidualCheck> {
    z_value(i, delta, xi, xi)?;
    let b = Bubble::positive(delta, *xi)?;
    let p = critical_exponent(xi.dim());
    let z = |x: &Vector| z_value(i, delta, xi, x).unwrap();
    fd_residual(xi, delta, pts, z, |x| p * b.magnitude(x).powf(p - 1.0) * z(x))
}

/// Radial test functions `u(|x|)` for the rescaling checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RadialTest {
    /// `(1 + r^2)^{-m}`.
    Power(f64),
    /// `exp(-r^2)`.
    Gaussian,
    /// `(1 + r^2)^{-m} cos(r)`.
    Oscillating(f64),
}

impl RadialTest {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            RadialTest::Power(m) => (1.0 + r * r).powf(-m),
            RadialTest::Gaussian => (-r * r).exp(),
            RadialTest::Oscillating(m) => (1.0 + r * r).powf(-m) * r.cos(),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match *self {
            RadialTest::Power(m) => -2.0 * m * r * (1.0 + r * r).powf(-m - 1.0),
            RadialTest::Gaussian => -2.0 * r * (-r * r).exp(),
            RadialTest::Oscillating(m) => {
                let q = 1.0 + r * r;
                -2.0 * m * r * q.powf(-m - 1.0) * r.cos() - q.powf(-m) * r.sin()
            }
        }
    }

    /// Decay exponent at infinity (`u = O(r^{-k})`).
    fn decay(&self) -> f64 {
        match *self {
            RadialTest::Power(m) | RadialTest::Oscillating(m) => 2.0 * m,
            RadialTest::Gaussian => f64::INFINITY,
        }
    }

    /// Decay exponent of the derivative; the cosine factor costs one order.
    fn derivative_decay(&self) -> f64 {
        match *self {
            RadialTest::Power(m) => 2.0 * m + 1.0,
            RadialTest::Oscillating(m) => 2.0 * m,
            RadialTest::Gaussian => f64::INFINITY,
        }
    }
}

/// `|S^{n-1}| int_0^inf g(r) r^{n-1} dr` over fixed dyadic panels
/// `[2^k, 2^{k+1}]`, `|k| <= 60`.
fn radial_integral<F: Fn(f64) -> f64>(n: usize, g: F) -> f64 {
    let mut pts = vec![0.0];
    pts.extend((-60..=60).map(|k| 2f64.powi(k)));
    let r = gk::integrate(|r: f64| g(r) * r.powi(n as i32 - 1), &pts, 0.0, 1e-14, 20_000);
    sphere_area(n) * r.value
}

/// Norms of one test function before and after `u -> delta^{-(n-2)/2} u((x - xi)/delta)`.
#[derive(Clone, Debug, Serialize)]
pub struct RescalingRow {
    pub test: RadialTest,
    pub delta: f64,
    pub s: f64,
    /// `n/s - (n-2)/2`.
    pub alpha: f64,
    pub grad_norm: f64,
    pub grad_norm_rescaled: f64,
    pub ls_norm: f64,
    pub ls_norm_rescaled: f64,
}

impl RescalingRow {
    /// `|grad P u| / |grad u|`, equal to one for an isometry.
    pub fn grad_ratio(&self) -> f64 {
        self.grad_norm_rescaled / self.grad_norm
    }

    /// `|P u|_s / (delta^alpha |u|_s)`.
    pub fn ls_ratio(&self) -> f64 {
        self.ls_norm_rescaled / (self.delta.powf(self.alpha) * self.ls_norm)
    }
}

fn norms(n: usize, test: &RadialTest, delta: f64, s: f64) -> (f64, f64) {
    let nf = n as f64;
    let c = delta.powf(-(nf - 2.0) / 2.0);
    let g = radial_integral(n, |r| {
        let d = c / delta * test.derivative(r / delta);
        d * d
    });
    let l = radial_integral(n, |r| (c * test.value(r / delta)).abs().powf(s));
    (g.sqrt(), l.powf(1.0 / s))
}

/// Gradient and `L^s` norms of the rescaled test functions, all integrated
/// on the same `delta`-independent radial panels around `xi`.
pub fn rescaling_isometry_check(delta: f64, xi: &Vector, tests: &[RadialTest], s: f64) -> Result<Vec<RescalingRow>> {
    let n = xi.dim();
    let nf = n as f64;
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    if !(s >= 1.0) {
        return Err(Error::InvalidArgument(format!("s must be at least 1, got {s}")));
    }
    tests
        .iter()
        .map(|t| {
            if t.decay() < nf - 2.0 || t.decay() * s <= nf || 2.0 * t.derivative_decay() <= nf {
                return Err(Error::NonIntegrable);
            }
            let (g0, l0) = norms(n, t, 1.0, s);
            let (g1, l1) = norms(n, t, delta, s);
            Ok(RescalingRow {
                test: *t,
                delta,
                s,
                alpha: nf / s - (nf - 2.0) / 2.0,
                grad_norm: g0,
                grad_norm_rescaled: g1,
                ls_norm: l0,
                ls_norm_rescaled: l1,
            })
        })
        .collect()
}

/// Least-squares slope of `ln |P u|_s` against `ln delta`.
pub fn ls_scaling_slope(n: usize, test: &RadialTest, s: f64, deltas: &[f64]) -> Result<f64> {
    if deltas.len() < 2 {
        return Err(Error::InvalidArgument("need at least two scales".into()));
    }
    let xi = Vector::zeros(n);
    let mut pts = Vec::new();
    for &d in deltas {
        let row = rescaling_isometry_check(d, &xi, &[*test], s)?;
        pts.push((d.ln(), row[0].ls_norm_rescaled.ln()));
    }
    Ok(log_slope(&pts))
}

/// Least-squares slope through `(x, y)` pairs.
pub fn log_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// One or two signed bubbles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ansatz {
    pub bubbles: Vec<Bubble>,
}

impl Ansatz {
    pub fn new(bubbles: Vec<Bubble>) -> Result<Self> {
        if bubbles.is_empty() || bubbles.len() > 2 {
            return Err(Error::InvalidArgument("an ansatz has one or two bubbles".into()));
        }
        let n = bubbles[0].dim();
        for b in &bubbles {
            if b.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: b.dim() });
            }
            Bubble::new(b.delta, b.xi, b.sign)?;
        }
        Ok(Ansatz { bubbles })
    }

    pub fn single(b: Bubble) -> Self {
        Ansatz { bubbles: vec![b] }
    }

    /// A positive and a negative bubble.
    pub fn nodal(pos: Bubble, neg: Bubble) -> Result<Self> {
        if pos.sign == neg.sign {
            return Err(Error::InvalidArgument("nodal ansatz needs opposite signs".into()));
        }
        Self::new(vec![pos, neg])
    }

    pub fn dim(&self) -> usize {
        self.bubbles[0].dim()
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.bubbles.iter().map(|b| b.value(x)).sum()
    }

    pub fn negated(&self) -> Ansatz {
        Ansatz { bubbles: self.bubbles.iter().map(|b| Bubble { sign: -b.sign, ..*b }).collect() }
    }

    pub fn translated(&self, v: &Vector) -> Ansatz {
        Ansatz { bubbles: self.bubbles.iter().map(|b| Bubble { xi: b.xi + *v, ..*b }).collect() }
    }
}

/// `J = gradient_part - weighted_part / q` with `q = p + 1 - eps`,
/// `gradient_part = 1/2 int |grad u|^2` and `weighted_part = int Q |u|^q`
/// (`Q = 1` in the domain and `-1` outside).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub j_eps: f64,
    pub gradient_part: f64,
    pub weighted_part: f64,
    pub whole_space: f64,
    pub exterior: f64,
    pub std_error: f64,
    pub n_evals: usize,
}

/// Integral over `R^n` of a function that is axially symmetric about the
/// line through `xi1` and `xi2`, given as `f(r, cos(theta))` in polar
/// coordinates around `xi1` with `theta` measured from `xi2 - xi1`.
/// Nested adaptive Gauss-Kronrod with breakpoints at both concentration
/// scales.
fn axial_integral<F: Fn(f64, f64) -> f64>(n: usize, l: f64, s1: f64, s2: f64, f: F) -> f64 {
    let ni = n as i32;
    let r_far = 4.0 * l.max(s1).max(s2);
    let inner = |theta: f64| {
        let (st, ct) = theta.sin_cos();
        let mut pts = vec![0.0];
        let mut s = s1;
        while s < r_far {
            pts.push(s);
            s *= 4.0;
        }
        let rc = l * ct;
        let w = (s2 * s2 + (l * st).powi(2)).sqrt();
        if rc > 0.0 {
            for k in [-16.0, -4.0, -1.0, 0.0, 1.0, 4.0, 16.0] {
                let v = rc + k * w;
                if v > 0.0 && v < r_far {
                    pts.push(v);
                }
            }
        }
        pts.push(r_far);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let g = |r: f64| f(r, ct) * r.powi(ni - 1);
        let near = gk::integrate(g, &pts, 0.0, 1e-12, 4000).value;
        let tail = gk::integrate(|u: f64| g(r_far / u) * r_far / (u * u), &[0.0, 0.25, 1.0], 0.0, 1e-12, 1000).value;
        (near + tail) * st.powi(ni - 2)
    };
    let mut tp = vec![0.0];
    let mut w = 0.1 * s2 / l;
    while w < 0.5 {
        tp.push(w);
        w *= 4.0;
    }
    for k in 1..=8 {
        tp.push(k as f64 * std::f64::consts::PI / 8.0);
    }
    tp.sort_by(f64::total_cmp);
    tp.dedup();
    let r = gk::integrate(inner, &tp, 0.0, 1e-11, 4000);
    sphere_area(n - 1) * r.value
}

/// `int_{R^n} U_1^p U_2` of the unsigned profiles.
pub fn interaction(b1: &Bubble, b2: &Bubble) -> Result<f64> {
    let n = b1.dim();
    if b2.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b2.dim() });
    }
    let l = b1.xi.dist(&b2.xi);
    if !(l > 0.0) {
        return Err(Error::CoincidentCenters);
    }
    let p = critical_exponent(n);
    Ok(axial_integral(n, l, b1.delta, b2.delta, |r, ct| {
        let r2b = (r * r + l * l - 2.0 * r * l * ct).max(0.0);
        b1.profile_r2(r * r).powf(p) * b2.profile_r2(r2b)
    }))
}

fn check_eps(k: &ModelConstants, eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps < k.p - 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in [0, p - 1), got {eps}")));
    }
    Ok(())
}

pub fn energy(domain: &Domain, ansatz: &Ansatz, eps: f64, k: &ModelConstants, cfg: &QuadratureConfig) -> Result<EnergyReport> {
    let n = domain.dim();
    if ansatz.dim() != n || k.n != n {
        return Err(Error::DimensionMismatch { expected: n, found: ansatz.dim() });
    }
    check_eps(k, eps)?;
    let nf = n as f64;
    let q = k.p + 1.0 - eps;
    let (gradient_part, whole, ext) = match ansatz.bubbles.as_slice() {
        [b] => {
            let whole = bubble_moment(n, q, false)? * b.delta.powf(nf - q * (nf - 2.0) / 2.0);
            let ext = bubble_mass(domain, &b.xi, b.delta, q, Region::Outside, cfg)?;
            (0.5 * k.bubble_mass, whole, ext)
        }
        [b1, b2] => {
            let cross = (b1.sign * b2.sign) as f64 * interaction(b1, b2)?;
            let l = b1.xi.dist(&b2.xi);
            let s = (b1.sign * b2.sign) as f64;
            let whole = axial_integral(n, l, b1.delta, b2.delta, |r, ct| {
                let r2b = (r * r + l * l - 2.0 * r * l * ct).max(0.0);
                (b1.profile_r2(r * r) + s * b2.profile_r2(r2b)).abs().powf(q)
            });
            let ext = exterior_lp_mass(domain, |x: &Vector| ansatz.value(x).abs().powf(q), &b1.xi, cfg)?;
            (k.bubble_mass + cross, whole, ext)
        }
        _ => unreachable!("validated ansatz"),
    };
    let weighted = whole - 2.0 * ext.value;
    Ok(EnergyReport {
        j_eps: gradient_part - weighted / q,
        gradient_part,
        weighted_part: weighted,
        whole_space: whole,
        exterior: ext.value,
        std_error: 2.0 * ext.std_error / q,
        n_evals: ext.n_evals,
    })
}

/// One row of an expansion check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualRow {
    /// `eps` or `rho`.
    pub parameter: f64,
    pub j_eps: f64,
    pub residual: f64,
    pub std_error: f64,
    /// The reduced-energy term subtracted in `residual`.
    pub model_term: f64,
    /// Exterior (or hole) mass divided by its leading-order prediction.
    pub mass_ratio: f64,
}

fn check_decreasing(list: &[f64], max: f64, name: &str) -> Result<()> {
    if list.is_empty() {
        return Err(Error::InvalidArgument(format!("{name} list is empty")));
    }
    if !list.windows(2).all(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(format!("{name} list must be strictly decreasing")));
    }
    if !(list[0] < max && *list.last().unwrap() > 0.0) {
        return Err(Error::InvalidArgument(format!("{name} values must lie in (0, {max})")));
    }
    Ok(())
}

/// `R(eps) = [J(eps) - a - b eps - c eps ln eps] / eps - Psi(d, xi)` for one
/// bubble with `delta = d eps^{1/n}` centered at `xi`.
pub fn expansion_residual_sub(
    domain: &Domain,
    d: f64,
    xi: &Vector,
    eps_list: &[f64],
    k: &ModelConstants,
    cfg: &QuadratureConfig,
) -> Result<Vec<ResidualRow>> {
    check_decreasing(eps_list, 0.2, "eps")?;
    let n = domain.dim();
    let psi = psi_value(domain, xi, cfg)?;
    let model = reduced_energy_sub(k, psi.value, d)?;
    let lead = k.c1 * d.powi(n as i32);
    eps_list
        .iter()
        .map(|&eps| {
            let delta = d * eps.powf(1.0 / n as f64);
            let e = energy(domain, &Ansatz::single(Bubble::positive(delta, *xi)?), eps, k, cfg)?;
            let r = (e.j_eps - k.a - k.b * eps - k.c * eps * eps.ln()) / eps - model;
            let mass = bubble_mass(domain, xi, delta, k.p + 1.0, Region::Outside, cfg)?;
            Ok(ResidualRow {
                parameter: eps,
                j_eps: e.j_eps,
                residual: r,
                std_error: e.std_error / eps + lead * psi.std_error,
                model_term: model,
                mass_ratio: 2.0 / (k.p + 1.0) * mass.value / (eps * lead * psi.value),
            })
        })
        .collect()
}

/// `[J(Omega_rho) - a] / rho^{n/2} - Phi(d, zeta)` for the domain with the
/// ball `B(0, rho)` removed and one bubble with `delta = d rho^{1/2}` at
/// `xi = delta zeta`.
pub fn expansion_residual_hole(
    domain: &Domain,
    d: f64,
    zeta: &Vector,
    rho_list: &[f64],
    k: &ModelConstants,
    cfg: &QuadratureConfig,
) -> Result<Vec<ResidualRow>> {
    check_decreasing(rho_list, 1.0, "rho")?;
    let n = domain.dim();
    if zeta.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: zeta.dim() });
    }
    let origin = Vector::zeros(n);
    if !domain.contains(&origin) {
        return Err(Error::NotInDomain);
    }
    let psi0 = psi_value(domain, &origin, cfg)?;
    let b1 = k.c1 * psi0.value;
    let model = hole_energy(k, b1, d, zeta)?;
    let nf = n as f64;
    rho_list
        .iter()
        .map(|&rho| {
            let hole = Shape::ball(&vec![0.0; n], rho);
            let holed = Domain::new(n, &domain.shape().clone().minus(hole.clone()))?;
            let delta = d * rho.sqrt();
            let xi = origin.axpy(delta, zeta);
            let e = energy(&holed, &Ansatz::single(Bubble::positive(delta, xi)?), 0.0, k, cfg)?;
            let scale = rho.powf(nf / 2.0);
            let hole_dom = Domain::new(n, &hole)?;
            let hm = bubble_mass(&hole_dom, &xi, delta, k.p + 1.0, Region::Inside, cfg)?;
            let lead = scale * k.b2_hole * d.powi(-(n as i32)) * (1.0 + zeta.norm_sq()).powi(-(n as i32));
            Ok(ResidualRow {
                parameter: rho,
                j_eps: e.j_eps,
                residual: (e.j_eps - k.a) / scale - model,
                std_error: e.std_error / scale + d.powi(n as i32) * k.c1 * psi0.std_error,
                model_term: model,
                mass_ratio: 2.0 / (k.p + 1.0) * hm.value / lead,
            })
        })
        .collect()
}
