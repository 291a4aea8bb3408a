//! Radial integrals of powers of the standard bubble profile
//! `U(x) = alpha_n * delta^{(n-2)/2} / (delta^2 + |x - xi|^2)^{(n-2)/2}`.

use statrs::function::beta::{beta, beta_reg};

use super::gk;
use crate::error::{Error, Result};
use crate::sphere::sphere_area;

/// `alpha_n = (n (n - 2))^{(n - 2)/4}`.
pub fn alpha_n(n: usize) -> f64 {
    let nf = n as f64;
    (nf * (nf - 2.0)).powf((nf - 2.0) / 4.0)
}

/// Critical exponent `p = (n + 2)/(n - 2)`.
pub fn critical_exponent(n: usize) -> f64 {
    let nf = n as f64;
    (nf + 2.0) / (nf - 2.0)
}

/// Radial integrals of `U_{delta}^P r^{n-1}` along one direction, in closed
/// form through the incomplete beta function.
#[derive(Clone, Copy, Debug)]
pub struct RadialProfile {
    delta: f64,
    /// shape parameters of the beta integral in `u = t^2/(1 + t^2)`
    a: f64,
    b: f64,
    /// `alpha^P delta^{n - P (n-2)/2} B(a, b) / 2`
    total: f64,
    threshold: f64,
}

impl RadialProfile {
    pub fn new(n: usize, power: f64, delta: f64) -> Result<Self> {
        let nf = n as f64;
        let m = power * (nf - 2.0) / 2.0;
        let a = nf / 2.0;
        let b = m - a;
        if b <= 0.0 {
            return Err(Error::NonIntegrable);
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        let pref = alpha_n(n).powf(power) * delta.powf(nf - m);
        Ok(RadialProfile {
            delta,
            a,
            b,
            total: pref * 0.5 * beta(a, b),
            threshold: (a + 1.0) / (a + b + 2.0),
        })
    }

    /// Integral over the whole ray `[0, inf)`.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// `(head, tail)` fractions at radius `r`: mass in `[0, r]` and `[r, inf)`,
    /// with the smaller one evaluated directly.
    #[inline]
    fn split(&self, r: f64) -> (f64, f64) {
        if r == f64::INFINITY {
            return (1.0, 0.0);
        }
        let t = r / self.delta;
        let t2 = t * t;
        let v = 1.0 / (1.0 + t2);
        let u = t2 * v;
        if u < self.threshold {
            let h = if u <= 0.0 { 0.0 } else { beta_reg(self.a, self.b, u) };
            (h, 1.0 - h)
        } else {
            let tl = if v <= 0.0 { 0.0 } else { beta_reg(self.b, self.a, v) };
            (1.0 - tl, tl)
        }
    }

    /// Integral over `[r0, r1]`, `0 <= r0 <= r1 <= inf`.
    #[inline]
    pub fn mass(&self, r0: f64, r1: f64) -> f64 {
        if r1 <= r0 {
            return 0.0;
        }
        let (h0, t0) = self.split(r0);
        let (h1, t1) = self.split(r1);
        let frac = if r1 == f64::INFINITY {
            t0
        } else {
            let t = r1 / self.delta;
            let u1 = t * t / (1.0 + t * t);
            let t0r = r0 / self.delta;
            let u0 = t0r * t0r / (1.0 + t0r * t0r);
            if u1 < self.threshold {
                h1 - h0
            } else if u0 >= self.threshold {
                t0 - t1
            } else {
                1.0 - h0 - t1
            }
        };
        self.total * frac
    }
}

/// `int_{R^n} U_{1,0}^P (ln U_{1,0})^k dx` for `k` in {0, 1}, computed by
/// adaptive quadrature after the substitution `r = tan(phi)`.
pub fn bubble_moment(n: usize, power: f64, log_weight: bool) -> Result<f64> {
    let nf = n as f64;
    let m = power * (nf - 2.0) / 2.0;
    if m <= nf / 2.0 {
        return Err(Error::NonIntegrable);
    }
    let alpha = alpha_n(n);
    let ln_alpha = alpha.ln();
    let ap = alpha.powf(power);
    let ec = 2.0 * m - nf - 1.0;
    let f = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let base = ap * s.powi(n as i32 - 1) * c.powf(ec);
        if log_weight {
            base * (ln_alpha + (nf - 2.0) * c.ln())
        } else {
            base
        }
    };
    let pts: Vec<f64> = (0..=8).map(|k| k as f64 * std::f64::consts::FRAC_PI_2 / 8.0).collect();
    let r = gk::integrate(f, &pts, 1e-15, 1e-14, 4000);
    Ok(sphere_area(n) * r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::digamma;

    fn closed_moment(n: usize, power: f64) -> f64 {
        let nf = n as f64;
        let m = power * (nf - 2.0) / 2.0;
        sphere_area(n) * alpha_n(n).powf(power) * 0.5 * beta(nf / 2.0, m - nf / 2.0)
    }

    #[test]
    fn alpha_values() {
        assert!((alpha_n(3) - 3f64.powf(0.25)).abs() < 1e-15);
        assert!((alpha_n(4) - 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn moment_matches_beta_closed_form() {
        for n in 3..=8 {
            let p = critical_exponent(n);
            for power in [p, p + 1.0, p + 0.7] {
                let num = bubble_moment(n, power, false).unwrap();
                let exact = closed_moment(n, power);
                assert!((num / exact - 1.0).abs() < 1e-12, "n={n} P={power}: {num} vs {exact}");
            }
        }
    }

    #[test]
    fn log_moment_matches_derivative_in_power() {
        // d/dP of the closed form: ln(alpha) + (n-2)/2 (psi(b) - psi(a+b)).
        for n in [3usize, 4, 5, 6] {
            let nf = n as f64;
            let power = critical_exponent(n) + 1.0;
            let a = nf / 2.0;
            let b = power * (nf - 2.0) / 2.0 - a;
            let exact = closed_moment(n, power)
                * (alpha_n(n).ln() + (nf - 2.0) / 2.0 * (digamma(b) - digamma(a + b)));
            let num = bubble_moment(n, power, true).unwrap();
            assert!((num / exact - 1.0).abs() < 1e-11, "n={n}: {num} vs {exact}");
        }
    }

    #[test]
    fn four_dimensional_constant() {
        let v = bubble_moment(4, 4.0, false).unwrap();
        let exact = 32.0 * std::f64::consts::PI.powi(2) / 3.0;
        assert!((v / exact - 1.0).abs() < 1e-13);
    }

    #[test]
    fn profile_segments_add_up() {
        for n in [3usize, 5] {
            let power = critical_exponent(n) + 1.0;
            let prof = RadialProfile::new(n, power, 0.3).unwrap();
            let cuts = [0.0, 0.01, 0.2, 0.3, 1.0, 7.0, 1e4, f64::INFINITY];
            let s: f64 = cuts.windows(2).map(|w| prof.mass(w[0], w[1])).sum();
            assert!((s / prof.total() - 1.0).abs() < 1e-14);
            // compare one segment to direct quadrature
            let alpha = alpha_n(n);
            let nf = n as f64;
            let d: f64 = 0.3;
            let f = |r: f64| {
                (alpha * d.powf((nf - 2.0) / 2.0) / (d * d + r * r).powf((nf - 2.0) / 2.0)).powf(power)
                    * r.powi(n as i32 - 1)
            };
            let direct = gk::integrate(f, &[0.2, 1.0], 1e-16, 1e-14, 100).value;
            assert!((prof.mass(0.2, 1.0) / direct - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn far_tail_keeps_relative_accuracy() {
        let n = 4;
        let prof = RadialProfile::new(n, 4.0, 1e-3).unwrap();
        // tail of alpha^4 delta^4 r^{-5} from R: alpha^4 delta^4 R^{-4} / 4
        let r: f64 = 10.0;
        let approx = alpha_n(4).powi(4) * 1e-12 / (4.0 * r.powi(4));
        assert!((prof.mass(r, f64::INFINITY) / approx - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_integrable_powers() {
        assert!(matches!(RadialProfile::new(3, 3.0, 1.0), Err(Error::NonIntegrable)));
        assert!(matches!(bubble_moment(4, 2.0, false), Err(Error::NonIntegrable)));
    }
}
