use super::gk::gauss10;
use super::radial::RadialProfile;
use super::{sphere_integral, QuadratureConfig, QuadratureResult};
use crate::error::{Error, Result};
use crate::geometry::{gaps, Domain};
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Inside,
    Outside,
}

/// `int U_{delta,xi}^P` over the domain or over its complement, by rays
/// from `xi` with the radial part in closed form.
pub fn bubble_mass(
    domain: &Domain,
    xi: &Vector,
    delta: f64,
    power: f64,
    region: Region,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    cfg.validate()?;
    if xi.dim() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), found: xi.dim() });
    }
    let prof = RadialProfile::new(domain.dim(), power, delta)?;
    let r = sphere_integral(domain.dim(), cfg, 1, |w, acc| {
        let iv = domain.ray_intervals(xi, w);
        match region {
            Region::Inside => {
                for &(a, b) in &iv {
                    acc[0] += prof.mass(a, b);
                }
            }
            Region::Outside => {
                for &(a, b) in &gaps(&iv, f64::INFINITY) {
                    acc[0] += prof.mass(a, b);
                }
            }
        }
    });
    Ok(r[0])
}

/// Gauss rule over `[a, b]` in the logarithmic variable, on panels of
/// ratio at most 2; the first panel is linear when `a == 0`.
fn ray_segment<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64) -> f64 {
    let mut s = 0.0;
    let mut lo = a;
    if lo == 0.0 {
        let first = b / 1024.0;
        s += gauss10(&mut |r: f64| g(r), 0.0, first);
        lo = first;
    }
    if b <= lo {
        return s;
    }
    let panels = ((b / lo).log2().ceil() as usize).clamp(1, 200);
    let (la, lb) = (lo.ln(), b.ln());
    let h = (lb - la) / panels as f64;
    for k in 0..panels {
        let s0 = la + k as f64 * h;
        s += gauss10(&mut |t: f64| {
            let r = t.exp();
            g(r) * r
        }, s0, s0 + h);
    }
    s
}

/// `int_{R^n \ Omega} f(x) dx` for a nonnegative `f`, by rays from `center`.
/// The part beyond the bounding radius uses `far_shells` shells of ratio 2;
/// shell masses that fail to decay are reported as non-integrable.
pub fn exterior_lp_mass<F>(domain: &Domain, f: F, center: &Vector, cfg: &QuadratureConfig) -> Result<QuadratureResult>
where
    F: Fn(&Vector) -> f64 + Sync,
{
    cfg.validate()?;
    let n = domain.dim();
    if center.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: center.dim() });
    }
    let rad = domain.bounding_radius(center);
    let shells = cfg.far_shells;
    let n_out = 1 + shells;
    let r = sphere_integral(n, cfg, n_out, |w, acc| {
        let radial = |r: f64| f(&center.axpy(r, w)) * r.powi(n as i32 - 1);
        let iv = domain.ray_intervals(center, w);
        for &(a, b) in &gaps(&iv, rad) {
            acc[0] += ray_segment(&radial, a, b);
        }
        let mut lo = rad;
        for k in 0..shells {
            acc[1 + k] += ray_segment(&radial, lo, 2.0 * lo);
            lo *= 2.0;
        }
    });
    let near = r[0];
    let mut far = 0.0;
    let mut far_var = 0.0;
    for k in 0..shells {
        far += r[1 + k].value;
        far_var += r[1 + k].std_error.powi(2);
    }
    if shells >= 2 {
        let last = r[shells].value.abs();
        let prev = r[shells - 1].value.abs();
        let total = (near.value + far).abs();
        if last > 0.5 * prev && last > 1e-12 * total {
            return Err(Error::NonIntegrable);
        }
        if prev > 0.0 {
            let q = last / prev;
            far += r[shells].value * q / (1.0 - q);
        }
    }
    let var = near.std_error.powi(2) + far_var;
    Ok(QuadratureResult { value: near.value + far, std_error: var.sqrt(), n_evals: near.n_evals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::radial::{alpha_n, critical_exponent};
    use crate::sphere::sphere_area;

    #[test]
    fn generic_matches_closed_form_for_power_law() {
        // int_{|x|>1} |x|^{-2n} = |S| / n
        let d = Domain::ball(&[0.0; 3], 1.0).unwrap();
        let cfg = QuadratureConfig::default().with_budget(1 << 10);
        let r = exterior_lp_mass(&d, |x: &Vector| x.norm_sq().powi(-3), &Vector::zeros(3), &cfg).unwrap();
        let exact = sphere_area(3) / 3.0;
        assert!((r.value / exact - 1.0).abs() < 1e-9, "{} vs {exact}", r.value);
    }

    #[test]
    fn non_integrable_is_detected() {
        let d = Domain::ball(&[0.0; 3], 1.0).unwrap();
        let cfg = QuadratureConfig::default().with_budget(1 << 10);
        let r = exterior_lp_mass(&d, |x: &Vector| x.norm_sq().powf(-1.5), &Vector::zeros(3), &cfg);
        assert!(matches!(r, Err(Error::NonIntegrable)));
    }

    #[test]
    fn bubble_outside_ball_against_generic() {
        let n = 4;
        let d = Domain::ball(&[0.0; 4], 1.0).unwrap();
        let cfg = QuadratureConfig::default().with_budget(1 << 12);
        let p1 = critical_exponent(n) + 1.0;
        let delta = 0.3;
        let xi = Vector::from_slice(&[0.2, 0.0, -0.1, 0.0]);
        let fast = bubble_mass(&d, &xi, delta, p1, Region::Outside, &cfg).unwrap();
        let alpha = alpha_n(n);
        let u = |x: &Vector| (alpha * delta / (delta * delta + (*x - xi).norm_sq())).powf(p1);
        let slow = exterior_lp_mass(&d, u, &xi, &cfg).unwrap();
        assert!((fast.value / slow.value - 1.0).abs() < 1e-8, "{} vs {}", fast.value, slow.value);
        let inside = bubble_mass(&d, &xi, delta, p1, Region::Inside, &cfg).unwrap();
        let whole = crate::quadrature::bubble_moment(n, p1, false).unwrap();
        assert!(((inside.value + fast.value) / whole - 1.0).abs() < 1e-12);
    }
}
