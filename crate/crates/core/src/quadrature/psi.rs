use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{sphere_integral, QuadratureConfig, QuadratureResult};
use crate::error::{Error, Result};
use crate::geometry::{gaps, Domain};
use crate::sphere::sphere_area;
use crate::vector::Vector;

/// `psi`, its gradient and Hessian at one point, with standard errors.
#[derive(Clone, Debug, Serialize)]
pub struct PsiEvaluation {
    pub point: Vector,
    pub value: f64,
    pub value_err: f64,
    pub gradient: Vector,
    pub gradient_err: Vector,
    /// Row-major `n x n`.
    pub hessian: Vec<f64>,
    pub hessian_err: Vec<f64>,
    pub n_evals: usize,
}

impl PsiEvaluation {
    pub fn dim(&self) -> usize {
        self.point.dim()
    }

    pub fn hessian_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_row_slice(n, n, &self.hessian)
    }

    pub fn gradient_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(self.gradient.as_slice())
    }

    pub fn hessian_at(&self, i: usize, j: usize) -> f64 {
        self.hessian[i * self.dim() + j]
    }

    pub fn hessian_err_at(&self, i: usize, j: usize) -> f64 {
        self.hessian_err[i * self.dim() + j]
    }
}

/// Check that `xi` is an admissible evaluation point and return the
/// bounding radius around it.
fn admissible(domain: &Domain, xi: &Vector, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    if xi.dim() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), found: xi.dim() });
    }
    if !domain.contains(xi) {
        return Err(Error::NotInDomain);
    }
    let rad = domain.bounding_radius(xi);
    let guard = cfg.boundary_guard * rad;
    let depth = domain.depth(xi);
    if depth < guard {
        return Err(Error::TooCloseToBoundary { distance: depth, guard });
    }
    Ok(rad)
}

/// Value of `psi` only.
pub fn psi_value(domain: &Domain, xi: &Vector, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    let rad = admissible(domain, xi, cfg)?;
    let n = domain.dim();
    let ni = n as i32;
    let nf = n as f64;
    let r = sphere_integral(n, cfg, 1, |w, acc| {
        let iv = domain.ray_intervals(xi, w);
        for &(a, b) in &gaps(&iv, rad) {
            acc[0] += (a.powi(-ni) - b.powi(-ni)) / nf;
        }
    });
    let far = sphere_area(n) * rad.powi(-ni) / nf;
    let out = QuadratureResult { value: r[0].value + far, ..r[0] };
    if out.rel_error() > cfg.target_rel_err {
        return Err(Error::QuadratureTarget { achieved: out.rel_error(), target: cfg.target_rel_err });
    }
    Ok(out)
}

/// `psi`, gradient and Hessian from one set of rays. The region beyond the
/// bounding radius `R` is added in closed form: `|S| R^{-n}/n` to the value
/// and `2 |S| R^{-n-2} I` to the Hessian.
pub fn psi_integrals(domain: &Domain, xi: &Vector, cfg: &QuadratureConfig) -> Result<PsiEvaluation> {
    let rad = admissible(domain, xi, cfg)?;
    let n = domain.dim();
    let ni = n as i32;
    let nf = n as f64;
    let nh = n * (n + 1) / 2;
    let cg = 2.0 * nf / (nf + 1.0);
    let ch = 2.0 * nf / (nf + 2.0);
    let r = sphere_integral(n, cfg, 1 + n + nh, |w, acc| {
        let iv = domain.ray_intervals(xi, w);
        let (mut v0, mut v1, mut v2) = (0.0, 0.0, 0.0);
        for &(a, b) in &gaps(&iv, rad) {
            let ia = a.powi(-ni);
            let ib = b.powi(-ni);
            v0 += ia - ib;
            v1 += ia / a - ib / b;
            v2 += ia / (a * a) - ib / (b * b);
        }
        acc[0] += v0 / nf;
        let g = cg * v1;
        let h = ch * v2;
        for i in 0..n {
            acc[1 + i] += g * w[i];
        }
        let mut k = 1 + n;
        for i in 0..n {
            for j in i..n {
                let mut e = (2.0 * nf + 2.0) * w[i] * w[j];
                if i == j {
                    e -= 1.0;
                }
                acc[k] += h * e;
                k += 1;
            }
        }
    });
    let area = sphere_area(n);
    let value = r[0].value + area * rad.powi(-ni) / nf;
    let value_err = r[0].std_error;
    if value_err / value > cfg.target_rel_err {
        return Err(Error::QuadratureTarget { achieved: value_err / value, target: cfg.target_rel_err });
    }
    let mut gradient = Vector::zeros(n);
    let mut gradient_err = Vector::zeros(n);
    for i in 0..n {
        gradient[i] = r[1 + i].value;
        gradient_err[i] = r[1 + i].std_error;
    }
    let far_h = 2.0 * area * rad.powi(-ni - 2);
    let mut hessian = vec![0.0; n * n];
    let mut hessian_err = vec![0.0; n * n];
    let mut k = 1 + n;
    for i in 0..n {
        for j in i..n {
            let v = r[k].value + if i == j { far_h } else { 0.0 };
            hessian[i * n + j] = v;
            hessian[j * n + i] = v;
            hessian_err[i * n + j] = r[k].std_error;
            hessian_err[j * n + i] = r[k].std_error;
            k += 1;
        }
    }
    Ok(PsiEvaluation {
        point: *xi,
        value,
        value_err,
        gradient,
        gradient_err,
        hessian,
        hessian_err,
        n_evals: r[0].n_evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_center() {
        let cfg = QuadratureConfig::default().with_budget(1 << 12);
        for n in [3usize, 4, 5] {
            let d = Domain::ball(&vec![0.0; n], 1.0).unwrap();
            let e = psi_integrals(&d, &Vector::zeros(n), &cfg).unwrap();
            let area = sphere_area(n);
            assert!((e.value / (area / n as f64) - 1.0).abs() < 1e-13);
            assert!(e.gradient.norm() < 1e-12);
            for i in 0..n {
                for j in 0..n {
                    let exact = if i == j { 2.0 * area } else { 0.0 };
                    assert!((e.hessian_at(i, j) - exact).abs() < 1e-11 * area);
                }
            }
        }
        let d = Domain::ball(&[0.0; 3], 1.0).unwrap();
        let e = psi_integrals(&d, &Vector::zeros(3), &cfg).unwrap();
        assert!((e.value - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn off_center_ball_matches_radial_formula() {
        // For the unit ball in R^3 and |xi| = s < 1:
        // psi = int_{|x|>1} |x - xi|^{-6} = (4 pi / 3) / (1 - s^2)^3.
        let d = Domain::ball(&[0.0; 3], 1.0).unwrap();
        let cfg = QuadratureConfig::default().with_budget(1 << 16);
        for s in [0.2, 0.5, 0.8] {
            let xi = Vector::from_slice(&[0.0, s, 0.0]);
            let e = psi_integrals(&d, &xi, &cfg).unwrap();
            let exact = 4.0 * PI / 3.0 / (1.0 - s * s).powi(3);
            assert!((e.value - exact).abs() < 5.0 * e.value_err + 1e-9 * exact, "s={s}: {} vs {exact}", e.value);
            // derivative of the closed form along the axis
            let g = 4.0 * PI / 3.0 * 6.0 * s / (1.0 - s * s).powi(4);
            assert!((e.gradient[1] - g).abs() < 5.0 * e.gradient_err[1] + 1e-8 * g, "{} vs {g}", e.gradient[1]);
        }
    }

    #[test]
    fn guards() {
        let d = Domain::ball(&[0.0; 3], 1.0).unwrap();
        let cfg = QuadratureConfig::default().with_budget(1 << 10);
        assert!(matches!(psi_integrals(&d, &Vector::from_slice(&[2.0, 0.0, 0.0]), &cfg), Err(Error::NotInDomain)));
        assert!(matches!(
            psi_integrals(&d, &Vector::from_slice(&[0.9999, 0.0, 0.0]), &cfg),
            Err(Error::TooCloseToBoundary { .. })
        ));
        assert!(matches!(
            psi_integrals(&d, &Vector::from_slice(&[0.0, 0.0]), &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
