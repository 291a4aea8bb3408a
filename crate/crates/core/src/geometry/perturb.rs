//! Smooth displacement fields `theta` built from Gaussian bumps, for domains
//! of the form `(id + theta)(Omega)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::Vector;

/// `theta(x) = displacement * exp(-|x - center|^2 / width^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vector,
    pub width: f64,
    pub displacement: Vector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationField {
    dim: usize,
    bumps: Vec<Bump>,
}

const SQRT_2_OVER_E: f64 = 0.857_763_884_960_706_8;

impl PerturbationField {
    pub fn new(dim: usize, bumps: Vec<Bump>) -> Result<Self> {
        for b in &bumps {
            if b.center.dim() != dim || b.displacement.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: b.center.dim().max(b.displacement.dim()),
                });
            }
            if !(b.width > 0.0 && b.width.is_finite()) {
                return Err(Error::InvalidArgument(format!("bump width {}", b.width)));
            }
        }
        Ok(PerturbationField { dim, bumps })
    }

    pub fn zero(dim: usize) -> Self {
        PerturbationField { dim, bumps: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn is_zero(&self) -> bool {
        self.bumps.iter().all(|b| b.displacement.max_abs() == 0.0)
    }

    /// Random field with `count` bumps centered in the box `[lo, hi]`,
    /// widths in `[wmin, wmax]`, rescaled so that `c2_norm_bound() == rho`.
    pub fn random<R: Rng>(
        dim: usize,
        count: usize,
        lo: &Vector,
        hi: &Vector,
        widths: (f64, f64),
        rho: f64,
        rng: &mut R,
    ) -> Self {
        let mut bumps = Vec::with_capacity(count);
        for _ in 0..count {
            let mut c = Vector::zeros(dim);
            let mut d = Vector::zeros(dim);
            for i in 0..dim {
                c[i] = rng.gen_range(lo[i]..=hi[i]);
                d[i] = rng.gen_range(-1.0..=1.0);
            }
            let width = rng.gen_range(widths.0..=widths.1);
            bumps.push(Bump { center: c, width, displacement: d });
        }
        let mut f = PerturbationField { dim, bumps };
        let bound = f.c2_norm_bound();
        if bound > 0.0 {
            f = f.scaled(rho / bound);
        }
        f
    }

    pub fn scaled(&self, s: f64) -> Self {
        let bumps = self
            .bumps
            .iter()
            .map(|b| Bump { displacement: b.displacement * s, ..b.clone() })
            .collect();
        PerturbationField { dim: self.dim, bumps }
    }

    #[inline]
    pub fn eval(&self, x: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for b in &self.bumps {
            let r2 = (*x - b.center).norm_sq() / (b.width * b.width);
            out = out.axpy((-r2).exp(), &b.displacement);
        }
        out
    }

    /// `D theta(x) v`.
    pub fn jacobian_apply(&self, x: &Vector, v: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for b in &self.bumps {
            let w2 = b.width * b.width;
            let dx = *x - b.center;
            let phi = (-dx.norm_sq() / w2).exp();
            let s = -2.0 * phi / w2 * dx.dot(v);
            out = out.axpy(s, &b.displacement);
        }
        out
    }

    /// `D theta(x)^T v`.
    pub fn jacobian_t_apply(&self, x: &Vector, v: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for b in &self.bumps {
            let w2 = b.width * b.width;
            let dx = *x - b.center;
            let phi = (-dx.norm_sq() / w2).exp();
            let s = -2.0 * phi / w2 * b.displacement.dot(v);
            out = out.axpy(s, &dx);
        }
        out
    }

    /// Upper bound on the largest sup-norm of `theta_i` and its first and
    /// second partial derivatives.
    pub fn c2_norm_bound(&self) -> f64 {
        self.bumps
            .iter()
            .map(|b| {
                let w = b.width;
                b.displacement.max_abs() * 1f64.max(SQRT_2_OVER_E / w).max(2.0 / (w * w))
            })
            .fold(0.0, |a, b| a + b)
    }

    /// Upper bound on the operator norm of `D theta`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.bumps
            .iter()
            .map(|b| b.displacement.norm() * SQRT_2_OVER_E / b.width)
            .fold(0.0, |a, b| a + b)
    }

    /// Upper bound on `|theta|`.
    pub fn max_displacement(&self) -> f64 {
        self.bumps.iter().map(|b| b.displacement.norm()).sum()
    }

    /// Solve `x + theta(x) = y` by fixed-point iteration from `start`.
    pub fn invert_from(&self, y: &Vector, start: &Vector) -> Vector {
        let mut x = *start;
        for _ in 0..200 {
            let nx = *y - self.eval(&x);
            let step = (nx - x).max_abs();
            x = nx;
            if step <= 1e-14 * (1.0 + y.max_abs()) {
                break;
            }
        }
        x
    }

    pub fn invert(&self, y: &Vector) -> Vector {
        self.invert_from(y, &(*y - self.eval(y)))
    }

    /// `(I + D theta(x))^{-1} v` by fixed-point iteration.
    pub fn solve_jacobian(&self, x: &Vector, v: &Vector) -> Vector {
        let mut u = *v;
        for _ in 0..200 {
            let nu = *v - self.jacobian_apply(x, &u);
            let step = (nu - u).max_abs();
            u = nu;
            if step <= 1e-15 * (1.0 + v.max_abs()) {
                break;
            }
        }
        u
    }

    /// `(I + D theta(x))^{-T} v` by fixed-point iteration.
    pub fn solve_jacobian_t(&self, x: &Vector, v: &Vector) -> Vector {
        let mut u = *v;
        for _ in 0..200 {
            let nu = *v - self.jacobian_t_apply(x, &u);
            let step = (nu - u).max_abs();
            u = nu;
            if step <= 1e-15 * (1.0 + v.max_abs()) {
                break;
            }
        }
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field() -> PerturbationField {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lo = Vector::from_slice(&[-1.0; 3]);
        let hi = Vector::from_slice(&[1.0; 3]);
        PerturbationField::random(3, 4, &lo, &hi, (0.5, 1.5), 0.3, &mut rng)
    }

    #[test]
    fn random_field_has_requested_norm() {
        assert!((field().c2_norm_bound() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn inversion_is_accurate() {
        let f = field();
        let y = Vector::from_slice(&[0.3, -0.2, 0.7]);
        let x = f.invert(&y);
        assert!((x + f.eval(&x) - y).norm() < 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let f = field();
        let x = Vector::from_slice(&[0.1, 0.4, -0.3]);
        let v = Vector::from_slice(&[0.3, -1.0, 0.5]);
        let h = 1e-6;
        let fd = (f.eval(&x.axpy(h, &v)) - f.eval(&x.axpy(-h, &v))) * (0.5 / h);
        assert!((fd - f.jacobian_apply(&x, &v)).norm() < 1e-8);
        // transpose consistency
        let w = Vector::from_slice(&[-0.2, 0.1, 0.9]);
        let a = w.dot(&f.jacobian_apply(&x, &v));
        let b = v.dot(&f.jacobian_t_apply(&x, &w));
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn lipschitz_bound_holds_on_samples() {
        let f = field();
        let l = f.lipschitz_bound();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let mut a = Vector::zeros(3);
            let mut b = Vector::zeros(3);
            for i in 0..3 {
                a[i] = rng.gen_range(-2.0..2.0);
                b[i] = rng.gen_range(-2.0..2.0);
            }
            assert!((f.eval(&a) - f.eval(&b)).norm() <= l * a.dist(&b) + 1e-15);
        }
    }
}
