//! Unit-sphere constants and low-discrepancy direction sets.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

use crate::vector::Vector;

/// Surface area of the unit sphere in R^n.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0)
}

/// Volume of the unit ball in R^n.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

/// Additive recurrence `frac(k * alpha)` with `alpha_i = phi_d^{-(i+1)}`,
/// `phi_d` the positive root of `x^{d+1} = x + 1`.
pub fn kronecker_alpha(d: usize) -> Vec<f64> {
    let mut x = 2.0f64;
    for _ in 0..100 {
        let f = x.powi(d as i32 + 1) - x - 1.0;
        let df = (d as f64 + 1.0) * x.powi(d as i32) - 1.0;
        let nx = x - f / df;
        if (nx - x).abs() < 1e-16 {
            x = nx;
            break;
        }
        x = nx;
    }
    (1..=d).map(|i| (1.0 / x.powi(i as i32)).fract()).collect()
}

/// Measure-preserving map from the unit cube `[0,1)^{n-1}` onto `S^{n-1}`.
///
/// Even `n = 2k`: the squared moduli of the `k` coordinate pairs follow a
/// flat Dirichlet law (stick breaking with `Beta(1, j)` pieces) and each
/// pair gets a uniform angle. Odd `n`: the first coordinate has density
/// proportional to `(1 - t^2)^{(n-3)/2}` and the rest is an even sphere.
pub fn cube_to_sphere(u: &[f64], n: usize) -> Vector {
    debug_assert_eq!(u.len(), n - 1);
    let mut x = Vector::zeros(n);
    let (first, rest, scale) = if n % 2 == 1 {
        let t = if n == 3 {
            2.0 * u[0] - 1.0
        } else {
            let h = 0.5 * (n as f64 - 1.0);
            2.0 * inverse_beta(h, u[0]) - 1.0
        };
        x[0] = t;
        (1, &u[1..], (1.0 - t * t).max(0.0).sqrt())
    } else {
        (0, u, 1.0)
    };
    let k = (n - first) / 2;
    let mut remaining = 1.0;
    for j in 0..k {
        let share = if j + 1 == k {
            remaining
        } else {
            let left = (k - 1 - j) as f64;
            remaining * (1.0 - (1.0 - rest[j]).powf(1.0 / left))
        };
        remaining -= share;
        let r = share.max(0.0).sqrt() * scale;
        let ang = 2.0 * PI * rest[k - 1 + j];
        x[first + 2 * j] = r * ang.cos();
        x[first + 2 * j + 1] = r * ang.sin();
    }
    x
}

/// Inverse CDF of the symmetric `Beta(h, h)` law, by safeguarded Newton.
fn inverse_beta(h: f64, u: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x = u.clamp(1e-12, 1.0 - 1e-12);
    let lnb = statrs::function::beta::ln_beta(h, h);
    for _ in 0..100 {
        let f = statrs::function::beta::beta_reg(h, h, x) - u;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let dens = ((h - 1.0) * (x.ln() + (1.0 - x).ln()) - lnb).exp();
        let mut nx = x - f / dens;
        if !(nx > lo && nx < hi) {
            nx = 0.5 * (lo + hi);
        }
        if (nx - x).abs() < 1e-15 {
            return nx;
        }
        x = nx;
    }
    x
}

/// Deterministic directions: the `2n` signed axes, then `count` recurrence points.
pub fn deterministic_directions(dim: usize, count: usize) -> Vec<Vector> {
    let mut out = Vec::with_capacity(2 * dim + count);
    for i in 0..dim {
        out.push(Vector::axis(dim, i));
        out.push(-Vector::axis(dim, i));
    }
    let alpha = kronecker_alpha(dim - 1);
    let mut u = vec![0.0; dim - 1];
    for k in 0..count {
        for i in 0..dim - 1 {
            u[i] = (0.5 + (k as f64 + 1.0) * alpha[i]).fract();
        }
        out.push(cube_to_sphere(&u, dim));
    }
    out
}

/// Lattice points on the sphere for one replicate; folded into the positive
/// orthant when they are to be expanded by coordinate sign flips.
pub(crate) type BaseSet = Arc<Vec<Vector>>;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Key {
    dim: usize,
    seed: u64,
    replicate: u64,
    count: usize,
    fold: bool,
}

fn cache() -> &'static Mutex<HashMap<Key, BaseSet>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, BaseSet>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Randomly shifted recurrence points on the sphere for one replicate.
/// The shift comes from a ChaCha stream keyed by `(seed, replicate)`.
pub(crate) fn replicate_base(dim: usize, seed: u64, replicate: u64, count: usize, fold: bool) -> BaseSet {
    let key = Key { dim, seed, replicate, count, fold };
    if let Some(b) = cache().lock().unwrap().get(&key) {
        return b.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    let shift: Vec<f64> = (0..dim - 1).map(|_| rng.gen::<f64>()).collect();
    let alpha = kronecker_alpha(dim - 1);
    let mut u = vec![0.0; dim - 1];
    let mut pts = Vec::with_capacity(count);
    for k in 0..count {
        for i in 0..dim - 1 {
            u[i] = (shift[i] + (k as f64 + 1.0) * alpha[i]).fract();
        }
        let mut w = cube_to_sphere(&u, dim);
        if fold {
            for i in 0..dim {
                w[i] = w[i].abs();
            }
        }
        pts.push(w);
    }
    let set = Arc::new(pts);
    let mut guard = cache().lock().unwrap();
    if guard.len() > 64 {
        guard.clear();
    }
    guard.insert(key, set.clone());
    set
}
