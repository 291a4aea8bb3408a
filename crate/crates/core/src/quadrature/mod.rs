//! Integrals over the exterior of a domain, over the whole space, and the
//! potential `psi(xi) = int_{R^n \ Omega} |x - xi|^{-2n} dx` with its first
//! two derivatives.
//!
//! Every exterior integral is written in polar coordinates around a point
//! and split into a sphere average of one-dimensional ray integrals. Each
//! ray is intersected exactly with the domain, the radial part is done in
//! closed form or by Gauss rules, and only the direction average is
//! randomized: shifted rank-1 lattice points on the sphere, each expanded
//! by all coordinate sign flips, with independent shifts per replicate.

pub mod exterior;
pub mod gk;
pub mod psi;
pub mod radial;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{replicate_base, sphere_area};
use crate::vector::Vector;

pub use exterior::{bubble_mass, exterior_lp_mass, Region};
pub use psi::{psi_integrals, psi_value, PsiEvaluation};
pub use radial::{alpha_n, bubble_moment, critical_exponent, RadialProfile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub seed: u64,
    /// Total number of ray directions over all replicates.
    pub near_budget: usize,
    /// Geometric shells (ratio 2) for far-field integrals without closed form.
    pub far_shells: usize,
    pub replicates: usize,
    pub target_rel_err: f64,
    /// Points closer to the boundary than this fraction of the bounding
    /// radius are rejected.
    pub boundary_guard: f64,
    pub symmetry: Symmetry,
}

/// Directions used with each lattice point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    /// `w` and `-w`.
    Antipodal,
    /// All `2^n` coordinate sign flips of `w`.
    Reflections,
}

impl Symmetry {
    pub fn group_size(self, dim: usize) -> usize {
        match self {
            Symmetry::Antipodal => 2,
            Symmetry::Reflections => 1 << dim,
        }
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            seed: 0,
            near_budget: 1 << 20,
            far_shells: 64,
            replicates: 8,
            target_rel_err: 1e-3,
            boundary_guard: 1e-3,
            symmetry: Symmetry::Reflections,
        }
    }
}

impl QuadratureConfig {
    pub fn with_budget(mut self, near_budget: usize) -> Self {
        self.near_budget = near_budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidArgument("replicates must be at least 2".into()));
        }
        if self.near_budget < 1024 {
            return Err(Error::InvalidArgument("near_budget must be at least 1024".into()));
        }
        if self.far_shells < 16 {
            return Err(Error::InvalidArgument("far_shells must be at least 16".into()));
        }
        if !(self.target_rel_err > 0.0 && self.target_rel_err < 1.0) {
            return Err(Error::InvalidArgument("target_rel_err must lie in (0, 1)".into()));
        }
        if !(self.boundary_guard >= 0.0) {
            return Err(Error::InvalidArgument("boundary_guard must be nonnegative".into()));
        }
        Ok(())
    }

    /// Lattice points per replicate before symmetric expansion.
    fn base_count(&self, dim: usize) -> usize {
        (self.near_budget / (self.replicates * self.symmetry.group_size(dim))).max(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub std_error: f64,
    pub n_evals: usize,
}

impl QuadratureResult {
    pub fn exact(value: f64) -> Self {
        QuadratureResult { value, std_error: 0.0, n_evals: 0 }
    }

    pub fn rel_error(&self) -> f64 {
        if self.value == 0.0 {
            if self.std_error == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.std_error / self.value.abs()
        }
    }
}

const CHUNK: usize = 64;

/// `int_{S^{n-1}} f(w) dw` for a vector-valued `f`, which adds its values
/// into the accumulator. Returns per-component estimates.
pub(crate) fn sphere_integral<F>(dim: usize, cfg: &QuadratureConfig, n_out: usize, f: F) -> Vec<QuadratureResult>
where
    F: Fn(&Vector, &mut [f64]) + Sync,
{
    let full = cfg.symmetry == Symmetry::Reflections;
    let signs = cfg.symmetry.group_size(dim);
    let count = cfg.base_count(dim);
    let bases: Vec<_> = (0..cfg.replicates)
        .map(|r| replicate_base(dim, cfg.seed, r as u64, count, full))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cfg.replicates)
        .flat_map(|r| (0..count.div_ceil(CHUNK)).map(move |c| (r, c)))
        .collect();
    let partials: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(r, c)| {
            let mut acc = vec![0.0; n_out];
            let base = &bases[r];
            let end = ((c + 1) * CHUNK).min(count);
            for w in &base[c * CHUNK..end] {
                for s in 0..signs {
                    let mut d = *w;
                    if full {
                        for i in 0..dim {
                            if s >> i & 1 == 1 {
                                d[i] = -d[i];
                            }
                        }
                    } else if s == 1 {
                        d = -d;
                    }
                    f(&d, &mut acc);
                }
            }
            acc
        })
        .collect();
    let area = sphere_area(dim);
    let norm = area / (count * signs) as f64;
    let mut per_rep = vec![vec![0.0; n_out]; cfg.replicates];
    for (&(r, _), p) in jobs.iter().zip(&partials) {
        for k in 0..n_out {
            per_rep[r][k] += p[k];
        }
    }
    let rf = cfg.replicates as f64;
    (0..n_out)
        .map(|k| {
            let vals: Vec<f64> = per_rep.iter().map(|v| v[k] * norm).collect();
            let mean = vals.iter().sum::<f64>() / rf;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (rf - 1.0);
            QuadratureResult {
                value: mean,
                std_error: (var / rf).sqrt(),
                n_evals: count * signs * cfg.replicates,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_integral_of_polynomials() {
        let cfg = QuadratureConfig::default().with_budget(1 << 16);
        for dim in [3usize, 4] {
            let r = sphere_integral(dim, &cfg, 3, |w, acc| {
                acc[0] += 1.0;
                acc[1] += w[0] * w[0];
                acc[2] += w[0].powi(4);
            });
            let area = sphere_area(dim);
            let nf = dim as f64;
            assert!((r[0].value - area).abs() < 1e-12);
            let exact2 = area / nf;
            let exact4 = 3.0 * area / (nf * (nf + 2.0));
            assert!((r[1].value - exact2).abs() < 5.0 * r[1].std_error + 1e-6);
            assert!((r[2].value - exact4).abs() < 5.0 * r[2].std_error + 1e-6);
            assert!(r[2].std_error < 1e-2 * exact4);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let cfg = QuadratureConfig::default().with_budget(1 << 12);
        let f = |w: &Vector, acc: &mut [f64]| acc[0] += (3.0 * w[0] + w[1] * w[2]).exp();
        let a = sphere_integral(3, &cfg, 1, f);
        let b = sphere_integral(3, &cfg, 1, f);
        assert_eq!(a, b);
        let c = sphere_integral(3, &cfg.clone().with_seed(1), 1, f);
        assert_ne!(a[0].value, c[0].value);
    }
}
