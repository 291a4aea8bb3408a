//! Boundary queries: rays through deformed domains, nearest boundary points
//! and diameter pairs.

use serde::Serialize;

use super::intervals::Intervals;
use super::perturb::PerturbationField;
use super::{Domain, Role};
use crate::error::{Error, Result};
use crate::sphere::deterministic_directions;
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundaryPoint {
    pub point: Vector,
    /// Unit normal pointing into the domain.
    pub inner_normal: Vector,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiameterPair {
    pub first: BoundaryPoint,
    pub second: BoundaryPoint,
    pub distance: f64,
}

/// Regula falsi with the Illinois modification on a sign-changing bracket.
fn illinois<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, tol: f64) -> f64 {
    for _ in 0..100 {
        if (b - a).abs() <= tol {
            break;
        }
        let c = b - fb * (b - a) / (fb - fa);
        let c = if c.is_finite() { c } else { 0.5 * (a + b) };
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
        } else {
            fa *= 0.5;
        }
        b = c;
        fb = fc;
    }
    b
}

/// Ray intervals of `(id + theta)(Omega)`. Crossings of the undeformed ray
/// seed bracketed root finds on the pulled-back signed distance; if the
/// structure cannot be matched, the ray is marched with sphere tracing.
pub(crate) fn perturbed_ray(dom: &Domain, f: &PerturbationField, o: &Vector, d: &Vector) -> Intervals {
    let (lo, hi) = dom.bounding_box();
    let center = (lo + hi) * 0.5;
    let rad = 0.5 * lo.dist(&hi);
    let oc = *o - center;
    let b = oc.dot(d);
    let disc = b * b - (oc.norm_sq() - rad * rad);
    if disc <= 0.0 {
        return Intervals::new();
    }
    let tmax = -b + disc.sqrt();
    if tmax <= 0.0 {
        return Intervals::new();
    }
    let mut warm = f.invert(o);
    let mut g = |t: f64| {
        let y = o.axpy(t, d);
        warm = f.invert_from(&y, &warm);
        dom.base_sdf(&warm)
    };
    let tol = 1e-13 * (1.0 + rad);
    let inside0 = g(0.0) < 0.0;
    let base = dom.base_ray(o, d);
    let base_inside0 = base.first().is_some_and(|iv| iv.0 <= 0.0);
    let mut crossings: Vec<f64> = Vec::with_capacity(2 * base.len());
    for &(s, e) in &base {
        if s > 0.0 {
            crossings.push(s);
        }
        crossings.push(e);
    }
    let mut roots: Vec<f64> = Vec::with_capacity(crossings.len());
    let mut ok = inside0 == base_inside0 && crossings.last().map_or(true, |&t| t < tmax);
    if ok {
        let shift = 2.0 * f.max_displacement() / (1.0 - dom.lipschitz()) + 1e-9 * rad;
        let mut state = inside0;
        for (k, &t0) in crossings.iter().enumerate() {
            let lo_lim = if k == 0 { 0.0 } else { 0.5 * (crossings[k - 1] + t0) };
            let hi_lim = if k + 1 < crossings.len() { 0.5 * (t0 + crossings[k + 1]) } else { tmax };
            let mut w = shift;
            let mut bracket = None;
            loop {
                let a = (t0 - w).max(lo_lim);
                let bb = (t0 + w).min(hi_lim);
                let ga = g(a);
                let gb = g(bb);
                if (ga < 0.0) == state && (gb < 0.0) != state {
                    bracket = Some((a, bb, ga, gb));
                    break;
                }
                if a <= lo_lim && bb >= hi_lim {
                    break;
                }
                w *= 4.0;
            }
            match bracket {
                Some((a, bb, ga, gb)) => {
                    roots.push(illinois(&mut g, a, bb, ga, gb, tol));
                    state = !state;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
    }
    if !ok {
        roots = march(dom, f, o, d, tmax, inside0);
    }
    let mut out = Intervals::new();
    let mut start = if inside0 { Some(0.0) } else { None };
    for r in roots {
        match start.take() {
            Some(s) => out.push((s, r)),
            None => start = Some(r),
        }
    }
    if let Some(s) = start {
        out.push((s, tmax));
    }
    out
}

/// Sphere tracing with the conservative distance bound.
fn march(dom: &Domain, f: &PerturbationField, o: &Vector, d: &Vector, tmax: f64, inside0: bool) -> Vec<f64> {
    let scale = tmax.max(1e-300);
    let eps = 1e-7 * scale;
    let shrink = 1.0 - dom.lipschitz();
    let mut warm = f.invert(o);
    let mut g = |t: f64| {
        let y = o.axpy(t, d);
        warm = f.invert_from(&y, &warm);
        dom.base_sdf(&warm)
    };
    let mut roots = Vec::new();
    let mut t = 0.0;
    let mut gt = g(0.0);
    let mut state = inside0;
    while t < tmax {
        let step = (shrink * gt.abs()).max(eps);
        let tn = (t + step).min(tmax);
        let gn = g(tn);
        if (gn < 0.0) != state {
            let r = illinois(&mut g, t, tn, gt, gn, 1e-13 * scale);
            roots.push(r);
            state = !state;
        }
        if tn >= tmax {
            break;
        }
        t = tn;
        gt = gn;
    }
    roots
}

impl Domain {
    /// Nearest boundary point to `x`, with the inner unit normal there.
    /// Ties are broken toward the lexicographically largest boundary point.
    pub fn boundary_nearest(&self, x: &Vector) -> Result<BoundaryPoint> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.dim() });
        }
        let scale = self.scale();
        // Upper bound from ray casting along many directions.
        let dirs = deterministic_directions(self.dim, 512);
        let mut best_t = f64::INFINITY;
        let mut best_dir = dirs[0];
        let inside = self.contains(x);
        for dir in &dirs {
            let iv = self.ray_intervals(x, dir);
            let t = if inside {
                iv.first().map(|iv| iv.1)
            } else {
                iv.first().map(|iv| iv.0)
            };
            if let Some(t) = t {
                let p = x.axpy(t, dir);
                let better = t < best_t * (1.0 - 1e-12)
                    || (t <= best_t * (1.0 + 1e-12) && p.lex_cmp(&x.axpy(best_t, &best_dir)).is_gt());
                if better {
                    best_t = t;
                    best_dir = *dir;
                }
            }
        }
        if !best_t.is_finite() {
            return Err(Error::NoConvergence("no boundary found along any ray".into()));
        }
        if self.field.is_none() {
            self.nearest_by_projection(x, best_t, scale)
        } else {
            self.nearest_by_iteration(x, best_t, best_dir, inside)
        }
    }

    fn on_boundary(&self, p: &Vector, n: &Vector, scale: f64) -> bool {
        let h = 1e-9 * scale;
        self.contains(&p.axpy(h, n)) != self.contains(&p.axpy(-h, n))
    }

    fn nearest_by_projection(&self, x: &Vector, upper: f64, scale: f64) -> Result<BoundaryPoint> {
        let mut best: Option<(f64, Vector, Vector)> = None;
        for p in &self.prims {
            let (q, nrm) = p.surface_projection(x);
            if !self.on_boundary(&q, &nrm, scale) {
                continue;
            }
            let dist = q.dist(x);
            let better = match &best {
                None => true,
                Some((bd, bq, _)) => {
                    dist < bd * (1.0 - 1e-12) || (dist <= bd * (1.0 + 1e-12) && q.lex_cmp(bq).is_gt())
                }
            };
            if better {
                best = Some((dist, q, nrm));
            }
        }
        match best {
            Some((dist, q, _)) if dist <= upper * (1.0 + 1e-9) + 1e-12 * scale => {
                let (_, g) = self.sdf_grad(&q);
                Ok(BoundaryPoint { point: q, inner_normal: -g.normalized() })
            }
            _ => Err(Error::NoConvergence(
                "nearest boundary point lies on a non-smooth junction".into(),
            )),
        }
    }

    fn nearest_by_iteration(
        &self,
        x: &Vector,
        mut t: f64,
        mut dir: Vector,
        inside: bool,
    ) -> Result<BoundaryPoint> {
        let first_hit = |dir: &Vector| -> Option<f64> {
            let iv = self.ray_intervals(x, dir);
            if inside {
                iv.first().map(|iv| iv.1)
            } else {
                iv.first().map(|iv| iv.0)
            }
        };
        for _ in 0..500 {
            let p = x.axpy(t, &dir);
            let (_, g) = self.sdf_grad(&p);
            let out = g.normalized();
            let nd = if inside { out } else { -out };
            let change = nd.dist(&dir);
            let nt = match first_hit(&nd) {
                Some(nt) => nt,
                None => break,
            };
            dir = nd;
            t = nt;
            if change < 1e-10 {
                let p = x.axpy(t, &dir);
                let (_, g) = self.sdf_grad(&p);
                return Ok(BoundaryPoint { point: p, inner_normal: -g.normalized() });
            }
        }
        Err(Error::NoConvergence("nearest boundary point iteration".into()))
    }

    /// A farthest pair of boundary points. Ties are broken toward the pair
    /// whose larger point is lexicographically largest; `first` is the
    /// lexicographically smaller point of the pair.
    pub fn diameter_pair(&self, samples: usize) -> Result<DiameterPair> {
        let scale = self.scale();
        let dirs = deterministic_directions(self.dim, samples);
        let base = self.base();
        let mut pts = Vec::new();
        for (p, role) in self.prims.iter().zip(&self.roles) {
            if *role != Role::Solid {
                continue;
            }
            let mut raw = Vec::new();
            p.surface_samples(&dirs, &mut raw);
            for q in raw {
                let (_, nrm) = p.sdf_grad(&q);
                if base.on_boundary(&q, &nrm, scale) {
                    pts.push(q);
                }
            }
        }
        if pts.len() < 2 {
            return Err(Error::Degenerate("too few boundary samples".into()));
        }
        let tie = 1e-12 * scale;
        let key = |a: &Vector, b: &Vector| if a.lex_cmp(b).is_gt() { *a } else { *b };
        let mut best = (0usize, 1usize, pts[0].dist(&pts[1]));
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let dd = pts[i].dist(&pts[j]);
                let better = dd > best.2 + tie
                    || (dd >= best.2 - tie
                        && key(&pts[i], &pts[j]).lex_cmp(&key(&pts[best.0], &pts[best.1])).is_gt());
                if better {
                    best = (i, j, dd);
                }
            }
        }
        let (mut p, mut q) = (pts[best.0], pts[best.1]);
        if p.lex_cmp(&q).is_gt() {
            std::mem::swap(&mut p, &mut q);
        }
        // Alternate farthest-point ascent on the undeformed domain.
        if self.field.is_none() {
            let farthest = |from: &Vector| {
                let mut bp = *from;
                let mut bd = -1.0;
                for (prim, role) in self.prims.iter().zip(&self.roles) {
                    if *role != Role::Solid {
                        continue;
                    }
                    let c = prim.farthest_from(from);
                    let dd = c.dist(from);
                    if dd > bd + tie || (dd >= bd - tie && c.lex_cmp(&bp).is_gt()) {
                        bd = dd;
                        bp = c;
                    }
                }
                bp
            };
            for _ in 0..100 {
                let q2 = farthest(&p);
                let p2 = farthest(&q2);
                let improved = p2.dist(&q2) > p.dist(&q) + tie;
                if !improved {
                    // keep the sampled tie-break unless the ascent strictly helps
                    break;
                }
                p = p2;
                q = q2;
                if p.lex_cmp(&q).is_gt() {
                    std::mem::swap(&mut p, &mut q);
                }
            }
        } else {
            let f = self.field.as_ref().unwrap();
            p = p + f.eval(&p);
            q = q + f.eval(&q);
            if p.lex_cmp(&q).is_gt() {
                std::mem::swap(&mut p, &mut q);
            }
        }
        let distance = p.dist(&q);
        if distance <= 0.0 {
            return Err(Error::Degenerate("zero diameter".into()));
        }
        let n1 = -self.sdf_grad(&p).1.normalized();
        let n2 = -self.sdf_grad(&q).1.normalized();
        let axis = (q - p) * (1.0 / distance);
        let tol = if self.field.is_none() { 1e-6 } else { 1e-2 };
        if n1.dot(&axis) < 1.0 - tol || n2.dot(&axis) > -1.0 + tol {
            return Err(Error::Degenerate(
                "inner normals at the diameter pair are not aligned with the chord".into(),
            ));
        }
        Ok(DiameterPair {
            first: BoundaryPoint { point: p, inner_normal: n1 },
            second: BoundaryPoint { point: q, inner_normal: n2 },
            distance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Bump, Shape};
    use super::*;

    fn v(s: &[f64]) -> Vector {
        Vector::from_slice(s)
    }

    #[test]
    fn nearest_on_ball() {
        let d = Domain::ball(&[0.0; 3], 1.0).unwrap();
        let b = d.boundary_nearest(&v(&[0.2, 0.3, 0.0])).unwrap();
        let expect = v(&[0.2, 0.3, 0.0]).normalized();
        assert!(b.point.dist(&expect) < 1e-14);
        assert!((b.inner_normal + expect).norm() < 1e-14);
        // center: tie broken toward the lexicographically largest point
        let b = d.boundary_nearest(&v(&[0.0; 3])).unwrap();
        assert!(b.point.dist(&v(&[1.0, 0.0, 0.0])) < 1e-14);
    }

    #[test]
    fn nearest_in_tube() {
        let d = Domain::dumbbell(3, 2.0, 1.0, 0.3).unwrap();
        let b = d.boundary_nearest(&v(&[0.0, 0.29, 0.0])).unwrap();
        assert!(b.point.dist(&v(&[0.0, 0.3, 0.0])) < 1e-14);
        assert!((b.inner_normal - v(&[0.0, -1.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn nearest_at_concave_corner_is_reported() {
        // Two overlapping balls; a point on the axis between them near the
        // junction ring has its nearest boundary point on the ring.
        let shape = Shape::ball(&[-0.5, 0.0, 0.0], 1.0).union(Shape::ball(&[0.5, 0.0, 0.0], 1.0));
        let d = Domain::new(3, &shape).unwrap();
        assert!(d.boundary_nearest(&v(&[0.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn diameter_of_ball_and_pair() {
        let d = Domain::ball(&[0.0; 3], 1.0).unwrap();
        let p = d.diameter_pair(256).unwrap();
        assert!(p.first.point.dist(&v(&[-1.0, 0.0, 0.0])) < 1e-14);
        assert!(p.second.point.dist(&v(&[1.0, 0.0, 0.0])) < 1e-14);
        assert!((p.first.inner_normal - v(&[1.0, 0.0, 0.0])).norm() < 1e-14);

        let shape = Shape::ball(&[-2.0, 0.0, 0.0], 1.0).union(Shape::ball(&[2.0, 0.0, 0.0], 1.0));
        let d = Domain::new(3, &shape).unwrap();
        let p = d.diameter_pair(256).unwrap();
        assert!((p.distance - 6.0).abs() < 1e-13);
    }

    #[test]
    fn perturbed_rays_match_membership() {
        let d = Domain::dumbbell(3, 2.0, 1.0, 0.3).unwrap();
        let f = PerturbationField::new(
            3,
            vec![
                Bump { center: v(&[0.0, 0.3, 0.0]), width: 0.8, displacement: v(&[0.0, 0.05, 0.02]) },
                Bump { center: v(&[2.0, 1.0, 0.0]), width: 1.0, displacement: v(&[0.03, 0.1, 0.0]) },
            ],
        )
        .unwrap();
        let pd = d.perturb(&f).unwrap();
        let dirs = deterministic_directions(3, 64);
        let o = v(&[-2.0, 0.1, 0.0]);
        for dir in &dirs {
            let iv = pd.ray_intervals(&o, dir);
            let mut t = 0.0;
            while t < 8.0 {
                let p = o.axpy(t, dir);
                let inside_iv = iv.iter().any(|&(a, b)| t > a && t < b);
                let near = iv.iter().any(|&(a, b)| (t - a).abs() < 1e-9 || (t - b).abs() < 1e-9);
                if !near {
                    assert_eq!(inside_iv, pd.contains(&p), "t = {t}");
                }
                t += 0.01;
            }
        }
    }
}
