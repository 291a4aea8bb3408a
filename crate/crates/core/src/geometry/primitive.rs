//! Balls and capsules: signed distance, ray intersection, projections.

use crate::vector::Vector;

/// Line parameter range `(t0, t1)` where a ray is strictly inside a primitive.
pub(crate) type Span = (f64, f64);

#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    Ball { center: Vector, radius: f64 },
    Capsule { a: Vector, b: Vector, radius: f64 },
}

/// Roots of `t^2 + 2 b t + q = 0` in increasing order, computed without cancellation.
#[inline]
fn quad_roots(b: f64, q: f64) -> Option<(f64, f64)> {
    let disc = b * b - q;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    if b > 0.0 {
        let t0 = -b - s;
        Some((t0, if t0 != 0.0 { q / t0 } else { -b + s }))
    } else {
        let t1 = -b + s;
        Some((if t1 != 0.0 { q / t1 } else { -b - s }, t1))
    }
}

#[inline]
fn ball_span(c: &Vector, r: f64, o: &Vector, d: &Vector) -> Option<Span> {
    let oc = *o - *c;
    quad_roots(oc.dot(d), oc.norm_sq() - r * r)
}

/// Closest point parameter `s` in [0,1] of `x` on segment `a + s (b - a)`.
#[inline]
fn segment_param(a: &Vector, b: &Vector, x: &Vector) -> f64 {
    let ba = *b - *a;
    let l2 = ba.norm_sq();
    if l2 == 0.0 {
        return 0.0;
    }
    ((*x - *a).dot(&ba) / l2).clamp(0.0, 1.0)
}

/// Some unit vector orthogonal to `axis` (or `e_0` if `axis` is zero).
fn orthogonal_unit(axis: &Vector) -> Vector {
    let n = axis.dim();
    let l2 = axis.norm_sq();
    if l2 == 0.0 {
        return Vector::axis(n, 0);
    }
    // Axis with the smallest component along `axis`, projected out.
    let mut k = 0;
    for i in 1..n {
        if axis[i].abs() < axis[k].abs() {
            k = i;
        }
    }
    let e = Vector::axis(n, k);
    let v = e - *axis * (axis[k] / l2);
    v.normalized()
}

impl Primitive {
    pub fn dim(&self) -> usize {
        match self {
            Primitive::Ball { center, .. } => center.dim(),
            Primitive::Capsule { a, .. } => a.dim(),
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            Primitive::Ball { radius, .. } | Primitive::Capsule { radius, .. } => *radius,
        }
    }

    /// Nearest point on the core (center or axis segment) to `x`.
    #[inline]
    pub fn core_point(&self, x: &Vector) -> Vector {
        match self {
            Primitive::Ball { center, .. } => *center,
            Primitive::Capsule { a, b, .. } => {
                let s = segment_param(a, b, x);
                a.axpy(s, &(*b - *a))
            }
        }
    }

    #[inline]
    pub fn sdf(&self, x: &Vector) -> f64 {
        x.dist(&self.core_point(x)) - self.radius()
    }

    #[inline]
    pub fn contains(&self, x: &Vector) -> bool {
        let p = self.core_point(x);
        (*x - p).norm_sq() < self.radius() * self.radius()
    }

    /// Signed distance and its gradient (outward unit normal direction).
    pub fn sdf_grad(&self, x: &Vector) -> (f64, Vector) {
        let p = self.core_point(x);
        let v = *x - p;
        let l = v.norm();
        let g = if l > 0.0 {
            v * (1.0 / l)
        } else {
            match self {
                Primitive::Ball { .. } => Vector::axis(x.dim(), 0),
                Primitive::Capsule { a, b, .. } => orthogonal_unit(&(*b - *a)),
            }
        };
        (l - self.radius(), g)
    }

    /// Parameter span of the line `o + t d` (|d| = 1) inside the primitive.
    pub(crate) fn span(&self, o: &Vector, d: &Vector) -> Option<Span> {
        match self {
            Primitive::Ball { center, radius } => ball_span(center, *radius, o, d),
            Primitive::Capsule { a, b, radius } => capsule_span(a, b, *radius, o, d),
        }
    }

    /// Nearest point of the primitive surface to `x`, with outward normal there.
    /// On the core itself the choice of direction is deterministic.
    pub fn surface_projection(&self, x: &Vector) -> (Vector, Vector) {
        let p = self.core_point(x);
        let v = *x - p;
        let l = v.norm();
        let nrm = if l > 1e-300 {
            v * (1.0 / l)
        } else {
            match self {
                Primitive::Ball { .. } => Vector::axis(x.dim(), 0),
                Primitive::Capsule { a, b, .. } => orthogonal_unit(&(*b - *a)),
            }
        };
        (p.axpy(self.radius(), &nrm), nrm)
    }

    /// Point of the closed primitive farthest from `q`.
    pub fn farthest_from(&self, q: &Vector) -> Vector {
        let far_on_ball = |c: &Vector, r: f64| {
            let v = *c - *q;
            let l = v.norm();
            let u = if l > 0.0 { v * (1.0 / l) } else { Vector::axis(q.dim(), 0) };
            c.axpy(r, &u)
        };
        match self {
            Primitive::Ball { center, radius } => far_on_ball(center, *radius),
            Primitive::Capsule { a, b, radius } => {
                let pa = far_on_ball(a, *radius);
                let pb = far_on_ball(b, *radius);
                if pa.dist(q) >= pb.dist(q) {
                    pa
                } else {
                    pb
                }
            }
        }
    }

    /// Bounding ball (center, radius).
    pub fn bounding_ball(&self) -> (Vector, f64) {
        match self {
            Primitive::Ball { center, radius } => (*center, *radius),
            Primitive::Capsule { a, b, radius } => ((*a + *b) * 0.5, 0.5 * a.dist(b) + radius),
        }
    }

    /// Largest distance from `q` to a point of the primitive.
    pub fn max_dist_from(&self, q: &Vector) -> f64 {
        match self {
            Primitive::Ball { center, radius } => center.dist(q) + radius,
            Primitive::Capsule { a, b, radius } => a.dist(q).max(b.dist(q)) + radius,
        }
    }

    /// Surface points of the primitive along `dirs` from its core: sphere
    /// points around a ball, and around both endpoints plus the mid ring of a capsule.
    pub fn surface_samples(&self, dirs: &[Vector], out: &mut Vec<Vector>) {
        match self {
            Primitive::Ball { center, radius } => {
                for d in dirs {
                    out.push(center.axpy(*radius, d));
                }
            }
            Primitive::Capsule { a, b, radius } => {
                let m = (*a + *b) * 0.5;
                for d in dirs {
                    out.push(a.axpy(*radius, d));
                    out.push(b.axpy(*radius, d));
                    let (p, _) = self.surface_projection(&m.axpy(*radius, d));
                    out.push(p);
                }
            }
        }
    }

    /// Distance between the cores of two primitives.
    pub fn core_distance(&self, other: &Primitive) -> f64 {
        let seg = |p: &Primitive| match p {
            Primitive::Ball { center, .. } => (*center, *center),
            Primitive::Capsule { a, b, .. } => (*a, *b),
        };
        let (p1, q1) = seg(self);
        let (p2, q2) = seg(other);
        segment_segment_distance(&p1, &q1, &p2, &q2)
    }

    pub fn overlaps(&self, other: &Primitive) -> bool {
        self.core_distance(other) < self.radius() + other.radius()
    }

    pub fn scaled_translated(&self, s: f64, v: &Vector) -> Primitive {
        match self {
            Primitive::Ball { center, radius } => Primitive::Ball {
                center: *center * s + *v,
                radius: radius * s,
            },
            Primitive::Capsule { a, b, radius } => Primitive::Capsule {
                a: *a * s + *v,
                b: *b * s + *v,
                radius: radius * s,
            },
        }
    }
}

fn capsule_span(a: &Vector, b: &Vector, r: f64, o: &Vector, d: &Vector) -> Option<Span> {
    let ba = *b - *a;
    let l2 = ba.norm_sq();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut take = |s: Option<Span>| {
        if let Some((t0, t1)) = s {
            if t1 > t0 {
                lo = lo.min(t0);
                hi = hi.max(t1);
            }
        }
    };
    take(ball_span(a, r, o, d));
    take(ball_span(b, r, o, d));
    if l2 > 0.0 {
        // Infinite cylinder intersected with the slab 0 <= s <= 1.
        let u = *o - *a;
        let ub = u.dot(&ba);
        let db = d.dot(&ba);
        let up = u - ba * (ub / l2);
        let dp = *d - ba * (db / l2);
        let aa = dp.norm_sq();
        let cyl = if aa < 1e-28 {
            if up.norm_sq() < r * r {
                Some((f64::NEG_INFINITY, f64::INFINITY))
            } else {
                None
            }
        } else {
            quad_roots(up.dot(&dp) / aa, (up.norm_sq() - r * r) / aa)
        };
        if let Some((c0, c1)) = cyl {
            let slab = if db.abs() < 1e-300 {
                if (0.0..=l2).contains(&ub) {
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    (1.0, 0.0)
                }
            } else {
                let s0 = -ub / db;
                let s1 = (l2 - ub) / db;
                (s0.min(s1), s0.max(s1))
            };
            let t0 = c0.max(slab.0);
            let t1 = c1.min(slab.1);
            take(Some((t0, t1)));
        }
    }
    if hi > lo {
        Some((lo, hi))
    } else {
        None
    }
}

/// Minimum distance between segments `[p1,q1]` and `[p2,q2]`.
pub fn segment_segment_distance(p1: &Vector, q1: &Vector, p2: &Vector, q2: &Vector) -> f64 {
    let d1 = *q1 - *p1;
    let d2 = *q2 - *p2;
    let r = *p1 - *p2;
    let a = d1.norm_sq();
    let e = d2.norm_sq();
    let f = d2.dot(&r);
    let eps = 1e-300;
    let (s, t);
    if a <= eps && e <= eps {
        return r.norm();
    }
    if a <= eps {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 1e-14 * a * e {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = p1.axpy(s, &d1);
    let c2 = p2.axpy(t, &d2);
    c1.dist(&c2)
}
