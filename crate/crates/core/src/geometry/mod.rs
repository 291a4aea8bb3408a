//! Bounded domains in R^n built from balls and capsules with union,
//! difference, translation and scaling, optionally deformed by `id + theta`.

mod boundary;
mod intervals;
mod perturb;
mod primitive;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{check_dim, Vector};

pub use boundary::{BoundaryPoint, DiameterPair};
pub use intervals::{gaps, Intervals};
pub use perturb::{Bump, PerturbationField};
pub use primitive::Primitive;

/// Serializable shape tree, as found in domain files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    Capsule { a: Vec<f64>, b: Vec<f64>, radius: f64 },
    Union { left: Box<Shape>, right: Box<Shape> },
    Difference { left: Box<Shape>, right: Box<Shape> },
    Translate { offset: Vec<f64>, inner: Box<Shape> },
    Scale { factor: f64, inner: Box<Shape> },
}

impl Shape {
    pub fn ball(center: &[f64], radius: f64) -> Shape {
        Shape::Ball { center: center.to_vec(), radius }
    }

    pub fn capsule(a: &[f64], b: &[f64], radius: f64) -> Shape {
        Shape::Capsule { a: a.to_vec(), b: b.to_vec(), radius }
    }

    pub fn union(self, other: Shape) -> Shape {
        Shape::Union { left: Box::new(self), right: Box::new(other) }
    }

    pub fn minus(self, hole: Shape) -> Shape {
        Shape::Difference { left: Box::new(self), right: Box::new(hole) }
    }

    pub fn translated(self, offset: &[f64]) -> Shape {
        Shape::Translate { offset: offset.to_vec(), inner: Box::new(self) }
    }

    pub fn scaled(self, factor: f64) -> Shape {
        Shape::Scale { factor, inner: Box::new(self) }
    }
}

/// On-disk domain description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainFile {
    pub dimension: usize,
    pub root: Shape,
}

#[derive(Clone, Debug, PartialEq)]
enum Csg {
    Prim(usize),
    Union(Box<Csg>, Box<Csg>),
    Difference(Box<Csg>, Box<Csg>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Solid,
    Hole,
}

/// A compiled domain. Affine wrappers are folded into the primitives.
#[derive(Clone, Debug)]
pub struct Domain {
    dim: usize,
    tree: Csg,
    prims: Vec<Primitive>,
    roles: Vec<Role>,
    field: Option<PerturbationField>,
    lipschitz: f64,
    shape: Shape,
}

/// A connected piece of the solid part of a domain.
#[derive(Clone, Debug)]
pub struct Component {
    /// Indices into `Domain::primitives`.
    pub primitives: Vec<usize>,
    /// Deepest core point of the component's primitives.
    pub anchor: Vector,
}

impl Domain {
    pub fn new(dim: usize, shape: &Shape) -> Result<Domain> {
        check_dim(dim)?;
        let mut prims = Vec::new();
        let mut roles = Vec::new();
        let tree = compile(dim, shape, 1.0, &Vector::zeros(dim), Role::Solid, &mut prims, &mut roles)?;
        let d = Domain {
            dim,
            tree,
            prims,
            roles,
            field: None,
            lipschitz: 0.0,
            shape: shape.clone(),
        };
        d.validate_holes(&d.tree)?;
        if d.components().is_empty() {
            return Err(Error::InvalidDomain("domain has no solid part".into()));
        }
        Ok(d)
    }

    pub fn from_file(f: &DomainFile) -> Result<Domain> {
        Domain::new(f.dimension, &f.root)
    }

    pub fn from_json(s: &str) -> Result<Domain> {
        let f: DomainFile = serde_json::from_str(s)?;
        Domain::from_file(&f)
    }

    pub fn load(path: &Path) -> Result<Domain> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidDomain(format!("{}: {e}", path.display())))?;
        Domain::from_json(&s)
    }

    pub fn ball(center: &[f64], radius: f64) -> Result<Domain> {
        Domain::new(center.len(), &Shape::ball(center, radius))
    }

    /// Two unit-scale balls joined along the first axis by a capsule tube.
    pub fn dumbbell(dim: usize, half_sep: f64, ball_radius: f64, tube_radius: f64) -> Result<Domain> {
        let mut c1 = vec![0.0; dim];
        let mut c2 = vec![0.0; dim];
        c1[0] = -half_sep;
        c2[0] = half_sep;
        let shape = Shape::ball(&c1, ball_radius)
            .union(Shape::ball(&c2, ball_radius))
            .union(Shape::capsule(&c1, &c2, tube_radius));
        Domain::new(dim, &shape)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn file(&self) -> DomainFile {
        DomainFile { dimension: self.dim, root: self.shape.clone() }
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.prims
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn perturbation(&self) -> Option<&PerturbationField> {
        self.field.as_ref()
    }

    /// The undeformed domain.
    pub fn base(&self) -> Domain {
        Domain { field: None, lipschitz: 0.0, ..self.clone() }
    }

    fn check(&self, x: &Vector) {
        assert_eq!(x.dim(), self.dim, "point dimension does not match domain");
    }

    /// Map `id + theta`; identity when unperturbed.
    pub fn forward_map(&self, x: &Vector) -> Vector {
        match &self.field {
            None => *x,
            Some(f) => *x + f.eval(x),
        }
    }

    /// Inverse of `forward_map`.
    pub fn inverse_map(&self, y: &Vector) -> Vector {
        match &self.field {
            None => *y,
            Some(f) => f.invert(y),
        }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.check(x);
        let x = self.inverse_map(x);
        self.tree.contains(&self.prims, &x)
    }

    /// Lower bound for the distance to the boundary, negative inside.
    pub fn sdf(&self, x: &Vector) -> f64 {
        self.check(x);
        match &self.field {
            None => self.tree.sdf(&self.prims, x),
            Some(f) => (1.0 - self.lipschitz) * self.tree.sdf(&self.prims, &f.invert(x)),
        }
    }

    /// `sdf` with its gradient; the gradient points outward on the boundary.
    pub fn sdf_grad(&self, x: &Vector) -> (f64, Vector) {
        self.check(x);
        match &self.field {
            None => self.tree.sdf_grad(&self.prims, x),
            Some(f) => {
                let u = f.invert(x);
                let (s, g) = self.tree.sdf_grad(&self.prims, &u);
                let gy = f.solve_jacobian_t(&u, &g);
                ((1.0 - self.lipschitz) * s, gy * (1.0 - self.lipschitz))
            }
        }
    }

    /// Conservative distance from an interior point to the boundary (0 outside).
    pub fn depth(&self, x: &Vector) -> f64 {
        (-self.sdf(x)).max(0.0)
    }

    /// Radius of a ball around `center` that contains the domain.
    pub fn bounding_radius(&self, center: &Vector) -> f64 {
        self.check(center);
        let base = self
            .prims
            .iter()
            .zip(&self.roles)
            .filter(|(_, r)| **r == Role::Solid)
            .map(|(p, _)| p.max_dist_from(center))
            .fold(0.0f64, f64::max);
        base + self.field.as_ref().map_or(0.0, |f| f.max_displacement())
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vector, Vector) {
        let mut lo = Vector::from_slice(&vec![f64::INFINITY; self.dim]);
        let mut hi = Vector::from_slice(&vec![f64::NEG_INFINITY; self.dim]);
        let pad = self.field.as_ref().map_or(0.0, |f| f.max_displacement());
        for (p, r) in self.prims.iter().zip(&self.roles) {
            if *r != Role::Solid {
                continue;
            }
            let ends: Vec<Vector> = match p {
                Primitive::Ball { center, .. } => vec![*center],
                Primitive::Capsule { a, b, .. } => vec![*a, *b],
            };
            for e in ends {
                for i in 0..self.dim {
                    lo[i] = lo[i].min(e[i] - p.radius() - pad);
                    hi[i] = hi[i].max(e[i] + p.radius() + pad);
                }
            }
        }
        (lo, hi)
    }

    /// Characteristic length: half the diagonal of the bounding box.
    pub fn scale(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        0.5 * lo.dist(&hi)
    }

    /// Sorted disjoint parameter intervals `t >= 0` where `o + t d` lies in
    /// the domain (`|d| = 1`).
    pub fn ray_intervals(&self, o: &Vector, d: &Vector) -> Intervals {
        match &self.field {
            None => self.tree.ray(&self.prims, o, d),
            Some(f) => self.perturbed_ray(f, o, d),
        }
    }

    /// The deformed domain `(id + theta)(self)`.
    pub fn perturb(&self, theta: &PerturbationField) -> Result<Domain> {
        if self.field.is_some() {
            return Err(Error::InvalidArgument("domain is already perturbed".into()));
        }
        if theta.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: theta.dim() });
        }
        let norm = theta.c2_norm_bound();
        if norm >= 0.5 {
            return Err(Error::PerturbationTooLarge(norm));
        }
        let lip = theta.lipschitz_bound();
        if lip >= 1.0 {
            return Err(Error::PerturbationTooLarge(lip));
        }
        Ok(Domain {
            field: Some(theta.clone()),
            lipschitz: lip,
            ..self.clone()
        })
    }

    /// Connected components of the solid primitives (by overlap).
    pub fn components(&self) -> Vec<Component> {
        let solid: Vec<usize> = (0..self.prims.len()).filter(|&i| self.roles[i] == Role::Solid).collect();
        let mut parent: Vec<usize> = (0..self.prims.len()).collect();
        fn find(p: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            let mut j = i;
            while p[j] != r {
                let nx = p[j];
                p[j] = r;
                j = nx;
            }
            r
        }
        for (k, &i) in solid.iter().enumerate() {
            for &j in &solid[k + 1..] {
                if self.prims[i].overlaps(&self.prims[j]) {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for &i in &solid {
            let r = find(&mut parent, i);
            match groups.iter_mut().find(|(root, _)| *root == r) {
                Some((_, g)) => g.push(i),
                None => groups.push((r, vec![i])),
            }
        }
        let base = self.base();
        groups
            .into_iter()
            .filter_map(|(_, members)| {
                let mut best: Option<(f64, Vector)> = None;
                for &i in &members {
                    let p = &self.prims[i];
                    let (c, _) = p.bounding_ball();
                    let core = p.core_point(&c);
                    let mut cands = vec![core];
                    // off-core points survive holes around the core
                    for frac in [0.5, 0.75, 0.9, 0.97] {
                        for k in 0..self.dim {
                            cands.push(core.axpy(frac * p.radius(), &Vector::axis(self.dim, k)));
                            cands.push(core.axpy(-frac * p.radius(), &Vector::axis(self.dim, k)));
                        }
                    }
                    for c in cands {
                        if !base.contains(&c) {
                            continue;
                        }
                        let dep = base.depth(&c);
                        if best.as_ref().map_or(true, |(bd, _)| dep > *bd) {
                            best = Some((dep, c));
                        }
                    }
                }
                best.map(|(_, a)| Component { primitives: members, anchor: self.forward_map(&a) })
            })
            .collect()
    }

    /// Index of the component whose primitives contain `x` (after undoing the deformation).
    pub fn component_of(&self, x: &Vector, comps: &[Component]) -> Option<usize> {
        let u = self.inverse_map(x);
        comps
            .iter()
            .position(|c| c.primitives.iter().any(|&i| self.prims[i].contains(&u)))
    }

    fn validate_holes(&self, t: &Csg) -> Result<()> {
        match t {
            Csg::Prim(_) => Ok(()),
            Csg::Union(a, b) => {
                self.validate_holes(a)?;
                self.validate_holes(b)
            }
            Csg::Difference(a, b) => {
                self.validate_holes(a)?;
                let mut holes = Vec::new();
                b.collect_prims(&mut holes);
                for h in holes {
                    let p = &self.prims[h];
                    let pts: Vec<Vector> = match p {
                        Primitive::Ball { center, .. } => vec![*center],
                        Primitive::Capsule { a: pa, b: pb, .. } => {
                            (0..=32).map(|k| pa.axpy(k as f64 / 32.0, &(*pb - *pa))).collect()
                        }
                    };
                    for q in pts {
                        if !(a.sdf(&self.prims, &q) < -p.radius()) {
                            return Err(Error::InvalidDomain(
                                "difference: hole must lie strictly inside the left operand".into(),
                            ));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    fn perturbed_ray(&self, f: &PerturbationField, o: &Vector, d: &Vector) -> Intervals {
        boundary::perturbed_ray(self, f, o, d)
    }

    pub(crate) fn base_sdf(&self, x: &Vector) -> f64 {
        self.tree.sdf(&self.prims, x)
    }

    pub(crate) fn base_ray(&self, o: &Vector, d: &Vector) -> Intervals {
        self.tree.ray(&self.prims, o, d)
    }

    pub(crate) fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

fn to_vec(dim: usize, v: &[f64], what: &str) -> Result<Vector> {
    if v.len() != dim {
        return Err(Error::InvalidDomain(format!(
            "{what}: expected {dim} coordinates, found {}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidDomain(format!("{what}: non-finite coordinate")));
    }
    Ok(Vector::from_slice(v))
}

fn compile(
    dim: usize,
    s: &Shape,
    scale: f64,
    offset: &Vector,
    role: Role,
    prims: &mut Vec<Primitive>,
    roles: &mut Vec<Role>,
) -> Result<Csg> {
    let positive = |r: f64, what: &str| {
        if r > 0.0 && r.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidDomain(format!("{what} must be positive, got {r}")))
        }
    };
    match s {
        Shape::Ball { center, radius } => {
            positive(*radius, "ball radius")?;
            let c = to_vec(dim, center, "ball center")?;
            prims.push(Primitive::Ball { center: c, radius: *radius }.scaled_translated(scale, offset));
            roles.push(role);
            Ok(Csg::Prim(prims.len() - 1))
        }
        Shape::Capsule { a, b, radius } => {
            positive(*radius, "capsule radius")?;
            let a = to_vec(dim, a, "capsule endpoint")?;
            let b = to_vec(dim, b, "capsule endpoint")?;
            prims.push(Primitive::Capsule { a, b, radius: *radius }.scaled_translated(scale, offset));
            roles.push(role);
            Ok(Csg::Prim(prims.len() - 1))
        }
        Shape::Union { left, right } => {
            let l = compile(dim, left, scale, offset, role, prims, roles)?;
            let r = compile(dim, right, scale, offset, role, prims, roles)?;
            Ok(Csg::Union(Box::new(l), Box::new(r)))
        }
        Shape::Difference { left, right } => {
            if role == Role::Hole {
                return Err(Error::InvalidDomain("nested difference inside a hole".into()));
            }
            let l = compile(dim, left, scale, offset, role, prims, roles)?;
            let r = compile(dim, right, scale, offset, Role::Hole, prims, roles)?;
            Ok(Csg::Difference(Box::new(l), Box::new(r)))
        }
        Shape::Translate { offset: v, inner } => {
            let v = to_vec(dim, v, "translation")?;
            compile(dim, inner, scale, &(*offset + v * scale), role, prims, roles)
        }
        Shape::Scale { factor, inner } => {
            positive(*factor, "scale factor")?;
            compile(dim, inner, scale * factor, offset, role, prims, roles)
        }
    }
}

impl Csg {
    fn collect_prims(&self, out: &mut Vec<usize>) {
        match self {
            Csg::Prim(i) => out.push(*i),
            Csg::Union(a, b) | Csg::Difference(a, b) => {
                a.collect_prims(out);
                b.collect_prims(out);
            }
        }
    }

    fn contains(&self, p: &[Primitive], x: &Vector) -> bool {
        match self {
            Csg::Prim(i) => p[*i].contains(x),
            Csg::Union(a, b) => a.contains(p, x) || b.contains(p, x),
            Csg::Difference(a, b) => a.contains(p, x) && !b.contains(p, x),
        }
    }

    fn sdf(&self, p: &[Primitive], x: &Vector) -> f64 {
        match self {
            Csg::Prim(i) => p[*i].sdf(x),
            Csg::Union(a, b) => a.sdf(p, x).min(b.sdf(p, x)),
            Csg::Difference(a, b) => a.sdf(p, x).max(-b.sdf(p, x)),
        }
    }

    fn sdf_grad(&self, p: &[Primitive], x: &Vector) -> (f64, Vector) {
        match self {
            Csg::Prim(i) => p[*i].sdf_grad(x),
            Csg::Union(a, b) => {
                let ga = a.sdf_grad(p, x);
                let gb = b.sdf_grad(p, x);
                if ga.0 <= gb.0 {
                    ga
                } else {
                    gb
                }
            }
            Csg::Difference(a, b) => {
                let ga = a.sdf_grad(p, x);
                let (sb, gb) = b.sdf_grad(p, x);
                if ga.0 >= -sb {
                    ga
                } else {
                    (-sb, -gb)
                }
            }
        }
    }

    fn ray(&self, p: &[Primitive], o: &Vector, d: &Vector) -> Intervals {
        match self {
            Csg::Prim(i) => {
                let mut out = Intervals::new();
                if let Some((t0, t1)) = p[*i].span(o, d) {
                    if t1 > 0.0 {
                        out.push((t0.max(0.0), t1));
                    }
                }
                out
            }
            Csg::Union(a, b) => intervals::union(&a.ray(p, o, d), &b.ray(p, o, d)),
            Csg::Difference(a, b) => {
                let l = a.ray(p, o, d);
                if l.is_empty() {
                    return l;
                }
                intervals::difference(&l, &b.ray(p, o, d))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &[f64]) -> Vector {
        Vector::from_slice(s)
    }

    #[test]
    fn json_roundtrip_and_membership() {
        let text = r#"{"dimension":3,"root":{"type":"union",
            "left":{"type":"ball","center":[-2,0,0],"radius":1},
            "right":{"type":"translate","offset":[2,0,0],
                     "inner":{"type":"scale","factor":0.5,
                              "inner":{"type":"ball","center":[0,0,0],"radius":2}}}}}"#;
        let d = Domain::from_json(text).unwrap();
        assert!(d.contains(&v(&[-2.0, 0.9, 0.0])));
        assert!(d.contains(&v(&[2.0, 0.0, 0.95])));
        assert!(!d.contains(&v(&[0.0, 0.0, 0.0])));
        assert_eq!(d.components().len(), 2);
        let back = serde_json::to_string(&d.file()).unwrap();
        let d2 = Domain::from_json(&back).unwrap();
        assert_eq!(d2.primitives(), d.primitives());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Domain::ball(&[0.0, 0.0], 1.0).is_err());
        assert!(Domain::ball(&[0.0, 0.0, 0.0], -1.0).is_err());
        let hole_outside = Shape::ball(&[0.0; 3], 1.0).minus(Shape::ball(&[0.9, 0.0, 0.0], 0.2));
        assert!(Domain::new(3, &hole_outside).is_err());
        let ok = Shape::ball(&[0.0; 3], 1.0).minus(Shape::ball(&[0.0; 3], 0.2));
        assert!(Domain::new(3, &ok).is_ok());
    }

    #[test]
    fn thick_hole_keeps_its_component() {
        let shell = Shape::ball(&[0.0; 3], 1.0).minus(Shape::ball(&[0.0; 3], 0.9));
        let d = Domain::new(3, &shell).unwrap();
        let c = d.components();
        assert_eq!(c.len(), 1);
        assert!(d.contains(&c[0].anchor));
    }

    #[test]
    fn dumbbell_rays() {
        let d = Domain::dumbbell(3, 2.0, 1.0, 0.3).unwrap();
        let iv = d.ray_intervals(&v(&[-4.0, 0.0, 0.0]), &v(&[1.0, 0.0, 0.0]));
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0 - 1.0).abs() < 1e-14 && (iv[0].1 - 7.0).abs() < 1e-14);
        let iv = d.ray_intervals(&v(&[-4.0, 0.5, 0.0]), &v(&[1.0, 0.0, 0.0]));
        assert_eq!(iv.len(), 2);
        assert_eq!(d.components().len(), 1);
    }

    #[test]
    fn hole_rays() {
        let shape = Shape::ball(&[0.0; 3], 1.0).minus(Shape::ball(&[0.0; 3], 0.1));
        let d = Domain::new(3, &shape).unwrap();
        let iv = d.ray_intervals(&v(&[0.5, 0.0, 0.0]), &v(&[-1.0, 0.0, 0.0]));
        assert_eq!(iv.len(), 2);
        assert!((iv[0].1 - 0.4).abs() < 1e-14 && (iv[1].0 - 0.6).abs() < 1e-14);
        assert!((iv[1].1 - 1.5).abs() < 1e-14);
    }

    #[test]
    fn perturbation_guard() {
        let d = Domain::ball(&[0.0; 3], 1.0).unwrap();
        let big = PerturbationField::new(
            3,
            vec![Bump { center: v(&[0.0; 3]), width: 1.0, displacement: v(&[0.3, 0.0, 0.0]) }],
        )
        .unwrap();
        assert!(matches!(d.perturb(&big), Err(Error::PerturbationTooLarge(_))));
    }
}
