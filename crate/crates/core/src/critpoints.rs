//! Critical points of `psi`: minima by multistart damped Newton, saddles
//! between two minima by a climbing string, Morse classification from the
//! Hessian spectrum, and a genericity audit over random domain deformations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, PerturbationField, Primitive, Role};
use crate::quadrature::{psi_integrals, PsiEvaluation, QuadratureConfig};
use crate::vector::Vector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CritConfig {
    /// Pseudo-random interior seeds on top of the deterministic ones.
    pub multistart: usize,
    /// Gradient-norm stopping threshold.
    pub newton_tol: f64,
    pub max_iters: usize,
    pub dedupe_radius: f64,
    pub string_nodes: usize,
    /// Threshold on `|det H| / |H|_op^n`.
    pub morse_tol: f64,
    /// Ray budget per node while the string moves; the final Newton polish
    /// uses the full quadrature budget.
    pub string_budget: usize,
}

impl Default for CritConfig {
    fn default() -> Self {
        CritConfig {
            multistart: 4,
            newton_tol: 1e-6,
            max_iters: 60,
            dedupe_radius: 1e-3,
            string_nodes: 12,
            morse_tol: 1e-6,
            string_budget: 1 << 16,
        }
    }
}

impl CritConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0 && self.dedupe_radius > 0.0 && self.morse_tol > 0.0) {
            return Err(Error::InvalidArgument("newton_tol, dedupe_radius and morse_tol must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        if self.string_nodes < 8 {
            return Err(Error::InvalidArgument("string_nodes must be at least 8".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalPoint {
    pub location: Vector,
    pub psi_value: f64,
    pub psi_std_error: f64,
    pub grad_norm: f64,
    /// Ascending.
    pub hess_eigs: Vec<f64>,
    pub morse_index: usize,
    /// `|det H| / |H|_op^n`.
    pub morse_metric: f64,
    pub nondegenerate: bool,
}

impl CriticalPoint {
    fn classify(e: &PsiEvaluation, morse_tol: f64) -> CriticalPoint {
        let eig = SymmetricEigen::new(e.hessian_matrix()).eigenvalues;
        let mut eigs: Vec<f64> = eig.iter().copied().collect();
        eigs.sort_by(f64::total_cmp);
        let op = eigs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let metric = if op > 0.0 { eigs.iter().map(|v| (v / op).abs()).product() } else { 0.0 };
        CriticalPoint {
            location: e.point,
            psi_value: e.value,
            psi_std_error: e.value_err,
            grad_norm: e.gradient.norm(),
            morse_index: eigs.iter().filter(|v| **v < 0.0).count(),
            hess_eigs: eigs,
            morse_metric: metric,
            nondegenerate: metric >= morse_tol,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    /// Descent on `psi` with an absolute-value modified Hessian.
    Minimize,
    /// Plain Newton on the gradient, accepted on decrease of its norm.
    Stationary,
}

fn eval(domain: &Domain, x: &Vector, cfg: &QuadratureConfig) -> Result<PsiEvaluation> {
    psi_integrals(domain, x, cfg)
}

/// `-V |Lambda|^{-1} V^T g` with eigenvalues floored at a fraction of the largest.
fn modified_newton_step(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let se = SymmetricEigen::new(h.clone());
    let top = se.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let mut out = DVector::zeros(g.len());
    for k in 0..g.len() {
        let v = se.eigenvectors.column(k);
        let lam = se.eigenvalues[k].abs().max(1e-8 * top);
        out -= v * (v.dot(g) / lam);
    }
    out
}

fn newton_step(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    match h.clone().lu().solve(g) {
        Some(s) if s.iter().all(|v| v.is_finite()) => -s,
        _ => modified_newton_step(h, g),
    }
}

fn to_vector(v: &DVector<f64>) -> Vector {
    Vector::from_slice(v.as_slice())
}

/// The straight segment from `a` to `b` stays inside the domain (checked at
/// a few interior points) and `b` passes the evaluation guard.
fn segment_ok(domain: &Domain, a: &Vector, b: &Vector, cfg: &QuadratureConfig) -> bool {
    if !domain.contains(b) {
        return false;
    }
    let guard = cfg.boundary_guard * domain.bounding_radius(b);
    if domain.depth(b) < guard {
        return false;
    }
    (1..8).all(|k| domain.contains(&a.axpy(k as f64 / 8.0, &(*b - *a))))
}

fn newton(domain: &Domain, x0: &Vector, mode: Mode, crit: &CritConfig, quad: &QuadratureConfig) -> Result<PsiEvaluation> {
    let mut e = eval(domain, x0, quad)?;
    let mut trust = (0.5 * domain.depth(x0)).max(1e-6 * domain.scale());
    let cap = domain.scale();
    for _ in 0..crit.max_iters {
        let gnorm = e.gradient.norm();
        if gnorm <= crit.newton_tol {
            return Ok(e);
        }
        let g = e.gradient_vector();
        let h = e.hessian_matrix();
        let full = match mode {
            Mode::Minimize => modified_newton_step(&h, &g),
            Mode::Stationary => newton_step(&h, &g),
        };
        let mut step = full.clone();
        if step.norm() > trust {
            step *= trust / step.norm();
        }
        let mut accepted = false;
        for _ in 0..40 {
            let y = e.point + to_vector(&step);
            if step.norm() < 1e-15 * (1.0 + e.point.norm()) {
                break;
            }
            if !segment_ok(domain, &e.point, &y, quad) {
                step *= 0.5;
                continue;
            }
            let ey = eval(domain, &y, quad)?;
            let gy = ey.gradient.norm();
            let ok = match mode {
                Mode::Minimize => {
                    let pred = -(g.dot(&step) + 0.5 * step.dot(&(&h * &step)));
                    let noise = (e.value_err.powi(2) + ey.value_err.powi(2)).sqrt();
                    if pred >= 3.0 * noise {
                        e.value - ey.value >= 1e-4 * pred
                    } else {
                        gy < gnorm
                    }
                }
                Mode::Stationary => gy < gnorm,
            };
            if ok {
                let hit = step.norm() >= 0.99 * trust;
                e = ey;
                if hit {
                    trust = (2.0 * trust).min(cap);
                }
                accepted = true;
                break;
            }
            step *= 0.5;
            trust = step.norm().max(1e-12 * cap);
        }
        if !accepted {
            break;
        }
    }
    if e.gradient.norm() <= crit.newton_tol {
        return Ok(e);
    }
    Err(Error::NoConvergence(format!(
        "Newton stopped at {:?} with gradient norm {:.3e}",
        e.point,
        e.gradient.norm()
    )))
}

/// Deterministic seeds: one anchor per connected component, then the core
/// point of every solid primitive.
fn deterministic_seeds(domain: &Domain) -> Vec<Vector> {
    let mut out: Vec<Vector> = domain.components().iter().map(|c| c.anchor).collect();
    for (p, r) in domain.primitives().iter().zip(domain.roles()) {
        if *r != Role::Solid {
            continue;
        }
        let c = match p {
            Primitive::Ball { center, .. } => *center,
            Primitive::Capsule { a, b, .. } => (*a + *b) * 0.5,
        };
        let c = domain.forward_map(&c);
        if domain.contains(&c) && out.iter().all(|o| o.dist(&c) > 1e-9) {
            out.push(c);
        }
    }
    out
}

fn random_seeds(domain: &Domain, count: usize, seed: u64, quad: &QuadratureConfig) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x5eed);
    let (lo, hi) = domain.bounding_box();
    let n = domain.dim();
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 10_000 * count.max(1) {
        tries += 1;
        let mut x = Vector::zeros(n);
        for i in 0..n {
            x[i] = rng.gen_range(lo[i]..hi[i]);
        }
        if domain.contains(&x) && domain.depth(&x) >= 10.0 * quad.boundary_guard * domain.bounding_radius(&x) {
            out.push(x);
        }
    }
    out
}

fn dedupe(points: Vec<CriticalPoint>, radius: f64) -> Vec<CriticalPoint> {
    let mut out: Vec<CriticalPoint> = Vec::new();
    for p in points {
        if out.iter().all(|q| q.location.dist(&p.location) > radius) {
            out.push(p);
        }
    }
    out
}

fn sort_points(points: &mut [CriticalPoint]) {
    points.sort_by(|a, b| {
        a.morse_index
            .cmp(&b.morse_index)
            .then(a.psi_value.total_cmp(&b.psi_value))
            .then(a.location.lex_cmp(&b.location))
    });
}

/// Local minima of `psi`, ordered by value.
pub fn find_minima(domain: &Domain, crit: &CritConfig, quad: &QuadratureConfig) -> Result<Vec<CriticalPoint>> {
    crit.validate()?;
    quad.validate()?;
    let mut seeds = deterministic_seeds(domain);
    seeds.extend(random_seeds(domain, crit.multistart, quad.seed, quad));
    let mut found = Vec::new();
    let mut last_err = None;
    for s in &seeds {
        match newton(domain, s, Mode::Minimize, crit, quad) {
            Ok(e) => {
                let cp = CriticalPoint::classify(&e, crit.morse_tol);
                if cp.morse_index == 0 {
                    found.push(cp);
                }
            }
            Err(err @ (Error::NoConvergence(_) | Error::QuadratureTarget { .. })) => last_err = Some(err),
            Err(Error::TooCloseToBoundary { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let mut found = dedupe(found, crit.dedupe_radius);
    if found.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::NoConvergence("no seed converged to a minimum".into())));
    }
    sort_points(&mut found);
    Ok(found)
}

/// Redistribute `pts` at equal arc length along their polyline.
fn reparametrize(pts: &[Vector]) -> Vec<Vector> {
    let m = pts.len();
    if m < 3 {
        return pts.to_vec();
    }
    let mut cum = vec![0.0];
    for w in pts.windows(2) {
        cum.push(cum.last().unwrap() + w[0].dist(&w[1]));
    }
    let total = *cum.last().unwrap();
    if total == 0.0 {
        return pts.to_vec();
    }
    let mut out = vec![pts[0]];
    let mut seg = 0;
    for k in 1..m - 1 {
        let s = total * k as f64 / (m - 1) as f64;
        while seg + 1 < m - 1 && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 { (s - cum[seg]) / len } else { 0.0 };
        out.push(pts[seg].axpy(t, &(pts[seg + 1] - pts[seg])));
    }
    out.push(pts[m - 1]);
    out
}

/// Saddle between two minima by a climbing string, finished by a Newton
/// polish of the highest node at the full quadrature budget.
pub fn mountain_pass(
    domain: &Domain,
    x1: &Vector,
    x2: &Vector,
    crit: &CritConfig,
    quad: &QuadratureConfig,
) -> Result<CriticalPoint> {
    crit.validate()?;
    quad.validate()?;
    let n = domain.dim();
    if x1.dim() != n || x2.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x1.dim().min(x2.dim()) });
    }
    let sep = x1.dist(x2);
    if sep <= crit.dedupe_radius {
        return Err(Error::PathCollapse);
    }
    let m = crit.string_nodes;
    let scfg = QuadratureConfig {
        near_budget: crit.string_budget.min(quad.near_budget).max(1024),
        ..quad.clone()
    };
    let mut nodes: Vec<Vector> = (0..m).map(|k| x1.axpy(k as f64 / (m - 1) as f64, &(*x2 - *x1))).collect();
    for x in &nodes[1..m - 1] {
        if !domain.contains(x) {
            return Err(Error::InvalidArgument("straight initial path leaves the domain".into()));
        }
    }
    let e1 = eval(domain, x1, &scfg)?;
    let e2 = eval(domain, x2, &scfg)?;
    let mut climb = 1;
    for _ in 0..4 * crit.max_iters {
        let evals = nodes[1..m - 1].iter().map(|x| eval(domain, x, &scfg)).collect::<Result<Vec<_>>>()?;
        climb = 1 + (0..m - 2).fold(0, |best, i| if evals[i].value > evals[best].value { i } else { best });
        let spacing = sep / (m - 1) as f64;
        let mut moved = 0.0f64;
        let mut worst = 0.0f64;
        let mut next = nodes.clone();
        for i in 1..m - 1 {
            let e = &evals[i - 1];
            let tau = DVector::from_column_slice((nodes[i + 1] - nodes[i - 1]).normalized().as_slice());
            let g = e.gradient_vector();
            let h = e.hessian_matrix();
            let p = DMatrix::identity(n, n) - &tau * tau.transpose();
            let gp = &p * &g;
            let top = SymmetricEigen::new(h.clone()).eigenvalues.amax();
            let hp = &p * &h * &p + &tau * tau.transpose() * top;
            let mut step = modified_newton_step(&hp, &gp);
            let gt = g.dot(&tau);
            if i == climb {
                let curv = tau.dot(&(&h * &tau)).abs().max(1e-8 * top);
                step += &tau * (gt / curv);
                worst = worst.max(g.norm());
            } else {
                worst = worst.max(gp.norm());
            }
            let lim = 0.25 * spacing.min(domain.depth(&nodes[i]).max(1e-6 * spacing));
            if step.norm() > lim {
                step *= lim / step.norm();
            }
            let mut y = nodes[i] + to_vector(&step);
            let mut tries = 0;
            while !segment_ok(domain, &nodes[i], &y, &scfg) && tries < 30 {
                step *= 0.5;
                y = nodes[i] + to_vector(&step);
                tries += 1;
            }
            if tries < 30 {
                moved = moved.max(step.norm());
                next[i] = y;
            }
        }
        let fixed = next[climb];
        let mut left = reparametrize(&next[..=climb]);
        let right = reparametrize(&next[climb..]);
        left.pop();
        left.extend(right);
        nodes = left;
        nodes[climb] = fixed;
        if moved < 1e-4 * spacing || worst < 1e3 * crit.newton_tol {
            break;
        }
    }
    let top = eval(domain, &nodes[climb], &scfg)?;
    if top.value <= e1.value.max(e2.value) || nodes[climb].dist(x1).min(nodes[climb].dist(x2)) <= crit.dedupe_radius {
        return Err(Error::PathCollapse);
    }
    let e = newton(domain, &nodes[climb], Mode::Stationary, crit, quad)?;
    let cp = CriticalPoint::classify(&e, crit.morse_tol);
    if cp.location.dist(x1).min(cp.location.dist(x2)) <= crit.dedupe_radius {
        return Err(Error::PathCollapse);
    }
    if cp.morse_index == 0 {
        return Err(Error::NoConvergence("string top relaxed to a minimum".into()));
    }
    Ok(cp)
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusReport {
    pub points: Vec<CriticalPoint>,
    /// Number of connected components, a lower bound for the category.
    pub cat_lower_bound: usize,
    pub satisfied: bool,
    /// Sub-operations that failed, in the order they were attempted.
    pub failures: Vec<String>,
}

impl CensusReport {
    pub fn morse_indices(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.morse_index).collect()
    }

    pub fn all_nondegenerate(&self) -> bool {
        self.points.iter().all(|p| p.nondegenerate)
    }

    pub fn min_morse_metric(&self) -> f64 {
        self.points.iter().map(|p| p.morse_metric).fold(f64::INFINITY, f64::min)
    }
}

/// Minima plus one mountain-pass saddle for every pair of minima in the
/// same connected component.
pub fn census(domain: &Domain, crit: &CritConfig, quad: &QuadratureConfig) -> Result<CensusReport> {
    let comps = domain.components();
    let minima = find_minima(domain, crit, quad)?;
    let mut points = minima.clone();
    let mut failures = Vec::new();
    for i in 0..minima.len() {
        for j in i + 1..minima.len() {
            let (a, b) = (&minima[i].location, &minima[j].location);
            let (ca, cb) = (domain.component_of(a, &comps), domain.component_of(b, &comps));
            if ca.is_none() || ca != cb {
                continue;
            }
            match mountain_pass(domain, a, b, crit, quad) {
                Ok(s) => points.push(s),
                Err(e) => failures.push(format!("mountain pass {i}-{j}: {e}")),
            }
        }
    }
    let mut points = dedupe(points, crit.dedupe_radius);
    sort_points(&mut points);
    let bound = comps.len();
    Ok(CensusReport { satisfied: points.len() >= bound, cat_lower_bound: bound, points, failures })
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub c2_norm: f64,
    pub field: PerturbationField,
    pub points: Vec<CriticalPoint>,
    pub min_morse_metric: f64,
    pub nondegenerate: bool,
    /// Same number of critical points with the same Morse indices as the
    /// unperturbed domain.
    pub persisted: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub rho: f64,
    pub morse_tol: f64,
    pub baseline: Vec<CriticalPoint>,
    pub trials: Vec<TrialReport>,
    pub all_nondegenerate: bool,
    pub all_persisted: bool,
}

/// Bumps per random deformation.
const AUDIT_BUMPS: usize = 3;

/// Census of `trials` random deformations with `|theta|_{C^2} = rho`.
pub fn morse_audit(
    domain: &Domain,
    rho: f64,
    trials: usize,
    seed: u64,
    crit: &CritConfig,
    quad: &QuadratureConfig,
) -> Result<AuditReport> {
    if !(0.0..0.5).contains(&rho) {
        return Err(Error::PerturbationTooLarge(rho));
    }
    if domain.perturbation().is_some() {
        return Err(Error::InvalidArgument("audit expects an unperturbed domain".into()));
    }
    let base = census(domain, crit, quad)?;
    let base_idx = base.morse_indices();
    let (lo, hi) = domain.bounding_box();
    let scale = domain.scale();
    let mut out = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64 + 1);
        let field = if rho == 0.0 {
            PerturbationField::zero(domain.dim())
        } else {
            PerturbationField::random(domain.dim(), AUDIT_BUMPS, &lo, &hi, (0.25 * scale, 0.75 * scale), rho, &mut rng)
        };
        let res = if field.is_zero() { Ok(domain.clone()) } else { domain.perturb(&field) }
            .and_then(|d| census(&d, crit, quad));
        let report = match res {
            Ok(c) => TrialReport {
                trial: t,
                c2_norm: field.c2_norm_bound(),
                min_morse_metric: c.min_morse_metric(),
                nondegenerate: c.all_nondegenerate(),
                persisted: c.morse_indices() == base_idx,
                points: c.points,
                field,
                error: None,
            },
            Err(e) => TrialReport {
                trial: t,
                c2_norm: field.c2_norm_bound(),
                field,
                points: Vec::new(),
                min_morse_metric: 0.0,
                nondegenerate: false,
                persisted: false,
                error: Some(e.to_string()),
            },
        };
        out.push(report);
    }
    Ok(AuditReport {
        rho,
        morse_tol: crit.morse_tol,
        all_nondegenerate: out.iter().all(|t| t.nondegenerate),
        all_persisted: out.iter().all(|t| t.persisted),
        baseline: base.points,
        trials: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;

    fn quick() -> QuadratureConfig {
        QuadratureConfig::default().with_budget(1 << 16)
    }

    #[test]
    fn ball_has_one_minimum_at_center() {
        let d = Domain::ball(&[0.0; 3], 1.0).unwrap();
        let m = find_minima(&d, &CritConfig::default(), &quick()).unwrap();
        assert_eq!(m.len(), 1);
        assert!(m[0].location.norm() < 1e-6);
        assert_eq!(m[0].morse_index, 0);
        assert!(m[0].nondegenerate);
    }

    #[test]
    fn off_center_ball_minimum_is_translated() {
        let v = [0.7, -0.2, 0.4];
        let d = Domain::new(3, &Shape::ball(&[0.0; 3], 1.0).translated(&v)).unwrap();
        let crit = CritConfig { multistart: 3, ..CritConfig::default() };
        let m = find_minima(&d, &crit, &quick()).unwrap();
        assert_eq!(m.len(), 1);
        assert!(m[0].location.dist(&Vector::from_slice(&v)) < 1e-5);
    }

    #[test]
    fn two_balls_give_two_minima_ordered_by_size() {
        let shape = Shape::ball(&[-2.0, 0.0, 0.0], 1.0).union(Shape::ball(&[2.0, 0.0, 0.0], 0.6));
        let d = Domain::new(3, &shape).unwrap();
        let r = census(&d, &CritConfig::default(), &quick()).unwrap();
        assert_eq!(r.points.len(), 2);
        assert_eq!(r.cat_lower_bound, 2);
        assert!(r.satisfied);
        assert!(r.points[0].location[0] < -1.0);
        assert!(r.points[0].psi_value < r.points[1].psi_value);
    }

    #[test]
    fn dumbbell_census_has_saddle_on_bridge() {
        let d = Domain::dumbbell(3, 2.0, 1.0, 0.3).unwrap();
        let crit = CritConfig::default();
        let r = census(&d, &crit, &quick()).unwrap();
        assert_eq!(r.cat_lower_bound, 1);
        assert_eq!(r.morse_indices(), vec![0, 0, 1]);
        let s = &r.points[2];
        assert!(s.location[0].abs() < 1e-3);
        assert!((s.location[1].powi(2) + s.location[2].powi(2)).sqrt() < 0.3);
        assert!(s.psi_value > r.points[0].psi_value.max(r.points[1].psi_value));
        for p in &r.points {
            assert!(p.grad_norm <= crit.newton_tol);
            assert!(p.nondegenerate);
        }
        for (i, p) in r.points.iter().enumerate() {
            for q in &r.points[i + 1..] {
                assert!(p.location.dist(&q.location) > crit.dedupe_radius);
            }
        }
    }

    #[test]
    fn minima_follow_translation_and_scaling() {
        let base = Shape::ball(&[-2.0, 0.0, 0.0], 1.0).union(Shape::ball(&[2.0, 0.0, 0.0], 0.6));
        let crit = CritConfig { multistart: 0, ..CritConfig::default() };
        let q = quick();
        let m0 = find_minima(&Domain::new(3, &base).unwrap(), &crit, &q).unwrap();
        let v = [0.3, -1.1, 0.25];
        let mt = find_minima(&Domain::new(3, &base.clone().translated(&v)).unwrap(), &crit, &q).unwrap();
        let ms = find_minima(&Domain::new(3, &base.scaled(2.0)).unwrap(), &crit, &q).unwrap();
        assert_eq!(m0.len(), 2);
        assert_eq!(mt.len(), 2);
        assert_eq!(ms.len(), 2);
        let shift = Vector::from_slice(&v);
        for k in 0..2 {
            assert!(mt[k].location.dist(&(m0[k].location + shift)) < 10.0 * crit.newton_tol);
            assert!(ms[k].location.dist(&(m0[k].location * 2.0)) < 1e-5);
            let tol = 3.0 * (ms[k].psi_std_error + m0[k].psi_std_error / 8.0) + 1e-12;
            assert!((ms[k].psi_value - m0[k].psi_value / 8.0).abs() < tol);
        }
    }

    #[test]
    fn zero_rho_audit_reproduces_census() {
        let d = Domain::ball(&[0.0; 3], 1.0).unwrap();
        let crit = CritConfig { multistart: 1, ..CritConfig::default() };
        let a = morse_audit(&d, 0.0, 2, 3, &crit, &quick()).unwrap();
        assert!(a.all_nondegenerate && a.all_persisted);
        for t in &a.trials {
            assert_eq!(t.c2_norm, 0.0);
            assert_eq!(t.points.len(), 1);
            assert_eq!(t.points[0].location, a.baseline[0].location);
        }
        assert!(matches!(morse_audit(&d, 0.5, 1, 0, &crit, &quick()), Err(Error::PerturbationTooLarge(_))));
    }

    #[test]
    fn ball_audit_stays_nondegenerate() {
        let d = Domain::ball(&[0.0; 3], 1.0).unwrap();
        let crit = CritConfig { multistart: 1, ..CritConfig::default() };
        let a = morse_audit(&d, 0.05, 2, 11, &crit, &quick()).unwrap();
        assert!(a.all_nondegenerate, "{:?}", a.trials.iter().map(|t| &t.error).collect::<Vec<_>>());
        assert!(a.all_persisted);
        for t in &a.trials {
            assert!((t.c2_norm - 0.05).abs() < 1e-12);
        }
    }

    #[test]
    fn path_collapse_on_equal_endpoints() {
        let d = Domain::ball(&[0.0; 3], 1.0).unwrap();
        let x = Vector::zeros(3);
        assert!(matches!(
            mountain_pass(&d, &x, &x, &CritConfig::default(), &quick()),
            Err(Error::PathCollapse)
        ));
    }

    #[test]
    fn reparametrization_is_uniform() {
        let pts: Vec<Vector> = [0.0, 0.1, 0.15, 0.9, 1.0].iter().map(|&t| Vector::from_slice(&[t, 0.0, 0.0])).collect();
        let r = reparametrize(&pts);
        for (k, p) in r.iter().enumerate() {
            assert!((p[0] - k as f64 / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn classification_counts_negative_directions() {
        let e = PsiEvaluation {
            point: Vector::zeros(3),
            value: 1.0,
            value_err: 0.0,
            gradient: Vector::zeros(3),
            gradient_err: Vector::zeros(3),
            hessian: vec![-2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 10.0],
            hessian_err: vec![0.0; 9],
            n_evals: 1,
        };
        let c = CriticalPoint::classify(&e, 1e-6);
        assert_eq!(c.morse_index, 1);
        assert_eq!(c.hess_eigs, vec![-2.0, 5.0, 10.0]);
        assert!((c.morse_metric - 0.1).abs() < 1e-15);
        assert!(!CriticalPoint::classify(&e, 0.2).nondegenerate);
    }
}
