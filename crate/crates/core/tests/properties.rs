use blowup_core::bubbles::Bubble;
use blowup_core::geometry::{BoundaryPoint, Domain, PerturbationField, Shape};
use blowup_core::landscape::{constants, hole_energy, optimal_d, reduced_energy_nodal, reduced_energy_sub};
use blowup_core::quadrature::{psi_integrals, QuadratureConfig};
use blowup_core::sphere::cube_to_sphere;
use blowup_core::Vector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    [-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64]
}

fn two_balls(r2: f64) -> Shape {
    Shape::ball(&[-1.2, 0.0, 0.0], 1.0).union(Shape::ball(&[1.0, 0.3, 0.0], r2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn membership_follows_translation_and_scaling(x in vec3(), v in vec3(), lam in 0.3..3.0f64, r2 in 0.4..0.9f64) {
        let base = Domain::new(3, &two_balls(r2)).unwrap();
        let moved = Domain::new(3, &two_balls(r2).translated(&v)).unwrap();
        let grown = Domain::new(3, &two_balls(r2).scaled(lam)).unwrap();
        let p = Vector::from_slice(&x);
        let vv = Vector::from_slice(&v);
        prop_assert_eq!(base.contains(&p), moved.contains(&(p + vv)));
        prop_assert!((base.sdf(&p) - moved.sdf(&(p + vv))).abs() < 1e-12);
        prop_assert!((lam * base.sdf(&p) - grown.sdf(&(p * lam))).abs() < 1e-12 * (1.0 + lam));
    }

    #[test]
    fn bubble_profile_is_self_similar(y in vec3(), xi in vec3(), delta in 0.01..10.0f64) {
        let n = 3.0;
        let c = Vector::from_slice(&xi);
        let yy = Vector::from_slice(&y);
        let unit = Bubble::positive(1.0, Vector::zeros(3)).unwrap().value(&yy);
        let b = Bubble::positive(delta, c).unwrap().value(&(c + yy * delta));
        prop_assert!((b * delta.powf((n - 2.0) / 2.0) / unit - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_map_lands_on_the_sphere(u in proptest::collection::vec(0.0..1.0f64, 7), n in 3usize..=8) {
        let w = cube_to_sphere(&u[..n - 1], n);
        prop_assert!((w.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_d_is_a_local_minimum(psi in 1e-3..1e3f64, n in 3usize..=8) {
        let k = constants(n).unwrap();
        let d = optimal_d(&k, psi).unwrap();
        let f = reduced_energy_sub(&k, psi, d).unwrap();
        for h in [1e-3, -1e-3] {
            prop_assert!(reduced_energy_sub(&k, psi, d * (1.0 + h)).unwrap() >= f);
        }
    }

    #[test]
    fn nodal_energy_is_symmetric_in_the_pair(
        d1 in 0.1..3.0f64, d2 in 0.1..3.0f64, t1 in 0.1..3.0f64, t2 in 0.1..3.0f64,
        a in vec3(), b in vec3(), s in 0.0..1.0f64,
    ) {
        let k = constants(4).unwrap();
        let pad = |x: [f64; 3]| Vector::from_slice(&[x[0], x[1], x[2], 0.5]);
        let e1 = BoundaryPoint { point: pad(a), inner_normal: pad(a).normalized() * -1.0 };
        let e2 = BoundaryPoint { point: pad(b) * -1.0, inner_normal: pad(b).normalized() };
        let f = reduced_energy_nodal(&k, d1, d2, t1, t2, &e1, &e2, s).unwrap();
        let g = reduced_energy_nodal(&k, d2, d1, t2, t1, &e2, &e1, s).unwrap();
        prop_assert_eq!(f, g);
    }

    #[test]
    fn hole_energy_depends_on_zeta_through_its_norm(z in vec3(), d in 0.1..5.0f64, b1 in 0.1..10.0f64) {
        let k = constants(3).unwrap();
        let zeta = Vector::from_slice(&z);
        let rotated = Vector::from_slice(&[-z[2], z[0], -z[1]]);
        let a = hole_energy(&k, b1, d, &zeta).unwrap();
        let b = hole_energy(&k, b1, d, &rotated).unwrap();
        prop_assert!((a - b).abs() <= 1e-14 * a.abs());
    }

    #[test]
    fn random_fields_hit_the_requested_norm(seed in any::<u64>(), rho in 1e-3..0.45f64, count in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = Vector::from_slice(&[-3.0, -1.0, -1.0]);
        let hi = Vector::from_slice(&[3.0, 1.0, 1.0]);
        let f = PerturbationField::random(3, count, &lo, &hi, (0.8, 2.4), rho, &mut rng);
        prop_assert!((f.c2_norm_bound() - rho).abs() < 1e-12);
        let x = Vector::from_slice(&[0.4, -0.3, 0.2]);
        let y = x + f.eval(&x);
        prop_assert!(f.invert(&y).dist(&x) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn psi_follows_scaling_and_translation(
        v in vec3(), lam in 0.5..2.0f64, r2 in 0.4..0.9f64,
        u in [-0.5..0.5f64, -0.5..0.5f64, -0.5..0.5f64],
    ) {
        let cfg = QuadratureConfig { target_rel_err: 0.05, ..QuadratureConfig::default().with_budget(1 << 12) };
        let base = Domain::new(3, &two_balls(r2)).unwrap();
        let xi = Vector::from_slice(&[-1.2 + u[0], u[1], u[2]]);
        let image = Domain::new(3, &two_balls(r2).scaled(lam).translated(&v)).unwrap();
        let a = psi_integrals(&base, &xi, &cfg).unwrap();
        let b = psi_integrals(&image, &(xi * lam + Vector::from_slice(&v)), &cfg).unwrap();
        let tol = 3.0 * (a.value_err * lam.powi(-3) + b.value_err) + 1e-9 * b.value;
        prop_assert!((b.value - a.value * lam.powi(-3)).abs() < tol);
        for i in 0..3 {
            let ga = a.gradient[i] * lam.powi(-4);
            prop_assert!((b.gradient[i] - ga).abs() < 3.0 * (a.gradient_err[i] * lam.powi(-4) + b.gradient_err[i]) + 1e-9 * a.value);
        }
    }
}
