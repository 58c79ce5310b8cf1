use hmstab::counterexample::{build_u, script_k, DirectionField};
use hmstab::kernel_basis::{FamilyField, ParamVec};
use hmstab::projector::{Bump, BumpField};
use hmstab::rational_maps::{gcd_degree, GCD_TOL};
use hmstab::sphere_fields::{lift, perturb_on_sphere};
use hmstab::{Complex, ComplexPoly, Field, Moebius, Orientation, RationalMap, C64};
use proptest::prelude::*;

fn cx() -> impl Strategy<Value = C64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| Complex::new(a, b))
}

fn quadratic_map() -> impl Strategy<Value = RationalMap<f64>> {
    (proptest::array::uniform3(cx()), proptest::array::uniform3(cx()), any::<bool>()).prop_filter_map("reducible", |(p, q, anti)| {
        let o = if anti { Orientation::AntiHolomorphic } else { Orientation::Holomorphic };
        let m = RationalMap::new(ComplexPoly::new(p.to_vec()), ComplexPoly::new(q.to_vec()), o).ok()?;
        (m.p().degree() == Some(2) && m.q().degree() == Some(2) && m.p().leading()?.norm() > 0.1).then_some(m)
    })
}

fn moebius() -> impl Strategy<Value = Moebius<f64>> {
    proptest::array::uniform4(cx()).prop_filter_map("degenerate", |[a, b, c, d]| {
        let m = Moebius::new(a, b, c, d).ok()?;
        (m.determinant().norm() > 0.2).then_some(m)
    })
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn composition_evaluates_pointwise(m in quadratic_map(), f in moebius(), z in cx()) {
        let g = m.compose_moebius(&f).unwrap();
        let fz = f.apply(z);
        if let (Some(lhs), Some(rhs)) = (g.eval(z), m.eval(fz)) {
            prop_assume!(lhs.norm() < 1e4 && fz.norm() < 1e4);
            prop_assert!(close(lhs, rhs, 1e-7), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn composition_is_associative(m in quadratic_map(), f in moebius(), g in moebius()) {
        let a = m.compose_moebius(&f).unwrap().compose_moebius(&g).unwrap();
        let b = m.compose_moebius(&f.compose(&g)).unwrap();
        prop_assert!(a.coeff_distance(&b).unwrap() < 1e-6 * (1.0 + a.p().max_norm() + a.q().max_norm()));
    }

    #[test]
    fn monic_normalization_is_idempotent(m in quadratic_map()) {
        let once = m.normalize_monic().unwrap();
        let twice = once.normalize_monic().unwrap();
        prop_assert_eq!(once.p().leading().unwrap(), Complex::new(1.0, 0.0));
        prop_assert!(once.coeff_distance(&twice).unwrap() < 1e-14);
        prop_assert_eq!(once.degree(), m.degree());
    }

    #[test]
    fn gcd_degree_counts_shared_roots(
        shared in proptest::collection::vec(cx(), 0..3),
        a in proptest::collection::vec(cx(), 0..3),
        b in proptest::collection::vec(cx(), 0..3),
    ) {
        let all: Vec<C64> = shared.iter().chain(&a).chain(&b).copied().collect();
        for (i, x) in all.iter().enumerate() {
            for y in &all[..i] {
                prop_assume!((x - y).norm() > 0.3);
            }
        }
        let p = ComplexPoly::from_roots(&[shared.clone(), a].concat());
        let q = ComplexPoly::from_roots(&[shared.clone(), b].concat());
        prop_assert_eq!(gcd_degree(&p, &q, GCD_TOL), shared.len());
    }

    #[test]
    fn lift_jets_match_central_differences(m in quadratic_map(), z in cx()) {
        let u = lift(m);
        let j = u.eval(z).unwrap();
        let h = 1e-5;
        let fx = (u.eval(z + Complex::new(h, 0.0)).unwrap().value() - u.eval(z - Complex::new(h, 0.0)).unwrap().value()).scale(0.5 / h);
        let fy = (u.eval(z + Complex::new(0.0, h)).unwrap().value() - u.eval(z - Complex::new(0.0, h)).unwrap().value()).scale(0.5 / h);
        let scale = 1.0 + j.grad_norm_sqr().sqrt();
        prop_assert!((fx - j.dx()).norm_sqr().sqrt() < 1e-5 * scale * scale);
        prop_assert!((fy - j.dy()).norm_sqr().sqrt() < 1e-5 * scale * scale);
        prop_assert!((j.value().norm_sqr() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn direction_and_bumps_are_tangent(
        r in 2.0f64..40.0,
        x in -100.0f64..100.0,
        y in -100.0f64..100.0,
        amp in proptest::array::uniform3(-1.0f64..1.0),
        width in 0.5f64..5.0,
    ) {
        let z = Complex::new(x, y);
        let (phi, k) = script_k(r).unwrap().with_base(z).unwrap();
        let kv = k.value();
        prop_assert!(kv.dot(&phi.value()).abs() < 1e-12 * (1.0 + kv.norm_sqr().sqrt()));
        let phi_dirs = FamilyField { alpha: ParamVec::alpha_r(r) }.eval(z).unwrap().value();
        let d = DirectionField::uncorrected(r).eval(z).unwrap().value();
        prop_assert!(d.dot(&phi_dirs).abs() < 1e-12 * (1.0 + d.norm_sqr().sqrt()));
        let bumps = BumpField { alpha: ParamVec::alpha_r(r), bumps: vec![Bump { center: [x + 1.0, y], width, amplitude: amp }] };
        let b = bumps.eval(z).unwrap().value();
        prop_assert!(b.dot(&phi_dirs).abs() < 1e-14);
        let u = perturb_on_sphere(FamilyField { alpha: ParamVec::alpha_r(r) }, bumps, 0.3);
        prop_assert!((u.eval(z).unwrap().value().norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn counterexample_field_is_sphere_valued(r in 5.0f64..60.0, eps in 0.0f64..0.05, x in -200.0f64..200.0, y in -200.0f64..200.0) {
        let u = build_u(r, eps, &[0.0; 10]);
        let v = u.eval(Complex::new(x, y)).unwrap().value();
        prop_assert!((v.norm_sqr() - 1.0).abs() < 1e-14);
    }
}
