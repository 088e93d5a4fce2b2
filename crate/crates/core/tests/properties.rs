use std::f64::consts::PI;
use std::sync::Arc;

use bargmann_lens::backends::{
    cp1_backend, parallel_transport, theta_section, torus_backend, PolylinePath, PrequantizedKahler, SectionFamily,
    ThetaSection,
};
use bargmann_lens::diagnostics::{cm_norm, transversality_margin, Epsilon};
use bargmann_lens::linalg::{to_complex, to_real};
use bargmann_lens::model_bundle::{
    bargmann_section, dbar_defect, holomorphy_criteria_gap, model_connection, unweight, weight, BallDomain,
    DerivativeMode, GridSection, Polynomial,
};
use bargmann_lens::renormalize::{build_chart, identity_frame, radial_gauge, renormalize_section};
use bargmann_lens::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn coeff() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b))
}

/// Random polynomial in one or two variables with up to four monomials.
fn polynomial(n: usize) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0u32..4, n), coeff()), 1..5)
        .prop_map(move |terms| Polynomial::from_terms(n, terms))
}

fn vector(d: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, d)
}

/// `n x n` unitary built from a product of phases and a rotation.
fn unitary(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    (0.0..2.0 * PI, 0.0..2.0 * PI, 0.0..2.0 * PI).prop_map(move |(a, b, t)| {
        if n == 1 {
            return vec![Complex64::from_polar(1.0, a)];
        }
        let (ea, eb) = (Complex64::from_polar(1.0, a), Complex64::from_polar(1.0, b));
        vec![ea * t.cos(), -ea * t.sin(), eb * t.sin(), eb * t.cos()]
    })
}

fn mat_vec(u: &[Complex64], w: &[Complex64]) -> Vec<Complex64> {
    let n = w.len();
    (0..n).map(|a| (0..n).map(|b| u[a * n + b] * w[b]).sum()).collect()
}

fn grid1() -> BallDomain {
    BallDomain::new(1, 0.9, 33).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn model_connection_is_linear_in_the_vector(
        z in vector(4, 1.0), v in vector(4, 2.0), w in vector(4, 2.0), a in -3.0..3.0f64, b in -3.0..3.0f64,
    ) {
        let combo: Vec<f64> = v.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
        let lhs = model_connection(&z, &combo).unwrap();
        let rhs = a * model_connection(&z, &v).unwrap() + b * model_connection(&z, &w).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12);
        prop_assert!(lhs.re.abs() <= 1e-15, "model connection is imaginary");
    }

    #[test]
    fn transversality_margin_scaling(p in polynomial(1), phase in 0.0..2.0 * PI, scale in 0.1..10.0f64) {
        let s = bargmann_section(&p, grid1()).unwrap();
        prop_assume!(s.max_abs() > 1e-3);
        let base = transversality_margin(&s, Epsilon::RelativeToMax(0.3), DerivativeMode::FiniteDifference).unwrap();
        let rotated = s.scaled(Complex64::from_polar(1.0, phase));
        let r = transversality_margin(&rotated, Epsilon::RelativeToMax(0.3), DerivativeMode::FiniteDifference).unwrap();
        prop_assert_eq!(base.near_zero_nodes, r.near_zero_nodes);
        if let (Some(m0), Some(m1)) = (base.margin, r.margin) {
            prop_assert!((m0 - m1).abs() <= 1e-12 * m0.max(1.0));
        }
        let scaled = s.scaled(c(scale, 0.0));
        let q = transversality_margin(&scaled, Epsilon::RelativeToMax(0.3), DerivativeMode::FiniteDifference).unwrap();
        prop_assert_eq!(base.near_zero_nodes, q.near_zero_nodes);
        if let (Some(m0), Some(m1)) = (base.margin, q.margin) {
            prop_assert!((scale * m0 - m1).abs() <= 1e-10 * m1.max(1.0));
        }
    }

    #[test]
    fn cm_norm_is_a_seminorm(p in polynomial(1), q in polynomial(1), a in coeff(), m in 0usize..3) {
        let s = bargmann_section(&p, grid1()).unwrap();
        let t = bargmann_section(&q, grid1()).unwrap();
        let r = 0.6;
        let ns = cm_norm(&s, m, r).unwrap();
        let nt = cm_norm(&t, m, r).unwrap();
        let sum = cm_norm(&GridSection::linear_combination(&[(c(1.0, 0.0), &s), (c(1.0, 0.0), &t)]).unwrap(), m, r).unwrap();
        prop_assert!(sum <= ns + nt + 1e-10);
        let scaled = cm_norm(&s.scaled(a), m, r).unwrap();
        prop_assert!((scaled - a.norm() * ns).abs() <= 1e-10 * ns.max(1.0));
        prop_assert!(cm_norm(&s.difference(&s).unwrap(), m, r).unwrap() <= 1e-12);
    }

    #[test]
    fn bargmann_sections_satisfy_both_holomorphy_criteria(p in polynomial(2)) {
        // polynomial × Gaussian is ∂̄_∇-closed, its unweighting is an ordinary
        // holomorphic function, and weighting inverts unweighting
        let d = BallDomain::new(2, 0.9, 9).unwrap();
        let s = bargmann_section(&p, d).unwrap();
        prop_assert!(dbar_defect(&s, DerivativeMode::Analytic, 0.6).unwrap() <= 1e-8);
        prop_assert!(holomorphy_criteria_gap(&s, DerivativeMode::Analytic, 0.6).unwrap() <= 1e-8);
        let back = weight(&unweight(&s));
        let worst = s.values().iter().zip(back.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-12 * s.max_abs().max(1.0));
    }

    #[test]
    fn chart_frames_act_by_precomposition(u in unitary(2), w in vector(4, 0.8), k in 1u32..64) {
        let torus: Arc<dyn PrequantizedKahler> = Arc::new(torus_backend(2).unwrap());
        let p = [0.1, 0.2, 0.3, 0.4];
        let framed = build_chart(Arc::clone(&torus), &p, k, &u).unwrap();
        let plain = build_chart(torus, &p, k, &identity_frame(2)).unwrap();
        let uw = to_real(&mat_vec(&u, &to_complex(&w)));
        let a = framed.evaluate(&w).unwrap();
        let b = plain.evaluate(&uw).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn cp1_chart_frames_act_by_precomposition(u in unitary(1), w in vector(2, 0.6), k in 4u32..64) {
        let cp1: Arc<dyn PrequantizedKahler> = Arc::new(cp1_backend());
        let p = [0.3, -0.2];
        let framed = build_chart(Arc::clone(&cp1), &p, k, &u).unwrap();
        let plain = build_chart(cp1, &p, k, &identity_frame(1)).unwrap();
        let uw = to_real(&mat_vec(&u, &to_complex(&w)));
        let a = framed.evaluate(&w).unwrap();
        let b = plain.evaluate(&uw).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn theta_sections_follow_the_cocycle(k in 1u32..=64, j in 0u32..64, x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let torus = torus_backend(1).unwrap();
        let s = theta_section(k, j % k, &torus).unwrap();
        let lattice = [vec![1, 0], vec![0, 1], vec![-1, 2], vec![2, -1]];
        let scale = s.value(&[x, y]).norm().max(1.0);
        prop_assert!(s.cocycle_defect(&torus, &[vec![x, y]], &lattice) <= 1e-9 * scale);
    }

    #[test]
    fn product_thetas_follow_the_cocycle(k in 1u32..=16, a in 0u32..16, b in 0u32..16, p in vector(4, 1.0)) {
        let torus = torus_backend(2).unwrap();
        let s = ThetaSection::product(k, &[a % k, b % k]).unwrap();
        let lattice = [vec![1, 0, 0, 0], vec![0, 0, 0, 1], vec![1, -1, 2, 0]];
        let scale = s.value(&p).norm().max(1.0);
        prop_assert!(s.cocycle_defect(&torus, std::slice::from_ref(&p), &lattice) <= 1e-9 * scale);
    }

    #[test]
    fn transport_around_a_loop_is_the_flux(k in 1u32..8, eps in 0.01..0.2f64, x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let torus = torus_backend(1).unwrap();
        let path = PolylinePath::square_loop(&[x, y], 0, eps).unwrap();
        let ccw = parallel_transport(&torus, k, &path, 2.5e-4).unwrap().value;
        let expected = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * eps * eps);
        prop_assert!((ccw - expected).norm() <= 1e-9);
        let cw = parallel_transport(&torus, k, &path.reversed(), 2.5e-4).unwrap().value;
        prop_assert!((cw - expected.conj()).norm() <= 1e-9);
    }

    #[test]
    fn renormalization_only_rotates_the_phase(k in 2u32..40, j in 0u32..40, x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let torus = torus_backend(1).unwrap();
        let family: Arc<dyn SectionFamily> = Arc::new(theta_section(k, j % k, &torus).unwrap());
        let chart = build_chart(Arc::new(torus), &[x, y], k, &identity_frame(1)).unwrap();
        let grid = BallDomain::new(1, 0.9, 9).unwrap();
        let gauge = radial_gauge(&chart, grid).unwrap();
        let sigma = renormalize_section(Arc::clone(&family), &chart, &gauge, grid).unwrap();
        for f in grid.nodes() {
            let raw = family.value(&chart.evaluate(&grid.node_point(f)).unwrap()).norm();
            prop_assert!((sigma.value_at(f).norm() - raw).abs() <= 1e-10 * raw.max(1.0));
        }
    }
}
