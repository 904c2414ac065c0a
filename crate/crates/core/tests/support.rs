use hybrid_cis::geometry::face_fan;
use hybrid_cis::model::{AlgebraicNode, Automaton, BoxSet, HybridAlgebraicSystem};
use hybrid_cis::polysos::{linear_form, HomogeneousPoly};
use hybrid_cis::verify::{check_box_inclusion, check_invariance, SupportFunctionModel, VerifyOptions};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn spd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |v| {
        let a = DMatrix::from_vec(n, n, v);
        &a * a.transpose() + DMatrix::identity(n, n) * 0.1
    })
}

/// `sum (a_i . y)^4 + |y|^4`: convex and positive.
fn quartic(n: usize) -> impl Strategy<Value = HomogeneousPoly<f64>> {
    prop::collection::vec(prop::collection::vec(-1.0..1.0f64, n), 1..=3).prop_map(move |rows| {
        let mut norm2 = HomogeneousPoly::zero(n, 2);
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            norm2 = norm2.add_scaled(&linear_form(&e).pow(2), 1.0).unwrap();
        }
        let mut p = norm2.pow(2);
        for r in rows {
            p = p.add_scaled(&linear_form(&DVector::from_vec(r)).pow(4), 1.0).unwrap();
        }
        p
    })
}

fn models(n: usize) -> impl Strategy<Value = SupportFunctionModel> {
    prop_oneof![
        spd(n).prop_map(|p| SupportFunctionModel::Ellipsoid { p }),
        quartic(n).prop_map(|poly| SupportFunctionModel::Polyset { poly }),
    ]
}

fn direction(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-1.0..1.0f64, n)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(DVector::from_vec)
}

fn model_and_dirs() -> impl Strategy<Value = (SupportFunctionModel, DVector<f64>, DVector<f64>)> {
    (1usize..=3).prop_flat_map(|n| (models(n), direction(n), direction(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn positive_homogeneity((m, y, _) in model_and_dirs(), lambda in 0.01..100.0f64) {
        let h = m.support_value(&y).unwrap();
        let hl = m.support_value(&(&y * lambda)).unwrap();
        prop_assert!((hl - lambda * h).abs() <= 1e-10 * hl.abs().max(1.0));
    }

    #[test]
    fn gradient_matches_finite_differences((m, y, _) in model_and_dirs()) {
        let g = m.support_gradient(&y).unwrap();
        let step = 1e-6;
        for i in 0..y.len() {
            let (mut a, mut b) = (y.clone(), y.clone());
            a[i] += step;
            b[i] -= step;
            let fd = (m.support_value(&a).unwrap() - m.support_value(&b).unwrap()) / (2.0 * step);
            prop_assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0));
        }
    }

    /// The exposed point attains the support value and lies in the set.
    #[test]
    fn exposed_points_support_the_set((m, y, w) in model_and_dirs()) {
        let g = m.support_gradient(&y).unwrap();
        prop_assert!((g.dot(&y) - m.support_value(&y).unwrap()).abs() < 1e-9);
        prop_assert!(g.dot(&w) <= m.support_value(&w).unwrap() + 1e-9);
    }

    #[test]
    fn piecewise_with_equal_pieces_is_the_ellipsoid(p in spd(3), y in direction(3)) {
        let fan = face_fan(8, 5, false).unwrap();
        let pw = SupportFunctionModel::Piecewise { matrices: vec![p.clone(); fan.len()], partition: fan };
        let el = SupportFunctionModel::Ellipsoid { p };
        prop_assert!((pw.support_value(&y).unwrap() - el.support_value(&y).unwrap()).abs() < 1e-12);
        prop_assert!(pw.piece_disagreement(&y) < 1e-12);
        for g in pw.exposed_face_gradients(&y).unwrap() {
            prop_assert!((g - el.support_gradient(&y).unwrap()).norm() < 1e-9);
        }
    }
}

fn one_node(c: DMatrix<f64>, e: DMatrix<f64>) -> HybridAlgebraicSystem {
    HybridAlgebraicSystem {
        automaton: Automaton { nodes: vec!["q".into()], ..Default::default() },
        nodes: vec![AlgebraicNode { c, e, safe: BoxSet::unit(2) }],
        signals: vec![],
    }
}

#[test]
fn flow_check_separates_stable_and_unstable_flows() {
    let ball = SupportFunctionModel::Ellipsoid { p: DMatrix::identity(2, 2) };
    let opts = VerifyOptions { n_dirs: 500, ..Default::default() };
    let stable = check_invariance(&one_node(-DMatrix::identity(2, 2), DMatrix::identity(2, 2)), std::slice::from_ref(&ball), &opts);
    assert!(stable.pass());
    let unstable = check_invariance(&one_node(DMatrix::identity(2, 2), DMatrix::identity(2, 2)), &[ball], &opts);
    assert!(!unstable.pass());
}

#[test]
fn box_inclusion_is_exact() {
    let m = SupportFunctionModel::Ellipsoid { p: DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])) };
    let fits = BoxSet::new(vec![-1.0, -2.0], vec![1.0, 2.0]);
    let tight = BoxSet::new(vec![-1.0, -1.9], vec![1.0, 1.9]);
    assert!(check_box_inclusion(&m, &fits, 0.0, "q").pass);
    assert!(!check_box_inclusion(&m, &tight, 1e-6, "q").pass);
}
