use hybrid_cis::model::{double_integrator_with_jump, AlgebraicSignal};
use hybrid_cis::reduction::{lift_box_inputs, orth_complement_projector, reduce, DEFAULT_RANK_TOL};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0..2.0f64, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

/// `B` with a chosen rank: product of two random factors.
fn input_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..=4, 0usize..=3, 0usize..=3).prop_flat_map(|(n, m, r)| {
        let r = r.min(m).min(n);
        (matrix(n, r), matrix(r, m)).prop_map(move |(f, g)| if r == 0 { DMatrix::zeros(n, m) } else { f * g })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projector_rows_are_orthonormal_and_annihilate_b(b in input_matrix()) {
        let pi = orth_complement_projector(&b, DEFAULT_RANK_TOL).unwrap();
        let n = b.nrows();
        let rank = if b.ncols() == 0 { 0 } else { b.rank(1e-9 * b.norm().max(1e-300)) };
        prop_assert_eq!(pi.rows(), n - rank);
        let gram = &pi.matrix * pi.matrix.transpose();
        prop_assert!((gram - DMatrix::identity(n - rank, n - rank)).norm() < 1e-9);
        prop_assert!((&pi.matrix * &b).norm() < 1e-9 * (1.0 + b.norm()));
    }

    /// `exists u: y = A x + B u` iff `Pi A x = Pi y`.
    #[test]
    fn projection_characterizes_reachable_derivatives(
        (a, b, x, u, noise) in (1usize..=4).prop_flat_map(|n| (
            matrix(n, n),
            (0usize..=3).prop_flat_map(move |m| matrix(n, m)),
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(-1.0..1.0f64, 3),
            prop::collection::vec(-1.0..1.0f64, n),
        ))
    ) {
        let x = DVector::from_vec(x);
        let u = DVector::from_iterator(b.ncols(), u.into_iter().take(b.ncols()));
        let pi = orth_complement_projector(&b, DEFAULT_RANK_TOL).unwrap().matrix;
        let member = &a * &x + &b * &u;
        prop_assert!((&pi * &a * &x - &pi * &member).norm() < 1e-9);
        let y = member + DVector::from_vec(noise);
        let residual = (&pi * &a * &x - &pi * &y).norm();
        // Reference: least-squares distance of y - A x to the range of B.
        let d = &y - &a * &x;
        let dist = if b.ncols() == 0 {
            d.norm()
        } else {
            let svd = b.clone().svd(true, true);
            let ls = svd.solve(&d, 1e-12).unwrap();
            (&b * ls - &d).norm()
        };
        prop_assert!((residual - dist).abs() < 1e-8, "{residual} vs {dist}");
    }
}

#[test]
fn lifted_example_has_temporary_node() {
    let (lifted, map) = lift_box_inputs(&double_integrator_with_jump()).unwrap();
    assert!(lifted.all_inputs_unconstrained());
    assert_eq!(lifted.automaton.nodes.len(), 2);
    assert_eq!(lifted.automaton.transitions.len(), 2);
    let tmp = map.nodes.iter().find(|n| n.is_temporary()).unwrap();
    assert_eq!(tmp.lifted_dim, 3);
    assert_eq!(map.node("q").unwrap().state_coordinates(), vec![0, 1]);
}

#[test]
fn reduced_example_matches_the_algebraic_system() {
    let (has, _) = reduce(&double_integrator_with_jump()).unwrap();
    let q = has.node("q").unwrap();
    let inv = |m: &DMatrix<f64>, e: &DMatrix<f64>| e.transpose() * m;
    let c = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let e = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    assert!((inv(&q.e, &q.e) - inv(&e, &e)).norm() < 1e-12);
    assert!((inv(&q.c, &q.e) - inv(&c, &e)).norm() < 1e-12);
    let back: Vec<&AlgebraicSignal> = has.signals.iter().filter(|s| s.c.nrows() > 0).collect();
    assert_eq!(back.len(), 2);
}
