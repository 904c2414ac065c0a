use std::path::Path;

use hybrid_cis::model::{double_integrator_with_jump, validate_hcs, BoxSet, InputSet, SystemFile};
use hybrid_cis::reduction::reduce;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn data(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

#[test]
fn bundled_system_file_is_the_double_integrator() {
    let file = SystemFile::load(&data("double_integrator.json")).unwrap();
    assert!(file.validate().is_valid());
    assert_eq!(file, SystemFile::Control(double_integrator_with_jump()));
}

#[test]
fn reduced_system_round_trips() {
    let (has, _) = reduce(&double_integrator_with_jump()).unwrap();
    let file = SystemFile::Algebraic(has);
    let back = SystemFile::parse(&file.to_json()).unwrap();
    assert_eq!(back, file);
}

#[test]
fn malformed_files_are_rejected() {
    assert!(SystemFile::parse(r#"{"kind": "control"}"#).is_err());
    assert!(SystemFile::parse(r#"{"kind": "hybrid", "nodes": []}"#).is_err());
    assert!(SystemFile::load(&data("missing.json")).is_err());
}

#[test]
fn validation_reports_dimension_errors() {
    let mut sys = double_integrator_with_jump();
    sys.nodes[0].safe = BoxSet::unit(3);
    let report = validate_hcs(&sys);
    assert!(!report.is_valid());
    assert!(report.mentions("safe-set dimension mismatch"));
}

fn boxes(n: usize) -> impl Strategy<Value = BoxSet> {
    prop::collection::vec((0.1..2.0f64, 0.1..2.0f64), n)
        .prop_map(|v| BoxSet::new(v.iter().map(|p| -p.0).collect(), v.iter().map(|p| p.1).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn control_system_serde_round_trip(
        n in 1usize..=3,
        m in 0usize..=2,
        a in prop::collection::vec(-2.0..2.0f64, 9),
        b in prop::collection::vec(-2.0..2.0f64, 6),
        safe in boxes(3),
        boxed in any::<bool>(),
    ) {
        let mut sys = double_integrator_with_jump();
        sys.nodes[0].a = DMatrix::from_iterator(n, n, a.into_iter().take(n * n));
        sys.nodes[0].b = DMatrix::from_iterator(n, m, b.into_iter().take(n * m));
        sys.nodes[0].safe = BoxSet::new(safe.lower[..n].to_vec(), safe.upper[..n].to_vec());
        sys.nodes[0].input = if boxed && m > 0 { InputSet::Box(BoxSet::unit(m)) } else { InputSet::unconstrained() };
        sys.signals[0].a = DMatrix::identity(n, n);
        sys.signals[0].b = DMatrix::zeros(n, 0);
        sys.signals[0].input = InputSet::unconstrained();
        let file = SystemFile::Control(sys);
        prop_assert!(file.validate().is_valid(), "{}", file.validate());
        prop_assert_eq!(SystemFile::parse(&file.to_json()).unwrap(), file);
    }
}
