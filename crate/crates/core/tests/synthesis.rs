use std::path::Path;

use hybrid_cis::model::{double_integrator_with_jump, BoxSet, HybridAlgebraicSystem};
use hybrid_cis::polysos::CertificateForm;
use hybrid_cis::reduction::reduce;
use hybrid_cis::synthesis::{
    solve_control_system, solve_synthesis, Objective, PartitionSpec, SynthesisOptions, SynthesisProblem,
    SynthesisSolution, SynthesisStatus, TemplateSpec,
};
use hybrid_cis::verify::VerifyOptions;

fn objective(config: &str) -> Objective {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(config);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    serde_json::from_value(v["objective"].clone()).unwrap()
}

fn example() -> HybridAlgebraicSystem {
    reduce(&double_integrator_with_jump()).unwrap().0
}

fn options() -> SynthesisOptions {
    SynthesisOptions { verify: VerifyOptions { n_dirs: 2000, ..Default::default() }, ..SynthesisOptions::new() }
}

fn run(system: HybridAlgebraicSystem, template: TemplateSpec, objective: Objective) -> SynthesisSolution {
    solve_synthesis(&SynthesisProblem { system, template, objective }, &options()).unwrap()
}

fn gamma(template: TemplateSpec) -> f64 {
    let sol = run(example(), template, objective("example.json"));
    assert_eq!(sol.status, SynthesisStatus::Verified, "{:?}", sol.verification);
    sol.gamma.unwrap()
}

fn piecewise(m1: usize, m2: usize, tie_pieces: bool) -> TemplateSpec {
    TemplateSpec::Piecewise {
        partition: PartitionSpec::FaceFan { m1, m2, triangulate: false },
        tie_pieces,
        certificate: CertificateForm::Halfspace,
    }
}

#[test]
fn ellipsoid_on_the_example() {
    let g = gamma(TemplateSpec::Ellipsoid);
    assert!((g - 0.894).abs() < 0.005, "{g}");
}

#[test]
fn wide_objective_polytope_gives_0_8() {
    let sol = run(example(), TemplateSpec::Ellipsoid, objective("example_wide_d.json"));
    assert!((sol.gamma.unwrap() - 0.8).abs() < 1e-4);
}

#[test]
fn quadratic_polyset_is_the_ellipsoid() {
    let (e, p) = (gamma(TemplateSpec::Ellipsoid), gamma(TemplateSpec::Polyset { degree: 2 }));
    assert!((e - p).abs() < 1e-3, "{e} vs {p}");
}

#[test]
fn tied_pieces_give_the_ellipsoid() {
    let (e, t) = (gamma(TemplateSpec::Ellipsoid), gamma(piecewise(8, 5, true)));
    assert!((e - t).abs() < 1e-3, "{e} vs {t}");
}

#[test]
fn generator_certificates_agree_with_halfspace_ones() {
    let g = |form| {
        gamma(TemplateSpec::Piecewise {
            partition: PartitionSpec::FaceFan { m1: 4, m2: 3, triangulate: false },
            tie_pieces: false,
            certificate: form,
        })
    };
    let (h, v) = (g(CertificateForm::Halfspace), g(CertificateForm::Generator));
    assert!((h - v).abs() < 1e-3, "{h} vs {v}");
}

#[test]
fn template_monotonicity() {
    let e = gamma(TemplateSpec::Ellipsoid);
    let polys: Vec<f64> = [2, 4, 6, 8].iter().map(|&d| gamma(TemplateSpec::Polyset { degree: d })).collect();
    for (d, p) in [2, 4, 6, 8].iter().zip(&polys) {
        assert!(*p >= e - 1e-3, "polyset {d}: {p} < ellipsoid {e}");
    }
    assert!(polys[3] >= polys[1] - 1e-3);
    for (m1, m2) in [(4, 3), (8, 5)] {
        let w = gamma(piecewise(m1, m2, false));
        assert!(w >= e - 1e-3, "piecewise ({m1},{m2}): {w} < {e}");
    }
}

#[test]
fn scaling_boxes_and_objective_keeps_gamma() {
    for template in [TemplateSpec::Ellipsoid, TemplateSpec::Polyset { degree: 4 }, piecewise(4, 3, false)] {
        let base = run(example(), template.clone(), objective("example.json")).gamma.unwrap();
        for lambda in [0.25, 3.0] {
            let mut sys = example();
            for node in &mut sys.nodes {
                node.safe = node.safe.scaled(lambda);
            }
            let mut obj = objective("example.json");
            for v in &mut obj.vertices {
                v.iter_mut().for_each(|x| *x *= lambda);
            }
            let g = run(sys, template.clone(), obj).gamma.unwrap();
            assert!((g - base).abs() < 1e-4, "{} at lambda {lambda}: {g} vs {base}", template.label());
        }
    }
}

#[test]
fn shrunk_box_is_infeasible() {
    let mut sys = example();
    for node in &mut sys.nodes {
        let n = node.safe.dim();
        node.safe = BoxSet::new(vec![0.0; n], vec![0.0; n]);
    }
    for template in [TemplateSpec::Ellipsoid, TemplateSpec::Polyset { degree: 4 }, piecewise(4, 3, false)] {
        let sol = run(sys.clone(), template, objective("example.json"));
        assert!(sol.status == SynthesisStatus::Infeasible || sol.gamma.is_some_and(|g| g.abs() <= 1e-6));
    }
}

#[test]
fn control_system_entry_point_and_serde() {
    let sol = solve_control_system(&double_integrator_with_jump(), TemplateSpec::Ellipsoid, objective("example.json"), &options())
        .unwrap();
    assert_eq!(sol.status, SynthesisStatus::Verified);
    assert!(sol.lifting.is_some());
    let json = serde_json::to_string(&sol).unwrap();
    let back: SynthesisSolution = serde_json::from_str(&json).unwrap();
    assert_eq!(back.gamma, sol.gamma);
    assert_eq!(back.nodes, sol.nodes);
    assert_eq!(back.fingerprint, sol.fingerprint);
}

#[test]
fn fingerprint_is_stable() {
    let a = run(example(), piecewise(4, 3, false), objective("example.json"));
    let b = run(example(), piecewise(4, 3, false), objective("example.json"));
    assert_eq!(a.fingerprint, b.fingerprint);
    let c = run(example(), TemplateSpec::Ellipsoid, objective("example.json"));
    assert_ne!(a.fingerprint, c.fingerprint);
}
