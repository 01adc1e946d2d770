//! Cross-experiment behavior: determinism, implication structure, rates.

use neurips_lab::harness::{
    multiplier_check, teacher_student, MultiplierConfig, TeacherStudentConfig,
};
use neurips_lab::model::{sample_parameter_class, NetworkParams, ParameterClass};
use neurips_lab::QuadratureSpec;

fn small_teacher(cls: &ParameterClass, seed: u64) -> NetworkParams {
    sample_parameter_class(cls, 1, seed).into_iter().next().unwrap()
}

#[test]
fn teacher_student_reports_are_byte_identical() {
    let cls = ParameterClass::new(1, 2, 1.0, 1.0).unwrap();
    let cfg = TeacherStudentConfig {
        cls,
        teacher: small_teacher(&cls, 77),
        m: 300,
        xi: 0.1,
        t: 0.5,
        search_budget: 400,
        seed: 19,
        quad: QuadratureSpec::desk_scale(),
    };
    let a = teacher_student(&cfg).unwrap();
    let b = teacher_student(&cfg).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert_eq!(a.csv().to_csv(), b.csv().to_csv());
    assert!(a.implication_holds);
}

#[test]
fn teacher_student_implication_across_seeds() {
    let cls = ParameterClass::new(1, 2, 1.0, 1.0).unwrap();
    for seed in 0..6 {
        let cfg = TeacherStudentConfig {
            cls,
            teacher: small_teacher(&cls, 1000 + seed),
            m: 250,
            xi: 0.1,
            t: 0.5,
            search_budget: 500,
            seed,
            quad: QuadratureSpec::desk_scale(),
        };
        let report = teacher_student(&cfg).unwrap();
        assert!(report.implication_holds, "seed {seed}");
        assert!(report.sublevel_size >= 1);
        // At xi = 0 only near-interpolating members qualify; with random
        // search the teacher is essentially the only one.
        let strict = TeacherStudentConfig {
            xi: 0.0,
            t: 0.5,
            ..cfg
        };
        let report = teacher_student(&strict).unwrap();
        assert!(report
            .sublevel
            .iter()
            .all(|row| row.empirical_risk <= 1e-12));
    }
}

#[test]
fn median_deviation_decreases_across_sample_decades() {
    use neurips_lab::harness::{verify_neurips, NeuripsConfig};
    let cls = ParameterClass::new(1, 2, 1.0, 1.0).unwrap();
    let mut medians = Vec::new();
    for m in [100usize, 1000, 10_000] {
        let cfg = NeuripsConfig {
            cls,
            family_size: 6,
            m,
            s: 0.5,
            u: 4.0,
            trials: 201,
            seed: 65, // shared across decades: same family
            quad: QuadratureSpec::desk_scale(),
        };
        let report = verify_neurips(&cfg).unwrap();
        let mut devs: Vec<f64> = report.trials.iter().map(|t| t.s_tilde).collect();
        devs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        medians.push(devs[devs.len() / 2]);
    }
    assert!(
        medians[0] > medians[1] && medians[1] > medians[2],
        "medians not strictly decreasing: {medians:?}"
    );
}

#[test]
fn multiplier_gap_decays_like_inverse_sqrt_m() {
    let cls = ParameterClass::new(1, 2, 1.0, 1.0).unwrap();
    let cfg = MultiplierConfig {
        cls,
        residual_psi2: 1.0,
        family_size: 12,
        m_grid: vec![100, 1000, 10_000],
        trials: 60,
        seed: 4,
        quad: QuadratureSpec::desk_scale(),
    };
    let report = multiplier_check(&cfg).unwrap();
    let slope = report.slope.expect("positive means");
    assert!(
        (-0.65..=-0.35).contains(&slope),
        "multiplier decay slope {slope}"
    );
    // CLT structure: single-network family still decays the same way.
    let single = MultiplierConfig {
        family_size: 1,
        ..cfg
    };
    let report = multiplier_check(&single).unwrap();
    let slope = report.slope.expect("positive means");
    assert!((-0.7..=-0.3).contains(&slope), "single-network slope {slope}");
}
