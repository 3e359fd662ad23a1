use peakforge::pipeline::*;
use peakforge::reduction::{DictSpec, Entry, Tag};
use peakforge::reduced::ReducedBox;
use peakforge::Dimension;

fn quick() -> RunConfig {
    RunConfig { degree_resolution: None, ..RunConfig::default() }
}

#[test]
fn empty_sweep_gives_a_valid_report() {
    let cfg = RunConfig { eps: vec![], ..quick() };
    let r = run_pipeline(&cfg).unwrap();
    assert!(r.points.is_empty() && r.trends.checks.is_empty() && r.positivity.checks.is_empty());
    assert!(r.passed);
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&r, dir.path()).unwrap();
    let sweep = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1);
    assert_eq!(load_report(&files[0]).unwrap().points.len(), 0);
}

#[test]
fn failed_stage_is_recorded_and_the_sweep_continues() {
    // The model root t* ≈ 0.85 lies outside [2, 3]², so every reduced solve fails.
    let cfg = RunConfig { eps: vec![8e-3, 4e-3], reduced_box: ReducedBox { gamma1: 2.0, gamma2: 3.0, delta: 1.0 }, ..quick() };
    let r = run_pipeline(&cfg).unwrap();
    assert_eq!(r.points.len(), 2);
    for p in &r.points {
        let f = p.failure.as_ref().unwrap();
        assert_eq!(f.stage, "reduced solve");
        assert!(p.report.is_none());
    }
    assert!(!r.passed);
    assert!(r.trends.failed_checks().iter().any(|c| c.name == "every point accepted"));
}

#[test]
fn sweep_trends_determinism_and_roundtrip() {
    let cfg = quick();
    let a = run_pipeline(&cfg).unwrap();
    assert!(a.passed, "{:?} {:?}", a.trends.failed_checks(), a.positivity.failed_checks());
    let b = run_pipeline(&cfg).unwrap();
    assert_eq!(render_report(&a).unwrap(), render_report(&b).unwrap());

    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&a, dir.path()).unwrap();
    let back = load_report(&files[0]).unwrap();
    assert_eq!(render_report(&back).unwrap(), render_report(&a).unwrap());
    let verdicts: Vec<_> = back.all_verdicts().cloned().collect();
    let orig: Vec<_> = a.all_verdicts().cloned().collect();
    assert_eq!(verdicts.len(), orig.len());
    for (x, y) in verdicts.iter().zip(&orig) {
        assert_eq!((&x.name, &x.checks), (&y.name, &y.checks));
    }

    // A different seed moves the sampled quantities but not the conclusions.
    let c = run_pipeline(&cfg.clone().with_seed(7)).unwrap();
    assert!(c.passed);
    assert_ne!(render_report(&a).unwrap(), render_report(&c).unwrap());
}

#[test]
fn emit_cleans_up_after_a_failed_write() {
    let cfg = RunConfig { eps: vec![], ..quick() };
    let r = run_pipeline(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    // A directory squatting on one target name makes its rename fail.
    std::fs::create_dir(dir.path().join("sweep.csv")).unwrap();
    std::fs::write(dir.path().join("sweep.csv").join("x"), b"x").unwrap();
    assert!(emit_report(&r, dir.path()).is_err());
    let left: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(left, vec![std::ffi::OsString::from("sweep.csv")], "{left:?}");
}

#[test]
fn positivity_flags_a_subtracted_dictionary_element() {
    let dim = Dimension::new(6).unwrap();
    let lambda = 2.0;
    let y = vec![0.0; 6];
    let peak = Entry { peak: 0, center: y.clone(), mu: lambda, tag: Tag::Value };
    // A shifted dictionary element of a peak placed far away.
    let mut far = y.clone();
    far[1] = 6.0;
    let element = DictSpec::default().entries(&dim, 1, &far, lambda).into_iter().find(|e| e.center != far).unwrap();
    let u = AssembledSolution::new(&dim, vec![(1.0, peak.clone()), (-10.0, element.clone())]).unwrap();
    let r = positivity_check(&u, &PositivityConfig::default(), 11).unwrap();
    assert!(!r.verdict.passed());
    assert!(r.min_value < 0.0 && r.negative_norm > 0.0);
    assert!(!r.witnesses.is_empty() && r.witnesses.iter().all(|w| w.u < 0.0));

    let single = AssembledSolution::new(&dim, vec![(1.0, peak)]).unwrap();
    let r = positivity_check(&single, &PositivityConfig::default(), 11).unwrap();
    assert!(r.verdict.passed() && r.min_value > 0.0 && r.negative_norm == 0.0);
}
