use foliation_lab::continuation::{
    continue_orbit, find_escape_epsilon, ContinuationTrace, EpsPath, Halt, Terminal,
    CONTINUITY_FACTOR,
};
use foliation_lab::integrate::LiftOptions;
use foliation_lab::orbits::find_orbits;
use foliation_lab::{Annulus, Complex64, FoliationParams};
use std::sync::OnceLock;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const START: Complex64 = Complex64::new(0.001, 0.5);

fn start_orbit() -> foliation_lab::orbits::OrbitRecord {
    let p = FoliationParams::new(c(0.05, 0.0), START).unwrap();
    find_orbits(2, &p, &LiftOptions::default())
        .unwrap()
        .remove(0)
}

fn march(path: &EpsPath) -> ContinuationTrace {
    continue_orbit(
        &start_orbit(),
        path,
        &Annulus::default_a0(),
        &LiftOptions::default(),
    )
    .unwrap()
}

fn default_trace() -> &'static (EpsPath, ContinuationTrace) {
    static TRACE: OnceLock<(EpsPath, ContinuationTrace)> = OnceLock::new();
    TRACE.get_or_init(|| {
        let path = EpsPath::straight(START, c(0.0, 0.0)).unwrap();
        let trace = march(&path);
        (path, trace)
    })
}

#[test]
fn consecutive_samples_stay_close() {
    let (path, trace) = default_trace();
    assert!(trace.samples.len() > 2);
    for w in trace.samples.windows(2) {
        let jump = (w[1].orbit.base_point() - w[0].orbit.base_point()).norm();
        assert!(jump < CONTINUITY_FACTOR * path.max_step, "jump {jump}");
        assert!(w[1].s > w[0].s);
    }
}

#[test]
fn every_sample_is_certified() {
    let (_, trace) = default_trace();
    for s in &trace.samples {
        s.orbit.certify().unwrap();
        assert_eq!(s.orbit.params.eps, s.eps);
        assert!(s.orbit.points.iter().all(|u| u.norm() > 0.0));
    }
}

#[test]
fn escape_is_confirmed_and_final() {
    let (_, trace) = default_trace();
    let eps_star = match trace.terminal {
        Terminal::EscapeConfirmedAt { eps_star } => eps_star,
        other => panic!("expected escape, got {other:?}"),
    };
    assert_eq!(find_escape_epsilon(trace), Some(eps_star));
    assert!(eps_star.norm() > 0.0 && eps_star.norm() < START.norm());
    let at = trace
        .samples
        .iter()
        .position(|s| s.eps == eps_star)
        .unwrap();
    assert!(at > 0 && trace.samples[at - 1].escape.loop_in_a0);
    assert!(trace.samples[at..].iter().all(|s| !s.escape.loop_in_a0));
}

#[test]
fn finer_steps_reproduce_shared_samples() {
    let (path, coarse) = default_trace();
    let fine_path =
        EpsPath::new(path.vertices.clone(), path.max_step / 2.0, path.min_step).unwrap();
    let fine = march(&fine_path);
    let mut shared = 0;
    for a in &coarse.samples {
        if let Some(b) = fine.samples.iter().find(|b| b.eps == a.eps) {
            shared += 1;
            for (p, q) in a.orbit.points.iter().zip(&b.orbit.points) {
                assert!((p - q).norm() < 1e-8, "at eps = {}: {p} vs {q}", a.eps);
            }
        }
    }
    assert!(shared >= 3, "only {shared} shared samples");
}

#[test]
fn degenerate_path_gives_single_sample() {
    let path = EpsPath::new(vec![START, START], 0.01, 1e-6).unwrap();
    let trace = march(&path);
    assert_eq!(trace.samples.len(), 1);
    assert_eq!(trace.terminal, Terminal::ReachedTarget);
    assert_eq!(trace.halted_by, Halt::ReachedTarget);
}

#[test]
fn short_path_reaches_its_target_inside_a0() {
    let target = START + c(0.0, 1e-4);
    let path = EpsPath::new(vec![START, target], 2e-5, 1e-9).unwrap();
    let trace = march(&path);
    assert_eq!(trace.terminal, Terminal::ReachedTarget);
    let last = trace.samples.last().unwrap();
    assert!((last.eps - target).norm() < 1e-15);
    assert!(trace.samples.iter().all(|s| s.escape.loop_in_a0));
}

#[test]
fn path_must_start_at_the_orbit() {
    let path = EpsPath::straight(c(0.002, 0.5), c(0.0, 0.0)).unwrap();
    assert!(continue_orbit(
        &start_orbit(),
        &path,
        &Annulus::default_a0(),
        &LiftOptions::default()
    )
    .is_err());
}
