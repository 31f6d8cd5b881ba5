//! Natural-parameter continuation of an m-periodic orbit along a polyline in the eps-disc,
//! with a containment check of the orbit's m-turn loop in `E0 = H^{-1}(A0)` at every
//! accepted sample.

use crate::error::{Error, Result};
use crate::family::Annulus;
use crate::integrate::{lift_from_section, LiftOptions};
use crate::orbits::{newton_orbit, OrbitRecord, DEDUP_TOL};
use crate::Complex64;
use serde::{Deserialize, Serialize};

/// Fraction of the previous orbit's point gap that the corrector may move away from the
/// prediction before the step is refused.
const BRANCH_CAPTURE: f64 = 0.3;
const STEP_GROWTH: f64 = 2.0;
/// Consecutive base points of an accepted trace differ by less than this multiple of the
/// path's `max_step`; larger jumps are refused and the step is halved.
pub const CONTINUITY_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsPath {
    pub vertices: Vec<Complex64>,
    pub max_step: f64,
    pub min_step: f64,
}

impl EpsPath {
    pub fn new(vertices: Vec<Complex64>, max_step: f64, min_step: f64) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidArgument(
                "an eps path needs at least 2 vertices".into(),
            ));
        }
        if !(min_step > 0.0 && max_step >= min_step) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < min_step <= max_step, got ({min_step}, {max_step})"
            )));
        }
        Ok(Self {
            vertices,
            max_step,
            min_step,
        })
    }

    /// Polyline through `vertices` with `max_step = |start|/50` and `min_step = 1e-6 |start|`.
    pub fn with_default_steps(vertices: Vec<Complex64>) -> Result<Self> {
        let scale = vertices.first().map(|v| v.norm()).unwrap_or(0.0);
        let scale = if scale > 0.0 { scale } else { 1.0 };
        Self::new(vertices, scale / 50.0, 1e-6 * scale)
    }

    /// Straight segment from `start` to `target`.
    pub fn straight(start: Complex64, target: Complex64) -> Result<Self> {
        Self::with_default_steps(vec![start, target])
    }

    pub fn start(&self) -> Complex64 {
        self.vertices[0]
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Point at arclength `s` from the start, clamped to the path.
    pub fn point_at(&self, s: f64) -> Complex64 {
        let mut remaining = s.max(0.0);
        for w in self.vertices.windows(2) {
            let len = (w[1] - w[0]).norm();
            if remaining <= len {
                if len == 0.0 {
                    return w[0];
                }
                return w[0] + (w[1] - w[0]) * (remaining / len);
            }
            remaining -= len;
        }
        *self.vertices.last().expect("at least two vertices")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    /// All orbit points have `|h_j|` inside `A0`.
    pub base_in_a0: bool,
    /// The whole m-turn lift from `u_1` stays inside `A0`.
    pub loop_in_a0: bool,
    /// Extremes of `|h|` along the m-turn lift.
    pub h_extrema: (f64, f64),
    /// The lift did not complete; the loop is counted as escaped.
    pub indeterminate: bool,
}

/// Containment of the canonical m-turn representative of the orbit in `E0`.
pub fn detect_escape(
    orbit: &OrbitRecord,
    m: usize,
    annulus: &Annulus,
    opts: &LiftOptions,
) -> EscapeReport {
    let base_in_a0 = orbit
        .points
        .iter()
        .all(|&u| annulus.contains(crate::family::level_from_section(u)));
    match lift_from_section(orbit.base_point(), m, &orbit.params, opts) {
        Ok(lift) => {
            let completed = lift.is_completed();
            let loop_in = completed
                && base_in_a0
                && annulus.contains_modulus(lift.h_min)
                && annulus.contains_modulus(lift.h_max);
            EscapeReport {
                base_in_a0,
                loop_in_a0: loop_in,
                h_extrema: (lift.h_min, lift.h_max),
                indeterminate: !completed,
            }
        }
        Err(_) => {
            // Fall back to the orbit points themselves so the report stays finite.
            let moduli = orbit.h_values.iter().map(|h| h.norm());
            let lo = moduli.clone().fold(f64::INFINITY, f64::min);
            let hi = moduli.fold(0.0, f64::max);
            EscapeReport {
                base_in_a0,
                loop_in_a0: false,
                h_extrema: (lo, hi),
                indeterminate: true,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSample {
    pub eps: Complex64,
    /// Arclength along the path.
    pub s: f64,
    /// Predicted base point handed to the corrector.
    pub predicted: Complex64,
    pub orbit: OrbitRecord,
    pub escape: EscapeReport,
}

/// Why the march along the path stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Halt {
    ReachedTarget,
    StepUnderflow,
    BranchCollision,
    IntegrationFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Terminal {
    ReachedTarget,
    EscapeConfirmedAt { eps_star: Complex64 },
    StepUnderflow,
    BranchCollision,
    IntegrationFailure,
}

impl From<Halt> for Terminal {
    fn from(h: Halt) -> Self {
        match h {
            Halt::ReachedTarget => Terminal::ReachedTarget,
            Halt::StepUnderflow => Terminal::StepUnderflow,
            Halt::BranchCollision => Terminal::BranchCollision,
            Halt::IntegrationFailure => Terminal::IntegrationFailure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationTrace {
    pub m: usize,
    pub samples: Vec<ContinuationSample>,
    /// `EscapeConfirmedAt` when the loop left `A0` for good, otherwise the halt reason.
    pub terminal: Terminal,
    pub halted_by: Halt,
    /// Last corrector failure before the march stopped, if any.
    pub last_failure: Option<String>,
}

fn classify(err: &Error) -> Halt {
    use crate::integrate::LiftStatus;
    match err {
        Error::PeriodTooLow { .. } | Error::ConvergedToZero => Halt::BranchCollision,
        Error::SingularDenominator { .. }
        | Error::Lift {
            status: LiftStatus::SingularDenominator | LiftStatus::StepLimit,
            ..
        } => Halt::IntegrationFailure,
        _ => Halt::StepUnderflow,
    }
}

/// Continue `start` along `path`, halving the step on corrector failure down to
/// `path.min_step`. All failures end up in the trace's `terminal`.
pub fn continue_orbit(
    start: &OrbitRecord,
    path: &EpsPath,
    annulus: &Annulus,
    opts: &LiftOptions,
) -> Result<ContinuationTrace> {
    start.certify()?;
    if (start.params.eps - path.start()).norm() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "orbit was found at eps = {} but the path starts at {}",
            start.params.eps,
            path.start()
        )));
    }
    let m = start.m;
    let length = path.length();
    let mut samples = vec![ContinuationSample {
        eps: start.params.eps,
        s: 0.0,
        predicted: start.base_point(),
        orbit: start.clone(),
        escape: detect_escape(start, m, annulus, opts),
    }];

    let mut s = 0.0;
    let mut step = path.max_step.min(length);
    let jump_bound = CONTINUITY_FACTOR * path.max_step;
    let mut last_failure: Option<(Halt, String)> = None;
    let halted_by = loop {
        if s >= length {
            break Halt::ReachedTarget;
        }
        if step < path.min_step {
            break last_failure
                .as_ref()
                .map(|f| f.0)
                .unwrap_or(Halt::StepUnderflow);
        }
        let s_try = if s + step >= length { length } else { s + step };
        let eps_try = path.point_at(s_try);

        let n = samples.len();
        let prev = &samples[n - 1];
        let predicted = if n >= 2 && prev.s > samples[n - 2].s {
            let before = &samples[n - 2];
            let slope = (prev.orbit.base_point() - before.orbit.base_point()) / (prev.s - before.s);
            prev.orbit.base_point() + slope * (s_try - prev.s)
        } else {
            prev.orbit.base_point()
        };
        let capture = BRANCH_CAPTURE * prev.orbit.min_point_gap();
        let prev_base = prev.orbit.base_point();

        let attempt = start
            .params
            .with_eps(eps_try)
            .and_then(|params| newton_orbit(predicted, m, &params, opts));
        match attempt {
            Ok(orbit)
                if (orbit.base_point() - predicted).norm() <= capture
                    && (orbit.base_point() - prev_base).norm() < jump_bound =>
            {
                if orbit.min_point_gap() < DEDUP_TOL {
                    last_failure = Some((Halt::BranchCollision, "orbit points merged".into()));
                    break Halt::BranchCollision;
                }
                let escape = detect_escape(&orbit, m, annulus, opts);
                samples.push(ContinuationSample {
                    eps: eps_try,
                    s: s_try,
                    predicted,
                    orbit,
                    escape,
                });
                s = s_try;
                step = (step * STEP_GROWTH).min(path.max_step);
            }
            Ok(orbit) => {
                last_failure = Some((
                    Halt::StepUnderflow,
                    format!(
                        "corrector moved {:e} from the prediction and {:e} from the last \
                         sample (bounds {capture:e}, {jump_bound:e})",
                        (orbit.base_point() - predicted).norm(),
                        (orbit.base_point() - prev_base).norm()
                    ),
                ));
                step *= 0.5;
            }
            Err(e) => {
                last_failure = Some((classify(&e), e.to_string()));
                step *= 0.5;
            }
        }
    };

    let mut trace = ContinuationTrace {
        m,
        samples,
        terminal: halted_by.into(),
        halted_by,
        last_failure: last_failure.map(|f| f.1),
    };
    if let Some(eps_star) = find_escape_epsilon(&trace) {
        trace.terminal = Terminal::EscapeConfirmedAt { eps_star };
    }
    Ok(trace)
}

/// First sample at which the loop stops being contained in `A0` for the rest of the trace.
pub fn find_escape_epsilon(trace: &ContinuationTrace) -> Option<Complex64> {
    let last_inside = trace.samples.iter().rposition(|s| s.escape.loop_in_a0)?;
    trace.samples.get(last_inside + 1).map(|s| s.eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{level_from_section, FoliationParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn synthetic(u1: Complex64) -> OrbitRecord {
        let params = FoliationParams::new(c(0.05, 0.0), c(0.001, 0.5)).unwrap();
        OrbitRecord {
            m: 1,
            params,
            points: vec![u1],
            residual: 0.0,
            multiplier: c(2.0, 0.0),
            separation: u1.norm(),
            h_values: vec![level_from_section(u1)],
            newton_hits: 1,
        }
    }

    fn sample(eps: f64, inside: bool) -> ContinuationSample {
        ContinuationSample {
            eps: c(0.0, eps),
            s: 0.5 - eps,
            predicted: c(0.1, 0.0),
            orbit: synthetic(c(0.1, 0.0)),
            escape: EscapeReport {
                base_in_a0: true,
                loop_in_a0: inside,
                h_extrema: (0.9, 1.1),
                indeterminate: false,
            },
        }
    }

    fn trace_of(flags: &[bool]) -> ContinuationTrace {
        ContinuationTrace {
            m: 1,
            samples: flags
                .iter()
                .enumerate()
                .map(|(i, &f)| sample(0.5 - 0.01 * i as f64, f))
                .collect(),
            terminal: Terminal::StepUnderflow,
            halted_by: Halt::StepUnderflow,
            last_failure: None,
        }
    }

    #[test]
    fn path_geometry() {
        let p = EpsPath::with_default_steps(vec![c(0.0, 0.5), c(0.0, 0.0), c(0.3, 0.0)]).unwrap();
        assert!((p.length() - 0.8).abs() < 1e-15);
        assert!((p.point_at(0.25) - c(0.0, 0.25)).norm() < 1e-15);
        assert!((p.point_at(0.6) - c(0.1, 0.0)).norm() < 1e-15);
        assert_eq!(p.point_at(10.0), c(0.3, 0.0));
        assert!((p.max_step - 0.01).abs() < 1e-15);
        assert!(EpsPath::new(vec![c(0.0, 0.5)], 0.1, 0.01).is_err());
        assert!(EpsPath::new(vec![c(0.0, 0.5), c(0.0, 0.0)], 0.1, 0.0).is_err());
    }

    #[test]
    fn escape_epsilon_definition() {
        assert_eq!(find_escape_epsilon(&trace_of(&[true, true, true])), None);
        assert_eq!(find_escape_epsilon(&trace_of(&[false, false])), None);
        let t = trace_of(&[true, true, false, false]);
        assert_eq!(find_escape_epsilon(&t), Some(t.samples[2].eps));
        // Re-entry moves the transition to the last exit.
        let t = trace_of(&[true, false, true, false]);
        assert_eq!(find_escape_epsilon(&t), Some(t.samples[3].eps));
    }

    #[test]
    fn escape_epsilon_lies_strictly_inside_the_path() {
        let t = trace_of(&[true, true, false, false, false]);
        let start = t.samples[0].eps.norm();
        let star = find_escape_epsilon(&t).unwrap().norm();
        assert!(star > 0.0 && star < start);
    }

    #[test]
    fn base_point_outside_a0() {
        let orbit = synthetic(c(0.9, 0.0));
        let report = detect_escape(&orbit, 1, &Annulus::default_a0(), &LiftOptions::default());
        assert!(!report.base_in_a0);
        assert!(!report.loop_in_a0);
    }

    #[test]
    fn nearby_leaf_stays_inside() {
        let orbit = synthetic(c(1e-3, 0.0));
        let report = detect_escape(&orbit, 1, &Annulus::default_a0(), &LiftOptions::default());
        assert!(report.base_in_a0 && report.loop_in_a0 && !report.indeterminate);
        assert!((report.h_extrema.0 - 1.0).abs() < 1e-2 && (report.h_extrema.1 - 1.0).abs() < 1e-2);
    }
}
