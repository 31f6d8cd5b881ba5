//! Lifting of base segments in `zeta` to leaves, and the Poincaré return map built on it.
//!
//! A straight base segment `zeta0 -> zeta1` is parametrized by arclength `s`, and the leaf
//! equation is integrated together with its variational equation
//! `d/dzeta (dxi/dxi0) = (d rhs/d xi) (dxi/dxi0)` by an embedded Dormand–Prince 5(4) pair with
//! PI step-size control. Both unknowns are complex; errors are measured per complex
//! component.

use crate::error::{Error, Result};
use crate::family::{
    assert_finite, leaf_rhs_with_jacobian, section_from_xi, xi_from_section, Annulus,
    FoliationParams,
};
use crate::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Annulus in `|h| = |xi²|` outside of which the lift is abandoned.
    pub guard: Annulus,
    pub record_trace: bool,
    /// Largest step in `zeta`, so that extrema sampled at step ends resolve the loop.
    pub max_step: f64,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 100_000,
            guard: Annulus::default_guard(),
            record_trace: false,
            max_step: 0.25,
        }
    }
}

impl LiftOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_step > 0.0) {
            return Err(Error::InvalidArgument(
                "rel_tol, abs_tol and max_step must be positive".into(),
            ));
        }
        if self.max_steps < 1 {
            return Err(Error::InvalidArgument(
                "max_steps must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LiftStatus {
    Completed,
    SingularDenominator,
    GuardExited,
    StepLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub zeta: Complex64,
    pub xi: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftResult {
    /// Last accepted state; the endpoint of the segment when `Completed`.
    pub xi_end: Complex64,
    pub dxi_end_dxi0: Complex64,
    /// Base point reached.
    pub zeta_end: Complex64,
    pub h_min: f64,
    pub h_max: f64,
    pub status: LiftStatus,
    /// Sum of the accepted local error estimates on `xi`.
    pub error_estimate: f64,
    /// Accepted steps.
    pub steps: usize,
    pub trace: Option<Vec<TracePoint>>,
}

impl LiftResult {
    pub fn is_completed(&self) -> bool {
        self.status == LiftStatus::Completed
    }

    pub fn into_completed(self) -> Result<Self> {
        if self.is_completed() {
            Ok(self)
        } else {
            Err(Error::Lift {
                status: self.status,
                zeta: self.zeta_end,
            })
        }
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// PI controller constants (Hairer's DOPRI5 defaults).
const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

type State = [Complex64; 2];

#[inline]
fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += k[0] * (h * c);
        out[1] += k[1] * (h * c);
    }
    out
}

fn is_finite_state(y: &State) -> bool {
    y.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

struct SegmentField<'a> {
    zeta0: Complex64,
    dir: Complex64,
    params: &'a FoliationParams,
}

impl SegmentField<'_> {
    fn zeta(&self, s: f64) -> Complex64 {
        self.zeta0 + self.dir * s
    }

    fn eval(&self, s: f64, y: &State) -> Result<State> {
        let (f, df) = leaf_rhs_with_jacobian(self.zeta(s), y[0], self.params)?;
        Ok([f * self.dir, df * y[1] * self.dir])
    }
}

struct Tolerance {
    rel: f64,
    abs: f64,
}

impl Tolerance {
    fn norm(&self, e: &State, y0: &State, y1: &State) -> f64 {
        let mut acc = 0.0;
        for i in 0..2 {
            let sc = self.abs + self.rel * y0[i].norm().max(y1[i].norm());
            let r = e[i].norm() / sc;
            acc += r * r;
        }
        (acc / 2.0).sqrt()
    }

    fn scaled(&self, v: &State, y: &State) -> f64 {
        let mut acc = 0.0;
        for i in 0..2 {
            let sc = self.abs + self.rel * y[i].norm();
            let r = v[i].norm() / sc;
            acc += r * r;
        }
        (acc / 2.0).sqrt()
    }
}

/// Lift the straight base segment `zeta0 -> zeta1` to the leaf through `xi0`.
///
/// Returns the lift in all cases where integration could start; how it ended is in
/// `status`. Leaving `opts.guard` is an observation, not an error.
pub fn lift_segment(
    xi0: Complex64,
    zeta0: Complex64,
    zeta1: Complex64,
    params: &FoliationParams,
    opts: &LiftOptions,
) -> Result<LiftResult> {
    assert_finite(xi0, "xi0");
    assert_finite(zeta0, "zeta0");
    assert_finite(zeta1, "zeta1");
    opts.validate()?;
    if xi0 == Complex64::new(0.0, 0.0) {
        return Err(Error::CriticalLeaf);
    }

    let h0_abs = (xi0 * xi0).norm();
    let mut result = LiftResult {
        xi_end: xi0,
        dxi_end_dxi0: Complex64::new(1.0, 0.0),
        zeta_end: zeta0,
        h_min: h0_abs,
        h_max: h0_abs,
        status: LiftStatus::Completed,
        error_estimate: 0.0,
        steps: 0,
        trace: opts.record_trace.then(|| {
            vec![TracePoint {
                zeta: zeta0,
                xi: xi0,
            }]
        }),
    };
    if !opts.guard.contains_modulus(h0_abs) {
        result.status = LiftStatus::GuardExited;
        return Ok(result);
    }

    let length = (zeta1 - zeta0).norm();
    if length == 0.0 {
        return Ok(result);
    }
    let field = SegmentField {
        zeta0,
        dir: (zeta1 - zeta0) / length,
        params,
    };
    let tol = Tolerance {
        rel: opts.rel_tol,
        abs: opts.abs_tol,
    };

    let mut s = 0.0;
    let mut y: State = [xi0, Complex64::new(1.0, 0.0)];
    let mut k1 = match field.eval(s, &y) {
        Ok(k) => k,
        Err(_) => {
            result.status = LiftStatus::SingularDenominator;
            return Ok(result);
        }
    };
    let mut h = match initial_step(&field, &tol, &y, &k1, length, opts.max_step) {
        Some(h) => h,
        None => {
            result.status = LiftStatus::SingularDenominator;
            return Ok(result);
        }
    };

    let expo1 = 0.2 - BETA * 0.75;
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let h_floor = 1e-14 * length.max(1.0);
    let mut attempts = 0usize;

    while s < length {
        if attempts >= opts.max_steps {
            result.status = LiftStatus::StepLimit;
            break;
        }
        let last = s + h >= length * (1.0 - 1e-15);
        if last {
            h = length - s;
        }
        attempts += 1;

        let stages = (|| -> Result<(State, State, State)> {
            let k2 = field.eval(s + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
            let k3 = field.eval(s + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = field.eval(
                s + C4 * h,
                &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            )?;
            let k5 = field.eval(
                s + C5 * h,
                &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            )?;
            let k6 = field.eval(
                s + h,
                &axpy(
                    &y,
                    h,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            )?;
            let y_new = axpy(
                &y,
                h,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let k7 = field.eval(s + h, &y_new)?;
            let mut e = [Complex64::new(0.0, 0.0); 2];
            for i in 0..2 {
                e[i] =
                    (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                        * h;
            }
            Ok((y_new, k7, e))
        })();

        let (y_new, k7, e) = match stages {
            Ok(v) => v,
            Err(_) => {
                result.status = LiftStatus::SingularDenominator;
                result.zeta_end = field.zeta(s);
                break;
            }
        };

        let err = if is_finite_state(&y_new) && is_finite_state(&e) {
            tol.norm(&e, &y, &y_new)
        } else {
            f64::INFINITY
        };

        if err <= 1.0 {
            let fac11 = err.powf(expo1);
            let mut fac = fac11 / facold.powf(BETA);
            fac = (fac / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            facold = err.max(1e-4);

            s = if last { length } else { s + h };
            result.steps += 1;
            y = y_new;
            k1 = k7;
            result.error_estimate += e[0].norm();
            let h_abs = (y[0] * y[0]).norm();
            result.h_min = result.h_min.min(h_abs);
            result.h_max = result.h_max.max(h_abs);
            result.xi_end = y[0];
            result.dxi_end_dxi0 = y[1];
            result.zeta_end = field.zeta(s);
            if let Some(trace) = result.trace.as_mut() {
                trace.push(TracePoint {
                    zeta: result.zeta_end,
                    xi: y[0],
                });
            }
            if !opts.guard.contains_modulus(h_abs) {
                result.status = LiftStatus::GuardExited;
                break;
            }
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new.min(opts.max_step);
        } else {
            let fac11 = if err.is_finite() {
                err.powf(expo1)
            } else {
                1.0 / FAC_MIN * SAFE
            };
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            last_rejected = true;
            if h < h_floor {
                result.status = LiftStatus::StepLimit;
                break;
            }
        }
    }
    Ok(result)
}

fn initial_step(
    field: &SegmentField<'_>,
    tol: &Tolerance,
    y: &State,
    f0: &State,
    length: f64,
    max_step: f64,
) -> Option<f64> {
    let d0 = tol.scaled(y, y);
    let d1 = tol.scaled(f0, y);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(max_step).min(length);
    let y1 = axpy(y, h0, &[(1.0, f0)]);
    let f1 = field.eval(h0, &y1).ok()?;
    let df = [f1[0] - f0[0], f1[1] - f0[1]];
    let d2 = tol.scaled(&df, y) / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dmax).powf(0.2)
    };
    Some((100.0 * h0).min(h1).min(max_step).min(length))
}

/// Value and complex derivative of a map of the cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapValue {
    pub value: Complex64,
    pub derivative: Complex64,
}

fn check_in_chart(u: Complex64) -> Result<()> {
    assert_finite(u, "u");
    if u.norm() >= 1.0 {
        return Err(Error::OutsideChart(u));
    }
    Ok(())
}

/// Convert a completed lift from `xi0 = (1-u)^(-1/2)` back to the section coordinate.
fn section_value(xi0: Complex64, lift: &LiftResult) -> Result<MapValue> {
    let xi_end = lift.xi_end;
    let w = section_from_xi(xi_end);
    if w.norm() >= 1.0 {
        return Err(Error::BranchOverflow { w, xi_end });
    }
    // dw/du = (dw/dxi_end) (dxi_end/dxi0) (dxi0/du) = 2 xi_end^-3 v xi0³ / 2.
    let ratio = xi0 / xi_end;
    Ok(MapValue {
        value: w,
        derivative: lift.dxi_end_dxi0 * ratio * ratio * ratio,
    })
}

/// The lift of `turns` full turns of the base circle from the section point `u`.
pub fn lift_from_section(
    u: Complex64,
    turns: usize,
    params: &FoliationParams,
    opts: &LiftOptions,
) -> Result<LiftResult> {
    let xi0 = xi_from_section(u)?;
    lift_segment(
        xi0,
        Complex64::new(0.0, 0.0),
        Complex64::new(2.0 * PI * turns as f64, 0.0),
        params,
        opts,
    )
}

/// The return map `P(u)` over one turn of the base circle and its derivative.
pub fn poincare(u: Complex64, params: &FoliationParams, opts: &LiftOptions) -> Result<MapValue> {
    check_in_chart(u)?;
    let xi0 = xi_from_section(u)?;
    let lift = lift_from_section(u, 1, params, opts)?.into_completed()?;
    section_value(xi0, &lift)
}

/// `P^k(u)` as a k-fold composition, with the chain-rule derivative.
pub fn poincare_iter(
    u: Complex64,
    k: usize,
    params: &FoliationParams,
    opts: &LiftOptions,
) -> Result<MapValue> {
    Ok(*poincare_orbit(u, k, params, opts)?
        .last()
        .expect("k >= 1 yields at least one iterate"))
}

/// The iterates `P(u), P²(u), ..., P^k(u)` with cumulative derivatives.
pub fn poincare_orbit(
    u: Complex64,
    k: usize,
    params: &FoliationParams,
    opts: &LiftOptions,
) -> Result<Vec<MapValue>> {
    if k < 1 {
        return Err(Error::InvalidArgument(
            "iteration count must be at least 1".into(),
        ));
    }
    let mut out = Vec::with_capacity(k);
    let mut current = u;
    let mut derivative = Complex64::new(1.0, 0.0);
    for _ in 0..k {
        let step = poincare(current, params, opts)?;
        derivative *= step.derivative;
        current = step.value;
        out.push(MapValue {
            value: current,
            derivative,
        });
    }
    Ok(out)
}

/// `P^k(u)` from a single lift over `[0, 2 pi k]`.
pub fn poincare_long_lift(
    u: Complex64,
    k: usize,
    params: &FoliationParams,
    opts: &LiftOptions,
) -> Result<MapValue> {
    if k < 1 {
        return Err(Error::InvalidArgument(
            "iteration count must be at least 1".into(),
        ));
    }
    check_in_chart(u)?;
    let xi0 = xi_from_section(u)?;
    let lift = lift_from_section(u, k, params, opts)?.into_completed()?;
    section_value(xi0, &lift)
}
