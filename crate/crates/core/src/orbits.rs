//! Isolated m-periodic orbits of the return map, i.e. m-fold limit cycles.
//!
//! Nonzero solutions of `P^m(u) = u` are located from the leading balance
//! `(e^{2 pi m eps} - 1) + a K_m u^m = 0`, polished by Newton's method with the variational
//! derivative, and counted independently by the argument principle applied to
//! `u -> (P^m(u) - u) / u` on a circle.

use crate::error::{Error, Result};
use crate::family::{level_from_section, FoliationParams};
use crate::integrate::{poincare_iter, poincare_orbit, LiftOptions};
use crate::melnikov::resonant_coefficient;
use crate::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const SEP_TOL: f64 = 1e-6;
pub const ZERO_TOL: f64 = 1e-9;
pub const DEDUP_TOL: f64 = 1e-8;
pub const CONTOUR_TOL: f64 = 1e-10;
/// Lower bound on `|multiplier - 1|` for an orbit to count as isolated.
pub const ISOLATION_TOL: f64 = 1e-8;
pub const MAX_NEWTON_ITERATIONS: usize = 50;
/// Search circle radius relative to the modulus of the leading-balance guesses.
pub const SEARCH_RADIUS_FACTOR: f64 = 1.5;
/// Search circles are kept inside `|u| <= 0.9`, where `|h| = |1/(1-u)| <= 10`.
pub const MAX_SEARCH_RADIUS: f64 = 0.9;
pub const DEFAULT_WINDING_SAMPLES: usize = 128;

/// Newton stops once `|F|` drops below this.
const NEWTON_F_TOL: f64 = 1e-13;
const NEWTON_MAX_HALVINGS: usize = 12;
const WINDING_MAX_DEPTH: u32 = 16;
const WINDING_MAX_ARG_STEP: f64 = PI / 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub m: usize,
    pub params: FoliationParams,
    /// `u_1, ..., u_m` with `u_{j+1} = P(u_j)`.
    pub points: Vec<Complex64>,
    /// `|P^m(u_1) - u_1|`.
    pub residual: f64,
    /// `d(P^m)/du` at `u_1`.
    pub multiplier: Complex64,
    /// `min_{1 <= k < m} |P^k(u_1) - u_1|`; for `m = 1` the distance `|u_1|` to the trivial
    /// fixed point.
    pub separation: f64,
    /// `h_j = 1 / (1 - u_j)`.
    pub h_values: Vec<Complex64>,
    /// Number of Newton runs that landed on this orbit.
    pub newton_hits: usize,
}

impl OrbitRecord {
    pub fn base_point(&self) -> Complex64 {
        self.points[0]
    }

    pub fn is_isolated(&self) -> bool {
        (self.multiplier - 1.0).norm() > ISOLATION_TOL
    }

    /// Check the record invariants: small residual, genuine period, nonzero points.
    pub fn certify(&self) -> Result<()> {
        if self.points.iter().any(|u| u.norm() < ZERO_TOL) {
            return Err(Error::ConvergedToZero);
        }
        if !(self.residual < RESIDUAL_TOL) {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual: self.residual,
            });
        }
        if !(self.separation > SEP_TOL) {
            return Err(Error::PeriodTooLow {
                separation: self.separation,
            });
        }
        Ok(())
    }

    /// Same orbit up to cyclic relabelling of its points.
    pub fn same_orbit(&self, other: &OrbitRecord, tol: f64) -> bool {
        if self.m != other.m || self.points.len() != other.points.len() {
            return false;
        }
        let m = self.points.len();
        (0..m).any(|shift| {
            (0..m).all(|j| (self.points[j] - other.points[(j + shift) % m]).norm() < tol)
        })
    }

    /// Smallest distance between two distinct points of the orbit, or between a point
    /// and the trivial fixed point 0.
    pub fn min_point_gap(&self) -> f64 {
        let mut gap = self
            .points
            .iter()
            .map(|u| u.norm())
            .fold(f64::INFINITY, f64::min);
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                gap = gap.min((self.points[i] - self.points[j]).norm());
            }
        }
        gap
    }

    /// Build the record for the orbit through `u1`, without certifying it.
    pub fn from_base_point(
        u1: Complex64,
        m: usize,
        params: &FoliationParams,
        opts: &LiftOptions,
    ) -> Result<Self> {
        let iterates = poincare_orbit(u1, m, params, opts)?;
        let mut points = Vec::with_capacity(m);
        points.push(u1);
        points.extend(iterates[..m - 1].iter().map(|v| v.value));
        let last = iterates[m - 1];
        let separation = if m == 1 {
            u1.norm()
        } else {
            iterates[..m - 1]
                .iter()
                .map(|v| (v.value - u1).norm())
                .fold(f64::INFINITY, f64::min)
        };
        Ok(Self {
            m,
            params: *params,
            h_values: points.iter().map(|&u| level_from_section(u)).collect(),
            points,
            residual: (last.value - u1).norm(),
            multiplier: last.derivative,
            separation,
            newton_hits: 1,
        })
    }
}

/// `e^{2 pi m eps} - 1`, the linear part of `P^m(u) - u` divided by `u`.
pub fn linear_defect(m: usize, eps: Complex64) -> Complex64 {
    (2.0 * PI * m as f64 * eps).exp() - 1.0
}

/// The `m` roots of `(e^{2 pi m eps} - 1) + a eps c_m u^m = 0`. At `eps = i/m` the
/// coefficient `eps c_m` is [`crate::melnikov::map_resonant_coefficient`]; using `eps` itself keeps the
/// guesses right near `-i/m` as well.
pub fn initial_guesses(m: usize, params: &FoliationParams) -> Result<Vec<Complex64>> {
    if m < 1 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    if params.a == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidArgument("initial guesses need a != 0".into()));
    }
    let defect = linear_defect(m, params.eps);
    if defect.norm() < 1e-14 {
        return Err(Error::DegenerateLeadingTerm);
    }
    let target = -defect / (params.a * params.eps * resonant_coefficient(m));
    let modulus = target.norm().powf(1.0 / m as f64);
    let arg = target.arg();
    Ok((0..m)
        .map(|k| Complex64::from_polar(modulus, (arg + 2.0 * PI * k as f64) / m as f64))
        .collect())
}

/// Circle `|u| = r` enclosing the leading-balance guesses.
pub fn search_circle(m: usize, params: &FoliationParams) -> Result<(Complex64, f64)> {
    let guesses = initial_guesses(m, params)?;
    let radius = (SEARCH_RADIUS_FACTOR * guesses[0].norm()).min(MAX_SEARCH_RADIUS);
    Ok((Complex64::new(0.0, 0.0), radius))
}

fn deflated_displacement(
    u: Complex64,
    m: usize,
    params: &FoliationParams,
    opts: &LiftOptions,
) -> Result<Complex64> {
    let pm = poincare_iter(u, m, params, opts)?;
    Ok((pm.value - u) / u)
}

/// Number of nonzero fixed points of `P^m` inside `|u - center| < radius`, counted with
/// multiplicity, from the winding of `(P^m(u) - u) / u` around 0.
pub fn winding_count(
    center: Complex64,
    radius: f64,
    m: usize,
    params: &FoliationParams,
    n_samples: usize,
    opts: &LiftOptions,
) -> Result<i64> {
    if !(radius > 0.0) || n_samples < 8 || m < 1 {
        return Err(Error::InvalidArgument(
            "winding count needs radius > 0, m >= 1 and at least 8 samples".into(),
        ));
    }
    if center.norm() <= radius + 1e-15 && center.norm() >= radius - 1e-15 {
        return Err(Error::InvalidArgument(
            "contour passes through u = 0".into(),
        ));
    }
    let point = |theta: f64| center + Complex64::from_polar(radius, theta);
    let eval = |theta: f64| deflated_displacement(point(theta), m, params, opts);

    let thetas: Vec<f64> = (0..=n_samples)
        .map(|j| 2.0 * PI * j as f64 / n_samples as f64)
        .collect();
    let values: Vec<Complex64> = thetas[..n_samples]
        .par_iter()
        .map(|&t| eval(t))
        .collect::<Result<_>>()?;

    let mut min_modulus = f64::INFINITY;
    let mut total = 0.0;
    for j in 0..n_samples {
        let (g0, g1) = (values[j], values[(j + 1) % n_samples]);
        total += arg_increment(&eval, thetas[j], thetas[j + 1], g0, g1, 0, &mut min_modulus)?;
    }
    if min_modulus < CONTOUR_TOL {
        return Err(Error::ContourThroughZero { min_modulus });
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

fn arg_increment<F>(
    eval: &F,
    t0: f64,
    t1: f64,
    g0: Complex64,
    g1: Complex64,
    depth: u32,
    min_modulus: &mut f64,
) -> Result<f64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    *min_modulus = min_modulus.min(g0.norm()).min(g1.norm());
    let step = (g1 / g0).arg();
    if step.abs() <= WINDING_MAX_ARG_STEP || depth >= WINDING_MAX_DEPTH {
        return Ok(step);
    }
    let tm = 0.5 * (t0 + t1);
    let gm = eval(tm)?;
    Ok(arg_increment(eval, t0, tm, g0, gm, depth + 1, min_modulus)?
        + arg_increment(eval, tm, t1, gm, g1, depth + 1, min_modulus)?)
}

/// Newton's method on `F(u) = P^m(u) - u` from `u0`, with step halving to stay in the chart.
pub fn newton_orbit(
    u0: Complex64,
    m: usize,
    params: &FoliationParams,
    opts: &LiftOptions,
) -> Result<OrbitRecord> {
    if m < 1 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let mut u = u0;
    if u.norm() < ZERO_TOL {
        return Err(Error::ConvergedToZero);
    }
    let eval = |u: Complex64| -> Result<(Complex64, Complex64)> {
        let pm = poincare_iter(u, m, params, opts)?;
        Ok((pm.value - u, pm.derivative - 1.0))
    };
    let (mut f, mut jac) = eval(u)?;
    let mut iterations = 0;
    while f.norm() > NEWTON_F_TOL {
        if iterations >= MAX_NEWTON_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations,
                residual: f.norm(),
            });
        }
        iterations += 1;
        if jac == Complex64::new(0.0, 0.0) {
            return Err(Error::NoConvergence {
                iterations,
                residual: f.norm(),
            });
        }
        let du = f / jac;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..NEWTON_MAX_HALVINGS {
            let candidate = u - du * lambda;
            if candidate.norm() < 1.0 {
                if let Ok(next) = eval(candidate) {
                    if next.0.norm() < f.norm() || lambda == 1.0 {
                        accepted = Some((candidate, next));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        let Some((candidate, (f_new, jac_new))) = accepted else {
            return Err(Error::NoConvergence {
                iterations,
                residual: f.norm(),
            });
        };
        let moved = (candidate - u).norm();
        u = candidate;
        f = f_new;
        jac = jac_new;
        if u.norm() < ZERO_TOL {
            return Err(Error::ConvergedToZero);
        }
        if moved <= 1e-15 * u.norm() {
            break;
        }
    }
    let record = OrbitRecord::from_base_point(u, m, params, opts)?;
    match record.certify() {
        Err(Error::NoConvergence { residual, .. }) => Err(Error::NoConvergence {
            iterations,
            residual,
        }),
        Err(e) => Err(e),
        Ok(()) => Ok(record),
    }
}

/// Certified m-periodic orbits reached by Newton from the leading-balance guesses.
pub fn find_orbits(
    m: usize,
    params: &FoliationParams,
    opts: &LiftOptions,
) -> Result<Vec<OrbitRecord>> {
    if params.a == Complex64::new(0.0, 0.0) {
        return Err(Error::EmptyResult {
            winding: None,
            newton_successes: 0,
            failures: vec!["a = 0: the map is linear and has no nonzero periodic points".into()],
        });
    }
    let guesses = initial_guesses(m, params)?;
    let runs: Vec<Result<OrbitRecord>> = guesses
        .par_iter()
        .map(|&g| newton_orbit(g, m, params, opts))
        .collect();

    let mut orbits: Vec<OrbitRecord> = Vec::new();
    let mut failures = Vec::new();
    let mut successes = 0;
    for run in runs {
        match run {
            Ok(record) => {
                successes += 1;
                if let Some(existing) = orbits.iter_mut().find(|o| o.same_orbit(&record, DEDUP_TOL))
                {
                    existing.newton_hits += 1;
                } else {
                    orbits.push(record);
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    if orbits.is_empty() {
        let winding = search_circle(m, params).ok().and_then(|(center, radius)| {
            winding_count(center, radius, m, params, DEFAULT_WINDING_SAMPLES, opts).ok()
        });
        return Err(Error::EmptyResult {
            winding,
            newton_successes: successes,
            failures,
        });
    }
    Ok(orbits)
}
