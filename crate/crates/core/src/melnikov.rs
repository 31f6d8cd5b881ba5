//! Resonant first-order terms of the return map and the Abelian integral of the family.
//!
//! At `eps = i/m` the m-th iterate of the return map expands as
//! `P^m(u) = u + a K_m u^(m+1) + a² G_m(u, a) u`. Expanding `(1 - w)^(-1/2) = sum b_k w^k`
//! inside the loop integral leaves only the `k = m` Fourier mode, giving
//!
//! ```text
//! -(i/m) ∫_0^{2 pi m} sin t (1 - u e^{it/m})^(-1/2) dt = pi b_m u^m = c_m u^m.
//! ```
//!
//! The form pulled back along the leaf carries the factor `eps` in front of `a`, so the
//! coefficient the map itself carries is `K_m = eps c_m = (i/m) pi b_m`
//! (see [`map_resonant_coefficient`]).

use crate::error::{Error, Result};
use crate::family::{chart_to_ambient, perturbation_form, ChartPoint, FoliationParams};
use crate::integrate::{poincare_iter, LiftOptions};
use crate::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_QUADRATURE_POINTS: usize = 512;
pub const MIN_QUADRATURE_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelnikovEval {
    pub m: usize,
    pub u: Complex64,
    pub quadrature_value: Complex64,
    pub closed_form_value: Complex64,
    pub abs_error: f64,
}

impl MelnikovEval {
    pub fn evaluate(m: usize, u: Complex64, n_points: usize) -> Result<Self> {
        let quadrature_value = melnikov_quadrature(m, u, n_points)?;
        let closed_form_value = melnikov_closed(m, u);
        Ok(Self {
            m,
            u,
            quadrature_value,
            closed_form_value,
            abs_error: (quadrature_value - closed_form_value).norm(),
        })
    }
}

/// Taylor coefficient `b_k` of `(1 - w)^(-1/2)`, via `b_k = b_{k-1} (2k - 1) / (2k)`.
pub fn series_coeff_b(k: usize) -> f64 {
    (1..=k).fold(1.0, |b, j| b * (2 * j - 1) as f64 / (2 * j) as f64)
}

/// `c_m = pi b_m`.
pub fn resonant_coefficient(m: usize) -> f64 {
    PI * series_coeff_b(m)
}

/// Coefficient `K_m = (i/m) c_m` of `a u^(m+1)` in `P^m(u) - u` at `eps = i/m`.
pub fn map_resonant_coefficient(m: usize) -> Complex64 {
    assert!(m >= 1, "m must be at least 1");
    Complex64::new(0.0, resonant_coefficient(m) / m as f64)
}

/// `I_m(u, i/m) = -(i/m) ∫_0^{2 pi m} sin t (1 - u e^{it/m})^(-1/2) dt` by the
/// trapezoid rule, which converges geometrically for this periodic analytic integrand.
pub fn melnikov_quadrature(m: usize, u: Complex64, n_points: usize) -> Result<Complex64> {
    if m < 1 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    if n_points < MIN_QUADRATURE_POINTS {
        return Err(Error::InvalidArgument(format!(
            "quadrature needs at least {MIN_QUADRATURE_POINTS} points, got {n_points}"
        )));
    }
    if u.norm() >= 1.0 {
        return Err(Error::OutsideChart(u));
    }
    let period = 2.0 * PI * m as f64;
    let dt = period / n_points as f64;
    let mf = m as f64;
    let sum: Complex64 = (0..n_points)
        .map(|j| {
            let t = j as f64 * dt;
            let w = u * Complex64::from_polar(1.0, t / mf);
            t.sin() * (1.0 - w).sqrt().inv()
        })
        .sum();
    Ok(Complex64::new(0.0, -1.0 / mf) * sum * dt)
}

/// Closed form `pi b_m u^m`.
pub fn melnikov_closed(m: usize, u: Complex64) -> Complex64 {
    resonant_coefficient(m) * u.powu(m as u32)
}

/// `∫_0^{2 pi m} e^{ikt/m} sin t dt` by the trapezoid rule. Vanishes unless `k = m`,
/// where it equals `i pi m`.
pub fn fourier_sine_moment(k: i64, m: usize, n_points: usize) -> Complex64 {
    let mf = m as f64;
    let dt = 2.0 * PI * mf / n_points as f64;
    let sum: Complex64 = (0..n_points)
        .map(|j| {
            let t = j as f64 * dt;
            Complex64::from_polar(1.0, k as f64 * t / mf) * t.sin()
        })
        .sum();
    sum * dt
}

/// `(P^m(u) - u - a K_m u^(m+1)) / (a² u)` at `eps = i/m`, which stays bounded as `a -> 0`.
pub fn remainder_g(
    u: Complex64,
    m: usize,
    params: &FoliationParams,
    opts: &LiftOptions,
) -> Result<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    if params.a == zero {
        return Err(Error::InvalidArgument("remainder needs a != 0".into()));
    }
    if u == zero {
        return Err(Error::InvalidArgument("remainder needs u != 0".into()));
    }
    if m < 1 || params.eps != Complex64::new(0.0, 1.0 / m as f64) {
        return Err(Error::InvalidArgument(format!(
            "remainder is defined at eps = i/m exactly, got eps = {}",
            params.eps
        )));
    }
    let pm = poincare_iter(u, m, params, opts)?.value;
    let a = params.a;
    let lead = a * map_resonant_coefficient(m) * u.powu(m as u32 + 1);
    Ok((pm - u - lead) / (a * a * u))
}

/// `∮ (omega1 + a omega2)` over the real oval `H = h`, parametrized in ambient coordinates
/// by `(sqrt h cos t, sqrt h sin t)`.
pub fn pontryagin_integral(h: f64, params: &FoliationParams, n_points: usize) -> Result<Complex64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "level h must be positive, got {h}"
        )));
    }
    if n_points < 3 {
        return Err(Error::InvalidArgument(
            "quadrature needs at least 3 points".into(),
        ));
    }
    let r = Complex64::new(h.sqrt(), 0.0);
    let dt = 2.0 * PI / n_points as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..n_points {
        let t = Complex64::new(j as f64 * dt, 0.0);
        let p = chart_to_ambient(ChartPoint { zeta: t, xi: r })?;
        let (dx, dy) = (-r * t.sin(), r * t.cos());
        let (a_coef, b_coef) = perturbation_form(&p, params.a);
        sum += a_coef * dx + b_coef * dy;
    }
    Ok(sum * dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// `binom(2k, k) / 4^k`, computed with exact integers.
    fn central_binomial_over_4k(k: u32) -> f64 {
        let mut binom: u128 = 1;
        for j in 0..k as u128 {
            binom = binom * (2 * k as u128 - j) / (j + 1);
        }
        binom as f64 / 4f64.powi(k as i32)
    }

    #[test]
    fn b_values() {
        assert_eq!(series_coeff_b(0), 1.0);
        assert_eq!(series_coeff_b(1), 0.5);
        assert_eq!(series_coeff_b(2), 0.375);
        assert_eq!(series_coeff_b(3), 5.0 / 16.0);
        for k in 0..30 {
            let b = series_coeff_b(k as usize);
            let oracle = central_binomial_over_4k(k);
            assert!((b - oracle).abs() <= 1e-15 * oracle, "k = {k}");
        }
    }

    #[test]
    fn b_positive_and_decreasing() {
        let bs: Vec<f64> = (0..60).map(series_coeff_b).collect();
        assert!(bs.windows(2).all(|w| w[0] > w[1]));
        assert!(bs.iter().all(|&b| b > 0.0));
    }

    #[test]
    fn quadrature_examples() {
        assert!(melnikov_quadrature(4, c(0.0, 0.0), 512).unwrap().norm() < 1e-14);
        let q = melnikov_quadrature(1, c(0.2, 0.0), 512).unwrap();
        assert!((q - c(0.1 * PI, 0.0)).norm() < 1e-12);
        let q = melnikov_quadrature(3, c(0.3, 0.0), 512).unwrap();
        assert!((q - c(PI * 5.0 / 16.0 * 0.027, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn quadrature_rejects_coarse_grids() {
        assert!(melnikov_quadrature(2, c(0.1, 0.0), 32).is_err());
        assert!(melnikov_quadrature(0, c(0.1, 0.0), 128).is_err());
    }

    #[test]
    fn closed_form_examples() {
        assert!((melnikov_closed(1, c(1.0, 0.0)) - c(PI / 2.0, 0.0)).norm() < 1e-15);
        assert_eq!(melnikov_closed(5, c(0.0, 0.0)), c(0.0, 0.0));
        let v = melnikov_closed(2, c(0.5, 0.0));
        assert!((v - c(PI * 0.375 * 0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn fourier_orthogonality() {
        for m in 1..=5usize {
            for k in 0..=(2 * m as i64) {
                let v = fourier_sine_moment(k, m, 512);
                if k == m as i64 {
                    assert!((v - c(0.0, PI * m as f64)).norm() < 1e-12);
                } else {
                    assert!(v.norm() < 1e-12, "k = {k}, m = {m}: {v}");
                }
            }
        }
    }

    #[test]
    fn pontryagin_closed_form() {
        for a in [0.0, 0.05, 0.7] {
            let p = FoliationParams::new(c(a, 0.0), c(0.1, 0.0)).unwrap();
            for h in [0.5, 1.0, 2.0, 4.0] {
                let v = pontryagin_integral(h, &p, 256).unwrap();
                let expected = -2.0 * PI * h * (h - 1.0);
                assert!((v - c(expected, 0.0)).norm() < 1e-10, "h = {h}: {v}");
            }
        }
        let p = FoliationParams::new(c(0.05, 0.0), c(0.1, 0.0)).unwrap();
        let d = (pontryagin_integral(1.0 + 1e-5, &p, 256).unwrap()
            - pontryagin_integral(1.0 - 1e-5, &p, 256).unwrap())
            / 2e-5;
        assert!((d - c(-2.0 * PI, 0.0)).norm() < 1e-6);
        assert!(pontryagin_integral(-1.0, &p, 256).is_err());
    }

    #[test]
    fn remainder_preconditions() {
        let opts = LiftOptions::default();
        let p = FoliationParams::new(c(0.0, 0.0), c(0.0, 0.5)).unwrap();
        assert!(remainder_g(c(0.1, 0.0), 2, &p, &opts).is_err());
        let p = FoliationParams::new(c(0.1, 0.0), c(0.0, 0.5)).unwrap();
        assert!(remainder_g(c(0.0, 0.0), 2, &p, &opts).is_err());
        assert!(remainder_g(c(0.1, 0.0), 3, &p, &opts).is_err());
    }
}
