//! The perturbed quadratic foliation `ker(dH + eps (omega1 + a omega2))` on C², with
//! `H = x² + y²`, `omega1 = (H - 1)(y dx - x dy)` and `omega2 = y dH`.
//!
//! Leaves are parametrized over the angular coordinate `zeta` through the chart
//! `(zeta, xi) -> (xi cos zeta, xi sin zeta)`, on which `H = xi²`. In that chart a leaf is
//! the graph of a solution of
//!
//! ```text
//! dxi/dzeta = eps (xi² - 1) xi / (2 (1 + eps a xi sin zeta))
//! ```
//!
//! The level `xi = 1` (the leaf `S1 = {H = 1}`) is invariant for all parameters.

use crate::error::{Error, Result};
use crate::Complex64;
use serde::{Deserialize, Serialize};

/// Default bound on `|eps|`.
pub const DEFAULT_GUARD_RADIUS: f64 = 1.0;

/// Tangency threshold for `|1 + eps a xi sin zeta|`.
pub const SING_TOL: f64 = 1e-8;

pub(crate) fn assert_finite(z: Complex64, what: &str) {
    assert!(
        z.re.is_finite() && z.im.is_finite(),
        "{what} must be finite, got {z}"
    );
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoliationParams {
    pub a: Complex64,
    pub eps: Complex64,
}

impl FoliationParams {
    pub fn new(a: Complex64, eps: Complex64) -> Result<Self> {
        Self::with_guard_radius(a, eps, DEFAULT_GUARD_RADIUS)
    }

    pub fn with_guard_radius(a: Complex64, eps: Complex64, guard_radius: f64) -> Result<Self> {
        assert_finite(a, "a");
        assert_finite(eps, "eps");
        if eps.norm() > guard_radius {
            return Err(Error::InvalidArgument(format!(
                "|eps| = {} exceeds the perturbation guard radius {guard_radius}",
                eps.norm()
            )));
        }
        Ok(Self { a, eps })
    }

    /// Same family constants at a different `eps`.
    pub fn with_eps(&self, eps: Complex64) -> Result<Self> {
        Self::new(self.a, eps)
    }

    pub fn is_integrable(&self) -> bool {
        self.eps == Complex64::new(0.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientPoint {
    pub x: Complex64,
    pub y: Complex64,
}

impl AmbientPoint {
    /// The Hamiltonian `x² + y²`.
    pub fn hamiltonian(&self) -> Complex64 {
        self.x * self.x + self.y * self.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub zeta: Complex64,
    pub xi: Complex64,
}

impl ChartPoint {
    pub fn new(zeta: Complex64, xi: Complex64) -> Result<Self> {
        if xi == Complex64::new(0.0, 0.0) {
            return Err(Error::CriticalLeaf);
        }
        Ok(Self { zeta, xi })
    }

    /// Chart point over `zeta` on the leaf through the cross-section value `u`,
    /// using the branch `xi = (1 - u)^(-1/2)` with `u = 0 <-> xi = 1`.
    pub fn from_section(zeta: Complex64, u: Complex64) -> Result<Self> {
        Self::new(zeta, xi_from_section(u)?)
    }

    /// Local fibre coordinate `w = 1 - xi^(-2)`.
    pub fn w(&self) -> Complex64 {
        section_from_xi(self.xi)
    }
}

/// `xi = (1 - u)^(-1/2)` on the principal branch (`u = 0 -> xi = 1`).
pub fn xi_from_section(u: Complex64) -> Result<Complex64> {
    let one_minus = Complex64::new(1.0, 0.0) - u;
    if one_minus == Complex64::new(0.0, 0.0) {
        return Err(Error::CriticalLeaf);
    }
    Ok(one_minus.sqrt().inv())
}

/// `w = 1 - xi^(-2)`, i.e. `h = xi² = 1 / (1 - w)`.
pub fn section_from_xi(xi: Complex64) -> Complex64 {
    Complex64::new(1.0, 0.0) - (xi * xi).inv()
}

/// Level `h = 1 / (1 - u)` of the Hamiltonian on the leaf through `u`.
pub fn level_from_section(u: Complex64) -> Complex64 {
    (Complex64::new(1.0, 0.0) - u).inv()
}

/// Annulus `rho < |h| < r_outer` in the `h`-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub rho: f64,
    #[serde(rename = "R")]
    pub r_outer: f64,
}

impl Annulus {
    /// Requires `0 < rho < 1 < r_outer` so the reference leaf `h = 1` lies inside.
    pub fn new(rho: f64, r_outer: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0 && r_outer > 1.0 && r_outer.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "annulus needs 0 < rho < 1 < R, got ({rho}, {r_outer})"
            )));
        }
        Ok(Self { rho, r_outer })
    }

    /// Default `A0 = (0.2, 5)`.
    pub fn default_a0() -> Self {
        Self {
            rho: 0.2,
            r_outer: 5.0,
        }
    }

    /// Default integration guard `(0.05, 20)`.
    pub fn default_guard() -> Self {
        Self {
            rho: 0.05,
            r_outer: 20.0,
        }
    }

    pub fn contains_modulus(&self, h_abs: f64) -> bool {
        h_abs > self.rho && h_abs < self.r_outer
    }

    pub fn contains(&self, h: Complex64) -> bool {
        self.contains_modulus(h.norm())
    }

    /// Strict nesting `other.rho < rho` and `R < other.R`.
    pub fn nested_in(&self, other: &Annulus) -> bool {
        other.rho < self.rho && self.r_outer < other.r_outer
    }
}

pub fn chart_to_ambient(p: ChartPoint) -> Result<AmbientPoint> {
    if p.xi == Complex64::new(0.0, 0.0) {
        return Err(Error::CriticalLeaf);
    }
    assert_finite(p.zeta, "zeta");
    assert_finite(p.xi, "xi");
    Ok(AmbientPoint {
        x: p.xi * p.zeta.cos(),
        y: p.xi * p.zeta.sin(),
    })
}

/// Right-hand side `dxi/dzeta` of the leaf equation.
pub fn leaf_rhs(zeta: Complex64, xi: Complex64, params: &FoliationParams) -> Result<Complex64> {
    leaf_rhs_with_jacobian(zeta, xi, params).map(|(f, _)| f)
}

/// `dxi/dzeta` together with its derivative in `xi`, for the variational equation.
pub fn leaf_rhs_with_jacobian(
    zeta: Complex64,
    xi: Complex64,
    params: &FoliationParams,
) -> Result<(Complex64, Complex64)> {
    let eps = params.eps;
    let ea_sin = eps * params.a * zeta.sin();
    let den = 1.0 + ea_sin * xi;
    let modulus = den.norm();
    if !(modulus >= SING_TOL) {
        return Err(Error::SingularDenominator { zeta, modulus });
    }
    let xi2 = xi * xi;
    let num = eps * (xi2 - 1.0) * xi;
    let dnum = eps * (3.0 * xi2 - 1.0);
    let inv = den.inv();
    let f = 0.5 * num * inv;
    let df = 0.5 * (dnum - num * ea_sin * inv) * inv;
    Ok((f, df))
}

/// Coefficients `(A, B)` of `omega1 + a omega2 = A dx + B dy` at an ambient point.
pub fn perturbation_form(p: &AmbientPoint, a: Complex64) -> (Complex64, Complex64) {
    let (x, y) = (p.x, p.y);
    let hm1 = p.hamiltonian() - 1.0;
    let a1 = hm1 * y;
    let b1 = -hm1 * x;
    let a2 = 2.0 * x * y;
    let b2 = 2.0 * y * y;
    (a1 + a * a2, b1 + a * b2)
}

/// `|(eps (omega1 + a omega2)) ∧ dH|` on the level `H = h`, i.e. the coefficient of
/// `dx ∧ dy`, which equals `2 eps (h - 1) h`. It vanishes exactly on the invariant levels
/// `h = 0` and `h = 1`.
pub fn wedge_invariance_check(h: Complex64, params: &FoliationParams) -> f64 {
    assert_finite(h, "h");
    // Evaluate on the point (sqrt h, 0) of the level set; h = 0 is the origin.
    let p = AmbientPoint {
        x: h.sqrt(),
        y: Complex64::new(0.0, 0.0),
    };
    let (a_coef, b_coef) = perturbation_form(&p, params.a);
    let (hx, hy) = (2.0 * p.x, 2.0 * p.y);
    (params.eps * (a_coef * hy - b_coef * hx)).norm()
}
