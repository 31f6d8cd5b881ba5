use foliation_lab::family::{
    chart_to_ambient, leaf_rhs, section_from_xi, xi_from_section, ChartPoint,
};
use foliation_lab::{Complex64, FoliationParams};
use proptest::prelude::*;

fn complex_in_disc(r: f64) -> impl Strategy<Value = Complex64> {
    (0.0..1.0f64, 0.0..std::f64::consts::TAU)
        .prop_map(move |(s, t)| Complex64::from_polar(r * s.sqrt(), t))
}

fn xi_strategy() -> impl Strategy<Value = Complex64> {
    (0.1f64.ln()..10f64.ln(), 0.0..std::f64::consts::TAU)
        .prop_map(|(lr, t)| Complex64::from_polar(lr.exp(), t))
}

fn zeta_strategy() -> impl Strategy<Value = Complex64> {
    (-10.0..10.0f64, -0.5..0.5f64).prop_map(|(re, im)| Complex64::new(re, im))
}

/// The leaf equation in the section coordinate `w = 1 - xi^-2`.
fn w_rhs(zeta: Complex64, w: Complex64, p: &FoliationParams) -> Complex64 {
    p.eps * w / (1.0 + p.eps * p.a * zeta.sin() / (1.0 - w).sqrt())
}

proptest! {
    #[test]
    fn chart_round_trip(zeta in zeta_strategy(), xi in xi_strategy()) {
        let q = chart_to_ambient(ChartPoint::new(zeta, xi).unwrap()).unwrap();
        let h = q.hamiltonian();
        let target = xi * xi;
        prop_assert!((h - target).norm() <= 1e-14 * target.norm(),
            "H = {h}, xi² = {target}");
    }

    #[test]
    fn xi_equation_matches_w_equation(
        zeta in (0.0..std::f64::consts::TAU).prop_map(|t| Complex64::new(t, 0.0)),
        w in complex_in_disc(0.5),
        a in complex_in_disc(0.2),
        eps in complex_in_disc(0.5),
    ) {
        let p = FoliationParams::new(a, eps).unwrap();
        let xi = (1.0 - w).sqrt().inv();
        let dxi = leaf_rhs(zeta, xi, &p).unwrap();
        // dw/dzeta = 2 xi^-3 dxi/dzeta
        let transported = 2.0 * dxi / (xi * xi * xi);
        let direct = w_rhs(zeta, w, &p);
        prop_assert!((transported - direct).norm() <= 1e-12 * direct.norm().max(1e-300) + 1e-300,
            "{transported} vs {direct}");
    }

    #[test]
    fn section_coordinate_round_trip(u in complex_in_disc(0.95)) {
        let xi = xi_from_section(u).unwrap();
        prop_assert!((section_from_xi(xi) - u).norm() < 1e-13);
        prop_assert!(xi.re > 0.0);
    }

    #[test]
    fn reference_leaf_is_fixed(zeta in zeta_strategy(), a in complex_in_disc(0.5), eps in complex_in_disc(0.5)) {
        let p = FoliationParams::new(a, eps).unwrap();
        prop_assert_eq!(leaf_rhs(zeta, Complex64::new(1.0, 0.0), &p).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rhs_vanishes_towards_critical_leaf(zeta in zeta_strategy(), t in 0.0..std::f64::consts::TAU) {
        let p = FoliationParams::new(Complex64::new(0.05, 0.0), Complex64::new(0.0, 0.5)).unwrap();
        let xi = Complex64::from_polar(1e-6, t);
        let f = leaf_rhs(zeta, xi, &p).unwrap();
        prop_assert!(f.re.is_finite() && f.im.is_finite());
        prop_assert!(f.norm() < 1e-6);
    }

    #[test]
    fn unperturbed_form_is_rotation_invariant(
        z1 in zeta_strategy(), z2 in zeta_strategy(), xi in xi_strategy(), eps in complex_in_disc(0.5),
    ) {
        let p = FoliationParams::new(Complex64::new(0.0, 0.0), eps).unwrap();
        prop_assert_eq!(leaf_rhs(z1, xi, &p).unwrap(), leaf_rhs(z2, xi, &p).unwrap());
    }
}

#[test]
fn rhs_shrinks_linearly_near_critical_leaf() {
    let p = FoliationParams::new(Complex64::new(0.05, 0.0), Complex64::new(0.001, 0.5)).unwrap();
    let zeta = Complex64::new(1.0, 0.0);
    let ratios: Vec<f64> = [1e-4, 1e-5, 1e-6]
        .iter()
        .map(|&r| leaf_rhs(zeta, Complex64::new(r, 0.0), &p).unwrap().norm() / r)
        .collect();
    // f ≈ -eps xi / 2 near xi = 0
    for r in ratios {
        assert!((r - 0.5 * p.eps.norm()).abs() < 1e-6);
    }
}
