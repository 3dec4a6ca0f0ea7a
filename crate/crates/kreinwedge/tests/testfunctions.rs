use std::f64::consts::PI;

use kreinwedge::testfunctions::{
    make_wedge_packet, schwartz_norm, Difference, PoincareElement, Region, SpacetimePoint, WavePacket, WedgePacketParams, C64,
};
use proptest::prelude::*;

fn sample_packet() -> WavePacket {
    WavePacket::modulated(C64::new(0.7, -0.4), SpacetimePoint::new(0.3, -0.2), 0.8, 0.6, SpacetimePoint::new(0.5, 1.1))
        .plus(&WavePacket::gaussian(SpacetimePoint::new(-0.5, 0.4), 0.5, 0.9).scaled(C64::new(0.0, 0.3)))
}

/// Riemann sum of ∫ f(x) e^{ik·x} d²x on a square grid.
fn fourier_by_grid(f: &WavePacket, k: SpacetimePoint) -> C64 {
    let h = 0.025;
    let mut acc = C64::new(0.0, 0.0);
    for i in -240..=240 {
        for j in -240..=240 {
            let x = SpacetimePoint::new(i as f64 * h, j as f64 * h);
            acc += f.value(x) * C64::new(0.0, k.dot(&x)).exp() * h * h;
        }
    }
    acc
}

#[test]
fn fourier_matches_grid_quadrature() {
    let f = sample_packet();
    for k in [SpacetimePoint::ORIGIN, SpacetimePoint::new(1.2, -0.4), SpacetimePoint::new(-0.6, 2.0)] {
        let exact = f.fourier_at(k);
        let grid = fourier_by_grid(&f, k);
        assert!((exact - grid).norm() < 1e-8, "k = {k:?}: {exact} vs {grid}");
        assert!((f.fourier().value(k) - exact).norm() < 1e-12);
    }
}

#[test]
fn shell_value_is_fourier_on_the_shell() {
    let f = sample_packet();
    for (m, sign, th) in [(1.0, 1.0, 0.3), (2.0, -1.0, -1.1), (0.5, 1.0, 2.0)] {
        let k = SpacetimePoint::new(sign * m * f64::cosh(th), sign * m * f64::sinh(th));
        assert!((f.shell_value(m, sign, th) - f.fourier_at(k)).norm() < 1e-13);
        let r = f.restrict_to_shell(m, sign).unwrap();
        assert!((r.value(th) - f.fourier_at(k)).norm() < 1e-13);
    }
}

#[test]
fn shell_restriction_rejects_bad_mass() {
    assert!(sample_packet().restrict_to_shell(0.0, 1.0).is_err());
    assert!(sample_packet().restrict_to_shell(f64::NAN, 1.0).is_err());
}

#[test]
fn l2_norm_of_gaussian() {
    let f = WavePacket::gaussian(SpacetimePoint::ORIGIN, 0.7, 1.3);
    assert!((f.l2_norm2() - PI * 0.7 * 1.3 / 2.0).abs() < 1e-14);
}

#[test]
fn schwartz_norm_of_unit_gaussian() {
    let f = WavePacket::gaussian(SpacetimePoint::ORIGIN, 1.0, 1.0);
    let n = schwartz_norm(&f, 0, 0).unwrap();
    assert!((n - 1.0).abs() < 1e-6, "{n}");
    // A weighted norm is at least the plain sup.
    assert!(schwartz_norm(&f, 1, 2).unwrap() >= n);
}

#[test]
fn schwartz_norm_of_difference_of_equal_functions_is_zero() {
    let f = sample_packet();
    assert_eq!(schwartz_norm(&Difference(&f, &f), 1, 1).unwrap(), 0.0);
}

#[test]
fn wedge_tail_decreases_with_depth() {
    let mut last = f64::INFINITY;
    for r in [0.5, 1.0, 1.5, 2.0] {
        let p = WavePacket::gaussian(SpacetimePoint::new(0.0, r), 0.3, 0.3);
        let tail = p.tail_fraction(Region::RightWedge);
        assert!(tail > 0.0 && tail < last, "r = {r}: {tail}");
        last = tail;
        // The mirror image sits in the left wedge with the same tail.
        assert!((p.theta().tail_fraction(Region::LeftWedge) - tail).abs() <= 1e-15 * tail.max(1e-300));
    }
}

#[test]
fn everywhere_has_no_tail() {
    assert_eq!(sample_packet().tail_fraction(Region::Everywhere), 0.0);
}

#[test]
fn wedge_packet_meets_its_tail_bound() {
    let params = WedgePacketParams::right(SpacetimePoint::new(0.0, 1.2), 0.15);
    let (p, tag) = make_wedge_packet(&params).unwrap();
    assert_eq!(tag.region, Region::RightWedge);
    assert!(p.tail_fraction(Region::RightWedge) <= tag.tail_bound);
}

#[test]
fn regions_and_reflection() {
    let x = SpacetimePoint::new(0.2, 1.0);
    assert!(Region::RightWedge.contains(x));
    assert!(!Region::LeftWedge.contains(x));
    assert!(Region::LeftWedge.contains(PoincareElement::theta01().apply(x)));
    assert_eq!(Region::RightWedge.reflected(), Region::LeftWedge);
    assert_eq!(Region::Everywhere.reflected(), Region::Everywhere);
}

#[test]
fn invalid_width_is_rejected() {
    assert!(WavePacket::gaussian(SpacetimePoint::ORIGIN, 0.0, 1.0).validate().is_err());
    assert!(WavePacket::gaussian(SpacetimePoint::ORIGIN, 1.0, f64::NAN).validate().is_err());
}

fn point() -> impl Strategy<Value = SpacetimePoint> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| SpacetimePoint::new(a, b))
}

fn poincare() -> impl Strategy<Value = PoincareElement> {
    (-1.5..1.5f64, point(), any::<bool>()).prop_map(|(t, a, th)| {
        let g = PoincareElement { rapidity: t, translation: a, ..PoincareElement::identity() };
        if th {
            g.compose(&PoincareElement::theta01())
        } else {
            g
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boost_preserves_minkowski_product(x in point(), y in point(), t in -3.0..3.0f64) {
        let d = x.boosted(t).dot(&y.boosted(t)) - x.dot(&y);
        prop_assert!(d.abs() < 1e-9 * (1.0 + x.euclid_norm2() + y.euclid_norm2()) * f64::cosh(2.0 * t));
    }

    #[test]
    fn action_is_pullback(g in poincare(), x in point()) {
        let f = sample_packet();
        let moved = f.act(&g);
        let inner = g.inverse().apply(x);
        let expected = if g.is_antilinear() { f.value(inner).conj() } else { f.value(inner) };
        prop_assert!((moved.value(x) - expected).norm() < 1e-12);
    }

    #[test]
    fn composition_is_a_group_law(g in poincare(), h in poincare(), x in point()) {
        let lhs = g.compose(&h).apply(x);
        let rhs = g.apply(h.apply(x));
        prop_assert!((lhs - rhs).euclid_norm2().sqrt() < 1e-12 * (1.0 + x.euclid_norm2().sqrt()) * 10.0);
        let id = g.compose(&g.inverse()).apply(x);
        prop_assert!((id - x).euclid_norm2().sqrt() < 1e-11);
    }

    #[test]
    fn theta_is_an_involution(x in point()) {
        let f = sample_packet();
        prop_assert!((f.theta().theta().value(x) - f.value(x)).norm() < 1e-15);
    }

    #[test]
    fn boosts_compose(s in -1.0..1.0f64, t in -1.0..1.0f64, x in point()) {
        let f = sample_packet();
        let a = f.boosted(s).boosted(t).value(x);
        let b = f.boosted(s + t).value(x);
        prop_assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn fourier_of_translate_is_a_phase(a in point(), k in point()) {
        let f = sample_packet();
        let lhs = f.translated(a).fourier_at(k);
        let rhs = f.fourier_at(k) * C64::new(0.0, k.dot(&a)).exp();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }
}
