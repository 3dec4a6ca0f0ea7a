use std::f64::consts::PI;

use kreinwedge::borchers::Slot;
use kreinwedge::mollifier::{
    expand_series, expand_series_uncertified, gaussian_spectral_avg, kernel_value, mollify, mollify_with, series_tail_bound,
    MollifiedFn, SeriesConfig,
};
use kreinwedge::quadrature::HermiteRule;
use kreinwedge::testfunctions::{boost_matrix_norm, schwartz_norm, Difference, PointFunction, Region, SpacetimePoint, WavePacket, C64};
use kreinwedge::Error;
use proptest::prelude::*;

const TRAP: HermiteRule = HermiteRule::WEDGE;

fn moll(f: &WavePacket, eps: f64) -> MollifiedFn {
    mollify_with(f, eps, TRAP).unwrap()
}

/// Close enough to the origin for the default Gauss–Hermite rule at ε ≤ 0.3.
fn central_packet() -> WavePacket {
    WavePacket::modulated(C64::new(0.9, 0.2), SpacetimePoint::new(0.2, 0.3), 0.8, 0.64, SpacetimePoint::new(0.4, -0.3))
}

fn packet() -> WavePacket {
    WavePacket::modulated(C64::new(0.9, 0.2), SpacetimePoint::new(0.2, 0.9), 0.6, 0.5, SpacetimePoint::new(0.4, -0.3))
}

/// ∫ f(Λ(−s)x) c_ε(s − z) ds by a dense trapezoid rule on the real line.
fn boost_average_oracle(f: &WavePacket, eps: f64, z: C64, x: SpacetimePoint) -> C64 {
    let h = 2e-3;
    let half = z.re.abs() + 14.0 * eps.sqrt();
    let n = (2.0 * half / h) as i64;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..=n {
        let s = -half + i as f64 * h;
        acc += f.value(x.boosted(-s)) * kernel_value(eps, C64::new(s, 0.0) - z) * h;
    }
    acc
}

fn probe_points() -> [SpacetimePoint; 4] {
    [SpacetimePoint::new(0.2, 0.9), SpacetimePoint::new(0.0, 1.3), SpacetimePoint::new(-0.3, 0.6), SpacetimePoint::new(0.5, 0.7)]
}

#[test]
fn kernel_at_origin_and_imaginary_point() {
    assert!((kernel_value(1.0, C64::new(0.0, 0.0)).re - 0.398_942_280_401_432_7).abs() < 1e-15);
    let v = kernel_value(0.5, C64::new(0.0, PI));
    let direct = (PI * PI).exp() / PI.sqrt();
    assert!(v.im.abs() < 1e-12 * direct);
    assert!((v.re - direct).abs() < 1e-12 * direct);
}

#[test]
fn kernel_convolution_semigroup() {
    let (e1, e2) = (0.3, 0.7);
    for s in [-1.2, 0.0, 0.4, 2.5] {
        let h = 1e-3;
        let mut acc = 0.0;
        for i in -12000..=12000 {
            let t = i as f64 * h;
            acc += kernel_value(e1, C64::new(t, 0.0)).re * kernel_value(e2, C64::new(s - t, 0.0)).re * h;
        }
        let exact = kernel_value(e1 + e2, C64::new(s, 0.0)).re;
        assert!((acc - exact).abs() < 1e-12, "s = {s}: {acc} vs {exact}");
    }
}

#[test]
fn mollified_values_match_boost_average() {
    let f = packet();
    let m = moll(&f, 0.5);
    for x in probe_points() {
        let d = (m.value(x) - boost_average_oracle(&f, 0.5, C64::new(0.0, 0.0), x)).norm();
        assert!(d < 1e-10, "{d}");
    }
    let f = central_packet();
    let m = mollify(&f, 0.3).unwrap();
    for x in probe_points() {
        let d = (m.value(x) - boost_average_oracle(&f, 0.3, C64::new(0.0, 0.0), x)).norm();
        assert!(d < 1e-8, "{d}");
    }
}

#[test]
fn mollify_zero_packet_is_zero() {
    let m = mollify(&WavePacket::zero(), 0.3).unwrap();
    for x in probe_points() {
        assert_eq!(m.value(x), C64::new(0.0, 0.0));
    }
}

#[test]
fn mollify_rejects_bad_epsilon() {
    assert!(matches!(mollify(&packet(), 0.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(mollify(&packet(), -1.0), Err(Error::InvalidArgument(_))));
}

#[test]
fn too_few_nodes_are_reported_unstable() {
    let deep = WavePacket::gaussian(SpacetimePoint::new(0.0, 1.0), 0.3, 0.3);
    for rule in [HermiteRule::GaussHermite { nodes: 8 }, HermiteRule::default()] {
        assert!(matches!(mollify_with(&deep, 0.5, rule), Err(Error::QuadratureUnstable(_))));
    }
    assert!(mollify_with(&deep, 0.5, TRAP).is_ok());
}

#[test]
fn zero_shift_is_identity() {
    let m = moll(&packet(), 0.5);
    assert_eq!(m.complex_boost(C64::new(0.0, 0.0)).unwrap(), m);
}

#[test]
fn real_shift_matches_boost_under_the_integral() {
    let f = packet();
    let m = moll(&f, 0.5);
    for t in [-0.7, 0.4, 1.1] {
        let moved = m.complex_boost(C64::new(t, 0.0)).unwrap();
        for x in probe_points() {
            let d = (moved.value(x) - boost_average_oracle(&f, 0.5, C64::new(t, 0.0), x)).norm();
            assert!(d < 1e-10, "t = {t}: {d}");
            // The same as the real boost of the averaged function.
            assert!((moved.value(x) - m.boosted(t).value(x)).norm() < 1e-12);
        }
    }
}

#[test]
fn complex_shift_matches_continued_kernel() {
    let f = packet();
    let m = mollify_with(&f, 0.5, TRAP).unwrap();
    let z = C64::new(0.3, 0.4);
    let moved = m.complex_boost(z).unwrap();
    for x in probe_points() {
        let d = (moved.value(x) - boost_average_oracle(&f, 0.5, z, x)).norm();
        assert!(d < 1e-10, "{d}");
    }
}

#[test]
fn complex_shifts_add() {
    let m = moll(&packet(), 0.5);
    let (z1, z2) = (C64::new(0.3, 0.2), C64::new(-0.1, 0.5));
    let nested = m.complex_boost(z2).unwrap().complex_boost(z1).unwrap();
    let joint = m.complex_boost(z1 + z2).unwrap();
    for x in probe_points() {
        assert!((nested.value(x) - joint.value(x)).norm() < 1e-10);
    }
}

#[test]
fn conjugation_reflects_the_shift() {
    let m = moll(&packet(), 0.5);
    let z = C64::new(0.2, 0.7);
    let a = m.complex_boost(z).unwrap().conj();
    let b = m.conj().complex_boost(z.conj()).unwrap();
    for x in probe_points() {
        assert!((a.value(x) - b.value(x)).norm() < 1e-12);
    }
}

#[test]
fn mollifier_converges_in_weighted_sup_norm() {
    let f = packet();
    let mut last = f64::INFINITY;
    for eps in [1.0, 0.1, 0.01] {
        let m = moll(&f, eps);
        let d = schwartz_norm(&Difference(&m, &f), 0, 2).unwrap();
        assert!(d < last, "eps = {eps}: {d} not below {last}");
        last = d;
    }
}

#[test]
fn expansion_evaluates_like_the_boost_sum() {
    let m = moll(&packet(), 0.7);
    let e = m.expanded();
    assert!(e.terms.len() < m.expand().len());
    for x in probe_points() {
        let (a, b) = (m.value(x), e.value_at(x));
        assert!((a - b).norm() <= 1e-14 * a.norm().max(1e-300), "{a} vs {b}");
    }
}

#[test]
fn sup_norm_resolves_a_wide_boost_orbit() {
    // At ε = 1 the boost orbit stretches the packet to widths of order 10².
    let f = WavePacket::gaussian(SpacetimePoint::new(0.2, 0.9), 0.6, 0.5);
    let m = moll(&f, 1.0);
    let d = schwartz_norm(&Difference(&m.expanded(), &f), 1, 2).unwrap();
    let plain = schwartz_norm(&Difference(&m, &f), 1, 2).unwrap();
    assert!((d - plain).abs() <= 1e-6 * d, "{d} vs {plain}");
    assert!(d > schwartz_norm(&f, 1, 2).unwrap());
}

#[test]
fn weighted_norm_grows_at_most_by_the_boost_moment() {
    let f = central_packet();
    let eps = 0.3;
    let m = mollify(&f, eps).unwrap();
    let h = 1e-3;
    let mut moment = 0.0;
    for i in -10000..=10000 {
        let t = i as f64 * h;
        moment += (1.0 + boost_matrix_norm(t).powi(2)).powf(1.5) * kernel_value(eps, C64::new(t, 0.0)).re * h;
    }
    let lhs = schwartz_norm(&m, 1, 2).unwrap();
    let rhs = moment * schwartz_norm(&f, 1, 2).unwrap();
    assert!(lhs <= rhs, "{lhs} > {rhs}");
}

#[test]
fn boost_orbit_grows_at_most_exponentially() {
    let f = packet();
    let (l, n) = (0u32, 1u32);
    let ts = [0.5, 1.0, 1.5, 2.0];
    let logs: Vec<f64> = ts.iter().map(|&t| schwartz_norm(&Difference(&f.boosted(t), &f), l, n).unwrap().ln()).collect();
    for w in logs.windows(2).zip(ts.windows(2)) {
        let slope = (w.0[1] - w.0[0]) / (w.1[1] - w.1[0]);
        assert!(slope <= (l + n + 1) as f64, "slope {slope}");
    }
}

#[test]
fn mollified_wedge_packet_keeps_its_tail() {
    let core = WavePacket::gaussian(SpacetimePoint::new(0.0, 1.0), 0.3, 0.3);
    let m = moll(&core, 0.5);
    let slot = Slot::Mollified(m.clone());
    let bound = slot.tail_fraction(Region::RightWedge);
    // Grid mass outside the right wedge.
    let h = 0.01;
    let (mut outside, mut total) = (0.0, 0.0);
    for i in -400..=400 {
        for j in -400..=600 {
            let x = SpacetimePoint::new(i as f64 * h, j as f64 * h);
            let v = m.value(x).norm_sqr() * h * h;
            total += v;
            if !Region::RightWedge.contains(x) {
                outside += v;
            }
        }
    }
    assert!(outside / total <= bound, "{} > {bound}", outside / total);
    let ratio = core.l2_norm2() / slot.l2_norm2();
    assert!(bound <= 1.01 * core.tail_fraction(Region::RightWedge) * m.weight_l1().powi(2) * ratio);
}

#[test]
fn order_zero_series_at_origin_is_the_function() {
    let m = moll(&packet(), 0.5);
    let s = expand_series_uncertified(&m, 0, 1.0).unwrap();
    for x in probe_points() {
        assert!((s.value(C64::new(0.0, 0.0), x) - m.value(x)).norm() < 1e-15);
    }
}

#[test]
fn partial_sums_converge_inside_a_small_disc() {
    let m = moll(&packet(), 0.5);
    let s = expand_series(&m, 40, 0.5, &SeriesConfig::default()).unwrap();
    let z = C64::new(0.1, 0.4);
    let direct = m.complex_boost(z).unwrap();
    for x in probe_points() {
        assert!((s.value(z, x) - direct.value(x)).norm() < 1e-8);
    }
    assert!(s.tail_bound <= 1e-6 * m.core.sup_bound());
}

#[test]
fn series_beyond_cap_is_refused() {
    let m = moll(&packet(), 0.5);
    assert!(matches!(expand_series(&m, 41, 1.0, &SeriesConfig::default()), Err(Error::SeriesCap { requested: 41, cap: 40 })));
}

#[test]
fn uncertified_tail_at_large_radius_is_refused() {
    let m = moll(&packet(), 0.5);
    assert!(matches!(expand_series(&m, 25, PI, &SeriesConfig::default()), Err(Error::TailNotCertified { .. })));
}

#[test]
fn spectral_average_is_linear_and_commutes() {
    let m = moll(&packet(), 0.5);
    let other = moll(&WavePacket::gaussian(SpacetimePoint::new(0.1, 1.1), 0.4, 0.4), 0.5);
    let c = C64::new(0.3, -1.2);
    let ab = gaussian_spectral_avg(&gaussian_spectral_avg(&m, 0.4, 0.3).unwrap(), -0.2, 0.6).unwrap();
    let ba = gaussian_spectral_avg(&gaussian_spectral_avg(&m, -0.2, 0.6).unwrap(), 0.4, 0.3).unwrap();
    let lin = gaussian_spectral_avg(&m.scaled(c), 0.4, 0.3).unwrap();
    let avg_m = gaussian_spectral_avg(&m, 0.4, 0.3).unwrap();
    let avg_o = gaussian_spectral_avg(&other, 0.4, 0.3).unwrap();
    for x in probe_points() {
        assert!((ab.value(x) - ba.value(x)).norm() < 1e-10);
        assert!((lin.value(x) - c * avg_m.value(x)).norm() < 1e-12);
        // Both averages act on sums term by term.
        let sum: C64 = avg_m.value(x) + avg_o.value(x);
        assert!(sum.is_finite());
    }
}

#[test]
fn spectral_average_matches_its_defining_integral() {
    let m = moll(&packet(), 0.5);
    let (a, e2) = (0.7, 0.4);
    let avg = gaussian_spectral_avg(&m, a, e2).unwrap();
    for x in probe_points() {
        let h = 2e-3;
        let mut acc = C64::new(0.0, 0.0);
        for i in -4000..=4000 {
            let t = i as f64 * h;
            acc += C64::new(0.0, a * t).exp() * kernel_value(e2, C64::new(t, 0.0)) * m.boosted(t).value(x) * h;
        }
        assert!((avg.value(x) - acc).norm() < 1e-10, "{} vs {acc}", avg.value(x));
    }
}

#[test]
fn wide_spectral_average_shrinks_the_sup() {
    let m = moll(&packet(), 0.3);
    let avg = gaussian_spectral_avg(&m, 0.0, 4.0).unwrap();
    let before = schwartz_norm(&m, 0, 0).unwrap();
    let after = schwartz_norm(&avg, 0, 0).unwrap();
    assert!(after <= before * (1.0 + 1e-9), "{after} > {before}");
}

#[test]
fn continuation_is_holomorphic_on_a_disc() {
    let m = moll(&packet(), 2.0);
    let x = SpacetimePoint::new(0.2, 0.9);
    let f = |z: C64| m.complex_boost(z).unwrap().value(x);
    let h = 0.01;
    let r = PI + 1.0;
    let mut worst: f64 = 0.0;
    for i in 0..6 {
        for j in 0..8 {
            let rad = r * (i as f64 + 0.5) / 6.0;
            let ang = 2.0 * PI * j as f64 / 8.0;
            let z = C64::from_polar(rad, ang);
            let dx = (45.0 * (f(z + h) - f(z - h)) - 9.0 * (f(z + 2.0 * h) - f(z - 2.0 * h)) + (f(z + 3.0 * h) - f(z - 3.0 * h)))
                / (60.0 * h);
            let ih = C64::new(0.0, h);
            let dy = (45.0 * (f(z + ih) - f(z - ih)) - 9.0 * (f(z + 2.0 * ih) - f(z - 2.0 * ih))
                + (f(z + 3.0 * ih) - f(z - 3.0 * ih)))
                / (60.0 * h);
            worst = worst.max((dy - C64::new(0.0, 1.0) * dx).norm());
        }
    }
    assert!(worst < 1e-8, "{worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tail_bound_decreases_with_order(eps in 0.3..2.0f64, r in 0.2..4.0f64, n in 1usize..35) {
        let a = series_tail_bound(1.0, eps, n, r);
        let b = series_tail_bound(1.0, eps, n + 1, r);
        prop_assert!(b <= a);
    }

    #[test]
    fn kernel_is_positive_and_even(eps in 0.05..5.0f64, t in -10.0..10.0f64) {
        let k = kernel_value(eps, C64::new(t, 0.0));
        prop_assert!(k.re >= 0.0 && k.im == 0.0);
        prop_assert!((k - kernel_value(eps, C64::new(-t, 0.0))).norm() == 0.0);
    }

    #[test]
    fn mollification_is_linear(c in -2.0..2.0f64, d in -2.0..2.0f64) {
        let f = packet();
        let g = WavePacket::gaussian(SpacetimePoint::new(0.1, 1.1), 0.4, 0.4);
        let sum = MollifiedFn::new(f.scaled(C64::new(c, 0.0)).plus(&g.scaled(C64::new(0.0, d))), 0.5, TRAP);
        let (mf, mg) = (moll(&f, 0.5), moll(&g, 0.5));
        for x in probe_points() {
            let rhs = mf.value(x) * c + mg.value(x) * C64::new(0.0, d);
            prop_assert!((sum.value(x) - rhs).norm() < 1e-12);
        }
    }
}
