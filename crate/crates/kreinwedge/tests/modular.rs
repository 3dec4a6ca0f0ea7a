use std::f64::consts::PI;

use kreinwedge::borchers::BorchersElement;
use kreinwedge::modular::{
    additivity_defect, adjoint_defect, bw_defect, complex_transport, covariance_defects, density_curve, generator_element, generator_fd_defect,
    generator_symmetry_defect, kms_defect, series_direct_defect, standard_kms, tomita_basis, tomita_check, AnalyticVector, ModularSettings,
    TomitaConfig, TransportMethod, TrendReport, WedgeCorrelator,
};
use kreinwedge::mollifier::{mollify_with, SeriesConfig};
use kreinwedge::quadrature::HermiteRule;
use kreinwedge::states::{MassShellDensity, QuasiFreeState};
use kreinwedge::testfunctions::{PoincareElement, Region, SpacetimePoint, WavePacket, C64};
use kreinwedge::Error;
use proptest::prelude::*;

fn free() -> QuasiFreeState {
    QuasiFreeState::new(MassShellDensity::free_field(1.0).unwrap())
}

fn ghost() -> QuasiFreeState {
    QuasiFreeState::new(MassShellDensity::ghost_pair())
}

fn right_packet() -> WavePacket {
    WavePacket::modulated(C64::new(1.0, 0.0), SpacetimePoint::new(0.05, 1.0), 0.2, 0.18, SpacetimePoint::new(0.4, 0.1))
}

fn other_packet() -> WavePacket {
    WavePacket::gaussian(SpacetimePoint::new(-0.05, 1.2), 0.18, 0.22)
}

fn wedge(p: &WavePacket, eps: f64) -> BorchersElement {
    BorchersElement::from_slot(mollify_with(p, eps, HermiteRule::WEDGE).unwrap()).localized(Region::RightWedge)
}

fn psi(p: &WavePacket, eps: f64) -> AnalyticVector {
    AnalyticVector::new(wedge(p, eps)).unwrap()
}

#[test]
fn zeroth_generator_power_is_the_vector() {
    let v = psi(&right_packet(), 0.5);
    assert_eq!(generator_element(&v, 0, &SeriesConfig::default()).unwrap().components, v.element.components);
}

#[test]
fn generator_powers_beyond_the_cap_are_refused() {
    let v = psi(&right_packet(), 0.5);
    assert!(matches!(generator_element(&v, 41, &SeriesConfig::default()), Err(Error::SeriesCap { requested: 41, cap: 40 })));
}

#[test]
fn generator_matches_boost_difference_quotient() {
    let abs = free();
    let d = generator_fd_defect(&abs, &psi(&right_packet(), 0.5), 1e-3).unwrap();
    assert!(d < 1e-6, "{d}");
}

#[test]
fn generator_is_eta_symmetric() {
    for s in [free(), ghost()] {
        let abs = s.absolute();
        let d = generator_symmetry_defect(&s, &abs, &psi(&right_packet(), 0.5), &psi(&other_packet(), 0.5)).unwrap();
        assert!(d < 1e-9, "{d}");
    }
}

#[test]
fn complex_boost_adjoint_is_the_reflected_boost() {
    for s in [free(), ghost()] {
        let abs = s.absolute();
        let d = adjoint_defect(&s, &abs, &psi(&right_packet(), 0.5), &psi(&other_packet(), 0.5), C64::new(0.3, 0.5)).unwrap();
        assert!(d < 1e-8, "{d}");
    }
}

#[test]
fn transport_by_zero_is_the_identity() {
    let v = psi(&right_packet(), 0.5);
    let t = complex_transport(&v, C64::new(0.0, 0.0), TransportMethod::Direct, &SeriesConfig::default()).unwrap();
    assert_eq!(t.element, v.element);
    assert_eq!(t.tail_bound, 0.0);
}

#[test]
fn series_agrees_with_direct_on_a_small_disc() {
    let abs = free();
    let v = psi(&right_packet(), 0.5);
    for z in [C64::new(0.3, 0.2), C64::new(-0.2, 0.4), C64::new(0.0, -0.5)] {
        let d = series_direct_defect(&abs, &v, z, 30).unwrap();
        assert!(d < 1e-6, "z = {z}: {d}");
    }
}

#[test]
fn complex_boosts_add() {
    let abs = ghost().absolute();
    let v = psi(&right_packet(), 0.5);
    let d = additivity_defect(&abs, &v, C64::new(0.4, 1.2), C64::new(-0.3, 1.5)).unwrap();
    assert!(d < 1e-8, "{d}");
}

#[test]
fn series_transport_errors() {
    let v = psi(&right_packet(), 0.5);
    let cfg = SeriesConfig::default();
    assert!(matches!(
        complex_transport(&v, C64::new(0.0, PI), TransportMethod::Series { order: 41 }, &cfg),
        Err(Error::SeriesCap { requested: 41, cap: 40 })
    ));
    assert!(matches!(
        complex_transport(&v, C64::new(0.0, PI), TransportMethod::Series { order: 25 }, &cfg),
        Err(Error::TailNotCertified { .. })
    ));
}

#[test]
fn non_analytic_elements_are_refused() {
    let plain = BorchersElement::from_slot(right_packet()).localized(Region::RightWedge);
    assert!(matches!(AnalyticVector::new(plain.clone()), Err(Error::NotAnalytic(_))));
    let moved = wedge(&right_packet(), 0.5).complex_boost(C64::new(0.0, 0.3)).unwrap();
    assert!(matches!(AnalyticVector::new(moved), Err(Error::NotAnalytic(_))));
    let untagged = BorchersElement::from_slot(mollify_with(&right_packet(), 0.5, HermiteRule::WEDGE).unwrap());
    assert!(WedgeCorrelator::new(free(), untagged, wedge(&other_packet(), 0.5)).is_err());
}

#[test]
fn correlator_on_the_real_line_is_the_real_boost() {
    for s in [free(), ghost()] {
        let (f, g) = (wedge(&right_packet(), 1.0), wedge(&other_packet(), 1.0));
        let fg = WedgeCorrelator::new(s.clone(), f.clone(), g.clone()).unwrap();
        let scale = fg.real_scale(&[-1.0, 0.0, 1.0]).unwrap();
        for t in [-0.8, 0.3, 1.1] {
            let direct = s.evaluate(&f.tensor(&g.act(&PoincareElement::boost(t))).unwrap()).unwrap();
            let d = (fg.value(C64::new(t, 0.0)).unwrap() - direct).norm();
            assert!(d < 1e-10 * scale, "t = {t}: {d}");
        }
    }
}

#[test]
fn correlator_is_holomorphic_in_the_strip() {
    let fg = WedgeCorrelator::new(free(), wedge(&right_packet(), 1.0), wedge(&other_packet(), 1.0)).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        for j in 0..4 {
            let z = C64::new(-1.0 + 0.5 * i as f64, 0.6 + 1.6 * j as f64);
            worst = worst.max(fg.cr_residual(z, 0.1).unwrap());
        }
    }
    assert!(worst < 1e-7, "{worst}");
}

#[test]
fn kms_relation_holds_on_the_right_wedge() {
    let fg = WedgeCorrelator::new(ghost(), wedge(&right_packet(), 1.0), wedge(&other_packet(), 1.0)).unwrap();
    let r = kms_defect(&fg, &[-1.0, 0.0, 1.0]).unwrap();
    assert!(r.scale > 0.0 && r.defect < 1e-5, "{}", r.defect);
}

#[test]
fn kms_fails_for_a_left_wedge_partner() {
    let settings = ModularSettings { control: true, ..ModularSettings::default() };
    let r = standard_kms(&free(), &settings).unwrap();
    assert!(r.defect > 1e-2, "{}", r.defect);
}

#[test]
fn bw_with_unit_partner_is_exact() {
    let f = BorchersElement::unit().plus(&wedge(&right_packet(), 0.5)).localized(Region::RightWedge);
    let fg = WedgeCorrelator::new(ghost(), f.clone(), BorchersElement::unit()).unwrap();
    let r = bw_defect(&fg, &[0.0]).unwrap();
    assert_eq!(r.defect, 0.0);
    assert_eq!(r.continued, ghost().evaluate(&f).unwrap());
}

#[test]
fn bw_relation_holds_for_both_models() {
    for s in [free(), ghost()] {
        let fg = WedgeCorrelator::new(s, wedge(&right_packet(), 0.5), wedge(&other_packet(), 0.5)).unwrap();
        let r = bw_defect(&fg, &[-1.0, 0.0, 1.0]).unwrap();
        assert!(r.defect < 1e-5, "{}", r.defect);
    }
}

#[test]
fn modular_identity_on_the_vacuum() {
    let unit = AnalyticVector::new(BorchersElement::unit()).unwrap();
    let r = tomita_check(&ghost(), &[unit], 1, &TomitaConfig::default()).unwrap();
    assert!(r.defect < 1e-8, "{}", r.defect);
}

#[test]
fn modular_identity_on_a_wedge_packet() {
    for s in [free(), ghost()] {
        let r = tomita_check(&s, &[psi(&right_packet(), 0.5)], 1, &TomitaConfig::default()).unwrap();
        assert!(r.defect < 1e-4, "{}", r.defect);
        assert!(r.budget_covers(), "{:?}", r.samples);
    }
}

#[test]
fn tomita_basis_is_small_and_unit_led() {
    let b = tomita_basis(&wedge(&right_packet(), 0.5));
    assert_eq!(b.elements[0], BorchersElement::unit());
    assert!(b.len() >= 3 && b.len() <= 5);
}

#[test]
fn conjugation_flips_the_wedge_tag() {
    let right = vec![wedge(&right_packet(), 0.5), wedge(&other_packet(), 0.5)];
    let (flip, flipped, boost) = covariance_defects(&right, &[-1.0, 1.0]);
    assert!(flipped);
    assert!(flip <= 1e-12 && boost <= 1e-12, "{flip} {boost}");
}

#[test]
fn mollified_vectors_approach_the_packet() {
    let curve = density_curve(&free(), &right_packet(), &[1.0, 0.3, 0.1, 0.03], HermiteRule::WEDGE).unwrap();
    for w in curve.windows(2) {
        assert!(w[1].defect < w[0].defect, "{curve:?}");
    }
}

#[test]
fn trend_factor_is_checked_per_entry() {
    let t = TrendReport { coarse: [4.0, 4.0, 4.0], standard: [1.0, 1.0, 3.0], ratios: [4.0, 4.0, 4.0 / 3.0] };
    assert!(!t.passes(2.0));
    assert!(t.passes(1.2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn real_boosts_move_between_slots(t in -1.0..1.0f64) {
        let s = ghost();
        let (f, g) = (wedge(&right_packet(), 1.0), wedge(&other_packet(), 1.0));
        let a = s.evaluate_scaled(&f.tensor(&g.act(&PoincareElement::boost(t))).unwrap()).unwrap();
        let b = s.evaluate_scaled(&f.act(&PoincareElement::boost(-t)).tensor(&g).unwrap()).unwrap();
        prop_assert!((a.value - b.value).norm() < 1e-10 * a.scale);
    }
}
