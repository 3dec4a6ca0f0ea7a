use std::f64::consts::PI;

use kreinwedge::borchers::{BorchersElement, Slot};
use kreinwedge::states::axioms::calibrate_majorant;
use kreinwedge::states::sampling::{random_element, random_poincare, rng};
use kreinwedge::states::{check_axioms, AxiomSettings, MassShellDensity, QuasiFreeState, Shell};
use kreinwedge::testfunctions::{SpacetimePoint, WavePacket, C64};
use kreinwedge::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn free() -> QuasiFreeState {
    QuasiFreeState::new(MassShellDensity::free_field(1.0).unwrap())
}

fn ghost() -> QuasiFreeState {
    QuasiFreeState::new(MassShellDensity::ghost_pair())
}

/// Σ w/(4π) ∫ f̂(−k) ĝ(k) dθ by a plain trapezoid rule on a wide interval.
fn two_point_oracle(density: &MassShellDensity, f: &WavePacket, g: &WavePacket) -> C64 {
    let h = 2e-3;
    let mut acc = C64::new(0.0, 0.0);
    for s in &density.shells {
        for i in -6000..=6000 {
            let th = i as f64 * h;
            let k = SpacetimePoint::new(s.mass * th.cosh(), s.mass * th.sinh());
            acc += s.weight / (4.0 * PI) * f.fourier_at(k.scale(-1.0)) * g.fourier_at(k) * h;
        }
    }
    acc
}

fn packets() -> Vec<WavePacket> {
    vec![
        WavePacket::gaussian(SpacetimePoint::ORIGIN, 0.5, 0.5),
        WavePacket::modulated(C64::new(0.4, 0.8), SpacetimePoint::new(0.3, -0.4), 0.7, 0.5, SpacetimePoint::new(0.6, -0.2)),
        WavePacket::modulated(C64::new(1.0, -0.3), SpacetimePoint::new(-0.5, 0.2), 0.6, 0.9, SpacetimePoint::new(-1.5, 0.4)),
    ]
}

#[test]
fn two_point_matches_direct_rapidity_integral() {
    for state in [free(), ghost()] {
        let ps = packets();
        for f in &ps {
            for g in &ps {
                let w = state.two_point(&Slot::Packet(f.clone()), &Slot::Packet(g.clone())).unwrap();
                let o = two_point_oracle(&state.density, f, g);
                assert!((w - o).norm() < 1e-10 * (1.0 + o.norm()), "{w} vs {o}");
            }
        }
    }
}

#[test]
fn unit_gaussian_two_point_in_closed_form() {
    // In light-cone coordinates d²x = du dv/2, so a unit Gaussian of width w
    // has f̂ = π w² e^{−w² m² cosh 2θ / 4} on the mass shell.
    let w = 0.5;
    let f = WavePacket::gaussian(SpacetimePoint::ORIGIN, w, w);
    let state = free();
    let v = state.two_point(&Slot::Packet(f.clone()), &Slot::Packet(f)).unwrap();
    let h = 1e-3;
    let mut exact = 0.0;
    for i in -20000..=20000 {
        let th = i as f64 * h;
        let amp = PI * w * w * (-(w * w) * (2.0 * th).cosh() / 4.0).exp();
        exact += amp * amp / (4.0 * PI) * h;
    }
    assert!((v.re - exact).abs() < 1e-10 * exact && v.im.abs() < 1e-12, "{v} vs {exact}");
}

#[test]
fn massless_and_empty_densities_are_rejected() {
    assert!(matches!(MassShellDensity::free_field(0.0), Err(Error::NoMassGap)));
    assert!(MassShellDensity::new(vec![]).is_err());
    assert!(MassShellDensity::new(vec![Shell { mass: 1.0, weight: 0.0 }]).is_err());
}

#[test]
fn unit_evaluates_to_one_and_odd_degrees_to_zero() {
    for s in [free(), ghost()] {
        assert_eq!(s.evaluate(&BorchersElement::unit()).unwrap(), C64::new(1.0, 0.0));
        let f = BorchersElement::from_slot(packets()[1].clone());
        assert_eq!(s.evaluate(&f).unwrap(), C64::new(0.0, 0.0));
    }
}

fn one_particle_gram(state: &QuasiFreeState, ps: &[WavePacket]) -> DMatrix<C64> {
    let k = ps.len();
    DMatrix::from_fn(k, k, |i, j| state.two_point(&Slot::Packet(ps[i].conj()), &Slot::Packet(ps[j].clone())).unwrap())
}

fn min_eigen(m: &DMatrix<C64>) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn positive_density_gives_positive_gram() {
    let mut ps = packets();
    let mut g = rng(17);
    ps.extend((0..5).map(|_| kreinwedge::states::sampling::random_packet(&mut g)));
    let gram = one_particle_gram(&free(), &ps);
    let top = gram.diagonal().iter().map(|d| d.re).fold(0.0, f64::max);
    assert!(min_eigen(&gram) >= -1e-12 * top);
}

#[test]
fn ghost_pair_gram_is_indefinite() {
    // Momenta on the heavy shell pick up the negative weight.
    let heavy = WavePacket::modulated(C64::new(1.0, 0.0), SpacetimePoint::ORIGIN, 3.0, 3.0, SpacetimePoint::new(2.0, 0.0));
    let light = WavePacket::modulated(C64::new(1.0, 0.0), SpacetimePoint::ORIGIN, 3.0, 3.0, SpacetimePoint::new(1.0, 0.0));
    let gram = one_particle_gram(&ghost(), &[heavy, light]);
    assert!(gram[(0, 0)].re < 0.0 && gram[(1, 1)].re > 0.0, "{gram}");
    assert!(min_eigen(&gram) < 0.0);
}

#[test]
fn cluster_rate_tracks_the_mass_gap() {
    let f = BorchersElement::from_slot(WavePacket::gaussian(SpacetimePoint::ORIGIN, 0.5, 0.5));
    let ts = [2.0, 3.0, 4.0, 5.0, 6.0];
    for (s, m) in [(free(), 1.0), (ghost(), 1.0), (QuasiFreeState::new(MassShellDensity::free_field(2.0).unwrap()), 2.0)] {
        let fit = s.cluster_rate(&f, &f, SpacetimePoint::new(0.0, 1.0), &ts).unwrap();
        assert!((fit.rate - m).abs() < 0.2 * m, "rate {} for mass {m}", fit.rate);
    }
}

#[test]
fn cluster_direction_must_be_spacelike() {
    let f = BorchersElement::from_slot(WavePacket::gaussian(SpacetimePoint::ORIGIN, 0.5, 0.5));
    assert!(free().cluster_rate(&f, &f, SpacetimePoint::new(1.0, 0.0), &[1.0, 2.0]).is_err());
}

#[test]
fn degree_above_the_state_cap_is_refused() {
    let f = BorchersElement::from_slot(WavePacket::gaussian(SpacetimePoint::ORIGIN, 0.5, 0.5)).with_cap(12);
    let mut x = f.clone();
    for _ in 0..9 {
        x = x.tensor(&f).unwrap();
    }
    assert!(matches!(free().evaluate(&x), Err(Error::DegreeCapExceeded { .. })));
}

#[test]
fn axiom_battery_passes_for_both_models() {
    for s in [free(), ghost()] {
        let (majorant, _) = calibrate_majorant(&s, &[], 2, 4).unwrap();
        let r = check_axioms(&s, &majorant, &AxiomSettings::default());
        for (name, e) in &r.entries {
            assert!(e.pass, "{name}: defect {:e} > {:e} ({:?})", e.defect, e.tolerance, e.witnesses);
        }
        for name in ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "strong_spectral"] {
            assert!(r.get(name).is_some(), "missing {name}");
        }
    }
}

#[test]
fn domination_fails_with_a_tiny_majorant() {
    let s = ghost();
    let majorant = kreinwedge::states::SobolevMajorant::from_constant(1e-6, 2, 4).unwrap();
    let r = check_axioms(&s, &majorant, &AxiomSettings { domination_samples: 20, ..AxiomSettings::default() });
    let a5 = r.get("A5").unwrap();
    assert!(!a5.pass && a5.defect > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn evaluation_is_hermitian(seed in 0u64..100_000) {
        let mut g = rng(seed);
        let x = random_element(&mut g, 4);
        for s in [free(), ghost()] {
            let a = s.evaluate_scaled(&x).unwrap();
            let b = s.evaluate_scaled(&x.involution()).unwrap();
            prop_assert!((b.value - a.value.conj()).norm() <= 1e-9 * a.scale.max(b.scale));
        }
    }

    #[test]
    fn evaluation_is_poincare_invariant(seed in 0u64..100_000) {
        let mut g = rng(seed);
        let x = random_element(&mut g, 4);
        let p = random_poincare(&mut g);
        for s in [free(), ghost()] {
            let a = s.evaluate_scaled(&x).unwrap();
            let b = s.evaluate_scaled(&x.act(&p)).unwrap();
            prop_assert!((a.value - b.value).norm() <= 1e-9 * a.scale.max(b.scale));
        }
    }
}
