//! The acceptance criteria of kreinwedge as callable checks.
//!
//! Every tolerance is a named constant below. Each criterion returns an
//! [`Outcome`]; errors from the library count as failures and are reported
//! in the detail line.

use std::f64::consts::PI;

use kreinwedge::borchers::partitions::{moebius_transform, MoebiusDirection, PartitionData, Poly};
use kreinwedge::borchers::{Slot, TensorTerm};
use kreinwedge::gns::{slot_basis, vacuum_tools, wedge_slots, GnsModel, DEFAULT_TOL_NULL};
use kreinwedge::modular::{
    additivity_defect, series_direct_defect, standard_bw, standard_kms, standard_tomita, AnalyticVector, ModularSettings, TrendReport,
};
use kreinwedge::mollifier::mollify_with;
use kreinwedge::quadrature::HermiteRule;
use kreinwedge::states::axioms::calibrate_majorant;
use kreinwedge::states::sampling::{random_element, random_packet, rng};
use kreinwedge::states::{check_axioms, AxiomSettings, MassShellDensity, QuasiFreeState};
use kreinwedge::testfunctions::{schwartz_norm, Difference, PoincareElement, SpacetimePoint, WavePacket, C64};
use kreinwedge::Result;
use rand::Rng;

pub const MOLLIFIER_EPSILONS: [f64; 5] = [1.0, 0.3, 0.1, 0.03, 0.01];
pub const MOLLIFIER_NORMS: [(u32, u32); 2] = [(0, 0), (1, 2)];
pub const MOLLIFIER_FINAL_RATIO: f64 = 1e-3;

pub const SERIES_SAMPLES: usize = 30;
pub const SERIES_RADIUS: f64 = PI + 0.3;
pub const SERIES_ORDER: usize = 30;
pub const SERIES_EPSILON: f64 = 0.5;
pub const SERIES_TOL: f64 = 1e-6;
pub const ADDITIVITY_SAMPLES: usize = 10;
pub const ADDITIVITY_TOL: f64 = 1e-8;

pub const PARTITION_MAX_N: usize = 6;
pub const PAIRING_TOL: f64 = 1e-12;

pub const ETA_TOL: f64 = 1e-10;
pub const J_ETA_TOL: f64 = 1e-8;
pub const DOMINATION_SAMPLES: usize = 50;

pub const VACUUM_TOL: f64 = 1e-6;

pub const KMS_TOL: f64 = 1e-5;
pub const KMS_CONTROL_MIN: f64 = 1e-2;
pub const BW_TOL: f64 = 1e-5;
pub const TOMITA_TOL: f64 = 1e-4;
pub const TOMITA_MIN_SAMPLES: usize = 4;
pub const TREND_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub number: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    fn from(number: u8, title: &'static str, r: Result<(bool, String)>) -> Outcome {
        match r {
            Ok((pass, detail)) => Outcome { number, title, pass, detail },
            Err(e) => Outcome { number, title, pass: false, detail: format!("error: {e}") },
        }
    }

    pub fn line(&self) -> String {
        format!("{} {:>2} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.number, self.title, self.detail)
    }
}

fn models() -> [(&'static str, QuasiFreeState); 2] {
    [
        ("free", QuasiFreeState::new(MassShellDensity::free_field(1.0).expect("positive mass"))),
        ("ghost", QuasiFreeState::new(MassShellDensity::ghost_pair())),
    ]
}

fn mollifier_packets() -> [WavePacket; 3] {
    [
        WavePacket::gaussian(SpacetimePoint::ORIGIN, 0.5, 0.5),
        WavePacket::modulated(C64::new(0.8, -0.6), SpacetimePoint::new(0.3, -0.2), 0.6, 0.8, SpacetimePoint::new(0.5, 0.3)),
        WavePacket::gaussian(SpacetimePoint::new(0.2, 0.9), 0.6, 0.5),
    ]
}

/// ‖f_ε − f‖_{L,N} along the ε ladder for three packets and two norms.
pub fn mollifier_convergence() -> Outcome {
    let run = || -> Result<(bool, String)> {
        let mut pass = true;
        let mut worst_final: f64 = 0.0;
        let mut increases = 0;
        for f in mollifier_packets() {
            for (l, n) in MOLLIFIER_NORMS {
                let nf = schwartz_norm(&f, l, n)?;
                let mut last = f64::INFINITY;
                for eps in MOLLIFIER_EPSILONS {
                    let m = mollify_with(&f, eps, HermiteRule::WEDGE)?;
                    let d = schwartz_norm(&Difference(&m.expanded(), &f), l, n)?;
                    if !(d < last) {
                        increases += 1;
                    }
                    last = d;
                }
                worst_final = worst_final.max(last / nf);
            }
        }
        pass &= increases == 0 && worst_final < MOLLIFIER_FINAL_RATIO;
        Ok((pass, format!("non-monotone steps {increases}, worst ‖f_ε − f‖/‖f‖ at ε = 0.01: {worst_final:.3e} (need < {MOLLIFIER_FINAL_RATIO:e})")))
    };
    Outcome::from(1, "mollifier convergence", run())
}

fn random_disc_point(g: &mut impl Rng, r: f64) -> C64 {
    let rad = r * g.gen_range(0.0f64..1.0).sqrt();
    C64::from_polar(rad, g.gen_range(0.0..2.0 * PI))
}

/// Series against direct complex boosts, and additivity of the direct boost.
pub fn entire_continuation() -> Outcome {
    let run = || -> Result<(bool, String)> {
        let settings = ModularSettings::default();
        let (_, free) = &models()[0];
        let abs = settings.state(free).absolute();
        let psi = AnalyticVector::new(settings.wedge_element(&settings.tomita_packets()[0], SERIES_EPSILON)?)?;
        let mut g = rng(2);
        let mut series: f64 = 0.0;
        for _ in 0..SERIES_SAMPLES {
            let z = random_disc_point(&mut g, SERIES_RADIUS);
            series = series.max(series_direct_defect(&abs, &psi, z, SERIES_ORDER)?);
        }
        let mut additivity: f64 = 0.0;
        for _ in 0..ADDITIVITY_SAMPLES {
            let (z1, z2) = (random_disc_point(&mut g, SERIES_RADIUS / 2.0), random_disc_point(&mut g, SERIES_RADIUS / 2.0));
            additivity = additivity.max(additivity_defect(&abs, &psi, z1, z2)?);
        }
        Ok((
            series < SERIES_TOL && additivity < ADDITIVITY_TOL,
            format!("series/direct {series:.3e} (need < {SERIES_TOL:e}), additivity {additivity:.3e} (need < {ADDITIVITY_TOL:e})"),
        ))
    };
    Outcome::from(2, "entire continuation", run())
}

const AXIOMS: [&str; 8] = ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "strong_spectral"];

pub fn axiom_battery() -> Outcome {
    let run = || -> Result<(bool, String)> {
        let mut pass = true;
        let mut parts = Vec::new();
        for (name, s) in models() {
            let (majorant, _) = calibrate_majorant(&s, &[], 2, 4)?;
            let r = check_axioms(&s, &majorant, &AxiomSettings::default());
            let mut failed = Vec::new();
            for a in AXIOMS {
                match r.get(a) {
                    Some(e) if e.pass => {}
                    Some(e) => failed.push(format!("{a} {:.2e} > {:.0e}", e.defect, e.tolerance)),
                    None => failed.push(format!("{a} missing")),
                }
            }
            pass &= failed.is_empty();
            let a5 = r.get("A5").map_or(f64::NAN, |e| e.defect);
            let a6 = r.get("A6").map_or(f64::NAN, |e| e.defect);
            parts.push(if failed.is_empty() {
                format!("{name}: all pass (A5 violations {a5}, A6 rate error {a6:.3})")
            } else {
                format!("{name}: {}", failed.join(", "))
            });
        }
        Ok((pass, parts.join("; ")))
    };
    Outcome::from(3, "axiom battery", run())
}

fn recursion_value(state: &QuasiFreeState, t: &TensorTerm) -> Result<C64> {
    let n = t.slots.len();
    if n == 0 {
        return Ok(t.coeff);
    }
    let mut trunc = PartitionData::new();
    for i in 0..n {
        for j in i + 1..n {
            trunc.insert((1u32 << i) | (1u32 << j), state.two_point_on(&t.slots[i], &t.slots[j], &state.grid).value);
        }
    }
    let full = moebius_transform(&trunc, MoebiusDirection::TruncatedToFull, n)?;
    Ok(t.coeff * full[&((1u32 << n) - 1)])
}

pub fn partition_recursion() -> Outcome {
    let run = || -> Result<(bool, String)> {
        let mut round_trip = true;
        for n in 1..=PARTITION_MAX_N {
            let t: PartitionData<Poly> = (1..(1u32 << n)).map(|m| (m, Poly::var(m))).collect();
            let full = moebius_transform(&t, MoebiusDirection::TruncatedToFull, n)?;
            round_trip &= moebius_transform(&full, MoebiusDirection::FullToTruncated, n)? == t;
            round_trip &= moebius_transform(&moebius_transform(&t, MoebiusDirection::FullToTruncated, n)?, MoebiusDirection::TruncatedToFull, n)? == t;
        }
        let mut worst: f64 = 0.0;
        for (_, s) in models() {
            let mut g = rng(4);
            for degree in [4usize, 6] {
                for _ in 0..3 {
                    let a = random_element(&mut g, degree).component(degree);
                    let direct = s.evaluate(&a)?;
                    let mut rec = C64::new(0.0, 0.0);
                    for t in a.terms() {
                        rec += recursion_value(&s, t)?;
                    }
                    worst = worst.max((direct - rec).norm() / direct.norm().max(1e-300));
                }
            }
        }
        Ok((
            round_trip && worst < PAIRING_TOL,
            format!("round trip exact for n ≤ {PARTITION_MAX_N}: {round_trip}, pairing vs recursion {worst:.3e} (need < {PAIRING_TOL:e})"),
        ))
    };
    Outcome::from(4, "partition recursion", run())
}

/// Packet slots for the positive model and shell-resolved slots that see the
/// negative weight of the ghost pair.
fn metric_slots(name: &str) -> Vec<Slot> {
    if name == "free" {
        let mut g = rng(1);
        (0..4).map(|_| Slot::Packet(random_packet(&mut g))).collect()
    } else {
        [1.0, 2.0, 1.5]
            .iter()
            .map(|&k| Slot::Packet(WavePacket::modulated(C64::new(1.0, 0.0), SpacetimePoint::ORIGIN, 3.0, 3.0, SpacetimePoint::new(k, 0.0))))
            .collect()
    }
}

fn metric_model(state: &QuasiFreeState, slots: &[Slot], products: bool) -> Result<GnsModel> {
    let (majorant, _) = calibrate_majorant(state, slots, 1, 4)?;
    GnsModel::new(state.clone(), slot_basis(slots, products), majorant, DEFAULT_TOL_NULL)
}

pub fn krein_gns() -> Outcome {
    let run = || -> Result<(bool, String)> {
        let mut pass = true;
        let mut parts = Vec::new();
        for (name, s) in models() {
            let m = metric_model(&s, &metric_slots(name), true)?;
            let d = m.real.defects();
            let (plus, minus) = m.real.signature();
            let signature_ok = if s.density.is_positive() { m.real.eta.iter().all(|e| *e == 1.0) } else { minus >= 1 };
            let wedge = metric_model(&s, &wedge_slots(0.5)?, false)?;
            let j = wedge.symmetry_matrix(&PoincareElement::theta01())?;
            let comm = j.eta_commutator(&wedge.real);
            let dom = m.domination(DOMINATION_SAMPLES, 5);
            let ok = d.eta_squared < ETA_TOL && d.eta_vacuum < ETA_TOL && signature_ok && comm < J_ETA_TOL && dom.violations == 0;
            pass &= ok;
            parts.push(format!(
                "{name}: η²−1 {:.1e}, ηΩ−Ω {:.1e}, signature ({plus}, {minus}), ‖[J,η]‖ {comm:.1e}, domination violations {}/{}",
                d.eta_squared, d.eta_vacuum, dom.violations, dom.samples
            ));
        }
        Ok((pass, parts.join("; ")))
    };
    Outcome::from(5, "Krein GNS", run())
}

pub fn vacuum_structure() -> Outcome {
    let run = || -> Result<(bool, String)> {
        let mut pass = true;
        let mut parts = Vec::new();
        for (name, s) in models() {
            let m = metric_model(&s, &metric_slots(name), true)?;
            let r = vacuum_tools(&m, &m.basis.elements[1..])?;
            pass &= r.orthogonality < VACUUM_TOL && r.projection_identity < VACUUM_TOL;
            parts.push(format!(
                "{name}: orthogonality {:.1e}, projection identity {:.1e}, plateau leak {:.1e}",
                r.orthogonality, r.projection_identity, r.plateau_leak
            ));
        }
        Ok((pass, parts.join("; ")))
    };
    Outcome::from(6, "vacuum and mass gap", run())
}

/// KMS, BW and modular-identity defects of both models at one resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularDefects {
    pub kms: [f64; 2],
    pub bw: [f64; 2],
    pub tomita: [f64; 2],
}

fn modular_defects(settings: &ModularSettings) -> Result<ModularDefects> {
    let mut out = ModularDefects { kms: [0.0; 2], bw: [0.0; 2], tomita: [0.0; 2] };
    for (i, (_, s)) in models().iter().enumerate() {
        out.kms[i] = standard_kms(s, settings)?.defect;
        out.bw[i] = standard_bw(s, settings)?.defect;
        out.tomita[i] = standard_tomita(s, settings)?.defect;
    }
    Ok(out)
}

pub fn kms() -> Outcome {
    let run = || -> Result<(bool, String)> {
        let settings = ModularSettings::default();
        let control = ModularSettings { control: true, ..settings.clone() };
        let mut pass = true;
        let mut parts = Vec::new();
        for (name, s) in models() {
            let d = standard_kms(&s, &settings)?.defect;
            let c = standard_kms(&s, &control)?.defect;
            pass &= d < KMS_TOL && c > KMS_CONTROL_MIN;
            parts.push(format!("{name}: {d:.2e} (need < {KMS_TOL:e}), left-wedge control {c:.2e} (need > {KMS_CONTROL_MIN:e})"));
        }
        Ok((pass, parts.join("; ")))
    };
    Outcome::from(7, "KMS", run())
}

pub fn bisognano_wichmann() -> Outcome {
    let run = || -> Result<(bool, String)> {
        let settings = ModularSettings::default();
        let mut pass = true;
        let mut parts = Vec::new();
        for (name, s) in models() {
            let d = standard_bw(&s, &settings)?.defect;
            pass &= d < BW_TOL;
            parts.push(format!("{name}: {d:.2e} (need < {BW_TOL:e})"));
        }
        Ok((pass, parts.join("; ")))
    };
    Outcome::from(8, "Bisognano-Wichmann", run())
}

pub fn modular_identity() -> Outcome {
    let run = || -> Result<(bool, String)> {
        let settings = ModularSettings::default();
        let mut pass = true;
        let mut parts = Vec::new();
        for (name, s) in models() {
            let r = standard_tomita(&s, &settings)?;
            let n = r.samples.len();
            let covered = r.budget_covers();
            let least_margin = r.samples.iter().map(|x| x.budget.total() / x.defect.max(1e-300)).fold(f64::INFINITY, f64::min);
            pass &= n >= TOMITA_MIN_SAMPLES && r.defect < TOMITA_TOL && covered;
            parts.push(format!("{name}: {n} samples, sup {:.2e} (need < {TOMITA_TOL:e}), budget covers: {covered} (least budget/defect {least_margin:.1})", r.defect));
        }
        Ok((pass, parts.join("; ")))
    };
    Outcome::from(9, "modular identity", run())
}

/// Coarse against standard resolution for criteria 7–9.
pub fn convergence_trend() -> Outcome {
    let run = || -> Result<(bool, String)> {
        let standard = ModularSettings::default();
        let s = modular_defects(&standard)?;
        let c = modular_defects(&standard.coarse())?;
        let mut pass = true;
        let mut parts = Vec::new();
        for (i, (name, _)) in models().iter().enumerate() {
            let t = TrendReport {
                coarse: [c.kms[i], c.bw[i], c.tomita[i]],
                standard: [s.kms[i], s.bw[i], s.tomita[i]],
                ratios: [c.kms[i] / s.kms[i].max(1e-300), c.bw[i] / s.bw[i].max(1e-300), c.tomita[i] / s.tomita[i].max(1e-300)],
            };
            pass &= t.passes(TREND_FACTOR);
            parts.push(format!("{name}: ratios kms {:.1}, bw {:.1}, tomita {:.1}", t.ratios[0], t.ratios[1], t.ratios[2]));
        }
        Ok((pass, format!("{} (need ≥ {TREND_FACTOR})", parts.join("; "))))
    };
    Outcome::from(10, "convergence trend", run())
}

/// The criteria in order, as functions so callers can run a subset.
pub const CRITERIA: [fn() -> Outcome; 10] = [
    mollifier_convergence,
    entire_continuation,
    axiom_battery,
    partition_recursion,
    krein_gns,
    vacuum_structure,
    kms,
    bisognano_wichmann,
    modular_identity,
    convergence_trend,
];
