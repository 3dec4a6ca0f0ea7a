//! Complex boosts on analytic vectors, the wedge correlator
//! F(z) = W(f ⊗ α_z g), and the modular checks built on them: the KMS
//! condition at temperature 1/2π, the Bisognano–Wichmann relation,
//! S_R = J U(iπ) on finite GNS realizations, and wedge-algebra structure.
//!
//! Nothing here uses positivity of the state; every check runs unchanged on
//! indefinite densities.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::borchers::{BorchersElement, Slot, TensorTerm};
use crate::error::{Error, Result};
use crate::gns::{CMatrix, CVector, GnsBasis, GnsModel, Projected, DEFAULT_TOL_NULL};
use crate::mollifier::{mollify_with, taylor_majorants, MollifiedFn, SeriesConfig};
use crate::quadrature::{HermiteRule, RapidityGrid};
use crate::states::axioms::calibrate_majorant;
use crate::states::{sobolev_product, DegreeNorm, QuasiFreeState, SobolevMajorant};
use crate::testfunctions::{PoincareElement, Region, SpacetimePoint, WavePacket, C64};

const I: C64 = C64::new(0.0, 1.0);

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn from_terms(terms: Vec<TensorTerm>, cap: usize) -> BorchersElement {
    let mut out = BorchersElement::zero().with_cap(cap);
    for t in terms {
        out.components.entry(t.degree()).or_default().push(t);
    }
    out.canonical()
}

/// All k-tuples of non-negative integers summing to n.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return if n == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    if k == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// ⟨x, y⟩ = W(x* ⊗ y).
pub fn krein_product(state: &QuasiFreeState, x: &BorchersElement, y: &BorchersElement) -> Result<C64> {
    state.evaluate(&x.involution().tensor(y)?)
}

/// ‖φ(x)Ω‖ in the Fock norm of a positive state, normally the |w| state.
///
/// Elements of degree ≤ 1 are summed on the shell before squaring, which
/// keeps differences of nearby vectors accurate. Higher degrees go through
/// W(x* ⊗ x).
pub fn vector_norm(abs_state: &QuasiFreeState, x: &BorchersElement) -> Result<f64> {
    if x.max_degree() > 1 || x.terms().any(|t| !t.multipliers.is_empty()) {
        return Ok(krein_product(abs_state, x, x)?.re.max(0.0).sqrt());
    }
    let (thetas, weights) = abs_state.grid.nodes();
    let ones: Vec<&TensorTerm> = x.components.get(&1).into_iter().flatten().collect();
    let mut total = x.scalar_part().norm_sqr();
    for s in &abs_state.density.shells {
        let parts: Vec<Vec<C64>> = ones
            .par_iter()
            .map(|t| t.slots[0].shell_values(s.mass, 1.0, &thetas).into_iter().map(|v| t.coeff * v).collect())
            .collect();
        let mut acc = vec![C64::new(0.0, 0.0); thetas.len()];
        for p in &parts {
            for (a, v) in acc.iter_mut().zip(p) {
                *a += v;
            }
        }
        let sum: f64 = acc.iter().zip(&weights).map(|(a, w)| w * a.norm_sqr()).sum();
        total += s.weight.abs() / (4.0 * PI) * sum;
    }
    Ok(total.sqrt())
}

/// An element of the analytic subalgebra: every slot an unshifted-in-space,
/// undifferentiated boost average with real base rapidity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticVector {
    pub element: BorchersElement,
}

impl AnalyticVector {
    pub fn new(element: BorchersElement) -> Result<Self> {
        for t in element.terms() {
            if !t.multipliers.is_empty() {
                return Err(Error::NotAnalytic("multiplier-decorated terms have no complex boost".into()));
            }
            for s in &t.slots {
                match s {
                    Slot::Mollified(m) if m.order == 0 && m.translation == SpacetimePoint::ORIGIN && m.shift.im == 0.0 => {}
                    Slot::Mollified(_) => {
                        return Err(Error::NotAnalytic("slot is translated, differentiated or already continued".into()))
                    }
                    Slot::Packet(_) => return Err(Error::NotAnalytic("slot is not a boost average".into())),
                }
            }
        }
        Ok(AnalyticVector { element })
    }

    pub fn from_slot(f: MollifiedFn) -> Result<Self> {
        AnalyticVector::new(BorchersElement::from_slot(f))
    }

    /// f_n in α_z(f) = Σ_n z^n f_n, through the Leibniz rule over slots.
    pub fn taylor(&self, n: usize) -> Result<BorchersElement> {
        let mut terms = Vec::new();
        for t in self.element.terms() {
            if t.slots.is_empty() {
                if n == 0 {
                    terms.push(t.clone());
                }
                continue;
            }
            for orders in compositions(n, t.slots.len()) {
                let slots = t
                    .slots
                    .iter()
                    .zip(&orders)
                    .map(|(s, &l)| match s {
                        Slot::Mollified(m) => m.taylor_coefficient(l as u32).map(Slot::Mollified),
                        Slot::Packet(_) => Err(Error::NotAnalytic("slot is not a boost average".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                terms.push(TensorTerm { coeff: t.coeff, slots, multipliers: Vec::new() });
            }
        }
        Ok(from_terms(terms, self.element.degree_cap))
    }

    /// α_z of the element, computed directly.
    pub fn transported(&self, z: C64) -> Result<BorchersElement> {
        self.element.complex_boost(z)
    }

    /// Σ_{l ≤ order} z^l f_l.
    pub fn series(&self, z: C64, order: usize) -> Result<BorchersElement> {
        let mut terms = Vec::new();
        let mut zl = C64::new(1.0, 0.0);
        for l in 0..=order {
            for t in self.taylor(l)?.terms() {
                terms.push(TensorTerm { coeff: t.coeff * zl, ..t.clone() });
            }
            zl *= z;
        }
        Ok(from_terms(terms, self.element.degree_cap))
    }

    /// Σ_terms |c| Π_slots sup|f|.
    pub fn scale(&self) -> f64 {
        self.element
            .terms()
            .map(|t| {
                t.coeff.norm()
                    * t.slots
                        .iter()
                        .map(|s| match s {
                            Slot::Mollified(m) => m.core.sup_bound(),
                            Slot::Packet(p) => p.sup_bound(),
                        })
                        .product::<f64>()
            })
            .sum()
    }

    /// Bound on the sup-norm of α_z(f) − Σ_{l ≤ order} z^l f_l for |z| ≤ r,
    /// from the slotwise Taylor majorants multiplied as power series.
    pub fn series_tail_bound(&self, order: usize, r: f64) -> f64 {
        self.element
            .terms()
            .map(|t| {
                if t.slots.is_empty() {
                    return 0.0;
                }
                let mut conv = vec![1.0];
                for s in &t.slots {
                    if let Slot::Mollified(m) = s {
                        conv = convolve(&conv, &taylor_majorants(m.core.sup_bound(), m.epsilon, r, order));
                    }
                }
                t.coeff.norm() * conv.iter().skip(order + 1).sum::<f64>()
            })
            .sum()
    }
}

/// A^n Ψ = n! i^{−n} φ(f_n)Ω, as an element.
pub fn generator_element(psi: &AnalyticVector, n: usize, cfg: &SeriesConfig) -> Result<BorchersElement> {
    if n > cfg.cap {
        return Err(Error::SeriesCap { requested: n, cap: cfg.cap });
    }
    Ok(psi.taylor(n)?.scaled(factorial(n) * I.powi(-(n as i32))))
}

/// Coordinates of A^n Ψ in a realization.
pub fn generator_apply(model: &GnsModel, psi: &AnalyticVector, n: usize, cfg: &SeriesConfig) -> Result<Projected> {
    model.project(&generator_element(psi, n, cfg)?)
}

/// ‖AΨ − (U(h) − U(−h))Ψ/(2ih)‖ / ‖AΨ‖.
pub fn generator_fd_defect(abs_state: &QuasiFreeState, psi: &AnalyticVector, h: f64) -> Result<f64> {
    let a = generator_element(psi, 1, &SeriesConfig::default())?;
    let fd = psi.transported(C64::new(h, 0.0))?.minus(&psi.transported(C64::new(-h, 0.0))?).scaled(1.0 / (2.0 * I * h));
    Ok(vector_norm(abs_state, &a.minus(&fd))? / vector_norm(abs_state, &a)?.max(1e-300))
}

/// |⟨AΨ₁, Ψ₂⟩ − ⟨Ψ₁, AΨ₂⟩| over ‖AΨ₁‖‖Ψ₂‖ + ‖Ψ₁‖‖AΨ₂‖.
pub fn generator_symmetry_defect(
    state: &QuasiFreeState,
    abs_state: &QuasiFreeState,
    psi1: &AnalyticVector,
    psi2: &AnalyticVector,
) -> Result<f64> {
    let cfg = SeriesConfig::default();
    let a1 = generator_element(psi1, 1, &cfg)?;
    let a2 = generator_element(psi2, 1, &cfg)?;
    let lhs = krein_product(state, &a1, &psi2.element)?;
    let rhs = krein_product(state, &psi1.element, &a2)?;
    let norm = vector_norm(abs_state, &a1)? * vector_norm(abs_state, &psi2.element)?
        + vector_norm(abs_state, &psi1.element)? * vector_norm(abs_state, &a2)?;
    Ok((lhs - rhs).norm() / norm.max(1e-300))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum TransportMethod {
    Direct,
    Series { order: usize },
}

/// U(z)Ψ as an element, with the certified sup-norm tail of the method.
#[derive(Debug, Clone, PartialEq)]
pub struct Transported {
    pub element: BorchersElement,
    pub tail_bound: f64,
}

/// U(z)Ψ by the direct continuation or the truncated series. The series
/// fails with `TailNotCertified` when its tail on |ζ| ≤ |z| exceeds
/// `cfg.tail_tolerance` times the scale of Ψ.
pub fn complex_transport(psi: &AnalyticVector, z: C64, method: TransportMethod, cfg: &SeriesConfig) -> Result<Transported> {
    match method {
        TransportMethod::Direct => Ok(Transported { element: psi.transported(z)?, tail_bound: 0.0 }),
        TransportMethod::Series { order } => {
            if order > cfg.cap {
                return Err(Error::SeriesCap { requested: order, cap: cfg.cap });
            }
            let tail = psi.series_tail_bound(order, z.norm());
            let tolerance = cfg.tail_tolerance * psi.scale();
            if tail > tolerance {
                return Err(Error::TailNotCertified { bound: tail, tolerance });
            }
            Ok(Transported { element: psi.series(z, order)?, tail_bound: tail })
        }
    }
}

/// Coordinates of U(z)Ψ in a realization.
pub fn transport_coords(model: &GnsModel, psi: &AnalyticVector, z: C64, method: TransportMethod, cfg: &SeriesConfig) -> Result<Projected> {
    model.project(&complex_transport(psi, z, method, cfg)?.element)
}

/// ‖U(z)Ψ direct − series of the given order‖ / ‖U(z)Ψ‖, with no tail
/// certification.
pub fn series_direct_defect(abs_state: &QuasiFreeState, psi: &AnalyticVector, z: C64, order: usize) -> Result<f64> {
    let direct = psi.transported(z)?;
    let series = psi.series(z, order)?;
    Ok(vector_norm(abs_state, &direct.minus(&series))? / vector_norm(abs_state, &direct)?.max(1e-300))
}

/// ‖U(z₁ + z₂)Ψ − U(z₁)U(z₂)Ψ‖ / ‖U(z₁ + z₂)Ψ‖.
pub fn additivity_defect(abs_state: &QuasiFreeState, psi: &AnalyticVector, z1: C64, z2: C64) -> Result<f64> {
    let joint = psi.transported(z1 + z2)?;
    let nested = psi.transported(z2)?.complex_boost(z1)?;
    Ok(vector_norm(abs_state, &joint.minus(&nested))? / vector_norm(abs_state, &joint)?.max(1e-300))
}

/// |⟨U(z)Ψ₁, Ψ₂⟩ − ⟨Ψ₁, U(−z̄)Ψ₂⟩| normalized by the Fock norms of either side.
pub fn adjoint_defect(
    state: &QuasiFreeState,
    abs_state: &QuasiFreeState,
    psi1: &AnalyticVector,
    psi2: &AnalyticVector,
    z: C64,
) -> Result<f64> {
    let moved1 = psi1.transported(z)?;
    let moved2 = psi2.transported(-z.conj())?;
    let lhs = krein_product(state, &moved1, &psi2.element)?;
    let rhs = krein_product(state, &psi1.element, &moved2)?;
    let norm = (vector_norm(abs_state, &moved1)? * vector_norm(abs_state, &psi2.element)?)
        .max(vector_norm(abs_state, &psi1.element)? * vector_norm(abs_state, &moved2)?);
    Ok((lhs - rhs).norm() / norm.max(1e-300))
}

/// F(z) = W(f ⊗ α_z g) with a value cache.
#[derive(Debug)]
pub struct WedgeCorrelator {
    pub f: BorchersElement,
    pub g: BorchersElement,
    state: QuasiFreeState,
    cache: Mutex<HashMap<(u64, u64), C64>>,
}

impl WedgeCorrelator {
    /// Both inputs must carry wedge tags unless they are scalars, and g must
    /// be analytic.
    pub fn new(state: QuasiFreeState, f: BorchersElement, g: BorchersElement) -> Result<Self> {
        for (name, e) in [("f", &f), ("g", &g)] {
            if e.max_degree() > 0 && e.localization.region == Region::Everywhere {
                return Err(Error::InvalidArgument(format!("{name} carries no wedge tag")));
            }
        }
        AnalyticVector::new(g.clone())?;
        Ok(WedgeCorrelator { f, g, state, cache: Mutex::new(HashMap::new()) })
    }

    pub fn state(&self) -> &QuasiFreeState {
        &self.state
    }

    pub fn value(&self, z: C64) -> Result<C64> {
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let v = self.state.evaluate(&self.f.tensor(&self.g.complex_boost(z)?)?)?;
        self.cache.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }

    pub fn values(&self, zs: &[C64]) -> Result<Vec<C64>> {
        zs.par_iter().map(|z| self.value(*z)).collect()
    }

    /// sup_t |F(t)| over real samples.
    pub fn real_scale(&self, ts: &[f64]) -> Result<f64> {
        let zs: Vec<C64> = ts.iter().map(|t| C64::new(*t, 0.0)).collect();
        Ok(self.values(&zs)?.iter().map(|v| v.norm()).fold(0.0, f64::max))
    }

    /// t ↦ F(t + iφ).
    pub fn trace(&self, phi: f64, ts: &[f64]) -> Result<Vec<(f64, C64)>> {
        let zs: Vec<C64> = ts.iter().map(|t| C64::new(*t, phi)).collect();
        Ok(ts.iter().copied().zip(self.values(&zs)?).collect())
    }

    /// |∂_y F − i ∂_x F| at z from sixth-order central differences.
    pub fn cr_residual(&self, z: C64, h: f64) -> Result<f64> {
        const C: [f64; 3] = [45.0, -9.0, 1.0];
        let mut zs = Vec::with_capacity(12);
        for k in 1..=3 {
            let s = k as f64 * h;
            zs.extend([z + s, z - s, z + I * s, z - I * s]);
        }
        let v = self.values(&zs)?;
        let (mut dx, mut dy) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for (k, c) in C.iter().enumerate() {
            dx += *c * (v[4 * k] - v[4 * k + 1]);
            dy += *c * (v[4 * k + 2] - v[4 * k + 3]);
        }
        Ok(((dy - I * dx) / (60.0 * h)).norm())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmsPoint {
    pub t: f64,
    /// F(t + 2πi).
    pub upper: C64,
    /// W(α_t g ⊗ f).
    pub swapped: C64,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmsResult {
    pub defect: f64,
    pub scale: f64,
    pub points: Vec<KmsPoint>,
}

/// sup_t |F(t + 2πi) − W(α_t g ⊗ f)| / sup_t |F(t)|.
pub fn kms_defect(fg: &WedgeCorrelator, ts: &[f64]) -> Result<KmsResult> {
    let scale = fg.real_scale(ts)?;
    let points = ts
        .par_iter()
        .map(|&t| {
            let upper = fg.value(C64::new(t, 2.0 * PI))?;
            let swapped = fg.state.evaluate(&fg.g.act(&PoincareElement::boost(t)).tensor(&fg.f)?)?;
            Ok(KmsPoint { t, upper, swapped, defect: (upper - swapped).norm() / scale.max(1e-300) })
        })
        .collect::<Result<Vec<_>>>()?;
    let defect = points.iter().map(|p| p.defect).fold(0.0, f64::max);
    Ok(KmsResult { defect, scale, points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BwResult {
    pub defect: f64,
    pub scale: f64,
    /// F(iπ).
    pub continued: C64,
    /// W(f ⊗ α_Θ(g*)).
    pub reflected: C64,
}

/// |F(iπ) − W(f ⊗ α_Θ(g*))| / sup_t |F(t)|.
pub fn bw_defect(fg: &WedgeCorrelator, ts: &[f64]) -> Result<BwResult> {
    let scale = fg.real_scale(ts)?;
    let continued = fg.value(C64::new(0.0, PI))?;
    let reflected = fg.state.evaluate(&fg.f.tensor(&fg.g.involution().act(&PoincareElement::theta01()))?)?;
    let diff = (continued - reflected).norm();
    let defect = if diff == 0.0 { 0.0 } else { diff / scale.max(1e-300) };
    Ok(BwResult { defect, scale, continued, reflected })
}

/// Error budget of one modular-identity sample, relative to ‖LΩ‖.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TomitaBudget {
    /// √(outside mass fraction) of the slots.
    pub tail: f64,
    /// The identity's residual on elements plus the change of U(iπ)L under
    /// a refined boost-average rule, evaluated on a doubled rapidity grid.
    pub quadrature: f64,
    /// Certified tail of the transport method (0 for the direct method).
    pub series: f64,
    /// Projection residuals of L*Ω, U(iπ)LΩ and the J images.
    pub projection: f64,
}

impl TomitaBudget {
    pub fn total(&self) -> f64 {
        self.tail + self.quadrature + self.series + self.projection
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomitaSample {
    pub label: String,
    /// ‖L*Ω − J U(iπ) LΩ‖ / ‖LΩ‖ in realization coordinates.
    pub defect: f64,
    /// The same identity measured on elements in the |w| Fock norm.
    pub vector_defect: f64,
    /// sup_i |⟨a_i, U(iπ)LΩ⟩ − W(a_i* ⊗ α_{iπ} L)| over the basis, normalized.
    pub bridge: f64,
    pub budget: TomitaBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomitaReport {
    pub defect: f64,
    pub samples: Vec<TomitaSample>,
}

impl TomitaReport {
    /// Every sample's budget covers its observed defect.
    pub fn budget_covers(&self) -> bool {
        self.samples.iter().all(|s| s.defect <= s.budget.total())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomitaConfig {
    /// Largest acceptable projection residual for LΩ and L*Ω.
    pub max_domain_defect: f64,
    pub method: TransportMethod,
    pub series: SeriesConfig,
}

impl Default for TomitaConfig {
    fn default() -> Self {
        TomitaConfig { max_domain_defect: 1e-6, method: TransportMethod::Direct, series: SeriesConfig::default() }
    }
}

/// {𝟙, L, L*, α_Θ L, α_Θ L*}, skipping candidates that are numerically in
/// the span of the earlier ones under the plain L² product. The span is
/// closed under J and contains U(iπ)LΩ = J L*Ω when the modular identity
/// holds.
pub fn tomita_basis(l: &BorchersElement) -> GnsBasis {
    let theta = PoincareElement::theta01();
    let star = l.involution();
    let plain = SobolevMajorant { degrees: vec![DegreeNorm { l: 0, n: 0, c: 1.0 }] };
    let mut elements: Vec<BorchersElement> = vec![BorchersElement::unit()];
    for e in [l.clone(), star.clone(), l.act(&theta), star.act(&theta)] {
        let k = elements.len();
        let g = CMatrix::from_fn(k, k, |i, j| sobolev_product(&plain, &elements[i], &elements[j], 0));
        let p = CVector::from_fn(k, |i, _| sobolev_product(&plain, &elements[i], &e, 0));
        let ee = sobolev_product(&plain, &e, &e, 0).re;
        let explained = match g.cholesky() {
            Some(ch) => (p.adjoint() * ch.solve(&p))[(0, 0)].re,
            None => ee,
        };
        if ee - explained > 1e-10 * ee {
            elements.push(e);
        }
    }
    GnsBasis::new(elements)
}

fn map_rules(x: &BorchersElement, f: impl Fn(HermiteRule) -> HermiteRule) -> BorchersElement {
    let mut out = x.clone();
    for t in out.components.values_mut().flatten() {
        for s in t.slots.iter_mut() {
            if let Slot::Mollified(m) = s {
                m.rule = f(m.rule);
            }
        }
    }
    out
}

/// ‖L*Ω − J U(iπ) LΩ‖ on elements, where J U(iπ) L = α_Θ(α_{iπ} L).
fn vector_identity_residual(abs_state: &QuasiFreeState, l: &AnalyticVector) -> Result<f64> {
    let star = l.element.involution();
    let image = l.transported(C64::new(0.0, PI))?.act(&PoincareElement::theta01());
    vector_norm(abs_state, &star.minus(&image))
}

/// S_R LΩ = L*Ω against J·U(iπ)·LΩ computed with matrices of the
/// realization, for each sample L.
pub fn tomita_defect(model: &GnsModel, samples: &[AnalyticVector], cfg: &TomitaConfig) -> Result<TomitaReport> {
    let theta = PoincareElement::theta01();
    let j = model.symmetry_matrix(&theta)?;
    let fine_state = model.abs_state.absolute().with_grid(model.abs_state.grid.doubled());
    let mut out = Vec::with_capacity(samples.len());
    for (idx, l) in samples.iter().enumerate() {
        let x = &l.element;
        let star = x.involution();
        let moved = complex_transport(l, C64::new(0.0, PI), cfg.method, &cfg.series)?;
        let px = model.project(x)?;
        let ps = model.project(&star)?;
        let pu = model.project(&moved.element)?;
        let dd = px.defect.max(ps.defect);
        if dd > cfg.max_domain_defect {
            return Err(Error::DomainDefectExceeded { defect: dd, tolerance: cfg.max_domain_defect });
        }
        let rhs = j.apply(&pu.coords);
        let nx = model.norm(&px.coords).max(1e-300);
        let defect = model.norm(&(&ps.coords - &rhs)) / nx;

        let fx = vector_norm(&model.abs_state, x)?.max(1e-300);
        let fu = vector_norm(&model.abs_state, &moved.element)?;
        let fs = vector_norm(&model.abs_state, &star)?;
        let vector_defect = vector_identity_residual(&model.abs_state, l)? / fx;

        let region = match x.localization.region {
            Region::Everywhere => Region::RightWedge,
            r => r,
        };
        let tail = x.terms().flat_map(|t| t.slots.iter()).map(|s| s.tail_fraction(region).sqrt()).fold(0.0, f64::max);
        let refined = AnalyticVector::new(map_rules(x, |r| r.refined()))?;
        let moved_fine = refined.transported(C64::new(0.0, PI))?;
        let direct = l.transported(C64::new(0.0, PI))?;
        let quadrature = vector_defect + vector_norm(&fine_state, &direct.minus(&moved_fine))? / fx;
        let projection = (px.defect * fx + ps.defect * fs + pu.defect * fu) / fx + j.domain_defect * fu / fx;
        let series = moved.tail_bound / l.scale().max(1e-300);

        let mut bridge: f64 = 0.0;
        for (i, a) in model.basis.elements.iter().enumerate() {
            let functional = krein_product(&model.state, a, &moved.element)?;
            let matrix = model.real.krein(&model.real.coords.column(i).into_owned(), &pu.coords);
            let na = vector_norm(&model.abs_state, a)?;
            bridge = bridge.max((functional - matrix).norm() / (na * fu).max(1e-300));
        }
        out.push(TomitaSample {
            label: format!("sample {idx} (degree {})", x.max_degree()),
            defect,
            vector_defect,
            bridge,
            budget: TomitaBudget { tail, quadrature, series, projection },
        });
    }
    let defect = out.iter().map(|s| s.defect).fold(0.0, f64::max);
    Ok(TomitaReport { defect, samples: out })
}

/// Runs [`tomita_defect`] on a separate realization over [`tomita_basis`]
/// for each sample, with a majorant calibrated on the sample's slots.
pub fn tomita_check(state: &QuasiFreeState, samples: &[AnalyticVector], n_weight: u32, cfg: &TomitaConfig) -> Result<TomitaReport> {
    let mut all = Vec::new();
    for (idx, l) in samples.iter().enumerate() {
        let basis = tomita_basis(&l.element);
        let slots: Vec<Slot> = basis.elements.iter().flat_map(|e| e.terms().flat_map(|t| t.slots.clone()).collect::<Vec<_>>()).collect();
        let degree = l.element.max_degree().max(1);
        let (majorant, _) = calibrate_majorant(state, &slots, n_weight, degree)?;
        let model = GnsModel::new(state.clone(), basis, majorant, DEFAULT_TOL_NULL)?;
        let mut r = tomita_defect(&model, std::slice::from_ref(l), cfg)?;
        for s in &mut r.samples {
            s.label = format!("sample {idx} (degree {})", l.element.max_degree());
        }
        all.extend(r.samples);
    }
    let defect = all.iter().map(|s| s.defect).fold(0.0, f64::max);
    Ok(TomitaReport { defect, samples: all })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub epsilon: f64,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgeStructure {
    /// sup |⟨c_i, [φ(a), φ(b)] c_j⟩| / (‖c_i‖‖c_j‖‖a‖‖b‖) for a right, b left.
    pub commutation: f64,
    /// Largest excess of the recomputed left-wedge tail of J a J over the
    /// right-wedge tail of a.
    pub j_tag_flip: f64,
    /// Whether every J image is tagged with the left wedge.
    pub j_region_flipped: bool,
    /// Largest excess of the right-wedge tail of α_t(a) over that of a.
    pub boost_tag: f64,
    /// ‖φ(f)Ω − φ(f_ε)Ω‖ / ‖φ(f)Ω‖.
    pub density_curve: Vec<DensityPoint>,
    pub density_monotone: bool,
}

/// sup over probes c_i, c_j, right elements a and left elements b of the
/// normalized matrix element of [φ(a), φ(b)].
pub fn commutation_defect(
    state: &QuasiFreeState,
    abs_state: &QuasiFreeState,
    right: &[BorchersElement],
    left: &[BorchersElement],
    probes: &[BorchersElement],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for a in right {
        for b in left {
            let comm = a.tensor(b)?.minus(&b.tensor(a)?);
            let nab = vector_norm(abs_state, a)? * vector_norm(abs_state, b)?;
            for ci in probes {
                for cj in probes {
                    let v = state.evaluate(&ci.involution().tensor(&comm)?.tensor(cj)?)?;
                    let n = nab * vector_norm(abs_state, ci)? * vector_norm(abs_state, cj)?;
                    worst = worst.max(v.norm() / n.max(1e-300));
                }
            }
        }
    }
    Ok(worst)
}

/// (j_tag_flip, j_region_flipped, boost_tag) over right-wedge elements.
pub fn covariance_defects(right: &[BorchersElement], ts: &[f64]) -> (f64, bool, f64) {
    let theta = PoincareElement::theta01();
    let mut flip: f64 = 0.0;
    let mut flipped = true;
    let mut boost: f64 = 0.0;
    for a in right {
        let tagged = a.clone().localized(Region::RightWedge);
        let input = tagged.localization.tail_bound;
        let image = tagged.act(&theta);
        flipped &= image.localization.region == Region::LeftWedge && image.localization.tail_bound <= input;
        flip = flip.max(image.localized(Region::LeftWedge).localization.tail_bound - input);
        for &t in ts {
            let moved = tagged.act(&PoincareElement::boost(t));
            flipped &= moved.localization.region == Region::RightWedge;
            boost = boost.max(moved.localized(Region::RightWedge).localization.tail_bound - input);
        }
    }
    (flip.max(0.0), flipped, boost.max(0.0))
}

/// ‖φ(f)Ω − φ(f_ε)Ω‖ / ‖φ(f)Ω‖ along the given ε.
pub fn density_curve(abs_state: &QuasiFreeState, f: &WavePacket, epsilons: &[f64], rule: HermiteRule) -> Result<Vec<DensityPoint>> {
    let plain = BorchersElement::from_slot(f.clone());
    let nf = vector_norm(abs_state, &plain)?.max(1e-300);
    epsilons
        .iter()
        .map(|&eps| {
            let m = mollify_with(f, eps, rule)?;
            let d = plain.minus(&BorchersElement::from_slot(m));
            Ok(DensityPoint { epsilon: eps, defect: vector_norm(abs_state, &d)? / nf })
        })
        .collect()
}

/// Inputs of the standard modular runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModularSettings {
    /// Distance of the packet centers from the wedge apex.
    pub radius: f64,
    pub width: f64,
    /// ε for the Bisognano–Wichmann and modular-identity checks.
    pub epsilon: f64,
    /// ε for the KMS check.
    pub kms_epsilon: f64,
    pub rule: HermiteRule,
    pub grid: RapidityGrid,
    pub t_samples: Vec<f64>,
    pub density_epsilons: Vec<f64>,
    pub n_weight: u32,
    /// Place g in the left wedge (control run).
    pub control: bool,
    /// Reject mollified slots whose boost average moves under rule
    /// refinement. The coarse end of a convergence trend turns this off.
    pub checked: bool,
}

impl Default for ModularSettings {
    fn default() -> Self {
        ModularSettings {
            radius: 1.0,
            width: 0.15,
            epsilon: 0.5,
            kms_epsilon: 1.0,
            rule: HermiteRule::WEDGE,
            grid: RapidityGrid::default(),
            t_samples: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            density_epsilons: vec![1.0, 0.3, 0.1, 0.03],
            n_weight: 1,
            control: false,
            checked: true,
        }
    }
}

impl ModularSettings {
    /// Doubled widths, halved boost-average and rapidity resolution, with the
    /// refinement guard off so the larger residuals can be measured.
    pub fn coarse(&self) -> ModularSettings {
        ModularSettings { width: 2.0 * self.width, rule: self.rule.coarsened(), grid: self.grid.halved(), checked: false, ..self.clone() }
    }

    pub fn state(&self, state: &QuasiFreeState) -> QuasiFreeState {
        QuasiFreeState::new(state.density.clone()).with_grid(self.grid)
    }

    pub fn f_packet(&self) -> WavePacket {
        WavePacket::gaussian(SpacetimePoint::new(0.0, self.radius), self.width, self.width)
    }

    pub fn g_packet(&self) -> WavePacket {
        let (c, g) = (SpacetimePoint::new(0.05 * self.radius, 1.1 * self.radius), WavePacket::gaussian);
        let p = g(c, 0.9 * self.width, 1.1 * self.width);
        if self.control {
            p.theta().conj()
        } else {
            p
        }
    }

    /// Right-wedge packets for the modular identity.
    pub fn tomita_packets(&self) -> Vec<WavePacket> {
        let r = self.radius;
        let w = self.width;
        let one = C64::new(1.0, 0.0);
        vec![
            WavePacket::gaussian(SpacetimePoint::new(0.0, r), w, w),
            WavePacket::modulated(one, SpacetimePoint::new(0.1 * r, 1.3 * r), w, 0.8 * w, SpacetimePoint::new(0.5, 0.2)),
            WavePacket::modulated(C64::new(0.6, 0.8), SpacetimePoint::new(-0.1 * r, 1.15 * r), 0.9 * w, 1.2 * w, SpacetimePoint::ORIGIN),
            WavePacket::modulated(one, SpacetimePoint::new(0.05 * r, 0.95 * r), w, w, SpacetimePoint::new(-0.3, 0.6)),
        ]
    }

    /// A mollified packet as a tagged element.
    pub fn wedge_element(&self, p: &WavePacket, eps: f64) -> Result<BorchersElement> {
        let region = if p.tail_fraction(Region::LeftWedge) < p.tail_fraction(Region::RightWedge) {
            Region::LeftWedge
        } else {
            Region::RightWedge
        };
        let m = if self.checked { mollify_with(p, eps, self.rule)? } else { MollifiedFn::new(p.clone(), eps, self.rule) };
        Ok(BorchersElement::from_slot(m).localized(region))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModularTolerances {
    pub kms: f64,
    pub bw: f64,
    pub tomita: f64,
    pub commutation: f64,
    pub tag: f64,
}

impl Default for ModularTolerances {
    fn default() -> Self {
        ModularTolerances { kms: 1e-5, bw: 1e-5, tomita: 1e-4, commutation: 1e-6, tag: 1e-12 }
    }
}

impl ModularTolerances {
    pub fn scaled(&self, s: f64) -> ModularTolerances {
        ModularTolerances { kms: s * self.kms, bw: s * self.bw, tomita: s * self.tomita, commutation: s * self.commutation, tag: s * self.tag }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModularCheck {
    pub check: String,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<TomitaBudget>,
}

impl ModularCheck {
    fn new(check: &str, defect: f64, tolerance: f64) -> Self {
        ModularCheck { check: check.into(), defect, tolerance, pass: defect < tolerance, budget: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceDefects {
    pub j_tag_flip: f64,
    pub boost_tag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModularReport {
    pub kms_defect: f64,
    pub bw_defect: f64,
    pub tomita_defect: f64,
    pub commutation_defect: f64,
    pub covariance_defects: CovarianceDefects,
    pub kms: KmsResult,
    pub bw: BwResult,
    pub tomita: TomitaReport,
    pub structure: WedgeStructure,
    pub tolerances: ModularTolerances,
    pub checks: Vec<ModularCheck>,
    /// SHA-256 of the density and settings.
    pub fingerprint: String,
}

impl ModularReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// One row per check; budget columns are filled for the modular identity.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,defect,tolerance,pass,budget_tail,budget_quadrature,budget_series,budget_projection\n");
        for c in &self.checks {
            let b = c.budget.map_or(",,,".to_string(), |b| format!("{:e},{:e},{:e},{:e}", b.tail, b.quadrature, b.series, b.projection));
            s.push_str(&format!("{},{:e},{:e},{},{}\n", c.check, c.defect, c.tolerance, c.pass, b));
        }
        s
    }
}

pub fn fingerprint_inputs<T: Serialize>(x: &T) -> String {
    let bytes = serde_json::to_vec(x).expect("serializable");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// The KMS check on the standard pair at `settings.kms_epsilon`.
pub fn standard_kms(state: &QuasiFreeState, settings: &ModularSettings) -> Result<KmsResult> {
    let st = settings.state(state);
    let f = settings.wedge_element(&settings.f_packet(), settings.kms_epsilon)?;
    let g = settings.wedge_element(&settings.g_packet(), settings.kms_epsilon)?;
    kms_defect(&WedgeCorrelator::new(st, f, g)?, &settings.t_samples)
}

/// The Bisognano–Wichmann check on the standard pair at `settings.epsilon`.
pub fn standard_bw(state: &QuasiFreeState, settings: &ModularSettings) -> Result<BwResult> {
    let st = settings.state(state);
    let f = settings.wedge_element(&settings.f_packet(), settings.epsilon)?;
    let g = settings.wedge_element(&settings.g_packet(), settings.epsilon)?;
    bw_defect(&WedgeCorrelator::new(st, f, g)?, &settings.t_samples)
}

/// The modular identity on the standard wedge samples.
pub fn standard_tomita(state: &QuasiFreeState, settings: &ModularSettings) -> Result<TomitaReport> {
    let st = settings.state(state);
    let samples = settings
        .tomita_packets()
        .iter()
        .map(|p| AnalyticVector::new(settings.wedge_element(p, settings.epsilon)?))
        .collect::<Result<Vec<_>>>()?;
    tomita_check(&st, &samples, settings.n_weight, &TomitaConfig::default())
}

/// All modular checks on the standard inputs.
pub fn run_modular(state: &QuasiFreeState, settings: &ModularSettings, tolerances: &ModularTolerances) -> Result<ModularReport> {
    let st = settings.state(state);
    let abs = st.absolute();
    let kms = standard_kms(state, settings)?;
    let bw = standard_bw(state, settings)?;
    let tomita = standard_tomita(state, settings)?;

    let right: Vec<BorchersElement> =
        settings.tomita_packets().iter().take(2).map(|p| settings.wedge_element(p, settings.epsilon)).collect::<Result<_>>()?;
    let left: Vec<BorchersElement> = right.iter().map(|a| a.act(&PoincareElement::theta01())).collect();
    let mut probes = vec![BorchersElement::unit()];
    probes.extend(right.iter().take(1).cloned());
    let commutation = commutation_defect(&st, &abs, &right, &left, &probes)?;
    let (j_tag_flip, j_region_flipped, boost_tag) = covariance_defects(&right, &[-1.0, 0.5, 1.0]);
    let curve = density_curve(&abs, &settings.tomita_packets()[0], &settings.density_epsilons, settings.rule)?;
    let increases = curve.windows(2).filter(|w| !(w[1].defect < w[0].defect)).count();
    let structure = WedgeStructure {
        commutation,
        j_tag_flip,
        j_region_flipped,
        boost_tag,
        density_monotone: increases == 0,
        density_curve: curve,
    };

    let mut checks = vec![ModularCheck::new("kms", kms.defect, tolerances.kms), ModularCheck::new("bw", bw.defect, tolerances.bw)];
    for s in &tomita.samples {
        let mut c = ModularCheck::new(&format!("tomita {}", s.label), s.defect, tolerances.tomita);
        c.budget = Some(s.budget);
        checks.push(c);
    }
    let uncovered = tomita.samples.iter().filter(|s| s.defect > s.budget.total()).count();
    checks.push(ModularCheck { check: "tomita_budget".into(), defect: uncovered as f64, tolerance: 0.0, pass: uncovered == 0, budget: None });
    checks.push(ModularCheck::new("commutation", commutation, tolerances.commutation));
    let mut flip = ModularCheck::new("j_tag_flip", j_tag_flip, tolerances.tag);
    flip.pass &= j_region_flipped;
    checks.push(flip);
    checks.push(ModularCheck::new("boost_tag", boost_tag, tolerances.tag));
    checks.push(ModularCheck { check: "density_monotone".into(), defect: increases as f64, tolerance: 0.0, pass: increases == 0, budget: None });

    Ok(ModularReport {
        kms_defect: kms.defect,
        bw_defect: bw.defect,
        tomita_defect: tomita.defect,
        commutation_defect: commutation,
        covariance_defects: CovarianceDefects { j_tag_flip, boost_tag },
        kms,
        bw,
        tomita,
        structure,
        tolerances: *tolerances,
        checks,
        fingerprint: fingerprint_inputs(&(&state.density, settings)),
    })
}

/// Defects of the KMS, BW and modular-identity checks at coarse and
/// standard resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub coarse: [f64; 3],
    pub standard: [f64; 3],
    /// coarse / standard for each check.
    pub ratios: [f64; 3],
}

impl TrendReport {
    pub fn passes(&self, factor: f64) -> bool {
        self.ratios.iter().all(|r| *r >= factor)
    }
}

pub fn convergence_trend(state: &QuasiFreeState, standard: &ModularSettings) -> Result<TrendReport> {
    let coarse = standard.coarse();
    let run = |s: &ModularSettings| -> Result<[f64; 3]> {
        Ok([standard_kms(state, s)?.defect, standard_bw(state, s)?.defect, standard_tomita(state, s)?.defect])
    };
    let c = run(&coarse)?;
    let s = run(standard)?;
    let ratios = [c[0] / s[0].max(1e-300), c[1] / s[1].max(1e-300), c[2] / s[2].max(1e-300)];
    Ok(TrendReport { coarse: c, standard: s, ratios })
}
