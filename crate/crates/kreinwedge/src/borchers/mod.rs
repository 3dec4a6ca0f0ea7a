//! The graded tensor algebra over one-particle test functions.

pub mod partitions;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::mollifier::MollifiedFn;
use crate::testfunctions::{LocalizationTag, PoincareElement, Region, SpacetimePoint, WavePacket, C64};

pub use partitions::{bell_number, moebius_transform, pairings, set_partitions, MoebiusDirection, PartitionData, PartitionValue, Poly};

pub const DEFAULT_DEGREE_CAP: usize = 6;
const MERGE_TOL: f64 = 1e-14;

/// A one-particle function occupying one tensor slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Packet(WavePacket),
    Mollified(MollifiedFn),
}

impl From<WavePacket> for Slot {
    fn from(p: WavePacket) -> Self {
        Slot::Packet(p)
    }
}

impl From<MollifiedFn> for Slot {
    fn from(m: MollifiedFn) -> Self {
        Slot::Mollified(m)
    }
}

impl Slot {
    pub fn is_analytic(&self) -> bool {
        matches!(self, Slot::Mollified(_))
    }

    pub fn value(&self, x: SpacetimePoint) -> C64 {
        match self {
            Slot::Packet(p) => p.value(x),
            Slot::Mollified(m) => m.value(x),
        }
    }

    /// θ ↦ f̂(sign · k(θ)) sampled on `thetas`.
    pub fn shell_values(&self, m: f64, sign: f64, thetas: &[f64]) -> Vec<C64> {
        match self {
            Slot::Packet(p) => thetas.iter().map(|t| p.shell_value(m, sign, *t)).collect(),
            Slot::Mollified(f) => f.shell_values(m, sign, thetas),
        }
    }

    /// Weighted plain packets summing to this slot.
    pub fn expand(&self) -> Vec<(C64, WavePacket)> {
        match self {
            Slot::Packet(p) => vec![(C64::new(1.0, 0.0), p.clone())],
            Slot::Mollified(m) => m.expand(),
        }
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> Slot {
        match self {
            Slot::Packet(p) => Slot::Packet(p.conj()),
            Slot::Mollified(m) => Slot::Mollified(m.conj()),
        }
    }

    pub fn act(&self, g: &PoincareElement) -> Slot {
        match self {
            Slot::Packet(p) => Slot::Packet(p.act(g)),
            Slot::Mollified(m) => Slot::Mollified(m.act(g)),
        }
    }

    pub fn complex_boost(&self, z: C64) -> Result<Slot> {
        match self {
            Slot::Packet(p) if z.im == 0.0 => Ok(Slot::Packet(p.boosted(z.re))),
            Slot::Packet(_) => Err(Error::NotAnalytic("complex boost of an unmollified packet".into())),
            Slot::Mollified(m) => Ok(Slot::Mollified(m.complex_boost(z)?)),
        }
    }

    pub fn scaled(&self, c: C64) -> Slot {
        match self {
            Slot::Packet(p) => Slot::Packet(p.scaled(c)),
            Slot::Mollified(m) => Slot::Mollified(m.scaled(c)),
        }
    }

    /// Upper bound on ‖f · 1_{outside region}‖₂ (absolute, not a fraction).
    /// Wedges are boost invariant, so every boosted node of a boost average
    /// has the outside mass of its core.
    pub fn outside_l2(&self, region: Region) -> f64 {
        let core = match self {
            Slot::Packet(p) => return (p.tail_fraction(region) * p.l2_norm2()).sqrt(),
            Slot::Mollified(m) => m,
        };
        let shifted = core.core.translated(core.translation);
        let per_core = (shifted.tail_fraction(region) * shifted.l2_norm2()).sqrt();
        if core.translation == SpacetimePoint::ORIGIN {
            core.weight_l1() * per_core
        } else {
            // A translated boost average is not boost symmetric about the
            // wedge apex; fall back to node-by-node bounds.
            core.expand().iter().map(|(w, p)| w.norm() * (p.tail_fraction(region) * p.l2_norm2()).sqrt()).sum()
        }
    }

    pub fn l2_norm2(&self) -> f64 {
        crate::states::sobolev::slot_inner(self, self, 0).re.max(0.0)
    }

    /// Outside mass as a fraction of ‖f‖².
    pub fn tail_fraction(&self, region: Region) -> f64 {
        let n2 = self.l2_norm2();
        if n2 == 0.0 {
            return 0.0;
        }
        let o = self.outside_l2(region);
        o * o / n2
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(self)
    }
}

fn fingerprint<T: Serialize>(x: &T) -> String {
    fn normalize(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Number(n) => {
                if n.as_f64() == Some(0.0) {
                    *v = serde_json::Value::from(0.0);
                }
            }
            serde_json::Value::Array(a) => a.iter_mut().for_each(normalize),
            serde_json::Value::Object(o) => o.values_mut().for_each(normalize),
            _ => {}
        }
    }
    let mut v = serde_json::to_value(x).expect("serializable");
    normalize(&mut v);
    v.to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeDirection {
    Forward,
    Past,
}

/// One factor of a momentum-space multiplier, evaluated in the multiplier
/// frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiplierFactor {
    Constant { value: C64 },
    /// amplitude · exp(−|k − center|²/(2 width²)) with the Euclidean norm.
    Gaussian { center: SpacetimePoint, width: f64, amplitude: C64 },
    /// Forward: ½ erfc(−(k⁰ − threshold)/softness), ≈ 1 far in the future.
    /// Past: ½ erfc((k⁰ + threshold)/softness), ≈ 1 far in the past.
    Plateau { direction: ConeDirection, threshold: f64, softness: f64 },
}

impl MultiplierFactor {
    pub fn value(&self, k: SpacetimePoint) -> C64 {
        match *self {
            MultiplierFactor::Constant { value } => value,
            MultiplierFactor::Gaussian { center, width, amplitude } => {
                amplitude * (-(k - center).euclid_norm2() / (2.0 * width * width)).exp()
            }
            MultiplierFactor::Plateau { direction, threshold, softness } => {
                let v = match direction {
                    ConeDirection::Forward => 0.5 * erfc(-(k.x0 - threshold) / softness),
                    ConeDirection::Past => 0.5 * erfc((k.x0 + threshold) / softness),
                };
                C64::new(v, 0.0)
            }
        }
    }

    /// k ↦ conj(h(−k)).
    fn reflected_conj(&self) -> MultiplierFactor {
        match *self {
            MultiplierFactor::Constant { value } => MultiplierFactor::Constant { value: value.conj() },
            MultiplierFactor::Gaussian { center, width, amplitude } => {
                MultiplierFactor::Gaussian { center: -center, width, amplitude: amplitude.conj() }
            }
            MultiplierFactor::Plateau { direction, threshold, softness } => MultiplierFactor::Plateau {
                direction: match direction {
                    ConeDirection::Forward => ConeDirection::Past,
                    ConeDirection::Past => ConeDirection::Forward,
                },
                threshold,
                softness,
            },
        }
    }

    fn conj(&self) -> MultiplierFactor {
        match *self {
            MultiplierFactor::Constant { value } => MultiplierFactor::Constant { value: value.conj() },
            MultiplierFactor::Gaussian { center, width, amplitude } => {
                MultiplierFactor::Gaussian { center, width, amplitude: amplitude.conj() }
            }
            p @ MultiplierFactor::Plateau { .. } => p,
        }
    }

    /// sup |h| over a Lorentz-invariant momentum region.
    pub fn sup_over(&self, region: SpectralRegion) -> f64 {
        match *self {
            MultiplierFactor::Constant { value } => value.norm(),
            MultiplierFactor::Gaussian { center, width, amplitude } => {
                let d = region.distance(center);
                amplitude.norm() * (-d * d / (2.0 * width * width)).exp()
            }
            MultiplierFactor::Plateau { direction, threshold, softness } => match direction {
                ConeDirection::Forward => match region {
                    SpectralRegion::Origin => 0.5 * erfc(threshold / softness),
                    _ => 1.0,
                },
                ConeDirection::Past => 0.5 * erfc((region.min_energy() + threshold) / softness),
            },
        }
    }
}

/// Lorentz-invariant momentum regions used for leak bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralRegion {
    /// The closed forward cone V̄₀⁺.
    ForwardCone,
    /// {0} ∪ V̄_m⁺.
    GappedForward { mass: f64 },
    /// The single point k = 0.
    Origin,
}

impl SpectralRegion {
    fn min_energy(&self) -> f64 {
        0.0
    }

    /// Euclidean distance from `c` to the region.
    pub fn distance(&self, c: SpacetimePoint) -> f64 {
        match *self {
            SpectralRegion::Origin => c.euclid_norm2().sqrt(),
            SpectralRegion::ForwardCone => {
                if c.x0 >= c.x1.abs() {
                    return 0.0;
                }
                // Distance to the two boundary rays t(1, ±1), t ≥ 0.
                let ray = |s: f64| {
                    let t = ((c.x0 + s * c.x1) / 2.0).max(0.0);
                    (c - SpacetimePoint::new(t, s * t)).euclid_norm2().sqrt()
                };
                ray(1.0).min(ray(-1.0))
            }
            SpectralRegion::GappedForward { mass } => {
                let origin = c.euclid_norm2().sqrt();
                if c.x0 >= (mass * mass + c.x1 * c.x1).sqrt() {
                    return 0.0;
                }
                // Closest point of the hyperbola k(θ) = m(cosh θ, sinh θ).
                let dist = |th: f64| (c - SpacetimePoint::new(mass * th.cosh(), mass * th.sinh())).euclid_norm2().sqrt();
                let mut best = (f64::INFINITY, 0.0);
                let mut th = -12.0;
                while th <= 12.0 {
                    let d = dist(th);
                    if d < best.0 {
                        best = (d, th);
                    }
                    th += 0.01;
                }
                let (mut lo, mut hi) = (best.1 - 0.01, best.1 + 0.01);
                for _ in 0..100 {
                    let a = lo + (hi - lo) / 3.0;
                    let b = hi - (hi - lo) / 3.0;
                    if dist(a) < dist(b) {
                        hi = b;
                    } else {
                        lo = a;
                    }
                }
                origin.min(dist(0.5 * (lo + hi)))
            }
        }
    }
}

/// ĥ(Σ_{i ∈ indices} k_i) as a factor on some slots, with
/// ĥ(k) = Π factors(Λ(−frame)k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub indices: Vec<usize>,
    pub factors: Vec<MultiplierFactor>,
    #[serde(default)]
    pub frame: f64,
    /// Reported sup of |ĥ| over the stated spectral region.
    #[serde(default)]
    pub leak: f64,
}

impl Multiplier {
    pub fn value(&self, k: SpacetimePoint) -> C64 {
        let kb = k.boosted(-self.frame);
        self.factors.iter().fold(C64::new(1.0, 0.0), |acc, f| acc * f.value(kb))
    }

    fn shifted(&self, offset: usize) -> Multiplier {
        Multiplier { indices: self.indices.iter().map(|i| i + offset).collect(), ..self.clone() }
    }

    fn involuted(&self, degree: usize) -> Multiplier {
        let mut indices: Vec<usize> = self.indices.iter().map(|i| degree - 1 - i).collect();
        indices.sort_unstable();
        Multiplier { indices, factors: self.factors.iter().map(|f| f.reflected_conj()).collect(), ..self.clone() }
    }

    fn conjugated(&self) -> Multiplier {
        Multiplier { factors: self.factors.iter().map(|f| f.conj()).collect(), ..self.clone() }
    }
}

/// A closed-form ĥ offered to [`BorchersElement::spectral_smear`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierGenerator {
    pub factors: Vec<MultiplierFactor>,
    #[serde(default)]
    pub frame: f64,
    /// Region over which the leak sup is reported.
    pub region: SpectralRegion,
}

impl MultiplierGenerator {
    pub fn identity() -> Self {
        MultiplierGenerator { factors: vec![MultiplierFactor::Constant { value: C64::new(1.0, 0.0) }], frame: 0.0, region: SpectralRegion::Origin }
    }

    /// ≈ 1 on the past cone, ≈ 0 on V̄₀⁺; its smears generate the spectral
    /// ideal.
    pub fn past_plateau(threshold: f64, softness: f64) -> Self {
        MultiplierGenerator {
            factors: vec![MultiplierFactor::Plateau { direction: ConeDirection::Past, threshold, softness }],
            frame: 0.0,
            region: SpectralRegion::ForwardCone,
        }
    }

    /// ≈ 1 on V̄_m⁺ and ≈ 0 at k = 0 for threshold ≈ m/2.
    pub fn forward_plateau(threshold: f64, softness: f64) -> Self {
        MultiplierGenerator {
            factors: vec![MultiplierFactor::Plateau { direction: ConeDirection::Forward, threshold, softness }],
            frame: 0.0,
            region: SpectralRegion::Origin,
        }
    }

    /// A bump inside the mass gap, vanishing approximately on {0} ∪ V̄_m⁺.
    pub fn gap_bump(mass: f64) -> Self {
        MultiplierGenerator {
            factors: vec![MultiplierFactor::Gaussian {
                center: SpacetimePoint::new(0.5 * mass, 0.0),
                width: mass / 20.0,
                amplitude: C64::new(1.0, 0.0),
            }],
            frame: 0.0,
            region: SpectralRegion::GappedForward { mass },
        }
    }

    pub fn leak(&self) -> f64 {
        self.factors.iter().map(|f| f.sup_over(self.region)).product()
    }

    pub fn value(&self, k: SpacetimePoint) -> C64 {
        let kb = k.boosted(-self.frame);
        self.factors.iter().fold(C64::new(1.0, 0.0), |acc, f| acc * f.value(kb))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorTerm {
    pub coeff: C64,
    pub slots: Vec<Slot>,
    #[serde(default)]
    pub multipliers: Vec<Multiplier>,
}

impl TensorTerm {
    pub fn degree(&self) -> usize {
        self.slots.len()
    }

    fn key(&self) -> String {
        fingerprint(&(&self.slots, &self.multipliers))
    }

    fn involuted(&self) -> TensorTerm {
        let n = self.degree();
        TensorTerm {
            coeff: self.coeff.conj(),
            slots: self.slots.iter().rev().map(Slot::conj).collect(),
            multipliers: self.multipliers.iter().map(|m| m.involuted(n)).collect(),
        }
    }

    fn acted(&self, g: &PoincareElement) -> TensorTerm {
        let mut multipliers = self.multipliers.clone();
        let mut coeff = self.coeff;
        if g.is_antilinear() {
            coeff = coeff.conj();
            multipliers = multipliers.iter().map(Multiplier::conjugated).collect();
        }
        for m in &mut multipliers {
            m.frame += g.rapidity;
        }
        TensorTerm { coeff, slots: self.slots.iter().map(|s| s.act(g)).collect(), multipliers }
    }
}

/// An element of the Borchers algebra: finitely many graded components,
/// each a sum of decorated elementary tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorchersElement {
    pub components: BTreeMap<usize, Vec<TensorTerm>>,
    #[serde(default = "default_cap")]
    pub degree_cap: usize,
    #[serde(default)]
    pub localization: LocalizationTag,
}

fn default_cap() -> usize {
    DEFAULT_DEGREE_CAP
}

impl Default for BorchersElement {
    fn default() -> Self {
        BorchersElement::zero()
    }
}

impl BorchersElement {
    pub fn zero() -> Self {
        BorchersElement { components: BTreeMap::new(), degree_cap: DEFAULT_DEGREE_CAP, localization: LocalizationTag::default() }
    }

    pub fn scalar(c: C64) -> Self {
        BorchersElement::zero().with_term(TensorTerm { coeff: c, slots: Vec::new(), multipliers: Vec::new() })
    }

    /// 𝟙 = (1, 0, 0, …).
    pub fn unit() -> Self {
        BorchersElement::scalar(C64::new(1.0, 0.0))
    }

    pub fn from_slot(s: impl Into<Slot>) -> Self {
        BorchersElement::from_slots(vec![s.into()])
    }

    pub fn from_slots(slots: Vec<Slot>) -> Self {
        BorchersElement::zero().with_term(TensorTerm { coeff: C64::new(1.0, 0.0), slots, multipliers: Vec::new() })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.degree_cap = cap;
        self
    }

    pub fn with_term(mut self, t: TensorTerm) -> Self {
        self.components.entry(t.degree()).or_default().push(t);
        self.canonical()
    }

    pub fn terms(&self) -> impl Iterator<Item = &TensorTerm> {
        self.components.values().flatten()
    }

    pub fn max_degree(&self) -> usize {
        self.components.keys().next_back().copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn is_analytic(&self) -> bool {
        self.terms().all(|t| t.slots.iter().all(Slot::is_analytic))
    }

    pub fn scalar_part(&self) -> C64 {
        self.components.get(&0).map_or(C64::new(0.0, 0.0), |ts| ts.iter().map(|t| t.coeff).sum())
    }

    /// Only the degree-n component.
    pub fn component(&self, n: usize) -> BorchersElement {
        let mut out = BorchersElement { components: BTreeMap::new(), ..self.clone() };
        if let Some(ts) = self.components.get(&n) {
            out.components.insert(n, ts.clone());
        }
        out
    }

    /// Terms sorted by fingerprint, equal fingerprints merged, coefficients
    /// of modulus ≤ 1e−14 dropped.
    pub fn canonical(mut self) -> Self {
        let mut comps = BTreeMap::new();
        for (n, terms) in std::mem::take(&mut self.components) {
            let mut keyed: BTreeMap<String, TensorTerm> = BTreeMap::new();
            for t in terms {
                let k = t.key();
                match keyed.get_mut(&k) {
                    Some(e) => e.coeff += t.coeff,
                    None => {
                        keyed.insert(k, t);
                    }
                }
            }
            let kept: Vec<TensorTerm> = keyed.into_values().filter(|t| t.coeff.norm() > MERGE_TOL).collect();
            if !kept.is_empty() {
                comps.insert(n, kept);
            }
        }
        self.components = comps;
        self
    }

    pub fn plus(&self, other: &BorchersElement) -> BorchersElement {
        let mut out = self.clone();
        for (n, ts) in &other.components {
            out.components.entry(*n).or_default().extend(ts.iter().cloned());
        }
        out.degree_cap = self.degree_cap.max(other.degree_cap);
        out.localization = merge_tags(self.localization, other.localization);
        out.canonical()
    }

    pub fn minus(&self, other: &BorchersElement) -> BorchersElement {
        self.plus(&other.scaled(C64::new(-1.0, 0.0)))
    }

    pub fn scaled(&self, c: C64) -> BorchersElement {
        let mut out = self.clone();
        for t in out.components.values_mut().flatten() {
            t.coeff *= c;
        }
        out.canonical()
    }

    /// Graded product (a ⊗ b)_n = Σ_{j+l=n} a_j ⊗ b_l.
    pub fn tensor(&self, other: &BorchersElement) -> Result<BorchersElement> {
        let cap = self.degree_cap.max(other.degree_cap);
        let mut out = BorchersElement { components: BTreeMap::new(), degree_cap: cap, localization: merge_tags(self.localization, other.localization) };
        for (na, ta) in &self.components {
            for (nb, tb) in &other.components {
                if na + nb > cap {
                    return Err(Error::DegreeCapExceeded { degree: na + nb, cap });
                }
                let bucket = out.components.entry(na + nb).or_default();
                for a in ta {
                    for b in tb {
                        let mut slots = a.slots.clone();
                        slots.extend(b.slots.iter().cloned());
                        let mut multipliers = a.multipliers.clone();
                        multipliers.extend(b.multipliers.iter().map(|m| m.shifted(*na)));
                        bucket.push(TensorTerm { coeff: a.coeff * b.coeff, slots, multipliers });
                    }
                }
            }
        }
        Ok(out.canonical())
    }

    /// f ↦ f*, reversing slot order and conjugating.
    pub fn involution(&self) -> BorchersElement {
        let mut out = self.clone();
        for ts in out.components.values_mut() {
            *ts = ts.iter().map(TensorTerm::involuted).collect();
        }
        out.canonical()
    }

    /// Slot-wise real Poincaré action (anti-linear for Θ-type elements).
    pub fn act(&self, g: &PoincareElement) -> BorchersElement {
        let mut out = self.clone();
        for ts in out.components.values_mut() {
            *ts = ts.iter().map(|t| t.acted(g)).collect();
        }
        out.localization = if g.translation == SpacetimePoint::ORIGIN {
            LocalizationTag {
                region: if g.is_antilinear() { self.localization.region.reflected() } else { self.localization.region },
                tail_bound: self.localization.tail_bound,
            }
        } else {
            LocalizationTag::default()
        };
        out.canonical()
    }

    /// Slot-wise complex boost α_z. Requires mollified slots unless z is real.
    pub fn complex_boost(&self, z: C64) -> Result<BorchersElement> {
        if z.im == 0.0 {
            return Ok(self.act(&PoincareElement::boost(z.re)));
        }
        let mut out = self.clone();
        for ts in out.components.values_mut() {
            for t in ts.iter_mut() {
                if !t.multipliers.is_empty() {
                    return Err(Error::NotAnalytic("complex boost of a multiplier-decorated term".into()));
                }
                t.slots = t.slots.iter().map(|s| s.complex_boost(z)).collect::<Result<Vec<_>>>()?;
            }
        }
        out.localization = LocalizationTag::default();
        Ok(out.canonical())
    }

    /// g(f, h) = ∫ α_{(1,a)}(f) h(a) da, realized as ĥ(k₁+…+k_n) on every
    /// term. Degree 0 picks up ĥ(0).
    pub fn spectral_smear(&self, h: &MultiplierGenerator) -> BorchersElement {
        let leak = h.leak();
        let mut out = self.clone();
        for (n, ts) in out.components.iter_mut() {
            for t in ts.iter_mut() {
                if *n == 0 {
                    t.coeff *= h.value(SpacetimePoint::ORIGIN);
                } else {
                    t.multipliers.push(Multiplier { indices: (0..*n).collect(), factors: h.factors.clone(), frame: h.frame, leak });
                }
            }
        }
        out.canonical()
    }

    /// Attach a localization tag computed from the slots.
    pub fn localized(mut self, region: Region) -> BorchersElement {
        let tail = self.terms().flat_map(|t| t.slots.iter()).map(|s| s.tail_fraction(region)).fold(0.0, f64::max);
        self.localization = LocalizationTag { region, tail_bound: tail };
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<BorchersElement> {
        serde_json::from_str::<BorchersElement>(s)
            .map_err(|e| Error::InvalidArgument(format!("element JSON: {e}")))
            .and_then(|e| e.validated())
    }

    fn validated(self) -> Result<BorchersElement> {
        for (n, ts) in &self.components {
            for t in ts {
                if t.degree() != *n {
                    return Err(Error::InvalidArgument(format!("term of degree {} stored under {n}", t.degree())));
                }
                if t.multipliers.iter().any(|m| m.indices.iter().any(|i| *i >= *n)) {
                    return Err(Error::InvalidArgument("multiplier index outside the term".into()));
                }
            }
        }
        Ok(self.canonical())
    }
}

fn merge_tags(a: LocalizationTag, b: LocalizationTag) -> LocalizationTag {
    if a.region == b.region {
        LocalizationTag { region: a.region, tail_bound: a.tail_bound.max(b.tail_bound) }
    } else {
        LocalizationTag::default()
    }
}

/// f ⊗ h − h ⊗ f for spacelike-separated packets.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalityCommutator {
    pub element: BorchersElement,
    /// Light-cone separation of the centers.
    pub margin: f64,
    /// Separation of the support boxes at the stated tail level.
    pub box_margin: f64,
    pub tail_level: f64,
}

/// Support box of a packet in light-cone coordinates: the rectangle outside
/// of which each term carries at most `tail` of its L² mass.
fn support_box(f: &WavePacket, tail: f64) -> ([f64; 2], [f64; 2]) {
    // Per light-cone coordinate, mass beyond r·w is ½erfc(r); solve for r.
    let mut r = 1.0;
    while 0.5 * erfc(r) > tail && r < 40.0 {
        r += 0.01;
    }
    let mut u = [f64::INFINITY, f64::NEG_INFINITY];
    let mut v = [f64::INFINITY, f64::NEG_INFINITY];
    for t in &f.terms {
        let (wu, wv) = t.effective_widths();
        u = [u[0].min(t.center.u() - r * wu), u[1].max(t.center.u() + r * wu)];
        v = [v[0].min(t.center.v() - r * wv), v[1].max(t.center.v() + r * wv)];
    }
    (u, v)
}

fn center_box(f: &WavePacket) -> ([f64; 2], [f64; 2]) {
    support_box_with_radius(f, 0.0)
}

fn support_box_with_radius(f: &WavePacket, r: f64) -> ([f64; 2], [f64; 2]) {
    let mut u = [f64::INFINITY, f64::NEG_INFINITY];
    let mut v = [f64::INFINITY, f64::NEG_INFINITY];
    for t in &f.terms {
        let (wu, wv) = t.effective_widths();
        u = [u[0].min(t.center.u() - r * wu), u[1].max(t.center.u() + r * wu)];
        v = [v[0].min(t.center.v() - r * wv), v[1].max(t.center.v() + r * wv)];
    }
    (u, v)
}

/// Positive iff every pair of points from the two boxes is spacelike: one
/// box lies strictly right (larger u, smaller v) of the other.
fn spacelike_margin(a: ([f64; 2], [f64; 2]), b: ([f64; 2], [f64; 2])) -> f64 {
    let right = (a.0[0] - b.0[1]).min(b.1[0] - a.1[1]);
    let left = (b.0[0] - a.0[1]).min(a.1[0] - b.1[1]);
    right.max(left)
}

pub const LOCALITY_TAIL_LEVEL: f64 = 1e-12;

pub fn locality_commutator(f: &WavePacket, h: &WavePacket) -> Result<LocalityCommutator> {
    let box_margin = spacelike_margin(support_box(f, LOCALITY_TAIL_LEVEL), support_box(h, LOCALITY_TAIL_LEVEL));
    let margin = spacelike_margin(center_box(f), center_box(h));
    if !(box_margin > 0.0) {
        return Err(Error::NotSpacelike { margin: box_margin });
    }
    let fh = BorchersElement::from_slots(vec![Slot::Packet(f.clone()), Slot::Packet(h.clone())]);
    let hf = BorchersElement::from_slots(vec![Slot::Packet(h.clone()), Slot::Packet(f.clone())]);
    Ok(LocalityCommutator { element: fh.minus(&hf), margin, box_margin, tail_level: LOCALITY_TAIL_LEVEL })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet(x1: f64) -> WavePacket {
        WavePacket::gaussian(SpacetimePoint::new(0.0, x1), 0.3, 0.3)
    }

    #[test]
    fn unit_is_neutral() {
        let a = BorchersElement::from_slot(packet(1.0));
        assert_eq!(a.tensor(&BorchersElement::unit()).unwrap(), a);
        assert_eq!(BorchersElement::unit().tensor(&a).unwrap(), a);
    }

    #[test]
    fn commutator_margin() {
        let c = locality_commutator(&packet(3.0), &packet(-3.0)).unwrap();
        assert!((c.margin - 6.0).abs() < 1e-12);
        assert!(locality_commutator(&packet(3.0), &packet(3.0)).is_err());
    }

    #[test]
    fn gap_bump_leak() {
        let g = MultiplierGenerator::gap_bump(1.0);
        assert!((g.leak() - (-50.0f64).exp()).abs() < 1e-25);
    }
}
