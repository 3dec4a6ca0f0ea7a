//! One-particle test functions on 2d Minkowski space.
//!
//! Conventions: signature (+,−), light-cone coordinates u = x⁰ + x¹ and
//! v = x⁰ − x¹, Fourier transform f̂(k) = ∫ e^{ik·x} f(x) d²x. A boost Λ(t)
//! scales u ↦ eᵗu and v ↦ e⁻ᵗv, and α_t f = f ∘ Λ(−t).

use std::f64::consts::PI;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub x0: f64,
    pub x1: f64,
}

impl SpacetimePoint {
    pub const ORIGIN: SpacetimePoint = SpacetimePoint { x0: 0.0, x1: 0.0 };

    pub fn new(x0: f64, x1: f64) -> Self {
        SpacetimePoint { x0, x1 }
    }

    pub fn from_light_cone(u: f64, v: f64) -> Self {
        SpacetimePoint { x0: 0.5 * (u + v), x1: 0.5 * (u - v) }
    }

    pub fn u(&self) -> f64 {
        self.x0 + self.x1
    }

    pub fn v(&self) -> f64 {
        self.x0 - self.x1
    }

    /// Minkowski product x·y = x⁰y⁰ − x¹y¹.
    pub fn dot(&self, other: &SpacetimePoint) -> f64 {
        self.x0 * other.x0 - self.x1 * other.x1
    }

    pub fn euclid_norm2(&self) -> f64 {
        self.x0 * self.x0 + self.x1 * self.x1
    }

    /// Λ(t)x.
    pub fn boosted(&self, t: f64) -> SpacetimePoint {
        let (c, s) = (t.cosh(), t.sinh());
        SpacetimePoint { x0: c * self.x0 + s * self.x1, x1: s * self.x0 + c * self.x1 }
    }

    pub fn scale(&self, a: f64) -> SpacetimePoint {
        SpacetimePoint { x0: a * self.x0, x1: a * self.x1 }
    }

    pub fn is_finite(&self) -> bool {
        self.x0.is_finite() && self.x1.is_finite()
    }
}

impl Add for SpacetimePoint {
    type Output = SpacetimePoint;
    fn add(self, o: SpacetimePoint) -> SpacetimePoint {
        SpacetimePoint { x0: self.x0 + o.x0, x1: self.x1 + o.x1 }
    }
}

impl Sub for SpacetimePoint {
    type Output = SpacetimePoint;
    fn sub(self, o: SpacetimePoint) -> SpacetimePoint {
        SpacetimePoint { x0: self.x0 - o.x0, x1: self.x1 - o.x1 }
    }
}

impl Neg for SpacetimePoint {
    type Output = SpacetimePoint;
    fn neg(self) -> SpacetimePoint {
        SpacetimePoint { x0: -self.x0, x1: -self.x1 }
    }
}

/// The 2×2 matrix of Λ(t) acting on (x⁰, x¹).
pub fn boost_matrix(t: f64) -> [[f64; 2]; 2] {
    let (c, s) = (t.cosh(), t.sinh());
    [[c, s], [s, c]]
}

/// Euclidean operator norm of Λ(t), which is e^{|t|}.
pub fn boost_matrix_norm(t: f64) -> f64 {
    t.abs().exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discrete {
    #[default]
    Identity,
    /// Θ₀,₁ : (x⁰, x¹) ↦ (−x⁰, −x¹), acting anti-linearly on functions.
    Theta01,
}

/// g x = D Λ(t) x + a with D = ±1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoincareElement {
    pub rapidity: f64,
    pub translation: SpacetimePoint,
    pub discrete: Discrete,
}

impl PoincareElement {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn boost(t: f64) -> Self {
        PoincareElement { rapidity: t, ..Self::default() }
    }

    pub fn translation(a: SpacetimePoint) -> Self {
        PoincareElement { translation: a, ..Self::default() }
    }

    pub fn theta01() -> Self {
        PoincareElement { discrete: Discrete::Theta01, ..Self::default() }
    }

    pub fn is_antilinear(&self) -> bool {
        self.discrete == Discrete::Theta01
    }

    fn sign(&self) -> f64 {
        match self.discrete {
            Discrete::Identity => 1.0,
            Discrete::Theta01 => -1.0,
        }
    }

    pub fn apply(&self, x: SpacetimePoint) -> SpacetimePoint {
        x.boosted(self.rapidity).scale(self.sign()) + self.translation
    }

    /// self ∘ other.
    pub fn compose(&self, other: &PoincareElement) -> PoincareElement {
        let discrete = if self.discrete == other.discrete { Discrete::Identity } else { Discrete::Theta01 };
        PoincareElement {
            rapidity: self.rapidity + other.rapidity,
            translation: other.translation.boosted(self.rapidity).scale(self.sign()) + self.translation,
            discrete,
        }
    }

    pub fn inverse(&self) -> PoincareElement {
        PoincareElement {
            rapidity: -self.rapidity,
            translation: self.translation.boosted(-self.rapidity).scale(-self.sign()),
            discrete: self.discrete,
        }
    }
}

/// One modulated Gaussian
/// c · exp(−Δu'²/(2w_u²) − Δv'²/(2w_v²)) · exp(−i k₀·Δ), Δ = x − a,
/// where (u', v') are the light-cone coordinates of Λ(−frame)Δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketTerm {
    pub coeff: C64,
    pub center: SpacetimePoint,
    pub widths: [f64; 2],
    pub modulation: SpacetimePoint,
    #[serde(default)]
    pub frame: f64,
}

impl PacketTerm {
    /// Widths in lab light-cone coordinates.
    pub fn effective_widths(&self) -> (f64, f64) {
        (self.widths[0] * self.frame.exp(), self.widths[1] * (-self.frame).exp())
    }

    pub fn value(&self, x: SpacetimePoint) -> C64 {
        let d = x - self.center;
        let (wu, wv) = self.effective_widths();
        let (du, dv) = (d.u() / wu, d.v() / wv);
        let g = -0.5 * (du * du + dv * dv);
        self.coeff * C64::new(g, -self.modulation.dot(&d)).exp()
    }

    pub fn fourier_at(&self, k: SpacetimePoint) -> C64 {
        let (wu, wv) = self.effective_widths();
        let q = k - self.modulation;
        let qu = 0.5 * (q.x0 - q.x1);
        let qv = 0.5 * (q.x0 + q.x1);
        let g = -0.5 * (qu * qu * wu * wu + qv * qv * wv * wv);
        self.coeff * PI * self.widths[0] * self.widths[1] * C64::new(g, k.dot(&self.center)).exp()
    }

    fn is_valid(&self) -> bool {
        self.coeff.re.is_finite()
            && self.coeff.im.is_finite()
            && self.center.is_finite()
            && self.modulation.is_finite()
            && self.frame.is_finite()
            && self.widths.iter().all(|w| w.is_finite() && *w > 0.0)
    }
}

/// Finite sum of modulated Gaussians, closed under the Poincaré group and
/// the Fourier transform.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WavePacket {
    pub terms: Vec<PacketTerm>,
}

impl WavePacket {
    pub fn zero() -> Self {
        WavePacket { terms: Vec::new() }
    }

    /// Unit-coefficient Gaussian with light-cone widths (w_u, w_v).
    pub fn gaussian(center: SpacetimePoint, wu: f64, wv: f64) -> Self {
        Self::modulated(C64::new(1.0, 0.0), center, wu, wv, SpacetimePoint::ORIGIN)
    }

    pub fn modulated(coeff: C64, center: SpacetimePoint, wu: f64, wv: f64, k0: SpacetimePoint) -> Self {
        WavePacket { terms: vec![PacketTerm { coeff, center, widths: [wu, wv], modulation: k0, frame: 0.0 }] }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == C64::new(0.0, 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.iter().all(PacketTerm::is_valid) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("packet term with non-finite data or non-positive width".into()))
        }
    }

    pub fn value(&self, x: SpacetimePoint) -> C64 {
        self.terms.iter().map(|t| t.value(x)).sum()
    }

    pub fn scaled(&self, c: C64) -> WavePacket {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff *= c;
        }
        out
    }

    pub fn plus(&self, other: &WavePacket) -> WavePacket {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        WavePacket { terms }
    }

    pub fn boosted(&self, t: f64) -> WavePacket {
        let mut out = self.clone();
        for term in &mut out.terms {
            term.center = term.center.boosted(t);
            term.modulation = term.modulation.boosted(t);
            term.frame += t;
        }
        out
    }

    pub fn translated(&self, a: SpacetimePoint) -> WavePacket {
        let mut out = self.clone();
        for term in &mut out.terms {
            term.center = term.center + a;
        }
        out
    }

    /// x ↦ conj f(−x).
    pub fn theta(&self) -> WavePacket {
        let mut out = self.clone();
        for term in &mut out.terms {
            term.center = -term.center;
            term.coeff = term.coeff.conj();
        }
        out
    }

    /// x ↦ conj f(x).
    pub fn conj(&self) -> WavePacket {
        let mut out = self.clone();
        for term in &mut out.terms {
            term.coeff = term.coeff.conj();
            term.modulation = -term.modulation;
        }
        out
    }

    /// α_g f. For Θ-type elements this is x ↦ conj f(g⁻¹x).
    pub fn act(&self, g: &PoincareElement) -> WavePacket {
        let mut f = self.clone();
        if g.is_antilinear() {
            f = f.theta();
        }
        f.boosted(g.rapidity).translated(g.translation)
    }

    pub fn fourier_at(&self, k: SpacetimePoint) -> C64 {
        self.terms.iter().map(|t| t.fourier_at(k)).sum()
    }

    /// Closed-form Fourier transform, returned as a packet in the momentum
    /// variable: `self.fourier().value(k) == self.fourier_at(k)`.
    pub fn fourier(&self) -> WavePacket {
        let terms = self
            .terms
            .iter()
            .map(|t| PacketTerm {
                coeff: t.coeff * PI * t.widths[0] * t.widths[1] * C64::new(0.0, t.modulation.dot(&t.center)).exp(),
                center: t.modulation,
                widths: [2.0 / t.widths[1], 2.0 / t.widths[0]],
                modulation: -t.center,
                frame: t.frame,
            })
            .collect();
        WavePacket { terms }
    }

    /// f̂(sign · k(θ)) with k(θ) = m(cosh θ, sinh θ).
    pub fn shell_value(&self, m: f64, sign: f64, theta: f64) -> C64 {
        let e = theta.exp();
        self.shell_value_exp(m, sign, e, 1.0 / e)
    }

    /// Same as [`shell_value`](Self::shell_value) with e^{θ}, e^{−θ} supplied.
    pub fn shell_value_exp(&self, m: f64, sign: f64, e: f64, einv: f64) -> C64 {
        let sm = sign * m;
        let mut acc = C64::new(0.0, 0.0);
        for t in &self.terms {
            let (wu, wv) = t.effective_widths();
            let qu = 0.5 * (sm * einv - (t.modulation.x0 - t.modulation.x1));
            let qv = 0.5 * (sm * e - (t.modulation.x0 + t.modulation.x1));
            let g = -0.5 * (qu * qu * wu * wu + qv * qv * wv * wv);
            let phase = 0.5 * sm * (e * t.center.v() + einv * t.center.u());
            acc += t.coeff * PI * t.widths[0] * t.widths[1] * C64::new(g, phase).exp();
        }
        acc
    }

    pub fn restrict_to_shell(&self, m: f64, sign: f64) -> Result<MassShellFn> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidArgument(format!("mass must be positive, got {m}")));
        }
        Ok(MassShellFn { mass: m, sign: sign.signum(), packet: self.clone() })
    }

    /// Σ |c_j|, an upper bound for sup |f|.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }

    /// L² norm squared, ∫ |f|² d²x, in closed form.
    pub fn l2_norm2(&self) -> f64 {
        crate::states::sobolev::packet_inner(self, self, 0).re.max(0.0)
    }

    /// Upper bound on the L² mass of f outside `region`, as a fraction of
    /// ‖f‖², from the triangle inequality over terms.
    pub fn tail_fraction(&self, region: Region) -> f64 {
        let total = self.l2_norm2();
        if total == 0.0 {
            return 0.0;
        }
        let outside: f64 = self.terms.iter().map(|t| term_outside_l2(t, region)).sum();
        outside * outside / total
    }

    /// Bounding box of centers (lo, hi) and the largest and smallest
    /// effective widths.
    pub fn extent(&self) -> Extent {
        let mut e = Extent::empty();
        for t in &self.terms {
            let (wu, wv) = t.effective_widths();
            // A light-cone width w spreads x⁰ and x¹ by w/2 each; use w as a safe radius.
            e.include(t.center, wu.max(wv), wu.min(wv));
        }
        e
    }
}

/// L² norm of one term restricted to the complement of `region`.
fn term_outside_l2(t: &PacketTerm, region: Region) -> f64 {
    let (wu, wv) = t.effective_widths();
    let c2 = t.coeff.norm_sqr();
    // |term|² integrates to |c|² π wu wv / 2 over the plane (d²x = du dv / 2).
    let total = c2 * PI * wu * wv / 2.0;
    let (ua, va) = (t.center.u(), t.center.v());
    // Outside probabilities along u and v, combined without forming 1 − p.
    let (pu, pv) = match region {
        Region::Everywhere => return 0.0,
        Region::RightWedge => (0.5 * erfc(ua / wu), 0.5 * erfc(-va / wv)),
        Region::LeftWedge => (0.5 * erfc(-ua / wu), 0.5 * erfc(va / wv)),
    };
    (total * (pu + pv - pu * pv).max(0.0)).sqrt()
}

/// Bounding data used by grid-based estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub lo: SpacetimePoint,
    pub hi: SpacetimePoint,
    pub max_width: f64,
    pub min_width: f64,
}

impl Extent {
    pub fn empty() -> Self {
        Extent {
            lo: SpacetimePoint::new(f64::INFINITY, f64::INFINITY),
            hi: SpacetimePoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
            max_width: 0.0,
            min_width: f64::INFINITY,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo.x0 > self.hi.x0
    }

    pub fn include(&mut self, c: SpacetimePoint, max_w: f64, min_w: f64) {
        self.lo = SpacetimePoint::new(self.lo.x0.min(c.x0), self.lo.x1.min(c.x1));
        self.hi = SpacetimePoint::new(self.hi.x0.max(c.x0), self.hi.x1.max(c.x1));
        self.max_width = self.max_width.max(max_w);
        self.min_width = self.min_width.min(min_w);
    }

    pub fn merge(&self, o: &Extent) -> Extent {
        if self.is_empty() {
            return *o;
        }
        if o.is_empty() {
            return *self;
        }
        Extent {
            lo: SpacetimePoint::new(self.lo.x0.min(o.lo.x0), self.lo.x1.min(o.lo.x1)),
            hi: SpacetimePoint::new(self.hi.x0.max(o.hi.x0), self.hi.x1.max(o.hi.x1)),
            max_width: self.max_width.max(o.max_width),
            min_width: self.min_width.min(o.min_width),
        }
    }
}

/// θ ↦ f̂(sign · k(θ)) for a fixed packet and mass.
#[derive(Debug, Clone, PartialEq)]
pub struct MassShellFn {
    pub mass: f64,
    pub sign: f64,
    packet: WavePacket,
}

impl MassShellFn {
    pub fn value(&self, theta: f64) -> C64 {
        self.packet.shell_value(self.mass, self.sign, theta)
    }

    pub fn sample(&self, thetas: &[f64]) -> Vec<C64> {
        thetas.iter().map(|t| self.value(*t)).collect()
    }
}

/// Localization regions used for wedge tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    RightWedge,
    LeftWedge,
    #[default]
    Everywhere,
}

impl Region {
    pub fn contains(&self, x: SpacetimePoint) -> bool {
        match self {
            Region::RightWedge => x.x1 > x.x0.abs(),
            Region::LeftWedge => -x.x1 > x.x0.abs(),
            Region::Everywhere => true,
        }
    }

    /// Image under Θ₀,₁.
    pub fn reflected(&self) -> Region {
        match self {
            Region::RightWedge => Region::LeftWedge,
            Region::LeftWedge => Region::RightWedge,
            Region::Everywhere => Region::Everywhere,
        }
    }
}

/// A region together with a bound on the L² mass fraction found outside it.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalizationTag {
    pub region: Region,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgePacketParams {
    pub center: SpacetimePoint,
    pub widths: [f64; 2],
    #[serde(default)]
    pub modulation: SpacetimePoint,
    #[serde(default = "default_right")]
    pub region: Region,
    /// Largest acceptable tail fraction.
    #[serde(default = "default_tail")]
    pub max_tail: f64,
}

fn default_right() -> Region {
    Region::RightWedge
}

fn default_tail() -> f64 {
    1e-8
}

impl WedgePacketParams {
    pub fn right(center: SpacetimePoint, width: f64) -> Self {
        WedgePacketParams {
            center,
            widths: [width, width],
            modulation: SpacetimePoint::ORIGIN,
            region: Region::RightWedge,
            max_tail: 1e-8,
        }
    }
}

/// A Gaussian packet centered in a wedge, with its certified tail bound.
pub fn make_wedge_packet(p: &WedgePacketParams) -> Result<(WavePacket, LocalizationTag)> {
    if p.region == Region::Everywhere {
        return Err(Error::Unsatisfiable("a wedge region is required".into()));
    }
    if !p.region.contains(p.center) {
        return Err(Error::Unsatisfiable(format!(
            "center ({}, {}) is not inside the {:?}",
            p.center.x0, p.center.x1, p.region
        )));
    }
    let f = WavePacket::modulated(C64::new(1.0, 0.0), p.center, p.widths[0], p.widths[1], p.modulation);
    f.validate()?;
    let tail = f.tail_fraction(p.region);
    if tail > p.max_tail {
        return Err(Error::Unsatisfiable(format!("tail fraction {tail:.3e} exceeds requested {:.3e}", p.max_tail)));
    }
    Ok((f, LocalizationTag { region: p.region, tail_bound: tail }))
}

/// A region in light-cone coordinates where a function may be large:
/// center and widths along u and v.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Patch {
    pub center: SpacetimePoint,
    pub wu: f64,
    pub wv: f64,
}

/// Anything that can be evaluated pointwise on the plane.
pub trait PointFunction {
    fn value_at(&self, x: SpacetimePoint) -> C64;
    fn extent(&self) -> Extent;

    /// Where the function lives. The default is the bounding box of the extent.
    fn patches(&self) -> Vec<Patch> {
        let e = self.extent();
        if e.is_empty() {
            return vec![];
        }
        let c = SpacetimePoint::new(0.5 * (e.lo.x0 + e.hi.x0), 0.5 * (e.lo.x1 + e.hi.x1));
        let span = (e.hi.x0 - e.lo.x0).max(e.hi.x1 - e.lo.x1) + e.max_width;
        vec![Patch { center: c, wu: span, wv: span }]
    }
}

impl PointFunction for WavePacket {
    fn value_at(&self, x: SpacetimePoint) -> C64 {
        self.value(x)
    }
    fn extent(&self) -> Extent {
        WavePacket::extent(self)
    }
    fn patches(&self) -> Vec<Patch> {
        self.terms
            .iter()
            .map(|t| {
                let (wu, wv) = t.effective_widths();
                Patch { center: t.center, wu, wv }
            })
            .collect()
    }
}

/// Pointwise difference a − b.
pub struct Difference<'a, A: ?Sized, B: ?Sized>(pub &'a A, pub &'a B);

impl<A: PointFunction + ?Sized, B: PointFunction + ?Sized> PointFunction for Difference<'_, A, B> {
    fn value_at(&self, x: SpacetimePoint) -> C64 {
        self.0.value_at(x) - self.1.value_at(x)
    }
    fn extent(&self) -> Extent {
        self.0.extent().merge(&self.1.extent())
    }
    fn patches(&self) -> Vec<Patch> {
        let mut p = self.0.patches();
        p.extend(self.1.patches());
        p
    }
}

fn weighted_sup_at<F: PointFunction + ?Sized>(f: &F, x: SpacetimePoint, l: u32, n: u32, h: f64) -> f64 {
    let w = (1.0 + x.euclid_norm2()).powf(n as f64 / 2.0);
    let at = |d0: f64, d1: f64| f.value_at(SpacetimePoint::new(x.x0 + d0 * h, x.x1 + d1 * h));
    let c = at(0.0, 0.0);
    let mut best = c.norm();
    if l >= 1 {
        let (p0, m0, p1, m1) = (at(1.0, 0.0), at(-1.0, 0.0), at(0.0, 1.0), at(0.0, -1.0));
        best = best.max(((p0 - m0) / (2.0 * h)).norm()).max(((p1 - m1) / (2.0 * h)).norm());
        if l >= 2 {
            let h2 = h * h;
            let d00 = (p0 - 2.0 * c + m0) / h2;
            let d11 = (p1 - 2.0 * c + m1) / h2;
            let d01 = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h2);
            best = best.max(d00.norm()).max(d11.norm()).max(d01.norm());
        }
    }
    w * best
}

const CANDIDATES: usize = 8;

/// A grid point that may sit in the basin of the maximum, with the
/// light-cone steps of the grid it came from.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    value: f64,
    x: SpacetimePoint,
    su: f64,
    sv: f64,
}

fn keep_best(top: &mut Vec<Candidate>, c: Candidate) {
    if top.len() < CANDIDATES || c.value > top[top.len() - 1].value {
        let at = top.iter().position(|t| c.value > t.value).unwrap_or(top.len());
        top.insert(at, c);
        top.truncate(CANDIDATES);
    }
}

/// Compass search in light-cone coordinates from a grid candidate.
fn climb<F: PointFunction + ?Sized>(f: &F, c: Candidate, l: u32, n: u32, h: f64) -> f64 {
    let (mut best, mut x) = (c.value, c.x);
    let (mut su, mut sv) = (0.5 * c.su, 0.5 * c.sv);
    let stop = 1e-7;
    let mut shrink = 1.0;
    while shrink > stop {
        let mut moved = false;
        for (du, dv) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
            let y = SpacetimePoint::from_light_cone(x.u() + du * su, x.v() + dv * sv);
            let val = weighted_sup_at(f, y, l, n, h);
            if val > best {
                best = val;
                x = y;
                moved = true;
            }
        }
        if !moved {
            su *= 0.5;
            sv *= 0.5;
            shrink *= 0.5;
        }
    }
    best
}

/// Grid estimate of sup_{x, |β| ≤ L} (1+|x|²)^{N/2} |∂^β f(x)|.
///
/// Each patch of the function is sampled on a light-cone grid reaching
/// (5 + N) widths out; the best grid points are refined by a compass search.
/// Grids double in resolution until two levels agree to a relative 1e−6.
/// The estimate is a lower bound on the true sup.
pub fn schwartz_norm<F: PointFunction + Sync + ?Sized>(f: &F, l: u32, n: u32) -> Result<f64> {
    if l > 2 {
        return Err(Error::InvalidArgument(format!("derivative order {l} exceeds stencil cap 2")));
    }
    let patches = f.patches();
    if patches.is_empty() {
        return Ok(0.0);
    }
    let wmin = patches.iter().map(|p| p.wu.min(p.wv)).fold(f64::INFINITY, f64::min);
    // Light-cone widths w spread x⁰ and x¹ by w/2.
    let h = 1e-3 * (0.5 * wmin).min(1.0);
    let reach = 5.0 + n as f64;
    let mut res = 16usize;
    let mut prev: Option<f64> = None;
    for _level in 0..5 {
        let per_patch: Vec<Vec<Candidate>> = patches
            .par_iter()
            .map(|p| {
                let mut top = Vec::with_capacity(CANDIDATES + 1);
                let (su, sv) = (2.0 * reach * p.wu / res as f64, 2.0 * reach * p.wv / res as f64);
                for i in 0..=res {
                    for j in 0..=res {
                        let u = p.center.u() - reach * p.wu + i as f64 * su;
                        let v = p.center.v() - reach * p.wv + j as f64 * sv;
                        let x = SpacetimePoint::from_light_cone(u, v);
                        keep_best(&mut top, Candidate { value: weighted_sup_at(f, x, l, n, h), x, su, sv });
                    }
                }
                top
            })
            .collect();
        let mut top = Vec::with_capacity(CANDIDATES + 1);
        for c in per_patch.into_iter().flatten() {
            keep_best(&mut top, c);
        }
        let best = top.par_iter().map(|c| climb(f, *c, l, n, h)).collect::<Vec<f64>>().into_iter().fold(0.0, f64::max);
        if best == 0.0 && prev == Some(0.0) {
            return Ok(0.0);
        }
        if let Some(p) = prev {
            if (best - p).abs() <= 1e-6 * best.max(1e-300) {
                return Ok(best.max(p));
            }
        }
        prev = Some(best);
        res *= 2;
    }
    Err(Error::ResolutionLimit(format!("sup estimate still moving after refinement, last {:.6e}", prev.unwrap_or(0.0))))
}
