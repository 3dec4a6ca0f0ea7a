//! The Sobolev-type majorant p̲ = Σ_n p_n with
//! p_n(f_n) = c_n (∫ Π_l (1 + |x_l|²)^N |f_n|²)^{1/2}.
//!
//! Integrals are closed-form Gaussian moments on the packet family.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::borchers::{BorchersElement, Multiplier, MultiplierFactor, Slot, TensorTerm};
use crate::error::{Error, Result};
use crate::testfunctions::{PacketTerm, WavePacket, C64};

/// One light-cone direction of the product conj(p)·q: ∫ dy of
/// exp(−(y−a)²/2α² + i b_p(y−a) − (y−a′)²/2β² − i b_q(y−a′)).
/// Returns the integral and the complex mean and variance of y.
fn axis_integral(a: f64, alpha: f64, bp: f64, a2: f64, beta: f64, bq: f64) -> (C64, C64, f64) {
    let (s2, t2) = (alpha * alpha, beta * beta);
    let sum = s2 + t2;
    let d = a2 - a;
    let db = bp - bq;
    let re = -d * d / (2.0 * sum) - db * db * s2 * t2 / (2.0 * sum);
    let im = d * db * s2 / sum + bq * d;
    let val = (2.0 * PI).sqrt() * alpha * beta / sum.sqrt() * C64::new(re, im).exp();
    let mean = C64::new(a + d * s2 / sum, db * s2 * t2 / sum);
    (val, mean, s2 * t2 / sum)
}

/// ∫ conj(p(x)) q(x) (1 + |x|²)^N d²x for single terms, N ≤ 2.
///
/// Both terms are diagonal Gaussians in lab light-cone coordinates, so the
/// integral factorizes into u and v parts with d²x = du dv / 2.
pub fn term_inner(p: &PacketTerm, q: &PacketTerm, n: u32) -> C64 {
    let (pu, pv) = p.effective_widths();
    let (qu, qv) = q.effective_widths();
    // k·x = (k.v/2) u + (k.u/2) v.
    let (iu, mu, su) = axis_integral(p.center.u(), pu, 0.5 * p.modulation.v(), q.center.u(), qu, 0.5 * q.modulation.v());
    let (iv, mv, sv) = axis_integral(p.center.v(), pv, 0.5 * p.modulation.u(), q.center.v(), qv, 0.5 * q.modulation.u());
    let base = p.coeff.conj() * q.coeff * iu * iv * 0.5;
    if n == 0 || base == C64::new(0.0, 0.0) {
        return base;
    }
    let m2 = |m: C64, s: f64| m * m + s;
    let m4 = |m: C64, s: f64| m * m * m * m + 6.0 * m * m * s + 3.0 * s * s;
    // |x|² = (u² + v²)/2.
    let e1 = 0.5 * (m2(mu, su) + m2(mv, sv));
    let factor = match n {
        1 => 1.0 + e1,
        _ => {
            let e2 = 0.25 * (m4(mu, su) + 2.0 * m2(mu, su) * m2(mv, sv) + m4(mv, sv));
            1.0 + 2.0 * e1 + e2
        }
    };
    base * factor
}

/// Weighted L² product of two packets.
pub fn packet_inner(f: &WavePacket, g: &WavePacket, n: u32) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for p in &f.terms {
        for q in &g.terms {
            acc += term_inner(p, q, n);
        }
    }
    acc
}

type InnerKey = (String, String, u32);

fn inner_cache() -> &'static Mutex<HashMap<InnerKey, C64>> {
    static CACHE: OnceLock<Mutex<HashMap<InnerKey, C64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

const INNER_CACHE_LIMIT: usize = 200_000;

/// Weighted L² product of two slots, through their packet expansions.
/// Products involving boost averages are memoized.
pub fn slot_inner(a: &Slot, b: &Slot, n: u32) -> C64 {
    if !(a.is_analytic() || b.is_analytic()) {
        return slot_inner_direct(a, b, n);
    }
    let key = (a.fingerprint(), b.fingerprint(), n);
    if let Some(v) = inner_cache().lock().expect("cache lock").get(&key) {
        return *v;
    }
    let v = slot_inner_direct(a, b, n);
    let mut c = inner_cache().lock().expect("cache lock");
    if c.len() > INNER_CACHE_LIMIT {
        c.clear();
    }
    c.insert(key, v);
    v
}

fn slot_inner_direct(a: &Slot, b: &Slot, n: u32) -> C64 {
    let ea = a.expand();
    let eb = b.expand();
    let mut acc = C64::new(0.0, 0.0);
    for (wa, pa) in &ea {
        for (wb, pb) in &eb {
            acc += wa.conj() * wb * packet_inner(pa, pb, n);
        }
    }
    acc
}

/// (L, N, c) for one degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeNorm {
    #[serde(default)]
    pub l: u32,
    pub n: u32,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevMajorant {
    /// Entry n is used for degree n; the last entry for all higher degrees.
    pub degrees: Vec<DegreeNorm>,
}

pub const MAJORANT_SAFETY: f64 = 2.0;

impl SobolevMajorant {
    pub fn new(degrees: Vec<DegreeNorm>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::InvalidArgument("majorant needs at least the degree-0 entry".into()));
        }
        for d in &degrees {
            if d.l != 0 {
                return Err(Error::InvalidArgument(format!("derivative order L = {} is not supported; use L = 0", d.l)));
            }
            if d.n > 2 {
                return Err(Error::InvalidArgument(format!("weight order N = {} exceeds 2", d.n)));
            }
            if !(d.c > 0.0 && d.c.is_finite()) {
                return Err(Error::InvalidArgument(format!("constant c = {} must be positive", d.c)));
            }
        }
        Ok(SobolevMajorant { degrees })
    }

    /// c_0 = 1 and c_n = √2 (2K)^{n/2} √(n!) with weight order `n_weight`.
    pub fn from_constant(k: f64, n_weight: u32, max_degree: usize) -> Result<Self> {
        let mut degrees = vec![DegreeNorm { l: 0, n: 0, c: 1.0 }];
        let mut fact = 1.0;
        for n in 1..=max_degree {
            fact *= n as f64;
            let c = 2f64.sqrt() * (2.0 * k).powf(n as f64 / 2.0) * fact.sqrt();
            degrees.push(DegreeNorm { l: 0, n: n_weight, c });
        }
        SobolevMajorant::new(degrees)
    }

    pub fn degree(&self, n: usize) -> DegreeNorm {
        self.degrees[n.min(self.degrees.len() - 1)]
    }
}

fn sup_modulus(m: &Multiplier) -> f64 {
    m.factors
        .iter()
        .map(|f| match *f {
            MultiplierFactor::Constant { value } => value.norm(),
            MultiplierFactor::Gaussian { amplitude, .. } => amplitude.norm(),
            MultiplierFactor::Plateau { .. } => 1.0,
        })
        .product()
}

fn term_weight(t: &TensorTerm) -> C64 {
    t.coeff * t.multipliers.iter().map(sup_modulus).product::<f64>()
}

fn tensor_inner(a: &TensorTerm, b: &TensorTerm, n: u32) -> C64 {
    a.slots.iter().zip(&b.slots).fold(C64::new(1.0, 0.0), |acc, (x, y)| acc * slot_inner(x, y, n))
}

/// Squared p_n of one component, with plain terms combined exactly and
/// multiplier-decorated terms added by the triangle inequality, each with
/// its multipliers replaced by their sup modulus.
fn component_norm(terms: &[TensorTerm], n: u32) -> f64 {
    let (plain, decorated): (Vec<&TensorTerm>, Vec<&TensorTerm>) = terms.iter().partition(|t| t.multipliers.is_empty());
    let mut g = 0.0;
    for a in &plain {
        for b in &plain {
            g += (a.coeff.conj() * b.coeff * tensor_inner(a, b, n)).re;
        }
    }
    let mut norm = g.max(0.0).sqrt();
    for t in decorated {
        norm += term_weight(t).norm() * tensor_inner(t, t, n).re.max(0.0).sqrt();
    }
    norm
}

/// p̲(a) = Σ_n p_n(a_n).
pub fn sobolev_p(norm: &SobolevMajorant, a: &BorchersElement) -> f64 {
    a.components
        .iter()
        .map(|(deg, terms)| {
            let d = norm.degree(*deg);
            if *deg == 0 {
                d.c * terms.iter().map(|t| t.coeff).sum::<C64>().norm()
            } else {
                d.c * component_norm(terms, d.n)
            }
        })
        .sum()
}

/// Polarized product Σ_{n ≥ min_degree} c_n² ⟨a_n, b_n⟩_N. Decorated terms
/// enter with their multipliers replaced by the sup modulus, so the form
/// stays positive semidefinite.
pub fn sobolev_product(norm: &SobolevMajorant, a: &BorchersElement, b: &BorchersElement, min_degree: usize) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (deg, ta) in a.components.range(min_degree..) {
        let Some(tb) = b.components.get(deg) else { continue };
        let d = norm.degree(*deg);
        let mut s = C64::new(0.0, 0.0);
        for x in ta {
            for y in tb {
                s += term_weight(x).conj() * term_weight(y) * tensor_inner(x, y, d.n);
            }
        }
        acc += d.c * d.c * s;
    }
    acc
}

/// Gram matrix of slots under the weighted L² product.
pub fn slot_gram(slots: &[Slot], n: u32) -> DMatrix<C64> {
    let k = slots.len();
    let mut g = DMatrix::from_element(k, k, C64::new(0.0, 0.0));
    for i in 0..k {
        for j in i..k {
            let v = slot_inner(&slots[i], &slots[j], n);
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfunctions::SpacetimePoint;

    #[test]
    fn norm_of_unit_gaussian() {
        let f = WavePacket::gaussian(SpacetimePoint::ORIGIN, 0.7, 1.3);
        let n0 = packet_inner(&f, &f, 0).re;
        assert!((n0 - PI * 0.7 * 1.3 / 2.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_moment_against_grid() {
        let f = WavePacket::modulated(C64::new(1.0, 0.5), SpacetimePoint::new(0.3, -0.2), 0.8, 0.6, SpacetimePoint::new(0.4, 1.0));
        let g = WavePacket::modulated(C64::new(0.2, -1.0), SpacetimePoint::new(-0.1, 0.4), 0.5, 0.9, SpacetimePoint::new(-0.3, 0.2));
        for n in 0..=2u32 {
            let exact = packet_inner(&f, &g, n);
            let h = 0.02;
            let mut q = C64::new(0.0, 0.0);
            for i in -300..=300 {
                for j in -300..=300 {
                    let x = SpacetimePoint::new(i as f64 * h, j as f64 * h);
                    q += f.value(x).conj() * g.value(x) * (1.0 + x.euclid_norm2()).powi(n as i32) * h * h;
                }
            }
            assert!((q - exact).norm() < 1e-9 * exact.norm().max(1e-3), "n={n}: {q} vs {exact}");
        }
    }
}
