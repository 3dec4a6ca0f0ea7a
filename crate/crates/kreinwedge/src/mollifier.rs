//! Gaussian mollification along boost orbits and its complex continuation.
//!
//! A [`MollifiedFn`] represents
//!
//! ```text
//! α_b ∫ α_s(f) K_d(s; z) ds,   K_d(s; z) = (1/d!) ∂_z^d c_ε(s − z),
//! ```
//!
//! with c_ε(t) = (2πε)^{−1/2} e^{−t²/2ε}. Here d = 0 gives α_z(f_ε) and
//! d > 0 gives the Taylor coefficients of z ↦ α_z(f_ε). Integrals run over
//! real nodes s = Re z + √(2ε)u, and the complex part of z goes into the
//! weights.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::HermiteRule;
use crate::testfunctions::{Extent, Patch, PointFunction, PoincareElement, SpacetimePoint, WavePacket, C64};

/// c_ε(z) = (2πε)^{−1/2} e^{−z²/2ε}.
pub fn kernel_value(eps: f64, z: C64) -> C64 {
    assert!(eps > 0.0, "kernel variance must be positive");
    (-(z * z) / (2.0 * eps)).exp() / (2.0 * PI * eps).sqrt()
}

/// Physicists' Hermite polynomial H_n at a complex point.
pub fn hermite_h(n: u32, z: C64) -> C64 {
    let mut h0 = C64::new(1.0, 0.0);
    if n == 0 {
        return h0;
    }
    let mut h1 = 2.0 * z;
    for k in 1..n {
        let h2 = 2.0 * z * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

fn ln_factorial(n: u32) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollifiedFn {
    pub core: WavePacket,
    pub epsilon: f64,
    #[serde(default)]
    pub shift: C64,
    /// Taylor order d of the kernel; 0 for the function itself.
    #[serde(default)]
    pub order: u32,
    /// Translation applied after the boost average.
    #[serde(default)]
    pub translation: SpacetimePoint,
    #[serde(default)]
    pub rule: HermiteRule,
}

/// f_ε with the default Gauss–Hermite rule.
///
/// Fails with `QuadratureUnstable` when the rule and its refinement disagree
/// at sample points by more than 1e−8 relative.
pub fn mollify(f: &WavePacket, eps: f64) -> Result<MollifiedFn> {
    mollify_with(f, eps, HermiteRule::default())
}

pub fn mollify_with(f: &WavePacket, eps: f64, rule: HermiteRule) -> Result<MollifiedFn> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    f.validate()?;
    let out = MollifiedFn { core: f.clone(), epsilon: eps, shift: C64::new(0.0, 0.0), order: 0, translation: SpacetimePoint::ORIGIN, rule };
    let fine = MollifiedFn { rule: rule.refined(), ..out.clone() };
    let scale = f.sup_bound();
    for t in f.terms.iter().take(4) {
        let (wu, wv) = t.effective_widths();
        for d in [SpacetimePoint::ORIGIN, SpacetimePoint::new(0.5 * wu, 0.3 * wv), SpacetimePoint::new(-0.4 * wv, 0.6 * wu)] {
            let x = t.center + d;
            let diff = (out.value(x) - fine.value(x)).norm();
            if diff > 1e-8 * scale.max(1e-300) {
                return Err(Error::QuadratureUnstable(format!(
                    "boost average differs by {diff:.3e} under refinement at epsilon {eps}"
                )));
            }
        }
    }
    Ok(out)
}

impl MollifiedFn {
    pub fn new(core: WavePacket, epsilon: f64, rule: HermiteRule) -> Self {
        MollifiedFn { core, epsilon, shift: C64::new(0.0, 0.0), order: 0, translation: SpacetimePoint::ORIGIN, rule }
    }

    /// Quadrature nodes s_j and complex weights ω_j of the boost integral.
    pub fn nodes(&self) -> Vec<(f64, C64)> {
        let rule = self.rule.nodes();
        let (us, ws) = (&rule.0, &rule.1);
        let eps = self.epsilon;
        let (x, y) = (self.shift.re, self.shift.im);
        let a = (2.0 * eps).sqrt();
        let amp = y * y / (2.0 * eps);
        let freq = y * (2.0 / eps).sqrt();
        let d = self.order;
        let norm = if d == 0 { 1.0 } else { (-(d as f64) * 0.5 * (2.0 * eps).ln() - ln_factorial(d)).exp() };
        us.iter()
            .zip(ws.iter())
            .filter(|(_, w)| **w > 0.0)
            .map(|(&u, &w)| {
                let mut weight = w / PI.sqrt() * C64::new(amp, freq * u).exp() * norm;
                if d > 0 {
                    weight *= hermite_h(d, C64::new(u, -y / a));
                }
                (x + a * u, weight)
            })
            .collect()
    }

    /// Σ |ω_j|, the amplification of round-off relative to the core.
    pub fn weight_l1(&self) -> f64 {
        self.nodes().iter().map(|(_, w)| w.norm()).sum()
    }

    /// Pointwise value; nodes below 1e−17 of the largest weight are skipped.
    pub fn value(&self, x: SpacetimePoint) -> C64 {
        let y = x - self.translation;
        let nodes = self.nodes();
        let wmax = nodes.iter().map(|(_, w)| w.norm()).fold(0.0, f64::max);
        nodes.iter().filter(|(_, w)| w.norm() >= 1e-17 * wmax).map(|(s, w)| w * self.core.value(y.boosted(-s))).sum()
    }

    /// Fourier transform restricted to the shell: θ ↦ F̂(sign·k(θ)).
    pub fn shell_values(&self, m: f64, sign: f64, thetas: &[f64]) -> Vec<C64> {
        let nodes = self.nodes();
        let shifts: Vec<(f64, C64)> = nodes.iter().map(|(s, w)| ((-s).exp(), *w)).collect();
        let b = self.translation;
        thetas
            .iter()
            .map(|&th| {
                let e = th.exp();
                let mut acc = C64::new(0.0, 0.0);
                for (es, w) in &shifts {
                    let e2 = e * es;
                    acc += w * self.core.shell_value_exp(m, sign, e2, 1.0 / e2);
                }
                if b != SpacetimePoint::ORIGIN {
                    let k = SpacetimePoint::new(sign * m * th.cosh(), sign * m * th.sinh());
                    acc *= C64::new(0.0, k.dot(&b)).exp();
                }
                acc
            })
            .collect()
    }

    /// Expansion into weighted plain packets, Σ ω_j α_b α_{s_j}(core).
    pub fn expand(&self) -> Vec<(C64, WavePacket)> {
        self.nodes().into_iter().map(|(s, w)| (w, self.core.boosted(s).translated(self.translation))).collect()
    }

    /// α_z for complex z.
    pub fn complex_boost(&self, z: C64) -> Result<MollifiedFn> {
        if z.im != 0.0 && self.translation != SpacetimePoint::ORIGIN {
            return Err(Error::NotAnalytic("complex boost of a translated boost average".into()));
        }
        let mut out = self.clone();
        out.translation = self.translation.boosted(z.re);
        out.shift += z;
        Ok(out)
    }

    pub fn boosted(&self, t: f64) -> MollifiedFn {
        let mut out = self.clone();
        out.translation = self.translation.boosted(t);
        out.shift += t;
        out
    }

    pub fn translated(&self, a: SpacetimePoint) -> MollifiedFn {
        let mut out = self.clone();
        out.translation = out.translation + a;
        out
    }

    /// x ↦ conj F(x).
    pub fn conj(&self) -> MollifiedFn {
        MollifiedFn { core: self.core.conj(), shift: self.shift.conj(), ..self.clone() }
    }

    /// x ↦ conj F(−x).
    pub fn theta(&self) -> MollifiedFn {
        MollifiedFn { core: self.core.theta(), shift: self.shift.conj(), translation: -self.translation, ..self.clone() }
    }

    pub fn act(&self, g: &PoincareElement) -> MollifiedFn {
        let mut f = self.clone();
        if g.is_antilinear() {
            f = f.theta();
        }
        f.boosted(g.rapidity).translated(g.translation)
    }

    pub fn scaled(&self, c: C64) -> MollifiedFn {
        MollifiedFn { core: self.core.scaled(c), ..self.clone() }
    }

    /// The Taylor coefficient (1/l!) ∂_z^l α_z(self) at z = 0 (only for
    /// order-0 inputs).
    pub fn taylor_coefficient(&self, l: u32) -> Result<MollifiedFn> {
        if self.order != 0 {
            return Err(Error::InvalidArgument("Taylor coefficients of a Taylor coefficient".into()));
        }
        if l > 0 && self.translation != SpacetimePoint::ORIGIN {
            return Err(Error::NotAnalytic("z-derivative of a translated boost average".into()));
        }
        Ok(MollifiedFn { order: l, ..self.clone() })
    }
}

/// A mollified function expanded once into weighted plain packets, for
/// repeated pointwise evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Expanded {
    pub terms: Vec<(C64, WavePacket)>,
    patches: Vec<Patch>,
    extent: Extent,
}

impl MollifiedFn {
    /// The expansion without nodes below 1e−17 of the largest weight.
    pub fn expanded(&self) -> Expanded {
        let all = self.expand();
        let wmax = all.iter().map(|(w, _)| w.norm()).fold(0.0, f64::max);
        let terms = all.into_iter().filter(|(w, _)| w.norm() >= 1e-17 * wmax).collect();
        Expanded { terms, patches: self.patches(), extent: self.extent() }
    }
}

impl PointFunction for Expanded {
    fn value_at(&self, x: SpacetimePoint) -> C64 {
        self.terms.iter().map(|(w, p)| w * p.value(x)).sum()
    }

    fn extent(&self) -> Extent {
        self.extent
    }

    fn patches(&self) -> Vec<Patch> {
        self.patches.clone()
    }
}

impl PointFunction for MollifiedFn {
    fn value_at(&self, x: SpacetimePoint) -> C64 {
        self.value(x)
    }

    fn extent(&self) -> Extent {
        let nodes = self.nodes();
        let wmax = nodes.iter().map(|(_, w)| w.norm()).fold(0.0, f64::max);
        let mut e = Extent::empty();
        for (s, w) in &nodes {
            if w.norm() > 1e-10 * wmax {
                e = e.merge(&self.core.boosted(*s).translated(self.translation).extent());
            }
        }
        e
    }

    /// Boosted core patches of the significant nodes, merged over rapidity
    /// windows of width `PATCH_RAPIDITY` so that close nodes share one grid.
    fn patches(&self) -> Vec<Patch> {
        let nodes = self.nodes();
        let wmax = nodes.iter().map(|(_, w)| w.norm()).fold(0.0, f64::max);
        let kept: Vec<f64> = nodes.iter().filter(|(_, w)| w.norm() > 1e-10 * wmax).map(|(s, _)| *s).collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < kept.len() {
            let mut j = i;
            while j + 1 < kept.len() && kept[j + 1] - kept[i] <= PATCH_RAPIDITY {
                j += 1;
            }
            let per_node: Vec<Vec<Patch>> = kept[i..=j].iter().map(|s| self.core.boosted(*s).translated(self.translation).patches()).collect();
            for k in 0..per_node[0].len() {
                let (mut ulo, mut uhi, mut vlo, mut vhi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
                for p in per_node.iter().map(|ps| ps[k]) {
                    ulo = ulo.min(p.center.u() - p.wu);
                    uhi = uhi.max(p.center.u() + p.wu);
                    vlo = vlo.min(p.center.v() - p.wv);
                    vhi = vhi.max(p.center.v() + p.wv);
                }
                let center = SpacetimePoint::from_light_cone(0.5 * (ulo + uhi), 0.5 * (vlo + vhi));
                out.push(Patch { center, wu: 0.5 * (uhi - ulo), wv: 0.5 * (vhi - vlo) });
            }
            i = j + 1;
        }
        out
    }
}

/// Rapidity window merged into one sampling patch.
const PATCH_RAPIDITY: f64 = 0.25;

/// Series limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    pub cap: usize,
    /// Largest acceptable certified tail bound (relative to sup |f|).
    pub tail_tolerance: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig { cap: 40, tail_tolerance: 1e-6 }
    }
}

/// Default check radius, enough for U(iπ) plus margin.
pub const DEFAULT_SERIES_RADIUS: f64 = PI + 0.5;

/// Taylor expansion z ↦ Σ z^l f_l of α_z(F) around the current shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostSeries {
    pub coefficients: Vec<MollifiedFn>,
    pub radius_checked: f64,
    /// Certified bound on sup_x |remainder| for |z| ≤ radius_checked.
    pub tail_bound: f64,
}

impl BoostSeries {
    pub fn order(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn value(&self, z: C64, x: SpacetimePoint) -> C64 {
        let mut zl = C64::new(1.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for c in &self.coefficients {
            acc += zl * c.value(x);
            zl *= z;
        }
        acc
    }

    pub fn shell_values(&self, z: C64, m: f64, sign: f64, thetas: &[f64]) -> Vec<C64> {
        let mut acc = vec![C64::new(0.0, 0.0); thetas.len()];
        let mut zl = C64::new(1.0, 0.0);
        for c in &self.coefficients {
            for (a, v) in acc.iter_mut().zip(c.shell_values(m, sign, thetas)) {
                *a += zl * v;
            }
            zl *= z;
        }
        acc
    }
}

/// Majorants M_l ≥ r^l sup_x |f_l(x)| of the Taylor coefficients of α_z F,
/// from α_z F = e^{−z²/2ε} Σ_j (z/ε)^j/j! ∫ α_s f c_ε(s) s^j ds with
/// ‖α_s f‖_∞ ≤ sup_bound. Both factors are majorized coefficientwise. The
/// list runs past `min_len` until further terms are negligible against the
/// part beyond `min_len`.
pub fn taylor_majorants(sup_bound: f64, eps: f64, r: f64, min_len: usize) -> Vec<f64> {
    let ln_a = |i: usize| i as f64 * (r * r / (2.0 * eps)).ln() - ln_gamma(i as f64 + 1.0);
    // ∫ c_ε |s|^j = (2ε)^{j/2} Γ((j+1)/2)/√π.
    let ln_b = |j: usize| {
        j as f64 * (r / eps).ln() - ln_gamma(j as f64 + 1.0) + 0.5 * j as f64 * (2.0 * eps).ln() + ln_gamma((j as f64 + 1.0) / 2.0)
            - 0.5 * PI.ln()
    };
    let mut out = Vec::new();
    let mut beyond = 0.0;
    let lmax = min_len + 2000;
    for l in 0..=lmax {
        let mut s = 0.0;
        let mut i = 0;
        while 2 * i <= l {
            s += (ln_a(i) + ln_b(l - 2 * i)).exp();
            i += 1;
        }
        out.push(sup_bound * s);
        if l > min_len {
            beyond += s;
            if l > min_len + 20 && s < 1e-18 * beyond {
                break;
            }
        }
    }
    out
}

/// Majorant of the Taylor remainder beyond `order` on |z| ≤ r.
pub fn series_tail_bound(sup_bound: f64, eps: f64, order: usize, r: f64) -> f64 {
    if sup_bound == 0.0 {
        return 0.0;
    }
    taylor_majorants(sup_bound, eps, r, order).iter().skip(order + 1).sum()
}

/// Taylor coefficients f_l of z ↦ α_z(F) together with a certified tail
/// bound on |z| ≤ r. Fails with `TailNotCertified` when the bound exceeds
/// `cfg.tail_tolerance · sup|f|`.
pub fn expand_series(f: &MollifiedFn, order: usize, r: f64, cfg: &SeriesConfig) -> Result<BoostSeries> {
    if order > cfg.cap {
        return Err(Error::SeriesCap { requested: order, cap: cfg.cap });
    }
    let series = expand_series_uncertified(f, order, r)?;
    let scale = f.core.sup_bound();
    if series.tail_bound > cfg.tail_tolerance * scale {
        return Err(Error::TailNotCertified { bound: series.tail_bound, tolerance: cfg.tail_tolerance * scale });
    }
    Ok(series)
}

/// As [`expand_series`] but returns the series without enforcing the tail
/// tolerance or cap.
pub fn expand_series_uncertified(f: &MollifiedFn, order: usize, r: f64) -> Result<BoostSeries> {
    if f.order != 0 {
        return Err(Error::InvalidArgument("series of a Taylor coefficient".into()));
    }
    if f.shift.im != 0.0 {
        return Err(Error::InvalidArgument("series expansion requires a real base shift".into()));
    }
    let coefficients = (0..=order as u32).map(|l| f.taylor_coefficient(l)).collect::<Result<Vec<_>>>()?;
    let tail_bound = series_tail_bound(f.core.sup_bound(), f.epsilon, order, r);
    Ok(BoostSeries { coefficients, radius_checked: r, tail_bound })
}

/// ∫ e^{iat} c_{ε'}(t) α_t(F) dt, which is again a boost average with
/// variance ε + ε' and shift z + iaε', scaled by e^{−a²ε'/2}.
pub fn gaussian_spectral_avg(f: &MollifiedFn, a: f64, eps: f64) -> Result<MollifiedFn> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    if f.translation != SpacetimePoint::ORIGIN {
        return Err(Error::NotAnalytic("spectral average of a translated boost average".into()));
    }
    Ok(MollifiedFn {
        core: f.core.scaled(C64::new((-0.5 * a * a * eps).exp(), 0.0)),
        epsilon: f.epsilon + eps,
        shift: f.shift + C64::new(0.0, a * eps),
        ..f.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_at_origin() {
        assert!((kernel_value(1.0, C64::new(0.0, 0.0)).re - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn hermite_values() {
        let z = C64::new(0.3, -0.2);
        let h3 = 8.0 * z * z * z - 12.0 * z;
        assert!((hermite_h(3, z) - h3).norm() < 1e-14);
    }

    #[test]
    fn tail_bound_decreases_with_order() {
        let a = series_tail_bound(1.0, 0.5, 20, 2.0);
        let b = series_tail_bound(1.0, 0.5, 30, 2.0);
        assert!(b < a);
    }
}
