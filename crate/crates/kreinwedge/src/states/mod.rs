//! Quasi-free Wightman functionals with signed mass-shell densities.
//!
//! W(f ⊗ g) = Σ_s w_s/(4π) ∫ f̂(−k_s(θ)) ĝ(k_s(θ)) dθ with
//! k_s(θ) = m_s(cosh θ, sinh θ): the rightmost slot sits on the forward
//! shell. Higher functions are pairing sums of this kernel.

pub mod axioms;
pub mod sampling;
pub mod sobolev;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::borchers::{pairings, BorchersElement, Multiplier, Slot, TensorTerm};
use crate::error::{Error, Result};
use crate::quadrature::{pairwise_sum, RapidityGrid};
use crate::testfunctions::{SpacetimePoint, C64};

pub use axioms::{check_axioms, AxiomEntry, AxiomReport, AxiomSettings};
pub use sobolev::{packet_inner, slot_inner, sobolev_p, sobolev_product, DegreeNorm, SobolevMajorant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub mass: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassShellDensity {
    pub shells: Vec<Shell>,
}

impl MassShellDensity {
    pub fn new(shells: Vec<Shell>) -> Result<Self> {
        if shells.is_empty() {
            return Err(Error::InvalidArgument("density needs at least one shell".into()));
        }
        for s in &shells {
            if !(s.mass > 0.0 && s.mass.is_finite()) {
                return Err(Error::NoMassGap);
            }
            if !(s.weight.is_finite() && s.weight != 0.0) {
                return Err(Error::InvalidArgument(format!("shell weight must be finite and nonzero, got {}", s.weight)));
            }
        }
        Ok(MassShellDensity { shells })
    }

    pub fn free_field(mass: f64) -> Result<Self> {
        MassShellDensity::new(vec![Shell { mass, weight: 1.0 }])
    }

    /// Shells (1, +1) and (2, −1).
    pub fn ghost_pair() -> Self {
        MassShellDensity { shells: vec![Shell { mass: 1.0, weight: 1.0 }, Shell { mass: 2.0, weight: -1.0 }] }
    }

    pub fn is_positive(&self) -> bool {
        self.shells.iter().all(|s| s.weight > 0.0)
    }

    /// The same shells with weights |w|.
    pub fn absolute(&self) -> Self {
        MassShellDensity { shells: self.shells.iter().map(|s| Shell { mass: s.mass, weight: s.weight.abs() }).collect() }
    }

    pub fn min_mass(&self) -> f64 {
        self.shells.iter().map(|s| s.mass).fold(f64::INFINITY, f64::min)
    }
}

pub const STATE_DEGREE_CAP: usize = 8;
/// Relative agreement required between a grid and its panel doubling.
pub const PANEL_TOLERANCE: f64 = 1e-9;

type ShellKey = (String, u64, bool, usize, u64);

#[derive(Debug, Default)]
struct ShellCache {
    map: Mutex<HashMap<ShellKey, Arc<Vec<C64>>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasiFreeState {
    pub density: MassShellDensity,
    #[serde(default)]
    pub grid: RapidityGrid,
    #[serde(skip)]
    cache: Arc<ShellCache>,
}

impl PartialEq for QuasiFreeState {
    fn eq(&self, o: &Self) -> bool {
        self.density == o.density && self.grid == o.grid
    }
}

/// A value together with the matching absolute-value integral, used to
/// normalize defects of quantities that should vanish.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Scaled {
    pub value: C64,
    pub scale: f64,
}

/// One pair's quadrature samples: v = (w/4π) Δθ f̂_i(−k) f̂_j(k) at k.
struct PairSamples {
    vals: Vec<C64>,
    ks: Vec<SpacetimePoint>,
}

impl PairSamples {
    fn sum(&self) -> C64 {
        pairwise_sum(&self.vals)
    }

    fn abs_sum(&self) -> f64 {
        let a: Vec<f64> = self.vals.iter().map(|v| v.norm()).collect();
        pairwise_sum(&a)
    }

    /// Drop samples negligible against the pair's absolute integral.
    fn pruned(self) -> PairSamples {
        let total = self.abs_sum();
        let cut = 1e-18 * total;
        let (vals, ks) = self.vals.into_iter().zip(self.ks).filter(|(v, _)| v.norm() > cut).unzip();
        PairSamples { vals, ks }
    }
}

impl QuasiFreeState {
    pub fn new(density: MassShellDensity) -> Self {
        QuasiFreeState { density, grid: RapidityGrid::default(), cache: Arc::default() }
    }

    pub fn with_grid(mut self, grid: RapidityGrid) -> Self {
        self.grid = grid;
        self.cache = Arc::default();
        self
    }

    /// The state of the density with weights |w|, sharing no cache.
    pub fn absolute(&self) -> QuasiFreeState {
        QuasiFreeState::new(self.density.absolute()).with_grid(self.grid)
    }

    pub fn clear_cache(&self) {
        self.cache.map.lock().expect("cache lock").clear();
    }

    fn shell_vector(&self, slot: &Slot, fp: &str, mass: f64, sign: f64, grid: &RapidityGrid, thetas: &[f64]) -> Arc<Vec<C64>> {
        let key = (fp.to_string(), mass.to_bits(), sign > 0.0, grid.len(), grid.theta_max.to_bits());
        if let Some(v) = self.cache.map.lock().expect("cache lock").get(&key) {
            return v.clone();
        }
        let v = Arc::new(slot.shell_values(mass, sign, thetas));
        self.cache.map.lock().expect("cache lock").insert(key, v.clone());
        v
    }

    fn pair_samples(&self, f: &Slot, g: &Slot, grid: &RapidityGrid, nodes: &(Vec<f64>, Vec<f64>)) -> PairSamples {
        let (thetas, weights) = nodes;
        let (ff, gf) = (f.fingerprint(), g.fingerprint());
        let mut vals = Vec::with_capacity(thetas.len() * self.density.shells.len());
        let mut ks = Vec::with_capacity(vals.capacity());
        for s in &self.density.shells {
            let a = self.shell_vector(f, &ff, s.mass, -1.0, grid, thetas);
            let b = self.shell_vector(g, &gf, s.mass, 1.0, grid, thetas);
            let pre = s.weight / (4.0 * PI);
            for i in 0..thetas.len() {
                vals.push(pre * weights[i] * a[i] * b[i]);
                ks.push(SpacetimePoint::new(s.mass * thetas[i].cosh(), s.mass * thetas[i].sinh()));
            }
        }
        PairSamples { vals, ks }
    }

    /// W(f ⊗ g) on a given grid together with ∫|…|.
    pub fn two_point_on(&self, f: &Slot, g: &Slot, grid: &RapidityGrid) -> Scaled {
        let nodes = grid.nodes();
        let s = self.pair_samples(f, g, grid, &nodes);
        Scaled { value: s.sum(), scale: s.abs_sum() }
    }

    /// W(f ⊗ g), checked against the panel-doubled grid.
    pub fn two_point(&self, f: &Slot, g: &Slot) -> Result<C64> {
        let a = self.two_point_on(f, g, &self.grid);
        let b = self.two_point_on(f, g, &self.grid.doubled());
        if (a.value - b.value).norm() > PANEL_TOLERANCE * a.scale.max(b.scale) {
            return Err(Error::QuadratureUnstable(format!(
                "two-point value moves by {:.3e} under panel doubling (scale {:.3e})",
                (a.value - b.value).norm(),
                a.scale
            )));
        }
        Ok(b.value)
    }

    /// W(a) on the state's grid.
    pub fn evaluate(&self, a: &BorchersElement) -> Result<C64> {
        Ok(self.evaluate_scaled(a)?.value)
    }

    pub fn evaluate_scaled(&self, a: &BorchersElement) -> Result<Scaled> {
        self.evaluate_on(a, &self.grid)
    }

    /// W(a), failing with `QuadratureUnstable` when the panel-doubled grid
    /// disagrees beyond 1e−9 of the absolute scale.
    pub fn evaluate_checked(&self, a: &BorchersElement) -> Result<C64> {
        let x = self.evaluate_on(a, &self.grid)?;
        let y = self.evaluate_on(a, &self.grid.doubled())?;
        if (x.value - y.value).norm() > PANEL_TOLERANCE * x.scale.max(y.scale).max(1e-300) {
            return Err(Error::QuadratureUnstable(format!("evaluation moves by {:.3e} under panel doubling", (x.value - y.value).norm())));
        }
        Ok(y.value)
    }

    pub fn evaluate_on(&self, a: &BorchersElement, grid: &RapidityGrid) -> Result<Scaled> {
        let cap = a.degree_cap.min(STATE_DEGREE_CAP);
        if a.max_degree() > cap {
            return Err(Error::DegreeCapExceeded { degree: a.max_degree(), cap });
        }
        let nodes = grid.nodes();
        let terms: Vec<&TensorTerm> = a.terms().collect();
        let parts = terms.par_iter().map(|t| self.term_value(t, grid, &nodes)).collect::<Result<Vec<Scaled>>>()?;
        let vals: Vec<C64> = parts.iter().map(|p| p.value).collect();
        let scales: Vec<f64> = parts.iter().map(|p| p.scale).collect();
        Ok(Scaled { value: pairwise_sum(&vals), scale: pairwise_sum(&scales) })
    }

    fn term_value(&self, t: &TensorTerm, grid: &RapidityGrid, nodes: &(Vec<f64>, Vec<f64>)) -> Result<Scaled> {
        let n = t.degree();
        if n == 0 {
            return Ok(Scaled { value: t.coeff, scale: t.coeff.norm() });
        }
        if n % 2 == 1 {
            return Ok(Scaled::default());
        }
        let mut pair_cache: HashMap<(usize, usize), Arc<PairSamples>> = HashMap::new();
        let mut vals = Vec::new();
        let mut scales = Vec::new();
        for pairing in pairings(n) {
            let coupled: Vec<usize> =
                (0..pairing.len()).filter(|&p| t.multipliers.iter().any(|m| crosses(m, pairing[p]))).collect();
            if coupled.len() > 3 {
                return Err(Error::InvalidArgument(format!("{} coupled rapidity integrals exceed the limit of 3", coupled.len())));
            }
            let mut value = t.coeff;
            let mut scale = t.coeff.norm();
            for (p, &(i, j)) in pairing.iter().enumerate() {
                let s = pair_cache
                    .entry((i, j))
                    .or_insert_with(|| Arc::new(self.pair_samples(&t.slots[i], &t.slots[j], grid, nodes).pruned()))
                    .clone();
                scale *= s.abs_sum();
                if !coupled.contains(&p) {
                    value *= s.sum();
                }
            }
            // Multipliers whose index set swallows whole pairs see k = 0 from them.
            let internal: C64 = t
                .multipliers
                .iter()
                .filter(|m| !pairing.iter().any(|pr| crosses(m, *pr)))
                .map(|m| m.value(SpacetimePoint::ORIGIN))
                .product();
            value *= internal;
            if !coupled.is_empty() {
                let samples: Vec<Arc<PairSamples>> = coupled.iter().map(|&p| pair_cache[&pairing[p]].clone()).collect();
                let signs: Vec<Vec<f64>> = t
                    .multipliers
                    .iter()
                    .map(|m| {
                        coupled
                            .iter()
                            .map(|&p| {
                                let (i, j) = pairing[p];
                                match (m.indices.contains(&i), m.indices.contains(&j)) {
                                    (true, false) => -1.0,
                                    (false, true) => 1.0,
                                    _ => 0.0,
                                }
                            })
                            .collect()
                    })
                    .collect();
                let active: Vec<(&Multiplier, &Vec<f64>)> =
                    t.multipliers.iter().zip(&signs).filter(|(_, s)| s.iter().any(|x| *x != 0.0)).collect();
                value *= coupled_integral(&samples, &active);
            }
            vals.push(value);
            scales.push(scale);
        }
        Ok(Scaled { value: pairwise_sum(&vals), scale: pairwise_sum(&scales) })
    }

    /// F(t) = W(f ⊗ α_{(1, t·a)} g) − W(f) W(g) on a t-grid, fitted to
    /// log|F| ≈ c − rate·t.
    pub fn cluster_rate(&self, f: &BorchersElement, g: &BorchersElement, a: SpacetimePoint, ts: &[f64]) -> Result<ClusterFit> {
        if !(a.dot(&a) < 0.0) {
            return Err(Error::InvalidArgument("cluster direction must be spacelike".into()));
        }
        let wf = self.evaluate(f)?;
        let wg = self.evaluate(g)?;
        let mut pts = Vec::new();
        let mut scale: f64 = 0.0;
        for &t in ts {
            let shifted = g.act(&crate::testfunctions::PoincareElement::translation(a.scale(t)));
            let x = self.evaluate_scaled(&f.tensor(&shifted)?)?;
            let d = (x.value - wf * wg).norm();
            scale = scale.max(x.scale);
            pts.push((t, d));
        }
        if pts.iter().all(|(_, d)| *d <= 1e-14 * scale) {
            return Ok(ClusterFit { rate: f64::INFINITY, intercept: f64::NEG_INFINITY, identically_zero: true, points: pts });
        }
        let usable: Vec<(f64, f64)> = pts.iter().filter(|(_, d)| *d > 1e-14 * scale).map(|(t, d)| (*t, d.ln())).collect();
        if usable.len() < 2 {
            return Err(Error::FitUnderdetermined(format!("{} usable points", usable.len())));
        }
        let n = usable.len() as f64;
        let mt = usable.iter().map(|p| p.0).sum::<f64>() / n;
        let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = usable.iter().map(|p| (p.0 - mt).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::FitUnderdetermined("t-grid has a single distinct value".into()));
        }
        let sxy: f64 = usable.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        Ok(ClusterFit { rate: -slope, intercept: my - slope * mt, identically_zero: false, points: pts })
    }
}

fn crosses(m: &Multiplier, (i, j): (usize, usize)) -> bool {
    m.indices.contains(&i) != m.indices.contains(&j)
}

/// Σ over the tensor grid of Π_p v_p · Π_M ĥ_M(Σ_p σ_{M,p} k_p).
fn coupled_integral(samples: &[Arc<PairSamples>], mults: &[(&Multiplier, &Vec<f64>)]) -> C64 {
    let first = &samples[0];
    let rest = &samples[1..];
    let parts: Vec<C64> = (0..first.vals.len())
        .into_par_iter()
        .map(|i| {
            let mut ks = vec![SpacetimePoint::ORIGIN; samples.len()];
            ks[0] = first.ks[i];
            first.vals[i] * nested(rest, 1, &mut ks, mults)
        })
        .collect();
    pairwise_sum(&parts)
}

fn nested(rest: &[Arc<PairSamples>], depth: usize, ks: &mut Vec<SpacetimePoint>, mults: &[(&Multiplier, &Vec<f64>)]) -> C64 {
    if rest.is_empty() {
        return mults
            .iter()
            .map(|(m, signs)| {
                let k = signs.iter().zip(ks.iter()).fold(SpacetimePoint::ORIGIN, |acc, (s, k)| acc + k.scale(*s));
                m.value(k)
            })
            .product();
    }
    let s = &rest[0];
    let mut acc = Vec::with_capacity(s.vals.len());
    for i in 0..s.vals.len() {
        ks[depth] = s.ks[i];
        acc.push(s.vals[i] * nested(&rest[1..], depth + 1, ks, mults));
    }
    pairwise_sum(&acc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterFit {
    pub rate: f64,
    pub intercept: f64,
    /// Set when the connected function vanishes on the whole grid.
    pub identically_zero: bool,
    pub points: Vec<(f64, f64)>,
}
