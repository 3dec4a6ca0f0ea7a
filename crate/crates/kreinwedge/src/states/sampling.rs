//! Seeded random test functions and elements for sampled checks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::borchers::{BorchersElement, Slot, TensorTerm};
use crate::testfunctions::{PoincareElement, SpacetimePoint, WavePacket, C64};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    rand::SeedableRng::seed_from_u64(seed)
}

fn complex(rng: &mut SampleRng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// A one-term packet near the origin with moderate widths and momenta.
pub fn random_packet(rng: &mut SampleRng) -> WavePacket {
    let center = SpacetimePoint::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let k0 = SpacetimePoint::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    WavePacket::modulated(complex(rng), center, rng.gen_range(0.4..1.0), rng.gen_range(0.4..1.0), k0)
}

/// Σ of one or two elementary tensors of each degree in `0..=max_degree`.
pub fn random_element(rng: &mut SampleRng, max_degree: usize) -> BorchersElement {
    let mut e = BorchersElement::zero();
    for n in 0..=max_degree {
        let terms = rng.gen_range(1..=2);
        for _ in 0..terms {
            let slots = (0..n).map(|_| Slot::Packet(random_packet(rng))).collect();
            e = e.with_term(TensorTerm { coeff: complex(rng), slots, multipliers: Vec::new() });
        }
    }
    e
}

/// A proper orthochronous element with |t| ≤ 1 and |a| ≤ 1.
pub fn random_poincare(rng: &mut SampleRng) -> PoincareElement {
    PoincareElement {
        rapidity: rng.gen_range(-1.0..1.0),
        translation: SpacetimePoint::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        ..PoincareElement::identity()
    }
}
