//! Seeded pseudo-random points, jets and tensors.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jet::{Jet, JetSpace};
use crate::tensor::{JetTensor, Variance};

/// Name and version of the generator, recorded in reports.
pub const PRNG_NAME: &str = "chacha8-v1";

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for a labelled sub-task.
pub fn substream(seed: u64, stream: u64) -> SampleRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Uniform point in a coordinate box.
pub fn random_point(region: &[(f64, f64)], rng: &mut impl Rng) -> Vec<f64> {
    region.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect()
}

/// Coefficient in `[-1, 1]` determined by a per-jet key and a multi-index.
fn keyed_coefficient(key: u64, alpha: &[u8]) -> f64 {
    let mut h = key;
    for &a in alpha {
        h = h.rotate_left(8) ^ u64::from(a) ^ 0xa5;
        // splitmix64 finalizer
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    (h >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

fn keyed_jet(space: &Arc<JetSpace>, scale: f64, rng: &mut impl Rng, chart_only: bool) -> Jet {
    let key = rng.next_u64();
    let vars = space.vars();
    let coeffs = (0..space.len())
        .map(|r| {
            let alpha = space.exponents(r);
            if chart_only && alpha[vars..].iter().any(|&a| a != 0) {
                0.0
            } else {
                scale * keyed_coefficient(key, alpha)
            }
        })
        .collect();
    Jet::from_coeffs(space, space.order(), coeffs).expect("full-length coefficient vector")
}

/// Jet with Taylor coefficients in `[-scale, scale]`. Each coefficient is
/// keyed by its multi-index, so the same stream yields the same jet up to
/// truncation at every order, and one draw is consumed per jet.
pub fn random_jet(space: &Arc<JetSpace>, scale: f64, rng: &mut impl Rng) -> Jet {
    keyed_jet(space, scale, rng, false)
}

/// As [`random_jet`], with no dependence on auxiliary variables.
pub fn random_chart_jet(space: &Arc<JetSpace>, scale: f64, rng: &mut impl Rng) -> Jet {
    keyed_jet(space, scale, rng, true)
}

pub fn random_tensor(space: &Arc<JetSpace>, n: usize, slots: &[Variance], scale: f64, rng: &mut impl Rng) -> JetTensor {
    JetTensor::from_fn(n, slots, |_| random_chart_jet(space, scale, rng))
}
