//! Keyed, counter-based random streams.
//!
//! Every stream is a ChaCha8 keystream whose 256-bit key is derived from a
//! tuple of integers, so any stream can be regenerated independently of the
//! order in which streams are consumed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one 64-bit seed.
pub fn combine(words: &[u64]) -> u64 {
    words.iter().fold(GOLDEN, |acc, &w| {
        mix64(acc.wrapping_add(GOLDEN) ^ mix64(w.wrapping_add(GOLDEN)))
    })
}

/// 64-bit FNV-1a, used to fold string labels into seeds.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed of replication `j` of the scenario labelled `label`.
pub fn replication_seed(master_seed: u64, label: &str, j: u64) -> u64 {
    combine(&[master_seed, fnv1a(label.as_bytes()), j])
}

/// A ChaCha8 stream keyed by `words`.
pub fn keyed_stream(words: &[u64]) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut acc = combine(words);
    for chunk in key.chunks_exact_mut(8) {
        acc = mix64(acc.wrapping_add(GOLDEN));
        chunk.copy_from_slice(&acc.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Uniform on the open interval `(0, 1)` from the top 52 bits of one word.
pub fn open_uniform(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Standard normal by inverse-CDF transform; consumes exactly one word.
pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    inverse_normal_cdf(open_uniform(rng))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse of the standard normal CDF on `(0, 1)`.
///
/// Acklam's rational approximation followed by one Halley step against
/// `erfc`, which brings the error to a few ulps.
pub fn inverse_normal_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability {p} outside (0, 1)");
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };

    // Halley refinement; the residual is taken on the smaller tail.
    let e = if x < 0.0 {
        normal_cdf(x) - p
    } else {
        (1.0 - p) - 0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
    };
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}
