//! Deterministic seeding and sampling helpers.
//!
//! Everything downstream of a seed must be reproducible across runs and across
//! thread schedules, so work items derive their own ChaCha streams from a
//! stable hash of (seed, tags) instead of sharing one RNG.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stable 64-bit hash of a sequence of byte strings (FNV-1a with a splitmix
/// finalizer). Not a std hasher on purpose: the value is persisted into seeds
/// and must never change between builds.
pub fn stable_hash(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for part in parts {
        // length prefix keeps ("ab","c") distinct from ("a","bc")
        for &b in &(part.len() as u64).to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        for &b in *part {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    splitmix64(h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// RNG for a work item identified by (seed, tags).
pub fn derive_rng(seed: u64, tags: &[&[u8]]) -> ChaCha8Rng {
    let mut parts: Vec<&[u8]> = Vec::with_capacity(tags.len() + 1);
    let seed_bytes = seed.to_le_bytes();
    parts.push(&seed_bytes);
    parts.extend_from_slice(tags);
    ChaCha8Rng::seed_from_u64(stable_hash(&parts))
}

/// Standard normal draw via Box-Muller (two uniforms per draw, no state).
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen::<f64>();
        if u1 <= f64::MIN_POSITIVE {
            continue;
        }
        let u2: f64 = rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        return r * (2.0 * std::f64::consts::PI * u2).cos();
    }
}

/// Gamma draw with the given mean and standard deviation
/// (Marsaglia-Tsang; shape boost for shape < 1). `std == 0` returns the mean.
pub fn gamma(mean: f64, std: f64, rng: &mut ChaCha8Rng) -> f64 {
    assert!(mean > 0.0 && std >= 0.0, "gamma requires mean > 0, std >= 0");
    if std == 0.0 {
        return mean;
    }
    let shape = (mean / std) * (mean / std);
    let scale = std * std / mean;
    gamma_shape(shape, rng) * scale
}

fn gamma_shape(shape: f64, rng: &mut ChaCha8Rng) -> f64 {
    if shape < 1.0 {
        let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
        return gamma_shape(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = standard_normal(rng);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u: f64 = rng.gen();
        if u < 1.0 - 0.0331 * x * x * x * x {
            return d * v;
        }
        if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_hash_distinguishes_part_boundaries() {
        assert_ne!(stable_hash(&[b"ab", b"c"]), stable_hash(&[b"a", b"bc"]));
        assert_eq!(stable_hash(&[b"ab", b"c"]), stable_hash(&[b"ab", b"c"]));
    }

    #[test]
    fn derive_rng_is_reproducible() {
        let mut a = derive_rng(42, &[b"tree", &7u64.to_le_bytes()]);
        let mut b = derive_rng(42, &[b"tree", &7u64.to_le_bytes()]);
        for _ in 0..16 {
            assert_eq!(a.gen::<u64>(), b.gen::<u64>());
        }
    }

    #[test]
    fn gamma_moments_roughly_match() {
        let mut rng = derive_rng(1, &[b"gamma"]);
        let n = 40_000;
        let (mean, std) = (1.6, 0.25);
        let draws: Vec<f64> = (0..n).map(|_| gamma(mean, std, &mut rng)).collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let v = draws.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / n as f64;
        assert!((m - mean).abs() < 0.01, "mean {m}");
        assert!((v.sqrt() - std).abs() < 0.01, "std {}", v.sqrt());
    }
}
