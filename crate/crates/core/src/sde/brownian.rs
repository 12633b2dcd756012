//! Reproducible Brownian increments with dyadic refinement.
//!
//! Write the step count as `n = b·2^L` with `b` odd. Level 0 draws `b`
//! independent `N(0, T/b)` increments; each further level splits every
//! increment by a Brownian bridge. All normals come from a ChaCha8 stream
//! keyed by `(seed, path, b)`, with the level as stream id and the position
//! inside the level as word offset. Consequently the path at `n` steps is the
//! pairwise sum of the path at `2n` steps, and paths never depend on which
//! other paths are simulated.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DOMAIN: &[u8; 8] = b"SCHWIENR";
const INIT_DOMAIN: &[u8; 8] = b"SCHINITD";

fn key(seed: u64, path: u64, b: u64, domain: &[u8; 8]) -> [u8; 32] {
    let mut k = [0u8; 32];
    k[..8].copy_from_slice(&seed.to_le_bytes());
    k[8..16].copy_from_slice(&path.to_le_bytes());
    k[16..24].copy_from_slice(&b.to_le_bytes());
    k[24..].copy_from_slice(domain);
    k
}

/// Sequential standard normals from one `(key, stream)` pair; the `i`-th
/// normal always occupies words `4i..4i+4`.
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    fn new(key: [u8; 32], stream: u64, start: u64) -> NormalStream {
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        rng.set_word_pos(4 * start as u128);
        NormalStream { rng }
    }

    /// Box–Muller, cosine branch only.
    pub fn next_normal(&mut self) -> f64 {
        let x = self.rng.next_u64();
        let y = self.rng.next_u64();
        let u1 = ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (y >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Splits `n = b·2^L` with `b` odd.
pub fn dyadic_factor(n: u64) -> (u64, u32) {
    assert!(n > 0);
    let l = n.trailing_zeros();
    (n >> l, l)
}

/// The `index`-th normal of `level` for the given path; random access.
pub fn normal_at(seed: u64, path: u64, b: u64, level: u32, index: u64) -> f64 {
    NormalStream::new(key(seed, path, b, DOMAIN), level as u64, index).next_normal()
}

/// Normals for random initial data, independent of the Wiener increments.
pub fn initial_data_stream(seed: u64, path: u64) -> NormalStream {
    NormalStream::new(key(seed, path, 0, INIT_DOMAIN), 0, 0)
}

/// The `n_steps` increments of path `path` on `[0, t_end]`.
pub fn increments(seed: u64, path: u64, t_end: f64, n_steps: u64) -> Vec<f64> {
    if n_steps == 0 {
        return Vec::new();
    }
    let (b, levels) = dyadic_factor(n_steps);
    let k = key(seed, path, b, DOMAIN);
    let mut len = t_end / b as f64;
    let mut normals = NormalStream::new(k, 0, 0);
    let mut inc: Vec<f64> = (0..b).map(|_| len.sqrt() * normals.next_normal()).collect();
    for level in 1..=levels {
        let mut z = NormalStream::new(k, level as u64, 0);
        let half_sd = (len / 4.0).sqrt();
        let mut next = Vec::with_capacity(inc.len() * 2);
        for d in inc {
            let first = 0.5 * d + half_sd * z.next_normal();
            next.push(first);
            next.push(d - first);
        }
        inc = next;
        len *= 0.5;
    }
    inc
}

/// Sums consecutive groups of `factor` increments.
pub fn coarsen(inc: &[f64], factor: usize) -> Vec<f64> {
    inc.chunks(factor).map(|c| c.iter().sum()).collect()
}
