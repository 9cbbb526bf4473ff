//! Named counter-based random numbers.
//!
//! Every random battery (bump centers, sample matrices, CG initial fields)
//! is drawn from a stream identified by `(seed, name)`. Draw `n` of a stream
//! is a pure function of `(seed, name, n)`:
//!
//! ```text
//! key     = mix(seed XOR fnv1a64(name))
//! word(n) = mix(key + (n + 1) * 0x9E3779B97F4A7C15)      (wrapping u64)
//! mix(z)  = z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!           z ^= z >>27; z *= 0x94D049BB133111EB; z ^ (z >> 31)
//! unit(n) = (word(n) >> 11) * 2^-53                       in [0, 1)
//! ```
//!
//! `fnv1a64` is the 64-bit FNV-1a hash of the UTF-8 bytes of the name
//! (offset basis 0xCBF29CE484222325, prime 0x100000001B3).

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: &str) -> Self {
        Self {
            key: mix(seed ^ fnv1a64(stream.as_bytes())),
            counter: 0,
        }
    }

    /// Word `n` of the stream, independent of the cursor.
    pub fn word_at(&self, n: u64) -> u64 {
        mix(self
            .key
            .wrapping_add(n.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        let w = self.word_at(self.counter);
        self.counter += 1;
        w
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal by Box-Muller; consumes two words.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniformly distributed unit vector in `R^m` (normalized Gaussian).
    pub fn unit_vector(&mut self, m: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..m).map(|_| self.normal()).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-8 {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    }
}
