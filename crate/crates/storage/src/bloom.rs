/// Block-level membership filter over (row key ++ column) pairs.
///
/// Sized for a 1% false-positive target by default: m = -n ln p / (ln 2)^2
/// bits and k = (m/n) ln 2 probes, with the probe sequence derived from two
/// 64-bit hashes. False negatives never occur.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BloomFilter {
    bits: u64,
    probes: u32,
    words: Vec<u64>,
}

pub const DEFAULT_FP_TARGET: f64 = 0.01;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

impl BloomFilter {
    /// Build a filter sized for `n` keys at the given false-positive rate.
    pub fn with_capacity(n: usize, fp_rate: f64) -> Self {
        let n = n.max(1) as f64;
        let ln2 = std::f64::consts::LN_2;
        let bits = (-(n * fp_rate.ln()) / (ln2 * ln2)).ceil().max(64.0) as u64;
        let probes = ((bits as f64 / n) * ln2).round().max(1.0) as u32;
        BloomFilter {
            bits,
            probes,
            words: vec![0; bits.div_ceil(64) as usize],
        }
    }

    pub fn from_parts(bits: u64, probes: u32, words: Vec<u64>) -> Self {
        BloomFilter {
            bits,
            probes,
            words,
        }
    }

    pub fn bit_count(&self) -> u64 {
        self.bits
    }

    pub fn probe_count(&self) -> u32 {
        self.probes
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    fn positions(&self, key: &[u8]) -> impl Iterator<Item = u64> + '_ {
        let h1 = fnv1a64(key);
        let h2 = splitmix64(h1) | 1;
        let bits = self.bits;
        (0..self.probes as u64).map(move |i| h1.wrapping_add(i.wrapping_mul(h2)) % bits)
    }

    pub fn insert(&mut self, key: &[u8]) {
        let positions: Vec<u64> = self.positions(key).collect();
        for pos in positions {
            self.words[(pos / 64) as usize] |= 1u64 << (pos % 64);
        }
    }

    pub fn contains(&self, key: &[u8]) -> bool {
        self.positions(key)
            .all(|pos| self.words[(pos / 64) as usize] & (1u64 << (pos % 64)) != 0)
    }

    /// Filter key for a (row, column) pair. Rows and columns never contain
    /// NUL bytes, so the separator is unambiguous.
    pub fn pair_key(row: &str, col: &str) -> Vec<u8> {
        let mut key = Vec::with_capacity(row.len() + 1 + col.len());
        key.extend_from_slice(row.as_bytes());
        key.push(0);
        key.extend_from_slice(col.as_bytes());
        key
    }
}
