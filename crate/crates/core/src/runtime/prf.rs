//! Pairwise correlated randomness.
//!
//! The PRF is AES-128 in counter mode: `F(k, c)` is the low 8 bytes
//! (little-endian) of `AES_k(c as u128, little-endian)`. Key `K_i` is shared
//! by parties `i` and `i+1`, so party `i` holds `K_i` as its key with the next
//! party and `K_{i-1}` as its key with the previous one.

use aes::cipher::{generic_array::GenericArray, BlockEncrypt, KeyInit};
use aes::Aes128;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::PartyId;
use crate::ring::RingElem;

pub type PrfKey = [u8; 16];

#[derive(Clone)]
pub struct Prf {
    cipher: Aes128,
}

impl Prf {
    pub fn new(key: &PrfKey) -> Self {
        Prf {
            cipher: Aes128::new(GenericArray::from_slice(key)),
        }
    }

    pub fn eval(&self, counter: u64) -> u64 {
        let mut out = [0u64; 1];
        self.fill(counter, &mut out);
        out[0]
    }

    /// `out[j] = F(k, start + j)`.
    pub fn fill(&self, start: u64, out: &mut [u64]) {
        const BATCH: usize = 64;
        let mut blocks = [GenericArray::default(); BATCH];
        for (chunk_idx, chunk) in out.chunks_mut(BATCH).enumerate() {
            let base = start.wrapping_add((chunk_idx * BATCH) as u64);
            for (j, b) in blocks.iter_mut().take(chunk.len()).enumerate() {
                *b = GenericArray::from((base.wrapping_add(j as u64) as u128).to_le_bytes());
            }
            self.cipher.encrypt_blocks(&mut blocks[..chunk.len()]);
            for (o, b) in chunk.iter_mut().zip(&blocks) {
                *o = u64::from_le_bytes(b[..8].try_into().unwrap());
            }
        }
    }
}

/// Correlated streams drawn at one shared counter position.
pub struct Correlated {
    /// Values known to this party and the next one.
    pub with_next: Vec<u64>,
    /// Values known to this party and the previous one.
    pub with_prev: Vec<u64>,
}

pub struct PrfSetup {
    with_next: Prf,
    with_prev: Prf,
    counter: u64,
}

impl PrfSetup {
    pub fn new(key_with_next: &PrfKey, key_with_prev: &PrfKey) -> Self {
        PrfSetup {
            with_next: Prf::new(key_with_next),
            with_prev: Prf::new(key_with_prev),
            counter: 0,
        }
    }

    /// The three pairwise keys derived from a common setup seed.
    pub fn keys_from_seed(seed: u64) -> [PrfKey; 3] {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut keys = [[0u8; 16]; 3];
        for k in &mut keys {
            rng.fill_bytes(k);
        }
        keys
    }

    pub fn for_party(party: PartyId, keys: &[PrfKey; 3]) -> Self {
        PrfSetup::new(&keys[party.index()], &keys[party.prev().index()])
    }

    pub fn from_seed(party: PartyId, seed: u64) -> Self {
        Self::for_party(party, &Self::keys_from_seed(seed))
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Draw `n` values from both pairwise streams and advance the counter.
    pub fn correlated(&mut self, n: usize) -> Correlated {
        let mut with_next = vec![0u64; n];
        let mut with_prev = vec![0u64; n];
        self.with_next.fill(self.counter, &mut with_next);
        self.with_prev.fill(self.counter, &mut with_prev);
        self.counter += n as u64;
        Correlated { with_next, with_prev }
    }

    /// Arithmetic zero-sharing: `alpha_i = F(K_i, c) - F(K_{i-1}, c)`; the
    /// three parties' outputs sum to zero.
    pub fn zero_share(&mut self, n: usize) -> Vec<RingElem> {
        let c = self.correlated(n);
        c.with_next
            .iter()
            .zip(&c.with_prev)
            .map(|(&a, &b)| RingElem(a.wrapping_sub(b)))
            .collect()
    }

    /// Boolean zero-sharing; the three outputs XOR to zero.
    pub fn zero_share_bool(&mut self, n: usize) -> Vec<u64> {
        let c = self.correlated(n);
        c.with_next.iter().zip(&c.with_prev).map(|(&a, &b)| a ^ b).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setups(seed: u64) -> [PrfSetup; 3] {
        PartyId::ALL.map(|p| PrfSetup::from_seed(p, seed))
    }

    #[test]
    fn zero_shares_sum_to_zero() {
        let mut s = setups(11);
        for _ in 0..10 {
            let a: Vec<_> = s.iter_mut().map(|p| p.zero_share(1_000)).collect();
            for ((x, y), z) in a[0].iter().zip(&a[1]).zip(&a[2]) {
                assert_eq!(*x + *y + *z, RingElem::ZERO);
            }
        }
    }

    #[test]
    fn bool_zero_shares_xor_to_zero() {
        let mut s = setups(12);
        let a: Vec<_> = s.iter_mut().map(|p| p.zero_share_bool(500)).collect();
        for ((x, y), z) in a[0].iter().zip(&a[1]).zip(&a[2]) {
            assert_eq!(x ^ y ^ z, 0);
        }
    }

    #[test]
    fn successive_calls_differ() {
        let mut s = PrfSetup::from_seed(PartyId::P0, 13);
        let a = s.zero_share(1);
        let b = s.zero_share(1);
        assert_ne!(a, b);
        assert_eq!(s.counter(), 2);
    }

    #[test]
    fn neighbours_share_keys() {
        let mut s = setups(14);
        let c: Vec<_> = s.iter_mut().map(|p| p.correlated(4)).collect();
        for i in 0..3 {
            assert_eq!(c[i].with_next, c[(i + 1) % 3].with_prev);
        }
    }

    #[test]
    fn replayable_from_fixed_key() {
        // AES-128 with the all-zero key on the all-zero block is the FIPS-197
        // style known answer 66e94bd4ef8a2c3b884cfa59ca342b2e.
        let prf = Prf::new(&[0u8; 16]);
        assert_eq!(
            prf.eval(0),
            u64::from_le_bytes([0x66, 0xe9, 0x4b, 0xd4, 0xef, 0x8a, 0x2c, 0x3b])
        );
        let mut batch = [0u64; 130];
        prf.fill(0, &mut batch);
        assert_eq!(batch[0], prf.eval(0));
        assert_eq!(batch[129], prf.eval(129));
    }
}
