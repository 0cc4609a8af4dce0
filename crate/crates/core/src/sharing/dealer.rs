//! Trusted dealer for offline correlated randomness.
//!
//! Both parties hold a `Dealer` built from the same seed. Every request draws
//! the full item (all shares) from one ChaCha20 stream and hands back only the
//! caller's share, so two parties issuing the same request sequence read the
//! same tape.

use super::PartyId;
use crate::error::{Error, Result};
use crate::fixedpoint::{Codec, Ring};
use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Random bits held both as a Boolean word and as arithmetic shares of each bit.
#[derive(Debug, Clone)]
pub struct DaBits {
    /// XOR share of r, one word per element.
    pub words: Vec<u64>,
    /// Additive shares of bit b of element i at `i * bits + b`.
    pub arith: Vec<Ring>,
    pub bits: u32,
}

pub struct Dealer {
    rng: ChaCha20Rng,
    party: PartyId,
    issued: u64,
    budget: Option<u64>,
    offline_bytes: u64,
    force_singular: u32,
}

impl Dealer {
    pub fn new(seed: u64, party: PartyId) -> Self {
        Dealer {
            rng: ChaCha20Rng::seed_from_u64(seed),
            party,
            issued: 0,
            budget: None,
            offline_bytes: 0,
            force_singular: 0,
        }
    }

    /// Cap the number of items (words of correlated randomness) the tape holds.
    pub fn with_budget(mut self, items: u64) -> Self {
        self.budget = Some(items);
        self
    }

    /// Make the next `k` invertible-mask draws singular, to exercise retry paths.
    pub fn force_singular_draws(&mut self, k: u32) {
        self.force_singular = k;
    }

    pub fn issued(&self) -> u64 {
        self.issued
    }

    /// Bytes of dealer material delivered to this party since the last call.
    pub fn take_offline_bytes(&mut self) -> u64 {
        std::mem::take(&mut self.offline_bytes)
    }

    fn charge(&mut self, words: usize) -> Result<()> {
        let next = self.issued + words as u64;
        if let Some(b) = self.budget {
            if next > b {
                return Err(Error::DealerExhausted(self.issued));
            }
        }
        self.issued = next;
        self.offline_bytes += 8 * words as u64;
        Ok(())
    }

    fn split(&mut self, v: Ring) -> Ring {
        let r = self.rng.next_u64();
        match self.party {
            PartyId::P0 => r,
            PartyId::P1 => v.wrapping_sub(r),
        }
    }

    fn split_xor(&mut self, v: u64) -> u64 {
        let r = self.rng.next_u64();
        match self.party {
            PartyId::P0 => r,
            PartyId::P1 => v ^ r,
        }
    }

    fn split_all(&mut self, vs: &[Ring]) -> Vec<Ring> {
        vs.iter().map(|&v| self.split(v)).collect()
    }

    /// Elementwise Beaver triples (a, b, ab).
    pub fn triple(&mut self, n: usize) -> Result<(Vec<Ring>, Vec<Ring>, Vec<Ring>)> {
        self.charge(3 * n)?;
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        for _ in 0..n {
            let x = self.rng.next_u64();
            let y = self.rng.next_u64();
            a.push(self.split(x));
            b.push(self.split(y));
            c.push(self.split(x.wrapping_mul(y)));
        }
        Ok((a, b, c))
    }

    /// Matrix triple: A (n×k), B (k×m), C = A·B in the ring.
    pub fn matrix_triple(
        &mut self,
        n: usize,
        k: usize,
        m: usize,
    ) -> Result<(Vec<Ring>, Vec<Ring>, Vec<Ring>)> {
        self.charge(n * k + k * m + n * m)?;
        let a: Vec<Ring> = (0..n * k).map(|_| self.rng.next_u64()).collect();
        let b: Vec<Ring> = (0..k * m).map(|_| self.rng.next_u64()).collect();
        let mut c = vec![0u64; n * m];
        for i in 0..n {
            for l in 0..k {
                let x = a[i * k + l];
                for j in 0..m {
                    c[i * m + j] = c[i * m + j].wrapping_add(x.wrapping_mul(b[l * m + j]));
                }
            }
        }
        let sa = self.split_all(&a);
        let sb = self.split_all(&b);
        let sc = self.split_all(&c);
        Ok((sa, sb, sc))
    }

    /// XOR-shared AND triples on whole words.
    pub fn and_triple(&mut self, n: usize) -> Result<(Vec<u64>, Vec<u64>, Vec<u64>)> {
        self.charge(3 * n)?;
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        for _ in 0..n {
            let x = self.rng.next_u64();
            let y = self.rng.next_u64();
            a.push(self.split_xor(x));
            b.push(self.split_xor(y));
            c.push(self.split_xor(x & y));
        }
        Ok((a, b, c))
    }

    /// `n` elements of `bits` random bits each, in Boolean and arithmetic form.
    pub fn dabits(&mut self, n: usize, bits: u32) -> Result<DaBits> {
        self.charge(n * (1 + bits as usize))?;
        let mask = if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };
        let mut words = Vec::with_capacity(n);
        let mut arith = Vec::with_capacity(n * bits as usize);
        for _ in 0..n {
            let r = self.rng.next_u64() & mask;
            words.push(self.split_xor(r));
            for b in 0..bits {
                arith.push(self.split((r >> b) & 1));
            }
        }
        Ok(DaBits { words, arith, bits })
    }

    pub fn zero(&mut self, n: usize) -> Result<Vec<Ring>> {
        self.charge(n)?;
        Ok((0..n).map(|_| self.split(0)).collect())
    }

    /// Shares of uniformly random ring elements.
    pub fn random(&mut self, n: usize) -> Result<Vec<Ring>> {
        self.charge(n)?;
        let vals: Vec<Ring> = (0..n).map(|_| self.rng.next_u64()).collect();
        Ok(self.split_all(&vals))
    }

    /// Shares of random fixed-point reals, each uniform in [-scale, scale].
    pub fn fixed_random(&mut self, n: usize, scale: f64, codec: &Codec) -> Result<Vec<Ring>> {
        self.charge(n)?;
        let vals: Vec<Ring> = (0..n)
            .map(|_| codec.encode_unchecked(self.rng.gen_range(-scale..=scale)))
            .collect();
        Ok(self.split_all(&vals))
    }

    /// Shares of a random invertible k×k fixed-point mask whose condition
    /// number (2-norm) is at most `cond_bound`.
    pub fn invertible_mask(&mut self, k: usize, cond_bound: f64, codec: &Codec) -> Result<Vec<Ring>> {
        self.charge(k * k)?;
        loop {
            let vals: Vec<f64> = if k == 1 {
                let mag = self.rng.gen_range(0.5..2.0);
                vec![if self.rng.gen::<bool>() { mag } else { -mag }]
            } else {
                (0..k * k).map(|_| self.rng.gen_range(-1.0..1.0)).collect()
            };
            let enc: Vec<Ring> = vals.iter().map(|&v| codec.encode_unchecked(v)).collect();
            let dec: Vec<f64> = enc.iter().map(|&v| codec.decode(v)).collect();
            if condition_number(&dec, k).is_some_and(|c| c <= cond_bound) {
                return Ok(self.split_all(&enc));
            }
        }
    }

    /// Shares of a random k×k fixed-point matrix drawn for invertibility testing.
    /// Draws are singular while a forced-singular count is pending.
    pub fn candidate_mask(&mut self, k: usize, codec: &Codec) -> Result<Vec<Ring>> {
        self.charge(k * k)?;
        let vals: Vec<Ring> = if self.force_singular > 0 {
            self.force_singular -= 1;
            for _ in 0..k * k {
                self.rng.next_u64();
            }
            vec![0; k * k]
        } else {
            (0..k * k)
                .map(|_| codec.encode_unchecked(self.rng.gen_range(-1.0..1.0)))
                .collect()
        };
        Ok(self.split_all(&vals))
    }
}

/// 2-norm condition number of a row-major k×k matrix; `None` when singular.
pub fn condition_number(m: &[f64], k: usize) -> Option<f64> {
    let mat = DMatrix::from_row_slice(k, k, m);
    let sv = mat.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= f64::EPSILON * max.max(1e-300) || min == 0.0 {
        None
    } else {
        Some(max / min)
    }
}
