//! Fixed-point reals in the ring Z_2^64.
//!
//! A real x is stored as round(x * 2^p) in two's complement. Products carry
//! 2p fractional bits until [`truncate_local`] shifts them back down.

use crate::error::{Error, Result};
use crate::sharing::PartyId;
use serde::{Deserialize, Serialize};

/// A raw ring element. Arithmetic is wrapping.
pub type Ring = u64;

pub const WORD_BITS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codec {
    pub precision_p: u32,
    pub range_e: u32,
    pub word_bits: u32,
    pub slack: u32,
}

impl Default for Codec {
    fn default() -> Self {
        Codec { precision_p: 13, range_e: 16, word_bits: WORD_BITS, slack: 6 }
    }
}

impl Codec {
    pub fn new(precision_p: u32, range_e: u32, slack: u32) -> Result<Self> {
        let c = Codec { precision_p, range_e, word_bits: WORD_BITS, slack };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.word_bits != WORD_BITS {
            return Err(Error::Config(format!(
                "word_bits = {} unsupported; only 64-bit rings are implemented",
                self.word_bits
            )));
        }
        if self.precision_p == 0 || self.range_e < 2 {
            return Err(Error::Config("precision_p must be > 0 and range_e >= 2".into()));
        }
        if 2 * self.precision_p + 2 * self.range_e + self.slack > self.word_bits {
            return Err(Error::Config(format!(
                "2p + 2e + slack = {} exceeds word_bits {}",
                2 * self.precision_p + 2 * self.range_e + self.slack,
                self.word_bits
            )));
        }
        Ok(())
    }

    pub fn scale(&self) -> f64 {
        (1u64 << self.precision_p) as f64
    }

    /// Largest magnitude (exclusive) accepted by [`Codec::encode`].
    pub fn bound(&self) -> f64 {
        (1u64 << (self.range_e - 1)) as f64
    }

    pub fn encode(&self, x: f64) -> Result<Ring> {
        if !x.is_finite() || x.abs() >= self.bound() {
            return Err(Error::Range { value: x, bound_exp: self.range_e - 1 });
        }
        Ok(self.encode_unchecked(x))
    }

    /// Encode without the range check; values outside the range wrap.
    pub fn encode_unchecked(&self, x: f64) -> Ring {
        // f64::round is half-away-from-zero.
        (x * self.scale()).round() as i64 as Ring
    }

    pub fn encode_vec(&self, xs: &[f64]) -> Result<Vec<Ring>> {
        xs.iter().map(|&x| self.encode(x)).collect()
    }

    pub fn decode(&self, v: Ring) -> f64 {
        v as i64 as f64 / self.scale()
    }

    pub fn decode_vec(&self, vs: &[Ring]) -> Vec<f64> {
        vs.iter().map(|&v| self.decode(v)).collect()
    }

    /// Encode at doubled precision, as a product of two encodings would be.
    pub fn encode2p(&self, x: f64) -> Ring {
        (x * self.scale() * self.scale()).round() as i64 as Ring
    }

    pub fn one(&self) -> Ring {
        1u64 << self.precision_p
    }
}

/// Signed interpretation of a ring element.
#[inline]
pub fn signed(v: Ring) -> i64 {
    v as i64
}

/// Local truncation of one party's share of a 2p-precision value.
///
/// Party 0 shifts its share arithmetically; party 1 negates, shifts and
/// negates back. The sum is off by at most one unit except when the shares
/// straddle the wrap point, which happens with probability about |x|/2^63.
#[inline]
pub fn truncate_local(share: Ring, p: u32, party: PartyId) -> Ring {
    match party {
        PartyId::P0 => ((share as i64) >> p) as Ring,
        PartyId::P1 => (((share.wrapping_neg()) as i64) >> p).wrapping_neg() as Ring,
    }
}

pub fn truncate_vec(shares: &mut [Ring], p: u32, party: PartyId) {
    for s in shares.iter_mut() {
        *s = truncate_local(*s, p, party);
    }
}

/// Plaintext truncation used by reference paths: arithmetic shift.
#[inline]
pub fn truncate_plain(v: Ring, p: u32) -> Ring {
    ((v as i64) >> p) as Ring
}

/// Row-major fixed-point matrix product on plaintext ring values, truncated once.
pub fn matmul_plain(a: &[Ring], b: &[Ring], n: usize, k: usize, m: usize, p: u32) -> Vec<Ring> {
    let mut out = vec![0u64; n * m];
    for i in 0..n {
        for l in 0..k {
            let x = a[i * k + l];
            if x == 0 {
                continue;
            }
            let row = &b[l * m..(l + 1) * m];
            let dst = &mut out[i * m..(i + 1) * m];
            for (d, &y) in dst.iter_mut().zip(row) {
                *d = d.wrapping_add(x.wrapping_mul(y));
            }
        }
    }
    for v in out.iter_mut() {
        *v = truncate_plain(*v, p);
    }
    out
}
