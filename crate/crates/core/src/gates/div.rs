//! SecDiv: fixed-point quotient by non-restoring division on Boolean shares.
//!
//! Signs are stripped in the arithmetic domain, the magnitudes are converted
//! to Boolean shares, and each quotient bit costs one Boolean adder. A carry-in
//! is folded into bit 0 by adding `2a + c` and `2b + c`: bit 0 then generates
//! exactly c, and the sum is kept in that doubled form between iterations.

use super::{a2b, add, b2a_word, bit_mul, bool_add, check_len, sec_ltz, sub};
use crate::error::Result;
use crate::fixedpoint::{Codec, Ring};
use crate::sharing::{Op, Session};

/// Quotient width: results are bounded by 2^(e−1) in value, so e + p bits hold them.
pub fn quotient_bits(codec: &Codec) -> u32 {
    codec.range_e + codec.precision_p
}

/// SecDiv: shares of trunc(u·2^p / v), rounded toward zero. Requires v ≠ 0
/// and |u/v| < 2^(e−1); other inputs give unspecified results.
pub fn sec_div(s: &mut Session, u: &[Ring], v: &[Ring]) -> Result<Vec<Ring>> {
    check_len(u.len(), v.len(), "sec_div")?;
    let n = u.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    s.scoped(Op::SecDiv, n as u64, |s| {
        let p = s.codec.precision_p;
        let wq = quotient_bits(&s.codec);
        let first = s.party().is_first();

        let mut both = u.to_vec();
        both.extend_from_slice(v);
        let signs = sec_ltz(s, &both)?;
        let flipped = bit_mul(s, &signs, &both)?;
        let mags = sub(&both, &add(&flipped, &flipped));
        let mag_bits = a2b(s, &mags)?;
        let (num, den) = mag_bits.split_at(n);

        // Doubled remainder 2R, seeded with the bits of N = |u|·2^p above wq.
        let numer: Vec<u64> = num.iter().map(|w| w << p).collect();
        let mut rem2: Vec<u64> = numer.iter().map(|w| (w >> wq) << 1).collect();
        // Previous remainder sign as a Boolean share: 1 means non-negative.
        let mut nonneg: Vec<u64> = vec![if first { 1 } else { 0 }; n];
        let mut quot = vec![0u64; n];
        for i in (0..wq).rev() {
            let mut lhs = Vec::with_capacity(n);
            let mut rhs = Vec::with_capacity(n);
            for k in 0..n {
                let bit = (numer[k] >> i) & 1;
                let r = (rem2[k] ^ bit) << 1 | nonneg[k];
                let mask = if nonneg[k] & 1 == 1 { u64::MAX } else { 0 };
                let d = ((den[k] ^ mask) << 1) | nonneg[k];
                lhs.push(r);
                rhs.push(d);
            }
            let sum = bool_add(s, &lhs, &rhs)?;
            for k in 0..n {
                // sum = 2·R_new; its top bit is R_new's sign.
                let sign = sum[k] >> 63;
                let q = if first { sign ^ 1 } else { sign };
                nonneg[k] = q;
                quot[k] |= q << i;
                rem2[k] = sum[k];
            }
        }
        let q = b2a_word(s, &quot, wq)?;

        let (su, sv) = signs.split_at(n);
        let prod = bit_mul(s, su, sv)?;
        let sq = sub(&add(su, sv), &add(&prod, &prod));
        let fq = bit_mul(s, &sq, &q)?;
        Ok(sub(&q, &add(&fq, &fq)))
    })
}
