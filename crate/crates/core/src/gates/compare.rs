//! Comparison through Boolean conversion.
//!
//! A2B treats the two additive shares as two Boolean-shared addends and adds
//! them with a Kogge-Stone carry network on bit-sliced 64-bit words: one AND
//! round for the generate bits, then six prefix levels.

use super::{check_len, not_bits, sec_mul_exact, sec_sel, sub};
use crate::error::Result;
use crate::fixedpoint::Ring;
use crate::sharing::{Op, PartyId, Session};

/// Prefix levels needed to carry across 64 bits.
pub const PREFIX_LEVELS: u32 = 6;

/// Bitwise AND of XOR-shared words. One round.
pub fn and_words(s: &mut Session, x: &[u64], y: &[u64]) -> Result<Vec<u64>> {
    check_len(x.len(), y.len(), "and_words")?;
    let n = x.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    s.scoped(Op::And, n as u64, |s| {
        let (a, b, c) = s.and_triple(n)?;
        let mut masked: Vec<u64> = x.iter().zip(&a).map(|(v, r)| v ^ r).collect();
        masked.extend(y.iter().zip(&b).map(|(v, r)| v ^ r));
        let opened = s.open_xor(&masked)?;
        let (d, e) = opened.split_at(n);
        let first = s.party().is_first();
        Ok((0..n)
            .map(|i| {
                let mut z = c[i] ^ (d[i] & b[i]) ^ (e[i] & a[i]);
                if first {
                    z ^= d[i] & e[i];
                }
                z
            })
            .collect())
    })
}

/// Sum of two XOR-shared words modulo 2^64, returned XOR-shared. Seven rounds.
pub fn bool_add(s: &mut Session, x: &[u64], y: &[u64]) -> Result<Vec<u64>> {
    check_len(x.len(), y.len(), "bool_add")?;
    let n = x.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let p: Vec<u64> = x.iter().zip(y).map(|(a, b)| a ^ b).collect();
    let mut g = and_words(s, x, y)?;
    let mut pp = p.clone();
    for level in 0..PREFIX_LEVELS {
        let shift = 1u32 << level;
        let last = level + 1 == PREFIX_LEVELS;
        let mut lhs = pp.clone();
        let mut rhs: Vec<u64> = g.iter().map(|v| v << shift).collect();
        if !last {
            lhs.extend_from_slice(&pp);
            rhs.extend(pp.iter().map(|v| v << shift));
        }
        let prod = and_words(s, &lhs, &rhs)?;
        for i in 0..n {
            g[i] ^= prod[i];
        }
        if !last {
            pp.copy_from_slice(&prod[n..]);
        }
    }
    Ok(p.iter().zip(&g).map(|(a, c)| a ^ (c << 1)).collect())
}

/// Arithmetic-to-Boolean conversion of shared ring elements.
pub fn a2b(s: &mut Session, x: &[Ring]) -> Result<Vec<u64>> {
    s.scoped(Op::A2b, x.len() as u64, |s| {
        let zeros = vec![0u64; x.len()];
        let (lhs, rhs) = match s.party() {
            PartyId::P0 => (x.to_vec(), zeros),
            PartyId::P1 => (zeros, x.to_vec()),
        };
        bool_add(s, &lhs, &rhs)
    })
}

/// Convert bit 0 of XOR-shared words into arithmetic shares of that bit. One round.
pub fn b2a_bits(s: &mut Session, bits: &[u64]) -> Result<Vec<Ring>> {
    let n = bits.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    s.scoped(Op::B2a, n as u64, |s| {
        let r = s.dabits(n, 1)?;
        let masked: Vec<u64> = bits.iter().zip(&r.words).map(|(b, m)| (b ^ m) & 1).collect();
        let c = s.open_xor(&masked)?;
        let first = s.party().is_first();
        Ok((0..n)
            .map(|i| {
                if c[i] & 1 == 0 {
                    r.arith[i]
                } else if first {
                    1u64.wrapping_sub(r.arith[i])
                } else {
                    r.arith[i].wrapping_neg()
                }
            })
            .collect())
    })
}

/// Convert the low `bits` bits of XOR-shared words into an arithmetic share
/// of the unsigned integer they spell. One round.
pub fn b2a_word(s: &mut Session, words: &[u64], bits: u32) -> Result<Vec<Ring>> {
    let n = words.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    s.scoped(Op::B2a, n as u64, |s| {
        let r = s.dabits(n, bits)?;
        let mask = if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };
        let masked: Vec<u64> = words.iter().zip(&r.words).map(|(w, m)| (w ^ m) & mask).collect();
        let c = s.open_xor(&masked)?;
        let first = s.party().is_first();
        Ok((0..n)
            .map(|i| {
                let mut acc = 0u64;
                for b in 0..bits {
                    let ra = r.arith[i * bits as usize + b as usize];
                    let bit = if (c[i] >> b) & 1 == 0 {
                        ra
                    } else if first {
                        1u64.wrapping_sub(ra)
                    } else {
                        ra.wrapping_neg()
                    };
                    acc = acc.wrapping_add(bit << b);
                }
                acc
            })
            .collect())
    })
}

/// Shares of [x < 0] under two's complement.
pub fn sec_ltz(s: &mut Session, x: &[Ring]) -> Result<Vec<Ring>> {
    let words = a2b(s, x)?;
    let msb: Vec<u64> = words.iter().map(|w| w >> 63).collect();
    b2a_bits(s, &msb)
}

/// SecGE: shares of [u ≥ v] for signed ring values.
pub fn sec_ge(s: &mut Session, u: &[Ring], v: &[Ring]) -> Result<Vec<Ring>> {
    check_len(u.len(), v.len(), "sec_ge")?;
    if u.is_empty() {
        return Ok(Vec::new());
    }
    s.scoped(Op::SecGe, u.len() as u64, |s| {
        let lt = sec_ltz(s, &sub(u, v))?;
        Ok(not_bits(s.party(), &lt))
    })
}

/// SecGE2: shares of [u1/v1 ≥ u2/v2] for positive v, by cross-multiplication.
pub fn sec_ge2(
    s: &mut Session,
    u1: &[Ring],
    v1: &[Ring],
    u2: &[Ring],
    v2: &[Ring],
) -> Result<Vec<Ring>> {
    let n = u1.len();
    for l in [v1.len(), u2.len(), v2.len()] {
        check_len(n, l, "sec_ge2")?;
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    s.scoped(Op::SecGe2, n as u64, |s| {
        let mut lhs = u1.to_vec();
        lhs.extend_from_slice(u2);
        let mut rhs = v2.to_vec();
        rhs.extend_from_slice(v1);
        // Untruncated cross products keep the comparison exact.
        let w = sec_mul_exact(s, &lhs, &rhs)?;
        sec_ge(s, &w[..n], &w[n..])
    })
}

/// SecMax over several lists at once by a pairwise tournament.
pub fn sec_max(s: &mut Session, lists: &[Vec<Ring>]) -> Result<Vec<Ring>> {
    s.scoped(Op::SecMax, lists.len() as u64, |s| {
        let mut cur: Vec<Vec<Ring>> = lists.to_vec();
        while cur.iter().any(|l| l.len() > 1) {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for l in &cur {
                for pair in l.chunks_exact(2) {
                    a.push(pair[0]);
                    b.push(pair[1]);
                }
            }
            let ge = sec_ge(s, &a, &b)?;
            let winners = sec_sel(s, &b, &a, &ge)?;
            let mut off = 0;
            for l in cur.iter_mut() {
                let pairs = l.len() / 2;
                let mut next: Vec<Ring> = winners[off..off + pairs].to_vec();
                off += pairs;
                if l.len() % 2 == 1 {
                    next.push(*l.last().unwrap());
                }
                *l = next;
            }
        }
        Ok(cur.into_iter().map(|l| l.first().copied().unwrap_or(0)).collect())
    })
}
