use super::{add, check_len, sub};
use crate::error::Result;
use crate::fixedpoint::{truncate_local, truncate_vec, Ring};
use crate::sharing::{Op, Session};

/// SecAdd: local, no communication.
pub fn sec_add(s: &mut Session, a: &[Ring], b: &[Ring]) -> Result<Vec<Ring>> {
    check_len(a.len(), b.len(), "sec_add")?;
    s.scoped(Op::SecAdd, a.len() as u64, |_| Ok(add(a, b)))
}

/// Beaver multiplication without truncation, elementwise.
fn beaver(s: &mut Session, x: &[Ring], y: &[Ring]) -> Result<Vec<Ring>> {
    let n = x.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let (a, b, c) = s.triple(n)?;
    let mut masked = sub(x, &a);
    masked.extend(sub(y, &b));
    let opened = s.open(&masked)?;
    let (d, e) = opened.split_at(n);
    let first = s.party().is_first();
    Ok((0..n)
        .map(|i| {
            let mut z = c[i]
                .wrapping_add(d[i].wrapping_mul(b[i]))
                .wrapping_add(e[i].wrapping_mul(a[i]));
            if first {
                z = z.wrapping_add(d[i].wrapping_mul(e[i]));
            }
            z
        })
        .collect())
}

/// SecMul, elementwise fixed-point product with local truncation. One round.
pub fn sec_mul(s: &mut Session, x: &[Ring], y: &[Ring]) -> Result<Vec<Ring>> {
    check_len(x.len(), y.len(), "sec_mul")?;
    s.scoped(Op::SecMul, x.len() as u64, |s| {
        let mut z = beaver(s, x, y)?;
        let p = s.codec.precision_p;
        truncate_vec(&mut z, p, s.party());
        s.meter.truncations += 1;
        Ok(z)
    })
}

/// SecMul without truncation: the result stays at precision 2p. Used where a
/// comparison must see the exact product of encoded values.
pub fn sec_mul_exact(s: &mut Session, x: &[Ring], y: &[Ring]) -> Result<Vec<Ring>> {
    check_len(x.len(), y.len(), "sec_mul_exact")?;
    s.scoped(Op::SecMul, x.len() as u64, |s| beaver(s, x, y))
}

/// Product of shared integers (bits) with shared values; exact, no truncation.
pub fn bit_mul(s: &mut Session, bits: &[Ring], values: &[Ring]) -> Result<Vec<Ring>> {
    check_len(bits.len(), values.len(), "bit_mul")?;
    s.scoped(Op::BitMul, bits.len() as u64, |s| beaver(s, bits, values))
}

/// SecMul3 as two sequential SecMul calls.
pub fn sec_mul3(s: &mut Session, x: &[Ring], y: &[Ring], z: &[Ring]) -> Result<Vec<Ring>> {
    check_len(x.len(), y.len(), "sec_mul3")?;
    check_len(x.len(), z.len(), "sec_mul3")?;
    s.scoped(Op::SecMul3, x.len() as u64, |s| {
        let xy = sec_mul(s, x, y)?;
        sec_mul(s, &xy, z)
    })
}

/// One shared matrix product X (n×k) · Y (k×m), row-major.
#[derive(Debug, Clone, Copy)]
pub struct MatMul<'a> {
    pub x: &'a [Ring],
    pub y: &'a [Ring],
    pub n: usize,
    pub k: usize,
    pub m: usize,
}

fn ring_matmul(a: &[Ring], b: &[Ring], n: usize, k: usize, m: usize, out: &mut [Ring]) {
    if n == 0 || m == 0 {
        return;
    }
    crate::par::chunks_mut(&mut out[..n * m], m, n * k * m, |i, row| {
        for l in 0..k {
            let x = a[i * k + l];
            if x == 0 {
                continue;
            }
            for (o, y) in row.iter_mut().zip(&b[l * m..(l + 1) * m]) {
                *o = o.wrapping_add(x.wrapping_mul(*y));
            }
        }
    });
}

/// Several shared matrix products in a single round.
pub fn sec_matmul_batch(s: &mut Session, items: &[MatMul<'_>]) -> Result<Vec<Vec<Ring>>> {
    matmul_batch(s, items, true)
}

/// As [`sec_matmul_batch`] but untruncated: results stay at precision 2p.
pub fn sec_matmul_batch_exact(s: &mut Session, items: &[MatMul<'_>]) -> Result<Vec<Vec<Ring>>> {
    matmul_batch(s, items, false)
}

fn matmul_batch(s: &mut Session, items: &[MatMul<'_>], truncate: bool) -> Result<Vec<Vec<Ring>>> {
    for it in items {
        check_len(it.x.len(), it.n * it.k, "sec_matmul lhs")?;
        check_len(it.y.len(), it.k * it.m, "sec_matmul rhs")?;
    }
    if items.is_empty() {
        return Ok(Vec::new());
    }
    s.scoped(Op::SecMul, items.len() as u64, |s| {
        let mut triples = Vec::with_capacity(items.len());
        let mut masked = Vec::new();
        for it in items {
            let (a, b, c) = s.matrix_triple(it.n, it.k, it.m)?;
            masked.extend(sub(it.x, &a));
            masked.extend(sub(it.y, &b));
            triples.push((a, b, c));
        }
        let opened = s.open(&masked)?;
        let first = s.party().is_first();
        let p = s.codec.precision_p;
        let party = s.party();
        let mut off = 0;
        let mut out = Vec::with_capacity(items.len());
        for (it, (a, b, c)) in items.iter().zip(triples) {
            let d = &opened[off..off + it.n * it.k];
            off += it.n * it.k;
            let e = &opened[off..off + it.k * it.m];
            off += it.k * it.m;
            let mut z = c;
            ring_matmul(d, &b, it.n, it.k, it.m, &mut z);
            ring_matmul(&a, e, it.n, it.k, it.m, &mut z);
            if first {
                ring_matmul(d, e, it.n, it.k, it.m, &mut z);
            }
            if truncate {
                for v in z.iter_mut() {
                    *v = truncate_local(*v, p, party);
                }
            }
            out.push(z);
        }
        if truncate {
            s.meter.truncations += 1;
        }
        Ok(out)
    })
}

pub fn sec_matmul(
    s: &mut Session,
    x: &[Ring],
    y: &[Ring],
    n: usize,
    k: usize,
    m: usize,
) -> Result<Vec<Ring>> {
    let mut out = sec_matmul_batch(s, &[MatMul { x, y, n, k, m }])?;
    Ok(out.pop().unwrap())
}

/// SecSP: batched inner products, one truncation per summed product. One round.
pub fn sec_sp(s: &mut Session, xs: &[Vec<Ring>], ys: &[Vec<Ring>]) -> Result<Vec<Ring>> {
    check_len(xs.len(), ys.len(), "sec_sp batch")?;
    for (x, y) in xs.iter().zip(ys) {
        check_len(x.len(), y.len(), "sec_sp")?;
    }
    s.scoped(Op::SecSp, xs.len() as u64, |s| {
        let flat_x: Vec<Ring> = xs.iter().flatten().copied().collect();
        let flat_y: Vec<Ring> = ys.iter().flatten().copied().collect();
        let prods = beaver(s, &flat_x, &flat_y)?;
        let p = s.codec.precision_p;
        let party = s.party();
        let mut off = 0;
        let out = xs
            .iter()
            .map(|x| {
                let sum = prods[off..off + x.len()]
                    .iter()
                    .fold(0u64, |acc, v| acc.wrapping_add(*v));
                off += x.len();
                truncate_local(sum, p, party)
            })
            .collect();
        s.meter.truncations += 1;
        Ok(out)
    })
}

/// SecSP with public second operands (encoded). Local: one truncation per
/// sum and no communication.
pub fn sec_sp_public(s: &mut Session, xs: &[Vec<Ring>], ps: &[Vec<Ring>]) -> Result<Vec<Ring>> {
    check_len(xs.len(), ps.len(), "sec_sp_public batch")?;
    for (x, y) in xs.iter().zip(ps) {
        check_len(x.len(), y.len(), "sec_sp_public")?;
    }
    s.scoped(Op::SecSp, xs.len() as u64, |s| {
        let p = s.codec.precision_p;
        let party = s.party();
        s.meter.truncations += 1;
        Ok(xs
            .iter()
            .zip(ps)
            .map(|(x, pv)| {
                let sum = x.iter().zip(pv).fold(0u64, |acc, (a, b)| acc.wrapping_add(a.wrapping_mul(*b)));
                truncate_local(sum, p, party)
            })
            .collect())
    })
}

/// SecSel: v0 + i·(v1 − v0), re-randomized with fresh zero shares.
pub fn sec_sel(s: &mut Session, v0: &[Ring], v1: &[Ring], bits: &[Ring]) -> Result<Vec<Ring>> {
    check_len(v0.len(), v1.len(), "sec_sel")?;
    check_len(v0.len(), bits.len(), "sec_sel bits")?;
    if v0.is_empty() {
        return Ok(Vec::new());
    }
    s.scoped(Op::SecSel, v0.len() as u64, |s| {
        let diff = sub(v1, v0);
        let t = beaver(s, bits, &diff)?;
        let z = s.zero_gen(v0.len())?;
        Ok(add(&add(v0, &t), &z))
    })
}

/// Public (fixed-point encoded) times shared, elementwise; local truncation.
pub fn mul_public(s: &mut Session, public: &[Ring], x: &[Ring]) -> Result<Vec<Ring>> {
    check_len(public.len(), x.len(), "mul_public")?;
    let p = s.codec.precision_p;
    let party = s.party();
    s.meter.truncations += 1;
    Ok(public
        .iter()
        .zip(x)
        .map(|(a, b)| truncate_local(a.wrapping_mul(*b), p, party))
        .collect())
}

/// Product of a public matrix and a shared matrix, truncated by `frac_bits`
/// (the public operand's fractional precision). `public_left` selects P·X or X·P.
#[allow(clippy::too_many_arguments)]
pub fn public_matmul(
    s: &mut Session,
    public: &[Ring],
    shared: &[Ring],
    n: usize,
    k: usize,
    m: usize,
    public_left: bool,
    frac_bits: u32,
) -> Result<Vec<Ring>> {
    if public_left {
        check_len(public.len(), n * k, "public_matmul lhs")?;
        check_len(shared.len(), k * m, "public_matmul rhs")?;
    } else {
        check_len(shared.len(), n * k, "public_matmul lhs")?;
        check_len(public.len(), k * m, "public_matmul rhs")?;
    }
    let mut z = vec![0u64; n * m];
    if public_left {
        ring_matmul(public, shared, n, k, m, &mut z);
    } else {
        ring_matmul(shared, public, n, k, m, &mut z);
    }
    let party = s.party();
    for v in z.iter_mut() {
        *v = truncate_local(*v, frac_bits, party);
    }
    s.meter.truncations += 1;
    Ok(z)
}
