//! Oblivious bitonic sort over rows of shared slots.
//!
//! A row is `[key components..., payload...]`. The comparator reads the key
//! prefix; compare-exchange swaps whole rows with SecSel.

use super::{add, sec_ge, sec_ge2, sec_sel, sub};
use crate::error::{Error, Result};
use crate::fixedpoint::{Codec, Ring};
use crate::roundsel::{sec_ge3, sec_ge4};
use crate::sharing::{Op, Session};
use serde::{Deserialize, Serialize};

/// Row comparator Π, named after the key layout it reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    /// key `[v]`, plain signed comparison.
    Ge,
    /// key `[u, v]`, ratio u/v with v > 0.
    Ge2,
    /// key `[w, b]`, sign bit and squared ratio.
    Ge3,
    /// key `[w, a, v]`, sign bit and squared ratio a/v.
    Ge4,
}

impl Comparator {
    pub fn key_width(self) -> usize {
        match self {
            Comparator::Ge => 1,
            Comparator::Ge2 | Comparator::Ge3 => 2,
            Comparator::Ge4 => 3,
        }
    }

    /// Shares of [A ≥ B] for paired rows.
    pub fn compare(self, s: &mut Session, a: &[&[Ring]], b: &[&[Ring]]) -> Result<Vec<Ring>> {
        let col = |rows: &[&[Ring]], c: usize| -> Vec<Ring> { rows.iter().map(|r| r[c]).collect() };
        match self {
            Comparator::Ge => sec_ge(s, &col(a, 0), &col(b, 0)),
            Comparator::Ge2 => sec_ge2(s, &col(a, 0), &col(a, 1), &col(b, 0), &col(b, 1)),
            Comparator::Ge3 => sec_ge3(s, &col(a, 0), &col(a, 1), &col(b, 0), &col(b, 1)),
            Comparator::Ge4 => sec_ge4(
                s,
                (&col(a, 0), &col(a, 1), &col(a, 2)),
                (&col(b, 0), &col(b, 1), &col(b, 2)),
            ),
        }
    }
}

/// A public −∞ row for padding, shared as (value, 0).
pub fn sentinel_row(s: &Session, cmp: Comparator, payload: usize) -> Vec<Ring> {
    let c: &Codec = &s.codec;
    let key: Vec<Ring> = match cmp {
        Comparator::Ge => vec![c.encode_unchecked(-(c.bound() - 1.0))],
        Comparator::Ge2 => vec![c.encode_unchecked(-2.0), c.encode_unchecked(1.0)],
        // b may sit on the 2^(−2p) grid
        Comparator::Ge3 => vec![0, c.encode2p(4.0)],
        Comparator::Ge4 => vec![0, c.encode_unchecked(4.0), c.encode_unchecked(1.0)],
    };
    let mut row = s.public(&key);
    row.extend(std::iter::repeat_n(0, payload));
    row
}

/// The compare-exchange pairs of each bitonic layer for length `t`, as
/// (index receiving the larger row, index receiving the smaller row).
pub fn bitonic_layers(t: usize) -> Vec<Vec<(usize, usize)>> {
    let mut layers = Vec::new();
    let mut k = 2;
    while k <= t {
        let mut j = k / 2;
        while j > 0 {
            let mut layer = Vec::with_capacity(t / 2);
            for i in 0..t {
                let l = i ^ j;
                if l > i {
                    if i & k == 0 {
                        layer.push((i, l));
                    } else {
                        layer.push((l, i));
                    }
                }
            }
            layers.push(layer);
            j /= 2;
        }
        k *= 2;
    }
    layers
}

/// SecSrt: sort rows descending under `cmp`. The row count must be a power of two.
pub fn sec_srt(s: &mut Session, cmp: Comparator, rows: Vec<Vec<Ring>>) -> Result<Vec<Vec<Ring>>> {
    let t = rows.len();
    if t == 0 {
        return Ok(rows);
    }
    if !t.is_power_of_two() {
        return Err(Error::Shape(format!("sort length {t} is not a power of two")));
    }
    let width = rows[0].len();
    if width < cmp.key_width() || rows.iter().any(|r| r.len() != width) {
        return Err(Error::Shape("sort rows have inconsistent widths".into()));
    }
    s.scoped(Op::SecSrt, 1, |s| {
        let mut rows = rows;
        for layer in bitonic_layers(t) {
            let a: Vec<&[Ring]> = layer.iter().map(|&(hi, _)| rows[hi].as_slice()).collect();
            let b: Vec<&[Ring]> = layer.iter().map(|&(_, lo)| rows[lo].as_slice()).collect();
            s.meter.comparator_calls += layer.len() as u64;
            let c = cmp.compare(s, &a, &b)?;
            let mut va = Vec::with_capacity(layer.len() * width);
            let mut vb = Vec::with_capacity(layer.len() * width);
            let mut bits = Vec::with_capacity(layer.len() * width);
            for (idx, (ra, rb)) in a.iter().zip(&b).enumerate() {
                va.extend_from_slice(ra);
                vb.extend_from_slice(rb);
                bits.extend(std::iter::repeat_n(c[idx], width));
            }
            let hi = sec_sel(s, &vb, &va, &bits)?;
            let lo = sub(&add(&va, &vb), &hi);
            for (idx, &(ih, il)) in layer.iter().enumerate() {
                rows[ih] = hi[idx * width..(idx + 1) * width].to_vec();
                rows[il] = lo[idx * width..(idx + 1) * width].to_vec();
            }
        }
        Ok(rows)
    })
}
