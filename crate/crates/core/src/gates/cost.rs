//! Closed-form online cost of each functionality for this implementation.
//!
//! Costs are per party: rounds, and bytes sent (whole frames). Every formula
//! mirrors the exchange sequence of the corresponding gate.

use super::compare::PREFIX_LEVELS;
use super::div::quotient_bits;
use super::sort::{bitonic_layers, Comparator};
use crate::error::{Error, Result};
use crate::fixedpoint::Codec;
use crate::sharing::{frame_bytes, Op};
use serde::{Deserialize, Serialize};
use std::ops::Add;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cost {
    pub rounds: u64,
    pub bytes: u64,
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, o: Cost) -> Cost {
        Cost { rounds: self.rounds + o.rounds, bytes: self.bytes + o.bytes }
    }
}

impl Cost {
    fn times(self, k: u64) -> Cost {
        Cost { rounds: self.rounds * k, bytes: self.bytes * k }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    /// Elementwise operation over n values.
    Elems(usize),
    /// Shared matrix product (n×k)·(k×m).
    MatMul { n: usize, k: usize, m: usize },
    /// `count` inner products of length `len`.
    Sp { count: usize, len: usize },
    /// `lists` maxima over lists of length `len`.
    Max { lists: usize, len: usize },
    /// Sort of `t` rows (a power of two) of `width` slots.
    Sort { t: usize, cmp: Comparator, width: usize },
    /// `count` inversions of k×k matrices.
    Mi { count: usize, k: usize },
    /// One invertible k×k draw that succeeds first time.
    RanGenInv { k: usize },
    /// Threshold check of `clients` gradients of length m.
    Tc { clients: usize, m: usize },
}

fn one_round(words: usize) -> Cost {
    if words == 0 {
        Cost::default()
    } else {
        Cost { rounds: 1, bytes: frame_bytes(words) }
    }
}

fn beaver(n: usize) -> Cost {
    one_round(2 * n)
}

fn bool_add(n: usize) -> Cost {
    if n == 0 {
        return Cost::default();
    }
    let mut c = one_round(2 * n);
    for level in 0..PREFIX_LEVELS {
        let last = level + 1 == PREFIX_LEVELS;
        c = c + one_round(if last { 2 * n } else { 4 * n });
    }
    c
}

fn b2a(n: usize) -> Cost {
    one_round(n)
}

fn ge(n: usize) -> Cost {
    bool_add(n) + b2a(n)
}

fn ge2(n: usize) -> Cost {
    if n == 0 {
        return Cost::default();
    }
    beaver(2 * n) + ge(n)
}

fn ge3(n: usize) -> Cost {
    if n == 0 {
        return Cost::default();
    }
    ge(3 * n) + beaver(2 * n) + beaver(n)
}

fn ge4(n: usize) -> Cost {
    if n == 0 {
        return Cost::default();
    }
    ge(2 * n) + ge2(n) + beaver(2 * n) + beaver(n)
}

fn comparator(cmp: Comparator, n: usize) -> Cost {
    match cmp {
        Comparator::Ge => ge(n),
        Comparator::Ge2 => ge2(n),
        Comparator::Ge3 => ge3(n),
        Comparator::Ge4 => ge4(n),
    }
}

fn div(n: usize, codec: &Codec) -> Cost {
    if n == 0 {
        return Cost::default();
    }
    ge(2 * n)
        + beaver(2 * n)
        + bool_add(2 * n)
        + bool_add(n).times(quotient_bits(codec) as u64)
        + b2a(n)
        + beaver(n)
        + beaver(n)
}

fn max(lists: usize, len: usize) -> Cost {
    let mut c = Cost::default();
    let mut l = len;
    while l > 1 {
        let pairs = lists * (l / 2);
        c = c + ge(pairs) + beaver(pairs);
        l = l.div_ceil(2);
    }
    c
}

/// Predicted online (rounds, bytes sent) for `op` at `shape`.
pub fn predict_cost(op: Op, shape: Shape, codec: &Codec) -> Result<Cost> {
    use Shape::*;
    let unknown = || Error::UnknownFunctionality(format!("{} at {:?}", op.name(), shape));
    Ok(match (op, shape) {
        (Op::SecAdd, Elems(_)) | (Op::ZeroGen, Elems(_)) | (Op::SecRanGen, Elems(_)) => {
            Cost::default()
        }
        (Op::SecRec, Elems(n)) => one_round(n),
        (Op::SecMul, Elems(n)) | (Op::BitMul, Elems(n)) | (Op::SecSel, Elems(n)) => beaver(n),
        (Op::And, Elems(n)) => beaver(n),
        (Op::SecMul, MatMul { n, k, m }) => one_round(n * k + k * m),
        (Op::SecMul3, Elems(n)) => beaver(n) + beaver(n),
        (Op::SecSp, Sp { count, len }) => one_round(2 * count * len),
        (Op::A2b, Elems(n)) => bool_add(n),
        (Op::B2a, Elems(n)) => b2a(n),
        (Op::SecGe, Elems(n)) => ge(n),
        (Op::SecGe2, Elems(n)) => ge2(n),
        (Op::SecGe3, Elems(n)) => ge3(n),
        (Op::SecGe4, Elems(n)) => ge4(n),
        (Op::SecDiv, Elems(n)) => div(n, codec),
        (Op::SecMax, Max { lists, len }) => max(lists, len),
        (Op::SecSrt, Sort { t, cmp, width }) => {
            let mut c = Cost::default();
            for layer in bitonic_layers(t) {
                c = c + comparator(cmp, layer.len()) + beaver(layer.len() * width);
            }
            c
        }
        (Op::SecMi, Mi { count, k }) => one_round(count * 2 * k * k) + one_round(count * k * k),
        (Op::SecRanGenInv, RanGenInv { k }) => one_round(2 * k * k) + one_round(k * k),
        (Op::SecTc, Tc { clients, m }) => {
            beaver(clients * m + clients) + ge(clients * m) + ge(clients) + one_round(clients)
        }
        _ => return Err(unknown()),
    })
}

/// Number of comparator invocations a bitonic sort of `t` rows makes.
pub fn bitonic_comparisons(t: usize) -> u64 {
    bitonic_layers(t).iter().map(|l| l.len() as u64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_is_free_and_mul_is_one_round() {
        let c = Codec::default();
        assert_eq!(predict_cost(Op::SecAdd, Shape::Elems(10), &c).unwrap(), Cost::default());
        let m = predict_cost(Op::SecMul, Shape::Elems(1), &c).unwrap();
        assert_eq!(m, Cost { rounds: 1, bytes: 16 + 16 });
    }

    #[test]
    fn unknown_shape_is_rejected() {
        let c = Codec::default();
        assert!(matches!(
            predict_cost(Op::SecUe, Shape::Elems(1), &c),
            Err(Error::UnknownFunctionality(_))
        ));
    }

    #[test]
    fn comparison_is_eight_rounds() {
        let c = Codec::default();
        assert_eq!(predict_cost(Op::SecGe, Shape::Elems(4), &c).unwrap().rounds, 8);
    }
}
