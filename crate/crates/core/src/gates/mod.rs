//! Secure functionalities built on additive and Boolean shares.
//!
//! Comparison outputs are arithmetic shares of the raw integers 0 and 1 (not
//! fixed-point encoded), so multiplying a bit into a value never truncates.

mod arith;
mod compare;
mod cost;
mod div;
mod inverse;
mod sort;

pub use arith::{
    bit_mul, mul_public, public_matmul, sec_add, sec_matmul, sec_matmul_batch, sec_matmul_batch_exact, sec_mul, sec_mul_exact,
    sec_mul3, sec_sel, sec_sp, sec_sp_public, MatMul,
};
pub use compare::{and_words, a2b, b2a_bits, b2a_word, bool_add, sec_ge, sec_ge2, sec_ltz, sec_max};
pub use cost::{bitonic_comparisons, predict_cost, Cost, Shape};
pub use div::{quotient_bits, sec_div};
pub use inverse::{sec_mi, sec_ran_gen_inv};
pub use sort::{bitonic_layers, sec_srt, sentinel_row, Comparator};

use crate::error::{Error, Result};
use crate::fixedpoint::Ring;
use crate::sharing::PartyId;

pub(crate) fn check_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

pub fn add(a: &[Ring], b: &[Ring]) -> Vec<Ring> {
    a.iter().zip(b).map(|(x, y)| x.wrapping_add(*y)).collect()
}

pub fn sub(a: &[Ring], b: &[Ring]) -> Vec<Ring> {
    a.iter().zip(b).map(|(x, y)| x.wrapping_sub(*y)).collect()
}

pub fn neg(a: &[Ring]) -> Vec<Ring> {
    a.iter().map(|x| x.wrapping_neg()).collect()
}

/// Multiply shares by a public integer (no truncation).
pub fn scale_int(a: &[Ring], k: i64) -> Vec<Ring> {
    a.iter().map(|x| x.wrapping_mul(k as u64)).collect()
}

/// Add a public constant to a shared vector (party 0 absorbs it).
pub fn add_public(party: PartyId, a: &[Ring], c: &[Ring]) -> Vec<Ring> {
    match party {
        PartyId::P0 => add(a, c),
        PartyId::P1 => a.to_vec(),
    }
}

/// Shares of 1 - b for shared bits b.
pub fn not_bits(party: PartyId, b: &[Ring]) -> Vec<Ring> {
    let ones = vec![1u64; b.len()];
    add_public(party, &neg(b), &ones)
}
