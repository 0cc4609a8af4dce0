//! Additive and Boolean sharing between two servers, the trusted dealer,
//! transports and the communication meter.

mod dealer;
mod meter;
mod session;
mod transport;

pub use dealer::{condition_number, DaBits, Dealer};
pub use meter::{Meter, NetProfile, Op, OpStats};
pub use session::Session;
pub use transport::{
    decode_frame, encode_frame, frame_bytes, inproc_pair, Channel, InProcChannel, TcpChannel,
    FRAME_OVERHEAD,
};

use crate::fixedpoint::Ring;
use rand::RngCore;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PartyId {
    P0,
    P1,
}

impl PartyId {
    pub fn index(self) -> usize {
        match self {
            PartyId::P0 => 0,
            PartyId::P1 => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(PartyId::P0),
            1 => Some(PartyId::P1),
            _ => None,
        }
    }

    pub fn is_first(self) -> bool {
        self == PartyId::P0
    }
}

/// One party's additive share of a tensor, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArithShare {
    pub owner: PartyId,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Ring>,
}

impl ArithShare {
    pub fn new(owner: PartyId, rows: usize, cols: usize, data: Vec<Ring>) -> Self {
        assert_eq!(rows * cols, data.len(), "share shape does not match data");
        ArithShare { owner, rows, cols, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// One party's XOR share; each word carries 64 bit-sliced bits of one element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolShare {
    pub owner: PartyId,
    pub words: Vec<u64>,
}

/// Split plaintext values into two additive shares.
pub fn sec_share<R: RngCore>(values: &[Ring], rng: &mut R) -> (Vec<Ring>, Vec<Ring>) {
    let s0: Vec<Ring> = values.iter().map(|_| rng.next_u64()).collect();
    let s1 = values.iter().zip(&s0).map(|(v, r)| v.wrapping_sub(*r)).collect();
    (s0, s1)
}

/// The share of `values` that `party` would receive from [`sec_share`] with the same rng.
pub fn share_for<R: RngCore>(party: PartyId, values: &[Ring], rng: &mut R) -> Vec<Ring> {
    let (s0, s1) = sec_share(values, rng);
    match party {
        PartyId::P0 => s0,
        PartyId::P1 => s1,
    }
}

/// Plaintext reconstruction of two share vectors.
pub fn reconstruct(a: &[Ring], b: &[Ring]) -> Vec<Ring> {
    a.iter().zip(b).map(|(x, y)| x.wrapping_add(*y)).collect()
}

/// A share of a public constant: party 0 holds the value, party 1 holds zero.
pub fn public_share(party: PartyId, values: &[Ring]) -> Vec<Ring> {
    match party {
        PartyId::P0 => values.to_vec(),
        PartyId::P1 => vec![0; values.len()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn share_and_reconstruct() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let v = vec![16384u64, 0, u64::MAX, 42];
        let (a, b) = sec_share(&v, &mut rng);
        assert_eq!(reconstruct(&a, &b), v);
    }

    #[test]
    fn share_for_matches_split() {
        let v = vec![5u64, 6, 7];
        let mut r0 = ChaCha20Rng::seed_from_u64(9);
        let mut r1 = ChaCha20Rng::seed_from_u64(9);
        let a = share_for(PartyId::P0, &v, &mut r0);
        let b = share_for(PartyId::P1, &v, &mut r1);
        assert_eq!(reconstruct(&a, &b), v);
    }
}
