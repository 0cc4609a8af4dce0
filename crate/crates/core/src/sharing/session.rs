use super::{
    decode_frame, encode_frame, inproc_pair, Channel, DaBits, Dealer, Meter, Op, PartyId,
};
use crate::error::{Error, Result};
use crate::fixedpoint::{Codec, Ring};

/// One server's view of a two-party protocol run.
pub struct Session {
    party: PartyId,
    pub codec: Codec,
    pub meter: Meter,
    dealer: Dealer,
    chan: Box<dyn Channel>,
    session_id: u64,
    /// Largest accepted condition number for revealed masked matrices.
    pub cond_bound: f64,
}

impl Session {
    pub fn new(
        party: PartyId,
        codec: Codec,
        chan: Box<dyn Channel>,
        dealer: Dealer,
        session_id: u64,
    ) -> Self {
        Session {
            party,
            codec,
            meter: Meter::new(),
            dealer,
            chan,
            session_id,
            cond_bound: 1e4,
        }
    }

    /// Run `f` as both parties over an in-process channel and return both results.
    pub fn run_inproc<T, F>(codec: Codec, seed: u64, f: F) -> Result<(T, T)>
    where
        T: Send,
        F: Fn(&mut Session) -> Result<T> + Sync,
    {
        let (c0, c1) = inproc_pair();
        let f = &f;
        std::thread::scope(|s| {
            let h1 = s.spawn(move || {
                let mut sess =
                    Session::new(PartyId::P1, codec, Box::new(c1), Dealer::new(seed, PartyId::P1), seed);
                f(&mut sess)
            });
            let mut sess =
                Session::new(PartyId::P0, codec, Box::new(c0), Dealer::new(seed, PartyId::P0), seed);
            let r0 = f(&mut sess);
            drop(sess);
            let r1 = h1.join().map_err(|_| Error::Transport("party 1 panicked".into()))?;
            Ok((r0?, r1?))
        })
    }

    pub fn party(&self) -> PartyId {
        self.party
    }

    pub fn dealer_mut(&mut self) -> &mut Dealer {
        &mut self.dealer
    }

    /// Run `f` inside a metering scope for `op`, counting `count` instances.
    pub fn scoped<T>(
        &mut self,
        op: Op,
        count: u64,
        f: impl FnOnce(&mut Session) -> Result<T>,
    ) -> Result<T> {
        self.meter.enter(op, count);
        let out = f(self);
        self.meter.exit(op);
        out
    }

    /// Send our words and receive the peer's, as one round.
    pub fn exchange(&mut self, words: &[u64]) -> Result<Vec<u64>> {
        let tag = self.meter.current().tag();
        let frame = encode_frame(self.session_id, tag, words);
        let incoming = if self.party.is_first() {
            self.chan.send(&frame)?;
            self.chan.recv()?
        } else {
            let r = self.chan.recv()?;
            self.chan.send(&frame)?;
            r
        };
        let (sid, peer_tag, peer) = decode_frame(&incoming)?;
        if sid != self.session_id || peer_tag != tag || peer.len() != words.len() {
            return Err(Error::Transport(format!(
                "desynchronized peer: expected session {} tag {} len {}, got {} {} {}",
                self.session_id,
                tag,
                words.len(),
                sid,
                peer_tag,
                peer.len()
            )));
        }
        self.meter.record_round(frame.len() as u64, incoming.len() as u64);
        Ok(peer)
    }

    /// Open additive shares to both parties.
    pub fn open(&mut self, shares: &[Ring]) -> Result<Vec<Ring>> {
        let peer = self.exchange(shares)?;
        Ok(shares.iter().zip(&peer).map(|(a, b)| a.wrapping_add(*b)).collect())
    }

    /// Open XOR shares to both parties.
    pub fn open_xor(&mut self, shares: &[u64]) -> Result<Vec<u64>> {
        let peer = self.exchange(shares)?;
        Ok(shares.iter().zip(&peer).map(|(a, b)| a ^ b).collect())
    }

    /// SecRec: reconstruct shared values in one round.
    pub fn sec_rec(&mut self, shares: &[Ring]) -> Result<Vec<Ring>> {
        self.scoped(Op::SecRec, shares.len() as u64, |s| s.open(shares))
    }

    fn charged<T>(&mut self, f: impl FnOnce(&mut Dealer) -> Result<T>) -> Result<T> {
        let out = f(&mut self.dealer)?;
        let bytes = self.dealer.take_offline_bytes();
        self.meter.record_offline(bytes);
        Ok(out)
    }

    pub fn triple(&mut self, n: usize) -> Result<(Vec<Ring>, Vec<Ring>, Vec<Ring>)> {
        self.charged(|d| d.triple(n))
    }

    pub fn matrix_triple(
        &mut self,
        n: usize,
        k: usize,
        m: usize,
    ) -> Result<(Vec<Ring>, Vec<Ring>, Vec<Ring>)> {
        self.charged(|d| d.matrix_triple(n, k, m))
    }

    pub fn and_triple(&mut self, n: usize) -> Result<(Vec<u64>, Vec<u64>, Vec<u64>)> {
        self.charged(|d| d.and_triple(n))
    }

    pub fn dabits(&mut self, n: usize, bits: u32) -> Result<DaBits> {
        self.charged(|d| d.dabits(n, bits))
    }

    /// ZeroGen: fresh shares of zero, no communication.
    pub fn zero_gen(&mut self, n: usize) -> Result<Vec<Ring>> {
        self.meter.enter(Op::ZeroGen, n as u64);
        let out = self.charged(|d| d.zero(n));
        self.meter.exit(Op::ZeroGen);
        out
    }

    /// SecRanGen: shares of uniformly random ring elements.
    pub fn sec_ran_gen(&mut self, n: usize) -> Result<Vec<Ring>> {
        self.meter.enter(Op::SecRanGen, n as u64);
        let out = self.charged(|d| d.random(n));
        self.meter.exit(Op::SecRanGen);
        out
    }

    pub fn invertible_mask(&mut self, k: usize) -> Result<Vec<Ring>> {
        let codec = self.codec;
        let bound = self.cond_bound;
        self.charged(|d| d.invertible_mask(k, bound, &codec))
    }

    pub fn candidate_mask(&mut self, k: usize) -> Result<Vec<Ring>> {
        let codec = self.codec;
        self.charged(|d| d.candidate_mask(k, &codec))
    }

    /// Shares of public values: party 0 holds them, party 1 holds zeros.
    pub fn public(&self, values: &[Ring]) -> Vec<Ring> {
        super::public_share(self.party, values)
    }

    /// Shares of public reals.
    pub fn public_f64(&self, values: &[f64]) -> Result<Vec<Ring>> {
        let enc = self.codec.encode_vec(values)?;
        Ok(self.public(&enc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sharing::frame_bytes;

    #[test]
    fn rec_round_trip_and_metering() {
        let codec = Codec::default();
        let (a, b) = Session::run_inproc(codec, 11, |s| {
            let v = if s.party().is_first() { vec![5u64, 7] } else { vec![1u64, u64::MAX] };
            let out = s.sec_rec(&v)?;
            Ok((out, s.meter.inclusive(Op::SecRec)))
        })
        .unwrap();
        assert_eq!(a.0, vec![6, 6]);
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.rounds, 1);
        assert_eq!(a.1.bytes_sent, frame_bytes(2));
        assert_eq!(a.1.invocations, 2);
    }

    #[test]
    fn desync_is_detected() {
        let codec = Codec::default();
        let r = Session::run_inproc(codec, 1, |s| {
            let n = if s.party().is_first() { 1 } else { 2 };
            s.open(&vec![0; n])
        });
        assert!(matches!(r, Err(Error::Transport(_))));
    }
}
