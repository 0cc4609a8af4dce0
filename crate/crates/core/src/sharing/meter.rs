//! Communication and invocation accounting.
//!
//! Every exchange is charged once to the innermost active operation (its
//! wire tag) and once to each distinct operation on the stack (inclusive
//! totals). Invocation counts are logical instances, so a batched call over
//! k elements counts k.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

macro_rules! ops {
    ($($name:ident = $tag:expr, $label:expr;)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Op { $($name),* }

        impl Op {
            pub const ALL: &'static [Op] = &[$(Op::$name),*];

            pub fn tag(self) -> u16 {
                match self { $(Op::$name => $tag),* }
            }

            pub fn name(self) -> &'static str {
                match self { $(Op::$name => $label),* }
            }

            pub fn from_tag(tag: u16) -> Option<Op> {
                match tag { $($tag => Some(Op::$name),)* _ => None }
            }

            pub fn from_name(name: &str) -> Option<Op> {
                match name { $($label => Some(Op::$name),)* _ => None }
            }
        }
    };
}

ops! {
    Session = 0, "session";
    SecShare = 1, "sec_share";
    SecRec = 2, "sec_rec";
    SecAdd = 3, "sec_add";
    SecMul = 4, "sec_mul";
    SecMul3 = 5, "sec_mul3";
    SecSp = 6, "sec_sp";
    ZeroGen = 7, "zero_gen";
    SecRanGen = 8, "sec_ran_gen";
    SecSel = 9, "sec_sel";
    BitMul = 10, "bit_mul";
    And = 11, "and";
    A2b = 12, "a2b";
    B2a = 13, "b2a";
    SecGe = 14, "sec_ge";
    SecGe2 = 15, "sec_ge2";
    SecGe3 = 16, "sec_ge3";
    SecGe4 = 17, "sec_ge4";
    SecMax = 18, "sec_max";
    SecSrt = 19, "sec_srt";
    SecDiv = 20, "sec_div";
    SecRanGenInv = 21, "sec_ran_gen_inv";
    SecMi = 22, "sec_mi";
    SecRs = 23, "sec_rs";
    SecRsAlt = 24, "sec_rs_alt";
    SecUe = 25, "sec_ue";
    SecTc = 26, "sec_tc";
    Threshold = 27, "threshold";
    FlRound = 28, "fl_round";
    Correction = 29, "correction";
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpStats {
    pub invocations: u64,
    pub rounds: u64,
    pub bytes_sent: u64,
    pub bytes_recv: u64,
    pub offline_bytes: u64,
}

impl OpStats {
    pub fn minus(&self, earlier: &OpStats) -> OpStats {
        OpStats {
            invocations: self.invocations - earlier.invocations,
            rounds: self.rounds - earlier.rounds,
            bytes_sent: self.bytes_sent - earlier.bytes_sent,
            bytes_recv: self.bytes_recv - earlier.bytes_recv,
            offline_bytes: self.offline_bytes - earlier.offline_bytes,
        }
    }
}

/// Simulated network: one-way latency and bandwidth, advancing a virtual clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetProfile {
    pub latency_ms: f64,
    pub bytes_per_sec: f64,
}

impl NetProfile {
    pub const LAN: NetProfile = NetProfile { latency_ms: 0.17, bytes_per_sec: 1e9 };
    pub const WAN: NetProfile = NetProfile { latency_ms: 72.0, bytes_per_sec: 1e8 };

    pub fn by_name(name: &str) -> Option<NetProfile> {
        match name {
            "lan" => Some(Self::LAN),
            "wan" => Some(Self::WAN),
            _ => None,
        }
    }

    fn round_ms(&self, bytes: u64) -> f64 {
        self.latency_ms + 1e3 * bytes as f64 / self.bytes_per_sec
    }
}

#[derive(Debug, Clone, Default)]
pub struct Meter {
    inclusive: BTreeMap<Op, OpStats>,
    exclusive: BTreeMap<Op, OpStats>,
    stack: Vec<Op>,
    total: OpStats,
    pub comparator_calls: u64,
    pub truncations: u64,
    pub profile: Option<NetProfile>,
    pub sim_ms: f64,
}

impl Meter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn current(&self) -> Op {
        self.stack.last().copied().unwrap_or(Op::Session)
    }

    pub fn enter(&mut self, op: Op, count: u64) {
        self.inclusive.entry(op).or_default().invocations += count;
        self.exclusive.entry(op).or_default().invocations += count;
        self.stack.push(op);
    }

    pub fn exit(&mut self, op: Op) {
        let top = self.stack.pop();
        debug_assert_eq!(top, Some(op), "unbalanced meter scopes");
    }

    fn for_each_active(&mut self, mut f: impl FnMut(&mut OpStats)) {
        let mut seen: Vec<Op> = Vec::with_capacity(self.stack.len());
        for &op in &self.stack {
            if !seen.contains(&op) {
                seen.push(op);
                f(self.inclusive.entry(op).or_default());
            }
        }
    }

    /// Charge one exchange: a frame of `sent` bytes out and `recv` bytes in.
    pub fn record_round(&mut self, sent: u64, recv: u64) {
        let tag = self.current();
        let e = self.exclusive.entry(tag).or_default();
        e.rounds += 1;
        e.bytes_sent += sent;
        e.bytes_recv += recv;
        self.for_each_active(|s| {
            s.rounds += 1;
            s.bytes_sent += sent;
            s.bytes_recv += recv;
        });
        self.total.rounds += 1;
        self.total.bytes_sent += sent;
        self.total.bytes_recv += recv;
        if let Some(p) = self.profile {
            self.sim_ms += p.round_ms(sent.max(recv));
        }
    }

    pub fn record_offline(&mut self, bytes: u64) {
        let tag = self.current();
        self.exclusive.entry(tag).or_default().offline_bytes += bytes;
        self.for_each_active(|s| s.offline_bytes += bytes);
        self.total.offline_bytes += bytes;
    }

    pub fn inclusive(&self, op: Op) -> OpStats {
        self.inclusive.get(&op).copied().unwrap_or_default()
    }

    pub fn exclusive(&self, op: Op) -> OpStats {
        self.exclusive.get(&op).copied().unwrap_or_default()
    }

    pub fn invocations(&self, op: Op) -> u64 {
        self.inclusive(op).invocations
    }

    pub fn total(&self) -> OpStats {
        self.total
    }

    pub fn ops(&self) -> impl Iterator<Item = (Op, OpStats)> + '_ {
        self.inclusive.iter().map(|(k, v)| (*k, *v))
    }

    pub fn exclusive_ops(&self) -> impl Iterator<Item = (Op, OpStats)> + '_ {
        self.exclusive.iter().map(|(k, v)| (*k, *v))
    }

    pub fn reset(&mut self) {
        let profile = self.profile;
        *self = Meter::new();
        self.profile = profile;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for &op in Op::ALL {
            assert_eq!(Op::from_tag(op.tag()), Some(op));
            assert_eq!(Op::from_name(op.name()), Some(op));
        }
    }

    #[test]
    fn inclusive_and_exclusive_charging() {
        let mut m = Meter::new();
        m.enter(Op::SecGe, 1);
        m.enter(Op::And, 1);
        m.record_round(24, 24);
        m.exit(Op::And);
        m.record_round(40, 40);
        m.exit(Op::SecGe);
        assert_eq!(m.inclusive(Op::SecGe).bytes_sent, 64);
        assert_eq!(m.exclusive(Op::SecGe).bytes_sent, 40);
        assert_eq!(m.exclusive(Op::And).rounds, 1);
        let sum: u64 = m.exclusive_ops().map(|(_, s)| s.bytes_sent).sum();
        assert_eq!(sum, m.total().bytes_sent);
    }

    #[test]
    fn virtual_clock_advances_per_round() {
        let mut m = Meter::new();
        m.profile = Some(NetProfile::WAN);
        m.record_round(100, 100);
        assert!((m.sim_ms - (72.0 + 1e3 * 100.0 / 1e8)).abs() < 1e-9);
    }
}
