//! Running the two servers: both in-process, or this process's party over TCP.

use starfish_core::config::{RunConfig, TransportMode};
use starfish_core::sharing::{inproc_pair, Channel, Dealer, PartyId, Session, TcpChannel};
use starfish_core::{Error, Result};

fn session(rc: &RunConfig, party: PartyId, chan: Box<dyn Channel>, seed: u64) -> Session {
    let mut s = Session::new(party, rc.codec, chan, Dealer::new(seed, party), seed);
    s.cond_bound = rc.cond_bound;
    s.meter.profile = rc.profile;
    s
}

/// Both parties in-process; returns (party 0, party 1) results.
pub fn run_both<T, F>(rc: &RunConfig, seed: u64, f: F) -> Result<(T, T)>
where
    T: Send,
    F: Fn(&mut Session) -> Result<T> + Sync,
{
    let (c0, c1) = inproc_pair();
    let f = &f;
    std::thread::scope(|scope| {
        let h1 = scope.spawn(move || f(&mut session(rc, PartyId::P1, Box::new(c1), seed)));
        let r0 = {
            let mut s = session(rc, PartyId::P0, Box::new(c0), seed);
            f(&mut s)
        };
        let r1 = h1.join().map_err(|_| Error::Transport("party 1 panicked".into()))?;
        Ok((r0?, r1?))
    })
}

/// Results of the parties this process ran.
pub enum Runs<T> {
    Both(T, T),
    One(PartyId, T),
}

impl<T> Runs<T> {
    /// Party 0's result when present, else the single local one.
    pub fn first(&self) -> &T {
        match self {
            Runs::Both(a, _) => a,
            Runs::One(_, t) => t,
        }
    }
}

/// Run `f` under the configured transport. TCP mode runs only `party`.
pub fn run<T, F>(rc: &RunConfig, party: Option<PartyId>, seed: u64, f: F) -> Result<Runs<T>>
where
    T: Send,
    F: Fn(&mut Session) -> Result<T> + Sync,
{
    match rc.transport {
        TransportMode::Inproc => {
            let (a, b) = run_both(rc, seed, f)?;
            Ok(Runs::Both(a, b))
        }
        TransportMode::Tcp => {
            let party = party.ok_or_else(|| Error::Config("tcp transport needs --party 0|1".into()))?;
            let chan = TcpChannel::establish(party.is_first(), &rc.addr)?;
            let mut s = session(rc, party, Box::new(chan), seed);
            Ok(Runs::One(party, f(&mut s)?))
        }
    }
}
