//! The Starfish scheme.
//!
//! Stage I runs federated training over the two servers: every round each
//! client secret-shares its gradient, the gradient norm and its per-round
//! threshold, and the servers reveal only the aggregate. Stage II unlearns a
//! target client: threshold determination, secure round selection, then one
//! L-BFGS update estimation per selected round with periodic threshold
//! checks and exact-gradient corrections.

use crate::error::{Error, Result};
use crate::fixedpoint::{Codec, Ring};
use crate::gates::{
    add, bit_mul, mul_public, public_matmul, sec_ge, sec_matmul_batch, sec_max, sec_mi, sec_mul,
    sec_mul_exact, sec_sp_public, sub, MatMul,
};
use crate::prg;
use crate::roundsel::{sec_rs, Method, SelectionParams, TargetHistory};
use crate::sharing::{share_for, Op, OpStats, PartyId, Session};
use crate::task::ConvexTask;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;

/// Which clients contribute a curvature pair after each unlearning step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BufferPolicy {
    /// Only clients whose gradient was recomputed exactly at this step.
    Corrected,
    /// Every remaining client, using its estimated gradient.
    All,
}

impl std::str::FromStr for BufferPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corrected" => Ok(BufferPolicy::Corrected),
            "all" => Ok(BufferPolicy::All),
            _ => Err(Error::Config(format!("unknown buffer policy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlearnConfig {
    pub n: usize,
    pub m: usize,
    /// FL rounds T.
    pub t: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    /// L-BFGS buffer size B.
    pub buffer_b: usize,
    pub eta_l: f64,
    pub eta_u: f64,
    /// H₀ = γI.
    pub gamma: f64,
    /// Curvature pairs with ΔGᵀΔM < ε are skipped.
    pub epsilon: f64,
    pub buffer_policy: BufferPolicy,
    /// Client to unlearn.
    pub target: usize,
    /// Computational security parameter, used by the T_δ switch.
    pub kappa: u32,
    /// Overrides the T_δ choice between selection methods.
    pub method: Option<Method>,
    pub seed: u64,
}

impl Default for UnlearnConfig {
    fn default() -> Self {
        UnlearnConfig {
            n: 20,
            m: 8,
            t: 20,
            sigma: 0.6,
            alpha: 0.4,
            beta: 0.1,
            buffer_b: 2,
            eta_l: 0.005,
            eta_u: 0.005,
            gamma: 1.0,
            epsilon: 1.0 / 1024.0,
            buffer_policy: BufferPolicy::Corrected,
            target: 0,
            kappa: 128,
            method: None,
            seed: 0,
        }
    }
}

impl UnlearnConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n < 2 {
            return bad(format!("n = {} needs at least two clients", self.n));
        }
        if self.m == 0 || self.t == 0 {
            return bad("m and T must be positive".into());
        }
        for (name, v) in [("sigma", self.sigma), ("alpha", self.alpha)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} = {v} not in (0, 1]"));
            }
        }
        // β > 1 pushes T_c past T and disables correction entirely.
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta = {} must be positive", self.beta));
        }
        if self.target >= self.n {
            return bad(format!("target {} out of range for n = {}", self.target, self.n));
        }
        for (name, v) in [("eta_l", self.eta_l), ("eta_u", self.eta_u), ("gamma", self.gamma)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return bad("epsilon must be non-negative".into());
        }
        Ok(())
    }

    /// T′ = ⌈σT⌉.
    pub fn t_prime(&self) -> usize {
        ((self.sigma * self.t as f64).ceil() as usize).clamp(1, self.t)
    }

    /// T_c = ⌈βT⌉.
    pub fn t_c(&self) -> usize {
        ((self.beta * self.t as f64).ceil() as usize).max(1)
    }

    pub fn remaining(&self) -> Vec<usize> {
        (0..self.n).filter(|&j| j != self.target).collect()
    }
}

/// What a client computes in a Stage I round, in the clear.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub grad: Vec<f64>,
    pub norm: f64,
    pub threshold: f64,
}

/// δ such that an α fraction of |g|'s coordinates strictly exceed it, as
/// the lower-interpolated empirical (1 − α)-quantile of |g|.
pub fn client_threshold(g: &[f64], alpha: f64) -> f64 {
    let mut a: Vec<f64> = g.iter().map(|x| x.abs()).collect();
    a.sort_by(f64::total_cmp);
    let m = a.len();
    let k = (alpha * m as f64 + 1e-9).floor() as usize;
    if k >= m {
        0.0
    } else {
        a[m - 1 - k]
    }
}

pub fn client_round(task: &ConvexTask, j: usize, model: &[f64], alpha: f64) -> ClientUpdate {
    let grad = task.grad(j, model);
    let norm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = client_threshold(&grad, alpha);
    ClientUpdate { grad, norm, threshold }
}

/// Snap a real vector onto the fixed-point grid.
pub fn snap(codec: &Codec, v: &[f64]) -> Result<Vec<f64>> {
    Ok(codec.decode_vec(&codec.encode_vec(v)?))
}

/// One server's share of the Stage I history.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryStore {
    pub party: PartyId,
    pub codec: Codec,
    pub n: usize,
    pub m: usize,
    pub t: usize,
    /// Public models M_0..M_T, encoded.
    pub models: Vec<Vec<Ring>>,
    /// `grads[i][j]`: share of client j's gradient in round i + 1.
    pub grads: Vec<Vec<Vec<Ring>>>,
    pub norms: Vec<Vec<Ring>>,
    pub thresholds: Vec<Vec<Ring>>,
}

const MAGIC: &[u8; 4] = b"SFH1";
const FORMAT_VERSION: u32 = 1;

impl HistoryStore {
    pub fn model(&self, i: usize) -> Vec<f64> {
        self.codec.decode_vec(&self.models[i])
    }

    pub fn models_f64(&self) -> Vec<Vec<f64>> {
        (0..=self.t).map(|i| self.model(i)).collect()
    }

    /// Serialized form:
    ///
    /// ```text
    /// "SFH1"  u32 version  then u64 words:
    /// party  n  m  T  p  e  slack
    /// models      (T+1)·m
    /// gradients   T·n·m    round-major, then client
    /// norms       T·n
    /// thresholds  T·n
    /// ```
    pub fn to_bytes(&self) -> Vec<u8> {
        let words = 7 + (self.t + 1) * self.m + self.t * self.n * (self.m + 2);
        let mut out = Vec::with_capacity(8 + 8 * words);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let header = [
            self.party.index() as u64,
            self.n as u64,
            self.m as u64,
            self.t as u64,
            self.codec.precision_p as u64,
            self.codec.range_e as u64,
            self.codec.slack as u64,
        ];
        let body = header
            .iter()
            .chain(self.models.iter().flatten())
            .chain(self.grads.iter().flatten().flatten())
            .chain(self.norms.iter().flatten())
            .chain(self.thresholds.iter().flatten());
        for w in body {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fmt = |m: &str| Error::Format(m.to_string());
        if bytes.len() < 8 || &bytes[..4] != MAGIC {
            return Err(fmt("missing SFH1 magic"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let body = &bytes[8..];
        if !body.len().is_multiple_of(8) {
            return Err(fmt("body is not a whole number of words"));
        }
        let words: Vec<u64> =
            body.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
        if words.len() < 7 {
            return Err(fmt("truncated header"));
        }
        let party = PartyId::from_index(words[0] as usize).ok_or_else(|| fmt("bad party id"))?;
        let (n, m, t) = (words[1] as usize, words[2] as usize, words[3] as usize);
        let codec = Codec::new(words[4] as u32, words[5] as u32, words[6] as u32)
            .map_err(|e| Error::Format(format!("bad codec: {e}")))?;
        let want = (t + 1)
            .checked_mul(m)
            .and_then(|a| t.checked_mul(n)?.checked_mul(m + 2).map(|b| a + b + 7))
            .ok_or_else(|| fmt("dimensions overflow"))?;
        if words.len() != want {
            return Err(Error::Format(format!("expected {want} words, found {}", words.len())));
        }
        let mut it = words[7..].iter().copied();
        let mut take = |k: usize| -> Vec<Ring> { it.by_ref().take(k).collect() };
        let models = (0..=t).map(|_| take(m)).collect();
        let grads = (0..t).map(|_| (0..n).map(|_| take(m)).collect()).collect();
        let norms = (0..t).map(|_| take(n)).collect();
        let thresholds = (0..t).map(|_| take(n)).collect();
        Ok(HistoryStore { party, codec, n, m, t, models, grads, norms, thresholds })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    /// Combine both servers' shares into the plaintext history.
    pub fn reconstruct(a: &HistoryStore, b: &HistoryStore) -> Result<PlainHistory> {
        if (a.n, a.m, a.t) != (b.n, b.m, b.t) || a.codec != b.codec || a.party == b.party {
            return Err(Error::Format("history shares do not belong together".into()));
        }
        let c = a.codec;
        let rec = |x: &[Ring], y: &[Ring]| -> Vec<f64> {
            c.decode_vec(&crate::sharing::reconstruct(x, y))
        };
        Ok(PlainHistory {
            models: a.models_f64(),
            grads: (0..a.t)
                .map(|i| (0..a.n).map(|j| rec(&a.grads[i][j], &b.grads[i][j])).collect())
                .collect(),
            norms: (0..a.t).map(|i| rec(&a.norms[i], &b.norms[i])).collect(),
            thresholds: (0..a.t).map(|i| rec(&a.thresholds[i], &b.thresholds[i])).collect(),
        })
    }
}

/// The history in the clear, for oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct PlainHistory {
    pub models: Vec<Vec<f64>>,
    pub grads: Vec<Vec<Vec<f64>>>,
    pub norms: Vec<Vec<f64>>,
    pub thresholds: Vec<Vec<f64>>,
}

/// Client j's share of an encoded vector it sends at `step`.
fn client_share(s: &Session, seed: u64, j: usize, step: u64, values: &[Ring]) -> Vec<Ring> {
    let mut rng = prg::client_stream(seed, j, step);
    share_for(s.party(), values, &mut rng)
}

/// Stage I: T rounds of federated training with assistive-information sharing.
pub fn stage_one(s: &mut Session, task: &ConvexTask, cfg: &UnlearnConfig) -> Result<HistoryStore> {
    let codec = s.codec;
    let (n, m) = (cfg.n, cfg.m);
    if task.n != n || task.m != m {
        return Err(Error::Config(format!(
            "task is {}×{} but config says n = {n}, m = {m}",
            task.n, task.m
        )));
    }
    let mut model = snap(&codec, &task.initial_model())?;
    let mut hist = HistoryStore {
        party: s.party(),
        codec,
        n,
        m,
        t: cfg.t,
        models: vec![codec.encode_vec(&model)?],
        grads: Vec::with_capacity(cfg.t),
        norms: Vec::with_capacity(cfg.t),
        thresholds: Vec::with_capacity(cfg.t),
    };
    for i in 1..=cfg.t {
        let mut grads = Vec::with_capacity(n);
        let mut norms = Vec::with_capacity(n);
        let mut deltas = Vec::with_capacity(n);
        for j in 0..n {
            let u = client_round(task, j, &model, cfg.alpha);
            let mut enc = codec.encode_vec(&u.grad)?;
            enc.push(codec.encode(u.norm)?);
            enc.push(codec.encode(u.threshold)?);
            let mut sh = client_share(s, cfg.seed, j, i as u64, &enc);
            deltas.push(sh.pop().unwrap());
            norms.push(sh.pop().unwrap());
            grads.push(sh);
        }
        let sum = s.scoped(Op::FlRound, 1, |s| {
            let mut acc = vec![0u64; m];
            for g in &grads {
                acc = add(&acc, g);
            }
            s.sec_rec(&acc)
        })?;
        let avg = codec.decode_vec(&sum);
        let next: Vec<f64> =
            model.iter().zip(&avg).map(|(w, g)| w - cfg.eta_l * g / n as f64).collect();
        model = snap(&codec, &next)?;
        hist.models.push(codec.encode_vec(&model)?);
        hist.grads.push(grads);
        hist.norms.push(norms);
        hist.thresholds.push(deltas);
    }
    Ok(hist)
}

/// One line of the run transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub op: String,
    /// Unlearning step (0 for set-up phases).
    pub step: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round: Option<usize>,
    pub rounds: u64,
    pub bytes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flags: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected: Option<Vec<usize>>,
}

pub fn transcript_jsonl(records: &[TranscriptRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("transcript records serialize"));
        out.push('\n');
    }
    out
}

/// Result of Stage II, identical for both servers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlearnOutcome {
    /// Selected rounds, most similar first.
    pub selected: Vec<usize>,
    pub method: Method,
    /// M̂ after each step, starting from M_0.
    pub trajectory: Vec<Vec<f64>>,
    /// Clients corrected at each step.
    pub corrections: Vec<Vec<usize>>,
    /// Steps on which threshold checking ran.
    pub check_steps: Vec<usize>,
    pub transcript: Vec<TranscriptRecord>,
    /// Truncating operations executed during Stage II.
    pub truncations: u64,
}

impl UnlearnOutcome {
    pub fn model(&self) -> &[f64] {
        self.trajectory.last().expect("trajectory starts at M_0")
    }

    /// How many steps each client was corrected in.
    pub fn correction_counts(&self, n: usize) -> Vec<usize> {
        let mut c = vec![0; n];
        for step in &self.corrections {
            for &j in step {
                c[j] += 1;
            }
        }
        c
    }
}

/// A buffered curvature pair: shared ΔG and public ΔM.
#[derive(Debug, Clone)]
struct Pair {
    dg: Vec<Ring>,
    dm: Vec<f64>,
}

fn identity(m: usize, scale: f64) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        out[i * m + i] = scale;
    }
    out
}

fn transpose(x: &[Ring], m: usize) -> Vec<Ring> {
    (0..m * m).map(|i| x[(i % m) * m + i / m]).collect()
}

/// SecUE: estimated gradients Ĝ^j = H_j·G^j for every client in `grads`,
/// with H_j folded from γI over that client's buffered pairs (oldest first).
fn sec_ue(
    s: &mut Session,
    grads: &[&[Ring]],
    buffers: &[&VecDeque<Pair>],
    cfg: &UnlearnConfig,
) -> Result<Vec<Vec<Ring>>> {
    let m = cfg.m;
    let codec = s.codec;
    s.scoped(Op::SecUe, 1, |s| {
        let h0 = s.public(&codec.encode_vec(&identity(m, cfg.gamma))?);
        let mut hs: Vec<Vec<Ring>> = vec![h0; grads.len()];
        let depth = buffers.iter().map(|b| b.len()).max().unwrap_or(0);
        let one = codec.one();
        for pos in 0..depth {
            let who: Vec<usize> = (0..grads.len()).filter(|&c| buffers[c].len() > pos).collect();
            let pairs: Vec<&Pair> = who.iter().map(|&c| &buffers[c][pos]).collect();
            let dms: Vec<Vec<Ring>> =
                pairs.iter().map(|p| codec.encode_vec(&p.dm)).collect::<Result<_>>()?;
            let dgs: Vec<Vec<Ring>> = pairs.iter().map(|p| p.dg.clone()).collect();
            // curvature s = ΔGᵀΔM, guarded obliviously: c = [s ≥ ε]
            let curv = sec_sp_public(s, &dgs, &dms)?;
            let eps = s.public(&vec![codec.encode(cfg.epsilon)?; who.len()]);
            let c = sec_ge(s, &curv, &eps)?;
            let shifted: Vec<Ring> = curv.iter().map(|x| x.wrapping_sub(if s.party().is_first() { one } else { 0 })).collect();
            let kept = bit_mul(s, &c, &shifted)?;
            let safe = crate::gates::add_public(s.party(), &kept, &vec![one; who.len()]);
            let inv = sec_mi(s, &safe.iter().map(|v| vec![*v]).collect::<Vec<_>>(), 1)?;
            let rho = bit_mul(s, &c, &inv.concat())?;
            // u = ρ·ΔG, V = I − u·ΔMᵀ (ΔM public, so V is local)
            let rho_b: Vec<Ring> = rho.iter().flat_map(|r| std::iter::repeat_n(*r, m)).collect();
            let us = sec_mul(s, &rho_b, &dgs.concat())?;
            let eye = s.public(&codec.encode_vec(&identity(m, 1.0))?);
            let mut vs = Vec::with_capacity(who.len());
            for (idx, dm) in dms.iter().enumerate() {
                let u = &us[idx * m..(idx + 1) * m];
                let outer = public_matmul(s, dm, u, m, 1, m, false, codec.precision_p)?;
                vs.push(sub(&eye, &outer));
            }
            // H⁺ = Vᵀ·H·V + u·ΔGᵀ
            let items: Vec<MatMul<'_>> = who
                .iter()
                .enumerate()
                .flat_map(|(idx, &cl)| {
                    [
                        MatMul { x: &hs[cl], y: &vs[idx], n: m, k: m, m },
                        MatMul { x: &us[idx * m..(idx + 1) * m], y: &dgs[idx], n: m, k: 1, m },
                    ]
                })
                .collect();
            let prods = sec_matmul_batch(s, &items)?;
            let vts: Vec<Vec<Ring>> = vs.iter().map(|v| transpose(v, m)).collect();
            let items: Vec<MatMul<'_>> = (0..who.len())
                .map(|idx| MatMul { x: &vts[idx], y: &prods[2 * idx], n: m, k: m, m })
                .collect();
            let vhv = sec_matmul_batch(s, &items)?;
            for (idx, &cl) in who.iter().enumerate() {
                hs[cl] = add(&vhv[idx], &prods[2 * idx + 1]);
            }
        }
        let items: Vec<MatMul<'_>> = grads
            .iter()
            .zip(&hs)
            .map(|(g, h)| MatMul { x: h, y: g, n: m, k: m, m: 1 })
            .collect();
        if depth == 0 && cfg.gamma == 1.0 {
            return Ok(grads.iter().map(|g| g.to_vec()).collect());
        }
        if depth == 0 {
            let gamma = vec![codec.encode(cfg.gamma)?; m];
            return grads.iter().map(|g| mul_public(s, &gamma, g)).collect();
        }
        sec_matmul_batch(s, &items)
    })
}

/// SecTC: revealed flags f^j = [∃k: ĝ^j(k)² ≥ (δ^j)²]. Squares are exact
/// products of the encoded values, so the test is exact.
pub fn sec_tc(s: &mut Session, ghat: &[Vec<Ring>], delta: &[Ring]) -> Result<Vec<bool>> {
    crate::gates::check_len(ghat.len(), delta.len(), "sec_tc")?;
    let n = ghat.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    s.scoped(Op::SecTc, 1, |s| {
        let mut xs: Vec<Ring> = ghat.concat();
        xs.extend_from_slice(delta);
        let sq = sec_mul_exact(s, &xs, &xs)?;
        let total = sq.len() - n;
        let (g2, d2) = sq.split_at(total);
        let mut rhs = Vec::with_capacity(total);
        for (j, g) in ghat.iter().enumerate() {
            rhs.extend(std::iter::repeat_n(d2[j], g.len()));
        }
        let exceed = sec_ge(s, g2, &rhs)?;
        let mut counts = Vec::with_capacity(n);
        let mut off = 0;
        for g in ghat {
            counts.push(exceed[off..off + g.len()].iter().fold(0u64, |a, b| a.wrapping_add(*b)));
            off += g.len();
        }
        let ones = s.public(&vec![1; n]);
        let flags = sec_ge(s, &counts, &ones)?;
        let open = s.sec_rec(&flags)?;
        Ok(open.iter().map(|&f| f == 1).collect())
    })
}

fn stats_delta(before: &OpStats, after: &OpStats) -> (u64, u64) {
    let d = after.minus(before);
    (d.rounds, d.bytes_sent)
}

/// Stage II of Starfish for one server.
pub fn starfish_run(
    s: &mut Session,
    hist: &HistoryStore,
    task: &ConvexTask,
    cfg: &UnlearnConfig,
) -> Result<UnlearnOutcome> {
    cfg.validate()?;
    if (hist.n, hist.m, hist.t) != (cfg.n, cfg.m, cfg.t) {
        return Err(Error::Config(format!(
            "history is n={}, m={}, T={} but config says n={}, m={}, T={}",
            hist.n, hist.m, hist.t, cfg.n, cfg.m, cfg.t
        )));
    }
    let codec = s.codec;
    let m = cfg.m;
    let rem = cfg.remaining();
    let trunc0 = s.meter.truncations;
    let mut transcript = Vec::new();
    let mut mark = s.meter.total();
    let mut record = |s: &Session,
                      op: &str,
                      step: usize,
                      round: Option<usize>,
                      flags: Option<Vec<usize>>,
                      selected: Option<Vec<usize>>,
                      transcript: &mut Vec<TranscriptRecord>| {
        let now = s.meter.total();
        let (rounds, bytes) = stats_delta(&mark, &now);
        mark = now;
        transcript.push(TranscriptRecord { op: op.into(), step, round, rounds, bytes, flags, selected });
    };

    // Threshold determination: δ^j = max_i δ_i^j, for every client.
    let lists: Vec<Vec<Ring>> =
        (0..cfg.n).map(|j| (0..cfg.t).map(|i| hist.thresholds[i][j]).collect()).collect();
    let deltas = s.scoped(Op::Threshold, 1, |s| sec_max(s, &lists))?;
    record(s, "threshold", 0, None, None, None, &mut transcript);

    // Round selection on the target's history.
    let models = hist.models_f64();
    let tgrads: Vec<Vec<Ring>> = (0..cfg.t).map(|i| hist.grads[i][cfg.target].clone()).collect();
    let tnorms: Vec<Ring> = (0..cfg.t).map(|i| hist.norms[i][cfg.target]).collect();
    let params = SelectionParams::new(cfg.t, cfg.sigma, codec.word_bits, cfg.kappa)?;
    let th = TargetHistory { grads: &tgrads, norms: Some(&tnorms), models: &models };
    let sel = sec_rs(s, &th, &params, cfg.method)?;
    record(s, "sec_rs", 0, None, None, Some(sel.rounds.clone()), &mut transcript);

    let mut order = sel.rounds.clone();
    order.sort_unstable();
    let t_c = cfg.t_c();
    let n_r = rem.len() as f64;
    let mut mhat = models[0].clone();
    let mut trajectory = vec![mhat.clone()];
    let mut buffers: Vec<VecDeque<Pair>> = vec![VecDeque::new(); rem.len()];
    let mut corrections = Vec::with_capacity(order.len());
    let mut check_steps = Vec::new();
    let rem_deltas: Vec<Ring> = rem.iter().map(|&j| deltas[j]).collect();

    for (k0, &r) in order.iter().enumerate() {
        let k = k0 + 1;
        let stored: Vec<&[Ring]> = rem.iter().map(|&j| hist.grads[r - 1][j].as_slice()).collect();
        let bufrefs: Vec<&VecDeque<Pair>> = buffers.iter().collect();
        let mut ghat = sec_ue(s, &stored, &bufrefs, cfg)?;
        record(s, "sec_ue", k, Some(r), None, None, &mut transcript);

        let mut corrected = Vec::new();
        if k % t_c == 0 {
            check_steps.push(k);
            let flags = sec_tc(s, &ghat, &rem_deltas)?;
            let flagged: Vec<usize> = (0..rem.len()).filter(|&c| flags[c]).collect();
            record(
                s,
                "sec_tc",
                k,
                Some(r),
                Some(flagged.iter().map(|&c| rem[c]).collect()),
                None,
                &mut transcript,
            );
            if !flagged.is_empty() {
                s.scoped(Op::Correction, flagged.len() as u64, |s| -> Result<()> {
                    for &c in &flagged {
                        let j = rem[c];
                        let g = codec.encode_vec(&task.grad(j, &mhat))?;
                        ghat[c] = client_share(s, cfg.seed, j, (cfg.t + k) as u64, &g);
                    }
                    Ok(())
                })?;
                record(s, "correction", k, Some(r), None, None, &mut transcript);
            }
            corrected = flagged;
        }

        let prev = &models[r - 1];
        let dm: Vec<f64> = mhat.iter().zip(prev).map(|(a, b)| a - b).collect();
        for c in 0..rem.len() {
            let push = cfg.buffer_policy == BufferPolicy::All || corrected.contains(&c);
            if push && cfg.buffer_b > 0 {
                buffers[c].push_back(Pair { dg: sub(&ghat[c], stored[c]), dm: dm.clone() });
                while buffers[c].len() > cfg.buffer_b {
                    buffers[c].pop_front();
                }
            }
        }

        // Aggregate: reveal Σ_j Ĝ^j and step M̂. Part of this step's SecUE.
        let sum = s.scoped(Op::SecUe, 0, |s| {
            let mut acc = vec![0u64; m];
            for g in &ghat {
                acc = add(&acc, g);
            }
            s.sec_rec(&acc)
        })?;
        let agg = codec.decode_vec(&sum);
        let next: Vec<f64> = mhat.iter().zip(&agg).map(|(w, g)| w - cfg.eta_u * g / n_r).collect();
        mhat = snap(&codec, &next)?;
        trajectory.push(mhat.clone());
        record(s, "aggregate", k, Some(r), None, None, &mut transcript);
        corrections.push(corrected.iter().map(|&c| rem[c]).collect());
    }

    Ok(UnlearnOutcome {
        selected: sel.rounds,
        method: sel.method,
        trajectory,
        corrections,
        check_steps,
        transcript,
        truncations: s.meter.truncations - trunc0,
    })
}

/// Stage I with both servers in-process; returns both history shares.
pub fn train_inproc(
    codec: Codec,
    task: &ConvexTask,
    cfg: &UnlearnConfig,
) -> Result<(HistoryStore, HistoryStore)> {
    Session::run_inproc(codec, prg::derive(cfg.seed, prg::DEALER, 0), |s| stage_one(s, task, cfg))
}

/// Stage II with both servers in-process. Returns party 0's outcome after
/// checking that both parties agree on every public output.
pub fn unlearn_inproc(
    task: &ConvexTask,
    cfg: &UnlearnConfig,
    hists: (&HistoryStore, &HistoryStore),
) -> Result<UnlearnOutcome> {
    let codec = hists.0.codec;
    let (a, b) = Session::run_inproc(codec, prg::derive(cfg.seed, prg::DEALER, 1), |s| {
        let h = if s.party().is_first() { hists.0 } else { hists.1 };
        starfish_run(s, h, task, cfg)
    })?;
    if a.trajectory != b.trajectory || a.selected != b.selected || a.corrections != b.corrections {
        return Err(Error::Transport("parties disagree on public outputs".into()));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        assert_eq!(client_threshold(&[0.1, -0.2, 0.3, 0.4, -0.5], 0.4), 0.3);
        assert_eq!(client_threshold(&[0.1, 0.2], 1.0), 0.0);
        assert_eq!(client_threshold(&[0.0; 4], 0.4), 0.0);
    }

    #[test]
    fn derived_counts() {
        let c = UnlearnConfig { t: 40, ..Default::default() };
        assert_eq!(c.t_prime(), 24);
        assert_eq!(c.t_c(), 4);
        assert!(c.validate().is_ok());
        assert!(UnlearnConfig { sigma: 0.0, ..c.clone() }.validate().is_err());
        assert!(UnlearnConfig { target: 20, ..c }.validate().is_err());
    }
}
