//! Measured against predicted online cost for every functionality, plus the
//! invocation breakdowns of round selection and the unlearning stage.

use crate::parties::run_both;
use rand::Rng;
use serde::Serialize;
use starfish_core::config::RunConfig;
use starfish_core::fixedpoint::Ring;
use starfish_core::gates::*;
use starfish_core::prg;
use starfish_core::roundsel::{sec_rs, SelectionParams, TargetHistory};
use starfish_core::sharing::{share_for, Op, Session};
use starfish_core::task::{ConvexTask, TaskParams};
use starfish_core::unlearn::{sec_tc, stage_one, starfish_run, UnlearnConfig};
use starfish_core::Result;

#[derive(Debug, Clone, Serialize)]
pub struct CostRow {
    pub op: String,
    pub shape: String,
    pub rounds: u64,
    pub bytes: u64,
    pub predicted_rounds: u64,
    pub predicted_bytes: u64,
}

impl CostRow {
    pub fn ok(&self) -> bool {
        self.rounds == self.predicted_rounds && self.bytes == self.predicted_bytes
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CountRow {
    pub what: String,
    pub measured: u64,
    pub expected: u64,
}

impl CountRow {
    pub fn ok(&self) -> bool {
        self.measured == self.expected
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub costs: Vec<CostRow>,
    pub counts: Vec<CountRow>,
    /// Informational invocation counts inside one SecRS run.
    pub selection_breakdown: Vec<(String, u64)>,
}

impl AuditReport {
    pub fn mismatches(&self) -> usize {
        self.costs.iter().filter(|r| !r.ok()).count() + self.counts.iter().filter(|r| !r.ok()).count()
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<16} {:<34} {:>7} {:>9} {:>7} {:>9}  ok\n",
            "op", "shape", "rounds", "bytes", "pred_r", "pred_b"
        );
        for r in &self.costs {
            s += &format!(
                "{:<16} {:<34} {:>7} {:>9} {:>7} {:>9}  {}\n",
                r.op,
                r.shape,
                r.rounds,
                r.bytes,
                r.predicted_rounds,
                r.predicted_bytes,
                if r.ok() { "yes" } else { "NO" }
            );
        }
        s += "\n";
        for c in &self.counts {
            s += &format!(
                "{:<52} {:>7} expected {:>7}  {}\n",
                c.what,
                c.measured,
                c.expected,
                if c.ok() { "yes" } else { "NO" }
            );
        }
        s += "\nsec_rs breakdown (invocations):";
        for (op, k) in &self.selection_breakdown {
            s += &format!(" {op}={k}");
        }
        s + "\n"
    }
}

struct Inputs {
    a: Vec<Ring>,
    b: Vec<Ring>,
    pos: Vec<Ring>,
    bits: Vec<Ring>,
    mats: Vec<Vec<Ring>>,
}

type Gate = Box<dyn Fn(&mut Session, &Inputs) -> Result<()> + Sync>;

fn measure(rc: &RunConfig, seed: u64, op: Op, plain: &Inputs, gate: &Gate) -> Result<(u64, u64)> {
    let (stats, _) = run_both(rc, seed, |s| {
        let mut r = prg::rng(seed, prg::AUDIT, 1);
        let mut sh = |v: &[Ring]| share_for(s.party(), v, &mut r);
        let x = Inputs {
            a: sh(&plain.a),
            b: sh(&plain.b),
            pos: sh(&plain.pos),
            bits: sh(&plain.bits),
            mats: plain.mats.iter().map(|m| sh(m)).collect(),
        };
        gate(s, &x)?;
        Ok(s.meter.inclusive(op))
    })?;
    Ok((stats.rounds, stats.bytes_sent))
}

pub fn audit(rc: &RunConfig) -> Result<AuditReport> {
    let c = rc.codec;
    let n = rc.audit_elems;
    let seed = prg::derive(rc.unlearn.seed, prg::AUDIT, 0);
    let mut r = prg::rng(seed, prg::AUDIT, 0);
    let mut vals = |lo: f64, hi: f64| -> Result<Vec<Ring>> {
        (0..n).map(|_| c.encode(r.gen_range(lo..hi))).collect()
    };
    let plain = Inputs {
        a: vals(-4.0, 4.0)?,
        b: vals(-4.0, 4.0)?,
        pos: vals(0.5, 4.0)?,
        bits: (0..n).map(|i| (i % 2) as Ring).collect(),
        mats: (0..n)
            .map(|i| {
                let d = 2.0 + (i % 3) as f64 * 0.5;
                c.encode_vec(&[d, 0.25, -0.5, d])
            })
            .collect::<Result<_>>()?,
    };
    let t = rc.audit_sort;
    let cases: Vec<(Op, Shape, Gate)> = vec![
        (Op::SecAdd, Shape::Elems(n), Box::new(|s, x| sec_add(s, &x.a, &x.b).map(drop))),
        (Op::SecRec, Shape::Elems(n), Box::new(|s, x| s.sec_rec(&x.a).map(drop))),
        (Op::SecMul, Shape::Elems(n), Box::new(|s, x| sec_mul(s, &x.a, &x.b).map(drop))),
        (Op::SecMul, Shape::MatMul { n: 2, k: n, m: 3 }, Box::new(move |s, x| {
            let lhs = [x.a.clone(), x.b.clone()].concat();
            let rhs = [x.a.clone(), x.b.clone(), x.pos.clone()].concat();
            sec_matmul(s, &lhs, &rhs, 2, n, 3).map(drop)
        })),
        (Op::SecMul3, Shape::Elems(n), Box::new(|s, x| sec_mul3(s, &x.a, &x.b, &x.pos).map(drop))),
        (Op::BitMul, Shape::Elems(n), Box::new(|s, x| bit_mul(s, &x.bits, &x.a).map(drop))),
        (Op::SecSel, Shape::Elems(n), Box::new(|s, x| sec_sel(s, &x.a, &x.b, &x.bits).map(drop))),
        (Op::SecSp, Shape::Sp { count: 2, len: n }, Box::new(|s, x| {
            sec_sp(s, &[x.a.clone(), x.b.clone()], &[x.b.clone(), x.pos.clone()]).map(drop)
        })),
        (Op::ZeroGen, Shape::Elems(n), Box::new(move |s, _| s.zero_gen(n).map(drop))),
        (Op::SecRanGen, Shape::Elems(n), Box::new(move |s, _| s.sec_ran_gen(n).map(drop))),
        (Op::SecGe, Shape::Elems(n), Box::new(|s, x| sec_ge(s, &x.a, &x.b).map(drop))),
        (Op::SecGe2, Shape::Elems(n), Box::new(|s, x| sec_ge2(s, &x.a, &x.pos, &x.b, &x.pos).map(drop))),
        (Op::SecGe3, Shape::Elems(n), Box::new(|s, x| {
            starfish_core::roundsel::sec_ge3(s, &x.bits, &x.pos, &x.bits, &x.pos).map(drop)
        })),
        (Op::SecGe4, Shape::Elems(n), Box::new(|s, x| {
            starfish_core::roundsel::sec_ge4(s, (&x.bits, &x.pos, &x.pos), (&x.bits, &x.pos, &x.pos)).map(drop)
        })),
        (Op::SecDiv, Shape::Elems(n), Box::new(|s, x| sec_div(s, &x.a, &x.pos).map(drop))),
        (Op::SecMax, Shape::Max { lists: 2, len: n }, Box::new(|s, x| {
            sec_max(s, &[x.a.clone(), x.b.clone()]).map(drop)
        })),
        (Op::SecSrt, Shape::Sort { t, cmp: Comparator::Ge, width: 2 }, Box::new(move |s, x| {
            let mut rows: Vec<Vec<Ring>> = Vec::with_capacity(t);
            for i in 0..t {
                let key = if i < n { x.a[i] } else { x.b[i % n] };
                rows.push(vec![key, s.public(&[i as Ring])[0]]);
            }
            sec_srt(s, Comparator::Ge, rows).map(drop)
        })),
        (Op::SecMi, Shape::Mi { count: n, k: 2 }, Box::new(|s, x| sec_mi(s, &x.mats, 2).map(drop))),
        (Op::SecRanGenInv, Shape::RanGenInv { k: 3 }, Box::new(|s, _| sec_ran_gen_inv(s, 3).map(drop))),
        (Op::SecTc, Shape::Tc { clients: 2, m: n }, Box::new(|s, x| {
            sec_tc(s, &[x.a.clone(), x.b.clone()], &x.pos[..2]).map(drop)
        })),
    ];
    let mut costs = Vec::with_capacity(cases.len());
    for (i, (op, shape, gate)) in cases.iter().enumerate() {
        let (rounds, bytes) = measure(rc, seed.wrapping_add(i as u64), *op, &plain, gate)?;
        let want = predict_cost(*op, *shape, &c)?;
        costs.push(CostRow {
            op: op.name().into(),
            shape: format!("{shape:?}"),
            rounds,
            bytes,
            predicted_rounds: want.rounds,
            predicted_bytes: want.bytes,
        });
    }

    let mut counts = Vec::new();
    let mut sizes = vec![4usize, 8, 16];
    if !sizes.contains(&t) {
        sizes.push(t);
    }
    for size in sizes {
        let (calls, _) = run_both(rc, seed, |s| {
            let rows = (0..size).map(|i| s.public(&[(i * 7 % size) as Ring])).collect();
            sec_srt(s, Comparator::Ge, rows)?;
            Ok(s.meter.comparator_calls)
        })?;
        let l = size.trailing_zeros() as u64;
        counts.push(CountRow {
            what: format!("sec_srt comparator calls, T = {size}"),
            measured: calls,
            expected: (l * l + l) * size as u64 / 4,
        });
    }

    let (selection_breakdown, cmp_calls) = selection_audit(rc, seed)?;
    counts.push(CountRow { what: "sec_rs comparator calls, T = 16".into(), measured: cmp_calls, expected: 80 });
    counts.extend(stage_two_audit(rc)?);
    Ok(AuditReport { costs, counts, selection_breakdown })
}

/// One SecRS run at T = 16 on random inputs.
fn selection_audit(rc: &RunConfig, seed: u64) -> Result<(Vec<(String, u64)>, u64)> {
    let c = rc.codec;
    let (t, m) = (16usize, 4usize);
    let mut r = prg::rng(seed, prg::AUDIT, 2);
    let mut models = vec![vec![0.0; m]];
    for i in 0..t {
        let mut next = models[i].clone();
        next[i % m] += 0.5 + r.gen_range(0.0..0.5);
        models.push(c.decode_vec(&c.encode_vec(&next)?));
    }
    let grads: Vec<Vec<Ring>> =
        (0..t).map(|_| (0..m).map(|_| c.encode(r.gen_range(-1.0..1.0))).collect()).collect::<Result<_>>()?;
    let norms: Vec<Ring> = grads
        .iter()
        .map(|g| c.encode(c.decode_vec(g).iter().map(|x| x * x).sum::<f64>().sqrt()))
        .collect::<Result<_>>()?;
    let params = SelectionParams::new(t, 0.6, c.word_bits, rc.unlearn.kappa)?;
    let (out, _) = run_both(rc, seed, |s| {
        let mut sr = prg::rng(seed, prg::AUDIT, 3);
        let g: Vec<Vec<Ring>> = grads.iter().map(|v| share_for(s.party(), v, &mut sr)).collect();
        let nm = share_for(s.party(), &norms, &mut sr);
        let th = TargetHistory { grads: &g, norms: Some(&nm), models: &models };
        sec_rs(s, &th, &params, None)?;
        let ops = [Op::SecSp, Op::SecMul, Op::SecGe, Op::SecGe2, Op::SecDiv, Op::SecSrt, Op::SecRec];
        let inv: Vec<(String, u64)> = ops.iter().map(|o| (o.name().to_string(), s.meter.invocations(*o))).collect();
        Ok((inv, s.meter.comparator_calls))
    })?;
    Ok(out)
}

/// Unlearning-stage invocation multiset with every check flagging every client.
fn stage_two_audit(rc: &RunConfig) -> Result<Vec<CountRow>> {
    let (n, m, t) = (4, 4, 10);
    let tp = TaskParams { n, m, mu: 4.0, kappa: 2.0, ..TaskParams::default() };
    let task = ConvexTask::generate(&tp, rc.unlearn.seed)?;
    let rem: Vec<usize> = (1..n).collect();
    let (mu, l) = task.curvature(&rem);
    let cfg = UnlearnConfig {
        n,
        m,
        t,
        alpha: 1.0,
        eta_l: 0.2 * mu / l,
        eta_u: mu / l,
        seed: rc.unlearn.seed,
        ..UnlearnConfig::default()
    };
    let (h0, h1) = run_both(rc, prg::derive(cfg.seed, prg::DEALER, 0), |s| stage_one(s, &task, &cfg))?;
    let (inv, _) = run_both(rc, prg::derive(cfg.seed, prg::DEALER, 1), |s| {
        let h = if s.party().is_first() { &h0 } else { &h1 };
        starfish_run(s, h, &task, &cfg)?;
        Ok([Op::SecMax, Op::SecRs, Op::SecUe, Op::SecTc].map(|o| s.meter.invocations(o)))
    })?;
    let tprime = cfg.t_prime() as u64;
    let expected = [n as u64, 1, tprime, tprime / cfg.t_c() as u64];
    Ok(["sec_max", "sec_rs", "sec_ue", "sec_tc"]
        .iter()
        .zip(inv.iter().zip(expected))
        .map(|(name, (&measured, expected))| CountRow {
            what: format!("unlearning stage {name} invocations"),
            measured,
            expected,
        })
        .collect())
}
