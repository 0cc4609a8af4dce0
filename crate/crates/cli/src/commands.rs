//! train, unlearn and compare.

use crate::parties::{run, run_both, Runs};
use serde::Serialize;
use starfish_core::config::{RunConfig, TransportMode};
use starfish_core::oracle::{
    bound_report, max_abs_diff, metrics, plaintext_starfish, random_selection_baseline, train_from,
    BoundCheck, Metrics,
};
use starfish_core::prg;
use starfish_core::roundsel::Method;
use starfish_core::sharing::{Op, OpStats, PartyId};
use starfish_core::task::ConvexTask;
use starfish_core::unlearn::{
    stage_one, starfish_run, transcript_jsonl, HistoryStore, UnlearnConfig, UnlearnOutcome,
};
use starfish_core::{Error, Result};
use std::path::{Path, PathBuf};

pub fn history_path(dir: &Path, party: PartyId) -> PathBuf {
    dir.join(format!("history.p{}.sfh", party.index()))
}

/// The task and the resolved unlearning config for `rc`.
pub fn setup(rc: &RunConfig) -> Result<(ConvexTask, UnlearnConfig)> {
    let task = ConvexTask::generate(&rc.task, rc.unlearn.seed)?;
    let cfg = rc.resolve(&task);
    cfg.validate()?;
    Ok((task, cfg))
}

pub struct TrainOutput {
    pub histories: Runs<HistoryStore>,
    pub stats: OpStats,
    pub per_round: OpStats,
}

/// Stage I. Writes the history shares this process holds into `out`.
pub fn train(rc: &RunConfig, party: Option<PartyId>, out: Option<&Path>) -> Result<TrainOutput> {
    let (task, cfg) = setup(rc)?;
    let runs = run(rc, party, prg::derive(cfg.seed, prg::DEALER, 0), |s| {
        let h = stage_one(s, &task, &cfg)?;
        Ok((h, s.meter.total(), s.meter.inclusive(Op::FlRound)))
    })?;
    let (stats, fl) = { let r = runs.first(); (r.1, r.2) };
    let histories = match runs {
        Runs::Both(a, b) => Runs::Both(a.0, b.0),
        Runs::One(p, a) => Runs::One(p, a.0),
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        match &histories {
            Runs::Both(a, b) => {
                a.write(&history_path(dir, PartyId::P0))?;
                b.write(&history_path(dir, PartyId::P1))?;
            }
            Runs::One(p, h) => h.write(&history_path(dir, *p))?,
        }
    }
    let t = cfg.t as u64;
    let per_round = OpStats {
        invocations: 1,
        rounds: fl.rounds / t,
        bytes_sent: fl.bytes_sent / t,
        bytes_recv: fl.bytes_recv / t,
        offline_bytes: fl.offline_bytes / t,
    };
    Ok(TrainOutput { histories, stats, per_round })
}

fn read_history(path: &Path) -> Result<HistoryStore> {
    if !path.exists() {
        return Err(Error::Config(format!("history file {} not found; run `train` first", path.display())));
    }
    HistoryStore::read(path)
}

/// Stage II from stored history shares. Both parties' outputs must agree.
pub fn unlearn(rc: &RunConfig, party: Option<PartyId>, history_dir: &Path) -> Result<UnlearnOutcome> {
    let (task, cfg) = setup(rc)?;
    let seed = prg::derive(cfg.seed, prg::DEALER, 1);
    let runs = if rc.transport == TransportMode::Tcp {
        let p = party.ok_or_else(|| Error::Config("tcp transport needs --party 0|1".into()))?;
        let h = read_history(&history_path(history_dir, p))?;
        run(rc, Some(p), seed, |s| starfish_run(s, &h, &task, &cfg))?
    } else {
        let h0 = read_history(&history_path(history_dir, PartyId::P0))?;
        let h1 = read_history(&history_path(history_dir, PartyId::P1))?;
        run(rc, None, seed, |s| {
            let h = if s.party().is_first() { &h0 } else { &h1 };
            starfish_run(s, h, &task, &cfg)
        })?
    };
    match runs {
        Runs::Both(a, b) => {
            if a.trajectory != b.trajectory || a.selected != b.selected || a.corrections != b.corrections {
                return Err(Error::Transport("parties disagree on public outputs".into()));
            }
            Ok(a)
        }
        Runs::One(_, a) => Ok(a),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelFile<'a> {
    pub model: &'a [f64],
    pub selected: &'a [usize],
    pub method: Method,
    pub corrections: &'a [Vec<usize>],
    pub check_steps: &'a [usize],
}

pub fn write_outcome(dir: &Path, out: &UnlearnOutcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("transcript.jsonl"), transcript_jsonl(&out.transcript))?;
    let model = ModelFile {
        model: out.model(),
        selected: &out.selected,
        method: out.method,
        corrections: &out.corrections,
        check_steps: &out.check_steps,
    };
    std::fs::write(dir.join("model.json"), to_json(&model))?;
    Ok(())
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report types serialize") + "\n"
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundSummary {
    pub checks: Vec<BoundCheck>,
    /// Over t_i ≥ 1; at t_i = 0 both sides are zero.
    pub min_margin: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub t: usize,
    pub t_prime: usize,
    pub t_c: usize,
    pub target: usize,
    pub eta_l: f64,
    pub eta_u: f64,
    pub method: Method,
    /// Secure selection, most similar first.
    pub selected: Vec<usize>,
    pub oracle_selected: Vec<usize>,
    pub random_selected: Vec<usize>,
    pub corrections: Vec<Vec<usize>>,
    pub correction_counts: Vec<usize>,
    /// Largest coordinate gap between the secure and plaintext trajectories.
    pub oracle_max_error: f64,
    /// Truncations on the secure path times 2^(1−p).
    pub error_budget: f64,
    pub truncations: u64,
    pub secure: Metrics,
    pub oracle: Metrics,
    pub random: Metrics,
    /// Absent when the task violates the bound's assumptions.
    pub bound: Option<BoundSummary>,
    pub bound_note: Option<String>,
    pub stage2_rounds: u64,
    pub stage2_bytes: u64,
}

pub struct CompareOutput {
    pub report: CompareReport,
    pub outcome: UnlearnOutcome,
    pub task: ConvexTask,
    pub cfg: UnlearnConfig,
}

/// Secure pipeline, plaintext oracle, retraining and random baseline, in-process.
pub fn compare(rc: &RunConfig) -> Result<CompareOutput> {
    let (task, cfg) = setup(rc)?;
    let (h0, h1) = run_both(rc, prg::derive(cfg.seed, prg::DEALER, 0), |s| stage_one(s, &task, &cfg))?;
    let (a, b) = run_both(rc, prg::derive(cfg.seed, prg::DEALER, 1), |s| {
        let h = if s.party().is_first() { &h0 } else { &h1 };
        let out = starfish_run(s, h, &task, &cfg)?;
        Ok((out, s.meter.total()))
    })?;
    if a.0.trajectory != b.0.trajectory || a.0.selected != b.0.selected {
        return Err(Error::Transport("parties disagree on public outputs".into()));
    }
    let (out, stats) = a;
    let plain = HistoryStore::reconstruct(&h0, &h1)?;
    let po = plaintext_starfish(&plain, &task, &cfg, None)?;
    let rnd = random_selection_baseline(&plain, &task, &cfg)?;
    let retrained = train_from(&task, cfg.target, &out.trajectory[0], cfg.t_prime(), cfg.eta_u);
    let counts = out.correction_counts(cfg.n);
    let count_of = |c: &[Vec<usize>]| {
        let mut v = vec![0; cfg.n];
        c.iter().flatten().for_each(|&j| v[j] += 1);
        v
    };
    let oracle_max_error = out
        .trajectory
        .iter()
        .zip(&po.trajectory)
        .map(|(x, y)| max_abs_diff(x, y))
        .fold(0.0, f64::max);
    let (bound, bound_note) = match bound_report(&task, &cfg, &out.trajectory) {
        Ok(checks) => {
            let min_margin = checks.iter().filter(|c| c.t_i > 0).map(|c| c.margin).fold(f64::INFINITY, f64::min);
            let violations = checks.iter().filter(|c| c.margin < 0.0).count();
            (Some(BoundSummary { checks, min_margin, violations }), None)
        }
        Err(e @ Error::Assumption(_)) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let report = CompareReport {
        seed: cfg.seed,
        n: cfg.n,
        m: cfg.m,
        t: cfg.t,
        t_prime: cfg.t_prime(),
        t_c: cfg.t_c(),
        target: cfg.target,
        eta_l: cfg.eta_l,
        eta_u: cfg.eta_u,
        method: out.method,
        selected: out.selected.clone(),
        oracle_selected: po.selected.clone(),
        random_selected: rnd.selected.clone(),
        corrections: out.corrections.clone(),
        correction_counts: counts.clone(),
        oracle_max_error,
        error_budget: out.truncations as f64 * 2f64.powi(1 - rc.codec.precision_p as i32),
        truncations: out.truncations,
        secure: metrics(&task, &cfg, &out.trajectory, &retrained, &counts),
        oracle: metrics(&task, &cfg, &po.trajectory, &retrained, &count_of(&po.corrections)),
        random: metrics(&task, &cfg, &rnd.trajectory, &retrained, &count_of(&rnd.corrections)),
        bound,
        bound_note,
        stage2_rounds: stats.rounds,
        stage2_bytes: stats.bytes_sent,
    };
    Ok(CompareOutput { report, outcome: out, task, cfg })
}
