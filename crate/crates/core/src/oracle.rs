//! Plaintext references: the Starfish recovery in floating point, retraining
//! from scratch, random round selection, the removal bound, and metrics.

use crate::error::{Error, Result};
use crate::prg;
use crate::roundsel::plaintext_top_rounds;
use crate::task::ConvexTask;
use crate::unlearn::{BufferPolicy, PlainHistory, UnlearnConfig};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlainOutcome {
    /// Selected rounds (most similar first for cosine selection).
    pub selected: Vec<usize>,
    pub trajectory: Vec<Vec<f64>>,
    pub corrections: Vec<Vec<usize>>,
}

impl PlainOutcome {
    pub fn model(&self) -> &[f64] {
        self.trajectory.last().expect("trajectory starts at M_0")
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// H = fold of γI over the pairs, oldest first, with the same curvature
/// guard as the secure path.
pub fn lbfgs_matrix(pairs: &[(Vec<f64>, Vec<f64>)], m: usize, gamma: f64, eps: f64) -> Vec<f64> {
    let mut h = vec![0.0; m * m];
    for i in 0..m {
        h[i * m + i] = gamma;
    }
    for (dg, dm) in pairs {
        let s = dot(dg, dm);
        if s < eps {
            continue;
        }
        let rho = 1.0 / s;
        // V = I − ρ·ΔG·ΔMᵀ
        let mut v = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                v[a * m + b] = if a == b { 1.0 } else { 0.0 } - rho * dg[a] * dm[b];
            }
        }
        let mut hv = vec![0.0; m * m];
        for a in 0..m {
            for l in 0..m {
                let x = h[a * m + l];
                for b in 0..m {
                    hv[a * m + b] += x * v[l * m + b];
                }
            }
        }
        let mut next = vec![0.0; m * m];
        for a in 0..m {
            for l in 0..m {
                let x = v[l * m + a];
                for b in 0..m {
                    next[a * m + b] += x * hv[l * m + b];
                }
            }
        }
        for a in 0..m {
            for b in 0..m {
                next[a * m + b] += rho * dg[a] * dg[b];
            }
        }
        h = next;
    }
    h
}

fn matvec(h: &[f64], g: &[f64]) -> Vec<f64> {
    let m = g.len();
    (0..m).map(|a| dot(&h[a * m..(a + 1) * m], g)).collect()
}

/// The Stage II recovery in floating point, with the secure path's control
/// flow. `selection` replaces cosine selection when given.
pub fn plaintext_starfish(
    hist: &PlainHistory,
    task: &ConvexTask,
    cfg: &UnlearnConfig,
    selection: Option<&[usize]>,
) -> Result<PlainOutcome> {
    cfg.validate()?;
    let m = cfg.m;
    let rem = cfg.remaining();
    let deltas: Vec<f64> = (0..cfg.n)
        .map(|j| hist.thresholds.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let selected = match selection {
        Some(s) => s.to_vec(),
        None => {
            let tg: Vec<Vec<f64>> = hist.grads.iter().map(|r| r[cfg.target].clone()).collect();
            plaintext_top_rounds(&tg, &hist.models, cfg.t_prime())
        }
    };
    let mut order = selected.clone();
    order.sort_unstable();
    let t_c = cfg.t_c();
    let mut mhat = hist.models[0].clone();
    let mut trajectory = vec![mhat.clone()];
    let mut buffers: Vec<VecDeque<(Vec<f64>, Vec<f64>)>> = vec![VecDeque::new(); rem.len()];
    let mut corrections = Vec::new();
    for (k0, &r) in order.iter().enumerate() {
        let k = k0 + 1;
        let mut ghat: Vec<Vec<f64>> = rem
            .iter()
            .enumerate()
            .map(|(c, &j)| {
                let pairs: Vec<_> = buffers[c].iter().cloned().collect();
                let h = lbfgs_matrix(&pairs, m, cfg.gamma, cfg.epsilon);
                matvec(&h, &hist.grads[r - 1][j])
            })
            .collect();
        let mut corrected = Vec::new();
        if k % t_c == 0 {
            for (c, &j) in rem.iter().enumerate() {
                if ghat[c].iter().any(|x| x * x >= deltas[j] * deltas[j]) {
                    ghat[c] = task.grad(j, &mhat);
                    corrected.push(c);
                }
            }
        }
        let dm: Vec<f64> = mhat.iter().zip(&hist.models[r - 1]).map(|(a, b)| a - b).collect();
        for (c, &j) in rem.iter().enumerate() {
            let push = cfg.buffer_policy == BufferPolicy::All || corrected.contains(&c);
            if push && cfg.buffer_b > 0 {
                let dg = ghat[c].iter().zip(&hist.grads[r - 1][j]).map(|(a, b)| a - b).collect();
                buffers[c].push_back((dg, dm.clone()));
                while buffers[c].len() > cfg.buffer_b {
                    buffers[c].pop_front();
                }
            }
        }
        let n_r = rem.len() as f64;
        for a in 0..m {
            let g: f64 = ghat.iter().map(|v| v[a]).sum::<f64>() / n_r;
            mhat[a] -= cfg.eta_u * g;
        }
        trajectory.push(mhat.clone());
        corrections.push(corrected.iter().map(|&c| rem[c]).collect());
    }
    Ok(PlainOutcome { selected, trajectory, corrections })
}

/// FedAvg over the clients other than `excluded`, from the task's M_0.
pub fn train_from_scratch(task: &ConvexTask, excluded: usize, rounds: usize, eta: f64) -> Vec<Vec<f64>> {
    train_from(task, excluded, &task.initial_model(), rounds, eta)
}

/// FedAvg over the clients other than `excluded`, from `start`.
pub fn train_from(task: &ConvexTask, excluded: usize, start: &[f64], rounds: usize, eta: f64) -> Vec<Vec<f64>> {
    let clients: Vec<usize> = (0..task.n).filter(|&j| j != excluded).collect();
    let mut w = start.to_vec();
    let mut out = vec![w.clone()];
    for _ in 0..rounds {
        let g = task.avg_grad(&clients, &w);
        w.iter_mut().zip(&g).for_each(|(a, b)| *a -= eta * b);
        out.push(w.clone());
    }
    out
}

/// T′ rounds drawn uniformly without replacement from the seed's baseline stream.
pub fn random_rounds(cfg: &UnlearnConfig) -> Vec<usize> {
    let mut rng = prg::rng(cfg.seed, prg::BASELINE, 0);
    let mut v: Vec<usize> = sample(&mut rng, cfg.t, cfg.t_prime()).into_iter().map(|i| i + 1).collect();
    v.sort_unstable();
    v
}

/// The recovery with a random round subset in place of cosine selection.
pub fn random_selection_baseline(
    hist: &PlainHistory,
    task: &ConvexTask,
    cfg: &UnlearnConfig,
) -> Result<PlainOutcome> {
    plaintext_starfish(hist, task, cfg, Some(&random_rounds(cfg)))
}

/// 2·√(η_u·(1/μ + 1/(σ(μ−2)))·(F(M_0) − F(M*))·t_i).
pub fn theorem1_bound(mu: f64, eta_u: f64, sigma: f64, gap: f64, t_i: usize) -> Result<f64> {
    if mu <= 2.0 {
        return Err(Error::Assumption(format!("the removal bound needs μ > 2, got μ = {mu}")));
    }
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::Assumption(format!("σ = {sigma} not in (0, 1]")));
    }
    Ok(2.0 * (eta_u * (1.0 / mu + 1.0 / (sigma * (mu - 2.0))) * gap.max(0.0) * t_i as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub t_i: usize,
    /// Retraining rounds t = ⌈t_i/σ⌉ the step is compared with.
    pub t: usize,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
}

/// ‖M̂_{t_i} − M_{⌈t_i/σ⌉}‖ against the bound for every step of `trajectory`.
/// Uses η_u = μ/L, retraining at that rate.
pub fn bound_report(task: &ConvexTask, cfg: &UnlearnConfig, trajectory: &[Vec<f64>]) -> Result<Vec<BoundCheck>> {
    let rem = cfg.remaining();
    let (mu, l) = task.curvature(&rem);
    let eta = mu / l;
    // Both runs start from the trajectory's M_0, the grid-snapped initial model.
    let m0 = &trajectory[0];
    let gap = task.objective(&rem, m0) - task.objective(&rem, &task.optimum(&rem));
    let last = ((trajectory.len() - 1) as f64 / cfg.sigma).ceil() as usize;
    let retrain = train_from(task, cfg.target, m0, last, eta);
    trajectory
        .iter()
        .enumerate()
        .map(|(t_i, w)| {
            let t = (t_i as f64 / cfg.sigma - 1e-9).ceil() as usize;
            let measured = distance(w, &retrain[t]);
            let bound = theorem1_bound(mu, eta, cfg.sigma, gap, t_i)?;
            Ok(BoundCheck { t_i, t, measured, bound, margin: bound - measured })
        })
        .collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Average remaining-client participation saved relative to retraining,
/// (T − T_r)/T·100 with T_r the mean number of correction rounds.
pub fn arp(t: usize, correction_counts: &[usize]) -> f64 {
    if correction_counts.is_empty() {
        return 100.0;
    }
    let tr = correction_counts.iter().sum::<usize>() as f64 / correction_counts.len() as f64;
    100.0 * (t as f64 - tr) / t as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Distance of the final model to the retrained model.
    pub distance: f64,
    /// Distance per step to the retrained trajectory at the same step.
    pub per_step: Vec<f64>,
    /// Held-out test error of the final model (logistic task).
    pub ter: Option<f64>,
    /// F(M) − F(M*) over the remaining clients.
    pub excess_loss: f64,
    pub arp: f64,
}

pub fn metrics(
    task: &ConvexTask,
    cfg: &UnlearnConfig,
    trajectory: &[Vec<f64>],
    retrained: &[Vec<f64>],
    correction_counts: &[usize],
) -> Metrics {
    let rem = cfg.remaining();
    let last = trajectory.last().expect("non-empty trajectory");
    let opt = task.optimum(&rem);
    let per_step: Vec<f64> = trajectory
        .iter()
        .zip(retrained)
        .map(|(a, b)| distance(a, b))
        .collect();
    let counts: Vec<usize> = rem.iter().map(|&j| correction_counts.get(j).copied().unwrap_or(0)).collect();
    Metrics {
        distance: distance(last, retrained.last().expect("non-empty retraining")),
        per_step,
        ter: task.test_error(last),
        excess_loss: task.objective(&rem, last) - task.objective(&rem, &opt),
        arp: arp(cfg.t, &counts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_examples() {
        // A = 4I: μ = L = 4, η_u = 1, σ = 0.6, gap 2, t_i = 9
        let b = theorem1_bound(4.0, 1.0, 0.6, 2.0, 9).unwrap();
        assert!((b - 2.0 * 19.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(theorem1_bound(4.0, 1.0, 0.6, 2.0, 0).unwrap(), 0.0);
        let b2 = theorem1_bound(4.0, 1.0, 0.6, 2.0, 18).unwrap();
        assert!((b2 / b - 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(theorem1_bound(2.0, 1.0, 0.6, 2.0, 1), Err(Error::Assumption(_))));
    }

    #[test]
    fn single_pair_identity_update() {
        // ΔG = ΔM = e1: ρ = 1, V = I − e1e1ᵀ, H = VᵀV + e1e1ᵀ = I
        let h = lbfgs_matrix(&[(vec![1.0, 0.0], vec![1.0, 0.0])], 2, 1.0, 0.0);
        assert_eq!(h, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn arp_examples() {
        assert_eq!(arp(40, &[0, 0, 0]), 100.0);
        assert_eq!(arp(40, &[4, 4]), 90.0);
    }
}
