//! Secure round selection: rank historical rounds by the target client's
//! cosine similarity to the global update and reveal the top T′ round ids.

use crate::error::{Error, Result};
use crate::fixedpoint::Ring;
use crate::gates::{
    bit_mul, mul_public, sec_div, sec_ge, sec_ge2, sec_mul, sec_mul_exact, sec_sp, sec_sp_public, sec_srt, sentinel_row,
    Comparator,
};
use crate::sharing::{Op, Session};
use serde::{Deserialize, Serialize};

/// T_δ = ⌊2^((√(1 + 40ℓ_q + 4(κ+1)) − 1)/2)⌋.
pub fn switching_threshold(word_bits: u32, kappa: u32) -> u64 {
    let disc = 1.0 + 40.0 * word_bits as f64 + 4.0 * (kappa as f64 + 1.0);
    let exp = (disc.sqrt() - 1.0) / 2.0;
    exp.exp2().floor() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Cross-multiplied comparison, no division.
    CrossMul,
    /// Secure division first, then plain comparison.
    Division,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    pub t: usize,
    pub t_prime: usize,
    pub sigma: f64,
    pub t_delta: u64,
}

impl SelectionParams {
    pub fn new(t: usize, sigma: f64, word_bits: u32, kappa: u32) -> Result<Self> {
        if !(sigma > 0.0 && sigma <= 1.0) {
            return Err(Error::Config(format!("sigma = {sigma} not in (0, 1]")));
        }
        if t == 0 {
            return Err(Error::Config("T must be positive".into()));
        }
        let t_prime = ((sigma * t as f64).ceil() as usize).clamp(1, t);
        Ok(SelectionParams { t, t_prime, sigma, t_delta: switching_threshold(word_bits, kappa) })
    }

    pub fn method(&self) -> Method {
        if self.t as u64 <= self.t_delta {
            Method::CrossMul
        } else {
            Method::Division
        }
    }
}

/// The target client's view of history that selection needs.
pub struct TargetHistory<'a> {
    /// Shared gradient of the target per round, rounds 1..=T.
    pub grads: &'a [Vec<Ring>],
    /// Shared gradient norms, when precomputed.
    pub norms: Option<&'a [Ring]>,
    /// Public global models M_0..M_T.
    pub models: &'a [Vec<f64>],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    /// Selected round ids (1-based), most similar first.
    pub rounds: Vec<usize>,
    pub method: Method,
}

/// Unit global-update directions d_i = ΔM_i / ‖ΔM_i‖, public.
fn unit_updates(models: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    models
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let d: Vec<f64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::DegenerateRound(i + 1));
            }
            Ok(d.iter().map(|x| x / norm).collect())
        })
        .collect()
}

/// Inner products of shared vectors with public ones; local, counted as SecSP.
fn sp_public(s: &mut Session, xs: &[Vec<Ring>], ps: &[Vec<f64>]) -> Result<Vec<Ring>> {
    let enc: Vec<Vec<Ring>> = ps.iter().map(|p| s.codec.encode_vec(p)).collect::<Result<_>>()?;
    sec_sp_public(s, xs, &enc)
}

/// Public-times-shared scalar products; local, counted as SecMul.
fn mul_public_counted(s: &mut Session, public: &[f64], x: &[Ring]) -> Result<Vec<Ring>> {
    let enc = s.codec.encode_vec(public)?;
    s.scoped(Op::SecMul, x.len() as u64, |s| mul_public(s, &enc, x))
}

/// Reveal which rounds have a zero key denominator; those rows become sentinels.
fn zero_flags(s: &mut Session, denoms: &[Ring]) -> Result<Vec<bool>> {
    let zeros = vec![0u64; denoms.len()];
    let flags = sec_ge(s, &zeros, denoms)?;
    let open = s.sec_rec(&flags)?;
    Ok(open.iter().map(|&b| b == 1).collect())
}

fn sort_and_reveal(
    s: &mut Session,
    cmp: Comparator,
    keys: Vec<Vec<Ring>>,
    degenerate: &[bool],
    t_prime: usize,
) -> Result<Vec<usize>> {
    let t = keys.len();
    let padded = t.next_power_of_two();
    let mut rows = Vec::with_capacity(padded);
    for (i, key) in keys.into_iter().enumerate() {
        let mut row = if degenerate[i] { sentinel_row(s, cmp, 0) } else { key };
        row.extend(s.public(&[(i + 1) as Ring]));
        rows.push(row);
    }
    while rows.len() < padded {
        rows.push(sentinel_row(s, cmp, 1));
    }
    let sorted = sec_srt(s, cmp, rows)?;
    let idx_slot = cmp.key_width();
    let slots: Vec<Ring> = sorted[..t_prime].iter().map(|r| r[idx_slot]).collect();
    let ids = s.sec_rec(&slots)?;
    Ok(ids.into_iter().map(|i| i as usize).collect())
}

/// SecRS: select the T′ rounds with the largest cosine similarity between the
/// target's gradient and the global update. `method` overrides the T_δ switch.
pub fn sec_rs(
    s: &mut Session,
    hist: &TargetHistory<'_>,
    params: &SelectionParams,
    method: Option<Method>,
) -> Result<Selection> {
    let norms = hist
        .norms
        .ok_or_else(|| Error::Config("sec_rs needs precomputed norms".into()))?;
    check_history(hist, params)?;
    let method = method.unwrap_or_else(|| params.method());
    s.scoped(Op::SecRs, 1, |s| {
        let dirs = unit_updates(hist.models)?;
        let u = sp_public(s, hist.grads, &dirs)?;
        let ones = vec![1.0; params.t];
        let v = mul_public_counted(s, &ones, norms)?;
        let degenerate = zero_flags(s, &v)?;
        let (cmp, keys) = match method {
            Method::CrossMul => {
                (Comparator::Ge2, u.iter().zip(&v).map(|(a, b)| vec![*a, *b]).collect())
            }
            Method::Division => {
                let safe_v = guard_denominators(s, &v, &degenerate);
                let tau = sec_div(s, &u, &safe_v)?;
                (Comparator::Ge, tau.into_iter().map(|x| vec![x]).collect())
            }
        };
        let rounds = sort_and_reveal(s, cmp, keys, &degenerate, params.t_prime)?;
        Ok(Selection { rounds, method })
    })
}

/// SecRS^(alt): same contract without precomputed norms, ranking by the
/// sign-aware squared cosine.
pub fn sec_rs_alt(
    s: &mut Session,
    hist: &TargetHistory<'_>,
    params: &SelectionParams,
    method: Option<Method>,
) -> Result<Selection> {
    check_history(hist, params)?;
    let method = method.unwrap_or_else(|| params.method());
    s.scoped(Op::SecRsAlt, 1, |s| {
        let dirs = unit_updates(hist.models)?;
        let u = sp_public(s, hist.grads, &dirs)?;
        let gg = sec_sp(s, hist.grads, hist.grads)?;
        let ones = vec![1.0; params.t];
        let v = mul_public_counted(s, &ones, &gg)?;
        let degenerate = zero_flags(s, &v)?;
        let zeros = vec![0u64; params.t];
        let w = sec_ge(s, &u, &zeros)?;
        let (cmp, keys) = match method {
            Method::CrossMul => {
                let a = sec_mul(s, &u, &u)?;
                (Comparator::Ge4, (0..params.t).map(|i| vec![w[i], a[i], v[i]]).collect())
            }
            Method::Division => {
                // exact u² keeps the quotient on the 2^(−2p) grid; truncating
                // first would merge small cosines
                let a2 = sec_mul_exact(s, &u, &u)?;
                let safe_v = guard_denominators(s, &v, &degenerate);
                let b = sec_div(s, &a2, &safe_v)?;
                (Comparator::Ge3, (0..params.t).map(|i| vec![w[i], b[i]]).collect())
            }
        };
        let rounds = sort_and_reveal(s, cmp, keys, &degenerate, params.t_prime)?;
        Ok(Selection { rounds, method })
    })
}

fn check_history(hist: &TargetHistory<'_>, params: &SelectionParams) -> Result<()> {
    if hist.grads.len() != params.t || hist.models.len() != params.t + 1 {
        return Err(Error::Shape(format!(
            "history has {} gradients and {} models for T = {}",
            hist.grads.len(),
            hist.models.len(),
            params.t
        )));
    }
    if let Some(n) = hist.norms {
        if n.len() != params.t {
            return Err(Error::Shape("norm count differs from T".into()));
        }
    }
    Ok(())
}

/// Replace revealed-zero denominators by public 1 so division stays defined.
fn guard_denominators(s: &Session, v: &[Ring], degenerate: &[bool]) -> Vec<Ring> {
    let one = s.public(&[s.codec.one()])[0];
    v.iter()
        .zip(degenerate)
        .map(|(&x, &d)| if d { one } else { x })
        .collect()
}

fn combine_sign_rule(
    s: &mut Session,
    w1: &[Ring],
    x: &[Ring],
    xp: &[Ring],
    z: &[Ring],
) -> Result<Vec<Ring>> {
    let n = w1.len();
    let mut lhs = w1.to_vec();
    lhs.extend_from_slice(x);
    let mut rhs = z.to_vec();
    rhs.extend_from_slice(xp);
    let prods = bit_mul(s, &lhs, &rhs)?;
    let (wz, xxp) = prods.split_at(n);
    // z' = 2·w1·z − (z + w1)
    let zp: Vec<Ring> = (0..n)
        .map(|i| {
            wz[i]
                .wrapping_add(wz[i])
                .wrapping_sub(z[i])
                .wrapping_sub(w1[i])
        })
        .collect();
    let t = bit_mul(s, xxp, &zp)?;
    Ok(crate::gates::add(x, &t))
}

/// SecGE3: [w1·√b1 ≥ w2·√b2] in the sign-aware sense, w ∈ {0, 1} (1 = non-negative).
pub fn sec_ge3(
    s: &mut Session,
    w1: &[Ring],
    b1: &[Ring],
    w2: &[Ring],
    b2: &[Ring],
) -> Result<Vec<Ring>> {
    let n = w1.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    s.scoped(Op::SecGe3, n as u64, |s| {
        let lhs = [w1, w2, b1].concat();
        let rhs = [w2, w1, b2].concat();
        let c = sec_ge(s, &lhs, &rhs)?;
        combine_sign_rule(s, w1, &c[..n], &c[n..2 * n], &c[2 * n..])
    })
}

/// SecGE4: as SecGE3 with b = a/v compared by cross-multiplication.
pub fn sec_ge4(
    s: &mut Session,
    k1: (&[Ring], &[Ring], &[Ring]),
    k2: (&[Ring], &[Ring], &[Ring]),
) -> Result<Vec<Ring>> {
    let (w1, a1, v1) = k1;
    let (w2, a2, v2) = k2;
    let n = w1.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    s.scoped(Op::SecGe4, n as u64, |s| {
        let lhs = [w1, w2].concat();
        let rhs = [w2, w1].concat();
        let c = sec_ge(s, &lhs, &rhs)?;
        let z = sec_ge2(s, a1, v1, a2, v2)?;
        combine_sign_rule(s, w1, &c[..n], &c[n..], &z)
    })
}

/// Plaintext reference: top-T′ rounds by cosine similarity (1-based ids).
pub fn plaintext_top_rounds(grads: &[Vec<f64>], models: &[Vec<f64>], t_prime: usize) -> Vec<usize> {
    let cos: Vec<f64> = grads
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let d: Vec<f64> = models[i + 1].iter().zip(&models[i]).map(|(a, b)| a - b).collect();
            let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dn = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if gn == 0.0 || dn == 0.0 {
                f64::NEG_INFINITY
            } else {
                g.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / (gn * dn)
            }
        })
        .collect();
    let mut idx: Vec<usize> = (0..grads.len()).collect();
    idx.sort_by(|&a, &b| cos[b].total_cmp(&cos[a]).then(a.cmp(&b)));
    idx.truncate(t_prime);
    idx.into_iter().map(|i| i + 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        assert_eq!(switching_threshold(1, 0), 7);
        assert_eq!(switching_threshold(64, 128), 158_000_786);
        assert!(switching_threshold(128, 128) > switching_threshold(64, 128));
    }

    #[test]
    fn params_and_method_switch() {
        let p = SelectionParams::new(10, 0.6, 64, 128).unwrap();
        assert_eq!(p.t_prime, 6);
        assert_eq!(p.method(), Method::CrossMul);
        let mut q = p;
        q.t_delta = 5;
        assert_eq!(q.method(), Method::Division);
        assert!(SelectionParams::new(10, 0.0, 64, 128).is_err());
    }

    #[test]
    fn plaintext_selection_example() {
        // cosines 1, 0, -1, 0.5 against unit updates along x.
        let models: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 0.0]).collect();
        let grads = vec![
            vec![2.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.5, 0.75f64.sqrt()],
        ];
        let mut top = plaintext_top_rounds(&grads, &models, 2);
        top.sort();
        assert_eq!(top, vec![1, 4]);
    }
}
