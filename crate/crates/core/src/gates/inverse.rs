use super::{public_matmul, sec_matmul, sec_matmul_batch_exact, MatMul};
use crate::error::{Error, Result};
use crate::fixedpoint::Ring;
use crate::sharing::{Op, Session};
use nalgebra::DMatrix;

/// Target magnitude (in bits) for the largest entry of an encoded public
/// inverse. Products with the mask stay below 2^(p + 30), so local
/// truncation fails with probability under 2^-20.
const INV_TARGET_BITS: i32 = 28;
const INV_MAX_FRAC: i32 = 48;

fn clear_inverse(vals: &[f64], k: usize) -> Option<Vec<f64>> {
    let m = DMatrix::from_row_slice(k, k, vals);
    if k == 1 {
        return (vals[0] != 0.0).then(|| vec![1.0 / vals[0]]);
    }
    let sv = m.clone().singular_values();
    if sv.min() <= 1e-12 * sv.max() {
        return None;
    }
    let inv = m.try_inverse()?;
    Some(inv.transpose().as_slice().to_vec())
}

/// SecRanGenInv: a shared random invertible k×k matrix (k = 1 for scalars).
/// Draws two candidates, reveals their product and keeps the first when the
/// product is invertible.
pub fn sec_ran_gen_inv(s: &mut Session, k: usize) -> Result<Vec<Ring>> {
    s.scoped(Op::SecRanGenInv, 1, |s| loop {
        let u = s.candidate_mask(k)?;
        let v = s.candidate_mask(k)?;
        let w = sec_matmul(s, &u, &v, k, k, k)?;
        let w = s.sec_rec(&w)?;
        let vals = s.codec.decode_vec(&w);
        if clear_inverse(&vals, k).is_some() {
            return Ok(u);
        }
    })
}

/// SecMI: shares of X⁻¹ for a batch of shared k×k matrices.
///
/// Reveals N = X·R for a dealer mask R, inverts N in the clear and returns
/// R·N⁻¹. N is opened untruncated (precision 2p) so the clear inverse is
/// exact for the encoded X and R. N⁻¹ is encoded with as many fractional
/// bits as its magnitude allows, and the product is truncated by that amount.
pub fn sec_mi(s: &mut Session, xs: &[Vec<Ring>], k: usize) -> Result<Vec<Vec<Ring>>> {
    for x in xs {
        super::check_len(x.len(), k * k, "sec_mi")?;
    }
    if xs.is_empty() {
        return Ok(Vec::new());
    }
    s.scoped(Op::SecMi, xs.len() as u64, |s| {
        let masks: Vec<Vec<Ring>> = (0..xs.len()).map(|_| s.invertible_mask(k)).collect::<Result<_>>()?;
        let items: Vec<MatMul<'_>> = xs
            .iter()
            .zip(&masks)
            .map(|(x, r)| MatMul { x, y: r, n: k, k, m: k })
            .collect();
        let prods = sec_matmul_batch_exact(s, &items)?;
        let flat: Vec<Ring> = prods.concat();
        let opened = s.sec_rec(&flat)?;
        let codec = s.codec;
        let mut out = Vec::with_capacity(xs.len());
        for (b, r) in masks.iter().enumerate() {
            let scale2 = codec.scale() * codec.scale();
            let n_vals: Vec<f64> = opened[b * k * k..(b + 1) * k * k]
                .iter()
                .map(|&v| crate::fixedpoint::signed(v) as f64 / scale2)
                .collect();
            let inv = clear_inverse(&n_vals, k).ok_or(Error::SingularReveal)?;
            let max = inv.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if !max.is_finite() {
                return Err(Error::SingularReveal);
            }
            let frac = (INV_TARGET_BITS - max.log2().ceil() as i32).clamp(0, INV_MAX_FRAC) as u32;
            let scale = 2f64.powi(frac as i32);
            let enc: Vec<Ring> = inv.iter().map(|v| (v * scale).round() as i64 as Ring).collect();
            out.push(public_matmul(s, &enc, r, k, k, k, false, frac)?);
        }
        Ok(out)
    })
}
