//! Shared helpers for the integration tests: two-party harness and exact
//! rational oracles.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use starfish_core::fixedpoint::{Codec, Ring};
use starfish_core::sharing::{reconstruct, share_for, Session};
use starfish_core::Result;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Run `f` as both parties on secret-shared `inputs` and reconstruct its output.
pub fn run2<F>(seed: u64, inputs: &[Vec<Ring>], f: F) -> Vec<Ring>
where
    F: Fn(&mut Session, &[Vec<Ring>]) -> Result<Vec<Ring>> + Sync,
{
    run2_with(Codec::default(), seed, inputs, |s, x| Ok((f(s, x)?, ()))).0
}

/// As [`run2`], also returning party 0's session for meter inspection.
pub fn run2_with<F, T>(codec: Codec, seed: u64, inputs: &[Vec<Ring>], f: F) -> (Vec<Ring>, T)
where
    F: Fn(&mut Session, &[Vec<Ring>]) -> Result<(Vec<Ring>, T)> + Sync,
    T: Send,
    F: Sync,
{
    let ((a, t), (b, _)) = Session::run_inproc(codec, seed, |s| {
        let mut share_rng = rng(seed ^ 0x5eed);
        let mine: Vec<Vec<Ring>> =
            inputs.iter().map(|v| share_for(s.party(), v, &mut share_rng)).collect();
        f(s, &mine)
    })
    .expect("protocol run");
    (reconstruct(&a, &b), t)
}

pub fn exact(raw: Ring, p: u32) -> BigRational {
    BigRational::new(BigInt::from(raw as i64), BigInt::one() << p)
}

pub fn exact_f64(x: &BigRational) -> f64 {
    x.numer().to_f64().unwrap() / x.denom().to_f64().unwrap()
}

/// |decode(raw) − x| as a float.
pub fn err(raw: Ring, x: &BigRational, p: u32) -> f64 {
    exact_f64(&(exact(raw, p) - x).abs())
}

/// Exact fixed-point quotient trunc(u·2^p / v) toward zero, as a raw value.
pub fn exact_div(u: Ring, v: Ring, p: u32) -> Option<Ring> {
    let v = BigInt::from(v as i64);
    if v.is_zero() {
        return None;
    }
    let q = (BigInt::from(u as i64) << p) / v; // BigInt division truncates toward zero
    q.to_i64().map(|q| q as Ring)
}

/// Uniform real in [−bound, bound], encoded.
pub fn rand_enc(r: &mut ChaCha20Rng, c: &Codec, bound: f64) -> Ring {
    c.encode_unchecked(r.gen_range(-bound..=bound))
}

/// Exact rational k×k inverse by Gauss-Jordan elimination.
pub fn exact_inverse(m: &[BigRational], k: usize) -> Option<Vec<BigRational>> {
    let mut a: Vec<Vec<BigRational>> = (0..k)
        .map(|i| {
            let mut row: Vec<BigRational> = m[i * k..(i + 1) * k].to_vec();
            row.extend((0..k).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            row
        })
        .collect();
    for col in 0..k {
        let piv = (col..k).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot_row) {
                    *x = &*x - &f * y;
                }
            }
        }
    }
    Some(a.into_iter().flat_map(|r| r[k..].to_vec()).collect())
}

/// Quadratic instance in the Theorem 1 regime: η_l = 0.2·μ/L, η_u = μ/L.
pub fn quadratic_instance(
    seed: u64,
    n: usize,
    m: usize,
    t: usize,
) -> (starfish_core::task::ConvexTask, starfish_core::unlearn::UnlearnConfig) {
    use starfish_core::task::{ConvexTask, TaskParams};
    use starfish_core::unlearn::UnlearnConfig;
    let tp = TaskParams { n, m, mu: 4.0, kappa: 2.0, ..Default::default() };
    let task = ConvexTask::generate(&tp, seed).expect("task");
    let rem: Vec<usize> = (1..n).collect();
    let (mu, l) = task.curvature(&rem);
    let cfg = UnlearnConfig { n, m, t, eta_l: 0.2 * mu / l, eta_u: mu / l, seed, ..Default::default() };
    (task, cfg)
}
