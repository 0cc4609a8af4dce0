//! Synthetic convex federated tasks with known curvature.
//!
//! The quadratic task gives client j the objective ½(M − c_j)ᵀA(M − c_j).
//! F, the global objective used by the removal bound, is the sum over the
//! remaining clients, so its Hessian is n_r·A and A's spectrum is chosen as
//! [μ/n_r, L/n_r]. The logistic task is ℓ2-regularized logistic regression
//! over non-iid client partitions with a held-out test set.

use crate::error::{Error, Result};
use crate::prg;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Quadratic,
    Logistic,
}

impl std::str::FromStr for TaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(TaskKind::Quadratic),
            "logistic" => Ok(TaskKind::Logistic),
            _ => Err(Error::Config(format!("unknown task `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskParams {
    pub kind: TaskKind,
    pub n: usize,
    pub m: usize,
    /// Quadratic: strong convexity of F over the remaining clients.
    pub mu: f64,
    /// Quadratic: condition number L/μ of F.
    pub kappa: f64,
    /// Quadratic: standard deviation of the client optima.
    pub spread: f64,
    /// Quadratic: standard deviation of M_0.
    pub init_scale: f64,
    /// Logistic: samples per client.
    pub samples: usize,
    /// Logistic: ℓ2 weight.
    pub lambda: f64,
    /// Logistic: held-out samples.
    pub test_samples: usize,
}

impl Default for TaskParams {
    fn default() -> Self {
        TaskParams {
            kind: TaskKind::Quadratic,
            n: 5,
            m: 8,
            mu: 4.0,
            kappa: 2.0,
            spread: 1.0,
            init_scale: 3.0,
            samples: 32,
            lambda: 0.05,
            test_samples: 512,
        }
    }
}

#[derive(Debug, Clone)]
enum Data {
    Quadratic {
        /// Per-client Hessian, row-major m×m.
        a: Vec<f64>,
        centers: Vec<Vec<f64>>,
        mu_client: f64,
        l_client: f64,
    },
    Logistic {
        xs: Vec<Vec<Vec<f64>>>,
        ys: Vec<Vec<f64>>,
        lambda: f64,
        test_x: Vec<Vec<f64>>,
        test_y: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct ConvexTask {
    pub kind: TaskKind,
    pub n: usize,
    pub m: usize,
    m0: Vec<f64>,
    data: Data,
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl ConvexTask {
    /// Generate the task for `params` from the data stream of `seed`. The
    /// quadratic spectrum assumes F sums over n − 1 remaining clients.
    pub fn generate(params: &TaskParams, seed: u64) -> Result<Self> {
        let TaskParams { n, m, .. } = *params;
        if n < 2 || m == 0 {
            return Err(Error::Config(format!("task needs n ≥ 2 and m ≥ 1, got n={n}, m={m}")));
        }
        let mut rng = prg::rng(seed, prg::DATA, 0);
        match params.kind {
            TaskKind::Quadratic => {
                if !(params.mu > 0.0 && params.kappa >= 1.0) {
                    return Err(Error::Config("quadratic task needs mu > 0 and kappa ≥ 1".into()));
                }
                let nr = (n - 1) as f64;
                let mu_c = params.mu / nr;
                let l_c = params.mu * params.kappa / nr;
                let g = DMatrix::from_fn(m, m, |_, _| normal(&mut rng));
                let q = g.qr().q();
                let mut ev = vec![mu_c; m];
                if m >= 2 {
                    ev[1] = l_c;
                    for e in ev.iter_mut().skip(2) {
                        *e = rng.gen_range(mu_c..=l_c);
                    }
                }
                let a = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(ev)) * q.transpose();
                let a: Vec<f64> = (0..m * m).map(|i| 0.5 * (a[(i / m, i % m)] + a[(i % m, i / m)])).collect();
                let centers = (0..n)
                    .map(|_| (0..m).map(|_| normal(&mut rng) * params.spread).collect())
                    .collect();
                let m0 = (0..m).map(|_| normal(&mut rng) * params.init_scale).collect();
                Ok(ConvexTask {
                    kind: TaskKind::Quadratic,
                    n,
                    m,
                    m0,
                    data: Data::Quadratic { a, centers, mu_client: mu_c, l_client: l_c },
                })
            }
            TaskKind::Logistic => {
                if params.samples == 0 || params.lambda <= 0.0 {
                    return Err(Error::Config("logistic task needs samples ≥ 1 and lambda > 0".into()));
                }
                let w: Vec<f64> = (0..m).map(|_| normal(&mut rng)).collect();
                let draw = |rng: &mut rand_chacha::ChaCha20Rng, shift: &[f64], count: usize| {
                    let mut xs = Vec::with_capacity(count);
                    let mut ys = Vec::with_capacity(count);
                    for _ in 0..count {
                        let x: Vec<f64> = shift.iter().map(|s| normal(rng) + s).collect();
                        let y = if rng.gen::<f64>() < sigmoid(dot(&x, &w)) { 1.0 } else { 0.0 };
                        xs.push(x);
                        ys.push(y);
                    }
                    (xs, ys)
                };
                let mut xs = Vec::with_capacity(n);
                let mut ys = Vec::with_capacity(n);
                for _ in 0..n {
                    let shift: Vec<f64> = (0..m).map(|_| 0.5 * normal(&mut rng)).collect();
                    let (x, y) = draw(&mut rng, &shift, params.samples);
                    xs.push(x);
                    ys.push(y);
                }
                let (test_x, test_y) = draw(&mut rng, &vec![0.0; m], params.test_samples);
                Ok(ConvexTask {
                    kind: TaskKind::Logistic,
                    n,
                    m,
                    m0: vec![0.0; m],
                    data: Data::Logistic { xs, ys, lambda: params.lambda, test_x, test_y },
                })
            }
        }
    }

    pub fn initial_model(&self) -> Vec<f64> {
        self.m0.clone()
    }

    /// ∇f_j(model).
    pub fn grad(&self, j: usize, model: &[f64]) -> Vec<f64> {
        match &self.data {
            Data::Quadratic { a, centers, .. } => {
                let d: Vec<f64> = model.iter().zip(&centers[j]).map(|(x, c)| x - c).collect();
                (0..self.m).map(|r| dot(&a[r * self.m..(r + 1) * self.m], &d)).collect()
            }
            Data::Logistic { xs, ys, lambda, .. } => {
                let mut g: Vec<f64> = model.iter().map(|w| lambda * w).collect();
                let k = xs[j].len() as f64;
                for (x, y) in xs[j].iter().zip(&ys[j]) {
                    let r = (sigmoid(dot(x, model)) - y) / k;
                    for (gi, xi) in g.iter_mut().zip(x) {
                        *gi += r * xi;
                    }
                }
                g
            }
        }
    }

    /// Per-client objective f_j(model).
    pub fn client_objective(&self, j: usize, model: &[f64]) -> f64 {
        match &self.data {
            Data::Quadratic { centers, .. } => {
                let d: Vec<f64> = model.iter().zip(&centers[j]).map(|(x, c)| x - c).collect();
                0.5 * dot(&d, &self.grad(j, model))
            }
            Data::Logistic { xs, ys, lambda, .. } => {
                let k = xs[j].len() as f64;
                let loss: f64 = xs[j]
                    .iter()
                    .zip(&ys[j])
                    .map(|(x, y)| {
                        let z = dot(x, model);
                        // log(1 + e^z) − y·z, computed stably
                        z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
                    })
                    .sum();
                loss / k + 0.5 * lambda * dot(model, model)
            }
        }
    }

    /// F(model) = Σ_{j ∈ clients} f_j(model).
    pub fn objective(&self, clients: &[usize], model: &[f64]) -> f64 {
        clients.iter().map(|&j| self.client_objective(j, model)).sum()
    }

    /// Average gradient over `clients`.
    pub fn avg_grad(&self, clients: &[usize], model: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.m];
        for &j in clients {
            for (a, b) in g.iter_mut().zip(self.grad(j, model)) {
                *a += b;
            }
        }
        let k = clients.len() as f64;
        g.iter_mut().for_each(|x| *x /= k);
        g
    }

    /// (μ, L) of F over `clients`. Exact for the quadratic task; the
    /// logistic L is the usual Hessian bound.
    pub fn curvature(&self, clients: &[usize]) -> (f64, f64) {
        let k = clients.len() as f64;
        match &self.data {
            Data::Quadratic { mu_client, l_client, .. } => (k * mu_client, k * l_client),
            Data::Logistic { xs, lambda, .. } => {
                let mut l = 0.0;
                for &j in clients {
                    let mut s = DMatrix::<f64>::zeros(self.m, self.m);
                    for x in &xs[j] {
                        let v = nalgebra::DVector::from_column_slice(x);
                        s += &v * v.transpose();
                    }
                    let top = s.symmetric_eigenvalues().max();
                    l += lambda + top / (4.0 * xs[j].len() as f64);
                }
                (k * lambda, l)
            }
        }
    }

    /// Minimizer of F over `clients`.
    pub fn optimum(&self, clients: &[usize]) -> Vec<f64> {
        match &self.data {
            Data::Quadratic { centers, .. } => {
                let mut c = vec![0.0; self.m];
                for &j in clients {
                    for (a, b) in c.iter_mut().zip(&centers[j]) {
                        *a += b;
                    }
                }
                c.iter().map(|x| x / clients.len() as f64).collect()
            }
            Data::Logistic { .. } => {
                let (_, l) = self.curvature(clients);
                let step = clients.len() as f64 / l;
                let mut w = vec![0.0; self.m];
                for _ in 0..5000 {
                    let g = self.avg_grad(clients, &w);
                    if g.iter().map(|x| x * x).sum::<f64>() < 1e-24 {
                        break;
                    }
                    w.iter_mut().zip(&g).for_each(|(a, b)| *a -= step * b);
                }
                w
            }
        }
    }

    /// Held-out test error rate (logistic task only).
    pub fn test_error(&self, model: &[f64]) -> Option<f64> {
        match &self.data {
            Data::Logistic { test_x, test_y, .. } => {
                let wrong = test_x
                    .iter()
                    .zip(test_y)
                    .filter(|(x, y)| (dot(x, model) >= 0.0) != (**y == 1.0))
                    .count();
                Some(wrong as f64 / test_x.len().max(1) as f64)
            }
            Data::Quadratic { .. } => None,
        }
    }
}
