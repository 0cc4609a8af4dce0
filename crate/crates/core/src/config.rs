//! Run configuration: flat `key = value` lines, `#` starts a comment.
//! Unknown or repeated keys are rejected.

use crate::error::{Error, Result};
use crate::fixedpoint::Codec;
use crate::roundsel::Method;
use crate::sharing::NetProfile;
use crate::task::{ConvexTask, TaskKind, TaskParams};
use crate::unlearn::UnlearnConfig;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportMode {
    Inproc,
    Tcp,
}

impl FromStr for TransportMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inproc" => Ok(TransportMode::Inproc),
            "tcp" => Ok(TransportMode::Tcp),
            _ => Err(Error::Config(format!("unknown transport `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub unlearn: UnlearnConfig,
    pub task: TaskParams,
    pub codec: Codec,
    pub transport: TransportMode,
    pub addr: String,
    pub profile: Option<NetProfile>,
    /// Largest condition number accepted for SecMI masks.
    pub cond_bound: f64,
    pub out: Option<PathBuf>,
    /// Elements per gate in `audit`.
    pub audit_elems: usize,
    /// Sort length in `audit`.
    pub audit_sort: usize,
    /// `eta_l = auto`: 0.2·μ/L of the remaining clients' objective.
    pub auto_eta_l: bool,
    /// `eta_u = auto`: μ/L, the rate the removal bound assumes.
    pub auto_eta_u: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            unlearn: UnlearnConfig::default(),
            task: TaskParams { n: 20, m: 8, ..TaskParams::default() },
            codec: Codec::default(),
            transport: TransportMode::Inproc,
            addr: "127.0.0.1:7461".into(),
            profile: None,
            cond_bound: 1e4,
            out: None,
            audit_elems: 8,
            audit_sort: 8,
            auto_eta_l: false,
            auto_eta_u: false,
        }
    }
}

/// Every accepted key, in documentation order.
pub const KEYS: &[&str] = &[
    "seed",
    "n",
    "m",
    "t",
    "target",
    "sigma",
    "alpha",
    "beta",
    "buffer_b",
    "eta_l",
    "eta_u",
    "gamma",
    "epsilon",
    "buffer_policy",
    "kappa",
    "method",
    "task",
    "task.mu",
    "task.kappa",
    "task.spread",
    "task.init_scale",
    "task.samples",
    "task.lambda",
    "task.test_samples",
    "codec.p",
    "codec.range_e",
    "codec.word_bits",
    "codec.slack",
    "transport.mode",
    "transport.addr",
    "net.profile",
    "cond_bound",
    "out",
    "audit.elems",
    "audit.sort",
];

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: `{k}` given twice", lineno + 1)));
            }
            cfg.set(k, v)?;
        }
        cfg.finish()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let u = &mut self.unlearn;
        match key {
            "seed" => u.seed = parse(key, v)?,
            "n" => u.n = parse(key, v)?,
            "m" => u.m = parse(key, v)?,
            "t" => u.t = parse(key, v)?,
            "target" => u.target = parse(key, v)?,
            "sigma" => u.sigma = parse(key, v)?,
            "alpha" => u.alpha = parse(key, v)?,
            "beta" => u.beta = parse(key, v)?,
            "buffer_b" => u.buffer_b = parse(key, v)?,
            "eta_l" if v == "auto" => self.auto_eta_l = true,
            "eta_u" if v == "auto" => self.auto_eta_u = true,
            "eta_l" => u.eta_l = parse(key, v)?,
            "eta_u" => u.eta_u = parse(key, v)?,
            "gamma" => u.gamma = parse(key, v)?,
            "epsilon" => u.epsilon = parse(key, v)?,
            "buffer_policy" => u.buffer_policy = v.parse()?,
            "kappa" => u.kappa = parse(key, v)?,
            "method" => {
                u.method = match v {
                    "auto" => None,
                    "crossmul" => Some(Method::CrossMul),
                    "division" => Some(Method::Division),
                    _ => return Err(Error::Config(format!("unknown method `{v}`"))),
                }
            }
            "task" => self.task.kind = v.parse::<TaskKind>()?,
            "task.mu" => self.task.mu = parse(key, v)?,
            "task.kappa" => self.task.kappa = parse(key, v)?,
            "task.spread" => self.task.spread = parse(key, v)?,
            "task.init_scale" => self.task.init_scale = parse(key, v)?,
            "task.samples" => self.task.samples = parse(key, v)?,
            "task.lambda" => self.task.lambda = parse(key, v)?,
            "task.test_samples" => self.task.test_samples = parse(key, v)?,
            "codec.p" => self.codec.precision_p = parse(key, v)?,
            "codec.range_e" => self.codec.range_e = parse(key, v)?,
            "codec.word_bits" => self.codec.word_bits = parse(key, v)?,
            "codec.slack" => self.codec.slack = parse(key, v)?,
            "transport.mode" => self.transport = v.parse()?,
            "transport.addr" => self.addr = v.to_string(),
            "net.profile" => {
                self.profile = match v {
                    "none" => None,
                    _ => Some(
                        NetProfile::by_name(v)
                            .ok_or_else(|| Error::Config(format!("unknown net profile `{v}`")))?,
                    ),
                }
            }
            "cond_bound" => self.cond_bound = parse(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "audit.elems" => self.audit_elems = parse(key, v)?,
            "audit.sort" => self.audit_sort = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// The unlearning config with `auto` learning rates filled in from `task`.
    pub fn resolve(&self, task: &ConvexTask) -> UnlearnConfig {
        let mut u = self.unlearn.clone();
        if self.auto_eta_l || self.auto_eta_u {
            let (mu, l) = task.curvature(&u.remaining());
            if self.auto_eta_l {
                u.eta_l = 0.2 * mu / l;
            }
            if self.auto_eta_u {
                u.eta_u = mu / l;
            }
        }
        u
    }

    /// Propagate shared fields and validate every section.
    pub fn finish(&mut self) -> Result<()> {
        self.task.n = self.unlearn.n;
        self.task.m = self.unlearn.m;
        self.codec.validate()?;
        self.unlearn.validate()?;
        if self.cond_bound.is_nan() || self.cond_bound < 1.0 {
            return Err(Error::Config("cond_bound must be at least 1".into()));
        }
        if self.audit_elems < 2 || !self.audit_sort.is_power_of_two() || self.audit_sort < 2 {
            return Err(Error::Config("audit.elems ≥ 2 and audit.sort a power of two ≥ 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_validates() {
        let c = RunConfig::parse_str("# demo\nn = 5\nm=4 # inline\nt = 10\ntask = logistic\nmethod = division\n").unwrap();
        assert_eq!((c.unlearn.n, c.unlearn.m, c.unlearn.t), (5, 4, 10));
        assert_eq!((c.task.n, c.task.m), (5, 4));
        assert_eq!(c.task.kind, TaskKind::Logistic);
        assert_eq!(c.unlearn.method, Some(Method::Division));
    }

    #[test]
    fn auto_rates_follow_curvature() {
        let c = RunConfig::parse_str("n = 4\nm = 3\neta_l = auto\neta_u = auto\ntask.mu = 4\ntask.kappa = 2").unwrap();
        let task = ConvexTask::generate(&c.task, 1).unwrap();
        let u = c.resolve(&task);
        let (mu, l) = task.curvature(&u.remaining());
        assert!((u.eta_u - mu / l).abs() < 1e-12);
        assert!((u.eta_l - 0.2 * mu / l).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in ["bogus = 1", "n = 1", "sigma = 1.5", "codec.word_bits = 128", "n = 3\nn = 4", "n", "alpha = x"] {
            let e = RunConfig::parse_str(bad).unwrap_err();
            assert!(e.is_validation(), "{bad}: {e}");
        }
    }

    #[test]
    fn every_key_is_accepted() {
        let mut c = RunConfig::default();
        for k in KEYS {
            let v = match *k {
                "task" => "quadratic",
                "buffer_policy" => "all",
                "method" => "auto",
                "transport.mode" => "inproc",
                "transport.addr" | "out" => "x",
                "net.profile" => "lan",
                "codec.word_bits" => "64",
                "codec.p" => "13",
                "codec.range_e" => "16",
                "codec.slack" => "6",
                "sigma" | "alpha" | "beta" => "0.5",
                _ => "2",
            };
            c.set(k, v).unwrap_or_else(|e| panic!("{k}: {e}"));
        }
    }
}
