use crate::error::{HarnessError, Result};
use rayq_core::algorithms::{SolverConfig, ZorgaVariant};
use rayq_core::problems::{KlParams, ProblemFamily, ProblemSpec};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::path::{Path, PathBuf};

/// A solver together with its parameters, written `name:key=val,...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverSpec {
    Szo { m: usize },
    Rga,
    Zorga { variant: ZorgaVariant, m: usize },
}

impl SolverSpec {
    /// Parses `szo`, `szo:m=10`, `rga`, `zorga:variant=armijo,m=100`.
    /// `default_m` applies when `m` is not given.
    pub fn parse_with_default(s: &str, default_m: usize) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let mut m = default_m;
        let mut variant = ZorgaVariant::ConstantStep;
        for kv in args.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| HarnessError::Usage(format!("solver option '{kv}' is not key=val")))?;
            match (k.trim(), v.trim()) {
                ("m", v) => m = v.parse().map_err(|_| HarnessError::Usage(format!("bad sample count '{v}'")))?,
                ("variant", "constant") => variant = ZorgaVariant::ConstantStep,
                ("variant", "armijo") => variant = ZorgaVariant::Armijo,
                (k, v) => return Err(HarnessError::Usage(format!("unknown solver option {k}={v}"))),
            }
        }
        if m == 0 {
            return Err(HarnessError::Usage("m must be at least 1".into()));
        }
        match name.trim() {
            "szo" => Ok(SolverSpec::Szo { m }),
            "rga" if args.is_empty() => Ok(SolverSpec::Rga),
            "rga" => Err(HarnessError::Usage("rga takes no options".into())),
            "zorga" => Ok(SolverSpec::Zorga { variant, m }),
            other => Err(HarnessError::Usage(format!("unknown solver '{other}' (expected szo, rga, zorga)"))),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::parse_with_default(s, 1)
    }

    /// File-system friendly name, e.g. `szo-m10` or `zorga-armijo-m100`.
    pub fn label(&self) -> String {
        match self {
            SolverSpec::Szo { m } => format!("szo-m{m}"),
            SolverSpec::Rga => "rga".into(),
            SolverSpec::Zorga { variant, m } => format!("zorga-{}-m{m}", variant.as_str()),
        }
    }

    pub fn m(&self) -> usize {
        match *self {
            SolverSpec::Szo { m } | SolverSpec::Zorga { m, .. } => m,
            SolverSpec::Rga => 1,
        }
    }

    /// Stream id of this solver's random numbers within a trial.
    pub fn stream_id(&self) -> u64 {
        // FNV-1a, stable across builds.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in self.label().bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        2 + (h >> 2)
    }
}

impl fmt::Display for SolverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverSpec::Szo { m } => write!(f, "szo:m={m}"),
            SolverSpec::Rga => write!(f, "rga"),
            SolverSpec::Zorga { variant, m } => write!(f, "zorga:variant={},m={m}", variant.as_str()),
        }
    }
}

impl Serialize for SolverSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SolverSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        SolverSpec::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProblemConfig {
    pub family: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
}

impl ProblemConfig {
    pub fn family(&self) -> Result<ProblemFamily> {
        Ok(ProblemFamily::parse(&self.family)?)
    }

    pub fn spec(&self, seed: u64) -> Result<ProblemSpec> {
        let mut spec = ProblemSpec::new(self.family()?, self.dim, seed);
        spec.q = self.q;
        let defaults = KlParams::default();
        spec.kl = KlParams { length_scale: self.length_scale.unwrap_or(defaults.length_scale), interval: self.interval.unwrap_or(defaults.interval) };
        spec.validate()?;
        Ok(spec)
    }
}

fn default_trials() -> usize {
    50
}

fn default_record_every() -> usize {
    1
}

/// One experiment: a problem family, the solvers to compare, and how many
/// seeded trials to run. Trial `t` uses seed `seed + t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub solvers: Vec<SolverSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub max_iters: usize,
    #[serde(default, alias = "seeds")]
    pub seed: u64,
    pub output: PathBuf,
    #[serde(default, alias = "timeBudget", skip_serializing_if = "Option::is_none")]
    pub time_budget_s: Option<f64>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_rqe: Option<f64>,
    /// Also log the `sin²_B` error against the reference eigenvector.
    #[serde(default)]
    pub track_sin_b2: bool,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemConfig, solvers: Vec<SolverSpec>, trials: usize, max_iters: usize, seed: u64, output: impl Into<PathBuf>) -> Self {
        Self {
            problem,
            solvers,
            trials,
            max_iters,
            seed,
            output: output.into(),
            time_budget_s: None,
            record_every: 1,
            target_rqe: None,
            track_sin_b2: false,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(HarnessError::Usage("trials must be at least 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(HarnessError::Usage("at least one solver is required".into()));
        }
        self.solver_config(&SolverSpec::Rga).validate()?;
        self.problem.spec(self.seed)?;
        Ok(())
    }

    pub fn solver_config(&self, spec: &SolverSpec) -> SolverConfig {
        SolverConfig {
            m: spec.m(),
            max_iters: self.max_iters,
            record_every: self.record_every,
            target_rqe: self.target_rqe,
            time_budget_s: self.time_budget_s,
            ..SolverConfig::default()
        }
    }
}
