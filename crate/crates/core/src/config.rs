//! Experiment configuration: JSON on disk, command-line overrides, and
//! validation into a typed [`Plan`].

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::driver::{IncrementLaw, QuadraticIrrational, SystemKind, SystemSpec};
use crate::engine::{Cocycle, Observable};
use crate::inducer::{SetSpec, DEFAULT_CAP};
use crate::sojourn::Cone;

/// A configuration error, naming the offending field by its JSON path.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("ConfigInvalid: {field}: {reason}")]
pub struct ConfigInvalid {
    pub field: String,
    pub reason: String,
}

impl ConfigInvalid {
    pub fn new(field: impl Into<String>, reason: impl ToString) -> Self {
        ConfigInvalid {
            field: field.into(),
            reason: reason.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Trace,
    Induce,
    Directions,
    Filling,
    Sojourn,
    Brownian,
    Accept,
}

impl Operation {
    pub fn name(self) -> &'static str {
        match self {
            Operation::Trace => "trace",
            Operation::Induce => "induce",
            Operation::Directions => "directions",
            Operation::Filling => "filling",
            Operation::Sojourn => "sojourn",
            Operation::Brownian => "brownian",
            Operation::Accept => "accept",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemName {
    Rotation,
    Doubling,
    #[serde(alias = "cat_map")]
    CatMap,
    #[serde(alias = "iid_shift")]
    IidShift,
}

/// `{"kind": "rotation", "alpha": "sqrt2m1"}`, `{"kind": "doubling"}`,
/// `{"kind": "cat-map"}`, `{"kind": "iid-shift", "law": "rademacher", "dim": 2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub kind: SystemName,
    /// `golden`, `sqrt2m1` or `quad:a,b,c,d`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub law: Option<IncrementLaw>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    /// `dyadic` (powers of two and N) or `full` (every n).
    Named(String),
    Explicit(Vec<usize>),
}

/// The on-disk experiment description. Every parameter is optional here;
/// [`ExperimentConfig::validate`] supplies defaults and rejects what a given
/// operation cannot use.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub operation: Option<Operation>,
    pub system: Option<SystemConfig>,
    pub observable: Option<String>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub seeds: Option<usize>,
    pub set: Option<String>,
    pub returns: Option<usize>,
    pub cap: Option<u64>,
    pub cone: Option<String>,
    pub grid: Option<GridConfig>,
    pub ball_radius: Option<f64>,
    pub thresholds: Option<Vec<f64>>,
    pub quorum: Option<f64>,
    pub epsilon: Option<f64>,
    pub t: Option<f64>,
    pub h: Option<f64>,
    pub samples: Option<usize>,
    pub alpha: Option<f64>,
    pub criteria: Option<Vec<u8>>,
    pub zero_tolerance: Option<bool>,
}

#[derive(Clone, Debug)]
pub enum Task {
    Trace {
        cocycle: Cocycle,
        len: usize,
        seeds: usize,
    },
    Induce {
        cocycle: Cocycle,
        set: SetSpec,
        returns: usize,
        seeds: usize,
        cap: u64,
    },
    Directions {
        cocycle: Cocycle,
        len: usize,
        seeds: usize,
        thresholds: Option<Vec<f64>>,
        quorum: f64,
        epsilon: f64,
    },
    Filling {
        cocycle: Cocycle,
        len: usize,
        seeds: usize,
    },
    Sojourn {
        cocycle: Cocycle,
        cone: Cone,
        len: usize,
        seeds: usize,
        grid: Vec<usize>,
        ball_radius: Option<f64>,
    },
    Brownian {
        cone: Cone,
        horizon: f64,
        step: f64,
        samples: usize,
        alpha: Option<f64>,
    },
    Accept {
        criteria: Vec<u8>,
        zero_tolerance: bool,
    },
}

/// A validated run: the task, its seed, and the fingerprint of the
/// parameters that determine its output.
#[derive(Clone, Debug)]
pub struct Plan {
    pub operation: Operation,
    pub task: Task,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    /// Canonical parameters: the config with defaults filled in, without
    /// `out` and `jobs`.
    pub parameters: Value,
    pub fingerprint: String,
}

impl ExperimentConfig {
    /// Parses a JSON document, reporting type errors by field path.
    pub fn from_value(value: Value) -> Result<Self, ConfigInvalid> {
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." {
                "(root)".to_string()
            } else {
                path
            };
            ConfigInvalid::new(field, e.into_inner())
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigInvalid> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| ConfigInvalid::new("(root)", e))?;
        Self::from_value(value)
    }

    fn required<T: Clone>(value: &Option<T>, field: &str) -> Result<T, ConfigInvalid> {
        value
            .clone()
            .ok_or_else(|| ConfigInvalid::new(field, "required for this operation"))
    }

    fn positive(value: Option<usize>, field: &str, default: usize) -> Result<usize, ConfigInvalid> {
        match value.unwrap_or(default) {
            0 => Err(ConfigInvalid::new(field, "must be at least 1")),
            v => Ok(v),
        }
    }

    fn system_spec(&self, seed: u64) -> Result<SystemSpec, ConfigInvalid> {
        let sys = Self::required(&self.system, "system")?;
        let reject = |field: &str, present: bool| {
            if present {
                Err(ConfigInvalid::new(
                    format!("system.{field}"),
                    format!("not a parameter of {:?}", sys.kind),
                ))
            } else {
                Ok(())
            }
        };
        let kind = match sys.kind {
            SystemName::Rotation => {
                reject("law", sys.law.is_some())?;
                reject("dim", sys.dim.is_some())?;
                SystemKind::Rotation {
                    alpha: Self::required(&sys.alpha, "system.alpha")?
                        .parse::<QuadraticIrrational>()
                        .map_err(|e| ConfigInvalid::new("system.alpha", e))?,
                }
            }
            SystemName::IidShift => {
                reject("alpha", sys.alpha.is_some())?;
                let law = Self::required(&sys.law, "system.law")?;
                return SystemSpec::iid_shift(law, sys.dim.unwrap_or(1), seed)
                    .map_err(|e| ConfigInvalid::new("system.dim", e));
            }
            other => {
                reject("alpha", sys.alpha.is_some())?;
                reject("law", sys.law.is_some())?;
                reject("dim", sys.dim.is_some())?;
                if other == SystemName::Doubling {
                    SystemKind::Doubling
                } else {
                    SystemKind::CatMap
                }
            }
        };
        Ok(SystemSpec::new(kind, seed))
    }

    fn cocycle(&self, seed: u64) -> Result<Cocycle, ConfigInvalid> {
        let system = self.system_spec(seed)?;
        let src = Self::required(&self.observable, "observable")?;
        let obs = Observable::parse(&src).map_err(|e| ConfigInvalid::new("observable", e))?;
        Cocycle::new(system, obs).map_err(|e| ConfigInvalid::new("observable", e))
    }

    fn cone(&self) -> Result<Cone, ConfigInvalid> {
        Self::required(&self.cone, "cone")?
            .parse::<Cone>()
            .map_err(|e| ConfigInvalid::new("cone", e))
    }

    fn unused(&self, fields: &[(&str, bool)]) -> Result<(), ConfigInvalid> {
        match fields.iter().find(|f| f.1) {
            Some((name, _)) => Err(ConfigInvalid::new(
                *name,
                format!(
                    "not used by the {} operation",
                    self.operation.map_or("(none)", Operation::name)
                ),
            )),
            None => Ok(()),
        }
    }

    /// Checks the configuration and fills in defaults.
    pub fn validate(&self) -> Result<Plan, ConfigInvalid> {
        let operation = Self::required(&self.operation, "operation")?;
        let seed = self.seed.unwrap_or(0);
        if self.jobs == Some(0) {
            return Err(ConfigInvalid::new("jobs", "must be at least 1"));
        }
        let mut canonical = self.clone();
        canonical.seed = Some(seed);
        canonical.out = None;
        canonical.jobs = None;

        let len = |c: &mut ExperimentConfig| -> Result<usize, ConfigInvalid> {
            let n = Self::positive(c.n, "N", 1000)?;
            c.n = Some(n);
            Ok(n)
        };
        let seeds = |c: &mut ExperimentConfig| -> Result<usize, ConfigInvalid> {
            let s = Self::positive(c.seeds, "seeds", 1)?;
            c.seeds = Some(s);
            Ok(s)
        };
        let sojourn_fields = [
            ("cone", self.cone.is_some()),
            ("grid", self.grid.is_some()),
            ("ball_radius", self.ball_radius.is_some()),
        ];
        let brownian_fields = [
            ("t", self.t.is_some()),
            ("h", self.h.is_some()),
            ("samples", self.samples.is_some()),
            ("alpha", self.alpha.is_some()),
        ];
        let induce_fields = [
            ("set", self.set.is_some()),
            ("returns", self.returns.is_some()),
            ("cap", self.cap.is_some()),
        ];
        let direction_fields = [
            ("thresholds", self.thresholds.is_some()),
            ("quorum", self.quorum.is_some()),
            ("epsilon", self.epsilon.is_some()),
        ];
        let accept_fields = [
            ("criteria", self.criteria.is_some()),
            ("zero_tolerance", self.zero_tolerance.is_some()),
        ];
        let dynamics_fields = [
            ("system", self.system.is_some()),
            ("observable", self.observable.is_some()),
            ("N", self.n.is_some()),
            ("seeds", self.seeds.is_some()),
        ];
        let others = |skip: &[&str]| -> Vec<(&str, bool)> {
            sojourn_fields
                .iter()
                .chain(&brownian_fields)
                .chain(&induce_fields)
                .chain(&direction_fields)
                .chain(&accept_fields)
                .filter(|f| !skip.contains(&f.0))
                .copied()
                .collect()
        };

        let task = match operation {
            Operation::Trace | Operation::Filling => {
                self.unused(&others(&[]))?;
                let cocycle = self.cocycle(seed)?;
                let (len, seeds) = (len(&mut canonical)?, seeds(&mut canonical)?);
                if operation == Operation::Trace {
                    Task::Trace {
                        cocycle,
                        len,
                        seeds,
                    }
                } else {
                    if cocycle.dim() != 1 {
                        return Err(ConfigInvalid::new(
                            "observable",
                            format!(
                                "filling needs a scalar observable, got dimension {}",
                                cocycle.dim()
                            ),
                        ));
                    }
                    Task::Filling {
                        cocycle,
                        len,
                        seeds,
                    }
                }
            }
            Operation::Induce => {
                self.unused(&others(&["set", "returns", "cap"]))?;
                if self.n.is_some() {
                    return Err(ConfigInvalid::new(
                        "N",
                        "induce counts returns; use \"returns\"",
                    ));
                }
                let cocycle = self.cocycle(seed)?;
                let set = Self::required(&self.set, "set")?
                    .parse::<SetSpec>()
                    .map_err(|e| ConfigInvalid::new("set", e))?;
                set.check_system(&cocycle.system)
                    .map_err(|e| ConfigInvalid::new("set", e))?;
                let returns = Self::positive(self.returns, "returns", 1000)?;
                let cap = self.cap.unwrap_or(DEFAULT_CAP);
                if cap == 0 {
                    return Err(ConfigInvalid::new("cap", "must be at least 1"));
                }
                canonical.returns = Some(returns);
                canonical.cap = Some(cap);
                Task::Induce {
                    cocycle,
                    set,
                    returns,
                    seeds: seeds(&mut canonical)?,
                    cap,
                }
            }
            Operation::Directions => {
                self.unused(&others(&["thresholds", "quorum", "epsilon"]))?;
                let cocycle = self.cocycle(seed)?;
                if cocycle.dim() > 3 {
                    return Err(ConfigInvalid::new(
                        "observable",
                        "direction meshes exist for dimensions 1 to 3",
                    ));
                }
                if let Some(t) = &self.thresholds {
                    if t.is_empty() || t.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                        return Err(ConfigInvalid::new(
                            "thresholds",
                            "need finite non-negative values",
                        ));
                    }
                    if t.windows(2).any(|w| w[1] <= w[0]) {
                        return Err(ConfigInvalid::new(
                            "thresholds",
                            "must be strictly increasing",
                        ));
                    }
                }
                let quorum = self.quorum.unwrap_or(crate::directions::DEFAULT_QUORUM);
                if !(quorum > 0.0 && quorum <= 1.0) {
                    return Err(ConfigInvalid::new("quorum", "must lie in (0, 1]"));
                }
                let epsilon = self.epsilon.unwrap_or(1.0);
                if !(epsilon.is_finite() && epsilon > 0.0) {
                    return Err(ConfigInvalid::new("epsilon", "must be positive"));
                }
                canonical.quorum = Some(quorum);
                canonical.epsilon = Some(epsilon);
                Task::Directions {
                    cocycle,
                    len: len(&mut canonical)?,
                    seeds: seeds(&mut canonical)?,
                    thresholds: self.thresholds.clone(),
                    quorum,
                    epsilon,
                }
            }
            Operation::Sojourn => {
                self.unused(&others(&["cone", "grid", "ball_radius"]))?;
                let cocycle = self.cocycle(seed)?;
                let cone = self.cone()?;
                if cone.dim() != cocycle.dim() {
                    return Err(ConfigInvalid::new(
                        "cone",
                        format!(
                            "cone has dimension {}, observable has {}",
                            cone.dim(),
                            cocycle.dim()
                        ),
                    ));
                }
                let n = len(&mut canonical)?;
                let grid = match self
                    .grid
                    .clone()
                    .unwrap_or(GridConfig::Named("dyadic".into()))
                {
                    GridConfig::Named(s) if s == "dyadic" => crate::sojourn::dyadic_grid(n),
                    GridConfig::Named(s) if s == "full" => (1..=n).collect(),
                    GridConfig::Named(s) => {
                        return Err(ConfigInvalid::new(
                            "grid",
                            format!("expected \"dyadic\", \"full\" or a list, got {s:?}"),
                        ))
                    }
                    GridConfig::Explicit(v) => {
                        if v.is_empty() || v.iter().any(|&k| k == 0 || k > n) {
                            return Err(ConfigInvalid::new(
                                "grid",
                                format!("entries must lie in 1..={n}"),
                            ));
                        }
                        if v.windows(2).any(|w| w[1] <= w[0]) {
                            return Err(ConfigInvalid::new("grid", "must be strictly increasing"));
                        }
                        v
                    }
                };
                if let Some(r) = self.ball_radius {
                    if !(r.is_finite() && r > 0.0) {
                        return Err(ConfigInvalid::new("ball_radius", "must be positive"));
                    }
                }
                canonical.grid = Some(GridConfig::Explicit(grid.clone()));
                Task::Sojourn {
                    cocycle,
                    cone,
                    len: n,
                    seeds: seeds(&mut canonical)?,
                    grid,
                    ball_radius: self.ball_radius,
                }
            }
            Operation::Brownian => {
                self.unused(&dynamics_fields)?;
                self.unused(&others(&["cone", "t", "h", "samples", "alpha"]))?;
                let cone = self.cone()?;
                let horizon = self.t.unwrap_or(1.0);
                if !(horizon.is_finite() && horizon > 0.0) {
                    return Err(ConfigInvalid::new("t", "must be positive"));
                }
                let step = self.h.unwrap_or(crate::brownian::DEFAULT_STEP);
                if !(step > 0.0 && step <= horizon / 100.0) {
                    return Err(ConfigInvalid::new(
                        "h",
                        format!("must lie in (0, t/100] = (0, {}]", horizon / 100.0),
                    ));
                }
                if let Some(a) = self.alpha {
                    if !(a > 0.0 && a < 1.0) {
                        return Err(ConfigInvalid::new("alpha", "must lie in (0, 1)"));
                    }
                }
                let samples = Self::positive(self.samples, "samples", 10_000)?;
                canonical.t = Some(horizon);
                canonical.h = Some(step);
                canonical.samples = Some(samples);
                Task::Brownian {
                    cone,
                    horizon,
                    step,
                    samples,
                    alpha: self.alpha,
                }
            }
            Operation::Accept => {
                self.unused(&dynamics_fields)?;
                self.unused(&others(&["criteria", "zero_tolerance"]))?;
                let criteria = self.criteria.clone().unwrap_or_default();
                if let Some(bad) = criteria.iter().find(|&&c| !(1..=16).contains(&c)) {
                    return Err(ConfigInvalid::new(
                        "criteria",
                        format!("no criterion {bad}; expected 1..=16"),
                    ));
                }
                Task::Accept {
                    criteria,
                    zero_tolerance: self.zero_tolerance.unwrap_or(false),
                }
            }
        };
        let parameters = serde_json::to_value(&canonical).expect("config serializes");
        let parameters = strip_nulls(parameters);
        Ok(Plan {
            operation,
            task,
            seed,
            jobs: self.jobs,
            out: self.out.clone(),
            fingerprint: fingerprint(&parameters),
            parameters,
        })
    }
}

fn strip_nulls(v: Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(
            m.into_iter()
                .filter(|(_, v)| !v.is_null())
                .map(|(k, v)| (k, strip_nulls(v)))
                .collect::<Map<_, _>>(),
        ),
        other => other,
    }
}

/// First 16 hex digits of the SHA-256 of the canonical JSON (keys sorted).
pub fn fingerprint(parameters: &Value) -> String {
    let text = serde_json::to_string(parameters).expect("json serializes");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Overlays `overrides` onto `base` key by key.
pub fn merge(base: &mut Value, overrides: Map<String, Value>) {
    if !base.is_object() {
        *base = Value::Object(Map::new());
    }
    let obj = base.as_object_mut().expect("object");
    for (k, v) in overrides {
        obj.insert(k, v);
    }
}
