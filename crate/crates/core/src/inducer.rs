//! Return times `R_B`, induced cocycles `Φ^B = Φ_{R_B}` and Kac statistics.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::driver::{IncrementLaw, SystemKind, SystemSpec, SystemState};
use crate::engine::{Cocycle, CocycleTrace};
use crate::exec::{trajectory_seed, try_map_indexed, Execution};
use crate::stats::bootstrap_mean_ci;
use crate::vector::{CompensatedSum, Vector};

/// Default horizon for return-time searches.
pub const DEFAULT_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InduceError {
    #[error("no return to the set within {0} steps")]
    CapExceeded(u64),
    #[error("initial point is not in the inducing set")]
    NotInSet,
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("set {set} does not apply to {system}")]
    Incompatible { set: String, system: &'static str },
    #[error("the measure of {0} is not known")]
    UnknownMeasure(String),
}

/// One coordinate condition of a shift cylinder: `sign(ξ_offset[coord]) = positive`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CylinderCondition {
    pub offset: i64,
    pub coord: usize,
    pub positive: bool,
}

/// A measurable set `B ⊂ X`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SetSpec {
    /// `B = X`.
    Whole,
    /// Union of half-open intervals `[a, b)` of the first coordinate.
    Intervals { parts: Vec<(f64, f64)> },
    /// `[x0, x1) × [y0, y1)` on the torus.
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Sign conditions on the shift increments.
    Cylinder { conditions: Vec<CylinderCondition> },
}

impl SetSpec {
    pub fn interval(a: f64, b: f64) -> Self {
        SetSpec::Intervals {
            parts: vec![(a, b)],
        }
    }

    pub fn cylinder(conditions: &[(i64, usize, bool)]) -> Self {
        SetSpec::Cylinder {
            conditions: conditions
                .iter()
                .map(|&(offset, coord, positive)| CylinderCondition {
                    offset,
                    coord,
                    positive,
                })
                .collect(),
        }
    }

    fn validate(&self) -> Result<(), InduceError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        match self {
            SetSpec::Intervals { parts } => {
                if parts.is_empty() || parts.iter().any(|&(a, b)| !(unit(a) && unit(b) && a < b)) {
                    return Err(InduceError::InvalidSet(self.to_string()));
                }
                let mut sorted = parts.clone();
                sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
                if sorted.windows(2).any(|w| w[1].0 < w[0].1) {
                    return Err(InduceError::InvalidSet(format!(
                        "{self} has overlapping parts"
                    )));
                }
            }
            SetSpec::Rect { x0, x1, y0, y1 } => {
                if !(unit(*x0) && unit(*x1) && unit(*y0) && unit(*y1) && x0 < x1 && y0 < y1) {
                    return Err(InduceError::InvalidSet(self.to_string()));
                }
            }
            SetSpec::Cylinder { conditions } => {
                if conditions.is_empty() {
                    return Err(InduceError::InvalidSet("empty cylinder".into()));
                }
                for (i, c) in conditions.iter().enumerate() {
                    if conditions[..i]
                        .iter()
                        .any(|o| o.offset == c.offset && o.coord == c.coord)
                    {
                        return Err(InduceError::InvalidSet(format!(
                            "{self} repeats a coordinate"
                        )));
                    }
                }
            }
            SetSpec::Whole => {}
        }
        Ok(())
    }

    /// Checks the set against a system.
    pub fn check_system(&self, system: &SystemSpec) -> Result<(), InduceError> {
        self.validate()?;
        let ok = match self {
            SetSpec::Whole => true,
            SetSpec::Intervals { .. } => system.phase_dim() >= 1,
            SetSpec::Rect { .. } => system.phase_dim() == 2,
            SetSpec::Cylinder { conditions } => {
                conditions.iter().all(|c| c.coord < system.increment_dim())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(InduceError::Incompatible {
                set: self.to_string(),
                system: system.name(),
            })
        }
    }

    #[inline]
    pub fn contains(&self, system: &SystemSpec, state: &SystemState) -> bool {
        match self {
            SetSpec::Whole => true,
            SetSpec::Intervals { parts } => {
                let x = state.coordinate(0).expect("interval set on a shift");
                parts.iter().any(|&(a, b)| a <= x && x < b)
            }
            SetSpec::Rect { x0, x1, y0, y1 } => {
                let (x, y) = (
                    state.coordinate(0).expect("rect on a circle"),
                    state.coordinate(1).expect("rect on a circle"),
                );
                *x0 <= x && x < *x1 && *y0 <= y && y < *y1
            }
            SetSpec::Cylinder { conditions } => {
                let index = state.shift_index().expect("cylinder off the shift");
                conditions.iter().all(|c| {
                    let v = system.increment(state.stream(), index + c.offset)[c.coord];
                    (v > 0.0) == c.positive
                })
            }
        }
    }

    /// `μ(B)` when it is known analytically.
    pub fn measure(&self, system: &SystemSpec) -> Option<f64> {
        match self {
            SetSpec::Whole => Some(1.0),
            SetSpec::Intervals { parts } => Some(parts.iter().map(|(a, b)| b - a).sum()),
            SetSpec::Rect { x0, x1, y0, y1 } => Some((x1 - x0) * (y1 - y0)),
            SetSpec::Cylinder { conditions } => match system.kind {
                // all supported laws are symmetric without atoms at 0
                SystemKind::IidShift {
                    law: IncrementLaw::Rademacher | IncrementLaw::Gaussian | IncrementLaw::Cauchy,
                    ..
                } => Some(0.5f64.powi(conditions.len() as i32)),
                _ => None,
            },
        }
    }
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSpec::Whole => write!(f, "all"),
            SetSpec::Intervals { parts } => {
                write!(f, "interval:")?;
                for (i, (a, b)) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{a},{b}")?;
                }
                Ok(())
            }
            SetSpec::Rect { x0, x1, y0, y1 } => write!(f, "rect:{x0},{x1},{y0},{y1}"),
            SetSpec::Cylinder { conditions } => {
                write!(f, "cylinder:")?;
                for (i, c) in conditions.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    let s = if c.positive { '+' } else { '-' };
                    write!(f, "{},{},{s}", c.offset, c.coord)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for SetSpec {
    type Err = InduceError;

    /// `all`, `interval:a,b[;a,b...]`, `rect:x0,x1,y0,y1`,
    /// `cylinder:offset,coord,+|-[;...]`.
    fn from_str(s: &str) -> Result<Self, InduceError> {
        let bad = || InduceError::InvalidSet(s.to_string());
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let s = s.trim();
        let (kind, body) = s.split_once(':').unwrap_or((s, ""));
        let set = match kind.trim() {
            "all" | "whole" => SetSpec::Whole,
            "interval" => {
                let parts = body
                    .split(';')
                    .map(|p| {
                        let (a, b) = p.split_once(',').ok_or_else(bad)?;
                        Ok((num(a)?, num(b)?))
                    })
                    .collect::<Result<Vec<_>, InduceError>>()?;
                SetSpec::Intervals { parts }
            }
            "rect" => {
                let v = body.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
                if v.len() != 4 {
                    return Err(bad());
                }
                SetSpec::Rect {
                    x0: v[0],
                    x1: v[1],
                    y0: v[2],
                    y1: v[3],
                }
            }
            "cylinder" => {
                let conditions = body
                    .split(';')
                    .map(|p| {
                        let t: Vec<&str> = p.split(',').map(str::trim).collect();
                        if t.len() != 3 {
                            return Err(bad());
                        }
                        let positive = match t[2] {
                            "+" => true,
                            "-" => false,
                            _ => return Err(bad()),
                        };
                        Ok(CylinderCondition {
                            offset: t[0].parse().map_err(|_| bad())?,
                            coord: t[1].parse().map_err(|_| bad())?,
                            positive,
                        })
                    })
                    .collect::<Result<Vec<_>, InduceError>>()?;
                SetSpec::Cylinder { conditions }
            }
            _ => return Err(bad()),
        };
        set.validate()?;
        Ok(set)
    }
}

/// `R_B(x) = inf{j >= 1 : T^j x ∈ B}`, searched up to `cap`.
pub fn return_time(
    system: &SystemSpec,
    set: &SetSpec,
    x: &SystemState,
    cap: u64,
) -> Result<u64, InduceError> {
    let mut s = *x;
    for j in 1..=cap {
        s = system.step(&s);
        if set.contains(system, &s) {
            return Ok(j);
        }
    }
    Err(InduceError::CapExceeded(cap))
}

/// Return times `R_1 < R_2 < ...` and induced sums `Φ^B_n = Φ_{R_n}`.
#[derive(Clone, Debug)]
pub struct InducedTrace {
    start: SystemState,
    dim: usize,
    returns: Vec<u64>,
    sums: Vec<Vector>,
    distributional_only: bool,
}

impl InducedTrace {
    pub fn start(&self) -> &SystemState {
        &self.start
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    /// `R_n(x)` for `n >= 1`; `R_0 = 0`.
    pub fn return_time(&self, n: usize) -> u64 {
        if n == 0 {
            0
        } else {
            self.returns[n - 1]
        }
    }

    pub fn returns(&self) -> &[u64] {
        &self.returns
    }

    /// `Φ^B_n(x)` for `n >= 0`.
    pub fn sum(&self, n: usize) -> Vector {
        if n == 0 {
            Vector::zeros(self.dim)
        } else {
            self.sums[n - 1]
        }
    }

    pub fn sums(&self) -> &[Vector] {
        &self.sums
    }

    /// Set when the orbit came from the doubling-map surrogate, whose
    /// induced statistics are meaningful in distribution only.
    pub fn distributional_only(&self) -> bool {
        self.distributional_only
    }

    /// The induced sums as a cocycle trace of the induced system.
    pub fn as_trace(&self) -> CocycleTrace {
        CocycleTrace::from_values(self.start, self.dim, &self.sums)
    }
}

/// Induced cocycle along the orbit of `x0 ∈ B` for `n_returns` returns.
pub fn induced_trace(
    cocycle: &Cocycle,
    set: &SetSpec,
    x0: &SystemState,
    n_returns: usize,
    cap: u64,
) -> Result<InducedTrace, InduceError> {
    set.check_system(&cocycle.system)?;
    if !set.contains(&cocycle.system, x0) {
        return Err(InduceError::NotInSet);
    }
    let sys = &cocycle.system;
    let mut acc = CompensatedSum::new(cocycle.dim());
    let mut state = *x0;
    let mut returns = Vec::with_capacity(n_returns);
    let mut sums = Vec::with_capacity(n_returns);
    let mut since = 0u64;
    let mut step = 0u64;
    while returns.len() < n_returns {
        acc.add(&cocycle.eval(&state));
        state = sys.step(&state);
        step += 1;
        since += 1;
        if set.contains(sys, &state) {
            returns.push(step);
            sums.push(acc.value());
            since = 0;
        } else if since >= cap {
            return Err(InduceError::CapExceeded(cap));
        }
    }
    Ok(InducedTrace {
        start: *x0,
        dim: cocycle.dim(),
        returns,
        sums,
        distributional_only: sys.is_surrogate(),
    })
}

/// Draws a μ-distributed point and moves it to its first visit of `B`
/// (distributed as `μ` restricted to `B` for ergodic `T`, up to the
/// stationarity of the first-entry time).
pub fn enter_set(
    system: &SystemSpec,
    set: &SetSpec,
    seed: u64,
    cap: u64,
) -> Result<SystemState, InduceError> {
    let x = system.sample_initial(seed);
    if set.contains(system, &x) {
        return Ok(x);
    }
    let j = return_time(system, set, &x, cap)?;
    Ok(system.step_n(&x, j))
}

#[derive(Clone, Debug, Serialize)]
pub struct KacReport {
    /// Mean over seeds of `R_n / n`.
    pub mean_return: f64,
    pub per_seed: Vec<f64>,
    /// 95% percentile-bootstrap interval over seeds.
    pub ci95: (f64, f64),
    pub n_returns: usize,
    /// `1 / μ(B)`, when the measure is declared.
    pub expected: Option<f64>,
    pub distributional_only: bool,
}

/// Empirical `R_n(x) / n` at `n = n_returns`, averaged over `seeds`
/// μ-distributed starting points.
pub fn kac_statistic(
    system: &SystemSpec,
    set: &SetSpec,
    n_returns: usize,
    seeds: usize,
    global_seed: u64,
    cap: u64,
    exec: Execution,
) -> Result<KacReport, InduceError> {
    set.check_system(system)?;
    let n = n_returns.max(1);
    let per_seed = try_map_indexed(exec, seeds, |i| {
        let mut s = system.sample_initial(trajectory_seed(global_seed, i as u64));
        let mut total = 0u64;
        for _ in 0..n {
            let r = return_time(system, set, &s, cap)?;
            total += r;
            s = system.step_n(&s, r);
        }
        Ok(total as f64 / n as f64)
    })?;
    let mean_return = per_seed.iter().sum::<f64>() / per_seed.len().max(1) as f64;
    Ok(KacReport {
        mean_return,
        ci95: bootstrap_mean_ci(&per_seed, 2000, 0.95, global_seed),
        per_seed,
        n_returns: n,
        expected: set.measure(system).map(|m| 1.0 / m),
        distributional_only: system.is_surrogate(),
    })
}
