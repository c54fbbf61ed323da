//! Concrete ergodic systems `(X, μ, T)`.
//!
//! * circle rotation `x -> x + α mod 1` by a quadratic irrational `α`;
//! * doubling map `x -> 2x mod 1` (not invertible);
//! * Arnold cat map `(x, y) -> (2x + y, x + y) mod 1` on the 2-torus;
//! * two-sided i.i.d. shift whose coordinate at index `k` is an increment
//!   `ξ_k ∈ R^d` with a Rademacher, Gaussian or Cauchy law.
//!
//! Rotation orbits are evaluated as `x0 + frac(k·α)` from the integer step
//! count `k`, never by repeated addition.
//!
//! The doubling map keeps its point as a 128-bit binary expansion, so every
//! read-out has full double precision for the first 75 steps. Every
//! [`DOUBLING_WINDOW`] steps the expansion is replaced by fresh uniform bits
//! drawn from `(system seed, stream, window)`. This is a measure-theoretic
//! surrogate of a long orbit: it preserves `μ` and the one-step dynamics
//! inside each window, which is all the distributional statements need.
//!
//! Shift increments are generated counter-style from
//! `(system seed, stream, index, coordinate)`, so the realized two-sided
//! sequence is reproducible in both directions without storing it.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{combine, mix64, rng_from};
use crate::vector::{Vector, MAX_DIM};

/// Steps between two refreshes of the doubling-map surrogate.
pub const DOUBLING_WINDOW: i64 = 48;

const TWO_POW_M53: f64 = 1.0 / 9_007_199_254_740_992.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriverError {
    #[error("{0} is not invertible")]
    NotInvertible(&'static str),
    #[error("invalid system: {0}")]
    InvalidSpec(String),
    #[error("point {0} is not a valid state for {1}")]
    InvalidPoint(String, &'static str),
}

/// Reduces `v` into `[0, 1)`.
#[inline]
pub fn wrap_unit(v: f64) -> f64 {
    let r = v - v.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `(a + b·√c) / d` with `c` not a perfect square, reduced mod 1 and kept as
/// an unevaluated double-double pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticIrrational {
    pub a: i64,
    pub b: i64,
    pub c: u64,
    pub d: i64,
    #[serde(skip)]
    hi: f64,
    #[serde(skip)]
    lo: f64,
}

impl QuadraticIrrational {
    pub fn new(a: i64, b: i64, c: u64, d: i64) -> Result<Self, DriverError> {
        let root = (c as f64).sqrt().round() as u64;
        if b == 0 || d == 0 || root * root == c {
            return Err(DriverError::InvalidSpec(format!(
                "({a} + {b}√{c})/{d} is rational"
            )));
        }
        let (hi, lo) = eval_quadratic(a, b, c, d);
        Ok(QuadraticIrrational { a, b, c, d, hi, lo })
    }

    /// `(√5 − 1) / 2`.
    pub fn golden() -> Self {
        Self::new(-1, 1, 5, 2).expect("golden mean")
    }

    /// `√2 − 1`.
    pub fn sqrt2_minus_1() -> Self {
        Self::new(-1, 1, 2, 1).expect("√2 − 1")
    }

    /// Nearest double to `α mod 1`.
    pub fn value(&self) -> f64 {
        self.hi
    }

    /// `frac(k·α)` with the product carried in double-double arithmetic.
    #[inline]
    pub fn frac_multiple(&self, k: i64) -> f64 {
        let kf = k as f64;
        let p = kf * self.hi;
        let err = kf.mul_add(self.hi, -p);
        let f = p - p.floor();
        wrap_unit(f + (err + kf * self.lo))
    }
}

fn eval_quadratic(a: i64, b: i64, c: u64, d: i64) -> (f64, f64) {
    let cf = c as f64;
    let s = cf.sqrt();
    let s_lo = (-s).mul_add(s, cf) / (2.0 * s);
    let bf = b as f64;
    let p = bf * s;
    let p_err = bf.mul_add(s, -p);
    let af = a as f64;
    let t = af + p;
    let bb = t - af;
    let t_err = (af - (t - bb)) + (p - bb);
    let low = p_err + t_err + bf * s_lo;
    let df = d as f64;
    let v = t / df;
    let v_lo = ((-v).mul_add(df, t) + low) / df;
    // reduce mod 1, keeping the low word
    let fl = v.floor();
    let mut hi = v - fl;
    let mut lo = v_lo;
    let sum = hi + lo;
    lo -= sum - hi;
    hi = sum;
    if hi < 0.0 {
        hi += 1.0;
    } else if hi >= 1.0 {
        hi -= 1.0;
    }
    (hi, lo)
}

impl FromStr for QuadraticIrrational {
    type Err = DriverError;

    /// `golden`, `sqrt2m1`, or `quad:a,b,c,d` for `(a + b√c)/d`.
    fn from_str(s: &str) -> Result<Self, DriverError> {
        match s.trim() {
            "golden" => Ok(Self::golden()),
            "sqrt2m1" => Ok(Self::sqrt2_minus_1()),
            other => {
                let body = other.strip_prefix("quad:").ok_or_else(|| {
                    DriverError::InvalidSpec(format!(
                        "alpha must be golden, sqrt2m1 or quad:a,b,c,d, got {other:?}"
                    ))
                })?;
                let parts: Vec<&str> = body.split(',').map(str::trim).collect();
                let bad = || DriverError::InvalidSpec(format!("malformed quadratic {other:?}"));
                if parts.len() != 4 {
                    return Err(bad());
                }
                let a = parts[0].parse().map_err(|_| bad())?;
                let b = parts[1].parse().map_err(|_| bad())?;
                let c = parts[2].parse().map_err(|_| bad())?;
                let d = parts[3].parse().map_err(|_| bad())?;
                Self::new(a, b, c, d)
            }
        }
    }
}

impl fmt::Display for QuadraticIrrational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a, self.b, self.c, self.d) {
            (-1, 1, 5, 2) => write!(f, "golden"),
            (-1, 1, 2, 1) => write!(f, "sqrt2m1"),
            (a, b, c, d) => write!(f, "quad:{a},{b},{c},{d}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncrementLaw {
    Rademacher,
    Gaussian,
    Cauchy,
}

impl FromStr for IncrementLaw {
    type Err = DriverError;
    fn from_str(s: &str) -> Result<Self, DriverError> {
        match s.trim() {
            "rademacher" => Ok(IncrementLaw::Rademacher),
            "gaussian" | "normal" => Ok(IncrementLaw::Gaussian),
            "cauchy" => Ok(IncrementLaw::Cauchy),
            other => Err(DriverError::InvalidSpec(format!("unknown law {other:?}"))),
        }
    }
}

impl fmt::Display for IncrementLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IncrementLaw::Rademacher => "rademacher",
            IncrementLaw::Gaussian => "gaussian",
            IncrementLaw::Cauchy => "cauchy",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SystemKind {
    Rotation {
        alpha: QuadraticIrrational,
    },
    Doubling,
    /// The automorphism `(2, 1; 1, 1)` of the 2-torus.
    CatMap,
    IidShift {
        law: IncrementLaw,
        dim: usize,
    },
}

impl SystemKind {
    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::Rotation { .. } => "rotation",
            SystemKind::Doubling => "doubling",
            SystemKind::CatMap => "cat-map",
            SystemKind::IidShift { .. } => "iid-shift",
        }
    }
}

/// An immutable, shareable system description.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Position {
    Circle(f64),
    Torus(f64, f64),
    Shift(i64),
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Circle(x) => write!(f, "{x}"),
            Position::Torus(x, y) => write!(f, "({x}, {y})"),
            Position::Shift(k) => write!(f, "#{k}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Repr {
    Rotation { origin: f64, x: f64 },
    Dyadic { bits: u128, stream: u64 },
    Torus { x: f64, y: f64 },
    Shift { index: i64, stream: u64 },
}

/// A point of `X` together with its step counter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemState {
    repr: Repr,
    step: i64,
}

impl SystemState {
    pub fn step_count(&self) -> i64 {
        self.step
    }

    pub fn position(&self) -> Position {
        match self.repr {
            Repr::Rotation { x, .. } => Position::Circle(x),
            Repr::Dyadic { bits, .. } => Position::Circle(dyadic_to_f64(bits)),
            Repr::Torus { x, y } => Position::Torus(x, y),
            Repr::Shift { index, .. } => Position::Shift(index),
        }
    }

    /// Coordinate `i` of a point of `[0,1)` or `[0,1)²`; `None` on the shift.
    #[inline]
    pub fn coordinate(&self, i: usize) -> Option<f64> {
        match (self.repr, i) {
            (Repr::Rotation { x, .. }, 0) => Some(x),
            (Repr::Dyadic { bits, .. }, 0) => Some(dyadic_to_f64(bits)),
            (Repr::Torus { x, .. }, 0) => Some(x),
            (Repr::Torus { y, .. }, 1) => Some(y),
            _ => None,
        }
    }

    /// Shift index, if this is a shift state.
    pub fn shift_index(&self) -> Option<i64> {
        match self.repr {
            Repr::Shift { index, .. } => Some(index),
            _ => None,
        }
    }

    pub fn stream(&self) -> u64 {
        match self.repr {
            Repr::Dyadic { stream, .. } | Repr::Shift { stream, .. } => stream,
            _ => 0,
        }
    }
}

const TWO_POW_M128: f64 = 2.938_735_877_055_719e-39;

/// Nearest double to `bits / 2^128`, kept below 1.
#[inline]
fn dyadic_to_f64(bits: u128) -> f64 {
    let x = bits as f64 * TWO_POW_M128;
    if x >= 1.0 {
        1.0 - f64::EPSILON / 2.0
    } else {
        x
    }
}

/// Exact binary expansion of `x ∈ [0, 1)` (doubles below `2^-75` lose bits).
fn f64_to_dyadic(x: f64) -> u128 {
    if x == 0.0 {
        return 0;
    }
    let raw = x.to_bits();
    let exp = ((raw >> 52) & 0x7ff) as i64;
    let (mant, e) = if exp == 0 {
        (raw & ((1 << 52) - 1), -1074)
    } else {
        ((raw & ((1 << 52) - 1)) | (1 << 52), exp - 1075)
    };
    // x = mant · 2^e, so x · 2^128 = mant · 2^(e + 128)
    let shift = e + 128;
    if shift >= 0 {
        (mant as u128) << shift
    } else if shift > -64 {
        (mant >> (-shift)) as u128
    } else {
        0
    }
}

#[inline]
fn uniform_open(h: u64) -> f64 {
    // (0, 1]
    ((h >> 11) as f64 + 1.0) * TWO_POW_M53
}

impl SystemSpec {
    pub fn new(kind: SystemKind, seed: u64) -> Self {
        SystemSpec { kind, seed }
    }

    pub fn rotation(alpha: QuadraticIrrational, seed: u64) -> Self {
        Self::new(SystemKind::Rotation { alpha }, seed)
    }

    pub fn doubling(seed: u64) -> Self {
        Self::new(SystemKind::Doubling, seed)
    }

    pub fn cat_map(seed: u64) -> Self {
        Self::new(SystemKind::CatMap, seed)
    }

    pub fn iid_shift(law: IncrementLaw, dim: usize, seed: u64) -> Result<Self, DriverError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(DriverError::InvalidSpec(format!(
                "shift dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        Ok(Self::new(SystemKind::IidShift { law, dim }, seed))
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn is_invertible(&self) -> bool {
        !matches!(self.kind, SystemKind::Doubling)
    }

    /// Dimension of the phase space coordinates (`0` for the shift).
    pub fn phase_dim(&self) -> usize {
        match self.kind {
            SystemKind::Rotation { .. } | SystemKind::Doubling => 1,
            SystemKind::CatMap => 2,
            SystemKind::IidShift { .. } => 0,
        }
    }

    /// Dimension of the shift increments (`0` for the other systems).
    pub fn increment_dim(&self) -> usize {
        match self.kind {
            SystemKind::IidShift { dim, .. } => dim,
            _ => 0,
        }
    }

    /// Orbits of the doubling map beyond one window are surrogates.
    pub fn is_surrogate(&self) -> bool {
        matches!(self.kind, SystemKind::Doubling)
    }

    /// State at an explicit point with step counter 0. For the shift the
    /// point is an index and `stream` selects the realized sequence.
    pub fn state_at(&self, position: Position, stream: u64) -> Result<SystemState, DriverError> {
        let in_unit = |v: f64| (0.0..1.0).contains(&v);
        let repr = match (self.kind, position) {
            (SystemKind::Rotation { .. }, Position::Circle(x)) if in_unit(x) => {
                Repr::Rotation { origin: x, x }
            }
            (SystemKind::Doubling, Position::Circle(x)) if in_unit(x) => Repr::Dyadic {
                bits: f64_to_dyadic(x),
                stream,
            },
            (SystemKind::CatMap, Position::Torus(x, y)) if in_unit(x) && in_unit(y) => {
                Repr::Torus { x, y }
            }
            (SystemKind::IidShift { .. }, Position::Shift(index)) => Repr::Shift { index, stream },
            (_, p) => return Err(DriverError::InvalidPoint(p.to_string(), self.name())),
        };
        Ok(SystemState { repr, step: 0 })
    }

    /// Convenience for `[0,1)` systems.
    pub fn point(&self, x: f64) -> Result<SystemState, DriverError> {
        self.state_at(Position::Circle(x), 0)
    }

    /// A `μ`-distributed initial point, deterministic in `(self, seed)`.
    pub fn sample_initial(&self, seed: u64) -> SystemState {
        let mut rng = rng_from(combine(self.seed, seed));
        let repr = match self.kind {
            SystemKind::Rotation { .. } => {
                let x: f64 = rng.random();
                Repr::Rotation { origin: x, x }
            }
            SystemKind::Doubling => {
                let hi = rng.next_u64() as u128;
                let lo = rng.next_u64() as u128;
                Repr::Dyadic {
                    bits: (hi << 64) | lo,
                    stream: rng.next_u64(),
                }
            }
            SystemKind::CatMap => Repr::Torus {
                x: rng.random(),
                y: rng.random(),
            },
            SystemKind::IidShift { .. } => Repr::Shift {
                index: 0,
                stream: rng.next_u64(),
            },
        };
        SystemState { repr, step: 0 }
    }

    /// `T x`.
    #[inline]
    pub fn step(&self, state: &SystemState) -> SystemState {
        let step = state.step + 1;
        let repr = match (self.kind, state.repr) {
            (SystemKind::Rotation { alpha }, Repr::Rotation { origin, .. }) => Repr::Rotation {
                origin,
                x: wrap_unit(origin + alpha.frac_multiple(step)),
            },
            (SystemKind::Doubling, Repr::Dyadic { bits, stream }) => {
                let bits = if step % DOUBLING_WINDOW == 0 {
                    self.doubling_refresh(stream, step / DOUBLING_WINDOW)
                } else {
                    bits << 1
                };
                Repr::Dyadic { bits, stream }
            }
            (SystemKind::CatMap, Repr::Torus { x, y }) => Repr::Torus {
                x: wrap_unit(2.0 * x + y),
                y: wrap_unit(x + y),
            },
            (SystemKind::IidShift { .. }, Repr::Shift { index, stream }) => Repr::Shift {
                index: index + 1,
                stream,
            },
            _ => panic!("state does not belong to {}", self.name()),
        };
        SystemState { repr, step }
    }

    /// `T^n x`.
    pub fn step_n(&self, state: &SystemState, n: u64) -> SystemState {
        let mut s = *state;
        for _ in 0..n {
            s = self.step(&s);
        }
        s
    }

    /// `T^{-1} x`.
    pub fn step_back(&self, state: &SystemState) -> Result<SystemState, DriverError> {
        let step = state.step - 1;
        let repr = match (self.kind, state.repr) {
            (SystemKind::Rotation { alpha }, Repr::Rotation { origin, .. }) => Repr::Rotation {
                origin,
                x: wrap_unit(origin + alpha.frac_multiple(step)),
            },
            (SystemKind::Doubling, _) => return Err(DriverError::NotInvertible("doubling map")),
            (SystemKind::CatMap, Repr::Torus { x, y }) => Repr::Torus {
                x: wrap_unit(x - y),
                y: wrap_unit(2.0 * y - x),
            },
            (SystemKind::IidShift { .. }, Repr::Shift { index, stream }) => Repr::Shift {
                index: index - 1,
                stream,
            },
            _ => panic!("state does not belong to {}", self.name()),
        };
        Ok(SystemState { repr, step })
    }

    fn doubling_refresh(&self, stream: u64, window: i64) -> u128 {
        let key = combine(combine(self.seed, stream), window as u64);
        let hi = mix64(key) as u128;
        let lo = mix64(key ^ 0xA5A5_A5A5_A5A5_A5A5) as u128;
        (hi << 64) | lo
    }

    /// Increment `ξ_index` of the realized shift sequence selected by `stream`.
    #[inline]
    pub fn increment(&self, stream: u64, index: i64) -> Vector {
        let SystemKind::IidShift { law, dim } = self.kind else {
            panic!("{} has no increments", self.name());
        };
        let base = combine(combine(self.seed, stream), index as u64);
        let mut out = Vector::zeros(dim);
        for j in 0..dim {
            let h = mix64(base ^ ((j as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)));
            out[j] = match law {
                IncrementLaw::Rademacher => {
                    if h >> 63 == 1 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                IncrementLaw::Gaussian => {
                    let u1 = uniform_open(h);
                    let u2 = uniform_open(mix64(h));
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                }
                IncrementLaw::Cauchy => {
                    let u = uniform_open(h) - 0.5 * TWO_POW_M53;
                    (std::f64::consts::PI * (u - 0.5)).tan()
                }
            };
        }
        out
    }

    /// Increments `ξ_k` for `k` in `range` (a materialized slice of the tape).
    pub fn increment_tape(&self, stream: u64, range: std::ops::Range<i64>) -> Vec<Vector> {
        range.map(|k| self.increment(stream, k)).collect()
    }
}
