use std::fmt;

use crate::driver::{IncrementLaw, SystemKind, SystemSpec, SystemState};
use crate::vector::{Vector, MAX_DIM};

use super::EngineError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    #[inline]
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
        }
    }
}

/// Expression tree of an observable `Φ: X -> R^d`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Coordinate `i` of a point of `[0,1)` or `[0,1)²`.
    Coord(usize),
    /// `1_[lo, hi)` of coordinate `coord`.
    Indicator {
        lo: f64,
        hi: f64,
        coord: usize,
    },
    /// `1_[x0,x1) × [y0,y1)` on the torus.
    Rect {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
    },
    /// The shift coordinate `ξ_0(x)`; `law` is an optional consistency check.
    Increment {
        dim: usize,
        law: Option<IncrementLaw>,
    },
    Stack(Vec<Expr>),
    Component(Box<Expr>, usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Floor(Box<Expr>),
    Recip(Box<Expr>),
    Abs(Box<Expr>),
    /// `ψ∘T − ψ`.
    Coboundary(Box<Expr>),
    /// `h∘T − h + c`.
    CobDrift {
        h: Box<Expr>,
        drift: Vector,
    },
}

impl Expr {
    pub fn dim(&self) -> Result<usize, EngineError> {
        use Expr::*;
        let d = match self {
            Const(_) | Coord(_) | Indicator { .. } | Rect { .. } => 1,
            Increment { dim, .. } => *dim,
            Stack(items) => {
                for e in items {
                    if e.dim()? != 1 {
                        return Err(EngineError::Dimension(format!(
                            "vector entries must be scalar, got {e}"
                        )));
                    }
                }
                items.len()
            }
            Component(e, i) => {
                let d = e.dim()?;
                if *i >= d {
                    return Err(EngineError::Dimension(format!(
                        "component {i} of a {d}-vector"
                    )));
                }
                1
            }
            Neg(e) | Floor(e) | Recip(e) | Abs(e) | Coboundary(e) | Pow(e, _) => e.dim()?,
            Binary(op, a, b) => {
                let (da, db) = (a.dim()?, b.dim()?);
                match (da, db) {
                    _ if da == db => da,
                    (1, d) if *op != BinOp::Div || d == 1 => d,
                    (d, 1) => d,
                    _ => {
                        return Err(EngineError::Dimension(format!(
                            "{da}-vector {} {db}-vector",
                            op.symbol()
                        )))
                    }
                }
            }
            CobDrift { h, drift } => {
                let dh = h.dim()?;
                let dc = drift.dim();
                if dh != dc && dh != 1 && dc != 1 {
                    return Err(EngineError::Dimension(format!(
                        "cobdrift with {dh}-dimensional h and {dc}-dimensional drift"
                    )));
                }
                dh.max(dc)
            }
        };
        if d == 0 || d > MAX_DIM {
            return Err(EngineError::Dimension(format!(
                "dimension {d} outside 1..={MAX_DIM}"
            )));
        }
        Ok(d)
    }

    /// A bound on `sup_x |Φ(x)|` in the Euclidean norm, when one follows
    /// from the structure of the expression.
    pub fn bound(&self) -> Option<f64> {
        use Expr::*;
        match self {
            Const(c) => Some(c.abs()),
            Coord(_) | Indicator { .. } | Rect { .. } => Some(1.0),
            Increment { dim, law } => match law {
                Some(IncrementLaw::Rademacher) => Some((*dim as f64).sqrt()),
                _ => None,
            },
            Stack(items) => items
                .iter()
                .map(|e| e.bound().map(|b| b * b))
                .sum::<Option<f64>>()
                .map(f64::sqrt),
            Component(e, _) | Neg(e) | Abs(e) => e.bound(),
            Binary(op, a, b) => {
                let (ba, bb) = (a.bound()?, b.bound()?);
                match op {
                    BinOp::Add | BinOp::Sub => Some(ba + bb),
                    BinOp::Mul => Some(ba * bb),
                    BinOp::Div => match **b {
                        Const(c) if c != 0.0 => Some(ba / c.abs()),
                        _ => None,
                    },
                }
            }
            Pow(e, k) if *k >= 0 => e.bound().map(|b| b.powi(*k)),
            Pow(..) | Recip(_) => None,
            Floor(e) => e.bound().map(|b| b.floor() + 1.0),
            Coboundary(e) => e.bound().map(|b| 2.0 * b),
            CobDrift { h, drift } => h.bound().map(|b| 2.0 * b + drift.norm()),
        }
    }

    pub(crate) fn check_system(&self, system: &SystemSpec) -> Result<(), EngineError> {
        use Expr::*;
        let incompatible = |what: String| {
            Err(EngineError::Incompatible {
                observable: what,
                system: system.name(),
            })
        };
        match self {
            Const(_) => Ok(()),
            Coord(i) | Indicator { coord: i, .. } => {
                if *i < system.phase_dim() {
                    Ok(())
                } else {
                    incompatible(self.to_string())
                }
            }
            Rect { .. } => {
                if system.phase_dim() == 2 {
                    Ok(())
                } else {
                    incompatible(self.to_string())
                }
            }
            Increment { dim, law } => match system.kind {
                SystemKind::IidShift { law: l, dim: d }
                    if d == *dim && law.is_none_or(|x| x == l) =>
                {
                    Ok(())
                }
                _ => incompatible(self.to_string()),
            },
            Stack(items) => items.iter().try_for_each(|e| e.check_system(system)),
            Component(e, _) | Neg(e) | Pow(e, _) | Floor(e) | Recip(e) | Abs(e) | Coboundary(e) => {
                e.check_system(system)
            }
            Binary(_, a, b) => {
                a.check_system(system)?;
                b.check_system(system)
            }
            CobDrift { h, .. } => h.check_system(system),
        }
    }

    /// Evaluates the expression at `state`. The expression must have passed
    /// [`Expr::check_system`] for `system`.
    pub fn eval(&self, system: &SystemSpec, state: &SystemState) -> Vector {
        use Expr::*;
        match self {
            Const(c) => Vector::scalar(*c),
            Coord(i) => Vector::scalar(coord(state, *i)),
            Indicator { lo, hi, coord: i } => {
                let x = coord(state, *i);
                Vector::scalar(if *lo <= x && x < *hi { 1.0 } else { 0.0 })
            }
            Rect { x0, x1, y0, y1 } => {
                let (x, y) = (coord(state, 0), coord(state, 1));
                let inside = *x0 <= x && x < *x1 && *y0 <= y && y < *y1;
                Vector::scalar(if inside { 1.0 } else { 0.0 })
            }
            Increment { .. } => system.increment(
                state.stream(),
                state
                    .shift_index()
                    .expect("increment read off a shift state"),
            ),
            Stack(items) => {
                let mut out = Vector::zeros(items.len());
                for (i, e) in items.iter().enumerate() {
                    out[i] = e.eval(system, state)[0];
                }
                out
            }
            Component(e, i) => Vector::scalar(e.eval(system, state)[*i]),
            Neg(e) => -e.eval(system, state),
            Binary(op, a, b) => {
                let (va, vb) = (a.eval(system, state), b.eval(system, state));
                va.zip_with(&vb, |x, y| op.apply(x, y))
            }
            Pow(e, k) => e.eval(system, state).map(|x| x.powi(*k)),
            Floor(e) => e.eval(system, state).map(f64::floor),
            Recip(e) => e.eval(system, state).map(f64::recip),
            Abs(e) => e.eval(system, state).map(f64::abs),
            Coboundary(e) => {
                let next = system.step(state);
                e.eval(system, &next) - e.eval(system, state)
            }
            CobDrift { h, drift } => {
                let next = system.step(state);
                (h.eval(system, &next) - h.eval(system, state)) + *drift
            }
        }
    }
}

#[inline]
fn coord(state: &SystemState, i: usize) -> f64 {
    state
        .coordinate(i)
        .expect("coordinate read off a shift state")
}

fn fmt_num(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    if x < 0.0 {
        write!(f, "({x})")
    } else {
        write!(f, "{x}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Expr::*;
        match self {
            Const(c) => fmt_num(f, *c),
            Coord(0) => write!(f, "x"),
            Coord(1) => write!(f, "y"),
            Coord(i) => write!(f, "coord({i})"),
            Indicator { lo, hi, coord: 0 } => write!(f, "indicator({lo},{hi})"),
            Indicator { lo, hi, coord } => write!(f, "indicator({lo},{hi},{coord})"),
            Rect { x0, x1, y0, y1 } => write!(f, "rect({x0},{x1},{y0},{y1})"),
            Increment { dim, law: Some(l) } => write!(f, "iid({l},d={dim})"),
            Increment { dim, law: None } => write!(f, "iid(d={dim})"),
            Stack(items) => {
                write!(f, "[")?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, "]")
            }
            Component(e, i) => write!(f, "({e})[{i}]"),
            Neg(e) => write!(f, "-({e})"),
            Binary(op, a, b) => write!(f, "({a}{}{b})", op.symbol()),
            Pow(e, k) => write!(f, "pow({e},{k})"),
            Floor(e) => write!(f, "floor({e})"),
            Recip(e) => write!(f, "recip({e})"),
            Abs(e) => write!(f, "abs({e})"),
            Coboundary(e) => write!(f, "cob({e})"),
            CobDrift { h, drift } => {
                write!(f, "cobdrift(h={h},c=[")?;
                for (i, c) in drift.as_slice().iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, "])")
            }
        }
    }
}

/// An observable `Φ: X -> R^d` with its dimension and optional declared
/// properties.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    expr: Expr,
    dim: usize,
    bound: Option<f64>,
    centered: bool,
}

impl Observable {
    pub fn new(expr: Expr) -> Result<Self, EngineError> {
        let dim = expr.dim()?;
        let bound = expr.bound();
        Ok(Observable {
            expr,
            dim,
            bound,
            centered: false,
        })
    }

    pub fn parse(src: &str) -> Result<Self, EngineError> {
        Self::new(super::parse::parse_expr(src)?)
    }

    pub fn constant(c: &[f64]) -> Self {
        let expr = if c.len() == 1 {
            Expr::Const(c[0])
        } else {
            Expr::Stack(c.iter().map(|&v| Expr::Const(v)).collect())
        };
        Self::new(expr).expect("constant observable")
    }

    /// Declares `sup |Φ| <= bound`.
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    /// Declares `∫ Φ dμ = 0`; check it with [`Observable::verify_centered`].
    pub fn centered(mut self) -> Self {
        self.centered = true;
        self
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    #[inline]
    pub fn eval(&self, system: &SystemSpec, state: &SystemState) -> Vector {
        self.expr.eval(system, state)
    }

    /// Monte Carlo check of the declared centering: every coordinate mean
    /// over `samples` μ-distributed points lies within 3 standard errors of
    /// zero. Returns the largest |z| observed.
    pub fn verify_centered(
        &self,
        system: &SystemSpec,
        samples: usize,
        seed: u64,
    ) -> Result<f64, EngineError> {
        self.expr.check_system(system)?;
        let mut sum = vec![0.0; self.dim];
        let mut sum_sq = vec![0.0; self.dim];
        for i in 0..samples {
            let s = system.sample_initial(crate::exec::trajectory_seed(seed, i as u64));
            let v = self.eval(system, &s);
            for j in 0..self.dim {
                sum[j] += v[j];
                sum_sq[j] += v[j] * v[j];
            }
        }
        let n = samples as f64;
        let mut worst = 0.0f64;
        for j in 0..self.dim {
            let m = sum[j] / n;
            let var = (sum_sq[j] / n - m * m).max(0.0);
            let se = (var / n).sqrt();
            let z = if se > 0.0 {
                m.abs() / se
            } else if m == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
        }
        if self.centered && worst > 3.0 {
            return Err(EngineError::NotCentered { z: worst });
        }
        Ok(worst)
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

/// `φ = ψ∘T − ψ` for a bounded `ψ`. The sums telescope:
/// `Φ_n(x) = ψ(T^n x) − ψ(x)`.
pub fn coboundary_of(psi: &Observable) -> Result<Observable, EngineError> {
    let b = psi
        .bound()
        .ok_or_else(|| EngineError::Unbounded(psi.to_string()))?;
    Ok(
        Observable::new(Expr::Coboundary(Box::new(psi.expr.clone())))?
            .with_bound(2.0 * b)
            .centered(),
    )
}

/// `φ = h∘T − h + c`.
pub fn coboundary_plus_drift(h: &Observable, drift: Vector) -> Result<Observable, EngineError> {
    Observable::new(Expr::CobDrift {
        h: Box::new(h.expr.clone()),
        drift,
    })
}
