use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::vector::Vector;

/// An open cone with apex at the origin.
///
/// Membership is strict, so boundary points are outside. All kinds except
/// [`Cone::Full`] exclude the origin.
#[derive(Clone, Debug, PartialEq)]
pub enum Cone {
    /// `{v : ⟨v, u⟩ > 0}`.
    HalfSpace { normal: Vector },
    /// `{v : ‖v/‖v‖ − u‖ < aperture}` with `u` a unit vector; equivalently
    /// `⟨v, u⟩ > (1 − aperture²/2)·‖v‖`.
    Angular { axis: Vector, aperture: f64 },
    /// `{v : s_i·v_i > 0 for all i}`.
    Orthant { positive: Vec<bool> },
    /// All of `R^d`.
    Full { dim: usize },
    /// `R^d` minus the closed ray `{t·u : t >= 0}`.
    MinusRay { direction: Vector },
    /// Interior of the complement of a cone.
    Complement(Box<Cone>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid cone `{input}`: {reason}")]
pub struct ConeParseError {
    pub input: String,
    pub reason: String,
}

impl Cone {
    pub fn half_space(normal: &[f64]) -> Self {
        Cone::HalfSpace {
            normal: Vector::from_slice(normal),
        }
    }

    /// `C_{a,t}` around `axis`, with aperture `a·t`.
    pub fn angular(axis: &[f64], aperture: f64) -> Self {
        let axis = Vector::from_slice(axis)
            .normalized()
            .expect("angular cone axis must be non-zero");
        Cone::Angular { axis, aperture }
    }

    pub fn orthant(positive: &[bool]) -> Self {
        Cone::Orthant {
            positive: positive.to_vec(),
        }
    }

    pub fn complement(self) -> Self {
        match self {
            Cone::Complement(inner) => *inner,
            c => Cone::Complement(Box::new(c)),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Cone::HalfSpace { normal } => normal.dim(),
            Cone::Angular { axis, .. } => axis.dim(),
            Cone::Orthant { positive } => positive.len(),
            Cone::Full { dim } => *dim,
            Cone::MinusRay { direction } => direction.dim(),
            Cone::Complement(c) => c.dim(),
        }
    }

    /// `1 − aperture²/2`, the cosine threshold of an angular cone.
    pub(crate) fn cosine(aperture: f64) -> f64 {
        1.0 - 0.5 * aperture * aperture
    }

    /// Membership in the open cone.
    #[inline]
    pub fn contains(&self, v: &Vector) -> bool {
        match self {
            Cone::HalfSpace { normal } => v.dot(normal) > 0.0,
            Cone::Angular { axis, aperture } => v.dot(axis) > Self::cosine(*aperture) * v.norm(),
            Cone::Orthant { positive } => {
                positive
                    .iter()
                    .enumerate()
                    .all(|(i, &p)| if p { v[i] > 0.0 } else { v[i] < 0.0 })
            }
            Cone::Full { .. } => true,
            Cone::MinusRay { direction } => !on_ray(v, direction),
            Cone::Complement(c) => c.outside_closure(v),
        }
    }

    /// `v` is outside the closure of the cone.
    fn outside_closure(&self, v: &Vector) -> bool {
        match self {
            Cone::HalfSpace { normal } => v.dot(normal) < 0.0,
            Cone::Angular { axis, aperture } => v.dot(axis) < Self::cosine(*aperture) * v.norm(),
            Cone::Orthant { positive } => {
                positive
                    .iter()
                    .enumerate()
                    .any(|(i, &p)| if p { v[i] < 0.0 } else { v[i] > 0.0 })
            }
            Cone::Full { .. } | Cone::MinusRay { .. } => false,
            Cone::Complement(c) => c.contains(v),
        }
    }
}

fn on_ray(v: &Vector, u: &Vector) -> bool {
    // v = t·u with t >= 0: parallel and non-negative projection
    let (vu, uu, vv) = (v.dot(u), u.norm_sq(), v.norm_sq());
    vu >= 0.0 && vu * vu == vv * uu
}

fn numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{p}` is not a number"))
        })
        .collect()
}

impl FromStr for Cone {
    type Err = ConeParseError;

    /// `halfspace:u1,..,ud`, `angular:u1,..,ud;aperture`, `orthant:+,-,..`,
    /// `full:d`, `minusray:u1,..,ud`, `complement:<cone>`.
    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let err = |reason: String| ConeParseError {
            input: input.to_string(),
            reason,
        };
        let (kind, rest) = input
            .trim()
            .split_once(':')
            .ok_or_else(|| err("expected `kind:parameters`".into()))?;
        let nonzero = |v: &[f64]| {
            if v.is_empty() || v.len() > crate::vector::MAX_DIM {
                Err(err(format!(
                    "dimension must be 1..={}",
                    crate::vector::MAX_DIM
                )))
            } else if v.iter().all(|&x| x == 0.0) || v.iter().any(|x| !x.is_finite()) {
                Err(err("direction must be finite and non-zero".into()))
            } else {
                Ok(())
            }
        };
        match kind.trim() {
            "halfspace" => {
                let u = numbers(rest).map_err(err)?;
                nonzero(&u)?;
                Ok(Cone::half_space(&u))
            }
            "angular" => {
                let (u, a) = rest
                    .split_once(';')
                    .ok_or_else(|| err("expected `angular:u1,..,ud;aperture`".into()))?;
                let u = numbers(u).map_err(err)?;
                nonzero(&u)?;
                let a: f64 = a
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("`{a}` is not a number")))?;
                if !(a > 0.0 && a < 2.0) {
                    return Err(err("aperture must lie in (0, 2)".into()));
                }
                Ok(Cone::angular(&u, a))
            }
            "orthant" => {
                let signs = rest
                    .split(',')
                    .map(|s| match s.trim() {
                        "+" => Ok(true),
                        "-" => Ok(false),
                        o => Err(err(format!("orthant sign `{o}` must be + or -"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if signs.len() > crate::vector::MAX_DIM {
                    return Err(err("too many orthant signs".into()));
                }
                Ok(Cone::orthant(&signs))
            }
            "full" => {
                let dim: usize = rest
                    .trim()
                    .parse()
                    .map_err(|_| err("expected `full:d`".into()))?;
                if dim == 0 || dim > crate::vector::MAX_DIM {
                    return Err(err(format!(
                        "dimension must be 1..={}",
                        crate::vector::MAX_DIM
                    )));
                }
                Ok(Cone::Full { dim })
            }
            "minusray" => {
                let u = numbers(rest).map_err(err)?;
                nonzero(&u)?;
                Ok(Cone::MinusRay {
                    direction: Vector::from_slice(&u),
                })
            }
            "complement" => Ok(rest
                .parse::<Cone>()
                .map_err(|e| err(e.reason))?
                .complement()),
            other => Err(err(format!("unknown cone kind `{other}`"))),
        }
    }
}

fn join(v: &Vector) -> String {
    v.as_slice()
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cone::HalfSpace { normal } => write!(f, "halfspace:{}", join(normal)),
            Cone::Angular { axis, aperture } => write!(f, "angular:{};{aperture}", join(axis)),
            Cone::Orthant { positive } => {
                let s: Vec<&str> = positive
                    .iter()
                    .map(|&p| if p { "+" } else { "-" })
                    .collect();
                write!(f, "orthant:{}", s.join(","))
            }
            Cone::Full { dim } => write!(f, "full:{dim}"),
            Cone::MinusRay { direction } => write!(f, "minusray:{}", join(direction)),
            Cone::Complement(c) => write!(f, "complement:{c}"),
        }
    }
}

impl Serialize for Cone {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}
