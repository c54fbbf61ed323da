//! Small fixed-capacity vectors in `R^d`, `d <= MAX_DIM`.
//!
//! Cocycle values are evaluated millions of times per trajectory, so the
//! vector type lives on the stack and is `Copy`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Largest supported cocycle dimension.
pub const MAX_DIM: usize = 4;

#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    dim: u8,
    c: [f64; MAX_DIM],
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
        Vector {
            dim: dim as u8,
            c: [0.0; MAX_DIM],
        }
    }

    pub fn scalar(v: f64) -> Self {
        let mut out = Self::zeros(1);
        out.c[0] = v;
        out
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut out = Self::zeros(values.len());
        out.c[..values.len()].copy_from_slice(values);
        out
    }

    /// Constant vector `(v, v, ..., v)`.
    pub fn splat(dim: usize, v: f64) -> Self {
        let mut out = Self::zeros(dim);
        out.c[..dim].iter_mut().for_each(|x| *x = v);
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.dim as usize]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.c[..self.dim as usize]
    }

    #[inline]
    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// Euclidean norm.
    #[inline]
    pub fn norm(&self) -> f64 {
        match self.dim {
            1 => self.c[0].abs(),
            2 => self.c[0].hypot(self.c[1]),
            _ => self.norm_sq().sqrt(),
        }
    }

    /// `self / |self|`, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Vector> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self.map(|c| c / n))
        } else {
            None
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_slice().iter().all(|&x| x == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Component-wise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        let mut out = *self;
        out.as_mut_slice().iter_mut().for_each(|x| *x = f(*x));
        out
    }

    /// Component-wise combination of two vectors of equal dimension, or of a
    /// scalar (dimension 1) with a vector.
    pub fn zip_with(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Vector {
        match (self.dim, other.dim) {
            (a, b) if a == b => {
                let mut out = *self;
                for i in 0..a as usize {
                    out.c[i] = f(self.c[i], other.c[i]);
                }
                out
            }
            (1, _) => other.map(|y| f(self.c[0], y)),
            (_, 1) => self.map(|x| f(x, other.c[0])),
            (a, b) => panic!("dimension mismatch: {a} vs {b}"),
        }
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.as_slice().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    #[inline]
    fn add(self, rhs: Vector) -> Vector {
        self.zip_with(&rhs, |a, b| a + b)
    }
}

impl Sub for Vector {
    type Output = Vector;
    #[inline]
    fn sub(self, rhs: Vector) -> Vector {
        self.zip_with(&rhs, |a, b| a - b)
    }
}

impl AddAssign for Vector {
    #[inline]
    fn add_assign(&mut self, rhs: Vector) {
        *self = *self + rhs;
    }
}

impl SubAssign for Vector {
    #[inline]
    fn sub_assign(&mut self, rhs: Vector) {
        *self = *self - rhs;
    }
}

impl Neg for Vector {
    type Output = Vector;
    #[inline]
    fn neg(self) -> Vector {
        self.map(|x| -x)
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    #[inline]
    fn mul(self, k: f64) -> Vector {
        self.map(|x| x * k)
    }
}

impl Serialize for Vector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if v.is_empty() || v.len() > MAX_DIM {
            return Err(serde::de::Error::custom(format!(
                "vector dimension {} outside 1..={MAX_DIM}",
                v.len()
            )));
        }
        Ok(Vector::from_slice(&v))
    }
}

/// Neumaier-compensated running sum of vectors.
#[derive(Clone, Copy, Debug)]
pub struct CompensatedSum {
    sum: Vector,
    comp: Vector,
}

impl CompensatedSum {
    pub fn new(dim: usize) -> Self {
        CompensatedSum {
            sum: Vector::zeros(dim),
            comp: Vector::zeros(dim),
        }
    }

    #[inline]
    pub fn add(&mut self, v: &Vector) {
        for i in 0..self.sum.dim() {
            let s = self.sum.c[i];
            let x = v.c[i];
            let t = s + x;
            if s.abs() >= x.abs() {
                self.comp.c[i] += (s - t) + x;
            } else {
                self.comp.c[i] += (x - t) + s;
            }
            self.sum.c[i] = t;
        }
    }

    #[inline]
    pub fn value(&self) -> Vector {
        let mut out = self.sum;
        for i in 0..out.dim() {
            out.c[i] += self.comp.c[i];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_of_three_four() {
        let v = Vector::from_slice(&[3.0, 4.0]);
        assert_eq!(v.norm(), 5.0);
        let u = v.normalized().unwrap();
        assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        assert!(Vector::zeros(2).normalized().is_none());
    }

    #[test]
    fn scalar_broadcasts() {
        let v = Vector::from_slice(&[1.0, 2.0]);
        let s = Vector::scalar(3.0);
        assert_eq!((s + v).as_slice(), &[4.0, 5.0]);
        assert_eq!((v - s).as_slice(), &[-2.0, -1.0]);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut acc = CompensatedSum::new(1);
        for _ in 0..1000 {
            acc.add(&Vector::scalar(0.1));
        }
        let naive: f64 = (0..1000).map(|_| 0.1).sum();
        assert_eq!(acc.value()[0], 100.0);
        assert_ne!(naive, 100.0);
    }
}
