//! Small fixed-capacity vectors for points in R^n, 3 <= n <= 8.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 8;
pub const MIN_DIM: usize = 3;

pub fn check_dim(n: usize) -> Result<()> {
    if (MIN_DIM..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}

#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    dim: usize,
    c: [f64; MAX_DIM],
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX_DIM, "dimension {dim} exceeds {MAX_DIM}");
        Vector { dim, c: [0.0; MAX_DIM] }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut v = Vector::zeros(s.len());
        v.c[..s.len()].copy_from_slice(s);
        v
    }

    pub fn try_from_slice(s: &[f64]) -> Result<Self> {
        if s.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(s.len()));
        }
        Ok(Vector::from_slice(s))
    }

    /// Unit vector along axis `i`.
    pub fn axis(dim: usize, i: usize) -> Self {
        let mut v = Vector::zeros(dim);
        v.c[i] = 1.0;
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.dim]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.c[..self.dim]
    }

    #[inline]
    pub fn dot(&self, o: &Vector) -> f64 {
        debug_assert_eq!(self.dim, o.dim);
        let mut s = 0.0;
        for i in 0..self.dim {
            s += self.c[i] * o.c[i];
        }
        s
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalized(&self) -> Vector {
        let n = self.norm();
        *self * (1.0 / n)
    }

    #[inline]
    pub fn dist(&self, o: &Vector) -> f64 {
        (*self - *o).norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// `self + t * d`
    #[inline]
    pub fn axpy(&self, t: f64, d: &Vector) -> Vector {
        let mut r = *self;
        for i in 0..self.dim {
            r.c[i] += t * d.c[i];
        }
        r
    }

    /// Lexicographic comparison of coordinates.
    pub fn lex_cmp(&self, o: &Vector) -> std::cmp::Ordering {
        for i in 0..self.dim.min(o.dim) {
            match self.c[i].partial_cmp(&o.c[i]) {
                Some(std::cmp::Ordering::Equal) | None => continue,
                Some(ord) => return ord,
            }
        }
        self.dim.cmp(&o.dim)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.as_slice().to_vec()
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Vector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    #[inline]
    fn add(mut self, o: Vector) -> Vector {
        self += o;
        self
    }
}

impl AddAssign for Vector {
    #[inline]
    fn add_assign(&mut self, o: Vector) {
        debug_assert_eq!(self.dim, o.dim);
        for i in 0..self.dim {
            self.c[i] += o.c[i];
        }
    }
}

impl Sub for Vector {
    type Output = Vector;
    #[inline]
    fn sub(mut self, o: Vector) -> Vector {
        self -= o;
        self
    }
}

impl SubAssign for Vector {
    #[inline]
    fn sub_assign(&mut self, o: Vector) {
        debug_assert_eq!(self.dim, o.dim);
        for i in 0..self.dim {
            self.c[i] -= o.c[i];
        }
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    #[inline]
    fn mul(mut self, s: f64) -> Vector {
        for i in 0..self.dim {
            self.c[i] *= s;
        }
        self
    }
}

impl Neg for Vector {
    type Output = Vector;
    #[inline]
    fn neg(self) -> Vector {
        self * -1.0
    }
}

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Vector::try_from_slice(&v).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let a = Vector::from_slice(&[1.0, 2.0, 3.0]);
        let b = Vector::from_slice(&[0.5, -1.0, 2.0]);
        assert_eq!((a + b).as_slice(), &[1.5, 1.0, 5.0]);
        assert_eq!((a - b).as_slice(), &[0.5, 3.0, 1.0]);
        assert_eq!(a.dot(&b), 0.5 - 2.0 + 6.0);
        assert_eq!(a.axpy(2.0, &b).as_slice(), &[2.0, 0.0, 7.0]);
    }

    #[test]
    fn serde_roundtrip() {
        let a = Vector::from_slice(&[1.0, -2.5, 3.0, 0.0]);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[1.0,-2.5,3.0,0.0]");
        let b: Vector = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<Vector>("[1,2,3,4,5,6,7,8,9]").is_err());
    }

    #[test]
    fn lex_order() {
        let a = Vector::from_slice(&[1.0, 0.0, 0.0]);
        let b = Vector::from_slice(&[1.0, 0.0, 1.0]);
        assert_eq!(a.lex_cmp(&b), std::cmp::Ordering::Less);
    }
}
