//! First-order forward-mode dual numbers.
//!
//! Charts and profiles are written once against [`Scalar`] and evaluated
//! either on `f64` or on [`Dual`] to obtain exact first derivatives.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Numeric type a chart can be evaluated on.
pub trait Scalar:
    Clone
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn constant(c: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn tan(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn tanh(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn atan(&self) -> Self;
    fn powi(&self, k: i32) -> Self;
    fn powf(&self, p: f64) -> Self;

    /// `self^other` for a non-constant exponent, defined for positive bases.
    fn pow(&self, other: &Self) -> Self {
        (other.clone() * self.ln()).exp()
    }

    /// `φ(self)` for a function whose value and derivative at `self` are given.
    fn chain(&self, value: f64, deriv: f64) -> Self;

    fn scale(&self, c: f64) -> Self {
        self.clone() * Self::constant(c)
    }

    fn offset(&self, c: f64) -> Self {
        self.clone() + Self::constant(c)
    }
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn tan(&self) -> Self {
        f64::tan(*self)
    }
    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }
    fn cosh(&self) -> Self {
        f64::cosh(*self)
    }
    fn tanh(&self) -> Self {
        f64::tanh(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn atan(&self) -> Self {
        f64::atan(*self)
    }
    fn powi(&self, k: i32) -> Self {
        f64::powi(*self, k)
    }
    fn powf(&self, p: f64) -> Self {
        f64::powf(*self, p)
    }
    fn pow(&self, other: &Self) -> Self {
        f64::powf(*self, *other)
    }
    fn chain(&self, value: f64, _deriv: f64) -> Self {
        value
    }
}

/// Value together with its gradient. An empty gradient means a constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub g: Vec<f64>,
}

impl Dual {
    pub fn new(v: f64, g: Vec<f64>) -> Self {
        Self { v, g }
    }

    /// The `k`-th of `dim` independent variables at value `v`.
    pub fn variable(v: f64, k: usize, dim: usize) -> Self {
        let mut g = vec![0.0; dim];
        g[k] = 1.0;
        Self { v, g }
    }

    /// Seed every coordinate of `p` as an independent variable.
    pub fn seed(p: &[f64]) -> Vec<Dual> {
        (0..p.len())
            .map(|k| Dual::variable(p[k], k, p.len()))
            .collect()
    }

    /// Gradient padded to `dim` entries.
    pub fn grad(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        out[..self.g.len()].copy_from_slice(&self.g);
        out
    }
}

fn combine(a: &[f64], b: &[f64], ca: f64, cb: f64) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| ca * a.get(k).copied().unwrap_or(0.0) + cb * b.get(k).copied().unwrap_or(0.0))
        .collect()
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual {
            v: self.v + rhs.v,
            g: combine(&self.g, &rhs.g, 1.0, 1.0),
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual {
            v: self.v - rhs.v,
            g: combine(&self.g, &rhs.g, 1.0, -1.0),
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual {
            v: self.v * rhs.v,
            g: combine(&self.g, &rhs.g, rhs.v, self.v),
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let inv = 1.0 / rhs.v;
        let v = self.v * inv;
        Dual {
            v,
            g: combine(&self.g, &rhs.g, inv, -v * inv),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            v: -self.v,
            g: self.g.into_iter().map(|x| -x).collect(),
        }
    }
}

impl Scalar for Dual {
    fn constant(c: f64) -> Self {
        Dual {
            v: c,
            g: Vec::new(),
        }
    }
    fn chain(&self, v: f64, dv: f64) -> Self {
        Self {
            v,
            g: self.g.iter().map(|x| x * dv).collect(),
        }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sin(&self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(&self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn tan(&self) -> Self {
        let t = self.v.tan();
        self.chain(t, 1.0 + t * t)
    }
    fn sinh(&self) -> Self {
        self.chain(self.v.sinh(), self.v.cosh())
    }
    fn cosh(&self) -> Self {
        self.chain(self.v.cosh(), self.v.sinh())
    }
    fn tanh(&self) -> Self {
        let t = self.v.tanh();
        self.chain(t, 1.0 - t * t)
    }
    fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn ln(&self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn atan(&self) -> Self {
        self.chain(self.v.atan(), 1.0 / (1.0 + self.v * self.v))
    }
    fn powi(&self, k: i32) -> Self {
        if k == 0 {
            return Dual::constant(1.0);
        }
        self.chain(self.v.powi(k), k as f64 * self.v.powi(k - 1))
    }
    fn powf(&self, p: f64) -> Self {
        self.chain(self.v.powf(p), p * self.v.powf(p - 1.0))
    }
    fn pow(&self, other: &Self) -> Self {
        if other.g.iter().all(|&x| x == 0.0) {
            return self.powf(other.v);
        }
        (other.clone() * self.ln()).exp()
    }
}
