//! Scalar abstraction so residual formulas are written once.
//!
//! Every equation's residual rows are generic over `Scalar`. Instantiated at
//! `f64` they score a classical reference solution; instantiated at `Nd` they
//! emit the training-loss graph. Both uses share one definition, so the
//! critic the optimizer sees is the critic the tests score.

use std::ops::{Add, Mul, Neg, Sub};

use super::builder::Nd;

/// Field operations needed by the residual formulas.
pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    /// A constant "in the same world" as `proto` (same graph for `Nd`).
    fn constant(proto: &Self, v: f64) -> Self;

    /// |self| with the subgradient convention sign(0) = 0 when differentiated.
    fn abs_v(&self) -> Self;

    /// |self|^p for p >= 1.
    fn abs_powf(&self, p: f64) -> Self;

    fn sin_v(&self) -> Self;

    fn cos_v(&self) -> Self;

    fn exp_v(&self) -> Self;

    fn sigmoid_v(&self) -> Self;

    fn sq(&self) -> Self {
        self.clone() * self.clone()
    }

    /// 2 / (e^x + e^(-x)), written as 2 e^(-|x|) sigmoid(2|x|) so it never
    /// overflows and stays exactly even in x.
    fn sech_v(&self) -> Self {
        let two = Self::constant(self, 2.0);
        let a = self.abs_v();
        two.clone() * (-a.clone()).exp_v() * (two * a).sigmoid_v()
    }
}

impl Scalar for f64 {
    fn constant(_: &Self, v: f64) -> Self {
        v
    }

    fn abs_v(&self) -> Self {
        self.abs()
    }

    fn abs_powf(&self, p: f64) -> Self {
        self.abs().powf(p)
    }

    fn sin_v(&self) -> Self {
        self.sin()
    }

    fn cos_v(&self) -> Self {
        self.cos()
    }

    fn exp_v(&self) -> Self {
        self.exp()
    }

    fn sigmoid_v(&self) -> Self {
        super::sigmoid(*self)
    }
}

impl Scalar for Nd {
    fn constant(proto: &Self, v: f64) -> Self {
        proto.graph().constant(v)
    }

    fn abs_v(&self) -> Self {
        self.abs()
    }

    fn abs_powf(&self, p: f64) -> Self {
        self.abs_pow(p)
    }

    fn sin_v(&self) -> Self {
        self.sin()
    }

    fn cos_v(&self) -> Self {
        self.cos()
    }

    fn exp_v(&self) -> Self {
        self.exp()
    }

    fn sigmoid_v(&self) -> Self {
        self.sigmoid()
    }
}

/// A value with its derivatives with respect to the expression inputs:
/// `first[k]` is the first derivative along input `k`, `second_diag[k]` the
/// pure (diagonal) second derivative. `second_diag` may be empty when no
/// second-order information was requested.
#[derive(Clone, Debug)]
pub struct Bundle<T> {
    pub value: T,
    pub first: Vec<T>,
    pub second_diag: Vec<T>,
}

impl<T: Scalar> Bundle<T> {
    pub fn new(value: T, first: Vec<T>, second_diag: Vec<T>) -> Self {
        Bundle {
            value,
            first,
            second_diag,
        }
    }

    /// First derivative along input `k`.
    pub fn d1(&self, k: usize) -> &T {
        &self.first[k]
    }

    /// Second (diagonal) derivative along input `k`.
    pub fn d2(&self, k: usize) -> &T {
        &self.second_diag[k]
    }
}
