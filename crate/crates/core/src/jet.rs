//! Second-order jets in four variables.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

pub const DIM: usize = 4;

/// Packed index of the symmetric pair (i, j) in a 10-slot array.
pub const SYM_INDEX: [[usize; 4]; 4] = [[0, 1, 2, 3], [1, 4, 5, 6], [2, 5, 7, 8], [3, 6, 8, 9]];

/// Inverse of [`SYM_INDEX`]: slot -> (i, j) with i <= j.
pub const SYM_PAIRS: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

#[inline]
pub fn sym_index(i: usize, j: usize) -> usize {
    SYM_INDEX[i][j]
}

pub type Point4 = [f64; 4];

/// Value, gradient and Hessian of a scalar in the coordinates x1..x4.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 4],
    pub hess: [f64; 10],
}

impl Jet2 {
    pub const ZERO: Jet2 = Jet2 {
        value: 0.0,
        grad: [0.0; 4],
        hess: [0.0; 10],
    };

    pub fn constant(c: f64) -> Self {
        Jet2 {
            value: c,
            ..Self::ZERO
        }
    }

    /// The coordinate function x_i evaluated at `v`.
    pub fn variable(v: f64, i: usize) -> Self {
        let mut j = Self::constant(v);
        j.grad[i] = 1.0;
        j
    }

    /// Jets of the four coordinate functions at `x`.
    pub fn coords(x: &Point4) -> [Jet2; 4] {
        [
            Self::variable(x[0], 0),
            Self::variable(x[1], 1),
            Self::variable(x[2], 2),
            Self::variable(x[3], 3),
        ]
    }

    #[inline]
    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.hess[SYM_INDEX[i][j]]
    }

    /// Applies a scalar function given its value and first two derivatives at `self.value`.
    #[inline]
    pub fn compose(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let mut out = Jet2::constant(f0);
        for i in 0..4 {
            out.grad[i] = f1 * self.grad[i];
        }
        for (s, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            out.hess[s] = f2 * self.grad[i] * self.grad[j] + f1 * self.hess[s];
        }
        out
    }

    pub fn sqrt(&self) -> Jet2 {
        let s = self.value.sqrt();
        self.compose(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn recip(&self) -> Jet2 {
        let r = 1.0 / self.value;
        self.compose(r, -r * r, 2.0 * r * r * r)
    }

    pub fn powi(&self, n: i32) -> Jet2 {
        let v = self.value;
        match n {
            0 => Jet2::constant(1.0),
            1 => *self,
            _ => {
                let p2 = v.powi(n - 2);
                let nf = n as f64;
                self.compose(p2 * v * v, nf * p2 * v, nf * (nf - 1.0) * p2)
            }
        }
    }

    pub fn powf(&self, p: f64) -> Jet2 {
        let v = self.value;
        let f0 = v.powf(p);
        self.compose(f0, p * f0 / v, p * (p - 1.0) * f0 / (v * v))
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.value.exp();
        self.compose(e, e, e)
    }

    pub fn ln(&self) -> Jet2 {
        let v = self.value;
        self.compose(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn square(&self) -> Jet2 {
        *self * *self
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = self.value.abs();
        for g in self.grad {
            m = m.max(g.abs());
        }
        for h in self.hess {
            m = m.max(h.abs());
        }
        m
    }

    /// First-order truncation.
    pub fn to_jet1(&self) -> Jet1 {
        Jet1 {
            value: self.value,
            grad: self.grad,
        }
    }

    /// The jet of ∂_k of this function, truncated to first order.
    pub fn partial(&self, k: usize) -> Jet1 {
        let mut g = [0.0; 4];
        for (l, gl) in g.iter_mut().enumerate() {
            *gl = self.h(k, l);
        }
        Jet1 {
            value: self.grad[k],
            grad: g,
        }
    }

    pub fn scale(&self, c: f64) -> Jet2 {
        let mut out = *self;
        out.value *= c;
        for g in &mut out.grad {
            *g *= c;
        }
        for h in &mut out.hess {
            *h *= c;
        }
        out
    }
}

/// Euclidean radius as a jet.
pub fn jet_radius(x: &Point4) -> Result<Jet2> {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 == 0.0 || !r2.is_finite() {
        return Err(Error::Domain("radius jet requested at the origin".into()));
    }
    let r = r2.sqrt();
    let mut out = Jet2::constant(r);
    for i in 0..4 {
        out.grad[i] = x[i] / r;
    }
    for (s, &(i, j)) in SYM_PAIRS.iter().enumerate() {
        let d = if i == j { 1.0 } else { 0.0 };
        out.hess[s] = (d - x[i] * x[j] / r2) / r;
    }
    Ok(out)
}

impl Add for Jet2 {
    type Output = Jet2;
    #[inline]
    fn add(mut self, o: Jet2) -> Jet2 {
        self += o;
        self
    }
}

impl AddAssign for Jet2 {
    #[inline]
    fn add_assign(&mut self, o: Jet2) {
        self.value += o.value;
        for i in 0..4 {
            self.grad[i] += o.grad[i];
        }
        for s in 0..10 {
            self.hess[s] += o.hess[s];
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    #[inline]
    fn sub(mut self, o: Jet2) -> Jet2 {
        self -= o;
        self
    }
}

impl SubAssign for Jet2 {
    #[inline]
    fn sub_assign(&mut self, o: Jet2) {
        self.value -= o.value;
        for i in 0..4 {
            self.grad[i] -= o.grad[i];
        }
        for s in 0..10 {
            self.hess[s] -= o.hess[s];
        }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, o: Jet2) -> Jet2 {
        let mut out = Jet2::constant(self.value * o.value);
        for i in 0..4 {
            out.grad[i] = self.grad[i] * o.value + self.value * o.grad[i];
        }
        for (s, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            out.hess[s] = self.hess[s] * o.value
                + self.grad[i] * o.grad[j]
                + self.grad[j] * o.grad[i]
                + self.value * o.hess[s];
        }
        out
    }
}

impl MulAssign for Jet2 {
    fn mul_assign(&mut self, o: Jet2) {
        *self = *self * o;
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(mut self, c: f64) -> Jet2 {
        self.value += c;
        self
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    fn sub(mut self, c: f64) -> Jet2 {
        self.value -= c;
        self
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, c: f64) -> Jet2 {
        self.scale(c)
    }
}

impl Mul<Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, j: Jet2) -> Jet2 {
        j.scale(self)
    }
}

impl Div<f64> for Jet2 {
    type Output = Jet2;
    fn div(self, c: f64) -> Jet2 {
        self.scale(1.0 / c)
    }
}

/// Value and gradient only.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet1 {
    pub value: f64,
    pub grad: [f64; 4],
}

impl Jet1 {
    pub const ZERO: Jet1 = Jet1 {
        value: 0.0,
        grad: [0.0; 4],
    };

    pub fn constant(c: f64) -> Self {
        Jet1 {
            value: c,
            grad: [0.0; 4],
        }
    }

    pub fn scale(&self, c: f64) -> Jet1 {
        Jet1 {
            value: self.value * c,
            grad: [self.grad[0] * c, self.grad[1] * c, self.grad[2] * c, self.grad[3] * c],
        }
    }

    pub fn sqrt(&self) -> Jet1 {
        let s = self.value.sqrt();
        let d = 0.5 / s;
        Jet1 {
            value: s,
            grad: [self.grad[0] * d, self.grad[1] * d, self.grad[2] * d, self.grad[3] * d],
        }
    }
}

impl Add for Jet1 {
    type Output = Jet1;
    #[inline]
    fn add(mut self, o: Jet1) -> Jet1 {
        self += o;
        self
    }
}

impl AddAssign for Jet1 {
    #[inline]
    fn add_assign(&mut self, o: Jet1) {
        self.value += o.value;
        for i in 0..4 {
            self.grad[i] += o.grad[i];
        }
    }
}

impl Sub for Jet1 {
    type Output = Jet1;
    #[inline]
    fn sub(mut self, o: Jet1) -> Jet1 {
        self -= o;
        self
    }
}

impl SubAssign for Jet1 {
    #[inline]
    fn sub_assign(&mut self, o: Jet1) {
        self.value -= o.value;
        for i in 0..4 {
            self.grad[i] -= o.grad[i];
        }
    }
}

impl Neg for Jet1 {
    type Output = Jet1;
    fn neg(self) -> Jet1 {
        self.scale(-1.0)
    }
}

impl Mul for Jet1 {
    type Output = Jet1;
    #[inline]
    fn mul(self, o: Jet1) -> Jet1 {
        Jet1 {
            value: self.value * o.value,
            grad: [
                self.grad[0] * o.value + self.value * o.grad[0],
                self.grad[1] * o.value + self.value * o.grad[1],
                self.grad[2] * o.value + self.value * o.grad[2],
                self.grad[3] * o.value + self.value * o.grad[3],
            ],
        }
    }
}

impl Mul<f64> for Jet1 {
    type Output = Jet1;
    fn mul(self, c: f64) -> Jet1 {
        self.scale(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_unit_vector() {
        let j = jet_radius(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(j.value, 1.0);
        assert_eq!(j.grad, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(j.h(0, 0), 0.0);
        assert_eq!(j.h(1, 1), 1.0);
        assert_eq!(j.h(3, 3), 1.0);
        assert_eq!(j.h(0, 1), 0.0);
    }

    #[test]
    fn radius_axis_two() {
        let j = jet_radius(&[0.0, 2.0, 0.0, 0.0]).unwrap();
        assert_eq!(j.value, 2.0);
        assert_eq!(j.grad, [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(j.h(0, 0), 0.5);
        assert_eq!(j.h(1, 1), 0.0);
        assert_eq!(j.h(2, 2), 0.5);
    }

    #[test]
    fn radius_rejects_origin() {
        assert!(matches!(jet_radius(&[0.0; 4]), Err(Error::Domain(_))));
    }

    #[test]
    fn product_rule_polynomial() {
        // f = x1^2 x2, g = x3 + x1
        let x = [0.3, -1.2, 0.7, 2.0];
        let c = Jet2::coords(&x);
        let f = c[0] * c[0] * c[1];
        let g = c[2] + c[0];
        let p = f * g;
        // p = x1^3 x2 + x1^2 x2 x3
        let (a, b, cc) = (x[0], x[1], x[2]);
        assert!((p.value - (a * a * a * b + a * a * b * cc)).abs() < 1e-15);
        assert!((p.grad[0] - (3.0 * a * a * b + 2.0 * a * b * cc)).abs() < 1e-14);
        assert!((p.h(0, 0) - (6.0 * a * b + 2.0 * b * cc)).abs() < 1e-14);
        assert!((p.h(0, 1) - (3.0 * a * a + 2.0 * a * cc)).abs() < 1e-14);
        assert!((p.h(0, 2) - 2.0 * a * b).abs() < 1e-14);
        assert!((p.h(1, 2) - a * a).abs() < 1e-14);
        assert_eq!(p.h(3, 3), 0.0);
    }
}
