//! Symmetric (0,2)-tensors in Cartesian components, with and without jets.

use std::ops::{Add, Index, Mul, Neg, Sub};

use nalgebra::{Matrix4, SymmetricEigen};

use crate::error::{Error, Result};
use crate::jet::{Jet1, Jet2, SYM_INDEX, SYM_PAIRS};

pub type Mat4 = [[f64; 4]; 4];

/// Largest condition number accepted when inverting a metric.
pub const MAX_CONDITION: f64 = 1e13;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub comps: [f64; 10],
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { comps: [0.0; 10] };

    pub fn identity() -> Self {
        Self::diag([1.0; 4])
    }

    pub fn diag(d: [f64; 4]) -> Self {
        let mut s = Self::ZERO;
        for i in 0..4 {
            s.comps[SYM_INDEX[i][i]] = d[i];
        }
        s
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.comps[SYM_INDEX[i][j]]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.comps[SYM_INDEX[i][j]] = v;
    }

    /// Symmetrizes an arbitrary matrix.
    pub fn from_matrix(m: &Mat4) -> Self {
        let mut s = Self::ZERO;
        for (k, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            s.comps[k] = 0.5 * (m[i][j] + m[j][i]);
        }
        s
    }

    pub fn to_matrix(&self) -> Mat4 {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.get(i, j);
            }
        }
        m
    }

    pub fn to_nalgebra(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.get(i, j))
    }

    pub fn trace(&self) -> f64 {
        self.comps[0] + self.comps[4] + self.comps[7] + self.comps[9]
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut s = *self;
        for v in &mut s.comps {
            *v *= c;
        }
        s
    }

    /// Euclidean (Frobenius) norm over all 16 entries.
    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for (k, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            let w = if i == j { 1.0 } else { 2.0 };
            acc += w * self.comps[k] * self.comps[k];
        }
        acc.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn determinant(&self) -> f64 {
        self.to_nalgebra().determinant()
    }

    /// Pullback by a linear map with matrix `a`: (AᵀhA)_{ij}.
    pub fn congruence(&self, a: &Mat4) -> Self {
        let h = self.to_matrix();
        let mut out = Self::ZERO;
        for (k, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            let mut acc = 0.0;
            for p in 0..4 {
                for q in 0..4 {
                    acc += a[p][i] * h[p][q] * a[q][j];
                }
            }
            out.comps[k] = acc;
        }
        out
    }

    /// Inverse of a positive definite tensor, with condition diagnostics.
    pub fn inverse(&self) -> Result<Sym2> {
        let m = self.to_nalgebra();
        match m.cholesky() {
            Some(ch) => {
                let l = ch.l();
                let mut dmax = 0.0_f64;
                let mut dmin = f64::INFINITY;
                for i in 0..4 {
                    dmax = dmax.max(l[(i, i)].abs());
                    dmin = dmin.min(l[(i, i)].abs());
                }
                let cond = (dmax / dmin).powi(2);
                if !cond.is_finite() || cond > MAX_CONDITION {
                    return Err(Error::Singular { cond });
                }
                let inv = ch.inverse();
                Ok(Sym2::from_matrix(&to_array(&inv)))
            }
            None => {
                let eig = SymmetricEigen::new(m).eigenvalues;
                let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
                let max_eig = eig.iter().cloned().fold(0.0_f64, |a, b| a.max(b.abs()));
                if min_eig.abs() <= f64::EPSILON * max_eig {
                    Err(Error::Singular {
                        cond: max_eig / min_eig.abs().max(f64::MIN_POSITIVE),
                    })
                } else {
                    Err(Error::NotPositiveDefinite { min_eig })
                }
            }
        }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let e = SymmetricEigen::new(self.to_nalgebra()).eigenvalues;
        let mut v = [e[0], e[1], e[2], e[3]];
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    /// Raises both indices with `ginv`: h^{ij} = g^{ik} g^{jl} h_{kl}.
    pub fn raise_both(&self, ginv: &Sym2) -> Sym2 {
        let gi = ginv.to_matrix();
        let h = self.to_matrix();
        let mut out = Sym2::ZERO;
        for (k, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            let mut acc = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    acc += gi[i][a] * gi[j][b] * h[a][b];
                }
            }
            out.comps[k] = acc;
        }
        out
    }

    /// Full contraction Σ_{ij} a_{ij} b^{ij}.
    pub fn contract(&self, other: &Sym2) -> f64 {
        let mut acc = 0.0;
        for (k, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            let w = if i == j { 1.0 } else { 2.0 };
            acc += w * self.comps[k] * other.comps[k];
        }
        acc
    }
}

impl Index<(usize, usize)> for Sym2 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.comps[SYM_INDEX[i][j]]
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(mut self, o: Sym2) -> Sym2 {
        for k in 0..10 {
            self.comps[k] += o.comps[k];
        }
        self
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(mut self, o: Sym2) -> Sym2 {
        for k in 0..10 {
            self.comps[k] -= o.comps[k];
        }
        self
    }
}

impl Neg for Sym2 {
    type Output = Sym2;
    fn neg(self) -> Sym2 {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Sym2 {
    type Output = Sym2;
    fn mul(self, c: f64) -> Sym2 {
        self.scale(c)
    }
}

fn to_array(m: &Matrix4<f64>) -> Mat4 {
    let mut a = [[0.0; 4]; 4];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    a
}

/// ⟨h,k⟩_g = g^{ik} g^{jl} h_{ij} k_{kl}.
pub fn inner_product(g: &Sym2, h: &Sym2, k: &Sym2) -> Result<f64> {
    let ginv = g.inverse()?;
    Ok(inner_product_inv(&ginv, h, k))
}

/// As [`inner_product`] with a precomputed inverse metric.
pub fn inner_product_inv(ginv: &Sym2, h: &Sym2, k: &Sym2) -> f64 {
    h.raise_both(ginv).contract(k)
}

/// Symmetric tensor whose components carry second-order jets.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2Jet {
    pub comps: [Jet2; 10],
}

impl Sym2Jet {
    pub const ZERO: Sym2Jet = Sym2Jet {
        comps: [Jet2::ZERO; 10],
    };

    pub fn identity() -> Self {
        Self::constant(&Sym2::identity())
    }

    pub fn constant(s: &Sym2) -> Self {
        let mut out = Self::ZERO;
        for k in 0..10 {
            out.comps[k] = Jet2::constant(s.comps[k]);
        }
        out
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Jet2 {
        &self.comps[SYM_INDEX[i][j]]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Jet2 {
        &mut self.comps[SYM_INDEX[i][j]]
    }

    pub fn value(&self) -> Sym2 {
        let mut s = Sym2::ZERO;
        for k in 0..10 {
            s.comps[k] = self.comps[k].value;
        }
        s
    }

    /// ∂_k of every component.
    pub fn partial(&self, k: usize) -> Sym2 {
        let mut s = Sym2::ZERO;
        for c in 0..10 {
            s.comps[c] = self.comps[c].grad[k];
        }
        s
    }

    /// ∂_k ∂_l of every component.
    pub fn second(&self, k: usize, l: usize) -> Sym2 {
        let idx = SYM_INDEX[k][l];
        let mut s = Sym2::ZERO;
        for c in 0..10 {
            s.comps[c] = self.comps[c].hess[idx];
        }
        s
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = *self;
        for v in &mut out.comps {
            *v = v.scale(c);
        }
        out
    }

    pub fn scale_jet(&self, c: &Jet2) -> Self {
        let mut out = *self;
        for v in &mut out.comps {
            *v = *v * *c;
        }
        out
    }

    /// Largest absolute value over all components and their derivatives.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0_f64, |m, j| m.max(j.max_abs()))
    }

    /// Symmetric product a⊗b + b⊗a of two covectors.
    pub fn sym_product(a: &[Jet2; 4], b: &[Jet2; 4]) -> Self {
        let mut out = Self::ZERO;
        for (k, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            out.comps[k] = a[i] * b[j] + a[j] * b[i];
        }
        out
    }

    /// Square a⊗a of a covector.
    pub fn square(a: &[Jet2; 4]) -> Self {
        let mut out = Self::ZERO;
        for (k, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            out.comps[k] = a[i] * a[j];
        }
        out
    }

    /// Inverse as a jet: first and second derivatives of g^{-1}.
    pub fn inverse(&self) -> Result<Sym2Jet> {
        let gi = self.value().inverse()?.to_matrix();
        let dg: [Mat4; 4] = std::array::from_fn(|k| self.partial(k).to_matrix());
        // P_k = G ∂_k g
        let p: [Mat4; 4] = std::array::from_fn(|k| matmul(&gi, &dg[k]));
        // ∂_k G = -G ∂_k g G
        let dgi: [Mat4; 4] = std::array::from_fn(|k| scale_mat(&matmul(&p[k], &gi), -1.0));
        let mut out = Sym2Jet::ZERO;
        for (c, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            out.comps[c].value = 0.5 * (gi[i][j] + gi[j][i]);
            for k in 0..4 {
                out.comps[c].grad[k] = 0.5 * (dgi[k][i][j] + dgi[k][j][i]);
            }
        }
        for (s, &(k, l)) in SYM_PAIRS.iter().enumerate() {
            let ddg = self.second(k, l).to_matrix();
            // -G ∂kl g G + P_k P_l G + P_l P_k G
            let a = scale_mat(&matmul(&matmul(&gi, &ddg), &gi), -1.0);
            let b = matmul(&matmul(&p[k], &p[l]), &gi);
            let cc = matmul(&matmul(&p[l], &p[k]), &gi);
            for (c, &(i, j)) in SYM_PAIRS.iter().enumerate() {
                let v = a[i][j] + b[i][j] + cc[i][j];
                let vt = a[j][i] + b[j][i] + cc[j][i];
                out.comps[c].hess[s] = 0.5 * (v + vt);
            }
        }
        Ok(out)
    }

    /// g^{ij} h_{ij} as a jet, given the inverse metric jet.
    pub fn trace_with(&self, ginv: &Sym2Jet) -> Jet2 {
        let mut acc = Jet2::ZERO;
        for (k, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            let w = if i == j { 1.0 } else { 2.0 };
            acc += (ginv.comps[k] * self.comps[k]).scale(w);
        }
        acc
    }

    pub fn first_order(&self) -> [Jet1; 10] {
        std::array::from_fn(|k| self.comps[k].to_jet1())
    }
}

impl Add for Sym2Jet {
    type Output = Sym2Jet;
    fn add(mut self, o: Sym2Jet) -> Sym2Jet {
        for k in 0..10 {
            self.comps[k] += o.comps[k];
        }
        self
    }
}

impl Sub for Sym2Jet {
    type Output = Sym2Jet;
    fn sub(mut self, o: Sym2Jet) -> Sym2Jet {
        for k in 0..10 {
            self.comps[k] -= o.comps[k];
        }
        self
    }
}

pub fn matmul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            for j in 0..4 {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

fn scale_mat(a: &Mat4, s: f64) -> Mat4 {
    let mut c = *a;
    for row in &mut c {
        for v in row {
            *v *= s;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_product_examples() {
        let i = Sym2::identity();
        assert_eq!(inner_product(&i, &i, &i).unwrap(), 4.0);
        let h = Sym2::diag([-1.0, -1.0, 1.0, 1.0]);
        assert_eq!(inner_product(&i, &h, &i).unwrap(), 0.0);
        let g2 = i.scale(2.0);
        assert!((inner_product(&g2, &i, &i).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_metric_is_rejected() {
        let g = Sym2::diag([1.0, 1.0, 1.0, 0.0]);
        assert!(matches!(g.inverse(), Err(Error::Singular { .. })));
        let g = Sym2::diag([1.0, 1.0, 1.0, -1.0]);
        assert!(matches!(g.inverse(), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn congruence_by_permutation() {
        let h = Sym2::diag([1.0, 2.0, 3.0, 4.0]);
        let mut a = [[0.0; 4]; 4];
        a[0][1] = 1.0;
        a[1][0] = 1.0;
        a[2][2] = 1.0;
        a[3][3] = 1.0;
        let p = h.congruence(&a);
        assert_eq!(p.get(0, 0), 2.0);
        assert_eq!(p.get(1, 1), 1.0);
    }
}
