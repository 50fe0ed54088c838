//! Sparse polynomials in four variables, and a compiled multi-column jet evaluator.

use std::collections::BTreeMap;

use crate::jet::{Jet2, Point4, SYM_PAIRS};

pub type Exps = [u8; 4];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly4 {
    pub terms: BTreeMap<Exps, f64>,
}

impl Poly4 {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn monomial(e: Exps, c: f64) -> Self {
        let mut p = Self::new();
        p.add_term(e, c);
        p
    }

    pub fn add_term(&mut self, e: Exps, c: f64) {
        if c != 0.0 {
            *self.terms.entry(e).or_insert(0.0) += c;
        }
    }

    pub fn add_scaled(&mut self, other: &Poly4, s: f64) {
        for (e, c) in &other.terms {
            self.add_term(*e, s * c);
        }
    }

    pub fn mul(&self, other: &Poly4) -> Poly4 {
        let mut out = Poly4::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3]];
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly4 {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out
    }

    pub fn derivative(&self, i: usize) -> Poly4 {
        let mut out = Poly4::new();
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = *e;
                f[i] -= 1;
                out.add_term(f, c * e[i] as f64);
            }
        }
        out
    }

    pub fn second(&self, i: usize, j: usize) -> Poly4 {
        self.derivative(i).derivative(j)
    }

    pub fn eval(&self, x: &Point4) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32) * x[3].powi(e[3] as i32))
            .sum()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&v| v as usize).sum())
            .max()
            .unwrap_or(0)
    }
}

/// Several polynomials sharing one monomial list, evaluated to jets together.
///
/// Monomials are sorted by total degree so evaluation can stop at a degree cap.
#[derive(Debug, Clone)]
pub struct CompiledPolys<const M: usize> {
    exps: Vec<Exps>,
    coefs: Vec<[f64; M]>,
    /// degree_end[d] = number of monomials of total degree ≤ d.
    degree_end: Vec<usize>,
    max_exp: usize,
}

impl<const M: usize> CompiledPolys<M> {
    pub fn new(polys: &[Poly4; M]) -> Self {
        let mut all: BTreeMap<(usize, Exps), [f64; M]> = BTreeMap::new();
        for (m, p) in polys.iter().enumerate() {
            for (e, c) in &p.terms {
                let d = e.iter().map(|&v| v as usize).sum();
                all.entry((d, *e)).or_insert([0.0; M])[m] += c;
            }
        }
        let max_deg = all.keys().map(|k| k.0).max().unwrap_or(0);
        let mut exps = Vec::with_capacity(all.len());
        let mut coefs = Vec::with_capacity(all.len());
        let mut degree_end = vec![0; max_deg + 1];
        let mut max_exp = 0;
        for ((d, e), c) in all {
            exps.push(e);
            coefs.push(c);
            degree_end[d] = exps.len();
            max_exp = max_exp.max(*e.iter().max().unwrap() as usize);
        }
        for d in 1..degree_end.len() {
            degree_end[d] = degree_end[d].max(degree_end[d - 1]);
        }
        CompiledPolys {
            exps,
            coefs,
            degree_end,
            max_exp,
        }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.degree_end.len().saturating_sub(1)
    }

    /// Jets of all M polynomials at x, using monomials of degree ≤ `max_degree`.
    pub fn eval_jets(&self, x: &Point4, max_degree: usize) -> [Jet2; M] {
        let ne = self.max_exp + 1;
        // p[i][e] = x_i^e, d[i][e] = e x_i^{e-1}, s[i][e] = e(e-1) x_i^{e-2}
        let mut p = vec![[0.0; 4]; ne];
        let mut d = vec![[0.0; 4]; ne];
        let mut s = vec![[0.0; 4]; ne];
        for i in 0..4 {
            p[0][i] = 1.0;
            for e in 1..ne {
                p[e][i] = p[e - 1][i] * x[i];
                d[e][i] = e as f64 * p[e - 1][i];
                if e >= 2 {
                    s[e][i] = (e * (e - 1)) as f64 * p[e - 2][i];
                }
            }
        }
        let end = if self.degree_end.is_empty() {
            0
        } else {
            self.degree_end[max_degree.min(self.degree_end.len() - 1)]
        };
        let mut acc = [[0.0f64; 15]; M];
        for t in 0..end {
            let e = self.exps[t];
            let pv = [p[e[0] as usize][0], p[e[1] as usize][1], p[e[2] as usize][2], p[e[3] as usize][3]];
            let dv = [d[e[0] as usize][0], d[e[1] as usize][1], d[e[2] as usize][2], d[e[3] as usize][3]];
            let sv = [s[e[0] as usize][0], s[e[1] as usize][1], s[e[2] as usize][2], s[e[3] as usize][3]];
            let p01 = pv[0] * pv[1];
            let p23 = pv[2] * pv[3];
            let mut f = [0.0f64; 15];
            f[0] = p01 * p23;
            f[1] = dv[0] * pv[1] * p23;
            f[2] = pv[0] * dv[1] * p23;
            f[3] = p01 * dv[2] * pv[3];
            f[4] = p01 * pv[2] * dv[3];
            // Hessian in SYM_PAIRS order
            f[5] = sv[0] * pv[1] * p23;
            f[6] = dv[0] * dv[1] * p23;
            f[7] = dv[0] * pv[1] * dv[2] * pv[3];
            f[8] = dv[0] * pv[1] * pv[2] * dv[3];
            f[9] = pv[0] * sv[1] * p23;
            f[10] = pv[0] * dv[1] * dv[2] * pv[3];
            f[11] = pv[0] * dv[1] * pv[2] * dv[3];
            f[12] = p01 * sv[2] * pv[3];
            f[13] = p01 * dv[2] * dv[3];
            f[14] = p01 * pv[2] * sv[3];
            let c = &self.coefs[t];
            for m in 0..M {
                let cm = c[m];
                if cm != 0.0 {
                    for k in 0..15 {
                        acc[m][k] += cm * f[k];
                    }
                }
            }
        }
        debug_assert_eq!(SYM_PAIRS[1], (0, 1));
        std::array::from_fn(|m| {
            let a = &acc[m];
            Jet2 {
                value: a[0],
                grad: [a[1], a[2], a[3], a[4]],
                hess: [a[5], a[6], a[7], a[8], a[9], a[10], a[11], a[12], a[13], a[14]],
            }
        })
    }
}
