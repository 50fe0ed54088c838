//! Far-field expansion of cube sums in hyperoctahedrally invariant harmonics.
//!
//! For |x| < |a|, |x − a|^{-2} = Σ_n |x|^n |a|^{-n-2} U_n(x̂·â), and U_n(x̂·â) is (n+1)^{-1} times the
//! reproducing kernel of degree-n harmonics on S³. Summed over a set closed under signed permutations
//! only the invariant harmonics survive, and none exist in degree 2, so
//! Σ_a |x − a|^{-2} = const + Σ_{n≥4} Σ_k H_k(x) c_{n,k}/(n+1) with c_{n,k} = Σ_a H_k(â)|a|^{-n-2}.
//! Invariant polynomials are written in q_i = x_i² and in the power sums P_s = Σ q_i^s.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rayon::prelude::*;

use super::poly::{Exps, Poly4};
use super::Parity;
use crate::sum::KahanSum;

/// Harmonic degrees up to 2·MAX_WEIGHT are kept.
pub const MAX_WEIGHT: usize = 15;

/// An invariant harmonic of degree 2m, unit mean square on S³.
#[derive(Debug, Clone)]
pub struct Harmonic {
    pub m: usize,
    /// Coefficients on monomials q^β.
    pub q: Poly4,
    /// Coefficients on P₁^i P₂^j P₃^k P₄^l.
    pub p: BTreeMap<Exps, f64>,
}

impl Harmonic {
    pub fn degree(&self) -> usize {
        2 * self.m
    }

    /// The harmonic as a polynomial in x.
    pub fn to_x_poly(&self) -> Poly4 {
        q_to_x(&self.q)
    }
}

pub(crate) fn q_to_x(q: &Poly4) -> Poly4 {
    let mut out = Poly4::new();
    for (e, c) in &q.terms {
        out.add_term([2 * e[0], 2 * e[1], 2 * e[2], 2 * e[3]], *c);
    }
    out
}

/// Mean of x^{2β} over the unit S³: Π Γ(β_i+½)/Γ(½) / (|β|+1)!.
struct Moments {
    half: Vec<f64>,
    inv_fact: Vec<f64>,
}

impl Moments {
    fn new(max: usize) -> Self {
        let mut half = vec![1.0; max + 1];
        for b in 1..=max {
            half[b] = half[b - 1] * (b as f64 - 0.5);
        }
        let mut inv_fact = vec![1.0; 4 * max + 2];
        for n in 1..inv_fact.len() {
            inv_fact[n] = inv_fact[n - 1] / n as f64;
        }
        Moments { half, inv_fact }
    }

    fn mean(&self, b: [usize; 4]) -> f64 {
        let total = b[0] + b[1] + b[2] + b[3];
        self.half[b[0]] * self.half[b[1]] * self.half[b[2]] * self.half[b[3]] * self.inv_fact[total + 1]
    }

    fn inner(&self, a: &Poly4, b: &Poly4) -> f64 {
        let mut k = KahanSum::new();
        for (ea, ca) in &a.terms {
            for (eb, cb) in &b.terms {
                let e = [
                    (ea[0] + eb[0]) as usize,
                    (ea[1] + eb[1]) as usize,
                    (ea[2] + eb[2]) as usize,
                    (ea[3] + eb[3]) as usize,
                ];
                k.add(ca * cb * self.mean(e));
            }
        }
        k.value()
    }
}

fn power_sum(s: u8) -> Poly4 {
    let mut p = Poly4::new();
    for i in 0..4 {
        let mut e = [0; 4];
        e[i] = s;
        p.add_term(e, 1.0);
    }
    p
}

struct ProductCache {
    sums: [Poly4; 4],
    memo: BTreeMap<Exps, Poly4>,
}

impl ProductCache {
    fn get(&mut self, t: Exps) -> Poly4 {
        if let Some(p) = self.memo.get(&t) {
            return p.clone();
        }
        let out = match (0..4).find(|&i| t[i] > 0) {
            None => Poly4::monomial([0; 4], 1.0),
            Some(i) => {
                let mut r = t;
                r[i] -= 1;
                self.get(r).mul(&self.sums[i])
            }
        };
        self.memo.insert(t, out.clone());
        out
    }
}

/// Exponent tuples (i, j, k, l) with i + 2j + 3k + 4l = w.
fn tuples_of_weight(w: usize, allow_p1: bool) -> Vec<Exps> {
    let mut out = Vec::new();
    for l in 0..=w / 4 {
        for k in 0..=(w - 4 * l) / 3 {
            for j in 0..=(w - 4 * l - 3 * k) / 2 {
                let i = w - 4 * l - 3 * k - 2 * j;
                if i > 0 && !allow_p1 {
                    continue;
                }
                out.push([i as u8, j as u8, k as u8, l as u8]);
            }
        }
    }
    out
}

/// Orthonormal invariant harmonics of degrees 4..=2·max_m, built by Gram-Schmidt against P₁-multiples of lower ones.
pub fn build_invariant_harmonics(max_m: usize) -> Vec<Harmonic> {
    let moments = Moments::new(2 * max_m + 1);
    let mut cache = ProductCache {
        sums: [power_sum(1), power_sum(2), power_sum(3), power_sum(4)],
        memo: BTreeMap::new(),
    };
    let p1 = cache.sums[0].clone();
    // basis[h] holds (harmonic, its P₁^k multiples)
    let mut basis: Vec<(Harmonic, Vec<Poly4>)> = vec![(
        Harmonic {
            m: 0,
            q: Poly4::monomial([0; 4], 1.0),
            p: BTreeMap::from([([0; 4], 1.0)]),
        },
        vec![Poly4::monomial([0; 4], 1.0)],
    )];
    for m in 2..=max_m {
        for t in tuples_of_weight(m, false) {
            let mut q = cache.get(t);
            let mut p = BTreeMap::from([(t, 1.0)]);
            let start = moments.inner(&q, &q).sqrt();
            for _pass in 0..2 {
                for (h, multiples) in basis.iter_mut() {
                    let c = moments.inner(&q, &h.q);
                    let k = m - h.m;
                    while multiples.len() <= k {
                        let next = multiples.last().unwrap().mul(&p1);
                        multiples.push(next);
                    }
                    q.add_scaled(&multiples[k], -c);
                    for (e, v) in &h.p {
                        let mut f = *e;
                        f[0] += k as u8;
                        *p.entry(f).or_insert(0.0) -= c * v;
                    }
                }
            }
            let norm = moments.inner(&q, &q).sqrt();
            if norm < 1e-9 * start {
                continue;
            }
            let q = q.scale(1.0 / norm);
            let p = p.into_iter().map(|(e, v)| (e, v / norm)).collect();
            basis.push((Harmonic { m, q, p }, vec![]));
            let last = basis.last_mut().unwrap();
            last.1.push(last.0.q.clone());
        }
    }
    basis.into_iter().skip(1).map(|(h, _)| h).collect()
}

/// The cached harmonic basis up to degree 2·MAX_WEIGHT.
pub fn invariant_harmonics() -> &'static [Harmonic] {
    static BASIS: OnceLock<Vec<Harmonic>> = OnceLock::new();
    BASIS.get_or_init(|| build_invariant_harmonics(MAX_WEIGHT))
}

/// Evaluates every harmonic at a unit direction via its power-sum form.
struct DirectionEvaluator {
    tuples: Vec<Exps>,
    index: Vec<Vec<(usize, f64)>>,
}

impl DirectionEvaluator {
    fn new(basis: &[Harmonic]) -> Self {
        let mut tuples: Vec<Exps> = Vec::new();
        let mut pos: BTreeMap<Exps, usize> = BTreeMap::new();
        let mut index = Vec::with_capacity(basis.len());
        for h in basis {
            let mut row = Vec::with_capacity(h.p.len());
            for (e, c) in &h.p {
                // P₁ = 1 on the sphere
                let key = [0, e[1], e[2], e[3]];
                let id = *pos.entry(key).or_insert_with(|| {
                    tuples.push(key);
                    tuples.len() - 1
                });
                row.push((id, *c));
            }
            index.push(row);
        }
        DirectionEvaluator { tuples, index }
    }

    fn eval(&self, a: &[i64; 4], out: &mut [f64]) {
        let r2 = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2] + a[3] * a[3]) as f64;
        let q: Vec<f64> = a.iter().map(|&v| (v * v) as f64 / r2).collect();
        let ps: Vec<f64> = (2..=4).map(|s| q.iter().map(|v| v.powi(s)).sum()).collect();
        let mut pw = [[1.0f64; MAX_WEIGHT + 1]; 3];
        for (s, row) in pw.iter_mut().enumerate() {
            for e in 1..=MAX_WEIGHT {
                row[e] = row[e - 1] * ps[s];
            }
        }
        let vals: Vec<f64> = self
            .tuples
            .iter()
            .map(|t| pw[0][t[1] as usize] * pw[1][t[2] as usize] * pw[2][t[3] as usize])
            .collect();
        for (o, row) in out.iter_mut().zip(&self.index) {
            *o = row.iter().map(|(id, c)| c * vals[*id]).sum();
        }
    }
}

fn multiplicity(a: &[i64; 4]) -> f64 {
    // a sorted ascending, non-negative
    let mut perms = 24.0;
    let mut i = 0;
    while i < 4 {
        let mut j = i;
        while j + 1 < 4 && a[j + 1] == a[i] {
            j += 1;
        }
        let run = (j - i + 1) as f64;
        perms /= match run as usize {
            1 => 1.0,
            2 => 2.0,
            3 => 6.0,
            _ => 24.0,
        };
        i = j + 1;
    }
    let nonzero = a.iter().filter(|&&v| v != 0).count();
    perms * (1u32 << nonzero) as f64
}

/// Per-shell sums c_{n,k} over each parity class, for shells 1..=n_max.
#[derive(Debug, Clone)]
pub struct FarFieldTable {
    pub n_max: usize,
    /// shells[parity][s][k], parity 0 even, 1 odd.
    shells: [Vec<Vec<f64>>; 2],
}

impl FarFieldTable {
    pub fn new(n_max: usize) -> Self {
        let basis = invariant_harmonics();
        let ev = DirectionEvaluator::new(basis);
        let nb = basis.len();
        let per_shell: Vec<[Vec<f64>; 2]> = (0..=n_max as i64)
            .into_par_iter()
            .map(|s| {
                let mut acc = [vec![KahanSum::new(); nb], vec![KahanSum::new(); nb]];
                if s > 0 {
                    let mut hv = vec![0.0; nb];
                    for a0 in 0..=s {
                        for a1 in a0..=s {
                            for a2 in a1..=s {
                                let a = [a0, a1, a2, s];
                                let parity = ((a0 + a1 + a2 + s) % 2) as usize;
                                let r2 = (a0 * a0 + a1 * a1 + a2 * a2 + s * s) as f64;
                                let mult = multiplicity(&a);
                                ev.eval(&a, &mut hv);
                                for (k, h) in basis.iter().enumerate() {
                                    let w = mult * r2.powi(-(h.m as i32) - 1);
                                    acc[parity][k].add(w * hv[k]);
                                }
                            }
                        }
                    }
                }
                [acc[0].iter().map(|k| k.value()).collect(), acc[1].iter().map(|k| k.value()).collect()]
            })
            .collect();
        let mut shells = [Vec::with_capacity(n_max + 1), Vec::with_capacity(n_max + 1)];
        for [e, o] in per_shell {
            shells[0].push(e);
            shells[1].push(o);
        }
        FarFieldTable { n_max, shells }
    }

    /// c_{n,k} summed over shells k_inner < s ≤ n.
    pub fn coefficients(&self, parity: Parity, k_inner: usize, n: usize) -> Vec<f64> {
        let p = match parity {
            Parity::Even => 0,
            Parity::Odd => 1,
        };
        let nb = self.shells[p][0].len();
        (0..nb)
            .map(|k| {
                let mut acc = KahanSum::new();
                for s in (k_inner + 1)..=n.min(self.n_max) {
                    acc.add(self.shells[p][s][k]);
                }
                acc.value()
            })
            .collect()
    }

    /// Far-field Σ_a |x − a|^{-2} over one parity (constant term dropped), as a polynomial in x.
    pub fn potential(&self, parity: Parity, k_inner: usize, n: usize) -> Poly4 {
        let c = self.coefficients(parity, k_inner, n);
        let mut q = Poly4::new();
        for (h, ck) in invariant_harmonics().iter().zip(&c) {
            q.add_scaled(&h.q, ck / (h.degree() + 1) as f64);
        }
        q_to_x(&q)
    }

    /// Far-field coefficient polynomials [U₁ even, U₂, U₃, U₁ odd, V₂, V₃].
    pub fn u_polys(&self, k_inner: usize, n: usize) -> [Poly4; 6] {
        let pe = self.potential(Parity::Even, k_inner, n);
        let po = self.potential(Parity::Odd, k_inner, n);
        let op = |p: &Poly4, terms: &[(usize, usize, f64)]| {
            let mut out = Poly4::new();
            for &(i, j, s) in terms {
                out.add_scaled(&p.second(i, j), s / 8.0);
            }
            out
        };
        let da = [(0, 0, 1.0), (1, 1, 1.0), (2, 2, -1.0), (3, 3, -1.0)];
        [
            op(&pe, &da),
            op(&pe, &[(0, 2, 1.0), (1, 3, 1.0)]),
            op(&pe, &[(0, 3, 1.0), (1, 2, -1.0)]),
            op(&po, &da),
            op(&po, &[(0, 2, 1.0), (1, 3, -1.0)]),
            op(&po, &[(0, 3, 1.0), (1, 2, 1.0)]),
        ]
    }
}
