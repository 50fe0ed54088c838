//! Direct cube sums of the translated coefficient jets.

use rayon::prelude::*;

use super::background::SiteSums;
use super::{check_off_lattice, Parity, Which};
use crate::error::Result;
use crate::jet::{Jet2, Point4};
use crate::sum::KahanSum;
use crate::tensor::Sym2Jet;

/// Plain lexicographic order, or σ-orbits grouped as in the cancellation argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumMode {
    #[default]
    Plain,
    Paired,
}

fn pack(j: &Jet2) -> [f64; 15] {
    let mut out = [0.0; 15];
    out[0] = j.value;
    out[1..5].copy_from_slice(&j.grad);
    out[5..].copy_from_slice(&j.hess);
    out
}

fn unpack(v: &[f64]) -> Jet2 {
    Jet2 {
        value: v[0],
        grad: [v[1], v[2], v[3], v[4]],
        hess: [v[5], v[6], v[7], v[8], v[9], v[10], v[11], v[12], v[13], v[14]],
    }
}

/// Jets of the three T coefficients (even) or T̂ coefficients (odd) at y = x − a.
pub(crate) fn site_jets(y: &Point4, parity: Parity) -> [Jet2; 3] {
    let [y1, y2, y3, y4] = *y;
    let r2 = y1 * y1 + y2 * y2 + y3 * y3 + y4 * y4;
    let inv = 1.0 / r2;
    let inv4 = inv * inv * inv * inv;
    let mut w = Jet2::constant(inv * inv * inv);
    for i in 0..4 {
        w.grad[i] = -6.0 * y[i] * inv4;
    }
    let inv5 = inv4 * inv;
    for (s, &(i, j)) in crate::jet::SYM_PAIRS.iter().enumerate() {
        let d = if i == j { -6.0 * inv4 } else { 0.0 };
        w.hess[s] = d + 48.0 * y[i] * y[j] * inv5;
    }
    let quad = |value: f64, grad: [f64; 4], h: [(usize, usize, f64); 4]| {
        let mut q = Jet2::constant(value);
        q.grad = grad;
        for (i, j, v) in h {
            q.hess[crate::jet::sym_index(i, j)] += v;
        }
        q
    };
    let q1 = quad(
        y1 * y1 + y2 * y2 - y3 * y3 - y4 * y4,
        [2.0 * y1, 2.0 * y2, -2.0 * y3, -2.0 * y4],
        [(0, 0, 2.0), (1, 1, 2.0), (2, 2, -2.0), (3, 3, -2.0)],
    );
    let (q2, q3) = match parity {
        Parity::Even => (
            quad(y1 * y3 + y2 * y4, [y3, y4, y1, y2], [(0, 2, 1.0), (1, 3, 1.0), (0, 0, 0.0), (0, 0, 0.0)]),
            quad(y1 * y4 - y2 * y3, [y4, -y3, -y2, y1], [(0, 3, 1.0), (1, 2, -1.0), (0, 0, 0.0), (0, 0, 0.0)]),
        ),
        Parity::Odd => (
            quad(y1 * y3 - y2 * y4, [y3, -y4, y1, -y2], [(0, 2, 1.0), (1, 3, -1.0), (0, 0, 0.0), (0, 0, 0.0)]),
            quad(y1 * y4 + y2 * y3, [y4, y3, y2, y1], [(0, 3, 1.0), (1, 2, 1.0), (0, 0, 0.0), (0, 0, 0.0)]),
        ),
    };
    [q1 * w, q2 * w, q3 * w]
}

fn sigma(a: [i64; 4], parity: Parity) -> [i64; 4] {
    match parity {
        Parity::Even => [a[2], -a[3], -a[0], a[1]],
        Parity::Odd => [a[2], a[3], -a[0], -a[1]],
    }
}

fn neg(a: [i64; 4]) -> [i64; 4] {
    [-a[0], -a[1], -a[2], -a[3]]
}

fn slice_sum(x: &Point4, a0: i64, ni: i64, parity: Parity, mode: SumMode, skip: i64) -> [f64; 45] {
    let mut acc = [KahanSum::new(); 45];
    let add = |a: [i64; 4], row: &mut [f64; 45]| {
        let y = [x[0] - a[0] as f64, x[1] - a[1] as f64, x[2] - a[2] as f64, x[3] - a[3] as f64];
        let j = site_jets(&y, parity);
        for (m, jm) in j.iter().enumerate() {
            let p = pack(jm);
            for k in 0..15 {
                row[15 * m + k] += p[k];
            }
        }
    };
    for a1 in -ni..=ni {
        for a2 in -ni..=ni {
            let mut row_acc = [0.0f64; 45];
            for a3 in -ni..=ni {
                let a = [a0, a1, a2, a3];
                if Parity::of(&a) != parity {
                    continue;
                }
                if a.iter().all(|v| v.abs() <= skip) {
                    continue;
                }
                match mode {
                    SumMode::Plain => add(a, &mut row_acc),
                    SumMode::Paired => {
                        let s = sigma(a, parity);
                        let orbit = [a, s, neg(a), neg(s)];
                        if orbit.iter().any(|o| *o < a) {
                            continue;
                        }
                        if s == a {
                            add(a, &mut row_acc);
                            continue;
                        }
                        let mut pair = [0.0f64; 45];
                        add(a, &mut pair);
                        add(s, &mut pair);
                        let mut pair2 = [0.0f64; 45];
                        add(neg(a), &mut pair2);
                        add(neg(s), &mut pair2);
                        for k in 0..45 {
                            row_acc[k] += pair[k] + pair2[k];
                        }
                    }
                }
            }
            for k in 0..45 {
                acc[k].add(row_acc[k]);
            }
        }
    }
    let mut row = [0.0; 45];
    for k in 0..45 {
        row[k] = acc[k].value();
    }
    row
}

/// Sum over one parity class of the cube max|a_i| ≤ n, optionally skipping |a|_∞ ≤ skip.
pub(crate) fn parity_sum(x: &Point4, n: usize, parity: Parity, mode: SumMode, skip: Option<usize>) -> [Jet2; 3] {
    let ni = n as i64;
    let skip = skip.map(|s| s as i64).unwrap_or(-1);
    let slice = |a0: i64| slice_sum(x, a0, ni, parity, mode, skip);
    // small cubes are cheaper serially; the per-slice arithmetic is identical either way
    let slices: Vec<[f64; 45]> = if n <= 6 {
        (-ni..=ni).map(slice).collect()
    } else {
        (-ni..=ni).into_par_iter().map(slice).collect()
    };
    let mut total = [KahanSum::new(); 45];
    for s in &slices {
        for k in 0..45 {
            total[k].add(s[k]);
        }
    }
    let v: Vec<f64> = total.iter().map(|k| k.value()).collect();
    [unpack(&v[0..15]), unpack(&v[15..30]), unpack(&v[30..45])]
}

/// Direct coefficient sums over the full cube for the requested background.
pub fn site_sums_direct(x: &Point4, which: Which, n: usize, mode: SumMode) -> Result<SiteSums> {
    check_off_lattice(x, 1e-12)?;
    let even = if which != Which::OddTHat {
        parity_sum(x, n, Parity::Even, mode, None)
    } else {
        [Jet2::ZERO; 3]
    };
    let odd = if which != Which::EvenT {
        parity_sum(x, n, Parity::Odd, mode, None)
    } else {
        [Jet2::ZERO; 3]
    };
    Ok(SiteSums { even, odd })
}

/// S^(N) by direct summation.
pub fn background_direct(x: &Point4, which: Which, n: usize, mode: SumMode) -> Result<Sym2Jet> {
    Ok(site_sums_direct(x, which, n, mode)?.tensor(which))
}
