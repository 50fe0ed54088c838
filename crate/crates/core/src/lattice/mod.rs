//! Parity lattices, cube partial sums of translated T and T̂, and the constant ω.

mod background;
mod cache;
mod direct;
mod farfield;
pub mod poly;

pub use background::{Background, BackgroundField, SiteSums};
pub use cache::{grid_hash, BackgroundCache, CACHE_MAGIC, CACHE_VERSION};
pub use direct::{background_direct, site_sums_direct, SumMode};
pub use farfield::{invariant_harmonics, FarFieldTable, Harmonic};

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::sum::KahanSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(a: &[i64; 4]) -> Parity {
        if (a[0] + a[1] + a[2] + a[3]).rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

/// Cube cutoff max|a_i| ≤ n over one parity class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeCutoff {
    pub n: usize,
    pub parity: Parity,
}

impl LatticeCutoff {
    pub fn new(n: usize, parity: Parity) -> Result<Self> {
        if n == 0 {
            return Err(invalid("N", "cube cutoff must be positive"));
        }
        Ok(LatticeCutoff { n, parity })
    }

    /// Sites in lexicographic order.
    pub fn sites(&self) -> Vec<[i64; 4]> {
        let n = self.n as i64;
        let mut out = Vec::new();
        for a0 in -n..=n {
            for a1 in -n..=n {
                for a2 in -n..=n {
                    for a3 in -n..=n {
                        let a = [a0, a1, a2, a3];
                        if Parity::of(&a) == self.parity {
                            out.push(a);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Which background: Σ_even τ_a*T, Σ_odd τ_a*T̂, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Which {
    EvenT,
    OddTHat,
    Combined,
}

impl Which {
    pub fn name(&self) -> &'static str {
        match self {
            Which::EvenT => "even",
            Which::OddTHat => "odd",
            Which::Combined => "combined",
        }
    }

    pub fn parse(s: &str) -> Result<Which> {
        match s {
            "even" | "even-T" => Ok(Which::EvenT),
            "odd" | "odd-That" => Ok(Which::OddTHat),
            "combined" => Ok(Which::Combined),
            _ => Err(invalid("which", format!("unknown background '{s}'"))),
        }
    }
}

/// |a|^{-10}(|a|⁴ − 6(a₁²+a₂²)(a₃²+a₄²)).
pub fn omega_term(a: &[i64; 4]) -> f64 {
    let s12 = (a[0] * a[0] + a[1] * a[1]) as f64;
    let s34 = (a[2] * a[2] + a[3] * a[3]) as f64;
    let r2 = s12 + s34;
    if r2 == 0.0 {
        return 0.0;
    }
    (r2 * r2 - 6.0 * s12 * s34) / r2.powi(5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellRow {
    pub n: usize,
    pub shell: f64,
    pub partial: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaReport {
    pub n: usize,
    pub partial: f64,
    pub shells: Vec<ShellRow>,
    pub extrapolated: f64,
    pub exponent: f64,
    pub uncertainty: f64,
}

/// Per-shell sums of the ω terms over odd sites, shells 0..=n by max-norm.
pub fn omega_shells(n: usize) -> Vec<f64> {
    let ni = n as i64;
    // non-negative octant, weight 2^(#nonzero)
    let slices: Vec<Vec<KahanSum>> = (0..=ni)
        .into_par_iter()
        .map(|a0| {
            let mut acc = vec![KahanSum::new(); n + 1];
            for a1 in 0..=ni {
                for a2 in 0..=ni {
                    for a3 in 0..=ni {
                        if (a0 + a1 + a2 + a3) % 2 == 0 {
                            continue;
                        }
                        let a = [a0, a1, a2, a3];
                        let w = a.iter().filter(|&&v| v != 0).count();
                        let m = a0.max(a1).max(a2).max(a3) as usize;
                        acc[m].add(omega_term(&a) * (1u32 << w) as f64);
                    }
                }
            }
            acc
        })
        .collect();
    (0..=n)
        .map(|m| {
            let mut k = KahanSum::new();
            for s in &slices {
                k.add(s[m].value());
            }
            k.value()
        })
        .collect()
}

fn extrapolate(p4: f64, p2: f64, p1: f64) -> (f64, f64) {
    let d1 = p2 - p4;
    let d2 = p1 - p2;
    let ratio = d1 / d2;
    if !(ratio.is_finite() && ratio > 1.0) {
        // no geometric decay visible; fall back to the cube-tail exponent 2
        return (p1 + d2 / 3.0, 2.0);
    }
    let p = ratio.log2();
    (p1 + d2 / (ratio - 1.0), p)
}

/// Odd-site cube partial sum of the ω terms, with tail extrapolation from cutoffs n/4, n/2, n.
pub fn omega_partial(n: usize) -> Result<OmegaReport> {
    if n == 0 {
        return Err(invalid("N", "must be at least 1"));
    }
    let shells = omega_shells(n);
    let mut k = KahanSum::new();
    let mut rows = Vec::with_capacity(n + 1);
    for (m, s) in shells.iter().enumerate() {
        k.add(*s);
        rows.push(ShellRow {
            n: m,
            shell: *s,
            partial: k.value(),
        });
    }
    let partial = k.value();
    let (extrapolated, exponent, uncertainty) = if n >= 8 {
        let at = |m: usize| rows[m].partial;
        let (e1, p) = extrapolate(at(n / 4), at(n / 2), at(n));
        let (e0, _) = extrapolate(at(n / 8), at(n / 4), at(n / 2));
        let d2 = at(n) - at(n / 2);
        let fixed = at(n) + d2 / 3.0;
        let unc = (e1 - e0).abs().max((e1 - fixed).abs());
        (e1, p, unc)
    } else {
        (partial, f64::NAN, f64::INFINITY)
    };
    Ok(OmegaReport {
        n,
        partial,
        shells: rows,
        extrapolated,
        exponent,
        uncertainty,
    })
}

/// Flux of a single translated instanton through the small sphere: 64π²·omega_term for odd a, 0 for even a.
pub fn flux_term_exact(a: &[i64; 4]) -> Result<f64> {
    if a.iter().all(|&v| v == 0) {
        return Err(Error::Domain("flux term undefined at a = 0".into()));
    }
    Ok(match Parity::of(a) {
        Parity::Even => 0.0,
        Parity::Odd => 64.0 * PI * PI * omega_term(a),
    })
}

/// Domain error at (numerically) lattice points.
pub fn ensure_off_lattice(x: &[f64; 4]) -> Result<()> {
    check_off_lattice(x, 1e-12)
}

pub(crate) fn check_off_lattice(x: &[f64; 4], tol: f64) -> Result<()> {
    let near = x.iter().map(|v| (v - v.round()).abs()).fold(0.0, f64::max);
    if near < tol {
        return Err(Error::Domain(format!("point {x:?} is a lattice point")));
    }
    Ok(())
}
