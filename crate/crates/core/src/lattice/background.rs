//! Accelerated evaluation of S^(N): near sites summed directly, the rest through the far-field expansion.

use super::direct::{parity_sum, SumMode};
use super::farfield::{FarFieldTable, MAX_WEIGHT};
use super::poly::CompiledPolys;
use super::{check_off_lattice, Parity, Which};
use crate::eh::assemble_t;
use crate::error::{invalid, Result};
use crate::field::{Sym2Field, Validity};
use crate::jet::{Jet2, Point4};
use crate::tensor::Sym2Jet;

/// Summed coefficient jets: even = (U₁, U₂, U₃) of Σ τ_a*T, odd = (U₁, V₂, V₃) of Σ τ_a*T̂.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteSums {
    pub even: [Jet2; 3],
    pub odd: [Jet2; 3],
}

impl SiteSums {
    pub fn tensor(&self, which: Which) -> Sym2Jet {
        let z = Jet2::ZERO;
        let [e1, e2, e3] = self.even;
        let [o1, o2, o3] = self.odd;
        match which {
            Which::EvenT => assemble_t(e1, e2, e3, z, z),
            Which::OddTHat => assemble_t(o1, z, z, o2, o3),
            Which::Combined => assemble_t(e1 + o1, e2, e3, o2, o3),
        }
    }
}

/// (inner cube K, largest |x| served).
const TIERS: [(usize, f64); 4] = [(1, 0.36), (2, 0.55), (3, 0.75), (4, 1.0 + 1e-9)];

/// Truncation target for the far-field series (absolute; near sites dominate the sums).
const SERIES_TOL: f64 = 1e-15;

#[derive(Debug, Clone)]
struct Tier {
    k: usize,
    r_max: f64,
    far: CompiledPolys<6>,
}

/// S^(N) on the fundamental cube |x_i| ≤ ½ with exact cube-cutoff semantics.
///
/// Points outside the cube fall back to direct summation.
#[derive(Debug, Clone)]
pub struct Background {
    n: usize,
    tiers: Vec<Tier>,
}

impl Background {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("N", "background cutoff must be at least 2"));
        }
        Self::from_table(&FarFieldTable::new(n), n)
    }

    /// Reuses per-shell sums, e.g. for N and 2N from one table.
    pub fn from_table(table: &FarFieldTable, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("N", "background cutoff must be at least 2"));
        }
        if n > table.n_max {
            return Err(invalid("N", format!("table only holds shells up to {}", table.n_max)));
        }
        let tiers = TIERS
            .iter()
            .filter(|(k, _)| *k < n)
            .map(|&(k, r_max)| Tier {
                k,
                r_max,
                far: CompiledPolys::new(&table.u_polys(k, n)),
            })
            .collect();
        Ok(Background { n, tiers })
    }

    pub fn cutoff(&self) -> usize {
        self.n
    }

    fn degree_cap(r: f64, k: usize) -> usize {
        let rho = r / (k as f64 + 1.0);
        let mut n = 4;
        while n < 2 * MAX_WEIGHT {
            if 20.0 * (n as f64).powi(3) * rho.powi(n as i32) <= SERIES_TOL {
                break;
            }
            n += 2;
        }
        n - 2
    }

    pub fn site_sums(&self, x: &Point4) -> Result<SiteSums> {
        check_off_lattice(x, 1e-12)?;
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let in_cube = x.iter().all(|v| v.abs() <= 0.5 + 1e-12);
        let tier = self.tiers.iter().find(|t| r <= t.r_max).filter(|_| in_cube);
        let Some(tier) = tier else {
            return Ok(SiteSums {
                even: parity_sum(x, self.n, Parity::Even, SumMode::Plain, None),
                odd: parity_sum(x, self.n, Parity::Odd, SumMode::Plain, None),
            });
        };
        let near_e = parity_sum(x, tier.k, Parity::Even, SumMode::Plain, None);
        let near_o = parity_sum(x, tier.k, Parity::Odd, SumMode::Plain, None);
        let far = tier.far.eval_jets(x, Self::degree_cap(r, tier.k));
        Ok(SiteSums {
            even: [near_e[0] + far[0], near_e[1] + far[1], near_e[2] + far[2]],
            odd: [near_o[0] + far[3], near_o[1] + far[4], near_o[2] + far[5]],
        })
    }

    pub fn eval(&self, x: &Point4, which: Which) -> Result<Sym2Jet> {
        Ok(self.site_sums(x)?.tensor(which))
    }

    pub fn field(&self, which: Which) -> BackgroundField<'_> {
        BackgroundField { background: self, which }
    }
}

/// A background sum viewed as a tensor field.
#[derive(Debug, Clone, Copy)]
pub struct BackgroundField<'a> {
    pub background: &'a Background,
    pub which: Which,
}

impl Sym2Field for BackgroundField<'_> {
    fn eval(&self, x: &Point4) -> Result<Sym2Jet> {
        self.background.eval(x, self.which)
    }

    fn validity(&self) -> Validity {
        Validity::Cube
    }
}
