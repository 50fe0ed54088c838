//! Heat kernels Γ± on the torus ℝ⁴/ℤ⁴, by Gaussian image sums or their Poisson duals.
//!
//! Both kernels factor into four 1D theta functions, so the cube truncation |a|∞ ≤ N of the image sum
//! is evaluated as a product of 1D truncations; the two agree term for term.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::glue::linear_fit;
use crate::jet::Point4;
use crate::sum::KahanSum;

/// Direct sums below this time, dual sums from it on.
pub const T_STAR: f64 = 0.25;
/// Target size of the neglected tail in either series.
pub const TAIL_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Dual,
    Auto,
}

impl Method {
    pub fn resolve(self, t: f64) -> Method {
        match self {
            Method::Auto if t < T_STAR => Method::Direct,
            Method::Auto => Method::Dual,
            m => m,
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "direct" => Ok(Method::Direct),
            "dual" => Ok(Method::Dual),
            "auto" => Ok(Method::Auto),
            _ => Err(invalid("method", format!("expected direct, dual or auto, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelQuery {
    pub x: Point4,
    pub x0: Point4,
    pub t: f64,
    pub method: Method,
}

impl KernelQuery {
    pub fn new(x: Point4, x0: Point4, t: f64) -> Self {
        KernelQuery {
            x,
            x0,
            t,
            method: Method::Auto,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

/// N(t) = ⌈√(4t·ln(1/tol))⌉ + 2.
pub fn direct_cutoff(t: f64) -> usize {
    (4.0 * t * (1.0 / TAIL_TOL).ln()).sqrt().ceil() as usize + 2
}

/// K(t) = ⌈√(ln(1/tol)/(4π²t))⌉ + 2, the dual counterpart.
pub fn dual_cutoff(t: f64) -> usize {
    ((1.0 / TAIL_TOL).ln() / (4.0 * PI * PI * t)).sqrt().ceil() as usize + 2
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid("t", format!("must be positive and finite, got {t}")))
    }
}

/// (4πt)^{-1/2} Σ_n s^n e^{−(y−n)²/4t}, s = ±1, over |n − m| ≤ N with m the integer nearest y.
fn theta_direct(y: f64, t: f64, kernel: Kernel) -> f64 {
    let m = y.round();
    let y0 = y - m;
    let n_max = direct_cutoff(t) as i64;
    let mut acc = KahanSum::new();
    // outermost terms first
    for k in (0..=n_max).rev() {
        for n in if k == 0 { vec![0] } else { vec![-k, k] } {
            let sign = if kernel == Kernel::Minus && n.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
            acc.add(sign * (-(y0 - n as f64).powi(2) / (4.0 * t)).exp());
        }
    }
    let flip = if kernel == Kernel::Minus && (m as i64).rem_euclid(2) == 1 { -1.0 } else { 1.0 };
    flip * acc.value() / (4.0 * PI * t).sqrt()
}

/// Dual series without its constant term: Σ_{k≠0} e^{−4π²tk²}cos(2πky) over ℤ (Plus) or
/// the full sum over ℤ + ½ (Minus).
fn theta_dual_excess(y: f64, t: f64, kernel: Kernel) -> f64 {
    let k_max = dual_cutoff(t);
    let shift = match kernel {
        Kernel::Plus => 0.0,
        Kernel::Minus => 0.5,
    };
    let start = if kernel == Kernel::Plus { 1 } else { 0 };
    let mut acc = KahanSum::new();
    for m in (start..=k_max).rev() {
        let k = m as f64 + shift;
        acc.add(2.0 * (-4.0 * PI * PI * t * k * k).exp() * (2.0 * PI * k * y).cos());
    }
    acc.value()
}

fn theta_dual(y: f64, t: f64, kernel: Kernel) -> f64 {
    let e = theta_dual_excess(y, t, kernel);
    match kernel {
        Kernel::Plus => 1.0 + e,
        Kernel::Minus => e,
    }
}

fn kernel_value(q: &KernelQuery, kernel: Kernel) -> Result<f64> {
    check_time(q.t)?;
    let theta = match q.method.resolve(q.t) {
        Method::Direct => theta_direct,
        _ => theta_dual,
    };
    Ok((0..4).map(|i| theta(q.x[i] - q.x0[i], q.t, kernel)).product())
}

/// Γ₊ = (4πt)^{-2} Σ_{a∈ℤ⁴} e^{−|x−x₀−a|²/4t}.
pub fn gamma_plus(q: &KernelQuery) -> Result<f64> {
    kernel_value(q, Kernel::Plus)
}

/// Γ₋ = (4πt)^{-2} Σ_{a∈ℤ⁴} (−1)^{a₁+a₂+a₃+a₄} e^{−|x−x₀−a|²/4t}.
pub fn gamma_minus(q: &KernelQuery) -> Result<f64> {
    kernel_value(q, Kernel::Minus)
}

/// Γ₊ − 1 from the dual series without cancellation, valid for any t > 0.
pub fn gamma_plus_minus_one(x: &Point4, x0: &Point4, t: f64) -> Result<f64> {
    check_time(t)?;
    let log: f64 = (0..4).map(|i| theta_dual_excess(x[i] - x0[i], t, Kernel::Plus).ln_1p()).sum();
    Ok(log.exp_m1())
}

/// Which quantity a decay scan tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayKernel {
    /// sup |Γ₊ − 1|
    PlusMinusOne,
    /// sup |Γ₋|
    Minus,
}

impl DecayKernel {
    pub fn name(&self) -> &'static str {
        match self {
            DecayKernel::PlusMinusOne => "plus-minus-one",
            DecayKernel::Minus => "minus",
        }
    }

    pub fn parse(s: &str) -> Result<DecayKernel> {
        match s {
            "plus-minus-one" | "plus" => Ok(DecayKernel::PlusMinusOne),
            "minus" => Ok(DecayKernel::Minus),
            _ => Err(invalid("kernel", format!("expected plus-minus-one or minus, got `{s}`"))),
        }
    }
}

/// sup over the grid {−½ + k/(n−1)}⁴ of the tracked quantity, pole at the origin.
pub fn sup_on_grid(kernel: DecayKernel, t: f64, points_per_axis: usize) -> Result<f64> {
    check_time(t)?;
    if points_per_axis < 2 {
        return Err(invalid("points_per_axis", "need at least 2"));
    }
    let h = 1.0 / (points_per_axis - 1) as f64;
    // 1D factors at the grid abscissae; the 4D grid is their tensor product
    let factors: Vec<f64> = (0..points_per_axis)
        .map(|k| {
            let y = -0.5 + k as f64 * h;
            match kernel {
                DecayKernel::PlusMinusOne => theta_dual_excess(y, t, Kernel::Plus).ln_1p(),
                DecayKernel::Minus => theta_dual(y, t, Kernel::Minus),
            }
        })
        .collect();
    let sup = (0..points_per_axis)
        .into_par_iter()
        .map(|a| {
            let mut best: f64 = 0.0;
            for b in 0..points_per_axis {
                for c in 0..points_per_axis {
                    for d in 0..points_per_axis {
                        let v = match kernel {
                            DecayKernel::PlusMinusOne => {
                                (factors[a] + factors[b] + factors[c] + factors[d]).exp_m1()
                            }
                            DecayKernel::Minus => factors[a] * factors[b] * factors[c] * factors[d],
                        };
                        best = best.max(v.abs());
                    }
                }
            }
            best
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max);
    Ok(sup)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayScan {
    pub kernel: DecayKernel,
    pub times: Vec<f64>,
    pub sups: Vec<f64>,
    /// Slope of ln sup against t.
    pub rate: f64,
    /// Times dropped because the sup fell below 1e−300.
    pub truncated: usize,
}

/// Fits ln sup_x against t over a grid inside [0.2, 2].
pub fn decay_rate_scan(kernel: DecayKernel, times: &[f64], points_per_axis: usize) -> Result<DecayScan> {
    if let Some(t) = times.iter().find(|t| !(**t >= 0.2 && **t <= 2.0)) {
        return Err(invalid("t", format!("decay scan times must lie in [0.2, 2], got {t}")));
    }
    let mut kept_t = Vec::new();
    let mut sups = Vec::new();
    let mut truncated = 0;
    for &t in times {
        let s = sup_on_grid(kernel, t, points_per_axis)?;
        if s < 1e-300 {
            truncated += 1;
            continue;
        }
        kept_t.push(t);
        sups.push(s);
    }
    if kept_t.len() < 2 {
        return Err(Error::Fit(format!("only {} usable times in the decay scan", kept_t.len())));
    }
    let logs: Vec<f64> = sups.iter().map(|s| s.ln()).collect();
    let (rate, _) = linear_fit(&kept_t, &logs)?;
    Ok(DecayScan {
        kernel,
        times: kept_t,
        sups,
        rate,
        truncated,
    })
}
