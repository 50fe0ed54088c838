//! Quadrature rules: Gauss-Legendre, S³ product rules, annulus volume rules and
//! adaptive radial integration with power-law tails.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::jet::Point4;
use crate::sum::{ordered_map, KahanSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Surface,
    Radial,
    AnnulusVolume,
}

/// A value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct QuadratureRule<P> {
    pub kind: RuleKind,
    pub nodes: Vec<P>,
    pub weights: Vec<f64>,
}

impl<P: Sync> QuadratureRule<P> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        KahanSum::sum_iter(self.weights.iter().copied())
    }

    /// Serial compensated sum in node order.
    pub fn integrate<F: Fn(&P) -> f64>(&self, f: F) -> f64 {
        let mut k = KahanSum::new();
        for (p, w) in self.nodes.iter().zip(&self.weights) {
            k.add(w * f(p));
        }
        k.value()
    }

    /// Parallel evaluation, node-ordered compensated reduction.
    pub fn integrate_par<F>(&self, f: F) -> f64
    where
        F: Fn(&P) -> f64 + Sync + Send,
    {
        let vals = ordered_map(&self.nodes, f);
        let mut k = KahanSum::new();
        for (v, w) in vals.iter().zip(&self.weights) {
            k.add(w * v);
        }
        k.value()
    }

    /// Parallel evaluation of a fallible vector-valued integrand.
    pub fn try_integrate_vec_par<const M: usize, F>(&self, f: F) -> Result<[f64; M]>
    where
        F: Fn(&P) -> Result<[f64; M]> + Sync + Send,
    {
        let vals = crate::sum::ordered_try_map(&self.nodes, f)?;
        let mut acc = [KahanSum::new(); M];
        for (v, w) in vals.iter().zip(&self.weights) {
            for m in 0..M {
                acc[m].add(w * v[m]);
            }
        }
        Ok(std::array::from_fn(|m| acc[m].value()))
    }
}

/// Gauss-Legendre nodes and weights on [−1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss rule for the weight √(1−t²) on [−1, 1] (second-kind Chebyshev).
pub fn gauss_chebyshev_u(n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = PI / (n as f64 + 1.0);
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for k in (1..=n).rev() {
        let th = k as f64 * h;
        x.push(th.cos());
        w.push(h * th.sin().powi(2));
    }
    (x, w)
}

/// Product rule on the sphere of radius `rho` in ℝ⁴.
///
/// Hyperspherical angles x = ρ(cosψ, sinψ cosθ, sinψ sinθ cosφ, sinψ sinθ sinφ):
/// Gauss in cosψ for the sin²ψ weight, Gauss-Legendre in cosθ, 2·order uniform
/// points in φ. Exact for polynomials of degree ≤ 2·order − 1.
pub fn s3_quadrature(order: usize, rho: f64) -> Result<QuadratureRule<Point4>> {
    if order < 4 {
        return Err(invalid("order", format!("S3 rule needs order >= 4, got {order}")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid("radius", format!("must be positive, got {rho}")));
    }
    let (tp, wp) = gauss_chebyshev_u(order);
    let (tt, wt) = gauss_legendre(order);
    let nphi = 2 * order;
    let dphi = 2.0 * PI / nphi as f64;
    let r3 = rho * rho * rho;
    let mut nodes = Vec::with_capacity(order * order * nphi);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for (cpsi, wpsi) in tp.iter().zip(&wp) {
        let spsi = (1.0 - cpsi * cpsi).max(0.0).sqrt();
        for (cth, wth) in tt.iter().zip(&wt) {
            let sth = (1.0 - cth * cth).max(0.0).sqrt();
            for k in 0..nphi {
                let (sphi, cphi) = ((k as f64 + 0.5) * dphi).sin_cos();
                nodes.push([
                    rho * cpsi,
                    rho * spsi * cth,
                    rho * spsi * sth * cphi,
                    rho * spsi * sth * sphi,
                ]);
                weights.push(r3 * wpsi * wth * dphi);
            }
        }
    }
    Ok(QuadratureRule {
        kind: RuleKind::Surface,
        nodes,
        weights,
    })
}

/// Integral over the sphere with an error estimate from a lower-order rule.
pub fn s3_integrate_with_estimate<F>(order: usize, rho: f64, f: F) -> Result<Estimate>
where
    F: Fn(&Point4) -> f64 + Sync + Send,
{
    let fine = s3_quadrature(order, rho)?.integrate_par(&f);
    let coarse_order = (3 * order / 4).max(4);
    let coarse = s3_quadrature(coarse_order, rho)?.integrate_par(&f);
    Ok(Estimate {
        value: fine,
        error: (fine - coarse).abs(),
    })
}

/// Composite Gauss-Legendre rule on [a, b] with `panels` equal panels.
pub fn composite_gauss(a: f64, b: f64, panels: usize, points: usize) -> QuadratureRule<f64> {
    let (x, w) = gauss_legendre(points);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * points);
    let mut weights = Vec::with_capacity(panels * points);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    QuadratureRule {
        kind: RuleKind::Radial,
        nodes,
        weights,
    }
}

/// Volume rule on the shell ρ0 ≤ |x| ≤ ρ1: Gauss-Legendre in r (with r³ folded in)
/// times the S³ rule.
pub fn annulus_rule(
    rho0: f64,
    rho1: f64,
    radial_points: usize,
    s3_order: usize,
) -> Result<QuadratureRule<Point4>> {
    if !(rho0 >= 0.0 && rho1 > rho0) {
        return Err(invalid("annulus", format!("need 0 <= {rho0} < {rho1}")));
    }
    shell_rule(&composite_gauss(rho0, rho1, 1, radial_points), s3_order)
}

/// Product of an arbitrary radial rule (r³ folded in here) with the S³ rule.
pub fn shell_rule(radial: &QuadratureRule<f64>, s3_order: usize) -> Result<QuadratureRule<Point4>> {
    if radial.nodes.iter().any(|r| !(*r >= 0.0)) {
        return Err(invalid("radial", "radial nodes must be non-negative"));
    }
    let sphere = s3_quadrature(s3_order, 1.0)?;
    let mut nodes = Vec::with_capacity(radial.len() * sphere.len());
    let mut weights = Vec::with_capacity(nodes.capacity());
    for (r, wr) in radial.nodes.iter().zip(&radial.weights) {
        let wr3 = wr * r * r * r;
        for (xi, ws) in sphere.nodes.iter().zip(&sphere.weights) {
            nodes.push([r * xi[0], r * xi[1], r * xi[2], r * xi[3]]);
            weights.push(wr3 * ws);
        }
    }
    Ok(QuadratureRule {
        kind: RuleKind::AnnulusVolume,
        nodes,
        weights,
    })
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod 7/15 panel: (Kronrod value, |Kronrod − Gauss|).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for j in 0..7 {
        let f1 = f(c - h * GK_X[j]);
        let f2 = f(c + h * GK_X[j]);
        k += GK_WK[j] * (f1 + f2);
        if j % 2 == 1 {
            g += GK_WG[j / 2] * (f1 + f2);
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod integration on a finite interval.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(f, a, b);
    panels.push((a, b, v, e));
    for _ in 0..2000 {
        let total_err: f64 = panels.iter().map(|p| p.3).sum();
        let total: f64 = panels.iter().map(|p| p.2).sum();
        if total_err <= tol.max(1e-15 * total.abs()) {
            break;
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        if !panels[idx].3.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
        let (lo, hi, _, _) = panels[idx];
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        panels[idx] = (lo, mid, v1, e1);
        panels.insert(idx + 1, (mid, hi, v2, e2));
    }
    panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    let value = KahanSum::sum_iter(panels.iter().map(|p| p.2));
    let error = panels.iter().map(|p| p.3).sum::<f64>();
    if !value.is_finite() {
        return Err(Error::Quadrature("non-finite integrand".into()));
    }
    Ok(Estimate { value, error })
}

/// ∫_a^b f(r) r³ dr with f(r) ~ r^{−p} at infinity.
///
/// Finite `b` uses adaptive Gauss-Kronrod panels. For `b = None` the interval
/// is cut at a radius R* chosen by doubling, and ∫_{R*}^∞ f r³ dr is replaced by
/// f(R*)R*⁴/(p−4); the error estimate includes the change of that tail
/// estimate between R*/2 and R*.
pub fn radial_quadrature<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: Option<f64>,
    p: f64,
    tol: f64,
) -> Result<Estimate> {
    if !(a >= 0.0) {
        return Err(invalid("a", format!("lower limit must be >= 0, got {a}")));
    }
    let g = |r: f64| f(r) * r * r * r;
    match b {
        Some(b) => {
            if b < a {
                return Err(invalid("b", format!("upper limit {b} below lower limit {a}")));
            }
            integrate_adaptive(&g, a, b, tol)
        }
        None => {
            if !(p > 4.0) {
                return Err(invalid("p", format!("tail r^(3-{p}) is not integrable")));
            }
            let tail = |r: f64| f(r) * r.powi(4) / (p - 4.0);
            let mut r_star = (2.0 * a).max(1.0);
            let mut body = integrate_adaptive(&g, a, r_star, tol)?;
            let mut prev_tail = tail(r_star);
            for _ in 0..60 {
                let next = 2.0 * r_star;
                let seg = integrate_adaptive(&g, r_star, next, tol)?;
                let t = tail(next);
                body = Estimate {
                    value: body.value + seg.value,
                    error: body.error + seg.error,
                };
                // disagreement between the old tail and (segment + new tail)
                let tail_err = (prev_tail - (seg.value + t)).abs();
                r_star = next;
                prev_tail = t;
                let total = body.value + t;
                if tail_err <= tol.max(1e-15 * total.abs()) && t.abs() <= 1e3 * tol.max(1e-15 * total.abs()) {
                    return Ok(Estimate {
                        value: total,
                        error: body.error + tail_err,
                    });
                }
            }
            Err(Error::Quadrature(format!(
                "tail did not settle by R* = {r_star:.3e}"
            )))
        }
    }
}
