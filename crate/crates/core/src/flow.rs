//! Modulation dynamics of the scale ε(t): closed form, ODE, hypothesis checks on ε, curvature blow-up,
//! a Ricci-decay proxy along the flow, and sampled weighted norms.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::curvature::curvature_from_jet;
use crate::error::{invalid, Error, Result};
use crate::glue::{loglog_fit, GlueParams, GluedMetric};
use crate::jet::Point4;
use crate::lattice::Background;
use crate::quadrature::{integrate_adaptive, s3_quadrature};
use crate::tensor::{inner_product_inv, Sym2};

/// η(t), the correction to the leading-order modulation speed.
pub type Eta = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// δ(t) = (−t)^{-1/400}.
pub fn delta_of_t(t: f64) -> f64 {
    (-t).powf(-1.0 / 400.0)
}

#[derive(Clone)]
pub struct FlowModel {
    pub omega: f64,
    pub lambda: f64,
    /// Hölder exponent in the time-regularity clause.
    pub alpha: f64,
    pub eta: Option<Eta>,
}

impl std::fmt::Debug for FlowModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowModel")
            .field("omega", &self.omega)
            .field("lambda", &self.lambda)
            .field("alpha", &self.alpha)
            .field("eta", &self.eta.as_ref().map(|_| "custom"))
            .finish()
    }
}

impl FlowModel {
    /// η ≡ 0, α = ½. Checks that ε(−Λ) ≤ δ(−Λ)²/10, which then holds for every t ≤ −Λ.
    pub fn new(omega: f64, lambda: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(invalid("omega", format!("must be positive, got {omega}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("Lambda", format!("must be positive, got {lambda}")));
        }
        let m = FlowModel {
            omega,
            lambda,
            alpha: 0.5,
            eta: None,
        };
        let t = -lambda;
        let (e, d) = (m.epsilon(t)?, delta_of_t(t));
        if e > d * d / 10.0 {
            return Err(invalid(
                "Lambda",
                format!("epsilon(-Lambda) = {e:.4e} exceeds delta^2/10 = {:.4e}", d * d / 10.0),
            ));
        }
        Ok(m)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    /// Installs η after checking |η(s)| ≤ (−s)^{-1/1000} at 64 log-spaced times in [−10¹², −Λ].
    pub fn with_eta(mut self, eta: Eta) -> Result<Self> {
        let (lo, hi) = (self.lambda.ln(), 12f64 * 10f64.ln());
        for k in 0..64 {
            let s = -(lo + (hi - lo) * k as f64 / 63.0).exp();
            let v = eta(s);
            if !(v.abs() <= (-s).powf(-1e-3)) {
                return Err(invalid("eta", format!("|eta({s:.3e})| = {v:.3e} exceeds (-s)^(-1/1000)")));
            }
        }
        self.eta = Some(eta);
        Ok(self)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t <= -self.lambda && t.is_finite() {
            Ok(())
        } else {
            Err(invalid("t", format!("need t <= -Lambda = {}, got {t}", -self.lambda)))
        }
    }

    fn eta_at(&self, t: f64) -> f64 {
        self.eta.as_ref().map_or(0.0, |e| e(t))
    }

    /// ∫_t^{−Λ} η(s) ds, integrated in u = ln(−s).
    pub fn eta_integral(&self, t: f64) -> Result<f64> {
        let Some(eta) = &self.eta else { return Ok(0.0) };
        let f = |u: f64| {
            let s = -u.exp();
            eta(s) * u.exp()
        };
        Ok(integrate_adaptive(&f, self.lambda.ln(), (-t).ln(), 1e-13)?.value)
    }

    /// ε(t) = (∫_t^{−Λ} η ds − 32ωt)^{-1/4}.
    pub fn epsilon(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let radicand = self.eta_integral(t)? - 32.0 * self.omega * t;
        if !(radicand > 0.0) {
            return Err(Error::Domain(format!("non-positive radicand {radicand:.3e} at t = {t}")));
        }
        Ok(radicand.powf(-0.25))
    }

    /// ε′(t) = ¼(η(t) + 32ω)ε⁵, differentiating the closed form.
    pub fn epsilon_prime(&self, t: f64) -> Result<f64> {
        let e = self.epsilon(t)?;
        Ok(0.25 * (self.eta_at(t) + 32.0 * self.omega) * e.powi(5))
    }

    /// The hypotheses on ε (two-sided bound, derivative bound, Hölder bound on ε′) on a grid of times, the Hölder clause on the stencils |t − t′| ∈ {(−t)^{-1/2}, (−t)^{-1}}.
    pub fn check_assumption(&self, times: &[f64]) -> Result<AssumptionReport> {
        let rows = times
            .par_iter()
            .map(|&t| self.assumption_at(t))
            .collect::<Vec<Result<AssumptionRow>>>()
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(AssumptionReport { rows })
    }

    fn assumption_at(&self, t: f64) -> Result<AssumptionRow> {
        let e = self.epsilon(t)?;
        let ep = self.epsilon_prime(t)?;
        let mt = -t;
        let lower = (1000.0 * mt).powf(-0.25);
        let upper = mt.powf(-0.25);
        let mut holder: f64 = 0.0;
        for h in [mt.powf(-0.5), 1.0 / mt] {
            for tp in [t - h, t + h] {
                if tp > -self.lambda {
                    continue;
                }
                let q = h.powf(-self.alpha) * (ep - self.epsilon_prime(tp)?).abs();
                holder = holder.max(q / (mt.powf(-1.25) * e.powf(-2.0 * self.alpha)));
            }
        }
        Ok(AssumptionRow {
            t,
            epsilon: e,
            lower_margin: e / lower,
            upper_margin: e / upper,
            derivative_ratio: ep.abs() / mt.powf(-1.25),
            holder_ratio: holder,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionRow {
    pub t: f64,
    pub epsilon: f64,
    /// ε / (−1000t)^{-1/4}; must be ≥ 1.
    pub lower_margin: f64,
    /// ε / (−t)^{-1/4}; must be ≤ 1.
    pub upper_margin: f64,
    /// |ε′| / (−t)^{-5/4}; must be ≤ 1.
    pub derivative_ratio: f64,
    /// Worst stencil value of the Hölder quotient over its bound; must be ≤ 1.
    pub holder_ratio: f64,
}

impl AssumptionRow {
    pub fn holds(&self) -> bool {
        self.lower_margin >= 1.0 && self.upper_margin <= 1.0 && self.derivative_ratio <= 1.0 && self.holder_ratio <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub rows: Vec<AssumptionRow>,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(AssumptionRow::holds)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.holds()).count()
    }
}

/// 4π²ε³ε′ − 32π²ωε⁸.
pub fn modulation_residual(omega: f64, epsilon: f64, epsilon_prime: f64) -> f64 {
    4.0 * PI * PI * epsilon.powi(3) * epsilon_prime - 32.0 * PI * PI * omega * epsilon.powi(8)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub epsilon: Vec<f64>,
    /// max |ε_RK4/ε_exact − 1| against the exact solution through the initial point (η ≡ 0 only).
    pub max_relative_deviation: Option<f64>,
}

/// Classical RK4 for ε′ = ¼(η(t) + 32ω)ε⁵ from (t₀, ε₀) to t₁.
pub fn ode_integrate(model: &FlowModel, eps0: f64, t0: f64, t1: f64, steps: usize) -> Result<Trajectory> {
    if !(eps0 > 0.0 && eps0.is_finite()) {
        return Err(invalid("epsilon0", format!("must be positive, got {eps0}")));
    }
    if !(t0 < t1 && t1 <= -model.lambda) {
        return Err(invalid("t", format!("need t0 < t1 <= -Lambda, got ({t0}, {t1})")));
    }
    if steps == 0 {
        return Err(invalid("steps", "must be positive"));
    }
    let h = (t1 - t0) / steps as f64;
    let rhs = |t: f64, e: f64| 0.25 * (model.eta_at(t) + 32.0 * model.omega) * e.powi(5);
    let stiffness = |t: f64, e: f64| 5.0 * 0.25 * (model.eta_at(t) + 32.0 * model.omega).abs() * e.powi(4);
    let mut times = Vec::with_capacity(steps + 1);
    let mut eps = Vec::with_capacity(steps + 1);
    let (mut t, mut e) = (t0, eps0);
    times.push(t);
    eps.push(e);
    for k in 0..steps {
        if h * stiffness(t, e) > 0.1 {
            return Err(Error::Domain(format!(
                "step {h:.3e} too large for the local rate {:.3e} at t = {t:.6e}",
                stiffness(t, e)
            )));
        }
        let k1 = rhs(t, e);
        let k2 = rhs(t + 0.5 * h, e + 0.5 * h * k1);
        let k3 = rhs(t + 0.5 * h, e + 0.5 * h * k2);
        let k4 = rhs(t + h, e + h * k3);
        e += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = t0 + (k + 1) as f64 * h;
        times.push(t);
        eps.push(e);
    }
    let max_relative_deviation = if model.eta.is_none() {
        let c = 32.0 * model.omega;
        let inv4 = eps0.powi(-4);
        Some(
            times
                .iter()
                .zip(&eps)
                .map(|(t, e)| {
                    let exact = (inv4 - c * (t - t0)).powf(-0.25);
                    (e / exact - 1.0).abs()
                })
                .fold(0.0, f64::max),
        )
    } else {
        None
    };
    Ok(Trajectory {
        times,
        epsilon: eps,
        max_relative_deviation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupPrediction {
    pub t: f64,
    pub epsilon: f64,
    /// M·ε(t)^{-2}.
    pub sup_rm: f64,
    /// c = M·√(32ω).
    pub rate_constant: f64,
    /// sup_rm / (−t)^{1/2}.
    pub ratio: f64,
}

/// sup|Rm| of the rescaled Eguchi-Hanson cores, M·ε(t)^{-2}, with M = max|Rm| of g_eh,1.
pub fn blowup_prediction(model: &FlowModel, t: f64, m: f64) -> Result<BlowupPrediction> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(invalid("M", format!("must be positive, got {m}")));
    }
    let e = model.epsilon(t)?;
    let sup_rm = m * e.powi(-2);
    Ok(BlowupPrediction {
        t,
        epsilon: e,
        sup_rm,
        rate_constant: m * (32.0 * model.omega).sqrt(),
        ratio: sup_rm / (-t).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicciProxyRow {
    pub t: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub sup_ric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RicciProxy {
    pub rows: Vec<RicciProxyRow>,
    /// Slope of ln sup|Ric| against ln(−t).
    pub exponent: f64,
    pub kappa: f64,
    /// sup|Ric|·(−t)^{1/2−κ} along the rows.
    pub weighted: Vec<f64>,
}

/// Sample nodes for the proxy: S³ directions on radii across the cutoff band and just outside it,
/// restricted to the fundamental cube.
pub fn proxy_sample(delta: f64, s3_order: usize) -> Result<Vec<Point4>> {
    let dirs = s3_quadrature(s3_order, 1.0)?;
    let mut pts = Vec::new();
    for f in [0.7, 0.75, 0.8, 0.9, 1.1] {
        let r = f * delta;
        for u in &dirs.nodes {
            let x = u.map(|v| v * r);
            if x.iter().all(|v| v.abs() <= 0.5) {
                pts.push(x);
            }
        }
    }
    if pts.is_empty() {
        return Err(invalid("delta", format!("no proxy sample points inside the cube for delta = {delta}")));
    }
    Ok(pts)
}

/// sup|Ric_ḡ| over [`proxy_sample`] at each time, with ε = ε(t), δ = δ(t), and the fitted exponent in −t.
pub fn ricci_decay_proxy(model: &FlowModel, times: &[f64], background: &Background, kappa: f64) -> Result<RicciProxy> {
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let e = model.epsilon(t)?;
        let d = delta_of_t(t);
        let glued = GluedMetric::new(GlueParams::flow_scale(e, d, background.cutoff())?, background)?;
        let sample = proxy_sample(d, 6)?;
        let sup = sample
            .par_iter()
            .map(|x| {
                let (g, _) = glued.metric_and_obstruction(x)?;
                let (_, c) = curvature_from_jet(&g)?;
                Ok(c.ricci_norm())
            })
            .collect::<Vec<Result<f64>>>()
            .into_iter()
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        rows.push(RicciProxyRow {
            t,
            epsilon: e,
            delta: d,
            sup_ric: sup,
        });
    }
    let mt: Vec<f64> = rows.iter().map(|r| -r.t).collect();
    let sups: Vec<f64> = rows.iter().map(|r| r.sup_ric).collect();
    let (exponent, _) = loglog_fit(&mt, &sups)?;
    let weighted = rows.iter().map(|r| r.sup_ric * (-r.t).powf(0.5 - kappa)).collect();
    Ok(RicciProxy {
        rows,
        exponent,
        kappa,
        weighted,
    })
}

/// Parameters of the weighted Hölder norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSpec {
    pub gamma: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub lambda: f64,
}

impl WeightSpec {
    pub fn new(gamma: f64, sigma: f64, alpha: f64, lambda: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(invalid("gamma", format!("must be positive, got {gamma}")));
        }
        if !(sigma > 0.0 && sigma < 2.0) {
            return Err(invalid("sigma", format!("must lie in (0, 2), got {sigma}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
        }
        if !(lambda > 0.0) {
            return Err(invalid("Lambda", format!("must be positive, got {lambda}")));
        }
        Ok(WeightSpec {
            gamma,
            sigma,
            alpha,
            lambda,
        })
    }

    fn scale(&self, t: f64, r: f64) -> f64 {
        (-t).powf(-0.25) + r
    }

    fn admissible(&self, r: f64, t: f64, x: &Point4) -> bool {
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        (0.0..=10.0).contains(&r)
            && t <= -self.lambda
            && x.iter().all(|v| v.abs() <= 0.5)
            && n >= 0.5 * r
            && n <= self.scale(t, r)
    }
}

/// h at (x, t), with the metric used for its norm, tagged with the sup parameter r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSample {
    pub r: f64,
    pub t: f64,
    pub x: Point4,
    pub h: Sym2,
    pub metric: Sym2,
}

/// A pair for the Hölder quotient. The caller supplies the distance d_t(x, x′) and |P h(x,t) − h(x′,t′)|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSample {
    pub r: f64,
    pub t: f64,
    pub x: Point4,
    pub t2: f64,
    pub x2: Point4,
    pub distance: f64,
    pub difference_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    /// Max of the two weighted quantities over admissible samples.
    pub value: f64,
    pub pointwise: f64,
    pub holder: f64,
    pub skipped: usize,
}

/// Lower bound for the weighted norm: its pointwise and Hölder quantities maximized over the given samples.
pub fn weighted_norm_sample(points: &[NormSample], pairs: &[PairSample], w: &WeightSpec) -> Result<NormEstimate> {
    let mut skipped = 0;
    let mut pointwise: f64 = 0.0;
    for s in points {
        if !w.admissible(s.r, s.t, &s.x) {
            skipped += 1;
            continue;
        }
        let ginv = s.metric.inverse()?;
        let norm = inner_product_inv(&ginv, &s.h, &s.h).max(0.0).sqrt();
        pointwise = pointwise.max((-s.t).powf(w.gamma) * w.scale(s.t, s.r).powf(w.sigma) * norm);
    }
    let mut holder: f64 = 0.0;
    for p in pairs {
        let window = w.scale(p.t, p.r);
        let ok = w.admissible(p.r, p.t, &p.x)
            && w.admissible(p.r, p.t2, &p.x2)
            && (p.t - p.t2).abs() <= window * window
            && p.distance >= 0.0;
        let denom = p.distance * p.distance + (p.t - p.t2).abs();
        if !ok || denom == 0.0 {
            skipped += 1;
            continue;
        }
        let q = (-p.t).powf(w.gamma) * window.powf(w.sigma + 2.0 * w.alpha) * denom.powf(-w.alpha) * p.difference_norm;
        holder = holder.max(q);
    }
    Ok(NormEstimate {
        value: pointwise.max(holder),
        pointwise,
        holder,
        skipped,
    })
}
