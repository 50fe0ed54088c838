//! The glued metric ḡ_{ε,δ}, its obstruction tensor ō₁, and decay scans.

use crate::curvature::{curvature_from_geometry, lichnerowicz_with, Geometry};
use crate::eh::{EhMetric, EhParams, OTensor};
use crate::error::{invalid, Error, Result};
use crate::field::{Sym2Field, Validity};
use crate::jet::{jet_radius, Jet2, Point4};
use crate::lattice::{Background, Which};
use crate::quadrature::s3_quadrature;
use crate::tensor::{inner_product_inv, Sym2Jet};

/// Gluing parameters (ε, δ, background cutoff N).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlueParams {
    pub epsilon: f64,
    pub delta: f64,
    pub cutoff: usize,
}

impl GlueParams {
    /// Enforces the asymptotic regime ε ≤ δ²/10, δ ≤ 1/10.
    pub fn new(epsilon: f64, delta: f64, cutoff: usize) -> Result<Self> {
        let p = Self::desk_scale(epsilon, delta, cutoff)?;
        if !p.is_asymptotic_regime() {
            return Err(invalid(
                "epsilon/delta",
                format!("need epsilon <= delta^2/10 and delta <= 0.1, got ({epsilon}, {delta})"),
            ));
        }
        Ok(p)
    }

    /// Looser bounds for runs where the O(ε¹²δ^{-10}) terms are still small:
    /// 0 < ε ≤ δ/2 and δ ≤ 0.45, so the annulus sits inside the fundamental cube.
    pub fn desk_scale(epsilon: f64, delta: f64, cutoff: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid("epsilon", format!("must be positive, got {epsilon}")));
        }
        if !(delta > 0.0 && delta <= 0.45) {
            return Err(invalid("delta", format!("must lie in (0, 0.45], got {delta}")));
        }
        if epsilon > 0.5 * delta {
            return Err(invalid("epsilon", format!("must be at most delta/2, got {epsilon}")));
        }
        if cutoff < 2 {
            return Err(invalid("N", "background cutoff must be at least 2"));
        }
        Ok(GlueParams {
            epsilon,
            delta,
            cutoff,
        })
    }

    /// Parameters along the flow, where δ(t) = (−t)^{-1/400} stays close to 1: requires ε ≤ δ²/10 and δ < 1.
    /// The annulus then reaches past the cube faces, so only points inside the cube are meaningful.
    pub fn flow_scale(epsilon: f64, delta: f64, cutoff: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid("epsilon", format!("must be positive, got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
        }
        if epsilon > delta * delta / 10.0 {
            return Err(invalid("epsilon", format!("need epsilon <= delta^2/10, got ({epsilon}, {delta})")));
        }
        if cutoff < 2 {
            return Err(invalid("N", "background cutoff must be at least 2"));
        }
        Ok(GlueParams {
            epsilon,
            delta,
            cutoff,
        })
    }

    pub fn is_asymptotic_regime(&self) -> bool {
        self.epsilon <= self.delta * self.delta / 10.0 && self.delta <= 0.1
    }

    pub fn region(&self, x: &Point4) -> RegionTag {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r <= 0.5 * self.delta {
            RegionTag::Inner
        } else if r < self.delta {
            RegionTag::Annulus
        } else {
            RegionTag::Outer
        }
    }

    fn eh(&self) -> EhMetric {
        EhMetric::new(EhParams { epsilon: self.epsilon })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionTag {
    Inner,
    Annulus,
    Outer,
}

impl RegionTag {
    pub fn name(&self) -> &'static str {
        match self {
            RegionTag::Inner => "inner",
            RegionTag::Annulus => "annulus",
            RegionTag::Outer => "outer",
        }
    }
}

/// Value and first two derivatives of a function of one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Smooth step: 0 for s ≤ 2/3, 1 for s ≥ 5/6, built from e^{-1/u}/(e^{-1/u} + e^{-1/(1-u)}) with u = 6(s − 2/3).
pub fn chi_cutoff(s: f64) -> CutoffJet {
    let u = 6.0 * (s - 2.0 / 3.0);
    // beyond these the exact values underflow to 0 and 1
    if u <= 1e-3 {
        return CutoffJet { value: 0.0, d1: 0.0, d2: 0.0 };
    }
    if u >= 1.0 - 1e-3 {
        return CutoffJet { value: 1.0, d1: 0.0, d2: 0.0 };
    }
    let v = 1.0 - u;
    // χ = 1/(1 + e^z), z = 1/u − 1/v
    let z = 1.0 / u - 1.0 / v;
    let dz = -1.0 / (u * u) - 1.0 / (v * v);
    let ddz = 2.0 / (u * u * u) - 2.0 / (v * v * v);
    let value = 1.0 / (1.0 + z.exp());
    let e = (0.5 * z).exp();
    let logistic = 1.0 / ((e + 1.0 / e) * (e + 1.0 / e)); // χ(1−χ)
    let d1 = -logistic * dz;
    let d2 = -(d1 * (1.0 - 2.0 * value) * dz + logistic * ddz);
    CutoffJet {
        value,
        d1: 6.0 * d1,
        d2: 36.0 * d2,
    }
}

/// χ(|x|/δ) as a jet in x.
pub fn chi_jet(x: &Point4, delta: f64) -> Result<Jet2> {
    let s = jet_radius(x)?.scale(1.0 / delta);
    let c = chi_cutoff(s.value);
    if c.d1 == 0.0 && c.d2 == 0.0 {
        return Ok(Jet2::constant(c.value));
    }
    Ok(s.compose(c.value, c.d1, c.d2))
}

/// Branch values at one point: g_eh,ε, o₁, and the outer expression g_eucl + ½ε⁴S.
#[derive(Debug, Clone)]
pub struct GlueBranches {
    pub inner: Sym2Jet,
    pub inner_o1: Sym2Jet,
    pub outer: Sym2Jet,
    pub background: Sym2Jet,
    pub chi: Jet2,
}

/// ḡ_{ε,δ} and ō₁ on the fundamental cube.
#[derive(Debug, Clone, Copy)]
pub struct GluedMetric<'a> {
    pub params: GlueParams,
    pub background: &'a Background,
}

impl<'a> GluedMetric<'a> {
    pub fn new(params: GlueParams, background: &'a Background) -> Result<Self> {
        if background.cutoff() != params.cutoff {
            return Err(invalid(
                "N",
                format!("background built for N={} but params ask for N={}", background.cutoff(), params.cutoff),
            ));
        }
        Ok(GluedMetric { params, background })
    }

    /// Combined background S^(N) at x (needed outside the inner ball only).
    pub fn background_at(&self, x: &Point4) -> Result<Sym2Jet> {
        self.background.eval(x, Which::Combined)
    }

    /// Both branch expressions, given the background jet at x.
    pub fn branches_with(&self, x: &Point4, s: &Sym2Jet) -> Result<GlueBranches> {
        let p = &self.params;
        let e4 = p.epsilon.powi(4);
        let inner = p.eh().eval(x)?;
        let inner_o1 = OTensor::new(1, EhParams { epsilon: p.epsilon })?.eval(x)?;
        let outer = Sym2Jet::identity() + s.scale(0.5 * e4);
        Ok(GlueBranches {
            inner,
            inner_o1,
            outer,
            background: *s,
            chi: chi_jet(x, p.delta)?,
        })
    }

    /// ḡ and ō₁ together, given the background jet (ignored in the inner region).
    pub fn metric_and_obstruction_with(&self, x: &Point4, s: Option<&Sym2Jet>) -> Result<(Sym2Jet, Sym2Jet)> {
        let p = &self.params;
        let e4 = p.epsilon.powi(4);
        let (g, raw) = match p.region(x) {
            RegionTag::Inner => {
                let g = p.eh().eval(x)?;
                let o = OTensor::new(1, EhParams { epsilon: p.epsilon })?.eval(x)?;
                (g, o)
            }
            region => {
                let s = s.ok_or_else(|| Error::Domain("background jet required outside the inner ball".into()))?;
                crate::lattice::ensure_off_lattice(x)?;
                let outer_g = Sym2Jet::identity() + s.scale(0.5 * e4);
                let outer_o = s.scale(e4);
                if region == RegionTag::Outer {
                    (outer_g, outer_o)
                } else {
                    let b = self.branches_with(x, s)?;
                    let chi = b.chi;
                    let one_minus = Jet2::constant(1.0) - chi;
                    let g = b.inner.scale_jet(&one_minus) + outer_g.scale_jet(&chi);
                    let o = b.inner_o1.scale_jet(&one_minus) + outer_o.scale_jet(&chi);
                    (g, o)
                }
            }
        };
        let ginv = g.inverse()?;
        let tr = raw.trace_with(&ginv).scale(0.25);
        let obar = raw - g.scale_jet(&tr);
        Ok((g, obar))
    }

    pub fn metric_and_obstruction(&self, x: &Point4) -> Result<(Sym2Jet, Sym2Jet)> {
        if self.params.region(x) == RegionTag::Inner {
            return self.metric_and_obstruction_with(x, None);
        }
        let s = self.background_at(x)?;
        self.metric_and_obstruction_with(x, Some(&s))
    }

    pub fn obstruction(&self) -> GluedObstruction<'a> {
        GluedObstruction { metric: *self }
    }
}

impl Sym2Field for GluedMetric<'_> {
    fn eval(&self, x: &Point4) -> Result<Sym2Jet> {
        let p = &self.params;
        match p.region(x) {
            RegionTag::Inner => p.eh().eval(x),
            _ => Ok(self.metric_and_obstruction(x)?.0),
        }
    }

    fn validity(&self) -> Validity {
        Validity::Cube
    }
}

/// ō₁: trace-free part (with respect to ḡ) of ½ε∂_ε ḡ, differentiated branchwise.
#[derive(Debug, Clone, Copy)]
pub struct GluedObstruction<'a> {
    pub metric: GluedMetric<'a>,
}

impl Sym2Field for GluedObstruction<'_> {
    fn eval(&self, x: &Point4) -> Result<Sym2Jet> {
        Ok(self.metric.metric_and_obstruction(x)?.1)
    }

    fn validity(&self) -> Validity {
        Validity::Cube
    }
}

/// Which quantity a decay scan measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanField {
    Ricci,
    LichnerowiczObstruction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub region: RegionTag,
    /// (radius, sup over the sampled sphere).
    pub samples: Vec<(f64, f64)>,
    /// Log-log slope (outer region only).
    pub exponent: Option<f64>,
    pub prefactor: Option<f64>,
    pub max: f64,
}

/// |Ric_ḡ|_ḡ or |Δ_L ō₁|_ḡ at a point.
pub fn scan_magnitude(glued: &GluedMetric<'_>, field: ScanField, x: &Point4) -> Result<f64> {
    let (g, obar) = glued.metric_and_obstruction(x)?;
    let geo = Geometry::new(&g)?;
    let curv = curvature_from_geometry(&geo);
    match field {
        ScanField::Ricci => Ok(curv.ricci_norm()),
        ScanField::LichnerowiczObstruction => {
            let l = lichnerowicz_with(&geo, &curv, &obar);
            Ok(inner_product_inv(&geo.ginv, &l, &l).max(0.0).sqrt())
        }
    }
}

/// Least-squares slope of log y against log x, with the prefactor e^{intercept}.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    let (slope, intercept) = linear_fit(&lx, &ly)?;
    Ok((slope, intercept.exp()))
}

/// Least-squares line through (xs, ys): (slope, intercept).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Fit(format!("need at least two samples, got {}", xs.len().min(ys.len()))));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Sup of the scanned magnitude over S³-rule nodes on each sphere |x| = r.
///
/// Outer region: log-log fit against r. Annulus and inner: the max only.
pub fn decay_scan(
    glued: &GluedMetric<'_>,
    field: ScanField,
    region: RegionTag,
    radii: &[f64],
    s3_order: usize,
) -> Result<DecayFit> {
    let p = &glued.params;
    for &r in radii {
        let x = [r, 0.0, 0.0, 0.0];
        let tag = p.region(&x);
        let ok = tag == region || (region == RegionTag::Annulus && (r - 0.5 * p.delta).abs() < 1e-12);
        if !ok || r > 0.5 {
            return Err(invalid("radii", format!("radius {r} is not in the {} region", region.name())));
        }
    }
    if region == RegionTag::Outer && radii.len() < 2 {
        return Err(Error::Fit("an outer decay fit needs at least two radii".into()));
    }
    let mut samples = Vec::with_capacity(radii.len());
    for &r in radii {
        let rule = s3_quadrature(s3_order, r)?;
        let vals = crate::sum::ordered_try_map(&rule.nodes, |x| scan_magnitude(glued, field, x))?;
        samples.push((r, vals.iter().cloned().fold(0.0, f64::max)));
    }
    let max = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let (exponent, prefactor) = if region == RegionTag::Outer {
        let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let (e, c) = loglog_fit(&xs, &ys)?;
        (Some(e), Some(c))
    } else {
        (None, None)
    };
    Ok(DecayFit {
        region,
        samples,
        exponent,
        prefactor,
        max,
    })
}
