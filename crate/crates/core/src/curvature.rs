//! Christoffel symbols, curvature, Lichnerowicz Laplacian, divergence, Lie
//! derivatives and the quadratic Ricci remainder, all from second-order jets.
//!
//! Conventions: R^l_{ijk} = ∂_iΓ^l_{jk} − ∂_jΓ^l_{ik} + Γ^l_{im}Γ^m_{jk} − Γ^l_{jm}Γ^m_{ik},
//! R_{ijkl} = g_{lm}R^m_{ijk}, Ric_{jk} = R^i_{ijk}. With these, R_{ijji} is the
//! sectional curvature numerator and Rm(h)_{ij} = R_{kijl}h^{kl} satisfies Rm(g) = Ric.

use crate::error::Result;
use crate::field::Sym2Field;
use crate::jet::{Jet1, Jet2, Point4, SYM_INDEX, SYM_PAIRS};
use crate::tensor::{Sym2, Sym2Jet};

pub type Riemann = [[[[f64; 4]; 4]; 4]; 4];
/// Contravariant vector field with first derivatives.
pub type VectorFieldAt = [Jet1; 4];

/// Metric, inverse and connection at a point.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub g: Sym2,
    pub ginv: Sym2,
    /// g^{ij} with first derivatives.
    pub ginv1: [Jet1; 10],
    /// Γ^k_{ij} with first derivatives, indexed [k][sym(i,j)].
    pub gamma: [[Jet1; 10]; 4],
}

impl Geometry {
    pub fn new(g: &Sym2Jet) -> Result<Geometry> {
        let ginv_jet = g.inverse()?;
        let ginv1 = ginv_jet.first_order();
        // lowered Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let dg: [[Jet1; 10]; 4] = std::array::from_fn(|l| std::array::from_fn(|c| g.comps[c].partial(l)));
        let mut low = [[Jet1::ZERO; 10]; 4];
        for (l, row) in low.iter_mut().enumerate() {
            for (c, &(i, j)) in SYM_PAIRS.iter().enumerate() {
                row[c] = (dg[i][SYM_INDEX[j][l]] + dg[j][SYM_INDEX[i][l]] - dg[l][c]).scale(0.5);
            }
        }
        let mut gamma = [[Jet1::ZERO; 10]; 4];
        for (k, row) in gamma.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                let mut acc = Jet1::ZERO;
                for (l, lrow) in low.iter().enumerate() {
                    acc += ginv1[SYM_INDEX[k][l]] * lrow[c];
                }
                *v = acc;
            }
        }
        Ok(Geometry {
            g: g.value(),
            ginv: ginv_jet.value(),
            ginv1,
            gamma,
        })
    }

    #[inline]
    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[k][SYM_INDEX[i][j]].value
    }

    /// ∇_l h_{ij} with first derivatives, indexed [l][sym(i,j)].
    pub fn covariant_derivative(&self, h: &Sym2Jet) -> [[Jet1; 10]; 4] {
        let h1 = h.first_order();
        std::array::from_fn(|l| {
            std::array::from_fn(|c| {
                let (i, j) = SYM_PAIRS[c];
                let mut acc = h.comps[c].partial(l);
                for p in 0..4 {
                    acc -= self.gamma[p][SYM_INDEX[l][i]] * h1[SYM_INDEX[p][j]];
                    acc -= self.gamma[p][SYM_INDEX[l][j]] * h1[SYM_INDEX[i][p]];
                }
                acc
            })
        })
    }

    /// Rough Laplacian g^{ml}∇_m∇_l h.
    pub fn rough_laplacian(&self, h: &Sym2Jet) -> Sym2 {
        let nh = self.covariant_derivative(h);
        let mut out = Sym2::ZERO;
        for (c, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            let mut acc = 0.0;
            for m in 0..4 {
                for l in 0..4 {
                    let gml = self.ginv.get(m, l);
                    if gml == 0.0 {
                        continue;
                    }
                    // ∇_m∇_l h_ij
                    let mut v = nh[l][c].grad[m];
                    for p in 0..4 {
                        v -= self.christoffel(p, m, l) * nh[p][c].value;
                        v -= self.christoffel(p, m, i) * nh[l][SYM_INDEX[p][j]].value;
                        v -= self.christoffel(p, m, j) * nh[l][SYM_INDEX[i][p]].value;
                    }
                    acc += gml * v;
                }
            }
            out.comps[c] = acc;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct CurvatureAt {
    /// christoffel[k][i][j] = Γ^k_{ij}.
    pub christoffel: [[[f64; 4]; 4]; 4],
    /// riemann[i][j][k][l] = R_{ijkl}.
    pub riemann: Riemann,
    pub ricci: Sym2,
    pub scalar: f64,
    pub ginv: Sym2,
}

impl CurvatureAt {
    /// |Rm|² = R_{ijkl}R^{ijkl}.
    pub fn rm_norm_sq(&self) -> f64 {
        let gi = self.ginv.to_matrix();
        let rm = &self.riemann;
        // raise indices one at a time
        let mut up = *rm;
        for _ in 0..4 {
            let mut next = [[[[0.0; 4]; 4]; 4]; 4];
            for (a, na) in next.iter_mut().enumerate() {
                for (b, nb) in na.iter_mut().enumerate() {
                    for (c, nc) in nb.iter_mut().enumerate() {
                        for (d, nd) in nc.iter_mut().enumerate() {
                            // rotate: new[a][b][c][d] = g^{a p} old[b][c][d][p]
                            let mut acc = 0.0;
                            for p in 0..4 {
                                acc += gi[a][p] * up[b][c][d][p];
                            }
                            *nd = acc;
                        }
                    }
                }
            }
            up = next;
        }
        // after four rotations the index order is restored
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        acc += rm[i][j][k][l] * up[i][j][k][l];
                    }
                }
            }
        }
        acc
    }

    /// |Ric|_g.
    pub fn ricci_norm(&self) -> f64 {
        crate::tensor::inner_product_inv(&self.ginv, &self.ricci, &self.ricci)
            .max(0.0)
            .sqrt()
    }

    /// Rm(h)_{ij} = R_{kijl} h^{kl}.
    pub fn curvature_action(&self, h: &Sym2) -> Sym2 {
        let hu = h.raise_both(&self.ginv);
        let mut out = Sym2::ZERO;
        for (c, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            let mut acc = 0.0;
            for k in 0..4 {
                for l in 0..4 {
                    acc += self.riemann[k][i][j][l] * hu.get(k, l);
                }
            }
            out.comps[c] = acc;
        }
        out
    }

    /// Ric_i^k h_{kj} + Ric_j^k h_{ik}.
    pub fn ricci_action(&self, h: &Sym2) -> Sym2 {
        let mut rmix = [[0.0; 4]; 4];
        for (i, row) in rmix.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|p| self.ricci.get(i, p) * self.ginv.get(p, k)).sum();
            }
        }
        let mut out = Sym2::ZERO;
        for (c, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            let mut acc = 0.0;
            for k in 0..4 {
                acc += rmix[i][k] * h.get(k, j) + rmix[j][k] * h.get(i, k);
            }
            out.comps[c] = acc;
        }
        out
    }
}

/// Curvature from a metric jet.
pub fn curvature_from_jet(g: &Sym2Jet) -> Result<(Geometry, CurvatureAt)> {
    let geo = Geometry::new(g)?;
    let curv = curvature_from_geometry(&geo);
    Ok((geo, curv))
}

pub fn curvature_from_geometry(geo: &Geometry) -> CurvatureAt {
    let gm = &geo.gamma;
    let gam = |k: usize, i: usize, j: usize| gm[k][SYM_INDEX[i][j]].value;
    let dgam = |d: usize, k: usize, i: usize, j: usize| gm[k][SYM_INDEX[i][j]].grad[d];
    // R^l_{ijk}
    let mut rup = [[[[0.0; 4]; 4]; 4]; 4];
    for (l, rl) in rup.iter_mut().enumerate() {
        for i in 0..4 {
            for j in (i + 1)..4 {
                for k in 0..4 {
                    let mut v = dgam(i, l, j, k) - dgam(j, l, i, k);
                    for m in 0..4 {
                        v += gam(l, i, m) * gam(m, j, k) - gam(l, j, m) * gam(m, i, k);
                    }
                    rl[i][j][k] = v;
                    rl[j][i][k] = -v;
                }
            }
        }
    }
    let g = geo.g.to_matrix();
    let mut riemann = [[[[0.0; 4]; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    riemann[i][j][k][l] = (0..4).map(|m| g[l][m] * rup[m][i][j][k]).sum();
                }
            }
        }
    }
    let mut ricci = Sym2::ZERO;
    for (c, &(j, k)) in SYM_PAIRS.iter().enumerate() {
        let a: f64 = (0..4).map(|i| rup[i][i][j][k]).sum();
        let b: f64 = (0..4).map(|i| rup[i][i][k][j]).sum();
        ricci.comps[c] = 0.5 * (a + b);
    }
    let scalar = ricci.contract(&geo.ginv);
    let christoffel = std::array::from_fn(|k| std::array::from_fn(|i| std::array::from_fn(|j| gam(k, i, j))));
    CurvatureAt {
        christoffel,
        riemann,
        ricci,
        scalar,
        ginv: geo.ginv,
    }
}

pub fn curvature_at<G: Sym2Field + ?Sized>(g: &G, x: &Point4) -> Result<CurvatureAt> {
    Ok(curvature_from_jet(&g.eval(x)?)?.1)
}

/// |Rm|² sampled at three radii in ratio q along a ray, and its Richardson limit r → 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmExtrapolation {
    pub radii: [f64; 3],
    pub values: [f64; 3],
    pub limit_sq: f64,
}

impl RmExtrapolation {
    /// M = √(limit of |Rm|²).
    pub fn m(&self) -> f64 {
        self.limit_sq.sqrt()
    }
}

/// Two Richardson steps assuming |Rm|²(r) = L + c₁r^p + c₂r^{2p} + …, radii r₀ > r₁ > r₂ in a fixed ratio.
///
/// For g_eh a coordinate axis is the well-conditioned ray: elsewhere the Cartesian components
/// mix eigenvalues of size ε²/r² and r²/ε², and roundoff grows like r^{-13}.
pub fn rm_extrapolate<G: Sym2Field + ?Sized>(g: &G, direction: &Point4, radii: [f64; 3], p: i32) -> Result<RmExtrapolation> {
    let q = radii[0] / radii[1];
    if !(radii[2] > 0.0 && q > 1.0 && ((radii[1] / radii[2]) / q - 1.0).abs() < 1e-12) {
        return Err(crate::error::invalid("radii", format!("need a decreasing geometric sequence, got {radii:?}")));
    }
    let n = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0.0 {
        return Err(crate::error::invalid("direction", "must be nonzero"));
    }
    let mut values = [0.0; 3];
    for (v, r) in values.iter_mut().zip(&radii) {
        *v = curvature_at(g, &direction.map(|c| c * r / n))?.rm_norm_sq();
    }
    let f1 = q.powi(p);
    let a = (f1 * values[1] - values[0]) / (f1 - 1.0);
    let b = (f1 * values[2] - values[1]) / (f1 - 1.0);
    let f2 = f1 * f1;
    Ok(RmExtrapolation {
        radii,
        values,
        limit_sq: (f2 * b - a) / (f2 - 1.0),
    })
}

/// Δ_L h = Δh + 2Rm(h) − Ric∘h − h∘Ric, at the jet level.
pub fn lichnerowicz_jet(g: &Sym2Jet, h: &Sym2Jet) -> Result<Sym2> {
    let (geo, curv) = curvature_from_jet(g)?;
    Ok(lichnerowicz_with(&geo, &curv, h))
}

pub fn lichnerowicz_with(geo: &Geometry, curv: &CurvatureAt, h: &Sym2Jet) -> Sym2 {
    let hv = h.value();
    geo.rough_laplacian(h) + curv.curvature_action(&hv).scale(2.0) - curv.ricci_action(&hv)
}

pub fn lichnerowicz<G: Sym2Field + ?Sized, H: Sym2Field + ?Sized>(g: &G, h: &H, x: &Point4) -> Result<Sym2> {
    lichnerowicz_jet(&g.eval(x)?, &h.eval(x)?)
}

#[derive(Debug, Clone)]
pub struct DivTrace {
    /// (div h)_j = g^{ik}∇_i h_{kj}, with first derivatives.
    pub divergence: [Jet1; 4],
    pub trace: Jet2,
    /// Y = div h − ½∇tr h, raised with g.
    pub y: VectorFieldAt,
}

impl DivTrace {
    pub fn divergence_values(&self) -> [f64; 4] {
        self.divergence.map(|d| d.value)
    }
}

pub fn div_trace_with(geo: &Geometry, g: &Sym2Jet, h: &Sym2Jet) -> Result<DivTrace> {
    let ginv2 = g.inverse()?;
    let trace = h.trace_with(&ginv2);
    let nh = geo.covariant_derivative(h);
    let divergence: [Jet1; 4] = std::array::from_fn(|j| {
        let mut acc = Jet1::ZERO;
        for i in 0..4 {
            for k in 0..4 {
                acc += geo.ginv1[SYM_INDEX[i][k]] * nh[i][SYM_INDEX[k][j]];
            }
        }
        acc
    });
    let w: [Jet1; 4] = std::array::from_fn(|j| divergence[j] - trace.partial(j).scale(0.5));
    let y = std::array::from_fn(|m| {
        let mut acc = Jet1::ZERO;
        for (j, wj) in w.iter().enumerate() {
            acc += geo.ginv1[SYM_INDEX[m][j]] * *wj;
        }
        acc
    });
    Ok(DivTrace {
        divergence,
        trace,
        y,
    })
}

pub fn div_trace_jet(g: &Sym2Jet, h: &Sym2Jet) -> Result<DivTrace> {
    let geo = Geometry::new(g)?;
    div_trace_with(&geo, g, h)
}

pub fn div_trace<G: Sym2Field + ?Sized, H: Sym2Field + ?Sized>(g: &G, h: &H, x: &Point4) -> Result<DivTrace> {
    div_trace_jet(&g.eval(x)?, &h.eval(x)?)
}

/// (𝓛_V h)_{ij} = V^k∂_k h_{ij} + h_{kj}∂_iV^k + h_{ik}∂_jV^k.
pub fn lie_derivative_sym2(h: &Sym2Jet, v: &VectorFieldAt) -> Sym2 {
    let mut out = Sym2::ZERO;
    for (c, &(i, j)) in SYM_PAIRS.iter().enumerate() {
        let mut acc = 0.0;
        for k in 0..4 {
            acc += v[k].value * h.comps[c].grad[k];
            acc += h.get(k, j).value * v[k].grad[i];
            acc += h.get(i, k).value * v[k].grad[j];
        }
        out.comps[c] = acc;
    }
    out
}

/// (𝓛_V α)_i = V^k∂_kα_i + α_k∂_iV^k.
pub fn lie_derivative_form(alpha: &[Jet2; 4], v: &VectorFieldAt) -> [f64; 4] {
    std::array::from_fn(|i| {
        let mut acc = 0.0;
        for k in 0..4 {
            acc += v[k].value * alpha[i].grad[k] + alpha[k].value * v[k].grad[i];
        }
        acc
    })
}

/// [V, W]^i = V^k∂_kW^i − W^k∂_kV^i.
pub fn lie_bracket(v: &VectorFieldAt, w: &VectorFieldAt) -> [f64; 4] {
    std::array::from_fn(|i| {
        let mut acc = 0.0;
        for k in 0..4 {
            acc += v[k].value * w[i].grad[k] - w[k].value * v[i].grad[k];
        }
        acc
    })
}

/// First-order truncation of a jet vector.
pub fn vector_jet1(v: &[Jet2; 4]) -> VectorFieldAt {
    v.map(|c| c.to_jet1())
}

/// Q_g(k) = 2Ric_{g+k} − 2Ric_g + Δ_{L,g}k − 𝓛_Y(g+k).
pub fn q_remainder_jet(g: &Sym2Jet, k: &Sym2Jet) -> Result<Sym2> {
    let gk = *g + *k;
    let (_, curv_gk) = curvature_from_jet(&gk)?;
    let (geo, curv_g) = curvature_from_jet(g)?;
    let dl = lichnerowicz_with(&geo, &curv_g, k);
    let dt = div_trace_with(&geo, g, k)?;
    let lie = lie_derivative_sym2(&gk, &dt.y);
    Ok(curv_gk.ricci.scale(2.0) - curv_g.ricci.scale(2.0) + dl - lie)
}

pub fn q_remainder<G: Sym2Field + ?Sized, K: Sym2Field + ?Sized>(g: &G, k: &K, x: &Point4) -> Result<Sym2> {
    q_remainder_jet(&g.eval(x)?, &k.eval(x)?)
}
