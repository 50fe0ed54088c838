//! Eguchi-Hanson metrics, their asymptotic tensors, kernel tensors and symmetries.

use crate::error::{invalid, Error, Result};
use crate::field::{Sym2Field, Validity};
use crate::jet::{Jet2, Point4};
use crate::quadrature::{radial_quadrature, Estimate};
use crate::tensor::{Mat4, Sym2, Sym2Jet};

/// Covector or vector with jet components.
pub type VecJet = [Jet2; 4];

/// Evaluation below `R_MIN_FACTOR * epsilon` is refused.
pub const R_MIN_FACTOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EhParams {
    pub epsilon: f64,
}

impl EhParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(invalid("epsilon", format!("must be >= 0, got {epsilon}")));
        }
        Ok(EhParams { epsilon })
    }
}

fn r2_of(x: &Point4) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn guard(x: &Point4, eps: f64) -> Result<()> {
    let r = r2_of(x).sqrt();
    if !(r > 0.0) || r < R_MIN_FACTOR * eps {
        return Err(Error::Domain(format!(
            "|x| = {r:.3e} is inside the excluded core (r_min = {:.3e})",
            R_MIN_FACTOR * eps
        )));
    }
    Ok(())
}

/// The unnormalised coframe x·dx, r²α₁, r²α₂, r²α₃ in terms of coordinate jets.
fn frame(c: &[Jet2; 4]) -> [VecJet; 4] {
    let [x1, x2, x3, x4] = *c;
    [
        [x1, x2, x3, x4],
        [-x2, x1, -x4, x3],
        [-x3, x4, x1, -x2],
        [-x4, -x3, x2, x1],
    ]
}

fn r2_jet(c: &[Jet2; 4]) -> Jet2 {
    c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3]
}

/// α₁, α₂, α₃ at x.
pub fn alpha_forms(x: &Point4) -> Result<[VecJet; 3]> {
    guard(x, 0.0)?;
    let c = Jet2::coords(x);
    let f = frame(&c);
    let inv = r2_jet(&c).recip();
    Ok([1, 2, 3].map(|k| f[k].map(|v| v * inv)))
}

/// V₁, V₂, V₃ at x.
pub fn vector_fields_v(x: &Point4) -> Result<[VecJet; 3]> {
    guard(x, 0.0)?;
    let f = frame(&Jet2::coords(x));
    Ok([f[1], f[2], f[3]])
}

/// The Euler field r∂/∂r.
pub fn euler_field(x: &Point4) -> VecJet {
    Jet2::coords(x)
}

/// Components of g_eh,ε from coordinate jets.
fn eh_components(c: &[Jet2; 4], eps: f64) -> Sym2Jet {
    let f = frame(c);
    let r2 = r2_jet(c);
    let e4 = eps.powi(4);
    let w = (r2 * r2 + e4).sqrt();
    let a = w.recip();
    let b = w * (r2 * r2).recip();
    let horiz = Sym2Jet::square(&f[0]) + Sym2Jet::square(&f[1]);
    let vert = Sym2Jet::square(&f[2]) + Sym2Jet::square(&f[3]);
    horiz.scale_jet(&a) + vert.scale_jet(&b)
}

/// Flips the sign of mixed components with exactly one index equal to 1 (pullback by R).
fn reflect_components(mut s: Sym2Jet) -> Sym2Jet {
    for j in 1..4 {
        let v = *s.get(0, j);
        *s.get_mut(0, j) = -v;
    }
    s
}

fn reflected_coords(x: &Point4) -> [Jet2; 4] {
    let mut c = Jet2::coords(x);
    c[0] = -c[0];
    c
}

/// g_eh,ε (or its reflection ĝ when `hat` is set).
#[derive(Debug, Clone, Copy)]
pub struct EhMetric {
    pub epsilon: f64,
    pub hat: bool,
}

impl EhMetric {
    pub fn new(params: EhParams) -> Self {
        EhMetric {
            epsilon: params.epsilon,
            hat: false,
        }
    }

    pub fn hat(params: EhParams) -> Self {
        EhMetric {
            epsilon: params.epsilon,
            hat: true,
        }
    }
}

impl Sym2Field for EhMetric {
    fn eval(&self, x: &Point4) -> Result<Sym2Jet> {
        if self.epsilon == 0.0 {
            return Ok(Sym2Jet::identity());
        }
        guard(x, self.epsilon)?;
        if self.hat {
            Ok(reflect_components(eh_components(&reflected_coords(x), self.epsilon)))
        } else {
            Ok(eh_components(&Jet2::coords(x), self.epsilon))
        }
    }
}

/// The five quadratic-over-r⁶ coefficient functions of T and T̂:
/// (x₁²+x₂²−x₃²−x₄², x₁x₃+x₂x₄, x₁x₄−x₂x₃, x₁x₃−x₂x₄, x₁x₄+x₂x₃) / r⁶.
pub fn t_coefficients(c: &[Jet2; 4]) -> [Jet2; 5] {
    let [x1, x2, x3, x4] = *c;
    let r2 = r2_jet(c);
    let w = (r2 * r2 * r2).recip();
    [
        (x1 * x1 + x2 * x2 - x3 * x3 - x4 * x4) * w,
        (x1 * x3 + x2 * x4) * w,
        (x1 * x4 - x2 * x3) * w,
        (x1 * x3 - x2 * x4) * w,
        (x1 * x4 + x2 * x3) * w,
    ]
}

/// Assembles −(u₁A₁ + 2u₂A₂ + 2u₃A₃ + 2v₂B₂ + 2v₃B₃) from coefficient jets.
///
/// T uses (u₁, u₂, u₃, 0, 0); T̂ uses (u₁, 0, 0, v₂, v₃).
pub fn assemble_t(u1: Jet2, u2: Jet2, u3: Jet2, v2: Jet2, v3: Jet2) -> Sym2Jet {
    let mut s = Sym2Jet::ZERO;
    *s.get_mut(0, 0) = -u1;
    *s.get_mut(1, 1) = -u1;
    *s.get_mut(2, 2) = u1;
    *s.get_mut(3, 3) = u1;
    let p2 = (u2 + v2).scale(-2.0);
    let m2 = (u2 - v2).scale(-2.0);
    let p3 = (u3 + v3).scale(-2.0);
    let m3 = (v3 - u3).scale(-2.0);
    *s.get_mut(0, 2) = p2;
    *s.get_mut(1, 3) = m2;
    *s.get_mut(0, 3) = p3;
    *s.get_mut(1, 2) = m3;
    s
}

/// T (or T̂ when `hat` is set).
#[derive(Debug, Clone, Copy, Default)]
pub struct TensorT {
    pub hat: bool,
}

impl TensorT {
    pub fn plain() -> Self {
        TensorT { hat: false }
    }
    pub fn hat() -> Self {
        TensorT { hat: true }
    }
}

impl Sym2Field for TensorT {
    fn eval(&self, x: &Point4) -> Result<Sym2Jet> {
        guard(x, 0.0)?;
        let u = t_coefficients(&Jet2::coords(x));
        let z = Jet2::ZERO;
        Ok(if self.hat {
            assemble_t(u[0], z, z, u[3], u[4])
        } else {
            assemble_t(u[0], u[1], u[2], z, z)
        })
    }
}

/// The kernel tensors o₁, o₂, o₃ of g_eh,ε.
#[derive(Debug, Clone, Copy)]
pub struct OTensor {
    pub index: usize,
    pub epsilon: f64,
}

impl OTensor {
    pub fn new(index: usize, params: EhParams) -> Result<Self> {
        if !(1..=3).contains(&index) {
            return Err(invalid("index", format!("o_i needs i in 1..=3, got {index}")));
        }
        Ok(OTensor {
            index,
            epsilon: params.epsilon,
        })
    }
}

/// ∫|o_i|² dvol over the whole of g_eh,ε by radial quadrature along `direction`; the integrand is
/// radial and dvol = r³dr·dΩ, so the sphere contributes 2π².
pub fn o_norm_integral(o: &OTensor, direction: &Point4, tol: f64) -> Result<Estimate> {
    let n = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(invalid("direction", "must be a nonzero finite vector"));
    }
    let u = direction.map(|v| v / n);
    let g = EhMetric::new(EhParams::new(o.epsilon)?);
    // |o_i|² → 4 at the bolt, so the ball r < a contributes a⁴ to the radial integral.
    let a = 1e-3 * o.epsilon;
    let f = |r: f64| {
        let x = u.map(|v| v * r);
        match (g.value_at(&x), o.value_at(&x)) {
            (Ok(gx), Ok(ox)) => crate::tensor::inner_product(&gx, &ox, &ox).unwrap_or(f64::NAN),
            _ => f64::NAN,
        }
    };
    let mut est = radial_quadrature(f, a, None, 8.0, tol)?;
    est.value += a.powi(4);
    if !est.value.is_finite() {
        return Err(Error::Quadrature("non-finite |o|² along the ray".into()));
    }
    let area = 2.0 * std::f64::consts::PI.powi(2);
    Ok(Estimate {
        value: area * est.value,
        error: area * est.error,
    })
}

/// o₁ from coordinate jets.
pub(crate) fn o1_components(c: &[Jet2; 4], eps: f64) -> Sym2Jet {
    let f = frame(c);
    let r2 = r2_jet(c);
    let e4 = eps.powi(4);
    let w2 = r2 * r2 + e4;
    let w = w2.sqrt();
    let a = (w2 * w).recip().scale(-e4);
    let b = (w * r2 * r2).recip().scale(e4);
    let horiz = Sym2Jet::square(&f[0]) + Sym2Jet::square(&f[1]);
    let vert = Sym2Jet::square(&f[2]) + Sym2Jet::square(&f[3]);
    horiz.scale_jet(&a) + vert.scale_jet(&b)
}

impl Sym2Field for OTensor {
    fn eval(&self, x: &Point4) -> Result<Sym2Jet> {
        if self.epsilon == 0.0 {
            return Ok(Sym2Jet::ZERO);
        }
        guard(x, self.epsilon)?;
        let c = Jet2::coords(x);
        if self.index == 1 {
            return Ok(o1_components(&c, self.epsilon));
        }
        let f = frame(&c);
        let r2 = r2_jet(&c);
        let e4 = self.epsilon.powi(4);
        let pre = ((r2 * r2 + e4) * r2).recip().scale(e4);
        let s = if self.index == 2 {
            Sym2Jet::sym_product(&f[0], &f[2]) - Sym2Jet::sym_product(&f[1], &f[3])
        } else {
            Sym2Jet::sym_product(&f[0], &f[3]) + Sym2Jet::sym_product(&f[1], &f[2])
        };
        Ok(s.scale_jet(&pre))
    }
}

/// An element of the map collection: x ↦ A x + b with A a signed permutation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryMap {
    pub linear: Mat4,
    pub translation: [f64; 4],
    pub name: &'static str,
}

impl SymmetryMap {
    fn from_images(images: [(usize, f64); 4], translation: [f64; 4], name: &'static str) -> Self {
        // component p of the image is sign * x_idx
        let mut a = [[0.0; 4]; 4];
        for (p, (idx, sign)) in images.iter().enumerate() {
            a[p][*idx] = *sign;
        }
        SymmetryMap {
            linear: a,
            translation,
            name,
        }
    }

    /// The four linear maps fixing g_eh, ĝ, T and T̂.
    pub fn linear_generators() -> [SymmetryMap; 4] {
        let z = [0.0; 4];
        [
            Self::from_images([(1, 1.0), (0, -1.0), (2, 1.0), (3, 1.0)], z, "(x2,-x1,x3,x4)"),
            Self::from_images([(0, 1.0), (1, 1.0), (3, 1.0), (2, -1.0)], z, "(x1,x2,x4,-x3)"),
            Self::from_images([(2, 1.0), (3, 1.0), (0, 1.0), (1, 1.0)], z, "(x3,x4,x1,x2)"),
            Self::from_images([(2, -1.0), (3, 1.0), (0, -1.0), (1, 1.0)], z, "(-x3,x4,-x1,x2)"),
        ]
    }

    /// The eight affine torus maps x_i ↦ 1 − x_i and x_i ↦ x_i + 2.
    pub fn affine_generators() -> [SymmetryMap; 8] {
        const REFLECT: [&str; 4] = ["1-x1", "1-x2", "1-x3", "1-x4"];
        const SHIFT: [&str; 4] = ["x1+2", "x2+2", "x3+2", "x4+2"];
        std::array::from_fn(|k| {
            let i = k % 4;
            let mut images = [(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)];
            let mut b = [0.0; 4];
            if k < 4 {
                images[i].1 = -1.0;
                b[i] = 1.0;
                Self::from_images(images, b, REFLECT[i])
            } else {
                b[i] = 2.0;
                Self::from_images(images, b, SHIFT[i])
            }
        })
    }

    /// All twelve generators.
    pub fn collection() -> Vec<SymmetryMap> {
        let mut v = Self::linear_generators().to_vec();
        v.extend(Self::affine_generators());
        v
    }

    pub fn apply(&self, x: &Point4) -> Point4 {
        std::array::from_fn(|p| {
            let mut acc = self.translation[p];
            for i in 0..4 {
                acc += self.linear[p][i] * x[i];
            }
            acc
        })
    }

    /// φ ∘ ψ.
    pub fn compose(&self, psi: &SymmetryMap) -> SymmetryMap {
        let a = crate::tensor::matmul(&self.linear, &psi.linear);
        let b = self.apply(&psi.translation);
        SymmetryMap {
            linear: a,
            translation: b,
            name: "composite",
        }
    }

    pub fn is_orthogonal(&self) -> bool {
        let mut at = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                at[i][j] = self.linear[j][i];
            }
        }
        let p = crate::tensor::matmul(&at, &self.linear);
        (0..4).all(|i| (0..4).all(|j| p[i][j] == if i == j { 1.0 } else { 0.0 }))
    }

    /// (Dφ)ᵀ h(φ(x)) (Dφ), given h evaluated at φ(x).
    pub fn pullback_value(&self, h_at_image: &Sym2) -> Sym2 {
        h_at_image.congruence(&self.linear)
    }
}

/// max over the sample of |φ*h − h| in the Euclidean norm.
pub fn symmetry_check<F: Sym2Field>(field: &F, map: &SymmetryMap, sample: &[Point4]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for x in sample {
        let h = field.value_at(x)?;
        let ph = map.pullback_value(&field.value_at(&map.apply(x))?);
        worst = worst.max((ph - h).norm());
    }
    Ok(worst)
}

impl Validity {
    pub fn contains(&self, x: &Point4) -> bool {
        match self {
            Validity::Everywhere => true,
            Validity::Punctured => r2_of(x) > 0.0,
            Validity::Cube => r2_of(x) > 0.0 && x.iter().all(|v| v.abs() <= 0.5 + 1e-12),
        }
    }
}
