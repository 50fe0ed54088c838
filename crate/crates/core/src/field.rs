//! Pointwise tensor fields with jets.

use crate::error::Result;
use crate::jet::Point4;
use crate::tensor::{Sym2, Sym2Jet};

/// Where a field may be evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Validity {
    /// All of ℝ⁴ minus the origin.
    Punctured,
    /// Everywhere.
    Everywhere,
    /// The closed fundamental cube [−½,½]⁴ minus the origin.
    Cube,
}

pub trait Sym2Field: Send + Sync {
    fn eval(&self, x: &Point4) -> Result<Sym2Jet>;

    fn value_at(&self, x: &Point4) -> Result<Sym2> {
        Ok(self.eval(x)?.value())
    }

    fn validity(&self) -> Validity {
        Validity::Punctured
    }
}

impl<F: Sym2Field + ?Sized> Sym2Field for &F {
    fn eval(&self, x: &Point4) -> Result<Sym2Jet> {
        (**self).eval(x)
    }
    fn validity(&self) -> Validity {
        (**self).validity()
    }
}

impl<F: Sym2Field + ?Sized> Sym2Field for Box<F> {
    fn eval(&self, x: &Point4) -> Result<Sym2Jet> {
        (**self).eval(x)
    }
    fn validity(&self) -> Validity {
        (**self).validity()
    }
}

/// Wraps a closure as a field.
pub struct FnField<F>(pub F);

impl<F> Sym2Field for FnField<F>
where
    F: Fn(&Point4) -> Result<Sym2Jet> + Send + Sync,
{
    fn eval(&self, x: &Point4) -> Result<Sym2Jet> {
        (self.0)(x)
    }
}

/// The flat metric δ_ij.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl Sym2Field for Euclidean {
    fn eval(&self, _x: &Point4) -> Result<Sym2Jet> {
        Ok(Sym2Jet::identity())
    }
    fn validity(&self) -> Validity {
        Validity::Everywhere
    }
}

/// Pointwise sum of two fields.
pub struct SumField<A, B>(pub A, pub B);

impl<A: Sym2Field, B: Sym2Field> Sym2Field for SumField<A, B> {
    fn eval(&self, x: &Point4) -> Result<Sym2Jet> {
        Ok(self.0.eval(x)? + self.1.eval(x)?)
    }
}

/// A field multiplied by a constant.
pub struct ScaledField<A>(pub A, pub f64);

impl<A: Sym2Field> Sym2Field for ScaledField<A> {
    fn eval(&self, x: &Point4) -> Result<Sym2Jet> {
        Ok(self.0.eval(x)?.scale(self.1))
    }
}

/// The zero tensor field.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl Sym2Field for ZeroField {
    fn eval(&self, _x: &Point4) -> Result<Sym2Jet> {
        Ok(Sym2Jet::ZERO)
    }
    fn validity(&self) -> Validity {
        Validity::Everywhere
    }
}

/// Central-difference gradient of one component, used as a cross-check.
pub fn finite_difference_gradient<F: Sym2Field>(
    field: &F,
    x: &Point4,
    comp: usize,
    step: f64,
) -> Result<[f64; 4]> {
    let mut g = [0.0; 4];
    for (k, gk) in g.iter_mut().enumerate() {
        let mut xp = *x;
        let mut xm = *x;
        xp[k] += step;
        xm[k] -= step;
        let fp = field.value_at(&xp)?.comps[comp];
        let fm = field.value_at(&xm)?.comps[comp];
        *gk = (fp - fm) / (2.0 * step);
    }
    Ok(g)
}
