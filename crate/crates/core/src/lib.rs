//! Numerical toolkit for the Eguchi-Hanson gluing construction on T⁴/ℤ₂.

pub mod curvature;
pub mod eh;
pub mod error;
pub mod field;
pub mod flow;
pub mod glue;
pub mod heat;
pub mod jet;
pub mod lattice;
pub mod obstruction;
pub mod quadrature;
pub mod sum;
pub mod tensor;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use field::{Euclidean, Sym2Field, Validity};
pub use jet::{jet_radius, Jet1, Jet2, Point4};
pub use quadrature::{s3_quadrature, Estimate, QuadratureRule, RuleKind};
pub use tensor::{inner_product, Sym2, Sym2Jet};
