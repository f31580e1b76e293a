//! Class numbers, Tamagawa numbers and local index computations for CM tori
//! attached to products of imaginary quadratic and biquadratic CM fields.

pub mod apps;
pub mod arith;
pub mod error;
pub mod padic;
pub mod quadratic;
pub mod torus;

pub use error::{Error, Result};
pub use quadratic::{
    BiquadraticCM, CmField, QuadraticField, ReducedForm, Signature, SplittingType,
};
pub use padic::{LocalBase, LocalQuadExtension, TruncatedLocalElement, TruncatedRing, Zeta8Subfield};
pub use torus::{
    CMAlgebraSpec, ClassNumberReport, Estimate, GlobalIndex, LocalIndexReport, Overrides,
    RamificationProfile,
};
pub use apps::{IsogenyCounts, LevelData, ShimuraInput};
