//! Numerical geometric functionals of parametrized immersed surfaces.
//!
//! Charts produce exact second-order jets ([`jets`]), pointwise curvature comes from
//! [`geometry`], and [`quad`] integrates the resulting densities over disks, annuli and the
//! plane. The remaining modules build concrete surfaces: closed-form examples
//! ([`surfaces`]), minimal surfaces from Weierstrass data ([`weierstrass`]), Möbius images
//! ([`mobius`]) and cutoff glueings ([`glue`]). [`harness`] assembles reports and checks.

pub mod error;
pub mod expr;
pub mod geometry;
pub mod glue;
pub mod harness;
pub mod jets;
pub mod mobius;
pub mod quad;
pub mod surfaces;
pub mod weierstrass;

pub use error::{GeomError, Result};
