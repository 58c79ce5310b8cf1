//! Numerical verification toolkit for harmonic maps from the plane to the
//! two-sphere and the quantitative stability of the degree-2 family.
//!
//! The algebraic and integration layers ([`jet`], [`rational_maps`],
//! [`sphere_fields`], [`quadrature`], [`kernel_basis`]) are generic over the
//! floating point type. The measurement pipelines ([`counterexample`],
//! [`projector`]) and the linear algebra they need work in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::suspicious_arithmetic_impl)]

pub mod asymptotics;
pub mod counterexample;
pub mod error;
pub mod jet;
pub mod kernel_basis;
pub mod projector;
pub mod quadrature;
pub mod rational_maps;
pub mod scalar;
pub mod sphere_fields;
pub mod summation;

pub use error::{Error, Result};
pub use jet::{Jet, Vec3, VecJet};
pub use quadrature::{Estimate, QuadScheme};
pub use rational_maps::{ComplexPoly, Moebius, Orientation, RationalMap};
pub use scalar::Real;
pub use sphere_fields::Field;

pub use num_complex::Complex;

/// Double precision complex number.
pub type C64 = Complex<f64>;
/// Double precision complex polynomial.
pub type Poly64 = ComplexPoly<f64>;
/// Double precision rational map.
pub type Map64 = RationalMap<f64>;
/// Double precision quadrature scheme.
pub type Scheme64 = QuadScheme<f64>;
/// Double precision parameter vector of the degree-2 family.
pub type Alpha64 = kernel_basis::ParamVec<f64>;
/// Single precision rational map.
pub type Map32 = RationalMap<f32>;
