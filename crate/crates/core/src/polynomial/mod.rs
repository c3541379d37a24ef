//! Scaled monomials, quadrature, L² projections and exact edge interpolation.

pub mod lagrange;
pub mod monomial;
pub mod projection;
pub mod quadrature;

pub use monomial::{dim, exponents, index, Frame, Poly};
pub use quadrature::{ElementQuadrature, LineRule, TriangleRule};
