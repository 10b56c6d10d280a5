//! Exact arithmetic for Newton polygons of Artin-Schreier curves and of
//! L-functions of exponential sums, together with generic Newton polygons,
//! global generic polynomials and Dwork-theoretic checks.

pub mod arith;
pub mod cyclo;
pub mod dwork;
pub mod fields;
pub mod genpoly;
pub mod gnp;
pub mod lfun;
pub mod multipoly;
pub mod polygon;
pub mod zeta;
