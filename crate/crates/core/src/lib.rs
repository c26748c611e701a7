//! Exact polyhedral engine for dynamic multi-currency coherent risk measures
//! on finite scenario trees.
//!
//! Everything is computed in exact rational arithmetic. Claim space for a
//! tree with `L` leaves and `d + 1` numéraires is `Q^{L(d+1)}`, indexed
//! leaf-major (`ω·(d+1) + i`) and paired with the plain Euclidean product.
//! Dual elements are therefore stored in mass coordinates `P(ω)Z(ω)`.

pub mod cones;
pub mod dd;
pub mod ftap;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod market;
pub mod rational;
pub mod risk;
pub mod sample;
pub mod tree;
