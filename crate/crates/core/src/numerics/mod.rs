//! Hand-written numerical kernels shared by the geometry modules.

pub mod diff;
pub mod ode;
pub mod quadrature;
pub mod roots;
