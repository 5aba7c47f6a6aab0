//! Exact solutions, numerical solvers and cross-checks for the Liouville
//! equations `u_xy = K e^{au}`, `Δu = K e^{au}` and the log form
//! `(1/T)·∂²(log T)/∂x∂y = K`.

pub mod action;
pub mod cli;
pub mod closedform;
pub mod convergence;
pub mod elliptic;
pub mod expr;
pub mod fields;
pub mod hyperbolic;
pub mod linalg;
