//! Dual convolution on trace-class kernels over `L²(ℝ^×, dt/|t|)`.
//!
//! Functions on `ℝ^×` are exact evaluators with declared supports
//! ([`HaarFunction`]); kernels are finite sums of elementary tensors or lazy
//! products ([`Kernel`]). Every integral runs through the adaptive panel
//! engine in [`quadrature`], with panel boundaries placed at the exact
//! breakpoints that the support bookkeeping provides.

pub mod coefficients;
pub mod derivation;
pub mod dual_conv;
pub mod error;
pub mod family;
pub mod haar;
pub mod interval;
pub mod lp;
pub mod operators;
pub mod quadrature;
mod ray;
pub mod report;
pub mod suite;

pub use coefficients::{
    coeff_eval, group_inv, group_mul, pi_act, CoefficientFunction, GroupElement,
};
pub use dual_conv::{dc_kernel, dc_kernel_hform, u_support, DcForm, HGrid, LazyDCKernel};
pub use error::{Error, Result};
pub use haar::{HaarFunction, Sign, Smoothness};
pub use interval::Interval;
pub use operators::{
    l2_kernel_norm, FiniteRankKernel, Kernel, PairingMode, RankOneTensor, SupportBox,
};
pub use quadrature::{Estimate, QuadratureSpec};
pub use ray::{RayKernel, RayProfile};
pub use report::Report;
