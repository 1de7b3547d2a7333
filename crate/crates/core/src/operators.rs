//! Finite-rank kernels on `ℝ^× × ℝ^×` and the kernel enum shared with lazy products.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dual_conv::LazyDCKernel;
use crate::error::{Error, Result};
use crate::haar::{HaarFunction, Sign};
use crate::interval::{merge, Interval};
use crate::quadrature::{Estimate, QuadratureSpec};
use crate::ray::{self, RayKernel, RayPoint, RayProfile};

/// How the right slot of a tensor enters the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingMode {
    /// `T(s,t) = ξ(s) conj(η(t))`.
    Hilbert,
    /// `T(s,t) = ξ(s) η(t)`.
    Bilinear,
}

/// Rectangle `s × t` containing part of a kernel's support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub s: Interval,
    pub t: Interval,
}

impl SupportBox {
    pub fn contains(&self, s: f64, t: f64) -> bool {
        self.s.contains(s) && self.t.contains(t)
    }
}

/// Elementary tensor `ξ ⊗ η`.
#[derive(Debug, Clone)]
pub struct RankOneTensor {
    pub left: HaarFunction,
    pub right: HaarFunction,
    pub mode: PairingMode,
}

impl RankOneTensor {
    pub fn new(left: HaarFunction, right: HaarFunction, mode: PairingMode) -> Self {
        Self { left, right, mode }
    }

    pub fn hilbert(left: HaarFunction, right: HaarFunction) -> Self {
        Self::new(left, right, PairingMode::Hilbert)
    }

    pub fn bilinear(left: HaarFunction, right: HaarFunction) -> Self {
        Self::new(left, right, PairingMode::Bilinear)
    }

    /// The function multiplying `ξ(s)` in the kernel: `conj(η)` or `η`.
    pub fn right_effective(&self) -> HaarFunction {
        match self.mode {
            PairingMode::Hilbert => self.right.conj(),
            PairingMode::Bilinear => self.right.clone(),
        }
    }

    pub fn eval(&self, s: f64, t: f64) -> Complex64 {
        let r = self.right.eval(t);
        let r = match self.mode {
            PairingMode::Hilbert => r.conj(),
            PairingMode::Bilinear => r,
        };
        self.left.eval(s) * r
    }

    pub fn is_zero(&self) -> bool {
        self.left.is_zero() || self.right.is_zero()
    }

    pub fn support_boxes(&self) -> Vec<SupportBox> {
        let mut out = Vec::new();
        for s in self.left.supports() {
            for t in self.right.supports() {
                out.push(SupportBox { s, t });
            }
        }
        out
    }

    /// Ratios `s/t` over the support.
    pub fn alpha_support(&self) -> Vec<Interval> {
        let mut out = Vec::new();
        for l in self.left.supports() {
            for r in self.right.supports() {
                out.push(l.div(&r));
            }
        }
        merge(out)
    }

    /// Ratios of panel points, where the ray profile changes shape.
    pub fn alpha_hints(&self) -> Vec<f64> {
        let rp = self.right.panel_points();
        self.left
            .panel_points()
            .iter()
            .flat_map(|p| rp.iter().map(move |q| p / q))
            .collect()
    }

    pub(crate) fn ray_points(&self) -> Vec<RayPoint> {
        let mut pts: Vec<RayPoint> = self
            .left
            .panel_points()
            .into_iter()
            .map(|p| RayPoint { a: p, b: 0.0 })
            .collect();
        pts.extend(
            self.right
                .panel_points()
                .into_iter()
                .map(|q| RayPoint { a: 0.0, b: q }),
        );
        pts
    }

    /// Support and panel points of `r -> T(αr, r)`.
    pub(crate) fn ray_profile(&self, alpha: f64) -> RayProfile {
        let mut support = Vec::new();
        for l in self.left.supports() {
            let l = l.scale(alpha.recip());
            for r in self.right.supports() {
                if let Some(i) = l.intersect(&r) {
                    support.push(i);
                }
            }
        }
        let points = self
            .left
            .panel_points()
            .into_iter()
            .map(|p| p / alpha)
            .chain(self.right.panel_points())
            .collect();
        RayProfile::new(merge(support), points)
    }
}

/// Finite sum of elementary tensors sharing one pairing mode.
#[derive(Debug, Clone)]
pub struct FiniteRankKernel {
    terms: Vec<RankOneTensor>,
    mode: PairingMode,
    exponent: f64,
    projective_bound: f64,
}

impl FiniteRankKernel {
    /// Kernel with `L²` bookkeeping for the projective bound.
    pub fn new(terms: Vec<RankOneTensor>, mode: PairingMode, q: &QuadratureSpec) -> Result<Self> {
        Self::with_exponent(terms, mode, 2.0, q)
    }

    /// Kernel whose projective bound uses `‖ξ‖_p ‖η‖_q`, `q = p/(p-1)`.
    pub fn with_exponent(
        terms: Vec<RankOneTensor>,
        mode: PairingMode,
        p: f64,
        q: &QuadratureSpec,
    ) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidExponent(p));
        }
        if terms.iter().any(|t| t.mode != mode) {
            return Err(Error::ModeMismatch);
        }
        let mut k = Self {
            terms,
            mode,
            exponent: p,
            projective_bound: 0.0,
        };
        k.projective_bound = k.compute_bound(q)?;
        Ok(k)
    }

    pub fn zero(mode: PairingMode) -> Self {
        Self {
            terms: Vec::new(),
            mode,
            exponent: 2.0,
            projective_bound: 0.0,
        }
    }

    fn compute_bound(&self, q: &QuadratureSpec) -> Result<f64> {
        let p = self.exponent;
        let pc = p / (p - 1.0);
        let mut s = 0.0;
        for t in &self.terms {
            s += t.left.lp_norm(p, q)? * t.right.lp_norm(pc, q)?;
        }
        Ok(s)
    }

    pub fn terms(&self) -> &[RankOneTensor] {
        &self.terms
    }

    pub fn mode(&self) -> PairingMode {
        self.mode
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn projective_bound(&self) -> f64 {
        self.projective_bound
    }

    /// Sum of the term kernels, in term order.
    pub fn eval(&self, s: f64, t: f64) -> Complex64 {
        self.terms
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, term| acc + term.eval(s, t))
    }

    /// `⊤*`: every `ξ ⊗ η` becomes `conj(η) ⊗ conj(ξ)`.
    pub fn transpose_predual(&self) -> Result<Self> {
        if self.mode != PairingMode::Hilbert {
            return Err(Error::ModeMismatch);
        }
        Ok(Self {
            terms: self
                .terms
                .iter()
                .map(|t| RankOneTensor::hilbert(t.right.conj(), t.left.conj()))
                .collect(),
            ..self.clone()
        })
    }

    /// `P_diag`: every `ξ ⊗ η` becomes `P⁺ξ ⊗ P⁺η + P⁻ξ ⊗ P⁻η`.
    pub fn parity_compress(&self, q: &QuadratureSpec) -> Result<Self> {
        let mut terms = Vec::new();
        for t in &self.terms {
            for sign in [Sign::Plus, Sign::Minus] {
                let l = t.left.parity_project(sign);
                let r = t.right.parity_project(sign);
                if !l.is_zero() && !r.is_zero() {
                    terms.push(RankOneTensor::new(l, r, t.mode));
                }
            }
        }
        Self::with_exponent(terms, self.mode, self.exponent, q)
    }
}

/// A kernel that can be evaluated pointwise: finite rank or a lazy product.
#[derive(Debug, Clone)]
pub enum Kernel {
    Finite(Arc<FiniteRankKernel>),
    DualConv(Arc<LazyDCKernel>),
}

impl From<FiniteRankKernel> for Kernel {
    fn from(k: FiniteRankKernel) -> Self {
        Kernel::Finite(Arc::new(k))
    }
}

impl From<LazyDCKernel> for Kernel {
    fn from(k: LazyDCKernel) -> Self {
        Kernel::DualConv(Arc::new(k))
    }
}

impl Kernel {
    /// Single-term finite kernel.
    pub fn rank_one(t: RankOneTensor, q: &QuadratureSpec) -> Result<Self> {
        let mode = t.mode;
        Ok(FiniteRankKernel::new(vec![t], mode, q)?.into())
    }

    pub fn mode(&self) -> PairingMode {
        match self {
            Kernel::Finite(k) => k.mode(),
            Kernel::DualConv(k) => k.mode(),
        }
    }

    /// Number of nested products.
    pub fn depth(&self) -> usize {
        match self {
            Kernel::Finite(_) => 0,
            Kernel::DualConv(k) => k.depth(),
        }
    }

    pub fn eval(&self, s: f64, t: f64) -> Result<Complex64> {
        match self {
            Kernel::Finite(k) => Ok(k.eval(s, t)),
            Kernel::DualConv(k) => k.eval(s, t),
        }
    }

    pub fn support_boxes(&self) -> Vec<SupportBox> {
        match self {
            Kernel::Finite(k) => k.terms().iter().flat_map(|t| t.support_boxes()).collect(),
            Kernel::DualConv(k) => k.support_boxes().to_vec(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.support_boxes().is_empty()
    }

    pub fn alpha_support(&self) -> Vec<Interval> {
        match self {
            Kernel::Finite(k) => merge(k.terms().iter().flat_map(|t| t.alpha_support()).collect()),
            Kernel::DualConv(k) => k.alpha_support(),
        }
    }

    pub fn alpha_hints(&self) -> Vec<f64> {
        match self {
            Kernel::Finite(k) => k.terms().iter().flat_map(|t| t.alpha_hints()).collect(),
            Kernel::DualConv(k) => k.alpha_hints(),
        }
    }

    pub(crate) fn ray_points(&self) -> Vec<RayPoint> {
        match self {
            Kernel::Finite(k) => k.terms().iter().flat_map(|t| t.ray_points()).collect(),
            Kernel::DualConv(k) => k.ray_points(),
        }
    }

    /// Restriction `r -> K(αr, r)` with precomputed supports and panel points.
    pub fn along(&self, alpha: f64) -> RayKernel {
        match self {
            Kernel::Finite(k) => RayKernel::terms(k, alpha),
            Kernel::DualConv(k) => k.along(alpha),
        }
    }

    /// `(∬ |T|² ds dt/(|s||t|))^{1/2}`.
    pub fn l2_norm(&self, q: &QuadratureSpec) -> Result<f64> {
        let est = ray::double_integral(
            &[(self, false)],
            |_, _, v| Complex64::new(v[0].norm_sqr(), 0.0),
            q,
        )?;
        Ok(est.value.re.max(0.0).sqrt())
    }

    /// Hilbert–Schmidt norm with its quadrature estimate of the squared norm.
    pub fn l2_norm_sq_estimate(&self, q: &QuadratureSpec) -> Result<Estimate> {
        ray::double_integral(
            &[(self, false)],
            |_, _, v| Complex64::new(v[0].norm_sqr(), 0.0),
            q,
        )
    }
}

/// `l2_kernel_norm` for any kernel.
pub fn l2_kernel_norm(k: &Kernel, q: &QuadratureSpec) -> Result<f64> {
    k.l2_norm(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ind(a: f64, b: f64) -> HaarFunction {
        HaarFunction::indicator(a, b).unwrap()
    }

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn rank_one_eval_examples() {
        let t = RankOneTensor::hilbert(ind(1.0, 2.0), ind(1.0, 2.0));
        assert_eq!(t.eval(1.5, 1.5).re, 1.0);
        assert_eq!(t.eval(3.0, 1.5).re, 0.0);
        let eta = ind(1.0, 2.0).modulate(0.3);
        let t = RankOneTensor::hilbert(ind(1.0, 2.0), eta.clone());
        assert_eq!(t.eval(1.2, 1.7), eta.eval(1.7).conj());
        let b = RankOneTensor::bilinear(ind(1.0, 2.0), eta.clone());
        assert_eq!(b.eval(1.2, 1.7), eta.eval(1.7));
    }

    #[test]
    fn transpose_and_compress() {
        let t = RankOneTensor::hilbert(ind(1.0, 2.0), ind(3.0, 5.0));
        let k = FiniteRankKernel::new(vec![t], PairingMode::Hilbert, &q()).unwrap();
        let tt = k.transpose_predual().unwrap();
        assert_eq!(
            tt.terms()[0].left.support_pos(),
            Some(Interval::new(3.0, 5.0))
        );
        assert_eq!(tt.projective_bound(), k.projective_bound());
        let back = tt.transpose_predual().unwrap();
        assert_eq!(back.eval(1.5, 4.0), k.eval(1.5, 4.0));

        let cross = RankOneTensor::hilbert(ind(1.0, 2.0), ind(-2.0, -1.0));
        let c = FiniteRankKernel::new(vec![cross], PairingMode::Hilbert, &q()).unwrap();
        assert!(c.parity_compress(&q()).unwrap().terms().is_empty());
        let same = k.parity_compress(&q()).unwrap();
        assert_eq!(same.terms().len(), 1);

        let b = FiniteRankKernel::new(
            vec![RankOneTensor::bilinear(ind(1.0, 2.0), ind(1.0, 2.0))],
            PairingMode::Bilinear,
            &q(),
        )
        .unwrap();
        assert_eq!(b.transpose_predual().unwrap_err(), Error::ModeMismatch);
    }

    #[test]
    fn l2_norm_of_rank_one_factorises() {
        let t = RankOneTensor::hilbert(
            ind(1.0, 2.0).add(&ind(-3.0, -1.5)),
            HaarFunction::hat(0.5, 4.0).unwrap(),
        );
        let k = Kernel::rank_one(t.clone(), &q()).unwrap();
        let expected = t.left.lp_norm(2.0, &q()).unwrap() * t.right.lp_norm(2.0, &q()).unwrap();
        let got = k.l2_norm(&q()).unwrap();
        assert!(
            (got - expected).abs() < 1e-9 * expected,
            "{got} vs {expected}"
        );
    }

    #[test]
    fn l2_norm_doubles_for_repeated_term() {
        let t = RankOneTensor::hilbert(ind(1.0, 2.0), ind(1.0, 3.0));
        let k: Kernel = FiniteRankKernel::new(vec![t.clone(), t], PairingMode::Hilbert, &q())
            .unwrap()
            .into();
        let expected = 2.0 * 2f64.ln().sqrt() * 3f64.ln().sqrt();
        assert!((k.l2_norm(&q()).unwrap() - expected).abs() < 1e-9 * expected);
        let z: Kernel = FiniteRankKernel::zero(PairingMode::Hilbert).into();
        assert_eq!(z.l2_norm(&q()).unwrap(), 0.0);
    }

    #[test]
    fn mixed_modes_rejected() {
        let a = RankOneTensor::hilbert(ind(1.0, 2.0), ind(1.0, 2.0));
        let b = RankOneTensor::bilinear(ind(1.0, 2.0), ind(1.0, 2.0));
        assert_eq!(
            FiniteRankKernel::new(vec![a, b], PairingMode::Hilbert, &q()).unwrap_err(),
            Error::ModeMismatch
        );
    }
}
