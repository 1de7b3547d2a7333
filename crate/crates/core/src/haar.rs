//! Compactly supported functions on the multiplicative group of the reals.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{dedup_points, Interval};
use crate::quadrature::{haar_line_integral, Estimate, QuadratureSpec};

type Evaluator = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Regularity of a function between its breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Smoothness {
    Indicator,
    PiecewiseSmooth,
    Smooth,
}

/// Half-line selector for the parity projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// A function on `ℝ^×` given by an evaluator and its support on each half-line.
///
/// [`HaarFunction::eval`] returns 0 outside the declared support without
/// calling the evaluator, so the support invariant holds by construction.
#[derive(Clone)]
pub struct HaarFunction {
    evaluator: Evaluator,
    support_pos: Option<Interval>,
    support_neg: Option<Interval>,
    smoothness: Smoothness,
    breakpoints: Vec<f64>,
    frequency: f64,
}

impl fmt::Debug for HaarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HaarFunction")
            .field("support_pos", &self.support_pos)
            .field("support_neg", &self.support_neg)
            .field("smoothness", &self.smoothness)
            .field("breakpoints", &self.breakpoints)
            .field("frequency", &self.frequency)
            .finish()
    }
}

fn check_side(iv: Option<Interval>, positive: bool) -> Result<Option<Interval>> {
    let Some(iv) = iv else { return Ok(None) };
    if !(iv.lo.is_finite() && iv.hi.is_finite()) {
        return Err(Error::InvalidSupport(format!("unbounded interval {iv:?}")));
    }
    let ok = if positive { iv.lo > 0.0 } else { iv.hi < 0.0 };
    if !ok {
        return Err(Error::InvalidSupport(format!(
            "interval {:?} must lie in the {} half-line",
            iv,
            if positive { "positive" } else { "negative" }
        )));
    }
    Ok((iv.lo < iv.hi).then_some(iv))
}

impl HaarFunction {
    /// Builds a function from an evaluator and its declared support.
    ///
    /// Breakpoints outside the support are rejected.
    pub fn new<F>(
        evaluator: F,
        support_pos: Option<Interval>,
        support_neg: Option<Interval>,
        smoothness: Smoothness,
        breakpoints: Vec<f64>,
    ) -> Result<Self>
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        let support_pos = check_side(support_pos, true)?;
        let support_neg = check_side(support_neg, false)?;
        let mut f = Self {
            evaluator: Arc::new(evaluator),
            support_pos,
            support_neg,
            smoothness,
            breakpoints,
            frequency: 0.0,
        };
        if let Some(b) = f.breakpoints.iter().find(|b| !f.in_support(**b)) {
            return Err(Error::InvalidSupport(format!(
                "breakpoint {b} outside the support"
            )));
        }
        dedup_points(&mut f.breakpoints);
        Ok(f)
    }

    /// Internal constructor for transforms that preserve the invariants.
    fn derived(
        evaluator: Evaluator,
        support_pos: Option<Interval>,
        support_neg: Option<Interval>,
        smoothness: Smoothness,
        breakpoints: Vec<f64>,
        frequency: f64,
    ) -> Self {
        let support_pos = support_pos.filter(|i| i.lo < i.hi);
        let support_neg = support_neg.filter(|i| i.lo < i.hi);
        let mut f = Self {
            evaluator,
            support_pos,
            support_neg,
            smoothness,
            breakpoints,
            frequency,
        };
        let keep: Vec<f64> = f
            .breakpoints
            .iter()
            .copied()
            .filter(|b| f.in_support_interior(*b))
            .collect();
        f.breakpoints = keep;
        dedup_points(&mut f.breakpoints);
        if f.is_zero() {
            f.frequency = 0.0;
        }
        f
    }

    pub fn zero() -> Self {
        Self::derived(
            Arc::new(|_| Complex64::new(0.0, 0.0)),
            None,
            None,
            Smoothness::Smooth,
            Vec::new(),
            0.0,
        )
    }

    /// Indicator of the closed interval between `a` and `b` (same sign).
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        let iv = one_sided(a, b)?;
        let (pos, neg) = split_side(iv);
        Self::new(
            |_| Complex64::new(1.0, 0.0),
            pos,
            neg,
            Smoothness::Indicator,
            Vec::new(),
        )
    }

    /// Piecewise-linear bump on `[a, b]` peaking with value 1 at the midpoint.
    pub fn hat(a: f64, b: f64) -> Result<Self> {
        let iv = one_sided(a, b)?;
        let m = 0.5 * (iv.lo + iv.hi);
        let half = 0.5 * iv.width();
        let (pos, neg) = split_side(iv);
        Self::new(
            move |t| Complex64::new(1.0 - (t - m).abs() / half, 0.0),
            pos,
            neg,
            Smoothness::PiecewiseSmooth,
            vec![m],
        )
    }

    /// Gaussian in `ln|t|` with centre `c` and width `w`, truncated to `[a, b]`.
    pub fn gauss_log(c: f64, w: f64, a: f64, b: f64) -> Result<Self> {
        if !(w > 0.0 && w.is_finite() && c.is_finite()) {
            return Err(Error::InvalidSupport(format!(
                "gauss-log needs finite centre and positive width, got c = {c}, w = {w}"
            )));
        }
        let iv = one_sided(a, b)?;
        let (pos, neg) = split_side(iv);
        Self::new(
            move |t| {
                let x = (t.abs().ln() - c) / w;
                Complex64::new((-0.5 * x * x).exp(), 0.0)
            },
            pos,
            neg,
            Smoothness::Smooth,
            Vec::new(),
        )
    }

    /// Value at `t`; 0 for `t = 0` and outside the support.
    #[inline]
    pub fn eval(&self, t: f64) -> Complex64 {
        if self.in_support(t) {
            (self.evaluator)(t)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    #[inline]
    pub fn in_support(&self, t: f64) -> bool {
        if t > 0.0 {
            self.support_pos.is_some_and(|i| i.contains(t))
        } else if t < 0.0 {
            self.support_neg.is_some_and(|i| i.contains(t))
        } else {
            false
        }
    }

    fn in_support_interior(&self, t: f64) -> bool {
        self.support_pos.is_some_and(|i| i.contains_interior(t))
            || self.support_neg.is_some_and(|i| i.contains_interior(t))
    }

    pub fn support_pos(&self) -> Option<Interval> {
        self.support_pos
    }

    pub fn support_neg(&self) -> Option<Interval> {
        self.support_neg
    }

    /// Support intervals, negative side first.
    pub fn supports(&self) -> Vec<Interval> {
        self.support_neg
            .into_iter()
            .chain(self.support_pos)
            .collect()
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Largest local frequency of oscillatory factors, in cycles per unit of `t`.
    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn is_zero(&self) -> bool {
        self.support_pos.is_none() && self.support_neg.is_none()
    }

    /// Support endpoints and interior breakpoints, sorted.
    pub fn panel_points(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self
            .supports()
            .iter()
            .flat_map(|i| i.endpoints())
            .chain(self.breakpoints.iter().copied())
            .collect();
        dedup_points(&mut p);
        p
    }

    /// Parity of a function supported on one half-line; the zero function counts as even.
    pub fn parity(&self) -> Result<Sign> {
        match (self.support_pos, self.support_neg) {
            (Some(_), Some(_)) => Err(Error::ParityUndefined),
            (None, Some(_)) => Ok(Sign::Minus),
            _ => Ok(Sign::Plus),
        }
    }

    /// `λ(r)f(t) = f(t/r)`.
    pub fn dilate(&self, r: f64) -> Result<Self> {
        if r == 0.0 || !r.is_finite() {
            return Err(Error::DegenerateDilation);
        }
        let inner = self.evaluator.clone();
        let f = Arc::new(move |t: f64| inner(t / r));
        Ok(self.mapped(f, |x| x * r, self.frequency / r.abs()))
    }

    /// `ρ(r)f(t) = f(tr)`.
    pub fn right_dilate(&self, r: f64) -> Result<Self> {
        if r == 0.0 || !r.is_finite() {
            return Err(Error::DegenerateDilation);
        }
        let inner = self.evaluator.clone();
        let f = Arc::new(move |t: f64| inner(t * r));
        Ok(self.mapped(f, |x| x / r, self.frequency * r.abs()))
    }

    /// Transports supports and breakpoints along a monotone map of each half-line.
    fn mapped(&self, evaluator: Evaluator, map: impl Fn(f64) -> f64, frequency: f64) -> Self {
        let mut pos = None;
        let mut neg = None;
        for iv in self.supports() {
            let image = Interval::new(map(iv.lo), map(iv.hi));
            if image.lo > 0.0 {
                pos = Some(image);
            } else {
                neg = Some(image);
            }
        }
        let bps = self.breakpoints.iter().map(|b| map(*b)).collect();
        Self::derived(evaluator, pos, neg, self.smoothness, bps, frequency)
    }

    /// Pointwise product; supports intersect per half-line.
    pub fn pointwise_product(&self, other: &HaarFunction) -> Self {
        let pos = match (self.support_pos, other.support_pos) {
            (Some(a), Some(b)) => a.intersect(&b),
            _ => None,
        };
        let neg = match (self.support_neg, other.support_neg) {
            (Some(a), Some(b)) => a.intersect(&b),
            _ => None,
        };
        let (f, g) = (self.evaluator.clone(), other.evaluator.clone());
        let bps = self
            .panel_points()
            .into_iter()
            .chain(other.panel_points())
            .collect();
        Self::derived(
            Arc::new(move |t| f(t) * g(t)),
            pos,
            neg,
            self.smoothness.min(other.smoothness),
            bps,
            self.frequency + other.frequency,
        )
    }

    /// `Sf(t) = sign(t) f(t)`.
    pub fn sign_multiply(&self) -> Self {
        let f = self.evaluator.clone();
        Self::derived(
            Arc::new(move |t| if t < 0.0 { -f(t) } else { f(t) }),
            self.support_pos,
            self.support_neg,
            self.smoothness,
            self.breakpoints.clone(),
            self.frequency,
        )
    }

    /// `Rf(t) = f(-t)`.
    pub fn reflect(&self) -> Self {
        let f = self.evaluator.clone();
        self.mapped(Arc::new(move |t| f(-t)), |x| -x, self.frequency)
    }

    /// `Jf(t) = f(1/t)`.
    pub fn invert_variable(&self) -> Self {
        let f = self.evaluator.clone();
        let tmax = self
            .supports()
            .iter()
            .map(|i| i.lo.abs().max(i.hi.abs()))
            .fold(0.0, f64::max);
        // the image support is 1/supp, so the local frequency there is frequency · tmax²
        let freq = self.frequency * tmax * tmax;
        self.mapped(Arc::new(move |t| f(1.0 / t)), |x| 1.0 / x, freq)
    }

    /// Complex conjugate.
    pub fn conj(&self) -> Self {
        let f = self.evaluator.clone();
        Self::derived(
            Arc::new(move |t| f(t).conj()),
            self.support_pos,
            self.support_neg,
            self.smoothness,
            self.breakpoints.clone(),
            self.frequency,
        )
    }

    /// Multiplication by a complex constant.
    pub fn scale(&self, c: Complex64) -> Self {
        if c == Complex64::new(0.0, 0.0) {
            return Self::zero();
        }
        let f = self.evaluator.clone();
        Self::derived(
            Arc::new(move |t| c * f(t)),
            self.support_pos,
            self.support_neg,
            self.smoothness,
            self.breakpoints.clone(),
            self.frequency,
        )
    }

    /// Pointwise sum; supports become per-side hulls and the other
    /// summand's support endpoints become breakpoints.
    pub fn add(&self, other: &HaarFunction) -> Self {
        let hull = |a: Option<Interval>, b: Option<Interval>| match (a, b) {
            (Some(a), Some(b)) => Some(Interval::new(a.lo.min(b.lo), a.hi.max(b.hi))),
            (a, b) => a.or(b),
        };
        let (fa, fb) = (self.clone(), other.clone());
        let bps = self
            .panel_points()
            .into_iter()
            .chain(other.panel_points())
            .collect();
        Self::derived(
            Arc::new(move |t| fa.eval(t) + fb.eval(t)),
            hull(self.support_pos, other.support_pos),
            hull(self.support_neg, other.support_neg),
            self.smoothness
                .min(other.smoothness)
                .min(Smoothness::PiecewiseSmooth),
            bps,
            self.frequency.max(other.frequency),
        )
    }

    /// `P±`: restriction to one half-line.
    pub fn parity_project(&self, sign: Sign) -> Self {
        let (pos, neg) = match sign {
            Sign::Plus => (self.support_pos, None),
            Sign::Minus => (None, self.support_neg),
        };
        Self::derived(
            self.evaluator.clone(),
            pos,
            neg,
            self.smoothness,
            self.breakpoints.clone(),
            self.frequency,
        )
    }

    /// Multiplication by `e^{2πi b t}`.
    pub fn modulate(&self, b: f64) -> Self {
        if b == 0.0 {
            return self.clone();
        }
        let f = self.evaluator.clone();
        let w = 2.0 * std::f64::consts::PI * b;
        Self::derived(
            Arc::new(move |t| Complex64::from_polar(1.0, w * t) * f(t)),
            self.support_pos,
            self.support_neg,
            self.smoothness.min(Smoothness::PiecewiseSmooth),
            self.breakpoints.clone(),
            self.frequency + b.abs(),
        )
    }

    /// `∫ f(t) dt/|t|` with its error estimate.
    pub fn haar_integral_estimate(&self, q: &QuadratureSpec) -> Result<Estimate> {
        let support = self.supports();
        if support.is_empty() {
            return Ok(Estimate::ZERO);
        }
        let f = self.evaluator.clone();
        haar_line_integral(|t| Ok(f(t)), &support, &self.breakpoints, self.frequency, q)
    }

    /// `∫ f(t) dt/|t|`.
    pub fn haar_integral(&self, q: &QuadratureSpec) -> Result<Complex64> {
        Ok(self.haar_integral_estimate(q)?.value)
    }

    /// `(∫ |f|^p dt/|t|)^{1/p}`.
    pub fn lp_norm(&self, p: f64, q: &QuadratureSpec) -> Result<f64> {
        Ok(self.lp_power(p, q)?.powf(p.recip()))
    }

    /// `∫ |f|^p dt/|t|`.
    pub fn lp_power(&self, p: f64, q: &QuadratureSpec) -> Result<f64> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidExponent(p));
        }
        let support = self.supports();
        if support.is_empty() {
            return Ok(0.0);
        }
        let f = self.evaluator.clone();
        let est = haar_line_integral(
            |t| Ok(Complex64::new(f(t).norm().powf(p), 0.0)),
            &support,
            &self.breakpoints,
            0.0,
            q,
        )?;
        Ok(est.value.re.max(0.0))
    }

    /// `∫ f·g dt/|t|`, or `∫ f·conj(g) dt/|t|` when `conjugate_second`.
    pub fn pairing(
        &self,
        g: &HaarFunction,
        conjugate_second: bool,
        q: &QuadratureSpec,
    ) -> Result<Complex64> {
        let g = if conjugate_second {
            g.conj()
        } else {
            g.clone()
        };
        self.pointwise_product(&g).haar_integral(q)
    }
}

fn one_sided(a: f64, b: f64) -> Result<Interval> {
    let iv = Interval::new(a, b);
    if !(iv.lo.is_finite() && iv.hi.is_finite()) || iv.lo >= iv.hi {
        return Err(Error::InvalidSupport(format!(
            "need a nondegenerate bounded interval, got [{a}, {b}]"
        )));
    }
    if iv.lo <= 0.0 && iv.hi >= 0.0 {
        return Err(Error::InvalidSupport(format!(
            "interval [{a}, {b}] must exclude 0"
        )));
    }
    Ok(iv)
}

fn split_side(iv: Interval) -> (Option<Interval>, Option<Interval>) {
    if iv.lo > 0.0 {
        (Some(iv), None)
    } else {
        (None, Some(iv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn ind(a: f64, b: f64) -> HaarFunction {
        HaarFunction::indicator(a, b).unwrap()
    }

    #[test]
    fn haar_integral_examples() {
        assert!((ind(1.0, E).haar_integral(&q()).unwrap().re - 1.0).abs() < 1e-14);
        assert_eq!(HaarFunction::zero().haar_integral(&q()).unwrap().re, 0.0);
        let gamma1 = ind(E.recip(), E);
        assert!((gamma1.haar_integral(&q()).unwrap().re - 2.0).abs() < 1e-14);
    }

    #[test]
    fn dilation_examples() {
        let f = ind(1.0, 2.0);
        assert_eq!(
            f.dilate(3.0).unwrap().support_pos(),
            Some(Interval::new(3.0, 6.0))
        );
        let g = f.dilate(-1.0).unwrap();
        assert_eq!(g.support_neg(), Some(Interval::new(-2.0, -1.0)));
        assert!(g.support_pos().is_none());
        assert_eq!(
            f.right_dilate(2.0).unwrap().support_pos(),
            Some(Interval::new(0.5, 1.0))
        );
        assert_eq!(f.dilate(0.0).unwrap_err(), Error::DegenerateDilation);
        assert_eq!(f.right_dilate(0.0).unwrap_err(), Error::DegenerateDilation);
    }

    #[test]
    fn product_examples() {
        let p = ind(1.0, 3.0).pointwise_product(&ind(2.0, 4.0));
        assert_eq!(p.support_pos(), Some(Interval::new(2.0, 3.0)));
        assert!(ind(1.0, 2.0).pointwise_product(&ind(3.0, 4.0)).is_zero());
        assert!(ind(1.0, 2.0)
            .pointwise_product(&HaarFunction::zero())
            .is_zero());
    }

    #[test]
    fn involutions_and_projections() {
        let f = ind(1.0, 2.0).add(&ind(-1.0, -0.5));
        assert_eq!(f.sign_multiply().eval(-0.7).re, -1.0);
        assert_eq!(f.sign_multiply().eval(1.5).re, 1.0);
        assert_eq!(
            ind(1.0, 2.0).reflect().support_neg(),
            Some(Interval::new(-2.0, -1.0))
        );
        assert_eq!(
            ind(1.0, 2.0).invert_variable().support_pos(),
            Some(Interval::new(0.5, 1.0))
        );
        let plus = f.parity_project(Sign::Plus);
        assert_eq!(plus.support_pos(), Some(Interval::new(1.0, 2.0)));
        assert!(plus.support_neg().is_none());
        assert!(plus.parity_project(Sign::Minus).is_zero());
        assert_eq!(f.parity(), Err(Error::ParityUndefined));
    }

    #[test]
    fn norms_and_pairings() {
        for n in 1..5 {
            let n = n as f64;
            let g = ind((-n).exp(), n.exp());
            for p in [1.0, 1.5, 2.0, 4.0] {
                let v = g.lp_norm(p, &q()).unwrap();
                assert!((v - (2.0 * n).powf(1.0 / p)).abs() < 1e-13 * v);
            }
        }
        assert_eq!(
            ind(1.0, 2.0).lp_norm(0.5, &q()).unwrap_err(),
            Error::InvalidExponent(0.5)
        );
        let a = ind(1.0, E * E);
        let b = ind(E, E * E * E);
        assert!((a.pairing(&b, true, &q()).unwrap().re - 1.0).abs() < 1e-14);
        assert_eq!(
            ind(1.0, 2.0)
                .pairing(&ind(3.0, 4.0), false, &q())
                .unwrap()
                .re,
            0.0
        );
    }

    #[test]
    fn invalid_supports_rejected() {
        assert!(HaarFunction::indicator(-1.0, 1.0).is_err());
        assert!(HaarFunction::indicator(1.0, 1.0).is_err());
        assert!(HaarFunction::new(
            |_| Complex64::new(1.0, 0.0),
            Some(Interval::new(1.0, 2.0)),
            None,
            Smoothness::Indicator,
            vec![3.0]
        )
        .is_err());
    }

    #[test]
    fn hat_and_gauss_log_values() {
        let h = HaarFunction::hat(1.0, 3.0).unwrap();
        assert_eq!(h.eval(2.0).re, 1.0);
        assert_eq!(h.eval(1.5).re, 0.5);
        assert_eq!(h.breakpoints(), &[2.0]);
        // (t-1) on [1,2] and (3-t) on [2,3]
        let exact = (1.0 - 2f64.ln()) + (3.0 * 1.5f64.ln() - 1.0);
        assert!((h.haar_integral(&q()).unwrap().re - exact).abs() < 1e-13);
        let g = HaarFunction::gauss_log(0.0, 0.5, 0.5, 2.0).unwrap();
        assert_eq!(g.eval(1.0).re, 1.0);
    }
}
