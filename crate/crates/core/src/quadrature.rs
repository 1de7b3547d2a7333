//! Adaptive Gauss–Legendre quadrature on panel decompositions.
//!
//! Every integral in the crate is reduced to `∫ g(v) dv` over a list of
//! panels, each carrying its own change of variable. Haar integrals over a
//! stretch of one half-line use `v = ±e^z`, which turns `dv/|v|` into `dz`.
//! Panels ending at 0 are integrated in `v` itself, and panels reaching to
//! infinity use `v = 1/z`.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, OnceLock, RwLock};

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{dedup_points, Interval};

/// Tolerances and rule sizes that govern every integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub base_order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 60,
            base_order: 15,
        }
    }
}

impl QuadratureSpec {
    pub fn new(
        rel_tol: f64,
        abs_tol: f64,
        max_subdivisions: usize,
        base_order: usize,
    ) -> Result<Self> {
        let spec = Self {
            rel_tol,
            abs_tol,
            max_subdivisions,
            base_order,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidQuadrature(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol >= 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidQuadrature(format!(
                "abs_tol must be nonnegative, got {}",
                self.abs_tol
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::InvalidQuadrature(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        if self.base_order < 2 {
            return Err(Error::InvalidQuadrature(
                "base_order must be at least 2".into(),
            ));
        }
        Ok(())
    }

    /// Spec for one level deeper in a nested integral: both tolerances divided by ten.
    pub fn tightened(&self) -> Self {
        Self {
            rel_tol: self.rel_tol / 10.0,
            abs_tol: self.abs_tol / 10.0,
            ..*self
        }
    }
}

/// Result of an integral together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate {
        value: Complex64::new(0.0, 0.0),
        error: 0.0,
    };
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn build_rule(order: usize) -> Rule {
    let gl = GaussLegendre::new(NonZeroUsize::new(order.max(1)).expect("nonzero order"));
    let (nodes, weights) = gl.iter().map(|(x, w)| (*x, *w)).unzip();
    Rule { nodes, weights }
}

/// Shared Gauss–Legendre rule of the given order.
pub fn gauss_legendre(order: usize) -> Arc<Rule> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(rule) = cache.read().expect("rule cache poisoned").get(&order) {
        return rule.clone();
    }
    let rule = Arc::new(build_rule(order));
    cache
        .write()
        .expect("rule cache poisoned")
        .entry(order)
        .or_insert(rule)
        .clone()
}

/// Change of variable used on a panel. `lo`/`hi` are in the reference coordinate `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Var {
    /// `v = z`.
    Linear,
    /// `v = ±e^z`.
    Log { negative: bool },
    /// `v = 1/z`.
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    pub var: Var,
}

impl Panel {
    pub fn linear(a: f64, b: f64) -> Self {
        let i = Interval::new(a, b);
        Self {
            lo: i.lo,
            hi: i.hi,
            var: Var::Linear,
        }
    }

    /// Panel between `a` and `b` (same sign, nonzero) in log coordinates.
    pub fn log(a: f64, b: f64) -> Self {
        debug_assert!(a * b > 0.0);
        let i = Interval::new(a.abs().ln(), b.abs().ln());
        Self {
            lo: i.lo,
            hi: i.hi,
            var: Var::Log { negative: a < 0.0 },
        }
    }

    /// Panel in the reciprocal variable `z = 1/v`, given `z`-endpoints.
    pub fn inverse(z0: f64, z1: f64) -> Self {
        let i = Interval::new(z0, z1);
        Self {
            lo: i.lo,
            hi: i.hi,
            var: Var::Inverse,
        }
    }

    #[inline]
    pub fn map(&self, z: f64) -> (f64, f64) {
        match self.var {
            Var::Linear => (z, 1.0),
            Var::Log { negative } => {
                let e = z.exp();
                (if negative { -e } else { e }, e)
            }
            Var::Inverse => (1.0 / z, 1.0 / (z * z)),
        }
    }

    fn halves(&self) -> (Panel, Panel) {
        let mid = 0.5 * (self.lo + self.hi);
        (Panel { hi: mid, ..*self }, Panel { lo: mid, ..*self })
    }

    /// Value-space endpoints `(v(lo), v(hi))`.
    pub fn value_range(&self) -> Interval {
        Interval::new(self.map(self.lo).0, self.map(self.hi).0)
    }

    /// Splits into pieces whose value-space width is at most `cap`.
    fn split_for_width(&self, cap: f64, out: &mut Vec<Panel>) {
        let n = match self.var {
            Var::Linear => ((self.hi - self.lo) / cap).ceil(),
            Var::Log { .. } => {
                let vmax = self.hi.exp();
                (vmax * (self.hi - self.lo) / cap).ceil()
            }
            Var::Inverse => 1.0,
        };
        let n = if n.is_finite() {
            (n as usize).max(1)
        } else {
            1
        };
        let step = (self.hi - self.lo) / n as f64;
        for k in 0..n {
            let lo = self.lo + step * k as f64;
            let hi = if k + 1 == n { self.hi } else { lo + step };
            out.push(Panel { lo, hi, ..*self });
        }
    }
}

/// Sum in a fixed binary tree, independent of thread scheduling.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

struct PanelResult {
    panel: Panel,
    value: Complex64,
    error: f64,
    splittable: bool,
}

fn eval_panel<F>(f: &F, panel: Panel, fine: &Rule, coarse: &Rule) -> Result<PanelResult>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let c = 0.5 * (panel.lo + panel.hi);
    let h = 0.5 * (panel.hi - panel.lo);
    let mut value = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (x, w) in fine.nodes.iter().zip(&fine.weights) {
        let (v, jac) = panel.map(c + h * x);
        let y = f(v)? * (jac * w * h);
        value += y;
        scale += y.norm();
    }
    let mut rough = Complex64::new(0.0, 0.0);
    for (x, w) in coarse.nodes.iter().zip(&coarse.weights) {
        let (v, jac) = panel.map(c + h * x);
        rough += f(v)? * (jac * w * h);
    }
    let raw = (value - rough).norm();
    let error = if scale > 0.0 {
        let e = scale * (200.0 * raw / scale).powf(1.5).min(1.0);
        e.max(50.0 * f64::EPSILON * scale)
    } else {
        raw
    };
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::NonConvergence {
            context: format!("non-finite integrand on [{}, {}]", panel.lo, panel.hi),
            estimate: value,
            error_estimate: f64::INFINITY,
        });
    }
    let splittable = h > 1e-13 * c.abs().max(1e-300) && h > 0.0;
    Ok(PanelResult {
        panel,
        value,
        error,
        splittable,
    })
}

/// Adaptive integral of a fallible integrand over the given panels.
pub fn integrate_with<F>(f: F, panels: &[Panel], spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let fine = gauss_legendre(spec.base_order);
    let coarse = gauss_legendre(spec.base_order.div_ceil(2));
    let mut results = Vec::with_capacity(panels.len() + 2 * spec.max_subdivisions);
    for p in panels.iter().filter(|p| p.hi > p.lo) {
        results.push(eval_panel(&f, *p, &fine, &coarse)?);
    }
    let mut splits = 0usize;
    loop {
        let values: Vec<Complex64> = results.iter().map(|r| r.value).collect();
        let total = pairwise_sum(&values);
        let error: f64 = results.iter().map(|r| r.error).sum();
        let target = spec.abs_tol.max(spec.rel_tol * total.norm());
        if error <= target {
            return Ok(Estimate {
                value: total,
                error,
            });
        }
        let worst = results
            .iter()
            .enumerate()
            .filter(|(_, r)| r.splittable)
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i);
        let Some(i) = worst.filter(|_| splits < spec.max_subdivisions) else {
            return Err(Error::NonConvergence {
                context: format!("{splits} subdivisions"),
                estimate: total,
                error_estimate: error,
            });
        };
        let (left, right) = results[i].panel.halves();
        results[i] = eval_panel(&f, left, &fine, &coarse)?;
        results.insert(i + 1, eval_panel(&f, right, &fine, &coarse)?);
        splits += 1;
    }
}

/// Adaptive integral of an infallible integrand.
pub fn integrate<F>(f: F, panels: &[Panel], spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64) -> Complex64,
{
    integrate_with(|v| Ok(f(v)), panels, spec)
}

/// Panels for `∫ f(v) dv/|v|` over a union of intervals of the real line.
///
/// Intervals are split at 0 and at every listed point in their interior.
/// Pieces away from 0 use log coordinates; a piece ending at 0 stays linear.
/// With `frequency > 0` every piece is cut to value-width at most
/// `0.5 / frequency`.
pub fn haar_line_panels(support: &[Interval], points: &[f64], frequency: f64) -> Vec<Panel> {
    let mut panels = Vec::new();
    for iv in support {
        let mut cuts: Vec<f64> = points
            .iter()
            .copied()
            .filter(|p| iv.contains_interior(*p))
            .collect();
        if iv.contains_interior(0.0) {
            cuts.push(0.0);
        }
        cuts.push(iv.lo);
        cuts.push(iv.hi);
        dedup_points(&mut cuts);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let panel = if a == 0.0 || b == 0.0 {
                Panel::linear(a, b)
            } else {
                Panel::log(a, b)
            };
            if frequency > 0.0 {
                panel.split_for_width(0.5 / frequency, &mut panels);
            } else {
                panels.push(panel);
            }
        }
    }
    panels
}

/// `∫ f(v) dv/|v|` over a union of intervals, see [`haar_line_panels`].
pub fn haar_line_integral<F>(
    f: F,
    support: &[Interval],
    points: &[f64],
    frequency: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let panels = haar_line_panels(support, points, frequency);
    if panels.is_empty() {
        return Ok(Estimate::ZERO);
    }
    integrate_with(|v| Ok(f(v)? / v.abs()), &panels, spec)
}

/// Fixed nodes on `[lo, hi]` from a Gauss–Legendre rule composed with the
/// smoothstep map `τ -> 3τ² - 2τ³`, which absorbs square-root endpoint behaviour.
pub fn smoothstep_nodes(lo: f64, hi: f64, order: usize) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(order);
    let len = hi - lo;
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(x, w)| {
            let tau = 0.5 * (x + 1.0);
            let s = tau * tau * (3.0 - 2.0 * tau);
            let ds = 6.0 * tau * (1.0 - tau);
            (lo + len * s, 0.5 * w * len * ds)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn log_panel_integrates_haar_measure() {
        let iv = [Interval::new(1.0, E)];
        let est =
            haar_line_integral(|_| Ok(Complex64::new(1.0, 0.0)), &iv, &[], 0.0, &spec()).unwrap();
        assert!((est.value.re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn panel_touching_zero_is_linear() {
        // ∫_0^1 v dv/|v| = 1
        let iv = [Interval::new(-1.0, 1.0)];
        let est = haar_line_integral(|v| Ok(Complex64::new(v.abs(), 0.0)), &iv, &[], 0.0, &spec())
            .unwrap();
        assert!((est.value.re - 2.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_kink() {
        let panels = [Panel::linear(0.0, 1.0)];
        let est = integrate(
            |v| Complex64::new((v - 1.0 / PI).abs(), 0.0),
            &panels,
            &spec(),
        )
        .unwrap();
        let exact = 0.5 * ((1.0 / PI).powi(2) + (1.0 - 1.0 / PI).powi(2));
        assert!((est.value.re - exact).abs() < 1e-10, "{}", est.value.re);
    }

    #[test]
    fn inverse_panel_reaches_infinity() {
        // ∫_1^∞ dv/v² = 1 via v = 1/z on (0, 1]
        let est = integrate(
            |v| Complex64::new(1.0 / (v * v), 0.0),
            &[Panel::inverse(0.0, 1.0)],
            &spec(),
        )
        .unwrap();
        assert!((est.value.re - 1.0).abs() < 1e-13);
    }

    #[test]
    fn subdivision_cap_reports_nonconvergence() {
        let tight = QuadratureSpec::new(1e-15, 0.0, 1, 2).unwrap();
        let r = integrate(
            |v| Complex64::new((50.0 * v).sin(), 0.0),
            &[Panel::linear(0.0, 10.0)],
            &tight,
        );
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn oscillation_cap_splits_panels() {
        let p = haar_line_panels(&[Interval::new(1.0, 2.0)], &[], 10.0);
        assert!(p.len() >= 20);
        for q in &p {
            assert!(q.value_range().width() <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn smoothstep_rule_is_exact_for_low_degree() {
        let s: f64 = smoothstep_nodes(2.0, 5.0, 8)
            .iter()
            .map(|(x, w)| w * x * x)
            .sum();
        assert!((s - (125.0 - 8.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(0.0, 0.0, 1, 2).is_err());
        assert!(QuadratureSpec::new(1e-3, -1.0, 1, 2).is_err());
        assert!(QuadratureSpec::new(1e-3, 0.0, 0, 2).is_err());
        assert!(QuadratureSpec::new(1e-3, 0.0, 1, 1).is_err());
        let t = QuadratureSpec::default().tightened();
        assert_eq!(t.rel_tol, 1e-10);
    }
}
