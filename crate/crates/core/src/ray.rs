//! Kernels restricted to rays `{(αr, r)}` through the origin.
//!
//! Dual convolution never mixes rays: `(T₁⊠T₂)(αr, r)` only involves
//! `T₁(αx, x)` and `T₂(αy, y)` with `x + y = r`. On a ray, the support of a
//! product is the sumset of the factor supports and its kinks sit at sums of
//! factor kinks, so exact panel points propagate through any nesting.
//! Two-dimensional Haar integrals split the same way, since
//! `ds dt/(|s||t|) = dα dr/(|α||r|)`.

use num_complex::Complex64;

use crate::dual_conv::DcForm;
use crate::error::Result;
use crate::haar::HaarFunction;
use crate::interval::{dedup_points, intersect_all, merge, Interval};
use crate::operators::{FiniteRankKernel, Kernel};
use crate::quadrature::{haar_line_integral, integrate_with, Estimate, Panel, QuadratureSpec};

/// A panel point that moves with the ray slope: `a/α + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RayPoint {
    pub a: f64,
    pub b: f64,
}

impl RayPoint {
    pub fn at(&self, alpha: f64) -> f64 {
        self.a / alpha + self.b
    }

    pub fn negated(&self) -> Self {
        Self {
            a: -self.a,
            b: -self.b,
        }
    }
}

pub(crate) fn dedup_ray_points(points: &mut Vec<RayPoint>) {
    points.sort_by(|p, q| p.a.total_cmp(&q.a).then(p.b.total_cmp(&q.b)));
    points.dedup();
}

/// Support of a ray restriction and the points where it may be non-smooth.
#[derive(Debug, Clone, PartialEq)]
pub struct RayProfile {
    pub support: Vec<Interval>,
    pub points: Vec<f64>,
}

impl RayProfile {
    /// Keeps the points lying in the closed support and adds the support endpoints.
    pub fn new(support: Vec<Interval>, mut points: Vec<f64>) -> Self {
        points.retain(|p| support.iter().any(|i| i.contains(*p)));
        points.extend(support.iter().flat_map(|i| i.endpoints()));
        dedup_points(&mut points);
        Self { support, points }
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Profile of `r -> f(-r)`.
    pub fn reflected(&self) -> Self {
        let support = merge(self.support.iter().map(|i| i.scale(-1.0)).collect());
        let mut points: Vec<f64> = self.points.iter().map(|p| -p).collect();
        dedup_points(&mut points);
        Self { support, points }
    }

    pub fn has_point_near(&self, v: f64) -> bool {
        let tol = 1e-9 * v.abs().max(1.0);
        self.points.iter().any(|p| (p - v).abs() <= tol)
    }
}

#[derive(Debug, Clone)]
enum Body {
    Terms(Vec<(HaarFunction, HaarFunction)>),
    Product {
        left: Box<RayKernel>,
        right: Box<RayKernel>,
        form: DcForm,
        spec: QuadratureSpec,
    },
}

/// `r -> K(αr, r)` for a fixed slope `α`.
#[derive(Debug, Clone)]
pub struct RayKernel {
    alpha: f64,
    profile: RayProfile,
    body: Body,
}

impl RayKernel {
    pub(crate) fn terms(k: &FiniteRankKernel, alpha: f64) -> Self {
        let mut support = Vec::new();
        let mut points = Vec::new();
        for t in k.terms() {
            let p = t.ray_profile(alpha);
            if !p.is_empty() {
                support.extend(p.support);
                points.extend(p.points);
            }
        }
        let body = k
            .terms()
            .iter()
            .map(|t| (t.left.clone(), t.right_effective()))
            .collect();
        Self {
            alpha,
            profile: RayProfile::new(merge(support), points),
            body: Body::Terms(body),
        }
    }

    pub(crate) fn product(
        left: RayKernel,
        right: RayKernel,
        form: DcForm,
        spec: QuadratureSpec,
    ) -> Self {
        let mut support = Vec::new();
        for i in &left.profile.support {
            for j in &right.profile.support {
                support.push(i.add(j));
            }
        }
        let support = merge(support);
        let mut points =
            Vec::with_capacity(left.profile.points.len() * right.profile.points.len() + 1);
        for p in &left.profile.points {
            for q in &right.profile.points {
                points.push(p + q);
            }
        }
        if support.iter().any(|i| i.contains_interior(0.0)) {
            points.push(0.0);
        }
        Self {
            alpha: left.alpha,
            profile: RayProfile::new(support, points),
            body: Body::Product {
                left: Box::new(left),
                right: Box::new(right),
                form,
                spec,
            },
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn profile(&self) -> &RayProfile {
        &self.profile
    }

    /// `K(αr, r)`.
    pub fn eval(&self, r: f64) -> Result<Complex64> {
        match &self.body {
            Body::Terms(terms) => {
                let s = self.alpha * r;
                Ok(terms.iter().fold(Complex64::new(0.0, 0.0), |acc, (l, rt)| {
                    acc + l.eval(s) * rt.eval(r)
                }))
            }
            Body::Product {
                left,
                right,
                form,
                spec,
            } => {
                if !self.profile.support.iter().any(|i| i.contains(r)) {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                product_eval(left, right, r, *form, spec)
            }
        }
    }
}

/// `x`-ranges with `x ∈ supp(left)` and `r - x ∈ supp(right)`.
pub(crate) fn x_ranges(left: &RayProfile, right: &RayProfile, r: f64) -> Vec<Interval> {
    let shifted = merge(right.support.iter().map(|j| j.reflect_from(r)).collect());
    intersect_all(&left.support, &shifted)
}

/// Pieces of the `x`-ranges on which the product integrand is smooth.
fn x_pieces(left: &RayProfile, right: &RayProfile, r: f64) -> Vec<Interval> {
    let ranges = x_ranges(left, right, r);
    let mut cuts: Vec<f64> = left
        .points
        .iter()
        .copied()
        .chain(right.points.iter().map(|p| r - p))
        .chain([0.0, r])
        .collect();
    dedup_points(&mut cuts);
    let mut pieces = Vec::new();
    for range in ranges {
        let mut c: Vec<f64> = cuts
            .iter()
            .copied()
            .filter(|p| range.contains_interior(*p))
            .collect();
        c.push(range.lo);
        c.push(range.hi);
        dedup_points(&mut c);
        for w in c.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            // a piece reaching both 0 and r would put both poles in one panel
            if (a == 0.0 && b == r) || (a == r && b == 0.0) {
                let m = 0.5 * r;
                pieces.push(Interval::new(a, m));
                pieces.push(Interval::new(m, b));
            } else {
                pieces.push(Interval::new(a, b));
            }
        }
    }
    pieces
}

fn product_eval(
    left: &RayKernel,
    right: &RayKernel,
    r: f64,
    form: DcForm,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    if r == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let pieces = x_pieces(&left.profile, &right.profile, r);
    if pieces.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let est = match form {
        DcForm::U => {
            let panels: Vec<Panel> = pieces
                .iter()
                .map(|p| Panel::linear(1.0 - p.hi / r, 1.0 - p.lo / r))
                .collect();
            integrate_with(
                |u| {
                    let w = (u * (1.0 - u)).abs();
                    Ok(left.eval((1.0 - u) * r)? * right.eval(u * r)? / w)
                },
                &panels,
                spec,
            )?
        }
        DcForm::H => {
            let h_of = |x: f64| (r - x) / x;
            let panels: Vec<Panel> = pieces
                .iter()
                .map(|p| {
                    let (x0, x1) = (p.lo, p.hi);
                    if x0 == 0.0 || x1 == 0.0 {
                        let other = if x0 == 0.0 { x1 } else { x0 };
                        Panel::inverse(0.0, 1.0 / h_of(other))
                    } else if x0 == r || x1 == r {
                        let other = if x0 == r { x1 } else { x0 };
                        Panel::linear(0.0, h_of(other))
                    } else {
                        Panel::log(h_of(x0), h_of(x1))
                    }
                })
                .collect();
            integrate_with(
                |h| {
                    let x = r / (1.0 + h);
                    let y = r * h / (1.0 + h);
                    Ok(left.eval(x)? * right.eval(y)? / h.abs())
                },
                &panels,
                spec,
            )?
        }
    };
    Ok(est.value)
}

/// Slopes where a panel point of one factor meets a panel point of another
/// and both are active there.
fn crossing_hints(kernels: &[(&Kernel, bool)], alpha_support: &[Interval]) -> Vec<f64> {
    let sets: Vec<Vec<RayPoint>> = kernels
        .iter()
        .map(|(k, refl)| {
            let mut pts: Vec<RayPoint> = k
                .ray_points()
                .into_iter()
                .map(|p| if *refl { p.negated() } else { p })
                .collect();
            dedup_ray_points(&mut pts);
            pts
        })
        .collect();
    let mut candidates = Vec::new();
    for i in 0..sets.len() {
        for j in (i + 1)..sets.len() {
            for p in &sets[i] {
                for q in &sets[j] {
                    let db = q.b - p.b;
                    if db == 0.0 {
                        continue;
                    }
                    let alpha = (p.a - q.a) / db;
                    if alpha.is_finite()
                        && alpha != 0.0
                        && alpha_support.iter().any(|iv| iv.contains_interior(alpha))
                    {
                        candidates.push((alpha, p.at(alpha), i, j));
                    }
                }
            }
        }
    }
    let mut hints = Vec::new();
    let mut cache: Vec<(f64, Vec<RayProfile>)> = Vec::new();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (alpha, v, i, j) in candidates {
        let profiles = match cache.iter().find(|(a, _)| *a == alpha) {
            Some((_, p)) => p.clone(),
            None => {
                let p: Vec<RayProfile> = kernels
                    .iter()
                    .map(|(k, refl)| {
                        let prof = k.along(alpha).profile.clone();
                        if *refl {
                            prof.reflected()
                        } else {
                            prof
                        }
                    })
                    .collect();
                cache.push((alpha, p.clone()));
                p
            }
        };
        if profiles[i].has_point_near(v) && profiles[j].has_point_near(v) {
            hints.push(alpha);
        }
    }
    hints
}

/// `∬ F(α, r, K₁(±αr, ±r), …) dα dr/(|α||r|)` over the common support of the kernels.
///
/// Each entry pairs a kernel with a flag selecting evaluation at `(-s, -t)`.
pub(crate) fn double_integral<F>(
    kernels: &[(&Kernel, bool)],
    combine: F,
    q: &QuadratureSpec,
) -> Result<Estimate>
where
    F: Fn(f64, f64, &[Complex64]) -> Complex64,
{
    if kernels.iter().any(|(k, _)| k.is_zero()) {
        return Ok(Estimate::ZERO);
    }
    let mut alpha_support = kernels[0].0.alpha_support();
    for (k, _) in &kernels[1..] {
        alpha_support = intersect_all(&alpha_support, &k.alpha_support());
    }
    if alpha_support.is_empty() {
        return Ok(Estimate::ZERO);
    }
    let mut hints: Vec<f64> = kernels.iter().flat_map(|(k, _)| k.alpha_hints()).collect();
    hints.extend(crossing_hints(kernels, &alpha_support));
    dedup_points(&mut hints);
    let inner_spec = q.tightened();
    let outer = |alpha: f64| -> Result<Complex64> {
        let rays: Vec<(RayKernel, bool)> = kernels
            .iter()
            .map(|(k, refl)| (k.along(alpha), *refl))
            .collect();
        let mut support: Option<Vec<Interval>> = None;
        let mut points = Vec::new();
        for (ray, refl) in &rays {
            let prof = if *refl {
                ray.profile.reflected()
            } else {
                ray.profile.clone()
            };
            support = Some(match support {
                None => prof.support.clone(),
                Some(s) => intersect_all(&s, &prof.support),
            });
            points.extend(prof.points);
        }
        let support = support.unwrap_or_default();
        if support.is_empty() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let inner = haar_line_integral(
            |r| {
                let mut vals = Vec::with_capacity(rays.len());
                for (ray, refl) in &rays {
                    vals.push(ray.eval(if *refl { -r } else { r })?);
                }
                Ok(combine(alpha, r, &vals))
            },
            &support,
            &points,
            0.0,
            &inner_spec,
        )?;
        Ok(inner.value)
    };
    haar_line_integral(outer, &alpha_support, &hints, 0.0, q)
}
