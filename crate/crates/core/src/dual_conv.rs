//! The dual convolution product `⊠` and its consistency checks.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{dedup_points, intersect_all, merge, Interval};
use crate::operators::{FiniteRankKernel, Kernel, PairingMode, RankOneTensor, SupportBox};
use crate::quadrature::{integrate_with, smoothstep_nodes, Panel, QuadratureSpec};
use crate::ray::{dedup_ray_points, x_ranges, RayKernel, RayPoint};
use crate::report::{Report, ResidualLog};

/// Maximum nesting of lazy products.
pub const MAX_DEPTH: usize = 3;

/// Integration variable of the pointwise formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DcForm {
    /// `∫ T₁((1-u)s,(1-u)t) T₂(us,ut) du/(|1-u||u|)`.
    U,
    /// `∫ T₁(s/(1+h),t/(1+h)) T₂(hs/(1+h),ht/(1+h)) dh/|h|`.
    H,
}

/// `T₁ ⊠ T₂`, evaluated pointwise on demand.
#[derive(Debug, Clone)]
pub struct LazyDCKernel {
    left: Kernel,
    right: Kernel,
    quadrature: QuadratureSpec,
    form: DcForm,
    support_boxes: Vec<SupportBox>,
    depth: usize,
}

impl LazyDCKernel {
    pub fn new(left: Kernel, right: Kernel, q: QuadratureSpec, form: DcForm) -> Result<Self> {
        q.validate()?;
        if left.mode() != right.mode() {
            return Err(Error::ModeMismatch);
        }
        let depth = 1 + left.depth().max(right.depth());
        if depth > MAX_DEPTH {
            return Err(Error::NestingTooDeep(depth));
        }
        let mut support_boxes = Vec::new();
        for a in left.support_boxes() {
            for b in right.support_boxes() {
                support_boxes.push(SupportBox {
                    s: a.s.add(&b.s),
                    t: a.t.add(&b.t),
                });
            }
        }
        Ok(Self {
            left,
            right,
            quadrature: q,
            form,
            support_boxes,
            depth,
        })
    }

    pub fn left(&self) -> &Kernel {
        &self.left
    }

    pub fn right(&self) -> &Kernel {
        &self.right
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quadrature
    }

    pub fn form(&self) -> DcForm {
        self.form
    }

    pub fn mode(&self) -> PairingMode {
        self.left.mode()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn support_boxes(&self) -> &[SupportBox] {
        &self.support_boxes
    }

    pub fn eval(&self, s: f64, t: f64) -> Result<Complex64> {
        if s == 0.0 || t == 0.0 || !self.support_boxes.iter().any(|b| b.contains(s, t)) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        self.along(s / t).eval(t)
    }

    pub fn along(&self, alpha: f64) -> RayKernel {
        RayKernel::product(
            self.left.along(alpha),
            self.right.along(alpha),
            self.form,
            self.quadrature,
        )
    }

    pub fn alpha_support(&self) -> Vec<Interval> {
        intersect_all(&self.left.alpha_support(), &self.right.alpha_support())
    }

    pub fn alpha_hints(&self) -> Vec<f64> {
        let mut h = self.left.alpha_hints();
        h.extend(self.right.alpha_hints());
        h
    }

    pub(crate) fn ray_points(&self) -> Vec<RayPoint> {
        let l = self.left.ray_points();
        let r = self.right.ray_points();
        let mut out: Vec<RayPoint> = l
            .iter()
            .flat_map(|p| {
                r.iter().map(move |q| RayPoint {
                    a: p.a + q.a,
                    b: p.b + q.b,
                })
            })
            .collect();
        out.push(RayPoint { a: 0.0, b: 0.0 });
        dedup_ray_points(&mut out);
        out
    }
}

fn lazy(t1: &Kernel, t2: &Kernel, q: &QuadratureSpec, form: DcForm) -> Result<LazyDCKernel> {
    LazyDCKernel::new(t1.clone(), t2.clone(), *q, form)
}

/// `T₁ ⊠ T₂` through the `u`-form of the pointwise formula.
pub fn dc_kernel(t1: &Kernel, t2: &Kernel, q: &QuadratureSpec) -> Result<LazyDCKernel> {
    lazy(t1, t2, q, DcForm::U)
}

/// `T₁ ⊠ T₂` through the `h`-form of the pointwise formula.
pub fn dc_kernel_hform(t1: &Kernel, t2: &Kernel, q: &QuadratureSpec) -> Result<LazyDCKernel> {
    lazy(t1, t2, q, DcForm::H)
}

/// The `u` with `(1-u)(s,t) ∈ supp T₁` and `u(s,t) ∈ supp T₂`.
///
/// Single-point contacts are dropped, so an empty result means the product vanishes at `(s,t)`.
pub fn u_support(t1: &Kernel, t2: &Kernel, s: f64, t: f64) -> Vec<Interval> {
    if s == 0.0 || t == 0.0 {
        return Vec::new();
    }
    let alpha = s / t;
    let (l, r) = (t1.along(alpha), t2.along(alpha));
    let xs = x_ranges(l.profile(), r.profile(), t);
    merge(
        xs.iter()
            .map(|x| Interval::new(1.0 - x.lo / t, 1.0 - x.hi / t))
            .collect(),
    )
}

/// Distance from a `u`-support to the poles `{0, 1}`; `None` when empty.
pub fn pole_distance(us: &[Interval]) -> Option<f64> {
    us.iter()
        .map(|i| {
            let d0 = if i.contains(0.0) {
                0.0
            } else {
                i.lo.abs().min(i.hi.abs())
            };
            let d1 = if i.contains(1.0) {
                0.0
            } else {
                (i.lo - 1.0).abs().min((i.hi - 1.0).abs())
            };
            d0.min(d1)
        })
        .reduce(f64::min)
}

/// Panel decomposition of the `h`-axis for Bochner sums.
///
/// Each panel lies in one half-line; nodes come from a Gauss–Legendre rule
/// in `ln|h|` composed with the smoothstep map.
#[derive(Debug, Clone, PartialEq)]
pub struct HGrid {
    pub panels: Vec<Interval>,
    pub order: usize,
}

fn ratio_set(num: &crate::haar::HaarFunction, den: &crate::haar::HaarFunction) -> Vec<Interval> {
    let mut out = Vec::new();
    for d in den.supports() {
        for n in num.supports() {
            out.push(n.div(&d));
        }
    }
    merge(out)
}

impl HGrid {
    /// The `h` for which both Bochner factors have nonempty support.
    pub fn h_support(t1: &RankOneTensor, t2: &RankOneTensor) -> Vec<Interval> {
        intersect_all(
            &ratio_set(&t2.left, &t1.left),
            &ratio_set(&t2.right, &t1.right),
        )
    }

    /// Grid for `T₁ ⊠ T₂` split at the kinks of the coefficient at dilation `a`,
    /// at `h = -1`, and at `extra_breaks`, with `pieces` equal log-width
    /// panels between consecutive breaks.
    pub fn for_pair(
        t1: &RankOneTensor,
        t2: &RankOneTensor,
        a: f64,
        extra_breaks: &[f64],
        pieces: usize,
        order: usize,
    ) -> Result<HGrid> {
        if a == 0.0 {
            return Err(Error::DegenerateDilation);
        }
        let support = Self::h_support(t1, t2);
        if support
            .iter()
            .any(|i| !(i.lo.is_finite() && i.hi.is_finite()) || i.contains(0.0))
        {
            return Err(Error::NonConvergence {
                context: "h-support is not bounded away from 0 and infinity".into(),
                estimate: Complex64::new(f64::NAN, 0.0),
                error_estimate: f64::INFINITY,
            });
        }
        let c1: Vec<f64> = t1
            .left
            .panel_points()
            .iter()
            .map(|p| p / a)
            .chain(t1.right.panel_points())
            .collect();
        let c2: Vec<f64> = t2
            .left
            .panel_points()
            .iter()
            .map(|p| p / a)
            .chain(t2.right.panel_points())
            .collect();
        let mut cuts: Vec<f64> = c1
            .iter()
            .flat_map(|x| c2.iter().map(move |y| y / x))
            .chain(extra_breaks.iter().copied())
            .chain([-1.0])
            .collect();
        dedup_points(&mut cuts);
        let mut panels = Vec::new();
        for iv in &support {
            let mut c: Vec<f64> = cuts
                .iter()
                .copied()
                .filter(|x| iv.contains_interior(*x))
                .collect();
            c.push(iv.lo);
            c.push(iv.hi);
            dedup_points(&mut c);
            for w in c.windows(2) {
                let (z0, z1) = (w[0].abs().ln(), w[1].abs().ln());
                let sign = w[0].signum();
                let n = pieces.max(1);
                for k in 0..n {
                    let a = z0 + (z1 - z0) * k as f64 / n as f64;
                    let b = if k + 1 == n {
                        z1
                    } else {
                        z0 + (z1 - z0) * (k + 1) as f64 / n as f64
                    };
                    panels.push(Interval::new(sign * a.exp(), sign * b.exp()));
                }
            }
        }
        Ok(HGrid { panels, order })
    }

    /// Every panel halved in `ln|h|`.
    pub fn refined(&self) -> HGrid {
        let mut panels = Vec::with_capacity(2 * self.panels.len());
        for p in &self.panels {
            let sign = p.lo.signum();
            let m = sign * (0.5 * (p.lo.abs().ln() + p.hi.abs().ln())).exp();
            panels.push(Interval::new(p.lo, m));
            panels.push(Interval::new(m, p.hi));
        }
        HGrid {
            panels,
            order: self.order,
        }
    }

    /// Nodes `h` with weights for the measure `dh/|h|`.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.panels.len() * self.order);
        for p in &self.panels {
            let sign = p.lo.signum();
            for (z, w) in smoothstep_nodes(p.lo.abs().ln(), p.hi.abs().ln(), self.order) {
                out.push((sign * z.exp(), w.abs()));
            }
        }
        out
    }
}

/// Rank-one terms of the discretized Bochner integral for `(ξ⊗η) ⊠ (ξ'⊗η')`:
/// `(λ(1+h)ξ · λ(1+h⁻¹)ξ') ⊗ (λ(1+h)η · λ(1+h⁻¹)η')` at each grid node.
pub fn dc_bochner_terms(
    t1: &RankOneTensor,
    t2: &RankOneTensor,
    grid: &HGrid,
) -> Result<Vec<(f64, RankOneTensor)>> {
    if t1.mode != t2.mode {
        return Err(Error::ModeMismatch);
    }
    if t1.is_zero() || t2.is_zero() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (h, w) in grid.nodes() {
        let (a, b) = (1.0 + h, 1.0 + h.recip());
        let left = t1.left.dilate(a)?.pointwise_product(&t2.left.dilate(b)?);
        let right = t1.right.dilate(a)?.pointwise_product(&t2.right.dilate(b)?);
        if left.is_zero() || right.is_zero() {
            continue;
        }
        out.push((w, RankOneTensor::new(left, right, t1.mode)));
    }
    Ok(out)
}

/// Breaks of the `h`-integrand of `(T₁ ⊠ T₂)(s,t)`.
pub fn point_breaks(t1: &RankOneTensor, t2: &RankOneTensor, s: f64, t: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for (v, f1, f2) in [(s, &t1.left, &t2.left), (t, &t1.right, &t2.right)] {
        out.extend(f1.panel_points().iter().map(|p| v / p - 1.0));
        out.extend(f2.panel_points().iter().map(|q| q / (v - q)));
    }
    out.retain(|h| h.is_finite() && *h != 0.0);
    out
}

/// `Σ wⱼ Tⱼ(s,t)` over Bochner terms.
pub fn bochner_kernel_eval(terms: &[(f64, RankOneTensor)], s: f64, t: f64) -> Complex64 {
    terms
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, (w, term)| {
            acc + term.eval(s, t) * *w
        })
}

/// `Σ wⱼ ‖ξⱼ‖₂ ‖ηⱼ‖₂` over Bochner terms.
pub fn bochner_norm_sum(terms: &[(f64, RankOneTensor)], q: &QuadratureSpec) -> Result<f64> {
    let mut s = 0.0;
    for (w, t) in terms {
        s += w * t.left.lp_norm(2.0, q)? * t.right.lp_norm(2.0, q)?;
    }
    Ok(s)
}

/// The symmetric double integral for `T₁ ⊠ T₂ ⊠ T₃`.
#[derive(Debug, Clone)]
pub struct TripleProduct {
    factors: [RankOneTensor; 3],
    quadrature: QuadratureSpec,
}

/// Evaluator of `∬ T₁(v·)T₂((1-v-u)·)T₃(u·) d(v,u)/(|v||1-v-u||u|)` on kernels.
pub fn triple_product_direct(
    t1: &RankOneTensor,
    t2: &RankOneTensor,
    t3: &RankOneTensor,
    q: &QuadratureSpec,
) -> Result<TripleProduct> {
    q.validate()?;
    if t1.mode != t2.mode || t2.mode != t3.mode {
        return Err(Error::ModeMismatch);
    }
    Ok(TripleProduct {
        factors: [t1.clone(), t2.clone(), t3.clone()],
        quadrature: *q,
    })
}

impl TripleProduct {
    pub fn eval(&self, s: f64, t: f64) -> Result<Complex64> {
        if s == 0.0 || t == 0.0 || self.factors.iter().any(|f| f.is_zero()) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let alpha = s / t;
        let r = t;
        let prof: Vec<_> = self.factors.iter().map(|f| f.ray_profile(alpha)).collect();
        if prof.iter().any(|p| p.is_empty()) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let rays: Vec<(crate::haar::HaarFunction, crate::haar::HaarFunction)> = self
            .factors
            .iter()
            .map(|f| (f.left.clone(), f.right_effective()))
            .collect();
        let ray = |k: usize, x: f64| rays[k].0.eval(alpha * x) * rays[k].1.eval(x);
        let scale = |ivs: &[Interval]| -> Vec<Interval> {
            merge(ivs.iter().map(|i| i.scale(r.recip())).collect())
        };
        let v_support = scale(&prof[0].support);
        let mut v_cuts: Vec<f64> = prof[0].points.iter().map(|p| p / r).collect();
        for b2 in &prof[1].points {
            for b3 in &prof[2].points {
                v_cuts.push(1.0 - (b2 + b3) / r);
            }
        }
        let v_panels = panels_on(&v_support, &v_cuts);
        let u3 = scale(&prof[2].support);
        let inner_q = self.quadrature.tightened();
        let est = integrate_with(
            |v| {
                let x1 = v * r;
                let f1 = ray(0, x1);
                if f1 == Complex64::new(0.0, 0.0) {
                    return Ok(f1);
                }
                // u with (1 - v - u) r in supp T₂
                let u2: Vec<Interval> = prof[1]
                    .support
                    .iter()
                    .map(|j| j.reflect_from(r - x1).scale(r.recip()))
                    .collect();
                let u_support = intersect_all(&u3, &merge(u2));
                let mut cuts: Vec<f64> = prof[2].points.iter().map(|p| p / r).collect();
                cuts.extend(prof[1].points.iter().map(|b| (r - x1 - b) / r));
                let u_panels = panels_on(&u_support, &cuts);
                if u_panels.is_empty() {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let inner = integrate_with(
                    |u| {
                        let w = 1.0 - v - u;
                        Ok(ray(1, w * r) * ray(2, u * r) / (w * u).abs())
                    },
                    &u_panels,
                    &inner_q,
                )?;
                Ok(f1 * inner.value / v.abs())
            },
            &v_panels,
            &self.quadrature,
        )?;
        Ok(est.value)
    }
}

fn panels_on(support: &[Interval], cuts: &[f64]) -> Vec<Panel> {
    let mut out = Vec::new();
    for iv in support {
        let mut c: Vec<f64> = cuts
            .iter()
            .copied()
            .filter(|x| iv.contains_interior(*x))
            .collect();
        c.push(iv.lo);
        c.push(iv.hi);
        dedup_points(&mut c);
        for w in c.windows(2) {
            if w[1] > w[0] {
                out.push(Panel::linear(w[0], w[1]));
            }
        }
    }
    out
}

/// `|T₁⊠T₂ - T₂⊠T₁|` at each sample.
pub fn check_commutative(
    t1: &Kernel,
    t2: &Kernel,
    samples: &[(f64, f64)],
    tol: f64,
    q: &QuadratureSpec,
) -> Report {
    let mut log = ResidualLog::new("dc-commute", tol);
    let (a, b) = match (dc_kernel(t1, t2, q), dc_kernel(t2, t1, q)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            log.fail(&e);
            return log.finish(1);
        }
    };
    let values: Vec<Result<(Complex64, Complex64)>> = samples
        .par_iter()
        .map(|&(s, t)| Ok((a.eval(s, t)?, b.eval(s, t)?)))
        .collect();
    for (&(s, t), v) in samples.iter().zip(values) {
        if let Some(d) = pole_distance(&u_support(t1, t2, s, t)) {
            log.pole(d);
        }
        if let Some((x, y)) = log.record(v) {
            log.push((x - y).norm(), y.norm());
        }
    }
    log.finish(1)
}

/// Compares both nestings of `T₁ ⊠ T₂ ⊠ T₃` with the direct double integral.
///
/// Inner products use the tightened spec.
pub fn check_associative(
    t1: &RankOneTensor,
    t2: &RankOneTensor,
    t3: &RankOneTensor,
    samples: &[(f64, f64)],
    tol: f64,
    q: &QuadratureSpec,
) -> Report {
    let mut log = ResidualLog::new("dc-assoc", tol);
    let build = || -> Result<(LazyDCKernel, LazyDCKernel, TripleProduct)> {
        let inner = q.tightened();
        let k1 = Kernel::rank_one(t1.clone(), q)?;
        let k2 = Kernel::rank_one(t2.clone(), q)?;
        let k3 = Kernel::rank_one(t3.clone(), q)?;
        let k12: Kernel = dc_kernel(&k1, &k2, &inner)?.into();
        let k23: Kernel = dc_kernel(&k2, &k3, &inner)?.into();
        Ok((
            dc_kernel(&k12, &k3, q)?,
            dc_kernel(&k1, &k23, q)?,
            triple_product_direct(t1, t2, t3, q)?,
        ))
    };
    let (left, right, direct) = match build() {
        Ok(v) => v,
        Err(e) => {
            log.fail(&e);
            return log.finish(1);
        }
    };
    let values: Vec<Result<[Complex64; 3]>> = samples
        .par_iter()
        .map(|&(s, t)| Ok([left.eval(s, t)?, right.eval(s, t)?, direct.eval(s, t)?]))
        .collect();
    for v in values {
        if let Some([a, b, c]) = log.record(v) {
            let r = (a - b).norm().max((a - c).norm()).max((b - c).norm());
            log.push(r, c.norm());
        }
    }
    log.finish(1)
}

/// `|(P_diag T₁) ⊠ (P_diag T₂) - P_diag(T₁ ⊠ T₂)|` at each sample, where
/// `P_diag` of a kernel keeps the quadrants with `sign s = sign t`.
pub fn check_pdiag_homomorphism(
    t1: &FiniteRankKernel,
    t2: &FiniteRankKernel,
    samples: &[(f64, f64)],
    tol: f64,
    q: &QuadratureSpec,
) -> Report {
    let mut log = ResidualLog::new("pdiag-homomorphism", tol);
    let build = || -> Result<(LazyDCKernel, LazyDCKernel)> {
        let p1: Kernel = t1.parity_compress(q)?.into();
        let p2: Kernel = t2.parity_compress(q)?.into();
        let k1: Kernel = t1.clone().into();
        let k2: Kernel = t2.clone().into();
        Ok((dc_kernel(&p1, &p2, q)?, dc_kernel(&k1, &k2, q)?))
    };
    let (compressed, full) = match build() {
        Ok(v) => v,
        Err(e) => {
            log.fail(&e);
            return log.finish(1);
        }
    };
    let values: Vec<Result<(Complex64, Complex64)>> = samples
        .par_iter()
        .map(|&(s, t)| {
            let lhs = compressed.eval(s, t)?;
            let rhs = if (s > 0.0) == (t > 0.0) {
                full.eval(s, t)?
            } else {
                Complex64::new(0.0, 0.0)
            };
            Ok((lhs, rhs))
        })
        .collect();
    for v in values {
        if let Some((a, b)) = log.record(v) {
            log.push((a - b).norm(), b.norm());
        }
    }
    log.finish(1)
}
