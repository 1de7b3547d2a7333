//! The affine group, its representation on `L²(ℝ^×)`, and coefficient functions.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual_conv::{dc_bochner_terms, dc_kernel, HGrid};
use crate::error::{Error, Result};
use crate::haar::{HaarFunction, Sign};
use crate::interval::{dedup_points, merge, Interval};
use crate::lp::vp_power;
use crate::operators::{FiniteRankKernel, Kernel, PairingMode, RankOneTensor};
use crate::quadrature::{haar_line_integral, QuadratureSpec};
use crate::report::{Report, ResidualLog};

/// Element `(b, a)` of `ℝ ⋊ ℝ^×`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub b: f64,
    pub a: f64,
}

impl GroupElement {
    pub fn new(b: f64, a: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(Error::DegenerateDilation);
        }
        Ok(Self { b, a })
    }

    pub const IDENTITY: GroupElement = GroupElement { b: 0.0, a: 1.0 };
}

/// `(b,a)(b',a') = (ab' + b, aa')`.
pub fn group_mul(x: GroupElement, y: GroupElement) -> GroupElement {
    GroupElement {
        b: x.a * y.b + x.b,
        a: x.a * y.a,
    }
}

/// `(b,a)⁻¹ = (-b/a, 1/a)`.
pub fn group_inv(x: GroupElement) -> GroupElement {
    GroupElement {
        b: -x.b / x.a,
        a: x.a.recip(),
    }
}

/// `π(b,a)f(t) = e^{2πibt} f(ta)`.
pub fn pi_act(x: GroupElement, f: &HaarFunction) -> Result<HaarFunction> {
    Ok(f.right_dilate(x.a)?.modulate(x.b))
}

/// `x -> Ψ(K)(x)` for a kernel `K`.
#[derive(Debug, Clone)]
pub struct CoefficientFunction {
    pub kernel: Kernel,
    pub quadrature: QuadratureSpec,
}

impl CoefficientFunction {
    pub fn new(kernel: Kernel, quadrature: QuadratureSpec) -> Self {
        Self { kernel, quadrature }
    }

    pub fn pairing_mode(&self) -> PairingMode {
        self.kernel.mode()
    }

    pub fn eval(&self, x: GroupElement) -> Result<Complex64> {
        coeff_eval(self, x)
    }
}

/// Coefficient of one elementary tensor: `∫ e^{2πibt} ξ(ta) η̃(t) dt/|t|`.
pub fn rank_one_coefficient(
    t: &RankOneTensor,
    x: GroupElement,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    let conj = t.mode == PairingMode::Hilbert;
    pi_act(x, &t.left)?.pairing(&t.right, conj, q)
}

/// Coefficient of a finite kernel, term by term.
pub fn finite_coefficient(
    k: &FiniteRankKernel,
    x: GroupElement,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for t in k.terms() {
        acc += rank_one_coefficient(t, x, q)?;
    }
    Ok(acc)
}

/// `∫ e^{2πibt} K(ta, t) dt/|t|` from pointwise kernel values along the ray of slope `a`.
pub fn kernel_coefficient(k: &Kernel, x: GroupElement, q: &QuadratureSpec) -> Result<Complex64> {
    let ray = k.along(x.a);
    let prof = ray.profile();
    if prof.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let w = 2.0 * std::f64::consts::PI * x.b;
    let est = haar_line_integral(
        |t| Ok(Complex64::from_polar(1.0, w * t) * ray.eval(t)?),
        &prof.support,
        &prof.points,
        x.b.abs(),
        q,
    )?;
    Ok(est.value)
}

/// Evaluates a coefficient function.
///
/// Finite kernels use the rank-one formula term by term. Lazy products go
/// through [`kernel_coefficient`], which [`check_fusion`] validates.
pub fn coeff_eval(c: &CoefficientFunction, x: GroupElement) -> Result<Complex64> {
    match &c.kernel {
        Kernel::Finite(k) => finite_coefficient(k, x, &c.quadrature),
        Kernel::DualConv(_) => kernel_coefficient(&c.kernel, x, &c.quadrature),
    }
}

/// Coefficient of `T₁ ⊠ T₂` as a Bochner sum of rank-one coefficients.
///
/// The `h`-grid is refined until two successive sums differ by at most
/// `tol / 10`.
pub fn bochner_coefficient(
    t1: &RankOneTensor,
    t2: &RankOneTensor,
    x: GroupElement,
    tol: f64,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    if t1.is_zero() || t2.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let support = HGrid::h_support(t1, t2);
    if support.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    // start coarse: one piece per unit of ln|h|, refinement does the rest
    let zwidth = support
        .iter()
        .map(|i| (i.hi.abs().ln() - i.lo.abs().ln()).abs())
        .fold(0.0, f64::max);
    let pieces = zwidth.ceil() as usize + 1;
    let mut grid = HGrid::for_pair(t1, t2, x.a, &[], pieces, 16)?;
    let sum = |g: &HGrid| -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, term) in dc_bochner_terms(t1, t2, g)? {
            acc += rank_one_coefficient(&term, x, q)? * w;
        }
        Ok(acc)
    };
    let mut prev = sum(&grid)?;
    for _ in 0..8 {
        grid = grid.refined();
        let next = sum(&grid)?;
        if (next - prev).norm() <= tol / 10.0 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence {
        context: "Bochner grid refinement".into(),
        estimate: prev,
        error_estimate: f64::INFINITY,
    })
}

/// Compares `Ψ(T₁)Ψ(T₂)` with the coefficient of `T₁ ⊠ T₂` computed from
/// Bochner terms and from the lazy kernel.
pub fn check_fusion(
    t1: &RankOneTensor,
    t2: &RankOneTensor,
    samples: &[GroupElement],
    tol: f64,
    q: &QuadratureSpec,
) -> Report {
    let mut log = ResidualLog::new("fusion-check", tol);
    if t1.mode != PairingMode::Hilbert || t2.mode != PairingMode::Hilbert {
        log.fail(&Error::ModeMismatch);
        return log.finish(1);
    }
    let product = Kernel::rank_one(t1.clone(), q)
        .and_then(|k1| Ok((k1, Kernel::rank_one(t2.clone(), q)?)))
        .and_then(|(k1, k2)| Ok(Kernel::from(dc_kernel(&k1, &k2, &q.tightened())?)));
    let product = match product {
        Ok(p) => p,
        Err(e) => {
            log.fail(&e);
            return log.finish(1);
        }
    };
    let values: Vec<Result<[Complex64; 3]>> = samples
        .par_iter()
        .map(|&x| {
            let lhs = rank_one_coefficient(t1, x, q)? * rank_one_coefficient(t2, x, q)?;
            let bochner = bochner_coefficient(t1, t2, x, tol, q)?;
            let pointwise = kernel_coefficient(&product, x, q)?;
            Ok([lhs, bochner, pointwise])
        })
        .collect();
    for v in values {
        if let Some([lhs, b, p]) = log.record(v) {
            log.push((lhs - b).norm().max((lhs - p).norm()), lhs.norm());
        }
    }
    log.finish(1)
}

/// Coefficients of same-parity pairs vanish for `a < 0`, of opposite-parity pairs for `a > 0`.
pub fn check_parity_vanishing(
    xi: &HaarFunction,
    eta: &HaarFunction,
    samples: &[GroupElement],
    tol: f64,
    q: &QuadratureSpec,
) -> Result<Report> {
    let same = xi.parity()? == eta.parity()?;
    let t = RankOneTensor::hilbert(xi.clone(), eta.clone());
    let mut log = ResidualLog::new("parity-check", tol);
    for x in samples
        .iter()
        .filter(|x| if same { x.a < 0.0 } else { x.a > 0.0 })
    {
        if let Some(v) = log.record(rank_one_coefficient(&t, *x, q)) {
            log.push(v.norm(), 0.0);
        }
    }
    Ok(log.finish(1))
}

/// `Ψ P_diag = P_e Ψ`: compressed and original coefficients agree for
/// `a > 0`, and the compressed one vanishes for `a < 0`.
pub fn check_intertwine_pe(
    t: &FiniteRankKernel,
    samples: &[GroupElement],
    tol: f64,
    q: &QuadratureSpec,
) -> Report {
    let mut log = ResidualLog::new("intertwine-check", tol);
    if t.mode() != PairingMode::Hilbert {
        log.fail(&Error::ModeMismatch);
        return log.finish(1);
    }
    let compressed = match t.parity_compress(q) {
        Ok(c) => c,
        Err(e) => {
            log.fail(&e);
            return log.finish(1);
        }
    };
    let values: Vec<Result<(Complex64, Complex64)>> = samples
        .par_iter()
        .map(|&x| {
            let c = finite_coefficient(&compressed, x, q)?;
            let full = if x.a > 0.0 {
                finite_coefficient(t, x, q)?
            } else {
                Complex64::new(0.0, 0.0)
            };
            Ok((c, full))
        })
        .collect();
    for v in values {
        if let Some((c, f)) = log.record(v) {
            log.push((c - f).norm(), f.norm());
        }
    }
    log.finish(1)
}

fn ratio_set(num: &HaarFunction, den: &HaarFunction) -> Vec<Interval> {
    let mut out = Vec::new();
    for d in den.supports() {
        for n in num.supports() {
            out.push(n.div(&d));
        }
    }
    merge(out)
}

fn ratios(num: &HaarFunction, den: &HaarFunction) -> Vec<f64> {
    let dp = den.panel_points();
    let mut out: Vec<f64> = num
        .panel_points()
        .iter()
        .flat_map(|n| dp.iter().map(move |d| n / d))
        .collect();
    dedup_points(&mut out);
    out
}

/// `∫ ‖(ρ(h)f)·g‖₂² dh/|h|`.
pub fn w_form(f: &HaarFunction, g: &HaarFunction, q: &QuadratureSpec) -> Result<f64> {
    let inner = q.tightened();
    let est = haar_line_integral(
        |h| {
            let v = f
                .right_dilate(h)?
                .pointwise_product(g)
                .lp_power(2.0, &inner)?;
            Ok(Complex64::new(v, 0.0))
        },
        &ratio_set(f, g),
        &ratios(f, g),
        0.0,
        q,
    )?;
    Ok(est.value.re)
}

/// `∫ ‖λ(1+h)f · λ(1+h⁻¹)g‖₂² dh/|h|`.
pub fn lambda_form(f: &HaarFunction, g: &HaarFunction, q: &QuadratureSpec) -> Result<f64> {
    let inner = q.tightened();
    let mut hints = ratios(g, f);
    hints.push(-1.0);
    let est = haar_line_integral(
        |h| {
            let v = f
                .dilate(1.0 + h)?
                .pointwise_product(&g.dilate(1.0 + h.recip())?)
                .lp_power(2.0, &inner)?;
            Ok(Complex64::new(v, 0.0))
        },
        &ratio_set(g, f),
        &hints,
        0.0,
        q,
    )?;
    Ok(est.value.re)
}

fn rel_residual(lhs: f64, rhs: f64) -> f64 {
    let d = (lhs - rhs).abs();
    if rhs.abs() > 0.0 {
        d / rhs.abs()
    } else {
        d
    }
}

/// Checks `∫ ‖(ρ(h)f)·g‖² dh/|h|`, the `λ`-form integral and the `V`
/// transform of `f ⊗ g` against `‖f‖₂²‖g‖₂²`. Residuals are relative.
pub fn check_w_isometry(
    f: &HaarFunction,
    g: &HaarFunction,
    tol: f64,
    q: &QuadratureSpec,
) -> Report {
    let mut log = ResidualLog::new("w-isometry", tol);
    let rhs = f.lp_power(2.0, q).and_then(|a| Ok(a * g.lp_power(2.0, q)?));
    let Some(rhs) = log.record(rhs) else {
        return log.finish(1);
    };
    for lhs in [
        w_form(f, g, q),
        lambda_form(f, g, q),
        vp_power(f, g, 2.0, q),
    ] {
        if let Some(v) = log.record(lhs) {
            log.push(rel_residual(v, rhs), 1.0);
        }
    }
    log.finish(1)
}

/// Parity as used by [`check_parity_vanishing`].
pub fn parity_of(f: &HaarFunction) -> Result<Sign> {
    f.parity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn ind(a: f64, b: f64) -> HaarFunction {
        HaarFunction::indicator(a, b).unwrap()
    }

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn g(b: f64, a: f64) -> GroupElement {
        GroupElement::new(b, a).unwrap()
    }

    #[test]
    fn group_law_examples() {
        let x = g(1.0, 2.0);
        assert_eq!(group_mul(GroupElement::IDENTITY, x), x);
        assert_eq!(group_mul(x, g(3.0, 4.0)), g(7.0, 8.0));
        assert_eq!(group_mul(x, group_inv(x)), GroupElement::IDENTITY);
        assert_eq!(group_inv(x), g(-0.5, 0.5));
        assert_eq!(group_inv(GroupElement::IDENTITY), GroupElement::IDENTITY);
        assert!(GroupElement::new(1.0, 0.0).is_err());
    }

    #[test]
    fn pi_act_examples() {
        let f = ind(1.0, 2.0);
        assert_eq!(
            pi_act(GroupElement::IDENTITY, &f).unwrap().eval(1.5),
            f.eval(1.5)
        );
        let d = pi_act(g(0.0, 4.0), &f).unwrap();
        assert_eq!(d.support_pos(), Some(Interval::new(0.25, 0.5)));
        let r = pi_act(g(0.0, -1.0), &f).unwrap();
        assert_eq!(r.eval(-1.5), f.eval(1.5));
        let (x, y) = (g(0.7, -1.3), g(-0.4, 0.6));
        let lhs = pi_act(
            x,
            &pi_act(y, &HaarFunction::hat(0.5, 3.0).unwrap()).unwrap(),
        )
        .unwrap();
        let rhs = pi_act(group_mul(x, y), &HaarFunction::hat(0.5, 3.0).unwrap()).unwrap();
        for t in [-3.1, -2.0, -1.2, -0.5, 0.4, 1.7] {
            assert!((lhs.eval(t) - rhs.eval(t)).norm() < 1e-14);
        }
    }

    #[test]
    fn coefficient_examples() {
        let t = RankOneTensor::hilbert(ind(1.0, E), ind(1.0, E));
        let c = CoefficientFunction::new(Kernel::rank_one(t.clone(), &q()).unwrap(), q());
        assert!((c.eval(GroupElement::IDENTITY).unwrap().re - 1.0).abs() < 1e-14);
        let d = RankOneTensor::hilbert(ind(1.0, 2.0), ind(4.0, 8.0));
        assert_eq!(
            rank_one_coefficient(&d, GroupElement::IDENTITY, &q())
                .unwrap()
                .norm(),
            0.0
        );

        // oracle: midpoint rule in ln t at 10x the node density of the engine
        let n = 200_000;
        let mut oracle = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let z = (k as f64 + 0.5) / n as f64;
            oracle += Complex64::from_polar(1.0, 2.0 * PI * z.exp());
        }
        oracle /= n as f64;
        let v = c.eval(g(1.0, 1.0)).unwrap();
        assert!((v - oracle).norm() < 1e-9, "{v} vs {oracle}");
    }

    #[test]
    fn ray_route_agrees_with_rank_one_formula() {
        let t = RankOneTensor::hilbert(
            HaarFunction::hat(0.5, 2.0).unwrap().add(&ind(-3.0, -1.0)),
            ind(0.75, 2.5).modulate(0.3),
        );
        let k = Kernel::rank_one(t.clone(), &q()).unwrap();
        for x in [g(0.0, 1.0), g(3.5, 0.8), g(-7.0, -1.7), g(9.5, 2.5)] {
            let a = rank_one_coefficient(&t, x, &q()).unwrap();
            let b = kernel_coefficient(&k, x, &q()).unwrap();
            assert!((a - b).norm() < 1e-10, "{x:?}: {a} vs {b}");
        }
    }

    #[test]
    fn fusion_small_case() {
        let t1 = RankOneTensor::hilbert(ind(1.0, 2.0), ind(0.5, 1.5));
        let t2 = RankOneTensor::hilbert(ind(-2.0, -0.5), ind(-3.0, -1.0));
        let samples = [
            g(0.0, 1.0),
            g(2.5, -0.7),
            g(-6.0, 1.9),
            g(9.0, -3.5),
            g(1.0, 0.3),
        ];
        let r = check_fusion(&t1, &t2, &samples, 1e-6, &q());
        assert!(r.pass, "{}", r.summary());
    }

    #[test]
    fn parity_vanishing_is_exact() {
        let samples: Vec<_> = [(1.0, -2.0), (0.5, 2.0), (-3.0, -0.5), (4.0, 1.5)]
            .iter()
            .map(|&(b, a)| g(b, a))
            .collect();
        let r =
            check_parity_vanishing(&ind(1.0, 2.0), &ind(1.0, 2.0), &samples, 0.0, &q()).unwrap();
        assert!(r.pass && r.max_residual == 0.0 && r.n_samples == 2);
        let r =
            check_parity_vanishing(&ind(1.0, 2.0), &ind(-2.0, -1.0), &samples, 0.0, &q()).unwrap();
        assert!(r.pass && r.max_residual == 0.0 && r.n_samples == 2);
        let mixed = ind(1.0, 2.0).add(&ind(-2.0, -1.0));
        assert_eq!(
            check_parity_vanishing(&mixed, &ind(1.0, 2.0), &samples, 0.0, &q()).unwrap_err(),
            Error::ParityUndefined
        );
    }

    #[test]
    fn w_isometry_examples() {
        let r = check_w_isometry(&ind(1.0, E), &ind(1.0, E), 1e-8, &q());
        assert!(r.pass, "{}", r.summary());
        let f = ind(1.0, E * E);
        let h = ind(E.recip(), E);
        assert!((w_form(&f, &h, &q()).unwrap() - 4.0).abs() < 1e-9);
        assert!((lambda_form(&f, &h, &q()).unwrap() - 4.0).abs() < 1e-9);
        let r = check_w_isometry(&f, &HaarFunction::zero(), 1e-8, &q());
        assert!(r.pass && r.max_residual == 0.0);
    }

    /// Brute-force 2-D midpoint grid in `(ln|h|, ln t)` for the `W` integral.
    #[test]
    fn w_integral_grid_oracle() {
        let f = ind(1.0, E * E);
        let h = ind(E.recip(), E);
        let n = 1500;
        let (z0, z1) = (-1.0f64, 3.0f64);
        let (y0, y1) = (-1.0f64, 1.0f64);
        let (dz, dy) = ((z1 - z0) / n as f64, (y1 - y0) / n as f64);
        let mut s = 0.0;
        for i in 0..n {
            let hh = (z0 + (i as f64 + 0.5) * dz).exp();
            for j in 0..n {
                let k = (y0 + (j as f64 + 0.5) * dy).exp();
                s += (f.eval(k * hh) * h.eval(k)).norm_sqr();
            }
        }
        s *= dz * dy;
        assert!((s - 4.0).abs() < 1e-2, "{s}");
    }
}
