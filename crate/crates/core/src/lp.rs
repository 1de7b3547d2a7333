//! `Lᵖ` variants: the `V_p` isometry, `Ψ_p` multiplicativity in bilinear mode,
//! and the `γ_n` norm-ratio table.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{kernel_coefficient, rank_one_coefficient, GroupElement};
use crate::dual_conv::dc_kernel;
use crate::error::{Error, Result};
use crate::haar::HaarFunction;
use crate::interval::{dedup_points, intersect_all, merge, Interval};
use crate::operators::{FiniteRankKernel, Kernel, PairingMode, RankOneTensor};
use crate::quadrature::{haar_line_integral, QuadratureSpec};
use crate::report::{Report, ResidualLog};

/// Conjugate exponent `p/(p-1)`.
pub fn conjugate_exponent(p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(p / (p - 1.0))
}

/// `∬ |V_p(f⊗g)(h,t)|ᵖ dh dt/(|h||t|)` with `V_p(X)(h,t) = X(t/(1+h), t/(1+h⁻¹))`,
/// integrated directly in `(h, t)`.
pub fn vp_power(f: &HaarFunction, g: &HaarFunction, p: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    if f.is_zero() || g.is_zero() {
        return Ok(0.0);
    }
    let (fs, gs) = (f.supports(), g.supports());
    let (fp, gp) = (f.panel_points(), g.panel_points());
    let h_support = merge(
        gs.iter()
            .flat_map(|b| fs.iter().map(move |a| b.div(a)))
            .collect(),
    );
    let mut h_hints: Vec<f64> = gp
        .iter()
        .flat_map(|b| fp.iter().map(move |a| b / a))
        .chain([-1.0])
        .collect();
    dedup_points(&mut h_hints);
    let inner = q.tightened();
    let est = haar_line_integral(
        |h| {
            let (u, w) = (1.0 + h, (1.0 + h) / h);
            if u == 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let support = intersect_all(
                &merge(fs.iter().map(|i| i.scale(u)).collect()),
                &merge(gs.iter().map(|i| i.scale(w)).collect()),
            );
            let points: Vec<f64> = fp
                .iter()
                .map(|a| a * u)
                .chain(gp.iter().map(|b| b * w))
                .collect();
            let v = haar_line_integral(
                |t| {
                    let x = f.eval(t / u) * g.eval(t / w);
                    Ok(Complex64::new(x.norm().powf(p), 0.0))
                },
                &support,
                &points,
                0.0,
                &inner,
            )?;
            Ok(v.value)
        },
        &h_support,
        &h_hints,
        0.0,
        q,
    )?;
    Ok(est.value.re)
}

/// Compares `‖V_p(X₁⊗X₂)‖_p` with `‖X₁‖_p ‖X₂‖_p`; the residual is relative.
pub fn vp_isometry_check(
    x1: &HaarFunction,
    x2: &HaarFunction,
    p: f64,
    tol: f64,
    q: &QuadratureSpec,
) -> Report {
    let mut log = ResidualLog::new("vp-isometry", tol);
    let sides = (|| -> Result<(f64, f64)> {
        let lhs = vp_power(x1, x2, p, q)?.powf(p.recip());
        let rhs = x1.lp_norm(p, q)? * x2.lp_norm(p, q)?;
        Ok((lhs, rhs))
    })();
    if let Some((lhs, rhs)) = log.record(sides) {
        let d = (lhs - rhs).abs();
        log.push(if rhs > 0.0 { d / rhs } else { d }, 1.0);
    }
    log.finish(1)
}

/// One row of the `γ_n` norm comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpExperimentRow {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub norm_p_xi: f64,
    pub norm_q_eta: f64,
    pub norm_2_xi: f64,
    pub norm_2_eta: f64,
    pub ratio: f64,
    pub closed_form: f64,
    pub residual: f64,
}

impl LpExperimentRow {
    pub const CSV_HEADER: &'static str =
        "n,p,q,norm_p_xi,norm_q_eta,norm_2_xi,norm_2_eta,ratio,closed_form,residual";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.n,
            self.p,
            self.q,
            self.norm_p_xi,
            self.norm_q_eta,
            self.norm_2_xi,
            self.norm_2_eta,
            self.ratio,
            self.closed_form,
            self.residual
        )
    }
}

/// `γ_n = 1_[e^{-n}, e^n]`.
pub fn gamma(n: u32) -> Result<HaarFunction> {
    let n = n as f64;
    HaarFunction::indicator((-n).exp(), n.exp())
}

/// Norm ratios `(‖ξₙ‖₂/‖ξₙ‖_p)(‖ηₙ‖₂/‖ηₙ‖_q)` with `ξₙ = γₙ, ηₙ = γ₁` for
/// `p < 2` and `ξₙ = γ₁, ηₙ = γₙ` for `p > 2`.
pub fn gamma_ratio_table(
    p: f64,
    n_values: &[u32],
    quad: &QuadratureSpec,
) -> Result<Vec<LpExperimentRow>> {
    if p == 2.0 {
        return Err(Error::InvalidExponent(p));
    }
    let q = conjugate_exponent(p)?;
    if n_values.contains(&0) {
        return Err(Error::InvalidSupport("γ_n needs n ≥ 1".into()));
    }
    n_values
        .par_iter()
        .map(|&n| {
            let (xi, eta) = if p < 2.0 {
                (gamma(n)?, gamma(1)?)
            } else {
                (gamma(1)?, gamma(n)?)
            };
            let norm_p_xi = xi.lp_norm(p, quad)?;
            let norm_q_eta = eta.lp_norm(q, quad)?;
            let norm_2_xi = xi.lp_norm(2.0, quad)?;
            let norm_2_eta = eta.lp_norm(2.0, quad)?;
            let ratio = (norm_2_xi / norm_p_xi) * (norm_2_eta / norm_q_eta);
            let closed_form = (n as f64).powf(0.5 - if p < 2.0 { p.recip() } else { q.recip() });
            Ok(LpExperimentRow {
                n,
                p,
                q,
                norm_p_xi,
                norm_q_eta,
                norm_2_xi,
                norm_2_eta,
                ratio,
                closed_form,
                residual: (ratio - closed_form).abs(),
            })
        })
        .collect()
}

/// `Ψ_p(T₁)Ψ_p(T₂) = Ψ_p(T₁ ⊠ T₂)` at group samples, for bilinear tensors.
pub fn dc_bilinear_smoke(
    t1: &RankOneTensor,
    t2: &RankOneTensor,
    p: f64,
    samples: &[GroupElement],
    tol: f64,
    q: &QuadratureSpec,
) -> Report {
    let mut log = ResidualLog::new("dc-bilinear", tol);
    let product = (|| -> Result<Kernel> {
        if t1.mode != PairingMode::Bilinear || t2.mode != PairingMode::Bilinear {
            return Err(Error::ModeMismatch);
        }
        let k1 = FiniteRankKernel::with_exponent(vec![t1.clone()], PairingMode::Bilinear, p, q)?;
        let k2 = FiniteRankKernel::with_exponent(vec![t2.clone()], PairingMode::Bilinear, p, q)?;
        Ok(dc_kernel(&k1.into(), &k2.into(), &q.tightened())?.into())
    })();
    let Some(product) = log.record(product) else {
        return log.finish(1);
    };
    let values: Vec<Result<(Complex64, Complex64)>> = samples
        .par_iter()
        .map(|&x| {
            let lhs = rank_one_coefficient(t1, x, q)? * rank_one_coefficient(t2, x, q)?;
            Ok((lhs, kernel_coefficient(&product, x, q)?))
        })
        .collect();
    for v in values {
        if let Some((l, r)) = log.record(v) {
            log.push((l - r).norm(), l.norm());
        }
    }
    log.finish(1)
}

/// Truncations `(1+ε, 10]` of `ξ(t) = (t-1)^{-1/3}`.
pub fn divergence_profile(eps: f64) -> Result<HaarFunction> {
    HaarFunction::new(
        |t| Complex64::new((t - 1.0).powf(-1.0 / 3.0), 0.0),
        Some(Interval::new(1.0 + eps, 10.0)),
        None,
        crate::haar::Smoothness::Smooth,
        // geometric grid toward the blow-up at 1
        (1..)
            .map(|k| 1.0 + eps * 4f64.powi(k))
            .take_while(|t| *t < 10.0)
            .collect(),
    )
}

/// `‖ξ·ξ‖₂²` for the truncation at `ε`.
pub fn divergence_value(eps: f64, q: &QuadratureSpec) -> Result<f64> {
    let xi = divergence_profile(eps)?;
    xi.pointwise_product(&xi).lp_power(2.0, q)
}
