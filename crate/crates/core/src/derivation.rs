//! The cyclic bilinear form `Φ(T₁ ⊗ T₀)` and the derivation identity.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual_conv::dc_kernel;
use crate::error::{Error, Result};
use crate::haar::HaarFunction;
use crate::operators::{Kernel, PairingMode, RankOneTensor};
use crate::quadrature::QuadratureSpec;
use crate::ray::double_integral;
use crate::report::{Report, ResidualLog};

/// How a value of `Φ` was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    InnerProductForm,
    KernelIntegralForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilinearFormValue {
    pub value: Complex64,
    pub route: Route,
    pub error_estimate: f64,
}

/// `S ξ(t) = sign(t) ξ(t)`.
pub fn op_s(f: &HaarFunction) -> HaarFunction {
    f.sign_multiply()
}

/// `R ξ(t) = ξ(-t)`.
pub fn op_r(f: &HaarFunction) -> HaarFunction {
    f.reflect()
}

/// `⟨Sξ₁, R ξ̄₀⟩ ⟨R η̄₀, η₁⟩` as a product of two one-dimensional integrals.
pub fn phi_rank_one(
    t1: &RankOneTensor,
    t0: &RankOneTensor,
    q: &QuadratureSpec,
) -> Result<BilinearFormValue> {
    if t1.mode != PairingMode::Hilbert || t0.mode != PairingMode::Hilbert {
        return Err(Error::ModeMismatch);
    }
    // ⟨f, g⟩ = ∫ f conj(g) dt/|t|
    let first = op_s(&t1.left)
        .pointwise_product(&op_r(&t0.left.conj()).conj())
        .haar_integral_estimate(q)?;
    let second = op_r(&t0.right.conj())
        .pointwise_product(&t1.right.conj())
        .haar_integral_estimate(q)?;
    Ok(BilinearFormValue {
        value: first.value * second.value,
        route: Route::InnerProductForm,
        error_estimate: first.error * second.value.norm() + second.error * first.value.norm(),
    })
}

/// `∬ sign(s) T₁(s,t) T₀(-s,-t) ds dt/(|s||t|)`.
pub fn phi_kernel(k1: &Kernel, k0: &Kernel, q: &QuadratureSpec) -> Result<BilinearFormValue> {
    if k1.mode() != PairingMode::Hilbert || k0.mode() != PairingMode::Hilbert {
        return Err(Error::ModeMismatch);
    }
    let est = double_integral(
        &[(k1, false), (k0, true)],
        |alpha, r, v| {
            if (alpha * r) > 0.0 {
                v[0] * v[1]
            } else {
                -v[0] * v[1]
            }
        },
        q,
    )?;
    Ok(BilinearFormValue {
        value: est.value,
        route: Route::KernelIntegralForm,
        error_estimate: est.error,
    })
}

/// `Φ((T₁⊠T₂)⊗T₀)`, `Φ(T₂⊗(T₀⊠T₁))` and `Φ(T₁⊗(T₂⊠T₀))`, with the products
/// built at the tightened spec.
pub fn derivation_terms(
    t1: &RankOneTensor,
    t2: &RankOneTensor,
    t0: &RankOneTensor,
    q: &QuadratureSpec,
) -> Result<[Complex64; 3]> {
    let inner = q.tightened();
    let k1 = Kernel::rank_one(t1.clone(), q)?;
    let k2 = Kernel::rank_one(t2.clone(), q)?;
    let k0 = Kernel::rank_one(t0.clone(), q)?;
    let k12: Kernel = dc_kernel(&k1, &k2, &inner)?.into();
    let k01: Kernel = dc_kernel(&k0, &k1, &inner)?.into();
    let k20: Kernel = dc_kernel(&k2, &k0, &inner)?.into();
    let (a, (b, c)) = rayon::join(
        || phi_kernel(&k12, &k0, q),
        || rayon::join(|| phi_kernel(&k2, &k01, q), || phi_kernel(&k1, &k20, q)),
    );
    Ok([a?.value, b?.value, c?.value])
}

/// `|Φ((T₁⊠T₂)⊗T₀) - Φ(T₂⊗(T₀⊠T₁)) - Φ(T₁⊗(T₂⊠T₀))|`.
pub fn check_derivation_identity(
    t1: &RankOneTensor,
    t2: &RankOneTensor,
    t0: &RankOneTensor,
    q: &QuadratureSpec,
    tol: f64,
) -> Report {
    let mut log = ResidualLog::new("derivation-identity", tol);
    if let Some([a, b, c]) = log.record(derivation_terms(t1, t2, t0, q)) {
        log.push((a - b - c).norm(), a.norm().max(b.norm()).max(c.norm()));
    }
    log.finish(1)
}

/// `|Φ(T₁⊗T₀) + Φ(T₀⊗T₁)|` on both routes, and the gap between routes.
pub fn check_cyclicity(
    t1: &RankOneTensor,
    t0: &RankOneTensor,
    q: &QuadratureSpec,
    tol: f64,
) -> Report {
    let mut log = ResidualLog::new("cyclicity", tol);
    let values = (|| -> Result<[Complex64; 4]> {
        let k1 = Kernel::rank_one(t1.clone(), q)?;
        let k0 = Kernel::rank_one(t0.clone(), q)?;
        Ok([
            phi_rank_one(t1, t0, q)?.value,
            phi_rank_one(t0, t1, q)?.value,
            phi_kernel(&k1, &k0, q)?.value,
            phi_kernel(&k0, &k1, q)?.value,
        ])
    })();
    if let Some([r10, r01, k10, k01]) = log.record(values) {
        let scale = r10.norm();
        log.push((r10 + r01).norm(), scale);
        log.push((k10 + k01).norm(), scale);
        log.push((r10 - k10).norm(), scale);
        log.push((r01 - k01).norm(), scale);
    }
    log.finish(1)
}

/// `|Φ(T₁⊗T₀)| ≤ ‖T₁‖₂ ‖T₀‖₂`; the residual is the excess over the bound.
pub fn check_phi_l2_bound(k1: &Kernel, k0: &Kernel, q: &QuadratureSpec, tol: f64) -> Report {
    let mut log = ResidualLog::new("phi-l2-bound", tol);
    let sides = (|| -> Result<(f64, f64)> {
        let phi = phi_kernel(k1, k0, q)?.value.norm();
        Ok((phi, k1.l2_norm(q)? * k0.l2_norm(q)?))
    })();
    if let Some((phi, bound)) = log.record(sides) {
        log.push((phi - bound).max(0.0), bound);
    }
    log.finish(1)
}

/// `α = 1_[1,e]` and `β = conj(Rα) = 1_[-e,-1]`.
pub fn witness_pair() -> Result<(RankOneTensor, RankOneTensor)> {
    let alpha = HaarFunction::indicator(1.0, std::f64::consts::E)?;
    let beta = op_r(&alpha).conj();
    Ok((
        RankOneTensor::hilbert(alpha.clone(), alpha),
        RankOneTensor::hilbert(beta.clone(), beta),
    ))
}

/// `Φ((α⊗α)⊗(β⊗β))` on both routes; both should equal `⟨α,α⟩² = 1`.
pub fn witness_values(q: &QuadratureSpec) -> Result<[Complex64; 2]> {
    let (a, b) = witness_pair()?;
    Ok([
        phi_rank_one(&a, &b, q)?.value,
        phi_kernel(&Kernel::rank_one(a, q)?, &Kernel::rank_one(b, q)?, q)?.value,
    ])
}

/// Runs [`check_derivation_identity`] over many triples in parallel.
pub fn check_derivation_batch(
    triples: &[(RankOneTensor, RankOneTensor, RankOneTensor)],
    q: &QuadratureSpec,
    tol: f64,
) -> Report {
    let reports: Vec<Report> = triples
        .par_iter()
        .map(|(a, b, c)| check_derivation_identity(a, b, c, q, tol))
        .collect();
    Report::combine("derivation-identity", &reports, tol)
}
