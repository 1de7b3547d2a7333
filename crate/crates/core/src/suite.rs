//! Seeded batch runners shared by the CLI and the acceptance tests.
//!
//! Case builders (`*_cases`) draw inputs from [`crate::family`] with seeds
//! derived from one master seed; runners check every case and merge the
//! reports. Tuples are drawn so that the products under test do not vanish
//! identically.

use rayon::prelude::*;

use crate::coefficients::{
    check_fusion, check_intertwine_pe, check_parity_vanishing, check_w_isometry, GroupElement,
};
use crate::derivation::{
    check_cyclicity, check_derivation_identity, check_phi_l2_bound, witness_values,
};
use crate::dual_conv::{
    bochner_norm_sum, check_associative, check_commutative, check_pdiag_homomorphism,
    dc_bochner_terms, HGrid,
};
use crate::error::{Error, Result};
use crate::family::{
    common_alpha_support, generate_family, generate_group_samples, generate_group_samples_on,
    generate_kernel_points, generate_linked_tuples, generate_tuples_where, log_width,
};
use crate::haar::HaarFunction;
use crate::lp::vp_isometry_check;
use crate::operators::{FiniteRankKernel, Kernel, PairingMode, RankOneTensor};
use crate::quadrature::QuadratureSpec;
use crate::report::{Report, ResidualLog};

/// Largest `|b|` of generated group samples.
pub const B_MAX: f64 = 10.0;

/// Smallest log-width of the common slope support of a drawn tuple.
pub const MIN_LINK: f64 = 0.05;

fn sub_seed(seed: u64, tag: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(tag << 32)
        .wrapping_add(i as u64)
}

fn failed(name: &str, tol: f64, seed: u64, e: &Error) -> Report {
    let mut log = ResidualLog::new(name, tol);
    log.fail(e);
    log.finish(0).with_seed(seed)
}

fn merge(name: &str, seed: u64, tol: f64, reports: Vec<Report>) -> Report {
    Report::combine(name, &reports, tol).with_seed(seed)
}

fn kernels(t: &[RankOneTensor], q: &QuadratureSpec) -> Result<Vec<Kernel>> {
    t.iter().map(|x| Kernel::rank_one(x.clone(), q)).collect()
}

fn points_for(
    seed: u64,
    samples: usize,
    t: &[RankOneTensor],
    q: &QuadratureSpec,
) -> Result<Vec<(f64, f64)>> {
    let ks = kernels(t, q)?;
    let refs: Vec<&Kernel> = ks.iter().collect();
    Ok(generate_kernel_points(seed, samples, &refs))
}

pub type GroupCase = (Vec<RankOneTensor>, Vec<GroupElement>);
pub type PointCase = (Vec<RankOneTensor>, Vec<(f64, f64)>);

pub fn fusion_cases(seed: u64, cases: usize, samples: usize) -> Result<Vec<GroupCase>> {
    Ok(
        generate_linked_tuples(sub_seed(seed, 1, 0), cases, 2, false, MIN_LINK)?
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let a = common_alpha_support(&p);
                (
                    p,
                    generate_group_samples_on(sub_seed(seed, 2, i), samples, B_MAX, &a),
                )
            })
            .collect(),
    )
}

/// Fusion identity on `cases` random pairs at `samples` group elements each.
pub fn fusion(seed: u64, cases: usize, samples: usize, tol: f64, q: &QuadratureSpec) -> Report {
    match fusion_cases(seed, cases, samples) {
        Ok(c) => merge(
            "fusion-check",
            seed,
            tol,
            c.par_iter()
                .map(|(p, xs)| check_fusion(&p[0], &p[1], xs, tol, q))
                .collect(),
        ),
        Err(e) => failed("fusion-check", tol, seed, &e),
    }
}

pub fn commute_cases(
    seed: u64,
    cases: usize,
    samples: usize,
    q: &QuadratureSpec,
) -> Result<Vec<PointCase>> {
    generate_linked_tuples(sub_seed(seed, 3, 0), cases, 2, false, MIN_LINK)?
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let pts = points_for(sub_seed(seed, 4, i), samples, &p, q)?;
            Ok((p, pts))
        })
        .collect()
}

/// `T₁ ⊠ T₂ = T₂ ⊠ T₁` at points of the product support.
pub fn commute(seed: u64, cases: usize, samples: usize, tol: f64, q: &QuadratureSpec) -> Report {
    let run = || -> Result<Vec<Report>> {
        commute_cases(seed, cases, samples, q)?
            .par_iter()
            .map(|(p, pts)| {
                let k = kernels(p, q)?;
                Ok(check_commutative(&k[0], &k[1], pts, tol, q))
            })
            .collect()
    };
    match run() {
        Ok(r) => merge("dc-commute", seed, tol, r),
        Err(e) => failed("dc-commute", tol, seed, &e),
    }
}

pub fn assoc_cases(
    seed: u64,
    cases: usize,
    samples: usize,
    q: &QuadratureSpec,
) -> Result<Vec<PointCase>> {
    generate_linked_tuples(sub_seed(seed, 5, 0), cases, 3, false, MIN_LINK)?
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let pts = points_for(sub_seed(seed, 6, i), samples, &p, q)?;
            Ok((p, pts))
        })
        .collect()
}

/// Both nestings of a triple product against the direct double integral.
pub fn assoc(seed: u64, cases: usize, samples: usize, tol: f64, q: &QuadratureSpec) -> Report {
    match assoc_cases(seed, cases, samples, q) {
        Ok(c) => merge(
            "dc-assoc",
            seed,
            tol,
            c.par_iter()
                .map(|(p, pts)| check_associative(&p[0], &p[1], &p[2], pts, tol, q))
                .collect(),
        ),
        Err(e) => failed("dc-assoc", tol, seed, &e),
    }
}

/// Mixed-parity triples `(T₁, T₂, T₀)`.
pub fn derivation_cases(seed: u64, cases: usize) -> Result<Vec<Vec<RankOneTensor>>> {
    generate_linked_tuples(sub_seed(seed, 7, 0), cases, 3, true, MIN_LINK)
}

/// Derivation identity on mixed-parity triples.
pub fn derivation(seed: u64, cases: usize, tol: f64, q: &QuadratureSpec) -> Report {
    match derivation_cases(seed, cases) {
        Ok(c) => merge(
            "derivation-identity",
            seed,
            tol,
            c.par_iter()
                .map(|t| check_derivation_identity(&t[0], &t[1], &t[2], q, tol))
                .collect(),
        ),
        Err(e) => failed("derivation-identity", tol, seed, &e),
    }
}

/// Mixed-parity pairs `(T₁, T₀)`.
pub fn phi_cases(seed: u64, cases: usize) -> Result<Vec<Vec<RankOneTensor>>> {
    generate_linked_tuples(sub_seed(seed, 8, 0), cases, 2, true, MIN_LINK)
}

/// `Φ(T₁⊗T₀) = -Φ(T₀⊗T₁)` on mixed-parity pairs, on both routes.
pub fn cyclicity(seed: u64, cases: usize, tol: f64, q: &QuadratureSpec) -> Report {
    match phi_cases(seed, cases) {
        Ok(c) => merge(
            "cyclicity",
            seed,
            tol,
            c.par_iter()
                .map(|t| check_cyclicity(&t[0], &t[1], q, tol))
                .collect(),
        ),
        Err(e) => failed("cyclicity", tol, seed, &e),
    }
}

/// `|Φ(T₁⊗T₀)| ≤ ‖T₁‖₂‖T₀‖₂` on mixed-parity pairs.
pub fn phi_l2_bound(seed: u64, cases: usize, tol: f64, q: &QuadratureSpec) -> Report {
    let run = || -> Result<Vec<Report>> {
        phi_cases(seed, cases)?
            .par_iter()
            .map(|t| {
                let k = kernels(t, q)?;
                Ok(check_phi_l2_bound(&k[0], &k[1], q, tol))
            })
            .collect()
    };
    match run() {
        Ok(r) => merge("phi-l2-bound", seed, tol, r),
        Err(e) => failed("phi-l2-bound", tol, seed, &e),
    }
}

/// `|Φ((α⊗α)⊗(β⊗β)) - 1|` on both routes.
pub fn witness(tol: f64, q: &QuadratureSpec) -> Report {
    let mut log = ResidualLog::new("derivation-witness", tol);
    if let Some(vals) = log.record(witness_values(q)) {
        for v in vals {
            log.push((v - 1.0).norm(), 1.0);
        }
    }
    log.finish(1)
}

/// Tolerance of the cyclicity check inside [`derivation_all`].
pub const CYCLIC_TOL: f64 = 1e-8;
/// Tolerance of the `L²` bound and the witness inside [`derivation_all`].
pub const BOUND_TOL: f64 = 1e-9;

/// Identity, cyclicity, `L²` bound and witness.
pub fn derivation_all(
    seed: u64,
    cases: usize,
    pairs: usize,
    tol: f64,
    q: &QuadratureSpec,
) -> Vec<Report> {
    vec![
        derivation(seed, cases, tol, q),
        cyclicity(seed, pairs, CYCLIC_TOL, q),
        phi_l2_bound(seed, pairs, BOUND_TOL, q),
        witness(BOUND_TOL, q),
    ]
}

/// Function pairs with samples on the half where their coefficient must vanish.
pub fn parity_cases(
    seed: u64,
    cases: usize,
    samples: usize,
) -> Result<Vec<(HaarFunction, HaarFunction, Vec<GroupElement>)>> {
    let f = generate_family(sub_seed(seed, 9, 0), 2 * cases)?;
    (0..cases)
        .map(|i| {
            let (a, b) = (f[2 * i].clone(), f[2 * i + 1].clone());
            let flip = if a.parity()? == b.parity()? {
                -1.0
            } else {
                1.0
            };
            let xs = generate_group_samples(sub_seed(seed, 10, i), samples, B_MAX)
                .into_iter()
                .map(|x| GroupElement {
                    a: flip * x.a.abs(),
                    ..x
                })
                .collect();
            Ok((a, b, xs))
        })
        .collect()
}

/// Parity vanishing on same- and opposite-parity pairs.
pub fn parity(seed: u64, cases: usize, samples: usize, tol: f64, q: &QuadratureSpec) -> Report {
    let run = || -> Result<Vec<Report>> {
        parity_cases(seed, cases, samples)?
            .iter()
            .map(|(a, b, xs)| check_parity_vanishing(a, b, xs, tol, q))
            .collect()
    };
    match run() {
        Ok(r) => merge("parity-check", seed, tol, r),
        Err(e) => failed("parity-check", tol, seed, &e),
    }
}

fn finite(t: &RankOneTensor, q: &QuadratureSpec) -> Result<FiniteRankKernel> {
    FiniteRankKernel::new(vec![t.clone()], PairingMode::Hilbert, q)
}

pub fn pdiag_cases(
    seed: u64,
    cases: usize,
    samples: usize,
    q: &QuadratureSpec,
) -> Result<Vec<PointCase>> {
    generate_linked_tuples(sub_seed(seed, 11, 0), cases, 2, true, MIN_LINK)?
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let pts = points_for(sub_seed(seed, 12, i), samples, &p, q)?;
            Ok((p, pts))
        })
        .collect()
}

/// `P_diag(T₁) ⊠ P_diag(T₂) = P_diag(T₁ ⊠ T₂)` on mixed-parity pairs.
pub fn pdiag(seed: u64, cases: usize, samples: usize, tol: f64, q: &QuadratureSpec) -> Report {
    let run = || -> Result<Vec<Report>> {
        pdiag_cases(seed, cases, samples, q)?
            .par_iter()
            .map(|(p, pts)| {
                let (a, b) = (finite(&p[0], q)?, finite(&p[1], q)?);
                Ok(check_pdiag_homomorphism(&a, &b, pts, tol, q))
            })
            .collect()
    };
    match run() {
        Ok(r) => merge("pdiag-homomorphism", seed, tol, r),
        Err(e) => failed("pdiag-homomorphism", tol, seed, &e),
    }
}

pub fn intertwine_cases(seed: u64, cases: usize, samples: usize) -> Result<Vec<GroupCase>> {
    Ok(
        generate_linked_tuples(sub_seed(seed, 13, 0), cases, 1, true, MIN_LINK)?
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let a = common_alpha_support(&p);
                (
                    p,
                    generate_group_samples_on(sub_seed(seed, 14, i), samples, B_MAX, &a),
                )
            })
            .collect(),
    )
}

/// `Ψ P_diag = P_e Ψ` on mixed-parity kernels.
pub fn intertwine(seed: u64, cases: usize, samples: usize, tol: f64, q: &QuadratureSpec) -> Report {
    let run = || -> Result<Vec<Report>> {
        intertwine_cases(seed, cases, samples)?
            .par_iter()
            .map(|(p, xs)| Ok(check_intertwine_pe(&finite(&p[0], q)?, xs, tol, q)))
            .collect()
    };
    match run() {
        Ok(r) => merge("intertwine-check", seed, tol, r),
        Err(e) => failed("intertwine-check", tol, seed, &e),
    }
}

pub fn isometry_cases(seed: u64, cases: usize) -> Result<Vec<(HaarFunction, HaarFunction)>> {
    let f = generate_family(sub_seed(seed, 15, 0), 2 * cases)?;
    Ok(f.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect())
}

/// `W`, `λ`-form and `V` isometries, plus `V_p` for each exponent in `ps`.
pub fn isometries(
    seed: u64,
    cases: usize,
    ps: &[f64],
    tol: f64,
    q: &QuadratureSpec,
) -> Vec<Report> {
    let pairs = match isometry_cases(seed, cases) {
        Ok(p) => p,
        Err(e) => return vec![failed("w-isometry", tol, seed, &e)],
    };
    let w = pairs
        .par_iter()
        .map(|(f, g)| check_w_isometry(f, g, tol, q))
        .collect();
    let mut out = vec![merge("w-isometry", seed, tol, w)];
    for &p in ps {
        let r = pairs
            .par_iter()
            .map(|(f, g)| vp_isometry_check(f, g, p, tol, q))
            .collect();
        out.push(merge(&format!("vp-isometry p={p}"), seed, tol, r));
    }
    out
}

/// Pairs whose Bochner integrand is not identically zero.
pub fn bound_cases(seed: u64, cases: usize) -> Result<Vec<Vec<RankOneTensor>>> {
    generate_tuples_where(sub_seed(seed, 16, 0), cases, 2, false, |t| {
        log_width(&HGrid::h_support(&t[0], &t[1])) >= MIN_LINK
    })
}

/// Bochner term-norm sums against `‖ξ₁‖‖η₁‖‖ξ₂‖‖η₂‖`; residual is the excess.
pub fn norm_inequality(seed: u64, cases: usize, tol: f64, q: &QuadratureSpec) -> Report {
    let pairs = match bound_cases(seed, cases) {
        Ok(p) => p,
        Err(e) => return failed("rank-one-bound", tol, seed, &e),
    };
    let reports = pairs
        .par_iter()
        .map(|t| {
            let (a, b) = (&t[0], &t[1]);
            let mut log = ResidualLog::new("rank-one-bound", tol);
            let sides = (|| -> Result<(f64, f64)> {
                let grid = HGrid::for_pair(a, b, 1.0, &[], 4, 16)?;
                let sum = bochner_norm_sum(&dc_bochner_terms(a, b, &grid)?, q)?;
                let bound = a.left.lp_norm(2.0, q)?
                    * a.right.lp_norm(2.0, q)?
                    * b.left.lp_norm(2.0, q)?
                    * b.right.lp_norm(2.0, q)?;
                Ok((sum, bound))
            })();
            if let Some((sum, bound)) = log.record(sides) {
                log.push((sum - bound).max(0.0), bound);
            }
            log.finish(1)
        })
        .collect();
    merge("rank-one-bound", seed, tol, reports)
}
