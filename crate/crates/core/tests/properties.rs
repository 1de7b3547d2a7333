use num_complex::Complex64;
use proptest::prelude::*;

use dualconv::coefficients::rank_one_coefficient;
use dualconv::derivation::{
    check_derivation_identity, op_r, op_s, phi_kernel, phi_rank_one, witness_values,
};
use dualconv::dual_conv::u_support;
use dualconv::{
    dc_kernel, dc_kernel_hform, group_inv, group_mul, l2_kernel_norm, pi_act, FiniteRankKernel,
    GroupElement, HaarFunction, Kernel, PairingMode, QuadratureSpec, RankOneTensor, Sign,
};

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

/// Endpoints log-uniform in `[1/4, 8]` on either sign, amplitude in `[1/2, 2]`.
fn function() -> impl Strategy<Value = HaarFunction> {
    (
        -1.386f64..2.079,
        0.1f64..1.5,
        any::<bool>(),
        any::<bool>(),
        0.5f64..2.0,
    )
        .prop_map(|(lo, w, neg, hat, amp)| {
            let (a, b) = (lo.exp(), (lo + w).exp().min(8.0).max(lo.exp() * 1.05));
            let (a, b) = if neg { (-b, -a) } else { (a, b) };
            let f = if hat {
                HaarFunction::hat(a, b)
            } else {
                HaarFunction::indicator(a, b)
            };
            f.unwrap().scale(Complex64::new(amp, 0.0))
        })
}

fn hat() -> impl Strategy<Value = HaarFunction> {
    (-1.386f64..1.5, 0.3f64..1.5, any::<bool>())
        .prop_map(|(lo, w, neg)| {
            let (a, b) = (lo.exp(), (lo + w).exp());
            if neg {
                HaarFunction::hat(-b, -a)
            } else {
                HaarFunction::hat(a, b)
            }
        })
        .prop_map(Result::unwrap)
}

fn mixed() -> impl Strategy<Value = HaarFunction> {
    (function(), function()).prop_map(|(f, g)| {
        let g = if f.parity() == g.parity() {
            g.reflect()
        } else {
            g
        };
        f.add(&g)
    })
}

fn tensor() -> impl Strategy<Value = RankOneTensor> {
    (function(), function()).prop_map(|(f, g)| RankOneTensor::hilbert(f, g))
}

fn mixed_tensor() -> impl Strategy<Value = RankOneTensor> {
    (mixed(), mixed()).prop_map(|(f, g)| RankOneTensor::hilbert(f, g))
}

fn nonzero() -> impl Strategy<Value = f64> {
    (0.25f64..4.0, any::<bool>()).prop_map(|(r, neg)| if neg { -r } else { r })
}

fn group() -> impl Strategy<Value = GroupElement> {
    (-5.0f64..5.0, nonzero()).prop_map(|(b, a)| GroupElement::new(b, a).unwrap())
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

fn probe_points(f: &HaarFunction) -> Vec<f64> {
    f.supports()
        .iter()
        .flat_map(|i| (0..=8).map(move |k| i.lo + (i.hi - i.lo) * k as f64 / 8.0))
        .flat_map(|t| [t, -t, 1.0 / t])
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn haar_measure_invariance(f in function(), r in nonzero()) {
        let q = q();
        let base = f.haar_integral(&q).unwrap();
        for g in [f.dilate(r).unwrap(), f.reflect(), f.invert_variable()] {
            prop_assert!(close(g.haar_integral(&q).unwrap(), base, 1e-9));
        }
    }

    #[test]
    fn inversion_preserves_lp_norms(f in function()) {
        let q = q();
        let j = f.invert_variable();
        for p in [1.0, 2.0, 1.5, 4.0] {
            let (a, b) = (f.lp_norm(p, &q).unwrap(), j.lp_norm(p, &q).unwrap());
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "p={p}: {a} vs {b}");
        }
    }

    #[test]
    fn projections_and_involutions_are_exact(f in mixed()) {
        let pts = probe_points(&f);
        for sign in [Sign::Plus, Sign::Minus] {
            let p = f.parity_project(sign);
            let pp = p.parity_project(sign);
            for &t in &pts {
                prop_assert_eq!(p.eval(t), pp.eval(t));
            }
        }
        let (ss, rr) = (op_s(&op_s(&f)), op_r(&op_r(&f)));
        for &t in &pts {
            prop_assert_eq!(ss.eval(t), f.eval(t));
            prop_assert_eq!(rr.eval(t), f.eval(t));
        }
    }

    #[test]
    fn indicator_integral_is_log_ratio(lo in -1.386f64..2.0, w in 0.01f64..3.0, neg in any::<bool>()) {
        let (a, b) = (lo.exp(), (lo + w).exp());
        let f = if neg { HaarFunction::indicator(-b, -a) } else { HaarFunction::indicator(a, b) }.unwrap();
        let v = f.haar_integral(&q()).unwrap();
        prop_assert!((v.re - (b / a).ln()).abs() <= 1e-9 * (b / a).ln() && v.im == 0.0);
    }

    #[test]
    fn compression_does_not_raise_projective_bound(ts in prop::collection::vec(mixed_tensor(), 1..4)) {
        let q = q();
        let k = FiniteRankKernel::new(ts, PairingMode::Hilbert, &q).unwrap();
        let c = k.parity_compress(&q).unwrap();
        prop_assert!(c.projective_bound() <= k.projective_bound() + 1e-9);
    }

    #[test]
    fn finite_kernel_eval_is_termwise(ts in prop::collection::vec(tensor(), 1..5), s in nonzero(), t in nonzero()) {
        let k = FiniteRankKernel::new(ts.clone(), PairingMode::Hilbert, &q()).unwrap();
        let sum = ts.iter().fold(Complex64::new(0.0, 0.0), |acc, x| acc + x.eval(s, t));
        prop_assert_eq!(k.eval(s, t), sum);
    }

    #[test]
    fn group_laws(x in group(), y in group(), z in group()) {
        let lhs = group_mul(group_mul(x, y), z);
        let rhs = group_mul(x, group_mul(y, z));
        prop_assert!((lhs.b - rhs.b).abs() <= 1e-12 * (1.0 + lhs.b.abs()));
        prop_assert!((lhs.a - rhs.a).abs() <= 1e-12 * lhs.a.abs());
        for e in [group_mul(x, group_inv(x)), group_mul(group_inv(x), x)] {
            prop_assert!(e.b.abs() <= 1e-12 && (e.a - 1.0).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transpose_preserves_l2_norm(ts in prop::collection::vec(tensor(), 1..3)) {
        let q = q();
        let k = FiniteRankKernel::new(ts, PairingMode::Hilbert, &q).unwrap();
        let a = l2_kernel_norm(&k.clone().into(), &q).unwrap();
        let b = l2_kernel_norm(&k.transpose_predual().unwrap().into(), &q).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn u_and_h_forms_agree(t1 in tensor(), t2 in tensor(), s in nonzero(), t in nonzero()) {
        let q = q();
        let (k1, k2) = (Kernel::rank_one(t1, &q).unwrap(), Kernel::rank_one(t2, &q).unwrap());
        let u = dc_kernel(&k1, &k2, &q).unwrap().eval(s, t).unwrap();
        let h = dc_kernel_hform(&k1, &k2, &q).unwrap().eval(s, t).unwrap();
        prop_assert!(close(u, h, 2e-9), "{u} vs {h}");
    }

    #[test]
    fn empty_u_support_means_zero(t1 in tensor(), t2 in tensor(), s in nonzero(), t in nonzero()) {
        let q = q();
        let (k1, k2) = (Kernel::rank_one(t1, &q).unwrap(), Kernel::rank_one(t2, &q).unwrap());
        if u_support(&k1, &k2, s, t).is_empty() {
            prop_assert_eq!(dc_kernel(&k1, &k2, &q).unwrap().eval(s, t).unwrap(), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn representation_property(xi in mixed(), eta in mixed(), x in group(), y in group()) {
        let q = q();
        let composed = pi_act(x, &pi_act(y, &xi).unwrap()).unwrap().pairing(&eta, true, &q).unwrap();
        let direct = rank_one_coefficient(&RankOneTensor::hilbert(xi, eta), group_mul(x, y), &q).unwrap();
        prop_assert!(close(composed, direct, 1e-8), "{composed} vs {direct}");
    }

    #[test]
    fn phi_is_antisymmetric(t1 in mixed_tensor(), t0 in mixed_tensor()) {
        let q = q();
        let a = phi_rank_one(&t1, &t0, &q).unwrap().value;
        let b = phi_rank_one(&t0, &t1, &q).unwrap().value;
        prop_assert!((a + b).norm() <= 2e-9 * (1.0 + a.norm()));
        let k1 = Kernel::rank_one(t1, &q).unwrap();
        let k0 = Kernel::rank_one(t0, &q).unwrap();
        let c = phi_kernel(&k1, &k0, &q).unwrap().value;
        prop_assert!(close(a, c, 1e-8), "routes: {a} vs {c}");
    }
}

/// Sup of `|coeff((b', 1))|` over `b' ∈ [b, 1.25 b]`.
fn envelope(t: &RankOneTensor, b: f64, q: &QuadratureSpec) -> f64 {
    (0..=16)
        .map(|k| {
            let x = GroupElement::new(b * (1.0 + 0.25 * k as f64 / 16.0), 1.0).unwrap();
            rank_one_coefficient(t, x, q).unwrap().norm()
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn hat_coefficients_decay(f in hat(), g in hat()) {
        let q = q();
        let t = RankOneTensor::hilbert(f, g);
        let env: Vec<f64> = [10.0, 40.0, 160.0].iter().map(|&b| envelope(&t, b, &q)).collect();
        prop_assert!(env[1] <= env[0] / 2.0 + 1e-12, "{env:?}");
        prop_assert!(env[2] <= env[1] / 2.0 + 1e-12, "{env:?}");
    }

    #[test]
    fn diagonal_subalgebra_keeps_identity(t1 in mixed_tensor(), t2 in mixed_tensor(), t0 in mixed_tensor()) {
        let q = q();
        let compress = |t: RankOneTensor| {
            FiniteRankKernel::new(vec![t], PairingMode::Hilbert, &q)
                .unwrap()
                .parity_compress(&q)
                .unwrap()
                .terms()
                .to_vec()
        };
        let (a, b, c) = (compress(t1), compress(t2), compress(t0));
        for x in &a {
            for y in &b {
                for z in &c {
                    let r = check_derivation_identity(x, y, z, &q, 1e-5);
                    prop_assert!(r.pass, "{}", r.summary());
                }
            }
        }
    }
}

#[test]
fn diagonal_witness_is_nonzero() {
    for v in witness_values(&q()).unwrap() {
        assert!(v.norm() > 0.5, "{v}");
    }
}
