//! The seeded suite inputs must exercise nonzero values; a check that only
//! ever compares `0` with `0` says nothing.

use dualconv::coefficients::rank_one_coefficient;
use dualconv::derivation::{derivation_terms, phi_rank_one};
use dualconv::{dc_kernel, suite, Kernel, QuadratureSpec};

const SEED: u64 = 20_260_101;
const FLOOR: f64 = 1e-8;

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn assert_majority(name: &str, nonzero: usize, total: usize) {
    assert!(total > 0, "{name}: no samples");
    assert!(
        2 * nonzero > total,
        "{name}: only {nonzero}/{total} nonzero"
    );
}

#[test]
fn fusion_samples_are_nonzero() {
    let q = q();
    let (mut nz, mut tot) = (0, 0);
    for (p, xs) in suite::fusion_cases(SEED, 20, 25).unwrap() {
        for x in xs {
            let v = rank_one_coefficient(&p[0], x, &q).unwrap()
                * rank_one_coefficient(&p[1], x, &q).unwrap();
            tot += 1;
            nz += usize::from(v.norm() > FLOOR);
        }
    }
    assert_majority("fusion", nz, tot);
}

#[test]
fn product_samples_are_nonzero() {
    let q = q();
    let (mut nz, mut tot) = (0, 0);
    for (p, pts) in suite::commute_cases(SEED, 10, 50, &q).unwrap() {
        let k: Vec<Kernel> = p
            .iter()
            .map(|t| Kernel::rank_one(t.clone(), &q).unwrap())
            .collect();
        let prod = dc_kernel(&k[0], &k[1], &q).unwrap();
        for (s, t) in pts {
            tot += 1;
            nz += usize::from(prod.eval(s, t).unwrap().norm() > FLOOR);
        }
    }
    assert_majority("commute", nz, tot);

    let (mut nz, mut tot) = (0, 0);
    for (p, pts) in suite::assoc_cases(SEED, 10, 50, &q).unwrap() {
        let k: Vec<Kernel> = p
            .iter()
            .map(|t| Kernel::rank_one(t.clone(), &q).unwrap())
            .collect();
        let k12: Kernel = dc_kernel(&k[0], &k[1], &q).unwrap().into();
        let prod = dc_kernel(&k12, &k[2], &q).unwrap();
        for (s, t) in pts {
            tot += 1;
            nz += usize::from(prod.eval(s, t).unwrap().norm() > FLOOR);
        }
    }
    assert_majority("assoc", nz, tot);
}

#[test]
fn derivation_terms_are_nonzero() {
    let q = q();
    let cases = suite::derivation_cases(SEED, 10).unwrap();
    let nz = cases
        .iter()
        .filter(|t| {
            let v = derivation_terms(&t[0], &t[1], &t[2], &q).unwrap();
            v.iter().any(|x| x.norm() > FLOOR)
        })
        .count();
    assert_majority("derivation", nz, cases.len());

    let pairs = suite::phi_cases(SEED, 50).unwrap();
    let nz = pairs
        .iter()
        .filter(|t| phi_rank_one(&t[0], &t[1], &q).unwrap().value.norm() > FLOOR)
        .count();
    assert_majority("phi", nz, pairs.len());
}

#[test]
fn intertwine_samples_are_nonzero() {
    let q = q();
    let (mut nz, mut tot) = (0, 0);
    for (p, xs) in suite::intertwine_cases(SEED, 5, 30).unwrap() {
        for x in xs {
            tot += 1;
            nz += usize::from(rank_one_coefficient(&p[0], x, &q).unwrap().norm() > FLOOR);
        }
    }
    assert_majority("intertwine", nz, tot);
}

#[test]
fn pdiag_samples_are_nonzero() {
    let q = q();
    let (mut nz, mut tot) = (0, 0);
    for (p, pts) in suite::pdiag_cases(SEED, 10, 30, &q).unwrap() {
        let k: Vec<Kernel> = p
            .iter()
            .map(|t| Kernel::rank_one(t.clone(), &q).unwrap())
            .collect();
        let prod = dc_kernel(&k[0], &k[1], &q).unwrap();
        for (s, t) in pts.into_iter().filter(|&(s, t)| (s > 0.0) == (t > 0.0)) {
            tot += 1;
            nz += usize::from(prod.eval(s, t).unwrap().norm() > FLOOR);
        }
    }
    assert_majority("pdiag", nz, tot);
}
