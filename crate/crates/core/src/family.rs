//! Textual function specs and seeded random test families.
//!
//! Function grammar: `[AMP*]name:args` terms joined by `+`, where `name` is
//! `ind:a,b`, `hat:a,b` or `glog:c,w,a,b`. Kernel grammar:
//! `rank1:mode=hilbert;xi=<fn>;eta=<fn>` terms joined by `+`.

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coefficients::GroupElement;
use crate::error::{Error, Result};
use crate::haar::HaarFunction;
use crate::interval::Interval;
use crate::operators::{FiniteRankKernel, Kernel, PairingMode, RankOneTensor};
use crate::quadrature::QuadratureSpec;

const NAMES: [&str; 3] = ["ind:", "hat:", "glog:"];

fn parse_f64(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("not finite: {s:?}")));
    }
    Ok(v)
}

fn parse_args(s: &str, n: usize) -> Result<Vec<f64>> {
    let v = s.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?;
    if v.len() != n {
        return Err(Error::Parse(format!("expected {n} arguments, got {s:?}")));
    }
    Ok(v)
}

/// Splits at `+` signs that start a new term, leaving signed numbers intact.
fn split_terms(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in s.char_indices() {
        if c != '+' || i == 0 {
            continue;
        }
        let rest = s[i + 1..].trim_start();
        let term_start = NAMES.iter().any(|n| rest.starts_with(n))
            || rest
                .split_once('*')
                .is_some_and(|(a, _)| parse_f64(a).is_ok());
        let prev = s[..i].trim_end();
        let after_number_sep = prev.ends_with(',') || prev.ends_with(':') || prev.ends_with('*');
        if term_start && !after_number_sep {
            out.push(&s[start..i]);
            start = i + 1;
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_term(term: &str) -> Result<HaarFunction> {
    let term = term.trim();
    let (amp, body) = match term.split_once('*') {
        Some((a, b)) => (parse_f64(a)?, b.trim()),
        None => (1.0, term),
    };
    let (name, args) = body
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("missing family name in {term:?}")))?;
    let f = match name.trim() {
        "ind" => {
            let a = parse_args(args, 2)?;
            HaarFunction::indicator(a[0], a[1])
        }
        "hat" => {
            let a = parse_args(args, 2)?;
            HaarFunction::hat(a[0], a[1])
        }
        "glog" => {
            let a = parse_args(args, 4)?;
            HaarFunction::gauss_log(a[0], a[1], a[2], a[3])
        }
        other => return Err(Error::Parse(format!("unknown family {other:?}"))),
    }
    .map_err(|e| Error::Parse(format!("{term:?}: {e}")))?;
    Ok(if amp == 1.0 {
        f
    } else {
        f.scale(Complex64::new(amp, 0.0))
    })
}

/// Parses a function spec such as `2*ind:1,2 + hat:-3,-1`.
pub fn parse_function(s: &str) -> Result<HaarFunction> {
    let s = s.trim();
    if s == "zero" {
        return Ok(HaarFunction::zero());
    }
    let mut terms = split_terms(s).into_iter();
    let first = parse_term(terms.next().unwrap_or_default())?;
    terms.try_fold(first, |acc, t| Ok(acc.add(&parse_term(t)?)))
}

fn parse_rank_one(s: &str) -> Result<RankOneTensor> {
    let body = s
        .trim()
        .strip_prefix("rank1:")
        .ok_or_else(|| Error::Parse(format!("expected rank1:..., got {s:?}")))?;
    let (mut mode, mut xi, mut eta) = (PairingMode::Hilbert, None, None);
    for field in body.split(';') {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got {field:?}")))?;
        match k.trim() {
            "mode" => {
                mode = match v.trim() {
                    "hilbert" => PairingMode::Hilbert,
                    "bilinear" => PairingMode::Bilinear,
                    m => return Err(Error::Parse(format!("unknown mode {m:?}"))),
                }
            }
            "xi" => xi = Some(parse_function(v)?),
            "eta" => eta = Some(parse_function(v)?),
            other => return Err(Error::Parse(format!("unknown key {other:?}"))),
        }
    }
    match (xi, eta) {
        (Some(x), Some(e)) => Ok(RankOneTensor::new(x, e, mode)),
        _ => Err(Error::Parse(format!("rank1 term needs xi and eta: {s:?}"))),
    }
}

/// Parses `rank1:...` terms joined by `+ rank1:`.
pub fn parse_kernel(s: &str, q: &QuadratureSpec) -> Result<FiniteRankKernel> {
    let mut terms = Vec::new();
    let mut rest = s.trim();
    while let Some(i) = rest[1..].find("rank1:").map(|i| i + 1) {
        let head = rest[..i].trim_end();
        let head = head
            .strip_suffix('+')
            .ok_or_else(|| Error::Parse(format!("terms must be joined by '+': {s:?}")))?;
        terms.push(parse_rank_one(head)?);
        rest = &rest[i..];
    }
    terms.push(parse_rank_one(rest)?);
    let mode = terms[0].mode;
    FiniteRankKernel::new(terms, mode, q)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn draw_interval(rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let a = log_uniform(rng, 0.25, 8.0);
        let b = log_uniform(rng, 0.25, 8.0);
        let (lo, hi) = (a.min(b), a.max(b));
        if hi / lo >= 1.1 {
            return (lo, hi);
        }
    }
}

fn draw_term(rng: &mut ChaCha8Rng, negative: bool) -> String {
    let (lo, hi) = draw_interval(rng);
    let (a, b) = if negative { (-hi, -lo) } else { (lo, hi) };
    let amp = rng.random_range(0.5..2.0);
    let name = if rng.random_bool(0.5) { "ind" } else { "hat" };
    format!("{amp:?}*{name}:{a:?},{b:?}")
}

/// Spec strings of `k` single-signed functions drawn from the indicator and
/// hat families; endpoints are log-uniform in `[1/4, 8]`.
pub fn generate_family_specs(seed: u64, k: usize) -> Result<Vec<String>> {
    if k == 0 {
        return Err(Error::Parse("family size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..k)
        .map(|_| {
            let negative = rng.random_bool(0.5);
            draw_term(&mut rng, negative)
        })
        .collect())
}

pub fn generate_family(seed: u64, k: usize) -> Result<Vec<HaarFunction>> {
    generate_family_specs(seed, k)?
        .iter()
        .map(|s| parse_function(s))
        .collect()
}

/// Like [`generate_family_specs`] but every function lives on both half-lines.
pub fn generate_mixed_specs(seed: u64, k: usize) -> Result<Vec<String>> {
    if k == 0 {
        return Err(Error::Parse("family size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..k)
        .map(|_| {
            let pos = draw_term(&mut rng, false);
            let neg = draw_term(&mut rng, true);
            format!("{pos} + {neg}")
        })
        .collect())
}

pub fn generate_mixed_family(seed: u64, k: usize) -> Result<Vec<HaarFunction>> {
    generate_mixed_specs(seed, k)?
        .iter()
        .map(|s| parse_function(s))
        .collect()
}

/// `k` Hilbert-mode tensors built from consecutive family members.
pub fn generate_tensors(seed: u64, k: usize, mixed: bool) -> Result<Vec<RankOneTensor>> {
    let f = if mixed {
        generate_mixed_family(seed, 2 * k)?
    } else {
        generate_family(seed, 2 * k)?
    };
    Ok(f.chunks(2)
        .map(|c| RankOneTensor::hilbert(c[0].clone(), c[1].clone()))
        .collect())
}

/// Common slope support `s/t` of the given tensors.
pub fn common_alpha_support(tensors: &[RankOneTensor]) -> Vec<Interval> {
    let mut out = tensors[0].alpha_support();
    for t in &tensors[1..] {
        out = crate::interval::intersect_all(&out, &t.alpha_support());
    }
    out
}

/// Total width of a union of one-signed intervals in `ln|x|`.
pub fn log_width(support: &[Interval]) -> f64 {
    support
        .iter()
        .map(|i| (i.hi.abs().ln() - i.lo.abs().ln()).abs())
        .sum()
}

/// `n` tuples of `arity` Hilbert tensors satisfying `keep`; rejected tuples
/// are redrawn from a fresh seed.
pub fn generate_tuples_where<F>(
    seed: u64,
    n: usize,
    arity: usize,
    mixed: bool,
    keep: F,
) -> Result<Vec<Vec<RankOneTensor>>>
where
    F: Fn(&[RankOneTensor]) -> bool,
{
    if arity == 0 {
        return Err(Error::Parse("tuple arity must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(n);
    let mut attempt = 0u64;
    while out.len() < n {
        if attempt > 1000 * (n as u64 + 1) {
            return Err(Error::Parse("no admissible tuples for this seed".into()));
        }
        let t = generate_tensors(
            seed.wrapping_add(attempt.wrapping_mul(0x2545_F491_4F6C_DD1D)),
            arity,
            mixed,
        )?;
        attempt += 1;
        if keep(&t) {
            out.push(t);
        }
    }
    Ok(out)
}

/// Tuples whose products do not vanish identically: the common slope support
/// has log-width at least `min_log_width`.
pub fn generate_linked_tuples(
    seed: u64,
    n: usize,
    arity: usize,
    mixed: bool,
    min_log_width: f64,
) -> Result<Vec<Vec<RankOneTensor>>> {
    generate_tuples_where(seed, n, arity, mixed, |t| {
        log_width(&common_alpha_support(t)) >= min_log_width
    })
}

/// Group samples as in [`generate_group_samples`], with about 80% of the
/// dilations drawn from `a_support ∩ ±[1/4, 4]`.
pub fn generate_group_samples_on(
    seed: u64,
    n: usize,
    b_max: f64,
    a_support: &[Interval],
) -> Vec<GroupElement> {
    let window = [Interval::new(-4.0, -0.25), Interval::new(0.25, 4.0)];
    let focus = crate::interval::intersect_all(a_support, &window);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = generate_group_samples(seed ^ 0x5851_F42D_4C95_7F2D, n, b_max);
    for x in &mut out {
        if rng.random_bool(0.8) {
            if let Some(a) = pick(&mut rng, &focus) {
                x.a = a;
            }
        }
    }
    out
}

/// Group samples with `|b| ≤ b_max` and `|a| ∈ [1/4, 4]`, both signs of `a`.
pub fn generate_group_samples(seed: u64, n: usize, b_max: f64) -> Vec<GroupElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let b = if b_max > 0.0 {
                rng.random_range(-b_max..b_max)
            } else {
                0.0
            };
            let a = log_uniform(&mut rng, 0.25, 4.0);
            let a = if rng.random_bool(0.5) { -a } else { a };
            GroupElement { b, a }
        })
        .collect()
}

fn pick(rng: &mut ChaCha8Rng, support: &[Interval]) -> Option<f64> {
    let total: f64 = support.iter().map(Interval::width).sum();
    if total <= 0.0 || total.is_nan() {
        return None;
    }
    let mut x = rng.random_range(0.0..total);
    for iv in support {
        if x <= iv.width() {
            return Some(iv.lo + x);
        }
        x -= iv.width();
    }
    support.last().map(|iv| iv.hi)
}

/// Points `(s, t)` for sampling a product of `kernels`, about 80% of them in
/// its support.
///
/// In-support points take a common slope `α` and add one ray coordinate per
/// factor; the rest are uniform in the hull of the summed support boxes.
pub fn generate_kernel_points(seed: u64, n: usize, kernels: &[&Kernel]) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alpha = kernels[0].alpha_support();
    for k in &kernels[1..] {
        alpha = crate::interval::intersect_all(&alpha, &k.alpha_support());
    }
    let boxes: Vec<_> = kernels.iter().flat_map(|k| k.support_boxes()).collect();
    let span = |f: &dyn Fn(&crate::operators::SupportBox) -> Interval| {
        let mut iv = Interval::new(0.0, 0.0);
        for k in kernels {
            let b = k.support_boxes();
            let lo = b.iter().map(|x| f(x).lo).fold(f64::INFINITY, f64::min);
            let hi = b.iter().map(|x| f(x).hi).fold(f64::NEG_INFINITY, f64::max);
            iv = iv.add(&Interval::new(lo, hi));
        }
        iv
    };
    let (s_hull, t_hull) = (span(&|b| b.s), span(&|b| b.t));
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        attempts += 1;
        let inside = rng.random_bool(0.8) && attempts < 100 * n.max(1);
        if inside && !alpha.is_empty() {
            let Some(a) = pick(&mut rng, &alpha) else {
                continue;
            };
            let mut r = 0.0;
            let mut ok = true;
            for k in kernels {
                match pick(&mut rng, &k.along(a).profile().support) {
                    Some(x) => r += x,
                    None => ok = false,
                }
            }
            if ok && r != 0.0 {
                out.push((a * r, r));
            }
        } else if !boxes.is_empty() {
            let s = rng.random_range(s_hull.lo..=s_hull.hi);
            let t = rng.random_range(t_hull.lo..=t_hull.hi);
            if s != 0.0 && t != 0.0 {
                out.push((s, t));
            }
        } else {
            out.push((1.0, 1.0));
        }
    }
    out
}

/// Parses `lin:lo,hi,n` or `log:lo,hi,n[,both-signs]`.
fn parse_axis(s: &str) -> Result<Vec<f64>> {
    let (kind, args) = s
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("bad grid axis {s:?}")))?;
    let parts: Vec<&str> = args.split(',').map(str::trim).collect();
    let both = parts.get(3) == Some(&"both-signs");
    if parts.len() < 3 || parts.len() > 4 || (parts.len() == 4 && !both) {
        return Err(Error::Parse(format!("bad grid axis {s:?}")));
    }
    let (lo, hi) = (parse_f64(parts[0])?, parse_f64(parts[1])?);
    let n: usize = parts[2]
        .parse()
        .map_err(|_| Error::Parse(format!("bad point count in {s:?}")))?;
    if n == 0 {
        return Err(Error::Parse(format!("empty grid axis {s:?}")));
    }
    let at = |k: usize| {
        if n == 1 {
            0.0
        } else {
            k as f64 / (n - 1) as f64
        }
    };
    let mut v: Vec<f64> = match kind.trim() {
        "lin" => (0..n).map(|k| lo + (hi - lo) * at(k)).collect(),
        "log" => {
            if !(lo > 0.0 && hi > 0.0) {
                return Err(Error::Parse(format!("log axis needs positive ends: {s:?}")));
            }
            (0..n)
                .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * at(k)).exp())
                .collect()
        }
        other => return Err(Error::Parse(format!("unknown axis kind {other:?}"))),
    };
    if both {
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        v.extend(neg);
    }
    Ok(v)
}

/// Parses `b=lin:-10,10,21;a=log:0.25,4,7,both-signs` into the product grid.
pub fn parse_group_grid(s: &str) -> Result<Vec<GroupElement>> {
    let (mut bs, mut as_) = (None, None);
    for part in s.split(';') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=axis, got {part:?}")))?;
        match k.trim() {
            "b" => bs = Some(parse_axis(v)?),
            "a" => as_ = Some(parse_axis(v)?),
            other => return Err(Error::Parse(format!("unknown grid key {other:?}"))),
        }
    }
    let (bs, as_) = (bs.unwrap_or(vec![0.0]), as_.unwrap_or(vec![1.0]));
    let mut out = Vec::with_capacity(bs.len() * as_.len());
    for &a in &as_ {
        for &b in &bs {
            out.push(
                GroupElement::new(b, a)
                    .map_err(|_| Error::Parse(format!("a = 0 in grid {s:?}")))?,
            );
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_functions() {
        let f = parse_function("2*ind:1,2 + hat:-3,-1").unwrap();
        assert_eq!(f.eval(1.5), Complex64::new(2.0, 0.0));
        assert_eq!(f.eval(-2.0), Complex64::new(1.0, 0.0));
        assert_eq!(f.support_neg(), Some(Interval::new(-3.0, -1.0)));
        let g = parse_function("glog:0.4,0.3,1,2").unwrap();
        assert!(g.eval(1.5).re > 0.99);
        assert!(parse_function("ind:1").is_err());
        assert!(parse_function("ind:-1,1").is_err());
        assert!(parse_function("box:1,2").is_err());
        assert!(parse_function("ind:1,x").is_err());
        assert!(parse_function("zero").unwrap().is_zero());
    }

    #[test]
    fn parses_kernels() {
        let q = QuadratureSpec::default();
        let k = parse_kernel(
            "rank1:mode=hilbert;xi=ind:1,2;eta=ind:1,2 + rank1:mode=hilbert;xi=ind:-2,-1;eta=hat:0.5,3",
            &q,
        )
        .unwrap();
        assert_eq!(k.terms().len(), 2);
        assert!(parse_kernel("rank1:mode=hilbert;xi=ind:1,2", &q).is_err());
        assert!(parse_kernel("rank1:mode=x;xi=ind:1,2;eta=ind:1,2", &q).is_err());
    }

    #[test]
    fn families_are_deterministic() {
        assert_eq!(
            generate_family_specs(7, 5).unwrap(),
            generate_family_specs(7, 5).unwrap()
        );
        assert_ne!(
            generate_family_specs(7, 5).unwrap(),
            generate_family_specs(8, 5).unwrap()
        );
        assert!(generate_family(1, 0).is_err());
        for f in generate_family(3, 200).unwrap() {
            for iv in f.supports() {
                assert!(iv.lo.abs().min(iv.hi.abs()) >= 0.25 - 1e-12);
                assert!(iv.hi.abs().max(iv.lo.abs()) <= 8.0 + 1e-12);
            }
        }
        for f in generate_mixed_family(3, 20).unwrap() {
            assert_eq!(f.parity().unwrap_err(), Error::ParityUndefined);
        }
    }

    #[test]
    fn kernel_points_mostly_in_support() {
        let q = QuadratureSpec::default();
        let t = generate_tensors(5, 2, false).unwrap();
        let k1 = Kernel::rank_one(t[0].clone(), &q).unwrap();
        let k2 = Kernel::rank_one(t[1].clone(), &q).unwrap();
        let pts = generate_kernel_points(1, 50, &[&k1, &k2]);
        assert_eq!(pts.len(), 50);
        assert!(pts.iter().all(|(s, t)| *s != 0.0 && *t != 0.0));
    }

    #[test]
    fn grid_parser() {
        let g = parse_group_grid("b=lin:-10,10,21;a=log:0.25,4,7,both-signs").unwrap();
        assert_eq!(g.len(), 21 * 14);
        assert!(g.iter().any(|x| x.a == -4.0 && x.b == 10.0));
        assert!(parse_group_grid("b=lin:0,1").is_err());
        assert!(parse_group_grid("a=lin:0,0,1").is_err());
    }
}
