use serde::{Deserialize, Serialize};

/// Closed bounded interval `[lo, hi]` of the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Builds an interval from two endpoints in either order.
    pub fn new(a: f64, b: f64) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Strict interior membership.
    pub fn contains_interior(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// Intersection with positive length, `None` for empty or single-point overlap.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Interval { lo, hi })
    }

    /// Minkowski sum.
    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo + other.lo,
            hi: self.hi + other.hi,
        }
    }

    /// Image under `x -> r x`.
    pub fn scale(&self, r: f64) -> Interval {
        Interval::new(self.lo * r, self.hi * r)
    }

    /// Image under `x -> c - x`.
    pub fn reflect_from(&self, c: f64) -> Interval {
        Interval::new(c - self.hi, c - self.lo)
    }

    /// The set `{x / y}` for `x` in `self`, `y` in `other`; `other` must not contain 0.
    pub fn div(&self, other: &Interval) -> Interval {
        let q = [
            self.lo / other.lo,
            self.lo / other.hi,
            self.hi / other.lo,
            self.hi / other.hi,
        ];
        Interval {
            lo: q.iter().copied().fold(f64::INFINITY, f64::min),
            hi: q.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn endpoints(&self) -> [f64; 2] {
        [self.lo, self.hi]
    }
}

/// Sorted union of intervals; overlapping or touching pieces are merged.
pub fn merge(mut list: Vec<Interval>) -> Vec<Interval> {
    list.retain(|i| i.lo < i.hi);
    list.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out: Vec<Interval> = Vec::with_capacity(list.len());
    for i in list {
        match out.last_mut() {
            Some(last) if i.lo <= last.hi => last.hi = last.hi.max(i.hi),
            _ => out.push(i),
        }
    }
    out
}

/// Pairwise intersection of two sorted unions.
pub fn intersect_all(a: &[Interval], b: &[Interval]) -> Vec<Interval> {
    let mut out = Vec::new();
    for x in a {
        for y in b {
            if let Some(z) = x.intersect(y) {
                out.push(z);
            }
        }
    }
    merge(out)
}

/// Sorts and removes points that coincide up to a relative `1e-14`.
pub fn dedup_points(points: &mut Vec<f64>) {
    points.retain(|p| p.is_finite());
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(b.abs()));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_joins_overlaps_and_drops_points() {
        let m = merge(vec![
            Interval::new(3.0, 4.0),
            Interval::new(1.0, 2.0),
            Interval::new(1.5, 3.0),
            Interval::new(7.0, 7.0),
        ]);
        assert_eq!(m, vec![Interval::new(1.0, 4.0)]);
    }

    #[test]
    fn division_of_signed_intervals() {
        let q = Interval::new(1.0, 2.0).div(&Interval::new(-4.0, -1.0));
        assert_eq!(q, Interval::new(-2.0, -0.25));
    }

    #[test]
    fn touching_intervals_do_not_intersect() {
        assert!(Interval::new(1.0, 2.0)
            .intersect(&Interval::new(2.0, 3.0))
            .is_none());
    }
}
