//! Sorted disjoint open intervals on a ray, with set operations.

use smallvec::SmallVec;

pub type Intervals = SmallVec<[(f64, f64); 4]>;

pub(crate) fn union(a: &Intervals, b: &Intervals) -> Intervals {
    if a.is_empty() {
        return b.clone();
    }
    if b.is_empty() {
        return a.clone();
    }
    let mut all: SmallVec<[(f64, f64); 8]> = SmallVec::new();
    all.extend_from_slice(a);
    all.extend_from_slice(b);
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out = Intervals::new();
    for (s, e) in all {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

pub(crate) fn difference(a: &Intervals, b: &Intervals) -> Intervals {
    if b.is_empty() || a.is_empty() {
        return a.clone();
    }
    let mut out = Intervals::new();
    for &(s, e) in a {
        let mut cur = s;
        for &(bs, be) in b {
            if be <= cur || bs >= e {
                continue;
            }
            if bs > cur {
                out.push((cur, bs));
            }
            cur = cur.max(be);
            if cur >= e {
                break;
            }
        }
        if cur < e {
            out.push((cur, e));
        }
    }
    out
}

/// Complement of `inside` within `[0, tmax)`; `tmax` may be infinite.
pub fn gaps(inside: &Intervals, tmax: f64) -> Intervals {
    let mut out = Intervals::new();
    let mut cur = 0.0;
    for &(s, e) in inside {
        if s > cur {
            out.push((cur, s.min(tmax)));
        }
        cur = cur.max(e);
        if cur >= tmax {
            return out;
        }
    }
    if cur < tmax {
        out.push((cur, tmax));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use smallvec::smallvec;

    #[test]
    fn union_merges_overlaps() {
        let a: Intervals = smallvec![(0.0, 1.0), (3.0, 4.0)];
        let b: Intervals = smallvec![(0.5, 2.0), (5.0, 6.0)];
        assert_eq!(union(&a, &b).as_slice(), &[(0.0, 2.0), (3.0, 4.0), (5.0, 6.0)]);
    }

    #[test]
    fn difference_splits() {
        let a: Intervals = smallvec![(0.0, 10.0)];
        let b: Intervals = smallvec![(1.0, 2.0), (4.0, 5.0)];
        assert_eq!(difference(&a, &b).as_slice(), &[(0.0, 1.0), (2.0, 4.0), (5.0, 10.0)]);
    }

    #[test]
    fn gaps_of_set() {
        let a: Intervals = smallvec![(0.0, 1.0), (2.0, 3.0)];
        assert_eq!(gaps(&a, 5.0).as_slice(), &[(1.0, 2.0), (3.0, 5.0)]);
        let b: Intervals = smallvec![(0.5, 1.0)];
        assert_eq!(gaps(&b, f64::INFINITY).as_slice(), &[(0.0, 0.5), (1.0, f64::INFINITY)]);
    }
}
