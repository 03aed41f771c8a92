//! Finite unions of intervals on the real line with exact measure
//! arithmetic (up to floating point in the endpoints).
//!
//! Endpoints are treated as measure-zero, so open/closed distinctions are
//! dropped: every member is stored as a closed interval `[a, b]`, `a < b`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Self {
        Interval { a, b }
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_empty(&self) -> bool {
        self.b <= self.a
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalSet {
    parts: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { parts: Vec::new() }
    }

    pub fn single(a: f64, b: f64) -> Self {
        Self::from_intervals(vec![Interval::new(a, b)])
    }

    /// Normalizes: drops empty pieces, sorts and merges touching pieces.
    pub fn from_intervals(mut v: Vec<Interval>) -> Self {
        v.retain(|i| !i.is_empty());
        v.sort_by(|x, y| x.a.total_cmp(&y.a));
        let mut parts: Vec<Interval> = Vec::with_capacity(v.len());
        for i in v {
            match parts.last_mut() {
                Some(last) if i.a <= last.b => last.b = last.b.max(i.b),
                _ => parts.push(i),
            }
        }
        IntervalSet { parts }
    }

    /// Union of grid cells `[nodes[k], nodes[k+1]]` for which `keep(k)`.
    pub fn from_cells(nodes: &[f64], mut keep: impl FnMut(usize) -> bool) -> Self {
        let cells = nodes.len().saturating_sub(1);
        Self::from_intervals(
            (0..cells)
                .filter(|&k| keep(k))
                .map(|k| Interval::new(nodes[k], nodes[k + 1]))
                .collect(),
        )
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn measure(&self) -> f64 {
        let mut sum = 0.0;
        let mut comp = 0.0;
        for i in &self.parts {
            // Neumaier summation keeps measures exact enough for the
            // 1e-12 identities downstream.
            let x = i.len();
            let t = sum + x;
            if f64::abs(sum) >= f64::abs(x) {
                comp += (sum - t) + x;
            } else {
                comp += (x - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }

    /// Whether `x` lies in the interior of some member interval.
    pub fn contains_interior(&self, x: f64) -> bool {
        self.parts.iter().any(|i| i.a < x && x < i.b)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.parts.len() && j < other.parts.len() {
            let p = self.parts[i];
            let q = other.parts[j];
            let a = p.a.max(q.a);
            let b = p.b.min(q.b);
            if a < b {
                out.push(Interval::new(a, b));
            }
            if p.b < q.b {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { parts: out }
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut v = self.parts.clone();
        v.extend_from_slice(&other.parts);
        Self::from_intervals(v)
    }

    /// Set difference `self \ other`.
    pub fn difference(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for p in &self.parts {
            let mut start = p.a;
            for q in &other.parts {
                if q.b <= start || q.a >= p.b {
                    continue;
                }
                if q.a > start {
                    out.push(Interval::new(start, q.a));
                }
                start = start.max(q.b);
                if start >= p.b {
                    break;
                }
            }
            if start < p.b {
                out.push(Interval::new(start, p.b));
            }
        }
        IntervalSet { parts: out }
    }

    /// Sweep from the left and keep pieces until their total length reaches
    /// `target`, splitting the last piece. Returns `None` when the set is too
    /// small.
    pub fn leftmost_fill(&self, target: f64) -> Option<IntervalSet> {
        if target <= 0.0 {
            return Some(IntervalSet::empty());
        }
        let total = self.measure();
        if target > total * (1.0 + 1e-14) {
            return None;
        }
        if target >= total {
            return Some(self.clone());
        }
        let mut out = Vec::new();
        let mut remaining = target;
        for p in &self.parts {
            if p.len() < remaining {
                out.push(*p);
                remaining -= p.len();
            } else {
                out.push(Interval::new(p.a, p.a + remaining));
                break;
            }
        }
        Some(IntervalSet::from_intervals(out))
    }

    /// All endpoints, sorted.
    pub fn endpoints(&self) -> Vec<f64> {
        self.parts.iter().flat_map(|i| [i.a, i.b]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_and_measure() {
        let s = IntervalSet::from_intervals(vec![
            Interval::new(0.5, 1.0),
            Interval::new(0.0, 0.25),
            Interval::new(0.2, 0.3),
        ]);
        assert_eq!(s.parts().len(), 2);
        assert!((s.measure() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn difference_and_intersection() {
        let a = IntervalSet::single(0.0, 1.0);
        let b = IntervalSet::from_intervals(vec![Interval::new(0.25, 0.5), Interval::new(0.75, 2.0)]);
        let d = a.difference(&b);
        assert_eq!(d.parts(), &[Interval::new(0.0, 0.25), Interval::new(0.5, 0.75)]);
        let i = a.intersect(&b);
        assert!((i.measure() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn leftmost_fill_splits_last_piece() {
        let s = IntervalSet::single(1.0 / 3.0, 1.0);
        let f = s.leftmost_fill(1.0 / 3.0).unwrap();
        assert_eq!(f.parts().len(), 1);
        assert!((f.parts()[0].b - 2.0 / 3.0).abs() < 1e-15);
        assert!(s.leftmost_fill(0.7).is_none());
        assert_eq!(s.leftmost_fill(s.measure()).unwrap(), s);
    }
}
