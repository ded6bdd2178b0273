use crate::vec::Vector;

/// Axis-aligned box. An empty box has `lo > hi` on every axis and merges as
/// the identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb<const D: usize> {
    pub lo: Vector<D>,
    pub hi: Vector<D>,
}

impl<const D: usize> Aabb<D> {
    pub fn empty() -> Self {
        Aabb {
            lo: Vector::splat(f64::INFINITY),
            hi: Vector::splat(f64::NEG_INFINITY),
        }
    }

    pub fn of_points(pts: &[Vector<D>]) -> Self {
        let mut b = Self::empty();
        for &p in pts {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: Vector<D>) {
        self.lo = self.lo.min_by_component(p);
        self.hi = self.hi.max_by_component(p);
    }

    pub fn merge(self, o: Self) -> Self {
        Aabb {
            lo: self.lo.min_by_component(o.lo),
            hi: self.hi.max_by_component(o.hi),
        }
    }

    pub fn inflate(self, m: f64) -> Self {
        Aabb {
            lo: self.lo - Vector::splat(m),
            hi: self.hi + Vector::splat(m),
        }
    }

    pub fn overlaps(&self, o: &Self) -> bool {
        for i in 0..D {
            if self.lo[i] > o.hi[i] || o.lo[i] > self.hi[i] {
                return false;
            }
        }
        true
    }

    pub fn contains(&self, p: Vector<D>) -> bool {
        for i in 0..D {
            if p[i] < self.lo[i] || p[i] > self.hi[i] {
                return false;
            }
        }
        true
    }

    /// Euclidean gap between two boxes (0 when they overlap).
    pub fn distance(&self, o: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..D {
            let gap = (self.lo[i] - o.hi[i]).max(o.lo[i] - self.hi[i]).max(0.0);
            s += gap * gap;
        }
        s.sqrt()
    }

    pub fn center(&self) -> Vector<D> {
        (self.lo + self.hi) * 0.5
    }

    pub fn longest_axis(&self) -> usize {
        let ext = self.hi - self.lo;
        let mut best = 0;
        for i in 1..D {
            if ext[i] > ext[best] {
                best = i;
            }
        }
        best
    }
}
