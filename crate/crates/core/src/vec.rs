//! Fixed-dimension Euclidean vectors. The const parameter `D` is 2 or 3
//! everywhere in this crate; algorithms are written against `Vector<D>` so
//! planar and spatial scenarios share one code path.

use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vector<const D: usize>(pub [f64; D]);

// serde lacks impls for const-generic arrays, so (de)serialize by hand as a
// plain fixed-length sequence: `[x, y]` / `[x, y, z]`.
impl<const D: usize> serde::Serialize for Vector<D> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        let mut t = s.serialize_tuple(D)?;
        for c in &self.0 {
            t.serialize_element(c)?;
        }
        t.end()
    }
}

impl<'de, const D: usize> serde::Deserialize<'de> for Vector<D> {
    fn deserialize<De: serde::Deserializer<'de>>(d: De) -> Result<Self, De::Error> {
        struct ArrayVisitor<const D: usize>;
        impl<'de, const D: usize> serde::de::Visitor<'de> for ArrayVisitor<D> {
            type Value = Vector<D>;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                write!(f, "an array of {D} numbers")
            }
            fn visit_seq<A: serde::de::SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> Result<Vector<D>, A::Error> {
                let mut out = [0.0; D];
                for (i, slot) in out.iter_mut().enumerate() {
                    *slot = seq
                        .next_element()?
                        .ok_or_else(|| serde::de::Error::invalid_length(i, &self))?;
                }
                if seq.next_element::<f64>()?.is_some() {
                    return Err(serde::de::Error::invalid_length(D + 1, &self));
                }
                Ok(Vector(out))
            }
        }
        d.deserialize_tuple(D, ArrayVisitor::<D>)
    }
}

pub type Vec2 = Vector<2>;
pub type Vec3 = Vector<3>;

impl<const D: usize> Vector<D> {
    pub const ZERO: Self = Vector([0.0; D]);

    pub fn splat(v: f64) -> Self {
        Vector([v; D])
    }

    pub fn dot(self, o: Self) -> f64 {
        let mut s = 0.0;
        for i in 0..D {
            s += self.0[i] * o.0[i];
        }
        s
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, o: Self) -> f64 {
        (self - o).norm()
    }

    pub fn dist_sq(self, o: Self) -> f64 {
        (self - o).norm_sq()
    }

    /// Unit vector, or `None` for (near-)zero input.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n <= f64::EPSILON {
            None
        } else {
            Some(self / n)
        }
    }

    /// Rescale onto the closed ball of radius `max` (identity if already inside).
    pub fn clamp_norm(self, max: f64) -> Self {
        let n = self.norm();
        if n > max {
            self * (max / n)
        } else {
            self
        }
    }

    pub fn min_by_component(self, o: Self) -> Self {
        let mut r = self;
        for i in 0..D {
            r.0[i] = r.0[i].min(o.0[i]);
        }
        r
    }

    pub fn max_by_component(self, o: Self) -> Self {
        let mut r = self;
        for i in 0..D {
            r.0[i] = r.0[i].max(o.0[i]);
        }
        r
    }

    /// Largest absolute component (the Chebyshev norm).
    pub fn norm_max(self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..D {
            m = m.max(self.0[i].abs());
        }
        m
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn lerp(self, o: Self, t: f64) -> Self {
        self + (o - self) * t
    }
}

impl Vector<2> {
    pub fn new2(x: f64, y: f64) -> Self {
        Vector([x, y])
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Self {
        Vector([-self.0[1], self.0[0]])
    }

    /// z component of the 3-D cross product; positive when `o` lies
    /// counter-clockwise of `self`.
    pub fn cross_z(self, o: Self) -> f64 {
        self.0[0] * o.0[1] - self.0[1] * o.0[0]
    }
}

impl Vector<3> {
    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        Vector([x, y, z])
    }

    pub fn cross(self, o: Self) -> Self {
        Vector([
            self.0[1] * o.0[2] - self.0[2] * o.0[1],
            self.0[2] * o.0[0] - self.0[0] * o.0[2],
            self.0[0] * o.0[1] - self.0[1] * o.0[0],
        ])
    }

    /// Any unit vector orthogonal to `self` (which must be nonzero).
    pub fn any_orthonormal(self) -> Self {
        let pick = if self.0[0].abs() <= self.0[1].abs() && self.0[0].abs() <= self.0[2].abs() {
            Vector([1.0, 0.0, 0.0])
        } else if self.0[1].abs() <= self.0[2].abs() {
            Vector([0.0, 1.0, 0.0])
        } else {
            Vector([0.0, 0.0, 1.0])
        };
        self.cross(pick).normalized().expect("nonzero input")
    }
}

impl<const D: usize> Default for Vector<D> {
    fn default() -> Self {
        Self::ZERO
    }
}

impl<const D: usize> Add for Vector<D> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for i in 0..D {
            self.0[i] += o.0[i];
        }
        self
    }
}

impl<const D: usize> AddAssign for Vector<D> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<const D: usize> Sub for Vector<D> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        for i in 0..D {
            self.0[i] -= o.0[i];
        }
        self
    }
}

impl<const D: usize> SubAssign for Vector<D> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<const D: usize> Neg for Vector<D> {
    type Output = Self;
    fn neg(mut self) -> Self {
        for i in 0..D {
            self.0[i] = -self.0[i];
        }
        self
    }
}

impl<const D: usize> Mul<f64> for Vector<D> {
    type Output = Self;
    fn mul(mut self, s: f64) -> Self {
        for i in 0..D {
            self.0[i] *= s;
        }
        self
    }
}

impl<const D: usize> Div<f64> for Vector<D> {
    type Output = Self;
    fn div(mut self, s: f64) -> Self {
        for i in 0..D {
            self.0[i] /= s;
        }
        self
    }
}

impl<const D: usize> Index<usize> for Vector<D> {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<const D: usize> IndexMut<usize> for Vector<D> {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}
