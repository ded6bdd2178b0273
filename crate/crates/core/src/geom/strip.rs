//! Triangulated bridge volumes. Two boundary polylines in the plane span an
//! open strip; three or more in space span a closed tube with fan caps. The
//! triangle set is what obstacle checks and containment queries run against,
//! so a bridge is collision-free iff its strip is.

use crate::consts::EPS_GEOM;
use crate::error::{Error, Result};
use crate::geom::convex::hull_distance;
use crate::geom::{Aabb, Bvh, ObstacleSet};
use crate::vec::{Vec2, Vector};

#[derive(Clone, Debug)]
pub struct TriangulatedStrip<const D: usize> {
    pub vertices: Vec<Vector<D>>,
    pub triangles: Vec<[u32; 3]>,
    bvh: Bvh<D>,
    aabb: Aabb<D>,
}

/// Triangulate the volume between boundary polylines of equal length.
/// Planar input takes exactly two boundaries; spatial input takes three or
/// more, ordered angularly around the tube axis, and is closed with end caps.
pub fn triangulate_boundaries<const D: usize>(
    boundaries: &[Vec<Vector<D>>],
) -> Result<TriangulatedStrip<D>> {
    let k = boundaries.len();
    let expected = if D == 2 { 2..=2 } else { 3..=usize::MAX };
    if !expected.contains(&k) {
        return Err(Error::DegenerateGeometry(format!(
            "{k} boundaries in {D}-D (want {} )",
            if D == 2 { "exactly 2" } else { "at least 3" }
        )));
    }
    let s = boundaries[0].len();
    if s < 2 {
        return Err(Error::DegenerateGeometry(
            "boundaries need at least 2 waypoints".into(),
        ));
    }
    if boundaries.iter().any(|b| b.len() != s) {
        return Err(Error::DegenerateGeometry(
            "boundaries have mismatched lengths".into(),
        ));
    }

    let mut vertices = Vec::with_capacity(k * s);
    for b in boundaries {
        vertices.extend_from_slice(b);
    }
    let at = |kk: usize, i: usize| (kk * s + i) as u32;

    let mut triangles = Vec::new();
    let spans = if D == 2 { 1 } else { k };
    for kk in 0..spans {
        let kn = (kk + 1) % k;
        for i in 0..s - 1 {
            triangles.push([at(kk, i), at(kn, i), at(kn, i + 1)]);
            triangles.push([at(kk, i), at(kn, i + 1), at(kk, i + 1)]);
        }
    }
    if D == 3 {
        for kk in 1..k - 1 {
            triangles.push([at(0, 0), at(kk + 1, 0), at(kk, 0)]);
            triangles.push([at(0, s - 1), at(kk, s - 1), at(kk + 1, s - 1)]);
        }
    }

    Ok(TriangulatedStrip::from_parts(vertices, triangles))
}

impl<const D: usize> TriangulatedStrip<D> {
    pub fn from_parts(vertices: Vec<Vector<D>>, triangles: Vec<[u32; 3]>) -> Self {
        let boxes: Vec<Aabb<D>> = triangles
            .iter()
            .map(|t| Aabb::of_points(&[vertices[t[0] as usize], vertices[t[1] as usize], vertices[t[2] as usize]]))
            .collect();
        let bvh = Bvh::build(&boxes);
        let aabb = Aabb::of_points(&vertices);
        TriangulatedStrip {
            vertices,
            triangles,
            bvh,
            aabb,
        }
    }

    pub fn aabb(&self) -> Aabb<D> {
        self.aabb
    }

    fn triangle_points(&self, i: usize) -> [Vector<D>; 3] {
        let t = self.triangles[i];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    /// First (triangle, obstacle id) contact with any inflated obstacle.
    pub fn collides(&self, obstacles: &ObstacleSet<D>) -> Option<(usize, usize)> {
        for obs in &obstacles.obstacles {
            if !obs.aabb.overlaps(&self.aabb) {
                continue;
            }
            let mut found = None;
            self.bvh.any_overlap(&obs.aabb, |ti| {
                let tri = self.triangle_points(ti);
                if hull_distance(&tri, &obs.vertices) <= obs.inflation + EPS_GEOM {
                    found = Some((ti, obs.id));
                    true
                } else {
                    false
                }
            });
            if found.is_some() {
                return found;
            }
        }
        None
    }

    /// V - E + F with undirected edge counting; 2 for a closed tube, 1 for an
    /// open strip (a disc).
    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::BTreeSet::new();
        for t in &self.triangles {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        self.vertices.len() as i64 - edges.len() as i64 + self.triangles.len() as i64
    }
}

impl TriangulatedStrip<3> {
    /// Is `p` inside the closed tube? Ray parity along a fixed direction with
    /// irrational-ish components, so axis-aligned meshes cannot put edges
    /// exactly on the ray. Points within a few ulps of the surface may land
    /// on either side; callers needing surface proximity use `collides`.
    pub fn contains_point(&self, p: crate::vec::Vec3) -> bool {
        let d = crate::vec::Vec3::new3(0.584_710_284_663_1, 0.377_964_473_009_2, 0.718_421_538_721_4);
        let mut crossings = 0usize;
        // The ray query box: from p to the far side of the mesh along d.
        let span = self.aabb.hi.dist(self.aabb.lo).max(1.0);
        let far = p + d * (2.0 * span);
        let query = Aabb::of_points(&[p, far]);
        self.bvh.for_each_overlap(&query, |ti| {
            let [a, b, c] = self.triangle_points(ti);
            let e1 = b - a;
            let e2 = c - a;
            let h = d.cross(e2);
            let det = e1.dot(h);
            if det.abs() < 1e-14 * e1.norm().max(1.0) * e2.norm().max(1.0) {
                return;
            }
            let inv = 1.0 / det;
            let s = p - a;
            let u = s.dot(h) * inv;
            if !(0.0..=1.0).contains(&u) {
                return;
            }
            let q = s.cross(e1);
            let v = d.dot(q) * inv;
            if v < 0.0 || u + v > 1.0 {
                return;
            }
            let t = e2.dot(q) * inv;
            if t > 0.0 {
                crossings += 1;
            }
        });
        crossings % 2 == 1
    }
}

/// First obstacle that sits strictly inside the strip volume without touching
/// its surface, which `collides` cannot see. Planar strips triangulate their
/// full area, so only closed spatial tubes have a hidden interior.
pub fn interior_obstacle_hit<const D: usize>(
    strip: &TriangulatedStrip<D>,
    obstacles: &ObstacleSet<D>,
) -> Option<usize> {
    if D != 3 {
        return None;
    }
    let candidates: Vec<(usize, crate::vec::Vec3)> = obstacles
        .obstacles
        .iter()
        .filter(|obs| obs.aabb.overlaps(&strip.aabb))
        .map(|obs| {
            let mut p3 = crate::vec::Vec3::ZERO;
            for i in 0..D {
                p3[i] = obs.vertices[0][i];
            }
            (obs.id, p3)
        })
        .collect();
    if candidates.is_empty() {
        return None;
    }
    // Reconstruct the <3> view of this strip; D == 3 here so the copy is
    // exact, and it happens once per query batch.
    let vertices: Vec<crate::vec::Vec3> = strip
        .vertices
        .iter()
        .map(|v| {
            let mut w = crate::vec::Vec3::ZERO;
            for i in 0..D {
                w[i] = v[i];
            }
            w
        })
        .collect();
    let tube = TriangulatedStrip::from_parts(vertices, strip.triangles.clone());
    candidates
        .into_iter()
        .find(|(_, p)| tube.contains_point(*p))
        .map(|(id, _)| id)
}

impl TriangulatedStrip<2> {
    /// Is `p` inside the filled strip (within `EPS_GEOM` of it)? Degenerate
    /// zero-area triangles (a collapsed strip) fall back to a distance test.
    pub fn contains_point(&self, p: Vec2) -> bool {
        let q = Aabb { lo: p, hi: p }.inflate(EPS_GEOM);
        self.bvh.any_overlap(&q, |ti| {
            let [a, b, c] = self.triangle_points(ti);
            let area2 = (b - a).cross_z(c - a);
            let scale = (b - a).norm_sq().max((c - a).norm_sq()).max(1.0);
            if area2.abs() <= 1e-12 * scale {
                return hull_distance(&[a, b, c], &[p]) <= EPS_GEOM;
            }
            let tol = EPS_GEOM * scale.sqrt();
            let sign = area2.signum();
            let d1 = (b - a).cross_z(p - a) * sign;
            let d2 = (c - b).cross_z(p - b) * sign;
            let d3 = (a - c).cross_z(p - c) * sign;
            d1 >= -tol && d2 >= -tol && d3 >= -tol
        })
    }
}
