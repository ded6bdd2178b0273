//! Static obstacles. Each obstacle is a convex vertex cloud plus an inflation
//! radius (the agent radius), so collision tests are a single convex-distance
//! query against the uninflated geometry. Concave planar polygons are
//! decomposed into triangles up front via `ear_clip`.

use crate::consts::EPS_GEOM;
use crate::error::{Error, Result};
use crate::geom::convex::hull_distance;
use crate::geom::Aabb;
use crate::vec::{Vec2, Vec3, Vector};

#[derive(Clone, Debug)]
pub struct Obstacle<const D: usize> {
    /// Index of the scenario obstacle this came from (several decomposed
    /// pieces can share one id).
    pub id: usize,
    pub vertices: Vec<Vector<D>>,
    /// Faces of a 3-D mesh; empty for planar obstacles and boxes.
    pub faces: Vec<[usize; 3]>,
    pub inflation: f64,
    /// Bounding box of the inflated obstacle.
    pub aabb: Aabb<D>,
}

impl<const D: usize> Obstacle<D> {
    fn finish(id: usize, vertices: Vec<Vector<D>>, faces: Vec<[usize; 3]>, inflation: f64) -> Self {
        let aabb = Aabb::of_points(&vertices).inflate(inflation);
        Obstacle {
            id,
            vertices,
            faces,
            inflation,
            aabb,
        }
    }

    pub fn from_box(id: usize, lo: Vector<D>, hi: Vector<D>, inflation: f64) -> Result<Self> {
        for i in 0..D {
            if !(hi[i] > lo[i]) {
                return Err(Error::DegenerateGeometry(format!(
                    "obstacle {id}: box extent not positive on axis {i}"
                )));
            }
        }
        let mut vertices = Vec::with_capacity(1 << D);
        for corner in 0..(1usize << D) {
            let mut p = lo;
            for axis in 0..D {
                if corner & (1 << axis) != 0 {
                    p[axis] = hi[axis];
                }
            }
            vertices.push(p);
        }
        Ok(Self::finish(id, vertices, Vec::new(), inflation))
    }
}

impl Obstacle<2> {
    /// Convex polygon; vertex order is normalised to counter-clockwise.
    pub fn convex_polygon(id: usize, mut verts: Vec<Vec2>, inflation: f64) -> Result<Self> {
        if verts.len() < 3 {
            return Err(Error::DegenerateGeometry(format!(
                "obstacle {id}: polygon needs at least 3 vertices"
            )));
        }
        let area = signed_area(&verts);
        let scale: f64 = verts.iter().map(|v| v.norm_sq()).fold(1.0, f64::max);
        if area.abs() <= 1e-12 * scale {
            return Err(Error::DegenerateGeometry(format!(
                "obstacle {id}: polygon area is zero"
            )));
        }
        if area < 0.0 {
            verts.reverse();
        }
        let n = verts.len();
        for i in 0..n {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            let c = verts[(i + 2) % n];
            if (b - a).cross_z(c - b) < -1e-9 * scale {
                return Err(Error::DegenerateGeometry(format!(
                    "obstacle {id}: polygon is concave at vertex {}",
                    (i + 1) % n
                )));
            }
        }
        Ok(Self::finish(id, verts, Vec::new(), inflation))
    }
}

impl Obstacle<3> {
    /// Closed convex triangle mesh. Validates index bounds, that every edge is
    /// shared by exactly two faces in opposite directions, the Euler
    /// characteristic, and convexity (all vertices on one side of each face).
    pub fn convex_mesh(
        id: usize,
        verts: Vec<Vec3>,
        faces: Vec<[usize; 3]>,
        inflation: f64,
    ) -> Result<Self> {
        let err = |detail: String| Error::DegenerateGeometry(format!("obstacle {id}: {detail}"));
        if verts.len() < 4 || faces.len() < 4 {
            return Err(err("mesh needs at least 4 vertices and 4 faces".into()));
        }
        let mut edges = std::collections::BTreeMap::<(usize, usize), i64>::new();
        for f in &faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if a >= verts.len() || b >= verts.len() || a == b {
                    return Err(err(format!("face {f:?} has invalid indices")));
                }
                // Count directed edges with sign; closed orientable manifolds
                // cancel to 0 on every undirected edge.
                let (key, sign) = if a < b { ((a, b), 1) } else { ((b, a), -1) };
                *edges.entry(key).or_insert(0) += sign;
            }
        }
        if edges.values().any(|&c| c != 0) {
            return Err(err("mesh is not closed and consistently oriented".into()));
        }
        let euler = verts.len() as i64 - edges.len() as i64 + faces.len() as i64;
        if euler != 2 {
            return Err(err(format!("mesh Euler characteristic is {euler}, want 2")));
        }
        let scale: f64 = verts.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let mut side = 0.0f64;
        for f in &faces {
            let n = (verts[f[1]] - verts[f[0]]).cross(verts[f[2]] - verts[f[0]]);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for v in &verts {
                let d = (*v - verts[f[0]]).dot(n);
                lo = lo.min(d);
                hi = hi.max(d);
            }
            let tol = 1e-9 * scale * scale * n.norm().max(1e-300);
            let this = if lo < -tol && hi > tol {
                return Err(err("mesh is not convex".into()));
            } else if hi > tol {
                1.0
            } else if lo < -tol {
                -1.0
            } else {
                0.0 // all vertices coplanar with this face; no orientation info
            };
            if this != 0.0 {
                if side != 0.0 && this != side {
                    return Err(err("mesh face orientations are inconsistent".into()));
                }
                side = this;
            }
        }
        Ok(Self::finish(id, verts, faces, inflation))
    }
}

pub fn signed_area(verts: &[Vec2]) -> f64 {
    let mut s = 0.0;
    for i in 0..verts.len() {
        let a = verts[i];
        let b = verts[(i + 1) % verts.len()];
        s += a.cross_z(b);
    }
    s * 0.5
}

/// Triangulate a simple polygon by ear clipping. Returns index triples into
/// the input slice. Fails on self-intersecting or zero-area input.
pub fn ear_clip(verts: &[Vec2]) -> Result<Vec<[usize; 3]>> {
    let n = verts.len();
    if n < 3 {
        return Err(Error::DegenerateGeometry("polygon needs 3 vertices".into()));
    }
    let scale: f64 = verts.iter().map(|v| v.norm_sq()).fold(1.0, f64::max);
    let area = signed_area(verts);
    if area.abs() <= 1e-12 * scale {
        return Err(Error::DegenerateGeometry("polygon area is zero".into()));
    }
    let mut ring: Vec<usize> = if area > 0.0 {
        (0..n).collect()
    } else {
        (0..n).rev().collect()
    };
    let mut tris = Vec::with_capacity(n - 2);
    let tol = 1e-12 * scale;
    while ring.len() > 3 {
        let m = ring.len();
        let mut clipped = false;
        for i in 0..m {
            let (ip, ic, inx) = (ring[(i + m - 1) % m], ring[i], ring[(i + 1) % m]);
            let (a, b, c) = (verts[ip], verts[ic], verts[inx]);
            if (b - a).cross_z(c - b) <= tol {
                continue; // reflex or collinear corner
            }
            let blocked = ring.iter().any(|&j| {
                if j == ip || j == ic || j == inx {
                    return false;
                }
                point_in_triangle_incl(verts[j], a, b, c, tol)
            });
            if !blocked {
                tris.push([ip, ic, inx]);
                ring.remove(i);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return Err(Error::DegenerateGeometry(
                "polygon could not be triangulated (self-intersecting?)".into(),
            ));
        }
    }
    tris.push([ring[0], ring[1], ring[2]]);
    Ok(tris)
}

fn point_in_triangle_incl(p: Vec2, a: Vec2, b: Vec2, c: Vec2, tol: f64) -> bool {
    let d1 = (b - a).cross_z(p - a);
    let d2 = (c - b).cross_z(p - b);
    let d3 = (a - c).cross_z(p - c);
    d1 >= -tol && d2 >= -tol && d3 >= -tol
}

#[derive(Clone, Debug, Default)]
pub struct ObstacleSet<const D: usize> {
    pub obstacles: Vec<Obstacle<D>>,
}

impl<const D: usize> ObstacleSet<D> {
    pub fn new(obstacles: Vec<Obstacle<D>>) -> Self {
        ObstacleSet { obstacles }
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    /// Id of the first obstacle whose inflated volume meets the convex hull of
    /// `pts`, if any. Touching within `EPS_GEOM` counts as a hit, so certified
    /// free space keeps strictly positive clearance.
    pub fn hull_hits(&self, pts: &[Vector<D>]) -> Option<usize> {
        let query = Aabb::of_points(pts);
        for obs in &self.obstacles {
            if !query.overlaps(&obs.aabb) {
                continue;
            }
            if hull_distance(pts, &obs.vertices) <= obs.inflation + EPS_GEOM {
                return Some(obs.id);
            }
        }
        None
    }

    pub fn segment_hits(&self, a: Vector<D>, b: Vector<D>) -> Option<usize> {
        self.hull_hits(&[a, b])
    }

    pub fn point_hits(&self, p: Vector<D>) -> Option<usize> {
        self.hull_hits(&[p])
    }

    /// Smallest clearance from the hull of `pts` to any inflated obstacle
    /// surface; negative inside, `INFINITY` with no obstacles.
    pub fn clearance(&self, pts: &[Vector<D>]) -> f64 {
        let mut best = f64::INFINITY;
        for obs in &self.obstacles {
            best = best.min(hull_distance(pts, &obs.vertices) - obs.inflation);
        }
        best
    }
}

/// Does the segment `a..b` meet any inflated obstacle?
pub fn segment_hits_obstacles<const D: usize>(
    a: Vector<D>,
    b: Vector<D>,
    obstacles: &ObstacleSet<D>,
) -> bool {
    obstacles.segment_hits(a, b).is_some()
}

/// Inclusion test used by tests and the triangulation oracle: is `p` inside
/// the (possibly concave) polygon? Even-odd ray cast.
pub fn point_in_polygon(p: Vec2, verts: &[Vec2]) -> bool {
    let mut inside = false;
    let n = verts.len();
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn polygon_validation() {
        let square = vec![
            Vec2::new2(0.0, 0.0),
            Vec2::new2(2.0, 0.0),
            Vec2::new2(2.0, 2.0),
            Vec2::new2(0.0, 2.0),
        ];
        let o = Obstacle::convex_polygon(0, square.clone(), 0.5).unwrap();
        assert_eq!(o.aabb.lo.0, [-0.5, -0.5]);

        // Clockwise input gets normalised.
        let mut cw = square.clone();
        cw.reverse();
        let o2 = Obstacle::convex_polygon(0, cw, 0.0).unwrap();
        assert!(signed_area(&o2.vertices) > 0.0);

        let concave = vec![
            Vec2::new2(0.0, 0.0),
            Vec2::new2(4.0, 0.0),
            Vec2::new2(4.0, 4.0),
            Vec2::new2(2.0, 1.0),
            Vec2::new2(0.0, 4.0),
        ];
        assert!(Obstacle::convex_polygon(0, concave, 0.0).is_err());
    }

    #[test]
    fn ear_clip_area_and_membership_match_oracle() {
        // Non-convex U shape.
        let poly = vec![
            Vec2::new2(0.0, 0.0),
            Vec2::new2(6.0, 0.0),
            Vec2::new2(6.0, 5.0),
            Vec2::new2(4.0, 5.0),
            Vec2::new2(4.0, 2.0),
            Vec2::new2(2.0, 2.0),
            Vec2::new2(2.0, 5.0),
            Vec2::new2(0.0, 5.0),
        ];
        let tris = ear_clip(&poly).unwrap();
        assert_eq!(tris.len(), poly.len() - 2);
        let tri_area: f64 = tris
            .iter()
            .map(|t| 0.5 * (poly[t[1]] - poly[t[0]]).cross_z(poly[t[2]] - poly[t[0]]))
            .sum();
        assert!((tri_area - signed_area(&poly)).abs() < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let p = Vec2::new2(rng.gen_range(-1.0..7.0), rng.gen_range(-1.0..6.0));
            let want = point_in_polygon(p, &poly);
            let got = tris.iter().any(|t| {
                point_in_triangle_incl(p, poly[t[0]], poly[t[1]], poly[t[2]], 0.0)
            });
            // Skip points within a hair of any edge: inclusive triangle edges
            // vs the even-odd rule disagree only on the boundary.
            let near_edge = (0..poly.len()).any(|i| {
                let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
                hull_distance(&[a, b], &[p]) < 1e-9
            });
            if !near_edge {
                assert_eq!(got, want, "point {p:?}");
            }
        }
    }

    #[test]
    fn mesh_validation() {
        let v = vec![
            Vec3::new3(0.0, 0.0, 0.0),
            Vec3::new3(1.0, 0.0, 0.0),
            Vec3::new3(1.0, 1.0, 0.0),
            Vec3::new3(0.0, 1.0, 0.0),
            Vec3::new3(0.0, 0.0, 1.0),
            Vec3::new3(1.0, 0.0, 1.0),
            Vec3::new3(1.0, 1.0, 1.0),
            Vec3::new3(0.0, 1.0, 1.0),
        ];
        // Outward-oriented unit cube.
        let f: Vec<[usize; 3]> = vec![
            [0, 2, 1],
            [0, 3, 2],
            [4, 5, 6],
            [4, 6, 7],
            [0, 1, 5],
            [0, 5, 4],
            [1, 2, 6],
            [1, 6, 5],
            [2, 3, 7],
            [2, 7, 6],
            [3, 0, 4],
            [3, 4, 7],
        ];
        assert!(Obstacle::convex_mesh(0, v.clone(), f.clone(), 0.2).is_ok());

        let mut open = f.clone();
        open.pop();
        assert!(Obstacle::convex_mesh(0, v.clone(), open, 0.2).is_err());

        let mut flipped = f.clone();
        flipped[0] = [0, 1, 2];
        assert!(Obstacle::convex_mesh(0, v, flipped, 0.2).is_err());
    }

    #[test]
    fn segment_queries_with_inflation() {
        let square = Obstacle::convex_polygon(
            7,
            vec![
                Vec2::new2(2.0, -1.0),
                Vec2::new2(3.0, -1.0),
                Vec2::new2(3.0, 1.0),
                Vec2::new2(2.0, 1.0),
            ],
            0.5,
        )
        .unwrap();
        let set = ObstacleSet::new(vec![square]);
        // Passes 0.6 left of the inflated face: clear.
        assert_eq!(set.segment_hits(Vec2::new2(0.9, -5.0), Vec2::new2(0.9, 5.0)), None);
        // Within the inflation band.
        assert_eq!(set.segment_hits(Vec2::new2(1.6, -5.0), Vec2::new2(1.6, 5.0)), Some(7));
        assert!(segment_hits_obstacles(Vec2::new2(0.0, 0.0), Vec2::new2(5.0, 0.0), &set));
        assert_eq!(set.point_hits(Vec2::new2(2.5, 0.0)), Some(7));
        assert_eq!(set.point_hits(Vec2::new2(0.0, 0.0)), None);
        let c = set.clearance(&[Vec2::new2(0.0, 0.0)]);
        assert!((c - 1.5).abs() < 1e-9, "clearance {c}");
    }
}
