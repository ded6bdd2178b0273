//! Exact distance between convex point clouds, plus barycentric coordinates.
//!
//! `hull_distance` runs GJK on the Minkowski difference of the two clouds.
//! The closest point on the working simplex is found by enumerating the
//! simplex's faces (at most 15 subsets of a 4-vertex simplex) and keeping the
//! nearest valid projection; this is slower than the incremental case split
//! but immune to its sign-convention bugs, and the simplex never exceeds
//! `D + 1` vertices, so the cost is bounded.

use crate::error::{Error, Result};
use crate::vec::Vector;

/// Index of the support point of `pts` in direction `dir` (first of ties).
fn support<const D: usize>(pts: &[Vector<D>], dir: Vector<D>) -> usize {
    let mut best = 0;
    let mut best_dot = pts[0].dot(dir);
    for (i, p) in pts.iter().enumerate().skip(1) {
        let d = p.dot(dir);
        if d > best_dot {
            best_dot = d;
            best = i;
        }
    }
    best
}

/// Projection of the origin onto the affine hull of `sub`, as barycentric
/// weights. `None` when the subset is affinely degenerate (a sub-subset then
/// yields the same projection).
fn project_origin<const D: usize>(sub: &[Vector<D>]) -> Option<Vec<f64>> {
    let m = sub.len() - 1;
    if m == 0 {
        return Some(vec![1.0]);
    }
    // Normal equations for min ||q0 + E mu||^2 over mu.
    let q0 = sub[0];
    let e: Vec<Vector<D>> = sub[1..].iter().map(|&q| q - q0).collect();
    let mut g = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    let mut scale = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            g[i][j] = e[i].dot(e[j]);
        }
        rhs[i] = -e[i].dot(q0);
        scale = scale.max(g[i][i]);
    }
    // Gaussian elimination with partial pivoting.
    let mut perm = [0usize, 1, 2];
    for col in 0..m {
        let mut piv = col;
        for r in col + 1..m {
            if g[perm[r]][col].abs() > g[perm[piv]][col].abs() {
                piv = r;
            }
        }
        perm.swap(col, piv);
        let p = g[perm[col]][col];
        if p.abs() <= 1e-13 * scale.max(1e-300) {
            return None;
        }
        for r in col + 1..m {
            let f = g[perm[r]][col] / p;
            for c in col..m {
                g[perm[r]][c] -= f * g[perm[col]][c];
            }
            rhs[perm[r]] -= f * rhs[perm[col]];
        }
    }
    let mut mu = [0.0f64; 3];
    for col in (0..m).rev() {
        let mut s = rhs[perm[col]];
        for c in col + 1..m {
            s -= g[perm[col]][c] * mu[c];
        }
        mu[col] = s / g[perm[col]][col];
    }
    let mut lam = Vec::with_capacity(m + 1);
    lam.push(1.0 - mu[..m].iter().sum::<f64>());
    lam.extend_from_slice(&mu[..m]);
    Some(lam)
}

/// Closest point of the simplex `pts` to the origin, with the indices of the
/// supporting face. Valid because every face projection with nonnegative
/// weights is a point of the simplex, so the minimum over them is exact.
fn closest_on_simplex<const D: usize>(pts: &[Vector<D>]) -> (Vector<D>, Vec<usize>) {
    let k = pts.len();
    let mut best_d2 = f64::INFINITY;
    let mut best_point = pts[0];
    let mut best_keep = vec![0];
    for mask in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let sub: Vec<Vector<D>> = idx.iter().map(|&i| pts[i]).collect();
        let Some(lam) = project_origin(&sub) else {
            continue;
        };
        if lam.iter().any(|&l| l < -1e-12) {
            continue;
        }
        let mut point = Vector::ZERO;
        for (l, q) in lam.iter().zip(&sub) {
            point += *q * *l;
        }
        let d2 = point.norm_sq();
        if d2 < best_d2 {
            best_d2 = d2;
            best_point = point;
            best_keep = idx;
        }
    }
    (best_point, best_keep)
}

/// Euclidean distance between the convex hulls of two point clouds
/// (0 when they intersect). Clouds must be non-empty.
pub fn hull_distance<const D: usize>(a: &[Vector<D>], b: &[Vector<D>]) -> f64 {
    debug_assert!(!a.is_empty() && !b.is_empty());
    let mut scale_sq = 1.0f64;
    for p in a.iter().chain(b.iter()) {
        scale_sq = scale_sq.max(p.norm_sq());
    }

    let mut simplex: Vec<(Vector<D>, usize, usize)> = vec![(a[0] - b[0], 0, 0)];
    let mut best = f64::INFINITY;
    for _ in 0..64 {
        let pts: Vec<Vector<D>> = simplex.iter().map(|s| s.0).collect();
        let (v, keep) = closest_on_simplex(&pts);
        let v_sq = v.norm_sq();
        if v_sq <= 1e-26 * scale_sq {
            return 0.0;
        }
        best = best.min(v_sq.sqrt());
        simplex = keep.into_iter().map(|i| simplex[i]).collect();

        let ia = support(a, -v);
        let ib = support(b, v);
        if simplex.iter().any(|&(_, sa, sb)| sa == ia && sb == ib) {
            return best;
        }
        let w = a[ia] - b[ib];
        // No support point can improve on v: converged.
        if v_sq - v.dot(w) <= 1e-12 * v_sq.max(1e-12 * scale_sq) {
            return best;
        }
        simplex.push((w, ia, ib));
    }
    best
}

/// Barycentric coordinates of `p` with respect to triangle `tri`. In 3-D, `p`
/// is implicitly projected onto the triangle's plane (least-squares solve).
/// Errors on degenerate (near-zero-area) triangles.
pub fn barycentric<const D: usize>(tri: &[Vector<D>; 3], p: Vector<D>) -> Result<[f64; 3]> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let r = p - tri[0];
    let a = e1.dot(e1);
    let b = e1.dot(e2);
    let c = e2.dot(e2);
    let det = a * c - b * b;
    if det.abs() <= 1e-16 * (a * c).max(1e-300) {
        return Err(Error::DegenerateGeometry(
            "barycentric on a degenerate triangle".into(),
        ));
    }
    let r1 = e1.dot(r);
    let r2 = e2.dot(r);
    let u = (c * r1 - b * r2) / det;
    let v = (a * r2 - b * r1) / det;
    Ok([1.0 - u - v, u, v])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec::{Vec2, Vec3};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn seg_point_dist(a: Vec2, b: Vec2, p: Vec2) -> f64 {
        let ab = b - a;
        let t = if ab.norm_sq() == 0.0 {
            0.0
        } else {
            ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0)
        };
        (a + ab * t).dist(p)
    }

    /// Independent oracle: convex polygons intersect (separating axis test on
    /// edge normals) or their distance is the min vertex-to-edge distance.
    fn poly_dist_oracle(a: &[Vec2], b: &[Vec2]) -> f64 {
        let overlaps = |p: &[Vec2], q: &[Vec2]| -> bool {
            for poly in [p, q] {
                for i in 0..poly.len() {
                    let n = (poly[(i + 1) % poly.len()] - poly[i]).perp();
                    let proj = |pts: &[Vec2]| {
                        let mut lo = f64::INFINITY;
                        let mut hi = f64::NEG_INFINITY;
                        for v in pts {
                            let d = v.dot(n);
                            lo = lo.min(d);
                            hi = hi.max(d);
                        }
                        (lo, hi)
                    };
                    let (lo1, hi1) = proj(p);
                    let (lo2, hi2) = proj(q);
                    if hi1 < lo2 || hi2 < lo1 {
                        return false;
                    }
                }
            }
            true
        };
        if overlaps(a, b) {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for (p, q) in [(a, b), (b, a)] {
            for v in p {
                for i in 0..q.len() {
                    best = best.min(seg_point_dist(q[i], q[(i + 1) % q.len()], *v));
                }
            }
        }
        best
    }

    fn random_convex(rng: &mut ChaCha8Rng, center: Vec2, radius: f64) -> Vec<Vec2> {
        // Sorted angles around a center give a convex polygon on a circle.
        let n = rng.gen_range(3..7);
        let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        angles
            .iter()
            .map(|&t| center + Vec2::new2(t.cos(), t.sin()) * radius)
            .collect()
    }

    #[test]
    fn point_cases() {
        let p = [Vec2::new2(0.0, 0.0)];
        let q = [Vec2::new2(3.0, 4.0)];
        assert!((hull_distance(&p, &q) - 5.0).abs() < 1e-12);
        assert_eq!(hull_distance(&p, &p), 0.0);
    }

    #[test]
    fn segment_cases() {
        let seg = [Vec2::new2(0.0, 0.0), Vec2::new2(10.0, 0.0)];
        let p = [Vec2::new2(5.0, 2.0)];
        assert!((hull_distance(&seg, &p) - 2.0).abs() < 1e-12);
        let p2 = [Vec2::new2(-3.0, 4.0)];
        assert!((hull_distance(&seg, &p2) - 5.0).abs() < 1e-12);
        // Crossing segments touch.
        let seg2 = [Vec2::new2(5.0, -1.0), Vec2::new2(5.0, 1.0)];
        assert!(hull_distance(&seg, &seg2) < 1e-10);
        // Collinear overlapping (degenerate simplexes).
        let seg3 = [Vec2::new2(4.0, 0.0), Vec2::new2(20.0, 0.0)];
        assert!(hull_distance(&seg, &seg3) < 1e-10);
    }

    #[test]
    fn matches_polygon_oracle_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut zero_hits = 0;
        for _ in 0..500 {
            let ca = Vec2::new2(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let ra = rng.gen_range(0.5..3.0);
            let a = random_convex(&mut rng, ca, ra);
            let cb = Vec2::new2(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let rb = rng.gen_range(0.5..3.0);
            let b = random_convex(&mut rng, cb, rb);
            let got = hull_distance(&a, &b);
            let want = poly_dist_oracle(&a, &b);
            assert!(
                (got - want).abs() <= 1e-9 * (1.0 + want),
                "gjk {got} vs oracle {want}"
            );
            if want == 0.0 {
                zero_hits += 1;
            }
        }
        assert!(zero_hits > 20, "oracle corpus should include intersections");
    }

    #[test]
    fn boxes_3d_match_aabb_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let c1 = Vec3::new3(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            let c2 = Vec3::new3(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            let h1 = rng.gen_range(0.2..1.5);
            let h2 = rng.gen_range(0.2..1.5);
            let corners = |c: Vec3, h: f64| -> Vec<Vec3> {
                let mut out = Vec::new();
                for sx in [-1.0, 1.0] {
                    for sy in [-1.0, 1.0] {
                        for sz in [-1.0, 1.0] {
                            out.push(c + Vec3::new3(sx, sy, sz) * h);
                        }
                    }
                }
                out
            };
            let a = corners(c1, h1);
            let b = corners(c2, h2);
            let want = {
                let mut s = 0.0;
                for i in 0..3 {
                    let gap = ((c1[i] - h1) - (c2[i] + h2)).max((c2[i] - h2) - (c1[i] + h1)).max(0.0);
                    s += gap * gap;
                }
                f64::sqrt(s)
            };
            let got = hull_distance(&a, &b);
            assert!((got - want).abs() <= 1e-9 * (1.0 + want), "{got} vs {want}");
        }
    }

    #[test]
    fn barycentric_reconstructs() {
        let tri = [Vec2::new2(0.0, 0.0), Vec2::new2(4.0, 0.0), Vec2::new2(0.0, 3.0)];
        let p = Vec2::new2(1.0, 1.0);
        let w = barycentric(&tri, p).unwrap();
        let back = tri[0] * w[0] + tri[1] * w[1] + tri[2] * w[2];
        assert!(back.dist(p) < 1e-12);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let tri3 = [
            Vec3::new3(0.0, 0.0, 1.0),
            Vec3::new3(2.0, 0.0, 1.0),
            Vec3::new3(0.0, 2.0, 1.0),
        ];
        let q = Vec3::new3(0.5, 0.5, 1.0);
        let w3 = barycentric(&tri3, q).unwrap();
        let back3 = tri3[0] * w3[0] + tri3[1] * w3[1] + tri3[2] * w3[2];
        assert!(back3.dist(q) < 1e-12);

        let degenerate = [Vec2::ZERO, Vec2::new2(1.0, 1.0), Vec2::new2(2.0, 2.0)];
        assert!(barycentric(&degenerate, p).is_err());
    }
}
