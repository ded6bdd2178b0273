//! One-dimensional minimum-time motion and fixed-horizon velocity profiles.
//!
//! The continuous minimum time between two velocity states over a signed
//! displacement is the classic bang-bang result (accelerate, optionally
//! cruise, decelerate; or its mirror). The discrete counterpart fixes a step
//! count `n` and picks velocity samples from a one-parameter family
//!
//! ```text
//! v_i(vc) = clamp(vc, lower_i, upper_i)
//! ```
//!
//! where `upper`/`lower` are the tightest ramps compatible with the endpoint
//! velocities and the speed cap. The family is monotone in `vc` and sweeps
//! every displacement between the two bang-bang extremes, so bisection on
//! `vc` solves the two-point problem exactly at the grid resolution, and the
//! per-step slope never exceeds the acceleration cap because clamping is
//! 1-Lipschitz in its bounds.

/// Continuous minimum time to travel signed displacement `d` starting at
/// velocity `v0` and ending at `v1`, with `|v| <= vmax`, `|a| <= amax`.
/// Requires `|v0|, |v1| <= vmax` and positive `amax`; `vmax` may be infinite.
pub fn min_time_1d(d: f64, v0: f64, v1: f64, vmax: f64, amax: f64) -> f64 {
    debug_assert!(amax > 0.0);
    debug_assert!(v0.abs() <= vmax * (1.0 + 1e-9) && v1.abs() <= vmax * (1.0 + 1e-9));
    let up = peak_candidate(d, v0, v1, vmax, amax);
    let down = peak_candidate(-d, -v0, -v1, vmax, amax);
    match (up, down) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => unreachable!("one bang-bang branch always exists"),
    }
}

/// Time for the accelerate-(cruise-)decelerate branch, if its peak velocity
/// lies above both endpoint velocities.
fn peak_candidate(d: f64, v0: f64, v1: f64, vmax: f64, amax: f64) -> Option<f64> {
    let vp_sq = 0.5 * (2.0 * amax * d + v0 * v0 + v1 * v1);
    let hi = v0.max(v1);
    let tol = 1e-12 * (1.0 + v0 * v0 + v1 * v1 + amax * d.abs());
    if vp_sq < hi * hi - tol || vp_sq < -tol {
        return None;
    }
    let vp = vp_sq.max(hi * hi).max(0.0).sqrt();
    if vp < hi {
        return None; // hi < 0 and the peak resolves below it
    }
    if vp <= vmax {
        Some(((2.0 * vp - v0 - v1) / amax).max(0.0))
    } else {
        let cruise = (d - (vmax * vmax - v0 * v0) / (2.0 * amax)
            - (vmax * vmax - v1 * v1) / (2.0 * amax))
            / vmax;
        Some((vmax - v0) / amax + (vmax - v1) / amax + cruise.max(0.0))
    }
}

/// Velocity samples (length `n + 1`) moving from `(p0, v0)` to `(p1, v1)` in
/// exactly `n` steps of `dt`, or `None` if that horizon cannot realise the
/// displacement. The first and last samples are `v0` and `v1` bit for bit,
/// and integrating the samples lands on `p1` to within a few ulps.
pub fn solve_fixed_steps(
    p0: f64,
    p1: f64,
    v0: f64,
    v1: f64,
    vmax: f64,
    amax: f64,
    dt: f64,
    n: usize,
) -> Option<Vec<f64>> {
    debug_assert!(n >= 1 && dt > 0.0);
    let d = p1 - p0;
    let dv_step = amax * dt;
    let theta = n as f64 * dt;
    let mut upper = Vec::with_capacity(n + 1);
    let mut lower = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = i as f64 * dt;
        let u = (v0 + amax * t).min(v1 + amax * (theta - t)).min(vmax);
        let l = (v0 - amax * t).max(v1 - amax * (theta - t)).max(-vmax);
        if l > u + 1e-12 * (1.0 + vmax.min(1e300)) {
            return None; // endpoint velocities too far apart for n steps
        }
        upper.push(u);
        lower.push(l.min(u));
    }
    // Clamp endpoints exactly.
    upper[0] = v0;
    lower[0] = v0;
    upper[n] = v1;
    lower[n] = v1;

    let displacement = |samples: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            s += 0.5 * (samples[i] + samples[i + 1]) * dt;
        }
        s
    };
    let fill = |vc: f64, out: &mut Vec<f64>| {
        out.clear();
        for i in 0..=n {
            out.push(vc.clamp(lower[i], upper[i]));
        }
    };

    let mut work = Vec::with_capacity(n + 1);
    let slack = 1e-9 * (1.0 + d.abs());
    fill(-bound_for(vmax, &lower, &upper), &mut work);
    let g_lo = displacement(&work);
    fill(bound_for(vmax, &lower, &upper), &mut work);
    let g_hi = displacement(&work);
    if d < g_lo - slack || d > g_hi + slack {
        return None;
    }

    let mut lo = -bound_for(vmax, &lower, &upper);
    let mut hi = bound_for(vmax, &lower, &upper);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval collapsed to adjacent floats
        }
        fill(mid, &mut work);
        if displacement(&work) < d {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    fill(hi, &mut work);
    if displacement(&work) < d {
        fill(hi.max(lo), &mut work);
    }

    // Kill the residual against the absolute target with a flat bump on the
    // interior samples (each interior sample contributes dt times itself to
    // the trapezoid sum). Two rounds reach ulp level.
    if n >= 2 {
        for _ in 0..2 {
            let err = p1 - integrate_end(p0, dt, &work);
            let bump = err / (dt * (n - 1) as f64);
            for w in work.iter_mut().take(n).skip(1) {
                *w += bump;
            }
        }
    }

    // The clamp family is amax-Lipschitz by construction; the endpoint
    // snapping and bump are ulp-scale. Guard in debug builds only.
    debug_assert!(work
        .windows(2)
        .all(|w| (w[1] - w[0]).abs() <= dv_step * (1.0 + 1e-6) + 1e-9));
    Some(work)
}

/// Finite bisection bound: with an infinite speed cap the envelopes are still
/// finite, so bound the cruise parameter by their extremes.
fn bound_for(vmax: f64, lower: &[f64], upper: &[f64]) -> f64 {
    if vmax.is_finite() {
        return vmax;
    }
    let mut m = 1.0f64;
    for i in 0..lower.len() {
        m = m.max(lower[i].abs()).max(upper[i].abs());
    }
    m
}

/// End position of integrating velocity samples with the same floating-point
/// expressions the trajectory constructor uses.
fn integrate_end(p0: f64, dt: f64, v: &[f64]) -> f64 {
    let mut p = p0;
    for i in 0..v.len() - 1 {
        let a = (v[i + 1] - v[i]) / dt;
        p = p + v[i] * dt + a * (0.5 * dt * dt);
    }
    p
}
