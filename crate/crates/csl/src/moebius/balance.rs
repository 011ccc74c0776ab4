//! Hersch-type balancing: find the conformal dilation of `S^m` that
//! centers a weighted vertex measure at the origin of R^{m+1}, making
//! the coordinate functions admissible min-max test functions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom;

use super::{sphere_to_stereographic, stereographic_to_sphere, Immersion, MoebiusElement};

/// Result of a balancing run. `dilation_center` and
/// `dilation_parameter` describe the achieving dilation `D_xi` with
/// `xi = s * p`; the identity corresponds to `s = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct BalanceResult {
    pub dilation_center: Vec<f64>,
    pub dilation_parameter: f64,
    /// Norm of the weighted center of mass after balancing, relative to
    /// the total mass.
    pub residual: f64,
    pub iterations: usize,
}

/// Conformal self-map of the closed unit ball with `D_xi(0) = xi`.
/// Restricted to the sphere it is the Moebius dilation that fixes
/// `+-xi/|xi|` and pushes mass toward `xi/|xi|` as `|xi| -> 1`.
pub fn moebius_ball_map(xi: &[f64], x: &[f64]) -> Vec<f64> {
    let xi_sq = geom::norm_sq(xi);
    if xi_sq == 0.0 {
        return x.to_vec();
    }
    let x_sq = geom::norm_sq(x);
    let xpxi: Vec<f64> = x.iter().zip(xi).map(|(a, b)| a + b).collect();
    let xpxi_sq = geom::norm_sq(&xpxi);
    let denom = 1.0 + 2.0 * geom::dot(x, xi) + xi_sq * x_sq;
    xpxi.iter()
        .zip(xi)
        .map(|(s, xi_i)| ((1.0 - xi_sq) * s + xpxi_sq * xi_i) / denom)
        .collect()
}

/// Balance the weighted vertex measure `weights` on the unit-sphere
/// immersion `phi` (coordinates in R^{m+1}, unit norm): find `xi` in
/// the open unit ball with `| sum_i w_i D_xi(p_i) | <= tol * sum_i w_i`.
///
/// The iteration is the damped fixed point `xi <- xi - alpha c(xi)`
/// where `c` is the relative center of mass after `D_xi`; `alpha` is
/// halved whenever the residual increases. Measures close to a Dirac
/// mass cannot be balanced and exhaust the iteration limit.
pub fn hersch_balance(
    phi: &Immersion,
    weights: &[f64],
    tol_rel: f64,
    max_iterations: usize,
) -> Result<(BalanceResult, Immersion)> {
    let n = phi.vertex_count();
    if weights.len() != n {
        return Err(Error::InvalidParameter(format!(
            "expected {n} weights, got {}",
            weights.len()
        )));
    }
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidParameter(
            "measure weights must be nonnegative and finite".into(),
        ));
    }
    let mass: f64 = weights.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::InvalidParameter("measure has zero total mass".into()));
    }
    let dim = phi.dim();
    for i in 0..n {
        if weights[i] > 0.0 && (geom::norm(phi.point(i)) - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidImmersion(format!(
                "measure vertex {i} is not on the unit sphere (|p| = {})",
                geom::norm(phi.point(i))
            )));
        }
    }

    let center = |xi: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; dim];
        for i in 0..n {
            if weights[i] == 0.0 {
                continue;
            }
            let q = moebius_ball_map(xi, phi.point(i));
            for d in 0..dim {
                c[d] += weights[i] * q[d];
            }
        }
        for cd in &mut c {
            *cd /= mass;
        }
        c
    };

    let mut xi = vec![0.0; dim];
    let mut alpha = 1.0;
    let mut c = center(&xi);
    let mut residual = geom::norm(&c);
    let mut iterations = 0;
    while residual > tol_rel && iterations < max_iterations {
        let mut step: Vec<f64> = xi.iter().zip(&c).map(|(x, ci)| x - alpha * ci).collect();
        // stay strictly inside the ball
        let r = geom::norm(&step);
        if r >= 0.999_999 {
            for s in &mut step {
                *s *= 0.999_999 / r;
            }
        }
        let c_new = center(&step);
        let res_new = geom::norm(&c_new);
        if res_new < residual {
            // tune the damping toward the effective step gain: an
            // overshoot flips the center direction, an undershoot
            // keeps it aligned
            let align = geom::dot(&c_new, &c) / (res_new * residual).max(f64::MIN_POSITIVE);
            xi = step;
            c = c_new;
            residual = res_new;
            if align < -0.2 {
                alpha *= 0.5;
            } else if align > 0.7 {
                alpha = (alpha * 1.6).min(8.0);
            }
        } else {
            alpha *= 0.5;
            if alpha < 1e-12 {
                break;
            }
        }
        iterations += 1;
    }

    if residual > tol_rel {
        return Err(Error::NonConvergence {
            iterations,
            residual,
        });
    }

    let balanced_coords: Vec<f64> = (0..n)
        .flat_map(|i| moebius_ball_map(&xi, phi.point(i)))
        .collect();
    let balanced = Immersion::new(dim, balanced_coords)?;
    let s = geom::norm(&xi);
    let p = if s > 0.0 {
        xi.iter().map(|x| x / s).collect()
    } else {
        let mut p = vec![0.0; dim];
        p[dim - 1] = 1.0;
        p
    };
    Ok((
        BalanceResult {
            dilation_center: p,
            dilation_parameter: s,
            residual,
            iterations,
        },
        balanced,
    ))
}

/// Express the dilation `D_xi` as `rotation . (R, t)` and return the
/// reduced representative `(R, t)`. Since rotations of the sphere do
/// not change spherical volumes, `(R, t)` reproduces the image volume
/// of the dilation in the chart.
pub fn reduced_witness(xi: &[f64]) -> Result<MoebiusElement> {
    let m1 = xi.len(); // sphere dimension m = m1 - 1
    let m = m1 - 1;
    if geom::norm(xi) >= 1.0 {
        return Err(Error::InvalidParameter(
            "dilation parameter must lie in the open unit ball".into(),
        ));
    }

    let mut north = vec![0.0; m1];
    north[m] = 1.0;
    let q_inf = moebius_ball_map(xi, &north);

    // rotation taking north to q_inf; then r^T . D_xi fixes the north
    // pole and is a chart similarity (up to a chart rotation, which is
    // split off below)
    let rot_t_apply = |q: &[f64]| -> Vec<f64> {
        // apply r^T = r^{-1} where r: north -> q_inf,
        // r = I - (u+v)(u+v)^T/(1+u.v) + 2 v u^T with u = north, v = q_inf
        let u = &north;
        let v = &q_inf;
        let uv = geom::dot(u, v);
        if uv < -1.0 + 1e-12 {
            // q_inf is the south pole: r^T is the half-turn in the
            // (e_1, north) plane composed with reflections; use the
            // explicit diagonal form diag(-1, 1, .., 1, -1)
            let mut out = q.to_vec();
            out[0] = -out[0];
            out[m] = -out[m];
            return out;
        }
        let w: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
        // r^T = I - w w^T/(1+uv) + 2 u v^T
        let wq = geom::dot(&w, q);
        let vq = geom::dot(v, q);
        (0..m1)
            .map(|i| q[i] - w[i] * wq / (1.0 + uv) + 2.0 * u[i] * vq)
            .collect()
    };

    let chart_map = |x: &[f64]| -> Result<Vec<f64>> {
        let q = stereographic_to_sphere(x);
        let dq = moebius_ball_map(xi, &q);
        sphere_to_stereographic(&rot_t_apply(&dq))
    };

    let origin = chart_map(&vec![0.0; m])?;
    let mut scale = 0.0;
    let mut linear = vec![vec![0.0; m]; m]; // columns of R*O
    for d in 0..m {
        let mut e = vec![0.0; m];
        e[d] = 1.0;
        let img = chart_map(&e)?;
        let col: Vec<f64> = img.iter().zip(&origin).map(|(a, b)| a - b).collect();
        let len = geom::norm(&col);
        if d == 0 {
            scale = len;
        } else if (len - scale).abs() > 1e-6 * scale.max(1.0) {
            return Err(Error::Internal(format!(
                "dilation decomposition is not a similarity: column norms {scale} vs {len}"
            )));
        }
        for (row, c) in linear.iter_mut().zip(&col) {
            row[d] = c / len;
        }
    }
    // split the chart rotation O off: (R, t) with t = O^T t_raw, since
    // conjugating a similarity by a linear rotation keeps the scale
    let translation: Vec<f64> = (0..m)
        .map(|d| (0..m).map(|r| linear[r][d] * origin[r]).sum())
        .collect();
    MoebiusElement::new(scale, translation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn latitude_circle(z: f64, n: usize) -> (Immersion, Vec<f64>) {
        let r = (1.0 - z * z).sqrt();
        let mut coords = Vec::new();
        for i in 0..n {
            let t = 2.0 * PI * i as f64 / n as f64;
            coords.extend([r * t.cos(), r * t.sin(), z]);
        }
        (Immersion::new(3, coords).unwrap(), vec![1.0; n])
    }

    #[test]
    fn ball_map_fixes_poles_and_moves_center() {
        let xi = [0.0, 0.0, 0.6];
        let north = moebius_ball_map(&xi, &[0.0, 0.0, 1.0]);
        let south = moebius_ball_map(&xi, &[0.0, 0.0, -1.0]);
        assert_relative_eq!(north[2], 1.0, epsilon = 1e-14);
        assert_relative_eq!(south[2], -1.0, epsilon = 1e-14);
        let zero = moebius_ball_map(&xi, &[0.0, 0.0, 0.0]);
        assert_relative_eq!(zero[2], 0.6, epsilon = 1e-14);
        // sphere stays sphere
        let q = moebius_ball_map(&xi, &[1.0, 0.0, 0.0]);
        assert_relative_eq!(geom::norm(&q), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn antipodal_measure_returns_identity() {
        let (phi, w) = latitude_circle(0.0, 16);
        let (res, _) = hersch_balance(&phi, &w, 1e-8, 200).unwrap();
        assert_eq!(res.iterations, 0);
        assert_eq!(res.dilation_parameter, 0.0);
        assert!(res.residual <= 1e-12);
    }

    #[test]
    fn latitude_circle_recentred_to_equator() {
        let (phi, w) = latitude_circle(0.55, 64);
        let (res, balanced) = hersch_balance(&phi, &w, 1e-8, 200).unwrap();
        assert!(res.residual <= 1e-8);
        // the dilation axis is the z axis
        assert!(res.dilation_center[0].abs() < 1e-9);
        assert!(res.dilation_center[1].abs() < 1e-9);
        // compare against a bisection oracle on the 1-parameter family
        let height = |t: f64| moebius_ball_map(&[0.0, 0.0, t], phi.point(0))[2];
        let (mut lo, mut hi) = (-0.999, 0.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if height(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let t_oracle = 0.5 * (lo + hi);
        assert_relative_eq!(
            res.dilation_parameter * res.dilation_center[2].signum(),
            t_oracle,
            epsilon = 1e-6
        );
        // all balanced points now sit on the equator
        for i in 0..balanced.vertex_count() {
            assert!(balanced.point(i)[2].abs() < 1e-7);
        }
    }

    #[test]
    fn balancing_is_a_projection() {
        let (phi, w) = latitude_circle(0.4, 48);
        let (_, balanced) = hersch_balance(&phi, &w, 1e-10, 200).unwrap();
        let (res2, _) = hersch_balance(&balanced, &w, 1e-10, 200).unwrap();
        assert!(res2.dilation_parameter <= 1e-9, "second run {res2:?}");
    }

    #[test]
    fn near_dirac_measure_fails_to_converge() {
        // almost all mass at one point
        let (phi, mut w) = latitude_circle(0.3, 8);
        w.iter_mut().for_each(|x| *x = 1e-12);
        w[0] = 1.0;
        match hersch_balance(&phi, &w, 1e-8, 100) {
            Err(Error::NonConvergence { residual, .. }) => assert!(residual > 1e-8),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
