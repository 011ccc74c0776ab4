//! Mesh generators: planar disks and annuli, spherical cap charts,
//! ribbon surfaces in R^3, and the boundary-graded disk used by the
//! conformal cylinder deformation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geom;

use super::Mesh;

/// Planar triangulated disk of the given radius, centered at the origin.
///
/// Ring `k` of `resolution` carries `3k` vertices, so the triangle count
/// is `3 * resolution^2` (about 12k triangles at resolution 64).
pub fn generate_disk(radius: f64, resolution: usize) -> Result<Mesh> {
    if radius <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "disk radius must be positive, got {radius}"
        )));
    }
    if resolution < 1 {
        return Err(Error::InvalidParameter(
            "disk resolution must be at least 1".into(),
        ));
    }
    let mut vertices = vec![0.0, 0.0];
    let mut rings: Vec<Vec<usize>> = vec![vec![0]];
    let mut angles: Vec<Vec<f64>> = vec![vec![0.0]];
    for k in 1..=resolution {
        let r = radius * k as f64 / resolution as f64;
        let n = 3 * k;
        let offset = if k % 2 == 0 { PI / n as f64 } else { 0.0 };
        let (ids, angs) = push_ring(&mut vertices, r, n, offset);
        rings.push(ids);
        angles.push(angs);
    }
    let mut triangles = Vec::new();
    for j in 0..3 {
        triangles.push([0, rings[1][j], rings[1][(j + 1) % 3]]);
    }
    for k in 1..resolution {
        band(
            &mut triangles,
            &rings[k],
            &angles[k],
            &rings[k + 1],
            &angles[k + 1],
        );
    }
    enforce_ccw_2d(&vertices, &mut triangles);
    Mesh::new(2, vertices, triangles)
}

/// Planar annulus `r_in < |x| < r_out` with two boundary loops.
pub fn generate_annulus(r_in: f64, r_out: f64, resolution: usize) -> Result<Mesh> {
    if r_in <= 0.0 || r_in >= r_out {
        return Err(Error::InvalidParameter(format!(
            "annulus radii must satisfy 0 < r_in < r_out, got ({r_in}, {r_out})"
        )));
    }
    if resolution < 3 {
        return Err(Error::InvalidParameter(
            "annulus resolution must be at least 3".into(),
        ));
    }
    let n_theta = 3 * resolution;
    let layers = ((resolution as f64) * (r_out - r_in) / r_out).round().max(1.0) as usize;
    let mut vertices = Vec::new();
    let mut rings = Vec::new();
    let mut angles = Vec::new();
    for k in 0..=layers {
        let r = r_in + (r_out - r_in) * k as f64 / layers as f64;
        let offset = if k % 2 == 0 { 0.0 } else { PI / n_theta as f64 };
        let (ids, angs) = push_ring(&mut vertices, r, n_theta, offset);
        rings.push(ids);
        angles.push(angs);
    }
    let mut triangles = Vec::new();
    for k in 0..layers {
        band(
            &mut triangles,
            &rings[k],
            &angles[k],
            &rings[k + 1],
            &angles[k + 1],
        );
    }
    enforce_ccw_2d(&vertices, &mut triangles);
    Mesh::new(2, vertices, triangles)
}

/// Stereographic chart of a spherical cap: the image of the cap of
/// spherical radius `2*atan(chart_radius)` around the south pole is the
/// planar disk `|x| <= chart_radius`. Rings are spaced uniformly in
/// spherical arclength and sized by the circumference `2 pi sin(psi)`,
/// so the triangles stay near-uniform on the sphere even when the chart
/// extends far beyond the unit circle (sphere minus a small cap).
pub fn generate_cap_chart(chart_radius: f64, resolution: usize) -> Result<Mesh> {
    if chart_radius <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "chart radius must be positive, got {chart_radius}"
        )));
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter(
            "cap resolution must be at least 2".into(),
        ));
    }
    let psi_max = 2.0 * chart_radius.atan();
    let dpsi = psi_max / resolution as f64;
    let mut vertices = vec![0.0, 0.0];
    let mut rings: Vec<Vec<usize>> = vec![vec![0]];
    let mut angles: Vec<Vec<f64>> = vec![vec![0.0]];
    for k in 1..=resolution {
        let psi = dpsi * k as f64;
        let r = (psi / 2.0).tan();
        let n = ((2.0 * PI * psi.sin() / dpsi).round() as usize).max(3);
        let (ids, angs) = push_ring(&mut vertices, r, n, 0.0);
        rings.push(ids);
        angles.push(angs);
    }
    let mut triangles = Vec::new();
    let first = &rings[1];
    for j in 0..first.len() {
        triangles.push([0, first[j], first[(j + 1) % first.len()]]);
    }
    for k in 1..resolution {
        band(
            &mut triangles,
            &rings[k],
            &angles[k],
            &rings[k + 1],
            &angles[k + 1],
        );
    }
    enforce_ccw_2d(&vertices, &mut triangles);
    Mesh::new(2, vertices, triangles)
}

/// Unit disk meshed through the conformal strip chart
/// `z = (1 - e^zeta)/(1 + e^zeta)`, which grades edge lengths
/// geometrically toward the boundary vertex (1, 0). Vertices reach down
/// to distance ~`tip_radius/2` from that vertex, so a conformal factor
/// spanning `1/tip_radius` stays uniformly resolved.
///
/// `resolution` counts the angular subdivisions across the strip.
pub fn generate_tip_graded_disk(tip_radius: f64, resolution: usize) -> Result<Mesh> {
    if !(tip_radius > 0.0 && tip_radius < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "tip radius must lie in (0, 0.5), got {tip_radius}"
        )));
    }
    if resolution < 8 {
        return Err(Error::InvalidParameter(
            "graded disk resolution must be at least 8".into(),
        ));
    }
    let n_eta = resolution;
    let d_eta = PI / n_eta as f64;
    let xi_max = 4.0;
    let xi_min = (tip_radius / 4.0).ln();
    let n_xi = ((xi_max - xi_min) / d_eta).ceil() as usize;
    let d_xi = (xi_max - xi_min) / n_xi as f64;

    let vid = |i: usize, j: usize| i * (n_eta + 1) + j;
    let mut vertices = Vec::with_capacity(((n_xi + 1) * (n_eta + 1) + 2) * 2);
    for i in 0..=n_xi {
        let xi = xi_min + d_xi * i as f64;
        for j in 0..=n_eta {
            let eta = -PI / 2.0 + d_eta * j as f64;
            let (wr, wi) = (xi.exp() * eta.cos(), xi.exp() * eta.sin());
            let den = (1.0 + wr) * (1.0 + wr) + wi * wi;
            let zr = (1.0 - wr * wr - wi * wi) / den;
            let zi = -2.0 * wi / den;
            vertices.push(zr);
            vertices.push(zi);
        }
    }
    let tip = vertices.len() / 2;
    vertices.push(1.0);
    vertices.push(0.0);
    let far = vertices.len() / 2;
    vertices.push(-1.0);
    vertices.push(0.0);

    let mut triangles = Vec::new();
    for i in 0..n_xi {
        for j in 0..n_eta {
            let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    for j in 0..n_eta {
        triangles.push([tip, vid(0, j), vid(0, j + 1)]);
        triangles.push([far, vid(n_xi, j), vid(n_xi, j + 1)]);
    }
    enforce_ccw_2d(&vertices, &mut triangles);
    Mesh::new(2, vertices, triangles)
}

/// Ribbon surface in R^3: a strip of the given width swept along a
/// skeleton polyline with a rotation-minimizing normal frame, plus a
/// prescribed number of half twists when the skeleton is closed.
#[derive(Debug, Clone)]
pub struct RibbonSpec {
    /// Ordered skeleton points (not repeated at the seam when closed).
    pub skeleton: Vec<[f64; 3]>,
    pub closed: bool,
    /// Euclidean ribbon width.
    pub width: f64,
    /// 0 = annulus-type, odd = Moebius-type. Only meaningful when closed.
    pub half_twists: i32,
    /// Samples along the skeleton.
    pub resolution_along: usize,
    /// Samples across the width.
    pub resolution_across: usize,
}

impl RibbonSpec {
    /// Closed circular skeleton of the given radius in the xy-plane.
    pub fn circle(radius: f64, width: f64, half_twists: i32) -> RibbonSpec {
        let n = 64;
        let skeleton = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                [radius * t.cos(), radius * t.sin(), 0.0]
            })
            .collect();
        RibbonSpec {
            skeleton,
            closed: true,
            width,
            half_twists,
            resolution_along: 128,
            resolution_across: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "ribbon width must be positive, got {}",
                self.width
            )));
        }
        if self.resolution_along < 3 || self.resolution_across < 3 {
            return Err(Error::InvalidParameter(
                "ribbon resolution must be at least 3 in each direction".into(),
            ));
        }
        let min_points = if self.closed { 3 } else { 2 };
        if self.skeleton.len() < min_points {
            return Err(Error::InvalidParameter(format!(
                "skeleton needs at least {min_points} points"
            )));
        }
        Ok(())
    }
}

pub fn generate_ribbon(spec: &RibbonSpec) -> Result<Mesh> {
    spec.validate()?;
    let pts = resample_polyline(&spec.skeleton, spec.closed, spec.resolution_along);
    let min_curv_radius = min_curvature_radius(&pts, spec.closed);
    if spec.width >= min_curv_radius {
        return Err(Error::ConstraintViolation(format!(
            "ribbon width {} must be smaller than the minimal curvature radius {:.4} of the skeleton",
            spec.width, min_curv_radius
        )));
    }

    let frames = transport_frames(&pts, spec.closed, spec.half_twists);

    let n_l = pts.len();
    let n_w = spec.resolution_across;
    let cols = if spec.closed { n_l } else { n_l };
    let mut vertices = Vec::with_capacity(cols * n_w * 3);
    for i in 0..cols {
        for j in 0..n_w {
            let w = spec.width * (j as f64 / (n_w - 1) as f64 - 0.5);
            for d in 0..3 {
                vertices.push(pts[i][d] + w * frames[i][d]);
            }
        }
    }

    let flip = spec.closed && spec.half_twists.rem_euclid(2) == 1;
    let vid = |i: usize, j: usize| -> usize {
        if spec.closed && i == n_l {
            if flip {
                n_w - 1 - j
            } else {
                j
            }
        } else {
            i * n_w + j
        }
    };

    let bands = if spec.closed { n_l } else { n_l - 1 };
    let mut triangles = Vec::with_capacity(2 * bands * (n_w - 1));
    for i in 0..bands {
        for j in 0..n_w - 1 {
            let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let mesh = Mesh::new(3, vertices, triangles)?;
    if let Some((a, b)) = first_self_intersection(&mesh) {
        return Err(Error::EmbeddingFailure(format!(
            "ribbon triangles {a} and {b} intersect; reduce the width or refine the skeleton"
        )));
    }
    Ok(mesh)
}

fn push_ring(vertices: &mut Vec<f64>, r: f64, n: usize, offset: f64) -> (Vec<usize>, Vec<f64>) {
    let base = vertices.len() / 2;
    let mut ids = Vec::with_capacity(n);
    let mut angs = Vec::with_capacity(n);
    for j in 0..n {
        let theta = offset + 2.0 * PI * j as f64 / n as f64;
        vertices.push(r * theta.cos());
        vertices.push(r * theta.sin());
        ids.push(base + j);
        angs.push(theta);
    }
    (ids, angs)
}

/// Triangulate the band between two concentric vertex rings by angular
/// two-pointer sweep; handles unequal ring sizes. Emits |A| + |B|
/// triangles.
fn band(
    triangles: &mut Vec<[usize; 3]>,
    inner: &[usize],
    inner_angles: &[f64],
    outer: &[usize],
    outer_angles: &[f64],
) {
    let na = inner.len();
    let nb = outer.len();
    let aa = |i: usize| inner_angles[i % na] + 2.0 * PI * (i / na) as f64;
    let bb = |j: usize| outer_angles[j % nb] + 2.0 * PI * (j / nb) as f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < na || j < nb {
        let advance_inner = if j >= nb {
            true
        } else if i >= na {
            false
        } else {
            aa(i + 1) <= bb(j + 1)
        };
        if advance_inner {
            triangles.push([inner[i % na], inner[(i + 1) % na], outer[j % nb]]);
            i += 1;
        } else {
            triangles.push([inner[i % na], outer[j % nb], outer[(j + 1) % nb]]);
            j += 1;
        }
    }
}

fn signed_area_2d(vertices: &[f64], t: &[usize; 3]) -> f64 {
    let p = |i: usize| (vertices[2 * i], vertices[2 * i + 1]);
    let (ax, ay) = p(t[0]);
    let (bx, by) = p(t[1]);
    let (cx, cy) = p(t[2]);
    0.5 * ((bx - ax) * (cy - ay) - (cx - ax) * (by - ay))
}

fn enforce_ccw_2d(vertices: &[f64], triangles: &mut [[usize; 3]]) {
    for t in triangles.iter_mut() {
        if signed_area_2d(vertices, t) < 0.0 {
            t.swap(1, 2);
        }
    }
}

/// Resample a polyline to `n` points, uniform in arclength. Closed
/// polylines wrap around; the seam point is not duplicated.
fn resample_polyline(points: &[[f64; 3]], closed: bool, n: usize) -> Vec<[f64; 3]> {
    let mut cum = vec![0.0];
    let seg_count = if closed { points.len() } else { points.len() - 1 };
    for s in 0..seg_count {
        let a = points[s];
        let b = points[(s + 1) % points.len()];
        cum.push(cum[s] + geom::dist(&a, &b));
    }
    let total = *cum.last().unwrap();
    let samples = if closed { n } else { n - 1 };
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let target = total * k as f64 / samples as f64;
        let target = target.min(total);
        let seg = cum.partition_point(|&c| c <= target).saturating_sub(1);
        let seg = seg.min(seg_count - 1);
        let t = if cum[seg + 1] > cum[seg] {
            (target - cum[seg]) / (cum[seg + 1] - cum[seg])
        } else {
            0.0
        };
        let a = points[seg];
        let b = points[(seg + 1) % points.len()];
        out.push([
            a[0] + t * (b[0] - a[0]),
            a[1] + t * (b[1] - a[1]),
            a[2] + t * (b[2] - a[2]),
        ]);
    }
    out
}

fn min_curvature_radius(pts: &[[f64; 3]], closed: bool) -> f64 {
    let n = pts.len();
    let mut min_r = f64::INFINITY;
    let range: Vec<usize> = if closed { (0..n).collect() } else { (1..n - 1).collect() };
    for i in range {
        let p = pts[(i + n - 1) % n];
        let q = pts[i];
        let r = pts[(i + 1) % n];
        let a = geom::dist(&q, &r);
        let b = geom::dist(&p, &r);
        let c = geom::dist(&p, &q);
        let area = geom::heron_area(a, b, c);
        if area > 1e-300 {
            min_r = min_r.min(a * b * c / (4.0 * area));
        }
    }
    min_r
}

/// Rotation-minimizing normal frame along the skeleton. For closed
/// skeletons the frame holonomy is corrected and the prescribed number
/// of half twists is distributed uniformly in arclength, so the frame
/// closes up to the seam identification (with a flip when odd).
fn transport_frames(pts: &[[f64; 3]], closed: bool, half_twists: i32) -> Vec<[f64; 3]> {
    let n = pts.len();
    let tangent = |i: usize| -> [f64; 3] {
        let (a, b) = if closed {
            (pts[(i + n - 1) % n], pts[(i + 1) % n])
        } else if i == 0 {
            (pts[0], pts[1])
        } else if i == n - 1 {
            (pts[n - 2], pts[n - 1])
        } else {
            (pts[i - 1], pts[i + 1])
        };
        let d = geom::sub(&b, &a);
        let d = geom::normalize(&d);
        [d[0], d[1], d[2]]
    };
    let tangents: Vec<[f64; 3]> = (0..n).map(tangent).collect();

    // seed normal: project the least-aligned axis
    let t0 = tangents[0];
    let axis = (0..3).min_by(|&a, &b| t0[a].abs().partial_cmp(&t0[b].abs()).unwrap()).unwrap();
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let mut normal = project_unit(&e, &t0);

    let mut normals = vec![normal; n];
    for i in 1..n {
        normal = project_unit(&normal, &tangents[i]);
        normals[i] = normal;
    }

    if !closed {
        return normals;
    }

    // holonomy: transport once more across the seam and compare
    let wrapped = project_unit(&normal, &tangents[0]);
    let b0 = geom::cross3(&tangents[0], &normals[0]);
    let delta = geom::dot(&wrapped, &b0).atan2(geom::dot(&wrapped, &normals[0]));
    let total_twist = PI * half_twists as f64 - delta;

    let mut arclen = vec![0.0; n + 1];
    for i in 0..n {
        arclen[i + 1] = arclen[i] + geom::dist(&pts[i], &pts[(i + 1) % n]);
    }
    let total_len = arclen[n];
    for i in 0..n {
        let phi = total_twist * arclen[i] / total_len;
        let b = geom::cross3(&tangents[i], &normals[i]);
        let (c, s) = (phi.cos(), phi.sin());
        normals[i] = [
            c * normals[i][0] + s * b[0],
            c * normals[i][1] + s * b[1],
            c * normals[i][2] + s * b[2],
        ];
    }
    normals
}

fn project_unit(v: &[f64; 3], t: &[f64; 3]) -> [f64; 3] {
    let d = geom::dot(v, t);
    let mut w = [v[0] - d * t[0], v[1] - d * t[1], v[2] - d * t[2]];
    let n = geom::norm(&w);
    if n < 1e-12 {
        // tangent flipped onto the normal; restart from any perpendicular
        let axis = (0..3).min_by(|&a, &b| t[a].abs().partial_cmp(&t[b].abs()).unwrap()).unwrap();
        let mut e = [0.0; 3];
        e[axis] = 1.0;
        return project_unit(&e, t);
    }
    for x in &mut w {
        *x /= n;
    }
    w
}

/// Scan for a pair of non-adjacent intersecting triangles. Pairs are
/// prefiltered with bounding boxes sorted along x.
pub(crate) fn first_self_intersection(mesh: &Mesh) -> Option<(usize, usize)> {
    let tris = mesh.triangles();
    let nt = tris.len();
    let mut boxes = Vec::with_capacity(nt);
    for t in 0..nt {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &v in &tris[t] {
            let p = mesh.vertex(v);
            for d in 0..3 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        boxes.push((lo, hi, t));
    }
    boxes.sort_by(|a, b| a.0[0].partial_cmp(&b.0[0]).unwrap());
    for i in 0..nt {
        let (lo_i, hi_i, ti) = boxes[i];
        for &(lo_j, hi_j, tj) in boxes.iter().skip(i + 1) {
            if lo_j[0] > hi_i[0] {
                break;
            }
            if lo_j[1] > hi_i[1] || hi_j[1] < lo_i[1] || lo_j[2] > hi_i[2] || hi_j[2] < lo_i[2] {
                continue;
            }
            let (a, b) = (tris[ti], tris[tj]);
            if a.iter().any(|v| b.contains(v)) {
                continue; // adjacent
            }
            let pa: Vec<&[f64]> = a.iter().map(|&v| mesh.vertex(v)).collect();
            let pb: Vec<&[f64]> = b.iter().map(|&v| mesh.vertex(v)).collect();
            if triangles_intersect_3d(&pa, &pb) {
                return Some((ti.min(tj), ti.max(tj)));
            }
        }
    }
    None
}

/// Moller-style triangle-triangle intersection test in R^3.
fn triangles_intersect_3d(a: &[&[f64]], b: &[&[f64]]) -> bool {
    let scale = a
        .iter()
        .chain(b.iter())
        .map(|p| geom::norm(p))
        .fold(0.0, f64::max)
        .max(1.0);
    let eps = 1e-10 * scale;

    let n_b = plane_normal(b);
    let d_b = -geom::dot(&n_b, b[0]);
    let dist_a: Vec<f64> = a.iter().map(|p| geom::dot(&n_b, p) + d_b).collect();
    if dist_a.iter().all(|&d| d > eps) || dist_a.iter().all(|&d| d < -eps) {
        return false;
    }

    let n_a = plane_normal(a);
    let d_a = -geom::dot(&n_a, a[0]);
    let dist_b: Vec<f64> = b.iter().map(|p| geom::dot(&n_a, p) + d_a).collect();
    if dist_b.iter().all(|&d| d > eps) || dist_b.iter().all(|&d| d < -eps) {
        return false;
    }

    if dist_a.iter().all(|d| d.abs() <= eps) {
        return coplanar_triangles_intersect(a, b, &n_b);
    }

    // interval test along the plane-intersection line
    let dir = geom::cross3(&n_a, &n_b);
    let axis = (0..3).max_by(|&i, &j| dir[i].abs().partial_cmp(&dir[j].abs()).unwrap()).unwrap();
    let proj = |p: &[f64]| p[axis];
    let interval = |tri: &[&[f64]], dist: &[f64]| -> Option<(f64, f64)> {
        let mut ts = Vec::new();
        for i in 0..3 {
            for j in i + 1..3 {
                let (di, dj) = (dist[i], dist[j]);
                if (di > eps && dj < -eps) || (di < -eps && dj > eps) || di.abs() <= eps {
                    if di.abs() <= eps {
                        ts.push(proj(tri[i]));
                    } else {
                        let t = di / (di - dj);
                        ts.push(proj(tri[i]) + t * (proj(tri[j]) - proj(tri[i])));
                    }
                }
            }
        }
        if ts.is_empty() {
            return None;
        }
        let lo = ts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    };
    let (Some((a0, a1)), Some((b0, b1))) = (interval(a, &dist_a), interval(b, &dist_b)) else {
        return false;
    };
    a0.max(b0) <= a1.min(b1) - eps
}

fn plane_normal(t: &[&[f64]]) -> [f64; 3] {
    let u = geom::sub(t[1], t[0]);
    let v = geom::sub(t[2], t[0]);
    let n = geom::cross3(&u, &v);
    let len = geom::norm(&n);
    if len == 0.0 {
        [0.0, 0.0, 1.0]
    } else {
        [n[0] / len, n[1] / len, n[2] / len]
    }
}

fn coplanar_triangles_intersect(a: &[&[f64]], b: &[&[f64]], n: &[f64; 3]) -> bool {
    // project out the dominant normal axis
    let axis = (0..3).max_by(|&i, &j| n[i].abs().partial_cmp(&n[j].abs()).unwrap()).unwrap();
    let (u, v) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let pa: Vec<[f64; 2]> = a.iter().map(|p| [p[u], p[v]]).collect();
    let pb: Vec<[f64; 2]> = b.iter().map(|p| [p[u], p[v]]).collect();
    for i in 0..3 {
        for j in 0..3 {
            if segments_cross(pa[i], pa[(i + 1) % 3], pb[j], pb[(j + 1) % 3]) {
                return true;
            }
        }
    }
    point_in_triangle_2d(pa[0], &pb) || point_in_triangle_2d(pb[0], &pa)
}

fn orient2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = orient2d(c, d, a);
    let d2 = orient2d(c, d, b);
    let d3 = orient2d(a, b, c);
    let d4 = orient2d(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn point_in_triangle_2d(p: [f64; 2], t: &[[f64; 2]]) -> bool {
    let d1 = orient2d(t[0], t[1], p);
    let d2 = orient2d(t[1], t[2], p);
    let d3 = orient2d(t[2], t[0], p);
    (d1 > 0.0 && d2 > 0.0 && d3 > 0.0) || (d1 < 0.0 && d2 < 0.0 && d3 < 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn minimal_fan_disk() {
        let m = generate_disk(1.0, 1).unwrap();
        assert_eq!(m.euler_characteristic(), 1);
        assert_eq!(m.boundary_loops().len(), 1);
        assert!(m.validate().pass);
    }

    #[test]
    fn disk_area_converges_to_pi() {
        let m = generate_disk(1.0, 32).unwrap();
        let area = m.total_area();
        assert!(
            (area - PI).abs() / PI < 0.005,
            "area {area} deviates from pi by more than 0.5%"
        );
        // quadratic scaling in the radius
        let m2 = generate_disk(2.0, 32).unwrap();
        assert_relative_eq!(m2.total_area(), 4.0 * area, max_relative = 1e-12);
    }

    #[test]
    fn disk_deficit_shrinks_second_order() {
        let d1 = PI - generate_disk(1.0, 8).unwrap().total_area();
        let d2 = PI - generate_disk(1.0, 16).unwrap().total_area();
        assert!(d1 > 0.0 && d2 > 0.0);
        assert!(d1 / d2 >= 3.0, "deficit ratio {} below second order", d1 / d2);
    }

    #[test]
    fn disk_rejects_bad_parameters() {
        assert!(generate_disk(-1.0, 8).is_err());
        assert!(generate_disk(1.0, 0).is_err());
    }

    #[test]
    fn annulus_topology_and_area() {
        let m = generate_annulus(0.5, 1.0, 32).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
        assert_eq!(m.boundary_loops().len(), 2);
        assert!(m.validate().pass);
        let expect = PI * (1.0 - 0.25);
        assert!((m.total_area() - expect).abs() / expect < 0.005);
    }

    #[test]
    fn annulus_boundary_lengths() {
        let m = generate_annulus(0.9, 1.0, 64).unwrap();
        let mut lengths: Vec<f64> = m
            .boundary_loops()
            .iter()
            .map(|l| {
                (0..l.len())
                    .map(|i| geom::dist(m.vertex(l[i]), m.vertex(l[(i + 1) % l.len()])))
                    .sum()
            })
            .collect();
        lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((lengths[0] - 2.0 * PI * 0.9).abs() / (2.0 * PI * 0.9) < 0.005);
        assert!((lengths[1] - 2.0 * PI).abs() / (2.0 * PI) < 0.005);
    }

    #[test]
    fn annulus_rejects_inverted_radii() {
        assert!(generate_annulus(1.0, 0.5, 16).is_err());
        assert!(generate_annulus(0.0, 1.0, 16).is_err());
    }

    #[test]
    fn flat_ribbon_is_annulus() {
        let m = generate_ribbon(&RibbonSpec::circle(1.0, 0.05, 0)).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
        assert_eq!(m.boundary_loops().len(), 2);
        assert!(m.validate().pass);
        let expect = 2.0 * PI * 0.05;
        assert!(
            (m.total_area() - expect).abs() / expect < 0.02,
            "ribbon area {} vs {}",
            m.total_area(),
            expect
        );
    }

    #[test]
    fn moebius_ribbon_has_one_boundary_loop() {
        let m = generate_ribbon(&RibbonSpec::circle(1.0, 0.05, 1)).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
        assert_eq!(m.boundary_loops().len(), 1);
        assert!(m.validate().pass);
    }

    #[test]
    fn wide_ribbon_violates_curvature_constraint() {
        let err = generate_ribbon(&RibbonSpec::circle(1.0, 1.5, 0));
        assert!(matches!(err, Err(Error::ConstraintViolation(_))));
    }

    #[test]
    fn pinched_skeleton_fails_embedding() {
        // open hairpin whose two passes come closer than the width
        let mut skeleton = Vec::new();
        for i in 0..=20 {
            skeleton.push([i as f64 / 10.0, 0.0, 0.0]);
        }
        for i in (0..=20).rev() {
            skeleton.push([i as f64 / 10.0 + 0.05, 0.08, 3.0 * ((i as f64) / 20.0 - 0.5).powi(2)]);
        }
        let spec = RibbonSpec {
            skeleton,
            closed: false,
            width: 0.5,
            half_twists: 0,
            resolution_along: 64,
            resolution_across: 3,
        };
        match generate_ribbon(&spec) {
            Err(Error::EmbeddingFailure(_)) | Err(Error::ConstraintViolation(_)) => {}
            other => panic!("expected embedding or constraint failure, got {other:?}"),
        }
    }

    #[test]
    fn cap_chart_covers_most_of_sphere() {
        let m = generate_cap_chart(10.0, 32).unwrap();
        assert_eq!(m.euler_characteristic(), 1);
        assert_eq!(m.boundary_loops().len(), 1);
        assert!(m.validate().pass);
    }

    #[test]
    fn graded_disk_reaches_the_tip() {
        let m = generate_tip_graded_disk(1e-4, 16).unwrap();
        assert_eq!(m.euler_characteristic(), 1);
        assert_eq!(m.boundary_loops().len(), 1);
        assert!(m.validate().pass, "{:?}", m.validate());
        // vertices graded down to ~tip_radius/2 around (1, 0)
        let tip = [1.0, 0.0];
        let close = (0..m.vertex_count())
            .filter(|&v| geom::dist(m.vertex(v), &tip) < 1e-4)
            .count();
        assert!(close >= 8, "only {close} vertices near the tip");
        // and the mesh is still the unit disk
        assert!((m.total_area() - PI).abs() / PI < 0.01);
    }
}
