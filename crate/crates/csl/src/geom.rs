//! Small vector and triangle helpers shared by the mesh, metric and
//! Moebius modules. Points are plain `&[f64]` slices so the same code
//! serves charts in R^2, ribbons in R^3 and ball immersions in R^4.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn normalize(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}

/// Euclidean area of the triangle (p, q, r) in any ambient dimension,
/// via the Gram determinant of the edge vectors.
pub fn triangle_area(p: &[f64], q: &[f64], r: &[f64]) -> f64 {
    let u = sub(q, p);
    let v = sub(r, p);
    let g11 = norm_sq(&u);
    let g22 = norm_sq(&v);
    let g12 = dot(&u, &v);
    let det = g11 * g22 - g12 * g12;
    if det <= 0.0 {
        0.0
    } else {
        0.5 * det.sqrt()
    }
}

/// Heron's formula from edge lengths, in the numerically stable
/// Kahan ordering. Returns 0 for degenerate (non-triangle) inputs.
pub fn heron_area(a: f64, b: f64, c: f64) -> f64 {
    // sort so that x >= y >= z
    let mut s = [a, b, c];
    s.sort_by(|p, q| q.partial_cmp(p).unwrap());
    let [x, y, z] = s;
    let t = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z));
    if t <= 0.0 {
        0.0
    } else {
        0.25 * t.sqrt()
    }
}

/// True if the three lengths satisfy the strict triangle inequality.
pub fn triangle_inequality_ok(a: f64, b: f64, c: f64) -> bool {
    a > 0.0 && b > 0.0 && c > 0.0 && a + b > c && b + c > a && c + a > b
}

/// Area of the geodesic triangle on the unit sphere with the given
/// great-circle side lengths (L'Huilier's theorem). Valid in S^m for
/// any m: a geodesic triangle spans a totally geodesic 2-sphere.
pub fn spherical_triangle_area_from_sides(a: f64, b: f64, c: f64) -> f64 {
    let s = 0.5 * (a + b + c);
    let t = (0.5 * s).tan()
        * (0.5 * (s - a)).tan().max(0.0)
        * (0.5 * (s - b)).tan().max(0.0)
        * (0.5 * (s - c)).tan().max(0.0);
    if t <= 0.0 {
        0.0
    } else {
        4.0 * t.sqrt().atan()
    }
}

/// Great-circle distance between two unit vectors.
pub fn great_circle_distance(p: &[f64], q: &[f64]) -> f64 {
    // atan2 form stays accurate for both tiny and near-antipodal angles
    let d = sub(p, q);
    let m: Vec<f64> = p.iter().zip(q).map(|(x, y)| x + y).collect();
    2.0 * norm(&d).atan2(norm(&m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn triangle_area_matches_heron() {
        let p = [0.0, 0.0];
        let q = [3.0, 0.0];
        let r = [0.0, 4.0];
        let coords = triangle_area(&p, &q, &r);
        let heron = heron_area(3.0, 4.0, 5.0);
        assert_relative_eq!(coords, 6.0, max_relative = 1e-14);
        assert_relative_eq!(heron, 6.0, max_relative = 1e-14);
    }

    #[test]
    fn degenerate_triangle_has_zero_area() {
        assert_eq!(heron_area(1.0, 2.0, 3.0), 0.0);
        let p = [0.0, 0.0];
        let q = [1.0, 0.0];
        let r = [2.0, 0.0];
        assert_eq!(triangle_area(&p, &q, &r), 0.0);
    }

    #[test]
    fn octant_spherical_triangle() {
        // Three mutually orthogonal unit vectors bound one octant: area pi/2.
        let a = std::f64::consts::FRAC_PI_2;
        let area = spherical_triangle_area_from_sides(a, a, a);
        assert_relative_eq!(area, std::f64::consts::FRAC_PI_2, max_relative = 1e-12);
    }

    #[test]
    fn great_circle_distance_quarter_turn() {
        let p = [1.0, 0.0, 0.0];
        let q = [0.0, 1.0, 0.0];
        assert_relative_eq!(
            great_circle_distance(&p, &q),
            std::f64::consts::FRAC_PI_2,
            max_relative = 1e-12
        );
    }
}
