//! Conformal metrics `g~ = h g` on meshes.
//!
//! The base metric is a set of per-edge lengths (usually pulled back
//! from an immersion); the conformal factor is a positive per-vertex
//! function. In two dimensions the volume element of `h g` is `h dA`,
//! and boundary lengths scale by `sqrt(h)`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geom;
use crate::mesh::Mesh;
use crate::moebius::Immersion;

#[derive(Debug, Clone)]
pub struct ConformalMetric {
    /// Base edge lengths, parallel to `mesh.edges()`.
    base_edge_lengths: Vec<f64>,
    /// Per-vertex conformal factor h > 0.
    factor: Vec<f64>,
}

impl ConformalMetric {
    pub fn new(mesh: &Mesh, base_edge_lengths: Vec<f64>, factor: Vec<f64>) -> Result<ConformalMetric> {
        if base_edge_lengths.len() != mesh.edges().len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} edge lengths, got {}",
                mesh.edges().len(),
                base_edge_lengths.len()
            )));
        }
        if factor.len() != mesh.vertex_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} factor values, got {}",
                mesh.vertex_count(),
                factor.len()
            )));
        }
        if let Some(h) = factor.iter().find(|&&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::DegenerateMetric(format!(
                "conformal factor must be positive and finite, found {h}"
            )));
        }
        let metric = ConformalMetric {
            base_edge_lengths,
            factor,
        };
        metric.check_triangle_inequality(mesh)?;
        Ok(metric)
    }

    /// Base metric of the identity immersion (edge lengths from the
    /// mesh coordinates), factor 1.
    pub fn flat(mesh: &Mesh) -> ConformalMetric {
        let lengths = (0..mesh.edges().len()).map(|e| mesh.edge_length(e)).collect();
        ConformalMetric {
            base_edge_lengths: lengths,
            factor: vec![1.0; mesh.vertex_count()],
        }
    }

    pub fn base_edge_lengths(&self) -> &[f64] {
        &self.base_edge_lengths
    }

    pub fn factor(&self) -> &[f64] {
        &self.factor
    }

    /// Same base metric, new conformal factor.
    pub fn with_factor(&self, mesh: &Mesh, factor: Vec<f64>) -> Result<ConformalMetric> {
        ConformalMetric::new(mesh, self.base_edge_lengths.clone(), factor)
    }

    /// Multiply the factor pointwise.
    pub fn scaled_by(&self, mesh: &Mesh, extra: &[f64]) -> Result<ConformalMetric> {
        let factor = self
            .factor
            .iter()
            .zip(extra)
            .map(|(a, b)| a * b)
            .collect();
        ConformalMetric::new(mesh, self.base_edge_lengths.clone(), factor)
    }

    fn check_triangle_inequality(&self, mesh: &Mesh) -> Result<()> {
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let l = self.triangle_base_lengths(mesh, tri);
            if !geom::triangle_inequality_ok(l[0], l[1], l[2]) {
                return Err(Error::DegenerateMetric(format!(
                    "base edge lengths {l:?} of triangle {t} violate the strict triangle inequality"
                )));
            }
        }
        Ok(())
    }

    pub fn triangle_base_lengths(&self, mesh: &Mesh, tri: &[usize; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for k in 0..3 {
            let e = mesh
                .edge_id(tri[k], tri[(k + 1) % 3])
                .expect("triangle edge must exist");
            out[k] = self.base_edge_lengths[e];
        }
        out
    }

    pub fn triangle_base_area(&self, mesh: &Mesh, tri: &[usize; 3]) -> f64 {
        let l = self.triangle_base_lengths(mesh, tri);
        geom::heron_area(l[0], l[1], l[2])
    }
}

/// Positive density on the boundary, stored per boundary vertex in the
/// order of `mesh.boundary_vertices()`.
#[derive(Debug, Clone)]
pub struct BoundaryDensity {
    values: Vec<f64>,
}

impl BoundaryDensity {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<BoundaryDensity> {
        if values.len() != mesh.boundary_vertices().len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} boundary density values, got {}",
                mesh.boundary_vertices().len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "boundary density must be positive, found {v}"
            )));
        }
        Ok(BoundaryDensity { values })
    }

    pub fn uniform(mesh: &Mesh, value: f64) -> Result<BoundaryDensity> {
        BoundaryDensity::new(mesh, vec![value; mesh.boundary_vertices().len()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Density at a boundary vertex (mesh index).
    pub fn at(&self, mesh: &Mesh, vertex: usize) -> Option<f64> {
        let bv = mesh.boundary_vertices();
        bv.binary_search(&vertex).ok().map(|i| self.values[i])
    }
}

/// Pull the Euclidean metric back through an immersion: base edge
/// lengths become the distances of the immersed endpoints, factor 1.
pub fn pullback(immersion: &Immersion, mesh: &Mesh) -> Result<ConformalMetric> {
    if immersion.vertex_count() != mesh.vertex_count() {
        return Err(Error::InvalidParameter(format!(
            "immersion has {} vertices, mesh has {}",
            immersion.vertex_count(),
            mesh.vertex_count()
        )));
    }
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = geom::triangle_area(
            immersion.point(tri[0]),
            immersion.point(tri[1]),
            immersion.point(tri[2]),
        );
        if area <= 0.0 {
            return Err(Error::DegenerateMetric(format!(
                "immersion maps triangle {t} to a degenerate image"
            )));
        }
    }
    let lengths = mesh
        .edges()
        .iter()
        .map(|&(a, b)| geom::dist(immersion.point(a), immersion.point(b)))
        .collect();
    ConformalMetric::new(mesh, lengths, vec![1.0; mesh.vertex_count()])
}

/// Conformal factor of the round metric in the stereographic chart:
/// `4 / (1 + |x|^2)^2`.
pub fn sphere_factor(x: &[f64]) -> f64 {
    let r2 = geom::norm_sq(x);
    4.0 / ((1.0 + r2) * (1.0 + r2))
}

/// Area of `(mesh, h g)`: per triangle, the base area times the mean of
/// the three vertex factors (exact for affine h, and matching the
/// consistent FEM mass exactly).
pub fn area(mesh: &Mesh, metric: &ConformalMetric) -> f64 {
    let h = metric.factor();
    mesh.triangles()
        .iter()
        .map(|tri| {
            let base = metric.triangle_base_area(mesh, tri);
            base * (h[tri[0]] + h[tri[1]] + h[tri[2]]) / 3.0
        })
        .sum()
}

/// Total boundary mass `int_{dM} rho dv_{g~}`: per boundary edge, the
/// base length times `sqrt((h_a + h_b)/2)` times the mean density.
pub fn boundary_mass(mesh: &Mesh, metric: &ConformalMetric, rho: &BoundaryDensity) -> f64 {
    let h = metric.factor();
    let mut total = 0.0;
    for (e, &(a, b)) in mesh.edges().iter().enumerate() {
        if !mesh.is_boundary_edge(e) {
            continue;
        }
        let len = metric.base_edge_lengths()[e];
        let h_edge = 0.5 * (h[a] + h[b]);
        let rho_edge = 0.5
            * (rho.at(mesh, a).expect("density on boundary vertex")
                + rho.at(mesh, b).expect("density on boundary vertex"));
        total += len * h_edge.sqrt() * rho_edge;
    }
    total
}

/// Write a per-vertex column to the CSV sidecar format
/// `vertex_index,value`.
pub fn write_vertex_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut out = String::from("vertex_index,value\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a per-vertex column from the CSV sidecar format. Missing
/// indices default to `fill`; rows must stay within `len`.
pub fn read_vertex_csv(path: &Path, len: usize, fill: f64) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    let mut values = vec![fill; len];
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("vertex_index") {
            continue;
        }
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("line {} is not `index,value`", ln + 1)))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad index {idx:?} on line {}", ln + 1)))?;
        let val: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad value {val:?} on line {}", ln + 1)))?;
        if idx >= len {
            return Err(Error::Format(format!(
                "vertex index {idx} out of range {len}"
            )));
        }
        values[idx] = val;
    }
    Ok(values)
}

/// Smooth positive random factor for sweep experiments: a low-order
/// trigonometric polynomial of the coordinates, rescaled into
/// `[lo, hi]`. Deterministic in the seed.
pub fn random_smooth_factor(mesh: &Mesh, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n_modes = 4;
    let dim = mesh.dim();
    let modes: Vec<(Vec<f64>, f64, f64)> = (0..n_modes)
        .map(|_| {
            let k: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let amp = rng.gen_range(0.2..1.0);
            (k, phase, amp)
        })
        .collect();
    let raw: Vec<f64> = (0..mesh.vertex_count())
        .map(|v| {
            let p = mesh.vertex(v);
            modes
                .iter()
                .map(|(k, phase, amp)| amp * (geom::dot(k, p) + phase).sin())
                .sum::<f64>()
        })
        .collect();
    let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (max - min).max(1e-12);
    raw.iter()
        .map(|&x| lo + (hi - lo) * (x - min) / span)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_disk, generate_ribbon, RibbonSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn sphere_factor_values() {
        assert_relative_eq!(sphere_factor(&[0.0, 0.0]), 4.0);
        assert_relative_eq!(sphere_factor(&[1.0, 0.0]), 1.0);
        assert_relative_eq!(sphere_factor(&[0.0, 3.0]), 0.04);
    }

    #[test]
    fn identity_pullback_matches_coordinates() {
        let mesh = generate_disk(1.0, 8).unwrap();
        let im = Immersion::from_mesh(&mesh);
        let metric = pullback(&im, &mesh).unwrap();
        for (e, &(a, b)) in mesh.edges().iter().enumerate() {
            assert_relative_eq!(
                metric.base_edge_lengths()[e],
                geom::dist(mesh.vertex(a), mesh.vertex(b)),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn scaled_immersion_scales_area_by_four() {
        let mesh = generate_disk(1.0, 8).unwrap();
        let im = Immersion::from_mesh(&mesh).scaled(2.0);
        let metric = pullback(&im, &mesh).unwrap();
        let base = area(&mesh, &ConformalMetric::flat(&mesh));
        assert_relative_eq!(area(&mesh, &metric), 4.0 * base, max_relative = 1e-12);
    }

    #[test]
    fn ribbon_pullback_area_matches_mesh_area() {
        let mesh = generate_ribbon(&RibbonSpec::circle(1.0, 0.05, 0)).unwrap();
        let metric = pullback(&Immersion::from_mesh(&mesh), &mesh).unwrap();
        assert_relative_eq!(area(&mesh, &metric), mesh.total_area(), epsilon = 1e-12);
    }

    #[test]
    fn hemisphere_area_from_sphere_factor() {
        // int_0^1 4/(1+r^2)^2 2 pi r dr = 2 pi
        let mesh = generate_disk(1.0, 64).unwrap();
        let factor: Vec<f64> = (0..mesh.vertex_count())
            .map(|v| sphere_factor(mesh.vertex(v)))
            .collect();
        let metric = ConformalMetric::flat(&mesh).with_factor(&mesh, factor).unwrap();
        let a = area(&mesh, &metric);
        assert!((a - 2.0 * PI).abs() / (2.0 * PI) < 0.002, "area {a}");
    }

    #[test]
    fn constant_factor_scales_area_exactly() {
        let mesh = generate_disk(1.0, 6).unwrap();
        let flat = ConformalMetric::flat(&mesh);
        let scaled = flat
            .with_factor(&mesh, vec![2.5; mesh.vertex_count()])
            .unwrap();
        assert_relative_eq!(
            area(&mesh, &scaled),
            2.5 * area(&mesh, &flat),
            max_relative = 1e-15
        );
    }

    #[test]
    fn boundary_mass_conventions() {
        let mesh = generate_disk(1.0, 32).unwrap();
        let flat = ConformalMetric::flat(&mesh);
        let rho1 = BoundaryDensity::uniform(&mesh, 1.0).unwrap();
        let m1 = boundary_mass(&mesh, &flat, &rho1);
        assert!((m1 - 2.0 * PI).abs() / (2.0 * PI) < 0.002, "perimeter {m1}");

        // linear in rho
        let rho3 = BoundaryDensity::uniform(&mesh, 3.0).unwrap();
        assert_relative_eq!(boundary_mass(&mesh, &flat, &rho3), 3.0 * m1, max_relative = 1e-14);

        // lengths scale by sqrt(h)
        let h4 = flat.with_factor(&mesh, vec![4.0; mesh.vertex_count()]).unwrap();
        assert_relative_eq!(boundary_mass(&mesh, &h4, &rho1), 2.0 * m1, max_relative = 1e-14);
    }

    #[test]
    fn nonpositive_factor_rejected() {
        let mesh = generate_disk(1.0, 3).unwrap();
        let mut factor = vec![1.0; mesh.vertex_count()];
        factor[0] = 0.0;
        assert!(matches!(
            ConformalMetric::flat(&mesh).with_factor(&mesh, factor),
            Err(Error::DegenerateMetric(_))
        ));
    }

    #[test]
    fn degenerate_immersion_rejected() {
        let mesh = generate_disk(1.0, 3).unwrap();
        // collapse everything to a point
        let im = Immersion::new(2, vec![0.0; mesh.vertex_count() * 2]).unwrap();
        assert!(matches!(pullback(&im, &mesh), Err(Error::DegenerateMetric(_))));
    }

    #[test]
    fn vertex_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("factor.csv");
        let values = vec![1.0, 2.5, 0.125];
        write_vertex_csv(&path, &values).unwrap();
        let back = read_vertex_csv(&path, 3, 1.0).unwrap();
        assert_eq!(values, back);
    }

    #[test]
    fn random_factor_stays_in_range_and_is_deterministic() {
        let mesh = generate_disk(1.0, 6).unwrap();
        let f1 = random_smooth_factor(&mesh, 0.5, 2.0, 7);
        let f2 = random_smooth_factor(&mesh, 0.5, 2.0, 7);
        assert_eq!(f1, f2);
        assert!(f1.iter().all(|&x| (0.5..=2.0).contains(&x)));
    }
}
