//! Conformal cylinder deformation at a boundary point.
//!
//! The radial factor turns the flat half-ball of radius `eps` around a
//! boundary vertex into a half-cylinder of length `L` capped by a
//! sphere piece; the metric is multiplied by the factor squared, so the
//! area grows by `pi eps L` while the first Dirichlet eigenvalue keeps
//! a positive lower bound. Sweeping `L` therefore drives the product
//! `lambda_1^D * area` to infinity inside one conformal class, while
//! the Neumann product stays below `8 pi`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom;
use crate::mesh::Mesh;
use crate::metric::{area, BoundaryDensity, ConformalMetric};
use crate::spectral::{
    assemble, dirichlet_spectrum, neumann_spectrum, SolverOptions,
};

#[derive(Debug, Clone, Serialize)]
pub struct CylinderDeformation {
    /// Boundary vertex at the center of the deformed half-ball.
    pub center: usize,
    /// Half-ball radius; the flat region must extend this far.
    pub epsilon: f64,
    /// Cylinder length; 0 leaves the metric untouched.
    pub length: f64,
}

/// The three-branch radial factor: `eps/r` on the cylinder annulus
/// `eps e^{-L/eps} <= r <= eps`, the constant `e^{L/eps}` inside, and 1
/// outside the ball. Continuous at both break radii, monotone
/// non-increasing in r.
pub fn cylinder_factor(r: f64, d: &CylinderDeformation) -> f64 {
    let inner = d.epsilon * (-d.length / d.epsilon).exp();
    if r >= d.epsilon {
        1.0
    } else if r >= inner {
        d.epsilon / r
    } else {
        (d.length / d.epsilon).exp()
    }
}

/// Number of vertices the tip region must resolve.
const MIN_TIP_VERTICES: usize = 8;

/// Multiply the metric by `h_eps(dist)^2`. The distance is Euclidean in
/// the base flat chart, which the preconditions guarantee is valid
/// inside the ball.
pub fn apply_cylinder(
    mesh: &Mesh,
    metric: &ConformalMetric,
    d: &CylinderDeformation,
) -> Result<ConformalMetric> {
    if !(d.epsilon > 0.0) || d.length < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "cylinder deformation needs eps > 0 and L >= 0, got eps = {}, L = {}",
            d.epsilon, d.length
        )));
    }
    if d.center >= mesh.vertex_count() || !mesh.is_boundary_vertex(d.center) {
        return Err(Error::InvalidParameter(format!(
            "deformation center {} is not a boundary vertex",
            d.center
        )));
    }
    let center = mesh.vertex(d.center).to_vec();

    // flatness: inside the ball, base edge lengths must agree with the
    // chart distances
    for tri in mesh.triangles() {
        let near = tri
            .iter()
            .any(|&v| geom::dist(mesh.vertex(v), &center) < d.epsilon);
        if !near {
            continue;
        }
        let base = metric.triangle_base_lengths(mesh, tri);
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let chart = geom::dist(mesh.vertex(a), mesh.vertex(b));
            if (chart - base[k]).abs() > 1e-8 * base[k] {
                return Err(Error::ConstraintViolation(format!(
                    "base metric is not flat near the deformation center: \
                     edge ({a}, {b}) has base length {} vs chart length {chart}",
                    base[k]
                )));
            }
        }
    }

    let tip_radius = d.epsilon * (-d.length / d.epsilon).exp();
    let inside = (0..mesh.vertex_count())
        .filter(|&v| geom::dist(mesh.vertex(v), &center) < tip_radius)
        .count();
    if inside < MIN_TIP_VERTICES {
        return Err(Error::RefinementNeeded {
            reason: format!(
                "only {inside} vertices inside the tip radius {tip_radius:.3e} \
                 (need {MIN_TIP_VERTICES})"
            ),
            required_edge_length: tip_radius / 4.0,
        });
    }

    let extra: Vec<f64> = (0..mesh.vertex_count())
        .map(|v| {
            let h = cylinder_factor(geom::dist(mesh.vertex(v), &center), d);
            h * h
        })
        .collect();
    metric.scaled_by(mesh, &extra)
}

/// Deterministic pick of the deformation center: among the boundary
/// vertices whose shortest incident edge is within 4x of the global
/// minimum (the most refined spot of a graded mesh), take the one of
/// highest degree — the fan center of the graded zone. Ties go to the
/// lowest index.
pub fn pick_tip_vertex(mesh: &Mesh) -> usize {
    let boundary = mesh.boundary_vertices();
    let lens: Vec<f64> = boundary
        .iter()
        .map(|&v| mesh.min_incident_edge_length(v))
        .collect();
    let min_len = lens.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut degree = vec![0usize; mesh.vertex_count()];
    for &(a, b) in mesh.edges() {
        degree[a] += 1;
        degree[b] += 1;
    }
    boundary
        .iter()
        .zip(&lens)
        .filter(|(_, &len)| len <= 4.0 * min_len)
        .max_by_key(|(&v, _)| (degree[v], usize::MAX - v))
        .map(|(&v, _)| v)
        .expect("mesh has boundary vertices")
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupRow {
    pub length: f64,
    pub lambda_dirichlet: f64,
    pub lambda_neumann: f64,
    pub area: f64,
    pub product_dirichlet: f64,
    pub product_neumann: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupTable {
    pub epsilon: f64,
    pub center: usize,
    pub rows: Vec<BlowupRow>,
}

impl BlowupTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("L,lambda_D,lambda_N,area,prod_D,prod_N\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.length,
                r.lambda_dirichlet,
                r.lambda_neumann,
                r.area,
                r.product_dirichlet,
                r.product_neumann
            ));
        }
        out
    }
}

/// Sweep the cylinder length over an increasing schedule and record
/// both spectral products.
pub fn blowup_experiment(
    mesh: &Mesh,
    base: &ConformalMetric,
    epsilon: f64,
    lengths: &[f64],
    opts: &SolverOptions,
) -> Result<BlowupTable> {
    if lengths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "length schedule must be strictly increasing".into(),
        ));
    }
    let center = pick_tip_vertex(mesh);
    let rho = BoundaryDensity::uniform(mesh, 1.0)?;
    let mut rows = Vec::with_capacity(lengths.len());
    for &length in lengths {
        let d = CylinderDeformation {
            center,
            epsilon,
            length,
        };
        let metric = apply_cylinder(mesh, base, &d)?;
        let sys = assemble(mesh, &metric, &rho)?;
        let dirichlet = dirichlet_spectrum(&sys, 1, opts)?;
        let neumann = neumann_spectrum(&sys, 1, opts)?;
        let a = area(mesh, &metric);
        let ld = dirichlet.eigenvalues[0];
        let ln = neumann.eigenvalues[1];
        rows.push(BlowupRow {
            length,
            lambda_dirichlet: ld,
            lambda_neumann: ln,
            area: a,
            product_dirichlet: ld * a,
            product_neumann: ln * a,
        });
    }
    Ok(BlowupTable {
        epsilon,
        center,
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    pub tau: f64,
    pub lambda_base: f64,
    pub lambda_deformed: f64,
    pub ratio: f64,
    /// The general comparison window `[tau^-(3n-1), tau^(3n-1)]` at
    /// n = 2.
    pub paper_window: (f64, f64),
    /// The sharper 2-D conformal window `[tau^-1, tau]`.
    pub sharp_window: (f64, f64),
    pub within_paper_window: bool,
    pub within_sharp_window: bool,
}

/// Compare `lambda_1(hg)` against `lambda_1(g)` for a factor pinched in
/// `[1/tau, tau]`: in two dimensions the Rayleigh quotient confines the
/// ratio to `[1/tau, tau]`, well inside the general `tau^{+-5}` window.
pub fn lipschitz_comparison_check(
    mesh: &Mesh,
    metric: &ConformalMetric,
    factor: &[f64],
    tau: f64,
    opts: &SolverOptions,
) -> Result<LipschitzReport> {
    if tau < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "tau must be at least 1, got {tau}"
        )));
    }
    if factor.len() != mesh.vertex_count() {
        return Err(Error::InvalidParameter(format!(
            "expected {} factor values, got {}",
            mesh.vertex_count(),
            factor.len()
        )));
    }
    let slack = 1.0 + 1e-12;
    if factor
        .iter()
        .any(|&h| h < 1.0 / (tau * slack) || h > tau * slack)
    {
        return Err(Error::InvalidParameter(format!(
            "factor leaves the window [1/{tau}, {tau}]"
        )));
    }
    let rho = BoundaryDensity::uniform(mesh, 1.0)?;
    let base_sys = assemble(mesh, metric, &rho)?;
    let deformed = metric.scaled_by(mesh, factor)?;
    let def_sys = assemble(mesh, &deformed, &rho)?;
    let lambda_base = neumann_spectrum(&base_sys, 1, opts)?.eigenvalues[1];
    let lambda_def = neumann_spectrum(&def_sys, 1, opts)?.eigenvalues[1];
    let ratio = lambda_def / lambda_base;
    let paper = (tau.powi(-5), tau.powi(5));
    let sharp = (1.0 / tau, tau);
    let tol = 1e-9;
    Ok(LipschitzReport {
        tau,
        lambda_base,
        lambda_deformed: lambda_def,
        ratio,
        paper_window: paper,
        sharp_window: sharp,
        within_paper_window: ratio >= paper.0 - tol && ratio <= paper.1 + tol,
        within_sharp_window: ratio >= sharp.0 - tol && ratio <= sharp.1 + tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_disk, generate_tip_graded_disk};
    use crate::metric::random_smooth_factor;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn graded(eps: f64, l_max: f64, res: usize) -> (Mesh, ConformalMetric) {
        let tip = eps * (-l_max / eps).exp();
        let mesh = generate_tip_graded_disk(tip, res).unwrap();
        let metric = ConformalMetric::flat(&mesh);
        (mesh, metric)
    }

    #[test]
    fn factor_branch_values() {
        let d = CylinderDeformation {
            center: 0,
            epsilon: 0.2,
            length: 1.0,
        };
        assert_relative_eq!(cylinder_factor(0.2, &d), 1.0);
        assert_relative_eq!(cylinder_factor(0.5, &d), 1.0);
        // continuity at both break radii
        let inner = 0.2 * (-5.0_f64).exp();
        assert_relative_eq!(
            cylinder_factor(inner * (1.0 + 1e-12), &d),
            (5.0_f64).exp(),
            max_relative = 1e-9
        );
        assert_relative_eq!(cylinder_factor(inner * 0.5, &d), (5.0_f64).exp());
        // monotone non-increasing
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let r = 1e-6 * 1.08_f64.powi(k);
            let h = cylinder_factor(r, &d);
            assert!(h <= prev);
            prev = h;
        }
        // L = 0 is the identity deformation
        let d0 = CylinderDeformation {
            center: 0,
            epsilon: 0.2,
            length: 0.0,
        };
        for r in [0.0, 0.1, 0.2, 0.7] {
            assert_eq!(cylinder_factor(r, &d0), 1.0);
        }
    }

    #[test]
    fn zero_length_leaves_metric_unchanged() {
        let (mesh, metric) = graded(0.2, 1.0, 12);
        let center = pick_tip_vertex(&mesh);
        let d = CylinderDeformation {
            center,
            epsilon: 0.2,
            length: 0.0,
        };
        let deformed = apply_cylinder(&mesh, &metric, &d).unwrap();
        assert_eq!(metric.factor(), deformed.factor());
    }

    #[test]
    fn tip_vertex_is_the_graded_corner() {
        let (mesh, _) = graded(0.2, 2.0, 12);
        let v = pick_tip_vertex(&mesh);
        let p = mesh.vertex(v);
        assert!(geom::dist(p, &[1.0, 0.0]) < 1e-12, "tip at {p:?}");
    }

    #[test]
    fn cylinder_area_increase_is_pi_eps_l() {
        let (mesh, metric) = graded(0.2, 2.0, 16);
        let center = pick_tip_vertex(&mesh);
        let base_area = area(&mesh, &metric);
        let mut increases = Vec::new();
        for length in [1.0, 2.0] {
            let d = CylinderDeformation {
                center,
                epsilon: 0.2,
                length,
            };
            let deformed = apply_cylinder(&mesh, &metric, &d).unwrap();
            let increase = area(&mesh, &deformed) - base_area;
            let expect = PI * 0.2 * length;
            assert!(
                (increase - expect).abs() / expect < 0.05,
                "L = {length}: area increase {increase} vs {expect}"
            );
            increases.push(increase);
        }
        // doubling L doubles the increase (the cap term is L-free)
        assert!((increases[1] / increases[0] - 2.0).abs() < 0.05);
    }

    #[test]
    fn underresolved_mesh_requests_refinement() {
        let mesh = generate_disk(1.0, 16).unwrap();
        let metric = ConformalMetric::flat(&mesh);
        let center = pick_tip_vertex(&mesh);
        let d = CylinderDeformation {
            center,
            epsilon: 0.2,
            length: 2.0, // tip radius 0.2 e^{-10}: far below the mesh size
        };
        match apply_cylinder(&mesh, &metric, &d) {
            Err(Error::RefinementNeeded {
                required_edge_length,
                ..
            }) => {
                assert!(required_edge_length < 1e-4);
            }
            other => panic!("expected refinement request, got {other:?}"),
        }
    }

    #[test]
    fn blowup_products_behave() {
        let (mesh, metric) = graded(0.2, 2.0, 16);
        let table = blowup_experiment(
            &mesh,
            &metric,
            0.2,
            &[0.0, 1.0, 2.0],
            &SolverOptions::default(),
        )
        .unwrap();
        // L = 0 row reproduces the flat disk: lambda_1^D ~ j_{0,1}^2
        let exact = crate::spectral::bessel_oracle::j01().powi(2);
        assert!(
            (table.rows[0].lambda_dirichlet - exact).abs() / exact < 0.02,
            "undeformed lambda_1^D = {}",
            table.rows[0].lambda_dirichlet
        );
        // Dirichlet eigenvalue keeps a positive lower bound; products grow
        let lambda0 = table.rows[0].lambda_dirichlet;
        for r in &table.rows {
            assert!(r.lambda_dirichlet >= 0.1 * lambda0);
            assert!(r.product_neumann < 8.0 * PI);
        }
        assert!(table.rows[2].product_dirichlet > table.rows[1].product_dirichlet);
        assert!(table.rows[1].product_dirichlet > table.rows[0].product_dirichlet);
        // area slope
        let slope = (table.rows[2].area - table.rows[1].area) / 1.0;
        assert!((slope - PI * 0.2).abs() / (PI * 0.2) < 0.05, "slope {slope}");
    }

    #[test]
    fn lipschitz_windows() {
        let mesh = generate_disk(1.0, 12).unwrap();
        let metric = ConformalMetric::flat(&mesh);
        // identity factor: ratio exactly 1
        let ones = vec![1.0; mesh.vertex_count()];
        let r = lipschitz_comparison_check(&mesh, &metric, &ones, 2.0, &SolverOptions::default())
            .unwrap();
        assert_relative_eq!(r.ratio, 1.0, epsilon = 1e-9);

        // constant tau: ratio exactly 1/tau
        let tau = 2.0;
        let taus = vec![tau; mesh.vertex_count()];
        let r = lipschitz_comparison_check(&mesh, &metric, &taus, tau, &SolverOptions::default())
            .unwrap();
        assert_relative_eq!(r.ratio, 1.0 / tau, max_relative = 1e-8);
        assert!(r.within_sharp_window && r.within_paper_window);

        // random factors stay in the sharp window
        for seed in 0..5 {
            let h = random_smooth_factor(&mesh, 0.5, 2.0, 100 + seed);
            let r = lipschitz_comparison_check(&mesh, &metric, &h, 2.0, &SolverOptions::default())
                .unwrap();
            assert!(r.within_sharp_window, "seed {seed}: ratio {}", r.ratio);
        }

        // precondition violations
        let bad = vec![3.0; mesh.vertex_count()];
        assert!(lipschitz_comparison_check(&mesh, &metric, &bad, 2.0, &SolverOptions::default())
            .is_err());
    }
}
