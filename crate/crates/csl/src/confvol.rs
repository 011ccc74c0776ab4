//! Conformal eigenvalue bounds and conformal-volume witnesses.
//!
//! The Neumann report instantiates, at n = 2, the chain
//! `lambda_1 Vol <= 2 Vol(gamma* . phi(M)) <= 8 pi`, where `gamma*` is
//! the volume-balanced Moebius element; the Steklov report does the
//! same for `sigma_1 M(dM) <= 2 Area(gamma* . phi(M)) <= 8 pi` with a
//! ball immersion whose boundary sits on the sphere and the
//! rho-balanced element. All witnesses are numerical: searches and
//! balanced elements give one-sided evidence, never exact invariants.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geom;
use crate::mesh::Mesh;
use crate::metric::{area, boundary_mass, BoundaryDensity, ConformalMetric};
use crate::moebius::{
    hersch_balance, reduced_witness, sphere_image_area, Immersion, MoebiusElement,
};
use crate::spectral::{
    assemble, neumann_spectrum, steklov_spectrum, Problem, SolverOptions,
};

const RIGHT_GLOBAL: f64 = 8.0 * std::f64::consts::PI; // n omega_n^{2/n} at n = 2

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub problem: Problem,
    /// lambda_1 or sigma_1.
    pub eigenvalue: f64,
    /// area(M, hg) or the boundary mass, whichever the product uses.
    pub volume_term: f64,
    pub left_hand: f64,
    pub right_lemma: f64,
    pub right_global: f64,
    /// right - left; negative margins are recorded, not silenced.
    pub margin_lemma: f64,
    pub margin_global: f64,
    pub witness: MoebiusElement,
    pub balance_residual: f64,
    pub balance_iterations: usize,
    /// Max per-triangle deviation of the immersion pullback from a
    /// multiple of the base metric.
    pub conformality_deviation: f64,
    /// Set when the deviation exceeds 2%; the report is still produced.
    pub conformality_warning: bool,
    pub conformal_class_fingerprint: String,
}

impl BoundReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Fingerprint of the conformal class: mesh identity plus the factor
/// normalized by its geometric mean (class members share it up to
/// constant scaling).
pub fn conformal_class_fingerprint(mesh: &Mesh, metric: &ConformalMetric) -> String {
    let h = metric.factor();
    let log_mean = h.iter().map(|x| x.ln()).sum::<f64>() / h.len() as f64;
    let mut hasher = Sha256::new();
    hasher.update(mesh.fingerprint().as_bytes());
    for x in h {
        // quantized ln(h) - mean(ln h): invariant under h -> c h
        // (coarse quantum so float noise in ln cannot flip a bin)
        let q = ((x.ln() - log_mean) * 1e8).round() as i64;
        hasher.update(q.to_le_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Max over triangles of the spread of edge-length ratios between the
/// immersed triangle and the base-metric triangle. Zero for an exactly
/// conformal (similarity on each triangle) immersion.
pub fn conformality_deviation(
    phi: &Immersion,
    mesh: &Mesh,
    metric: &ConformalMetric,
) -> Result<f64> {
    if phi.vertex_count() != mesh.vertex_count() {
        return Err(Error::InvalidParameter(
            "immersion and mesh vertex counts differ".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    for tri in mesh.triangles() {
        let base = metric.triangle_base_lengths(mesh, tri);
        let mut ratios = [0.0; 3];
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            ratios[k] = geom::dist(phi.point(a), phi.point(b)) / base[k];
        }
        let mean = (ratios[0] + ratios[1] + ratios[2]) / 3.0;
        for r in ratios {
            worst = worst.max((r - mean).abs() / mean);
        }
    }
    Ok(worst)
}

/// Neumann bound report: `lambda_1(hg) area(hg) <= 2 Vol(gamma* phi)`
/// with the volume-balanced `gamma*`, and the global bound `8 pi`.
pub fn neumann_bound_report(
    mesh: &Mesh,
    metric: &ConformalMetric,
    phi: &Immersion,
    opts: &SolverOptions,
) -> Result<BoundReport> {
    let deviation = conformality_deviation(phi, mesh, metric)?;
    let rho = BoundaryDensity::uniform(mesh, 1.0)?;
    let sys = assemble(mesh, metric, &rho)?;
    let spectrum = neumann_spectrum(&sys, 1, opts)?;
    let lambda_1 = spectrum.eigenvalues[1];
    let vol = area(mesh, metric);

    // volume measure of hg: lumped rows of the interior mass matrix
    let ones = vec![1.0; sys.dof()];
    let weights = sys.interior_mass().matvec_alloc(&ones);

    let lifted = phi.to_sphere();
    let (balance, balanced) = hersch_balance(&lifted, &weights, 1e-8, 200)?;
    let image_volume = sphere_image_area(&balanced, mesh)?;

    let xi: Vec<f64> = balance
        .dilation_center
        .iter()
        .map(|p| p * balance.dilation_parameter)
        .collect();
    let witness = reduced_witness(&xi)?;

    let left = lambda_1 * vol;
    let right_lemma = 2.0 * image_volume;
    Ok(BoundReport {
        problem: Problem::Neumann,
        eigenvalue: lambda_1,
        volume_term: vol,
        left_hand: left,
        right_lemma,
        right_global: RIGHT_GLOBAL,
        margin_lemma: right_lemma - left,
        margin_global: RIGHT_GLOBAL - left,
        witness,
        balance_residual: balance.residual,
        balance_iterations: balance.iterations,
        conformality_deviation: deviation,
        conformality_warning: deviation > 0.02,
        conformal_class_fingerprint: conformal_class_fingerprint(mesh, metric),
    })
}

/// Steklov bound report with a ball immersion (boundary on the unit
/// sphere, checked to 1e-6): `sigma_1 M(dM) <= 2 Area(gamma* phi)` for
/// the rho-balanced `gamma*`, and the global bound `8 pi`.
pub fn steklov_bound_report(
    mesh: &Mesh,
    metric: &ConformalMetric,
    rho: &BoundaryDensity,
    ball_immersion: &Immersion,
    opts: &SolverOptions,
) -> Result<BoundReport> {
    if ball_immersion.vertex_count() != mesh.vertex_count() {
        return Err(Error::InvalidParameter(
            "immersion and mesh vertex counts differ".into(),
        ));
    }
    for i in 0..ball_immersion.vertex_count() {
        let r = geom::norm(ball_immersion.point(i));
        if r > 1.0 + 1e-6 {
            return Err(Error::InvalidImmersion(format!(
                "vertex {i} lies outside the closed unit ball (|p| = {r})"
            )));
        }
        if mesh.is_boundary_vertex(i) && (r - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidImmersion(format!(
                "boundary vertex {i} is not on the unit sphere (|p| = {r})"
            )));
        }
    }
    let deviation = conformality_deviation(ball_immersion, mesh, metric)?;

    let sys = assemble(mesh, metric, rho)?;
    let spectrum = steklov_spectrum(&sys, 1, opts)?;
    let sigma_1 = spectrum.eigenvalues[1];
    let mass = boundary_mass(mesh, metric, rho);

    // rho-measure on the boundary: lumped rows of the boundary mass
    let ones = vec![1.0; sys.dof()];
    let weights = sys.boundary_mass_matrix().matvec_alloc(&ones);

    let (balance, balanced) = hersch_balance(ball_immersion, &weights, 1e-8, 200)?;
    // Euclidean area of the transformed ball immersion
    let image_area: f64 = mesh
        .triangles()
        .iter()
        .map(|tri| {
            geom::triangle_area(
                balanced.point(tri[0]),
                balanced.point(tri[1]),
                balanced.point(tri[2]),
            )
        })
        .sum();

    let xi: Vec<f64> = balance
        .dilation_center
        .iter()
        .map(|p| p * balance.dilation_parameter)
        .collect();
    let witness = reduced_witness(&xi)?;

    let left = sigma_1 * mass;
    let right_lemma = 2.0 * image_area;
    Ok(BoundReport {
        problem: Problem::Steklov,
        eigenvalue: sigma_1,
        volume_term: mass,
        left_hand: left,
        right_lemma,
        right_global: RIGHT_GLOBAL,
        margin_lemma: right_lemma - left,
        margin_global: RIGHT_GLOBAL - left,
        witness,
        balance_residual: balance.residual,
        balance_iterations: balance.iterations,
        conformality_deviation: deviation,
        conformality_warning: deviation > 0.02,
        conformal_class_fingerprint: conformal_class_fingerprint(mesh, metric),
    })
}

/// Dirichlet energy of the immersion coordinates under the conformally
/// invariant stiffness, and its deviation from twice the Euclidean
/// image area (they agree exactly for conformal maps in 2-D).
pub fn conformal_energy(
    phi: &Immersion,
    mesh: &Mesh,
    metric: &ConformalMetric,
) -> Result<(f64, f64)> {
    if phi.vertex_count() != mesh.vertex_count() {
        return Err(Error::InvalidParameter(
            "immersion and mesh vertex counts differ".into(),
        ));
    }
    let rho = BoundaryDensity::uniform(mesh, 1.0)?;
    let sys = assemble(mesh, metric, &rho)?;
    let n = mesh.vertex_count();
    let mut energy = 0.0;
    for d in 0..phi.dim() {
        let coord: Vec<f64> = (0..n).map(|i| phi.point(i)[d]).collect();
        energy += sys.stiffness().quadratic_form(&coord);
    }
    let image_area: f64 = mesh
        .triangles()
        .iter()
        .map(|tri| geom::triangle_area(phi.point(tri[0]), phi.point(tri[1]), phi.point(tri[2])))
        .sum();
    let deviation = (energy - 2.0 * image_area).abs() / energy.max(f64::MIN_POSITIVE);
    Ok((energy, deviation))
}

/// One-sided numerical witnesses aggregated from bound reports and
/// sup-volume searches.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessTable {
    /// lambda_1 * area products (lower witnesses for the 8 pi family).
    pub spectral_products: Vec<f64>,
    pub max_spectral_product: Option<f64>,
    /// Observed image volumes: balanced-immersion volumes from reports
    /// and best search volumes (lower witnesses for the 4 pi family).
    pub image_volumes: Vec<f64>,
    pub max_image_volume: Option<f64>,
    pub note: String,
}

pub fn witness_summary(reports: &[BoundReport], search_volumes: &[f64]) -> WitnessTable {
    let spectral_products: Vec<f64> = reports
        .iter()
        .filter(|r| r.problem == Problem::Neumann)
        .map(|r| r.left_hand)
        .collect();
    let mut image_volumes: Vec<f64> = reports.iter().map(|r| r.right_lemma / 2.0).collect();
    image_volumes.extend_from_slice(search_volumes);
    WitnessTable {
        max_spectral_product: spectral_products.iter().cloned().reduce(f64::max),
        max_image_volume: image_volumes.iter().cloned().reduce(f64::max),
        spectral_products,
        image_volumes,
        note: "one-sided numerical witnesses: image volumes observe the 4 pi supremum \
               from below, spectral products observe the 8 pi supremum from below"
            .to_string(),
    }
}

/// CSV for factor sweeps: `h_id,left,right_lemma,right_global,margin`.
pub fn bound_sweep_csv(rows: &[(String, BoundReport)]) -> String {
    let mut out = String::from("h_id,left,right_lemma,right_global,margin\n");
    for (id, r) in rows {
        out.push_str(&format!(
            "{id},{},{},{},{}\n",
            r.left_hand, r.right_lemma, r.right_global, r.margin_lemma
        ));
    }
    out
}
