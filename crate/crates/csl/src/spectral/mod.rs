//! Linear finite elements for `(M, h g)` and the Neumann, Dirichlet,
//! Schroedinger-Neumann and Steklov eigenproblems.
//!
//! The stiffness matrix uses the cotangent formula evaluated from the
//! base edge lengths alone; in two dimensions the Dirichlet energy is
//! conformally invariant, so K never sees the factor h. The factor
//! enters through the consistent mass matrices: `dv_{hg} = h dA` in the
//! interior and `sqrt(h) rho ds` on the boundary.

mod eigen;
mod sparse;

pub use eigen::{dense_generalized, generalized_smallest, EigenPairs, SolverOptions};
pub use sparse::{rcm_ordering, BandedCholesky, SparseSolver, SymSparse};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{BoundaryDensity, ConformalMetric};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Neumann,
    Dirichlet,
    Steklov,
    Schroedinger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassMode {
    Consistent,
    Lumped,
}

/// Assembled FEM operators for one mesh + metric + boundary density.
pub struct FemSystem {
    stiffness: SymSparse,
    interior_mass: SymSparse,
    boundary_mass: SymSparse,
    boundary_vertices: Vec<usize>,
    interior_vertices: Vec<usize>,
    mesh_fingerprint: String,
    // retained for potential-term assembly
    triangles: Vec<[usize; 3]>,
    base_areas: Vec<f64>,
    factor: Vec<f64>,
    n: usize,
}

pub fn assemble(mesh: &Mesh, metric: &ConformalMetric, rho: &BoundaryDensity) -> Result<FemSystem> {
    assemble_with_mass_mode(mesh, metric, rho, MassMode::Consistent)
}

pub fn assemble_with_mass_mode(
    mesh: &Mesh,
    metric: &ConformalMetric,
    rho: &BoundaryDensity,
    mode: MassMode,
) -> Result<FemSystem> {
    let n = mesh.vertex_count();
    let h = metric.factor();

    let mut k_triplets = Vec::with_capacity(mesh.triangles().len() * 9);
    let mut base_areas = Vec::with_capacity(mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let l = metric.triangle_base_lengths(mesh, tri);
        let area = crate::geom::heron_area(l[0], l[1], l[2]);
        if area <= 0.0 {
            return Err(Error::DegenerateMetric(format!(
                "triangle {t} has zero base area"
            )));
        }
        base_areas.push(area);
        // l[k] joins tri[k] and tri[k+1]; the opposite vertex is tri[k+2]
        for k in 0..3 {
            let (i, j) = (tri[k], tri[(k + 1) % 3]);
            let (l_ij, l_jo, l_oi) = (l[k], l[(k + 1) % 3], l[(k + 2) % 3]);
            let cot = (l_jo * l_jo + l_oi * l_oi - l_ij * l_ij) / (4.0 * area);
            let w = 0.5 * cot;
            k_triplets.push((i, i, w));
            k_triplets.push((j, j, w));
            k_triplets.push((i, j, -w));
            k_triplets.push((j, i, -w));
        }
    }
    let stiffness = SymSparse::from_triplets(n, &k_triplets);

    let interior_mass = weighted_mass(n, mesh.triangles(), &base_areas, h, mode);

    // boundary mass: 1-D consistent mass on boundary edges with linear
    // density rho and edge length under h g
    let mut b_triplets = Vec::new();
    for (e, &(a, b)) in mesh.edges().iter().enumerate() {
        if !mesh.is_boundary_edge(e) {
            continue;
        }
        let len = metric.base_edge_lengths()[e] * (0.5 * (h[a] + h[b])).sqrt();
        let rho_a = rho.at(mesh, a).ok_or_else(|| {
            Error::InvalidParameter(format!("density missing on boundary vertex {a}"))
        })?;
        let rho_b = rho.at(mesh, b).ok_or_else(|| {
            Error::InvalidParameter(format!("density missing on boundary vertex {b}"))
        })?;
        match mode {
            MassMode::Consistent => {
                b_triplets.push((a, a, len * (rho_a / 4.0 + rho_b / 12.0)));
                b_triplets.push((b, b, len * (rho_a / 12.0 + rho_b / 4.0)));
                let off = len * (rho_a + rho_b) / 12.0;
                b_triplets.push((a, b, off));
                b_triplets.push((b, a, off));
            }
            MassMode::Lumped => {
                b_triplets.push((a, a, len * (2.0 * rho_a + rho_b) / 6.0));
                b_triplets.push((b, b, len * (rho_a + 2.0 * rho_b) / 6.0));
            }
        }
    }
    let boundary_mass = SymSparse::from_triplets(n, &b_triplets);

    let boundary_vertices = mesh.boundary_vertices();
    let mut is_boundary = vec![false; n];
    for &v in &boundary_vertices {
        is_boundary[v] = true;
    }
    let interior_vertices: Vec<usize> = (0..n).filter(|&v| !is_boundary[v]).collect();

    Ok(FemSystem {
        stiffness,
        interior_mass,
        boundary_mass,
        boundary_vertices,
        interior_vertices,
        mesh_fingerprint: mesh.fingerprint(),
        triangles: mesh.triangles().to_vec(),
        base_areas,
        factor: h.to_vec(),
        n,
    })
}

/// Consistent (or lumped) P1 mass matrix with a per-vertex density that
/// is interpolated linearly: exact for affine densities.
fn weighted_mass(
    n: usize,
    triangles: &[[usize; 3]],
    base_areas: &[f64],
    density: &[f64],
    mode: MassMode,
) -> SymSparse {
    let mut triplets = Vec::with_capacity(triangles.len() * 9);
    for (t, tri) in triangles.iter().enumerate() {
        let area = base_areas[t];
        let d = [density[tri[0]], density[tri[1]], density[tri[2]]];
        match mode {
            MassMode::Consistent => {
                for a in 0..3 {
                    let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                    // int psi_a^2 (sum d_k psi_k) over the triangle
                    let diag = area * (d[a] / 10.0 + (d[b] + d[c]) / 30.0);
                    triplets.push((tri[a], tri[a], diag));
                    // int psi_a psi_b (sum d_k psi_k)
                    let off = area * (d[a] / 30.0 + d[b] / 30.0 + d[c] / 60.0);
                    triplets.push((tri[a], tri[b], off));
                    triplets.push((tri[b], tri[a], off));
                }
            }
            MassMode::Lumped => {
                for a in 0..3 {
                    let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                    let lump = area * (2.0 * d[a] + d[b] + d[c]) / 12.0;
                    triplets.push((tri[a], tri[a], lump));
                }
            }
        }
    }
    SymSparse::from_triplets(n, &triplets)
}

impl FemSystem {
    pub fn dof(&self) -> usize {
        self.n
    }

    pub fn stiffness(&self) -> &SymSparse {
        &self.stiffness
    }

    pub fn interior_mass(&self) -> &SymSparse {
        &self.interior_mass
    }

    pub fn boundary_mass_matrix(&self) -> &SymSparse {
        &self.boundary_mass
    }

    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }

    pub fn mesh_fingerprint(&self) -> &str {
        &self.mesh_fingerprint
    }

    /// Mass matrix weighted by a per-vertex potential (density `V h`).
    pub fn potential_mass(&self, potential: &[f64]) -> Result<SymSparse> {
        if potential.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "expected {} potential values, got {}",
                self.n,
                potential.len()
            )));
        }
        let density: Vec<f64> = potential
            .iter()
            .zip(&self.factor)
            .map(|(v, h)| v * h)
            .collect();
        Ok(weighted_mass(
            self.n,
            &self.triangles,
            &self.base_areas,
            &density,
            MassMode::Consistent,
        ))
    }
}

/// Spectrum with solver metadata; serializes to the JSON result format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub problem: Problem,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub residual_tolerance: f64,
    /// Scale-free zero detection threshold:
    /// `1e-8 * max(largest eigenvalue, 1)`.
    pub zero_tolerance: f64,
    pub mesh_fingerprint: String,
    pub dof: usize,
    pub solver: String,
    #[serde(skip)]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
}

impl SpectrumResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectrum serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<SpectrumResult> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("bad spectrum JSON: {e}")))
    }

    fn zero_tol(values: &[f64]) -> f64 {
        1e-8 * values.last().copied().unwrap_or(1.0).abs().max(1.0)
    }
}

/// First k+1 eigenvalues of `K v = lambda A v`; the leading one is the
/// constant mode near zero.
pub fn neumann_spectrum(sys: &FemSystem, k: usize, opts: &SolverOptions) -> Result<SpectrumResult> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let pairs = generalized_smallest(&sys.stiffness, &sys.interior_mass, k + 1, opts)?;
    Ok(SpectrumResult {
        problem: Problem::Neumann,
        zero_tolerance: SpectrumResult::zero_tol(&pairs.values),
        eigenvalues: pairs.values,
        residuals: pairs.residuals,
        residual_tolerance: opts.residual_tol,
        mesh_fingerprint: sys.mesh_fingerprint.clone(),
        dof: sys.n,
        solver: pairs.solver.to_string(),
        eigenvectors: Some(pairs.vectors),
    })
}

/// First k eigenvalues of the interior-restricted problem; all positive.
pub fn dirichlet_spectrum(
    sys: &FemSystem,
    k: usize,
    opts: &SolverOptions,
) -> Result<SpectrumResult> {
    if sys.boundary_vertices.is_empty() {
        return Err(Error::InvalidParameter(
            "Dirichlet problem needs a nonempty boundary".into(),
        ));
    }
    let interior = &sys.interior_vertices;
    if interior.len() < k {
        return Err(Error::InvalidParameter(format!(
            "only {} interior vertices for {k} eigenvalues",
            interior.len()
        )));
    }
    let k_ii = sys.stiffness.restrict(interior);
    let a_ii = sys.interior_mass.restrict(interior);
    let pairs = generalized_smallest(&k_ii, &a_ii, k, opts)?;
    // extend by zero onto the boundary
    let vectors: Vec<Vec<f64>> = pairs
        .vectors
        .iter()
        .map(|v| {
            let mut full = vec![0.0; sys.n];
            for (x, &old) in v.iter().zip(interior) {
                full[old] = *x;
            }
            full
        })
        .collect();
    Ok(SpectrumResult {
        problem: Problem::Dirichlet,
        zero_tolerance: SpectrumResult::zero_tol(&pairs.values),
        eigenvalues: pairs.values,
        residuals: pairs.residuals,
        residual_tolerance: opts.residual_tol,
        mesh_fingerprint: sys.mesh_fingerprint.clone(),
        dof: interior.len(),
        solver: pairs.solver.to_string(),
        eigenvectors: Some(vectors),
    })
}

/// First k+1 Steklov eigenvalues through the boundary Schur complement
/// `S = K_bb - K_bi K_ii^{-1} K_ib` (the discrete Dirichlet-to-Neumann
/// operator); sigma_0 is the constant mode near zero.
pub fn steklov_spectrum(sys: &FemSystem, k: usize, opts: &SolverOptions) -> Result<SpectrumResult> {
    let boundary = &sys.boundary_vertices;
    let interior = &sys.interior_vertices;
    if boundary.is_empty() {
        return Err(Error::InvalidParameter(
            "Steklov problem needs a nonempty boundary".into(),
        ));
    }
    let nb = boundary.len();
    if k + 1 > nb {
        return Err(Error::InvalidParameter(format!(
            "requested {} Steklov values of a {nb}-dimensional boundary problem",
            k + 1
        )));
    }

    let k_ii = sys.stiffness.restrict(interior);
    let solver = SparseSolver::new(&k_ii)
        .map_err(|_| Error::Internal("interior stiffness block is singular".into()))?;

    let mut pos_in_interior = vec![usize::MAX; sys.n];
    for (p, &v) in interior.iter().enumerate() {
        pos_in_interior[v] = p;
    }

    // S = K_bb - K_bi K_ii^{-1} K_ib, built one boundary column at a time
    let mut s = nalgebra::DMatrix::zeros(nb, nb);
    let mut harmonic = Vec::with_capacity(nb); // interior responses per column
    for (cj, &vj) in boundary.iter().enumerate() {
        let mut rhs = vec![0.0; interior.len()];
        let (cols, vals) = sys.stiffness.row(vj);
        for (c, v) in cols.iter().zip(vals) {
            let p = pos_in_interior[*c];
            if p != usize::MAX {
                rhs[p] = *v;
            }
        }
        let x = solver.solve(&rhs); // K_ii^{-1} K_ib e_j
        for (ci, &vi) in boundary.iter().enumerate() {
            let mut acc = sys.stiffness.get(vi, vj);
            let (cols, vals) = sys.stiffness.row(vi);
            for (c, v) in cols.iter().zip(vals) {
                let p = pos_in_interior[*c];
                if p != usize::MAX {
                    acc -= v * x[p];
                }
            }
            s[(ci, cj)] = acc;
        }
        harmonic.push(x);
    }
    let s = (s.clone() + s.transpose()) * 0.5;

    let b_bb_sparse = sys.boundary_mass.restrict(boundary);
    let b_bb = b_bb_sparse.to_dense();
    let (values, boundary_vectors) = dense_generalized(&s, &b_bb)?;

    let take = (k + 1).min(values.len());
    let values: Vec<f64> = values[..take].to_vec();
    // harmonic extension onto the full vertex set
    let mut vectors = Vec::with_capacity(take);
    for vb in boundary_vectors.iter().take(take) {
        let mut full = vec![0.0; sys.n];
        for (x, &v) in vb.iter().zip(boundary) {
            full[v] = *x;
        }
        for (p, &vi) in interior.iter().enumerate() {
            let mut acc = 0.0;
            for (cj, x) in vb.iter().enumerate() {
                acc -= harmonic[cj][p] * x;
            }
            full[vi] = acc;
        }
        vectors.push(full);
    }

    // residual against the full pencil (K, B)
    let k_norm = sys.stiffness.norm_inf();
    let b_norm = sys.boundary_mass.norm_inf();
    let residuals: Vec<f64> = values
        .iter()
        .zip(&vectors)
        .map(|(&sigma, v)| {
            let kv = sys.stiffness.matvec_alloc(v);
            let bv = sys.boundary_mass.matvec_alloc(v);
            let num: f64 = kv
                .iter()
                .zip(&bv)
                .map(|(a, b)| (a - sigma * b) * (a - sigma * b))
                .sum::<f64>()
                .sqrt();
            let vn: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            num / ((k_norm + sigma.abs() * b_norm) * vn)
        })
        .collect();
    if let Some(&worst) = residuals.iter().max_by(|a, b| a.partial_cmp(b).unwrap()) {
        if worst > opts.residual_tol * 10.0 {
            return Err(Error::IterationLimit(format!(
                "Steklov residual {worst:.3e} above tolerance"
            )));
        }
    }

    Ok(SpectrumResult {
        problem: Problem::Steklov,
        zero_tolerance: SpectrumResult::zero_tol(&values),
        eigenvalues: values,
        residuals,
        residual_tolerance: opts.residual_tol * 10.0,
        mesh_fingerprint: sys.mesh_fingerprint.clone(),
        dof: nb,
        solver: "schur-dense".to_string(),
        eigenvectors: Some(vectors),
    })
}

/// Eigenvalues of `(K + A_V) v = lambda A v` with Neumann boundary; the
/// potential may change sign. Returns k+1 values so the second
/// eigenvalue (index 1) is directly available for the Schroedinger
/// bound check.
pub fn schrodinger_neumann_spectrum(
    sys: &FemSystem,
    potential: &[f64],
    k: usize,
    opts: &SolverOptions,
) -> Result<SpectrumResult> {
    let a_v = sys.potential_mass(potential)?;
    let kv = sys.stiffness.add_scaled(&a_v, 1.0);
    // shift by the most negative potential value so the pencil is
    // positive semi-definite for the shift-invert solver, then shift
    // the eigenvalues back (exact operator identity)
    let v_min = potential.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0);
    let shifted = kv.add_scaled(&sys.interior_mass, -v_min);
    let pairs = generalized_smallest(&shifted, &sys.interior_mass, k + 1, opts)?;
    let values: Vec<f64> = pairs.values.iter().map(|l| l + v_min).collect();
    // re-derive residuals for the unshifted pencil
    let k_norm = kv.norm_inf();
    let a_norm = sys.interior_mass.norm_inf();
    let residuals: Vec<f64> = values
        .iter()
        .zip(&pairs.vectors)
        .map(|(&lambda, v)| {
            let kvv = kv.matvec_alloc(v);
            let av = sys.interior_mass.matvec_alloc(v);
            let num: f64 = kvv
                .iter()
                .zip(&av)
                .map(|(a, b)| (a - lambda * b) * (a - lambda * b))
                .sum::<f64>()
                .sqrt();
            let vn: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            num / ((k_norm + lambda.abs() * a_norm) * vn)
        })
        .collect();
    Ok(SpectrumResult {
        problem: Problem::Schroedinger,
        zero_tolerance: SpectrumResult::zero_tol(&values),
        eigenvalues: values,
        residuals,
        residual_tolerance: opts.residual_tol,
        mesh_fingerprint: sys.mesh_fingerprint.clone(),
        dof: sys.n,
        solver: pairs.solver.to_string(),
        eigenvectors: Some(pairs.vectors),
    })
}

#[cfg(test)]
pub(crate) mod bessel_oracle {
    //! Independent oracle for the disk eigenvalue tests: Bessel J_n by
    //! power series, roots by bisection.

    pub fn bessel_j(n: u32, x: f64) -> f64 {
        let half = x / 2.0;
        let mut term = half.powi(n as i32);
        for m in 1..=n as u64 {
            term /= m as f64;
        }
        let mut sum = term;
        let mut k = 1.0;
        loop {
            term *= -half * half / (k * (k + n as f64));
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1.0) {
                break;
            }
            k += 1.0;
            if k > 80.0 {
                break;
            }
        }
        sum
    }

    fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let flo = f(lo);
        assert!(flo * f(hi) < 0.0, "oracle bracket must straddle the root");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) * flo > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// First root of J_0: the Dirichlet disk ground eigenvalue is its
    /// square.
    pub fn j01() -> f64 {
        bisect(2.0, 3.0, |x| bessel_j(0, x))
    }

    /// First root of J_1' = J_0 - J_1/x: the Neumann disk first
    /// nonzero eigenvalue is its square.
    pub fn j11_prime() -> f64 {
        bisect(1.5, 2.5, |x| bessel_j(0, x) - bessel_j(1, x) / x)
    }
}
