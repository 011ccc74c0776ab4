//! Generalized symmetric eigensolvers for `K v = lambda A v` with A
//! positive definite: a dense Cholesky reduction below the size
//! threshold and shift-invert Lanczos (with full reorthogonalization in
//! the A-inner product) above it. Both paths must satisfy the same
//! residual contract, which the caller re-checks against the assembled
//! matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::sparse::{SparseSolver, SymSparse};

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Dense factorization below this DOF count, shift-invert above.
    pub dense_threshold: usize,
    /// Relative residual each reported pair must satisfy.
    pub residual_tol: f64,
    /// Shift as a fraction of the spectral scale trace(K)/trace(A).
    pub shift_fraction: f64,
    pub max_subspace: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            dense_threshold: 3000,
            residual_tol: 1e-8,
            shift_fraction: 1e-2,
            max_subspace: 200,
        }
    }
}

pub struct EigenPairs {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// A-orthonormal eigenvectors, one per value.
    pub vectors: Vec<Vec<f64>>,
    /// Relative residuals `|K v - lambda A v| / ((|K| + |lambda||A|) |v|)`.
    pub residuals: Vec<f64>,
    pub solver: &'static str,
}

/// Smallest `k` eigenpairs of `K v = lambda A v`.
pub fn generalized_smallest(
    kmat: &SymSparse,
    amat: &SymSparse,
    k: usize,
    opts: &SolverOptions,
) -> Result<EigenPairs> {
    let n = kmat.n();
    if amat.n() != n {
        return Err(Error::InvalidParameter("matrix sizes differ".into()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "requested {k} eigenpairs of an {n}-dimensional problem"
        )));
    }
    let mut pairs = if n <= opts.dense_threshold {
        dense_path(kmat, amat, k)?
    } else {
        lanczos_path(kmat, amat, k, opts)?
    };
    let k_norm = kmat.norm_inf();
    let a_norm = amat.norm_inf();
    pairs.residuals = pairs
        .values
        .iter()
        .zip(&pairs.vectors)
        .map(|(&lambda, v)| residual(kmat, amat, lambda, v, k_norm, a_norm))
        .collect();
    if let Some((i, &r)) = pairs
        .residuals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
    {
        if r > opts.residual_tol {
            return Err(Error::IterationLimit(format!(
                "eigenpair {i} (lambda = {:.6e}) has residual {r:.3e} above {:.1e}",
                pairs.values[i], opts.residual_tol
            )));
        }
    }
    for v in &mut pairs.vectors {
        canonical_sign(v);
    }
    Ok(pairs)
}

fn residual(
    kmat: &SymSparse,
    amat: &SymSparse,
    lambda: f64,
    v: &[f64],
    k_norm: f64,
    a_norm: f64,
) -> f64 {
    let kv = kmat.matvec_alloc(v);
    let av = amat.matvec_alloc(v);
    let num: f64 = kv
        .iter()
        .zip(&av)
        .map(|(kv, av)| (kv - lambda * av) * (kv - lambda * av))
        .sum::<f64>()
        .sqrt();
    let vn: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    num / ((k_norm + lambda.abs() * a_norm).max(f64::MIN_POSITIVE) * vn)
}

/// Fix an overall sign: the entry of largest magnitude is positive.
fn canonical_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn dense_path(kmat: &SymSparse, amat: &SymSparse, k: usize) -> Result<EigenPairs> {
    let n = kmat.n();
    let a = amat.to_dense();
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Internal("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    // C = L^{-1} K L^{-T}, kept explicitly symmetric
    let kd = kmat.to_dense();
    let m1 = l.solve_lower_triangular(&kd).ok_or_else(|| {
        Error::Internal("singular Cholesky factor in dense reduction".into())
    })?;
    let m2 = l
        .solve_lower_triangular(&m1.transpose())
        .ok_or_else(|| Error::Internal("singular Cholesky factor in dense reduction".into()))?;
    let c = (&m2 + m2.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let lt = l.transpose();
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        values.push(eig.eigenvalues[idx]);
        let y = eig.eigenvectors.column(idx).into_owned();
        let v = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::Internal("singular Cholesky factor in back-substitution".into()))?;
        vectors.push(v.as_slice().to_vec());
    }
    Ok(EigenPairs {
        values,
        vectors,
        residuals: Vec::new(),
        solver: "dense",
    })
}

/// Shift-invert Lanczos: eigenvalues of `(K - sigma A)^{-1} A` in the
/// A-inner product are `1/(lambda - sigma)`, so the smallest lambda
/// become the dominant Ritz values. sigma sits slightly below the
/// spectrum (lambda >= 0 for all problems here).
fn lanczos_path(
    kmat: &SymSparse,
    amat: &SymSparse,
    k: usize,
    opts: &SolverOptions,
) -> Result<EigenPairs> {
    let n = kmat.n();
    let trace_k: f64 = (0..n).map(|i| kmat.get(i, i)).sum();
    let trace_a: f64 = (0..n).map(|i| amat.get(i, i)).sum();
    let scale = (trace_k / trace_a).abs().max(f64::MIN_POSITIVE);
    let sigma = -opts.shift_fraction * scale;

    let shifted = kmat.add_scaled(amat, -sigma);
    let solver = SparseSolver::new(&shifted)?;

    let mut subspace = (2 * k + 30).min(n).min(opts.max_subspace);
    loop {
        match lanczos_run(kmat, amat, &solver, sigma, k, subspace, opts)? {
            Some(pairs) => return Ok(pairs),
            None => {
                if subspace >= n.min(opts.max_subspace) {
                    return Err(Error::IterationLimit(format!(
                        "Lanczos did not converge {k} pairs with subspace {subspace}"
                    )));
                }
                subspace = (2 * subspace).min(n).min(opts.max_subspace);
            }
        }
    }
}

fn lanczos_run(
    kmat: &SymSparse,
    amat: &SymSparse,
    solver: &SparseSolver,
    sigma: f64,
    k: usize,
    m: usize,
    opts: &SolverOptions,
) -> Result<Option<EigenPairs>> {
    let n = kmat.n();
    // deterministic start vector
    let mut q0: Vec<f64> = (0..n).map(|i| (0.7 + 1.37 * i as f64).sin() + 0.3).collect();
    let a_dot = |x: &[f64], ay: &[f64]| -> f64 { x.iter().zip(ay).map(|(a, b)| a * b).sum() };

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut a_basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut alphas: Vec<f64> = Vec::with_capacity(m);
    let mut betas: Vec<f64> = Vec::with_capacity(m);

    let aq0 = amat.matvec_alloc(&q0);
    let norm0 = a_dot(&q0, &aq0).sqrt();
    if !(norm0 > 0.0) {
        return Err(Error::Internal("start vector has zero A-norm".into()));
    }
    for x in &mut q0 {
        *x /= norm0;
    }
    basis.push(q0);
    a_basis.push({
        let q = &basis[0];
        amat.matvec_alloc(q)
    });

    for j in 0..m {
        // w = (K - sigma A)^{-1} A q_j
        let mut w = solver.solve(&a_basis[j]);
        let alpha = a_dot(&w, &a_basis[j]);
        alphas.push(alpha);
        // three-term recurrence then full A-reorthogonalization (twice)
        for (wi, qi) in w.iter_mut().zip(&basis[j]) {
            *wi -= alpha * qi;
        }
        if j > 0 {
            let beta_prev = betas[j - 1];
            for (wi, qi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= beta_prev * qi;
            }
        }
        for _ in 0..2 {
            for (q, aq) in basis.iter().zip(&a_basis) {
                let c = a_dot(&w, aq);
                if c != 0.0 {
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
        }
        let aw = amat.matvec_alloc(&w);
        let beta = a_dot(&w, &aw).sqrt();
        if j + 1 == m || !(beta > 1e-14) {
            break;
        }
        betas.push(beta);
        for x in &mut w {
            *x /= beta;
        }
        basis.push(w);
        a_basis.push({
            let q = basis.last().unwrap();
            amat.matvec_alloc(q)
        });
    }

    let dim = alphas.len();
    if dim < k {
        return Ok(None);
    }
    let mut t = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        t[(j, j)] = alphas[j];
        if j + 1 < dim && j < betas.len() {
            t[(j, j + 1)] = betas[j];
            t[(j + 1, j)] = betas[j];
        }
    }
    let eig = t.symmetric_eigen();
    // theta descending: largest theta = smallest lambda
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());

    let k_norm = kmat.norm_inf();
    let a_norm = amat.norm_inf();
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let theta = eig.eigenvalues[idx];
        if !(theta > 0.0) {
            return Ok(None); // spurious direction; enlarge the subspace
        }
        let lambda = sigma + 1.0 / theta;
        let y: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
        let mut v = vec![0.0; n];
        for (j, q) in basis.iter().enumerate() {
            let c = y[j];
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi += c * qi;
            }
        }
        if residual(kmat, amat, lambda, &v, k_norm, a_norm) > opts.residual_tol {
            return Ok(None);
        }
        values.push(lambda);
        vectors.push(v);
    }
    // ascending
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let vectors: Vec<Vec<f64>> = order.into_iter().map(|i| vectors[i].clone()).collect();
    Ok(Some(EigenPairs {
        values,
        vectors,
        residuals: Vec::new(),
        solver: "shift-invert-lanczos",
    }))
}

/// Dense generalized symmetric solve for small explicit matrices
/// (Steklov boundary blocks). Returns all pairs ascending.
pub fn dense_generalized(
    s: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = s.nrows();
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Internal("boundary mass is not positive definite".into()))?;
    let l = chol.l();
    let m1 = l
        .solve_lower_triangular(s)
        .ok_or_else(|| Error::Internal("singular factor in Steklov reduction".into()))?;
    let m2 = l
        .solve_lower_triangular(&m1.transpose())
        .ok_or_else(|| Error::Internal("singular factor in Steklov reduction".into()))?;
    let c = (&m2 + m2.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let lt = l.transpose();
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &idx in &order {
        values.push(eig.eigenvalues[idx]);
        let y = eig.eigenvectors.column(idx).into_owned();
        let v = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::Internal("singular factor in back-substitution".into()))?;
        let mut v = v.as_slice().to_vec();
        canonical_sign(&mut v);
        vectors.push(v);
    }
    Ok((values, vectors))
}
