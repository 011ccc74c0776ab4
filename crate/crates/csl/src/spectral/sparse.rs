//! Sparse symmetric matrices and the banded Cholesky solver backing the
//! shift-invert eigensolver. Meshes are reordered with reverse
//! Cuthill-McKee so the factor bandwidth stays near the mesh ring size.

use crate::error::{Error, Result};

/// Symmetric sparse matrix in CSR form (both halves stored).
#[derive(Debug, Clone)]
pub struct SymSparse {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl SymSparse {
    /// Build from (i, j, v) triplets, summing duplicates. Only provide
    /// each off-diagonal entry once per symmetric pair or twice
    /// consistently; the assembly routines push both halves.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> SymSparse {
        let mut counts = vec![0usize; n + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut order = vec![0usize; triplets.len()];
        {
            let mut cursor = counts.clone();
            for (t, &(i, _, _)) in triplets.iter().enumerate() {
                order[cursor[i]] = t;
                cursor[i] += 1;
            }
        }
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data = Vec::with_capacity(triplets.len());
        for row in 0..n {
            let mut entries: Vec<(usize, f64)> = order[counts[row]..counts[row + 1]]
                .iter()
                .map(|&t| (triplets[t].1, triplets[t].2))
                .collect();
            entries.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
            for (j, v) in entries {
                match merged.last_mut() {
                    Some((jj, vv)) if *jj == j => *vv += v,
                    _ => merged.push((j, v)),
                }
            }
            for (j, v) in merged {
                indices.push(j);
                data.push(v);
            }
            indptr[row + 1] = indices.len();
        }
        SymSparse {
            n,
            indptr,
            indices,
            data,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[i] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut row = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                row += v * x[*c];
            }
            acc += x[i] * row;
        }
        acc
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `self + coef * other` (patterns may differ).
    pub fn add_scaled(&self, other: &SymSparse, coef: f64) -> SymSparse {
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                triplets.push((i, *c, *v));
            }
            let (cols, vals) = other.row(i);
            for (c, v) in cols.iter().zip(vals) {
                triplets.push((i, *c, coef * *v));
            }
        }
        SymSparse::from_triplets(self.n, &triplets)
    }

    /// Restriction to an index subset (ascending), relabelled 0..k.
    pub fn restrict(&self, keep: &[usize]) -> SymSparse {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut triplets = Vec::new();
        for (new_i, &old_i) in keep.iter().enumerate() {
            let (cols, vals) = self.row(old_i);
            for (c, v) in cols.iter().zip(vals) {
                let new_j = map[*c];
                if new_j != usize::MAX {
                    triplets.push((new_i, new_j, *v));
                }
            }
        }
        SymSparse::from_triplets(keep.len(), &triplets)
    }

    /// Symmetric permutation `A[p, p]`, where `perm[new] = old`.
    pub fn permute(&self, perm: &[usize]) -> SymSparse {
        let mut inv = vec![0usize; self.n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut triplets = Vec::with_capacity(self.nnz());
        for (new_i, &old_i) in perm.iter().enumerate() {
            let (cols, vals) = self.row(old_i);
            for (c, v) in cols.iter().zip(vals) {
                triplets.push((new_i, inv[*c], *v));
            }
        }
        SymSparse::from_triplets(self.n, &triplets)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                m[(i, *c)] = *v;
            }
        }
        m
    }
}

/// Reverse Cuthill-McKee ordering of the matrix graph; returns
/// `perm[new] = old`. Starts from a pseudo-peripheral vertex found by
/// a double BFS.
pub fn rcm_ordering(a: &SymSparse) -> Vec<usize> {
    let n = a.n();
    if n == 0 {
        return Vec::new();
    }
    let degree = |v: usize| a.row(v).0.len();

    let bfs_far = |start: usize| -> usize {
        let mut seen = vec![false; n];
        let mut frontier = vec![start];
        seen[start] = true;
        let mut last = start;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &v in &frontier {
                for &w in a.row(v).0 {
                    if !seen[w] {
                        seen[w] = true;
                        next.push(w);
                    }
                }
            }
            if let Some(&v) = next.first() {
                last = v;
            }
            frontier = next;
        }
        last
    };
    let s0 = (0..n).min_by_key(|&v| degree(v)).unwrap_or(0);
    let s1 = bfs_far(s0);
    let start = bfs_far(s1);

    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    // components beyond the first are appended the same way
    let mut component_starts: Vec<usize> = vec![start];
    component_starts.extend(0..n);
    for s in component_starts {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).0.iter().copied().filter(|&w| !seen[w]).collect();
            nbrs.sort_by_key(|&w| degree(w));
            for w in nbrs {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Cholesky factorization in banded storage. The input must be
/// symmetric positive definite; the bandwidth is taken from the
/// sparsity pattern.
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// Row-major packed lower band: entry (i, j) with i-bw <= j <= i is
    /// stored at l[i*(bw+1) + (j + bw - i)].
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &SymSparse) -> Result<BandedCholesky> {
        let n = a.n();
        let mut bw = 0usize;
        for i in 0..n {
            for &j in a.row(i).0 {
                bw = bw.max(i.abs_diff(j));
            }
        }
        let width = bw + 1;
        let mut l = vec![0.0; n * width];
        // pack the lower triangle
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (c, v) in cols.iter().zip(vals) {
                if *c <= i {
                    l[i * width + (c + bw - i)] = *v;
                }
            }
        }
        for i in 0..n {
            let j_lo = i.saturating_sub(bw);
            for j in j_lo..=i {
                let k_lo = j_lo.max(j.saturating_sub(bw));
                let mut sum = l[i * width + (j + bw - i)];
                for k in k_lo..j {
                    sum -= l[i * width + (k + bw - i)] * l[j * width + (k + bw - j)];
                }
                if j < i {
                    l[i * width + (j + bw - i)] = sum / l[j * width + bw];
                } else {
                    if sum <= 0.0 {
                        return Err(Error::Internal(format!(
                            "banded Cholesky pivot {sum:.3e} at row {i}: matrix not positive definite"
                        )));
                    }
                    l[i * width + bw] = sum.sqrt();
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let width = self.bw + 1;
        // forward: L y = b
        for i in 0..self.n {
            let j_lo = i.saturating_sub(self.bw);
            let mut sum = b[i];
            for j in j_lo..i {
                sum -= self.l[i * width + (j + self.bw - i)] * b[j];
            }
            b[i] = sum / self.l[i * width + self.bw];
        }
        // backward: L^T x = y
        for i in (0..self.n).rev() {
            let mut sum = b[i];
            let j_hi = (i + self.bw).min(self.n - 1);
            for j in i + 1..=j_hi {
                sum -= self.l[j * width + (i + self.bw - j)] * b[j];
            }
            b[i] = sum / self.l[i * width + self.bw];
        }
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }
}

/// RCM-permuted banded Cholesky: the public solver interface.
pub struct SparseSolver {
    perm: Vec<usize>,
    inv: Vec<usize>,
    chol: BandedCholesky,
}

impl SparseSolver {
    pub fn new(a: &SymSparse) -> Result<SparseSolver> {
        let perm = rcm_ordering(a);
        let mut inv = vec![0usize; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let chol = BandedCholesky::factor(&a.permute(&perm))?;
        Ok(SparseSolver { perm, inv, chol })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut pb = vec![0.0; n];
        for new in 0..n {
            pb[new] = b[self.perm[new]];
        }
        self.chol.solve_in_place(&mut pb);
        let mut x = vec![0.0; n];
        for old in 0..n {
            x[old] = pb[self.inv[old]];
        }
        x
    }

    pub fn bandwidth(&self) -> usize {
        self.chol.bandwidth()
    }
}
