//! Triangulated compact surfaces with boundary.
//!
//! A [`Mesh`] stores vertex coordinates in R^m (m >= 2), a triangle list,
//! and derived topology: the undirected edge list and the oriented
//! boundary loops. The triangle list is the single source of truth;
//! everything else is recomputed at construction time and the value is
//! immutable afterwards.

mod format;
mod generate;

pub use generate::{
    generate_annulus, generate_cap_chart, generate_disk, generate_ribbon,
    generate_tip_graded_disk, RibbonSpec,
};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom;

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<f64>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<(usize, usize)>,
    edge_index: HashMap<(usize, usize), usize>,
    /// Per-edge incidence count (1 = boundary, 2 = interior).
    edge_triangle_count: Vec<u8>,
    boundary_loops: Vec<Vec<usize>>,
}

impl Mesh {
    /// Build a mesh from raw data. Indices are checked; geometric and
    /// topological invariants are reported by [`Mesh::validate`] rather
    /// than enforced here, so that defective meshes can be diagnosed.
    pub fn new(dim: usize, vertices: Vec<f64>, triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "ambient dimension must be >= 2, got {dim}"
            )));
        }
        if vertices.len() % dim != 0 {
            return Err(Error::InvalidParameter(format!(
                "vertex array length {} is not a multiple of dim {dim}",
                vertices.len()
            )));
        }
        let n = vertices.len() / dim;
        if triangles.is_empty() {
            return Err(Error::InvalidParameter("mesh has no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(Error::InvalidParameter(format!(
                        "triangle {t} references vertex {v} out of {n}"
                    )));
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[2] == tri[0] {
                return Err(Error::InvalidParameter(format!(
                    "triangle {t} repeats a vertex: {tri:?}"
                )));
            }
        }

        let (edges, edge_index, edge_triangle_count) = build_edges(&triangles);
        let boundary_loops = extract_boundary_loops(&triangles, &edge_index, &edge_triangle_count);

        Ok(Mesh {
            dim,
            vertices,
            triangles,
            edges,
            edge_index,
            edge_triangle_count,
            boundary_loops,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len() / self.dim
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices_flat(&self) -> &[f64] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edge_index.get(&key).copied()
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.edge_triangle_count[edge] == 1
    }

    /// Oriented boundary loops (cycles of vertex indices).
    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    /// All boundary vertices, ascending.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.boundary_loops.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_loops.iter().any(|l| l.contains(&v))
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    /// Euclidean area of a triangle in the ambient coordinates.
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        geom::triangle_area(self.vertex(a), self.vertex(b), self.vertex(c))
    }

    /// Total Euclidean area of the immersed coordinates.
    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let (a, b) = self.edges[edge];
        geom::dist(self.vertex(a), self.vertex(b))
    }

    pub fn max_edge_length(&self) -> f64 {
        (0..self.edges.len()).map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    /// Shortest edge incident to a vertex. Used to locate the most
    /// refined spot of a graded mesh deterministically.
    pub fn min_incident_edge_length(&self, v: usize) -> f64 {
        self.edges
            .iter()
            .filter(|(a, b)| *a == v || *b == v)
            .map(|&(a, b)| geom::dist(self.vertex(a), self.vertex(b)))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> MeshReport {
        let mut degenerate = Vec::new();
        let mut min_quality = f64::INFINITY;
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = geom::dist(self.vertex(tri[0]), self.vertex(tri[1]));
            let b = geom::dist(self.vertex(tri[1]), self.vertex(tri[2]));
            let c = geom::dist(self.vertex(tri[2]), self.vertex(tri[0]));
            let area = geom::heron_area(a, b, c);
            if area <= 0.0 {
                degenerate.push(t);
                min_quality = 0.0;
                continue;
            }
            // inradius r = area / s, circumradius R = abc / (4 area)
            let s = 0.5 * (a + b + c);
            let quality = 4.0 * area * area / (s * a * b * c);
            min_quality = min_quality.min(quality);
        }

        let nonmanifold_edges = self
            .edge_triangle_count
            .iter()
            .filter(|&&c| c > 2)
            .count();

        let boundary_edge_count = self
            .edge_triangle_count
            .iter()
            .filter(|&&c| c == 1)
            .count();
        let loop_edge_count: usize = self.boundary_loops.iter().map(|l| l.len()).sum();
        let boundary_closed = boundary_edge_count == loop_edge_count;

        let connected = self.is_connected();

        let pass = degenerate.is_empty()
            && nonmanifold_edges == 0
            && boundary_closed
            && connected
            && !self.boundary_loops.is_empty();

        MeshReport {
            vertex_count: self.vertex_count(),
            triangle_count: self.triangles.len(),
            edge_count: self.edges.len(),
            euler_characteristic: self.euler_characteristic(),
            boundary_loop_count: self.boundary_loops.len(),
            min_triangle_quality: if min_quality.is_finite() { min_quality } else { 0.0 },
            connected,
            degenerate_triangles: degenerate,
            nonmanifold_edges,
            boundary_closed,
            pass,
        }
    }

    fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return false;
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }
}

/// Diagnostic report from [`Mesh::validate`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct MeshReport {
    pub vertex_count: usize,
    pub triangle_count: usize,
    pub edge_count: usize,
    pub euler_characteristic: i64,
    pub boundary_loop_count: usize,
    /// Minimum of inradius/circumradius over all triangles (1/2 for
    /// equilateral, 0 for degenerate).
    pub min_triangle_quality: f64,
    pub connected: bool,
    pub degenerate_triangles: Vec<usize>,
    pub nonmanifold_edges: usize,
    pub boundary_closed: bool,
    pub pass: bool,
}

fn build_edges(
    triangles: &[[usize; 3]],
) -> (Vec<(usize, usize)>, HashMap<(usize, usize), usize>, Vec<u8>) {
    let mut counts: HashMap<(usize, usize), u8> = HashMap::new();
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = if a < b { (a, b) } else { (b, a) };
            *counts.entry(key).or_insert(0) = counts.get(&key).copied().unwrap_or(0).saturating_add(1);
        }
    }
    let mut edges: Vec<(usize, usize)> = counts.keys().copied().collect();
    edges.sort_unstable();
    let mut edge_index = HashMap::with_capacity(edges.len());
    let mut edge_triangle_count = Vec::with_capacity(edges.len());
    for (i, &e) in edges.iter().enumerate() {
        edge_index.insert(e, i);
        edge_triangle_count.push(counts[&e]);
    }
    (edges, edge_index, edge_triangle_count)
}

/// Walk boundary edges into closed loops. The walk itself is undirected
/// so that non-orientable meshes (Moebius ribbons) are handled; each
/// finished loop is then aligned with the direction its triangles induce
/// on the majority of its edges, so orientable meshes get the usual
/// induced boundary orientation.
fn extract_boundary_loops(
    triangles: &[[usize; 3]],
    edge_index: &HashMap<(usize, usize), usize>,
    edge_triangle_count: &[u8],
) -> Vec<Vec<usize>> {
    use std::collections::HashSet;

    let mut directed: HashSet<(usize, usize)> = HashSet::new();
    let mut adjacency: HashMap<usize, Vec<usize>> = HashMap::new();
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = if a < b { (a, b) } else { (b, a) };
            if edge_triangle_count[edge_index[&key]] == 1 {
                directed.insert((a, b));
                adjacency.entry(a).or_default().push(b);
                adjacency.entry(b).or_default().push(a);
            }
        }
    }
    for v in adjacency.values_mut() {
        v.sort_unstable();
        v.dedup();
    }

    let mut starts: Vec<usize> = adjacency.keys().copied().collect();
    starts.sort_unstable();
    let mut used: HashSet<(usize, usize)> = HashSet::new();
    let mut loops = Vec::new();
    for start in starts {
        loop {
            let next = adjacency[&start]
                .iter()
                .copied()
                .find(|&b| !used.contains(&ordered(start, b)));
            let Some(first) = next else { break };
            let mut cycle = vec![start];
            used.insert(ordered(start, first));
            let mut prev = start;
            let mut cur = first;
            let mut closed = false;
            while cur != start {
                cycle.push(cur);
                let step = adjacency
                    .get(&cur)
                    .and_then(|ns| {
                        ns.iter()
                            .copied()
                            .find(|&b| b != prev && !used.contains(&ordered(cur, b)))
                    });
                let Some(nxt) = step else { break };
                used.insert(ordered(cur, nxt));
                prev = cur;
                cur = nxt;
            }
            closed |= cur == start && cycle.len() >= 3;
            if !closed {
                continue; // defective open chain; validate() reports it
            }
            // align with the triangle-induced direction where possible
            let n = cycle.len();
            let forward = (0..n)
                .filter(|&i| directed.contains(&(cycle[i], cycle[(i + 1) % n])))
                .count();
            if forward * 2 < n {
                cycle[1..].reverse();
            }
            loops.push(cycle);
        }
    }
    loops
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Mesh {
        // two triangles, consistent CCW orientation
        Mesh::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn square_topology() {
        let m = unit_square();
        assert_eq!(m.euler_characteristic(), 1);
        assert_eq!(m.boundary_loops().len(), 1);
        assert_eq!(m.boundary_loops()[0].len(), 4);
        let report = m.validate();
        assert!(report.pass, "{report:?}");
        assert_eq!(report.boundary_loop_count, 1);
    }

    #[test]
    fn degenerate_triangle_is_flagged() {
        let m = Mesh::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 0.0, 1.0],
            vec![[0, 1, 2], [0, 1, 3]],
        )
        .unwrap();
        let report = m.validate();
        assert!(!report.pass);
        assert_eq!(report.degenerate_triangles, vec![0]);
    }

    #[test]
    fn out_of_range_index_rejected() {
        let err = Mesh::new(2, vec![0.0, 0.0, 1.0, 0.0], vec![[0, 1, 7]]);
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn boundary_orientation_follows_triangles() {
        let m = unit_square();
        let l = &m.boundary_loops()[0];
        // CCW triangles induce the CCW boundary cycle 0,1,2,3 up to rotation
        let pos = l.iter().position(|&v| v == 0).unwrap();
        let rotated: Vec<usize> = (0..4).map(|i| l[(pos + i) % 4]).collect();
        assert_eq!(rotated, vec![0, 1, 2, 3]);
    }
}
