//! Mesh text format.
//!
//! ```text
//! CSLMESH 1
//! <V> <F> <m>
//! x_1 ... x_m        (V vertex lines)
//! i j k              (F triangle lines, zero-based)
//! ```
//!
//! Comment lines start with `#` and may appear after the count line.
//! The fingerprint hashes the canonical body (no comments), so headers
//! never change a mesh's identity.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::Mesh;

pub const MESH_MAGIC: &str = "CSLMESH 1";

impl Mesh {
    /// Canonical text serialization (no comments).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let n = self.vertex_count();
        writeln!(out, "{MESH_MAGIC}").unwrap();
        writeln!(out, "{} {} {}", n, self.triangles().len(), self.dim()).unwrap();
        for i in 0..n {
            let p = self.vertex(i);
            for (d, x) in p.iter().enumerate() {
                if d > 0 {
                    out.push(' ');
                }
                write!(out, "{x}").unwrap();
            }
            out.push('\n');
        }
        for t in self.triangles() {
            writeln!(out, "{} {} {}", t[0], t[1], t[2]).unwrap();
        }
        out
    }

    /// Serialization with header comments inserted after the count line.
    pub fn to_text_with_comments(&self, comments: &[String]) -> String {
        let body = self.to_text();
        let mut lines = body.splitn(3, '\n');
        let magic = lines.next().unwrap();
        let counts = lines.next().unwrap();
        let rest = lines.next().unwrap_or("");
        let mut out = String::new();
        writeln!(out, "{magic}").unwrap();
        writeln!(out, "{counts}").unwrap();
        for c in comments {
            writeln!(out, "# {c}").unwrap();
        }
        out.push_str(rest);
        out
    }

    pub fn write_file(&self, path: &Path, comments: &[String]) -> Result<()> {
        std::fs::write(path, self.to_text_with_comments(comments))?;
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut lines = text.lines();
        let magic = lines
            .next()
            .ok_or_else(|| Error::Format("empty mesh file".into()))?;
        if magic.trim() != MESH_MAGIC {
            return Err(Error::Format(format!(
                "bad magic line {magic:?}, expected {MESH_MAGIC:?}"
            )));
        }
        let counts = lines
            .next()
            .ok_or_else(|| Error::Format("missing count line".into()))?;
        let mut it = counts.split_whitespace().map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad count {s:?}")))
        });
        let (v, f, m) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), Some(c)) => (a?, b?, c?),
            _ => return Err(Error::Format("count line needs `<V> <F> <m>`".into())),
        };
        let mut data = lines.filter(|l| {
            let t = l.trim_start();
            !t.is_empty() && !t.starts_with('#')
        });
        let mut vertices = Vec::with_capacity(v * m);
        for i in 0..v {
            let line = data
                .next()
                .ok_or_else(|| Error::Format(format!("missing vertex line {i}")))?;
            let coords: Vec<f64> = line
                .split_whitespace()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::Format(format!("bad coordinate {s:?} on vertex {i}")))
                })
                .collect::<Result<_>>()?;
            if coords.len() != m {
                return Err(Error::Format(format!(
                    "vertex {i} has {} coordinates, expected {m}",
                    coords.len()
                )));
            }
            vertices.extend(coords);
        }
        let mut triangles = Vec::with_capacity(f);
        for t in 0..f {
            let line = data
                .next()
                .ok_or_else(|| Error::Format(format!("missing triangle line {t}")))?;
            let idx: Vec<usize> = line
                .split_whitespace()
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|_| Error::Format(format!("bad index {s:?} on triangle {t}")))
                })
                .collect::<Result<_>>()?;
            if idx.len() != 3 {
                return Err(Error::Format(format!(
                    "triangle {t} has {} indices, expected 3",
                    idx.len()
                )));
            }
            triangles.push([idx[0], idx[1], idx[2]]);
        }
        Mesh::new(m, vertices, triangles)
    }

    pub fn read_file(path: &Path) -> Result<Mesh> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
        Mesh::from_text(&text)
    }

    /// Content hash of the canonical serialization (first 16 hex chars).
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        let mut s = String::with_capacity(16);
        for b in digest.iter().take(8) {
            write!(s, "{b:02x}").unwrap();
        }
        s
    }
}
