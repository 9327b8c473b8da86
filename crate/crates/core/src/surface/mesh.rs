use std::collections::HashMap;

use crate::error::{GibcError, Result};
use crate::vec3::{cross, norm, scale, sub, R3};

/// Closed, consistently oriented triangle surface.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<R3>,
    pub faces: Vec<[usize; 3]>,
    /// Unit normals from the face winding (outward for a positively
    /// oriented closed surface).
    pub face_normals: Vec<R3>,
    pub areas: Vec<f64>,
    edge_count: usize,
}

impl TriMesh {
    /// Validates indices, closedness (every edge shared by exactly two
    /// faces) and orientation (each edge traversed once in each direction).
    pub fn new(vertices: Vec<R3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(GibcError::Mesh("mesh has no faces".into()));
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (f, face) in faces.iter().enumerate() {
            for &v in face {
                if v >= vertices.len() {
                    return Err(GibcError::Mesh(format!(
                        "face {f} references vertex {v}, but only {} vertices exist",
                        vertices.len()
                    )));
                }
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(GibcError::Mesh(format!("face {f} repeats a vertex")));
            }
            for e in 0..3 {
                let key = (face[e], face[(e + 1) % 3]);
                *directed.entry(key).or_insert(0) += 1;
            }
        }
        let mut undirected: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (&(i, j), &count) in &directed {
            let key = (i.min(j), i.max(j));
            let entry = undirected.entry(key).or_insert((0, 0));
            if i < j {
                entry.0 += count;
            } else {
                entry.1 += count;
            }
        }
        let mut edges: Vec<_> = undirected.into_iter().collect();
        edges.sort_unstable_by_key(|(k, _)| *k);
        for ((i, j), (fwd, bwd)) in &edges {
            let total = fwd + bwd;
            if total > 2 {
                return Err(GibcError::Mesh(format!(
                    "non-manifold edge ({i}, {j}) shared by {total} faces"
                )));
            }
            if total == 1 {
                return Err(GibcError::Mesh(format!(
                    "mesh is not closed: boundary edge ({i}, {j})"
                )));
            }
            if *fwd != 1 || *bwd != 1 {
                return Err(GibcError::Mesh(format!(
                    "inconsistent orientation across edge ({i}, {j})"
                )));
            }
        }
        let mut face_normals = Vec::with_capacity(faces.len());
        let mut areas = Vec::with_capacity(faces.len());
        for face in &faces {
            let c = cross(
                &sub(&vertices[face[1]], &vertices[face[0]]),
                &sub(&vertices[face[2]], &vertices[face[0]]),
            );
            let n2 = norm(&c);
            areas.push(0.5 * n2);
            face_normals.push(if n2 > 0.0 { scale(1.0 / n2, &c) } else { [0.0; 3] });
        }
        Ok(TriMesh {
            vertices,
            faces,
            face_normals,
            areas,
            edge_count: edges.len(),
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// `V − E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count as i64 + self.faces.len() as i64
    }

    pub fn mean_area(&self) -> f64 {
        self.areas.iter().sum::<f64>() / self.areas.len() as f64
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Faces at or below `1e-14 × mean area` count as degenerate.
    pub fn degenerate_threshold(&self) -> f64 {
        1e-14 * self.mean_area()
    }

    pub fn degenerate_faces(&self) -> Vec<usize> {
        let t = self.degenerate_threshold();
        (0..self.faces.len()).filter(|&f| self.areas[f] <= t).collect()
    }

    pub fn barycenter(&self, f: usize) -> R3 {
        let [i, j, k] = self.faces[f];
        let (a, b, c) = (&self.vertices[i], &self.vertices[j], &self.vertices[k]);
        [
            (a[0] + b[0] + c[0]) / 3.0,
            (a[1] + b[1] + c[1]) / 3.0,
            (a[2] + b[2] + c[2]) / 3.0,
        ]
    }

    /// Longest edge length.
    pub fn max_edge(&self) -> f64 {
        self.faces
            .iter()
            .flat_map(|f| {
                (0..3).map(move |e| norm(&sub(&self.vertices[f[e]], &self.vertices[f[(e + 1) % 3]])))
            })
            .fold(0.0, f64::max)
    }

    /// Number of connected components of the vertex–face graph.
    pub fn connected_components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for f in &self.faces {
            for e in 0..2 {
                let a = find(&mut parent, f[e]);
                let b = find(&mut parent, f[e + 1]);
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let mut used = vec![false; self.vertices.len()];
        for f in &self.faces {
            for &v in f {
                used[v] = true;
            }
        }
        let mut roots = std::collections::HashSet::new();
        for v in 0..self.vertices.len() {
            if used[v] {
                roots.insert(find(&mut parent, v));
            }
        }
        roots.len()
    }
}
