use std::collections::HashMap;

use crate::error::{GibcError, Result};
use crate::vec3::{normalize, scale, R3};

use super::TriMesh;

/// Sphere of radius `a` from an icosahedron refined `level` times by edge
/// bisection, new vertices projected onto the sphere. Level 0 is the
/// icosahedron itself (12 vertices, 20 faces).
pub fn icosphere(level: usize, a: f64) -> Result<TriMesh> {
    if level > 7 {
        return Err(GibcError::Parameter(format!("icosphere level {level} too large")));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<R3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(normalize)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |i: usize, j: usize, verts: &mut Vec<R3>| -> usize {
            let key = (i.min(j), i.max(j));
            *cache.entry(key).or_insert_with(|| {
                let (p, q) = (verts[i], verts[j]);
                verts.push(normalize(&[p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[i, j, k] in &faces {
            let a = midpoint(i, j, &mut verts);
            let b = midpoint(j, k, &mut verts);
            let c = midpoint(k, i, &mut verts);
            next.extend_from_slice(&[[i, a, c], [j, b, a], [k, c, b], [a, b, c]]);
        }
        faces = next;
    }
    let verts = verts.iter().map(|v| scale(a, v)).collect();
    TriMesh::new(verts, faces)
}
