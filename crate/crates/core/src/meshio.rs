//! OFF / OBJ triangle-mesh input and OFF output.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{GibcError, Result};
use crate::surface::TriMesh;
use crate::vec3::R3;

/// Counts and topology of a loaded mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshSummary {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub euler_characteristic: i64,
    pub components: usize,
    /// `(2 − χ)/2`, meaningful for a single closed component.
    pub genus: Option<i64>,
}

pub fn summarize(mesh: &TriMesh) -> MeshSummary {
    let chi = mesh.euler_characteristic();
    let components = mesh.connected_components();
    MeshSummary {
        vertices: mesh.vertices.len(),
        edges: mesh.edge_count(),
        faces: mesh.faces.len(),
        euler_characteristic: chi,
        components,
        genus: (components == 1 && chi % 2 == 0).then_some((2 - chi) / 2),
    }
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> GibcError {
    GibcError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Whitespace-separated tokens of a line with their 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(b)) => {
                out.push((b + 1, &line[b..i]));
                start = None;
            }
            _ => {}
        }
    }
    out
}

fn number<T: std::str::FromStr>(line: usize, (col, tok): (usize, &str)) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, col, format!("cannot parse `{tok}` as a number")))
}

fn unsupported(face: usize, count: usize) -> GibcError {
    GibcError::Mesh(format!(
        "unsupported element: face {face} has {count} vertices, only triangles are accepted"
    ))
}

/// Parses OFF text. Comments start with `#`.
pub fn parse_off(text: &str) -> Result<TriMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
        .filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, 1, "empty OFF file"))?;
    let mut head = tokens(header);
    if head.first().map(|t| t.1) != Some("OFF") {
        return Err(parse_err(hl, 1, "missing `OFF` header"));
    }
    head.remove(0);
    let (cl, counts) = if head.is_empty() {
        let (l, s) = lines.next().ok_or_else(|| parse_err(hl + 1, 1, "missing counts line"))?;
        (l, tokens(s))
    } else {
        (hl, head)
    };
    if counts.len() < 2 {
        return Err(parse_err(cl, 1, "expected vertex and face counts"));
    }
    let nv: usize = number(cl, counts[0])?;
    let nf: usize = number(cl, counts[1])?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, s) = lines
            .next()
            .ok_or_else(|| parse_err(cl, 1, format!("file ends before {nv} vertices")))?;
        let t = tokens(s);
        if t.len() < 3 {
            return Err(parse_err(l, 1, "vertex needs three coordinates"));
        }
        vertices.push([number(l, t[0])?, number(l, t[1])?, number(l, t[2])?]);
    }
    let mut faces = Vec::with_capacity(nf);
    for f in 0..nf {
        let (l, s) = lines
            .next()
            .ok_or_else(|| parse_err(cl, 1, format!("file ends before {nf} faces")))?;
        let t = tokens(s);
        let count: usize = number(l, *t.first().ok_or_else(|| parse_err(l, 1, "empty face"))?)?;
        if count != 3 {
            return Err(unsupported(f, count));
        }
        if t.len() < 4 {
            return Err(parse_err(l, 1, "face lists fewer than 3 indices"));
        }
        faces.push([number(l, t[1])?, number(l, t[2])?, number(l, t[3])?]);
    }
    TriMesh::new(vertices, faces)
}

/// Parses the `v` and `f` records of OBJ text; other records are ignored.
/// Face entries may carry `/vt/vn` suffixes and negative (relative) indices.
pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices: Vec<R3> = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = i + 1;
        let t = tokens(raw.split('#').next().unwrap_or(""));
        match t.first().map(|x| x.1) {
            Some("v") => {
                if t.len() < 4 {
                    return Err(parse_err(l, 1, "vertex needs three coordinates"));
                }
                vertices.push([number(l, t[1])?, number(l, t[2])?, number(l, t[3])?]);
            }
            Some("f") => {
                if t.len() != 4 {
                    return Err(unsupported(faces.len(), t.len() - 1));
                }
                let mut idx = [0usize; 3];
                for k in 0..3 {
                    let (col, tok) = t[k + 1];
                    let head = tok.split('/').next().unwrap_or("");
                    let v: i64 = number(l, (col, head))?;
                    let resolved = if v > 0 {
                        v - 1
                    } else if v < 0 {
                        vertices.len() as i64 + v
                    } else {
                        return Err(parse_err(l, col, "OBJ indices start at 1"));
                    };
                    if resolved < 0 {
                        return Err(parse_err(l, col, format!("index {v} out of range")));
                    }
                    idx[k] = resolved as usize;
                }
                faces.push(idx);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

/// Loads an `.off` or `.obj` file.
pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| GibcError::io(path, e))?;
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
        Some(ext) if ext == "off" => parse_off(&text),
        Some(ext) if ext == "obj" => parse_obj(&text),
        _ => Err(GibcError::Mesh(format!(
            "{}: unknown mesh format (expected .off or .obj)",
            path.display()
        ))),
    }
}

pub fn to_off(mesh: &TriMesh) -> String {
    let mut s = format!("OFF\n{} {} 0\n", mesh.vertices.len(), mesh.faces.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", v[0], v[1], v[2]);
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}
