//! Minimal Wavefront OBJ support: `v` and `f` records, triangulated on load.

use std::io::{BufRead, Write};

use nalgebra::Point3;

use super::mesh::TriMesh;
use super::GeomError;

/// Format a float with 9 significant digits, the serialization precision
/// used for every geometry file this crate writes.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let s = format!("{v:.8e}");
    // trim exponent noise like 1.00000000e0 -> keep compact but deterministic
    s
}

pub fn write_obj<W: Write>(mesh: &TriMesh, out: &mut W) -> std::io::Result<()> {
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z))?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

pub fn read_obj<R: BufRead>(input: R) -> Result<TriMesh, GeomError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| GeomError::Io(e.to_string()))?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    *c = it
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| GeomError::Parse(format!("bad vertex at line {}", lineno + 1)))?;
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Result<Vec<usize>, GeomError> = it
                    .map(|tok| {
                        tok.split('/')
                            .next()
                            .and_then(|s| s.parse::<usize>().ok())
                            .filter(|&i| i >= 1)
                            .map(|i| i - 1)
                            .ok_or_else(|| GeomError::Parse(format!("bad face at line {}", lineno + 1)))
                    })
                    .collect();
                let idx = idx?;
                if idx.len() < 3 {
                    return Err(GeomError::Parse(format!("face with <3 vertices at line {}", lineno + 1)));
                }
                // fan triangulation
                for i in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[i], idx[i + 1]]);
                }
            }
            _ => {}
        }
    }
    let mesh = TriMesh::new(vertices, triangles);
    mesh.validate()?;
    Ok(mesh)
}

pub fn save_obj(mesh: &TriMesh, path: &std::path::Path) -> Result<(), GeomError> {
    let mut buf = Vec::new();
    write_obj(mesh, &mut buf).map_err(|e| GeomError::Io(e.to_string()))?;
    std::fs::write(path, buf).map_err(|e| GeomError::Io(e.to_string()))
}

pub fn load_obj(path: &std::path::Path) -> Result<TriMesh, GeomError> {
    let file = std::fs::File::open(path).map_err(|e| GeomError::Io(e.to_string()))?;
    read_obj(std::io::BufReader::new(file))
}
