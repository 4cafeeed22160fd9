//! Binary STL input/output.
//!
//! Layout: 80-byte header, little-endian u32 triangle count, then per triangle
//! a float32 normal, three float32 vertices, and a u16 attribute (zero) —
//! 50 bytes each. Writing is deterministic: same mesh, same bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Result};

use super::mesh::TriMesh;

/// Triangle soup as stored in an STL file (no shared vertices).
#[derive(Debug, Clone, PartialEq)]
pub struct StlData {
    pub normals: Vec<[f32; 3]>,
    pub triangles: Vec<[[f32; 3]; 3]>,
}

fn facet_normal(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> [f32; 3] {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let n = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if len == 0.0 {
        [0.0, 0.0, 0.0]
    } else {
        [(n[0] / len) as f32, (n[1] / len) as f32, (n[2] / len) as f32]
    }
}

/// Write `mesh` to `path` in binary STL. The header carries the given label
/// (truncated/padded to 80 bytes, never starting with "solid" to avoid being
/// misread as ASCII STL).
pub fn write_stl(path: &Path, mesh: &TriMesh, label: &str) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    let mut header = [0u8; 80];
    let tag = format!("binary-stl {label}");
    let bytes = tag.as_bytes();
    let n = bytes.len().min(80);
    header[..n].copy_from_slice(&bytes[..n]);
    w.write_all(&header)?;
    let count = u32::try_from(mesh.triangles.len())
        .map_err(|_| Error::MeshInvalid("too many triangles for STL".into()))?;
    w.write_all(&count.to_le_bytes())?;
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle_points(t);
        let n = facet_normal(a, b, c);
        for comp in n {
            w.write_all(&comp.to_le_bytes())?;
        }
        for p in [a, b, c] {
            for comp in p {
                w.write_all(&(comp as f32).to_le_bytes())?;
            }
        }
        w.write_all(&0u16.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a binary STL file back as raw triangle soup.
pub fn read_stl(path: &Path) -> Result<StlData> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    let mut header = [0u8; 80];
    r.read_exact(&mut header)
        .map_err(|_| Error::MeshInvalid("STL shorter than 80-byte header".into()))?;
    let mut count_buf = [0u8; 4];
    r.read_exact(&mut count_buf)
        .map_err(|_| Error::MeshInvalid("STL missing triangle count".into()))?;
    let count = u32::from_le_bytes(count_buf) as usize;
    let mut normals = Vec::with_capacity(count);
    let mut triangles = Vec::with_capacity(count);
    let mut rec = [0u8; 50];
    for i in 0..count {
        r.read_exact(&mut rec)
            .map_err(|_| Error::MeshInvalid(format!("STL truncated at triangle {i}")))?;
        let f = |o: usize| f32::from_le_bytes([rec[o], rec[o + 1], rec[o + 2], rec[o + 3]]);
        normals.push([f(0), f(4), f(8)]);
        triangles.push([
            [f(12), f(16), f(20)],
            [f(24), f(28), f(32)],
            [f(36), f(40), f(44)],
        ]);
    }
    let mut trailing = Vec::new();
    r.read_to_end(&mut trailing)?;
    if !trailing.is_empty() {
        return Err(Error::MeshInvalid(format!(
            "STL has {} trailing bytes after {count} triangles",
            trailing.len()
        )));
    }
    Ok(StlData { normals, triangles })
}

/// Check an STL file forms a closed shell, independently of the mesh it was
/// written from: vertices are re-welded bitwise on their f32 coordinates and
/// every undirected edge must appear in exactly two facets with opposite
/// direction.
pub fn validate_stl_closed(path: &Path) -> Result<()> {
    let data = read_stl(path)?;
    let mut ids: std::collections::HashMap<[u32; 3], u32> = std::collections::HashMap::new();
    let mut key = |p: [f32; 3]| -> u32 {
        let k = [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()];
        let next = ids.len() as u32;
        *ids.entry(k).or_insert(next)
    };
    let mut edges: std::collections::HashMap<(u32, u32), i32> = std::collections::HashMap::new();
    for tri in &data.triangles {
        let v = [key(tri[0]), key(tri[1]), key(tri[2])];
        if v[0] == v[1] || v[1] == v[2] || v[0] == v[2] {
            return Err(Error::MeshInvalid("STL facet with repeated vertex".into()));
        }
        for (a, b) in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
            *edges.entry((a.min(b), a.max(b))).or_insert(0) += if a < b { 1 } else { -1 };
        }
    }
    let bad = edges.values().filter(|&&c| c != 0).count();
    if bad != 0 {
        return Err(Error::MeshInvalid(format!(
            "STL shell not closed: {bad} edges without an oppositely wound partner"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetrahedron() -> TriMesh {
        // Regular tetrahedron on alternating cube corners, outward wound.
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [1.0, 0.0, 1.0],
            [0.0, 1.0, 1.0],
        ];
        let t = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
        TriMesh::new(v, t)
    }

    #[test]
    fn tetrahedron_file_is_284_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tet.stl");
        write_stl(&path, &tetrahedron(), "test").unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 80 + 4 + 4 * 50);
        validate_stl_closed(&path).unwrap();
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.stl");
        let p2 = dir.path().join("b.stl");
        let mesh = tetrahedron();
        write_stl(&p1, &mesh, "x").unwrap();
        write_stl(&p2, &mesh, "x").unwrap();
        let b1 = std::fs::read(&p1).unwrap();
        let b2 = std::fs::read(&p2).unwrap();
        assert_eq!(b1, b2);
        let d1 = read_stl(&p1).unwrap();
        assert_eq!(d1.triangles.len(), 4);
        // Re-writing what we read reproduces the same facts.
        let d2 = read_stl(&p2).unwrap();
        assert_eq!(d1, d2);
    }

    #[test]
    fn open_shell_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("open.stl");
        let mut m = tetrahedron();
        m.triangles.pop();
        write_stl(&path, &m, "open").unwrap();
        assert!(validate_stl_closed(&path).is_err());
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.stl");
        write_stl(&path, &tetrahedron(), "t").unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
        assert!(read_stl(&path).is_err());
    }
}
