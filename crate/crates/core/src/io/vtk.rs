//! Legacy-ASCII VTK writers.
//!
//! Two dataset shapes cover everything the toolkit produces: cell-centered
//! fields on the uniform device grid go out as `STRUCTURED_POINTS` (node
//! dimensions are cell counts + 1, values in `CELL_DATA`), and triangle
//! meshes as `POLYDATA`. Numbers are printed with Rust's shortest
//! round-trip formatting, so identical inputs always produce identical
//! bytes — a property the run manifest relies on.

use crate::grid::StructuredGrid;
use crate::gyroid::{TriMesh, WallSide};
use crate::{Error, Result};

use std::fmt::Write as _;
use std::path::Path;

fn header(title: &str) -> String {
    format!("# vtk DataFile Version 3.0\n{title}\nASCII\n")
}

/// A named cell-centered field to serialize: either one scalar per cell
/// or one 3-vector per cell.
pub enum VtkField<'a> {
    Scalar(&'a str, &'a [f64]),
    Vector(&'a str, &'a [[f64; 3]]),
}

/// Write cell fields on the device grid as one `STRUCTURED_POINTS` file.
///
/// Pass a single field for the one-field-per-file convention, or several
/// to bundle a checkpoint; they all land under the same `CELL_DATA`
/// section in the order given.
pub fn write_structured_points(
    path: &Path,
    title: &str,
    grid: &StructuredGrid,
    fields: &[VtkField<'_>],
) -> Result<()> {
    let ncells = grid.ncells();
    for f in fields {
        let (name, len) = match f {
            VtkField::Scalar(n, v) => (*n, v.len()),
            VtkField::Vector(n, v) => (*n, v.len()),
        };
        if len != ncells {
            return Err(Error::InvalidInput(format!(
                "field '{name}' has {len} values for a grid of {ncells} cells"
            )));
        }
        if name.contains(char::is_whitespace) || name.is_empty() {
            return Err(Error::InvalidInput(format!(
                "VTK array name '{name}' must be non-empty and contain no whitespace"
            )));
        }
    }

    let mut out = header(title);
    let _ = writeln!(out, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(out, "DIMENSIONS {} {} {}", grid.nx + 1, grid.ny + 1, grid.nz + 1);
    let _ = writeln!(out, "ORIGIN 0 0 0");
    let _ = writeln!(out, "SPACING {} {} {}", grid.h, grid.h, grid.h);
    let _ = writeln!(out, "CELL_DATA {ncells}");
    for f in fields {
        match f {
            VtkField::Scalar(name, values) => {
                let _ = writeln!(out, "SCALARS {name} double 1");
                let _ = writeln!(out, "LOOKUP_TABLE default");
                for v in *values {
                    let _ = writeln!(out, "{v}");
                }
            }
            VtkField::Vector(name, values) => {
                let _ = writeln!(out, "VECTORS {name} double");
                for v in *values {
                    let _ = writeln!(out, "{} {} {}", v[0], v[1], v[2]);
                }
            }
        }
    }
    std::fs::write(path, out).map_err(Error::Io)
}

/// Write a triangle mesh as ASCII `POLYDATA`. When the mesh carries wall
/// labels they are attached as an integer cell array (`1` = the fluid-1
/// side, `2` = the fluid-2 side).
pub fn write_polydata(path: &Path, title: &str, mesh: &TriMesh) -> Result<()> {
    let mut out = header(title);
    let _ = writeln!(out, "DATASET POLYDATA");
    let _ = writeln!(out, "POINTS {} double", mesh.vertices.len());
    for p in &mesh.vertices {
        let _ = writeln!(out, "{} {} {}", p[0], p[1], p[2]);
    }
    let nt = mesh.triangles.len();
    let _ = writeln!(out, "POLYGONS {nt} {}", 4 * nt);
    for t in &mesh.triangles {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    if mesh.labels.len() == nt && nt > 0 {
        let _ = writeln!(out, "CELL_DATA {nt}");
        let _ = writeln!(out, "SCALARS wall_side int 1");
        let _ = writeln!(out, "LOOKUP_TABLE default");
        for l in &mesh.labels {
            let side = match l {
                WallSide::Fluid1Side => 1,
                WallSide::Fluid2Side => 2,
            };
            let _ = writeln!(out, "{side}");
        }
    }
    std::fs::write(path, out).map_err(Error::Io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gyroid::mesh::TriMesh;

    fn tdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn structured_points_layout_and_determinism() {
        let g = StructuredGrid::all_core(3, 2, 1, 0.5).unwrap();
        let vals: Vec<f64> = (0..6).map(|i| i as f64 * 0.1).collect();
        let vecs: Vec<[f64; 3]> = (0..6).map(|i| [i as f64, 0.0, -1.0]).collect();
        let d = tdir();
        let p = d.path().join("f.vtk");
        write_structured_points(
            &p,
            "fields",
            &g,
            &[VtkField::Scalar("gamma", &vals), VtkField::Vector("u1", &vecs)],
        )
        .unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\nfields\nASCII\n"));
        assert!(text.contains("DIMENSIONS 4 3 2"));
        assert!(text.contains("SPACING 0.5 0.5 0.5"));
        assert!(text.contains("CELL_DATA 6"));
        assert!(text.contains("SCALARS gamma double 1"));
        assert!(text.contains("VECTORS u1 double"));
        // one scalar line per cell, exact shortest-round-trip text
        assert!(text.contains("\n0.30000000000000004\n"));

        let p2 = d.path().join("f2.vtk");
        write_structured_points(
            &p2,
            "fields",
            &g,
            &[VtkField::Scalar("gamma", &vals), VtkField::Vector("u1", &vecs)],
        )
        .unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn field_length_mismatch_is_rejected() {
        let g = StructuredGrid::all_core(2, 2, 2, 1.0).unwrap();
        let d = tdir();
        let err = write_structured_points(
            &d.path().join("bad.vtk"),
            "t",
            &g,
            &[VtkField::Scalar("x", &[1.0, 2.0])],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        let err2 = write_structured_points(
            &d.path().join("bad2.vtk"),
            "t",
            &g,
            &[VtkField::Scalar("two words", &[0.0; 8])],
        )
        .unwrap_err();
        assert!(err2.to_string().contains("whitespace"));
    }

    #[test]
    fn polydata_counts_and_labels() {
        let mesh = TriMesh::axis_box([0.0, 0.0, 0.0], [1.0, 2.0, 3.0])
            .with_uniform_label(WallSide::Fluid2Side);
        let d = tdir();
        let p = d.path().join("box.vtk");
        write_polydata(&p, "box", &mesh).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("POINTS 8 double"));
        assert!(text.contains("POLYGONS 12 48"));
        assert!(text.contains("SCALARS wall_side int 1"));
        assert_eq!(text.lines().filter(|l| *l == "2").count(), 12);
        // every polygon row names exactly three vertices
        assert_eq!(text.lines().filter(|l| l.starts_with("3 ")).count(), 12);
    }

    #[test]
    fn polydata_without_labels_has_no_cell_data() {
        let mesh = TriMesh::axis_box([0.0; 3], [1.0; 3]);
        let d = tdir();
        let p = d.path().join("plain.vtk");
        write_polydata(&p, "plain", &mesh).unwrap();
        assert!(!std::fs::read_to_string(&p).unwrap().contains("CELL_DATA"));
    }
}
