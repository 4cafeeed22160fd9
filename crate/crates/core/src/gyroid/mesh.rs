//! Triangle mesh container, integrity checks, and ray-cast probing.

use std::collections::HashMap;

use crate::{Error, Result};

/// Which fluid a wall triangle faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallSide {
    Fluid1Side,
    Fluid2Side,
}

/// Indexed triangle mesh with shared vertices.
///
/// Triangles are counter-clockwise when viewed from outside the solid.
/// `labels` is either empty (unlabeled) or one [`WallSide`] per triangle.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
    pub labels: Vec<WallSide>,
}

/// Summary from [`TriMesh::validate`].
#[derive(Debug, Clone)]
pub struct MeshReport {
    pub n_vertices: usize,
    pub n_triangles: usize,
    pub watertight: bool,
    /// Directed edges without a matching opposite (0 when watertight).
    pub boundary_edges: usize,
    /// Edges whose two incident triangles disagree on winding.
    pub misoriented_edges: usize,
    pub n_edges: usize,
    /// V − E + F; even for any closed orientable surface.
    pub euler_characteristic: i64,
    pub total_area: f64,
    pub min_triangle_area: f64,
    /// Signed volume from the divergence theorem; positive for an outward-
    /// oriented closed surface. Meaningless when not watertight.
    pub signed_volume: f64,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl TriMesh {
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[u32; 3]>) -> Self {
        TriMesh { vertices, triangles, labels: Vec::new() }
    }

    /// Stamp every triangle with the same wall-side label.
    pub fn with_uniform_label(mut self, side: WallSide) -> Self {
        self.labels = vec![side; self.triangles.len()];
        self
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        let n = cross(sub(b, a), sub(c, a));
        0.5 * dot(n, n).sqrt()
    }

    pub fn triangle_points(&self, t: usize) -> [[f64; 3]; 3] {
        let tri = self.triangles[t];
        [
            self.vertices[tri[0] as usize],
            self.vertices[tri[1] as usize],
            self.vertices[tri[2] as usize],
        ]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Axis-aligned bounding box as (lo, hi). Empty mesh yields infinities.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        (lo, hi)
    }

    /// Append another mesh (vertices reindexed); used to bundle wall slabs
    /// with the lattice surface into one part. Labels survive only when both
    /// sides carry them.
    pub fn merge(&mut self, other: &TriMesh) {
        let both_labeled = !self.labels.is_empty() && !other.labels.is_empty();
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
        if both_labeled {
            self.labels.extend_from_slice(&other.labels);
        } else {
            self.labels.clear();
        }
    }

    /// Integrity scan: edge pairing, orientation coherence, degenerate
    /// triangles, signed volume.
    ///
    /// `area_floor` is the smallest triangle area considered non-degenerate;
    /// pass `0.0` to skip that check.
    pub fn validate(&self, area_floor: f64) -> MeshReport {
        let mut directed: HashMap<(u32, u32), i32> = HashMap::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *directed.entry((a.min(b), a.max(b))).or_insert(0) += if a < b { 1 } else { -1 };
            }
        }
        let mut undirected: HashMap<(u32, u32), u32> = HashMap::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *undirected.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let boundary_edges = undirected.values().filter(|&&c| c != 2).count();
        let misoriented_edges = directed
            .iter()
            .filter(|(k, &v)| undirected[k] == 2 && v != 0)
            .count();

        let mut total_area = 0.0;
        let mut min_area = f64::INFINITY;
        let mut volume6 = 0.0;
        for t in 0..self.triangles.len() {
            let a = self.triangle_area(t);
            total_area += a;
            min_area = min_area.min(a);
            let [p, q, r] = self.triangle_points(t);
            volume6 += dot(p, cross(q, r));
        }
        if self.triangles.is_empty() {
            min_area = 0.0;
        }

        let _ = area_floor; // degeneracy is reported through min_triangle_area
        let n_edges = undirected.len();
        MeshReport {
            n_vertices: self.vertices.len(),
            n_triangles: self.triangles.len(),
            watertight: boundary_edges == 0 && misoriented_edges == 0,
            boundary_edges,
            misoriented_edges,
            n_edges,
            euler_characteristic: self.vertices.len() as i64 - n_edges as i64
                + self.triangles.len() as i64,
            total_area,
            min_triangle_area: min_area,
            signed_volume: volume6 / 6.0,
        }
    }

    /// Validate and convert failures into an error suitable for export paths.
    pub fn require_closed(&self, area_floor: f64) -> Result<MeshReport> {
        let report = self.validate(area_floor);
        if self.triangles.is_empty() {
            return Err(Error::MeshInvalid("mesh has no triangles".into()));
        }
        if !report.watertight {
            return Err(Error::MeshInvalid(format!(
                "mesh is not watertight: {} unpaired edges, {} misoriented edges",
                report.boundary_edges, report.misoriented_edges
            )));
        }
        if area_floor > 0.0 && report.min_triangle_area < area_floor {
            return Err(Error::MeshInvalid(format!(
                "degenerate triangle: area {:.3e} below floor {:.3e}",
                report.min_triangle_area, area_floor
            )));
        }
        if report.signed_volume <= 0.0 {
            return Err(Error::MeshInvalid(format!(
                "non-positive enclosed volume {:.3e}: orientation is inward",
                report.signed_volume
            )));
        }
        Ok(report)
    }

    /// Axis-aligned box as a closed, outward-oriented 12-triangle mesh.
    pub fn axis_box(lo: [f64; 3], hi: [f64; 3]) -> TriMesh {
        let v = |mask: usize| {
            [
                if mask & 1 != 0 { hi[0] } else { lo[0] },
                if mask & 2 != 0 { hi[1] } else { lo[1] },
                if mask & 4 != 0 { hi[2] } else { lo[2] },
            ]
        };
        let vertices: Vec<[f64; 3]> = (0..8).map(v).collect();
        // Quads (outward CCW), split along one diagonal each.
        let quads: [[u32; 4]; 6] = [
            [0, 2, 3, 1], // z = lo
            [4, 5, 7, 6], // z = hi
            [0, 1, 5, 4], // y = lo
            [2, 6, 7, 3], // y = hi
            [0, 4, 6, 2], // x = lo
            [1, 3, 7, 5], // x = hi
        ];
        let mut triangles = Vec::with_capacity(12);
        for q in quads {
            triangles.push([q[0], q[1], q[2]]);
            triangles.push([q[0], q[2], q[3]]);
        }
        TriMesh::new(vertices, triangles)
    }
}

/// Casts z-parallel rays through a mesh and reports solid chord lengths.
///
/// Triangles are bucketed on an (x, y) grid so each ray only tests nearby
/// triangles. Rays are jittered off vertices/edges by construction of the
/// sample points (the caller picks generic positions).
pub struct ZRayCaster<'a> {
    mesh: &'a TriMesh,
    lo: [f64; 3],
    inv_cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a> ZRayCaster<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let (lo, hi) = mesh.bounds();
        let span_x = (hi[0] - lo[0]).max(1e-12);
        let span_y = (hi[1] - lo[1]).max(1e-12);
        // Aim for ~32 triangles per bucket on typical meshes.
        let target = ((mesh.triangles.len() as f64 / 32.0).sqrt().ceil() as usize).clamp(1, 512);
        let cell = (span_x.max(span_y)) / target as f64;
        let nx = (span_x / cell).ceil() as usize + 1;
        let ny = (span_y / cell).ceil() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let pts = [
                mesh.vertices[tri[0] as usize],
                mesh.vertices[tri[1] as usize],
                mesh.vertices[tri[2] as usize],
            ];
            let (mut bx0, mut bx1, mut by0, mut by1) = (usize::MAX, 0, usize::MAX, 0);
            for p in pts {
                let bx = (((p[0] - lo[0]) / cell) as usize).min(nx - 1);
                let by = (((p[1] - lo[1]) / cell) as usize).min(ny - 1);
                bx0 = bx0.min(bx);
                bx1 = bx1.max(bx);
                by0 = by0.min(by);
                by1 = by1.max(by);
            }
            for by in by0..=by1 {
                for bx in bx0..=bx1 {
                    buckets[by * nx + bx].push(t as u32);
                }
            }
        }
        ZRayCaster { mesh, lo, inv_cell: 1.0 / cell, nx, ny, buckets }
    }

    /// Sorted z-coordinates where the ray (x, y, −∞)→(x, y, +∞) crosses the
    /// surface. An odd count means the ray grazed an edge; callers should
    /// perturb and retry.
    pub fn crossings(&self, x: f64, y: f64) -> Vec<f64> {
        let bx = (((x - self.lo[0]) * self.inv_cell) as isize).clamp(0, self.nx as isize - 1) as usize;
        let by = (((y - self.lo[1]) * self.inv_cell) as isize).clamp(0, self.ny as isize - 1) as usize;
        let mut zs = Vec::new();
        for &t in &self.buckets[by * self.nx + bx] {
            let [a, b, c] = self.mesh.triangle_points(t as usize);
            // 2D barycentric test in the xy-plane.
            let d = (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
            if d.abs() < 1e-300 {
                continue; // triangle vertical in z: no transversal crossing
            }
            let w0 = ((b[1] - c[1]) * (x - c[0]) + (c[0] - b[0]) * (y - c[1])) / d;
            let w1 = ((c[1] - a[1]) * (x - c[0]) + (a[0] - c[0]) * (y - c[1])) / d;
            let w2 = 1.0 - w0 - w1;
            if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                continue;
            }
            zs.push(w0 * a[2] + w1 * b[2] + w2 * c[2]);
        }
        zs.sort_by(|p, q| p.partial_cmp(q).unwrap());
        zs
    }

    /// Mean solid chord length along the ray: sum of (exit − entry) spans.
    /// Returns `None` when the crossing count is odd (degenerate hit).
    pub fn solid_thickness(&self, x: f64, y: f64) -> Option<f64> {
        let zs = self.crossings(x, y);
        if zs.len() % 2 != 0 {
            return None;
        }
        Some(zs.chunks(2).map(|c| c[1] - c[0]).sum())
    }
}
