//! Isosurface extraction on a voxel grid by tetrahedral decomposition.
//!
//! Each voxel is split into six tetrahedra around its 0→7 diagonal; within a
//! tetrahedron the field is linear, so the zero level set is a planar polygon
//! (triangle or quad) with no ambiguous sign configurations. Every cube face
//! is cut along the same diagonal as the neighboring cube's matching face,
//! and edge crossings are computed in a canonical endpoint order, so adjacent
//! voxels produce bit-identical vertices and the surface is crack-free.
//!
//! Closed extraction surrounds the box with a ghost layer at a huge negative
//! field value: crossings on ghost edges snap onto the boundary nodes, which
//! caps the surface flush with the box faces.

use std::collections::HashMap;

/// Field value assigned to ghost nodes outside the box for closed extraction.
const GHOST: f64 = 1e30;

/// Edge-parameter snap: crossings within this fraction of a node collapse onto
/// it, so coincident vertices weld instead of spawning sliver triangles.
const T_SNAP: f64 = 1e-3;

/// Welding quantum as a fraction of the voxel edge (finer than the snap
/// displacement, so only genuinely coincident points merge).
const WELD_FRACTION: f64 = 1e-4;

/// Node values below this fraction of the field scale are nudged off zero.
/// A node sitting (almost) exactly on the surface would generate geometry
/// smaller than the weld quantum — two sheets collapsing through the node
/// into overlapping triangles. Nudging keeps such features a few hundred
/// quanta wide while moving the surface by less than the sampling error.
const NODE_EPS_FRACTION: f64 = 2e-3;

/// Cube corner bit layout: bit0 = +x, bit1 = +y, bit2 = +z.
const CORNER_OFFSET: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
];

/// Six tetrahedra sharing the 0–7 diagonal; all six cube faces are split along
/// diagonals that match across neighboring voxels.
const TETS: [[usize; 4]; 6] = [
    [0, 1, 5, 7],
    [0, 5, 4, 7],
    [0, 4, 6, 7],
    [0, 6, 2, 7],
    [0, 2, 3, 7],
    [0, 3, 1, 7],
];

pub(crate) struct MarchOutput {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

struct Welder {
    quantum: f64,
    seen: HashMap<[i64; 3], u32>,
    vertices: Vec<[f64; 3]>,
}

impl Welder {
    fn new(quantum: f64) -> Self {
        Welder { quantum, seen: HashMap::new(), vertices: Vec::new() }
    }

    fn id(&mut self, p: [f64; 3]) -> u32 {
        let key = [
            (p[0] / self.quantum).round() as i64,
            (p[1] / self.quantum).round() as i64,
            (p[2] / self.quantum).round() as i64,
        ];
        if let Some(&id) = self.seen.get(&key) {
            return id;
        }
        let id = self.vertices.len() as u32;
        self.seen.insert(key, id);
        self.vertices.push(p);
        id
    }
}

fn lex_less(a: [f64; 3], b: [f64; 3]) -> bool {
    for i in 0..3 {
        if a[i] != b[i] {
            return a[i] < b[i];
        }
    }
    false
}

/// Crossing point on the segment p→q where the linear field changes sign.
/// Endpoints are ordered canonically first so every tetrahedron touching the
/// edge computes the identical floating-point result.
fn crossing(p: [f64; 3], fp: f64, q: [f64; 3], fq: f64) -> [f64; 3] {
    let (p, fp, q, fq) = if lex_less(q, p) { (q, fq, p, fp) } else { (p, fp, q, fq) };
    let mut t = fp / (fp - fq);
    if t < T_SNAP {
        t = 0.0;
    } else if t > 1.0 - T_SNAP {
        t = 1.0;
    }
    [
        p[0] + t * (q[0] - p[0]),
        p[1] + t * (q[1] - p[1]),
        p[2] + t * (q[2] - p[2]),
    ]
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

/// Sign of det(b−a, c−a, d−a): +1 when (a,b,c,d) is positively oriented.
/// Tetrahedra from the cube decomposition are never degenerate, so the sign
/// is reliable even when the emitted triangle is a sliver.
fn orient(a: [f64; 3], b: [f64; 3], c: [f64; 3], d: [f64; 3]) -> f64 {
    dot(sub(b, a), cross(sub(c, a), sub(d, a)))
}

/// Extract the zero level set of `field` (inside = field ≥ 0) over a voxel box.
///
/// `nvox` voxels per axis with the given spacing, sampled at nodes. With
/// `closed` the surface gains planar caps on the box faces; otherwise only the
/// interior surface is produced (the open form used for area measurement).
pub(crate) fn march_field<F>(
    origin: [f64; 3],
    nvox: [usize; 3],
    spacing: [f64; 3],
    field: F,
    closed: bool,
) -> MarchOutput
where
    F: Fn(f64, f64, f64) -> f64,
{
    let (nvx, nvy, nvz) = (nvox[0] as i64, nvox[1] as i64, nvox[2] as i64);
    let min_spacing = spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut welder = Welder::new(min_spacing * WELD_FRACTION);
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    // Probe the field scale once (coarse midpoint lattice) to size the
    // near-zero node nudge.
    let mut scale = 0.0f64;
    for a in 0..5 {
        for b in 0..5 {
            for c in 0..5 {
                let v = field(
                    origin[0] + (a as f64 + 0.5) / 5.0 * (nvox[0] as f64 * spacing[0]),
                    origin[1] + (b as f64 + 0.5) / 5.0 * (nvox[1] as f64 * spacing[1]),
                    origin[2] + (c as f64 + 0.5) / 5.0 * (nvox[2] as f64 * spacing[2]),
                );
                if v.is_finite() {
                    scale = scale.max(v.abs());
                }
            }
        }
    }
    let eps = scale * NODE_EPS_FRACTION;

    // Node planes are padded with a one-node ghost ring; index (i+1, j+1)
    // covers node i ∈ [-1, nvx+1].
    let plane_w = (nvx + 3) as usize;
    let plane_h = (nvy + 3) as usize;
    let eval_plane = |k: i64, buf: &mut Vec<f64>| {
        buf.clear();
        buf.resize(plane_w * plane_h, -GHOST);
        if k < 0 || k > nvz {
            return; // entire plane is ghost
        }
        let z = origin[2] + k as f64 * spacing[2];
        for j in 0..=nvy {
            let y = origin[1] + j as f64 * spacing[1];
            for i in 0..=nvx {
                let x = origin[0] + i as f64 * spacing[0];
                let v = field(x, y, z);
                buf[((j + 1) * plane_w as i64 + i + 1) as usize] = if v.abs() < eps {
                    if v < 0.0 {
                        -eps
                    } else {
                        eps
                    }
                } else {
                    v
                };
            }
        }
    };
    let node_pos = |i: i64, j: i64, k: i64| -> [f64; 3] {
        [
            origin[0] + i as f64 * spacing[0],
            origin[1] + j as f64 * spacing[1],
            origin[2] + k as f64 * spacing[2],
        ]
    };

    let (k_lo, k_hi) = if closed { (-1, nvz) } else { (0, nvz - 1) };
    let (ij_lo, i_hi, j_hi) = if closed { (-1, nvx, nvy) } else { (0, nvx - 1, nvy - 1) };

    let mut plane_a: Vec<f64> = Vec::new();
    let mut plane_b: Vec<f64> = Vec::new();
    eval_plane(k_lo, &mut plane_a);
    for kv in k_lo..=k_hi {
        eval_plane(kv + 1, &mut plane_b);
        let planes = [&plane_a, &plane_b];
        let ghost_k = (kv < 0 || kv >= nvz) as usize;
        for jv in ij_lo..=j_hi {
            let ghost_j = (jv < 0 || jv >= nvy) as usize;
            for iv in ij_lo..=i_hi {
                let ghost_i = (iv < 0 || iv >= nvx) as usize;
                // Voxels outside along 2+ axes can only produce degenerate
                // triangles pinned to a box edge; skip them.
                if ghost_i + ghost_j + ghost_k >= 2 {
                    continue;
                }
                let mut pos = [[0.0; 3]; 8];
                let mut val = [0.0; 8];
                let mut n_in = 0;
                for (c, off) in CORNER_OFFSET.iter().enumerate() {
                    let (i, j, k) = (iv + off[0] as i64, jv + off[1] as i64, kv + off[2] as i64);
                    pos[c] = node_pos(i, j, k);
                    val[c] = planes[off[2]][((j + 1) * plane_w as i64 + i + 1) as usize];
                    if val[c] >= 0.0 {
                        n_in += 1;
                    }
                }
                if n_in == 0 || n_in == 8 {
                    continue;
                }
                for tet in &TETS {
                    emit_tet(
                        &[pos[tet[0]], pos[tet[1]], pos[tet[2]], pos[tet[3]]],
                        &[val[tet[0]], val[tet[1]], val[tet[2]], val[tet[3]]],
                        &mut welder,
                        &mut triangles,
                    );
                }
            }
        }
        std::mem::swap(&mut plane_a, &mut plane_b);
    }
    let mut vertices = welder.vertices;
    split_pinch_vertices(&mut vertices, &mut triangles);
    compact_vertices(&mut vertices, &mut triangles);
    MarchOutput { vertices, triangles }
}

fn emit_tet(p: &[[f64; 3]; 4], f: &[f64; 4], welder: &mut Welder, out: &mut Vec<[u32; 3]>) {
    let inside: Vec<usize> = (0..4).filter(|&c| f[c] >= 0.0).collect();
    match inside.len() {
        0 | 4 => {}
        1 | 3 => {
            // Single corner on one side: one triangle from its three edges.
            let lone = if inside.len() == 1 {
                inside[0]
            } else {
                (0..4).find(|c| !inside.contains(c)).unwrap()
            };
            let o: Vec<usize> = (0..4).filter(|&c| c != lone).collect();
            let tri = [
                crossing(p[lone], f[lone], p[o[0]], f[o[0]]),
                crossing(p[lone], f[lone], p[o[1]], f[o[1]]),
                crossing(p[lone], f[lone], p[o[2]], f[o[2]]),
            ];
            // With a positively oriented (lone, o0, o1, o2) frame the winding
            // (x0, x1, x2) faces away from `lone`; the normal must leave the
            // inside region.
            let s = orient(p[lone], p[o[0]], p[o[1]], p[o[2]]);
            let flip = if inside.len() == 1 { s < 0.0 } else { s > 0.0 };
            push(&tri, flip, welder, out);
        }
        2 => {
            // Two-and-two: the level set is a quad; split along one diagonal.
            let (a, b) = (inside[0], inside[1]);
            let outs: Vec<usize> = (0..4).filter(|c| !inside.contains(c)).collect();
            let (c, d) = (outs[0], outs[1]);
            let pac = crossing(p[a], f[a], p[c], f[c]);
            let pad = crossing(p[a], f[a], p[d], f[d]);
            let pbc = crossing(p[b], f[b], p[c], f[c]);
            let pbd = crossing(p[b], f[b], p[d], f[d]);
            let flip = orient(p[a], p[b], p[c], p[d]) < 0.0;
            push(&[pac, pad, pbd], flip, welder, out);
            push(&[pac, pbd, pbc], flip, welder, out);
        }
        _ => unreachable!(),
    }
}

/// Weld and emit one triangle unless it is degenerate after welding.
fn push(tri: &[[f64; 3]; 3], flip: bool, welder: &mut Welder, out: &mut Vec<[u32; 3]>) {
    let ia = welder.id(tri[0]);
    let ib = welder.id(tri[1]);
    let ic = welder.id(tri[2]);
    if ia == ib || ib == ic || ia == ic {
        return;
    }
    if flip {
        out.push([ia, ic, ib]);
    } else {
        out.push([ia, ib, ic]);
    }
}

/// Separate non-manifold "pinch" vertices.
///
/// When the field vanishes exactly at a lattice node (the gyroid does this on
/// a symmetric set of points), two surface sheets meet at a single welded
/// vertex. Duplicate such a vertex so each triangle fan keeps its own copy:
/// coordinates are unchanged, but the connectivity becomes manifold and the
/// Euler characteristic comes out right.
fn split_pinch_vertices(vertices: &mut Vec<[f64; 3]>, triangles: &mut [[u32; 3]]) {
    let nv = vertices.len();
    let mut incident: Vec<Vec<u32>> = vec![Vec::new(); nv];
    for (t, tri) in triangles.iter().enumerate() {
        for &v in tri {
            incident[v as usize].push(t as u32);
        }
    }

    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    for v in 0..nv {
        let fan = &incident[v];
        if fan.len() < 2 {
            continue;
        }
        // Union incident triangles that share an edge through v.
        let mut parent: Vec<usize> = (0..fan.len()).collect();
        let mut by_endpoint: HashMap<u32, usize> = HashMap::new();
        for (li, &t) in fan.iter().enumerate() {
            for &w in &triangles[t as usize] {
                if w as usize == v {
                    continue;
                }
                match by_endpoint.entry(w) {
                    std::collections::hash_map::Entry::Occupied(o) => {
                        let a = find(&mut parent, li);
                        let b = find(&mut parent, *o.get());
                        parent[a] = b;
                    }
                    std::collections::hash_map::Entry::Vacant(slot) => {
                        slot.insert(li);
                    }
                }
            }
        }
        let mut replacement: HashMap<usize, u32> = HashMap::new();
        for li in 0..fan.len() {
            let root = find(&mut parent, li);
            let id = match replacement.get(&root) {
                Some(&id) => id,
                None => {
                    // First sheet keeps the original vertex; later sheets get
                    // duplicates at the same position.
                    let id = if replacement.is_empty() {
                        v as u32
                    } else {
                        let dup = vertices.len() as u32;
                        vertices.push(vertices[v]);
                        dup
                    };
                    replacement.insert(root, id);
                    id
                }
            };
            if id != v as u32 {
                for slot in triangles[fan[li] as usize].iter_mut() {
                    if *slot == v as u32 {
                        *slot = id;
                    }
                }
            }
        }
    }
}

/// Drop vertices no triangle references (left behind when degenerate
/// triangles are discarded) and renumber the rest in first-use order.
fn compact_vertices(vertices: &mut Vec<[f64; 3]>, triangles: &mut [[u32; 3]]) {
    let mut remap = vec![u32::MAX; vertices.len()];
    let mut next = 0u32;
    for tri in triangles.iter() {
        for &v in tri {
            if remap[v as usize] == u32::MAX {
                remap[v as usize] = next;
                next += 1;
            }
        }
    }
    let mut compacted = vec![[0.0; 3]; next as usize];
    for (old, &nid) in remap.iter().enumerate() {
        if nid != u32::MAX {
            compacted[nid as usize] = vertices[old];
        }
    }
    for tri in triangles.iter_mut() {
        for v in tri.iter_mut() {
            *v = remap[*v as usize];
        }
    }
    *vertices = compacted;
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed extraction of a half-space: a plane inside the box plus caps
    /// must form a closed box around the inside region.
    #[test]
    fn halfspace_yields_closed_slab_of_correct_area() {
        let out = march_field(
            [0.0; 3],
            [8, 8, 8],
            [0.125; 3],
            |x, _, _| 0.4375 - x, // plane x = 0.4375 between nodes
            true,
        );
        // Surface area of the region {x <= 0.4375} within the unit box:
        // the cut plane (1) + the cap at x=0 (1) + 4 side strips (0.4375 each).
        let mut area = 0.0;
        for t in &out.triangles {
            let a = out.vertices[t[0] as usize];
            let b = out.vertices[t[1] as usize];
            let c = out.vertices[t[2] as usize];
            area += 0.5 * {
                let n = cross(sub(b, a), sub(c, a));
                dot(n, n).sqrt()
            };
        }
        let expect = 2.0 + 4.0 * 0.4375;
        assert!((area - expect).abs() < 1e-9, "area {area} vs {expect}");
        // Every edge must be shared by exactly two triangles.
        let mut edges: HashMap<(u32, u32), i32> = HashMap::new();
        for t in &out.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let key = (a.min(b), a.max(b));
                *edges.entry(key).or_insert(0) += if a < b { 1 } else { -1 };
            }
        }
        assert!(edges.values().all(|&v| v == 0));
    }

    /// Open extraction of a sphere converges to the analytic area.
    #[test]
    fn sphere_area_converges() {
        let r = 0.31;
        let sphere = |x: f64, y: f64, z: f64| {
            r * r - ((x - 0.5).powi(2) + (y - 0.5).powi(2) + (z - 0.5).powi(2))
        };
        let mut areas = Vec::new();
        for n in [24usize, 48] {
            let out = march_field([0.0; 3], [n; 3], [1.0 / n as f64; 3], sphere, false);
            let mut area = 0.0;
            for t in &out.triangles {
                let a = out.vertices[t[0] as usize];
                let b = out.vertices[t[1] as usize];
                let c = out.vertices[t[2] as usize];
                let n = cross(sub(b, a), sub(c, a));
                area += 0.5 * dot(n, n).sqrt();
            }
            areas.push(area);
        }
        let exact = 4.0 * std::f64::consts::PI * r * r;
        assert!((areas[1] - exact).abs() / exact < 0.01, "{areas:?} vs {exact}");
        assert!((areas[1] - exact).abs() < (areas[0] - exact).abs());
    }

    /// Outward orientation: for a solid sphere the triangle normals must point
    /// away from the center.
    #[test]
    fn sphere_normals_point_outward() {
        let sphere = |x: f64, y: f64, z: f64| {
            0.09 - ((x - 0.5).powi(2) + (y - 0.5).powi(2) + (z - 0.5).powi(2))
        };
        let out = march_field([0.0; 3], [20; 3], [0.05; 3], sphere, false);
        assert!(!out.triangles.is_empty());
        for t in &out.triangles {
            let a = out.vertices[t[0] as usize];
            let b = out.vertices[t[1] as usize];
            let c = out.vertices[t[2] as usize];
            let n = cross(sub(b, a), sub(c, a));
            let centroid = [
                (a[0] + b[0] + c[0]) / 3.0 - 0.5,
                (a[1] + b[1] + c[1]) / 3.0 - 0.5,
                (a[2] + b[2] + c[2]) / 3.0 - 0.5,
            ];
            assert!(dot(n, centroid) > 0.0, "inward-facing triangle");
        }
    }

    /// No triangle may reference a vertex that does not exist, and every
    /// stored vertex must be referenced after compaction.
    #[test]
    fn output_has_no_orphan_vertices() {
        let out = march_field(
            [0.0; 3],
            [12; 3],
            [1.0 / 12.0; 3],
            |x, y, z| 0.07 - ((x - 0.5).powi(2) + (y - 0.5).powi(2) + (z - 0.5).powi(2)),
            true,
        );
        let mut used = vec![false; out.vertices.len()];
        for t in &out.triangles {
            for &v in t {
                used[v as usize] = true;
            }
        }
        assert!(used.iter().all(|&u| u));
    }
}
