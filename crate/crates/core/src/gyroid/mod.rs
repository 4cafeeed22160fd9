//! Two-level-set gyroid geometry.
//!
//! The triply periodic surface g(x) = sin X cos Y + sin Z cos X + sin Y cos Z
//! (with X = 2πx/L_cell etc.) splits space into two labyrinths. Thickening it
//! into a solid sheet of half-width c/L_cell leaves two disjoint fluid
//! networks:
//!
//! * solid:   |g| ≤ c/L_cell
//! * fluid 1: g < −c/L_cell
//! * fluid 2: g > +c/L_cell
//!
//! This module classifies points, measures per-cell porosity and interfacial
//! area, extracts watertight wall meshes, and turns an optimized cell-wise
//! thickness field back into a printable part.

mod march;
pub mod mesh;
pub mod stl;

pub use mesh::{MeshReport, TriMesh, WallSide, ZRayCaster};
pub use stl::{read_stl, validate_stl_closed, write_stl, StlData};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

use std::collections::VecDeque;
use std::f64::consts::PI;

/// Largest c/L_cell for which both fluid networks stay periodically
/// connected. Determined by voxel flood fill over one periodic cell:
/// connected through 1.40, fragmented by 1.45.
pub const PINCH_OFF_RATIO: f64 = 1.40;

/// Minimum voxels per cell edge for surface extraction.
pub const MIN_RESOLUTION: usize = 8;

/// Minimum sample count accepted by [`measure_cell`].
pub const MIN_MEASURE_SAMPLES: usize = 10_000;

/// Default volume-sampling density (64³ midpoints per cell).
pub const DEFAULT_MEASURE_SAMPLES: usize = 64 * 64 * 64;

/// Extraction resolution used for interfacial-area measurement.
const AREA_RESOLUTION: usize = 64;

/// Thickness of the solid plates separating each plenum from the lattice
/// core in a fabricated device.
pub const PARTITION_WALL_THICKNESS: f64 = 0.5e-3;

/// The gyroid level function g at a physical point, for cell size `l_cell`.
pub fn gyroid_g(p: [f64; 3], l_cell: f64) -> f64 {
    let s = 2.0 * PI / l_cell;
    let (x, y, z) = (s * p[0], s * p[1], s * p[2]);
    x.sin() * y.cos() + z.sin() * x.cos() + y.sin() * z.cos()
}

/// Point classification against the two offset level sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Solid,
    Fluid1,
    Fluid2,
}

/// Which surface to extract: one wall, or the complete solid boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelSet {
    /// Wall seen by fluid 1; the closed mesh encloses the fluid-1 network.
    G1,
    /// Wall seen by fluid 2; the closed mesh encloses the fluid-2 network.
    G2,
    /// Both walls at once; the closed mesh encloses the solid sheet.
    Solid,
}

/// Level-set parameter c, constant or graded from cell-centered values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CField {
    Constant(f64),
    /// Trilinear interpolation of values at cell centers of a uniform grid.
    /// Queries outside the center lattice clamp to the nearest center
    /// (constant extension), matching a filtered design field that only
    /// exists per cell.
    Cells {
        origin: [f64; 3],
        n: [usize; 3],
        h: f64,
        values: Vec<f64>,
    },
}

impl CField {
    fn range(&self) -> (f64, f64) {
        match self {
            CField::Constant(c) => (*c, *c),
            CField::Cells { values, .. } => values.iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), &v| (lo.min(v), hi.max(v)),
            ),
        }
    }
}

/// A thickened gyroid over an axis-aligned box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GyroidSpec {
    pub l_cell: f64,
    pub c: CField,
    pub box_lo: [f64; 3],
    pub box_hi: [f64; 3],
}

impl GyroidSpec {
    pub fn new(l_cell: f64, c: CField, box_lo: [f64; 3], box_hi: [f64; 3]) -> Result<Self> {
        if !(l_cell > 0.0) {
            return Err(Error::InvalidInput(format!("cell size must be positive, got {l_cell}")));
        }
        if (0..3).any(|a| box_hi[a] <= box_lo[a]) {
            return Err(Error::InvalidInput("domain box has non-positive extent".into()));
        }
        if let CField::Cells { n, values, h, .. } = &c {
            if values.len() != n[0] * n[1] * n[2] {
                return Err(Error::InvalidInput(format!(
                    "c field has {} values for a {}x{}x{} grid",
                    values.len(),
                    n[0],
                    n[1],
                    n[2]
                )));
            }
            if !(*h > 0.0) {
                return Err(Error::InvalidInput("c grid spacing must be positive".into()));
            }
        }
        let (c_lo, c_hi) = c.range();
        if c_lo < 0.0 {
            return Err(Error::InvalidInput(format!("negative level-set parameter c = {c_lo}")));
        }
        if c_hi / l_cell >= PINCH_OFF_RATIO {
            return Err(Error::Geometry(format!(
                "c/L_cell = {:.3} reaches the pinch-off ratio {PINCH_OFF_RATIO}: \
                 a fluid phase would disconnect",
                c_hi / l_cell
            )));
        }
        Ok(GyroidSpec { l_cell, c, box_lo, box_hi })
    }

    /// One cubic cell [0, L]³ at constant thickness parameter.
    pub fn unit_cell(l_cell: f64, c: f64) -> Result<Self> {
        GyroidSpec::new(l_cell, CField::Constant(c), [0.0; 3], [l_cell; 3])
    }

    /// Local thickness parameter at a point.
    pub fn c_at(&self, p: [f64; 3]) -> f64 {
        match &self.c {
            CField::Constant(c) => *c,
            CField::Cells { origin, n, h, values } => {
                let mut i0 = [0usize; 3];
                let mut fr = [0.0f64; 3];
                for a in 0..3 {
                    if n[a] == 1 {
                        continue;
                    }
                    let u = ((p[a] - origin[a]) / h - 0.5).clamp(0.0, (n[a] - 1) as f64);
                    let base = (u.floor() as usize).min(n[a] - 2);
                    i0[a] = base;
                    fr[a] = u - base as f64;
                }
                let at = |i: usize, j: usize, k: usize| values[(k * n[1] + j) * n[0] + i];
                let mut acc = 0.0;
                for dk in 0..2 {
                    for dj in 0..2 {
                        for di in 0..2 {
                            let w = (if di == 0 { 1.0 - fr[0] } else { fr[0] })
                                * (if dj == 0 { 1.0 - fr[1] } else { fr[1] })
                                * (if dk == 0 { 1.0 - fr[2] } else { fr[2] });
                            if w != 0.0 {
                                acc += w
                                    * at(
                                        (i0[0] + di).min(n[0] - 1),
                                        (i0[1] + dj).min(n[1] - 1),
                                        (i0[2] + dk).min(n[2] - 1),
                                    );
                            }
                        }
                    }
                }
                acc
            }
        }
    }

    /// Signed field whose positive side is the region enclosed by the
    /// requested surface (fluid network for G1/G2, solid sheet for Solid).
    pub fn level(&self, which: LevelSet, p: [f64; 3]) -> f64 {
        let t = self.c_at(p) / self.l_cell;
        let g = gyroid_g(p, self.l_cell);
        match which {
            LevelSet::G1 => -(t + g),
            LevelSet::G2 => g - t,
            LevelSet::Solid => t - g.abs(),
        }
    }

    pub fn phase_at(&self, p: [f64; 3]) -> Phase {
        let t = self.c_at(p) / self.l_cell;
        let g = gyroid_g(p, self.l_cell);
        if g < -t {
            Phase::Fluid1
        } else if g > t {
            Phase::Fluid2
        } else {
            Phase::Solid
        }
    }

    /// Voxel counts per axis for a given per-cell resolution, so voxels stay
    /// cubic with edge l_cell/resolution.
    /// Voxels per axis at the given per-cell resolution (at least one).
    pub(crate) fn voxel_counts(&self, resolution: usize) -> [usize; 3] {
        let mut nv = [0usize; 3];
        for a in 0..3 {
            let span = self.box_hi[a] - self.box_lo[a];
            nv[a] = ((span * resolution as f64 / self.l_cell).round() as usize).max(1);
        }
        nv
    }
}

/// Per-cell geometric measurements from [`measure_cell`].
#[derive(Debug, Clone)]
pub struct CellMeasure {
    /// Volume fraction of each fluid network.
    pub eps: [f64; 2],
    /// Solid volume fraction; the three fractions sum to 1 exactly.
    pub solid_frac: f64,
    /// Interfacial area of each wall surface over the box [m²].
    pub area_rve: [f64; 2],
    /// Box volume [m³].
    pub volume: f64,
    /// Binomial standard-error estimate for the volume fractions.
    pub std_err: f64,
}

/// Measure fluid/solid volume fractions (stratified midpoint sampling with at
/// least `samples` points) and interfacial areas (isosurface extraction at a
/// fixed 64 voxels per cell).
pub fn measure_cell(spec: &GyroidSpec, samples: usize) -> Result<CellMeasure> {
    measure_cell_with_resolution(spec, samples, AREA_RESOLUTION)
}

/// [`measure_cell`] with an explicit area-extraction resolution, for callers
/// trading accuracy against cost (property sweeps, convergence studies).
pub fn measure_cell_with_resolution(
    spec: &GyroidSpec,
    samples: usize,
    area_resolution: usize,
) -> Result<CellMeasure> {
    if samples < MIN_MEASURE_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "volume sampling needs at least {MIN_MEASURE_SAMPLES} points, got {samples}"
        )));
    }
    if area_resolution < MIN_RESOLUTION {
        return Err(Error::InvalidInput(format!(
            "area resolution {area_resolution} below minimum {MIN_RESOLUTION}"
        )));
    }
    let span: Vec<f64> = (0..3).map(|a| spec.box_hi[a] - spec.box_lo[a]).collect();
    let volume = span.iter().product::<f64>();
    // Near-cubic strata: target spacing from the requested sample count, then
    // ceil per axis so the realized count is at least `samples`.
    let h_target = (volume / samples as f64).cbrt();
    let n: Vec<usize> = span.iter().map(|s| (s / h_target).ceil().max(1.0) as usize).collect();
    let total = n[0] * n[1] * n[2];
    let mut counts = [0u64; 3]; // fluid1, fluid2, solid
    for k in 0..n[2] {
        let z = spec.box_lo[2] + (k as f64 + 0.5) * span[2] / n[2] as f64;
        for j in 0..n[1] {
            let y = spec.box_lo[1] + (j as f64 + 0.5) * span[1] / n[1] as f64;
            for i in 0..n[0] {
                let x = spec.box_lo[0] + (i as f64 + 0.5) * span[0] / n[0] as f64;
                match spec.phase_at([x, y, z]) {
                    Phase::Fluid1 => counts[0] += 1,
                    Phase::Fluid2 => counts[1] += 1,
                    Phase::Solid => counts[2] += 1,
                }
            }
        }
    }
    let eps = [counts[0] as f64 / total as f64, counts[1] as f64 / total as f64];
    let solid_frac = 1.0 - eps[0] - eps[1];
    let std_err = eps
        .iter()
        .chain(std::iter::once(&solid_frac))
        .map(|&p| (p * (1.0 - p) / total as f64).sqrt())
        .fold(0.0, f64::max);

    let mut area_rve = [0.0; 2];
    for (slot, which) in [(0, LevelSet::G1), (1, LevelSet::G2)] {
        let mesh = extract_level_surface(spec, which, area_resolution, false)?;
        area_rve[slot] = mesh.total_area();
    }
    Ok(CellMeasure { eps, solid_frac, area_rve, volume, std_err })
}

fn label_for(spec: &GyroidSpec, which: LevelSet, mesh: &mut TriMesh) {
    match which {
        LevelSet::G1 => mesh.labels = vec![WallSide::Fluid1Side; mesh.triangles.len()],
        LevelSet::G2 => mesh.labels = vec![WallSide::Fluid2Side; mesh.triangles.len()],
        LevelSet::Solid => {
            // The sheet has two faces; tag each triangle by which labyrinth
            // its centroid's g-sign belongs to.
            mesh.labels = mesh
                .triangles
                .iter()
                .map(|t| {
                    let mut c = [0.0; 3];
                    for &v in t {
                        let p = mesh.vertices[v as usize];
                        for a in 0..3 {
                            c[a] += p[a] / 3.0;
                        }
                    }
                    if gyroid_g(c, spec.l_cell) < 0.0 {
                        WallSide::Fluid1Side
                    } else {
                        WallSide::Fluid2Side
                    }
                })
                .collect();
        }
    }
}

fn extract_level_surface(
    spec: &GyroidSpec,
    which: LevelSet,
    resolution: usize,
    closed: bool,
) -> Result<TriMesh> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidInput(format!(
            "resolution {resolution} voxels/cell below minimum {MIN_RESOLUTION}"
        )));
    }
    let nv = spec.voxel_counts(resolution);
    let span: Vec<f64> = (0..3).map(|a| spec.box_hi[a] - spec.box_lo[a]).collect();
    let spacing = [span[0] / nv[0] as f64, span[1] / nv[1] as f64, span[2] / nv[2] as f64];
    let out = march::march_field(
        spec.box_lo,
        nv,
        spacing,
        |x, y, z| spec.level(which, [x, y, z]),
        closed,
    );
    let mut mesh = TriMesh::new(out.vertices, out.triangles);
    label_for(spec, which, &mut mesh);
    Ok(mesh)
}

/// Extract the requested surface as a closed mesh: the zero level set inside
/// the box plus flush caps on the box faces. Triangles wind outward from the
/// enclosed region.
pub fn extract_isosurface(spec: &GyroidSpec, which: LevelSet, resolution: usize) -> Result<TriMesh> {
    extract_level_surface(spec, which, resolution, true)
}

/// Flood-fill connectivity of both fluid networks on the voxel phase grid.
#[derive(Debug, Clone)]
pub struct Connectivity {
    /// Fraction of each fluid's voxels in its largest 6-connected component
    /// (0 when the fluid has no voxels at all).
    pub largest_fraction: [f64; 2],
    /// Design cells (voxel coordinates / resolution) containing stray voxels
    /// outside the largest component, deduplicated, capped at 32 entries.
    pub offending_cells: Vec<[usize; 3]>,
}

/// A fluid network counts as connected when its largest component holds at
/// least this fraction of the phase's voxels. Boundary-clipped slivers on a
/// non-periodic box produce harmless sub-0.2% satellites even for healthy
/// geometry, so exact single-component is deliberately not required.
pub const CONNECTED_FRACTION: f64 = 0.99;

impl Connectivity {
    pub fn both_connected(&self) -> bool {
        self.largest_fraction.iter().all(|&f| f >= CONNECTED_FRACTION)
    }
}

/// Classify voxel centers and flood-fill each fluid phase. With `periodic`,
/// neighbor lookups wrap around the box (use on a single unit cell).
pub fn fluid_connectivity(spec: &GyroidSpec, resolution: usize, periodic: bool) -> Result<Connectivity> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidInput(format!(
            "resolution {resolution} voxels/cell below minimum {MIN_RESOLUTION}"
        )));
    }
    let nv = spec.voxel_counts(resolution);
    let span: Vec<f64> = (0..3).map(|a| spec.box_hi[a] - spec.box_lo[a]).collect();
    let ncell = nv[0] * nv[1] * nv[2];
    let mut phase = vec![0u8; ncell];
    let idx = |i: usize, j: usize, k: usize| (k * nv[1] + j) * nv[0] + i;
    for k in 0..nv[2] {
        let z = spec.box_lo[2] + (k as f64 + 0.5) * span[2] / nv[2] as f64;
        for j in 0..nv[1] {
            let y = spec.box_lo[1] + (j as f64 + 0.5) * span[1] / nv[1] as f64;
            for i in 0..nv[0] {
                let x = spec.box_lo[0] + (i as f64 + 0.5) * span[0] / nv[0] as f64;
                phase[idx(i, j, k)] = match spec.phase_at([x, y, z]) {
                    Phase::Fluid1 => 1,
                    Phase::Fluid2 => 2,
                    Phase::Solid => 0,
                };
            }
        }
    }

    let mut largest_fraction = [0.0; 2];
    let mut offending_cells: Vec<[usize; 3]> = Vec::new();
    let mut comp = vec![0u32; ncell];
    for fluid in 0..2u8 {
        let tag = fluid + 1;
        let total = phase.iter().filter(|&&p| p == tag).count();
        if total == 0 {
            largest_fraction[fluid as usize] = 0.0;
            continue;
        }
        comp.iter_mut().for_each(|c| *c = 0);
        let mut next = 0u32;
        let mut sizes: Vec<usize> = Vec::new();
        let mut queue = VecDeque::new();
        for seed in 0..ncell {
            if phase[seed] != tag || comp[seed] != 0 {
                continue;
            }
            next += 1;
            comp[seed] = next;
            queue.push_back(seed);
            let mut size = 0usize;
            while let Some(cur) = queue.pop_front() {
                size += 1;
                let k = cur / (nv[0] * nv[1]);
                let j = (cur / nv[0]) % nv[1];
                let i = cur % nv[0];
                let coord = [i as isize, j as isize, k as isize];
                for axis in 0..3 {
                    for dir in [-1isize, 1] {
                        let mut c = coord;
                        c[axis] += dir;
                        let n = nv[axis] as isize;
                        if periodic {
                            c[axis] = c[axis].rem_euclid(n);
                        } else if c[axis] < 0 || c[axis] >= n {
                            continue;
                        }
                        let ni = idx(c[0] as usize, c[1] as usize, c[2] as usize);
                        if phase[ni] == tag && comp[ni] == 0 {
                            comp[ni] = next;
                            queue.push_back(ni);
                        }
                    }
                }
            }
            sizes.push(size);
        }
        let best = sizes
            .iter()
            .enumerate()
            .max_by_key(|(_, &s)| s)
            .map(|(c, _)| c as u32 + 1)
            .unwrap();
        largest_fraction[fluid as usize] = sizes[(best - 1) as usize] as f64 / total as f64;
        for v in 0..ncell {
            if phase[v] == tag && comp[v] != best {
                let k = v / (nv[0] * nv[1]);
                let j = (v / nv[0]) % nv[1];
                let i = v % nv[0];
                let cell = [i / resolution, j / resolution, k / resolution];
                if !offending_cells.contains(&cell) {
                    offending_cells.push(cell);
                    if offending_cells.len() >= 32 {
                        return Ok(Connectivity { largest_fraction, offending_cells });
                    }
                }
            }
        }
    }
    Ok(Connectivity { largest_fraction, offending_cells })
}

/// Reconstruct the printable solid for a device design.
///
/// `c_core` holds the local thickness parameter per core cell (same order as
/// `grid.core_cells()`); voxel resolution is per cell edge. The returned part
/// bundles the lattice sheet over the core box with one separator plate per
/// plenum interface, each a closed shell.
///
/// Fails with a geometry error (listing the affected cells) if either fluid
/// network is pinched off, and with a mesh error if the extracted surface is
/// not a closed oriented shell.
pub fn dehomogenize(
    grid: &crate::grid::StructuredGrid,
    c_core: &[f64],
    resolution: usize,
) -> Result<TriMesh> {
    use crate::grid::Region;

    let core = grid.core_cells();
    if c_core.len() != core.len() {
        return Err(Error::InvalidInput(format!(
            "{} thickness values for {} core cells",
            c_core.len(),
            core.len()
        )));
    }
    // Core sub-box in cell indices; tags guarantee a contiguous slab in y.
    let (mut j_lo, mut j_hi) = (usize::MAX, 0usize);
    for &cell in &core {
        let (_, j, _) = grid.coords(cell);
        j_lo = j_lo.min(j);
        j_hi = j_hi.max(j);
    }
    if j_lo > j_hi {
        return Err(Error::InvalidInput("grid has no core cells".into()));
    }
    let ny_core = j_hi - j_lo + 1;
    let h = grid.h;
    let box_lo = [0.0, j_lo as f64 * h, 0.0];
    let box_hi = [grid.nx as f64 * h, (j_hi + 1) as f64 * h, grid.nz as f64 * h];
    let spec = GyroidSpec::new(
        h,
        CField::Cells {
            origin: box_lo,
            n: [grid.nx, ny_core, grid.nz],
            h,
            values: c_core.to_vec(),
        },
        box_lo,
        box_hi,
    )?;

    let conn = fluid_connectivity(&spec, resolution, false)?;
    if !conn.both_connected() {
        let mut cells: Vec<String> = conn
            .offending_cells
            .iter()
            .map(|c| format!("({},{},{})", c[0], c[1] + j_lo, c[2]))
            .collect();
        if cells.is_empty() {
            cells.push("(entire phase)".into());
        }
        return Err(Error::Geometry(format!(
            "fluid network pinched off: largest components hold {:.1}%/{:.1}% of voxels \
             (threshold {:.0}%); affected cells: {}",
            conn.largest_fraction[0] * 100.0,
            conn.largest_fraction[1] * 100.0,
            CONNECTED_FRACTION * 100.0,
            cells.join(" ")
        )));
    }

    let mut part = extract_isosurface(&spec, LevelSet::Solid, resolution)?;
    part.require_closed(1e-12 * h * h)?;

    // Separator plates flush against the core on the plenum side.
    let t = PARTITION_WALL_THICKNESS;
    let below_is_plenum = j_lo > 0
        && matches!(grid.region[grid.idx(0, j_lo - 1, 0)], Region::Fluid1Plenum | Region::Fluid2Plenum);
    let above_is_plenum = j_hi + 1 < grid.ny
        && matches!(grid.region[grid.idx(0, j_hi + 1, 0)], Region::Fluid1Plenum | Region::Fluid2Plenum);
    if below_is_plenum {
        let slab = TriMesh::axis_box(
            [box_lo[0], box_lo[1] - t, box_lo[2]],
            [box_hi[0], box_lo[1], box_hi[2]],
        )
        .with_uniform_label(WallSide::Fluid1Side);
        part.merge(&slab);
    }
    if above_is_plenum {
        let slab = TriMesh::axis_box(
            [box_lo[0], box_hi[1], box_lo[2]],
            [box_hi[0], box_hi[1] + t, box_hi[2]],
        )
        .with_uniform_label(WallSide::Fluid2Side);
        part.merge(&slab);
    }
    Ok(part)
}

/// Mean solid-chord thickness (material traversed by a z-parallel ray) at a
/// set of (x, y) stations, averaging each station over the given relative
/// offsets. Rays that graze an edge are skipped; a station where every ray
/// grazes yields NaN.
pub fn ray_thickness_stations(
    mesh: &TriMesh,
    stations: &[[f64; 2]],
    offsets: &[[f64; 2]],
) -> Vec<f64> {
    let caster = ZRayCaster::new(mesh);
    stations
        .iter()
        .map(|s| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for o in offsets {
                if let Some(t) = caster.solid_thickness(s[0] + o[0], s[1] + o[1]) {
                    sum += t;
                    count += 1;
                }
            }
            if count == 0 {
                f64::NAN
            } else {
                sum / count as f64
            }
        })
        .collect()
}
