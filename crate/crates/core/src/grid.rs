//! Uniform structured grids for the effective (homogenized) device model.
//!
//! Cells are cubes of edge `h` indexed `(i, j, k)` with `i` fastest. Each cell
//! carries a region tag: `Core` cells hold the porous gyroid continuum and the
//! design variable; plenum cells are pure fluid and only route flow to/from
//! the core. Inlet/outlet boundary faces are tagged per fluid, which is what
//! distinguishes the two streams — both fluids are solved over the whole box
//! as interpenetrating continua.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of fluid streams in the model. Fixed by the two-level-set
/// construction: each gyroid level set bounds one fluid network.
pub const FLUID_COUNT: usize = 2;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Region {
    /// Porous core: carries the design variable and all effective properties.
    Core,
    /// Pure-fluid distribution volume serving fluid 1.
    Fluid1Plenum,
    /// Pure-fluid distribution volume serving fluid 2.
    Fluid2Plenum,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Which end of the axis a boundary face sits on.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
pub enum Side {
    Lo,
    Hi,
}

impl Side {
    /// Outward normal sign along the face's axis.
    pub fn sign(self) -> f64 {
        match self {
            Side::Lo => -1.0,
            Side::Hi => 1.0,
        }
    }
}

/// A tagged boundary face, identified by its interior cell and orientation.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
pub struct BoundaryFace {
    pub cell: usize,
    pub axis: Axis,
    pub side: Side,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructuredGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Cell edge length [m].
    pub h: f64,
    /// Region tag per cell, `i` fastest.
    pub region: Vec<Region>,
    /// Inlet faces per fluid (uniform inflow is prescribed here).
    pub inlets: [Vec<BoundaryFace>; FLUID_COUNT],
    /// Outlet faces per fluid (reference pressure is prescribed here).
    pub outlets: [Vec<BoundaryFace>; FLUID_COUNT],
}

impl StructuredGrid {
    /// Grid with every cell tagged `Core` and no face tags; callers add tags
    /// (or use it for geometry-only work where routing is irrelevant).
    pub fn all_core(nx: usize, ny: usize, nz: usize, h: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidInput("grid dimensions must be >= 1".into()));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidInput(format!("cell size must be positive, got {h}")));
        }
        Ok(StructuredGrid {
            nx,
            ny,
            nz,
            h,
            region: vec![Region::Core; nx * ny * nz],
            inlets: [Vec::new(), Vec::new()],
            outlets: [Vec::new(), Vec::new()],
        })
    }

    /// Default counterflow device: a `core_nx × core_ny × core_nz` porous core
    /// with `plenum_ny` rows of pure-fluid plenum added on both ends of the
    /// flow (y) axis. Fluid 1 enters at the bottom boundary and leaves at the
    /// top; fluid 2 runs the other way. Inlet/outlet patches are centered in
    /// `x` and `inlet_width` cells wide, so the plenums actually distribute
    /// the stream across the core width.
    pub fn counterflow_device(
        core_nx: usize,
        core_ny: usize,
        core_nz: usize,
        plenum_ny: usize,
        inlet_width: usize,
        h: f64,
    ) -> Result<Self> {
        let ny = core_ny + 2 * plenum_ny;
        let mut grid = Self::all_core(core_nx, ny, core_nz, h)?;
        for k in 0..core_nz {
            for j in 0..ny {
                for i in 0..core_nx {
                    let idx = grid.idx(i, j, k);
                    grid.region[idx] = if j < plenum_ny {
                        Region::Fluid1Plenum
                    } else if j >= plenum_ny + core_ny {
                        Region::Fluid2Plenum
                    } else {
                        Region::Core
                    };
                }
            }
        }
        let w = inlet_width.clamp(1, core_nx);
        let i0 = (core_nx - w) / 2;
        for k in 0..core_nz {
            for i in i0..i0 + w {
                let bottom = BoundaryFace {
                    cell: grid.idx(i, 0, k),
                    axis: Axis::Y,
                    side: Side::Lo,
                };
                let top = BoundaryFace {
                    cell: grid.idx(i, ny - 1, k),
                    axis: Axis::Y,
                    side: Side::Hi,
                };
                grid.inlets[0].push(bottom);
                grid.outlets[0].push(top);
                grid.inlets[1].push(top);
                grid.outlets[1].push(bottom);
            }
        }
        grid.validate_for_solve()?;
        Ok(grid)
    }

    /// 1D core channel along y (nx = nz = 1), all cells porous; fluid 1 flows
    /// +y and fluid 2 −y. Used by the Darcy-limit and counterflow oracles.
    pub fn channel_1d(n_cells: usize, h: f64) -> Result<Self> {
        let mut grid = Self::all_core(1, n_cells, 1, h)?;
        let bottom = BoundaryFace {
            cell: grid.idx(0, 0, 0),
            axis: Axis::Y,
            side: Side::Lo,
        };
        let top = BoundaryFace {
            cell: grid.idx(0, n_cells - 1, 0),
            axis: Axis::Y,
            side: Side::Hi,
        };
        grid.inlets[0].push(bottom);
        grid.outlets[0].push(top);
        grid.inlets[1].push(top);
        grid.outlets[1].push(bottom);
        grid.validate_for_solve()?;
        Ok(grid)
    }

    pub fn ncells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny && k < self.nz);
        (k * self.ny + j) * self.nx + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.nx;
        let j = (idx / self.nx) % self.ny;
        let k = idx / (self.nx * self.ny);
        (i, j, k)
    }

    /// Physical cell-center position [m], origin at the domain corner.
    pub fn cell_center(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.coords(idx);
        [
            (i as f64 + 0.5) * self.h,
            (j as f64 + 0.5) * self.h,
            (k as f64 + 0.5) * self.h,
        ]
    }

    /// Neighbor cell across the given face, `None` at the domain boundary.
    pub fn neighbor(&self, idx: usize, axis: Axis, side: Side) -> Option<usize> {
        let (i, j, k) = self.coords(idx);
        let (n, v) = match axis {
            Axis::X => (self.nx, i),
            Axis::Y => (self.ny, j),
            Axis::Z => (self.nz, k),
        };
        let v2 = match side {
            Side::Lo => v.checked_sub(1)?,
            Side::Hi => {
                if v + 1 >= n {
                    return None;
                }
                v + 1
            }
        };
        Some(match axis {
            Axis::X => self.idx(v2, j, k),
            Axis::Y => self.idx(i, v2, k),
            Axis::Z => self.idx(i, j, v2),
        })
    }

    pub fn is_core(&self, idx: usize) -> bool {
        self.region[idx] == Region::Core
    }

    /// Indices of all core cells, in storage order.
    pub fn core_cells(&self) -> Vec<usize> {
        (0..self.ncells()).filter(|&c| self.is_core(c)).collect()
    }

    /// Map from cell index to core-cell ordinal (dense design index).
    pub fn core_index_map(&self) -> Vec<Option<usize>> {
        let mut map = vec![None; self.ncells()];
        for (ord, cell) in self.core_cells().into_iter().enumerate() {
            map[cell] = Some(ord);
        }
        map
    }

    /// Axes along which the grid actually extends (n > 1). Degenerate axes are
    /// treated as symmetry directions by the solver.
    pub fn active_axes(&self) -> Vec<Axis> {
        let mut axes = Vec::new();
        if self.nx > 1 {
            axes.push(Axis::X);
        }
        if self.ny > 1 {
            axes.push(Axis::Y);
        }
        if self.nz > 1 {
            axes.push(Axis::Z);
        }
        axes
    }

    /// Face tags must sit on the boundary; each fluid needs at least one inlet
    /// and one outlet; the core must be a single 6-connected block.
    pub fn validate_for_solve(&self) -> Result<()> {
        for (fluid, faces) in self.inlets.iter().chain(self.outlets.iter()).enumerate() {
            for f in faces {
                if f.cell >= self.ncells() {
                    return Err(Error::InvalidInput(format!(
                        "face tag references cell {} beyond grid", f.cell
                    )));
                }
                if self.neighbor(f.cell, f.axis, f.side).is_some() {
                    return Err(Error::InvalidInput(format!(
                        "face tag (cell {}, {:?} {:?}) is not on the domain boundary (tag set {fluid})",
                        f.cell, f.axis, f.side
                    )));
                }
            }
        }
        for fluid in 0..FLUID_COUNT {
            if self.inlets[fluid].is_empty() || self.outlets[fluid].is_empty() {
                return Err(Error::InvalidInput(format!(
                    "fluid {} needs at least one inlet and one outlet face",
                    fluid + 1
                )));
            }
        }
        let core = self.core_cells();
        if core.is_empty() {
            return Err(Error::InvalidInput("grid has no core cells".into()));
        }
        if !self.region_connected(&core) {
            return Err(Error::InvalidInput("core cells do not form a single connected block".into()));
        }
        Ok(())
    }

    fn region_connected(&self, cells: &[usize]) -> bool {
        let mut member = vec![false; self.ncells()];
        for &c in cells {
            member[c] = true;
        }
        let mut seen = vec![false; self.ncells()];
        let mut stack = vec![cells[0]];
        seen[cells[0]] = true;
        let mut count = 0usize;
        while let Some(c) = stack.pop() {
            count += 1;
            for axis in Axis::ALL {
                for side in [Side::Lo, Side::Hi] {
                    if let Some(n) = self.neighbor(c, axis, side) {
                        if member[n] && !seen[n] {
                            seen[n] = true;
                            stack.push(n);
                        }
                    }
                }
            }
        }
        count == cells.len()
    }
}

/// One value per cell with a unit annotation carried for serialization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalarField {
    pub unit: String,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn new(unit: &str, data: Vec<f64>) -> Self {
        ScalarField { unit: unit.to_string(), data }
    }

    pub fn constant(unit: &str, value: f64, len: usize) -> Self {
        Self::new(unit, vec![value; len])
    }

    pub fn validate(&self, expected_len: usize) -> Result<()> {
        if self.data.len() != expected_len {
            return Err(Error::InvalidInput(format!(
                "scalar field length {} does not match cell count {}",
                self.data.len(),
                expected_len
            )));
        }
        if let Some(v) = self.data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("scalar field contains non-finite value {v}")));
        }
        Ok(())
    }
}

/// One 3-vector per cell; degenerate axes simply carry zeros.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VectorField {
    pub unit: String,
    pub data: Vec<[f64; 3]>,
}

impl VectorField {
    pub fn new(unit: &str, data: Vec<[f64; 3]>) -> Self {
        VectorField { unit: unit.to_string(), data }
    }

    pub fn zeros(unit: &str, len: usize) -> Self {
        Self::new(unit, vec![[0.0; 3]; len])
    }

    pub fn validate(&self, expected_len: usize) -> Result<()> {
        if self.data.len() != expected_len {
            return Err(Error::InvalidInput(format!(
                "vector field length {} does not match cell count {}",
                self.data.len(),
                expected_len
            )));
        }
        if self.data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("vector field contains non-finite value".into()));
        }
        Ok(())
    }

    /// Cell speed |u|.
    pub fn magnitude(&self, idx: usize) -> f64 {
        let [x, y, z] = self.data[idx];
        (x * x + y * y + z * z).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = StructuredGrid::all_core(4, 3, 2, 0.1).unwrap();
        for idx in 0..g.ncells() {
            let (i, j, k) = g.coords(idx);
            assert_eq!(g.idx(i, j, k), idx);
        }
    }

    #[test]
    fn neighbors_respect_boundaries() {
        let g = StructuredGrid::all_core(3, 3, 1, 1.0).unwrap();
        let corner = g.idx(0, 0, 0);
        assert_eq!(g.neighbor(corner, Axis::X, Side::Lo), None);
        assert_eq!(g.neighbor(corner, Axis::X, Side::Hi), Some(g.idx(1, 0, 0)));
        assert_eq!(g.neighbor(corner, Axis::Z, Side::Hi), None); // nz == 1
    }

    #[test]
    fn counterflow_builder_tags_and_validates() {
        let g = StructuredGrid::counterflow_device(8, 8, 1, 2, 2, 4.6e-3).unwrap();
        assert_eq!(g.ncells(), 8 * 12);
        assert_eq!(g.core_cells().len(), 64);
        assert_eq!(g.region[g.idx(0, 0, 0)], Region::Fluid1Plenum);
        assert_eq!(g.region[g.idx(0, 11, 0)], Region::Fluid2Plenum);
        assert_eq!(g.region[g.idx(4, 5, 0)], Region::Core);
        // centered 2-wide patches
        assert_eq!(g.inlets[0].len(), 2);
        assert_eq!(g.inlets[0][0].cell, g.idx(3, 0, 0));
        assert_eq!(g.inlets[1][0].cell, g.idx(3, 11, 0));
    }

    #[test]
    fn face_tag_off_boundary_rejected() {
        let mut g = StructuredGrid::all_core(3, 3, 1, 1.0).unwrap();
        g.inlets[0].push(BoundaryFace { cell: g.idx(1, 1, 0), axis: Axis::X, side: Side::Lo });
        g.outlets[0].push(BoundaryFace { cell: g.idx(2, 2, 0), axis: Axis::X, side: Side::Hi });
        g.inlets[1].push(BoundaryFace { cell: g.idx(0, 0, 0), axis: Axis::Y, side: Side::Lo });
        g.outlets[1].push(BoundaryFace { cell: g.idx(2, 0, 0), axis: Axis::X, side: Side::Hi });
        assert!(g.validate_for_solve().is_err());
    }

    #[test]
    fn active_axes_drop_degenerate_dims() {
        let g = StructuredGrid::all_core(1, 5, 1, 1.0).unwrap();
        assert_eq!(g.active_axes(), vec![Axis::Y]);
    }

    #[test]
    fn field_validation_catches_bad_lengths_and_nan() {
        let f = ScalarField::new("K", vec![1.0, 2.0]);
        assert!(f.validate(3).is_err());
        let f = ScalarField::new("K", vec![1.0, f64::NAN]);
        assert!(f.validate(2).is_err());
    }
}
