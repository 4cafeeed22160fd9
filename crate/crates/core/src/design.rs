//! The wall-thickness design field and its density filter.
//!
//! The raw design variable γ lives one-per-core-cell in [0,1]. A linear cone
//! filter produces the smoothed γ̂ that all effective properties consume, and
//! the same weight matrix (transposed exactly, not re-applied) carries
//! objective gradients back from γ̂-space to γ-space. γ̂ then maps affinely to
//! the level-set offset c ∈ [c_min, c_max] that controls wall thickness.

use crate::grid::StructuredGrid;
use crate::{Error, Result};

/// Sparse cone-weight filter over the core cells of a grid.
///
/// Row `e` holds the normalized weights of every core cell within the filter
/// radius of cell `e`'s center: `w_ej = max(0, r − d(e,j)) / Σ_j (·)`. Support
/// is truncated at the core boundary (no padding), so rows always sum to one
/// and constants are fixed points of the filter.
#[derive(Clone, Debug)]
pub struct ConeFilter {
    radius: f64,
    rows: Vec<Vec<(usize, f64)>>,
}

impl ConeFilter {
    /// Build the filter for a grid's core cells.
    ///
    /// A radius at or below `h/2` reaches no neighboring cell center, making
    /// the filter the identity; that is almost always a configuration mistake
    /// and is rejected unless `allow_identity` is set.
    pub fn build(grid: &StructuredGrid, radius: f64, allow_identity: bool) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput(format!("filter radius must be positive, got {radius}")));
        }
        let core = grid.core_cells();
        if core.is_empty() {
            return Err(Error::InvalidInput("cannot build a filter on a grid with no core cells".into()));
        }
        if radius <= grid.h / 2.0 {
            if !allow_identity {
                return Err(Error::InvalidInput(format!(
                    "filter radius {radius} <= h/2 = {} is degenerate (identity filter); \
                     pass the identity override to accept it",
                    grid.h / 2.0
                )));
            }
            let rows = (0..core.len()).map(|e| vec![(e, 1.0)]).collect();
            return Ok(ConeFilter { radius, rows });
        }

        // Candidate neighbors live within ceil(r/h) index steps along each axis.
        let reach = (radius / grid.h).ceil() as i64;
        let core_map = grid.core_index_map();
        let mut rows = Vec::with_capacity(core.len());
        for &cell_e in &core {
            let ce = grid.cell_center(cell_e);
            let (ei, ej, ek) = grid.coords(cell_e);
            let mut row: Vec<(usize, f64)> = Vec::new();
            let mut total = 0.0;
            for dk in -reach..=reach {
                let k = ek as i64 + dk;
                if k < 0 || k >= grid.nz as i64 {
                    continue;
                }
                for dj in -reach..=reach {
                    let j = ej as i64 + dj;
                    if j < 0 || j >= grid.ny as i64 {
                        continue;
                    }
                    for di in -reach..=reach {
                        let i = ei as i64 + di;
                        if i < 0 || i >= grid.nx as i64 {
                            continue;
                        }
                        let cell_j = grid.idx(i as usize, j as usize, k as usize);
                        let Some(ord_j) = core_map[cell_j] else { continue };
                        let cj = grid.cell_center(cell_j);
                        let d = ((ce[0] - cj[0]).powi(2)
                            + (ce[1] - cj[1]).powi(2)
                            + (ce[2] - cj[2]).powi(2))
                        .sqrt();
                        let w = radius - d;
                        if w > 0.0 {
                            row.push((ord_j, w));
                            total += w;
                        }
                    }
                }
            }
            for (_, w) in &mut row {
                *w /= total;
            }
            rows.push(row);
        }
        Ok(ConeFilter { radius, rows })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn ncore(&self) -> usize {
        self.rows.len()
    }

    /// Forward application: γ̂ = F γ.
    pub fn apply(&self, gamma: &[f64]) -> Result<Vec<f64>> {
        self.check_len(gamma.len())?;
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(j, w)| w * gamma[j]).sum())
            .collect())
    }

    /// Exact transpose application: dJ/dγ = Fᵀ (dJ/dγ̂).
    ///
    /// F is not symmetric near the core boundary (per-row normalization), so
    /// this scatters row weights into columns rather than re-applying `apply`.
    pub fn apply_transpose(&self, sens: &[f64]) -> Result<Vec<f64>> {
        self.check_len(sens.len())?;
        let mut out = vec![0.0; self.rows.len()];
        for (e, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                out[j] += w * sens[e];
            }
        }
        Ok(out)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.rows.len() {
            return Err(Error::InvalidInput(format!(
                "field length {len} does not match the filter's {} core cells",
                self.rows.len()
            )));
        }
        Ok(())
    }
}

/// Filter a raw design field in one shot (builds the weight matrix internally;
/// hold a [`ConeFilter`] or [`DesignField`] instead when filtering repeatedly).
pub fn apply_filter(gamma: &[f64], grid: &StructuredGrid, radius: f64) -> Result<Vec<f64>> {
    ConeFilter::build(grid, radius, false)?.apply(gamma)
}

/// Pull a γ̂-space gradient back to γ-space through the exact filter transpose.
pub fn filter_chain_rule(
    d_j_d_gamma_hat: &[f64],
    grid: &StructuredGrid,
    radius: f64,
) -> Result<Vec<f64>> {
    ConeFilter::build(grid, radius, false)?.apply_transpose(d_j_d_gamma_hat)
}

/// Affine map from the filtered design variable to the level-set offset:
/// c = c_min + γ̂ (c_max − c_min).
pub fn gamma_hat_to_c(gamma_hat: &[f64], c_min: f64, c_max: f64) -> Vec<f64> {
    gamma_hat.iter().map(|&g| c_min + g * (c_max - c_min)).collect()
}

/// Raw design variable, its filtered counterpart, and the thickness map, kept
/// consistent as a unit.
#[derive(Clone, Debug)]
pub struct DesignField {
    gamma: Vec<f64>,
    gamma_hat: Vec<f64>,
    filter: ConeFilter,
    pub c_min: f64,
    pub c_max: f64,
}

impl DesignField {
    pub fn new(
        grid: &StructuredGrid,
        gamma: Vec<f64>,
        filter_radius: f64,
        c_min: f64,
        c_max: f64,
        allow_identity_filter: bool,
    ) -> Result<Self> {
        if !(c_min < c_max) {
            return Err(Error::InvalidInput(format!(
                "thickness bounds must satisfy c_min < c_max, got [{c_min}, {c_max}]"
            )));
        }
        let filter = ConeFilter::build(grid, filter_radius, allow_identity_filter)?;
        let mut field = DesignField {
            gamma: Vec::new(),
            gamma_hat: Vec::new(),
            filter,
            c_min,
            c_max,
        };
        field.set_gamma(gamma)?;
        Ok(field)
    }

    /// Uniform initial design (the usual γ = 0.5 starting point).
    pub fn uniform(
        grid: &StructuredGrid,
        value: f64,
        filter_radius: f64,
        c_min: f64,
        c_max: f64,
    ) -> Result<Self> {
        let n = grid.core_cells().len();
        Self::new(grid, vec![value; n], filter_radius, c_min, c_max, false)
    }

    /// Replace γ and refilter. Values must already satisfy the box constraint.
    pub fn set_gamma(&mut self, gamma: Vec<f64>) -> Result<()> {
        if let Some(v) = gamma.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!("design variable {v} outside [0,1]")));
        }
        self.gamma_hat = self.filter.apply(&gamma)?;
        self.gamma = gamma;
        Ok(())
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn gamma_hat(&self) -> &[f64] {
        &self.gamma_hat
    }

    pub fn filter(&self) -> &ConeFilter {
        &self.filter
    }

    /// Level-set offsets per core cell for the current design.
    pub fn c_values(&self) -> Vec<f64> {
        gamma_hat_to_c(&self.gamma_hat, self.c_min, self.c_max)
    }

    /// Re-applies the stored filter and checks it reproduces γ̂ to round-off
    /// (guards against external mutation of the buffers).
    pub fn validate(&self) -> Result<()> {
        let fresh = self.filter.apply(&self.gamma)?;
        let ok = fresh
            .iter()
            .zip(&self.gamma_hat)
            .all(|(a, b)| (a - b).abs() <= 1e-14 * b.abs().max(1.0));
        if !ok {
            return Err(Error::InvalidInput("stored gamma_hat is stale; refilter after mutating gamma".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn line_grid(n: usize) -> StructuredGrid {
        StructuredGrid::all_core(n, 1, 1, 1.0).unwrap()
    }

    #[test]
    fn impulse_smoothing_matches_hand_weights() {
        // Cone weights for r = 1.5h: center 1.5, distance-h neighbors 0.5,
        // farther cells 0. Interior rows normalize by 2.5, the two boundary
        // rows by 2.0.
        let grid = line_grid(5);
        let gamma = vec![0.0, 0.0, 1.0, 0.0, 0.0];
        let hat = apply_filter(&gamma, &grid, 1.5).unwrap();
        let expect = [0.0, 0.2, 0.6, 0.2, 0.0];
        for (h, e) in hat.iter().zip(expect) {
            assert_relative_eq!(h, &e, max_relative = 1e-14);
        }
    }

    #[test]
    fn constant_field_is_fixed_point() {
        let grid = StructuredGrid::all_core(5, 5, 1, 1.0).unwrap();
        for radius in [0.8, 1.5, 2.3, 4.0] {
            let hat = apply_filter(&vec![0.5; 25], &grid, radius).unwrap();
            for v in hat {
                assert_relative_eq!(v, 0.5, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn degenerate_radius_needs_override() {
        let grid = line_grid(4);
        assert!(ConeFilter::build(&grid, 0.5, false).is_err());
        let identity = ConeFilter::build(&grid, 0.5, true).unwrap();
        let gamma = vec![0.1, 0.9, 0.3, 0.7];
        assert_eq!(identity.apply(&gamma).unwrap(), gamma);
        assert_eq!(identity.apply_transpose(&gamma).unwrap(), gamma);
    }

    #[test]
    fn transpose_matches_explicit_matrix_on_5x5() {
        let grid = StructuredGrid::all_core(5, 5, 1, 1.0).unwrap();
        let filter = ConeFilter::build(&grid, 1.8, false).unwrap();
        let n = filter.ncore();
        // Assemble F column-by-column from unit vectors, then transpose it.
        let mut f = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e_j = vec![0.0; n];
            e_j[j] = 1.0;
            let col = filter.apply(&e_j).unwrap();
            for i in 0..n {
                f[i][j] = col[i];
            }
        }
        let sens: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let via_filter = filter.apply_transpose(&sens).unwrap();
        for j in 0..n {
            let explicit: f64 = (0..n).map(|i| f[i][j] * sens[i]).sum();
            assert_relative_eq!(via_filter[j], explicit, max_relative = 1e-13, epsilon = 1e-15);
        }
        // Rows of F sum to one, so a constant gradient maps to column sums.
        let ones = filter.apply_transpose(&vec![1.0; n]).unwrap();
        for j in 0..n {
            let colsum: f64 = (0..n).map(|i| f[i][j]).sum();
            assert_relative_eq!(ones[j], colsum, max_relative = 1e-13);
        }
    }

    #[test]
    fn adjoint_identity_on_random_4x4() {
        let grid = StructuredGrid::all_core(4, 4, 1, 1.0).unwrap();
        let filter = ConeFilter::build(&grid, 1.6, false).unwrap();
        // Deterministic pseudo-random fields; 1e-12 relative per contract.
        let mut state = 88172645463325252u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..25 {
            let x: Vec<f64> = (0..16).map(|_| next()).collect();
            let y: Vec<f64> = (0..16).map(|_| next()).collect();
            let fx = filter.apply(&x).unwrap();
            let fty = filter.apply_transpose(&y).unwrap();
            let lhs: f64 = fx.iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(&fty).map(|(a, b)| a * b).sum();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn gamma_hat_to_c_hits_documented_endpoints() {
        let c = gamma_hat_to_c(&[0.0, 0.5, 1.0], 1.426e-3, 3.75e-3);
        assert_relative_eq!(c[0], 1.426e-3, max_relative = 1e-15);
        assert_relative_eq!(c[1], 2.588e-3, max_relative = 1e-12);
        assert_relative_eq!(c[2], 3.75e-3, max_relative = 1e-15);
    }

    #[test]
    fn design_field_keeps_hat_consistent() {
        let grid = StructuredGrid::all_core(4, 4, 1, 1.0).unwrap();
        let mut d = DesignField::uniform(&grid, 0.5, 1.5, 1.426e-3, 3.75e-3).unwrap();
        d.validate().unwrap();
        d.set_gamma((0..16).map(|i| i as f64 / 15.0).collect()).unwrap();
        d.validate().unwrap();
        assert!(d.gamma_hat().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(DesignField::uniform(&grid, 1.5, 1.5, 1.426e-3, 3.75e-3).is_err());
    }

    proptest! {
        #[test]
        fn filter_is_linear_and_bounded(
            seed in any::<u64>(),
            a in -2.0f64..2.0,
            b in -2.0f64..2.0,
        ) {
            let grid = StructuredGrid::all_core(4, 3, 1, 1.0).unwrap();
            let filter = ConeFilter::build(&grid, 1.7, false).unwrap();
            let mut s = seed | 1;
            let mut next = move || {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64
            };
            let g1: Vec<f64> = (0..12).map(|_| next()).collect();
            let g2: Vec<f64> = (0..12).map(|_| next()).collect();
            let combo: Vec<f64> = g1.iter().zip(&g2).map(|(x, y)| a * x + b * y).collect();
            let lhs = filter.apply(&combo).unwrap();
            let f1 = filter.apply(&g1).unwrap();
            let f2 = filter.apply(&g2).unwrap();
            for i in 0..12 {
                prop_assert!((lhs[i] - (a * f1[i] + b * f2[i])).abs() < 1e-12);
            }
            // Bounds preservation on the in-range field g1.
            let lo = g1.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = g1.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for v in f1 {
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }
}
