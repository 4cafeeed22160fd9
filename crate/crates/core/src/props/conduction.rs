//! Effective thermal conductivity of one phase of a cell by direct
//! numerical homogenization.
//!
//! A unit temperature difference is imposed across the z faces of the
//! voxelized phase region; the lateral faces are periodic and every
//! internal interface with the other phases is adiabatic. The steady
//! conduction problem is a cell-centered finite-volume Laplacian solved
//! with conjugate gradients, and k* follows from the heat entering the
//! hot face. A phase that does not percolate between the two z faces
//! conducts nothing: k* = 0, flagged.

use crate::gyroid::{GyroidSpec, Phase};
use crate::{Error, Result};

/// Minimum voxels per cell edge for a trustworthy k*.
pub const MIN_CONDUCTION_RESOLUTION: usize = 32;

const CG_TOL: f64 = 1e-10;
const CG_MAX_ITERS: usize = 20_000;

#[derive(Debug, Clone, Copy)]
pub struct ConductionResult {
    /// Effective conductivity [W/(m·K)].
    pub k_star: f64,
    /// Whether the phase connects the two isothermal faces; `false`
    /// forces `k_star` = 0.
    pub connected: bool,
    /// Conjugate-gradient iterations spent.
    pub iterations: usize,
    /// Volume fraction of the conducting phase on the voxel grid.
    pub volume_fraction: f64,
}

/// Homogenize the conductivity of `phase` (conductivity `k`) over the
/// spec's box at `resolution` voxels per cell edge.
pub fn conduction_homogenize(
    spec: &GyroidSpec,
    phase: Phase,
    k: f64,
    resolution: usize,
) -> Result<ConductionResult> {
    if resolution < MIN_CONDUCTION_RESOLUTION {
        return Err(Error::InvalidInput(format!(
            "conduction resolution {resolution} below minimum {MIN_CONDUCTION_RESOLUTION}"
        )));
    }
    let n = spec.voxel_counts(resolution);
    let span: Vec<f64> = (0..3).map(|a| spec.box_hi[a] - spec.box_lo[a]).collect();
    let mut mask = vec![false; n[0] * n[1] * n[2]];
    let mut idx = 0;
    for kz in 0..n[2] {
        let z = spec.box_lo[2] + (kz as f64 + 0.5) * span[2] / n[2] as f64;
        for j in 0..n[1] {
            let y = spec.box_lo[1] + (j as f64 + 0.5) * span[1] / n[1] as f64;
            for i in 0..n[0] {
                let x = spec.box_lo[0] + (i as f64 + 0.5) * span[0] / n[0] as f64;
                mask[idx] = spec.phase_at([x, y, z]) == phase;
                idx += 1;
            }
        }
    }
    conduction_on_mask(&mask, n, k)
}

/// The solver behind [`conduction_homogenize`], on an explicit voxel
/// mask (index `i` fastest, then `j`, then `k`). Voxels are cubes; the
/// temperature difference is applied across z.
pub fn conduction_on_mask(mask: &[bool], n: [usize; 3], k: f64) -> Result<ConductionResult> {
    let (nx, ny, nz) = (n[0], n[1], n[2]);
    let total = nx * ny * nz;
    if mask.len() != total {
        return Err(Error::InvalidInput(format!(
            "mask has {} voxels for a {}x{}x{} grid",
            mask.len(),
            nx,
            ny,
            nz
        )));
    }
    if !(k > 0.0) {
        return Err(Error::InvalidInput(format!("conductivity must be positive, got {k}")));
    }
    let nsolid = mask.iter().filter(|&&m| m).count();
    let volume_fraction = nsolid as f64 / total as f64;
    let at = |i: usize, j: usize, kz: usize| (kz * ny + j) * nx + i;

    // Percolation check: flood from the bottom layer (periodic x/y) and
    // see whether the top layer is reached. Unknowns are restricted to
    // components touching a Dirichlet face — free-floating islands have
    // singular sub-problems and carry no flux anyway.
    let mut reach_bottom = vec![false; total];
    let mut reach_top = vec![false; total];
    for (reach, layer) in [(&mut reach_bottom, 0), (&mut reach_top, nz - 1)] {
        let mut stack = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let v = at(i, j, layer);
                if mask[v] {
                    reach[v] = true;
                    stack.push(v);
                }
            }
        }
        while let Some(v) = stack.pop() {
            let (i, j, kz) = (v % nx, (v / nx) % ny, v / (nx * ny));
            let mut push = |w: usize| {
                if mask[w] && !reach[w] {
                    reach[w] = true;
                    stack.push(w);
                }
            };
            push(at((i + 1) % nx, j, kz));
            push(at((i + nx - 1) % nx, j, kz));
            push(at(i, (j + 1) % ny, kz));
            push(at(i, (j + ny - 1) % ny, kz));
            if kz + 1 < nz {
                push(at(i, j, kz + 1));
            }
            if kz > 0 {
                push(at(i, j, kz - 1));
            }
        }
    }
    let percolates = (0..total).any(|v| reach_bottom[v] && reach_top[v]);
    if !percolates {
        return Ok(ConductionResult { k_star: 0.0, connected: false, iterations: 0, volume_fraction });
    }

    // Unknown numbering over voxels attached to either face.
    let mut unknown = vec![u32::MAX; total];
    let mut cells = Vec::new();
    for v in 0..total {
        if reach_bottom[v] || reach_top[v] {
            unknown[v] = cells.len() as u32;
            cells.push(v);
        }
    }
    let nun = cells.len();

    // Dimensionless assembly: the face conductance k·h between equal
    // voxels scales out of the temperature solution entirely, so links
    // have unit weight and Dirichlet half-faces weight 2.
    let mut diag = vec![0.0f64; nun];
    let mut rhs = vec![0.0f64; nun];
    let mut nbr_off = Vec::with_capacity(nun + 1);
    let mut nbrs: Vec<u32> = Vec::new();
    nbr_off.push(0u32);
    for (u, &v) in cells.iter().enumerate() {
        let (i, j, kz) = (v % nx, (v / nx) % ny, v / (nx * ny));
        let mut d = 0.0;
        let mut link = |w: usize, d: &mut f64, nbrs: &mut Vec<u32>| {
            if unknown[w] != u32::MAX {
                nbrs.push(unknown[w]);
                *d += 1.0;
            }
        };
        link(at((i + 1) % nx, j, kz), &mut d, &mut nbrs);
        link(at((i + nx - 1) % nx, j, kz), &mut d, &mut nbrs);
        link(at(i, (j + 1) % ny, kz), &mut d, &mut nbrs);
        link(at(i, (j + ny - 1) % ny, kz), &mut d, &mut nbrs);
        if kz + 1 < nz {
            link(at(i, j, kz + 1), &mut d, &mut nbrs);
        } else {
            d += 2.0; // top Dirichlet T = 0
        }
        if kz > 0 {
            link(at(i, j, kz - 1), &mut d, &mut nbrs);
        } else {
            d += 2.0; // bottom Dirichlet T = 1
            rhs[u] += 2.0;
        }
        diag[u] = d;
        nbr_off.push(nbrs.len() as u32);
    }

    // Jacobi-preconditioned conjugate gradients on A·T = b.
    let matvec = |x: &[f64], out: &mut [f64]| {
        for u in 0..nun {
            let mut acc = diag[u] * x[u];
            for w in nbr_off[u] as usize..nbr_off[u + 1] as usize {
                acc -= x[nbrs[w] as usize];
            }
            out[u] = acc;
        }
    };
    let bnorm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut t = vec![0.0f64; nun];
    let mut r = rhs.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0f64; nun];
    let mut iterations = 0;
    let mut history = Vec::new();
    loop {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        history.push(rnorm);
        if rnorm <= CG_TOL * bnorm {
            break;
        }
        if iterations >= CG_MAX_ITERS {
            let tail: Vec<String> =
                history.iter().rev().take(5).rev().map(|v| format!("{v:.3e}")).collect();
            return Err(Error::SolverDivergence(format!(
                "conduction CG stalled after {CG_MAX_ITERS} iterations; residuals … {}",
                tail.join(", ")
            )));
        }
        matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        for u in 0..nun {
            t[u] += alpha * p[u];
            r[u] -= alpha * ap[u];
        }
        for u in 0..nun {
            z[u] = r[u] / diag[u];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for u in 0..nun {
            p[u] = z[u] + beta * p[u];
        }
        iterations += 1;
    }

    // Heat entering through the hot face, restored to physical units:
    // each bottom half-face passes 2·k·h·(1 − T). With A = nx·ny·h² and
    // the z span nz·h, k* = Φ·(nz·h)/(A·ΔT) = 2k·Σ(1−T)·nz/(nx·ny).
    let mut influx = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let v = at(i, j, 0);
            if unknown[v] != u32::MAX {
                influx += 2.0 * (1.0 - t[unknown[v] as usize]);
            }
        }
    }
    let k_star = k * influx * nz as f64 / (nx as f64 * ny as f64);
    Ok(ConductionResult { k_star, connected: true, iterations, volume_fraction })
}
