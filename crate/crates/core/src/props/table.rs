//! The sample table that property fitting consumes: one row per
//! (thickness, flow rate) cell-level simulation, whether imported from
//! real RVE runs or produced by the synthetic generator.

use crate::io::csv::{read_csv, write_csv_with_meta};
use crate::materials::Materials;
use crate::{Error, Result};

use serde::{Deserialize, Serialize};
use std::path::Path;

/// Inlet temperature band all table temperatures must respect [K].
pub const T_BAND: (f64, f64) = (293.15, 333.15);

/// Exact column set of the on-disk table.
pub const TABLE_HEADER: [&str; 8] =
    ["c_m", "Vdot_m3s", "dp_Pa", "Q_W", "Tw_K", "Ti_K", "A_m2", "Vf_m3"];

/// One cell-level simulation result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RveSample {
    /// Level-set thickness parameter [m].
    pub c: f64,
    /// Volumetric flow rate through the cell [m³/s].
    pub vdot: f64,
    /// Pressure drop across the cell [Pa].
    pub dp: f64,
    /// Wall→fluid heat-exchange rate [W].
    pub q: f64,
    /// Volume-averaged wall temperature [K].
    pub t_w: f64,
    /// Volume-averaged fluid temperature [K].
    pub t_i: f64,
    /// Wall–fluid interfacial area [m²].
    pub a_rve: f64,
    /// Fluid volume within the cell [m³].
    pub v_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Measured,
    Synthetic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RveSampleTable {
    pub l_cell: f64,
    pub materials: Materials,
    pub provenance: Provenance,
    pub samples: Vec<RveSample>,
}

impl RveSampleTable {
    /// Check the physical invariants row by row; errors name the
    /// offending 1-based row.
    pub fn validate(&self) -> Result<()> {
        if !(self.l_cell > 0.0) {
            return Err(Error::InvalidInput(format!(
                "cell size must be positive, got {}",
                self.l_cell
            )));
        }
        let vcell = self.l_cell.powi(3);
        for (i, s) in self.samples.iter().enumerate() {
            let row = i + 1;
            if s.vdot > 0.0 && !(s.dp > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "row {row}: pressure drop {} must be positive for flow rate {}",
                    s.dp, s.vdot
                )));
            }
            for (name, t) in [("Tw_K", s.t_w), ("Ti_K", s.t_i)] {
                if !(T_BAND.0..=T_BAND.1).contains(&t) {
                    return Err(Error::InvalidInput(format!(
                        "row {row}: {name} = {t} outside inlet band [{}, {}]",
                        T_BAND.0, T_BAND.1
                    )));
                }
            }
            if s.v_f > vcell * (1.0 + 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "row {row}: fluid volume {} exceeds the cell volume {vcell}",
                    s.v_f
                )));
            }
            if !(s.c > 0.0) || !(s.a_rve > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "row {row}: thickness and interfacial area must be positive"
                )));
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let m = &self.materials;
        let prov = match self.provenance {
            Provenance::Measured => "MEASURED",
            Provenance::Synthetic => "SYNTHETIC",
        };
        let l_cell = self.l_cell.to_string();
        let (rho_f, mu_f, cp_f, k_f) = (
            m.fluid.rho.to_string(),
            m.fluid.mu.to_string(),
            m.fluid.cp.to_string(),
            m.fluid.k.to_string(),
        );
        let (rho_s, cp_s, k_s) =
            (m.solid.rho.to_string(), m.solid.cp.to_string(), m.solid.k.to_string());
        let meta: Vec<(&str, &str)> = vec![
            ("L_cell_m", &l_cell),
            ("provenance", prov),
            ("rho_f", &rho_f),
            ("mu_f", &mu_f),
            ("cp_f", &cp_f),
            ("k_f", &k_f),
            ("rho_s", &rho_s),
            ("cp_s", &cp_s),
            ("k_s", &k_s),
        ];
        let rows: Vec<Vec<f64>> = self
            .samples
            .iter()
            .map(|s| vec![s.c, s.vdot, s.dp, s.q, s.t_w, s.t_i, s.a_rve, s.v_f])
            .collect();
        write_csv_with_meta(path, &meta, &TABLE_HEADER, &rows)
    }

    /// Read and validate a table file. Schema problems (wrong columns,
    /// malformed rows, broken invariants) all surface as invalid-input
    /// errors naming what and where.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let data = read_csv(path)?;
        if data.header != TABLE_HEADER {
            return Err(Error::InvalidInput(format!(
                "{}: header [{}] does not match the required [{}]",
                path.display(),
                data.header.join(", "),
                TABLE_HEADER.join(", ")
            )));
        }
        let meta_get = |key: &str| -> Result<f64> {
            data.meta
                .iter()
                .find(|(k, _)| k == key)
                .ok_or_else(|| {
                    Error::InvalidInput(format!("{}: missing '# {key} = …' line", path.display()))
                })?
                .1
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("{}: '{key}' is not a number", path.display())))
        };
        let provenance = match data.meta.iter().find(|(k, _)| k == "provenance") {
            Some((_, v)) if v == "MEASURED" => Provenance::Measured,
            Some((_, v)) if v == "SYNTHETIC" => Provenance::Synthetic,
            Some((_, v)) => {
                return Err(Error::InvalidInput(format!(
                    "{}: provenance '{v}' is neither MEASURED nor SYNTHETIC",
                    path.display()
                )))
            }
            None => Provenance::Measured,
        };
        let materials = Materials {
            fluid: crate::materials::FluidProps {
                rho: meta_get("rho_f")?,
                mu: meta_get("mu_f")?,
                cp: meta_get("cp_f")?,
                k: meta_get("k_f")?,
            },
            solid: crate::materials::SolidProps {
                rho: meta_get("rho_s")?,
                cp: meta_get("cp_s")?,
                k: meta_get("k_s")?,
            },
        };
        let samples = data
            .rows
            .iter()
            .map(|r| RveSample {
                c: r[0],
                vdot: r[1],
                dp: r[2],
                q: r[3],
                t_w: r[4],
                t_i: r[5],
                a_rve: r[6],
                v_f: r[7],
            })
            .collect();
        let table =
            Self { l_cell: meta_get("L_cell_m")?, materials, provenance, samples };
        table.validate()?;
        Ok(table)
    }

    /// Distinct thickness values in ascending order.
    pub fn thickness_levels(&self) -> Vec<f64> {
        let mut cs: Vec<f64> = self.samples.iter().map(|s| s.c).collect();
        cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cs.dedup();
        cs
    }
}

/// Effective heat-transfer coefficient of one sample:
/// h* = Q / (A · (T_w − T_i)), positive for wall→fluid heating.
pub fn compute_h_star(s: &RveSample) -> Result<f64> {
    let dt = s.t_w - s.t_i;
    if dt.abs() <= 1e-9 {
        return Err(Error::InvalidInput(format!(
            "wall/fluid temperature difference {dt:e} K is too small to define h*"
        )));
    }
    if !(s.a_rve > 0.0) {
        return Err(Error::InvalidInput(format!(
            "interfacial area must be positive, got {}",
            s.a_rve
        )));
    }
    Ok(s.q / (s.a_rve * dt))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RveSample {
        RveSample {
            c: 2e-3,
            vdot: 1e-7,
            dp: 10.0,
            q: 1.0,
            t_w: 313.15,
            t_i: 311.15,
            a_rve: 1e-4,
            v_f: 3e-8,
        }
    }

    #[test]
    fn h_star_arithmetic() {
        // Q = 1 W over A = 1e-4 m² and ΔT = 2 K
        assert!((compute_h_star(&sample()).unwrap() - 5000.0).abs() < 1e-9);

        let mut zero_q = sample();
        zero_q.q = 0.0;
        assert_eq!(compute_h_star(&zero_q).unwrap(), 0.0);

        let mut cold_wall = sample();
        cold_wall.t_w = 309.15; // ΔT = −2 K, Q reverses sign for fluid→wall
        cold_wall.q = -1.0;
        assert!((compute_h_star(&cold_wall).unwrap() - 2500.0).abs() < 1e-9);
    }

    #[test]
    fn vanishing_temperature_difference_is_singular() {
        let mut s = sample();
        s.t_i = s.t_w;
        let err = compute_h_star(&s).unwrap_err();
        assert!(err.to_string().contains("too small"));
        assert_eq!(err.exit_code(), 2);
    }

    fn table(samples: Vec<RveSample>) -> RveSampleTable {
        RveSampleTable {
            l_cell: 4.6e-3,
            materials: Materials::water_aluminum(),
            provenance: Provenance::Synthetic,
            samples,
        }
    }

    #[test]
    fn csv_round_trip_preserves_everything() {
        let t = table(vec![sample(), {
            let mut s = sample();
            s.c = 3e-3;
            s.dp = 12.5;
            s
        }]);
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("rve.csv");
        t.write_csv(&p).unwrap();

        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("c_m, Vdot_m3s, dp_Pa, Q_W, Tw_K, Ti_K, A_m2, Vf_m3\n"));
        assert!(text.contains("# provenance = SYNTHETIC"));

        let back = RveSampleTable::read_csv(&p).unwrap();
        assert_eq!(back.l_cell, t.l_cell);
        assert_eq!(back.materials, t.materials);
        assert_eq!(back.provenance, t.provenance);
        assert_eq!(back.samples, t.samples);
    }

    #[test]
    fn invariant_violations_name_their_row() {
        let mut bad = sample();
        bad.dp = -1.0;
        let err = table(vec![sample(), bad]).validate().unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");

        let mut hot = sample();
        hot.t_w = 350.0;
        let err = table(vec![hot]).validate().unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");

        let mut overfull = sample();
        overfull.v_f = 1.0;
        let err = table(vec![sample(), sample(), overfull]).validate().unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
    }

    #[test]
    fn wrong_header_is_rejected_with_both_headers_in_message() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("bad.csv");
        std::fs::write(&p, "# L_cell_m = 4.6e-3\nc_m, Vdot\n1e-3, 2e-8\n").unwrap();
        let err = RveSampleTable::read_csv(&p).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("c_m, Vdot") && msg.contains("Vf_m3"), "{msg}");
    }
}
