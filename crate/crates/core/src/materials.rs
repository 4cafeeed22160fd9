//! Material property sets for the working fluid and the solid matrix.
//!
//! Defaults are water against aluminum, both evaluated at the 313.15 K
//! reference temperature (the mean of the hot and cold inlet streams).

use serde::{Deserialize, Serialize};

/// Reference temperature at which the default properties hold [K].
pub const T_REFERENCE: f64 = 313.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidProps {
    /// Density [kg/m³].
    pub rho: f64,
    /// Dynamic viscosity [Pa·s].
    pub mu: f64,
    /// Specific heat capacity [J/(kg·K)].
    pub cp: f64,
    /// Thermal conductivity [W/(m·K)].
    pub k: f64,
}

impl FluidProps {
    pub fn water() -> Self {
        Self { rho: 992.2, mu: 6.53e-4, cp: 4178.0, k: 0.631 }
    }

    /// Prandtl number μ·c_p/k.
    pub fn prandtl(&self) -> f64 {
        self.mu * self.cp / self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolidProps {
    /// Density [kg/m³].
    pub rho: f64,
    /// Specific heat capacity [J/(kg·K)].
    pub cp: f64,
    /// Thermal conductivity [W/(m·K)].
    pub k: f64,
}

impl SolidProps {
    pub fn aluminum() -> Self {
        Self { rho: 2700.0, cp: 900.0, k: 237.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Materials {
    pub fluid: FluidProps,
    pub solid: SolidProps,
}

impl Materials {
    pub fn water_aluminum() -> Self {
        Self { fluid: FluidProps::water(), solid: SolidProps::aluminum() }
    }
}

impl Default for Materials {
    fn default() -> Self {
        Self::water_aluminum()
    }
}
