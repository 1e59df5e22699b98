use serde::Serialize;

use crate::error::{Error, Result};

/// The couplings `(u, v, w)` weighting blue dimers, red dimers and mixed
/// points. Physical quantities are evaluated at `(-u, -v, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingPoint {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

/// `(u_c, v_c, w_c) = (2/9, 2/9, 2/3)`.
pub const CRITICAL_POINT: CouplingPoint = CouplingPoint {
    u: 2.0 / 9.0,
    v: 2.0 / 9.0,
    w: 2.0 / 3.0,
};

impl CouplingPoint {
    pub const fn new(u: f64, v: f64, w: f64) -> Self {
        Self { u, v, w }
    }

    pub fn critical() -> Self {
        CRITICAL_POINT
    }

    /// `u + v`, the only combination of the dimer weights that survives
    /// averaging over colour sequences.
    pub fn uv_sum(&self) -> f64 {
        self.u + self.v
    }

    pub fn in_unit_cube(&self) -> bool {
        [self.u, self.v, self.w]
            .iter()
            .all(|x| *x > 0.0 && *x < 1.0)
    }

    pub fn require_unit_cube(&self) -> Result<()> {
        if self.in_unit_cube() {
            Ok(())
        } else {
            Err(Error::OutsideUnitCube {
                u: self.u,
                v: self.v,
                w: self.w,
            })
        }
    }

    /// Both transfer matrices are invertible iff `u w != 0` and `v w != 0`.
    pub fn is_nondegenerate(&self) -> bool {
        self.u * self.w != 0.0 && self.v * self.w != 0.0
    }

    pub fn swap_colours(&self) -> Self {
        Self::new(self.v, self.u, self.w)
    }
}
