//! Synthetic resistivity models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::ModelVector;
use crate::mesh::Mesh;

/// Log-conductivity of a resistivity in Ω·m.
pub fn log_conductivity(resistivity: f64) -> f64 {
    -resistivity.ln()
}

/// Uniform model with the given resistivity.
pub fn homogeneous(mesh: &Mesh, resistivity: f64) -> Result<ModelVector> {
    if !(resistivity > 0.0) {
        return Err(Error::Parameter(format!("resistivity must be positive, got {resistivity}")));
    }
    Ok(ModelVector::constant(mesh.n_cells(), log_conductivity(resistivity)))
}

/// Two rows of square blocks below the electrode line, alternating between the
/// background and the anomaly resistivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkerboard {
    pub background: f64,
    pub anomaly: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub block: f64,
    pub depth_top: f64,
    pub rows: usize,
}

impl Checkerboard {
    /// Four blocks across the line, starting half a block below the surface.
    pub fn for_line(extent: (f64, f64)) -> Self {
        let block = (extent.1 - extent.0) / 4.0;
        Self {
            background: 3500.0,
            anomaly: 7000.0,
            x_min: extent.0,
            x_max: extent.1,
            block,
            depth_top: 0.5 * block,
            rows: 2,
        }
    }

    /// One row of blocks four electrode spacings wide, so the pattern gets finer and
    /// shallower as the line gets denser.
    pub fn for_configuration(extent: (f64, f64), n_electrodes: usize) -> Result<Self> {
        if n_electrodes < 5 || (n_electrodes - 1) % 4 != 0 {
            return Err(Error::Parameter(format!(
                "checkerboard needs 4k+1 electrodes, got {n_electrodes}"
            )));
        }
        let block = 4.0 * (extent.1 - extent.0) / (n_electrodes - 1) as f64;
        Ok(Self { depth_top: 0.5 * block, rows: 1, block, ..Self::for_line(extent) })
    }

    /// Resistivity at `p = [x, z]`.
    pub fn resistivity_at(&self, p: [f64; 2]) -> f64 {
        let depth_bottom = self.depth_top + self.rows as f64 * self.block;
        if p[0] < self.x_min || p[0] >= self.x_max || p[1] < self.depth_top || p[1] >= depth_bottom {
            return self.background;
        }
        let ix = ((p[0] - self.x_min) / self.block).floor() as i64;
        let iz = ((p[1] - self.depth_top) / self.block).floor() as i64;
        if (ix + iz) % 2 == 0 {
            self.anomaly
        } else {
            self.background
        }
    }

    /// Cellwise log-conductivity sampled at centroids.
    pub fn model(&self, mesh: &Mesh) -> Result<ModelVector> {
        if !(self.background > 0.0 && self.anomaly > 0.0 && self.block > 0.0) {
            return Err(Error::Parameter("checkerboard parameters must be positive".into()));
        }
        ModelVector::new(
            (0..mesh.n_cells()).map(|c| log_conductivity(self.resistivity_at(mesh.cell_centroid(c)))).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkerboard_pattern() {
        let cb = Checkerboard::for_line((-50.0, 50.0));
        assert_eq!(cb.resistivity_at([-40.0, 20.0]), 7000.0);
        assert_eq!(cb.resistivity_at([-10.0, 20.0]), 3500.0);
        assert_eq!(cb.resistivity_at([-10.0, 40.0]), 7000.0);
        assert_eq!(cb.resistivity_at([0.0, 5.0]), 3500.0);
        assert_eq!(cb.resistivity_at([0.0, 70.0]), 3500.0);
    }

    #[test]
    fn homogeneous_value() {
        let mesh = Mesh::rectangle(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        let m = homogeneous(&mesh, 3500.0).unwrap();
        assert!(m.m.iter().all(|&v| (v.exp() - 1.0 / 3500.0).abs() < 1e-18));
        assert!(homogeneous(&mesh, 0.0).is_err());
    }
}
