//! Pole-dipole electrode layouts and geometric factors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial dimension used by [`geometric_factor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceDim {
    Two,
    Three,
}

/// One measurement: current electrodes `a`, `b` and potential electrodes `m`, `n`.
///
/// `b == None` places the return electrode at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeConfig {
    pub a: usize,
    pub b: Option<usize>,
    pub m: usize,
    pub n: usize,
    pub k: f64,
}

/// Electrode line on the surface `z = 0` together with its measurement list.
#[derive(Debug, Clone, PartialEq)]
pub struct Survey {
    positions: Vec<[f64; 2]>,
    configs: Vec<ElectrodeConfig>,
}

/// Spacings of the three pole-dipole blocks, in electrode index steps.
pub const POLE_DIPOLE_SPACINGS: [usize; 3] = [2, 4, 8];

fn distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Geometric factor turning a potential difference into apparent resistivity.
///
/// `b = None` is the return electrode at infinity.
pub fn geometric_factor(a: &[f64], b: Option<&[f64]>, m: &[f64], n: &[f64], dim: SpaceDim) -> Result<f64> {
    let mut points = vec![a, m, n];
    points.extend(b);
    if points.iter().flat_map(|p| p.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Parameter("electrode coordinates must be finite".into()));
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i].len() != points[j].len() {
                return Err(Error::Parameter("electrode coordinates differ in dimension".into()));
            }
            if distance(points[i], points[j]) == 0.0 {
                return Err(Error::Parameter("coincident electrodes".into()));
            }
        }
    }
    let (am, an) = (distance(a, m), distance(a, n));
    let (terms, numerator) = match dim {
        SpaceDim::Two => {
            let mut t = vec![-am.ln(), an.ln()];
            if let Some(b) = b {
                t.push(distance(b, m).ln());
                t.push(-distance(b, n).ln());
            }
            (t, PI)
        }
        SpaceDim::Three => {
            let mut t = vec![1.0 / am, -1.0 / an];
            if let Some(b) = b {
                t.push(-1.0 / distance(b, m));
                t.push(1.0 / distance(b, n));
            }
            (t, 2.0 * PI)
        }
    };
    let denom: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    if denom.abs() <= 64.0 * f64::EPSILON * scale || denom == 0.0 {
        return Err(Error::DegenerateConfiguration(
            "potential electrodes are equidistant from the current electrodes".into(),
        ));
    }
    Ok(numerator / denom)
}

impl Survey {
    /// Builds a survey, checking electrode indices and factors.
    pub fn new(positions: Vec<[f64; 2]>, configs: Vec<ElectrodeConfig>) -> Result<Self> {
        let n = positions.len();
        if positions.windows(2).any(|w| !(w[1][0] > w[0][0])) {
            return Err(Error::Parameter("electrode positions must be strictly increasing".into()));
        }
        for (i, c) in configs.iter().enumerate() {
            let ids = [Some(c.a), c.b, Some(c.m), Some(c.n)];
            if ids.iter().flatten().any(|&e| e >= n) {
                return Err(Error::Parameter(format!("configuration {i} references a missing electrode")));
            }
            if c.a == c.m || c.a == c.n || c.m == c.n || c.b.is_some_and(|b| b == c.a || b == c.m || b == c.n) {
                return Err(Error::Parameter(format!("configuration {i} reuses an electrode")));
            }
            if !c.k.is_finite() || c.k == 0.0 {
                return Err(Error::Parameter(format!("configuration {i} has invalid factor {}", c.k)));
            }
        }
        Ok(Self { positions, configs })
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn configs(&self) -> &[ElectrodeConfig] {
        &self.configs
    }

    pub fn n_electrodes(&self) -> usize {
        self.positions.len()
    }

    /// Number of measurements.
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Indices of configurations whose electrodes all lie at least `margin` index
    /// steps away from both ends of the line.
    pub fn interior_configs(&self, margin: usize) -> Vec<usize> {
        let last = self.n_electrodes() - 1;
        let inside = |e: usize| e >= margin && e + margin <= last;
        self.configs
            .iter()
            .enumerate()
            .filter(|(_, c)| [Some(c.a), c.b, Some(c.m), Some(c.n)].iter().flatten().all(|&e| inside(e)))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Equidistant electrode coordinates on `z = 0`.
pub fn electrode_positions(n_electrodes: usize, extent: (f64, f64)) -> Result<Vec<[f64; 2]>> {
    let (a, b) = extent;
    if n_electrodes < 2 || !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Parameter(format!("invalid electrode line: {n_electrodes} on [{a}, {b}]")));
    }
    let h = (b - a) / (n_electrodes - 1) as f64;
    Ok((0..n_electrodes).map(|i| [a + i as f64 * h, 0.0]).collect())
}

/// Pole-dipole survey with spacings 2, 4 and 8.
///
/// Each spacing block lists the forward triples `(p, p+s, p+2s)` followed by the
/// reversed triples `(p, p-s, p-2s)`; the return electrode sits at infinity. Yields
/// `6 n - 56` configurations.
pub fn pole_dipole_survey(n_electrodes: usize, extent: (f64, f64)) -> Result<Survey> {
    if n_electrodes < 17 {
        return Err(Error::Parameter(format!("pole-dipole survey needs at least 17 electrodes, got {n_electrodes}")));
    }
    let positions = electrode_positions(n_electrodes, extent)?;
    let mut configs = Vec::with_capacity(6 * n_electrodes - 56);
    for s in POLE_DIPOLE_SPACINGS {
        let forward = (0..n_electrodes - 2 * s).map(|p| (p, p + s, p + 2 * s));
        let reverse = (2 * s..n_electrodes).map(|p| (p, p - s, p - 2 * s));
        for (a, m, n) in forward.chain(reverse) {
            let k = geometric_factor(&positions[a], None, &positions[m], &positions[n], SpaceDim::Two)?;
            configs.push(ElectrodeConfig { a, b: None, m, n, k });
        }
    }
    Survey::new(positions, configs)
}
