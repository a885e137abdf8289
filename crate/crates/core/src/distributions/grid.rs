//! Uniform discretization of the action interval `[-1, 1]`.

use crate::error::{CoreError, CoreResult};

/// `bins` evenly spaced atoms with both endpoints included:
/// `atom_j = 2 j / (bins - 1) - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionGrid {
    atoms: Vec<f64>,
}

impl ActionGrid {
    pub fn new(bins: usize) -> CoreResult<Self> {
        if bins < 2 {
            return Err(CoreError::invalid_config(format!(
                "action grid needs at least 2 bins, got {bins}"
            )));
        }
        let denom = (bins - 1) as f64;
        let atoms = (0..bins).map(|j| 2.0 * j as f64 / denom - 1.0).collect();
        Ok(ActionGrid { atoms })
    }

    pub fn bins(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn atom(&self, j: usize) -> f64 {
        self.atoms[j]
    }

    /// Spacing between adjacent atoms: `2 / (bins - 1)`.
    pub fn spacing(&self) -> f64 {
        2.0 / (self.atoms.len() as f64 - 1.0)
    }

    /// Index of the atom nearest to `a`; ties round down.
    pub fn nearest(&self, a: f64) -> usize {
        let k = self.atoms.len();
        let x = (a + 1.0) / self.spacing();
        let j = x.round() as isize;
        // round() ties away from zero; enforce round-half-down by checking
        // the lower neighbor at exact midpoints.
        let j = j.clamp(0, k as isize - 1) as usize;
        if j > 0 && (a - self.atoms[j - 1]).abs() <= (a - self.atoms[j]).abs() {
            j - 1
        } else {
            j
        }
    }
}
