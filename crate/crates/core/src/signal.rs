use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::topology::TreeTopology;

/// Real coefficient vector indexed by tree node (node `i` at position `i-1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Signal(Vec<f64>);

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(values))
    }

    /// Standard Gaussian coefficients from a seeded ChaCha stream.
    pub fn gaussian(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self((0..len).map(|_| rng.sample(StandardNormal)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn check_len(&self, t: &TreeTopology) -> Result<()> {
        if self.0.len() != t.len() {
            return Err(Error::LengthMismatch {
                expected: t.len(),
                found: self.0.len(),
            });
        }
        Ok(())
    }

    /// Pushes each magnitude up by `node * eps`, keeping signs, so that
    /// distinct supports almost surely have distinct energies.
    pub fn perturbed(&self, eps: f64) -> Self {
        Self(
            self.0
                .iter()
                .enumerate()
                .map(|(idx, &v)| {
                    let bumped = v.abs() + (idx + 1) as f64 * eps;
                    if v < 0.0 {
                        -bumped
                    } else {
                        bumped
                    }
                })
                .collect(),
        )
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|v| v * c).collect())
    }
}

impl TryFrom<Vec<f64>> for Signal {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}
