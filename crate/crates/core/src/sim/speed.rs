use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::gp::{weight_variances, Hyperparams};
use crate::spectral::EigenBasis;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedParams {
    pub seed: u64,
    /// Correlation length of the latent field (mm).
    pub lengthscale: f64,
    pub min_speed: f64,
    pub max_speed: f64,
    /// Logistic slope applied to the unit-variance latent field.
    pub gain: f64,
}

impl Default for SpeedParams {
    fn default() -> Self {
        SpeedParams { seed: 0, lengthscale: 20.0, min_speed: 0.3, max_speed: 1.2, gain: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedField {
    /// mm/ms per vertex.
    pub speed: Vec<f64>,
    pub params: SpeedParams,
}

impl SpeedField {
    pub fn constant(n: usize, c: f64) -> Self {
        SpeedField { speed: vec![c; n], params: SpeedParams { min_speed: c, max_speed: c, ..Default::default() } }
    }
}

/// Logistic squashing of a Matérn 3/2 prior draw on the vertices.
pub fn sample_speed_field(basis: &EigenBasis, params: &SpeedParams) -> Result<SpeedField, SimError> {
    let (lo, hi) = (params.min_speed, params.max_speed);
    if !(lo >= 0.1) || !(hi >= lo) || hi / lo > 20.0 || !(params.lengthscale > 0.0) || !params.gain.is_finite() {
        return Err(SimError::BadSpeed(format!("{params:?}")));
    }
    let d = weight_variances(&basis.lambdas, &Hyperparams::new(params.lengthscale, 1.0, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let z: Vec<f64> = d.iter().map(|w| w.sqrt() * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
    let speed = (0..basis.n_vertices())
        .map(|i| {
            let g: f64 = (0..z.len()).map(|k| basis.phi_v[(i, k)] * z[k]).sum();
            let s = (params.gain * g).clamp(-30.0, 30.0);
            lo + (hi - lo) / (1.0 + (-s).exp())
        })
        .collect();
    Ok(SpeedField { speed, params: *params })
}
