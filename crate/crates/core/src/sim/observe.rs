use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{SimError, TruthField};
use crate::cv::maximin_select;
use crate::gp::ObservationSet;
use crate::mesh::{MeshGraph, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum SampleMode {
    Random,
    Maximin { designs: usize },
}

/// n distinct vertices with y = truth + N(0, noise_sd²). Vertices come out
/// sorted; the noise stream is independent of the design stream.
pub fn sample_observations(
    mesh: &TriMesh,
    truth: &TruthField,
    n: usize,
    noise_sd: f64,
    mode: SampleMode,
    seed: u64,
) -> Result<ObservationSet, SimError> {
    let nv = truth.lat.len();
    if n > nv {
        return Err(SimError::TooManyObservations { requested: n, available: nv });
    }
    if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
        return Err(SimError::BadNoise(noise_sd));
    }
    let vertices = match mode {
        SampleMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut v = sample(&mut rng, nv, n).into_vec();
            v.sort_unstable();
            v
        }
        SampleMode::Maximin { designs } => {
            let graph = MeshGraph::new(mesh);
            maximin_select(&graph, &(0..nv).collect::<Vec<_>>(), n, designs, seed)?
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let y = vertices
        .iter()
        .map(|&v| {
            if noise_sd > 0.0 {
                truth.lat[v] + Normal::new(0.0, noise_sd).expect("finite sd").sample(&mut rng)
            } else {
                truth.lat[v]
            }
        })
        .collect();
    Ok(ObservationSet { sigma: vec![noise_sd; vertices.len()], vertices, y })
}
