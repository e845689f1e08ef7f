use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::CvError;
use crate::mesh::{MeshGraph, SurfacePoint};

/// Among `ndesigns` random n-subsets of `candidates`, the one with the
/// largest minimum pairwise graph distance (first found on ties). Returned
/// vertices are sorted.
pub fn maximin_select(graph: &MeshGraph, candidates: &[usize], n: usize, ndesigns: usize, seed: u64) -> Result<Vec<usize>, CvError> {
    if n > candidates.len() {
        return Err(CvError::InvalidArgument(format!("cannot pick {n} of {} candidates", candidates.len())));
    }
    if n == candidates.len() {
        let mut all = candidates.to_vec();
        all.sort_unstable();
        return Ok(all);
    }
    let design = |d: usize| -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(d as u64);
        let mut pick: Vec<usize> = sample(&mut rng, candidates.len(), n).into_iter().map(|i| candidates[i]).collect();
        pick.sort_unstable();
        pick
    };
    let scores = (0..ndesigns.max(1))
        .into_par_iter()
        .map(|d| {
            let sites: Vec<SurfacePoint> = design(d).into_iter().map(SurfacePoint::Vertex).collect();
            graph.min_pairwise_distance(&sites)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let mut best = 0;
    for (d, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = d;
        }
    }
    Ok(design(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn full_set_and_determinism() {
        let mesh = shapes::square_grid(5, 4.0);
        let g = MeshGraph::new(&mesh);
        let cand: Vec<usize> = (0..mesh.n_vertices()).rev().collect();
        let all = maximin_select(&g, &cand, cand.len(), 10, 0).unwrap();
        assert_eq!(all, (0..mesh.n_vertices()).collect::<Vec<_>>());
        let a = maximin_select(&g, &cand, 4, 200, 9).unwrap();
        assert_eq!(a, maximin_select(&g, &cand, 4, 200, 9).unwrap());
    }
}
