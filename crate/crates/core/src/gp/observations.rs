use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::GpError;

/// Activation-time observations at mesh vertices (ms).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub vertices: Vec<usize>,
    pub y: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl ObservationSet {
    pub fn new(vertices: Vec<usize>, y: Vec<f64>, sigma: Vec<f64>) -> Result<Self, GpError> {
        if vertices.len() != y.len() || y.len() != sigma.len() {
            return Err(GpError::BadObservations("column lengths differ".into()));
        }
        for (i, (&yi, &si)) in y.iter().zip(&sigma).enumerate() {
            if !yi.is_finite() || !si.is_finite() || si < 0.0 {
                return Err(GpError::BadObservations(format!("row {i}: y={yi}, sigma={si}")));
            }
        }
        Ok(ObservationSet { vertices, y, sigma })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Collapse repeated vertices by precision-weighted averaging; noiseless
    /// readings dominate noisy ones. Order of first appearance is kept.
    pub fn merged(&self) -> ObservationSet {
        let mut slot: HashMap<usize, usize> = HashMap::new();
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for (i, &v) in self.vertices.iter().enumerate() {
            let g = *slot.entry(v).or_insert_with(|| {
                groups.push((v, Vec::new()));
                groups.len() - 1
            });
            groups[g].1.push(i);
        }
        let mut out = ObservationSet::default();
        for (v, idx) in groups {
            let exact: Vec<usize> = idx.iter().copied().filter(|&i| self.sigma[i] == 0.0).collect();
            let (y, s) = if idx.len() == 1 {
                (self.y[idx[0]], self.sigma[idx[0]])
            } else if !exact.is_empty() {
                (exact.iter().map(|&i| self.y[i]).sum::<f64>() / exact.len() as f64, 0.0)
            } else {
                let w: f64 = idx.iter().map(|&i| self.sigma[i].powi(-2)).sum();
                (idx.iter().map(|&i| self.y[i] * self.sigma[i].powi(-2)).sum::<f64>() / w, w.sqrt().recip())
            };
            out.vertices.push(v);
            out.y.push(y);
            out.sigma.push(s);
        }
        out
    }
}

/// Affine map between raw (ms) and standardized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub sd: f64,
}

impl Standardization {
    pub const IDENTITY: Standardization = Standardization { mean: 0.0, sd: 1.0 };

    /// Population mean and SD; the SD falls back to 1 for fewer than two
    /// values or constant data.
    pub fn from_data(y: &[f64]) -> Self {
        if y.is_empty() {
            return Self::IDENTITY;
        }
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = if y.len() < 2 || !(var.sqrt() > 0.0) { 1.0 } else { var.sqrt() };
        Standardization { mean, sd }
    }

    pub fn forward(&self, y: f64) -> f64 {
        (y - self.mean) / self.sd
    }
}
