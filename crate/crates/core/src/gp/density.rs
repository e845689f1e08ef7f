use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Matérn smoothness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Smoothness {
    #[serde(rename = "1/2")]
    Half,
    #[default]
    #[serde(rename = "3/2")]
    ThreeHalves,
    #[serde(rename = "5/2")]
    FiveHalves,
}

impl Smoothness {
    pub fn value(self) -> f64 {
        match self {
            Smoothness::Half => 0.5,
            Smoothness::ThreeHalves => 1.5,
            Smoothness::FiveHalves => 2.5,
        }
    }

    pub fn differentiable(self) -> bool {
        self != Smoothness::Half
    }
}

impl std::str::FromStr for Smoothness {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "1/2" | "0.5" => Ok(Smoothness::Half),
            "3/2" | "1.5" => Ok(Smoothness::ThreeHalves),
            "5/2" | "2.5" => Ok(Smoothness::FiveHalves),
            _ => Err(format!("unsupported smoothness {s}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub nu: Smoothness,
    /// Length-scale (mm).
    pub l: f64,
    /// Marginal variance, standardized units.
    pub tau2: f64,
    /// Nugget, standardized variance units.
    pub eta: f64,
}

impl Hyperparams {
    pub fn new(l: f64, tau2: f64, eta: f64) -> Self {
        Hyperparams { nu: Smoothness::ThreeHalves, l, tau2, eta }
    }

    pub fn is_valid(&self) -> bool {
        self.l > 0.0 && self.tau2 > 0.0 && self.eta >= 0.0 && self.l.is_finite() && self.tau2.is_finite() && self.eta.is_finite()
    }
}

/// Manifold dimension.
pub const DIM: f64 = 2.0;

/// Matérn spectral density on the plane in angular frequency (rad/mm):
/// S(ω) = 2^D π^{D/2} Γ(ν+D/2) (2ν)^ν / (Γ(ν) l^{2ν}) · (2ν/l² + ω²)^{−(ν+D/2)},
/// normalized so that k(0) = (2π)^{-D} ∫ S = 1.
pub fn spectral_density(omega: f64, nu: Smoothness, l: f64) -> f64 {
    let v = nu.value();
    // Γ(ν + 1) / Γ(ν) = ν for D = 2
    let gamma_ratio = v;
    let c = 2f64.powf(DIM) * PI.powf(DIM / 2.0) * gamma_ratio * (2.0 * v).powf(v) / l.powf(2.0 * v);
    c * (2.0 * v / (l * l) + omega * omega).powf(-(v + DIM / 2.0))
}

/// Prior weight variances τ² S(√λ_k).
pub fn weight_variances(lambdas: &[f64], hp: &Hyperparams) -> Vec<f64> {
    lambdas.iter().map(|&lam| hp.tau2 * spectral_density(lam.max(0.0).sqrt(), hp.nu, hp.l)).collect()
}

/// Closed-form Matérn correlation at distance r.
pub fn matern(r: f64, nu: Smoothness, l: f64) -> f64 {
    let r = r.abs();
    match nu {
        Smoothness::Half => (-r / l).exp(),
        Smoothness::ThreeHalves => {
            let a = 3f64.sqrt() * r / l;
            (1.0 + a) * (-a).exp()
        }
        Smoothness::FiveHalves => {
            let a = 5f64.sqrt() * r / l;
            (1.0 + a + a * a / 3.0) * (-a).exp()
        }
    }
}

/// Cumulative share (percent) of prior spectral mass in the first m basis
/// functions, m = 1..M.
pub fn explained_variance(lambdas: &[f64], hp: &Hyperparams) -> Vec<f64> {
    let w = weight_variances(lambdas, hp);
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    let mut out: Vec<f64> = w
        .iter()
        .map(|x| {
            acc += x;
            100.0 * acc / total
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 100.0;
    }
    out
}
