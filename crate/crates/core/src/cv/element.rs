use serde::{Deserialize, Serialize};

use super::UNDEFINED_GRADIENT;
use crate::mesh::Vec3;

/// Gradient (ms/mm) and CV (mm/ms); `cv` is None when the gradient is too
/// small for a physiological speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvVector {
    pub gradient: Vec3,
    pub cv: Option<Vec3>,
}

impl CvVector {
    pub fn from_gradient(gradient: Vec3) -> Self {
        CvVector { gradient, cv: cv_from_gradient(&gradient) }
    }

    pub fn speed(&self) -> Option<f64> {
        self.cv.map(|c| c.norm())
    }
}

/// v / |v|², or None below the clip threshold.
pub fn cv_from_gradient(g: &Vec3) -> Option<Vec3> {
    let n2 = g.norm_squared();
    (n2.sqrt() >= UNDEFINED_GRADIENT).then(|| g / n2)
}

/// Gradient of the linear interpolant of `t` over a triangle, or None for a
/// degenerate triangle.
pub fn element_gradient(p: [Vec3; 3], t: [f64; 3]) -> Option<Vec3> {
    let cross = (p[1] - p[0]).cross(&(p[2] - p[0]));
    let twice_area = cross.norm();
    if !(twice_area > 0.0) {
        return None;
    }
    let n = cross / twice_area;
    // ∇φ_i = N × (p_k − p_j) / 2A for (i, j, k) cyclic
    let mut s = Vec3::zeros();
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        s += t[i] * (p[k] - p[j]);
    }
    Some(n.cross(&s) / twice_area)
}

pub fn element_cv(p: [Vec3; 3], t: [f64; 3]) -> Option<CvVector> {
    element_gradient(p, t).map(CvVector::from_gradient)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_wave() {
        let p = [Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.3, 0.8, 0.0)];
        let t = p.map(|q| 2.0 * q.x);
        let c = element_cv(p, t).unwrap();
        assert!((c.gradient - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((c.cv.unwrap() - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn flat_field_is_undefined() {
        let p = [Vec3::zeros(), Vec3::x(), Vec3::y()];
        let c = element_cv(p, [4.0; 3]).unwrap();
        assert_eq!(c.gradient, Vec3::zeros());
        assert!(c.cv.is_none());
    }

    #[test]
    fn degenerate_triangle() {
        assert!(element_gradient([Vec3::zeros(), Vec3::x(), 2.0 * Vec3::x()], [0.0, 1.0, 2.0]).is_none());
    }
}
