//! Initial densities `ρ_0`: products of one-dimensional `C²` bumps
//! `ψ(r) = (1 - r²)³` (and a box indicator used by entropy identities).

use serde::{Deserialize, Serialize};

use crate::error::{require_finite, require_positive, Error, Result};
use crate::measures::SliceDensity;
use crate::stats;

/// Shape of the one-dimensional profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `(1 - r²)³` on `|r| < 1` (`C²`).
    Bump,
    /// Indicator of `|r| < 1` (not differentiable; entropy identities only).
    Plateau,
}

/// `ρ_0(x) = s Π_i ψ((x_i - c_i) / r)` on `ℝ^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDensity {
    pub center: Vec<f64>,
    pub radius: f64,
    pub scale: f64,
    pub profile: Profile,
}

impl InitialDensity {
    pub fn new(center: Vec<f64>, radius: f64, scale: f64, profile: Profile) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidParameter("initial density needs at least one coordinate".into()));
        }
        require_finite("center", &center)?;
        require_positive("radius", radius)?;
        require_positive("scale", scale)?;
        Ok(InitialDensity { center, radius, scale, profile })
    }

    /// A unit-scale bump.
    pub fn bump(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::new(center, radius, 1.0, Profile::Bump)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn is_differentiable(&self) -> bool {
        self.profile == Profile::Bump
    }

    #[inline]
    fn profile_value(&self, r: f64) -> f64 {
        if r.abs() >= 1.0 {
            return 0.0;
        }
        match self.profile {
            Profile::Bump => {
                let s = 1.0 - r * r;
                s * s * s
            }
            Profile::Plateau => 1.0,
        }
    }

    /// `ρ_0(x)`; exactly zero outside the support box.
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.scale;
        for (xi, ci) in x.iter().zip(&self.center) {
            v *= self.profile_value((xi - ci) / self.radius);
            if v == 0.0 {
                return 0.0;
            }
        }
        v
    }

    /// Radius of an origin-centred ball containing the support: `|c| + r√N`.
    pub fn support_radius(&self) -> f64 {
        let c: f64 = self.center.iter().map(|a| a * a).sum::<f64>().sqrt();
        c + self.radius * (self.dim() as f64).sqrt()
    }

    /// Sup-norm distance from `x` to the support box `Π [c_i - r, c_i + r]`.
    pub fn box_distance(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).map(|(xi, ci)| ((xi - ci).abs() - self.radius).max(0.0)).fold(0.0, f64::max)
    }

    /// Rescales so that `∫ρ_0 Ψ² dx = 1`, the integral taken on a lattice of
    /// the given spacing anchored at the centre.
    pub fn normalized(&self, weight: &dyn SliceDensity, spacing: f64) -> Result<Self> {
        require_positive("spacing", spacing)?;
        if weight.dim() != self.dim() {
            return Err(Error::InvalidData("weight and density dimensions differ".into()));
        }
        let unit = InitialDensity { scale: 1.0, ..self.clone() };
        let lattice = Lattice::around(&self.center, self.radius, spacing);
        let terms: Vec<f64> = lattice.points().map(|x| unit.value(&x) * weight.density(&x)).collect();
        let mass = lattice.cell_volume() * stats::sum(&terms);
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InfeasibleInput(format!("initial mass {mass} cannot be normalised")));
        }
        Ok(InitialDensity { scale: 1.0 / mass, ..unit })
    }
}

/// A cubic lattice `c + h k`, `|k_i| ≤ K`, covering `c ± half_width` per axis.
///
/// Anchoring at the centre means enlarging the box only adds nodes, so
/// integrands vanishing outside the original box give bit-identical sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    center: Vec<f64>,
    spacing: f64,
    half_count: i64,
}

impl Lattice {
    pub fn around(center: &[f64], half_width: f64, spacing: f64) -> Self {
        let half_count = (half_width / spacing).ceil() as i64;
        Lattice { center: center.to_vec(), spacing, half_count }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn side(&self) -> usize {
        (2 * self.half_count + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim() as i32)
    }

    /// Node `idx` in row-major order (first coordinate fastest).
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let side = self.side();
        let mut rem = idx;
        self.center
            .iter()
            .map(|c| {
                let k = (rem % side) as i64 - self.half_count;
                rem /= side;
                c + k as f64 * self.spacing
            })
            .collect()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::ConstantDensity;

    #[test]
    fn bump_values_and_support() {
        let r = InitialDensity::bump(vec![0.5, 0.0], 0.25).unwrap();
        assert_eq!(r.value(&[0.5, 0.0]), 1.0);
        assert_eq!(r.value(&[0.8, 0.0]), 0.0);
        assert!((r.value(&[0.625, 0.0]) - 0.75f64.powi(3)).abs() < 1e-15);
        assert!((r.support_radius() - (0.5 + 0.25 * 2f64.sqrt())).abs() < 1e-15);
        assert_eq!(r.box_distance(&[0.5, 0.1]), 0.0);
        assert!((r.box_distance(&[1.0, 0.0]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn normalization_against_constant_weight() {
        // ∫(1 - r²)³ dr over (-1, 1) = 32/35.
        let r = InitialDensity::bump(vec![0.0], 0.5).unwrap();
        let n = r.normalized(&ConstantDensity { dim: 1, value: 2.0 }, 1e-4).unwrap();
        let exact = 1.0 / (2.0 * 0.5 * 32.0 / 35.0);
        assert!((n.scale - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn lattice_enlargement_adds_only_outer_nodes() {
        let a = Lattice::around(&[0.1], 1.0, 0.25);
        let b = Lattice::around(&[0.1], 2.0, 0.25);
        assert_eq!(a.len(), 9);
        assert_eq!(b.len(), 17);
        assert_eq!(a.point(4), vec![0.1]);
        assert_eq!(b.point(8), vec![0.1]);
    }

    #[test]
    fn invalid_initial_density() {
        assert!(InitialDensity::bump(vec![], 1.0).is_err());
        assert!(InitialDensity::bump(vec![0.0], 0.0).is_err());
    }
}
