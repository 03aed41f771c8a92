//! The monotone piecewise-linear time change `φ: [t,T] → [t,T]` and its inverse.

use serde::{Deserialize, Serialize};

use crate::error::{BolzaError, Result};
use crate::trajectory::CompensatedSum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeOfVariable {
    /// Breakpoints `τ_k` in the original time.
    pub breaks: Vec<f64>,
    /// `φ(τ_k)`; the breakpoints of `ψ = φ⁻¹`.
    pub images: Vec<f64>,
    /// Slope of `φ` on each cell.
    pub slopes: Vec<f64>,
    /// `φ(T) − T` before the endpoint was snapped.
    pub end_defect: f64,
}

/// Integrate the cell slopes from `φ(t) = t`, then snap `φ(T)` to `T`.
pub fn build_phi(breaks: &[f64], slopes: &[f64]) -> Result<ChangeOfVariable> {
    if breaks.len() != slopes.len() + 1 {
        return Err(BolzaError::SlopeNonpositive(
            "slope count does not match the cells".into(),
        ));
    }
    if let Some(k) = slopes.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(BolzaError::SlopeNonpositive(format!("slope {} on cell {k}", slopes[k])));
    }
    let t0 = breaks[0];
    let mut acc = CompensatedSum::default();
    acc.add(t0);
    let mut images = Vec::with_capacity(breaks.len());
    images.push(t0);
    for (k, &v) in slopes.iter().enumerate() {
        acc.add(v * (breaks[k + 1] - breaks[k]));
        images.push(acc.value());
    }
    let last = *breaks.last().expect("nonempty");
    let end_defect = images[images.len() - 1] - last;
    let n = images.len();
    images[n - 1] = last;
    if images.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BolzaError::SlopeNonpositive("a cell collapsed to zero length".into()));
    }
    Ok(ChangeOfVariable {
        breaks: breaks.to_vec(),
        images,
        slopes: slopes.to_vec(),
        end_defect,
    })
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    if xs[k] == x {
        return ys[k];
    }
    let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + w * (ys[k + 1] - ys[k])
}

impl ChangeOfVariable {
    pub fn identity(breaks: &[f64]) -> Self {
        ChangeOfVariable {
            breaks: breaks.to_vec(),
            images: breaks.to_vec(),
            slopes: vec![1.0; breaks.len() - 1],
            end_defect: 0.0,
        }
    }

    pub fn phi(&self, tau: f64) -> f64 {
        interp(&self.breaks, &self.images, tau)
    }

    pub fn psi(&self, s: f64) -> f64 {
        interp(&self.images, &self.breaks, s)
    }

    /// `‖φ − id‖∞`, attained at a breakpoint.
    pub fn sup_deviation(&self) -> f64 {
        self.breaks
            .iter()
            .zip(&self.images)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Lipschitz rank of `ψ`, the reciprocal of the smallest realized slope.
    pub fn psi_lipschitz(&self) -> f64 {
        (0..self.slopes.len())
            .map(|k| (self.breaks[k + 1] - self.breaks[k]) / (self.images[k + 1] - self.images[k]))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let cov = build_phi(&[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], &[1.5, 0.5, 1.0]).unwrap();
        assert!((cov.phi(1.0 / 3.0) - 0.5).abs() < 1e-15);
        assert!((cov.phi(2.0 / 3.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(cov.phi(1.0), 1.0);
        assert!(cov.end_defect.abs() < 1e-15);
        assert!((cov.psi(0.5) - 1.0 / 3.0).abs() < 1e-15);
        assert!((cov.psi_lipschitz() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_slopes() {
        assert!(build_phi(&[0.0, 1.0], &[0.0]).is_err());
        assert!(build_phi(&[0.0, 1.0], &[f64::NAN]).is_err());
    }
}
