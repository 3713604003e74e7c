//! Orthonormal computational basis built from the PSF and its derivatives.
//!
//! Mode `k + 1` is the normalized Gram-Schmidt residual of `(-d/dx)^k Psi`
//! centered at the alignment guess. With this orientation the first three
//! modes are exactly
//!
//! ```text
//! Phi1 = Psi
//! Phi2 = -i P Psi / sqrt(p2)                = -Psi' / sqrt(p2)
//! Phi3 = (p2 - P^2) Psi / sqrt(p4 - p2^2)   = (p2 Psi + Psi'') / sqrt(p4 - p2^2)
//! ```
//!
//! and for a Gaussian PSF every mode is the Hermite-Gauss function with a
//! positive leading Hermite coefficient. Flipping the global sign of any mode
//! together with the matching POVM coefficients leaves all outcome
//! probabilities unchanged.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics;
use crate::psf::{Grid, Moments, PsfSpec};

pub const MAX_HG_ORDER: usize = 12;
const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct ModeSet {
    grid: Grid,
    modes: Vec<Vec<f64>>,
    center: f64,
    moments: Moments,
}

/// Orthonormalizes `Psi(x - center)` and its first `n - 1` derivatives.
pub fn build_derivative_basis(psf: &PsfSpec, center: f64, n: usize) -> Result<ModeSet> {
    if n < 3 {
        return Err(Error::InvalidConfig(format!("basis needs at least 3 modes, got {n}")));
    }
    let moments = psf.moments()?;
    let h = psf.grid().spacing();
    let mut modes: Vec<Vec<f64>> = Vec::with_capacity(n);
    modes.push(psf.displace(center)?);
    for k in 1..n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = psf
            .derivative_samples(k, center)
            .into_iter()
            .map(|a| sign * a)
            .collect();
        let original = numerics::norm_sq(&v, h).sqrt();
        // modified Gram-Schmidt, second pass re-orthogonalizes
        for _ in 0..2 {
            for m in &modes {
                let c = numerics::inner(m, &v, h);
                v.iter_mut().zip(m).for_each(|(a, b)| *a -= c * b);
            }
        }
        let norm = numerics::norm_sq(&v, h).sqrt();
        let residual = norm / original;
        if !(residual >= DEGENERACY_TOL) {
            return Err(Error::DegenerateBasis { mode: k + 1, residual });
        }
        v.iter_mut().for_each(|a| *a /= norm);
        modes.push(v);
    }
    Ok(ModeSet {
        grid: *psf.grid(),
        modes,
        center,
        moments,
    })
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Mode `Phi_{k+1}` (zero-based index).
    pub fn mode(&self, k: usize) -> &[f64] {
        &self.modes[k]
    }

    pub fn modes(&self) -> &[Vec<f64>] {
        &self.modes
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn moments(&self) -> Moments {
        self.moments
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn gram(&self) -> DMatrix<f64> {
        let h = self.grid.spacing();
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| numerics::inner(&self.modes[i], &self.modes[j], h))
    }

    /// `max |<Phi_i|Phi_j> - delta_ij|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.gram() - DMatrix::identity(self.len(), self.len());
        g.amax()
    }

    /// Coefficients `<Phi_k|f>` of a function sampled on the same grid.
    pub fn project(&self, samples: &[f64]) -> Vec<f64> {
        let h = self.grid.spacing();
        self.modes.iter().map(|m| numerics::inner(m, samples, h)).collect()
    }

    /// `c_k = <Phi_k|Psi_d>` where `Psi_d(x) = Psi(x - d)`; `d` is an absolute
    /// position, so `d = center` gives `(1, 0, 0, ...)`.
    pub fn overlaps(&self, psf: &PsfSpec, d: f64) -> Result<Vec<f64>> {
        if psf.grid() != &self.grid {
            return Err(Error::InvalidConfig("mode set and PSF use different grids".into()));
        }
        Ok(self.project(&psf.displace(d)?))
    }
}

/// Hermite-Gauss mode `n` matched to the Gaussian amplitude of width `sigma`:
/// `H_n(x / (sqrt(2) sigma)) / sqrt(2^n n!) * Psi(x)`.
pub fn hg_analytic(n: usize, sigma: f64, x: f64) -> Result<f64> {
    if n > MAX_HG_ORDER {
        return Err(Error::UnsupportedOrder(n));
    }
    let psi = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25) * (-x * x / (4.0 * sigma * sigma)).exp();
    let t = x / (std::f64::consts::SQRT_2 * sigma);
    let norm = (2f64.powi(n as i32) * numerics::factorial(n)).sqrt();
    Ok(numerics::hermite(n, t) / norm * psi)
}
