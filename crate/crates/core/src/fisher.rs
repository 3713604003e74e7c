//! Outcome probabilities, classical and quantum Fisher information.
//!
//! Parameters are always ordered `(s0, s)`: centroid first, separation
//! second. The signal is the equal-weight mixture of the PSF displaced to
//! `s0 + s/2` and `s0 - s/2`; probabilities use exact overlaps with the
//! measurement modes rather than a small-displacement expansion.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen, Vector3};

use crate::basis::{build_derivative_basis, ModeSet};
use crate::error::{Error, Result};
use crate::numerics;
use crate::povm::{EpsilonPair, PovmCoeffs};
use crate::psf::{Moments, PsfSpec};

/// Smallest separation, in units of the PSF width, accepted by the CFI.
pub const MIN_SEPARATION: f64 = 1e-6;
/// Default finite-difference step, in units of the PSF width.
pub const FD_REL_STEP: f64 = 1e-4;
const RICHARDSON_TOL: f64 = 1e-4;
const NEGATIVE_PROB_TOL: f64 = 1e-9;
const DROP_PROB: f64 = 1e-14;
const DROP_SLOPE: f64 = 1e-12;
const SLD_EIGEN_FLOOR: f64 = 1e-12;
const TRUNCATION_TOL: f64 = 1e-8;
/// Basis sizes tried by [`qfi`], smallest first.
const ORACLE_SIZES: [usize; 4] = [6, 8, 10, 12];

/// True source parameters and the alignment guess of the measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceConfig {
    s0: f64,
    s: f64,
    s0_hat: f64,
}

impl SourceConfig {
    pub fn new(s0: f64, s: f64, s0_hat: f64) -> Result<Self> {
        if !(s >= 0.0) || !s0.is_finite() || !s0_hat.is_finite() || !s.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "need finite s0, s0_hat and s >= 0, got s0={s0}, s={s}, s0_hat={s0_hat}"
            )));
        }
        Ok(Self { s0, s, s0_hat })
    }

    /// Measurement aligned at the origin, true centroid offset by `x0`.
    pub fn aligned(s: f64, x0: f64) -> Result<Self> {
        Self::new(x0, s, 0.0)
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn s0_hat(&self) -> f64 {
        self.s0_hat
    }

    /// Misalignment `s0 - s0_hat`.
    pub fn x0(&self) -> f64 {
        self.s0 - self.s0_hat
    }

    pub fn delta_plus(&self) -> f64 {
        self.x0() + 0.5 * self.s
    }

    pub fn delta_minus(&self) -> f64 {
        self.x0() - 0.5 * self.s
    }

    /// `(s / x0)^2 / 4`; infinite for perfect alignment.
    pub fn ratio(&self) -> f64 {
        let x0 = self.x0();
        if x0 == 0.0 {
            f64::INFINITY
        } else {
            0.25 * (self.s / x0).powi(2)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbVector {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl ProbVector {
    pub fn as_array(&self) -> [f64; 3] {
        [self.p1, self.p2, self.p3]
    }

    pub fn sum(&self) -> f64 {
        self.p1 + self.p2 + self.p3
    }
}

/// The three-outcome measurement realized on a PSF grid.
#[derive(Clone, Debug)]
pub struct Measurement {
    psf: PsfSpec,
    coeffs: PovmCoeffs,
    center: f64,
    pi1: Vec<f64>,
    pi2: Vec<f64>,
}

impl Measurement {
    pub fn new(psf: &PsfSpec, modes: &ModeSet, coeffs: PovmCoeffs) -> Result<Self> {
        if psf.grid() != modes.grid() {
            return Err(Error::InvalidConfig("mode set and PSF use different grids".into()));
        }
        coeffs.matrices()?;
        let (pi1, pi2) = coeffs.mode_functions(modes)?;
        Ok(Self {
            psf: psf.clone(),
            coeffs,
            center: modes.center(),
            pi1,
            pi2,
        })
    }

    /// Builds the three-mode derivative basis at `center` first.
    pub fn aligned_at(psf: &PsfSpec, center: f64, coeffs: PovmCoeffs) -> Result<Self> {
        let modes = build_derivative_basis(psf, center, 3)?;
        Self::new(psf, &modes, coeffs)
    }

    pub fn psf(&self) -> &PsfSpec {
        &self.psf
    }

    pub fn coeffs(&self) -> PovmCoeffs {
        self.coeffs
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    fn check_alignment(&self, src: &SourceConfig) -> Result<()> {
        if (src.s0_hat - self.center).abs() > 1e-12 * self.psf.width() {
            return Err(Error::InvalidConfig(format!(
                "measurement is aligned at {}, source config expects {}",
                self.center, src.s0_hat
            )));
        }
        Ok(())
    }

    /// Unclamped `(p1, p2, p3)` for centroid `s0` and signed separation `s`.
    pub(crate) fn raw_probabilities(&self, s0: f64, s: f64) -> Result<Vector3<f64>> {
        let h = self.psf.grid().spacing();
        let (mut p1, mut p2) = (0.0, 0.0);
        for d in [s0 + 0.5 * s, s0 - 0.5 * s] {
            let state = self.psf.displace(d)?;
            p1 += 0.5 * numerics::inner(&self.pi1, &state, h).powi(2);
            p2 += 0.5 * numerics::inner(&self.pi2, &state, h).powi(2);
        }
        Ok(Vector3::new(p1, p2, 1.0 - p1 - p2))
    }

    pub fn probabilities(&self, src: &SourceConfig) -> Result<ProbVector> {
        self.check_alignment(src)?;
        let p = self.raw_probabilities(src.s0, src.s)?;
        for (outcome, &value) in p.iter().enumerate() {
            if value < -NEGATIVE_PROB_TOL {
                return Err(Error::NegativeProbability {
                    outcome: outcome + 1,
                    value,
                });
            }
        }
        Ok(ProbVector {
            p1: p[0].max(0.0),
            p2: p[1].max(0.0),
            p3: p[2].max(0.0),
        })
    }

    /// CFI at the default step, shrinking it by 4x up to twice when the
    /// coarse and fine differences disagree.
    pub fn cfi(&self, src: &SourceConfig) -> Result<Matrix2<f64>> {
        let mut step = FD_REL_STEP;
        for _ in 0..2 {
            match self.cfi_with_step(src, step) {
                Err(Error::StepTooLarge(_)) => step *= 0.25,
                other => return other,
            }
        }
        self.cfi_with_step(src, step)
    }

    /// `F_jk = sum_i d_j p_i d_k p_i / p_i` with Richardson-extrapolated
    /// central differences of step `rel_step * width` in `(s0, s)`.
    pub fn cfi_with_step(&self, src: &SourceConfig, rel_step: f64) -> Result<Matrix2<f64>> {
        self.check_alignment(src)?;
        let width = self.psf.width();
        if src.s < MIN_SEPARATION * width {
            return Err(Error::SeparationTooSmall {
                s: src.s,
                min: MIN_SEPARATION * width,
            });
        }
        // keep the s-stencil on one side of s = 0
        let h = (rel_step * width).min(0.25 * src.s);
        let p = self.raw_probabilities(src.s0, src.s)?;
        let d_s0 = central(|t| self.raw_probabilities(src.s0 + t, src.s), h)?;
        let d_s = central(|t| self.raw_probabilities(src.s0, src.s + t), h)?;

        let assemble = |a: &Vector3<f64>, b: &Vector3<f64>| -> Result<Matrix2<f64>> {
            let mut f = Matrix2::zeros();
            for i in 0..3 {
                let slope = a[i].abs().max(b[i].abs());
                if p[i] < DROP_PROB && slope < DROP_SLOPE {
                    continue;
                }
                if !(p[i] > 1e-300) {
                    return Err(Error::SingularFisher { outcome: i + 1 });
                }
                let g = [a[i], b[i]];
                for j in 0..2 {
                    for k in 0..2 {
                        f[(j, k)] += g[j] * g[k] / p[i];
                    }
                }
            }
            Ok(f)
        };
        let f = assemble(&d_s0.0, &d_s.0)?;
        let coarse = assemble(&d_s0.1, &d_s.1)?;
        let fine = assemble(&d_s0.2, &d_s.2)?;
        let scale = fine.amax();
        if scale > 0.0 {
            let disagreement = (coarse - fine).amax() / scale;
            if disagreement > RICHARDSON_TOL {
                return Err(Error::StepTooLarge(disagreement));
            }
        }
        Ok(f)
    }
}

/// Richardson-extrapolated central difference for fallible evaluations.
fn central<T, F>(f: F, h: f64) -> Result<(T, T, T)>
where
    T: Clone + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    F: Fn(f64) -> Result<T>,
{
    let v = [f(h)?, f(-h)?, f(0.5 * h)?, f(-0.5 * h)?];
    Ok(numerics::richardson(
        |t| {
            let i = match (t.abs() == h, t > 0.0) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            v[i].clone()
        },
        h,
    ))
}

pub fn outcome_probs(psf: &PsfSpec, modes: &ModeSet, coeffs: &PovmCoeffs, src: &SourceConfig) -> Result<ProbVector> {
    Measurement::new(psf, modes, *coeffs)?.probabilities(src)
}

pub fn cfi_matrix(
    psf: &PsfSpec,
    modes: &ModeSet,
    coeffs: &PovmCoeffs,
    src: &SourceConfig,
    fd_rel_step: f64,
) -> Result<Matrix2<f64>> {
    Measurement::new(psf, modes, *coeffs)?.cfi_with_step(src, fd_rel_step)
}

/// Leading-order CFI for small separations:
///
/// ```text
/// F_s0s0 = 4 p2 (eps_s0^2 + eps_s^2 / (1 + r))
/// F_s0s  = 4 eps_s^2 / (4 r + 1/r)
/// F_ss   = p2 eps_s^2 r / (1 + r)
/// ```
///
/// `r = +inf` gives `diag(4 p2 eps_s0^2, p2 eps_s^2)`.
pub fn cfi_smallsep_closedform(m: &Moments, e: &EpsilonPair, r: f64) -> Matrix2<f64> {
    let (es, e0) = (e.eps_s_sq, e.eps_s0_sq);
    if r.is_infinite() {
        return Matrix2::new(4.0 * m.p2 * e0, 0.0, 0.0, m.p2 * es);
    }
    let off = 4.0 * es / (4.0 * r + 1.0 / r);
    Matrix2::new(4.0 * m.p2 * (e0 + es / (1.0 + r)), off, off, m.p2 * es * r / (1.0 + r))
}

/// `<Psi_+|Psi_->` for sources a distance `s` apart.
pub fn overlap(psf: &PsfSpec, s: f64) -> Result<f64> {
    let h = psf.grid().spacing();
    Ok(numerics::inner(&psf.displace(0.5 * s)?, &psf.displace(-0.5 * s)?, h))
}

/// `4 [p2 - |ov|^2 (1 - |ov|^2) / 4]`. Agrees with the exact centroid QFI,
/// [`qfi_centroid_exact`], to second order in the separation only.
pub fn qfi_centroid_closedform(m: &Moments, ov: f64) -> f64 {
    let ov2 = ov * ov;
    4.0 * (m.p2 - ov2 * (1.0 - ov2) / 4.0)
}

/// Exact centroid QFI of the two-source mixture, `4 p2 - 4 (d<Psi_+|Psi_->/ds)^2`.
/// The centroid generator is `P`; for a real symmetric PSF the only
/// coherence between the two eigenvectors is `<Psi_+|P|Psi_->`.
pub fn qfi_centroid_exact(psf: &PsfSpec, s: f64) -> Result<f64> {
    let m = psf.moments()?;
    let h = psf.grid().spacing();
    let plus = psf.displace(0.5 * s)?;
    let minus = psf.displace(-0.5 * s)?;
    let d_plus = psf.displace_derivative(0.5 * s)?;
    let d_minus = psf.displace_derivative(-0.5 * s)?;
    let slope = 0.5 * (numerics::inner(&plus, &d_minus, h) - numerics::inner(&d_plus, &minus, h));
    Ok(4.0 * m.p2 - 4.0 * slope * slope)
}

fn truncated_state(psf: &PsfSpec, modes: &ModeSet, s0: f64, s: f64) -> Result<(DMatrix<f64>, f64)> {
    let n = modes.len();
    let mut rho = DMatrix::zeros(n, n);
    let mut deficit: f64 = 0.0;
    for d in [s0 + 0.5 * s, s0 - 0.5 * s] {
        let c = nalgebra::DVector::from_vec(modes.overlaps(psf, d)?);
        deficit = deficit.max(1.0 - c.norm_squared());
        rho += &c * c.transpose() * 0.5;
    }
    Ok((rho, deficit))
}

/// Numerical QFI matrix from the SLD spectral formula in a truncated
/// derivative basis: `Q_jk = sum 2 <a|d_j rho|b><b|d_k rho|a> / (l_a + l_b)`
/// over eigenpairs with `l_a + l_b > 1e-12`, with `d rho` by
/// Richardson-extrapolated central differences.
pub fn qfi_oracle(psf: &PsfSpec, modes: &ModeSet, src: &SourceConfig) -> Result<Matrix2<f64>> {
    if modes.len() < 6 {
        return Err(Error::InvalidConfig("QFI oracle needs at least 6 basis modes".into()));
    }
    if (modes.center() - src.s0_hat).abs() > 1e-12 * psf.width() {
        return Err(Error::InvalidConfig("mode set is not centered at s0_hat".into()));
    }
    let (rho, deficit) = truncated_state(psf, modes, src.s0, src.s)?;
    if deficit > TRUNCATION_TOL {
        return Err(Error::TruncationTooSmall(deficit));
    }
    let h = FD_REL_STEP * psf.width();
    let state = |s0: f64, s: f64| truncated_state(psf, modes, s0, s).map(|(r, _)| r);
    let d_s0 = central(|t| state(src.s0 + t, src.s), h)?.0;
    let d_s = central(|t| state(src.s0, src.s + t), h)?.0;

    let eig = SymmetricEigen::new(rho);
    let v = &eig.eigenvectors;
    let a = [v.transpose() * &d_s0 * v, v.transpose() * &d_s * v];
    let lambda = &eig.eigenvalues;
    let n = lambda.len();
    let mut q = Matrix2::zeros();
    for i in 0..n {
        for j in 0..n {
            let denom = lambda[i] + lambda[j];
            if denom <= SLD_EIGEN_FLOOR {
                continue;
            }
            for p in 0..2 {
                for r in 0..2 {
                    q[(p, r)] += 2.0 * a[p][(i, j)] * a[r][(j, i)] / denom;
                }
            }
        }
    }
    Ok(q)
}

/// QFI matrix with the oracle basis grown from 6 modes until both displaced
/// states are captured to better than `1e-12`, keeping the size with the
/// smallest deficit.
///
/// For sampled PSFs the high-order modes come from repeated finite
/// differences, which amplify any amplitude left at the grid edge; such
/// PSFs need tails that vanish well inside the grid.
pub fn qfi(psf: &PsfSpec, src: &SourceConfig) -> Result<Matrix2<f64>> {
    let mut best: Option<(f64, ModeSet)> = None;
    for &n in &ORACLE_SIZES {
        let modes = match build_derivative_basis(psf, src.s0_hat, n) {
            Ok(m) => m,
            Err(Error::DegenerateBasis { .. }) if best.is_some() => break,
            Err(e) => return Err(e),
        };
        let (_, deficit) = truncated_state(psf, &modes, src.s0, src.s)?;
        if best.as_ref().is_none_or(|(d, _)| deficit < *d) {
            best = Some((deficit, modes));
        }
        if deficit < 1e-12 {
            break;
        }
    }
    let (_, modes) = best.expect("at least one basis size");
    qfi_oracle(psf, &modes, src)
}

/// Squared information regrets `1 - F_jj / Q_jj`, clamped to `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regrets {
    pub s0_sq: f64,
    pub s_sq: f64,
}

impl Regrets {
    pub fn sum(&self) -> f64 {
        self.s0_sq + self.s_sq
    }
}

pub fn regrets(f: &Matrix2<f64>, q: &Matrix2<f64>) -> Result<Regrets> {
    let one = |j: usize| -> Result<f64> {
        if !(q[(j, j)] > 0.0) {
            return Err(Error::ZeroQfi(j));
        }
        Ok((1.0 - f[(j, j)] / q[(j, j)]).clamp(0.0, 1.0))
    };
    Ok(Regrets {
        s0_sq: one(0)?,
        s_sq: one(1)?,
    })
}

/// CFI of ideal direct intensity detection,
/// `F_jk = integral d_j I d_k I / I` with `I = (|Psi_+|^2 + |Psi_-|^2) / 2`.
pub fn direct_imaging_cfi(psf: &PsfSpec, src: &SourceConfig) -> Result<Matrix2<f64>> {
    let h = psf.grid().spacing();
    let (dp, dm) = (src.delta_plus() + src.s0_hat, src.delta_minus() + src.s0_hat);
    let (a, b) = (psf.displace(dp)?, psf.displace(dm)?);
    let (da, db) = (psf.displace_derivative(dp)?, psf.displace_derivative(dm)?);
    let n = a.len();
    let mut integrands = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let intensity = 0.5 * (a[i] * a[i] + b[i] * b[i]);
        if intensity < 1e-300 {
            continue;
        }
        // d/ds0 and d/ds of I; each source moves by -d/dx
        let g0 = -(a[i] * da[i] + b[i] * db[i]);
        let g1 = -0.5 * (a[i] * da[i] - b[i] * db[i]);
        integrands[0][i] = g0 * g0 / intensity;
        integrands[1][i] = g0 * g1 / intensity;
        integrands[2][i] = g1 * g1 / intensity;
    }
    let [f00, f01, f11] = integrands.map(|v| numerics::trapezoid(&v, h));
    Ok(Matrix2::new(f00, f01, f01, f11))
}

/// CFI and QFI side by side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FisherReport {
    pub f: Matrix2<f64>,
    pub q: Matrix2<f64>,
    pub regrets: Regrets,
    /// Smallest eigenvalue of `Q - F`.
    pub psd_gap: f64,
}

impl FisherReport {
    pub fn new(f: Matrix2<f64>, q: Matrix2<f64>) -> Result<Self> {
        let regrets = regrets(&f, &q)?;
        let psd_gap = (q - f).symmetric_eigenvalues().min();
        Ok(Self { f, q, regrets, psd_gap })
    }

    pub fn compute(measurement: &Measurement, src: &SourceConfig) -> Result<Self> {
        Self::new(measurement.cfi(src)?, qfi(measurement.psf(), src)?)
    }
}
