//! Three-outcome POVM family in the span of the first three basis modes.
//!
//! `|pi1> = a2 |Phi2> + a3 |Phi3>` (orthogonal to the PSF state) and
//! `|pi2> = b1 |Phi1> + b2 |Phi2> + b3 |Phi3>` define
//! `Pi1 = |pi1><pi1|`, `Pi2 = |pi2><pi2|`, `Pi3 = 1 - Pi1 - Pi2`.
//! For small separations the measurement captures a fraction
//! `eps_s^2 = a2^2` of the separation information and
//! `eps_s0^2 = b2^2 / (1 - b1^2)` of the centroid information.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use nalgebra::{Matrix2, Matrix3, Vector3};

use crate::basis::ModeSet;
use crate::error::{Error, Result};

/// Angles closer than this to 0 or pi/2 are rejected.
pub const ANGLE_MARGIN: f64 = 1e-6;
const CONDITION_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-10;

/// Angles of the saturating family. `alpha` splits the information between
/// separation and centroid; `beta` rotates `|pi2>` about `|pi1>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnglePair {
    alpha: f64,
    beta: f64,
}

impl AnglePair {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, value) in [("alpha", alpha), ("beta", beta)] {
            if !(ANGLE_MARGIN..=FRAC_PI_2 - ANGLE_MARGIN).contains(&value) {
                return Err(Error::AngleOutOfRange { name, value });
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PovmCoeffs {
    pub a2: f64,
    pub a3: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonPair {
    pub eps_s_sq: f64,
    pub eps_s0_sq: f64,
}

impl EpsilonPair {
    pub fn sum(&self) -> f64 {
        self.eps_s_sq + self.eps_s0_sq
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PovmViolation {
    /// One of `a2, b1, b2` is not strictly positive.
    Sign(&'static str),
    Pi1Norm,
    Pi2Norm,
    /// `a2^2 (1 - b1^2) + b1^2 + b2^2 > 1`: `Pi3` fails on span(Phi1, Phi2).
    SubspaceCondition,
    /// `det(I - G) < 0` for the Gram matrix `G` of `pi1, pi2`.
    DeterminantCondition,
    /// `Pi3` has a negative eigenvalue.
    NotPositive,
    /// The closed-form and eigenvalue tests disagree.
    CheckDisagreement,
}

/// Outcome of [`PovmCoeffs::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct PovmDiagnostics {
    /// `a2^2 (1 - b1^2) + b1^2 + b2^2`, i.e. `1 - det(A Pi3 A)` with `A` the
    /// projector on span(Phi1, Phi2). Must not exceed 1.
    pub subspace_condition: f64,
    /// `1 - det(I - G)` with `G` the Gram matrix of `pi1, pi2`. Together with
    /// the norm bounds this is necessary and sufficient for `Pi3 >= 0`, and it
    /// reduces to `subspace_condition` when `a3 = b3 = 0`.
    pub determinant_condition: f64,
    pub pi1_norm_sq: f64,
    pub pi2_norm_sq: f64,
    /// Smallest eigenvalue of the 3x3 restriction of `Pi3`.
    pub min_eigenvalue: f64,
    pub closed_form_valid: bool,
    pub eigen_valid: bool,
    pub violations: Vec<PovmViolation>,
}

impl PovmDiagnostics {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn checks_agree(&self) -> bool {
        self.closed_form_valid == self.eigen_valid
    }
}

impl fmt::Display for PovmDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "subspace condition {:.12}, determinant condition {:.12}, min eigenvalue of Pi3 {:e}",
            self.subspace_condition, self.determinant_condition, self.min_eigenvalue
        )?;
        if !self.violations.is_empty() {
            write!(f, "; violated: {:?}", self.violations)?;
        }
        Ok(())
    }
}

impl PovmCoeffs {
    pub fn new(a2: f64, a3: f64, b1: f64, b2: f64, b3: f64) -> Self {
        Self { a2, a3, b1, b2, b3 }
    }

    /// `|pi1> = (0, cos a, sin a)`, `|pi2> = (cos b, sin a sin b, -cos a sin b)`.
    pub fn from_angles(angles: AnglePair) -> Self {
        let (sa, ca) = angles.alpha.sin_cos();
        let (sb, cb) = angles.beta.sin_cos();
        Self {
            a2: ca,
            a3: sa,
            b1: cb,
            b2: sa * sb,
            b3: -ca * sb,
        }
    }

    pub fn pi1(&self) -> Vector3<f64> {
        Vector3::new(0.0, self.a2, self.a3)
    }

    pub fn pi2(&self) -> Vector3<f64> {
        Vector3::new(self.b1, self.b2, self.b3)
    }

    pub fn epsilons(&self) -> Result<EpsilonPair> {
        let gap = 1.0 - self.b1 * self.b1;
        if !(gap >= 1e-12) {
            return Err(Error::DegenerateB1(gap));
        }
        Ok(EpsilonPair {
            eps_s_sq: self.a2 * self.a2,
            eps_s0_sq: self.b2 * self.b2 / gap,
        })
    }

    pub fn subspace_condition(&self) -> f64 {
        let b1sq = self.b1 * self.b1;
        self.a2 * self.a2 * (1.0 - b1sq) + b1sq + self.b2 * self.b2
    }

    fn gram(&self) -> Matrix2<f64> {
        let (u, v) = (self.pi1(), self.pi2());
        let uv = u.dot(&v);
        Matrix2::new(u.norm_squared(), uv, uv, v.norm_squared())
    }

    fn pi3_unchecked(&self) -> Matrix3<f64> {
        let (u, v) = (self.pi1(), self.pi2());
        Matrix3::identity() - u * u.transpose() - v * v.transpose()
    }

    pub fn validate(&self) -> PovmDiagnostics {
        let mut violations = Vec::new();
        for (name, value) in [("a2", self.a2), ("b1", self.b1), ("b2", self.b2)] {
            if !(value > 0.0) {
                violations.push(PovmViolation::Sign(name));
            }
        }
        let g = self.gram();
        let (pi1_norm_sq, pi2_norm_sq) = (g[(0, 0)], g[(1, 1)]);
        let subspace_condition = self.subspace_condition();
        let determinant_condition = 1.0 - (Matrix2::identity() - g).determinant();
        let min_eigenvalue = self.pi3_unchecked().symmetric_eigenvalues().min();

        let norms_ok = pi1_norm_sq <= 1.0 + CONDITION_TOL && pi2_norm_sq <= 1.0 + CONDITION_TOL;
        if pi1_norm_sq > 1.0 + CONDITION_TOL {
            violations.push(PovmViolation::Pi1Norm);
        }
        if pi2_norm_sq > 1.0 + CONDITION_TOL {
            violations.push(PovmViolation::Pi2Norm);
        }
        let subspace_ok = subspace_condition <= 1.0 + CONDITION_TOL;
        if !subspace_ok {
            violations.push(PovmViolation::SubspaceCondition);
        }
        let determinant_ok = determinant_condition <= 1.0 + CONDITION_TOL;
        if !determinant_ok {
            violations.push(PovmViolation::DeterminantCondition);
        }
        let eigen_valid = min_eigenvalue >= -EIGEN_TOL;
        if !eigen_valid {
            violations.push(PovmViolation::NotPositive);
        }
        let closed_form_valid = norms_ok && subspace_ok && determinant_ok;
        if closed_form_valid != eigen_valid {
            violations.push(PovmViolation::CheckDisagreement);
        }
        PovmDiagnostics {
            subspace_condition,
            determinant_condition,
            pi1_norm_sq,
            pi2_norm_sq,
            min_eigenvalue,
            closed_form_valid,
            eigen_valid,
            violations,
        }
    }

    fn ensure_valid(&self) -> Result<()> {
        let diag = self.validate();
        if diag.passed() {
            Ok(())
        } else {
            Err(Error::InvalidPovm(diag))
        }
    }

    /// `[Pi1, Pi2, Pi3]` restricted to span(Phi1, Phi2, Phi3).
    pub fn matrices(&self) -> Result<[Matrix3<f64>; 3]> {
        self.ensure_valid()?;
        let (u, v) = (self.pi1(), self.pi2());
        Ok([u * u.transpose(), v * v.transpose(), self.pi3_unchecked()])
    }

    /// `pi1(x)` and `pi2(x)` sampled on the grid of `modes`.
    pub fn mode_functions(&self, modes: &ModeSet) -> Result<(Vec<f64>, Vec<f64>)> {
        if modes.len() < 3 {
            return Err(Error::InvalidConfig("POVM modes need at least 3 basis modes".into()));
        }
        let (p1, p2, p3) = (modes.mode(0), modes.mode(1), modes.mode(2));
        let pi1 = p2.iter().zip(p3).map(|(x, y)| self.a2 * x + self.a3 * y).collect();
        let pi2 = p1
            .iter()
            .zip(p2)
            .zip(p3)
            .map(|((x, y), z)| self.b1 * x + self.b2 * y + self.b3 * z)
            .collect();
        Ok((pi1, pi2))
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    use proptest::prelude::*;

    use super::*;
    use crate::basis::{build_derivative_basis, hg_analytic};
    use crate::numerics;
    use crate::psf::PsfSpec;

    fn angles(a: f64, b: f64) -> PovmCoeffs {
        PovmCoeffs::from_angles(AnglePair::new(a, b).unwrap())
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn balanced_family_coefficients() {
        let c = angles(PI / 4.0, PI / 6.0);
        let expected = [0.7071068, 0.7071068, 0.8660254, 0.3535534, -0.3535534];
        for (got, want) in [c.a2, c.a3, c.b1, c.b2, c.b3].iter().zip(expected) {
            assert!((got - want).abs() < 5e-8);
        }
    }

    #[test]
    fn endpoint_angles_rejected() {
        assert!(AnglePair::new(0.0, 0.3).is_err());
        assert!(AnglePair::new(0.3, PI / 2.0).is_err());
        assert!(AnglePair::new(5e-7, 0.3).is_err());
        assert!(AnglePair::new(2e-6, 0.3).is_ok());
    }

    #[test]
    fn epsilons_examples() {
        let e = angles(PI / 4.0, 0.4).epsilons().unwrap();
        assert!((e.eps_s_sq - 0.5).abs() < 1e-15 && (e.eps_s0_sq - 0.5).abs() < 1e-15);
        let e = angles(PI / 3.0, 1.1).epsilons().unwrap();
        assert!((e.eps_s_sq - 0.25).abs() < 1e-15 && (e.eps_s0_sq - 0.75).abs() < 1e-15);
        let e = PovmCoeffs::new(0.999, 0.0, 0.03, 0.03, 0.0).epsilons().unwrap();
        assert!((e.eps_s_sq - 0.998001).abs() < 1e-15);
        assert!((e.eps_s0_sq - 9.0081e-4).abs() < 1e-8);
        assert!(e.sum() <= 1.0);
        assert!(matches!(
            PovmCoeffs::new(0.5, 0.0, 1.0, 0.0, 0.0).epsilons(),
            Err(Error::DegenerateB1(_))
        ));
    }

    #[test]
    fn validate_examples() {
        let d = PovmCoeffs::new(1.0, 0.0, 0.5, 0.8, 0.0).validate();
        assert!(!d.passed());
        assert!((d.subspace_condition - 1.64).abs() < 1e-12);
        assert!(d.violations.contains(&PovmViolation::SubspaceCondition));
        assert!(d.checks_agree());

        let d = angles(PI / 4.0, PI / 6.0).validate();
        assert!(d.passed(), "{d}");
        assert!(d.min_eigenvalue.abs() < 1e-10);

        let d = PovmCoeffs::new(0.6, 0.0, 0.6, 0.5, 0.0).validate();
        assert!((d.subspace_condition - 0.8404).abs() < 1e-12);
        assert!(d.passed() && d.eigen_valid);
    }

    #[test]
    fn out_of_plane_components_need_full_check() {
        // Passes the span(Phi1, Phi2) condition but pi1, pi2 overlap too much along Phi3.
        let c = PovmCoeffs::new(0.1, 0.99, 0.1, 0.1, 0.99);
        let d = c.validate();
        assert!(d.subspace_condition < 1.0);
        assert!(!d.eigen_valid && !d.closed_form_valid && d.checks_agree());
        assert!(matches!(c.matrices(), Err(Error::InvalidPovm(_))));
    }

    #[test]
    fn matrices_complete_and_traces() {
        let c = angles(PI / 4.0, PI / 6.0);
        let [p1, p2, p3] = c.matrices().unwrap();
        assert_eq!(p1 + p2 + p3, Matrix3::identity());
        assert!((p1.trace() - (c.a2 * c.a2 + c.a3 * c.a3)).abs() < 1e-15);
        let mut eig: Vec<f64> = p3.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        for (got, want) in eig.iter().zip([0.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn mode_functions_for_gaussian() {
        let psf = PsfSpec::gaussian(1.0).unwrap();
        let ms = build_derivative_basis(&psf, 0.0, 3).unwrap();
        let c = angles(PI / 4.0, PI / 6.0);
        let (pi1, pi2) = c.mode_functions(&ms).unwrap();
        let h = psf.grid().spacing();
        assert!((numerics::norm_sq(&pi1, h) - 1.0).abs() < 1e-8);
        assert!((numerics::norm_sq(&pi2, h) - 1.0).abs() < 1e-8);
        assert!(numerics::inner(&pi1, &pi2, h).abs() < 1e-8);
        assert!((numerics::inner(&pi2, ms.mode(0), h) - (PI / 6.0).cos()).abs() < 1e-10);
        for (i, x) in psf.grid().points().iter().enumerate() {
            let hg = (hg_analytic(1, 1.0, *x).unwrap() + hg_analytic(2, 1.0, *x).unwrap()) * FRAC_1_SQRT_2;
            assert!((pi1[i] - hg).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn family_is_orthonormal_and_saturating(
            alpha in ANGLE_MARGIN..(FRAC_PI_2 - ANGLE_MARGIN),
            beta in ANGLE_MARGIN..(FRAC_PI_2 - ANGLE_MARGIN),
        ) {
            let c = angles(alpha, beta);
            prop_assert!(c.pi1().dot(&c.pi2()).abs() < 1e-12);
            prop_assert!((c.subspace_condition() - 1.0).abs() < 1e-12);
            let e = c.epsilons().unwrap();
            // 1 - b1^2 = sin^2(beta) cancels as beta -> 0
            let tol = 1e-12 + 4.0 * f64::EPSILON / beta.sin().powi(2);
            prop_assert!((e.sum() - 1.0).abs() < tol);
            prop_assert!(c.validate().passed());
        }

        #[test]
        fn closed_form_agrees_with_eigenvalues(
            a2 in 0.0..1.2f64, a3 in -1.2..1.2f64,
            b1 in 0.0..1.2f64, b2 in 0.0..1.2f64, b3 in -1.2..1.2f64,
        ) {
            let d = PovmCoeffs::new(a2, a3, b1, b2, b3).validate();
            prop_assert!(d.checks_agree(), "{}", d);
        }

        #[test]
        fn valid_povms_respect_tradeoff(
            a2 in 0.01..1.0f64, a3 in -1.0..1.0f64,
            b1 in 0.01..0.99f64, b2 in 0.01..1.0f64, b3 in -1.0..1.0f64,
        ) {
            let c = PovmCoeffs::new(a2, a3, b1, b2, b3);
            if c.validate().passed() {
                prop_assert!(c.epsilons().unwrap().sum() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn probabilities_invariant_under_mode_sign_flips(
            alpha in 0.1..1.4f64, beta in 0.1..1.4f64,
            c1 in -1.0..1.0f64, c2 in -1.0..1.0f64, c3 in -1.0..1.0f64,
        ) {
            // Flipping Phi2 -> -Phi2 and Phi3 -> -Phi3 flips the state's coordinates;
            // flipping the matching POVM coefficients leaves |<pi|psi>|^2 unchanged.
            let c = angles(alpha, beta);
            let state = Vector3::new(c1, c2, c3);
            let flipped_state = Vector3::new(c1, -c2, -c3);
            let flipped = PovmCoeffs::new(-c.a2, -c.a3, c.b1, -c.b2, -c.b3);
            prop_assert!((c.pi1().dot(&state).powi(2) - flipped.pi1().dot(&flipped_state).powi(2)).abs() < 1e-14);
            prop_assert!((c.pi2().dot(&state).powi(2) - flipped.pi2().dot(&flipped_state).powi(2)).abs() < 1e-14);
        }
    }
}
