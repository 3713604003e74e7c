//! Seeded multinomial simulation and maximum-likelihood estimation.
//!
//! Random streams come from xoshiro256++ (Blackman and Vigna), seeded
//! through SplitMix64 as in `rand_core::SeedableRng::seed_from_u64`.
//! Repetition `i` of a study uses seed `seed ^ i`.

use nalgebra::Matrix2;
use rand::SeedableRng;
use rand_distr::{Binomial, Distribution};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fisher::{qfi, Measurement, ProbVector, SourceConfig};

pub const MIN_SHOTS: u64 = 100;
pub const GRID_STEPS: usize = 41;
pub const SIMPLEX_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 2000;
const FLAT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Counts {
    pub n1: u64,
    pub n2: u64,
    pub n3: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.n1 + self.n2 + self.n3
    }

    pub fn as_array(&self) -> [u64; 3] {
        [self.n1, self.n2, self.n3]
    }

    /// Expected counts `N p`, rounded, with the remainder in outcome 3.
    pub fn expected(p: &ProbVector, n: u64) -> Self {
        let n1 = (p.p1 * n as f64).round() as u64;
        let n2 = ((p.p2 * n as f64).round() as u64).min(n - n1);
        Self {
            n1,
            n2,
            n3: n - n1 - n2,
        }
    }
}

fn binomial(n: u64, p: f64, rng: &mut Xoshiro256PlusPlus) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("probability in (0, 1)").sample(rng)
}

/// Multinomial draw of `n` shots as two sequential binomials.
pub fn sample_with(p: &ProbVector, n: u64, rng: &mut Xoshiro256PlusPlus) -> Counts {
    let n1 = binomial(n, p.p1, rng);
    let rest = 1.0 - p.p1;
    let n2 = if rest > 0.0 {
        binomial(n - n1, (p.p2 / rest).min(1.0), rng)
    } else {
        0
    };
    Counts {
        n1,
        n2,
        n3: n - n1 - n2,
    }
}

pub fn sample(p: &ProbVector, n: u64, seed: u64) -> Counts {
    sample_with(p, n, &mut Xoshiro256PlusPlus::seed_from_u64(seed))
}

/// Search box for `(s0, s)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleBounds {
    pub s0: (f64, f64),
    pub s: (f64, f64),
}

impl MleBounds {
    /// `[s0_hat - w, s0_hat + w] x [1e-6 w, 3 w]` for PSF width `w`.
    pub fn around(s0_hat: f64, width: f64) -> Self {
        Self {
            s0: (s0_hat - width, s0_hat + width),
            s: (1e-6 * width, 3.0 * width),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.s0) || !ok(self.s) || self.s.0 < 0.0 {
            return Err(Error::InvalidConfig(format!("invalid MLE bounds {self:?}")));
        }
        Ok(())
    }

    fn to_point(self, u: [f64; 2]) -> (f64, f64) {
        (
            self.s0.0 + u[0] * (self.s0.1 - self.s0.0),
            self.s.0 + u[1] * (self.s.1 - self.s.0),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub s0: f64,
    pub s: f64,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn loglik(counts: &Counts, p: &[f64; 3]) -> f64 {
    counts
        .as_array()
        .iter()
        .zip(p)
        .filter(|(&n, _)| n > 0)
        .map(|(&n, &pi)| n as f64 * pi.max(1e-300).ln())
        .sum()
}

/// Log-likelihood surface for a fixed measurement, with the coarse-grid
/// probabilities tabulated once and shared between data sets.
pub struct Likelihood<'a> {
    measurement: &'a Measurement,
    bounds: MleBounds,
    table: Vec<[f64; 3]>,
}

impl<'a> Likelihood<'a> {
    pub fn new(measurement: &'a Measurement, bounds: MleBounds) -> Result<Self> {
        bounds.validate()?;
        let step = 1.0 / (GRID_STEPS - 1) as f64;
        let table = (0..GRID_STEPS * GRID_STEPS)
            .into_par_iter()
            .map(|k| {
                let (s0, s) = bounds.to_point([(k / GRID_STEPS) as f64 * step, (k % GRID_STEPS) as f64 * step]);
                Self::probs_at(measurement, s0, s)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            measurement,
            bounds,
            table,
        })
    }

    pub fn bounds(&self) -> MleBounds {
        self.bounds
    }

    fn probs_at(m: &Measurement, s0: f64, s: f64) -> Result<[f64; 3]> {
        let p = m.raw_probabilities(s0, s)?;
        Ok([p[0].max(0.0), p[1].max(0.0), p[2].max(0.0)])
    }

    pub fn evaluate(&self, counts: &Counts, s0: f64, s: f64) -> Result<f64> {
        Ok(loglik(counts, &Self::probs_at(self.measurement, s0, s)?))
    }

    fn at_unit(&self, counts: &Counts, u: [f64; 2]) -> Result<f64> {
        let u = [u[0].clamp(0.0, 1.0), u[1].clamp(0.0, 1.0)];
        let (s0, s) = self.bounds.to_point(u);
        self.evaluate(counts, s0, s)
    }

    /// Grid search over the tabulated box, then Nelder-Mead refinement in
    /// box-normalized coordinates until the simplex diameter is below
    /// `1e-8` in parameter units. Estimates that end on the box edge are
    /// flagged unconverged.
    pub fn maximize(&self, counts: &Counts) -> Result<Estimate> {
        let values: Vec<f64> = self.table.iter().map(|p| loglik(counts, p)).collect();
        let (best, &top) = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty table");
        let bottom = values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(top - bottom > FLAT_TOL * top.abs().max(1.0)) {
            return Err(Error::NonIdentifiable);
        }
        let step = 1.0 / (GRID_STEPS - 1) as f64;
        let start = [(best / GRID_STEPS) as f64 * step, (best % GRID_STEPS) as f64 * step];
        let (u, value, iterations, shrunk) = self.nelder_mead(counts, start, 0.5 * step)?;
        let on_edge = u.iter().any(|&v| v <= 1e-9 || v >= 1.0 - 1e-9);
        let (s0, s) = self.bounds.to_point(u);
        Ok(Estimate {
            s0,
            s,
            loglik: value,
            converged: shrunk && !on_edge,
            iterations,
        })
    }

    fn nelder_mead(&self, counts: &Counts, start: [f64; 2], scale: f64) -> Result<([f64; 2], f64, usize, bool)> {
        let clamp = |u: [f64; 2]| [u[0].clamp(0.0, 1.0), u[1].clamp(0.0, 1.0)];
        let toward = |a: [f64; 2], b: [f64; 2], t: f64| clamp([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        // minimize the negative log-likelihood
        let f = |u: [f64; 2]| self.at_unit(counts, u).map(|v| -v);
        let mut simplex = [
            clamp(start),
            clamp([start[0] + scale, start[1]]),
            clamp([start[0], start[1] + scale]),
        ];
        if simplex[1] == simplex[0] {
            simplex[1] = clamp([start[0] - scale, start[1]]);
        }
        if simplex[2] == simplex[0] {
            simplex[2] = clamp([start[0], start[1] - scale]);
        }
        let mut fx = [f(simplex[0])?, f(simplex[1])?, f(simplex[2])?];
        // measured in parameter units, not box units
        let widths = [self.bounds.s0.1 - self.bounds.s0.0, self.bounds.s.1 - self.bounds.s.0];
        let diameter = |s: &[[f64; 2]; 3]| {
            let d = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]) * widths[0]).abs().max(((a[1] - b[1]) * widths[1]).abs());
            d(s[0], s[1]).max(d(s[0], s[2])).max(d(s[1], s[2]))
        };
        for iter in 0..MAX_ITERATIONS {
            let mut order = [0, 1, 2];
            order.sort_by(|&a, &b| fx[a].total_cmp(&fx[b]));
            simplex = order.map(|i| simplex[i]);
            fx = order.map(|i| fx[i]);
            if diameter(&simplex) < SIMPLEX_TOL {
                return Ok((simplex[0], -fx[0], iter, true));
            }
            let centroid = [
                0.5 * (simplex[0][0] + simplex[1][0]),
                0.5 * (simplex[0][1] + simplex[1][1]),
            ];
            let reflected = toward(centroid, simplex[2], -1.0);
            let fr = f(reflected)?;
            if fr < fx[0] {
                let expanded = toward(centroid, simplex[2], -2.0);
                let fe = f(expanded)?;
                (simplex[2], fx[2]) = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            } else if fr < fx[1] {
                (simplex[2], fx[2]) = (reflected, fr);
            } else {
                let (contracted, fc) = if fr < fx[2] {
                    let c = toward(centroid, reflected, 0.5);
                    (c, f(c)?)
                } else {
                    let c = toward(centroid, simplex[2], 0.5);
                    (c, f(c)?)
                };
                if fc < fx[2].min(fr) {
                    (simplex[2], fx[2]) = (contracted, fc);
                } else {
                    for k in 1..3 {
                        simplex[k] = toward(simplex[0], simplex[k], 0.5);
                        fx[k] = f(simplex[k])?;
                    }
                }
            }
        }
        let k = (0..3).min_by(|&a, &b| fx[a].total_cmp(&fx[b])).expect("three vertices");
        Ok((simplex[k], -fx[k], MAX_ITERATIONS, false))
    }
}

/// One-off maximum-likelihood fit; tabulates the coarse grid on every call.
pub fn mle(measurement: &Measurement, counts: &Counts, bounds: MleBounds) -> Result<Estimate> {
    Likelihood::new(measurement, bounds)?.maximize(counts)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub shots: u64,
    pub truth: SourceConfig,
    pub seed: u64,
    pub repetitions: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shots < MIN_SHOTS {
            return Err(Error::InvalidConfig(format!(
                "need at least {MIN_SHOTS} shots, got {}",
                self.shots
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("need at least one repetition".into()));
        }
        Ok(())
    }
}

/// Aggregate of a repeated experiment against the Cramer-Rao bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceStudy {
    pub estimates: Vec<Estimate>,
    pub truth_probs: ProbVector,
    pub mean: (f64, f64),
    /// Unbiased sample covariance of `(s0_hat, s_hat)`; `None` for one repetition.
    pub covariance: Option<Matrix2<f64>>,
    pub fisher: Matrix2<f64>,
    /// `F^-1 / N`.
    pub crb: Matrix2<f64>,
    /// `Q^-1 / N`.
    pub qcrb: Matrix2<f64>,
    /// Elementwise `covariance / crb` on the diagonal.
    pub variance_ratios: Option<(f64, f64)>,
    /// Smallest eigenvalue of `covariance - crb`.
    pub crb_gap: Option<f64>,
    /// Standard errors `crb_jj sqrt(2 / (R - 1))` of the variance estimates
    /// under the bound.
    pub variance_se: Option<(f64, f64)>,
}

impl CovarianceStudy {
    pub fn converged(&self) -> usize {
        self.estimates.iter().filter(|e| e.converged).count()
    }

    /// `covariance - crb` has no eigenvalue below `-k` standard errors.
    pub fn respects_bound(&self, k: f64) -> Option<bool> {
        let (gap, se) = (self.crb_gap?, self.variance_se?);
        Some(gap >= -k * se.0.max(se.1))
    }
}

/// Runs `repetitions` independent experiments in parallel with the MLE box
/// centered on the measurement alignment.
pub fn covariance_study(measurement: &Measurement, cfg: &ExperimentConfig) -> Result<CovarianceStudy> {
    let bounds = MleBounds::around(measurement.center(), measurement.psf().width());
    covariance_study_in(measurement, cfg, bounds)
}

pub fn covariance_study_in(
    measurement: &Measurement,
    cfg: &ExperimentConfig,
    bounds: MleBounds,
) -> Result<CovarianceStudy> {
    cfg.validate()?;
    let truth = cfg.truth;
    let p = measurement.probabilities(&truth)?;
    let fisher = measurement.cfi(&truth)?;
    let q = qfi(measurement.psf(), &truth)?;
    let n = cfg.shots as f64;
    let invert = |m: Matrix2<f64>, outcome| m.try_inverse().ok_or(Error::SingularFisher { outcome });
    let crb = invert(fisher, 0)? / n;
    let qcrb = invert(q, 0)? / n;

    let likelihood = Likelihood::new(measurement, bounds)?;
    let estimates = (0..cfg.repetitions)
        .into_par_iter()
        .map(|i| likelihood.maximize(&sample(&p, cfg.shots, cfg.seed ^ i as u64)))
        .collect::<Result<Vec<_>>>()?;

    let r = estimates.len() as f64;
    let mean = (
        estimates.iter().map(|e| e.s0).sum::<f64>() / r,
        estimates.iter().map(|e| e.s).sum::<f64>() / r,
    );
    let (mut covariance, mut variance_ratios, mut crb_gap, mut variance_se) = (None, None, None, None);
    if estimates.len() > 1 {
        let mut c = Matrix2::zeros();
        for e in &estimates {
            let d = [e.s0 - mean.0, e.s - mean.1];
            for j in 0..2 {
                for k in 0..2 {
                    c[(j, k)] += d[j] * d[k];
                }
            }
        }
        c /= r - 1.0;
        let factor = (2.0 / (r - 1.0)).sqrt();
        variance_ratios = Some((c[(0, 0)] / crb[(0, 0)], c[(1, 1)] / crb[(1, 1)]));
        crb_gap = Some((c - crb).symmetric_eigenvalues().min());
        variance_se = Some((crb[(0, 0)] * factor, crb[(1, 1)] * factor));
        covariance = Some(c);
    }
    Ok(CovarianceStudy {
        estimates,
        truth_probs: p,
        mean,
        covariance,
        fisher,
        crb,
        qcrb,
        variance_ratios,
        crb_gap,
        variance_se,
    })
}
