use std::f64::consts::PI;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "superres",
    version,
    about = "Two-source superresolution with a three-outcome mode sorter"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write CSV output here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Command {
    /// Print the PSF moments p2, p4 and validation diagnostics.
    Moments(PsfArgs),
    /// Sample the basis modes (and POVM modes, if given) on the grid.
    Modes {
        #[command(flatten)]
        psf: PsfArgs,
        #[command(flatten)]
        povm: OptionalPovm,
        #[arg(long, default_value_t = 3)]
        n_modes: usize,
    },
    /// Check positivity of a POVM given by angles or coefficients.
    PovmCheck(PovmArgs),
    /// Outcome probabilities.
    Probs(PointArgs),
    /// Classical Fisher information of the POVM or of direct imaging.
    Cfi {
        #[command(flatten)]
        point: PointArgs,
        /// Use ideal direct intensity detection instead of the POVM.
        #[arg(long)]
        direct: bool,
    },
    /// Quantum Fisher information.
    Qfi {
        #[command(flatten)]
        psf: PsfArgs,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Regrets of the angle family across alpha at a small separation.
    TradeoffScan {
        #[command(flatten)]
        psf: PsfArgs,
        /// Comma-separated alphas; default k pi/40 for k = 1..19.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<Angle>>,
        #[arg(long, default_value = "pi/6")]
        beta: Angle,
        #[arg(long, default_value_t = 1e-3)]
        s: f64,
    },
    /// Diagonal CFI and QFI against separation for several betas.
    Fig2 {
        #[command(flatten)]
        psf: PsfArgs,
        #[arg(long, default_value = "pi/4")]
        alpha: Angle,
        #[arg(long, value_delimiter = ',', default_value = "pi/12,pi/6,pi/4,pi/3")]
        betas: Vec<Angle>,
        #[arg(long, default_value = "0.01:2:100")]
        scan_s: Scan,
    },
    /// Monte Carlo maximum-likelihood study against the Cramer-Rao bound.
    Simulate {
        #[command(flatten)]
        psf: PsfArgs,
        #[command(flatten)]
        povm: PovmArgs,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 0.0)]
        s0: f64,
        #[arg(long, default_value_t = 1_000_000)]
        shots: u64,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PsfArgs {
    /// Gaussian PSF width.
    #[arg(long, default_value_t = 1.0, conflicts_with = "psf_file")]
    pub sigma: f64,
    /// Sampled PSF amplitudes as `x,amplitude` CSV.
    #[arg(long)]
    pub psf_file: Option<PathBuf>,
    /// Grid `lo:hi:n` for the Gaussian PSF, in units of sigma.
    #[arg(long, conflicts_with = "psf_file")]
    pub grid: Option<Scan>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PovmArgs {
    #[arg(long, default_value = "pi/4")]
    pub alpha: Angle,
    #[arg(long, default_value = "pi/6")]
    pub beta: Angle,
    /// Raw coefficients `a2,a3,b1,b2,b3`; overrides the angles.
    #[arg(long)]
    pub coeffs: Option<Coeffs>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OptionalPovm {
    #[arg(long, requires = "beta", conflicts_with = "coeffs")]
    pub alpha: Option<Angle>,
    #[arg(long, requires = "alpha")]
    pub beta: Option<Angle>,
    #[arg(long)]
    pub coeffs: Option<Coeffs>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SourceArgs {
    #[arg(long, default_value_t = 0.5, conflicts_with = "scan_s")]
    pub s: f64,
    /// Scan separations `lo:hi:n` instead of a single `--s`.
    #[arg(long)]
    pub scan_s: Option<Scan>,
    #[arg(long, default_value_t = 0.0)]
    pub s0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub s0_hat: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PointArgs {
    #[command(flatten)]
    pub psf: PsfArgs,
    #[command(flatten)]
    pub povm: PovmArgs,
    #[command(flatten)]
    pub source: SourceArgs,
}

/// Angle in radians; accepts decimals, `pi`, `pi/k` and `m*pi/k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Angle(pub f64);

impl FromStr for Angle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        let bad = || format!("invalid angle `{s}`");
        let Some(idx) = t.find("pi") else {
            return t.parse().map(Angle).map_err(|_| bad());
        };
        let head = t[..idx].trim_end_matches('*');
        let tail = &t[idx + 2..];
        let m: f64 = if head.is_empty() {
            1.0
        } else {
            head.parse().map_err(|_| bad())?
        };
        let k: f64 = match tail.strip_prefix('/') {
            Some(k) => k.parse().map_err(|_| bad())?,
            None if tail.is_empty() => 1.0,
            None => return Err(bad()),
        };
        if k == 0.0 {
            return Err(bad());
        }
        Ok(Angle(m * PI / k))
    }
}

/// POVM coefficients `a2,a3,b1,b2,b3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coeffs(pub [f64; 5]);

impl FromStr for Coeffs {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values = s
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("invalid coefficient list `{s}`: {e}"))?;
        let arr: [f64; 5] = values
            .try_into()
            .map_err(|v: Vec<f64>| format!("expected 5 coefficients a2,a3,b1,b2,b3, got {}", v.len()))?;
        Ok(Coeffs(arr))
    }
}

/// Inclusive linear range `lo:hi:n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scan {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Scan {
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.lo + i as f64 * step).collect()
    }
}

impl FromStr for Scan {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected lo:hi:n, got `{s}`");
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err(bad());
        };
        let scan = Scan {
            lo: lo.trim().parse().map_err(|_| bad())?,
            hi: hi.trim().parse().map_err(|_| bad())?,
            n: n.trim().parse().map_err(|_| bad())?,
        };
        if scan.n == 0 || !scan.lo.is_finite() || !scan.hi.is_finite() || scan.hi < scan.lo {
            return Err(bad());
        }
        Ok(scan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_literals() {
        assert_eq!("pi/4".parse::<Angle>().unwrap().0, PI / 4.0);
        assert_eq!("3pi/8".parse::<Angle>().unwrap().0, 3.0 * PI / 8.0);
        assert_eq!("2*pi/5".parse::<Angle>().unwrap().0, 2.0 * PI / 5.0);
        assert_eq!("PI".parse::<Angle>().unwrap().0, PI);
        assert_eq!("0.25".parse::<Angle>().unwrap().0, 0.25);
        assert!("pi/0".parse::<Angle>().is_err());
        assert!("pie".parse::<Angle>().is_err());
    }

    #[test]
    fn scan_ranges() {
        let s: Scan = "0.01:2:100".parse().unwrap();
        let v = s.values();
        assert_eq!(v.len(), 100);
        assert_eq!(v[0], 0.01);
        assert!((v[99] - 2.0).abs() < 1e-12);
        assert_eq!("1:1:1".parse::<Scan>().unwrap().values(), vec![1.0]);
        assert!("1:0:5".parse::<Scan>().is_err());
        assert!("1:2".parse::<Scan>().is_err());
        assert_eq!(
            "0.5, 0, 0.5, 0.5, 0".parse::<Coeffs>().unwrap().0,
            [0.5, 0.0, 0.5, 0.5, 0.0]
        );
        assert!("1,2,3".parse::<Coeffs>().is_err());
    }
}
