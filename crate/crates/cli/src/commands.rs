use std::f64::consts::PI;

use rayon::prelude::*;
use superres_core::{
    build_derivative_basis, covariance_study, direct_imaging_cfi, qfi, regrets, AnglePair, Error, ExperimentConfig,
    Grid, Matrix2, Measurement, PovmCoeffs, PsfSpec, Result, SourceConfig,
};

use crate::args::{Angle, Cli, Coeffs, Command, OptionalPovm, PovmArgs, PsfArgs, SourceArgs};
use crate::output::{config_hash, num, Table};

/// Grid used by `simulate` for the Gaussian PSF when none is given; the
/// likelihood search displaces the PSF by up to 2.5 widths.
const SIMULATE_HALF_WIDTH: f64 = 10.0;
const SIMULATE_POINTS: usize = 5120;

/// PSF with the length unit used for CLI input and output.
struct Loaded {
    psf: PsfSpec,
    unit: f64,
    label: &'static str,
}

impl Loaded {
    fn from_args(args: &PsfArgs, default_grid: Option<(f64, usize)>) -> Result<Self> {
        if let Some(path) = &args.psf_file {
            return Ok(Self {
                psf: PsfSpec::from_csv_path(path)?,
                unit: 1.0,
                label: "raw",
            });
        }
        let sigma = args.sigma;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
        }
        let grid = match (args.grid, default_grid) {
            (Some(g), _) => Grid::new(g.lo * sigma, g.hi * sigma, g.n)?,
            (None, Some((half, n))) => Grid::symmetric(half * sigma, n)?,
            (None, None) => Grid::for_gaussian(sigma)?,
        };
        Ok(Self {
            psf: PsfSpec::gaussian_on(sigma, grid)?,
            unit: sigma,
            label: "sigma",
        })
    }

    fn units(&self) -> String {
        format!("length:{},fisher:1/length^2", self.label)
    }
}

fn povm(args: &PovmArgs) -> Result<PovmCoeffs> {
    match &args.coeffs {
        Some(c) => Ok(coeffs(c)),
        None => family(args.alpha, args.beta),
    }
}

fn coeffs(c: &Coeffs) -> PovmCoeffs {
    let [a2, a3, b1, b2, b3] = c.0;
    PovmCoeffs::new(a2, a3, b1, b2, b3)
}

fn family(alpha: Angle, beta: Angle) -> Result<PovmCoeffs> {
    Ok(PovmCoeffs::from_angles(AnglePair::new(alpha.0, beta.0)?))
}

fn optional_povm(args: &OptionalPovm) -> Result<Option<PovmCoeffs>> {
    match (&args.coeffs, args.alpha, args.beta) {
        (Some(c), _, _) => Ok(Some(coeffs(c))),
        (None, Some(a), Some(b)) => family(a, b).map(Some),
        _ => Ok(None),
    }
}

/// Source configurations in physical units, one per scanned separation.
fn sources(args: &SourceArgs, unit: f64) -> Result<Vec<SourceConfig>> {
    let seps = args.scan_s.map(|s| s.values()).unwrap_or_else(|| vec![args.s]);
    seps.iter()
        .map(|&s| SourceConfig::new(args.s0 * unit, s * unit, args.s0_hat * unit))
        .collect()
}

fn header(cli: &Cli, seed: Option<u64>, units: &str) -> String {
    let name = match &cli.command {
        Command::Moments(_) => "moments",
        Command::Modes { .. } => "modes",
        Command::PovmCheck(_) => "povm-check",
        Command::Probs(_) => "probs",
        Command::Cfi { .. } => "cfi",
        Command::Qfi { .. } => "qfi",
        Command::TradeoffScan { .. } => "tradeoff-scan",
        Command::Fig2 { .. } => "fig2",
        Command::Simulate { .. } => "simulate",
    };
    let json = serde_json::to_string(cli).expect("config serializes");
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    format!(
        "# superres {} cmd={name} config={} seed={seed} units={units}",
        env!("CARGO_PKG_VERSION"),
        config_hash(&json)
    )
}

fn source_cells(src: &SourceConfig, unit: f64) -> Vec<String> {
    vec![num(src.s() / unit), num(src.s0() / unit), num(src.s0_hat() / unit)]
}

fn matrix_cells(m: &Matrix2<f64>) -> [String; 3] {
    [num(m[(0, 0)]), num(m[(0, 1)]), num(m[(1, 1)])]
}

/// Runs the parsed command and returns the finished table. A table is also
/// returned alongside validation failures that still have a report to show.
pub fn run(cli: &Cli) -> std::result::Result<Table, (Option<Table>, Error)> {
    let plain = |e: Error| (None, e);
    match &cli.command {
        Command::Moments(psf_args) => {
            let loaded = Loaded::from_args(psf_args, None).map_err(plain)?;
            let diag = loaded.psf.validate();
            let mut t = Table::new(&header(cli, None, &loaded.units()), &["quantity", "value"]);
            t.row(&["normalization_error".to_string(), num(diag.normalization_error)]);
            t.row(&["asymmetry".to_string(), num(diag.asymmetry)]);
            t.row(&["tail_mass".to_string(), num(diag.tail_mass)]);
            t.row(&["valid", if diag.passed() { "true" } else { "false" }]);
            if !diag.passed() {
                return Err((Some(t), Error::InvalidPsf(diag)));
            }
            let m = loaded.psf.moments().map_err(plain)?;
            t.row(&["p2".to_string(), num(m.p2)]);
            t.row(&["p4".to_string(), num(m.p4)]);
            Ok(t)
        }
        Command::Modes { psf, povm: p, n_modes } => {
            let loaded = Loaded::from_args(psf, None).map_err(plain)?;
            let coeffs = optional_povm(p).map_err(plain)?;
            let modes = build_derivative_basis(&loaded.psf, 0.0, *n_modes).map_err(plain)?;
            let mut columns = vec!["x".to_string()];
            let mut data: Vec<Vec<f64>> = vec![loaded.psf.grid().points()];
            if let Some(c) = coeffs {
                let (pi1, pi2) = c.matrices().and_then(|_| c.mode_functions(&modes)).map_err(plain)?;
                columns.extend(["pi1".to_string(), "pi2".to_string()]);
                data.extend([pi1, pi2]);
            }
            for k in 0..modes.len() {
                columns.push(format!("phi{}", k + 1));
                data.push(modes.mode(k).to_vec());
            }
            let names: Vec<&str> = columns.iter().map(String::as_str).collect();
            let mut t = Table::new(&header(cli, None, &loaded.units()), &names);
            // amplitudes carry units of length^-1/2
            let amp = loaded.unit.sqrt();
            for i in 0..data[0].len() {
                let mut row = vec![num(data[0][i] / loaded.unit)];
                row.extend(data[1..].iter().map(|col| num(col[i] * amp)));
                t.row(&row);
            }
            Ok(t)
        }
        Command::PovmCheck(args) => {
            let c = povm(args).map_err(plain)?;
            let d = c.validate();
            let mut t = Table::new(&header(cli, None, "dimensionless"), &["quantity", "value"]);
            let coeffs = [("a2", c.a2), ("a3", c.a3), ("b1", c.b1), ("b2", c.b2), ("b3", c.b3)];
            for (name, v) in coeffs {
                t.row(&[name.to_string(), num(v)]);
            }
            t.row(&["pi1_norm_sq".to_string(), num(d.pi1_norm_sq)]);
            t.row(&["pi2_norm_sq".to_string(), num(d.pi2_norm_sq)]);
            t.row(&["overlap".to_string(), num(c.pi1().dot(&c.pi2()))]);
            t.row(&["subspace_condition".to_string(), num(d.subspace_condition)]);
            t.row(&["determinant_condition".to_string(), num(d.determinant_condition)]);
            t.row(&["pi3_min_eigenvalue".to_string(), num(d.min_eigenvalue)]);
            if let Ok(e) = c.epsilons() {
                t.row(&["eps_s_sq".to_string(), num(e.eps_s_sq)]);
                t.row(&["eps_s0_sq".to_string(), num(e.eps_s0_sq)]);
            }
            t.row(&["closed_form_valid", bool_str(d.closed_form_valid)]);
            t.row(&["eigen_valid", bool_str(d.eigen_valid)]);
            t.row(&["valid", bool_str(d.passed())]);
            if d.passed() {
                Ok(t)
            } else {
                Err((Some(t), Error::InvalidPovm(d)))
            }
        }
        Command::Probs(point) => {
            let loaded = Loaded::from_args(&point.psf, None).map_err(plain)?;
            let c = povm(&point.povm).map_err(plain)?;
            let m = Measurement::aligned_at(&loaded.psf, point.source.s0_hat * loaded.unit, c).map_err(plain)?;
            let srcs = sources(&point.source, loaded.unit).map_err(plain)?;
            let rows = srcs
                .par_iter()
                .map(|src| {
                    let p = m.probabilities(src)?;
                    let mut row = source_cells(src, loaded.unit);
                    row.extend([num(p.p1), num(p.p2), num(p.p3)]);
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()
                .map_err(plain)?;
            let mut t = Table::new(
                &header(cli, None, &loaded.units()),
                &["s", "s0", "s0_hat", "p1", "p2", "p3"],
            );
            rows.iter().for_each(|r| t.row(r));
            Ok(t)
        }
        Command::Cfi { point, direct } => {
            let loaded = Loaded::from_args(&point.psf, None).map_err(plain)?;
            let srcs = sources(&point.source, loaded.unit).map_err(plain)?;
            let m = if *direct {
                None
            } else {
                let c = povm(&point.povm).map_err(plain)?;
                Some(Measurement::aligned_at(&loaded.psf, point.source.s0_hat * loaded.unit, c).map_err(plain)?)
            };
            let rows = srcs
                .par_iter()
                .map(|src| {
                    let f = match &m {
                        Some(m) => m.cfi(src)?,
                        None => direct_imaging_cfi(&loaded.psf, src)?,
                    };
                    let mut row = source_cells(src, loaded.unit);
                    row.extend(matrix_cells(&f));
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()
                .map_err(plain)?;
            let mut t = Table::new(
                &header(cli, None, &loaded.units()),
                &["s", "s0", "s0_hat", "F_s0s0", "F_s0s", "F_ss"],
            );
            rows.iter().for_each(|r| t.row(r));
            Ok(t)
        }
        Command::Qfi { psf, source } => {
            let loaded = Loaded::from_args(psf, None).map_err(plain)?;
            let srcs = sources(source, loaded.unit).map_err(plain)?;
            let rows = srcs
                .par_iter()
                .map(|src| {
                    let q = qfi(&loaded.psf, src)?;
                    let mut row = source_cells(src, loaded.unit);
                    row.extend(matrix_cells(&q));
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()
                .map_err(plain)?;
            let mut t = Table::new(
                &header(cli, None, &loaded.units()),
                &["s", "s0", "s0_hat", "Q_s0s0", "Q_s0s", "Q_ss"],
            );
            rows.iter().for_each(|r| t.row(r));
            Ok(t)
        }
        Command::TradeoffScan { psf, alphas, beta, s } => {
            let loaded = Loaded::from_args(psf, None).map_err(plain)?;
            let alphas: Vec<Angle> = alphas
                .clone()
                .unwrap_or_else(|| (1..20).map(|k| Angle(k as f64 * PI / 40.0)).collect());
            let src = SourceConfig::aligned(s * loaded.unit, s * 1e-3 * loaded.unit).map_err(plain)?;
            let q = qfi(&loaded.psf, &src).map_err(plain)?;
            let rows = alphas
                .par_iter()
                .map(|&alpha| {
                    let c = family(alpha, *beta)?;
                    let e = c.epsilons()?;
                    let f = Measurement::aligned_at(&loaded.psf, 0.0, c)?.cfi(&src)?;
                    let r = regrets(&f, &q)?;
                    Ok(vec![
                        num(alpha.0),
                        num(e.eps_s_sq),
                        num(e.eps_s0_sq),
                        num(r.s_sq),
                        num(r.s0_sq),
                        num(r.sum()),
                    ])
                })
                .collect::<Result<Vec<_>>>()
                .map_err(plain)?;
            let mut t = Table::new(
                &header(cli, None, "angle:rad,regret:dimensionless"),
                &[
                    "alpha",
                    "eps_s_sq",
                    "eps_s0_sq",
                    "regret_s_sq",
                    "regret_s0_sq",
                    "regret_sum",
                ],
            );
            rows.iter().for_each(|r| t.row(r));
            Ok(t)
        }
        Command::Fig2 {
            psf,
            alpha,
            betas,
            scan_s,
        } => {
            let loaded = Loaded::from_args(psf, None).map_err(plain)?;
            let measurements = betas
                .iter()
                .map(|&b| Measurement::aligned_at(&loaded.psf, 0.0, family(*alpha, b)?))
                .collect::<Result<Vec<_>>>()
                .map_err(plain)?;
            let seps = scan_s.values();
            let jobs: Vec<(usize, usize)> = (0..seps.len())
                .flat_map(|i| (0..betas.len()).map(move |j| (i, j)))
                .collect();
            let rows = jobs
                .par_iter()
                .map(|&(i, j)| {
                    let s = seps[i] * loaded.unit;
                    let src = SourceConfig::aligned(s, s * 1e-3)?;
                    let f = measurements[j].cfi(&src)?;
                    let q = qfi(&loaded.psf, &src)?;
                    Ok(vec![
                        num(seps[i]),
                        num(betas[j].0),
                        num(f[(0, 0)]),
                        num(f[(1, 1)]),
                        num(q[(0, 0)]),
                        num(q[(1, 1)]),
                    ])
                })
                .collect::<Result<Vec<_>>>()
                .map_err(plain)?;
            let mut t = Table::new(
                &header(cli, None, &loaded.units()),
                &["s", "beta", "F_s0s0", "F_ss", "Q_s0s0", "Q_ss"],
            );
            rows.iter().for_each(|r| t.row(r));
            Ok(t)
        }
        Command::Simulate {
            psf,
            povm: p,
            s,
            s0,
            shots,
            reps,
            seed,
        } => {
            let loaded = Loaded::from_args(psf, Some((SIMULATE_HALF_WIDTH, SIMULATE_POINTS))).map_err(plain)?;
            let c = povm(p).map_err(plain)?;
            let m = Measurement::aligned_at(&loaded.psf, 0.0, c).map_err(plain)?;
            let cfg = ExperimentConfig {
                shots: *shots,
                truth: SourceConfig::aligned(s * loaded.unit, s0 * loaded.unit).map_err(plain)?,
                seed: *seed,
                repetitions: *reps,
            };
            let study = covariance_study(&m, &cfg).map_err(plain)?;
            let u = loaded.unit;
            let mut t = Table::new(
                &header(cli, Some(*seed), &loaded.units()),
                &["rep", "s0_hat", "s_hat", "loglik", "converged"],
            );
            for (i, e) in study.estimates.iter().enumerate() {
                t.row(&[
                    i.to_string(),
                    num(e.s0 / u),
                    num(e.s / u),
                    num(e.loglik),
                    bool_str(e.converged).into(),
                ]);
            }
            // variances in length^2 units of the output
            let u2 = u * u;
            t.comment(&format!("converged,{}/{}", study.converged(), study.estimates.len()));
            t.comment(&format!("mean,{},{}", num(study.mean.0 / u), num(study.mean.1 / u)));
            t.comment(&format!(
                "crb,{},{},{}",
                num(study.crb[(0, 0)] / u2),
                num(study.crb[(0, 1)] / u2),
                num(study.crb[(1, 1)] / u2)
            ));
            t.comment(&format!(
                "qcrb,{},{},{}",
                num(study.qcrb[(0, 0)] / u2),
                num(study.qcrb[(0, 1)] / u2),
                num(study.qcrb[(1, 1)] / u2)
            ));
            match (
                study.covariance,
                study.variance_ratios,
                study.crb_gap,
                study.variance_se,
            ) {
                (Some(cov), Some(ratios), Some(gap), Some(se)) => {
                    t.comment(&format!(
                        "covariance,{},{},{}",
                        num(cov[(0, 0)] / u2),
                        num(cov[(0, 1)] / u2),
                        num(cov[(1, 1)] / u2)
                    ));
                    t.comment(&format!("variance_ratio,{},{}", num(ratios.0), num(ratios.1)));
                    t.comment(&format!("crb_gap_min_eigenvalue,{}", num(gap / u2)));
                    t.comment(&format!("variance_se,{},{}", num(se.0 / u2), num(se.1 / u2)));
                }
                _ => t.comment("covariance,unavailable (single repetition)"),
            }
            Ok(t)
        }
    }
}

fn bool_str(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}
