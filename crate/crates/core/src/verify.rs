//! Brute-force oracle: follow the two eigenvalues born at `λ₀` along a
//! parameter grid, fit `λ₀ ± a√s + μs` to them, and compare with the
//! closed-form coefficients.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::expr::SymmetricCurve;
use crate::flow::{eps_deviation, time_deviation, FlowError};
use crate::matrix::{charpoly_split, quartic_roots, RealMat4};
use crate::pipeline::{analyze, Analysis, Mode, PipelineError, Problem};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("tracking ambiguity at grid point {index} (s = {s:e}): a third eigenvalue lies {third:.3e} from λ₀ against a pair spread of {spread:.3e}")]
    Ambiguity {
        index: usize,
        s: f64,
        third: f64,
        spread: f64,
    },
    #[error("branches escaped at s = {s:e}: distance {distance:.3e} from λ₀ exceeds {limit:.3e}")]
    Escaped { s: f64, distance: f64, limit: f64 },
    #[error("branch continuation jumped at s = {s:e}")]
    Discontinuity { s: f64 },
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub log: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            min: 1e-7,
            max: 1e-3,
            count: 16,
            log: true,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), VerifyError> {
        if !(self.min > 0.0 && self.min.is_finite() && self.max.is_finite()) {
            return Err(VerifyError::BadGrid(format!(
                "bounds must be positive and finite, got [{}, {}]",
                self.min, self.max
            )));
        }
        if !(self.min < self.max) {
            return Err(VerifyError::BadGrid(format!(
                "min {} must be below max {}",
                self.min, self.max
            )));
        }
        if self.count < 4 {
            return Err(VerifyError::BadGrid(format!("count {} is below 4", self.count)));
        }
        Ok(())
    }

    pub fn points(&self) -> Result<Vec<f64>, VerifyError> {
        self.validate()?;
        let n = self.count - 1;
        Ok((0..self.count)
            .map(|k| {
                let u = k as f64 / n as f64;
                match k {
                    0 => self.min,
                    _ if k == n => self.max,
                    _ if self.log => (self.min.ln() + u * (self.max / self.min).ln()).exp(),
                    _ => self.min + u * (self.max - self.min),
                }
            })
            .collect())
    }

    pub fn with_max(&self, max: f64) -> Self {
        Self { max, ..*self }
    }
}

/// One evaluation of a family: `delta = M(s) − base` and the flow drift.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub delta: RealMat4,
    pub drift: f64,
}

/// `s ↦ γ(s)` or `s ↦ γ(T, s)` as a deviation from the unperturbed matrix.
#[derive(Debug, Clone)]
pub struct Family<'a> {
    curve: &'a SymmetricCurve,
    init: RealMat4,
    mode: Mode,
    horizon: f64,
    steps: usize,
    base: RealMat4,
}

impl<'a> Family<'a> {
    pub fn new(problem: &'a Problem, mode: Mode) -> Result<Self, VerifyError> {
        let steps = problem.settings.steps;
        let (horizon, base) = match mode {
            Mode::T => (0.0, problem.gamma0),
            Mode::Eps => {
                let horizon = problem
                    .horizon
                    .ok_or_else(|| PipelineError::Usage("eps mode needs the period T".into()))?;
                (
                    horizon,
                    eps_deviation(&problem.curve, &problem.gamma0, horizon, steps, 0.0)?.base,
                )
            }
        };
        Ok(Self {
            curve: &problem.curve,
            init: problem.gamma0,
            mode,
            horizon,
            steps,
            base,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn base(&self) -> &RealMat4 {
        &self.base
    }

    pub fn sample(&self, s: f64) -> Result<Sample, VerifyError> {
        if s == 0.0 {
            return Ok(Sample {
                delta: RealMat4::zero(),
                drift: 0.0,
            });
        }
        let dev = match self.mode {
            Mode::T => time_deviation(self.curve, &self.init, s, self.steps)?,
            Mode::Eps => eps_deviation(self.curve, &self.init, self.horizon, self.steps, s)?,
        };
        Ok(Sample {
            delta: dev.delta,
            drift: dev.drift,
        })
    }

    /// All four eigenvalues of the family at `s`, from the characteristic
    /// polynomial expanded about `center`.
    pub fn eigenvalues(&self, s: f64, center: Complex64) -> Result<[Complex64; 4], VerifyError> {
        let sample = self.sample(s)?;
        Ok(roots_at(&self.base, &sample.delta, center).0)
    }
}

fn roots_at(base: &RealMat4, delta: &RealMat4, center: Complex64) -> ([Complex64; 4], [f64; 4]) {
    let p = charpoly_split(&base.to_complex(), &delta.to_complex(), center);
    let roots = quartic_roots(&p).expect("characteristic polynomials are monic");
    (roots, roots.map(|r| p.eval(r).norm()))
}

#[derive(Debug, Clone)]
pub struct BranchTrack {
    /// Parameter values in order of increasing `|s|`.
    pub grid: Vec<f64>,
    pub branch1: Vec<Complex64>,
    pub branch2: Vec<Complex64>,
    /// `|p(λ)|` for `(branch1, branch2)`.
    pub residuals: Vec<[f64; 2]>,
    /// The remaining two eigenvalues.
    pub others: Vec<[Complex64; 2]>,
    pub max_drift: f64,
}

impl BranchTrack {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().flatten().fold(0.0, |m, &r| m.max(r))
    }

    /// Largest distance between the far pair and the conjugates of the
    /// tracked pair, under the better of the two matchings.
    pub fn quartet_mirror(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.len() {
            let (c1, c2) = (self.branch1[k].conj(), self.branch2[k].conj());
            let [o1, o2] = self.others[k];
            let straight = (o1 - c1).norm().max((o2 - c2).norm());
            let crossed = (o1 - c2).norm().max((o2 - c1).norm());
            worst = worst.max(straight.min(crossed));
        }
        worst
    }
}

/// Follows the two eigenvalues nearest `λ₀` across `grid`. Points are
/// evaluated in parallel and then matched by nearest-neighbour continuation
/// from the smallest `|s|`; there, branch 2 is the root whose offset from
/// `λ₀` points along `seed` (or an arbitrary one when `seed` is `None`).
pub fn track<F>(
    family: F,
    base: &RealMat4,
    lambda0: Complex64,
    grid: &[f64],
    seed: Option<Complex64>,
) -> Result<BranchTrack, VerifyError>
where
    F: Fn(f64) -> Result<Sample, VerifyError> + Sync,
{
    if grid.is_empty() {
        return Err(VerifyError::BadGrid("empty grid".into()));
    }
    if grid.iter().any(|s| !s.is_finite()) {
        return Err(VerifyError::BadGrid("non-finite grid point".into()));
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&i, &j| grid[i].abs().total_cmp(&grid[j].abs()));
    let sorted: Vec<f64> = order.iter().map(|&i| grid[i]).collect();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(VerifyError::BadGrid("repeated grid point".into()));
    }

    let evaluated: Vec<_> = sorted
        .par_iter()
        .map(|&s| family(s).map(|sample| (roots_at(base, &sample.delta, lambda0), sample.drift)))
        .collect::<Result<_, _>>()?;

    let limit = 0.5 * (lambda0 - lambda0.conj()).norm();
    let mut out = BranchTrack {
        grid: sorted.clone(),
        branch1: Vec::with_capacity(sorted.len()),
        branch2: Vec::with_capacity(sorted.len()),
        residuals: Vec::with_capacity(sorted.len()),
        others: Vec::with_capacity(sorted.len()),
        max_drift: 0.0,
    };
    for (k, ((roots, res), drift)) in evaluated.into_iter().enumerate() {
        let s = sorted[k];
        let mut idx = [0, 1, 2, 3];
        idx.sort_by(|&i, &j| (roots[i] - lambda0).norm().total_cmp(&(roots[j] - lambda0).norm()));
        let dist = |i: usize| (roots[idx[i]] - lambda0).norm();
        let spread = dist(0).max(dist(1));
        if dist(2) <= 2.0 * spread {
            return Err(VerifyError::Ambiguity {
                index: order[k],
                s,
                third: dist(2),
                spread,
            });
        }
        if spread > limit {
            return Err(VerifyError::Escaped {
                s,
                distance: spread,
                limit,
            });
        }
        let (mut i1, mut i2) = (idx[0], idx[1]);
        if k == 0 {
            if let Some(dir) = seed {
                let along = |i: usize| (dir.conj() * (roots[i] - lambda0)).re;
                if along(i1) > along(i2) {
                    std::mem::swap(&mut i1, &mut i2);
                }
            }
        } else {
            let (p1, p2) = (out.branch1[k - 1], out.branch2[k - 1]);
            let keep = (roots[i1] - p1).norm() + (roots[i2] - p2).norm();
            let swap = (roots[i2] - p1).norm() + (roots[i1] - p2).norm();
            if swap < keep {
                std::mem::swap(&mut i1, &mut i2);
            }
            let gap = (roots[i1] - roots[i2]).norm();
            if (roots[i1] - p1).norm() > gap || (roots[i2] - p2).norm() > gap {
                return Err(VerifyError::Discontinuity { s });
            }
        }
        out.branch1.push(roots[i1]);
        out.branch2.push(roots[i2]);
        out.residuals.push([res[i1], res[i2]]);
        out.others.push([roots[idx[2]], roots[idx[3]]]);
        out.max_drift = out.max_drift.max(drift);
    }
    Ok(out)
}

/// Empirical coefficients of `λ₁,₂(s) = λ₀ ∓ a√s + μs + o(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PuiseuxFit {
    /// Joint least squares over the whole grid.
    pub a_ls: Complex64,
    pub mu_ls: Complex64,
    /// `(λ₂ − λ₁)/(2√s)` extrapolated to `s = 0` from the three smallest points.
    pub a_extrapolated: Complex64,
    /// `(λ₁ + λ₂ − 2λ₀)/(2s)` extrapolated to `s = 0` from the three smallest points.
    pub mu_sum: Complex64,
}

impl PuiseuxFit {
    pub fn sum_derivative(&self) -> Complex64 {
        self.mu_sum * 2.0
    }

    pub fn a_squared(&self) -> Complex64 {
        self.a_extrapolated * self.a_extrapolated
    }

    /// `Re(a²/λ₀²)`.
    pub fn kappa(&self, lambda0: Complex64) -> f64 {
        (self.a_squared() / (lambda0 * lambda0)).re
    }

    /// `Re(λ̄₀ · d(λ₁+λ₂)/ds)`.
    pub fn kappa_from_sum(&self, lambda0: Complex64) -> f64 {
        (lambda0.conj() * self.sum_derivative()).re
    }
}

/// Value at `x = 0` of the quadratic through three points.
fn extrapolate_quadratic(x: [f64; 3], y: [Complex64; 3]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        let mut w = 1.0;
        for j in 0..3 {
            if j != i {
                w *= x[j] / (x[j] - x[i]);
            }
        }
        acc += y[i] * w;
    }
    acc
}

pub fn fit_puiseux(track: &BranchTrack, lambda0: Complex64) -> Result<PuiseuxFit, VerifyError> {
    let n = track.len();
    if n < 4 {
        return Err(VerifyError::IllConditioned(format!("{n} grid points, need at least 4")));
    }
    if track.grid.iter().any(|&s| !(s > 0.0)) {
        return Err(VerifyError::BadGrid("the fit needs positive parameters".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| track.grid[i].total_cmp(&track.grid[j]));
    let s: Vec<f64> = order.iter().map(|&i| track.grid[i]).collect();
    let half_split: Vec<Complex64> = order
        .iter()
        .map(|&i| (track.branch2[i] - track.branch1[i]) * 0.5)
        .collect();
    let mean_shift: Vec<Complex64> = order
        .iter()
        .map(|&i| (track.branch1[i] + track.branch2[i]) * 0.5 - lambda0)
        .collect();

    let sum_s: f64 = s.iter().sum();
    let sum_s2: f64 = s.iter().map(|x| x * x).sum();
    let a_ls = s
        .iter()
        .zip(&half_split)
        .map(|(&x, &d)| d * x.sqrt())
        .sum::<Complex64>()
        / sum_s;
    let mu_ls = s.iter().zip(&mean_shift).map(|(&x, &m)| m * x).sum::<Complex64>() / sum_s2;

    if (s[2] - s[0]) <= 1e-6 * s[2] || (s[1] - s[0]) <= 1e-9 * s[1] || (s[2] - s[1]) <= 1e-9 * s[2] {
        return Err(VerifyError::IllConditioned(format!(
            "the three smallest points {:e}, {:e}, {:e} are too close",
            s[0], s[1], s[2]
        )));
    }
    let mu_sum = extrapolate_quadratic(
        [s[0].sqrt(), s[1].sqrt(), s[2].sqrt()],
        [mean_shift[0] / s[0], mean_shift[1] / s[1], mean_shift[2] / s[2]],
    );
    let a_extrapolated = extrapolate_quadratic(
        [s[0], s[1], s[2]],
        [
            half_split[0] / s[0].sqrt(),
            half_split[1] / s[1].sqrt(),
            half_split[2] / s[2].sqrt(),
        ],
    );
    Ok(PuiseuxFit {
        a_ls,
        mu_ls,
        a_extrapolated,
        mu_sum,
    })
}

pub fn relative_error(empirical: Complex64, predicted: Complex64) -> f64 {
    (empirical - predicted).norm() / predicted.norm().max(1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeErrors {
    pub kappa: f64,
    pub a_squared: f64,
    pub sum_derivative: f64,
    pub kappa_from_sum: f64,
}

impl RelativeErrors {
    pub fn max(&self) -> f64 {
        self.kappa
            .max(self.a_squared)
            .max(self.sum_derivative)
            .max(self.kappa_from_sum)
    }

    pub fn named(&self) -> [(&'static str, f64); 4] {
        [
            ("kappa", self.kappa),
            ("a_squared", self.a_squared),
            ("sum_derivative", self.sum_derivative),
            ("kappa_from_sum", self.kappa_from_sum),
        ]
    }
}

/// The spectrum at one probe parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideProbe {
    pub s: f64,
    pub eigenvalues: [Complex64; 4],
    /// `max |λ| − 1`.
    pub modulus_excess: f64,
    /// `max ||λ| − 1|`.
    pub circle_deviation: f64,
    /// Smallest pairwise distance.
    pub min_separation: f64,
}

impl SideProbe {
    pub fn new(s: f64, eigenvalues: [Complex64; 4]) -> Self {
        let moduli = eigenvalues.map(|z| z.norm());
        let mut min_separation = f64::INFINITY;
        for i in 0..4 {
            for j in i + 1..4 {
                min_separation = min_separation.min((eigenvalues[i] - eigenvalues[j]).norm());
            }
        }
        Self {
            s,
            eigenvalues,
            modulus_excess: moduli.iter().fold(f64::NEG_INFINITY, |m, &r| m.max(r - 1.0)),
            circle_deviation: moduli.iter().fold(0.0, |m, &r| m.max((r - 1.0).abs())),
            min_separation,
        }
    }

    pub fn leaves_circle(&self, delta: f64) -> bool {
        self.modulus_excess > delta
    }

    pub fn on_circle_distinct(&self, delta: f64, separation: f64) -> bool {
        self.circle_deviation <= delta && self.min_separation > separation
    }
}

/// Stability dichotomy at `±probe`: the side selected by the sign of `κ`
/// must have an eigenvalue off the circle, the other side four distinct
/// eigenvalues on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichotomyCheck {
    pub forward: SideProbe,
    pub backward: SideProbe,
    /// Threshold on `max |λ| − 1` for leaving the circle.
    pub off_circle: f64,
    /// Allowed `||λ| − 1|` on the stable side.
    pub on_circle: f64,
    /// Required pairwise separation on the stable side.
    pub separation: f64,
    pub unstable_side_leaves_circle: bool,
    pub stable_side_on_circle_distinct: bool,
}

impl DichotomyCheck {
    pub fn passed(&self) -> bool {
        self.unstable_side_leaves_circle && self.stable_side_on_circle_distinct
    }
}

pub const ON_CIRCLE_TOL: f64 = 1e-8;

pub fn dichotomy_check(
    family: &Family,
    lambda0: Complex64,
    kappa: f64,
    probe: f64,
) -> Result<DichotomyCheck, VerifyError> {
    let forward = SideProbe::new(probe, family.eigenvalues(probe, lambda0)?);
    let backward = SideProbe::new(-probe, family.eigenvalues(-probe, lambda0)?);
    let scale = (kappa.abs() * probe).sqrt();
    let off_circle = 0.25 * scale;
    let separation = 0.25 * scale;
    let (unstable, stable) = if kappa > 0.0 {
        (&forward, &backward)
    } else {
        (&backward, &forward)
    };
    Ok(DichotomyCheck {
        forward,
        backward,
        off_circle,
        on_circle: ON_CIRCLE_TOL,
        separation,
        unstable_side_leaves_circle: unstable.leaves_circle(off_circle),
        stable_side_on_circle_distinct: stable.on_circle_distinct(ON_CIRCLE_TOL, separation),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridDiagnostics {
    /// `|λ₂ − λ₁|` at the smallest grid point over the same at four times it.
    pub sqrt_ratio: f64,
    /// `|λ₂(s/4) − λ₀|/(s/4)` over `|λ₂(s) − λ₀|/s` at the geometric grid centre.
    pub quotient_growth: f64,
    pub quotient_point: f64,
    /// `μ_sum` refitted with the grid maximum halved.
    pub sum_slope_halved: Complex64,
    pub sum_slope_change: f64,
    pub quartet_mirror: f64,
    pub max_residual: f64,
    pub max_drift: f64,
}

#[derive(Debug, Clone)]
pub struct ModeReport {
    pub mode: Mode,
    pub predicted: Analysis,
    pub grid: GridSpec,
    pub track: BranchTrack,
    pub fit: PuiseuxFit,
    pub kappa_empirical: f64,
    pub a_squared_empirical: Complex64,
    pub sum_derivative_empirical: Complex64,
    pub kappa_from_sum: f64,
    pub relative_errors: RelativeErrors,
    pub diagnostics: GridDiagnostics,
    pub dichotomy: DichotomyCheck,
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub name: String,
    pub modes: Vec<ModeReport>,
    /// Families that were not run, with the reason.
    pub skipped: Vec<(Mode, String)>,
}

impl OracleReport {
    pub fn get(&self, mode: Mode) -> Option<&ModeReport> {
        self.modes.iter().find(|m| m.mode == mode)
    }

    pub fn max_relative_error(&self) -> f64 {
        self.modes.iter().map(|m| m.relative_errors.max()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CompareOptions {
    pub t_grid: GridSpec,
    pub eps_grid: GridSpec,
    /// Restrict to one family; otherwise run every applicable one.
    pub mode: Option<Mode>,
}

fn pair_near(family: &Family, lambda0: Complex64, s: f64) -> Result<[Complex64; 2], VerifyError> {
    let mut r = family.eigenvalues(s, lambda0)?;
    r.sort_by(|x, y| (x - lambda0).norm().total_cmp(&(y - lambda0).norm()));
    Ok([r[0], r[1]])
}

pub fn compare_mode(problem: &Problem, mode: Mode, grid: GridSpec) -> Result<ModeReport, VerifyError> {
    let predicted = analyze(problem, mode)?;
    let coeffs = predicted.coeffs;
    let lambda0 = coeffs.lambda0;
    let family = Family::new(problem, mode)?;
    let sampler = |s: f64| family.sample(s);
    let points = grid.points()?;
    let track = track(sampler, family.base(), lambda0, &points, Some(coeffs.a))?;
    let fit = fit_puiseux(&track, lambda0)?;

    let halved_grid = grid.with_max(0.5 * grid.max);
    let halved_fit = fit_puiseux(&track_fn(&family, lambda0, &halved_grid.points()?, coeffs.a)?, lambda0)?;

    let s0 = grid.min;
    let [p, q] = pair_near(&family, lambda0, s0)?;
    let [p4, q4] = pair_near(&family, lambda0, 4.0 * s0)?;
    let sqrt_ratio = (p - q).norm() / (p4 - q4).norm();

    let sq = (grid.min * grid.max).sqrt();
    let along = |pair: [Complex64; 2], s: f64| {
        let target = lambda0 + fit.a_extrapolated * s.sqrt();
        if (pair[0] - target).norm() <= (pair[1] - target).norm() {
            pair[0]
        } else {
            pair[1]
        }
    };
    let quotient =
        |s: f64| -> Result<f64, VerifyError> { Ok((along(pair_near(&family, lambda0, s)?, s) - lambda0).norm() / s) };
    let quotient_growth = quotient(0.25 * sq)? / quotient(sq)?;

    let dichotomy = dichotomy_check(&family, lambda0, coeffs.kappa, grid.max)?;

    let kappa_empirical = fit.kappa(lambda0);
    let kappa_from_sum = fit.kappa_from_sum(lambda0);
    let real = |x: f64| Complex64::new(x, 0.0);
    let relative_errors = RelativeErrors {
        kappa: relative_error(real(kappa_empirical), real(coeffs.kappa)),
        a_squared: relative_error(fit.a_squared(), coeffs.a_squared),
        sum_derivative: relative_error(fit.sum_derivative(), coeffs.sum_derivative),
        kappa_from_sum: relative_error(real(kappa_from_sum), real(coeffs.kappa)),
    };
    let diagnostics = GridDiagnostics {
        sqrt_ratio,
        quotient_growth,
        quotient_point: sq,
        sum_slope_halved: halved_fit.mu_sum,
        sum_slope_change: relative_error(halved_fit.mu_sum, fit.mu_sum),
        quartet_mirror: track.quartet_mirror(),
        max_residual: track.max_residual(),
        max_drift: track.max_drift,
    };
    Ok(ModeReport {
        mode,
        predicted,
        grid,
        kappa_empirical,
        a_squared_empirical: fit.a_squared(),
        sum_derivative_empirical: fit.sum_derivative(),
        kappa_from_sum,
        relative_errors,
        diagnostics,
        dichotomy,
        track,
        fit,
    })
}

fn track_fn(family: &Family, lambda0: Complex64, grid: &[f64], seed: Complex64) -> Result<BranchTrack, VerifyError> {
    track(|s| family.sample(s), family.base(), lambda0, grid, Some(seed))
}

/// Runs the oracle on the `t` family when `gamma0` carries the double
/// eigenvalue and on the `eps` family when the curve depends on `eps`.
pub fn compare(problem: &Problem, options: &CompareOptions) -> Result<OracleReport, VerifyError> {
    let grid_for = |mode| match mode {
        Mode::T => options.t_grid,
        Mode::Eps => options.eps_grid,
    };
    let mut report = OracleReport {
        name: problem.name.clone(),
        modes: Vec::new(),
        skipped: Vec::new(),
    };
    if let Some(mode) = options.mode {
        problem.select_mode(Some(mode))?;
        report.modes.push(compare_mode(problem, mode, grid_for(mode))?);
        return Ok(report);
    }
    let primary = problem.select_mode(None)?;
    report.modes.push(compare_mode(problem, primary, grid_for(primary))?);
    if primary == Mode::T {
        if !problem.eps_available() {
            report
                .skipped
                .push((Mode::Eps, "curve has no eps dependence or no period T".into()));
        } else {
            match compare_mode(problem, Mode::Eps, options.eps_grid) {
                Ok(r) => report.modes.push(r),
                Err(VerifyError::Pipeline(PipelineError::NoDoubleEigenvalue { .. })) => report
                    .skipped
                    .push((Mode::Eps, "γ(T, 0) has no double eigenvalue on the unit circle".into())),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(report)
}
