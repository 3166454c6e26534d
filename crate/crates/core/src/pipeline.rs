//! End-to-end prediction for a time family `γ(t)` or an endpoint family
//! `γ(T, eps)`: locate `λ₀`, extract the Jordan chain, and evaluate the
//! closed-form coefficients.

use num_complex::Complex64;
use thiserror::Error;

use crate::bifurcation::{
    classify_stability, expansion_eps, expansion_t, generator_derivative, ladder, BifurcationError, CoefficientLadder,
    ExpansionCoefficients, Verdict,
};
use crate::expr::{ExprError, SymmetricCurve};
use crate::flow::{integrate, perturbation_hamiltonian, FlowError, PerturbationHamiltonian};
use crate::matrix::{symplectic_defect, RealMat4};
use crate::spectral::{
    detect_double_unitary, eigenvalues, jordan_pair, JordanPair, JordanTolerances, SpectralError, TOL_CIRCLE,
    TOL_CLUSTER,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub tol_cluster: f64,
    pub tol_circle: f64,
    pub jordan: JordanTolerances,
    /// Largest acceptable symplectic drift of an integrated flow.
    pub drift: f64,
    /// RK4 steps per integration.
    pub steps: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol_cluster: TOL_CLUSTER,
            tol_circle: TOL_CIRCLE,
            jordan: JordanTolerances::default(),
            drift: 1e-8,
            steps: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub gamma0: RealMat4,
    pub curve: SymmetricCurve,
    /// Period `T` of the endpoint family, if any.
    pub horizon: Option<f64>,
    pub settings: Settings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Perturbation parameter is time: `s ↦ γ(s)` with `γ(0) = gamma0`.
    T,
    /// Perturbation parameter is `eps`: `s ↦ γ(T, s)`.
    Eps,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::T => "t",
            Mode::Eps => "eps",
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("initial matrix is not symplectic (defect {defect:.3e})")]
    NonSymplectic { defect: f64 },
    #[error("no double Krein-indefinite eigenvalue on the unit circle; eigenvalues are {eigenvalues:?}")]
    NoDoubleEigenvalue { eigenvalues: [Complex64; 4] },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Bifurcation(#[from] BifurcationError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl Problem {
    pub fn eps_available(&self) -> bool {
        self.curve.has_eps() && self.horizon.is_some()
    }

    /// An explicit request wins; otherwise `t` when `gamma0` itself carries the
    /// double eigenvalue, else `eps` when the curve depends on it and `T` is set.
    pub fn select_mode(&self, requested: Option<Mode>) -> Result<Mode, PipelineError> {
        match requested {
            Some(Mode::Eps) if !self.curve.has_eps() => Err(PipelineError::Usage(
                "eps mode requested but the curve does not depend on eps".into(),
            )),
            Some(Mode::Eps) if self.horizon.is_none() => {
                Err(PipelineError::Usage("eps mode requested but no period T is set".into()))
            }
            Some(mode) => Ok(mode),
            None => {
                let g = self.gamma0.to_complex();
                if detect_double_unitary(&g, self.settings.tol_cluster, self.settings.tol_circle).is_some() {
                    Ok(Mode::T)
                } else if self.eps_available() {
                    Ok(Mode::Eps)
                } else {
                    Err(PipelineError::NoDoubleEigenvalue {
                        eigenvalues: eigenvalues(&g),
                    })
                }
            }
        }
    }

    fn check_symplectic(&self) -> Result<(), PipelineError> {
        let defect = symplectic_defect(&self.gamma0);
        if defect > 1e-8 {
            return Err(PipelineError::NonSymplectic { defect });
        }
        Ok(())
    }

    fn chain(&self, m: &RealMat4) -> Result<JordanPair, PipelineError> {
        let g = m.to_complex();
        let s = &self.settings;
        let lambda0 = detect_double_unitary(&g, s.tol_cluster, s.tol_circle).ok_or_else(|| {
            PipelineError::NoDoubleEigenvalue {
                eigenvalues: eigenvalues(&g),
            }
        })?;
        Ok(jordan_pair(&g, lambda0, &s.jordan)?)
    }
}

/// Everything predicted about the branches of one family.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub mode: Mode,
    /// The unperturbed matrix: `gamma0` for `t`, `γ(T, 0)` for `eps`.
    pub base: RealMat4,
    pub pair: JordanPair,
    /// `A(0)` for `t`, `B(T, 0)` for `eps`.
    pub hamiltonian: RealMat4,
    pub coeffs: ExpansionCoefficients,
    pub ladder: CoefficientLadder,
    pub verdict: Result<Verdict, BifurcationError>,
    /// Present in `eps` mode.
    pub flow: Option<FlowDiagnostics>,
}

#[derive(Debug, Clone, Copy)]
pub struct FlowDiagnostics {
    pub horizon: f64,
    pub steps: usize,
    pub drift: f64,
    pub conforming: bool,
    pub asymmetry: f64,
    pub asymmetry_warning: bool,
}

pub fn analyze(problem: &Problem, mode: Mode) -> Result<Analysis, PipelineError> {
    match mode {
        Mode::T => analyze_t(problem),
        Mode::Eps => analyze_eps(problem),
    }
}

pub fn analyze_t(problem: &Problem) -> Result<Analysis, PipelineError> {
    problem.check_symplectic()?;
    let pair = problem.chain(&problem.gamma0)?;
    let a0 = problem.curve.eval_matrix(0.0, 0.0)?;
    let coeffs = expansion_t(&pair, &a0)?;
    let gdot = generator_derivative(&problem.gamma0, &a0);
    let ladder = ladder(&problem.gamma0.to_complex(), &gdot.to_complex(), pair.lambda0)?;
    Ok(Analysis {
        mode: Mode::T,
        base: problem.gamma0,
        pair,
        hamiltonian: a0,
        verdict: classify_stability(&coeffs),
        coeffs,
        ladder,
        flow: None,
    })
}

pub fn analyze_eps(problem: &Problem) -> Result<Analysis, PipelineError> {
    problem.check_symplectic()?;
    let horizon = problem
        .horizon
        .ok_or_else(|| PipelineError::Usage("eps mode needs the period T".into()))?;
    let steps = problem.settings.steps;
    let sol = integrate(&problem.curve, &problem.gamma0, horizon, steps, 0.0)?;
    let base = *sol.endpoint();
    let PerturbationHamiltonian { matrix: b, asymmetry } = perturbation_hamiltonian(&problem.curve, &sol)?;
    let pair = problem.chain(&base)?;
    let coeffs = expansion_eps(&pair, &b)?;
    let gdot = generator_derivative(&base, &b);
    let ladder = ladder(&base.to_complex(), &gdot.to_complex(), pair.lambda0)?;
    Ok(Analysis {
        mode: Mode::Eps,
        base,
        pair,
        hamiltonian: b,
        verdict: classify_stability(&coeffs),
        coeffs,
        ladder,
        flow: Some(FlowDiagnostics {
            horizon,
            steps,
            drift: sol.drift,
            conforming: sol.conforming(problem.settings.drift),
            asymmetry,
            asymmetry_warning: asymmetry > crate::flow::ASYMMETRY_WARN,
        }),
    })
}
