//! Eigenvalues of 4×4 matrices and the normalized Jordan chain of a double,
//! non-semisimple eigenvalue on the unit circle.

use num_complex::Complex64;
use thiserror::Error;

use crate::matrix::{
    charpoly_split, charpoly_three_term, inner, quartic_roots, svd, symplectic_form, ComplexMat4, ComplexVec4, RealMat4,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("rotation angle {0} is a multiple of π")]
    DegenerateAngle(f64),
    #[error("shear block C must be symmetric")]
    AsymmetricShear,
    #[error("λ₀ = {0} is not admissible: it must lie on the unit circle away from ±1")]
    InadmissibleEigenvalue(Complex64),
    #[error("λ₀ is not an eigenvalue: σ_min/σ_max = {ratio:.3e}")]
    NotAnEigenvalue { ratio: f64 },
    #[error("not a Jordan block: geometric multiplicity {nullity} (singular values {sigma:?})")]
    NotAJordanBlock { nullity: usize, sigma: [f64; 4] },
    #[error("Jordan chain is inconsistent: residual {residual:.3e}")]
    InconsistentChain { residual: f64 },
    #[error("degenerate pairing: |⟨η₂,J₄η₁⟩| = {value:.3e}")]
    DegeneratePairing { value: f64 },
    #[error("invariant `{relation}` violated: {value:.3e}")]
    InvariantViolation { relation: &'static str, value: f64 },
}

/// All four eigenvalues, as roots of `det(λ·Id − M)` expanded about 0.
pub fn eigenvalues(m: &ComplexMat4) -> [Complex64; 4] {
    let p = charpoly_three_term(m, m, Complex64::new(0.0, 0.0));
    quartic_roots(&p).expect("characteristic polynomials are monic")
}

/// Eigenvalues of `m` from its characteristic polynomial expanded about
/// `center` through the split `m = base + (m − base)`. Accurate for roots
/// clustered near `center` when `m` is a small perturbation of `base`.
pub fn eigenvalues_near(base: &ComplexMat4, m: &ComplexMat4, center: Complex64) -> [Complex64; 4] {
    let p = charpoly_three_term(base, m, center);
    quartic_roots(&p).expect("characteristic polynomials are monic")
}

/// Eigenvalues of `base + delta`, expanded about `center`.
pub fn eigenvalues_split(base: &ComplexMat4, delta: &ComplexMat4, center: Complex64) -> [Complex64; 4] {
    let p = charpoly_split(base, delta, center);
    quartic_roots(&p).expect("characteristic polynomials are monic")
}

/// Default intra-cluster spread accepted as a double eigenvalue.
pub const TOL_CLUSTER: f64 = 1e-5;
/// Default distance from the unit circle accepted for `λ₀`.
pub const TOL_CIRCLE: f64 = 1e-8;

/// Finds a conjugate pair of double eigenvalues `{λ₀, λ₀, λ̄₀, λ̄₀}` on the
/// unit circle, away from ±1, and returns the one with positive imaginary part.
pub fn detect_double_unitary(m: &ComplexMat4, tol_cluster: f64, tol_circle: f64) -> Option<Complex64> {
    let r = eigenvalues(m);
    let pairings = [[0, 1, 2, 3], [0, 2, 1, 3], [0, 3, 1, 2]];
    let spread = |p: &[usize; 4]| (r[p[0]] - r[p[1]]).norm().max((r[p[2]] - r[p[3]]).norm());
    let best = pairings
        .iter()
        .min_by(|a, b| spread(a).total_cmp(&spread(b)))
        .expect("three pairings");
    if spread(best) > tol_cluster {
        return None;
    }
    let m1 = (r[best[0]] + r[best[1]]) / 2.0;
    let m2 = (r[best[2]] + r[best[3]]) / 2.0;
    if (m1 - m2.conj()).norm() > tol_cluster {
        return None;
    }
    let upper = if m1.im >= m2.im { m1 } else { m2 };
    let lower = if m1.im >= m2.im { m2 } else { m1 };
    let lambda0 = refine_double_root(m, (upper + lower.conj()) / 2.0);
    let far_from_real_axis = (lambda0 - 1.0).norm() > 10.0 * tol_cluster && (lambda0 + 1.0).norm() > 10.0 * tol_cluster;
    if (lambda0.norm() - 1.0).abs() <= tol_circle && far_from_real_axis {
        Some(lambda0)
    } else {
        None
    }
}

/// A double root is a simple root of `p'`; Newton on `p'` recovers it to
/// full precision, whereas the individual roots of `p` only carry half.
fn refine_double_root(m: &ComplexMat4, guess: Complex64) -> Complex64 {
    let p = charpoly_three_term(m, m, guess);
    let mut u = Complex64::new(0.0, 0.0);
    let mut best = p.derivative_shifted(u).norm();
    for _ in 0..8 {
        let d2 = p.second_derivative_shifted(u);
        if d2.norm() == 0.0 {
            break;
        }
        let next = u - p.derivative_shifted(u) / d2;
        let r = p.derivative_shifted(next).norm();
        if !(r < best) {
            break;
        }
        u = next;
        best = r;
    }
    guess + u
}

/// `[[R, R·C], [0, R]]` with `R` the rotation by `theta0`. The double pair
/// `e^{±iθ₀}` is a single Jordan block exactly when `tr C ≠ 0`.
pub fn make_jordan_symplectic(theta0: f64, c: [[f64; 2]; 2]) -> Result<RealMat4, SpectralError> {
    if theta0.sin().abs() < 1e-12 {
        return Err(SpectralError::DegenerateAngle(theta0));
    }
    if c[0][1] != c[1][0] {
        return Err(SpectralError::AsymmetricShear);
    }
    let (s, co) = theta0.sin_cos();
    let rot = [[co, -s], [s, co]];
    let rc: [[f64; 2]; 2] = std::array::from_fn(|i| std::array::from_fn(|j| rot[i][0] * c[0][j] + rot[i][1] * c[1][j]));
    Ok(RealMat4([
        [rot[0][0], rot[0][1], rc[0][0], rc[0][1]],
        [rot[1][0], rot[1][1], rc[1][0], rc[1][1]],
        [0.0, 0.0, rot[0][0], rot[0][1]],
        [0.0, 0.0, rot[1][0], rot[1][1]],
    ]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JordanTolerances {
    /// A singular value is zero when `σ ≤ rank · σ_max`.
    pub rank: f64,
    /// Relative tolerance for the chain residual and every structural identity.
    pub invariant: f64,
    /// Absolute floor below which `⟨η₂,J₄η₁⟩` counts as zero.
    pub pairing: f64,
}

impl Default for JordanTolerances {
    fn default() -> Self {
        Self {
            rank: 1e-8,
            invariant: 1e-8,
            pairing: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct JordanDiagnostics {
    pub singular_values: [f64; 4],
    pub chain_residual: f64,
    /// The six pairings that must vanish, each relative to the vector norms.
    pub orthogonality: [(&'static str, f64); 6],
    /// Worst relative residual of the action of `K = λ₀·Id − M` on the chain.
    pub k_action_residual: f64,
}

/// `(λ₀, η₁, η₂)` with `Mη₁ = λ₀η₁`, `Mη₂ = λ₀η₂ + λ₀η₁`, and the Krein
/// form values on the chain.
#[derive(Debug, Clone)]
pub struct JordanPair {
    pub lambda0: Complex64,
    pub eta1: ComplexVec4,
    pub eta2: ComplexVec4,
    /// `⟨η₂, J₄η₁⟩`
    pub form_21: Complex64,
    /// `⟨η₁, J₄η₂⟩`
    pub form_12: Complex64,
    /// `⟨η₂, J₄η₂⟩`
    pub form_22: Complex64,
    pub diagnostics: Option<JordanDiagnostics>,
}

impl JordanPair {
    /// Builds a pair from given vectors without checking the chain relation.
    pub fn from_vectors(lambda0: Complex64, eta1: ComplexVec4, eta2: ComplexVec4) -> Self {
        Self {
            lambda0,
            eta1,
            eta2,
            form_21: symplectic_form(&eta2, &eta1),
            form_12: symplectic_form(&eta1, &eta2),
            form_22: symplectic_form(&eta2, &eta2),
            diagnostics: None,
        }
    }

    /// The equally valid chain `(c·η₁, c·η₂ + d·η₁)`.
    pub fn regauge(&self, c: Complex64, d: Complex64) -> Self {
        Self::from_vectors(
            self.lambda0,
            self.eta1.scale(c),
            self.eta2.scale(c) + self.eta1.scale(d),
        )
    }

    /// The chain `(η̄₁, η̄₂)` of the conjugate eigenvalue of a real matrix.
    pub fn conjugate(&self) -> Self {
        Self::from_vectors(self.lambda0.conj(), self.eta1.conj(), self.eta2.conj())
    }

    /// Pairings that vanish for the chain of a real symplectic matrix.
    pub fn orthogonality(&self) -> [(&'static str, f64); 6] {
        let (e1, e2) = (&self.eta1, &self.eta2);
        let (c1, c2) = (e1.conj(), e2.conj());
        let rel = |x: &ComplexVec4, y: &ComplexVec4| symplectic_form(x, y).norm() / (x.norm() * y.norm());
        [
            ("<eta1,J eta1>", rel(e1, e1)),
            ("<eta1,J conj eta1>", rel(e1, &c1)),
            ("<eta1,J conj eta2>", rel(e1, &c2)),
            ("<eta2,J conj eta1>", rel(e2, &c1)),
            ("<eta2,J conj eta2>", rel(e2, &c2)),
            ("<conj eta1,J conj eta1>", rel(&c1, &c1)),
        ]
    }

    /// Relative violations of: `form_21` real, `form_12 = −form_21`,
    /// `form_22` imaginary.
    pub fn form_structure(&self) -> [(&'static str, f64); 3] {
        let scale = self.eta1.norm() * self.eta2.norm();
        [
            ("Im <eta2,J eta1>", self.form_21.im.abs() / scale),
            (
                "<eta1,J eta2> + <eta2,J eta1>",
                (self.form_12 + self.form_21).norm() / scale,
            ),
            ("Re <eta2,J eta2>", self.form_22.re.abs() / self.eta2.norm().powi(2)),
        ]
    }
}

/// Worst relative residual of `Kη₁ = 0`, `Kη₂ = −λ₀η₁`, `Kη̄₁ = (λ₀−λ̄₀)η̄₁`,
/// `Kη̄₂ = (λ₀−λ̄₀)η̄₂ − λ̄₀η̄₁` with `K = λ₀·Id − M`.
pub fn k_action_residual(m: &ComplexMat4, pair: &JordanPair) -> f64 {
    let l = pair.lambda0;
    let k = ComplexMat4::scalar(l) - *m;
    let (e1, e2) = (pair.eta1, pair.eta2);
    let (c1, c2) = (e1.conj(), e2.conj());
    let d = l - l.conj();
    let scale = k.frobenius().max(1.0) * e1.norm().max(e2.norm());
    [
        k.mul_vec(&e1),
        k.mul_vec(&e2) + e1.scale(l),
        k.mul_vec(&c1) - c1.scale(d),
        k.mul_vec(&c2) - c2.scale(d) + c1.scale(l.conj()),
    ]
    .iter()
    .map(|r| r.norm() / scale)
    .fold(0.0, f64::max)
}

/// Extracts the Jordan chain of `λ₀`. `η₁` spans `ker(λ₀·Id − M)` and is
/// scaled so its largest entry equals 1; `η₂` is the minimum-norm solution
/// of `(λ₀·Id − M)η₂ = −λ₀η₁`, hence Euclidean-orthogonal to `η₁`.
pub fn jordan_pair(m: &ComplexMat4, lambda0: Complex64, tol: &JordanTolerances) -> Result<JordanPair, SpectralError> {
    if (lambda0.norm() - 1.0).abs() > 1e-8 || (lambda0 - 1.0).norm() < 1e-6 || (lambda0 + 1.0).norm() < 1e-6 {
        return Err(SpectralError::InadmissibleEigenvalue(lambda0));
    }
    let k = ComplexMat4::scalar(lambda0) - *m;
    let dec = svd(&k);
    let nullity = dec.nullity(tol.rank);
    if nullity == 0 {
        return Err(SpectralError::NotAnEigenvalue {
            ratio: dec.sigma[3] / dec.sigma[0],
        });
    }
    if nullity >= 2 {
        return Err(SpectralError::NotAJordanBlock {
            nullity,
            sigma: dec.sigma,
        });
    }

    let null = dec.v[3];
    let pivot = (0..4)
        .max_by(|&a, &b| null[a].norm().total_cmp(&null[b].norm()))
        .expect("four entries");
    let eta1 = null.scale(null[pivot].inv());

    let rhs = eta1.scale(-lambda0);
    let w = dec.solve_truncated(&rhs, tol.rank);
    let eta2 = w - eta1.scale(inner(&w, &eta1) / inner(&eta1, &eta1));
    let chain_residual = (k.mul_vec(&eta2) - rhs).norm() / (k.frobenius() * eta2.norm() + rhs.norm());
    if chain_residual > tol.invariant {
        return Err(SpectralError::InconsistentChain {
            residual: chain_residual,
        });
    }

    let mut pair = JordanPair::from_vectors(lambda0, eta1, eta2);
    if pair.form_21.norm() < tol.pairing {
        return Err(SpectralError::DegeneratePairing {
            value: pair.form_21.norm(),
        });
    }
    let relations = pair.orthogonality();
    let k_residual = k_action_residual(m, &pair);
    for (relation, value) in relations
        .iter()
        .chain(pair.form_structure().iter())
        .copied()
        .chain(std::iter::once(("K-action table", k_residual)))
    {
        if !(value <= tol.invariant) {
            return Err(SpectralError::InvariantViolation { relation, value });
        }
    }
    pair.diagnostics = Some(JordanDiagnostics {
        singular_values: dec.sigma,
        chain_residual,
        orthogonality: relations,
        k_action_residual: k_residual,
    });
    Ok(pair)
}
