//! Closed-form first- and second-order coefficients of the two eigenvalues
//! that split from a double Jordan eigenvalue `λ₀` on the unit circle, the
//! low-order coefficients of the characteristic polynomial at `λ₀`, and the
//! resulting stability verdict.
//!
//! For `γ(s)` with `γ'(0) = J₄·H·γ(0)` the branches behave as
//!
//! ```text
//! λⱼ(s) = λ₀ + (−1)ʲ·a·√s + μ·s + o(s),   a² = λ₀²κ,   μ = (λ₀/2)·bracket
//! κ       = ⟨Hη₁,η₁⟩ / ⟨η₂,J₄η₁⟩
//! bracket = κ + ⟨Hη₁,η₂⟩/⟨η₁,J₄η₂⟩ + ⟨Hη₂,η₁⟩/⟨η₂,J₄η₁⟩
//!             − ⟨Hη₁,η₁⟩⟨η₂,J₄η₂⟩ / (⟨η₂,J₄η₁⟩⟨η₁,J₄η₂⟩)
//! ```
//!
//! `H = A(0)` for a time family and `H = B(T, 0)` for an endpoint family.

use num_complex::Complex64;
use thiserror::Error;

use crate::matrix::{exterior_power, inner, ComplexMat4, RealMat4};
use crate::spectral::JordanPair;

/// `|⟨Hη₁,η₁⟩|` at or below this is treated as zero.
pub const DEGENERATE_NUMERATOR: f64 = 1e-10;
/// `|κ|` at or below this leaves the stability question open.
pub const KAPPA_ZERO: f64 = 1e-10;
/// `|c₂(0)|` at or below this means `λ₀` sits at ±1.
pub const EXCLUDED_C2: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BifurcationError {
    #[error("degenerate case: |<H eta1, eta1>| = {value:.3e} is numerically zero")]
    Degenerate { value: f64 },
    #[error("excluded case: c2(0) = {value:.3e} vanishes, so lambda0 is at +-1")]
    ExcludedCase { value: f64 },
    #[error("inconclusive: kappa = {kappa:.3e} is numerically zero")]
    Inconclusive { kappa: f64 },
    #[error("branch prediction for s = {0} < 0 requires allow_negative")]
    NegativeParameter(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionCoefficients {
    pub lambda0: Complex64,
    /// `Re(⟨Hη₁,η₁⟩/⟨η₂,J₄η₁⟩)`
    pub kappa: f64,
    /// Imaginary part of the same ratio; zero up to rounding.
    pub kappa_imag_residue: f64,
    /// `⟨Hη₁,η₁⟩`
    pub numerator: Complex64,
    /// Principal square root of `a_squared`.
    pub a: Complex64,
    /// `λ₀²·κ`
    pub a_squared: Complex64,
    /// The four summands of the bracket, in the order written above.
    pub bracket_terms: [Complex64; 4],
    pub bracket: Complex64,
    /// Coefficient of `s` in each branch, `λ₀/2 · bracket`.
    pub second_order: Complex64,
    /// `d/ds (λ₁ + λ₂)` at 0, `λ₀ · bracket`.
    pub sum_derivative: Complex64,
}

impl ExpansionCoefficients {
    /// `Re(λ̄₀ · sum_derivative)`, which equals `κ`.
    pub fn real_part_identity(&self) -> f64 {
        (self.lambda0.conj() * self.sum_derivative).re
    }

    /// The bracket without its first term; purely imaginary in exact arithmetic.
    pub fn imaginary_remainder(&self) -> Complex64 {
        self.bracket - self.bracket_terms[0]
    }
}

/// Coefficients for the time family `γ(t)` with `H = A(0)`.
pub fn expansion_t(pair: &JordanPair, h: &RealMat4) -> Result<ExpansionCoefficients, BifurcationError> {
    let (e1, e2) = (&pair.eta1, &pair.eta2);
    let h1 = h.mul_vec(e1);
    let h2 = h.mul_vec(e2);
    let n11 = inner(&h1, e1);
    if n11.norm() <= DEGENERATE_NUMERATOR {
        return Err(BifurcationError::Degenerate { value: n11.norm() });
    }
    let (f21, f12, f22) = (pair.form_21, pair.form_12, pair.form_22);
    let ratio = n11 / f21;
    let terms = [
        ratio,
        inner(&h1, e2) / f12,
        inner(&h2, e1) / f21,
        -(n11 * f22) / (f21 * f12),
    ];
    let bracket = terms.iter().sum::<Complex64>();
    let l = pair.lambda0;
    let kappa = ratio.re;
    let a_squared = l * l * kappa;
    Ok(ExpansionCoefficients {
        lambda0: l,
        kappa,
        kappa_imag_residue: ratio.im,
        numerator: n11,
        a: a_squared.sqrt(),
        a_squared,
        bracket_terms: terms,
        bracket,
        second_order: l / 2.0 * bracket,
        sum_derivative: l * bracket,
    })
}

/// Coefficients for the endpoint family `eps ↦ γ(T, eps)`. `b` is the
/// perturbation Hamiltonian `B(T, 0)`, which plays the role of `A(0)`.
pub fn expansion_eps(pair: &JordanPair, b: &RealMat4) -> Result<ExpansionCoefficients, BifurcationError> {
    expansion_t(pair, b)
}

/// Taylor data of `det(λ·Id − γ(t))` about `λ = λ₀`, `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientLadder {
    /// `c_k(0)`, `k = 0..=4`
    pub c: [Complex64; 5],
    pub c31: Complex64,
    pub c21: Complex64,
    /// `c₃,₁(0) / c₂(0)`
    pub a_squared: Complex64,
}

impl CoefficientLadder {
    /// `(c₂,₁(0) − c₃(0)·a²) / (2·c₂(0))`, the coefficient of `t` in each branch.
    pub fn second_order(&self) -> Complex64 {
        (self.c21 - self.c[3] * self.a_squared) / (self.c[2] * 2.0)
    }
}

/// Coefficients from exterior powers of `K = λ₀·Id − γ(0)` and `γ'(0)`.
pub fn ladder(
    gamma0: &ComplexMat4,
    gammadot0: &ComplexMat4,
    lambda0: Complex64,
) -> Result<CoefficientLadder, BifurcationError> {
    let k = ComplexMat4::scalar(lambda0) - *gamma0;
    let ext = |k1, k2| exterior_power(k1, k2, &k, gammadot0).expect("orders within range");
    let c: [Complex64; 5] = std::array::from_fn(|deg| ext(4 - deg, 0));
    if c[2].norm() <= EXCLUDED_C2 {
        return Err(BifurcationError::ExcludedCase { value: c[2].norm() });
    }
    let c31 = ext(3, 1);
    let c21 = ext(2, 1);
    Ok(CoefficientLadder {
        c,
        c31,
        c21,
        a_squared: c31 / c[2],
    })
}

/// `γ'(0) = J₄·H·γ(0)`.
pub fn generator_derivative(gamma0: &RealMat4, h: &RealMat4) -> RealMat4 {
    h.mul(gamma0).j4_mul()
}

/// `c₃,₁(0)` and `c₂,₁(0)` through the Jordan chain instead of exterior powers.
pub fn ladder_closed_form(coeffs: &ExpansionCoefficients) -> (Complex64, Complex64) {
    let l = coeffs.lambda0;
    let d = l - l.conj();
    let ratio = coeffs.bracket_terms[0];
    let c31 = l * l * d * d * ratio;
    let rest: Complex64 = coeffs.bracket_terms[1..].iter().sum();
    let c21 = (l * l * d * 2.0 + l * d * d) * ratio + l * d * d * rest;
    (c31, c21)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    /// `κ > 0`: eigenvalues leave the circle for small `s > 0` and stay on it,
    /// distinct, for small `s < 0`.
    UnstableForwardStableBackward,
    /// `κ < 0`: the mirror image.
    StableForwardUnstableBackward,
}

impl Stability {
    pub fn label(self) -> &'static str {
        match self {
            Stability::UnstableForwardStableBackward => "unstable_forward_stable_backward",
            Stability::StableForwardUnstableBackward => "stable_forward_unstable_backward",
        }
    }

    /// Sign of `s` on which the perturbed matrix is unstable.
    pub fn unstable_direction(self) -> f64 {
        match self {
            Stability::UnstableForwardStableBackward => 1.0,
            Stability::StableForwardUnstableBackward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub stability: Stability,
    pub kappa: f64,
}

pub fn classify_stability(coeffs: &ExpansionCoefficients) -> Result<Verdict, BifurcationError> {
    classify_kappa(coeffs.kappa)
}

pub fn classify_kappa(kappa: f64) -> Result<Verdict, BifurcationError> {
    if !(kappa.abs() > KAPPA_ZERO) {
        return Err(BifurcationError::Inconclusive { kappa });
    }
    let stability = if kappa > 0.0 {
        Stability::UnstableForwardStableBackward
    } else {
        Stability::StableForwardUnstableBackward
    };
    Ok(Verdict { stability, kappa })
}

/// Two-term expansion `(λ₁(s), λ₂(s)) = (λ₀ − a√s + μs, λ₀ + a√s + μs)`.
///
/// Negative `s` is refused unless `allow_negative`, in which case `√s` is
/// read as `i·√|s|`; only the sum of the pair is meaningful there.
pub fn predict_branches(
    coeffs: &ExpansionCoefficients,
    s: f64,
    allow_negative: bool,
) -> Result<(Complex64, Complex64), BifurcationError> {
    let root = if s >= 0.0 {
        Complex64::new(s.sqrt(), 0.0)
    } else if allow_negative {
        Complex64::new(0.0, (-s).sqrt())
    } else {
        return Err(BifurcationError::NegativeParameter(s));
    };
    let centre = coeffs.lambda0 + coeffs.second_order * s;
    let split = coeffs.a * root;
    Ok((centre - split, centre + split))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::symplectic_defect;
    use crate::spectral::{
        detect_double_unitary, jordan_pair, make_jordan_symplectic, JordanTolerances, TOL_CIRCLE, TOL_CLUSTER,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_symmetric(rng: &mut impl Rng) -> RealMat4 {
        let m = RealMat4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        m.add(&m.transpose()).scale(0.5)
    }

    fn random_symplectic(rng: &mut impl Rng) -> RealMat4 {
        let s1 = random_symmetric(rng);
        let s2 = random_symmetric(rng);
        let upper = RealMat4::from_fn(|i, j| match (i, j) {
            (i, j) if i == j => 1.0,
            (0..=1, 2..=3) => s1[(i, j - 2)] * 0.7,
            _ => 0.0,
        });
        let lower = RealMat4::from_fn(|i, j| match (i, j) {
            (i, j) if i == j => 1.0,
            (2..=3, 0..=1) => s2[(i - 2, j)] * 0.7,
            _ => 0.0,
        });
        upper.mul(&lower)
    }

    /// A real symplectic matrix with a Jordan block at `e^{iθ}`, its chain, and a random `A(0)`.
    fn random_scenario(rng: &mut impl Rng) -> (RealMat4, JordanPair, RealMat4) {
        loop {
            let theta = rng.gen_range(0.3..2.8);
            let b = rng.gen_range(-1.0..1.0);
            let c = [[rng.gen_range(0.2..1.5), b], [b, rng.gen_range(0.2..1.5)]];
            let s = random_symplectic(rng);
            let g = s
                .mul(&make_jordan_symplectic(theta, c).unwrap())
                .mul(&s.symplectic_inverse());
            assert!(symplectic_defect(&g) < 1e-12);
            let gc = g.to_complex();
            let Some(l) = detect_double_unitary(&gc, TOL_CLUSTER, TOL_CIRCLE) else {
                continue;
            };
            let Ok(pair) = jordan_pair(&gc, l, &JordanTolerances::default()) else {
                continue;
            };
            return (g, pair, random_symmetric(rng));
        }
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-12)
    }

    #[test]
    fn zero_hamiltonian_is_degenerate() {
        let g = make_jordan_symplectic(PI / 3.0, [[1.0, 0.0], [0.0, 1.0]])
            .unwrap()
            .to_complex();
        let l = Complex64::from_polar(1.0, PI / 3.0);
        let pair = jordan_pair(&g, l, &JordanTolerances::default()).unwrap();
        assert!(matches!(
            expansion_t(&pair, &RealMat4::zero()),
            Err(BifurcationError::Degenerate { .. })
        ));
        assert!(matches!(
            expansion_eps(&pair, &RealMat4::zero()),
            Err(BifurcationError::Degenerate { .. })
        ));
    }

    #[test]
    fn structural_identities_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let (_, pair, a0) = random_scenario(&mut rng);
            let e = expansion_t(&pair, &a0).unwrap();
            assert!(e.kappa_imag_residue.abs() < 1e-8 * e.kappa.abs().max(1.0));
            assert!(e.imaginary_remainder().re.abs() < 1e-8 * e.bracket.norm().max(1.0));
            assert!((e.real_part_identity() - e.kappa).abs() < 1e-8 * e.kappa.abs().max(1.0));
            assert_eq!(e.second_order, e.sum_derivative / 2.0);
            assert!(rel(e.a * e.a, e.lambda0 * e.lambda0 * e.kappa) < 1e-10);
            assert!((e.a.norm_sqr() - e.kappa.abs()).abs() < 1e-10 * e.kappa.abs().max(1.0));
        }
    }

    #[test]
    fn exterior_and_chain_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let (g, pair, a0) = random_scenario(&mut rng);
            let e = expansion_t(&pair, &a0).unwrap();
            let gdot = generator_derivative(&g, &a0).to_complex();
            let lad = ladder(&g.to_complex(), &gdot, pair.lambda0).unwrap();
            let (c31, c21) = ladder_closed_form(&e);
            assert!(rel(lad.c31, c31) < 1e-9, "c31 {} vs {}", lad.c31, c31);
            assert!(rel(lad.c21, c21) < 1e-9, "c21 {} vs {}", lad.c21, c21);
            let d = pair.lambda0 - pair.lambda0.conj();
            assert!(lad.c[0].norm() < 1e-8 && lad.c[1].norm() < 1e-8);
            assert!((lad.c[2] - d * d).norm() < 1e-8);
            assert!((lad.c[3] - d * 2.0).norm() < 1e-8);
            assert!((lad.c[2] * e.a_squared - lad.c31).norm() < 1e-8 * lad.c31.norm().max(1.0));
            assert!(rel(lad.second_order(), e.second_order) < 1e-8);
        }
    }

    #[test]
    fn ladder_with_frozen_flow_vanishes() {
        let g = make_jordan_symplectic(PI / 2.0, [[1.0, 0.0], [0.0, 1.0]])
            .unwrap()
            .to_complex();
        let lad = ladder(&g, &ComplexMat4::zero(), Complex64::new(0.0, 1.0)).unwrap();
        assert_eq!(lad.c31, Complex64::new(0.0, 0.0));
        assert_eq!(lad.c21, Complex64::new(0.0, 0.0));
        assert_eq!(lad.a_squared.sqrt(), Complex64::new(0.0, 0.0));
        let id = ComplexMat4::identity();
        assert!(matches!(
            ladder(&id, &ComplexMat4::zero(), Complex64::new(1.0, 0.0)),
            Err(BifurcationError::ExcludedCase { .. })
        ));
    }

    #[test]
    fn coefficients_are_gauge_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (_, pair, a0) = random_scenario(&mut rng);
        let base = expansion_t(&pair, &a0).unwrap();
        for _ in 0..20 {
            let c = Complex64::from_polar(rng.gen_range(0.2..3.0), rng.gen_range(0.0..6.3));
            let d = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let e = expansion_t(&pair.regauge(c, d), &a0).unwrap();
            assert!((e.kappa - base.kappa).abs() < 1e-9 * base.kappa.abs());
            assert!(rel(e.a_squared, base.a_squared) < 1e-9);
            assert!(rel(e.second_order, base.second_order) < 1e-9);
            assert!(rel(e.sum_derivative, base.sum_derivative) < 1e-9);
        }
    }

    #[test]
    fn conjugate_chain_conjugates_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let (_, pair, a0) = random_scenario(&mut rng);
        let e = expansion_t(&pair, &a0).unwrap();
        let c = expansion_t(&pair.conjugate(), &a0).unwrap();
        assert!((c.kappa - e.kappa).abs() < 1e-12 * e.kappa.abs());
        assert!(rel(c.second_order, e.second_order.conj()) < 1e-12);
        assert!(rel(c.a_squared, e.a_squared.conj()) < 1e-12);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            classify_kappa(0.7).unwrap().stability,
            Stability::UnstableForwardStableBackward
        );
        assert_eq!(
            classify_kappa(-0.7).unwrap().stability,
            Stability::StableForwardUnstableBackward
        );
        assert!(matches!(
            classify_kappa(0.0),
            Err(BifurcationError::Inconclusive { .. })
        ));
        assert!(matches!(
            classify_kappa(f64::NAN),
            Err(BifurcationError::Inconclusive { .. })
        ));
    }

    #[test]
    fn branch_prediction_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let (_, pair, a0) = random_scenario(&mut rng);
        let e = expansion_t(&pair, &a0).unwrap();
        assert_eq!(predict_branches(&e, 0.0, false).unwrap(), (e.lambda0, e.lambda0));
        for s in [1e-6, 1e-3, 0.2] {
            let (l1, l2) = predict_branches(&e, s, false).unwrap();
            let sum = e.lambda0 * 2.0 + e.second_order * 2.0 * s;
            assert!((l1 + l2 - sum).norm() < 1e-15);
            assert!(((l2 - l1) - e.a * 2.0 * s.sqrt()).norm() < 1e-15);
        }
        assert!(matches!(
            predict_branches(&e, -1e-3, false),
            Err(BifurcationError::NegativeParameter(_))
        ));
        let (n1, n2) = predict_branches(&e, -1e-3, true).unwrap();
        assert!((n1 + n2 - (e.lambda0 * 2.0 - e.second_order * 2e-3)).norm() < 1e-15);
    }
}
