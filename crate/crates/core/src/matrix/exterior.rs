use num_complex::Complex64;

use super::{ComplexMat4, LinalgError, QuarticPoly, DIM, ONE, ZERO};

/// Scalar action of `⋀(4, k1, k2, A1, A2)` on the one-dimensional `Λ⁴(C⁴)`.
///
/// Sums, over every assignment of `{Id, A1, A2}` to the four basis vectors
/// in which `A1` is used exactly `k1` times and `A2` exactly `k2` times, the
/// determinant of the matrix whose `i`-th column is the chosen map applied to
/// `eᵢ`. With `k2 = 0` this is the single-map power `⋀(4, k1, A1)`; in
/// particular `⋀(4, 4, A) = det A` and `⋀(4, 1, A) = tr A`.
pub fn exterior_power(k1: usize, k2: usize, a1: &ComplexMat4, a2: &ComplexMat4) -> Result<Complex64, LinalgError> {
    if k1 + k2 > DIM {
        return Err(LinalgError::Precondition(format!(
            "k1 + k2 must not exceed {DIM} (got k1={k1}, k2={k2})"
        )));
    }
    let id = ComplexMat4::identity();
    let maps = [&id, a1, a2];
    let mut total = ZERO;
    // σ ranges over {0,1,2}⁴, encoded in base 3
    for code in 0..81usize {
        let sigma: [usize; 4] = std::array::from_fn(|i| (code / 3usize.pow(i as u32)) % 3);
        let ones = sigma.iter().filter(|&&s| s == 1).count();
        let twos = sigma.iter().filter(|&&s| s == 2).count();
        if ones != k1 || twos != k2 {
            continue;
        }
        let m = ComplexMat4::from_fn(|row, col| maps[sigma[col]].0[row][col]);
        total += m.det();
    }
    Ok(total)
}

/// Characteristic polynomial `det(λ·Id − γ(t))` expanded in powers of
/// `(λ − λ₀)` through the three-term split
/// `(λ − λ₀)·Id + (λ₀·Id − γ(0)) − (γ(t) − γ(0))`.
///
/// Coefficient `c_k` collects every assignment with `k` identity columns:
/// `c_k = Σ_{k1+k2 = 4−k} (−1)^{k2} ⋀(4, k1, k2, λ₀Id − γ(0), γ(t) − γ(0))`.
pub fn charpoly_three_term(gamma0: &ComplexMat4, gammat: &ComplexMat4, lambda0: Complex64) -> QuarticPoly {
    charpoly_split(gamma0, &(*gammat - *gamma0), lambda0)
}

/// `charpoly_three_term` with the increment `γ(t) − γ(0)` supplied directly,
/// so that a small, accurately known increment keeps its relative precision.
pub fn charpoly_split(gamma0: &ComplexMat4, delta: &ComplexMat4, lambda0: Complex64) -> QuarticPoly {
    let k = ComplexMat4::scalar(lambda0) - *gamma0;
    let delta = *delta;
    let delta_is_zero = delta.max_abs() == 0.0;
    let mut coeffs = [ZERO; 5];
    for (deg, c) in coeffs.iter_mut().enumerate() {
        let m = DIM - deg;
        for k2 in 0..=m {
            if k2 > 0 && delta_is_zero {
                break;
            }
            let term = exterior_power(m - k2, k2, &k, &delta).expect("k1 + k2 = 4 - deg <= 4");
            if k2 % 2 == 0 {
                *c += term;
            } else {
                *c -= term;
            }
        }
    }
    debug_assert_eq!(coeffs[4], ONE);
    QuarticPoly::new(coeffs, lambda0)
}
