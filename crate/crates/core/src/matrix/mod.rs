//! Fixed-size (4×4) complex linear algebra.
//!
//! Everything spectral in this crate lives in `C⁴`: the standard symplectic
//! form `J₄`, the sesquilinear inner product (conjugate-linear in the second
//! slot), exterior powers of linear maps acting on `Λ⁴(C⁴)`, characteristic
//! polynomials, and the quartic root solver used to get eigenvalues.

mod exterior;
mod quartic;
mod svd;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub use exterior::{charpoly_split, charpoly_three_term, exterior_power};
pub use quartic::{quartic_roots, QuarticPoly};
pub use svd::{svd, Svd};

/// Dimension of the phase space.
pub const DIM: usize = 4;

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate polynomial: leading coefficient is zero")]
    DegeneratePolynomial,
}

/// A vector in `C⁴`.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct ComplexVec4(pub [Complex64; 4]);

/// A 4×4 complex matrix, row-major.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct ComplexMat4(pub [[Complex64; 4]; 4]);

/// A 4×4 real matrix, row-major. Flows and Hamiltonians stay in real
/// arithmetic so their imaginary parts are exactly zero when promoted.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct RealMat4(pub [[f64; 4]; 4]);

impl ComplexVec4 {
    pub fn zero() -> Self {
        Self([ZERO; 4])
    }

    pub fn basis(k: usize) -> Self {
        let mut v = Self::zero();
        v.0[k] = ONE;
        v
    }

    pub fn from_real(x: [f64; 4]) -> Self {
        Self(x.map(|r| Complex64::new(r, 0.0)))
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self(self.0.map(|z| z * c))
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.is_finite())
    }
}

impl Index<usize> for ComplexVec4 {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ComplexVec4 {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.0[i]
    }
}

impl Add for ComplexVec4 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl Sub for ComplexVec4 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl Neg for ComplexVec4 {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|z| -z))
    }
}

impl fmt::Debug for ComplexVec4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// `⟨x, y⟩ = Σ x_j · conj(y_j)`.
pub fn inner(x: &ComplexVec4, y: &ComplexVec4) -> Complex64 {
    x.0.iter().zip(y.0.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// The Krein pairing `⟨x, J₄y⟩`.
pub fn symplectic_form(x: &ComplexVec4, y: &ComplexVec4) -> Complex64 {
    inner(x, &apply_j4(y))
}

/// `J₄·y` without forming the matrix: `(y₃, y₄, −y₁, −y₂)`.
pub fn apply_j4(y: &ComplexVec4) -> ComplexVec4 {
    ComplexVec4([y.0[2], y.0[3], -y.0[0], -y.0[1]])
}

/// True iff `‖MᵀJ₄M − J₄‖_max ≤ tol` and every entry has `|Im| ≤ tol`.
pub fn is_symplectic(m: &ComplexMat4, tol: f64) -> bool {
    if m.0.iter().flatten().any(|z| z.im.abs() > tol) {
        return false;
    }
    symplectic_defect(&m.re()) <= tol
}

/// `‖MᵀJ₄M − J₄‖_max` for a real matrix.
pub fn symplectic_defect(m: &RealMat4) -> f64 {
    let j = RealMat4::j4();
    m.transpose().mul(&j).mul(m).sub(&j).max_abs()
}

impl ComplexMat4 {
    pub fn zero() -> Self {
        Self([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        Self::scalar(ONE)
    }

    pub fn scalar(c: Complex64) -> Self {
        let mut m = Self::zero();
        for i in 0..DIM {
            m.0[i][i] = c;
        }
        m
    }

    pub fn j4() -> Self {
        RealMat4::j4().to_complex()
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| f(i, j))))
    }

    pub fn from_columns(cols: &[ComplexVec4; 4]) -> Self {
        Self::from_fn(|i, j| cols[j].0[i])
    }

    pub fn column(&self, j: usize) -> ComplexVec4 {
        ComplexVec4(std::array::from_fn(|i| self.0[i][j]))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i].conj())
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(|i, j| self.0[i][j].conj())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * c)
    }

    pub fn mul_vec(&self, v: &ComplexVec4) -> ComplexVec4 {
        ComplexVec4(std::array::from_fn(|i| (0..DIM).map(|k| self.0[i][k] * v.0[k]).sum()))
    }

    pub fn trace(&self) -> Complex64 {
        (0..DIM).map(|i| self.0[i][i]).sum()
    }

    /// Real parts, dropping the imaginary component.
    pub fn re(&self) -> RealMat4 {
        RealMat4(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j].re)))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.is_finite())
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det(&self) -> Complex64 {
        let mut a = self.0;
        let mut det = ONE;
        for col in 0..DIM {
            let pivot = (col..DIM)
                .max_by(|&r, &s| a[r][col].norm().total_cmp(&a[s][col].norm()))
                .unwrap();
            if a[pivot][col] == ZERO {
                return ZERO;
            }
            if pivot != col {
                a.swap(pivot, col);
                det = -det;
            }
            let p = a[col][col];
            det *= p;
            for row in col + 1..DIM {
                let f = a[row][col] / p;
                if f != ZERO {
                    let pivot_row = a[col];
                    for (x, v) in a[row].iter_mut().zip(pivot_row).skip(col + 1) {
                        *x -= f * v;
                    }
                }
            }
        }
        det
    }
}

impl Index<(usize, usize)> for ComplexMat4 {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMat4 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.0[i][j]
    }
}

impl Mul for ComplexMat4 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| (0..DIM).map(|k| self.0[i][k] * rhs.0[k][j]).sum())
    }
}

impl Add for ComplexMat4 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl Sub for ComplexMat4 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl Neg for ComplexMat4 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::from_fn(|i, j| -self.0[i][j])
    }
}

impl fmt::Debug for ComplexMat4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl RealMat4 {
    pub fn zero() -> Self {
        Self([[0.0; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..DIM {
            m.0[i][i] = 1.0;
        }
        m
    }

    /// `[[0, Id₂], [−Id₂, 0]]`.
    pub fn j4() -> Self {
        let mut m = Self::zero();
        m.0[0][2] = 1.0;
        m.0[1][3] = 1.0;
        m.0[2][0] = -1.0;
        m.0[3][1] = -1.0;
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| f(i, j))))
    }

    pub fn to_complex(&self) -> ComplexMat4 {
        ComplexMat4::from_fn(|i, j| Complex64::new(self.0[i][j], 0.0))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self::from_fn(|i, j| (0..DIM).map(|k| self.0[i][k] * rhs.0[k][j]).sum())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * c)
    }

    /// `self + c·rhs`.
    pub fn axpy(&self, c: f64, rhs: &Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + c * rhs.0[i][j])
    }

    /// `J₄·self`, computed as a signed row permutation.
    pub fn j4_mul(&self) -> Self {
        let r = &self.0;
        Self([r[2], r[3], r[0].map(|x| -x), r[1].map(|x| -x)])
    }

    /// Inverse of a symplectic matrix, `−J₄MᵀJ₄`.
    pub fn symplectic_inverse(&self) -> Self {
        let j = Self::j4();
        j.mul(&self.transpose()).mul(&j).scale(-1.0)
    }

    pub fn mul_vec(&self, v: &ComplexVec4) -> ComplexVec4 {
        ComplexVec4(std::array::from_fn(|i| (0..DIM).map(|k| v.0[k] * self.0[i][k]).sum()))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn is_symmetric(&self) -> bool {
        (0..DIM).all(|i| (0..i).all(|j| self.0[i][j] == self.0[j][i]))
    }
}

impl Index<(usize, usize)> for RealMat4 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for RealMat4 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl fmt::Debug for RealMat4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inner_conjugates_second_slot() {
        let e1 = ComplexVec4::basis(0);
        let e2 = ComplexVec4::basis(1);
        assert_eq!(inner(&e1, &e1), ONE);
        assert_eq!(inner(&e1, &e2), ZERO);
        let x = ComplexVec4([c(0.0, 1.0), ZERO, ZERO, ZERO]);
        assert_eq!(inner(&x, &e1), c(0.0, 1.0));
        assert_eq!(inner(&e1, &x), c(0.0, -1.0));
    }

    #[test]
    fn symplectic_form_on_basis() {
        let e1 = ComplexVec4::basis(0);
        let e3 = ComplexVec4::basis(2);
        assert_eq!(symplectic_form(&e1, &e3), ONE);
        assert_eq!(symplectic_form(&e1, &e1), ZERO);
        let x = ComplexVec4([c(0.3, -1.0), c(2.0, 0.5), c(-0.7, 0.1), c(0.0, 4.0)]);
        assert!(symplectic_form(&x, &x).re.abs() < 1e-15);
    }

    #[test]
    fn j4_structure() {
        let j = RealMat4::j4();
        assert_eq!(j.transpose(), j.scale(-1.0));
        assert_eq!(j.mul(&j), RealMat4::identity().scale(-1.0));
        assert_eq!(ComplexMat4::j4().mul_vec(&ComplexVec4::basis(2)), ComplexVec4::basis(0));
        let m = RealMat4::from_fn(|i, j| (i * 4 + j) as f64 - 3.5);
        assert_eq!(m.j4_mul(), j.mul(&m));
    }

    #[test]
    fn is_symplectic_examples() {
        assert!(is_symplectic(&ComplexMat4::identity(), 1e-12));
        assert!(is_symplectic(&ComplexMat4::j4(), 1e-12));
        assert!(!is_symplectic(&ComplexMat4::scalar(c(2.0, 0.0)), 1e-8));
        let mut m = ComplexMat4::identity();
        m[(0, 0)] = c(1.0, 1e-3);
        assert!(!is_symplectic(&m, 1e-8));
    }

    #[test]
    fn symplectic_inverse_matches_product() {
        // shear [[I, S],[0, I]] with S symmetric is symplectic
        let mut m = RealMat4::identity();
        m[(0, 2)] = 0.7;
        m[(0, 3)] = -0.2;
        m[(1, 2)] = -0.2;
        m[(1, 3)] = 1.3;
        let prod = m.mul(&m.symplectic_inverse());
        assert!(prod.sub(&RealMat4::identity()).max_abs() < 1e-15);
    }

    #[test]
    fn det_of_permutation_and_triangular() {
        assert_eq!(ComplexMat4::j4().det(), ONE);
        let m = ComplexMat4::from_fn(|i, j| if j >= i { c((i + 1) as f64, j as f64) } else { ZERO });
        let expect = c(1.0, 0.0) * c(2.0, 1.0) * c(3.0, 2.0) * c(4.0, 3.0);
        assert!((m.det() - expect).norm() < 1e-12);
    }
}
