use num_complex::Complex64;

use super::{inner, ComplexMat4, ComplexVec4, DIM, ONE, ZERO};

/// Thin SVD `K = U·diag(σ)·Vᴴ` of a 4×4 complex matrix, singular values in
/// descending order. `u[i]` and `v[i]` are the i-th left/right singular
/// vectors; when `σ_i = 0` the corresponding `u[i]` is zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub sigma: [f64; 4],
    pub u: [ComplexVec4; 4],
    pub v: [ComplexVec4; 4],
}

impl Svd {
    /// Number of singular values at or below `rel_tol · σ_max`.
    pub fn nullity(&self, rel_tol: f64) -> usize {
        let cutoff = rel_tol * self.sigma[0];
        self.sigma.iter().filter(|&&s| s <= cutoff).count()
    }

    /// Minimum-norm least-squares solution of `K x = b`, discarding the
    /// singular directions with `σ ≤ rel_tol · σ_max`.
    pub fn solve_truncated(&self, b: &ComplexVec4, rel_tol: f64) -> ComplexVec4 {
        let cutoff = rel_tol * self.sigma[0];
        let mut x = ComplexVec4::zero();
        for k in 0..DIM {
            if self.sigma[k] > cutoff {
                let coef = inner(b, &self.u[k]) / self.sigma[k];
                x = x + self.v[k].scale(coef);
            }
        }
        x
    }
}

/// One-sided (Hestenes) Jacobi: orthogonalize the columns of `K·V` by
/// complex plane rotations accumulated in `V`.
pub fn svd(k: &ComplexMat4) -> Svd {
    let mut cols: [ComplexVec4; 4] = std::array::from_fn(|j| k.column(j));
    let mut v: [ComplexVec4; 4] = std::array::from_fn(ComplexVec4::basis);

    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..DIM {
            for q in p + 1..DIM {
                let alpha = cols[p].norm().powi(2);
                let beta = cols[q].norm().powi(2);
                // g = a_pᴴ a_q
                let g = inner(&cols[q], &cols[p]);
                let gabs = g.norm();
                if gabs <= f64::EPSILON * (alpha * beta).sqrt() || gabs == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = g / gabs;
                let zeta = (beta - alpha) / (2.0 * gabs);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // [a_p, a_q] ← [a_p, a_q] · diag(1, conj(phase)) · [[c, s], [−s, c]]
                let rot = |x: &ComplexVec4, y: &ComplexVec4| -> (ComplexVec4, ComplexVec4) {
                    let y = y.scale(phase.conj());
                    (
                        x.scale(Complex64::new(c, 0.0)) - y.scale(Complex64::new(s, 0.0)),
                        x.scale(Complex64::new(s, 0.0)) + y.scale(Complex64::new(c, 0.0)),
                    )
                };
                let (np, nq) = rot(&cols[p], &cols[q]);
                cols[p] = np;
                cols[q] = nq;
                let (vp, vq) = rot(&v[p], &v[q]);
                v[p] = vp;
                v[q] = vq;
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: [usize; 4] = [0, 1, 2, 3];
    let norms: [f64; 4] = std::array::from_fn(|j| cols[j].norm());
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let sigma = order.map(|j| norms[j]);
    let u = order.map(|j| {
        if norms[j] > 0.0 {
            cols[j].scale(ONE / norms[j])
        } else {
            ComplexVec4([ZERO; 4])
        }
    });
    let v = order.map(|j| v[j]);
    Svd { sigma, u, v }
}
