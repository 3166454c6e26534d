use num_complex::Complex64;

use super::{LinalgError, ONE, ZERO};

/// A quartic `Σ c_k (λ − center)^k`, coefficients in ascending order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticPoly {
    pub coeffs: [Complex64; 5],
    pub center: Complex64,
}

impl QuarticPoly {
    pub fn new(coeffs: [Complex64; 5], center: Complex64) -> Self {
        Self { coeffs, center }
    }

    /// Monic quartic with the given roots, expanded about `center`.
    pub fn from_roots(roots: &[Complex64; 4], center: Complex64) -> Self {
        let mut c = [ZERO; 5];
        c[0] = ONE;
        for (deg, r) in roots.iter().enumerate() {
            let shifted = *r - center;
            // multiply by (u − shifted)
            for k in (0..=deg + 1).rev() {
                let lower = if k > 0 { c[k - 1] } else { ZERO };
                c[k] = lower - shifted * c[k];
            }
        }
        Self::new(c, center)
    }

    /// Value at an absolute point `λ`.
    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        self.eval_shifted(lambda - self.center)
    }

    /// Value at `u = λ − center`.
    pub fn eval_shifted(&self, u: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * u + c)
    }

    /// `p'` at `u = λ − center`.
    pub fn derivative_shifted(&self, u: Complex64) -> Complex64 {
        (1..5).rev().fold(ZERO, |acc, k| acc * u + self.coeffs[k] * k as f64)
    }

    /// `p''` at `u = λ − center`.
    pub fn second_derivative_shifted(&self, u: Complex64) -> Complex64 {
        (2..5)
            .rev()
            .fold(ZERO, |acc, k| acc * u + self.coeffs[k] * (k * (k - 1)) as f64)
    }

    /// Max-magnitude coefficient.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// The same polynomial expanded about a different center.
    pub fn recenter(&self, center: Complex64) -> Self {
        // Taylor shift: c'_k = Σ_{j≥k} C(j,k) c_j (center − old)^{j−k}
        let d = center - self.center;
        let mut c = self.coeffs;
        for i in 0..4 {
            for k in (i..4).rev() {
                let hi = c[k + 1];
                c[k] += hi * d;
            }
        }
        Self::new(c, center)
    }
}

/// All four roots of `p` with multiplicity, in absolute coordinates.
///
/// The closed-form Ferrari reduction (resolvent cubic solved by Cardano)
/// gives starting values, which are then polished by Newton steps with
/// implicit deflation against the other three roots. Clusters are never
/// merged; nearly equal roots come back as separate entries.
pub fn quartic_roots(p: &QuarticPoly) -> Result<[Complex64; 4], LinalgError> {
    let lead = p.coeffs[4];
    if lead == ZERO || !lead.is_finite() {
        return Err(LinalgError::DegeneratePolynomial);
    }
    let monic = QuarticPoly::new(p.coeffs.map(|c| c / lead), p.center);
    let mut roots = ferrari(&monic.coeffs);
    polish(&monic, &mut roots);
    Ok(roots.map(|u| u + p.center))
}

fn ferrari(c: &[Complex64; 5]) -> [Complex64; 4] {
    let (b, cc, d, e) = (c[3], c[2], c[1], c[0]);
    let shift = -b / 4.0;
    let b2 = b * b;
    let p = cc - b2 * 3.0 / 8.0;
    let q = d - b * cc / 2.0 + b2 * b / 8.0;
    let r = e - b * d / 4.0 + b2 * cc / 16.0 - b2 * b2 * 3.0 / 256.0;

    // characteristic magnitude of y
    let scale = p.norm().sqrt().max(q.norm().cbrt()).max(r.norm().sqrt().sqrt());
    let ys: [Complex64; 4] = if q.norm() <= 1e-15 * scale.powi(3) {
        // biquadratic: y⁴ + p y² + r
        let (z1, z2) = quadratic(p, r);
        let (s1, s2) = (z1.sqrt(), z2.sqrt());
        [s1, -s1, s2, -s2]
    } else {
        // (y² + p/2 + m)² = 2m (y − q/(4m))²  where m solves the resolvent cubic
        let ms = cubic(p, p * p / 4.0 - r, -q * q / 8.0);
        let m = ms.into_iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        let s = (m * 2.0).sqrt();
        let t = q / (s * 2.0);
        let base = p / 2.0 + m;
        let (y1, y2) = quadratic(-s, base + t);
        let (y3, y4) = quadratic(s, base - t);
        [y1, y2, y3, y4]
    };
    ys.map(|y| y + shift)
}

/// Roots of `z² + b z + c`.
fn quadratic(b: Complex64, c: Complex64) -> (Complex64, Complex64) {
    let disc = (b * b - c * 4.0).sqrt();
    // pick the sign that avoids cancellation
    let q = if (b.conj() * disc).re >= 0.0 {
        -(b + disc) / 2.0
    } else {
        -(b - disc) / 2.0
    };
    if q == ZERO {
        return (ZERO, ZERO);
    }
    (q, c / q)
}

/// Roots of the monic cubic `m³ + a m² + b m + c`, Newton-polished.
fn cubic(a: Complex64, b: Complex64, c: Complex64) -> [Complex64; 3] {
    let shift = -a / 3.0;
    let p = b - a * a / 3.0;
    let q = a * a * a * 2.0 / 27.0 - a * b / 3.0 + c;
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let w = if (q.conj() * disc).re >= 0.0 {
        -q / 2.0 - disc
    } else {
        -q / 2.0 + disc
    };
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut roots = if w == ZERO {
        [ZERO; 3]
    } else {
        let u = w.powf(1.0 / 3.0);
        let mut out = [ZERO; 3];
        let mut uk = u;
        for slot in out.iter_mut() {
            *slot = uk - p / (uk * 3.0);
            uk *= omega;
        }
        out
    };
    for x in roots.iter_mut() {
        *x += shift;
        for _ in 0..4 {
            let f = ((*x + a) * *x + b) * *x + c;
            let df = (*x * 3.0 + a * 2.0) * *x + b;
            if df == ZERO {
                break;
            }
            let next = *x - f / df;
            let fnext = ((next + a) * next + b) * next + c;
            if fnext.norm() < f.norm() {
                *x = next;
            } else {
                break;
            }
        }
    }
    roots
}

fn polish(p: &QuarticPoly, roots: &mut [Complex64; 4]) {
    let target = 1e-14 * (1.0 + p.norm());
    for i in 0..4 {
        for _ in 0..60 {
            let u = roots[i];
            let f = p.eval_shifted(u);
            if f.norm() <= target * 1e-2 {
                break;
            }
            let df = p.derivative_shifted(u);
            let ratio = if df == ZERO { None } else { Some(f / df) };
            // Newton–Maehly: deflate the other current root estimates
            let coupling: Complex64 = (0..4)
                .filter(|&j| j != i && roots[j] != u)
                .map(|j| ONE / (u - roots[j]))
                .sum();
            let step = match ratio {
                Some(n) => {
                    let denom = ONE - n * coupling;
                    if denom == ZERO {
                        n
                    } else {
                        n / denom
                    }
                }
                None => break,
            };
            let next = u - step;
            if !next.is_finite() || p.eval_shifted(next).norm() >= f.norm() {
                break;
            }
            roots[i] = next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_same_roots(found: &[Complex64; 4], expect: &[Complex64; 4], tol: f64) {
        let mut used = [false; 4];
        for e in expect {
            let (k, dist) = found
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, f)| (k, (f - e).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(dist <= tol, "root {e} not found (closest at {dist:e}); got {found:?}");
            used[k] = true;
        }
    }

    fn max_residual(p: &QuarticPoly, roots: &[Complex64; 4]) -> f64 {
        roots.iter().map(|r| p.eval(*r).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn fourth_roots_of_unity() {
        let p = QuarticPoly::new([c(-1.0, 0.0), ZERO, ZERO, ZERO, ONE], ZERO);
        let roots = quartic_roots(&p).unwrap();
        assert_same_roots(&roots, &[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)], 1e-14);
    }

    #[test]
    fn quadruple_root() {
        let p = QuarticPoly::from_roots(&[c(2.0, 0.0); 4], ZERO);
        let roots = quartic_roots(&p).unwrap();
        for r in roots {
            assert!((r - c(2.0, 0.0)).norm() < 1e-3);
        }
        assert!(max_residual(&p, &roots) <= 1e-12 * (1.0 + p.norm()));
        // centered at the root, it is exactly u⁴
        let centered = QuarticPoly::from_roots(&[c(2.0, 0.0); 4], c(2.0, 0.0));
        assert_eq!(quartic_roots(&centered).unwrap(), [c(2.0, 0.0); 4]);
    }

    #[test]
    fn zero_leading_coefficient_is_degenerate() {
        let p = QuarticPoly::new([ONE, ONE, ONE, ONE, ZERO], ZERO);
        assert_eq!(quartic_roots(&p), Err(LinalgError::DegeneratePolynomial));
    }

    /// Independent check: Durand–Kerner simultaneous iteration from a
    /// generic start, no closed form involved.
    fn durand_kerner(p: &QuarticPoly) -> [Complex64; 4] {
        let seed = c(0.4, 0.9);
        let mut z: [Complex64; 4] = std::array::from_fn(|k| seed.powi(k as i32) * (1.0 + p.norm()));
        for _ in 0..2000 {
            for i in 0..4 {
                let denom: Complex64 = (0..4).filter(|&j| j != i).map(|j| z[i] - z[j]).product();
                z[i] -= p.eval_shifted(z[i]) / (denom * p.coeffs[4]);
            }
        }
        z.map(|u| u + p.center)
    }

    #[test]
    fn random_quartics_against_simultaneous_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let roots: [Complex64; 4] = std::array::from_fn(|_| c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)));
            let center = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let p = QuarticPoly::from_roots(&roots, center);
            let found = quartic_roots(&p).unwrap();
            assert!(max_residual(&p, &found) <= 1e-12 * (1.0 + p.norm()));
            let min_gap = (0..4)
                .flat_map(|i| (0..i).map(move |j| (i, j)))
                .map(|(i, j)| (roots[i] - roots[j]).norm())
                .fold(f64::INFINITY, f64::min);
            if min_gap > 1e-2 {
                assert_same_roots(&found, &durand_kerner(&p), 1e-9);
                // coefficient round trip
                let back = QuarticPoly::from_roots(&found, center);
                for k in 0..5 {
                    assert!((back.coeffs[k] - p.coeffs[k]).norm() <= 1e-9 * (1.0 + p.norm()));
                }
            }
        }
    }

    #[test]
    fn tight_cluster_near_center_is_resolved() {
        // two roots 1e-4 apart at the center, two far away
        let center = c(0.5, 0.866);
        let roots = [
            center + c(3e-5, 4e-5),
            center - c(3e-5, 4e-5),
            c(0.5, -0.866),
            c(0.5001, -0.866),
        ];
        let p = QuarticPoly::from_roots(&roots, center);
        let found = quartic_roots(&p).unwrap();
        assert_same_roots(&found, &roots, 1e-11);
    }

    #[test]
    fn recenter_preserves_values() {
        let p = QuarticPoly::new(
            [c(1.0, 2.0), c(-0.5, 0.1), c(0.3, 0.0), c(0.0, -2.0), c(1.5, 0.5)],
            c(0.2, -0.3),
        );
        let q = p.recenter(c(-1.0, 0.7));
        for z in [c(0.0, 0.0), c(1.0, 1.0), c(-2.0, 0.5)] {
            assert!((p.eval(z) - q.eval(z)).norm() < 1e-12);
        }
    }
}
