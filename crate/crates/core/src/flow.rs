//! Fixed-step RK4 integration of `γ' = J₄·A(t, eps)·γ` and the effective
//! perturbation Hamiltonian of the endpoint family `eps ↦ γ(T, eps)`.

use thiserror::Error;

use crate::expr::{ExprError, SymmetricCurve};
use crate::matrix::{symplectic_defect, RealMat4};

/// Tolerance on `‖γᵀJ₄γ − J₄‖_max` for an admissible initial condition.
pub const INIT_SYMPLECTIC_TOL: f64 = 1e-8;

/// Relative asymmetry of the quadrature for `B` above which callers should warn.
pub const ASYMMETRY_WARN: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("initial condition is not symplectic (defect {defect:.3e})")]
    NonSymplecticInit { defect: f64 },
    #[error("need at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("integration horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("evaluating A at t = {t}: {source}")]
    Curve {
        t: f64,
        #[source]
        source: ExprError,
    },
}

#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub times: Vec<f64>,
    pub states: Vec<RealMat4>,
    pub eps: f64,
    pub step: f64,
    /// Largest symplectic defect over the grid.
    pub drift: f64,
}

impl FlowSolution {
    pub fn endpoint(&self) -> &RealMat4 {
        self.states.last().expect("a solution has at least three states")
    }

    pub fn conforming(&self, tol: f64) -> bool {
        self.drift <= tol
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }
}

fn eval_a(curve: &SymmetricCurve, t: f64, eps: f64) -> Result<RealMat4, FlowError> {
    curve
        .eval_matrix(t, eps)
        .map_err(|source| FlowError::Curve { t, source })
}

/// Integrates on `[t0, t1]` (either orientation) with `steps` uniform RK4 steps.
pub fn integrate_span(
    curve: &SymmetricCurve,
    init: &RealMat4,
    t0: f64,
    t1: f64,
    steps: usize,
    eps: f64,
) -> Result<FlowSolution, FlowError> {
    if steps < 2 {
        return Err(FlowError::TooFewSteps(steps));
    }
    let span = t1 - t0;
    if !(span.is_finite() && span != 0.0) {
        return Err(FlowError::BadHorizon(span));
    }
    let defect = symplectic_defect(init);
    if !(defect <= INIT_SYMPLECTIC_TOL) {
        return Err(FlowError::NonSymplecticInit { defect });
    }

    let h = span / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(t0);
    states.push(*init);
    let mut gamma = *init;
    let mut drift = defect;
    let mut a_left = eval_a(curve, t0, eps)?;
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let t_next = if k + 1 == steps { t1 } else { t0 + (k + 1) as f64 * h };
        let a_mid = eval_a(curve, t + 0.5 * h, eps)?;
        let a_right = eval_a(curve, t_next, eps)?;
        let f = |a: &RealMat4, g: &RealMat4| a.mul(g).j4_mul();
        let k1 = f(&a_left, &gamma);
        let k2 = f(&a_mid, &gamma.axpy(0.5 * h, &k1));
        let k3 = f(&a_mid, &gamma.axpy(0.5 * h, &k2));
        let k4 = f(&a_right, &gamma.axpy(h, &k3));
        let incr = k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4);
        gamma = gamma.axpy(h / 6.0, &incr);
        drift = drift.max(symplectic_defect(&gamma));
        times.push(t_next);
        states.push(gamma);
        a_left = a_right;
    }
    Ok(FlowSolution {
        times,
        states,
        eps,
        step: h,
        drift,
    })
}

/// Integrates on `[0, T]`, `T > 0`.
pub fn integrate(
    curve: &SymmetricCurve,
    init: &RealMat4,
    horizon: f64,
    steps: usize,
    eps: f64,
) -> Result<FlowSolution, FlowError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(FlowError::BadHorizon(horizon));
    }
    integrate_span(curve, init, 0.0, horizon, steps, eps)
}

/// Integrates from 0 to `t_end`, which may be negative.
pub fn integrate_to(
    curve: &SymmetricCurve,
    init: &RealMat4,
    t_end: f64,
    steps: usize,
    eps: f64,
) -> Result<FlowSolution, FlowError> {
    integrate_span(curve, init, 0.0, t_end, steps, eps)
}

/// `γ(end) − γ(start)` integrated directly as its own ODE, plus the drift
/// of the reconstructed `γ`.
#[derive(Debug, Clone, Copy)]
pub struct Deviation {
    pub base: RealMat4,
    pub delta: RealMat4,
    pub drift: f64,
}

fn check_run(init: &RealMat4, span: f64, steps: usize) -> Result<(), FlowError> {
    if steps < 2 {
        return Err(FlowError::TooFewSteps(steps));
    }
    if !(span.is_finite() && span != 0.0) {
        return Err(FlowError::BadHorizon(span));
    }
    let defect = symplectic_defect(init);
    if !(defect <= INIT_SYMPLECTIC_TOL) {
        return Err(FlowError::NonSymplecticInit { defect });
    }
    Ok(())
}

/// `γ(s) − γ(0)` for `γ' = J₄A(t, 0)γ`, `γ(0) = init`, with `s` of either sign.
/// Solves `δ' = J₄A(t)(init + δ)`, `δ(0) = 0`, so `δ` keeps full relative
/// precision however small `s` is.
pub fn time_deviation(curve: &SymmetricCurve, init: &RealMat4, s: f64, steps: usize) -> Result<Deviation, FlowError> {
    check_run(init, s, steps)?;
    let h = s / steps as f64;
    let mut delta = RealMat4::zero();
    let mut drift = symplectic_defect(init);
    let mut a_left = eval_a(curve, 0.0, 0.0)?;
    let f = |a: &RealMat4, d: &RealMat4| a.mul(&init.add(d)).j4_mul();
    for k in 0..steps {
        let t = k as f64 * h;
        let t_next = if k + 1 == steps { s } else { (k + 1) as f64 * h };
        let a_mid = eval_a(curve, t + 0.5 * h, 0.0)?;
        let a_right = eval_a(curve, t_next, 0.0)?;
        let k1 = f(&a_left, &delta);
        let k2 = f(&a_mid, &delta.axpy(0.5 * h, &k1));
        let k3 = f(&a_mid, &delta.axpy(0.5 * h, &k2));
        let k4 = f(&a_right, &delta.axpy(h, &k3));
        let incr = k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4);
        delta = delta.axpy(h / 6.0, &incr);
        drift = drift.max(symplectic_defect(&init.add(&delta)));
        a_left = a_right;
    }
    Ok(Deviation {
        base: *init,
        delta,
        drift,
    })
}

/// `γ(T, eps) − γ(T, 0)` together with `γ(T, 0)`. The pair `(γ₀, δ)` solves
/// `γ₀' = J₄A(t, 0)γ₀` and `δ' = J₄A(t, eps)δ + J₄(A(t, eps) − A(t, 0))γ₀`.
pub fn eps_deviation(
    curve: &SymmetricCurve,
    init: &RealMat4,
    horizon: f64,
    steps: usize,
    eps: f64,
) -> Result<Deviation, FlowError> {
    if !(horizon > 0.0) {
        return Err(FlowError::BadHorizon(horizon));
    }
    check_run(init, horizon, steps)?;
    let h = horizon / steps as f64;
    let sample = |t: f64| -> Result<(RealMat4, RealMat4, RealMat4), FlowError> {
        let a0 = eval_a(curve, t, 0.0)?;
        let da = curve
            .eps_increment(t, eps)
            .map_err(|source| FlowError::Curve { t, source })?;
        Ok((a0, a0.add(&da), da))
    };
    let f = |(a0, ae, da): &(RealMat4, RealMat4, RealMat4), g: &RealMat4, d: &RealMat4| {
        (a0.mul(g).j4_mul(), ae.mul(d).add(&da.mul(g)).j4_mul())
    };
    let mut gamma = *init;
    let mut delta = RealMat4::zero();
    let mut drift = symplectic_defect(init);
    let mut left = sample(0.0)?;
    for k in 0..steps {
        let t = k as f64 * h;
        let t_next = if k + 1 == steps { horizon } else { (k + 1) as f64 * h };
        let mid = sample(t + 0.5 * h)?;
        let right = sample(t_next)?;
        let (g1, d1) = f(&left, &gamma, &delta);
        let (g2, d2) = f(&mid, &gamma.axpy(0.5 * h, &g1), &delta.axpy(0.5 * h, &d1));
        let (g3, d3) = f(&mid, &gamma.axpy(0.5 * h, &g2), &delta.axpy(0.5 * h, &d2));
        let (g4, d4) = f(&right, &gamma.axpy(h, &g3), &delta.axpy(h, &d3));
        gamma = gamma.axpy(h / 6.0, &g1.add(&g2.scale(2.0)).add(&g3.scale(2.0)).add(&g4));
        delta = delta.axpy(h / 6.0, &d1.add(&d2.scale(2.0)).add(&d3.scale(2.0)).add(&d4));
        drift = drift.max(symplectic_defect(&gamma.add(&delta)));
        left = right;
    }
    Ok(Deviation {
        base: gamma,
        delta,
        drift,
    })
}

/// Composite Simpson weights for `n + 1` equispaced samples with spacing `h`.
/// Odd panel counts close with a 3/8 rule on the last three panels; a single
/// panel falls back to the trapezoid rule.
pub fn simpson_weights(samples: usize, h: f64) -> Vec<f64> {
    let n = samples.saturating_sub(1);
    let mut w = vec![0.0; samples];
    if n == 0 {
        return w;
    }
    if n == 1 {
        w[0] = h / 2.0;
        w[1] = h / 2.0;
        return w;
    }
    let (simpson_panels, tail) = if n.is_multiple_of(2) { (n, false) } else { (n - 3, true) };
    for pair in 0..simpson_panels / 2 {
        let i = 2 * pair;
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if tail {
        let i = n - 3;
        for (k, c) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
            w[i + k] += 3.0 * h / 8.0 * c;
        }
    }
    w
}

#[derive(Debug, Clone)]
pub struct PerturbationHamiltonian {
    /// Symmetrized `B(T, eps)`.
    pub matrix: RealMat4,
    /// `‖B_raw − B_rawᵀ‖_max / max(‖B_raw‖_max, tiny)` before symmetrizing.
    pub asymmetry: f64,
}

impl PerturbationHamiltonian {
    pub fn asymmetry_warning(&self) -> bool {
        self.asymmetry > ASYMMETRY_WARN
    }
}

/// `B(T, eps) = γ(T)⁻ᵀ · ∫₀ᵀ γ(t)ᵀ ∂A/∂eps(t, eps) γ(t) dt · γ(T)⁻¹`, so that
/// `∂γ(T, eps)/∂eps = J₄·B·γ(T, eps)`. Quadrature runs on the grid of `sol`.
pub fn perturbation_hamiltonian(
    curve: &SymmetricCurve,
    sol: &FlowSolution,
) -> Result<PerturbationHamiltonian, FlowError> {
    let weights = simpson_weights(sol.times.len(), sol.step);
    let mut integral = RealMat4::zero();
    for ((&t, gamma), &w) in sol.times.iter().zip(&sol.states).zip(&weights) {
        let da = curve
            .d_eps_matrix_default(t, sol.eps)
            .map_err(|source| FlowError::Curve { t, source })?;
        integral = integral.axpy(w, &gamma.transpose().mul(&da).mul(gamma));
    }
    let inv = sol.endpoint().symplectic_inverse();
    let raw = inv.transpose().mul(&integral).mul(&inv);
    let asym = raw.sub(&raw.transpose()).max_abs();
    let asymmetry = asym / raw.max_abs().max(f64::MIN_POSITIVE);
    let matrix = raw.add(&raw.transpose()).scale(0.5);
    Ok(PerturbationHamiltonian { matrix, asymmetry })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{is_symplectic, RealMat4};

    fn curve(entries: &[((usize, usize), &str)]) -> SymmetricCurve {
        SymmetricCurve::from_entries(entries.iter().copied()).unwrap()
    }

    /// exp(M) by scaling and squaring with a degree-18 Taylor core.
    fn expm(m: &RealMat4) -> RealMat4 {
        let norm = m.max_abs() * 4.0;
        let squarings = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let a = m.scale(0.5f64.powi(squarings as i32));
        let mut term = RealMat4::identity();
        let mut sum = RealMat4::identity();
        for k in 1..=18 {
            term = term.mul(&a).scale(1.0 / k as f64);
            sum = sum.add(&term);
        }
        for _ in 0..squarings {
            sum = sum.mul(&sum);
        }
        sum
    }

    fn smooth_curve() -> SymmetricCurve {
        curve(&[
            ((0, 0), "1 + 0.3*sin(2*t)"),
            ((0, 1), "0.2*cos(t)"),
            ((1, 1), "1"),
            ((1, 3), "0.1*t"),
            ((2, 2), "1 - 0.2*t^2"),
            ((3, 3), "exp(-t)"),
            ((0, 2), "0.5"),
        ])
    }

    #[test]
    fn zero_curve_is_stationary() {
        let g0 = RealMat4::j4();
        let sol = integrate(&curve(&[]), &g0, 2.0, 10, 0.0).unwrap();
        assert!(sol.states.iter().all(|g| *g == g0));
        assert_eq!(sol.drift, 0.0);
        assert_eq!(sol.times.len(), 11);
        assert_eq!(*sol.times.last().unwrap(), 2.0);
    }

    #[test]
    fn constant_hamiltonian_matches_exponential() {
        let c = curve(&[
            ((0, 0), "2"),
            ((0, 1), "0.5"),
            ((1, 1), "1"),
            ((2, 3), "-0.3"),
            ((2, 2), "1.5"),
            ((3, 3), "0.7"),
            ((1, 2), "0.25"),
        ]);
        let a = c.eval_matrix(0.0, 0.0).unwrap();
        let sol = integrate(&c, &RealMat4::identity(), 1.0, 1000, 0.0).unwrap();
        let exact = expm(&a.j4_mul());
        assert!(sol.endpoint().sub(&exact).max_abs() < 1e-8);
        assert!(sol.drift < 1e-8);
        assert_eq!(sol.states[0], RealMat4::identity());
    }

    #[test]
    fn identity_hamiltonian_rotates() {
        let id = curve(&[((0, 0), "1"), ((1, 1), "1"), ((2, 2), "1"), ((3, 3), "1")]);
        let t = 0.8f64;
        let sol = integrate(&id, &RealMat4::identity(), t, 400, 0.0).unwrap();
        // exp(tJ) = cos(t)·Id + sin(t)·J
        let exact = RealMat4::identity().scale(t.cos()).add(&RealMat4::j4().scale(t.sin()));
        assert!(sol.endpoint().sub(&exact).max_abs() < 1e-11);
    }

    #[test]
    fn endpoint_symplectic_within_drift() {
        let sol = integrate(&smooth_curve(), &RealMat4::identity(), 1.5, 300, 0.0).unwrap();
        let tol = (10.0 * sol.drift).max(1e-15);
        assert!(is_symplectic(&sol.endpoint().to_complex(), tol));
        assert!(sol.conforming(1e-8));
    }

    #[test]
    fn semigroup_property() {
        let c = smooth_curve();
        let full = integrate(&c, &RealMat4::identity(), 1.0, 2000, 0.0).unwrap();
        let half = integrate(&c, &RealMat4::identity(), 0.5, 1000, 0.0).unwrap();
        let rest = integrate_span(&c, half.endpoint(), 0.5, 1.0, 1000, 0.0).unwrap();
        assert!(full.endpoint().sub(rest.endpoint()).max_abs() < 1e-8);
    }

    #[test]
    fn fourth_order_convergence() {
        let c = smooth_curve();
        let end = |n| *integrate(&c, &RealMat4::identity(), 2.0, n, 0.0).unwrap().endpoint();
        let (g1, g2, g3) = (end(40), end(80), end(160));
        let ratio = g1.sub(&g2).max_abs() / g2.sub(&g3).max_abs();
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn backward_integration_inverts_forward() {
        let c = smooth_curve();
        let fwd = integrate(&c, &RealMat4::identity(), 0.7, 700, 0.0).unwrap();
        let back = integrate_span(&c, fwd.endpoint(), 0.7, 0.0, 700, 0.0).unwrap();
        assert!(back.endpoint().sub(&RealMat4::identity()).max_abs() < 1e-10);
        let neg = integrate_to(&c, &RealMat4::identity(), -0.3, 300, 0.0).unwrap();
        assert!(neg.step < 0.0);
        assert_eq!(*neg.times.last().unwrap(), -0.3);
    }

    #[test]
    fn precondition_errors() {
        let c = curve(&[]);
        let id = RealMat4::identity();
        assert!(matches!(
            integrate(&c, &id, 1.0, 1, 0.0),
            Err(FlowError::TooFewSteps(1))
        ));
        assert!(matches!(
            integrate(&c, &id, 0.0, 10, 0.0),
            Err(FlowError::BadHorizon(_))
        ));
        assert!(matches!(
            integrate(&c, &id, -1.0, 10, 0.0),
            Err(FlowError::BadHorizon(_))
        ));
        assert!(matches!(
            integrate(&c, &id.scale(2.0), 1.0, 10, 0.0),
            Err(FlowError::NonSymplecticInit { .. })
        ));
        let bad = curve(&[((0, 0), "1/(t - 0.5)")]);
        assert!(matches!(integrate(&bad, &id, 1.0, 4, 0.0), Err(FlowError::Curve { t, .. }) if t == 0.5));
    }

    #[test]
    fn deviations_match_direct_integration() {
        let c = smooth_curve();
        let g0 = RealMat4([
            [1.0, 0.0, 0.4, -0.1],
            [0.0, 1.0, -0.1, 0.2],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]);
        for s in [0.3, -0.2] {
            let direct = integrate_to(&c, &g0, s, 500, 0.0).unwrap();
            let dev = time_deviation(&c, &g0, s, 500).unwrap();
            assert!(dev.delta.sub(&direct.endpoint().sub(&g0)).max_abs() < 1e-13);
        }
        let tiny = time_deviation(&c, &g0, 1e-9, 10).unwrap();
        let expect = c.eval_matrix(0.0, 0.0).unwrap().mul(&g0).j4_mul().scale(1e-9);
        assert!(tiny.delta.sub(&expect).max_abs() < 1e-17);

        let ce = curve(&[
            ((0, 0), "1 + eps*cos(t)"),
            ((1, 1), "1"),
            ((2, 2), "1 + sin(eps)"),
            ((3, 3), "1"),
            ((0, 3), "eps*t"),
        ]);
        let base = integrate(&ce, &g0, 1.0, 400, 0.0).unwrap();
        for eps in [0.05, -1e-3] {
            let pert = integrate(&ce, &g0, 1.0, 400, eps).unwrap();
            let dev = eps_deviation(&ce, &g0, 1.0, 400, eps).unwrap();
            assert!(dev.base.sub(base.endpoint()).max_abs() < 1e-15);
            assert!(dev.delta.sub(&pert.endpoint().sub(base.endpoint())).max_abs() < 1e-13);
        }
        let zero = eps_deviation(&ce, &g0, 1.0, 10, 0.0).unwrap();
        assert_eq!(zero.delta, RealMat4::zero());
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        for samples in [2usize, 3, 4, 5, 6, 9, 10] {
            let n = samples - 1;
            let h = 1.3 / n as f64;
            let w = simpson_weights(samples, h);
            // the single-panel trapezoid is only exact on linear functions
            let degree = if n == 1 { 1 } else { 3 };
            let integral: f64 = w.iter().enumerate().map(|(i, w)| w * (i as f64 * h).powi(degree)).sum();
            let exact = 1.3f64.powi(degree + 1) / (degree + 1) as f64;
            assert!(
                (integral - exact).abs() < 1e-13,
                "samples {samples}: {integral} vs {exact}"
            );
        }
    }

    #[test]
    fn hamiltonian_of_constant_perturbation_about_rest() {
        let c = curve(&[((0, 0), "2*eps"), ((1, 2), "-eps"), ((3, 3), "0.5*eps")]);
        let t = 1.7;
        let sol = integrate(&c, &RealMat4::identity(), t, 50, 0.0).unwrap();
        let b = perturbation_hamiltonian(&c, &sol).unwrap();
        let a1 = c.d_eps_matrix_default(0.0, 0.0).unwrap();
        assert!(b.matrix.sub(&a1.scale(t)).max_abs() < 1e-13);
        assert!(!b.asymmetry_warning());
    }

    #[test]
    fn hamiltonian_generates_eps_derivative_of_endpoint() {
        let c = curve(&[
            ((0, 0), "1 + eps*cos(t)"),
            ((1, 1), "1"),
            ((2, 2), "1 + 0.5*eps"),
            ((3, 3), "1"),
            ((0, 3), "eps*t"),
            ((1, 2), "0.3*sin(t)"),
        ]);
        let (horizon, steps) = (1.0, 2000);
        let base = integrate(&c, &RealMat4::identity(), horizon, steps, 0.0).unwrap();
        let b = perturbation_hamiltonian(&c, &base).unwrap();
        let h = 1e-5;
        let plus = integrate(&c, &RealMat4::identity(), horizon, steps, h).unwrap();
        let minus = integrate(&c, &RealMat4::identity(), horizon, steps, -h).unwrap();
        let dgamma = plus.endpoint().sub(minus.endpoint()).scale(0.5 / h);
        // B = −J₄ · ∂γ/∂eps · γ⁻¹
        let fd = dgamma.mul(&base.endpoint().symplectic_inverse()).j4_mul().scale(-1.0);
        assert!(b.matrix.sub(&fd).max_abs() < 1e-8, "{:?}\n{:?}", b.matrix, fd);
        assert!(b.asymmetry < 1e-9);
    }

    #[test]
    fn hamiltonian_is_independent_of_initial_symplectic_frame() {
        let c = curve(&[((0, 0), "1 + eps"), ((1, 1), "1"), ((2, 2), "1"), ((3, 3), "1 + eps*t")]);
        let frame = RealMat4([
            [1.0, 0.0, 0.3, 0.2],
            [0.0, 1.0, 0.2, -0.5],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]);
        assert!(symplectic_defect(&frame) < 1e-15);
        let from_id = integrate(&c, &RealMat4::identity(), 1.0, 400, 0.0).unwrap();
        let from_frame = integrate(&c, &frame, 1.0, 400, 0.0).unwrap();
        let b1 = perturbation_hamiltonian(&c, &from_id).unwrap();
        let b2 = perturbation_hamiltonian(&c, &from_frame).unwrap();
        assert!(b1.matrix.sub(&b2.matrix).max_abs() < 1e-12);
    }
}
