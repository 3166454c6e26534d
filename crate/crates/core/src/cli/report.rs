//! JSON and CSV renderings. Complex numbers are `{"re": …, "im": …}`.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::matrix::{ComplexVec4, RealMat4};
use crate::pipeline::{Analysis, Problem};
use crate::verify::{BranchTrack, DichotomyCheck, Family, GridSpec, ModeReport, OracleReport, SideProbe, VerifyError};

fn cx(z: Complex64) -> Value {
    json!({"re": z.re, "im": z.im})
}

fn cxs(zs: &[Complex64]) -> Value {
    Value::Array(zs.iter().copied().map(cx).collect())
}

fn vec4(v: &ComplexVec4) -> Value {
    cxs(&v.0)
}

fn mat(m: &RealMat4) -> Value {
    json!(m.0)
}

fn named(pairs: &[(&str, f64)]) -> Value {
    Value::Object(
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect::<Map<_, _>>(),
    )
}

fn grid(g: &GridSpec) -> Value {
    json!({"min": g.min, "max": g.max, "count": g.count, "log": g.log})
}

pub(super) fn analysis(problem: &Problem, a: &Analysis) -> Value {
    let c = &a.coeffs;
    let pair = &a.pair;
    let verdict = match &a.verdict {
        Ok(v) => json!({
            "verdict": v.stability.label(),
            "kappa": v.kappa,
            "unstable_direction": v.stability.unstable_direction(),
        }),
        Err(e) => json!({"verdict": "inconclusive", "kappa": c.kappa, "reason": e.to_string()}),
    };
    let diagnostics = pair.diagnostics.as_ref().map(|d| {
        json!({
            "singular_values": d.singular_values,
            "chain_residual": d.chain_residual,
            "orthogonality": named(&d.orthogonality),
            "k_action_residual": d.k_action_residual,
        })
    });
    let flow = a.flow.map(|f| {
        json!({
            "T": f.horizon,
            "steps": f.steps,
            "drift": f.drift,
            "conforming": f.conforming,
            "asymmetry": f.asymmetry,
            "asymmetry_warning": f.asymmetry_warning,
        })
    });
    json!({
        "name": problem.name,
        "mode": a.mode.label(),
        "lambda0": cx(pair.lambda0),
        "eta1": vec4(&pair.eta1),
        "eta2": vec4(&pair.eta2),
        "forms": {
            "eta2_J_eta1": cx(pair.form_21),
            "eta1_J_eta2": cx(pair.form_12),
            "eta2_J_eta2": cx(pair.form_22),
        },
        "kappa": c.kappa,
        "kappa_imag_residue": c.kappa_imag_residue,
        "numerator": cx(c.numerator),
        "a": cx(c.a),
        "a_squared": cx(c.a_squared),
        "bracket_terms": cxs(&c.bracket_terms),
        "bracket": cx(c.bracket),
        "second_order": cx(c.second_order),
        "sum_derivative": cx(c.sum_derivative),
        "stability": verdict,
        "ladder": {
            "c": cxs(&a.ladder.c),
            "c31": cx(a.ladder.c31),
            "c21": cx(a.ladder.c21),
            "a_squared": cx(a.ladder.a_squared),
            "second_order": cx(a.ladder.second_order()),
        },
        "base": mat(&a.base),
        "hamiltonian": mat(&a.hamiltonian),
        "flow": flow,
        "jordan_diagnostics": diagnostics,
    })
}

fn probe(p: &SideProbe) -> Value {
    json!({
        "s": p.s,
        "eigenvalues": cxs(&p.eigenvalues),
        "modulus_excess": p.modulus_excess,
        "circle_deviation": p.circle_deviation,
        "min_separation": p.min_separation,
    })
}

fn dichotomy(r: &DichotomyCheck) -> Value {
    json!({
        "forward": probe(&r.forward),
        "backward": probe(&r.backward),
        "off_circle_threshold": r.off_circle,
        "on_circle_tolerance": r.on_circle,
        "separation_threshold": r.separation,
        "unstable_side_leaves_circle": r.unstable_side_leaves_circle,
        "stable_side_on_circle_distinct": r.stable_side_on_circle_distinct,
        "passed": r.passed(),
    })
}

fn mode_report(m: &ModeReport) -> Value {
    let c = &m.predicted.coeffs;
    let d = &m.diagnostics;
    json!({
        "mode": m.mode.label(),
        "grid": grid(&m.grid),
        "lambda0": cx(c.lambda0),
        "kappa_predicted": c.kappa,
        "kappa_empirical": m.kappa_empirical,
        "kappa_from_sum": m.kappa_from_sum,
        "a_squared_predicted": cx(c.a_squared),
        "a_squared_empirical": cx(m.a_squared_empirical),
        "sum_derivative_predicted": cx(c.sum_derivative),
        "sum_derivative_empirical": cx(m.sum_derivative_empirical),
        "second_order_predicted": cx(c.second_order),
        "relative_errors": named(&m.relative_errors.named()),
        "fit": {
            "a_ls": cx(m.fit.a_ls),
            "mu_ls": cx(m.fit.mu_ls),
            "a_extrapolated": cx(m.fit.a_extrapolated),
            "mu_sum": cx(m.fit.mu_sum),
        },
        "diagnostics": {
            "sqrt_ratio": d.sqrt_ratio,
            "quotient_growth": d.quotient_growth,
            "quotient_point": d.quotient_point,
            "sum_slope_halved": cx(d.sum_slope_halved),
            "sum_slope_change": d.sum_slope_change,
            "quartet_mirror": d.quartet_mirror,
            "max_residual": d.max_residual,
            "max_drift": d.max_drift,
        },
        "dichotomy": dichotomy(&m.dichotomy),
    })
}

pub(super) fn oracle(r: &OracleReport, tol: f64) -> Value {
    json!({
        "name": r.name,
        "tolerance": tol,
        "max_relative_error": r.max_relative_error(),
        "passed": r.max_relative_error() <= tol,
        "modes": r.modes.iter().map(mode_report).collect::<Vec<_>>(),
        "skipped": r.skipped.iter().map(|(m, why)| json!({"mode": m.label(), "reason": why})).collect::<Vec<_>>(),
    })
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub(super) fn write_track_csv(path: &Path, t: &BranchTrack) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "s",
        "branch1_re",
        "branch1_im",
        "branch2_re",
        "branch2_im",
        "residual1",
        "residual2",
    ])?;
    for k in 0..t.len() {
        let (b1, b2, r) = (t.branch1[k], t.branch2[k], t.residuals[k]);
        w.write_record([t.grid[k], b1.re, b1.im, b2.re, b2.im, r[0], r[1]].map(num))?;
    }
    w.flush()?;
    Ok(())
}

/// Eigenvalues at each grid point, ordered by argument and then modulus.
pub(super) fn sweep_rows(
    family: &Family,
    grid: &[f64],
    center: Complex64,
) -> Result<Vec<(f64, [Complex64; 4])>, VerifyError> {
    use rayon::prelude::*;
    grid.par_iter()
        .map(|&s| {
            let mut ev = family.eigenvalues(s, center)?;
            ev.sort_by(|x, y| x.arg().total_cmp(&y.arg()).then(x.norm().total_cmp(&y.norm())));
            Ok((s, ev))
        })
        .collect()
}

pub(super) fn write_sweep_csv<W: Write>(out: W, rows: &[(f64, [Complex64; 4])]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["s".to_string()];
    for k in 1..=4 {
        header.push(format!("lambda{k}_re"));
        header.push(format!("lambda{k}_im"));
    }
    header.extend((1..=4).map(|k| format!("modulus{k}")));
    w.write_record(&header)?;
    for (s, ev) in rows {
        let mut rec = vec![num(*s)];
        for z in ev {
            rec.push(num(z.re));
            rec.push(num(z.im));
        }
        rec.extend(ev.iter().map(|z| num(z.norm())));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
