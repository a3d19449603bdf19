//! Browser bindings for the phasespace engine: three interactive
//! operations behind `wasm-bindgen`, each returning a JSON string so the
//! page stays framework-free. The same functions run natively, which is
//! how they are tested.

use phasespace::diffop::generator_of;
use phasespace::expr::{parse_expression, Bindings};
use phasespace::hierarchy::{
    build_ode_system, classify_hamiltonian, closure_report, find_witness_state,
};
use phasespace::poly::{PhasePolynomial, Var};
use phasespace::quantize::{evolve_many, quadrature_cumulants, weyl_quantize, FockState};
use phasespace::rational::{rat, Rat};
use phasespace::{AlgebraContext, SCHEMA_VERSION};
use wasm_bindgen::prelude::*;

fn err_json(e: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": format!("{e}") }).to_string()
}

fn context(hbar_num: i64, hbar_den: i64) -> Result<AlgebraContext, String> {
    if hbar_den == 0 {
        return Err("hbar denominator must be nonzero".into());
    }
    AlgebraContext::with_hbar(1, Rat::new(hbar_num.into(), hbar_den.into()))
        .map_err(|e| e.to_string())
}

/// Classify a Hamiltonian expression: degree, generator order, hierarchy
/// verdict, closure witness and a concrete witness state when breaking.
#[wasm_bindgen]
pub fn classify(expr: &str, hbar_num: i64, hbar_den: i64) -> String {
    let ctx = match context(hbar_num, hbar_den) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let h = match parse_expression(expr, &ctx, &Bindings::new()) {
        Ok(h) => h,
        Err(e) => return err_json(e),
    };
    let cls = match classify_hamiltonian(&h) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let witness = if cls.degree >= 3 {
        match find_witness_state(&h) {
            Ok(w) => serde_json::json!({
                "state": format!("{}", w.state),
                "moment": w.moment.name(ctx.modes()),
                "derivative": format!("{}", w.derivative),
            }),
            Err(e) => serde_json::json!({ "error": format!("{e}") }),
        }
    } else {
        serde_json::Value::Null
    };
    serde_json::json!({
        "schema": SCHEMA_VERSION,
        "input": format!("{h}"),
        "degree": cls.degree,
        "generator_order": cls.generator_order,
        "hierarchy_preserving": cls.hierarchy_preserving,
        "closed_at_two": cls.closure.closed_at_two,
        "closure_witness": cls.closure.witness_equation.map(|(l, t)| {
            format!("d{}/dt couples to {}", l.name(ctx.modes()), t.name(ctx.modes()))
        }),
        "maximality": cls.maximality_witness.map(|w| {
            format!("{{H, {}}} = {}", w.probe, w.bracket)
        }),
        "witness": witness,
    })
    .to_string()
}

/// Synthesize the moment ODE system up to `max_order` and return it as
/// preformatted equation lines plus the closure verdict.
#[wasm_bindgen]
pub fn moment_system(expr: &str, max_order: u32, hbar_num: i64, hbar_den: i64) -> String {
    let ctx = match context(hbar_num, hbar_den) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let h = match parse_expression(expr, &ctx, &Bindings::new()) {
        Ok(h) => h,
        Err(e) => return err_json(e),
    };
    let op = match generator_of(&h) {
        Ok(op) => op,
        Err(e) => return err_json(e),
    };
    let sys = match build_ode_system(&op, max_order.clamp(1, 4)) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let closure = match closure_report(&sys) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let mut lines = Vec::new();
    for (lhs, rhs) in &sys.equations {
        let rhs_text = if rhs.is_empty() {
            "0".to_string()
        } else {
            rhs.iter()
                .map(|(c, m)| format!("{} {}", c, m.name(ctx.modes())))
                .collect::<Vec<_>>()
                .join(" + ")
        };
        lines.push(format!("d{}/dt = {}", lhs.name(ctx.modes()), rhs_text));
    }
    serde_json::json!({
        "schema": SCHEMA_VERSION,
        "generator": format!("{op}"),
        "generator_order": sys.generator_order,
        "closed_at_two": closure.closed_at_two,
        "equations": lines,
    })
    .to_string()
}

/// Evolve the vacuum on the Fock oracle and return (t, m2, m4) arrays of
/// one quadrature for plotting. `kind` selects the flow: "cubic" drives
/// `gamma x^3` and tracks the p-quadrature; "squeeze" drives `x p` and
/// tracks x; "rotate" drives `(x^2+p^2)/2`.
#[wasm_bindgen]
pub fn trajectory(kind: &str, param: f64, tmax: f64, steps: usize, cutoff: usize) -> String {
    let ctx = AlgebraContext::new(1).unwrap();
    let steps = steps.clamp(2, 201);
    let cutoff = cutoff.clamp(16, 96);
    if !(param.is_finite() && tmax.is_finite()) || tmax <= 0.0 {
        return err_json("parameters must be finite and tmax positive");
    }
    let scaled = |v: f64| -> Rat {
        let denom = 1_000_000i64;
        rat((v * denom as f64).round() as i64, denom)
    };
    let (h, axis) = match kind {
        "cubic" => (
            PhasePolynomial::x(&ctx).pow(3).scale_rat(&scaled(param)),
            Var::P(0),
        ),
        "squeeze" => (
            PhasePolynomial::x(&ctx)
                .mul(&PhasePolynomial::p(&ctx))
                .unwrap()
                .scale_rat(&scaled(param)),
            Var::X(0),
        ),
        "rotate" => (
            PhasePolynomial::x(&ctx)
                .pow(2)
                .add(&PhasePolynomial::p(&ctx).pow(2))
                .unwrap()
                .scale_rat(&(scaled(param) / Rat::from_integer(2.into()))),
            Var::X(0),
        ),
        other => return err_json(format!("unknown trajectory kind {other:?}")),
    };
    let op = match weyl_quantize(&h, cutoff) {
        Ok(op) => op,
        Err(e) => return err_json(e),
    };
    let times: Vec<f64> = (0..steps)
        .map(|k| tmax * k as f64 / (steps - 1) as f64)
        .collect();
    let states = match evolve_many(&FockState::vacuum(cutoff), &op, &times) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let mut m2 = Vec::with_capacity(steps);
    let mut m4 = Vec::with_capacity(steps);
    for s in &states {
        match quadrature_cumulants(s, axis, 4, &ctx) {
            Ok(cv) => {
                m2.push(cv.kappa(2));
                m4.push(cv.m4().unwrap_or(f64::NAN));
            }
            Err(e) => return err_json(e),
        }
    }
    serde_json::json!({
        "schema": SCHEMA_VERSION,
        "kind": kind,
        "hamiltonian": format!("{h}"),
        "axis": match axis { Var::X(_) => "x", Var::P(_) => "p" },
        "t": times,
        "m2": m2,
        "m4": m4,
    })
    .to_string()
}

/// Poisson or Moyal bracket of two expressions, printed canonically.
#[wasm_bindgen]
pub fn bracket(expr1: &str, expr2: &str, moyal: bool, hbar_num: i64, hbar_den: i64) -> String {
    let ctx = match context(hbar_num, hbar_den) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let b = Bindings::new();
    let f = match parse_expression(expr1, &ctx, &b) {
        Ok(f) => f,
        Err(e) => return err_json(e),
    };
    let g = match parse_expression(expr2, &ctx, &b) {
        Ok(g) => g,
        Err(e) => return err_json(e),
    };
    let out = if moyal {
        f.moyal_bracket(&g)
    } else {
        f.poisson_bracket(&g)
    };
    match out {
        Ok(v) => serde_json::json!({
            "schema": SCHEMA_VERSION,
            "bracket": format!("{v}"),
        })
        .to_string(),
        Err(e) => err_json(e),
    }
}
