//! Command-line frontend: parse Hamiltonian/jump expressions, dispatch to
//! the engine, and emit human-readable tables plus machine-readable
//! JSON/CSV.
//!
//! Exit codes: 0 success, 2 usage/parse errors, 3 resource exhaustion
//! (Fock cutoffs), 1 internal errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use phasespace::diffop::generator_of;
use phasespace::expr::{parse_expression, Bindings};
use phasespace::hierarchy::{
    build_ode_system, classify_hamiltonian, closure_report, find_witness_state, MomentIndex,
};
use phasespace::lindblad::{open_moment_system, LindbladSpec};
use phasespace::poly::{Multi, PhasePolynomial, Var};
use phasespace::quantize::{
    evolve_many, quadrature_cumulants, weyl_quantize, wigner_moment, FockState,
};
use phasespace::rational::Rat;
use phasespace::sampling::{rigidity_experiment, sample_husimi_labeled};
use phasespace::symplectic::{algebra_closure_check, evolve_gaussian, quadratic_to_matrix, GaussianState};
use phasespace::{AlgebraContext, PhaseError, SCHEMA_VERSION};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "phasespace",
    about = "Exact phase-space dynamics: moment hierarchies, Fock oracles, heterodyne sampling",
    long_about = "Expressions use commuting Weyl symbols over x_k, p_k with rational and \
                  imaginary literals, e.g. \"x^2 + p^2\", \"g*x^3\", \"(x*p + p*x)/2\". Ladder \
                  aliases a_k = (x_k + i p_k)/sqrt(2 hbar) are available when 2*hbar is a \
                  perfect rational square. Note the symbol/operator distinction: the DSL \
                  product ad*a is the symbol |alpha|^2, whose Weyl quantization is n + 1/2; \
                  the Weyl symbol of the operator adag a is ad*a - 1/2."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Number of modes N.
    #[arg(long, default_value_t = 1)]
    modes: usize,
    /// Exact rational hbar, e.g. 1, 1/2, 2/3.
    #[arg(long, default_value = "1")]
    hbar: String,
    /// Named rational parameter bindings, e.g. -P g=1/10 (repeatable).
    #[arg(short = 'P', long = "param", value_name = "NAME=RATIONAL")]
    params: Vec<String>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write output to a file (atomically) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a Hamiltonian symbol: hierarchy preservation, generator
    /// order, closure report and witnesses.
    Classify {
        expr: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Synthesize the moment ODE system of a Hamiltonian generator.
    Moments {
        expr: String,
        /// Synthesize equations for all moments up to this order.
        #[arg(long, default_value_t = 2)]
        max_order: u32,
        /// Optional jump symbols "rate:expr" for open dynamics (repeatable).
        #[arg(long = "jump", value_name = "RATE:EXPR")]
        jumps: Vec<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Evolve a state on the Fock oracle and emit moment/cumulant columns.
    Simulate {
        expr: String,
        /// Initial state: vacuum | coherent:re[,im] | fock:n | squeezed:r.
        #[arg(long, default_value = "vacuum")]
        state: String,
        /// Final time of the uniform grid.
        #[arg(long, default_value_t = 1.0)]
        tmax: f64,
        /// Number of grid points (t = 0 included).
        #[arg(long, default_value_t = 11)]
        steps: usize,
        /// Fock cutoff.
        #[arg(long, default_value_t = 64)]
        cutoff: usize,
        /// Quadrature axis for the cumulant columns.
        #[arg(long, default_value = "p")]
        axis: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Draw heterodyne (Husimi) samples from a state.
    Sample {
        /// State: vacuum | coherent:re[,im] | fock:n | squeezed:r.
        #[arg(long, default_value = "vacuum")]
        state: String,
        #[arg(short = 'n', long, default_value_t = 10000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        cutoff: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the sampled rigidity experiment (cubic arm + squeezing control).
    Experiment {
        /// Comma-separated gamma grid for the cubic arm.
        #[arg(long, default_value = "0.02,0.04,0.06,0.08")]
        gammas: String,
        /// Comma-separated r grid for the squeezing control arm.
        #[arg(long, default_value = "0.2,0.5,0.8")]
        rs: String,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(short = 'n', long, default_value_t = 100000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Check a family of symbols for closure under the Poisson bracket.
    Algebra {
        exprs: Vec<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Print a Poisson or Moyal bracket.
    Bracket {
        expr1: String,
        expr2: String,
        #[arg(long, value_enum, default_value_t = BracketKind::Poisson)]
        kind: BracketKind,
        #[command(flatten)]
        common: CommonOpts,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum BracketKind {
    Poisson,
    Moyal,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &PhaseError) -> u8 {
    match err {
        PhaseError::Parse { .. }
        | PhaseError::NonSquareHbar { .. }
        | PhaseError::Precondition(_)
        | PhaseError::InsufficientSamples { .. }
        | PhaseError::DegreeTooHigh { .. }
        | PhaseError::InvalidContext(_)
        | PhaseError::ContextMismatch(_)
        | PhaseError::NonRealCoefficients(_) => 2,
        PhaseError::CutoffTooSmall { .. } | PhaseError::CutoffCapExceeded { .. } => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<(), PhaseError> {
    match cli.command {
        Command::Classify { expr, common } => {
            let (ctx, bindings) = context_of(&common)?;
            let h = parse_expression(&expr, &ctx, &bindings)?;
            let out = cmd_classify(&h)?;
            emit(&common, &render(&common, &out, None))
        }
        Command::Moments {
            expr,
            max_order,
            jumps,
            common,
        } => {
            let (ctx, bindings) = context_of(&common)?;
            let h = parse_expression(&expr, &ctx, &bindings)?;
            let out = cmd_moments(&h, &jumps, max_order, &ctx, &bindings)?;
            emit(&common, &render(&common, &out, None))
        }
        Command::Simulate {
            expr,
            state,
            tmax,
            steps,
            cutoff,
            axis,
            common,
        } => {
            let (ctx, bindings) = context_of(&common)?;
            let h = parse_expression(&expr, &ctx, &bindings)?;
            let csv = cmd_simulate(&h, &state, tmax, steps, cutoff, &axis, &ctx)?;
            emit(&common, &csv)
        }
        Command::Sample {
            state,
            count,
            seed,
            cutoff,
            common,
        } => {
            let (ctx, _) = context_of(&common)?;
            let st = parse_state(&state, cutoff, &ctx)?;
            let batch = sample_husimi_labeled(&st, count, seed, &state)?;
            emit(&common, &batch.to_csv())
        }
        Command::Experiment {
            gammas,
            rs,
            t,
            count,
            seed,
            common,
        } => {
            let (ctx, _) = context_of(&common)?;
            let gamma_grid = parse_grid(&gammas)?;
            let r_grid = parse_grid(&rs)?;
            let rep = rigidity_experiment(&ctx, &gamma_grid, &r_grid, t, count, seed)?;
            let content = if common.format == Format::Csv {
                // long-form sweep table
                let mut csv = String::from("param,t,name,value\n");
                for (arm, points) in [("", &rep.arms), ("control_", &rep.control)] {
                    for p in points.iter() {
                        for (name, v) in [
                            ("dm2", p.dm2),
                            ("dm2_err", p.dm2_err),
                            ("dm4", p.dm4),
                            ("dm4_err", p.dm4_err),
                        ] {
                            csv.push_str(&format!("{},{},{arm}{name},{v}\n", p.param, rep.t));
                        }
                    }
                }
                csv.push_str(&format!("0,{},fit_slope,{}\n", rep.t, rep.fit.slope));
                csv.push_str(&format!("0,{},fit_r2,{}\n", rep.t, rep.fit.r2));
                csv
            } else {
                let json = serde_json::to_value(&rep).expect("report serializes");
                format!("{:#}\n", json)
            };
            emit(&common, &content)
        }
        Command::Algebra { exprs, common } => {
            let (ctx, bindings) = context_of(&common)?;
            let basis: Result<Vec<PhasePolynomial>, PhaseError> = exprs
                .iter()
                .map(|e| parse_expression(e, &ctx, &bindings))
                .collect();
            let basis = basis?;
            let out = cmd_algebra(&basis)?;
            emit(&common, &render(&common, &out, Some(&algebra_text(&basis, &out))))
        }
        Command::Bracket {
            expr1,
            expr2,
            kind,
            common,
        } => {
            let (ctx, bindings) = context_of(&common)?;
            let f = parse_expression(&expr1, &ctx, &bindings)?;
            let g = parse_expression(&expr2, &ctx, &bindings)?;
            let b = match kind {
                BracketKind::Poisson => f.poisson_bracket(&g)?,
                BracketKind::Moyal => f.moyal_bracket(&g)?,
            };
            let out = serde_json::json!({
                "schema": SCHEMA_VERSION,
                "kind": match kind { BracketKind::Poisson => "poisson", BracketKind::Moyal => "moyal" },
                "bracket": format!("{b}"),
                "terms": b.to_json()["terms"],
            });
            emit(&common, &render(&common, &out, Some(&format!("{b}\n"))))
        }
    }
}

fn context_of(common: &CommonOpts) -> Result<(AlgebraContext, Bindings), PhaseError> {
    let hbar = parse_rational(&common.hbar)?;
    let ctx = AlgebraContext::with_hbar(common.modes, hbar)?;
    let mut bindings = Bindings::new();
    for spec in &common.params {
        let (name, value) = spec.split_once('=').ok_or_else(|| PhaseError::Parse {
            position: 0,
            message: format!("parameter {spec:?} is not NAME=RATIONAL"),
        })?;
        bindings.insert(name.trim().to_string(), parse_rational(value)?);
    }
    Ok((ctx, bindings))
}

fn parse_rational(text: &str) -> Result<Rat, PhaseError> {
    let bad = || PhaseError::Parse {
        position: 0,
        message: format!("bad rational literal {text:?}"),
    };
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let n = i64::from_str(num.trim()).map_err(|_| bad())?;
        let d = i64::from_str(den.trim()).map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        Ok(Rat::new(n.into(), d.into()))
    } else if let Ok(n) = i64::from_str(text) {
        Ok(Rat::from_integer(n.into()))
    } else {
        // accept simple decimals
        let v = f64::from_str(text).map_err(|_| bad())?;
        let denom = 1_000_000i64;
        Ok(Rat::new(((v * denom as f64).round() as i64).into(), denom.into()))
    }
}

fn parse_grid(text: &str) -> Result<Vec<f64>, PhaseError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            f64::from_str(s.trim()).map_err(|_| PhaseError::Parse {
                position: 0,
                message: format!("bad grid value {s:?}"),
            })
        })
        .collect()
}

fn parse_axis(axis: &str) -> Result<Var, PhaseError> {
    match axis {
        "x" | "x1" => Ok(Var::X(0)),
        "p" | "p1" => Ok(Var::P(0)),
        other => Err(PhaseError::Parse {
            position: 0,
            message: format!("unknown axis {other:?} (use x or p)"),
        }),
    }
}

fn parse_state(spec: &str, cutoff: usize, ctx: &AlgebraContext) -> Result<FockState, PhaseError> {
    let bad = |msg: String| PhaseError::Parse {
        position: 0,
        message: msg,
    };
    if spec == "vacuum" {
        return Ok(FockState::vacuum(cutoff));
    }
    if let Some(rest) = spec.strip_prefix("coherent:") {
        let mut parts = rest.split(',');
        let re = f64::from_str(parts.next().unwrap_or("").trim())
            .map_err(|_| bad(format!("bad coherent amplitude in {spec:?}")))?;
        let im = match parts.next() {
            Some(s) => f64::from_str(s.trim())
                .map_err(|_| bad(format!("bad coherent amplitude in {spec:?}")))?,
            None => 0.0,
        };
        return Ok(FockState::coherent(phasespace::linalg::C64::new(re, im), cutoff));
    }
    if let Some(rest) = spec.strip_prefix("fock:") {
        let n = usize::from_str(rest.trim())
            .map_err(|_| bad(format!("bad Fock level in {spec:?}")))?;
        return FockState::fock(n, cutoff);
    }
    if let Some(rest) = spec.strip_prefix("squeezed:") {
        let r = f64::from_str(rest.trim())
            .map_err(|_| bad(format!("bad squeezing parameter in {spec:?}")))?;
        let h = PhasePolynomial::x(ctx).mul(&PhasePolynomial::p(ctx))?;
        let op = weyl_quantize(&h, cutoff)?;
        return Ok(evolve_many(&FockState::vacuum(cutoff), &op, &[r])?.pop().unwrap());
    }
    Err(bad(format!(
        "unknown state {spec:?} (vacuum | coherent:re[,im] | fock:n | squeezed:r)"
    )))
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

fn cmd_classify(h: &PhasePolynomial) -> Result<serde_json::Value, PhaseError> {
    let cls = classify_hamiltonian(h)?;
    let witness = if h.degree() >= 3 {
        let w = find_witness_state(h)?;
        serde_json::json!({
            "state": format!("{}", w.state),
            "moment": w.moment.0.0,
            "derivative": format!("{}", w.derivative),
        })
    } else {
        serde_json::Value::Null
    };
    let maximality = cls.maximality_witness.as_ref().map(|w| {
        serde_json::json!({
            "probe": format!("{}", w.probe),
            "bracket": format!("{}", w.bracket),
            "bracket_degree": w.bracket.degree(),
        })
    });
    Ok(serde_json::json!({
        "schema": SCHEMA_VERSION,
        "degree": cls.degree,
        "generator_order": cls.generator_order,
        "hierarchy_preserving": cls.hierarchy_preserving,
        "closed_at_two": cls.closure.closed_at_two,
        "closure_witness": cls.closure.witness_equation.as_ref().map(|(l, t)| {
            serde_json::json!({ "lhs": l.0.0, "target": t.0.0 })
        }),
        "maximality_witness": maximality,
        "witness": witness,
    }))
}

fn cmd_moments(
    h: &PhasePolynomial,
    jumps: &[String],
    max_order: u32,
    ctx: &AlgebraContext,
    bindings: &Bindings,
) -> Result<serde_json::Value, PhaseError> {
    let sys = if jumps.is_empty() {
        build_ode_system(&generator_of(h)?, max_order)?
    } else {
        let mut parsed = Vec::new();
        for j in jumps {
            let (rate, expr) = j.split_once(':').ok_or_else(|| PhaseError::Parse {
                position: 0,
                message: format!("jump {j:?} is not RATE:EXPR"),
            })?;
            parsed.push((parse_rational(rate)?, parse_expression(expr, ctx, bindings)?));
        }
        let spec = LindbladSpec::new(h.clone(), parsed)?;
        open_moment_system(&spec, max_order)?
    };
    let closure = closure_report(&sys)?;
    let mut json = sys.to_json();
    json["schema"] = serde_json::json!(SCHEMA_VERSION);
    json["closed_at_two"] = serde_json::json!(closure.closed_at_two);
    json["closure_witness"] = closure
        .witness_equation
        .as_ref()
        .map(|(l, t)| serde_json::json!({ "lhs": l.0.0, "target": t.0.0 }))
        .unwrap_or(serde_json::Value::Null);
    Ok(json)
}

fn moments_text(json: &serde_json::Value, ctx: &AlgebraContext) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "generator order {}; closed at order 2: {}\n",
        json["generator_order"], json["closed_at_two"]
    ));
    if let Some(eqs) = json["equations"].as_array() {
        for eq in eqs {
            let lhs: Vec<u32> = eq["lhs"]
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_u64().unwrap() as u32)
                .collect();
            let name = MomentIndex(Multi(lhs)).name(ctx.modes());
            let rhs = eq["rhs"].as_array().unwrap();
            let mut terms = Vec::new();
            for t in rhs {
                let c = t[0].as_array().unwrap();
                // coefficient parts may be numbers or (rarely) big-int
                // strings; render faithfully either way
                let part = |v: &serde_json::Value| -> String {
                    v.as_i64()
                        .map(|n| n.to_string())
                        .unwrap_or_else(|| v.as_str().unwrap_or("?").to_string())
                };
                let (nr, dr) = (part(&c[0]), part(&c[1]));
                let (ni, di) = (part(&c[2]), part(&c[3]));
                let target: Vec<u32> = t[1]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|v| v.as_u64().unwrap() as u32)
                    .collect();
                let tname = MomentIndex(Multi(target)).name(ctx.modes());
                let mut coeff = if dr == "1" { nr } else { format!("{nr}/{dr}") };
                if ni != "0" {
                    let imag = if di == "1" { ni } else { format!("{ni}/{di}") };
                    coeff = format!("({coeff}+{imag}i)");
                }
                terms.push(format!("{coeff} {tname}"));
            }
            let rhs_text = if terms.is_empty() {
                "0".to_string()
            } else {
                terms.join(" + ")
            };
            out.push_str(&format!("d{name}/dt = {rhs_text}\n"));
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    h: &PhasePolynomial,
    state: &str,
    tmax: f64,
    steps: usize,
    cutoff: usize,
    axis: &str,
    ctx: &AlgebraContext,
) -> Result<String, PhaseError> {
    if ctx.modes() != 1 {
        return Err(PhaseError::Precondition(
            "simulate is single-mode; use the library API for two-mode runs".into(),
        ));
    }
    let axis = parse_axis(axis)?;
    let axis_name = match axis {
        Var::X(_) => "x",
        Var::P(_) => "p",
    };
    let init = parse_state(state, cutoff, ctx)?;
    let op = weyl_quantize(h, cutoff)?;
    let times: Vec<f64> = if steps <= 1 {
        vec![0.0]
    } else {
        (0..steps)
            .map(|k| tmax * k as f64 / (steps - 1) as f64)
            .collect()
    };
    let states = evolve_many(&init, &op, &times)?;
    // optional Gaussian-propagator comparison for quadratic Hamiltonians
    // from Gaussian initial states (vacuum or coherent)
    let gaussian_init = if state == "vacuum" {
        Some(GaussianState::vacuum(ctx))
    } else if let Some(rest) = state.strip_prefix("coherent:") {
        let mut parts = rest.split(',');
        let re: f64 = parts.next().unwrap_or("0").trim().parse().unwrap_or(0.0);
        let im: f64 = parts
            .next()
            .map(|s| s.trim().parse().unwrap_or(0.0))
            .unwrap_or(0.0);
        let mut g = GaussianState::vacuum(ctx);
        let scale = (2.0 * ctx.hbar_f64()).sqrt();
        g.mean[0] = scale * re;
        g.mean[1] = scale * im;
        Some(g)
    } else {
        None
    };
    let gaussian = match (h.degree() <= 2, gaussian_init) {
        (true, Some(g)) => Some((quadratic_to_matrix(h)?, g)),
        _ => None,
    };
    let mut csv = String::from("t,M_x,M_p,M_x2,M_xp,M_p2");
    csv.push_str(&format!(",m2_{axis_name},m3_{axis_name},m4_{axis_name}"));
    if gaussian.is_some() {
        csv.push_str(&format!(",gauss_m2_{axis_name}"));
    }
    csv.push('\n');
    let indices = [
        Multi(vec![1, 0]),
        Multi(vec![0, 1]),
        Multi(vec![2, 0]),
        Multi(vec![1, 1]),
        Multi(vec![0, 2]),
    ];
    for (t, s) in times.iter().zip(&states) {
        csv.push_str(&format!("{t}"));
        for idx in &indices {
            let v = wigner_moment(s, &MomentIndex(idx.clone()), ctx)?;
            csv.push_str(&format!(",{v}"));
        }
        let cv = quadrature_cumulants(s, axis, 4, ctx)?;
        csv.push_str(&format!(
            ",{},{},{}",
            cv.kappa(2),
            cv.m3().unwrap_or(f64::NAN),
            cv.m4().unwrap_or(f64::NAN)
        ));
        if let Some((gen, init)) = &gaussian {
            let gs = evolve_gaussian(init, gen, *t, ctx)?;
            let i = axis.flat(ctx.modes());
            csv.push_str(&format!(",{}", gs.cov[(i, i)]));
        }
        csv.push('\n');
    }
    Ok(csv)
}

fn cmd_algebra(basis: &[PhasePolynomial]) -> Result<serde_json::Value, PhaseError> {
    let rep = algebra_closure_check(basis)?;
    let brackets: Vec<serde_json::Value> = rep
        .brackets
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(move |(j, _)| i < *j)
                .map(move |(j, b)| {
                    serde_json::json!({
                        "i": i,
                        "j": j,
                        "bracket": format!("{b}"),
                    })
                })
        })
        .collect();
    let sc = rep.structure_constants.as_ref().map(|sc| {
        sc.iter()
            .map(|row| {
                row.iter()
                    .map(|cell| {
                        cell.iter().map(|c| format!("{c}")).collect::<Vec<_>>()
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    });
    Ok(serde_json::json!({
        "schema": SCHEMA_VERSION,
        "closed": rep.closed,
        "failures": rep.failures,
        "hierarchy_breaking_members": rep.hierarchy_breaking_members,
        "brackets": brackets,
        "structure_constants": sc,
    }))
}

fn algebra_text(basis: &[PhasePolynomial], json: &serde_json::Value) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "closed under Poisson bracket: {}\n",
        json["closed"]
    ));
    for (k, b) in basis.iter().enumerate() {
        out.push_str(&format!("  B{k} = {b}\n"));
    }
    if let Some(brs) = json["brackets"].as_array() {
        for b in brs {
            out.push_str(&format!(
                "  {{B{}, B{}}} = {}\n",
                b["i"], b["j"], b["bracket"].as_str().unwrap_or("?")
            ));
        }
    }
    if !json["hierarchy_breaking_members"].as_array().map(|a| a.is_empty()).unwrap_or(true) {
        out.push_str(&format!(
            "hierarchy-breaking members (degree >= 3): {}\n",
            json["hierarchy_breaking_members"]
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

fn render(common: &CommonOpts, json: &serde_json::Value, text: Option<&str>) -> String {
    match common.format {
        Format::Json => format!("{:#}\n", json),
        Format::Text | Format::Csv => match text {
            Some(t) => t.to_string(),
            None => {
                // moments gets a dedicated text renderer; default to pretty JSON
                if json.get("equations").is_some() {
                    let hbar = parse_rational(&common.hbar).unwrap_or_else(|_| Rat::from_integer(1.into()));
                    let ctx = AlgebraContext::with_hbar(common.modes, hbar)
                        .unwrap_or_else(|_| AlgebraContext::new(1).unwrap());
                    moments_text(json, &ctx)
                } else {
                    format!("{:#}\n", json)
                }
            }
        },
    }
}

fn emit(common: &CommonOpts, content: &str) -> Result<(), PhaseError> {
    match &common.out {
        None => {
            // tolerate a closed pipe (e.g. `phasespace ... | head`)
            use std::io::ErrorKind;
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(content.as_bytes()) {
                Ok(()) => Ok(()),
                Err(e) if e.kind() == ErrorKind::BrokenPipe => Ok(()),
                Err(e) => Err(PhaseError::Precondition(format!("cannot write stdout: {e}"))),
            }
        }
        Some(path) => {
            // atomic write: temp file in the target directory, then rename
            let tmp = path.with_extension("tmp.partial");
            let write = || -> std::io::Result<()> {
                let mut f = std::fs::File::create(&tmp)?;
                f.write_all(content.as_bytes())?;
                f.sync_all()?;
                std::fs::rename(&tmp, path)?;
                Ok(())
            };
            write().map_err(|e| PhaseError::Precondition(format!("cannot write {path:?}: {e}")))
        }
    }
}

