//! Built-in benchmark problems with closed-form solutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{ProblemSpec, ScalarFn};
use crate::special::{erf, erfi, expint_ei};

/// Settings and published results attached to a benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSettings {
    /// Sinc half-count `N` (`m = 2N + 1`).
    pub n: usize,
    /// Default stopping threshold for double precision.
    pub eps_stop: f64,
    /// Threshold used in the published high-precision run.
    pub published_eps_stop: f64,
    pub published_iterations: usize,
    pub published_points: usize,
    pub published_error: f64,
    /// `"l2"` or `"sup"`.
    pub published_error_norm: String,
    pub published_lambda: Option<f64>,
    pub published_omega_mean: Option<f64>,
    /// Multiplier applied to `delta` in the bound fit.
    pub delta_scale: f64,
}

/// One registered benchmark.
#[derive(Clone, Debug)]
pub struct BenchmarkEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub spec: ProblemSpec,
    /// Expression text of the exact solution, usable for symbolic differentiation.
    pub exact_source: String,
    pub reference: ReferenceSettings,
    /// Where the solution varies fastest, if it has a layer.
    pub layer: Option<(f64, f64)>,
}

/// Registered ids, in presentation order.
pub const IDS: [&str; 9] = [
    "relaxation",
    "hanging_bar",
    "layer_log",
    "layer_ei",
    "layer_erf",
    "layer_ei2",
    "layer_right",
    "interior_arctan",
    "shock_erf",
];

/// Arctan problem parameters.
pub const ARCTAN_ALPHA: f64 = 100.0;
pub const ARCTAN_CENTER: f64 = 0.36388;
/// Shock problem diffusion.
pub const SHOCK_EPSILON: f64 = 1e-6;

fn num(v: f64) -> String {
    // `{:e}` prints the shortest representation that round-trips.
    format!("({v:e})")
}

fn expr(src: &str) -> ScalarFn {
    ScalarFn::parse(src).unwrap_or_else(|e| panic!("built-in expression `{src}` is invalid: {e}"))
}

/// Wraps an expression-defined exact solution so that `x = at` returns `value`
/// (for removable singularities of the closed form).
fn with_limit(src: &str, at: f64, value: f64) -> ScalarFn {
    let f = expr(src);
    ScalarFn::native(move |x| if x == at { value } else { f.eval(x).unwrap_or(f64::NAN) })
}

#[allow(clippy::too_many_arguments)]
fn reference(
    n: usize,
    eps_stop: f64,
    published_eps_stop: f64,
    iterations: usize,
    points: usize,
    error: f64,
    norm: &str,
    lambda: f64,
    omega: Option<f64>,
    delta_scale: f64,
) -> ReferenceSettings {
    ReferenceSettings {
        n,
        eps_stop,
        published_eps_stop,
        published_iterations: iterations,
        published_points: points,
        published_error: error,
        published_error_norm: norm.to_string(),
        published_lambda: Some(lambda),
        published_omega_mean: omega,
        delta_scale,
    }
}

fn ei(x: f64) -> f64 {
    expint_ei(x).expect("nonzero argument")
}

/// Looks up a built-in benchmark by id.
pub fn builtin(id: &str) -> Result<BenchmarkEntry> {
    let e10 = 10f64.exp();
    let e20 = 20f64.exp();
    let entry = match id {
        "relaxation" => {
            let exact = "exp(-20*x)";
            BenchmarkEntry {
                id: "relaxation",
                description: "y' + 20 y = 0, y(0) = 1 on [0, 1]",
                spec: ProblemSpec::ivp1(0.0, 1.0, 1.0, ScalarFn::constant(20.0), ScalarFn::constant(0.0))
                    .with_exact(expr(exact)),
                exact_source: exact.into(),
                reference: reference(2, 1e-6, 1e-6, 7, 530, 1.5e-7, "l2", 0.563, Some(0.6), 1.0),
                layer: Some((0.0, 0.2)),
            }
        }
        "hanging_bar" => {
            let exact = "exp(x)*(x - 1)^2";
            BenchmarkEntry {
                id: "hanging_bar",
                description: "-y'' = e^x (1 - 2x - x^2), y(0) = 1, y'(0) = -1 on [0, 1]",
                spec: ProblemSpec::ivp2(0.0, 1.0, 1.0, -1.0, expr("exp(x)*(1 - 2*x - x^2)"))
                    .with_exact(expr(exact)),
                exact_source: exact.into(),
                reference: reference(3, 1e-6, 1e-6, 3, 350, 5.82e-9, "l2", 0.302, None, 1.0),
                layer: None,
            }
        }
        "layer_log" => {
            let exact = "ln(1 + 100*x)/ln(101) - x";
            BenchmarkEntry {
                id: "layer_log",
                description: "-((x + 0.01) y')' = 1, y(0) = y(1) = 0",
                spec: ProblemSpec::bvp(
                    (0.0, 1.0),
                    0.0,
                    0.0,
                    expr("x + 0.01"),
                    ScalarFn::constant(0.0),
                    ScalarFn::constant(0.0),
                    ScalarFn::constant(1.0),
                )
                .with_exact(expr(exact)),
                exact_source: exact.into(),
                reference: reference(2, 1e-6, 1e-6, 10, 2055, 1.12e-8, "l2", 0.69, Some(0.64), 1.0),
                layer: Some((0.0, 0.05)),
            }
        }
        "layer_ei" => {
            let c1 = (-5.0 * ei(-10.0) * e10 + 5.0 * ei(10.0) / e10) / (1.0 / e10 - e10);
            let exact = format!(
                "-5*ei(-10*x)*exp(10*x) + 5*ei(10*x)*exp(-10*x) + {c}*exp(10*x) - {c}*exp(-10*x)",
                c = num(c1)
            );
            BenchmarkEntry {
                id: "layer_ei",
                description: "-0.01 y'' + y = 1/x, y(0) = y(1) = 0, residual multiplied by x",
                spec: ProblemSpec::bvp(
                    (0.0, 1.0),
                    0.0,
                    0.0,
                    ScalarFn::constant(0.01),
                    ScalarFn::constant(0.0),
                    ScalarFn::constant(1.0),
                    expr("1/x"),
                )
                .with_multiplier(expr("x"))
                .with_exact(with_limit(&exact, 0.0, 0.0)),
                exact_source: exact,
                reference: reference(2, 1e-6, 1e-6, 9, 1630, 1.6e-6, "l2", 0.692, Some(0.66), 1.0),
                layer: Some((0.0, 0.1)),
            }
        }
        "layer_erf" => {
            let k = (2.5 * std::f64::consts::PI).sqrt();
            let c1 = -k * (e20 * erf(10f64.sqrt()) - erfi(10f64.sqrt())) / (e20 - 1.0);
            let exact = format!(
                "{c}*exp(-10*x) - {c}*exp(10*x) - {k}*exp(10*x)*erf(sqrt(10*x)) + {k}*exp(-10*x)*erfi(sqrt(10*x))",
                c = num(c1),
                k = num(k)
            );
            BenchmarkEntry {
                id: "layer_erf",
                description: "-0.01 y'' + y = 1/sqrt(x), y(0) = y(1) = 0, residual multiplied by sqrt(x)",
                spec: ProblemSpec::bvp(
                    (0.0, 1.0),
                    0.0,
                    0.0,
                    ScalarFn::constant(0.01),
                    ScalarFn::constant(0.0),
                    ScalarFn::constant(1.0),
                    expr("1/sqrt(x)"),
                )
                .with_multiplier(expr("sqrt(x)"))
                .with_exact(expr(&exact)),
                exact_source: exact,
                reference: reference(2, 1e-6, 1e-6, 7, 1183, 2.18e-7, "l2", 0.67, Some(0.49), 1.0),
                layer: Some((0.0, 0.1)),
            }
        }
        "layer_ei2" => {
            let (l1, l2) = ((10.0f64 / 9.0).ln(), (11.0f64 / 10.0).ln());
            let (a, b, c, d) = (ei(-10.0), ei(-9.0), ei(10.0), ei(11.0));
            let c1 = 5.0 * (e20 * a - e20 * b - c + d - e20 * l1 - e20 * l2) / (e20 - 1.0);
            let c2 = 5.0 * (-e20 * a + e20 * b + c - d + l1 + l2) / (e20 - 1.0);
            let exact = format!(
                "{c1}*exp(-10*x) + {c2}*exp(10*x) - 5*exp(10*x)*(ei(-9*x) - ei(-10*x)) + 5*exp(-10*x)*(ei(11*x) - ei(10*x))",
                c1 = num(c1),
                c2 = num(c2)
            );
            let source = ScalarFn::native(|x: f64| if x.abs() < 1e-8 { 1.0 } else { x.exp_m1() / x });
            let at_zero = c1 + c2 + 5.0 * (l1 + l2);
            BenchmarkEntry {
                id: "layer_ei2",
                description: "-0.01 y'' + y = (e^x - 1)/x, y(0) = y(1) = 0",
                spec: ProblemSpec::bvp(
                    (0.0, 1.0),
                    0.0,
                    0.0,
                    ScalarFn::constant(0.01),
                    ScalarFn::constant(0.0),
                    ScalarFn::constant(1.0),
                    source,
                )
                .with_exact(with_limit(&exact, 0.0, at_zero)),
                exact_source: exact,
                reference: reference(2, 1e-6, 1e-6, 8, 605, 3.1e-7, "l2", 0.691, Some(0.65), 1.0),
                layer: Some((0.0, 0.1)),
            }
        }
        "layer_right" => {
            let exact = "x - (exp(50*(x - 1)) - exp(-50))/(1 - exp(-50))";
            BenchmarkEntry {
                id: "layer_right",
                description: "-0.02 y'' + y' = 1, y(0) = y(1) = 0",
                spec: ProblemSpec::bvp(
                    (0.0, 1.0),
                    0.0,
                    0.0,
                    ScalarFn::constant(0.02),
                    ScalarFn::constant(1.0),
                    ScalarFn::constant(0.0),
                    ScalarFn::constant(1.0),
                )
                .with_exact(expr(exact)),
                exact_source: exact.into(),
                reference: reference(2, 1e-6, 1e-6, 9, 1055, 2.36e-8, "l2", 0.625, Some(0.62), 1.0),
                layer: Some((0.9, 1.0)),
            }
        }
        "interior_arctan" => {
            let (al, xb) = (num(ARCTAN_ALPHA), num(ARCTAN_CENTER));
            let exact = format!("(1 - x)*(atan({al}*(x - {xb})) + atan({al}*{xb}))");
            let diffusion = format!("1/{al} + {al}*(x - {xb})^2");
            let source = format!("2*(1 + {al}*(x - {xb})*(atan({al}*(x - {xb})) + atan({al}*{xb})))");
            BenchmarkEntry {
                id: "interior_arctan",
                description: "-(v(x) y')' = f(x) with v = 1/100 + 100 (x - 0.36388)^2, y(0) = y(1) = 0",
                spec: ProblemSpec::bvp(
                    (0.0, 1.0),
                    0.0,
                    0.0,
                    expr(&diffusion),
                    ScalarFn::constant(0.0),
                    ScalarFn::constant(0.0),
                    expr(&source),
                )
                .with_exact(expr(&exact)),
                exact_source: exact,
                reference: reference(3, 1e-9, 1e-12, 15, 21469, 1.104e-14, "l2", 0.698, Some(0.46), 1e-12),
                layer: Some((ARCTAN_CENTER - 0.02, ARCTAN_CENTER + 0.02)),
            }
        }
        "shock_erf" => {
            let eps = num(SHOCK_EPSILON);
            let exact = format!("cos(pi*x) + erf(x/sqrt(2*{eps}))/erf(1/sqrt(2*{eps}))");
            let source = format!("{eps}*pi^2*cos(pi*x) + pi*x*sin(pi*x)");
            BenchmarkEntry {
                id: "shock_erf",
                description: "-1e-6 y'' - x y' = f(x), y(-1) = -2, y(1) = 0",
                spec: ProblemSpec::bvp(
                    (-1.0, 1.0),
                    -2.0,
                    0.0,
                    ScalarFn::constant(SHOCK_EPSILON),
                    expr("-x"),
                    ScalarFn::constant(0.0),
                    expr(&source),
                )
                .with_exact(expr(&exact)),
                exact_source: exact,
                reference: reference(2, 1e-9, 1e-11, 16, 18530, 1.215e-10, "sup", 0.629, Some(0.55), 1e-9),
                layer: Some((-0.02, 0.02)),
            }
        }
        _ => {
            return Err(Error::UnknownProblem {
                id: id.to_string(),
                known: IDS.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    Ok(entry)
}

/// All built-in benchmarks in presentation order.
pub fn all() -> Vec<BenchmarkEntry> {
    IDS.iter().map(|id| builtin(id).expect("registered")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Conditions, ProblemKind};

    #[test]
    fn registry_examples() {
        let r = builtin("relaxation").unwrap();
        assert_eq!(r.spec.exact_solution.as_ref().unwrap().eval(0.0).unwrap(), 1.0);
        let a = builtin("interior_arctan").unwrap();
        assert_eq!(a.spec.exact_solution.as_ref().unwrap().eval(1.0).unwrap(), 0.0);
        let l = builtin("layer_log").unwrap();
        assert!(l.spec.exact_solution.as_ref().unwrap().eval(1.0).unwrap().abs() < 1e-15);
        match builtin("nosuch") {
            Err(Error::UnknownProblem { known, .. }) => assert_eq!(known.len(), IDS.len()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exact_solutions_meet_their_data() {
        for e in all() {
            let y = e.spec.exact_solution.as_ref().unwrap();
            let (a, b) = e.spec.interval;
            match e.spec.conditions {
                Conditions::Initial { ya } => assert!((y.eval(a).unwrap() - ya).abs() <= 1e-10, "{}", e.id),
                Conditions::InitialWithSlope { ya, dya } => {
                    assert!((y.eval(a).unwrap() - ya).abs() <= 1e-10);
                    let dy = expr(&e.exact_source).derivative().unwrap().eval(a).unwrap();
                    assert!((dy - dya).abs() <= 1e-10);
                }
                Conditions::Boundary { ya, yb } => {
                    assert!((y.eval(a).unwrap() - ya).abs() <= 1e-10, "{} left", e.id);
                    assert!((y.eval(b).unwrap() - yb).abs() <= 1e-10, "{} right", e.id);
                }
            }
            assert_eq!(e.spec.kind == ProblemKind::Ivp1, e.id == "relaxation");
        }
    }

    #[test]
    fn removable_singularity_source() {
        let e = builtin("layer_ei2").unwrap();
        assert_eq!(e.spec.source.eval(0.0).unwrap(), 1.0);
        assert!((e.spec.source.eval(1e-3).unwrap() - 1.000_500_166_708_341_7).abs() < 1e-14);
    }
}
