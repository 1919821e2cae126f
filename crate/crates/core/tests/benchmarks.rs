use polysinc::adaptive::{self, Settings, Termination};
use polysinc::analysis::fit_bound_model;
use polysinc::expr;
use polysinc::problem::{Conditions, ProblemKind};
use polysinc::problems;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `y`, `y'` and `y''` from the exact-solution text by symbolic differentiation.
fn exact_jets(source: &str) -> impl Fn(f64) -> Option<[f64; 3]> {
    let y = expr::parse(source).unwrap();
    let dy = y.derivative();
    let d2y = dy.derivative();
    move |x| Some([y.eval(x).ok()?, dy.eval(x).ok()?, d2y.eval(x).ok()?])
}

#[test]
fn exact_solutions_satisfy_their_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for entry in problems::all() {
        let spec = &entry.spec;
        let jets = exact_jets(&entry.exact_source);
        let exact = spec.exact_solution.as_ref().expect("every builtin has an exact solution");
        let (a, b) = spec.interval;
        let slope = spec.diffusion_slope();
        for _ in 0..50 {
            let x = rng.random_range(a + 1e-4 * (b - a)..b - 1e-4 * (b - a));
            let [y, dy, d2y] = jets(x).unwrap_or_else(|| panic!("{}: exact solution undefined at {x}", entry.id));
            assert!((exact.eval(x).unwrap() - y).abs() <= 1e-12 * y.abs().max(1.0), "{}: text and native disagree", entry.id);
            let f = spec.source.eval(x).unwrap();
            let terms: Vec<f64> = match spec.kind {
                ProblemKind::Ivp1 => vec![dy, spec.reaction.eval(x).unwrap() * y, -f],
                ProblemKind::Ivp2 => vec![-d2y, -f],
                ProblemKind::Bvp => {
                    let av = spec.diffusion.eval(x).unwrap();
                    vec![
                        -av * d2y,
                        -slope.eval(x).unwrap() * dy,
                        spec.drift.eval(x).unwrap() * dy,
                        spec.reaction.eval(x).unwrap() * y,
                        -f,
                    ]
                }
            };
            let scale = terms.iter().fold(1.0_f64, |s, t| s.max(t.abs()));
            let r: f64 = terms.iter().sum();
            assert!(r.abs() <= 1e-7 * scale, "{} at x = {x}: residual {r:e}, scale {scale:e}", entry.id);
        }
        let ya_exact = exact.eval(a).unwrap();
        match spec.conditions {
            Conditions::Initial { ya } => assert!((ya - ya_exact).abs() <= 1e-10, "{}", entry.id),
            Conditions::InitialWithSlope { ya, dya } => {
                let [_, dy, _] = jets(a).unwrap();
                assert!((ya - ya_exact).abs() <= 1e-10 && (dya - dy).abs() <= 1e-10, "{}", entry.id);
            }
            Conditions::Boundary { ya, yb } => {
                let yb_exact = exact.eval(b).unwrap();
                assert!((ya - ya_exact).abs() <= 1e-10 && (yb - yb_exact).abs() <= 1e-10, "{}", entry.id);
            }
        }
    }
}

#[test]
fn fitted_model_tracks_the_residual_means() {
    for id in ["relaxation", "hanging_bar", "layer_ei2", "layer_log"] {
        let entry = problems::builtin(id).unwrap();
        let r = entry.reference;
        let run = adaptive::run(&entry.spec, &Settings::new(r.n, r.eps_stop)).unwrap();
        assert_eq!(run.termination, Termination::ThresholdMet, "{id}");
        let m = 2 * r.n + 1;
        let len = entry.spec.interval.1 - entry.spec.interval.0;
        let means = run.means();
        let fit = fit_bound_model(&means, m, len, r.delta_scale).unwrap();
        assert!(!fit.degenerate, "{id}");
        assert!(fit.lambda > 0.0 && fit.lambda < 1.0, "{id}: lambda {}", fit.lambda);
        for (i, &mean) in means.iter().enumerate() {
            let ratio = fit.model(i + 1, m, len) / mean;
            assert!((0.1..=10.0).contains(&ratio), "{id} iteration {}: model/mean = {ratio:.3}", i + 1);
        }
    }
}
