//! Problem definitions: coefficient functions, interval, and initial/boundary data.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};

type NativeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function of `x` used as a coefficient, source, multiplier, or exact solution.
#[derive(Clone)]
pub enum ScalarFn {
    Constant(f64),
    Expr { expr: Expr, source: String },
    Native(NativeFn),
}

impl ScalarFn {
    pub fn constant(v: f64) -> Self {
        ScalarFn::Constant(v)
    }

    pub fn parse(src: &str) -> Result<Self> {
        let expr = expr::parse(src)?;
        Ok(match expr.as_const() {
            Some(v) => ScalarFn::Constant(v),
            None => ScalarFn::Expr { expr, source: src.to_string() },
        })
    }

    pub fn native<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        ScalarFn::Native(Arc::new(f))
    }

    /// Evaluates at `x`; non-finite results are reported as errors.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = match self {
            ScalarFn::Constant(v) => *v,
            ScalarFn::Expr { expr, source } => expr.eval_with_source(x, source)?,
            ScalarFn::Native(f) => f(x),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation { what: "function", x, reason: format!("non-finite value {v}") })
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarFn::Constant(v) if *v == 0.0)
    }

    /// Analytic derivative when one is available.
    pub fn derivative(&self) -> Option<ScalarFn> {
        match self {
            ScalarFn::Constant(_) => Some(ScalarFn::Constant(0.0)),
            ScalarFn::Expr { expr, .. } => {
                let d = expr.derivative();
                Some(match d.as_const() {
                    Some(v) => ScalarFn::Constant(v),
                    None => ScalarFn::Expr { source: d.to_string(), expr: d },
                })
            }
            ScalarFn::Native(_) => None,
        }
    }

    /// Human-readable definition, when the function has one.
    pub fn describe(&self) -> String {
        match self {
            ScalarFn::Constant(v) => format!("{v}"),
            ScalarFn::Expr { source, .. } => source.clone(),
            ScalarFn::Native(_) => "<native>".to_string(),
        }
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFn({})", self.describe())
    }
}

/// Which collocation scheme a problem uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    /// `y' + c(x) y = f(x)`, `y(a) = ya`, solved in integral form.
    Ivp1,
    /// `-y'' = f(x)`, `y(a) = ya`, `y'(a) = dya`, solved in integral form.
    Ivp2,
    /// `-(a(x) y')' + b(x) y' + c(x) y = f(x)`, `y(a) = ya`, `y(b) = yb`.
    Bvp,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Ivp1 => "ivp1",
            ProblemKind::Ivp2 => "ivp2",
            ProblemKind::Bvp => "bvp",
        }
    }

    pub fn is_second_order(self) -> bool {
        !matches!(self, ProblemKind::Ivp1)
    }
}

/// Initial or boundary data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Conditions {
    Initial { ya: f64 },
    InitialWithSlope { ya: f64, dya: f64 },
    Boundary { ya: f64, yb: f64 },
}

/// A linear ODE on a finite interval.
///
/// The coefficient roles depend on the kind: `diffusion` is `a(x)`, `drift`
/// is `b(x)`, `reaction` is `c(x)`, and `source` is `f(x)`. First-order IVPs use
/// only `reaction` and `source`; second-order IVPs use only `source`.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub interval: (f64, f64),
    pub conditions: Conditions,
    pub diffusion: ScalarFn,
    /// `a'(x)`; when absent it is taken from `diffusion` symbolically or by central differences.
    pub diffusion_derivative: Option<ScalarFn>,
    pub drift: ScalarFn,
    pub reaction: ScalarFn,
    pub source: ScalarFn,
    /// Factor applied to residual equations and refinement residuals.
    pub residual_multiplier: Option<ScalarFn>,
    pub exact_solution: Option<ScalarFn>,
}

impl ProblemSpec {
    fn base(kind: ProblemKind, a: f64, b: f64, conditions: Conditions) -> Self {
        ProblemSpec {
            kind,
            interval: (a, b),
            conditions,
            diffusion: ScalarFn::Constant(1.0),
            diffusion_derivative: None,
            drift: ScalarFn::Constant(0.0),
            reaction: ScalarFn::Constant(0.0),
            source: ScalarFn::Constant(0.0),
            residual_multiplier: None,
            exact_solution: None,
        }
    }

    /// `y' + c(x) y = f(x)` with `y(a) = ya`.
    pub fn ivp1(a: f64, b: f64, ya: f64, c: ScalarFn, f: ScalarFn) -> Self {
        let mut s = Self::base(ProblemKind::Ivp1, a, b, Conditions::Initial { ya });
        s.reaction = c;
        s.source = f;
        s
    }

    /// `-y'' = f(x)` with `y(a) = ya`, `y'(a) = dya`.
    pub fn ivp2(a: f64, b: f64, ya: f64, dya: f64, f: ScalarFn) -> Self {
        let mut s = Self::base(ProblemKind::Ivp2, a, b, Conditions::InitialWithSlope { ya, dya });
        s.source = f;
        s
    }

    /// `-(a y')' + b y' + c y = f` with `y(a) = ya`, `y(b) = yb`.
    #[allow(clippy::too_many_arguments)]
    pub fn bvp(
        interval: (f64, f64),
        ya: f64,
        yb: f64,
        diffusion: ScalarFn,
        drift: ScalarFn,
        reaction: ScalarFn,
        source: ScalarFn,
    ) -> Self {
        let mut s = Self::base(ProblemKind::Bvp, interval.0, interval.1, Conditions::Boundary { ya, yb });
        s.diffusion = diffusion;
        s.drift = drift;
        s.reaction = reaction;
        s.source = source;
        s
    }

    pub fn with_multiplier(mut self, w: ScalarFn) -> Self {
        self.residual_multiplier = Some(w);
        self
    }

    pub fn with_exact(mut self, y: ScalarFn) -> Self {
        self.exact_solution = Some(y);
        self
    }

    pub fn with_diffusion_derivative(mut self, da: ScalarFn) -> Self {
        self.diffusion_derivative = Some(da);
        self
    }

    /// Checks the interval, the data/kind pairing, and positivity of `a(x)` on sample points.
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.interval;
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInterval { a, b });
        }
        let ok = matches!(
            (self.kind, self.conditions),
            (ProblemKind::Ivp1, Conditions::Initial { .. })
                | (ProblemKind::Ivp2, Conditions::InitialWithSlope { .. })
                | (ProblemKind::Bvp, Conditions::Boundary { .. })
        );
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "conditions {:?} do not match problem kind {}",
                self.conditions,
                self.kind.name()
            )));
        }
        if self.kind == ProblemKind::Bvp {
            for i in 1..64 {
                let x = a + (b - a) * i as f64 / 64.0;
                let v = self.diffusion.eval(x)?;
                if !(v > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "diffusion coefficient a(x) must be positive; a({x}) = {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Multiplier value at `x` (1 when none is set).
    pub fn multiplier(&self, x: f64) -> Result<f64> {
        match &self.residual_multiplier {
            Some(w) => w.eval(x),
            None => Ok(1.0),
        }
    }

    /// `a'(x)`: supplied, symbolic, or by central differences with step `1e-7 (b - a)`.
    pub fn diffusion_slope(&self) -> DiffusionSlope<'_> {
        if let Some(d) = &self.diffusion_derivative {
            return DiffusionSlope::Exact(d.clone());
        }
        match self.diffusion.derivative() {
            Some(d) => DiffusionSlope::Exact(d),
            None => DiffusionSlope::Numeric {
                a: &self.diffusion,
                step: 1e-7 * (self.interval.1 - self.interval.0),
            },
        }
    }
}

pub enum DiffusionSlope<'a> {
    Exact(ScalarFn),
    Numeric { a: &'a ScalarFn, step: f64 },
}

impl DiffusionSlope<'_> {
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            DiffusionSlope::Exact(d) => d.eval(x),
            DiffusionSlope::Numeric { a, step } => {
                Ok((a.eval(x + step)? - a.eval(x - step)?) / (2.0 * step))
            }
        }
    }
}
