//! Problem files: flat TOML key/value definitions of a linear ODE.
//!
//! ```toml
//! kind = "bvp"
//! interval = [0, 1]
//! "a(x)" = "x + 0.01"
//! f = "1"
//! ya = 0
//! yb = 0
//! exact = "ln(1 + 100*x)/ln(101) - x"
//! ```
//!
//! Coefficients may be written `a` or `"a(x)"` and given as expression strings
//! or numbers. `kind = "ivp1"` means `y' + c y = f`; `kind = "ivp2"` means `-y'' = f`.

use std::path::Path;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::problem::{ProblemKind, ProblemSpec, ScalarFn};

/// A problem read from a file.
#[derive(Clone, Debug)]
pub struct ProblemDefinition {
    pub name: Option<String>,
    pub spec: ProblemSpec,
    /// Source text of each entry, for echoing in reports.
    pub echo: Vec<(String, String)>,
}

fn schema(key: &str, message: impl Into<String>) -> Error {
    Error::Schema { key: key.to_string(), message: message.into() }
}

const COEFFICIENTS: [&str; 4] = ["a", "b", "c", "f"];

fn canonical(key: &str) -> Option<&'static str> {
    Some(match key {
        "kind" => "kind",
        "name" => "name",
        "interval" => "interval",
        "a" | "a(x)" => "a",
        "b" | "b(x)" => "b",
        "c" | "c(x)" => "c",
        "f" | "f(x)" => "f",
        "ya" => "ya",
        "yb" => "yb",
        "dya" => "dya",
        "multiplier" => "multiplier",
        "exact" => "exact",
        _ => return None,
    })
}

fn number(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(schema(key, format!("expected a number, found {}", v.type_str()))),
    }
}

fn function(key: &str, v: &Value) -> Result<(ScalarFn, String)> {
    match v {
        Value::String(s) => {
            let f = ScalarFn::parse(s).map_err(|e| schema(key, e.to_string()))?;
            Ok((f, s.clone()))
        }
        Value::Float(_) | Value::Integer(_) => {
            let x = number(key, v)?;
            Ok((ScalarFn::constant(x), format!("{x}")))
        }
        _ => Err(schema(key, format!("expected an expression string or number, found {}", v.type_str()))),
    }
}

/// Parses problem-file text.
pub fn parse_problem(text: &str) -> Result<ProblemDefinition> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| schema("<file>", e.message().to_string()))?;
    let mut entries: Vec<(&'static str, &str, &Value)> = Vec::new();
    for (key, value) in &table {
        let canon = canonical(key).ok_or_else(|| schema(key, "unknown key"))?;
        if let Some((_, first, _)) = entries.iter().find(|(c, _, _)| *c == canon) {
            return Err(schema(key, format!("duplicates `{first}`")));
        }
        entries.push((canon, key.as_str(), value));
    }
    let get = |name: &str| entries.iter().find(|(c, _, _)| *c == name).map(|(_, k, v)| (*k, *v));

    let kind = match get("kind") {
        None => return Err(schema("kind", "missing; expected \"bvp\", \"ivp1\" or \"ivp2\"")),
        Some((k, Value::String(s))) => match s.as_str() {
            "bvp" => ProblemKind::Bvp,
            "ivp1" => ProblemKind::Ivp1,
            "ivp2" => ProblemKind::Ivp2,
            other => return Err(schema(k, format!("unknown kind `{other}`; expected bvp, ivp1 or ivp2"))),
        },
        Some((k, v)) => return Err(schema(k, format!("expected a string, found {}", v.type_str()))),
    };
    let (a, b) = match get("interval") {
        None => return Err(schema("interval", "missing; expected [a, b]")),
        Some((k, Value::Array(arr))) if arr.len() == 2 => (number(k, &arr[0])?, number(k, &arr[1])?),
        Some((k, _)) => return Err(schema(k, "expected a two-element array [a, b]")),
    };
    if !(b > a) {
        return Err(schema("interval", format!("right endpoint {b} must exceed left endpoint {a}")));
    }

    let (allowed, required): (&[&str], &[&str]) = match kind {
        ProblemKind::Ivp1 => (&["c", "f", "ya", "multiplier"], &["ya"]),
        ProblemKind::Ivp2 => (&["f", "ya", "dya", "multiplier"], &["ya", "dya"]),
        ProblemKind::Bvp => (&["a", "b", "c", "f", "ya", "yb", "multiplier"], &["a", "ya", "yb"]),
    };
    for (canon, key, _) in &entries {
        let general = matches!(*canon, "kind" | "name" | "interval" | "exact");
        if !general && !allowed.contains(canon) {
            return Err(schema(key, format!("not used by kind {}", kind.name())));
        }
    }
    for req in required {
        if get(req).is_none() {
            return Err(schema(req, format!("missing; required for kind {}", kind.name())));
        }
    }

    let mut echo = Vec::new();
    let coef = |name: &str| -> Result<ScalarFn> {
        match get(name) {
            Some((k, v)) => {
                let (f, src) = function(k, v)?;
                echo.push((name.to_string(), src));
                Ok(f)
            }
            None => Ok(ScalarFn::constant(0.0)),
        }
    };
    let [ca, cb, cc, cf] = COEFFICIENTS.map(coef);
    let value = |name: &str| -> Result<f64> {
        let (k, v) = get(name).expect("checked as required");
        number(k, v)
    };

    let mut spec = match kind {
        ProblemKind::Ivp1 => ProblemSpec::ivp1(a, b, value("ya")?, cc?, cf?),
        ProblemKind::Ivp2 => ProblemSpec::ivp2(a, b, value("ya")?, value("dya")?, cf?),
        ProblemKind::Bvp => ProblemSpec::bvp((a, b), value("ya")?, value("yb")?, ca?, cb?, cc?, cf?),
    };
    for (name, slot) in [("multiplier", 0), ("exact", 1)] {
        if let Some((k, v)) = get(name) {
            let (f, src) = function(k, v)?;
            echo.push((name.to_string(), src));
            if slot == 0 {
                spec.residual_multiplier = Some(f);
            } else {
                spec.exact_solution = Some(f);
            }
        }
    }
    let name = match get("name") {
        Some((_, Value::String(s))) => Some(s.clone()),
        Some((k, v)) => return Err(schema(k, format!("expected a string, found {}", v.type_str()))),
        None => None,
    };
    if kind == ProblemKind::Bvp {
        spec.validate().map_err(|e| schema("a", e.to_string()))?;
    }
    Ok(ProblemDefinition { name, spec, echo })
}

/// Reads and parses a problem file.
pub fn load_problem(path: &Path) -> Result<ProblemDefinition> {
    let text = std::fs::read_to_string(path)?;
    parse_problem(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bvp_with_both_key_styles() {
        let d = parse_problem(
            "kind = \"bvp\"\ninterval = [0, 1]\n\"a(x)\" = \"x + 0.01\"\nf = 1\nya = 0\nyb = 0\n",
        )
        .unwrap();
        assert_eq!(d.spec.kind, ProblemKind::Bvp);
        assert!((d.spec.diffusion.eval(0.5).unwrap() - 0.51).abs() < 1e-15);
        assert_eq!(d.spec.source.eval(0.3).unwrap(), 1.0);
        assert!(d.spec.reaction.is_zero());
    }

    #[test]
    fn schema_errors_name_the_key() {
        let key_of = |text: &str| match parse_problem(text) {
            Err(Error::Schema { key, .. }) => key,
            other => panic!("{other:?}"),
        };
        assert_eq!(key_of("kind = \"bvp\"\ninterval = [0, 1]\na = 1\nya = 0\n"), "yb");
        assert_eq!(key_of("kind = \"bvp\"\ninterval = [0, 1]\na = 1\nya = 0\nyb = 0\nfoo = 1\n"), "foo");
        assert_eq!(key_of("interval = [0, 1]\n"), "kind");
        assert_eq!(key_of("kind = \"ivp1\"\ninterval = [0, 1]\nya = 1\na = 2\n"), "a");
        assert_eq!(key_of("kind = \"bvp\"\ninterval = [1, 0]\na = 1\nya = 0\nyb = 0\n"), "interval");
        assert_eq!(key_of("kind = \"bvp\"\ninterval = [0, 1]\na = \"x +\"\nya = 0\nyb = 0\n"), "a");
        assert_eq!(key_of("kind = \"bvp\"\ninterval = [0, 1]\na = 1\n\"a(x)\" = 2\nya = 0\nyb = 0\n"), "a(x)");
    }

    #[test]
    fn accepts_multiplier_and_exact() {
        let d = parse_problem(
            "kind = \"bvp\"\ninterval = [0, 1]\na = 0.01\nc = 1\nf = \"1/sqrt(x)\"\nmultiplier = \"sqrt(x)\"\nya = 0\nyb = 0\n",
        )
        .unwrap();
        assert_eq!(d.spec.multiplier(0.25).unwrap(), 0.5);
        let d = parse_problem("kind = \"ivp2\"\ninterval = [0, 1]\nf = -2\nya = 0\ndya = 0\nexact = \"x^2\"\n").unwrap();
        assert_eq!(d.spec.exact_solution.unwrap().eval(3.0).unwrap(), 9.0);
    }
}
