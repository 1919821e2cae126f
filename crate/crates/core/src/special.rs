//! Error function, imaginary error function, and exponential integral.

use std::f64::consts::{FRAC_2_SQRT_PI, PI};

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `erf(x) = 2/sqrt(pi) * integral from 0 to x of exp(-t^2) dt`.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let v = if ax < 2.5 {
        erf_series(ax)
    } else {
        1.0 - erfc_cf(ax)
    };
    v.copysign(x)
}

/// Complementary error function `1 - erf(x)`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        2.0 - erfc(-x)
    } else if x < 2.5 {
        1.0 - erf_series(x)
    } else {
        erfc_cf(x)
    }
}

/// Positive-term series `erf(x) = 2/sqrt(pi) e^{-x^2} sum 2^n x^{2n+1} / (2n+1)!!`.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// Continued fraction for `erfc(x)`, `x >= 2.5` (modified Lentz).
fn erfc_cf(x: f64) -> f64 {
    if x > 27.3 {
        return 0.0;
    }
    // erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 * 0.5;
        d = x + a * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = x + a / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

/// `erfi(x) = -i erf(i x) = 2/sqrt(pi) * integral from 0 to x of exp(t^2) dt`.
pub fn erfi(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax > 26.5 {
        return f64::INFINITY.copysign(x);
    }
    let x2 = ax * ax;
    let mut term = ax;
    let mut sum = ax;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= x2 / n * (2.0 * n - 1.0) / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    (FRAC_2_SQRT_PI * sum).copysign(x)
}

/// Exponential integral `Ei(x)`, the principal value of the integral of `e^t / t`
/// from minus infinity to `x`.
pub fn expint_ei(x: f64) -> Result<f64> {
    if x == 0.0 {
        return Err(Error::Domain { x, a: 0.0, b: 0.0 });
    }
    if x.is_nan() {
        return Ok(f64::NAN);
    }
    if x < 0.0 {
        return Ok(-expint_e1(-x));
    }
    if x > 40.0 {
        // asymptotic: Ei(x) ~ e^x/x sum k!/x^k
        let mut sum = 1.0;
        let mut term = 1.0;
        for k in 1..40 {
            let prev = term;
            term *= k as f64 / x;
            if term >= prev {
                break;
            }
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        return Ok(x.exp() / x * sum);
    }
    // Ei(x) = gamma + ln x + sum x^k / (k k!)
    let mut fact = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        fact *= x / k as f64;
        let term = fact / k as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    Ok(EULER_GAMMA + x.ln() + sum)
}

/// `E1(x)` for `x > 0`.
fn expint_e1(x: f64) -> f64 {
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..100 {
            term *= -x / k as f64;
            let t = term / k as f64;
            sum += t;
            if t.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        if x > 745.0 {
            return 0.0;
        }
        // E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}
