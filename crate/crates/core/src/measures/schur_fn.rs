//! Decreasing convex scalar functions for Schur-convex sums `Σ f(λ_i)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A registered function `f: ℝ₊₊ → ℝ` that is decreasing, convex and tends
/// to zero at infinity. Every instance has passed [`verify_decreasing_convex`].
#[derive(Clone)]
pub enum SchurFn {
    /// `1/(2x)`
    Inverse,
    /// `1/(2x²)`
    InverseSq,
    /// `1/x^q`, `q > 0`
    InversePow(f64),
    /// `e^{−cx}`, `c > 0`
    ExpDecay(f64),
    Custom(Arc<CustomFn>),
}

pub struct CustomFn {
    name: String,
    value: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    derivative: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl SchurFn {
    pub fn inverse_pow(q: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::domain(format!("inverse_pow needs q > 0, got {q}")));
        }
        Ok(SchurFn::InversePow(q))
    }

    pub fn exp_decay(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain(format!("exp_decay needs c > 0, got {c}")));
        }
        Ok(SchurFn::ExpDecay(c))
    }

    /// Registers a new function. Fails unless sampling confirms it is
    /// decreasing, convex and nonnegative on `ℝ₊₊`.
    pub fn register<F, D>(name: &str, value: F, derivative: D) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        verify_decreasing_convex(&value)?;
        Ok(SchurFn::Custom(Arc::new(CustomFn {
            name: name.to_string(),
            value: Box::new(value),
            derivative: Box::new(derivative),
        })))
    }

    /// Parses `inverse`, `inverse_sq`, `inverse_pow(q)` / `inverse_pow:q`
    /// and `exp_decay(c)` / `exp_decay:c`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, arg) = match text.find(['(', ':']) {
            Some(i) => {
                let arg = text[i + 1..].trim_end_matches(')');
                let value: f64 = arg
                    .trim()
                    .parse()
                    .map_err(|_| Error::domain(format!("invalid parameter in `{text}`")))?;
                (&text[..i], Some(value))
            }
            None => (text, None),
        };
        let f = match (name, arg) {
            ("inverse", None) => SchurFn::Inverse,
            ("inverse_sq", None) => SchurFn::InverseSq,
            ("inverse_pow", Some(q)) => SchurFn::inverse_pow(q)?,
            ("exp_decay", Some(c)) => SchurFn::exp_decay(c)?,
            _ => return Err(Error::domain(format!("unknown function `{text}`"))),
        };
        verify_decreasing_convex(|x| f.eval(x))?;
        Ok(f)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SchurFn::Inverse => 0.5 / x,
            SchurFn::InverseSq => 0.5 / (x * x),
            SchurFn::InversePow(q) => x.powf(-q),
            SchurFn::ExpDecay(c) => (-c * x).exp(),
            SchurFn::Custom(f) => (f.value)(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            SchurFn::Inverse => -0.5 / (x * x),
            SchurFn::InverseSq => -1.0 / (x * x * x),
            SchurFn::InversePow(q) => -q * x.powf(-q - 1.0),
            SchurFn::ExpDecay(c) => -c * (-c * x).exp(),
            SchurFn::Custom(f) => (f.derivative)(x),
        }
    }
}

impl fmt::Display for SchurFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchurFn::Inverse => write!(f, "inverse"),
            SchurFn::InverseSq => write!(f, "inverse_sq"),
            SchurFn::InversePow(q) => write!(f, "inverse_pow({q})"),
            SchurFn::ExpDecay(c) => write!(f, "exp_decay({c})"),
            SchurFn::Custom(c) => write!(f, "{}", c.name),
        }
    }
}

impl fmt::Debug for SchurFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SchurFn({self})")
    }
}

impl PartialEq for SchurFn {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SchurFn::Custom(a), SchurFn::Custom(b)) => Arc::ptr_eq(a, b),
            _ => self.to_string() == other.to_string(),
        }
    }
}

/// Samples `f` on a log grid over `[1e-3, 1e3]` and checks it is finite,
/// nonnegative, nonincreasing and has nondecreasing secant slopes.
pub fn verify_decreasing_convex<F: Fn(f64) -> f64>(f: F) -> Result<()> {
    const SAMPLES: usize = 400;
    let xs: Vec<f64> = (0..=SAMPLES)
        .map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / SAMPLES as f64))
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    if ys.iter().any(|y| !y.is_finite() || *y < 0.0) {
        return Err(Error::domain("function must be finite and nonnegative on (0, inf)"));
    }
    let slopes: Vec<f64> = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    let scale = slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if slopes.iter().any(|&s| s > 1e-12 * scale) {
        return Err(Error::domain("function is not decreasing"));
    }
    if slopes.windows(2).any(|s| s[1] < s[0] - 1e-9 * scale) {
        return Err(Error::domain("function is not convex"));
    }
    Ok(())
}
