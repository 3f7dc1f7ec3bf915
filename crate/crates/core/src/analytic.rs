//! Closed-form solution fields with partial derivatives, used as
//! manufactured solutions and as inputs to the projections.

use std::fmt;

/// A smooth function `u(x, y, t)` with access to mixed partials
/// `d^a/dx^a d^b/dy^b d^c/dt^c u`.
pub trait AnalyticField: Send + Sync {
    fn deriv(&self, dx: usize, dy: usize, dt: usize, x: f64, y: f64, t: f64) -> f64;

    fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        self.deriv(0, 0, 0, x, y, t)
    }
}

/// `n`-th derivative of `sin` evaluated at `theta`.
fn sin_deriv(n: usize, theta: f64) -> f64 {
    match n % 4 {
        0 => theta.sin(),
        1 => theta.cos(),
        2 => -theta.sin(),
        _ => -theta.cos(),
    }
}

/// `amplitude * exp(-decay t) * sin(kx x + ky y + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigField {
    pub amplitude: f64,
    pub decay: f64,
    pub kx: f64,
    pub ky: f64,
    pub phase: f64,
}

impl TrigField {
    /// `exp(-2t) sin(x + y)`, the manufactured solution of both test problems.
    pub fn manufactured() -> Self {
        Self { amplitude: 1.0, decay: 2.0, kx: 1.0, ky: 1.0, phase: 0.0 }
    }

    /// Time-independent `sin(kx x + ky y + phase)`.
    pub fn steady(kx: f64, ky: f64, phase: f64) -> Self {
        Self { amplitude: 1.0, decay: 0.0, kx, ky, phase }
    }
}

impl AnalyticField for TrigField {
    fn deriv(&self, dx: usize, dy: usize, dt: usize, x: f64, y: f64, t: f64) -> f64 {
        let theta = self.kx * x + self.ky * y + self.phase;
        self.amplitude
            * (-self.decay).powi(dt as i32)
            * (-self.decay * t).exp()
            * self.kx.powi(dx as i32)
            * self.ky.powi(dy as i32)
            * sin_deriv(dx + dy, theta)
    }
}

type DerivFn = dyn Fn(usize, usize, usize, f64, f64, f64) -> f64 + Send + Sync;

/// Field backed by a user closure `(dx, dy, dt, x, y, t) -> value`.
pub struct ClosureField {
    f: Box<DerivFn>,
}

impl ClosureField {
    pub fn new(f: impl Fn(usize, usize, usize, f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Box::new(f) }
    }
}

impl fmt::Debug for ClosureField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ClosureField")
    }
}

impl AnalyticField for ClosureField {
    fn deriv(&self, dx: usize, dy: usize, dt: usize, x: f64, y: f64, t: f64) -> f64 {
        (self.f)(dx, dy, dt, x, y, t)
    }
}

/// Constant field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField(pub f64);

impl AnalyticField for ConstantField {
    fn deriv(&self, dx: usize, dy: usize, dt: usize, _x: f64, _y: f64, _t: f64) -> f64 {
        if dx + dy + dt == 0 {
            self.0
        } else {
            0.0
        }
    }
}

/// View of a field with `x` and `y` exchanged.
pub struct Transposed<'a>(pub &'a dyn AnalyticField);

impl AnalyticField for Transposed<'_> {
    fn deriv(&self, dx: usize, dy: usize, dt: usize, x: f64, y: f64, t: f64) -> f64 {
        self.0.deriv(dy, dx, dt, y, x, t)
    }
}
