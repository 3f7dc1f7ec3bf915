//! Convection and diffusion numerical fluxes.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use crate::error::{DdgError, Result};

/// Scalar flux component `f(u)` with its first two derivatives.
pub trait ScalarFlux: Send + Sync + fmt::Debug {
    fn f(&self, u: f64) -> f64;
    fn df(&self, u: f64) -> f64;
    fn d2f(&self, u: f64) -> f64;

    /// `min_{a<=u<=b} f` if `a <= b`, otherwise `max_{b<=u<=a} f`.
    ///
    /// The default samples 1025 equispaced points plus the endpoints.
    fn godunov(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return self.f(a);
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        const SAMPLES: usize = 1025;
        let pick = |acc: f64, v: f64| if a < b { acc.min(v) } else { acc.max(v) };
        let mut best = pick(self.f(a), self.f(b));
        for s in 1..SAMPLES - 1 {
            let u = lo + (hi - lo) * s as f64 / (SAMPLES - 1) as f64;
            best = pick(best, self.f(u));
        }
        best
    }
}

/// `f(u) = u^2 / 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Burgers;

impl ScalarFlux for Burgers {
    fn f(&self, u: f64) -> f64 {
        0.5 * u * u
    }
    fn df(&self, u: f64) -> f64 {
        u
    }
    fn d2f(&self, _u: f64) -> f64 {
        1.0
    }
    fn godunov(&self, a: f64, b: f64) -> f64 {
        if a <= b {
            // convex with vertex at 0
            if a <= 0.0 && 0.0 <= b {
                0.0
            } else {
                self.f(a).min(self.f(b))
            }
        } else {
            self.f(a).max(self.f(b))
        }
    }
}

/// `f(u) = sin(u)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SineFlux;

impl ScalarFlux for SineFlux {
    fn f(&self, u: f64) -> f64 {
        u.sin()
    }
    fn df(&self, u: f64) -> f64 {
        u.cos()
    }
    fn d2f(&self, u: f64) -> f64 {
        -u.sin()
    }
    fn godunov(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let minimize = a <= b;
        let mut best = if minimize { self.f(a).min(self.f(b)) } else { self.f(a).max(self.f(b)) };
        // Extrema of sin lie at odd multiples of pi/2; for those inside the
        // interval sin takes the exact value +/-1.
        let mut n = (lo / FRAC_PI_2).ceil() as i64;
        while (n as f64) * FRAC_PI_2 <= hi {
            if n.rem_euclid(2) == 1 {
                let v = if n.rem_euclid(4) == 1 { 1.0 } else { -1.0 };
                best = if minimize { best.min(v) } else { best.max(v) };
            }
            n += 1;
        }
        best
    }
}

/// `f(u) = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroFlux;

impl ScalarFlux for ZeroFlux {
    fn f(&self, _u: f64) -> f64 {
        0.0
    }
    fn df(&self, _u: f64) -> f64 {
        0.0
    }
    fn d2f(&self, _u: f64) -> f64 {
        0.0
    }
    fn godunov(&self, _a: f64, _b: f64) -> f64 {
        0.0
    }
}

/// `f(u) = c u`.
#[derive(Debug, Clone, Copy)]
pub struct LinearFlux(pub f64);

impl ScalarFlux for LinearFlux {
    fn f(&self, u: f64) -> f64 {
        self.0 * u
    }
    fn df(&self, _u: f64) -> f64 {
        self.0
    }
    fn d2f(&self, _u: f64) -> f64 {
        0.0
    }
    fn godunov(&self, a: f64, b: f64) -> f64 {
        if a <= b {
            self.f(a).min(self.f(b))
        } else {
            self.f(a).max(self.f(b))
        }
    }
}

/// Numerical flux `fhat(u_1, u_2)` for one flux component, with side 1 the
/// cell the edge normal points away from.
pub type EFluxFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum ConvectionFlux {
    Godunov,
    /// User-supplied E-flux, one closure per component `(f_1, f_2)`.
    Custom([Arc<EFluxFn>; 2]),
}

impl fmt::Debug for ConvectionFlux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvectionFlux::Godunov => f.write_str("Godunov"),
            ConvectionFlux::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Diffusion flux coefficients and convection flux choice.
#[derive(Debug, Clone)]
pub struct FluxParams {
    pub beta0: f64,
    pub beta1: f64,
    pub convection: ConvectionFlux,
}

impl FluxParams {
    /// Godunov convection with the given diffusion coefficients. Logs a
    /// warning when `beta0 < Gamma(beta1)` for degree `k`.
    pub fn new(k: usize, beta0: f64, beta1: f64) -> Result<Self> {
        if !(beta0 >= 0.0) || !beta1.is_finite() {
            return Err(DdgError::InvalidArgument(format!(
                "invalid flux coefficients beta0={beta0}, beta1={beta1}"
            )));
        }
        let gamma = gamma_of_beta1(k, beta1)?;
        if beta0 < gamma {
            log::warn!("beta0 = {beta0} is below Gamma(beta1) = {gamma} for k = {k}; the scheme may be unstable");
        }
        Ok(Self { beta0, beta1, convection: ConvectionFlux::Godunov })
    }

    /// `beta1 = 1 / (2k(k+1))`, the value giving Lobatto/Gauss superconvergence.
    pub fn special_beta1(k: usize) -> f64 {
        1.0 / (2.0 * (k * (k + 1)) as f64)
    }

    pub fn is_stable_for(&self, k: usize) -> bool {
        gamma_of_beta1(k, self.beta1).map(|g| self.beta0 >= g).unwrap_or(false)
    }

    /// Convection flux for component `component` (0 for `f_1`, 1 for `f_2`).
    #[inline]
    pub fn convection_flux(&self, component: usize, flux: &dyn ScalarFlux, u1: f64, u2: f64) -> f64 {
        match &self.convection {
            ConvectionFlux::Godunov => flux.godunov(u1, u2),
            ConvectionFlux::Custom(fs) => fs[component](u1, u2),
        }
    }
}

/// `sup_{v in P^{k-1}} 2 (v(1) - 2 beta1 v'(1))^2 / int v^2`, in closed form
/// `sum_{m<k} (2m+1) (1 - beta1 m (m+1))^2`.
pub fn gamma_of_beta1(k: usize, beta1: f64) -> Result<f64> {
    if k < 1 {
        return Err(DdgError::InvalidArgument("Gamma(beta1) needs k >= 1".into()));
    }
    Ok((0..k)
        .map(|m| {
            let mf = m as f64;
            let d = 1.0 - beta1 * mf * (mf + 1.0);
            (2.0 * mf + 1.0) * d * d
        })
        .sum())
}

pub fn godunov(flux: &dyn ScalarFlux, a: f64, b: f64) -> f64 {
    flux.godunov(a, b)
}

/// `beta0 [u] / h + {u_n} + beta1 h [u_nn]`.
#[inline]
pub fn ddg_diffusion_flux(jump_u: f64, avg_un: f64, jump_unn: f64, h: f64, params: &FluxParams) -> f64 {
    params.beta0 / h * jump_u + avg_un + params.beta1 * h * jump_unn
}

/// Tolerance below which a jump is treated as zero in [`alpha_slope`].
pub fn alpha_tolerance(u_minus: f64, u_plus: f64) -> f64 {
    1e-12 * 1f64.max(u_minus.abs()).max(u_plus.abs())
}

/// `(fhat(u-, u+) - f(zeta)) / [u]`, with the smooth-data value 0 when the
/// jump is below `tol`.
pub fn alpha_slope(
    flux: &dyn ScalarFlux,
    params: &FluxParams,
    component: usize,
    u_minus: f64,
    u_plus: f64,
    zeta: f64,
    tol: f64,
) -> f64 {
    let jump = u_plus - u_minus;
    if jump.abs() < tol {
        return 0.0;
    }
    (params.convection_flux(component, flux, u_minus, u_plus) - flux.f(zeta)) / jump
}
