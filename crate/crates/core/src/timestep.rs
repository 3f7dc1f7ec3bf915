//! Classical fourth-order Runge-Kutta integration with a parabolic time
//! step `tau = cfl * h_min^2`.

use crate::error::{DdgError, Result};
use crate::field::DGField;
use crate::operator::OperatorContext;

/// Extent of the RK4 stability region along the negative real axis.
pub const RK4_REAL_STABILITY: f64 = 2.785;

/// Default `cfl` per degree, about 75% of the measured RK4 limit of the
/// diffusion operator with `beta0 = 12` and the special `beta1`.
pub fn default_cfl(k: usize) -> f64 {
    match k {
        0 | 1 => 0.0075,
        2 => 0.0044,
        3 => 0.0032,
        _ => 0.0027,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeConfig {
    pub t_final: f64,
    pub cfl: f64,
    pub max_steps: usize,
    /// Log progress every this many steps; 0 disables logging.
    pub log_stride: usize,
}

impl TimeConfig {
    pub fn new(t_final: f64, cfl: f64) -> Result<Self> {
        let cfg = Self { t_final, cfl, max_steps: 10_000_000, log_stride: 0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(DdgError::InvalidArgument(format!("t_final must be finite and >= 0, got {}", self.t_final)));
        }
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(DdgError::InvalidArgument(format!("cfl must be positive, got {}", self.cfl)));
        }
        Ok(())
    }

    /// `cfl * h^2` with `h` the smallest cell width.
    pub fn nominal_dt(&self, h_min: f64) -> f64 {
        self.cfl * h_min * h_min
    }
}

/// Power-iteration estimate of the spectral radius of the linearized
/// operator times `h_min^2`, and the matching largest stable `cfl`.
/// Sources and the convection flux are ignored.
pub fn estimate_cfl_limit(ctx: &OperatorContext, iterations: usize) -> Result<(f64, f64)> {
    let zero: std::sync::Arc<dyn crate::flux::ScalarFlux> = std::sync::Arc::new(crate::flux::ZeroFlux);
    let mut lin = ctx.clone();
    lin.flux = [zero.clone(), zero];
    lin.source = None;
    let mut u = DGField::zeros(ctx.mesh.clone(), ctx.degree());
    // deterministic, non-smooth start vector with components in every mode
    for (idx, v) in u.coeffs_mut().iter_mut().enumerate() {
        *v = ((idx as f64 + 1.0) * 0.618_033_988_749_895).fract() - 0.5;
    }
    let mut rho = 0.0;
    for _ in 0..iterations.max(1) {
        let r = lin.residual(&u, 0.0)?;
        let nr = lin.inner_product(&r, &r).sqrt();
        let nu = lin.inner_product(&u, &u).sqrt();
        if nr == 0.0 {
            return Err(DdgError::InvalidArgument("operator has an empty spectrum".into()));
        }
        rho = nr / nu;
        u = r;
        let s = 1.0 / nr;
        u.coeffs_mut().iter_mut().for_each(|v| *v *= s);
    }
    let h = ctx.mesh.min_width();
    Ok((rho * h * h, RK4_REAL_STABILITY / (rho * h * h)))
}

/// Per-step history of an integration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub steps: usize,
    pub dt: f64,
    pub mass: Vec<f64>,
    pub max_coeff: Vec<f64>,
}

/// One RK4 step of size `dt` from time `t`.
pub fn rk4_step(u: &DGField, t: f64, dt: f64, ctx: &OperatorContext) -> Result<DGField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DdgError::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let k1 = ctx.residual(u, t)?;
    let mut stage = u.clone();
    stage.axpy(0.5 * dt, &k1);
    let k2 = ctx.residual(&stage, t + 0.5 * dt)?;
    stage.coeffs_mut().copy_from_slice(u.coeffs());
    stage.axpy(0.5 * dt, &k2);
    let k3 = ctx.residual(&stage, t + 0.5 * dt)?;
    stage.coeffs_mut().copy_from_slice(u.coeffs());
    stage.axpy(dt, &k3);
    let k4 = ctx.residual(&stage, t + dt)?;
    let mut out = u.clone();
    for (o, (((a, b), c), d)) in out
        .coeffs_mut()
        .iter_mut()
        .zip(k1.coeffs().iter().zip(k2.coeffs()).zip(k3.coeffs()).zip(k4.coeffs()))
    {
        *o += dt / 6.0 * (a + 2.0 * b + 2.0 * c + d);
    }
    out.t = t + dt;
    Ok(out)
}

/// Integrate from `u0.t` to `cfg.t_final`, shortening the last step to land
/// on `t_final` exactly.
pub fn integrate(u0: &DGField, cfg: &TimeConfig, ctx: &OperatorContext) -> Result<(DGField, Diagnostics)> {
    cfg.validate()?;
    let dt = cfg.nominal_dt(ctx.mesh.min_width());
    let mut u = u0.clone();
    let t0 = u0.t;
    let mut diag = Diagnostics { steps: 0, dt, mass: vec![u.total_mass()], max_coeff: vec![u.max_abs_coeff()] };
    if cfg.t_final <= t0 {
        return Ok((u, diag));
    }
    let n_steps = ((cfg.t_final - t0) / dt - 1e-12).ceil().max(1.0) as usize;
    if n_steps > cfg.max_steps {
        return Err(DdgError::MaxStepsExceeded { max_steps: cfg.max_steps, t_final: cfg.t_final });
    }
    for step in 0..n_steps {
        let t = t0 + step as f64 * dt;
        let h = if step + 1 == n_steps { cfg.t_final - t } else { dt };
        u = rk4_step(&u, t, h, ctx).map_err(|e| match e {
            DdgError::NonFinite { .. } => DdgError::BlowUp { step, t },
            other => other,
        })?;
        if u.check_finite().is_err() {
            return Err(DdgError::BlowUp { step, t: t + h });
        }
        if step + 1 == n_steps {
            u.t = cfg.t_final;
        }
        diag.steps += 1;
        diag.mass.push(u.total_mass());
        diag.max_coeff.push(u.max_abs_coeff());
        if cfg.log_stride > 0 && (step + 1) % cfg.log_stride == 0 {
            log::info!(
                "step {} t={:.6} mass={:.3e} max|c|={:.3e}",
                step + 1,
                u.t,
                diag.mass.last().unwrap(),
                diag.max_coeff.last().unwrap()
            );
        }
    }
    Ok((u, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::TrigField;
    use crate::field::l2_project;
    use crate::flux::{Burgers, FluxParams, ScalarFlux, ZeroFlux};
    use crate::field::DGField;
    use crate::mesh::Mesh2D;
    use std::sync::Arc;

    fn ctx(n: usize, k: usize, flux: Arc<dyn ScalarFlux>) -> OperatorContext {
        let mesh = Arc::new(Mesh2D::uniform(n, n).unwrap());
        let params = FluxParams::new(k, 12.0, FluxParams::special_beta1(k)).unwrap();
        OperatorContext::new(mesh, k, params, [flux.clone(), flux], None).unwrap()
    }

    #[test]
    fn default_cfl_is_inside_measured_limit() {
        for k in 1..=4 {
            let (_, limit) = estimate_cfl_limit(&ctx(8, k, Arc::new(ZeroFlux)), 300).unwrap();
            assert!(default_cfl(k) < 0.8 * limit, "k={k}: limit {limit}");
            assert!(default_cfl(k) > 0.6 * limit, "k={k}: limit {limit}");
        }
    }

    #[test]
    fn stages_use_shifted_source_times() {
        // u' = 3 t^2 + 1 is integrated exactly by RK4 (Simpson in time).
        let mut c = ctx(4, 1, Arc::new(ZeroFlux));
        c.source = Some(Arc::new(|_x, _y, t: f64| 3.0 * t * t + 1.0));
        let u = DGField::zeros(c.mesh.clone(), 1);
        let v = rk4_step(&u, 0.2, 0.3, &c).unwrap();
        let exact = 0.5f64.powi(3) - 0.2f64.powi(3) + 0.3;
        for i in 0..4 {
            for j in 0..4 {
                assert!((v.coeff(i, j, 0, 0) - exact).abs() < 1e-14);
                assert!(v.coeff(i, j, 1, 1).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_state_is_unchanged() {
        let c = ctx(4, 2, Arc::new(Burgers));
        let u = l2_project(&crate::analytic::ConstantField(0.7), 0.0, c.mesh.clone(), 2).unwrap();
        let v = rk4_step(&u, 0.0, 1e-3, &c).unwrap();
        for (a, b) in u.coeffs().iter().zip(v.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_final_time_returns_input() {
        let c = ctx(4, 2, Arc::new(Burgers));
        let u = l2_project(&TrigField::manufactured(), 0.0, c.mesh.clone(), 2).unwrap();
        let (v, d) = integrate(&u, &TimeConfig::new(0.0, 0.05).unwrap(), &c).unwrap();
        assert_eq!(u, v);
        assert_eq!(d.steps, 0);
    }

    #[test]
    fn final_time_is_hit_exactly() {
        let c = ctx(4, 1, Arc::new(ZeroFlux));
        let u = l2_project(&TrigField::manufactured(), 0.0, c.mesh.clone(), 1).unwrap();
        let cfg = TimeConfig::new(0.1234, 0.05).unwrap();
        let (v, d) = integrate(&u, &cfg, &c).unwrap();
        assert_eq!(v.t, 0.1234);
        assert!(((d.steps - 1) as f64 * d.dt) < 0.1234 && d.steps as f64 * d.dt >= 0.1234 - 1e-14);
    }

    #[test]
    fn heat_mode_decays_like_exp_minus_t() {
        let decay = |n: usize| {
            let c = ctx(n, 2, Arc::new(ZeroFlux));
            let u0 = l2_project(&TrigField::steady(1.0, 0.0, 0.0), 0.0, c.mesh.clone(), 2).unwrap();
            let (u1, _) = integrate(&u0, &TimeConfig::new(0.5, default_cfl(2)).unwrap(), &c).unwrap();
            (u1.l2_norm() / u0.l2_norm()).ln() / 0.5
        };
        let (d8, d16) = (decay(8), decay(16));
        assert!((d16 + 1.0).abs() < 1e-4);
        assert!((d16 + 1.0).abs() <= (d8 + 1.0).abs());
    }

    #[test]
    fn mass_is_conserved_without_source() {
        let c = ctx(6, 2, Arc::new(Burgers));
        let u0 = l2_project(&TrigField { amplitude: 1.0, decay: 0.0, kx: 1.0, ky: 2.0, phase: 0.3 }, 0.0, c.mesh.clone(), 2)
            .unwrap();
        let mut u = u0.clone();
        u.axpy(1.0, &l2_project(&crate::analytic::ConstantField(0.4), 0.0, c.mesh.clone(), 2).unwrap());
        let cfg = TimeConfig { max_steps: 100, ..TimeConfig::new(100.0 * default_cfl(2) * c.mesh.min_width().powi(2), default_cfl(2)).unwrap() };
        let (_, d) = integrate(&u, &cfg, &c).unwrap();
        assert_eq!(d.steps, 100);
        let m0 = d.mass[0];
        assert!(d.mass.iter().all(|m| (m - m0).abs() <= 1e-10));
    }

    #[test]
    fn deterministic_runs() {
        let c = ctx(5, 2, Arc::new(Burgers));
        let u0 = l2_project(&TrigField::manufactured(), 0.0, c.mesh.clone(), 2).unwrap();
        let cfg = TimeConfig::new(0.01, default_cfl(2)).unwrap();
        let a = integrate(&u0, &cfg, &c).unwrap().0;
        let b = integrate(&u0, &cfg, &c).unwrap().0;
        assert_eq!(a.coeffs(), b.coeffs());
    }

    #[test]
    fn step_guard_and_blowup() {
        let c = ctx(4, 2, Arc::new(Burgers));
        let u0 = l2_project(&TrigField::manufactured(), 0.0, c.mesh.clone(), 2).unwrap();
        let cfg = TimeConfig { max_steps: 3, ..TimeConfig::new(1.0, 0.05).unwrap() };
        assert!(matches!(integrate(&u0, &cfg, &c), Err(DdgError::MaxStepsExceeded { .. })));
        // ten times the explicit diffusion limit
        let cfg = TimeConfig::new(20.0, 0.05).unwrap();
        assert!(matches!(integrate(&u0, &cfg, &c), Err(DdgError::BlowUp { .. })));
        assert!(rk4_step(&u0, 0.0, -1.0, &c).is_err());
    }
}
