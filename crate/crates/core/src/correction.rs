//! Correction functions `omega_l`, `omega_bar_l` and the corrected
//! projection `u_I^p = Pi_h u - sum_{l<=p} (Q^(y) omega_l + Q^(x) omega_bar_l)`.
//!
//! `omega_l` is piecewise `P^k` in `x` and smooth in `y`. It is built line by
//! line at fixed cross coordinates: for every `y` sample the modes
//! `m <= k - 2` come from the moment identity
//!
//! ```text
//! <omega_l, L_m> = <(d_t - d_yy) w + (f2'(u) w)_y, D^-1 D^-1 L_m> - <f1'(u) w, D^-1 L_m>
//! ```
//!
//! with `w = omega_{l-1}`, and the two top modes from the interface system
//! `{omega_l} = 0`, `DDG flux of omega_l = alpha_1 [omega_{l-1}]`.
//! `omega_0 = u - P^(x) u`. `omega_bar_l` is the same construction on the
//! transposed problem.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::analytic::{AnalyticField, Transposed};
use crate::error::{DdgError, Result};
use crate::field::DGField;
use crate::flux::{alpha_slope, alpha_tolerance, FluxParams, ScalarFlux};
use crate::mesh::{Axis, Mesh2D};
use crate::par::{self, Execution};
use crate::poly1d::{antiderivative_modal, modal_eval, Basis1D};
use crate::projections::{q_project_cell, LineProjector, TensorProjector, CONDITION_TOL};

/// Relative step for cross-direction finite differences, times the cross
/// cell width.
const FD_CROSS: f64 = 1e-2;
/// Time step for time finite differences.
const FD_TIME: f64 = 1e-3;

/// One correction level sampled at fixed cross-direction points.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionLevel {
    pub level: usize,
    /// Direction in which the level is piecewise polynomial: `X` for
    /// `omega_l`, `Y` for `omega_bar_l`.
    pub axis: Axis,
    pub k: usize,
    pub t: f64,
    /// Samples per cross cell: the Gauss nodes of `Basis1D::new(k)` followed
    /// by the lower and upper endpoints.
    pub samples_per_cell: usize,
    /// Cross coordinate of every sample, cell-major.
    pub cross_points: Vec<f64>,
    /// Modal coefficients along the polynomial direction, one vector of
    /// `n_along * (k + 1)` per sample.
    pub coeffs: Vec<Vec<f64>>,
    /// Largest relative residual of the interface conditions.
    pub condition_residual: f64,
}

impl CorrectionLevel {
    /// `Q` in the cross direction, returned as a field on `mesh`.
    pub fn q_project(&self, mesh: Arc<Mesh2D>) -> Result<DGField> {
        let k = self.k;
        let np = k + 1;
        let basis = Basis1D::new(k)?;
        let q = basis.n_quad();
        let cross = self.axis.other();
        let (n_along, n_cross) = (mesh.n(self.axis), mesh.n(cross));
        if self.coeffs.len() != n_cross * self.samples_per_cell || self.samples_per_cell != q + 2 {
            return Err(DdgError::InvalidArgument("correction samples do not match the mesh".into()));
        }
        let mut out = DGField::zeros(mesh.clone(), k);
        out.t = self.t;
        let mut quad = vec![0.0; q];
        for jc in 0..n_cross {
            let s = &self.coeffs[jc * (q + 2)..(jc + 1) * (q + 2)];
            for ia in 0..n_along {
                for m in 0..np {
                    for (a, qa) in quad.iter_mut().enumerate() {
                        *qa = s[a][ia * np + m];
                    }
                    let c = q_project_cell(&basis, &quad, s[q][ia * np + m], s[q + 1][ia * np + m]);
                    for (n, cn) in c.into_iter().enumerate() {
                        match self.axis {
                            Axis::X => out.set_coeff(ia, jc, m, n, cn),
                            Axis::Y => out.set_coeff(jc, ia, n, m, cn),
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Sampled discrete norm `sqrt(sum_j h_j sum_a w_a ||omega(., y_a)||^2)`
    /// over the Gauss samples, an approximation of `||omega_l||_0`.
    pub fn l2_norm(&self, mesh: &Mesh2D) -> Result<f64> {
        let basis = Basis1D::new(self.k)?;
        let q = basis.n_quad();
        let np = self.k + 1;
        let cross = self.axis.other();
        let mut acc = 0.0;
        for jc in 0..mesh.n(cross) {
            let hc = mesh.width(cross, jc);
            for a in 0..q {
                let c = &self.coeffs[jc * (q + 2) + a];
                let line: f64 = (0..mesh.n(self.axis))
                    .map(|i| {
                        let h = mesh.width(self.axis, i);
                        (0..np).map(|m| c[i * np + m].powi(2) * h / (2.0 * m as f64 + 1.0)).sum::<f64>()
                    })
                    .sum();
                acc += 0.5 * hc * basis.rule.weights[a] * line;
            }
        }
        Ok(acc.sqrt())
    }
}

/// Level data on one line: `w, w_t, w_y, w_yy` at the moment quadrature
/// nodes of every cell, and the interface jumps `[w]`.
struct LineData {
    vals: [Vec<f64>; 4],
    jumps: Vec<f64>,
}

/// Builder of the correction levels in one direction.
///
/// Coordinates are those of the oriented problem: the polynomial direction
/// is always the first axis of `mesh`.
pub struct DirectionalCorrection<'a> {
    u: Box<dyn AnalyticField + 'a>,
    axis: Axis,
    mesh: Arc<Mesh2D>,
    k: usize,
    params: FluxParams,
    flux_along: Arc<dyn ScalarFlux>,
    flux_cross: Arc<dyn ScalarFlux>,
    line: LineProjector,
    tensor: TensorProjector,
    moments: Basis1D,
    cross_basis: Basis1D,
    pih: Mutex<HashMap<u64, Arc<DGField>>>,
    exec: Execution,
}

impl<'a> DirectionalCorrection<'a> {
    /// Builder for `omega_l` (`axis = X`) or `omega_bar_l` (`axis = Y`).
    pub fn new(
        u: &'a dyn AnalyticField,
        axis: Axis,
        mesh: &Mesh2D,
        k: usize,
        params: &FluxParams,
        flux: [Arc<dyn ScalarFlux>; 2],
    ) -> Result<Self> {
        if k < 1 {
            return Err(DdgError::InvalidArgument("degree must be at least 1".into()));
        }
        let (u, mesh, fa, fc): (Box<dyn AnalyticField + 'a>, Mesh2D, _, _) = match axis {
            Axis::X => (Box::new(Ref(u)), mesh.clone(), flux[0].clone(), flux[1].clone()),
            Axis::Y => (
                Box::new(Transposed(u)),
                Mesh2D::from_nodes(mesh.nodes(Axis::Y).to_vec(), mesh.nodes(Axis::X).to_vec())?,
                flux[1].clone(),
                flux[0].clone(),
            ),
        };
        let mesh = Arc::new(mesh);
        Ok(Self {
            line: LineProjector::from_mesh(&mesh, Axis::X, k, params)?,
            tensor: TensorProjector::new(mesh.clone(), k, params)?,
            moments: Basis1D::with_quadrature(k, k + 5)?,
            cross_basis: Basis1D::new(k)?,
            u,
            axis,
            mesh,
            k,
            params: params.clone(),
            flux_along: fa,
            flux_cross: fc,
            pih: Mutex::new(HashMap::new()),
            exec: Execution::default(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self.tensor = self.tensor.with_execution(exec);
        self
    }

    fn pi_h(&self, t: f64) -> Result<Arc<DGField>> {
        if let Some(f) = self.pih.lock().unwrap().get(&t.to_bits()) {
            return Ok(f.clone());
        }
        let f = Arc::new(self.tensor.pi_h(&*self.u, t)?);
        self.pih.lock().unwrap().insert(t.to_bits(), f.clone());
        Ok(f)
    }

    /// Cross coordinates of the samples of cross cell `j`.
    fn cross_points(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.cross_basis
            .rule
            .nodes
            .iter()
            .copied()
            .chain([-1.0, 1.0])
            .map(move |s| self.mesh.to_physical(Axis::Y, j, s))
    }

    /// `alpha_1` at every interface of the line `y` (inside or just outside
    /// cross cell `j`), from the traces of `Pi_h u`.
    fn alpha(&self, j: usize, y: f64, t: f64) -> Result<Vec<f64>> {
        let pih = self.pi_h(t)?;
        let sy = 2.0 * (y - self.mesh.node(Axis::Y, j)) / self.mesh.hy(j) - 1.0;
        let n = self.mesh.nx();
        Ok((0..n)
            .map(|i| {
                let um = pih.eval_all_unchecked(i, j, 1.0, sy)[0];
                let up = pih.eval_all_unchecked((i + 1) % n, j, -1.0, sy)[0];
                alpha_slope(&*self.flux_along, &self.params, 0, um, up, 0.5 * (um + up), alpha_tolerance(um, up))
            })
            .collect())
    }

    /// Level-0 data `E^x u` and its `t`, `y`, `yy` derivatives on line `y`.
    fn level0(&self, y: f64, t: f64) -> Result<LineData> {
        let (n, np) = (self.mesh.nx(), self.k + 1);
        let x0 = self.mesh.node(Axis::X, 0);
        let derivs = [(0usize, 0usize), (1, 0), (0, 1), (0, 2)];
        let mut vals: [Vec<f64>; 4] = Default::default();
        let mut jumps = Vec::new();
        for (slot, &(dt, dy)) in derivs.iter().enumerate() {
            let c = self.line.project(&self.line.sample(x0, |d, x| self.u.deriv(d, dy, dt, x, y, t)))?;
            let mut v = Vec::with_capacity(n * self.moments.n_quad());
            for i in 0..n {
                for &r in &self.moments.rule.nodes {
                    let x = self.mesh.to_physical(Axis::X, i, r);
                    v.push(self.u.deriv(0, dy, dt, x, y, t) - modal_eval(&c[i * np..(i + 1) * np], r));
                }
            }
            vals[slot] = v;
            if slot == 0 {
                jumps = (0..n).map(|i| -self.line.interface_data(&c, i).jump).collect();
            }
        }
        Ok(LineData { vals, jumps })
    }

    /// Level-`l` data (`l >= 1`) on line `y`, derivatives by central
    /// differences of the pointwise construction.
    fn level_data(&self, l: usize, j: usize, y: f64, t: f64) -> Result<LineData> {
        if l == 0 {
            return self.level0(y, t);
        }
        let dy = FD_CROSS * self.mesh.hy(j);
        let c = self.line_coeffs(l, j, y, t)?;
        let cyp = self.line_coeffs(l, j, y + dy, t)?;
        let cym = self.line_coeffs(l, j, y - dy, t)?;
        let ctp = self.line_coeffs(l, j, y, t + FD_TIME)?;
        let ctm = self.line_coeffs(l, j, y, t - FD_TIME)?;
        let ct: Vec<f64> = ctp.iter().zip(&ctm).map(|(a, b)| (a - b) / (2.0 * FD_TIME)).collect();
        let cy: Vec<f64> = cyp.iter().zip(&cym).map(|(a, b)| (a - b) / (2.0 * dy)).collect();
        let cyy: Vec<f64> = (0..c.len()).map(|r| (cyp[r] - 2.0 * c[r] + cym[r]) / (dy * dy)).collect();
        let (n, np) = (self.mesh.nx(), self.k + 1);
        let eval = |cc: &[f64]| -> Vec<f64> {
            let mut v = Vec::with_capacity(n * self.moments.n_quad());
            for i in 0..n {
                for a in 0..self.moments.n_quad() {
                    v.push((0..np).map(|m| cc[i * np + m] * self.moments.node(a, m, 0)).sum());
                }
            }
            v
        };
        Ok(LineData {
            vals: [eval(&c), eval(&ct), eval(&cy), eval(&cyy)],
            jumps: (0..n).map(|i| self.line.interface_data(&c, i).jump).collect(),
        })
    }

    /// Coefficients of `omega_l` on line `y`.
    fn line_coeffs(&self, l: usize, j: usize, y: f64, t: f64) -> Result<Vec<f64>> {
        self.line_coeffs_checked(l, j, y, t).map(|(c, _)| c)
    }

    fn line_coeffs_checked(&self, l: usize, j: usize, y: f64, t: f64) -> Result<(Vec<f64>, f64)> {
        let prev = self.level_data(l - 1, j, y, t)?;
        let (n, k) = (self.mesh.nx(), self.k);
        let np = k + 1;
        let nq = self.moments.n_quad();
        let mut c = vec![0.0; n * np];
        for i in 0..n {
            let h = self.mesh.hx(i);
            // D^-1 L_m and D^-1 D^-1 L_m at the quadrature nodes
            let mut g_in = Vec::with_capacity(nq);
            for (a, &r) in self.moments.rule.nodes.iter().enumerate() {
                let x = self.mesh.to_physical(Axis::X, i, r);
                let u = self.u.value(x, y, t);
                let uy = self.u.deriv(0, 1, 0, x, y, t);
                let idx = i * nq + a;
                let w = prev.vals[0][idx];
                let body = prev.vals[1][idx] - prev.vals[3][idx]
                    + self.flux_cross.d2f(u) * uy * w
                    + self.flux_cross.df(u) * prev.vals[2][idx];
                g_in.push((body, self.flux_along.df(u) * w));
            }
            for m in 0..k.saturating_sub(1) {
                let mut e = vec![0.0; m + 1];
                e[m] = 1.0;
                let d1 = antiderivative_modal(&e, h);
                let d2 = antiderivative_modal(&d1, h);
                let acc: f64 = self
                    .moments
                    .rule
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(a, &r)| self.moments.rule.weights[a] * (g_in[a].0 * modal_eval(&d2, r) - g_in[a].1 * modal_eval(&d1, r)))
                    .sum();
                c[i * np + m] = (2.0 * m as f64 + 1.0) / h * 0.5 * h * acc;
            }
        }
        let alpha = self.alpha(j, y, t)?;
        let flux: Vec<f64> = alpha.iter().zip(&prev.jumps).map(|(a, jmp)| a * jmp).collect();
        let zero = vec![0.0; n];
        self.line.complete(&mut c, &zero, &flux)?;
        let res = self.line.interface_residual(&c, &zero, &flux);
        if res > CONDITION_TOL {
            return Err(DdgError::ConditionViolated { what: format!("correction level {l} interface conditions"), residual: res, tol: CONDITION_TOL });
        }
        Ok((c, res))
    }

    /// `omega_l` (or `omega_bar_l`) at time `t`, sampled at every cross point.
    pub fn level(&self, l: usize, t: f64) -> Result<CorrectionLevel> {
        if l == 0 || l >= self.k {
            return Err(DdgError::InvalidArgument(format!("correction level {l} outside 1..={}", self.k.saturating_sub(1))));
        }
        let spc = self.cross_basis.n_quad() + 2;
        let pts: Vec<(usize, f64)> =
            (0..self.mesh.ny()).flat_map(|j| self.cross_points(j).map(move |y| (j, y))).collect();
        // warm the cache before the parallel section
        self.pi_h(t)?;
        let out = par::map_indices(self.exec, pts.len(), |s| self.line_coeffs_checked(l, pts[s].0, pts[s].1, t));
        let mut coeffs = Vec::with_capacity(pts.len());
        let mut worst: f64 = 0.0;
        for r in out {
            let (c, res) = r?;
            worst = worst.max(res);
            coeffs.push(c);
        }
        Ok(CorrectionLevel {
            level: l,
            axis: self.axis,
            k: self.k,
            t,
            samples_per_cell: spc,
            cross_points: pts.into_iter().map(|p| p.1).collect(),
            coeffs,
            condition_residual: worst,
        })
    }

    /// `d/dy` of level `l` at its samples, by central differences of the
    /// construction.
    pub fn cross_derivative(&self, l: usize, t: f64) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::new();
        for j in 0..self.mesh.ny() {
            let dy = FD_CROSS * self.mesh.hy(j);
            for y in self.cross_points(j) {
                let a = self.line_coeffs(l, j, y + dy, t)?;
                let b = self.line_coeffs(l, j, y - dy, t)?;
                out.push(a.iter().zip(&b).map(|(p, q)| (p - q) / (2.0 * dy)).collect());
            }
        }
        Ok(out)
    }

    /// Oriented mesh of the construction.
    pub fn mesh(&self) -> &Arc<Mesh2D> {
        &self.mesh
    }
}

struct Ref<'a>(&'a dyn AnalyticField);

impl AnalyticField for Ref<'_> {
    fn deriv(&self, dx: usize, dy: usize, dt: usize, x: f64, y: f64, t: f64) -> f64 {
        self.0.deriv(dx, dy, dt, x, y, t)
    }
}

/// `omega_l` at time `t`.
pub fn build_omega(
    l: usize,
    u: &dyn AnalyticField,
    t: f64,
    mesh: &Mesh2D,
    k: usize,
    params: &FluxParams,
    flux: [Arc<dyn ScalarFlux>; 2],
) -> Result<CorrectionLevel> {
    DirectionalCorrection::new(u, Axis::X, mesh, k, params, flux)?.level(l, t)
}

/// `omega_bar_l` at time `t`.
pub fn build_omega_bar(
    l: usize,
    u: &dyn AnalyticField,
    t: f64,
    mesh: &Mesh2D,
    k: usize,
    params: &FluxParams,
    flux: [Arc<dyn ScalarFlux>; 2],
) -> Result<CorrectionLevel> {
    DirectionalCorrection::new(u, Axis::Y, mesh, k, params, flux)?.level(l, t)
}

/// `omega^p = sum_{l<=p} (Q^(y) omega_l + Q^(x) omega_bar_l)` as a field.
pub fn final_correction(
    u: &dyn AnalyticField,
    t: f64,
    p: usize,
    mesh: Arc<Mesh2D>,
    k: usize,
    params: &FluxParams,
    flux: [Arc<dyn ScalarFlux>; 2],
) -> Result<DGField> {
    if p >= k.max(1) {
        return Err(DdgError::InvalidArgument(format!("correction order p = {p} must satisfy 0 <= p <= k - 1 = {}", k - 1)));
    }
    let mut omega = DGField::zeros(mesh.clone(), k);
    omega.t = t;
    if p == 0 {
        return Ok(omega);
    }
    for axis in [Axis::X, Axis::Y] {
        let b = DirectionalCorrection::new(u, axis, &mesh, k, params, flux.clone())?;
        for l in 1..=p {
            let lev = b.level(l, t)?;
            log::debug!("correction {axis:?} level {l}: residual {:.1e}", lev.condition_residual);
            omega.axpy(1.0, &lev.q_project(mesh.clone())?);
        }
    }
    Ok(omega)
}

/// The corrected projection `u_I^p = Pi_h u - omega^p`.
pub fn corrected_projection(
    u: &dyn AnalyticField,
    t: f64,
    p: usize,
    mesh: Arc<Mesh2D>,
    k: usize,
    params: &FluxParams,
    flux: [Arc<dyn ScalarFlux>; 2],
) -> Result<DGField> {
    let omega = final_correction(u, t, p, mesh.clone(), k, params, flux)?;
    let mut ui = TensorProjector::new(mesh, k, params)?.pi_h(u, t)?;
    ui.axpy(-1.0, &omega);
    Ok(ui)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{ClosureField, ConstantField, TrigField};
    use crate::flux::{Burgers, SineFlux};

    fn burgers() -> [Arc<dyn ScalarFlux>; 2] {
        [Arc::new(Burgers), Arc::new(Burgers)]
    }

    fn params(k: usize) -> FluxParams {
        FluxParams::new(k, 12.0, FluxParams::special_beta1(k)).unwrap()
    }

    #[test]
    fn constant_field_has_zero_correction() {
        let mesh = Mesh2D::uniform(4, 5).unwrap();
        let lev = build_omega(1, &ConstantField(0.7), 0.0, &mesh, 2, &params(2), burgers()).unwrap();
        assert!(lev.coeffs.iter().flatten().all(|c| c.abs() < 1e-14));
        let bar = build_omega_bar(1, &ConstantField(0.7), 0.0, &mesh, 2, &params(2), burgers()).unwrap();
        assert!(bar.coeffs.iter().flatten().all(|c| c.abs() < 1e-14));
    }

    #[test]
    fn p_zero_is_pi_h_and_p_range_checked() {
        let mesh = Arc::new(Mesh2D::uniform(4, 4).unwrap());
        let u = TrigField::manufactured();
        let a = corrected_projection(&u, 0.0, 0, mesh.clone(), 2, &params(2), burgers()).unwrap();
        let b = crate::projections::project_pi_h(&u, 0.0, mesh.clone(), 2, &params(2)).unwrap();
        assert_eq!(a, b);
        assert!(corrected_projection(&u, 0.0, 2, mesh.clone(), 2, &params(2), burgers()).is_err());
        assert!(build_omega(2, &u, 0.0, &mesh, 2, &params(2), burgers()).is_err());
    }

    #[test]
    fn level_one_satisfies_moment_identity() {
        // Independent oracle: moments of omega_1 against L_0 for k = 2,
        // with E^x u derivatives in y by finite differences and a finer rule.
        let k = 2;
        let mesh = Mesh2D::uniform(6, 5).unwrap();
        let u = TrigField::manufactured();
        let pr = params(k);
        let lev = build_omega(1, &u, 0.2, &mesh, k, &pr, burgers()).unwrap();
        let line = LineProjector::from_mesh(&mesh, Axis::X, k, &pr).unwrap();
        let ex = |y: f64, t: f64| -> Vec<f64> { line.project(&line.sample(0.0, |d, x| u.deriv(d, 0, 0, x, y, t))).unwrap() };
        let fine = crate::poly1d::gauss_rule(12).unwrap();
        let s = 7; // some sample
        let y = lev.cross_points[s];
        let d = 1e-3;
        let (c0, cp, cm) = (ex(y, 0.2), ex(y + d, 0.2), ex(y - d, 0.2));
        let (ctp, ctm) = (ex(y, 0.2 + d), ex(y, 0.2 - d));
        for i in 0..mesh.nx() {
            let h = mesh.hx(i);
            let mut acc = 0.0;
            for (a, &r) in fine.nodes.iter().enumerate() {
                let x = mesh.to_physical(Axis::X, i, r);
                let e = |cc: &[f64], yy: f64, tt: f64| u.value(x, yy, tt) - modal_eval(&cc[i * 3..i * 3 + 3], r);
                let w = e(&c0, y, 0.2);
                let wy = (e(&cp, y + d, 0.2) - e(&cm, y - d, 0.2)) / (2.0 * d);
                let wyy = (e(&cp, y + d, 0.2) - 2.0 * w + e(&cm, y - d, 0.2)) / (d * d);
                let wt = (e(&ctp, y, 0.2 + d) - e(&ctm, y, 0.2 - d)) / (2.0 * d);
                let uu = u.value(x, y, 0.2);
                let uy = u.deriv(0, 1, 0, x, y, 0.2);
                // D^-1 1 = (x - x_l), D^-1 D^-1 1 = (x - x_l)^2 / 2
                let xi = 0.5 * h * (r + 1.0);
                let body = wt - wyy + uy * w + uu * wy;
                acc += fine.weights[a] * 0.5 * h * (body * 0.5 * xi * xi - uu * w * xi);
            }
            let want = acc / h;
            assert!((lev.coeffs[s][i * 3] - want).abs() < 1e-5 * want.abs().max(1e-6), "cell {i}: {} vs {want}", lev.coeffs[s][i * 3]);
        }
    }

    #[test]
    fn interface_conditions_hold() {
        let mesh = Mesh2D::uniform(6, 6).unwrap();
        let u = TrigField::manufactured();
        for k in [2usize, 3] {
            let b = DirectionalCorrection::new(&u, Axis::X, &mesh, k, &params(k), burgers()).unwrap();
            let lev = b.level(1, 0.0).unwrap();
            assert!(lev.condition_residual < 1e-10);
            let line = LineProjector::from_mesh(&mesh, Axis::X, k, &params(k)).unwrap();
            for c in &lev.coeffs {
                for i in 0..6 {
                    assert!(line.interface_data(c, i).sum.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn omega_one_slope() {
        let u = TrigField::manufactured();
        for k in [2usize, 3] {
            let norm = |n: usize| {
                let mesh = Mesh2D::uniform(n, n).unwrap();
                build_omega(1, &u, 0.0, &mesh, k, &params(k), burgers()).unwrap().l2_norm(&mesh).unwrap()
            };
            let slope = (norm(8) / norm(16)).log2();
            assert!(slope >= k as f64 + 1.7, "k={k} slope {slope}");
        }
    }

    #[test]
    fn omega_bar_is_omega_of_transposed_problem() {
        // f1 != f2, u not symmetric, mesh not square
        let mesh = Mesh2D::from_nodes(
            vec![0.0, 1.1, 2.0, 3.3, 4.6, 2.0 * std::f64::consts::PI],
            vec![0.0, 1.6, 3.0, 4.4, 2.0 * std::f64::consts::PI],
        )
        .unwrap();
        let u = ClosureField::new(|dx, dy, dt, x, y, t| {
            let a = (-3.0f64).powi(dt as i32) * (-3.0 * t).exp();
            let th = x + 2.0 * y;
            let base = match (dx + dy) % 4 {
                0 => th.sin(),
                1 => th.cos(),
                2 => -th.sin(),
                _ => -th.cos(),
            };
            a * base * 2f64.powi(dy as i32)
        });
        let flux: [Arc<dyn ScalarFlux>; 2] = [Arc::new(Burgers), Arc::new(SineFlux)];
        let bar = build_omega_bar(1, &u, 0.1, &mesh, 2, &params(2), flux.clone()).unwrap();
        let tmesh = Mesh2D::from_nodes(mesh.nodes(Axis::Y).to_vec(), mesh.nodes(Axis::X).to_vec()).unwrap();
        let tu = Transposed(&u);
        let om = build_omega(1, &tu, 0.1, &tmesh, 2, &params(2), [flux[1].clone(), flux[0].clone()]).unwrap();
        assert_eq!(bar.coeffs.len(), om.coeffs.len());
        for (a, b) in bar.coeffs.iter().flatten().zip(om.coeffs.iter().flatten()) {
            assert!((a - b).abs() < 1e-14);
        }
        let fa = bar.q_project(Arc::new(mesh.clone())).unwrap();
        let fb = om.q_project(Arc::new(tmesh)).unwrap();
        for i in 0..mesh.nx() {
            for j in 0..mesh.ny() {
                for m in 0..3 {
                    for n in 0..3 {
                        assert_eq!(fa.coeff(i, j, m, n), fb.coeff(j, i, n, m));
                    }
                }
            }
        }
    }

    #[test]
    fn symmetric_problem_gives_transposed_corrections() {
        let mesh = Arc::new(Mesh2D::uniform(5, 5).unwrap());
        let u = TrigField::manufactured();
        let a = build_omega(1, &u, 0.0, &mesh, 2, &params(2), burgers()).unwrap().q_project(mesh.clone()).unwrap();
        let b = build_omega_bar(1, &u, 0.0, &mesh, 2, &params(2), burgers()).unwrap().q_project(mesh.clone()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                for m in 0..3 {
                    for n in 0..3 {
                        assert!((a.coeff(i, j, m, n) - b.coeff(j, i, n, m)).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn node_averages_are_preserved() {
        let mesh = Arc::new(Mesh2D::uniform(6, 6).unwrap());
        let u = TrigField::manufactured();
        let ui = corrected_projection(&u, 0.0, 1, mesh.clone(), 2, &params(2), burgers()).unwrap();
        let pi = crate::projections::project_pi_h(&u, 0.0, mesh.clone(), 2, &params(2)).unwrap();
        let avg = |f: &DGField, i: usize, j: usize| {
            let (ip, jp) = ((i + 1) % 6, (j + 1) % 6);
            0.25 * (f.eval(i, j, 1.0, 1.0).unwrap()
                + f.eval(ip, j, -1.0, 1.0).unwrap()
                + f.eval(i, jp, 1.0, -1.0).unwrap()
                + f.eval(ip, jp, -1.0, -1.0).unwrap())
        };
        for i in 0..6 {
            for j in 0..6 {
                assert!((avg(&ui, i, j) - avg(&pi, i, j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn corrected_projection_distance_slope() {
        let u = TrigField::manufactured();
        let d = |n: usize| {
            let mesh = Arc::new(Mesh2D::uniform(n, n).unwrap());
            final_correction(&u, 0.0, 1, mesh, 2, &params(2), burgers()).unwrap().l2_norm()
        };
        let slope = (d(8) / d(16)).log2();
        assert!(slope >= 3.5, "slope {slope}");
    }

    #[test]
    fn cross_derivative_is_step_consistent() {
        let mesh = Mesh2D::uniform(6, 6).unwrap();
        let u = TrigField::manufactured();
        let b = DirectionalCorrection::new(&u, Axis::X, &mesh, 2, &params(2), burgers()).unwrap();
        let d1 = b.cross_derivative(1, 0.0).unwrap();
        let lev = b.level(1, 0.0).unwrap();
        let spc = lev.samples_per_cell;
        for j in 0..6 {
            let y = lev.cross_points[j * spc];
            let hstep = 0.05 * mesh.hy(j);
            let a = b.line_coeffs(1, j, y + hstep, 0.0).unwrap();
            let c = b.line_coeffs(1, j, y - hstep, 0.0).unwrap();
            let scale = d1[j * spc].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for r in 0..a.len() {
                let coarse = (a[r] - c[r]) / (2.0 * hstep);
                assert!((coarse - d1[j * spc][r]).abs() < 1e-2 * scale);
            }
        }
    }

    #[test]
    fn level_two_for_cubics() {
        let u = TrigField::manufactured();
        let norms = |n: usize| {
            let mesh = Mesh2D::uniform(n, n).unwrap();
            let b = DirectionalCorrection::new(&u, Axis::X, &mesh, 3, &params(3), burgers()).unwrap();
            let l2 = b.level(2, 0.0).unwrap();
            assert!(l2.condition_residual < 1e-10);
            (b.level(1, 0.0).unwrap().l2_norm(&mesh).unwrap(), l2.l2_norm(&mesh).unwrap())
        };
        let (a1, a2) = norms(4);
        let (b1, b2) = norms(8);
        assert!((a1 / b1).log2() >= 4.7);
        assert!((a2 / b2).log2() >= 5.7);
        assert!(b2 < b1);
    }
}
