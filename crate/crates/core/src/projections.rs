//! Special projections: the directional DDG projection `P`, its tensor
//! product `Pi_h = P^(x) (x) P^(y)`, the Gauss-Lobatto projection `Q`, and the
//! Lobatto interpolant `I_h`.
//!
//! On a periodic line of cells, `P v` matches the moments of `v` against
//! `P^{k-2}` in every cell, and at every interface `x_{i+1/2}`
//!
//! ```text
//! {P v} = {v},   beta0/h [P v] + {(P v)_x} + beta1 h [(P v)_xx] = v_x.
//! ```
//!
//! The two top modes of all cells are coupled through a block-circulant
//! system with one 2x2 block row per interface.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::analytic::AnalyticField;
use crate::error::{DdgError, Result};
use crate::field::DGField;
use crate::flux::FluxParams;
use crate::mesh::{Axis, Mesh2D};
use crate::par::{self, Execution};
use crate::poly1d::{lobatto_to_legendre, Basis1D};

/// Residual bound for the a-posteriori checks of the defining conditions.
pub const CONDITION_TOL: f64 = 1e-9;
/// Relative residual bound for circulant solves.
pub const SOLVE_TOL: f64 = 1e-10;
/// Condition number above which a circulant system is reported singular.
const SINGULAR_CONDITION: f64 = 1e13;

type Block = [[f64; 2]; 2];

/// Block system with rows `A_i c_i + B_i c_{i+1} = b_i` (indices mod `N`).
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantBlockSystem {
    pub a: Vec<Block>,
    pub b: Vec<Block>,
}

impl CirculantBlockSystem {
    pub fn uniform(n: usize, a: Block, b: Block) -> Result<Self> {
        Self::new(vec![a; n], vec![b; n])
    }

    pub fn new(a: Vec<Block>, b: Vec<Block>) -> Result<Self> {
        if a.len() != b.len() || a.len() < 2 {
            return Err(DdgError::InvalidArgument(format!(
                "circulant system needs N >= 2 matching blocks, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// Dense `2N x 2N` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            let ip = (i + 1) % n;
            for r in 0..2 {
                for c in 0..2 {
                    m[(2 * i + r, 2 * i + c)] += self.a[i][r][c];
                    m[(2 * i + r, 2 * ip + c)] += self.b[i][r][c];
                }
            }
        }
        m
    }

    /// `M c`.
    pub fn apply(&self, c: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let (x, y) = (c[i], c[(i + 1) % n]);
                let (a, b) = (&self.a[i], &self.b[i]);
                [
                    a[0][0] * x[0] + a[0][1] * x[1] + b[0][0] * y[0] + b[0][1] * y[1],
                    a[1][0] * x[0] + a[1][1] * x[1] + b[1][0] * y[0] + b[1][1] * y[1],
                ]
            })
            .collect()
    }

    pub fn factor(&self) -> Result<CirculantSolver> {
        let m = self.matrix();
        let n = self.n();
        let norm1 = |m: &DMatrix<f64>| m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
        let lu = m.clone().lu();
        let condition = match lu.try_inverse() {
            Some(inv) => norm1(&m) * norm1(&inv),
            None => f64::INFINITY,
        };
        if !(condition < SINGULAR_CONDITION) {
            return Err(DdgError::SingularSystem { n, condition });
        }
        Ok(CirculantSolver { system: self.clone(), lu, condition })
    }

    pub fn solve(&self, rhs: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
        self.factor()?.solve(rhs)
    }
}

/// LU factorization of a [`CirculantBlockSystem`], reusable across
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct CirculantSolver {
    system: CirculantBlockSystem,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    condition: f64,
}

impl CirculantSolver {
    /// 1-norm condition number of `M`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn system(&self) -> &CirculantBlockSystem {
        &self.system
    }

    /// Solve `M c = b`; the residual is checked against `1e-10 ||b||`.
    pub fn solve(&self, rhs: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
        let n = self.system.n();
        if rhs.len() != n {
            return Err(DdgError::InvalidArgument(format!("rhs has {} blocks, system has {n}", rhs.len())));
        }
        let b = DVector::from_iterator(2 * n, rhs.iter().flat_map(|r| r.iter().copied()));
        let x = self
            .lu
            .solve(&b)
            .ok_or(DdgError::SingularSystem { n, condition: self.condition })?;
        let c: Vec<[f64; 2]> = (0..n).map(|i| [x[2 * i], x[2 * i + 1]]).collect();
        let mc = self.system.apply(&c);
        let res = mc
            .iter()
            .zip(rhs)
            .map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
            .sum::<f64>()
            .sqrt();
        let bn = b.norm();
        if res > SOLVE_TOL * bn.max(f64::MIN_POSITIVE) && res > 0.0 {
            return Err(DdgError::ConditionViolated { what: "circulant solve".into(), residual: res / bn, tol: SOLVE_TOL });
        }
        Ok(c)
    }
}

/// Samples of a function along one periodic line of cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LineSamples {
    /// Values at the quadrature nodes, cell-major (`n_cells * n_quad`).
    pub quad: Vec<f64>,
    /// Value at the upper end of every cell (interface `i + 1/2`).
    pub node_value: Vec<f64>,
    /// Derivative along the line at the same interfaces.
    pub node_deriv: Vec<f64>,
}

/// Interface quantities of a piecewise polynomial on a line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceData {
    /// `u_i(1) + u_{i+1}(-1)`, twice the average.
    pub sum: f64,
    pub jump: f64,
    /// DDG flux `beta0/h [u] + {u_x} + beta1 h [u_xx]`.
    pub flux: f64,
}

/// The directional DDG projection on one periodic line of cells.
#[derive(Debug, Clone)]
pub struct LineProjector {
    k: usize,
    basis: Basis1D,
    params: FluxParams,
    widths: Vec<f64>,
    solver: CirculantSolver,
    /// `H_i g0_i(m)` and `H_i g1_i(m)` rows for every interface.
    g0: Vec<Vec<f64>>,
    g1: Vec<Vec<f64>>,
}

impl LineProjector {
    pub fn new(widths: Vec<f64>, k: usize, params: &FluxParams) -> Result<Self> {
        let basis = Basis1D::new(k)?;
        let n = widths.len();
        if n < 2 {
            return Err(DdgError::InvalidArgument("a periodic line needs at least 2 cells".into()));
        }
        let (b0, b1) = (params.beta0, params.beta1);
        let mut g0 = Vec::with_capacity(n);
        let mut g1 = Vec::with_capacity(n);
        for i in 0..n {
            let (hl, hr) = (widths[i], widths[(i + 1) % n]);
            let hi = 0.5 * (hl + hr);
            // flux * H, split into the contributions of both cells
            g0.push(
                (0..=k)
                    .map(|m| {
                        -b0 * basis.right(m, 0) + hi / hl * basis.right(m, 1)
                            - 4.0 * b1 * hi * hi / (hl * hl) * basis.right(m, 2)
                    })
                    .collect::<Vec<_>>(),
            );
            g1.push(
                (0..=k)
                    .map(|m| {
                        b0 * basis.left(m, 0)
                            + hi / hr * basis.left(m, 1)
                            + 4.0 * b1 * hi * hi / (hr * hr) * basis.left(m, 2)
                    })
                    .collect::<Vec<_>>(),
            );
        }
        let (p, q) = (k - 1, k);
        let a = (0..n).map(|i| [[basis.right(p, 0), basis.right(q, 0)], [g0[i][p], g0[i][q]]]).collect();
        let b = (0..n).map(|i| [[basis.left(p, 0), basis.left(q, 0)], [g1[i][p], g1[i][q]]]).collect();
        let solver = CirculantBlockSystem::new(a, b)?.factor()?;
        Ok(Self { k, basis, params: params.clone(), widths, solver, g0, g1 })
    }

    pub fn from_mesh(mesh: &Mesh2D, axis: Axis, k: usize, params: &FluxParams) -> Result<Self> {
        Self::new(mesh.nodes(axis).windows(2).map(|w| w[1] - w[0]).collect(), k, params)
    }

    pub fn n(&self) -> usize {
        self.widths.len()
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn basis(&self) -> &Basis1D {
        &self.basis
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn solver(&self) -> &CirculantSolver {
        &self.solver
    }

    fn interface_width(&self, i: usize) -> f64 {
        0.5 * (self.widths[i] + self.widths[(i + 1) % self.n()])
    }

    /// `(2m+1)/2 int_{-1}^1 v L_m ds` for the modes `m <= k - 2`.
    fn low_moments(&self, quad: &[f64], out: &mut [f64]) {
        let b = &self.basis;
        for m in 0..self.k.saturating_sub(1) {
            let mut acc = 0.0;
            for (a, &v) in quad.iter().enumerate() {
                acc += b.rule.weights[a] * v * b.node(a, m, 0);
            }
            out[m] = 0.5 * (2.0 * m as f64 + 1.0) * acc;
        }
    }

    /// Fill the two top modes of every cell so that the interface sums and
    /// DDG fluxes hit their targets. Modes `m <= k - 2` of `coeffs` are
    /// taken as given.
    pub fn complete(&self, coeffs: &mut [f64], sum_target: &[f64], flux_target: &[f64]) -> Result<()> {
        let (n, k) = (self.n(), self.k);
        let np = k + 1;
        let b = &self.basis;
        let rhs: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let ip = (i + 1) % n;
                let (ci, cn) = (&coeffs[i * np..(i + 1) * np], &coeffs[ip * np..(ip + 1) * np]);
                let mut r = [sum_target[i], self.interface_width(i) * flux_target[i]];
                for m in 0..k - 1 {
                    r[0] -= b.right(m, 0) * ci[m] + b.left(m, 0) * cn[m];
                    r[1] -= self.g0[i][m] * ci[m] + self.g1[i][m] * cn[m];
                }
                r
            })
            .collect();
        let top = self.solver.solve(&rhs)?;
        for (i, t) in top.iter().enumerate() {
            coeffs[i * np + k - 1] = t[0];
            coeffs[i * np + k] = t[1];
        }
        Ok(())
    }

    /// Sum, jump and DDG flux of a piecewise polynomial at interface `i`.
    pub fn interface_data(&self, coeffs: &[f64], i: usize) -> InterfaceData {
        let (n, np) = (self.n(), self.k + 1);
        let ip = (i + 1) % n;
        let (hl, hr, hi) = (self.widths[i], self.widths[ip], self.interface_width(i));
        let b = &self.basis;
        let mut u1 = [0.0; 3];
        let mut u2 = [0.0; 3];
        for m in 0..np {
            for d in 0..3 {
                u1[d] += coeffs[i * np + m] * b.right(m, d);
                u2[d] += coeffs[ip * np + m] * b.left(m, d);
            }
        }
        let (gl, gr) = (2.0 / hl, 2.0 / hr);
        let jump = u2[0] - u1[0];
        let avg_d1 = 0.5 * (u1[1] * gl + u2[1] * gr);
        let jump_d2 = u2[2] * gr * gr - u1[2] * gl * gl;
        InterfaceData {
            sum: u1[0] + u2[0],
            jump,
            flux: crate::flux::ddg_diffusion_flux(jump, avg_d1, jump_d2, hi, &self.params),
        }
    }

    /// Largest relative violation of the interface conditions.
    pub fn interface_residual(&self, coeffs: &[f64], sum_target: &[f64], flux_target: &[f64]) -> f64 {
        let scale = coeffs
            .iter()
            .chain(sum_target)
            .chain(flux_target)
            .fold(0.0f64, |a, &b| a.max(b.abs()))
            .max(f64::MIN_POSITIVE);
        (0..self.n())
            .map(|i| {
                let d = self.interface_data(coeffs, i);
                (d.sum - sum_target[i]).abs().max((d.flux - flux_target[i]).abs())
            })
            .fold(0.0, f64::max)
            / scale
    }

    fn verify(&self, coeffs: &[f64], sum_target: &[f64], flux_target: &[f64], what: &str) -> Result<()> {
        let r = self.interface_residual(coeffs, sum_target, flux_target);
        if r > CONDITION_TOL {
            return Err(DdgError::ConditionViolated { what: what.into(), residual: r, tol: CONDITION_TOL });
        }
        Ok(())
    }

    /// `P v` from samples of a smooth `v`; `n * (k + 1)` modal coefficients.
    pub fn project(&self, s: &LineSamples) -> Result<Vec<f64>> {
        let (n, np, q) = (self.n(), self.k + 1, self.basis.n_quad());
        if s.quad.len() != n * q || s.node_value.len() != n || s.node_deriv.len() != n {
            return Err(DdgError::InvalidArgument("line samples do not match the line".into()));
        }
        let mut c = vec![0.0; n * np];
        for i in 0..n {
            self.low_moments(&s.quad[i * q..(i + 1) * q], &mut c[i * np..(i + 1) * np]);
        }
        let sum: Vec<f64> = s.node_value.iter().map(|v| 2.0 * v).collect();
        self.complete(&mut c, &sum, &s.node_deriv)?;
        self.verify(&c, &sum, &s.node_deriv, "projection P interface conditions")?;
        Ok(c)
    }

    /// Sample `w(deriv, x)` on a line whose first cell starts at `x0`.
    pub fn sample(&self, x0: f64, w: impl Fn(usize, f64) -> f64) -> LineSamples {
        let q = self.basis.n_quad();
        let mut s = LineSamples {
            quad: Vec::with_capacity(self.n() * q),
            node_value: Vec::with_capacity(self.n()),
            node_deriv: Vec::with_capacity(self.n()),
        };
        let mut left = x0;
        for &h in &self.widths {
            for &r in &self.basis.rule.nodes {
                s.quad.push(w(0, left + 0.5 * h * (r + 1.0)));
            }
            left += h;
            s.node_value.push(w(0, left));
            s.node_deriv.push(w(1, left));
        }
        s
    }
}

/// `P` applied to a 1-D function `w(deriv, coordinate)` along `axis`.
pub fn project_p_directional(
    mesh: &Mesh2D,
    axis: Axis,
    k: usize,
    params: &FluxParams,
    w: impl Fn(usize, f64) -> f64,
) -> Result<Vec<f64>> {
    let p = LineProjector::from_mesh(mesh, axis, k, params)?;
    p.project(&p.sample(mesh.node(axis, 0), w))
}

/// Both directional projectors of a mesh.
#[derive(Debug, Clone)]
pub struct TensorProjector {
    pub mesh: Arc<Mesh2D>,
    pub px: LineProjector,
    pub py: LineProjector,
    pub exec: Execution,
}

impl TensorProjector {
    pub fn new(mesh: Arc<Mesh2D>, k: usize, params: &FluxParams) -> Result<Self> {
        let px = LineProjector::from_mesh(&mesh, Axis::X, k, params)?;
        let py = LineProjector::from_mesh(&mesh, Axis::Y, k, params)?;
        Ok(Self { mesh, px, py, exec: Execution::default() })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn projector(&self, axis: Axis) -> &LineProjector {
        match axis {
            Axis::X => &self.px,
            Axis::Y => &self.py,
        }
    }

    /// `Pi_h u(., ., t)`: `P^(y)` along every sampled `x` line, then `P^(x)`
    /// on each resulting coefficient function.
    pub fn pi_h(&self, u: &dyn AnalyticField, t: f64) -> Result<DGField> {
        let k = self.px.degree();
        let np = k + 1;
        let (nx, ny) = (self.mesh.nx(), self.mesh.ny());
        let q = self.px.basis().n_quad();
        let y0 = self.mesh.node(Axis::Y, 0);
        // x positions: quadrature nodes cell by cell, then the interfaces
        let mut xs = Vec::with_capacity(nx * q + nx);
        for i in 0..nx {
            for &r in &self.px.basis().rule.nodes {
                xs.push(self.mesh.to_physical(Axis::X, i, r));
            }
        }
        for i in 0..nx {
            xs.push(self.mesh.to_physical(Axis::X, i, 1.0));
        }
        let lines = par::map_indices(self.exec, xs.len(), |idx| -> Result<(Vec<f64>, Option<Vec<f64>>)> {
            let x = xs[idx];
            let val = self.py.project(&self.py.sample(y0, |d, y| u.deriv(0, d, 0, x, y, t)))?;
            let dx = if idx >= nx * q {
                Some(self.py.project(&self.py.sample(y0, |d, y| u.deriv(1, d, 0, x, y, t)))?)
            } else {
                None
            };
            Ok((val, dx))
        });
        let lines = lines.into_iter().collect::<Result<Vec<_>>>()?;
        let cols = par::map_indices(self.exec, ny * np, |jn| -> Result<Vec<f64>> {
            let s = LineSamples {
                quad: lines[..nx * q].iter().map(|l| l.0[jn]).collect(),
                node_value: lines[nx * q..].iter().map(|l| l.0[jn]).collect(),
                node_deriv: lines[nx * q..].iter().map(|l| l.1.as_ref().unwrap()[jn]).collect(),
            };
            self.px.project(&s)
        });
        let mut out = DGField::zeros(self.mesh.clone(), k);
        out.t = t;
        for (jn, col) in cols.into_iter().enumerate() {
            let col = col?;
            let (j, n) = (jn / np, jn % np);
            for i in 0..nx {
                for m in 0..np {
                    out.set_coeff(i, j, m, n, col[i * np + m]);
                }
            }
        }
        Ok(out)
    }
}

/// `Pi_h u(., ., t)` on `mesh`.
pub fn project_pi_h(u: &dyn AnalyticField, t: f64, mesh: Arc<Mesh2D>, k: usize, params: &FluxParams) -> Result<DGField> {
    TensorProjector::new(mesh, k, params)?.pi_h(u, t)
}

/// Gauss-Lobatto projection on one cell: match both endpoint values and the
/// moments against `P^{k-2}`. `quad` holds samples at the nodes of `basis`.
pub fn q_project_cell(basis: &Basis1D, quad: &[f64], left: f64, right: f64) -> Vec<f64> {
    let k = basis.degree;
    let mut c = vec![0.0; k + 1];
    for (m, cm) in c.iter_mut().enumerate().take(k - 1) {
        let acc: f64 = quad.iter().enumerate().map(|(a, v)| basis.rule.weights[a] * v * basis.node(a, m, 0)).sum();
        *cm = 0.5 * (2.0 * m as f64 + 1.0) * acc;
    }
    let (mut sr, mut sl) = (right, left);
    for (m, cm) in c.iter().enumerate().take(k - 1) {
        sr -= cm * basis.right(m, 0);
        sl -= cm * basis.left(m, 0);
    }
    // c_{k-1} + c_k = sr,  (-1)^{k-1} (c_{k-1} - c_k) = sl
    let sl = if (k - 1) % 2 == 0 { sl } else { -sl };
    c[k - 1] = 0.5 * (sr + sl);
    c[k] = 0.5 * (sr - sl);
    c
}

/// `Q` applied to a smooth 1-D function along `axis`, cell by cell.
pub fn project_q_directional(mesh: &Mesh2D, axis: Axis, k: usize, w: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let basis = Basis1D::new(k)?;
    let mut out = Vec::with_capacity(mesh.n(axis) * (k + 1));
    for i in 0..mesh.n(axis) {
        let quad: Vec<f64> = basis.rule.nodes.iter().map(|&r| w(mesh.to_physical(axis, i, r))).collect();
        out.extend(q_project_cell(
            &basis,
            &quad,
            w(mesh.to_physical(axis, i, -1.0)),
            w(mesh.to_physical(axis, i, 1.0)),
        ));
    }
    Ok(out)
}

/// Legendre coefficients of `sum_mu v_mu phi_mu`, length `k + 1`.
pub fn lobatto_to_modal(lobatto: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; lobatto.len().max(2)];
    for (mu, &v) in lobatto.iter().enumerate() {
        for (m, c) in lobatto_to_legendre(mu).iter().enumerate() {
            out[m] += v * c;
        }
    }
    out.truncate(lobatto.len());
    out
}

/// Lobatto coefficients of `I v` on each cell along `axis`: endpoint values
/// and `(2mu-1)/2 <v_x, L_{mu-1}>` for `mu >= 2`. `w(deriv, x)`.
pub fn interpolate_i_directional(mesh: &Mesh2D, axis: Axis, k: usize, w: impl Fn(usize, f64) -> f64) -> Result<Vec<f64>> {
    let basis = Basis1D::new(k)?;
    let mut out = Vec::with_capacity(mesh.n(axis) * (k + 1));
    for i in 0..mesh.n(axis) {
        let h = mesh.width(axis, i);
        out.push(w(0, mesh.to_physical(axis, i, -1.0)));
        out.push(w(0, mesh.to_physical(axis, i, 1.0)));
        for mu in 2..=k {
            let acc: f64 = basis
                .rule
                .nodes
                .iter()
                .enumerate()
                .map(|(a, &r)| basis.rule.weights[a] * 0.5 * h * w(1, mesh.to_physical(axis, i, r)) * basis.node(a, mu - 1, 0))
                .sum();
            out.push(0.5 * (2.0 * mu as f64 - 1.0) * acc);
        }
    }
    Ok(out)
}

/// `I_h u(., ., t) = I^(x) (x) I^(y) u` as a modal field.
pub fn interpolate_i_h(u: &dyn AnalyticField, t: f64, mesh: Arc<Mesh2D>, k: usize) -> Result<DGField> {
    let basis = Basis1D::new(k)?;
    let np = k + 1;
    let trans: Vec<Vec<f64>> = (0..np)
        .map(|mu| {
            let mut v = lobatto_to_legendre(mu);
            v.resize(np.max(v.len()), 0.0);
            v.truncate(np);
            v
        })
        .collect();
    let mut out = DGField::zeros(mesh.clone(), k);
    out.t = t;
    let nodes = &basis.rule.nodes;
    let wts = &basis.rule.weights;
    for i in 0..mesh.nx() {
        let hx = mesh.hx(i);
        for j in 0..mesh.ny() {
            let hy = mesh.hy(j);
            let xe = [mesh.to_physical(Axis::X, i, -1.0), mesh.to_physical(Axis::X, i, 1.0)];
            let ye = [mesh.to_physical(Axis::Y, j, -1.0), mesh.to_physical(Axis::Y, j, 1.0)];
            let xq: Vec<f64> = nodes.iter().map(|&r| mesh.to_physical(Axis::X, i, r)).collect();
            let yq: Vec<f64> = nodes.iter().map(|&r| mesh.to_physical(Axis::Y, j, r)).collect();
            // Lobatto functional of index mu along one direction: either a
            // point evaluation or a weighted derivative moment.
            let mut lob = vec![0.0; np * np];
            for mu in 0..np {
                for nu in 0..np {
                    lob[mu * np + nu] = match (mu < 2, nu < 2) {
                        (true, true) => u.value(xe[mu], ye[nu], t),
                        (true, false) => {
                            let s: f64 = (0..nodes.len())
                                .map(|b| wts[b] * u.deriv(0, 1, 0, xe[mu], yq[b], t) * basis.node(b, nu - 1, 0))
                                .sum();
                            0.5 * (2.0 * nu as f64 - 1.0) * 0.5 * hy * s
                        }
                        (false, true) => {
                            let s: f64 = (0..nodes.len())
                                .map(|a| wts[a] * u.deriv(1, 0, 0, xq[a], ye[nu], t) * basis.node(a, mu - 1, 0))
                                .sum();
                            0.5 * (2.0 * mu as f64 - 1.0) * 0.5 * hx * s
                        }
                        (false, false) => {
                            let mut s = 0.0;
                            for a in 0..nodes.len() {
                                for b in 0..nodes.len() {
                                    s += wts[a]
                                        * wts[b]
                                        * u.deriv(1, 1, 0, xq[a], yq[b], t)
                                        * basis.node(a, mu - 1, 0)
                                        * basis.node(b, nu - 1, 0);
                                }
                            }
                            0.25 * (2.0 * mu as f64 - 1.0) * (2.0 * nu as f64 - 1.0) * 0.25 * hx * hy * s
                        }
                    };
                }
            }
            let cell = out.cell_mut(i, j);
            for mu in 0..np {
                for nu in 0..np {
                    let v = lob[mu * np + nu];
                    for m in 0..np {
                        for n in 0..np {
                            cell[m * np + n] += v * trans[mu][m] * trans[nu][n];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
