//! Semi-discrete DDG operator.
//!
//! For every cell `tau` and test function `v = L_m L_n` the residual is
//!
//! ```text
//! (u_t, v)_tau = (f(u) - grad u, grad v)_tau
//!              - int_{d tau} v (fhat - grad uhat) . n ds
//!              - 1/2 int_{d tau} [u] grad v . n ds + (g, v)_tau
//! ```
//!
//! Edges are oriented along `+x` (vertical edges) and `+y` (horizontal
//! edges); side 1 is the left/bottom cell and `[w] = w_2 - w_1`. Each edge is
//! owned by its side-1 cell, evaluated once, and applied to both neighbours.

use std::fmt;
use std::sync::Arc;

use crate::error::{DdgError, Result};
use crate::field::DGField;
use crate::flux::{ddg_diffusion_flux, FluxParams, ScalarFlux};
use crate::mesh::{Axis, Mesh2D};
use crate::par::{self, Execution};
use crate::poly1d::Basis1D;

pub type SourceFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;

/// Everything the residual needs besides the field itself.
#[derive(Clone)]
pub struct OperatorContext {
    pub mesh: Arc<Mesh2D>,
    pub basis: Basis1D,
    pub params: FluxParams,
    pub flux: [Arc<dyn ScalarFlux>; 2],
    pub source: Option<Arc<SourceFn>>,
    pub exec: Execution,
}

impl fmt::Debug for OperatorContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorContext")
            .field("nx", &self.mesh.nx())
            .field("ny", &self.mesh.ny())
            .field("k", &self.basis.degree)
            .field("params", &self.params)
            .field("flux", &self.flux)
            .field("has_source", &self.source.is_some())
            .field("exec", &self.exec)
            .finish()
    }
}

/// Numerical flux data at one edge quadrature point.
#[derive(Debug, Clone, Copy, Default)]
struct EdgePoint {
    /// `fhat - uhat_n`
    flux: f64,
    /// `[u]`
    jump: f64,
}

/// One-sided traces of a cell along a face, at the edge quadrature points.
struct FaceTraces {
    value: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl OperatorContext {
    pub fn new(
        mesh: Arc<Mesh2D>,
        k: usize,
        params: FluxParams,
        flux: [Arc<dyn ScalarFlux>; 2],
        source: Option<Arc<SourceFn>>,
    ) -> Result<Self> {
        Ok(Self { mesh, basis: Basis1D::new(k)?, params, flux, source, exec: Execution::default() })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    fn check_field(&self, u: &DGField) -> Result<()> {
        if u.degree() != self.degree() {
            return Err(DdgError::DegreeMismatch { field: u.degree(), expected: self.degree() });
        }
        if u.mesh().nx() != self.mesh.nx() || u.mesh().ny() != self.mesh.ny() {
            return Err(DdgError::InvalidArgument("field and context meshes differ".into()));
        }
        u.check_finite()
    }

    /// Traces of cell `(i, j)` on the face normal to `axis` at the `end`
    /// (`+1` upper, `-1` lower), derivatives taken along `axis`.
    fn face_traces(&self, u: &DGField, i: usize, j: usize, axis: Axis, upper: bool) -> FaceTraces {
        let k = self.degree();
        let b = &self.basis;
        let q = b.n_quad();
        let c = u.cell(i, j);
        let end = |m: usize, d: usize| if upper { b.right(m, d) } else { b.left(m, d) };
        let (h_normal, g) = match axis {
            Axis::X => (self.mesh.hx(i), 2.0 / self.mesh.hx(i)),
            Axis::Y => (self.mesh.hy(j), 2.0 / self.mesh.hy(j)),
        };
        let _ = h_normal;
        // Collapse the normal direction first: line[d][p] for tangential mode p.
        let mut line = [vec![0.0; k + 1], vec![0.0; k + 1], vec![0.0; k + 1]];
        for m in 0..=k {
            for n in 0..=k {
                let a = c[m * (k + 1) + n];
                let (normal_mode, tangential_mode) = match axis {
                    Axis::X => (m, n),
                    Axis::Y => (n, m),
                };
                for (d, l) in line.iter_mut().enumerate() {
                    l[tangential_mode] += a * end(normal_mode, d);
                }
            }
        }
        let mut out = FaceTraces { value: vec![0.0; q], d1: vec![0.0; q], d2: vec![0.0; q] };
        for p in 0..q {
            let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
            for t in 0..=k {
                let l = b.node(p, t, 0);
                v += line[0][t] * l;
                d1 += line[1][t] * l;
                d2 += line[2][t] * l;
            }
            out.value[p] = v;
            out.d1[p] = d1 * g;
            out.d2[p] = d2 * g * g;
        }
        out
    }

    /// Owned edge on the upper face (normal `axis`) of cell `(i, j)`.
    fn edge_points(&self, u: &DGField, i: usize, j: usize, axis: Axis) -> Vec<EdgePoint> {
        let (ni, nj) = match axis {
            Axis::X => (self.mesh.next(Axis::X, i), j),
            Axis::Y => (i, self.mesh.next(Axis::Y, j)),
        };
        let t1 = self.face_traces(u, i, j, axis, true);
        let t2 = self.face_traces(u, ni, nj, axis, false);
        let h = match axis {
            Axis::X => self.mesh.interface_width(Axis::X, i),
            Axis::Y => self.mesh.interface_width(Axis::Y, j),
        };
        let component = match axis {
            Axis::X => 0,
            Axis::Y => 1,
        };
        let flux = self.flux[component].as_ref();
        (0..self.basis.n_quad())
            .map(|p| {
                let (u1, u2) = (t1.value[p], t2.value[p]);
                let jump = u2 - u1;
                let diff = ddg_diffusion_flux(
                    jump,
                    0.5 * (t1.d1[p] + t2.d1[p]),
                    t2.d2[p] - t1.d2[p],
                    h,
                    &self.params,
                );
                let conv = self.params.convection_flux(component, flux, u1, u2);
                EdgePoint { flux: conv - diff, jump }
            })
            .collect()
    }

    /// Volume contribution `(f(u) - grad u, grad v) + (g, v)` for every test
    /// mode of cell `(i, j)`, not yet divided by the mass.
    fn volume_terms(&self, u: &DGField, i: usize, j: usize, t: f64, out: &mut [f64]) {
        let k = self.degree();
        let b = &self.basis;
        let q = b.n_quad();
        let (hx, hy) = (self.mesh.hx(i), self.mesh.hy(j));
        let (gx, gy) = (2.0 / hx, 2.0 / hy);
        let c = u.cell(i, j);
        // tmp[a][n] = sum_m c_mn L_m(s_a), and with L'_m
        let mut t0 = vec![0.0; q * (k + 1)];
        let mut t1 = vec![0.0; q * (k + 1)];
        for a in 0..q {
            for m in 0..=k {
                let (l0, l1) = (b.node(a, m, 0), b.node(a, m, 1));
                for n in 0..=k {
                    let cm = c[m * (k + 1) + n];
                    t0[a * (k + 1) + n] += cm * l0;
                    t1[a * (k + 1) + n] += cm * l1;
                }
            }
        }
        // Flux integrands at the tensor points, pre-multiplied by weights and
        // the Jacobian.
        let jac = 0.25 * hx * hy;
        let mut fx = vec![0.0; q * q];
        let mut fy = vec![0.0; q * q];
        let mut gv = vec![0.0; q * q];
        for a in 0..q {
            for bq in 0..q {
                let (mut val, mut dx, mut dy) = (0.0, 0.0, 0.0);
                for n in 0..=k {
                    let ln = b.node(bq, n, 0);
                    val += t0[a * (k + 1) + n] * ln;
                    dx += t1[a * (k + 1) + n] * ln;
                    dy += t0[a * (k + 1) + n] * b.node(bq, n, 1);
                }
                dx *= gx;
                dy *= gy;
                let w = b.rule.weights[a] * b.rule.weights[bq] * jac;
                fx[a * q + bq] = w * (self.flux[0].f(val) - dx) * gx;
                fy[a * q + bq] = w * (self.flux[1].f(val) - dy) * gy;
                if let Some(g) = &self.source {
                    let x = self.mesh.to_physical(Axis::X, i, b.rule.nodes[a]);
                    let y = self.mesh.to_physical(Axis::Y, j, b.rule.nodes[bq]);
                    gv[a * q + bq] = w * g(x, y, t);
                }
            }
        }
        for m in 0..=k {
            for n in 0..=k {
                let mut acc = 0.0;
                for a in 0..q {
                    let (lm, dlm) = (b.node(a, m, 0), b.node(a, m, 1));
                    for bq in 0..q {
                        let (ln, dln) = (b.node(bq, n, 0), b.node(bq, n, 1));
                        let idx = a * q + bq;
                        acc += fx[idx] * dlm * ln + fy[idx] * lm * dln + gv[idx] * lm * ln;
                    }
                }
                out[m * (k + 1) + n] += acc;
            }
        }
    }

    /// Add the contribution of one edge to the cell on `upper_side` of it
    /// (`false`: side 1, the edge is the cell's upper face).
    fn apply_edge(&self, pts: &[EdgePoint], axis: Axis, i: usize, j: usize, cell_is_side2: bool, out: &mut [f64]) {
        let k = self.degree();
        let b = &self.basis;
        let (h_normal, h_tangent) = match axis {
            Axis::X => (self.mesh.hx(i), self.mesh.hy(j)),
            Axis::Y => (self.mesh.hy(j), self.mesh.hx(i)),
        };
        let g = 2.0 / h_normal;
        let ds = 0.5 * h_tangent;
        let sign = if cell_is_side2 { 1.0 } else { -1.0 };
        let end = |m: usize, d: usize| if cell_is_side2 { b.left(m, d) } else { b.right(m, d) };
        // Tangential moments of the two edge integrands.
        let mut flux_mom = vec![0.0; k + 1];
        let mut jump_mom = vec![0.0; k + 1];
        for (p, e) in pts.iter().enumerate() {
            let w = b.rule.weights[p] * ds;
            for t in 0..=k {
                let l = b.node(p, t, 0);
                flux_mom[t] += w * e.flux * l;
                jump_mom[t] += w * e.jump * l;
            }
        }
        for m in 0..=k {
            for n in 0..=k {
                let (normal_mode, tangential_mode) = match axis {
                    Axis::X => (m, n),
                    Axis::Y => (n, m),
                };
                out[m * (k + 1) + n] += sign * end(normal_mode, 0) * flux_mom[tangential_mode]
                    - 0.5 * g * end(normal_mode, 1) * jump_mom[tangential_mode];
            }
        }
    }

    fn divide_by_mass(&self, i: usize, j: usize, out: &mut [f64]) {
        let k = self.degree();
        let (hx, hy) = (self.mesh.hx(i), self.mesh.hy(j));
        for m in 0..=k {
            for n in 0..=k {
                out[m * (k + 1) + n] *= (2.0 * m as f64 + 1.0) * (2.0 * n as f64 + 1.0) / (hx * hy);
            }
        }
    }

    /// Time derivative of `u` as a modal field.
    pub fn residual(&self, u: &DGField, t: f64) -> Result<DGField> {
        self.check_field(u)?;
        let (nx, ny) = (self.mesh.nx(), self.mesh.ny());
        let ncell = nx * ny;
        let edges_x = par::map_indices(self.exec, ncell, |c| self.edge_points(u, c / ny, c % ny, Axis::X));
        let edges_y = par::map_indices(self.exec, ncell, |c| self.edge_points(u, c / ny, c % ny, Axis::Y));
        let mut out = DGField::zeros(self.mesh.clone(), self.degree());
        out.t = t;
        let clen = out.cell_len();
        par::for_each_chunk_mut(self.exec, out.coeffs_mut(), clen, |c, r| {
            let (i, j) = (c / ny, c % ny);
            self.volume_terms(u, i, j, t, r);
            self.apply_edge(&edges_x[c], Axis::X, i, j, false, r);
            let left = self.mesh.prev(Axis::X, i) * ny + j;
            self.apply_edge(&edges_x[left], Axis::X, i, j, true, r);
            self.apply_edge(&edges_y[c], Axis::Y, i, j, false, r);
            let below = i * ny + self.mesh.prev(Axis::Y, j);
            self.apply_edge(&edges_y[below], Axis::Y, i, j, true, r);
            self.divide_by_mass(i, j, r);
        });
        Ok(out)
    }

    /// Same residual assembled edge by edge: each edge is visited once and
    /// scattered into both neighbours. Sequential.
    pub fn residual_edge_scatter(&self, u: &DGField, t: f64) -> Result<DGField> {
        self.check_field(u)?;
        let (nx, ny) = (self.mesh.nx(), self.mesh.ny());
        let mut out = DGField::zeros(self.mesh.clone(), self.degree());
        out.t = t;
        for axis in [Axis::X, Axis::Y] {
            for i in 0..nx {
                for j in 0..ny {
                    let pts = self.edge_points(u, i, j, axis);
                    self.apply_edge(&pts, axis, i, j, false, out.cell_mut(i, j));
                    let (ni, nj) = match axis {
                        Axis::X => (self.mesh.next(Axis::X, i), j),
                        Axis::Y => (i, self.mesh.next(Axis::Y, j)),
                    };
                    self.apply_edge(&pts, axis, ni, nj, true, out.cell_mut(ni, nj));
                }
            }
        }
        for i in 0..nx {
            for j in 0..ny {
                self.volume_terms(u, i, j, t, out.cell_mut(i, j));
                self.divide_by_mass(i, j, out.cell_mut(i, j));
            }
        }
        Ok(out)
    }

    /// `sum_tau (grad u, grad v)_tau` by quadrature.
    fn broken_grad_product(&self, u: &DGField, v: &DGField) -> f64 {
        let b = &self.basis;
        let mut acc = 0.0;
        for i in 0..self.mesh.nx() {
            for j in 0..self.mesh.ny() {
                let jac = 0.25 * self.mesh.hx(i) * self.mesh.hy(j);
                for (a, &sx) in b.rule.nodes.iter().enumerate() {
                    for (c, &sy) in b.rule.nodes.iter().enumerate() {
                        let du = u.eval_all_unchecked(i, j, sx, sy);
                        let dv = v.eval_all_unchecked(i, j, sx, sy);
                        acc += b.rule.weights[a] * b.rule.weights[c] * jac * (du[1] * dv[1] + du[2] * dv[2]);
                    }
                }
            }
        }
        acc
    }

    /// Edge integrals `sum_e int_e integrand(traces of u, traces of v, h)`.
    fn edge_sum(
        &self,
        u: &DGField,
        v: &DGField,
        integrand: impl Fn(Axis, [f64; 3], [f64; 3], [f64; 3], [f64; 3], f64) -> f64,
    ) -> f64 {
        let b = &self.basis;
        let mut acc = 0.0;
        for axis in [Axis::X, Axis::Y] {
            for i in 0..self.mesh.nx() {
                for j in 0..self.mesh.ny() {
                    let (ni, nj, h, ds) = match axis {
                        Axis::X => (self.mesh.next(Axis::X, i), j, self.mesh.interface_width(Axis::X, i), 0.5 * self.mesh.hy(j)),
                        Axis::Y => (i, self.mesh.next(Axis::Y, j), self.mesh.interface_width(Axis::Y, j), 0.5 * self.mesh.hx(i)),
                    };
                    let tu1 = self.face_traces(u, i, j, axis, true);
                    let tu2 = self.face_traces(u, ni, nj, axis, false);
                    let tv1 = self.face_traces(v, i, j, axis, true);
                    let tv2 = self.face_traces(v, ni, nj, axis, false);
                    for p in 0..b.n_quad() {
                        let pick = |t: &FaceTraces| [t.value[p], t.d1[p], t.d2[p]];
                        acc += b.rule.weights[p]
                            * ds
                            * integrand(axis, pick(&tu1), pick(&tu2), pick(&tv1), pick(&tv2), h);
                    }
                }
            }
        }
        acc
    }

    /// `A(u, v) = (grad u, grad v) + sum_e int ([v] uhat_n + [u] {v_n})`.
    pub fn bilinear_a(&self, u: &DGField, v: &DGField) -> Result<f64> {
        self.check_field(u)?;
        self.check_field(v)?;
        let edges = self.edge_sum(u, v, |_, u1, u2, v1, v2, h| {
            let uhat = ddg_diffusion_flux(u2[0] - u1[0], 0.5 * (u1[1] + u2[1]), u2[2] - u1[2], h, &self.params);
            (v2[0] - v1[0]) * uhat + (u2[0] - u1[0]) * 0.5 * (v1[1] + v2[1])
        });
        Ok(self.broken_grad_product(u, v) + edges)
    }

    /// `F(u, v) = (f(u), grad v) + sum_e int [v] fhat(u) . n`.
    pub fn form_f(&self, u: &DGField, v: &DGField) -> Result<f64> {
        self.check_field(u)?;
        self.check_field(v)?;
        let b = &self.basis;
        let mut vol = 0.0;
        for i in 0..self.mesh.nx() {
            for j in 0..self.mesh.ny() {
                let jac = 0.25 * self.mesh.hx(i) * self.mesh.hy(j);
                for (a, &sx) in b.rule.nodes.iter().enumerate() {
                    for (c, &sy) in b.rule.nodes.iter().enumerate() {
                        let du = u.eval_all_unchecked(i, j, sx, sy);
                        let dv = v.eval_all_unchecked(i, j, sx, sy);
                        vol += b.rule.weights[a]
                            * b.rule.weights[c]
                            * jac
                            * (self.flux[0].f(du[0]) * dv[1] + self.flux[1].f(du[0]) * dv[2]);
                    }
                }
            }
        }
        let edges = self.edge_sum(u, v, |axis, u1, u2, v1, v2, _| {
            let comp = if axis == Axis::X { 0 } else { 1 };
            (v2[0] - v1[0]) * self.params.convection_flux(comp, self.flux[comp].as_ref(), u1[0], u2[0])
        });
        Ok(vol + edges)
    }

    /// `||v||_E^2 = (grad v, grad v) + sum_e (beta0 / h) int [v]^2`.
    pub fn energy_norm_sq(&self, v: &DGField) -> Result<f64> {
        self.check_field(v)?;
        let edges = self.edge_sum(v, v, |_, v1, v2, _, _, h| {
            let j = v2[0] - v1[0];
            self.params.beta0 / h * j * j
        });
        Ok(self.broken_grad_product(v, v) + edges)
    }

    pub fn energy_norm(&self, v: &DGField) -> Result<f64> {
        Ok(self.energy_norm_sq(v)?.sqrt())
    }

    /// `(w, v)` for fields on this mesh, using the diagonal modal mass.
    pub fn inner_product(&self, w: &DGField, v: &DGField) -> f64 {
        let k = self.degree();
        let mut acc = 0.0;
        for i in 0..self.mesh.nx() {
            for j in 0..self.mesh.ny() {
                let (hx, hy) = (self.mesh.hx(i), self.mesh.hy(j));
                let (cw, cv) = (w.cell(i, j), v.cell(i, j));
                for m in 0..=k {
                    for n in 0..=k {
                        let mass = hx * hy / ((2.0 * m as f64 + 1.0) * (2.0 * n as f64 + 1.0));
                        acc += mass * cw[m * (k + 1) + n] * cv[m * (k + 1) + n];
                    }
                }
            }
        }
        acc
    }
}
