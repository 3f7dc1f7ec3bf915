//! Modal discontinuous Galerkin fields on a [`Mesh2D`].
//!
//! On cell `(i, j)` the field is `sum_{m,n} c[i][j][m][n] L_m(sx) L_n(sy)`
//! with `(sx, sy)` the reference coordinates of the cell. Coefficients are
//! stored cell-major (`i` outer, `j` inner), then `(m, n)` row-major.

use std::io::{BufRead, Read, Write};
use std::sync::Arc;

use crate::analytic::AnalyticField;
use crate::error::{DdgError, Result};
use crate::mesh::{Axis, Mesh2D};
use crate::poly1d::{legendre_table, Basis1D};

#[derive(Debug, Clone, PartialEq)]
pub struct DGField {
    k: usize,
    mesh: Arc<Mesh2D>,
    pub t: f64,
    coeffs: Vec<f64>,
}

/// Face of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    Left,
    Right,
    Bottom,
    Top,
}

impl Face {
    pub fn axis(self) -> Axis {
        match self {
            Face::Left | Face::Right => Axis::X,
            Face::Bottom | Face::Top => Axis::Y,
        }
    }

    fn is_upper(self) -> bool {
        matches!(self, Face::Right | Face::Top)
    }
}

/// Which cell a face trace is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSide {
    Interior,
    Exterior,
}

/// One-sided limit at a face: value and the first two derivatives along the
/// face's axis (`d/dx` for left/right faces, `d/dy` for bottom/top).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trace {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl DGField {
    pub fn zeros(mesh: Arc<Mesh2D>, k: usize) -> Self {
        let len = mesh.n_cells() * (k + 1) * (k + 1);
        Self { k, mesh, t: 0.0, coeffs: vec![0.0; len] }
    }

    pub fn from_coeffs(mesh: Arc<Mesh2D>, k: usize, t: f64, coeffs: Vec<f64>) -> Result<Self> {
        let len = mesh.n_cells() * (k + 1) * (k + 1);
        if coeffs.len() != len {
            return Err(DdgError::InvalidArgument(format!(
                "coefficient vector has length {}, expected {len}",
                coeffs.len()
            )));
        }
        Ok(Self { k, mesh, t, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn mesh(&self) -> &Arc<Mesh2D> {
        &self.mesh
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Number of coefficients per cell, `(k + 1)^2`.
    pub fn cell_len(&self) -> usize {
        (self.k + 1) * (self.k + 1)
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        i * self.mesh.ny() + j
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> &[f64] {
        let n = self.cell_len();
        let c = self.cell_index(i, j);
        &self.coeffs[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn cell_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let n = self.cell_len();
        let c = self.cell_index(i, j);
        &mut self.coeffs[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn coeff(&self, i: usize, j: usize, m: usize, n: usize) -> f64 {
        self.cell(i, j)[m * (self.k + 1) + n]
    }

    pub fn set_coeff(&mut self, i: usize, j: usize, m: usize, n: usize, v: f64) {
        let k = self.k;
        self.cell_mut(i, j)[m * (k + 1) + n] = v;
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &DGField) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (s, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *s += a * o;
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn check_finite(&self) -> Result<()> {
        let n = self.cell_len();
        if let Some(pos) = self.coeffs.iter().position(|c| !c.is_finite()) {
            let c = pos / n;
            return Err(DdgError::NonFinite { i: c / self.mesh.ny(), j: c % self.mesh.ny() });
        }
        Ok(())
    }

    /// Value and all derivatives up to second order at reference point
    /// `(sx, sy)` of cell `(i, j)`, no bounds checks.
    /// Returns `[u, u_x, u_y, u_xx, u_xy, u_yy]`.
    pub(crate) fn eval_all_unchecked(&self, i: usize, j: usize, sx: f64, sy: f64) -> [f64; 6] {
        let k = self.k;
        let lx = legendre_table(k, sx);
        let ly = legendre_table(k, sy);
        let c = self.cell(i, j);
        let mut out = [0.0; 6];
        for m in 0..=k {
            for n in 0..=k {
                let a = c[m * (k + 1) + n];
                out[0] += a * lx[m][0] * ly[n][0];
                out[1] += a * lx[m][1] * ly[n][0];
                out[2] += a * lx[m][0] * ly[n][1];
                out[3] += a * lx[m][2] * ly[n][0];
                out[4] += a * lx[m][1] * ly[n][1];
                out[5] += a * lx[m][0] * ly[n][2];
            }
        }
        let gx = 2.0 / self.mesh.hx(i);
        let gy = 2.0 / self.mesh.hy(j);
        out[1] *= gx;
        out[2] *= gy;
        out[3] *= gx * gx;
        out[4] *= gx * gy;
        out[5] *= gy * gy;
        out
    }

    pub fn eval(&self, i: usize, j: usize, sx: f64, sy: f64) -> Result<f64> {
        self.mesh.check_cell(i, j)?;
        Ok(self.eval_all_unchecked(i, j, sx, sy)[0])
    }

    /// `(u_x, u_y)` in physical coordinates.
    pub fn eval_grad(&self, i: usize, j: usize, sx: f64, sy: f64) -> Result<(f64, f64)> {
        self.mesh.check_cell(i, j)?;
        let a = self.eval_all_unchecked(i, j, sx, sy);
        Ok((a[1], a[2]))
    }

    /// `(u_xx, u_xy, u_yy)` in physical coordinates.
    pub fn eval_second_derivs(&self, i: usize, j: usize, sx: f64, sy: f64) -> Result<(f64, f64, f64)> {
        self.mesh.check_cell(i, j)?;
        let a = self.eval_all_unchecked(i, j, sx, sy);
        Ok((a[3], a[4], a[5]))
    }

    /// Trace on `face` of cell `(i, j)` at position `s` along the face.
    /// The exterior side is the periodic neighbor across the face.
    pub fn trace(&self, i: usize, j: usize, face: Face, side: TraceSide, s: f64) -> Result<Trace> {
        self.mesh.check_cell(i, j)?;
        let m = &self.mesh;
        let (ci, cj, end) = match side {
            TraceSide::Interior => (i, j, if face.is_upper() { 1.0 } else { -1.0 }),
            TraceSide::Exterior => {
                let (ni, nj) = match face {
                    Face::Left => (m.prev(Axis::X, i), j),
                    Face::Right => (m.next(Axis::X, i), j),
                    Face::Bottom => (i, m.prev(Axis::Y, j)),
                    Face::Top => (i, m.next(Axis::Y, j)),
                };
                (ni, nj, if face.is_upper() { -1.0 } else { 1.0 })
            }
        };
        let a = match face.axis() {
            Axis::X => self.eval_all_unchecked(ci, cj, end, s),
            Axis::Y => self.eval_all_unchecked(ci, cj, s, end),
        };
        Ok(match face.axis() {
            Axis::X => Trace { value: a[0], d1: a[1], d2: a[3] },
            Axis::Y => Trace { value: a[0], d1: a[2], d2: a[5] },
        })
    }

    /// Jump `u_2 - u_1` and average across the upper face (right or top) of
    /// cell `(i, j)`, where cell `(i, j)` is side 1.
    pub fn jump_avg(&self, i: usize, j: usize, axis: Axis, s: f64) -> Result<(f64, f64)> {
        let face = match axis {
            Axis::X => Face::Right,
            Axis::Y => Face::Top,
        };
        let u1 = self.trace(i, j, face, TraceSide::Interior, s)?.value;
        let u2 = self.trace(i, j, face, TraceSide::Exterior, s)?.value;
        Ok((u2 - u1, 0.5 * (u1 + u2)))
    }

    /// Squared L2 norm of the field restricted to cell `(i, j)`.
    pub fn cell_l2_sq(&self, i: usize, j: usize) -> f64 {
        let k = self.k;
        let (hx, hy) = (self.mesh.hx(i), self.mesh.hy(j));
        let c = self.cell(i, j);
        let mut acc = 0.0;
        for m in 0..=k {
            for n in 0..=k {
                let a = c[m * (k + 1) + n];
                acc += a * a * hx / (2.0 * m as f64 + 1.0) * hy / (2.0 * n as f64 + 1.0);
            }
        }
        acc
    }

    pub fn l2_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.mesh.nx() {
            for j in 0..self.mesh.ny() {
                acc += self.cell_l2_sq(i, j);
            }
        }
        acc.sqrt()
    }

    /// `sum_tau (u, 1)_tau`.
    pub fn total_mass(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.mesh.nx() {
            for j in 0..self.mesh.ny() {
                acc += self.coeff(i, j, 0, 0) * self.mesh.hx(i) * self.mesh.hy(j);
            }
        }
        acc
    }

    /// Write a CSV snapshot: a `Nx,Ny,k,t` header with its values, then one
    /// `i,j,m,n,coeff` row per coefficient in storage order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "Nx,Ny,k,t")?;
        writeln!(w, "{},{},{},{:e}", self.mesh.nx(), self.mesh.ny(), self.k, self.t)?;
        writeln!(w, "i,j,m,n,coeff")?;
        for i in 0..self.mesh.nx() {
            for j in 0..self.mesh.ny() {
                for m in 0..=self.k {
                    for n in 0..=self.k {
                        writeln!(w, "{i},{j},{m},{n},{:e}", self.coeff(i, j, m, n))?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Read a CSV snapshot written by [`DGField::write_csv`]; the snapshot
    /// must match the dimensions of `mesh`.
    pub fn read_csv<R: BufRead>(r: R, mesh: Arc<Mesh2D>) -> Result<Self> {
        let bad = |s: &str| DdgError::Format(s.to_string());
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines.next().ok_or_else(|| bad("unexpected end of snapshot"))?.map_err(DdgError::from)
        };
        if next()?.trim() != "Nx,Ny,k,t" {
            return Err(bad("missing header"));
        }
        let meta = next()?;
        let parts: Vec<&str> = meta.trim().split(',').collect();
        if parts.len() != 4 {
            return Err(bad("malformed metadata row"));
        }
        let nx: usize = parts[0].parse().map_err(|_| bad("Nx"))?;
        let ny: usize = parts[1].parse().map_err(|_| bad("Ny"))?;
        let k: usize = parts[2].parse().map_err(|_| bad("k"))?;
        let t: f64 = parts[3].parse().map_err(|_| bad("t"))?;
        if nx != mesh.nx() || ny != mesh.ny() {
            return Err(bad("snapshot dimensions do not match mesh"));
        }
        if next()?.trim() != "i,j,m,n,coeff" {
            return Err(bad("missing coefficient header"));
        }
        let mut field = DGField::zeros(mesh, k);
        field.t = t;
        let expected = field.coeffs.len();
        let mut count = 0;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let p: Vec<&str> = line.trim().split(',').collect();
            if p.len() != 5 {
                return Err(bad("malformed coefficient row"));
            }
            let idx: Vec<usize> = p[..4]
                .iter()
                .map(|s| s.parse::<usize>().map_err(|_| bad("index")))
                .collect::<Result<_>>()?;
            if idx[0] >= nx || idx[1] >= ny || idx[2] > k || idx[3] > k {
                return Err(bad("index out of range"));
            }
            let v: f64 = p[4].parse().map_err(|_| bad("coefficient"))?;
            field.set_coeff(idx[0], idx[1], idx[2], idx[3], v);
            count += 1;
        }
        if count != expected {
            return Err(bad("wrong number of coefficients"));
        }
        Ok(field)
    }

    const MAGIC: &'static [u8; 4] = b"DDGF";

    /// Binary snapshot: `DDGF`, then `Nx`, `Ny`, `k` as little-endian u32,
    /// `t` as f64, and the coefficients as f64 in storage order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        for d in [self.mesh.nx(), self.mesh.ny(), self.k] {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        w.write_all(&self.t.to_le_bytes())?;
        for c in &self.coeffs {
            w.write_all(&c.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R, mesh: Arc<Mesh2D>) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(DdgError::Format("bad magic".into()));
        }
        let mut u32buf = [0u8; 4];
        let mut dims = [0usize; 3];
        for d in dims.iter_mut() {
            r.read_exact(&mut u32buf)?;
            *d = u32::from_le_bytes(u32buf) as usize;
        }
        if dims[0] != mesh.nx() || dims[1] != mesh.ny() {
            return Err(DdgError::Format("snapshot dimensions do not match mesh".into()));
        }
        let mut f64buf = [0u8; 8];
        r.read_exact(&mut f64buf)?;
        let t = f64::from_le_bytes(f64buf);
        let mut field = DGField::zeros(mesh, dims[2]);
        field.t = t;
        for c in field.coeffs.iter_mut() {
            r.read_exact(&mut f64buf)?;
            *c = f64::from_le_bytes(f64buf);
        }
        Ok(field)
    }
}

/// Cellwise L2 projection of `f(., ., t)` onto `Q_k` using the `k + 3`
/// point tensor Gauss rule.
pub fn l2_project(f: &dyn AnalyticField, t: f64, mesh: Arc<Mesh2D>, k: usize) -> Result<DGField> {
    let basis = Basis1D::new(k)?;
    let mut out = DGField::zeros(mesh.clone(), k);
    out.t = t;
    let q = basis.n_quad();
    let mut vals = vec![0.0; q * q];
    for i in 0..mesh.nx() {
        for j in 0..mesh.ny() {
            for (a, &sx) in basis.rule.nodes.iter().enumerate() {
                let x = mesh.to_physical(Axis::X, i, sx);
                for (b, &sy) in basis.rule.nodes.iter().enumerate() {
                    let y = mesh.to_physical(Axis::Y, j, sy);
                    vals[a * q + b] = f.value(x, y, t);
                }
            }
            let cell = out.cell_mut(i, j);
            for m in 0..=k {
                for n in 0..=k {
                    let mut acc = 0.0;
                    for a in 0..q {
                        for b in 0..q {
                            acc += basis.rule.weights[a]
                                * basis.rule.weights[b]
                                * vals[a * q + b]
                                * basis.node(a, m, 0)
                                * basis.node(b, n, 0);
                        }
                    }
                    cell[m * (k + 1) + n] = acc * (2.0 * m as f64 + 1.0) * (2.0 * n as f64 + 1.0) / 4.0;
                }
            }
        }
    }
    Ok(out)
}
