//! Error samplers at nodes, Lobatto points and Gauss points, the L2 error,
//! and observed convergence rates.

use crate::analytic::AnalyticField;
use crate::error::{DdgError, Result};
use crate::field::DGField;
use crate::mesh::Axis;
use crate::poly1d::{gauss_rule, LobattoBasis1D};

/// Errors of one run plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSample {
    pub n: usize,
    pub k: usize,
    pub t: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub init: String,
    pub cfl: f64,
    pub e_l: f64,
    pub e_n: f64,
    pub e_gx: f64,
    pub e_gy: f64,
    pub l2: f64,
}

impl ErrorSample {
    /// The five error columns in table order: `e_l, e_n, e_gx, e_gy, l2`.
    pub fn columns(&self) -> [f64; 5] {
        [self.e_l, self.e_n, self.e_gx, self.e_gy, self.l2]
    }
}

fn rms(sum_sq: f64, count: usize) -> f64 {
    (sum_sq / count as f64).sqrt()
}

/// RMS over mesh nodes of `u - {u_h}`, `{u_h}` being the mean of the four
/// corner traces meeting at the node.
pub fn error_nodes(uh: &DGField, u: &dyn AnalyticField, t: f64) -> f64 {
    let mesh = uh.mesh();
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let mut acc = 0.0;
    for i in 0..nx {
        let ip = mesh.next(Axis::X, i);
        let x = mesh.to_physical(Axis::X, i, 1.0);
        for j in 0..ny {
            let jp = mesh.next(Axis::Y, j);
            let y = mesh.to_physical(Axis::Y, j, 1.0);
            let avg = 0.25
                * (uh.eval_all_unchecked(i, j, 1.0, 1.0)[0]
                    + uh.eval_all_unchecked(ip, j, -1.0, 1.0)[0]
                    + uh.eval_all_unchecked(i, jp, 1.0, -1.0)[0]
                    + uh.eval_all_unchecked(ip, jp, -1.0, -1.0)[0]);
            let e = u.value(x, y, t) - avg;
            acc += e * e;
        }
    }
    rms(acc, nx * ny)
}

/// RMS of `u - u_h` over the `(k+1)^2` tensor Lobatto points of every cell.
pub fn error_lobatto(uh: &DGField, u: &dyn AnalyticField, t: f64) -> Result<f64> {
    let pts = LobattoBasis1D::new(uh.degree())?.lobatto_points;
    let mesh = uh.mesh();
    let mut acc = 0.0;
    for i in 0..mesh.nx() {
        for j in 0..mesh.ny() {
            for &sx in &pts {
                let x = mesh.to_physical(Axis::X, i, sx);
                for &sy in &pts {
                    let y = mesh.to_physical(Axis::Y, j, sy);
                    let e = u.value(x, y, t) - uh.eval_all_unchecked(i, j, sx, sy)[0];
                    acc += e * e;
                }
            }
        }
    }
    Ok(rms(acc, mesh.n_cells() * pts.len() * pts.len()))
}

/// Componentwise RMS of `grad(u - u_h)` over the `k^2` tensor Gauss points
/// (zeros of `L_k`) of every cell.
pub fn error_gauss(uh: &DGField, u: &dyn AnalyticField, t: f64) -> Result<(f64, f64)> {
    let pts = LobattoBasis1D::new(uh.degree())?.gauss_points;
    let mesh = uh.mesh();
    let (mut ax, mut ay) = (0.0, 0.0);
    for i in 0..mesh.nx() {
        for j in 0..mesh.ny() {
            for &sx in &pts {
                let x = mesh.to_physical(Axis::X, i, sx);
                for &sy in &pts {
                    let y = mesh.to_physical(Axis::Y, j, sy);
                    let d = uh.eval_all_unchecked(i, j, sx, sy);
                    let ex = u.deriv(1, 0, 0, x, y, t) - d[1];
                    let ey = u.deriv(0, 1, 0, x, y, t) - d[2];
                    ax += ex * ex;
                    ay += ey * ey;
                }
            }
        }
    }
    let count = mesh.n_cells() * pts.len() * pts.len();
    Ok((rms(ax, count), rms(ay, count)))
}

/// `||u - u_h||_0` with `k + 5` Gauss points per direction.
pub fn error_l2(uh: &DGField, u: &dyn AnalyticField, t: f64) -> Result<f64> {
    error_l2_with(uh, u, t, uh.degree() + 5)
}

/// `||u - u_h||_0` with `q` Gauss points per direction.
pub fn error_l2_with(uh: &DGField, u: &dyn AnalyticField, t: f64, q: usize) -> Result<f64> {
    let rule = gauss_rule(q)?;
    let mesh = uh.mesh();
    let mut acc = 0.0;
    for i in 0..mesh.nx() {
        for j in 0..mesh.ny() {
            let jac = 0.25 * mesh.hx(i) * mesh.hy(j);
            let mut cell = 0.0;
            for (a, &sx) in rule.nodes.iter().enumerate() {
                let x = mesh.to_physical(Axis::X, i, sx);
                for (b, &sy) in rule.nodes.iter().enumerate() {
                    let y = mesh.to_physical(Axis::Y, j, sy);
                    let e = u.value(x, y, t) - uh.eval_all_unchecked(i, j, sx, sy)[0];
                    cell += rule.weights[a] * rule.weights[b] * e * e;
                }
            }
            acc += jac * cell;
        }
    }
    Ok(acc.sqrt())
}

/// `log2(e_coarse / e_fine)`, or `None` when either error is not positive.
pub fn rate(e_coarse: f64, e_fine: f64) -> Option<f64> {
    (e_coarse > 0.0 && e_fine > 0.0 && e_coarse.is_finite() && e_fine.is_finite())
        .then(|| (e_coarse / e_fine).log2())
}

/// Observed rates per refinement pair for each of the five error columns.
/// Row `r` holds the rates between samples `r` and `r + 1`.
pub fn rates(samples: &[ErrorSample]) -> Result<Vec<[Option<f64>; 5]>> {
    if samples.len() < 2 {
        return Err(DdgError::InvalidArgument("rates require at least two mesh levels".into()));
    }
    samples
        .windows(2)
        .map(|w| {
            if w[1].n != 2 * w[0].n {
                return Err(DdgError::InvalidArgument(format!(
                    "mesh sizes must double, got {} then {}",
                    w[0].n, w[1].n
                )));
            }
            let (a, b) = (w[0].columns(), w[1].columns());
            Ok(std::array::from_fn(|c| rate(a[c], b[c])))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{ClosureField, TrigField};
    use crate::field::l2_project;
    use crate::mesh::Mesh2D;
    use std::sync::Arc;

    fn bilinear() -> ClosureField {
        ClosureField::new(|dx, dy, dt, x, y, _| match (dx, dy, dt) {
            (0, 0, 0) => 1.0 + 2.0 * x - y + 0.5 * x * y,
            (1, 0, 0) => 2.0 + 0.5 * y,
            (0, 1, 0) => -1.0 + 0.5 * x,
            (1, 1, 0) => 0.5,
            _ => 0.0,
        })
    }

    #[test]
    fn representable_field_has_zero_error() {
        // A non-periodic polynomial is still exact cell by cell, except at
        // nodes where the wraparound mixes cells.
        let mesh = Arc::new(Mesh2D::uniform(4, 5).unwrap());
        let u = bilinear();
        let uh = l2_project(&u, 0.0, mesh, 2).unwrap();
        assert!(error_lobatto(&uh, &u, 0.0).unwrap() < 1e-12);
        let (gx, gy) = error_gauss(&uh, &u, 0.0).unwrap();
        assert!(gx < 1e-12 && gy < 1e-12);
        assert!(error_l2(&uh, &u, 0.0).unwrap() < 1e-12);
        let c = crate::analytic::ConstantField(2.5);
        let uh = l2_project(&c, 0.0, uh.mesh().clone(), 2).unwrap();
        assert!(error_nodes(&uh, &c, 0.0) < 1e-12);
    }

    #[test]
    fn node_error_single_cell_perturbation() {
        let (nx, ny) = (6, 4);
        let mesh = Arc::new(Mesh2D::uniform(nx, ny).unwrap());
        let u = crate::analytic::ConstantField(0.0);
        let mut uh = DGField::zeros(mesh, 2);
        let eps = 1e-3;
        uh.set_coeff(2, 3, 0, 0, eps);
        let expected = eps / (2.0 * ((nx * ny) as f64).sqrt());
        // brute-force oracle: four touched nodes, each off by eps / 4
        let brute = (4.0 * (eps / 4.0f64).powi(2) / (nx * ny) as f64).sqrt();
        assert!((expected - brute).abs() < 1e-18);
        assert!((error_nodes(&uh, &u, 0.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn symmetric_field_has_equal_gradient_errors() {
        let mesh = Arc::new(Mesh2D::uniform(6, 6).unwrap());
        let u = TrigField::manufactured();
        let uh = l2_project(&u, 0.3, mesh, 2).unwrap();
        let (gx, gy) = error_gauss(&uh, &u, 0.3).unwrap();
        assert!((gx - gy).abs() < 1e-10);
    }

    #[test]
    fn l2_quadrature_saturated() {
        let mesh = Arc::new(Mesh2D::uniform(8, 8).unwrap());
        let u = TrigField::manufactured();
        let uh = l2_project(&u, 0.0, mesh, 2).unwrap();
        let a = error_l2_with(&uh, &u, 0.0, 7).unwrap();
        let b = error_l2_with(&uh, &u, 0.0, 9).unwrap();
        assert!((a - b).abs() < 1e-3 * b);
    }

    fn sample(n: usize, e: f64) -> ErrorSample {
        ErrorSample {
            n,
            k: 2,
            t: 1.0,
            beta0: 12.0,
            beta1: 1.0 / 12.0,
            init: "pih".into(),
            cfl: 0.05,
            e_l: e,
            e_n: e,
            e_gx: e,
            e_gy: 0.0,
            l2: e,
        }
    }

    #[test]
    fn rate_examples() {
        assert!((rate(1.6e-1, 4.4e-2).unwrap() - 1.86).abs() < 0.005);
        assert!((rate(4.7e-4, 2.1e-5).unwrap() - 4.48).abs() < 0.005);
        assert_eq!(rate(2.0, 1.0), Some(1.0));
        assert_eq!(rate(0.0, 1.0), None);
        let r = rates(&[sample(4, 1.0), sample(8, 0.5)]).unwrap();
        assert_eq!(r[0][0], Some(1.0));
        assert_eq!(r[0][3], None);
        assert!(rates(&[sample(4, 1.0)]).is_err());
        assert!(rates(&[sample(4, 1.0), sample(12, 0.5)]).is_err());
    }
}
