//! Periodic tensor-product rectangular mesh on `[0, 2pi]^2`.

use std::f64::consts::PI;

use crate::error::{DdgError, Result};

/// Coordinate direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    nx: usize,
    ny: usize,
    x_nodes: Vec<f64>,
    y_nodes: Vec<f64>,
    hx: Vec<f64>,
    hy: Vec<f64>,
}

pub const DOMAIN_LENGTH: f64 = 2.0 * PI;

impl Mesh2D {
    /// Uniform `nx` by `ny` partition of `[0, 2pi]^2`.
    pub fn uniform(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(DdgError::InvalidArgument(format!(
                "mesh needs at least 2 cells per direction, got {nx}x{ny}"
            )));
        }
        let nodes = |n: usize| -> Vec<f64> {
            let mut v: Vec<f64> = (0..=n).map(|i| DOMAIN_LENGTH * i as f64 / n as f64).collect();
            v[n] = DOMAIN_LENGTH;
            v
        };
        Self::from_nodes(nodes(nx), nodes(ny))
    }

    /// Mesh from explicit node coordinates, which must start at 0, end at
    /// `2pi`, and be strictly increasing.
    pub fn from_nodes(x_nodes: Vec<f64>, y_nodes: Vec<f64>) -> Result<Self> {
        for (name, v) in [("x", &x_nodes), ("y", &y_nodes)] {
            if v.len() < 3 {
                return Err(DdgError::InvalidArgument(format!(
                    "{name}: need at least 2 cells"
                )));
            }
            if v[0] != 0.0 || (v[v.len() - 1] - DOMAIN_LENGTH).abs() > 1e-14 {
                return Err(DdgError::InvalidArgument(format!(
                    "{name}: nodes must span [0, 2pi]"
                )));
            }
            if v.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(DdgError::InvalidArgument(format!(
                    "{name}: nodes must be strictly increasing"
                )));
            }
        }
        let widths = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();
        Ok(Self {
            nx: x_nodes.len() - 1,
            ny: y_nodes.len() - 1,
            hx: widths(&x_nodes),
            hy: widths(&y_nodes),
            x_nodes,
            y_nodes,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn n(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.nx,
            Axis::Y => self.ny,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn hx(&self, i: usize) -> f64 {
        self.hx[i]
    }

    pub fn hy(&self, j: usize) -> f64 {
        self.hy[j]
    }

    pub fn width(&self, axis: Axis, i: usize) -> f64 {
        match axis {
            Axis::X => self.hx[i],
            Axis::Y => self.hy[i],
        }
    }

    /// Node `x_{i+1/2}` (index `i` in `0..=n`, so index 0 is the left end).
    pub fn node(&self, axis: Axis, i: usize) -> f64 {
        match axis {
            Axis::X => self.x_nodes[i],
            Axis::Y => self.y_nodes[i],
        }
    }

    pub fn nodes(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.x_nodes,
            Axis::Y => &self.y_nodes,
        }
    }

    /// Physical coordinate of reference point `s` in cell `i`.
    pub fn to_physical(&self, axis: Axis, i: usize, s: f64) -> f64 {
        let a = self.node(axis, i);
        let h = self.width(axis, i);
        a + 0.5 * h * (s + 1.0)
    }

    /// Periodic successor of cell `i`.
    pub fn next(&self, axis: Axis, i: usize) -> usize {
        let n = self.n(axis);
        if i + 1 == n {
            0
        } else {
            i + 1
        }
    }

    /// Periodic predecessor of cell `i`.
    pub fn prev(&self, axis: Axis, i: usize) -> usize {
        if i == 0 {
            self.n(axis) - 1
        } else {
            i - 1
        }
    }

    /// Width used by the interface fluxes at the right node of cell `i`
    /// (mean of the two adjacent widths).
    pub fn interface_width(&self, axis: Axis, i: usize) -> f64 {
        0.5 * (self.width(axis, i) + self.width(axis, self.next(axis, i)))
    }

    /// Largest cell diameter.
    pub fn h(&self) -> f64 {
        let mx = self.hx.iter().cloned().fold(0.0, f64::max);
        let my = self.hy.iter().cloned().fold(0.0, f64::max);
        mx.hypot(my)
    }

    /// Smallest cell width in either direction.
    pub fn min_width(&self) -> f64 {
        self.hx.iter().chain(&self.hy).cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn check_cell(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.nx || j >= self.ny {
            return Err(DdgError::CellOutOfRange { i, j, nx: self.nx, ny: self.ny });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_examples() {
        let m = Mesh2D::uniform(4, 4).unwrap();
        assert!((m.hx(0) - PI / 2.0).abs() < 1e-15);
        let m = Mesh2D::uniform(8, 4).unwrap();
        assert!((m.hx(3) - PI / 4.0).abs() < 1e-15);
        assert!((m.hy(3) - PI / 2.0).abs() < 1e-15);
        assert_eq!(Mesh2D::uniform(32, 32).unwrap().n_cells(), 1024);
        assert!(Mesh2D::uniform(1, 4).is_err());
        assert!(Mesh2D::uniform(4, 0).is_err());
    }

    #[test]
    fn nodes_and_widths() {
        let m = Mesh2D::uniform(5, 7).unwrap();
        for axis in [Axis::X, Axis::Y] {
            let n = m.n(axis);
            assert_eq!(m.node(axis, 0), 0.0);
            assert_eq!(m.node(axis, n), DOMAIN_LENGTH);
            let total: f64 = (0..n).map(|i| m.width(axis, i)).sum();
            assert!((total - DOMAIN_LENGTH).abs() < 1e-13);
            assert!((0..n).all(|i| m.width(axis, i) > 0.0));
        }
    }

    #[test]
    fn neighbor_maps_are_periodic_bijections() {
        let m = Mesh2D::uniform(6, 3).unwrap();
        for axis in [Axis::X, Axis::Y] {
            let n = m.n(axis);
            assert_eq!(m.prev(axis, 0), n - 1);
            let mut seen = vec![false; n];
            for i in 0..n {
                let r = m.next(axis, i);
                assert!(!seen[r]);
                seen[r] = true;
                assert_eq!(m.prev(axis, r), i);
            }
        }
    }

    #[test]
    fn nonuniform_nodes_validated() {
        let good = vec![0.0, 1.0, 2.5, DOMAIN_LENGTH];
        let m = Mesh2D::from_nodes(good.clone(), good.clone()).unwrap();
        assert!((m.hx(1) - 1.5).abs() < 1e-15);
        assert!((m.min_width() - 1.0).abs() < 1e-15);
        assert!(Mesh2D::from_nodes(vec![0.0, 3.0, 2.0, DOMAIN_LENGTH], good.clone()).is_err());
        assert!(Mesh2D::from_nodes(vec![0.1, 3.0, DOMAIN_LENGTH], good).is_err());
    }
}
