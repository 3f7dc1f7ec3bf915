//! One-dimensional Legendre and Lobatto machinery on the reference interval
//! `[-1, 1]`: evaluation, Gauss-Legendre rules, and the cell-local
//! antiderivative acting on modal Legendre coefficients.

use crate::error::{DdgError, Result};

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Value, first and second derivative of `L_0..=L_max` at `s`, via the
/// three-term recurrence and its differentiated forms.
pub fn legendre_table(max_degree: usize, s: f64) -> Vec<[f64; 3]> {
    let mut out = vec![[0.0; 3]; max_degree + 1];
    out[0] = [1.0, 0.0, 0.0];
    if max_degree == 0 {
        return out;
    }
    out[1] = [s, 1.0, 0.0];
    for n in 1..max_degree {
        let nf = n as f64;
        let v = ((2.0 * nf + 1.0) * s * out[n][0] - nf * out[n - 1][0]) / (nf + 1.0);
        // L'_{n+1} = L'_{n-1} + (2n+1) L_n, and the same one level up.
        let d1 = out[n - 1][1] + (2.0 * nf + 1.0) * out[n][0];
        let d2 = out[n - 1][2] + (2.0 * nf + 1.0) * out[n][1];
        out[n + 1] = [v, d1, d2];
    }
    out
}

/// `L_m^{(deriv)}(s)` for `deriv` in `0..=2`.
pub fn legendre_eval(m: usize, s: f64, deriv: usize) -> Result<f64> {
    if deriv > 2 {
        return Err(DdgError::InvalidArgument(format!(
            "legendre derivative order {deriv} not supported (0..=2)"
        )));
    }
    if !(s.abs() <= 1.0 + 1e-12) {
        return Err(DdgError::InvalidArgument(format!(
            "legendre argument {s} outside [-1, 1]"
        )));
    }
    Ok(legendre_table(m, s)[m][deriv])
}

/// Lobatto polynomial `phi_mu(s)`: `(1-s)/2`, `(1+s)/2`, then
/// `phi_{mu} = (L_mu - L_{mu-2}) / (2 mu - 1)` for `mu >= 2`.
pub fn lobatto_eval(mu: usize, s: f64) -> f64 {
    match mu {
        0 => 0.5 * (1.0 - s),
        1 => 0.5 * (1.0 + s),
        _ => {
            let t = legendre_table(mu, s);
            (t[mu][0] - t[mu - 2][0]) / (2.0 * mu as f64 - 1.0)
        }
    }
}

/// Gauss-Legendre rule with `q` points on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `[-1, 1]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

pub fn gauss_rule(q: usize) -> Result<GaussRule> {
    if q == 0 {
        return Err(DdgError::InvalidArgument("gauss rule needs q >= 1".into()));
    }
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    // Roots come in +/- pairs; solve for the non-negative half.
    for i in 0..(q + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        for _ in 0..NEWTON_MAX_ITER {
            let t = legendre_table(q, x);
            let dx = t[q][0] / t[q][1];
            x -= dx;
            if dx.abs() < NEWTON_TOL {
                break;
            }
        }
        if q % 2 == 1 && i == q / 2 {
            x = 0.0;
        }
        let d = legendre_table(q, x)[q][1];
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    Ok(GaussRule { nodes, weights })
}

/// Modal coefficients (length `n + 1`) of `D^{-1} v`, the antiderivative of
/// `v = sum c_m L_m` on a cell of width `h` that vanishes at the left end.
pub fn antiderivative_modal(c: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; c.len() + 1];
    let half = 0.5 * h;
    for (m, &cm) in c.iter().enumerate() {
        if m == 0 {
            // int_{-1}^s L_0 = L_0 + L_1
            out[0] += half * cm;
            out[1] += half * cm;
        } else {
            let s = half * cm / (2.0 * m as f64 + 1.0);
            out[m + 1] += s;
            out[m - 1] -= s;
        }
    }
    out
}

/// Modal coefficients of `d/dx v` for `v = sum c_m L_m` on a cell of width
/// `h`; the result has the same length with a zero top coefficient.
pub fn derivative_modal(c: &[f64], h: f64) -> Vec<f64> {
    let n = c.len();
    let mut out = vec![0.0; n];
    for m in 0..n {
        let mut acc = 0.0;
        let mut j = m + 1;
        while j < n {
            acc += c[j];
            j += 2;
        }
        out[m] = (2.0 * m as f64 + 1.0) * acc * 2.0 / h;
    }
    out
}

/// Evaluate a modal Legendre expansion at `s`.
pub fn modal_eval(c: &[f64], s: f64) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    let t = legendre_table(c.len() - 1, s);
    c.iter().zip(&t).map(|(a, l)| a * l[0]).sum()
}

/// Legendre tables for degree `k` tabulated on a Gauss rule and at `+/-1`.
#[derive(Debug, Clone)]
pub struct Basis1D {
    pub degree: usize,
    pub rule: GaussRule,
    // [point][m][deriv]
    at_nodes: Vec<Vec<[f64; 3]>>,
    at_left: Vec<[f64; 3]>,
    at_right: Vec<[f64; 3]>,
}

impl Basis1D {
    /// Basis with the default `k + 3` point volume rule.
    pub fn new(k: usize) -> Result<Self> {
        Self::with_quadrature(k, k + 3)
    }

    pub fn with_quadrature(k: usize, q: usize) -> Result<Self> {
        if k < 1 {
            return Err(DdgError::InvalidArgument("polynomial degree k must be >= 1".into()));
        }
        if q < k + 1 {
            return Err(DdgError::InvalidArgument(format!(
                "quadrature count {q} below k + 1 = {}",
                k + 1
            )));
        }
        let rule = gauss_rule(q)?;
        let at_nodes = rule.nodes.iter().map(|&s| legendre_table(k, s)).collect();
        Ok(Self {
            degree: k,
            rule,
            at_nodes,
            at_left: legendre_table(k, -1.0),
            at_right: legendre_table(k, 1.0),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.degree + 1
    }

    pub fn n_quad(&self) -> usize {
        self.rule.len()
    }

    /// `L_m^{(d)}` at quadrature node `q`.
    #[inline]
    pub fn node(&self, q: usize, m: usize, d: usize) -> f64 {
        self.at_nodes[q][m][d]
    }

    /// `L_m^{(d)}(-1)`.
    #[inline]
    pub fn left(&self, m: usize, d: usize) -> f64 {
        self.at_left[m][d]
    }

    /// `L_m^{(d)}(+1)`.
    #[inline]
    pub fn right(&self, m: usize, d: usize) -> f64 {
        self.at_right[m][d]
    }

    /// `L_m^{(d)}` at an endpoint.
    #[inline]
    pub fn end(&self, side: Side, m: usize, d: usize) -> f64 {
        match side {
            Side::Left => self.at_left[m][d],
            Side::Right => self.at_right[m][d],
        }
    }
}

/// Endpoint of the reference interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Lobatto polynomials up to degree `k + 1` together with the Gauss points
/// (zeros of `L_k`) and Lobatto points (zeros of `phi_{k+1}`).
#[derive(Debug, Clone)]
pub struct LobattoBasis1D {
    pub degree: usize,
    pub gauss_points: Vec<f64>,
    pub lobatto_points: Vec<f64>,
}

impl LobattoBasis1D {
    pub fn new(k: usize) -> Result<Self> {
        if k < 1 {
            return Err(DdgError::InvalidArgument("polynomial degree k must be >= 1".into()));
        }
        let gauss_points = gauss_rule(k)?.nodes;
        // Interior zeros of phi_{k+1} are the zeros of L'_k, which interlace
        // the zeros of L_k.
        let mut lobatto_points = Vec::with_capacity(k + 1);
        lobatto_points.push(-1.0);
        for w in gauss_points.windows(2) {
            let mut x = 0.5 * (w[0] + w[1]);
            for _ in 0..NEWTON_MAX_ITER {
                let t = legendre_table(k, x);
                let dx = t[k][1] / t[k][2];
                x -= dx;
                if dx.abs() < NEWTON_TOL {
                    break;
                }
            }
            lobatto_points.push(x);
        }
        lobatto_points.push(1.0);
        let n = lobatto_points.len();
        for i in 0..n / 2 {
            let a = 0.5 * (lobatto_points[n - 1 - i] - lobatto_points[i]);
            lobatto_points[i] = -a;
            lobatto_points[n - 1 - i] = a;
        }
        if n % 2 == 1 {
            lobatto_points[n / 2] = 0.0;
        }
        Ok(Self { degree: k, gauss_points, lobatto_points })
    }

    pub fn eval(&self, mu: usize, s: f64) -> Result<f64> {
        if mu > self.degree + 1 {
            return Err(DdgError::InvalidArgument(format!(
                "lobatto index {mu} exceeds k + 1 = {}",
                self.degree + 1
            )));
        }
        Ok(lobatto_eval(mu, s))
    }
}

/// Legendre coefficients of `phi_mu`, length `mu + 1` (at least 2).
pub fn lobatto_to_legendre(mu: usize) -> Vec<f64> {
    match mu {
        0 => vec![0.5, -0.5],
        1 => vec![0.5, 0.5],
        _ => {
            let mut c = vec![0.0; mu + 1];
            let s = 1.0 / (2.0 * mu as f64 - 1.0);
            c[mu] = s;
            c[mu - 2] = -s;
            c
        }
    }
}
