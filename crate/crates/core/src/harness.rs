//! Manufactured test problems, run configuration, convergence studies and
//! table output.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use crate::analytic::{AnalyticField, TrigField};
use crate::correction::corrected_projection;
use crate::error::{DdgError, Result};
use crate::error_norms::{error_gauss, error_l2, error_lobatto, error_nodes, rates, ErrorSample};
use crate::field::{l2_project, DGField};
use crate::flux::{Burgers, FluxParams, ScalarFlux, SineFlux, ZeroFlux};
use crate::mesh::Mesh2D;
use crate::operator::{OperatorContext, SourceFn};
use crate::par::{self, Execution};
use crate::projections::project_pi_h;
use crate::timestep::{default_cfl, integrate, TimeConfig};

/// The manufactured problems. All share the exact solution
/// `u = exp(-2t) sin(x + y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    /// `f1 = f2 = u^2 / 2`.
    Burgers2d,
    /// `f1 = f2 = sin(u)`.
    SinFlux2d,
    /// No convection; `u` solves the heat equation without a source.
    Heat,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Burgers2d => "burgers2d",
            Problem::SinFlux2d => "sinflux2d",
            Problem::Heat => "heat",
        }
    }
}

impl FromStr for Problem {
    type Err = DdgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "burgers2d" | "burgers" => Ok(Problem::Burgers2d),
            "sinflux2d" | "sinflux" => Ok(Problem::SinFlux2d),
            "heat" => Ok(Problem::Heat),
            _ => Err(DdgError::UnknownProblem(s.to_string())),
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed-form source `g = u_t + div f(u) - lap u` for the exact solution.
/// Since `u_t = lap u`, `g = div f(u)`.
pub fn manufacture_source(problem: Problem) -> Option<Arc<SourceFn>> {
    match problem {
        Problem::Burgers2d => Some(Arc::new(|x: f64, y: f64, t: f64| (-4.0 * t).exp() * (2.0 * (x + y)).sin())),
        Problem::SinFlux2d => Some(Arc::new(|x: f64, y: f64, t: f64| {
            let a = (-2.0 * t).exp();
            2.0 * a * (x + y).cos() * (a * (x + y).sin()).cos()
        })),
        Problem::Heat => None,
    }
}

/// A problem with its fluxes, exact solution and source.
#[derive(Clone)]
pub struct ProblemSpec {
    pub problem: Problem,
    pub flux: [Arc<dyn ScalarFlux>; 2],
    pub exact: TrigField,
    pub source: Option<Arc<SourceFn>>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec").field("problem", &self.problem).field("flux", &self.flux).finish()
    }
}

impl ProblemSpec {
    pub fn new(problem: Problem) -> Self {
        let flux: Arc<dyn ScalarFlux> = match problem {
            Problem::Burgers2d => Arc::new(Burgers),
            Problem::SinFlux2d => Arc::new(SineFlux),
            Problem::Heat => Arc::new(ZeroFlux),
        };
        Self { problem, flux: [flux.clone(), flux], exact: TrigField::manufactured(), source: manufacture_source(problem) }
    }

    /// `u_t + f1(u)_x + f2(u)_y - lap u - g` at a point; zero for a
    /// consistent problem.
    pub fn residual(&self, x: f64, y: f64, t: f64) -> f64 {
        let u = &self.exact;
        let v = u.value(x, y, t);
        let g = self.source.as_ref().map_or(0.0, |g| g(x, y, t));
        u.deriv(0, 0, 1, x, y, t) + self.flux[0].df(v) * u.deriv(1, 0, 0, x, y, t) + self.flux[1].df(v) * u.deriv(0, 1, 0, x, y, t)
            - u.deriv(2, 0, 0, x, y, t)
            - u.deriv(0, 2, 0, x, y, t)
            - g
    }
}

/// `beta1` as a number or the superconvergent choice `1 / (2k(k+1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta1 {
    Auto,
    Value(f64),
}

impl Beta1 {
    pub fn resolve(self, k: usize) -> f64 {
        match self {
            Beta1::Auto => FluxParams::special_beta1(k),
            Beta1::Value(v) => v,
        }
    }
}

impl FromStr for Beta1 {
    type Err = DdgError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Beta1::Auto);
        }
        let v = if let Some((a, b)) = s.split_once('/') {
            let (a, b): (f64, f64) = (parse_num(a)?, parse_num(b)?);
            a / b
        } else {
            parse_num(s)?
        };
        Ok(Beta1::Value(v))
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| DdgError::InvalidArgument(format!("not a number: '{s}'")))
}

/// Initial discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    L2,
    PiH,
    /// `u_I^p = Pi_h u - omega^p`.
    Corrected(usize),
}

impl InitMode {
    /// `corrected:p` with `p = min(1, k - 1)`.
    pub fn default_for(k: usize) -> Self {
        InitMode::Corrected(1.min(k.saturating_sub(1)))
    }
}

impl FromStr for InitMode {
    type Err = DdgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(InitMode::L2),
            "pih" => Ok(InitMode::PiH),
            _ => match s.strip_prefix("corrected:") {
                Some(p) => p
                    .parse()
                    .map(InitMode::Corrected)
                    .map_err(|_| DdgError::InvalidArgument(format!("bad correction order in '{s}'"))),
                None => Err(DdgError::InvalidArgument(format!("unknown init mode '{s}' (l2 | pih | corrected:p)"))),
            },
        }
    }
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitMode::L2 => f.write_str("l2"),
            InitMode::PiH => f.write_str("pih"),
            InitMode::Corrected(p) => write!(f, "corrected:{p}"),
        }
    }
}

/// Configuration of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: Problem,
    pub k: usize,
    pub n_list: Vec<usize>,
    pub beta0: f64,
    pub beta1: Beta1,
    /// `None` selects [`default_cfl`].
    pub cfl: Option<f64>,
    pub t_final: f64,
    /// `None` selects [`InitMode::default_for`].
    pub init: Option<InitMode>,
    /// Extra checks: residual identity of the problem and the defining
    /// conditions of the initial projection.
    pub verify: bool,
    pub exec: Execution,
}

impl RunConfig {
    /// Table settings: `beta0 = 12`, automatic `beta1`, `T = 1`.
    pub fn new(problem: Problem, k: usize, n_list: Vec<usize>) -> Self {
        Self {
            problem,
            k,
            n_list,
            beta0: 12.0,
            beta1: Beta1::Auto,
            cfl: None,
            t_final: 1.0,
            init: None,
            verify: false,
            exec: Execution::default(),
        }
    }

    pub fn beta1(&self) -> f64 {
        self.beta1.resolve(self.k)
    }

    pub fn cfl(&self) -> f64 {
        self.cfl.unwrap_or_else(|| default_cfl(self.k))
    }

    pub fn init(&self) -> InitMode {
        self.init.unwrap_or_else(|| InitMode::default_for(self.k))
    }

    pub fn params(&self) -> Result<FluxParams> {
        FluxParams::new(self.k, self.beta0, self.beta1())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(DdgError::InvalidArgument("k must be at least 1".into()));
        }
        if self.n_list.is_empty() || self.n_list.iter().any(|&n| n < 2) {
            return Err(DdgError::InvalidArgument("mesh sizes must be at least 2".into()));
        }
        if let Some(w) = self.n_list.windows(2).find(|w| w[1] != 2 * w[0]) {
            return Err(DdgError::InvalidArgument(format!("mesh sizes must double, got {} then {}", w[0], w[1])));
        }
        if let InitMode::Corrected(p) = self.init() {
            if p >= self.k {
                return Err(DdgError::InvalidArgument(format!("correction order p = {p} must be at most k - 1 = {}", self.k - 1)));
            }
        }
        TimeConfig::new(self.t_final, self.cfl())?;
        self.params()?;
        Ok(())
    }

    fn context(&self, n: usize) -> String {
        format!(
            "{} k={} N={n} beta0={} beta1={} cfl={} init={}",
            self.problem,
            self.k,
            self.beta0,
            self.beta1(),
            self.cfl(),
            self.init()
        )
    }
}

/// Initial field for `mode`.
pub fn initial_field(spec: &ProblemSpec, mode: InitMode, mesh: Arc<Mesh2D>, k: usize, params: &FluxParams) -> Result<DGField> {
    match mode {
        InitMode::L2 => l2_project(&spec.exact, 0.0, mesh, k),
        InitMode::PiH => project_pi_h(&spec.exact, 0.0, mesh, k, params),
        InitMode::Corrected(p) => corrected_projection(&spec.exact, 0.0, p, mesh, k, params, spec.flux.clone()),
    }
}

/// All five errors of `uh` against `u(., ., t)`.
pub fn sample_errors(uh: &DGField, u: &dyn AnalyticField, t: f64) -> Result<[f64; 5]> {
    let (gx, gy) = error_gauss(uh, u, t)?;
    Ok([error_lobatto(uh, u, t)?, error_nodes(uh, u, t), gx, gy, error_l2(uh, u, t)?])
}

/// One mesh level: initialize, integrate to `t_final`, sample the errors.
pub fn run_case(cfg: &RunConfig, n: usize) -> Result<ErrorSample> {
    run_case_with_field(cfg, n).map(|(s, _)| s)
}

/// [`run_case`] that also returns the final field.
pub fn run_case_with_field(cfg: &RunConfig, n: usize) -> Result<(ErrorSample, DGField)> {
    let wrap = |e: DdgError| DdgError::Case { context: cfg.context(n), source: Box::new(e) };
    let inner = || -> Result<(ErrorSample, DGField)> {
        cfg.validate()?;
        let spec = ProblemSpec::new(cfg.problem);
        if cfg.verify {
            verify_problem(&spec)?;
        }
        let params = cfg.params()?;
        let mesh = Arc::new(Mesh2D::uniform(n, n)?);
        let u0 = initial_field(&spec, cfg.init(), mesh.clone(), cfg.k, &params)?;
        let ctx = OperatorContext::new(mesh, cfg.k, params, spec.flux.clone(), spec.source.clone())?.with_execution(cfg.exec);
        let (uh, diag) = integrate(&u0, &TimeConfig::new(cfg.t_final, cfg.cfl())?, &ctx)?;
        log::info!("{}: {} steps, dt = {:.3e}", cfg.context(n), diag.steps, diag.dt);
        let [e_l, e_n, e_gx, e_gy, l2] = sample_errors(&uh, &spec.exact, cfg.t_final)?;
        let sample = ErrorSample {
            n,
            k: cfg.k,
            t: cfg.t_final,
            beta0: cfg.beta0,
            beta1: cfg.beta1(),
            init: cfg.init().to_string(),
            cfl: cfg.cfl(),
            e_l,
            e_n,
            e_gx,
            e_gy,
            l2,
        };
        Ok((sample, uh))
    };
    inner().map_err(wrap)
}

/// Residual identity of the manufactured problem at 1000 pseudo-random
/// points.
pub fn verify_problem(spec: &ProblemSpec) -> Result<()> {
    // fixed low-discrepancy points, no RNG needed
    let phi = [0.754_877_666_246_692_7, 0.569_840_290_998_053_3, 0.430_159_709_001_946_7];
    let mut worst: f64 = 0.0;
    for s in 1..=1000 {
        let p: Vec<f64> = phi.iter().map(|a| (a * s as f64).fract()).collect();
        let (x, y, t) = (p[0] * std::f64::consts::TAU, p[1] * std::f64::consts::TAU, p[2]);
        worst = worst.max(spec.residual(x, y, t).abs());
    }
    if worst > 1e-10 {
        return Err(DdgError::ConditionViolated { what: format!("{} residual identity", spec.problem), residual: worst, tol: 1e-10 });
    }
    Ok(())
}

/// Errors and rates over a doubling sequence of meshes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub config: RunConfig,
    pub samples: Vec<ErrorSample>,
    /// Rates between consecutive samples; see [`rates`].
    pub rates: Vec<[Option<f64>; 5]>,
    pub commit: String,
}

/// Run every mesh level of `cfg`, the levels in parallel.
pub fn run_convergence(cfg: &RunConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    if cfg.n_list.len() < 2 {
        return Err(DdgError::InvalidArgument("rates require at least two mesh levels".into()));
    }
    let samples = par::map_indices(cfg.exec, cfg.n_list.len(), |i| run_case(cfg, cfg.n_list[i]))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let rates = rates(&samples)?;
    Ok(ConvergenceReport { config: cfg.clone(), samples, rates, commit: commit_hash() })
}

/// Current commit of the source tree, or `unknown`.
pub fn commit_hash() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "--short=12", "HEAD"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

pub const CSV_HEADER: &str = "N,e_l,rate_l,e_n,rate_n,e_gx,rate_gx,e_gy,rate_gy,l2,rate_l2";

impl ConvergenceReport {
    fn metadata(&self) -> String {
        let c = &self.config;
        let params = c.params().map(|p| p.beta1).unwrap_or(f64::NAN);
        format!(
            "# problem={}\n# k={}\n# beta0={}\n# beta1={}\n# cfl={}\n# t_final={}\n# init={}\n# commit={}\n",
            c.problem,
            c.k,
            c.beta0,
            params,
            c.cfl(),
            c.t_final,
            c.init(),
            self.commit
        )
    }

    fn rows(&self, err: impl Fn(f64) -> String, rate: impl Fn(f64) -> String) -> Vec<Vec<String>> {
        self.samples
            .iter()
            .enumerate()
            .map(|(r, s)| {
                let mut row = vec![s.n.to_string()];
                for (c, e) in s.columns().into_iter().enumerate() {
                    row.push(err(e));
                    row.push(if r == 0 { String::new() } else { self.rates[r - 1][c].map(&rate).unwrap_or_default() });
                }
                row
            })
            .collect()
    }

    /// Errors to 3 significant digits and rates to 1 decimal.
    pub fn to_csv(&self) -> String {
        self.csv(|e| format!("{e:.2e}"), |r| format!("{r:.1}"))
    }

    /// Full precision.
    pub fn to_csv_full(&self) -> String {
        self.csv(|e| format!("{e:e}"), |r| format!("{r}"))
    }

    fn csv(&self, err: impl Fn(f64) -> String, rate: impl Fn(f64) -> String) -> String {
        let mut out = self.metadata();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in self.rows(err, rate) {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Aligned table for terminals.
    pub fn to_text_table(&self) -> String {
        let head = ["N", "e_l", "rate", "e_n", "rate", "e_gx", "rate", "e_gy", "rate", "L2", "rate"];
        let rows = self.rows(|e| format!("{e:.2e}"), |r| format!("{r:.1}"));
        let widths: Vec<usize> = (0..head.len())
            .map(|c| rows.iter().map(|r| r[c].len()).chain([head[c].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(
            out,
            "{}  k={}  beta0={}  beta1={:.6}  cfl={}  T={}  init={}",
            c.problem,
            c.k,
            c.beta0,
            c.beta1(),
            c.cfl(),
            c.t_final,
            c.init()
        );
        let line = |cells: &[String]| -> String {
            cells.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect::<Vec<_>>().join("  ")
        };
        out.push_str(&line(&head.map(String::from)));
        out.push('\n');
        for r in &rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Fourth-order central difference.
    fn d4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn sources_match_finite_difference_residual() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for problem in [Problem::Burgers2d, Problem::SinFlux2d, Problem::Heat] {
            let spec = ProblemSpec::new(problem);
            let u = |x: f64, y: f64, t: f64| (-2.0 * t).exp() * (x + y).sin();
            let f = |v: f64| spec.flux[0].f(v);
            for _ in 0..200 {
                let (x, y, t) = (rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3), rng.gen_range(0.0..1.0));
                let h = 1e-3;
                let ut = d4(|s| u(x, y, s), t, h);
                let fx = d4(|s| f(u(s, y, t)), x, h);
                let fy = d4(|s| f(u(x, s, t)), y, h);
                let lap = (u(x + h, y, t) + u(x - h, y, t) + u(x, y + h, t) + u(x, y - h, t) - 4.0 * u(x, y, t)) / (h * h);
                let g = spec.source.as_ref().map_or(0.0, |g| g(x, y, t));
                assert!((ut + fx + fy - lap - g).abs() < 1e-6, "{problem}");
            }
            verify_problem(&spec).unwrap();
        }
    }

    #[test]
    fn source_examples() {
        let g = manufacture_source(Problem::Burgers2d).unwrap();
        assert!((g(std::f64::consts::FRAC_PI_8, std::f64::consts::FRAC_PI_8, 0.0) - 1.0).abs() < 1e-15);
        let g = manufacture_source(Problem::SinFlux2d).unwrap();
        assert!((g(0.0, 0.0, 0.3) - 2.0 * (-0.6f64).exp()).abs() < 1e-15);
        assert!(manufacture_source(Problem::Heat).is_none());
        assert!(matches!("wave".parse::<Problem>(), Err(DdgError::UnknownProblem(_))));
    }

    #[test]
    fn parsing() {
        assert_eq!("auto".parse::<Beta1>().unwrap(), Beta1::Auto);
        assert_eq!("1/4".parse::<Beta1>().unwrap(), Beta1::Value(0.25));
        assert_eq!("0.5".parse::<Beta1>().unwrap(), Beta1::Value(0.5));
        assert!("x".parse::<Beta1>().is_err());
        assert_eq!(Beta1::Auto.resolve(2), 1.0 / 12.0);
        assert_eq!("corrected:2".parse::<InitMode>().unwrap(), InitMode::Corrected(2));
        assert_eq!("pih".parse::<InitMode>().unwrap(), InitMode::PiH);
        assert!("corrected:x".parse::<InitMode>().is_err());
        assert_eq!(InitMode::default_for(1), InitMode::Corrected(0));
        assert_eq!(InitMode::default_for(3), InitMode::Corrected(1));
        assert_eq!(InitMode::Corrected(1).to_string(), "corrected:1");
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::new(Problem::Burgers2d, 2, vec![4, 8, 16]);
        c.validate().unwrap();
        c.n_list = vec![4, 12];
        assert!(c.validate().is_err());
        c.n_list = vec![4, 8];
        c.init = Some(InitMode::Corrected(2));
        assert!(c.validate().is_err());
        c.init = None;
        c.n_list = vec![4];
        assert!(run_convergence(&c).is_err());
    }

    #[test]
    fn zero_time_errors_are_projection_errors() {
        let mut c = RunConfig::new(Problem::Burgers2d, 2, vec![4]);
        c.t_final = 0.0;
        c.init = Some(InitMode::PiH);
        let s = run_case(&c, 4).unwrap();
        let mesh = Arc::new(Mesh2D::uniform(4, 4).unwrap());
        let u = TrigField::manufactured();
        let pi = project_pi_h(&u, 0.0, mesh, 2, &c.params().unwrap()).unwrap();
        let e = sample_errors(&pi, &u, 0.0).unwrap();
        assert_eq!([s.e_l, s.e_n, s.e_gx, s.e_gy, s.l2], e);
    }

    #[test]
    fn report_is_deterministic_and_well_formed() {
        let mut c = RunConfig::new(Problem::Heat, 1, vec![4, 8]);
        c.t_final = 0.05;
        let a = run_convergence(&c).unwrap();
        let b = run_convergence(&c).unwrap();
        assert_eq!(a.to_csv_full(), b.to_csv_full());
        let csv = a.to_csv();
        let lines: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').count(), 11);
        assert!(lines[1].split(',').nth(2).unwrap().is_empty());
        assert!(csv.contains("# init=corrected:0"));
        assert!(a.to_text_table().lines().count() == 4);
    }

    #[test]
    fn errors_carry_context() {
        let mut c = RunConfig::new(Problem::Burgers2d, 2, vec![4]);
        c.cfl = Some(0.5);
        c.t_final = 5.0;
        let e = run_case(&c, 4).unwrap_err();
        assert!(matches!(&e, DdgError::Case { source, .. } if matches!(**source, DdgError::BlowUp { .. })));
        assert!(e.to_string().contains("burgers2d k=2 N=4"));
    }
}
