use std::sync::Arc;

use ddg_core::flux::gamma_of_beta1;
use ddg_core::projections::{project_pi_h, LineProjector};
use ddg_core::timestep::rk4_step;
use ddg_core::{Burgers, DGField, FluxParams, Mesh2D, OperatorContext, ScalarFlux, SineFlux};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn random_field(mesh: Arc<Mesh2D>, k: usize, seed: u64) -> DGField {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let len = mesh.n_cells() * (k + 1) * (k + 1);
    let c = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    DGField::from_coeffs(mesh, k, 0.0, c).unwrap()
}

fn flux(which: bool) -> Arc<dyn ScalarFlux> {
    if which {
        Arc::new(Burgers)
    } else {
        Arc::new(SineFlux)
    }
}

/// `sup 2 (v(1) - 2 b v'(1))^2 / int v^2` over `P^{k-1}` in the monomial
/// basis, as `2 a^T M^{-1} a`.
fn gamma_oracle(k: usize, beta1: f64) -> f64 {
    let m = nalgebra::DMatrix::from_fn(k, k, |i, j| if (i + j) % 2 == 0 { 2.0 / (i + j + 1) as f64 } else { 0.0 });
    let a = nalgebra::DVector::from_fn(k, |j, _| 1.0 - 2.0 * beta1 * j as f64);
    2.0 * a.dot(&m.cholesky().unwrap().solve(&a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn godunov_is_an_e_flux(a in -3.0f64..3.0, b in -3.0f64..3.0, burgers: bool) {
        let f = flux(burgers);
        let fh = f.godunov(a, b);
        for s in 0..=200 {
            let w = a + (b - a) * s as f64 / 200.0;
            prop_assert!((fh - f.f(w)) * (b - a) <= 1e-12);
        }
        prop_assert!((f.godunov(a, a) - f.f(a)).abs() < 1e-15);
    }

    #[test]
    fn gamma_closed_form_matches_oracle(k in 1usize..5, beta1 in -0.5f64..1.0) {
        let g = gamma_of_beta1(k, beta1).unwrap();
        prop_assert!((g - gamma_oracle(k, beta1)).abs() <= 1e-9 * g.max(1.0));
    }

    #[test]
    fn entropy_and_coercivity(seed: u64, k in 1usize..4, beta1 in 0.0f64..0.5, burgers: bool) {
        let mesh = Arc::new(Mesh2D::uniform(3, 4).unwrap());
        let params = FluxParams::new(k, gamma_of_beta1(k, beta1).unwrap() + 1.0, beta1).unwrap();
        let ctx = OperatorContext::new(mesh.clone(), k, params, [flux(burgers), flux(burgers)], None).unwrap();
        let v = random_field(mesh, k, seed);
        prop_assert!(ctx.form_f(&v, &v).unwrap() <= 1e-10);
        let ratio = ctx.bilinear_a(&v, &v).unwrap() / ctx.energy_norm_sq(&v).unwrap();
        prop_assert!(ratio >= 0.005, "ratio {}", ratio);
    }

    #[test]
    fn rk4_step_conserves_mass(seed: u64, k in 1usize..4, burgers: bool) {
        let mesh = Arc::new(Mesh2D::uniform(4, 4).unwrap());
        let params = FluxParams::new(k, 12.0, FluxParams::special_beta1(k)).unwrap();
        let ctx = OperatorContext::new(mesh.clone(), k, params, [flux(burgers), flux(burgers)], None).unwrap();
        let u = random_field(mesh, k, seed);
        let v = rk4_step(&u, 0.0, 1e-3, &ctx).unwrap();
        prop_assert!((v.total_mass() - u.total_mass()).abs() <= 1e-12);
    }

    #[test]
    fn line_projection_conditions(seed: u64, k in 1usize..5, n in 3usize..9) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let widths: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
        let (a, b, p): (f64, f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..6.0));
        let params = FluxParams::new(k, 12.0, FluxParams::special_beta1(k)).unwrap();
        let line = LineProjector::new(widths, k, &params).unwrap();
        let w = |d: usize, x: f64| if d == 0 { a * (x + p).sin() + b * (2.0 * x).cos() } else { a * (x + p).cos() - 2.0 * b * (2.0 * x).sin() };
        let s = line.sample(0.0, w);
        let c = line.project(&s).unwrap();
        let sum: Vec<f64> = s.node_value.iter().map(|v| 2.0 * v).collect();
        prop_assert!(line.interface_residual(&c, &sum, &s.node_deriv) <= 1e-9);
    }
}

#[test]
fn pi_h_reproduces_constants() {
    let mesh = Arc::new(Mesh2D::uniform(4, 4).unwrap());
    for k in 1..=3 {
        let params = FluxParams::new(k, 12.0, FluxParams::special_beta1(k)).unwrap();
        let c = ddg_core::analytic::ConstantField(2.5);
        let p = project_pi_h(&c, 0.0, mesh.clone(), k, &params).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((p.coeff(i, j, 0, 0) - 2.5).abs() < 1e-12);
                assert!(p.cell(i, j)[1..].iter().all(|v| v.abs() < 1e-12));
            }
        }
    }
}
