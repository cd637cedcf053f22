use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wpl_core::energy::{alpha_density, energy_report, first_variation, mu_density, tail_mass, PenaltyConfig};
use wpl_core::grid::{Boundary, Field, Grid};
use wpl_core::shapes::{apply_bump, insert_sphere, recovery_field, RadiusSchedule, Shape, SphereInsertSpec};
use wpl_core::BumpSpec;

fn smooth(grid: &Grid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let modes: Vec<([f64; 3], f64)> = (0..3).map(|_| ([0, 1, 2].map(|_| rng.random_range(1..3) as f64 * std::f64::consts::TAU), rng.random_range(0.0..6.0))).collect();
    (0..grid.len())
        .map(|i| {
            let x = grid.center(i);
            modes.iter().map(|(k, p)| (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + p).sin()).sum::<f64>() / 3.0 + rng.random_range(-0.1..0.1)
        })
        .collect()
}

#[test]
fn first_variation_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for bc in [Boundary::Periodic, Boundary::NeumannReflect, Boundary::DirichletMinusOne] {
        let grid = Grid::with_zero_origin(&[12, 12, 12], 1.0 / 12.0, bc).unwrap();
        let f = Field::new(grid.clone(), 0.4, smooth(&grid, &mut rng)).unwrap();
        let p = PenaltyConfig { area_weight: 0.3, lambda_area: 0.7, target_area: 0.5, chi_volume: 1.1, target_volume: 0.2, sigma: Some(1.5), kappa: None, topo: None };
        let g = first_variation(&f, &p);
        for _ in 0..3 {
            let phi: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let analytic: f64 = g.values().iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>() * grid.cell_volume();
            let t = 1e-6;
            let e = |s: f64| energy_report(&f.with_values(f.values().iter().zip(&phi).map(|(u, q)| u + s * q).collect()).unwrap(), &p).total_E;
            let fd = (e(t) - e(-t)) / (2.0 * t);
            assert!((fd - analytic).abs() <= 1e-5 * analytic.abs(), "{bc:?}: fd {fd} vs analytic {analytic}");
        }
    }
}

#[test]
fn ball_masses_obey_the_rescaling_identities() {
    // û(y) = u(x0 + λy) lives on a grid with spacing h/λ and eps/λ.
    let (n, h, eps, lambda) = (96, 1.0 / 96.0, 0.05, 2.5);
    let x0 = [0.5, 0.5, 0.0];
    let grid = Grid::with_zero_origin(&[n, n], h, Boundary::NeumannReflect).unwrap();
    let u = recovery_field(&Shape::circle([0.5, 0.5], 0.3), &grid, eps).unwrap();
    let scaled_grid = Grid::new(&[n, n], h / lambda, &[-0.5 / lambda, -0.5 / lambda], Boundary::NeumannReflect).unwrap();
    let u_hat = recovery_field(&Shape::circle([0.0, 0.0], 0.3 / lambda), &scaled_grid, eps / lambda).unwrap();
    for r in [0.2, 0.35, 0.45] {
        let r_hat = r / lambda;
        // n = 2: r^{1-n} μ(B_r) and r^{3-n} α(B_r) are scale invariant.
        let mu = mu_density(&u).ball_mass(&x0, r) / r;
        let mu_hat = mu_density(&u_hat).ball_mass(&[0.0; 3], r_hat) / r_hat;
        let al = alpha_density(&u).ball_mass(&x0, r) * r;
        let al_hat = alpha_density(&u_hat).ball_mass(&[0.0; 3], r_hat) * r_hat;
        assert!((mu - mu_hat).abs() <= 0.02 * mu, "mu at r = {r}: {mu} vs {mu_hat}");
        assert!((al - al_hat).abs() <= 0.02 * al, "alpha at r = {r}: {al} vs {al_hat}");
    }
}

#[test]
fn sphere_insertion_only_touches_the_ball() {
    let grid = Grid::with_zero_origin(&[96, 48, 48], 1.0 / 64.0, Boundary::NeumannReflect).unwrap();
    let eps = 0.0625;
    let base = recovery_field(&Shape::sphere([0.22, 0.375, 0.375], 0.08), &grid, eps).unwrap();
    let spec = SphereInsertSpec { x0: [1.1, 0.375, 0.375], r: 0.3, r_eps: RadiusSchedule::Fixed(0.14) };
    let out = insert_sphere(&base, &spec).unwrap();
    let inside = grid.ball_cells(&spec.x0, spec.r);
    for i in 0..grid.len() {
        if !inside.contains(&i) {
            assert_eq!(out.values()[i].to_bits(), base.values()[i].to_bits());
        }
    }
    assert!(inside.iter().any(|&i| out.values()[i] > 0.0));
}

/// `(4π/c0) ∫ (r + eps t)^2 e(t) dt` with `e = ½ sech^4(t/√2)`, the diffuse
/// area of a sphere carrying the tanh layer.
fn layered_sphere_area(r: f64, eps: f64) -> f64 {
    let (lo, hi, n) = (-r / eps, 40.0, 400_000);
    let dt = (hi - lo) / n as f64;
    let sum: f64 = (0..n)
        .map(|i| {
            let t = lo + (i as f64 + 0.5) * dt;
            (r + eps * t).powi(2) * 0.5 * (t / std::f64::consts::SQRT_2).cosh().powi(-4)
        })
        .sum();
    4.0 * std::f64::consts::PI * sum * dt / wpl_core::energy::C0
}

#[test]
fn inserted_sphere_carries_its_area_and_willmore_energy() {
    let grid = Grid::with_zero_origin(&[80, 80, 80], 1.0 / 80.0, Boundary::NeumannReflect).unwrap();
    let eps = 0.05;
    let base = Field::constant(grid, eps, -1.0).unwrap();
    let (x0, r_eps) = ([0.5; 3], 0.2);
    let out = insert_sphere(&base, &SphereInsertSpec { x0, r: 0.45, r_eps: RadiusSchedule::Fixed(r_eps) }).unwrap();
    let area = mu_density(&out).ball_mass(&x0, 0.45);
    let will = alpha_density(&out).ball_mass(&x0, 0.45);
    let oracle = layered_sphere_area(r_eps, eps);
    assert!((area - oracle).abs() <= 0.01 * oracle, "area {area} vs {oracle}");
    assert!((will - 16.0 * std::f64::consts::PI).abs() <= 0.15 * 16.0 * std::f64::consts::PI, "willmore {will}");
}

#[test]
fn tail_of_a_raised_bump_is_stable_under_refinement() {
    let eps = 0.08;
    let tail = |n: usize| {
        let grid = Grid::with_zero_origin(&[2 * n, n], 1.0 / n as f64, Boundary::NeumannReflect).unwrap();
        let slab = Shape::slab(0, 0.3);
        let base = recovery_field(&slab, &grid, eps).unwrap();
        let bump = BumpSpec { amplitude: 0.5, sign: -1.0, ..BumpSpec::new([1.2, 0.5, 0.0], 0.0, 1.0) };
        let u = apply_bump(&base, &bump, &slab).unwrap();
        tail_mass(&u)
    };
    let (coarse, fine) = (tail(128), tail(256));
    assert!(coarse > 0.0 && coarse.is_finite());
    assert!((coarse - fine).abs() <= 0.02 * fine, "{coarse} vs {fine}");
}
