//! The diffuse functionals: Modica-Mortola area `S_eps`, diffuse Willmore
//! energy `W_eps`, their localising densities, the discrepancy densities,
//! penalised totals and the analytic first variation.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::grid::{integrate, Field, Grid, Point};
use crate::topo::{topo_energy, Phase, TopoConfig};

/// The quartic double well `W(u) = (u^2 - 1)^2 / 4`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleWell;

impl DoubleWell {
    /// `c0 = ∫_{-1}^{1} sqrt(2 W(s)) ds`.
    pub const C0: f64 = 2.0 * std::f64::consts::SQRT_2 / 3.0;

    #[inline]
    pub fn w(u: f64) -> f64 {
        let a = u * u - 1.0;
        0.25 * a * a
    }

    #[inline]
    pub fn dw(u: f64) -> f64 {
        u * u * u - u
    }

    #[inline]
    pub fn ddw(u: f64) -> f64 {
        3.0 * u * u - 1.0
    }
}

pub const C0: f64 = DoubleWell::C0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Mu,
    Alpha,
    XiPlus,
    XiAbs,
    WillmoreIntegrand,
    BandMass,
}

/// Per-cell density on a grid; `total()` is the midpoint-rule integral.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub grid: Grid,
    pub kind: DensityKind,
    pub values: Vec<f64>,
}

impl DensityField {
    pub fn total(&self) -> f64 {
        integrate(&self.grid, &self.values)
    }

    /// Mass of the cells whose centres lie in `B_r(x)`.
    pub fn ball_mass(&self, x: &Point, r: f64) -> f64 {
        self.grid.ball_cells(x, r).into_iter().map(|i| self.values[i]).sum::<f64>() * self.grid.cell_volume()
    }
}

/// Penalty weights for `W + Λ S + λ (S - S0)^2 + χ (½∫(u+1) - V)^2 + w_topo (C¹ + C²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    /// Plain area weight `Λ` (the `W + Λ S` family); 0 by default.
    pub area_weight: f64,
    pub lambda_area: f64,
    pub target_area: f64,
    pub chi_volume: f64,
    pub target_volume: f64,
    /// When set, the area penalty weight is `eps^-sigma` instead of `lambda_area`.
    pub sigma: Option<f64>,
    /// When set, the topological weight is `eps^-kappa` instead of 1.
    pub kappa: Option<f64>,
    pub topo: Option<TopoConfig>,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            area_weight: 0.0,
            lambda_area: 0.0,
            target_area: 0.0,
            chi_volume: 0.0,
            target_volume: 0.0,
            sigma: None,
            kappa: None,
            topo: None,
        }
    }
}

impl PenaltyConfig {
    /// Pure Willmore energy, no penalties.
    pub fn none() -> Self {
        Self::default()
    }

    /// `W + S`.
    pub fn willmore_plus_area() -> Self {
        Self { area_weight: 1.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Penalty(m));
        for (name, v) in [("area_weight", self.area_weight), ("lambda_area", self.lambda_area), ("chi_volume", self.chi_volume)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !self.target_area.is_finite() || !self.target_volume.is_finite() {
            return bad("targets must be finite".into());
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s < 4.0) {
                return bad(format!("sigma must lie in (0, 4), got {s}"));
            }
        }
        if let Some(k) = self.kappa {
            if !(k > 3.0 && k.is_finite()) {
                return bad(format!("kappa must exceed 3, got {k}"));
            }
        }
        if let Some(t) = &self.topo {
            t.validate()?;
        }
        Ok(())
    }

    pub fn effective_lambda(&self, eps: f64) -> f64 {
        match self.sigma {
            Some(s) => eps.powf(-s),
            None => self.lambda_area,
        }
    }

    pub fn topo_weight(&self, eps: f64) -> f64 {
        match self.kappa {
            Some(k) => eps.powf(-k),
            None => 1.0,
        }
    }
}

/// Scalars of one field. Serialises with the field names used in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct EnergyReport {
    pub S_eps: f64,
    pub W_eps: f64,
    pub total_mu: f64,
    pub total_alpha: f64,
    pub xi_plus_total: f64,
    pub xi_abs_total: f64,
    /// `½∫(u+1) dx`.
    pub volume_term: f64,
    /// `Λ S_eps`.
    pub area_term: f64,
    pub penalty_area: f64,
    pub penalty_volume: f64,
    pub penalty_topo: f64,
    /// `eps^-3 ∫_{interior, |u|>1} W'(u)^2`.
    pub tail: f64,
    pub total_E: f64,
}

/// Pointwise densities of one field, computed in a single pass.
struct Pointwise {
    v: Vec<f64>,
    mu: Vec<f64>,
    alpha: Vec<f64>,
    xi: Vec<f64>,
}

fn pointwise(f: &Field) -> Pointwise {
    let eps = f.eps();
    let grid = f.grid();
    let u = f.values();
    let lap = grid.laplacian_values(u, -1.0);
    let g2 = grid.gradient_sq_values(u);
    let n = u.len();
    let (mut v, mut mu, mut alpha, mut xi) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let w = DoubleWell::w(u[i]) / eps;
        let grad = 0.5 * eps * g2[i];
        let vi = -eps * lap[i] + DoubleWell::dw(u[i]) / eps;
        v[i] = vi;
        mu[i] = (grad + w) / C0;
        alpha[i] = vi * vi / (C0 * eps);
        xi[i] = grad - w;
    }
    Pointwise { v, mu, alpha, xi }
}

/// `v_eps = -eps Δu + W'(u)/eps` per cell (signed).
pub fn willmore_integrand(f: &Field) -> DensityField {
    let lap = f.grid().laplacian_values(f.values(), -1.0);
    let eps = f.eps();
    let values = f.values().iter().zip(&lap).map(|(&u, &l)| -eps * l + DoubleWell::dw(u) / eps).collect();
    DensityField { grid: f.grid().clone(), kind: DensityKind::WillmoreIntegrand, values }
}

/// Density of `mu_eps`: `(1/c0) [(eps/2)|∇u|^2 + W(u)/eps]`.
pub fn mu_density(f: &Field) -> DensityField {
    let g2 = f.grid().gradient_sq_values(f.values());
    let eps = f.eps();
    let values = f.values().iter().zip(&g2).map(|(&u, &g)| (0.5 * eps * g + DoubleWell::w(u) / eps) / C0).collect();
    DensityField { grid: f.grid().clone(), kind: DensityKind::Mu, values }
}

/// Density of `alpha_eps`: `v_eps^2 / (c0 eps)`.
pub fn alpha_density(f: &Field) -> DensityField {
    let eps = f.eps();
    let mut d = willmore_integrand(f);
    d.values.iter_mut().for_each(|v| *v = *v * *v / (C0 * eps));
    d.kind = DensityKind::Alpha;
    d
}

/// Positive part and absolute value of `(eps/2)|∇u|^2 - W(u)/eps`.
pub fn discrepancy_densities(f: &Field) -> (DensityField, DensityField) {
    let g2 = f.grid().gradient_sq_values(f.values());
    let eps = f.eps();
    let signed: Vec<f64> = f.values().iter().zip(&g2).map(|(&u, &g)| 0.5 * eps * g - DoubleWell::w(u) / eps).collect();
    let plus = signed.iter().map(|d| d.max(0.0)).collect();
    let abs = signed.iter().map(|d| d.abs()).collect();
    (
        DensityField { grid: f.grid().clone(), kind: DensityKind::XiPlus, values: plus },
        DensityField { grid: f.grid().clone(), kind: DensityKind::XiAbs, values: abs },
    )
}

/// `mu_eps` density restricted to cells with `1 - tau <= |u| <= 1`.
pub fn band_density(f: &Field, tau: f64) -> DensityField {
    let mut d = mu_density(f);
    for (m, &u) in d.values.iter_mut().zip(f.values()) {
        let a = u.abs();
        if !(a >= 1.0 - tau && a <= 1.0) {
            *m = 0.0;
        }
    }
    d.kind = DensityKind::BandMass;
    d
}

/// Interior cells: centre at distance `>= 2 eps` from the box boundary.
pub fn interior_mask(f: &Field) -> Vec<bool> {
    f.grid().interior_mask(2.0 * f.eps())
}

/// `eps^-3 ∫ W'(u)^2` over interior cells with `|u| > 1`.
pub fn tail_mass(f: &Field) -> f64 {
    let mask = interior_mask(f);
    let s: f64 = f
        .values()
        .iter()
        .zip(&mask)
        .filter(|(u, &m)| m && u.abs() > 1.0)
        .map(|(&u, _)| DoubleWell::dw(u).powi(2))
        .fold(0.0, |a, b| a + b);
    s * f.grid().cell_volume() / f.eps().powi(3)
}

/// `S_eps` alone.
pub fn area(f: &Field) -> f64 {
    let eps = f.eps();
    let g2 = f.grid().gradient_sq_values(f.values());
    let s: f64 = f.values().iter().zip(&g2).map(|(&u, &g)| 0.5 * eps * g + DoubleWell::w(u) / eps).sum();
    s * f.grid().cell_volume() / C0
}

pub fn volume_term(f: &Field) -> f64 {
    0.5 * f.values().iter().map(|u| u + 1.0).sum::<f64>() * f.grid().cell_volume()
}

/// Only the scalars needed by descent: `(total_E, S_eps, W_eps)`.
pub(crate) fn objective(f: &Field, p: &PenaltyConfig) -> (f64, f64, f64) {
    let eps = f.eps();
    let grid = f.grid();
    let u = f.values();
    let lap = grid.laplacian_values(u, -1.0);
    let g2 = grid.gradient_sq_values(u);
    let (mut s, mut w) = (0.0, 0.0);
    for i in 0..u.len() {
        s += 0.5 * eps * g2[i] + DoubleWell::w(u[i]) / eps;
        let vi = -eps * lap[i] + DoubleWell::dw(u[i]) / eps;
        w += vi * vi;
    }
    let dv = grid.cell_volume();
    let s = s * dv / C0;
    let w = w * dv / (C0 * eps);
    let vol = volume_term(f);
    let mut total = w + p.area_weight * s + p.effective_lambda(eps) * (s - p.target_area).powi(2) + p.chi_volume * (vol - p.target_volume).powi(2);
    if let Some(t) = &p.topo {
        total += p.topo_weight(eps) * (topo_energy(f, t, Phase::One).estimate + topo_energy(f, t, Phase::Two).estimate);
    }
    (total, s, w)
}

pub fn energy_report(f: &Field, p: &PenaltyConfig) -> EnergyReport {
    let eps = f.eps();
    let grid = f.grid();
    let pw = pointwise(f);
    let s_eps = integrate(grid, &pw.mu);
    let w_eps = integrate(grid, &pw.alpha);
    let xi_plus_total = pw.xi.iter().map(|d| d.max(0.0)).sum::<f64>() * grid.cell_volume();
    let xi_abs_total = pw.xi.iter().map(|d| d.abs()).sum::<f64>() * grid.cell_volume();
    let vol = volume_term(f);
    let area_term = p.area_weight * s_eps;
    let penalty_area = p.effective_lambda(eps) * (s_eps - p.target_area).powi(2);
    let penalty_volume = p.chi_volume * (vol - p.target_volume).powi(2);
    let penalty_topo = match &p.topo {
        Some(t) => p.topo_weight(eps) * (topo_energy(f, t, Phase::One).estimate + topo_energy(f, t, Phase::Two).estimate),
        None => 0.0,
    };
    debug_assert_eq!(pw.v.len(), f.values().len());
    EnergyReport {
        S_eps: s_eps,
        W_eps: w_eps,
        total_mu: s_eps,
        total_alpha: w_eps,
        xi_plus_total,
        xi_abs_total,
        volume_term: vol,
        area_term,
        penalty_area,
        penalty_volume,
        penalty_topo,
        tail: tail_mass(f),
        total_E: w_eps + area_term + penalty_area + penalty_volume + penalty_topo,
    }
}

/// Per-cell `L^2` gradient of the discrete energy (topological term excluded):
/// `dE = Σ grad_i φ_i h^n` for every perturbation `φ`.
pub fn first_variation(f: &Field, p: &PenaltyConfig) -> Field {
    let eps = f.eps();
    let grid = f.grid();
    let u = f.values();
    let lap = grid.laplacian_values(u, -1.0);
    let v: Vec<f64> = u.iter().zip(&lap).map(|(&ui, &l)| -eps * l + DoubleWell::dw(ui) / eps).collect();
    // Transpose of the affine Laplacian is its linear part (homogeneous ghosts).
    let lap_v = grid.laplacian_values(&v, 0.0);
    let (coef_s, coef_vol) = if p.lambda_area != 0.0 || p.sigma.is_some() || p.chi_volume != 0.0 {
        let s = area(f);
        let vol = volume_term(f);
        (
            p.area_weight + 2.0 * p.effective_lambda(eps) * (s - p.target_area),
            p.chi_volume * (vol - p.target_volume),
        )
    } else {
        (p.area_weight, 0.0)
    };
    let k = 2.0 / (C0 * eps);
    let values = (0..u.len())
        .map(|i| {
            let dw = k * (-eps * lap_v[i] + DoubleWell::ddw(u[i]) * v[i] / eps);
            dw + coef_s * v[i] / C0 + coef_vol
        })
        .collect();
    Field::with_resolution(grid.clone(), eps, values, 1.0).expect("finite variation")
}

/// `L^2` norm `sqrt(Σ g^2 h^n)`.
pub fn l2_norm(f: &Field) -> f64 {
    (f.values().iter().map(|g| g * g).sum::<f64>() * f.grid().cell_volume()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid2(n: usize, bc: Boundary) -> Grid {
        Grid::with_zero_origin(&[n, n], 1.0 / n as f64, bc).unwrap()
    }

    #[test]
    fn double_well_constants() {
        assert_eq!(DoubleWell::w(1.0), 0.0);
        assert_eq!(DoubleWell::w(-1.0), 0.0);
        assert_eq!(DoubleWell::dw(1.0), 0.0);
        assert_eq!(DoubleWell::dw(-1.0), 0.0);
        assert_eq!(DoubleWell::ddw(0.0), -1.0);
        // c0 = ∫ sqrt(2W) by midpoint quadrature.
        let n = 200_000;
        let q: f64 = (0..n)
            .map(|i| {
                let s = -1.0 + (i as f64 + 0.5) * 2.0 / n as f64;
                (2.0 * DoubleWell::w(s)).sqrt() * 2.0 / n as f64
            })
            .sum();
        assert!((q - C0).abs() < 1e-9);
    }

    #[test]
    fn constant_fields() {
        let g = grid2(16, Boundary::Periodic);
        let eps = 0.25;
        let c = 0.3;
        let f = Field::constant(g.clone(), eps, c).unwrap();
        let v = willmore_integrand(&f);
        assert!(v.values.iter().all(|x| (x - (c * c * c - c) / eps).abs() < 1e-12));
        for c in [1.0, -1.0] {
            let f = Field::constant(g.clone(), eps, c).unwrap();
            assert!(willmore_integrand(&f).values.iter().all(|x| *x == 0.0));
            assert_eq!(mu_density(&f).total(), 0.0);
            assert_eq!(alpha_density(&f).total(), 0.0);
        }
        let zero = Field::constant(g.clone(), eps, 0.0).unwrap();
        assert!((mu_density(&zero).total() - 1.0 / (4.0 * C0 * eps)).abs() < 1e-12);
        assert_eq!(alpha_density(&zero).total(), 0.0);
        let (xp, xa) = discrepancy_densities(&zero);
        assert_eq!(xp.total(), 0.0);
        assert!((xa.total() - 1.0 / (4.0 * eps)).abs() < 1e-12);
    }

    #[test]
    fn tail_of_raised_box() {
        let g = Grid::with_zero_origin(&[20, 20], 0.05, Boundary::NeumannReflect).unwrap();
        let eps = 0.2;
        assert_eq!(tail_mass(&Field::constant(g.clone(), eps, 0.99).unwrap()), 0.0);
        let tau = 0.1;
        // Sub-box [0.4, 0.6]^2 is inside the interior mask (distance >= 0.4 from the boundary).
        let f = Field::from_fn(g, eps, |p| if (0.4..0.6).contains(&p[0]) && (0.4..0.6).contains(&p[1]) { 1.0 + tau } else { 0.5 }).unwrap();
        let omega = 0.04;
        let expect = omega * ((1.0 + tau).powi(3) - (1.0 + tau)).powi(2) / eps.powi(3);
        assert!((tail_mass(&f) - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn penalty_examples() {
        let g = grid2(16, Boundary::DirichletMinusOne);
        let f = Field::constant(g, 0.25, -1.0).unwrap();
        let r = energy_report(&f, &PenaltyConfig::none());
        assert_eq!(r.total_E, 0.0);
        let p = PenaltyConfig { chi_volume: 1.0, target_volume: 0.1, ..PenaltyConfig::default() };
        let r = energy_report(&f, &p);
        assert!((r.penalty_volume - 0.01).abs() < 1e-15);
        assert_eq!(r.W_eps + r.S_eps + r.penalty_area + r.penalty_topo + r.volume_term, 0.0);
        assert!((r.total_E - 0.01).abs() < 1e-15);
    }

    #[test]
    fn penalty_validation() {
        assert!(PenaltyConfig { sigma: Some(4.0), ..PenaltyConfig::default() }.validate().is_err());
        assert!(PenaltyConfig { sigma: Some(0.0), ..PenaltyConfig::default() }.validate().is_err());
        assert!(PenaltyConfig { kappa: Some(3.0), ..PenaltyConfig::default() }.validate().is_err());
        assert!(PenaltyConfig { sigma: Some(2.0), kappa: Some(3.5), ..PenaltyConfig::default() }.validate().is_ok());
        let p = PenaltyConfig { sigma: Some(2.0), ..PenaltyConfig::default() };
        assert!((p.effective_lambda(0.1) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn stationary_points_have_zero_variation() {
        let g = grid2(16, Boundary::Periodic);
        for c in [0.0, 1.0, -1.0] {
            let f = Field::constant(g.clone(), 0.25, c).unwrap();
            assert!(first_variation(&f, &PenaltyConfig::none()).values().iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn discrepancy_decomposition_matches_per_cell_oracle() {
        let g = Grid::with_zero_origin(&[12, 10, 9], 0.1, Boundary::NeumannReflect).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.3..1.3)).collect();
        let f = Field::new(g.clone(), 0.4, vals).unwrap();
        let (xp, xa) = discrepancy_densities(&f);
        // Independent per-cell evaluation with explicit neighbour lookups.
        let u = f.values();
        let h = g.h();
        let shape = g.shape().to_vec();
        for idx in 0..g.len() {
            let c = g.coords(idx);
            let mut g2 = 0.0;
            for a in 0..3 {
                let mut lo = c;
                let mut hi = c;
                let dm = if c[a] == 0 { (0.0, 1.0) } else { lo[a] -= 1; (u[idx] - u[g.index(lo)], 0.5) };
                let dp = if c[a] == shape[a] - 1 { (0.0, 1.0) } else { hi[a] += 1; (u[g.index(hi)] - u[idx], 0.5) };
                g2 += (dm.1 * dm.0 * dm.0 + dp.1 * dp.0 * dp.0) / (h * h);
            }
            let d = 0.5 * 0.4 * g2 - DoubleWell::w(u[idx]) / 0.4;
            assert!((xp.values[idx] - d.max(0.0)).abs() < 1e-12);
            assert!((xa.values[idx] - d.abs()).abs() < 1e-12);
            let minus = (-d).max(0.0);
            assert!((xa.values[idx] - (xp.values[idx] + minus)).abs() < 1e-12);
            assert!(xp.values[idx] <= xa.values[idx]);
        }
    }
}
