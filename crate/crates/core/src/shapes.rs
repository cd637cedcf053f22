//! Signed distances, the cut-off optimal profile, recovery fields and the two
//! counterexample perturbations (shrinking bumps and inserted spheres).

use serde::{Deserialize, Serialize};

use crate::error::ShapeError;
use crate::grid::{distance, Field, Grid, Point};

/// Which phase occupies the inside of a shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    InsidePlus,
    InsideMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    /// `tanh(t/√2)` cut off beyond `eps^{-1/2}`.
    CutOff,
    /// Plain `tanh(t/√2)`.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ShapeKind {
    Sphere { center: Point, radius: f64 },
    Circle { center: [f64; 2], radius: f64 },
    UnionOfSpheres(Vec<(Point, f64)>),
    /// Half-space `x[axis] < position`.
    Slab { axis: usize, position: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub kind: ShapeKind,
    pub orientation: Orientation,
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[inline]
fn q(t: f64) -> f64 {
    (t / SQRT_2).tanh()
}

/// Start of the blend, `eps^{-1/2}`.
pub fn cutoff_start(eps: f64) -> f64 {
    eps.powf(-0.5)
}

/// Plateau value `q(eps^{-1/2} + 1)` of the cut-off profile.
pub fn plateau(eps: f64) -> f64 {
    q(cutoff_start(eps) + 1.0)
}

/// Cut-off optimal profile: `tanh(t/√2)` for `|t| <= T = eps^{-1/2}`, constant
/// `±q(T+1)` for `|t| >= T+1`, quintic Hermite blend in between matching value
/// and two derivatives at both ends. Odd in `t`.
pub fn optimal_profile(t: f64, eps: f64) -> f64 {
    let big_t = cutoff_start(eps);
    let a = t.abs();
    let val = if a <= big_t {
        q(a)
    } else if a >= big_t + 1.0 {
        q(big_t + 1.0)
    } else {
        let q0 = q(big_t);
        let q1 = (1.0 - q0 * q0) / SQRT_2;
        let q2 = -SQRT_2 * q0 * q1;
        let p = q(big_t + 1.0);
        let s = a - big_t;
        let (s2, s3) = (s * s, s * s * s);
        let (s4, s5) = (s3 * s, s3 * s2);
        let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
        let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
        let h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
        let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        q0 * h0 + q1 * h1 + q2 * h2 + p * h5
    };
    val.copysign(t)
}

pub fn profile(kind: ProfileKind, t: f64, eps: f64) -> f64 {
    match kind {
        ProfileKind::CutOff => optimal_profile(t, eps),
        ProfileKind::Exact => q(t),
    }
}

impl Shape {
    pub fn sphere(center: Point, radius: f64) -> Self {
        Self { kind: ShapeKind::Sphere { center, radius }, orientation: Orientation::InsidePlus }
    }

    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        Self { kind: ShapeKind::Circle { center, radius }, orientation: Orientation::InsidePlus }
    }

    pub fn union(members: Vec<(Point, f64)>) -> Self {
        Self { kind: ShapeKind::UnionOfSpheres(members), orientation: Orientation::InsidePlus }
    }

    pub fn slab(axis: usize, position: f64) -> Self {
        Self { kind: ShapeKind::Slab { axis, position }, orientation: Orientation::InsidePlus }
    }

    pub fn oriented(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    /// Spatial dimension the shape lives in (`None` for slabs, which fit both).
    pub fn ndim(&self) -> Option<usize> {
        match self.kind {
            ShapeKind::Circle { .. } => Some(2),
            ShapeKind::Sphere { .. } | ShapeKind::UnionOfSpheres(_) => Some(3),
            ShapeKind::Slab { .. } => None,
        }
    }

    fn radii(&self) -> Vec<f64> {
        match &self.kind {
            ShapeKind::Sphere { radius, .. } | ShapeKind::Circle { radius, .. } => vec![*radius],
            ShapeKind::UnionOfSpheres(m) => m.iter().map(|(_, r)| *r).collect(),
            ShapeKind::Slab { .. } => vec![],
        }
    }

    /// Distance between the shape's boundary and the box boundary.
    fn box_margin(&self, grid: &Grid) -> f64 {
        let lo = grid.origin();
        let hi = grid.upper();
        let ball = |c: &Point, r: f64, n: usize| (0..n).map(|a| (c[a] - r - lo[a]).min(hi[a] - c[a] - r)).fold(f64::INFINITY, f64::min);
        match &self.kind {
            ShapeKind::Sphere { center, radius } => ball(center, *radius, 3),
            ShapeKind::Circle { center, radius } => ball(&[center[0], center[1], 0.0], *radius, 2),
            ShapeKind::UnionOfSpheres(m) => m.iter().map(|(c, r)| ball(c, *r, 3)).fold(f64::INFINITY, f64::min),
            ShapeKind::Slab { axis, position } => (position - lo[*axis]).min(hi[*axis] - position),
        }
    }

    /// Radii positive, dimensions match and the boundary stays `2 eps` inside the box.
    pub fn validate(&self, grid: &Grid, eps: f64) -> Result<(), ShapeError> {
        if let Some(r) = self.radii().into_iter().find(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(ShapeError::Radius(r));
        }
        match (self.ndim(), &self.kind) {
            (Some(n), _) if n != grid.ndim() => return Err(ShapeError::Dimension { shape: n, grid: grid.ndim() }),
            (None, ShapeKind::Slab { axis, .. }) if *axis >= grid.ndim() => {
                return Err(ShapeError::Dimension { shape: axis + 1, grid: grid.ndim() })
            }
            _ => {}
        }
        let required = 2.0 * eps;
        let margin = self.box_margin(grid);
        if margin < required {
            return Err(ShapeError::Margin { margin, required });
        }
        Ok(())
    }

    /// Sample points on the shape's boundary, spaced at most `spacing` apart
    /// (slabs are sampled on the part of the plane inside `grid`).
    pub fn boundary_points(&self, grid: &Grid, spacing: f64) -> Vec<Point> {
        match &self.kind {
            ShapeKind::Sphere { center, radius } => sphere_points(center, *radius, spacing),
            ShapeKind::Circle { center, radius } => {
                let n = ((2.0 * std::f64::consts::PI * radius / spacing).ceil() as usize).max(8);
                (0..n)
                    .map(|i| {
                        let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                        [center[0] + radius * a.cos(), center[1] + radius * a.sin(), 0.0]
                    })
                    .collect()
            }
            ShapeKind::UnionOfSpheres(m) => m.iter().flat_map(|(c, r)| sphere_points(c, *r, spacing)).collect(),
            ShapeKind::Slab { axis, position } => {
                let lo = grid.origin();
                let hi = grid.upper();
                let others: Vec<usize> = (0..grid.ndim()).filter(|a| a != axis).collect();
                let counts: Vec<usize> = others.iter().map(|&a| ((hi[a] - lo[a]) / spacing).ceil() as usize + 1).collect();
                let mut pts = Vec::new();
                let total: usize = counts.iter().product();
                for k in 0..total {
                    let mut p = [0.0; 3];
                    p[*axis] = *position;
                    let mut rest = k;
                    for (o, &a) in others.iter().enumerate() {
                        let i = rest % counts[o];
                        rest /= counts[o];
                        p[a] = lo[a] + (hi[a] - lo[a]) * i as f64 / (counts[o] - 1) as f64;
                    }
                    pts.push(p);
                }
                pts
            }
        }
    }
}

/// Fibonacci-lattice points on a sphere with neighbour spacing below `spacing`.
fn sphere_points(center: &Point, radius: f64, spacing: f64) -> Vec<Point> {
    // Lattice cells have area 4πr²/n; spacing ≈ sqrt(area) up to a constant < 1.2.
    let n = ((4.0 * std::f64::consts::PI * radius * radius * 1.44 / (spacing * spacing)).ceil() as usize).max(32);
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            [center[0] + radius * rho * th.cos(), center[1] + radius * rho * th.sin(), center[2] + radius * z]
        })
        .collect()
}

/// Exact signed distance to the shape boundary, negative inside.
pub fn signed_distance(s: &Shape, x: &Point) -> f64 {
    match &s.kind {
        ShapeKind::Sphere { center, radius } => distance(x, center) - radius,
        ShapeKind::Circle { center, radius } => ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt() - radius,
        ShapeKind::UnionOfSpheres(m) => m.iter().map(|(c, r)| distance(x, c) - r).fold(f64::INFINITY, f64::min),
        ShapeKind::Slab { axis, position } => x[*axis] - position,
    }
}

/// Recovery field `q_eps(±sdist/eps)` with the sign set by the orientation.
pub fn recovery_field(s: &Shape, grid: &Grid, eps: f64) -> Result<Field, ShapeError> {
    recovery_field_with(s, grid, eps, ProfileKind::CutOff)
}

pub fn recovery_field_with(s: &Shape, grid: &Grid, eps: f64, kind: ProfileKind) -> Result<Field, ShapeError> {
    s.validate(grid, eps)?;
    let sign = match s.orientation {
        Orientation::InsidePlus => -1.0,
        Orientation::InsideMinus => 1.0,
    };
    Ok(Field::from_fn(grid.clone(), eps, |p| profile(kind, sign * signed_distance(s, p) / eps, eps))?)
}

/// Sign `±1` of the limit phase field of a shape at a point (`+1` on ties).
pub fn limit_phase(s: &Shape, x: &Point) -> f64 {
    let inside = signed_distance(s, x) < 0.0;
    match (s.orientation, inside) {
        (Orientation::InsidePlus, true) | (Orientation::InsideMinus, false) => 1.0,
        _ => -1.0,
    }
}

/// The smooth radial bump `exp(1 - 1/(1-|y|^2))` on the unit ball, `g(0) = 1`.
pub fn bump_profile(y2: f64) -> f64 {
    if y2 < 1.0 {
        (1.0 - 1.0 / (1.0 - y2)).exp()
    } else {
        0.0
    }
}

/// A shrinking bump `eps^beta · amplitude · sign · g((x - x0)/eps^gamma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub x0: Point,
    pub beta: f64,
    pub gamma: f64,
    pub amplitude: f64,
    pub sign: f64,
}

impl BumpSpec {
    pub fn new(x0: Point, beta: f64, gamma: f64) -> Self {
        Self { x0, beta, gamma, amplitude: 1.0, sign: 1.0 }
    }

    /// Physical support radius `eps^gamma`.
    pub fn support_radius(&self, eps: f64) -> f64 {
        eps.powf(self.gamma)
    }

    pub fn value(&self, x: &Point, eps: f64, ndim: usize) -> f64 {
        let r = self.support_radius(eps);
        let y2 = (0..ndim).map(|a| ((x[a] - self.x0[a]) / r).powi(2)).sum::<f64>();
        eps.powf(self.beta) * self.amplitude * self.sign * bump_profile(y2)
    }

    /// Support inside the box and at distance `>= 2 sqrt(eps)` from the interface.
    pub fn validate(&self, grid: &Grid, eps: f64, interface: &Shape) -> Result<(), ShapeError> {
        if !(self.beta >= 0.0 && self.gamma >= 0.0) {
            return Err(ShapeError::BumpSupport(format!("beta and gamma must be >= 0 (beta={}, gamma={})", self.beta, self.gamma)));
        }
        if self.sign != 1.0 && self.sign != -1.0 {
            return Err(ShapeError::BumpSupport(format!("sign must be +1 or -1, got {}", self.sign)));
        }
        let r = self.support_radius(eps);
        if !grid.contains_ball(&self.x0, r) {
            return Err(ShapeError::BumpSupport(format!("support B_{r}({:?}) leaves the domain", self.x0)));
        }
        let clearance = signed_distance(interface, &self.x0).abs() - r;
        let needed = 2.0 * eps.sqrt();
        if clearance < needed {
            return Err(ShapeError::BumpSupport(format!("support is {clearance:.4} from the interface, need {needed:.4}")));
        }
        Ok(())
    }
}

/// Add the scaled bump to the field.
pub fn apply_bump(f: &Field, b: &BumpSpec, interface: &Shape) -> Result<Field, ShapeError> {
    apply_bumps(f, std::slice::from_ref(b), interface)
}

pub fn apply_bumps(f: &Field, bumps: &[BumpSpec], interface: &Shape) -> Result<Field, ShapeError> {
    let grid = f.grid();
    let eps = f.eps();
    for b in bumps {
        b.validate(grid, eps, interface)?;
    }
    let mut values = f.values().to_vec();
    for b in bumps {
        if b.amplitude == 0.0 {
            continue;
        }
        for idx in grid.ball_cells(&b.x0, b.support_radius(eps)) {
            values[idx] += b.value(&grid.center(idx), eps, grid.ndim());
        }
    }
    Ok(f.with_values(values)?)
}

/// Radical-inverse (Halton) point in the unit cube.
fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `n` bump centres from a Halton sequence, keeping only admissible points
/// (support inside the box, clear of the interface, and pairwise separated
/// by `2 · support radius`).
pub fn quasi_random_bumps(n: usize, template: &BumpSpec, grid: &Grid, eps: f64, interface: &Shape) -> Vec<BumpSpec> {
    let lo = grid.origin();
    let ext = grid.extent();
    let bases = [2usize, 3, 5];
    let r = template.support_radius(eps);
    let mut out: Vec<BumpSpec> = Vec::new();
    for i in 1..100_000 {
        if out.len() == n {
            break;
        }
        let mut x0 = [0.0; 3];
        for a in 0..grid.ndim() {
            x0[a] = lo[a] + ext[a] * halton(i, bases[a]);
        }
        let b = BumpSpec { x0, ..template.clone() };
        if b.validate(grid, eps, interface).is_ok() && out.iter().all(|o| distance(&o.x0, &x0) > 2.0 * r) {
            out.push(b);
        }
    }
    out
}

/// Radius of the inserted sphere as a function of eps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RadiusSchedule {
    Fixed(f64),
    /// `coef · eps^exponent`.
    Power { coef: f64, exponent: f64 },
}

impl RadiusSchedule {
    pub fn radius(&self, eps: f64) -> f64 {
        match self {
            RadiusSchedule::Fixed(r) => *r,
            RadiusSchedule::Power { coef, exponent } => coef * eps.powf(*exponent),
        }
    }
}

/// Replace the field on `B_r(x0)` by a small sphere interface of radius `r_eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereInsertSpec {
    pub x0: Point,
    /// Radius of the replaced ball.
    pub r: f64,
    pub r_eps: RadiusSchedule,
}

impl SphereInsertSpec {
    /// `eps^{3/4} < r_eps < r/2`.
    pub fn check_schedule(&self, eps: f64) -> Result<f64, ShapeError> {
        let r_eps = self.r_eps.radius(eps);
        let lower = eps.powf(0.75);
        let upper = self.r / 2.0;
        if !(r_eps > lower && r_eps < upper) {
            return Err(ShapeError::Schedule { r_eps, lower, upper, eps });
        }
        Ok(r_eps)
    }
}

/// Splice `±q_eps(sdist(x, ∂B_{r_eps}(x0))/eps)` into `B_r(x0)`; the sign
/// follows the surrounding phase so the splice matches the plateau.
pub fn insert_sphere(f: &Field, s: &SphereInsertSpec) -> Result<Field, ShapeError> {
    let eps = f.eps();
    let grid = f.grid();
    let r_eps = s.check_schedule(eps)?;
    if !grid.contains_ball(&s.x0, s.r) {
        return Err(ShapeError::BumpSupport(format!("insertion ball B_{}({:?}) leaves the domain", s.r, s.x0)));
    }
    let cells = grid.ball_cells(&s.x0, s.r);
    let center_value = f.sample(&s.x0);
    let deviation = cells.iter().map(|&i| (f.values()[i] - center_value).abs()).fold(0.0, f64::max);
    if deviation > 1e-12 {
        return Err(ShapeError::Splice(deviation));
    }
    let sign = if center_value >= 0.0 { 1.0 } else { -1.0 };
    let mut values = f.values().to_vec();
    for idx in cells {
        let d = distance(&grid.center(idx), &s.x0) - r_eps;
        values[idx] = sign * optimal_profile(d / eps, eps);
    }
    Ok(f.with_values(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn profile_values() {
        let eps = 0.01;
        assert_eq!(optimal_profile(0.0, eps), 0.0);
        assert!((optimal_profile(1.0, eps) - (1.0 / SQRT_2).tanh()).abs() < 1e-15);
        assert!((optimal_profile(1.0, eps) - 0.6088).abs() < 1e-3);
        let t = 2.0 * (cutoff_start(eps) + 1.0);
        assert_eq!(optimal_profile(t, eps), plateau(eps));
        assert_eq!(optimal_profile(-t, eps), -plateau(eps));
        let d = 1e-6;
        assert_eq!((optimal_profile(t + d, eps) - optimal_profile(t - d, eps)) / (2.0 * d), 0.0);
    }

    #[test]
    fn profile_is_odd_monotone_and_c2() {
        for eps in [0.08, 0.04, 0.01] {
            let big_t = cutoff_start(eps);
            let d = 1e-3;
            let mut prev = optimal_profile(-big_t - 3.0, eps);
            let mut t = -big_t - 3.0;
            while t < big_t + 3.0 {
                t += d;
                let v = optimal_profile(t, eps);
                assert!(v >= prev, "not monotone at t={t}");
                assert_eq!(v, -optimal_profile(-t, eps));
                prev = v;
            }
            // Second differences are continuous across both blend ends.
            let second = |t: f64| (optimal_profile(t + d, eps) - 2.0 * optimal_profile(t, eps) + optimal_profile(t - d, eps)) / (d * d);
            for end in [big_t, big_t + 1.0] {
                let jump = (second(end + 2.0 * d) - second(end - 2.0 * d)).abs();
                assert!(jump < 0.05, "second derivative jumps by {jump} at {end}");
            }
        }
    }

    #[test]
    fn sphere_and_union_distances() {
        let s = Shape::sphere([0.5, 0.5, 0.5], 0.2);
        assert_eq!(signed_distance(&s, &[0.5, 0.5, 0.5]), -0.2);
        assert!((signed_distance(&s, &[0.9, 0.5, 0.5]) - 0.2).abs() < 1e-15);
        let members = vec![([0.3, 0.3, 0.3], 0.1), ([0.7, 0.6, 0.5], 0.15), ([0.2, 0.8, 0.4], 0.05)];
        let u = Shape::union(members.clone());
        for x in [[0.0, 0.0, 0.0], [0.5, 0.5, 0.5], [0.3, 0.31, 0.3], [0.9, 0.1, 0.6]] {
            let brute = members.iter().map(|(c, r)| distance(&x, c) - r).fold(f64::INFINITY, f64::min);
            assert_eq!(signed_distance(&u, &x), brute);
        }
    }

    #[test]
    fn margin_is_enforced() {
        let g = Grid::with_zero_origin(&[64, 64], 1.0 / 64.0, Boundary::NeumannReflect).unwrap();
        let s = Shape::circle([0.5, 0.5], 0.4);
        assert!(matches!(recovery_field(&s, &g, 0.08), Err(ShapeError::Margin { .. })));
        assert!(matches!(recovery_field(&Shape::sphere([0.5; 3], 0.2), &g, 0.08), Err(ShapeError::Dimension { .. })));
        let f = recovery_field(&Shape::circle([0.5, 0.5], 0.3), &g, 0.08).unwrap();
        assert!(f.max_abs() < 1.0);
        assert!(f.sample(&[0.5, 0.5, 0.0]) > 0.0);
        assert!(f.sample(&[0.02, 0.02, 0.0]) < 0.0);
    }

    #[test]
    fn zero_amplitude_bump_is_identity() {
        let g = Grid::with_zero_origin(&[48, 16, 16], 1.0 / 16.0, Boundary::NeumannReflect).unwrap();
        let s = Shape::slab(0, 1.0);
        let f = recovery_field(&s, &g, 0.25).unwrap();
        // Clearance 0.75 - 0.25 is below 2 sqrt(eps) = 1.
        let b = BumpSpec { amplitude: 0.0, ..BumpSpec::new([1.75, 0.5, 0.5], 0.0, 1.0) };
        assert!(apply_bump(&f, &b, &s).is_err());
        let b = BumpSpec { x0: [2.3, 0.5, 0.5], ..b };
        assert_eq!(apply_bump(&f, &b, &s).unwrap(), f);
    }

    #[test]
    fn schedule_bound() {
        let spec = SphereInsertSpec { x0: [0.5; 3], r: 0.45, r_eps: RadiusSchedule::Fixed(0.05) };
        assert!(matches!(spec.check_schedule(0.04), Err(ShapeError::Schedule { .. })));
        let spec = SphereInsertSpec { r_eps: RadiusSchedule::Fixed(0.2), ..spec };
        assert!(spec.check_schedule(0.04).is_ok());
    }

    #[test]
    fn halton_points_are_admissible() {
        let g = Grid::with_zero_origin(&[32, 32, 32], 1.0 / 32.0, Boundary::NeumannReflect).unwrap();
        let s = Shape::slab(0, 0.15);
        let t = BumpSpec::new([0.0; 3], 0.0, 1.0);
        let bumps = quasi_random_bumps(5, &t, &g, 0.01, &s);
        assert_eq!(bumps.len(), 5);
        for b in &bumps {
            assert!(b.validate(&g, 0.01, &s).is_ok());
        }
    }
}
