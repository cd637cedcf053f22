//! Topological energies: weighted geodesic distances on the lattice graph and
//! the double integrals `C^i` estimated by seeded Monte-Carlo sampling.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::grid::{Boundary, Field, Grid, Point};

/// Which of the two reflected functionals: `One` watches the `+1` side,
/// `Two` is `One` applied to `-u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    One,
    Two,
}

impl Phase {
    pub fn index(self) -> u8 {
        match self {
            Phase::One => 1,
            Phase::Two => 2,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(Phase::One),
            2 => Some(Phase::Two),
            _ => None,
        }
    }

    fn orient(self, u: f64) -> f64 {
        match self {
            Phase::One => u,
            Phase::Two => -u,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoConfig {
    /// Support `[phi_lo, phi_hi]` of the bump `phi1`.
    pub phi_lo: f64,
    pub phi_hi: f64,
    /// Monte-Carlo pairs per estimate.
    pub sample_count: usize,
    /// Pairs share sources: one shortest-path tree per source.
    pub sources: usize,
    pub seed: u64,
}

impl Default for TopoConfig {
    fn default() -> Self {
        Self { phi_lo: std::f64::consts::FRAC_1_SQRT_2 + 0.02, phi_hi: 0.98, sample_count: 2000, sources: 50, seed: 0 }
    }
}

impl TopoConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let lo = std::f64::consts::FRAC_1_SQRT_2;
        if !(self.phi_lo > lo && self.phi_lo < self.phi_hi && self.phi_hi < 1.0) {
            return Err(ConfigError::Topo(format!(
                "phi1 support [{}, {}] must lie strictly inside (1/sqrt(2), 1)",
                self.phi_lo, self.phi_hi
            )));
        }
        if self.sources < 2 || self.sample_count < self.sources {
            return Err(ConfigError::Topo(format!(
                "need at least 2 sources and sample_count >= sources, got {} and {}",
                self.sources, self.sample_count
            )));
        }
        Ok(())
    }

    /// `phi1(t) = (4 (t-a)(b-t) / (b-a)^2)^2` on `[a, b]`, zero elsewhere.
    pub fn phi1(&self, t: f64) -> f64 {
        let (a, b) = (self.phi_lo, self.phi_hi);
        if t <= a || t >= b {
            return 0.0;
        }
        let s = 4.0 * (t - a) * (b - t) / ((b - a) * (b - a));
        s * s
    }

    /// `F1(t) = min(dist(t, [a, b]), 1)`.
    pub fn f1(&self, t: f64) -> f64 {
        let d = if t < self.phi_lo {
            self.phi_lo - t
        } else if t > self.phi_hi {
            t - self.phi_hi
        } else {
            0.0
        };
        d.min(1.0)
    }

    pub fn phi(&self, phase: Phase, t: f64) -> f64 {
        self.phi1(phase.orient(t))
    }

    pub fn weight(&self, phase: Phase, t: f64) -> f64 {
        self.f1(phase.orient(t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicResult {
    pub source: Point,
    pub target: Point,
    pub distance: f64,
    /// Cell indices from source to target.
    pub path: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoEstimate {
    pub i: u8,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Lattice neighbour offsets (8 in 2D, 26 in 3D) with their lengths in cells.
fn offsets(ndim: usize) -> Vec<([i64; 3], f64)> {
    let zr: &[i64] = if ndim == 3 { &[-1, 0, 1] } else { &[0] };
    let mut out = Vec::new();
    for dz in zr {
        for dy in [-1i64, 0, 1] {
            for dx in [-1i64, 0, 1] {
                if (dx, dy, *dz) == (0, 0, 0) {
                    continue;
                }
                out.push(([dx, dy, *dz], ((dx * dx + dy * dy + dz * dz) as f64).sqrt()));
            }
        }
    }
    out
}

#[derive(PartialEq)]
struct Node(f64, usize);

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `source` over cell weights `w`; stops once every target is
/// settled. Returns distances and predecessors (`usize::MAX` for none).
fn dijkstra(grid: &Grid, w: &[f64], source: usize, targets: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let n = grid.len();
    let shape = grid.dims();
    let periodic = grid.bc() == Boundary::Periodic;
    let offs = offsets(grid.ndim());
    let h = grid.h();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut pending = vec![false; n];
    let mut remaining = 0usize;
    for &t in targets {
        if !pending[t] {
            pending[t] = true;
            remaining += 1;
        }
    }
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Node(0.0, source));
    while let Some(Node(d, i)) = heap.pop() {
        if done[i] {
            continue;
        }
        done[i] = true;
        if pending[i] {
            pending[i] = false;
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        let c = grid.coords(i);
        'next: for (o, len) in &offs {
            let mut nc = [0usize; 3];
            for a in 0..3 {
                let m = shape[a] as i64;
                let mut x = c[a] as i64 + o[a];
                if x < 0 || x >= m {
                    if !periodic {
                        continue 'next;
                    }
                    x = x.rem_euclid(m);
                }
                nc[a] = x as usize;
            }
            let j = grid.index(nc);
            if done[j] {
                continue;
            }
            let nd = d + 0.5 * (w[i] + w[j]) * len * h;
            if nd < dist[j] {
                dist[j] = nd;
                prev[j] = i;
                heap.push(Node(nd, j));
            }
        }
    }
    (dist, prev)
}

fn cell_weights(f: &Field, t: &TopoConfig, phase: Phase) -> Vec<f64> {
    f.values().iter().map(|&u| t.weight(phase, u)).collect()
}

/// Shortest weighted lattice path between the cells containing `x` and `y`.
pub fn geodesic_distance(f: &Field, t: &TopoConfig, phase: Phase, x: &Point, y: &Point) -> GeodesicResult {
    let grid = f.grid();
    let w = cell_weights(f, t, phase);
    let (s, e) = (grid.locate(x), grid.locate(y));
    let (dist, prev) = dijkstra(grid, &w, s, &[e]);
    let mut path = vec![e];
    let mut cur = e;
    while cur != s {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    GeodesicResult { source: *x, target: *y, distance: dist[e], path }
}

/// Monte-Carlo estimate of `eps^-2 ∫∫ phi(u(x)) phi(u(y)) d(x, y) dx dy`.
///
/// Writing `M = Σ phi h^n`, the integral is `M^2 E[d(X, Y)] / eps^2` with `X, Y`
/// drawn independently with probability proportional to `phi`. Sources are
/// drawn first and each gets `sample_count / sources` targets; the standard
/// error uses the spread of per-source means.
pub fn topo_energy(f: &Field, t: &TopoConfig, phase: Phase) -> TopoEstimate {
    let grid = f.grid();
    let eps = f.eps();
    let phi: Vec<f64> = f.values().iter().map(|&u| t.phi(phase, u)).collect();
    let active: Vec<usize> = (0..phi.len()).filter(|&i| phi[i] > 0.0).collect();
    let empty = TopoEstimate { i: phase.index(), estimate: 0.0, stderr: 0.0, samples: 0 };
    if active.is_empty() {
        return empty;
    }
    let weights: Vec<f64> = active.iter().map(|&i| phi[i]).collect();
    let mass = weights.iter().sum::<f64>() * grid.cell_volume();
    let pick = WeightedIndex::new(&weights).expect("positive weights");
    let mut rng = ChaCha8Rng::seed_from_u64(t.seed);
    let per_source = t.sample_count / t.sources;
    let draws: Vec<(usize, Vec<usize>)> = (0..t.sources)
        .map(|_| {
            let s = active[pick.sample(&mut rng)];
            let targets = (0..per_source).map(|_| active[pick.sample(&mut rng)]).collect();
            (s, targets)
        })
        .collect();
    let w = cell_weights(f, t, phase);
    let means: Vec<f64> = draws
        .par_iter()
        .map(|(s, targets)| {
            let (dist, _) = dijkstra(grid, &w, *s, targets);
            targets.iter().map(|&e| dist[e]).sum::<f64>() / targets.len() as f64
        })
        .collect();
    let m = means.len() as f64;
    let mean = means.iter().sum::<f64>() / m;
    let var = means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let scale = mass * mass / (eps * eps);
    TopoEstimate { i: phase.index(), estimate: scale * mean, stderr: scale * (var / m).sqrt(), samples: per_source * t.sources }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3(n: usize) -> Grid {
        Grid::with_zero_origin(&[n, n, n], 1.0 / n as f64, Boundary::NeumannReflect).unwrap()
    }

    #[test]
    fn bump_and_weight_contract() {
        let t = TopoConfig::default();
        assert!(t.validate().is_ok());
        let mut s = t.phi_lo;
        while s < t.phi_hi {
            assert_eq!(t.phi1(s) * t.f1(s), 0.0);
            s += 1e-3;
        }
        assert!(t.f1(1.0) > 0.0 && t.f1(-1.0) > 0.0);
        assert_eq!(t.f1(-1.0), 1.0);
        assert!((t.phi1(0.5 * (t.phi_lo + t.phi_hi)) - 1.0).abs() < 1e-15);
        assert_eq!(t.phi(Phase::Two, -0.9), t.phi1(0.9));
        let bad = TopoConfig { phi_lo: 0.7, ..t.clone() };
        assert!(bad.validate().is_err());
        assert!(TopoConfig { sources: 1, ..t }.validate().is_err());
    }

    #[test]
    fn unit_weight_distance_is_lattice_metric() {
        let g = grid3(16);
        let f = Field::constant(g, 0.25, -1.0).unwrap();
        let t = TopoConfig::default();
        let x = [0.5 / 16.0, 0.5 / 16.0, 0.5 / 16.0];
        let y = [3.5 / 16.0, 1.5 / 16.0, 0.5 / 16.0];
        let r = geodesic_distance(&f, &t, Phase::One, &x, &y);
        // One diagonal step and two axis steps.
        let expect = (2f64.sqrt() + 2.0) / 16.0;
        assert!((r.distance - expect).abs() < 1e-14);
        assert_eq!(r.path.len(), 4);
        assert_eq!(r.path[0], f.grid().locate(&x));
    }

    #[test]
    fn empty_support_gives_zero() {
        let f = Field::constant(grid3(16), 0.25, -1.0).unwrap();
        let e = topo_energy(&f, &TopoConfig::default(), Phase::One);
        assert_eq!((e.estimate, e.stderr, e.samples), (0.0, 0.0, 0));
    }

    #[test]
    fn reflection_identity() {
        let g = grid3(16);
        let f = Field::from_fn(g, 0.25, |p| (6.0 * p[0]).sin() * (4.0 * p[1]).cos()).unwrap();
        let neg = f.with_values(f.values().iter().map(|u| -u).collect()).unwrap();
        let t = TopoConfig { sample_count: 40, sources: 4, ..TopoConfig::default() };
        assert_eq!(topo_energy(&f, &t, Phase::Two), TopoEstimate { i: 2, ..topo_energy(&neg, &t, Phase::One) });
    }
}
