#![allow(dead_code)]

use darkmass::model::{DensityVector, DfVector, EnergyGrid, PotentialProfile, RadialGrid};
use rand::Rng;

/// Adaptive Simpson quadrature with Richardson correction.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Piecewise-constant `f(E)`, zero outside the grid.
pub fn f_at(f: &[f64], edges: &[f64], e: f64) -> f64 {
    if e < edges[0] || e > *edges.last().unwrap() {
        return 0.0;
    }
    let j = edges.partition_point(|&x| x <= e).saturating_sub(1).min(f.len() - 1);
    f[j]
}

/// Random monotone model: radial edges on `(0, outer]`, non-increasing `ρ`,
/// energy grid inside `[-Φ(0), 0]` and positive `f`.
pub struct RandomModel {
    pub radial: RadialGrid<f64>,
    pub rho: DensityVector<f64>,
    pub profile: PotentialProfile<f64>,
    pub energy: EnergyGrid<f64>,
    pub f: DfVector<f64>,
}

pub fn random_model<R: Rng>(rng: &mut R, n_x: usize, n_e: usize) -> RandomModel {
    let mut edges = vec![0.0];
    for _ in 0..n_x {
        let last = *edges.last().unwrap();
        edges.push(last + rng.random_range(0.2..1.5));
    }
    let mut rho: Vec<f64> = (0..n_x).map(|_| rng.random_range(0.01..3.0)).collect();
    rho.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let radial = RadialGrid::new(edges).unwrap();
    let rho = DensityVector::new(rho).unwrap();
    let profile = PotentialProfile::new(&radial, &rho, 1.0).unwrap();
    let lowest = -profile.central_potential() * rng.random_range(0.6..1.0);
    let mut e: Vec<f64> = (0..n_e - 1).map(|_| rng.random_range(lowest..0.0)).collect();
    e.push(lowest);
    e.push(0.0);
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e.dedup();
    let energy = EnergyGrid::new(e).unwrap();
    let f = DfVector::new((0..energy.n_bins()).map(|_| rng.random_range(0.1..2.0)).collect()).unwrap();
    RandomModel { radial, rho, profile, energy, f }
}
