//! Data-driven choice of the radial and energy grids.
//!
//! Both grids are equal-width and use the largest bin count for which no bin
//! is empty. Radial bins are `(low, high]`; energy bins are `[low, high)` with
//! the last one closed at `E = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DensityVector, EnergyGrid, PotentialProfile, RadialGrid};
use crate::num::Real;
use crate::projection::ObservationSet;

/// Safety factor applied to the smallest histogram scale that binds every datum.
pub const SCALE_SAFETY: f64 = 1.1;

/// Radial bin of `r` under the `(low, high]` rule.
pub fn radial_bin_index<T: Real>(edges: &[T], r: T) -> usize {
    let k = edges.partition_point(|&e| e < r);
    k.saturating_sub(1).min(edges.len() - 2)
}

/// Energy bin of `e` under the `[low, high)` rule, last bin closed.
pub fn energy_bin_index<T: Real>(edges: &[T], e: T) -> usize {
    let k = edges.partition_point(|&x| x <= e);
    k.saturating_sub(1).min(edges.len() - 2)
}

fn counts<T: Real>(values: &[T], edges: &[T], index: fn(&[T], T) -> usize) -> Vec<usize> {
    let mut c = vec![0; edges.len() - 1];
    for &v in values {
        c[index(edges, v)] += 1;
    }
    c
}

/// Per-bin datum counts on a radial grid.
pub fn radial_counts<T: Real>(rp: &[T], grid: &RadialGrid<T>) -> Vec<usize> {
    counts(rp, grid.edges(), radial_bin_index)
}

/// Per-bin datum counts on an energy grid.
pub fn energy_counts<T: Real>(energies: &[T], grid: &EnergyGrid<T>) -> Vec<usize> {
    counts(energies, grid.edges(), energy_bin_index)
}

/// Largest `N_X ≤ N_data` such that equal-width bins on `(0, max rp]` are all
/// occupied.
pub fn choose_rp_bins<T: Real>(data: &ObservationSet<T>) -> Result<RadialGrid<T>> {
    let rp = data.projected_radii();
    choose_radial_bins(&rp)
}

pub fn choose_radial_bins<T: Real>(rp: &[T]) -> Result<RadialGrid<T>> {
    if rp.is_empty() {
        return Err(Error::Usage("binning needs at least one datum".into()));
    }
    let max = rp.iter().copied().fold(T::zero(), T::max);
    if !(max > T::zero()) {
        return Err(Error::Usage("all projected radii are zero".into()));
    }
    for n in (1..=rp.len()).rev() {
        let grid = RadialGrid::uniform(max, n)?;
        if radial_counts(rp, &grid).iter().all(|&c| c > 0) {
            return Ok(grid);
        }
    }
    unreachable!("a single bin always holds every datum")
}

/// Largest `N_E` such that equal-width bins on `[min E, 0]` are all occupied.
pub fn choose_energy_bins<T: Real>(energies: &[T]) -> Result<EnergyGrid<T>> {
    if energies.is_empty() {
        return Err(Error::Usage("binning needs at least one energy".into()));
    }
    if energies.iter().any(|&e| !(e <= T::zero())) {
        return Err(Error::Domain("empirical energies must be <= 0".into()));
    }
    let lowest = energies.iter().copied().fold(T::zero(), T::min);
    if !(lowest < T::zero()) {
        return Err(Error::Domain("empirical energies span an empty range".into()));
    }
    for n in (1..=energies.len()).rev() {
        let grid = EnergyGrid::uniform(lowest, n)?;
        if energy_counts(energies, &grid).iter().all(|&c| c > 0) {
            return Ok(grid);
        }
    }
    unreachable!("a single bin always holds every energy")
}

/// Scaled R_p histogram standing in for the density, and its potential.
#[derive(Clone, Debug)]
pub struct EmpiricalPotential<T> {
    pub density: DensityVector<T>,
    pub profile: PotentialProfile<T>,
    /// Histogram scale `c`.
    pub scale: T,
}

impl<T: Real> EmpiricalPotential<T> {
    pub fn phi(&self, r: T) -> T {
        self.profile.phi(r)
    }
}

/// Builds `ρ_emp,i = c · count_i / V_i` (or `c · count_i` with `raw_counts`),
/// monotonised by a running minimum outward, with `c` the smallest scale that
/// binds every datum times [`SCALE_SAFETY`] (1 when every `v3 = 0`).
pub fn empirical_potential<T: Real>(
    data: &ObservationSet<T>,
    grid: &RadialGrid<T>,
    g: T,
    raw_counts: bool,
) -> Result<EmpiricalPotential<T>> {
    let rp = data.projected_radii();
    let counts = radial_counts(&rp, grid);
    let four_thirds_pi = T::lit(4.0) * T::PI() / T::lit(3.0);
    let mut unit: Vec<T> = counts
        .iter()
        .zip(grid.edges().windows(2))
        .map(|(&c, w)| {
            let c = T::from_usize_lossy(c);
            if raw_counts {
                c
            } else {
                c / (four_thirds_pi * (w[1] * w[1] * w[1] - w[0] * w[0] * w[0]))
            }
        })
        .collect();
    for i in 1..unit.len() {
        unit[i] = unit[i].min(unit[i - 1]);
    }
    let unit_profile = PotentialProfile::new(grid, &DensityVector::new(unit.clone())?, g)?;
    let half = T::lit(0.5);
    let mut c_min = T::zero();
    for (o, &r) in data.iter().zip(&rp) {
        let kin = half * o.v3 * o.v3;
        if kin > T::zero() {
            let phi = unit_profile.phi(r);
            if !(phi > T::zero()) {
                return Err(Error::Domain("empirical potential vanishes at a datum".into()));
            }
            c_min = c_min.max(kin / phi);
        }
    }
    let scale = if c_min > T::zero() { c_min * T::lit(SCALE_SAFETY) } else { T::one() };
    let density = DensityVector::new(unit.iter().map(|&u| u * scale).collect())?;
    let profile = PotentialProfile::new(grid, &density, g)?;
    Ok(EmpiricalPotential { density, profile, scale })
}

/// `E_k = ½ v3_k² − Φ_emp(rp_k)`.
pub fn empirical_energies<T: Real>(data: &ObservationSet<T>, table: &EmpiricalPotential<T>) -> Vec<T> {
    data.iter()
        .map(|o| T::lit(0.5) * o.v3 * o.v3 - table.phi(o.rp()))
        .collect()
}

/// Everything the binning stage produces.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + for<'a> Deserialize<'a>")]
pub struct BinningResult<T> {
    pub radial: RadialGrid<T>,
    pub energy: EnergyGrid<T>,
    pub energies: Vec<T>,
    pub empirical_density: Vec<T>,
    pub scale: T,
}

/// Runs the full binning stage on a catalog.
pub fn bin_catalog<T: Real>(
    data: &ObservationSet<T>,
    g: T,
    raw_counts: bool,
) -> Result<BinningResult<T>> {
    let radial = choose_rp_bins(data)?;
    let table = empirical_potential(data, &radial, g, raw_counts)?;
    let energies = empirical_energies(data, &table);
    let energy = choose_energy_bins(&energies)?;
    Ok(BinningResult {
        radial,
        energy,
        energies,
        empirical_density: table.density.into_inner(),
        scale: table.scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::Observation;

    fn catalog(rows: &[(f64, f64, f64)]) -> ObservationSet<f64> {
        ObservationSet::new(rows.iter().map(|&(x1, x2, v3)| Observation::new(x1, x2, v3)).collect())
            .unwrap()
    }

    #[test]
    fn radial_descent_example() {
        let grid = choose_radial_bins(&[0.5, 1.1, 1.2, 3.0]).unwrap();
        assert_eq!(grid.edges(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(choose_radial_bins(&[2.0]).unwrap().n_bins(), 1);
        assert_eq!(choose_radial_bins(&[2.0, 2.0, 2.0]).unwrap().n_bins(), 1);
        assert!(choose_radial_bins::<f64>(&[]).is_err());
    }

    #[test]
    fn energy_descent_example() {
        let grid = choose_energy_bins(&[-4.0, -2.5, -2.4, -0.5]).unwrap();
        assert_eq!(grid.n_bins(), 3);
        assert_eq!(grid.highest(), 0.0);
        assert_eq!(grid.lowest(), -4.0);
        assert_eq!(choose_energy_bins(&[-1.0]).unwrap().n_bins(), 1);
        assert!(choose_energy_bins(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn edge_values_go_to_lower_radial_bin() {
        let edges = [0.0, 1.0, 2.0];
        assert_eq!(radial_bin_index(&edges, 1.0), 0);
        assert_eq!(radial_bin_index(&edges, 0.0), 0);
        assert_eq!(radial_bin_index(&edges, 2.0), 1);
        let e = [-2.0, -1.0, 0.0];
        assert_eq!(energy_bin_index(&e, -1.0), 1);
        assert_eq!(energy_bin_index(&e, 0.0), 1);
        assert_eq!(energy_bin_index(&e, -2.0), 0);
    }

    #[test]
    fn zero_velocities_use_unit_scale() {
        let data = catalog(&[(0.5, 0.0, 0.0), (1.0, 1.0, 0.0), (0.0, 2.0, 0.0)]);
        let grid = choose_rp_bins(&data).unwrap();
        let t = empirical_potential(&data, &grid, 1.0, false).unwrap();
        assert_eq!(t.scale, 1.0);
    }

    #[test]
    fn potential_is_linear_in_scale() {
        let data = catalog(&[(0.5, 0.0, 1.0), (1.0, 1.0, -2.0), (0.0, 2.0, 0.5)]);
        let grid = choose_rp_bins(&data).unwrap();
        let t = empirical_potential(&data, &grid, 1.0, false).unwrap();
        let doubled = DensityVector::new(t.density.values().iter().map(|v| 2.0 * v).collect())
            .unwrap();
        let p2 = PotentialProfile::new(&grid, &doubled, 1.0).unwrap();
        for r in [0.0, 0.3, 1.0, 1.9, 3.0] {
            assert!((p2.phi(r) - 2.0 * t.phi(r)).abs() <= 1e-12 * t.phi(r));
        }
        let e = empirical_energies(&data, &t);
        assert!(e.iter().all(|&x| x <= 0.0));
    }

    #[test]
    fn innermost_resting_datum_is_most_bound() {
        let data = catalog(&[(0.1, 0.0, 0.0), (1.0, 0.0, 0.3), (2.0, 0.0, 0.1), (3.0, 0.0, 0.0)]);
        let b = bin_catalog(&data, 1.0, false).unwrap();
        let min = b.energies.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(min, b.energies[0]);
        assert!(energy_counts(&b.energies, &b.energy).iter().all(|&c| c > 0));
    }

    #[test]
    fn raw_counts_toggle_skips_volume_normalisation() {
        let data = catalog(&[(0.5, 0.0, 1.0), (1.5, 0.0, 1.0)]);
        let grid = choose_rp_bins(&data).unwrap();
        let raw = empirical_potential(&data, &grid, 1.0, true).unwrap();
        let d = raw.density.values();
        assert_eq!(d[0] / raw.scale, 1.0);
        assert_eq!(d[1] / raw.scale, 1.0);
    }
}
