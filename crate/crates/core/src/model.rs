//! Spherical forward model: radial and energy grids, the piecewise-constant
//! mass density, its enclosed mass and gravitational potential, and the
//! piecewise-constant isotropic phase-space pdf.
//!
//! The potential follows `∇²Φ = −4πGρ`, so `Φ ≥ 0` decreases outward and a
//! particle is bound when `E = ½|v|² − Φ(|x|) ≤ 0`.
//!
//! Inside radial bin `i` the potential has the closed form
//!
//! ```text
//! Φ(r) = a_i / r + b_i r² + c_i
//! a_i = G (M(r_{i-1}) − 4π/3 ρ_i r_{i-1}³)
//! b_i = −2π/3 G ρ_i
//! c_i = 2πG ρ_i r_i² + 2πG Σ_{j>i} ρ_j (r_j² − r_{j-1}²)
//! ```
//!
//! and outside the last edge it is Keplerian, `G M_tot / r`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Gravitational constant in kpc (km/s)² / M_sun.
pub const G_KPC_KMS_MSUN: f64 = 4.300917270e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    /// kpc, km/s, M_sun.
    #[default]
    Physical,
    /// G = 1.
    Code,
}

impl UnitSystem {
    pub fn gravitational_constant<T: Real>(self) -> T {
        match self {
            UnitSystem::Physical => T::lit(G_KPC_KMS_MSUN),
            UnitSystem::Code => T::one(),
        }
    }

    pub fn mass_unit(self) -> &'static str {
        match self {
            UnitSystem::Physical => "M_sun",
            UnitSystem::Code => "code mass",
        }
    }
}

fn check_increasing<T: Real>(edges: &[T], what: &str) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::InvalidGrid(format!("{what} needs at least two edges")));
    }
    if edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidGrid(format!("{what} has non-finite edges")));
    }
    if edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!("{what} edges must be strictly increasing")));
    }
    Ok(())
}

/// Radial bin edges `0 = r_0 < r_1 < … < r_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>")]
#[serde(bound = "T: Real + Serialize + for<'a> Deserialize<'a>")]
pub struct RadialGrid<T> {
    edges: Vec<T>,
}

impl<T: Real> RadialGrid<T> {
    pub fn new(edges: Vec<T>) -> Result<Self> {
        check_increasing(&edges, "radial grid")?;
        if edges[0] != T::zero() {
            return Err(Error::InvalidGrid("radial grid must start at r = 0".into()));
        }
        Ok(Self { edges })
    }

    /// `n` equal-width bins on `[0, outer]`.
    pub fn uniform(outer: T, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("radial grid needs at least one bin".into()));
        }
        let nf = T::from_usize_lossy(n);
        let edges = (0..=n)
            .map(|i| outer * T::from_usize_lossy(i) / nf)
            .collect();
        Self::new(edges)
    }

    pub fn edges(&self) -> &[T] {
        &self.edges
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn outer(&self) -> T {
        self.edges[self.edges.len() - 1]
    }

    /// Returns a copy with the outermost edge moved to `outer`.
    pub fn with_outer_edge(&self, outer: T) -> Result<Self> {
        let mut edges = self.edges.clone();
        let last = edges.len() - 1;
        edges[last] = outer;
        Self::new(edges)
    }

    /// Index of the bin `[r_{i-1}, r_i]` holding `r`, clamped to the last bin.
    pub fn bin_of(&self, r: T) -> usize {
        let k = self.edges.partition_point(|&e| e < r);
        k.saturating_sub(1).min(self.n_bins() - 1)
    }
}

impl<T: Real> TryFrom<Vec<T>> for RadialGrid<T> {
    type Error = Error;

    fn try_from(edges: Vec<T>) -> Result<Self> {
        Self::new(edges)
    }
}

impl<T> From<RadialGrid<T>> for Vec<T> {
    fn from(grid: RadialGrid<T>) -> Self {
        grid.edges
    }
}

/// Energy bin edges `E_0 < … < E_N ≤ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>")]
#[serde(bound = "T: Real + Serialize + for<'a> Deserialize<'a>")]
pub struct EnergyGrid<T> {
    edges: Vec<T>,
}

impl<T: Real> EnergyGrid<T> {
    pub fn new(edges: Vec<T>) -> Result<Self> {
        check_increasing(&edges, "energy grid")?;
        if edges[edges.len() - 1] > T::zero() {
            return Err(Error::InvalidGrid(
                "energy grid must end at or below zero (bound states only)".into(),
            ));
        }
        Ok(Self { edges })
    }

    /// `n` equal-width bins on `[lowest, 0]`.
    pub fn uniform(lowest: T, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("energy grid needs at least one bin".into()));
        }
        let nf = T::from_usize_lossy(n);
        let mut edges: Vec<T> = (0..=n)
            .map(|i| lowest + (-lowest) * T::from_usize_lossy(i) / nf)
            .collect();
        edges[n] = T::zero();
        Self::new(edges)
    }

    pub fn edges(&self) -> &[T] {
        &self.edges
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn lowest(&self) -> T {
        self.edges[0]
    }

    pub fn highest(&self) -> T {
        self.edges[self.edges.len() - 1]
    }

    pub fn widths(&self) -> Vec<T> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn midpoints(&self) -> Vec<T> {
        self.edges
            .windows(2)
            .map(|w| (w[0] + w[1]) * T::lit(0.5))
            .collect()
    }
}

impl<T: Real> TryFrom<Vec<T>> for EnergyGrid<T> {
    type Error = Error;

    fn try_from(edges: Vec<T>) -> Result<Self> {
        Self::new(edges)
    }
}

impl<T> From<EnergyGrid<T>> for Vec<T> {
    fn from(grid: EnergyGrid<T>) -> Self {
        grid.edges
    }
}

/// Mass density per radial bin, `(ρ_1, …, ρ_N)`.
///
/// Construction only requires finite values; [`DensityVector::is_admissible`]
/// checks the physical constraints `ρ_i ≥ ρ_{i+1} ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityVector<T>(Vec<T>);

impl<T: Real> DensityVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("density vector is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("density vector has non-finite entries".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_non_negative(&self) -> bool {
        self.0.iter().all(|&v| v >= T::zero())
    }

    pub fn is_non_increasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn is_admissible(&self) -> bool {
        self.is_non_negative() && self.is_non_increasing()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

/// Phase-space pdf per energy bin, `(f_1, …, f_N)`; zero outside the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DfVector<T>(Vec<T>);

impl<T: Real> DfVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("df vector is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("df vector has non-finite entries".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_admissible(&self) -> bool {
        self.0.iter().all(|&v| v >= T::zero())
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

/// A point in six-dimensional phase space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint<T> {
    pub x: [T; 3],
    pub v: [T; 3],
}

impl<T: Real> PhasePoint<T> {
    pub fn new(x: [T; 3], v: [T; 3]) -> Self {
        Self { x, v }
    }

    pub fn radius(&self) -> T {
        norm3(&self.x)
    }

    pub fn speed_squared(&self) -> T {
        self.v.iter().fold(T::zero(), |acc, &c| acc + c * c)
    }
}

fn norm3<T: Real>(a: &[T; 3]) -> T {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Enclosed mass of the piecewise-constant density,
/// `M(r) = 4π Σ_i ρ_i (min(r, r_i)³ − min(r, r_{i-1})³) / 3`.
pub fn enclosed_mass<T: Real>(rho: &DensityVector<T>, grid: &RadialGrid<T>, r: T) -> Result<T> {
    if rho.len() != grid.n_bins() {
        return Err(Error::LengthMismatch { expected: grid.n_bins(), actual: rho.len() });
    }
    if !(r >= T::zero()) {
        return Err(Error::Domain(format!("enclosed mass needs r >= 0, got {r}")));
    }
    Ok(shell_sum(rho.values(), grid.edges(), r))
}

fn shell_sum<T: Real>(rho: &[T], edges: &[T], r: T) -> T {
    let mut s = T::zero();
    for (i, &density) in rho.iter().enumerate() {
        let lo = edges[i].min(r);
        let hi = edges[i + 1].min(r);
        if hi <= lo {
            break;
        }
        s = s + density * (hi * hi * hi - lo * lo * lo);
    }
    T::lit(4.0) * T::PI() * s / T::lit(3.0)
}

/// Precomputed potential and mass coefficients for one density vector.
#[derive(Clone, Debug)]
pub struct PotentialProfile<T> {
    edges: Vec<T>,
    rho: Vec<T>,
    /// `M(r_i)` for `i = 0..=N`.
    cum_mass: Vec<T>,
    a: Vec<T>,
    b: Vec<T>,
    c: Vec<T>,
    /// `Φ(r_i)` for `i = 0..=N`.
    edge_phi: Vec<T>,
    g: T,
}

impl<T: Real> PotentialProfile<T> {
    pub fn new(grid: &RadialGrid<T>, rho: &DensityVector<T>, g: T) -> Result<Self> {
        let n = grid.n_bins();
        if rho.len() != n {
            return Err(Error::LengthMismatch { expected: n, actual: rho.len() });
        }
        if !(g > T::zero()) {
            return Err(Error::Domain("gravitational constant must be positive".into()));
        }
        let edges = grid.edges().to_vec();
        let dens = rho.values().to_vec();
        let cum_mass: Vec<T> = edges.iter().map(|&r| shell_sum(&dens, &edges, r)).collect();

        let two_pi_g = T::lit(2.0) * T::PI() * g;
        let four_thirds_pi = T::lit(4.0) * T::PI() / T::lit(3.0);
        let mut outer = vec![T::zero(); n];
        let mut acc = T::zero();
        for i in (0..n).rev() {
            outer[i] = acc;
            let (lo, hi) = (edges[i], edges[i + 1]);
            acc = acc + two_pi_g * dens[i] * (hi * hi - lo * lo);
        }
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        for i in 0..n {
            let lo = edges[i];
            let hi = edges[i + 1];
            a.push(if i == 0 {
                T::zero()
            } else {
                g * (cum_mass[i] - four_thirds_pi * dens[i] * lo * lo * lo)
            });
            b.push(-two_pi_g * dens[i] / T::lit(3.0));
            c.push(two_pi_g * dens[i] * hi * hi + outer[i]);
        }
        let mut profile = Self { edges, rho: dens, cum_mass, a, b, c, edge_phi: Vec::new(), g };
        profile.edge_phi = (0..=n)
            .map(|i| {
                if i == 0 {
                    profile.c[0]
                } else {
                    profile.phi_in_bin(i - 1, profile.edges[i])
                }
            })
            .collect();
        Ok(profile)
    }

    pub fn n_bins(&self) -> usize {
        self.rho.len()
    }

    pub fn edges(&self) -> &[T] {
        &self.edges
    }

    pub fn density(&self) -> &[T] {
        &self.rho
    }

    pub fn outer_radius(&self) -> T {
        self.edges[self.edges.len() - 1]
    }

    pub fn total_mass(&self) -> T {
        self.cum_mass[self.cum_mass.len() - 1]
    }

    pub fn gravitational_constant(&self) -> T {
        self.g
    }

    /// `Φ(0)`.
    pub fn central_potential(&self) -> T {
        self.edge_phi[0]
    }

    /// `Φ(r_N)`.
    pub fn outer_potential(&self) -> T {
        self.edge_phi[self.edge_phi.len() - 1]
    }

    /// `Φ` at every bin edge.
    pub fn edge_potentials(&self) -> &[T] {
        &self.edge_phi
    }

    /// `(a_i, b_i, c_i)` of bin `i`.
    pub fn coefficients(&self, bin: usize) -> (T, T, T) {
        (self.a[bin], self.b[bin], self.c[bin])
    }

    /// Bin `[r_{i-1}, r_i]` containing `r ≤ r_N`.
    #[inline]
    pub fn bin_of(&self, r: T) -> usize {
        let k = self.edges.partition_point(|&e| e < r);
        k.saturating_sub(1).min(self.rho.len() - 1)
    }

    #[inline]
    pub fn phi_in_bin(&self, bin: usize, r: T) -> T {
        let a = self.a[bin];
        let inv = if a == T::zero() { T::zero() } else { a / r };
        inv + self.b[bin] * r * r + self.c[bin]
    }

    pub fn enclosed_mass(&self, r: T) -> T {
        if r >= self.outer_radius() {
            return self.total_mass();
        }
        shell_sum(&self.rho, &self.edges, r)
    }

    /// Unchecked `Φ(r)` for `r ≥ 0`.
    #[inline]
    pub fn phi(&self, r: T) -> T {
        if r > self.outer_radius() {
            return self.g * self.total_mass() / r;
        }
        self.phi_in_bin(self.bin_of(r), r)
    }

    /// `Φ(r)`; negative `r` is a domain error.
    pub fn potential(&self, r: T) -> Result<T> {
        if !(r >= T::zero()) {
            return Err(Error::Domain(format!("potential needs r >= 0, got {r}")));
        }
        Ok(self.phi(r))
    }

    /// Smallest `r ∈ [0, r_N]` with `Φ(r) = target`, to `1e-10 Φ(0)` in `Φ`.
    ///
    /// The bracketing bin comes from the edge potentials; inside it a
    /// bisection is accelerated by Newton steps on the closed form.
    pub fn radius_of_potential(&self, target: T) -> Result<T> {
        let phi0 = self.central_potential();
        let phi_out = self.outer_potential();
        let tol = T::lit(1e-10) * phi0;
        if !(target <= phi0 + tol && target >= phi_out - tol) {
            return Err(Error::Range {
                target: target.as_f64(),
                min: phi_out.as_f64(),
                max: phi0.as_f64(),
            });
        }
        if target >= phi0 - tol {
            return Ok(T::zero());
        }
        if target < phi_out {
            return Ok(self.outer_radius());
        }
        // First edge with Φ(r_k) ≤ target; the crossing is in bin k-1.
        let k = self.edge_phi.partition_point(|&p| p > target).clamp(1, self.edges.len() - 1);
        Ok(self.solve_in_bin(k - 1, target, tol))
    }

    fn solve_in_bin(&self, bin: usize, target: T, tol: T) -> T {
        let mut lo = self.edges[bin];
        let mut hi = self.edges[bin + 1];
        let (a, b, _) = self.coefficients(bin);
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        let mut r = (lo + hi) * half;
        let width_floor = T::epsilon() * T::lit(4.0) * self.outer_radius();
        for _ in 0..200 {
            let f = self.phi_in_bin(bin, r) - target;
            if f > T::zero() {
                lo = r;
            } else {
                hi = r;
            }
            if f.abs() <= tol * T::lit(1e-2) || hi - lo <= width_floor {
                break;
            }
            let inv = if a == T::zero() { T::zero() } else { a / (r * r) };
            let slope = -inv + two * b * r;
            let mut next = if slope < T::zero() { r - f / slope } else { (lo + hi) * half };
            if !(next > lo && next < hi) {
                next = (lo + hi) * half;
            }
            r = next;
        }
        // Prefer the inner end of a flat stretch.
        if (self.phi_in_bin(bin, lo) - target).abs() <= tol {
            lo
        } else {
            r
        }
    }

    /// `∫ Φ(√(rp² + x²)) dx` over `[xa, xb]`, all of which lies in radial
    /// bin `bin`.
    pub fn line_of_sight_integral(&self, bin: usize, rp: T, xa: T, xb: T) -> T {
        let (a, b, c) = self.coefficients(bin);
        let dx = xb - xa;
        let mut acc = c * dx + b * (rp * rp * dx + (xb * xb * xb - xa * xa * xa) / T::lit(3.0));
        if a != T::zero() {
            let sa = xa + (rp * rp + xa * xa).sqrt();
            let sb = xb + (rp * rp + xb * xb).sqrt();
            acc = acc + a * ((sb - sa) / sa).ln_1p();
        }
        acc
    }

    /// `Φ` outside the last edge; exposes the exterior for callers that need
    /// the Keplerian tail.
    pub fn exterior_potential(&self, r: T) -> T {
        self.g * self.total_mass() / r
    }
}

/// `Φ(r)` of a profile.
pub fn potential<T: Real>(profile: &PotentialProfile<T>, r: T) -> Result<T> {
    profile.potential(r)
}

pub fn radius_of_potential<T: Real>(profile: &PotentialProfile<T>, phi_target: T) -> Result<T> {
    profile.radius_of_potential(phi_target)
}

/// `E = ½|v|² − Φ(|x|)`.
pub fn energy<T: Real>(profile: &PotentialProfile<T>, p: &PhasePoint<T>) -> T {
    T::lit(0.5) * p.speed_squared() - profile.phi(p.radius())
}

/// `∫_{max(e_low, E_0)}^{min(0, E_N)} f(E) dE` for the piecewise-constant `f`.
pub fn df_integral<T: Real>(f: &DfVector<T>, egrid: &EnergyGrid<T>, e_low: T) -> T {
    df_integral_slice(f.values(), egrid.edges(), e_low)
}

#[inline]
pub(crate) fn df_integral_slice<T: Real>(f: &[T], edges: &[T], e_low: T) -> T {
    let mut s = T::zero();
    for (j, &fj) in f.iter().enumerate() {
        let lo = edges[j].max(e_low);
        let hi = edges[j + 1].min(T::zero());
        if hi > lo {
            s = s + fj * (hi - lo);
        }
    }
    s
}
