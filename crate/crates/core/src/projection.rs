//! Projected phase-space pdf `ν(x1, x2, v3; ρ, f)`.
//!
//! With `f = f(E)` isotropic, the two unobserved velocity components
//! collapse exactly: `∫∫ f(½(v1² + v2² + v3²) − Φ) dv1 dv2 = 2π ∫_{e}^{0} f(E) dE`
//! with `e = ½v3² − Φ(r)`. What remains is a line-of-sight integral over
//! `x3 ∈ [−L, L]`, `L = √(r_N² − rp²)`, and a normalisation by the phase-space
//! mass `N(ρ, f) = Σ_j f_j w_j` of the truncated sphere.
//!
//! Two routes evaluate the line-of-sight integral. [`Projector::project_pdf_unnorm`]
//! uses fixed-order Gauss–Legendre on sub-intervals split at every kink of the
//! integrand. [`Projector::design_row`] uses the closed-form line-of-sight
//! integral of the piecewise potential and returns the coefficients of the
//! (linear) dependence on `f`, which is what the sampler evaluates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{df_integral_slice, DfVector, EnergyGrid, PotentialProfile};
use crate::num::Real;
use crate::quadrature::{GaussHermite, GaussLegendre};

/// One tracer: sky position, line-of-sight velocity and optional velocity error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation<T> {
    pub x1: T,
    pub x2: T,
    pub v3: T,
    pub sigma_v3: Option<T>,
}

impl<T: Real> Observation<T> {
    pub fn new(x1: T, x2: T, v3: T) -> Self {
        Self { x1, x2, v3, sigma_v3: None }
    }

    pub fn with_error(mut self, sigma_v3: T) -> Self {
        self.sigma_v3 = Some(sigma_v3);
        self
    }

    /// Projected radius `√(x1² + x2²)`.
    pub fn rp(&self) -> T {
        self.x1.hypot(self.x2)
    }

    fn validate(&self) -> Result<()> {
        if !(self.x1.is_finite() && self.x2.is_finite() && self.v3.is_finite()) {
            return Err(Error::Domain("observation has non-finite coordinates".into()));
        }
        if let Some(s) = self.sigma_v3 {
            if !(s.is_finite() && s >= T::zero()) {
                return Err(Error::Domain(format!("sigma_v3 must be finite and >= 0, got {s}")));
            }
        }
        Ok(())
    }
}

/// A catalog of tracers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet<T> {
    observations: Vec<Observation<T>>,
}

impl<T: Real> ObservationSet<T> {
    pub fn new(observations: Vec<Observation<T>>) -> Result<Self> {
        for o in &observations {
            o.validate()?;
        }
        Ok(Self { observations })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Observation<T>> {
        self.observations.iter()
    }

    pub fn as_slice(&self) -> &[Observation<T>] {
        &self.observations
    }

    pub fn projected_radii(&self) -> Vec<T> {
        self.observations.iter().map(Observation::rp).collect()
    }

    pub fn has_errors(&self) -> bool {
        self.observations.iter().any(|o| o.sigma_v3.is_some())
    }
}

impl<'a, T> IntoIterator for &'a ObservationSet<T> {
    type Item = &'a Observation<T>;
    type IntoIter = std::slice::Iter<'a, Observation<T>>;

    fn into_iter(self) -> Self::IntoIter {
        self.observations.iter()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionConfig {
    /// Gauss–Legendre points per kink-free sub-interval.
    pub gl_order: usize,
    /// Gauss–Hermite nodes for the velocity-error convolution.
    pub gh_nodes: usize,
    pub convolve_errors: bool,
    /// Evaluate per-datum terms on the rayon pool.
    pub parallel: bool,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self { gl_order: 16, gh_nodes: 11, convolve_errors: false, parallel: false }
    }
}

impl ProjectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gl_order < 2 {
            return Err(Error::Config(format!("gl_order must be >= 2, got {}", self.gl_order)));
        }
        if self.gh_nodes < 2 {
            return Err(Error::Config(format!("gh_nodes must be >= 2, got {}", self.gh_nodes)));
        }
        Ok(())
    }
}

/// `2π ∫_{½v3² − Φ(r)}^0 f(E) dE` when `½v3² < Φ(r)`, else zero.
pub fn inner_velocity_integral<T: Real>(
    profile: &PotentialProfile<T>,
    f: &DfVector<T>,
    egrid: &EnergyGrid<T>,
    r: T,
    v3: T,
) -> T {
    inner_velocity_slice(profile, f.values(), egrid.edges(), r, v3)
}

#[inline]
fn inner_velocity_slice<T: Real>(
    profile: &PotentialProfile<T>,
    f: &[T],
    edges: &[T],
    r: T,
    v3: T,
) -> T {
    let kin = T::lit(0.5) * v3 * v3;
    let phi = profile.phi(r);
    if kin >= phi {
        return T::zero();
    }
    T::lit(2.0) * T::PI() * df_integral_slice(f, edges, kin - phi)
}

/// Quadrature rules and options for evaluating `ν`.
#[derive(Clone, Debug)]
pub struct Projector<T> {
    cfg: ProjectionConfig,
    gl: GaussLegendre<T>,
    gh: GaussHermite,
}

impl<T: Real> Projector<T> {
    pub fn new(cfg: ProjectionConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { gl: GaussLegendre::new(cfg.gl_order), gh: GaussHermite::new(cfg.gh_nodes), cfg })
    }

    pub fn config(&self) -> &ProjectionConfig {
        &self.cfg
    }

    /// Sorted kinks of the line-of-sight integrand on `[0, L]`: crossings of
    /// radial edges and of energy edges by `½v3² − Φ(√(rp² + x²))`.
    pub fn line_of_sight_breakpoints(
        &self,
        profile: &PotentialProfile<T>,
        egrid: &EnergyGrid<T>,
        rp: T,
        v3: T,
    ) -> Vec<T> {
        let outer = profile.outer_radius();
        let mut pts = Vec::with_capacity(profile.n_bins() + egrid.n_bins() + 3);
        if rp >= outer {
            return pts;
        }
        let rp2 = rp * rp;
        let length = (outer * outer - rp2).sqrt();
        pts.push(T::zero());
        for &edge in &profile.edges()[1..profile.edges().len() - 1] {
            if edge > rp {
                pts.push((edge * edge - rp2).sqrt());
            }
        }
        let kin = T::lit(0.5) * v3 * v3;
        let phi_rp = profile.phi(rp);
        let phi_out = profile.outer_potential();
        for &e in egrid.edges().iter().chain(std::iter::once(&T::zero())) {
            let target = kin - e;
            if target < phi_rp && target > phi_out {
                if let Ok(r) = profile.radius_of_potential(target) {
                    if r > rp {
                        pts.push((r * r - rp2).sqrt().min(length));
                    }
                }
            }
        }
        pts.push(length);
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        pts.dedup();
        pts
    }

    /// `2 ∫_0^L inner_velocity_integral(√(rp² + x²), v3) dx`, by Gauss–Legendre
    /// on kink-free sub-intervals.
    pub fn project_pdf_unnorm(
        &self,
        profile: &PotentialProfile<T>,
        f: &DfVector<T>,
        egrid: &EnergyGrid<T>,
        rp: T,
        v3: T,
    ) -> T {
        if rp >= profile.outer_radius() || T::lit(0.5) * v3 * v3 >= profile.phi(rp) {
            return T::zero();
        }
        let pts = self.line_of_sight_breakpoints(profile, egrid, rp, v3);
        let rp2 = rp * rp;
        let mut acc = T::zero();
        for w in pts.windows(2) {
            if w[1] > w[0] {
                acc = acc
                    + self.gl.integrate(w[0], w[1], |x| {
                        inner_velocity_slice(profile, f.values(), egrid.edges(), (rp2 + x * x).sqrt(), v3)
                    });
            }
        }
        T::lit(2.0) * acc
    }

    /// Density-of-states weights `w_j = 16π² ∫_{bin j} ∫_0^{r_N} r² √(2(E + Φ(r)))₊ dr dE`.
    ///
    /// The energy integral is taken in closed form, `∫ √(2u) du = (2√2/3) u^{3/2}`;
    /// the radial one by Gauss–Legendre split at radial edges and at the radii
    /// where `Φ(r) = −E_j`.
    pub fn dos_weights(&self, profile: &PotentialProfile<T>, egrid: &EnergyGrid<T>) -> Vec<T> {
        let edges_e = egrid.edges();
        let n_e = egrid.n_bins();
        let mut w = vec![T::zero(); n_e];
        if !(profile.central_potential() > T::zero()) {
            return w;
        }
        let outer = profile.outer_radius();
        let mut pts: Vec<T> = profile.edges().to_vec();
        let phi0 = profile.central_potential();
        let phi_out = profile.outer_potential();
        for &e in edges_e {
            let target = -e;
            if target < phi0 && target > phi_out {
                if let Ok(r) = profile.radius_of_potential(target) {
                    pts.push(r.min(outer));
                }
            }
        }
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        pts.dedup();
        let mut k = vec![T::zero(); n_e + 1];
        for seg in pts.windows(2) {
            if seg[1] <= seg[0] {
                continue;
            }
            self.gl.for_each_node(seg[0], seg[1], |r, wt| {
                let phi = profile.phi(r);
                for (kj, &e) in k.iter_mut().zip(edges_e) {
                    let u = e + phi;
                    *kj = if u > T::zero() { u * u.sqrt() } else { T::zero() };
                }
                let scale = wt * r * r;
                for j in 0..n_e {
                    w[j] = w[j] + scale * (k[j + 1] - k[j]);
                }
            });
        }
        let pi = T::PI();
        let factor = T::lit(16.0) * pi * pi * T::lit(2.0) * T::SQRT_2() / T::lit(3.0);
        for wj in &mut w {
            *wj = (*wj * factor).max(T::zero());
        }
        w
    }

    /// `N(ρ, f) = Σ_j f_j w_j`.
    pub fn normalisation(
        &self,
        profile: &PotentialProfile<T>,
        f: &DfVector<T>,
        egrid: &EnergyGrid<T>,
    ) -> T {
        let w = self.dos_weights(profile, egrid);
        f.values().iter().zip(&w).fold(T::zero(), |acc, (&fj, &wj)| acc + fj * wj)
    }

    /// `ν(y; ρ, f)`, optionally convolved with the datum's `v3` error.
    pub fn project_pdf(
        &self,
        profile: &PotentialProfile<T>,
        f: &DfVector<T>,
        egrid: &EnergyGrid<T>,
        obs: &Observation<T>,
    ) -> Result<T> {
        let norm = self.normalisation(profile, f, egrid);
        self.project_pdf_with_norm(profile, f, egrid, obs, norm)
    }

    /// As [`Projector::project_pdf`] with a precomputed `N(ρ, f)`.
    pub fn project_pdf_with_norm(
        &self,
        profile: &PotentialProfile<T>,
        f: &DfVector<T>,
        egrid: &EnergyGrid<T>,
        obs: &Observation<T>,
        norm: T,
    ) -> Result<T> {
        if !(norm > T::zero()) {
            return Err(Error::DegenerateModel);
        }
        let rp = obs.rp();
        let value = match self.error_scale(obs) {
            Some(sigma) => {
                let mut acc = T::zero();
                for (&t, &w) in self.gh.nodes().iter().zip(self.gh.weights()) {
                    let u = obs.v3 + T::SQRT_2() * sigma * T::lit(t);
                    acc = acc + T::lit(w) * self.project_pdf_unnorm(profile, f, egrid, rp, u);
                }
                acc / T::PI().sqrt()
            }
            None => self.project_pdf_unnorm(profile, f, egrid, rp, obs.v3),
        };
        Ok(value / norm)
    }

    fn error_scale(&self, obs: &Observation<T>) -> Option<T> {
        if self.cfg.convolve_errors {
            obs.sigma_v3
        } else {
            None
        }
    }

    /// Coefficients `A_j` with `project_pdf_unnorm(rp, v3) = Σ_j f_j A_j`,
    /// including the error convolution when enabled.
    pub fn design_row(
        &self,
        profile: &PotentialProfile<T>,
        egrid: &EnergyGrid<T>,
        obs: &Observation<T>,
    ) -> Vec<T> {
        let mut row = vec![T::zero(); egrid.n_bins()];
        let rp = obs.rp();
        match self.error_scale(obs) {
            Some(sigma) => {
                let inv_sqrt_pi = T::one() / T::PI().sqrt();
                for (&t, &w) in self.gh.nodes().iter().zip(self.gh.weights()) {
                    let u = obs.v3 + T::SQRT_2() * sigma * T::lit(t);
                    self.accumulate_exact_row(profile, egrid, rp, u, T::lit(w) * inv_sqrt_pi, &mut row);
                }
            }
            None => self.accumulate_exact_row(profile, egrid, rp, obs.v3, T::one(), &mut row),
        }
        row
    }

    /// Adds `weight · A(rp, v3)` to `row` using the closed-form line-of-sight
    /// integral of the potential.
    fn accumulate_exact_row(
        &self,
        profile: &PotentialProfile<T>,
        egrid: &EnergyGrid<T>,
        rp: T,
        v3: T,
        weight: T,
        row: &mut [T],
    ) {
        let kin = T::lit(0.5) * v3 * v3;
        if rp >= profile.outer_radius() || kin >= profile.phi(rp) {
            return;
        }
        let edges_e = egrid.edges();
        let n_e = egrid.n_bins();
        let pts = self.line_of_sight_breakpoints(profile, egrid, rp, v3);
        let rp2 = rp * rp;
        let half = T::lit(0.5);
        // full_len[j]: path length over which bin j lies entirely above e_low.
        let mut full_len = vec![T::zero(); n_e + 1];
        let mut partial = vec![T::zero(); n_e];
        for seg in pts.windows(2) {
            let (xa, xb) = (seg[0], seg[1]);
            let dx = xb - xa;
            if !(dx > T::zero()) {
                continue;
            }
            let xm = (xa + xb) * half;
            let rm = (rp2 + xm * xm).sqrt();
            let e_mid = kin - profile.phi(rm);
            if e_mid >= egrid.highest() {
                continue;
            }
            // First edge strictly above e_mid; bin m = idx - 1 holds e_mid.
            let idx = edges_e.partition_point(|&e| e <= e_mid);
            if idx == 0 {
                full_len[0] = full_len[0] + dx;
                continue;
            }
            let m = idx - 1;
            let bin = profile.bin_of(rm);
            let phi_int = profile.line_of_sight_integral(bin, rp, xa, xb);
            partial[m] = partial[m] + (edges_e[m + 1] - kin) * dx + phi_int;
            full_len[m + 1] = full_len[m + 1] + dx;
        }
        let scale = weight * T::lit(4.0) * T::PI();
        let mut run = T::zero();
        for j in 0..n_e {
            run = run + full_len[j];
            let width = edges_e[j + 1] - edges_e[j];
            row[j] = row[j] + scale * (partial[j] + run * width);
        }
    }
}
