//! Mock catalogs drawn from analytic isotropic models, with binned truth.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DensityVector, EnergyGrid, PhasePoint, PotentialProfile, RadialGrid};
use crate::projection::{Observation, ObservationSet, Projector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    UniformSphere,
    Plummer,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plummer" => Ok(ModelKind::Plummer),
            "uniform" | "uniform-sphere" => Ok(ModelKind::UniformSphere),
            other => Err(Error::Usage(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticModel {
    pub kind: ModelKind,
    pub mass: f64,
    /// Plummer scale length `a`, or the uniform sphere's radius.
    pub scale: f64,
    pub g: f64,
}

impl AnalyticModel {
    pub fn plummer(mass: f64, scale: f64, g: f64) -> Result<Self> {
        Self { kind: ModelKind::Plummer, mass, scale, g }.validated()
    }

    pub fn uniform_sphere(mass: f64, radius: f64, g: f64) -> Result<Self> {
        Self { kind: ModelKind::UniformSphere, mass, scale: radius, g }.validated()
    }

    fn validated(self) -> Result<Self> {
        if !(self.mass > 0.0 && self.scale > 0.0 && self.g > 0.0) {
            return Err(Error::Domain("model mass, scale and G must be positive".into()));
        }
        Ok(self)
    }

    pub fn density(&self, r: f64) -> f64 {
        let (m, s) = (self.mass, self.scale);
        match self.kind {
            ModelKind::UniformSphere => {
                if r <= s {
                    3.0 * m / (4.0 * std::f64::consts::PI * s.powi(3))
                } else {
                    0.0
                }
            }
            ModelKind::Plummer => {
                3.0 * m / (4.0 * std::f64::consts::PI * s.powi(3)) * (1.0 + r * r / (s * s)).powf(-2.5)
            }
        }
    }

    /// Positive potential, `→ 0` at infinity.
    pub fn potential(&self, r: f64) -> f64 {
        let (m, s, g) = (self.mass, self.scale, self.g);
        match self.kind {
            ModelKind::UniformSphere => {
                if r <= s {
                    g * m * (3.0 * s * s - r * r) / (2.0 * s.powi(3))
                } else {
                    g * m / r
                }
            }
            ModelKind::Plummer => g * m / (r * r + s * s).sqrt(),
        }
    }

    /// `M(r) / M`.
    pub fn mass_fraction(&self, r: f64) -> f64 {
        let s = self.scale;
        match self.kind {
            ModelKind::UniformSphere => (r / s).min(1.0).powi(3),
            ModelKind::Plummer => (r * r / (r * r + s * s)).powf(1.5),
        }
    }

    /// Isotropic phase-space probability density `f(E)` (integrates to one).
    /// Only the Plummer model has one here.
    pub fn df(&self, e: f64) -> Result<f64> {
        match self.kind {
            ModelKind::Plummer => Ok(plummer_df_norm(self) * (-e).max(0.0).powf(3.5)),
            ModelKind::UniformSphere => Err(Error::Unsupported(
                "the uniform sphere has no positive isotropic distribution function".into(),
            )),
        }
    }
}

/// `24√2 a² / (7π³ G⁵ M⁵)`.
fn plummer_df_norm(m: &AnalyticModel) -> f64 {
    let pi3 = std::f64::consts::PI.powi(3);
    24.0 * std::f64::consts::SQRT_2 * m.scale * m.scale / (7.0 * pi3 * m.g.powi(5) * m.mass.powi(5))
}

pub fn model_density(model: &AnalyticModel, r: f64) -> f64 {
    model.density(r)
}

pub fn model_potential(model: &AnalyticModel, r: f64) -> f64 {
    model.potential(r)
}

/// A mock catalog and the phase-space points it was projected from.
#[derive(Clone, Debug)]
pub struct SyntheticCatalog {
    pub observations: ObservationSet<f64>,
    pub points: Vec<PhasePoint<f64>>,
}

fn isotropic_direction<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

/// Radius with `M(r)/M = u`, by bisection.
pub fn radius_from_mass_fraction(model: &AnalyticModel, u: f64) -> f64 {
    let mut hi = model.scale;
    while model.mass_fraction(hi) < u {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model.mass_fraction(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Speed at `r` drawn from `p(v) ∝ f(½v² − Φ(r)) v²` by rejection.
pub fn sample_plummer_speed<R: Rng + ?Sized>(rng: &mut R, model: &AnalyticModel, r: f64) -> f64 {
    let v_esc = (2.0 * model.potential(r)).sqrt();
    // q = v / v_esc has density ∝ q² (1 − q²)^{7/2}, peaking at q² = 2/9.
    let g_max = (2.0 / 9.0) * (7.0f64 / 9.0).powf(3.5);
    loop {
        let q: f64 = rng.random();
        let g = q * q * (1.0 - q * q).powf(3.5);
        if rng.random::<f64>() * g_max <= g {
            return q * v_esc;
        }
    }
}

/// Draws `n` tracers and projects them on the sky plane `(x1, x2)` with the
/// line of sight along `x3`. `sigma_v3` adds Gaussian velocity noise and is
/// recorded on every observation.
pub fn sample_catalog<R: Rng + ?Sized>(
    rng: &mut R,
    model: &AnalyticModel,
    n: usize,
    sigma_v3: Option<f64>,
) -> Result<SyntheticCatalog> {
    if n == 0 {
        return Err(Error::Usage("catalog size must be at least one".into()));
    }
    if model.kind != ModelKind::Plummer {
        return Err(Error::Unsupported("catalog sampling supports the Plummer model only".into()));
    }
    if let Some(s) = sigma_v3 {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Usage("sigma_v3 must be finite and non-negative".into()));
        }
    }
    let mut points = Vec::with_capacity(n);
    let mut obs = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = 1.0 - rng.random::<f64>();
        let r = radius_from_mass_fraction(model, u.min(1.0 - 1e-12));
        let dx = isotropic_direction(rng);
        let speed = sample_plummer_speed(rng, model, r);
        let dv = isotropic_direction(rng);
        let x = [r * dx[0], r * dx[1], r * dx[2]];
        let v = [speed * dv[0], speed * dv[1], speed * dv[2]];
        points.push(PhasePoint::new(x, v));
        let o = match sigma_v3 {
            Some(s) => {
                let noise: f64 = StandardNormal.sample(rng);
                Observation::new(x[0], x[1], v[2] + s * noise).with_error(s)
            }
            None => Observation::new(x[0], x[1], v[2]),
        };
        obs.push(o);
    }
    Ok(SyntheticCatalog { observations: ObservationSet::new(obs)?, points })
}

/// Model truth expressed on a pair of grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthTables {
    pub model: AnalyticModel,
    pub radial_edges: Vec<f64>,
    pub energy_edges: Vec<f64>,
    /// Shell mass over shell volume, per radial bin.
    pub rho: Vec<f64>,
    /// Bin-averaged `f(E)`.
    pub f: Vec<f64>,
    /// `f` rescaled so that `Σ f_j w_j = 1` for the binned `ρ`.
    pub f_normalised: Vec<f64>,
}

/// Mass-conserving bin averages of `ρ` and bin averages of `f`.
pub fn truth_tables(
    model: &AnalyticModel,
    radial: &RadialGrid<f64>,
    energy: &EnergyGrid<f64>,
    projector: &Projector<f64>,
) -> Result<TruthTables> {
    let four_thirds_pi = 4.0 * std::f64::consts::PI / 3.0;
    let rho: Vec<f64> = radial
        .edges()
        .windows(2)
        .map(|w| {
            let dm = model.mass * (model.mass_fraction(w[1]) - model.mass_fraction(w[0]));
            dm / (four_thirds_pi * (w[1].powi(3) - w[0].powi(3)))
        })
        .collect();
    let f: Vec<f64> = match model.kind {
        ModelKind::Plummer => {
            let k = plummer_df_norm(model);
            energy
                .edges()
                .windows(2)
                .map(|w| {
                    let hi = (-w[0]).max(0.0).powf(4.5);
                    let lo = (-w[1]).max(0.0).powf(4.5);
                    k * (hi - lo) / (4.5 * (w[1] - w[0]))
                })
                .collect()
        }
        ModelKind::UniformSphere => model.df(0.0).map(|_| Vec::new())?,
    };
    let profile = PotentialProfile::new(radial, &DensityVector::new(rho.clone())?, model.g)?;
    let w = projector.dos_weights(&profile, energy);
    let norm: f64 = f.iter().zip(&w).map(|(a, b)| a * b).sum();
    let f_normalised = if norm > 0.0 { f.iter().map(|v| v / norm).collect() } else { vec![0.0; f.len()] };
    Ok(TruthTables {
        model: *model,
        radial_edges: radial.edges().to_vec(),
        energy_edges: energy.edges().to_vec(),
        rho,
        f,
        f_normalised,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_forms() {
        let p = AnalyticModel::plummer(2.0, 0.5, 1.5).unwrap();
        assert!((p.potential(0.0) - 1.5 * 2.0 / 0.5).abs() < 1e-14);
        assert!((p.density(0.5) / p.density(0.0) - 2f64.powf(-2.5)).abs() < 1e-14);
        assert!((2f64.powf(-2.5) - 0.17678).abs() < 1e-5);
        assert!(AnalyticModel::plummer(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn uniform_sphere_matches_binned_model() {
        let u = AnalyticModel::uniform_sphere(3.0, 2.0, 1.0).unwrap();
        let grid = RadialGrid::uniform(2.0, 10_000).unwrap();
        let rho = vec![u.density(1.0); 10_000];
        let prof = PotentialProfile::new(&grid, &DensityVector::new(rho).unwrap(), 1.0).unwrap();
        for r in [0.0, 0.3, 1.0, 1.7, 2.0, 3.5] {
            let a = u.potential(r);
            assert!((prof.phi(r) - a).abs() <= 1e-5 * a, "{r}");
        }
    }

    #[test]
    fn plummer_df_is_normalised() {
        // ∫ f(E) g(E) dE with g(E) = 16π² ∫ r² √(2(E + Φ)) dr over all space
        let m = AnalyticModel::plummer(1.0, 1.0, 1.0).unwrap();
        let gl = GaussLegendre::<f64>::new(64);
        let phi0 = m.potential(0.0);
        let mut total = 0.0;
        let n = 200;
        for k in 0..n {
            let e_lo = -phi0 + phi0 * k as f64 / n as f64;
            let e_hi = -phi0 + phi0 * (k + 1) as f64 / n as f64;
            total += gl.integrate(e_lo, e_hi, |e| {
                // Φ(r) = −E at r_E = √(1/E² − 1)
                let r_e = (1.0 / (e * e) - 1.0).max(0.0).sqrt();
                let dos = gl.integrate(0.0, r_e, |r| r * r * (2.0 * (e + m.potential(r))).max(0.0).sqrt());
                16.0 * std::f64::consts::PI.powi(2) * dos * m.df(e).unwrap()
            });
        }
        assert!((total - 1.0).abs() < 2e-3, "{total}");
    }

    #[test]
    fn samples_are_bound_and_noise_free_by_default() {
        let m = AnalyticModel::plummer(1.0, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cat = sample_catalog(&mut rng, &m, 2000, None).unwrap();
        for (p, o) in cat.points.iter().zip(cat.observations.iter()) {
            let e = 0.5 * p.speed_squared() - m.potential(p.radius());
            assert!(e <= 0.0);
            assert_eq!(o.v3, p.v[2]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let zero = sample_catalog(&mut rng, &m, 2000, Some(0.0)).unwrap();
        for (o, p) in zero.observations.iter().zip(&zero.points) {
            assert_eq!(o.v3, p.v[2]);
            assert_eq!(o.sigma_v3, Some(0.0));
        }
        assert!(sample_catalog(&mut rng, &m, 0, None).is_err());
        let u = AnalyticModel::uniform_sphere(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(sample_catalog(&mut rng, &u, 5, None), Err(Error::Unsupported(_))));
    }

    #[test]
    fn mass_fraction_inverse() {
        let m = AnalyticModel::plummer(1.0, 2.0, 1.0).unwrap();
        for u in [1e-6, 0.1, 0.5, 0.9, 0.999] {
            let r = radius_from_mass_fraction(&m, u);
            assert!((m.mass_fraction(r) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn truth_binning_conserves_mass() {
        let m = AnalyticModel::plummer(1.0, 1.0, 1.0).unwrap();
        let grid = RadialGrid::new(vec![0.0, 0.5, 1.5, 4.0]).unwrap();
        let eg = EnergyGrid::uniform(-0.9, 3).unwrap();
        let proj = Projector::new(Default::default()).unwrap();
        let t = truth_tables(&m, &grid, &eg, &proj).unwrap();
        let dens = DensityVector::new(t.rho.clone()).unwrap();
        let mass = crate::model::enclosed_mass(&dens, &grid, 4.0).unwrap();
        assert!((mass - m.mass_fraction(4.0)).abs() < 1e-12);
        assert!(dens.is_admissible());
        let prof = PotentialProfile::new(&grid, &dens, 1.0).unwrap();
        let w = proj.dos_weights(&prof, &eg);
        let norm: f64 = t.f_normalised.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
