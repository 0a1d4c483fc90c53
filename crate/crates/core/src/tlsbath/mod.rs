//! Qubit relaxation from a bath of individual two-level defects.
//!
//! Defects in the strong-field regions (pad and ground perimeters, leads,
//! SQUID) are sampled one by one and relax the qubit through a Lorentzian
//! each; the weak-field pad interiors enter as a flat background rate.
//!
//! Units: g and Δ are stored in MHz (ordinary frequency), Γ_1TLS in μs⁻¹.
//! Rates combine as Γ = 2(2πg)²Γ_TLS / (Γ_TLS² + (2πΔ)²) with every
//! frequency converted to rad/μs.

mod regions;
mod simulate;

pub use regions::{
    edge_faces, wiring_faces, BandProfile, FaceShape, InterfaceFaces, RegionPatch, TlsRegions,
    STRONG_FIELD_ELEMENTS,
};
pub use simulate::{
    expected_excess_rate, literature_tangents, simulate_designs, DesignInput, DesignSimulation, SimulationOptions,
    SIMULATED_WINDOW_GHZ,
};

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use statrs::distribution::{Continuous, ContinuousCDF, Normal as StdNormal};

use crate::constants::{DEBYE, PLANCK, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};
use crate::geometry::{InterfaceKind, MapElement};

/// One defect coupled to the qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct TlsDefect {
    pub element: MapElement,
    pub interface: InterfaceKind,
    /// Layout position, μm.
    pub position: [f64; 2],
    pub dipole_debye: f64,
    /// Offset from the band centre, MHz.
    pub detuning_mhz: f64,
    pub gamma_tls_per_us: f64,
    pub coupling_mhz: f64,
}

impl TlsDefect {
    /// Γ_1TLS > 2πg, the weak-coupling limit of the rate model.
    pub fn is_weakly_coupled(&self) -> bool {
        self.gamma_tls_per_us > 2.0 * PI * self.coupling_mhz
    }

    fn check(&self, index: usize) -> Result<()> {
        let ok = self.dipole_debye > 0.0
            && self.gamma_tls_per_us > 0.0
            && self.coupling_mhz >= 0.0
            && self.detuning_mhz.is_finite()
            && self.is_weakly_coupled();
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(
                "defect",
                format!(
                    "#{index}: d = {} D, Γ = {} μs⁻¹, g = {} MHz (need d > 0, Γ > 2πg)",
                    self.dipole_debye, self.gamma_tls_per_us, self.coupling_mhz
                ),
            ))
        }
    }

    /// Excess qubit rate at qubit–band-centre offset `f_mhz`, μs⁻¹.
    pub fn rate_at(&self, f_mhz: f64) -> f64 {
        let g = 2.0 * PI * self.coupling_mhz;
        let d = 2.0 * PI * (f_mhz - self.detuning_mhz);
        let gam = self.gamma_tls_per_us;
        2.0 * g * g * gam / (gam * gam + d * d)
    }
}

/// Gaussian dipole moments truncated from below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleDistribution {
    pub mean_debye: f64,
    pub sigma_debye: f64,
    pub min_debye: f64,
}

impl Default for DipoleDistribution {
    fn default() -> Self {
        DipoleDistribution { mean_debye: 2.6, sigma_debye: 1.6, min_debye: 0.1 }
    }
}

impl DipoleDistribution {
    fn validate(&self) -> Result<()> {
        if !(self.mean_debye > 0.0 && self.sigma_debye >= 0.0 && self.min_debye >= 0.0) {
            return Err(Error::invalid("dipole distribution", format!("{self:?}")));
        }
        if self.sigma_debye == 0.0 && self.mean_debye < self.min_debye {
            return Err(Error::invalid("dipole distribution", "mean below the truncation with zero spread"));
        }
        Ok(())
    }

    /// ⟨d²⟩ of the truncated distribution, D².
    pub fn second_moment(&self) -> f64 {
        let (mu, s) = (self.mean_debye, self.sigma_debye);
        if s == 0.0 {
            return mu * mu;
        }
        let n = StdNormal::standard();
        let a = (self.min_debye - mu) / s;
        let z = 1.0 - n.cdf(a);
        let lam = n.pdf(a) / z;
        let mean = mu + s * lam;
        let var = s * s * (1.0 + a * lam - lam * lam);
        var + mean * mean
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sigma_debye == 0.0 {
            return self.mean_debye;
        }
        let n = Normal::new(self.mean_debye, self.sigma_debye).expect("validated spread");
        loop {
            let d = n.sample(rng);
            if d >= self.min_debye {
                return d;
            }
        }
    }
}

/// How a dipole projects onto the local field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DipoleOrientation {
    /// g = E·d.
    Aligned,
    /// g = E·d·cosθ with cosθ uniform on [−1, 1]; ⟨cos²θ⟩ = 1/3.
    Isotropic,
}

/// Ensemble parameters. Thicknesses in nm, indexed by [`InterfaceKind::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct TlsEnsembleConfig {
    /// Defects per μm³ per GHz.
    pub density: f64,
    pub dipole: DipoleDistribution,
    pub thickness_nm: [f64; 3],
    pub band_mhz: f64,
    /// Γ_1TLS drawn log-uniformly from this range, μs⁻¹.
    pub gamma_range_per_us: (f64, f64),
    pub orientation: DipoleOrientation,
    pub elements: Vec<MapElement>,
    pub seed: u64,
}

impl Default for TlsEnsembleConfig {
    fn default() -> Self {
        TlsEnsembleConfig {
            density: 1800.0,
            dipole: DipoleDistribution::default(),
            thickness_nm: [2.0, 0.3, 0.36],
            band_mhz: 300.0,
            gamma_range_per_us: (0.1, 10.0),
            orientation: DipoleOrientation::Aligned,
            elements: STRONG_FIELD_ELEMENTS.to_vec(),
            seed: 0,
        }
    }
}

impl TlsEnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |r: String| Err(Error::invalid("TLS ensemble", r));
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return bad(format!("density {} must be ≥ 0", self.density));
        }
        if !(self.band_mhz > 0.0) {
            return bad(format!("band {} MHz must be > 0", self.band_mhz));
        }
        if self.thickness_nm.iter().any(|t| !(*t >= 0.0)) {
            return bad(format!("thicknesses {:?} nm must be ≥ 0", self.thickness_nm));
        }
        let (lo, hi) = self.gamma_range_per_us;
        if !(lo > 0.0 && hi >= lo) {
            return bad(format!("Γ range ({lo}, {hi}) μs⁻¹"));
        }
        self.dipole.validate()
    }

    fn sample_gamma<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.gamma_range_per_us;
        if hi == lo {
            return lo;
        }
        (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp()
    }
}

/// Loss tangent of a defect ensemble, πρ⟨d²⟩/(3εε₀); `density` in
/// (μm³·GHz)⁻¹.
pub fn density_to_tangent(density: f64, dipole: &DipoleDistribution, relative_permittivity: f64) -> Result<f64> {
    if !(density > 0.0 && relative_permittivity > 0.0) {
        return Err(Error::invalid(
            "density_to_tangent",
            format!("density {density} and permittivity {relative_permittivity} must be > 0"),
        ));
    }
    dipole.validate()?;
    // per m³ per joule
    let rho = density * 1e18 / (PLANCK * 1e9);
    let d2 = dipole.second_moment() * DEBYE * DEBYE;
    Ok(PI * rho * d2 / (3.0 * relative_permittivity * VACUUM_PERMITTIVITY))
}

/// ω Σ p_i tanδ_i in μs⁻¹ for inner-region participations `inner`;
/// entries and tangents indexed by [`InterfaceKind::index`].
pub fn background_rate(inner: &[f64; 3], tangents: &[Option<f64>; 3], f_ghz: f64) -> Result<f64> {
    if !(f_ghz > 0.0) {
        return Err(Error::invalid("frequency", format!("{f_ghz} GHz must be > 0")));
    }
    let mut s = 0.0;
    for k in InterfaceKind::SUMMATION_ORDER {
        let p = inner[k.index()];
        if p == 0.0 {
            continue;
        }
        let t = tangents[k.index()].ok_or_else(|| Error::Missing(format!("loss tangent of {k}")))?;
        s += p * t;
    }
    Ok(2.0 * PI * f_ghz * 1e3 * s)
}

/// Γ₁ and Q on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationSpectrum {
    pub f_ghz: Vec<f64>,
    pub gamma1_per_us: Vec<f64>,
    pub q: Vec<f64>,
    pub gamma_bg_per_us: f64,
}

pub const SPECTRUM_HEADER: &str = "f_GHz,gamma1_per_us,Q";

impl RelaxationSpectrum {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(SPECTRUM_HEADER);
        s.push('\n');
        for i in 0..self.f_ghz.len() {
            let _ = writeln!(s, "{},{:e},{:e}", self.f_ghz[i], self.gamma1_per_us[i], self.q[i]);
        }
        s
    }
}

/// Grid of `n` points covering the band `centre ± band/2`, GHz.
pub fn band_grid(centre_ghz: f64, band_mhz: f64, step_mhz: f64) -> Result<Vec<f64>> {
    if !(band_mhz > 0.0 && step_mhz > 0.0 && centre_ghz > 0.0) {
        return Err(Error::invalid("spectrum grid", format!("band {band_mhz} MHz, step {step_mhz} MHz")));
    }
    let n = (band_mhz / step_mhz).round() as usize + 1;
    let lo = centre_ghz - 0.5e-3 * band_mhz;
    Ok((0..n).map(|i| lo + 1e-3 * step_mhz * i as f64).collect())
}

/// Γ₁(f) = Γ_bg + Σ_i excess rate of defect i; detunings are measured from
/// the grid midpoint.
pub fn relaxation_spectrum(defects: &[TlsDefect], gamma_bg_per_us: f64, grid_ghz: &[f64]) -> Result<RelaxationSpectrum> {
    if grid_ghz.is_empty() || grid_ghz.iter().any(|f| !(*f > 0.0)) {
        return Err(Error::invalid("spectrum grid", "frequencies must be positive and non-empty"));
    }
    if !(gamma_bg_per_us >= 0.0 && gamma_bg_per_us.is_finite()) {
        return Err(Error::invalid("background rate", format!("{gamma_bg_per_us} μs⁻¹")));
    }
    for (i, d) in defects.iter().enumerate() {
        d.check(i)?;
    }
    let centre = 0.5 * (grid_ghz[0] + grid_ghz[grid_ghz.len() - 1]);
    let mut gamma = Vec::with_capacity(grid_ghz.len());
    let mut q = Vec::with_capacity(grid_ghz.len());
    for &f in grid_ghz {
        let off = (f - centre) * 1e3;
        let excess: f64 = defects.iter().map(|d| d.rate_at(off)).sum();
        let g = gamma_bg_per_us + excess;
        gamma.push(g);
        q.push(2.0 * PI * f * 1e3 / g);
    }
    Ok(RelaxationSpectrum { f_ghz: grid_ghz.to_vec(), gamma1_per_us: gamma, q, gamma_bg_per_us })
}

/// Sampled defects plus how many were dropped for strong coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub defects: Vec<TlsDefect>,
    pub rejected: usize,
    pub resampled: usize,
}

pub const ENSEMBLE_HEADER: &str = "interface,x_um,y_um,d_debye,gamma_tls_per_us,delta_MHz,g_MHz";

impl Ensemble {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(ENSEMBLE_HEADER);
        s.push('\n');
        for d in &self.defects {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:e}",
                d.interface, d.position[0], d.position[1], d.dipole_debye, d.gamma_tls_per_us, d.detuning_mhz, d.coupling_mhz
            );
        }
        s
    }

    /// Defects of one element per GHz of band.
    pub fn count_per_ghz(&self, element: MapElement, band_mhz: f64) -> f64 {
        self.defects.iter().filter(|d| d.element == element).count() as f64 / (1e-3 * band_mhz)
    }
}

/// RNG of one trial of one design; streams never overlap between
/// (trial, design) pairs for `design < 16`.
pub fn trial_rng(seed: u64, trial: u64, design: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial * 16 + design);
    rng
}

/// Expected defect count of one element and interface, per GHz.
pub fn expected_count_per_ghz(regions: &TlsRegions, cfg: &TlsEnsembleConfig, element: MapElement, kind: InterfaceKind) -> f64 {
    cfg.density * cfg.thickness_nm[kind.index()] * 1e-3 * regions.area(element, kind)
}

/// Poisson counts per (patch, interface, face), uniform positions, Gaussian
/// dipoles, uniform detunings over the band.
pub fn sample_ensemble<R: Rng + ?Sized>(regions: &TlsRegions, cfg: &TlsEnsembleConfig, rng: &mut R) -> Result<Ensemble> {
    cfg.validate()?;
    for e in &cfg.elements {
        if !regions.patches.iter().any(|p| p.element == *e) {
            return Err(Error::Missing(format!("field map has no {} region", e.as_str())));
        }
    }
    let mut out = Ensemble { defects: Vec::new(), rejected: 0, resampled: 0 };
    if cfg.density == 0.0 {
        return Ok(out);
    }
    let band_ghz = 1e-3 * cfg.band_mhz;
    // g in MHz per (V/m · D)
    let g_per_field = DEBYE / PLANCK * 1e-6;
    for patch in regions.patches.iter().filter(|p| cfg.elements.contains(&p.element)) {
        let contour = regions
            .layout
            .contour(patch.element, patch.patch)
            .ok_or_else(|| Error::Missing(format!("layout contour {} {}", patch.element.as_str(), patch.patch)))?;
        for kind in InterfaceKind::ALL {
            let profile = &patch.profiles[kind.index()];
            let t_um = 1e-3 * cfg.thickness_nm[kind.index()];
            for face in &regions.faces(patch.element, kind).faces {
                let lambda = cfg.density * t_um * profile.length() * face.extent() * band_ghz;
                let n = if lambda > 0.0 { Poisson::new(lambda).expect("positive mean").sample(rng) as usize } else { 0 };
                for _ in 0..n {
                    let s = profile.s[0] + rng.random::<f64>() * profile.length();
                    let u = rng.random::<f64>() * face.extent();
                    let e2 = (profile.at(s) * face.at(u)).max(0.0);
                    let field = e2.sqrt();
                    let p = contour.point_at(s - profile.s[0]);
                    let off = face.normal_offset(u);
                    let position = [p.pos[0] + off * p.normal[0], p.pos[1] + off * p.normal[1]];
                    let detuning_mhz = (rng.random::<f64>() - 0.5) * cfg.band_mhz;
                    let draw = |rng: &mut R| {
                        let d = cfg.dipole.sample(rng);
                        let cos = match cfg.orientation {
                            DipoleOrientation::Aligned => 1.0,
                            DipoleOrientation::Isotropic => 2.0 * rng.random::<f64>() - 1.0,
                        };
                        let gamma = cfg.sample_gamma(rng);
                        (d, (field * d * cos * g_per_field).abs(), gamma)
                    };
                    let mut candidate = draw(rng);
                    if candidate.2 <= 2.0 * PI * candidate.1 {
                        out.resampled += 1;
                        candidate = draw(rng);
                        if candidate.2 <= 2.0 * PI * candidate.1 {
                            out.rejected += 1;
                            continue;
                        }
                    }
                    let (dipole_debye, coupling_mhz, gamma_tls_per_us) = candidate;
                    out.defects.push(TlsDefect {
                        element: patch.element,
                        interface: kind,
                        position,
                        dipole_debye,
                        detuning_mhz,
                        gamma_tls_per_us,
                        coupling_mhz,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defect(g: f64, gamma: f64, detuning: f64) -> TlsDefect {
        TlsDefect {
            element: MapElement::Leads,
            interface: InterfaceKind::Ma,
            position: [0.0, 0.0],
            dipole_debye: 2.6,
            detuning_mhz: detuning,
            gamma_tls_per_us: gamma,
            coupling_mhz: g,
        }
    }

    #[test]
    fn resonant_defect_adds_two_g_squared_over_gamma() {
        let grid = [4.5];
        let d = defect(0.01, 1.0, 0.0);
        let s = relaxation_spectrum(&[d], 0.02, &grid).unwrap();
        let g = 2.0 * PI * 0.01;
        assert!((s.gamma1_per_us[0] - 0.02 - 2.0 * g * g / 1.0).abs() < 1e-15);
        assert!((s.q[0] - 2.0 * PI * 4500.0 / s.gamma1_per_us[0]).abs() < 1e-9);
    }

    #[test]
    fn no_defects_is_flat_background() {
        let grid = band_grid(4.5, 300.0, 1.0).unwrap();
        assert_eq!(grid.len(), 301);
        let s = relaxation_spectrum(&[], 0.05, &grid).unwrap();
        assert!(s.gamma1_per_us.iter().all(|&g| g == 0.05));
    }

    #[test]
    fn far_detuned_defect_follows_inverse_square() {
        let d = defect(0.01, 0.5, 0.0);
        let delta = 100.0;
        let g = 2.0 * PI * 0.01;
        let w = 2.0 * PI * delta;
        let direct = 2.0 * g * g * 0.5 / (0.25 + w * w);
        assert!((d.rate_at(delta) - direct).abs() <= 1e-12 * direct);
        let limit = 2.0 * g * g * 0.5 / (w * w);
        assert!((d.rate_at(delta) / limit - 1.0).abs() < 1e-5);
    }

    #[test]
    fn strongly_coupled_defect_is_rejected_with_index() {
        let ds = [defect(0.001, 1.0, 0.0), defect(1.0, 1.0, 0.0)];
        let err = relaxation_spectrum(&ds, 0.0, &[4.5]).unwrap_err().to_string();
        assert!(err.contains("#1"), "{err}");
    }

    #[test]
    fn background_rate_arithmetic() {
        let r = background_rate(&[1e-4, 0.0, 0.0], &[Some(1e-3), None, None], 5.0).unwrap();
        // 2π·5e9·1e-7 s⁻¹ in μs⁻¹
        assert!((r - 2.0 * PI * 5e9 * 1e-7 * 1e-6).abs() < 1e-15);
        assert_eq!(background_rate(&[1e-4; 3], &[Some(0.0); 3], 5.0).unwrap(), 0.0);
        assert!(matches!(background_rate(&[0.0, 1e-4, 0.0], &[Some(1.0), None, None], 5.0), Err(Error::Missing(_))));
    }

    #[test]
    fn tangent_from_density_scales() {
        let d = DipoleDistribution { mean_debye: 2.6, sigma_debye: 1.6, min_debye: 0.0 };
        let t = density_to_tangent(1800.0, &d, 10.0).unwrap();
        assert!((density_to_tangent(3600.0, &d, 10.0).unwrap() / t - 2.0).abs() < 1e-12);
        let d2 = DipoleDistribution { mean_debye: 5.2, sigma_debye: 3.2, min_debye: 0.0 };
        assert!((density_to_tangent(1800.0, &d2, 10.0).unwrap() / t - 4.0).abs() < 1e-9);
        assert!(density_to_tangent(0.0, &d, 10.0).is_err());
    }

    #[test]
    fn truncated_second_moment_matches_sampling() {
        let d = DipoleDistribution::default();
        let mut rng = trial_rng(7, 0, 0);
        let n = 200_000;
        let m: f64 = (0..n).map(|_| d.sample(&mut rng).powi(2)).sum::<f64>() / n as f64;
        assert!((m / d.second_moment() - 1.0).abs() < 0.01, "{m} vs {}", d.second_moment());
        // cutting the low tail raises ⟨d²⟩ above μ² + σ² = 9.32
        assert!(d.second_moment() > 9.32);
        // cut 16σ below the mean: μ² + σ² = 26² + 1.6²
        let far = DipoleDistribution { min_debye: 0.0, mean_debye: 26.0, sigma_debye: 1.6 };
        assert!((far.second_moment() - 678.56).abs() < 1e-9, "{}", far.second_moment());
    }

    #[test]
    fn trial_streams_differ() {
        let a: u64 = trial_rng(1, 0, 0).random();
        let b: u64 = trial_rng(1, 0, 1).random();
        let c: u64 = trial_rng(1, 1, 0).random();
        assert!(a != b && a != c && b != c);
        assert_eq!(a, trial_rng(1, 0, 0).random::<u64>());
    }
}
