use std::fmt::Write as _;

use std::f64::consts::PI;

use super::{
    background_rate, density_to_tangent, DipoleOrientation, band_grid, relaxation_spectrum, sample_ensemble, trial_rng, Ensemble, RelaxationSpectrum,
    TlsEnsembleConfig, TlsRegions,
};
use crate::error::{Error, Result};
use crate::constants::VACUUM_PERMITTIVITY;
use crate::fields::{RegionKind, Resolution, SurfaceFieldMap};
use crate::geometry::{InterfaceKind, MapElement, QubitDesign};
use crate::participation::{inner_participation, participation_layers, ScalingFactors, REFERENCE_FREQUENCY_GHZ};

/// Display window the simulated bands are mapped onto, GHz.
pub const SIMULATED_WINDOW_GHZ: (f64, f64) = (4.0, 5.0);

/// Interface tangents used for the weak-field pad interiors.
pub fn literature_tangents() -> [Option<f64>; 3] {
    let mut t = [None; 3];
    t[InterfaceKind::Ma.index()] = Some(3.9e-3);
    t[InterfaceKind::Ms.index()] = Some(7.1e-4);
    t[InterfaceKind::Sa.index()] = Some(5.9e-4);
    t
}

#[derive(Debug, Clone)]
pub struct DesignInput {
    pub label: String,
    pub design: QubitDesign,
    pub map: SurfaceFieldMap,
    pub factors: ScalingFactors,
}

#[derive(Debug, Clone)]
pub struct SimulationOptions {
    pub ensemble: TlsEnsembleConfig,
    pub trials: usize,
    pub centre_ghz: f64,
    pub step_mhz: f64,
    pub shape_resolution: Resolution,
    pub background_tangents: [Option<f64>; 3],
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            ensemble: TlsEnsembleConfig::default(),
            trials: 20,
            centre_ghz: REFERENCE_FREQUENCY_GHZ,
            step_mhz: 1.0,
            shape_resolution: Resolution::Coarse,
            background_tangents: literature_tangents(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DesignSimulation {
    pub label: String,
    pub gamma_bg_per_us: f64,
    pub spectra: Vec<RelaxationSpectrum>,
    /// Mean sampled defects per GHz, [`MapElement::ALL`] order.
    pub counts_per_ghz: [f64; 4],
    pub rejected: usize,
    pub resampled: usize,
    /// Ensemble of the first trial.
    pub first_ensemble: Ensemble,
}

fn median_of(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl DesignSimulation {
    /// Q of every spectrum point of every trial.
    pub fn all_q(&self) -> Vec<f64> {
        self.spectra.iter().flat_map(|s| s.q.iter().copied()).collect()
    }

    pub fn median_q(&self) -> f64 {
        median_of(&mut self.all_q())
    }

    /// Q at the given quantile (0..1) of the pooled spectra.
    pub fn q_quantile(&self, p: f64) -> f64 {
        let mut q = self.all_q();
        q.sort_by(f64::total_cmp);
        let i = ((q.len() - 1) as f64 * p.clamp(0.0, 1.0)).round() as usize;
        q[i]
    }

    pub fn mean_gamma_per_us(&self) -> f64 {
        let n: usize = self.spectra.iter().map(|s| s.gamma1_per_us.len()).sum();
        self.spectra.iter().flat_map(|s| s.gamma1_per_us.iter()).sum::<f64>() / n as f64
    }

    /// Band frequencies mapped linearly onto [`SIMULATED_WINDOW_GHZ`];
    /// Q and Γ₁ keep their band values.
    pub fn display_frequencies(spectrum: &RelaxationSpectrum) -> Vec<f64> {
        let (lo, hi) = SIMULATED_WINDOW_GHZ;
        let f = &spectrum.f_ghz;
        let (a, b) = (f[0], f[f.len() - 1]);
        f.iter().map(|&v| if b > a { lo + (v - a) / (b - a) * (hi - lo) } else { 0.5 * (lo + hi) }).collect()
    }

    /// `trial,f_GHz,gamma1_per_us,Q` with display frequencies.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("trial,f_GHz,gamma1_per_us,Q\n");
        for (k, sp) in self.spectra.iter().enumerate() {
            for (i, f) in Self::display_frequencies(sp).into_iter().enumerate() {
                let _ = writeln!(s, "{k},{f},{:e},{:e}", sp.gamma1_per_us[i], sp.q[i]);
            }
        }
        s
    }
}

/// Rate the sampled regions add on average by the loss-tangent route:
/// ω Σ p·tanδ with tanδ from the defect density, scaled by the sampled
/// thickness over the participation thickness and by the orientation
/// average relative to the isotropic one. μs⁻¹.
pub fn expected_excess_rate(input: &DesignInput, cfg: &TlsEnsembleConfig, f_ghz: f64) -> Result<f64> {
    cfg.validate()?;
    let orientation = match cfg.orientation {
        DipoleOrientation::Aligned => 3.0,
        DipoleOrientation::Isotropic => 1.0,
    };
    let mut s = 0.0;
    for iface in participation_layers() {
        let i = iface.kind.index();
        if cfg.thickness_nm[i] == 0.0 || cfg.density == 0.0 {
            continue;
        }
        let w = iface.thickness_nm * 1e-9 * 0.5 * VACUUM_PERMITTIVITY * iface.relative_permittivity / input.map.total_energy;
        let mut p = 0.0;
        for &e in &cfg.elements {
            let factor = match e {
                MapElement::Pads | MapElement::Ground => input.factors.edge[i],
                MapElement::Leads => input.factors.leads[i],
                MapElement::Squid => input.factors.squid[i],
            };
            p += w * factor * input.map.integral(e, iface.kind, RegionKind::Band);
        }
        let tan = density_to_tangent(cfg.density, &cfg.dipole, iface.relative_permittivity)?;
        s += p * tan * cfg.thickness_nm[i] / iface.thickness_nm;
    }
    Ok(2.0 * PI * f_ghz * 1e3 * s * orientation)
}

fn element_slot(e: MapElement) -> usize {
    MapElement::ALL.iter().position(|&m| m == e).expect("listed element")
}

/// Runs `opt.trials` seeded trials per design. Design `i` uses RNG stream
/// `trial·16 + i`, so results do not depend on evaluation order.
pub fn simulate_designs(inputs: &[DesignInput], opt: &SimulationOptions) -> Result<Vec<DesignSimulation>> {
    if inputs.len() > 16 {
        return Err(Error::invalid("simulation", "at most 16 designs share one seed"));
    }
    if opt.trials == 0 {
        return Err(Error::invalid("simulation", "need at least one trial"));
    }
    opt.ensemble.validate()?;
    let grid = band_grid(opt.centre_ghz, opt.ensemble.band_mhz, opt.step_mhz)?;
    let layers = participation_layers();
    let mut out = Vec::with_capacity(inputs.len());
    for (i, input) in inputs.iter().enumerate() {
        let regions =
            TlsRegions::build(&input.design, &input.map, &input.factors, &opt.ensemble.elements, opt.shape_resolution)?;
        let mut inner = [0.0; 3];
        for iface in &layers {
            inner[iface.kind.index()] = inner_participation(&input.map, iface)?[0];
        }
        let gamma_bg = background_rate(&inner, &opt.background_tangents, opt.centre_ghz)?;
        let mut spectra = Vec::with_capacity(opt.trials);
        let mut counts = [0.0; 4];
        let (mut rejected, mut resampled) = (0, 0);
        let mut first = None;
        for trial in 0..opt.trials {
            let mut rng = trial_rng(opt.ensemble.seed, trial as u64, i as u64);
            let ens = sample_ensemble(&regions, &opt.ensemble, &mut rng)?;
            for e in MapElement::ALL {
                counts[element_slot(e)] += ens.count_per_ghz(e, opt.ensemble.band_mhz) / opt.trials as f64;
            }
            rejected += ens.rejected;
            resampled += ens.resampled;
            spectra.push(relaxation_spectrum(&ens.defects, gamma_bg, &grid)?);
            if first.is_none() {
                first = Some(ens);
            }
        }
        out.push(DesignSimulation {
            label: input.label.clone(),
            gamma_bg_per_us: gamma_bg,
            spectra,
            counts_per_ghz: counts,
            rejected,
            resampled,
            first_ensemble: first.expect("at least one trial"),
        });
    }
    Ok(out)
}
