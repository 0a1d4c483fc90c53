//! Participation versus gap or lead width from the coarse stage.

use std::collections::HashMap;

use super::factors::{edge_scaling_factors, wiring_scaling_factors, ScalingFactors, EDGE_X0, WIRING_X0};
use super::{participation_breakdown, participation_layers, Provenance};
use crate::error::{Error, Result};
use crate::fields::{
    capacitance_with, coarse_surface_fields_with, solve_cross_section, CoarseOptions, CrossSection, Resolution,
};
use crate::geometry::{Element, QubitDesign};

pub const E_C_TARGET_MHZ: f64 = 220.0;
pub const E_C_TOLERANCE_MHZ: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// Gap G, pad width re-solved to hold E_C and leads stretched to span the gap.
    Gap,
    /// Lead width w′ at fixed pads.
    LeadWidth,
}

impl SweepParameter {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gap" => Some(SweepParameter::Gap),
            "lead-width" | "lead_width" | "width" => Some(SweepParameter::LeadWidth),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::Gap => "gap",
            SweepParameter::LeadWidth => "lead-width",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub resolution: Resolution,
    /// Sampling steps of the coarse stage; panel caps follow each design.
    pub coarse: CoarseOptions,
    pub e_c_target_mhz: f64,
    pub e_c_tolerance_mhz: f64,
    /// Pad width search interval for gap sweeps, μm.
    pub pad_width_bounds: (f64, f64),
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            resolution: Resolution::Medium,
            coarse: CoarseOptions::default(),
            e_c_target_mhz: E_C_TARGET_MHZ,
            e_c_tolerance_mhz: E_C_TOLERANCE_MHZ,
            pad_width_bounds: (50.0, 1000.0),
        }
    }
}

impl SweepOptions {
    fn coarse_for(&self, d: &QubitDesign) -> CoarseOptions {
        let f = CoarseOptions::for_design(d);
        CoarseOptions { pad_panel_max: f.pad_panel_max, ground_panel_max: f.ground_panel_max, ..self.coarse }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub pad_width: f64,
    pub e_c_mhz: f64,
    pub p_pads: f64,
    pub p_leads: f64,
    pub p_squid: f64,
    /// Leads plus SQUID.
    pub p_wiring: f64,
    pub p_pads_norm: f64,
    pub p_wiring_norm: f64,
}

/// Cross-section factors keyed by the bit patterns of their parameters.
#[derive(Default)]
struct FactorCache {
    edge: HashMap<[u64; 3], [f64; 3]>,
    wiring: HashMap<[u64; 3], [f64; 3]>,
}

fn key(a: f64, b: f64, c: f64) -> [u64; 3] {
    [a.to_bits(), b.to_bits(), c.to_bits()]
}

impl FactorCache {
    fn factors(&mut self, d: &QubitDesign, res: Resolution) -> Result<ScalingFactors> {
        let e = CrossSection::pad_edge_of(d)?;
        let crate::fields::CrossSectionKind::PadEdge { pad_width, gap } = e.kind else { unreachable!() };
        let h = d.film_thickness_um();
        let edge = match self.edge.get(&key(pad_width, gap, h)) {
            Some(f) => *f,
            None => {
                let f = edge_scaling_factors(&solve_cross_section(&e, res)?, EDGE_X0)?;
                self.edge.insert(key(pad_width, gap, h), f);
                f
            }
        };
        let mut wire = |w: f64, s: f64| -> Result<[f64; 3]> {
            if let Some(f) = self.wiring.get(&key(w, s, h)) {
                return Ok(*f);
            }
            let f = wiring_scaling_factors(&solve_cross_section(&CrossSection::wiring(w, s, h)?, res)?, WIRING_X0)?;
            self.wiring.insert(key(w, s, h), f);
            Ok(f)
        };
        let leads = wire(d.lead_width, d.lead_spacing)?;
        let squid = wire(d.squid_wire_width, d.squid_loop_side - 2.0 * d.squid_wire_width)?;
        Ok(ScalingFactors { edge, leads, squid, x0: EDGE_X0, x0_wiring: WIRING_X0 })
    }
}

/// Square pads (W = H) holding E_C at the target, by regula falsi on E_C(W).
fn hold_charging_energy(d: &QubitDesign, opt: &SweepOptions) -> Result<(QubitDesign, f64)> {
    let with_width = |w: f64| {
        let mut x = d.clone();
        x.pad_width = w;
        x.pad_height = w;
        x
    };
    let f = |w: f64| -> Result<f64> {
        let x = with_width(w);
        x.validate()?;
        Ok(capacitance_with(&x, &opt.coarse_for(&x))?.e_c_mhz - opt.e_c_target_mhz)
    };
    let (mut a, mut b) = opt.pad_width_bounds;
    // the SQUID and lead run must fit on the pads
    while with_width(a).validate().is_err() && a < b {
        a = (1.25 * a).min(b);
    }
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa.signum() == fb.signum() {
        return Err(Error::invalid(
            "E_C target",
            format!(
                "{} MHz unreachable for pad width in [{a}, {b}] μm at gap {} μm (E_C spans {:.1}..{:.1} MHz)",
                opt.e_c_target_mhz,
                d.gap,
                fa + opt.e_c_target_mhz,
                fb + opt.e_c_target_mhz
            ),
        ));
    }
    // E_C falls with W; tolerance is a quarter of the band so the result sits well inside it
    let tol = 0.25 * opt.e_c_tolerance_mhz;
    let mut side = 0;
    for _ in 0..60 {
        let w = (a * fb - b * fa) / (fb - fa);
        let fw = f(w)?;
        if fw.abs() <= tol {
            return Ok((with_width(w), fw + opt.e_c_target_mhz));
        }
        if fw.signum() == fa.signum() {
            a = w;
            fa = fw;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = w;
            fb = fw;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NonConvergence { what: "pad width search".into(), residual: fa.abs().min(fb.abs()) })
}

/// Pads and wiring participation at each parameter value, both normalized
/// by the total participation of the first point.
pub fn sweep(template: &QubitDesign, parameter: SweepParameter, values: &[f64], opt: &SweepOptions) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep", "empty parameter range"));
    }
    let layers = participation_layers();
    let mut cache = FactorCache::default();
    let mut out: Vec<SweepPoint> = Vec::with_capacity(values.len());
    for &v in values {
        let mut d = template.clone();
        let (d, e_c) = match parameter {
            SweepParameter::Gap => {
                // leads bridge the gap; their run along the pad stays fixed
                d.gap = v;
                d.lead_length = template.lead_run() + d.lead_drop();
                hold_charging_energy(&d, opt)?
            }
            SweepParameter::LeadWidth => {
                d.lead_width = v;
                hold_charging_energy(&d, opt)?
            }
        };
        let factors = cache.factors(&d, opt.resolution)?;
        let map = coarse_surface_fields_with(&d, 1.0, &opt.coarse_for(&d), &layers)?;
        let b = participation_breakdown(&map, &factors, &layers, Provenance::Computed)?;
        out.push(SweepPoint {
            value: v,
            pad_width: d.pad_width,
            e_c_mhz: e_c,
            p_pads: b.total(Element::Pads),
            p_leads: b.total(Element::Leads),
            p_squid: b.total(Element::Squid),
            p_wiring: b.wiring_total(),
            p_pads_norm: 0.0,
            p_wiring_norm: 0.0,
        });
    }
    // one common scale keeps the pads/wiring crossover visible
    let p0 = out[0].p_pads + out[0].p_wiring;
    for p in out.iter_mut() {
        p.p_pads_norm = p.p_pads / p0;
        p.p_wiring_norm = p.p_wiring / p0;
    }
    Ok(out)
}
