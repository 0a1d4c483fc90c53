//! Bundled field maps that reproduce the published interface table.
//!
//! Each map keeps the spatial shape of the coarse solution of its design.
//! Every (element, interface, region) group is rescaled so that the
//! participation pipeline, run with the frozen scaling factors, returns
//! the tabulated value. Pads entries are split between the inner region
//! and the perimeter band in the proportion found by the coarse stage.

use super::factors::{PerInterface, ScalingFactors, EDGE_X0, WIRING_X0};
use super::{inner_participation, participation_layers, perimeter_participation, wiring_participation};
use crate::error::{Error, Result};
use crate::fields::{
    capacitance_for_charging_energy, vacuum_rms_voltage, CoarseOptions, CoarseSolution,
    RegionKind, Resolution, SurfaceFieldMap,
};
use crate::geometry::{reference_dataset, Element, InterfaceKind, MapElement, QubitDesign};

/// Resolution of the frozen scaling factors.
pub const REFERENCE_RESOLUTION: Resolution = Resolution::Medium;
/// Mode frequency used for the RMS excitation of the bundled maps, GHz.
pub const REFERENCE_FREQUENCY_GHZ: f64 = 4.5;

// MA, MS, SA
const EDGE: PerInterface = [138.95333536027144, 8.554367822505528, 8.161735782660855];
const LEADS_NARROW: PerInterface = [127.55462986085058, 8.740840797376512, 8.108623895214773];
const LEADS_WIDE: PerInterface = [313.02706921721324, 22.841695149905526, 20.901279205676776];
const SQUID: PerInterface = [88.65617333114606, 6.046325032649179, 5.199040146908425];

/// Scaling factors of a bundled design at [`REFERENCE_RESOLUTION`].
pub fn reference_scaling_factors(label: &str) -> Option<ScalingFactors> {
    let leads = match label {
        "long" | "regular" => LEADS_NARROW,
        "wide" => LEADS_WIDE,
        _ => return None,
    };
    Some(ScalingFactors { edge: EDGE, leads, squid: SQUID, x0: EDGE_X0, x0_wiring: WIRING_X0 })
}

/// Share of each pads interface participation held by the inner region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerFractions(pub PerInterface);

impl InnerFractions {
    pub fn from_map(map: &SurfaceFieldMap, factors: &ScalingFactors) -> Result<Self> {
        let mut out = [0.0; 3];
        for iface in participation_layers() {
            let inner = inner_participation(map, &iface)?[0];
            let per = perimeter_participation(map, factors, &iface)?[0];
            if !(inner + per > 0.0) {
                return Err(Error::Degenerate(format!("no pads field on {}", iface.kind)));
            }
            out[iface.kind.index()] = inner / (inner + per);
        }
        Ok(InnerFractions(out))
    }
}

fn rescale(map: &mut SurfaceFieldMap, elements: &[MapElement], kind: InterfaceKind, region: RegionKind, k: f64) {
    for p in map.patches.iter_mut() {
        if elements.contains(&p.element) && p.interface == kind && p.region == region {
            for v in p.values.iter_mut() {
                *v *= k;
            }
        }
    }
}

fn ratio(target: f64, current: f64, what: &str) -> Result<f64> {
    if target == 0.0 {
        return Ok(0.0);
    }
    if !(current > 0.0) {
        return Err(Error::Degenerate(format!("{what}: coarse field is zero, cannot match {target:e}")));
    }
    Ok(target / current)
}

/// Field map of bundled design `index` rescaled to the published table.
pub fn invert_reference_map(design: &QubitDesign, index: usize, factors: &ScalingFactors) -> Result<SurfaceFieldMap> {
    let ds = reference_dataset();
    if index >= ds.designs.len() {
        return Err(Error::invalid("reference design", format!("index {index} out of range")));
    }
    let opt = CoarseOptions::export();
    let coarse = CoarseSolution::solve(design, 1.0, &opt)?;
    let shape = coarse.surface_fields(&opt, &participation_layers());
    let fractions = InnerFractions::from_map(&shape, factors)?;

    let c = capacitance_for_charging_energy(ds.anharmonicity_mhz[index]);
    let v = vacuum_rms_voltage(c, REFERENCE_FREQUENCY_GHZ);
    let mut map = shape.scaled(v);
    map.total_energy = 0.5 * c * v * v;

    let pads = Element::Pads.map_elements();
    for iface in participation_layers() {
        let k = iface.kind;
        let p_pads = ds.interface_participation(index, Element::Pads, k);
        let f = fractions.0[k.index()];
        let inner = inner_participation(&map, &iface)?[0];
        rescale(&mut map, pads, k, RegionKind::Inner, ratio(f * p_pads, inner, "pads inner")?);
        let per = perimeter_participation(&map, factors, &iface)?[0];
        rescale(&mut map, pads, k, RegionKind::Band, ratio((1.0 - f) * p_pads, per, "pads perimeter")?);
        let [leads, squid] = wiring_participation(&map, factors, &iface)?;
        let t_leads = ds.interface_participation(index, Element::Leads, k);
        let t_squid = ds.interface_participation(index, Element::Squid, k);
        rescale(&mut map, &[MapElement::Leads], k, RegionKind::Band, ratio(t_leads, leads, "leads")?);
        rescale(&mut map, &[MapElement::Squid], k, RegionKind::Band, ratio(t_squid, squid, "SQUID")?);
    }
    Ok(map)
}

const LONG_MAP: &str = include_str!("../../data/fieldmaps/long.csv");
const REGULAR_MAP: &str = include_str!("../../data/fieldmaps/regular.csv");
const WIDE_MAP: &str = include_str!("../../data/fieldmaps/wide.csv");

/// Bundled field-map CSV of a design.
pub fn reference_field_map_source(label: &str) -> Option<&'static str> {
    match label {
        "long" => Some(LONG_MAP),
        "regular" => Some(REGULAR_MAP),
        "wide" => Some(WIDE_MAP),
        _ => None,
    }
}

pub fn reference_field_map(label: &str) -> Result<SurfaceFieldMap> {
    let src = reference_field_map_source(label)
        .ok_or_else(|| Error::invalid("field map", format!("no bundled map for '{label}'")))?;
    SurfaceFieldMap::from_csv(src)
}
