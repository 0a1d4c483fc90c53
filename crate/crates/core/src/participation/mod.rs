//! Participation ratios of the qubit elements.
//!
//! The coarse field map supplies the inner-region integrals and the field
//! in a convergence band next to every edge; 2D cross-section solutions
//! supply the scaling factors that turn a band integral into the integral
//! over the whole perimeter or wire cross-section.

mod factors;
mod reference;
mod sweep;

pub use factors::{
    edge_scaling_factors, wiring_scaling_factors, wiring_scaling_factors_with, PerInterface,
    ScalingFactors, EDGE_X0, MIN_BAND_CELLS, WIRING_SA_BAND, WIRING_X0,
};
pub use reference::{
    invert_reference_map, reference_field_map, reference_field_map_source, reference_scaling_factors,
    InnerFractions, REFERENCE_FREQUENCY_GHZ, REFERENCE_RESOLUTION,
};
pub use sweep::{sweep, SweepOptions, SweepParameter, SweepPoint, E_C_TARGET_MHZ, E_C_TOLERANCE_MHZ};

use std::fmt::Write as _;

use crate::constants::VACUUM_PERMITTIVITY;
use crate::error::{Error, Result};
use crate::fields::{RegionKind, SurfaceFieldMap};
use crate::geometry::{Element, InterfaceKind, InterfaceSpec, MapElement};

/// Per-element values in [`Element::ALL`] order.
pub type PerElement = [f64; 3];

/// Where a breakdown came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Computed,
    ReferenceTable,
    ImportedField,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Computed => "computed",
            Provenance::ReferenceTable => "reference-table",
            Provenance::ImportedField => "imported-field",
        }
    }
}

/// t·ε₀ε/(2U): turns ∬|E|² dA in V² into a participation.
fn weight(iface: &InterfaceSpec, map: &SurfaceFieldMap) -> f64 {
    iface.thickness_nm * 1e-9 * 0.5 * VACUUM_PERMITTIVITY * iface.relative_permittivity / map.total_energy
}

/// Inner-region participation per element. Only the pads element (pads,
/// ground and exposed substrate) has an inner region.
pub fn inner_participation(map: &SurfaceFieldMap, iface: &InterfaceSpec) -> Result<PerElement> {
    map.validate()?;
    iface.validate()?;
    if !map.has(MapElement::Pads, iface.kind, RegionKind::Inner) {
        return Err(Error::Missing(format!("inner {} field data for pads", iface.kind)));
    }
    let w = weight(iface, map);
    let mut s = 0.0;
    for &e in Element::Pads.map_elements() {
        s += map.integral(e, iface.kind, RegionKind::Inner);
    }
    Ok([w * s, 0.0, 0.0])
}

/// Perimeter participation of the pads element (pad and ground edges).
pub fn perimeter_participation(
    map: &SurfaceFieldMap,
    factors: &ScalingFactors,
    iface: &InterfaceSpec,
) -> Result<PerElement> {
    map.validate()?;
    iface.validate()?;
    if !map.has(MapElement::Pads, iface.kind, RegionKind::Band) {
        return Err(Error::Missing(format!("{} convergence-band data for pads", iface.kind)));
    }
    let w = weight(iface, map) * factors.edge[iface.kind.index()];
    let mut s = 0.0;
    for &e in Element::Pads.map_elements() {
        s += map.integral(e, iface.kind, RegionKind::Band);
    }
    Ok([w * s, 0.0, 0.0])
}

/// Wiring participation `[leads, SQUID]`, each segment with its own factor.
pub fn wiring_participation(
    map: &SurfaceFieldMap,
    factors: &ScalingFactors,
    iface: &InterfaceSpec,
) -> Result<[f64; 2]> {
    map.validate()?;
    iface.validate()?;
    let w = weight(iface, map);
    let mut out = [0.0; 2];
    for (k, (e, f)) in [(MapElement::Leads, &factors.leads), (MapElement::Squid, &factors.squid)]
        .into_iter()
        .enumerate()
    {
        if !map.has(e, iface.kind, RegionKind::Band) {
            return Err(Error::Missing(format!("{} wiring data for {}", iface.kind, e.as_str())));
        }
        out[k] = w * f[iface.kind.index()] * map.integral(e, iface.kind, RegionKind::Band);
    }
    Ok(out)
}

/// Participations per element and interface with their element totals.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipationBreakdown {
    /// `p[element][interface]`, interfaces in [`InterfaceKind::ALL`] order.
    pub p: [[f64; 3]; 3],
    pub totals: PerElement,
    pub provenance: Provenance,
}

/// Sums every element row in the fixed order MA, SA, MS.
pub fn total_participation(
    entries: [[Option<f64>; 3]; 3],
    provenance: Provenance,
) -> Result<ParticipationBreakdown> {
    let mut p = [[0.0; 3]; 3];
    for e in Element::ALL {
        for k in InterfaceKind::ALL {
            let v = entries[e.index()][k.index()]
                .ok_or_else(|| Error::Missing(format!("participation of {e} at {k}")))?;
            if !(v.is_finite() && (0.0..1.0).contains(&v)) {
                return Err(Error::invalid("participation", format!("{e} {k} = {v} outside [0, 1)")));
            }
            p[e.index()][k.index()] = v;
        }
    }
    let totals = p.map(|row| {
        let mut s = 0.0;
        for k in InterfaceKind::SUMMATION_ORDER {
            s += row[k.index()];
        }
        s
    });
    Ok(ParticipationBreakdown { p, totals, provenance })
}

/// Full breakdown of a field map. `layers` are indexed in
/// [`InterfaceKind::ALL`] order.
pub fn participation_breakdown(
    map: &SurfaceFieldMap,
    factors: &ScalingFactors,
    layers: &[InterfaceSpec; 3],
    provenance: Provenance,
) -> Result<ParticipationBreakdown> {
    let mut entries = [[None; 3]; 3];
    for iface in layers {
        let k = iface.kind.index();
        let inner = inner_participation(map, iface)?;
        let per = perimeter_participation(map, factors, iface)?;
        let [leads, squid] = wiring_participation(map, factors, iface)?;
        entries[Element::Pads.index()][k] = Some(inner[0] + per[0]);
        entries[Element::Leads.index()][k] = Some(leads);
        entries[Element::Squid.index()][k] = Some(squid);
    }
    total_participation(entries, provenance)
}

/// Default participation layers: 3 nm, ε = 10 on every interface.
pub fn participation_layers() -> [InterfaceSpec; 3] {
    InterfaceKind::ALL.map(InterfaceSpec::participation_default)
}

impl ParticipationBreakdown {
    /// Breakdown of a bundled design from the published interface table.
    pub fn from_reference(design: usize) -> Result<Self> {
        let ds = crate::geometry::reference_dataset();
        if design >= ds.designs.len() {
            return Err(Error::invalid("design index", format!("{design} out of range")));
        }
        let mut entries = [[None; 3]; 3];
        for e in Element::ALL {
            for k in InterfaceKind::ALL {
                entries[e.index()][k.index()] = Some(ds.interface_participation(design, e, k));
            }
        }
        total_participation(entries, Provenance::ReferenceTable)
    }

    pub fn get(&self, element: Element, kind: InterfaceKind) -> f64 {
        self.p[element.index()][kind.index()]
    }

    pub fn total(&self, element: Element) -> f64 {
        self.totals[element.index()]
    }

    /// Leads plus SQUID.
    pub fn wiring_total(&self) -> f64 {
        self.totals[Element::Leads.index()] + self.totals[Element::Squid.index()]
    }

    /// CSV rows `design,element,interface,p` followed by `design,element,total,P`.
    pub fn to_csv_rows(&self, design: &str) -> String {
        let mut s = String::new();
        for e in Element::ALL {
            for k in InterfaceKind::ALL {
                let _ = writeln!(s, "{design},{e},{k},{}", sci(self.get(e, k)));
            }
        }
        for e in Element::ALL {
            let _ = writeln!(s, "{design},{e},total,{}", sci(self.total(e)));
        }
        s
    }
}

/// Scientific notation at 10 significant digits, trailing zeros dropped,
/// so tabulated values print as tabulated.
fn sci(v: f64) -> String {
    let s = format!("{v:.9e}");
    match s.split_once('e') {
        Some((m, e)) if m.contains('.') => format!("{}e{e}", m.trim_end_matches('0').trim_end_matches('.')),
        _ => s,
    }
}

pub const PARTICIPATION_HEADER: &str = "design,element,interface,p";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldPatch;

    fn uniform_map(d: f64, u: f64) -> SurfaceFieldMap {
        let mut patches = Vec::new();
        for e in MapElement::ALL {
            for k in InterfaceKind::ALL {
                for region in [RegionKind::Inner, RegionKind::Band] {
                    patches.push(FieldPatch {
                        element: e,
                        interface: k,
                        region,
                        patch: 0,
                        xs: vec![0.0, 10.0],
                        ys: vec![0.0, 20.0],
                        values: vec![d; 4],
                    });
                }
            }
        }
        SurfaceFieldMap { patches, total_energy: u, excitation: 1.0 }
    }

    #[test]
    fn uniform_inner_density() {
        let (d, u) = (3.0e6, 2.0e-12);
        let map = uniform_map(d, u);
        let iface = InterfaceSpec::participation_default(InterfaceKind::Ms);
        let p = inner_participation(&map, &iface).unwrap();
        // pads and ground patches, 200 μm² each
        let want = 3e-9 * 0.5 * VACUUM_PERMITTIVITY * 10.0 * d * 2.0 * 200e-12 / u;
        assert!((p[0] - want).abs() <= 1e-12 * want);
        assert_eq!(&p[1..], &[0.0, 0.0]);
    }

    #[test]
    fn inner_is_linear_in_thickness() {
        let map = uniform_map(1e5, 1e-12);
        let mut iface = InterfaceSpec::participation_default(InterfaceKind::Ma);
        let a = inner_participation(&map, &iface).unwrap()[0];
        iface.thickness_nm *= 2.0;
        let b = inner_participation(&map, &iface).unwrap()[0];
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn zero_density_gives_zero() {
        let map = uniform_map(0.0, 1e-12);
        let f = ScalingFactors::unity();
        for iface in participation_layers() {
            assert_eq!(inner_participation(&map, &iface).unwrap(), [0.0; 3]);
            assert_eq!(wiring_participation(&map, &f, &iface).unwrap(), [0.0; 2]);
        }
    }

    #[test]
    fn unit_factor_is_plain_band_integral() {
        let map = uniform_map(2e5, 1e-12);
        let iface = InterfaceSpec::participation_default(InterfaceKind::Sa);
        let p = perimeter_participation(&map, &ScalingFactors::unity(), &iface).unwrap()[0];
        let band: f64 = [MapElement::Pads, MapElement::Ground]
            .iter()
            .map(|&e| map.integral(e, InterfaceKind::Sa, RegionKind::Band))
            .sum();
        assert_eq!(p, weight(&iface, &map) * band);
    }

    #[test]
    fn missing_region_is_reported() {
        let mut map = uniform_map(1.0, 1.0);
        map.patches.retain(|p| p.element != MapElement::Squid);
        let iface = InterfaceSpec::participation_default(InterfaceKind::Ms);
        assert!(matches!(
            wiring_participation(&map, &ScalingFactors::unity(), &iface),
            Err(Error::Missing(_))
        ));
        map.patches.retain(|p| p.region != RegionKind::Inner);
        assert!(matches!(inner_participation(&map, &iface), Err(Error::Missing(_))));
    }

    #[test]
    fn reference_totals_match_table() {
        let ds = crate::geometry::reference_dataset();
        let b = ParticipationBreakdown::from_reference(1).unwrap();
        for e in Element::ALL {
            let want = ds.participation(1, e);
            assert!((b.total(e) - want).abs() / want < 1e-3, "{e}");
        }
    }

    #[test]
    fn all_zero_entries_total_zero() {
        let b = total_participation([[Some(0.0); 3]; 3], Provenance::Computed).unwrap();
        assert_eq!(b.totals, [0.0; 3]);
    }

    #[test]
    fn missing_entry_is_an_error() {
        let mut e = [[Some(1e-5); 3]; 3];
        e[2][1] = None;
        assert!(matches!(total_participation(e, Provenance::Computed), Err(Error::Missing(_))));
    }
}
