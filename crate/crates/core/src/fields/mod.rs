//! Electrostatics: a 2D finite-element solver for pad-edge and wiring
//! cross-sections, a coarse planar solver for whole layouts, and the
//! surface field map exchanged between them and the participation stage.

mod banded;
mod coarse;
mod cross_section;
mod fem;
mod fieldmap;
mod grid;

pub use banded::{BandCholesky, BandMatrix};
pub use coarse::{
    capacitance, capacitance_for_charging_energy, capacitance_with, charging_energy_mhz, coarse_surface_fields,
    coarse_surface_fields_with, vacuum_rms_voltage, Capacitance, CoarseOptions, CoarseSolution, EDGE_BAND, WIRING_BAND,
};
pub use fieldmap::{
    export_field_map, import_field_map, FieldPatch, RegionKind, SurfaceFieldMap, FIELD_MAP_HEADER,
};
pub use cross_section::{
    Boundary, Box2, CrossSection, CrossSectionKind, CsConductor, Paint, Region, Resolution,
    PAD_EDGE_WIDTH,
};
pub use fem::{build_grid, solve_cross_section, FieldSolution, RESIDUAL_TOLERANCE};
pub use grid::{graded_axis, symmetric_axis, Grading, Zone};

/// Bilinear interpolation of |E| (V/m) at x in μm and z in nm.
pub fn field_probe(sol: &FieldSolution, x_um: f64, z_nm: f64) -> crate::Result<f64> {
    sol.probe(x_um, z_nm)
}
