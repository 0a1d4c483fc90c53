//! Parametric transmon design, interface layers, bundled designs and
//! reference tables.

mod layout;
mod reference;

pub use layout::{Conductor, Contour, ContourPoint, Layout, MapElement, Rect};
pub use reference::{reference_dataset, MeasuredQubit, Process, ReferenceDataset};

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dielectric interface layer type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InterfaceKind {
    #[serde(rename = "MA")]
    Ma,
    #[serde(rename = "MS")]
    Ms,
    #[serde(rename = "SA")]
    Sa,
}

impl InterfaceKind {
    /// Table order.
    pub const ALL: [InterfaceKind; 3] = [InterfaceKind::Ma, InterfaceKind::Ms, InterfaceKind::Sa];
    /// Order used for every floating-point sum over interfaces.
    pub const SUMMATION_ORDER: [InterfaceKind; 3] =
        [InterfaceKind::Ma, InterfaceKind::Sa, InterfaceKind::Ms];

    pub fn as_str(self) -> &'static str {
        match self {
            InterfaceKind::Ma => "MA",
            InterfaceKind::Ms => "MS",
            InterfaceKind::Sa => "SA",
        }
    }

    pub fn index(self) -> usize {
        match self {
            InterfaceKind::Ma => 0,
            InterfaceKind::Ms => 1,
            InterfaceKind::Sa => 2,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "MA" => Some(InterfaceKind::Ma),
            "MS" => Some(InterfaceKind::Ms),
            "SA" => Some(InterfaceKind::Sa),
            _ => None,
        }
    }
}

impl fmt::Display for InterfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Circuit element of the loss budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Pads,
    Leads,
    Squid,
}

impl Element {
    pub const ALL: [Element; 3] = [Element::Pads, Element::Leads, Element::Squid];

    pub fn as_str(self) -> &'static str {
        match self {
            Element::Pads => "pads",
            Element::Leads => "leads",
            Element::Squid => "SQUID",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Element::Pads => 0,
            Element::Leads => 1,
            Element::Squid => 2,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pads" => Some(Element::Pads),
            "leads" => Some(Element::Leads),
            "SQUID" | "squid" => Some(Element::Squid),
            _ => None,
        }
    }

    /// Field-map elements aggregated into this budget element.
    pub fn map_elements(self) -> &'static [MapElement] {
        match self {
            Element::Pads => &[MapElement::Pads, MapElement::Ground],
            Element::Leads => &[MapElement::Leads],
            Element::Squid => &[MapElement::Squid],
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Thin lossy dielectric layer on one interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceSpec {
    pub kind: InterfaceKind,
    /// Thickness in nm.
    pub thickness_nm: f64,
    pub relative_permittivity: f64,
    /// TLS density in (μm³·GHz)⁻¹.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tls_volume_density: Option<f64>,
}

/// TLS density for every interface, (μm³·GHz)⁻¹.
pub const TLS_DENSITY: f64 = 1800.0;

impl InterfaceSpec {
    /// Layer used for participation ratios: 3 nm, ε = 10.
    pub fn participation_default(kind: InterfaceKind) -> Self {
        InterfaceSpec {
            kind,
            thickness_nm: 3.0,
            relative_permittivity: 10.0,
            tls_volume_density: None,
        }
    }

    /// Effective TLS-hosting layer: 2 / 0.3 / 0.36 nm for MA / MS / SA.
    pub fn tls_default(kind: InterfaceKind) -> Self {
        let thickness_nm = match kind {
            InterfaceKind::Ma => 2.0,
            InterfaceKind::Ms => 0.3,
            InterfaceKind::Sa => 0.36,
        };
        InterfaceSpec {
            kind,
            thickness_nm,
            relative_permittivity: 10.0,
            tls_volume_density: Some(TLS_DENSITY),
        }
    }

    pub fn thickness_um(&self) -> f64 {
        self.thickness_nm * 1e-3
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.thickness_nm.is_finite() && self.thickness_nm > 0.0) {
            return Err(Error::invalid(
                format!("{} interface", self.kind),
                format!("thickness must be > 0 nm, got {}", self.thickness_nm),
            ));
        }
        if !(self.relative_permittivity.is_finite() && self.relative_permittivity >= 1.0) {
            return Err(Error::invalid(
                format!("{} interface", self.kind),
                format!(
                    "relative permittivity must be >= 1, got {}",
                    self.relative_permittivity
                ),
            ));
        }
        if let Some(rho) = self.tls_volume_density {
            if !(rho.is_finite() && rho >= 0.0) {
                return Err(Error::invalid(
                    format!("{} interface", self.kind),
                    format!("TLS density must be >= 0, got {rho}"),
                ));
            }
        }
        Ok(())
    }
}

fn default_film_thickness() -> f64 {
    120.0
}

/// Parametric single-qubit layout. Lengths in μm, film thickness in nm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitDesign {
    pub pad_width: f64,
    pub pad_height: f64,
    pub gap: f64,
    pub lead_width: f64,
    pub lead_length: f64,
    pub lead_spacing: f64,
    pub squid_loop_side: f64,
    pub squid_wire_width: f64,
    #[serde(default = "default_film_thickness")]
    pub film_thickness: f64,
    pub design_label: String,
}

/// Edge clearance between the SQUID loop and the pad's right edge, μm.
pub(crate) const SQUID_MARGIN: f64 = 6.0;
/// Smallest wire width that still resolves the wiring convergence band, μm.
pub(crate) const MIN_WIRE_WIDTH: f64 = 1.0;

impl QubitDesign {
    fn lengths(&self) -> [(&'static str, f64); 9] {
        [
            ("pad width W", self.pad_width),
            ("pad height", self.pad_height),
            ("gap G", self.gap),
            ("lead width w'", self.lead_width),
            ("lead length", self.lead_length),
            ("lead spacing g'", self.lead_spacing),
            ("SQUID loop side", self.squid_loop_side),
            ("SQUID wire width", self.squid_wire_width),
            ("film thickness h", self.film_thickness),
        ]
    }

    pub fn film_thickness_um(&self) -> f64 {
        self.film_thickness * 1e-3
    }

    /// Vertical lead section from the pad edge to the centerline of the run.
    pub fn lead_drop(&self) -> f64 {
        0.5 * (self.gap - self.lead_spacing - self.lead_width)
    }

    /// Horizontal lead section ending at the SQUID.
    pub fn lead_run(&self) -> f64 {
        self.lead_length - self.lead_drop()
    }

    /// Left x coordinate of the SQUID loop.
    pub fn squid_x(&self) -> f64 {
        0.5 * self.pad_width - SQUID_MARGIN - self.squid_loop_side
    }

    /// Checks every invariant; the first violation is reported by name.
    pub fn validate(&self) -> Result<()> {
        let what = || format!("design '{}'", self.design_label);
        for (name, v) in self.lengths() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(
                    what(),
                    format!("{name} must be strictly positive, got {v}"),
                ));
            }
        }
        let fail = |reason: String| Err(Error::invalid(what(), reason));
        if self.lead_width >= self.pad_width {
            return fail(format!(
                "lead width w' = {} must be smaller than pad width W = {}",
                self.lead_width, self.pad_width
            ));
        }
        if self.lead_width <= MIN_WIRE_WIDTH || self.squid_wire_width <= MIN_WIRE_WIDTH {
            return fail(format!(
                "lead width and SQUID wire width must exceed {MIN_WIRE_WIDTH} um"
            ));
        }
        if self.film_thickness_um() >= 0.5 * self.squid_wire_width.min(self.lead_width) {
            return fail("film thickness h must be below half the narrowest wire width".into());
        }
        if self.squid_loop_side + 2.0 >= self.gap {
            return fail(format!(
                "SQUID loop side {} does not fit within gap G = {}",
                self.squid_loop_side, self.gap
            ));
        }
        if self.lead_spacing + 2.0 * self.lead_width
            > self.squid_loop_side - 2.0 * self.squid_wire_width
        {
            return fail(
                "leads (g' + 2w') do not fit inside the SQUID loop opening (a - 2 w_s)".into(),
            );
        }
        if self.lead_spacing + 2.0 * self.lead_width >= self.gap {
            return fail("leads (g' + 2w') do not fit within gap G".into());
        }
        if self.lead_run() < self.lead_width {
            return fail(format!(
                "lead length {} too short: at least {} um needed to reach the SQUID",
                self.lead_length,
                self.lead_drop() + self.lead_width
            ));
        }
        if self.pad_width < self.squid_loop_side + SQUID_MARGIN + 8.0 {
            return fail("pad width W too small to host the SQUID".into());
        }
        let lead_x = self.squid_x() - self.lead_run();
        if lead_x - 0.5 * self.lead_width < -0.5 * self.pad_width + 1.0 {
            return fail(format!(
                "lead length {} too long: lead leaves the pad footprint",
                self.lead_length
            ));
        }
        if self.pad_height <= 4.0 || self.pad_width <= 4.0 {
            return fail("pads must be larger than the 4 um perimeter bands".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: QubitDesign =
            serde_json::from_str(text).map_err(|e| Error::parse("design file", e))?;
        d.validate()?;
        Ok(d)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("design serializes");
        s.push('\n');
        s
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self)
    }

    /// Copy with every in-plane length multiplied by `k`.
    pub fn scaled(&self, k: f64) -> QubitDesign {
        QubitDesign {
            pad_width: self.pad_width * k,
            pad_height: self.pad_height * k,
            gap: self.gap * k,
            lead_width: self.lead_width * k,
            lead_length: self.lead_length * k,
            lead_spacing: self.lead_spacing * k,
            squid_loop_side: self.squid_loop_side * k,
            squid_wire_width: self.squid_wire_width * k,
            film_thickness: self.film_thickness,
            design_label: self.design_label.clone(),
        }
    }
}

/// Reads and validates a design file.
pub fn load_design(path: &Path) -> Result<QubitDesign> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    QubitDesign::from_json(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            context: path.display().to_string(),
            message,
        },
        other => other,
    })
}

pub fn save_design(design: &QubitDesign, path: &Path) -> Result<()> {
    std::fs::write(path, design.to_json()).map_err(|e| Error::io(path, e))
}

const LONG_DESIGN: &str = include_str!("../../data/designs/long.design");
const REGULAR_DESIGN: &str = include_str!("../../data/designs/regular.design");
const WIDE_DESIGN: &str = include_str!("../../data/designs/wide.design");

/// Bundled text of a built-in design file.
pub fn builtin_design_source(label: &str) -> Option<&'static str> {
    match label {
        "long" => Some(LONG_DESIGN),
        "regular" => Some(REGULAR_DESIGN),
        "wide" => Some(WIDE_DESIGN),
        _ => None,
    }
}

/// The three bundled designs in long, regular, wide order.
///
/// Lead lengths and SQUID dimensions are illustrative: they respect the
/// ordering of the three designs, not measured geometry.
pub fn builtin_designs() -> Vec<QubitDesign> {
    ["long", "regular", "wide"]
        .iter()
        .map(|l| builtin_design(l).expect("bundled design is valid"))
        .collect()
}

pub fn builtin_design(label: &str) -> Option<QubitDesign> {
    builtin_design_source(label).map(|s| QubitDesign::from_json(s).expect("bundled design is valid"))
}
