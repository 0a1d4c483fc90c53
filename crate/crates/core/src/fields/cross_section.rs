//! Two-dimensional cross-sections through a pad edge or a pair of wires.
//!
//! Coordinates are in μm: x across the conductor edge, z normal to the
//! substrate with the metal film on `0 < z < h`. Interface layers of
//! thickness t cover the substrate (`-t < z < 0`, MS under metal, SA
//! elsewhere) and the top and side faces of each conductor (MA).

use std::fmt;
use std::str::FromStr;

use crate::constants::SILICON_PERMITTIVITY;
use crate::error::{Error, Result};
use crate::geometry::{InterfaceKind, InterfaceSpec, QubitDesign};

/// Material region of a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Air,
    Substrate,
    Layer(InterfaceKind),
    Conductor,
}

impl Region {
    pub const ALL: [Region; 6] = [
        Region::Air,
        Region::Substrate,
        Region::Layer(InterfaceKind::Ma),
        Region::Layer(InterfaceKind::Ms),
        Region::Layer(InterfaceKind::Sa),
        Region::Conductor,
    ];

    pub fn index(self) -> usize {
        match self {
            Region::Air => 0,
            Region::Substrate => 1,
            Region::Layer(k) => 2 + k.index(),
            Region::Conductor => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Air => "air",
            Region::Substrate => "substrate",
            Region::Layer(InterfaceKind::Ma) => "MA",
            Region::Layer(InterfaceKind::Ms) => "MS",
            Region::Layer(InterfaceKind::Sa) => "SA",
            Region::Conductor => "conductor",
        }
    }
}

/// Axis-aligned box in the cross-section plane, μm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2 {
    pub x0: f64,
    pub x1: f64,
    pub z0: f64,
    pub z1: f64,
}

impl Box2 {
    pub fn new(x0: f64, x1: f64, z0: f64, z1: f64) -> Self {
        Box2 { x0, x1, z0, z1 }
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        x >= self.x0 && x <= self.x1 && z >= self.z0 && z <= self.z1
    }
}

/// Perfect conductor held at a fixed potential (V).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsConductor {
    pub shape: Box2,
    pub potential: f64,
}

/// Dielectric paint: later entries override earlier ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Paint {
    pub shape: Box2,
    pub permittivity: f64,
    pub region: Region,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// φ = 0 on the outer boundary.
    Dirichlet,
    /// Zero normal field on the outer boundary.
    Neumann,
}

/// Geometry parameters of the standard cross-sections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossSectionKind {
    /// Pad on `0 < x < w` at potential V, ground on `-g-w < x < -g` at 0.
    PadEdge { pad_width: f64, gap: f64 },
    /// Two strips of width `width` at ±V/2, separated by `spacing`;
    /// the right strip is centred at `(spacing + width) / 2`.
    Wiring { width: f64, spacing: f64 },
    /// Plates spanning the domain width, spaced by `spacing`.
    ParallelPlate { spacing: f64 },
}

/// Grid refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Coarse,
    Medium,
    Fine,
}

impl Resolution {
    /// Cells across each interface layer.
    pub fn layer_cells(self) -> usize {
        match self {
            Resolution::Coarse => 4,
            Resolution::Medium => 6,
            Resolution::Fine => 8,
        }
    }

    /// Linear growth rate of the cell size away from material boundaries.
    pub fn growth(self) -> f64 {
        match self {
            Resolution::Coarse => 0.5,
            Resolution::Medium => 0.3,
            Resolution::Fine => 0.2,
        }
    }

    /// Cells per μm inside the refined edge zones.
    pub fn zone_density(self) -> f64 {
        match self {
            Resolution::Coarse => 20.0,
            Resolution::Medium => 24.0,
            Resolution::Fine => 32.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Resolution::Coarse => "coarse",
            Resolution::Medium => "medium",
            Resolution::Fine => "fine",
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Resolution {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "coarse" => Ok(Resolution::Coarse),
            "medium" => Ok(Resolution::Medium),
            "fine" => Ok(Resolution::Fine),
            _ => Err(format!("unknown resolution '{s}' (coarse|medium|fine)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub kind: CrossSectionKind,
    pub film_thickness: f64,
    /// MA, MS, SA layers.
    pub layers: [InterfaceSpec; 3],
    pub substrate_permittivity: f64,
    pub conductors: Vec<CsConductor>,
    pub paints: Vec<Paint>,
    pub domain: Box2,
    pub boundary: Boundary,
    /// x intervals refined to a uniform fine spacing.
    pub refine: Vec<(f64, f64)>,
    /// Grid is built mirror-symmetric about x = 0.
    pub symmetric: bool,
}

/// Distance from the outermost feature to the domain boundary, in units
/// of the largest feature.
const EXTENT_FACTOR: f64 = 10.0;
/// Half-width of the refined zone around each edge, μm.
const EDGE_ZONE: f64 = 2.5;

fn default_layers() -> [InterfaceSpec; 3] {
    InterfaceKind::ALL.map(InterfaceSpec::participation_default)
}

impl CrossSection {
    /// Pad edge: pad of width `pad_width` at `potential`, ground strip of the
    /// same width across a gap `gap` (μm); film thickness in μm.
    pub fn pad_edge(pad_width: f64, gap: f64, film_thickness: f64) -> Result<Self> {
        for (name, v) in [("pad width", pad_width), ("gap", gap), ("film thickness", film_thickness)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid("pad-edge cross-section", format!("{name} must be > 0")));
            }
        }
        let strips = [(0.0, pad_width, 1.0), (-gap - pad_width, -gap, 0.0)];
        let feature = gap + 2.0 * pad_width;
        let ext = EXTENT_FACTOR * feature;
        let domain = Box2::new(-gap - pad_width - ext, pad_width + ext, -ext, ext);
        Ok(Self::with_strips(
            CrossSectionKind::PadEdge { pad_width, gap },
            &strips,
            film_thickness,
            domain,
            vec![(-EDGE_ZONE, EDGE_ZONE)],
            false,
        ))
    }

    /// Pair of parallel wires at ±V/2 (V = 1).
    pub fn wiring(width: f64, spacing: f64, film_thickness: f64) -> Result<Self> {
        for (name, v) in [("wire width", width), ("spacing", spacing), ("film thickness", film_thickness)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid("wiring cross-section", format!("{name} must be > 0")));
            }
        }
        let (a, b) = (0.5 * spacing, 0.5 * spacing + width);
        let strips = [(a, b, 0.5), (-b, -a, -0.5)];
        let feature = spacing + 2.0 * width;
        let ext = EXTENT_FACTOR * feature;
        let domain = Box2::new(-b - ext, b + ext, -ext, ext);
        let refine = vec![(-b - EDGE_ZONE, b + EDGE_ZONE)];
        Ok(Self::with_strips(
            CrossSectionKind::Wiring { width, spacing },
            &strips,
            film_thickness,
            domain,
            refine,
            true,
        ))
    }

    /// Leads cross-section of a design.
    pub fn leads_of(design: &QubitDesign) -> Result<Self> {
        Self::wiring(design.lead_width, design.lead_spacing, design.film_thickness_um())
    }

    /// SQUID loop cross-section: the two loop sides facing each other.
    pub fn squid_of(design: &QubitDesign) -> Result<Self> {
        Self::wiring(
            design.squid_wire_width,
            design.squid_loop_side - 2.0 * design.squid_wire_width,
            design.film_thickness_um(),
        )
    }

    /// Pad-edge cross-section representative of a design.
    pub fn pad_edge_of(design: &QubitDesign) -> Result<Self> {
        Self::pad_edge(
            PAD_EDGE_WIDTH.min(0.5 * design.pad_width),
            PAD_EDGE_WIDTH.min(0.5 * design.gap),
            design.film_thickness_um(),
        )
    }

    /// Uniform dielectric between two plates spanning the domain width; the
    /// lower plate is at 0 V, the upper at `potential`. Side boundaries are
    /// Neumann so the interior field is exactly uniform.
    pub fn parallel_plate(spacing: f64, width: f64, permittivity: f64, potential: f64) -> Self {
        let t = 0.1 * spacing;
        let domain = Box2::new(0.0, width, -t, spacing + t);
        CrossSection {
            kind: CrossSectionKind::ParallelPlate { spacing },
            film_thickness: t,
            layers: default_layers(),
            substrate_permittivity: permittivity,
            conductors: vec![
                CsConductor { shape: Box2::new(0.0, width, -t, 0.0), potential: 0.0 },
                CsConductor { shape: Box2::new(0.0, width, spacing, spacing + t), potential },
            ],
            paints: vec![Paint {
                shape: domain,
                permittivity,
                region: Region::Substrate,
            }],
            domain,
            boundary: Boundary::Neumann,
            refine: Vec::new(),
            symmetric: false,
        }
    }

    fn with_strips(
        kind: CrossSectionKind,
        strips: &[(f64, f64, f64)],
        h: f64,
        domain: Box2,
        refine: Vec<(f64, f64)>,
        symmetric: bool,
    ) -> Self {
        let mut cs = CrossSection {
            kind,
            film_thickness: h,
            layers: default_layers(),
            substrate_permittivity: SILICON_PERMITTIVITY,
            conductors: strips
                .iter()
                .map(|&(x0, x1, v)| CsConductor { shape: Box2::new(x0, x1, 0.0, h), potential: v })
                .collect(),
            paints: Vec::new(),
            domain,
            boundary: Boundary::Dirichlet,
            refine,
            symmetric,
        };
        cs.repaint();
        cs
    }

    /// Rebuilds the dielectric paint list from the conductors and layers.
    pub fn repaint(&mut self) {
        let d = self.domain;
        let h = self.film_thickness;
        let [ma, ms, sa] = self.layers;
        let t = |s: &InterfaceSpec| s.thickness_um();
        let mut p = vec![Paint {
            shape: Box2::new(d.x0, d.x1, d.z0, 0.0),
            permittivity: self.substrate_permittivity,
            region: Region::Substrate,
        }];
        p.push(Paint {
            shape: Box2::new(d.x0, d.x1, -t(&sa), 0.0),
            permittivity: sa.relative_permittivity,
            region: Region::Layer(InterfaceKind::Sa),
        });
        for c in &self.conductors {
            let s = c.shape;
            p.push(Paint {
                shape: Box2::new(s.x0, s.x1, -t(&ms), 0.0),
                permittivity: ms.relative_permittivity,
                region: Region::Layer(InterfaceKind::Ms),
            });
            let tm = t(&ma);
            for shape in [
                Box2::new(s.x0, s.x1, h, h + tm),
                Box2::new(s.x0 - tm, s.x0, 0.0, h + tm),
                Box2::new(s.x1, s.x1 + tm, 0.0, h + tm),
            ] {
                p.push(Paint {
                    shape,
                    permittivity: ma.relative_permittivity,
                    region: Region::Layer(InterfaceKind::Ma),
                });
            }
        }
        self.paints = p;
    }

    /// Replaces the interface layers and repaints.
    pub fn with_layers(mut self, layers: [InterfaceSpec; 3]) -> Self {
        self.layers = layers;
        self.repaint();
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    /// Max layer thickness, μm.
    pub fn layer_thickness(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness_um()).fold(0.0, f64::max)
    }

    /// Min layer thickness, μm.
    pub fn thinnest_layer(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness_um()).fold(f64::INFINITY, f64::min)
    }

    /// Material of a point; the background above z = 0 is air.
    pub fn material_at(&self, x: f64, z: f64) -> (f64, Region) {
        for c in &self.conductors {
            if c.shape.contains(x, z) {
                return (1.0, Region::Conductor);
            }
        }
        for p in self.paints.iter().rev() {
            if p.shape.contains(x, z) {
                return (p.permittivity, p.region);
            }
        }
        (1.0, Region::Air)
    }

    pub fn validate(&self) -> Result<()> {
        for l in &self.layers {
            l.validate()?;
        }
        if !(self.substrate_permittivity >= 1.0) {
            return Err(Error::invalid("cross-section", "substrate permittivity must be >= 1"));
        }
        let d = self.domain;
        for c in &self.conductors {
            let s = c.shape;
            if !(s.x0 >= d.x0 && s.x1 <= d.x1 && s.z0 >= d.z0 && s.z1 <= d.z1) {
                return Err(Error::invalid("cross-section", "conductor outside the domain"));
            }
        }
        if let CrossSectionKind::PadEdge { .. } | CrossSectionKind::Wiring { .. } = self.kind {
            let lo = self.conductors.iter().map(|c| c.shape.x0).fold(f64::INFINITY, f64::min);
            let hi = self.conductors.iter().map(|c| c.shape.x1).fold(f64::NEG_INFINITY, f64::max);
            let feature = hi - lo;
            let margin = (lo - d.x0).min(d.x1 - hi).min(-d.z0).min(d.z1);
            if margin < EXTENT_FACTOR * feature * (1.0 - 1e-9) {
                return Err(Error::invalid(
                    "cross-section",
                    format!("domain margin {margin} um is below {EXTENT_FACTOR}x the feature size {feature} um"),
                ));
            }
            let t = self.layer_thickness();
            let mut xs: Vec<(f64, f64)> = self.conductors.iter().map(|c| (c.shape.x0, c.shape.x1)).collect();
            xs.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in xs.windows(2) {
                if w[1].0 - w[0].1 <= 2.0 * t {
                    return Err(Error::invalid("cross-section", "interface layers of adjacent conductors overlap"));
                }
            }
            if self.film_thickness <= 0.0 {
                return Err(Error::invalid("cross-section", "film thickness must be > 0"));
            }
        }
        Ok(())
    }

    /// Material boundaries along x, μm.
    pub(crate) fn x_marks(&self) -> Vec<f64> {
        let mut m = Vec::new();
        for c in &self.conductors {
            m.extend([c.shape.x0, c.shape.x1]);
        }
        for p in &self.paints {
            m.extend([p.shape.x0, p.shape.x1]);
        }
        for &(a, b) in &self.refine {
            m.extend([a, b]);
        }
        m
    }

    pub(crate) fn z_marks(&self) -> Vec<f64> {
        let mut m = Vec::new();
        for c in &self.conductors {
            m.extend([c.shape.z0, c.shape.z1]);
        }
        for p in &self.paints {
            m.extend([p.shape.z0, p.shape.z1]);
        }
        m
    }
}

/// Pad width and gap of the representative pad-edge cross-section, μm.
pub const PAD_EDGE_WIDTH: f64 = 50.0;
