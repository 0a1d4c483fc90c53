//! Strong-field regions where individual defects are placed.
//!
//! A defect at arc length `s` along an element contour and offset `u`
//! across it sees |E|² = B(s)·shape(u), where B is the convergence-band
//! mean of the field map and `shape` is the 2D cross-section profile of
//! its face divided by the band mean. Shapes are rescaled so that their
//! integrals reproduce the supplied scaling factors.

use crate::error::{Error, Result};
use crate::fields::{
    solve_cross_section, CrossSection, CrossSectionKind, FieldSolution, RegionKind, Resolution,
    SurfaceFieldMap,
};
use crate::geometry::{InterfaceKind, Layout, MapElement, QubitDesign};
use crate::participation::{ScalingFactors, WIRING_SA_BAND};

/// Piecewise-constant profile across one face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceShape {
    /// Offset of the face along the contour normal, μm. Side faces have a
    /// single offset and extend vertically.
    pub offset: [f64; 2],
    /// Bin edges in the face coordinate, μm.
    pub edges: Vec<f64>,
    /// |E|² relative to the convergence-band mean, one value per bin.
    pub values: Vec<f64>,
}

impl FaceShape {
    pub fn extent(&self) -> f64 {
        self.edges[self.edges.len() - 1] - self.edges[0]
    }

    /// ∫ shape du, μm.
    pub fn integral(&self) -> f64 {
        self.values.iter().zip(self.edges.windows(2)).map(|(v, e)| v * (e[1] - e[0])).sum()
    }

    /// Value at face coordinate `t` ∈ [0, extent).
    pub fn at(&self, t: f64) -> f64 {
        let x = self.edges[0] + t;
        let i = self.edges.partition_point(|&e| e <= x).clamp(1, self.values.len());
        self.values[i - 1]
    }

    /// Position along the contour normal of face coordinate `t`.
    pub fn normal_offset(&self, t: f64) -> f64 {
        if self.offset[0] == self.offset[1] {
            self.offset[0]
        } else {
            self.offset[0] + t
        }
    }
}

/// Faces of one interface of one cross-section.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceFaces {
    pub faces: Vec<FaceShape>,
    /// Width of the convergence band the map samples, μm.
    pub band_width: f64,
}

impl InterfaceFaces {
    /// Scaling factor implied by the shapes.
    pub fn factor(&self) -> f64 {
        self.faces.iter().map(FaceShape::integral).sum::<f64>() / self.band_width
    }

    fn rescale(&mut self, target: f64) -> Result<()> {
        let f = self.factor();
        if !(f > 0.0) {
            return Err(Error::Degenerate("cross-section face profile is zero".into()));
        }
        let k = target / f;
        for face in &mut self.faces {
            face.values.iter_mut().for_each(|v| *v *= k);
        }
        Ok(())
    }
}

fn grid_edges(nodes: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut e = vec![a];
    e.extend(nodes.iter().copied().filter(|&v| v > a + 1e-9 && v < b - 1e-9));
    e.push(b);
    e
}

fn horizontal(sol: &FieldSolution, a: f64, b: f64, z: [f64; 2], offset: f64, den: f64) -> FaceShape {
    let xs: Vec<f64> = sol.x_m().iter().map(|v| v * 1e6).collect();
    let edges = grid_edges(&xs, a, b);
    let dz = z[1] - z[0];
    let values =
        edges.windows(2).map(|e| sol.integrate_e2(e[0], e[1], z[0], z[1]) / ((e[1] - e[0]) * dz * den)).collect();
    FaceShape { offset: [a - offset, b - offset], edges, values }
}

fn vertical(sol: &FieldSolution, x: [f64; 2], top: f64, offset: f64, den: f64) -> FaceShape {
    let zs: Vec<f64> = sol.z_m().iter().map(|v| v * 1e6).collect();
    let edges = grid_edges(&zs, 0.0, top);
    let dx = x[1] - x[0];
    let values =
        edges.windows(2).map(|e| sol.integrate_e2(x[0], x[1], e[0], e[1]) / ((e[1] - e[0]) * dx * den)).collect();
    FaceShape { offset: [offset, offset], edges, values }
}

fn band_mean(sol: &FieldSolution, a: f64, b: f64, z: [f64; 2]) -> Result<f64> {
    let m = sol.integrate_e2(a, b, z[0], z[1]) / ((b - a) * (z[1] - z[0]));
    if m > 0.0 {
        Ok(m)
    } else {
        Err(Error::Degenerate("zero field in the convergence band".into()))
    }
}

/// Faces of a pad-edge cross-section; the face coordinate runs into the
/// metal from the edge.
pub fn edge_faces(sol: &FieldSolution, x0: f64) -> Result<[InterfaceFaces; 3]> {
    let CrossSectionKind::PadEdge { .. } = sol.cs.kind else {
        return Err(Error::invalid("edge faces", "solution is not a pad-edge cross-section"));
    };
    let h = sol.cs.film_thickness;
    let [ma, ms, sa] = sol.cs.layers.map(|l| l.thickness_um());
    let ms_den = band_mean(sol, 0.5 * x0, x0, [-ms, 0.0])?;
    let ma_den = band_mean(sol, 0.5 * x0, x0, [h, h + ma])?;
    let band = 0.5 * x0;
    Ok([
        InterfaceFaces {
            faces: vec![horizontal(sol, 0.0, x0, [h, h + ma], 0.0, ma_den), vertical(sol, [-ma, 0.0], h + ma, 0.0, ma_den)],
            band_width: band,
        },
        InterfaceFaces { faces: vec![horizontal(sol, 0.0, x0, [-ms, 0.0], 0.0, ms_den)], band_width: band },
        InterfaceFaces { faces: vec![horizontal(sol, -x0, 0.0, [-sa, 0.0], 0.0, ms_den)], band_width: band },
    ])
}

/// Faces of a wiring cross-section; the face coordinate is centred on the
/// wire, negative towards the partner wire.
pub fn wiring_faces(sol: &FieldSolution, x0p: f64) -> Result<[InterfaceFaces; 3]> {
    let CrossSectionKind::Wiring { width, spacing } = sol.cs.kind else {
        return Err(Error::invalid("wiring faces", "solution is not a wiring cross-section"));
    };
    let h = sol.cs.film_thickness;
    let [ma, ms, sa] = sol.cs.layers.map(|l| l.thickness_um());
    let c = 0.5 * (spacing + width);
    let (l, r) = (c - 0.5 * width, c + 0.5 * width);
    let ms_den = band_mean(sol, c - x0p, c + x0p, [-ms, 0.0])?;
    let ma_den = band_mean(sol, c - x0p, c + x0p, [h, h + ma])?;
    let inner = WIRING_SA_BAND.min(0.5 * spacing);
    let band = 2.0 * x0p;
    Ok([
        InterfaceFaces {
            faces: vec![
                horizontal(sol, l, r, [h, h + ma], c, ma_den),
                vertical(sol, [l - ma, l], h + ma, l - c, ma_den),
                vertical(sol, [r, r + ma], h + ma, r - c, ma_den),
            ],
            band_width: band,
        },
        InterfaceFaces { faces: vec![horizontal(sol, l, r, [-ms, 0.0], c, ms_den)], band_width: band },
        InterfaceFaces {
            faces: vec![
                horizontal(sol, l - inner, l, [-sa, 0.0], c, ms_den),
                horizontal(sol, r, r + WIRING_SA_BAND, [-sa, 0.0], c, ms_den),
            ],
            band_width: band,
        },
    ])
}

/// Band mean |E|² along one contour, V²/m².
#[derive(Debug, Clone, PartialEq)]
pub struct BandProfile {
    pub s: Vec<f64>,
    pub values: Vec<f64>,
}

impl BandProfile {
    pub fn length(&self) -> f64 {
        self.s[self.s.len() - 1] - self.s[0]
    }

    /// Linear interpolation at arc length `s`.
    pub fn at(&self, s: f64) -> f64 {
        let n = self.s.len();
        let i = self.s.partition_point(|&v| v <= s).clamp(1, n - 1);
        let (a, b) = (self.s[i - 1], self.s[i]);
        let t = ((s - a) / (b - a)).clamp(0.0, 1.0);
        self.values[i - 1] * (1.0 - t) + self.values[i] * t
    }
}

/// One contour of one element with its band profiles per interface.
#[derive(Debug, Clone)]
pub struct RegionPatch {
    pub element: MapElement,
    pub patch: usize,
    pub profiles: [BandProfile; 3],
}

/// Everything needed to place defects on a design.
#[derive(Debug, Clone)]
pub struct TlsRegions {
    pub layout: Layout,
    pub patches: Vec<RegionPatch>,
    pub edge: [InterfaceFaces; 3],
    pub leads: [InterfaceFaces; 3],
    pub squid: [InterfaceFaces; 3],
}

/// Elements whose defects are simulated individually.
pub const STRONG_FIELD_ELEMENTS: [MapElement; 4] =
    [MapElement::Pads, MapElement::Ground, MapElement::Leads, MapElement::Squid];

impl TlsRegions {
    /// Builds the regions of `elements`. Face shapes come from `res`
    /// cross-sections and are rescaled to `factors`.
    pub fn build(
        design: &QubitDesign,
        map: &SurfaceFieldMap,
        factors: &ScalingFactors,
        elements: &[MapElement],
        res: Resolution,
    ) -> Result<Self> {
        let layout = Layout::new(design);
        let mut patches = Vec::new();
        for &element in elements {
            for (patch, _) in layout.patches(element) {
                let mut profiles = Vec::with_capacity(3);
                for kind in InterfaceKind::ALL {
                    let p = map
                        .patches_of(element, kind, RegionKind::Band)
                        .find(|p| p.patch == patch)
                        .ok_or_else(|| {
                            Error::Missing(format!("{kind} band of {} patch {patch} in the field map", element.as_str()))
                        })?;
                    if p.ys.len() < 2 {
                        return Err(Error::Missing(format!("{} patch {patch} has no band samples", element.as_str())));
                    }
                    profiles.push(BandProfile { s: p.ys.clone(), values: p.profile() });
                }
                let profiles: [BandProfile; 3] = profiles.try_into().expect("three interfaces");
                patches.push(RegionPatch { element, patch, profiles });
            }
        }
        let mut edge = edge_faces(&solve_cross_section(&CrossSection::pad_edge_of(design)?, res)?, factors.x0)?;
        let mut leads = wiring_faces(&solve_cross_section(&CrossSection::leads_of(design)?, res)?, factors.x0_wiring)?;
        let mut squid = wiring_faces(&solve_cross_section(&CrossSection::squid_of(design)?, res)?, factors.x0_wiring)?;
        for k in InterfaceKind::ALL {
            let i = k.index();
            edge[i].rescale(factors.edge[i])?;
            leads[i].rescale(factors.leads[i])?;
            squid[i].rescale(factors.squid[i])?;
        }
        Ok(TlsRegions { layout, patches, edge, leads, squid })
    }

    pub fn faces(&self, element: MapElement, kind: InterfaceKind) -> &InterfaceFaces {
        let set = match element {
            MapElement::Pads | MapElement::Ground => &self.edge,
            MapElement::Leads => &self.leads,
            MapElement::Squid => &self.squid,
        };
        &set[kind.index()]
    }

    /// Face area of one element and interface, μm².
    pub fn area(&self, element: MapElement, kind: InterfaceKind) -> f64 {
        let width: f64 = self.faces(element, kind).faces.iter().map(FaceShape::extent).sum();
        self.patches
            .iter()
            .filter(|p| p.element == element)
            .map(|p| p.profiles[kind.index()].length() * width)
            .sum()
    }
}
