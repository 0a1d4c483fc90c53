//! Squared-field densities on the interface surfaces of a layout.
//!
//! Every patch is a full tensor grid of samples integrated with the 2D
//! trapezoid rule. Band patches use x = distance into the metal (pads and
//! ground) or offset across the wire centerline (leads, SQUID), and y = arc
//! length along the contour; inner patches use layout coordinates.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{InterfaceKind, MapElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionKind {
    /// More than x₀ away from every edge.
    Inner,
    /// Convergence band next to an edge, or across a wire.
    Band,
}

impl RegionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionKind::Inner => "inner",
            RegionKind::Band => "band",
        }
    }
}

/// Grid of |E|² samples (V²/m²) in the interface layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPatch {
    pub element: MapElement,
    pub interface: InterfaceKind,
    pub region: RegionKind,
    pub patch: usize,
    /// Sorted sample coordinates, μm.
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Values, index `ix * ys.len() + iy`.
    pub values: Vec<f64>,
}

fn trapezoid_weights(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (v[i + 1] - v[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

impl FieldPatch {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.ys.len() + iy]
    }

    /// ∫∫ |E|² dx dy in V² (densities in V²/m², coordinates in μm).
    pub fn integral(&self) -> f64 {
        let (wx, wy) = (trapezoid_weights(&self.xs), trapezoid_weights(&self.ys));
        let mut s = 0.0;
        for (ix, a) in wx.iter().enumerate() {
            let mut row = 0.0;
            for (iy, b) in wy.iter().enumerate() {
                row += b * self.value(ix, iy);
            }
            s += a * row;
        }
        s * 1e-12
    }

    /// Width-averaged density along y: ∫ |E|² dx / width at each y sample.
    pub fn profile(&self) -> Vec<f64> {
        let wx = trapezoid_weights(&self.xs);
        let width: f64 = wx.iter().sum();
        (0..self.ys.len())
            .map(|iy| {
                let s: f64 = wx.iter().enumerate().map(|(ix, w)| w * self.value(ix, iy)).sum();
                if width > 0.0 {
                    s / width
                } else {
                    self.value(0, iy)
                }
            })
            .collect()
    }

    /// Sample width across the band, μm.
    pub fn width(&self) -> f64 {
        self.xs.last().copied().unwrap_or(0.0) - self.xs.first().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceFieldMap {
    pub patches: Vec<FieldPatch>,
    /// Total field energy, J.
    pub total_energy: f64,
    /// Voltage across the pads, V.
    pub excitation: f64,
}

pub const FIELD_MAP_HEADER: [&str; 6] = [
    "element",
    "interface",
    "region",
    "x_um",
    "y_um",
    "e2_density_V2_per_m2",
];

impl SurfaceFieldMap {
    pub fn validate(&self) -> Result<()> {
        if !(self.total_energy.is_finite() && self.total_energy > 0.0) {
            return Err(Error::invalid("field map", format!("U_tot must be > 0, got {}", self.total_energy)));
        }
        if !self.excitation.is_finite() || self.excitation == 0.0 {
            return Err(Error::invalid("field map", "excitation voltage must be nonzero"));
        }
        for p in &self.patches {
            if p.xs.is_empty() || p.ys.is_empty() || p.values.len() != p.xs.len() * p.ys.len() {
                return Err(Error::invalid("field map", "patch is not a full tensor grid"));
            }
            if let Some(v) = p.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::invalid(
                    "field map",
                    format!(
                        "negative or non-finite density {v} in {} {} {}",
                        p.element.as_str(),
                        p.interface,
                        p.region.as_str()
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn patches_of(
        &self,
        element: MapElement,
        interface: InterfaceKind,
        region: RegionKind,
    ) -> impl Iterator<Item = &FieldPatch> {
        self.patches
            .iter()
            .filter(move |p| p.element == element && p.interface == interface && p.region == region)
    }

    pub fn has(&self, element: MapElement, interface: InterfaceKind, region: RegionKind) -> bool {
        self.patches_of(element, interface, region).next().is_some()
    }

    /// Sum of patch integrals ∫∫|E|² dA, V².
    pub fn integral(&self, element: MapElement, interface: InterfaceKind, region: RegionKind) -> f64 {
        self.patches_of(element, interface, region).map(FieldPatch::integral).sum()
    }

    /// Multiplies every density and U_tot by `k²`, V by `k`.
    pub fn scaled(&self, k: f64) -> SurfaceFieldMap {
        let mut m = self.clone();
        for p in &mut m.patches {
            for v in &mut p.values {
                *v *= k * k;
            }
        }
        m.total_energy *= k * k;
        m.excitation *= k;
        m
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(&FIELD_MAP_HEADER.join(","));
        s.push('\n');
        for p in &self.patches {
            let region = format!("{}#{}", p.region.as_str(), p.patch);
            for (ix, x) in p.xs.iter().enumerate() {
                for (iy, y) in p.ys.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "{},{},{},{:e},{:e},{:e}",
                        p.element.as_str(),
                        p.interface,
                        region,
                        x,
                        y,
                        p.value(ix, iy)
                    );
                }
            }
        }
        let _ = writeln!(s, "U_tot_J,{:e}", self.total_energy);
        let _ = writeln!(s, "V_excitation,{:e}", self.excitation);
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let ctx = "field map";
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut records = rdr.records();
        let header = match records.next() {
            None => return Err(Error::parse(ctx, "empty file")),
            Some(r) => r.map_err(|e| Error::parse(ctx, e))?,
        };
        if header.iter().collect::<Vec<_>>() != FIELD_MAP_HEADER {
            return Err(Error::parse(
                ctx,
                format!("schema mismatch: expected header '{}'", FIELD_MAP_HEADER.join(",")),
            ));
        }
        type Key = (MapElement, InterfaceKind, RegionKind, usize);
        let mut groups: Vec<(Key, Vec<(f64, f64, f64)>)> = Vec::new();
        let mut index: BTreeMap<Key, usize> = BTreeMap::new();
        let mut energy = None;
        let mut excitation = None;
        let num = |s: &str, line: u64| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::parse(ctx, format!("line {line}: '{s}' is not a number")))
        };
        for rec in records {
            let rec = rec.map_err(|e| Error::parse(ctx, e))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            match rec.len() {
                2 => {
                    let v = num(&rec[1], line)?;
                    match &rec[0] {
                        "U_tot_J" => energy = Some(v),
                        "V_excitation" => excitation = Some(v),
                        other => {
                            return Err(Error::parse(ctx, format!("line {line}: unknown metadata '{other}'")))
                        }
                    }
                }
                6 => {
                    let element = MapElement::parse(&rec[0])
                        .ok_or_else(|| Error::parse(ctx, format!("line {line}: unknown element '{}'", &rec[0])))?;
                    let interface = InterfaceKind::parse(&rec[1])
                        .ok_or_else(|| Error::parse(ctx, format!("line {line}: unknown interface '{}'", &rec[1])))?;
                    let (name, patch) = match rec[2].split_once('#') {
                        Some((n, k)) => (
                            n,
                            k.parse::<usize>()
                                .map_err(|_| Error::parse(ctx, format!("line {line}: bad patch '{}'", &rec[2])))?,
                        ),
                        None => (&rec[2], 0),
                    };
                    let region = match name {
                        "inner" => RegionKind::Inner,
                        "band" => RegionKind::Band,
                        other => return Err(Error::parse(ctx, format!("line {line}: unknown region '{other}'"))),
                    };
                    let (x, y, v) = (num(&rec[3], line)?, num(&rec[4], line)?, num(&rec[5], line)?);
                    if !(v >= 0.0) {
                        return Err(Error::invalid(ctx, format!("line {line}: negative density {v}")));
                    }
                    let key = (element, interface, region, patch);
                    let i = *index.entry(key).or_insert_with(|| {
                        groups.push((key, Vec::new()));
                        groups.len() - 1
                    });
                    groups[i].1.push((x, y, v));
                }
                n => return Err(Error::parse(ctx, format!("line {line}: expected 6 columns, found {n}"))),
            }
        }
        let total_energy = energy.ok_or_else(|| Error::parse(ctx, "missing U_tot_J row"))?;
        let excitation = excitation.ok_or_else(|| Error::parse(ctx, "missing V_excitation row"))?;
        let mut patches = Vec::with_capacity(groups.len());
        for ((element, interface, region, patch), rows) in groups {
            let mut xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let mut ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            ys.sort_by(f64::total_cmp);
            ys.dedup();
            if xs.len() * ys.len() != rows.len() {
                return Err(Error::parse(
                    ctx,
                    format!(
                        "{} {} {}#{patch}: {} rows do not form a {}x{} grid",
                        element.as_str(),
                        interface,
                        region.as_str(),
                        rows.len(),
                        xs.len(),
                        ys.len()
                    ),
                ));
            }
            let mut values = vec![f64::NAN; rows.len()];
            for (x, y, v) in rows {
                let ix = xs.binary_search_by(|a| a.total_cmp(&x)).expect("present");
                let iy = ys.binary_search_by(|a| a.total_cmp(&y)).expect("present");
                values[ix * ys.len() + iy] = v;
            }
            if values.iter().any(|v| v.is_nan()) {
                return Err(Error::parse(ctx, "duplicate sample coordinates"));
            }
            patches.push(FieldPatch { element, interface, region, patch, xs, ys, values });
        }
        let map = SurfaceFieldMap { patches, total_energy, excitation };
        map.validate()?;
        Ok(map)
    }
}

pub fn import_field_map(path: &Path) -> Result<SurfaceFieldMap> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SurfaceFieldMap::from_csv(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse { context: path.display().to_string(), message },
        other => other,
    })
}

pub fn export_field_map(map: &SurfaceFieldMap, path: &Path) -> Result<()> {
    std::fs::write(path, map.to_csv()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SurfaceFieldMap {
        SurfaceFieldMap {
            patches: vec![
                FieldPatch {
                    element: MapElement::Pads,
                    interface: InterfaceKind::Ms,
                    region: RegionKind::Band,
                    patch: 1,
                    xs: vec![0.5, 1.0],
                    ys: vec![0.0, 3.0, 10.0],
                    values: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0 / 7.0],
                },
                FieldPatch {
                    element: MapElement::Leads,
                    interface: InterfaceKind::Sa,
                    region: RegionKind::Inner,
                    patch: 0,
                    xs: vec![-1.0, 1.0],
                    ys: vec![2.0, 4.0],
                    values: vec![0.1, 0.2, 0.3, 0.1 + 0.2],
                },
            ],
            total_energy: 1.234_567_890_123e-24,
            excitation: 1.0 / 3.0,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let m = sample();
        let back = SurfaceFieldMap::from_csv(&m.to_csv()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn empty_and_bad_files() {
        assert!(matches!(SurfaceFieldMap::from_csv(""), Err(Error::Parse { .. })));
        assert!(matches!(SurfaceFieldMap::from_csv("a,b\n"), Err(Error::Parse { .. })));
        let no_energy: String = sample().to_csv().lines().filter(|l| !l.starts_with("U_tot")).map(|l| format!("{l}\n")).collect();
        assert!(SurfaceFieldMap::from_csv(&no_energy).unwrap_err().to_string().contains("U_tot"));
        let negative = sample().to_csv().replacen(",1e0\n", ",-1e0\n", 1);
        assert!(SurfaceFieldMap::from_csv(&negative).is_err());
    }

    #[test]
    fn uniform_patch_integral() {
        let p = FieldPatch {
            element: MapElement::Pads,
            interface: InterfaceKind::Ma,
            region: RegionKind::Inner,
            patch: 0,
            xs: vec![0.0, 1.0, 4.0],
            ys: vec![-2.0, 2.0],
            values: vec![5.0; 6],
        };
        assert!((p.integral() - 5.0 * 16.0 * 1e-12).abs() < 1e-24);
        assert_eq!(p.profile(), vec![5.0, 5.0]);
    }
}
