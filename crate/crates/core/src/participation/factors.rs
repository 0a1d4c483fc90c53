//! Scaling factors from pad-edge and wiring cross-section solutions.

use crate::error::{Error, Result};
use crate::fields::{solve_cross_section, CrossSection, CrossSectionKind, FieldSolution, Resolution};
use crate::geometry::{InterfaceKind, MapElement, QubitDesign};

/// Values in [`InterfaceKind::ALL`] order (MA, MS, SA).
pub type PerInterface = [f64; 3];

/// Perimeter band depth at pad and ground edges, μm.
pub const EDGE_X0: f64 = 1.0;
/// Half-width of the wiring convergence band, μm.
pub const WIRING_X0: f64 = 0.5;
/// Width of the substrate band beside a wire, μm.
pub const WIRING_SA_BAND: f64 = 2.0 * EDGE_X0;
/// Minimum grid cells across a convergence band.
pub const MIN_BAND_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFactors {
    /// Pad and ground edges.
    pub edge: PerInterface,
    pub leads: PerInterface,
    pub squid: PerInterface,
    pub x0: f64,
    pub x0_wiring: f64,
}

impl ScalingFactors {
    /// All factors 1.
    pub fn unity() -> Self {
        ScalingFactors { edge: [1.0; 3], leads: [1.0; 3], squid: [1.0; 3], x0: EDGE_X0, x0_wiring: WIRING_X0 }
    }

    /// Solves the three cross-sections of a design.
    pub fn compute(design: &QubitDesign, res: Resolution) -> Result<Self> {
        let edge = solve_cross_section(&CrossSection::pad_edge_of(design)?, res)?;
        let leads = solve_cross_section(&CrossSection::leads_of(design)?, res)?;
        let squid = solve_cross_section(&CrossSection::squid_of(design)?, res)?;
        Ok(ScalingFactors {
            edge: edge_scaling_factors(&edge, EDGE_X0)?,
            leads: wiring_scaling_factors(&leads, WIRING_X0)?,
            squid: wiring_scaling_factors(&squid, WIRING_X0)?,
            x0: EDGE_X0,
            x0_wiring: WIRING_X0,
        })
    }

    pub fn of(&self, element: MapElement) -> &PerInterface {
        match element {
            MapElement::Pads | MapElement::Ground => &self.edge,
            MapElement::Leads => &self.leads,
            MapElement::Squid => &self.squid,
        }
    }
}

fn ratio(num: f64, den: f64, what: &str) -> Result<f64> {
    if den > 0.0 && num.is_finite() {
        Ok(num / den)
    } else {
        Err(Error::Degenerate(format!("{what}: zero field in the convergence band")))
    }
}

fn check_band(sol: &FieldSolution, a: f64, b: f64) -> Result<()> {
    let n = sol.cells_in_x(a, b);
    if n < MIN_BAND_CELLS {
        return Err(Error::invalid(
            "scaling factor",
            format!("integration band [{a}, {b}] μm has {n} cells, need at least {MIN_BAND_CELLS}"),
        ));
    }
    Ok(())
}

/// Pad-edge factors for a band of depth `x0` (μm). The pad occupies x > 0.
pub fn edge_scaling_factors(sol: &FieldSolution, x0: f64) -> Result<PerInterface> {
    let CrossSectionKind::PadEdge { pad_width, gap } = sol.cs.kind else {
        return Err(Error::invalid("edge scaling factors", "solution is not a pad-edge cross-section"));
    };
    if !(x0 > 0.0 && x0 < pad_width && x0 < gap) {
        return Err(Error::invalid("edge scaling factors", format!("x0 = {x0} μm outside the pad and gap")));
    }
    check_band(sol, 0.5 * x0, x0)?;
    check_band(sol, -x0, 0.0)?;
    let h = sol.cs.film_thickness;
    let t = sol.cs.layers.map(|l| l.thickness_um());
    let [ma, ms, sa] = [0, 1, 2].map(|k| t[k]);
    let i = |x0: f64, x1: f64, z0: f64, z1: f64| sol.integrate_e2(x0, x1, z0, z1);

    let ms_den = i(0.5 * x0, x0, -ms, 0.0);
    let f_ms = ratio(i(0.0, x0, -ms, 0.0), ms_den, "F_MS")?;
    let ma_num = i(0.0, x0, h, h + ma) + i(-ma, 0.0, 0.0, h + ma);
    let f_ma = ratio(ma_num, i(0.5 * x0, x0, h, h + ma), "F_MA")?;
    let f_sa = ratio(i(-x0, 0.0, -sa, 0.0), ms_den, "F_SA")?;
    Ok(by_kind(f_ma, f_ms, f_sa))
}

fn by_kind(ma: f64, ms: f64, sa: f64) -> PerInterface {
    let mut out = [0.0; 3];
    out[InterfaceKind::Ma.index()] = ma;
    out[InterfaceKind::Ms.index()] = ms;
    out[InterfaceKind::Sa.index()] = sa;
    out
}

/// Wiring factors for a band `[-x0p, x0p]` about the wire centreline.
pub fn wiring_scaling_factors(sol: &FieldSolution, x0p: f64) -> Result<PerInterface> {
    wiring_scaling_factors_with(sol, x0p, WIRING_SA_BAND)
}

/// Wiring factors with an explicit substrate band width. The band between
/// the two wires is limited to half their spacing.
pub fn wiring_scaling_factors_with(sol: &FieldSolution, x0p: f64, sa_band: f64) -> Result<PerInterface> {
    let CrossSectionKind::Wiring { width, spacing } = sol.cs.kind else {
        return Err(Error::invalid("wiring scaling factors", "solution is not a wiring cross-section"));
    };
    if !(x0p > 0.0) || 0.5 * width <= x0p {
        return Err(Error::invalid(
            "wiring scaling factors",
            format!("band half-width x0' = {x0p} μm must be below half the wire width {}", 0.5 * width),
        ));
    }
    if !(sa_band > 0.0) {
        return Err(Error::invalid("wiring scaling factors", "substrate band must be > 0"));
    }
    let c = 0.5 * (spacing + width);
    let (l, r) = (c - 0.5 * width, c + 0.5 * width);
    check_band(sol, c - x0p, c + x0p)?;
    let h = sol.cs.film_thickness;
    let t = sol.cs.layers.map(|l| l.thickness_um());
    let [ma, ms, sa] = [0, 1, 2].map(|k| t[k]);
    let i = |x0: f64, x1: f64, z0: f64, z1: f64| sol.integrate_e2(x0, x1, z0, z1);

    let ms_den = i(c - x0p, c + x0p, -ms, 0.0);
    let f_ms = ratio(i(l, r, -ms, 0.0), ms_den, "F'_MS")?;
    let ma_num = i(l, r, h, h + ma) + i(l - ma, l, 0.0, h + ma) + i(r, r + ma, 0.0, h + ma);
    let f_ma = ratio(ma_num, i(c - x0p, c + x0p, h, h + ma), "F'_MA")?;
    let inner = sa_band.min(0.5 * spacing);
    let f_sa = ratio(i(l - inner, l, -sa, 0.0) + i(r, r + sa_band, -sa, 0.0), ms_den, "F'_SA")?;
    Ok(by_kind(f_ma, f_ms, f_sa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Resolution;

    /// φ linear in x gives a uniform |E|².
    fn uniform(cs: CrossSection) -> FieldSolution {
        let (x, z) = crate::fields::build_grid(&cs, Resolution::Coarse);
        let phi = x.iter().flat_map(|&xv| z.iter().map(move |_| 1e-3 * xv)).collect();
        FieldSolution::from_potential(cs, x, z, phi)
    }

    #[test]
    fn uniform_edge_field_gives_length_ratios() {
        let sol = uniform(CrossSection::pad_edge(50.0, 50.0, 0.12).unwrap());
        let f = edge_scaling_factors(&sol, 1.0).unwrap();
        assert!((f[InterfaceKind::Ms.index()] - 2.0).abs() < 1e-6);
        assert!((f[InterfaceKind::Sa.index()] - 2.0).abs() < 1e-6);
        let ma = 0.003;
        let want = (1.0 * ma + ma * (0.12 + ma)) / (0.5 * ma);
        assert!((f[InterfaceKind::Ma.index()] - want).abs() < 1e-6 * want);
    }

    #[test]
    fn uniform_wiring_field_gives_width_ratio() {
        let sol = uniform(CrossSection::wiring(2.0, 4.0, 0.12).unwrap());
        let f = wiring_scaling_factors(&sol, 0.5).unwrap();
        assert!((f[InterfaceKind::Ms.index()] - 2.0).abs() < 1e-6);
        // 2 μm outer band plus 2 μm inner band (half of the 4 μm spacing)
        assert!((f[InterfaceKind::Sa.index()] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn narrow_wire_band_is_rejected() {
        let sol = uniform(CrossSection::wiring(1.0, 4.0, 0.12).unwrap());
        assert!(matches!(wiring_scaling_factors(&sol, 0.5), Err(Error::Invalid { .. })));
    }

    #[test]
    fn wrong_cross_section_is_rejected() {
        let sol = uniform(CrossSection::wiring(2.0, 4.0, 0.12).unwrap());
        assert!(edge_scaling_factors(&sol, 1.0).is_err());
    }

    #[test]
    fn unresolved_band_is_rejected() {
        let sol = uniform(CrossSection::pad_edge(50.0, 50.0, 0.12).unwrap());
        let err = edge_scaling_factors(&sol, 0.02).unwrap_err();
        assert!(err.to_string().contains("cells"), "{err}");
    }
}
