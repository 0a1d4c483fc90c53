//! Coarse planar solver: zero-thickness conductors on the substrate plane,
//! collocation with constant-charge rectangular panels.
//!
//! The substrate half-space enters through the effective permittivity
//! (ε_sub + 1)/2. The layout is antisymmetric about y = 0, so only the
//! upper half is discretized and the kernel subtracts the mirror image.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::fieldmap::{FieldPatch, RegionKind, SurfaceFieldMap};
use crate::constants::{ELEMENTARY_CHARGE, HBAR, PLANCK, SILICON_PERMITTIVITY, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};
use crate::geometry::{InterfaceKind, InterfaceSpec, Layout, MapElement, QubitDesign, Rect};

/// x₀ of the pad perimeter band, μm.
pub const EDGE_BAND: f64 = 1.0;
/// x₀′ of the wiring convergence band, μm.
pub const WIRING_BAND: f64 = 0.5;

/// Panel sizes of the coarse discretization, μm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseOptions {
    pub substrate_permittivity: f64,
    /// Panel size at pad and inner ground edges.
    pub edge_panel: f64,
    pub pad_panel_max: f64,
    pub ground_panel_max: f64,
    pub wire_panel_max: f64,
    /// Spacing of the exposed-substrate sample grid.
    pub substrate_step: f64,
    /// Arc-length step of band samples.
    pub band_step: f64,
}

impl CoarseOptions {
    /// Interior panel caps grown with the pad size so that large designs
    /// stay affordable; edge panels are unchanged.
    pub fn for_design(design: &QubitDesign) -> Self {
        let d = CoarseOptions::default();
        let k = (design.pad_width.max(design.pad_height) / 204.0).max(1.0);
        CoarseOptions { pad_panel_max: d.pad_panel_max * k, ground_panel_max: d.ground_panel_max * k, ..d }
    }

    /// Sparser sampling for field maps written to disk.
    pub fn export() -> Self {
        CoarseOptions { substrate_step: 8.0, band_step: 2.0, ..CoarseOptions::default() }
    }
}

impl Default for CoarseOptions {
    fn default() -> Self {
        CoarseOptions {
            substrate_permittivity: SILICON_PERMITTIVITY,
            edge_panel: 0.5 * EDGE_BAND,
            pad_panel_max: 20.0,
            ground_panel_max: 32.0,
            wire_panel_max: 4.0,
            substrate_step: 4.0,
            band_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Panel {
    pub rect: Rect,
    pub cx: f64,
    pub cy: f64,
    pub element: MapElement,
    pub potential: f64,
}

/// Charge solution of the coarse stage for one excitation.
#[derive(Debug, Clone)]
pub struct CoarseSolution {
    pub(crate) panels: Vec<Panel>,
    /// Surface charge density per upper-half panel, C/m².
    pub(crate) sigma: Vec<f64>,
    pub excitation: f64,
    pub substrate_permittivity: f64,
    pub layout: Layout,
    /// Total field energy, J.
    pub energy: f64,
}

/// Piece lengths for [0, len] growing geometrically from `h_lo` at the
/// start and `h_hi` at the end, limited by `h_max`.
fn graded_pieces(len: f64, h_lo: f64, h_hi: f64, h_max: f64) -> Vec<f64> {
    let ramp = |h0: f64, h_max: f64| -> Vec<f64> {
        let mut v = vec![h0, h0];
        let mut h = h0;
        while 2.0 * h < h_max {
            h *= 2.0;
            v.push(h);
        }
        v
    };
    let h_min = h_lo.min(h_hi);
    let mut h_max = h_max;
    loop {
        let (lo, hi) = (ramp(h_lo.min(h_max), h_max), ramp(h_hi.min(h_max), h_max));
        let (slo, shi): (f64, f64) = (lo.iter().sum(), hi.iter().sum());
        if slo + shi < len {
            let mid = len - slo - shi;
            let n = (mid / h_max).ceil().max(1.0) as usize;
            let mut out = lo;
            out.extend(std::iter::repeat_n(mid / n as f64, n));
            out.extend(hi.into_iter().rev());
            return out;
        }
        if h_max <= h_min {
            let n = (len / h_min).ceil().max(1.0) as usize;
            return vec![len / n as f64; n];
        }
        // ramps too long for the span: lower the cap
        h_max *= 0.5;
    }
}

/// Cuts across a wire: a centre panel of width 2x₀′ and graded flanks.
fn wire_pieces(width: f64) -> Vec<f64> {
    let flank = 0.5 * (width - 2.0 * WIRING_BAND);
    if flank <= 0.0 {
        return vec![width];
    }
    let side = geometric_ramp(flank, 0.125, 1.5);
    let mut out = side.clone();
    out.push(2.0 * WIRING_BAND);
    out.extend(side.into_iter().rev());
    out
}

/// Pieces growing from `h0` away from the edge, with the ratio tuned so they fill
/// `len` exactly; the ratio varies continuously with `len` and stays in
/// `[1, max_ratio]`.
fn geometric_ramp(len: f64, h0: f64, max_ratio: f64) -> Vec<f64> {
    if len <= h0 {
        return vec![len];
    }
    let series = |r: f64, n: usize| {
        if (r - 1.0).abs() < 1e-12 {
            h0 * n as f64
        } else {
            h0 * (r.powi(n as i32) - 1.0) / (r - 1.0)
        }
    };
    let mut n = 1;
    while series(max_ratio, n) < len {
        n += 1;
    }
    let (mut lo, mut hi) = (1.0f64, max_ratio);
    if series(lo, n) >= len {
        let h = len / n as f64;
        return vec![h; n];
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if series(mid, n) < len {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let mut pieces: Vec<f64> = (0..n).map(|k| h0 * r.powi(k as i32)).collect();
    let scale = len / pieces.iter().sum::<f64>();
    pieces.iter_mut().for_each(|p| *p *= scale);
    pieces
}

fn cumulative(start: f64, pieces: &[f64]) -> Vec<f64> {
    let mut v = vec![start];
    let mut s = start;
    for p in pieces {
        s += p;
        v.push(s);
    }
    *v.last_mut().expect("non-empty") = start + pieces.iter().sum::<f64>();
    v
}

fn tile(out: &mut Vec<Panel>, r: Rect, xs: &[f64], ys: &[f64], element: MapElement, potential: f64) {
    let xs = cumulative(r.x0, xs);
    let ys = cumulative(r.y0, ys);
    for wx in xs.windows(2) {
        for wy in ys.windows(2) {
            let rect = Rect::new(wx[0], wx[1], wy[0], wy[1]);
            out.push(Panel {
                rect,
                cx: 0.5 * (wx[0] + wx[1]),
                cy: 0.5 * (wy[0] + wy[1]),
                element,
                potential,
            });
        }
    }
}

fn build_panels(layout: &Layout, opt: &CoarseOptions) -> Vec<Panel> {
    let mut panels = Vec::new();
    let e = opt.edge_panel;
    let coarse_edge = 16.0 * e;
    for c in layout.conductors.iter().filter(|c| c.rect.y0 >= 0.0) {
        let r = c.rect;
        match c.element {
            MapElement::Pads => {
                let xs = graded_pieces(r.width(), e, e, opt.pad_panel_max);
                let ys = graded_pieces(r.height(), e, e, opt.pad_panel_max);
                tile(&mut panels, r, &xs, &ys, c.element, c.potential);
            }
            MapElement::Ground => {
                let (o, k) = (layout.outer, layout.cutout);
                let m = opt.ground_panel_max;
                if r.y0 >= k.y1 - 1e-9 {
                    // top strip: split at the cutout corners
                    let ys = graded_pieces(r.height(), e, coarse_edge, m);
                    for (xa, xb, ha, hb) in [
                        (o.x0, k.x0, coarse_edge, e),
                        (k.x0, k.x1, e, e),
                        (k.x1, o.x1, e, coarse_edge),
                    ] {
                        let sub = Rect::new(xa, xb, r.y0, r.y1);
                        let xs = graded_pieces(xb - xa, ha, hb, m);
                        tile(&mut panels, sub, &xs, &ys, c.element, c.potential);
                    }
                } else {
                    let inner_left = (r.x0 - k.x1).abs() < 1e-9;
                    let xs = if inner_left {
                        graded_pieces(r.width(), e, coarse_edge, m)
                    } else {
                        graded_pieces(r.width(), coarse_edge, e, m)
                    };
                    let ys = graded_pieces(r.height(), coarse_edge, e, m);
                    tile(&mut panels, r, &xs, &ys, c.element, c.potential);
                }
            }
            MapElement::Leads | MapElement::Squid => {
                let horizontal = r.width() >= r.height();
                let along = |len: f64| graded_pieces(len, e, e, opt.wire_panel_max);
                if horizontal {
                    tile(&mut panels, r, &along(r.width()), &wire_pieces(r.height()), c.element, c.potential);
                } else {
                    tile(&mut panels, r, &wire_pieces(r.width()), &along(r.height()), c.element, c.potential);
                }
            }
        }
    }
    panels
}

/// a·asinh(b/a) + b·asinh(a/b) for a, b ≥ 0; ∂²/∂a∂b = 1/√(a²+b²).
#[inline]
fn corner_potential(a: f64, b: f64) -> f64 {
    let mut v = 0.0;
    if a > 0.0 {
        v += a * (b / a).asinh();
    }
    if b > 0.0 {
        v += b * (a / b).asinh();
    }
    v
}

/// ∫∫_rect dA / |p − r|, μm.
pub(crate) fn rect_potential(r: &Rect, px: f64, py: f64) -> f64 {
    let (x1, x2, y1, y2) = (r.x0 - px, r.x1 - px, r.y0 - py, r.y1 - py);
    // the antiderivative is odd in each argument
    let f = |a: f64, b: f64| a.signum() * b.signum() * corner_potential(a.abs(), b.abs());
    f(x2, y2) - f(x1, y2) - f(x2, y1) + f(x1, y1)
}

/// asinh(b2/|a|) − asinh(b1/|a|) without overflow at small |a|.
#[inline]
fn asinh_diff(a: f64, b1: f64, b2: f64) -> f64 {
    let a = a.abs().max(1e-300);
    if b1 >= 0.0 && b2 >= 0.0 {
        ((b2 + b2.hypot(a)) / (b1 + b1.hypot(a))).ln()
    } else if b1 <= 0.0 && b2 <= 0.0 {
        -((-b2 + b2.hypot(a)) / (-b1 + b1.hypot(a))).ln()
    } else {
        (b2 / a).asinh() - (b1 / a).asinh()
    }
}

/// Gradient of [`rect_potential`] with respect to the field point, μm⁻¹·μm².
pub(crate) fn rect_potential_gradient(r: &Rect, px: f64, py: f64) -> [f64; 2] {
    let (x1, x2, y1, y2) = (r.x0 - px, r.x1 - px, r.y0 - py, r.y1 - py);
    let gx = -(asinh_diff(x2, y1, y2) - asinh_diff(x1, y1, y2));
    let gy = -(asinh_diff(y2, x1, x2) - asinh_diff(y1, x1, x2));
    [gx, gy]
}

/// Distance beyond which panels are treated as point charges, in panel
/// diagonals.
const FAR_FIELD: f64 = 6.0;

#[inline]
fn influence(p: &Panel, px: f64, py: f64) -> f64 {
    let (dx, dy) = (px - p.cx, py - p.cy);
    let d2 = dx * dx + dy * dy;
    let diag2 = p.rect.width().powi(2) + p.rect.height().powi(2);
    if d2 > FAR_FIELD * FAR_FIELD * diag2 {
        p.rect.area() / d2.sqrt()
    } else {
        rect_potential(&p.rect, px, py)
    }
}

#[inline]
fn influence_gradient(p: &Panel, px: f64, py: f64) -> [f64; 2] {
    let (dx, dy) = (px - p.cx, py - p.cy);
    let d2 = dx * dx + dy * dy;
    let diag2 = p.rect.width().powi(2) + p.rect.height().powi(2);
    if d2 > FAR_FIELD * FAR_FIELD * diag2 {
        let k = -p.rect.area() / (d2 * d2.sqrt());
        [k * dx, k * dy]
    } else {
        rect_potential_gradient(&p.rect, px, py)
    }
}

impl CoarseSolution {
    pub fn solve(design: &QubitDesign, excitation: f64, opt: &CoarseOptions) -> Result<Self> {
        design.validate()?;
        if excitation == 0.0 || !excitation.is_finite() {
            return Err(Error::Degenerate(format!(
                "excitation voltage {excitation} V: the field energy would vanish"
            )));
        }
        let layout = design.layout();
        let panels = build_panels(&layout, opt);
        let n = panels.len();
        let mut k = DMatrix::<f64>::zeros(n, n);
        for (i, pi) in panels.iter().enumerate() {
            for (j, pj) in panels.iter().enumerate() {
                let direct = influence(pj, pi.cx, pi.cy);
                let image = influence(pj, pi.cx, -pi.cy);
                k[(i, j)] = direct - image;
            }
        }
        let rhs = DVector::from_iterator(n, panels.iter().map(|p| p.potential * excitation));
        let lu = k.lu();
        let x = lu.solve(&rhs).ok_or_else(|| Error::Singular {
            what: "coarse collocation matrix".into(),
            condition: f64::INFINITY,
        })?;
        let eps_eff = 0.5 * (opt.substrate_permittivity + 1.0);
        // K in μm; σ = x · 4π ε₀ ε_eff / 1 μm
        let scale = 4.0 * PI * VACUUM_PERMITTIVITY * eps_eff * 1e6;
        let sigma: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let mut energy = 0.0;
        for (p, s) in panels.iter().zip(&sigma) {
            // both halves: q → −q and V → −V
            energy += s * p.rect.area() * 1e-12 * p.potential * excitation;
        }
        Ok(CoarseSolution {
            panels,
            sigma,
            excitation,
            substrate_permittivity: opt.substrate_permittivity,
            layout,
            energy,
        })
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// Capacitance between the two pads, F.
    pub fn capacitance(&self) -> f64 {
        2.0 * self.energy / (self.excitation * self.excitation)
    }

    /// Surface charge density (C/m²) at a point on a conductor.
    pub fn sigma_at(&self, x: f64, y: f64) -> Option<f64> {
        let (yy, sign) = if y >= 0.0 { (y, 1.0) } else { (-y, -1.0) };
        self.panels
            .iter()
            .position(|p| p.rect.contains(x, yy))
            .map(|i| sign * self.sigma[i])
    }

    /// Normal field just outside a sheet at a conductor point, V/m.
    pub fn normal_field_at(&self, x: f64, y: f64) -> Option<f64> {
        self.sigma_at(x, y)
            .map(|s| s / (VACUUM_PERMITTIVITY * (1.0 + self.substrate_permittivity)))
    }

    /// In-plane field at an exposed point on the substrate surface, V/m.
    pub fn tangential_field_at(&self, x: f64, y: f64) -> [f64; 2] {
        let eps_eff = 0.5 * (self.substrate_permittivity + 1.0);
        let k = 1.0 / (4.0 * PI * VACUUM_PERMITTIVITY * eps_eff);
        let (mut gx, mut gy) = (0.0, 0.0);
        for (p, s) in self.panels.iter().zip(&self.sigma) {
            let d = influence_gradient(p, x, y);
            let m = influence_gradient(p, x, -y);
            // image panel gradient: d/dy of f(x, −y) carries a sign flip
            gx += s * (d[0] - m[0]);
            gy += s * (d[1] + m[1]);
        }
        // the μm of the kernel and the μm⁻¹ of the gradient cancel
        [-k * gx, -k * gy]
    }
}

/// Pad capacitance and charging energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacitance {
    /// F.
    pub c: f64,
    /// e²/(2C)/h in MHz.
    pub e_c_mhz: f64,
}

impl Capacitance {
    pub fn from_farads(c: f64) -> Self {
        Capacitance { c, e_c_mhz: charging_energy_mhz(c) }
    }
}

/// E_C = e²/(2C) in MHz.
pub fn charging_energy_mhz(c: f64) -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * c) / PLANCK * 1e-6
}

/// Capacitance with charging energy `e_c_mhz`.
pub fn capacitance_for_charging_energy(e_c_mhz: f64) -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * PLANCK * e_c_mhz * 1e6)
}

/// Zero-point RMS voltage sqrt(ħω/2C) of a mode at `f_ghz` with capacitance `c`.
pub fn vacuum_rms_voltage(c: f64, f_ghz: f64) -> f64 {
    (HBAR * 2.0 * std::f64::consts::PI * f_ghz * 1e9 / (2.0 * c)).sqrt()
}

/// Capacitance of a design from the coarse stage.
pub fn capacitance(design: &QubitDesign) -> Result<Capacitance> {
    capacitance_with(design, &CoarseOptions::default())
}

pub fn capacitance_with(design: &QubitDesign, opt: &CoarseOptions) -> Result<Capacitance> {
    let s = CoarseSolution::solve(design, 1.0, opt)?;
    Ok(Capacitance::from_farads(s.capacitance()))
}

/// Offsets from conductor edges at which substrate sample lines are added, in x₀.
const SUBSTRATE_OFFSETS: [f64; 5] = [1.0, 1.5, 2.5, 4.5, 8.0];

/// Surface field map of a design excited with `excitation` volts across the pads.
pub fn coarse_surface_fields(design: &QubitDesign, excitation: f64) -> Result<SurfaceFieldMap> {
    coarse_surface_fields_with(design, excitation, &CoarseOptions::default(), &default_layers())
}

fn default_layers() -> [InterfaceSpec; 3] {
    InterfaceKind::ALL.map(InterfaceSpec::participation_default)
}

/// Field map with explicit options; `layers` (MA, MS, SA) set the layer
/// permittivities used to convert sheet fields into in-layer fields.
pub fn coarse_surface_fields_with(
    design: &QubitDesign,
    excitation: f64,
    opt: &CoarseOptions,
    layers: &[InterfaceSpec; 3],
) -> Result<SurfaceFieldMap> {
    let sol = CoarseSolution::solve(design, excitation, opt)?;
    Ok(sol.surface_fields(opt, layers))
}

fn samples(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

fn sorted_unique(mut v: Vec<f64>, tol: f64) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < tol);
    v
}

impl CoarseSolution {
    /// Samples the charge solution onto every interface surface.
    pub fn surface_fields(&self, opt: &CoarseOptions, layers: &[InterfaceSpec; 3]) -> SurfaceFieldMap {
        let eps_ma = layers[InterfaceKind::Ma.index()].relative_permittivity;
        let eps_ms = layers[InterfaceKind::Ms.index()].relative_permittivity;
        let eps_sub = self.substrate_permittivity;
        let layer_values = |en: f64| -> [(InterfaceKind, f64); 3] {
            let ma = (en / eps_ma).powi(2);
            let ms = (eps_sub * en / eps_ms).powi(2);
            [(InterfaceKind::Ma, ma), (InterfaceKind::Ms, ms), (InterfaceKind::Sa, ms)]
        };
        let layout = &self.layout;
        let mut patches = Vec::new();
        let x0 = EDGE_BAND;

        // perimeter bands of pads and ground, and wiring bands
        for (element, patch, contour) in &layout.contours {
            let (xs, step) = if element.is_wiring() {
                (vec![-WIRING_BAND, 0.0, WIRING_BAND], 0.5 * opt.band_step)
            } else {
                (vec![0.5 * x0, 0.75 * x0, x0], opt.band_step)
            };
            let ys = samples(0.0, contour.length(), step);
            let mut vals: [Vec<f64>; 3] = Default::default();
            for &x in &xs {
                // keep samples strictly inside their panel column
                let xn = x.clamp(xs[0] + 1e-7, xs[2] - 1e-7);
                for &s in &ys {
                    let p = contour.point_at(s);
                    let (px, py) = (p.pos[0] + xn * p.normal[0], p.pos[1] + xn * p.normal[1]);
                    let en = self.normal_field_at(px, py).unwrap_or(0.0);
                    for (k, (_, v)) in layer_values(en).into_iter().enumerate() {
                        vals[k].push(v);
                    }
                }
            }
            for (k, kind) in [InterfaceKind::Ma, InterfaceKind::Ms, InterfaceKind::Sa].into_iter().enumerate() {
                patches.push(FieldPatch {
                    element: *element,
                    interface: kind,
                    region: RegionKind::Band,
                    patch: *patch,
                    xs: xs.clone(),
                    ys: ys.clone(),
                    values: std::mem::take(&mut vals[k]),
                });
            }
        }

        // metal interiors of pads and ground
        for element in [MapElement::Pads, MapElement::Ground] {
            let rects = if element == MapElement::Pads { layout.pad_inner(x0) } else { layout.ground_inner(x0) };
            let mut cx: Vec<f64> = Vec::new();
            let mut cy: Vec<f64> = Vec::new();
            for p in self.panels.iter().filter(|p| p.element == element) {
                cx.push(p.cx);
                cy.extend([p.cy, -p.cy]);
            }
            for (patch, r) in rects.iter().enumerate() {
                let pick = |c: &[f64], lo: f64, hi: f64| {
                    let mut v: Vec<f64> = c.iter().copied().filter(|&t| t > lo && t < hi).collect();
                    v.extend([lo, hi]);
                    sorted_unique(v, 1e-9)
                };
                let xs = pick(&cx, r.x0, r.x1);
                let ys = pick(&cy, r.y0, r.y1);
                let (mx, my) = (0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1));
                let mut vals: [Vec<f64>; 2] = Default::default();
                for &x in &xs {
                    for &y in &ys {
                        let (px, py) = (x + 1e-7 * (mx - x).signum(), y + 1e-7 * (my - y).signum());
                        let en = self.normal_field_at(px, py).unwrap_or(0.0);
                        let lv = layer_values(en);
                        vals[0].push(lv[0].1);
                        vals[1].push(lv[1].1);
                    }
                }
                for (k, kind) in [InterfaceKind::Ma, InterfaceKind::Ms].into_iter().enumerate() {
                    patches.push(FieldPatch {
                        element,
                        interface: kind,
                        region: RegionKind::Inner,
                        patch,
                        xs: xs.clone(),
                        ys: ys.clone(),
                        values: std::mem::take(&mut vals[k]),
                    });
                }
            }
        }

        // exposed substrate
        let k = layout.cutout;
        let mut xs = samples(k.x0, k.x1, opt.substrate_step);
        let mut ys = samples(0.0, k.y1, opt.substrate_step);
        for c in layout.conductors.iter() {
            let scale = if c.element.is_wiring() { 2.0 * x0 } else { x0 };
            for off in SUBSTRATE_OFFSETS {
                let d = off * scale;
                xs.extend([c.rect.x0 - d, c.rect.x1 + d]);
                ys.extend([c.rect.y0 - d, c.rect.y1 + d]);
            }
        }
        let xs = sorted_unique(xs.into_iter().filter(|&v| v >= k.x0 && v <= k.x1).collect(), 0.2);
        let ys_half = sorted_unique(ys.into_iter().filter(|&v| v >= 0.0 && v <= k.y1).collect(), 0.2);
        let mut ys: Vec<f64> = ys_half.iter().rev().filter(|&&v| v > 0.0).map(|v| -v).collect();
        ys.extend(ys_half.iter().copied());
        let mut half = vec![0.0; xs.len() * ys_half.len()];
        for (ix, &x) in xs.iter().enumerate() {
            for (iy, &y) in ys_half.iter().enumerate() {
                if layout.is_inner_substrate(x, y, x0, 2.0 * x0) {
                    let e = self.tangential_field_at(x, y);
                    half[ix * ys_half.len() + iy] = e[0] * e[0] + e[1] * e[1];
                }
            }
        }
        let mut values = Vec::with_capacity(xs.len() * ys.len());
        for ix in 0..xs.len() {
            for &y in &ys {
                let iy = ys_half.binary_search_by(|a| a.total_cmp(&y.abs())).expect("mirrored sample");
                values.push(half[ix * ys_half.len() + iy]);
            }
        }
        patches.push(FieldPatch {
            element: MapElement::Pads,
            interface: InterfaceKind::Sa,
            region: RegionKind::Inner,
            patch: 0,
            xs,
            ys,
            values,
        });

        SurfaceFieldMap { patches, total_energy: self.energy, excitation: self.excitation }
    }
}
