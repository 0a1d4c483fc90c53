//! Planar conductor layout derived from a [`QubitDesign`].
//!
//! The layout is mirror-symmetric about y = 0: the upper pad, lead and SQUID
//! half sit at +V/2, their mirror images at −V/2, and a rectangular ground
//! ring at 0 V surrounds both pads with clearance G/2.

use super::{QubitDesign, SQUID_MARGIN};

/// Field-map element. `Pads` and `Ground` together form the pads budget element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MapElement {
    Pads,
    Ground,
    Leads,
    Squid,
}

impl MapElement {
    pub const ALL: [MapElement; 4] = [
        MapElement::Pads,
        MapElement::Ground,
        MapElement::Leads,
        MapElement::Squid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MapElement::Pads => "pads",
            MapElement::Ground => "ground",
            MapElement::Leads => "leads",
            MapElement::Squid => "SQUID",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pads" => Some(MapElement::Pads),
            "ground" => Some(MapElement::Ground),
            "leads" => Some(MapElement::Leads),
            "SQUID" => Some(MapElement::Squid),
            _ => None,
        }
    }

    pub fn is_wiring(self) -> bool {
        matches!(self, MapElement::Leads | MapElement::Squid)
    }
}

/// Axis-aligned rectangle, μm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        debug_assert!(x1 > x0 && y1 > y0);
        Rect { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn mirror_y(&self) -> Rect {
        Rect::new(self.x0, self.x1, -self.y1, -self.y0)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    /// Euclidean distance from a point to the rectangle (0 inside).
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let dx = (self.x0 - x).max(0.0).max(x - self.x1);
        let dy = (self.y0 - y).max(0.0).max(y - self.y1);
        dx.hypot(dy)
    }

    /// Shrinks every side by `d`; `None` when nothing is left.
    pub fn inset(&self, d: f64) -> Option<Rect> {
        let r = Rect {
            x0: self.x0 + d,
            x1: self.x1 - d,
            y0: self.y0 + d,
            y1: self.y1 - d,
        };
        (r.x1 > r.x0 && r.y1 > r.y0).then_some(r)
    }
}

/// One conductor rectangle. `potential` is in units of the excitation voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conductor {
    pub rect: Rect,
    pub element: MapElement,
    pub potential: f64,
}

/// Position, unit tangent and unit left normal at an arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPoint {
    pub pos: [f64; 2],
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
}

/// Polyline along a conductor edge or wire centerline.
///
/// For perimeter contours the left normal points into the metal.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

impl Contour {
    fn segments(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.points.len();
        let m = if self.closed { n } else { n - 1 };
        (0..m).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments()
            .map(|(a, b)| (b[0] - a[0]).hypot(b[1] - a[1]))
            .sum()
    }

    /// Arc-length positions of the vertices, including the end point.
    pub fn vertex_arc_lengths(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        let mut s = 0.0;
        for (a, b) in self.segments() {
            s += (b[0] - a[0]).hypot(b[1] - a[1]);
            out.push(s);
        }
        out
    }

    /// Point at arc length `s`, clamped to the contour.
    pub fn point_at(&self, s: f64) -> ContourPoint {
        let mut rest = s.max(0.0);
        let mut last = None;
        for (a, b) in self.segments() {
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let t = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
            last = Some((b, t));
            if rest <= len {
                return ContourPoint {
                    pos: [a[0] + t[0] * rest, a[1] + t[1] * rest],
                    tangent: t,
                    normal: [-t[1], t[0]],
                };
            }
            rest -= len;
        }
        let (b, t) = last.expect("contour has at least one segment");
        ContourPoint {
            pos: b,
            tangent: t,
            normal: [-t[1], t[0]],
        }
    }

    pub fn mirror_y(&self) -> Contour {
        let mut points: Vec<[f64; 2]> = self.points.iter().map(|p| [p[0], -p[1]]).collect();
        if self.closed {
            points.reverse();
        }
        Contour {
            points,
            closed: self.closed,
        }
    }
}

/// Conductors, edge contours and the ground cutout for one design.
#[derive(Debug, Clone)]
pub struct Layout {
    pub conductors: Vec<Conductor>,
    /// Opening of the ground ring.
    pub cutout: Rect,
    /// Outer boundary of the ground ring.
    pub outer: Rect,
    /// Pad perimeters (patches 0, 1), ground inner edge (patch 0), lead
    /// centerlines (patches 0, 1) and the SQUID loop centerline (patch 0).
    pub contours: Vec<(MapElement, usize, Contour)>,
}

impl Layout {
    pub fn new(d: &QubitDesign) -> Layout {
        let w = d.pad_width;
        let h = d.pad_height;
        let g = d.gap;
        let wl = d.lead_width;
        let gl = d.lead_spacing;
        let a = d.squid_loop_side;
        let ws = d.squid_wire_width;
        let clearance = 0.5 * g;
        let ring = 0.5 * w;

        let xs = 0.5 * w - SQUID_MARGIN - a;
        let xc = xs - d.lead_run();
        let y_run = 0.5 * gl + 0.5 * wl;

        let mut upper = vec![
            (MapElement::Pads, Rect::new(-0.5 * w, 0.5 * w, 0.5 * g, 0.5 * g + h)),
            (
                MapElement::Leads,
                Rect::new(xc - 0.5 * wl, xc + 0.5 * wl, 0.5 * gl + wl, 0.5 * g),
            ),
            (
                MapElement::Leads,
                Rect::new(xc - 0.5 * wl, xs, 0.5 * gl, 0.5 * gl + wl),
            ),
            (MapElement::Squid, Rect::new(xs, xs + a, 0.5 * a - ws, 0.5 * a)),
            (
                MapElement::Squid,
                Rect::new(xs, xs + ws, JUNCTION_HALF_GAP, 0.5 * a - ws),
            ),
            (
                MapElement::Squid,
                Rect::new(xs + a - ws, xs + a, JUNCTION_HALF_GAP, 0.5 * a - ws),
            ),
        ];
        let cutout = Rect::new(
            -0.5 * w - clearance,
            0.5 * w + clearance,
            -(0.5 * g + h + clearance),
            0.5 * g + h + clearance,
        );
        let outer = Rect::new(
            cutout.x0 - ring,
            cutout.x1 + ring,
            cutout.y0 - ring,
            cutout.y1 + ring,
        );
        let mut conductors = Vec::new();
        for (element, rect) in upper.drain(..) {
            conductors.push(Conductor {
                rect,
                element,
                potential: 0.5,
            });
            conductors.push(Conductor {
                rect: rect.mirror_y(),
                element,
                potential: -0.5,
            });
        }
        let ground = [
            Rect::new(outer.x0, outer.x1, cutout.y1, outer.y1),
            Rect::new(outer.x0, outer.x1, outer.y0, cutout.y0),
            Rect::new(outer.x0, cutout.x0, cutout.y0, cutout.y1),
            Rect::new(cutout.x1, outer.x1, cutout.y0, cutout.y1),
        ];
        for rect in ground {
            conductors.push(Conductor {
                rect,
                element: MapElement::Ground,
                potential: 0.0,
            });
        }

        let pad = Contour {
            points: vec![
                [-0.5 * w, 0.5 * g],
                [0.5 * w, 0.5 * g],
                [0.5 * w, 0.5 * g + h],
                [-0.5 * w, 0.5 * g + h],
            ],
            closed: true,
        };
        let ground_edge = Contour {
            points: vec![
                [cutout.x0, cutout.y0],
                [cutout.x0, cutout.y1],
                [cutout.x1, cutout.y1],
                [cutout.x1, cutout.y0],
            ],
            closed: true,
        };
        let lead = Contour {
            points: vec![[xc, 0.5 * g], [xc, y_run], [xs, y_run]],
            closed: false,
        };
        let (l, r, t) = (xs + 0.5 * ws, xs + a - 0.5 * ws, 0.5 * (a - ws));
        let loop_line = Contour {
            points: vec![[l, -t], [r, -t], [r, t], [l, t]],
            closed: true,
        };
        let contours = vec![
            (MapElement::Pads, 0, pad.clone()),
            (MapElement::Pads, 1, pad.mirror_y()),
            (MapElement::Ground, 0, ground_edge),
            (MapElement::Leads, 0, lead.clone()),
            (MapElement::Leads, 1, lead.mirror_y()),
            (MapElement::Squid, 0, loop_line),
        ];
        Layout {
            conductors,
            cutout,
            outer,
            contours,
        }
    }

    pub fn contour(&self, element: MapElement, patch: usize) -> Option<&Contour> {
        self.contours
            .iter()
            .find(|(e, p, _)| *e == element && *p == patch)
            .map(|(_, _, c)| c)
    }

    pub fn patches(&self, element: MapElement) -> impl Iterator<Item = (usize, &Contour)> {
        self.contours
            .iter()
            .filter(move |(e, _, _)| *e == element)
            .map(|(_, p, c)| (*p, c))
    }

    /// Conductor containing the point, if any.
    pub fn conductor_at(&self, x: f64, y: f64) -> Option<&Conductor> {
        self.conductors.iter().find(|c| c.rect.contains(x, y))
    }

    /// Exposed substrate point farther than `x0` from pads and ground and
    /// farther than `wiring_band` from leads and SQUID.
    pub fn is_inner_substrate(&self, x: f64, y: f64, x0: f64, wiring_band: f64) -> bool {
        if !self.cutout.contains(x, y) {
            return false;
        }
        self.conductors.iter().all(|c| {
            let limit = if c.element.is_wiring() { wiring_band } else { x0 };
            c.rect.distance(x, y) >= limit
        })
    }

    /// Pad interiors inset by `x0` (patches 0, 1).
    pub fn pad_inner(&self, x0: f64) -> Vec<Rect> {
        self.conductors
            .iter()
            .filter(|c| c.element == MapElement::Pads)
            .filter_map(|c| c.rect.inset(x0))
            .collect()
    }

    /// Ground ring pieces inset by `x0` (patches 0..4).
    pub fn ground_inner(&self, x0: f64) -> Vec<Rect> {
        self.conductors
            .iter()
            .filter(|c| c.element == MapElement::Ground)
            .filter_map(|c| c.rect.inset(x0))
            .collect()
    }
}

/// Half the Josephson junction gap at y = 0, μm.
pub(crate) const JUNCTION_HALF_GAP: f64 = 0.25;
