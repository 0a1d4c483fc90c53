//! Bilinear finite elements on a graded tensor grid.
//!
//! The potential is piecewise bilinear, so every energy integral over an
//! axis-aligned sub-rectangle of a cell has a closed form.

use super::banded::BandMatrix;
use super::cross_section::{Boundary, CrossSection, CrossSectionKind, Region, Resolution};
use super::grid::{graded_axis, symmetric_axis, Grading, Zone};
use crate::constants::VACUUM_PERMITTIVITY;
use crate::error::{Error, Result};

/// Relative infinity-norm residual required of every solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Largest accepted band storage, in matrix entries.
pub const MAX_BAND_ENTRIES: usize = 150_000_000;
const MAX_REFINEMENT_STEPS: usize = 4;

/// Potential on the nodes of a tensor grid plus per-cell materials.
#[derive(Debug, Clone)]
pub struct FieldSolution {
    pub cs: CrossSection,
    pub resolution: Option<Resolution>,
    /// Node coordinates, μm.
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    /// Node potentials (V), index `ix * nz + iz`.
    pub phi: Vec<f64>,
    /// Relative permittivity per cell, index `ix * (nz - 1) + iz`.
    pub eps: Vec<f64>,
    pub region: Vec<Region>,
    /// Relative infinity-norm residual of the linear solve.
    pub residual: f64,
    pub refinement_steps: usize,
}

/// Coefficient matrix M of ∫|∇φ|² = φᵀ M φ over an a×b cell with local
/// nodes (0,0), (a,0), (0,b), (a,b).
fn cell_matrix(a: f64, b: f64) -> [[f64; 4]; 4] {
    let p = [-1.0, 1.0, 0.0, 0.0];
    let r = [0.0, 0.0, -1.0, 1.0];
    let s = [-1.0, 0.0, 1.0, 0.0];
    let t = [0.0, -1.0, 0.0, 1.0];
    let cx = b / (3.0 * a);
    let cz = a / (3.0 * b);
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = cx * (p[i] * p[j] + 0.5 * (p[i] * r[j] + r[i] * p[j]) + r[i] * r[j])
                + cz * (s[i] * s[j] + 0.5 * (s[i] * t[j] + t[i] * s[j]) + t[i] * t[j]);
        }
    }
    m
}

impl FieldSolution {
    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn nz(&self) -> usize {
        self.z.len()
    }

    /// Node coordinates in metres.
    pub fn x_m(&self) -> Vec<f64> {
        self.x.iter().map(|v| v * 1e-6).collect()
    }

    pub fn z_m(&self) -> Vec<f64> {
        self.z.iter().map(|v| v * 1e-6).collect()
    }

    pub fn cell_count(&self) -> usize {
        (self.nx() - 1) * (self.nz() - 1)
    }

    #[inline]
    fn cell(&self, ix: usize, iz: usize) -> usize {
        ix * (self.nz() - 1) + iz
    }

    #[inline]
    fn corners(&self, ix: usize, iz: usize) -> [f64; 4] {
        let nz = self.nz();
        let n0 = ix * nz + iz;
        [self.phi[n0], self.phi[n0 + nz], self.phi[n0 + 1], self.phi[n0 + nz + 1]]
    }

    /// Builds a solution from given node potentials (no solve).
    pub fn from_potential(cs: CrossSection, x: Vec<f64>, z: Vec<f64>, phi: Vec<f64>) -> Self {
        assert_eq!(phi.len(), x.len() * z.len());
        let (eps, region) = paint_cells(&cs, &x, &z);
        FieldSolution {
            cs,
            resolution: None,
            x,
            z,
            phi,
            eps,
            region,
            residual: 0.0,
            refinement_steps: 0,
        }
    }

    /// ∫|∇φ|² over the part of cell (ix, iz) inside the normalized window
    /// [u0,u1]×[v0,v1] ⊂ [0,1]², in V².
    fn cell_integral(&self, ix: usize, iz: usize, u0: f64, u1: f64, v0: f64, v1: f64) -> f64 {
        let a = self.x[ix + 1] - self.x[ix];
        let b = self.z[iz + 1] - self.z[iz];
        let [f0, f1, f2, f3] = self.corners(ix, iz);
        let p = f1 - f0;
        let q = (f3 - f2) - p;
        let s = f2 - f0;
        let w = (f3 - f1) - s;
        let dv = v1 - v0;
        let du = u1 - u0;
        let ix_part = p * p * dv + p * q * (v1 * v1 - v0 * v0) + q * q * (v1.powi(3) - v0.powi(3)) / 3.0;
        let iz_part = s * s * du + s * w * (u1 * u1 - u0 * u0) + w * w * (u1.powi(3) - u0.powi(3)) / 3.0;
        (b / a) * du * ix_part + (a / b) * dv * iz_part
    }

    /// Visits cells overlapping the box with the overlap in cell-normalized
    /// coordinates.
    fn for_overlap(&self, x0: f64, x1: f64, z0: f64, z1: f64, mut f: impl FnMut(usize, usize, [f64; 4])) {
        let ix0 = self.x.partition_point(|&v| v <= x0).saturating_sub(1);
        let iz0 = self.z.partition_point(|&v| v <= z0).saturating_sub(1);
        for ix in ix0..self.nx() - 1 {
            let (xa, xb) = (self.x[ix], self.x[ix + 1]);
            if xa >= x1 {
                break;
            }
            let (ca, cb) = (x0.max(xa), x1.min(xb));
            if cb <= ca {
                continue;
            }
            let u = [(ca - xa) / (xb - xa), (cb - xa) / (xb - xa)];
            for iz in iz0..self.nz() - 1 {
                let (za, zb) = (self.z[iz], self.z[iz + 1]);
                if za >= z1 {
                    break;
                }
                let (da, db) = (z0.max(za), z1.min(zb));
                if db <= da {
                    continue;
                }
                let v = [(da - za) / (zb - za), (db - za) / (zb - za)];
                f(ix, iz, [u[0], u[1], v[0], v[1]]);
            }
        }
    }

    /// Exact ∫|∇φ|² dx dz over a box (μm), in V².
    pub fn integrate_e2(&self, x0: f64, x1: f64, z0: f64, z1: f64) -> f64 {
        let mut sum = 0.0;
        self.for_overlap(x0, x1, z0, z1, |ix, iz, w| {
            sum += self.cell_integral(ix, iz, w[0], w[1], w[2], w[3]);
        });
        sum
    }

    /// Midpoint-rule ∫|∇φ|² with every overlapped cell split `k`×`k`.
    pub fn integrate_e2_midpoint(&self, x0: f64, x1: f64, z0: f64, z1: f64, k: usize) -> f64 {
        let mut sum = 0.0;
        self.for_overlap(x0, x1, z0, z1, |ix, iz, w| {
            let a = self.x[ix + 1] - self.x[ix];
            let b = self.z[iz + 1] - self.z[iz];
            let [f0, f1, f2, f3] = self.corners(ix, iz);
            let (du, dv) = ((w[1] - w[0]) / k as f64, (w[3] - w[2]) / k as f64);
            for i in 0..k {
                let u = w[0] + (i as f64 + 0.5) * du;
                for j in 0..k {
                    let v = w[2] + (j as f64 + 0.5) * dv;
                    let gx = ((f1 - f0) * (1.0 - v) + (f3 - f2) * v) / a;
                    let gz = ((f2 - f0) * (1.0 - u) + (f3 - f1) * u) / b;
                    sum += (gx * gx + gz * gz) * du * a * dv * b;
                }
            }
        });
        sum
    }

    /// Field energy per unit length (J/m) stored in one region.
    pub fn region_energy(&self, region: Region) -> f64 {
        let mut sum = 0.0;
        for ix in 0..self.nx() - 1 {
            for iz in 0..self.nz() - 1 {
                let c = self.cell(ix, iz);
                if self.region[c] == region {
                    sum += self.eps[c] * self.cell_integral(ix, iz, 0.0, 1.0, 0.0, 1.0);
                }
            }
        }
        0.5 * VACUUM_PERMITTIVITY * sum
    }

    /// Energies per region in [`Region::ALL`] order, J/m.
    pub fn region_energies(&self) -> [f64; 6] {
        let mut out = [0.0; 6];
        for ix in 0..self.nx() - 1 {
            for iz in 0..self.nz() - 1 {
                let c = self.cell(ix, iz);
                out[self.region[c].index()] += self.eps[c] * self.cell_integral(ix, iz, 0.0, 1.0, 0.0, 1.0);
            }
        }
        out.map(|v| 0.5 * VACUUM_PERMITTIVITY * v)
    }

    /// Total field energy per unit length, J/m.
    pub fn total_energy(&self) -> f64 {
        self.region_energies().iter().sum()
    }

    /// Energy from conductor charges, ½ Σ Q V, J/m.
    pub fn charge_energy(&self) -> f64 {
        let nz = self.nz();
        let kphi = apply_stiffness(self);
        let mut sum = 0.0;
        for ix in 0..self.nx() {
            for iz in 0..nz {
                let n = ix * nz + iz;
                if self.phi[n] != 0.0 && self.is_conductor_node(self.x[ix], self.z[iz]) {
                    sum += self.phi[n] * kphi[n];
                }
            }
        }
        0.5 * VACUUM_PERMITTIVITY * sum
    }

    fn is_conductor_node(&self, x: f64, z: f64) -> bool {
        self.cs.conductors.iter().any(|c| c.shape.contains(x, z))
    }

    /// |E| at the centre of cell (ix, iz), V/m.
    pub fn cell_field(&self, ix: usize, iz: usize) -> f64 {
        let a = self.x[ix + 1] - self.x[ix];
        let b = self.z[iz + 1] - self.z[iz];
        let [f0, f1, f2, f3] = self.corners(ix, iz);
        let gx = 0.5 * ((f1 - f0) + (f3 - f2)) / a;
        let gz = 0.5 * ((f2 - f0) + (f3 - f1)) / b;
        gx.hypot(gz) * 1e6
    }

    /// Cell-centre |E| values (V/m), index `ix * (nz - 1) + iz`.
    pub fn field_magnitude(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.cell_count());
        for ix in 0..self.nx() - 1 {
            for iz in 0..self.nz() - 1 {
                out.push(self.cell_field(ix, iz));
            }
        }
        out
    }

    /// Bilinear interpolation of cell-centre |E| (V/m) at x (μm), z (nm).
    /// Conductor cells are excluded from the stencil.
    pub fn probe(&self, x_um: f64, z_nm: f64) -> Result<f64> {
        let z_um = z_nm * 1e-3;
        let (nx, nz) = (self.nx(), self.nz());
        if !(x_um >= self.x[0] && x_um <= self.x[nx - 1] && z_um >= self.z[0] && z_um <= self.z[nz - 1]) {
            return Err(Error::invalid(
                "probe point",
                format!("({x_um} um, {z_nm} nm) lies outside the solved domain"),
            ));
        }
        let centres = |v: &[f64]| -> Vec<f64> { v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect() };
        let (cx, cz) = (centres(&self.x), centres(&self.z));
        let bracket = |c: &[f64], v: f64| -> (usize, usize, f64) {
            let i = c.partition_point(|&p| p <= v);
            if i == 0 {
                (0, 0, 0.0)
            } else if i == c.len() {
                (c.len() - 1, c.len() - 1, 0.0)
            } else {
                (i - 1, i, (v - c[i - 1]) / (c[i] - c[i - 1]))
            }
        };
        let (i0, i1, tx) = bracket(&cx, x_um);
        let (j0, j1, tz) = bracket(&cz, z_um);
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, wx) in [(i0, 1.0 - tx), (i1, tx)] {
            for (j, wz) in [(j0, 1.0 - tz), (j1, tz)] {
                let w = wx * wz;
                if w == 0.0 || self.region[self.cell(i, j)] == Region::Conductor {
                    continue;
                }
                num += w * self.cell_field(i, j);
                den += w;
            }
        }
        Ok(if den > 0.0 { num / den } else { 0.0 })
    }

    /// Smallest number of grid cells across any interface layer.
    pub fn min_cells_across_layers(&self) -> usize {
        let h = self.cs.film_thickness;
        let mut best = usize::MAX;
        let count = |v: &[f64], a: f64, b: f64| v.windows(2).filter(|w| w[0] >= a - 1e-12 && w[1] <= b + 1e-12).count();
        for l in &self.cs.layers {
            let t = l.thickness_um();
            match l.kind {
                crate::geometry::InterfaceKind::Ma => {
                    best = best.min(count(&self.z, h, h + t));
                    for c in &self.cs.conductors {
                        best = best.min(count(&self.x, c.shape.x0 - t, c.shape.x0));
                    }
                }
                _ => best = best.min(count(&self.z, -t, 0.0)),
            }
        }
        best
    }

    /// Number of grid cells along x inside `[a, b]`.
    pub fn cells_in_x(&self, a: f64, b: f64) -> usize {
        self.x.windows(2).filter(|w| w[0] >= a - 1e-12 && w[1] <= b + 1e-12).count()
    }
}

fn paint_cells(cs: &CrossSection, x: &[f64], z: &[f64]) -> (Vec<f64>, Vec<Region>) {
    let mut eps = Vec::with_capacity((x.len() - 1) * (z.len() - 1));
    let mut region = Vec::with_capacity(eps.capacity());
    for wx in x.windows(2) {
        let xc = 0.5 * (wx[0] + wx[1]);
        for wz in z.windows(2) {
            let (e, r) = cs.material_at(xc, 0.5 * (wz[0] + wz[1]));
            eps.push(e);
            region.push(r);
        }
    }
    (eps, region)
}

/// K φ over all nodes, with K the assembled stiffness (ε-weighted).
fn apply_stiffness(sol: &FieldSolution) -> Vec<f64> {
    let nz = sol.nz();
    let mut out = vec![0.0; sol.phi.len()];
    for ix in 0..sol.nx() - 1 {
        for iz in 0..nz - 1 {
            let e = sol.eps[sol.cell(ix, iz)];
            let m = cell_matrix(sol.x[ix + 1] - sol.x[ix], sol.z[iz + 1] - sol.z[iz]);
            let nodes = [ix * nz + iz, (ix + 1) * nz + iz, ix * nz + iz + 1, (ix + 1) * nz + iz + 1];
            for i in 0..4 {
                let mut s = 0.0;
                for j in 0..4 {
                    s += m[i][j] * sol.phi[nodes[j]];
                }
                out[nodes[i]] += e * s;
            }
        }
    }
    out
}

/// Node axes for a cross-section at a resolution.
pub fn build_grid(cs: &CrossSection, res: Resolution) -> (Vec<f64>, Vec<f64>) {
    let d = cs.domain;
    let cells = res.layer_cells() as f64;
    let h_min = match cs.kind {
        CrossSectionKind::ParallelPlate { spacing } => spacing / (10.0 * cells),
        _ => cs.thinnest_layer() / (2.0 * cells),
    };
    let span = (d.x1 - d.x0).max(d.z1 - d.z0);
    let cap = 1.0 / res.zone_density();
    let gx = Grading {
        h_min,
        growth: res.growth(),
        h_max: span / 40.0,
        zones: cs.refine.iter().map(|&(lo, hi)| Zone { lo, hi, cap }).collect(),
    };
    let gz = Grading { zones: Vec::new(), ..gx.clone() };
    let x = if cs.symmetric {
        symmetric_axis(d.x1, &cs.x_marks(), &gx)
    } else {
        graded_axis(d.x0, d.x1, &cs.x_marks(), &gx)
    };
    let z = graded_axis(d.z0, d.z1, &cs.z_marks(), &gz);
    (x, z)
}

/// Solves Laplace's equation ∇·(ε∇φ) = 0 on the cross-section.
pub fn solve_cross_section(cs: &CrossSection, res: Resolution) -> Result<FieldSolution> {
    cs.validate()?;
    if cs.conductors.iter().all(|c| c.potential == 0.0) {
        return Err(Error::Degenerate("all conductors at 0 V: zero excitation".into()));
    }
    let (x, z) = build_grid(cs, res);
    let (nx, nz) = (x.len(), z.len());
    let band_estimate = nx * nz * (nx.min(nz) + 2);
    if band_estimate > MAX_BAND_ENTRIES {
        return Err(Error::TooLarge {
            estimate: (nx - 1) * (nz - 1),
            limit: MAX_BAND_ENTRIES / (nx.min(nz) + 2),
        });
    }

    let mut phi = vec![0.0; nx * nz];
    let mut fixed = vec![false; nx * nz];
    for ix in 0..nx {
        for iz in 0..nz {
            let n = ix * nz + iz;
            let on_boundary = ix == 0 || iz == 0 || ix == nx - 1 || iz == nz - 1;
            if let Some(c) = cs.conductors.iter().find(|c| c.shape.contains(x[ix], z[iz])) {
                fixed[n] = true;
                phi[n] = c.potential;
            } else if on_boundary && cs.boundary == Boundary::Dirichlet {
                fixed[n] = true;
            }
        }
    }

    // band-minimizing order: the shorter axis varies fastest
    let z_fast = nz <= nx;
    let mut order: Vec<usize> = (0..nx * nz).collect();
    if !z_fast {
        order = (0..nz).flat_map(|iz| (0..nx).map(move |ix| ix * nz + iz)).collect();
    }
    let mut free = vec![usize::MAX; nx * nz];
    let mut n_free = 0;
    for &n in &order {
        if !fixed[n] {
            free[n] = n_free;
            n_free += 1;
        }
    }
    let mut bw = 0;
    for ix in 0..nx - 1 {
        for iz in 0..nz - 1 {
            let nodes = [ix * nz + iz, (ix + 1) * nz + iz, ix * nz + iz + 1, (ix + 1) * nz + iz + 1];
            let f: Vec<usize> = nodes.iter().map(|&n| free[n]).filter(|&f| f != usize::MAX).collect();
            if let (Some(lo), Some(hi)) = (f.iter().min(), f.iter().max()) {
                bw = bw.max(hi - lo);
            }
        }
    }

    let mut sol = FieldSolution::from_potential(cs.clone(), x, z, phi);
    sol.resolution = Some(res);
    let mut a = BandMatrix::zeros(n_free, bw);
    let mut rhs = vec![0.0; n_free];
    for ix in 0..nx - 1 {
        for iz in 0..nz - 1 {
            let e = sol.eps[sol.cell(ix, iz)];
            let m = cell_matrix(sol.x[ix + 1] - sol.x[ix], sol.z[iz + 1] - sol.z[iz]);
            let nodes = [ix * nz + iz, (ix + 1) * nz + iz, ix * nz + iz + 1, (ix + 1) * nz + iz + 1];
            for i in 0..4 {
                let fi = free[nodes[i]];
                if fi == usize::MAX {
                    continue;
                }
                for j in 0..4 {
                    let v = e * m[i][j];
                    let fj = free[nodes[j]];
                    if fj == usize::MAX {
                        rhs[fi] -= v * sol.phi[nodes[j]];
                    } else if fj <= fi {
                        a.add_lower(fi, fj, v);
                    }
                }
            }
        }
    }
    let rhs_norm = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let chol = a.cholesky()?;
    let mut u = rhs.clone();
    chol.solve_in_place(&mut u);
    for n in 0..nx * nz {
        if free[n] != usize::MAX {
            sol.phi[n] = u[free[n]];
        }
    }

    let mut steps = 0;
    let mut prev = f64::INFINITY;
    loop {
        let kphi = apply_stiffness(&sol);
        let mut r = vec![0.0; n_free];
        for n in 0..nx * nz {
            if free[n] != usize::MAX {
                r[free[n]] = -kphi[n];
            }
        }
        let rel = r.iter().fold(0.0f64, |m, v| m.max(v.abs())) / rhs_norm.max(f64::MIN_POSITIVE);
        sol.residual = rel;
        // refine to round-off: stop once a step no longer halves the residual
        if rel < RESIDUAL_TOLERANCE && (rel == 0.0 || rel > 0.5 * prev) {
            break;
        }
        prev = rel;
        if steps == MAX_REFINEMENT_STEPS {
            if rel < RESIDUAL_TOLERANCE {
                break;
            }
            return Err(Error::NonConvergence {
                what: "cross-section solve".into(),
                residual: rel,
            });
        }
        chol.solve_in_place(&mut r);
        for n in 0..nx * nz {
            if free[n] != usize::MAX {
                sol.phi[n] += r[free[n]];
            }
        }
        steps += 1;
    }
    sol.refinement_steps = steps;
    Ok(sol)
}
