use surfloss::fields::*;
use surfloss::geometry::{builtin_design, builtin_designs, InterfaceKind, MapElement};
use surfloss::Error;

fn solve(cs: &CrossSection, res: Resolution) -> FieldSolution {
    solve_cross_section(cs, res).expect("solve")
}

#[test]
fn parallel_plate_field_is_v_over_d() {
    let (d, v) = (2.0, 1.5);
    let cs = CrossSection::parallel_plate(d, 4.0, 3.0, v);
    let sol = solve(&cs, Resolution::Medium);
    let want = v / (d * 1e-6);
    for x in [0.5, 2.0, 3.5] {
        for z_nm in [200.0, 1000.0, 1800.0] {
            let e = sol.probe(x, z_nm).unwrap();
            assert!((e - want).abs() / want < 0.01, "({x}, {z_nm}): {e} vs {want}");
        }
    }
}

#[test]
fn residual_and_layer_resolution() {
    let cs = CrossSection::pad_edge(20.0, 20.0, 0.12).unwrap();
    for res in [Resolution::Coarse, Resolution::Medium] {
        let sol = solve(&cs, res);
        assert!(sol.residual < RESIDUAL_TOLERANCE, "{}", sol.residual);
        assert!(sol.min_cells_across_layers() >= 4);
        assert!(sol.total_energy() > 0.0);
    }
}

#[test]
fn conductor_nodes_hold_their_potential() {
    let cs = CrossSection::wiring(2.5, 4.0, 0.12).unwrap();
    let sol = solve(&cs, Resolution::Coarse);
    let nz = sol.z.len();
    for (ix, &x) in sol.x.iter().enumerate() {
        for (iz, &z) in sol.z.iter().enumerate() {
            if let Some(c) = cs.conductors.iter().find(|c| c.shape.contains(x, z)) {
                assert_eq!(sol.phi[ix * nz + iz], c.potential);
            }
        }
    }
}

#[test]
fn coplanar_pair_is_mirror_symmetric() {
    let sol = solve(&CrossSection::wiring(2.5, 4.0, 0.12).unwrap(), Resolution::Coarse);
    let (nx, nz) = (sol.x.len(), sol.z.len());
    for ix in 0..nx {
        assert_eq!(sol.x[ix], -sol.x[nx - 1 - ix]);
        for iz in 0..nz {
            let (a, b) = (sol.phi[ix * nz + iz], sol.phi[(nx - 1 - ix) * nz + iz]);
            // pads at ±0.5 V
            assert!((a + b).abs() <= 1e-12, "node {ix},{iz}: {a} vs {b}");
        }
    }
    let scale = sol.field_magnitude().iter().fold(0.0f64, |a, &b| a.max(b));
    for ix in 0..nx - 1 {
        for iz in 0..nz - 1 {
            let a = sol.cell_field(ix, iz);
            let b = sol.cell_field(nx - 2 - ix, iz);
            assert!((a - b).abs() <= 1e-12 * scale, "cell {ix},{iz}: {a} vs {b}");
        }
    }
}

#[test]
fn energies_scale_with_voltage_squared() {
    let cs = CrossSection::pad_edge(20.0, 20.0, 0.12).unwrap();
    let mut cs2 = cs.clone();
    for c in cs2.conductors.iter_mut() {
        c.potential *= 2.0;
    }
    let (a, b) = (solve(&cs, Resolution::Coarse), solve(&cs2, Resolution::Coarse));
    let ea = a.region_energies();
    let eb = b.region_energies();
    let scale = a.total_energy();
    for (x, y) in ea.iter().zip(eb.iter()) {
        assert!((4.0 * x - y).abs() <= 1e-12 * 4.0 * scale);
    }
    let emax = a.field_magnitude().iter().fold(0.0f64, |m, &v| m.max(v));
    for (x, y) in a.field_magnitude().iter().zip(b.field_magnitude().iter()) {
        assert!((2.0 * x - y).abs() <= 1e-12 * 2.0 * emax);
    }
}

#[test]
fn region_energies_tile_the_total() {
    let sol = solve(&CrossSection::pad_edge(20.0, 20.0, 0.12).unwrap(), Resolution::Coarse);
    let sum: f64 = sol.region_energies().iter().sum();
    let charge = sol.charge_energy();
    assert!((sum - charge).abs() / charge < 0.01, "{sum} vs {charge}");
}

#[test]
fn medium_and_fine_energies_agree() {
    let cs = CrossSection::pad_edge(PAD_EDGE_WIDTH, PAD_EDGE_WIDTH, 0.12).unwrap();
    let (m, f) = (solve(&cs, Resolution::Medium), solve(&cs, Resolution::Fine));
    let (em, ef) = (m.region_energies(), f.region_energies());
    for r in Region::ALL {
        let (a, b) = (em[r.index()], ef[r.index()]);
        if r == Region::Conductor {
            continue;
        }
        assert!((a - b).abs() / b < 0.02, "{}: {a} vs {b}", r.as_str());
    }
}

#[test]
fn exact_quadrature_matches_refined_midpoint_rule() {
    let sol = solve(&CrossSection::pad_edge(20.0, 20.0, 0.12).unwrap(), Resolution::Coarse);
    for (x0, x1, z0, z1) in [(0.5, 1.0, -0.003, 0.0), (-1.0, 0.0, -0.003, 0.0), (0.0, 1.0, 0.12, 0.123)] {
        let exact = sol.integrate_e2(x0, x1, z0, z1);
        let brute = sol.integrate_e2_midpoint(x0, x1, z0, z1, 10);
        assert!((exact - brute).abs() / exact < 0.01, "{exact} vs {brute}");
    }
}

#[test]
fn probe_at_conductor_surface_equals_adjacent_cell() {
    let sol = solve(&CrossSection::pad_edge(20.0, 20.0, 0.12).unwrap(), Resolution::Coarse);
    let iz = sol.z.iter().position(|&z| z == 0.0).unwrap() - 1;
    let ix = sol.x.iter().position(|&x| x > 5.0).unwrap();
    let xc = 0.5 * (sol.x[ix] + sol.x[ix + 1]);
    let want = sol.cell_field(ix, iz);
    assert!((field_probe(&sol, xc, 0.0).unwrap() - want).abs() <= 1e-12 * want);
}

#[test]
fn probe_midway_returns_mean_for_linear_field() {
    let cs = CrossSection::pad_edge(20.0, 20.0, 0.12).unwrap();
    let (x, z) = build_grid(&cs, Resolution::Coarse);
    // φ = x² gives |E| linear in x
    let phi = x.iter().flat_map(|&xv| z.iter().map(move |_| xv * xv)).collect();
    let sol = FieldSolution::from_potential(cs, x, z, phi);
    let iz = sol.z.iter().position(|&z| z > -50.0).unwrap();
    let zc = 0.5 * (sol.z[iz] + sol.z[iz + 1]) * 1e3;
    let ix = sol.x.iter().position(|&x| x > 3.0).unwrap();
    let c0 = 0.5 * (sol.x[ix] + sol.x[ix + 1]);
    let c1 = 0.5 * (sol.x[ix + 1] + sol.x[ix + 2]);
    let mean = 0.5 * (sol.cell_field(ix, iz) + sol.cell_field(ix + 1, iz));
    let got = sol.probe(0.5 * (c0 + c1), zc).unwrap();
    assert!((got - mean).abs() <= 1e-9 * mean, "{got} vs {mean}");
}

#[test]
fn probe_outside_domain_is_an_error() {
    let sol = solve(&CrossSection::pad_edge(20.0, 20.0, 0.12).unwrap(), Resolution::Coarse);
    assert!(sol.probe(1e6, 0.0).is_err());
}

#[test]
fn edge_field_decays_monotonically_into_the_pad() {
    let sol = solve(&CrossSection::pad_edge(PAD_EDGE_WIDTH, PAD_EDGE_WIDTH, 0.12).unwrap(), Resolution::Medium);
    let xs: Vec<f64> = (0..60).map(|k| 0.05 * 1.08f64.powi(k)).filter(|&x| x < 15.0).collect();
    let f: Vec<f64> = xs.iter().map(|&x| sol.probe(x, -1.5).unwrap()).collect();
    for w in f.windows(2) {
        assert!(w[1] < w[0], "{:?}", f);
    }
}

/// MS-layer field across the band, normalized to its value at x₀.
fn normalized_profile(sol: &FieldSolution, x0: f64) -> Vec<f64> {
    let at = sol.probe(x0, -1.5).unwrap();
    (1..=20).map(|k| sol.probe(x0 * k as f64 / 20.0, -1.5).unwrap() / at).collect()
}

#[test]
fn edge_profile_is_insensitive_to_pad_and_gap() {
    let base = normalized_profile(&solve(&CrossSection::pad_edge(50.0, 50.0, 0.12).unwrap(), Resolution::Medium), 1.0);
    for (w, g) in [(20.0, 20.0), (100.0, 50.0), (50.0, 20.0)] {
        let p = normalized_profile(&solve(&CrossSection::pad_edge(w, g, 0.12).unwrap(), Resolution::Medium), 1.0);
        for (a, b) in p.iter().zip(base.iter()) {
            assert!((a - b).abs() / b < 0.05, "w={w} g={g}: {a} vs {b}");
        }
    }
}

#[test]
fn neumann_boundary_changes_edge_profile_little() {
    let cs = CrossSection::pad_edge(50.0, 50.0, 0.12).unwrap();
    let a = normalized_profile(&solve(&cs, Resolution::Coarse), 1.0);
    let b = normalized_profile(&solve(&cs.clone().with_boundary(Boundary::Neumann), Resolution::Coarse), 1.0);
    for (x, y) in a.iter().zip(b.iter()) {
        assert!((x - y).abs() / x < 0.05);
    }
}

#[test]
fn zero_potentials_are_degenerate() {
    let mut cs = CrossSection::pad_edge(20.0, 20.0, 0.12).unwrap();
    for c in cs.conductors.iter_mut() {
        c.potential = 0.0;
    }
    assert!(matches!(solve_cross_section(&cs, Resolution::Coarse), Err(Error::Degenerate(_))));
}

#[test]
fn small_domain_is_rejected() {
    let mut cs = CrossSection::pad_edge(20.0, 20.0, 0.12).unwrap();
    cs.domain.x1 = 25.0;
    assert!(solve_cross_section(&cs, Resolution::Coarse).is_err());
}

#[test]
fn coarse_densities_scale_with_voltage_squared() {
    let d = builtin_design("regular").unwrap();
    let (a, b) = (coarse_surface_fields(&d, 1.0).unwrap(), coarse_surface_fields(&d, 2.0).unwrap());
    assert_eq!(b.total_energy, 4.0 * a.total_energy);
    for (p, q) in a.patches.iter().zip(b.patches.iter()) {
        for (x, y) in p.values.iter().zip(q.values.iter()) {
            assert!((4.0 * x - y).abs() <= 1e-12 * y.abs().max(1e-300));
        }
    }
}

#[test]
fn coarse_zero_excitation_is_an_error() {
    let d = builtin_design("regular").unwrap();
    assert!(matches!(coarse_surface_fields(&d, 0.0), Err(Error::Degenerate(_))));
}

#[test]
fn wiring_field_exceeds_pad_centre_field() {
    for d in builtin_designs() {
        let m = coarse_surface_fields(&d, 1.0).unwrap();
        let peak = |e: MapElement, r: RegionKind| {
            m.patches_of(e, InterfaceKind::Ms, r).flat_map(|p| p.values.iter()).fold(0.0f64, |a, &b| a.max(b))
        };
        let centre = m.patches_of(MapElement::Pads, InterfaceKind::Ms, RegionKind::Inner).next().unwrap();
        let mid = centre.value(centre.xs.len() / 2, centre.ys.len() / 2);
        let leads_profile: Vec<f64> =
            m.patches_of(MapElement::Leads, InterfaceKind::Ms, RegionKind::Band).flat_map(|p| p.profile()).collect();
        let mut sorted = leads_profile.clone();
        sorted.sort_by(f64::total_cmp);
        let leads_median = sorted[sorted.len() / 2];
        assert!(leads_median > 10.0 * mid, "{}: {leads_median} vs {mid}", d.design_label);
        assert!(peak(MapElement::Squid, RegionKind::Band) > peak(MapElement::Pads, RegionKind::Inner));
    }
}

#[test]
fn charging_energy_of_88_ff() {
    let e_c = charging_energy_mhz(88e-15);
    let want = 1.602176634e-19f64.powi(2) / (2.0 * 88e-15) / 6.62607015e-34 / 1e6;
    assert!((e_c - want).abs() < 1e-9 * want);
    assert!((e_c - 220.0).abs() < 1.0);
    assert!((capacitance_for_charging_energy(e_c) - 88e-15).abs() < 1e-27);
}

#[test]
fn capacitance_is_independent_of_excitation() {
    let d = builtin_design("wide").unwrap();
    let opt = CoarseOptions::default();
    let a = CoarseSolution::solve(&d, 1.0, &opt).unwrap().capacitance();
    let b = CoarseSolution::solve(&d, 2.0, &opt).unwrap().capacitance();
    assert!((a - b).abs() <= 1e-12 * a);
    assert_eq!(charging_energy_mhz(a), capacitance(&d).unwrap().e_c_mhz);
}

#[test]
fn capacitance_scales_with_size() {
    let d = builtin_design("regular").unwrap();
    let c1 = capacitance(&d).unwrap().c;
    let c2 = capacitance(&d.scaled(2.0)).unwrap().c;
    assert!((c2 / c1 - 2.0).abs() < 0.3, "ratio {}", c2 / c1);
}

#[test]
fn field_map_file_round_trip() {
    let d = builtin_design("long").unwrap();
    let m = coarse_surface_fields_with(&d, 1.0, &CoarseOptions::export(), &InterfaceKind::ALL.map(surfloss::geometry::InterfaceSpec::participation_default)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("map.csv");
    export_field_map(&m, &path).unwrap();
    assert_eq!(import_field_map(&path).unwrap(), m);
}

#[test]
fn missing_field_map_names_the_path() {
    let err = import_field_map(std::path::Path::new("/nonexistent/map.csv")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/map.csv"));
}
