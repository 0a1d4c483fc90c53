use proptest::prelude::*;
use surfloss::fields::Resolution;
use surfloss::geometry::{builtin_design, InterfaceKind, MapElement};
use surfloss::participation::{reference_field_map, reference_scaling_factors};
use surfloss::tlsbath::*;

fn input(label: &str) -> DesignInput {
    DesignInput {
        label: label.into(),
        design: builtin_design(label).unwrap(),
        map: reference_field_map(label).unwrap(),
        factors: reference_scaling_factors(label).unwrap(),
    }
}

fn regions(d: &DesignInput, cfg: &TlsEnsembleConfig) -> TlsRegions {
    TlsRegions::build(&d.design, &d.map, &d.factors, &cfg.elements, Resolution::Coarse).unwrap()
}

#[test]
fn long_design_counts_match_published_numbers() {
    let d = input("long");
    let opt = SimulationOptions::default();
    let sims = simulate_designs(std::slice::from_ref(&d), &opt).unwrap();
    let [_, _, leads, squid] = sims[0].counts_per_ghz;
    assert!((leads / 4300.0 - 1.0).abs() < 0.25, "leads {leads}/GHz");
    assert!((squid / 950.0 - 1.0).abs() < 0.25, "SQUID {squid}/GHz");
}

#[test]
fn sampled_counts_follow_the_poisson_mean() {
    let d = input("regular");
    let cfg = TlsEnsembleConfig::default();
    let r = regions(&d, &cfg);
    let trials = 20;
    for e in STRONG_FIELD_ELEMENTS {
        let expected: f64 = InterfaceKind::ALL.iter().map(|&k| expected_count_per_ghz(&r, &cfg, e, k)).sum();
        let mut total = 0.0;
        for t in 0..trials {
            let ens = sample_ensemble(&r, &cfg, &mut trial_rng(7, t, 0)).unwrap();
            total += ens.count_per_ghz(e, cfg.band_mhz) * 1e-3 * cfg.band_mhz;
        }
        let mean = total / trials as f64 / (1e-3 * cfg.band_mhz);
        // Poisson spread 1/sqrt(N) plus up to 1% removed by the coupling limit
        let n = expected * 1e-3 * cfg.band_mhz * trials as f64;
        assert!((mean / expected - 1.0).abs() < 5.0 / n.sqrt() + 0.01, "{}: {mean} vs {expected}", e.as_str());
    }
}

#[test]
fn zero_density_gives_empty_ensemble_and_flat_spectrum() {
    let d = input("wide");
    let cfg = TlsEnsembleConfig { density: 0.0, ..Default::default() };
    let r = regions(&d, &cfg);
    let ens = sample_ensemble(&r, &cfg, &mut trial_rng(0, 0, 0)).unwrap();
    assert!(ens.defects.is_empty());
    let grid = band_grid(4.5, 300.0, 1.0).unwrap();
    let s = relaxation_spectrum(&ens.defects, 0.02, &grid).unwrap();
    assert!(s.gamma1_per_us.iter().all(|g| *g == 0.02));
}

#[test]
fn seeded_simulation_is_deterministic() {
    let d = [input("regular")];
    let mut opt = SimulationOptions { trials: 2, ..Default::default() };
    opt.ensemble.seed = 11;
    let a = simulate_designs(&d, &opt).unwrap();
    let b = simulate_designs(&d, &opt).unwrap();
    assert_eq!(a[0].spectra, b[0].spectra);
    assert_eq!(a[0].first_ensemble, b[0].first_ensemble);
    opt.ensemble.seed = 12;
    let c = simulate_designs(&d, &opt).unwrap();
    assert_ne!(a[0].spectra, c[0].spectra);
}

#[test]
fn design_results_do_not_depend_on_batch_order() {
    let opt = SimulationOptions { trials: 2, ..Default::default() };
    let both = simulate_designs(&[input("long"), input("wide")], &opt).unwrap();
    let wide_second = simulate_designs(&[input("regular"), input("wide")], &opt).unwrap();
    assert_eq!(both[1].spectra, wide_second[1].spectra);
}

#[test]
fn ensemble_mean_matches_loss_tangent_route() {
    let d = input("long");
    let cfg = TlsEnsembleConfig { orientation: DipoleOrientation::Isotropic, ..Default::default() };
    let r = regions(&d, &cfg);
    let grid = band_grid(4.5, cfg.band_mhz, 1.0).unwrap();
    let centre = [grid[grid.len() / 2]];
    let seeds = 200;
    let mut sum = 0.0;
    for s in 0..seeds {
        let ens = sample_ensemble(&r, &cfg, &mut trial_rng(s, 0, 0)).unwrap();
        sum += relaxation_spectrum(&ens.defects, 0.0, &centre).unwrap().gamma1_per_us[0];
    }
    let mean = sum / seeds as f64;
    let expected = expected_excess_rate(&d, &cfg, 4.5).unwrap();
    assert!((mean / expected - 1.0).abs() < 0.20, "mean {mean} vs {expected} μs⁻¹");
}

#[test]
fn aligned_dipoles_triple_the_expected_rate() {
    let d = input("long");
    let iso = TlsEnsembleConfig { orientation: DipoleOrientation::Isotropic, ..Default::default() };
    let aligned = TlsEnsembleConfig::default();
    let ratio = expected_excess_rate(&d, &aligned, 4.5).unwrap() / expected_excess_rate(&d, &iso, 4.5).unwrap();
    assert!((ratio - 3.0).abs() < 1e-12);
}

#[test]
fn median_q_orders_with_lead_participation() {
    let inputs = [input("long"), input("regular"), input("wide")];
    let sims = simulate_designs(&inputs, &SimulationOptions::default()).unwrap();
    let q: Vec<f64> = sims.iter().map(DesignSimulation::median_q).collect();
    assert!(q[0] < q[1] && q[1] < q[2], "{q:?}");
}

#[test]
fn leads_hold_a_minority_of_defects() {
    let sims = simulate_designs(&[input("long")], &SimulationOptions::default()).unwrap();
    let c = sims[0].counts_per_ghz;
    let wiring = (c[2] + c[3]) / c.iter().sum::<f64>();
    assert!(wiring > 0.1 && wiring < 0.3, "{wiring}");
}

fn defect(g: f64, gamma: f64, detuning: f64) -> TlsDefect {
    TlsDefect {
        element: MapElement::Leads,
        interface: InterfaceKind::Sa,
        position: [0.0, 0.0],
        dipole_debye: 2.6,
        detuning_mhz: detuning,
        gamma_tls_per_us: gamma,
        coupling_mhz: g,
    }
}

fn arb_defect() -> impl Strategy<Value = TlsDefect> {
    (1e-4f64..0.01, -150.0f64..150.0).prop_flat_map(|(g, det)| {
        let min_gamma = 2.0 * std::f64::consts::PI * g * 1.01;
        (min_gamma..min_gamma + 10.0).prop_map(move |gamma| defect(g, gamma, det))
    })
}

proptest! {
    #[test]
    fn excess_rates_add(a in prop::collection::vec(arb_defect(), 0..20), b in prop::collection::vec(arb_defect(), 0..20)) {
        let grid = band_grid(4.5, 300.0, 5.0).unwrap();
        let sa = relaxation_spectrum(&a, 0.0, &grid).unwrap();
        let sb = relaxation_spectrum(&b, 0.0, &grid).unwrap();
        let ab: Vec<TlsDefect> = a.iter().chain(&b).cloned().collect();
        let sab = relaxation_spectrum(&ab, 0.0, &grid).unwrap();
        for i in 0..grid.len() {
            let sum = sa.gamma1_per_us[i] + sb.gamma1_per_us[i];
            prop_assert!((sab.gamma1_per_us[i] - sum).abs() <= 1e-12 * sum.max(1e-300));
        }
    }

    #[test]
    fn adding_a_defect_never_lowers_the_rate(a in prop::collection::vec(arb_defect(), 0..20), extra in arb_defect(), bg in 0.0f64..0.1) {
        let grid = band_grid(4.5, 300.0, 5.0).unwrap();
        let before = relaxation_spectrum(&a, bg, &grid).unwrap();
        let mut more = a.clone();
        more.push(extra);
        let after = relaxation_spectrum(&more, bg, &grid).unwrap();
        for i in 0..grid.len() {
            prop_assert!(after.gamma1_per_us[i] >= before.gamma1_per_us[i]);
            prop_assert!(after.q[i] <= before.q[i]);
        }
    }
}
