use std::fmt::Write as _;
use std::path::Path;

use surfloss::fields::{coarse_surface_fields, import_field_map, Resolution};
use surfloss::geometry::{builtin_design, load_design, reference_dataset, Process, QubitDesign};
use surfloss::participation::{
    participation_breakdown, participation_layers, reference_field_map, reference_scaling_factors, sweep, ParticipationBreakdown,
    Provenance, ScalingFactors, SweepOptions, SweepParameter, SweepPoint, PARTICIPATION_HEADER,
};
use surfloss::sle::{
    extract_tangents, parse_estimates, parse_measured, parse_participation, parse_qstats, prediction_report, qstats_to_csv,
    reference_matrix, reference_prediction_report, ExtractOptions, ExtractionMode, LossTangentEstimate, PredictionReport,
    QStatistics, Weighting, REFERENCE_ELEMENTS,
};
use surfloss::spectra::{load_t1_records, mask_with_dips, spectrum_stats, simulation_stats, PointMask, QSpectrum};
use surfloss::svg::{histogram, Chart, Scale, Series, PALETTE};
use surfloss::tlsbath::{simulate_designs, DesignInput, DesignSimulation, DipoleOrientation, SimulationOptions};

use crate::{
    Cli, CliError, CliResult, Command, ExtractArgs, MaskArgs, ModeArg, OrientationArg, Output, ParticipationArgs, PredictArgs,
    ReportArgs, SimArgs, SolveArgs, SpectrumCommand, TlsSimArgs, WeightingArg,
};

pub(crate) fn dispatch(cli: &Cli, out: &mut Output) -> CliResult<()> {
    let res: Resolution = cli.resolution.into();
    match &cli.command {
        Command::Participation(a) => participation(a, res, out),
        Command::TlsSim(a) => tls_sim(a, cli.seed, out),
        Command::Extract(a) => extract(a, cli.seed, out),
        Command::Predict(a) => predict(a, out),
        Command::Spectrum(s) => spectrum(s, out),
        Command::Report(a) => report(a, cli.seed, out),
    }
}

fn builtin(label: &str) -> CliResult<QubitDesign> {
    builtin_design(label).ok_or_else(|| CliError::Usage(format!("unknown bundled design '{label}' (long, regular, wide)")))
}

const BUILTINS: [&str; 3] = ["long", "regular", "wide"];

fn participation(a: &ParticipationArgs, res: Resolution, out: &mut Output) -> CliResult<()> {
    let labels: Vec<String> = if a.builtin.is_empty() && a.design.is_none() {
        BUILTINS.iter().map(|s| s.to_string()).collect()
    } else {
        a.builtin.clone()
    };
    let designs: Vec<QubitDesign> = match &a.design {
        Some(p) => vec![load_design(p)?],
        None => labels.iter().map(|l| builtin(l)).collect::<CliResult<_>>()?,
    };
    if let Some(sw) = &a.sweep {
        return participation_sweep(&designs[0], &sw[0], &sw[1], res, out);
    }
    if a.field_map.is_some() && designs.len() != 1 {
        return Err(CliError::Usage("--field-map needs exactly one design".into()));
    }
    let mut csv = format!("{PARTICIPATION_HEADER},provenance\n");
    let mut summary = String::from("design      pads      leads     SQUID     (×10⁻⁴)  source\n");
    for d in &designs {
        let label = d.design_label.as_str();
        let b = breakdown(a, d, res)?;
        for line in b.to_csv_rows(label).lines() {
            let _ = writeln!(csv, "{line},{}", b.provenance.as_str());
        }
        let t = b.totals.map(|v| v * 1e4);
        let _ = writeln!(summary, "{label:<10} {:>8.4}  {:>8.4}  {:>8.4}            {}", t[0], t[1], t[2], b.provenance.as_str());
    }
    out.csv("participation.csv", &csv)?;
    print!("{summary}");
    Ok(())
}

fn breakdown(a: &ParticipationArgs, d: &QubitDesign, res: Resolution) -> CliResult<ParticipationBreakdown> {
    let label = d.design_label.as_str();
    let bundled = a.design.is_none();
    let layers = participation_layers();
    if a.reference {
        let i = reference_dataset()
            .design_index(label)
            .filter(|_| bundled)
            .ok_or_else(|| CliError::Usage("--reference needs a bundled design".into()))?;
        return Ok(ParticipationBreakdown::from_reference(i)?);
    }
    let factors = match (bundled && !a.compute).then(|| reference_scaling_factors(label)).flatten() {
        Some(f) => f,
        None => ScalingFactors::compute(d, res)?,
    };
    if let Some(p) = &a.field_map {
        return Ok(participation_breakdown(&import_field_map(p)?, &factors, &layers, Provenance::ImportedField)?);
    }
    if bundled && !a.compute {
        return Ok(participation_breakdown(&reference_field_map(label)?, &factors, &layers, Provenance::ImportedField)?);
    }
    Ok(participation_breakdown(&coarse_surface_fields(d, 1.0)?, &factors, &layers, Provenance::Computed)?)
}

/// `start:stop:step`, inclusive of `stop`.
fn parse_range(s: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("range '{s}' must be START:STOP:STEP with STEP > 0"));
    let v: Vec<f64> = s.split(':').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [a, b, h] = v[..] else { return Err(bad()) };
    if !(h > 0.0 && b >= a) {
        return Err(bad());
    }
    let n = ((b - a) / h + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| a + h * i as f64).collect())
}

fn participation_sweep(template: &QubitDesign, param: &str, range: &str, res: Resolution, out: &mut Output) -> CliResult<()> {
    let parameter = SweepParameter::parse(param)
        .ok_or_else(|| CliError::Usage(format!("unknown sweep parameter '{param}' (gap, lead-width)")))?;
    let values = parse_range(range)?;
    let opt = SweepOptions { resolution: res, ..Default::default() };
    let points = sweep(template, parameter, &values, &opt)?;
    let mut csv = String::from("param_value,p_pads_norm,p_wiring_norm,pad_width_um,e_c_MHz\n");
    for p in &points {
        let _ = writeln!(csv, "{},{:e},{:e},{},{}", p.value, p.p_pads_norm, p.p_wiring_norm, p.pad_width, p.e_c_mhz);
    }
    let name = parameter.as_str();
    out.csv(&format!("sweep_{name}.csv"), &csv)?;
    out.svg(&format!("sweep_{name}.svg"), &sweep_chart(name, &points).render())?;
    for p in &points {
        println!("{name} = {:>7.2}  pads {:.3}  wiring {:.3}", p.value, p.p_pads_norm, p.p_wiring_norm);
    }
    Ok(())
}

fn sweep_chart(name: &str, points: &[SweepPoint]) -> Chart {
    let mut c = Chart::new(&format!("Participation vs {name}"), &format!("{name} (μm)"), "normalized participation");
    c.series.push(Series::line("pads", PALETTE[0], points.iter().map(|p| [p.value, p.p_pads_norm]).collect()));
    c.series.push(Series::line("wiring", PALETTE[1], points.iter().map(|p| [p.value, p.p_wiring_norm]).collect()));
    c
}

fn design_inputs(labels: &[String]) -> CliResult<Vec<DesignInput>> {
    labels
        .iter()
        .map(|l| {
            Ok(DesignInput {
                label: l.clone(),
                design: builtin(l)?,
                map: reference_field_map(l)?,
                factors: reference_scaling_factors(l).ok_or_else(|| CliError::Usage(format!("no bundled factors for '{l}'")))?,
            })
        })
        .collect()
}

fn simulate(a: &SimArgs, seed: u64) -> CliResult<Vec<DesignSimulation>> {
    let mut opt = SimulationOptions { trials: a.trials as usize, ..Default::default() };
    opt.ensemble.seed = seed;
    if let Some(rho) = a.density {
        opt.ensemble.density = rho;
    }
    opt.ensemble.orientation = match a.orientation {
        OrientationArg::Aligned => DipoleOrientation::Aligned,
        OrientationArg::Isotropic => DipoleOrientation::Isotropic,
    };
    Ok(simulate_designs(&design_inputs(&a.designs)?, &opt)?)
}

fn q_histogram(sims: &[DesignSimulation]) -> Chart {
    let mut c = Chart::new("Simulated Q distribution", "Q (10⁶)", "count");
    for (k, s) in sims.iter().enumerate() {
        let q: Vec<f64> = s.all_q().iter().map(|v| v * 1e-6).collect();
        let color = PALETTE[k % PALETTE.len()];
        c.bars.extend(histogram(&q, 40).into_iter().map(|(lo, hi, n)| (lo, hi, n, color.to_string())));
        c.series.push(Series::line(&s.label, color, Vec::new()));
    }
    c
}

fn masked_stats(sims: &[DesignSimulation], mask: &MaskArgs) -> CliResult<Vec<QStatistics>> {
    Ok(sims.iter().map(|s| simulation_stats(s, mask.err_threshold, &mask.dip_params())).collect::<surfloss::Result<_>>()?)
}

fn tls_sim(a: &TlsSimArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let sims = simulate(&a.sim, seed)?;
    for s in &sims {
        out.csv(&format!("spectrum_{}.csv", s.label), &s.to_csv())?;
        if a.dump_ensemble {
            out.csv(&format!("ensemble_{}.csv", s.label), &s.first_ensemble.to_csv())?;
        }
    }
    let stats = masked_stats(&sims, &a.mask)?;
    out.csv("medians.csv", &qstats_to_csv(&stats))?;
    out.svg("histogram.svg", &q_histogram(&sims).render())?;
    for (s, st) in sims.iter().zip(&stats) {
        println!(
            "{:<8} median Q {:.3e} (masked {:.3e} ± {:.2e})  leads {:.0}/GHz  SQUID {:.0}/GHz",
            s.label,
            s.median_q(),
            st.median,
            st.std,
            s.counts_per_ghz[2],
            s.counts_per_ghz[3]
        );
    }
    Ok(())
}

fn options(s: &SolveArgs, seed: u64, process: Process) -> ExtractOptions {
    ExtractOptions {
        n_samples: s.n_samples as usize,
        seed,
        mode: match s.mode {
            ModeArg::Unconstrained => ExtractionMode::Unconstrained,
            ModeArg::NonNegative => ExtractionMode::NonNegative,
        },
        weighting: match s.weighting {
            WeightingArg::Unweighted => Weighting::Unweighted,
            WeightingArg::InverseVariance => Weighting::InverseVariance,
        },
        process,
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Core(surfloss::Error::Io { path: path.to_path_buf(), source: e }))
}

fn with_context<T>(r: surfloss::Result<T>, path: &Path) -> CliResult<T> {
    r.map_err(|e| match e {
        surfloss::Error::Parse { message, .. } => surfloss::Error::Parse { context: path.display().to_string(), message }.into(),
        other => other.into(),
    })
}

/// Orders `stats` like `designs`; the label sets must match.
fn match_labels(designs: &[String], stats: Vec<QStatistics>) -> CliResult<Vec<QStatistics>> {
    let missing: Vec<&str> = designs.iter().filter(|d| !stats.iter().any(|s| &s.label == *d)).map(String::as_str).collect();
    let extra: Vec<&str> = stats.iter().filter(|s| !designs.contains(&s.label)).map(|s| s.label.as_str()).collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(surfloss::Error::Invalid {
            what: "design labels".into(),
            reason: format!("missing Q statistics for [{}]; no participations for [{}]", missing.join(", "), extra.join(", ")),
        }
        .into());
    }
    Ok(designs.iter().map(|d| stats.iter().find(|s| &s.label == d).cloned().expect("checked")).collect())
}

fn estimate_table(e: &LossTangentEstimate) -> String {
    let mut s = format!("loss tangents ({}), condition number {:.1}\n", e.process.as_str(), e.condition_number);
    s.push_str("element    tanδ (×10⁻⁴)   68% CI (×10⁻⁴)   at median (×10⁻⁴)\n");
    for (i, el) in e.elements.iter().enumerate() {
        let _ = writeln!(s, "{el:<10} {:>12.2}   {:>14.2}   {:>17.2}", e.central[i] * 1e4, e.ci68[i] * 1e4, e.at_median[i] * 1e4);
    }
    if e.rejected > 0 {
        let _ = writeln!(s, "{} samples rejected by the Q > 0 truncation", e.rejected);
    }
    s
}

fn extract(a: &ExtractArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let (designs, p) = with_context(parse_participation(&read(&a.participation)?), &a.participation)?;
    let stats = match_labels(&designs, with_context(parse_qstats(&read(&a.qstats)?), &a.qstats)?)?;
    let est = extract_tangents(&p, &stats, &options(&a.solve, seed, a.process.into()))?;
    out.csv("estimates.csv", &est.to_csv())?;
    print!("{}", estimate_table(&est));
    Ok(())
}

fn print_report(r: &PredictionReport) {
    println!("qubit  design    process     Q predicted   Q measured   ratio");
    for row in &r.rows {
        println!(
            "{:<6} {:<9} {:<10} {:>11.3e}  {:>11.3e}  {:>6.3}",
            row.qubit,
            row.design,
            row.process.as_str(),
            row.q_predicted,
            row.q_measured,
            row.ratio()
        );
    }
    println!("max |predicted/measured − 1| = {:.3}", r.max_relative_error());
}

fn predict(a: &PredictArgs, out: &mut Output) -> CliResult<()> {
    let report = if a.reference {
        reference_prediction_report()?
    } else {
        let (pp, ep, mp) = (a.participation.as_deref(), a.estimates.as_deref(), a.measured.as_deref());
        let (Some(pp), Some(ep), Some(mp)) = (pp, ep, mp) else {
            return Err(CliError::Usage("--participation, --estimates and --measured are required without --reference".into()));
        };
        let (designs, p) = with_context(parse_participation(&read(pp)?), pp)?;
        let estimates = with_context(parse_estimates(&read(ep)?), ep)?;
        let qubits = with_context(parse_measured(&read(mp)?, &designs), mp)?;
        let labels: Vec<&str> = designs.iter().map(String::as_str).collect();
        prediction_report(&p, &labels, &estimates, &qubits)?
    };
    out.csv("prediction.csv", &report.to_csv())?;
    out.svg("prediction.svg", &report.to_svg())?;
    print_report(&report);
    Ok(())
}

fn spectrum_chart(title: &str, s: &QSpectrum) -> Chart {
    let mut c = Chart::new(title, "f (GHz)", "Q");
    c.y_scale = Scale::Log;
    for (k, flag) in [PointMask::Kept, PointMask::Parasitic, PointMask::HighError].into_iter().enumerate() {
        let pts: Vec<[f64; 2]> = (0..s.len()).filter(|&i| s.mask[i] == flag).map(|i| [s.f_ghz[i], s.q[i]]).collect();
        if !pts.is_empty() {
            c.series.push(Series::scatter(flag.as_str(), PALETTE[k], pts));
        }
    }
    c
}

fn spectrum(cmd: &SpectrumCommand, out: &mut Output) -> CliResult<()> {
    match cmd {
        SpectrumCommand::Fit { input } => {
            let records = load_t1_records(input)?;
            let (spec, failed) = QSpectrum::from_records(&records)?;
            for (f, e) in &failed {
                eprintln!("skipped {f} GHz: {e}");
            }
            out.csv("spectrum.csv", &spec.to_csv())?;
            out.svg("spectrum.svg", &spectrum_chart("Fitted Q spectrum", &spec).render())?;
            println!("{} of {} frequencies fitted", spec.len(), records.len());
        }
        SpectrumCommand::Mask { input, mask } => {
            let spec = QSpectrum::load(input)?;
            let (m, dips) = mask_with_dips(&spec, mask.err_threshold, &mask.dip_params());
            out.csv("masked.csv", &m.to_csv())?;
            out.svg("masked.svg", &spectrum_chart("Masked Q spectrum", &m).render())?;
            for d in &dips {
                println!("dip at {:.5} GHz, FWHM {:.2} MHz, depth {:.3e} in 1/Q", d.f0_ghz, d.fwhm_ghz * 1e3, d.depth);
            }
            println!(
                "{} kept, {} parasitic, {} high-error",
                m.count(PointMask::Kept),
                m.count(PointMask::Parasitic),
                m.count(PointMask::HighError)
            );
        }
        SpectrumCommand::Stats { input, label } => {
            let spec = QSpectrum::load(input)?;
            let label = label.clone().unwrap_or_else(|| input.file_stem().map_or("spectrum".into(), |s| s.to_string_lossy().into_owned()));
            let st = spectrum_stats(&label, &spec)?;
            out.csv("qstats.csv", &qstats_to_csv(std::slice::from_ref(&st)))?;
            println!("{label}: median Q {:.3e}, std {:.3e}, {} points", st.median, st.std, st.count);
        }
    }
    Ok(())
}

fn report(a: &ReportArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let reference = reference_prediction_report()?;
    out.csv("prediction.csv", &reference.to_csv())?;
    out.svg("prediction.svg", &reference.to_svg())?;

    let r = reference_dataset();
    let mut md = String::from("# Surface loss report\n\n## Participation (×10⁻⁴)\n\n| design | pads | leads | SQUID |\n|---|---|---|---|\n");
    for (d, label) in r.designs.iter().enumerate() {
        let row = r.participation_row(d).map(|v| v * 1e4);
        let _ = writeln!(md, "| {label} | {:.3} | {:.3} | {:.3} |", row[0], row[1], row[2]);
    }
    md.push_str("\n## Predicted vs measured Q\n\n| qubit | design | process | predicted | measured | ratio |\n|---|---|---|---|---|---|\n");
    for row in &reference.rows {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {:.3e} | {:.3e} | {:.3} |",
            row.qubit,
            row.design,
            row.process.as_str(),
            row.q_predicted,
            row.q_measured,
            row.ratio()
        );
    }
    let _ = writeln!(md, "\nLargest deviation {:.1}%.", 100.0 * reference.max_relative_error());

    let sims = simulate(&a.sim, seed)?;
    let stats = masked_stats(&sims, &default_mask())?;
    out.csv("medians.csv", &qstats_to_csv(&stats))?;
    out.svg("histogram.svg", &q_histogram(&sims).render())?;
    let _ = writeln!(md, "\n## TLS simulation ({} trials, seed {seed})\n\n| design | median Q | masked median | std |\n|---|---|---|---|", a.sim.trials);
    for (s, st) in sims.iter().zip(&stats) {
        let _ = writeln!(md, "| {} | {:.3e} | {:.3e} | {:.2e} |", s.label, s.median_q(), st.median, st.std);
    }

    if a.sim.designs.len() == 3 && a.sim.designs.iter().zip(BUILTINS).all(|(d, b)| d == b) {
        let est = extract_tangents(&reference_matrix(&r), &stats, &options(&a.solve, seed, Process::Simulated))?;
        out.csv("estimates_simulated.csv", &est.to_csv())?;
        md.push_str("\n## Tangents from simulated spectra (×10⁻⁴)\n\n| element | central | 68% CI | at median | published |\n|---|---|---|---|---|\n");
        for (i, (v, e)) in r.loss_tangents(Process::Simulated).iter().enumerate() {
            let _ = writeln!(
                md,
                "| {} | {:.2} | {:.2} | {:.2} | {:.1} ± {:.1} |",
                REFERENCE_ELEMENTS[i],
                est.central[i] * 1e4,
                est.ci68[i] * 1e4,
                est.at_median[i] * 1e4,
                v * 1e4,
                e * 1e4
            );
        }
        let _ = writeln!(md, "\nCondition number of the participation matrix: {:.1}.", est.condition_number);
    }
    out.markdown("report.md", &md)?;
    print!("{md}");
    Ok(())
}

fn default_mask() -> MaskArgs {
    MaskArgs {
        err_threshold: surfloss::spectra::DEFAULT_ERROR_THRESHOLD,
        depth_mad: 3.0,
        min_width_bins: 3.0,
        window_bins: 101,
    }
}
