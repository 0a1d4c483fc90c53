use std::fmt::Write as _;

use super::{ci68_halfwidth, predict_q, LossTangentEstimate, ParticipationMatrix, QStatistics};
use crate::error::{Error, Result};
use crate::geometry::{reference_dataset, Process, ReferenceDataset};
use crate::svg::{Chart, Scale, Series, PALETTE};

pub const REPORT_HEADER: &str = "qubit,design,process,q_predicted,q_pred_ci,q_measured,q_meas_ci";

/// A measured qubit and the row of the participation matrix it uses.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportQubit {
    pub qubit: String,
    pub design_row: usize,
    pub process: Process,
    pub measured: QStatistics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub qubit: String,
    pub design: String,
    pub process: Process,
    pub q_predicted: f64,
    pub q_pred_ci: f64,
    pub q_measured: f64,
    pub q_meas_ci: f64,
}

impl PredictionRow {
    pub fn ratio(&self) -> f64 {
        self.q_predicted / self.q_measured
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub rows: Vec<PredictionRow>,
}

impl PredictionReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(REPORT_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:e},{:e},{:e},{:e}",
                r.qubit,
                r.design,
                r.process.as_str(),
                r.q_predicted,
                r.q_pred_ci,
                r.q_measured,
                r.q_meas_ci
            );
        }
        s
    }

    pub fn max_relative_error(&self) -> f64 {
        self.rows.iter().map(|r| (r.ratio() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Predicted against measured Q, one series per process, with the
    /// identity line.
    pub fn to_svg(&self) -> String {
        let mut chart = Chart::new("Predicted vs measured Q", "measured Q", "predicted Q");
        chart.x_scale = Scale::Log;
        chart.y_scale = Scale::Log;
        chart.identity_line = true;
        let mut processes: Vec<Process> = Vec::new();
        for r in &self.rows {
            if !processes.contains(&r.process) {
                processes.push(r.process);
            }
        }
        for (k, p) in processes.iter().enumerate() {
            let rows: Vec<&PredictionRow> = self.rows.iter().filter(|r| r.process == *p).collect();
            let pts = rows.iter().map(|r| [r.q_measured, r.q_predicted]).collect();
            let err = rows.iter().map(|r| [r.q_meas_ci, r.q_pred_ci]).collect();
            chart.series.push(Series::scatter(p.as_str(), PALETTE[(k + 1) % PALETTE.len()], pts).with_errors(err));
        }
        chart.render()
    }
}

/// Predicted Q and its 68% half-width. Uses the Monte Carlo samples when
/// present; otherwise first-order propagation with independent tangents.
fn propagate(row: &[f64], est: &LossTangentEstimate) -> Result<(f64, f64)> {
    let q = predict_q(row, &est.central)?;
    if !est.samples.is_empty() {
        let qs: Vec<f64> = est
            .samples
            .iter()
            .filter_map(|t| {
                let s: f64 = row.iter().zip(t).map(|(p, v)| p * v).sum();
                (s > 0.0).then(|| 1.0 / s)
            })
            .collect();
        return Ok((q, ci68_halfwidth(&qs)));
    }
    let var: f64 = row.iter().zip(&est.ci68).map(|(p, e)| (p * e).powi(2)).sum();
    Ok((q, q * q * var.sqrt()))
}

/// Compares predictions from the estimate matching each qubit's process
/// with the measured medians.
pub fn prediction_report(
    p: &ParticipationMatrix,
    design_labels: &[&str],
    estimates: &[LossTangentEstimate],
    qubits: &[ReportQubit],
) -> Result<PredictionReport> {
    if qubits.is_empty() {
        return Err(Error::invalid("prediction report", "no measured qubits"));
    }
    if design_labels.len() != p.rows.len() {
        return Err(Error::invalid(
            "prediction report",
            format!("{} design labels for {} participation rows", design_labels.len(), p.rows.len()),
        ));
    }
    let mut rows = Vec::with_capacity(qubits.len());
    for q in qubits {
        let prow = p.rows.get(q.design_row).ok_or_else(|| {
            Error::invalid("prediction report", format!("{}: design row {} out of range", q.qubit, q.design_row))
        })?;
        let est = estimates
            .iter()
            .find(|e| e.process == q.process)
            .ok_or_else(|| Error::invalid("prediction report", format!("{}: no {} estimate", q.qubit, q.process.as_str())))?;
        if est.central.len() != prow.len() {
            return Err(Error::invalid(
                "prediction report",
                format!("{} tangents for {} elements", est.central.len(), prow.len()),
            ));
        }
        let (q_predicted, q_pred_ci) = propagate(prow, est)?;
        rows.push(PredictionRow {
            qubit: q.qubit.clone(),
            design: design_labels[q.design_row].to_string(),
            process: q.process,
            q_predicted,
            q_pred_ci,
            q_measured: q.measured.median,
            q_meas_ci: q.measured.std,
        });
    }
    Ok(PredictionReport { rows })
}

/// Element names in participation-table column order.
pub const REFERENCE_ELEMENTS: [&str; 3] = ["pads", "leads", "SQUID"];

/// Published participation table as a matrix, rows in design order.
pub fn reference_matrix(r: &ReferenceDataset) -> ParticipationMatrix {
    let rows = (0..3).map(|d| r.participation_row(d).to_vec()).collect();
    ParticipationMatrix::new(rows, REFERENCE_ELEMENTS.iter().map(|e| e.to_string()).collect()).expect("3×3 table")
}

/// Six-qubit comparison from the published participations, tangents and
/// medians. Measured spreads are not tabulated and are reported as 0.
pub fn reference_prediction_report() -> Result<PredictionReport> {
    let r = reference_dataset();
    let estimates: Vec<LossTangentEstimate> = [Process::LiftOff, Process::Etch]
        .into_iter()
        .map(|pr| LossTangentEstimate::from_table(&REFERENCE_ELEMENTS, &r.loss_tangents(pr), pr))
        .collect();
    let qubits = r
        .measured_median_q
        .iter()
        .map(|m| {
            Ok(ReportQubit {
                qubit: m.name.into(),
                design_row: r.design_index(m.design).expect("reference design"),
                process: m.process,
                measured: QStatistics::new(m.name, m.median_q, 0.0)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    prediction_report(&reference_matrix(&r), &r.designs, &estimates, &qubits)
}

#[cfg(test)]
mod tests {
    use super::super::{extract_tangents, ExtractOptions};
    use super::*;

    fn matrix() -> ParticipationMatrix {
        ParticipationMatrix::new(
            vec![vec![1.852e-4, 3.312e-4, 0.613e-4], vec![1.938e-4, 1.247e-4, 0.694e-4], vec![2.086e-4, 0.652e-4, 0.724e-4]],
            vec!["pads".into(), "leads".into(), "SQUID".into()],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_returns_generating_q() {
        let p = matrix();
        let q = [1.5e6, 2.5e6, 3.5e6];
        let stats: Vec<QStatistics> = q.iter().map(|&v| QStatistics::new("q", v, 0.0).unwrap()).collect();
        let est = extract_tangents(&p, &stats, &ExtractOptions { n_samples: 1, ..Default::default() }).unwrap();
        let qubits: Vec<ReportQubit> = stats
            .iter()
            .enumerate()
            .map(|(i, s)| ReportQubit { qubit: format!("q{i}"), design_row: i, process: Process::Simulated, measured: s.clone() })
            .collect();
        let r = prediction_report(&p, &["a", "b", "c"], &[est], &qubits).unwrap();
        assert!(r.max_relative_error() < 1e-12);
        assert!(r.rows.iter().all(|row| row.q_pred_ci == 0.0));
    }

    #[test]
    fn empty_and_mismatched_inputs_fail() {
        let p = matrix();
        let est = LossTangentEstimate::from_table(&["pads", "leads", "SQUID"], &[(1e-3, 0.0); 3], Process::Etch);
        assert!(prediction_report(&p, &["a", "b", "c"], &[est.clone()], &[]).is_err());
        let q = ReportQubit {
            qubit: "x".into(),
            design_row: 0,
            process: Process::Etch,
            measured: QStatistics::new("x", 1e6, 0.0).unwrap(),
        };
        assert!(prediction_report(&p, &["a", "b"], &[est.clone()], &[q.clone()]).is_err());
        let short = LossTangentEstimate::from_table(&["pads"], &[(1e-3, 0.0)], Process::Etch);
        assert!(prediction_report(&p, &["a", "b", "c"], &[short], &[q.clone()]).is_err());
        let lift = ReportQubit { process: Process::LiftOff, ..q };
        assert!(prediction_report(&p, &["a", "b", "c"], &[est], &[lift]).is_err());
    }

    #[test]
    fn linear_propagation_without_samples() {
        let p = matrix();
        let est = LossTangentEstimate::from_table(&["pads", "leads", "SQUID"], &[(1e-3, 1e-4), (1e-3, 0.0), (1e-3, 0.0)], Process::Etch);
        let (q, ci) = propagate(&p.rows[0], &est).unwrap();
        assert!((ci - q * q * 1.852e-4 * 1e-4).abs() < 1e-9 * ci);
    }

    #[test]
    fn svg_has_one_marker_per_row() {
        let p = matrix();
        let est = LossTangentEstimate::from_table(&["pads", "leads", "SQUID"], &[(1e-3, 1e-4); 3], Process::Etch);
        let qubits: Vec<ReportQubit> = (0..3)
            .map(|i| ReportQubit {
                qubit: format!("q{i}"),
                design_row: i,
                process: Process::Etch,
                measured: QStatistics::new("q", 2e6, 1e5).unwrap(),
            })
            .collect();
        let r = prediction_report(&p, &["a", "b", "c"], &[est], &qubits).unwrap();
        assert_eq!(r.to_svg().matches("<circle").count(), 3);
        assert_eq!(r.to_csv().lines().count(), 4);
    }
}
