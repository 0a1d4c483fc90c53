//! Surface loss extraction.
//!
//! Forward model 1/Q = Σ_e P_e tanδ_e per qubit; the inverse solves the
//! participation matrix for the element tangents in the least-squares
//! sense, with Monte Carlo resampling of the measured Q statistics.

mod io;
mod report;

pub use io::{
    parse_estimates, parse_measured, parse_participation, parse_qstats, qstats_to_csv, MEASURED_HEADER, QSTATS_HEADER,
};
pub use report::{
    prediction_report, reference_matrix, reference_prediction_report, PredictionReport, PredictionRow, ReportQubit,
    REFERENCE_ELEMENTS, REPORT_HEADER,
};

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::Process;

/// Summary of the Q values of one qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct QStatistics {
    pub label: String,
    pub median: f64,
    pub std: f64,
    pub count: usize,
    /// Frequency band of the samples, GHz.
    pub band_ghz: Option<(f64, f64)>,
}

impl QStatistics {
    pub fn new(label: impl Into<String>, median: f64, std: f64) -> Result<Self> {
        let s = QStatistics { label: label.into(), median, std, count: 1, band_ghz: None };
        s.validate()?;
        Ok(s)
    }

    /// Median and sample standard deviation of `q`.
    pub fn from_samples(label: impl Into<String>, q: &[f64]) -> Result<Self> {
        let label = label.into();
        if q.is_empty() {
            return Err(Error::invalid("Q statistics", format!("{label}: no samples")));
        }
        let mut v = q.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
        let s = QStatistics { label, median, std, count: n, band_ghz: None };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !(self.median > 0.0 && self.median.is_finite() && self.std >= 0.0 && self.std.is_finite()) {
            return Err(Error::invalid(
                "Q statistics",
                format!("{}: median {} must be > 0 and std {} ≥ 0", self.label, self.median, self.std),
            ));
        }
        Ok(())
    }
}

/// Q = 1 / Σ p_i tanδ_i.
pub fn predict_q(participations: &[f64], tangents: &[f64]) -> Result<f64> {
    if participations.len() != tangents.len() || participations.is_empty() {
        return Err(Error::invalid(
            "predict_q",
            format!("{} participations vs {} tangents", participations.len(), tangents.len()),
        ));
    }
    let s: f64 = participations.iter().zip(tangents).map(|(p, t)| p * t).sum();
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Degenerate(format!("loss sum Σ p·tanδ = {s}")));
    }
    Ok(1.0 / s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionMode {
    Unconstrained,
    /// Least squares with tanδ ≥ 0 in every sample.
    NonNegative,
}

impl ExtractionMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unconstrained" => Some(ExtractionMode::Unconstrained),
            "non-negative" | "nonnegative" | "nnls" => Some(ExtractionMode::NonNegative),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Unweighted,
    /// Rows weighted by Q²/σ_Q, the inverse spread of 1/Q.
    InverseVariance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOptions {
    pub n_samples: usize,
    pub seed: u64,
    pub mode: ExtractionMode,
    pub weighting: Weighting,
    pub process: Process,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            n_samples: 10_000,
            seed: 0,
            mode: ExtractionMode::Unconstrained,
            weighting: Weighting::Unweighted,
            process: Process::Simulated,
        }
    }
}

/// Central values and 68% intervals of the element tangents.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTangentEstimate {
    pub elements: Vec<String>,
    /// Mean over accepted samples.
    pub central: Vec<f64>,
    /// Half the 16th–84th percentile range.
    pub ci68: Vec<f64>,
    /// Solution of the median Q values.
    pub at_median: Vec<f64>,
    pub process: Process,
    pub samples: Vec<Vec<f64>>,
    pub rejected: usize,
    pub condition_number: f64,
}

pub const ESTIMATE_HEADER: &str = "element,tan_delta,ci68_halfwidth,process";

impl LossTangentEstimate {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(ESTIMATE_HEADER);
        s.push('\n');
        for (i, e) in self.elements.iter().enumerate() {
            let _ = writeln!(s, "{e},{:e},{:e},{}", self.central[i], self.ci68[i], self.process.as_str());
        }
        s
    }

    /// Estimate from tabulated values with no samples.
    pub fn from_table(elements: &[&str], values: &[(f64, f64)], process: Process) -> Self {
        LossTangentEstimate {
            elements: elements.iter().map(|s| s.to_string()).collect(),
            central: values.iter().map(|v| v.0).collect(),
            ci68: values.iter().map(|v| v.1).collect(),
            at_median: values.iter().map(|v| v.0).collect(),
            process,
            samples: Vec::new(),
            rejected: 0,
            condition_number: f64::NAN,
        }
    }
}

/// Participation matrix, one row per qubit and one column per element.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipationMatrix {
    pub rows: Vec<Vec<f64>>,
    pub elements: Vec<String>,
}

impl ParticipationMatrix {
    pub fn new(rows: Vec<Vec<f64>>, elements: Vec<String>) -> Result<Self> {
        let m = elements.len();
        if rows.is_empty() || m == 0 {
            return Err(Error::invalid("participation matrix", "empty"));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::invalid("participation matrix", format!("row of {} entries, expected {m}", r.len())));
        }
        if rows.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("participation matrix", "entries must be finite and ≥ 0"));
        }
        Ok(ParticipationMatrix { rows, elements })
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), self.elements.len(), |i, j| self.rows[i][j])
    }

    /// Ratio of extreme singular values.
    pub fn condition_number(&self) -> f64 {
        let sv = self.to_matrix().singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    }
}

/// Least-squares solver for one matrix; singular values below this
/// fraction of the largest count as zero.
const RANK_TOLERANCE: f64 = 1e-12;

struct Solver {
    a: DMatrix<f64>,
    svd: nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Solver {
    fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() < a.ncols() {
            return Err(Error::Singular { what: "participation matrix (fewer qubits than elements)".into(), condition: f64::INFINITY });
        }
        let svd = a.clone().svd(true, true);
        let max = svd.singular_values.max();
        let min = svd.singular_values.min();
        if !(min > RANK_TOLERANCE * max) {
            return Err(Error::Singular {
                what: "participation matrix".into(),
                condition: if min > 0.0 { max / min } else { f64::INFINITY },
            });
        }
        Ok(Solver { a, svd })
    }

    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.svd.solve(b, 0.0).expect("U and V were computed")
    }

    /// Lawson–Hanson active-set NNLS.
    fn solve_nonnegative(&self, b: &DVector<f64>) -> DVector<f64> {
        let x = self.solve(b);
        if x.iter().all(|v| *v >= 0.0) {
            return x;
        }
        let a = &self.a;
        let n = a.ncols();
        let mut x = DVector::zeros(n);
        let mut passive = vec![false; n];
        let tol = 1e-14 * a.norm() * b.norm().max(1e-300);
        for _ in 0..3 * n + 3 {
            let w = a.transpose() * (b - a * &x);
            let candidate = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
            let Some(j) = candidate else { break };
            passive[j] = true;
            loop {
                let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
                let sub = DMatrix::from_fn(a.nrows(), idx.len(), |r, c| a[(r, idx[c])]);
                let z_sub = sub.svd(true, true).solve(b, 0.0).expect("U and V were computed");
                let mut z = DVector::zeros(n);
                for (c, &k) in idx.iter().enumerate() {
                    z[k] = z_sub[c];
                }
                if idx.iter().all(|&k| z[k] > 0.0) {
                    x = z;
                    break;
                }
                let mut alpha = f64::INFINITY;
                for &k in &idx {
                    if z[k] <= 0.0 {
                        alpha = alpha.min(x[k] / (x[k] - z[k]));
                    }
                }
                x = &x + (&z - &x) * alpha;
                for &k in &idx {
                    if x[k] <= 1e-300 {
                        passive[k] = false;
                        x[k] = 0.0;
                    }
                }
            }
        }
        x
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let (i, t) = (h.floor() as usize, h - h.floor());
    if i + 1 < sorted.len() {
        sorted[i] + t * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Half the 16th–84th percentile range.
pub fn ci68_halfwidth(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    0.5 * (percentile(&v, 0.84) - percentile(&v, 0.16))
}

/// Draws from Normal(median, std) truncated to Q > 0; `None` after 1000
/// consecutive non-positive draws.
fn draw_q<R: Rng + ?Sized>(rng: &mut R, s: &QStatistics) -> Option<f64> {
    if s.std == 0.0 {
        return Some(s.median);
    }
    let n = Normal::new(s.median, s.std).expect("validated spread");
    (0..1000).map(|_| n.sample(rng)).find(|q| *q > 0.0)
}

/// Monte Carlo least-squares extraction of element tangents.
pub fn extract_tangents(p: &ParticipationMatrix, stats: &[QStatistics], opt: &ExtractOptions) -> Result<LossTangentEstimate> {
    if stats.len() != p.rows.len() {
        return Err(Error::invalid("extract_tangents", format!("{} Q statistics for {} qubits", stats.len(), p.rows.len())));
    }
    if opt.n_samples == 0 {
        return Err(Error::invalid("extract_tangents", "n_samples must be ≥ 1"));
    }
    for s in stats {
        s.validate()?;
    }
    let weights: Vec<f64> = match opt.weighting {
        Weighting::Unweighted => vec![1.0; stats.len()],
        Weighting::InverseVariance => {
            stats.iter().map(|s| if s.std > 0.0 { s.median * s.median / s.std } else { 1.0 }).collect()
        }
    };
    // scale weights to O(1) to keep the matrix well scaled
    let wmax = weights.iter().cloned().fold(0.0, f64::max);
    let weights: Vec<f64> = weights.iter().map(|w| w / wmax).collect();
    let a = DMatrix::from_fn(p.rows.len(), p.elements.len(), |i, j| weights[i] * p.rows[i][j]);
    let solver = Solver::new(a)?;
    let solve = |inv_q: &[f64]| {
        let b = DVector::from_fn(inv_q.len(), |i, _| weights[i] * inv_q[i]);
        match opt.mode {
            ExtractionMode::Unconstrained => solver.solve(&b),
            ExtractionMode::NonNegative => solver.solve_nonnegative(&b),
        }
    };
    let at_median: Vec<f64> = solve(&stats.iter().map(|s| 1.0 / s.median).collect::<Vec<_>>()).iter().copied().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
    let m = p.elements.len();
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(opt.n_samples);
    let mut rejected = 0;
    let mut inv_q = vec![0.0; stats.len()];
    for _ in 0..opt.n_samples {
        let mut ok = true;
        for (k, s) in stats.iter().enumerate() {
            match draw_q(&mut rng, s) {
                Some(q) => inv_q[k] = 1.0 / q,
                None => ok = false,
            }
        }
        if !ok {
            rejected += 1;
            continue;
        }
        samples.push(solve(&inv_q).iter().copied().collect());
    }
    if samples.is_empty() {
        return Err(Error::Degenerate("every Monte Carlo sample was rejected by the Q > 0 truncation".into()));
    }
    let mut central = vec![0.0; m];
    let mut ci68 = vec![0.0; m];
    for j in 0..m {
        let col: Vec<f64> = samples.iter().map(|s| s[j]).collect();
        central[j] = col.iter().sum::<f64>() / col.len() as f64;
        ci68[j] = ci68_halfwidth(&col);
    }
    Ok(LossTangentEstimate {
        elements: p.elements.clone(),
        central,
        ci68,
        at_median,
        process: opt.process,
        samples,
        rejected,
        condition_number: p.condition_number(),
    })
}
