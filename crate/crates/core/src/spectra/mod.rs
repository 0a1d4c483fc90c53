//! Measured-spectrum processing: T1 fits, T1→Q conversion, masking of
//! high-error points and parasitic dips, and Q statistics.

mod fit;
mod mask;

pub use fit::{fit_t1, T1Fit};
pub use mask::{mask_spectrum, mask_with_dips, Dip, DipParams, DEFAULT_ERROR_THRESHOLD};

use std::fmt::Write as _;
use std::f64::consts::PI;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::sle::QStatistics;
use crate::tlsbath::{DesignSimulation, RelaxationSpectrum};

/// Decay record at one qubit frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct T1Record {
    pub f_ghz: f64,
    pub delays_us: Vec<f64>,
    pub population: Vec<f64>,
    pub shots: Vec<u32>,
}

pub const T1_HEADER: &str = "f_GHz,delay_us,population,shots";
pub const SPECTRUM_CSV_HEADER: &str = "f_GHz,Q,rel_err,mask";

impl T1Record {
    pub fn validate(&self) -> Result<()> {
        let what = format!("T1 record at {} GHz", self.f_ghz);
        let n = self.delays_us.len();
        if self.population.len() != n || self.shots.len() != n {
            return Err(Error::invalid(what, "delay, population and shot columns differ in length"));
        }
        if n < 5 {
            return Err(Error::invalid(what, format!("{n} delays, need at least 5")));
        }
        if !(self.f_ghz > 0.0 && self.f_ghz.is_finite()) {
            return Err(Error::invalid(what, "frequency must be positive"));
        }
        if self.delays_us.windows(2).any(|w| !(w[1] > w[0])) || self.delays_us.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid(what, "delays must be finite and strictly increasing"));
        }
        if let Some(p) = self.population.iter().find(|p| !(-0.1..=1.1).contains(*p)) {
            return Err(Error::invalid(what, format!("population {p} outside [-0.1, 1.1]")));
        }
        Ok(())
    }
}

/// Q = 2π·f·T1 with f in GHz and T1 in μs.
pub fn t1_to_q(t1_us: f64, f_ghz: f64) -> Result<f64> {
    if !(t1_us > 0.0 && f_ghz > 0.0 && t1_us.is_finite() && f_ghz.is_finite()) {
        return Err(Error::invalid("t1_to_q", format!("T1 = {t1_us} μs and f = {f_ghz} GHz must be positive")));
    }
    Ok(2.0 * PI * f_ghz * 1e3 * t1_us)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointMask {
    Kept,
    Parasitic,
    HighError,
}

impl PointMask {
    pub fn as_str(self) -> &'static str {
        match self {
            PointMask::Kept => "kept",
            PointMask::Parasitic => "parasitic",
            PointMask::HighError => "high-error",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "kept" => Some(PointMask::Kept),
            "parasitic" => Some(PointMask::Parasitic),
            "high-error" => Some(PointMask::HighError),
            _ => None,
        }
    }
}

/// Q against frequency with a relative error and mask flag per point.
#[derive(Debug, Clone, PartialEq)]
pub struct QSpectrum {
    pub f_ghz: Vec<f64>,
    pub q: Vec<f64>,
    pub rel_err: Vec<f64>,
    pub mask: Vec<PointMask>,
}

impl QSpectrum {
    /// All points kept.
    pub fn new(f_ghz: Vec<f64>, q: Vec<f64>, rel_err: Vec<f64>) -> Result<Self> {
        let mask = vec![PointMask::Kept; f_ghz.len()];
        let s = QSpectrum { f_ghz, q, rel_err, mask };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.f_ghz.len();
        if self.q.len() != n || self.rel_err.len() != n || self.mask.len() != n {
            return Err(Error::invalid("Q spectrum", "columns differ in length"));
        }
        if self.f_ghz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("Q spectrum", "frequencies must be strictly increasing"));
        }
        if let Some(q) = self.q.iter().find(|q| !(**q > 0.0 && q.is_finite())) {
            return Err(Error::invalid("Q spectrum", format!("Q = {q} must be positive")));
        }
        if let Some(e) = self.rel_err.iter().find(|e| !(**e >= 0.0)) {
            return Err(Error::invalid("Q spectrum", format!("relative error {e} must be ≥ 0")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.f_ghz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f_ghz.is_empty()
    }

    pub fn kept(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.mask[i] == PointMask::Kept)
    }

    pub fn count(&self, flag: PointMask) -> usize {
        self.mask.iter().filter(|m| **m == flag).count()
    }

    /// Simulated spectrum with zero point errors.
    pub fn from_relaxation(s: &RelaxationSpectrum) -> Result<Self> {
        QSpectrum::new(s.f_ghz.clone(), s.q.clone(), vec![0.0; s.q.len()])
    }

    /// Fits every record; records whose fit fails are returned with the
    /// error instead of entering the spectrum.
    pub fn from_records(records: &[T1Record]) -> Result<(Self, Vec<(f64, Error)>)> {
        let mut rows = Vec::with_capacity(records.len());
        let mut failed = Vec::new();
        for r in records {
            match fit_t1(r).and_then(|fit| Ok((r.f_ghz, t1_to_q(fit.t1_us, r.f_ghz)?, fit.rel_err))) {
                Ok(row) => rows.push(row),
                Err(e) => failed.push((r.f_ghz, e)),
            }
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let s = QSpectrum::new(
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| r.2).collect(),
        )?;
        Ok((s, failed))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(SPECTRUM_CSV_HEADER);
        s.push('\n');
        for i in 0..self.len() {
            let _ = writeln!(s, "{},{:e},{:e},{}", self.f_ghz[i], self.q[i], self.rel_err[i], self.mask[i].as_str());
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            #[serde(rename = "f_GHz")]
            f: f64,
            #[serde(rename = "Q")]
            q: f64,
            rel_err: f64,
            mask: Option<String>,
        }
        let ctx = "Q spectrum";
        let mut rdr = reader(text);
        check_header(&mut rdr, ctx, &["f_GHz", "Q", "rel_err"])?;
        let mut s = QSpectrum { f_ghz: Vec::new(), q: Vec::new(), rel_err: Vec::new(), mask: Vec::new() };
        for row in rdr.deserialize::<Row>() {
            let row = row.map_err(|e| Error::parse(ctx, e))?;
            let mask = match row.mask.as_deref() {
                None | Some("") => PointMask::Kept,
                Some(m) => PointMask::parse(m).ok_or_else(|| Error::parse(ctx, format!("unknown mask '{m}'")))?,
            };
            s.f_ghz.push(row.f);
            s.q.push(row.q);
            s.rel_err.push(row.rel_err);
            s.mask.push(mask);
        }
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        with_path(QSpectrum::from_csv(&text), path)
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, ctx: &str, required: &[&str]) -> Result<()> {
    let h = rdr.headers().map_err(|e| Error::parse(ctx, e))?;
    for r in required {
        if !h.iter().any(|c| c == *r) {
            return Err(Error::parse(ctx, format!("schema mismatch: missing column '{r}'")));
        }
    }
    Ok(())
}

fn with_path<T>(r: Result<T>, path: &Path) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse { context: path.display().to_string(), message },
        other => other,
    })
}

/// Groups consecutive rows of equal frequency into records.
pub fn parse_t1_records(text: &str) -> Result<Vec<T1Record>> {
    #[derive(Deserialize)]
    struct Row {
        #[serde(rename = "f_GHz")]
        f: f64,
        delay_us: f64,
        population: f64,
        shots: u32,
    }
    let ctx = "T1 records";
    let mut rdr = reader(text);
    check_header(&mut rdr, ctx, &["f_GHz", "delay_us", "population", "shots"])?;
    let mut out: Vec<T1Record> = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row.map_err(|e| Error::parse(ctx, e))?;
        match out.last_mut() {
            Some(r) if r.f_ghz == row.f => {
                r.delays_us.push(row.delay_us);
                r.population.push(row.population);
                r.shots.push(row.shots);
            }
            _ => out.push(T1Record {
                f_ghz: row.f,
                delays_us: vec![row.delay_us],
                population: vec![row.population],
                shots: vec![row.shots],
            }),
        }
    }
    if out.is_empty() {
        return Err(Error::parse(ctx, "no rows"));
    }
    for r in &out {
        r.validate()?;
    }
    Ok(out)
}

pub fn load_t1_records(path: &Path) -> Result<Vec<T1Record>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    with_path(parse_t1_records(&text), path)
}

pub fn t1_records_to_csv(records: &[T1Record]) -> String {
    let mut s = String::from(T1_HEADER);
    s.push('\n');
    for r in records {
        for i in 0..r.delays_us.len() {
            let _ = writeln!(s, "{},{},{},{}", r.f_ghz, r.delays_us[i], r.population[i], r.shots[i]);
        }
    }
    s
}

/// Minimum kept points for statistics.
pub const MIN_KEPT_POINTS: usize = 10;

/// Median and standard deviation over kept points.
pub fn spectrum_stats(label: &str, spec: &QSpectrum) -> Result<QStatistics> {
    let idx: Vec<usize> = spec.kept().collect();
    if idx.len() < MIN_KEPT_POINTS {
        return Err(Error::invalid(
            "spectrum statistics",
            format!("{label}: {} kept points, need at least {MIN_KEPT_POINTS}", idx.len()),
        ));
    }
    let q: Vec<f64> = idx.iter().map(|&i| spec.q[i]).collect();
    let mut s = QStatistics::from_samples(label, &q)?;
    s.band_ghz = Some((spec.f_ghz[idx[0]], spec.f_ghz[idx[idx.len() - 1]]));
    Ok(s)
}

/// Statistics over the kept points of several spectra of one qubit.
pub fn pooled_stats(label: &str, spectra: &[QSpectrum]) -> Result<QStatistics> {
    let q: Vec<f64> = spectra.iter().flat_map(|s| s.kept().map(move |i| s.q[i])).collect();
    if q.len() < MIN_KEPT_POINTS {
        return Err(Error::invalid(
            "spectrum statistics",
            format!("{label}: {} kept points, need at least {MIN_KEPT_POINTS}", q.len()),
        ));
    }
    let mut s = QStatistics::from_samples(label, &q)?;
    let lo = spectra.iter().filter_map(|s| s.kept().next().map(|i| s.f_ghz[i])).fold(f64::INFINITY, f64::min);
    let hi = spectra.iter().filter_map(|s| s.kept().last().map(|i| s.f_ghz[i])).fold(f64::NEG_INFINITY, f64::max);
    s.band_ghz = Some((lo, hi));
    Ok(s)
}

/// Runs every trial spectrum of a simulated design through the masking
/// used for measured data and pools the kept points.
pub fn simulation_stats(sim: &DesignSimulation, err_threshold: f64, dip: &DipParams) -> Result<QStatistics> {
    let masked = sim
        .spectra
        .iter()
        .map(|s| Ok(mask_spectrum(&QSpectrum::from_relaxation(s)?, err_threshold, dip)))
        .collect::<Result<Vec<_>>>()?;
    pooled_stats(&sim.label, &masked)
}
