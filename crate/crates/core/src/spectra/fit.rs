use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{storage::Owned, DMatrix, DVector, Dyn};

use super::T1Record;
use crate::error::{Error, Result};

/// `model(x, params, grad) -> value`, filling ∂value/∂params into `grad`.
pub(crate) type Model = fn(f64, &[f64], &mut [f64]) -> f64;

struct Curve<'a> {
    x: &'a [f64],
    y: &'a [f64],
    p: DVector<f64>,
    model: Model,
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for Curve<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, p: &DVector<f64>) {
        self.p.copy_from(p);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let mut g = vec![0.0; self.p.len()];
        let r = DVector::from_iterator(
            self.x.len(),
            self.x.iter().zip(self.y).map(|(&x, &y)| (self.model)(x, self.p.as_slice(), &mut g) - y),
        );
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let n = self.p.len();
        let mut j = DMatrix::zeros(self.x.len(), n);
        let mut g = vec![0.0; n];
        for (i, &x) in self.x.iter().enumerate() {
            (self.model)(x, self.p.as_slice(), &mut g);
            for k in 0..n {
                j[(i, k)] = g[k];
            }
        }
        j.iter().all(|v| v.is_finite()).then_some(j)
    }
}

pub(crate) struct CurveFit {
    pub params: Vec<f64>,
    /// Parameter standard errors from s²(JᵀJ)⁻¹.
    pub std_err: Vec<f64>,
    pub rss: f64,
}

/// Levenberg–Marquardt fit of `model` to `(x, y)` from `p0`.
pub(crate) fn fit_curve(what: &str, x: &[f64], y: &[f64], p0: &[f64], model: Model) -> Result<CurveFit> {
    let problem = Curve { x, y, p: DVector::from_column_slice(p0), model };
    let (problem, report) = LevenbergMarquardt::new().with_patience(200).minimize(problem);
    if !report.termination.was_successful() {
        return Err(Error::NonConvergence { what: format!("{what} ({:?})", report.termination), residual: 2.0 * report.objective_function });
    }
    let r = problem.residuals().ok_or_else(|| Error::NonConvergence { what: what.into(), residual: f64::NAN })?;
    let j = problem.jacobian().ok_or_else(|| Error::NonConvergence { what: what.into(), residual: f64::NAN })?;
    let rss = r.norm_squared();
    let dof = x.len().saturating_sub(p0.len()).max(1) as f64;
    let jtj = j.transpose() * &j;
    let cov = jtj.try_inverse().ok_or_else(|| Error::Singular { what: format!("{what} normal matrix"), condition: f64::INFINITY })?;
    let s2 = rss / dof;
    let std_err = (0..p0.len()).map(|k| (s2 * cov[(k, k)]).max(0.0).sqrt()).collect();
    Ok(CurveFit { params: problem.p.iter().copied().collect(), std_err, rss })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct T1Fit {
    pub t1_us: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// Standard error of T1 over T1.
    pub rel_err: f64,
}

fn decay(t: f64, p: &[f64], g: &mut [f64]) -> f64 {
    let e = (-t / p[2]).exp();
    g[0] = e;
    g[1] = 1.0;
    g[2] = p[0] * e * t / (p[2] * p[2]);
    p[0] * e + p[1]
}

/// Upper bound on fitted T1, μs.
pub const MAX_T1_US: f64 = 1e4;

/// Fits P(t) = A·exp(−t/T1) + B.
pub fn fit_t1(rec: &T1Record) -> Result<T1Fit> {
    rec.validate()?;
    let (t, p) = (&rec.delays_us, &rec.population);
    let n = t.len();
    let b0 = p[n - 3..].iter().sum::<f64>() / 3.0;
    let a0 = p[0] - b0;
    let spread = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - p.iter().cloned().fold(f64::INFINITY, f64::min);
    let what = format!("T1 fit at {} GHz", rec.f_ghz);
    if !(spread > 1e-9) || a0 == 0.0 {
        return Err(Error::NonConvergence { what: format!("{what}: population shows no decay"), residual: 0.0 });
    }
    let target = a0 / std::f64::consts::E + b0;
    let crossing = (1..n).find_map(|i| {
        let (y0, y1) = (p[i - 1] - target, p[i] - target);
        (y0 == 0.0 || y0.signum() != y1.signum()).then(|| {
            if y1 == y0 {
                t[i - 1]
            } else {
                t[i - 1] + (t[i] - t[i - 1]) * y0 / (y0 - y1)
            }
        })
    });
    let t1_0 = crossing.unwrap_or(t[n - 1]).max(1e-3 * (t[n - 1] - t[0]));
    let fit = fit_curve(&what, t, p, &[a0, b0, t1_0], decay)?;
    let t1 = fit.params[2];
    if !(t1 > 0.0 && t1 < MAX_T1_US) {
        return Err(Error::NonConvergence { what: format!("{what}: T1 = {t1} μs outside (0, {MAX_T1_US})"), residual: fit.rss });
    }
    Ok(T1Fit { t1_us: t1, amplitude: fit.params[0], offset: fit.params[1], rel_err: fit.std_err[2] / t1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t1: f64) -> T1Record {
        let delays: Vec<f64> = (0..21).map(|i| 10.0 + 19.5 * i as f64).collect();
        T1Record { f_ghz: 4.5, population: delays.iter().map(|t| (-t / t1).exp()).collect(), delays_us: delays, shots: vec![4000; 21] }
    }

    #[test]
    fn noiseless_decay_is_exact() {
        let fit = fit_t1(&record(100.0)).unwrap();
        assert!((fit.t1_us / 100.0 - 1.0).abs() < 1e-6, "{fit:?}");
        assert!((fit.amplitude - 1.0).abs() < 1e-6 && fit.offset.abs() < 1e-6);
        assert!(fit.rel_err < 1e-6);
    }

    #[test]
    fn offset_decay_is_exact() {
        let mut r = record(60.0);
        for p in &mut r.population {
            *p = 0.8 * *p + 0.05;
        }
        let fit = fit_t1(&r).unwrap();
        assert!((fit.t1_us / 60.0 - 1.0).abs() < 1e-8);
        assert!((fit.amplitude - 0.8).abs() < 1e-8 && (fit.offset - 0.05).abs() < 1e-8);
    }

    #[test]
    fn constant_population_does_not_converge() {
        let mut r = record(100.0);
        r.population = vec![0.4; 21];
        assert!(matches!(fit_t1(&r), Err(Error::NonConvergence { .. })));
    }
}
