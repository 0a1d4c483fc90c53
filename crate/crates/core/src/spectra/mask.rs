use super::fit::fit_curve;
use super::{PointMask, QSpectrum};

/// Points whose relative T1 error exceeds this are dropped by default.
pub const DEFAULT_ERROR_THRESHOLD: f64 = 0.10;

/// Dip detection on 1/Q. A candidate run of points above the local
/// baseline by `depth_mad`·MAD is fitted with a Lorentzian; it is masked
/// when the fitted depth exceeds `depth_mad`·MAD and the fitted FWHM spans
/// at least `min_width_bins` grid steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DipParams {
    pub depth_mad: f64,
    pub min_width_bins: f64,
    /// Points in the running median/MAD window.
    pub window_bins: usize,
    /// Masked half-width in units of the fitted FWHM.
    pub mask_half_width: f64,
    /// Consecutive points above threshold needed to attempt a fit.
    pub min_seed_bins: usize,
}

impl Default for DipParams {
    fn default() -> Self {
        DipParams { depth_mad: 3.0, min_width_bins: 3.0, window_bins: 101, mask_half_width: 1.0, min_seed_bins: 2 }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// 1/Q = base + amp·(w/2)²/((f−f₀)² + (w/2)²), params `[base, amp, f₀, w]`.
fn lorentzian(f: f64, p: &[f64], g: &mut [f64]) -> f64 {
    let (amp, f0, h) = (p[1], p[2], 0.5 * p[3]);
    let d = f - f0;
    let den = d * d + h * h;
    let l = h * h / den;
    g[0] = 1.0;
    g[1] = l;
    g[2] = amp * h * h * 2.0 * d / (den * den);
    g[3] = amp * h * d * d / (den * den);
    p[0] + amp * l
}

/// A fitted dip in 1/Q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dip {
    pub f0_ghz: f64,
    pub fwhm_ghz: f64,
    pub depth: f64,
}

/// Flags high-error points, then parasitic dips among the remaining ones.
/// Existing flags are kept.
pub fn mask_spectrum(spec: &QSpectrum, err_threshold: f64, params: &DipParams) -> QSpectrum {
    mask_with_dips(spec, err_threshold, params).0
}

pub fn mask_with_dips(spec: &QSpectrum, err_threshold: f64, params: &DipParams) -> (QSpectrum, Vec<Dip>) {
    let mut out = spec.clone();
    for i in 0..out.len() {
        if out.mask[i] == PointMask::Kept && out.rel_err[i] > err_threshold {
            out.mask[i] = PointMask::HighError;
        }
    }
    let idx: Vec<usize> = out.kept().collect();
    let n = idx.len();
    let mut dips = Vec::new();
    if n < 5 {
        return (out, dips);
    }
    let mut steps: Vec<f64> = out.f_ghz.windows(2).map(|w| w[1] - w[0]).collect();
    let step = median(&mut steps);
    let y: Vec<f64> = idx.iter().map(|&i| 1.0 / out.q[i]).collect();
    let half = params.window_bins.max(3) / 2;
    let mut base = vec![0.0; n];
    let mut mad = vec![0.0; n];
    for k in 0..n {
        let (a, b) = (k.saturating_sub(half), (k + half + 1).min(n));
        let mut w = y[a..b].to_vec();
        let m = median(&mut w);
        let mut dev: Vec<f64> = y[a..b].iter().map(|v| (v - m).abs()).collect();
        base[k] = m;
        mad[k] = median(&mut dev).max(1e-12 * m.abs());
    }
    let above = |k: usize| y[k] - base[k] > params.depth_mad * mad[k];
    let mut k = 0;
    while k < n {
        if !above(k) {
            k += 1;
            continue;
        }
        let start = k;
        while k < n && above(k) {
            k += 1;
        }
        let end = k; // exclusive
        if end - start < params.min_seed_bins {
            continue;
        }
        let f_start = out.f_ghz[idx[start]];
        if dips.iter().any(|d: &Dip| (f_start - d.f0_ghz).abs() <= params.mask_half_width * d.fwhm_ghz) {
            continue;
        }
        let pad = (3 * (end - start)).max(5);
        let (a, b) = (start.saturating_sub(pad), (end + pad).min(n));
        let peak = (start..end).max_by(|&i, &j| (y[i] - base[i]).total_cmp(&(y[j] - base[j]))).expect("non-empty run");
        let (f_ref, scale) = (out.f_ghz[idx[peak]], base[peak].abs().max(1e-300));
        // fit in grid steps and baseline units
        let xs: Vec<f64> = (a..b).map(|j| (out.f_ghz[idx[j]] - f_ref) / step).collect();
        let ys: Vec<f64> = (a..b).map(|j| y[j] / scale).collect();
        let width0 = ((end - start) as f64).max(1.0);
        let p0 = [base[peak] / scale, (y[peak] - base[peak]) / scale, 0.0, width0];
        let Ok(fit) = fit_curve("Lorentzian dip", &xs, &ys, &p0, lorentzian) else { continue };
        let (amp, f0, w) = (fit.params[1] * scale, f_ref + fit.params[2] * step, fit.params[3].abs() * step);
        let inside = f0 >= out.f_ghz[idx[a]] && f0 <= out.f_ghz[idx[b - 1]];
        if inside && amp > params.depth_mad * mad[peak] && w >= params.min_width_bins * step {
            dips.push(Dip { f0_ghz: f0, fwhm_ghz: w, depth: amp });
        }
    }
    for d in &dips {
        for &i in &idx {
            if out.mask[i] == PointMask::Kept && (out.f_ghz[i] - d.f0_ghz).abs() <= params.mask_half_width * d.fwhm_ghz {
                out.mask[i] = PointMask::Parasitic;
            }
        }
    }
    (out, dips)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| 4.0 + 1e-3 * i as f64).collect()
    }

    #[test]
    fn injected_dip_window_is_masked_exactly() {
        let f = grid(301);
        let (f0, w): (f64, f64) = (f[150], 9e-3);
        let q: Vec<f64> = f.iter().map(|&x| 1.0 / (2.5e-7 + 5e-7 * (w / 2.0).powi(2) / ((x - f0).powi(2) + (w / 2.0).powi(2)))).collect();
        let spec = QSpectrum::new(f.clone(), q, vec![0.01; 301]).unwrap();
        let (m, dips) = mask_with_dips(&spec, DEFAULT_ERROR_THRESHOLD, &DipParams::default());
        assert_eq!(dips.len(), 1);
        assert!((dips[0].f0_ghz - f0).abs() < 1e-9 && (dips[0].fwhm_ghz - w).abs() < 1e-9);
        for i in 0..301 {
            let expect = (f[i] - f0).abs() <= w;
            assert_eq!(m.mask[i] == PointMask::Parasitic, expect, "point {i}");
        }
    }

    #[test]
    fn infinite_threshold_without_dips_is_identity() {
        let f = grid(100);
        let spec = QSpectrum::new(f, vec![3e6; 100], vec![0.5; 100]).unwrap();
        assert_eq!(mask_spectrum(&spec, f64::INFINITY, &DipParams::default()), spec);
    }

    #[test]
    fn high_error_points_are_flagged() {
        let f = grid(20);
        let mut err = vec![0.05; 20];
        err[3] = 0.11;
        err[7] = 0.10;
        let spec = QSpectrum::new(f, vec![3e6; 20], err).unwrap();
        let m = mask_spectrum(&spec, DEFAULT_ERROR_THRESHOLD, &DipParams::default());
        assert_eq!(m.mask[3], PointMask::HighError);
        assert_eq!(m.mask[7], PointMask::Kept);
        assert_eq!(m.count(PointMask::HighError), 1);
    }

    #[test]
    fn narrow_spike_is_not_parasitic() {
        let f = grid(101);
        let mut q = vec![3e6; 101];
        q[50] = 1e6;
        let spec = QSpectrum::new(f, q, vec![0.0; 101]).unwrap();
        assert_eq!(mask_spectrum(&spec, 0.1, &DipParams::default()).count(PointMask::Parasitic), 0);
    }
}
