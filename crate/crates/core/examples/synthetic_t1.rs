//! Writes the synthetic T1 dataset bundled with the CLI: Q = 2.5e6 with one
//! Lorentzian dip in 1/Q (centre 4.55 GHz, FWHM 8 MHz, depth 4e-7), 101
//! frequencies, 21 delays, 4000-shot binomial readout plus 1% noise.
//!
//! cargo run --release --example synthetic_t1 -- crates/cli/data/synthetic_t1.csv

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use surfloss::spectra::{t1_records_to_csv, T1Record};

fn main() {
    let path = std::env::args().nth(1).expect("output path");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let delays: Vec<f64> = (0..21).map(|i| 5.0 + 25.0 * i as f64).collect();
    let records: Vec<T1Record> = (0..101)
        .map(|i| {
            let f = 4.5 + 1e-3 * i as f64;
            let h = 0.5 * 8e-3;
            let inv_q = 1.0 / 2.5e6 + 4e-7 * h * h / ((f - 4.55f64).powi(2) + h * h);
            let t1 = 1.0 / (inv_q * 2.0 * std::f64::consts::PI * f * 1e3);
            let population = delays
                .iter()
                .map(|&t| {
                    let k = Binomial::new(4000, (-t / t1).exp()).unwrap().sample(&mut rng) as f64 / 4000.0;
                    (k + noise.sample(&mut rng)).clamp(-0.1, 1.1)
                })
                .collect();
            T1Record { f_ghz: (f * 1e3).round() / 1e3, delays_us: delays.clone(), population, shots: vec![4000; 21] }
        })
        .collect();
    let header = "# synthetic: Q 2.5e6, dip in 1/Q at 4.55 GHz (FWHM 8 MHz, depth 4e-7), seed 2024\n";
    std::fs::write(path, format!("{header}{}", t1_records_to_csv(&records))).unwrap();
}
