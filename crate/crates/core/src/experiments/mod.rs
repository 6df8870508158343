//! Seeded Monte-Carlo sweeps over budgets and sub-carrier counts, and their
//! CSV/JSON output.

mod config;
mod output;
mod sweep;

pub use config::{BudgetConfig, ExperimentConfig, RectennaConfig, SspaConfig, Strategy, TonesConfig};
pub use output::{emit_results, write_csv, OutputFormat};
pub use sweep::{run_cell, run_sweep, run_sweep_with_jobs, CellAggregate, SweepOutput, SweepRecord};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::rectenna::ChannelMatrix;

/// Rayleigh-fading channel with i.i.d. CN(0, 1) entries.
///
/// Realization `index` is its own ChaCha stream under `seed`, so any record
/// can be regenerated alone. Entries are drawn row by row (sub-carrier
/// major), so the channel for `N` tones is a prefix of the one for `N' > N`
/// at the same `M`.
pub fn generate_channel(
    num_subcarriers: usize,
    num_antennas: usize,
    seed: u64,
    index: u64,
) -> ChannelMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    ChannelMatrix::from_fn(num_subcarriers, num_antennas, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re * scale, im * scale)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_is_reproducible_and_keyed() {
        let a = generate_channel(8, 2, 7, 3);
        assert_eq!(a, generate_channel(8, 2, 7, 3));
        assert_ne!(a, generate_channel(8, 2, 7, 4));
        assert_ne!(a, generate_channel(8, 2, 8, 3));
    }

    #[test]
    fn smaller_grid_is_a_prefix() {
        let big = generate_channel(16, 1, 1, 0);
        let small = generate_channel(8, 1, 1, 0);
        for n in 0..8 {
            assert_eq!(big.get(n, 0), small.get(n, 0));
        }
    }

    #[test]
    fn entries_have_unit_power_and_uncorrelated_parts() {
        let draws = 100_000;
        let (mut power, mut cross, mut re2, mut im2) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..draws / 10 {
            let h = generate_channel(10, 1, 11, i as u64);
            for n in 0..10 {
                let z = h.get(n, 0);
                power += z.norm_sqr();
                cross += z.re * z.im;
                re2 += z.re * z.re;
                im2 += z.im * z.im;
            }
        }
        let d = draws as f64;
        assert!((power / d - 1.0).abs() < 0.02);
        assert!((cross / (re2 * im2).sqrt()).abs() < 0.02);
        assert!((re2 / d - 0.5).abs() < 0.01 && (im2 / d - 0.5).abs() < 0.01);
    }
}
