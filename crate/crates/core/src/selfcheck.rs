//! Runtime self-tests: analytic quantities against brute-force or
//! finite-difference references on seeded random instances.

use std::fmt;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::optimizer::{
    barrier_objective, constraint_f1, constraint_f2, BarrierObjective, ConstraintSet, PowerBudgets,
    SmoothObjective,
};
use crate::rectenna::{
    diode_coefficients, effective_weights, zdc, zdc_gradient, zdc_of_weights, zdc_time_oracle,
    ChannelMatrix, RectennaParams,
};
use crate::signal::{average_power, dbv_to_volts, envelope_samples, TimeGrid, WeightMatrix};
use crate::sspa::{amam_forward, amam_inverse, required_input_power, SspaParams};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub cases: usize,
    /// Largest relative error seen.
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} cases={:<4} worst={:.3e} tol={:.0e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.worst,
            self.tolerance
        )
    }
}

fn cn(rng: &mut ChaCha8Rng, scale: f64) -> Complex<f64> {
    Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale
}

fn random_instance(rng: &mut ChaCha8Rng) -> (ChannelMatrix<f64>, WeightMatrix<f64>) {
    let n = rng.random_range(1..=8);
    let m = rng.random_range(1..=3);
    let h = ChannelMatrix::from_fn(n, m, |_, _| cn(rng, 1.0));
    let w = WeightMatrix::from_fn(n, m, |_, _| cn(rng, 1e-2));
    (h, w)
}

/// Max-norm relative error of `analytic` against central differences of `f`.
fn fd_error(x: &[f64], analytic: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let h = 1e-5 * scale;
    let mut worst = 0.0f64;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let dn = f(&probe);
        probe[i] = x[i];
        worst = worst.max((analytic[i] - (up - dn) / (2.0 * h)).abs());
    }
    let norm = analytic.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    worst / norm.max(f64::MIN_POSITIVE)
}

fn oracle_check(rng: &mut ChaCha8Rng, rect: &RectennaParams<f64>) -> Result<CheckReport> {
    let k = diode_coefficients(rect);
    let cases = 100;
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let (h, w) = random_instance(rng);
        let s = effective_weights(&h, &w)?;
        let grid = TimeGrid::with_samples(16 * w.num_subcarriers())?;
        let freq = zdc(&s, &k, rect.antenna_resistance);
        let time = zdc_time_oracle(&s, &k, rect.antenna_resistance, &grid)?;
        worst = worst.max(((freq - time) / time).abs());
    }
    Ok(CheckReport {
        name: "zdc frequency vs time",
        cases,
        worst,
        tolerance: 1e-10,
    })
}

fn zdc_gradient_check(rng: &mut ChaCha8Rng, rect: &RectennaParams<f64>) -> Result<CheckReport> {
    let k = diode_coefficients(rect);
    let cases = 20;
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let (h, w) = random_instance(rng);
        let (n, m) = w.shape();
        let g = zdc_gradient(&h, &w, &k, rect.antenna_resistance)?;
        let err = fd_error(&w.to_real_coords(), g.as_real_coords(), |x| {
            zdc_of_weights(&h, &WeightMatrix::from_real_coords(n, m, x), rect).unwrap_or(f64::NAN)
        });
        worst = worst.max(err);
    }
    Ok(CheckReport {
        name: "zdc gradient",
        cases,
        worst,
        tolerance: 1e-5,
    })
}

/// Random weights whose envelope peaks at a random fraction of `A_s`, with
/// budgets loose enough that both constraints are strictly satisfied.
fn feasible_point(
    rng: &mut ChaCha8Rng,
    sspa: &SspaParams<f64>,
) -> Result<(WeightMatrix<f64>, PowerBudgets<f64>, TimeGrid<f64>)> {
    let n = rng.random_range(1..=8);
    let m = rng.random_range(1..=3);
    let grid = TimeGrid::with_samples(16 * n)?;
    let w = WeightMatrix::from_fn(n, m, |_, _| cn(rng, 1.0));
    let peak = (0..m)
        .flat_map(|a| envelope_samples(&w.column(a), &grid))
        .fold(0.0f64, |acc, z| acc.max(z.norm()));
    let w = w.scaled(rng.random_range(0.2..0.9) * sspa.saturation / peak);
    let p_in = required_input_power(&w, sspa, &grid)?;
    let budgets = PowerBudgets::new(2.0 * p_in, 2.0 * average_power(&w))?;
    Ok((w, budgets, grid))
}

fn constraint_gradient_checks(rng: &mut ChaCha8Rng, rect: &RectennaParams<f64>) -> Result<Vec<CheckReport>> {
    let sspa = SspaParams::new(1.0, dbv_to_volts(-35.0), 1.0)?;
    let k = diode_coefficients(rect);
    let guard = 1e-9;
    let cases = 20;
    let (mut f1_worst, mut f2_worst, mut barrier_worst) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..cases {
        let (w, budgets, grid) = feasible_point(rng, &sspa)?;
        let (n, m) = w.shape();
        let x = w.to_real_coords();
        let at = |x: &[f64]| WeightMatrix::from_real_coords(n, m, x);

        let f1 = constraint_f1(&w, &budgets);
        f1_worst = f1_worst.max(fd_error(&x, &f1.gradient, |x| constraint_f1(&at(x), &budgets).value));

        let f2 = constraint_f2(&w, &sspa, &budgets, &grid, guard)?;
        f2_worst = f2_worst.max(fd_error(&x, &f2.gradient, |x| {
            constraint_f2(&at(x), &sspa, &budgets, &grid, guard).map_or(f64::NAN, |c| c.value)
        }));

        let h = ChannelMatrix::from_fn(n, m, |_, _| cn(rng, 1.0));
        let taylor = zdc_gradient(&h, &w, &k, rect.antenna_resistance)?;
        let set = ConstraintSet::with_amplifier(n, m, &budgets, sspa, grid.clone(), guard);
        let t = rng.random_range(1.0..1e4) / budgets.p_tr_max;
        let eval = barrier_objective(&w, &taylor, t, &set)?;
        let objective = BarrierObjective::new(taylor.as_real_coords(), t, &set);
        barrier_worst = barrier_worst.max(fd_error(&x, &eval.gradient, |x| {
            objective.value(x).unwrap_or(f64::NAN)
        }));
    }
    Ok(vec![
        CheckReport {
            name: "transmit constraint gradient",
            cases,
            worst: f1_worst,
            tolerance: 1e-5,
        },
        CheckReport {
            name: "input constraint gradient",
            cases,
            worst: f2_worst,
            tolerance: 1e-5,
        },
        CheckReport {
            name: "barrier gradient",
            cases,
            worst: barrier_worst,
            tolerance: 1e-5,
        },
    ])
}

fn sspa_checks(rng: &mut ChaCha8Rng) -> Result<Vec<CheckReport>> {
    let cases = 1000;
    let mut round_trip = 0.0f64;
    for _ in 0..cases {
        let p: SspaParams<f64> = SspaParams::new(
            rng.random_range(0.5..4.0),
            rng.random_range(0.01..2.0),
            rng.random_range(0.5..8.0),
        )?;
        let a: f64 = rng.random_range(0.0..0.999) * p.saturation;
        let back = amam_forward(amam_inverse(a, &p)?, &p)?;
        round_trip = round_trip.max((back - a).abs() / p.saturation);
    }

    let linear_cases = 20;
    let mut linear = 0.0f64;
    for _ in 0..linear_cases {
        let (_, w) = random_instance(rng);
        let g = rng.random_range(0.5..4.0);
        let p = SspaParams::new(g, 1e6, 1.0)?;
        let grid = TimeGrid::with_samples(16 * w.num_subcarriers())?;
        let expect = average_power(&w) / (g * g);
        linear = linear.max((required_input_power(&w, &p, &grid)? - expect).abs() / expect);
    }
    Ok(vec![
        CheckReport {
            name: "sspa forward(inverse)",
            cases,
            worst: round_trip,
            tolerance: 1e-12,
        },
        CheckReport {
            name: "sspa linear-limit power",
            cases: linear_cases,
            worst: linear,
            tolerance: 1e-6,
        },
    ])
}

/// Runs every self-test with the given seed.
pub fn run_all(seed: u64) -> Result<Vec<CheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rect = RectennaParams::reference();
    let mut out = vec![oracle_check(&mut rng, &rect)?, zdc_gradient_check(&mut rng, &rect)?];
    out.extend(constraint_gradient_checks(&mut rng, &rect)?);
    out.extend(sspa_checks(&mut rng)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for report in run_all(1).unwrap() {
            assert!(report.passed(), "{report}");
        }
    }
}
