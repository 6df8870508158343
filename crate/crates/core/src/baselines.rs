//! Reference strategies: the rectenna-only optimum fed to an ideal amplifier
//! or straight into the SSPA, and the scaled matched filter.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WptError};
use crate::optimizer::{feasible_start, scp_solve, ConstraintSet, OptResult, PowerBudgets, SolverConfig};
use crate::rectenna::{zdc_of_weights, ChannelMatrix, RectennaParams};
use crate::scalar::Scalar;
use crate::signal::{average_power, envelope_samples, TimeGrid, ToneGrid, WeightMatrix};
use crate::sspa::{apply_to_envelope, project_to_subcarriers, SspaParams};

/// `w ∝ conj(h)` with average power `power`.
pub fn scaled_matched_filter<T: Scalar>(h: &ChannelMatrix<T>, power: T) -> Result<WeightMatrix<T>> {
    if h.is_degenerate() {
        return Err(WptError::DegenerateChannel);
    }
    let (n, m) = h.shape();
    let w = WeightMatrix::from_fn(n, m, |i, j| h.get(i, j).conj());
    let scale = (power / average_power(&w)).sqrt();
    Ok(w.scaled(scale))
}

/// SCP with only the transmit-power constraint: the waveform that is optimal
/// for the rectenna when the amplifier is ideal.
pub fn optimize_rectenna_only<T: Scalar>(
    h: &ChannelMatrix<T>,
    p_tr_max: T,
    rectenna: &RectennaParams<T>,
    tones: &ToneGrid,
    cfg: &SolverConfig<T>,
) -> Result<OptResult<T>> {
    if h.shape() != (tones.num_subcarriers, tones.num_antennas) {
        return Err(WptError::ShapeMismatch {
            expected: format!("({}, {})", tones.num_subcarriers, tones.num_antennas),
            actual: format!("{:?}", h.shape()),
        });
    }
    if h.is_degenerate() {
        return Err(WptError::DegenerateChannel);
    }
    let constraints = ConstraintSet::transmit_only(tones.num_subcarriers, tones.num_antennas, p_tr_max);
    let start = feasible_start(h, &constraints, cfg.feasibility_margin)?;
    scp_solve(h, &constraints, rectenna, start, cfg)
}

/// `zdc` when `w` passes through a transparent amplifier.
pub fn eval_ideal_hpa<T: Scalar>(
    h: &ChannelMatrix<T>,
    w: &WeightMatrix<T>,
    rectenna: &RectennaParams<T>,
) -> Result<T> {
    zdc_of_weights(h, w, rectenna)
}

/// Power at which the rectenna-only waveform enters the amplifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecouplingInput {
    /// Rescaled to the input budget `p_in_max`.
    InputBudget,
    /// Fed as designed, at the transmit-budget power (capped at `p_in_max`).
    #[default]
    Unscaled,
}

#[derive(Debug, Clone)]
pub struct DecouplingOutcome<T> {
    pub zdc: T,
    /// In-band weights actually radiated.
    pub transmitted: WeightMatrix<T>,
    /// Amplifier input weights after any transmit-budget back-off.
    pub input: WeightMatrix<T>,
}

fn amplify<T: Scalar>(
    input: &WeightMatrix<T>,
    sspa: &SspaParams<T>,
    grid: &TimeGrid<T>,
) -> Result<WeightMatrix<T>> {
    let (n, m) = input.shape();
    let mut out = WeightMatrix::zeros(n, m);
    for a in 0..m {
        let env = apply_to_envelope(&envelope_samples(&input.column(a), grid), sspa);
        out.set_column(a, &project_to_subcarriers(&env, n, grid)?);
    }
    Ok(out)
}

/// Feeds a given rectenna-only waveform through the SSPA and evaluates the
/// radiated in-band result, backing the input off until the transmit
/// budget holds.
pub fn decouple<T: Scalar>(
    h: &ChannelMatrix<T>,
    rectenna_only: &WeightMatrix<T>,
    budgets: &PowerBudgets<T>,
    sspa: &SspaParams<T>,
    rectenna: &RectennaParams<T>,
    grid: &TimeGrid<T>,
    mode: DecouplingInput,
) -> Result<DecouplingOutcome<T>> {
    let power = average_power(rectenna_only);
    if power == T::zero() {
        return Err(WptError::ZeroWaveform);
    }
    let base = match mode {
        DecouplingInput::InputBudget => rectenna_only.scaled((budgets.p_in_max / power).sqrt()),
        DecouplingInput::Unscaled if power > budgets.p_in_max => {
            rectenna_only.scaled((budgets.p_in_max / power).sqrt())
        }
        DecouplingInput::Unscaled => rectenna_only.clone(),
    };
    let mut input = base.clone();
    let mut transmitted = amplify(&input, sspa, grid)?;
    if average_power(&transmitted) > budgets.p_tr_max {
        let (mut lo, mut hi) = (T::zero(), T::one());
        for _ in 0..80 {
            let mid = T::lit(0.5) * (lo + hi);
            if average_power(&amplify(&base.scaled(mid), sspa, grid)?) <= budgets.p_tr_max {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        input = base.scaled(lo);
        transmitted = amplify(&input, sspa, grid)?;
    }
    Ok(DecouplingOutcome {
        zdc: zdc_of_weights(h, &transmitted, rectenna)?,
        transmitted,
        input,
    })
}

/// The rectenna-only optimum at `p_tr_max`, used as the SSPA input.
#[allow(clippy::too_many_arguments)]
pub fn eval_decoupling<T: Scalar>(
    h: &ChannelMatrix<T>,
    budgets: &PowerBudgets<T>,
    sspa: &SspaParams<T>,
    rectenna: &RectennaParams<T>,
    tones: &ToneGrid,
    cfg: &SolverConfig<T>,
    mode: DecouplingInput,
) -> Result<DecouplingOutcome<T>> {
    let w_ro = optimize_rectenna_only(h, budgets.p_tr_max, rectenna, tones, cfg)?.weights;
    let grid = cfg.time_grid(tones)?;
    decouple(h, &w_ro, budgets, sspa, rectenna, &grid, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::scp_optimize;
    use crate::rectenna::diode_coefficients;
    use crate::signal::dbv_to_volts;
    use approx::assert_relative_eq;
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_channel(rng: &mut ChaCha8Rng, n: usize, m: usize) -> ChannelMatrix<f64> {
        ChannelMatrix::from_fn(n, m, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn matched_filter_examples() {
        let w = scaled_matched_filter(&ChannelMatrix::<f64>::flat(4, 1), 0.5).unwrap();
        for z in w.as_slice() {
            assert_relative_eq!(z.norm(), 0.5, epsilon = 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_channel(&mut rng, 5, 3);
        let w = scaled_matched_filter(&h, 0.37).unwrap();
        assert_relative_eq!(average_power(&w), 0.37, max_relative = 1e-12);
        for n in 0..5 {
            for m in 0..3 {
                assert_relative_eq!(w.get(n, m).arg(), -h.get(n, m).arg(), epsilon = 1e-12);
            }
        }
        assert!(scaled_matched_filter(&ChannelMatrix::from_fn(2, 1, |_, _| Complex::new(0.0, 0.0)), 1.0).is_err());
    }

    #[test]
    fn rectenna_only_single_tone() {
        let rect = RectennaParams::reference();
        let k = diode_coefficients(&rect);
        let tones = ToneGrid::new(1, 1, 5.18e9, 312.5e3).unwrap();
        let h = ChannelMatrix::from_fn(1, 1, |_, _| Complex::from_polar(0.7, 1.2));
        let p_tr: f64 = 1e-4;
        let res = optimize_rectenna_only(&h, p_tr, &rect, &tones, &SolverConfig::default()).unwrap();
        let w = res.weights.get(0, 0);
        assert_relative_eq!(w.norm(), (2.0 * p_tr).sqrt(), max_relative = 1e-6);
        assert_relative_eq!(w.arg(), -1.2, epsilon = 1e-6);
        let s2 = 0.49 * 2.0 * p_tr;
        let expect = k.k2 * 50.0 * 0.5 * s2 + k.k4 * 2500.0 * 0.375 * s2 * s2;
        assert_relative_eq!(res.zdc_value, expect, max_relative = 1e-3);
    }

    #[test]
    fn rectenna_only_two_antennas_single_tone_is_mrt() {
        let rect = RectennaParams::reference();
        let tones = ToneGrid::new(1, 2, 5.18e9, 312.5e3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = random_channel(&mut rng, 1, 2);
        let res = optimize_rectenna_only(&h, 1e-3, &rect, &tones, &SolverConfig::default()).unwrap();
        let ratio = res.weights.get(0, 0) / h.get(0, 0).conj();
        let ratio2 = res.weights.get(0, 1) / h.get(0, 1).conj();
        assert!((ratio - ratio2).norm() < 1e-5 * ratio.norm());
        assert_relative_eq!(average_power(&res.weights), 1e-3, max_relative = 1e-6);
    }

    #[test]
    fn rectenna_only_beats_matched_filter() {
        let rect = RectennaParams::reference();
        let tones = ToneGrid::new(8, 1, 5.18e9, 312.5e3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let h = random_channel(&mut rng, 8, 1);
            let res = optimize_rectenna_only(&h, 1e-4, &rect, &tones, &SolverConfig::default()).unwrap();
            assert_relative_eq!(average_power(&res.weights), 1e-4, max_relative = 1e-6);
            let smf = scaled_matched_filter(&h, 1e-4).unwrap();
            assert!(res.zdc_value >= eval_ideal_hpa(&h, &smf, &rect).unwrap() * (1.0 - 1e-9));
        }
    }

    #[test]
    fn ideal_hpa_is_plain_zdc() {
        let rect = RectennaParams::reference();
        let h = ChannelMatrix::<f64>::flat(3, 1);
        assert_eq!(eval_ideal_hpa(&h, &WeightMatrix::zeros(3, 1), &rect).unwrap(), 0.0);
        let w = WeightMatrix::from_column(&[Complex::new(0.01, 0.0); 3]);
        assert_eq!(
            eval_ideal_hpa(&h, &w, &rect).unwrap(),
            zdc_of_weights(&h, &w, &rect).unwrap()
        );
    }

    #[test]
    fn decoupling_is_transparent_for_linear_amplifier() {
        let rect = RectennaParams::reference();
        let tones = ToneGrid::new(4, 1, 5.18e9, 312.5e3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_channel(&mut rng, 4, 1);
        let budgets = PowerBudgets::new(1e-4, 1e-4).unwrap();
        let sspa = SspaParams::new(1.0, 1e6, 1.0).unwrap();
        let cfg = SolverConfig::default();
        let w_ro = optimize_rectenna_only(&h, 1e-4, &rect, &tones, &cfg).unwrap().weights;
        let ideal = eval_ideal_hpa(&h, &w_ro, &rect).unwrap();
        let dec = decouple(&h, &w_ro, &budgets, &sspa, &rect, &cfg.time_grid(&tones).unwrap(), DecouplingInput::InputBudget)
            .unwrap();
        assert_relative_eq!(dec.zdc, ideal, max_relative = 1e-6);
    }

    #[test]
    fn decoupling_respects_budget_and_never_beats_ideal() {
        let rect = RectennaParams::reference();
        let tones = ToneGrid::new(8, 1, 5.18e9, 312.5e3).unwrap();
        let sspa = SspaParams::new(1.0, dbv_to_volts(-35.0), 1.0).unwrap();
        let cfg = SolverConfig::default();
        let grid = cfg.time_grid(&tones).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for &p_tr in &[crate::signal::dbw_to_watts(-45.0), 1e-4, 1e-3] {
            let h = random_channel(&mut rng, 8, 1);
            let budgets = PowerBudgets::new(1e-2, p_tr).unwrap();
            let w_ro = optimize_rectenna_only(&h, p_tr, &rect, &tones, &cfg).unwrap().weights;
            for mode in [DecouplingInput::InputBudget, DecouplingInput::Unscaled] {
                let dec = decouple(&h, &w_ro, &budgets, &sspa, &rect, &grid, mode).unwrap();
                assert!(average_power(&dec.transmitted) <= p_tr * (1.0 + 1e-12));
                assert!(dec.zdc <= eval_ideal_hpa(&h, &w_ro, &rect).unwrap());
            }
        }
    }

    #[test]
    fn opt_matches_rectenna_only_when_amplifier_is_linear() {
        let rect = RectennaParams::reference();
        let tones = ToneGrid::new(4, 1, 5.18e9, 312.5e3).unwrap();
        let sspa = SspaParams::new(1.0, 1e6, 1.0).unwrap();
        let budgets = PowerBudgets::new(1e6, 1e-4).unwrap();
        let cfg = SolverConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..3 {
            let h = random_channel(&mut rng, 4, 1);
            let opt = scp_optimize(&h, &budgets, &sspa, &rect, &tones, &cfg).unwrap();
            let ro = optimize_rectenna_only(&h, 1e-4, &rect, &tones, &cfg).unwrap();
            assert_relative_eq!(opt.zdc_value, ro.zdc_value, max_relative = 5e-3);
        }
    }
}
