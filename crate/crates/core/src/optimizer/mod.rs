//! Successive convex programming for the transmit-referred waveform problem.
//!
//! `zdc` is convex in the real/imaginary weight coordinates, so maximizing
//! its linearization at the current point over the convex feasible set can
//! only increase it. Each linearized round is solved with a log-barrier
//! method whose inner minimizer is damped Newton.

mod barrier;
mod constraints;
mod linalg;
mod newton;

pub use barrier::{barrier_objective, barrier_solve, BarrierObjective, BarrierOutcome};
pub use constraints::{
    constraint_f1, constraint_f2, AmplifierConstraint, ConstraintSet, ConstraintValue,
};
pub use newton::{newton_minimize, Evaluation, NewtonOutcome, SmoothObjective};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, WptError};
use crate::rectenna::{diode_coefficients, zdc_gradient, zdc_of_weights, ChannelMatrix, RectennaParams};
use crate::scalar::Scalar;
use crate::signal::{envelope_samples, TimeGrid, ToneGrid, WeightMatrix};
use crate::sspa::{amam_inverse, project_to_subcarriers, SspaParams};

/// Input and transmit power caps, watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBudgets<T> {
    pub p_in_max: T,
    pub p_tr_max: T,
}

impl<T: Scalar> PowerBudgets<T> {
    pub fn new(p_in_max: T, p_tr_max: T) -> Result<Self> {
        if !(p_in_max > T::zero() && p_in_max.is_finite()) {
            return Err(invalid("p_in_max", "must be positive and finite"));
        }
        if !(p_tr_max > T::zero() && p_tr_max.is_finite()) {
            return Err(invalid("p_tr_max", "must be positive and finite"));
        }
        Ok(Self { p_in_max, p_tr_max })
    }
}

/// Tolerances and iteration limits for the SCP / barrier / Newton stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig<T> {
    /// Relative weight displacement that ends the SCP loop.
    pub scp_tol: T,
    pub scp_max_iters: usize,
    pub barrier_t0: T,
    pub barrier_mu: T,
    /// Duality-gap bound `2 / t`, relative to the normalized objective.
    pub barrier_tol: T,
    pub newton_tol: T,
    pub newton_max_iters: usize,
    pub line_search_backtrack: T,
    pub armijo: T,
    /// Relative diagonal floor added to every Newton system.
    pub hessian_floor: T,
    /// Starting point keeps `f_i <= -margin * budget_i`.
    pub feasibility_margin: T,
    /// Time samples per sub-carrier (`K = oversampling * N`).
    pub oversampling: usize,
    /// Relative distance below `A_s` treated as outside the amplifier domain.
    pub domain_guard: T,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            scp_tol: T::lit(1e-6),
            scp_max_iters: 200,
            barrier_t0: T::one(),
            barrier_mu: T::lit(10.0),
            barrier_tol: T::lit(1e-6),
            newton_tol: T::lit(1e-8),
            newton_max_iters: 100,
            line_search_backtrack: T::lit(0.5),
            armijo: T::lit(0.01),
            hessian_floor: T::lit(1e-12),
            feasibility_margin: T::lit(0.1),
            oversampling: 16,
            domain_guard: T::lit(1e-9),
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: T| x > T::zero() && x.is_finite();
        if !pos(self.scp_tol) {
            return Err(invalid("scp_tol", "must be positive"));
        }
        if !pos(self.barrier_t0) {
            return Err(invalid("barrier_t0", "must be positive"));
        }
        if !(self.barrier_mu > T::one()) {
            return Err(invalid("barrier_mu", "must exceed 1"));
        }
        if !pos(self.barrier_tol) {
            return Err(invalid("barrier_tol", "must be positive"));
        }
        if !pos(self.newton_tol) {
            return Err(invalid("newton_tol", "must be positive"));
        }
        if self.newton_max_iters == 0 || self.scp_max_iters == 0 {
            return Err(invalid("max_iters", "must be at least 1"));
        }
        if !(self.line_search_backtrack > T::zero() && self.line_search_backtrack < T::one()) {
            return Err(invalid("line_search_backtrack", "must lie in (0, 1)"));
        }
        if !(self.armijo > T::zero() && self.armijo < T::lit(0.5)) {
            return Err(invalid("armijo", "must lie in (0, 0.5)"));
        }
        if !(self.hessian_floor >= T::zero()) {
            return Err(invalid("hessian_floor", "must be non-negative"));
        }
        if !(self.feasibility_margin > T::zero() && self.feasibility_margin < T::one()) {
            return Err(invalid("feasibility_margin", "must lie in (0, 1)"));
        }
        if self.oversampling < 4 {
            return Err(invalid("oversampling", "must be at least 4"));
        }
        if !(self.domain_guard >= T::zero() && self.domain_guard < T::one()) {
            return Err(invalid("domain_guard", "must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn time_grid(&self, tones: &ToneGrid) -> Result<TimeGrid<T>> {
        TimeGrid::for_tones(tones, self.oversampling * tones.num_subcarriers)
    }
}

/// Amplifier input that produces a given transmit waveform.
///
/// The exact input is the pointwise inverse of the output envelope and is
/// not band-limited; `in_band` holds its first `N` Fourier coefficients as
/// an approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct InputWaveform<T> {
    /// Per antenna, `K` complex input samples over one period.
    pub envelopes: Vec<Vec<Complex<T>>>,
    pub in_band: WeightMatrix<T>,
}

pub fn recover_input<T: Scalar>(
    w_tr: &WeightMatrix<T>,
    sspa: &SspaParams<T>,
    grid: &TimeGrid<T>,
) -> Result<InputWaveform<T>> {
    let (n_tones, n_ant) = w_tr.shape();
    let mut in_band = WeightMatrix::zeros(n_tones, n_ant);
    let mut envelopes = Vec::with_capacity(n_ant);
    for m in 0..n_ant {
        let env = envelope_samples(&w_tr.column(m), grid);
        let input = env
            .iter()
            .map(|&z| {
                let a = z.norm();
                if a == T::zero() {
                    Ok(z)
                } else {
                    Ok(z * (amam_inverse(a, sspa)? / a))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        in_band.set_column(m, &project_to_subcarriers(&input, n_tones, grid)?);
        envelopes.push(input);
    }
    Ok(InputWaveform { envelopes, in_band })
}

#[derive(Debug, Clone)]
pub struct OptResult<T> {
    /// Transmit-referred weights.
    pub weights: WeightMatrix<T>,
    /// Amplifier input, when an amplifier constraint was present.
    pub input_weights: Option<InputWaveform<T>>,
    pub zdc_value: T,
    pub scp_iterations: usize,
    /// True `zdc` at the starting point followed by each accepted SCP iterate.
    pub per_iteration_zdc: Vec<T>,
    /// The starting point followed by each accepted SCP iterate.
    pub iterates: Vec<WeightMatrix<T>>,
    /// `(f1, f2)` at the solution.
    pub constraint_slacks: (T, Option<T>),
    pub newton_iterations: usize,
    pub converged: bool,
}

/// Matched filter `w ∝ conj(h)` scaled deep enough inside the feasible set
/// that each constraint sits at or below `-margin * budget` and the envelope
/// peaks at most at `(1 - 1e-3) A_s`.
pub fn feasible_start<T: Scalar>(
    h: &ChannelMatrix<T>,
    constraints: &ConstraintSet<T>,
    margin: T,
) -> Result<WeightMatrix<T>> {
    let (n_tones, n_ant) = h.shape();
    let direction = WeightMatrix::from_fn(n_tones, n_ant, |n, m| h.get(n, m).conj());
    scale_into_feasible(direction, constraints, margin)
}

/// Positive multiple of `direction` meeting the same margins as
/// [`feasible_start`].
pub fn scale_into_feasible<T: Scalar>(
    direction: WeightMatrix<T>,
    constraints: &ConstraintSet<T>,
    margin: T,
) -> Result<WeightMatrix<T>> {
    let (n_tones, n_ant) = direction.shape();
    let power = crate::signal::average_power(&direction);
    if power == T::zero() {
        return Ok(direction);
    }
    let mut scale = ((T::one() - margin) * constraints.p_tr_max / power).sqrt();
    let Some(amp) = &constraints.amplifier else {
        return Ok(direction.scaled(scale));
    };

    let peak = (0..n_ant)
        .flat_map(|m| envelope_samples(&direction.column(m), &amp.grid))
        .map(|z| z.norm())
        .fold(T::zero(), T::max);
    if peak > T::zero() {
        let cap = (T::one() - T::lit(1e-3)) * amp.sspa.saturation / peak;
        scale = scale.min(cap);
    }

    let target = -margin * amp.p_in_max;
    let f2 = |c: T| -> Result<T> {
        amp.value(&direction.scaled(c).to_real_coords(), n_tones, n_ant)
    };
    if f2(scale)? <= target {
        return Ok(direction.scaled(scale));
    }
    // f2 increases with the scale; bisect for the largest compliant one.
    let (mut lo, mut hi) = (T::zero(), scale);
    for _ in 0..100 {
        let mid = T::lit(0.5) * (lo + hi);
        if f2(mid)? <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(direction.scaled(lo))
}

/// SCP over an arbitrary constraint set, starting from `start`.
pub fn scp_solve<T: Scalar>(
    h: &ChannelMatrix<T>,
    constraints: &ConstraintSet<T>,
    rectenna: &RectennaParams<T>,
    start: WeightMatrix<T>,
    cfg: &SolverConfig<T>,
) -> Result<OptResult<T>> {
    cfg.validate()?;
    if h.is_degenerate() {
        return Err(WptError::DegenerateChannel);
    }
    crate::rectenna::check_shape(h, &start)?;
    let k = diode_coefficients(rectenna);
    let r_ant = rectenna.antenna_resistance;

    let mut current = start;
    let mut current_zdc = zdc_of_weights(h, &current, rectenna)?;
    let mut trace = vec![current_zdc];
    let mut iterates = vec![current.clone()];
    let mut newton_iterations = 0;
    let mut converged = false;
    let mut iterations = 0;
    for l in 1..=cfg.scp_max_iters {
        let wrap = |e: WptError| WptError::Scp {
            iteration: l,
            source: Box::new(e),
        };
        let taylor = zdc_gradient(h, &current, &k, r_ant).map_err(wrap)?;
        let out = barrier_solve(&taylor, &current, constraints, cfg).map_err(wrap)?;
        newton_iterations += out.newton_iterations;
        let next_zdc = zdc_of_weights(h, &out.weights, rectenna)?;
        if next_zdc < current_zdc {
            // Linearized ascent can only lose within the barrier gap; the
            // current point is stationary to that accuracy.
            converged = true;
            break;
        }
        let step = out.weights.distance(&current);
        let reference = out.weights.norm().max(T::min_positive_value());
        current = out.weights;
        current_zdc = next_zdc;
        trace.push(current_zdc);
        iterates.push(current.clone());
        iterations = l;
        if step <= cfg.scp_tol * reference {
            converged = true;
            break;
        }
    }

    let (f1, f2) = constraints.values(&current.to_real_coords())?;
    let input_weights = match &constraints.amplifier {
        Some(amp) => Some(recover_input(&current, &amp.sspa, &amp.grid)?),
        None => None,
    };
    Ok(OptResult {
        weights: current,
        input_weights,
        zdc_value: current_zdc,
        scp_iterations: iterations,
        per_iteration_zdc: trace,
        iterates,
        constraint_slacks: (f1, f2),
        newton_iterations,
        converged,
    })
}

/// Maximizes `zdc` of the transmitted waveform subject to the transmit-power
/// cap and the amplifier input-power cap.
pub fn scp_optimize<T: Scalar>(
    h: &ChannelMatrix<T>,
    budgets: &PowerBudgets<T>,
    sspa: &SspaParams<T>,
    rectenna: &RectennaParams<T>,
    tones: &ToneGrid,
    cfg: &SolverConfig<T>,
) -> Result<OptResult<T>> {
    cfg.validate()?;
    if h.is_degenerate() {
        return Err(WptError::DegenerateChannel);
    }
    if h.shape() != (tones.num_subcarriers, tones.num_antennas) {
        return Err(WptError::ShapeMismatch {
            expected: format!("({}, {})", tones.num_subcarriers, tones.num_antennas),
            actual: format!("{:?}", h.shape()),
        });
    }
    let constraints = ConstraintSet::with_amplifier(
        tones.num_subcarriers,
        tones.num_antennas,
        budgets,
        *sspa,
        cfg.time_grid(tones)?,
        cfg.domain_guard,
    );
    let start = feasible_start(h, &constraints, cfg.feasibility_margin)?;
    scp_solve(h, &constraints, rectenna, start, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::average_power;
    use crate::sspa::amam_forward;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_channel(rng: &mut ChaCha8Rng, n: usize, m: usize) -> ChannelMatrix<f64> {
        ChannelMatrix::from_fn(n, m, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn reference_sspa() -> SspaParams<f64> {
        SspaParams::new(1.0, crate::signal::dbv_to_volts(-35.0), 1.0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::<f64>::default().validate().is_ok());
        let bad = SolverConfig::<f64> {
            barrier_mu: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig::<f64> {
            line_search_backtrack: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(PowerBudgets::new(0.0, 1.0).is_err());
    }

    #[test]
    fn start_is_strictly_feasible_with_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for &margin in &[0.1, 0.5] {
            for _ in 0..10 {
                let h = random_channel(&mut rng, 8, 2);
                let budgets = PowerBudgets::new(1e-2, 1e-4).unwrap();
                let tones = ToneGrid::new(8, 2, 5.18e9, 312.5e3).unwrap();
                let set = ConstraintSet::with_amplifier(
                    8,
                    2,
                    &budgets,
                    reference_sspa(),
                    TimeGrid::default_for(&tones),
                    1e-9,
                );
                let w = feasible_start(&h, &set, margin).unwrap();
                let (f1, f2) = set.values(&w.to_real_coords()).unwrap();
                assert!(f1 <= -margin * 1e-4 * (1.0 - 1e-12));
                assert!(f2.unwrap() <= -margin * 1e-2 * (1.0 - 1e-12));
                assert!(set.strictly_feasible(&w.to_real_coords()));
            }
        }
    }

    #[test]
    fn flat_channel_start_is_uniform() {
        let set = ConstraintSet::transmit_only(4, 1, 1.0);
        let w = feasible_start(&ChannelMatrix::flat(4, 1), &set, 0.1).unwrap();
        let first = w.get(0, 0);
        assert!(w.as_slice().iter().all(|z| (z - first).norm() < 1e-15));
        assert_relative_eq!(average_power(&w), 0.9, max_relative = 1e-14);
    }

    #[test]
    fn degenerate_channel_is_rejected() {
        let tones = ToneGrid::new(2, 1, 5.18e9, 1e6).unwrap();
        let h = ChannelMatrix::from_fn(2, 1, |_, _| Complex::new(0.0, 0.0));
        let err = scp_optimize(
            &h,
            &PowerBudgets::new(1.0, 1.0).unwrap(),
            &reference_sspa(),
            &RectennaParams::reference(),
            &tones,
            &SolverConfig::default(),
        );
        assert!(matches!(err, Err(WptError::DegenerateChannel)));
    }

    #[test]
    fn single_tone_closed_form() {
        let sspa = reference_sspa();
        let rect = RectennaParams::reference();
        let k = diode_coefficients(&rect);
        let tones = ToneGrid::new(1, 1, 5.18e9, 312.5e3).unwrap();
        for &(p_in, p_tr) in &[(1e-2, 1e-4), (1e-2, 1e-3), (1e-5, 1e-4)] {
            let budgets = PowerBudgets::new(p_in, p_tr).unwrap();
            let h = ChannelMatrix::from_fn(1, 1, |_, _| Complex::new(0.6, -0.8));
            let res = scp_optimize(&h, &budgets, &sspa, &rect, &tones, &SolverConfig::default()).unwrap();
            let a = (2.0 * p_tr)
                .sqrt()
                .min(amam_forward((2.0 * p_in).sqrt(), &sspa).unwrap());
            let s2 = a * a; // |h| = 1
            let expect = k.k2 * 50.0 * 0.5 * s2 + k.k4 * 2500.0 * 0.375 * s2 * s2;
            assert_relative_eq!(res.zdc_value, expect, max_relative = 1e-3);
        }
    }

    #[test]
    fn trace_is_monotone_and_iterates_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let tones = ToneGrid::new(8, 1, 5.18e9, 312.5e3).unwrap();
        let budgets = PowerBudgets::new(1e-2, 1e-4).unwrap();
        for _ in 0..3 {
            let h = random_channel(&mut rng, 8, 1);
            let res = scp_optimize(&h, &budgets, &reference_sspa(), &RectennaParams::reference(), &tones, &SolverConfig::default())
                .unwrap();
            for pair in res.per_iteration_zdc.windows(2) {
                assert!(pair[1] - pair[0] >= -1e-12);
            }
            assert!(res.constraint_slacks.0 <= 1e-9);
            assert!(res.constraint_slacks.1.unwrap() <= 1e-9);
            let input = res.input_weights.unwrap();
            assert_eq!(input.envelopes.len(), 1);
        }
    }
}
