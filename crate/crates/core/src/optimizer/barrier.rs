//! Log-barrier method for one linearized round:
//! minimize `-alpha^T x - (1/t) sum_i log(-f_i(x))` for growing `t`.

use crate::error::{Result, WptError};
use crate::rectenna::TaylorCoefficients;
use crate::scalar::Scalar;
use crate::signal::WeightMatrix;

use super::constraints::{transmit_curvature, ConstraintSet, Curvature};
use super::newton::{newton_minimize, Evaluation, SmoothObjective};
use super::SolverConfig;

/// Barrier-smoothed negative linear objective at a fixed `t`.
pub struct BarrierObjective<'a, T> {
    linear: &'a [T],
    t: T,
    constraints: &'a ConstraintSet<T>,
}

impl<'a, T: Scalar> BarrierObjective<'a, T> {
    pub fn new(linear: &'a [T], t: T, constraints: &'a ConstraintSet<T>) -> Self {
        assert_eq!(linear.len(), constraints.dim());
        Self {
            linear,
            t,
            constraints,
        }
    }

    fn curvatures(&self, x: &[T], with_hessian: bool) -> Option<Vec<Curvature<T>>> {
        let mut out = vec![transmit_curvature(x, self.constraints.p_tr_max)];
        if let Some(amp) = &self.constraints.amplifier {
            let c = amp
                .curvature(
                    x,
                    self.constraints.num_subcarriers,
                    self.constraints.num_antennas,
                    with_hessian,
                )
                .ok()?;
            out.push(c);
        }
        if out.iter().any(|c| !(c.value < T::zero())) {
            return None;
        }
        Some(out)
    }
}

impl<T: Scalar> SmoothObjective<T> for BarrierObjective<'_, T> {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, x: &[T]) -> Option<T> {
        let (f1, f2) = self.constraints.values(x).ok()?;
        let mut log_sum = T::zero();
        for f in std::iter::once(f1).chain(f2) {
            if !(f < T::zero()) {
                return None;
            }
            log_sum += (-f).ln();
        }
        let lin: T = self.linear.iter().zip(x).map(|(&a, &v)| a * v).sum();
        Some(-lin - log_sum / self.t)
    }

    fn evaluate(&self, x: &[T]) -> Option<Evaluation<T>> {
        let dim = self.dim();
        let parts = self.curvatures(x, true)?;
        let inv_t = self.t.recip();
        let lin: T = self.linear.iter().zip(x).map(|(&a, &v)| a * v).sum();
        let mut value = -lin;
        let mut gradient: Vec<T> = self.linear.iter().map(|&a| -a).collect();
        let mut hessian = vec![T::zero(); dim * dim];
        for c in &parts {
            let slack = -c.value;
            value -= slack.ln() * inv_t;
            let g_scale = inv_t / slack;
            for (g, &cg) in gradient.iter_mut().zip(&c.gradient) {
                *g += g_scale * cg;
            }
            let outer = inv_t / (slack * slack);
            for i in 0..dim {
                let gi = c.gradient[i] * outer;
                for j in 0..dim {
                    hessian[i * dim + j] += gi * c.gradient[j] + g_scale * c.hessian[i * dim + j];
                }
            }
        }
        Some(Evaluation {
            value,
            gradient,
            hessian,
        })
    }
}

/// Barrier objective with value, gradient and Hessian at `w` for the given
/// Taylor coefficients. Errs when `w` is not strictly feasible.
pub fn barrier_objective<T: Scalar>(
    w: &WeightMatrix<T>,
    taylor: &TaylorCoefficients<T>,
    t: T,
    constraints: &ConstraintSet<T>,
) -> Result<Evaluation<T>> {
    let x = w.to_real_coords();
    if let Err(e) = constraints.values(&x) {
        return Err(e);
    }
    BarrierObjective::new(taylor.as_real_coords(), t, constraints)
        .evaluate(&x)
        .ok_or(WptError::Infeasible)
}

#[derive(Debug, Clone)]
pub struct BarrierOutcome<T> {
    pub weights: WeightMatrix<T>,
    pub rounds: usize,
    pub newton_iterations: usize,
    /// Final barrier parameter.
    pub t: T,
}

/// Follows the central path from `t0`, multiplying `t` by `mu` and warm
/// starting each Newton solve, until the duality-gap bound `2 / t` (two
/// constraints) drops to `barrier_tol`.
///
/// The linear objective is rescaled so its maximum over the transmit ball is
/// one; this leaves every minimizer unchanged and makes `barrier_tol` a
/// relative duality gap.
pub fn barrier_solve<T: Scalar>(
    taylor: &TaylorCoefficients<T>,
    start: &WeightMatrix<T>,
    constraints: &ConstraintSet<T>,
    cfg: &SolverConfig<T>,
) -> Result<BarrierOutcome<T>> {
    let (n_tones, n_ant) = start.shape();
    let mut x = start.to_real_coords();
    if !constraints.strictly_feasible(&x) {
        return Err(WptError::Infeasible);
    }
    let alpha_norm = taylor.norm();
    let radius = (T::lit(2.0) * constraints.p_tr_max).sqrt();
    let scale = if alpha_norm > T::zero() {
        (alpha_norm * radius).recip()
    } else {
        T::one()
    };
    let linear: Vec<T> = taylor.as_real_coords().iter().map(|&a| a * scale).collect();
    let gap_numerator = T::lit(2.0);

    let mut t = cfg.barrier_t0;
    let mut rounds = 0;
    let mut newton_iterations = 0;
    loop {
        let objective = BarrierObjective::new(&linear, t, constraints);
        let out = newton_minimize(&x, &objective, cfg)?;
        x = out.x;
        rounds += 1;
        newton_iterations += out.iterations;
        if gap_numerator / t <= cfg.barrier_tol {
            break;
        }
        t *= cfg.barrier_mu;
    }
    Ok(BarrierOutcome {
        weights: WeightMatrix::from_real_coords(n_tones, n_ant, &x),
        rounds,
        newton_iterations,
        t,
    })
}
