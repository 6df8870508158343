//! Damped Newton minimization with a feasibility-aware backtracking line search.

use crate::error::{Result, WptError};
use crate::scalar::Scalar;

use super::linalg::solve_regularized;
use super::SolverConfig;

/// Value, gradient and row-major Hessian at a point.
#[derive(Debug, Clone)]
pub struct Evaluation<T> {
    pub value: T,
    pub gradient: Vec<T>,
    pub hessian: Vec<T>,
}

/// Twice-differentiable objective on an open domain.
pub trait SmoothObjective<T> {
    fn dim(&self) -> usize;

    /// `None` outside the domain.
    fn value(&self, x: &[T]) -> Option<T>;

    /// `None` outside the domain.
    fn evaluate(&self, x: &[T]) -> Option<Evaluation<T>>;
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome<T> {
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `objective` from `start`.
///
/// Stops when the gradient norm drops to `newton_tol`, when half the squared
/// Newton decrement drops to `newton_tol^2`, or after `newton_max_iters`
/// accepted steps. Every accepted step stays inside the domain and satisfies
/// the Armijo condition.
pub fn newton_minimize<T: Scalar, O: SmoothObjective<T>>(
    start: &[T],
    objective: &O,
    cfg: &SolverConfig<T>,
) -> Result<NewtonOutcome<T>> {
    let dim = objective.dim();
    assert_eq!(start.len(), dim);
    let mut x = start.to_vec();
    let mut eval = objective.evaluate(&x).ok_or(WptError::Infeasible)?;
    let min_step = T::lit(1e-20);
    for iteration in 0..cfg.newton_max_iters {
        let grad_norm = eval.gradient.iter().map(|&g| g * g).sum::<T>().sqrt();
        if grad_norm <= cfg.newton_tol {
            return Ok(NewtonOutcome {
                x,
                value: eval.value,
                iterations: iteration,
                converged: true,
            });
        }
        let neg_grad: Vec<T> = eval.gradient.iter().map(|&g| -g).collect();
        let step = solve_regularized(&eval.hessian, dim, &neg_grad, cfg.hessian_floor)
            .ok_or(WptError::NoProgress { iterations: iteration })?;
        let slope: T = eval.gradient.iter().zip(&step).map(|(&g, &d)| g * d).sum();
        let decrement_sq = -slope;
        if decrement_sq * T::lit(0.5) <= cfg.newton_tol * cfg.newton_tol {
            return Ok(NewtonOutcome {
                x,
                value: eval.value,
                iterations: iteration,
                converged: true,
            });
        }

        let mut s = T::one();
        let accepted = loop {
            let trial: Vec<T> = x.iter().zip(&step).map(|(&xi, &di)| xi + s * di).collect();
            if let Some(v) = objective.value(&trial) {
                if v <= eval.value + cfg.armijo * s * slope {
                    break Some(trial);
                }
            }
            s *= cfg.line_search_backtrack;
            if s < min_step {
                break None;
            }
        };
        match accepted {
            Some(trial) => {
                x = trial;
                eval = objective.evaluate(&x).ok_or(WptError::Infeasible)?;
            }
            None => {
                // Predicted decrease below what the objective can resolve.
                let resolvable =
                    T::lit(1e3) * T::epsilon() * eval.value.abs().max(T::one());
                if decrement_sq * T::lit(0.5) <= resolvable {
                    return Ok(NewtonOutcome {
                        x,
                        value: eval.value,
                        iterations: iteration,
                        converged: true,
                    });
                }
                return Err(WptError::NoProgress { iterations: iteration });
            }
        }
    }
    Ok(NewtonOutcome {
        value: eval.value,
        x,
        iterations: cfg.newton_max_iters,
        converged: false,
    })
}
