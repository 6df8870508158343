//! The two convex constraints of the transmit-referred problem, evaluated on
//! interleaved real coordinates `(Re w_{n,m}, Im w_{n,m})`.
//!
//! * `f1(w) = (1/2) sum |w|^2 - P_tr`
//! * `f2(w) = sum_m mean_k psi(|x_m(t_k)|^2) - P_in`, where `psi` is the
//!   inverse-amplifier input power density of [`crate::sspa::input_power_density`].

use num_complex::Complex;

use crate::error::{Result, WptError};
use crate::scalar::Scalar;
use crate::signal::{TimeGrid, WeightMatrix};
use crate::sspa::{input_power_density, SspaParams};

use super::PowerBudgets;

/// Value and gradient of one constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintValue<T> {
    pub value: T,
    pub gradient: Vec<T>,
}

/// Input-power limit seen through the inverse amplifier.
#[derive(Debug, Clone)]
pub struct AmplifierConstraint<T> {
    pub sspa: SspaParams<T>,
    pub p_in_max: T,
    pub grid: TimeGrid<T>,
    /// Relative distance below `A_s` where the amplifier domain ends.
    pub guard: T,
}

/// Feasible set of one SCP round.
#[derive(Debug, Clone)]
pub struct ConstraintSet<T> {
    pub num_subcarriers: usize,
    pub num_antennas: usize,
    pub p_tr_max: T,
    pub amplifier: Option<AmplifierConstraint<T>>,
}

pub(crate) struct Curvature<T> {
    pub value: T,
    pub gradient: Vec<T>,
    /// Row-major `dim x dim`.
    pub hessian: Vec<T>,
}

impl<T: Scalar> ConstraintSet<T> {
    /// Transmit-power constraint only (ideal amplifier).
    pub fn transmit_only(num_subcarriers: usize, num_antennas: usize, p_tr_max: T) -> Self {
        Self {
            num_subcarriers,
            num_antennas,
            p_tr_max,
            amplifier: None,
        }
    }

    /// Both constraints, with the amplifier integral sampled on `grid`.
    pub fn with_amplifier(
        num_subcarriers: usize,
        num_antennas: usize,
        budgets: &PowerBudgets<T>,
        sspa: SspaParams<T>,
        grid: TimeGrid<T>,
        guard: T,
    ) -> Self {
        Self {
            num_subcarriers,
            num_antennas,
            p_tr_max: budgets.p_tr_max,
            amplifier: Some(AmplifierConstraint {
                sspa,
                p_in_max: budgets.p_in_max,
                grid,
                guard,
            }),
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.num_subcarriers * self.num_antennas
    }

    pub fn count(&self) -> usize {
        1 + usize::from(self.amplifier.is_some())
    }

    /// Constraint values `(f1, f2)`, `f2 = None` without an amplifier.
    /// Errs if the envelope leaves the amplifier domain.
    pub fn values(&self, x: &[T]) -> Result<(T, Option<T>)> {
        let f1 = transmit_value(x, self.p_tr_max);
        let f2 = match &self.amplifier {
            None => None,
            Some(amp) => Some(amp.value(x, self.num_subcarriers, self.num_antennas)?),
        };
        Ok((f1, f2))
    }

    /// `true` when every constraint is strictly negative and the envelope is in domain.
    pub fn strictly_feasible(&self, x: &[T]) -> bool {
        match self.values(x) {
            Ok((f1, f2)) => f1 < T::zero() && f2.is_none_or(|v| v < T::zero()),
            Err(_) => false,
        }
    }
}

fn transmit_value<T: Scalar>(x: &[T], p_tr_max: T) -> T {
    T::lit(0.5) * x.iter().map(|&v| v * v).sum::<T>() - p_tr_max
}

pub(crate) fn transmit_curvature<T: Scalar>(x: &[T], p_tr_max: T) -> Curvature<T> {
    let dim = x.len();
    let mut hessian = vec![T::zero(); dim * dim];
    for i in 0..dim {
        hessian[i * dim + i] = T::one();
    }
    Curvature {
        value: transmit_value(x, p_tr_max),
        gradient: x.to_vec(),
        hessian,
    }
}

impl<T: Scalar> AmplifierConstraint<T> {
    fn envelope(&self, x: &[T], n_tones: usize, n_ant: usize, m: usize) -> Vec<Complex<T>> {
        (0..self.grid.len())
            .map(|k| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for n in 0..n_tones {
                    let i = 2 * (n * n_ant + m);
                    acc += Complex::new(x[i], x[i + 1]) * self.grid.twiddle(n, k);
                }
                acc
            })
            .collect()
    }

    fn out_of_domain(&self, q: T) -> WptError {
        WptError::OutOfDomain {
            amplitude: q.sqrt().to_f64_lossy(),
            saturation: self.sspa.saturation.to_f64_lossy(),
        }
    }

    pub(crate) fn value(&self, x: &[T], n_tones: usize, n_ant: usize) -> Result<T> {
        let inv_k = T::from_usize_lossy(self.grid.len()).recip();
        let mut total = T::zero();
        for m in 0..n_ant {
            for z in self.envelope(x, n_tones, n_ant, m) {
                let q = z.norm_sqr();
                let d = input_power_density(q, &self.sspa, self.guard)
                    .ok_or_else(|| self.out_of_domain(q))?;
                total += d.value;
            }
        }
        Ok(total * inv_k - self.p_in_max)
    }

    /// Value, gradient, and (optionally) exact Hessian.
    ///
    /// With `q = |x(t_k)|^2`, `dq/d(Re w_n) = 2 Re(x e^{-i theta_n})`,
    /// `dq/d(Im w_n) = 2 Im(x e^{-i theta_n})`, and the Hessian of `q` depends
    /// only on `n - n'`, so its weighted sum over samples reduces to
    /// `S_d = sum_k psi'_k e^{i 2 pi d k / K}`.
    pub(crate) fn curvature(
        &self,
        x: &[T],
        n_tones: usize,
        n_ant: usize,
        with_hessian: bool,
    ) -> Result<Curvature<T>> {
        let dim = 2 * n_tones * n_ant;
        let k_len = self.grid.len();
        let inv_k = T::from_usize_lossy(k_len).recip();
        let two = T::lit(2.0);
        let mut value = T::zero();
        let mut gradient = vec![T::zero(); dim];
        let mut hessian = if with_hessian {
            vec![T::zero(); dim * dim]
        } else {
            Vec::new()
        };
        let mut dq = vec![T::zero(); 2 * n_tones];
        for m in 0..n_ant {
            let env = self.envelope(x, n_tones, n_ant, m);
            let mut block = vec![T::zero(); 4 * n_tones * n_tones];
            let mut slopes = Vec::with_capacity(k_len);
            for (k, z) in env.iter().enumerate() {
                let q = z.norm_sqr();
                let d = input_power_density(q, &self.sspa, self.guard)
                    .ok_or_else(|| self.out_of_domain(q))?;
                value += d.value;
                slopes.push(d.slope);
                for n in 0..n_tones {
                    let c = z * self.grid.twiddle(n, k).conj();
                    dq[2 * n] = two * c.re;
                    dq[2 * n + 1] = two * c.im;
                }
                for n in 0..n_tones {
                    let i = 2 * (n * n_ant + m);
                    gradient[i] += d.slope * dq[2 * n] * inv_k;
                    gradient[i + 1] += d.slope * dq[2 * n + 1] * inv_k;
                }
                if with_hessian && d.curvature != T::zero() {
                    let b = 2 * n_tones;
                    for r in 0..b {
                        let scaled = d.curvature * dq[r];
                        for c in r..b {
                            block[r * b + c] += scaled * dq[c];
                        }
                    }
                }
            }
            if !with_hessian {
                continue;
            }
            let b = 2 * n_tones;
            // Fill the lower triangle of the outer-product part.
            for r in 0..b {
                for c in 0..r {
                    block[r * b + c] = block[c * b + r];
                }
            }
            // S_d for d in -(N-1)..=(N-1) at offset d + N - 1.
            let lags: Vec<Complex<T>> = (0..2 * n_tones - 1)
                .map(|slot| {
                    let d = slot as isize - (n_tones as isize - 1);
                    let shift = d.rem_euclid(k_len as isize) as usize;
                    slopes
                        .iter()
                        .enumerate()
                        .fold(Complex::new(T::zero(), T::zero()), |acc, (k, &s)| {
                            acc + self.grid.twiddle(shift, k) * s
                        })
                })
                .collect();
            for n in 0..n_tones {
                for np in 0..n_tones {
                    let s = lags[n + n_tones - 1 - np];
                    let (cos_sum, sin_sum) = (two * s.re, two * s.im);
                    block[(2 * n) * b + 2 * np] += cos_sum;
                    block[(2 * n + 1) * b + 2 * np + 1] += cos_sum;
                    block[(2 * n) * b + 2 * np + 1] += sin_sum;
                    block[(2 * n + 1) * b + 2 * np] -= sin_sum;
                }
            }
            for r in 0..b {
                let gi = 2 * ((r / 2) * n_ant + m) + r % 2;
                for c in 0..b {
                    let gj = 2 * ((c / 2) * n_ant + m) + c % 2;
                    hessian[gi * dim + gj] = block[r * b + c] * inv_k;
                }
            }
        }
        Ok(Curvature {
            value: value * inv_k - self.p_in_max,
            gradient,
            hessian,
        })
    }
}

/// Transmit-power constraint `f1` and its gradient.
pub fn constraint_f1<T: Scalar>(w: &WeightMatrix<T>, budgets: &PowerBudgets<T>) -> ConstraintValue<T> {
    let x = w.to_real_coords();
    ConstraintValue {
        value: transmit_value(&x, budgets.p_tr_max),
        gradient: x,
    }
}

/// Input-power constraint `f2` through the inverse amplifier, and its gradient.
pub fn constraint_f2<T: Scalar>(
    w: &WeightMatrix<T>,
    sspa: &SspaParams<T>,
    budgets: &PowerBudgets<T>,
    grid: &TimeGrid<T>,
    guard: T,
) -> Result<ConstraintValue<T>> {
    let amp = AmplifierConstraint {
        sspa: *sspa,
        p_in_max: budgets.p_in_max,
        grid: grid.clone(),
        guard,
    };
    let c = amp.curvature(
        &w.to_real_coords(),
        w.num_subcarriers(),
        w.num_antennas(),
        false,
    )?;
    Ok(ConstraintValue {
        value: c.value,
        gradient: c.gradient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::average_power;
    use crate::sspa::required_input_power;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn budgets(p_in: f64, p_tr: f64) -> PowerBudgets<f64> {
        PowerBudgets::new(p_in, p_tr).unwrap()
    }

    fn random_weights(rng: &mut ChaCha8Rng, n: usize, m: usize, scale: f64) -> WeightMatrix<f64> {
        WeightMatrix::from_fn(n, m, |_, _| {
            Complex::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
        })
    }

    #[test]
    fn f1_examples() {
        let c = constraint_f1(&WeightMatrix::<f64>::zeros(2, 1), &budgets(1.0, 1.0));
        assert_eq!(c.value, -1.0);
        assert!(c.gradient.iter().all(|&g| g == 0.0));
        let w = WeightMatrix::from_column(&[Complex::new(2f64.sqrt(), 0.0)]);
        assert!(constraint_f1(&w, &budgets(1.0, 1.0)).value.abs() < 1e-15);
    }

    #[test]
    fn f2_at_origin() {
        let grid = TimeGrid::with_samples(32).unwrap();
        let sspa = SspaParams::new(1.0, 0.1, 1.0).unwrap();
        let c = constraint_f2(&WeightMatrix::zeros(2, 1), &sspa, &budgets(0.3, 1.0), &grid, 1e-9).unwrap();
        assert_eq!(c.value, -0.3);
        assert!(c.gradient.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn f2_linear_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_weights(&mut rng, 4, 2, 0.5);
        let grid = TimeGrid::with_samples(64).unwrap();
        let g = 2.0;
        let sspa = SspaParams::new(g, 1e6, 1.0).unwrap();
        let c = constraint_f2(&w, &sspa, &budgets(0.3, 1.0), &grid, 1e-9).unwrap();
        assert_relative_eq!(c.value, average_power(&w) / (g * g) - 0.3, max_relative = 1e-6);
        for (a, b) in c.gradient.iter().zip(w.to_real_coords()) {
            assert_relative_eq!(*a, b / (g * g), max_relative = 1e-6, epsilon = 1e-15);
        }
    }

    #[test]
    fn f2_value_agrees_with_required_input_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_weights(&mut rng, 5, 2, 0.03);
        let grid = TimeGrid::with_samples(80).unwrap();
        let sspa = SspaParams::new(1.0, 0.2, 1.5).unwrap();
        let c = constraint_f2(&w, &sspa, &budgets(0.01, 1.0), &grid, 1e-9).unwrap();
        let direct = required_input_power(&w, &sspa, &grid).unwrap();
        assert_relative_eq!(c.value + 0.01, direct, max_relative = 1e-12);
    }

    #[test]
    fn f2_out_of_domain() {
        let grid = TimeGrid::with_samples(16).unwrap();
        let sspa = SspaParams::new(1.0, 0.1, 1.0).unwrap();
        let w = WeightMatrix::from_column(&[Complex::new(0.2, 0.0)]);
        assert!(matches!(
            constraint_f2(&w, &sspa, &budgets(1.0, 1.0), &grid, 1e-9),
            Err(WptError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn f2_is_convex_along_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let grid = TimeGrid::with_samples(64).unwrap();
        let b = budgets(1.0, 1.0);
        for _ in 0..50 {
            let sspa = SspaParams::new(1.0, 0.1, rng.random_range(0.5..4.0)).unwrap();
            // Convex combinations stay below the largest endpoint peak.
            let mut inside = || {
                let w = random_weights(&mut rng, 4, 2, 1.0);
                let peak = (0..2)
                    .flat_map(|a| crate::signal::envelope_samples(&w.column(a), &grid))
                    .fold(0.0f64, |acc, z| acc.max(z.norm()));
                w.scaled(rng.random_range(0.1..0.99) * 0.1 / peak)
            };
            let (a, c) = (inside(), inside());
            let f = |w: &WeightMatrix<f64>| constraint_f2(w, &sspa, &b, &grid, 1e-9).unwrap().value;
            let (fa, fc) = (f(&a), f(&c));
            for theta in [0.1, 0.25, 0.5, 0.75, 0.9] {
                let mix = WeightMatrix::from_fn(4, 2, |n, m| a.get(n, m) * theta + c.get(n, m) * (1.0 - theta));
                let chord = theta * fa + (1.0 - theta) * fc;
                assert!(f(&mix) <= chord + 1e-12 * chord.abs().max(1.0), "theta {theta}");
            }
        }
    }

    #[test]
    fn f2_hessian_matches_gradient_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, m) = (3, 2);
        let w = random_weights(&mut rng, n, m, 0.02);
        let set = ConstraintSet::with_amplifier(
            n,
            m,
            &budgets(0.01, 1.0),
            SspaParams::new(1.0, 0.12, 1.0).unwrap(),
            TimeGrid::with_samples(48).unwrap(),
            1e-9,
        );
        let amp = set.amplifier.as_ref().unwrap();
        let x = w.to_real_coords();
        let dim = x.len();
        let full = amp.curvature(&x, n, m, true).unwrap();
        for j in 0..dim {
            let h = 1e-7;
            let mut up = x.clone();
            let mut dn = x.clone();
            up[j] += h;
            dn[j] -= h;
            let gu = amp.curvature(&up, n, m, false).unwrap().gradient;
            let gd = amp.curvature(&dn, n, m, false).unwrap().gradient;
            for i in 0..dim {
                let fd = (gu[i] - gd[i]) / (2.0 * h);
                let an = full.hessian[i * dim + j];
                assert!((fd - an).abs() <= 1e-5 * (1.0 + an.abs()), "H[{i},{j}] {an} vs {fd}");
            }
        }
    }
}
