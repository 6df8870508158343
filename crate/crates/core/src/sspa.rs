//! Rapp solid-state power amplifier: memoryless AM/AM compression with no
//! phase distortion.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, WptError};
use crate::scalar::Scalar;
use crate::signal::{envelope_samples, TimeGrid, WeightMatrix};

/// Rapp AM/AM parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SspaParams<T> {
    /// Small-signal voltage gain `G`.
    pub gain: T,
    /// Output saturation amplitude `A_s`, volts.
    pub saturation: T,
    /// Smoothness `beta`; large values approach a hard clipper.
    pub smoothness: T,
}

impl<T: Scalar> SspaParams<T> {
    pub fn new(gain: T, saturation: T, smoothness: T) -> Result<Self> {
        let positive = |x: T| x > T::zero() && x.is_finite();
        if !positive(gain) {
            return Err(invalid("gain", "must be positive and finite"));
        }
        if !positive(saturation) {
            return Err(invalid("saturation", "must be positive and finite"));
        }
        if !positive(smoothness) {
            return Err(invalid("smoothness", "must be positive and finite"));
        }
        Ok(Self {
            gain,
            saturation,
            smoothness,
        })
    }

    /// Envelope power `A_s^2 / 2` at which a constant-envelope output saturates.
    pub fn saturation_power(&self) -> T {
        T::lit(0.5) * self.saturation * self.saturation
    }
}

/// Output amplitude for input amplitude `a`.
pub fn amam_forward<T: Scalar>(a: T, p: &SspaParams<T>) -> Result<T> {
    if !(a >= T::zero()) {
        return Err(invalid("amplitude", "must be non-negative"));
    }
    Ok(forward_unchecked(a, p))
}

#[inline]
fn forward_unchecked<T: Scalar>(a: T, p: &SspaParams<T>) -> T {
    let two_beta = T::lit(2.0) * p.smoothness;
    let linear = p.gain * a;
    let r = linear / p.saturation;
    // Evaluated on the side that cannot overflow for large beta.
    if r <= T::one() {
        linear / (T::one() + r.powf(two_beta)).powf(two_beta.recip())
    } else {
        p.saturation / (T::one() + r.powf(-two_beta)).powf(two_beta.recip())
    }
}

/// Input amplitude needed to produce output amplitude `a_out`; defined on `[0, A_s)`.
pub fn amam_inverse<T: Scalar>(a_out: T, p: &SspaParams<T>) -> Result<T> {
    if !(a_out >= T::zero()) {
        return Err(invalid("amplitude", "must be non-negative"));
    }
    if a_out >= p.saturation {
        return Err(WptError::OutOfDomain {
            amplitude: a_out.to_f64_lossy(),
            saturation: p.saturation.to_f64_lossy(),
        });
    }
    let two_beta = T::lit(2.0) * p.smoothness;
    let u = (a_out / p.saturation).powf(two_beta);
    // (1 - u)^(-1/(2 beta)) via log1p keeps precision for small u.
    let stretch = (-(-u).ln_1p() / two_beta).exp();
    Ok(a_out / p.gain * stretch)
}

/// Applies the AM/AM curve sample by sample, keeping each sample's phase.
pub fn apply_to_envelope<T: Scalar>(samples: &[Complex<T>], p: &SspaParams<T>) -> Vec<Complex<T>> {
    samples
        .iter()
        .map(|&z| {
            let a = z.norm();
            if a == T::zero() {
                z
            } else {
                z * (forward_unchecked(a, p) / a)
            }
        })
        .collect()
}

/// In-band Fourier coefficients `0..num_subcarriers` of one period of samples.
///
/// Requires `K >= 2N`; fewer samples alias out-of-band distortion into band.
pub fn project_to_subcarriers<T: Scalar>(
    samples: &[Complex<T>],
    num_subcarriers: usize,
    grid: &TimeGrid<T>,
) -> Result<Vec<Complex<T>>> {
    let k = samples.len();
    if k != grid.len() {
        return Err(WptError::ShapeMismatch {
            expected: format!("{} samples", grid.len()),
            actual: format!("{k} samples"),
        });
    }
    if k < 2 * num_subcarriers {
        return Err(WptError::InsufficientSamples {
            samples: k,
            required: 2 * num_subcarriers,
        });
    }
    let scale = T::from_usize_lossy(k).recip();
    Ok((0..num_subcarriers)
        .map(|n| {
            samples
                .iter()
                .enumerate()
                .fold(Complex::new(T::zero(), T::zero()), |acc, (j, &z)| {
                    acc + z * grid.twiddle(n, j).conj()
                })
                * scale
        })
        .collect())
}

/// Period-averaged input power the amplifier needs to emit `w_tr`:
/// `sum_m mean_k amam_inverse(|x_m(t_k)|)^2 / 2`.
pub fn required_input_power<T: Scalar>(
    w_tr: &WeightMatrix<T>,
    p: &SspaParams<T>,
    grid: &TimeGrid<T>,
) -> Result<T> {
    let k = T::from_usize_lossy(grid.len());
    let mut total = T::zero();
    for m in 0..w_tr.num_antennas() {
        let env = envelope_samples(&w_tr.column(m), grid);
        let mut acc = T::zero();
        for z in env {
            let a_in = amam_inverse(z.norm(), p)?;
            acc += a_in * a_in;
        }
        total += T::lit(0.5) * acc / k;
    }
    Ok(total)
}

/// Input power density `psi(q) = amam_inverse(sqrt q)^2 / 2` as a function of
/// the squared output amplitude `q`, with its first two derivatives.
///
/// `psi'(q) = (1 - v)^(-1/beta - 1) / (2 G^2)` with `v = (q / A_s^2)^beta`,
/// which stays smooth at `q = 0`. Returns `None` once `sqrt q` reaches
/// `A_s (1 - guard)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerDensity<T> {
    pub value: T,
    pub slope: T,
    pub curvature: T,
}

pub fn input_power_density<T: Scalar>(
    q: T,
    p: &SspaParams<T>,
    guard: T,
) -> Option<PowerDensity<T>> {
    let edge = p.saturation * (T::one() - guard);
    if !(q < edge * edge) || q < T::zero() {
        return None;
    }
    let beta = p.smoothness;
    let sat2 = p.saturation * p.saturation;
    let half_inv_g2 = T::lit(0.5) / (p.gain * p.gain);
    let ratio = q / sat2;
    let v = ratio.powf(beta);
    // ln(1 - v) computed once; all powers of (1 - v) derive from it.
    let log_rest = (-v).ln_1p();
    let inv_beta = beta.recip();
    let value = half_inv_g2 * q * (-inv_beta * log_rest).exp();
    let slope = half_inv_g2 * (-(inv_beta + T::one()) * log_rest).exp();
    // v / q = ratio^(beta - 1) / A_s^2, finite at q = 0 only for beta >= 1.
    let v_over_q = if q > T::zero() {
        v / q
    } else if beta == T::one() {
        sat2.recip()
    } else {
        T::zero()
    };
    let curvature = (T::one() + beta)
        * half_inv_g2
        * (-(inv_beta + T::lit(2.0)) * log_rest).exp()
        * v_over_q;
    Some(PowerDensity {
        value,
        slope,
        curvature,
    })
}
