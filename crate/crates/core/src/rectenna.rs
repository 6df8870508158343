//! Truncated diode model of the rectenna.
//!
//! The harvested DC is proportional to
//! `z = k2 R E[y^2] + k4 R^2 E[y^4]`, where `y` is the real received RF
//! signal. For a multisine with per-tone received amplitudes `s_n` this is
//! `k2 R (1/2) sum |s_n|^2 + k4 R^2 (3/8) sum_{n0+n1=n2+n3} s_n0 s_n1 s*_n2 s*_n3`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, WptError};
use crate::scalar::Scalar;
use crate::signal::{envelope_samples, TimeGrid, WeightMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectennaParams<T> {
    /// Reverse-bias saturation current `i_s`, amperes.
    pub saturation_current: T,
    /// Diode ideality factor `eta0`.
    pub ideality: T,
    /// Thermal voltage `V0`, volts.
    pub thermal_voltage: T,
    /// Antenna characteristic impedance `R_ant`, ohms.
    pub antenna_resistance: T,
}

impl<T: Scalar> RectennaParams<T> {
    pub fn new(
        saturation_current: T,
        ideality: T,
        thermal_voltage: T,
        antenna_resistance: T,
    ) -> Result<Self> {
        let check = |x: T, name: &'static str| {
            if x > T::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, "must be positive and finite"))
            }
        };
        check(saturation_current, "saturation_current")?;
        check(ideality, "ideality")?;
        check(thermal_voltage, "thermal_voltage")?;
        check(antenna_resistance, "antenna_resistance")?;
        Ok(Self {
            saturation_current,
            ideality,
            thermal_voltage,
            antenna_resistance,
        })
    }

    /// Diode values used for the Wi-Fi-like scenario: 5 uA, 1.05, 25.86 mV, 50 ohm.
    pub fn reference() -> Self {
        Self {
            saturation_current: T::lit(5e-6),
            ideality: T::lit(1.05),
            thermal_voltage: T::lit(25.86e-3),
            antenna_resistance: T::lit(50.0),
        }
    }
}

/// Second and fourth order Taylor coefficients of the diode current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiodeCoefficients<T> {
    pub k2: T,
    pub k4: T,
}

/// `k_i = i_s / (i! (eta0 V0)^i)` for `i = 2, 4`.
pub fn diode_coefficients<T: Scalar>(p: &RectennaParams<T>) -> DiodeCoefficients<T> {
    let nv = p.ideality * p.thermal_voltage;
    let nv2 = nv * nv;
    DiodeCoefficients {
        k2: p.saturation_current / (T::lit(2.0) * nv2),
        k4: p.saturation_current / (T::lit(24.0) * nv2 * nv2),
    }
}

/// Frequency-domain channel gains, one per (sub-carrier, antenna).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChannelMatrix<T>(WeightMatrix<T>);

impl<T: Scalar> ChannelMatrix<T> {
    pub fn new(gains: WeightMatrix<T>) -> Self {
        Self(gains)
    }

    pub fn from_fn(n: usize, m: usize, f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        Self(WeightMatrix::from_fn(n, m, f))
    }

    /// All gains equal to one.
    pub fn flat(n: usize, m: usize) -> Self {
        Self::from_fn(n, m, |_, _| Complex::new(T::one(), T::zero()))
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> Complex<T> {
        self.0.get(n, m)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.0.num_subcarriers()
    }

    pub fn num_antennas(&self) -> usize {
        self.0.num_antennas()
    }

    pub fn gains(&self) -> &WeightMatrix<T> {
        &self.0
    }

    pub fn is_degenerate(&self) -> bool {
        self.0.as_slice().iter().all(|h| h.norm_sqr() == T::zero())
    }
}

/// Per-tone received amplitudes `s_n = sum_m h_{n,m} w_{n,m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveWeights<T>(pub Vec<Complex<T>>);

pub(crate) fn check_shape<T: Scalar>(h: &ChannelMatrix<T>, w: &WeightMatrix<T>) -> Result<()> {
    if h.shape() != w.shape() {
        return Err(WptError::ShapeMismatch {
            expected: format!("{:?}", h.shape()),
            actual: format!("{:?}", w.shape()),
        });
    }
    Ok(())
}

pub fn effective_weights<T: Scalar>(
    h: &ChannelMatrix<T>,
    w_tr: &WeightMatrix<T>,
) -> Result<EffectiveWeights<T>> {
    check_shape(h, w_tr)?;
    let (n_tones, n_ant) = h.shape();
    Ok(EffectiveWeights(
        (0..n_tones)
            .map(|n| {
                (0..n_ant).fold(Complex::new(T::zero(), T::zero()), |acc, m| {
                    acc + h.get(n, m) * w_tr.get(n, m)
                })
            })
            .collect(),
    ))
}

/// Autocorrelation `r_d = sum_n s_{n+d} s*_n` for lags `d = -(N-1)..=N-1`,
/// stored at offset `d + N - 1`.
fn autocorrelation<T: Scalar>(s: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = s.len();
    let mut r = vec![Complex::new(T::zero(), T::zero()); 2 * n - 1];
    for (slot, d) in (-(n as isize - 1)..n as isize).enumerate() {
        let mut acc = Complex::new(T::zero(), T::zero());
        for j in 0..n as isize {
            let i = j + d;
            if (0..n as isize).contains(&i) {
                acc += s[i as usize] * s[j as usize].conj();
            }
        }
        r[slot] = acc;
    }
    r
}

/// `sum_{n0+n1=n2+n3} s_n0 s_n1 s*_n2 s*_n3 = sum_d |r_d|^2`, the mean of
/// `|envelope|^4` over a period.
pub fn quartic_moment<T: Scalar>(s: &[Complex<T>]) -> T {
    if s.is_empty() {
        return T::zero();
    }
    autocorrelation(s).iter().map(|r| r.norm_sqr()).sum()
}

/// Harvested-DC scaling term from per-tone received amplitudes.
pub fn zdc<T: Scalar>(s: &EffectiveWeights<T>, k: &DiodeCoefficients<T>, r_ant: T) -> T {
    let quadratic: T = s.0.iter().map(|z| z.norm_sqr()).sum();
    k.k2 * r_ant * T::lit(0.5) * quadratic
        + k.k4 * r_ant * r_ant * T::lit(0.375) * quartic_moment(&s.0)
}

/// `zdc` of transmit weights `w_tr` over channel `h`.
pub fn zdc_of_weights<T: Scalar>(
    h: &ChannelMatrix<T>,
    w_tr: &WeightMatrix<T>,
    p: &RectennaParams<T>,
) -> Result<T> {
    let s = effective_weights(h, w_tr)?;
    Ok(zdc(&s, &diode_coefficients(p), p.antenna_resistance))
}

/// `zdc` from period averages of the received envelope on `grid`:
/// `E[y^2] = mean|env|^2 / 2`, `E[y^4] = 3 mean|env|^4 / 8`.
pub fn zdc_time_oracle<T: Scalar>(
    s: &EffectiveWeights<T>,
    k: &DiodeCoefficients<T>,
    r_ant: T,
    grid: &TimeGrid<T>,
) -> Result<T> {
    let required = 4 * s.0.len();
    if grid.len() < required {
        return Err(WptError::InsufficientSamples {
            samples: grid.len(),
            required,
        });
    }
    let env = envelope_samples(&s.0, grid);
    let count = T::from_usize_lossy(env.len());
    let m2 = env.iter().map(|z| z.norm_sqr()).sum::<T>() / count;
    let m4 = env.iter().map(|z| z.norm_sqr().powi(2)).sum::<T>() / count;
    Ok(k.k2 * r_ant * T::lit(0.5) * m2 + k.k4 * r_ant * r_ant * T::lit(0.375) * m4)
}

/// First-order Taylor coefficients of `zdc` with respect to the real and
/// imaginary parts of every transmit weight.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorCoefficients<T> {
    num_subcarriers: usize,
    num_antennas: usize,
    coords: Vec<T>,
}

impl<T: Scalar> TaylorCoefficients<T> {
    pub fn from_real_coords(num_subcarriers: usize, num_antennas: usize, coords: Vec<T>) -> Self {
        assert_eq!(coords.len(), 2 * num_subcarriers * num_antennas);
        Self {
            num_subcarriers,
            num_antennas,
            coords,
        }
    }

    /// d zdc / d Re w_{n,m}
    pub fn re(&self, n: usize, m: usize) -> T {
        self.coords[2 * (n * self.num_antennas + m)]
    }

    /// d zdc / d Im w_{n,m}
    pub fn im(&self, n: usize, m: usize) -> T {
        self.coords[2 * (n * self.num_antennas + m) + 1]
    }

    /// Interleaved `(re, im)` coordinates, same order as
    /// [`WeightMatrix::to_real_coords`].
    pub fn as_real_coords(&self) -> &[T] {
        &self.coords
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.num_subcarriers, self.num_antennas)
    }

    pub fn norm(&self) -> T {
        self.coords.iter().map(|&c| c * c).sum::<T>().sqrt()
    }
}

/// Analytic gradient of `zdc` at `w_tr`.
///
/// With `c_n = d/ds*_n` of the quadratic and quartic parts,
/// `d zdc / d Re w = Re(h* c_n)` and `d zdc / d Im w = Im(h* c_n)`, where
/// `c_n = k2 R s_n + (3/2) k4 R^2 sum_d r_d s_{n-d}`.
pub fn zdc_gradient<T: Scalar>(
    h: &ChannelMatrix<T>,
    w_tr: &WeightMatrix<T>,
    k: &DiodeCoefficients<T>,
    r_ant: T,
) -> Result<TaylorCoefficients<T>> {
    let s = effective_weights(h, w_tr)?.0;
    let (n_tones, n_ant) = h.shape();
    let r = autocorrelation(&s);
    let lag0 = n_tones as isize - 1;
    let quad_scale = k.k2 * r_ant;
    let quart_scale = T::lit(1.5) * k.k4 * r_ant * r_ant;
    let mut coords = Vec::with_capacity(2 * n_tones * n_ant);
    for n in 0..n_tones {
        let mut cubic = Complex::new(T::zero(), T::zero());
        for j in 0..n_tones {
            // d = n - j
            let d = n as isize - j as isize;
            cubic += r[(d + lag0) as usize] * s[j];
        }
        let c = s[n] * quad_scale + cubic * quart_scale;
        for m in 0..n_ant {
            let g = h.get(n, m).conj() * c;
            coords.push(g.re);
            coords.push(g.im);
        }
    }
    Ok(TaylorCoefficients::from_real_coords(n_tones, n_ant, coords))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    /// Literal enumeration of index 4-tuples with n0 + n1 = n2 + n3.
    fn quartic_brute(s: &[Complex<f64>]) -> Complex<f64> {
        let n = s.len();
        let mut acc = c(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                for d2 in 0..n {
                    for d3 in 0..n {
                        if a + b == d2 + d3 {
                            acc += s[a] * s[b] * s[d2].conj() * s[d3].conj();
                        }
                    }
                }
            }
        }
        acc
    }

    fn random_s(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex<f64>> {
        (0..n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn diode_coefficient_values() {
        let k = diode_coefficients(&RectennaParams::<f64>::reference());
        assert_relative_eq!(k.k2, 3.391e-3, max_relative = 5e-4);
        assert_relative_eq!(k.k4, 0.3833, max_relative = 5e-4);

        let mut hot = RectennaParams::<f64>::reference();
        hot.thermal_voltage *= 2.0;
        let k_hot = diode_coefficients(&hot);
        assert_relative_eq!(k_hot.k2, k.k2 / 4.0, max_relative = 1e-14);
        assert_relative_eq!(k_hot.k4, k.k4 / 16.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_saturation_current_gives_zero_coefficients() {
        let p = RectennaParams {
            saturation_current: 0.0,
            ..RectennaParams::<f64>::reference()
        };
        let k = diode_coefficients(&p);
        assert_eq!((k.k2, k.k4), (0.0, 0.0));
        assert!(RectennaParams::new(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn effective_weight_examples() {
        let w = WeightMatrix::from_column(&[c(1.0, 2.0), c(-0.5, 0.0)]);
        let s = effective_weights(&ChannelMatrix::flat(2, 1), &w).unwrap();
        assert_eq!(s.0, w.column(0));

        let zero = effective_weights(&ChannelMatrix::<f64>::flat(2, 1), &WeightMatrix::zeros(2, 1)).unwrap();
        assert!(zero.0.iter().all(|z| z.norm() == 0.0));

        let h = ChannelMatrix::from_fn(1, 2, |_, m| if m == 0 { c(1.0, 0.0) } else { c(0.0, 1.0) });
        let w = WeightMatrix::from_fn(1, 2, |_, _| c(1.0, 0.0));
        assert_eq!(effective_weights(&h, &w).unwrap().0, vec![c(1.0, 1.0)]);

        assert!(matches!(
            effective_weights(&ChannelMatrix::<f64>::flat(2, 1), &WeightMatrix::zeros(2, 2)),
            Err(WptError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn zdc_single_tone_hand_value() {
        let p = RectennaParams::<f64>::reference();
        let k = diode_coefficients(&p);
        let s = EffectiveWeights(vec![c(0.01, 0.0)]);
        let z = zdc(&s, &k, 50.0);
        assert_relative_eq!(z, 1.207e-5, max_relative = 1e-3);
        let quad = k.k2 * 50.0 * 0.5 * 1e-4;
        let quart = k.k4 * 2500.0 * 0.375 * 1e-8;
        assert_relative_eq!(quad, 8.478e-6, max_relative = 1e-3);
        assert_relative_eq!(quart, 3.594e-6, max_relative = 1e-3);
        assert_eq!(zdc(&EffectiveWeights(vec![c(0.0, 0.0); 3]), &k, 50.0), 0.0);
    }

    #[test]
    fn quartic_moment_matches_enumeration() {
        let sigma = 0.3;
        let pair = [c(sigma, 0.0), c(sigma, 0.0)];
        assert_relative_eq!(quartic_moment(&pair), 6.0 * sigma.powi(4), max_relative = 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=8 {
            let s = random_s(&mut rng, n);
            let brute = quartic_brute(&s);
            assert!(brute.im.abs() < 1e-12 * brute.re.abs());
            assert_relative_eq!(quartic_moment(&s), brute.re, max_relative = 1e-12);
        }
    }

    #[test]
    fn frequency_and_time_forms_agree() {
        let k = diode_coefficients(&RectennaParams::<f64>::reference());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.random_range(1..=8);
            let s = EffectiveWeights(random_s(&mut rng, n));
            let grid = TimeGrid::with_samples(4 * n).unwrap();
            let a = zdc(&s, &k, 50.0);
            let b = zdc_time_oracle(&s, &k, 50.0, &grid).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
        let sigma = 0.02;
        let s = EffectiveWeights(vec![c(sigma, 0.0); 2]);
        let grid = TimeGrid::with_samples(8).unwrap();
        let expect = k.k2 * 50.0 * sigma * sigma + k.k4 * 2500.0 * 0.375 * 6.0 * sigma.powi(4);
        assert_relative_eq!(zdc_time_oracle(&s, &k, 50.0, &grid).unwrap(), expect, max_relative = 1e-12);
        assert!(zdc_time_oracle(&s, &k, 50.0, &TimeGrid::with_samples(7).unwrap()).is_err());
    }

    #[test]
    fn zdc_invariant_under_phase_rotation_and_time_shift() {
        let k = diode_coefficients(&RectennaParams::<f64>::reference());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let s = random_s(&mut rng, 6);
            let (phi, psi) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let shifted: Vec<_> = s
                .iter()
                .enumerate()
                .map(|(n, z)| z * Complex::from_polar(1.0, phi + n as f64 * psi))
                .collect();
            assert_relative_eq!(
                zdc(&EffectiveWeights(s), &k, 50.0),
                zdc(&EffectiveWeights(shifted), &k, 50.0),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn zdc_splits_into_quadratic_and_quartic_parts() {
        let k = diode_coefficients(&RectennaParams::<f64>::reference());
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let s = random_s(&mut rng, 5);
        let scaled: Vec<_> = s.iter().map(|z| z * 2.0).collect();
        let z1 = zdc(&EffectiveWeights(s.clone()), &k, 50.0);
        let z2 = zdc(&EffectiveWeights(scaled), &k, 50.0);
        // z1 = q + f, z2 = 4q + 16f
        let quart = (z2 - 4.0 * z1) / 12.0;
        let quad = z1 - quart;
        let direct_quad = k.k2 * 50.0 * 0.5 * s.iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert_relative_eq!(quad, direct_quad, max_relative = 1e-10);
        assert!(quart > 0.0);
    }

    #[test]
    fn gradient_zero_at_origin() {
        let k = diode_coefficients(&RectennaParams::<f64>::reference());
        let g = zdc_gradient(&ChannelMatrix::flat(3, 2), &WeightMatrix::zeros(3, 2), &k, 50.0).unwrap();
        assert!(g.as_real_coords().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_single_tone_closed_form() {
        let k = diode_coefficients(&RectennaParams::<f64>::reference());
        let w = 0.013;
        let g = zdc_gradient(
            &ChannelMatrix::flat(1, 1),
            &WeightMatrix::from_column(&[c(w, 0.0)]),
            &k,
            50.0,
        )
        .unwrap();
        let expect = k.k2 * 50.0 * w + 1.5 * k.k4 * 2500.0 * w.powi(3);
        assert_relative_eq!(g.re(0, 0), expect, max_relative = 1e-13);
        assert!(g.im(0, 0).abs() < 1e-18);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let k = diode_coefficients(&RectennaParams::<f64>::reference());
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (n, m) = (4, 2);
        let h = ChannelMatrix::from_fn(n, m, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let w = WeightMatrix::from_fn(n, m, |_, _| c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)));
        let g = zdc_gradient(&h, &w, &k, 50.0).unwrap();
        let x = w.to_real_coords();
        let f = |x: &[f64]| {
            zdc(&effective_weights(&h, &WeightMatrix::from_real_coords(n, m, x)).unwrap(), &k, 50.0)
        };
        for i in 0..x.len() {
            let step = 1e-6;
            let mut up = x.clone();
            let mut dn = x.clone();
            up[i] += step;
            dn[i] -= step;
            let fd = (f(&up) - f(&dn)) / (2.0 * step);
            let an = g.as_real_coords()[i];
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(g.norm() * 1e-3), "coord {i}: {an} vs {fd}");
        }
    }

    #[test]
    fn zdc_is_convex_along_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = ChannelMatrix::from_fn(5, 2, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        for _ in 0..50 {
            let w1 = WeightMatrix::from_fn(5, 2, |_, _| c(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)));
            let w2 = WeightMatrix::from_fn(5, 2, |_, _| c(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)));
            let lam: f64 = rng.random_range(0.0..1.0);
            let mix = WeightMatrix::from_fn(5, 2, |n, m| w1.get(n, m) * lam + w2.get(n, m) * (1.0 - lam));
            let p = RectennaParams::reference();
            let z = |w: &WeightMatrix<f64>| zdc_of_weights(&h, w, &p).unwrap();
            assert!(z(&mix) <= lam * z(&w1) + (1.0 - lam) * z(&w2) + 1e-18);
            assert!(z(&mix) >= 0.0);
        }
    }
}
