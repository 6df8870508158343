//! Multisine waveforms on a periodic baseband time grid.
//!
//! Every waveform is handled through its complex baseband envelope
//! `x(t) = sum_n w_n exp(i 2 pi n delta_f t)`; the carrier `f0` only matters
//! for reporting. Sub-carrier `n` (0-indexed) sits at `f0 + n * delta_f`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, WptError};
use crate::scalar::Scalar;

/// Sub-carrier and antenna layout of the transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneGrid {
    pub num_subcarriers: usize,
    pub num_antennas: usize,
    /// Lowest sub-carrier frequency, Hz.
    pub base_frequency: f64,
    /// Sub-carrier spacing, Hz.
    pub spacing: f64,
}

impl ToneGrid {
    pub fn new(
        num_subcarriers: usize,
        num_antennas: usize,
        base_frequency: f64,
        spacing: f64,
    ) -> Result<Self> {
        if num_subcarriers == 0 {
            return Err(invalid("num_subcarriers", "must be at least 1"));
        }
        if num_antennas == 0 {
            return Err(invalid("num_antennas", "must be at least 1"));
        }
        if !(base_frequency > 0.0 && base_frequency.is_finite()) {
            return Err(invalid("base_frequency", "must be positive and finite"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid("spacing", "must be positive and finite"));
        }
        Ok(Self {
            num_subcarriers,
            num_antennas,
            base_frequency,
            spacing,
        })
    }

    /// Envelope period `1 / delta_f`, seconds.
    pub fn period(&self) -> f64 {
        1.0 / self.spacing
    }

    /// RF frequency of sub-carrier `n`.
    pub fn frequency(&self, n: usize) -> f64 {
        self.base_frequency + n as f64 * self.spacing
    }
}

/// Uniform sampling of one envelope period with a precomputed twiddle table.
#[derive(Debug, Clone)]
pub struct TimeGrid<T> {
    twiddles: Vec<Complex<T>>,
}

impl<T: Scalar> TimeGrid<T> {
    /// Samples per period for a tone grid when none is configured.
    pub const DEFAULT_OVERSAMPLING: usize = 16;

    /// Grid with `num_samples` points and no relation to a particular tone count.
    pub fn with_samples(num_samples: usize) -> Result<Self> {
        if num_samples == 0 {
            return Err(invalid("num_samples", "must be at least 1"));
        }
        let k = T::from_usize_lossy(num_samples);
        let twiddles = (0..num_samples)
            .map(|j| Complex::from_polar(T::one(), T::TAU() * T::from_usize_lossy(j) / k))
            .collect();
        Ok(Self { twiddles })
    }

    /// Grid for `tones`, enforcing `K >= 4N` so fourth-order envelope moments
    /// are integrated exactly.
    pub fn for_tones(tones: &ToneGrid, num_samples: usize) -> Result<Self> {
        let required = 4 * tones.num_subcarriers;
        if num_samples < required {
            return Err(WptError::InsufficientSamples {
                samples: num_samples,
                required,
            });
        }
        Self::with_samples(num_samples)
    }

    /// `16 N` samples per period.
    pub fn default_for(tones: &ToneGrid) -> Self {
        Self::for_tones(tones, Self::DEFAULT_OVERSAMPLING * tones.num_subcarriers)
            .expect("default oversampling satisfies K >= 4N")
    }

    pub fn len(&self) -> usize {
        self.twiddles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.twiddles.is_empty()
    }

    /// `exp(i 2 pi n k / K)`.
    #[inline]
    pub fn twiddle(&self, n: usize, k: usize) -> Complex<T> {
        self.twiddles[(n * k) % self.twiddles.len()]
    }

    /// Sample instants in seconds for a given tone spacing.
    pub fn sample_times(&self, tones: &ToneGrid) -> Vec<f64> {
        let k = self.len() as f64;
        (0..self.len())
            .map(|j| j as f64 * tones.period() / k)
            .collect()
    }
}

/// Complex waveform weights, one per (sub-carrier, antenna), in volts.
///
/// Stored row-major by sub-carrier. The real-coordinate view used by the
/// solver interleaves `(re, im)` for each entry in the same order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix<T> {
    num_subcarriers: usize,
    num_antennas: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> WeightMatrix<T> {
    pub fn zeros(num_subcarriers: usize, num_antennas: usize) -> Self {
        Self {
            num_subcarriers,
            num_antennas,
            data: vec![Complex::new(T::zero(), T::zero()); num_subcarriers * num_antennas],
        }
    }

    pub fn from_vec(
        num_subcarriers: usize,
        num_antennas: usize,
        data: Vec<Complex<T>>,
    ) -> Result<Self> {
        if data.len() != num_subcarriers * num_antennas {
            return Err(WptError::ShapeMismatch {
                expected: format!("{num_subcarriers}x{num_antennas}"),
                actual: format!("{} entries", data.len()),
            });
        }
        if data.iter().any(|w| !(w.re.is_finite() && w.im.is_finite())) {
            return Err(invalid("weights", "entries must be finite"));
        }
        Ok(Self {
            num_subcarriers,
            num_antennas,
            data,
        })
    }

    pub fn from_fn(
        num_subcarriers: usize,
        num_antennas: usize,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Self {
        let mut data = Vec::with_capacity(num_subcarriers * num_antennas);
        for n in 0..num_subcarriers {
            for m in 0..num_antennas {
                data.push(f(n, m));
            }
        }
        Self {
            num_subcarriers,
            num_antennas,
            data,
        }
    }

    /// Single-antenna matrix from one column of tone weights.
    pub fn from_column(column: &[Complex<T>]) -> Self {
        Self {
            num_subcarriers: column.len(),
            num_antennas: 1,
            data: column.to_vec(),
        }
    }

    /// Rebuilds a matrix from interleaved `(re, im)` coordinates.
    pub fn from_real_coords(num_subcarriers: usize, num_antennas: usize, x: &[T]) -> Self {
        assert_eq!(x.len(), 2 * num_subcarriers * num_antennas);
        Self {
            num_subcarriers,
            num_antennas,
            data: x.chunks_exact(2).map(|c| Complex::new(c[0], c[1])).collect(),
        }
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.num_subcarriers, self.num_antennas)
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> Complex<T> {
        self.data[n * self.num_antennas + m]
    }

    #[inline]
    pub fn set(&mut self, n: usize, m: usize, value: Complex<T>) {
        self.data[n * self.num_antennas + m] = value;
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn column(&self, m: usize) -> Vec<Complex<T>> {
        (0..self.num_subcarriers).map(|n| self.get(n, m)).collect()
    }

    pub fn set_column(&mut self, m: usize, column: &[Complex<T>]) {
        assert_eq!(column.len(), self.num_subcarriers);
        for (n, &w) in column.iter().enumerate() {
            self.set(n, m, w);
        }
    }

    pub fn to_real_coords(&self) -> Vec<T> {
        self.data.iter().flat_map(|w| [w.re, w.im]).collect()
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            num_subcarriers: self.num_subcarriers,
            num_antennas: self.num_antennas,
            data: self.data.iter().map(|w| w * factor).collect(),
        }
    }

    /// Euclidean norm of the real-coordinate vector.
    pub fn norm(&self) -> T {
        self.data.iter().map(|w| w.norm_sqr()).sum::<T>().sqrt()
    }

    /// Euclidean distance between the real-coordinate vectors.
    pub fn distance(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|w| w.re.is_finite() && w.im.is_finite())
    }
}

/// Complex baseband envelope of one antenna's multisine on `grid`.
pub fn envelope_samples<T: Scalar>(column: &[Complex<T>], grid: &TimeGrid<T>) -> Vec<Complex<T>> {
    (0..grid.len())
        .map(|k| {
            column
                .iter()
                .enumerate()
                .fold(Complex::new(T::zero(), T::zero()), |acc, (n, &w)| {
                    acc + w * grid.twiddle(n, k)
                })
        })
        .collect()
}

/// `(1/2) sum |w|^2` under the 1-ohm convention, watts.
pub fn average_power<T: Scalar>(weights: &WeightMatrix<T>) -> T {
    T::lit(0.5) * weights.as_slice().iter().map(|w| w.norm_sqr()).sum::<T>()
}

/// Peak-to-average power ratio of one antenna's envelope, sampled on `grid`.
pub fn papr<T: Scalar>(column: &[Complex<T>], grid: &TimeGrid<T>) -> Result<T> {
    let env = envelope_samples(column, grid);
    let powers: Vec<T> = env.iter().map(|z| z.norm_sqr()).collect();
    let mean = powers.iter().copied().sum::<T>() / T::from_usize_lossy(powers.len());
    if mean <= T::zero() {
        return Err(WptError::ZeroWaveform);
    }
    let peak = powers.iter().copied().fold(T::zero(), T::max);
    Ok(peak / mean)
}

pub fn dbw_to_watts(dbw: f64) -> f64 {
    10f64.powf(dbw / 10.0)
}

pub fn dbv_to_volts(dbv: f64) -> f64 {
    10f64.powf(dbv / 20.0)
}

pub fn watts_to_dbw(watts: f64) -> f64 {
    10.0 * watts.log10()
}
