//! Rate-tagged sample containers.
//!
//! Sample `k` of a [`SampledSignal`] sits at time index `origin + k` on a grid
//! of `rate_hz` samples per second. Operations that delay a signal by a
//! declared amount move `origin` back by that amount, so signals that went
//! through pipelines of different latency can still be compared sample by
//! sample at equal time indices.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{invalid, Error, Result};

/// Scalar sample flavor: `f64` or `Complex64`.
pub trait Sample:
    Copy
    + Debug
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + AddAssign
    + Mul<f64, Output = Self>
    + Send
    + Sync
    + 'static
{
    fn one() -> Self;
    fn norm_sqr(&self) -> f64;
    fn is_finite(&self) -> bool;
}

impl Sample for f64 {
    fn one() -> Self {
        1.0
    }
    fn norm_sqr(&self) -> f64 {
        self * self
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl Sample for Complex64 {
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn norm_sqr(&self) -> f64 {
        Complex64::norm_sqr(self)
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal<T> {
    samples: Vec<T>,
    rate_hz: f64,
    origin: i64,
}

impl<T: Sample> SampledSignal<T> {
    pub fn new(samples: Vec<T>, rate_hz: f64) -> Result<Self> {
        Self::with_origin(samples, rate_hz, 0)
    }

    pub fn with_origin(samples: Vec<T>, rate_hz: f64, origin: i64) -> Result<Self> {
        if !(rate_hz > 0.0 && rate_hz.is_finite()) {
            return Err(invalid("rate_hz", format!("must be positive, got {rate_hz}")));
        }
        Ok(Self {
            samples,
            rate_hz,
            origin,
        })
    }

    pub fn zeros(len: usize, rate_hz: f64) -> Result<Self> {
        Self::new(vec![T::zero(); len], rate_hz)
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [T] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// One past the last occupied time index.
    pub fn end(&self) -> i64 {
        self.origin + self.samples.len() as i64
    }

    /// Sample at absolute time index `t`, zero outside the support.
    pub fn at(&self, t: i64) -> T {
        let k = t - self.origin;
        if k < 0 || k >= self.samples.len() as i64 {
            T::zero()
        } else {
            self.samples[k as usize]
        }
    }

    pub fn with_new_origin(mut self, origin: i64) -> Self {
        self.origin = origin;
        self
    }

    pub fn shifted(mut self, by: i64) -> Self {
        self.origin += by;
        self
    }

    /// Samples over `[start, start + len)` in absolute time, zero-filled.
    pub fn window(&self, start: i64, len: usize) -> Self {
        let samples = (0..len as i64).map(|k| self.at(start + k)).collect();
        Self {
            samples,
            rate_hz: self.rate_hz,
            origin: start,
        }
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(Sample::norm_sqr).sum()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    pub fn scale(mut self, k: f64) -> Self {
        for s in &mut self.samples {
            *s = *s * k;
        }
        self
    }

    pub fn map<U: Sample>(&self, mut f: impl FnMut(T) -> U) -> SampledSignal<U> {
        SampledSignal {
            samples: self.samples.iter().map(|&s| f(s)).collect(),
            rate_hz: self.rate_hz,
            origin: self.origin,
        }
    }

    pub(crate) fn check_rate(&self, other_rate: f64) -> Result<()> {
        if (self.rate_hz - other_rate).abs() > 1e-9 * self.rate_hz {
            Err(Error::RateMismatch(self.rate_hz, other_rate))
        } else {
            Ok(())
        }
    }

    /// Sum over the union of both supports.
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_rate(other.rate_hz)?;
        if self.is_empty() {
            return Ok(other.clone());
        }
        if other.is_empty() {
            return Ok(self.clone());
        }
        let start = self.origin.min(other.origin);
        let end = self.end().max(other.end());
        let samples = (start..end).map(|t| self.at(t) + other.at(t)).collect();
        Ok(Self {
            samples,
            rate_hz: self.rate_hz,
            origin: start,
        })
    }

    /// `self - other` over the support of `self`.
    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_rate(other.rate_hz)?;
        let samples = (self.origin..self.end())
            .map(|t| self.at(t) - other.at(t))
            .collect();
        Ok(Self {
            samples,
            rate_hz: self.rate_hz,
            origin: self.origin,
        })
    }
}

impl SampledSignal<Complex64> {
    pub fn re(&self) -> SampledSignal<f64> {
        self.map(|z| z.re)
    }

    pub fn im(&self) -> SampledSignal<f64> {
        self.map(|z| z.im)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn from_parts(re: &SampledSignal<f64>, im: &SampledSignal<f64>) -> Result<Self> {
        re.check_rate(im.rate_hz)?;
        if re.origin != im.origin || re.len() != im.len() {
            return Err(Error::Misaligned(format!(
                "I spans [{}, {}), Q spans [{}, {})",
                re.origin,
                re.end(),
                im.origin,
                im.end()
            )));
        }
        SampledSignal::with_origin(
            re.samples
                .iter()
                .zip(&im.samples)
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect(),
            re.rate_hz,
            re.origin,
        )
    }
}

impl From<SampledSignal<f64>> for SampledSignal<Complex64> {
    fn from(s: SampledSignal<f64>) -> Self {
        SampledSignal {
            samples: s.samples.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
            rate_hz: s.rate_hz,
            origin: s.origin,
        }
    }
}

/// A bundle of equally long, time-aligned real streams sharing one rate.
///
/// The impairment equalizer and the equivalent channel both act on four of
/// these: `[Re band1, Im band1, Re band2, Im band2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStream {
    streams: Vec<Vec<f64>>,
    rate_hz: f64,
    origin: i64,
}

impl MultiStream {
    pub fn new(streams: Vec<Vec<f64>>, rate_hz: f64, origin: i64) -> Result<Self> {
        if streams.is_empty() {
            return Err(Error::EmptyInput("stream bundle"));
        }
        if !(rate_hz > 0.0) {
            return Err(invalid("rate_hz", format!("must be positive, got {rate_hz}")));
        }
        let len = streams[0].len();
        if let Some(bad) = streams.iter().find(|s| s.len() != len) {
            return Err(Error::Misaligned(format!(
                "stream lengths differ: {} vs {}",
                len,
                bad.len()
            )));
        }
        Ok(Self {
            streams,
            rate_hz,
            origin,
        })
    }

    pub fn zeros(n_streams: usize, len: usize, rate_hz: f64) -> Result<Self> {
        Self::new(vec![vec![0.0; len]; n_streams], rate_hz, 0)
    }

    pub fn from_signals(signals: &[SampledSignal<f64>]) -> Result<Self> {
        let first = signals.first().ok_or(Error::EmptyInput("stream bundle"))?;
        for s in signals {
            first.check_rate(s.rate_hz())?;
            if s.origin() != first.origin() || s.len() != first.len() {
                return Err(Error::Misaligned("streams do not share a time span".into()));
            }
        }
        Self::new(
            signals.iter().map(|s| s.samples().to_vec()).collect(),
            first.rate_hz(),
            first.origin(),
        )
    }

    /// Splits two complex band signals into `[Re 1, Im 1, Re 2, Im 2]`.
    pub fn from_bands(band1: &SampledSignal<Complex64>, band2: &SampledSignal<Complex64>) -> Result<Self> {
        Self::from_signals(&[band1.re(), band1.im(), band2.re(), band2.im()])
    }

    /// Inverse of [`MultiStream::from_bands`] for four-stream bundles.
    pub fn to_bands(&self) -> Result<(SampledSignal<Complex64>, SampledSignal<Complex64>)> {
        if self.n_streams() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                got: self.n_streams(),
            });
        }
        let b1 = SampledSignal::from_parts(&self.signal(0), &self.signal(1))?;
        let b2 = SampledSignal::from_parts(&self.signal(2), &self.signal(3))?;
        Ok((b1, b2))
    }

    pub fn n_streams(&self) -> usize {
        self.streams.len()
    }

    pub fn len(&self) -> usize {
        self.streams[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn end(&self) -> i64 {
        self.origin + self.len() as i64
    }

    pub fn stream(&self, i: usize) -> &[f64] {
        &self.streams[i]
    }

    pub fn streams(&self) -> &[Vec<f64>] {
        &self.streams
    }

    pub fn stream_mut(&mut self, i: usize) -> &mut Vec<f64> {
        &mut self.streams[i]
    }

    pub fn signal(&self, i: usize) -> SampledSignal<f64> {
        SampledSignal {
            samples: self.streams[i].clone(),
            rate_hz: self.rate_hz,
            origin: self.origin,
        }
    }

    pub fn at(&self, i: usize, t: i64) -> f64 {
        let k = t - self.origin;
        if k < 0 || k >= self.len() as i64 {
            0.0
        } else {
            self.streams[i][k as usize]
        }
    }

    pub fn window(&self, start: i64, len: usize) -> Self {
        let streams = (0..self.n_streams())
            .map(|i| (0..len as i64).map(|k| self.at(i, start + k)).collect())
            .collect();
        Self {
            streams,
            rate_hz: self.rate_hz,
            origin: start,
        }
    }

    pub fn energy(&self) -> f64 {
        self.streams.iter().flatten().map(|x| x * x).sum()
    }
}

/// Normalized mean squared error `10 log10(|test - reference|^2 / |reference|^2)`.
pub fn nmse_db<T: Sample>(reference: &[T], test: &[T]) -> f64 {
    let mut err = 0.0;
    let mut norm = 0.0;
    for (r, t) in reference.iter().zip(test) {
        err += (*t - *r).norm_sqr();
        norm += r.norm_sqr();
    }
    10.0 * (err / norm).log10()
}

/// [`nmse_db`] evaluated over the support of `reference` in absolute time.
pub fn aligned_nmse_db<T: Sample>(reference: &SampledSignal<T>, test: &SampledSignal<T>) -> f64 {
    let t: Vec<T> = (reference.origin()..reference.end()).map(|i| test.at(i)).collect();
    nmse_db(reference.samples(), &t)
}

pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_rate() {
        assert!(SampledSignal::<f64>::new(vec![1.0], 0.0).is_err());
        assert!(SampledSignal::<f64>::new(vec![1.0], -3.0).is_err());
    }

    #[test]
    fn arithmetic_requires_equal_rates() {
        let a = SampledSignal::new(vec![1.0, 2.0], 10.0).unwrap();
        let b = SampledSignal::new(vec![1.0, 2.0], 20.0).unwrap();
        assert!(matches!(a.checked_add(&b), Err(Error::RateMismatch(..))));
    }

    #[test]
    fn add_aligns_by_origin() {
        let a = SampledSignal::with_origin(vec![1.0, 1.0], 1.0, 0).unwrap();
        let b = SampledSignal::with_origin(vec![2.0, 2.0], 1.0, 1).unwrap();
        let c = a.checked_add(&b).unwrap();
        assert_eq!(c.origin(), 0);
        assert_eq!(c.samples(), &[1.0, 3.0, 2.0]);
    }

    #[test]
    fn promotion_keeps_alignment() {
        let a = SampledSignal::with_origin(vec![1.0, -1.0], 4.0, -3).unwrap();
        let z: SampledSignal<Complex64> = a.into();
        assert_eq!(z.origin(), -3);
        assert_eq!(z.samples()[1], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn band_bundle_roundtrip() {
        let b1 = SampledSignal::new(vec![Complex64::new(1.0, 2.0)], 1.0).unwrap();
        let b2 = SampledSignal::new(vec![Complex64::new(3.0, 4.0)], 1.0).unwrap();
        let m = MultiStream::from_bands(&b1, &b2).unwrap();
        assert_eq!(m.stream(3), &[4.0]);
        let (c1, c2) = m.to_bands().unwrap();
        assert_eq!(c1, b1);
        assert_eq!(c2, b2);
    }
}
