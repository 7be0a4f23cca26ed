use crate::error::{invalid, Result};
use crate::signal::SampledSignal;

/// Mid-rise uniform quantizer with saturation at `±full_scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformQuantizer {
    bits: u32,
    full_scale: f64,
    step: f64,
}

impl UniformQuantizer {
    pub fn new(bits: u32, full_scale: f64) -> Result<Self> {
        if bits == 0 || bits > 52 {
            return Err(invalid("bits", format!("must lie in 1..=52, got {bits}")));
        }
        if !(full_scale > 0.0 && full_scale.is_finite()) {
            return Err(invalid("full_scale", format!("must be positive, got {full_scale}")));
        }
        Ok(Self {
            bits,
            full_scale,
            step: 2.0 * full_scale / (1u64 << bits) as f64,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn full_scale(&self) -> f64 {
        self.full_scale
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Quantized value and whether the input saturated.
    #[inline]
    pub fn quantize(&self, x: f64) -> (f64, bool) {
        let top = self.full_scale - self.step / 2.0;
        let q = self.step * ((x / self.step).floor() + 0.5);
        if q > top {
            (top, true)
        } else if q < -top {
            (-top, true)
        } else {
            (q, false)
        }
    }
}

/// A quantized signal together with the number of saturated samples.
#[derive(Debug, Clone)]
pub struct Quantized {
    pub signal: SampledSignal<f64>,
    pub saturated: usize,
}

pub fn quantize_uniform(x: &SampledSignal<f64>, bits: u32, full_scale: f64) -> Result<Quantized> {
    let q = UniformQuantizer::new(bits, full_scale)?;
    let mut saturated = 0;
    let signal = x.map(|v| {
        let (y, sat) = q.quantize(v);
        saturated += usize::from(sat);
        y
    });
    Ok(Quantized { signal, saturated })
}
