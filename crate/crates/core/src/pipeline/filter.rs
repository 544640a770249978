//! Zero-phase Butterworth band-pass filtering with second-order sections.
//!
//! The band-pass is a 4th-order high-pass at `lo` cascaded with a 4th-order
//! low-pass at `hi`, both designed by the bilinear transform with frequency
//! pre-warping. [`sosfiltfilt`] runs the cascade forward and backward with
//! odd extension at the edges and steady-state initial conditions.

use std::f64::consts::PI;

use super::EpochDataset;
use crate::error::{Error, Result};

const ORDER: usize = 4;

/// A normalized biquad, `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn lowpass(k: f64, q: f64) -> Self {
        let norm = 1.0 / (1.0 + k / q + k * k);
        let b0 = k * k * norm;
        Self {
            b0,
            b1: 2.0 * b0,
            b2: b0,
            a1: 2.0 * (k * k - 1.0) * norm,
            a2: (1.0 - k / q + k * k) * norm,
        }
    }

    fn highpass(k: f64, q: f64) -> Self {
        let norm = 1.0 / (1.0 + k / q + k * k);
        Self {
            b0: norm,
            b1: -2.0 * norm,
            b2: norm,
            a1: 2.0 * (k * k - 1.0) * norm,
            a2: (1.0 - k / q + k * k) * norm,
        }
    }

    /// Gain at z = 1.
    pub fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Transposed direct-form II state reached after a unit step has settled.
    fn step_state(&self) -> [f64; 2] {
        let h = self.dc_gain();
        let z2 = self.b2 - self.a2 * h;
        let z1 = self.b1 - self.a1 * h + z2;
        [z1, z2]
    }
}

/// Quality factors of the conjugate pole pairs of an even-order Butterworth prototype.
fn pole_pair_qs(order: usize) -> Vec<f64> {
    (0..order / 2)
        .map(|k| 1.0 / (2.0 * (PI * (2 * k + 1) as f64 / (2 * order) as f64).cos()))
        .collect()
}

/// Second-order sections of the order-4 band-pass for the band [lo, hi] Hz.
pub fn butterworth_bandpass_sos(lo: f64, hi: f64, fs: f64) -> Result<Vec<Biquad>> {
    if !(lo > 0.0 && lo < hi && hi < fs / 2.0) {
        return Err(Error::InvalidBand { lo, hi, fs });
    }
    let k_lo = (PI * lo / fs).tan();
    let k_hi = (PI * hi / fs).tan();
    let qs = pole_pair_qs(ORDER);
    let mut sos: Vec<Biquad> = qs.iter().map(|&q| Biquad::highpass(k_lo, q)).collect();
    sos.extend(qs.iter().map(|&q| Biquad::lowpass(k_hi, q)));
    Ok(sos)
}

fn sosfilt_in_place(sos: &[Biquad], x: &mut [f64], x0: f64) {
    let mut gain = 1.0;
    for sec in sos {
        let [mut z1, mut z2] = sec.step_state();
        z1 *= gain * x0;
        z2 *= gain * x0;
        for v in x.iter_mut() {
            let input = *v;
            let y = sec.b0 * input + z1;
            z1 = sec.b1 * input - sec.a1 * y + z2;
            z2 = sec.b2 * input - sec.a2 * y;
            *v = y;
        }
        gain *= sec.dc_gain();
    }
}

/// Forward-backward filtering through `sos`.
pub fn sosfiltfilt(sos: &[Biquad], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let pad = (3 * (2 * sos.len() + 1)).min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let first = ext[0];
    sosfilt_in_place(sos, &mut ext, first);
    ext.reverse();
    let first = ext[0];
    sosfilt_in_place(sos, &mut ext, first);
    ext.reverse();
    ext[pad..pad + n].to_vec()
}

/// Zero-phase band-pass of every channel of every trial.
pub fn bandpass(ds: &EpochDataset, lo: f64, hi: f64) -> Result<EpochDataset> {
    let sos = butterworth_bandpass_sos(lo, hi, ds.fs())?;
    let (_, _, samples) = ds.shape();
    ds.map_signals(samples, ds.fs(), |x| sosfiltfilt(&sos, x))
}
