//! Spectral primitives on periodic grids.
//!
//! All transforms are plain complex DFTs from `rustfft` applied axis by
//! axis.  Plans are cached per transform length.  The spectral derivative
//! multiplies mode `t` by `i * 2 pi k(t)` with `k(t) = t` for `t <= n/2`
//! and `t - n` otherwise; the unpaired Nyquist mode (`t = n/2` for even
//! `n`) gets multiplier zero so real fields stay real and the derivative
//! operator remains exactly skew-adjoint on the grid.  Band-limited inputs
//! with `n > 2h` never populate that mode.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone)]
pub struct FftPair {
    pub forward: Arc<dyn Fft<f64>>,
    pub inverse: Arc<dyn Fft<f64>>,
}

fn plan_cache() -> &'static Mutex<HashMap<usize, FftPair>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, FftPair>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub fn plans(n: usize) -> FftPair {
    let mut cache = plan_cache().lock().unwrap();
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            FftPair {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            }
        })
        .clone()
}

/// Integer wavenumber of DFT mode `t` on an `n`-point axis.
#[inline]
pub fn mode_wavenumber(t: usize, n: usize) -> i64 {
    if t <= n / 2 {
        t as i64
    } else {
        t as i64 - n as i64
    }
}

/// Angular derivative multipliers `2 pi k(t)` with the Nyquist entry zeroed.
pub fn deriv_multipliers(n: usize) -> Vec<f64> {
    (0..n)
        .map(|t| {
            if n % 2 == 0 && t == n / 2 {
                0.0
            } else {
                TAU * mode_wavenumber(t, n) as f64
            }
        })
        .collect()
}

/// Squared angular wavenumber `|2 pi k|^2` of a flat spectral index, using
/// the same Nyquist-zeroed convention as the derivative.
pub fn kappa_sq(flat: usize, n: usize, m: usize, mult: &[f64]) -> f64 {
    let mut idx = flat;
    let mut acc = 0.0;
    for _ in 0..m {
        let t = idx % n;
        idx /= n;
        acc += mult[t] * mult[t];
    }
    acc
}

/// Apply the length-`n` FFT along `axis` of an `n^m` complex buffer laid
/// out with axis 0 contiguous.  Inverse transforms are normalized by 1/n.
///
/// Lanes are gathered a block at a time into a lane-major buffer so rustfft
/// transforms every lane of the block in a single batched call; per-call
/// overhead on short lanes would otherwise dominate.
pub fn fft_axis(buf: &mut [Complex64], n: usize, axis: usize, forward: bool) {
    let pair = plans(n);
    let fft = if forward { &pair.forward } else { &pair.inverse };
    let stride = n.pow(axis as u32);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    if stride == 1 {
        // Lanes are already contiguous; rustfft chunks the whole buffer.
        fft.process_with_scratch(buf, &mut scratch);
    } else {
        let total = buf.len();
        let block = stride * n;
        let mut gathered = vec![Complex64::default(); block];
        for base in (0..total).step_by(block) {
            for t in 0..n {
                let src = base + t * stride;
                for inner in 0..stride {
                    gathered[inner * n + t] = buf[src + inner];
                }
            }
            fft.process_with_scratch(&mut gathered, &mut scratch);
            for t in 0..n {
                let dst = base + t * stride;
                for inner in 0..stride {
                    buf[dst + inner] = gathered[inner * n + t];
                }
            }
        }
    }
    if !forward {
        let scale = 1.0 / n as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }
}

/// Full m-dimensional forward transform of a real field.
pub fn fft_full(values: &[f64], n: usize, m: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for axis in 0..m {
        fft_axis(&mut buf, n, axis, true);
    }
    buf
}

/// Full m-dimensional inverse transform, returning the real part.
pub fn ifft_full(mut coef: Vec<Complex64>, n: usize, m: usize) -> Vec<f64> {
    for axis in 0..m {
        fft_axis(&mut coef, n, axis, false);
    }
    coef.into_iter().map(|z| z.re).collect()
}

/// Spectral derivative of a real field along one axis: gather a block of
/// lanes, batched forward FFT, multiply by `i * 2 pi k / n`, batched inverse
/// FFT, scatter the real part.
pub fn deriv_axis(values: &[f64], n: usize, m: usize, axis: usize) -> Vec<f64> {
    debug_assert_eq!(values.len(), n.pow(m as u32));
    let pair = plans(n);
    let mult = deriv_multipliers(n);
    let inv_n = 1.0 / n as f64;
    let stride = n.pow(axis as u32);
    let total = values.len();
    // Contiguous lanes batch over the entire buffer in one rustfft call.
    let block = if stride == 1 { total } else { stride * n };
    let mut out = vec![0.0f64; total];
    let mut gathered = vec![Complex64::default(); block];
    let mut scratch = vec![
        Complex64::default();
        pair.forward
            .get_inplace_scratch_len()
            .max(pair.inverse.get_inplace_scratch_len())
    ];
    for base in (0..total).step_by(block) {
        if stride == 1 {
            for (g, &v) in gathered.iter_mut().zip(&values[base..base + block]) {
                *g = Complex64::new(v, 0.0);
            }
        } else {
            for t in 0..n {
                let src = base + t * stride;
                for inner in 0..stride {
                    gathered[inner * n + t] = Complex64::new(values[src + inner], 0.0);
                }
            }
        }
        pair.forward.process_with_scratch(&mut gathered, &mut scratch);
        for lane in gathered.chunks_exact_mut(n) {
            for (z, &k0) in lane.iter_mut().zip(&mult) {
                // i * kappa * (1/n), folding the inverse normalization.
                let k = k0 * inv_n;
                *z = Complex64::new(-z.im * k, z.re * k);
            }
        }
        pair.inverse.process_with_scratch(&mut gathered, &mut scratch);
        if stride == 1 {
            for (o, z) in out[base..base + block].iter_mut().zip(&gathered) {
                *o = z.re;
            }
        } else {
            for t in 0..n {
                let dst = base + t * stride;
                for inner in 0..stride {
                    out[dst + inner] = gathered[inner * n + t].re;
                }
            }
        }
    }
    out
}
