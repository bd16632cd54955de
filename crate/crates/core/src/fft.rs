//! Complex 3D FFT over the flat row-major layout of [`Grid3`](crate::Grid3).
//!
//! Lines along `z` are contiguous and transformed in place, `y` lines go
//! through a per-plane transpose and `x` lines through a full transpose.
//! Work is split across planes, so results do not depend on thread count.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

type Plan = Arc<dyn Fft<f64>>;

fn plan(n: usize, dir: Direction) -> Plan {
    static PLANS: OnceLock<Mutex<(FftPlanner<f64>, HashMap<(usize, Direction), Plan>)>> =
        OnceLock::new();
    let lock = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = lock.lock().expect("fft plan cache poisoned");
    let (planner, cache) = &mut *guard;
    cache
        .entry((n, dir))
        .or_insert_with(|| match dir {
            Direction::Forward => planner.plan_fft_forward(n),
            Direction::Inverse => planner.plan_fft_inverse(n),
        })
        .clone()
}

const BLOCK: usize = 8;

/// Planes per parallel task, about 2^16 points each.
fn min_planes(n: usize) -> usize {
    ((1 << 16) / (n * n)).max(1)
}

/// `dst[y][z][x] = src[x][y][z]`, so the old `x` axis becomes the contiguous one.
fn rotate_axes(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    let plane = n * n;
    if n <= 2 * BLOCK {
        dst.par_chunks_mut(plane).with_min_len(min_planes(n)).enumerate().for_each(|(y, out)| {
            for x in 0..n {
                let row = &src[x * plane + y * n..x * plane + y * n + n];
                for (z, v) in row.iter().enumerate() {
                    out[z * n + x] = *v;
                }
            }
        });
        return;
    }
    dst.par_chunks_mut(plane).with_min_len(min_planes(n)).enumerate().for_each(|(y, out)| {
        for x0 in (0..n).step_by(BLOCK) {
            for z0 in (0..n).step_by(BLOCK) {
                for x in x0..(x0 + BLOCK).min(n) {
                    let row = &src[x * plane + y * n..x * plane + y * n + n];
                    for z in z0..(z0 + BLOCK).min(n) {
                        out[z * n + x] = row[z];
                    }
                }
            }
        }
    });
}

/// Unnormalized in-place 3D transform of an `n^3` array.
///
/// Each of the three passes transforms the contiguous axis and then rotates
/// the axes, so after three passes the layout is the original one.
pub(crate) fn fft3(data: &mut [Complex64], n: usize, dir: Direction) {
    assert_eq!(data.len(), n * n * n, "fft3 buffer size mismatch");
    let fft = plan(n, dir);
    let plane = n * n;
    let scratch_len = fft.get_inplace_scratch_len();
    let zero = Complex64::new(0.0, 0.0);
    let lines = |buf: &mut [Complex64]| {
        buf.par_chunks_mut(plane).with_min_len(min_planes(n)).for_each_init(
            || vec![zero; scratch_len],
            |scratch, chunk| fft.process_with_scratch(chunk, scratch),
        )
    };
    let mut tmp = vec![zero; data.len()];
    lines(data);
    rotate_axes(data, &mut tmp, n);
    lines(&mut tmp);
    rotate_axes(&tmp, data, n);
    lines(data);
    rotate_axes(data, &mut tmp, n);
    data.copy_from_slice(&tmp);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(data: &[Complex64], n: usize, sign: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
        let w = |a: usize, b: usize| {
            let ang = sign * 2.0 * std::f64::consts::PI * (a * b % n) as f64 / n as f64;
            Complex64::new(ang.cos(), ang.sin())
        };
        for kx in 0..n {
            for ky in 0..n {
                for kz in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for x in 0..n {
                        for y in 0..n {
                            for z in 0..n {
                                acc += data[(x * n + y) * n + z] * w(kx, x) * w(ky, y) * w(kz, z);
                            }
                        }
                    }
                    out[(kx * n + ky) * n + kz] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let n = 4;
        let data: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        for (dir, sign) in [(Direction::Forward, -1.0), (Direction::Inverse, 1.0)] {
            let mut fast = data.clone();
            fft3(&mut fast, n, dir);
            let slow = naive_dft(&data, n, sign);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
