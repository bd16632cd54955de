use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{EmhdError, Result};

/// Uniform periodic discretization of the box `[0, box_length)^3`.
///
/// Storage order is row-major with `x` slowest: flat index
/// `(ix * n + iy) * n + iz`. Along each axis index `i` carries the lattice
/// wavenumber `i` for `i <= n/2` and `i - n` otherwise; physical wavenumbers
/// are the lattice ones times `2π / box_length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    n: usize,
    box_length: f64,
    dealias_cutoff: f64,
}

impl Grid3 {
    /// `n`-point grid on the `2π` box with the 2/3-rule cutoff `n/3`.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_box_length(n, 2.0 * PI)
    }

    pub fn with_box_length(n: usize, box_length: f64) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(EmhdError::InvalidGrid(format!(
                "n_per_axis must be a positive even integer, got {n}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(EmhdError::InvalidGrid(format!(
                "box_length must be positive, got {box_length}"
            )));
        }
        Ok(Self {
            n,
            box_length,
            dealias_cutoff: n as f64 / 3.0,
        })
    }

    pub fn with_dealias_cutoff(mut self, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0 && cutoff <= self.n as f64 / 2.0) {
            return Err(EmhdError::InvalidGrid(format!(
                "dealias_cutoff must lie in (0, {}], got {cutoff}",
                self.n / 2
            )));
        }
        self.dealias_cutoff = cutoff;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Maximum retained lattice wavenumber per axis.
    pub fn dealias_cutoff(&self) -> f64 {
        self.dealias_cutoff
    }

    /// Number of grid points (and Fourier modes) per component.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical wavenumber of one lattice step, `2π / box_length`.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    #[inline]
    pub fn flat(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    #[inline]
    pub fn unflatten(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    #[inline]
    pub fn index_wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn wavenumber_index(&self, m: i64) -> usize {
        m.rem_euclid(self.n as i64) as usize
    }

    #[inline]
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Integer lattice vector of a flat index.
    #[inline]
    pub fn lattice(&self, idx: usize) -> [i64; 3] {
        let [ix, iy, iz] = self.unflatten(idx);
        [
            self.index_wavenumber(ix),
            self.index_wavenumber(iy),
            self.index_wavenumber(iz),
        ]
    }

    /// Flat index of the lattice vector `m` (taken modulo `n`).
    #[inline]
    pub fn index_of(&self, m: [i64; 3]) -> usize {
        self.flat(
            self.wavenumber_index(m[0]),
            self.wavenumber_index(m[1]),
            self.wavenumber_index(m[2]),
        )
    }

    #[inline]
    pub fn lattice_norm_sq(&self, idx: usize) -> usize {
        let m = self.lattice(idx);
        (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as usize
    }

    /// Largest `|m|^2` on the lattice, reached at the Nyquist corner.
    pub fn max_lattice_norm_sq(&self) -> usize {
        3 * (self.n / 2) * (self.n / 2)
    }

    /// Physical wavevector of a flat index.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let m = self.lattice(idx);
        let k0 = self.k0();
        [m[0] as f64 * k0, m[1] as f64 * k0, m[2] as f64 * k0]
    }

    /// Wavevector used by odd-order derivatives. Nyquist components are
    /// zeroed so that derivatives of real fields stay real.
    #[inline]
    pub fn derivative_wavevector(&self, idx: usize) -> [f64; 3] {
        let [ix, iy, iz] = self.unflatten(idx);
        let k0 = self.k0();
        let axis = |i: usize| {
            if self.is_nyquist(i) {
                0.0
            } else {
                self.index_wavenumber(i) as f64 * k0
            }
        };
        [axis(ix), axis(iy), axis(iz)]
    }

    #[inline]
    pub fn wavenumber_magnitude(&self, idx: usize) -> f64 {
        self.k0() * (self.lattice_norm_sq(idx) as f64).sqrt()
    }

    /// Calls `f(idx, [ix, iy, iz])` for every flat index in storage order.
    #[inline]
    pub fn for_each_index(&self, mut f: impl FnMut(usize, [usize; 3])) {
        let n = self.n;
        let mut idx = 0;
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    f(idx, [ix, iy, iz]);
                    idx += 1;
                }
            }
        }
    }

    /// Per-axis values of [`Grid3::derivative_wavevector`].
    pub fn derivative_axis(&self) -> Vec<f64> {
        let k0 = self.k0();
        (0..self.n)
            .map(|i| if self.is_nyquist(i) { 0.0 } else { self.index_wavenumber(i) as f64 * k0 })
            .collect()
    }

    /// Per-axis dealiasing mask.
    pub fn retained_axis(&self) -> Vec<bool> {
        (0..self.n)
            .map(|i| (self.index_wavenumber(i).abs() as f64) <= self.dealias_cutoff)
            .collect()
    }

    /// Flat index of `-k`.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.n;
        let [ix, iy, iz] = self.unflatten(idx);
        self.flat((n - ix) % n, (n - iy) % n, (n - iz) % n)
    }

    /// True if every lattice component satisfies `|m_i| <= dealias_cutoff`.
    #[inline]
    pub fn is_retained(&self, idx: usize) -> bool {
        let m = self.lattice(idx);
        m.iter().all(|&c| (c.abs() as f64) <= self.dealias_cutoff)
    }

    /// Smallest nonzero physical wavenumber magnitude.
    pub fn min_wavenumber(&self) -> f64 {
        self.k0()
    }

    /// Largest physical wavenumber magnitude on the full lattice.
    pub fn max_wavenumber(&self) -> f64 {
        self.k0() * (self.max_lattice_norm_sq() as f64).sqrt()
    }

    /// Largest physical wavenumber magnitude that survives dealiasing.
    pub fn max_retained_wavenumber(&self) -> f64 {
        let c = self.dealias_cutoff.floor();
        self.k0() * (3.0 * c * c).sqrt()
    }

    /// Tabulates a radial function of `|k|` over every lattice value of `|m|^2`.
    pub fn radial_table(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let k0 = self.k0();
        (0..=self.max_lattice_norm_sq())
            .map(|m2| f(k0 * (m2 as f64).sqrt()))
            .collect()
    }

    /// `|m|^2` for every flat index, in storage order.
    pub fn lattice_norm_sq_map(&self) -> Vec<usize> {
        let n = self.n;
        let sq: Vec<usize> = (0..n)
            .map(|i| {
                let m = self.index_wavenumber(i);
                (m * m) as usize
            })
            .collect();
        let mut out = Vec::with_capacity(self.len());
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    out.push(sq[ix] + sq[iy] + sq[iz]);
                }
            }
        }
        out
    }

    /// Physical coordinate of grid index `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }
}
