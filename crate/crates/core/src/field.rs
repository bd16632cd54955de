use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{EmhdError, Result};
use crate::grid::Grid3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Shared behaviour of scalar and vector Fourier coefficient arrays.
///
/// Every radial Fourier multiplier (fractional Laplacian, Littlewood-Paley
/// blocks, Gevrey weights, heat semigroup) is implemented once on top of this.
pub trait SpectralField: Clone + Send + Sync {
    fn grid(&self) -> &Grid3;
    fn components(&self) -> &[Vec<Complex64>];
    fn components_mut(&mut self) -> &mut [Vec<Complex64>];
    fn is_real(&self) -> bool;

    /// Multiplies every mode by `table[|m|^2]`, see [`Grid3::radial_table`].
    fn apply_radial_table(&mut self, table: &[f64]) {
        let m2 = self.grid().lattice_norm_sq_map();
        for comp in self.components_mut() {
            for (c, &q) in comp.iter_mut().zip(&m2) {
                *c *= table[q];
            }
        }
    }

    /// Returns a copy multiplied by the radial symbol `f(|k|)`.
    fn map_radial(&self, f: impl Fn(f64) -> f64) -> Self {
        let table = self.grid().radial_table(f);
        let mut out = self.clone();
        out.apply_radial_table(&table);
        out
    }

    /// `(Σ_k |F(k)|^2)^{1/2}`, equal to the root-mean-square of the physical field.
    fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    fn l2_norm_sq(&self) -> f64 {
        self.components()
            .iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Real part of `Σ_k conj(F(k)) · G(k)`.
    fn inner(&self, other: &Self) -> f64 {
        self.components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum::<f64>())
            .sum()
    }

    fn max_abs(&self) -> f64 {
        self.components()
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, z| m.max(z.norm_sqr()))
            .sqrt()
    }

    /// Magnitude of the `k = 0` coefficient (vector norm over components).
    fn mean_magnitude(&self) -> f64 {
        self.components()
            .iter()
            .map(|c| c[0].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn is_finite(&self) -> bool {
        self.components()
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    /// Zeroes every mode outside the dealiasing box.
    fn dealiased(&self) -> Self {
        let grid = *self.grid();
        let keep = grid.retained_axis();
        let mut out = self.clone();
        for comp in out.components_mut() {
            grid.for_each_index(|idx, [ix, iy, iz]| {
                if !(keep[ix] && keep[iy] && keep[iz]) {
                    comp[idx] = ZERO;
                }
            });
        }
        out
    }

    /// Largest `|F(-k) - conj F(k)|` over the lattice.
    fn hermitian_deviation(&self) -> f64 {
        let grid = *self.grid();
        let n = grid.n();
        let neg: Vec<usize> = (0..n).map(|i| (n - i) % n).collect();
        let mut dev = 0.0_f64;
        for comp in self.components() {
            grid.for_each_index(|idx, [ix, iy, iz]| {
                let j = (neg[ix] * n + neg[iy]) * n + neg[iz];
                dev = dev.max((comp[j] - comp[idx].conj()).norm_sqr());
            });
        }
        dev.sqrt()
    }

    /// Errors with [`EmhdError::MeanMode`] unless the mean is zero relative
    /// to the field's size.
    fn require_mean_free(&self) -> Result<()> {
        let mean = self.mean_magnitude();
        if mean > MEAN_TOLERANCE * self.l2_norm().max(f64::MIN_POSITIVE) {
            return Err(EmhdError::MeanMode { magnitude: mean });
        }
        Ok(())
    }
}

/// Relative size of the mean mode below which a field counts as mean-free.
pub const MEAN_TOLERANCE: f64 = 1e-12;

fn check_same_grid(a: &Grid3, b: &Grid3) -> Result<()> {
    if a != b {
        return Err(EmhdError::Shape(format!(
            "grids differ (n = {} vs {})",
            a.n(),
            b.n()
        )));
    }
    Ok(())
}

/// Fourier coefficients of a 3-component vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVectorField {
    grid: Grid3,
    coeffs: [Vec<Complex64>; 3],
    real: bool,
}

impl SpectralVectorField {
    pub fn zeros(grid: Grid3) -> Self {
        let len = grid.len();
        Self {
            grid,
            coeffs: [vec![ZERO; len], vec![ZERO; len], vec![ZERO; len]],
            real: true,
        }
    }

    pub fn from_components(grid: Grid3, coeffs: [Vec<Complex64>; 3], real: bool) -> Result<Self> {
        if coeffs.iter().any(|c| c.len() != grid.len()) {
            return Err(EmhdError::Shape(format!(
                "expected {} coefficients per component",
                grid.len()
            )));
        }
        Ok(Self { grid, coeffs, real })
    }

    pub fn coeffs(&self) -> &[Vec<Complex64>; 3] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Vec<Complex64>; 3] {
        &mut self.coeffs
    }

    pub fn into_components(self) -> [Vec<Complex64>; 3] {
        self.coeffs
    }

    pub fn set_real(&mut self, real: bool) {
        self.real = real;
    }

    /// Coefficient vector at flat index `idx`.
    #[inline]
    pub fn at(&self, idx: usize) -> [Complex64; 3] {
        [self.coeffs[0][idx], self.coeffs[1][idx], self.coeffs[2][idx]]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: [Complex64; 3]) {
        for (c, x) in self.coeffs.iter_mut().zip(v) {
            c[idx] = x;
        }
    }

    /// Coefficient vector at lattice vector `m`.
    pub fn at_lattice(&self, m: [i64; 3]) -> [Complex64; 3] {
        self.at(self.grid.index_of(m))
    }

    /// Sets the mode at `m` and its conjugate partner at `-m`.
    pub fn set_hermitian_pair(&mut self, m: [i64; 3], v: [Complex64; 3]) {
        let idx = self.grid.index_of(m);
        let conj = self.grid.conjugate_index(idx);
        self.set(idx, v);
        self.set(conj, [v[0].conj(), v[1].conj(), v[2].conj()]);
    }

    /// Replaces each coefficient by the average of itself and the conjugate
    /// of its `-k` partner, restoring exact Hermitian symmetry.
    pub fn symmetrize(&mut self) {
        let grid = self.grid;
        for comp in self.coeffs.iter_mut() {
            let orig = comp.clone();
            for (idx, c) in comp.iter_mut().enumerate() {
                let j = grid.conjugate_index(idx);
                *c = 0.5 * (orig[idx] + orig[j].conj());
            }
        }
        self.real = true;
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale_in_place(a);
        out
    }

    pub fn scale_in_place(&mut self, a: f64) {
        for comp in self.coeffs.iter_mut() {
            for c in comp.iter_mut() {
                *c *= a;
            }
        }
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.grid, x.grid);
        for (dst, src) in self.coeffs.iter_mut().zip(&x.coeffs) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += a * s;
            }
        }
    }

    /// Pointwise combination `f(self(k), other(k))` per component.
    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        check_same_grid(&self.grid, &other.grid)?;
        let mut out = self.clone();
        for (dst, src) in out.coeffs.iter_mut().zip(&other.coeffs) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = f(*d, *s);
            }
        }
        out.real = self.real && other.real;
        Ok(out)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Places a scalar field in component `c` of an otherwise zero vector field.
    pub fn from_scalar_component(s: &SpectralScalarField, c: usize) -> Self {
        let mut out = Self::zeros(s.grid);
        out.coeffs[c] = s.coeffs.clone();
        out.real = s.real;
        out
    }

    pub fn component(&self, c: usize) -> SpectralScalarField {
        SpectralScalarField {
            grid: self.grid,
            coeffs: self.coeffs[c].clone(),
            real: self.real,
        }
    }
}

impl SpectralField for SpectralVectorField {
    fn grid(&self) -> &Grid3 {
        &self.grid
    }
    fn components(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }
    fn components_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.coeffs
    }
    fn is_real(&self) -> bool {
        self.real
    }
}

impl Add for &SpectralVectorField {
    type Output = SpectralVectorField;
    fn add(self, rhs: Self) -> SpectralVectorField {
        self.try_add(rhs).expect("grid mismatch in field addition")
    }
}

impl Sub for &SpectralVectorField {
    type Output = SpectralVectorField;
    fn sub(self, rhs: Self) -> SpectralVectorField {
        self.try_sub(rhs).expect("grid mismatch in field subtraction")
    }
}

impl Mul<f64> for &SpectralVectorField {
    type Output = SpectralVectorField;
    fn mul(self, rhs: f64) -> SpectralVectorField {
        self.scale(rhs)
    }
}

impl Neg for &SpectralVectorField {
    type Output = SpectralVectorField;
    fn neg(self) -> SpectralVectorField {
        self.scale(-1.0)
    }
}

/// Fourier coefficients of a scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralScalarField {
    grid: Grid3,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl SpectralScalarField {
    pub fn zeros(grid: Grid3) -> Self {
        Self {
            grid,
            coeffs: vec![ZERO; grid.len()],
            real: true,
        }
    }

    pub fn from_coeffs(grid: Grid3, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(EmhdError::Shape(format!(
                "expected {} coefficients",
                grid.len()
            )));
        }
        Ok(Self { grid, coeffs, real })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn at_lattice(&self, m: [i64; 3]) -> Complex64 {
        self.coeffs[self.grid.index_of(m)]
    }

    pub fn set_hermitian_pair(&mut self, m: [i64; 3], v: Complex64) {
        let idx = self.grid.index_of(m);
        let conj = self.grid.conjugate_index(idx);
        self.coeffs[idx] = v;
        self.coeffs[conj] = v.conj();
    }

    pub fn symmetrize(&mut self) {
        let orig = self.coeffs.clone();
        for (idx, c) in self.coeffs.iter_mut().enumerate() {
            let j = self.grid.conjugate_index(idx);
            *c = 0.5 * (orig[idx] + orig[j].conj());
        }
        self.real = true;
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= a;
        }
        out
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_same_grid(&self.grid, &other.grid)?;
        let mut out = self.clone();
        for (d, s) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *d += s;
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        check_same_grid(&self.grid, &other.grid)?;
        let mut out = self.clone();
        for (d, s) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *d -= s;
        }
        Ok(out)
    }
}

impl SpectralField for SpectralScalarField {
    fn grid(&self) -> &Grid3 {
        &self.grid
    }
    fn components(&self) -> &[Vec<Complex64>] {
        std::slice::from_ref(&self.coeffs)
    }
    fn components_mut(&mut self) -> &mut [Vec<Complex64>] {
        std::slice::from_mut(&mut self.coeffs)
    }
    fn is_real(&self) -> bool {
        self.real
    }
}

/// Collocation values of a 3-component real field.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalVectorField {
    grid: Grid3,
    values: [Vec<f64>; 3],
}

impl PhysicalVectorField {
    pub fn zeros(grid: Grid3) -> Self {
        let len = grid.len();
        Self {
            grid,
            values: [vec![0.0; len], vec![0.0; len], vec![0.0; len]],
        }
    }

    pub fn from_components(grid: Grid3, values: [Vec<f64>; 3]) -> Result<Self> {
        if values.iter().any(|c| c.len() != grid.len()) {
            return Err(EmhdError::Shape(format!(
                "expected {} values per component",
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y, z)` at every grid point.
    pub fn from_fn(grid: Grid3, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        let n = grid.n();
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    let v = f(grid.coordinate(ix), grid.coordinate(iy), grid.coordinate(iz));
                    let idx = grid.flat(ix, iy, iz);
                    for c in 0..3 {
                        out.values[c][idx] = v[c];
                    }
                }
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[Vec<f64>; 3] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vec<f64>; 3] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        [self.values[0][idx], self.values[1][idx], self.values[2][idx]]
    }

    /// Root-mean-square over grid points.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self
            .values
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>())
            .sum();
        (sum / self.grid.len() as f64).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        check_same_grid(&self.grid, &other.grid)?;
        let mut out = self.clone();
        for (d, s) in out.values.iter_mut().zip(&other.values) {
            for (a, b) in d.iter_mut().zip(s) {
                *a -= b;
            }
        }
        Ok(out)
    }
}

/// Collocation values of a real scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalScalarField {
    grid: Grid3,
    values: Vec<f64>,
}

impl PhysicalScalarField {
    pub fn zeros(grid: Grid3) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: Grid3, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(EmhdError::Shape(format!("expected {} values", grid.len())));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid3, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    values.push(f(grid.coordinate(ix), grid.coordinate(iy), grid.coordinate(iz)));
                }
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.grid.len() as f64).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
