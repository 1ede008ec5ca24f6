//! Periodic-box discretisation of `R^d` and its Fourier machinery.
//!
//! The box `[-L, L)^d` carries `n` samples per axis at `x_j = -L + j * dx`,
//! `dx = 2L / n`, stored row-major (last axis fastest). The dual lattice is
//! `p_k = (pi / L) k` with `k` in `[-n/2, n/2)^d`; spectra are stored in FFT
//! order, so index `m` along an axis holds `k = m` for `m < n/2` and `k = m - n`
//! otherwise.
//!
//! The transform is the unitary continuum convention evaluated by the
//! rectangle rule:
//!
//! ```text
//! F(k) = dx^d (2 pi)^(-d/2) sum_x f(x) exp(-i p_k . x)
//! f(x) = (2 pi)^(d/2) / (2L)^d sum_k F(k) exp(i p_k . x)
//! ```
//!
//! With this scaling `||f||_2^2 = (pi / L)^d sum_k |F(k)|^2` and
//! `conv(a, b) = (2 pi)^(d/2) a_hat b_hat`, exactly as on `R^d`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Upper bound on grid allocation when the caller does not pick one.
pub const DEFAULT_MEMORY_BUDGET_MB: usize = 1024;

/// Relative tolerance on the imaginary residue of a real reconstruction.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Points with some `|x_i| >= SHELL_START * L` form the outer shell.
pub const SHELL_START: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    half_width: f64,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        Self::with_memory_budget(dim, n, half_width, DEFAULT_MEMORY_BUDGET_MB)
    }

    /// Validates the grid against a budget in MiB. The budget counts one
    /// complex array of `n^d` entries.
    pub fn with_memory_budget(
        dim: usize,
        n: usize,
        half_width: f64,
        budget_mb: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "samples per axis must be a power of two >= 4, got {n}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        let points = (n as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
        let bytes = points.saturating_mul(16);
        let budget = (budget_mb as u128) << 20;
        if bytes > budget {
            return Err(Error::InvalidGrid(format!(
                "{n}^{dim} points need {} MiB, budget is {budget_mb} MiB",
                bytes >> 20
            )));
        }
        Ok(GridSpec { dim, n, half_width })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Total number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one physical cell, `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Lattice step of the dual grid, `pi / L`.
    pub fn dual_spacing(&self) -> f64 {
        PI / self.half_width
    }

    /// Volume of one dual-lattice cell, `(pi / L)^d` (the Parseval weight).
    pub fn dual_cell_volume(&self) -> f64 {
        self.dual_spacing().powi(self.dim as i32)
    }

    /// Coordinate of sample `j` along any axis.
    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Signed wavenumber for FFT-order index `m`.
    pub fn wavenumber(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    /// FFT-order index of signed wavenumber `k`.
    pub fn fft_index(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Row-major multi-index of a flat index.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// For every flat index, the sum over axes of `per_axis[idx_axis]`,
    /// accumulated in axis order.
    pub fn axis_sum_table(&self, per_axis: &[f64]) -> Vec<f64> {
        debug_assert_eq!(per_axis.len(), self.n);
        let mut table = vec![0.0];
        for _ in 0..self.dim {
            let mut next = Vec::with_capacity(table.len() * self.n);
            for &base in &table {
                next.extend(per_axis.iter().map(|&v| base + v));
            }
            table = next;
        }
        table
    }

    /// `|x|^2` at every grid point.
    pub fn radius_sq_table(&self) -> Vec<f64> {
        let per_axis: Vec<f64> = (0..self.n).map(|j| self.coordinate(j).powi(2)).collect();
        self.axis_sum_table(&per_axis)
    }

    /// `|p_k|^2` at every spectral index (FFT order).
    pub fn frequency_sq_table(&self) -> Vec<f64> {
        let dp = self.dual_spacing();
        let per_axis: Vec<f64> = (0..self.n)
            .map(|m| (self.wavenumber(m) as f64 * dp).powi(2))
            .collect();
        self.axis_sum_table(&per_axis)
    }

    /// `(-1)^(k_1 + ... + k_d)` at every spectral index. It converts the DFT
    /// on indices `0..n` to the transform over the centred box.
    fn phase_table(&self) -> Vec<f64> {
        let per_axis: Vec<f64> = (0..self.n).map(|m| (m % 2) as f64).collect();
        self.axis_sum_table(&per_axis)
            .into_iter()
            .map(|s| {
                if (s as u64).is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect()
    }

    fn forward_scale(&self) -> f64 {
        self.cell_volume() * (2.0 * PI).powf(-(self.dim as f64) / 2.0)
    }

    fn inverse_scale(&self) -> f64 {
        (2.0 * PI).powf(self.dim as f64 / 2.0) / (2.0 * self.half_width).powi(self.dim as i32)
    }
}

/// What a sampled field stands for in the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRole {
    Source,
    Kernel,
    Iterate,
    Solution,
    Composition,
    Generic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    spec: GridSpec,
    values: Vec<f64>,
    role: FieldRole,
}

impl RealField {
    pub fn new(spec: GridSpec, values: Vec<f64>, role: FieldRole) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!(
                "non-finite value at index {pos}"
            )));
        }
        Ok(RealField { spec, values, role })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        RealField {
            spec,
            values: vec![0.0; spec.len()],
            role: FieldRole::Generic,
        }
    }

    /// Samples `f` at every grid point. `f` receives the coordinate vector.
    pub fn from_fn(spec: GridSpec, role: FieldRole, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut x = vec![0.0; spec.dim()];
        let values = (0..spec.len())
            .map(|flat| {
                for (xi, j) in x.iter_mut().zip(spec.unravel(flat)) {
                    *xi = spec.coordinate(j);
                }
                f(&x)
            })
            .collect();
        Self::new(spec, values, role)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn with_role(mut self, role: FieldRole) -> Self {
        self.role = role;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    fn check_grid(&self, other: &RealField) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &RealField) -> Result<RealField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RealField) -> Result<RealField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<RealField> {
        self.check_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        RealField::new(self.spec, values, self.role)
    }

    pub fn scaled(&self, factor: f64) -> RealField {
        RealField {
            spec: self.spec,
            values: self.values.iter().map(|v| v * factor).collect(),
            role: self.role,
        }
    }

    /// Applies `f` to every sample; `f` must map finite values to finite
    /// values.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
            role: self.role,
        }
    }

    /// Grid average of the samples.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Quadrature of the field over the box.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.cell_volume()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    spec: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(spec: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != spec.len() {
            return Err(Error::InvalidField(format!(
                "expected {} coefficients, got {}",
                spec.len(),
                coeffs.len()
            )));
        }
        Ok(SpectralField { spec, coeffs })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        SpectralField {
            spec,
            coeffs: vec![Complex64::new(0.0, 0.0); spec.len()],
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Coefficients in FFT order.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at signed wavenumber `k`.
    pub fn at(&self, k: &[i64]) -> Complex64 {
        let idx: Vec<usize> = k.iter().map(|&ki| self.spec.fft_index(ki)).collect();
        self.coeffs[self.spec.ravel(&idx)]
    }

    /// The coefficient at `p = 0`.
    pub fn zero_mode(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Largest `|F(-k) - conj(F(k))|` relative to the largest `|F(k)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let n = self.spec.n;
        let worst = (0..self.coeffs.len())
            .map(|flat| {
                let mirror: Vec<usize> = self
                    .spec
                    .unravel(flat)
                    .into_iter()
                    .map(|m| (n - m) % n)
                    .collect();
                (self.coeffs[self.spec.ravel(&mirror)] - self.coeffs[flat].conj()).norm()
            })
            .fold(0.0, f64::max);
        worst / scale
    }

    pub fn scaled(&self, factor: f64) -> SpectralField {
        SpectralField {
            spec: self.spec,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }
}

/// Fourier multipliers used by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    /// `-|p|^2`
    Laplacian,
    /// `|p|^4`
    Bilaplacian,
    /// `|p|^2 + |p|^4`, the symbol of `-Laplacian + Bilaplacian`.
    LSymbol,
    /// `|p|^8`, the weight of `||Bilaplacian u||_2^2` under Parseval.
    H4Weight,
}

impl Symbol {
    pub fn eval(self, p_sq: f64) -> f64 {
        match self {
            Symbol::Laplacian => -p_sq,
            Symbol::Bilaplacian => p_sq * p_sq,
            Symbol::LSymbol => p_sq + p_sq * p_sq,
            Symbol::H4Weight => {
                let p4 = p_sq * p_sq;
                p4 * p4
            }
        }
    }
}

fn fft_nd(data: &mut [Complex64], dim: usize, n: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut lines = vec![Complex64::default(); data.len()];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        let block = stride * n;
        for (outer, chunk) in data.chunks(block).enumerate() {
            let base = outer * block;
            for j in 0..n {
                for i in 0..stride {
                    lines[base + i * n + j] = chunk[j * stride + i];
                }
            }
        }
        fft.process_with_scratch(&mut lines, &mut scratch);
        for (outer, chunk) in data.chunks_mut(block).enumerate() {
            let base = outer * block;
            for j in 0..n {
                for i in 0..stride {
                    chunk[j * stride + i] = lines[base + i * n + j];
                }
            }
        }
    }
}

pub fn forward_transform(f: &RealField) -> SpectralField {
    let spec = f.spec;
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut data, spec.dim, spec.n, false);
    let scale = spec.forward_scale();
    for (c, sign) in data.iter_mut().zip(spec.phase_table()) {
        *c *= scale * sign;
    }
    SpectralField { spec, coeffs: data }
}

/// Complex reconstruction without the realness check.
pub fn inverse_transform_complex(spec_field: &SpectralField) -> Vec<Complex64> {
    let spec = spec_field.spec;
    let mut data: Vec<Complex64> = spec_field
        .coeffs
        .iter()
        .zip(spec.phase_table())
        .map(|(c, sign)| c * sign)
        .collect();
    fft_nd(&mut data, spec.dim, spec.n, true);
    let scale = spec.inverse_scale();
    for c in data.iter_mut() {
        *c *= scale;
    }
    data
}

/// Real reconstruction. Fails with `NonHermitianInput` when the imaginary
/// residue exceeds `HERMITIAN_TOL` relative to the largest sample.
pub fn inverse_transform(spec_field: &SpectralField) -> Result<RealField> {
    let data = inverse_transform_complex(spec_field);
    let scale = data.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let residue = data.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if scale > 0.0 && residue > HERMITIAN_TOL * scale {
        return Err(Error::NonHermitianInput {
            residue: residue / scale,
        });
    }
    RealField::new(
        spec_field.spec,
        data.into_iter().map(|c| c.re).collect(),
        FieldRole::Generic,
    )
}

/// Multiplies every coefficient by `weight(|p_k|^2)`.
pub fn apply_multiplier(f: &SpectralField, weight: impl Fn(f64) -> f64) -> SpectralField {
    let coeffs = f
        .coeffs
        .iter()
        .zip(f.spec.frequency_sq_table())
        .map(|(c, p_sq)| c * weight(p_sq))
        .collect();
    SpectralField {
        spec: f.spec,
        coeffs,
    }
}

pub fn apply_symbol(f: &SpectralField, symbol: Symbol) -> SpectralField {
    apply_multiplier(f, |p_sq| symbol.eval(p_sq))
}

/// Periodic quadrature `dx^d sum_y k(x - y) g(y)`, evaluated spectrally.
pub fn convolve(k: &RealField, g: &RealField) -> Result<RealField> {
    k.check_grid(g)?;
    let spec = k.spec;
    let k_hat = forward_transform(k);
    let g_hat = forward_transform(g);
    let factor = (2.0 * PI).powf(spec.dim as f64 / 2.0);
    let coeffs = k_hat
        .coeffs
        .iter()
        .zip(&g_hat.coeffs)
        .map(|(a, b)| a * b * factor)
        .collect();
    inverse_transform(&SpectralField { spec, coeffs }).map(|f| f.with_role(FieldRole::Generic))
}

pub fn norm_l1(f: &RealField) -> f64 {
    f.values.iter().map(|v| v.abs()).sum::<f64>() * f.spec.cell_volume()
}

pub fn norm_l2(f: &RealField) -> f64 {
    (f.values.iter().map(|v| v * v).sum::<f64>() * f.spec.cell_volume()).sqrt()
}

pub fn norm_linf(f: &RealField) -> f64 {
    f.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// `||F||^2` weighted by a symbol, via Parseval on the dual lattice.
pub fn spectral_energy(f: &SpectralField, weight: impl Fn(f64) -> f64) -> f64 {
    f.coeffs
        .iter()
        .zip(f.spec.frequency_sq_table())
        .map(|(c, p_sq)| c.norm_sqr() * weight(p_sq))
        .sum::<f64>()
        * f.spec.dual_cell_volume()
}

/// `(||u||_2^2, ||Bilaplacian u||_2^2)`.
pub fn h4_parts(f: &RealField) -> (f64, f64) {
    let l2 = norm_l2(f);
    let spectrum = forward_transform(f);
    (
        l2 * l2,
        spectral_energy(&spectrum, |p| Symbol::H4Weight.eval(p)),
    )
}

/// `(||u||_2^2 + ||Bilaplacian u||_2^2)^(1/2)`.
pub fn norm_h4(f: &RealField) -> f64 {
    let (a, b) = h4_parts(f);
    (a + b).sqrt()
}

/// Same norm from a spectrum (both parts via Parseval).
pub fn norm_h4_spectral(f: &SpectralField) -> f64 {
    spectral_energy(f, |p| 1.0 + Symbol::H4Weight.eval(p)).sqrt()
}

/// Fraction of the L1 mass carried by the outer shell `max_i |x_i| >= 0.9 L`.
pub fn shell_mass_fraction(f: &RealField) -> f64 {
    let spec = f.spec;
    let threshold = SHELL_START * spec.half_width;
    let per_axis: Vec<f64> = (0..spec.n)
        .map(|j| {
            if spec.coordinate(j).abs() >= threshold {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = f.values.iter().map(|v| v.abs()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let shell: f64 = f
        .values
        .iter()
        .zip(spec.axis_sum_table(&per_axis))
        .filter(|(_, hits)| *hits > 0.0)
        .map(|(v, _)| v.abs())
        .sum();
    shell / total
}
