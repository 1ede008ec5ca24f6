//! Kernels and sources sampled on a grid.
//!
//! Every builder checks that its field is nontrivial and localized: the outer
//! shell `max_i |x_i| >= 0.9 L` may carry less than `MASS_GATE` of the `L1`
//! mass, so the periodic box does not visibly truncate the field.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{shell_mass_fraction, FieldRole, GridSpec, RealField};
use crate::io::read_nfs1;

pub const MASS_GATE: f64 = 1e-6;

/// Rejects vanishing fields and fields that leak into the outer shell.
pub fn check_localized(field: &RealField) -> Result<()> {
    if field.is_zero() {
        return Err(Error::TrivialField);
    }
    let fraction = shell_mass_fraction(field);
    if fraction >= MASS_GATE {
        return Err(Error::MassLeakage { fraction });
    }
    Ok(())
}

fn positive(v: f64, name: &'static str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveInput(name))
    }
}

fn check_axis(spec: &GridSpec, axis: usize) -> Result<()> {
    if axis >= spec.dim() {
        return Err(Error::InvalidField(format!(
            "axis {axis} is out of range for dimension {}",
            spec.dim()
        )));
    }
    Ok(())
}

/// `exp(-|x - c e_axis|^2 / (2 w^2))`.
fn bump(
    spec: GridSpec,
    role: FieldRole,
    axis: usize,
    centre: f64,
    width: f64,
) -> Result<RealField> {
    RealField::from_fn(spec, role, |x| {
        let r2: f64 = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if i == axis {
                    (v - centre).powi(2)
                } else {
                    v * v
                }
            })
            .sum();
        (-r2 / (2.0 * width * width)).exp()
    })
}

/// `K(x) = A exp(-|x|^2 / (2 s^2))`.
pub fn gaussian_kernel(spec: GridSpec, sigma: f64, amplitude: f64) -> Result<RealField> {
    positive(sigma, "kernel.sigma")?;
    if !amplitude.is_finite() {
        return Err(Error::NonPositiveInput("kernel.amplitude"));
    }
    let k = bump(spec, FieldRole::Kernel, 0, 0.0, sigma)?.scaled(amplitude);
    check_localized(&k)?;
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianDiff {
    /// Positions of the two centres along `axis`.
    pub centers: [f64; 2],
    pub widths: [f64; 2],
    pub amplitude: f64,
    pub axis: usize,
}

/// `A (G_1 - G_2)` with each Gaussian scaled to unit sampled mass, then
/// shifted by its residual grid mean so the zero mode vanishes to rounding.
pub fn gaussian_diff_source(spec: GridSpec, p: &GaussianDiff) -> Result<RealField> {
    check_axis(&spec, p.axis)?;
    positive(p.widths[0], "source.widths")?;
    positive(p.widths[1], "source.widths")?;
    if !p.amplitude.is_finite() || !p.centers.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidField("non-finite source parameter".into()));
    }
    let unit = |c: f64, w: f64| -> Result<RealField> {
        let b = bump(spec, FieldRole::Source, p.axis, c, w)?;
        let mass = b.integral();
        Ok(b.scaled(1.0 / mass))
    };
    let diff = unit(p.centers[0], p.widths[0])?
        .sub(&unit(p.centers[1], p.widths[1])?)?
        .scaled(p.amplitude);
    let mean = diff.mean();
    let f = diff.map(|v| v - mean);
    check_localized(&f)?;
    Ok(f)
}

/// `A exp(-|x - c e_axis|^2 / (2 w^2))`; carries a nonzero mean, so it
/// needs `MeanPolicy::Project` downstream.
pub fn gaussian_source(
    spec: GridSpec,
    centre: f64,
    width: f64,
    amplitude: f64,
    axis: usize,
) -> Result<RealField> {
    check_axis(&spec, axis)?;
    positive(width, "source.widths")?;
    if !amplitude.is_finite() || !centre.is_finite() {
        return Err(Error::InvalidField("non-finite source parameter".into()));
    }
    let f = bump(spec, FieldRole::Source, axis, centre, width)?.scaled(amplitude);
    check_localized(&f)?;
    Ok(f)
}

/// Field from an NFS1 dump; its grid must equal `spec`.
pub fn field_from_file(spec: GridSpec, path: &Path, role: FieldRole) -> Result<RealField> {
    let f = read_nfs1(path, role)?;
    if *f.spec() != spec {
        return Err(Error::GridMismatch);
    }
    check_localized(&f)?;
    Ok(f)
}
