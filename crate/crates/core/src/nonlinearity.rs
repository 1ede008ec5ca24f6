//! The nonlinearity `g`, the interval `I` it is examined on, and its
//! `C2(I)` norm `sup|g| + sup|g'| + sup|g''|`.
//!
//! Polynomials get exact suprema from the real critical points of each
//! derivative (companion-matrix eigenvalues). Arbitrary callables are
//! sampled, so their norms are approximations.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{FieldRole, RealField};

/// Samples for callables when the caller has no preference.
pub const DEFAULT_SAMPLES: usize = 10_001;

/// Minimum sampling density for callables, points per unit length of `I`.
pub const CALLABLE_DENSITY: f64 = 1e4;

/// Tolerance on `g(0)` and `g'(0)`.
pub const CONFORMANCE_TOL: f64 = 1e-14;

/// Slack on interval membership in `compose`.
pub const INTERVAL_TOL: f64 = 1e-9;

/// A real polynomial, `coeffs[j]` multiplying `z^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    /// `sum_{j >= 2} a_j z^j` from `[a_2, a_3, ...]`.
    pub fn from_degree_two(tail: &[f64]) -> Self {
        let mut coeffs = vec![0.0, 0.0];
        coeffs.extend_from_slice(tail);
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree, with the zero polynomial reported as 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| j as f64 * c)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(other.coeffs.len());
        let at = |p: &Polynomial, j: usize| p.coeffs.get(j).copied().unwrap_or(0.0);
        Polynomial::new((0..len).map(|j| at(self, j) - at(other, j)).collect())
    }

    pub fn scaled(&self, factor: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// Real roots, from the eigenvalues of the companion matrix and one
    /// round of Newton polishing. Near-real complex pairs are kept (as their
    /// real part), which can only add harmless candidates.
    pub fn real_roots(&self) -> Vec<f64> {
        let deg = self.degree();
        if self.is_zero() || deg == 0 {
            return Vec::new();
        }
        let lead = self.coeffs[deg];
        if deg == 1 {
            return vec![-self.coeffs[0] / lead];
        }
        let mut companion = DMatrix::<f64>::zeros(deg, deg);
        for i in 1..deg {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..deg {
            companion[(i, deg - 1)] = -self.coeffs[i] / lead;
        }
        let slope = self.derivative();
        companion
            .complex_eigenvalues()
            .iter()
            .filter(|z| z.im.abs() <= 1e-6 * (1.0 + z.re.abs()))
            .map(|z| {
                let mut x = z.re;
                for _ in 0..3 {
                    let s = slope.eval(x);
                    if s == 0.0 {
                        break;
                    }
                    let next = x - self.eval(x) / s;
                    if self.eval(next).abs() < self.eval(x).abs() {
                        x = next;
                    } else {
                        break;
                    }
                }
                x
            })
            .collect()
    }

    /// `max |p|` over `[lo, hi]`: endpoints plus interior critical points.
    pub fn sup_abs_on(&self, lo: f64, hi: f64) -> f64 {
        let mut best = self.eval(lo).abs().max(self.eval(hi).abs());
        for z in self.derivative().real_roots() {
            if z > lo && z < hi {
                best = best.max(self.eval(z).abs());
            }
        }
        best
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, c)| match j {
                0 => format!("{c}"),
                1 => format!("{c}*z"),
                _ => format!("{c}*z^{j}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `g` with hand-supplied first and second derivatives.
#[derive(Clone)]
pub struct CallableNonlinearity {
    pub label: String,
    pub g: ScalarFn,
    pub dg: ScalarFn,
    pub ddg: ScalarFn,
}

impl fmt::Debug for CallableNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallableNonlinearity")
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Nonlinearity {
    Polynomial(Polynomial),
    Callable(CallableNonlinearity),
}

impl Nonlinearity {
    /// `sum_{j >= 2} a_j z^j` from `[a_2, a_3, ...]`.
    pub fn polynomial(tail: &[f64]) -> Self {
        Nonlinearity::Polynomial(Polynomial::from_degree_two(tail))
    }

    pub fn callable(
        label: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dg: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ddg: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Nonlinearity::Callable(CallableNonlinearity {
            label: label.into(),
            g: Arc::new(g),
            dg: Arc::new(dg),
            ddg: Arc::new(ddg),
        })
    }

    pub fn value(&self, z: f64) -> f64 {
        match self {
            Nonlinearity::Polynomial(p) => p.eval(z),
            Nonlinearity::Callable(c) => (c.g)(z),
        }
    }

    pub fn first(&self, z: f64) -> f64 {
        match self {
            Nonlinearity::Polynomial(p) => p.derivative().eval(z),
            Nonlinearity::Callable(c) => (c.dg)(z),
        }
    }

    pub fn second(&self, z: f64) -> f64 {
        match self {
            Nonlinearity::Polynomial(p) => p.derivative().derivative().eval(z),
            Nonlinearity::Callable(c) => (c.ddg)(z),
        }
    }

    /// `g(0) = 0` and `g'(0) = 0` to within `CONFORMANCE_TOL`.
    pub fn check_conforming(&self) -> Result<()> {
        let (g0, g1) = (self.value(0.0), self.first(0.0));
        if g0.abs() > CONFORMANCE_TOL || g1.abs() > CONFORMANCE_TOL {
            return Err(Error::NonconformingG { g0, g1 });
        }
        Ok(())
    }

    fn as_callable(&self) -> CallableNonlinearity {
        match self {
            Nonlinearity::Callable(c) => c.clone(),
            Nonlinearity::Polynomial(p) => {
                let (p0, p1, p2) = (p.clone(), p.derivative(), p.derivative().derivative());
                CallableNonlinearity {
                    label: p.to_string(),
                    g: Arc::new(move |z| p0.eval(z)),
                    dg: Arc::new(move |z| p1.eval(z)),
                    ddg: Arc::new(move |z| p2.eval(z)),
                }
            }
        }
    }

    /// `self - other`, exact for two polynomials.
    pub fn difference(&self, other: &Nonlinearity) -> Nonlinearity {
        match (self, other) {
            (Nonlinearity::Polynomial(a), Nonlinearity::Polynomial(b)) => {
                Nonlinearity::Polynomial(a.sub(b))
            }
            _ => {
                let (a, b) = (self.as_callable(), other.as_callable());
                let (ag, bg) = (a.g.clone(), b.g.clone());
                let (ad, bd) = (a.dg.clone(), b.dg.clone());
                let (add, bdd) = (a.ddg.clone(), b.ddg.clone());
                Nonlinearity::Callable(CallableNonlinearity {
                    label: format!("({}) - ({})", a.label, b.label),
                    g: Arc::new(move |z| ag(z) - bg(z)),
                    dg: Arc::new(move |z| ad(z) - bd(z)),
                    ddg: Arc::new(move |z| add(z) - bdd(z)),
                })
            }
        }
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Polynomial(p) => write!(f, "{p}"),
            Nonlinearity::Callable(c) => write!(f, "{}", c.label),
        }
    }
}

/// The symmetric interval `[-upper, upper]`, `upper = c_e (||u_0||_H4 + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalI {
    pub upper: f64,
}

impl IntervalI {
    pub fn lower(&self) -> f64 {
        -self.upper
    }

    pub fn width(&self) -> f64 {
        2.0 * self.upper
    }

    pub fn contains(&self, z: f64, slack: f64) -> bool {
        z.abs() <= self.upper + slack
    }
}

pub fn build_interval(u0_h4: f64, c_e: f64) -> Result<IntervalI> {
    if !(u0_h4.is_finite() && u0_h4 >= 0.0) {
        return Err(Error::NonPositiveInput("u0_h4"));
    }
    if !(c_e.is_finite() && c_e > 0.0) {
        return Err(Error::NonPositiveInput("c_e"));
    }
    Ok(IntervalI {
        upper: c_e * u0_h4 + c_e,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C2Report {
    pub sup_g: f64,
    pub sup_g1: f64,
    pub sup_g2: f64,
    pub c2_norm: f64,
    /// Certified bound `M`; defaults to the norm itself.
    pub big_m: f64,
    /// True when the suprema were computed exactly (polynomial path).
    pub exact: bool,
}

fn sampled_sup(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, count: usize) -> f64 {
    let last = (count - 1) as f64;
    (0..count)
        .map(|i| f(lo + (hi - lo) * i as f64 / last).abs())
        .fold(0.0, f64::max)
}

pub fn c2_norm(g: &Nonlinearity, interval: &IntervalI, samples: usize) -> Result<C2Report> {
    if samples < 1001 || samples.is_multiple_of(2) {
        return Err(Error::InvalidSamples(samples));
    }
    g.check_conforming()?;
    let (lo, hi) = (interval.lower(), interval.upper);
    let (sup_g, sup_g1, sup_g2, exact) = match g {
        Nonlinearity::Polynomial(p) => {
            let p1 = p.derivative();
            let p2 = p1.derivative();
            (
                p.sup_abs_on(lo, hi),
                p1.sup_abs_on(lo, hi),
                p2.sup_abs_on(lo, hi),
                true,
            )
        }
        Nonlinearity::Callable(c) => {
            let mut count = samples.max((CALLABLE_DENSITY * interval.width()).ceil() as usize);
            if count.is_multiple_of(2) {
                count += 1;
            }
            (
                sampled_sup(&*c.g, lo, hi, count),
                sampled_sup(&*c.dg, lo, hi, count),
                sampled_sup(&*c.ddg, lo, hi, count),
                false,
            )
        }
    };
    let c2 = sup_g + sup_g1 + sup_g2;
    Ok(C2Report {
        sup_g,
        sup_g1,
        sup_g2,
        c2_norm: c2,
        big_m: c2,
        exact,
    })
}

/// Whether `g` lies in the closed ball of radius `big_m` in `C2(I)`.
pub fn check_dm_membership(report: &C2Report, big_m: f64) -> bool {
    report.c2_norm <= big_m
}

/// `||g1 - g2||_C2(I)`.
pub fn c2_distance(
    g1: &Nonlinearity,
    g2: &Nonlinearity,
    interval: &IntervalI,
    samples: usize,
) -> Result<f64> {
    g1.check_conforming()?;
    g2.check_conforming()?;
    Ok(c2_norm(&g1.difference(g2), interval, samples)?.c2_norm)
}

/// `G(x) = g(u0(x) + v(x))`. Every argument must lie in `I` up to
/// `INTERVAL_TOL`; nothing is clamped.
pub fn compose(
    g: &Nonlinearity,
    u0: &RealField,
    v: &RealField,
    interval: &IntervalI,
) -> Result<RealField> {
    if u0.spec() != v.spec() {
        return Err(Error::GridMismatch);
    }
    let poly = match g {
        Nonlinearity::Polynomial(p) => Some(p),
        Nonlinearity::Callable(_) => None,
    };
    let mut values = Vec::with_capacity(u0.values().len());
    for (&a, &b) in u0.values().iter().zip(v.values()) {
        let z = a + b;
        if !interval.contains(z, INTERVAL_TOL) {
            return Err(Error::IntervalExceeded {
                value: z,
                bound: interval.upper,
            });
        }
        values.push(match poly {
            Some(p) => p.eval(z),
            None => g.value(z),
        });
    }
    RealField::new(*u0.spec(), values, FieldRole::Composition)
}
