//! Adaptive Gauss-Kronrod (7/15) quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 48;

/// Kronrod estimate and |Kronrod - Gauss| on one panel.
fn kronrod_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let pair = f(centre - half * x) + f(centre + half * x);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = kronrod_panel(f, a, b);
    if err <= tol * whole.abs().max(f64::MIN_POSITIVE) || depth >= MAX_DEPTH {
        return value;
    }
    let mid = 0.5 * (a + b);
    adapt(f, a, mid, whole, tol, depth + 1) + adapt(f, mid, b, whole, tol, depth + 1)
}

/// Integrates `f` over `[a, b]`, starting from `panels` equal panels and
/// bisecting each until its local error estimate falls below `rel_tol`
/// times the running total.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, rel_tol: f64) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let edges: Vec<f64> = (0..=panels).map(|i| a + h * i as f64).collect();
    let coarse: f64 = edges
        .windows(2)
        .map(|w| kronrod_panel(&f, w[0], w[1]).0)
        .sum();
    edges
        .windows(2)
        .map(|w| adapt(&f, w[0], w[1], coarse, rel_tol, 0))
        .sum()
}

/// Integrates over `[0, inf)` through `r = t / (1 - t)`.
pub fn integrate_half_line(f: impl Fn(f64) -> f64, panels: usize, rel_tol: f64) -> f64 {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - t;
            f(t / s) / (s * s)
        },
        0.0,
        1.0,
        panels,
        rel_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_low_degree_polynomials() {
        // a single 15-point Kronrod panel integrates degree <= 22 exactly
        for p in 0..=20 {
            let (v, _) = kronrod_panel(&|x: f64| x.powi(p), 0.0, 1.0);
            assert!((v - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn smooth_and_half_line_integrals() {
        let v = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1, 1e-13);
        assert!((v - 2.0).abs() < 1e-13);
        let g = integrate_half_line(|x| (-x * x).exp(), 4, 1e-13);
        assert!((g - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
        let c = integrate_half_line(|x| 1.0 / (1.0 + x * x), 4, 1e-13);
        assert!((c - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }
}
