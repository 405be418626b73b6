//! Adaptive Gauss–Kronrod quadrature and integration over the real line by a
//! truncation ladder.

use crate::error::{Error, Result};

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
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_segments: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-15,
            rel: 1e-13,
            max_segments: 4000,
        }
    }
}

/// Globally adaptive G7–K15 quadrature of `f` over `[a, b]`, starting from the
/// partition given by `breakpoints` (points outside `(a, b)` are ignored).
///
/// Returns the value and the summed error estimate. The estimate is returned
/// even when the segment budget runs out; callers decide what to do with it.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: Tolerance,
) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > lo && x < hi)
        .collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut segments: Vec<Segment> = cuts.windows(2).map(|w| gk15(&f, w[0], w[1])).collect();
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if error <= tol.abs.max(tol.rel * value.abs()) || segments.len() >= tol.max_segments {
            return (sign * value, error);
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one segment");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // Segment cannot be split further in floating point.
            segments.push(Segment { error: 0.0, ..s });
            continue;
        }
        segments.push(gk15(&f, s.a, mid));
        segments.push(gk15(&f, mid, s.b));
    }
}

/// Integrates `f` over ℝ on the ladder `[-R, R]`, `R = r0, 2 r0, 4 r0, ...`,
/// stopping once two consecutive extensions change the value by less than
/// `rel_tol · max(|I|, abs_floor)`.
///
/// `scale` is a characteristic width of `f`: the partition of every rung is
/// refined geometrically from the origin at that scale so narrow features are
/// not missed by the first Kronrod sweep.
pub fn integrate_real_line<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    scale: f64,
    rel_tol: f64,
    what: &str,
) -> Result<f64> {
    const R0: f64 = 10.0;
    const RUNGS: usize = 24;
    let abs_floor = 1e-300;
    let tol = Tolerance {
        abs: 1e-300,
        rel: 1e-14,
        max_segments: 4000,
    };

    let mut cuts = breakpoints.to_vec();
    cuts.push(0.0);
    let mut s = scale.abs().max(1e-12);
    while s < R0 * (1u64 << RUNGS) as f64 {
        cuts.push(s);
        cuts.push(-s);
        s *= 2.0;
    }

    let mut lo = -R0;
    let mut hi = R0;
    let mut total = integrate(&f, lo, hi, &cuts, tol).0;
    let mut quiet = 0;
    for _ in 0..RUNGS {
        let increment =
            integrate(&f, 2.0 * lo, lo, &cuts, tol).0 + integrate(&f, hi, 2.0 * hi, &cuts, tol).0;
        lo *= 2.0;
        hi *= 2.0;
        total += increment;
        if !total.is_finite() {
            break;
        }
        if increment.abs() <= rel_tol * total.abs().max(abs_floor) {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::NonIntegrable {
        what: what.to_string(),
        radius: hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let (v, _) = integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, &[], Tolerance::default());
        // x^4/4 - x^2 + x on [-1, 3]
        let exact = (81.0 / 4.0 - 9.0 + 3.0) - (0.25 - 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let (v, _) = integrate(f64::exp, 1.0, 0.0, &[], Tolerance::default());
        assert!((v + (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn kink_at_breakpoint() {
        let (v, _) = integrate(|x: f64| x.abs(), -1.0, 2.0, &[0.0], Tolerance::default());
        assert!((v - 2.5).abs() < 1e-14);
    }

    #[test]
    fn real_line_exponential_moments() {
        let v = integrate_real_line(|z: f64| z * z * (-z.abs()).exp() / 2.0, &[], 1.0, 1e-14, "m2")
            .unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn narrow_gaussian_is_found() {
        let s = 1e-3;
        let v = integrate_real_line(
            |z: f64| (-(z * z) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt()),
            &[],
            s,
            1e-14,
            "mass",
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heavy_tail_is_rejected() {
        let r = integrate_real_line(|z: f64| z * z / (1.0 + z * z), &[], 1.0, 1e-12, "m2");
        assert!(matches!(r, Err(Error::NonIntegrable { .. })));
    }
}
