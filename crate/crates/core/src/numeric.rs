//! Small numerical kernels shared by the analysis modules: one-dimensional
//! search, safeguarded root finding, adaptive quadrature and a few special
//! functions that need care near zero.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
///
/// Returns `(x_max, f_max)`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= tol * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // the midpoint can be marginally worse than the best probe
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_max(|x| -f(x), a, b, tol);
    (x, -v)
}

/// Root of an increasing function on a bracket `[lo, hi]` with
/// `g(lo) <= 0 <= g(hi)`, by Newton steps that fall back to bisection
/// whenever they leave the bracket.
///
/// `gd` returns `(g(x), g'(x))`. Iteration stops once `|g| <= ftol` or the
/// bracket has collapsed to rounding level.
pub fn newton_bisect<G>(gd: G, mut lo: f64, mut hi: f64, x0: f64, ftol: f64) -> Result<f64>
where
    G: Fn(f64) -> (f64, f64),
{
    let mut x = if x0 > lo && x0 < hi { x0 } else { 0.5 * (lo + hi) };
    let mut best = (f64::INFINITY, x);
    for _ in 0..200 {
        let (g, dg) = gd(x);
        if !g.is_finite() {
            // only possible near an open domain boundary; pull back
            hi = x;
            x = 0.5 * (lo + hi);
            continue;
        }
        if g.abs() < best.0 {
            best = (g.abs(), x);
        }
        if g.abs() <= ftol {
            return Ok(x);
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(best.1);
        }
        let newton = x - g / dg;
        x = if dg > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    if best.0 <= ftol.sqrt() {
        Ok(best.1)
    } else {
        Err(Error::Numeric {
            message: "root search did not converge".into(),
            achieved: best.0,
        })
    }
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod integration of `f` over the finite interval `[a, b]`
/// to an absolute tolerance. Returns `(value, error_estimate)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let mut pieces = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..5000 {
        let (total, err) = pieces
            .iter()
            .fold((0.0, 0.0), |(s, e), p| (s + p.2 .0, e + p.2 .1));
        if err <= abs_tol {
            return Ok((total, err));
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        pieces.push((lo, mid, gk15(&f, lo, mid)));
        pieces.push((mid, hi, gk15(&f, mid, hi)));
    }
    let (total, err) = pieces
        .iter()
        .fold((0.0, 0.0), |(s, e), p| (s + p.2 .0, e + p.2 .1));
    if err <= abs_tol {
        Ok((total, err))
    } else {
        Err(Error::Numeric {
            message: format!("quadrature stopped at value {total}"),
            achieved: err,
        })
    }
}

/// Upper tail of the standard normal law, `P[N > x]`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

/// `e^x - 1 - x` without cancellation for small `|x|`.
pub fn exp_m1_m_x(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let mut term = x * x / 2.0;
        let mut sum = term;
        for k in 3..40 {
            term *= x / k as f64;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        x.exp_m1() - x
    }
}

/// `-ln(1 - x) - x` for `x < 1`.
pub fn neg_ln1m_m_x(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let mut pow = x * x;
        let mut sum = 0.0;
        for k in 2..40 {
            let term = pow / k as f64;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
            pow *= x;
        }
        sum
    } else {
        -(-x).ln_1p() - x
    }
}

/// Bernoulli numbers B_2, B_4, ..., B_20.
pub(crate) const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// `ln(sinh x / x)` and its first two derivatives.
///
/// This is the cgf of a uniform law on `[-1, 1]` evaluated at `x`.
pub fn ln_sinhc(x: f64) -> (f64, f64, f64) {
    let ax = x.abs();
    if ax < 0.5 {
        // ln(sinh x / x) = sum_n 2^{2n} B_{2n} x^{2n} / (2n (2n)!)
        let mut value = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        let mut fact = 1.0; // (2n)!
        let mut pow2 = 1.0; // 2^{2n}
        for (i, b) in BERNOULLI_EVEN.iter().enumerate() {
            let n2 = 2 * (i + 1);
            fact *= ((n2 - 1) * n2) as f64;
            pow2 *= 4.0;
            let c = pow2 * b / (n2 as f64 * fact);
            value += c * x.powi(n2 as i32);
            d1 += c * n2 as f64 * x.powi(n2 as i32 - 1);
            d2 += c * (n2 * (n2 - 1)) as f64 * x.powi(n2 as i32 - 2);
        }
        (value, d1, d2)
    } else {
        let e = (-2.0 * ax).exp();
        let value = ax + (-e).ln_1p() - (2.0 * ax).ln();
        let coth = (1.0 + e) / (1.0 - e);
        let d1 = (coth - 1.0 / ax).copysign(x);
        // 1/sinh^2 = 4 e^{-2|x|} / (1 - e^{-2|x|})^2
        let d2 = 1.0 / (ax * ax) - 4.0 * e / ((1.0 - e) * (1.0 - e));
        (value, d1, d2)
    }
}

/// Kahan-compensated prefix sums `s[0] = 0, s[k] = x_1 + ... + x_k`.
pub fn prefix_sums(data: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(data.len() + 1);
    out.push(0.0);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in data {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        out.push(sum);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_max(|x| -(x - 1.3) * (x - 1.3) + 2.0, 0.0, 5.0, 1e-12);
        assert!((x - 1.3).abs() < 1e-7);
        assert_relative_eq!(v, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn newton_bisect_solves_cubic() {
        let root = newton_bisect(|x| (x * x * x - 2.0, 3.0 * x * x), 0.0, 2.0, 1.0, 1e-14).unwrap();
        assert_relative_eq!(root, 2f64.cbrt(), epsilon = 1e-14);
    }

    #[test]
    fn quadrature_of_gaussian_density() {
        let (v, _) = integrate(
            |x| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            -12.0,
            12.0,
            1e-13,
        )
        .unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn small_argument_helpers_match_direct_forms() {
        for &x in &[1e-6f64, 1e-3, 0.2, 0.49, 0.51, 2.0, -0.3] {
            let direct = x.exp() - 1.0 - x;
            assert_relative_eq!(exp_m1_m_x(x), direct, max_relative = 1e-9);
        }
        for &x in &[1e-3f64, 0.05, 0.2, 0.9, -0.5] {
            let direct: f64 = -(1.0 - x).ln() - x;
            assert_relative_eq!(neg_ln1m_m_x(x), direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn ln_sinhc_branches_agree() {
        // compare series and closed form on both sides of the switch
        for &x in &[0.499_999, 0.500_001, -0.499_999] {
            let (v, d1, d2) = ln_sinhc(x);
            let ax: f64 = x;
            let direct = (ax.sinh() / ax).ln();
            assert_relative_eq!(v, direct, max_relative = 1e-12);
            assert_relative_eq!(d1, 1.0 / ax.tanh() - 1.0 / ax, max_relative = 1e-10);
            assert_relative_eq!(d2, 1.0 / (ax * ax) - 1.0 / ax.sinh().powi(2), max_relative = 1e-8);
        }
        let (v, d1, d2) = ln_sinhc(1e-9);
        assert!(v > 0.0 && v < 1e-18);
        assert_relative_eq!(d1, 1e-9 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(d2, 1.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn normal_tail_reference_values() {
        assert_relative_eq!(normal_sf(0.0), 0.5, epsilon = 1e-16);
        assert_relative_eq!(normal_sf(10.0), 7.619_853_024_160_527e-24, max_relative = 1e-13);
    }

    #[test]
    fn prefix_sums_start_at_zero() {
        let s = prefix_sums(&[1.0, -2.0, 0.5]);
        assert_eq!(s, vec![0.0, 1.0, -1.0, -0.5]);
    }
}
