//! Gumbel limits of `M_n^2`, scale intensities, p-values, optimal lengths and
//! hitting-time limits for the superlogarithmic and logarithmic cases.
//!
//! The superlogarithmic centering `log n + ((q-6)/(2(q-2))) log log n`
//! coincides with `log(n log^{3/2-p} n)` because
//! `3/2 - q/(q-2) = (3(q-2) - 2q)/(2(q-2)) = (q-6)/(2(q-2))`.

use serde::Serialize;

use crate::cgf::{Case, CaseReport, LogConstants, SuperlogConstants};
use crate::error::{Error, Result};
use crate::numeric::integrate;

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Gumbel law of `M_n^2 / 2`: `P[M_n^2/2 <= location + scale * tau] -> exp(-mass e^{-tau})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GumbelLaw {
    pub location: f64,
    pub scale: f64,
    pub mass: f64,
    pub case_tag: &'static str,
    pub n: u64,
}

impl GumbelLaw {
    pub fn cdf_tau(&self, tau: f64) -> f64 {
        (-self.mass * (-tau).exp()).exp()
    }

    /// `tau` such that `M_n^2 = x`.
    pub fn tau_of_msq(&self, x: f64) -> f64 {
        (0.5 * x - self.location) / self.scale
    }

    pub fn cdf_msq(&self, x: f64) -> f64 {
        self.cdf_tau(self.tau_of_msq(x))
    }

    /// `P[M_n^2 > x]`, accurate far in the upper tail.
    pub fn sf_msq(&self, x: f64) -> f64 {
        -(-self.mass * (-self.tau_of_msq(x)).exp()).exp_m1()
    }

    /// Quantile of `M_n^2`.
    pub fn quantile_msq(&self, prob: f64) -> f64 {
        let tau = -(-(prob.ln()) / self.mass).ln();
        2.0 * (self.location + self.scale * tau)
    }
}

fn logn(n: u64) -> Result<f64> {
    if n < 3 {
        return Err(Error::Argument(format!("n must be at least 3, got {n}")));
    }
    Ok((n as f64).ln())
}

fn unsupported(case: &CaseReport) -> Error {
    Error::Capability(format!(
        "no quantitative limit law for the {} case",
        case.case.tag()
    ))
}

fn superlog_shift(c: &SuperlogConstants) -> f64 {
    let q = c.q as f64;
    (q - 6.0) / (2.0 * (q - 2.0))
}

/// Centering of `M_n^2 / 2`.
pub fn gumbel_location(case: &CaseReport, n: u64) -> Result<f64> {
    let l = logn(n)?;
    match &case.case {
        Case::Superlogarithmic(c) => Ok(l + superlog_shift(c) * l.ln()),
        Case::Logarithmic(c) => Ok(c.m_star * l),
        _ => Err(unsupported(case)),
    }
}

fn theta_of(c: &LogConstants) -> Result<f64> {
    c.theta_total.ok_or_else(|| {
        Error::Capability("Theta_* needs an estimate of H_*; attach one first".into())
    })
}

pub fn gumbel_law(case: &CaseReport, n: u64) -> Result<GumbelLaw> {
    let location = gumbel_location(case, n)?;
    let (scale, mass) = match &case.case {
        Case::Superlogarithmic(c) => (1.0, c.lambda_total),
        Case::Logarithmic(c) => (c.m_star, theta_of(c)?),
        _ => unreachable!(),
    };
    Ok(GumbelLaw {
        location,
        scale,
        mass,
        case_tag: case.case.tag(),
        n,
    })
}

pub fn limit_cdf_msq(x: f64, case: &CaseReport, n: u64) -> Result<f64> {
    Ok(gumbel_law(case, n)?.cdf_msq(x))
}

/// How an observed maximum is compared with the limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueScale {
    /// `M_n^2 - A_n => G`
    Squared,
    /// `2 sqrt(A_n) (M_n - sqrt(A_n)) => G`
    Linear,
}

/// Asymptotic `P[M_n > m]`.
pub fn pvalue_m(m: f64, case: &CaseReport, n: u64, scale: PValueScale) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::Argument(format!("m must be positive, got {m}")));
    }
    let law = gumbel_law(case, n)?;
    Ok(match scale {
        PValueScale::Squared => law.sf_msq(m * m),
        PValueScale::Linear => {
            let big_a = 2.0 * law.location;
            law.sf_msq(big_a + 2.0 * big_a.sqrt() * (m - big_a.sqrt()))
        }
    })
}

/// Limit contribution of lengths near scale `a` (`a log^p n` or
/// `d_* log n + a sqrt(log n)`).
pub fn intensity(case: &CaseReport, a: f64) -> Result<f64> {
    match &case.case {
        Case::Superlogarithmic(c) => {
            if !(a > 0.0) {
                return Err(Error::Domain {
                    t: a,
                    side: "left",
                    bound: 0.0,
                });
            }
            Ok(superlog_intensity(c, a))
        }
        Case::Logarithmic(c) => {
            let h = c
                .h_star
                .ok_or_else(|| Error::Capability("intensity needs H_*; attach one first".into()))?;
            Ok(log_intensity(c, h, a))
        }
        _ => Err(unsupported(case)),
    }
}

fn superlog_intensity(c: &SuperlogConstants, a: f64) -> f64 {
    let q = c.q as f64;
    let expo = c.kappa * 2f64.powf(q / 2.0) * a.powf(-(q - 2.0) / 2.0);
    (-expo).exp() / (2.0 * SQRT_PI * a * a)
}

fn log_intensity(c: &LogConstants, h: f64, a: f64) -> f64 {
    c.m_star.sqrt() * h * h / (2.0 * SQRT_PI * c.sigma_star) * (-0.5 * c.beta_sq() * a * a).exp()
}

const INTENSITY_TOL: f64 = 1e-10;
const LOG_SPAN: f64 = 60.0;

/// Integral of `intensity` over `[a1, a2]`; infinite limits allowed.
pub fn intensity_integral(case: &CaseReport, a1: f64, a2: f64) -> Result<f64> {
    if a1 == a2 {
        return Ok(0.0);
    }
    if !(a1 < a2) {
        return Err(Error::Argument(format!("need A1 < A2, got {a1} and {a2}")));
    }
    match &case.case {
        Case::Superlogarithmic(c) => {
            if a1 < 0.0 {
                return Err(Error::Domain {
                    t: a1,
                    side: "left",
                    bound: 0.0,
                });
            }
            // a = e^u; beyond |u| = 60 the integrand is below 1e-26
            let u1 = if a1 > 0.0 { a1.ln().max(-LOG_SPAN) } else { -LOG_SPAN };
            let u2 = if a2.is_finite() { a2.ln().min(LOG_SPAN) } else { LOG_SPAN };
            let f = |u: f64| {
                let a = u.exp();
                superlog_intensity(c, a) * a
            };
            chunked(f, u1, u2, 2.0)
        }
        Case::Logarithmic(c) => {
            let h = c
                .h_star
                .ok_or_else(|| Error::Capability("intensity needs H_*; attach one first".into()))?;
            // a = tan u
            let f = |u: f64| {
                let t = u.tan();
                let v = log_intensity(c, h, t) * (1.0 + t * t);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            };
            chunked(f, a1.atan(), a2.atan(), std::f64::consts::PI / 64.0)
        }
        _ => Err(unsupported(case)),
    }
}

// Integrate piecewise so that narrow peaks are not missed by the first rule.
fn chunked<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, width: f64) -> Result<f64> {
    let pieces = ((hi - lo) / width).ceil().max(1.0) as usize;
    let step = (hi - lo) / pieces as f64;
    let tol = INTENSITY_TOL / pieces as f64;
    let mut total = 0.0;
    for i in 0..pieces {
        let a = lo + step * i as f64;
        let b = if i + 1 == pieces { hi } else { a + step };
        total += integrate(&f, a, b, tol)?.0;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum OptimalLength {
    /// Lengths `a log^p n`, most frequent near `a = a_peak`.
    PowerOfLog {
        p: f64,
        a_peak: f64,
        center: f64,
    },
    /// Lengths `d_* log n + a sqrt(log n)`, Gaussian in `a` with sd `1/beta_*`.
    LinearLog {
        d_star: f64,
        center: f64,
        spread: f64,
    },
    Bounded {
        note: String,
    },
    GaussianLog {
        note: String,
    },
    Unknown {
        note: String,
    },
}

pub fn optimal_length(case: &CaseReport, n: u64) -> Result<OptimalLength> {
    let l = logn(n)?;
    Ok(match &case.case {
        Case::Superlogarithmic(c) => OptimalLength::PowerOfLog {
            p: c.p_exponent,
            a_peak: c.a_star,
            center: c.a_star * l.powf(c.p_exponent),
        },
        Case::Logarithmic(c) => OptimalLength::LinearLog {
            d_star: c.d_star,
            center: c.d_star * l,
            spread: l.sqrt() / c.beta_star,
        },
        Case::Sublogarithmic { .. } => OptimalLength::Bounded {
            note: "the maximum is attained on intervals of bounded length, typically 1".into(),
        },
        Case::Gaussian => OptimalLength::GaussianLog {
            note: "lengths of order log n; the constant is not computed".into(),
        },
        Case::Indeterminate { diagnostics } => OptimalLength::Unknown {
            note: diagnostics.clone(),
        },
    })
}

/// Limit of the first time `T(u)` at which the scan over `[1, T]` exceeds `u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingLimit {
    /// `P[c(u) T(u) > y] ~ exp(-mass y)`
    pub survival: f64,
    /// `c(u)`
    pub normalization: f64,
    pub log_normalization: f64,
    pub mass: f64,
}

pub fn hitting_cdf(y: f64, u: f64, case: &CaseReport) -> Result<HittingLimit> {
    if !(y > 0.0) {
        return Err(Error::Argument(format!("y must be positive, got {y}")));
    }
    if !(u > 0.0) {
        return Err(Error::Argument(format!("u must be positive, got {u}")));
    }
    let (log_normalization, mass) = match &case.case {
        Case::Superlogarithmic(c) => {
            let alpha = superlog_shift(c);
            (
                -alpha * std::f64::consts::LN_2 + 2.0 * alpha * u.ln() - 0.5 * u * u,
                c.lambda_total,
            )
        }
        Case::Logarithmic(c) => (-u * u / (2.0 * c.m_star), theta_of(c)?),
        _ => return Err(unsupported(case)),
    };
    Ok(HittingLimit {
        survival: (-mass * y).exp(),
        normalization: log_normalization.exp(),
        log_normalization,
        mass,
    })
}

/// Limit `P[T(u) > t]` in original time units.
pub fn hitting_survival(t: f64, u: f64, case: &CaseReport) -> Result<f64> {
    let h = hitting_cdf(1.0, u, case)?;
    Ok((-h.mass * (h.log_normalization + t.ln()).exp()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgf::{classify, PsiGrid};
    use crate::dist::DistributionSpec;
    use crate::numeric::golden_max;
    use approx::assert_relative_eq;

    fn superlog(q: usize, kappa: f64) -> CaseReport {
        CaseReport {
            case: Case::Superlogarithmic(SuperlogConstants::new(q, kappa)),
            warnings: vec![],
        }
    }

    fn bern_log(p: f64) -> CaseReport {
        let d = DistributionSpec::from_json(&format!(r#"{{"family":"bernoulli","params":{{"p":{p}}}}}"#)).unwrap();
        classify(&d, &PsiGrid::default()).unwrap()
    }

    fn with_h(case: &CaseReport, h: f64) -> CaseReport {
        let c = case.log_constants().unwrap().with_hstar(h);
        CaseReport {
            case: Case::Logarithmic(c),
            warnings: vec![],
        }
    }

    #[test]
    fn locations() {
        let q4 = superlog(4, 1.0 / 12.0);
        let l = 1e4f64.ln();
        assert_relative_eq!(gumbel_location(&q4, 10_000).unwrap(), l - 0.5 * l.ln(), epsilon = 1e-12);
        assert!((gumbel_location(&q4, 10_000).unwrap() - 8.100177).abs() < 1e-6);
        let q6 = superlog(6, 0.1);
        assert_eq!(gumbel_location(&q6, 12345).unwrap(), 12345f64.ln());
        let mut lc = bern_log(0.3);
        if let Case::Logarithmic(c) = &mut lc.case {
            c.m_star = 1.2;
        }
        assert_relative_eq!(gumbel_location(&lc, 22026).unwrap(), 1.2 * 22026f64.ln());
        let g = CaseReport {
            case: Case::Gaussian,
            warnings: vec![],
        };
        assert_eq!(gumbel_location(&g, 100).unwrap_err().code(), "capability");
        assert_eq!(gumbel_location(&q4, 2).unwrap_err().code(), "argument");
    }

    #[test]
    fn centering_forms_agree() {
        for q in 3..=12 {
            let c = SuperlogConstants::new(q, 0.1);
            let three_halves_minus_p = 1.5 - c.p_exponent;
            assert!((three_halves_minus_p - superlog_shift(&c)).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_bernoulli_cdf() {
        let c = superlog(4, 1.0 / 12.0);
        let a = gumbel_location(&c, 10_000).unwrap();
        let lam = 3.0 / (2.0 * SQRT_PI);
        assert_relative_eq!(c.superlog_constants().unwrap().lambda_total, lam, max_relative = 1e-14);
        assert_relative_eq!(limit_cdf_msq(2.0 * a, &c, 10_000).unwrap(), (-lam).exp(), max_relative = 1e-14);
        let v = limit_cdf_msq(2.0 * (a + 1.0), &c, 10_000).unwrap();
        assert!((v - 0.732472).abs() < 1e-6, "{v}");
    }

    #[test]
    fn pvalues() {
        let c = superlog(4, 1.0 / 12.0);
        let n = 10_000;
        let a = gumbel_location(&c, n).unwrap();
        let lam = c.superlog_constants().unwrap().lambda_total;
        for scale in [PValueScale::Squared, PValueScale::Linear] {
            let p = pvalue_m((2.0 * a).sqrt(), &c, n, scale).unwrap();
            assert_relative_eq!(p, -(-lam).exp_m1(), max_relative = 1e-12);
            assert!(pvalue_m(1e-6, &c, n, scale).unwrap() > 1.0 - 1e-12);
        }
        let m = 6.0;
        let p = pvalue_m(m, &c, n, PValueScale::Squared).unwrap();
        let lin = lam * (-(0.5 * m * m - a)).exp();
        assert!(p < 0.01 && (p / lin - 1.0).abs() < 0.01);
        assert_eq!(pvalue_m(0.0, &c, n, PValueScale::Squared).unwrap_err().code(), "argument");
    }

    #[test]
    fn missing_hstar_fails_loudly() {
        let c = bern_log(0.3);
        assert_eq!(limit_cdf_msq(10.0, &c, 1000).unwrap_err().code(), "capability");
        assert_eq!(intensity(&c, 0.0).unwrap_err().code(), "capability");
        let h = with_h(&c, 8.0 / 35.0);
        assert!(limit_cdf_msq(10.0, &h, 1000).is_ok());
    }

    #[test]
    fn superlog_intensity_values() {
        let c = superlog(4, 1.0 / 12.0);
        let at = intensity(&c, 1.0 / 6.0).unwrap();
        assert_relative_eq!(at, 18.0 / SQRT_PI * (-2f64).exp(), max_relative = 1e-13);
        assert!((at - 1.374386).abs() < 1e-6);
        assert!(intensity(&c, 1e-4).unwrap() < 1e-100);
        assert_eq!(intensity(&c, 0.0).unwrap_err().code(), "domain");
    }

    #[test]
    fn superlog_integral_and_peak() {
        for q in [3, 4, 5, 8] {
            for kappa in [1.0 / 12.0, 1.0 / 20.0, 0.1924] {
                let c = superlog(q, kappa);
                let k = c.superlog_constants().unwrap();
                let total = intensity_integral(&c, 0.0, f64::INFINITY).unwrap();
                assert!((total - k.lambda_total).abs() < 1e-8, "q={q} kappa={kappa}: {total} vs {}", k.lambda_total);
                let (amax, _) = golden_max(|a| superlog_intensity(k, a), k.a_star / 10.0, k.a_star * 10.0, 1e-13);
                assert!((amax - k.a_star).abs() < 1e-8 * k.a_star.max(1.0), "{amax} vs {}", k.a_star);
                let split = intensity_integral(&c, 0.0, k.a_star).unwrap()
                    + intensity_integral(&c, k.a_star, f64::INFINITY).unwrap();
                assert!((split - total).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn log_integral_is_theta() {
        let c = with_h(&bern_log(0.3), 8.0 / 35.0);
        let lc = c.log_constants().unwrap();
        let total = intensity_integral(&c, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!((total - lc.theta_total.unwrap()).abs() < 1e-10, "{total}");
        let peak = intensity(&c, 0.0).unwrap();
        assert_relative_eq!(
            peak,
            lc.m_star.sqrt() * lc.h_star.unwrap().powi(2) / (2.0 * SQRT_PI * lc.sigma_star),
            max_relative = 1e-14
        );
        assert_eq!(intensity_integral(&c, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn cdf_is_monotone_onto_unit_interval() {
        let c = superlog(3, 0.1);
        for n in [3u64, 100, 1_000_000] {
            let law = gumbel_law(&c, n).unwrap();
            let mut prev = 0.0;
            for i in 0..10_000 {
                let x = -200.0 + 0.05 * i as f64;
                let v = law.cdf_msq(x);
                assert!(v >= prev && (0.0..=1.0).contains(&v));
                prev = v;
            }
            assert!(law.cdf_msq(-1e3) < 1e-100);
            assert!(law.cdf_msq(1e3) > 1.0 - 1e-12);
            let q = law.quantile_msq(0.95);
            assert_relative_eq!(law.cdf_msq(q), 0.95, max_relative = 1e-12);
        }
    }

    #[test]
    fn optimal_lengths() {
        match optimal_length(&superlog(3, 0.1), 1000).unwrap() {
            OptimalLength::PowerOfLog { p, .. } => assert_eq!(p, 3.0),
            other => panic!("{other:?}"),
        }
        match optimal_length(&superlog(4, 0.07), 1000).unwrap() {
            OptimalLength::PowerOfLog { p, a_peak, .. } => {
                assert_eq!(p, 2.0);
                assert_relative_eq!(a_peak, 0.14, max_relative = 1e-14);
            }
            other => panic!("{other:?}"),
        }
        let c = bern_log(0.3);
        match optimal_length(&c, 1000).unwrap() {
            OptimalLength::LinearLog { center, d_star, .. } => {
                assert_relative_eq!(center, d_star * 1000f64.ln());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hitting_limits() {
        let c = superlog(4, 1.0 / 12.0);
        let lam = c.superlog_constants().unwrap().lambda_total;
        let h = hitting_cdf(1.0 / lam, 3.0, &c).unwrap();
        assert_relative_eq!(h.survival, (-1f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(h.normalization, 2f64.sqrt() / 3.0 * (-4.5f64).exp(), max_relative = 1e-13);
        assert!(hitting_cdf(1e-12, 3.0, &c).unwrap().survival > 1.0 - 1e-10);
        let s = hitting_survival(1.0 / h.normalization, 3.0, &c).unwrap();
        assert_relative_eq!(s, (-lam).exp(), max_relative = 1e-12);
    }
}
