//! The psi profile `2 phi(t) / t^2`, the rate function `I`, the Cramér
//! series, and the four-way classification built on them.

use serde::{Serialize, Serializer};

use crate::dist::{DistributionSpec, MAX_CUMULANT_ORDER};
use crate::error::{Error, Result};
use crate::numeric::{golden_max, newton_bisect};

/// Below this `s` the rate is evaluated from its Taylor series.
const TAYLOR_S: f64 = 1e-4;

/// `I(s)` together with its maximizer and first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEval {
    pub s: f64,
    pub value: f64,
    pub maximizer: f64,
    pub d1: f64,
    pub d2: f64,
}

/// `psi(t) = 2 phi(t) / t^2` for `t > 0`.
pub fn psi(dist: &DistributionSpec, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Argument(format!("psi needs t > 0, got {t}")));
    }
    if t < 1e-8 {
        let k = dist.cumulants();
        dist.cgf(t)?;
        return Ok(1.0 + k[3] * t / 3.0 + k[4] * t * t / 12.0);
    }
    Ok(2.0 * dist.cgf(t)? / (t * t))
}

/// Taylor coefficients `b_0..b_8` of `I(s)` at 0, and `c_0..c_7` of the
/// inverse `t(s)` of `phi'`, from the cumulants.
pub fn rate_taylor(dist: &DistributionSpec) -> (Vec<f64>, Vec<f64>) {
    let kappa = dist.cumulants();
    let n = MAX_CUMULANT_ORDER - 1;
    // phi'(t) = sum_k d[k] t^k with d[k] = kappa_{k+1} / k!
    let mut d = vec![0.0; n + 1];
    let mut fact = 1.0;
    for k in 1..=n {
        fact *= k as f64;
        d[k] = kappa[k + 1] / fact;
    }
    d[1] = 1.0;
    // revert the series: t(s) = sum_k c[k] s^k
    let mut c = vec![0.0; n + 1];
    c[1] = 1.0;
    for m in 2..=n {
        let mut coef = 0.0;
        let mut power = c.clone(); // t(s)^1, truncated
        for dk in d.iter().skip(2) {
            power = poly_mul(&power, &c, n);
            coef += dk * power[m];
        }
        c[m] = -coef;
    }
    let mut b = vec![0.0; n + 2];
    for k in 1..=n {
        b[k + 1] = c[k] / (k + 1) as f64;
    }
    (b, c)
}

fn poly_mul(a: &[f64], b: &[f64], deg: usize) -> Vec<f64> {
    let mut out = vec![0.0; deg + 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if i + j > deg {
                break;
            }
            out[i + j] += x * y;
        }
    }
    out
}

fn horner(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Legendre-Fenchel rate `I(s) = sup_{t >= 0} (s t - phi(t))` for `s >= 0`.
pub fn rate(dist: &DistributionSpec, s: f64) -> Result<RateEval> {
    if !(s >= 0.0) {
        return Err(Error::Argument(format!("rate needs s >= 0, got {s}")));
    }
    let s_inf = dist.support_right();
    if s >= s_inf {
        return Err(Error::RateInfinite { s, s_inf });
    }
    if s == 0.0 {
        let (_, _, d2) = dist.cgf_d(0.0)?;
        return Ok(RateEval {
            s,
            value: 0.0,
            maximizer: 0.0,
            d1: 0.0,
            d2: 1.0 / d2,
        });
    }
    if s < TAYLOR_S {
        let (b, c) = rate_taylor(dist);
        let t = horner(&c, s);
        let (_, _, d2) = dist.cgf_d(t)?;
        return Ok(RateEval {
            s,
            value: horner(&b, s),
            maximizer: t,
            d1: t,
            d2: 1.0 / d2,
        });
    }
    let t = solve_dphi(dist, s)?;
    let (phi, _, d2) = dist.cgf_d(t)?;
    Ok(RateEval {
        s,
        value: s * t - phi,
        maximizer: t,
        d1: t,
        d2: 1.0 / d2,
    })
}

/// The `t >= 0` with `phi'(t) = s`.
fn solve_dphi(dist: &DistributionSpec, s: f64) -> Result<f64> {
    let t_inf = dist.domain_right();
    let mut hi = s.max(1e-3);
    let mut steps = 0;
    loop {
        if hi >= t_inf {
            hi = t_inf;
            break;
        }
        let (_, d1, _) = dist.cgf_d(hi)?;
        if d1 >= s {
            break;
        }
        hi *= 2.0;
        steps += 1;
        if steps > 2000 || !hi.is_finite() {
            return Err(Error::Numeric {
                message: format!("could not bracket phi'(t) = {s}"),
                achieved: f64::INFINITY,
            });
        }
    }
    let law = dist.law();
    newton_bisect(
        |t| {
            if t >= t_inf {
                return (f64::INFINITY, f64::INFINITY);
            }
            let (_, d1, d2) = law.cgf_d(t);
            (d1 - s, d2)
        },
        0.0,
        hi,
        s,
        1e-12 * s.max(1.0) * 1e-3,
    )
}

/// Cramér series `lambda(y) = (y^2/2 - I(y)) / y^3`.
pub fn cramer_lambda(dist: &DistributionSpec, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::Argument(format!("cramer series needs y > 0, got {y}")));
    }
    if y < TAYLOR_S {
        let s_inf = dist.support_right();
        if y >= s_inf {
            return Err(Error::RateInfinite { s: y, s_inf });
        }
        let (b, _) = rate_taylor(dist);
        return Ok(-horner(&b[3..], y));
    }
    let r = rate(dist, y)?;
    Ok((0.5 * y * y - r.value) / (y * y * y))
}

/// Leading non-quadratic term `phi(t) = t^2/2 - kappa t^q + o(t^q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QKappa {
    pub q: usize,
    pub kappa: f64,
    /// `kappa` re-estimated from `(I(s) - s^2/2) / s^q` as `s -> 0`.
    pub kappa_rate_fit: f64,
}

pub fn extract_qkappa(dist: &DistributionSpec) -> Result<QKappa> {
    let k = dist.cumulants();
    let Some(q) = (3..=MAX_CUMULANT_ORDER).find(|&j| k[j].abs() > 1e-10) else {
        return Err(Error::Capability(
            "cumulants 3..8 vanish: gaussian or undetectable".into(),
        ));
    };
    let fact: f64 = (1..=q).map(|j| j as f64).product();
    let kappa = -k[q] / fact;
    let kappa_rate_fit = fit_rate_coefficient(dist, q)?;
    Ok(QKappa {
        q,
        kappa,
        kappa_rate_fit,
    })
}

// Neville extrapolation to s = 0 of (I(s) - s^2/2) / s^q on s = 2^-4..2^-10.
fn fit_rate_coefficient(dist: &DistributionSpec, q: usize) -> Result<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for e in 4..=10 {
        let s = 0.5f64.powi(e);
        if s >= dist.support_right() {
            continue;
        }
        let r = rate(dist, s)?;
        xs.push(s);
        ys.push((r.value - 0.5 * s * s) / s.powi(q as i32));
    }
    let n = ys.len();
    let mut p = ys.clone();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
        }
    }
    Ok(p[0])
}

/// Configuration of the psi grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiGrid {
    pub points: usize,
    pub t_min: f64,
    pub t_cap: f64,
    /// Relative margin by which `m_*` must exceed 1.
    pub tol_ratio: f64,
}

impl Default for PsiGrid {
    fn default() -> Self {
        PsiGrid {
            points: 4096,
            t_min: 1e-4,
            t_cap: 50.0,
            tol_ratio: 1e-6,
        }
    }
}

/// Tabulated psi with its interior local maxima refined.
#[derive(Debug, Clone)]
pub struct PsiProfile {
    pub ts: Vec<f64>,
    pub psis: Vec<f64>,
    /// Refined `(t, psi(t))` at each interior local maximum, by decreasing value.
    pub local_maxima: Vec<(f64, f64)>,
}

impl PsiProfile {
    pub fn new(dist: &DistributionSpec, grid: &PsiGrid) -> Result<PsiProfile> {
        let t_inf = dist.domain_right();
        let t_max = if t_inf.is_finite() {
            (t_inf * (1.0 - 1e-3)).min(grid.t_cap)
        } else {
            grid.t_cap
        };
        let n = grid.points.max(8);
        let ratio = (t_max / grid.t_min).ln() / (n - 1) as f64;
        let ts: Vec<f64> = (0..n).map(|i| grid.t_min * (ratio * i as f64).exp()).collect();
        let psis = ts.iter().map(|&t| psi(dist, t)).collect::<Result<Vec<f64>>>()?;
        let mut local_maxima = Vec::new();
        for i in 1..n - 1 {
            if psis[i] > psis[i - 1] && psis[i] >= psis[i + 1] {
                local_maxima.push(refine_max(dist, ts[i - 1], ts[i + 1])?);
            }
        }
        local_maxima.sort_by(|a, b| b.1.total_cmp(&a.1));
        Ok(PsiProfile {
            ts,
            psis,
            local_maxima,
        })
    }

    pub fn max(&self) -> f64 {
        self.psis.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
    }

    pub fn last(&self) -> (f64, f64) {
        (*self.ts.last().unwrap(), *self.psis.last().unwrap())
    }
}

// Golden section on psi, then a root polish of t phi'(t) - 2 phi(t).
fn refine_max(dist: &DistributionSpec, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let law = dist.law();
    let psi_at = |t: f64| {
        let (v, _, _) = law.cgf_d(t);
        2.0 * v / (t * t)
    };
    let (t0, _) = golden_max(psi_at, lo, hi, 1e-13);
    // psi' has the sign of g(t) = t phi' - 2 phi, which falls through zero
    let neg_g = |t: f64| {
        let (v, d1, d2) = law.cgf_d(t);
        (2.0 * v - t * d1, d1 - t * d2)
    };
    let t = if neg_g(lo).0 < 0.0 && neg_g(hi).0 > 0.0 {
        newton_bisect(neg_g, lo, hi, t0, 1e-15).unwrap_or(t0)
    } else {
        t0
    };
    Ok((t, psi_at(t)))
}

/// Global interior maximizer `(t_*, m_*)` of psi, when `m_* > 1 + tol_ratio`.
pub fn find_tstar(dist: &DistributionSpec, grid: &PsiGrid) -> Result<Option<(f64, f64)>> {
    let profile = PsiProfile::new(dist, grid)?;
    Ok(profile
        .local_maxima
        .first()
        .copied()
        .filter(|&(_, m)| m > 1.0 + grid.tol_ratio && m >= profile.max() * (1.0 - 1e-12)))
}

/// Constants of the logarithmic case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogConstants {
    pub t_star: f64,
    pub m_star: f64,
    pub s_star: f64,
    pub sigma_star: f64,
    pub beta_star: f64,
    pub d_star: f64,
    pub h_star: Option<f64>,
    pub theta_total: Option<f64>,
}

impl LogConstants {
    pub fn beta_sq(&self) -> f64 {
        self.beta_star * self.beta_star
    }

    /// Attach a Pickands constant and derive `Theta_*` from it.
    pub fn with_hstar(mut self, h: f64) -> LogConstants {
        self.h_star = Some(h);
        self.theta_total = Some(theta_total(&self, h));
        self
    }
}

/// `Theta_* = sqrt(m_*) H_*^2 / (sqrt 2 beta_* sigma_*)`.
pub fn theta_total(c: &LogConstants, h: f64) -> f64 {
    c.m_star.sqrt() * h * h / (std::f64::consts::SQRT_2 * c.beta_star * c.sigma_star)
}

/// Residual of the stationarity condition `t phi'(t) = 2 phi(t)`.
pub fn stationarity_residual(dist: &DistributionSpec, t: f64) -> Result<f64> {
    let (v, d1, _) = dist.cgf_d(t)?;
    Ok((t * d1 - 2.0 * v).abs() / v.abs().max(1.0))
}

pub fn log_constants(dist: &DistributionSpec, t_star: f64, m_star: f64) -> Result<LogConstants> {
    let resid = stationarity_residual(dist, t_star)?;
    if resid > 1e-8 {
        return Err(Error::Consistency(format!(
            "t = {t_star} is not a stationary point of psi (residual {resid:e})"
        )));
    }
    let (phi, s_star, sigma_sq) = dist.cgf_d(t_star)?;
    let beta_sq = s_star.powi(4) / (8.0 * m_star) * (1.0 / sigma_sq - 1.0 / m_star);
    if !(beta_sq > 0.0) {
        return Err(Error::Consistency(format!("beta_*^2 = {beta_sq:e} is not positive")));
    }
    Ok(LogConstants {
        t_star,
        m_star,
        s_star,
        sigma_star: sigma_sq.sqrt(),
        beta_star: beta_sq.sqrt(),
        d_star: 1.0 / phi,
        h_star: None,
        theta_total: None,
    })
}

/// Constants of the superlogarithmic case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuperlogConstants {
    pub q: usize,
    pub kappa: f64,
    pub p_exponent: f64,
    pub a_star: f64,
    pub lambda_total: f64,
}

impl SuperlogConstants {
    pub fn new(q: usize, kappa: f64) -> SuperlogConstants {
        let qf = q as f64;
        let e = 2.0 / (qf - 2.0);
        SuperlogConstants {
            q,
            kappa,
            p_exponent: qf / (qf - 2.0),
            a_star: 2f64.powf((qf - 4.0) / (qf - 2.0)) * kappa.powf(e) * (qf - 2.0).powf(e),
            // integral of the scale intensity over (0, infinity)
            lambda_total: statrs::function::gamma::gamma(qf / (qf - 2.0))
                * (kappa * 2f64.powf(qf / 2.0)).powf(-e)
                / (2.0 * std::f64::consts::PI.sqrt()),
        }
    }
}

/// The regime a distribution falls into, with its constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum Case {
    Gaussian,
    Superlogarithmic(SuperlogConstants),
    Logarithmic(LogConstants),
    Sublogarithmic {
        alpha: Option<f64>,
        #[serde(rename = "D")]
        d: Option<f64>,
    },
    Indeterminate {
        diagnostics: String,
    },
}

impl Case {
    pub fn tag(&self) -> &'static str {
        match self {
            Case::Gaussian => "gaussian",
            Case::Superlogarithmic(_) => "superlogarithmic",
            Case::Logarithmic(_) => "logarithmic",
            Case::Sublogarithmic { .. } => "sublogarithmic",
            Case::Indeterminate { .. } => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    #[serde(flatten)]
    pub case: Case,
    pub warnings: Vec<String>,
}

impl CaseReport {
    pub fn log_constants(&self) -> Option<&LogConstants> {
        match &self.case {
            Case::Logarithmic(c) => Some(c),
            _ => None,
        }
    }

    pub fn superlog_constants(&self) -> Option<&SuperlogConstants> {
        match &self.case {
            Case::Superlogarithmic(c) => Some(c),
            _ => None,
        }
    }
}

/// Decide which of the four regimes `dist` belongs to.
pub fn classify(dist: &DistributionSpec, grid: &PsiGrid) -> Result<CaseReport> {
    let mut warnings = Vec::new();
    let k = dist.cumulants();
    let profile = PsiProfile::new(dist, grid)?;
    let higher_vanish = (3..=MAX_CUMULANT_ORDER).all(|j| k[j].abs() <= 1e-10);
    let flat = profile.psis.iter().all(|p| (p - 1.0).abs() <= 1e-9);
    if higher_vanish && flat {
        return Ok(CaseReport {
            case: Case::Gaussian,
            warnings,
        });
    }
    let sup = profile.max();
    let (t_last, psi_last) = profile.last();

    // psi still climbing at the right end of the grid
    let n = profile.psis.len();
    let rising_at_end = profile.psis[n - 1] > profile.psis[n - 2];
    if rising_at_end && psi_last >= sup && psi_last > 1.0 + grid.tol_ratio {
        let (v, d1, _) = dist.cgf_d(t_last)?;
        let growth = t_last * d1 / v;
        if dist.domain_right().is_finite() || growth > 2.05 {
            let tail = dist.tail_exponent();
            if tail.is_none() {
                warnings.push("tail constants (alpha, D) not known for this family".into());
            }
            return Ok(CaseReport {
                case: Case::Sublogarithmic {
                    alpha: tail.map(|x| x.0),
                    d: tail.map(|x| x.1),
                },
                warnings,
            });
        }
        return Ok(CaseReport {
            case: Case::Indeterminate {
                diagnostics: format!(
                    "psi rises to {psi_last} at the grid end t = {t_last} without superquadratic growth (t phi'/phi = {growth})"
                ),
            },
            warnings,
        });
    }

    let interior: Vec<(f64, f64)> = profile
        .local_maxima
        .iter()
        .copied()
        .filter(|&(_, m)| m > 1.0 + grid.tol_ratio)
        .collect();
    if let Some(&(t_star, m_star)) = interior.first() {
        let ties: Vec<(f64, f64)> = interior
            .iter()
            .copied()
            .filter(|&(_, m)| m >= m_star * (1.0 - grid.tol_ratio))
            .collect();
        if ties.len() > 1 {
            return Ok(CaseReport {
                case: Case::Indeterminate {
                    diagnostics: format!("psi has {} maxima of equal height: {ties:?}", ties.len()),
                },
                warnings,
            });
        }
        for &(t, m) in &interior[1..] {
            warnings.push(format!("secondary local maximum of psi at t = {t} (value {m})"));
        }
        let c = log_constants(dist, t_star, m_star)?;
        return Ok(CaseReport {
            case: Case::Logarithmic(c),
            warnings,
        });
    }

    if sup <= 1.0 + 1e-12 && psi_last < 1.0 - 1e-3 {
        return match extract_qkappa(dist) {
            Ok(qk) if qk.kappa > 0.0 => {
                let rel = ((qk.kappa - qk.kappa_rate_fit) / qk.kappa).abs();
                if rel > 1e-4 {
                    warnings.push(format!(
                        "rate-function fit gives kappa = {} (relative gap {rel:e})",
                        qk.kappa_rate_fit
                    ));
                }
                Ok(CaseReport {
                    case: Case::Superlogarithmic(SuperlogConstants::new(qk.q, qk.kappa)),
                    warnings,
                })
            }
            Ok(qk) => Ok(CaseReport {
                case: Case::Indeterminate {
                    diagnostics: format!("psi < 1 on the grid but kappa = {} is not positive", qk.kappa),
                },
                warnings,
            }),
            Err(_) => Ok(CaseReport {
                case: Case::Indeterminate {
                    diagnostics: "psi < 1 on the grid but cumulants 3..8 vanish".into(),
                },
                warnings,
            }),
        };
    }

    Ok(CaseReport {
        case: Case::Indeterminate {
            diagnostics: format!(
                "no regime matched: sup psi = {sup}, psi at grid end t = {t_last} is {psi_last}"
            ),
        },
        warnings,
    })
}

fn sci17<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    let text = format!("{x:.16e}");
    let raw = serde_json::value::RawValue::from_string(text).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

/// Residuals of the Legendre duality identities at `(t_*, s_*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityResiduals {
    /// `|s_* - phi'(t_*)|`
    #[serde(serialize_with = "sci17")]
    pub slope: f64,
    /// `|t_* - I'(s_*)|`
    #[serde(serialize_with = "sci17")]
    pub inverse_slope: f64,
    /// `|I''(s_*) phi''(t_*) - 1|`
    #[serde(serialize_with = "sci17")]
    pub curvature: f64,
    /// `|phi(t_*) - I(s_*)|`
    #[serde(serialize_with = "sci17")]
    pub value: f64,
    /// `|I(s_*) - s_* t_* / 2|`
    #[serde(serialize_with = "sci17")]
    pub half_product: f64,
}

impl DualityResiduals {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.slope,
            self.inverse_slope,
            self.curvature,
            self.value,
            self.half_product,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityReport {
    pub residuals: DualityResiduals,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn duality_report(dist: &DistributionSpec, case: &CaseReport) -> Result<DualityReport> {
    let Some(c) = case.log_constants() else {
        return Err(Error::Capability(format!(
            "duality identities apply to the logarithmic case, not {}",
            case.case.tag()
        )));
    };
    let (phi, d1, d2) = dist.cgf_d(c.t_star)?;
    let r = rate(dist, c.s_star)?;
    let residuals = DualityResiduals {
        slope: (c.s_star - d1).abs(),
        inverse_slope: (c.t_star - r.d1).abs(),
        curvature: (r.d2 * d2 - 1.0).abs(),
        value: (phi - r.value).abs(),
        half_product: (r.value - 0.5 * c.s_star * c.t_star).abs(),
    };
    let tolerance = 1e-6;
    Ok(DualityReport {
        residuals,
        tolerance,
        pass: residuals.as_array().iter().all(|x| *x < tolerance),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dist(json: &str) -> DistributionSpec {
        DistributionSpec::from_json(json).unwrap()
    }

    fn bern(p: f64) -> DistributionSpec {
        dist(&format!(r#"{{"family":"bernoulli","params":{{"p":{p}}}}}"#))
    }

    #[test]
    fn psi_reference_values() {
        let g = dist(r#"{"family":"gaussian"}"#);
        assert_eq!(psi(&g, 2.7).unwrap(), 1.0);
        let s = dist(r#"{"family":"bernoulli_symmetric"}"#);
        assert_relative_eq!(psi(&s, 1.0).unwrap(), 2.0 * 1f64.cosh().ln(), max_relative = 1e-15);
        assert!((psi(&s, 1e-10).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rate_reference_values() {
        let g = dist(r#"{"family":"gaussian"}"#);
        let r = rate(&g, 2.0).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-13);
        assert_relative_eq!(r.maximizer, 2.0, max_relative = 1e-13);
        let s = dist(r#"{"family":"bernoulli_symmetric"}"#);
        let expect = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
        assert_relative_eq!(rate(&s, 0.5).unwrap().value, expect, max_relative = 1e-12);
        let b = bern(0.3);
        assert!(matches!(rate(&b, b.support_right()), Err(Error::RateInfinite { .. })));
    }

    #[test]
    fn taylor_branch_is_continuous() {
        for d in [bern(0.3), bern(0.75), dist(r#"{"family":"exponential_std"}"#)] {
            let below = rate(&d, TAYLOR_S * (1.0 - 1e-9)).unwrap();
            let above = rate(&d, TAYLOR_S * (1.0 + 1e-9)).unwrap();
            assert_relative_eq!(below.value, above.value, max_relative = 1e-8);
            assert_relative_eq!(below.maximizer, above.maximizer, max_relative = 1e-8);
            let lb = cramer_lambda(&d, TAYLOR_S * (1.0 - 1e-9)).unwrap();
            let la = cramer_lambda(&d, TAYLOR_S * (1.0 + 1e-9)).unwrap();
            assert!((lb - la).abs() < 1e-6 * (1.0 + lb.abs()), "{lb} {la}");
        }
    }

    #[test]
    fn cramer_series_reference_values() {
        let g = dist(r#"{"family":"gaussian"}"#);
        assert!(cramer_lambda(&g, 1.0).unwrap().abs() < 1e-12);
        let s = dist(r#"{"family":"bernoulli_symmetric"}"#);
        let i = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
        assert_relative_eq!(cramer_lambda(&s, 0.5).unwrap(), 8.0 * (0.125 - i), max_relative = 1e-10);
        let b = bern(0.75);
        let qk = extract_qkappa(&b).unwrap();
        assert_relative_eq!(cramer_lambda(&b, 1e-6).unwrap(), -qk.kappa, max_relative = 1e-4);
    }

    #[test]
    fn qkappa_reference_values() {
        let s = extract_qkappa(&dist(r#"{"family":"bernoulli_symmetric"}"#)).unwrap();
        assert_eq!(s.q, 4);
        assert_relative_eq!(s.kappa, 1.0 / 12.0, max_relative = 1e-12);
        let u = extract_qkappa(&dist(r#"{"family":"uniform_pm_sqrt3"}"#)).unwrap();
        assert_eq!(u.q, 4);
        assert_relative_eq!(u.kappa, 1.0 / 20.0, max_relative = 1e-12);
        let b = extract_qkappa(&bern(0.75)).unwrap();
        assert_eq!(b.q, 3);
        assert_relative_eq!(b.kappa, 0.5 / (3.0 * 0.75f64.sqrt()), max_relative = 1e-12);
        for qk in [s, u, b] {
            assert!(((qk.kappa - qk.kappa_rate_fit) / qk.kappa).abs() < 1e-4);
        }
        assert!(extract_qkappa(&dist(r#"{"family":"gaussian"}"#)).is_err());
    }

    #[test]
    fn tstar_matches_reference_for_p03() {
        let (t, m) = find_tstar(&bern(0.3), &PsiGrid::default()).unwrap().unwrap();
        assert_relative_eq!(t, 0.776_561_316_279_697_2, max_relative = 1e-10);
        assert_relative_eq!(m, 1.124_021_429_660_789_2, max_relative = 1e-12);
        assert!(find_tstar(&dist(r#"{"family":"gaussian"}"#), &PsiGrid::default())
            .unwrap()
            .is_none());
        assert!(find_tstar(&dist(r#"{"family":"bernoulli_symmetric"}"#), &PsiGrid::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn log_constants_identities() {
        let d = bern(0.3);
        let (t, m) = find_tstar(&d, &PsiGrid::default()).unwrap().unwrap();
        let c = log_constants(&d, t, m).unwrap();
        assert!((c.s_star - c.t_star * c.m_star).abs() < 1e-10);
        assert!((c.d_star * d.cgf(t).unwrap() - 1.0).abs() < 1e-10);
        assert_relative_eq!(c.beta_sq(), 0.007_122_933_5, max_relative = 1e-6);
        let err = log_constants(&d, t + 0.1, m).unwrap_err();
        assert_eq!(err.code(), "consistency");
    }

    #[test]
    fn superlog_constants_for_symmetric_bernoulli() {
        let c = SuperlogConstants::new(4, 1.0 / 12.0);
        assert_relative_eq!(c.a_star, 1.0 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(c.p_exponent, 2.0);
        assert_relative_eq!(c.lambda_total, 3.0 / (2.0 * std::f64::consts::PI.sqrt()), max_relative = 1e-14);
        assert_relative_eq!(c.lambda_total, 0.846_284_4, max_relative = 1e-6);
    }

    #[test]
    fn duality_rejects_non_log_case() {
        let g = dist(r#"{"family":"gaussian"}"#);
        let rep = classify(&g, &PsiGrid::default()).unwrap();
        assert_eq!(duality_report(&g, &rep).unwrap_err().code(), "capability");
    }

    #[test]
    fn residuals_serialize_with_17_digits() {
        let r = DualityResiduals {
            slope: 1.0 / 3.0,
            inverse_slope: 0.0,
            curvature: 1e-12,
            value: 2.5e-300,
            half_product: 7.0,
        };
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"slope\":3.3333333333333331e-1"), "{text}");
        assert!(text.contains("\"half_product\":7.0000000000000000e0"), "{text}");
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["slope"].as_f64().unwrap(), 1.0 / 3.0);
    }
}
