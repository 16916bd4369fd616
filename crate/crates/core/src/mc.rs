//! Monte Carlo replicates of the scan statistic and of hitting times,
//! compared with the limit laws.

use rayon::prelude::*;
use serde::Serialize;

use crate::cgf::{Case, CaseReport};
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::limits::{gumbel_law, hitting_cdf, GumbelLaw};
use crate::rng::stream_rng;
use crate::scan::{hitting_time_stream, scan_lengths, PrefixSums};

/// Largest `n` accepted by [`WindowPolicy::Full`].
pub const FULL_LIMIT: u64 = 20_000;
/// Every `AUDIT_EVERY`-th replicate is rescanned with widened windows.
pub const AUDIT_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum WindowPolicy {
    Full,
    /// Lengths around the optimal scale of the case, plus all short ones.
    Theory,
    Explicit { h1: usize, h2: usize },
}

/// Length ranges scanned under `Theory` for this case and `n`.
pub fn theory_windows(case: &CaseReport, n: u64) -> Result<Vec<(usize, usize)>> {
    if n < 3 {
        return Err(Error::Argument(format!("n must be at least 3, got {n}")));
    }
    let l = (n as f64).ln();
    let short = (1, l.ceil() as usize);
    let (lo, hi) = match &case.case {
        Case::Superlogarithmic(c) => {
            let centre = c.a_star * l.powf(c.p_exponent);
            (centre / 16.0, centre * 16.0)
        }
        Case::Logarithmic(c) => {
            let half = 24f64.max(24.0 / c.beta_star) * l.sqrt();
            (c.d_star * l - half, c.d_star * l + half)
        }
        _ => {
            return Err(Error::Capability(format!(
                "no theory windows for the {} case; use the full or an explicit window",
                case.case.tag()
            )))
        }
    };
    let cap = n as usize;
    let lo = (lo.floor().max(1.0) as usize).min(cap);
    let hi = (hi.ceil().max(1.0) as usize).min(cap);
    Ok(merge(vec![short, (lo, hi)], cap))
}

fn merge(mut ranges: Vec<(usize, usize)>, cap: usize) -> Vec<(usize, usize)> {
    ranges.iter_mut().for_each(|r| {
        r.0 = r.0.clamp(1, cap);
        r.1 = r.1.clamp(r.0, cap);
    });
    ranges.sort_unstable();
    let mut out: Vec<(usize, usize)> = Vec::new();
    for r in ranges {
        match out.last_mut() {
            Some(last) if r.0 <= last.1 + 1 => last.1 = last.1.max(r.1),
            _ => out.push(r),
        }
    }
    out
}

fn widen(ranges: &[(usize, usize)], cap: usize) -> Vec<(usize, usize)> {
    merge(ranges.iter().map(|&(a, b)| (a / 2, b * 2)).collect(), cap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditRecord {
    pub replicate: usize,
    pub windowed: f64,
    pub widened: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Audit {
    pub checked: usize,
    pub disagreements: Vec<AuditRecord>,
}

impl Audit {
    pub fn agreement(&self) -> f64 {
        if self.checked == 0 {
            1.0
        } else {
            1.0 - self.disagreements.len() as f64 / self.checked as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub n: u64,
    pub reps: usize,
    pub seed: u64,
    pub policy: WindowPolicy,
    pub windows: Vec<(usize, usize)>,
    pub case_tag: &'static str,
    pub values: Vec<f64>,
    pub argmax_lengths: Vec<usize>,
    /// Distance to the attached law on the `M_n^2 / 2 - a_n` scale.
    pub ks: Option<f64>,
    pub law: Option<GumbelLaw>,
    /// Fraction of replicates whose maximum is a single observation.
    pub u_fraction: Option<f64>,
    pub audit: Option<Audit>,
    pub warnings: Vec<String>,
}

pub fn run_mn_experiment(
    dist: &DistributionSpec,
    case: &CaseReport,
    n: u64,
    reps: usize,
    policy: WindowPolicy,
    seed: u64,
) -> Result<SimulationSummary> {
    if reps < 100 {
        return Err(Error::Argument(format!("need at least 100 replicates, got {reps}")));
    }
    if n == 0 {
        return Err(Error::Argument("n must be positive".into()));
    }
    let cap = n as usize;
    let windows = match policy {
        WindowPolicy::Full => {
            if n > FULL_LIMIT {
                return Err(Error::Resource(format!(
                    "full scans are limited to n <= {FULL_LIMIT}; use the theory window policy"
                )));
            }
            vec![(1, cap)]
        }
        WindowPolicy::Theory => theory_windows(case, n)?,
        WindowPolicy::Explicit { h1, h2 } => {
            if h1 == 0 || h1 > h2 || h1 > cap {
                return Err(Error::Argument(format!(
                    "need 1 <= h1 <= h2 and h1 <= n, got h1={h1}, h2={h2}"
                )));
            }
            vec![(h1, h2.min(cap))]
        }
    };
    let audit_windows = match policy {
        WindowPolicy::Theory => Some(widen(&windows, cap)),
        _ => None,
    };
    let sampler = dist.sampler();
    let rows: Vec<(f64, usize, Option<f64>)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let mut data = vec![0.0; cap];
            sampler.fill(&mut rng, &mut data);
            let ps = PrefixSums::new(&data);
            let best = scan_lengths(&ps, &windows).expect("nonempty windows");
            let audit = match &audit_windows {
                Some(w) if r % AUDIT_EVERY == 0 => {
                    Some(scan_lengths(&ps, w).expect("nonempty windows").value)
                }
                _ => None,
            };
            (best.value, best.length, audit)
        })
        .collect();
    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let argmax_lengths: Vec<usize> = rows.iter().map(|r| r.1).collect();
    let audit = audit_windows.map(|_| {
        let mut checked = 0;
        let mut disagreements = Vec::new();
        for (k, row) in rows.iter().enumerate() {
            if let Some(w) = row.2 {
                checked += 1;
                if w != row.0 {
                    disagreements.push(AuditRecord {
                        replicate: k,
                        windowed: row.0,
                        widened: w,
                    });
                }
            }
        }
        Audit {
            checked,
            disagreements,
        }
    });
    let mut warnings = Vec::new();
    if let Some(a) = &audit {
        if !a.disagreements.is_empty() {
            warnings.push(format!(
                "{} of {} audited replicates changed under widened windows",
                a.disagreements.len(),
                a.checked
            ));
        }
    }
    let law = match (&case.case, n >= 3) {
        (Case::Superlogarithmic(_) | Case::Logarithmic(_), true) => match gumbel_law(case, n) {
            Ok(l) => Some(l),
            Err(e) => {
                warnings.push(format!("no limit law attached: {e}"));
                None
            }
        },
        _ => None,
    };
    let ks = match &law {
        Some(l) => {
            let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
            Some(ks_statistic(&sq, |x| l.cdf_msq(x))?)
        }
        None => None,
    };
    let u_fraction = if windows[0].0 == 1 {
        Some(argmax_lengths.iter().filter(|l| **l == 1).count() as f64 / reps as f64)
    } else {
        None
    };
    Ok(SimulationSummary {
        n,
        reps,
        seed,
        policy,
        windows,
        case_tag: case.case.tag(),
        values,
        argmax_lengths,
        ks,
        law,
        u_fraction,
        audit,
        warnings,
    })
}

/// `sup |F_emp - F|` over the sample points.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Argument("no samples".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let mut d = 0.0f64;
    for (k, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((k + 1) as f64 / m - f).max(f - k as f64 / m);
    }
    Ok(d)
}

/// Asymptotic KS critical value at level `alpha` for `m` samples.
pub fn ks_critical(m: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (m as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthProfile {
    /// `length / log^p n`, `(length - d_* log n) / sqrt(log n)` or `length`.
    pub scale: String,
    pub rescaled: Vec<f64>,
    pub median: f64,
    pub histogram: Vec<HistogramBin>,
}

const PROFILE_BINS: usize = 20;

pub fn argmax_length_profile(summary: &SimulationSummary, case: &CaseReport, n: u64) -> Result<LengthProfile> {
    if summary.argmax_lengths.is_empty() {
        return Err(Error::Argument("summary holds no replicates".into()));
    }
    if summary.n != n || summary.case_tag != case.case.tag() {
        return Err(Error::Argument(format!(
            "summary is for n={} ({}), not n={n} ({})",
            summary.n,
            summary.case_tag,
            case.case.tag()
        )));
    }
    let l = (n as f64).ln();
    let (scale, map): (String, Box<dyn Fn(f64) -> f64>) = match &case.case {
        Case::Superlogarithmic(c) => {
            let d = l.powf(c.p_exponent);
            (format!("length / log^{} n", c.p_exponent), Box::new(move |x| x / d))
        }
        Case::Logarithmic(c) => {
            let (centre, root) = (c.d_star * l, l.sqrt());
            (
                "(length - d_* log n) / sqrt(log n)".to_string(),
                Box::new(move |x| (x - centre) / root),
            )
        }
        _ => ("length".to_string(), Box::new(|x| x)),
    };
    let rescaled: Vec<f64> = summary.argmax_lengths.iter().map(|&x| map(x as f64)).collect();
    let mut sorted = rescaled.clone();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    let median = if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    };
    let (lo, hi) = (sorted[0], sorted[k - 1]);
    let width = if hi > lo { (hi - lo) / PROFILE_BINS as f64 } else { 1.0 };
    let mut histogram: Vec<HistogramBin> = (0..PROFILE_BINS)
        .map(|b| HistogramBin {
            lo: lo + width * b as f64,
            hi: lo + width * (b + 1) as f64,
            count: 0,
        })
        .collect();
    for x in &sorted {
        let b = (((x - lo) / width) as usize).min(PROFILE_BINS - 1);
        histogram[b].count += 1;
    }
    Ok(LengthProfile {
        scale,
        rescaled,
        median,
        histogram,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingSummary {
    pub u: f64,
    pub reps: usize,
    pub seed: u64,
    pub n_cap: u64,
    pub window_cap: Option<u64>,
    pub times: Vec<Option<u64>>,
    /// `c(u)`, with `c(u) T(u)` asymptotically exponential.
    pub normalization: f64,
    pub mass: f64,
    /// Mean of `c(u) T(u)` with censored runs counted at `n_cap`.
    pub normalized_mean: f64,
    pub censored: usize,
    pub ks: f64,
}

/// Hitting times of `u` on independent walks, normalized by the limit.
pub fn run_hitting_experiment(
    dist: &DistributionSpec,
    case: &CaseReport,
    u: f64,
    reps: usize,
    n_cap: u64,
    window_cap: Option<u64>,
    seed: u64,
) -> Result<HittingSummary> {
    if reps == 0 {
        return Err(Error::Argument("need at least one replicate".into()));
    }
    let limit = hitting_cdf(1.0, u, case)?;
    let times: Vec<Option<u64>> = (0..reps)
        .into_par_iter()
        .map(|r| hitting_time_stream(dist, u, seed, r as u64, n_cap, window_cap).map(|h| h.time))
        .collect::<Result<_>>()?;
    let c = limit.normalization;
    let scaled: Vec<f64> = times.iter().map(|t| c * t.unwrap_or(n_cap) as f64).collect();
    let censored = times.iter().filter(|t| t.is_none()).count();
    let ks = ks_statistic(&scaled, |y| 1.0 - (-limit.mass * y.max(0.0)).exp())?;
    Ok(HittingSummary {
        u,
        reps,
        seed,
        n_cap,
        window_cap,
        normalization: c,
        mass: limit.mass,
        normalized_mean: scaled.iter().sum::<f64>() / reps as f64,
        censored,
        times,
        ks,
    })
}
