//! The Pickands-type constant `H_*` of the logarithmic case, estimated from
//! its defining limit and from the Spitzer product of the two tilted walks.
//!
//! Forward steps are `Y = t X - phi(t)`; backward steps `Y_-` have law
//! `e^y P[Y in dy]`. The backward walk is `W_{-k} = -(Y_{-1} + ... + Y_{-k})`,
//! which drifts to `-infinity` like the forward one.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{Atoms, DistributionSpec, Sampler};
use crate::error::{Error, Result};
use crate::lattice::LatticePmf;
use crate::numeric::golden_min;
use crate::rng::stream_rng;

/// Law of one walk step.
#[derive(Debug, Clone, PartialEq)]
pub enum IncrementLaw {
    /// `scale * X - shift` where `X` follows `dist` tilted by `tilt`.
    Affine {
        dist: DistributionSpec,
        tilt: f64,
        scale: f64,
        shift: f64,
    },
    Point(f64),
}

impl IncrementLaw {
    pub fn negated(&self) -> IncrementLaw {
        match self {
            IncrementLaw::Affine {
                dist,
                tilt,
                scale,
                shift,
            } => IncrementLaw::Affine {
                dist: dist.clone(),
                tilt: *tilt,
                scale: -scale,
                shift: -shift,
            },
            IncrementLaw::Point(c) => IncrementLaw::Point(-c),
        }
    }

    /// `log E e^{theta Y}`, or `None` outside the domain.
    pub fn cgf(&self, theta: f64) -> Option<f64> {
        match self {
            IncrementLaw::Affine {
                dist,
                tilt,
                scale,
                shift,
            } => {
                let a = dist.cgf(tilt + theta * scale).ok()?;
                let b = dist.cgf(*tilt).ok()?;
                Some(a - b - theta * shift)
            }
            IncrementLaw::Point(c) => Some(theta * c),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            IncrementLaw::Affine {
                dist,
                tilt,
                scale,
                shift,
            } => scale * dist.law().cgf_d(*tilt).1 - shift,
            IncrementLaw::Point(c) => *c,
        }
    }

    fn atoms(&self) -> Option<Atoms> {
        match self {
            IncrementLaw::Affine {
                dist,
                tilt,
                scale,
                shift,
            } => {
                let a = dist.atoms()?.tilted(*tilt);
                let mut pairs: Vec<(f64, f64)> = a
                    .values
                    .iter()
                    .zip(&a.probs)
                    .map(|(x, p)| (scale * x - shift, *p))
                    .collect();
                pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
                Some(Atoms {
                    values: pairs.iter().map(|p| p.0).collect(),
                    probs: pairs.iter().map(|p| p.1).collect(),
                })
            }
            IncrementLaw::Point(c) => Some(Atoms {
                values: vec![*c],
                probs: vec![1.0],
            }),
        }
    }

    /// The step law on its lattice, when it has one.
    pub fn lattice_pmf(&self) -> Option<LatticePmf> {
        match self {
            IncrementLaw::Point(c) => Some(LatticePmf::point(*c)),
            _ => LatticePmf::from_atoms(&self.atoms()?).ok(),
        }
    }

    fn sampler(&self) -> Result<StepSampler> {
        Ok(match self {
            IncrementLaw::Affine {
                dist,
                tilt,
                scale,
                shift,
            } => StepSampler {
                base: dist.tilted_sampler(*tilt)?,
                scale: *scale,
                shift: *shift,
            },
            IncrementLaw::Point(c) => StepSampler {
                base: Sampler::Constant(0.0),
                scale: 0.0,
                shift: -c,
            },
        })
    }

    /// Chernoff exponent `r` with `P[Y_1 + ... + Y_k >= 0] <= e^{-k r}`.
    fn chernoff_rate(&self) -> f64 {
        if let IncrementLaw::Point(c) = self {
            return if *c < 0.0 { f64::INFINITY } else { 0.0 };
        }
        let f = |th: f64| self.cgf(th).unwrap_or(f64::INFINITY);
        let mut hi = 1.0;
        while f(hi) < 0.0 && hi < 1e6 {
            hi *= 2.0;
        }
        while !f(hi).is_finite() && hi > 1e-12 {
            hi *= 0.5;
        }
        let (_, v) = golden_min(f, 0.0, hi, 1e-12);
        (-v).max(0.0)
    }
}

struct StepSampler {
    base: Sampler,
    scale: f64,
    shift: f64,
}

impl StepSampler {
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale * self.base.sample(rng) - self.shift
    }
}

/// Forward and backward step laws of the two-sided tilted walk.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedWalkSpec {
    pub t: f64,
    pub forward: IncrementLaw,
    pub backward: IncrementLaw,
    /// Whether `backward` is exactly `e^y` times the law of `forward`.
    pub exact_tilt: bool,
    pub warnings: Vec<String>,
}

impl TiltedWalkSpec {
    /// Walk with steps `t X - phi(t)`.
    pub fn tilt(base: &DistributionSpec, t: f64) -> Result<TiltedWalkSpec> {
        let phi = base.cgf(t)?;
        let forward = IncrementLaw::Affine {
            dist: base.clone(),
            tilt: 0.0,
            scale: t,
            shift: phi,
        };
        let backward = IncrementLaw::Affine {
            dist: base.clone(),
            tilt: t,
            scale: t,
            shift: phi,
        };
        let mut warnings = Vec::new();
        if !(forward.mean() < 0.0) {
            warnings.push(format!(
                "forward drift {} is not negative; the walk does not drift to -infinity",
                forward.mean()
            ));
        }
        Ok(TiltedWalkSpec {
            t,
            forward,
            backward,
            exact_tilt: true,
            warnings,
        })
    }

    /// Both halves deterministic, drifting down by `c` per step.
    pub fn deterministic(c: f64) -> TiltedWalkSpec {
        TiltedWalkSpec {
            t: 0.0,
            forward: IncrementLaw::Point(-c),
            backward: IncrementLaw::Point(c),
            exact_tilt: false,
            warnings: vec!["degenerate deterministic walk".into()],
        }
    }

    /// Step law of the backward walk `W_{-k}`, i.e. of `-Y_-`.
    pub fn backward_walk_step(&self) -> IncrementLaw {
        self.backward.negated()
    }

    /// Chernoff exponent of `P[W_k > 0]`, shared by both halves.
    pub fn truncation_rate(&self) -> f64 {
        self.forward
            .chernoff_rate()
            .min(self.backward_walk_step().chernoff_rate())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectPoint {
    #[serde(rename = "B")]
    pub b: u64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpitzerTerms {
    /// `P[W_k > 0]`, `k = 1..K`
    pub forward: Vec<f64>,
    /// `P[W_{-k} >= 0]`, `k = 1..K`
    pub backward: Vec<f64>,
    pub r_plus: f64,
    pub r_minus: f64,
    pub remainder_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum HStarMethod {
    Direct {
        schedule: Vec<u64>,
        reps: usize,
        measure_change: bool,
        per_b: Vec<DirectPoint>,
    },
    Spitzer {
        #[serde(rename = "K")]
        k: usize,
        exact: bool,
        reps: Option<usize>,
        terms: SpitzerTerms,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HStarEstimate {
    pub value: f64,
    pub stderr: f64,
    #[serde(flatten)]
    pub method: HStarMethod,
    pub warnings: Vec<String>,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Estimate `H_* = lim (1/B) E max_{k <= B} e^{W_k}`.
///
/// With an exact tilt the expectation is computed under the mixture
/// `Q = (B+1)^{-1} sum_k P_k`, `P_k` tilting the first `k` steps, where the
/// estimator `((B+1)/B) max_k e^{W_k} / sum_k e^{W_k}` is bounded by `(B+1)/B`.
/// The limit is extrapolated from a `c0 + c1/B` fit to the last three `B`.
pub fn hstar_direct(tw: &TiltedWalkSpec, schedule: &[u64], reps: usize, seed: u64) -> Result<HStarEstimate> {
    if schedule.len() < 3 || schedule.windows(2).any(|w| w[0] >= w[1]) || schedule[0] == 0 {
        return Err(Error::Argument(
            "B schedule must hold at least three increasing positive values".into(),
        ));
    }
    if reps < 1000 {
        return Err(Error::Argument(format!("need at least 1000 replicates, got {reps}")));
    }
    if !(tw.forward.mean() < 0.0) {
        return Err(Error::Consistency(format!(
            "forward drift {} is not negative",
            tw.forward.mean()
        )));
    }
    let fwd = tw.forward.sampler()?;
    let bwd = if tw.exact_tilt {
        Some(tw.backward.sampler()?)
    } else {
        None
    };
    let mut per_b = Vec::with_capacity(schedule.len());
    for (bi, &b) in schedule.iter().enumerate() {
        let samples: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream_rng(seed, ((bi as u64) << 40) | r as u64);
                match &bwd {
                    Some(tilted) => {
                        let switch = rng.random_range(0..=b);
                        let mut path = Vec::with_capacity(b as usize + 1);
                        let mut w = 0.0;
                        let mut wmax = 0.0f64;
                        path.push(0.0);
                        for k in 1..=b {
                            w += if k <= switch {
                                tilted.sample(&mut rng)
                            } else {
                                fwd.sample(&mut rng)
                            };
                            wmax = wmax.max(w);
                            path.push(w);
                        }
                        let denom: f64 = path.iter().map(|x| (x - wmax).exp()).sum();
                        (b + 1) as f64 / b as f64 / denom
                    }
                    None => {
                        let mut w = 0.0;
                        let mut wmax = 0.0f64;
                        for _ in 0..b {
                            w += fwd.sample(&mut rng);
                            wmax = wmax.max(w);
                        }
                        wmax.exp() / b as f64
                    }
                }
            })
            .collect();
        let (mean, stderr) = mean_se(&samples);
        per_b.push(DirectPoint { b, mean, stderr });
    }
    let last = &per_b[per_b.len() - 3..];
    let xs: Vec<f64> = last.iter().map(|p| 1.0 / p.b as f64).collect();
    let xbar = xs.iter().sum::<f64>() / 3.0;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let weights: Vec<f64> = xs.iter().map(|x| 1.0 / 3.0 - xbar * (x - xbar) / sxx).collect();
    let value: f64 = weights.iter().zip(last).map(|(w, p)| w * p.mean).sum();
    let stderr = weights
        .iter()
        .zip(last)
        .map(|(w, p)| (w * p.stderr).powi(2))
        .sum::<f64>()
        .sqrt();
    let mut warnings = tw.warnings.clone();
    if !(value > 0.0 && value < 1.0) {
        warnings.push(format!("extrapolated value {value} lies outside (0, 1)"));
    }
    Ok(HStarEstimate {
        value,
        stderr,
        method: HStarMethod::Direct {
            schedule: schedule.to_vec(),
            reps,
            measure_change: tw.exact_tilt,
            per_b,
        },
        warnings,
    })
}

/// How `hstar_spitzer` evaluates the exceedance probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpitzerMode {
    Exact,
    MonteCarlo { reps: usize },
    /// Exact when both step laws are lattice, Monte Carlo otherwise.
    Auto { reps: usize },
}

fn remainder(k: usize, r: f64) -> f64 {
    if r.is_infinite() {
        return 0.0;
    }
    if r <= 0.0 {
        return f64::INFINITY;
    }
    let k1 = (k + 1) as f64;
    (-k1 * r).exp() / (k1 * (-(-r).exp_m1()))
}

/// `H_* = R_+ R_-` with `R_+ = exp(-sum P[W_k > 0]/k)` and
/// `R_- = exp(-sum P[W_{-k} >= 0]/k)`, truncated at `K`.
pub fn hstar_spitzer(
    tw: &TiltedWalkSpec,
    k_max: usize,
    mode: SpitzerMode,
    seed: u64,
    precision: f64,
) -> Result<HStarEstimate> {
    if k_max == 0 {
        return Err(Error::Argument("K must be positive".into()));
    }
    let fwd_step = tw.forward.clone();
    let bwd_step = tw.backward_walk_step();
    let r = tw.truncation_rate();
    let rem = remainder(k_max, r) * 2.0;
    let lattice = match mode {
        SpitzerMode::Exact => {
            let f = fwd_step.lattice_pmf();
            let b = bwd_step.lattice_pmf();
            match (f, b) {
                (Some(f), Some(b)) => Some((f, b)),
                _ => {
                    return Err(Error::Capability(
                        "exact Spitzer sums need lattice step laws".into(),
                    ))
                }
            }
        }
        SpitzerMode::MonteCarlo { .. } => None,
        SpitzerMode::Auto { .. } => fwd_step.lattice_pmf().zip(bwd_step.lattice_pmf()),
    };
    let (forward, backward, se_log, reps) = match lattice {
        Some((f, b)) => {
            let mut pf = Vec::with_capacity(k_max);
            let mut pb = Vec::with_capacity(k_max);
            let mut cf = f.clone();
            let mut cb = b.clone();
            for _ in 0..k_max {
                pf.push(cf.tail_gt(0.0));
                pb.push(cb.tail_ge(0.0));
                cf = cf.convolve(&f);
                cb = cb.convolve(&b);
            }
            (pf, pb, 0.0, None)
        }
        None => {
            let reps = match mode {
                SpitzerMode::MonteCarlo { reps } | SpitzerMode::Auto { reps } => reps,
                SpitzerMode::Exact => unreachable!(),
            };
            if reps < 2 {
                return Err(Error::Argument("need at least two replicates".into()));
            }
            let (pf, sf) = mc_exceedance(&fwd_step, k_max, reps, seed, 0, false)?;
            let (pb, sb) = mc_exceedance(&bwd_step, k_max, reps, seed, 1, true)?;
            (pf, pb, (sf * sf + sb * sb).sqrt(), Some(reps))
        }
    };
    let sum = |ps: &[f64]| -> f64 { ps.iter().enumerate().map(|(i, p)| p / (i + 1) as f64).sum() };
    let r_plus = (-sum(&forward)).exp();
    let r_minus = (-sum(&backward)).exp();
    let value = r_plus * r_minus;
    let bound = value * (-(-rem).exp_m1());
    if !(bound <= precision) {
        let needed = if r > 0.0 && r.is_finite() {
            format!("increase K beyond {} (rate {r:.4})", ((-precision.ln()) / r).ceil() as usize)
        } else {
            "the walk has no exponential decay; no finite K suffices".to_string()
        };
        return Err(Error::PrecisionNotAchievable {
            achieved: bound,
            requested: precision,
            suggestion: needed,
        });
    }
    let mut warnings = tw.warnings.clone();
    if !(value > 0.0 && value < 1.0) {
        warnings.push(format!("value {value} lies outside (0, 1)"));
    }
    Ok(HStarEstimate {
        value,
        stderr: value * se_log + bound,
        method: HStarMethod::Spitzer {
            k: k_max,
            exact: reps.is_none(),
            reps,
            terms: SpitzerTerms {
                forward,
                backward,
                r_plus,
                r_minus,
                remainder_bound: bound,
            },
        },
        warnings,
    })
}

// Per-k exceedance frequencies and the standard error of sum_k 1[...]/k.
fn mc_exceedance(
    step: &IncrementLaw,
    k_max: usize,
    reps: usize,
    seed: u64,
    half: u64,
    inclusive: bool,
) -> Result<(Vec<f64>, f64)> {
    let sampler = &step.sampler()?;
    let per_path: Vec<(Vec<bool>, f64)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, (half << 40) | r as u64);
            let mut hits = vec![false; k_max];
            let mut w = 0.0;
            let mut z = 0.0;
            for (k, h) in hits.iter_mut().enumerate() {
                w += sampler.sample(&mut rng);
                if w > 0.0 || (inclusive && w == 0.0) {
                    *h = true;
                    z += 1.0 / (k + 1) as f64;
                }
            }
            (hits, z)
        })
        .collect();
    let mut counts = vec![0u64; k_max];
    let mut zs = Vec::with_capacity(reps);
    for (hits, z) in &per_path {
        for (c, h) in counts.iter_mut().zip(hits) {
            *c += *h as u64;
        }
        zs.push(*z);
    }
    let probs = counts.iter().map(|c| *c as f64 / reps as f64).collect();
    Ok((probs, mean_se(&zs).1))
}

pub const DEFAULT_SCHEDULE: [u64; 5] = [64, 128, 256, 512, 1024];
pub const DEFAULT_REPS: usize = 20_000;
pub const DEFAULT_K: usize = 200;

/// Exact Spitzer product for lattice walks, otherwise the direct estimator
/// with the default schedule.
pub fn estimate_hstar(tw: &TiltedWalkSpec, seed: u64) -> Result<HStarEstimate> {
    if tw.forward.lattice_pmf().is_some() && tw.backward_walk_step().lattice_pmf().is_some() {
        hstar_spitzer(tw, DEFAULT_K, SpitzerMode::Exact, seed, 1e-8)
    } else {
        hstar_direct(tw, &DEFAULT_SCHEDULE, DEFAULT_REPS, seed)
    }
}

/// Survival probabilities of the two halves up to `K` by killed DP, and
/// the product `R_+(K) R_-(K)` for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoExceedance {
    /// `P[W_k < 0 for k <= K]`
    pub forward: f64,
    /// `P[W_{-k} <= 0 for k <= K]`
    pub backward: f64,
    pub joint: f64,
    pub spitzer_product: f64,
    /// Bound on how far either quantity can sit from its `K = infinity` limit.
    pub tolerance: f64,
}

pub fn no_exceedance(tw: &TiltedWalkSpec, k_max: usize) -> Result<NoExceedance> {
    let f = tw
        .forward
        .lattice_pmf()
        .ok_or_else(|| Error::Capability("killed DP needs lattice step laws".into()))?;
    let b = tw
        .backward_walk_step()
        .lattice_pmf()
        .ok_or_else(|| Error::Capability("killed DP needs lattice step laws".into()))?;
    let survive = |step: &LatticePmf, allow_zero: bool| {
        let mut cur = LatticePmf::point(0.0);
        cur.span = step.span;
        for _ in 0..k_max {
            cur = cur.convolve(step);
            cur.kill_at_or_above(0.0, allow_zero);
        }
        cur.mass()
    };
    let forward = survive(&f, false);
    let backward = survive(&b, true);
    let est = hstar_spitzer(tw, k_max, SpitzerMode::Exact, 0, f64::INFINITY)?;
    let r = tw.truncation_rate();
    let tail = if r.is_infinite() {
        0.0
    } else {
        let k1 = (k_max + 1) as f64;
        (-k1 * r).exp() / (-(-r).exp_m1())
    };
    Ok(NoExceedance {
        forward,
        backward,
        joint: forward * backward,
        spitzer_product: est.value,
        tolerance: 2.0 * tail + 1e-12,
    })
}

/// Verdict on whether two independent `H_*` estimates agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reconciliation {
    pub difference: f64,
    pub combined_stderr: f64,
    pub z: f64,
    pub agree: bool,
}

pub fn reconcile(a: &HStarEstimate, b: &HStarEstimate) -> Reconciliation {
    let difference = (a.value - b.value).abs();
    let combined_stderr = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
    let z = difference / combined_stderr;
    Reconciliation {
        difference,
        combined_stderr,
        z,
        agree: difference < 3.0 * combined_stderr,
    }
}
