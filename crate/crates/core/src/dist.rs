//! Standardized distributions: cumulant generating functions, cumulants,
//! lattice structure and seeded samplers (plain and exponentially tilted).

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{exp_m1_m_x, ln_sinhc, neg_ln1m_m_x, BERNOULLI_EVEN};
use crate::rng::stream_rng;

/// Highest cumulant order available for every family.
pub const MAX_CUMULANT_ORDER: usize = 8;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// The JSON-facing description of a distribution, as supplied by the user.
///
/// Serializes as `{"family": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum FamilySpec {
    Gaussian {},
    BernoulliSymmetric {},
    /// `+1` with probability `p`, `-1` otherwise, before standardization.
    Bernoulli { p: f64 },
    BinomialConvolution { base: Box<FamilySpec>, m: u32 },
    UniformPmSqrt3 {},
    ExponentialStd {},
    PoissonStd { rate: f64 },
    /// Finite list of `[value, probability]` pairs.
    Tabulated { atoms: Vec<(f64, f64)> },
    /// `base + Uniform[-width, width]`, restandardized.
    Jittered { base: Box<FamilySpec>, width: f64 },
}

impl FamilySpec {
    pub fn tag(&self) -> &'static str {
        match self {
            FamilySpec::Gaussian {} => "gaussian",
            FamilySpec::BernoulliSymmetric {} => "bernoulli_symmetric",
            FamilySpec::Bernoulli { .. } => "bernoulli",
            FamilySpec::BinomialConvolution { .. } => "binomial_convolution",
            FamilySpec::UniformPmSqrt3 {} => "uniform_pm_sqrt3",
            FamilySpec::ExponentialStd {} => "exponential_std",
            FamilySpec::PoissonStd { .. } => "poisson_std",
            FamilySpec::Tabulated { .. } => "tabulated",
            FamilySpec::Jittered { .. } => "jittered",
        }
    }
}

/// A finite discrete law, values sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Atoms {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl Atoms {
    /// Merge, sort and validate raw `(value, prob)` pairs without rescaling.
    pub fn new(pairs: &[(f64, f64)]) -> Result<Atoms> {
        if pairs.is_empty() {
            return Err(Error::Schema("tabulated law needs at least one atom".into()));
        }
        let mut total = 0.0;
        for &(v, p) in pairs {
            if !v.is_finite() || !p.is_finite() || p < 0.0 {
                return Err(Error::Schema(format!("invalid atom ({v}, {p})")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Schema(format!("atom probabilities sum to {total}, not 1")));
        }
        let mut sorted: Vec<(f64, f64)> = pairs.iter().copied().filter(|a| a.1 > 0.0).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut probs: Vec<f64> = Vec::with_capacity(sorted.len());
        for (v, p) in sorted {
            match values.last() {
                Some(&last) if last == v => *probs.last_mut().unwrap() += p,
                _ => {
                    values.push(v);
                    probs.push(p);
                }
            }
        }
        Ok(Atoms { values, probs })
    }

    pub fn mean_std(&self) -> (f64, f64) {
        let mean: f64 = self.values.iter().zip(&self.probs).map(|(v, p)| v * p).sum();
        let var: f64 = self
            .values
            .iter()
            .zip(&self.probs)
            .map(|(v, p)| (v - mean) * (v - mean) * p)
            .sum();
        (mean, var.max(0.0).sqrt())
    }

    /// The affinely rescaled law of `(X - mean) / std`.
    pub fn standardized(&self) -> Result<Atoms> {
        let (mean, std) = self.mean_std();
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(std > 1e-14 * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::Degenerate("law has zero variance".into()));
        }
        Ok(Atoms {
            values: self.values.iter().map(|v| (v - mean) / std).collect(),
            probs: self.probs.clone(),
        })
    }

    fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }

    /// `(phi, phi', phi'')` at `t`.
    pub fn cgf_d(&self, t: f64) -> (f64, f64, f64) {
        let xmax = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let shift = self.values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(t * v));
        let mut z = 0.0;
        let mut first = 0.0;
        for (v, p) in self.values.iter().zip(&self.probs) {
            let w = p * (t * v - shift).exp();
            z += w;
            first += w * v;
        }
        let d1 = first / z;
        let d2 = self
            .values
            .iter()
            .zip(&self.probs)
            .map(|(v, p)| p * (t * v - shift).exp() * (v - d1) * (v - d1))
            .sum::<f64>()
            / z;
        let value = if t.abs() * xmax <= 1.0 {
            let inner: f64 = t * self.mean()
                + self
                    .values
                    .iter()
                    .zip(&self.probs)
                    .map(|(v, p)| p * exp_m1_m_x(t * v))
                    .sum::<f64>();
            inner.ln_1p()
        } else {
            shift + z.ln()
        };
        (value, d1, d2)
    }

    fn cumulants(&self, order: usize) -> Vec<f64> {
        let moments: Vec<f64> = (0..=order)
            .map(|k| {
                self.values
                    .iter()
                    .zip(&self.probs)
                    .map(|(v, p)| p * v.powi(k as i32))
                    .sum()
            })
            .collect();
        cumulants_from_moments(&moments)
    }

    /// Law of the same atoms under the weights `p_i e^{theta x_i}`.
    pub fn tilted(&self, theta: f64) -> Atoms {
        let shift = self.values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(theta * v));
        let w: Vec<f64> = self
            .values
            .iter()
            .zip(&self.probs)
            .map(|(v, p)| p * (theta * v - shift).exp())
            .collect();
        let z: f64 = w.iter().sum();
        Atoms {
            values: self.values.clone(),
            probs: w.into_iter().map(|x| x / z).collect(),
        }
    }

    /// Law of the sum of `m` independent copies.
    pub fn convolve_power(&self, m: u32) -> Atoms {
        let mut acc = Atoms {
            values: vec![0.0],
            probs: vec![1.0],
        };
        for _ in 0..m {
            let mut pairs = Vec::with_capacity(acc.values.len() * self.values.len());
            for (a, pa) in acc.values.iter().zip(&acc.probs) {
                for (b, pb) in self.values.iter().zip(&self.probs) {
                    pairs.push((a + b, pa * pb));
                }
            }
            pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
            let tol = 1e-12 * pairs.iter().fold(1.0f64, |m, p| m.max(p.0.abs()));
            let mut values: Vec<f64> = Vec::new();
            let mut probs: Vec<f64> = Vec::new();
            for (v, p) in pairs {
                match values.last() {
                    Some(&last) if (v - last).abs() <= tol => *probs.last_mut().unwrap() += p,
                    _ => {
                        values.push(v);
                        probs.push(p);
                    }
                }
            }
            acc = Atoms { values, probs };
        }
        acc
    }

    pub fn scaled(&self, factor: f64) -> Atoms {
        Atoms {
            values: self.values.iter().map(|v| v * factor).collect(),
            probs: self.probs.clone(),
        }
    }

    /// Span and offset of the smallest lattice carrying all atoms, if any.
    pub fn lattice(&self) -> Lattice {
        let lo = self.values[0];
        let diffs: Vec<f64> = self.values.iter().map(|v| v - lo).filter(|d| *d > 0.0).collect();
        let Some(&dmax) = diffs.last() else {
            return Lattice::Nonlattice;
        };
        let tol = 1e-12 * dmax;
        let mut g = diffs[0];
        for &d in &diffs[1..] {
            g = float_gcd(g, d, tol);
        }
        if g <= 1e-6 * dmax {
            return Lattice::Nonlattice;
        }
        let ok = diffs.iter().all(|d| {
            let k = (d / g).round();
            (d - k * g).abs() <= 1e-10 * dmax
        });
        if !ok {
            return Lattice::Nonlattice;
        }
        Lattice::Lattice {
            span: g,
            offset: lo.rem_euclid(g),
        }
    }
}

fn float_gcd(mut a: f64, mut b: f64, tol: f64) -> f64 {
    if a < b {
        std::mem::swap(&mut a, &mut b);
    }
    while b > tol {
        let r = a % b;
        a = b;
        b = if b - r <= tol { 0.0 } else { r };
    }
    a
}

/// Cumulants `kappa_0..kappa_n` (with `kappa_0 = 0`) from raw moments `mu_0..mu_n`.
pub fn cumulants_from_moments(mu: &[f64]) -> Vec<f64> {
    let n = mu.len() - 1;
    let mut kappa = vec![0.0; n + 1];
    for k in 1..=n {
        let mut c = mu[k];
        let mut binom = 1.0; // C(k-1, j-1)
        for j in 1..k {
            c -= binom * kappa[j] * mu[k - j];
            binom = binom * (k - j) as f64 / j as f64;
        }
        kappa[k] = c;
    }
    kappa
}

/// Cumulant of order `n >= 2` of the uniform law on `[-a, a]`.
fn uniform_cumulant(a: f64, n: usize) -> f64 {
    if n % 2 == 1 {
        0.0
    } else {
        (2.0 * a).powi(n as i32) * BERNOULLI_EVEN[n / 2 - 1] / n as f64
    }
}

/// Lattice structure of a law: values confined to `offset + span * Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lattice {
    Nonlattice,
    Lattice { span: f64, offset: f64 },
}

/// Standardized law after resolving a [`FamilySpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    Gaussian,
    Atoms(Atoms),
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    Uniform,
    /// `E - 1` with `E` standard exponential.
    Exponential,
    /// `(N - rate) / sqrt(rate)` with `N` Poisson.
    Poisson { rate: f64 },
    /// `(X_1 + ... + X_m) / sqrt(m)`.
    Convolution { base: Box<Law>, m: u32 },
    /// `(B + U) / scale`, `U` uniform on `[-width, width]`, `scale^2 = 1 + width^2/3`.
    Jittered { base: Box<Law>, width: f64, scale: f64 },
}

impl Law {
    fn resolve(spec: &FamilySpec) -> Result<Law> {
        Ok(match spec {
            FamilySpec::Gaussian {} => Law::Gaussian,
            FamilySpec::BernoulliSymmetric {} => Law::Atoms(Atoms {
                values: vec![-1.0, 1.0],
                probs: vec![0.5, 0.5],
            }),
            FamilySpec::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::Schema(format!("bernoulli p = {p} is not a probability")));
                }
                if *p == 0.0 || *p == 1.0 {
                    return Err(Error::Degenerate(format!("bernoulli with p = {p}")));
                }
                Law::Atoms(Atoms::new(&[(1.0, *p), (-1.0, 1.0 - p)])?.standardized()?)
            }
            FamilySpec::BinomialConvolution { base, m } => {
                if *m == 0 {
                    return Err(Error::Schema("convolution power m must be positive".into()));
                }
                Law::Convolution {
                    base: Box::new(Law::resolve(base)?),
                    m: *m,
                }
            }
            FamilySpec::UniformPmSqrt3 {} => Law::Uniform,
            FamilySpec::ExponentialStd {} => Law::Exponential,
            FamilySpec::PoissonStd { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::Schema(format!("poisson rate {rate} must be positive")));
                }
                Law::Poisson { rate: *rate }
            }
            FamilySpec::Tabulated { atoms } => Law::Atoms(Atoms::new(atoms)?.standardized()?),
            FamilySpec::Jittered { base, width } => {
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::Schema(format!("jitter width {width} must be positive")));
                }
                Law::Jittered {
                    base: Box::new(Law::resolve(base)?),
                    width: *width,
                    scale: (1.0 + width * width / 3.0).sqrt(),
                }
            }
        })
    }

    /// Right end `t_inf` of the cgf domain.
    pub fn t_inf(&self) -> f64 {
        match self {
            Law::Exponential => 1.0,
            Law::Convolution { base, m } => base.t_inf() * (*m as f64).sqrt(),
            Law::Jittered { base, scale, .. } => base.t_inf() * scale,
            _ => f64::INFINITY,
        }
    }

    /// Right end of the support.
    pub fn s_inf(&self) -> f64 {
        match self {
            Law::Atoms(a) => *a.values.last().unwrap(),
            Law::Uniform => SQRT3,
            Law::Convolution { base, m } => base.s_inf() * (*m as f64).sqrt(),
            Law::Jittered { base, width, scale } => (base.s_inf() + width) / scale,
            _ => f64::INFINITY,
        }
    }

    /// `(phi, phi', phi'')` at `t`, with `t` assumed inside the domain.
    pub fn cgf_d(&self, t: f64) -> (f64, f64, f64) {
        match self {
            Law::Gaussian => (0.5 * t * t, t, 1.0),
            Law::Atoms(a) => a.cgf_d(t),
            Law::Uniform => {
                let (v, d1, d2) = ln_sinhc(SQRT3 * t);
                (v, SQRT3 * d1, 3.0 * d2)
            }
            Law::Exponential => {
                let inv = 1.0 / (1.0 - t);
                (neg_ln1m_m_x(t), t * inv, inv * inv)
            }
            Law::Poisson { rate } => {
                let r = rate.sqrt();
                let u = t / r;
                (rate * exp_m1_m_x(u), r * u.exp_m1(), u.exp())
            }
            Law::Convolution { base, m } => {
                let r = (*m as f64).sqrt();
                let (v, d1, d2) = base.cgf_d(t / r);
                (*m as f64 * v, r * d1, d2)
            }
            Law::Jittered { base, width, scale } => {
                let u = t / scale;
                let (bv, bd1, bd2) = base.cgf_d(u);
                let (jv, jd1, jd2) = ln_sinhc(width * u);
                (
                    bv + jv,
                    (bd1 + width * jd1) / scale,
                    (bd2 + width * width * jd2) / (scale * scale),
                )
            }
        }
    }

    /// Cumulants `kappa_0..kappa_order`.
    fn cumulants(&self, order: usize) -> Vec<f64> {
        let mut out = vec![0.0; order + 1];
        match self {
            Law::Gaussian => {
                if order >= 2 {
                    out[2] = 1.0;
                }
            }
            Law::Atoms(a) => out = a.cumulants(order),
            Law::Uniform => {
                for (n, k) in out.iter_mut().enumerate().skip(2) {
                    *k = uniform_cumulant(SQRT3, n);
                }
            }
            Law::Exponential => {
                let mut fact = 1.0;
                for (n, k) in out.iter_mut().enumerate().skip(2) {
                    fact *= (n - 1) as f64;
                    *k = fact;
                }
            }
            Law::Poisson { rate } => {
                for (n, k) in out.iter_mut().enumerate().skip(2) {
                    *k = rate.powf(1.0 - n as f64 / 2.0);
                }
            }
            Law::Convolution { base, m } => {
                let b = base.cumulants(order);
                for n in 1..=order {
                    out[n] = b[n] * (*m as f64).powf(1.0 - n as f64 / 2.0);
                }
            }
            Law::Jittered { base, width, scale } => {
                let b = base.cumulants(order);
                for n in 1..=order {
                    let u = if n >= 2 { uniform_cumulant(*width, n) } else { 0.0 };
                    out[n] = (b[n] + u) / scale.powi(n as i32);
                }
            }
        }
        out
    }

    fn lattice(&self) -> Lattice {
        match self {
            Law::Atoms(a) => a.lattice(),
            Law::Poisson { rate } => {
                let span = 1.0 / rate.sqrt();
                Lattice::Lattice {
                    span,
                    offset: (-rate.sqrt()).rem_euclid(span),
                }
            }
            Law::Convolution { base, m } => match base.lattice() {
                Lattice::Lattice { span, offset } => {
                    let r = (*m as f64).sqrt();
                    let span = span / r;
                    Lattice::Lattice {
                        span,
                        offset: (offset * *m as f64 / r).rem_euclid(span),
                    }
                }
                Lattice::Nonlattice => Lattice::Nonlattice,
            },
            _ => Lattice::Nonlattice,
        }
    }

    fn atoms(&self) -> Option<Atoms> {
        match self {
            Law::Atoms(a) => Some(a.clone()),
            Law::Convolution { base, m } => {
                let b = base.atoms()?;
                Some(b.convolve_power(*m).scaled(1.0 / (*m as f64).sqrt()))
            }
            _ => None,
        }
    }

    /// Sampler for the law tilted by `e^{theta x - phi(theta)}`.
    fn sampler(&self, theta: f64) -> Sampler {
        match self {
            Law::Gaussian => Sampler::Normal { mean: theta },
            Law::Atoms(a) => Sampler::from_atoms(&a.tilted(theta)),
            Law::Uniform => Sampler::Uniform {
                half_width: SQRT3,
                theta,
            },
            Law::Exponential => Sampler::Exponential { rate: 1.0 - theta },
            Law::Poisson { rate } => {
                let tilted = rate * (theta / rate.sqrt()).exp();
                Sampler::Poisson {
                    dist: rand_distr::Poisson::new(tilted).expect("positive poisson rate"),
                    rate: *rate,
                }
            }
            Law::Convolution { base, m } => Sampler::Sum {
                base: Box::new(base.sampler(theta / (*m as f64).sqrt())),
                m: *m,
            },
            Law::Jittered { base, width, scale } => Sampler::Jitter {
                base: Box::new(base.sampler(theta / scale)),
                jitter: Box::new(Sampler::Uniform {
                    half_width: *width,
                    theta: theta / scale,
                }),
                scale: *scale,
            },
        }
    }

    /// `(alpha, D)` with `x^{-alpha} log P[X > x] -> -D`, when known.
    fn tail_exponent(&self) -> Option<(f64, f64)> {
        match self {
            Law::Exponential => Some((1.0, 1.0)),
            Law::Convolution { base, m } => {
                base.tail_exponent().map(|(a, d)| (a, d * (*m as f64).sqrt()))
            }
            Law::Jittered { base, scale, .. } => base.tail_exponent().map(|(a, d)| (a, d * scale)),
            _ => None,
        }
    }
}

/// Precomputed sampler for a (possibly tilted) standardized law.
#[derive(Debug, Clone)]
pub enum Sampler {
    Normal { mean: f64 },
    Two { lo: f64, hi: f64, p_hi: f64 },
    Table { values: Vec<f64>, cum: Vec<f64> },
    /// Density proportional to `e^{theta x}` on `[-half_width, half_width]`.
    Uniform { half_width: f64, theta: f64 },
    /// `E / rate - 1`.
    Exponential { rate: f64 },
    Poisson { dist: rand_distr::Poisson<f64>, rate: f64 },
    Sum { base: Box<Sampler>, m: u32 },
    Jitter { base: Box<Sampler>, jitter: Box<Sampler>, scale: f64 },
    Constant(f64),
}

impl Sampler {
    pub fn from_atoms(a: &Atoms) -> Sampler {
        match a.values.len() {
            1 => Sampler::Constant(a.values[0]),
            2 => Sampler::Two {
                lo: a.values[0],
                hi: a.values[1],
                p_hi: a.probs[1],
            },
            _ => {
                let mut cum = Vec::with_capacity(a.probs.len());
                let mut acc = 0.0;
                for p in &a.probs {
                    acc += p;
                    cum.push(acc);
                }
                Sampler::Table {
                    values: a.values.clone(),
                    cum,
                }
            }
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Normal { mean } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + z
            }
            Sampler::Two { lo, hi, p_hi } => {
                // 1 - U lies in (0, 1], so p_hi = 1 would never pick lo
                if 1.0 - rng.random::<f64>() <= *p_hi {
                    *hi
                } else {
                    *lo
                }
            }
            Sampler::Table { values, cum } => {
                let u: f64 = rng.random::<f64>() * cum[cum.len() - 1];
                let idx = cum.partition_point(|c| *c <= u).min(values.len() - 1);
                values[idx]
            }
            Sampler::Uniform { half_width, theta } => {
                let a = *half_width;
                let u = 1.0 - rng.random::<f64>();
                let ta = theta * a;
                if ta.abs() < 1e-9 {
                    a * (2.0 * u - 1.0)
                } else if *theta > 0.0 {
                    a + (u + (1.0 - u) * (-2.0 * ta).exp()).ln() / theta
                } else {
                    -a - (u + (1.0 - u) * (2.0 * ta).exp()).ln() / theta
                }
            }
            Sampler::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate - 1.0
            }
            Sampler::Poisson { dist, rate } => (dist.sample(rng) - rate) / rate.sqrt(),
            Sampler::Sum { base, m } => {
                let mut s = 0.0;
                for _ in 0..*m {
                    s += base.sample(rng);
                }
                s / (*m as f64).sqrt()
            }
            Sampler::Jitter {
                base,
                jitter,
                scale,
            } => (base.sample(rng) + jitter.sample(rng)) / scale,
            Sampler::Constant(c) => *c,
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.sample(rng);
        }
    }
}

/// A validated, standardized distribution together with its source spec.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    spec: FamilySpec,
    law: Law,
    lattice: Lattice,
}

impl DistributionSpec {
    pub fn new(spec: FamilySpec) -> Result<DistributionSpec> {
        let law = Law::resolve(&spec)?;
        let lattice = law.lattice();
        Ok(DistributionSpec { spec, law, lattice })
    }

    pub fn from_json(text: &str) -> Result<DistributionSpec> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Self::from_value(&mut value)
    }

    pub fn from_value(value: &mut serde_json::Value) -> Result<DistributionSpec> {
        fill_missing_params(value);
        let spec: FamilySpec =
            serde_json::from_value(value.clone()).map_err(|e| Error::Schema(e.to_string()))?;
        DistributionSpec::new(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.spec).expect("spec serializes")
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn family(&self) -> &'static str {
        self.spec.tag()
    }

    /// Supremum of the cgf domain.
    pub fn domain_right(&self) -> f64 {
        self.law.t_inf()
    }

    /// Infimum of the cgf domain. All supported laws have a finite cgf on
    /// the whole negative half-line.
    pub fn domain_left(&self) -> f64 {
        f64::NEG_INFINITY
    }

    /// Right endpoint of the support.
    pub fn support_right(&self) -> f64 {
        self.law.s_inf()
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        let right = self.domain_right();
        if t.is_nan() || t >= right {
            return Err(Error::Domain {
                t,
                side: "right",
                bound: right,
            });
        }
        Ok(())
    }

    pub fn cgf(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(self.law.cgf_d(t).0)
    }

    /// `(phi(t), phi'(t), phi''(t))`.
    pub fn cgf_d(&self, t: f64) -> Result<(f64, f64, f64)> {
        self.check_domain(t)?;
        Ok(self.law.cgf_d(t))
    }

    pub fn cumulant(&self, order: usize) -> Result<f64> {
        if order == 0 || order > MAX_CUMULANT_ORDER {
            return Err(Error::Capability(format!(
                "cumulants are available for orders 1..={MAX_CUMULANT_ORDER}, not {order}"
            )));
        }
        Ok(self.law.cumulants(order)[order])
    }

    /// Cumulants of orders `1..=8`, index 0 unused.
    pub fn cumulants(&self) -> Vec<f64> {
        self.law.cumulants(MAX_CUMULANT_ORDER)
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self.lattice, Lattice::Lattice { .. })
    }

    /// Finite support, when the law is discrete with finitely many atoms.
    pub fn atoms(&self) -> Option<Atoms> {
        self.law.atoms()
    }

    /// `(alpha, D)` tail constants for exponential-type tails, if known.
    pub fn tail_exponent(&self) -> Option<(f64, f64)> {
        self.law.tail_exponent()
    }

    pub fn sampler(&self) -> Sampler {
        self.law.sampler(0.0)
    }

    /// Sampler for the law reweighted by `e^{theta x - phi(theta)}`.
    pub fn tilted_sampler(&self, theta: f64) -> Result<Sampler> {
        self.check_domain(theta)?;
        Ok(self.law.sampler(theta))
    }

    /// `count` i.i.d. draws, fully determined by `seed`.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        let sampler = self.sampler();
        let mut out = vec![0.0; count];
        sampler.fill(&mut rng, &mut out);
        out
    }
}

impl Serialize for DistributionSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.spec.serialize(s)
    }
}

// Parameterless families may omit "params" entirely.
fn fill_missing_params(value: &mut serde_json::Value) {
    if let serde_json::Value::Object(map) = value {
        if !map.contains_key("params") {
            map.insert("params".into(), serde_json::Value::Object(Default::default()));
        }
        if let Some(serde_json::Value::Object(params)) = map.get_mut("params") {
            if let Some(base) = params.get_mut("base") {
                fill_missing_params(base);
            }
        }
    }
}
