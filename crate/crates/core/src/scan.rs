//! Exact evaluation of `max (S_j - S_i) / sqrt(j - i)` over all or some
//! interval lengths, and the streaming hitting time of a level.
//!
//! Ties are broken by the smallest `i`, then the smallest `j`.

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::numeric::prefix_sums;
use crate::rng::stream_rng;

/// `s[0] = 0`, `s[k] = x_1 + ... + x_k`, summed with compensation.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixSums {
    s: Vec<f64>,
}

impl PrefixSums {
    pub fn new(data: &[f64]) -> PrefixSums {
        PrefixSums {
            s: prefix_sums(data),
        }
    }

    pub fn n(&self) -> usize {
        self.s.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.s
    }

    #[inline]
    pub fn window(&self, i: usize, j: usize) -> f64 {
        (self.s[j] - self.s[i]) / ((j - i) as f64).sqrt()
    }

    /// `max_{i < j} s[j] - s[i]`, an upper bound for every window increment.
    pub fn max_increment(&self) -> f64 {
        let mut lo = self.s[0];
        let mut best = f64::NEG_INFINITY;
        for &v in &self.s[1..] {
            best = best.max(v - lo);
            lo = lo.min(v);
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanResult {
    pub value: f64,
    pub i: usize,
    pub j: usize,
    pub length: usize,
    pub h1: usize,
    pub h2: usize,
}

impl ScanResult {
    fn beats(&self, other: &ScanResult) -> bool {
        self.value > other.value
            || (self.value == other.value && (self.i, self.j) < (other.i, other.j))
    }
}

fn better(a: Option<ScanResult>, b: Option<ScanResult>) -> Option<ScanResult> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.beats(&x) { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

fn check(n: usize, h1: usize, h2: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Argument("data is empty".into()));
    }
    if h1 == 0 || h1 > h2 || h1 > n {
        return Err(Error::Argument(format!(
            "need 1 <= h1 <= h2 and h1 <= n, got h1={h1}, h2={h2}, n={n}"
        )));
    }
    Ok(())
}

/// Exhaustive maximum over all `0 <= i < j <= n`.
pub fn scan_full(data: &[f64]) -> Result<ScanResult> {
    check(data.len(), 1, data.len())?;
    let ps = PrefixSums::new(data);
    let n = ps.n();
    let mut best = ScanResult {
        value: f64::NEG_INFINITY,
        i: 0,
        j: 1,
        length: 1,
        h1: 1,
        h2: n,
    };
    for i in 0..n {
        for j in i + 1..=n {
            let v = ps.window(i, j);
            if v > best.value {
                best.value = v;
                best.i = i;
                best.j = j;
            }
        }
    }
    best.length = best.j - best.i;
    Ok(best)
}

// Largest `s[i + l] - s[i]` over `i`; four lanes so the loop vectorizes.
#[inline]
fn max_increment_at(s: &[f64], l: usize) -> f64 {
    let hi = &s[l..];
    let lo = &s[..s.len() - l];
    let mut acc = [f64::NEG_INFINITY; 4];
    let chunks = hi.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            let d = hi[4 * c + k] - lo[4 * c + k];
            acc[k] = if d > acc[k] { d } else { acc[k] };
        }
    }
    let mut m = acc[0].max(acc[1]).max(acc[2].max(acc[3]));
    for k in 4 * chunks..hi.len() {
        m = m.max(hi[k] - lo[k]);
    }
    m
}

/// Best window of one length, provided it can reach `floor`.
fn best_of_length(ps: &PrefixSums, l: usize, floor: f64) -> Option<(f64, usize)> {
    let s = ps.as_slice();
    let root = (l as f64).sqrt();
    let top = max_increment_at(s, l) / root;
    if top < floor {
        return None;
    }
    let i = (0..s.len() - l).find(|&i| (s[i + l] - s[i]) / root == top)?;
    Some((top, i))
}

/// Maximum over windows with length in `lengths`, visiting lengths in
/// increasing order and stopping once `max_increment / sqrt(l)` falls below
/// the running best.
pub fn scan_lengths(ps: &PrefixSums, lengths: &[(usize, usize)]) -> Option<ScanResult> {
    let n = ps.n();
    let bound = ps.max_increment();
    let mut ranges: Vec<(usize, usize)> = lengths
        .iter()
        .map(|&(a, b)| (a.max(1), b.min(n)))
        .filter(|(a, b)| a <= b)
        .collect();
    ranges.sort_unstable();
    let (h1, h2) = match (ranges.first(), ranges.iter().map(|r| r.1).max()) {
        (Some(f), Some(h2)) => (f.0, h2),
        _ => return None,
    };
    let mut best: Option<ScanResult> = None;
    let mut next = 0usize;
    'outer: for (a, b) in ranges {
        for l in a.max(next)..=b {
            let floor = best.map_or(f64::NEG_INFINITY, |r| r.value);
            if bound / (l as f64).sqrt() < floor {
                break 'outer;
            }
            if let Some((v, i)) = best_of_length(ps, l, floor) {
                let cand = ScanResult {
                    value: v,
                    i,
                    j: i + l,
                    length: l,
                    h1,
                    h2,
                };
                best = better(best, Some(cand));
            }
            next = l + 1;
        }
    }
    best
}

/// Exact maximum over `h1 <= j - i <= h2`.
pub fn scan_restricted(data: &[f64], h1: usize, h2: usize) -> Result<ScanResult> {
    check(data.len(), h1, h2)?;
    let ps = PrefixSums::new(data);
    let h2 = h2.min(ps.n());
    let mut r = if (h2 - h1 + 1) * ps.n() < 1 << 22 {
        scan_lengths(&ps, &[(h1, h2)])
    } else {
        parallel_scan(&ps, h1, h2)
    }
    .expect("nonempty length range");
    r.h1 = h1;
    r.h2 = h2;
    Ok(r)
}

const LENGTH_CHUNK: usize = 64;

// Fixed chunk boundaries; the tie rule makes the reduction order irrelevant.
fn parallel_scan(ps: &PrefixSums, h1: usize, h2: usize) -> Option<ScanResult> {
    let starts: Vec<usize> = (h1..=h2).step_by(LENGTH_CHUNK).collect();
    starts
        .par_iter()
        .map(|&a| scan_lengths(ps, &[(a, (a + LENGTH_CHUNK - 1).min(h2))]))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None, better)
}

/// Scans of the data and of its negation.
pub fn scan_two_sided(data: &[f64], h1: usize, h2: usize) -> Result<(ScanResult, ScanResult)> {
    let plus = scan_restricted(data, h1, h2)?;
    let neg: Vec<f64> = data.iter().map(|x| -x).collect();
    let minus = scan_restricted(&neg, h1, h2)?;
    Ok((plus, minus))
}

/// Observation series from CSV (first column) or one number per line.
/// A non-numeric first line is taken as a header.
pub fn parse_series(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim().trim_matches('"');
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ if k == 0 => continue,
            _ => {
                return Err(Error::Schema(format!(
                    "line {}: cannot read {field:?} as a number",
                    k + 1
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Argument("no observations found".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingTime {
    /// First `n` with `M_n > u`, if reached by `n_cap`.
    pub time: Option<u64>,
    pub u: f64,
    pub n_cap: u64,
    /// Only windows up to this length were examined.
    pub window_cap: Option<u64>,
}

/// First time the scan of a freshly simulated walk exceeds `u`.
pub fn hitting_time(
    dist: &DistributionSpec,
    u: f64,
    seed: u64,
    n_cap: u64,
    window_cap: Option<u64>,
) -> Result<HittingTime> {
    hitting_time_stream(dist, u, seed, 0, n_cap, window_cap)
}

/// As `hitting_time`, drawing from stream `stream` of `seed`.
pub fn hitting_time_stream(
    dist: &DistributionSpec,
    u: f64,
    seed: u64,
    stream: u64,
    n_cap: u64,
    window_cap: Option<u64>,
) -> Result<HittingTime> {
    if n_cap == 0 {
        return Err(Error::Argument("n_cap must be positive".into()));
    }
    if window_cap == Some(0) {
        return Err(Error::Argument("window_cap must be positive".into()));
    }
    let sampler = dist.sampler();
    let mut rng = stream_rng(seed, stream);
    let w = window_cap.map_or(usize::MAX, |w| w as usize);
    let inv_roots: Vec<f64> = (1..=w.min(n_cap as usize))
        .map(|l| 1.0 / (l as f64).sqrt())
        .collect();
    // most recent prefix sums, newest last: ring of capacity w + 1
    let cap = if window_cap.is_some() {
        w + 1
    } else {
        n_cap as usize + 1
    };
    let mut ring = vec![0.0f64; cap.min(n_cap as usize + 1)];
    let len = ring.len();
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut time = None;
    for n in 1..=n_cap as usize {
        let x = sampler.sample(&mut rng);
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        ring[n % len] = sum;
        let reach = n.min(w);
        let mut hit = false;
        for l in 1..=reach {
            if (sum - ring[(n - l) % len]) * inv_roots[l - 1] > u {
                hit = true;
                break;
            }
        }
        if hit {
            time = Some(n as u64);
            break;
        }
    }
    Ok(HittingTime {
        time,
        u,
        n_cap,
        window_cap,
    })
}
