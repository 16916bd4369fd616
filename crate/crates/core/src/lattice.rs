//! Exact distributions of partial sums of lattice laws by iterated
//! convolution on the integer grid.

use crate::dist::{Atoms, Lattice};
use crate::error::{Error, Result};

const PRUNE: f64 = 1e-300;
const TIE_TOL: f64 = 1e-9;

/// A law on `origin + span * {0, 1, ..., pmf.len() - 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePmf {
    pub origin: f64,
    pub span: f64,
    pub pmf: Vec<f64>,
}

impl LatticePmf {
    /// Write an atom law on its minimal lattice.
    pub fn from_atoms(atoms: &Atoms) -> Result<LatticePmf> {
        let span = match atoms.lattice() {
            Lattice::Lattice { span, .. } => span,
            Lattice::Nonlattice if atoms.values.len() == 1 => 1.0,
            Lattice::Nonlattice => {
                return Err(Error::Capability("law is not lattice".into()));
            }
        };
        let origin = atoms.values[0];
        let top = ((atoms.values[atoms.values.len() - 1] - origin) / span).round() as usize;
        let mut pmf = vec![0.0; top + 1];
        for (v, p) in atoms.values.iter().zip(&atoms.probs) {
            pmf[((v - origin) / span).round() as usize] += p;
        }
        Ok(LatticePmf { origin, span, pmf })
    }

    pub fn point(value: f64) -> LatticePmf {
        LatticePmf {
            origin: value,
            span: 1.0,
            pmf: vec![1.0],
        }
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.origin + self.span * idx as f64
    }

    /// Law of `self + step`, both on the same span.
    pub fn convolve(&self, step: &LatticePmf) -> LatticePmf {
        let mut out = vec![0.0; self.pmf.len() + step.pmf.len() - 1];
        for (i, &a) in self.pmf.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in step.pmf.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        let mut res = LatticePmf {
            origin: self.origin + step.origin,
            span: self.span,
            pmf: out,
        };
        res.prune();
        res
    }

    /// Drop negligible mass at both ends.
    fn prune(&mut self) {
        for p in self.pmf.iter_mut() {
            if *p < PRUNE {
                *p = 0.0;
            }
        }
        let first = self.pmf.iter().position(|p| *p > 0.0).unwrap_or(0);
        let last = self.pmf.iter().rposition(|p| *p > 0.0).unwrap_or(0);
        if first > 0 || last + 1 < self.pmf.len() {
            self.pmf = self.pmf[first..=last.max(first)].to_vec();
            self.origin += self.span * first as f64;
        }
    }

    /// Index range `[lo, ..)` of values `>= x` (or `> x` when `strict`),
    /// treating values within rounding distance of `x` as equal to it.
    fn first_index_above(&self, x: f64, strict: bool) -> usize {
        let c = (x - self.origin) / self.span;
        let tol = TIE_TOL * (1.0 + c.abs());
        let idx = if strict {
            (c + tol).floor() + 1.0
        } else {
            (c - tol).ceil()
        };
        idx.max(0.0).min(self.pmf.len() as f64) as usize
    }

    /// `P[V >= x]`.
    pub fn tail_ge(&self, x: f64) -> f64 {
        self.pmf[self.first_index_above(x, false)..].iter().rev().sum()
    }

    /// `P[V > x]`.
    pub fn tail_gt(&self, x: f64) -> f64 {
        self.pmf[self.first_index_above(x, true)..].iter().rev().sum()
    }

    /// `P[V <= x]`.
    pub fn cdf_le(&self, x: f64) -> f64 {
        self.pmf[..self.first_index_above(x, true)].iter().sum()
    }

    /// Restrict to values `< x` (or `<= x` when `inclusive`), leaving the
    /// removed mass out.
    pub fn kill_at_or_above(&mut self, x: f64, inclusive_ok: bool) {
        let cut = self.first_index_above(x, inclusive_ok);
        for p in self.pmf[cut..].iter_mut() {
            *p = 0.0;
        }
    }

    pub fn mass(&self) -> f64 {
        self.pmf.iter().sum()
    }
}

/// Exact laws of `S_1, ..., S_kmax` for i.i.d. steps.
pub fn partial_sum_laws(step: &LatticePmf, kmax: usize) -> Vec<LatticePmf> {
    let mut out = Vec::with_capacity(kmax);
    let mut cur = step.clone();
    for _ in 0..kmax {
        out.push(cur.clone());
        cur = cur.convolve(step);
    }
    out
}

/// Exact law of `S_k`.
pub fn sum_law(step: &LatticePmf, k: usize) -> LatticePmf {
    let mut cur = step.clone();
    for _ in 1..k {
        cur = cur.convolve(step);
    }
    cur
}
