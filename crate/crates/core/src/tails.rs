//! Moderate and large deviation approximations for `P[S_k / sqrt(k) > x]`,
//! the Chernoff bound, and exact lattice tails used to check them.

use serde::Serialize;

use crate::cgf::{cramer_lambda, rate};
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::lattice::{sum_law, LatticePmf};
use crate::numeric::normal_sf;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Which closed form of the moderate deviation approximation to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CramerForm {
    /// `exp(-k I(x/sqrt k)) / (sqrt(2 pi) x)`
    Mills,
    /// `Phi_bar(x) exp(x^3/sqrt(k) lambda(x/sqrt k))`
    Series,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailApprox {
    pub k: u64,
    pub x: f64,
    pub value: f64,
    pub form: CramerForm,
    /// `x` is so small that the Mills form is dominated by its `1/x` factor.
    pub clt_regime: bool,
    pub warning: Option<String>,
}

fn check_query(k: u64, x: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::Argument("k must be positive".into()));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Argument(format!("x must be positive, got {x}")));
    }
    Ok(())
}

pub fn cramer_tail(dist: &DistributionSpec, k: u64, x: f64, form: CramerForm) -> Result<TailApprox> {
    check_query(k, x)?;
    let kf = k as f64;
    let alpha = x / kf.sqrt();
    let warning = if x >= kf.powf(0.49) {
        Some(format!("x = {x} is outside the moderate regime x < k^0.49"))
    } else {
        None
    };
    let value = match form {
        CramerForm::Mills => {
            let i = rate(dist, alpha)?.value;
            INV_SQRT_2PI / x * (-kf * i).exp()
        }
        CramerForm::Series => {
            let lam = cramer_lambda(dist, alpha)?;
            normal_sf(x) * (x * x * x / kf.sqrt() * lam).exp()
        }
    };
    Ok(TailApprox {
        k,
        x,
        value,
        form,
        clt_regime: x < 1e-3,
        warning,
    })
}

/// Bahadur-Rao approximation; defined for nonlattice laws only.
pub fn bahadur_rao_tail(dist: &DistributionSpec, k: u64, x: f64) -> Result<f64> {
    check_query(k, x)?;
    if dist.is_lattice() {
        return Err(Error::Capability(
            "the Bahadur-Rao approximation assumes a nonlattice law".into(),
        ));
    }
    let kf = k as f64;
    let r = rate(dist, x / kf.sqrt())?;
    let sigma = (1.0 / r.d2).sqrt();
    Ok((-kf * r.value).exp() / ((2.0 * std::f64::consts::PI * kf).sqrt() * r.d1 * sigma))
}

/// Rigorous bound `P[S_k/sqrt k > x] <= exp(-k I(x / sqrt k))`.
pub fn chernoff_bound(dist: &DistributionSpec, k: u64, x: f64) -> Result<f64> {
    check_query(k, x)?;
    let kf = k as f64;
    let alpha = x / kf.sqrt();
    let s_inf = dist.support_right();
    if alpha > s_inf * (1.0 + 1e-12) {
        return Ok(0.0);
    }
    if alpha >= s_inf * (1.0 - 1e-12) {
        // at the top of the support I equals -log P[X = s_inf]
        return Ok(match dist.atoms() {
            Some(a) => a.probs[a.probs.len() - 1].powf(kf),
            None => 0.0,
        });
    }
    Ok((-kf * rate(dist, alpha)?.value).exp())
}

/// Exact law of `S_k` for a lattice law with finitely many atoms.
pub fn exact_sum_law(dist: &DistributionSpec, k: u64) -> Result<LatticePmf> {
    let atoms = dist
        .atoms()
        .ok_or_else(|| Error::Capability("exact tails need a finite lattice law".into()))?;
    let step = LatticePmf::from_atoms(&atoms)?;
    Ok(sum_law(&step, k as usize))
}

/// Exact `P[S_k / sqrt k >= x]` (or `> x` when `strict`).
pub fn exact_tail(dist: &DistributionSpec, k: u64, x: f64, strict: bool) -> Result<f64> {
    let law = exact_sum_law(dist, k)?;
    let thr = x * (k as f64).sqrt();
    Ok(if strict { law.tail_gt(thr) } else { law.tail_ge(thr) })
}
