//! Scalar leakage measures.
//!
//! Logarithms are natural throughout, matching the `e^ε` convention.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};
use serde::Serialize;

use crate::channel::{ChannelMatrix, GainFunction, Prior};
use crate::error::{Error, Result};
use crate::mechanisms::{analytic_params, bitwise_params, rr_probs, MechanismSpec, Protocol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureTag {
    GAverage,
    GMaxCase,
    Bayes,
    MinEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeakageReport {
    pub prior_vulnerability: f64,
    pub posterior_vulnerability: f64,
    pub multiplicative_leakage: f64,
    pub measure_tag: MeasureTag,
}

impl LeakageReport {
    fn new(prior: f64, posterior: f64, tag: MeasureTag) -> Self {
        let ratio = if prior > 0.0 { posterior / prior } else { f64::INFINITY };
        LeakageReport {
            prior_vulnerability: prior,
            posterior_vulnerability: posterior,
            multiplicative_leakage: ratio,
            measure_tag: tag,
        }
    }
}

fn check_dims(g: &GainFunction, prior: &Prior, c: Option<&ChannelMatrix>) -> Result<()> {
    if g.secrets() != prior.len() {
        return Err(Error::DimensionMismatch(format!(
            "gain function covers {} secrets, prior {}",
            g.secrets(),
            prior.len()
        )));
    }
    if let Some(c) = c {
        if c.rows() != prior.len() {
            return Err(Error::DimensionMismatch(format!(
                "channel has {} rows, prior {} entries",
                c.rows(),
                prior.len()
            )));
        }
    }
    Ok(())
}

/// `V_g(π) = max_w Σ_x π_x g(w, x)`.
pub fn prior_vulnerability(g: &GainFunction, prior: &Prior) -> Result<f64> {
    check_dims(g, prior, None)?;
    let pi = prior.weights();
    Ok((0..g.actions())
        .map(|w| pi.iter().enumerate().map(|(x, p)| p * g.gain(w, x)).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `V_g(π, C) = Σ_y max_w Σ_x π_x C_{x,y} g(w, x)`.
pub fn posterior_vulnerability(g: &GainFunction, prior: &Prior, c: &ChannelMatrix) -> Result<f64> {
    check_dims(g, prior, Some(c))?;
    let pi = prior.weights();
    let mut total = 0.0;
    let mut joint = vec![0.0; c.rows()];
    for y in 0..c.cols() {
        for (x, j) in joint.iter_mut().enumerate() {
            *j = pi[x] * c.get(x, y);
        }
        total += (0..g.actions())
            .map(|w| joint.iter().enumerate().map(|(x, j)| j * g.gain(w, x)).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
    }
    Ok(total)
}

/// Max-case vulnerability: `max_{w,x} π_x g(w,x)` for the prior form and
/// `max_{y,x,w} π_x C_{x,y} g(w,x)` for the posterior form.
pub fn max_case_vulnerability(
    g: &GainFunction,
    prior: &Prior,
    c: &ChannelMatrix,
    posterior: bool,
) -> Result<f64> {
    check_dims(g, prior, Some(c))?;
    let pi = prior.weights();
    let mut best = f64::NEG_INFINITY;
    for w in 0..g.actions() {
        for (x, p) in pi.iter().enumerate() {
            let base = p * g.gain(w, x);
            if posterior {
                for y in 0..c.cols() {
                    best = best.max(base * c.get(x, y));
                }
            } else {
                best = best.max(base);
            }
        }
    }
    Ok(best)
}

pub fn average_case_leakage(g: &GainFunction, prior: &Prior, c: &ChannelMatrix) -> Result<LeakageReport> {
    let before = prior_vulnerability(g, prior)?;
    let after = posterior_vulnerability(g, prior, c)?;
    Ok(LeakageReport::new(before, after, MeasureTag::GAverage))
}

pub fn max_case_leakage(g: &GainFunction, prior: &Prior, c: &ChannelMatrix) -> Result<LeakageReport> {
    let before = max_case_vulnerability(g, prior, c, false)?;
    let after = max_case_vulnerability(g, prior, c, true)?;
    Ok(LeakageReport::new(before, after, MeasureTag::GMaxCase))
}

/// Bayes leakage under the uniform prior; the multiplicative leakage is the
/// Bayes capacity.
pub fn bayes_leakage(c: &ChannelMatrix) -> LeakageReport {
    let k = c.rows() as f64;
    LeakageReport::new(1.0 / k, asr(c), MeasureTag::Bayes)
}

/// Sum of column maxima. All-zero columns contribute nothing.
pub fn bayes_capacity(c: &ChannelMatrix) -> f64 {
    (0..c.cols())
        .map(|y| c.column(y).fold(0.0, f64::max))
        .sum()
}

/// Adversarial success rate: Bayes vulnerability under the uniform prior.
pub fn asr(c: &ChannelMatrix) -> f64 {
    bayes_capacity(c) / c.rows() as f64
}

pub fn min_entropy_leakage(c: &ChannelMatrix) -> f64 {
    bayes_capacity(c).ln()
}

/// Tightest LDP budget of a channel: `ln max_y (max_x C_{x,y} / min_x C_{x,y})`.
/// Infinite when some column mixes zero and nonzero entries.
pub fn epsilon_of(c: &ChannelMatrix) -> f64 {
    let mut worst: f64 = 1.0;
    for y in 0..c.cols() {
        let (lo, hi) = c
            .column(y)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if hi == 0.0 {
            continue;
        }
        if lo == 0.0 {
            return f64::INFINITY;
        }
        worst = worst.max(hi / lo);
    }
    worst.ln()
}

/// `(1 - a)^n` computed through `ln1p`.
fn pow_one_minus(a: f64, n: f64) -> f64 {
    (n * (-a).ln_1p()).exp()
}


/// Closed-form Bayes capacity per protocol.
pub fn bayes_capacity_closed(spec: &MechanismSpec) -> Result<f64> {
    let k = spec.k();
    let kf = k as f64;
    let eps = spec.epsilon();
    let value = match spec.protocol() {
        Protocol::Grr => kf * rr_probs(k, eps).0,
        Protocol::Ss => {
            let omega = spec
                .omega()
                .ok_or_else(|| Error::UnsupportedSpec("SS spec without omega".into()))?;
            let w = omega as f64;
            let p = analytic_params(spec).p;
            // C(k,ω)·p/C(k-1,ω-1) = pk/ω and C(k,ω)·(1-p)/C(k-1,ω) = (1-p)k/(k-ω).
            (p * kf / w).max((1.0 - p) * kf / (kf - w))
        }
        Protocol::Blh | Protocol::Olh => {
            let g = spec
                .g()
                .ok_or_else(|| Error::UnsupportedSpec("LH spec without g".into()))?;
            lh_capacity(k, g, eps)
        }
        Protocol::Sue => {
            // (p/q)(1 - p^k) + p^(k-1) q with p = 1/(1+h), q = h/(1+h), h = e^{-ε/2}.
            let h = (-eps / 2.0).exp();
            let ln_p = -h.ln_1p();
            let q = h / (1.0 + h);
            -(kf * ln_p).exp_m1() / h + ((kf - 1.0) * ln_p).exp() * q
        }
        Protocol::Oue => {
            let q = bitwise_params(crate::mechanisms::BitwiseProtocol::Oue, eps, None)?.q;
            // (1/(2q))((1-q)^(k-1)(2q-1) + 1) = (1 - (1-q)^(k-1)(1-2q)) / (2q)
            let log_term = (kf - 1.0) * (-q).ln_1p() + (-2.0 * q).ln_1p();
            -log_term.exp_m1() / (2.0 * q)
        }
        Protocol::The => {
            let bp = bitwise_params(crate::mechanisms::BitwiseProtocol::The, eps, spec.theta())?;
            // (1-q)^(k-1)(1 - p/q) + p/q, regrouped to avoid cancellation.
            let log_stay = (kf - 1.0) * (-bp.q).ln_1p();
            (bp.p / bp.q) * -log_stay.exp_m1() + log_stay.exp()
        }
    };
    Ok(value)
}

/// LH Bayes capacity `(e^ε g^k + (g-1)^k (1-e^ε)) / ((e^ε+g-1) g^(k-1))`,
/// rearranged as `g (1 + r(e^{-ε} - 1)) / (1 + (g-1)e^{-ε})` with
/// `r = ((g-1)/g)^k` so that large `k`, `g` or `ε` stay finite.
fn lh_capacity(k: usize, g: usize, epsilon: f64) -> f64 {
    let gf = g as f64;
    let t = (-epsilon).exp();
    let r = pow_one_minus(1.0 / gf, k as f64);
    gf * (1.0 + r * (t - 1.0)) / (1.0 + (gf - 1.0) * t)
}

/// Expected ASR of local hashing over the full function family.
pub fn lh_asr_closed(k: usize, g: usize, epsilon: f64) -> f64 {
    lh_capacity(k, g, epsilon) / k as f64
}

/// The same formula over exact rationals, with `e^ε` supplied directly.
pub fn lh_asr_closed_exact(k: usize, g: usize, exp_epsilon: &BigRational) -> BigRational {
    let one = BigRational::one();
    let gr = BigRational::from_integer(BigInt::from(g));
    let kr = BigRational::from_integer(BigInt::from(k));
    let g_k: BigRational = Pow::pow(&gr, k as u32);
    let g_k1: BigRational = Pow::pow(&gr, k as u32 - 1);
    let gm1_k: BigRational = Pow::pow(&(&gr - &one), k as u32);
    let num = exp_epsilon * &g_k + gm1_k * (&one - exp_epsilon);
    let den = (exp_epsilon + &gr - &one) * kr * g_k1;
    num / den
}

/// The earlier, small-`k`-inaccurate LH ASR estimate
/// `e^ε / ((e^ε+g-1) max(k/g, 1))`. Kept for comparison only.
pub fn lh_asr_prior_work(k: usize, g: usize, epsilon: f64) -> f64 {
    let p = rr_probs(g, epsilon).0;
    p / (k as f64 / g as f64).max(1.0)
}
