//! Exact channel matrices for the frequency-estimation protocols.
//!
//! Each builder returns a validated [`ChannelMatrix`]. Probabilities are
//! written in terms of `e^{-ε}` so that very large budgets do not overflow.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{check_size, index_labels, ChannelMatrix, DEFAULT_SIZE_CAP};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "GRR")]
    Grr,
    #[serde(rename = "SS")]
    Ss,
    #[serde(rename = "BLH")]
    Blh,
    #[serde(rename = "OLH")]
    Olh,
    #[serde(rename = "SUE")]
    Sue,
    #[serde(rename = "OUE")]
    Oue,
    #[serde(rename = "THE")]
    The,
}

impl Protocol {
    pub const ALL: [Protocol; 7] = [
        Protocol::Grr,
        Protocol::Ss,
        Protocol::Blh,
        Protocol::Olh,
        Protocol::Sue,
        Protocol::Oue,
        Protocol::The,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Grr => "GRR",
            Protocol::Ss => "SS",
            Protocol::Blh => "BLH",
            Protocol::Olh => "OLH",
            Protocol::Sue => "SUE",
            Protocol::Oue => "OUE",
            Protocol::The => "THE",
        }
    }

    pub fn is_local_hashing(self) -> bool {
        matches!(self, Protocol::Blh | Protocol::Olh)
    }

    /// The per-bit protocol behind a unary-encoding style protocol.
    pub fn bitwise(self) -> Option<BitwiseProtocol> {
        match self {
            Protocol::Sue => Some(BitwiseProtocol::Sue),
            Protocol::Oue => Some(BitwiseProtocol::Oue),
            Protocol::The => Some(BitwiseProtocol::The),
            _ => None,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidSpec(format!("unknown protocol {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BitwiseProtocol {
    #[serde(rename = "SUE")]
    Sue,
    #[serde(rename = "OUE")]
    Oue,
    #[serde(rename = "THE")]
    The,
}

impl BitwiseProtocol {
    pub fn protocol(self) -> Protocol {
        match self {
            BitwiseProtocol::Sue => Protocol::Sue,
            BitwiseProtocol::Oue => Protocol::Oue,
            BitwiseProtocol::The => Protocol::The,
        }
    }
}

impl fmt::Display for BitwiseProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.protocol().fmt(f)
    }
}

/// A protocol instance. Construction resolves defaults (`g` for the LH
/// family, `ω` for SS) and rejects parameters that do not belong to the
/// protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr")]
pub struct MechanismSpec {
    protocol: Protocol,
    k: usize,
    epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    g: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecRepr {
    protocol: Protocol,
    k: usize,
    epsilon: f64,
    #[serde(default)]
    omega: Option<usize>,
    #[serde(default)]
    g: Option<usize>,
    #[serde(default)]
    theta: Option<f64>,
}

impl TryFrom<SpecRepr> for MechanismSpec {
    type Error = Error;

    fn try_from(r: SpecRepr) -> Result<Self> {
        MechanismSpec::build(r.protocol, r.k, r.epsilon, r.omega, r.g, r.theta)
    }
}

/// Round half to even.
pub fn round_half_even(x: f64) -> f64 {
    x.round_ties_even()
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeEpsilon(epsilon))
    }
}

fn check_k(k: usize) -> Result<()> {
    if k >= 2 {
        Ok(())
    } else {
        Err(Error::InvalidDomainSize(k))
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.5 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::ThetaOutOfRange(theta))
    }
}

/// OLH hash range `round(e^ε + 1)`.
pub fn olh_optimal_g(epsilon: f64) -> usize {
    let g = round_half_even(epsilon.exp() + 1.0);
    if g >= usize::MAX as f64 {
        usize::MAX
    } else {
        g as usize
    }
}

impl MechanismSpec {
    pub fn build(
        protocol: Protocol,
        k: usize,
        epsilon: f64,
        omega: Option<usize>,
        g: Option<usize>,
        theta: Option<f64>,
    ) -> Result<Self> {
        check_k(k)?;
        check_epsilon(epsilon)?;
        let name = protocol.name();
        if omega.is_some() && protocol != Protocol::Ss {
            return Err(Error::InvalidSpec(format!("{name} does not take omega")));
        }
        if g.is_some() && !protocol.is_local_hashing() {
            return Err(Error::InvalidSpec(format!("{name} does not take g")));
        }
        if theta.is_some() && protocol != Protocol::The {
            return Err(Error::InvalidSpec(format!("{name} does not take theta")));
        }
        let mut spec = MechanismSpec {
            protocol,
            k,
            epsilon,
            omega: None,
            g: None,
            theta: None,
        };
        match protocol {
            Protocol::Ss => {
                let w = omega.unwrap_or_else(|| ss_optimal_omega(k, epsilon));
                if w == 0 || w >= k {
                    return Err(Error::OmegaOutOfRange { omega: w, max: k - 1 });
                }
                spec.omega = Some(w);
            }
            Protocol::Blh => {
                if let Some(g) = g.filter(|&g| g != 2) {
                    return Err(Error::InvalidSpec(format!("BLH fixes g = 2, got {g}")));
                }
                spec.g = Some(2);
            }
            Protocol::Olh => {
                let g = g.unwrap_or_else(|| olh_optimal_g(epsilon));
                if g < 2 {
                    return Err(Error::InvalidHashRange(g));
                }
                spec.g = Some(g);
            }
            Protocol::The => {
                let t = theta.ok_or(Error::ThetaRequired("THE"))?;
                check_theta(t)?;
                spec.theta = Some(t);
            }
            Protocol::Grr | Protocol::Sue | Protocol::Oue => {}
        }
        Ok(spec)
    }

    /// Spec with every optional parameter at its default. Fails for THE,
    /// which has no default threshold.
    pub fn new(protocol: Protocol, k: usize, epsilon: f64) -> Result<Self> {
        Self::build(protocol, k, epsilon, None, None, None)
    }

    pub fn grr(k: usize, epsilon: f64) -> Result<Self> {
        Self::new(Protocol::Grr, k, epsilon)
    }

    pub fn ss(k: usize, epsilon: f64, omega: Option<usize>) -> Result<Self> {
        Self::build(Protocol::Ss, k, epsilon, omega, None, None)
    }

    pub fn blh(k: usize, epsilon: f64) -> Result<Self> {
        Self::new(Protocol::Blh, k, epsilon)
    }

    pub fn olh(k: usize, epsilon: f64, g: Option<usize>) -> Result<Self> {
        Self::build(Protocol::Olh, k, epsilon, None, g, None)
    }

    pub fn sue(k: usize, epsilon: f64) -> Result<Self> {
        Self::new(Protocol::Sue, k, epsilon)
    }

    pub fn oue(k: usize, epsilon: f64) -> Result<Self> {
        Self::new(Protocol::Oue, k, epsilon)
    }

    pub fn the(k: usize, epsilon: f64, theta: f64) -> Result<Self> {
        Self::build(Protocol::The, k, epsilon, None, None, Some(theta))
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn omega(&self) -> Option<usize> {
        self.omega
    }

    pub fn g(&self) -> Option<usize> {
        self.g
    }

    pub fn theta(&self) -> Option<f64> {
        self.theta
    }

    /// Same parameters at a different budget. LH `g` and SS `ω` are carried
    /// over as set, not re-optimized.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::build(self.protocol, self.k, epsilon, self.omega, self.g, self.theta)
    }

    pub fn channel(&self) -> Result<ChannelMatrix> {
        self.channel_with_cap(DEFAULT_SIZE_CAP)
    }

    pub fn channel_with_cap(&self, cap: usize) -> Result<ChannelMatrix> {
        let (k, eps) = (self.k, self.epsilon);
        match self.protocol {
            Protocol::Grr => {
                check_size(k as u128, k as u128, cap)?;
                grr_channel(k, eps)
            }
            Protocol::Ss => ss_channel(k, eps, self.omega, cap),
            Protocol::Blh | Protocol::Olh => lh_channel(k, self.g.unwrap_or(2), eps, cap),
            Protocol::Sue => onehot_channel(BitwiseProtocol::Sue, k, eps, None, cap),
            Protocol::Oue => onehot_channel(BitwiseProtocol::Oue, k, eps, None, cap),
            Protocol::The => onehot_channel(BitwiseProtocol::The, k, eps, self.theta, cap),
        }
    }
}

impl fmt::Display for MechanismSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(k={}, eps={}", self.protocol, self.k, self.epsilon)?;
        if let Some(w) = self.omega {
            write!(f, ", omega={w}")?;
        }
        if let Some(g) = self.g {
            write!(f, ", g={g}")?;
        }
        if let Some(t) = self.theta {
            write!(f, ", theta={t}")?;
        }
        f.write_str(")")
    }
}

/// Randomized response on `n` values: `(p, q)` with `p/q = e^ε`.
pub(crate) fn rr_probs(n: usize, epsilon: f64) -> (f64, f64) {
    let t = (-epsilon).exp();
    let denom = 1.0 + (n as f64 - 1.0) * t;
    (1.0 / denom, t / denom)
}

pub fn grr_channel(k: usize, epsilon: f64) -> Result<ChannelMatrix> {
    check_k(k)?;
    check_epsilon(epsilon)?;
    let (p, q) = rr_probs(k, epsilon);
    let mut entries = vec![q; k * k];
    for i in 0..k {
        entries[i * k + i] = p;
    }
    ChannelMatrix::normalized(k, k, entries, index_labels(k), index_labels(k))
}

pub fn ss_optimal_omega(k: usize, epsilon: f64) -> usize {
    let w = round_half_even(k as f64 / (epsilon.exp() + 1.0));
    (w as usize).max(1)
}

/// Probability that SS includes the true value.
pub(crate) fn ss_inclusion(k: usize, omega: usize, epsilon: f64) -> f64 {
    let w = omega as f64;
    w / (w + (k as f64 - w) * (-epsilon).exp())
}

/// `C(n, r)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) / (i + 1) stays integral at every step.
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

/// All `r`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if r > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..r).collect();
    loop {
        out.push(cur.clone());
        let mut i = r;
        while i > 0 && cur[i - 1] == n - r + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..r {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

pub(crate) fn subset_label(s: &[usize]) -> String {
    let inner: Vec<String> = s.iter().map(usize::to_string).collect();
    format!("{{{}}}", inner.join(","))
}

/// Subset selection. Columns are the `ω`-subsets of `[k]` in lexicographic
/// order.
pub fn ss_channel(k: usize, epsilon: f64, omega: Option<usize>, cap: usize) -> Result<ChannelMatrix> {
    check_k(k)?;
    check_epsilon(epsilon)?;
    let omega = omega.unwrap_or_else(|| ss_optimal_omega(k, epsilon));
    if omega == 0 || omega >= k {
        return Err(Error::OmegaOutOfRange { omega, max: k - 1 });
    }
    let cols = binomial(k, omega);
    check_size(k as u128, cols, cap)?;
    let p = ss_inclusion(k, omega, epsilon);
    let inside = p / binomial(k - 1, omega - 1) as f64;
    let outside = (1.0 - p) / binomial(k - 1, omega) as f64;
    let sets = subsets(k, omega);
    let mut entries = Vec::with_capacity(k * sets.len());
    for x in 0..k {
        entries.extend(sets.iter().map(|s| if s.contains(&x) { inside } else { outside }));
    }
    let labels = sets.iter().map(|s| subset_label(s)).collect();
    ChannelMatrix::normalized(k, sets.len(), entries, index_labels(k), labels)
}

/// Digits of hash function number `h` as values in `[g]`, position 0 first
/// (most significant).
pub fn hash_digits(mut h: usize, k: usize, g: usize) -> Vec<usize> {
    let mut digits = vec![0; k];
    for d in digits.iter_mut().rev() {
        *d = h % g;
        h /= g;
    }
    digits
}

fn lh_label(digits: &[usize], v: usize) -> String {
    let d: Vec<String> = digits.iter().map(usize::to_string).collect();
    format!("{}|{}", d.join("."), v)
}

fn lh_columns(k: usize, g: usize, cap: usize) -> Result<usize> {
    if g < 2 {
        return Err(Error::InvalidHashRange(g));
    }
    let family = (g as u128).checked_pow(k as u32);
    let cols = family.and_then(|f| f.checked_mul(g as u128));
    match cols {
        Some(c) => {
            check_size(k as u128, c, cap)?;
            Ok(c as usize)
        }
        None => Err(Error::SizeCapExceeded {
            rows: k as u128,
            cols: u128::MAX,
            cap,
        }),
    }
}

/// Local hashing over the complete function family `[k] → [g]`. Output
/// `(h, v)` sits at column `h * g + v`, where `h` enumerates functions by
/// their value tuples in lexicographic order.
pub fn lh_channel(k: usize, g: usize, epsilon: f64, cap: usize) -> Result<ChannelMatrix> {
    check_k(k)?;
    check_epsilon(epsilon)?;
    let cols = lh_columns(k, g, cap)?;
    let family = cols / g;
    let (p, q) = rr_probs(g, epsilon);
    let (hit, miss) = (p / family as f64, q / family as f64);
    let digits: Vec<Vec<usize>> = (0..family).map(|h| hash_digits(h, k, g)).collect();
    let mut entries = Vec::with_capacity(k * cols);
    for x in 0..k {
        for d in &digits {
            entries.extend((0..g).map(|v| if d[x] == v { hit } else { miss }));
        }
    }
    let labels = digits
        .iter()
        .flat_map(|d| (0..g).map(move |v| lh_label(d, v)))
        .collect();
    ChannelMatrix::normalized(k, cols, entries, index_labels(k), labels)
}

/// Encoding half of local hashing: draw `h`, emit `(h, h(x))`.
pub fn lh_encode_channel(k: usize, g: usize, cap: usize) -> Result<ChannelMatrix> {
    check_k(k)?;
    let cols = lh_columns(k, g, cap)?;
    let family = cols / g;
    let w = 1.0 / family as f64;
    let digits: Vec<Vec<usize>> = (0..family).map(|h| hash_digits(h, k, g)).collect();
    let mut entries = Vec::with_capacity(k * cols);
    for x in 0..k {
        for d in &digits {
            entries.extend((0..g).map(|v| if d[x] == v { w } else { 0.0 }));
        }
    }
    let labels = digits
        .iter()
        .flat_map(|d| (0..g).map(move |v| lh_label(d, v)))
        .collect();
    ChannelMatrix::normalized(k, cols, entries, index_labels(k), labels)
}

/// Perturbation half of local hashing: keep `h`, apply randomized response
/// on `[g]` to the encoded value.
pub fn lh_perturb_channel(k: usize, g: usize, epsilon: f64, cap: usize) -> Result<ChannelMatrix> {
    check_epsilon(epsilon)?;
    let n = lh_columns(k, g, cap)?;
    check_size(n as u128, n as u128, cap)?;
    let (p, q) = rr_probs(g, epsilon);
    let mut entries = vec![0.0; n * n];
    for row in 0..n {
        let block = row / g * g;
        for v in 0..g {
            entries[row * n + block + v] = if block + v == row { p } else { q };
        }
    }
    let family = n / g;
    let labels: Vec<String> = (0..family)
        .flat_map(|h| {
            let d = hash_digits(h, k, g);
            (0..g).map(move |v| lh_label(&d, v))
        })
        .collect();
    ChannelMatrix::normalized(n, n, entries, labels.clone(), labels)
}

/// Per-bit flip probabilities: `p = Pr[1 | 1]`, `q = Pr[1 | 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitwiseParams {
    pub p: f64,
    pub q: f64,
}

pub fn bitwise_params(protocol: BitwiseProtocol, epsilon: f64, theta: Option<f64>) -> Result<BitwiseParams> {
    check_epsilon(epsilon)?;
    match protocol {
        BitwiseProtocol::Sue => {
            if theta.is_some() {
                return Err(Error::InvalidSpec("SUE does not take theta".into()));
            }
            let h = (-epsilon / 2.0).exp();
            Ok(BitwiseParams {
                p: 1.0 / (1.0 + h),
                q: h / (1.0 + h),
            })
        }
        BitwiseProtocol::Oue => {
            if theta.is_some() {
                return Err(Error::InvalidSpec("OUE does not take theta".into()));
            }
            let t = (-epsilon).exp();
            Ok(BitwiseParams { p: 0.5, q: t / (1.0 + t) })
        }
        BitwiseProtocol::The => {
            let theta = theta.ok_or(Error::ThetaRequired("THE"))?;
            check_theta(theta)?;
            Ok(BitwiseParams {
                p: 1.0 - 0.5 * (epsilon * (theta - 1.0) / 2.0).exp(),
                q: 0.5 * (-epsilon * theta / 2.0).exp(),
            })
        }
    }
}

/// The 2x2 per-bit channel: rows are input bits 0, 1; columns output bits.
pub fn bitwise(protocol: BitwiseProtocol, epsilon: f64, theta: Option<f64>) -> Result<ChannelMatrix> {
    let BitwiseParams { p, q } = bitwise_params(protocol, epsilon, theta)?;
    ChannelMatrix::normalized(
        2,
        2,
        vec![1.0 - q, q, 1.0 - p, p],
        index_labels(2),
        index_labels(2),
    )
}

/// The bitwise channel applied independently to each of `k` bits, restricted
/// to one-hot inputs. Row `i` is the input with the `i`-th bit set.
pub fn onehot_channel(
    protocol: BitwiseProtocol,
    k: usize,
    epsilon: f64,
    theta: Option<f64>,
    cap: usize,
) -> Result<ChannelMatrix> {
    check_k(k)?;
    let b = bitwise(protocol, epsilon, theta)?;
    // The power has 2^k rows although only k survive; size the check on the
    // result instead of the intermediate.
    let cols = 1u128.checked_shl(k as u32).filter(|_| k < 127).unwrap_or(u128::MAX);
    check_size(k as u128, cols, cap)?;
    let hot = onehot_rows(&b, k)?;
    Ok(hot)
}

/// Builds the one-hot rows directly; equal to restricting the full
/// Kronecker power but without materializing `2^k` rows.
fn onehot_rows(b: &ChannelMatrix, k: usize) -> Result<ChannelMatrix> {
    let cols = 1usize << k;
    let mut entries = Vec::with_capacity(k * cols);
    for i in 0..k {
        for y in 0..cols {
            let mut prob = 1.0;
            for m in 0..k {
                let in_bit = usize::from(m == i);
                let out_bit = (y >> (k - 1 - m)) & 1;
                prob *= b.get(in_bit, out_bit);
            }
            entries.push(prob);
        }
    }
    let bits = |v: usize| -> String { (0..k).map(|m| if (v >> (k - 1 - m)) & 1 == 1 { '1' } else { '0' }).collect() };
    let inputs = (0..k).map(|i| bits(1 << (k - 1 - i))).collect();
    let outputs = (0..cols).map(bits).collect();
    ChannelMatrix::normalized(k, cols, entries, inputs, outputs)
}

/// The 2x2 bit channel's `k`-fold power restricted to one-hot rows, computed
/// literally through [`ChannelMatrix::kronecker_power`].
pub fn onehot_via_kronecker(b: &ChannelMatrix, k: usize, cap: usize) -> Result<ChannelMatrix> {
    b.kronecker_power(k as u32, cap)?.restrict_to_one_hot()
}

/// The largest channel (in the refinement order) that both bitwise SUE and
/// bitwise OUE refine.
pub fn sue_oue_min(epsilon: f64) -> Result<ChannelMatrix> {
    check_epsilon(epsilon)?;
    let half = (-epsilon / 2.0).exp();
    let a = half / (1.0 + half); // 1/(e^{ε/2}+1)
    let s = 1.0 / (1.0 + half); // e^{ε/2}/(e^{ε/2}+1)
    let t = (-epsilon).exp();
    let o = t / (1.0 + t); // 1/(e^ε+1)
    let middle_top = (a - o).max(0.0);
    let middle_bottom = (s - 0.5).max(0.0);
    ChannelMatrix::normalized(
        2,
        3,
        vec![s, middle_top, o, a, middle_bottom, 0.5],
        index_labels(2),
        index_labels(3),
    )
}

/// Retention probabilities and the per-value support probabilities used by
/// frequency estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticParams {
    pub p: f64,
    pub q: f64,
    /// Probability that a report supports the user's own value.
    pub p_star: f64,
    /// Probability that a report supports a fixed other value.
    pub q_star: f64,
}

pub fn analytic_params(spec: &MechanismSpec) -> AnalyticParams {
    let (k, eps) = (spec.k, spec.epsilon);
    match spec.protocol {
        Protocol::Grr => {
            let (p, q) = rr_probs(k, eps);
            AnalyticParams { p, q, p_star: p, q_star: q }
        }
        Protocol::Ss => {
            let omega = spec.omega.expect("SS spec carries omega");
            let p = ss_inclusion(k, omega, eps);
            let q = (omega as f64 - p) / (k as f64 - 1.0);
            AnalyticParams { p, q, p_star: p, q_star: q }
        }
        Protocol::Blh | Protocol::Olh => {
            let g = spec.g.expect("LH spec carries g");
            let (p, q) = rr_probs(g, eps);
            AnalyticParams {
                p,
                q,
                p_star: p,
                q_star: 1.0 / g as f64,
            }
        }
        Protocol::Sue | Protocol::Oue | Protocol::The => {
            let bp = bitwise_params(spec.protocol.bitwise().expect("bitwise protocol"), eps, spec.theta)
                .expect("spec was validated");
            AnalyticParams {
                p: bp.p,
                q: bp.q,
                p_star: bp.p,
                q_star: bp.q,
            }
        }
    }
}
