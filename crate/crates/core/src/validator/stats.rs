//! Normal quantiles, binomial sums and the order-statistic lower bound.

use serde::{Deserialize, Deserializer, Serialize};

use super::ValidatorError;

/// Which terms a binomial sum `B(k; q, n)` covers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinomConvention {
    /// `r = 0 .. k-1`, so `B(0) = 0`.
    #[default]
    Exclusive,
    /// `r = 0 ..= k`, the usual cumulative distribution function.
    Inclusive,
}

/// Inverse of the standard normal distribution function (Wichura's AS241,
/// about 1e-16 relative accuracy).
pub fn inv_normal_cdf(p: f64) -> Result<f64, ValidatorError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(ValidatorError::Domain(format!("normal quantile needs 0 < p < 1, got {p}")));
    }
    const A: [f64; 8] = [
        3.387_132_872_796_366_6,
        1.331_416_678_917_843_8e2,
        1.971_590_950_306_551_4e3,
        1.373_169_376_550_946_1e4,
        4.592_195_393_154_987_1e4,
        6.726_577_092_700_87e4,
        3.343_057_558_358_813e4,
        2.509_080_928_730_122_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091e1,
        6.871_870_074_920_579e2,
        5.394_196_021_424_751e3,
        2.121_379_430_158_659_7e4,
        3.930_789_580_009_271e4,
        2.872_908_573_572_194_3e4,
        5.226_495_278_852_854_5e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_6,
        4.630_337_846_156_545,
        5.769_497_221_460_691,
        3.647_848_324_763_204_5,
        1.270_458_252_452_368_4,
        2.417_807_251_774_506e-1,
        2.272_384_498_926_918_4e-2,
        7.745_450_142_783_414e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_8,
        1.676_384_830_183_803_8,
        6.897_673_349_851e-1,
        1.481_039_764_274_800_8e-1,
        1.519_866_656_361_645_7e-2,
        5.475_938_084_995_345e-4,
        1.050_750_071_644_416_8e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103,
        5.463_784_911_164_114,
        1.784_826_539_917_291_3,
        2.965_605_718_285_048_7e-1,
        2.653_218_952_657_612_4e-2,
        1.242_660_947_388_078_4e-3,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879e-1,
        1.369_298_809_227_358e-1,
        1.487_536_129_085_061_5e-2,
        7.868_691_311_456_133e-4,
        1.846_318_317_510_054_8e-5,
        1.421_511_758_316_446e-7,
        2.044_263_103_389_939_7e-15,
    ];
    fn ratio(num: &[f64; 8], den: &[f64; 8], x: f64) -> f64 {
        let poly = |c: &[f64; 8]| c.iter().rev().fold(0.0, |acc, &k| acc * x + k);
        poly(num) / poly(den)
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return Ok(q * ratio(&A, &B, r));
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        ratio(&C, &D, r - 1.6)
    } else {
        ratio(&E, &F, r - 5.0)
    };
    Ok(if q < 0.0 { -x } else { x })
}

/// Binomial sum `B(k; q, n)`, accumulated term by term in log space.
pub fn binom_cdf(k: u64, q: f64, n: u64, conv: BinomConvention) -> f64 {
    let last = match conv {
        BinomConvention::Exclusive if k == 0 => return 0.0,
        BinomConvention::Exclusive => k - 1,
        BinomConvention::Inclusive => k,
    };
    if last >= n {
        return 1.0;
    }
    // degenerate success probabilities put all mass on one count
    if q <= 0.0 {
        return 1.0;
    }
    if q >= 1.0 {
        return 0.0;
    }
    let (lq, lp) = (q.ln(), (-q).ln_1p());
    let mut log_choose = 0.0;
    let mut total = 0.0;
    for r in 0..=last {
        if r > 0 {
            log_choose += ((n - r + 1) as f64).ln() - (r as f64).ln();
        }
        total += (log_choose + r as f64 * lq + (n - r) as f64 * lp).exp();
    }
    total.clamp(0.0, 1.0)
}

/// Probability that a sampled problem with `n_dprime` scenarios and risk
/// level `gamma` admits every point whose true risk is at most `epsilon`.
pub fn theta(gamma: f64, n_dprime: u64, epsilon: f64, conv: BinomConvention) -> f64 {
    let k = (gamma * n_dprime as f64 + 1e-9).floor().max(0.0) as u64;
    binom_cdf(k, epsilon, n_dprime, conv)
}

/// Normal-approximation upper confidence limit on a violation probability:
/// `q + z sqrt(q (1 - q) / n)` with `z` the `1 - beta` quantile.
pub fn upper_bound(q_hat: f64, n_prime: u64, beta: f64) -> Result<f64, ValidatorError> {
    if !(0.0..=1.0).contains(&q_hat) {
        return Err(ValidatorError::Domain(format!("violation estimate {q_hat} outside [0, 1]")));
    }
    if n_prime == 0 {
        return Err(ValidatorError::Domain("upper bound needs at least one sample".into()));
    }
    let z = inv_normal_cdf(1.0 - beta)?;
    Ok(q_hat + z * (q_hat * (1.0 - q_hat) / n_prime as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub q_hat: f64,
    #[serde(rename = "U")]
    pub u: f64,
    pub beta: f64,
    pub n_prime: u64,
    pub epsilon: Option<f64>,
    pub feasible_at_epsilon: Option<bool>,
    /// Scenarios with no feasible dispatch, numerical failures included.
    pub infeasible: u64,
    pub numerical_failures: u64,
    pub seed: u64,
    /// Mean of minus the load served over the draws, counting a draw without
    /// a feasible dispatch as serving nothing. Absent for synthetic oracles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
}

impl ValidationReport {
    pub fn new(infeasible: u64, numerical_failures: u64, n_prime: u64, beta: f64, epsilon: Option<f64>, seed: u64) -> Result<Self, ValidatorError> {
        if n_prime == 0 {
            return Err(ValidatorError::Domain("no scenarios to assess".into()));
        }
        let q_hat = infeasible as f64 / n_prime as f64;
        let u = upper_bound(q_hat, n_prime, beta)?;
        Ok(Self {
            q_hat,
            u,
            beta,
            n_prime,
            epsilon,
            feasible_at_epsilon: epsilon.map(|e| u <= e),
            infeasible,
            numerical_failures,
            seed,
            objective: None,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn neg_inf_if_null<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub objectives_sorted: Vec<f64>,
    pub theta: f64,
    /// 1-based order index; 0 when no index qualifies.
    #[serde(rename = "L")]
    pub l: usize,
    /// `objectives_sorted[L - 1]`, or minus infinity (`null` in JSON) when
    /// `L = 0`.
    #[serde(deserialize_with = "neg_inf_if_null")]
    pub bound: f64,
    pub found: bool,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub n_dprime: u64,
    pub convention: BinomConvention,
}

/// Largest `L` in `1..=M` with `B(L - 1; theta, M) <= beta`, or 0.
pub fn order_index(m: usize, theta: f64, beta: f64, conv: BinomConvention) -> usize {
    // B is non-decreasing in its first argument
    (1..=m).take_while(|&l| binom_cdf(l as u64 - 1, theta, m as u64, conv) <= beta).last().unwrap_or(0)
}

/// Sorts the sampled optima and picks the order statistic that lies below
/// the true optimum with probability at least `1 - beta`.
pub fn lower_bound(objectives: &[f64], theta: f64, beta: f64, conv: BinomConvention) -> Result<(Vec<f64>, usize, f64), ValidatorError> {
    if objectives.is_empty() {
        return Err(ValidatorError::Domain("lower bound needs at least one objective".into()));
    }
    if let Some(x) = objectives.iter().find(|x| !x.is_finite()) {
        return Err(ValidatorError::Domain(format!("objective {x} is not finite")));
    }
    let mut sorted = objectives.to_vec();
    sorted.sort_by(f64::total_cmp);
    let l = order_index(sorted.len(), theta, beta, conv);
    let bound = if l == 0 { f64::NEG_INFINITY } else { sorted[l - 1] };
    Ok((sorted, l, bound))
}

impl LowerBoundReport {
    pub fn new(objectives: &[f64], beta: f64, gamma: f64, epsilon: f64, n_dprime: u64, conv: BinomConvention) -> Result<Self, ValidatorError> {
        let th = theta(gamma, n_dprime, epsilon, conv);
        let (objectives_sorted, l, bound) = lower_bound(objectives, th, beta, conv)?;
        Ok(Self {
            m: objectives_sorted.len(),
            objectives_sorted,
            theta: th,
            l,
            bound,
            found: l > 0,
            beta,
            gamma,
            epsilon,
            n_dprime,
            convention: conv,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
