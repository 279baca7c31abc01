//! Probability-measure arithmetic for arm laws and Galton–Watson processes.
//!
//! An [`ArmMeasure`] is the initial concentration of atoms by number of arms.
//! The size-biased and shifted law [`OffspringLaw`] drives every branching
//! formula: convolution powers, the two-ancestor total progeny law, the
//! generating-function fixed point `(eta, beta)` and the sampler used as a
//! Monte Carlo oracle.

use rand::Rng;
use thiserror::Error;

use crate::numeric::{bisect, ln_factorial, NeumaierSum};

/// Tolerance used by every bracketing root search in this module.
pub const ROOT_TOL: f64 = 1e-12;

/// Tolerance on the total mass of an [`OffspringLaw`].
pub const PMF_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BranchingError {
    #[error("degenerate arm measure")]
    DegenerateArmMeasure,
    #[error("negative weight {weight} at arm count {arms}")]
    NegativeWeight { arms: u32, weight: f64 },
    #[error("arm counts start at 1, got 0")]
    ZeroArms,
    #[error("offspring law must be nonnegative and sum to 1 (sum = {sum})")]
    NotAProbability { sum: f64 },
    #[error("fixed point only defined in gelling regime (mean offspring {mean} <= 1)")]
    NotGelling { mean: f64 },
    #[error("no root in (0,1): offspring law has no mass at 0")]
    NoRootInUnitInterval,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Initial concentration `mu(a)` of atoms carrying `a >= 1` arms.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmMeasure {
    /// `weights[a - 1] = mu(a)`; the last entry is nonzero.
    weights: Vec<f64>,
}

impl ArmMeasure {
    /// Builds a measure from `(arms, weight)` pairs. Repeated arm counts add up.
    pub fn new<I>(entries: I) -> Result<Self, BranchingError>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut weights: Vec<f64> = Vec::new();
        for (arms, weight) in entries {
            if arms == 0 {
                return Err(BranchingError::ZeroArms);
            }
            if !(weight >= 0.0) || !weight.is_finite() {
                return Err(BranchingError::NegativeWeight { arms, weight });
            }
            let idx = arms as usize - 1;
            if weights.len() <= idx {
                weights.resize(idx + 1, 0.0);
            }
            weights[idx] += weight;
        }
        Self::from_dense(weights)
    }

    /// Builds a measure from a dense vector where index `i` holds `mu(i + 1)`.
    pub fn from_dense(mut weights: Vec<f64>) -> Result<Self, BranchingError> {
        if let Some((i, &w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w >= 0.0) || !w.is_finite())
        {
            return Err(BranchingError::NegativeWeight {
                arms: i as u32 + 1,
                weight: w,
            });
        }
        while weights.last() == Some(&0.0) {
            weights.pop();
        }
        if weights.is_empty() {
            return Err(BranchingError::DegenerateArmMeasure);
        }
        Ok(Self { weights })
    }

    /// Unit mass on atoms with `arms` arms.
    pub fn point(arms: u32) -> Result<Self, BranchingError> {
        Self::new([(arms, 1.0)])
    }

    /// Atoms carry `1 + Poisson(lambda)` arms, truncated at `max_arms`.
    ///
    /// The truncated measure keeps the untouched weights; the discarded
    /// probability is returned alongside so callers can bound its effect.
    pub fn shifted_poisson(lambda: f64, max_arms: u32) -> Result<TruncatedArms, BranchingError> {
        if !(lambda > 0.0) || max_arms == 0 {
            return Err(BranchingError::InvalidArgument(format!(
                "shifted Poisson needs lambda > 0 and max_arms >= 1 (lambda = {lambda}, max_arms = {max_arms})"
            )));
        }
        let ln_term = |k: u64| -lambda + k as f64 * lambda.ln() - ln_factorial(k);
        let weights: Vec<f64> = (0..max_arms as u64).map(|k| ln_term(k).exp()).collect();
        // tail: sum of Poisson terms k >= max_arms, summed until they vanish
        let mut tail = NeumaierSum::new();
        let mut k = max_arms as u64;
        loop {
            let term = ln_term(k).exp();
            tail.add(term);
            if k as f64 > lambda && term < 1e-18 * tail.value().max(1e-300) {
                break;
            }
            if term == 0.0 && k as f64 > lambda {
                break;
            }
            k += 1;
        }
        Ok(TruncatedArms {
            measure: Self::from_dense(weights)?,
            tail_mass: tail.value(),
        })
    }

    pub fn max_arms(&self) -> u32 {
        self.weights.len() as u32
    }

    /// `mu(a)`, zero outside the support.
    pub fn weight(&self, arms: u32) -> f64 {
        if arms == 0 {
            return 0.0;
        }
        self.weights.get(arms as usize - 1).copied().unwrap_or(0.0)
    }

    /// Iterates `(a, mu(a))` over the positive weights.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, w)| (i as u32 + 1, *w))
    }

    /// `A_j = sum_a a^j mu(a)`.
    pub fn moment(&self, j: u32) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .rev()
            .map(|(i, w)| ((i + 1) as f64).powi(j as i32) * w)
            .collect::<NeumaierSum>()
            .value()
    }

    /// Total concentration `A_0`.
    pub fn total(&self) -> f64 {
        self.moment(0)
    }

    /// Rescaled to a probability measure.
    pub fn normalized(&self) -> Self {
        let total = self.total();
        Self {
            weights: self.weights.iter().map(|w| w / total).collect(),
        }
    }
}

/// A truncated arm law and the probability mass cut off beyond its support.
#[derive(Debug, Clone)]
pub struct TruncatedArms {
    pub measure: ArmMeasure,
    pub tail_mass: f64,
}

/// `A_j = sum_a a^j mu(a)`.
pub fn moment(mu: &ArmMeasure, j: u32) -> f64 {
    mu.moment(j)
}

/// Offspring law `nu` on `{0, ..., j_max}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl OffspringLaw {
    /// Validates nonnegativity and a total mass of 1 within [`PMF_SUM_TOL`].
    pub fn new(mut pmf: Vec<f64>) -> Result<Self, BranchingError> {
        let sum = pmf.iter().copied().collect::<NeumaierSum>().value();
        if pmf.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > PMF_SUM_TOL {
            return Err(BranchingError::NotAProbability { sum });
        }
        while pmf.len() > 1 && pmf.last() == Some(&0.0) {
            pmf.pop();
        }
        let mut acc = NeumaierSum::new();
        let cdf = pmf
            .iter()
            .map(|p| {
                acc.add(*p);
                acc.value()
            })
            .collect();
        Ok(Self { pmf, cdf })
    }

    /// Unit mass at `j`.
    pub fn point(j: usize) -> Self {
        let mut pmf = vec![0.0; j + 1];
        pmf[j] = 1.0;
        Self::new(pmf).expect("point mass is a probability")
    }

    pub fn j_max(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn prob(&self, j: usize) -> f64 {
        self.pmf.get(j).copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pmf
    }

    /// `sum_j j nu(j)`.
    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .rev()
            .map(|(j, p)| j as f64 * p)
            .collect::<NeumaierSum>()
            .value()
    }

    /// Draws one offspring count by inversion of the cumulative table.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        self.cdf
            .partition_point(|c| *c <= u)
            .min(self.pmf.len() - 1)
    }
}

/// `nu(j) = (j + 1) mu(j + 1) / A_1`.
pub fn offspring_from_arms(mu: &ArmMeasure) -> OffspringLaw {
    let a1 = mu.moment(1);
    let pmf: Vec<f64> = (0..mu.max_arms())
        .map(|j| (j + 1) as f64 * mu.weight(j + 1) / a1)
        .collect();
    OffspringLaw::new(pmf).expect("size-biased arm law is a probability")
}

/// Generating function `g_nu(x) = sum_i x^i nu(i)`.
pub fn pgf(nu: &OffspringLaw, x: f64) -> f64 {
    nu.pmf.iter().rev().fold(0.0, |acc, p| acc * x + p)
}

/// Derivative `g'_nu(x) = sum_i i x^(i-1) nu(i)`.
pub fn pgf_prime(nu: &OffspringLaw, x: f64) -> f64 {
    nu.pmf
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, p)| acc * x + i as f64 * p)
}

/// A finitely supported sequence `values[k - offset] * exp(ln_scale)`.
///
/// Convolution powers of large order keep their bulk near 1 in `values` and
/// carry the common magnitude in `ln_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    pub offset: i64,
    pub values: Vec<f64>,
    pub ln_scale: f64,
}

impl Pmf {
    pub fn from_values(offset: i64, values: Vec<f64>) -> Self {
        Self {
            offset,
            values,
            ln_scale: 0.0,
        }
    }

    /// Point mass at `k`.
    pub fn delta(k: i64) -> Self {
        Self::from_values(k, vec![1.0])
    }

    fn raw(&self, k: i64) -> f64 {
        let i = k - self.offset;
        if i < 0 {
            return 0.0;
        }
        self.values.get(i as usize).copied().unwrap_or(0.0)
    }

    /// Value at `k`; zero outside the stored range.
    pub fn get(&self, k: i64) -> f64 {
        let raw = self.raw(k);
        if raw == 0.0 {
            0.0
        } else if self.ln_scale == 0.0 {
            raw
        } else {
            (raw.ln() + self.ln_scale).exp()
        }
    }

    /// Natural log of the value at `k` (`-inf` when it is zero).
    pub fn ln_get(&self, k: i64) -> f64 {
        self.raw(k).ln() + self.ln_scale
    }

    /// Keys in the stored range.
    pub fn support(&self) -> std::ops::Range<i64> {
        self.offset..self.offset + self.values.len() as i64
    }

    pub fn sum(&self) -> f64 {
        crate::numeric::sum_rev(&self.values) * self.ln_scale.exp()
    }

    /// `sum_k |p(k) - q(k)| / 2`.
    pub fn total_variation(&self, other: &Pmf) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = self.support().end.max(other.support().end);
        0.5 * (lo..hi)
            .map(|k| (self.get(k) - other.get(k)).abs())
            .collect::<NeumaierSum>()
            .value()
    }

    /// Pointwise `sum_j p(j) q(k - j)`, kept on keys `<= k_max`.
    pub fn convolve(&self, other: &Pmf, k_max: i64) -> Pmf {
        let offset = self.offset + other.offset;
        let len = (self.values.len() + other.values.len()).saturating_sub(1);
        let len = len.min((k_max - offset + 1).max(0) as usize);
        let mut values = vec![0.0; len];
        for (i, x) in self.values.iter().enumerate() {
            if *x == 0.0 || i >= len {
                continue;
            }
            for (j, y) in other.values.iter().enumerate().take(len - i) {
                values[i + j] += x * y;
            }
        }
        let mut out = Pmf {
            offset,
            values,
            ln_scale: self.ln_scale + other.ln_scale,
        };
        out.rescale();
        out
    }

    /// Moves the magnitude of the largest value into `ln_scale` once it
    /// drifts far from 1.
    fn rescale(&mut self) {
        let max = self.values.iter().copied().fold(0.0_f64, f64::max);
        if max > 0.0 && !(1e-100..=1e100).contains(&max) {
            for v in &mut self.values {
                *v /= max;
            }
            self.ln_scale += max.ln();
        }
    }
}

impl From<&OffspringLaw> for Pmf {
    fn from(nu: &OffspringLaw) -> Self {
        Pmf::from_values(0, nu.pmf.clone())
    }
}

/// Successive convolution powers `nu^{*1}, nu^{*2}, ...` truncated to keys `<= k_max`.
pub struct ConvolutionPowers {
    base: Pmf,
    current: Option<Pmf>,
    k_max: i64,
}

impl ConvolutionPowers {
    pub fn new(nu: &OffspringLaw, k_max: usize) -> Self {
        let k_max = k_max as i64;
        let mut base = Pmf::from(nu);
        base.values.truncate((k_max + 1) as usize);
        Self {
            base,
            current: None,
            k_max,
        }
    }
}

impl Iterator for ConvolutionPowers {
    type Item = Pmf;

    fn next(&mut self) -> Option<Pmf> {
        let next = match &self.current {
            None => self.base.clone(),
            Some(cur) => cur.convolve(&self.base, self.k_max),
        };
        self.current = Some(next.clone());
        Some(next)
    }
}

/// `nu^{*m}(k)` for `k in 0..=k_max`, by `m - 1` direct convolutions.
pub fn convolution_power(nu: &OffspringLaw, m: usize, k_max: usize) -> Pmf {
    assert!(m >= 1, "convolution power needs m >= 1");
    ConvolutionPowers::new(nu, k_max)
        .nth(m - 1)
        .expect("infinite iterator")
}

/// Probability that a Galton–Watson forest with two ancestors and offspring
/// law `nu` has total population `m`: `(2/m) nu^{*m}(m - 2)`.
pub fn dwass_two_ancestors(nu: &OffspringLaw, m: usize) -> f64 {
    ln_dwass_two_ancestors(nu, m).exp()
}

/// Log of [`dwass_two_ancestors`].
pub fn ln_dwass_two_ancestors(nu: &OffspringLaw, m: usize) -> f64 {
    assert!(m >= 2, "two ancestors already make a population of 2");
    let power = convolution_power(nu, m, m - 2);
    (2.0 / m as f64).ln() + power.ln_get(m as i64 - 2)
}

/// `dwass_two_ancestors(nu, m)` for every `m in 2..=m_max`, index `m - 2`.
pub fn dwass_two_ancestors_series(nu: &OffspringLaw, m_max: usize) -> Vec<f64> {
    if m_max < 2 {
        return Vec::new();
    }
    ConvolutionPowers::new(nu, m_max - 2)
        .enumerate()
        .skip(1)
        .take(m_max - 1)
        .map(|(i, power)| {
            let m = i + 1;
            (2.0 / m as f64) * power.get(m as i64 - 2)
        })
        .collect()
}

/// Outcome of one Galton–Watson total-progeny draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progeny {
    Total(u64),
    Exceeded,
}

/// Simulates a Galton–Watson population generation by generation (breadth
/// first) and returns its total size including the ancestors.
pub fn gw_sample_total_size<R: Rng + ?Sized>(
    nu: &OffspringLaw,
    ancestors: u64,
    rng: &mut R,
    cap: u64,
) -> Progeny {
    assert!(ancestors >= 1 && cap >= ancestors);
    let mut pending = ancestors;
    let mut total = ancestors;
    while pending > 0 {
        let children = nu.sample(rng) as u64;
        total += children;
        if total > cap {
            return Progeny::Exceeded;
        }
        pending = pending - 1 + children;
    }
    Progeny::Total(total)
}

/// Borel law `e^{-tm} (tm)^{m-1} / m!`, evaluated in log space.
pub fn borel_pmf(t: f64, m: u64) -> f64 {
    ln_borel_pmf(t, m).exp()
}

/// Log of [`borel_pmf`].
pub fn ln_borel_pmf(t: f64, m: u64) -> f64 {
    assert!(t > 0.0 && t <= 1.0 && m >= 1);
    let tm = t * m as f64;
    -tm + (m - 1) as f64 * tm.ln() - ln_factorial(m)
}

/// Mass fraction remaining in finite clusters for the mono-disperse
/// multiplicative coalescent: 1 for `t <= 1`, else the root in (0,1) of
/// `e^{t(x-1)} = x`.
pub fn theta(t: f64) -> f64 {
    assert!(t > 0.0);
    if t <= 1.0 {
        return 1.0;
    }
    // e^{t(x-1)} - x is convex, positive at 0 and minimal at 1 - ln(t)/t < 1
    let upper = 1.0 - t.ln() / t;
    bisect(|x| (t * (x - 1.0)).exp() - x, 0.0, upper, ROOT_TOL)
}

/// Root `eta` of `x g'(x) = g(x)` and `beta = 1/g'(eta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaBeta {
    pub eta: f64,
    pub beta: f64,
}

pub fn eta_beta(nu: &OffspringLaw) -> Result<EtaBeta, BranchingError> {
    let mean = nu.mean();
    if mean <= 1.0 {
        return Err(BranchingError::NotGelling { mean });
    }
    if nu.prob(0) == 0.0 {
        return Err(BranchingError::NoRootInUnitInterval);
    }
    // x g'(x) - g(x) has derivative x g''(x) >= 0, runs from -nu(0) to mean - 1
    let eta = bisect(|x| x * pgf_prime(nu, x) - pgf(nu, x), 0.0, 1.0, ROOT_TOL);
    let beta = 1.0 / pgf_prime(nu, eta);
    let beta_alt = eta / pgf(nu, eta);
    debug_assert!(
        (beta - beta_alt).abs() <= 1e-9 * beta.max(1.0),
        "beta mismatch {beta} vs {beta_alt}"
    );
    debug_assert!(beta > 1.0);
    Ok(EtaBeta { eta, beta })
}

/// Molloy–Reed classification of an arm measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criticality {
    /// `sum_i i (i - 2) mu_hat(i)` with `mu_hat` the normalized measure.
    pub value: f64,
    /// `A_2 <= 2 A_1`: no giant cluster, no gelation.
    pub subcritical_or_critical: bool,
}

impl Criticality {
    pub fn gelling(&self) -> bool {
        !self.subcritical_or_critical
    }
}

pub fn criticality(mu: &ArmMeasure) -> Criticality {
    let a0 = mu.total();
    let a1 = mu.moment(1);
    let a2 = mu.moment(2);
    let value = mu
        .iter()
        .map(|(i, w)| {
            let i = i as f64;
            i * (i - 2.0) * w
        })
        .collect::<NeumaierSum>()
        .value()
        / a0;
    Criticality {
        value,
        subcritical_or_critical: a2 <= 2.0 * a1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mu(entries: &[(u32, f64)]) -> ArmMeasure {
        ArmMeasure::new(entries.iter().copied()).unwrap()
    }

    fn nu(p: &[f64]) -> OffspringLaw {
        OffspringLaw::new(p.to_vec()).unwrap()
    }

    /// Probability that two ancestors produce exactly `m` individuals, by
    /// enumerating breadth-first offspring sequences (hitting-time walk).
    fn forest_size_by_enumeration(nu: &[f64], m: usize) -> f64 {
        fn rec(nu: &[f64], pending: i64, seen: usize, m: usize) -> f64 {
            if pending == 0 {
                return if seen == m { 1.0 } else { 0.0 };
            }
            if seen > m {
                return 0.0;
            }
            let mut total = 0.0;
            for (k, p) in nu.iter().enumerate() {
                if *p == 0.0 || seen + k > m {
                    continue;
                }
                total += p * rec(nu, pending - 1 + k as i64, seen + k, m);
            }
            total
        }
        rec(nu, 2, 2, m)
    }

    #[test]
    fn moments_of_simple_measures() {
        assert_eq!(moment(&ArmMeasure::point(3).unwrap(), 1), 3.0);
        assert_eq!(moment(&ArmMeasure::point(3).unwrap(), 2), 9.0);
        assert_eq!(moment(&mu(&[(1, 0.5), (2, 0.5)]), 1), 1.5);
    }

    #[test]
    fn rejects_degenerate_measures() {
        assert_eq!(
            ArmMeasure::new([(1, 0.0)]),
            Err(BranchingError::DegenerateArmMeasure)
        );
        assert!(matches!(
            ArmMeasure::new([(1, -0.1)]),
            Err(BranchingError::NegativeWeight { .. })
        ));
        assert_eq!(ArmMeasure::new([(0, 1.0)]), Err(BranchingError::ZeroArms));
        assert_eq!(
            BranchingError::DegenerateArmMeasure.to_string(),
            "degenerate arm measure"
        );
    }

    #[test]
    fn offspring_transform_examples() {
        let n = offspring_from_arms(&ArmMeasure::point(3).unwrap());
        assert_eq!(n.as_slice(), &[0.0, 0.0, 1.0]);
        let n = offspring_from_arms(&mu(&[(1, 0.5), (2, 0.5)]));
        assert!((n.prob(0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((n.prob(1) - 2.0 / 3.0).abs() < 1e-15);
        let n = offspring_from_arms(&mu(&[(1, 0.5), (3, 0.5)]));
        assert_eq!(n.as_slice(), &[0.25, 0.0, 0.75]);
    }

    #[test]
    fn pgf_examples() {
        let n = nu(&[0.25, 0.0, 0.75]);
        assert_eq!(pgf(&n, 1.0), 1.0);
        assert_eq!(pgf(&n, 0.0), 0.25);
        assert_eq!(pgf(&n, 0.5), 0.4375);
        assert_eq!(pgf_prime(&n, 1.0), 1.5);
        assert_eq!(pgf_prime(&n, 0.5), 0.75);
    }

    #[test]
    fn convolution_power_examples() {
        let p = convolution_power(&OffspringLaw::point(2), 3, 10);
        assert_eq!(p.get(6), 1.0);
        assert_eq!(p.sum(), 1.0);

        let p = convolution_power(&nu(&[1.0 / 3.0, 2.0 / 3.0]), 2, 5);
        assert!((p.get(0) - 1.0 / 9.0).abs() < 1e-15);
        assert!((p.get(1) - 4.0 / 9.0).abs() < 1e-15);
        assert!((p.get(2) - 4.0 / 9.0).abs() < 1e-15);

        // direct enumeration of all 3^4 index tuples over the support {0,1,2}
        let base: [f64; 3] = [0.25, 0.0, 0.75];
        let mut oracle = 0.0_f64;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        if a + b + c + d == 4 {
                            oracle += base[a] * base[b] * base[c] * base[d];
                        }
                    }
                }
            }
        }
        assert!((oracle - 27.0 / 128.0).abs() < 1e-15);
        let p = convolution_power(&nu(&base), 4, 8);
        assert!((p.get(4) - oracle).abs() < 1e-15);
    }

    #[test]
    fn convolution_power_survives_underflow() {
        // the low keys of nu^{*2000} sit far below f64::MIN_POSITIVE
        let n = nu(&[0.1, 0.9]);
        let p = convolution_power(&n, 2000, 10);
        assert!(p.ln_scale < -4000.0);
        assert!((p.ln_get(0) - 2000.0 * 0.1f64.ln()).abs() < 1e-8);
        let ln_binom = ln_factorial(2000) - ln_factorial(5) - ln_factorial(1995);
        let expected = ln_binom + 5.0 * 0.9f64.ln() + 1995.0 * 0.1f64.ln();
        assert!((p.ln_get(5) - expected).abs() < 1e-8);
        assert_eq!(p.get(5), 0.0);
    }

    #[test]
    fn dwass_examples() {
        assert_eq!(dwass_two_ancestors(&OffspringLaw::point(0), 2), 1.0);
        let n = nu(&[2.0 / 3.0, 1.0 / 3.0]);
        assert!((dwass_two_ancestors(&n, 2) - 4.0 / 9.0).abs() < 1e-15);
        assert!((dwass_two_ancestors(&n, 3) - 8.0 / 27.0).abs() < 1e-15);
        assert!((forest_size_by_enumeration(n.as_slice(), 2) - 4.0 / 9.0).abs() < 1e-15);
        assert!((forest_size_by_enumeration(n.as_slice(), 3) - 8.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn dwass_matches_forest_enumeration() {
        for law in [vec![0.5, 0.2, 0.3], vec![0.25, 0.0, 0.75], vec![0.6, 0.1, 0.1, 0.2]] {
            let n = nu(&law);
            let series = dwass_two_ancestors_series(&n, 12);
            for m in 2..=12 {
                let oracle = forest_size_by_enumeration(&law, m);
                assert!(
                    (dwass_two_ancestors(&n, m) - oracle).abs() < 1e-14,
                    "m = {m}"
                );
                assert!((series[m - 2] - oracle).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dwass_series_sums_to_one_when_subcritical() {
        let n = offspring_from_arms(&mu(&[(1, 0.9), (2, 0.1)]));
        let total: f64 = dwass_two_ancestors_series(&n, 200).iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // supercritical: extinction probability below one
        let n = nu(&[0.25, 0.0, 0.75]);
        let total: f64 = dwass_two_ancestors_series(&n, 400).iter().sum();
        assert!(total < 0.5, "{total}");
        // q = 1/3 is the extinction probability, two ancestors die out w.p. 1/9
        assert!((total - 1.0 / 9.0).abs() < 1e-6);
    }

    #[test]
    fn gw_point_masses() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for a in 1..5 {
            assert_eq!(
                gw_sample_total_size(&OffspringLaw::point(0), a, &mut rng, 100),
                Progeny::Total(a)
            );
        }
        let exceeded = (0..100)
            .filter(|_| {
                gw_sample_total_size(&OffspringLaw::point(2), 2, &mut rng, 1000)
                    == Progeny::Exceeded
            })
            .count();
        assert_eq!(exceeded, 100);
        let n = nu(&[0.25, 0.0, 0.75]);
        let exceeded = (0..2000)
            .filter(|_| gw_sample_total_size(&n, 2, &mut rng, 1000) == Progeny::Exceeded)
            .count();
        assert!(exceeded > 1000);
    }

    #[test]
    fn gw_sampler_matches_dwass() {
        let n = nu(&[2.0 / 3.0, 1.0 / 3.0]);
        let samples = 1_000_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = vec![0u64; 21];
        for _ in 0..samples {
            if let Progeny::Total(s) = gw_sample_total_size(&n, 2, &mut rng, 10_000) {
                if s <= 20 {
                    counts[s as usize] += 1;
                }
            }
        }
        for m in 2..=20 {
            let p = dwass_two_ancestors(&n, m);
            let se = (p * (1.0 - p) / samples as f64).sqrt();
            let est = counts[m] as f64 / samples as f64;
            assert!((est - p).abs() <= 3.0 * se.max(1.0 / samples as f64), "m = {m}: {est} vs {p}");
        }
    }

    #[test]
    fn borel_examples() {
        assert!((borel_pmf(0.5, 1) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((borel_pmf(0.5, 2) - (-1f64).exp() / 2.0).abs() < 1e-15);
        let total: f64 = (1..=100_000u64).rev().map(|m| borel_pmf(1.0, m)).sum();
        assert!((total - 1.0).abs() < 1e-2);
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta(0.7), 1.0);
        assert_eq!(theta(1.0), 1.0);
        let x = theta(2.0);
        assert!(((2.0 * (x - 1.0)).exp() - x).abs() < 1e-12);
        assert!((x - 0.203188).abs() < 1e-6);
    }

    #[test]
    fn theta_dual_parameter_relation() {
        for t in [1.5, 2.0, 3.0, 5.0] {
            // t' < 1 with t' - ln t' = t - ln t, found independently
            let target = t - f64::ln(t);
            let t_dual = bisect(|s| s - s.ln() - target, 1e-300, 1.0, 1e-15);
            assert!((theta(t) - t_dual / t).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn eta_beta_examples() {
        let n = nu(&[0.25, 0.0, 0.75]);
        let EtaBeta { eta, beta } = eta_beta(&n).unwrap();
        assert!((eta - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((beta - 2.0 / 3f64.sqrt()).abs() < 1e-11);
        assert!((eta * pgf_prime(&n, eta) - pgf(&n, eta)).abs() < 1e-12);
        assert!((beta - eta / pgf(&n, eta)).abs() < 1e-9);

        assert!(matches!(
            eta_beta(&nu(&[0.5, 0.0, 0.5])),
            Err(BranchingError::NotGelling { .. })
        ));
        assert_eq!(
            eta_beta(&OffspringLaw::point(2)),
            Err(BranchingError::NoRootInUnitInterval)
        );
    }

    #[test]
    fn criticality_examples() {
        let c = criticality(&ArmMeasure::point(2).unwrap());
        assert_eq!(c.value, 0.0);
        assert!(c.subcritical_or_critical);
        let c = criticality(&ArmMeasure::point(1).unwrap());
        assert_eq!(c.value, -1.0);
        assert!(c.subcritical_or_critical);
        let c = criticality(&mu(&[(1, 0.5), (3, 0.5)]));
        assert_eq!(c.value, 1.0);
        assert!(c.gelling());
    }

    #[test]
    fn shifted_poisson_reports_tail() {
        let t = ArmMeasure::shifted_poisson(1.5, 12).unwrap();
        assert!((t.measure.total() + t.tail_mass - 1.0).abs() < 1e-14);
        assert!(t.tail_mass > 0.0 && t.tail_mass < 1e-6);
    }

    fn arb_measure() -> impl Strategy<Value = ArmMeasure> {
        proptest::collection::vec(0.0f64..10.0, 1..8).prop_filter_map("nonzero", |w| {
            ArmMeasure::from_dense(w).ok()
        })
    }

    fn arb_law() -> impl Strategy<Value = OffspringLaw> {
        proptest::collection::vec(0.0f64..1.0, 1..5).prop_filter_map("nonzero", |w| {
            let s: f64 = w.iter().sum();
            if s <= 0.0 {
                return None;
            }
            let mut p: Vec<f64> = w.iter().map(|x| x / s).collect();
            let rest: f64 = p[1..].iter().sum();
            p[0] = 1.0 - rest;
            OffspringLaw::new(p).ok()
        })
    }

    proptest! {
        #[test]
        fn offspring_law_is_normalized(m in arb_measure()) {
            let n = offspring_from_arms(&m);
            prop_assert!((n.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn convolution_powers_compose(n in arb_law(), m1 in 1usize..6, m2 in 1usize..6) {
            let k_max = (m1 + m2) * n.j_max();
            let whole = convolution_power(&n, m1 + m2, k_max);
            prop_assert!((whole.sum() - 1.0).abs() < (m1 + m2) as f64 * 1e-12);
            let split = convolution_power(&n, m1, k_max)
                .convolve(&convolution_power(&n, m2, k_max), k_max as i64);
            for k in 0..=k_max as i64 {
                prop_assert!((whole.get(k) - split.get(k)).abs() < 1e-10);
            }
        }

        #[test]
        fn eta_beta_routes_agree(m in arb_measure()) {
            let n = offspring_from_arms(&m);
            if let Ok(EtaBeta { eta, beta }) = eta_beta(&n) {
                prop_assert!(eta > 0.0 && eta < 1.0);
                prop_assert!((eta * pgf_prime(&n, eta) - pgf(&n, eta)).abs() < 1e-12);
                prop_assert!((beta - eta / pgf(&n, eta)).abs() < 1e-9 * beta);
                prop_assert!(beta > 1.0);
            }
        }

        #[test]
        fn criticality_sign_matches_moment_predicate(m in arb_measure()) {
            let c = criticality(&m);
            let scaled = (m.moment(2) - 2.0 * m.moment(1)) / m.total();
            prop_assert!((c.value - scaled).abs() < 1e-9 * (1.0 + scaled.abs()));
            if c.value < -1e-9 { prop_assert!(c.subcritical_or_critical); }
            if c.value > 1e-9 { prop_assert!(c.gelling()); }
        }
    }
}
