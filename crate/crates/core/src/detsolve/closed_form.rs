//! Explicit solutions and limits.
//!
//! Every concentration below is evaluated as a logarithm first and
//! exponentiated at the end; the `ln_*` variants expose the logarithm for
//! values that would underflow.

use crate::branching::{
    convolution_power, criticality, eta_beta, offspring_from_arms, ArmMeasure, ConvolutionPowers,
    OffspringLaw, Pmf,
};
use crate::numeric::{ln_factorial, sum_rev, NeumaierSum};

use super::{ConcentrationField, MonoField, SolveError};

/// Log of the McLeod solution `t^{m-1} m^{m-2} e^{-mt} / m!` for `0 < t < 1`.
pub fn ln_mcleod(t: f64, m: u32) -> Result<f64, SolveError> {
    if !(t >= 0.0) {
        return Err(SolveError::InvalidArgument(format!("negative time {t}")));
    }
    if t >= 1.0 {
        return Err(SolveError::PastGelation { t });
    }
    if m == 0 {
        return Err(SolveError::InvalidArgument("mass must be >= 1".into()));
    }
    if t == 0.0 {
        return Ok(if m == 1 { 0.0 } else { f64::NEG_INFINITY });
    }
    let mf = m as f64;
    Ok((mf - 1.0) * t.ln() + (mf - 2.0) * mf.ln() - mf * t - ln_factorial(m as u64))
}

/// Pre-gelation solution of the multiplicative system from `c_0 = 1_{m=1}`.
pub fn mcleod(t: f64, m: u32) -> Result<f64, SolveError> {
    ln_mcleod(t, m).map(f64::exp)
}

/// Post-gelation solution `m^{m-2} e^{-m} / (m! t)` for `t >= 1`.
pub fn kokholm(t: f64, m: u32) -> Result<f64, SolveError> {
    if !(t >= 1.0) {
        return Err(SolveError::BeforeGelation { t });
    }
    if m == 0 {
        return Err(SolveError::InvalidArgument("mass must be >= 1".into()));
    }
    let mf = m as f64;
    Ok(((mf - 2.0) * mf.ln() - mf - ln_factorial(m as u64) - t.ln()).exp())
}

/// Gelation time `1 / sum m^2 c_0(m)` of the multiplicative kernel.
pub fn tgel_multiplicative(c0: &MonoField) -> Result<f64, SolveError> {
    let second = c0.moment(2);
    if second <= 0.0 {
        return Err(SolveError::ZeroField);
    }
    Ok(1.0 / second)
}

/// Gelation time of the limited system: infinite when `A_2 <= 2 A_1`.
pub fn tgel_limited(mu: &ArmMeasure) -> f64 {
    let a1 = mu.moment(1);
    let a2 = mu.moment(2);
    if a2 <= 2.0 * a1 {
        f64::INFINITY
    } else {
        1.0 / (a2 - 2.0 * a1)
    }
}

/// Pre-gelation explicit solution of the limited-aggregation system with
/// the convolution powers of `nu` cached up to a mass bound.
#[derive(Debug, Clone)]
pub struct LimitedClosedForm {
    mu: ArmMeasure,
    nu: OffspringLaw,
    a1: f64,
    tgel: f64,
    k_max: usize,
    /// `powers[m - 1] = nu^{*m}` on keys `0..=k_max`.
    powers: Vec<Pmf>,
}

impl LimitedClosedForm {
    /// Caches `nu^{*m}` for `m <= m_max`, enough for every `(a, m)` with
    /// `a <= a_max`.
    pub fn new(mu: &ArmMeasure, a_max: u32, m_max: u32) -> Self {
        let nu = offspring_from_arms(mu);
        let k_max = (a_max + m_max) as usize;
        let powers = ConvolutionPowers::new(&nu, k_max)
            .take(m_max as usize)
            .collect();
        Self {
            mu: mu.clone(),
            a1: mu.moment(1),
            tgel: tgel_limited(mu),
            nu,
            k_max,
            powers,
        }
    }

    pub fn gelation_time(&self) -> f64 {
        self.tgel
    }

    pub fn offspring(&self) -> &OffspringLaw {
        &self.nu
    }

    /// `ln nu^{*m}(k)`.
    fn ln_power(&self, m: u32, k: usize) -> f64 {
        match self.powers.get(m as usize - 1) {
            Some(p) if k <= self.k_max => p.ln_get(k as i64),
            _ => convolution_power(&self.nu, m as usize, k).ln_get(k as i64),
        }
    }

    fn check_time(&self, t: f64) -> Result<(), SolveError> {
        if !(t >= 0.0) {
            return Err(SolveError::InvalidArgument(format!("negative time {t}")));
        }
        if t >= self.tgel {
            return Err(SolveError::ClosedFormPreGelOnly { t, tgel: self.tgel });
        }
        Ok(())
    }

    /// `ln c_t(a, m)` for `a, m >= 1`.
    pub fn ln_concentration(&self, t: f64, a: u32, m: u32) -> Result<f64, SolveError> {
        self.check_time(t)?;
        if a == 0 {
            return self.ln_zero_arms(t, m);
        }
        if m == 0 {
            return Err(SolveError::InvalidArgument("mass must be >= 1".into()));
        }
        if t == 0.0 {
            return Ok(if m == 1 {
                self.mu.weight(a).ln()
            } else {
                f64::NEG_INFINITY
            });
        }
        let (af, mf) = (a as f64, m as f64);
        let k = (a + m - 2) as usize;
        Ok(ln_factorial(k as u64) - ln_factorial(a as u64) - ln_factorial(m as u64)
            + mf * self.a1.ln()
            + (mf - 1.0) * t.ln()
            - (af + mf - 1.0) * (self.a1 * t).ln_1p()
            + self.ln_power(m, k))
    }

    /// `c_t(a, m)`; `a = 0` dispatches to [`Self::zero_arms`].
    pub fn concentration(&self, t: f64, a: u32, m: u32) -> Result<f64, SolveError> {
        self.ln_concentration(t, a, m).map(f64::exp)
    }

    pub fn ln_zero_arms(&self, t: f64, m: u32) -> Result<f64, SolveError> {
        self.check_time(t)?;
        if m < 2 {
            return Err(SolveError::ZeroArmMonomer { m });
        }
        if t == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let mf = m as f64;
        Ok(self.a1.ln() - (mf * (mf - 1.0)).ln() + (1.0 - mf) * (1.0 / (self.a1 * t)).ln_1p()
            + self.ln_power(m, m as usize - 2))
    }

    /// `c_t(0, m)` for `m >= 2`.
    pub fn zero_arms(&self, t: f64, m: u32) -> Result<f64, SolveError> {
        self.ln_zero_arms(t, m).map(f64::exp)
    }

    /// The whole field at time `t`, `c(0, 1) = 0`.
    pub fn field(&self, t: f64, a_max: u32, m_max: u32) -> Result<ConcentrationField, SolveError> {
        self.check_time(t)?;
        let mut field = ConcentrationField::zeros(a_max, m_max);
        for a in 0..=a_max {
            for m in 1..=m_max {
                if a == 0 && m == 1 {
                    continue;
                }
                field.set(a, m, self.concentration(t, a, m)?);
            }
        }
        Ok(field)
    }
}

/// `c_t(a, m)` of the limited system for `a, m >= 1` and `0 <= t < T`.
pub fn limited_closed_form(mu: &ArmMeasure, t: f64, a: u32, m: u32) -> Result<f64, SolveError> {
    if a == 0 {
        return Err(SolveError::InvalidArgument(
            "use limited_closed_form_zero_arms for a = 0".into(),
        ));
    }
    LimitedClosedForm::new(mu, a, m).concentration(t, a, m)
}

/// `c_t(0, m)` of the limited system for `m >= 2` and `0 < t < T`.
pub fn limited_closed_form_zero_arms(mu: &ArmMeasure, t: f64, m: u32) -> Result<f64, SolveError> {
    if m < 2 {
        return Err(SolveError::ZeroArmMonomer { m });
    }
    LimitedClosedForm::new(mu, 0, m).zero_arms(t, m)
}

/// `beta^{m-1}` factor of the limits: 1 without gelation.
fn limit_ln_beta(mu: &ArmMeasure, nu: &OffspringLaw) -> Result<f64, SolveError> {
    if criticality(mu).subcritical_or_critical {
        Ok(0.0)
    } else {
        Ok(eta_beta(nu)?.beta.ln())
    }
}

/// `t -> infinity` limit of `c_t(a, m)`; only zero-arm polymers survive.
pub fn limiting_concentration(mu: &ArmMeasure, a: u32, m: u32) -> Result<f64, SolveError> {
    if m < 2 {
        return Err(SolveError::ZeroArmMonomer { m });
    }
    if a >= 1 {
        return Ok(0.0);
    }
    let nu = offspring_from_arms(mu);
    let ln_beta = limit_ln_beta(mu, &nu)?;
    let mf = m as f64;
    let power = convolution_power(&nu, m as usize, m as usize - 2);
    Ok((mu.moment(1).ln() - (mf * (mf - 1.0)).ln()
        + (mf - 1.0) * ln_beta
        + power.ln_get(m as i64 - 2))
    .exp())
}

/// `c_inf(0, m)` for every `m in 2..=m_max`, index `m - 2`.
pub fn limiting_concentrations(mu: &ArmMeasure, m_max: u32) -> Result<Vec<f64>, SolveError> {
    if m_max < 2 {
        return Ok(Vec::new());
    }
    let nu = offspring_from_arms(mu);
    let ln_beta = limit_ln_beta(mu, &nu)?;
    let ln_a1 = mu.moment(1).ln();
    Ok(ConvolutionPowers::new(&nu, m_max as usize - 2)
        .take(m_max as usize)
        .enumerate()
        .skip(1)
        .map(|(i, power)| {
            let m = (i + 1) as f64;
            (ln_a1 - (m * (m - 1.0)).ln() + (m - 1.0) * ln_beta + power.ln_get(i as i64 - 1)).exp()
        })
        .collect())
}

/// Terminal polymer mass against initial atom mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassIdentity {
    /// `sum_{m=2}^{bound} m c_inf(0, m)`.
    pub lhs: f64,
    /// `sum_a mu(a)`.
    pub rhs: f64,
    /// Extrapolated `sum_{m > bound}` from the local decay of the last terms.
    pub tail_estimate: f64,
    pub bound: u32,
}

pub fn terminal_mass_identity(mu: &ArmMeasure, bound: u32) -> Result<MassIdentity, SolveError> {
    if criticality(mu).gelling() {
        return Err(SolveError::GellingRegime);
    }
    let limits = limiting_concentrations(mu, bound)?;
    let terms: Vec<f64> = limits
        .iter()
        .enumerate()
        .map(|(i, c)| (i + 2) as f64 * c)
        .collect();
    let lhs = sum_rev(&terms);
    let nonzero: Vec<(f64, f64)> = terms
        .iter()
        .enumerate()
        .filter(|(_, x)| **x > 0.0)
        .map(|(i, x)| ((i + 2) as f64, *x))
        .collect();
    let tail_estimate = match nonzero.as_slice() {
        [.., (m1, t1), (m2, t2)] if *m2 + 2.0 * (m2 - m1) >= bound as f64 => {
            // terms ~ C m^{-p} on a lattice of spacing m2 - m1
            let step = m2 - m1;
            let p = (t1 / t2).ln() / (m2 / m1).ln();
            if p > 1.0 {
                t2 * m2 / (step * (p - 1.0))
            } else {
                f64::INFINITY
            }
        }
        _ => 0.0,
    };
    Ok(MassIdentity {
        lhs,
        rhs: mu.total(),
        tail_estimate,
        bound,
    })
}

/// Terminal solution-phase mass and used-arm law of the threshold gel model.
#[derive(Debug, Clone, PartialEq)]
pub struct MerleNormandLimits {
    pub eta: f64,
    /// `m_inf = sum_i eta^i mu(i)`.
    pub m_inf: f64,
    /// `pi_inf(i) = eta^i mu(i) / m_inf` on `i >= 1`.
    pub pi_inf: Pmf,
}

/// `m_inf` and `pi_inf` for a gelling arm law. `mu` is normalized to a
/// probability first.
pub fn merle_normand_limits(mu: &ArmMeasure) -> Result<MerleNormandLimits, SolveError> {
    if criticality(mu).subcritical_or_critical {
        return Err(SolveError::NonGellingRegime);
    }
    let eta = eta_beta(&offspring_from_arms(mu))?.eta;
    let mu = mu.normalized();
    let weighted: Vec<f64> = (1..=mu.max_arms())
        .map(|i| eta.powi(i as i32) * mu.weight(i))
        .collect();
    let m_inf = weighted.iter().rev().copied().collect::<NeumaierSum>().value();
    let pi_inf = Pmf::from_values(1, weighted.iter().map(|w| w / m_inf).collect());
    Ok(MerleNormandLimits { eta, m_inf, pi_inf })
}
