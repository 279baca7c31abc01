use crate::branching::ArmMeasure;
use crate::numeric::{sum_rev, NeumaierSum};

use super::SolveError;

/// Concentrations `c(m)` for masses `1..=m_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonoField {
    conc: Vec<f64>,
}

impl MonoField {
    /// `conc[i]` is the concentration of mass `i + 1`.
    pub fn new(conc: Vec<f64>) -> Result<Self, SolveError> {
        if conc.is_empty() {
            return Err(SolveError::InvalidArgument("empty mono field".into()));
        }
        if let Some(v) = conc.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(SolveError::InvalidArgument(format!(
                "negative or non-finite concentration {v}"
            )));
        }
        Ok(Self { conc })
    }

    /// Mono-disperse data: `weight` at mass `m`, truncated at `m_max`.
    pub fn delta(m: u32, weight: f64, m_max: u32) -> Result<Self, SolveError> {
        if m == 0 || m > m_max {
            return Err(SolveError::InvalidArgument(format!(
                "mass {m} outside 1..={m_max}"
            )));
        }
        let mut conc = vec![0.0; m_max as usize];
        conc[m as usize - 1] = weight;
        Self::new(conc)
    }

    pub(crate) fn from_raw(conc: Vec<f64>) -> Self {
        Self { conc }
    }

    pub fn m_max(&self) -> u32 {
        self.conc.len() as u32
    }

    pub fn get(&self, m: u32) -> f64 {
        if m == 0 {
            return 0.0;
        }
        self.conc.get(m as usize - 1).copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.conc
    }

    /// `(m, c(m))` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.conc.iter().enumerate().map(|(i, c)| (i as u32 + 1, *c))
    }

    /// `sum_m m^j c(m)`, accumulated from the largest mass down.
    pub fn moment(&self, j: u32) -> f64 {
        self.iter()
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .map(|(m, c)| (m as f64).powi(j as i32) * c)
            .collect::<NeumaierSum>()
            .value()
    }

    /// `sum_m m c(m)`.
    pub fn mass(&self) -> f64 {
        self.moment(1)
    }

    /// Copy with negative round-off clipped to zero.
    pub fn clipped(&self) -> Self {
        Self {
            conc: self.conc.iter().map(|c| c.max(0.0)).collect(),
        }
    }
}

/// Concentrations `c(a, m)` for arms `0..=a_max` and masses `1..=m_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationField {
    a_max: u32,
    m_max: u32,
    /// Row-major by arms: `conc[a * m_max + (m - 1)]`.
    conc: Vec<f64>,
}

impl ConcentrationField {
    pub fn zeros(a_max: u32, m_max: u32) -> Self {
        assert!(m_max >= 1);
        Self {
            a_max,
            m_max,
            conc: vec![0.0; (a_max as usize + 1) * m_max as usize],
        }
    }

    /// Purely atomic initial data `c(a, 1) = mu(a)`.
    pub fn from_arm_measure(mu: &ArmMeasure, a_max: u32, m_max: u32) -> Result<Self, SolveError> {
        if mu.max_arms() > a_max || m_max == 0 {
            return Err(SolveError::InvalidArgument(format!(
                "truncation (A_max = {a_max}, M_max = {m_max}) cannot hold atoms with {} arms",
                mu.max_arms()
            )));
        }
        let mut field = Self::zeros(a_max, m_max);
        for (a, w) in mu.iter() {
            field.set(a, 1, w);
        }
        Ok(field)
    }

    pub(crate) fn from_raw(a_max: u32, m_max: u32, conc: Vec<f64>) -> Self {
        debug_assert_eq!(conc.len(), (a_max as usize + 1) * m_max as usize);
        Self { a_max, m_max, conc }
    }

    pub fn a_max(&self) -> u32 {
        self.a_max
    }

    pub fn m_max(&self) -> u32 {
        self.m_max
    }

    #[inline]
    pub(crate) fn index(m_max: u32, a: u32, m: u32) -> usize {
        a as usize * m_max as usize + (m as usize - 1)
    }

    pub fn get(&self, a: u32, m: u32) -> f64 {
        if a > self.a_max || m == 0 || m > self.m_max {
            return 0.0;
        }
        self.conc[Self::index(self.m_max, a, m)]
    }

    pub fn set(&mut self, a: u32, m: u32, value: f64) {
        let i = Self::index(self.m_max, a, m);
        self.conc[i] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.conc
    }

    /// `((a, m), c(a, m))` for every cell.
    pub fn iter(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        let m_max = self.m_max as usize;
        self.conc
            .iter()
            .enumerate()
            .map(move |(i, c)| (((i / m_max) as u32, (i % m_max) as u32 + 1), *c))
    }

    fn weighted_sum(&self, w: impl Fn(u32, u32) -> f64) -> f64 {
        let terms: Vec<f64> = self.iter().map(|((a, m), c)| w(a, m) * c).collect();
        sum_rev(&terms)
    }

    /// `sum m c(a, m)`.
    pub fn mass(&self) -> f64 {
        self.weighted_sum(|_, m| m as f64)
    }

    /// `sum a c(a, m)`.
    pub fn arm_density(&self) -> f64 {
        self.weighted_sum(|a, _| a as f64)
    }

    /// `sum c(a, m)`.
    pub fn total(&self) -> f64 {
        self.weighted_sum(|_, _| 1.0)
    }

    pub fn clipped(&self) -> Self {
        Self {
            a_max: self.a_max,
            m_max: self.m_max,
            conc: self.conc.iter().map(|c| c.max(0.0)).collect(),
        }
    }
}

/// Recorded states of an integration together with the cumulative mass
/// that left the truncated domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<F> {
    pub times: Vec<f64>,
    pub states: Vec<F>,
    pub truncation_leak: Vec<f64>,
}

impl<F> Trajectory<F> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> (&f64, &F, f64) {
        let i = self.times.len() - 1;
        (&self.times[i], &self.states[i], self.truncation_leak[i])
    }

    /// Index of the recorded time closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let i = self.times.partition_point(|s| *s < t);
        if i == 0 {
            0
        } else if i == self.times.len() {
            i - 1
        } else if (self.times[i] - t).abs() < (t - self.times[i - 1]).abs() {
            i
        } else {
            i - 1
        }
    }
}
