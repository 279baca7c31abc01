//! Fixed-step RK4 for the truncated coagulation systems.
//!
//! A run with `n` steps is accepted once doubling `n` moves the final state
//! by less than the tolerance in sup norm. Coagulation products beyond the
//! truncation bounds leave the system; the mass they carry is integrated as
//! an extra component and reported as the truncation leak.

use crate::branching::ArmMeasure;
use crate::numeric::sum_rev;

use super::closed_form::{tgel_limited, tgel_multiplicative};
use super::{ConcentrationField, MonoField, SolveError, Trajectory};

/// States below this value abort the run.
const NEGATIVITY_FLOOR: f64 = -1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Step count of the first, coarsest run.
    pub initial_steps: usize,
    /// Sup-norm gap between successive refinements that ends the halving.
    pub tolerance: f64,
    pub max_halvings: u32,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            initial_steps: 8,
            tolerance: 1e-8,
            max_halvings: 16,
        }
    }
}

/// Right-hand side of a truncated system. Returns the rate at which mass
/// leaves the truncated domain.
trait Rhs {
    fn eval(&self, y: &[f64], dy: &mut [f64]) -> f64;
}

struct Run {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    leak: Vec<f64>,
}

fn rk4<R: Rhs>(rhs: &R, y0: &[f64], t_end: f64, n_steps: usize) -> Result<Run, SolveError> {
    let dim = y0.len();
    let h = t_end / n_steps as f64;
    let mut y = y0.to_vec();
    let mut leak = 0.0;
    let mut run = Run {
        times: Vec::with_capacity(n_steps + 1),
        states: Vec::with_capacity(n_steps + 1),
        leak: Vec::with_capacity(n_steps + 1),
    };
    run.times.push(0.0);
    run.states.push(y.clone());
    run.leak.push(0.0);

    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    for step in 1..=n_steps {
        let l1 = rhs.eval(&y, &mut k1);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        let l2 = rhs.eval(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        let l3 = rhs.eval(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + h * k3[i];
        }
        let l4 = rhs.eval(&tmp, &mut k4);
        for i in 0..dim {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        leak += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);

        let t = if step == n_steps { t_end } else { step as f64 * h };
        if let Some(v) = y.iter().copied().find(|v| *v < NEGATIVITY_FLOOR || !v.is_finite()) {
            return Err(SolveError::Instability { t, value: v });
        }
        run.times.push(t);
        run.states.push(y.clone());
        run.leak.push(leak);
    }
    Ok(run)
}

fn refine<R: Rhs>(
    rhs: &R,
    y0: &[f64],
    t_end: f64,
    control: &StepControl,
) -> Result<Run, SolveError> {
    if t_end == 0.0 {
        return rk4(rhs, y0, 0.0, 0);
    }
    let mut n = control.initial_steps.max(1);
    let mut previous = rk4(rhs, y0, t_end, n);
    let mut gap = f64::INFINITY;
    for _ in 0..control.max_halvings {
        n *= 2;
        let current = rk4(rhs, y0, t_end, n);
        if let (Ok(prev), Ok(cur)) = (&previous, &current) {
            let a = prev.states.last().expect("nonempty run");
            let b = cur.states.last().expect("nonempty run");
            gap = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
                .max((prev.leak.last().unwrap() - cur.leak.last().unwrap()).abs());
            if gap < control.tolerance {
                return current;
            }
        }
        previous = current;
    }
    match previous {
        Err(e) => Err(e),
        Ok(_) => Err(SolveError::NotConverged {
            tolerance: control.tolerance,
            halvings: control.max_halvings,
            gap,
        }),
    }
}

fn check_horizon(t_end: f64, tgel: f64) -> Result<(), SolveError> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(SolveError::InvalidArgument(format!(
            "integration horizon must be finite and >= 0, got {t_end}"
        )));
    }
    if t_end >= tgel {
        return Err(SolveError::BeyondGelation { t_end, tgel });
    }
    Ok(())
}

/// Multiplicative kernel with loss term `m c(m) <c, Id>` over the truncated field.
struct MonoRhs {
    m_max: usize,
}

impl Rhs for MonoRhs {
    fn eval(&self, y: &[f64], dy: &mut [f64]) -> f64 {
        let m_max = self.m_max;
        // b[i] = m c(m) with m = i + 1
        let b: Vec<f64> = y.iter().enumerate().map(|(i, c)| (i + 1) as f64 * c).collect();
        let mass = sum_rev(&b);
        for m in 1..=m_max {
            let mut gain = 0.0;
            for m1 in 1..m {
                gain += b[m1 - 1] * b[m - m1 - 1];
            }
            dy[m - 1] = 0.5 * gain - b[m - 1] * mass;
        }
        let mut leak = 0.0;
        for m1 in 1..=m_max {
            for m2 in (m_max + 1 - m1)..=m_max {
                leak += (m1 + m2) as f64 * b[m1 - 1] * b[m2 - 1];
            }
        }
        0.5 * leak
    }
}

fn mono_trajectory(run: Run) -> Trajectory<MonoField> {
    Trajectory {
        times: run.times,
        states: run.states.into_iter().map(MonoField::from_raw).collect(),
        truncation_leak: run.leak,
    }
}

/// Integrates the multiplicative system from `c0` on masses `<= m_max`,
/// refining the step until the final state settles.
pub fn integrate_mono(
    c0: &MonoField,
    t_end: f64,
    m_max: u32,
    control: &StepControl,
) -> Result<Trajectory<MonoField>, SolveError> {
    let (rhs, y0) = mono_setup(c0, t_end, m_max)?;
    refine(&rhs, &y0, t_end, control).map(mono_trajectory)
}

/// One run of the multiplicative system with exactly `n_steps` RK4 steps.
pub fn integrate_mono_fixed(
    c0: &MonoField,
    t_end: f64,
    m_max: u32,
    n_steps: usize,
) -> Result<Trajectory<MonoField>, SolveError> {
    let (rhs, y0) = mono_setup(c0, t_end, m_max)?;
    rk4(&rhs, &y0, t_end, n_steps.max(1)).map(mono_trajectory)
}

fn mono_setup(c0: &MonoField, t_end: f64, m_max: u32) -> Result<(MonoRhs, Vec<f64>), SolveError> {
    check_horizon(t_end, tgel_multiplicative(c0)?)?;
    if m_max == 0 {
        return Err(SolveError::InvalidArgument("M_max must be >= 1".into()));
    }
    let mut y0 = c0.as_slice().to_vec();
    if y0[m_max as usize..].iter().any(|c| *c > 0.0) {
        return Err(SolveError::InvalidArgument(format!(
            "initial data has mass beyond M_max = {m_max}"
        )));
    }
    y0.resize(m_max as usize, 0.0);
    Ok((MonoRhs { m_max: m_max as usize }, y0))
}

/// Arm-multiplicative kernel: `(a, m) + (a', m') -> (a + a' - 2, m + m')` at rate `a a'`.
struct LimitedRhs {
    a_max: u32,
    m_max: u32,
}

impl Rhs for LimitedRhs {
    fn eval(&self, y: &[f64], dy: &mut [f64]) -> f64 {
        let (a_max, m_max) = (self.a_max, self.m_max);
        // (a, m, a c(a, m)) over cells that can still react
        let mut active: Vec<(u32, u32, f64)> = Vec::new();
        for a in 1..=a_max {
            for m in 1..=m_max {
                let c = y[ConcentrationField::index(m_max, a, m)];
                if c != 0.0 {
                    active.push((a, m, a as f64 * c));
                }
            }
        }
        let arms: Vec<f64> = active.iter().map(|x| x.2).collect();
        let arm_density = sum_rev(&arms);

        dy.fill(0.0);
        let mut leak = 0.0;
        for (i, &(a1, m1, b1)) in active.iter().enumerate() {
            for &(a2, m2, b2) in &active[i..] {
                // ordered pairs counted once each, the diagonal once in total
                let weight = if (a1, m1) == (a2, m2) { 0.5 } else { 1.0 } * b1 * b2;
                let (a, m) = (a1 + a2 - 2, m1 + m2);
                if a <= a_max && m <= m_max {
                    dy[ConcentrationField::index(m_max, a, m)] += weight;
                } else {
                    leak += m as f64 * weight;
                }
            }
        }
        for &(a, m, b) in &active {
            dy[ConcentrationField::index(m_max, a, m)] -= b * arm_density;
        }
        leak
    }
}

fn limited_trajectory(run: Run, a_max: u32, m_max: u32) -> Trajectory<ConcentrationField> {
    Trajectory {
        times: run.times,
        states: run
            .states
            .into_iter()
            .map(|s| ConcentrationField::from_raw(a_max, m_max, s))
            .collect(),
        truncation_leak: run.leak,
    }
}

/// Integrates the limited-aggregation system from purely atomic data `mu`
/// on arms `<= a_max` and masses `<= m_max`.
pub fn integrate_limited(
    mu: &ArmMeasure,
    t_end: f64,
    a_max: u32,
    m_max: u32,
    control: &StepControl,
) -> Result<Trajectory<ConcentrationField>, SolveError> {
    check_horizon(t_end, tgel_limited(mu))?;
    let y0 = ConcentrationField::from_arm_measure(mu, a_max, m_max)?;
    let rhs = LimitedRhs { a_max, m_max };
    refine(&rhs, y0.as_slice(), t_end, control).map(|r| limited_trajectory(r, a_max, m_max))
}

/// One run of the limited system with exactly `n_steps` RK4 steps.
pub fn integrate_limited_fixed(
    mu: &ArmMeasure,
    t_end: f64,
    a_max: u32,
    m_max: u32,
    n_steps: usize,
) -> Result<Trajectory<ConcentrationField>, SolveError> {
    check_horizon(t_end, tgel_limited(mu))?;
    let y0 = ConcentrationField::from_arm_measure(mu, a_max, m_max)?;
    let rhs = LimitedRhs { a_max, m_max };
    rk4(&rhs, y0.as_slice(), t_end, n_steps.max(1)).map(|r| limited_trajectory(r, a_max, m_max))
}
