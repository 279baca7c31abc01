//! Weak formulation `d/dt <c, f> = 1/2 sum (f(s + s') - f(s) - f(s')) K(s, s') c(s) c(s')`
//! checked along a recorded trajectory.

use crate::numeric::NeumaierSum;

use super::{ConcentrationField, MonoField, Trajectory};

/// A concentration field whose species merge pairwise.
pub trait CoagulationField {
    type Species: Copy;

    /// Species with nonzero concentration.
    fn occupied(&self) -> Vec<(Self::Species, f64)>;

    /// Product of a coagulation event.
    fn merge(a: Self::Species, b: Self::Species) -> Self::Species;
}

impl CoagulationField for MonoField {
    type Species = u32;

    fn occupied(&self) -> Vec<(u32, f64)> {
        self.iter().filter(|(_, c)| *c != 0.0).collect()
    }

    fn merge(a: u32, b: u32) -> u32 {
        a + b
    }
}

impl CoagulationField for ConcentrationField {
    type Species = (u32, u32);

    fn occupied(&self) -> Vec<((u32, u32), f64)> {
        self.iter().filter(|(_, c)| *c != 0.0).collect()
    }

    /// Arm-less species never react, so `a + a' >= 2` whenever the rate is nonzero.
    fn merge((a1, m1): (u32, u32), (a2, m2): (u32, u32)) -> (u32, u32) {
        ((a1 + a2).saturating_sub(2), m1 + m2)
    }
}

/// `K(m, m') = m m'`.
pub fn multiplicative(m1: u32, m2: u32) -> f64 {
    m1 as f64 * m2 as f64
}

/// `K((a, m), (a', m')) = a a'`.
pub fn arm_multiplicative((a1, _): (u32, u32), (a2, _): (u32, u32)) -> f64 {
    a1 as f64 * a2 as f64
}

fn pairing<F: CoagulationField>(field: &F, f: &impl Fn(F::Species) -> f64) -> f64 {
    field
        .occupied()
        .into_iter()
        .map(|(s, c)| f(s) * c)
        .collect::<NeumaierSum>()
        .value()
}

fn bilinear<F: CoagulationField>(
    field: &F,
    f: &impl Fn(F::Species) -> f64,
    kernel: &impl Fn(F::Species, F::Species) -> f64,
) -> f64 {
    let occupied = field.occupied();
    let mut acc = NeumaierSum::new();
    for &(s1, c1) in &occupied {
        for &(s2, c2) in &occupied {
            let rate = kernel(s1, s2);
            if rate == 0.0 {
                continue;
            }
            acc.add((f(F::merge(s1, s2)) - f(s1) - f(s2)) * rate * c1 * c2);
        }
    }
    0.5 * acc.value()
}

/// Right-hand side of the weak form for one state.
pub fn weak_form_rate<F: CoagulationField>(
    field: &F,
    f: impl Fn(F::Species) -> f64,
    kernel: impl Fn(F::Species, F::Species) -> f64,
) -> f64 {
    bilinear(field, &f, &kernel)
}

/// Largest mismatch, over interior recorded times, between the centered
/// difference of `<c_t, f>` and the weak-form right-hand side.
///
/// `f` must vanish outside the truncated domain so that it sees the same
/// system the integrator solved.
pub fn weak_form_residual<F: CoagulationField>(
    traj: &Trajectory<F>,
    f: impl Fn(F::Species) -> f64,
    kernel: impl Fn(F::Species, F::Species) -> f64,
) -> f64 {
    let pairings: Vec<f64> = traj.states.iter().map(|s| pairing(s, &f)).collect();
    (1..traj.len().saturating_sub(1))
        .map(|i| {
            let derivative =
                (pairings[i + 1] - pairings[i - 1]) / (traj.times[i + 1] - traj.times[i - 1]);
            (derivative - bilinear(&traj.states[i], &f, &kernel)).abs()
        })
        .fold(0.0, f64::max)
}
