//! Marcus–Lushnikov coalescent with limited aggregations.
//!
//! Particles are tracked through their atoms. Each atom keeps its count of
//! free stubs in a Fenwick tree, so a stub drawn uniformly among all free
//! stubs selects a particle with probability proportional to its arms. Two
//! stubs in the same particle never bond; such draws are rejected.

use rand::Rng;
use rand_distr::Exp1;

use crate::branching::Pmf;

use super::fenwick::Fenwick;
use super::{DegreeSequence, SimError};

/// Consecutive intra-particle draws after which the system is declared absorbed.
pub const REJECTION_CAP: u32 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Particle {
    pub arms: u32,
    pub size: u32,
}

/// Snapshot of a stochastic system: particles in solution plus gel.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    /// Sorted by `(arms, size)`.
    pub particles: Vec<Particle>,
    pub n: u64,
    /// Free arms over particles in solution.
    pub total_arms: u64,
    pub gel_mass: u64,
    pub clock: f64,
}

impl ParticleSystem {
    pub fn mass_in_solution(&self) -> u64 {
        self.particles.iter().map(|p| p.size as u64).sum()
    }
}

/// One point of a threshold run: fraction of atoms still in solution and
/// the law of used arms among them.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub mass_in_solution: f64,
    pub used_arms: Pmf,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolutionTrace {
    pub points: Vec<TracePoint>,
}

/// Result of [`LimitedCoalescent::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Merged {
        t: f64,
        left: Particle,
        right: Particle,
        /// Whether the product exceeded the threshold and fell into the gel.
        gelled: bool,
    },
    /// The next event lies beyond the horizon; the clock now reads the horizon.
    Horizon,
    /// No two distinct particles carry arms.
    Absorbed,
}

#[derive(Debug, Clone, Default)]
struct Slot {
    arms: u64,
    atoms: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct LimitedCoalescent {
    degree: Vec<u32>,
    free: Fenwick,
    owner: Vec<u32>,
    slots: Vec<Slot>,
    /// Sum of squared arms over particles in solution.
    sum_sq: u128,
    gel_mass: u64,
    gel_arms: u64,
    bonds: u64,
    in_solution: u64,
    /// In-solution atoms by number of used stubs.
    used_hist: Vec<u64>,
    threshold: Option<u64>,
    clock: f64,
    next_event: Option<f64>,
    absorbed: bool,
}

impl LimitedCoalescent {
    /// All atoms start as singletons. Particles whose size exceeds `threshold`
    /// leave for the gel.
    pub fn new(degrees: &DegreeSequence, threshold: Option<u64>) -> Self {
        let degree = degrees.as_slice().to_vec();
        let n = degree.len();
        let max_degree = *degree.iter().max().expect("nonempty") as usize;
        let mut used_hist = vec![0; max_degree + 1];
        used_hist[0] = n as u64;
        Self {
            free: Fenwick::from_weights(degree.iter().map(|d| *d as u64).collect()),
            owner: (0..n as u32).collect(),
            slots: degree
                .iter()
                .enumerate()
                .map(|(i, d)| Slot {
                    arms: *d as u64,
                    atoms: vec![i as u32],
                })
                .collect(),
            sum_sq: degree.iter().map(|d| (*d as u128).pow(2)).sum(),
            degree,
            gel_mass: 0,
            gel_arms: 0,
            bonds: 0,
            in_solution: n as u64,
            used_hist,
            threshold,
            clock: 0.0,
            next_event: None,
            absorbed: false,
        }
    }

    pub fn n(&self) -> u64 {
        self.degree.len() as u64
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn total_arms(&self) -> u64 {
        self.free.total()
    }

    pub fn gel_mass(&self) -> u64 {
        self.gel_mass
    }

    /// Arms that were still free when their particle fell into the gel.
    pub fn gel_arms(&self) -> u64 {
        self.gel_arms
    }

    pub fn bonds(&self) -> u64 {
        self.bonds
    }

    /// Total event rate `(S^2 - sum a^2) / (2n)`.
    pub fn total_rate(&self) -> f64 {
        let s = self.free.total() as u128;
        (s * s - self.sum_sq) as f64 / (2.0 * self.n() as f64)
    }

    /// Advances to the next coalescence, unless it falls after `horizon`.
    pub fn step<R: Rng + ?Sized>(&mut self, horizon: f64, rng: &mut R) -> Step {
        if self.absorbed {
            return Step::Absorbed;
        }
        let next = match self.next_event {
            Some(t) => t,
            None => {
                let rate = self.total_rate();
                if rate <= 0.0 {
                    self.absorbed = true;
                    return Step::Absorbed;
                }
                let wait: f64 = rng.sample(Exp1);
                let t = self.clock + wait / rate;
                self.next_event = Some(t);
                t
            }
        };
        if next > horizon {
            self.clock = horizon;
            return Step::Horizon;
        }
        self.clock = next;
        self.next_event = None;

        let total = self.free.total();
        for _ in 0..REJECTION_CAP {
            let u = self.free.find(rng.random_range(0..total));
            let v = self.free.find(rng.random_range(0..total));
            if self.owner[u] != self.owner[v] {
                return self.bond(u, v);
            }
        }
        self.absorbed = true;
        Step::Absorbed
    }

    /// Runs until the clock reaches `t_end` or the system is absorbed.
    pub fn run_until<R: Rng + ?Sized>(&mut self, t_end: f64, rng: &mut R) {
        while let Step::Merged { .. } = self.step(t_end, rng) {}
    }

    fn use_stub(&mut self, atom: usize) {
        let free = self.free.weight(atom);
        let used = (self.degree[atom] as u64 - free) as usize;
        self.used_hist[used] -= 1;
        self.used_hist[used + 1] += 1;
        self.free.set(atom, free - 1);
    }

    fn particle(&self, slot: usize) -> Particle {
        let s = &self.slots[slot];
        Particle {
            arms: s.arms as u32,
            size: s.atoms.len() as u32,
        }
    }

    fn bond(&mut self, u: usize, v: usize) -> Step {
        let (pu, pv) = (self.owner[u] as usize, self.owner[v] as usize);
        let (left, right) = (self.particle(pu), self.particle(pv));
        self.use_stub(u);
        self.use_stub(v);
        self.bonds += 1;

        let (big, small) = if self.slots[pu].atoms.len() >= self.slots[pv].atoms.len() {
            (pu, pv)
        } else {
            (pv, pu)
        };
        let moved = std::mem::take(&mut self.slots[small].atoms);
        for &atom in &moved {
            self.owner[atom as usize] = big as u32;
        }
        self.slots[big].atoms.extend(moved);
        let arms = left.arms as u64 + right.arms as u64 - 2;
        self.sum_sq -= (left.arms as u128).pow(2) + (right.arms as u128).pow(2);
        self.sum_sq += (arms as u128).pow(2);
        self.slots[big].arms = arms;
        self.slots[small].arms = 0;

        let size = self.slots[big].atoms.len() as u64;
        let gelled = self.threshold.is_some_and(|alpha| size > alpha);
        if gelled {
            self.to_gel(big);
        }
        Step::Merged {
            t: self.clock,
            left,
            right,
            gelled,
        }
    }

    fn to_gel(&mut self, slot: usize) {
        let atoms = std::mem::take(&mut self.slots[slot].atoms);
        let arms = std::mem::take(&mut self.slots[slot].arms);
        for &atom in &atoms {
            let atom = atom as usize;
            let used = (self.degree[atom] as u64 - self.free.weight(atom)) as usize;
            self.used_hist[used] -= 1;
            self.free.set(atom, 0);
        }
        self.sum_sq -= (arms as u128).pow(2);
        self.gel_arms += arms;
        self.gel_mass += atoms.len() as u64;
        self.in_solution -= atoms.len() as u64;
    }

    /// Current particles in solution.
    pub fn snapshot(&self) -> ParticleSystem {
        let mut particles: Vec<Particle> = (0..self.slots.len())
            .filter(|i| !self.slots[*i].atoms.is_empty())
            .map(|i| self.particle(i))
            .collect();
        particles.sort_unstable();
        ParticleSystem {
            particles,
            n: self.n(),
            total_arms: self.free.total(),
            gel_mass: self.gel_mass,
            clock: self.clock,
        }
    }

    /// Fraction of atoms in solution and the law of their used stubs.
    pub fn trace_point(&self) -> TracePoint {
        let used_arms = if self.in_solution == 0 {
            Pmf::from_values(0, Vec::new())
        } else {
            let total = self.in_solution as f64;
            Pmf::from_values(0, self.used_hist.iter().map(|c| *c as f64 / total).collect())
        };
        TracePoint {
            t: self.clock,
            mass_in_solution: self.in_solution as f64 / self.n() as f64,
            used_arms,
        }
    }
}

/// Runs the coalescent from singletons until `t_end` (possibly infinite) or
/// absorption.
pub fn coalesce_limited<R: Rng + ?Sized>(
    degrees: &DegreeSequence,
    t_end: f64,
    rng: &mut R,
) -> ParticleSystem {
    let mut engine = LimitedCoalescent::new(degrees, None);
    engine.run_until(t_end, rng);
    engine.snapshot()
}

/// Coalescent in which particles larger than `alpha` fall into the gel.
/// Records a trace point at every sample time `<= t_end`, in increasing order.
pub fn coalesce_threshold<R: Rng + ?Sized>(
    degrees: &DegreeSequence,
    alpha: u64,
    t_end: f64,
    sample_times: &[f64],
    rng: &mut R,
) -> Result<(SolutionTrace, ParticleSystem), SimError> {
    let n = degrees.n() as u64;
    if alpha >= n {
        return Err(SimError::ThresholdTooLarge { alpha, n });
    }
    if alpha == 0 {
        return Err(SimError::InvalidArgument("threshold must be >= 1".into()));
    }
    let mut times: Vec<f64> = sample_times.iter().copied().filter(|t| *t <= t_end).collect();
    if times.iter().any(|t| !(*t >= 0.0)) {
        return Err(SimError::InvalidArgument("sample times must be >= 0".into()));
    }
    times.sort_by(f64::total_cmp);

    let mut engine = LimitedCoalescent::new(degrees, Some(alpha));
    let mut trace = SolutionTrace::default();
    for t in times {
        engine.run_until(t, rng);
        let mut point = engine.trace_point();
        point.t = t;
        trace.points.push(point);
    }
    engine.run_until(t_end, rng);
    Ok((trace, engine.snapshot()))
}

/// `sum_k k (k - 2) pi(k)`: negative for a subcritical configuration, zero at
/// criticality.
pub fn soc_statistic(pi: &Pmf) -> f64 {
    pi.support()
        .map(|k| (k * (k - 2)) as f64 * pi.get(k))
        .collect::<crate::numeric::NeumaierSum>()
        .value()
}
