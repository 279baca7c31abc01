//! Multiplicative Marcus–Lushnikov coalescent from `n` unit masses: clusters
//! of sizes `m`, `m'` merge at rate `m m' / n`.

use petgraph::unionfind::UnionFind;
use rand::Rng;
use rand_distr::Exp1;

use super::{Particle, ParticleSystem};

/// Stepping form of the mono-disperse coalescent.
#[derive(Debug, Clone)]
pub struct MonoCoalescent {
    n: usize,
    clusters: UnionFind<u32>,
    /// Cluster size, valid at roots.
    size: Vec<u64>,
    sum_sq: u128,
    clock: f64,
    next_event: Option<f64>,
}

impl MonoCoalescent {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one atom");
        Self {
            n,
            clusters: UnionFind::new(n),
            size: vec![1; n],
            sum_sq: n as u128,
            clock: 0.0,
            next_event: None,
        }
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// `(n^2 - sum m^2) / (2n)`.
    pub fn total_rate(&self) -> f64 {
        ((self.n as u128).pow(2) - self.sum_sq) as f64 / (2.0 * self.n as f64)
    }

    /// Performs every merger up to `t_end`; the clock then reads `t_end`, or
    /// the time of the last merger if a single cluster remains.
    pub fn run_until<R: Rng + ?Sized>(&mut self, t_end: f64, rng: &mut R) {
        loop {
            let next = match self.next_event {
                Some(t) => t,
                None => {
                    let rate = self.total_rate();
                    if rate <= 0.0 {
                        return;
                    }
                    let wait: f64 = rng.sample(Exp1);
                    let t = self.clock + wait / rate;
                    self.next_event = Some(t);
                    t
                }
            };
            if next > t_end {
                self.clock = t_end;
                return;
            }
            self.clock = next;
            self.next_event = None;
            self.merge(rng);
        }
    }

    fn merge<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        // two uniform atoms pick a pair of clusters with probability ∝ m m'
        let (ru, rv) = loop {
            let u = rng.random_range(0..self.n as u32);
            let v = rng.random_range(0..self.n as u32);
            let (ru, rv) = (self.clusters.find_mut(u), self.clusters.find_mut(v));
            if ru != rv {
                break (ru, rv);
            }
        };
        let (su, sv) = (self.size[ru as usize], self.size[rv as usize]);
        self.sum_sq += 2 * su as u128 * sv as u128;
        self.clusters.union(ru, rv);
        let root = self.clusters.find_mut(ru);
        self.size[root as usize] = su + sv;
    }

    pub fn snapshot(&self) -> ParticleSystem {
        let mut particles: Vec<Particle> = (0..self.n as u32)
            .filter(|&v| self.clusters.find(v) == v)
            .map(|v| Particle {
                arms: 0,
                size: self.size[v as usize] as u32,
            })
            .collect();
        particles.sort_unstable();
        ParticleSystem {
            particles,
            n: self.n as u64,
            total_arms: 0,
            gel_mass: 0,
            clock: self.clock,
        }
    }
}

pub fn coalesce_mono<R: Rng + ?Sized>(n: usize, t_end: f64, rng: &mut R) -> ParticleSystem {
    let mut engine = MonoCoalescent::new(n);
    engine.run_until(t_end, rng);
    engine.snapshot()
}
