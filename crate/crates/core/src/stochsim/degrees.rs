use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};

use crate::branching::ArmMeasure;

/// Number of stubs carried by each of `n` atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    degrees: Vec<u32>,
}

/// How [`sample_degrees`] turns a probability on arm counts into degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegreeSampling {
    /// Independent draws.
    #[default]
    Iid,
    /// `floor(n mu(a))` atoms of each class, the leftover atoms going to the
    /// classes with the largest remainders. Sorted by degree.
    Quota,
}

impl DegreeSequence {
    pub fn new(degrees: Vec<u32>) -> Result<Self, super::SimError> {
        if degrees.is_empty() || degrees.contains(&0) {
            return Err(super::SimError::InvalidArgument(
                "degree sequences need n >= 1 atoms, each with at least one stub".into(),
            ));
        }
        Ok(Self { degrees })
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.degrees
    }

    pub fn total_stubs(&self) -> u64 {
        self.degrees.iter().map(|d| *d as u64).sum()
    }

    /// Empirical law `mu_n(a)`, indexed by `a - 1`.
    pub fn empirical(&self) -> ArmMeasure {
        let max = *self.degrees.iter().max().expect("nonempty") as usize;
        let mut counts = vec![0.0; max];
        for d in &self.degrees {
            counts[*d as usize - 1] += 1.0;
        }
        let n = self.n() as f64;
        ArmMeasure::from_dense(counts.into_iter().map(|c| c / n).collect())
            .expect("counts are nonnegative and not all zero")
    }
}

/// Draws `n` degrees from `mu`, normalized first.
pub fn sample_degrees<R: Rng + ?Sized>(
    mu: &ArmMeasure,
    n: usize,
    mode: DegreeSampling,
    rng: &mut R,
) -> DegreeSequence {
    assert!(n >= 1, "need at least one atom");
    let mu = mu.normalized();
    let classes: Vec<(u32, f64)> = mu.iter().collect();
    let degrees = match mode {
        DegreeSampling::Iid => {
            let index = WeightedIndex::new(classes.iter().map(|(_, w)| *w))
                .expect("a normalized arm measure has positive finite weights");
            (0..n).map(|_| classes[index.sample(rng)].0).collect()
        }
        DegreeSampling::Quota => quota(&classes, n),
    };
    DegreeSequence { degrees }
}

fn quota(classes: &[(u32, f64)], n: usize) -> Vec<u32> {
    let mut counts: Vec<usize> = classes.iter().map(|(_, w)| (w * n as f64).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..classes.len()).collect();
    let remainder = |i: usize| classes[i].1 * n as f64 - counts[i] as f64;
    // stable sort keeps ties in arm order
    order.sort_by(|&i, &j| remainder(j).total_cmp(&remainder(i)));
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    classes
        .iter()
        .zip(counts)
        .flat_map(|((a, _), c)| std::iter::repeat_n(*a, c))
        .take(n)
        .collect()
}
