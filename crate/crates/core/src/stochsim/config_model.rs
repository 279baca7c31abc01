use rand::seq::SliceRandom;
use rand::Rng;

use super::DegreeSequence;

/// Configuration multigraph: a uniform pairing of the stubs of a degree
/// sequence. Loops and multiple edges are kept. With an odd stub total one
/// uniformly chosen stub stays unmatched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigGraph {
    degrees: DegreeSequence,
    /// Vertex of each stub; the stubs of vertex `v` are contiguous.
    stub_owner: Vec<u32>,
    pairs: Vec<(u32, u32)>,
    leftover: Option<u32>,
}

impl ConfigGraph {
    pub fn n(&self) -> usize {
        self.degrees.n()
    }

    pub fn degrees(&self) -> &DegreeSequence {
        &self.degrees
    }

    /// Matched stub pairs.
    pub fn stub_pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn leftover_stub(&self) -> Option<u32> {
        self.leftover
    }

    pub fn stub_owner(&self, stub: u32) -> u32 {
        self.stub_owner[stub as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.pairs.len()
    }

    /// Edges as vertex pairs, one per stub pair.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.pairs
            .iter()
            .map(|(s, t)| (self.stub_owner(*s), self.stub_owner(*t)))
    }
}

/// Shuffles the stubs and pairs them consecutively.
pub fn random_configuration<R: Rng + ?Sized>(degrees: &DegreeSequence, rng: &mut R) -> ConfigGraph {
    let stub_owner: Vec<u32> = degrees
        .as_slice()
        .iter()
        .enumerate()
        .flat_map(|(v, d)| std::iter::repeat_n(v as u32, *d as usize))
        .collect();
    let mut stubs: Vec<u32> = (0..stub_owner.len() as u32).collect();
    stubs.shuffle(rng);
    let chunks = stubs.chunks_exact(2);
    let leftover = chunks.remainder().first().copied();
    let pairs = chunks.map(|c| (c[0], c[1])).collect();
    ConfigGraph {
        degrees: degrees.clone(),
        stub_owner,
        pairs,
        leftover,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochsim::{census, rng_from_seed};

    fn graph(d: &[u32], seed: u64) -> ConfigGraph {
        random_configuration(&DegreeSequence::new(d.to_vec()).unwrap(), &mut rng_from_seed(seed))
    }

    #[test]
    fn two_leaves_form_an_edge() {
        let g = graph(&[1, 1], 1);
        let mut e: Vec<_> = g.edges().collect();
        e.iter_mut().for_each(|(u, v)| (*u, *v) = ((*u).min(*v), (*u).max(*v)));
        assert_eq!(e, vec![(0, 1)]);
        let c = census(&g);
        assert_eq!(c.clusters.len(), 1);
        assert_eq!((c.clusters[0].size, c.clusters[0].is_tree), (2, true));
    }

    #[test]
    fn degree_two_vertex_is_a_loop() {
        let g = graph(&[2], 1);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 0)]);
        let c = census(&g).clusters[0];
        assert_eq!((c.size, c.edge_count, c.is_tree), (1, 1, false));
    }

    #[test]
    fn odd_total_leaves_one_stub() {
        let g = graph(&[1, 2], 4);
        assert_eq!(g.edge_count(), 1);
        let leftover = g.leftover_stub().unwrap();
        let mut all: Vec<u32> = g.stub_pairs().iter().flat_map(|(a, b)| [*a, *b]).collect();
        all.push(leftover);
        all.sort();
        assert_eq!(all, vec![0, 1, 2]);
        let c = census(&g);
        assert_eq!(c.clusters.iter().map(|c| c.free_arms).sum::<u64>(), 1);
        assert_eq!(c.mass_in_clusters(), 2);
    }

    #[test]
    fn matchings_of_four_leaves_are_uniform() {
        let seq = DegreeSequence::new(vec![1, 1, 1, 1]).unwrap();
        let mut rng = rng_from_seed(8);
        let samples = 100_000;
        let mut counts = [0u64; 3];
        for _ in 0..samples {
            let g = random_configuration(&seq, &mut rng);
            // the partner of vertex 0 identifies the matching
            let partner = g
                .edges()
                .find_map(|(u, v)| match (u, v) {
                    (0, w) | (w, 0) => Some(w),
                    _ => None,
                })
                .unwrap();
            counts[partner as usize - 1] += 1;
        }
        let p = 1.0 / 3.0;
        let se = (p * (1.0 - p) / samples as f64).sqrt();
        for c in counts {
            assert!((c as f64 / samples as f64 - p).abs() <= 3.0 * se, "{counts:?}");
        }
    }

    #[test]
    fn census_balances_mass() {
        let seq = DegreeSequence::new((0..1000).map(|i| 1 + i % 3).collect()).unwrap();
        for seed in 0..10 {
            let c = census(&graph(seq.as_slice(), seed));
            assert_eq!(c.mass_in_clusters() + c.gel_mass, 1000);
            for r in &c.clusters {
                assert_eq!(r.is_tree, r.edge_count + 1 == r.size);
            }
        }
    }
}
