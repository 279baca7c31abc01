use std::collections::BTreeMap;

use petgraph::unionfind::UnionFind;
use rand::Rng;

use super::{ConfigGraph, ParticleSystem, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterRecord {
    pub size: u64,
    pub free_arms: u64,
    pub edge_count: u64,
    pub is_tree: bool,
}

/// Connected clusters of a graph or particle system, plus the gel.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterCensus {
    pub clusters: Vec<ClusterRecord>,
    pub n: u64,
    pub gel_mass: u64,
}

impl ClusterCensus {
    /// size -> number of clusters.
    pub fn size_counts(&self) -> BTreeMap<u64, u64> {
        let mut out = BTreeMap::new();
        for c in &self.clusters {
            *out.entry(c.size).or_insert(0) += 1;
        }
        out
    }

    /// size -> number of tree clusters.
    pub fn tree_size_counts(&self) -> BTreeMap<u64, u64> {
        let mut out = BTreeMap::new();
        for c in self.clusters.iter().filter(|c| c.is_tree) {
            *out.entry(c.size).or_insert(0) += 1;
        }
        out
    }

    /// (free arms, size) -> number of clusters.
    pub fn class_counts(&self) -> BTreeMap<(u64, u64), u64> {
        let mut out = BTreeMap::new();
        for c in &self.clusters {
            *out.entry((c.free_arms, c.size)).or_insert(0) += 1;
        }
        out
    }

    pub fn mass_in_clusters(&self) -> u64 {
        self.clusters.iter().map(|c| c.size).sum()
    }

    pub fn non_tree_fraction(&self) -> f64 {
        if self.clusters.is_empty() {
            return 0.0;
        }
        self.clusters.iter().filter(|c| !c.is_tree).count() as f64 / self.clusters.len() as f64
    }
}

/// Anything that decomposes into clusters.
pub trait Clustered {
    fn census(&self) -> ClusterCensus;
}

pub fn census<C: Clustered + ?Sized>(source: &C) -> ClusterCensus {
    source.census()
}

/// Coalescent particles are trees: they only ever bond across particles.
impl Clustered for ParticleSystem {
    fn census(&self) -> ClusterCensus {
        ClusterCensus {
            clusters: self
                .particles
                .iter()
                .map(|p| ClusterRecord {
                    size: p.size as u64,
                    free_arms: p.arms as u64,
                    edge_count: p.size as u64 - 1,
                    is_tree: true,
                })
                .collect(),
            n: self.n,
            gel_mass: self.gel_mass,
        }
    }
}

struct Components {
    /// Cluster index of every vertex.
    of_vertex: Vec<usize>,
    records: Vec<ClusterRecord>,
}

fn components(graph: &ConfigGraph) -> Components {
    let n = graph.n();
    let mut uf = UnionFind::<u32>::new(n);
    for (u, v) in graph.edges() {
        uf.union(u, v);
    }
    let mut index = vec![usize::MAX; n];
    let mut of_vertex = vec![0; n];
    let mut records: Vec<ClusterRecord> = Vec::new();
    for v in 0..n {
        let root = uf.find_mut(v as u32) as usize;
        if index[root] == usize::MAX {
            index[root] = records.len();
            records.push(ClusterRecord {
                size: 0,
                free_arms: 0,
                edge_count: 0,
                is_tree: false,
            });
        }
        of_vertex[v] = index[root];
        records[index[root]].size += 1;
    }
    for (u, _) in graph.edges() {
        records[of_vertex[u as usize]].edge_count += 1;
    }
    if let Some(stub) = graph.leftover_stub() {
        records[of_vertex[graph.stub_owner(stub) as usize]].free_arms += 1;
    }
    for r in &mut records {
        r.is_tree = r.edge_count + 1 == r.size;
    }
    Components { of_vertex, records }
}

impl Clustered for ConfigGraph {
    fn census(&self) -> ClusterCensus {
        ClusterCensus {
            clusters: components(self).records,
            n: self.n() as u64,
            gel_mass: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSampling {
    /// Every edge once.
    Exhaustive,
    /// Independent uniform edges.
    Sampled(u64),
}

/// Law of (size, tree flag) of the cluster containing a uniform oriented edge.
/// Sizes above `m_max` are pooled into `overflow`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRootedLaw {
    pub m_max: u64,
    /// `tree[m]` for `m` in `0..=m_max`.
    pub tree: Vec<f64>,
    pub non_tree: Vec<f64>,
    pub overflow: f64,
    pub edges: u64,
    /// Number of rooted edges behind the estimate.
    pub draws: u64,
}

impl EdgeRootedLaw {
    pub fn tree(&self, m: u64) -> f64 {
        self.tree.get(m as usize).copied().unwrap_or(0.0)
    }

    pub fn non_tree(&self, m: u64) -> f64 {
        self.non_tree.get(m as usize).copied().unwrap_or(0.0)
    }

    pub fn non_tree_mass(&self) -> f64 {
        self.non_tree.iter().sum()
    }

    /// Standard error of `tree(m)` when the true value is `reference`.
    ///
    /// The number of tree clusters of size `m` is close to Poisson, and each
    /// carries `m - 1` edges, so over a whole graph the variance is
    /// `(m - 1) p / E`. Sampling adds the binomial term.
    pub fn reference_stderr(&self, m: u64, reference: f64) -> f64 {
        let graph = m.saturating_sub(1) as f64 * reference / self.edges as f64;
        let sampling = if self.draws == self.edges {
            0.0
        } else {
            reference * (1.0 - reference) / self.draws as f64
        };
        (graph + sampling).sqrt()
    }
}

pub fn edge_rooted_size_law<R: Rng + ?Sized>(
    graph: &ConfigGraph,
    sampling: EdgeSampling,
    m_max: u64,
    rng: &mut R,
) -> Result<EdgeRootedLaw, SimError> {
    if m_max < 2 {
        return Err(SimError::InvalidArgument("m_max must be >= 2".into()));
    }
    let edges = graph.edge_count() as u64;
    if edges == 0 {
        return Err(SimError::NoEdges);
    }
    let comps = components(graph);
    let slots = m_max as usize + 1;
    let (mut tree, mut non_tree, mut overflow) = (vec![0u64; slots], vec![0u64; slots], 0u64);
    let mut add = |c: &ClusterRecord, w: u64| {
        if c.size > m_max {
            overflow += w;
        } else if c.is_tree {
            tree[c.size as usize] += w;
        } else {
            non_tree[c.size as usize] += w;
        }
    };
    let draws = match sampling {
        EdgeSampling::Exhaustive => {
            // both orientations of an edge root the same cluster
            for c in &comps.records {
                add(c, c.edge_count);
            }
            edges
        }
        EdgeSampling::Sampled(k) => {
            if k == 0 {
                return Err(SimError::InvalidArgument("need at least one sampled edge".into()));
            }
            let pairs = graph.stub_pairs();
            for _ in 0..k {
                let (s, _) = pairs[rng.random_range(0..pairs.len())];
                let v = graph.stub_owner(s) as usize;
                add(&comps.records[comps.of_vertex[v]], 1);
            }
            k
        }
    };
    let scale = |v: Vec<u64>| v.into_iter().map(|c| c as f64 / draws as f64).collect();
    Ok(EdgeRootedLaw {
        m_max,
        tree: scale(tree),
        non_tree: scale(non_tree),
        overflow: overflow as f64 / draws as f64,
        edges,
        draws,
    })
}

/// Point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// `count(a, m) / n` per (free arms, size) class with binomial standard
/// error `sqrt(p (1 - p) / n)`.
pub fn empirical_concentrations(census: &ClusterCensus, n: u64) -> BTreeMap<(u64, u64), Estimate> {
    assert!(n > 0);
    census
        .class_counts()
        .into_iter()
        .map(|(key, count)| {
            let p = count as f64 / n as f64;
            let stderr = (p * (1.0 - p) / n as f64).max(0.0).sqrt();
            (key, Estimate { value: p, stderr })
        })
        .collect()
}

/// Mean and standard error of the mean over replicas.
pub fn replica_mean(values: &[f64]) -> Estimate {
    use statrs::statistics::Statistics;
    let value = values.mean();
    let stderr = if values.len() < 2 {
        0.0
    } else {
        values.std_dev() / (values.len() as f64).sqrt()
    };
    Estimate { value, stderr }
}
