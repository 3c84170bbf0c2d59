//! Cluster relations of percolation configurations: the exact relation on
//! enumerated extensions, and window-level witnesses (ends counts, cycle
//! densities, exchangeability of big clusters).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eqrel::EqRel;
use crate::error::Result;
use crate::extension::PercolationExtension;
use crate::percolation::{percolate, ClusterPartition, EdgeLabels};
use crate::unionfind::UnionFind;
use crate::window::Window;

/// Same class, same configuration, and same open cluster.
#[derive(Clone, Debug)]
pub struct ClusterRelation {
    pub rel: EqRel,
    /// Size of the cluster of every point.
    pub cluster_size: Vec<usize>,
    /// Points whose cluster has at least `big_size` vertices.
    pub locus: Vec<bool>,
    pub big_size: usize,
}

impl ClusterRelation {
    /// Exhaustive containment in the extended relation.
    pub fn is_subrelation_of(&self, ext: &EqRel) -> bool {
        self.rel.refines(ext).is_ok()
    }

    /// The locus is a union of classes.
    pub fn locus_is_invariant(&self) -> bool {
        self.rel.classes().iter().all(|c| c.iter().all(|&x| self.locus[x] == self.locus[c[0]]))
    }
}

pub fn cluster_relation(ext: &PercolationExtension, big_size: usize) -> Result<ClusterRelation> {
    let g = &ext.graphing;
    let n = ext.len();
    let mut labels = vec![0; n];
    let mut cluster_size = vec![0; n];
    // every extension class is one (class, configuration) block
    for block in ext.rel.classes() {
        let (x0, mask) = ext.decode(block[0]);
        let ci = g.rel.class_index(x0);
        let class = &g.rel.classes()[ci];
        let mut uf = UnionFind::new(class.len());
        for (i, theta) in g.gens.iter().enumerate() {
            for (pos, &y) in class.iter().enumerate() {
                if ext.is_open(ci, mask, pos, i) {
                    uf.union(pos, class.binary_search(&theta.apply(y)).unwrap());
                }
            }
        }
        let roots = uf.min_labels();
        for (pos, &id) in block.iter().enumerate() {
            labels[id] = block[roots[pos]];
            cluster_size[id] = uf.size_of(pos);
        }
    }
    let rel = EqRel::from_labels(ext.rel.space().clone(), &labels)?;
    let locus = cluster_size.iter().map(|&s| s >= big_size).collect();
    Ok(ClusterRelation { rel, cluster_size, locus, big_size })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EndsVerdict {
    One,
    Two,
    ThreePlus,
    Inconclusive,
}

impl std::fmt::Display for EndsVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EndsVerdict::One => "one",
            EndsVerdict::Two => "two",
            EndsVerdict::ThreePlus => "threePlus",
            EndsVerdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EndsEstimate {
    pub cluster: usize,
    pub scales: Vec<usize>,
    /// Components of (cluster ∖ ball) that reach the boundary, per scale.
    pub counts: Vec<usize>,
    pub verdict: EndsVerdict,
}

/// Radii r, 2r, 4r with r = max(1, radius/8).
pub fn default_scales(w: &Window) -> Vec<usize> {
    let r = (w.radius() / 8).max(1);
    vec![r, 2 * r, 4 * r]
}

/// Deletes the ball of each radius around the cluster root (its minimum
/// vertex) and counts open components of the remainder that reach the boundary.
pub fn ends_estimate(
    w: &Window,
    labels: &EdgeLabels,
    partition: &ClusterPartition,
    cluster_id: usize,
    scales: &[usize],
) -> EndsEstimate {
    let cluster = partition.cluster(cluster_id);
    if cluster.boundary_touches == 0 || scales.is_empty() {
        return EndsEstimate {
            cluster: cluster_id,
            scales: scales.to_vec(),
            counts: vec![0; scales.len()],
            verdict: EndsVerdict::Inconclusive,
        };
    }
    let dist = w.distances_from(cluster_id);
    let in_cluster = |v: usize| partition.cluster_of[v] == cluster_id;
    let counts: Vec<usize> = scales
        .iter()
        .map(|&r| {
            let outside = |v: usize| in_cluster(v) && dist[v] > r;
            let mut uf = UnionFind::new(w.n_vertices());
            for (e, &(u, v, _)) in w.edges().iter().enumerate() {
                if labels.is_open(e, partition.p) && outside(u) && outside(v) {
                    uf.union(u, v);
                }
            }
            let mut roots: Vec<usize> =
                (0..w.n_vertices()).filter(|&v| outside(v) && w.is_boundary(v)).map(|v| uf.find(v)).collect();
            roots.sort_unstable();
            roots.dedup();
            roots.len()
        })
        .collect();
    let verdict = if counts.iter().all(|&c| c >= 3) {
        EndsVerdict::ThreePlus
    } else if counts.iter().all(|&c| c == counts[0]) {
        match counts[0] {
            1 => EndsVerdict::One,
            2 => EndsVerdict::Two,
            _ => EndsVerdict::Inconclusive,
        }
    } else {
        EndsVerdict::Inconclusive
    };
    EndsEstimate { cluster: cluster_id, scales: scales.to_vec(), counts, verdict }
}

/// Cycle and forest counts of the open subgraph on the big clusters.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CostProxy {
    pub clusters: usize,
    pub vertices: usize,
    pub open_edges: usize,
    /// |V| − #clusters.
    pub forest_edges: usize,
    /// |E_open| − |V| + #clusters; never negative.
    pub first_betti: usize,
    /// forest_edges / |V|, always below 1.
    pub forest_ratio: f64,
    pub betti_density: f64,
}

/// First Betti number of one cluster.
pub fn cluster_betti(partition: &ClusterPartition, id: usize) -> usize {
    let c = partition.cluster(id);
    c.open_edges + 1 - c.size
}

pub fn cost_proxies(partition: &ClusterPartition, big_size: usize) -> CostProxy {
    let big: Vec<_> = partition.clusters.iter().filter(|c| c.size >= big_size).collect();
    let vertices: usize = big.iter().map(|c| c.size).sum();
    let open_edges: usize = big.iter().map(|c| c.open_edges).sum();
    let forest_edges = vertices - big.len();
    let first_betti = open_edges - forest_edges;
    let ratio = |a: usize| if vertices == 0 { 0.0 } else { a as f64 / vertices as f64 };
    CostProxy {
        clusters: big.len(),
        vertices,
        open_edges,
        forest_edges,
        first_betti,
        forest_ratio: ratio(forest_edges),
        betti_density: ratio(first_betti),
    }
}

/// Paired sign-flip permutation test of `E[a − b] = 0`; two-sided p-value.
pub fn paired_permutation_test(pairs: &[(f64, f64)], permutations: usize, seed: u64) -> f64 {
    if pairs.is_empty() {
        return 1.0;
    }
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
    let observed = diffs.iter().sum::<f64>().abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extreme = (0..permutations)
        .filter(|_| {
            let s: f64 = diffs.iter().map(|&d| if rng.random::<bool>() { d } else { -d }).sum();
            s.abs() >= observed - 1e-12
        })
        .count();
    (extreme + 1) as f64 / (permutations + 1) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExchangeabilityReport {
    pub pairs: usize,
    /// (feature name, p-value).
    pub features: Vec<(String, f64)>,
    /// Bonferroni-adjusted minimum p-value.
    pub aggregate_p: f64,
    pub rejects_at_001: bool,
}

/// Compares the two big clusters with the smallest ids in each configuration
/// on size, cycle density and boundary density. Ids are vertex labels, so
/// the pairing is unrelated to the features when clusters are indistinguishable.
pub fn exchangeability(
    w: &Window,
    p: f64,
    seeds: &[u64],
    big_size: usize,
    permutations: usize,
    test_seed: u64,
) -> ExchangeabilityReport {
    let pairs: Vec<([f64; 3], [f64; 3])> = seeds
        .par_iter()
        .filter_map(|&seed| {
            let part = percolate(w, &EdgeLabels::for_window(seed, w), p);
            let big: Vec<_> = part.clusters.iter().filter(|c| c.size >= big_size).take(2).collect();
            if big.len() < 2 {
                return None;
            }
            let f = |c: &crate::percolation::Cluster| {
                [
                    (c.size as f64).ln(),
                    (c.open_edges + 1 - c.size) as f64 / c.size as f64,
                    c.boundary_touches as f64 / c.size as f64,
                ]
            };
            Some((f(big[0]), f(big[1])))
        })
        .collect();
    let names = ["logSize", "bettiDensity", "boundaryDensity"];
    let results: Vec<(String, f64)> = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let column: Vec<(f64, f64)> = pairs.iter().map(|(a, b)| (a[k], b[k])).collect();
            (name.to_string(), paired_permutation_test(&column, permutations, test_seed.wrapping_add(k as u64)))
        })
        .collect();
    let min_p = results.iter().map(|r| r.1).fold(1.0, f64::min);
    let aggregate_p = (min_p * names.len() as f64).min(1.0);
    ExchangeabilityReport { pairs: pairs.len(), features: results, aggregate_p, rejects_at_001: aggregate_p < 0.01 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqrel::{ratio, Automorphism, ProbSpace};
    use crate::extension::DEFAULT_BUDGET;
    use crate::graphing::Graphing;

    fn open_window(n: usize, edges: Vec<(usize, usize)>, boundary: Vec<usize>) -> (Window, EdgeLabels) {
        let mut b = vec![false; n];
        for v in boundary {
            b[v] = true;
        }
        let m = edges.len();
        let w = Window::from_edges(n, 3, edges.into_iter().map(|(u, v)| (u, v, 0)).collect(), b, None);
        (w, EdgeLabels::from_values(0, vec![0.0; m]))
    }

    #[test]
    fn path_crossing_has_two_ends() {
        // path 3-2-1-0-4-5-6 with both ends on the boundary; root is vertex 0
        let (w, labels) = open_window(7, vec![(0, 1), (1, 2), (2, 3), (0, 4), (4, 5), (5, 6)], vec![3, 6]);
        let part = percolate(&w, &labels, 1.0);
        let e = ends_estimate(&w, &labels, &part, 0, &[0, 1]);
        assert_eq!(e.counts, vec![2, 2]);
        assert_eq!(e.verdict, EndsVerdict::Two);
    }

    #[test]
    fn tripod_has_three_ends() {
        let edges = vec![(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6)];
        let (w, labels) = open_window(7, edges, vec![2, 4, 6]);
        let part = percolate(&w, &labels, 1.0);
        assert_eq!(ends_estimate(&w, &labels, &part, 0, &[0, 1]).verdict, EndsVerdict::ThreePlus);
    }

    #[test]
    fn interior_cluster_is_inconclusive() {
        let (w, labels) = open_window(3, vec![(0, 1)], vec![2]);
        let part = percolate(&w, &labels, 1.0);
        assert_eq!(ends_estimate(&w, &labels, &part, 0, &[1]).verdict, EndsVerdict::Inconclusive);
    }

    #[test]
    fn betti_of_cycle_and_tree() {
        let (w, labels) = open_window(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)], vec![]);
        let part = percolate(&w, &labels, 1.0);
        assert_eq!(cost_proxies(&part, 1).first_betti, 1);
        let (w, labels) = open_window(4, vec![(0, 1), (1, 2), (1, 3)], vec![]);
        let part = percolate(&w, &labels, 1.0);
        let c = cost_proxies(&part, 1);
        assert_eq!(c.first_betti, 0);
        assert!(c.forest_ratio < 1.0);
    }

    #[test]
    fn three_cycle_with_one_open_edge() {
        let g = Graphing::generated(ProbSpace::uniform(3), vec![Automorphism::new(vec![1, 2, 0]).unwrap()]).unwrap();
        let ext = PercolationExtension::build(&g, &ratio(1, 2), DEFAULT_BUDGET).unwrap();
        let cl = cluster_relation(&ext, 2).unwrap();
        assert!(cl.is_subrelation_of(&ext.rel));
        assert!(cl.locus_is_invariant());
        // configuration with only edge (0, 1) open
        let block = ext.rel.classes().iter().find(|b| ext.decode(b[0]).1 == 0b001).unwrap();
        assert!(cl.rel.same_class(block[0], block[1]));
        assert!(!cl.rel.same_class(block[0], block[2]));
        assert_eq!(cl.rel.class_members(block[2]).len(), 1);
        assert!(cl.locus[block[0]] && !cl.locus[block[2]]);
    }

    #[test]
    fn extreme_parameters() {
        let g = Graphing::generated(
            ProbSpace::uniform(4),
            vec![Automorphism::new(vec![1, 0, 3, 2]).unwrap(), Automorphism::new(vec![2, 3, 0, 1]).unwrap()],
        )
        .unwrap();
        let full = cluster_relation(&PercolationExtension::build(&g, &ratio(1, 1), DEFAULT_BUDGET).unwrap(), 1).unwrap();
        assert_eq!(full.rel.num_classes(), 1);
        let empty = cluster_relation(&PercolationExtension::build(&g, &ratio(0, 1), DEFAULT_BUDGET).unwrap(), 1).unwrap();
        assert_eq!(empty.rel.num_classes(), 4);
    }

    #[test]
    fn permutation_test_detects_shift() {
        let same: Vec<(f64, f64)> = (0..40).map(|i| (i as f64, i as f64 + if i % 2 == 0 { 0.1 } else { -0.1 })).collect();
        assert!(paired_permutation_test(&same, 999, 1) > 0.5);
        let shifted: Vec<(f64, f64)> = (0..40).map(|i| (i as f64 + 1.0, i as f64)).collect();
        assert!(paired_permutation_test(&shifted, 999, 1) < 0.01);
    }
}
