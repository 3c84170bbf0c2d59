//! Bernoulli bond percolation on windows with the monotone threshold coupling.
//!
//! Every edge carries one uniform label; the edge is open at level `p` iff
//! `label ≤ p`. Sharing labels across `p` makes open sets nested, so all
//! cluster statistics below are monotone in `p` for a fixed seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unionfind::UnionFind;
use crate::window::Window;

/// Name of the label generator; stored with every run.
pub const RNG_ID: &str = "chacha8";
pub const DEFAULT_FRACTION_THRESHOLD: f64 = 0.05;
pub const DEFAULT_MANY: usize = 10;

/// One uniform `[0, 1)` label per edge. Edge `e` receives the `e`-th draw of
/// a ChaCha8 stream keyed by the seed, so labels do not depend on the window
/// size and can be recomputed one at a time.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeLabels {
    pub seed: u64,
    labels: Vec<f64>,
}

impl EdgeLabels {
    pub fn generate(seed: u64, n_edges: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        EdgeLabels { seed, labels: (0..n_edges).map(|_| rng.random::<f64>()).collect() }
    }

    pub fn for_window(seed: u64, w: &Window) -> Self {
        Self::generate(seed, w.n_edges())
    }

    /// Label of edge `e` without generating the prefix.
    pub fn label_at(seed: u64, e: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // each f64 consumes one u64, i.e. two 32-bit words
        rng.set_word_pos(2 * e as u128);
        rng.random::<f64>()
    }

    pub fn from_values(seed: u64, labels: Vec<f64>) -> Self {
        EdgeLabels { seed, labels }
    }

    pub fn label(&self, e: usize) -> f64 {
        self.labels[e]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn is_open(&self, e: usize, p: f64) -> bool {
        self.labels[e] <= p
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Edge ids sorted by label, ties by id.
    pub fn order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.labels.len()).collect();
        order.sort_by(|&a, &b| self.labels[a].total_cmp(&self.labels[b]).then(a.cmp(&b)));
        order
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Cluster {
    /// Minimum vertex id.
    pub id: usize,
    pub size: usize,
    /// Number of boundary vertices in the cluster.
    pub boundary_touches: usize,
    pub open_edges: usize,
}

/// Connected components of the open subgraph.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterPartition {
    pub p: f64,
    pub cluster_of: Vec<usize>,
    /// Sorted by id.
    pub clusters: Vec<Cluster>,
}

impl ClusterPartition {
    pub fn cluster(&self, id: usize) -> &Cluster {
        let i = self.clusters.binary_search_by_key(&id, |c| c.id).expect("cluster id");
        &self.clusters[i]
    }

    /// Largest cluster; ties go to the smaller id.
    pub fn largest(&self) -> &Cluster {
        self.clusters.iter().max_by(|a, b| a.size.cmp(&b.size).then(b.id.cmp(&a.id))).expect("nonempty window")
    }

    pub fn count_at_least(&self, size: usize) -> usize {
        self.clusters.iter().filter(|c| c.size >= size).count()
    }

    pub fn members(&self, id: usize) -> Vec<usize> {
        (0..self.cluster_of.len()).filter(|&v| self.cluster_of[v] == id).collect()
    }
}

pub fn percolate(w: &Window, labels: &EdgeLabels, p: f64) -> ClusterPartition {
    percolate_edges(w, |e| labels.is_open(e, p), p)
}

/// Clusters of the subgraph formed by the edges selected by `open`.
pub fn percolate_edges(w: &Window, open: impl Fn(usize) -> bool, p: f64) -> ClusterPartition {
    let n = w.n_vertices();
    let mut uf = UnionFind::new(n);
    let is_open: Vec<bool> = (0..w.n_edges()).map(&open).collect();
    for (e, &(u, v, _)) in w.edges().iter().enumerate() {
        if is_open[e] {
            uf.union(u, v);
        }
    }
    let cluster_of = uf.min_labels();
    let mut index = vec![usize::MAX; n];
    let mut clusters = Vec::new();
    for (v, &id) in cluster_of.iter().enumerate() {
        if index[id] == usize::MAX {
            index[id] = clusters.len();
            clusters.push(Cluster { id, size: 0, boundary_touches: 0, open_edges: 0 });
        }
        let c = &mut clusters[index[id]];
        c.size += 1;
        c.boundary_touches += usize::from(w.is_boundary(v));
    }
    for (e, &(u, _, _)) in w.edges().iter().enumerate() {
        if is_open[e] {
            clusters[index[cluster_of[u]]].open_edges += 1;
        }
    }
    ClusterPartition { p, cluster_of, clusters }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Thresholds {
    /// p̂_c is the first grid point whose mean largest fraction exceeds this.
    #[serde(default = "default_fraction")]
    pub largest_fraction: f64,
    /// Size making a cluster "big"; defaults to |V|^0.6.
    #[serde(default)]
    pub big_size: Option<usize>,
    /// Number of big clusters counted as "many".
    #[serde(default = "default_many")]
    pub many: usize,
}

fn default_fraction() -> f64 {
    DEFAULT_FRACTION_THRESHOLD
}

fn default_many() -> usize {
    DEFAULT_MANY
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { largest_fraction: DEFAULT_FRACTION_THRESHOLD, big_size: None, many: DEFAULT_MANY }
    }
}

pub fn default_big_size(n_vertices: usize) -> usize {
    ((n_vertices as f64).powf(0.6).ceil() as usize).max(1)
}

/// Statistics of one (seed, p) configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PointStats {
    pub p: f64,
    pub seed: u64,
    pub largest: usize,
    pub largest_frac: f64,
    /// Clusters with at least `big_size` vertices.
    pub big_clusters: usize,
    /// Clusters containing at least one boundary vertex.
    pub boundary_clusters: usize,
    pub spanning: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PhaseReport {
    pub p_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub big_size: usize,
    pub fraction_threshold: f64,
    /// Sorted by (seed, p).
    pub stats: Vec<PointStats>,
    pub mean_largest_frac: Vec<f64>,
    pub mean_big_clusters: Vec<f64>,
    pub spanning_fraction: Vec<f64>,
    pub pc_hat: Option<f64>,
    /// Proxy only: mean number of big clusters at each grid point.
    pub uniqueness_indicator: Vec<f64>,
}

impl PhaseReport {
    /// Largest-cluster size never decreases along the grid for a fixed seed.
    pub fn is_monotone(&self) -> bool {
        self.stats.windows(2).all(|w| w[0].seed != w[1].seed || w[0].largest <= w[1].largest)
    }

    pub fn seed_stats(&self, seed: u64) -> impl Iterator<Item = &PointStats> {
        self.stats.iter().filter(move |s| s.seed == seed)
    }
}

fn check_grid(p_grid: &[f64]) -> Result<()> {
    for &p in p_grid {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
    }
    if p_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("p grid must be sorted ascending".into()));
    }
    Ok(())
}

/// Incremental sweep for one labeling: edges enter in label order and the
/// statistics are read off at each grid point.
pub fn sweep_labels(w: &Window, labels: &EdgeLabels, p_grid: &[f64], big_size: usize) -> Vec<PointStats> {
    let n = w.n_vertices();
    let mut uf = UnionFind::new(n);
    let mut touches: Vec<usize> = (0..n).map(|v| usize::from(w.is_boundary(v))).collect();
    let sides = w.sides();
    let (mut side_a, mut side_b): (Vec<bool>, Vec<bool>) = match sides {
        Some((a, b)) => (a.to_vec(), b.to_vec()),
        None => (vec![false; n], vec![false; n]),
    };
    let mut spanning = (0..n).any(|v| side_a[v] && side_b[v]);
    let mut largest = usize::from(n > 0);
    let mut big = if big_size <= 1 { n } else { 0 };
    let mut boundary_clusters = touches.iter().filter(|&&t| t > 0).count();
    let order = labels.order();
    let mut next = 0;
    let mut out = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        while next < order.len() && labels.label(order[next]) <= p {
            let (u, v, _) = w.edges()[order[next]];
            next += 1;
            let (ru, rv) = (uf.find(u), uf.find(v));
            if ru == rv {
                continue;
            }
            let (su, sv) = (uf.size_of(ru), uf.size_of(rv));
            let (tu, tv) = (touches[ru], touches[rv]);
            let root = uf.union(ru, rv).expect("distinct roots merge");
            let s = su + sv;
            big -= usize::from(su >= big_size) + usize::from(sv >= big_size);
            big += usize::from(s >= big_size);
            boundary_clusters -= usize::from(tu > 0) + usize::from(tv > 0);
            boundary_clusters += usize::from(tu + tv > 0);
            touches[root] = tu + tv;
            side_a[root] = side_a[ru] || side_a[rv];
            side_b[root] = side_b[ru] || side_b[rv];
            spanning |= side_a[root] && side_b[root];
            largest = largest.max(s);
        }
        out.push(PointStats {
            p,
            seed: labels.seed,
            largest,
            largest_frac: largest as f64 / n.max(1) as f64,
            big_clusters: big,
            boundary_clusters,
            spanning,
        });
    }
    out
}

/// Phase diagnostics over a grid, one shared labeling per seed.
pub fn sweep(w: &Window, p_grid: &[f64], seeds: &[u64], thresholds: &Thresholds) -> Result<PhaseReport> {
    check_grid(p_grid)?;
    let big_size = thresholds.big_size.unwrap_or_else(|| default_big_size(w.n_vertices()));
    let per_seed: Vec<Vec<PointStats>> = seeds
        .par_iter()
        .map(|&seed| sweep_labels(w, &EdgeLabels::for_window(seed, w), p_grid, big_size))
        .collect();
    Ok(summarize(p_grid, seeds, big_size, thresholds.largest_fraction, per_seed))
}

fn summarize(
    p_grid: &[f64],
    seeds: &[u64],
    big_size: usize,
    fraction_threshold: f64,
    per_seed: Vec<Vec<PointStats>>,
) -> PhaseReport {
    let k = seeds.len().max(1) as f64;
    let mean = |f: &dyn Fn(&PointStats) -> f64| -> Vec<f64> {
        (0..p_grid.len()).map(|i| per_seed.iter().map(|s| f(&s[i])).sum::<f64>() / k).collect()
    };
    let mean_largest_frac = mean(&|s| s.largest_frac);
    let mean_big_clusters = mean(&|s| s.big_clusters as f64);
    let spanning_fraction = mean(&|s| f64::from(u8::from(s.spanning)));
    let pc_hat = p_grid.iter().zip(&mean_largest_frac).find(|(_, &f)| f > fraction_threshold).map(|(&p, _)| p);
    let mut stats: Vec<PointStats> = per_seed.into_iter().flatten().collect();
    stats.sort_by(|a, b| a.seed.cmp(&b.seed).then(a.p.total_cmp(&b.p)));
    PhaseReport {
        p_grid: p_grid.to_vec(),
        seeds: seeds.to_vec(),
        big_size,
        fraction_threshold,
        stats,
        uniqueness_indicator: mean_big_clusters.clone(),
        mean_largest_frac,
        mean_big_clusters,
        spanning_fraction,
        pc_hat,
    }
}

/// The open interval of retention parameters for which nonuniqueness follows
/// from a spectral bound: `1/((2n − ‖T‖) + 1) < p < 1/‖T‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Interval {
    Open { lo: f64, hi: f64 },
    Empty { lo: f64, hi: f64 },
}

impl Interval {
    pub fn contains(&self, p: f64) -> bool {
        matches!(*self, Interval::Open { lo, hi } if lo < p && p < hi)
    }
}

pub fn interval_for_p(n: usize, norm_t: f64) -> Result<Interval> {
    let two_n = 2.0 * n as f64;
    if norm_t.is_nan() || norm_t <= 0.0 || norm_t > two_n {
        return Err(Error::NormAboveDegree { norm: norm_t, bound: two_n });
    }
    let lo = 1.0 / (two_n - norm_t + 1.0);
    let hi = 1.0 / norm_t;
    Ok(if lo < hi { Interval::Open { lo, hi } } else { Interval::Empty { lo, hi } })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProbeReport {
    pub p: f64,
    pub size_threshold: usize,
    pub many: usize,
    /// Big-cluster count per seed, in seed order.
    pub counts: Vec<usize>,
    pub mean_big_clusters: f64,
    pub fraction_of_seeds_with_many: f64,
}

/// Counts clusters of at least `size_threshold` vertices for each seed.
pub fn nonuniqueness_probe(
    w: &Window,
    p: f64,
    seeds: &[u64],
    size_threshold: usize,
    many: usize,
) -> Result<ProbeReport> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    let counts: Vec<usize> = seeds
        .par_iter()
        .map(|&seed| percolate(w, &EdgeLabels::for_window(seed, w), p).count_at_least(size_threshold))
        .collect();
    let k = seeds.len().max(1) as f64;
    Ok(ProbeReport {
        p,
        size_threshold,
        many,
        mean_big_clusters: counts.iter().sum::<usize>() as f64 / k,
        fraction_of_seeds_with_many: counts.iter().filter(|&&c| c >= many).count() as f64 / k,
        counts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RescaledReport {
    pub p0: f64,
    pub first_round_pc: f64,
    pub second_round_pc: Option<f64>,
    /// `first_round_pc / p0`.
    pub predicted: f64,
    /// Grid spacing plus twice the standard error of the per-seed estimates.
    pub width: f64,
    pub consistent: bool,
}

/// Percolates at `p0`, then sweeps a second round on the open subgraph of
/// each seed's largest cluster. Surviving labels are uniform on `[0, p0]`, so
/// `label / p0` is a fresh uniform label for the second round. Fractions are
/// taken relative to the whole window.
pub fn rescaled_pc(
    w: &Window,
    p0: f64,
    q_grid: &[f64],
    seeds: &[u64],
    thresholds: &Thresholds,
    first_round: &PhaseReport,
) -> Result<RescaledReport> {
    check_grid(q_grid)?;
    let pc = first_round.pc_hat.ok_or(Error::FirstRoundSubcritical { p0, pc: f64::NAN })?;
    if p0.partial_cmp(&pc) != Some(std::cmp::Ordering::Greater) || p0 > 1.0 {
        return Err(Error::FirstRoundSubcritical { p0, pc });
    }
    let big_size = thresholds.big_size.unwrap_or_else(|| default_big_size(w.n_vertices()));
    let per_seed: Vec<Vec<PointStats>> = seeds
        .par_iter()
        .map(|&seed| {
            let labels = EdgeLabels::for_window(seed, w);
            let first = percolate(w, &labels, p0);
            let giant = first.largest().id;
            let second: Vec<f64> = (0..w.n_edges())
                .map(|e| {
                    let (u, _, _) = w.edges()[e];
                    if labels.label(e) <= p0 && first.cluster_of[u] == giant {
                        labels.label(e) / p0
                    } else {
                        f64::INFINITY
                    }
                })
                .collect();
            sweep_labels(w, &EdgeLabels::from_values(seed, second), q_grid, big_size)
        })
        .collect();
    let per_seed_pc: Vec<f64> = per_seed
        .iter()
        .filter_map(|s| s.iter().find(|x| x.largest_frac > thresholds.largest_fraction).map(|x| x.p))
        .collect();
    let report = summarize(q_grid, seeds, big_size, thresholds.largest_fraction, per_seed);
    let step = q_grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let k = per_seed_pc.len() as f64;
    let stderr = if per_seed_pc.len() > 1 {
        let m = per_seed_pc.iter().sum::<f64>() / k;
        (per_seed_pc.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        0.0
    };
    let predicted = pc / p0;
    let width = step + 2.0 * stderr;
    Ok(RescaledReport {
        p0,
        first_round_pc: pc,
        second_round_pc: report.pc_hat,
        predicted,
        width,
        consistent: report.pc_hat.is_some_and(|q| (q - predicted).abs() <= width + 1e-12),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrichotomyReport {
    pub p_grid: Vec<f64>,
    pub sizes: Vec<usize>,
    /// Mean big-cluster count, indexed `[window][p]`.
    pub mean_big_clusters: Vec<Vec<f64>>,
    /// Grid points where the count sits at the same value in 2..=9 for every window.
    pub stalled_at_intermediate: Vec<f64>,
}

/// Proxy for the 0/1/∞ dichotomy of the number of infinite clusters: across
/// growing windows, the mean number of big clusters should not settle on a
/// fixed value between 2 and 9. A count is "settled" at `c` when every
/// window's mean lies within 0.5 of `c`.
pub fn trichotomy_proxy(windows: &[Window], p_grid: &[f64], seeds: &[u64]) -> Result<TrichotomyReport> {
    let mut mean_big_clusters = Vec::new();
    for w in windows {
        mean_big_clusters.push(sweep(w, p_grid, seeds, &Thresholds::default())?.mean_big_clusters);
    }
    let stalled_at_intermediate = (0..p_grid.len())
        .filter(|&i| {
            (2..=9).any(|c| mean_big_clusters.iter().all(|m| (m[i] - c as f64).abs() < 0.5))
        })
        .map(|i| p_grid[i])
        .collect();
    Ok(TrichotomyReport {
        p_grid: p_grid.to_vec(),
        sizes: windows.iter().map(Window::n_vertices).collect(),
        mean_big_clusters,
        stalled_at_intermediate,
    })
}

/// Evenly spaced grid from `lo` to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::GeneratorSpec;

    #[test]
    fn random_access_labels_match_stream() {
        let l = EdgeLabels::generate(42, 100);
        for e in [0, 1, 17, 99] {
            assert_eq!(EdgeLabels::label_at(42, e), l.label(e));
        }
        assert_eq!(EdgeLabels::generate(42, 10).labels(), &l.labels()[..10]);
    }

    #[test]
    fn extreme_retention() {
        let w = Window::build(&GeneratorSpec::Grid { dims: vec![6, 5] }, 0).unwrap();
        let l = EdgeLabels::for_window(3, &w);
        let closed = percolate(&w, &l, 0.0);
        assert_eq!(closed.clusters.len(), 30);
        let open = percolate(&w, &l, 1.0);
        assert_eq!(open.clusters.len(), 1);
        assert_eq!(open.clusters[0].open_edges, w.n_edges());
    }

    #[test]
    fn sweep_agrees_with_direct_percolation() {
        let w = Window::build(&GeneratorSpec::Grid { dims: vec![20, 20] }, 0).unwrap();
        let p_grid = grid(0.3, 0.7, 0.1);
        let th = Thresholds { big_size: Some(20), ..Thresholds::default() };
        let r = sweep(&w, &p_grid, &[1, 2], &th).unwrap();
        assert!(r.is_monotone());
        for s in &r.stats {
            let part = percolate(&w, &EdgeLabels::for_window(s.seed, &w), s.p);
            assert_eq!(s.largest, part.largest().size);
            assert_eq!(s.big_clusters, part.count_at_least(20));
            assert_eq!(s.boundary_clusters, part.clusters.iter().filter(|c| c.boundary_touches > 0).count());
            let (a, b) = w.sides().unwrap();
            let spans = part.clusters.iter().any(|c| {
                let m = part.members(c.id);
                m.iter().any(|&v| a[v]) && m.iter().any(|&v| b[v])
            });
            assert_eq!(s.spanning, spans);
        }
    }

    #[test]
    fn interval_examples() {
        match interval_for_p(8, 2.0 * 15f64.sqrt()).unwrap() {
            Interval::Open { lo, hi } => {
                assert!((lo - 0.10806).abs() < 1e-5 && (hi - 0.12910).abs() < 1e-5);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(interval_for_p(3, 6.0).unwrap(), Interval::Empty { lo, .. } if lo == 1.0));
        match interval_for_p(2, 2.0 * 3f64.sqrt()).unwrap() {
            Interval::Empty { lo, hi } => assert!((lo - 0.651).abs() < 1e-3 && (hi - 0.2887).abs() < 1e-4),
            other => panic!("{other:?}"),
        }
        assert!(interval_for_p(2, 4.5).is_err());
        assert!(interval_for_p(2, 0.0).is_err());
    }
}
