//! Finite windows of Cayley and Schreier graphs.
//!
//! Vertices are dense ids; for balls and grids they are numbered in BFS order
//! from the center, so vertex 0 is the center and every ball of radius `r` is
//! an id prefix of the ball of radius `r + 1`. Edges of balls are numbered by
//! their far endpoint, so edge ids are prefix-stable too.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eqrel::{Automorphism, EqRel, ProbSpace};
use crate::error::{Error, Result};
use crate::graphing::Graphing;
use crate::unionfind::UnionFind;

/// How to build a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Ball in the Cayley graph of the free group of the given rank.
    Free { rank: usize },
    /// Ball in the d-regular tree (d may be odd).
    Tree { degree: usize },
    /// Box in ℤ^k with side lengths `dims`; the radius is ignored.
    Grid { dims: Vec<usize> },
    /// Schreier graph of explicit permutations; the radius is ignored.
    Perm { generators: Vec<Vec<usize>> },
    /// Schreier graph of `rank` uniformly random permutations of `points`.
    RandomPerm { rank: usize, points: usize, seed: u64 },
}

/// A finite multigraph with truncation boundary.
#[derive(Clone, Debug)]
pub struct Window {
    degree: usize,
    edges: Vec<(usize, usize, usize)>,
    offsets: Vec<usize>,
    adj: Vec<(usize, usize)>,
    boundary: Vec<bool>,
    depth: Vec<usize>,
    radius: usize,
    sides: Option<(Vec<bool>, Vec<bool>)>,
}

impl Window {
    /// Assembles a window from an edge list; `depth` is recomputed by BFS from vertex 0.
    pub fn from_edges(
        n: usize,
        degree: usize,
        edges: Vec<(usize, usize, usize)>,
        boundary: Vec<bool>,
        sides: Option<(Vec<bool>, Vec<bool>)>,
    ) -> Self {
        let mut count = vec![0usize; n + 1];
        for &(u, v, _) in &edges {
            count[u + 1] += 1;
            count[v + 1] += 1;
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let offsets = count.clone();
        let mut fill = count;
        let mut adj = vec![(0, 0); 2 * edges.len()];
        for (e, &(u, v, _)) in edges.iter().enumerate() {
            adj[fill[u]] = (v, e);
            fill[u] += 1;
            adj[fill[v]] = (u, e);
            fill[v] += 1;
        }
        let mut w = Window { degree, edges, offsets, adj, boundary, depth: Vec::new(), radius: 0, sides };
        w.depth = w.distances_from(0);
        w.radius = w.depth.iter().copied().filter(|&d| d != usize::MAX).max().unwrap_or(0);
        w
    }

    pub fn build(spec: &GeneratorSpec, radius: usize) -> Result<Self> {
        match spec {
            GeneratorSpec::Free { rank } => {
                if *rank == 0 {
                    return Err(Error::InvalidArgument("free group rank must be positive".into()));
                }
                Ok(Self::tree_ball(2 * rank, radius, true))
            }
            GeneratorSpec::Tree { degree } => {
                if *degree < 2 {
                    return Err(Error::InvalidArgument("tree degree must be at least 2".into()));
                }
                Ok(Self::tree_ball(*degree, radius, false))
            }
            GeneratorSpec::Grid { dims } => Self::grid(dims),
            GeneratorSpec::Perm { generators } => {
                let gens = generators
                    .iter()
                    .map(|g| Automorphism::new(g.clone()))
                    .collect::<Result<Vec<_>>>()?;
                Self::schreier(&gens)
            }
            GeneratorSpec::RandomPerm { rank, points, seed } => {
                Self::schreier(&random_permutations(*rank, *points, *seed))
            }
        }
    }

    /// Ball of the given radius in the `degree`-regular tree. With `free`,
    /// edge colors are free generators (letter `2i` is `aᵢ`, `2i+1` is `aᵢ⁻¹`).
    fn tree_ball(degree: usize, radius: usize, free: bool) -> Self {
        // slot of the edge to the parent, or usize::MAX at the root
        let mut parent_slot = vec![usize::MAX];
        let mut edges = Vec::new();
        let mut level_start = 0;
        for _ in 0..radius {
            let level_end = parent_slot.len();
            for v in level_start..level_end {
                for slot in 0..degree {
                    let back = if free { slot ^ 1 } else { slot };
                    if parent_slot[v] != usize::MAX && back == parent_slot[v] {
                        continue;
                    }
                    let child = parent_slot.len();
                    parent_slot.push(back);
                    let color = if free { slot / 2 } else { slot };
                    edges.push((v, child, color));
                }
            }
            level_start = level_end;
        }
        let n = parent_slot.len();
        let mut boundary = vec![false; n];
        for b in boundary.iter_mut().skip(level_start) {
            *b = radius > 0;
        }
        if radius == 0 {
            boundary[0] = true;
        }
        let sides = Some(((0..n).map(|v| v == 0).collect(), boundary.clone()));
        Window::from_edges(n, degree, edges, boundary, sides)
    }

    fn grid(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidArgument("grid dimensions must be positive".into()));
        }
        let n: usize = dims.iter().product();
        let coords = |mut i: usize| -> Vec<usize> {
            dims.iter()
                .map(|&l| {
                    let c = i % l;
                    i /= l;
                    c
                })
                .collect()
        };
        let center: Vec<usize> = dims.iter().map(|&l| (l - 1) / 2).collect();
        let dist = |c: &[usize]| -> usize { c.iter().zip(&center).map(|(&a, &b)| a.abs_diff(b)).sum() };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (dist(&coords(i)), i));
        let mut id = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            id[old] = new;
        }
        let mut stride = vec![1; dims.len()];
        for k in 1..dims.len() {
            stride[k] = stride[k - 1] * dims[k - 1];
        }
        let mut edges = Vec::new();
        let mut boundary = vec![false; n];
        let mut side_a = vec![false; n];
        let mut side_b = vec![false; n];
        for &old in &order {
            let c = coords(old);
            let v = id[old];
            boundary[v] = c.iter().zip(dims).any(|(&x, &l)| x == 0 || x + 1 == l);
            side_a[v] = c[0] == 0;
            side_b[v] = c[0] + 1 == dims[0];
            for k in 0..dims.len() {
                if c[k] + 1 < dims[k] {
                    edges.push((v, id[old + stride[k]], k));
                }
            }
        }
        Ok(Window::from_edges(n, 2 * dims.len(), edges, boundary, Some((side_a, side_b))))
    }

    fn schreier(gens: &[Automorphism]) -> Result<Self> {
        let n = gens.first().map_or(0, Automorphism::len);
        if n == 0 || gens.iter().any(|g| g.len() != n) {
            return Err(Error::InvalidArgument("generators must be permutations of one nonempty set".into()));
        }
        let edges = (0..n)
            .flat_map(|x| gens.iter().enumerate().map(move |(i, g)| (x, g.apply(x), i)))
            .collect();
        Ok(Window::from_edges(n, 2 * gens.len(), edges, vec![false; n], None))
    }

    /// The union of the class graphs of a graphing, as one boundaryless window.
    pub fn from_graphing(g: &Graphing) -> Self {
        Self::schreier(&g.gens).expect("graphing generators share the point set")
    }

    pub fn n_vertices(&self) -> usize {
        self.boundary.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize, usize)] {
        &self.edges
    }

    /// Degree of the infinite graph the window truncates.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary(&self) -> &[bool] {
        &self.boundary
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    /// Two vertex sets whose connection defines a spanning cluster.
    pub fn sides(&self) -> Option<(&[bool], &[bool])> {
        self.sides.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice()))
    }

    /// `(neighbor, edge id)` pairs; a self-loop appears twice.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn vertex_degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn distances_from(&self, root: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n_vertices()];
        if self.n_vertices() == 0 {
            return dist;
        }
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &(w, _) in self.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.n_vertices());
        for &(u, v, _) in &self.edges {
            uf.union(u, v);
        }
        uf.components() <= 1
    }

    /// y = A x with self-loops counted twice.
    pub fn apply_adjacency(&self, x: &[f64], y: &mut [f64]) {
        for (v, yv) in y.iter_mut().enumerate() {
            *yv = self.neighbors(v).iter().map(|&(w, _)| x[w]).sum();
        }
    }

    /// Sanity check: interior vertices have full degree, boundary vertices at most full.
    pub fn check_degrees(&self) -> Result<()> {
        for v in 0..self.n_vertices() {
            let d = self.vertex_degree(v);
            if d > self.degree || (!self.boundary[v] && d != self.degree) {
                return Err(Error::InvalidArgument(format!("vertex {v} has degree {d}")));
            }
        }
        Ok(())
    }

    /// The window's connected components as an equivalence relation with uniform weights.
    pub fn component_relation(&self) -> EqRel {
        let mut uf = UnionFind::new(self.n_vertices());
        for &(u, v, _) in &self.edges {
            uf.union(u, v);
        }
        EqRel::from_labels(ProbSpace::uniform(self.n_vertices()), &uf.min_labels())
            .expect("uniform weights are class-constant")
    }
}

/// `rank` independent uniform permutations of `0..points`, reproducible from `seed`.
pub fn random_permutations(rank: usize, points: usize, seed: u64) -> Vec<Automorphism> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rank)
        .map(|_| {
            let mut p: Vec<usize> = (0..points).collect();
            p.shuffle(&mut rng);
            Automorphism::new(p).expect("shuffle is a permutation")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball_size(d: usize, r: u32) -> usize {
        1 + (0..r).map(|k| d * (d - 1).pow(k)).sum::<usize>()
    }

    #[test]
    fn tree_balls_have_sphere_arithmetic_sizes() {
        for (spec, d) in [
            (GeneratorSpec::Tree { degree: 3 }, 3),
            (GeneratorSpec::Free { rank: 2 }, 4),
            (GeneratorSpec::Free { rank: 3 }, 6),
        ] {
            for r in 0..5 {
                let w = Window::build(&spec, r).unwrap();
                assert_eq!(w.n_vertices(), ball_size(d, r as u32));
                assert_eq!(w.n_edges(), w.n_vertices() - 1);
                assert_eq!(w.radius(), r);
                w.check_degrees().unwrap();
                assert!(w.is_connected());
            }
        }
    }

    #[test]
    fn free_ball_edges_reduce_words() {
        // every vertex sees each generator at most once in each direction
        let w = Window::build(&GeneratorSpec::Free { rank: 2 }, 3).unwrap();
        for v in 0..w.n_vertices() {
            let mut colors = vec![0; 2];
            for &(_, e) in w.neighbors(v) {
                colors[w.edges()[e].2] += 1;
            }
            assert!(colors.iter().all(|&c| c <= 2));
            if !w.is_boundary(v) {
                assert_eq!(colors, vec![2, 2]);
            }
        }
    }

    #[test]
    fn balls_are_id_prefixes() {
        let small = Window::build(&GeneratorSpec::Free { rank: 2 }, 2).unwrap();
        let big = Window::build(&GeneratorSpec::Free { rank: 2 }, 4).unwrap();
        assert_eq!(small.edges(), &big.edges()[..small.n_edges()]);
    }

    #[test]
    fn grid_is_centered_and_sided() {
        let w = Window::build(&GeneratorSpec::Grid { dims: vec![5, 5] }, 0).unwrap();
        assert_eq!(w.n_vertices(), 25);
        assert_eq!(w.n_edges(), 40);
        assert_eq!(w.vertex_degree(0), 4);
        assert_eq!(w.radius(), 4);
        let (a, b) = w.sides().unwrap();
        assert_eq!(a.iter().filter(|&&s| s).count(), 5);
        assert_eq!(b.iter().filter(|&&s| s).count(), 5);
        w.check_degrees().unwrap();
    }

    #[test]
    fn schreier_graph_is_regular_with_loops() {
        let w = Window::build(
            &GeneratorSpec::Perm { generators: vec![vec![1, 2, 0], vec![0, 1, 2]] },
            0,
        )
        .unwrap();
        assert!((0..3).all(|v| w.vertex_degree(v) == 4));
        let mut y = vec![0.0; 3];
        w.apply_adjacency(&[1.0, 1.0, 1.0], &mut y);
        assert_eq!(y, vec![4.0; 3]);
    }

    #[test]
    fn spec_parses_kebab_case_tags() {
        let s: GeneratorSpec =
            serde_json::from_str(r#"{"type":"random-perm","rank":3,"points":10,"seed":7}"#).unwrap();
        assert_eq!(s, GeneratorSpec::RandomPerm { rank: 3, points: 10, seed: 7 });
        assert!(serde_json::from_str::<GeneratorSpec>(r#"{"type":"free","rank":2,"extra":1}"#).is_err());
    }
}
