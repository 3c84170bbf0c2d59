//! Graphings: finitely many full-group automorphisms generating a relation.

use crate::eqrel::{Automorphism, EqRel};
use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

#[derive(Clone, Debug)]
pub struct Graphing {
    pub rel: EqRel,
    pub gens: Vec<Automorphism>,
}

impl Graphing {
    /// Checks that every generator lies in the full group and that the
    /// generators produce exactly the classes of `rel`.
    pub fn new(rel: EqRel, gens: Vec<Automorphism>) -> Result<Self> {
        for g in &gens {
            rel.check_automorphism(g)?;
        }
        let g = Graphing { rel, gens };
        if !g.is_generating() {
            return Err(Error::InvalidArgument("generators do not generate the relation".into()));
        }
        Ok(g)
    }

    /// Graphing together with the relation its generators produce.
    pub fn generated(space: crate::eqrel::ProbSpace, gens: Vec<Automorphism>) -> Result<Self> {
        let rel = EqRel::generated_by(space, &gens)?;
        Self::new(rel, gens)
    }

    pub fn rank(&self) -> usize {
        self.gens.len()
    }

    pub fn is_generating(&self) -> bool {
        let mut uf = UnionFind::new(self.rel.len());
        for g in &self.gens {
            for x in 0..self.rel.len() {
                uf.union(x, g.apply(x));
            }
        }
        uf.components() == self.rel.num_classes()
    }

    pub fn class_graphs(&self) -> Vec<ClassGraph> {
        self.rel
            .classes()
            .iter()
            .map(|c| ClassGraph {
                vertices: c.clone(),
                edges: c
                    .iter()
                    .flat_map(|&y| self.gens.iter().enumerate().map(move |(i, g)| (y, g.apply(y), i)))
                    .collect(),
            })
            .collect()
    }
}

/// The multigraph on one class: one edge `(y, θᵢ(y), i)` per point and generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassGraph {
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize, usize)>,
}

impl ClassGraph {
    /// Degree of every vertex, self-loops counted twice.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for &(u, v, _) in &self.edges {
            deg[self.local(u)] += 1;
            deg[self.local(v)] += 1;
        }
        deg
    }

    pub fn local(&self, x: usize) -> usize {
        self.vertices.binary_search(&x).expect("vertex of this class")
    }

    /// Symmetric adjacency in local coordinates; a self-loop adds 2 to the diagonal.
    pub fn adjacency(&self) -> nalgebra::DMatrix<f64> {
        let k = self.vertices.len();
        let mut a = nalgebra::DMatrix::zeros(k, k);
        for &(u, v, _) in &self.edges {
            let (i, j) = (self.local(u), self.local(v));
            a[(i, j)] += 1.0;
            a[(j, i)] += 1.0;
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqrel::ProbSpace;

    #[test]
    fn swap_gives_two_parallel_edges() {
        let g = Graphing::generated(ProbSpace::uniform(2), vec![Automorphism::new(vec![1, 0]).unwrap()])
            .unwrap();
        let cg = g.class_graphs();
        assert_eq!(cg.len(), 1);
        assert_eq!(cg[0].edges, vec![(0, 1, 0), (1, 0, 0)]);
        assert_eq!(cg[0].degrees(), vec![2, 2]);
    }

    #[test]
    fn fixed_point_is_a_degree_two_loop() {
        let g = Graphing::generated(ProbSpace::uniform(1), vec![Automorphism::identity(1)]).unwrap();
        let cg = &g.class_graphs()[0];
        assert_eq!(cg.edges, vec![(0, 0, 0)]);
        assert_eq!(cg.degrees(), vec![2]);
        assert_eq!(cg.adjacency()[(0, 0)], 2.0);
    }

    #[test]
    fn edge_count_is_rank_times_class_size() {
        let a = Automorphism::new(vec![1, 2, 0, 4, 3]).unwrap();
        let b = Automorphism::new(vec![0, 2, 1, 3, 4]).unwrap();
        let g = Graphing::generated(ProbSpace::uniform(5), vec![a, b]).unwrap();
        for cg in g.class_graphs() {
            assert_eq!(cg.edges.len(), 2 * cg.vertices.len());
            assert!(cg.degrees().iter().all(|&d| d == 4));
        }
    }

    #[test]
    fn non_generating_family_is_rejected() {
        let rel = EqRel::full(ProbSpace::uniform(3)).unwrap();
        let swap = Automorphism::new(vec![1, 0, 2]).unwrap();
        assert!(Graphing::new(rel, vec![swap]).is_err());
    }
}
