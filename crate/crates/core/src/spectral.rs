//! Operator norms of graphings and windows.
//!
//! On a finite model `u(θ)` acts on `L²(R, m)` by moving the first coordinate,
//! so `T = Σ u(θᵢ) + u(θᵢ⁻¹)` splits into one block per class, each a copy of
//! the class graph's adjacency tensored with the identity. Hence ‖T‖ is the
//! largest adjacency norm over classes.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eqrel::Automorphism;
use crate::error::{Error, Result};
use crate::graphing::{ClassGraph, Graphing};
use crate::window::Window;

/// Classes at most this large are solved densely.
pub const EXACT_LIMIT: usize = 2000;
pub const POWER_TOLERANCE: f64 = 1e-8;
pub const POWER_MAX_ITERATIONS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactEigensolve,
    PowerIteration,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub value: f64,
    pub method: Method,
    pub iterations: usize,
    pub residual: f64,
}

impl SpectralEstimate {
    fn exact(value: f64) -> Self {
        SpectralEstimate { value, method: Method::ExactEigensolve, iterations: 0, residual: 0.0 }
    }
}

/// Largest |eigenvalue| of a symmetric matrix.
pub fn symmetric_norm(m: DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m).eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()))
}

pub fn class_graph_norm(cg: &ClassGraph) -> SpectralEstimate {
    if cg.vertices.len() <= EXACT_LIMIT {
        return SpectralEstimate::exact(symmetric_norm(cg.adjacency()));
    }
    let edges = cg.edges.iter().map(|&(u, v, i)| (cg.local(u), cg.local(v), i)).collect();
    let k = cg.vertices.len();
    let w = Window::from_edges(k, 0, edges, vec![false; k], None);
    power_norm(&w)
}

/// ‖T‖ on the finite model; `method` is power iteration if any class needed it.
pub fn operator_norm(g: &Graphing) -> SpectralEstimate {
    g.class_graphs()
        .par_iter()
        .map(class_graph_norm)
        .reduce(
            || SpectralEstimate::exact(0.0),
            |a, b| {
                let mut best = if b.value > a.value { b } else { a };
                if a.method == Method::PowerIteration || b.method == Method::PowerIteration {
                    best.method = Method::PowerIteration;
                    best.iterations = a.iterations.max(b.iterations);
                    best.residual = a.residual.max(b.residual);
                }
                best
            },
        )
}

/// Top singular value of the window adjacency by power iteration on A².
pub fn window_norm(w: &Window) -> Result<SpectralEstimate> {
    if !w.is_connected() {
        return Err(Error::DisconnectedWindow);
    }
    Ok(power_norm(w))
}

fn apply(w: &Window, x: &[f64], y: &mut [f64]) {
    if x.len() > 4096 {
        y.par_iter_mut()
            .enumerate()
            .for_each(|(v, yv)| *yv = w.neighbors(v).iter().map(|&(u, _)| x[u]).sum());
    } else {
        w.apply_adjacency(x, y);
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn power_norm(w: &Window) -> SpectralEstimate {
    let n = w.n_vertices();
    if n == 0 || w.n_edges() == 0 {
        return SpectralEstimate::exact(0.0);
    }
    let mut x: Vec<f64> = (0..n).map(|v| 1.0 + 1e-3 * ((v % 17) as f64) / 17.0).collect();
    let s = norm2(&x);
    x.iter_mut().for_each(|v| *v /= s);
    let mut ax = vec![0.0; n];
    let mut aax = vec![0.0; n];
    let mut rho2 = 0.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < POWER_MAX_ITERATIONS {
        iterations += 1;
        apply(w, &x, &mut ax);
        apply(w, &ax, &mut aax);
        rho2 = ax.iter().map(|v| v * v).sum::<f64>();
        residual = aax.iter().zip(&x).map(|(a, b)| (a - rho2 * b).powi(2)).sum::<f64>().sqrt();
        let s = norm2(&aax);
        if residual < POWER_TOLERANCE || s == 0.0 {
            break;
        }
        for (xv, av) in x.iter_mut().zip(&aax) {
            *xv = av / s;
        }
    }
    SpectralEstimate { value: rho2.sqrt(), method: Method::PowerIteration, iterations, residual }
}

/// Subspace on which an averaged operator is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subspace {
    Full,
    /// Functions with mean zero on every class; removes the trivial eigenvalue 1.
    MeanZero,
}

/// ‖(1/m) Σⱼ u(ψⱼ)‖ as the largest per-class singular value of the averaged permutation matrices.
pub fn average_norm(g: &Graphing, words: &[Automorphism], subspace: Subspace) -> Result<f64> {
    if words.is_empty() {
        return Err(Error::InvalidArgument("no words to average".into()));
    }
    for w in words {
        g.rel.check_automorphism(w)?;
    }
    let m = words.len() as f64;
    let norms: Vec<f64> = g
        .rel
        .classes()
        .par_iter()
        .map(|class| {
            let k = class.len();
            let local = |x: usize| class.binary_search(&x).unwrap();
            let mut a = DMatrix::<f64>::zeros(k, k);
            for w in words {
                for &x in class {
                    a[(local(w.apply(x)), local(x))] += 1.0 / m;
                }
            }
            if subspace == Subspace::MeanZero {
                let p = DMatrix::<f64>::identity(k, k) - DMatrix::from_element(k, k, 1.0 / k as f64);
                a = &a * p;
            }
            symmetric_norm(a.transpose() * &a).sqrt()
        })
        .collect();
    Ok(norms.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WindowStats {
    pub radius: usize,
    pub vertices: usize,
    pub edges: usize,
    pub window_norm: f64,
    pub iso_upper_bound: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqrel::ProbSpace;
    use crate::window::GeneratorSpec;

    fn perm(v: &[usize]) -> Automorphism {
        Automorphism::new(v.to_vec()).unwrap()
    }

    #[test]
    fn four_cycle_norm_is_two() {
        let g = Graphing::generated(ProbSpace::uniform(4), vec![perm(&[1, 2, 3, 0])]).unwrap();
        let e = operator_norm(&g);
        assert!((e.value - 2.0).abs() < 1e-12);
        assert_eq!(e.method, Method::ExactEigensolve);
    }

    #[test]
    fn identity_generator_shifts_by_two() {
        let g = Graphing::generated(ProbSpace::uniform(3), vec![perm(&[1, 2, 0]), perm(&[0, 1, 2])]).unwrap();
        assert!((operator_norm(&g).value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn path_norm_matches_cosine() {
        for l in [1usize, 2, 7, 30] {
            let w = Window::build(&GeneratorSpec::Grid { dims: vec![l] }, 0).unwrap();
            let e = window_norm(&w).unwrap();
            let want = 2.0 * (std::f64::consts::PI / (l as f64 + 1.0)).cos();
            assert!((e.value - want).abs() < 1e-8, "L={l}: {} vs {want}", e.value);
        }
    }

    #[test]
    fn disconnected_window_is_rejected() {
        let w = Window::build(&GeneratorSpec::Perm { generators: vec![vec![1, 0, 3, 2]] }, 0).unwrap();
        assert_eq!(window_norm(&w).unwrap_err(), Error::DisconnectedWindow);
    }

    #[test]
    fn identity_word_has_unit_norm() {
        let g = Graphing::generated(ProbSpace::uniform(3), vec![perm(&[1, 2, 0])]).unwrap();
        let v = average_norm(&g, &[Automorphism::identity(3)], Subspace::Full).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn commuting_swaps_match_dense_oracle() {
        // (01) and (23) generate ℤ/2 × ℤ/2 with two orbits of size 2
        let a = perm(&[1, 0, 2, 3]);
        let b = perm(&[0, 1, 3, 2]);
        let g = Graphing::generated(ProbSpace::uniform(4), vec![a.clone(), b.clone()]).unwrap();
        // averaged matrix on ℓ²(X): [[1/2,1/2],[1/2,1/2]] blocks, norm 1; mean-zero part 0
        assert!((average_norm(&g, &[a.clone(), b.clone()], Subspace::Full).unwrap() - 1.0).abs() < 1e-12);
        assert!(average_norm(&g, &[a, b], Subspace::MeanZero).unwrap().abs() < 1e-12);
    }
}
