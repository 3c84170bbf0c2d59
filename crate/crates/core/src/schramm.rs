//! Cycle sums of a graphing: return probabilities of `T` against simple-cycle sets.
//!
//! With `ψ` ranging over `θᵢ` and `θᵢ⁻¹`, the return probability
//! `⟨Tᵏ 1_Δ, 1_Δ⟩ = Σ_words μ(Fix(ψ_k…ψ_1))` dominates the total mass of the
//! sets `A_{i₁…i_k}` of points whose word orbit is a simple cycle.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::eqrel::{weight_to_f64, Automorphism, Weight};
use crate::error::{Error, Result};
use crate::graphing::Graphing;

/// The `2n` letters `θ₁, θ₁⁻¹, …, θₙ, θₙ⁻¹`.
pub fn letters(g: &Graphing) -> Vec<Automorphism> {
    g.gens.iter().flat_map(|t| [t.clone(), t.inverse()]).collect()
}

/// Σ over all `(2n)^k` words of length `k` of μ(fixed points), enumerating words one by one.
pub fn return_probability_words(g: &Graphing, k: usize) -> Weight {
    let psi = letters(g);
    let mut total = Weight::zero();
    let start: Vec<usize> = (0..g.rel.len()).collect();
    walk_words(g, &psi, &start, k, &mut total);
    total
}

fn walk_words(g: &Graphing, psi: &[Automorphism], current: &[usize], left: usize, total: &mut Weight) {
    if left == 0 {
        for (x, &y) in current.iter().enumerate() {
            if x == y {
                *total += g.rel.weight(x);
            }
        }
        return;
    }
    let mut next = vec![0; current.len()];
    for l in psi {
        for (x, &y) in current.iter().enumerate() {
            next[x] = l.apply(y);
        }
        walk_words(g, psi, &next, left - 1, total);
    }
}

/// Σ_x μ(x) (Aᵏ)_{xx} with the class adjacency matrices, in exact integers.
pub fn return_probability_matrix(g: &Graphing, k: usize) -> Weight {
    let mut total = Weight::zero();
    for cg in g.class_graphs() {
        let size = cg.vertices.len();
        let adjacency = cg.adjacency();
        let a = DMatrix::from_fn(size, size, |i, j| BigInt::from(adjacency[(i, j)] as i64));
        let mut power = DMatrix::from_fn(size, size, |i, j| BigInt::from(u8::from(i == j)));
        for _ in 0..k {
            power = mat_mul(&power, &a);
        }
        for (i, &x) in cg.vertices.iter().enumerate() {
            total += g.rel.weight(x) * BigRational::from_integer(power[(i, i)].clone());
        }
    }
    total
}

fn mat_mul(a: &DMatrix<BigInt>, b: &DMatrix<BigInt>) -> DMatrix<BigInt> {
    let n = a.nrows();
    DMatrix::from_fn(n, b.ncols(), |i, j| (0..n).map(|l| &a[(i, l)] * &b[(l, j)]).sum())
}

/// Σ over words of length `k` of μ(A_word): points whose orbit
/// `x, ψ_{i₁}x, …` visits `k` distinct points and returns at step `k`.
pub fn simple_cycle_mass(g: &Graphing, k: usize) -> Weight {
    if k == 0 {
        return Weight::zero();
    }
    let psi = letters(g);
    let mut total = Weight::zero();
    for x in 0..g.rel.len() {
        let mut path = vec![x];
        let count = count_cycles(&psi, &mut path, k);
        total += g.rel.weight(x) * BigRational::from_integer(BigInt::from(count));
    }
    total
}

fn count_cycles(psi: &[Automorphism], path: &mut Vec<usize>, k: usize) -> u64 {
    let last = *path.last().unwrap();
    if path.len() == k {
        return psi.iter().filter(|l| l.apply(last) == path[0]).count() as u64;
    }
    let mut total = 0;
    for l in psi {
        let y = l.apply(last);
        if !path.contains(&y) {
            path.push(y);
            total += count_cycles(psi, path, k);
            path.pop();
        }
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesReport {
    pub p: f64,
    pub norm: f64,
    /// `p^k · returnProbability(k)` for k = 1..=k_max.
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// `(p^k r_k)^(1/k)` for k in the tested range; each is at most `p‖T‖`.
    pub root_ratios: Vec<(usize, f64)>,
    pub max_root_ratio: f64,
    /// Bound on the tail after `k_max`: Σ_{k>k_max} (p‖T‖)^k.
    pub tail_bound: f64,
}

/// Convergence of Σ p^k ⟨Tᵏ 1_Δ, 1_Δ⟩ for `p < 1/‖T‖`. Terms satisfy
/// `p^k r_k ≤ (p‖T‖)^k` because ‖1_Δ‖ = 1, so the root test applies; the
/// plain ratio test is unusable since `r_k` vanishes for odd `k` on bipartite classes.
pub fn series_check(g: &Graphing, p: f64, norm: f64, k_range: (usize, usize)) -> Result<SeriesReport> {
    if p.is_nan() || p <= 0.0 || p * norm >= 1.0 {
        return Err(Error::InvalidProbability(p));
    }
    let (k_lo, k_max) = k_range;
    let mut terms = Vec::with_capacity(k_max);
    let mut partial_sums = Vec::with_capacity(k_max);
    let mut sum = 0.0;
    let mut root_ratios = Vec::new();
    for k in 1..=k_max {
        let r = weight_to_f64(&return_probability_matrix(g, k));
        let t = p.powi(k as i32) * r;
        sum += t;
        terms.push(t);
        partial_sums.push(sum);
        if k >= k_lo {
            root_ratios.push((k, t.powf(1.0 / k as f64)));
        }
    }
    let q = p * norm;
    Ok(SeriesReport {
        p,
        norm,
        terms,
        partial_sums,
        max_root_ratio: root_ratios.iter().map(|&(_, r)| r).fold(0.0, f64::max),
        root_ratios,
        tail_bound: q.powi(k_max as i32 + 1) / (1.0 - q),
    })
}
