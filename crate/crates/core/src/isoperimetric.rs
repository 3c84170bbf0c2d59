//! Edge-isoperimetric constants: exact for small graphs, sampled upper bounds otherwise.
//!
//! On a window with boundary, candidate sets avoid boundary vertices so that
//! their edge boundary is the same as in the untruncated graph. On a window
//! without boundary, candidate sets have at most half the vertices.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::window::Window;

pub const EXACT_VERTEX_LIMIT: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IsoEstimate {
    /// Exact constant, or the best ratio found.
    pub upper: f64,
    /// Equal to `upper` in exact mode; 0 otherwise.
    pub lower: f64,
    pub exact: bool,
    pub certificate: Vec<usize>,
}

fn has_boundary(w: &Window) -> bool {
    w.boundary().iter().any(|&b| b)
}

fn candidates(w: &Window) -> Vec<usize> {
    (0..w.n_vertices()).filter(|&v| !w.is_boundary(v)).collect()
}

fn max_size(w: &Window) -> usize {
    if has_boundary(w) {
        usize::MAX
    } else {
        w.n_vertices() / 2
    }
}

/// |∂F|: edges with exactly one endpoint in F.
pub fn edge_boundary(w: &Window, in_set: &[bool]) -> usize {
    w.edges().iter().filter(|&&(u, v, _)| in_set[u] != in_set[v]).count()
}

/// Exhaustive minimum over all admissible sets, walking subsets in Gray-code order.
pub fn exact(w: &Window) -> Result<IsoEstimate> {
    let cand = candidates(w);
    if cand.len() > EXACT_VERTEX_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "exact mode supports at most {EXACT_VERTEX_LIMIT} candidate vertices, got {}",
            cand.len()
        )));
    }
    let cap = max_size(w);
    let mut in_set = vec![false; w.n_vertices()];
    let (mut boundary, mut size) = (0i64, 0usize);
    let mut best: Option<(f64, u32)> = None;
    let mut code = 0u32;
    for step in 1u32..(1u32 << cand.len()) {
        let bit = step.trailing_zeros() as usize;
        code ^= 1 << bit;
        let v = cand[bit];
        let entering = !in_set[v];
        for &(u, _) in w.neighbors(v) {
            if u == v {
                continue;
            }
            boundary += if in_set[u] == entering { -1 } else { 1 };
        }
        in_set[v] = entering;
        size = if entering { size + 1 } else { size - 1 };
        if size == 0 || size > cap {
            continue;
        }
        let ratio = boundary as f64 / size as f64;
        if best.is_none_or(|(b, _)| ratio < b) {
            best = Some((ratio, code));
        }
    }
    let (value, code) = best.ok_or_else(|| Error::InvalidArgument("no admissible subset".into()))?;
    let certificate = (0..cand.len()).filter(|&i| code >> i & 1 == 1).map(|i| cand[i]).collect();
    Ok(IsoEstimate { upper: value, lower: value, exact: true, certificate })
}

/// Random connected sets grown from random seeds, then improved by greedy single-vertex moves.
pub fn annealed_sample(w: &Window, samples: usize, seed: u64) -> Result<IsoEstimate> {
    let cand = candidates(w);
    if cand.is_empty() {
        return Err(Error::InvalidArgument("window has no interior vertices".into()));
    }
    let cap = max_size(w).min(cand.len());
    if cap == 0 {
        return Err(Error::InvalidArgument("no admissible subset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (f64::INFINITY, Vec::new());
    for _ in 0..samples {
        let target = rng.random_range(1..=cap.min(4096));
        let start = *cand.choose(&mut rng).unwrap();
        let set = grow_connected(w, &mut rng, start, target);
        let (ratio, set) = greedy_descent(w, set, cap);
        if ratio < best.0 {
            best = (ratio, set);
        }
    }
    let (upper, mut certificate) = best;
    certificate.sort_unstable();
    Ok(IsoEstimate { upper, lower: 0.0, exact: false, certificate })
}

/// Random connected interior set of up to `target` vertices containing `start`.
pub fn grow_connected(w: &Window, rng: &mut ChaCha8Rng, start: usize, target: usize) -> Vec<bool> {
    let mut in_set = vec![false; w.n_vertices()];
    in_set[start] = true;
    let mut members = vec![start];
    let mut frontier: Vec<usize> = Vec::new();
    let push = |v: usize, in_set: &[bool], frontier: &mut Vec<usize>| {
        for &(u, _) in w.neighbors(v) {
            if !in_set[u] && !w.is_boundary(u) {
                frontier.push(u);
            }
        }
    };
    push(start, &in_set, &mut frontier);
    while members.len() < target && !frontier.is_empty() {
        let i = rng.random_range(0..frontier.len());
        let u = frontier.swap_remove(i);
        if in_set[u] {
            continue;
        }
        in_set[u] = true;
        members.push(u);
        push(u, &in_set, &mut frontier);
    }
    in_set
}

fn greedy_descent(w: &Window, mut in_set: Vec<bool>, cap: usize) -> (f64, Vec<usize>) {
    let mut size = in_set.iter().filter(|&&b| b).count();
    let mut boundary = edge_boundary(w, &in_set) as i64;
    let delta = |in_set: &[bool], v: usize| -> i64 {
        let entering = !in_set[v];
        w.neighbors(v)
            .iter()
            .filter(|&&(u, _)| u != v)
            .map(|&(u, _)| if in_set[u] == entering { -1 } else { 1 })
            .sum()
    };
    loop {
        let mut improved = false;
        // one pass over members and their interior neighbors, taking every improving move
        let mut touched: Vec<usize> = (0..in_set.len()).filter(|&v| in_set[v]).collect();
        let members = touched.len();
        for i in 0..members {
            let v = touched[i];
            touched.extend(w.neighbors(v).iter().map(|&(u, _)| u).filter(|&u| !in_set[u] && !w.is_boundary(u)));
        }
        touched.sort_unstable();
        touched.dedup();
        for v in touched {
            let new_size = if in_set[v] { size - 1 } else { size + 1 };
            if new_size == 0 || new_size > cap {
                continue;
            }
            let new_boundary = boundary + delta(&in_set, v);
            if (new_boundary as f64 / new_size as f64) < boundary as f64 / size as f64 - 1e-12 {
                in_set[v] = !in_set[v];
                size = new_size;
                boundary = new_boundary;
                improved = true;
            }
        }
        if !improved {
            let ratio = boundary as f64 / size as f64;
            return (ratio, (0..in_set.len()).filter(|&v| in_set[v]).collect());
        }
    }
}

/// Exact mode when small enough, sampled otherwise.
pub fn isoperimetric(w: &Window, samples: usize, seed: u64) -> Result<IsoEstimate> {
    if candidates(w).len() <= EXACT_VERTEX_LIMIT {
        exact(w)
    } else {
        annealed_sample(w, samples, seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IsoBoundReport {
    /// `degree − normOracle`.
    pub bound: f64,
    pub min_ratio: f64,
    pub sets_checked: usize,
    /// |∂B|/|B| for interior balls around vertex 0, by radius.
    pub ball_ratios: Vec<f64>,
}

/// Checks |∂F| ≥ (degree − normOracle)·|F| on interior balls and random interior sets.
pub fn iso_bound_check(w: &Window, norm_oracle: f64, samples: usize, seed: u64) -> Result<IsoBoundReport> {
    let bound = w.degree() as f64 - norm_oracle;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    let mut sets_checked = 0;
    let check = |in_set: &[bool]| -> Result<f64> {
        let size = in_set.iter().filter(|&&b| b).count();
        let boundary = edge_boundary(w, in_set);
        if (boundary as f64) < bound * size as f64 - 1e-9 {
            return Err(Error::IsoperimetricViolation { boundary, size, bound });
        }
        Ok(boundary as f64 / size as f64)
    };
    let mut ball_ratios = Vec::new();
    if has_boundary(w) && !w.is_boundary(0) {
        for k in 0..w.radius() {
            let in_set: Vec<bool> = (0..w.n_vertices()).map(|v| w.depth(v) <= k).collect();
            if (0..w.n_vertices()).any(|v| in_set[v] && w.is_boundary(v)) {
                break;
            }
            let r = check(&in_set)?;
            ball_ratios.push(r);
            min_ratio = min_ratio.min(r);
            sets_checked += 1;
        }
    }
    let cand = candidates(w);
    if !cand.is_empty() {
        let cap = max_size(w).min(cand.len()).min(4096);
        for _ in 0..samples {
            let start = *cand.choose(&mut rng).unwrap();
            let target = rng.random_range(1..=cap.max(1));
            let in_set = grow_connected(w, &mut rng, start, target);
            min_ratio = min_ratio.min(check(&in_set)?);
            sets_checked += 1;
        }
    }
    Ok(IsoBoundReport { bound, min_ratio, sets_checked, ball_ratios })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(k: usize) -> Window {
        let mut edges = Vec::new();
        for u in 0..k {
            for v in u + 1..k {
                edges.push((u, v, 0));
            }
        }
        Window::from_edges(k, k - 1, edges, vec![false; k], None)
    }

    #[test]
    fn complete_graph_on_four_vertices() {
        let e = exact(&complete(4)).unwrap();
        assert_eq!(e.upper, 2.0);
        assert_eq!(e.certificate.len(), 2);
    }

    #[test]
    fn exact_matches_naive_enumeration() {
        let w = crate::window::Window::build(&crate::window::GeneratorSpec::Grid { dims: vec![3, 4] }, 0).unwrap();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << 12) {
            let in_set: Vec<bool> = (0..12).map(|i| mask >> i & 1 == 1).collect();
            let size = mask.count_ones() as usize;
            // the grid window has boundary, so only interior vertices are admissible
            if (0..12).any(|v| in_set[v] && w.is_boundary(v)) {
                continue;
            }
            best = best.min(edge_boundary(&w, &in_set) as f64 / size as f64);
        }
        assert_eq!(exact(&w).unwrap().upper, best);
    }

    #[test]
    fn cycle_halves_give_small_ratio() {
        let k = 12;
        let edges = (0..k).map(|i| (i, (i + 1) % k, 0)).collect();
        let w = Window::from_edges(k, 2, edges, vec![false; k], None);
        let e = exact(&w).unwrap();
        assert!((e.upper - 2.0 / 6.0).abs() < 1e-12);
        let s = annealed_sample(&w, 20, 3).unwrap();
        assert!(s.upper >= e.upper);
    }
}
