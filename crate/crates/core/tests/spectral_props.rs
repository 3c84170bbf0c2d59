use std::time::Instant;

use ergolab::eqrel::ProbSpace;
use ergolab::graphing::Graphing;
use ergolab::spectral::{average_norm, operator_norm, symmetric_norm, window_norm, Subspace};
use ergolab::window::{random_permutations, GeneratorSpec, Window};
use ergolab::Automorphism;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Radial reduction of a tree ball: the top eigenvector is spherically
/// symmetric, so the norm is the top eigenvalue of the tridiagonal matrix on
/// sphere-normalized radial functions.
fn radial_tree_oracle(d: usize, radius: usize) -> f64 {
    let mut t = DMatrix::<f64>::zeros(radius + 1, radius + 1);
    for k in 0..radius {
        let off = if k == 0 { (d as f64).sqrt() } else { ((d - 1) as f64).sqrt() };
        t[(k, k + 1)] = off;
        t[(k + 1, k)] = off;
    }
    symmetric_norm(t)
}

#[test]
fn three_regular_depth_twelve_ball() {
    let start = Instant::now();
    let w = Window::build(&GeneratorSpec::Tree { degree: 3 }, 12).unwrap();
    let e = window_norm(&w).unwrap();
    let oracle = radial_tree_oracle(3, 12);
    println!("3-regular r=12: {} (oracle {oracle}) iters {} in {:?}", e.value, e.iterations, start.elapsed());
    assert!((e.value - oracle).abs() < 1e-6);
    assert!(e.value <= 2.0 * 2f64.sqrt());
    assert!((2.0 * 2f64.sqrt() - e.value) / (2.0 * 2f64.sqrt()) < 0.02);
}

#[test]
fn sixteen_regular_radius_four_ball_is_below_tree_norm() {
    let w = Window::build(&GeneratorSpec::Free { rank: 8 }, 4).unwrap();
    let e = window_norm(&w).unwrap();
    let oracle = radial_tree_oracle(16, 4);
    assert!((e.value - oracle).abs() < 1e-6, "{} vs {oracle}", e.value);
    assert!(e.value < 2.0 * 15f64.sqrt());
}

#[test]
fn window_norm_grows_with_radius() {
    let spec = GeneratorSpec::Free { rank: 2 };
    let mut last = 0.0;
    for r in 0..8 {
        let v = window_norm(&Window::build(&spec, r).unwrap()).unwrap().value;
        assert!(v + 1e-9 >= last, "radius {r}: {v} < {last}");
        last = v;
    }
}

#[test]
fn benjamini_schramm_bound_is_tight_on_trees() {
    // ι = d−2 and p_c = 1/(d−1) for the d-regular tree
    for d in 3..=17u32 {
        let iota = f64::from(d) - 2.0;
        let pc = 1.0 / (f64::from(d) - 1.0);
        assert_eq!(1.0 / (iota + 1.0), pc);
    }
}

fn random_graphing(rng: &mut ChaCha8Rng, n_points: usize, rank: usize) -> Graphing {
    let gens = random_permutations(rank, n_points, rng.random());
    Graphing::generated(ProbSpace::uniform(n_points), gens).unwrap()
}

/// ‖T‖ on L²(R, m) assembled densely over all pairs (x, y) in a class.
fn dense_pair_space_norm(g: &Graphing) -> f64 {
    let mut pairs: Vec<(usize, usize)> = g
        .rel
        .classes()
        .iter()
        .flat_map(|c| c.iter().flat_map(move |&x| c.iter().map(move |&y| (x, y))))
        .collect();
    pairs.sort_unstable();
    let idx = |p: (usize, usize)| pairs.binary_search(&p).unwrap();
    let k = pairs.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for th in &g.gens {
        let inv = th.inverse();
        for (i, &(x, y)) in pairs.iter().enumerate() {
            // u(θ)f(x, y) = f(θ⁻¹x, y)
            t[(i, idx((inv.apply(x), y)))] += 1.0;
            t[(i, idx((th.apply(x), y)))] += 1.0;
        }
    }
    symmetric_norm(t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn finite_regular_class_graphs_have_norm_2n(seed in any::<u64>(), n_points in 1usize..12, rank in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graphing(&mut rng, n_points, rank);
        let v = operator_norm(&g).value;
        prop_assert!((v - 2.0 * rank as f64).abs() < 1e-9);
        prop_assert!((dense_pair_space_norm(&g) - v).abs() < 1e-9);
    }

    #[test]
    fn power_trick_contracts(seed in any::<u64>(), n_points in 2usize..9, rank in 1usize..3, m in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graphing(&mut rng, n_points, rank);
        let base: Vec<Automorphism> = g.gens.clone();
        let mut products = vec![Automorphism::identity(n_points)];
        for _ in 0..m {
            products = products.iter().flat_map(|p| base.iter().map(move |b| p.compose(b))).collect();
        }
        for sub in [Subspace::Full, Subspace::MeanZero] {
            let delta = average_norm(&g, &base, sub).unwrap();
            let pow = average_norm(&g, &products, sub).unwrap();
            prop_assert!(pow <= delta.powi(m as i32) + 1e-9, "{pow} > {delta}^{m}");
        }
    }
}
