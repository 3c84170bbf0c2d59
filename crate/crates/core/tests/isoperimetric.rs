use ergolab::isoperimetric::{annealed_sample, exact, iso_bound_check};
use ergolab::window::{GeneratorSpec, Window};

/// |∂B_k| / |B_k| for the ball of radius k in the d-regular tree.
fn tree_ball_ratio(d: u64, k: u32) -> f64 {
    let d = d as f64;
    let size = 1.0 + (0..k).map(|j| d * (d - 1.0).powi(j as i32)).sum::<f64>();
    d * (d - 1.0).powi(k as i32) / size
}

#[test]
fn sixteen_regular_window_respects_spectral_bound() {
    let w = Window::build(&GeneratorSpec::Free { rank: 8 }, 4).unwrap();
    let oracle = 2.0 * 15f64.sqrt();
    let r = iso_bound_check(&w, oracle, 200, 11).unwrap();
    assert!((r.bound - 8.254).abs() < 1e-3);
    assert!(r.min_ratio >= 8.254);
    for (k, got) in r.ball_ratios.iter().enumerate() {
        assert!((got - tree_ball_ratio(16, k as u32)).abs() < 1e-12);
    }
    assert!((tree_ball_ratio(16, 30) - 14.0).abs() < 1e-9);
}

#[test]
fn six_regular_tree_ratios_approach_four() {
    let w = Window::build(&GeneratorSpec::Free { rank: 3 }, 6).unwrap();
    let r = iso_bound_check(&w, 2.0 * 5f64.sqrt(), 200, 5).unwrap();
    assert!((r.bound - 1.5279).abs() < 1e-4);
    assert!(r.min_ratio >= 4.0);
    let last = *r.ball_ratios.last().unwrap();
    assert!((last - tree_ball_ratio(6, 5)).abs() < 1e-12 && last > 4.0);
    // every finite subtree F has |∂F| = (d−2)|F| + 2, so the sampled infimum exceeds 4
    let s = annealed_sample(&w, 50, 9).unwrap();
    assert!(s.upper > 4.0 && s.upper < 4.1);
}

#[test]
fn integer_line_bound_is_vacuous() {
    let w = Window::build(&GeneratorSpec::Grid { dims: vec![40] }, 0).unwrap();
    let r = iso_bound_check(&w, 2.0, 100, 1).unwrap();
    assert_eq!(r.bound, 0.0);
    assert!(r.min_ratio >= 0.0);
}

#[test]
fn finite_regular_graph_bound_is_zero() {
    let w = Window::build(&GeneratorSpec::Perm { generators: vec![(1..=10).map(|i| i % 10).collect()] }, 0)
        .unwrap();
    let e = exact(&w).unwrap();
    assert!((e.upper - 2.0 / 5.0).abs() < 1e-12);
    let r = iso_bound_check(&w, 2.0, 50, 2).unwrap();
    assert_eq!(r.bound, 0.0);
}
