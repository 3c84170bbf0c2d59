use ergolab::entropy::{
    alpha_search, entropy_of_product, fixed_point_measures, norm_comparison_check, shannon_entropy, SpectralBound,
};
use ergolab::eqrel::{Automorphism, ProbSpace, Weight};
use ergolab::extension::BaseSpace;
use ergolab::graphing::Graphing;
use ergolab::group::{FiniteGroup, GroupAction};
use ergolab::spectral::{average_norm, Subspace};
use num_traits::Zero;
use proptest::prelude::*;

fn translation(m: usize, s: usize) -> Automorphism {
    Automorphism::new((0..m).map(|x| (x + s) % m).collect()).unwrap()
}

/// Translations of ℤ/21 by a (21, 5, 1) difference set: every nontrivial
/// character sum has modulus 2, so the averaged operator has norm 2/5.
fn singer() -> Graphing {
    Graphing::generated(ProbSpace::uniform(21), [3, 6, 7, 12, 14].iter().map(|&s| translation(21, s)).collect()).unwrap()
}

#[test]
fn difference_set_average_and_its_square() {
    let g = singer();
    let delta = average_norm(&g, &g.gens, Subspace::MeanZero).unwrap();
    assert!((delta - 0.4).abs() < 1e-9);
    let squares: Vec<Automorphism> = g.gens.iter().flat_map(|a| g.gens.iter().map(move |b| a.compose(b))).collect();
    assert_eq!(squares.len(), 25);
    let v = average_norm(&g, &squares, Subspace::MeanZero).unwrap();
    assert!(v <= 0.16 + 1e-9);
}

#[test]
fn search_finds_a_certified_witness_no_larger_than_the_square() {
    let g = singer();
    let a = alpha_search(&g, 2, 8).unwrap().expect("witness");
    assert!(a.n >= 3 && a.n <= 25, "{a:?}");
    assert!(a.achieved_norm < 0.25);
    let psi = ergolab::schramm::letters(&g);
    let maps: Vec<Automorphism> = a
        .witness_words
        .iter()
        .map(|w| w.iter().fold(Automorphism::identity(21), |acc, &l| psi[l].compose(&acc)))
        .collect();
    assert_eq!(maps.len(), a.n);
    assert!((average_norm(&g, &maps, Subspace::MeanZero).unwrap() - a.achieved_norm).abs() < 1e-12);
    assert_eq!(alpha_search(&g, 2, 8).unwrap(), Some(a));
}

#[test]
fn long_cycle_has_no_short_witness() {
    let g = Graphing::generated(ProbSpace::uniform(101), vec![translation(101, 1)]).unwrap();
    assert!((average_norm(&g, &g.gens, Subspace::MeanZero).unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(alpha_search(&g, 3, 4).unwrap(), None);
}

#[test]
fn witness_size_is_invariant_under_relabeling() {
    let g = singer();
    let sigma = Automorphism::new((0..21).map(|x| (x * 5 + 2) % 21).collect()).unwrap();
    let relabeled =
        Graphing::generated(ProbSpace::uniform(21), g.gens.iter().map(|t| t.relabel(&sigma)).collect()).unwrap();
    let a = alpha_search(&g, 2, 8).unwrap().unwrap();
    let b = alpha_search(&relabeled, 2, 8).unwrap().unwrap();
    assert_eq!(a.n, b.n);
    assert!((a.achieved_norm - b.achieved_norm).abs() < 1e-9);
}

/// Moments by expanding (T*T)^m into words: average over letter sequences of
/// μ(Fix) on the space and of [image = e] in the quotient.
fn word_moments(m: usize, words: &[usize], act: &dyn Fn(usize, usize) -> usize, mul: &dyn Fn(usize, usize) -> usize,
                inv: &dyn Fn(usize) -> usize, quot: &dyn Fn(usize) -> usize, points: usize) -> (f64, f64) {
    let n = words.len();
    let total = n.pow(2 * m as u32);
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for mut code in 0..total {
        let mut g = 0; // identity
        for _ in 0..m {
            let a = words[code % n];
            code /= n;
            let b = words[code % n];
            code /= n;
            g = mul(inv(a), mul(b, g));
        }
        lhs += (0..points).filter(|&x| act(g, x) == x).count() as f64 / points as f64;
        rhs += f64::from(quot(g) == 0);
    }
    (lhs / total as f64, rhs / total as f64)
}

#[test]
fn cyclic_four_over_cyclic_two() {
    let g4 = FiniteGroup::cyclic(4);
    let gen = g4.element(g4.generators()[0]).clone();
    let action = GroupAction::from_generator_images(g4.clone(), &[gen]).unwrap();
    let swap = Automorphism::new(vec![1, 0]).unwrap();
    let words = [g4.generators()[0], 0, g4.mul(g4.generators()[0], g4.generators()[0])];
    let r = norm_comparison_check(&action, &ProbSpace::uniform(4), &[swap], &words, 6).unwrap();
    assert!(r.moments_ok && r.norm_ok, "{r:?}");
    // ℤ/4 → ℤ/2 sends an element to its parity; element k of the group is the k-th power of the generator
    let power = |e: usize| (0..4).find(|&k| g4.element(e).apply(0) == k).unwrap();
    for m in 0..=3 {
        let (lhs, rhs) = word_moments(
            m,
            &words,
            &|g, x| action.act(g, x),
            &|a, b| g4.mul(a, b),
            &|a| g4.inv(a),
            &|g| power(g) % 2,
            4,
        );
        assert!((lhs - r.lifted_moments[m]).abs() < 1e-12, "m = {m}");
        assert!((rhs - r.quotient_moments[m]).abs() < 1e-12, "m = {m}");
    }
}

#[test]
fn free_action_has_null_fixed_sets() {
    let s3 = FiniteGroup::generated_by(
        &[Automorphism::new(vec![1, 0, 2]).unwrap(), Automorphism::new(vec![1, 2, 0]).unwrap()],
        3,
        6,
    )
    .unwrap();
    let left: Vec<Automorphism> = s3
        .generators()
        .iter()
        .map(|&a| Automorphism::new((0..6).map(|b| s3.mul(a, b)).collect()).unwrap())
        .collect();
    let action = GroupAction::from_generator_images(s3, &left).unwrap();
    assert!(action.is_free());
    let fixed = fixed_point_measures(&action, &ProbSpace::uniform(6));
    assert_eq!(fixed[0], Weight::from_integer(1.into()));
    assert!(fixed[1..].iter().all(Weight::is_zero));
}

proptest! {
    #[test]
    fn entropy_is_nonnegative_and_additive(a in prop::collection::vec(1u32..20, 1..5), b in prop::collection::vec(1u32..20, 1..5)) {
        let base = |v: &[u32]| {
            let s: u32 = v.iter().sum();
            BaseSpace::new(v.iter().map(|&x| ergolab::eqrel::ratio(x as i64, s as i64)).collect()).unwrap()
        };
        let (ha, hb) = (shannon_entropy(&base(&a)), shannon_entropy(&base(&b)));
        prop_assert!(ha.nats >= 0.0 && hb.nats >= 0.0);
        let product = entropy_of_product(&[ha.clone(), hb.clone()]);
        let direct = BaseSpace::new(product.weights.clone().unwrap()).unwrap().entropy();
        prop_assert!((product.nats - direct).abs() < 1e-12);
    }

    #[test]
    fn intermediate_entropy_stays_below_the_cap(n in 3usize..1_000_000) {
        let b = SpectralBound::new(n).unwrap();
        prop_assert!(b.intermediate <= b.intermediate_cap + 1e-12);
        prop_assert!(b.intermediate_cap <= b.value + 1e-12);
    }
}
