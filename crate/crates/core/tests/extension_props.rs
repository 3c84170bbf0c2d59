use ergolab::eqrel::{check_extension, ratio, Automorphism, EqRel, ProbSpace};
use ergolab::extension::{
    build_extension, compression_iso, lift_subrelation_iso, orbit_extension_iso, perc_label_iso, BaseSpace,
    DEFAULT_BUDGET,
};
use ergolab::group::{FiniteGroup, GroupAction};
use ergolab::instances::{
    extension_size, random_base, random_compression_instance, random_graphing, random_lift_instance, random_relation,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SMALL: u128 = 20_000;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extensions_are_class_bijective(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rel = random_relation(&mut rng, 8).unwrap();
        let base = random_base(&mut rng, 3);
        prop_assume!(extension_size(&rel, base.len()) <= SMALL);
        let ext = build_extension(&rel, &base, SMALL).unwrap();
        let report = check_extension(&ext.extension_map()).unwrap();
        prop_assert!(report.is_extension);
        prop_assert_eq!(ext.len() as u128, extension_size(&rel, base.len()));
        for id in 0..ext.len() {
            let (x, omega) = ext.decode(id);
            prop_assert_eq!(ext.encode(x, &omega), id);
        }
    }

    #[test]
    fn single_class_extensions_split(n in 1usize..6, k in 2usize..4) {
        let rel = EqRel::full(ProbSpace::uniform(n)).unwrap();
        let ext = build_extension(&rel, &BaseSpace::uniform(k), DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(ext.rel.num_classes(), k.pow(n as u32));
    }

    #[test]
    fn lift_witnesses_verify(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_lift_instance(&mut rng, 8).unwrap();
        let base = random_base(&mut rng, 2);
        prop_assume!(extension_size(&inst.rel, base.len()) <= SMALL);
        let iso = lift_subrelation_iso(&inst.rel, &inst.sub, &base, &inst.maps, SMALL).unwrap();
        prop_assert!(iso.witness.verify().ok());
        prop_assert!(iso.witness.verify_pairwise());
    }

    #[test]
    fn compression_witnesses_verify(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_compression_instance(&mut rng, 7).unwrap();
        let base = random_base(&mut rng, 2);
        prop_assume!(extension_size(&inst.rel, base.len()) <= SMALL);
        let iso = compression_iso(&inst.rel, &inst.subset, &base, &inst.maps, SMALL).unwrap();
        prop_assert!(iso.witness.verify().ok());
        prop_assert!(iso.entropy_factor_matches);
    }

    #[test]
    fn percolation_labels_match_bernoulli_labels(seed in any::<u64>(), a in 1i64..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graphing(&mut rng, 5, 2).unwrap();
        let size: u128 = g.rel.classes().iter().map(|c| c.len() as u128 * (1u128 << (g.rank() * c.len()))).sum();
        prop_assume!(size <= SMALL);
        let (w, _, _) = perc_label_iso(&g, &ratio(a, 5), SMALL).unwrap();
        prop_assert!(w.verify().ok());
    }
}

#[test]
fn degenerate_retention_collapses_to_one_label() {
    let g = random_graphing(&mut ChaCha8Rng::seed_from_u64(3), 5, 2).unwrap();
    for p in [ratio(0, 1), ratio(1, 1)] {
        let (w, perc, bern) = perc_label_iso(&g, &p, SMALL).unwrap();
        assert!(w.verify().ok());
        assert_eq!(perc.len(), g.rel.len());
        assert_eq!(bern.len(), g.rel.len());
    }
}

#[test]
fn corrupted_witness_is_caught() {
    let rel = EqRel::full(ProbSpace::uniform(4)).unwrap();
    let sub = EqRel::from_classes(ProbSpace::uniform(4), vec![vec![0, 1], vec![2, 3]]).unwrap();
    let maps = [Automorphism::identity(4), Automorphism::new(vec![2, 3, 0, 1]).unwrap()];
    let base = BaseSpace::new(vec![ratio(1, 3), ratio(2, 3)]).unwrap();
    let iso = lift_subrelation_iso(&rel, &sub, &base, &maps, DEFAULT_BUDGET).unwrap();
    let mut broken = iso.witness.clone();
    // swap two images with different weights
    let a = 0;
    let b = (0..broken.map.len())
        .find(|&b| broken.target.weight(broken.map[b]) != broken.target.weight(broken.map[a]))
        .unwrap();
    broken.map.swap(a, b);
    assert!(!broken.verify().ok());
    let mut collapsed = iso.witness;
    collapsed.map[1] = collapsed.map[0];
    assert!(!collapsed.verify().bijective);
}

#[test]
fn free_orbit_relation_extension() {
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
    let w = orbit_extension_iso(&action, &ProbSpace::uniform(6), &BaseSpace::uniform(2), DEFAULT_BUDGET).unwrap();
    assert_eq!(w.source.len(), 6 * 64);
    assert!(w.verify().ok());

    let g = FiniteGroup::cyclic(2);
    let fixes = GroupAction::from_generator_images(g, &[Automorphism::new(vec![1, 0, 2]).unwrap()]).unwrap();
    assert!(orbit_extension_iso(&fixes, &ProbSpace::uniform(3), &BaseSpace::uniform(2), DEFAULT_BUDGET).is_err());
}
