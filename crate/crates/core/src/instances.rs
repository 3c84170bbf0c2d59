//! Seeded random finite instances for exhaustive suites.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::eqrel::{ratio, Automorphism, EqRel, PartialIso, ProbSpace, Weight};
use crate::error::Result;
use crate::extension::BaseSpace;
use crate::graphing::Graphing;
use crate::group::{FiniteGroup, GroupAction};

/// Random class weights: one positive rational per class, scaled by class size to sum to 1.
fn class_weights(rng: &mut impl Rng, classes: &[Vec<usize>], n: usize) -> ProbSpace {
    let raw: Vec<i64> = classes.iter().map(|_| rng.random_range(1..=4)).collect();
    let total: i64 = classes.iter().zip(&raw).map(|(c, &r)| c.len() as i64 * r).sum();
    let mut weights = vec![Weight::from_integer(0.into()); n];
    for (c, &r) in classes.iter().zip(&raw) {
        for &x in c {
            weights[x] = ratio(r, total);
        }
    }
    ProbSpace::new(weights).expect("normalized by construction")
}

pub fn random_base(rng: &mut impl Rng, max_symbols: usize) -> BaseSpace {
    let k = rng.random_range(1..=max_symbols);
    let raw: Vec<i64> = (0..k).map(|_| rng.random_range(1..=3)).collect();
    let total: i64 = raw.iter().sum();
    BaseSpace::new(raw.iter().map(|&r| ratio(r, total)).collect()).expect("positive weights")
}

/// A relation with a constant-index subrelation and translates `θₙ`
/// mapping each subclass onto the n-th subclass after it.
#[derive(Clone, Debug)]
pub struct LiftInstance {
    pub rel: EqRel,
    pub sub: EqRel,
    pub maps: Vec<Automorphism>,
}

/// A relation, a subset `Y` meeting every class, and partial isomorphisms
/// from `Y` whose images tile the space.
#[derive(Clone, Debug)]
pub struct CompressionInstance {
    pub rel: EqRel,
    pub subset: Vec<usize>,
    pub maps: Vec<PartialIso>,
}

/// Points shuffled so that class structure is not visible in the ids.
fn shuffled_points(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Extension budget Σ|c|·|K|^{|c|} for a relation and alphabet size.
pub fn extension_size(rel: &EqRel, k: usize) -> u128 {
    rel.classes().iter().map(|c| c.len() as u128 * (k as u128).pow(c.len() as u32)).sum()
}

pub fn random_lift_instance(rng: &mut impl Rng, max_points: usize) -> Result<LiftInstance> {
    let index = rng.random_range(1..=3usize.min(max_points));
    let mut blocks: Vec<Vec<usize>> = Vec::new(); // per class: subclass sizes
    let mut used = 0;
    loop {
        let s = rng.random_range(1..=3);
        if used + index * s > max_points {
            break;
        }
        used += index * s;
        blocks.push(vec![s; index]);
        if rng.random_bool(0.3) {
            break;
        }
    }
    if blocks.is_empty() {
        blocks.push(vec![1; index]);
        used = index;
    }
    let ids = shuffled_points(rng, used);
    let mut next = 0;
    let mut classes = Vec::new();
    let mut subclasses = Vec::new();
    let mut map_tables = vec![vec![0; used]; index];
    for sizes in &blocks {
        let s = sizes[0];
        let subs: Vec<Vec<usize>> = (0..index)
            .map(|_| {
                let b = ids[next..next + s].to_vec();
                next += s;
                b
            })
            .collect();
        // θₙ sends position t of subclass j to position t of subclass j + n
        for (n, table) in map_tables.iter_mut().enumerate() {
            for j in 0..index {
                for t in 0..s {
                    table[subs[j][t]] = subs[(j + n) % index][t];
                }
            }
        }
        classes.push(subs.concat());
        subclasses.extend(subs);
    }
    let space = class_weights(rng, &classes, used);
    let rel = EqRel::from_classes(space.clone(), classes)?;
    let sub = EqRel::from_classes(space, subclasses)?;
    let maps = map_tables.into_iter().map(Automorphism::new).collect::<Result<_>>()?;
    Ok(LiftInstance { rel, sub, maps })
}

pub fn random_relation(rng: &mut impl Rng, max_points: usize) -> Result<EqRel> {
    let n = rng.random_range(1..=max_points);
    let ids = shuffled_points(rng, n);
    let mut classes = Vec::new();
    let mut i = 0;
    while i < n {
        let s = rng.random_range(1..=(n - i).min(4));
        classes.push(ids[i..i + s].to_vec());
        i += s;
    }
    EqRel::from_classes(class_weights(rng, &classes, n), classes)
}

pub fn random_compression_instance(rng: &mut impl Rng, max_points: usize) -> Result<CompressionInstance> {
    let rel = random_relation(rng, max_points)?;
    let mut subset = Vec::new();
    // (domain point, image) pairs, grouped later by their index at the domain point
    let mut assignments: Vec<(usize, usize, usize)> = Vec::new();
    for c in rel.classes() {
        let mut members = c.clone();
        members.shuffle(rng);
        let y_count = rng.random_range(1..=members.len());
        let ys = members[..y_count].to_vec();
        let mut used = vec![0usize; y_count];
        for &z in &members {
            let j = rng.random_range(0..y_count);
            assignments.push((ys[j], z, used[j]));
            used[j] += 1;
        }
        subset.extend(ys);
    }
    subset.sort_unstable();
    let depth = assignments.iter().map(|a| a.2 + 1).max().unwrap_or(0);
    let maps = (0..depth)
        .map(|i| PartialIso::new(&rel, assignments.iter().filter(|a| a.2 == i).map(|a| (a.0, a.1))))
        .collect::<Result<_>>()?;
    Ok(CompressionInstance { rel, subset, maps })
}

/// A graphing of `rank` random permutations, each preserving a random class structure.
pub fn random_graphing(rng: &mut impl Rng, max_points: usize, max_rank: usize) -> Result<Graphing> {
    let n = rng.random_range(1..=max_points);
    let rank = rng.random_range(1..=max_rank);
    let gens = (0..rank)
        .map(|_| Automorphism::new(shuffled_points(rng, n)))
        .collect::<Result<Vec<_>>>()?;
    let rel = EqRel::generated_by(ProbSpace::uniform(n), &gens)?;
    let space = class_weights(rng, rel.classes(), n);
    Graphing::generated(space, gens)
}

/// A free action of a small group on `X = Γ × orbits`, orbits grouped into
/// classes of `index` orbits each, an action of the same group on `Y`, and an
/// α-invariant measure on `Y`.
#[derive(Clone, Debug)]
pub struct CoinductionInstance {
    pub rel: EqRel,
    pub beta: GroupAction,
    pub alpha: GroupAction,
    pub y_space: ProbSpace,
}

pub fn small_group(rng: &mut impl Rng) -> FiniteGroup {
    match rng.random_range(0..4) {
        0 => FiniteGroup::cyclic(1),
        1 => FiniteGroup::cyclic(2),
        2 => FiniteGroup::cyclic(3),
        _ => FiniteGroup::generated_by(
            &[Automorphism::new(vec![1, 0, 2]).unwrap(), Automorphism::new(vec![1, 2, 0]).unwrap()],
            3,
            6,
        )
        .unwrap(),
    }
}

/// Left multiplication of the group on itself, followed by `relabel`.
fn translated_action(group: &FiniteGroup, copies: usize, relabel: &[usize]) -> Result<GroupAction> {
    let order = group.order();
    let images = group
        .generators()
        .iter()
        .map(|&g| {
            let mut map = vec![0; order * copies];
            for i in 0..copies {
                for h in 0..order {
                    map[relabel[i * order + h]] = relabel[i * order + group.mul(g, h)];
                }
            }
            Automorphism::new(map)
        })
        .collect::<Result<Vec<_>>>()?;
    GroupAction::from_generator_images(group.clone(), &images)
}

pub fn random_coinduction_instance(rng: &mut impl Rng, max_points: usize, max_y: usize) -> Result<CoinductionInstance> {
    let group = loop {
        let g = small_group(rng);
        if g.order() <= max_points {
            break g;
        }
    };
    let order = group.order();
    let max_orbits = (max_points / order).max(1);
    let index = rng.random_range(1..=max_orbits.min(3));
    let classes_count = rng.random_range(1..=(max_orbits / index).max(1));
    let orbits = index * classes_count;
    let n = orbits * order;
    let relabel = shuffled_points(rng, n);
    let beta = translated_action(&group, orbits, &relabel)?;
    let classes: Vec<Vec<usize>> = (0..classes_count)
        .map(|c| (c * index * order..(c + 1) * index * order).map(|i| relabel[i]).collect())
        .collect();
    let rel = EqRel::from_classes(class_weights(rng, &classes, n), classes)?;
    // α: either the regular action (free) or a random quotient-like action on a small Y
    let (alpha, y_space) = if order <= max_y && rng.random_bool(0.5) {
        let ids: Vec<usize> = (0..order).collect();
        (translated_action(&group, 1, &ids)?, ProbSpace::uniform(order))
    } else {
        let y = rng.random_range(1..=max_y.max(1));
        let trivial = vec![Automorphism::identity(y); group.generators().len()];
        let action = GroupAction::from_generator_images(group.clone(), &trivial)?;
        let raw: Vec<i64> = (0..y).map(|_| rng.random_range(1..=3)).collect();
        let total: i64 = raw.iter().sum();
        (action, ProbSpace::new(raw.iter().map(|&r| ratio(r, total)).collect())?)
    };
    Ok(CoinductionInstance { rel, beta, alpha, y_space })
}
