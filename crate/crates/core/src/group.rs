//! Finite permutation groups and their actions on point sets.

use std::collections::{HashMap, VecDeque};

use crate::eqrel::{Automorphism, EqRel, ProbSpace};
use crate::error::{Error, Result};

/// A finite group realized as a closed set of permutations. Element 0 is the
/// identity; `mul[a][b]` is `a ∘ b` (apply `b` first).
#[derive(Clone, Debug)]
pub struct FiniteGroup {
    elements: Vec<Automorphism>,
    mul: Vec<Vec<usize>>,
    inv: Vec<usize>,
    generators: Vec<usize>,
}

impl FiniteGroup {
    /// Closure of `generators` under composition. Stops with an error once
    /// more than `max_order` elements appear.
    pub fn generated_by(generators: &[Automorphism], degree: usize, max_order: usize) -> Result<Self> {
        if generators.iter().any(|g| g.len() != degree) {
            return Err(Error::InvalidGroup("generator degree mismatch".into()));
        }
        let mut elements = vec![Automorphism::identity(degree)];
        let mut lookup: HashMap<Automorphism, usize> = HashMap::from([(elements[0].clone(), 0)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(a) = queue.pop_front() {
            for g in generators {
                let prod = g.compose(&elements[a]);
                if !lookup.contains_key(&prod) {
                    if elements.len() >= max_order {
                        return Err(Error::InvalidGroup(format!("order exceeds {max_order}")));
                    }
                    lookup.insert(prod.clone(), elements.len());
                    queue.push_back(elements.len());
                    elements.push(prod);
                }
            }
        }
        let mul: Vec<Vec<usize>> = elements
            .iter()
            .map(|a| elements.iter().map(|b| lookup[&a.compose(b)]).collect())
            .collect();
        let inv = (0..elements.len()).map(|a| mul[a].iter().position(|&c| c == 0).unwrap()).collect();
        let generators = generators.iter().map(|g| lookup[g]).collect();
        Ok(FiniteGroup { elements, mul, inv, generators })
    }

    /// The cyclic group ℤ/m acting regularly on itself.
    pub fn cyclic(m: usize) -> Self {
        let shift = Automorphism::new((0..m).map(|i| (i + 1) % m).collect()).unwrap();
        Self::generated_by(&[shift], m, m).unwrap()
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, a: usize) -> &Automorphism {
        &self.elements[a]
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order()).all(|a| (0..self.order()).all(|b| self.mul[a][b] == self.mul[b][a]))
    }
}

/// A left action of a finite group on `0..n` by automorphisms.
#[derive(Clone, Debug)]
pub struct GroupAction {
    pub group: FiniteGroup,
    maps: Vec<Automorphism>,
}

impl GroupAction {
    /// Extends generator images to the whole group and checks the result is
    /// a homomorphism.
    pub fn from_generator_images(group: FiniteGroup, images: &[Automorphism]) -> Result<Self> {
        if images.len() != group.generators.len() {
            return Err(Error::InvalidGroup("one image per generator required".into()));
        }
        let n = images.first().map_or(0, Automorphism::len);
        let mut maps: Vec<Option<Automorphism>> = vec![None; group.order()];
        maps[0] = Some(Automorphism::identity(n));
        let mut queue = VecDeque::from([0usize]);
        while let Some(a) = queue.pop_front() {
            for (gi, &g) in group.generators.iter().enumerate() {
                let b = group.mul(g, a);
                if maps[b].is_none() {
                    maps[b] = Some(images[gi].compose(maps[a].as_ref().unwrap()));
                    queue.push_back(b);
                }
            }
        }
        let action = GroupAction { group, maps: maps.into_iter().map(Option::unwrap).collect() };
        action.check_homomorphism()?;
        Ok(action)
    }

    pub fn check_homomorphism(&self) -> Result<()> {
        for a in 0..self.group.order() {
            for b in 0..self.group.order() {
                let lhs = &self.maps[self.group.mul(a, b)];
                if *lhs != self.maps[a].compose(&self.maps[b]) {
                    return Err(Error::InvalidGroup(format!("not a homomorphism at ({a}, {b})")));
                }
            }
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.maps[0].len()
    }

    pub fn act(&self, g: usize, x: usize) -> usize {
        self.maps[g].apply(x)
    }

    pub fn map(&self, g: usize) -> &Automorphism {
        &self.maps[g]
    }

    /// First non-identity element with a fixed point, if any.
    pub fn freeness_violation(&self) -> Option<(usize, usize)> {
        (1..self.group.order()).find_map(|g| self.maps[g].fixed_points().next().map(|x| (g, x)))
    }

    pub fn is_free(&self) -> bool {
        self.freeness_violation().is_none()
    }

    /// The unique group element moving `x` to `y` under a free action.
    pub fn element_between(&self, x: usize, y: usize) -> Option<usize> {
        (0..self.group.order()).find(|&g| self.act(g, x) == y)
    }

    pub fn orbit_relation(&self, space: ProbSpace) -> Result<EqRel> {
        EqRel::generated_by(space, &self.maps)
    }
}
