//! Co-induced relations: given a free action `β` of a finite group whose
//! orbits refine `R` with constant index `N`, and an action `α` of the same
//! group on `Y`, builds the relation on `X × Y^N` in which
//! `(x, y) ~ (x′, y′)` iff `x R x′` and `y′ₙ = δ(x,x′)(n) · y_{π(x,x′)⁻¹(n)}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::eqrel::{check_extension, index, Automorphism, Condition, EqRel, ExtensionMap, Index, ProbSpace, Weight};
use crate::error::{Error, Result};
use crate::extension::{digits, undigits};
use crate::group::GroupAction;

/// How choice functions step through the orbits of a class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ChoiceOrder {
    /// `C_j` moves orbit `a` to orbit `a + j (mod N)`.
    Cyclic,
    /// `C_j` moves orbit `a` to orbit `a − j (mod N)`.
    Reversed,
}

/// Choice functions `C₀ = id, …, C_{N−1}` with the permutation cocycle `π`
/// and the group cocycle `δ` they induce.
#[derive(Clone, Debug)]
pub struct ChoiceSystem {
    pub rel: EqRel,
    pub beta: GroupAction,
    pub orbits: EqRel,
    pub order: ChoiceOrder,
    pub choice_fns: Vec<Automorphism>,
    /// `perm[x][j]`: π(x, x′) for `x′` the j-th member of the class of `x`.
    perm: Vec<Vec<Vec<usize>>>,
    delta: Vec<Vec<Vec<usize>>>,
}

impl ChoiceSystem {
    pub fn n(&self) -> usize {
        self.choice_fns.len()
    }

    fn slot(&self, x: usize, x2: usize) -> usize {
        self.rel.class_members(x).binary_search(&x2).expect("points in one class")
    }

    /// π(x, x′): `[C_k(x)] = [C_{π(k)}(x′)]` as orbits.
    pub fn perm(&self, x: usize, x2: usize) -> &[usize] {
        &self.perm[x][self.slot(x, x2)]
    }

    /// δ(x, x′)(n): the group element with `C_n(x′) = δ(n)·C_k(x)`, `n = π(k)`.
    pub fn delta(&self, x: usize, x2: usize) -> &[usize] {
        &self.delta[x][self.slot(x, x2)]
    }

    pub fn to_json(&self) -> serde_json::Value {
        let pairs = |table: &Vec<Vec<Vec<usize>>>| -> Vec<serde_json::Value> {
            (0..self.rel.len())
                .flat_map(|x| {
                    self.rel
                        .class_members(x)
                        .iter()
                        .enumerate()
                        .map(move |(j, &x2)| serde_json::json!([x, x2, table[x][j]]))
                })
                .collect()
        };
        serde_json::json!({
            "order": self.order,
            "choice": self.choice_fns.iter().map(|c| c.map().to_vec()).collect::<Vec<_>>(),
            "perm": pairs(&self.perm),
            "delta": pairs(&self.delta),
        })
    }
}

pub fn build_choice_system(rel: &EqRel, beta: &GroupAction, order: ChoiceOrder) -> Result<ChoiceSystem> {
    if beta.degree() != rel.len() {
        return Err(Error::InvalidArgument("action degree differs from the space".into()));
    }
    if let Some((element, point)) = beta.freeness_violation() {
        return Err(Error::NotFree { element, point });
    }
    let orbits = beta.orbit_relation(rel.space().clone())?;
    let n = match index(rel, &orbits)? {
        Index::Constant(n) => n,
        Index::NonConstant { witness, counts } => {
            return Err(Error::NonConstantIndex {
                detail: format!("classes {} and {} contain {} and {} orbits", witness.0, witness.1, counts.0, counts.1),
            })
        }
    };
    // orbit number within the class (orbits ordered by minimum) and position within the orbit
    let mut orbit_no = vec![0; rel.len()];
    let mut position = vec![0; rel.len()];
    let mut class_orbits: Vec<Vec<&[usize]>> = Vec::with_capacity(rel.num_classes());
    for c in rel.classes() {
        let mut os: Vec<&[usize]> = Vec::new();
        for &x in c {
            let o = orbits.class_members(x);
            if o[0] == x {
                os.push(o);
            }
        }
        for (a, o) in os.iter().enumerate() {
            for (t, &x) in o.iter().enumerate() {
                orbit_no[x] = a;
                position[x] = t;
            }
        }
        class_orbits.push(os);
    }
    let step = |a: usize, j: usize| match order {
        ChoiceOrder::Cyclic => (a + j) % n,
        ChoiceOrder::Reversed => (a + n - j % n) % n,
    };
    let choice_fns: Vec<Automorphism> = (0..n)
        .map(|j| {
            let map = (0..rel.len())
                .map(|x| class_orbits[rel.class_index(x)][step(orbit_no[x], j)][position[x]])
                .collect();
            Automorphism::new(map)
        })
        .collect::<Result<_>>()?;
    let (perm, delta): (Vec<_>, Vec<_>) = (0..rel.len())
        .into_par_iter()
        .map(|x| {
            rel.class_members(x)
                .iter()
                .map(|&x2| {
                    // orbit of C_n(x′) → n
                    let mut at = vec![0; n];
                    for (m, c) in choice_fns.iter().enumerate() {
                        at[orbit_no[c.apply(x2)]] = m;
                    }
                    let p: Vec<usize> = (0..n).map(|k| at[orbit_no[choice_fns[k].apply(x)]]).collect();
                    let mut d = vec![0; n];
                    for k in 0..n {
                        d[p[k]] = beta
                            .element_between(choice_fns[k].apply(x), choice_fns[p[k]].apply(x2))
                            .expect("same orbit");
                    }
                    (p, d)
                })
                .unzip::<_, _, Vec<_>, Vec<_>>()
        })
        .unzip();
    Ok(ChoiceSystem { rel: rel.clone(), beta: beta.clone(), orbits, order, choice_fns, perm, delta })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChoiceReport {
    pub triples: usize,
    /// C₀ = id and {C_j(x)} meets every orbit of the class once.
    pub enumerates_orbits: bool,
    /// π(x′, x″) ∘ π(x, x′) = π(x, x″).
    pub cocycle: bool,
    /// C_n(x′) = δ(x,x′)(n) · C_k(x) with n = π(x,x′)(k).
    pub defining_relation: bool,
    /// δ(x,x″)(n) = δ(x′,x″)(n) · δ(x,x′)(π(x′,x″)⁻¹(n)).
    pub delta_chain: bool,
    pub reflexive: bool,
}

impl ChoiceReport {
    pub fn ok(&self) -> bool {
        self.enumerates_orbits && self.cocycle && self.defining_relation && self.delta_chain && self.reflexive
    }
}

fn invert(p: &[usize]) -> Vec<usize> {
    let mut q = vec![0; p.len()];
    for (k, &v) in p.iter().enumerate() {
        q[v] = k;
    }
    q
}

/// Exhaustive check over all pairs and in-class triples.
pub fn verify_choice_system(cs: &ChoiceSystem) -> ChoiceReport {
    let n = cs.n();
    let g = &cs.beta.group;
    let enumerates_orbits = cs.choice_fns[0].is_identity()
        && (0..cs.rel.len()).all(|x| {
            let mut reps: Vec<usize> = cs.choice_fns.iter().map(|c| cs.orbits.class_of(c.apply(x))).collect();
            reps.sort_unstable();
            reps.dedup();
            reps.len() == n && cs.choice_fns.iter().all(|c| cs.rel.same_class(x, c.apply(x)))
        });
    let reflexive = (0..cs.rel.len()).all(|x| {
        cs.perm(x, x).iter().enumerate().all(|(k, &v)| k == v) && cs.delta(x, x).iter().all(|&d| d == 0)
    });
    let defining_relation = (0..cs.rel.len()).all(|x| {
        cs.rel.class_members(x).iter().all(|&x2| {
            let (p, d) = (cs.perm(x, x2), cs.delta(x, x2));
            (0..n).all(|k| cs.choice_fns[p[k]].apply(x2) == cs.beta.act(d[p[k]], cs.choice_fns[k].apply(x)))
        })
    });
    let per_class: Vec<(usize, bool, bool)> = cs
        .rel
        .classes()
        .par_iter()
        .map(|c| {
            let mut cocycle = true;
            let mut chain = true;
            for &x in c {
                for &x1 in c {
                    let p01 = cs.perm(x, x1);
                    let d01 = cs.delta(x, x1);
                    for &x2 in c {
                        let p12 = cs.perm(x1, x2);
                        let p02 = cs.perm(x, x2);
                        cocycle &= (0..n).all(|k| p12[p01[k]] == p02[k]);
                        let back = invert(p12);
                        let d12 = cs.delta(x1, x2);
                        let d02 = cs.delta(x, x2);
                        chain &= (0..n).all(|m| d02[m] == g.mul(d12[m], d01[back[m]]));
                    }
                }
            }
            (c.len().pow(3), cocycle, chain)
        })
        .collect();
    ChoiceReport {
        triples: per_class.iter().map(|t| t.0).sum(),
        enumerates_orbits,
        cocycle: per_class.iter().all(|t| t.1),
        defining_relation,
        delta_chain: per_class.iter().all(|t| t.2),
        reflexive,
    }
}

/// The co-induced relation on `X × Y^N`; point `(x, y)` has id
/// `x·|Y|^N + Σ yₙ |Y|ⁿ`.
#[derive(Clone, Debug)]
pub struct CoinducedRelation {
    pub rel: EqRel,
    pub n: usize,
    pub y_len: usize,
    /// Reflexivity, symmetry and transitivity of the defining formula, checked on all triples.
    pub axioms_hold: bool,
}

impl CoinducedRelation {
    pub fn configs(&self) -> usize {
        self.y_len.pow(self.n as u32)
    }

    pub fn decode(&self, id: usize) -> (usize, Vec<usize>) {
        (id / self.configs(), digits(id % self.configs(), std::iter::repeat_n(self.y_len, self.n)))
    }

    pub fn encode(&self, x: usize, y: &[usize]) -> usize {
        x * self.configs() + undigits(y, &vec![self.y_len; self.n])
    }

    pub fn proj_x(&self) -> Vec<usize> {
        (0..self.rel.len()).map(|id| id / self.configs()).collect()
    }

    pub fn proj_y0(&self) -> Vec<usize> {
        (0..self.rel.len()).map(|id| id % self.configs() % self.y_len).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v: serde_json::Value = serde_json::from_str(&self.rel.to_json(&[])).expect("valid json");
        v["points"] = (0..self.rel.len()).map(|id| serde_json::json!(self.decode(id))).collect();
        v
    }
}

fn same_group(a: &GroupAction, b: &GroupAction) -> bool {
    let (g, h) = (&a.group, &b.group);
    g.order() == h.order() && (0..g.order()).all(|x| (0..g.order()).all(|y| g.mul(x, y) == h.mul(x, y)))
}

/// `y ↦ y′` with `y′ₙ = δ(x,x′)(n) · y_{π(x,x′)⁻¹(n)}`.
fn transport(cs: &ChoiceSystem, alpha: &GroupAction, x: usize, x2: usize, y: &[usize]) -> Vec<usize> {
    let back = invert(cs.perm(x, x2));
    let d = cs.delta(x, x2);
    (0..y.len()).map(|m| alpha.act(d[m], y[back[m]])).collect()
}

pub fn coinduce(cs: &ChoiceSystem, alpha: &GroupAction, y_space: &ProbSpace, budget: u128) -> Result<CoinducedRelation> {
    if !same_group(&cs.beta, alpha) {
        return Err(Error::InvalidGroup("both actions must be of the same group".into()));
    }
    if alpha.degree() != y_space.len() {
        return Err(Error::InvalidArgument("action degree differs from Y".into()));
    }
    let n = cs.n();
    let y_len = y_space.len();
    let configs = (y_len as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    let needed = configs.saturating_mul(cs.rel.len() as u128);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let configs = configs as usize;
    let radices = vec![y_len; n];
    let mut weights = Vec::with_capacity(needed as usize);
    for x in 0..cs.rel.len() {
        for code in 0..configs {
            let y = digits(code, radices.iter().copied());
            weights.push(cs.rel.weight(x) * y.iter().map(|&v| y_space.weight(v)).product::<Weight>());
        }
    }
    let id = |x: usize, y: &[usize]| x * configs + undigits(y, &radices);
    // axioms: f(x,x) = id, f(x′,x)∘f(x,x′) = id, f(x′,x″)∘f(x,x′) = f(x,x″)
    let axioms_hold = cs.rel.classes().par_iter().all(|c| {
        (0..configs).all(|code| {
            let y = digits(code, radices.iter().copied());
            c.iter().all(|&x| {
                transport(cs, alpha, x, x, &y) == y
                    && c.iter().all(|&x1| {
                        let y1 = transport(cs, alpha, x, x1, &y);
                        transport(cs, alpha, x1, x, &y1) == y
                            && c.iter().all(|&x2| transport(cs, alpha, x1, x2, &y1) == transport(cs, alpha, x, x2, &y))
                    })
            })
        })
    });
    let mut seen = vec![false; needed as usize];
    let mut classes = Vec::new();
    for x in 0..cs.rel.len() {
        for code in 0..configs {
            if seen[x * configs + code] {
                continue;
            }
            let y = digits(code, radices.iter().copied());
            let class: Vec<usize> =
                cs.rel.class_members(x).iter().map(|&x2| id(x2, &transport(cs, alpha, x, x2, &y))).collect();
            for &p in &class {
                seen[p] = true;
            }
            classes.push(class);
        }
    }
    let rel = EqRel::from_classes(ProbSpace::new(weights)?, classes)?;
    Ok(CoinducedRelation { rel, n, y_len, axioms_hold })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CindReport {
    /// Extension of `R` under `(x, y) ↦ x`.
    pub extension: bool,
    /// Measure preservation and class containment over the orbits of `α` under `(x, y) ↦ y₀`.
    pub expansion_containment: bool,
    /// Class-injectivity of `(x, y) ↦ y₀`; fails at finite scale.
    pub expansion_injective: bool,
    /// Measure of the points whose class meets some `y₀`-fibre twice.
    #[serde(serialize_with = "crate::eqrel::serialize_weight")]
    pub injectivity_failure_measure: Weight,
}

pub fn verify_cind_props(cs: &ChoiceSystem, cr: &CoinducedRelation, alpha: &GroupAction, y_space: &ProbSpace) -> Result<CindReport> {
    let over_x = check_extension(&ExtensionMap { source: cr.rel.clone(), target: cs.rel.clone(), proj: cr.proj_x() })?;
    let y_orbits = alpha.orbit_relation(y_space.clone())?;
    let over_y = check_extension(&ExtensionMap { source: cr.rel.clone(), target: y_orbits, proj: cr.proj_y0() })?;
    Ok(CindReport {
        extension: over_x.is_extension,
        expansion_containment: over_y.holds(Condition::MeasurePreserving) && over_y.holds(Condition::ClassContaining),
        expansion_injective: over_y.holds(Condition::ClassInjective),
        injectivity_failure_measure: over_y.injectivity_failure_measure,
    })
}

/// The lift `θ̃(x, y) = (θx, y′)` of `θ ∈ [R]`, the unique element of the
/// full group of the co-induced relation over `θ`.
pub fn lift(cs: &ChoiceSystem, cr: &CoinducedRelation, alpha: &GroupAction, theta: &Automorphism) -> Result<Automorphism> {
    cs.rel.check_automorphism(theta)?;
    let map = (0..cr.rel.len())
        .map(|id| {
            let (x, y) = cr.decode(id);
            cr.encode(theta.apply(x), &transport(cs, alpha, x, theta.apply(x), &y))
        })
        .collect();
    let lifted = Automorphism::new(map)?;
    cr.rel.check_automorphism(&lifted)?;
    Ok(lifted)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SwapReport {
    /// The two orders give literally the same relation.
    pub identical: bool,
    /// Same multiset of (class size, class weight), i.e. isomorphic as finite relations.
    pub isomorphic: bool,
    /// Same as `isomorphic`, but additionally over `R`: fibres of `(x, y) ↦ x` carry equal class-size data.
    pub fibrewise_invariants_equal: bool,
}

/// Builds the co-induced relation from the cyclic and the reversed choice
/// orders and compares them, without asserting either outcome.
pub fn swap_test(rel: &EqRel, beta: &GroupAction, alpha: &GroupAction, y_space: &ProbSpace, budget: u128) -> Result<SwapReport> {
    let a_cs = build_choice_system(rel, beta, ChoiceOrder::Cyclic)?;
    let b_cs = build_choice_system(rel, beta, ChoiceOrder::Reversed)?;
    let a = coinduce(&a_cs, alpha, y_space, budget)?;
    let b = coinduce(&b_cs, alpha, y_space, budget)?;
    let fibre = |cr: &CoinducedRelation| -> Vec<Vec<(usize, Weight)>> {
        (0..rel.len())
            .map(|x| {
                let mut v: Vec<(usize, Weight)> = (0..cr.configs())
                    .map(|code| {
                        let id = x * cr.configs() + code;
                        (cr.rel.class_members(id).len(), cr.rel.weight(id).clone())
                    })
                    .collect();
                v.sort();
                v
            })
            .collect()
    };
    Ok(SwapReport {
        identical: a.rel.classes() == b.rel.classes(),
        isomorphic: a.rel.isomorphism_invariant() == b.rel.isomorphism_invariant(),
        fibrewise_invariants_equal: fibre(&a) == fibre(&b),
    })
}
