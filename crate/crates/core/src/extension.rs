//! Bernoulli extensions of finite relations and explicit isomorphisms between them.
//!
//! A point of an extension is a pair `(x, ω)` with `ω` a labeling of the class
//! of `x`. The labeling is stored as a mixed-radix code whose least
//! significant digit belongs to the smallest member of the class. Point ids
//! are `offset(class) + code·|class| + position(x)`, so each extension class
//! (fixed class and code) is a contiguous id range.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::eqrel::{
    check_extension, format_weight, index, ratio, restrict, weight_to_f64, Automorphism, EqRel, ExtensionMap, Index,
    PartialIso, ProbSpace, Weight,
};
use crate::error::{Error, Result};
use crate::graphing::Graphing;
use crate::group::GroupAction;

pub const DEFAULT_BUDGET: u128 = 1_000_000;

/// Sentinel printed for coordinates outside a compression domain.
pub const PAD: &str = "*";

/// A finite probability space of symbols `0..len`, or an atomless marker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseSpace {
    weights: Vec<Weight>,
    atomless: bool,
}

impl BaseSpace {
    pub fn new(weights: Vec<Weight>) -> Result<Self> {
        let space = ProbSpace::new(weights)?;
        Ok(BaseSpace { weights: space.weights().to_vec(), atomless: false })
    }

    pub fn uniform(k: usize) -> Self {
        BaseSpace { weights: vec![ratio(1, k as i64); k], atomless: false }
    }

    /// `{0, 1}` with `P(1) = p`.
    pub fn bernoulli(p: &Weight) -> Result<Self> {
        Self::new(vec![Weight::one() - p, p.clone()])
    }

    /// Marker for a non-atomic base; it has infinite entropy and cannot be enumerated.
    pub fn atomless() -> Self {
        BaseSpace { weights: Vec::new(), atomless: true }
    }

    pub fn is_atomless(&self) -> bool {
        self.atomless
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, s: usize) -> &Weight {
        &self.weights[s]
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    /// `K^n`; symbol codes are mixed radix with coordinate 0 least significant.
    pub fn power(&self, n: usize) -> Self {
        let k = self.len();
        let total = k.pow(n as u32);
        let weights = (0..total)
            .map(|code| digits(code, std::iter::repeat_n(k, n)).iter().map(|&s| &self.weights[s]).product())
            .collect();
        BaseSpace { weights, atomless: self.atomless }
    }

    /// Shannon entropy in nats; infinite for an atomless base.
    pub fn entropy(&self) -> f64 {
        if self.atomless {
            return f64::INFINITY;
        }
        self.weights
            .iter()
            .map(weight_to_f64)
            .filter(|&w| w > 0.0)
            .map(|w| -w * w.ln())
            .sum()
    }
}

/// Digits of `code` in the given radices, least significant first.
pub fn digits(mut code: usize, radices: impl IntoIterator<Item = usize>) -> Vec<usize> {
    radices
        .into_iter()
        .map(|r| {
            let d = code % r;
            code /= r;
            d
        })
        .collect()
}

pub fn undigits(digits: &[usize], radices: &[usize]) -> usize {
    digits.iter().zip(radices).rev().fold(0, |acc, (&d, &r)| acc * r + d)
}

/// An (inhomogeneous) Bernoulli extension: point `y` of the base is labeled
/// from its own alphabet `alphabets[y]`.
#[derive(Clone, Debug)]
pub struct Extension {
    pub base_rel: EqRel,
    pub alphabets: Vec<BaseSpace>,
    pub rel: EqRel,
    pub proj: Vec<usize>,
    offsets: Vec<usize>,
    configs: Vec<usize>,
}

/// Number of extension points, or `None` on overflow.
fn point_count(rel: &EqRel, radix: impl Fn(usize) -> usize) -> Option<u128> {
    rel.classes().iter().try_fold(0u128, |acc, c| {
        let configs = c.iter().try_fold(1u128, |a, &y| a.checked_mul(radix(y) as u128))?;
        acc.checked_add(configs.checked_mul(c.len() as u128)?)
    })
}

/// `Π_y κ_y(ω_y)` for every configuration code, coordinate 0 least
/// significant, built most significant coordinate first.
fn config_masses<'a>(alphabets: impl DoubleEndedIterator<Item = &'a BaseSpace>) -> Vec<Weight> {
    alphabets.rev().fold(vec![Weight::one()], |high, alphabet| {
        high.iter().flat_map(|h| alphabet.weights().iter().map(move |w| h * w)).collect()
    })
}

impl Extension {
    pub fn build(rel: &EqRel, base: &BaseSpace, budget: u128) -> Result<Self> {
        Self::build_inhomogeneous(rel, vec![base.clone(); rel.len()], budget)
    }

    pub fn build_inhomogeneous(rel: &EqRel, alphabets: Vec<BaseSpace>, budget: u128) -> Result<Self> {
        if alphabets.len() != rel.len() {
            return Err(Error::InvalidArgument("one alphabet per point required".into()));
        }
        if alphabets.iter().any(BaseSpace::is_atomless) {
            return Err(Error::InvalidArgument("atomless base spaces cannot be enumerated".into()));
        }
        let needed = point_count(rel, |y| alphabets[y].len()).unwrap_or(u128::MAX);
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        let mut offsets = Vec::with_capacity(rel.num_classes());
        let mut configs = Vec::with_capacity(rel.num_classes());
        let mut weights = Vec::with_capacity(needed as usize);
        let mut classes = Vec::new();
        let mut proj = Vec::with_capacity(needed as usize);
        for c in rel.classes() {
            let radices: Vec<usize> = c.iter().map(|&y| alphabets[y].len()).collect();
            let omega_count: usize = radices.iter().product();
            offsets.push(weights.len());
            configs.push(omega_count);
            // weights are class-constant, so one product per configuration suffices
            let class_weight = rel.weight(c[0]);
            for mass in config_masses(c.iter().map(|&y| &alphabets[y])) {
                let point_weight = class_weight * mass;
                let start = weights.len();
                for &x in c {
                    weights.push(point_weight.clone());
                    proj.push(x);
                }
                classes.push((start..weights.len()).collect());
            }
        }
        let rel_k = EqRel::from_classes(ProbSpace::new(weights)?, classes)?;
        Ok(Extension { base_rel: rel.clone(), alphabets, rel: rel_k, proj, offsets, configs })
    }

    pub fn len(&self) -> usize {
        self.proj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proj.is_empty()
    }

    pub fn radices(&self, class_index: usize) -> Vec<usize> {
        self.base_rel.classes()[class_index].iter().map(|&y| self.alphabets[y].len()).collect()
    }

    /// Point id of `(x, ω)`, where `omega` lists symbols in the order of the class of `x`.
    pub fn encode(&self, x: usize, omega: &[usize]) -> usize {
        let ci = self.base_rel.class_index(x);
        let c = &self.base_rel.classes()[ci];
        let code = undigits(omega, &self.radices(ci));
        self.offsets[ci] + code * c.len() + c.binary_search(&x).unwrap()
    }

    /// `(x, ω)` of a point id.
    pub fn decode(&self, id: usize) -> (usize, Vec<usize>) {
        let ci = self.offsets.partition_point(|&o| o <= id) - 1;
        let c = &self.base_rel.classes()[ci];
        let rem = id - self.offsets[ci];
        (c[rem % c.len()], digits(rem / c.len(), self.radices(ci)))
    }

    /// Number of labelings of the class with the given index.
    pub fn configurations(&self, class_index: usize) -> usize {
        self.configs[class_index]
    }

    pub fn extension_map(&self) -> ExtensionMap {
        ExtensionMap { source: self.rel.clone(), target: self.base_rel.clone(), proj: self.proj.clone() }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let w = format_weight;
        serde_json::json!({
            "alphabets": self.alphabets.iter().map(|a| a.weights().iter().map(w).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "points": (0..self.len()).map(|id| {
                let (x, omega) = self.decode(id);
                serde_json::json!([x, omega])
            }).collect::<Vec<_>>(),
            "weights": self.rel.space().weights().iter().map(w).collect::<Vec<_>>(),
            "classes": self.rel.classes(),
        })
    }
}

/// Outcome of an exhaustive isomorphism verification.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IsoReport {
    pub points: usize,
    pub bijective: bool,
    pub measure_preserving: bool,
    pub relation_preserving: bool,
    pub fibre_preserving: bool,
}

impl IsoReport {
    pub fn ok(&self) -> bool {
        self.bijective && self.measure_preserving && self.relation_preserving && self.fibre_preserving
    }
}

/// A point map between two extensions of the same base, with projections.
#[derive(Clone, Debug)]
pub struct IsoWitness {
    pub source: EqRel,
    pub source_proj: Vec<usize>,
    pub target: EqRel,
    pub target_proj: Vec<usize>,
    pub map: Vec<usize>,
}

impl IsoWitness {
    /// Checks bijectivity, exact weights, that classes go onto classes, and
    /// that projections commute; linear in the number of points.
    pub fn verify(&self) -> IsoReport {
        let n = self.source.len();
        let mut hit = vec![false; self.target.len()];
        let mut bijective = n == self.target.len() && self.map.len() == n;
        if bijective {
            for &y in &self.map {
                if y >= hit.len() || hit[y] {
                    bijective = false;
                    break;
                }
                hit[y] = true;
            }
        }
        if !bijective {
            return IsoReport {
                points: n,
                bijective,
                measure_preserving: false,
                relation_preserving: false,
                fibre_preserving: false,
            };
        }
        let measure_preserving = (0..n).all(|x| self.source.weight(x) == self.target.weight(self.map[x]));
        let relation_preserving = self.source.classes().iter().all(|c| {
            let t = self.target.class_index(self.map[c[0]]);
            self.target.classes()[t].len() == c.len() && c.iter().all(|&x| self.target.class_index(self.map[x]) == t)
        });
        let fibre_preserving = (0..n).all(|x| self.target_proj[self.map[x]] == self.source_proj[x]);
        IsoReport { points: n, bijective, measure_preserving, relation_preserving, fibre_preserving }
    }

    /// Quadratic pairwise check of `x ~ y ⇔ map(x) ~ map(y)`, for tests.
    pub fn verify_pairwise(&self) -> bool {
        let n = self.source.len();
        (0..n).all(|x| {
            (0..n).all(|y| self.source.same_class(x, y) == self.target.same_class(self.map[x], self.map[y]))
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "pairs": self.map.iter().enumerate().map(|(x, &y)| [x, y]).collect::<Vec<_>>() })
    }
}

/// Bernoulli extension together with its verification report.
pub fn build_extension(rel: &EqRel, base: &BaseSpace, budget: u128) -> Result<Extension> {
    Extension::build(rel, base, budget)
}

/// The percolation extension of a graphing: pairs `(x, ω)` with `ω` an
/// open/closed state of every edge `(y, θᵢ(y))` of the class of `x`.
/// Edge bits are generator-major: bit `i·|c| + position(y)`.
#[derive(Clone, Debug)]
pub struct PercolationExtension {
    pub graphing: Graphing,
    pub p: Weight,
    pub rel: EqRel,
    pub proj: Vec<usize>,
    offsets: Vec<usize>,
    masks: Vec<Vec<u64>>,
}

impl PercolationExtension {
    pub fn build(g: &Graphing, p: &Weight, budget: u128) -> Result<Self> {
        if *p < Weight::zero() || *p > Weight::one() {
            return Err(Error::InvalidProbability(weight_to_f64(p)));
        }
        let n = g.rank();
        let degenerate = p.is_zero() || p.is_one();
        let class_configs = |c: &Vec<usize>| -> Option<u128> {
            if degenerate {
                Some(1)
            } else {
                1u128.checked_shl(u32::try_from(n * c.len()).ok()?).filter(|&v| v > 0 && n * c.len() < 64)
            }
        };
        let needed = g
            .rel
            .classes()
            .iter()
            .try_fold(0u128, |acc, c| acc.checked_add(class_configs(c)?.checked_mul(c.len() as u128)?))
            .unwrap_or(u128::MAX);
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        let q = Weight::one() - p;
        let mut weights = Vec::new();
        let mut proj = Vec::new();
        let mut classes = Vec::new();
        let mut offsets = Vec::new();
        let mut masks = Vec::new();
        for c in g.rel.classes() {
            let edges = n * c.len();
            let class_masks: Vec<u64> = if degenerate {
                vec![if p.is_one() { (1u64 << edges) - 1 } else { 0 }]
            } else {
                (0..1u64 << edges).collect()
            };
            offsets.push(weights.len());
            // point weight by number of open edges; weights are class-constant
            let by_ones: Vec<Weight> =
                (0..=edges).map(|k| g.rel.weight(c[0]) * pow(p, k) * pow(&q, edges - k)).collect();
            for &mask in &class_masks {
                let point_weight = &by_ones[mask.count_ones() as usize];
                let start = weights.len();
                for &x in c {
                    weights.push(point_weight.clone());
                    proj.push(x);
                }
                classes.push((start..weights.len()).collect());
            }
            masks.push(class_masks);
        }
        let rel = EqRel::from_classes(ProbSpace::new(weights)?, classes)?;
        Ok(PercolationExtension { graphing: g.clone(), p: p.clone(), rel, proj, offsets, masks })
    }

    pub fn len(&self) -> usize {
        self.proj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proj.is_empty()
    }

    /// `(x, edge mask)` of a point id.
    pub fn decode(&self, id: usize) -> (usize, u64) {
        let ci = self.offsets.partition_point(|&o| o <= id) - 1;
        let c = &self.graphing.rel.classes()[ci];
        let rem = id - self.offsets[ci];
        (c[rem % c.len()], self.masks[ci][rem / c.len()])
    }

    /// Whether the edge `(y, θᵢ(y))` is open in `mask`, for `y` in class `ci`.
    pub fn is_open(&self, class_index: usize, mask: u64, y_position: usize, generator: usize) -> bool {
        let size = self.graphing.rel.classes()[class_index].len();
        mask >> (generator * size + y_position) & 1 == 1
    }
}

fn pow(w: &Weight, k: usize) -> Weight {
    (0..k).fold(Weight::one(), |acc, _| acc * w)
}

/// Identifies the percolation extension with the Bernoulli extension with
/// base `({0,1}^n, λ_p^n)` through `(y, i) ↦ (y, θᵢ(y))`. For `p ∈ {0, 1}`
/// the base is its single atom (all closed or all open).
pub fn perc_label_iso(g: &Graphing, p: &Weight, budget: u128) -> Result<(IsoWitness, PercolationExtension, Extension)> {
    let perc = PercolationExtension::build(g, p, budget)?;
    let degenerate = p.is_zero() || p.is_one();
    let base = if degenerate { BaseSpace::uniform(1) } else { BaseSpace::bernoulli(p)?.power(g.rank()) };
    let bern = Extension::build(&g.rel, &base, budget)?;
    let n = g.rank();
    let map = (0..perc.len())
        .map(|id| {
            let (x, mask) = perc.decode(id);
            let ci = g.rel.class_index(x);
            let size = g.rel.classes()[ci].len();
            let omega: Vec<usize> = (0..size)
                .map(|pos| {
                    if degenerate {
                        0
                    } else {
                        (0..n).map(|i| usize::from(perc.is_open(ci, mask, pos, i)) << i).sum()
                    }
                })
                .collect();
            bern.encode(x, &omega)
        })
        .collect();
    let witness = IsoWitness {
        source: perc.rel.clone(),
        source_proj: perc.proj.clone(),
        target: bern.rel.clone(),
        target_proj: bern.proj.clone(),
        map,
    };
    Ok((witness, perc, bern))
}

/// Checks that `{θ_n([x]_S)}` partitions `[x]_R` for every `x`.
pub fn check_decomposition(rel: &EqRel, sub: &EqRel, maps: &[Automorphism]) -> Result<()> {
    sub.refines(rel)?;
    for m in maps {
        rel.check_automorphism(m)?;
    }
    for c in sub.classes() {
        let target = rel.class_members(c[0]);
        let mut seen = vec![false; rel.len()];
        let mut count = 0;
        for (n, m) in maps.iter().enumerate() {
            for &y in c {
                let z = m.apply(y);
                if seen[z] {
                    return Err(Error::InvalidDecomposition(format!(
                        "translates overlap at point {z} (map {n}, subclass {})",
                        c[0]
                    )));
                }
                seen[z] = true;
                count += 1;
            }
        }
        if count != target.len() {
            let gap = target.iter().find(|&&z| !seen[z]).copied().unwrap_or(c[0]);
            return Err(Error::InvalidDecomposition(format!("point {gap} is not covered")));
        }
    }
    Ok(())
}

/// The lift of `sub` inside the Bernoulli extension of `rel`.
pub fn lift_subrelation(ext: &Extension, sub: &EqRel) -> Result<EqRel> {
    let labels: Vec<usize> = (0..ext.len())
        .map(|id| {
            let (x, omega) = ext.decode(id);
            ext.encode(sub.class_of(x), &omega)
        })
        .collect();
    EqRel::from_labels(ext.rel.space().clone(), &labels)
}

#[derive(Clone, Debug)]
pub struct SubrelationIso {
    pub witness: IsoWitness,
    pub index: usize,
    /// Entropy of the base `K^N` of the target extension.
    pub target_entropy: f64,
}

/// Φ(x, ω) = (x, ω′) with ω′(y)ₙ = ω(θₙ(y)): the lift of `sub` inside `rel_K`
/// is isomorphic, over `sub`, to the Bernoulli extension of `sub` with base `K^N`.
pub fn lift_subrelation_iso(
    rel: &EqRel,
    sub: &EqRel,
    base: &BaseSpace,
    maps: &[Automorphism],
    budget: u128,
) -> Result<SubrelationIso> {
    let n = match index(rel, sub)? {
        Index::Constant(n) => n,
        Index::NonConstant { witness, counts } => {
            return Err(Error::NonConstantIndex {
                detail: format!("classes {} and {} contain {} and {} subclasses", witness.0, witness.1, counts.0, counts.1),
            })
        }
    };
    if maps.len() != n {
        return Err(Error::InvalidDecomposition(format!("{} maps given for index {n}", maps.len())));
    }
    check_decomposition(rel, sub, maps)?;
    let ext = Extension::build(rel, base, budget)?;
    let lifted = lift_subrelation(&ext, sub)?;
    let target_base = base.power(n);
    let target = Extension::build(sub, &target_base, budget)?;
    let k = base.len();
    let map = (0..ext.len())
        .map(|id| {
            let (x, omega) = ext.decode(id);
            let r_class = rel.class_members(x);
            let symbol_at = |z: usize| omega[r_class.binary_search(&z).unwrap()];
            let omega_prime: Vec<usize> = sub
                .class_members(x)
                .iter()
                .map(|&y| maps.iter().rev().fold(0, |acc, m| acc * k + symbol_at(m.apply(y))))
                .collect();
            target.encode(x, &omega_prime)
        })
        .collect();
    Ok(SubrelationIso {
        witness: IsoWitness {
            source: lifted,
            source_proj: ext.proj.clone(),
            target: target.rel.clone(),
            target_proj: target.proj.clone(),
            map,
        },
        index: n,
        target_entropy: target_base.entropy(),
    })
}

#[derive(Clone, Debug)]
pub struct CompressionIso {
    pub witness: IsoWitness,
    /// μ(Y).
    pub mu_y: Weight,
    /// Σ_y μ_Y(y)·|S(y)|, the target entropy in units of H(K).
    pub entropy_factor: Weight,
    /// Whether `entropy_factor = 1/μ(Y)` exactly.
    pub entropy_factor_matches: bool,
    pub target_entropy: f64,
    /// Target alphabet coordinates of every Y-point: `Some(map index)` or padding.
    pub coordinates: Vec<Vec<Option<usize>>>,
}

/// Φ(x, ω) = (x, ω′) with ω′(y)ₙ = ω(θₙ(y)) for `y ∈ dom θₙ` and the padding
/// symbol otherwise, from the Bernoulli extension restricted over `Y` onto
/// the inhomogeneous extension of `R↾Y` with data `κ^{S(y)}`.
pub fn compression_iso(
    rel: &EqRel,
    subset_y: &[usize],
    base: &BaseSpace,
    partial_isos: &[PartialIso],
    budget: u128,
) -> Result<CompressionIso> {
    let restricted = restrict(rel, subset_y)?;
    let y_points = &restricted.points;
    let in_y = |x: usize| y_points.binary_search(&x).ok();
    let mut covered = vec![false; rel.len()];
    for (i, t) in partial_isos.iter().enumerate() {
        for (d, z) in t.pairs() {
            if in_y(d).is_none() {
                return Err(Error::InvalidDecomposition(format!("map {i} is defined at {d} outside Y")));
            }
            if covered[z] {
                return Err(Error::InvalidDecomposition(format!("images overlap at point {z}")));
            }
            covered[z] = true;
        }
    }
    if let Some(gap) = covered.iter().position(|&c| !c) {
        return Err(Error::InvalidDecomposition(format!("point {gap} is not covered")));
    }
    // S(y) for every Y-point, in local ids
    let domains: Vec<Vec<usize>> = y_points
        .iter()
        .map(|&y| (0..partial_isos.len()).filter(|&i| partial_isos[i].apply(y).is_some()).collect())
        .collect();
    let alphabets: Vec<BaseSpace> = domains.iter().map(|s| base.power(s.len())).collect();
    let target = Extension::build_inhomogeneous(&restricted.rel, alphabets, budget)?;

    let ext = Extension::build(rel, base, budget)?;
    let lifted_points: Vec<usize> = (0..ext.len()).filter(|&id| in_y(ext.proj[id]).is_some()).collect();
    let source = restrict(&ext.rel, &lifted_points)?;
    let source_proj: Vec<usize> = source.points.iter().map(|&id| in_y(ext.proj[id]).unwrap()).collect();
    let k = base.len();
    let map = source
        .points
        .iter()
        .map(|&id| {
            let (x, omega) = ext.decode(id);
            let r_class = rel.class_members(x);
            let symbol_at = |z: usize| omega[r_class.binary_search(&z).unwrap()];
            let local_class = restricted.rel.class_members(in_y(x).unwrap());
            let omega_prime: Vec<usize> = local_class
                .iter()
                .map(|&ly| {
                    let y = y_points[ly];
                    domains[ly]
                        .iter()
                        .rev()
                        .fold(0, |acc, &i| acc * k + symbol_at(partial_isos[i].apply(y).unwrap()))
                })
                .collect();
            target.encode(in_y(x).unwrap(), &omega_prime)
        })
        .collect();
    let entropy_factor: Weight = (0..y_points.len())
        .map(|ly| restricted.rel.weight(ly) * BigRational::from_integer(BigInt::from(domains[ly].len())))
        .sum();
    let entropy_factor_matches = entropy_factor == Weight::one() / &restricted.scale;
    let coordinates = domains
        .iter()
        .map(|s| (0..partial_isos.len()).map(|i| s.binary_search(&i).ok().map(|_| i)).collect())
        .collect();
    Ok(CompressionIso {
        witness: IsoWitness {
            source: source.rel,
            source_proj,
            target: target.rel.clone(),
            target_proj: target.proj.clone(),
            map,
        },
        target_entropy: base.entropy() * weight_to_f64(&entropy_factor),
        mu_y: restricted.scale,
        entropy_factor,
        entropy_factor_matches,
        coordinates,
    })
}

/// Renders a target symbol with the padding sentinel, for dumps.
pub fn padded_symbol(coordinates: &[Option<usize>], symbol: usize, k: usize) -> Vec<String> {
    let present = coordinates.iter().filter(|c| c.is_some()).count();
    let mut d = digits(symbol, std::iter::repeat_n(k, present)).into_iter();
    coordinates
        .iter()
        .map(|c| match c {
            Some(_) => d.next().unwrap().to_string(),
            None => PAD.to_string(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ShiftConjugacyReport {
    pub points: usize,
    pub bijective: bool,
    pub measure_preserving: bool,
    /// σ⁻¹ ∘ θ̃ ∘ σ = θ × shift at every point.
    pub conjugates: bool,
    /// θ̃-orbit length in the extension equals lcm(θ-cycle, shift period) on the product side.
    pub orbit_lengths_match: bool,
}

impl ShiftConjugacyReport {
    pub fn ok(&self) -> bool {
        self.bijective && self.measure_preserving && self.conjugates && self.orbit_lengths_match
    }
}

/// σ(x, (k_{i,j})) = (x, ω) with ω(θᵢθʲ(x)) = k_{i,j}, where `j` runs over the
/// θ-cycle of `x`; verifies that σ conjugates θ̃(x, ω) = (θx, ω) to θ × shift.
pub fn shift_conjugacy(
    rel: &EqRel,
    theta: &Automorphism,
    base: &BaseSpace,
    maps: &[Automorphism],
    budget: u128,
) -> Result<ShiftConjugacyReport> {
    rel.check_automorphism(theta)?;
    let cycles = EqRel::generated_by(rel.space().clone(), std::slice::from_ref(theta))?;
    check_decomposition(rel, &cycles, maps)?;
    let ext = Extension::build(rel, base, budget)?;
    let k = base.len();
    let n = maps.len();
    let cycle_len = |x: usize| cycles.class_members(x).len();
    // product side: (x, code) with code over N·L digits, digit (i, j) at i·L + j
    let mut product_offsets = Vec::with_capacity(rel.len() + 1);
    let mut total = 0usize;
    for x in 0..rel.len() {
        product_offsets.push(total);
        let l = cycle_len(x);
        total = total
            .checked_add(k.checked_pow((n * l) as u32).ok_or(Error::BudgetExceeded { needed: u128::MAX, budget })?)
            .ok_or(Error::BudgetExceeded { needed: u128::MAX, budget })?;
    }
    product_offsets.push(total);
    if total as u128 > budget {
        return Err(Error::BudgetExceeded { needed: total as u128, budget });
    }
    let theta_pow = |x: usize, j: usize| (0..j).fold(x, |y, _| theta.apply(y));
    let sigma = |x: usize, code: usize| -> usize {
        let l = cycle_len(x);
        let kij = digits(code, std::iter::repeat_n(k, n * l));
        let class = rel.class_members(x);
        let mut omega = vec![0; class.len()];
        for (i, m) in maps.iter().enumerate() {
            for j in 0..l {
                omega[class.binary_search(&m.apply(theta_pow(x, j))).unwrap()] = kij[i * l + j];
            }
        }
        ext.encode(x, &omega)
    };
    let shift = |x: usize, code: usize| -> usize {
        let l = cycle_len(x);
        let kij = digits(code, std::iter::repeat_n(k, n * l));
        let shifted: Vec<usize> = (0..n * l).map(|d| kij[(d / l) * l + (d % l + 1) % l]).collect();
        undigits(&shifted, &vec![k; n * l])
    };
    let mut hit = vec![false; ext.len()];
    let mut bijective = total == ext.len();
    let mut measure_preserving = true;
    let mut conjugates = true;
    let mut orbit_lengths_match = true;
    for x in 0..rel.len() {
        let l = cycle_len(x);
        for code in 0..product_offsets[x + 1] - product_offsets[x] {
            let id = sigma(x, code);
            if hit[id] {
                bijective = false;
            }
            hit[id] = true;
            let kij = digits(code, std::iter::repeat_n(k, n * l));
            let mass: Weight = rel.weight(x) * kij.iter().map(|&s| base.weight(s)).product::<Weight>();
            measure_preserving &= mass == *ext.rel.weight(id);
            // θ̃ acts on the extension by moving x and keeping ω
            let (ex, omega) = ext.decode(id);
            let lifted = ext.encode(theta.apply(ex), &omega);
            conjugates &= lifted == sigma(theta.apply(x), shift(x, code));
            // orbit lengths
            let mut ext_len = 1;
            let mut cur = lifted;
            while cur != id {
                let (cx, com) = ext.decode(cur);
                cur = ext.encode(theta.apply(cx), &com);
                ext_len += 1;
            }
            let mut period = 1;
            let mut c = shift(x, code);
            while c != code {
                c = shift(x, c);
                period += 1;
            }
            orbit_lengths_match &= ext_len == lcm(l, period);
        }
    }
    Ok(ShiftConjugacyReport {
        points: total,
        bijective: bijective && hit.iter().all(|&h| h),
        measure_preserving,
        conjugates,
        orbit_lengths_match,
    })
}

fn lcm(a: usize, b: usize) -> usize {
    let mut x = a;
    let mut y = b;
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

/// For a free action `Γ ↷ X`, θ(x, ω) = (x, η) with η(g) = ω(g⁻¹x) identifies
/// the Bernoulli extension of the orbit relation with the orbit relation of
/// the diagonal action on `X × K^Γ`.
pub fn orbit_extension_iso(
    action: &GroupAction,
    space: &ProbSpace,
    base: &BaseSpace,
    budget: u128,
) -> Result<IsoWitness> {
    if let Some((element, point)) = action.freeness_violation() {
        return Err(Error::NotFree { element, point });
    }
    let rel = action.orbit_relation(space.clone())?;
    let ext = Extension::build(&rel, base, budget)?;
    let order = action.group.order();
    let k = base.len();
    let per_point = k.checked_pow(order as u32).ok_or(Error::BudgetExceeded { needed: u128::MAX, budget })?;
    let total = per_point * rel.len();
    if total as u128 > budget {
        return Err(Error::BudgetExceeded { needed: total as u128, budget });
    }
    let radices = vec![k; order];
    // target point (x, η) has id x·k^|Γ| + code(η)
    let mut weights = Vec::with_capacity(total);
    for x in 0..rel.len() {
        for code in 0..per_point {
            let eta = digits(code, radices.iter().copied());
            weights.push(rel.weight(x) * eta.iter().map(|&s| base.weight(s)).product::<Weight>());
        }
    }
    let g_maps: Vec<Automorphism> = (0..order)
        .map(|g| {
            let map = (0..total)
                .map(|id| {
                    let (x, code) = (id / per_point, id % per_point);
                    let eta = digits(code, radices.iter().copied());
                    // (g·η)(h) = η(g⁻¹h)
                    let moved: Vec<usize> =
                        (0..order).map(|h| eta[action.group.mul(action.group.inv(g), h)]).collect();
                    action.act(g, x) * per_point + undigits(&moved, &radices)
                })
                .collect();
            Automorphism::new(map)
        })
        .collect::<Result<_>>()?;
    let target = EqRel::generated_by(ProbSpace::new(weights)?, &g_maps)?;
    let target_proj = (0..total).map(|id| id / per_point).collect();
    let map = (0..ext.len())
        .map(|id| {
            let (x, omega) = ext.decode(id);
            let class = rel.class_members(x);
            let eta: Vec<usize> = (0..order)
                .map(|g| omega[class.binary_search(&action.act(action.group.inv(g), x)).unwrap()])
                .collect();
            x * per_point + undigits(&eta, &radices)
        })
        .collect();
    Ok(IsoWitness { source: ext.rel.clone(), source_proj: ext.proj.clone(), target, target_proj, map })
}

/// Checks the extension axioms of a constructed extension.
pub fn verify_extension(ext: &Extension) -> Result<bool> {
    Ok(check_extension(&ext.extension_map())?.is_extension)
}

/// Number of extension classes over each base class, keyed by class id.
pub fn classes_over(ext: &Extension) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for c in ext.rel.classes() {
        *out.entry(ext.base_rel.class_of(ext.proj[c[0]])).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_is_least_significant_first() {
        let b = BaseSpace::new(vec![ratio(1, 3), ratio(2, 3)]).unwrap();
        let p = b.power(2);
        // code 1 = (coordinate0 = 1, coordinate1 = 0)
        assert_eq!(p.weights(), &[ratio(1, 9), ratio(2, 9), ratio(2, 9), ratio(4, 9)]);
        let q = BaseSpace::new(vec![ratio(1, 4), ratio(3, 4)]).unwrap().power(3);
        assert_eq!(q.weight(0b001), &ratio(3, 64));
        assert_eq!(q.weight(0b110), &ratio(9, 64));
    }

    #[test]
    fn full_pair_with_fair_coin() {
        let rel = EqRel::full(ProbSpace::uniform(2)).unwrap();
        let ext = build_extension(&rel, &BaseSpace::uniform(2), DEFAULT_BUDGET).unwrap();
        assert_eq!(ext.len(), 8);
        assert!(ext.rel.space().weights().iter().all(|w| *w == ratio(1, 8)));
        assert_eq!(ext.rel.num_classes(), 4);
        assert!(ext.rel.classes().iter().all(|c| c.len() == 2));
        assert!(verify_extension(&ext).unwrap());
    }

    #[test]
    fn identity_relation_gives_product() {
        let space = ProbSpace::new(vec![ratio(1, 3), ratio(2, 3)]).unwrap();
        let base = BaseSpace::new(vec![ratio(1, 2), ratio(1, 4), ratio(1, 4)]).unwrap();
        let ext = build_extension(&EqRel::identity(space), &base, DEFAULT_BUDGET).unwrap();
        assert_eq!(ext.len(), 6);
        for id in 0..6 {
            let (x, omega) = ext.decode(id);
            assert_eq!(ext.encode(x, &omega), id);
            let want = ext.base_rel.weight(x) * base.weight(omega[0]);
            assert_eq!(ext.rel.weight(id), &want);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let rel = EqRel::full(ProbSpace::uniform(12)).unwrap();
        assert!(matches!(
            build_extension(&rel, &BaseSpace::uniform(3), DEFAULT_BUDGET),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn single_generator_pair_matches_edge_for_edge() {
        let g = Graphing::generated(ProbSpace::uniform(2), vec![Automorphism::new(vec![1, 0]).unwrap()]).unwrap();
        let (w, perc, bern) = perc_label_iso(&g, &ratio(1, 3), DEFAULT_BUDGET).unwrap();
        assert_eq!(perc.len(), 8);
        assert_eq!(bern.len(), 8);
        assert!(w.verify().ok());
        assert!(w.verify_pairwise());
    }

    #[test]
    fn pairing_lift_doubles_entropy() {
        let rel = EqRel::full(ProbSpace::uniform(4)).unwrap();
        let sub = EqRel::from_classes(ProbSpace::uniform(4), vec![vec![0, 1], vec![2, 3]]).unwrap();
        let maps = [Automorphism::identity(4), Automorphism::new(vec![2, 3, 0, 1]).unwrap()];
        let base = BaseSpace::uniform(2);
        let iso = lift_subrelation_iso(&rel, &sub, &base, &maps, DEFAULT_BUDGET).unwrap();
        assert!(iso.witness.verify().ok());
        assert!(iso.witness.verify_pairwise());
        assert!((iso.target_entropy - 2.0 * base.entropy()).abs() < 1e-12);
    }

    #[test]
    fn overlapping_translates_are_rejected() {
        let rel = EqRel::full(ProbSpace::uniform(4)).unwrap();
        let sub = EqRel::from_classes(ProbSpace::uniform(4), vec![vec![0, 1], vec![2, 3]]).unwrap();
        let maps = [Automorphism::identity(4), Automorphism::new(vec![1, 0, 3, 2]).unwrap()];
        assert!(matches!(
            lift_subrelation_iso(&rel, &sub, &BaseSpace::uniform(2), &maps, DEFAULT_BUDGET),
            Err(Error::InvalidDecomposition(_))
        ));
    }

    #[test]
    fn half_compression_doubles_entropy() {
        let rel = EqRel::full(ProbSpace::uniform(4)).unwrap();
        let t1 = PartialIso::new(&rel, [(0, 0), (1, 1)]).unwrap();
        let t2 = PartialIso::new(&rel, [(0, 2), (1, 3)]).unwrap();
        let iso = compression_iso(&rel, &[0, 1], &BaseSpace::uniform(2), &[t1, t2], DEFAULT_BUDGET).unwrap();
        assert!(iso.witness.verify().ok());
        assert!(iso.witness.verify_pairwise());
        assert_eq!(iso.mu_y, ratio(1, 2));
        assert!(iso.entropy_factor_matches);
        assert!((iso.target_entropy - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn trivial_compression_is_a_relabeling() {
        let rel = EqRel::full(ProbSpace::uniform(3)).unwrap();
        let id = PartialIso::new(&rel, (0..3).map(|x| (x, x))).unwrap();
        let iso = compression_iso(&rel, &[0, 1, 2], &BaseSpace::uniform(2), &[id], DEFAULT_BUDGET).unwrap();
        assert!(iso.witness.verify().ok());
        assert_eq!(iso.entropy_factor, ratio(1, 1));
        assert_eq!(padded_symbol(&[Some(0), None], 1, 2), vec!["1".to_string(), PAD.to_string()]);
    }

    #[test]
    fn three_cycle_shift_conjugacy() {
        let theta = Automorphism::new(vec![1, 2, 0]).unwrap();
        let rel = EqRel::generated_by(ProbSpace::uniform(3), std::slice::from_ref(&theta)).unwrap();
        let r = shift_conjugacy(&rel, &theta, &BaseSpace::uniform(2), &[Automorphism::identity(3)], DEFAULT_BUDGET)
            .unwrap();
        assert_eq!(r.points, 24);
        assert!(r.ok(), "{r:?}");
    }

    #[test]
    fn singleton_shift_conjugacy_is_trivial() {
        let rel = EqRel::identity(ProbSpace::uniform(1));
        let id = Automorphism::identity(1);
        let r = shift_conjugacy(&rel, &id, &BaseSpace::uniform(3), std::slice::from_ref(&id), DEFAULT_BUDGET).unwrap();
        assert_eq!(r.points, 3);
        assert!(r.ok());
    }
}
