//! Finite probability spaces carrying a partition into classes.
//!
//! A finite pmp equivalence relation is a weighted point set `0..n` with a
//! partition. Every class-preserving bijection must preserve the weights, so
//! weights are constant on each class; constructors enforce this. Class ids
//! are the minimum member id of the class.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

/// Exact probability mass.
pub type Weight = BigRational;

pub fn ratio(numer: i64, denom: i64) -> Weight {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn weight_to_f64(w: &Weight) -> f64 {
    w.to_f64().unwrap_or(f64::NAN)
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_weight(w: &Weight) -> String {
    if w.denom().is_one() {
        w.numer().to_string()
    } else {
        format!("{}/{}", w.numer(), w.denom())
    }
}

/// Serializes a weight in its exact string form.
pub fn serialize_weight<S: serde::Serializer>(w: &Weight, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_weight(w))
}

pub fn parse_weight(s: &str) -> Result<Weight> {
    let bad = || Error::InvalidArgument(format!("cannot parse weight {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.trim().parse().map_err(|_| bad())?)),
    }
}

/// A finite probability space on the points `0..len`.
/// Exact sum with equal terms grouped, so repeated weights cost one multiplication.
fn grouped_sum(weights: &[Weight]) -> Weight {
    let mut counts: HashMap<&Weight, usize> = HashMap::new();
    for w in weights {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts.into_iter().map(|(w, k)| w * Weight::from_integer(k.into())).sum()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbSpace {
    weights: Vec<Weight>,
}

impl ProbSpace {
    pub fn new(weights: Vec<Weight>) -> Result<Self> {
        if let Some(point) = weights.iter().position(|w| !w.is_positive()) {
            return Err(Error::NonPositiveWeight { point });
        }
        let sum = grouped_sum(&weights);
        if !sum.is_one() {
            return Err(Error::WeightsNotNormalized { sum: format_weight(&sum) });
        }
        Ok(ProbSpace { weights })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "empty probability space");
        let w = ratio(1, n as i64);
        ProbSpace { weights: vec![w; n] }
    }

    /// Floating-point fallback: each double is converted exactly, then the
    /// vector is renormalized by its exact sum, which must lie within 1e-12 of 1.
    pub fn from_f64(weights: &[f64]) -> Result<Self> {
        let mut exact = Vec::with_capacity(weights.len());
        for (point, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::NonPositiveWeight { point });
            }
            exact.push(BigRational::from_float(w).ok_or(Error::NonPositiveWeight { point })?);
        }
        let sum: Weight = exact.iter().sum();
        if (weight_to_f64(&sum) - 1.0).abs() > 1e-12 {
            return Err(Error::WeightsNotNormalized { sum: weight_to_f64(&sum).to_string() });
        }
        Ok(ProbSpace { weights: exact.into_iter().map(|w| w / &sum).collect() })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, x: usize) -> &Weight {
        &self.weights[x]
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn measure<'a>(&self, points: impl IntoIterator<Item = &'a usize>) -> Weight {
        points.into_iter().map(|&x| &self.weights[x]).sum()
    }
}

/// A bijection of the point set. Membership in a full group is checked by
/// [`EqRel::check_automorphism`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Automorphism {
    map: Vec<usize>,
}

impl Automorphism {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &v in &map {
            if v >= map.len() || seen[v] {
                return Err(Error::NotBijective { value: v });
            }
            seen[v] = true;
        }
        Ok(Automorphism { map })
    }

    pub fn identity(n: usize) -> Self {
        Automorphism { map: (0..n).collect() }
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &Automorphism) -> Automorphism {
        Automorphism { map: other.map.iter().map(|&y| self.map[y]).collect() }
    }

    pub fn inverse(&self) -> Automorphism {
        let mut inv = vec![0; self.map.len()];
        for (x, &y) in self.map.iter().enumerate() {
            inv[y] = x;
        }
        Automorphism { map: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(x, &y)| x == y)
    }

    pub fn fixed_points(&self) -> impl Iterator<Item = usize> + '_ {
        self.map.iter().enumerate().filter(|(x, y)| x == *y).map(|(x, _)| x)
    }

    /// Conjugates by a relabeling of points: returns `σ ∘ self ∘ σ⁻¹`.
    pub fn relabel(&self, sigma: &Automorphism) -> Automorphism {
        sigma.compose(self).compose(&sigma.inverse())
    }
}

/// An element of the partial full group: a class- and measure-preserving
/// injection defined on a subset of points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialIso {
    pairs: BTreeMap<usize, usize>,
}

impl PartialIso {
    pub fn new(rel: &EqRel, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut images = vec![false; rel.len()];
        for (x, y) in pairs {
            for p in [x, y] {
                if p >= rel.len() {
                    return Err(Error::PointOutOfRange { point: p, len: rel.len() });
                }
            }
            if images[y] || map.insert(x, y).is_some() {
                return Err(Error::NotBijective { value: y });
            }
            images[y] = true;
            if !rel.same_class(x, y) {
                return Err(Error::NotClassPreserving { point: x, image: y });
            }
            if rel.space.weight(x) != rel.space.weight(y) {
                return Err(Error::NotMeasurePreserving { point: x, image: y });
            }
        }
        Ok(PartialIso { pairs: map })
    }

    pub fn apply(&self, x: usize) -> Option<usize> {
        self.pairs.get(&x).copied()
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs.keys().copied()
    }

    pub fn image(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs.values().copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().map(|(&x, &y)| (x, y))
    }
}

/// A finite pmp equivalence relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqRel {
    space: ProbSpace,
    class_index: Vec<usize>,
    classes: Vec<Vec<usize>>,
}

impl EqRel {
    pub fn from_classes(space: ProbSpace, classes: Vec<Vec<usize>>) -> Result<Self> {
        let n = space.len();
        let mut class_index = vec![usize::MAX; n];
        let mut classes: Vec<Vec<usize>> = classes.into_iter().filter(|c| !c.is_empty()).collect();
        for c in classes.iter_mut() {
            c.sort_unstable();
        }
        classes.sort_unstable_by_key(|c| c[0]);
        for (i, c) in classes.iter().enumerate() {
            for &x in c {
                if x >= n {
                    return Err(Error::PointOutOfRange { point: x, len: n });
                }
                if class_index[x] != usize::MAX {
                    return Err(Error::NotAPartition { point: x, reason: "appears twice" });
                }
                class_index[x] = i;
            }
            let w = space.weight(c[0]);
            if let Some(&x) = c.iter().find(|&&x| space.weight(x) != w) {
                return Err(Error::NotMeasurePreservingClass { point: x });
            }
        }
        if let Some(point) = class_index.iter().position(|&i| i == usize::MAX) {
            return Err(Error::NotAPartition { point, reason: "is not covered" });
        }
        Ok(EqRel { space, class_index, classes })
    }

    /// Groups points by an arbitrary label.
    pub fn from_labels(space: ProbSpace, labels: &[usize]) -> Result<Self> {
        if labels.len() != space.len() {
            return Err(Error::InvalidArgument("label vector length mismatch".into()));
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (x, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(x);
        }
        Self::from_classes(space, groups.into_values().collect())
    }

    pub fn identity(space: ProbSpace) -> Self {
        let classes = (0..space.len()).map(|x| vec![x]).collect();
        Self::from_classes(space, classes).expect("singletons always partition")
    }

    pub fn full(space: ProbSpace) -> Result<Self> {
        let all = (0..space.len()).collect();
        Self::from_classes(space, vec![all])
    }

    /// The smallest equivalence relation containing the graphs of `maps`.
    pub fn generated_by(space: ProbSpace, maps: &[Automorphism]) -> Result<Self> {
        let mut uf = UnionFind::new(space.len());
        for m in maps {
            if m.len() != space.len() {
                return Err(Error::InvalidArgument("automorphism length mismatch".into()));
            }
            for x in 0..space.len() {
                uf.union(x, m.apply(x));
            }
        }
        let labels = uf.min_labels();
        Self::from_labels(space, &labels)
    }

    pub fn space(&self) -> &ProbSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn weight(&self, x: usize) -> &Weight {
        self.space.weight(x)
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Class id (minimum member) of `x`.
    pub fn class_of(&self, x: usize) -> usize {
        self.classes[self.class_index[x]][0]
    }

    /// Position of the class of `x` in [`EqRel::classes`].
    pub fn class_index(&self, x: usize) -> usize {
        self.class_index[x]
    }

    pub fn class_members(&self, x: usize) -> &[usize] {
        &self.classes[self.class_index[x]]
    }

    pub fn same_class(&self, x: usize, y: usize) -> bool {
        self.class_index[x] == self.class_index[y]
    }

    /// Transitivity is the finite stand-in for ergodicity.
    pub fn is_ergodic_proxy(&self) -> bool {
        self.classes.len() == 1
    }

    /// Verifies that `theta` lies in the full group.
    pub fn check_automorphism(&self, theta: &Automorphism) -> Result<()> {
        if theta.len() != self.len() {
            return Err(Error::InvalidArgument("automorphism length mismatch".into()));
        }
        for x in 0..self.len() {
            let y = theta.apply(x);
            if !self.same_class(x, y) {
                return Err(Error::NotClassPreserving { point: x, image: y });
            }
            if self.weight(x) != self.weight(y) {
                return Err(Error::NotMeasurePreserving { point: x, image: y });
            }
        }
        Ok(())
    }

    /// Checks that every class of `self` lies inside a class of `coarser`.
    pub fn refines(&self, coarser: &EqRel) -> Result<()> {
        if self.len() != coarser.len() || self.space != coarser.space {
            return Err(Error::InvalidArgument("relations live on different spaces".into()));
        }
        for c in &self.classes {
            if let Some(&x) = c.iter().find(|&&x| !coarser.same_class(c[0], x)) {
                return Err(Error::NotRefinement { point: x });
            }
        }
        Ok(())
    }

    /// Relabels points by `sigma`: point `x` becomes `sigma(x)`.
    pub fn relabel(&self, sigma: &Automorphism) -> Result<EqRel> {
        let mut weights = vec![Weight::zero(); self.len()];
        for x in 0..self.len() {
            weights[sigma.apply(x)] = self.weight(x).clone();
        }
        let classes = self
            .classes
            .iter()
            .map(|c| c.iter().map(|&x| sigma.apply(x)).collect())
            .collect();
        EqRel::from_classes(ProbSpace::new(weights)?, classes)
    }

    /// Multiset of (class size, point weight), which determines a finite
    /// relation up to isomorphism.
    pub fn isomorphism_invariant(&self) -> Vec<(usize, Weight)> {
        let mut v: Vec<_> = self.classes.iter().map(|c| (c.len(), self.weight(c[0]).clone())).collect();
        v.sort();
        v
    }

    pub fn to_json(&self, automorphisms: &[Automorphism]) -> String {
        let doc = EqRelJson {
            weights: self.space.weights.iter().map(format_weight).collect(),
            classes: self.classes.clone(),
            automorphisms: automorphisms.iter().map(|a| a.map.clone()).collect(),
        };
        serde_json::to_string(&doc).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<(EqRel, Vec<Automorphism>)> {
        let doc: EqRelJson =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let weights = doc.weights.iter().map(|s| parse_weight(s)).collect::<Result<Vec<_>>>()?;
        let rel = EqRel::from_classes(ProbSpace::new(weights)?, doc.classes)?;
        let autos = doc
            .automorphisms
            .into_iter()
            .map(|m| {
                let a = Automorphism::new(m)?;
                rel.check_automorphism(&a)?;
                Ok(a)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((rel, autos))
    }
}

/// JSON form of a relation: exact weights as `"p/q"` strings.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EqRelJson {
    weights: Vec<String>,
    classes: Vec<Vec<usize>>,
    #[serde(default)]
    automorphisms: Vec<Vec<usize>>,
}

/// Result of restricting a relation to a subset.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub rel: EqRel,
    /// Measure of the subset in the original space.
    pub scale: Weight,
    /// New point id → original point id (sorted).
    pub points: Vec<usize>,
}

/// Restriction to `subset` with the normalized measure.
pub fn restrict(rel: &EqRel, subset: &[usize]) -> Result<Restriction> {
    let mut points: Vec<usize> = subset.to_vec();
    points.sort_unstable();
    points.dedup();
    if let Some(&p) = points.iter().find(|&&p| p >= rel.len()) {
        return Err(Error::PointOutOfRange { point: p, len: rel.len() });
    }
    let scale = rel.space.measure(&points);
    if scale.is_zero() {
        return Err(Error::NullRestriction);
    }
    let mut new_id = vec![usize::MAX; rel.len()];
    for (i, &p) in points.iter().enumerate() {
        new_id[p] = i;
    }
    let weights = points.iter().map(|&p| rel.weight(p) / &scale).collect();
    let classes = rel
        .classes
        .iter()
        .map(|c| c.iter().filter(|&&x| new_id[x] != usize::MAX).map(|&x| new_id[x]).collect())
        .collect();
    let rel = EqRel::from_classes(ProbSpace::new(weights)?, classes)?;
    Ok(Restriction { rel, scale, points })
}

/// Index of a subrelation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Index {
    Constant(usize),
    /// Two classes (by id) whose numbers of subclasses differ.
    NonConstant { witness: (usize, usize), counts: (usize, usize) },
}

pub fn index(rel: &EqRel, sub: &EqRel) -> Result<Index> {
    sub.refines(rel)?;
    let mut counts = vec![0usize; rel.num_classes()];
    for c in sub.classes() {
        counts[rel.class_index(c[0])] += 1;
    }
    let first = counts[0];
    match counts.iter().position(|&k| k != first) {
        None => Ok(Index::Constant(first)),
        Some(i) => Ok(Index::NonConstant {
            witness: (rel.classes[0][0], rel.classes[i][0]),
            counts: (first, counts[i]),
        }),
    }
}

/// A candidate factor map between two relations.
#[derive(Clone, Debug)]
pub struct ExtensionMap {
    pub source: EqRel,
    pub target: EqRel,
    pub proj: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Condition {
    /// (1) push-forward of the source measure is the target measure.
    MeasurePreserving,
    /// (2) injective on every source class.
    ClassInjective,
    /// (3) image of a class is exactly the target class.
    ClassSurjective,
    /// (3') image of a class contains the target class.
    ClassContaining,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    /// Target point for (1), source point otherwise.
    pub witness: usize,
}

#[derive(Clone, Debug)]
pub struct ExtensionReport {
    pub is_extension: bool,
    pub is_expansion: bool,
    pub violations: Vec<Violation>,
    /// Source measure of the classes on which the projection is not injective.
    pub injectivity_failure_measure: Weight,
}

impl ExtensionReport {
    pub fn holds(&self, condition: Condition) -> bool {
        self.violations.iter().all(|v| v.condition != condition)
    }
}

/// Exhaustively checks the class-bijective extension / expansion conditions.
pub fn check_extension(ext: &ExtensionMap) -> Result<ExtensionReport> {
    let (src, tgt) = (&ext.source, &ext.target);
    if ext.proj.len() != src.len() {
        return Err(Error::InvalidArgument("projection must be defined on every source point".into()));
    }
    if let Some(&y) = ext.proj.iter().find(|&&y| y >= tgt.len()) {
        return Err(Error::PointOutOfRange { point: y, len: tgt.len() });
    }
    let mut violations = Vec::new();

    let mut pushed = vec![Weight::zero(); tgt.len()];
    for (x, &y) in ext.proj.iter().enumerate() {
        pushed[y] += src.weight(x);
    }
    if let Some(y) = (0..tgt.len()).find(|&y| &pushed[y] != tgt.weight(y)) {
        violations.push(Violation { condition: Condition::MeasurePreserving, witness: y });
    }

    let mut failure = Weight::zero();
    let mut injective_witness = None;
    let mut surjective_witness = None;
    let mut containing_witness = None;
    let mut hit = vec![false; tgt.len()];
    for class in src.classes() {
        let mut collided = false;
        for &x in class {
            let y = ext.proj[x];
            if hit[y] {
                collided = true;
                injective_witness.get_or_insert(x);
            }
            hit[y] = true;
        }
        if collided {
            failure += src.weight(class[0]) * Weight::from_integer(class.len().into());
        }
        let target_class = tgt.class_members(ext.proj[class[0]]);
        if class.iter().any(|&x| !tgt.same_class(ext.proj[x], ext.proj[class[0]])) {
            surjective_witness.get_or_insert(class[0]);
        }
        if target_class.iter().any(|&y| !hit[y]) {
            surjective_witness.get_or_insert(class[0]);
            containing_witness.get_or_insert(class[0]);
        }
        for &x in class {
            hit[ext.proj[x]] = false;
        }
    }
    if let Some(w) = injective_witness {
        violations.push(Violation { condition: Condition::ClassInjective, witness: w });
    }
    if let Some(w) = surjective_witness {
        violations.push(Violation { condition: Condition::ClassSurjective, witness: w });
    }
    if let Some(w) = containing_witness {
        violations.push(Violation { condition: Condition::ClassContaining, witness: w });
    }
    let ok = |c| violations.iter().all(|v: &Violation| v.condition != c);
    let base = ok(Condition::MeasurePreserving) && ok(Condition::ClassInjective);
    Ok(ExtensionReport {
        is_extension: base && ok(Condition::ClassSurjective),
        is_expansion: base && ok(Condition::ClassContaining),
        violations,
        injectivity_failure_measure: failure,
    })
}

/// Transversal of a finite subrelation and the induced quotient relation.
#[derive(Clone, Debug)]
pub struct Quotient {
    /// One point (the minimum) from every class of the finite subrelation.
    pub transversal: Vec<usize>,
    /// The restriction of the relation to the transversal.
    pub restriction: Restriction,
    /// Common class size of the subrelation, when constant.
    pub uniform_class_size: Option<usize>,
    /// Whether μ(Y) = 1/m holds when every class has size m.
    pub measure_identity_holds: Option<bool>,
}

pub fn quotient_by_finite(rel: &EqRel, finite_sub: &EqRel) -> Result<Quotient> {
    finite_sub.refines(rel)?;
    let transversal: Vec<usize> = finite_sub.classes().iter().map(|c| c[0]).collect();
    let restriction = restrict(rel, &transversal)?;
    let size = finite_sub.classes()[0].len();
    let uniform = finite_sub.classes().iter().all(|c| c.len() == size).then_some(size);
    let measure_identity_holds = uniform.map(|m| restriction.scale == ratio(1, m as i64));
    Ok(Quotient { transversal, restriction, uniform_class_size: uniform, measure_identity_holds })
}

impl fmt::Display for EqRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EqRel({} points, {} classes)", self.len(), self.num_classes())
    }
}
