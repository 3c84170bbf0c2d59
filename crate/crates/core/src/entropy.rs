//! Shannon entropy of base spaces and a ledger of upper bounds on the
//! smallest base entropy whose Bernoulli extension carries a free action of
//! the free group, each bound stored with the chain of facts it rests on.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eqrel::{weight_to_f64, Automorphism, ProbSpace, Weight};
use crate::error::{Error, Result};
use crate::extension::BaseSpace;
use crate::graphing::Graphing;
use crate::group::{FiniteGroup, GroupAction};
use crate::schramm::letters;
use crate::spectral::{average_norm, symmetric_norm, Subspace};

/// 1 + ln(5/3), the additive constant of the spectral-gap bound.
pub fn spectral_constant() -> f64 {
    1.0 + (5.0f64 / 3.0).ln()
}

/// Entropy in nats; `+∞` for atomless bases.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyValue {
    pub nats: f64,
    /// Weights whose entropy this is, when the base is atomic.
    pub weights: Option<Vec<Weight>>,
}

impl EntropyValue {
    pub fn is_finite(&self) -> bool {
        self.nats.is_finite()
    }
}

pub fn shannon_entropy(base: &BaseSpace) -> EntropyValue {
    EntropyValue {
        nats: base.entropy(),
        weights: (!base.is_atomless()).then(|| base.weights().to_vec()),
    }
}

/// Entropy of a product base; an atomless factor makes it infinite.
pub fn entropy_of_product(values: &[EntropyValue]) -> EntropyValue {
    let nats = values.iter().map(|v| v.nats).sum();
    let weights = values.iter().try_fold(vec![Weight::from_integer(1.into())], |acc, v| {
        let w = v.weights.as_ref()?;
        Some(acc.iter().flat_map(|a| w.iter().map(move |b| a * b)).collect::<Vec<_>>())
    });
    EntropyValue { nats, weights }
}

/// −k·(p ln p + (1−p) ln(1−p)), the entropy of `({0,1}^k, λ_p^k)`.
pub fn bernoulli_power_entropy(k: usize, p: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    k as f64 * (h(p) + h(1.0 - p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Entropy of an explicitly exhibited base.
    DirectWitness,
    /// From an averaged-operator witness of norm below 1/4.
    SpectralGap,
    /// Divided by the index of a subrelation.
    FiniteIndex,
    /// Scaled by the measure of a restriction.
    Restriction,
    /// Limit of restriction bounds along a shrinking schedule.
    CompressionLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub value: f64,
    pub rule: Rule,
    /// Inputs first, then the steps applied to them.
    pub chain: Vec<String>,
}

/// Upper bounds only; the reported bound is the minimum entry.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BetaLedger {
    pub entries: Vec<LedgerEntry>,
}

impl BetaLedger {
    pub fn add(&mut self, entry: LedgerEntry) -> usize {
        self.entries.push(entry);
        self.entries.len() - 1
    }

    /// Minimum entry; ties go to the earlier entry.
    pub fn minimum(&self) -> Option<&LedgerEntry> {
        self.entries.iter().reduce(|a, b| if b.value < a.value { b } else { a })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "entries": self.entries })
    }

    /// Fixed-width table, one entry per row, values to 6 decimals.
    pub fn table(&self) -> String {
        let mut out = format!("{:>4}  {:<18}  {:>12}  chain\n", "#", "rule", "value");
        for (i, e) in self.entries.iter().enumerate() {
            let rule = serde_json::to_value(e.rule).unwrap();
            out.push_str(&format!("{:>4}  {:<18}  {:>12.6}  {}\n", i, rule.as_str().unwrap(), e.value, e.chain.join(" ; ")));
        }
        if let Some(m) = self.minimum() {
            out.push_str(&format!("bound {:.6}\n", m.value));
        }
        out
    }
}

pub fn direct_witness(base: &BaseSpace, description: &str) -> LedgerEntry {
    let h = shannon_entropy(base);
    LedgerEntry {
        value: h.nats,
        rule: Rule::DirectWitness,
        chain: vec![format!("{description}: H = {:.12}", h.nats)],
    }
}

/// Words over `θ₁, θ₁⁻¹, …` given as letter indices, with the certified norm
/// of their average on mean-zero functions.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AlphaEstimate {
    pub n: usize,
    pub witness_words: Vec<Vec<usize>>,
    pub achieved_norm: f64,
}

impl AlphaEstimate {
    pub fn alpha(&self) -> f64 {
        (self.n as f64).ln()
    }
}

const BEAM_MAX_SIZE: usize = 32;
const POWER_MAX_WORDS: usize = 4096;

fn evaluate(letters: &[Automorphism], word: &[usize]) -> Automorphism {
    word.iter().fold(Automorphism::identity(letters[0].len()), |acc, &l| letters[l].compose(&acc))
}

/// Searches for `n ≥ 3` words whose averaged operator has norm below 1/4 on
/// mean-zero functions: all length-m products of the generators or letters
/// (the power trick), and a beam search over multisets of short reduced
/// words. Returns the smallest `n` found; deterministic.
pub fn alpha_search(g: &Graphing, word_length_cap: usize, beam_width: usize) -> Result<Option<AlphaEstimate>> {
    let psi = letters(g);
    if psi.is_empty() || word_length_cap == 0 || beam_width == 0 {
        return Ok(None);
    }
    let norm = |words: &[Vec<usize>]| -> Result<f64> {
        let maps: Vec<Automorphism> = words.iter().map(|w| evaluate(&psi, w)).collect();
        average_norm(g, &maps, Subspace::MeanZero)
    };
    let mut found: Vec<AlphaEstimate> = Vec::new();

    // all length-m products over the generators (even letters) and over all letters
    for alphabet in [(0..psi.len()).step_by(2).collect::<Vec<_>>(), (0..psi.len()).collect()] {
        for m in 1..=word_length_cap {
            let count = alphabet.len().checked_pow(m as u32).unwrap_or(usize::MAX);
            if !(3..=POWER_MAX_WORDS).contains(&count) {
                continue;
            }
            let words: Vec<Vec<usize>> = (0..count)
                .map(|mut c| {
                    (0..m)
                        .map(|_| {
                            let l = alphabet[c % alphabet.len()];
                            c /= alphabet.len();
                            l
                        })
                        .collect()
                })
                .collect();
            let v = norm(&words)?;
            if v < 0.25 {
                found.push(AlphaEstimate { n: count, witness_words: words, achieved_norm: v });
            }
        }
    }

    // pool of reduced words up to the cap, one per distinct map
    let inverse_letter = |l: usize| l ^ 1;
    let mut pool: Vec<Vec<usize>> = Vec::new();
    let mut seen: HashSet<Automorphism> = HashSet::new();
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..word_length_cap {
        let mut next = Vec::new();
        for w in &frontier {
            for l in 0..psi.len() {
                if w.last().is_some_and(|&last| inverse_letter(last) == l) {
                    continue;
                }
                let mut v = w.clone();
                v.push(l);
                if seen.insert(evaluate(&psi, &v)) {
                    pool.push(v.clone());
                }
                next.push(v);
            }
        }
        frontier = next;
    }
    let limit = found.iter().map(|f| f.n).min().unwrap_or(usize::MAX).min(BEAM_MAX_SIZE + 1);
    let mut beam: Vec<(f64, Vec<usize>)> = vec![(1.0, Vec::new())];
    for size in 1..limit {
        let mut candidates: Vec<Vec<usize>> = beam
            .iter()
            .flat_map(|(_, s)| {
                let start = s.last().copied().unwrap_or(0);
                (start..pool.len()).map(move |i| {
                    let mut t = s.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
        candidates.sort();
        candidates.dedup();
        let mut scored: Vec<(f64, Vec<usize>)> = candidates
            .into_par_iter()
            .map(|s| {
                let words: Vec<Vec<usize>> = s.iter().map(|&i| pool[i].clone()).collect();
                norm(&words).map(|v| (v, s))
            })
            .collect::<Result<_>>()?;
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        scored.truncate(beam_width);
        if size >= 3 {
            if let Some((v, s)) = scored.first().filter(|(v, _)| *v < 0.25) {
                found.push(AlphaEstimate {
                    n: size,
                    witness_words: s.iter().map(|&i| pool[i].clone()).collect(),
                    achieved_norm: *v,
                });
                break;
            }
        }
        beam = scored;
    }
    Ok(found.into_iter().min_by(|a, b| a.n.cmp(&b.n).then(a.achieved_norm.total_cmp(&b.achieved_norm))))
}

/// The spectral-gap bound for a witness of size `n`, with its intermediate
/// entropy `H({0,1}^{n+1}, λ_p^{n+1})` at `p = 1/(n+2)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SpectralBound {
    pub n: usize,
    pub intermediate: f64,
    /// ln(n+2) + 1.
    pub intermediate_cap: f64,
    /// ln(n) + 1 + ln(5/3).
    pub value: f64,
}

impl SpectralBound {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("witness size {n} below 3")));
        }
        let nf = n as f64;
        Ok(SpectralBound {
            n,
            intermediate: bernoulli_power_entropy(n + 1, 1.0 / (nf + 2.0)),
            intermediate_cap: (nf + 2.0).ln() + 1.0,
            value: nf.ln() + spectral_constant(),
        })
    }

    pub fn entry(&self, witness: &str) -> LedgerEntry {
        LedgerEntry {
            value: self.value,
            rule: Rule::SpectralGap,
            chain: vec![
                witness.to_string(),
                format!(
                    "H({{0,1}}^{}, p = 1/{}) = {:.12} <= ln({}) + 1 = {:.12}",
                    self.n + 1,
                    self.n + 2,
                    self.intermediate,
                    self.n + 2,
                    self.intermediate_cap
                ),
                format!("<= ln({}) + 1 + ln(5/3) = {:.12}", self.n, self.value),
            ],
        }
    }
}

pub fn spectral_bound(alpha: &AlphaEstimate) -> Result<LedgerEntry> {
    let b = SpectralBound::new(alpha.n)?;
    Ok(b.entry(&format!("{} words with averaged norm {:.6} < 1/4", alpha.n, alpha.achieved_norm)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum IndexValue {
    Finite(usize),
    Infinite,
}

/// The bound of a subrelation divided by its index; zero for infinite index.
pub fn finite_index_bound(sub: &LedgerEntry, index: IndexValue) -> Result<LedgerEntry> {
    let (value, step) = match index {
        IndexValue::Finite(0) => return Err(Error::InvalidArgument("index must be at least 1".into())),
        IndexValue::Finite(k) => (sub.value / k as f64, format!("divided by index {k}")),
        IndexValue::Infinite => (0.0, "subrelation of infinite index".to_string()),
    };
    let mut chain = sub.chain.clone();
    chain.push(step);
    Ok(LedgerEntry { value, rule: Rule::FiniteIndex, chain })
}

/// The bound of a restriction scaled by its measure `μ(Y) ∈ (0, 1]`.
pub fn restriction_bound(restricted: &LedgerEntry, mu_y: f64) -> Result<LedgerEntry> {
    if !(mu_y > 0.0 && mu_y <= 1.0) {
        return Err(Error::InvalidProbability(mu_y));
    }
    let mut chain = restricted.chain.clone();
    chain.push(format!("scaled by mu(Y) = {mu_y}"));
    Ok(LedgerEntry { value: restricted.value * mu_y, rule: Rule::Restriction, chain })
}

/// One step of the schedule (ln n + C)/m: a witness of size `n` on a
/// restriction of measure `1/m`.
pub fn compression_step(n: usize, m: usize) -> Result<LedgerEntry> {
    if m == 0 {
        return Err(Error::InvalidArgument("schedule step must be positive".into()));
    }
    let restricted = SpectralBound::new(n)?.entry(&format!("witness of size {n} on a restriction of measure 1/{m}"));
    let mut e = restriction_bound(&restricted, 1.0 / m as f64)?;
    e.rule = Rule::CompressionLimit;
    Ok(e)
}

/// The limit of the schedule, or the bound forced by an infinite fundamental group.
pub fn vanishing_bound(reason: &str) -> LedgerEntry {
    LedgerEntry { value: 0.0, rule: Rule::CompressionLimit, chain: vec![reason.to_string(), "limit 0".to_string()] }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NormComparison {
    /// ⟨(T*T)^m 1_Δ, 1_Δ⟩ of the action, m = 0..=cap.
    pub lifted_moments: Vec<f64>,
    /// The same moments of the left regular representation of the quotient.
    pub quotient_moments: Vec<f64>,
    pub moments_ok: bool,
    pub lifted_norm: f64,
    pub quotient_norm: f64,
    pub norm_ok: bool,
}

/// Compares the averaged operator of group elements `words` acting on the
/// space with the averaged left regular operator of their images in a
/// quotient. `quotient_images[j]` is the image of the j-th generator of the
/// acting group, as a permutation.
pub fn norm_comparison_check(
    action: &GroupAction,
    space: &ProbSpace,
    quotient_images: &[Automorphism],
    words: &[usize],
    cap: usize,
) -> Result<NormComparison> {
    let gens = action.group.generators();
    if quotient_images.len() != gens.len() || words.is_empty() {
        return Err(Error::InvalidGroup("one quotient image per generator and a nonempty word list required".into()));
    }
    if space.len() != action.degree() {
        return Err(Error::InvalidArgument("space and action sizes differ".into()));
    }
    let degree = quotient_images[0].len();
    let q = FiniteGroup::generated_by(quotient_images, degree, 1 << 16)?;
    let left_mult = |a: usize| Automorphism::new((0..q.order()).map(|b| q.mul(a, b)).collect());
    let images: Vec<Automorphism> = quotient_images
        .iter()
        .map(|im| {
            let a = (0..q.order()).find(|&a| q.element(a) == im).expect("generator lies in its closure");
            left_mult(a)
        })
        .collect::<Result<_>>()?;
    // exhaustive homomorphism check on the group
    let phi = GroupAction::from_generator_images(action.group.clone(), &images)
        .map_err(|e| Error::InvalidGroup(format!("quotient map is not a homomorphism: {e}")))?;
    let inv_n = 1.0 / words.len() as f64;
    let mut p = DMatrix::<f64>::zeros(space.len(), space.len());
    let mut lam = DMatrix::<f64>::zeros(q.order(), q.order());
    for &g in words {
        for x in 0..space.len() {
            p[(action.act(g, x), x)] += inv_n;
        }
        let image = phi.act(g, 0);
        for b in 0..q.order() {
            lam[(q.mul(image, b), b)] += inv_n;
        }
    }
    let mu: Vec<f64> = space.weights().iter().map(weight_to_f64).collect();
    let moments = |m: &DMatrix<f64>, diag: &dyn Fn(&DMatrix<f64>) -> f64| -> Vec<f64> {
        let sq = m.transpose() * m;
        let mut power = DMatrix::<f64>::identity(m.nrows(), m.nrows());
        (0..=cap)
            .map(|k| {
                if k > 0 {
                    power = &power * &sq;
                }
                diag(&power)
            })
            .collect()
    };
    let lifted_moments = moments(&p, &|a| (0..mu.len()).map(|x| mu[x] * a[(x, x)]).sum());
    let quotient_moments = moments(&lam, &|a| a[(0, 0)]);
    let moments_ok = lifted_moments.iter().zip(&quotient_moments).all(|(a, b)| *a <= b + 1e-12);
    let lifted_norm = symmetric_norm(p.transpose() * &p).sqrt();
    let quotient_norm = symmetric_norm(lam.transpose() * &lam).sqrt();
    Ok(NormComparison {
        lifted_moments,
        quotient_moments,
        moments_ok,
        norm_ok: lifted_norm <= quotient_norm + 1e-9,
        lifted_norm,
        quotient_norm,
    })
}

/// μ(fixed points) of every group element.
pub fn fixed_point_measures(action: &GroupAction, space: &ProbSpace) -> Vec<Weight> {
    (0..action.group.order())
        .map(|g| space.measure(action.map(g).fixed_points().collect::<Vec<_>>().iter()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqrel::ratio;

    #[test]
    fn entropy_examples() {
        assert!((shannon_entropy(&BaseSpace::uniform(2)).nats - 2f64.ln()).abs() < 1e-15);
        assert_eq!(shannon_entropy(&BaseSpace::atomless()).nats, f64::INFINITY);
        let b = BaseSpace::bernoulli(&ratio(1, 5)).unwrap().power(4);
        assert!((shannon_entropy(&b).nats - 2.001_609_694_152_751_5).abs() < 1e-12);
        let six = entropy_of_product(&[shannon_entropy(&BaseSpace::uniform(2)), shannon_entropy(&BaseSpace::uniform(3))]);
        assert!((six.nats - 6f64.ln()).abs() < 1e-12);
        assert_eq!(six.weights.unwrap().len(), 6);
        let inf = entropy_of_product(&[shannon_entropy(&BaseSpace::uniform(2)), shannon_entropy(&BaseSpace::atomless())]);
        assert!(!inf.is_finite() && inf.weights.is_none());
    }

    #[test]
    fn spectral_bound_values() {
        let b = SpectralBound::new(3).unwrap();
        assert!((b.intermediate - 2.001_609_694_152_751_5).abs() < 1e-12);
        assert!((b.value - 2.609_437_912_434_100_4).abs() < 1e-12);
        assert!((b.intermediate_cap - b.value).abs() < 1e-12);
        assert!((SpectralBound::new(8).unwrap().value - 3.590_267_165_445_826_6).abs() < 1e-12);
        assert!(SpectralBound::new(2).is_err());
    }

    #[test]
    fn inheritance_rules() {
        let base = LedgerEntry { value: 3.0, rule: Rule::DirectWitness, chain: vec!["given".into()] };
        assert_eq!(finite_index_bound(&base, IndexValue::Finite(2)).unwrap().value, 1.5);
        assert_eq!(finite_index_bound(&base, IndexValue::Finite(1)).unwrap().value, 3.0);
        assert_eq!(finite_index_bound(&base, IndexValue::Infinite).unwrap().value, 0.0);
        assert_eq!(restriction_bound(&base, 1.0).unwrap().value, 3.0);
        assert!(restriction_bound(&base, 0.0).is_err());
        assert!(restriction_bound(&base, 1.5).is_err());
        assert!((compression_step(3, 100).unwrap().value - 0.026_094_379_124_341_004).abs() < 1e-12);
    }

    #[test]
    fn ledger_minimum_never_rises() {
        let mut ledger = BetaLedger::default();
        let mut last = f64::INFINITY;
        for n in [10, 3, 50, 4] {
            ledger.add(SpectralBound::new(n).unwrap().entry("test"));
            let m = ledger.minimum().unwrap().value;
            assert!(m <= last);
            last = m;
        }
        ledger.add(vanishing_bound("infinite fundamental group"));
        assert_eq!(ledger.minimum().unwrap().value, 0.0);
        assert!(ledger.table().contains("2.609438"));
    }

    #[test]
    fn trivial_quotient_dominates() {
        let g4 = FiniteGroup::cyclic(4);
        let gen = g4.element(g4.generators()[0]).clone();
        let action = GroupAction::from_generator_images(g4, &[gen]).unwrap();
        let r = norm_comparison_check(&action, &ProbSpace::uniform(4), &[Automorphism::identity(1)], &[1, 2], 6).unwrap();
        assert!(r.quotient_moments.iter().all(|&m| (m - 1.0).abs() < 1e-12));
        assert!(r.moments_ok && r.norm_ok);
    }

    #[test]
    fn bad_quotient_is_rejected() {
        let g4 = FiniteGroup::cyclic(4);
        let gen = g4.element(g4.generators()[0]).clone();
        let action = GroupAction::from_generator_images(g4, &[gen]).unwrap();
        // a 3-cycle cannot be the image of a generator of order 4
        let bad = Automorphism::new(vec![1, 2, 0]).unwrap();
        assert!(matches!(
            norm_comparison_check(&action, &ProbSpace::uniform(4), &[bad], &[1], 3),
            Err(Error::InvalidGroup(_))
        ));
    }
}
