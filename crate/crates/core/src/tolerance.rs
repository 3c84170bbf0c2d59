//! Exact insertion and deletion tolerance on small edge sets.
//!
//! Configurations of `E` edges are bit masks. With `p = a/b`, a configuration
//! with `k` open edges has mass `a^k (b−a)^(E−k) / b^E`; masses are kept as
//! integer numerators over the common denominator `b^E`.

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_EDGES: usize = 20;

/// An event: a set of configurations, stored as a bitset over masks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    edges: usize,
    bits: Vec<u64>,
}

impl Event {
    pub fn empty(edges: usize) -> Self {
        Event { edges, bits: vec![0; (1usize << edges).div_ceil(64)] }
    }

    pub fn random(edges: usize, density: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut ev = Self::empty(edges);
        for mask in 0..1usize << edges {
            if rng.random_bool(density) {
                ev.insert(mask);
            }
        }
        ev
    }

    pub fn insert(&mut self, mask: usize) {
        self.bits[mask / 64] |= 1 << (mask % 64);
    }

    pub fn contains(&self, mask: usize) -> bool {
        self.bits[mask / 64] >> (mask % 64) & 1 == 1
    }

    pub fn masks(&self) -> impl Iterator<Item = usize> + '_ {
        (0..1usize << self.edges).filter(|&m| self.contains(m))
    }

    /// Π_e A: open edge `e` in every configuration.
    pub fn insert_edge(&self, e: usize) -> Event {
        self.image(|m| m | 1 << e)
    }

    /// Π_¬e A: close edge `e` in every configuration.
    pub fn delete_edge(&self, e: usize) -> Event {
        self.image(|m| m & !(1 << e))
    }

    fn image(&self, f: impl Fn(usize) -> usize) -> Event {
        let mut out = Event::empty(self.edges);
        for m in self.masks() {
            out.insert(f(m));
        }
        out
    }
}

/// Product measure with rational retention `a/b`.
#[derive(Clone, Debug)]
pub struct ProductMeasure {
    pub edges: usize,
    pub a: u64,
    pub b: u64,
    mass_by_open: Vec<u128>,
}

impl ProductMeasure {
    pub fn new(edges: usize, a: u64, b: u64) -> Result<Self> {
        if edges > MAX_EDGES {
            return Err(Error::InvalidArgument(format!("at most {MAX_EDGES} edges")));
        }
        if b == 0 || a > b {
            return Err(Error::InvalidProbability(a as f64 / b as f64));
        }
        let too_big = || Error::InvalidArgument(format!("denominator {b}^{edges} exceeds 128 bits"));
        u128::from(b).checked_pow(edges as u32).ok_or_else(too_big)?;
        let mass_by_open = (0..=edges)
            .map(|k| u128::from(a).pow(k as u32) * u128::from(b - a).pow((edges - k) as u32))
            .collect();
        Ok(ProductMeasure { edges, a, b, mass_by_open })
    }

    /// Numerator of the event's mass over `b^E`; never exceeds `b^E`.
    pub fn mass(&self, ev: &Event) -> u128 {
        ev.masks().map(|m| self.mass_by_open[m.count_ones() as usize]).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ToleranceReport {
    pub edges: usize,
    pub events: usize,
    pub comparisons: usize,
    pub failures: Vec<(usize, usize, &'static str)>,
    /// Smallest observed μ(Π_e A)/μ(A) and μ(Π_¬e A)/μ(A) over nonnull A.
    pub min_insertion_ratio: f64,
    pub min_deletion_ratio: f64,
}

/// Compares `b·μ(Π_e A) ≥ a·μ(A)` and `b·μ(Π_¬e A) ≥ (b−a)·μ(A)` exactly for every event and edge.
pub fn check_tolerance(measure: &ProductMeasure, events: &[Event]) -> ToleranceReport {
    let (a, b) = (BigUint::from(measure.a), BigUint::from(measure.b));
    let not_a = BigUint::from(measure.b - measure.a);
    let mut failures = Vec::new();
    let mut comparisons = 0;
    let (mut min_ins, mut min_del) = (f64::INFINITY, f64::INFINITY);
    for (i, ev) in events.iter().enumerate() {
        let base = measure.mass(ev);
        let base_big = BigUint::from(base);
        for e in 0..measure.edges {
            let ins = measure.mass(&ev.insert_edge(e));
            let del = measure.mass(&ev.delete_edge(e));
            if &b * BigUint::from(ins) < &a * &base_big {
                failures.push((i, e, "insertion"));
            }
            if &b * BigUint::from(del) < &not_a * &base_big {
                failures.push((i, e, "deletion"));
            }
            comparisons += 2;
            if base > 0 {
                min_ins = min_ins.min(ins as f64 / base as f64);
                min_del = min_del.min(del as f64 / base as f64);
            }
        }
    }
    ToleranceReport {
        edges: measure.edges,
        events: events.len(),
        comparisons,
        failures,
        min_insertion_ratio: min_ins,
        min_deletion_ratio: min_del,
    }
}

/// Random events of assorted densities, reproducible from `seed`.
pub fn random_events(edges: usize, count: usize, seed: u64) -> Vec<Event> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let density = rng.random_range(0.001..0.5);
            Event::random(edges, density, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_configuration_event_is_tight() {
        // A = {all closed}: Π_e A = {only e open}, so the ratio is exactly p/(1−p)
        let m = ProductMeasure::new(3, 1, 4).unwrap();
        let mut ev = Event::empty(3);
        ev.insert(0);
        let r = check_tolerance(&m, &[ev]);
        assert!(r.failures.is_empty());
        assert!((r.min_insertion_ratio - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.min_deletion_ratio, 1.0);
    }

    #[test]
    fn total_mass_is_the_denominator() {
        let m = ProductMeasure::new(5, 2, 7).unwrap();
        let mut all = Event::empty(5);
        (0..32).for_each(|x| all.insert(x));
        assert_eq!(m.mass(&all), 7u128.pow(5));
    }

    #[test]
    fn oversized_denominator_is_rejected() {
        assert!(ProductMeasure::new(20, 1, 1u64 << 10).is_err());
    }
}
