//! The randomized exact extension suite: each instance draws a relation and
//! base, then checks the extension axioms, the subrelation-lift isomorphism
//! and the compression isomorphism exhaustively with exact weights.

use ergolab::eqrel::check_extension;
use ergolab::extension::{build_extension, compression_iso, lift_subrelation_iso};
use ergolab::instances::{
    extension_size, random_base, random_compression_instance, random_lift_instance, random_relation,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExtensionSuiteParams;
use crate::output::Table;
use crate::Result;

/// Draws per check before an oversized instance is reported as an error.
const MAX_REDRAWS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InstanceOutcome {
    pub instance: usize,
    pub points: usize,
    pub symbols: usize,
    pub extension_points: usize,
    pub extension_ok: bool,
    pub lift_points: usize,
    pub lift_index: usize,
    pub lift_ok: bool,
    pub compression_points: usize,
    pub compression_ok: bool,
    /// Target entropy equals H(K)/μ(Y) exactly.
    pub entropy_factor_ok: bool,
}

impl InstanceOutcome {
    pub fn ok(&self) -> bool {
        self.extension_ok && self.lift_ok && self.compression_ok && self.entropy_factor_ok
    }
}

fn redraw_error(what: &str, limit: u128) -> ergolab::Error {
    ergolab::Error::InvalidArgument(format!("no {what} instance within {limit} points after {MAX_REDRAWS} draws"))
}

/// One instance; stream `instance` of the seed's generator makes instances
/// independent of evaluation order.
pub fn run_instance(params: &ExtensionSuiteParams, seed: u64, instance: usize) -> Result<InstanceOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(instance as u64);
    let limit = params.size_limit;

    let (rel, base) = (0..MAX_REDRAWS)
        .map(|_| (random_relation(&mut rng, params.max_points), random_base(&mut rng, params.max_symbols)))
        .find(|(rel, base)| rel.as_ref().map_or(true, |r| extension_size(r, base.len()) <= limit))
        .ok_or_else(|| redraw_error("extension", limit))?;
    let rel = rel?;
    let ext = build_extension(&rel, &base, limit)?;
    let extension_ok = check_extension(&ext.extension_map())?.is_extension;

    let (lift, lift_base) = (0..MAX_REDRAWS)
        .map(|_| (random_lift_instance(&mut rng, params.max_points), random_base(&mut rng, params.max_symbols)))
        .find(|(inst, base)| {
            inst.as_ref().map_or(true, |i| {
                let k = base.len();
                let n = i.maps.len() as u32;
                extension_size(&i.rel, k) <= limit && extension_size(&i.sub, k.pow(n)) <= limit
            })
        })
        .ok_or_else(|| redraw_error("lift", limit))?;
    let lift = lift?;
    let lifted = lift_subrelation_iso(&lift.rel, &lift.sub, &lift_base, &lift.maps, limit)?;
    let lift_ok = lifted.witness.verify().ok();

    let (comp, comp_base) = (0..MAX_REDRAWS)
        .map(|_| {
            (random_compression_instance(&mut rng, params.max_points), random_base(&mut rng, params.max_symbols))
        })
        .find(|(inst, base)| inst.as_ref().map_or(true, |i| extension_size(&i.rel, base.len()) <= limit))
        .ok_or_else(|| redraw_error("compression", limit))?;
    let comp = comp?;
    let compressed = compression_iso(&comp.rel, &comp.subset, &comp_base, &comp.maps, u128::MAX)?;

    Ok(InstanceOutcome {
        instance,
        points: rel.len(),
        symbols: base.len(),
        extension_points: ext.len(),
        extension_ok,
        lift_points: lifted.witness.source.len(),
        lift_index: lifted.index,
        lift_ok,
        compression_points: compressed.witness.source.len(),
        compression_ok: compressed.witness.verify().ok(),
        entropy_factor_ok: compressed.entropy_factor_matches,
    })
}

/// All instances in parallel, returned in instance order.
pub fn extension_suite(params: &ExtensionSuiteParams, seed: u64) -> Result<Vec<InstanceOutcome>> {
    (0..params.instances).into_par_iter().map(|i| run_instance(params, seed, i)).collect()
}

pub fn suite_table(seed: u64, outcomes: &[InstanceOutcome], table: &mut Table) {
    for o in outcomes {
        table.row([
            seed.to_string(),
            o.instance.to_string(),
            o.points.to_string(),
            o.symbols.to_string(),
            o.extension_points.to_string(),
            o.extension_ok.to_string(),
            o.lift_points.to_string(),
            o.lift_index.to_string(),
            o.lift_ok.to_string(),
            o.compression_points.to_string(),
            o.compression_ok.to_string(),
            o.entropy_factor_ok.to_string(),
        ]);
    }
}

pub const SUITE_HEADER: [&str; 12] = [
    "seed",
    "instance",
    "points",
    "symbols",
    "extensionPoints",
    "extensionOk",
    "liftPoints",
    "liftIndex",
    "liftOk",
    "compressionPoints",
    "compressionOk",
    "entropyFactorOk",
];
