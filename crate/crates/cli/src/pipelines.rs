//! One pipeline per config kind. Pipelines return their files as bytes in
//! canonical order; only `write_run` touches the disk.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use ergolab::cluster::{cluster_betti, default_scales, ends_estimate};
use ergolab::coinduction::{build_choice_system, coinduce, swap_test, verify_choice_system, verify_cind_props, ChoiceOrder};
use ergolab::entropy::{
    alpha_search, compression_step, direct_witness, finite_index_bound, restriction_bound, spectral_bound,
    vanishing_bound, BetaLedger, IndexValue, SpectralBound,
};
use ergolab::eqrel::parse_weight;
use ergolab::extension::BaseSpace;
use ergolab::graphing::Graphing;
use ergolab::group::{FiniteGroup, GroupAction};
use ergolab::isoperimetric::isoperimetric;
use ergolab::percolation::{interval_for_p, percolate, sweep, ClusterPartition, EdgeLabels};
use ergolab::spectral::window_norm;
use ergolab::window::{GeneratorSpec, Window};
use ergolab::{Automorphism, EqRel, ProbSpace, Weight};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{
    parse_parameters, require, ActionSpec, CoinduceParams, EntropyParams, ExperimentConfig, ExtensionSuiteParams,
    IndexSpec, IntervalProbeParams, Kind, OrderSpec, RelationSpec, SpectralParams, SweepParams,
};
use crate::manifest::{code_version, OutputDigest, RunManifest, SeedTask, MANIFEST_FILE};
use crate::output::{fmt_f64, json_bytes, sha256_hex, svg_from_csv, Table};
use crate::suites::{extension_suite, suite_table, SUITE_HEADER};
use crate::{CliError, Result};

/// Everything a pipeline produces, before anything is written.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub seed_ledger: Vec<SeedTask>,
    /// Human-readable report for the terminal; not part of the outputs.
    pub stdout: String,
}

impl RunOutput {
    fn file(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn seeds(&mut self, task: &str, seeds: &[u64]) {
        self.seed_ledger.extend(seeds.iter().map(|&seed| SeedTask { task: task.to_string(), seed }));
    }
}

pub fn execute(cfg: &ExperimentConfig, seed_offset: u64) -> Result<RunOutput> {
    let seeds = cfg.seeds.expand(seed_offset);
    require(!seeds.is_empty(), "seeds", "at least one seed required")?;
    match cfg.kind {
        Kind::Sweep => run_sweep(&parse_parameters(&cfg.parameters)?, &seeds),
        Kind::IntervalProbe => run_interval_probe(&parse_parameters(&cfg.parameters)?, &seeds),
        Kind::Spectral => run_spectral(&parse_parameters(&cfg.parameters)?, &seeds),
        Kind::EntropyLedger => run_entropy(&parse_parameters(&cfg.parameters)?),
        Kind::Coinduce => run_coinduce(&parse_parameters(&cfg.parameters)?),
        Kind::ExtensionSuite => run_extension_suite(&parse_parameters(&cfg.parameters)?, &seeds),
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Executes the config and writes its outputs followed by the manifest.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path, seed_offset: u64) -> Result<(RunManifest, String)> {
    let started_at = now();
    let output = execute(cfg, seed_offset)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(format!("creating {}", out_dir.display()), e))?;
    let mut outputs = Vec::with_capacity(output.files.len());
    for (name, bytes) in &output.files {
        let path = out_dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        outputs.push(OutputDigest { file: name.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
    }
    let canonical = serde_json::to_vec(cfg).expect("serializable config");
    let manifest = RunManifest {
        config_hash: sha256_hex(&canonical),
        code_version: code_version(),
        kind: cfg.kind.name().to_string(),
        started_at,
        finished_at: now(),
        seed_offset,
        threads: rayon::current_num_threads(),
        seed_ledger: output.seed_ledger,
        outputs,
    };
    let path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&path, json_bytes(&manifest)).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok((manifest, output.stdout))
}

fn run_sweep(params: &SweepParams, seeds: &[u64]) -> Result<RunOutput> {
    let w = Window::build(&params.window, params.radius)?;
    let grid = params.p_grid.points();
    require(!grid.is_empty(), "parameters.pGrid", "empty grid")?;
    let report = sweep(&w, &grid, seeds, &params.thresholds)?;
    let mut out = RunOutput::default();
    out.seeds("percolation", seeds);

    let mut rows = Table::new(&["p", "seed", "largestFrac", "bigClusters", "spanning"]);
    for s in &report.stats {
        rows.row([fmt_f64(s.p), s.seed.to_string(), fmt_f64(s.largest_frac), s.big_clusters.to_string(), s.spanning.to_string()]);
    }
    out.file("sweep.csv", rows.into_bytes());

    let mut summary = Table::new(&["p", "meanLargestFrac", "meanBigClusters", "spanningFraction"]);
    for (i, &p) in report.p_grid.iter().enumerate() {
        summary.row([
            fmt_f64(p),
            fmt_f64(report.mean_largest_frac[i]),
            fmt_f64(report.mean_big_clusters[i]),
            fmt_f64(report.spanning_fraction[i]),
        ]);
    }
    let summary = summary.into_bytes();
    out.file(
        "summary.json",
        json_bytes(&json!({
            "vertices": w.n_vertices(),
            "edges": w.n_edges(),
            "bigSize": report.big_size,
            "fractionThreshold": report.fraction_threshold,
            "pcHat": report.pc_hat,
            "monotone": report.is_monotone(),
        })),
    );
    if params.svg {
        let svg = svg_from_csv(&summary, "percolation statistics against p")?;
        out.file("summary.csv", summary);
        out.file("sweep.svg", svg);
    } else {
        out.file("summary.csv", summary);
    }
    out.stdout = match report.pc_hat {
        Some(pc) => format!("p_c estimate {pc:.4} on {} vertices\n", w.n_vertices()),
        None => format!("no grid point crossed the fraction threshold on {} vertices\n", w.n_vertices()),
    };
    Ok(out)
}

fn partitions(w: &Window, p: f64, seeds: &[u64]) -> Vec<(EdgeLabels, ClusterPartition)> {
    seeds
        .par_iter()
        .map(|&seed| {
            let labels = EdgeLabels::for_window(seed, w);
            let part = percolate(w, &labels, p);
            (labels, part)
        })
        .collect()
}

fn run_interval_probe(params: &IntervalProbeParams, seeds: &[u64]) -> Result<RunOutput> {
    require(params.rank >= 1, "parameters.rank", "rank must be positive")?;
    require(params.p > 0.0 && params.p < 1.0, "parameters.p", "must lie in (0, 1)")?;
    require(params.p_low > 0.0 && params.p_low < 1.0, "parameters.pLow", "must lie in (0, 1)")?;
    let norm = params.norm.unwrap_or_else(|| 2.0 * ((2 * params.rank - 1) as f64).sqrt());
    let interval = interval_for_p(params.rank, norm)?;
    let w = Window::build(&GeneratorSpec::Free { rank: params.rank }, params.radius)?;
    let mut out = RunOutput::default();
    out.seeds("percolation", seeds);

    let mut probe = Table::new(&["seed", "p", "bigClusters", "largest"]);
    let mut clusters = Table::new(&["seed", "p", "clusterId", "size", "boundaryTouches", "endsVerdict", "betti"]);
    let mut summaries = Vec::new();
    for p in [params.p, params.p_low] {
        let parts = partitions(&w, p, seeds);
        let counts: Vec<usize> = parts.iter().map(|(_, part)| part.count_at_least(params.big_size)).collect();
        for (&seed, ((labels, part), &count)) in seeds.iter().zip(parts.iter().zip(&counts)) {
            probe.row([seed.to_string(), fmt_f64(p), count.to_string(), part.largest().size.to_string()]);
            let chosen: Vec<_> = if count > 0 {
                part.clusters.iter().filter(|c| c.size >= params.big_size).collect()
            } else {
                vec![part.largest()]
            };
            let rows: Vec<[String; 7]> = chosen
                .par_iter()
                .map(|c| {
                    let verdict = if params.ends {
                        ends_estimate(&w, labels, part, c.id, &default_scales(&w)).verdict.to_string()
                    } else {
                        "skipped".to_string()
                    };
                    [
                        seed.to_string(),
                        fmt_f64(p),
                        c.id.to_string(),
                        c.size.to_string(),
                        c.boundary_touches.to_string(),
                        verdict,
                        cluster_betti(part, c.id).to_string(),
                    ]
                })
                .collect();
            for r in rows {
                clusters.row(r);
            }
        }
        let k = counts.len() as f64;
        summaries.push(json!({
            "p": p,
            "inInterval": interval.contains(p),
            "meanBigClusters": counts.iter().sum::<usize>() as f64 / k,
            "fractionOfSeedsWithMany": counts.iter().filter(|&&c| c >= params.many).count() as f64 / k,
        }));
    }
    out.file("probe.csv", probe.into_bytes());
    out.file("clusters.csv", clusters.into_bytes());
    out.file(
        "interval.json",
        json_bytes(&json!({
            "rank": params.rank,
            "norm": norm,
            "interval": interval,
            "vertices": w.n_vertices(),
            "bigSize": params.big_size,
            "many": params.many,
            "probes": summaries,
        })),
    );
    out.stdout = format!("interval {}\n", serde_json::to_string(&interval).expect("serializable"));
    Ok(out)
}

fn run_spectral(params: &SpectralParams, seeds: &[u64]) -> Result<RunOutput> {
    require(!params.radii.is_empty(), "parameters.radii", "at least one radius required")?;
    let mut out = RunOutput::default();
    let rows = params
        .radii
        .iter()
        .map(|&r| {
            let w = Window::build(&params.window, r)?;
            let est = window_norm(&w)?;
            let iso = if params.iso_samples > 0 { Some(isoperimetric(&w, params.iso_samples, seeds[0])?) } else { None };
            let method = serde_json::to_value(est.method).expect("serializable");
            Ok([
                r.to_string(),
                w.n_vertices().to_string(),
                w.n_edges().to_string(),
                fmt_f64(est.value),
                method.as_str().unwrap_or_default().to_string(),
                est.iterations.to_string(),
                fmt_f64(est.residual),
                iso.as_ref().map_or(String::new(), |i| fmt_f64(i.upper)),
                iso.as_ref().map_or(String::new(), |i| i.exact.to_string()),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    if params.iso_samples > 0 {
        out.seeds("isoperimetric", &seeds[..1]);
    }
    let mut table =
        Table::new(&["radius", "vertices", "edges", "norm", "method", "iterations", "residual", "isoUpper", "isoExact"]);
    for r in rows {
        table.row(r);
    }
    out.file("spectrum.csv", table.into_bytes());
    Ok(out)
}

fn parse_weights(weights: &[String], path: &str) -> Result<Vec<Weight>> {
    weights
        .iter()
        .enumerate()
        .map(|(i, w)| parse_weight(w).map_err(|e| schema(&format!("{path}[{i}]"), e)))
        .collect()
}

fn schema(path: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Schema { path: path.to_string(), message: e.to_string() }
}

fn space_of(weights: &Option<Vec<String>>, points: usize, path: &str) -> Result<ProbSpace> {
    match weights {
        None => Ok(ProbSpace::uniform(points)),
        Some(w) => {
            require(w.len() == points, &format!("{path}.weights"), "one weight per point required")?;
            ProbSpace::new(parse_weights(w, &format!("{path}.weights"))?).map_err(|e| schema(&format!("{path}.weights"), e))
        }
    }
}

fn permutations(gens: &[Vec<usize>], points: usize, path: &str) -> Result<Vec<Automorphism>> {
    gens.iter()
        .enumerate()
        .map(|(i, g)| {
            let at = format!("{path}.generators[{i}]");
            require(g.len() == points, &at, "one image per point required")?;
            Automorphism::new(g.clone()).map_err(|e| schema(&at, e))
        })
        .collect()
}

fn graphing_of(spec: &RelationSpec, path: &str) -> Result<Graphing> {
    let space = space_of(&spec.weights, spec.points, path)?;
    let gens = permutations(&spec.generators, spec.points, path)?;
    Graphing::generated(space, gens).map_err(|e| schema(path, e))
}

fn run_entropy(params: &EntropyParams) -> Result<RunOutput> {
    let mut ledger = BetaLedger::default();
    let mut notes = Vec::new();
    for (i, b) in params.bases.iter().enumerate() {
        let path = format!("parameters.bases[{i}].weights");
        let base = BaseSpace::new(parse_weights(&b.weights, &path)?).map_err(|e| schema(&path, e))?;
        ledger.add(direct_witness(&base, &b.name));
    }
    if let Some(n) = params.alpha_witness {
        let bound = SpectralBound::new(n).map_err(|e| schema("parameters.alphaWitness", e))?;
        ledger.add(bound.entry(&format!("declared witness of {n} words with averaged norm < 1/4")));
    }
    if let Some(search) = &params.search {
        let g = graphing_of(&search.graphing, "parameters.search.graphing")?;
        match alpha_search(&g, search.word_length_cap, search.beam_width)? {
            Some(est) => {
                notes.push(json!({ "search": est }));
                ledger.add(spectral_bound(&est)?);
            }
            None => notes.push(json!({ "search": "no witness within the word-length cap" })),
        }
    }
    for (i, &(n, m)) in params.schedule.iter().enumerate() {
        ledger.add(compression_step(n, m).map_err(|e| schema(&format!("parameters.schedule[{i}]"), e))?);
    }
    let entry = |ledger: &BetaLedger, of: usize, path: String| {
        ledger.entries.get(of).cloned().ok_or_else(|| schema(&path, format!("no ledger entry {of}")))
    };
    for (i, step) in params.finite_index.iter().enumerate() {
        let sub = entry(&ledger, step.of, format!("parameters.finiteIndex[{i}].of"))?;
        let index = match step.index {
            IndexSpec::Finite(k) => IndexValue::Finite(k),
            IndexSpec::Named(_) => IndexValue::Infinite,
        };
        ledger.add(finite_index_bound(&sub, index).map_err(|e| schema(&format!("parameters.finiteIndex[{i}].index"), e))?);
    }
    for (i, step) in params.restrictions.iter().enumerate() {
        let restricted = entry(&ledger, step.of, format!("parameters.restrictions[{i}].of"))?;
        ledger.add(
            restriction_bound(&restricted, step.mu_y).map_err(|e| schema(&format!("parameters.restrictions[{i}].muY"), e))?,
        );
    }
    if params.infinite_fundamental_group {
        ledger.add(vanishing_bound("infinite fundamental group"));
    }
    let mut out = RunOutput::default();
    let mut table = Table::new(&["entry", "rule", "value", "chain"]);
    for (i, e) in ledger.entries.iter().enumerate() {
        let rule = serde_json::to_value(e.rule).expect("serializable");
        table.row([i.to_string(), rule.as_str().unwrap_or_default().to_string(), fmt_f64(e.value), e.chain.join(" ; ")]);
    }
    out.file("ledger.csv", table.into_bytes());
    let mut doc = ledger.to_json();
    doc["bound"] = json!(ledger.minimum().map(|m| m.value));
    doc["notes"] = json!(notes);
    out.file("ledger.json", json_bytes(&doc));
    out.stdout = ledger.table();
    Ok(out)
}

fn action_of(group: &FiniteGroup, spec: &ActionSpec, path: &str) -> Result<GroupAction> {
    let images = permutations(&spec.generators, spec.points, path)?;
    GroupAction::from_generator_images(group.clone(), &images).map_err(|e| schema(path, e))
}

/// Groups larger than this are rejected as configs rather than enumerated.
const MAX_GROUP_ORDER: usize = 1 << 12;

fn run_coinduce(params: &CoinduceParams) -> Result<RunOutput> {
    let beta_gens = permutations(&params.beta.generators, params.beta.points, "parameters.beta")?;
    require(
        params.alpha.generators.len() == beta_gens.len(),
        "parameters.alpha.generators",
        "one image per generator of beta required",
    )?;
    let group = FiniteGroup::generated_by(&beta_gens, params.beta.points, MAX_GROUP_ORDER)
        .map_err(|e| schema("parameters.beta.generators", e))?;
    let beta = action_of(&group, &params.beta, "parameters.beta")?;
    let alpha = action_of(&group, &params.alpha, "parameters.alpha")?;
    let x_space = space_of(&params.beta.weights, params.beta.points, "parameters.beta")?;
    let y_space = space_of(&params.alpha.weights, params.alpha.points, "parameters.alpha")?;
    let rel = EqRel::from_classes(x_space, params.classes.clone()).map_err(|e| schema("parameters.classes", e))?;
    let order = match params.order {
        OrderSpec::Cyclic => ChoiceOrder::Cyclic,
        OrderSpec::Reversed => ChoiceOrder::Reversed,
    };
    let cs = build_choice_system(&rel, &beta, order)?;
    let choice = verify_choice_system(&cs);
    let cr = coinduce(&cs, &alpha, &y_space, params.budget)?;
    let cind = verify_cind_props(&cs, &cr, &alpha, &y_space)?;
    let swap = if params.swap_test { Some(swap_test(&rel, &beta, &alpha, &y_space, params.budget)?) } else { None };
    let mut out = RunOutput::default();
    out.file("choice_system.json", json_bytes(&cs.to_json()));
    out.file("relation.json", json_bytes(&cr.to_json()));
    out.file(
        "report.json",
        json_bytes(&json!({
            "points": cr.rel.len(),
            "classes": cr.rel.num_classes(),
            "choiceSystem": choice,
            "choiceSystemOk": choice.ok(),
            "coinduced": cind,
            "swap": swap,
        })),
    );
    out.stdout = format!(
        "{} points in {} classes; choice system {}; extension over R {}\n",
        cr.rel.len(),
        cr.rel.num_classes(),
        if choice.ok() { "verified" } else { "FAILED" },
        if cind.extension { "verified" } else { "FAILED" },
    );
    Ok(out)
}

fn run_extension_suite(params: &ExtensionSuiteParams, seeds: &[u64]) -> Result<RunOutput> {
    require(params.max_points >= 1, "parameters.maxPoints", "must be positive")?;
    require(params.max_symbols >= 1, "parameters.maxSymbols", "must be positive")?;
    let mut out = RunOutput::default();
    out.seeds("instances", seeds);
    let mut table = Table::new(&SUITE_HEADER);
    let mut passed = 0;
    let mut total = 0;
    for &seed in seeds {
        let outcomes = extension_suite(params, seed)?;
        passed += outcomes.iter().filter(|o| o.ok()).count();
        total += outcomes.len();
        suite_table(seed, &outcomes, &mut table);
    }
    out.file("extension.csv", table.into_bytes());
    out.stdout = format!("{passed}/{total} instances verified\n");
    Ok(out)
}
