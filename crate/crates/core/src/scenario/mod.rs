//! Perturbation scenario grids with checkpointed execution.
//!
//! A grid crosses single-variable perturbations (a set of multipliers per
//! axis, plus the unperturbed base) with a ladder of iteration counts, and
//! values every requested structure under each scenario. Scenario ids are
//! dense and stable; each scenario's seed derives from (master seed,
//! scenario id), so results do not depend on worker count, scheduling or
//! interruption.

mod checkpoint;

pub use checkpoint::{load_checkpoint, CheckpointRecord, CheckpointWriter};

use crate::config::ValuationSetup;
use crate::error::{Error, Result};
use crate::payoff::{value_structure, StructureKind};
use crate::process::{CorrelatedSystem, TimeGrid, VariableKind};
use crate::rng::stream_seed;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

/// Variables a grid can perturb.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbAxis {
    AvailabilityDrift,
    AvailabilityStart,
    AvailabilityVol,
    InterestRate,
    PayoffDown,
    PayoffUp,
    Expiration,
}

impl PerturbAxis {
    pub const ALL: [PerturbAxis; 7] = [
        PerturbAxis::AvailabilityDrift,
        PerturbAxis::AvailabilityStart,
        PerturbAxis::AvailabilityVol,
        PerturbAxis::InterestRate,
        PerturbAxis::PayoffDown,
        PerturbAxis::PayoffUp,
        PerturbAxis::Expiration,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            PerturbAxis::AvailabilityDrift => "availability_drift",
            PerturbAxis::AvailabilityStart => "availability_start",
            PerturbAxis::AvailabilityVol => "availability_vol",
            PerturbAxis::InterestRate => "interest_rate",
            PerturbAxis::PayoffDown => "payoff_down",
            PerturbAxis::PayoffUp => "payoff_up",
            PerturbAxis::Expiration => "expiration",
        }
    }
}

impl std::fmt::Display for PerturbAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for PerturbAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PerturbAxis::ALL
            .iter()
            .copied()
            .find(|a| a.tag() == s)
            .ok_or_else(|| Error::invalid(format!("unknown perturbation axis `{s}`")))
    }
}

/// One cell of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioDef {
    pub id: u32,
    /// None marks the unperturbed base.
    pub axis: Option<PerturbAxis>,
    pub multiplier: f64,
    pub iterations: usize,
}

/// The enumerated grid.
#[derive(Debug, Clone)]
pub struct ScenarioGrid {
    base: ValuationSetup,
    scenarios: Vec<ScenarioDef>,
    axes: Vec<PerturbAxis>,
    multipliers: Vec<f64>,
    iteration_levels: Vec<usize>,
}

/// Default multipliers 1 +/- 0.1k for k = 1..=steps, ascending.
pub fn default_multipliers(steps: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (1..=steps).rev().map(|k| 1.0 - 0.1 * k as f64).collect();
    out.extend((1..=steps).map(|k| 1.0 + 0.1 * k as f64));
    out
}

/// Default iteration ladder 5000, 10000, .., 50000.
pub fn default_iteration_levels() -> Vec<usize> {
    (1..=10).map(|k| k * 5_000).collect()
}

/// Enumerate the grid: for every iteration level, the base scenario plus
/// every (axis, multiplier) pair, in declaration order.
pub fn build_grid(
    base: ValuationSetup,
    axes: &[PerturbAxis],
    steps: usize,
    iteration_levels: &[usize],
) -> Result<ScenarioGrid> {
    base.contract.validate()?;
    base.discount.validate()?;
    if iteration_levels.is_empty() {
        return Err(Error::invalid("grid needs at least one iteration level"));
    }
    if iteration_levels.contains(&0) {
        return Err(Error::invalid("iteration levels must be positive"));
    }
    if steps == 0 && !axes.is_empty() {
        return Err(Error::invalid("perturbation steps must be positive"));
    }
    let multipliers = default_multipliers(steps);
    let mut scenarios = Vec::new();
    let mut id = 0u32;
    for &iterations in iteration_levels {
        scenarios.push(ScenarioDef {
            id,
            axis: None,
            multiplier: 1.0,
            iterations,
        });
        id += 1;
        for &axis in axes {
            for &multiplier in &multipliers {
                scenarios.push(ScenarioDef {
                    id,
                    axis: Some(axis),
                    multiplier,
                    iterations,
                });
                id += 1;
            }
        }
    }
    Ok(ScenarioGrid {
        base,
        scenarios,
        axes: axes.to_vec(),
        multipliers,
        iteration_levels: iteration_levels.to_vec(),
    })
}

impl ScenarioGrid {
    pub fn scenarios(&self) -> &[ScenarioDef] {
        &self.scenarios
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn axes(&self) -> &[PerturbAxis] {
        &self.axes
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn iteration_levels(&self) -> &[usize] {
        &self.iteration_levels
    }

    pub fn base(&self) -> &ValuationSetup {
        &self.base
    }

    /// The perturbed setup for one scenario; an error marks the scenario
    /// domain-invalid.
    pub fn setup_for(&self, scenario: &ScenarioDef) -> Result<ValuationSetup> {
        let mut setup = self.base.clone();
        let Some(axis) = scenario.axis else {
            return Ok(setup);
        };
        let m = scenario.multiplier;
        match axis {
            PerturbAxis::AvailabilityDrift
            | PerturbAxis::AvailabilityStart
            | PerturbAxis::AvailabilityVol => {
                let mut specs = setup.system.specs().to_vec();
                for spec in specs
                    .iter_mut()
                    .filter(|s| s.kind == VariableKind::Availability)
                {
                    match axis {
                        PerturbAxis::AvailabilityDrift => spec.drift *= m,
                        PerturbAxis::AvailabilityStart => spec.start *= m,
                        PerturbAxis::AvailabilityVol => spec.vol *= m,
                        _ => unreachable!(),
                    }
                }
                let correlation = setup.system.correlation().to_vec();
                setup.system = CorrelatedSystem::new(specs, correlation)?;
            }
            PerturbAxis::InterestRate => {
                setup.discount.rate *= m;
                setup.discount.validate()?;
            }
            PerturbAxis::PayoffDown => {
                for k in setup.contract.payoff_down.iter_mut() {
                    *k *= m;
                }
                setup.contract.validate()?;
            }
            PerturbAxis::PayoffUp => {
                for k in setup.contract.payoff_up.iter_mut() {
                    *k *= m;
                }
                setup.contract.validate()?;
            }
            PerturbAxis::Expiration => {
                let tau = setup.grid.step();
                let horizon = setup.contract.horizon * m;
                let steps = (horizon / tau).round().max(1.0) as usize;
                setup.contract.horizon = steps as f64 * tau;
                setup.grid = TimeGrid::for_contract(setup.contract.horizon, steps)?;
                setup.contract.validate()?;
            }
        }
        Ok(setup)
    }
}

/// Execution options for [`run_grid`].
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub master_seed: u64,
    pub workers: usize,
    /// Stop after computing this many scenarios (resume later); None runs
    /// to completion.
    pub max_scenarios: Option<usize>,
}

impl RunOptions {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            workers: 0, // rayon default
            max_scenarios: None,
        }
    }
}

/// Outcome of one (scenario, structure) cell.
#[derive(Debug, Clone, PartialEq)]
pub enum RowOutcome {
    Value {
        estimate: f64,
        std_error: f64,
        seed: u64,
        /// Wall time of the scenario in this session; None when replayed
        /// from the checkpoint.
        wall_ms: Option<u64>,
    },
    /// The perturbation left the parameter domain.
    Invalid { reason: String },
}

/// One row of the result table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario_id: u32,
    pub axis: Option<PerturbAxis>,
    pub multiplier: f64,
    pub iterations: usize,
    pub structure: StructureKind,
    pub outcome: RowOutcome,
}

/// Result of a grid run (possibly partial under `max_scenarios`).
#[derive(Debug, Clone)]
pub struct GridRun {
    pub rows: Vec<ResultRow>,
    /// Scenarios actually computed in this session.
    pub computed_scenarios: usize,
    /// Records replayed from the checkpoint.
    pub reused_records: usize,
    /// Scenarios still pending when `max_scenarios` stopped the run.
    pub remaining_scenarios: usize,
}

/// Seed for one scenario.
pub fn scenario_seed(master_seed: u64, scenario_id: u32) -> u64 {
    stream_seed(master_seed, scenario_id as u64)
}

/// Run every scenario of the grid for every requested structure, appending
/// progress to `checkpoint_path` and replaying any progress already there.
pub fn run_grid(
    grid: &ScenarioGrid,
    structures: &[StructureKind],
    checkpoint_path: &Path,
    options: &RunOptions,
) -> Result<GridRun> {
    if structures.is_empty() {
        return Err(Error::invalid("run needs at least one structure"));
    }
    let records = load_checkpoint(checkpoint_path)?;
    let mut done: HashMap<(u32, StructureKind), CheckpointRecord> = HashMap::new();
    for record in records {
        if record.scenario_id as usize >= grid.len() {
            return Err(Error::CheckpointCorrupt {
                line: 0,
                reason: format!(
                    "record for scenario {} but the grid has {} scenarios",
                    record.scenario_id,
                    grid.len()
                ),
            });
        }
        let expected = scenario_seed(options.master_seed, record.scenario_id);
        if record.seed != expected {
            return Err(Error::CheckpointCorrupt {
                line: 0,
                reason: format!(
                    "scenario {} was recorded under seed {} but this run derives {expected}; \
                     wrong master seed or foreign checkpoint",
                    record.scenario_id, record.seed
                ),
            });
        }
        done.insert((record.scenario_id, record.structure), record);
    }
    let reused_records = done.len();

    // classify scenarios once; invalid ones are re-derived every run
    let mut invalid: HashMap<u32, String> = HashMap::new();
    let mut pending: Vec<&ScenarioDef> = Vec::new();
    for scenario in grid.scenarios() {
        match grid.setup_for(scenario) {
            Err(e) => {
                invalid.insert(scenario.id, e.to_string());
            }
            Ok(_) => {
                if structures
                    .iter()
                    .any(|&s| !done.contains_key(&(scenario.id, s)))
                {
                    pending.push(scenario);
                }
            }
        }
    }
    let total_pending = pending.len();
    if let Some(limit) = options.max_scenarios {
        pending.truncate(limit);
    }
    let computed_scenarios = pending.len();
    let remaining_scenarios = total_pending - computed_scenarios;

    let writer = Mutex::new(CheckpointWriter::append(checkpoint_path)?);
    let fresh: Mutex<Vec<(CheckpointRecord, u64)>> = Mutex::new(Vec::new());
    let run_one = |scenario: &ScenarioDef| -> Result<()> {
        let setup = grid
            .setup_for(scenario)
            .expect("pending scenarios validated above");
        let seed = scenario_seed(options.master_seed, scenario.id);
        let started = Instant::now();
        let bundle = setup.simulate(scenario.iterations, seed)?;
        let mut local = Vec::new();
        for &structure in structures {
            if done.contains_key(&(scenario.id, structure)) {
                continue;
            }
            let result = value_structure(
                structure,
                &bundle,
                None,
                &setup.contract,
                &setup.discount,
                &setup.options,
            )?;
            local.push(CheckpointRecord {
                scenario_id: scenario.id,
                structure,
                estimate: result.estimate,
                std_error: result.std_error,
                seed,
            });
        }
        let wall_ms = started.elapsed().as_millis() as u64;
        {
            let mut sink = writer.lock().expect("checkpoint writer poisoned");
            for record in &local {
                sink.write_record(record)?;
            }
        }
        let mut fresh = fresh.lock().expect("result sink poisoned");
        fresh.extend(local.into_iter().map(|r| (r, wall_ms)));
        Ok(())
    };

    let results: Vec<Result<()>> = if options.workers == 1 {
        pending.iter().map(|s| run_one(s)).collect()
    } else {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if options.workers > 0 {
            builder = builder.num_threads(options.workers);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            pending.par_iter().map(|s| run_one(s)).collect()
        })
    };
    results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut wall_by_key: HashMap<(u32, StructureKind), u64> = HashMap::new();
    for (record, wall_ms) in fresh.into_inner().expect("result sink poisoned") {
        wall_by_key.insert((record.scenario_id, record.structure), wall_ms);
        done.insert((record.scenario_id, record.structure), record);
    }

    let mut rows = Vec::new();
    for scenario in grid.scenarios() {
        for &structure in structures {
            let outcome = if let Some(reason) = invalid.get(&scenario.id) {
                RowOutcome::Invalid {
                    reason: reason.clone(),
                }
            } else if let Some(record) = done.get(&(scenario.id, structure)) {
                RowOutcome::Value {
                    estimate: record.estimate,
                    std_error: record.std_error,
                    seed: record.seed,
                    wall_ms: wall_by_key.get(&(scenario.id, structure)).copied(),
                }
            } else {
                continue; // not yet computed (partial run)
            };
            rows.push(ResultRow {
                scenario_id: scenario.id,
                axis: scenario.axis,
                multiplier: scenario.multiplier,
                iterations: scenario.iterations,
                structure,
                outcome,
            });
        }
    }
    Ok(GridRun {
        rows,
        computed_scenarios,
        reused_records,
        remaining_scenarios,
    })
}

/// Files produced by [`emit_report`].
#[derive(Debug, Clone)]
pub struct ReportSummary {
    pub result_files: Vec<std::path::PathBuf>,
    pub timing_file: std::path::PathBuf,
    pub summary_file: std::path::PathBuf,
    pub rows_written: usize,
}

/// Write one `results_<structure>.csv` per structure plus a human summary.
///
/// Result CSVs carry only run-deterministic columns, so an interrupted and
/// resumed run emits byte-identical files; wall times go to a separate
/// `timings.csv` diagnostic.
pub fn emit_report(
    run: &GridRun,
    grid: &ScenarioGrid,
    structures: &[StructureKind],
    out_dir: &Path,
) -> Result<ReportSummary> {
    if run.rows.is_empty() {
        return Err(Error::invalid("no rows to report"));
    }
    std::fs::create_dir_all(out_dir)?;

    // annualized rate needs the scenario's own notional and horizon
    let mut scenario_scale: HashMap<u32, Option<(f64, f64)>> = HashMap::new();
    for scenario in grid.scenarios() {
        let entry = grid
            .setup_for(scenario)
            .ok()
            .and_then(|s| s.notional().map(|n| (n, s.contract.horizon)));
        scenario_scale.insert(scenario.id, entry);
    }

    let mut result_files = Vec::new();
    let mut rows_written = 0usize;
    for &structure in structures {
        let path = out_dir.join(format!("results_{}.csv", structure.tag()));
        let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(
            out,
            "scenario_id,axis,multiplier,iterations,estimate,std_error,annualized_rate"
        )?;
        for row in run.rows.iter().filter(|r| r.structure == structure) {
            let axis = row.axis.map(|a| a.tag()).unwrap_or("base");
            match &row.outcome {
                RowOutcome::Value {
                    estimate,
                    std_error,
                    ..
                } => {
                    let rate = scenario_scale
                        .get(&row.scenario_id)
                        .copied()
                        .flatten()
                        .and_then(|(notional, horizon)| {
                            crate::payoff::annualized_rate(*estimate, 1.0, notional, horizon)
                        });
                    let rate = rate.map(|r| r.to_string()).unwrap_or_default();
                    writeln!(
                        out,
                        "{},{axis},{},{},{estimate},{std_error},{rate}",
                        row.scenario_id, row.multiplier, row.iterations
                    )?;
                }
                RowOutcome::Invalid { reason } => {
                    writeln!(
                        out,
                        "{},{axis},{},{},,,invalid: {}",
                        row.scenario_id,
                        row.multiplier,
                        row.iterations,
                        reason.replace(',', ";")
                    )?;
                }
            }
            rows_written += 1;
        }
        out.flush()?;
        result_files.push(path);
    }

    let timing_file = out_dir.join("timings.csv");
    {
        let mut out = std::io::BufWriter::new(std::fs::File::create(&timing_file)?);
        writeln!(out, "scenario_id,structure,wall_ms")?;
        for row in &run.rows {
            if let RowOutcome::Value {
                wall_ms: Some(ms), ..
            } = row.outcome
            {
                writeln!(out, "{},{},{ms}", row.scenario_id, row.structure)?;
            }
        }
        out.flush()?;
    }

    let summary_file = out_dir.join("summary.txt");
    {
        let mut out = std::io::BufWriter::new(std::fs::File::create(&summary_file)?);
        writeln!(
            out,
            "scenarios: {} (computed {}, reused {}, remaining {})",
            grid.len(),
            run.computed_scenarios,
            run.reused_records,
            run.remaining_scenarios
        )?;
        for &structure in structures {
            writeln!(out, "\n[{structure}]")?;
            let base: Vec<&ResultRow> = run
                .rows
                .iter()
                .filter(|r| r.structure == structure && r.axis.is_none())
                .collect();
            for row in &base {
                if let RowOutcome::Value { estimate, .. } = row.outcome {
                    writeln!(
                        out,
                        "  base iterations={} estimate={estimate}",
                        row.iterations
                    )?;
                }
            }
            for &axis in grid.axes() {
                let mut min: Option<(f64, u32)> = None;
                let mut max: Option<(f64, u32)> = None;
                for row in run
                    .rows
                    .iter()
                    .filter(|r| r.structure == structure && r.axis == Some(axis))
                {
                    if let RowOutcome::Value { estimate, .. } = row.outcome {
                        if min.is_none_or(|(v, _)| estimate < v) {
                            min = Some((estimate, row.scenario_id));
                        }
                        if max.is_none_or(|(v, _)| estimate > v) {
                            max = Some((estimate, row.scenario_id));
                        }
                    }
                }
                if let (Some((lo, lo_id)), Some((hi, hi_id))) = (min, max) {
                    writeln!(
                        out,
                        "  {axis}: min={lo} (scenario {lo_id}) max={hi} (scenario {hi_id})"
                    )?;
                }
            }
        }
        out.flush()?;
    }

    Ok(ReportSummary {
        result_files,
        timing_file,
        summary_file,
        rows_written,
    })
}
