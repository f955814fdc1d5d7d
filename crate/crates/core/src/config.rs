//! Structured run configuration.
//!
//! One JSON document describes the processes, contract, discounting,
//! valuation settings and optional scenario / inventory / historical
//! sections. Every CLI subcommand reads the same schema and uses the parts
//! it needs.

use crate::closed_form::BinaryPutInputs;
use crate::error::{Error, Result};
use crate::inventory::{CostSchedule, InventoryParams, JumpSpec, OrderQuantity};
use crate::payoff::{
    BorrowRateForm, CounterWeighting, DiscountConfig, DiscountMode, EvalOptions, StructureKind,
    TermLoanContract, ValuationResult,
};
use crate::process::{
    simulate_gbm_paths, CorrelatedSystem, GbmSpec, LocateSpec, ParameterRanges, PathBundle,
    TimeGrid, VariableKind,
};
use serde::{Deserialize, Serialize};
use std::path::Path;

fn default_steps_per_year() -> usize {
    252
}

fn default_paths() -> usize {
    10_000
}

fn default_one() -> f64 {
    1.0
}

/// Contract section of the config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractConfig {
    /// Guaranteed quantity per security; a single number is broadcast.
    pub quantity: serde_json::Value,
    #[serde(default = "default_one")]
    pub payoff_down: f64,
    #[serde(default)]
    pub payoff_up: f64,
    #[serde(default)]
    pub forward_start: usize,
    #[serde(default)]
    pub exclusive_fee: f64,
    #[serde(default)]
    pub spread: f64,
}

/// Discount section.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiscountSection {
    #[serde(default)]
    pub rate: f64,
    pub mode: DiscountMode,
}

impl Default for DiscountSection {
    fn default() -> Self {
        Self {
            rate: 0.0,
            mode: DiscountMode::None,
        }
    }
}

/// Valuation section.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValuationSection {
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub structures: Vec<StructureKind>,
    #[serde(default = "ValuationSection::default_borrow_form")]
    pub borrow_rate_form: BorrowRateForm,
    #[serde(default = "ValuationSection::default_weighting")]
    pub counter_weighting: CounterWeighting,
}

impl ValuationSection {
    fn default_borrow_form() -> BorrowRateForm {
        BorrowRateForm::Incremental
    }

    fn default_weighting() -> CounterWeighting {
        CounterWeighting::Normalized
    }
}

impl Default for ValuationSection {
    fn default() -> Self {
        Self {
            paths: default_paths(),
            structures: Vec::new(),
            borrow_rate_form: Self::default_borrow_form(),
            counter_weighting: Self::default_weighting(),
        }
    }
}

/// Scenario grid section.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSection {
    /// Perturbed variables; see [`crate::scenario::PerturbAxis`] tags.
    pub axes: Vec<String>,
    /// Number of up and of down 10% steps (5 gives 0.5x .. 1.5x).
    #[serde(default = "ScenarioSection::default_steps")]
    pub steps: usize,
    /// Iteration (path-count) levels to repeat each scenario under.
    pub iterations: Vec<usize>,
}

impl ScenarioSection {
    fn default_steps() -> usize {
        5
    }
}

/// Inventory section.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InventorySection {
    pub unit_cost: f64,
    pub costs: CostSchedule,
    pub order: OrderQuantity,
    pub threshold: f64,
    #[serde(default = "default_one")]
    pub payoff_down: f64,
    #[serde(default)]
    pub payoff_up: f64,
    /// Demand process (kind must be `demand`).
    pub demand: GbmSpec,
    #[serde(default)]
    pub jumps: Option<JumpSpec>,
}

/// Historical-valuation section.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoricalSection {
    /// CSV files (`time,value`) per variable kind.
    pub series: Vec<HistoricalSeriesRef>,
    pub partitions: usize,
    #[serde(default)]
    pub overlap: f64,
    pub structure: StructureKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoricalSeriesRef {
    pub kind: VariableKind,
    pub path: String,
    /// Contract-inception value the series is rescaled to.
    pub target_start: f64,
}

/// Closed-form section.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClosedFormSection {
    #[serde(flatten)]
    pub inputs: BinaryPutInputs,
    /// Multipliers for the sensitivity sweep; empty means single value.
    #[serde(default)]
    pub multipliers: Vec<f64>,
}

/// Top-level run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub horizon_years: f64,
    #[serde(default = "default_steps_per_year")]
    pub steps_per_year: usize,
    #[serde(default)]
    pub processes: Vec<GbmSpec>,
    /// Row-major correlation matrix; identity when omitted.
    #[serde(default)]
    pub correlation: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub locate: Option<LocateSpec>,
    #[serde(default)]
    pub contract: Option<ContractConfig>,
    #[serde(default)]
    pub discount: DiscountSection,
    #[serde(default)]
    pub valuation: ValuationSection,
    #[serde(default)]
    pub parameter_ranges: Option<ParameterRanges>,
    #[serde(default)]
    pub n_securities: Option<usize>,
    #[serde(default)]
    pub scenario: Option<ScenarioSection>,
    #[serde(default)]
    pub inventory: Option<InventorySection>,
    #[serde(default)]
    pub historical: Option<HistoricalSection>,
    #[serde(default)]
    pub closed_form: Option<ClosedFormSection>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Assemble the simulation system from the process list.
    pub fn system(&self) -> Result<CorrelatedSystem> {
        if self.processes.is_empty() {
            return Err(Error::Config("config has no processes".into()));
        }
        match &self.correlation {
            Some(rows) => CorrelatedSystem::from_rows(self.processes.clone(), rows),
            None => CorrelatedSystem::independent(self.processes.clone()),
        }
    }

    /// Simulation grid: the contract horizon plus one terminal step, so
    /// payoffs that unwind one period after expiry have their prices.
    pub fn simulation_grid(&self) -> Result<TimeGrid> {
        let steps = (self.horizon_years * self.steps_per_year as f64).round() as usize;
        TimeGrid::for_contract(self.horizon_years, steps.max(1))
    }

    /// Grid covering exactly the horizon; inventory payoffs and breach-only
    /// valuations need no terminal step.
    pub fn horizon_grid(&self) -> Result<TimeGrid> {
        let steps = (self.horizon_years * self.steps_per_year as f64).round() as usize;
        TimeGrid::new(self.horizon_years, steps.max(1))
    }

    /// Assemble the term-loan contract, broadcasting scalars per security.
    pub fn contract(&self) -> Result<TermLoanContract> {
        let section = self
            .contract
            .as_ref()
            .ok_or_else(|| Error::Config("config has no contract section".into()))?;
        let quantities: Vec<f64> = match &section.quantity {
            serde_json::Value::Number(n) => {
                vec![n.as_f64().ok_or_else(|| Error::Config("bad quantity".into()))?]
            }
            serde_json::Value::Array(items) => items
                .iter()
                .map(|v| {
                    v.as_f64()
                        .ok_or_else(|| Error::Config("bad quantity entry".into()))
                })
                .collect::<Result<_>>()?,
            _ => return Err(Error::Config("quantity must be a number or array".into())),
        };
        let n = quantities.len();
        let contract = TermLoanContract {
            quantities,
            horizon: self.horizon_years,
            payoff_down: vec![section.payoff_down; n],
            payoff_up: vec![section.payoff_up; n],
            forward_start: section.forward_start,
            exclusive_fee: section.exclusive_fee,
            spread: section.spread,
        };
        contract.validate()?;
        Ok(contract)
    }

    pub fn discount(&self) -> Result<DiscountConfig> {
        let d = DiscountConfig {
            rate: self.discount.rate,
            mode: self.discount.mode,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            borrow_form: self.valuation.borrow_rate_form,
            counter_weighting: self.valuation.counter_weighting,
        }
    }

    pub fn inventory_params(&self) -> Result<Option<InventoryParams>> {
        match &self.inventory {
            None => Ok(None),
            Some(section) => {
                let params = InventoryParams {
                    unit_cost: section.unit_cost,
                    costs: section.costs.clone(),
                    order: section.order.clone(),
                    threshold: section.threshold,
                    payoff_down: section.payoff_down,
                    payoff_up: section.payoff_up,
                };
                params.validate()?;
                Ok(Some(params))
            }
        }
    }

    /// Full setup for valuation runs.
    pub fn setup(&self) -> Result<ValuationSetup> {
        Ok(ValuationSetup {
            system: self.system()?,
            grid: self.simulation_grid()?,
            contract: self.contract()?,
            discount: self.discount()?,
            options: self.eval_options(),
            paths: self.valuation.paths,
        })
    }
}

/// Everything needed to simulate and value one configuration.
#[derive(Debug, Clone)]
pub struct ValuationSetup {
    pub system: CorrelatedSystem,
    pub grid: TimeGrid,
    pub contract: TermLoanContract,
    pub discount: DiscountConfig,
    pub options: EvalOptions,
    pub paths: usize,
}

impl ValuationSetup {
    pub fn simulate(&self, n_paths: usize, seed: u64) -> Result<PathBundle> {
        simulate_gbm_paths(&self.system, &self.grid, n_paths, seed)
    }

    /// Simulate once and value every requested structure on the bundle.
    pub fn value_structures(
        &self,
        structures: &[StructureKind],
        n_paths: usize,
        seed: u64,
    ) -> Result<Vec<ValuationResult>> {
        let bundle = self.simulate(n_paths, seed)?;
        structures
            .iter()
            .map(|&s| {
                crate::payoff::value_structure(
                    s,
                    &bundle,
                    None,
                    &self.contract,
                    &self.discount,
                    &self.options,
                )
            })
            .collect()
    }

    /// Notional H * S0 from the configured price starts, when present.
    pub fn notional(&self) -> Option<f64> {
        let prices: Vec<&GbmSpec> = self
            .system
            .specs()
            .iter()
            .filter(|s| s.kind == VariableKind::Price)
            .collect();
        if prices.len() < self.contract.n_securities() {
            return None;
        }
        Some(
            self.contract
                .quantities
                .iter()
                .zip(prices)
                .map(|(h, p)| h * p.start)
                .sum(),
        )
    }
}
