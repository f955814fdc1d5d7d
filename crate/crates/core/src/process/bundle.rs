//! Realized path storage.

use crate::error::{Error, Result};
use crate::process::{TimeGrid, VariableKind};
use std::io::Write;

/// Simulated trajectories, indexed \[path\]\[variable\]\[point\].
///
/// Variables repeat per security: with three securities each carrying an
/// availability and a price series, `labels` holds six entries and the
/// i-th security's availability is the i-th label of that kind.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    grid: TimeGrid,
    labels: Vec<VariableKind>,
    n_paths: usize,
    seed: u64,
    values: Vec<f64>,
}

impl PathBundle {
    /// Wrap pre-computed values. `values` is row-major over
    /// (path, variable, point) and must have exactly
    /// `n_paths * labels.len() * grid.n_points()` entries.
    pub fn from_values(
        grid: TimeGrid,
        labels: Vec<VariableKind>,
        n_paths: usize,
        seed: u64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("bundle needs at least one variable"));
        }
        if n_paths == 0 {
            return Err(Error::invalid("bundle needs at least one path"));
        }
        let expect = n_paths * labels.len() * grid.n_points();
        if values.len() != expect {
            return Err(Error::invalid(format!(
                "bundle expects {expect} values ({n_paths} paths x {} variables x {} points), got {}",
                labels.len(),
                grid.n_points(),
                values.len()
            )));
        }
        Ok(Self {
            grid,
            labels,
            n_paths,
            seed,
            values,
        })
    }

    pub(crate) fn zeroed(grid: TimeGrid, labels: Vec<VariableKind>, n_paths: usize, seed: u64) -> Self {
        let len = n_paths * labels.len() * grid.n_points();
        Self {
            grid,
            labels,
            n_paths,
            seed,
            values: vec![0.0; len],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn labels(&self) -> &[VariableKind] {
        &self.labels
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_vars(&self) -> usize {
        self.labels.len()
    }

    pub fn n_points(&self) -> usize {
        self.grid.n_points()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// All values of one variable along one path.
    pub fn series(&self, path: usize, var: usize) -> &[f64] {
        let stride = self.n_points();
        let base = (path * self.n_vars() + var) * stride;
        &self.values[base..base + stride]
    }

    /// Mutable per-path blocks, for parallel fills of disjoint paths.
    pub(crate) fn path_blocks_mut(&mut self) -> rayon::slice::ChunksMut<'_, f64> {
        use rayon::prelude::*;
        let block = self.n_vars() * self.n_points();
        self.values.par_chunks_mut(block)
    }

    pub fn value(&self, path: usize, var: usize, point: usize) -> f64 {
        self.series(path, var)[point]
    }

    /// Indices of all variables of `kind`, in label order.
    pub fn kind_indices(&self, kind: VariableKind) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &k)| k == kind)
            .map(|(i, _)| i)
            .collect()
    }

    /// Index of the `ordinal`-th variable of `kind` (the series belonging
    /// to security `ordinal`).
    pub fn nth_of_kind(&self, kind: VariableKind, ordinal: usize) -> Result<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &k)| k == kind)
            .map(|(i, _)| i)
            .nth(ordinal)
            .ok_or(Error::MissingSeries {
                kind,
                security: ordinal,
            })
    }

    /// Raw value storage, row-major over (path, variable, point).
    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    /// Column label used in CSV export: kind tag plus per-kind ordinal.
    pub fn variable_name(&self, var: usize) -> String {
        let kind = self.labels[var];
        let ordinal = self.labels[..var].iter().filter(|&&k| k == kind).count();
        format!("{}_{}", kind.tag(), ordinal)
    }

    /// Export as `path,variable,step,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "path,variable,step,value")?;
        let names: Vec<String> = (0..self.n_vars()).map(|v| self.variable_name(v)).collect();
        for path in 0..self.n_paths {
            for (var, name) in names.iter().enumerate() {
                let series = self.series(path, var);
                for (step, value) in series.iter().enumerate() {
                    writeln!(out, "{path},{name},{step},{value}")?;
                }
            }
        }
        Ok(())
    }
}
