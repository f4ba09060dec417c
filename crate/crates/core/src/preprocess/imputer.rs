use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::table::{Cell, Table};

/// Most frequent category per feature column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputerState {
    pub modes: BTreeMap<String, String>,
}

/// Mode of each column; ties go to the lexicographically smallest category.
pub fn fit_imputer(table: &Table, feature_columns: &[&str]) -> Result<ImputerState, PreprocessError> {
    let mut modes = BTreeMap::new();
    for &name in feature_columns {
        let cells = table
            .column(name)
            .ok_or_else(|| PreprocessError::UnknownColumn(name.to_string()))?;
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for value in cells.iter().filter_map(Cell::as_str) {
            *counts.entry(value).or_default() += 1;
        }
        // BTreeMap iterates in ascending order, so keeping the first maximum
        // resolves ties lexicographically.
        let mut best: Option<(&str, usize)> = None;
        for (value, count) in counts {
            if best.is_none_or(|(_, c)| count > c) {
                best = Some((value, count));
            }
        }
        let (mode, _) = best.ok_or_else(|| PreprocessError::AllMissingColumn(name.to_string()))?;
        modes.insert(name.to_string(), mode.to_string());
    }
    Ok(ImputerState { modes })
}

/// Replaces missing cells of every fitted column with its mode.
pub fn apply_imputer(state: &ImputerState, table: &Table) -> Result<Table, PreprocessError> {
    let mut out = table.clone();
    for (name, mode) in &state.modes {
        let column = out
            .column_mut(name)
            .ok_or_else(|| PreprocessError::UnknownColumn(name.clone()))?;
        for cell in column.iter_mut().filter(|c| c.is_missing()) {
            *cell = Cell::Value(mode.clone());
        }
    }
    Ok(out)
}
