use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::table::Cell;

/// Bijection between the categories of one column and `0..k`.
///
/// Codes follow lexicographic category order, so the encoding does not depend
/// on row order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEncoder {
    /// `categories[code]` is the category text; sorted and unique.
    categories: Vec<String>,
}

impl LabelEncoder {
    pub fn fit(column: &[Cell]) -> Result<Self, PreprocessError> {
        let mut set = BTreeSet::new();
        for cell in column {
            match cell {
                Cell::Value(v) => {
                    set.insert(v.clone());
                }
                Cell::Missing => return Err(PreprocessError::MissingValue),
            }
        }
        Ok(Self {
            categories: set.into_iter().collect(),
        })
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn code_of(&self, category: &str) -> Option<u32> {
        self.categories
            .binary_search_by(|c| c.as_str().cmp(category))
            .ok()
            .map(|i| i as u32)
    }

    pub fn category_of(&self, code: u32) -> Option<&str> {
        self.categories.get(code as usize).map(String::as_str)
    }

    pub fn encode(&self, column: &[Cell]) -> Result<Vec<u32>, PreprocessError> {
        column
            .iter()
            .map(|cell| match cell {
                Cell::Value(v) => self
                    .code_of(v)
                    .ok_or_else(|| PreprocessError::UnseenCategory(v.clone())),
                Cell::Missing => Err(PreprocessError::MissingValue),
            })
            .collect()
    }
}
