//! Binary longitudinal response data with a missing marker.

use crate::error::{Error, Result};

/// Cell value for a missing response.
pub const MISSING: u8 = u8::MAX;

/// Persons × recoded items; cells are 0, 1 or [`MISSING`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseMatrix {
    ids: Vec<String>,
    items: usize,
    cells: Vec<u8>,
}

impl ResponseMatrix {
    pub fn new(ids: Vec<String>, items: usize, cells: Vec<u8>) -> Result<Self> {
        if cells.len() != ids.len() * items {
            return Err(Error::Data(format!(
                "{} cells for {} persons × {} items",
                cells.len(),
                ids.len(),
                items
            )));
        }
        if let Some(pos) = cells.iter().position(|&c| c > 1 && c != MISSING) {
            return Err(Error::Data(format!(
                "person {} item {} has value {}",
                pos / items.max(1) + 1,
                pos % items.max(1) + 1,
                cells[pos]
            )));
        }
        Ok(ResponseMatrix { ids, items, cells })
    }

    /// Matrix with ids `1..=N`.
    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self> {
        let items = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().position(|r| r.len() != items) {
            return Err(Error::Data(format!("row {} has a different width", r + 1)));
        }
        let ids = (1..=rows.len()).map(|i| i.to_string()).collect();
        Self::new(ids, items, rows.concat())
    }

    pub fn persons(&self) -> usize {
        self.ids.len()
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    #[inline]
    pub fn row(&self, person: usize) -> &[u8] {
        &self.cells[person * self.items..(person + 1) * self.items]
    }

    #[inline]
    pub fn get(&self, person: usize, item: usize) -> Option<bool> {
        match self.cells[person * self.items + item] {
            MISSING => None,
            v => Some(v == 1),
        }
    }

    /// Copy with persons reordered so that row `i` is old row `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let ids = order.iter().map(|&p| self.ids[p].clone()).collect();
        let cells = order.iter().flat_map(|&p| self.row(p).iter().copied()).collect();
        ResponseMatrix {
            ids,
            items: self.items,
            cells,
        }
    }

    /// Copy restricted to the given persons, in the given order.
    pub fn subset(&self, persons: &[usize]) -> Self {
        self.permuted(persons)
    }
}
