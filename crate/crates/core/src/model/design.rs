//! Test structure: per-occasion Q-matrices and anchor-item groups.

use super::pattern::PatternSpace;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Binary item × attribute matrix for one occasion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QMatrix {
    rows: Vec<Vec<u8>>,
}

impl QMatrix {
    /// Validates entries and row sums. Errors name the offending row/column (1-based).
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Design("Q-matrix has no items".into()));
        }
        let width = rows[0].len();
        if width == 0 {
            return Err(Error::Design("Q-matrix has no attributes".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Design(format!(
                    "Q-matrix row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    width
                )));
            }
            if let Some(c) = row.iter().position(|&v| v > 1) {
                return Err(Error::Design(format!(
                    "Q-matrix row {}, column {} is {}; entries must be 0 or 1",
                    i + 1,
                    c + 1,
                    row[c]
                )));
            }
            if row.iter().all(|&v| v == 0) {
                return Err(Error::Design(format!("Q-matrix row {} requires no attribute", i + 1)));
            }
        }
        Ok(QMatrix { rows })
    }

    pub fn items(&self) -> usize {
        self.rows.len()
    }

    pub fn attributes(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, item: usize) -> &[u8] {
        &self.rows[item]
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    /// Required attributes of `item` as a bit mask (bit k = attribute k).
    pub fn mask(&self, item: usize) -> u32 {
        self.rows[item]
            .iter()
            .enumerate()
            .fold(0u32, |m, (k, &v)| m | ((v as u32) << k))
    }
}

/// Zero-based reference to one administration: item `item` on occasion `occasion`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ItemRef {
    pub occasion: usize,
    pub item: usize,
}

/// One physical anchor item administered on several occasions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorGroup {
    /// User-facing identifier (1-based in files).
    pub id: usize,
    /// Administrations, sorted by occasion.
    pub members: Vec<ItemRef>,
}

/// One column of the longitudinal response matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Administration {
    pub occasion: usize,
    pub within: usize,
    /// Required attributes on this occasion.
    pub mask: u32,
    /// Index into the unique-item parameter vectors.
    pub unique: usize,
    pub group: Option<usize>,
}

/// Validated longitudinal design.
#[derive(Debug, Clone, PartialEq)]
pub struct LongitudinalDesign {
    attributes: usize,
    q: Vec<QMatrix>,
    groups: Vec<AnchorGroup>,
    offsets: Vec<usize>,
    administrations: Vec<Administration>,
    unique_admins: Vec<Vec<usize>>,
    unique_group: Vec<Option<usize>>,
    group_unique: Vec<usize>,
}

impl LongitudinalDesign {
    pub fn new(q: Vec<QMatrix>, mut groups: Vec<AnchorGroup>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::Design("design needs at least one occasion".into()));
        }
        let attributes = q[0].attributes();
        for (t, block) in q.iter().enumerate() {
            if block.attributes() != attributes {
                return Err(Error::Design(format!(
                    "occasion {} Q-matrix has {} attributes, occasion 1 has {}",
                    t + 1,
                    block.attributes(),
                    attributes
                )));
            }
        }
        let mut offsets = Vec::with_capacity(q.len() + 1);
        offsets.push(0);
        for block in &q {
            offsets.push(offsets.last().unwrap() + block.items());
        }
        let total = *offsets.last().unwrap();

        groups.sort_by_key(|g| g.id);
        let mut owner: Vec<Option<usize>> = vec![None; total];
        for w in groups.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::Design(format!("anchor group id {} is used twice", w[0].id)));
            }
        }
        for group in groups.iter_mut() {
            group.members.sort();
            if group.members.len() < 2 {
                return Err(Error::Design(format!(
                    "anchor group {} needs at least two administrations",
                    group.id
                )));
            }
            for w in group.members.windows(2) {
                if w[0].occasion == w[1].occasion {
                    return Err(Error::Design(format!(
                        "anchor group {} has two items on occasion {}",
                        group.id,
                        w[0].occasion + 1
                    )));
                }
            }
            let first = group.members[0];
            for m in &group.members {
                if m.occasion >= q.len() || m.item >= q[m.occasion].items() {
                    return Err(Error::Design(format!(
                        "anchor group {} references occasion {} item {}, which does not exist",
                        group.id,
                        m.occasion + 1,
                        m.item + 1
                    )));
                }
                if q[m.occasion].row(m.item) != q[first.occasion].row(first.item) {
                    return Err(Error::Design(format!(
                        "anchor group {}: Q row of occasion {} item {} differs from occasion {} item {}",
                        group.id,
                        m.occasion + 1,
                        m.item + 1,
                        first.occasion + 1,
                        first.item + 1
                    )));
                }
                let global = offsets[m.occasion] + m.item;
                if let Some(prev) = owner[global] {
                    return Err(Error::Design(format!(
                        "occasion {} item {} belongs to anchor groups {} and {}",
                        m.occasion + 1,
                        m.item + 1,
                        prev,
                        group.id
                    )));
                }
                owner[global] = Some(group.id);
            }
        }
        let group_of_id = |id: usize| groups.iter().position(|g| g.id == id);

        let mut administrations = Vec::with_capacity(total);
        let mut unique_admins: Vec<Vec<usize>> = Vec::new();
        let mut unique_group = Vec::new();
        let mut group_unique = vec![usize::MAX; groups.len()];
        for (t, block) in q.iter().enumerate() {
            for i in 0..block.items() {
                let global = offsets[t] + i;
                let group = owner[global].and_then(group_of_id);
                let unique = match group {
                    Some(g) if group_unique[g] != usize::MAX => group_unique[g],
                    _ => {
                        unique_admins.push(Vec::new());
                        unique_group.push(group);
                        let u = unique_admins.len() - 1;
                        if let Some(g) = group {
                            group_unique[g] = u;
                        }
                        u
                    }
                };
                unique_admins[unique].push(global);
                administrations.push(Administration {
                    occasion: t,
                    within: i,
                    mask: block.mask(i),
                    unique,
                    group,
                });
            }
        }
        Ok(LongitudinalDesign {
            attributes,
            q,
            groups,
            offsets,
            administrations,
            unique_admins,
            unique_group,
            group_unique,
        })
    }

    pub fn occasions(&self) -> usize {
        self.q.len()
    }

    pub fn attributes(&self) -> usize {
        self.attributes
    }

    pub fn q_matrices(&self) -> &[QMatrix] {
        &self.q
    }

    pub fn items_per_occasion(&self) -> Vec<usize> {
        self.q.iter().map(QMatrix::items).collect()
    }

    /// Σ I_t, the width of the longitudinal response matrix.
    pub fn total_items(&self) -> usize {
        self.administrations.len()
    }

    pub fn anchor_groups(&self) -> &[AnchorGroup] {
        &self.groups
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn unique_item_count(&self) -> usize {
        self.unique_admins.len()
    }

    pub fn administrations(&self) -> &[Administration] {
        &self.administrations
    }

    /// Global (zero-based) columns administering unique item `u`.
    pub fn unique_administrations(&self, u: usize) -> &[usize] {
        &self.unique_admins[u]
    }

    pub fn unique_group(&self, u: usize) -> Option<usize> {
        self.unique_group[u]
    }

    /// Unique-item index of anchor group `g` (position in [`Self::anchor_groups`]).
    pub fn group_unique(&self, g: usize) -> usize {
        self.group_unique[g]
    }

    /// Global zero-based columns of anchor group `g`, in occasion order.
    pub fn group_columns(&self, g: usize) -> Vec<usize> {
        self.groups[g]
            .members
            .iter()
            .map(|m| self.offsets[m.occasion] + m.item)
            .collect()
    }

    pub fn global_index(&self, r: ItemRef) -> usize {
        self.offsets[r.occasion] + r.item
    }

    /// First global column of occasion `t`.
    pub fn occasion_offset(&self, t: usize) -> usize {
        self.offsets[t]
    }

    pub fn pattern_space(&self, cap_bits: usize) -> Result<PatternSpace> {
        PatternSpace::with_cap(self.occasions(), self.attributes, cap_bits)
    }

    /// Block-diagonal `(Σ I_t) × (T·K)` longitudinal Q-matrix.
    pub fn longitudinal_q(&self) -> Vec<Vec<u8>> {
        let width = self.occasions() * self.attributes;
        let mut out = Vec::with_capacity(self.total_items());
        for (t, block) in self.q.iter().enumerate() {
            for row in block.rows() {
                let mut full = vec![0u8; width];
                full[t * self.attributes..(t + 1) * self.attributes].copy_from_slice(row);
                out.push(full);
            }
        }
        out
    }
}

/// Assemble the longitudinal Q-matrix from raw blocks, checking each block
/// against its declared `(I_t, K)` shape.
pub fn build_longitudinal_q(
    blocks: &[Vec<Vec<u8>>],
    items_per_occasion: &[usize],
    attributes: usize,
) -> Result<Vec<Vec<u8>>> {
    if blocks.len() != items_per_occasion.len() {
        return Err(Error::Design(format!(
            "{} Q blocks for {} declared occasions",
            blocks.len(),
            items_per_occasion.len()
        )));
    }
    let width = blocks.len() * attributes;
    let mut out = Vec::new();
    for (t, (block, &declared)) in blocks.iter().zip(items_per_occasion).enumerate() {
        if block.len() != declared {
            return Err(Error::Design(format!(
                "occasion {} Q block has {} rows, declared {}",
                t + 1,
                block.len(),
                declared
            )));
        }
        for (i, row) in block.iter().enumerate() {
            if row.len() != attributes {
                return Err(Error::Design(format!(
                    "occasion {} Q block row {} has {} columns, declared {}",
                    t + 1,
                    i + 1,
                    row.len(),
                    attributes
                )));
            }
            let mut full = vec![0u8; width];
            full[t * attributes..(t + 1) * attributes].copy_from_slice(row);
            out.push(full);
        }
    }
    Ok(out)
}

/// Global 1-based index of 1-based item `within` on 1-based occasion `occasion`.
pub fn recode_item_index(occasion: usize, within: usize, items_per_occasion: &[usize]) -> Result<usize> {
    if occasion == 0 || occasion > items_per_occasion.len() {
        return Err(Error::Index(format!(
            "occasion {occasion} outside 1..={}",
            items_per_occasion.len()
        )));
    }
    let count = items_per_occasion[occasion - 1];
    if within == 0 || within > count {
        return Err(Error::Index(format!(
            "item {within} outside 1..={count} on occasion {occasion}"
        )));
    }
    Ok(items_per_occasion[..occasion - 1].iter().sum::<usize>() + within)
}
